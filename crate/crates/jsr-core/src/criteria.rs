//! Finiteness detectors and the certification pipeline.
//!
//! Each detector matches one family shape — all members symmetric, a pair
//! differing only in off-diagonal signs, a shared off-diagonal ray, and so
//! on — for which the joint spectral radius is attained by a finite word.
//! A match yields a [`Certificate`] naming the criterion, the value, and a
//! realizing word; no match is `Ok(None)`, which means "this detector does
//! not apply" and never "finiteness fails". Detectors implement the
//! [`Criterion`] trait and are collected in a [`CriterionRegistry`], so the
//! standard battery runs in a fixed order and individual detectors can be
//! selected by name at runtime.
//!
//! [`certify`] runs the whole battery and then re-derives an enclosing
//! interval for the value of every collected certificate by enumeration;
//! a certificate that escapes the interval is reported as a hard error
//! rather than silently returned.

use std::collections::BTreeMap;

use crate::bounds::{self, BoundsReport};
use crate::config::{Config, RayRoles};
use crate::eigen::{operator_norm, spectral_radius, symmetric_eigenvalues};
use crate::error::{Error, Result};
use crate::matrix::{approx_equal, Matrix};
use crate::words::{all_words, evaluate, MatrixSet, Word};

/// Relative agreement required between a certificate's value and the root
/// of the spectral radius of the product named by its word.
pub const VALUE_CONSISTENCY_REL: f64 = 1e-9;

/// A second singular value below this fraction of the first counts as rank
/// one.
const RANK_ONE_RATIO: f64 = 1e-10;

/// Identifies the criterion behind a certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CriterionKind {
    /// Every member equals its own transpose.
    Symmetric,
    /// Every member commutes with its own transpose.
    Normal,
    /// The transpose of every member is again a member.
    TransposeClosed,
    /// A pair of 2x2 matrices with entries restricted to 0 and +-1.
    SignPair,
    /// A pair of 2x2 matrices whose determinants are both negative.
    NegativeDeterminantPair,
    /// A 2x2 pair conjugate to each other by the coordinate swap.
    SwapConjugatePair,
    /// A 2x2 pair differing only in the sign of the off-diagonal entries.
    OffDiagonalFlipPair,
    /// A pair in which one member has rank one.
    RankOnePair,
    /// 2x2 members sharing one off-diagonal ray, plus an optional
    /// norm-dominated companion.
    OffDiagRayFamily,
    /// A diagonal member next to one with a nonnegative off-diagonal product.
    DiagonalPair,
    /// A diagonal member next to an antidiagonal member.
    DiagAntidiagPair,
    /// A norm-optimal word whose Gram product is itself a member product.
    GramOptimalWord,
    /// Rational switching frequency in the triangular two-parameter model.
    SwitchingFrequency,
}

impl CriterionKind {
    /// Stable kebab-case identifier used by registries and reports.
    pub fn name(self) -> &'static str {
        match self {
            CriterionKind::Symmetric => "symmetric",
            CriterionKind::Normal => "normal",
            CriterionKind::TransposeClosed => "transpose-closed",
            CriterionKind::SignPair => "sign-pair",
            CriterionKind::NegativeDeterminantPair => "negative-determinant-pair",
            CriterionKind::SwapConjugatePair => "swap-conjugate-pair",
            CriterionKind::OffDiagonalFlipPair => "offdiagonal-flip-pair",
            CriterionKind::RankOnePair => "rank-one-pair",
            CriterionKind::OffDiagRayFamily => "offdiag-ray-family",
            CriterionKind::DiagonalPair => "diagonal-pair",
            CriterionKind::DiagAntidiagPair => "diag-antidiag-pair",
            CriterionKind::GramOptimalWord => "gram-optimal-word",
            CriterionKind::SwitchingFrequency => "switching-frequency",
        }
    }
}

/// A finiteness certificate: which criterion fired, the claimed joint
/// spectral radius, and enough material to re-check the claim from the set
/// alone.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    /// The criterion that produced this certificate.
    pub criterion: CriterionKind,
    /// Claimed joint spectral radius of the set.
    pub value: f64,
    /// Realizing word, when the criterion supplies one: the spectral radius
    /// of its product, taken to the root of the word length, equals `value`
    /// within [`VALUE_CONSISTENCY_REL`].
    pub word: Option<Word>,
    /// Labelled matrices recorded for audit.
    pub witness: Vec<(String, Matrix)>,
    /// Every tolerance consulted while building the certificate.
    pub tolerances: BTreeMap<&'static str, f64>,
    /// Free-form remarks: derivations, role assignments, residual gaps.
    pub notes: Vec<String>,
}

impl Certificate {
    /// An empty certificate shell for `criterion` claiming `value`.
    pub fn new(criterion: CriterionKind, value: f64) -> Self {
        Certificate {
            criterion,
            value,
            word: None,
            witness: Vec::new(),
            tolerances: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    /// Registry name of the producing criterion.
    pub fn name(&self) -> &'static str {
        self.criterion.name()
    }
}

/// Outcome of the absolute-stability decision.
#[derive(Debug, Clone, PartialEq)]
pub enum StabilityVerdict {
    /// The family matched a criterion that decides stability exactly.
    Decided {
        /// Whether every infinite product of members tends to zero.
        stable: bool,
        /// The criterion the decision rests on.
        reason: CriterionKind,
        /// Spectral radii of the decisive members, in set order.
        spectral_radii: Vec<f64>,
        /// Distance from the largest spectral radius to one; negative when
        /// the family is unstable.
        margin: f64,
        /// 1-based index of the member with the largest spectral radius.
        witness: usize,
    },
    /// No implemented criterion covers the family.
    Undecidable,
}

/// A named finiteness detector.
///
/// Implementations are stateless: `check` never mutates the set, may run
/// concurrently, and reports a non-matching family as `Ok(None)`.
pub trait Criterion: Send + Sync {
    /// The certificate kind this detector emits.
    fn kind(&self) -> CriterionKind;

    /// Registry identifier; defaults to the kind's name.
    fn name(&self) -> &'static str {
        self.kind().name()
    }

    /// Tests the family against this detector's hypothesis.
    fn check(&self, set: &MatrixSet, cfg: &Config) -> Result<Option<Certificate>>;
}

/// Runtime-selectable collection of detectors with a fixed evaluation
/// order.
pub struct CriterionRegistry {
    entries: Vec<Box<dyn Criterion>>,
}

impl CriterionRegistry {
    /// An empty registry.
    pub fn new() -> Self {
        CriterionRegistry {
            entries: Vec::new(),
        }
    }

    /// The standard battery in certification order: structural detectors
    /// first, the Gram membership sweep last.
    pub fn standard() -> Self {
        let mut registry = CriterionRegistry::new();
        registry.register(Box::new(SymmetricDetector));
        registry.register(Box::new(NormalDetector));
        registry.register(Box::new(TransposeClosedDetector));
        registry.register(Box::new(SignPairDetector));
        registry.register(Box::new(NegativeDeterminantPairDetector));
        registry.register(Box::new(SwapConjugatePairDetector));
        registry.register(Box::new(OffDiagonalFlipPairDetector));
        registry.register(Box::new(RankOnePairDetector));
        registry.register(Box::new(OffDiagRayFamilyDetector));
        registry.register(Box::new(DiagonalPairDetector));
        registry.register(Box::new(DiagAntidiagPairDetector));
        registry.register(Box::new(GramOptimalWordDetector));
        registry
    }

    /// Appends a detector; later registrations run after earlier ones.
    pub fn register(&mut self, criterion: Box<dyn Criterion>) {
        self.entries.push(criterion);
    }

    /// Looks a detector up by registry name.
    pub fn get(&self, name: &str) -> Option<&dyn Criterion> {
        self.entries
            .iter()
            .find(|c| c.name() == name)
            .map(|c| c.as_ref())
    }

    /// Detectors in evaluation order.
    pub fn iter(&self) -> impl Iterator<Item = &dyn Criterion> + '_ {
        self.entries.iter().map(|c| c.as_ref())
    }

    /// Registry names in evaluation order.
    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|c| c.name()).collect()
    }
}

impl Default for CriterionRegistry {
    fn default() -> Self {
        CriterionRegistry::standard()
    }
}

/// Every member equals its own transpose, so the family value is the
/// largest member spectral radius, realized by that member alone.
pub fn check_symmetric(set: &MatrixSet, cfg: &Config) -> Result<Option<Certificate>> {
    let symmetric = set
        .members()
        .iter()
        .all(|m| approx_equal(m, &m.transpose(), cfg.sym_tol));
    if !symmetric {
        return Ok(None);
    }
    let radii = member_radii(set)?;
    let best = index_of_max(&radii);
    let mut cert = Certificate::new(CriterionKind::Symmetric, radii[best]);
    cert.word = Some(Word::from_letters(vec![best + 1]));
    cert.witness
        .push(("maximizer".to_string(), set.members()[best].clone()));
    cert.tolerances.insert("sym_tol", cfg.sym_tol);
    cert.notes.push(format!(
        "all {} members are symmetric; the value is the largest member spectral radius",
        set.len()
    ));
    Ok(Some(cert))
}

/// Every member commutes with its own transpose. A normal matrix has
/// operator norm equal to its spectral radius, so the depth-one upper and
/// lower bounds already coincide at the largest member spectral radius.
pub fn check_normal(set: &MatrixSet, cfg: &Config) -> Result<Option<Certificate>> {
    for m in set.members() {
        // gram() of the transpose is M M^T; both products are exactly
        // symmetric by construction.
        if !approx_equal(&m.gram(), &m.transpose().gram(), cfg.sym_tol) {
            return Ok(None);
        }
    }
    let radii = member_radii(set)?;
    let best = index_of_max(&radii);
    let mut cert = Certificate::new(CriterionKind::Normal, radii[best]);
    cert.word = Some(Word::from_letters(vec![best + 1]));
    cert.witness
        .push(("maximizer".to_string(), set.members()[best].clone()));
    cert.tolerances.insert("sym_tol", cfg.sym_tol);
    cert.notes.push(
        "normal members have operator norm equal to spectral radius, so the depth-one \
         bounds close at the largest member spectral radius"
            .to_string(),
    );
    Ok(Some(cert))
}

/// The transpose of every member is again a member. The depth-one Gram
/// membership test is then guaranteed to succeed — the optimal member's
/// transpose sits in the set — so the certificate is built by delegation.
pub fn check_transpose_closed(set: &MatrixSet, cfg: &Config) -> Result<Option<Certificate>> {
    let closed = set.members().iter().all(|m| {
        let t = m.transpose();
        set.members().iter().any(|n| approx_equal(&t, n, cfg.eq_tol))
    });
    if !closed {
        return Ok(None);
    }
    let Some(mut cert) = check_gram_membership(set, 1, cfg)? else {
        return Ok(None);
    };
    cert.criterion = CriterionKind::TransposeClosed;
    cert.tolerances.insert("eq_tol", cfg.eq_tol);
    cert.notes.insert(
        0,
        "the family is closed under transposition; certificate delegated to the depth-one \
         Gram membership test"
            .to_string(),
    );
    Ok(Some(cert))
}

/// A 2x2 pair over the entry alphabet {0, +1, -1}. Finiteness is
/// guaranteed without a value formula, so the value comes from bound
/// refinement.
pub fn check_sign_pair(set: &MatrixSet, cfg: &Config) -> Result<Option<Certificate>> {
    if pair_2x2(set).is_none() {
        return Ok(None);
    }
    let sign_entries = set
        .members()
        .iter()
        .all(|m| m.entries().iter().all(|&e| e == 0.0 || e == 1.0 || e == -1.0));
    if !sign_entries {
        return Ok(None);
    }
    refined_certificate(
        set,
        cfg,
        CriterionKind::SignPair,
        "2x2 pair over {0, +1, -1}: finiteness is guaranteed, but no value formula exists",
    )
    .map(Some)
}

/// A 2x2 pair with two negative determinants. The value is the largest of
/// the member spectral radii and the square root of the pair product's.
pub fn check_negative_determinant_pair(
    set: &MatrixSet,
    _cfg: &Config,
) -> Result<Option<Certificate>> {
    let Some((a, b)) = pair_2x2(set) else {
        return Ok(None);
    };
    if a.det() >= 0.0 || b.det() >= 0.0 {
        return Ok(None);
    }
    let product = a.mul(b)?;
    let candidates = [
        (spectral_radius(a)?, vec![1]),
        (spectral_radius(b)?, vec![2]),
        (spectral_radius(&product)?.sqrt(), vec![1, 2]),
    ];
    let best = index_of_max(&[candidates[0].0, candidates[1].0, candidates[2].0]);
    let (value, letters) = candidates[best].clone();
    let mut cert = Certificate::new(CriterionKind::NegativeDeterminantPair, value);
    cert.word = Some(Word::from_letters(letters));
    cert.witness.push(("pair-product".to_string(), product));
    cert.notes.push(
        "both determinants are negative; the value is the largest of the member spectral \
         radii and the square-rooted spectral radius of the pair product"
            .to_string(),
    );
    Ok(Some(cert))
}

/// A 2x2 pair conjugate to each other by the coordinate swap. Both members
/// then share their spectrum, and the value is the larger of the common
/// spectral radius and the square-rooted spectral radius of the product.
pub fn check_swap_conjugate_pair(set: &MatrixSet, cfg: &Config) -> Result<Option<Certificate>> {
    let Some((l, r)) = pair_2x2(set) else {
        return Ok(None);
    };
    // S r S with S the coordinate swap reverses both index axes.
    let swapped = Matrix::new(
        2,
        vec![r.get(1, 1), r.get(1, 0), r.get(0, 1), r.get(0, 0)],
    )?;
    if !approx_equal(l, &swapped, cfg.eq_tol) {
        return Ok(None);
    }
    let rho = spectral_radius(l)?;
    let product = l.mul(r)?;
    let cross = spectral_radius(&product)?.sqrt();
    let mut cert = if rho >= cross {
        let mut c = Certificate::new(CriterionKind::SwapConjugatePair, rho);
        c.word = Some(Word::from_letters(vec![1]));
        c
    } else {
        let mut c = Certificate::new(CriterionKind::SwapConjugatePair, cross);
        c.word = Some(Word::from_letters(vec![1, 2]));
        c.witness.push(("pair-product".to_string(), product));
        c
    };
    cert.tolerances.insert("eq_tol", cfg.eq_tol);
    cert.notes.push(
        "the members are exchanged by conjugation with the coordinate swap and share \
         their spectrum"
            .to_string(),
    );
    Ok(Some(cert))
}

/// A 2x2 pair differing only in the sign of both off-diagonal entries.
/// With a nonnegative off-diagonal product the members share their
/// spectral radius and one letter realizes the value; otherwise the value
/// is the square-rooted spectral radius of the pair product.
pub fn check_offdiagonal_flip_pair(set: &MatrixSet, cfg: &Config) -> Result<Option<Certificate>> {
    let Some((a, b)) = pair_2x2(set) else {
        return Ok(None);
    };
    let flipped = Matrix::new(
        2,
        vec![a.get(0, 0), -a.get(0, 1), -a.get(1, 0), a.get(1, 1)],
    )?;
    if !approx_equal(b, &flipped, cfg.eq_tol) {
        return Ok(None);
    }
    let bc = a.get(0, 1) * a.get(1, 0);
    let mut cert = if bc >= 0.0 {
        let mut c = Certificate::new(CriterionKind::OffDiagonalFlipPair, spectral_radius(a)?);
        c.word = Some(Word::from_letters(vec![1]));
        c.notes.push(
            "the off-diagonal product is nonnegative, so both members share their \
             spectral radius"
                .to_string(),
        );
        c
    } else {
        let product = a.mul(b)?;
        let mut c = Certificate::new(
            CriterionKind::OffDiagonalFlipPair,
            spectral_radius(&product)?.sqrt(),
        );
        c.word = Some(Word::from_letters(vec![1, 2]));
        c.witness.push(("pair-product".to_string(), product));
        c.notes.push(
            "the off-diagonal product is negative; the value is carried by the pair \
             product"
                .to_string(),
        );
        c
    };
    cert.tolerances.insert("eq_tol", cfg.eq_tol);
    Ok(Some(cert))
}

/// A pair in which one member has numerical rank one. Finiteness is
/// guaranteed without a value formula, so the value comes from bound
/// refinement.
pub fn check_rank_one_pair(set: &MatrixSet, cfg: &Config) -> Result<Option<Certificate>> {
    if set.len() != 2 {
        return Ok(None);
    }
    let mut rank_one_member = None;
    for (i, m) in set.members().iter().enumerate() {
        // Singular values from the Gram spectrum, largest first.
        let gram_eigs = symmetric_eigenvalues(&m.gram(), 0.0)?;
        let first = gram_eigs[0].max(0.0).sqrt();
        let second = gram_eigs.get(1).map_or(0.0, |v| v.max(0.0).sqrt());
        if first > 0.0 && second < RANK_ONE_RATIO * first {
            rank_one_member = Some(i + 1);
            break;
        }
    }
    let Some(index) = rank_one_member else {
        return Ok(None);
    };
    let mut cert = refined_certificate(
        set,
        cfg,
        CriterionKind::RankOnePair,
        "one member has rank one: finiteness is guaranteed, but no value formula exists",
    )?;
    cert.tolerances.insert("rank_one_ratio", RANK_ONE_RATIO);
    cert.notes
        .push(format!("member {index} is of numerical rank one"));
    Ok(Some(cert))
}

/// 2x2 members whose off-diagonals all sit on one common ray, plus at most
/// one companion whose off-diagonal rides the square-rooted ray and whose
/// norm is dominated by the largest ray-member spectral radius. The value
/// is that largest spectral radius.
pub fn check_offdiag_ray_family(set: &MatrixSet, cfg: &Config) -> Result<Option<Certificate>> {
    let Some(family) = analyze_ray_family(set, cfg)? else {
        return Ok(None);
    };
    let best = index_of_max(&family.radii);
    let letter = family.ray_members[best];
    let mut cert = Certificate::new(CriterionKind::OffDiagRayFamily, family.radii[best]);
    cert.word = Some(Word::from_letters(vec![letter]));
    cert.witness.push((
        "ray-template".to_string(),
        set.members()[family.template - 1].clone(),
    ));
    if let Some(companion) = family.companion {
        cert.witness
            .push(("companion".to_string(), set.members()[companion - 1].clone()));
    }
    cert.tolerances.insert("eq_tol", cfg.eq_tol);
    cert.notes = family.notes;
    cert.notes.push(
        "the value is the largest spectral radius among the ray members".to_string(),
    );
    Ok(Some(cert))
}

/// A 2x2 pair of one diagonal member and one member with a nonnegative
/// off-diagonal product; the value is the larger member spectral radius.
pub fn check_diagonal_pair(set: &MatrixSet, cfg: &Config) -> Result<Option<Certificate>> {
    let Some((first, second)) = pair_2x2(set) else {
        return Ok(None);
    };
    let full = if is_diagonal(first, cfg.eq_tol) {
        second
    } else if is_diagonal(second, cfg.eq_tol) {
        first
    } else {
        return Ok(None);
    };
    if full.get(0, 1) * full.get(1, 0) < 0.0 {
        return Ok(None);
    }
    let radii = member_radii(set)?;
    let best = index_of_max(&radii);
    let mut cert = Certificate::new(CriterionKind::DiagonalPair, radii[best]);
    cert.word = Some(Word::from_letters(vec![best + 1]));
    cert.witness
        .push(("maximizer".to_string(), set.members()[best].clone()));
    cert.tolerances.insert("eq_tol", cfg.eq_tol);
    cert.notes.push(
        "one member is diagonal and the other has a nonnegative off-diagonal product; \
         the value is the larger member spectral radius"
            .to_string(),
    );
    Ok(Some(cert))
}

/// A pair of one diagonal and one antidiagonal member, in any dimension;
/// the value is the larger member spectral radius.
pub fn check_diag_antidiag_pair(set: &MatrixSet, cfg: &Config) -> Result<Option<Certificate>> {
    if set.len() != 2 {
        return Ok(None);
    }
    let members = set.members();
    let matched = (is_diagonal(&members[0], cfg.eq_tol) && is_antidiagonal(&members[1], cfg.eq_tol))
        || (is_diagonal(&members[1], cfg.eq_tol) && is_antidiagonal(&members[0], cfg.eq_tol));
    if !matched {
        return Ok(None);
    }
    let radii = member_radii(set)?;
    let best = index_of_max(&radii);
    let mut cert = Certificate::new(CriterionKind::DiagAntidiagPair, radii[best]);
    cert.word = Some(Word::from_letters(vec![best + 1]));
    cert.witness
        .push(("maximizer".to_string(), set.members()[best].clone()));
    cert.tolerances.insert("eq_tol", cfg.eq_tol);
    cert.notes.push(
        "a diagonal and an antidiagonal member; the value is the larger member spectral \
         radius"
            .to_string(),
    );
    Ok(Some(cert))
}

/// Optimal-word Gram membership at a fixed word length `n`.
///
/// Finds the norm-maximal word of length `n` — every word tied within the
/// configured window is tried, in lexicographic order — forms both Gram
/// products of its matrix, and scans all words of length `2n` for a member
/// product equal to either Gram matrix entrywise. A match additionally
/// must reproduce the optimal norm through its spectral radius before it
/// is accepted. No match is inapplicability; an enumeration that does not
/// fit the word budget is an error, not inapplicability.
pub fn check_gram_membership(set: &MatrixSet, n: usize, cfg: &Config) -> Result<Option<Certificate>> {
    let tied = bounds::optimal_words_tied(set, n, cfg)?;
    let exponent = 1.0 / n as f64;
    for (w_star, norm) in &tied.words {
        let value = norm.powf(exponent);
        let m_star = evaluate(set, w_star)?;
        let grams = [m_star.gram(), m_star.transpose().gram()];
        for (side, target) in ["left", "right"].iter().zip(&grams) {
            for u in all_words(set.len(), 2 * n, cfg.word_budget)? {
                let product = evaluate(set, &u)?;
                if !approx_equal(&product, target, cfg.membership_tol) {
                    continue;
                }
                // The matched product must carry the claimed value: its
                // spectral radius is the squared optimal norm.
                let via_word = spectral_radius(&product)?.powf(0.5 * exponent);
                if (via_word - value).abs() > VALUE_CONSISTENCY_REL * (1.0 + value) {
                    continue;
                }
                let mut cert = Certificate::new(CriterionKind::GramOptimalWord, value);
                cert.word = Some(u);
                cert.witness.push(("optimal-product".to_string(), m_star));
                cert.witness.push(("gram".to_string(), target.clone()));
                cert.tolerances.insert("membership_tol", cfg.membership_tol);
                cert.tolerances.insert("tie_rel_tol", cfg.tie_rel_tol);
                cert.tolerances
                    .insert("value_consistency_rel", VALUE_CONSISTENCY_REL);
                cert.notes.push(format!(
                    "optimal word {w_star} of length {n}: the {side} Gram product of its \
                     matrix is itself a product of {} members",
                    2 * n
                ));
                if tied.words.len() > 1 {
                    cert.notes
                        .push(format!("{} words tied the optimal norm", tied.words.len()));
                }
                return Ok(Some(cert));
            }
        }
    }
    if tied.truncated {
        // More ties existed than the probe cap kept; stay silent rather
        // than claim anything about the words we never saw.
        return Ok(None);
    }
    Ok(None)
}

/// Absolute-stability decision for the shared-ray family: stable exactly
/// when every ray member's spectral radius sits below one by the
/// configured margin. Families outside that shape are undecidable here.
pub fn decide_stability(set: &MatrixSet, cfg: &Config) -> Result<StabilityVerdict> {
    let Some(family) = analyze_ray_family(set, cfg)? else {
        return Ok(StabilityVerdict::Undecidable);
    };
    let best = index_of_max(&family.radii);
    let max_rho = family.radii[best];
    Ok(StabilityVerdict::Decided {
        stable: max_rho < 1.0 - cfg.stability_margin,
        reason: CriterionKind::OffDiagRayFamily,
        spectral_radii: family.radii.clone(),
        margin: 1.0 - max_rho,
        witness: family.ray_members[best],
    })
}

/// Runs the standard detector battery in order and cross-validates every
/// collected certificate against refined enumeration bounds. A value
/// outside the refined interval beyond `cfg.value_tol` is a hard error:
/// two independent computations disagree.
pub fn certify(set: &MatrixSet, cfg: &Config) -> Result<Vec<Certificate>> {
    let registry = CriterionRegistry::standard();
    let mut certificates = Vec::new();
    for criterion in registry.iter() {
        if let Some(cert) = criterion.check(set, cfg)? {
            certificates.push(cert);
        }
    }
    if certificates.is_empty() {
        return Ok(certificates);
    }
    let report = bounds::refine(set, cfg)?;
    for cert in &certificates {
        cross_validate(cert, &report, cfg.value_tol)?;
    }
    Ok(certificates)
}

pub(crate) fn cross_validate(cert: &Certificate, report: &BoundsReport, tol: f64) -> Result<()> {
    if cert.value < report.lower - tol || cert.value > report.upper + tol {
        return Err(Error::CrossValidation {
            criterion: cert.criterion.name(),
            value: cert.value,
            lower: report.lower,
            upper: report.upper,
            tol,
        });
    }
    Ok(())
}

/// Shared certificate construction for criteria that guarantee finiteness
/// without a value formula: the value and word come from enumeration
/// refinement, and the notes say so.
fn refined_certificate(
    set: &MatrixSet,
    cfg: &Config,
    kind: CriterionKind,
    hypothesis: &str,
) -> Result<Certificate> {
    let report = bounds::refine(set, cfg)?;
    let mut cert = Certificate::new(kind, report.lower);
    cert.word = Some(report.lower_witness.clone());
    cert.witness.push((
        "witness-product".to_string(),
        evaluate(set, &report.lower_witness)?,
    ));
    cert.tolerances.insert("refine_tol", cfg.refine_tol);
    cert.notes.push(hypothesis.to_string());
    cert.notes.push(format!(
        "value computed by bound refinement rather than a closed form; witness found at \
         depth {}, residual gap {:.3e}",
        report.lower_depth, report.gap
    ));
    if !report.complete {
        cert.notes.push(
            "refinement stopped before closing the gap; the value is the best certified \
             lower witness"
                .to_string(),
        );
    }
    Ok(cert)
}

fn member_radii(set: &MatrixSet) -> Result<Vec<f64>> {
    set.members().iter().map(spectral_radius).collect()
}

/// Index of the first maximal entry.
fn index_of_max(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

fn pair_2x2(set: &MatrixSet) -> Option<(&Matrix, &Matrix)> {
    if set.len() == 2 && set.dim() == 2 {
        let members = set.members();
        Some((&members[0], &members[1]))
    } else {
        None
    }
}

fn is_diagonal(m: &Matrix, tol: f64) -> bool {
    let d = m.dim();
    let scale = 1.0_f64.max(m.max_abs());
    (0..d).all(|i| (0..d).all(|j| i == j || m.get(i, j).abs() <= tol * scale))
}

fn is_antidiagonal(m: &Matrix, tol: f64) -> bool {
    let d = m.dim();
    let scale = 1.0_f64.max(m.max_abs());
    (0..d).all(|i| (0..d).all(|j| i + j == d - 1 || m.get(i, j).abs() <= tol * scale))
}

/// The scalar `r` with `(x, y) ~ (r*p, r*q)`, if a consistent one exists
/// within `tol` (relative, per component). `p = q = 0` demands `x` and `y`
/// vanish and yields `r = 0`.
fn shared_scalar(x: f64, y: f64, p: f64, q: f64, tol: f64) -> Option<f64> {
    let r = if p != 0.0 {
        x / p
    } else if q != 0.0 {
        y / q
    } else {
        0.0
    };
    let close = |got: f64, want: f64| {
        (got - want).abs() <= tol * 1.0_f64.max(got.abs()).max(want.abs())
    };
    if close(x, r * p) && close(y, r * q) {
        Some(r)
    } else {
        None
    }
}

/// Role assignment for the shared-ray family.
struct RayFamily {
    /// 1-based indices of the members on the shared ray, ascending.
    ray_members: Vec<usize>,
    /// 1-based index of the member holding the template ray.
    template: usize,
    /// 1-based index of the norm-dominated companion, when present.
    companion: Option<usize>,
    /// Spectral radius of each ray member, parallel to `ray_members`.
    radii: Vec<f64>,
    notes: Vec<String>,
}

/// Matches the family against the shared-ray shape and checks its gates.
///
/// Every member's off-diagonal must be a scalar multiple of the template
/// ray `(b, c)` — or, for the single optional companion, of
/// `(sqrt|b|, sqrt|c|)` — with `b*c >= 0` and the companion's operator
/// norm dominated by the largest ray-member spectral radius. Roles are
/// classified automatically unless the configuration assigns them; a
/// member fitting both roles stays on the ray.
fn analyze_ray_family(set: &MatrixSet, cfg: &Config) -> Result<Option<RayFamily>> {
    if set.dim() != 2 || set.len() < 2 {
        return Ok(None);
    }
    let members = set.members();
    let mut notes = Vec::new();

    let (ray_members, companion) = if let Some(roles) = &cfg.ray_roles {
        validate_roles(set, roles)?;
        notes.push("member roles assigned explicitly by configuration".to_string());
        (roles.ray_members.clone(), roles.companion)
    } else {
        let Some(holder) = members
            .iter()
            .position(|m| m.get(0, 1) != 0.0 || m.get(1, 0) != 0.0)
        else {
            // All members diagonal: nothing rides a ray worth naming.
            return Ok(None);
        };
        let (b, c) = (members[holder].get(0, 1), members[holder].get(1, 0));
        let root = (b.abs().sqrt(), c.abs().sqrt());
        let mut ray = Vec::new();
        let mut companion = None;
        for (j, m) in members.iter().enumerate() {
            if j == holder {
                ray.push(j + 1);
                continue;
            }
            let (x, y) = (m.get(0, 1), m.get(1, 0));
            let on_ray = shared_scalar(x, y, b, c, cfg.eq_tol);
            let on_root = shared_scalar(x, y, root.0, root.1, cfg.eq_tol);
            match (on_ray, on_root) {
                (Some(_), both) => {
                    if both.is_some() {
                        notes.push(format!(
                            "member {} fits the ray and companion roles; kept on the ray",
                            j + 1
                        ));
                    }
                    ray.push(j + 1);
                }
                (None, Some(_)) => {
                    if companion.is_some() {
                        // Two companions do not fit the shape.
                        return Ok(None);
                    }
                    companion = Some(j + 1);
                }
                (None, None) => return Ok(None),
            }
        }
        (ray, companion)
    };

    fit_ray_family(set, ray_members, companion, notes, cfg)
}

/// Verifies an assignment against the templates and gates, and prices the
/// family if it fits.
fn fit_ray_family(
    set: &MatrixSet,
    ray_members: Vec<usize>,
    companion: Option<usize>,
    mut notes: Vec<String>,
    cfg: &Config,
) -> Result<Option<RayFamily>> {
    let members = set.members();
    let template = ray_members
        .iter()
        .copied()
        .find(|&i| {
            let m = &members[i - 1];
            m.get(0, 1) != 0.0 || m.get(1, 0) != 0.0
        })
        .unwrap_or(ray_members[0]);
    let holder = &members[template - 1];
    let (b, c) = (holder.get(0, 1), holder.get(1, 0));

    for &i in &ray_members {
        let m = &members[i - 1];
        let Some(r) = shared_scalar(m.get(0, 1), m.get(1, 0), b, c, cfg.eq_tol) else {
            return Ok(None);
        };
        notes.push(format!("member {i} rides the ray with factor {r}"));
    }
    if let Some(ci) = companion {
        let m = &members[ci - 1];
        let fits = shared_scalar(
            m.get(0, 1),
            m.get(1, 0),
            b.abs().sqrt(),
            c.abs().sqrt(),
            cfg.eq_tol,
        );
        let Some(r) = fits else {
            return Ok(None);
        };
        notes.push(format!(
            "member {ci} is the companion on the square-rooted ray with factor {r}"
        ));
    }

    if b * c < 0.0 {
        return Ok(None);
    }
    let radii = ray_members
        .iter()
        .map(|&i| spectral_radius(&members[i - 1]))
        .collect::<Result<Vec<_>>>()?;
    let max_rho = radii[index_of_max(&radii)];
    if let Some(ci) = companion {
        let norm = operator_norm(&members[ci - 1])?;
        if norm > max_rho {
            return Ok(None);
        }
        notes.push(format!(
            "companion norm {norm} is dominated by the largest ray spectral radius {max_rho}"
        ));
    }
    Ok(Some(RayFamily {
        ray_members,
        template,
        companion,
        radii,
        notes,
    }))
}

fn validate_roles(set: &MatrixSet, roles: &RayRoles) -> Result<()> {
    let k = set.len();
    let mut seen = vec![false; k];
    let mut claim = |index: usize, what: &str| -> Result<()> {
        if index == 0 || index > k {
            return Err(Error::ShapeMismatch {
                reason: format!("{what} index {index} is outside 1..={k}"),
            });
        }
        if seen[index - 1] {
            return Err(Error::ShapeMismatch {
                reason: format!("member {index} is assigned twice"),
            });
        }
        seen[index - 1] = true;
        Ok(())
    };
    if roles.ray_members.is_empty() {
        return Err(Error::ShapeMismatch {
            reason: "role assignment names no ray members".to_string(),
        });
    }
    for &i in &roles.ray_members {
        claim(i, "ray member")?;
    }
    if let Some(ci) = roles.companion {
        claim(ci, "companion")?;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::ShapeMismatch {
            reason: format!("member {} has no assigned role", missing + 1),
        });
    }
    Ok(())
}

struct SymmetricDetector;

impl Criterion for SymmetricDetector {
    fn kind(&self) -> CriterionKind {
        CriterionKind::Symmetric
    }

    fn check(&self, set: &MatrixSet, cfg: &Config) -> Result<Option<Certificate>> {
        check_symmetric(set, cfg)
    }
}

struct NormalDetector;

impl Criterion for NormalDetector {
    fn kind(&self) -> CriterionKind {
        CriterionKind::Normal
    }

    fn check(&self, set: &MatrixSet, cfg: &Config) -> Result<Option<Certificate>> {
        check_normal(set, cfg)
    }
}

struct TransposeClosedDetector;

impl Criterion for TransposeClosedDetector {
    fn kind(&self) -> CriterionKind {
        CriterionKind::TransposeClosed
    }

    fn check(&self, set: &MatrixSet, cfg: &Config) -> Result<Option<Certificate>> {
        check_transpose_closed(set, cfg)
    }
}

struct SignPairDetector;

impl Criterion for SignPairDetector {
    fn kind(&self) -> CriterionKind {
        CriterionKind::SignPair
    }

    fn check(&self, set: &MatrixSet, cfg: &Config) -> Result<Option<Certificate>> {
        check_sign_pair(set, cfg)
    }
}

struct NegativeDeterminantPairDetector;

impl Criterion for NegativeDeterminantPairDetector {
    fn kind(&self) -> CriterionKind {
        CriterionKind::NegativeDeterminantPair
    }

    fn check(&self, set: &MatrixSet, cfg: &Config) -> Result<Option<Certificate>> {
        check_negative_determinant_pair(set, cfg)
    }
}

struct SwapConjugatePairDetector;

impl Criterion for SwapConjugatePairDetector {
    fn kind(&self) -> CriterionKind {
        CriterionKind::SwapConjugatePair
    }

    fn check(&self, set: &MatrixSet, cfg: &Config) -> Result<Option<Certificate>> {
        check_swap_conjugate_pair(set, cfg)
    }
}

struct OffDiagonalFlipPairDetector;

impl Criterion for OffDiagonalFlipPairDetector {
    fn kind(&self) -> CriterionKind {
        CriterionKind::OffDiagonalFlipPair
    }

    fn check(&self, set: &MatrixSet, cfg: &Config) -> Result<Option<Certificate>> {
        check_offdiagonal_flip_pair(set, cfg)
    }
}

struct RankOnePairDetector;

impl Criterion for RankOnePairDetector {
    fn kind(&self) -> CriterionKind {
        CriterionKind::RankOnePair
    }

    fn check(&self, set: &MatrixSet, cfg: &Config) -> Result<Option<Certificate>> {
        check_rank_one_pair(set, cfg)
    }
}

struct OffDiagRayFamilyDetector;

impl Criterion for OffDiagRayFamilyDetector {
    fn kind(&self) -> CriterionKind {
        CriterionKind::OffDiagRayFamily
    }

    fn check(&self, set: &MatrixSet, cfg: &Config) -> Result<Option<Certificate>> {
        check_offdiag_ray_family(set, cfg)
    }
}

struct DiagonalPairDetector;

impl Criterion for DiagonalPairDetector {
    fn kind(&self) -> CriterionKind {
        CriterionKind::DiagonalPair
    }

    fn check(&self, set: &MatrixSet, cfg: &Config) -> Result<Option<Certificate>> {
        check_diagonal_pair(set, cfg)
    }
}

struct DiagAntidiagPairDetector;

impl Criterion for DiagAntidiagPairDetector {
    fn kind(&self) -> CriterionKind {
        CriterionKind::DiagAntidiagPair
    }

    fn check(&self, set: &MatrixSet, cfg: &Config) -> Result<Option<Certificate>> {
        check_diag_antidiag_pair(set, cfg)
    }
}

struct GramOptimalWordDetector;

impl Criterion for GramOptimalWordDetector {
    fn kind(&self) -> CriterionKind {
        CriterionKind::GramOptimalWord
    }

    fn check(&self, set: &MatrixSet, cfg: &Config) -> Result<Option<Certificate>> {
        for n in 1..=cfg.gram_depth_max {
            match check_gram_membership(set, n, cfg) {
                Ok(Some(cert)) => return Ok(Some(cert)),
                Ok(None) => {}
                // Deeper probes are optional refinements: a length that no
                // longer fits the enumeration budget ends the sweep instead
                // of failing a battery that has already done useful work.
                Err(Error::BudgetExceeded { .. }) if n > 1 => return Ok(None),
                Err(e) => return Err(e),
            }
        }
        Ok(None)
    }
}
