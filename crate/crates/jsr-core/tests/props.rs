//! Randomized invariants of the numeric core, driven by generated
//! matrices, words, and parameter draws. Fixed tolerances follow the
//! guarantees stated in the module documentation; oracles are exhaustive
//! enumerations or closed forms, never the code under test.

use proptest::prelude::*;

use jsr_core::criteria::{
    check_normal, check_symmetric, check_transpose_closed, Certificate,
};
use jsr_core::eigen::{operator_norm, spectral_radius};
use jsr_core::switching::{barabanov_iterate, build_model};
use jsr_core::testutil::{
    aperiodic_necklace_count, brute_lower_at_depth, brute_min_rotation, brute_upper_at_depth,
    gen_range, random_matrix, rng,
};
use jsr_core::words::{evaluate, lyndon_words};
use jsr_core::{bounds, switching, Config, Matrix, MatrixSet, Word};

fn square(d: usize, lo: f64, hi: f64) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(prop::collection::vec(lo..hi, d), d)
        .prop_map(|rows| Matrix::from_rows(&rows).expect("finite entries"))
}

fn any_square(lo: f64, hi: f64) -> impl Strategy<Value = Matrix> {
    (1usize..=4).prop_flat_map(move |d| square(d, lo, hi))
}

fn same_dim_pair(lo: f64, hi: f64) -> impl Strategy<Value = (Matrix, Matrix)> {
    (2usize..=4).prop_flat_map(move |d| (square(d, lo, hi), square(d, lo, hi)))
}

fn small_set() -> impl Strategy<Value = MatrixSet> {
    (1usize..=3, 1usize..=3).prop_flat_map(|(k, d)| {
        prop::collection::vec(square(d, -2.0, 2.0), k)
            .prop_map(|members| MatrixSet::new(members).expect("set"))
    })
}

/// A random word over the set's alphabet together with the set.
fn set_and_word(max_len: usize) -> impl Strategy<Value = (MatrixSet, Vec<usize>)> {
    (2usize..=3, 2usize..=3).prop_flat_map(move |(k, d)| {
        (
            prop::collection::vec(square(d, -2.0, 2.0), k),
            prop::collection::vec(1..=k, 1..=max_len),
        )
            .prop_map(|(members, letters)| (MatrixSet::new(members).expect("set"), letters))
    })
}

fn symmetrized(m: &Matrix) -> Matrix {
    let rows = m.rows();
    let d = rows.len();
    let sym: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| 0.5 * (rows[i][j] + rows[j][i])).collect())
        .collect();
    Matrix::from_rows(&sym).expect("symmetrized")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(192))]

    #[test]
    fn radius_never_exceeds_the_operator_norm(m in any_square(-5.0, 5.0)) {
        let rho = spectral_radius(&m).expect("radius");
        let norm = operator_norm(&m).expect("norm");
        prop_assert!(rho <= norm + 1e-9 * (1.0 + norm), "rho {rho} vs norm {norm}");
    }

    #[test]
    fn squared_norm_is_the_gram_radius(m in any_square(-5.0, 5.0)) {
        let norm = operator_norm(&m).expect("norm");
        let gram_rho = spectral_radius(&m.gram()).expect("gram radius");
        prop_assert!(
            (norm * norm - gram_rho).abs() <= 1e-9 * (1.0 + norm * norm),
            "norm^2 {} vs rho(M^T M) {gram_rho}",
            norm * norm
        );
    }

    #[test]
    fn product_radius_is_cyclic((a, b) in same_dim_pair(-3.0, 3.0)) {
        let ab = spectral_radius(&a.mul(&b).expect("product")).expect("radius");
        let ba = spectral_radius(&b.mul(&a).expect("product")).expect("radius");
        let scale = operator_norm(&a).expect("norm") * operator_norm(&b).expect("norm");
        prop_assert!(
            (ab - ba).abs() <= 1e-9 * (1.0 + scale),
            "rho(AB) {ab} vs rho(BA) {ba}"
        );
    }

    #[test]
    fn radius_scales_homogeneously(m in any_square(-4.0, 4.0), c in -4.0..4.0f64) {
        let direct = spectral_radius(&m.scale(c).expect("scaled")).expect("radius");
        let derived = c.abs() * spectral_radius(&m).expect("radius");
        prop_assert!(
            (direct - derived).abs() <= 1e-12 * (1.0 + derived),
            "rho(cM) {direct} vs |c| rho(M) {derived}"
        );
    }

    #[test]
    fn transposition_moves_neither_norm_nor_radius(m in any_square(-5.0, 5.0)) {
        let t = m.transpose();
        let (rho, rho_t) = (
            spectral_radius(&m).expect("radius"),
            spectral_radius(&t).expect("radius"),
        );
        let (norm, norm_t) = (
            operator_norm(&m).expect("norm"),
            operator_norm(&t).expect("norm"),
        );
        prop_assert!((rho - rho_t).abs() <= 1e-12 * (1.0 + rho), "{rho} vs {rho_t}");
        prop_assert!((norm - norm_t).abs() <= 1e-12 * (1.0 + norm), "{norm} vs {norm_t}");
    }

    #[test]
    fn diagonal_similarity_preserves_the_radius(
        m in any_square(-3.0, 3.0),
        raw in prop::collection::vec(-2.0..2.0f64, 4),
    ) {
        let rows = m.rows();
        let d = rows.len();
        // Conjugation by diag(10^raw): entry (i, j) picks up s_j / s_i.
        let scales: Vec<f64> = raw.iter().take(d).map(|e| 10f64.powf(*e)).collect();
        let conjugated: Vec<Vec<f64>> = (0..d)
            .map(|i| (0..d).map(|j| rows[i][j] * scales[j] / scales[i]).collect())
            .collect();
        let before = spectral_radius(&m).expect("radius");
        let after =
            spectral_radius(&Matrix::from_rows(&conjugated).expect("conjugated")).expect("radius");
        prop_assert!(
            (before - after).abs() <= 1e-9 * (1.0 + before),
            "rho moved under similarity: {before} vs {after}"
        );
    }

    #[test]
    fn rotating_a_word_preserves_its_product_radius((set, letters) in set_and_word(8)) {
        let word = Word::new(letters, set.len()).expect("word");
        let here = spectral_radius(&evaluate(&set, &word).expect("product")).expect("radius");
        for r in 1..word.len() {
            let there = spectral_radius(&evaluate(&set, &word.rotated(r)).expect("product"))
                .expect("radius");
            prop_assert!(
                (here - there).abs() <= 1e-9 * (1.0 + here),
                "rotation {r} moved the radius: {here} vs {there}"
            );
        }
    }

    #[test]
    fn concatenation_matches_split_evaluation(
        d in 1usize..=4,
        u in prop::collection::vec(1usize..=2, 1..=10),
        v in prop::collection::vec(1usize..=2, 1..=10),
    ) {
        let mut r = rng((d as u64) << 8 | u.len() as u64);
        let set = MatrixSet::new(vec![
            random_matrix(&mut r, d, -10.0, 10.0),
            random_matrix(&mut r, d, -10.0, 10.0),
        ])
        .expect("set");
        let wu = Word::new(u, 2).expect("word");
        let wv = Word::new(v, 2).expect("word");
        let joint = evaluate(&set, &wu.concat(&wv)).expect("product");
        let split = evaluate(&set, &wu)
            .expect("product")
            .mul(&evaluate(&set, &wv).expect("product"))
            .expect("product");
        let scale = joint
            .rows()
            .iter()
            .chain(split.rows().iter())
            .flatten()
            .fold(1.0f64, |m, &x| m.max(x.abs()));
        for (row_a, row_b) in joint.rows().iter().zip(split.rows()) {
            for (a, b) in row_a.iter().zip(row_b) {
                prop_assert!(
                    (a - b).abs() <= 1e-12 * scale,
                    "association drift {a} vs {b} at scale {scale}"
                );
            }
        }
    }

    #[test]
    fn minimal_rotation_is_canonical(w in prop::collection::vec(1usize..=3, 1..=12)) {
        let word = Word::new(w.clone(), 3).expect("word");
        let canon = word.rotate_min();
        let brute = brute_min_rotation(&w);
        prop_assert_eq!(canon.letters(), brute.as_slice());
        let found = (0..word.len()).any(|r| word.rotated(r).letters() == canon.letters());
        prop_assert!(found, "canonical form is not a rotation");
        for r in 0..word.len() {
            let recanon = word.rotated(r).rotate_min();
            prop_assert_eq!(
                recanon.letters(),
                canon.letters(),
                "rotation {} canonicalizes differently",
                r
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn refined_bounds_always_sandwich(set in small_set()) {
        let cfg = Config {
            max_depth: 5,
            refine_tol: 0.0,
            ..Config::default()
        };
        let report = bounds::refine(&set, &cfg).expect("refine");
        prop_assert!(
            report.lower <= report.upper + 1e-9 * (1.0 + report.upper),
            "lower {} above upper {}",
            report.lower,
            report.upper
        );
        // The lower witness reproduces the lower endpoint.
        let n = report.lower_witness.len() as f64;
        let replay = spectral_radius(&evaluate(&set, &report.lower_witness).expect("product"))
            .expect("radius")
            .powf(1.0 / n);
        prop_assert!(
            (replay - report.lower).abs() <= 1e-12 * (1.0 + report.lower),
            "witness gives {replay}, report says {}",
            report.lower
        );
    }

    #[test]
    fn deeper_scans_only_tighten(set in small_set()) {
        let cfg = Config::default();
        let mut previous_lower = 0.0f64;
        let mut previous_upper = f64::INFINITY;
        for depth in 1..=5 {
            let lower = bounds::lower_bound(&set, depth, &cfg).expect("lower").value;
            let upper = bounds::upper_bound(&set, depth, &cfg).expect("upper").value;
            prop_assert!(lower >= previous_lower, "lower shrank at depth {depth}");
            prop_assert!(upper <= previous_upper, "upper grew at depth {depth}");
            previous_lower = lower;
            previous_upper = upper;
        }
    }

    #[test]
    fn member_order_never_moves_the_endpoints(
        set in small_set(),
        rotation in 0usize..3,
    ) {
        let k = set.len();
        let reordered: Vec<Matrix> = (0..k)
            .map(|i| set.members()[(i + rotation) % k].clone())
            .collect();
        let permuted = MatrixSet::new(reordered).expect("permuted set");
        let cfg = Config {
            max_depth: 4,
            refine_tol: 0.0,
            ..Config::default()
        };
        let original = bounds::refine(&set, &cfg).expect("refine");
        let shuffled = bounds::refine(&permuted, &cfg).expect("refine");
        // The upper scan walks every word, so relabeling reproduces the
        // exact same product multiset; the lower scan walks one
        // representative per cyclic class, and relabeling may hand it a
        // rotated representative whose product rounds differently.
        prop_assert!(
            (original.lower - shuffled.lower).abs() <= 1e-12 * (1.0 + original.lower),
            "lower moved: {} vs {}",
            original.lower,
            shuffled.lower
        );
        prop_assert_eq!(original.upper, shuffled.upper, "upper moved");
        prop_assert_eq!(original.nodes_used, shuffled.nodes_used, "work moved");
    }

    #[test]
    fn scan_bounds_match_exhaustive_enumeration(set in small_set()) {
        let cfg = Config::default();
        let depth = 4;
        let scan_lower = bounds::lower_bound(&set, depth, &cfg).expect("lower").value;
        let scan_upper = bounds::upper_bound(&set, depth, &cfg).expect("upper").value;
        let mut brute_lower = 0.0f64;
        let mut brute_upper = f64::INFINITY;
        for n in 1..=depth {
            brute_lower = brute_lower.max(brute_lower_at_depth(&set, n));
            brute_upper = brute_upper.min(brute_upper_at_depth(&set, n));
        }
        prop_assert!(
            (scan_lower - brute_lower).abs() <= 1e-12 * (1.0 + brute_lower),
            "aperiodic-class scan {scan_lower} vs brute force {brute_lower}"
        );
        prop_assert!(
            (scan_upper - brute_upper).abs() <= 1e-12 * (1.0 + brute_upper),
            "completed-depth minimum {scan_upper} vs brute force {brute_upper}"
        );
    }
}

/// Structured two- and three-member families that the detectors accept,
/// labelled for diagnostics.
fn detectable_family() -> impl Strategy<Value = (&'static str, MatrixSet)> {
    let symmetric = (1usize..=3, 2usize..=3)
        .prop_flat_map(|(k, d)| prop::collection::vec(square(d, -2.0, 2.0), k))
        .prop_map(|members| {
            let sym: Vec<Matrix> = members.iter().map(symmetrized).collect();
            ("symmetric", MatrixSet::new(sym).expect("set"))
        });
    let transpose_closed = (2usize..=3)
        .prop_flat_map(|d| square(d, -2.0, 2.0))
        .prop_map(|a| {
            let t = a.transpose();
            ("transpose-closed", MatrixSet::new(vec![a, t]).expect("set"))
        });
    let flip = square(2, -2.0, 2.0).prop_map(|a| {
        let r = a.rows();
        let b = Matrix::from_rows(&[vec![r[0][0], -r[0][1]], vec![-r[1][0], r[1][1]]])
            .expect("flipped");
        ("offdiagonal-flip", MatrixSet::new(vec![a, b]).expect("set"))
    });
    let negative_det = (square(2, -2.0, 2.0), square(2, -2.0, 2.0))
        .prop_filter("both determinants negative", |(a, b)| {
            a.det() < 0.0 && b.det() < 0.0
        })
        .prop_map(|(a, b)| ("negative-determinant", MatrixSet::new(vec![a, b]).expect("set")));
    let diagonal = (2usize..=3)
        .prop_flat_map(|d| {
            (
                prop::collection::vec(-2.0..2.0f64, d),
                prop::collection::vec(-2.0..2.0f64, d),
            )
        })
        .prop_map(|(u, v)| {
            let build = |e: &[f64]| {
                let d = e.len();
                let mut rows = vec![vec![0.0; d]; d];
                for i in 0..d {
                    rows[i][i] = e[i];
                }
                Matrix::from_rows(&rows).expect("diagonal")
            };
            ("diagonal", MatrixSet::new(vec![build(&u), build(&v)]).expect("set"))
        });
    let diag_antidiag = (2usize..=3)
        .prop_flat_map(|d| {
            (
                prop::collection::vec(-2.0..2.0f64, d),
                prop::collection::vec(-2.0..2.0f64, d),
            )
        })
        .prop_map(|(u, v)| {
            let d = u.len();
            let mut a = vec![vec![0.0; d]; d];
            let mut b = vec![vec![0.0; d]; d];
            for i in 0..d {
                a[i][i] = u[i];
                b[i][d - 1 - i] = v[i];
            }
            (
                "diag-antidiag",
                MatrixSet::new(vec![
                    Matrix::from_rows(&a).expect("diagonal"),
                    Matrix::from_rows(&b).expect("antidiagonal"),
                ])
                .expect("set"),
            )
        });
    prop_oneof![
        symmetric,
        transpose_closed,
        flip,
        negative_det,
        diagonal,
        diag_antidiag,
    ]
}

fn certificate_is_sound(
    set: &MatrixSet,
    cert: &Certificate,
    lower: f64,
    upper: f64,
) -> Result<(), TestCaseError> {
    if let Some(word) = &cert.word {
        let replay = spectral_radius(&evaluate(set, word).expect("product"))
            .expect("radius")
            .powf(1.0 / word.len() as f64);
        prop_assert!(
            (replay - cert.value).abs() <= 1e-9 * (1.0 + cert.value),
            "{}: word replays to {replay}, certificate says {}",
            cert.name(),
            cert.value
        );
    }
    let slack = 1e-9 * (1.0 + upper);
    prop_assert!(
        cert.value >= lower - slack && cert.value <= upper + slack,
        "{}: value {} escapes [{lower}, {upper}]",
        cert.name(),
        cert.value
    );
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn detected_families_yield_sound_certificates((label, set) in detectable_family()) {
        let cfg = Config {
            max_depth: 6,
            ..Config::default()
        };
        let certs = switching::certify_full(&set, &cfg).expect("certification");
        prop_assert!(!certs.is_empty(), "{label}: no detector fired");
        let lower = bounds::lower_bound(&set, 6, &cfg).expect("lower").value;
        let upper = bounds::upper_bound(&set, 6, &cfg).expect("upper").value;
        for cert in &certs {
            certificate_is_sound(&set, cert, lower, upper)?;
        }
    }

    #[test]
    fn symmetric_families_nest_through_the_weaker_detectors(
        members in (1usize..=3, 2usize..=3)
            .prop_flat_map(|(k, d)| prop::collection::vec(square(d, -2.0, 2.0), k)),
    ) {
        let set = MatrixSet::new(members.iter().map(symmetrized).collect()).expect("set");
        let cfg = Config::default();
        let sym = check_symmetric(&set, &cfg).expect("runs").expect("applies");
        let normal = check_normal(&set, &cfg).expect("runs").expect("applies");
        let closed = check_transpose_closed(&set, &cfg).expect("runs").expect("applies");
        for (a, b) in [
            (sym.value, normal.value),
            (sym.value, closed.value),
            (normal.value, closed.value),
        ] {
            prop_assert!(
                (a - b).abs() <= 1e-12 * (1.0 + a.abs()),
                "nested detector values disagree: {a} vs {b}"
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn growth_brackets_overlap_refined_intervals(
        a in 0.05..1.0f64,
        d in 0.05..2.0f64,
        b in 0.5..2.0f64,
        product in 1.0..3.0f64,
        alpha in 0.2..1.5f64,
        beta in 0.2..1.5f64,
    ) {
        let model = build_model(a, b, product / b, d, alpha, beta).expect("gate passes");
        let approx = barabanov_iterate(&model, 512, 1e-4, 600, 1).expect("iteration");
        let cfg = Config {
            max_depth: 6,
            refine_tol: 0.0,
            ..Config::default()
        };
        let report = bounds::refine(model.set(), &cfg).expect("refine");
        let slack = 1e-3 * approx.rho_hat.max(1.0);
        prop_assert!(
            approx.bracket.0 <= report.upper + slack,
            "bracket floor {} above refined upper {}",
            approx.bracket.0,
            report.upper
        );
        prop_assert!(
            report.lower <= approx.bracket.1 + slack,
            "refined lower {} above bracket ceiling {}",
            report.lower,
            approx.bracket.1
        );
    }
}

#[test]
fn class_counts_match_the_moebius_formula() {
    for k in 1..=4usize {
        for n in 1..=12usize {
            let listed = lyndon_words(k, n, 2_000_000).expect("enumeration").len();
            assert_eq!(
                listed as u128,
                aperiodic_necklace_count(k, n),
                "class count mismatch at k = {k}, n = {n}"
            );
        }
    }
}

#[test]
fn extreme_diagonal_similarity_stays_within_tolerance() {
    let mut r = rng(0x51b1);
    for _ in 0..20 {
        let d = gen_range(&mut r, 2..=4usize);
        let m = random_matrix(&mut r, d, -3.0, 3.0);
        let mut scales = vec![0.0; d];
        scales[0] = 1e-3;
        scales[1] = 1e3;
        for s in scales.iter_mut().skip(2) {
            *s = gen_range(&mut r, 0.1..10.0);
        }
        let rows = m.rows();
        let conjugated: Vec<Vec<f64>> = (0..d)
            .map(|i| (0..d).map(|j| rows[i][j] * scales[j] / scales[i]).collect())
            .collect();
        let before = spectral_radius(&m).expect("radius");
        let after = spectral_radius(&Matrix::from_rows(&conjugated).expect("conjugated"))
            .expect("radius");
        assert!(
            (before - after).abs() <= 1e-9 * (1.0 + before),
            "condition-1e6 similarity moved the radius: {before} vs {after}"
        );
    }
}
