//! Two-sided bounds on the joint spectral radius.
//!
//! The lower bound is `max rho(A(w))^(1/n)` over words, where cyclic
//! invariance of the spectral radius lets the search restrict to Lyndon
//! representatives. The upper bound is `min over n of max |A(w)|^(1/n)`
//! over all words of a completed length `n` — any fully enumerated depth
//! certifies an upper bound, so the published value is a running minimum
//! over completed depths and incomplete depths never contribute.
//!
//! All enumeration runs through one depth-first scan over the product tree
//! that reuses prefix products, counts every visited node against an
//! explicit budget, and partitions work by first letter. Partitions are
//! disjoint subtrees merged in letter order with a strictly-greater
//! improvement rule, so results are identical for any thread count; one
//! thread simply runs the partitions in sequence.

use crate::config::Config;
use crate::eigen::{operator_norm, spectral_radius};
use crate::error::{Error, Result};
use crate::words::{is_lyndon, nth_root_scaled, walk_products, MatrixSet, Walk, Word};
use rayon::prelude::*;

/// One row of the convergence table: the best lower-bound candidate seen
/// at exactly this depth (if any word of this length is a Lyndon
/// representative) and the running-minimum upper bound over completed
/// depths up to this one (once any depth has completed).
#[derive(Debug, Clone, PartialEq)]
pub struct DepthRow {
    pub depth: usize,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

/// Result of [`refine`]: certified bounds, the witness realizing the lower
/// endpoint, and the per-depth convergence table.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    pub lower: f64,
    pub lower_witness: Word,
    pub lower_depth: usize,
    pub upper: f64,
    pub upper_depth: usize,
    /// `upper - lower`.
    pub gap: f64,
    pub per_depth: Vec<DepthRow>,
    /// False when the node budget ran out before the gap target was met.
    pub complete: bool,
    pub nodes_used: u64,
}

/// Result of [`lower_bound`]: the maximal `rho^(1/n)` candidate and the
/// lexicographically least witness realizing it.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerBound {
    pub value: f64,
    pub witness: Word,
    pub witness_depth: usize,
    /// Deepest depth whose word set was fully enumerated.
    pub deepest_complete: usize,
    /// True when every requested depth completed within budget.
    pub complete: bool,
    pub nodes_used: u64,
}

/// Result of [`upper_bound`]: the smallest completed-depth norm maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct UpperBound {
    pub value: f64,
    /// Depth realizing the minimum (smallest such depth on ties).
    pub at_depth: usize,
    pub deepest_complete: usize,
    pub complete: bool,
    pub nodes_used: u64,
}

/// Near-optimal words of a fixed length: every word whose norm is within
/// the relative tie tolerance of the maximum, in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct TiedOptimal {
    /// `(word, norm of its product)`, lexicographic order; the first entry
    /// is the optimal word.
    pub words: Vec<(Word, f64)>,
    /// True when the tie cap cut the list short.
    pub truncated: bool,
}

/// Best lower-bound candidate: value with its witness, merged under a
/// strictly-greater rule so the first (lexicographically least) witness of
/// the maximal value survives.
#[derive(Debug, Clone)]
struct Candidate {
    value: f64,
    word: Vec<usize>,
}

/// Everything one tree scan learns. `visits[j]`/`expected[j]` decide which
/// depths were fully enumerated (index 0 is depth 1).
#[derive(Debug, Clone)]
struct ScanSummary {
    visits: Vec<u64>,
    expected: Vec<u128>,
    /// Per-depth max of `norm^(1/j)` over visited words.
    upper_at: Vec<Option<f64>>,
    /// Per-depth max of `rho^(1/j)` over visited Lyndon words.
    lower_at: Vec<Option<f64>>,
    best: Option<(Candidate, usize)>,
    nodes_used: u64,
}

impl ScanSummary {
    fn new(horizon: usize, k: usize) -> Self {
        let expected = (1..=horizon)
            .map(|j| (k as u128).checked_pow(j as u32).unwrap_or(u128::MAX))
            .collect();
        ScanSummary {
            visits: vec![0; horizon],
            expected,
            upper_at: vec![None; horizon],
            lower_at: vec![None; horizon],
            best: None,
            nodes_used: 0,
        }
    }

    fn complete_at(&self, depth: usize) -> bool {
        self.visits[depth - 1] as u128 == self.expected[depth - 1]
    }

    /// Deepest `j` with depths `1..=j` all fully enumerated.
    fn deepest_complete(&self) -> usize {
        let mut deepest = 0;
        for j in 1..=self.visits.len() {
            if self.complete_at(j) {
                deepest = j;
            } else {
                break;
            }
        }
        deepest
    }

    /// Folds `other` (the partition for a later first letter) into `self`.
    /// Strictly-greater improvement keeps the earlier partition's witness
    /// on ties, which together with preorder traversal inside partitions
    /// yields the lexicographically least witness overall.
    fn absorb(&mut self, other: ScanSummary) {
        for j in 0..self.visits.len() {
            self.visits[j] += other.visits[j];
            self.upper_at[j] = merge_max(self.upper_at[j], other.upper_at[j]);
            self.lower_at[j] = merge_max(self.lower_at[j], other.lower_at[j]);
        }
        self.nodes_used += other.nodes_used;
        if let Some((cand, depth)) = other.best {
            match &self.best {
                Some((mine, _)) if mine.value >= cand.value => {}
                _ => self.best = Some((cand, depth)),
            }
        }
    }
}

fn merge_max(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Pruning thresholds frozen at the start of a scan: natural logs of the
/// current bounds, taken while both are finite and positive.
#[derive(Debug, Clone, Copy)]
struct PruneSnapshot {
    ln_lower: f64,
    ln_upper: f64,
}

/// What the scan computes at each node.
#[derive(Debug, Clone, Copy)]
struct ScanGoals {
    norms: bool,
    rho: bool,
}

/// Scans the whole product tree to `horizon`, partitioned by first letter.
/// The budget is split across partitions up front (evenly, remainder to
/// the earliest letters), which keeps the outcome independent of execution
/// order and thread count.
fn scan(
    set: &MatrixSet,
    horizon: usize,
    goals: ScanGoals,
    prune: Option<PruneSnapshot>,
    budget: u64,
    threads: usize,
) -> Result<ScanSummary> {
    let k = set.len();
    let base = budget / k as u64;
    let rem = (budget % k as u64) as usize;
    let quotas: Vec<u64> = (0..k).map(|i| base + u64::from(i < rem)).collect();

    let run = |letter: usize| -> Result<ScanSummary> {
        scan_partition(set, letter + 1, horizon, goals, prune, quotas[letter])
    };

    let partials: Vec<Result<ScanSummary>> = if threads > 1 {
        (0..k).into_par_iter().map(run).collect()
    } else {
        (0..k).map(run).collect()
    };

    let mut merged = ScanSummary::new(horizon, k);
    for partial in partials {
        merged.absorb(partial?);
    }
    Ok(merged)
}

/// Serial preorder scan of one first-letter subtree.
fn scan_partition(
    set: &MatrixSet,
    letter: usize,
    horizon: usize,
    goals: ScanGoals,
    prune: Option<PruneSnapshot>,
    mut quota: u64,
) -> Result<ScanSummary> {
    let mut summary = ScanSummary::new(horizon, set.len());
    let budget = quota;
    let mut failure: Option<Error> = None;

    walk_products(set, Some(letter), horizon, &mut quota, &mut |word,
                                                                prod,
                                                                pow2| {
        if failure.is_some() {
            return Walk::Skip;
        }
        let depth = word.len();
        summary.visits[depth - 1] += 1;

        let mut ln_norm = None;
        if goals.norms || prune.is_some() {
            match operator_norm(prod) {
                Ok(norm) => {
                    ln_norm = Some(norm.ln() + pow2 as f64 * std::f64::consts::LN_2);
                    if goals.norms {
                        let value = nth_root_scaled(norm, pow2, depth);
                        summary.upper_at[depth - 1] =
                            merge_max(summary.upper_at[depth - 1], Some(value));
                    }
                }
                Err(e) => {
                    failure = Some(e);
                    return Walk::Skip;
                }
            }
        }

        if goals.rho && is_lyndon(word) {
            match spectral_radius(prod) {
                Ok(rho) => {
                    let value = nth_root_scaled(rho, pow2, depth);
                    summary.lower_at[depth - 1] =
                        merge_max(summary.lower_at[depth - 1], Some(value));
                    let improves = match &summary.best {
                        Some((cand, _)) => value > cand.value,
                        None => true,
                    };
                    if improves {
                        summary.best = Some((
                            Candidate {
                                value,
                                word: word.to_vec(),
                            },
                            depth,
                        ));
                    }
                }
                Err(e) => {
                    failure = Some(e);
                    return Walk::Skip;
                }
            }
        }

        if let (Some(snapshot), Some(ln_norm)) = (prune, ln_norm) {
            if depth < horizon {
                let optimistic = ln_norm + (horizon - depth) as f64 * snapshot.ln_upper;
                if optimistic < horizon as f64 * snapshot.ln_lower {
                    return Walk::Skip;
                }
            }
        }
        Walk::Descend
    })?;

    if let Some(e) = failure {
        return Err(e);
    }
    summary.nodes_used = budget - quota;
    Ok(summary)
}

fn ensure_minimum_budget(set: &MatrixSet, budget: u64) -> Result<()> {
    let k = set.len() as u64;
    if budget < k {
        return Err(Error::BudgetExceeded {
            required: k as u128,
            budget,
        });
    }
    Ok(())
}

/// Certified lower bound: the largest `rho(A(w))^(1/n)` over Lyndon words
/// of length `n <= max_depth`, with the lexicographically least witness of
/// the maximal value. Spectral radii are invariant under cyclic rotation,
/// so Lyndon representatives lose nothing against the full word set.
///
/// Runs within the configured node budget; when it runs out the result is
/// flagged incomplete but remains a valid lower bound over the words that
/// were visited. The budget must at least cover the single-letter words.
pub fn lower_bound(set: &MatrixSet, max_depth: usize, cfg: &Config) -> Result<LowerBound> {
    ensure_minimum_budget(set, cfg.word_budget)?;
    let goals = ScanGoals {
        norms: false,
        rho: true,
    };
    let summary = scan(set, max_depth, goals, None, cfg.word_budget, cfg.threads)?;
    let (cand, depth) = summary
        .best
        .clone()
        .expect("budget covers depth 1, which always has Lyndon words");
    let deepest = summary.deepest_complete();
    Ok(LowerBound {
        value: cand.value,
        witness: Word::new(cand.word, set.len())?,
        witness_depth: depth,
        deepest_complete: deepest,
        complete: deepest == max_depth,
        nodes_used: summary.nodes_used,
    })
}

/// Certified upper bound: `max |A(w)|^(1/n)` over all words of length `n`,
/// minimized over the fully enumerated depths `n <= max_depth`. Norms are
/// not cyclic-invariant, so each depth enumerates every word. Depths cut
/// off by the budget are discarded — a partially scanned depth certifies
/// nothing — and the result is flagged incomplete.
pub fn upper_bound(set: &MatrixSet, max_depth: usize, cfg: &Config) -> Result<UpperBound> {
    ensure_minimum_budget(set, cfg.word_budget)?;
    let goals = ScanGoals {
        norms: true,
        rho: false,
    };
    let summary = scan(set, max_depth, goals, None, cfg.word_budget, cfg.threads)?;
    let deepest = summary.deepest_complete();
    let mut value = f64::INFINITY;
    let mut at_depth = 0;
    for j in 1..=deepest {
        let candidate = summary.upper_at[j - 1].expect("complete depth has a norm maximum");
        if candidate < value {
            value = candidate;
            at_depth = j;
        }
    }
    if at_depth == 0 {
        // Even depth 1 was cut off; the minimum budget check makes this
        // unreachable, but keep the failure structured rather than silent.
        return Err(Error::BudgetExceeded {
            required: set.len() as u128,
            budget: cfg.word_budget,
        });
    }
    Ok(UpperBound {
        value,
        at_depth,
        deepest_complete: deepest,
        complete: deepest == max_depth,
        nodes_used: summary.nodes_used,
    })
}

fn tree_nodes(k: usize, depth: usize) -> u128 {
    let mut total: u128 = 0;
    let mut level: u128 = 1;
    for _ in 0..depth {
        level = level.saturating_mul(k as u128);
        total = total.saturating_add(level);
    }
    total
}

/// The norm-maximal word of length exactly `n` with its norm, ties broken
/// lexicographically least. Errors when the product tree through depth `n`
/// does not fit the node budget.
pub fn optimal_word(set: &MatrixSet, n: usize, cfg: &Config) -> Result<(Word, f64)> {
    let tied = optimal_words_tied(set, n, cfg)?;
    let (word, norm) = tied
        .words
        .into_iter()
        .next()
        .expect("tied list contains at least the maximum");
    Ok((word, norm))
}

/// All words of length `n` whose product norm ties the maximum within
/// `cfg.tie_rel_tol` (relative), capped at `cfg.tie_cap` entries, in
/// lexicographic order. The scan is serial: tie sets are small and the
/// call sites probe short lengths.
pub fn optimal_words_tied(set: &MatrixSet, n: usize, cfg: &Config) -> Result<TiedOptimal> {
    if n == 0 {
        return Err(Error::EmptyWord);
    }
    let required = tree_nodes(set.len(), n);
    if required > cfg.word_budget as u128 {
        return Err(Error::BudgetExceeded {
            required,
            budget: cfg.word_budget,
        });
    }

    let mut best = f64::NEG_INFINITY;
    let mut tied: Vec<(Vec<usize>, f64)> = Vec::new();
    let mut truncated = false;
    let mut quota = u64::MAX;
    let mut failure: Option<Error> = None;

    walk_products(set, None, n, &mut quota, &mut |word, prod, pow2| {
        if failure.is_some() {
            return Walk::Skip;
        }
        if word.len() < n {
            return Walk::Descend;
        }
        match operator_norm(prod) {
            Ok(raw) => {
                let norm = if pow2 == 0 {
                    raw
                } else {
                    nth_root_scaled(raw, pow2, 1)
                };
                if norm > best {
                    best = norm;
                    let keep = best * (1.0 - cfg.tie_rel_tol);
                    tied.retain(|(_, v)| *v >= keep);
                }
                if norm >= best * (1.0 - cfg.tie_rel_tol) {
                    if tied.len() < cfg.tie_cap {
                        tied.push((word.to_vec(), norm));
                    } else {
                        // Stays set even if a later maximum would have
                        // evicted the refused word: conservatively honest.
                        truncated = true;
                    }
                }
            }
            Err(e) => failure = Some(e),
        }
        Walk::Skip
    })?;

    if let Some(e) = failure {
        return Err(e);
    }
    let words = tied
        .into_iter()
        .map(|(letters, v)| Ok((Word::new(letters, set.len())?, v)))
        .collect::<Result<Vec<_>>>()?;
    Ok(TiedOptimal { words, truncated })
}

/// Branch-and-bound refinement: scans horizons 1, 2, 4, ... (clamped to
/// `cfg.max_depth`) until the gap closes to `cfg.refine_tol` or the budget
/// runs out. Each horizon prunes a prefix `p` at depth `j` when
/// `|A(p)| * U^(h-j) < L^h` against bounds frozen at the horizon's start —
/// a pruned or truncated depth never feeds the upper bound, while every
/// visited Lyndon word remains a valid lower-bound candidate, so both
/// reported endpoints stay certified under arbitrary pruning.
pub fn refine(set: &MatrixSet, cfg: &Config) -> Result<BoundsReport> {
    ensure_minimum_budget(set, cfg.word_budget)?;
    let goals = ScanGoals {
        norms: true,
        rho: true,
    };

    let mut budget_left = cfg.word_budget;
    let mut nodes_total = 0u64;
    let mut best: Option<(Candidate, usize)> = None;
    let mut lower_rows: Vec<Option<f64>> = vec![None; cfg.max_depth];
    let mut upper_rows: Vec<Option<f64>> = vec![None; cfg.max_depth];

    let mut horizon = 1usize;
    loop {
        let horizon_now = horizon.min(cfg.max_depth);
        let (lower_now, upper_now) = current_endpoints(&best, &upper_rows);
        let prune = match (lower_now, upper_now) {
            (l, Some(u)) if l > 0.0 && u.is_finite() => Some(PruneSnapshot {
                ln_lower: l.ln(),
                ln_upper: u.ln(),
            }),
            _ => None,
        };

        let summary = scan(set, horizon_now, goals, prune, budget_left, cfg.threads)?;
        nodes_total += summary.nodes_used;
        budget_left -= summary.nodes_used;

        if let Some((cand, depth)) = summary.best.clone() {
            let improves = match &best {
                Some((incumbent, _)) => cand.value > incumbent.value,
                None => true,
            };
            if improves {
                best = Some((cand, depth));
            }
        }
        for j in 1..=horizon_now {
            lower_rows[j - 1] = merge_max(lower_rows[j - 1], summary.lower_at[j - 1]);
            if summary.complete_at(j) {
                // Re-scans reproduce the same full-depth maximum, so
                // overwriting is idempotent; merge keeps it explicit.
                upper_rows[j - 1] = merge_max(upper_rows[j - 1], summary.upper_at[j - 1]);
            }
        }

        let (lower, upper) = current_endpoints(&best, &upper_rows);
        let gap_closed = match upper {
            Some(u) => u - lower <= cfg.refine_tol,
            None => false,
        };
        // Stop on success, on the depth cap, or when the remaining budget
        // cannot even cover the single-letter level of another scan.
        if gap_closed || horizon_now == cfg.max_depth || budget_left < set.len() as u64 {
            break;
        }
        horizon *= 2;
    }

    let (cand, lower_depth) = best.expect("depth 1 always yields a candidate within budget");
    let upper = upper_rows
        .iter()
        .flatten()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let upper_depth = upper_rows
        .iter()
        .position(|row| row.map(|v| v == upper).unwrap_or(false))
        .map(|i| i + 1)
        .unwrap_or(0);
    if upper_depth == 0 {
        return Err(Error::BudgetExceeded {
            required: set.len() as u128,
            budget: cfg.word_budget,
        });
    }

    let scanned = lower_rows
        .iter()
        .zip(&upper_rows)
        .rposition(|(l, u)| l.is_some() || u.is_some())
        .map(|i| i + 1)
        .unwrap_or(0);
    let mut per_depth = Vec::with_capacity(scanned);
    let mut running: Option<f64> = None;
    for j in 1..=scanned {
        if let Some(u) = upper_rows[j - 1] {
            running = Some(running.map_or(u, |r| r.min(u)));
        }
        per_depth.push(DepthRow {
            depth: j,
            lower: lower_rows[j - 1],
            upper: running,
        });
    }

    let gap = upper - cand.value;
    Ok(BoundsReport {
        lower: cand.value,
        lower_witness: Word::new(cand.word, set.len())?,
        lower_depth,
        upper,
        upper_depth,
        gap,
        per_depth,
        complete: gap <= cfg.refine_tol,
        nodes_used: nodes_total,
    })
}

fn current_endpoints(
    best: &Option<(Candidate, usize)>,
    upper_rows: &[Option<f64>],
) -> (f64, Option<f64>) {
    let lower = best.as_ref().map(|(c, _)| c.value).unwrap_or(0.0);
    let upper = upper_rows
        .iter()
        .flatten()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let upper = if upper.is_finite() { Some(upper) } else { None };
    (lower, upper)
}
