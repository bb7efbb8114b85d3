/// Tunable tolerances and budgets shared across the library.
///
/// Every knob has a conservative default; `Config::default()` is the
/// configuration the command-line tool runs with when no flags are given.
/// Tolerances written into certificates are copied from the configuration
/// that produced them, so replays can use the original values.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    /// Hard cap on matrix dimension accepted into a `MatrixSet`.
    pub dim_cap: usize,
    /// Relative symmetry tolerance: `|a_ij - a_ji| <= sym_tol * max(1, max|a|)`.
    pub sym_tol: f64,
    /// Relative tolerance for structural equality checks between matrices.
    pub eq_tol: f64,
    /// Relative tolerance for product-membership checks (is this product a
    /// member word of the semigroup slice we enumerated?).
    pub membership_tol: f64,
    /// Maximum number of word products any single enumeration may touch.
    pub word_budget: u64,
    /// Largest optimal-word length swept by the Gram membership criterion.
    pub gram_depth_max: usize,
    /// Relative norm window inside which optimal words count as tied.
    pub tie_rel_tol: f64,
    /// Maximum number of tied optimal words kept for membership probing.
    pub tie_cap: usize,
    /// Target gap (`upper - lower`) for iterative refinement.
    pub refine_tol: f64,
    /// Depth ceiling for enumeration-based bounds and refinement.
    pub max_depth: usize,
    /// Agreement tolerance between certificate values and refined bounds.
    pub value_tol: f64,
    /// Margin below 1 required before a family is declared stable.
    pub stability_margin: f64,
    /// Number of angular grid points for the extremal-norm iteration.
    pub grid: usize,
    /// Convergence target for the extremal-norm bracket width.
    pub bracket_tol: f64,
    /// Sweep cap for the extremal-norm iteration.
    pub max_sweeps: usize,
    /// Steps discarded before switching-frequency statistics start.
    pub burn_in: usize,
    /// Steps of extremal trajectory used for frequency statistics.
    pub horizon: usize,
    /// Largest denominator considered when snapping a frequency to a rational.
    pub q_max: u64,
    /// Maximum distance between the measured frequency and the snapped rational.
    pub rational_tol: f64,
    /// Worker threads for enumeration scans; 1 means fully serial.
    /// Results are byte-identical for every thread count.
    pub threads: usize,
    /// Optional explicit role assignment for the shared-ray family detector,
    /// overriding automatic classification (1-based member indices).
    pub ray_roles: Option<RayRoles>,
}

/// Explicit member roles for the shared-ray family detector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RayRoles {
    /// Members carrying off-diagonals on the common ray (1-based).
    pub ray_members: Vec<usize>,
    /// The optional norm-bounded companion member (1-based).
    pub companion: Option<usize>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            dim_cap: 32,
            sym_tol: 1e-12,
            eq_tol: 1e-9,
            membership_tol: 1e-8,
            word_budget: 10_000_000,
            gram_depth_max: 4,
            tie_rel_tol: 1e-12,
            tie_cap: 64,
            refine_tol: 1e-9,
            max_depth: 8,
            value_tol: 1e-6,
            stability_margin: 1e-9,
            grid: 4096,
            bracket_tol: 1e-5,
            max_sweeps: 5000,
            burn_in: 1_000,
            horizon: 100_000,
            q_max: 64,
            rational_tol: 1e-3,
            threads: 1,
            ray_roles: None,
        }
    }
}
