//! Shared helpers for tests: seeded generators and slow, independent
//! oracles that deliberately avoid the library's own fast paths.
//!
//! Everything here favors transparency over speed — characteristic
//! polynomials via the trace recurrence, root isolation by sign-change
//! bisection, exhaustive word enumeration — so the production kernels can
//! be checked against implementations with entirely different failure
//! modes. Compiled only for tests or under the `testutil` feature.

use crate::eigen::{spectral_radius, Complex64};
use crate::matrix::Matrix;
use crate::words::{all_words, evaluate, MatrixSet, Word};
use rand::distributions::uniform::{SampleRange, SampleUniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Deterministic RNG for reproducible tests.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform sample from a range, seeded-RNG flavored.
pub fn gen_range<T, R>(rng: &mut ChaCha8Rng, range: R) -> T
where
    T: SampleUniform,
    R: SampleRange<T>,
{
    rng.gen_range(range)
}

/// Dense matrix with entries uniform in `[lo, hi)`.
pub fn random_matrix(rng: &mut ChaCha8Rng, dim: usize, lo: f64, hi: f64) -> Matrix {
    let data: Vec<f64> = (0..dim * dim).map(|_| rng.gen_range(lo..hi)).collect();
    Matrix::new(dim, data).expect("finite random entries")
}

/// Random family of `k` matrices of one dimension.
pub fn random_set(rng: &mut ChaCha8Rng, k: usize, dim: usize, lo: f64, hi: f64) -> MatrixSet {
    let members = (0..k).map(|_| random_matrix(rng, dim, lo, hi)).collect();
    MatrixSet::new(members).expect("non-empty, consistent dims")
}

/// Coefficients `[c0, c1, ..., c_{d-1}]` of the monic characteristic
/// polynomial `x^d + c_{d-1} x^{d-1} + ... + c1 x + c0`, computed by the
/// Faddeev–LeVerrier trace recurrence — no eigenvalue code involved.
pub fn char_poly_coeffs(a: &Matrix) -> Vec<f64> {
    let d = a.dim();
    let mut coeffs = vec![0.0; d];
    let identity = Matrix::identity(d).expect("d >= 1");
    let mut m = a.clone();
    for k in 1..=d {
        let c = -trace(&m) / k as f64;
        coeffs[d - k] = c;
        if k < d {
            let shifted = add(&m, &identity.scale(c).expect("finite coefficient"));
            m = a.mul(&shifted).expect("matching dims");
        }
    }
    coeffs
}

fn trace(m: &Matrix) -> f64 {
    (0..m.dim()).map(|i| m.get(i, i)).sum()
}

fn add(a: &Matrix, b: &Matrix) -> Matrix {
    let data: Vec<f64> = a
        .entries()
        .iter()
        .zip(b.entries())
        .map(|(x, y)| x + y)
        .collect();
    Matrix::new(a.dim(), data).expect("finite sums")
}

/// Evaluates the monic polynomial with low-order coefficients `coeffs` at
/// a complex point, returning `|p(z)|` divided by the magnitude sum of the
/// evaluated terms — a conditioning-aware residual.
pub fn poly_residual(coeffs: &[f64], z: Complex64) -> f64 {
    let mut value = Complex64::new(1.0, 0.0);
    let mut scale = 1.0_f64;
    for &c in coeffs.iter().rev() {
        scale = scale * z.norm() + c.abs();
        value = value * z + c;
    }
    value.norm() / scale.max(1.0)
}

fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    let mut value = 1.0_f64;
    for &c in coeffs.iter().rev() {
        value = value * x + c;
    }
    value
}

/// Real roots of the monic polynomial inside `[lo, hi]`, isolated by a
/// fine sign-change scan and refined by bisection. Returns roots in
/// ascending order; multiple roots without a sign change are not found,
/// which is fine for the simple-spectrum cases the tests use.
pub fn real_roots_by_bisection(coeffs: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    const SAMPLES: usize = 8000;
    let mut roots = Vec::new();
    let step = (hi - lo) / SAMPLES as f64;
    let mut x_prev = lo;
    let mut f_prev = poly_eval(coeffs, x_prev);
    for i in 1..=SAMPLES {
        let x = lo + step * i as f64;
        let f = poly_eval(coeffs, x);
        if f_prev == 0.0 {
            roots.push(x_prev);
        } else if f_prev * f < 0.0 {
            let (mut a, mut b) = (x_prev, x);
            let (mut fa, _) = (f_prev, f);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if (b - a).abs() <= 1e-14 * mid.abs().max(1.0) {
                    break;
                }
                let fm = poly_eval(coeffs, mid);
                if fm == 0.0 {
                    a = mid;
                    b = mid;
                    break;
                }
                if fa * fm < 0.0 {
                    b = mid;
                } else {
                    a = mid;
                    fa = fm;
                }
            }
            roots.push(0.5 * (a + b));
        }
        x_prev = x;
        f_prev = f;
    }
    if f_prev == 0.0 {
        roots.push(x_prev);
    }
    roots
}

/// Count of aperiodic necklaces (equivalently Lyndon words) of length `n`
/// over `k` letters, by Moebius inversion over the divisors of `n`.
/// Saturates at `u128::MAX` if the powers overflow.
pub fn aperiodic_necklace_count(k: usize, n: usize) -> u128 {
    assert!(n > 0);
    let divisors: Vec<usize> = (1..=n).filter(|e| n % e == 0).collect();
    let mut total: i128 = 0;
    for e in divisors {
        let mu = moebius_slow(e);
        if mu == 0 {
            continue;
        }
        let Some(p) = (k as u128).checked_pow((n / e) as u32) else {
            return u128::MAX;
        };
        if p > i128::MAX as u128 {
            return u128::MAX;
        }
        total += mu as i128 * p as i128;
    }
    (total.max(0) as u128) / n as u128
}

fn moebius_slow(n: usize) -> i32 {
    // Count prime factors by trial division, squarefree check included.
    let mut m = n;
    let mut factors = 0;
    let mut p = 2;
    while p <= m {
        if m % p == 0 {
            m /= p;
            factors += 1;
            if m % p == 0 {
                return 0;
            }
        } else {
            p += 1;
        }
    }
    if factors % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Minimal rotation by trying every shift — the quadratic oracle.
pub fn brute_min_rotation(w: &[usize]) -> Vec<usize> {
    let n = w.len();
    let mut best = w.to_vec();
    for r in 1..n {
        let mut cand = Vec::with_capacity(n);
        cand.extend_from_slice(&w[r..]);
        cand.extend_from_slice(&w[..r]);
        if cand < best {
            best = cand;
        }
    }
    best
}

/// Largest `rho(product)^(1/n)` over every word of length exactly `n`,
/// by exhaustive enumeration.
pub fn brute_lower_at_depth(set: &MatrixSet, n: usize) -> f64 {
    let mut best = 0.0_f64;
    for w in all_words(set.len(), n, u64::MAX).expect("depth fits budget") {
        let p = evaluate(set, &w).expect("no overflow at test depths");
        let value = spectral_radius(&p).expect("eigen converges").powf(1.0 / n as f64);
        if value > best {
            best = value;
        }
    }
    best
}

/// Largest `norm(product)^(1/n)` over every word of length exactly `n`.
pub fn brute_upper_at_depth(set: &MatrixSet, n: usize) -> f64 {
    let mut best = 0.0_f64;
    for w in all_words(set.len(), n, u64::MAX).expect("depth fits budget") {
        let p = evaluate(set, &w).expect("no overflow at test depths");
        let value = crate::eigen::operator_norm(&p)
            .expect("eigen converges")
            .powf(1.0 / n as f64);
        if value > best {
            best = value;
        }
    }
    best
}

/// Exhaustive best switching sequence for a two-matrix system: maximizes
/// the Euclidean norm of `A_{s_h} ... A_{s_1} x0` over all `2^horizon`
/// sequences. Returns the winning sequence (entries 0/1, first applied
/// first) and the final norm; ties keep the earlier sequence in
/// lexicographic order.
pub fn brute_best_trajectory(
    a0: &Matrix,
    a1: &Matrix,
    x0: &[f64],
    horizon: usize,
) -> (Vec<u8>, f64) {
    assert!(horizon <= 24, "exhaustive oracle limited to small horizons");
    let mut best_seq = vec![0u8; horizon];
    let mut best_norm = -1.0_f64;
    for mask in 0u64..(1u64 << horizon) {
        let mut x = x0.to_vec();
        let mut seq = Vec::with_capacity(horizon);
        for step in 0..horizon {
            let bit = ((mask >> step) & 1) as u8;
            seq.push(bit);
            let m = if bit == 0 { a0 } else { a1 };
            x = m.apply(&x);
        }
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > best_norm {
            best_norm = norm;
            best_seq = seq;
        }
    }
    (best_seq, best_norm)
}

/// Best rational approximation of `x` with denominator at most `q_max`,
/// by scanning every denominator. Ties prefer the smaller denominator.
pub fn brute_best_rational(x: f64, q_max: u64) -> (u64, u64) {
    let mut best = (0u64, 1u64);
    let mut best_err = (x - 0.0).abs();
    for q in 1..=q_max {
        let p = (x * q as f64).round().max(0.0) as u64;
        let err = (x - p as f64 / q as f64).abs();
        if err < best_err - 1e-18 {
            let g = gcd(p.max(1), q);
            best = if p == 0 { (0, 1) } else { (p / g, q / g) };
            best_err = err;
        }
    }
    best
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Convenience constructor for words in oracle comparisons.
pub fn word(letters: &[usize], alphabet: usize) -> Word {
    Word::new(letters.to_vec(), alphabet).expect("valid test word")
}
