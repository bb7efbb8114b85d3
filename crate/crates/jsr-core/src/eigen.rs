//! Dense eigenvalue kernels for small real matrices.
//!
//! Two routes, chosen by structure:
//!
//! * general spectra: balancing, Householder reduction to Hessenberg form,
//!   then an implicitly shifted double QR iteration (Francis steps with the
//!   usual exceptional shifts). Eigenvalues only; no Schur vectors are
//!   accumulated.
//! * symmetric spectra: cyclic Jacobi sweeps, which also back the Euclidean
//!   operator norm through the Gram matrix.
//!
//! The QR iteration aborts with a structured error after `SWEEP_CAP_FACTOR *
//! dim^2` double steps rather than returning unconverged values.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub use num_complex::Complex64;

/// Total double-QR steps allowed per matrix: `SWEEP_CAP_FACTOR * dim^2`.
pub const SWEEP_CAP_FACTOR: usize = 100;

/// Machine epsilon for binary64, the deflation threshold unit.
const EPS: f64 = 2.220446049250313e-16;

/// Eigenvalues of a general real square matrix, sorted by descending
/// modulus (ties by descending real part, then descending imaginary part).
pub fn eigenvalues(a: &Matrix) -> Result<Vec<Complex64>> {
    let d = a.dim();
    let mut eig = match d {
        1 => vec![Complex64::new(a.get(0, 0), 0.0)],
        2 => eigenvalues_2x2(a.get(0, 0), a.get(0, 1), a.get(1, 0), a.get(1, 1)).to_vec(),
        _ => {
            let mut h = a.entries().to_vec();
            balance(&mut h, d);
            hessenberg(&mut h, d);
            francis_qr(&mut h, d)?
        }
    };
    eig.sort_by(|x, y| {
        (y.norm_sqr(), y.re, y.im)
            .partial_cmp(&(x.norm_sqr(), x.re, x.im))
            .expect("eigenvalues are finite")
    });
    Ok(eig)
}

/// Spectral radius: largest eigenvalue modulus.
pub fn spectral_radius(a: &Matrix) -> Result<f64> {
    let eig = eigenvalues(a)?;
    Ok(eig
        .iter()
        .map(|z| z.norm())
        .fold(0.0_f64, |m, v| m.max(v)))
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi sweeps, sorted
/// descending. The input must be symmetric entrywise within
/// `sym_tol * max(1, max|a|)`; it is symmetrized exactly before iterating.
pub fn symmetric_eigenvalues(a: &Matrix, sym_tol: f64) -> Result<Vec<f64>> {
    let d = a.dim();
    let scale = 1.0_f64.max(a.max_abs());
    for i in 0..d {
        for j in i + 1..d {
            let diff = (a.get(i, j) - a.get(j, i)).abs();
            let bound = sym_tol * scale;
            if diff > bound {
                return Err(Error::NotSymmetric {
                    row: i,
                    col: j,
                    diff,
                    bound,
                });
            }
        }
    }
    let mut m = a.entries().to_vec();
    for i in 0..d {
        for j in i + 1..d {
            let avg = 0.5 * (m[i * d + j] + m[j * d + i]);
            m[i * d + j] = avg;
            m[j * d + i] = avg;
        }
    }
    jacobi_eigenvalues(&mut m, d)
}

/// Euclidean operator norm via the Gram route: `||a|| = sqrt(rho(a^T a))`.
/// The Gram matrix is exactly symmetric by construction, so the Jacobi
/// path applies unconditionally.
pub fn operator_norm(a: &Matrix) -> Result<f64> {
    let g = a.gram();
    let mut m = g.entries().to_vec();
    let eig = jacobi_eigenvalues(&mut m, a.dim())?;
    // Roundoff may push the top Gram eigenvalue of a near-zero matrix
    // slightly negative; the true value is nonnegative.
    Ok(eig[0].max(0.0).sqrt())
}

fn eigenvalues_2x2(a: f64, b: f64, c: f64, d: f64) -> [Complex64; 2] {
    let half_tr = 0.5 * (a + d);
    let det = a * d - b * c;
    let disc = half_tr * half_tr - det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        // Add the matching-sign half, then recover the small root from the
        // product to avoid cancellation.
        let l1 = if half_tr >= 0.0 {
            half_tr + s
        } else {
            half_tr - s
        };
        let l2 = if l1 != 0.0 { det / l1 } else { 0.0 };
        [Complex64::new(l1, 0.0), Complex64::new(l2, 0.0)]
    } else {
        let s = (-disc).sqrt();
        [Complex64::new(half_tr, s), Complex64::new(half_tr, -s)]
    }
}

/// Parlett-Reinsch balancing with radix-2 scaling. Exact in floating point
/// (powers of two), so eigenvalues are untouched while norms equalize.
fn balance(h: &mut [f64], d: usize) {
    const RADIX: f64 = 2.0;
    const SQRDX: f64 = RADIX * RADIX;
    loop {
        let mut done = true;
        for i in 0..d {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..d {
                if j != i {
                    c += h[j * d + i].abs();
                    r += h[i * d + j].abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / RADIX;
                let mut f = 1.0;
                let s = c + r;
                while c < g {
                    f *= RADIX;
                    c *= SQRDX;
                }
                g = r * RADIX;
                while c > g {
                    f /= RADIX;
                    c /= SQRDX;
                }
                if (c + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    for j in 0..d {
                        h[i * d + j] *= g;
                    }
                    for j in 0..d {
                        h[j * d + i] *= f;
                    }
                }
            }
        }
        if done {
            return;
        }
    }
}

/// Householder reduction to upper Hessenberg form. The annihilated entries
/// are written back as exact zeros.
fn hessenberg(h: &mut [f64], d: usize) {
    if d < 3 {
        return;
    }
    let high = d - 1;
    let mut ort = vec![0.0; d];
    for m in 1..high {
        let mut scale = 0.0;
        for i in m..=high {
            scale += h[i * d + m - 1].abs();
        }
        if scale == 0.0 {
            continue;
        }
        let mut hh = 0.0;
        for i in (m..=high).rev() {
            ort[i] = h[i * d + m - 1] / scale;
            hh += ort[i] * ort[i];
        }
        let mut g = hh.sqrt();
        if ort[m] > 0.0 {
            g = -g;
        }
        hh -= ort[m] * g;
        ort[m] -= g;
        for j in m..d {
            let mut f = 0.0;
            for i in (m..=high).rev() {
                f += ort[i] * h[i * d + j];
            }
            f /= hh;
            for i in m..=high {
                h[i * d + j] -= f * ort[i];
            }
        }
        for i in 0..=high {
            let mut f = 0.0;
            for j in (m..=high).rev() {
                f += ort[j] * h[i * d + j];
            }
            f /= hh;
            for j in m..=high {
                h[i * d + j] -= f * ort[j];
            }
        }
        h[m * d + m - 1] = scale * g;
        for i in m + 1..=high {
            h[i * d + m - 1] = 0.0;
        }
    }
}

/// Implicit double-shift QR on an upper Hessenberg matrix, eigenvalues only.
/// Exceptional shifts fire after 10 and 30 stalled iterations on a block;
/// the global step budget is `SWEEP_CAP_FACTOR * d^2`.
fn francis_qr(h: &mut [f64], d: usize) -> Result<Vec<Complex64>> {
    let cap = SWEEP_CAP_FACTOR * d * d;
    let mut steps = 0usize;
    let mut eig = Vec::with_capacity(d);

    let mut norm = 0.0;
    for i in 0..d {
        for j in i.saturating_sub(1)..d {
            norm += h[i * d + j].abs();
        }
    }

    let mut n = d - 1; // active block end (inclusive)
    let mut exshift = 0.0;
    let mut iter = 0usize;
    loop {
        // Deflation scan: find the active block start.
        let mut l = n;
        while l > 0 {
            let mut s = h[(l - 1) * d + l - 1].abs() + h[l * d + l].abs();
            if s == 0.0 {
                s = norm;
            }
            // <= so an exactly zero subdiagonal deflates even when the
            // neighborhood (and hence s) is all zeros.
            if h[l * d + l - 1].abs() <= EPS * s {
                break;
            }
            l -= 1;
        }

        if l == n {
            // One real eigenvalue converged.
            eig.push(Complex64::new(h[n * d + n] + exshift, 0.0));
            if n == 0 {
                break;
            }
            n -= 1;
            iter = 0;
            continue;
        }
        if l + 1 == n {
            // A trailing 2x2 block: solve it directly.
            let w = h[n * d + n - 1] * h[(n - 1) * d + n];
            let p = 0.5 * (h[(n - 1) * d + n - 1] - h[n * d + n]);
            let q = p * p + w;
            let z = q.abs().sqrt();
            let x = h[n * d + n] + exshift;
            if q >= 0.0 {
                let z = if p >= 0.0 { p + z } else { p - z };
                let l1 = x + z;
                let l2 = if z != 0.0 { x - w / z } else { l1 };
                eig.push(Complex64::new(l1, 0.0));
                eig.push(Complex64::new(l2, 0.0));
            } else {
                eig.push(Complex64::new(x + p, z));
                eig.push(Complex64::new(x + p, -z));
            }
            if n == 1 {
                break;
            }
            n -= 2;
            iter = 0;
            continue;
        }

        // No convergence on this block yet: form a shift.
        let mut x = h[n * d + n];
        let mut y = h[(n - 1) * d + n - 1];
        let mut w = h[n * d + n - 1] * h[(n - 1) * d + n];

        if iter == 10 {
            // Shift every not-yet-converged diagonal entry so the running
            // exshift stays valid for eigenvalues deflated above this block.
            exshift += x;
            for i in 0..=n {
                h[i * d + i] -= x;
            }
            let s = h[n * d + n - 1].abs() + h[(n - 1) * d + n - 2].abs();
            x = 0.75 * s;
            y = x;
            w = -0.4375 * s * s;
        }
        if iter == 30 {
            let mut s = 0.5 * (y - x);
            s = s * s + w;
            if s > 0.0 {
                let mut s = s.sqrt();
                if y < x {
                    s = -s;
                }
                let s = x - w / (0.5 * (y - x) + s);
                for i in 0..=n {
                    h[i * d + i] -= s;
                }
                exshift += s;
                x = 0.964;
                y = 0.964;
                w = 0.964;
            }
        }

        iter += 1;
        steps += 1;
        if steps > cap {
            return Err(Error::EigenNoConvergence { dim: d, cap });
        }

        // Look for two consecutive small sub-diagonal elements.
        let mut m = n - 2;
        let (mut p, mut q, mut r);
        loop {
            let z = h[m * d + m];
            let rr = x - z;
            let ss = y - z;
            p = (rr * ss - w) / h[(m + 1) * d + m] + h[m * d + m + 1];
            q = h[(m + 1) * d + m + 1] - z - rr - ss;
            r = h[(m + 2) * d + m + 1];
            let s = p.abs() + q.abs() + r.abs();
            p /= s;
            q /= s;
            r /= s;
            if m == l {
                break;
            }
            let lhs = h[m * d + m - 1].abs() * (q.abs() + r.abs());
            let rhs = EPS
                * p.abs()
                * (h[(m - 1) * d + m - 1].abs() + z.abs() + h[(m + 1) * d + m + 1].abs());
            if lhs < rhs {
                break;
            }
            m -= 1;
        }
        for i in m + 2..=n {
            h[i * d + i - 2] = 0.0;
            if i > m + 2 {
                h[i * d + i - 3] = 0.0;
            }
        }

        // Double QR sweep on the active block, rows l..=n, columns m..=n.
        // Only the active block is updated: deflated rows and columns are
        // frozen, which is valid for eigenvalue extraction.
        for k in m..n {
            let notlast = k != n - 1;
            let mut col_norm = 1.0;
            if k != m {
                p = h[k * d + k - 1];
                q = h[(k + 1) * d + k - 1];
                r = if notlast { h[(k + 2) * d + k - 1] } else { 0.0 };
                col_norm = p.abs() + q.abs() + r.abs();
                if col_norm != 0.0 {
                    p /= col_norm;
                    q /= col_norm;
                    r /= col_norm;
                }
            }
            let mut s = (p * p + q * q + r * r).sqrt();
            if p < 0.0 {
                s = -s;
            }
            if s == 0.0 {
                continue;
            }
            if k != m {
                h[k * d + k - 1] = -s * col_norm;
            } else if l != m {
                h[k * d + k - 1] = -h[k * d + k - 1];
            }
            p += s;
            let x_rot = p / s;
            let y_rot = q / s;
            let z_rot = r / s;
            let q_over_p = q / p;
            let r_over_p = r / p;

            // The reflector is applied with asymmetric factors: rows use
            // (x, y, z) = (p, q, r)/s, columns use (1, q, r)/p.
            for j in k..=n {
                let mut pp = h[k * d + j] + q_over_p * h[(k + 1) * d + j];
                if notlast {
                    pp += r_over_p * h[(k + 2) * d + j];
                    h[(k + 2) * d + j] -= pp * z_rot;
                }
                h[(k + 1) * d + j] -= pp * y_rot;
                h[k * d + j] -= pp * x_rot;
            }
            let top = n.min(k + 3);
            for i in l..=top {
                let mut pp = x_rot * h[i * d + k] + y_rot * h[i * d + k + 1];
                if notlast {
                    pp += z_rot * h[i * d + k + 2];
                    h[i * d + k + 2] -= pp * r_over_p;
                }
                h[i * d + k + 1] -= pp * q_over_p;
                h[i * d + k] -= pp;
            }
        }
    }
    Ok(eig)
}

/// Cyclic Jacobi on a symmetric matrix held as a dense row-major buffer.
/// Converged when the off-diagonal Frobenius mass falls below
/// `1e-13 * ||input||_F`. Returns eigenvalues sorted descending.
fn jacobi_eigenvalues(a: &mut [f64], d: usize) -> Result<Vec<f64>> {
    const MAX_SWEEPS: usize = 64;
    if d == 1 {
        return Ok(vec![a[0]]);
    }
    let target = 1e-13 * a.iter().map(|v| v * v).sum::<f64>().sqrt();
    for _ in 0..MAX_SWEEPS {
        let off: f64 = {
            let mut s = 0.0;
            for i in 0..d {
                for j in i + 1..d {
                    s += 2.0 * a[i * d + j] * a[i * d + j];
                }
            }
            s.sqrt()
        };
        if off <= target {
            let mut eig: Vec<f64> = (0..d).map(|i| a[i * d + i]).collect();
            eig.sort_by(|x, y| y.partial_cmp(x).expect("finite eigenvalues"));
            return Ok(eig);
        }
        for p in 0..d - 1 {
            for q in p + 1..d {
                let apq = a[p * d + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = 0.5 * (a[q * d + q] - a[p * d + p]) / apq;
                let t = if theta.abs() > 1e12 {
                    0.5 / theta
                } else {
                    let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sign / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                let tapq = t * apq;
                a[p * d + p] -= tapq;
                a[q * d + q] += tapq;
                a[p * d + q] = 0.0;
                a[q * d + p] = 0.0;
                for k in 0..d {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[k * d + p];
                    let akq = a[k * d + q];
                    let new_kp = akp - s * (akq + tau * akp);
                    let new_kq = akq + s * (akp - tau * akq);
                    a[k * d + p] = new_kp;
                    a[p * d + k] = new_kp;
                    a[k * d + q] = new_kq;
                    a[q * d + k] = new_kq;
                }
            }
        }
    }
    Err(Error::EigenNoConvergence {
        dim: d,
        cap: MAX_SWEEPS,
    })
}
