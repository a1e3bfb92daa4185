//! Quadrature oracle for classical transition probabilities:
//! `ℚ(λ,μ) = dim μ / dim λ · (1/N!) ∫_{𝕋^N} ∏Φ_ω(z_i) a_{λ+δ}(z) conj(a_{μ+δ}(z)) dz`
//! with `a` the alternant and `dz` normalized Haar measure.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::det_f64;
use crate::signatures::Signature;
use crate::symfunc::{alternant, dim_u_f64};
use crate::voiculescu::{phi_eval, CoeffWindow, OmegaPoint};

/// Trapezoidal rule on an `m^N` grid of the torus. Exact for Laurent
/// polynomials of degree below `m` in each variable, so the error is the
/// aliased coefficient mass of `Φ_ω`.
pub fn haar_transition(omega: &OmegaPoint, lam: &Signature, mu: &Signature, m: usize) -> Result<f64> {
    let n = lam.len();
    if mu.len() != n || n == 0 || n > 3 {
        return Err(Error::invalid(format!(
            "quadrature oracle supports equal lengths 1..=3, got {} and {}",
            n,
            mu.len()
        )));
    }
    let grid: Vec<Complex64> = (0..m)
        .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / m as f64))
        .collect();
    let phi: Vec<Complex64> = grid.iter().map(|&z| phi_eval(omega, z)).collect::<Result<_>>()?;
    let mut idx = vec![0usize; n];
    let mut acc = Complex64::new(0.0, 0.0);
    loop {
        let z: Vec<Complex64> = idx.iter().map(|&k| grid[k]).collect();
        let weight: Complex64 = idx.iter().map(|&k| phi[k]).product();
        acc += weight * alternant(lam, &z) * alternant(mu, &z).conj();
        let mut d = 0;
        loop {
            if d == n {
                let factorial: f64 = (1..=n).map(|v| v as f64).product();
                let integral = acc.re / (m as f64).powi(n as i32) / factorial;
                return Ok(dim_u_f64(mu) / dim_u_f64(lam) * integral);
            }
            idx[d] += 1;
            if idx[d] < m {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// Determinantal entry with index `μ_j − j − λ_i + s·i` (1-based `i, j`):
/// `s = 1` is the form used throughout the crate, `s = −1` the alternative
/// sign that the quadrature rules out.
pub fn det_entry_with_sign(w: &CoeffWindow, lam: &Signature, mu: &Signature, s: i64) -> f64 {
    let (l, m) = (lam.parts(), mu.parts());
    let d = det_f64(l.len(), |i, j| {
        let (i1, j1) = (i as i64 + 1, j as i64 + 1);
        w.get(m[j] - j1 - l[i] + s * i1)
    });
    dim_u_f64(mu) / dim_u_f64(lam) * d
}
