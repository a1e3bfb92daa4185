//! Boundary points `ω = (α±, β±, γ±)`, the function `Φ_ω`, and its Laurent
//! coefficients `φ_ω(n)` computed by two independent engines: factorwise
//! series convolution and trapezoidal contour integration on the unit circle.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::det_with;

/// Largest `|n|` any coefficient window may reach.
pub const WINDOW_CAP: i64 = 4096;

/// Default tail target for adaptively sized windows.
pub const DEFAULT_TAIL: f64 = 1e-12;

/// Finitely supported Voiculescu parameters. `gamma_plus` and `gamma_minus`
/// are the exponential weights themselves.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OmegaPoint {
    #[serde(default)]
    pub alpha_plus: Vec<f64>,
    #[serde(default)]
    pub beta_plus: Vec<f64>,
    #[serde(default)]
    pub alpha_minus: Vec<f64>,
    #[serde(default)]
    pub beta_minus: Vec<f64>,
    #[serde(default)]
    pub gamma_plus: f64,
    #[serde(default)]
    pub gamma_minus: f64,
}

impl OmegaPoint {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn pure_beta_plus(b: f64) -> Self {
        OmegaPoint {
            beta_plus: vec![b],
            ..Self::default()
        }
    }

    pub fn pure_alpha_minus(a: f64) -> Self {
        OmegaPoint {
            alpha_minus: vec![a],
            ..Self::default()
        }
    }

    pub fn pure_gamma_plus(g: f64) -> Self {
        OmegaPoint {
            gamma_plus: g,
            ..Self::default()
        }
    }

    /// Checks monotonicity, nonnegativity and `β⁺₁ + β⁻₁ ≤ 1`.
    pub fn validate(&self) -> Result<()> {
        let lists = [
            ("alpha_plus", &self.alpha_plus),
            ("beta_plus", &self.beta_plus),
            ("alpha_minus", &self.alpha_minus),
            ("beta_minus", &self.beta_minus),
        ];
        for (name, list) in lists {
            if list.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::domain(
                    format!("{name} entries are finite and nonnegative"),
                    format!("{list:?}"),
                ));
            }
            if list.windows(2).any(|w| w[0] < w[1]) {
                return Err(Error::domain(
                    format!("{name} is weakly decreasing"),
                    format!("{list:?}"),
                ));
            }
        }
        for (name, g) in [("gamma_plus", self.gamma_plus), ("gamma_minus", self.gamma_minus)] {
            if !(g.is_finite() && g >= 0.0) {
                return Err(Error::domain(format!("{name} >= 0"), format!("{g}")));
            }
        }
        let b1 = self.beta_plus.first().copied().unwrap_or(0.0)
            + self.beta_minus.first().copied().unwrap_or(0.0);
        if b1 > 1.0 {
            return Err(Error::domain(
                "beta_plus[0] + beta_minus[0] <= 1",
                format!("sum is {b1}"),
            ));
        }
        Ok(())
    }

    pub fn is_trivial(&self) -> bool {
        self.alpha_plus.iter().all(|&v| v == 0.0)
            && self.beta_plus.iter().all(|&v| v == 0.0)
            && self.alpha_minus.iter().all(|&v| v == 0.0)
            && self.beta_minus.iter().all(|&v| v == 0.0)
            && self.gamma_plus == 0.0
            && self.gamma_minus == 0.0
    }

    /// Exact support `[lo, hi]` of `φ_ω` when it is finite, i.e. when only
    /// β parameters are present.
    pub fn finite_support(&self) -> Option<(i64, i64)> {
        let nz = |l: &[f64]| l.iter().filter(|&&v| v > 0.0).count() as i64;
        let infinite_plus = nz(&self.alpha_plus) > 0 || self.gamma_plus > 0.0;
        let infinite_minus = nz(&self.alpha_minus) > 0 || self.gamma_minus > 0.0;
        if infinite_plus || infinite_minus {
            return None;
        }
        Some((-nz(&self.beta_minus), nz(&self.beta_plus)))
    }

    /// One-sided support bounds: `Some(lo)` if `φ_ω(n) = 0` for `n < lo`,
    /// `Some(hi)` if it vanishes above `hi`.
    pub fn half_line_support(&self) -> (Option<i64>, Option<i64>) {
        let nz = |l: &[f64]| l.iter().filter(|&&v| v > 0.0).count() as i64;
        let lower = if nz(&self.alpha_minus) == 0 && self.gamma_minus == 0.0 {
            Some(-nz(&self.beta_minus))
        } else {
            None
        };
        let upper = if nz(&self.alpha_plus) == 0 && self.gamma_plus == 0.0 {
            Some(nz(&self.beta_plus))
        } else {
            None
        };
        (lower, upper)
    }

    /// Annulus `r_in < |z| < r_out` where the Laurent expansion converges.
    pub fn annulus(&self) -> (f64, f64) {
        let a_plus = self.alpha_plus.first().copied().unwrap_or(0.0);
        let a_minus = self.alpha_minus.first().copied().unwrap_or(0.0);
        let r_out = if a_plus > 0.0 { 1.0 + 1.0 / a_plus } else { f64::INFINITY };
        let r_in = if a_minus > 0.0 { 1.0 / (1.0 + 1.0 / a_minus) } else { 0.0 };
        (r_in, r_out)
    }

    /// The point whose function is `Φ_ω^k`: every α, β repeated `k` times
    /// and γ scaled by `k`.
    pub fn power(&self, k: usize) -> OmegaPoint {
        let rep = |l: &[f64]| {
            let mut v: Vec<f64> = l.iter().flat_map(|&x| std::iter::repeat_n(x, k)).collect();
            v.sort_by(|a, b| b.total_cmp(a));
            v
        };
        OmegaPoint {
            alpha_plus: rep(&self.alpha_plus),
            beta_plus: rep(&self.beta_plus),
            alpha_minus: rep(&self.alpha_minus),
            beta_minus: rep(&self.beta_minus),
            gamma_plus: self.gamma_plus * k as f64,
            gamma_minus: self.gamma_minus * k as f64,
        }
    }

    /// Keeps only `(α⁺, β⁺, γ⁺)`.
    pub fn plus_part(&self) -> OmegaPoint {
        OmegaPoint {
            alpha_plus: self.alpha_plus.clone(),
            beta_plus: self.beta_plus.clone(),
            gamma_plus: self.gamma_plus,
            ..Self::default()
        }
    }

    /// Keeps only `(α⁻, β⁻, γ⁻)`.
    pub fn minus_part(&self) -> OmegaPoint {
        OmegaPoint {
            alpha_minus: self.alpha_minus.clone(),
            beta_minus: self.beta_minus.clone(),
            gamma_minus: self.gamma_minus,
            ..Self::default()
        }
    }
}

/// `Φ_ω(z)`, erroring when `z` lies outside the annulus of analyticity.
pub fn phi_eval(omega: &OmegaPoint, z: Complex64) -> Result<Complex64> {
    if z.norm() == 0.0 {
        return Err(Error::domain("z != 0", "Phi is a Laurent series in z"));
    }
    let one = Complex64::new(1.0, 0.0);
    let zi = one / z;
    let (r_in, r_out) = omega.annulus();
    if z.norm() >= r_out {
        return Err(Error::domain(
            "|z| < 1 + 1/alpha_plus[0]",
            format!("|z| = {} reaches the pole of factor 1/(1 - alpha_plus[0](z-1))", z.norm()),
        ));
    }
    if z.norm() <= r_in {
        return Err(Error::domain(
            "|1/z| < 1 + 1/alpha_minus[0]",
            format!(
                "|z| = {} reaches the pole of factor 1/(1 - alpha_minus[0](1/z-1))",
                z.norm()
            ),
        ));
    }
    let mut v = (omega.gamma_plus * (z - one) + omega.gamma_minus * (zi - one)).exp();
    for &b in &omega.beta_plus {
        v *= one + b * (z - one);
    }
    for &b in &omega.beta_minus {
        v *= one + b * (zi - one);
    }
    for &a in &omega.alpha_plus {
        v /= one - a * (z - one);
    }
    for &a in &omega.alpha_minus {
        v /= one - a * (zi - one);
    }
    Ok(v)
}

/// `Φ_ω(x)` at a real positive point.
pub fn phi_real(omega: &OmegaPoint, x: f64) -> Result<f64> {
    Ok(phi_eval(omega, Complex64::new(x, 0.0))?.re)
}

/// Checks the positivity and convergence conditions under which the
/// q-deformed measures and generators at level `n` are defined:
/// `α⁺₁ < (q^{−2(n−1)} − 1)^{−1}` and `Φ_ω(q^{−2(i−1)}) > 0` for `i = 1..n`.
pub fn validate_q_case(omega: &OmegaPoint, n: usize, q: f64) -> Result<()> {
    omega.validate()?;
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::invalid(format!("q must lie in (0,1), got {q}")));
    }
    let a1 = omega.alpha_plus.first().copied().unwrap_or(0.0);
    if n >= 2 && a1 > 0.0 {
        let bound = 1.0 / (q.powi(-2 * (n as i32 - 1)) - 1.0);
        if a1 >= bound {
            return Err(Error::domain(
                "alpha_plus[0] < 1/(q^(-2(N-1)) - 1): Laurent expansion converges at q^(-2(N-1))",
                format!("alpha_plus[0] = {a1}, bound = {bound}"),
            ));
        }
    }
    for i in 0..n {
        let x = q.powi(-2 * i as i32);
        let v = phi_real(omega, x)?;
        if !(v > 0.0) {
            return Err(Error::domain(
                "Phi(q^(-2(i-1))) > 0 for i = 1..N",
                format!("Phi({x}) = {v} at i = {}", i + 1),
            ));
        }
    }
    Ok(())
}

/// `∏_{i=1}^n Φ_ω(q^{−2(i−1)})`.
pub fn q_normalizer(omega: &OmegaPoint, n: usize, q: f64) -> Result<f64> {
    (0..n).try_fold(1.0, |acc, i| Ok(acc * phi_real(omega, q.powi(-2 * i as i32))?))
}

/// Laurent coefficients `φ_ω(n)` for `n_min ≤ n ≤ n_max` with the mass
/// outside the window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoeffWindow {
    pub n_min: i64,
    pub n_max: i64,
    pub coeffs: Vec<f64>,
    pub tail_mass: f64,
}

impl CoeffWindow {
    /// Window starting at `n_min`; the tail is `1 − Σ coeffs` clamped at 0.
    pub fn from_coeffs(n_min: i64, coeffs: Vec<f64>) -> Self {
        let sum: f64 = coeffs.iter().sum();
        CoeffWindow {
            n_min,
            n_max: n_min + coeffs.len() as i64 - 1,
            coeffs,
            tail_mass: (1.0 - sum).max(0.0),
        }
    }

    /// `φ(n)`, or 0 outside the window.
    pub fn get(&self, n: i64) -> f64 {
        if n < self.n_min || n > self.n_max {
            0.0
        } else {
            self.coeffs[(n - self.n_min) as usize]
        }
    }

    pub fn covers(&self, lo: i64, hi: i64) -> bool {
        self.n_min <= lo && hi <= self.n_max
    }

    pub fn mass(&self) -> f64 {
        self.coeffs.iter().sum()
    }

    /// Smallest `(below, above) ≥ 0` such that the mass of the window
    /// strictly below `−below` and strictly above `above` is each at most
    /// `eps`, measured inside the window plus the reported tail.
    pub fn support_radius(&self, eps: f64) -> (i64, i64) {
        let mut acc = self.tail_mass;
        let mut above = self.n_max.max(0);
        let mut n = self.n_max;
        while n > 0 {
            acc += self.get(n);
            if acc > eps {
                break;
            }
            above = n - 1;
            n -= 1;
        }
        let mut acc = self.tail_mass;
        let mut below = (-self.n_min).max(0);
        let mut n = self.n_min;
        while n < 0 {
            acc += self.get(n);
            if acc > eps {
                break;
            }
            below = -(n + 1);
            n += 1;
        }
        (below, above)
    }
}

/// Coefficients `0..=len` of the product of one-sided factors, exact up to
/// rounding because every factor has nonnegative coefficients supported on
/// `n ≥ 0`.
fn one_sided(gamma: f64, betas: &[f64], alphas: &[f64], len: usize) -> Vec<f64> {
    let mut acc = vec![0.0; len + 1];
    // exp(γ(z−1))
    let mut term = (-gamma).exp();
    for (n, slot) in acc.iter_mut().enumerate() {
        *slot = term;
        term *= gamma / (n as f64 + 1.0);
    }
    for &b in betas {
        for n in (0..=len).rev() {
            let prev = if n > 0 { acc[n - 1] } else { 0.0 };
            acc[n] = (1.0 - b) * acc[n] + b * prev;
        }
    }
    for &a in alphas {
        // 1/(1 − a(z − 1)) = Σ rⁿ/(1+a) zⁿ, r = a/(1+a): c_n = c_{n−1}·r + x_n/(1+a)
        let r = a / (1.0 + a);
        let mut carry = 0.0;
        for slot in acc.iter_mut() {
            carry = carry * r + *slot / (1.0 + a);
            *slot = carry;
        }
    }
    acc
}

/// Length after which a one-sided coefficient sequence has negligible mass.
fn one_sided_len(gamma: f64, betas: &[f64], alphas: &[f64]) -> Result<usize> {
    let mut len = 32usize;
    loop {
        let c = one_sided(gamma, betas, alphas, len);
        let tail = 1.0 - c.iter().sum::<f64>();
        // the summed tail stalls at rounding level for long products, so
        // also accept a negligible upper half
        let upper: f64 = c[len / 2..].iter().sum();
        if tail <= 4e-16 || upper <= 1e-20 {
            return Ok((2 * len).min(WINDOW_CAP as usize * 2));
        }
        if len as i64 >= WINDOW_CAP {
            return Err(Error::Resource(format!(
                "one-sided coefficient tail {tail:e} still above 4e-16 at length {len}"
            )));
        }
        len *= 2;
    }
}

/// Coefficients of `z^n`, `n = 0..=len`, of the factor of `Φ_ω` built from
/// `(α⁺, β⁺, γ⁺)`.
pub fn plus_part_coeffs(omega: &OmegaPoint, len: usize) -> Vec<f64> {
    one_sided(omega.gamma_plus, &omega.beta_plus, &omega.alpha_plus, len)
}

/// Coefficients of `z^{−n}`, `n = 0..=len`, of the factor built from
/// `(α⁻, β⁻, γ⁻)`.
pub fn minus_part_coeffs(omega: &OmegaPoint, len: usize) -> Vec<f64> {
    one_sided(omega.gamma_minus, &omega.beta_minus, &omega.alpha_minus, len)
}

/// Window `[n_min, n_max]` of `φ_ω` by convolving the factorwise
/// expansions. `tail_mass` is `1 − Σ window`.
pub fn phi_coeffs_series(omega: &OmegaPoint, n_min: i64, n_max: i64) -> Result<CoeffWindow> {
    omega.validate()?;
    if n_min > n_max {
        return Err(Error::invalid(format!("empty window [{n_min}, {n_max}]")));
    }
    if n_min < -WINDOW_CAP || n_max > WINDOW_CAP {
        return Err(Error::Resource(format!(
            "window [{n_min}, {n_max}] exceeds |n| <= {WINDOW_CAP}"
        )));
    }
    let kp = one_sided_len(omega.gamma_plus, &omega.beta_plus, &omega.alpha_plus)?;
    let km = one_sided_len(omega.gamma_minus, &omega.beta_minus, &omega.alpha_minus)?;
    let plen = (n_max.max(0) as usize) + kp + km;
    let mlen = ((-n_min).max(0) as usize) + kp + km;
    let plus = one_sided(omega.gamma_plus, &omega.beta_plus, &omega.alpha_plus, plen);
    let minus = one_sided(omega.gamma_minus, &omega.beta_minus, &omega.alpha_minus, mlen);
    let coeffs = (n_min..=n_max)
        .map(|n| {
            let b0 = (-n).max(0) as usize;
            (b0..=mlen)
                .take_while(|&b| (n + b as i64) as usize <= plen)
                .map(|b| plus[(n + b as i64) as usize] * minus[b])
                .sum()
        })
        .collect();
    Ok(CoeffWindow::from_coeffs(n_min, coeffs))
}

/// Symmetric window grown until its tail is below `tail` (doubling the
/// half-width, capped at `|n| ≤ 4096`).
pub fn phi_coeffs_auto(omega: &OmegaPoint, tail: f64) -> Result<CoeffWindow> {
    let mut half = 8i64;
    loop {
        let w = phi_coeffs_series(omega, -half, half)?;
        if w.tail_mass < tail {
            return Ok(w);
        }
        if half >= WINDOW_CAP {
            return Err(Error::Resource(format!(
                "coefficient tail {:e} above {tail:e} at |n| <= {WINDOW_CAP}",
                w.tail_mass
            )));
        }
        half = (half * 2).min(WINDOW_CAP);
    }
}

/// Window computed from the default adaptive window enlarged to cover
/// `[lo, hi]`.
pub fn phi_coeffs_covering(omega: &OmegaPoint, lo: i64, hi: i64) -> Result<CoeffWindow> {
    let auto = phi_coeffs_auto(omega, DEFAULT_TAIL)?;
    phi_coeffs_series(omega, lo.min(auto.n_min), hi.max(auto.n_max))
}

/// Trapezoidal rule for `(1/2πi)∮ Φ_ω(z) z^{−n−1} dz` on `m` equally spaced
/// points of the unit circle, evaluated with one FFT.
pub fn phi_coeffs_contour(omega: &OmegaPoint, n_min: i64, n_max: i64, m: usize) -> Result<CoeffWindow> {
    omega.validate()?;
    if n_min > n_max {
        return Err(Error::invalid(format!("empty window [{n_min}, {n_max}]")));
    }
    let width = (n_max - n_min + 1) as usize;
    if m < 4 * width {
        return Err(Error::invalid(format!(
            "contour grid m = {m} must be at least 4 * window width = {}",
            4 * width
        )));
    }
    let mut samples = (0..m)
        .map(|j| {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
            phi_eval(omega, Complex64::from_polar(1.0, theta))
        })
        .collect::<Result<Vec<_>>>()?;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(m);
    fft.process(&mut samples);
    let coeffs = (n_min..=n_max)
        .map(|n| samples[n.rem_euclid(m as i64) as usize].re / m as f64)
        .collect();
    Ok(CoeffWindow::from_coeffs(n_min, coeffs))
}

/// Upper bound on the aliasing error `Σ_{k≠0} φ(n + km)` of a contour
/// window, from the series tail outside `(n_min − m, n_max + m)`.
pub fn contour_aliasing_bound(series: &CoeffWindow, m: usize) -> f64 {
    let m = m as i64;
    let inner: f64 = (series.n_max - m + 1..series.n_min + m)
        .map(|n| series.get(n))
        .sum();
    (1.0 - inner).max(0.0)
}

/// Result of sampling minors `det[φ(m_i + j)]` with `m₁ > … > m_k`.
#[derive(Clone, Debug, Serialize)]
pub struct PositivityReport {
    pub order: usize,
    pub checked: usize,
    pub worst_minor: f64,
    pub worst_rows: Vec<i64>,
    pub tolerance: f64,
    pub passed: bool,
}

/// Samples `trials` row tuples inside the window and checks every minor is
/// at least `−1e−12 · scale`, `scale = (max φ)^k`. For `k = 1` every
/// coefficient is checked instead.
pub fn check_total_positivity(w: &CoeffWindow, k: usize, trials: usize, seed: u64) -> Result<PositivityReport> {
    if k == 0 {
        return Err(Error::invalid("minor order must be at least 1"));
    }
    let maxc = w.coeffs.iter().cloned().fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
    let tol = 1e-12 * maxc.powi(k as i32);
    let mut worst = f64::INFINITY;
    let mut worst_rows = Vec::new();
    let mut checked = 0usize;
    let mut record = |rows: Vec<i64>, v: f64| {
        checked += 1;
        if v < worst {
            worst = v;
            worst_rows = rows;
        }
    };
    if k == 1 {
        for n in w.n_min..=w.n_max {
            record(vec![n - 1], w.get(n));
        }
    } else {
        // rows m_i need m_i + 1 ≥ n_min and m_i + k ≤ n_max
        let lo = w.n_min - 1;
        let hi = w.n_max - k as i64;
        if hi - lo + 1 < k as i64 {
            return Err(Error::invalid(format!(
                "window [{}, {}] too narrow for order-{k} minors",
                w.n_min, w.n_max
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..trials {
            let mut rows: Vec<i64> = Vec::with_capacity(k);
            while rows.len() < k {
                let r = rng.random_range(lo..=hi);
                if !rows.contains(&r) {
                    rows.push(r);
                }
            }
            rows.sort_unstable_by(|a, b| b.cmp(a));
            let v = det_with(k, |i, j| w.get(rows[i] + j as i64 + 1));
            record(rows, v);
        }
    }
    Ok(PositivityReport {
        order: k,
        checked,
        worst_minor: worst,
        worst_rows,
        tolerance: tol,
        passed: worst >= -tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    #[test]
    fn phi_at_one_is_one() {
        let omegas = [
            OmegaPoint::zero(),
            OmegaPoint::pure_beta_plus(0.3),
            OmegaPoint {
                alpha_plus: vec![0.5, 0.2],
                beta_minus: vec![0.4],
                alpha_minus: vec![0.7],
                gamma_plus: 0.3,
                gamma_minus: 1.1,
                ..OmegaPoint::zero()
            },
        ];
        for om in &omegas {
            let v = phi_eval(om, Complex64::new(1.0, 0.0)).unwrap();
            assert!((v - 1.0).norm() < 1e-15);
        }
        assert_eq!(phi_eval(&OmegaPoint::zero(), Complex64::new(0.3, 2.0)).unwrap(), Complex64::new(1.0, 0.0));
        let v = phi_eval(&OmegaPoint::pure_beta_plus(0.5), Complex64::new(-1.0, 0.0)).unwrap();
        assert!(v.norm() < 1e-15);
    }

    #[test]
    fn poles_are_domain_errors() {
        let om = OmegaPoint {
            alpha_plus: vec![0.5],
            ..OmegaPoint::zero()
        };
        assert!(matches!(phi_eval(&om, Complex64::new(3.0, 0.0)), Err(Error::Domain { .. })));
        assert!(phi_eval(&om, Complex64::new(2.9, 0.0)).is_ok());
        let om = OmegaPoint::pure_alpha_minus(0.5);
        assert!(matches!(phi_eval(&om, Complex64::new(1.0 / 3.0, 0.0)), Err(Error::Domain { .. })));
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        let bad = OmegaPoint {
            beta_plus: vec![0.6],
            beta_minus: vec![0.5],
            ..OmegaPoint::zero()
        };
        assert!(bad.validate().is_err());
        let bad = OmegaPoint {
            alpha_plus: vec![0.1, 0.2],
            ..OmegaPoint::zero()
        };
        assert!(bad.validate().is_err());
        assert!(OmegaPoint::pure_gamma_plus(-1.0).validate().is_err());
    }

    #[test]
    fn series_examples() {
        let w = phi_coeffs_series(&OmegaPoint::pure_gamma_plus(1.0), -3, 12).unwrap();
        for n in -3..=12 {
            let expected = if n < 0 { 0.0 } else { (-1.0f64).exp() / factorial(n as u32) };
            assert!((w.get(n) - expected).abs() < 1e-16, "n={n}");
        }
        let w = phi_coeffs_series(&OmegaPoint::pure_beta_plus(0.3), -2, 3).unwrap();
        assert_eq!(w.coeffs, vec![0.0, 0.0, 0.7, 0.3, 0.0, 0.0]);
        assert_eq!(w.tail_mass, 0.0);
        let a: f64 = 0.4;
        let w = phi_coeffs_series(&OmegaPoint::pure_alpha_minus(a), -20, 2).unwrap();
        for n in 0..=20 {
            let expected = a.powi(n) / (1.0 + a).powi(n + 1);
            assert!((w.get(-n as i64) - expected).abs() < 1e-16);
        }
        assert_eq!(w.get(1), 0.0);
    }

    #[test]
    fn window_mass_plus_tail_is_one() {
        let om = OmegaPoint {
            beta_plus: vec![0.3],
            alpha_minus: vec![0.2],
            gamma_plus: 0.2,
            ..OmegaPoint::zero()
        };
        for (lo, hi) in [(-3, 3), (-10, 5), (-40, 40)] {
            let w = phi_coeffs_series(&om, lo, hi).unwrap();
            assert!((w.mass() + w.tail_mass - 1.0).abs() < 1e-12);
        }
        let w = phi_coeffs_auto(&om, 1e-12).unwrap();
        assert!(w.tail_mass < 1e-12);
    }

    #[test]
    fn contour_examples() {
        let w = phi_coeffs_contour(&OmegaPoint::zero(), -4, 4, 64).unwrap();
        for n in -4..=4 {
            let e = if n == 0 { 1.0 } else { 0.0 };
            assert!((w.get(n) - e).abs() < 1e-15);
        }
        let om = OmegaPoint::pure_beta_plus(0.35);
        let c = phi_coeffs_contour(&om, -4, 4, 64).unwrap();
        let s = phi_coeffs_series(&om, -4, 4).unwrap();
        for n in -4..=4 {
            assert!((c.get(n) - s.get(n)).abs() < 1e-14);
        }
        assert!(phi_coeffs_contour(&om, -4, 4, 30).is_err());
    }

    #[test]
    fn two_exponentials_match_cauchy_product() {
        let om = OmegaPoint {
            gamma_plus: 1.0,
            gamma_minus: 1.0,
            ..OmegaPoint::zero()
        };
        let s = phi_coeffs_series(&om, -8, 8).unwrap();
        let c = phi_coeffs_contour(&om, -8, 8, 256).unwrap();
        for n in -8i64..=8 {
            let oracle: f64 = (n.max(0)..60)
                .map(|k| 1.0 / (factorial(k as u32) * factorial((k - n) as u32)))
                .sum::<f64>()
                * (-2.0f64).exp();
            assert!((s.get(n) - oracle).abs() < 1e-12, "series n={n}");
            assert!((c.get(n) - oracle).abs() < 1e-12, "contour n={n}");
        }
    }

    #[test]
    fn half_line_support_prediction() {
        let om = OmegaPoint {
            beta_plus: vec![0.5, 0.25],
            alpha_minus: vec![0.3],
            ..OmegaPoint::zero()
        };
        assert_eq!(om.half_line_support(), (None, Some(2)));
        let w = phi_coeffs_series(&om, -30, 6).unwrap();
        for n in 3..=6 {
            assert_eq!(w.get(n), 0.0);
        }
        assert!(w.get(2) > 0.0);
        assert_eq!(OmegaPoint::pure_beta_plus(0.2).finite_support(), Some((0, 1)));
    }

    #[test]
    fn positivity_examples() {
        let b = 0.3;
        let w = phi_coeffs_series(&OmegaPoint::pure_beta_plus(b), -3, 4).unwrap();
        let r = check_total_positivity(&w, 1, 0, 1).unwrap();
        assert!(r.passed);
        // rows (1,0): det[[φ(2), φ(3)], [φ(1), φ(2)]] = 0·0 − 0·b = 0
        let v = det_with(2, |i, j| w.get([1i64, 0][i] + j as i64 + 1));
        assert_eq!(v, 0.0);
        let w = phi_coeffs_series(&OmegaPoint::pure_gamma_plus(1.0), -4, 20).unwrap();
        let r = check_total_positivity(&w, 2, 300, 7).unwrap();
        assert!(r.passed, "{r:?}");
        let r = check_total_positivity(&w, 3, 300, 8).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn negated_coefficient_fails_positivity() {
        let mut w = phi_coeffs_series(&OmegaPoint::pure_gamma_plus(0.5), -2, 10).unwrap();
        w.coeffs[4] = -w.coeffs[4];
        assert!(!check_total_positivity(&w, 1, 0, 1).unwrap().passed);
    }

    #[test]
    fn q_validation() {
        let om = OmegaPoint {
            alpha_plus: vec![0.5],
            ..OmegaPoint::zero()
        };
        // q^-2 = 4 at N = 2 needs alpha_plus < 1/3
        assert!(validate_q_case(&om, 2, 0.5).is_err());
        assert!(validate_q_case(&om, 1, 0.5).is_ok());
        assert!(validate_q_case(&OmegaPoint::pure_beta_plus(0.3), 3, 0.5).is_ok());
        let n = q_normalizer(&OmegaPoint::pure_beta_plus(0.5), 2, 0.5).unwrap();
        assert!((n - (1.0 + 0.5 * 3.0)).abs() < 1e-14);
    }

    #[test]
    fn support_radius_of_finite_support() {
        let w = phi_coeffs_series(&OmegaPoint::pure_beta_plus(0.3), -5, 5).unwrap();
        assert_eq!(w.support_radius(1e-15), (0, 1));
        let w = phi_coeffs_auto(&OmegaPoint::pure_gamma_plus(0.5), 1e-14).unwrap();
        let (below, above) = w.support_radius(1e-12);
        assert_eq!(below, 0);
        assert!(above >= 10 && above <= 14, "{above}");
    }
}
