//! Toeplitz-like kernels `T_n`, `Tⁿₙ₋₁` in shifted coordinates, the composite
//! `Δ = ℚ Λ` by two routes, and the multilevel step `P_N` on
//! Gelfand-Tsetlin patterns with an exact sequential sampler.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::generators::{transition_det, Deformation, DeterminantalKernel, DisplacementLaw};
use crate::linalg::det_f64;
use crate::links::{link_entry, link_uqn};
use crate::signatures::{GTPattern, Signature, SignatureBox, XConfig};
use crate::voiculescu::{phi_coeffs_series, phi_real, validate_q_case, CoeffWindow, OmegaPoint};

/// `m ↦ f(m − virt)`, the entries of the virtual column.
pub type VirtRule = Arc<dyn Fn(i64) -> f64 + Send + Sync>;

/// Data `(α₁, …, α_n; F)` of a Toeplitz-like kernel.
#[derive(Clone)]
pub struct ToeplitzSpec {
    pub alphas: Vec<f64>,
    /// `f(m)` on the window; indices outside it are an error, not zero.
    pub fcoeffs: CoeffWindow,
    /// `F(α_i⁻¹)`.
    pub fvals: Vec<f64>,
    pub virt_rule: Option<VirtRule>,
    /// Whether `f` is known to vanish outside the window.
    pub zero_outside: bool,
    /// `f(m) − c·f(m − virt)` for the constant `c` making it decay in both
    /// directions. Subtracting a multiple of the virtual column leaves the
    /// down determinant unchanged and avoids cancellation between entries
    /// growing like `r^m`.
    pub down_coeffs: Option<CoeffWindow>,
}

impl fmt::Debug for ToeplitzSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ToeplitzSpec")
            .field("alphas", &self.alphas)
            .field("fcoeffs", &(self.fcoeffs.n_min, self.fcoeffs.n_max))
            .field("fvals", &self.fvals)
            .field("virt_rule", &self.virt_rule.is_some())
            .finish()
    }
}

fn window(n_min: i64, values: Vec<f64>) -> CoeffWindow {
    CoeffWindow {
        n_min,
        n_max: n_min + values.len() as i64 - 1,
        coeffs: values,
        tail_mass: 0.0,
    }
}

fn q_alphas(n: usize, q: f64) -> Vec<f64> {
    (0..n).map(|i| q.powi(-2 * i as i32)).collect()
}

impl ToeplitzSpec {
    pub fn new(alphas: Vec<f64>, fcoeffs: CoeffWindow, fvals: Vec<f64>, virt_rule: Option<VirtRule>) -> Result<Self> {
        if alphas.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::invalid(format!("alphas must be positive, got {alphas:?}")));
        }
        for i in 0..alphas.len() {
            for j in i + 1..alphas.len() {
                if alphas[i] == alphas[j] {
                    return Err(Error::invalid(format!("alphas must be distinct, got {alphas:?}")));
                }
            }
        }
        if fvals.iter().any(|v| *v == 0.0 || !v.is_finite()) {
            return Err(Error::domain("F(alpha_i^-1) != 0", format!("{fvals:?}")));
        }
        Ok(ToeplitzSpec {
            alphas,
            fcoeffs,
            fvals,
            virt_rule,
            zero_outside: false,
            down_coeffs: None,
        })
    }

    /// `F ≡ 1`, so `f = δ₀`.
    pub fn trivial(alphas: Vec<f64>) -> Result<Self> {
        let n = alphas.len();
        let mut spec = ToeplitzSpec::new(alphas, window(0, vec![1.0]), vec![1.0; n], None)?;
        spec.zero_outside = true;
        Ok(spec)
    }

    /// `(1, q⁻², …, q^{−2(n−1)}; Ψ_ω)` with `Ψ_ω(z) = Φ_ω(z⁻¹)`, so
    /// `f(m) = φ_ω(−m)`; `reach` bounds the needed `|x_i − y_j|`.
    pub fn generator(omega: &OmegaPoint, n: usize, q: f64, reach: i64) -> Result<Self> {
        validate_q_case(omega, n, q)?;
        let alphas = q_alphas(n, q);
        let phi = phi_coeffs_series(omega, -reach, reach)?;
        let f: Vec<f64> = (-reach..=reach).map(|m| phi.get(-m)).collect();
        let fvals = alphas.iter().map(|&a| phi_real(omega, a)).collect::<Result<_>>()?;
        ToeplitzSpec::new(alphas, window(-reach, f), fvals, None)
    }

    /// `(1, …, q^{−2(n−1)}; F_n)` with `F_n(z) = 1/(1 − q^{−2(n−1)} z)`,
    /// `f(m) = r^m` for `m ≥ 0`, `r = q^{−2(n−1)}`, and virtual column
    /// `f(m − virt) = r^m`.
    pub fn link(n: usize, q: f64, reach: i64) -> Result<Self> {
        check_q(q, n)?;
        let alphas = q_alphas(n, q);
        let r = alphas[n - 1];
        let f: Vec<f64> = (-reach..=reach).map(|m| if m >= 0 { r.powi(m as i32) } else { 0.0 }).collect();
        let fvals = alphas[..n - 1].iter().map(|&a| 1.0 / (1.0 - r / a)).collect();
        let virt: VirtRule = Arc::new(move |m| r.powi(m as i32));
        let reduced: Vec<f64> = (-reach..=reach).map(|m| if m < 0 { -r.powi(m as i32) } else { 0.0 }).collect();
        let mut spec = ToeplitzSpec::new(alphas, window(-reach, f), fvals, Some(virt))?;
        spec.down_coeffs = Some(window(-reach, reduced));
        Ok(spec)
    }

    /// `(1, …, q^{−2(n−1)}; Ψ_ω F_n)`: `f(m) = Σ_{k≥0} r^k φ_ω(k − m)`, with
    /// the same virtual column `r^m` as the link. (Composing with `ℚ` turns
    /// that column into `Φ_ω(r) r^m`; the factor `Φ_ω(r)` cancels the n-th
    /// normalizer factor, which `Tⁿₙ₋₁` does not divide by.)
    pub fn delta(omega: &OmegaPoint, n: usize, q: f64, reach: i64) -> Result<Self> {
        check_q(q, n)?;
        validate_q_case(omega, n, q)?;
        let alphas = q_alphas(n, q);
        let r = alphas[n - 1];
        let ln_r = r.ln();
        // r^k for k below −depth is under 1e−18 of r^0
        let depth = (18.0 * std::f64::consts::LN_10 / ln_r).ceil() as i64;
        let mut top = reach.max(16);
        let phi_r = phi_real(omega, r)?;
        let phi = loop {
            let w = phi_coeffs_series(omega, -reach - depth, top)?;
            let s: f64 = (w.n_min..=w.n_max).map(|j| tilt(w.get(j), j, ln_r)).sum();
            if (s - phi_r).abs() <= 1e-15 * phi_r || top >= crate::voiculescu::WINDOW_CAP {
                break w;
            }
            top = (top * 2).min(crate::voiculescu::WINDOW_CAP);
        };
        let f: Vec<f64> = (-reach..=reach)
            .map(|m| {
                let k0 = (phi.n_min + m).max(0);
                (k0..=phi.n_max + m)
                    .map(|k| tilt(phi.get(k - m), k, ln_r))
                    .sum()
            })
            .collect();
        // f(m) − Φ_ω(r) r^m = −Σ_{k<0} r^k φ_ω(k − m), over the whole window:
        // φ_ω(k − m) grows as k falls, so cutting at r^k < 1e−18 is not enough
        let reduced: Vec<f64> = (-reach..=reach)
            .map(|m| {
                -((phi.n_min + m).min(0)..0)
                    .map(|k| tilt(phi.get(k - m), k, ln_r))
                    .sum::<f64>()
            })
            .collect();
        let fvals = alphas[..n - 1]
            .iter()
            .map(|&a| Ok(phi_real(omega, a)? / (1.0 - r / a)))
            .collect::<Result<_>>()?;
        let virt: VirtRule = Arc::new(move |m| r.powi(m as i32));
        let mut spec = ToeplitzSpec::new(alphas, window(-reach, f), fvals, Some(virt))?;
        spec.down_coeffs = Some(window(-reach, reduced));
        Ok(spec)
    }

    fn f(&self, m: i64) -> Result<f64> {
        if !self.zero_outside && (m < self.fcoeffs.n_min || m > self.fcoeffs.n_max) {
            return Err(Error::Resource(format!(
                "index {m} outside the f window [{}, {}]; rebuild with a larger reach",
                self.fcoeffs.n_min, self.fcoeffs.n_max
            )));
        }
        Ok(self.fcoeffs.get(m))
    }

    fn f_down(&self, m: i64) -> Result<f64> {
        match &self.down_coeffs {
            None => self.f(m),
            Some(w) if m >= w.n_min && m <= w.n_max => Ok(w.get(m)),
            Some(w) => Err(Error::Resource(format!(
                "index {m} outside the f window [{}, {}]; rebuild with a larger reach",
                w.n_min, w.n_max
            ))),
        }
    }

    fn alpha_det(&self, pts: &[i64]) -> f64 {
        let logs: Vec<f64> = self.alphas.iter().map(|a| a.ln()).collect();
        det_f64(pts.len(), |i, j| (pts[j] as f64 * logs[i]).exp())
    }
}

/// `c · r^k` without overflow when `c` underflows first.
fn tilt(c: f64, k: i64, ln_r: f64) -> f64 {
    if c <= 0.0 {
        if c == 0.0 {
            0.0
        } else {
            -((-c).ln() + k as f64 * ln_r).exp()
        }
    } else {
        (c.ln() + k as f64 * ln_r).exp()
    }
}

fn check_q(q: f64, n: usize) -> Result<()> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::invalid(format!("q must lie in (0,1), got {q}")));
    }
    if n < 2 {
        return Err(Error::invalid("down kernels need n >= 2"));
    }
    Ok(())
}

/// `T_n(X,Y) = det[α_i^{y_j}]/det[α_i^{x_j}] · det[f(x_i − y_j)] / ∏F(α_i⁻¹)`.
pub fn toeplitz_t(spec: &ToeplitzSpec, x: &XConfig, y: &XConfig) -> Result<f64> {
    let n = x.len();
    if y.len() != n || spec.alphas.len() < n || spec.fvals.len() < n {
        return Err(Error::invalid(format!(
            "T_n needs |X| = |Y| <= {}, got {} and {}",
            spec.alphas.len(),
            n,
            y.len()
        )));
    }
    let (xs, ys) = (x.points(), y.points());
    let mut fm = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            fm[i][j] = spec.f(xs[i] - ys[j])?;
        }
    }
    let d = det_f64(n, |i, j| fm[i][j]);
    if d == 0.0 {
        return Ok(0.0);
    }
    let norm: f64 = spec.fvals[..n].iter().product();
    Ok(spec.alpha_det(ys) / spec.alpha_det(xs) * d / norm)
}

/// `Tⁿₙ₋₁(X,Y)` with `y_n = virt` supplied by `ToeplitzSpec::virt_rule`.
pub fn toeplitz_tdown(spec: &ToeplitzSpec, x: &XConfig, y: &XConfig) -> Result<f64> {
    let n = x.len();
    if y.len() + 1 != n || spec.alphas.len() < n || spec.fvals.len() + 1 < n {
        return Err(Error::invalid(format!(
            "T^n_(n-1) needs |Y| = |X| - 1 with |X| <= {}, got {} and {}",
            spec.alphas.len(),
            n,
            y.len()
        )));
    }
    let virt = spec
        .virt_rule
        .as_ref()
        .ok_or_else(|| Error::invalid("down kernel needs a virtual-variable rule"))?;
    let (xs, ys) = (x.points(), y.points());
    let mut fm = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n - 1 {
            fm[i][j] = spec.f_down(xs[i] - ys[j])?;
        }
        fm[i][n - 1] = virt(xs[i]);
    }
    let d = det_f64(n, |i, j| fm[i][j]);
    if d == 0.0 {
        return Ok(0.0);
    }
    let norm: f64 = spec.fvals[..n - 1].iter().product();
    Ok(spec.alpha_det(ys) / spec.alpha_det(xs) * d / norm)
}

/// Largest `|x_i − y_j|` between coordinates of signatures in the two boxes.
pub fn coordinate_reach(rows: &SignatureBox, cols: &SignatureBox) -> i64 {
    (rows.hi() - cols.lo()).max(cols.hi() - rows.lo()) + rows.level().max(cols.level()) as i64
}

/// `Δⁿₙ₋₁` by both routes.
#[derive(Clone, Debug)]
pub struct DeltaKernel {
    pub rows: SignatureBox,
    pub cols: SignatureBox,
    /// `ℚ^{χ_n} Λⁿₙ₋₁` truncated to the row box.
    pub product: DMatrix<f64>,
    /// `Tⁿₙ₋₁(…; Ψ_ω F_n)` evaluated pointwise.
    pub direct: DMatrix<f64>,
    /// Rows where the product is free of truncation error.
    pub checked_rows: Vec<usize>,
    pub defect: f64,
}

pub fn delta_kernel(n: usize, omega: &OmegaPoint, q: f64, rows: &SignatureBox, cols: &SignatureBox) -> Result<DeltaKernel> {
    check_q(q, n)?;
    validate_q_case(omega, n, q)?;
    let qn = transition_det(omega, n, Deformation::Quantum(q), rows)?;
    let link = link_uqn(n, q, rows, cols)?;
    let product = &qn.entries * &link.entries;
    let spec = ToeplitzSpec::delta(omega, n, q, coordinate_reach(rows, cols))?;
    let data: Vec<Vec<f64>> = rows
        .items()
        .par_iter()
        .map(|lam| {
            let x = lam.to_xconfig();
            cols.items()
                .iter()
                .map(|mu| toeplitz_tdown(&spec, &x, &mu.to_xconfig()))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let direct = DMatrix::from_fn(rows.len(), cols.len(), |i, j| data[i][j]);
    let checked_rows = qn.interior_rows();
    let mut defect = 0.0f64;
    for &i in &checked_rows {
        for j in 0..cols.len() {
            defect = defect.max((product[(i, j)] - direct[(i, j)]).abs());
        }
    }
    Ok(DeltaKernel {
        rows: rows.clone(),
        cols: cols.clone(),
        product,
        direct,
        checked_rows,
        defect,
    })
}

/// Escape probability per side below which candidate states are dropped.
pub const SAMPLER_EPS: f64 = 1e-15;

/// Sequential sampler for `P_N`: `μ⁽¹⁾ ~ ℚ^{χ₁}(λ⁽¹⁾, ·)`, then
/// `μ⁽ⁿ⁾ ∝ ℚ^{χ_n}(λ⁽ⁿ⁾, μ) Λ(μ, μ⁽ⁿ⁻¹⁾)` over `μ ≻ μ⁽ⁿ⁻¹⁾`.
///
/// Candidates are limited to the displacement radius of each level, so the
/// enumerated normalizer differs from `Δ` by at most `2·SAMPLER_EPS`.
#[derive(Clone, Debug)]
pub struct MultilevelSampler {
    pub omega: OmegaPoint,
    pub q: f64,
    pub depth: usize,
    radii: Vec<(i64, i64)>,
    kernels: Vec<DeterminantalKernel>,
    deltas: Vec<Option<ToeplitzSpec>>,
    cover: (i64, i64),
}

fn part_range(p: &GTPattern) -> (i64, i64) {
    let lo = p.levels().iter().map(|l| l.last()).min().unwrap_or(0);
    let hi = p.levels().iter().map(|l| l.first()).max().unwrap_or(0);
    (lo, hi)
}

impl MultilevelSampler {
    pub fn new(omega: &OmegaPoint, q: f64, depth: usize) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::invalid(format!("q must lie in (0,1), got {q}")));
        }
        if depth == 0 {
            return Err(Error::invalid("pattern depth must be at least 1"));
        }
        validate_q_case(omega, depth, q)?;
        let radii = (1..=depth)
            .map(|n| Ok(DisplacementLaw::one_step(omega, n, Deformation::Quantum(q))?.radius(SAMPLER_EPS)))
            .collect::<Result<Vec<_>>>()?;
        Ok(MultilevelSampler {
            omega: omega.clone(),
            q,
            depth,
            radii,
            kernels: Vec::new(),
            deltas: Vec::new(),
            cover: (1, 0),
        })
    }

    /// Rebuilds the coefficient windows when `state` reaches outside the
    /// range they were built for.
    fn ensure(&mut self, state: &GTPattern) -> Result<()> {
        if state.depth() != self.depth {
            return Err(Error::invalid(format!(
                "pattern depth {} does not match sampler depth {}",
                state.depth(),
                self.depth
            )));
        }
        let (lo, hi) = part_range(state);
        if lo >= self.cover.0 && hi <= self.cover.1 {
            return Ok(());
        }
        let below = self.radii.iter().map(|r| r.0).max().unwrap_or(0);
        let above = self.radii.iter().map(|r| r.1).max().unwrap_or(0);
        let slack = 8 + (hi - lo) / 2;
        let (clo, chi) = (lo - slack, hi + slack);
        let (klo, khi) = (clo - below, chi + above);
        let qd = Deformation::Quantum(self.q);
        self.kernels = (1..=self.depth)
            .map(|n| DeterminantalKernel::new(&self.omega, n, qd, klo, khi))
            .collect::<Result<_>>()?;
        self.deltas = (1..=self.depth)
            .map(|n| {
                if n < 2 {
                    return Ok(None);
                }
                let reach = khi - klo + n as i64;
                ToeplitzSpec::delta(&self.omega, n, self.q, reach).map(Some)
            })
            .collect::<Result<_>>()?;
        self.cover = (clo, chi);
        Ok(())
    }

    /// Candidate `μ⁽ⁿ⁾` with weights `ℚ(λ, μ) Λ(μ, μ')`, or `μ⁽¹⁾` with
    /// weights `ℚ(λ, μ)` when `prev` is `None`.
    fn candidates(&self, lam: &Signature, prev: Option<&Signature>) -> Vec<(Signature, f64)> {
        let n = lam.len();
        let (below, above) = self.radii[n - 1];
        let kernel = &self.kernels[n - 1];
        let qd = Deformation::Quantum(self.q);
        let mut ranges: Vec<(i64, i64)> = Vec::with_capacity(n);
        match prev {
            None => ranges.push((lam.first() - below, lam.first() + above)),
            Some(p) => {
                let pp = p.parts();
                for i in 0..n {
                    let top = if i == 0 { lam.first() + above } else { pp[i - 1] };
                    let bot = if i == n - 1 { lam.last() - below } else { pp[i] };
                    ranges.push((bot, top));
                }
            }
        }
        let mut out = Vec::new();
        let mut cur = vec![0i64; n];
        fn rec(
            i: usize,
            ranges: &[(i64, i64)],
            cur: &mut Vec<i64>,
            emit: &mut dyn FnMut(&[i64]),
        ) {
            if i == ranges.len() {
                emit(cur);
                return;
            }
            let (bot, top) = ranges[i];
            let top = if i > 0 { top.min(cur[i - 1]) } else { top };
            for v in (bot..=top).rev() {
                cur[i] = v;
                rec(i + 1, ranges, cur, emit);
            }
        }
        rec(0, &ranges, &mut cur, &mut |parts: &[i64]| {
            let mu = Signature::new(parts.to_vec()).expect("weakly decreasing by construction");
            let mut w = kernel.entry(lam, &mu);
            if let Some(p) = prev {
                if w != 0.0 {
                    w *= link_entry(&mu, p, qd);
                }
            }
            if w != 0.0 {
                out.push((mu, w));
            }
        });
        out
    }

    /// One step of `P_N` from `state`.
    pub fn step<R: Rng + ?Sized>(&mut self, state: &GTPattern, rng: &mut R) -> Result<GTPattern> {
        self.ensure(state)?;
        let mut levels: Vec<Signature> = Vec::with_capacity(self.depth);
        for n in 1..=self.depth {
            let cands = self.candidates(state.level(n), levels.last());
            let total: f64 = cands.iter().map(|(_, w)| w).sum();
            if !(total > 0.0 && total.is_finite()) {
                return Err(Error::Resampling(format!(
                    "normalizer {total:e} at level {n} from {} given {:?}",
                    state.level(n),
                    levels.last().map(|s| s.to_string())
                )));
            }
            let u = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = cands.len() - 1;
            for (k, (_, w)) in cands.iter().enumerate() {
                acc += w;
                if u < acc {
                    pick = k;
                    break;
                }
            }
            levels.push(cands[pick].0.clone());
        }
        GTPattern::new(levels)
    }

    /// The sampler's exact one-step law, by enumerating every branch.
    pub fn step_law(&mut self, state: &GTPattern) -> Result<Vec<(GTPattern, f64)>> {
        self.ensure(state)?;
        let mut partial: Vec<(Vec<Signature>, f64)> = vec![(Vec::new(), 1.0)];
        for n in 1..=self.depth {
            let mut next = Vec::new();
            for (levels, p) in partial {
                let cands = self.candidates(state.level(n), levels.last());
                let total: f64 = cands.iter().map(|(_, w)| w).sum();
                if !(total > 0.0) {
                    return Err(Error::Resampling(format!("zero normalizer at level {n}")));
                }
                for (mu, w) in cands {
                    let mut l = levels.clone();
                    l.push(mu);
                    next.push((l, p * w / total));
                }
            }
            partial = next;
        }
        partial
            .into_iter()
            .map(|(l, p)| Ok((GTPattern::new(l)?, p)))
            .collect()
    }

    /// `P_N(X, Y)` from the product formula, with `Δ` from the Toeplitz route.
    pub fn pn_formula(&mut self, x: &GTPattern, y: &GTPattern) -> Result<f64> {
        self.ensure(x)?;
        if y.depth() != self.depth {
            return Err(Error::invalid("pattern depths differ"));
        }
        let qd = Deformation::Quantum(self.q);
        let mut p = self.kernels[0].entry(x.level(1), y.level(1));
        for n in 2..=self.depth {
            if p == 0.0 {
                return Ok(0.0);
            }
            let (lam, mu, prev) = (x.level(n), y.level(n), y.level(n - 1));
            let spec = self.deltas[n - 1].as_ref().expect("built for n >= 2");
            let delta = toeplitz_tdown(spec, &lam.to_xconfig(), &prev.to_xconfig())?;
            p *= self.kernels[n - 1].entry(lam, mu) * link_entry(mu, prev, qd) / delta;
        }
        Ok(p)
    }

    /// `Δⁿₙ₋₁(λ, μ')` by the Toeplitz route.
    pub fn delta(&mut self, state: &GTPattern, n: usize, prev: &Signature) -> Result<f64> {
        self.ensure(state)?;
        if n < 2 || n > self.depth {
            return Err(Error::invalid(format!("level {n} has no down kernel")));
        }
        let spec = self.deltas[n - 1].as_ref().expect("built for n >= 2");
        toeplitz_tdown(spec, &state.level(n).to_xconfig(), &prev.to_xconfig())
    }
}

/// One step of `P_N` from `state` with a fresh sampler seeded by `seed`.
pub fn multilevel_step(state: &GTPattern, omega: &OmegaPoint, q: f64, seed: u64) -> Result<GTPattern> {
    let mut sampler = MultilevelSampler::new(omega, q, state.depth())?;
    let mut rng = crate::evolve::trajectory_rng(seed, 0);
    sampler.step(state, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(p: &[i64]) -> Signature {
        Signature::new(p.to_vec()).unwrap()
    }

    fn xc(p: &[i64]) -> XConfig {
        XConfig::new(p.to_vec()).unwrap()
    }

    #[test]
    fn level_one_reduces_to_coefficients() {
        let om = OmegaPoint::pure_gamma_plus(0.5);
        let spec = ToeplitzSpec::generator(&om, 1, 0.5, 10).unwrap();
        let w = phi_coeffs_series(&om, -10, 10).unwrap();
        for (x, y) in [(0, 0), (0, 3), (2, 1), (-1, 4)] {
            let t = toeplitz_t(&spec, &xc(&[x]), &xc(&[y])).unwrap();
            assert!((t - w.get(y - x)).abs() < 1e-15);
        }
    }

    #[test]
    fn trivial_f_is_identity() {
        let spec = ToeplitzSpec::trivial(vec![1.0, 4.0, 16.0]).unwrap();
        let x = xc(&[-3, 0, 2]);
        assert!((toeplitz_t(&spec, &x, &x).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(toeplitz_t(&spec, &x, &xc(&[-3, 1, 2])).unwrap(), 0.0);
    }

    #[test]
    fn link_spec_coefficients_and_hand_value() {
        let q = 0.5;
        let spec = ToeplitzSpec::link(2, q, 6).unwrap();
        assert_eq!(spec.fcoeffs.get(-1), 0.0);
        assert!((spec.fcoeffs.get(3) - q.powi(-6)).abs() < 1e-12);
        let v = toeplitz_tdown(&spec, &sig(&[1, 0]).to_xconfig(), &sig(&[1]).to_xconfig()).unwrap();
        assert!((v - q / (q + 1.0 / q)).abs() < 1e-14);
        // (2,0) does not interlace (3)
        let z = toeplitz_tdown(&spec, &sig(&[2, 0]).to_xconfig(), &sig(&[3]).to_xconfig()).unwrap();
        assert!(z.abs() < 1e-14);
    }

    #[test]
    fn missing_window_is_a_resource_error() {
        let spec = ToeplitzSpec::link(2, 0.5, 1).unwrap();
        assert!(matches!(
            toeplitz_tdown(&spec, &xc(&[-5, 5]), &xc(&[0])),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn trivial_omega_delta_is_link() {
        let rows = SignatureBox::new(2, -2, 2).unwrap();
        let cols = SignatureBox::new(1, -2, 2).unwrap();
        let d = delta_kernel(2, &OmegaPoint::zero(), 0.5, &rows, &cols).unwrap();
        let l = link_uqn(2, 0.5, &rows, &cols).unwrap();
        assert_eq!(d.product, l.entries);
        assert!(d.defect < 1e-12, "{}", d.defect);
    }

    #[test]
    fn trivial_omega_step_is_identity() {
        let p = GTPattern::new(vec![sig(&[1]), sig(&[2, 0]), sig(&[2, 1, -1])]).unwrap();
        for seed in 0..5 {
            assert_eq!(multilevel_step(&p, &OmegaPoint::zero(), 0.5, seed).unwrap(), p);
        }
    }

    #[test]
    fn generator_route_equals_toeplitz_route() {
        let om = OmegaPoint::pure_beta_plus(0.3);
        let bx = SignatureBox::new(2, -2, 3).unwrap();
        let qn = transition_det(&om, 2, Deformation::Quantum(0.5), &bx).unwrap();
        let spec = ToeplitzSpec::generator(&om, 2, 0.5, coordinate_reach(&bx, &bx)).unwrap();
        for (i, lam) in bx.items().iter().enumerate() {
            for (j, mu) in bx.items().iter().enumerate() {
                let t = toeplitz_t(&spec, &lam.to_xconfig(), &mu.to_xconfig()).unwrap();
                assert!((t - qn.entries[(i, j)]).abs() <= 1e-10, "{lam} -> {mu}");
            }
        }
    }

    #[test]
    fn down_kernel_equals_link() {
        for q in [0.5, 0.8] {
            for n in 2..=3 {
                let rows = SignatureBox::new(n, -2, 2).unwrap();
                let cols = SignatureBox::new(n - 1, -2, 2).unwrap();
                let link = link_uqn(n, q, &rows, &cols).unwrap();
                let spec = ToeplitzSpec::link(n, q, coordinate_reach(&rows, &cols)).unwrap();
                for (i, lam) in rows.items().iter().enumerate() {
                    for (j, mu) in cols.items().iter().enumerate() {
                        let t = toeplitz_tdown(&spec, &lam.to_xconfig(), &mu.to_xconfig()).unwrap();
                        assert!((t - link.entries[(i, j)]).abs() <= 1e-10, "q={q} {lam} -> {mu}");
                    }
                }
            }
        }
    }

    #[test]
    fn delta_two_routes_and_row_sums() {
        let om = OmegaPoint::pure_beta_plus(0.3);
        let rows = SignatureBox::new(2, -3, 4).unwrap();
        let cols = SignatureBox::new(1, -3, 4).unwrap();
        let d = delta_kernel(2, &om, 0.5, &rows, &cols).unwrap();
        assert!(!d.checked_rows.is_empty());
        assert!(d.defect <= 1e-10, "{:e}", d.defect);
        // rows whose whole support lies in the box
        for lam in [sig(&[1, 0]), sig(&[2, -1]), sig(&[0, 0])] {
            let i = rows.index_of(&lam).unwrap();
            let s: f64 = d.direct.row(i).iter().sum();
            assert!((s - 1.0).abs() <= 1e-10, "{lam}: {s}");
        }
    }

    fn pattern(levels: &[&[i64]]) -> GTPattern {
        GTPattern::new(levels.iter().map(|l| sig(l)).collect()).unwrap()
    }

    #[test]
    fn sampler_law_is_the_product_formula() {
        let om = OmegaPoint::pure_beta_plus(0.3);
        let mut s = MultilevelSampler::new(&om, 0.5, 2).unwrap();
        for x in [pattern(&[&[0], &[1, 0]]), pattern(&[&[1], &[1, 1]]), pattern(&[&[0], &[2, -1]])] {
            let law = s.step_law(&x).unwrap();
            let total: f64 = law.iter().map(|(_, p)| p).sum();
            assert!((total - 1.0).abs() <= 1e-10);
            let mut formula_total = 0.0;
            for (y, p) in &law {
                assert!(*p >= 0.0);
                let f = s.pn_formula(&x, y).unwrap();
                formula_total += f;
                assert!((p - f).abs() <= 1e-10, "{x:?} -> {y:?}: {p} vs {f}");
            }
            assert!((formula_total - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn top_marginal_under_gibbs_start() {
        let om = OmegaPoint::pure_beta_plus(0.3);
        let q = 0.5;
        let top = sig(&[1, -1]);
        let mut s = MultilevelSampler::new(&om, q, 2).unwrap();
        let mut marginal: Vec<(Signature, f64)> = Vec::new();
        for below in crate::signatures::enumerate_interlacing(&top).unwrap() {
            let g = link_entry(&top, &below, Deformation::Quantum(q));
            let x = GTPattern::new(vec![below, top.clone()]).unwrap();
            for (y, p) in s.step_law(&x).unwrap() {
                let mu = y.top().clone();
                match marginal.iter_mut().find(|(m, _)| *m == mu) {
                    Some(e) => e.1 += g * p,
                    None => marginal.push((mu, g * p)),
                }
            }
        }
        let kernel = DeterminantalKernel::new(&om, 2, Deformation::Quantum(q), -4, 4).unwrap();
        for (mu, p) in &marginal {
            assert!((p - kernel.entry(&top, mu)).abs() <= 1e-10, "{mu}");
        }
        let total: f64 = marginal.iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn step_is_seed_deterministic() {
        let om = OmegaPoint {
            beta_plus: vec![0.3],
            alpha_minus: vec![0.2],
            gamma_plus: 0.2,
            ..OmegaPoint::zero()
        };
        let p = pattern(&[&[0], &[1, 0], &[2, 0, -1]]);
        let a = multilevel_step(&p, &om, 0.8, 11).unwrap();
        assert_eq!(a, multilevel_step(&p, &om, 0.8, 11).unwrap());
    }
}
