//! Generators `𝕃 = ℚ − I` on `𝕊_N` for U(N) and U_q(N), built from
//! determinants of Laurent coefficients and, independently, from fusion
//! rules; plus the level-`k` measures `P_k` attached to `ω`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::det_f64;
use crate::signatures::{Signature, SignatureBox};
use crate::symfunc::{dim_u_f64, lr_coeffs, qdim, spec_q2};
use crate::voiculescu::{
    phi_coeffs_covering, phi_real, plus_part_coeffs, minus_part_coeffs, q_normalizer,
    validate_q_case, CoeffWindow, OmegaPoint,
};

/// Escape probability per side that defines interior rows.
pub const INTERIOR_EPS: f64 = 4e-10;

/// Classical `U(N)` or the deformation `U_q(N)` with `0 < q < 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QRepr", into = "QRepr")]
pub enum Deformation {
    Classical,
    Quantum(f64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum QRepr {
    Text(String),
    Num(f64),
}

impl TryFrom<QRepr> for Deformation {
    type Error = Error;
    fn try_from(r: QRepr) -> Result<Self> {
        match r {
            QRepr::Text(s) if s == "classical" => Ok(Deformation::Classical),
            QRepr::Text(s) => Err(Error::invalid(format!(
                "q must be \"classical\" or a number in (0,1], got {s:?}"
            ))),
            QRepr::Num(q) => Deformation::new(q),
        }
    }
}

impl From<Deformation> for QRepr {
    fn from(d: Deformation) -> Self {
        match d {
            Deformation::Classical => QRepr::Text("classical".into()),
            Deformation::Quantum(q) => QRepr::Num(q),
        }
    }
}

impl Deformation {
    /// `q = 1` is classical; otherwise `q` must lie in `(0,1)`.
    pub fn new(q: f64) -> Result<Self> {
        if q == 1.0 {
            Ok(Deformation::Classical)
        } else if q > 0.0 && q < 1.0 {
            Ok(Deformation::Quantum(q))
        } else {
            Err(Error::invalid(format!("q must lie in (0,1], got {q}")))
        }
    }

    pub fn q(&self) -> f64 {
        match self {
            Deformation::Classical => 1.0,
            Deformation::Quantum(q) => *q,
        }
    }

    pub fn is_classical(&self) -> bool {
        matches!(self, Deformation::Classical)
    }

    /// Specialization point `y_i = q^{−2i}` (0-based).
    pub fn point(&self, i: usize) -> f64 {
        match self {
            Deformation::Classical => 1.0,
            Deformation::Quantum(q) => q.powi(-2 * i as i32),
        }
    }

    /// `s_λ(1, …, 1)` or `s_λ(1, q⁻², …)`: the weight in the determinantal
    /// dimension ratio.
    pub fn spec_weight(&self, lam: &Signature) -> f64 {
        match self {
            Deformation::Classical => dim_u_f64(lam),
            Deformation::Quantum(q) => spec_q2(lam, *q).expect("q validated"),
        }
    }

    /// `dim_u` or `qdim`: the dimension entering fusion rules.
    pub fn fusion_dim(&self, lam: &Signature) -> f64 {
        match self {
            Deformation::Classical => dim_u_f64(lam),
            Deformation::Quantum(q) => qdim(lam, *q).expect("q validated"),
        }
    }

    /// Parameter checks for the kernels at level `n`.
    pub fn validate(&self, omega: &OmegaPoint, n: usize) -> Result<()> {
        match self {
            Deformation::Classical => omega.validate(),
            Deformation::Quantum(q) => validate_q_case(omega, n, *q),
        }
    }

    /// `∏_{i=1}^n Φ_ω(y_i)`; 1 classically.
    pub fn normalizer(&self, omega: &OmegaPoint, n: usize) -> Result<f64> {
        match self {
            Deformation::Classical => Ok(1.0),
            Deformation::Quantum(q) => q_normalizer(omega, n, *q),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Generator,
    Transition,
    Link,
}

#[derive(Clone, Debug, Serialize)]
pub struct KernelMeta {
    pub omega: Option<OmegaPoint>,
    pub level: usize,
    pub q: Deformation,
    pub route: String,
    /// Rows inset by `(below, above)` lose at most `escape_bound` of mass.
    pub radius: Option<(i64, i64)>,
    pub escape_bound: f64,
}

/// Dense matrix indexed by signature boxes.
#[derive(Clone, Debug)]
pub struct KernelMatrix {
    pub rows: SignatureBox,
    pub cols: SignatureBox,
    pub entries: DMatrix<f64>,
    pub kind: KernelKind,
    pub meta: KernelMeta,
}

impl KernelMatrix {
    pub fn entry(&self, lam: &Signature, mu: &Signature) -> Option<f64> {
        Some(self.entries[(self.rows.index_of(lam)?, self.cols.index_of(mu)?)])
    }

    pub fn is_square(&self) -> bool {
        self.rows.level() == self.cols.level() && self.rows.len() == self.cols.len()
    }

    /// `ℚ`, adding the identity to a generator.
    pub fn transition(&self) -> KernelMatrix {
        let mut out = self.clone();
        if self.kind == KernelKind::Generator {
            for i in 0..out.rows.len() {
                out.entries[(i, i)] += 1.0;
            }
            out.kind = KernelKind::Transition;
        }
        out
    }

    /// `𝕃 = ℚ − I`.
    pub fn generator(&self) -> KernelMatrix {
        let mut out = self.clone();
        if self.kind == KernelKind::Transition {
            for i in 0..out.rows.len() {
                out.entries[(i, i)] -= 1.0;
            }
            out.kind = KernelKind::Generator;
        }
        out
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.entries.row_iter().map(|r| r.sum()).collect()
    }

    /// Mass each row loses to states outside the column box.
    pub fn deficits(&self) -> Vec<f64> {
        let base = if self.kind == KernelKind::Generator { 0.0 } else { 1.0 };
        self.row_sums().into_iter().map(|s| base - s).collect()
    }

    /// Rows inset by the recorded radius; every row when none is recorded.
    pub fn interior_rows(&self) -> Vec<usize> {
        match self.meta.radius {
            None => (0..self.rows.len()).collect(),
            Some((below, above)) => (0..self.rows.len())
                .filter(|&i| self.rows.is_inset(self.rows.get(i), below, above))
                .collect(),
        }
    }

    /// Nonzero entries of row `i`.
    pub fn row_support(&self, i: usize) -> Vec<(Signature, f64)> {
        (0..self.cols.len())
            .filter(|&j| self.entries[(i, j)] != 0.0)
            .map(|j| (self.cols.get(j).clone(), self.entries[(i, j)]))
            .collect()
    }

    /// `max |self − other|` over the listed rows.
    pub fn max_abs_diff(&self, other: &KernelMatrix, rows: &[usize]) -> Result<f64> {
        if self.entries.shape() != other.entries.shape() {
            return Err(Error::invalid(format!(
                "shape mismatch {:?} vs {:?}",
                self.entries.shape(),
                other.entries.shape()
            )));
        }
        let mut worst = 0.0f64;
        for &i in rows {
            for j in 0..self.cols.len() {
                worst = worst.max((self.entries[(i, j)] - other.entries[(i, j)]).abs());
            }
        }
        Ok(worst)
    }
}

/// Laws of the total upward and downward displacement of one `ℚ` step.
///
/// `ℚ` factors as a part that only raises coordinates and one that only
/// lowers them; the total raise is a sum over `i` of independent variables
/// with law `φ⁺(n) y_iⁿ / Φ⁺(y_i)`, and it bounds `μ₁ − λ₁`. Likewise
/// downward. `tail_*` is mass not represented in the vectors.
#[derive(Clone, Debug)]
pub struct DisplacementLaw {
    pub up: Vec<f64>,
    pub down: Vec<f64>,
    pub tail_up: f64,
    pub tail_down: f64,
}

const LAW_CAP: usize = 1 << 14;

fn tilted(coeffs: impl Fn(usize) -> Vec<f64>, norm: f64, log_x: f64) -> (Vec<f64>, f64) {
    let mut len = 64;
    loop {
        let c = coeffs(len);
        let t: Vec<f64> = c
            .iter()
            .enumerate()
            .map(|(n, &v)| if v > 0.0 { (v.ln() + n as f64 * log_x).exp() / norm } else { 0.0 })
            .collect();
        let tail = (1.0 - t.iter().sum::<f64>()).max(0.0);
        if tail < 1e-15 || len >= LAW_CAP {
            return trim(t, tail);
        }
        len *= 2;
    }
}

/// Drops the far end of a law once its mass is below 1e−18, moving it to the tail.
fn trim(mut v: Vec<f64>, mut tail: f64) -> (Vec<f64>, f64) {
    let mut acc = 0.0;
    while let Some(&last) = v.last() {
        if v.len() <= 1 || acc + last > 1e-18 {
            break;
        }
        acc += last;
        v.pop();
    }
    tail += acc;
    if v.len() > LAW_CAP {
        tail += v[LAW_CAP..].iter().sum::<f64>();
        v.truncate(LAW_CAP);
    }
    (v, tail)
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `Σ_k Pois(k; t) f^{*k}` for a (possibly defective) law `f` on `n ≥ 0`.
/// Large `t` is halved until `e^{−t(1−f₀)}` is representable, then squared back.
fn compound_poisson(f: &[f64], f_tail: f64, t: f64) -> (Vec<f64>, f64) {
    let f0 = f.first().copied().unwrap_or(0.0);
    if t * (1.0 - f0) > 600.0 {
        let (half, half_tail) = compound_poisson(f, f_tail, t / 2.0);
        let mass = 1.0 - half_tail;
        let (v, dropped) = trim(convolve(&half, &half), 0.0);
        let kept: f64 = v.iter().sum();
        return (v, (1.0 - kept).max(1.0 - mass * mass).max(dropped));
    }
    let total = (-t * f_tail).exp();
    let mut g = vec![(-t * (1.0 - f0)).exp()];
    let mut sum = g[0];
    while total - sum > 1e-18 && g.len() < LAW_CAP {
        let n = g.len();
        let mut acc = 0.0;
        for j in 1..=n.min(f.len() - 1) {
            acc += j as f64 * f[j] * g[n - j];
        }
        let v = t / n as f64 * acc;
        g.push(v);
        sum += v;
    }
    let (g, dropped) = trim(g, 0.0);
    let kept: f64 = g.iter().sum();
    (g, (1.0 - kept).max(dropped))
}

fn upper_tail(v: &[f64], tail: f64, r: usize) -> f64 {
    tail + v.iter().skip(r + 1).sum::<f64>()
}

impl DisplacementLaw {
    /// One step at level `n`.
    pub fn one_step(omega: &OmegaPoint, n: usize, q: Deformation) -> Result<Self> {
        q.validate(omega, n)?;
        let plus = omega.plus_part();
        let minus = omega.minus_part();
        let (mut up, mut tail_up) = (vec![1.0], 0.0);
        let (mut down, mut tail_down) = (vec![1.0], 0.0);
        for i in 0..n {
            let x = q.point(i);
            let (u, tu) = tilted(|l| plus_part_coeffs(omega, l), phi_real(&plus, x)?, x.ln());
            let (d, td) = tilted(|l| minus_part_coeffs(omega, l), phi_real(&minus, x)?, -x.ln());
            (up, tail_up) = trim(convolve(&up, &u), tail_up + tu);
            (down, tail_down) = trim(convolve(&down, &d), tail_down + td);
        }
        Ok(DisplacementLaw {
            up,
            down,
            tail_up,
            tail_down,
        })
    }

    /// Displacement after time `t` of the continuous-time chain, i.e. the
    /// compound Poisson(`t`) law of each side, by Panjer's recursion.
    pub fn after_time(&self, t: f64) -> Self {
        let (up, tail_up) = compound_poisson(&self.up, self.tail_up, t);
        let (down, tail_down) = compound_poisson(&self.down, self.tail_down, t);
        DisplacementLaw {
            up,
            down,
            tail_up,
            tail_down,
        }
    }

    /// Smallest `(below, above)` with each one-sided escape at most `eps`.
    pub fn radius(&self, eps: f64) -> (i64, i64) {
        let r = |v: &[f64], tail: f64| {
            (0..v.len().max(1))
                .find(|&r| upper_tail(v, tail, r) <= eps)
                .unwrap_or(v.len()) as i64
        };
        (r(&self.down, self.tail_down), r(&self.up, self.tail_up))
    }

    /// Bound on the mass leaving a box for a row inset by `(below, above)`.
    pub fn escape_bound(&self, radius: (i64, i64)) -> f64 {
        let (below, above) = radius;
        upper_tail(&self.down, self.tail_down, below.max(0) as usize)
            + upper_tail(&self.up, self.tail_up, above.max(0) as usize)
    }
}

/// Pointwise evaluator for `ℚ(λ,μ) = w(μ)/w(λ) · det[φ(μ_j − j − λ_i + i)] / Z`.
#[derive(Clone, Debug)]
pub struct DeterminantalKernel {
    pub omega: OmegaPoint,
    pub level: usize,
    pub q: Deformation,
    pub window: CoeffWindow,
    pub normalizer: f64,
}

impl DeterminantalKernel {
    /// Validates `ω` and builds a window covering every index between
    /// signatures with parts in `[lo, hi]`.
    pub fn new(omega: &OmegaPoint, level: usize, q: Deformation, lo: i64, hi: i64) -> Result<Self> {
        q.validate(omega, level)?;
        let reach = hi - lo + level as i64 - 1;
        let window = phi_coeffs_covering(omega, -reach, reach)?;
        Ok(DeterminantalKernel {
            omega: omega.clone(),
            level,
            q,
            window,
            normalizer: q.normalizer(omega, level)?,
        })
    }

    /// Kernel of `Φ_ω^k`, i.e. the `k`-th power of `ℚ`.
    pub fn power(&self, k: usize, lo: i64, hi: i64) -> Result<Self> {
        DeterminantalKernel::new(&self.omega.power(k), self.level, self.q, lo, hi)
    }

    /// `det[φ(μ_j − j − λ_i + i)]`.
    pub fn minor(&self, lam: &Signature, mu: &Signature) -> f64 {
        let (l, m) = (lam.parts(), mu.parts());
        det_f64(self.level, |i, j| {
            self.window.get(m[j] - j as i64 - l[i] + i as i64)
        })
    }

    pub fn entry(&self, lam: &Signature, mu: &Signature) -> f64 {
        let m = self.minor(lam, mu);
        if m == 0.0 {
            return 0.0;
        }
        self.q.spec_weight(mu) / self.q.spec_weight(lam) * m / self.normalizer
    }

    /// Row `λ` over the column box.
    pub fn row(&self, lam: &Signature, cols: &SignatureBox) -> Vec<f64> {
        let wl = self.q.spec_weight(lam);
        cols.items()
            .iter()
            .map(|mu| {
                let m = self.minor(lam, mu);
                if m == 0.0 {
                    0.0
                } else {
                    self.q.spec_weight(mu) / wl * m / self.normalizer
                }
            })
            .collect()
    }
}

fn check_level(omega: &OmegaPoint, n: usize, bx: &SignatureBox) -> Result<()> {
    if n == 0 || bx.level() != n {
        return Err(Error::invalid(format!(
            "box level {} does not match N = {n}",
            bx.level()
        )));
    }
    omega.validate()
}

/// Transition matrix `ℚ` on `bx` by the determinantal formula.
pub fn transition_det(omega: &OmegaPoint, n: usize, q: Deformation, bx: &SignatureBox) -> Result<KernelMatrix> {
    check_level(omega, n, bx)?;
    let kernel = DeterminantalKernel::new(omega, n, q, bx.lo(), bx.hi())?;
    let rows: Vec<Vec<f64>> = bx.items().par_iter().map(|lam| kernel.row(lam, bx)).collect();
    let law = DisplacementLaw::one_step(omega, n, q)?;
    let radius = law.radius(INTERIOR_EPS);
    Ok(KernelMatrix {
        rows: bx.clone(),
        cols: bx.clone(),
        entries: DMatrix::from_fn(bx.len(), bx.len(), |i, j| rows[i][j]),
        kind: KernelKind::Transition,
        meta: KernelMeta {
            omega: Some(omega.clone()),
            level: n,
            q,
            route: "determinantal".into(),
            radius: Some(radius),
            escape_bound: law.escape_bound(radius),
        },
    })
}

/// Generator `𝕃` of the U(N) dynamics attached to `ω`.
pub fn generator_un(omega: &OmegaPoint, n: usize, bx: &SignatureBox) -> Result<KernelMatrix> {
    Ok(transition_det(omega, n, Deformation::Classical, bx)?.generator())
}

/// Generator `𝕃` of the U_q(N) dynamics attached to `ω`.
pub fn generator_uqn(omega: &OmegaPoint, n: usize, q: f64, bx: &SignatureBox) -> Result<KernelMatrix> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::invalid(format!("q must lie in (0,1), got {q}")));
    }
    Ok(transition_det(omega, n, Deformation::Quantum(q), bx)?.generator())
}

/// Fusion-rule generator
/// `𝕃(α,β) = d(β)/d(α) Σ_γ P(γ) N^β_{αγ} / d(γ) − δ_{αβ}`.
///
/// The weights must sum to 1 within 1e−12.
pub fn generator_fusion(weights: &[(Signature, f64)], n: usize, q: Deformation, bx: &SignatureBox) -> Result<KernelMatrix> {
    let total: f64 = weights.iter().map(|(_, p)| p).sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(format!(
            "fusion weights must sum to 1 within 1e-12, got {total}"
        )));
    }
    generator_fusion_partial(weights, n, q, bx)
}

/// As [`generator_fusion`] but accepting weights of total mass at most 1,
/// e.g. a measure restricted to a box. Entries `(α, β)` all of whose
/// contributing `γ` carry weight are still exact; see [`fusion_covered`].
pub fn generator_fusion_partial(weights: &[(Signature, f64)], n: usize, q: Deformation, bx: &SignatureBox) -> Result<KernelMatrix> {
    if bx.level() != n {
        return Err(Error::invalid(format!("box level {} does not match N = {n}", bx.level())));
    }
    if let Some((g, _)) = weights.iter().find(|(g, _)| g.len() != n) {
        return Err(Error::invalid(format!(
            "weight support mixes lengths: {g} is not in S_{n}"
        )));
    }
    if weights.iter().any(|(_, p)| !(p.is_finite() && *p >= -1e-12)) {
        return Err(Error::invalid("fusion weights must be finite and at least -1e-12"));
    }
    let total: f64 = weights.iter().map(|(_, p)| p).sum();
    if total > 1.0 + 1e-12 {
        return Err(Error::invalid(format!("fusion weights exceed total mass 1: {total}")));
    }
    let rows: Vec<Vec<f64>> = bx
        .items()
        .par_iter()
        .map(|alpha| -> Result<Vec<f64>> {
            let mut row = vec![0.0; bx.len()];
            let da = q.fusion_dim(alpha);
            for (gamma, p) in weights {
                if *p == 0.0 {
                    continue;
                }
                let dg = q.fusion_dim(gamma);
                for (beta, c) in lr_coeffs(alpha, gamma)?.entries {
                    if let Some(j) = bx.index_of(&beta) {
                        row[j] += q.fusion_dim(&beta) / da * p * c as f64 / dg;
                    }
                }
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let mut entries = DMatrix::from_fn(bx.len(), bx.len(), |i, j| rows[i][j]);
    for i in 0..bx.len() {
        entries[(i, i)] -= 1.0;
    }
    Ok(KernelMatrix {
        rows: bx.clone(),
        cols: bx.clone(),
        entries,
        kind: KernelKind::Generator,
        meta: KernelMeta {
            omega: None,
            level: n,
            q,
            route: "fusion".into(),
            radius: None,
            escape_bound: (1.0 - total).max(0.0),
        },
    })
}

/// Whether every `γ` with `N^β_{αγ} ≠ 0` has all parts in `[wlo, whi]`.
/// Such `γ` satisfy `β_N − α₁ ≤ γ_N` and `γ₁ ≤ β₁ − α_N`.
pub fn fusion_covered(alpha: &Signature, beta: &Signature, wlo: i64, whi: i64) -> bool {
    beta.last() - alpha.first() >= wlo && beta.first() - alpha.last() <= whi
}

/// Probability vector on a box.
#[derive(Clone, Debug)]
pub struct Measure {
    pub states: SignatureBox,
    pub probs: Vec<f64>,
}

impl Measure {
    pub fn delta(states: &SignatureBox, lam: &Signature) -> Result<Self> {
        let i = states
            .index_of(lam)
            .ok_or_else(|| Error::invalid(format!("{lam} is outside the state box")))?;
        let mut probs = vec![0.0; states.len()];
        probs[i] = 1.0;
        Ok(Measure {
            states: states.clone(),
            probs,
        })
    }

    pub fn mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn get(&self, lam: &Signature) -> f64 {
        self.states.index_of(lam).map_or(0.0, |i| self.probs[i])
    }

    /// Nonzero entries as `(signature, probability)` pairs.
    pub fn weights(&self) -> Vec<(Signature, f64)> {
        self.states
            .items()
            .iter()
            .zip(&self.probs)
            .filter(|(_, p)| **p != 0.0)
            .map(|(s, p)| (s.clone(), *p))
            .collect()
    }
}

/// `det[φ(λ_i − i + j)]` over `λ` in `bx`, times `w(λ)/Z`.
pub(crate) fn level_measure(omega: &OmegaPoint, k: usize, q: Deformation, bx: &SignatureBox) -> Result<Measure> {
    check_level(omega, k, bx)?;
    q.validate(omega, k)?;
    let reach = bx.hi().abs().max(bx.lo().abs()) + k as i64;
    let w = phi_coeffs_covering(omega, -reach, reach)?;
    let z = q.normalizer(omega, k)?;
    let probs = bx
        .items()
        .par_iter()
        .map(|lam| {
            let p = lam.parts();
            let m = det_f64(k, |i, j| w.get(p[i] - i as i64 + j as i64));
            if m == 0.0 {
                0.0
            } else {
                m / z * q.spec_weight(lam)
            }
        })
        .collect();
    Ok(Measure {
        states: bx.clone(),
        probs,
    })
}

/// `P_k(λ) = det[φ(λ_i − i + j)] / ∏Φ_ω(q^{−2(i−1)}) · s_λ(1, q⁻², …)` on `bx`.
pub fn q2_schur_measure(omega: &OmegaPoint, k: usize, q: f64, bx: &SignatureBox) -> Result<Measure> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::invalid(format!("q must lie in (0,1), got {q}")));
    }
    level_measure(omega, k, Deformation::Quantum(q), bx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(p: &[i64]) -> Signature {
        Signature::new(p.to_vec()).unwrap()
    }

    #[test]
    fn trivial_omega_gives_zero_generator() {
        let bx = SignatureBox::new(2, -2, 2).unwrap();
        let l = generator_un(&OmegaPoint::zero(), 2, &bx).unwrap();
        assert!(l.entries.iter().all(|&v| v == 0.0));
        let lq = generator_uqn(&OmegaPoint::zero(), 2, 0.5, &bx).unwrap();
        assert!(lq.entries.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn level_one_pure_birth() {
        let b = 0.3;
        let bx = SignatureBox::new(1, -3, 3).unwrap();
        let l = generator_un(&OmegaPoint::pure_beta_plus(b), 1, &bx).unwrap();
        for m in -3..3 {
            assert!((l.entry(&sig(&[m]), &sig(&[m])).unwrap() + b).abs() < 1e-15);
            assert!((l.entry(&sig(&[m]), &sig(&[m + 1])).unwrap() - b).abs() < 1e-15);
            if m > -3 {
                assert_eq!(l.entry(&sig(&[m]), &sig(&[m - 1])).unwrap(), 0.0);
            }
        }
        let lq = generator_uqn(&OmegaPoint::pure_beta_plus(b), 1, 0.5, &bx).unwrap();
        assert!(lq.max_abs_diff(&l, &(0..bx.len()).collect::<Vec<_>>()).unwrap() < 1e-15);
    }

    #[test]
    fn level_two_beta_moves_by_zero_one_vectors() {
        let bx = SignatureBox::new(2, -3, 3).unwrap();
        let q = generator_un(&OmegaPoint::pure_beta_plus(0.3), 2, &bx).unwrap().transition();
        for i in q.interior_rows() {
            let lam = bx.get(i);
            for (mu, _) in q.row_support(i) {
                let d: Vec<i64> = mu.parts().iter().zip(lam.parts()).map(|(a, b)| a - b).collect();
                assert!(d.iter().all(|&x| x == 0 || x == 1), "{lam} -> {mu}");
            }
            assert!((q.row_sums()[i] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fusion_examples() {
        let bx = SignatureBox::new(2, 0, 3).unwrap();
        let w = vec![(sig(&[1, 0]), 1.0)];
        let q = generator_fusion(&w, 2, Deformation::Classical, &bx).unwrap().transition();
        assert!((q.entry(&sig(&[0, 0]), &sig(&[1, 0])).unwrap() - 1.0).abs() < 1e-15);
        assert!((q.entry(&sig(&[1, 0]), &sig(&[2, 0])).unwrap() - 0.75).abs() < 1e-15);
        assert!((q.entry(&sig(&[1, 0]), &sig(&[1, 1])).unwrap() - 0.25).abs() < 1e-15);

        let h = 0.5f64;
        let qq = generator_fusion(&w, 2, Deformation::Quantum(h), &bx).unwrap().transition();
        let expect = (h * h + 1.0 + 1.0 / (h * h)) / (h + 1.0 / h).powi(2);
        assert!((qq.entry(&sig(&[1, 0]), &sig(&[2, 0])).unwrap() - expect).abs() < 1e-14);

        let triv = vec![(sig(&[0, 0]), 1.0)];
        let l = generator_fusion(&triv, 2, Deformation::Classical, &bx).unwrap();
        assert!(l.entries.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn fusion_rejects_bad_weights() {
        let bx = SignatureBox::new(2, 0, 2).unwrap();
        let mixed = vec![(sig(&[1, 0]), 0.5), (sig(&[1]), 0.5)];
        assert!(matches!(
            generator_fusion(&mixed, 2, Deformation::Classical, &bx),
            Err(Error::InvalidArgument(_))
        ));
        let short = vec![(sig(&[1, 0]), 0.5)];
        assert!(generator_fusion(&short, 2, Deformation::Classical, &bx).is_err());
        assert!(generator_fusion_partial(&short, 2, Deformation::Classical, &bx).is_ok());
    }

    #[test]
    fn q2_measure_examples() {
        let bx1 = SignatureBox::new(1, -2, 3).unwrap();
        let p = q2_schur_measure(&OmegaPoint::pure_beta_plus(0.3), 1, 0.5, &bx1).unwrap();
        assert!((p.get(&sig(&[0])) - 0.7).abs() < 1e-15);
        assert!((p.get(&sig(&[1])) - 0.3).abs() < 1e-15);
        let bx2 = SignatureBox::new(2, -2, 3).unwrap();
        let p0 = q2_schur_measure(&OmegaPoint::zero(), 2, 0.5, &bx2).unwrap();
        assert_eq!(p0.get(&sig(&[0, 0])), 1.0);
        assert!((p0.mass() - 1.0).abs() < 1e-15);
        let p2 = q2_schur_measure(&OmegaPoint::pure_beta_plus(0.3), 2, 0.5, &bx2).unwrap();
        assert!((p2.mass() - 1.0).abs() < 1e-12);
        assert!(p2.probs.iter().all(|&v| v >= -1e-12));
    }

    #[test]
    fn q_validation_surfaces_as_domain_error() {
        let bx = SignatureBox::new(2, 0, 2).unwrap();
        let om = OmegaPoint {
            alpha_plus: vec![1.0],
            ..OmegaPoint::zero()
        };
        assert!(matches!(
            generator_uqn(&om, 2, 0.5, &bx),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn displacement_law_of_pure_birth() {
        let law = DisplacementLaw::one_step(&OmegaPoint::pure_beta_plus(0.3), 2, Deformation::Classical).unwrap();
        // two independent Bernoulli(0.3)
        assert!((law.up[0] - 0.49).abs() < 1e-15);
        assert!((law.up[1] - 0.42).abs() < 1e-15);
        assert!((law.up[2] - 0.09).abs() < 1e-15);
        assert_eq!(law.radius(1e-12), (0, 2));
        let t = law.after_time(1.0);
        let s: f64 = t.up.iter().sum::<f64>() + t.tail_up;
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quantum_tilt_shifts_mass_upwards() {
        // q-tilted Bernoulli: P(1) = b y / (1 - b + b y)
        let (b, q) = (0.3, 0.5);
        let law = DisplacementLaw::one_step(&OmegaPoint::pure_beta_plus(b), 2, Deformation::Quantum(q)).unwrap();
        let y = q.powi(-2);
        let p2 = b * y / (1.0 - b + b * y);
        assert!((law.up[2] - b * p2).abs() < 1e-15);
    }

    #[test]
    fn deformation_serde() {
        let c: Deformation = serde_json::from_str("\"classical\"").unwrap();
        assert_eq!(c, Deformation::Classical);
        let q: Deformation = serde_json::from_str("0.5").unwrap();
        assert_eq!(q, Deformation::Quantum(0.5));
        assert!(serde_json::from_str::<Deformation>("1.5").is_err());
        assert_eq!(serde_json::to_string(&Deformation::Classical).unwrap(), "\"classical\"");
    }
}
