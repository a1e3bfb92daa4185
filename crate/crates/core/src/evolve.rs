//! Continuous-time semigroup `ℚ_t = exp(t(ℚ − I))` by uniformization,
//! evolution of measures, and exact path sampling with a Poisson number of
//! `ℚ`-jumps.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::generators::{
    DeterminantalKernel, DisplacementLaw, KernelKind, KernelMatrix, Measure, INTERIOR_EPS,
};
use crate::signatures::{Signature, SignatureBox};

/// Generator for trajectory `stream` under `seed`: ChaCha8 seeded from the
/// master seed, with the trajectory index as the stream number. Streams
/// never overlap, so trajectories are independent of scheduling.
pub fn trajectory_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Poisson(`t`) weights `e^{−t} tᵏ/k!` up to the first `K` with tail below `tol`.
/// Past the mean the tail is bounded by a geometric series, which avoids
/// relying on `1 − Σ` (that difference stalls at rounding level).
pub fn poisson_weights(t: f64, tol: f64) -> Vec<f64> {
    let mut w = vec![(-t).exp()];
    let mut log_w = -t;
    let mut k = 0usize;
    loop {
        let ratio = t / (k + 1) as f64;
        if ratio < 1.0 && w[k] * ratio / (1.0 - ratio) < tol {
            break;
        }
        if k >= 100_000 {
            break;
        }
        k += 1;
        log_w += ratio.ln();
        w.push(log_w.exp());
    }
    w
}

/// Largest time handled by a single uniformized series; longer times are
/// split into halves and squared.
const SERIES_T_MAX: f64 = 32.0;

/// `ℚ_t = e^{−t} Σ_k tᵏ/k! ℚᵏ` on the box of `q`, truncated once the
/// Poisson tail is below `tol`.
pub fn semigroup_at(q: &KernelMatrix, t: f64, tol: f64) -> Result<KernelMatrix> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("time must be finite and nonnegative, got {t}")));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be positive, got {tol}")));
    }
    let base = q.transition();
    if !base.is_square() {
        return Err(Error::invalid("semigroup needs a square transition matrix"));
    }
    let mut halvings = 0;
    let mut tau = t;
    while tau > SERIES_T_MAX {
        tau /= 2.0;
        halvings += 1;
    }
    let weights = poisson_weights(tau, tol / 2f64.powi(halvings));
    let n = base.rows.len();
    let mut acc = DMatrix::<f64>::identity(n, n) * weights[0];
    let mut power = DMatrix::<f64>::identity(n, n);
    for w in &weights[1..] {
        power = &power * &base.entries;
        acc += &power * *w;
    }
    for _ in 0..halvings {
        acc = &acc * &acc;
    }
    let mut out = base.clone();
    out.entries = acc;
    out.meta.route = format!("{}+uniformization(t={t})", base.meta.route);
    if let Some(om) = &base.meta.omega {
        let law = DisplacementLaw::one_step(om, base.meta.level, base.meta.q)?.after_time(t);
        let radius = law.radius(INTERIOR_EPS);
        out.meta.radius = Some(radius);
        out.meta.escape_bound = law.escape_bound(radius) + tol;
    }
    Ok(out)
}

/// Row `λ` of `ℚ_t` over `cols`, summing rows of `ℚᵏ` computed directly as
/// the kernels of `Φ_ω^k`. Needs no propagation through intermediate states.
pub fn semigroup_row(kernel: &DeterminantalKernel, lam: &Signature, t: f64, tol: f64, cols: &SignatureBox) -> Result<Vec<f64>> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("time must be finite and nonnegative, got {t}")));
    }
    let lo = cols.lo().min(lam.last());
    let hi = cols.hi().max(lam.first());
    let weights = poisson_weights(t, tol);
    let mut row = vec![0.0; cols.len()];
    for (k, w) in weights.iter().enumerate() {
        let kk = kernel.power(k, lo, hi)?;
        for (r, v) in row.iter_mut().zip(kk.row(lam, cols)) {
            *r += w * v;
        }
    }
    Ok(row)
}

/// `P₀ ℚ_t`, with the mass lost to the box boundary.
pub fn evolve_measure(p0: &Measure, qt: &KernelMatrix) -> Result<(Measure, f64)> {
    let same = p0.states.level() == qt.rows.level()
        && p0.states.lo() == qt.rows.lo()
        && p0.states.hi() == qt.rows.hi();
    if !same {
        return Err(Error::invalid(format!(
            "measure on box (N={}, [{}, {}]) does not match kernel rows (N={}, [{}, {}])",
            p0.states.level(),
            p0.states.lo(),
            p0.states.hi(),
            qt.rows.level(),
            qt.rows.lo(),
            qt.rows.hi()
        )));
    }
    let m = qt.transition();
    let v = nalgebra::RowDVector::from_row_slice(&p0.probs) * &m.entries;
    let out = Measure {
        states: m.cols.clone(),
        probs: v.iter().copied().collect(),
    };
    let leak = p0.mass() - out.mass();
    Ok((out, leak))
}

/// Piecewise-constant path: jump times and the states entered, starting
/// with `(0, start)`. Only changes of state are recorded.
pub type Path = Vec<(f64, Signature)>;

/// Per-row cumulative distributions of a transition matrix.
#[derive(Clone, Debug)]
pub struct PathSampler {
    states: SignatureBox,
    cdf: Vec<Vec<(usize, f64)>>,
}

impl PathSampler {
    pub fn new(q: &KernelMatrix) -> Result<Self> {
        let m = q.transition();
        if !m.is_square() || m.kind != KernelKind::Transition {
            return Err(Error::invalid("path sampling needs a square transition matrix"));
        }
        let cdf = (0..m.rows.len())
            .map(|i| {
                let mut acc = 0.0;
                (0..m.cols.len())
                    .filter(|&j| m.entries[(i, j)] > 0.0)
                    .map(|j| {
                        acc += m.entries[(i, j)];
                        (j, acc)
                    })
                    .collect()
            })
            .collect();
        Ok(PathSampler {
            states: m.rows.clone(),
            cdf,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, start: &Signature, t_end: f64, rng: &mut R) -> Result<Path> {
        if !(t_end >= 0.0 && t_end.is_finite()) {
            return Err(Error::invalid(format!("t_end must be finite and nonnegative, got {t_end}")));
        }
        let mut cur = self
            .states
            .index_of(start)
            .ok_or_else(|| Error::invalid(format!("start {start} is outside the state box")))?;
        let mut path = vec![(0.0, start.clone())];
        let jumps = if t_end > 0.0 {
            Poisson::new(t_end)
                .map_err(|e| Error::invalid(e.to_string()))?
                .sample(rng) as usize
        } else {
            0
        };
        let mut times: Vec<f64> = (0..jumps).map(|_| rng.random::<f64>() * t_end).collect();
        times.sort_by(f64::total_cmp);
        for t in times {
            let u: f64 = rng.random();
            let row = &self.cdf[cur];
            match row.iter().find(|(_, c)| u < *c) {
                Some(&(j, _)) => {
                    if j != cur {
                        cur = j;
                        path.push((t, self.states.get(j).clone()));
                    }
                }
                None => {
                    return Err(Error::TruncationExit {
                        time: t,
                        from: self.states.get(cur).to_string(),
                        partial: path,
                    })
                }
            }
        }
        Ok(path)
    }
}

/// One path of the chain with transition `q`.
pub fn sample_path<R: Rng + ?Sized>(q: &KernelMatrix, start: &Signature, t_end: f64, rng: &mut R) -> Result<Path> {
    PathSampler::new(q)?.sample(start, t_end, rng)
}

/// `count` independent paths, path `i` driven by `trajectory_rng(seed, i)`.
pub fn sample_paths(q: &KernelMatrix, start: &Signature, t_end: f64, count: usize, seed: u64) -> Vec<Result<Path>> {
    let sampler = match PathSampler::new(q) {
        Ok(s) => s,
        Err(e) => return vec![Err(e)],
    };
    (0..count)
        .into_par_iter()
        .map(|i| sampler.sample(start, t_end, &mut trajectory_rng(seed, i as u64)))
        .collect()
}

/// State at time `t` on a path.
pub fn state_at(path: &Path, t: f64) -> &Signature {
    &path.iter().rev().find(|(s, _)| *s <= t).unwrap_or(&path[0]).1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::generator_un;
    use crate::voiculescu::OmegaPoint;

    fn sig(p: &[i64]) -> Signature {
        Signature::new(p.to_vec()).unwrap()
    }

    fn poisson_pmf(mean: f64, k: usize) -> f64 {
        (-mean + k as f64 * mean.ln() - (1..=k).map(|v| (v as f64).ln()).sum::<f64>()).exp()
    }

    #[test]
    fn time_zero_is_identity() {
        let bx = SignatureBox::new(2, -2, 2).unwrap();
        let q = generator_un(&OmegaPoint::pure_beta_plus(0.3), 2, &bx).unwrap();
        let q0 = semigroup_at(&q, 0.0, 1e-14).unwrap();
        assert_eq!(q0.entries, DMatrix::identity(bx.len(), bx.len()));
        assert!(semigroup_at(&q, -1.0, 1e-14).is_err());
    }

    #[test]
    fn pure_birth_is_poisson() {
        let b = 0.3;
        let bx = SignatureBox::new(1, 0, 40).unwrap();
        let q = generator_un(&OmegaPoint::pure_beta_plus(b), 1, &bx).unwrap();
        for t in [0.5, 2.0, 70.0] {
            let qt = semigroup_at(&q, t, 1e-15).unwrap();
            for k in 0..15 {
                let v = qt.entry(&sig(&[0]), &sig(&[k])).unwrap();
                let mean = b * t;
                assert!((v - poisson_pmf(mean, k as usize)).abs() < 1e-12, "t={t} k={k}");
            }
        }
    }

    #[test]
    fn poisson_weights_survive_large_means() {
        let w = poisson_weights(1000.0, 1e-15);
        let s: f64 = w.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert!(w.len() > 1000 && w.len() < 1400);
    }

    #[test]
    fn power_route_matches_matrix_route() {
        let om = OmegaPoint::pure_beta_plus(0.3);
        let bx = SignatureBox::new(2, -1, 12).unwrap();
        let q = generator_un(&om, 2, &bx).unwrap();
        let qt = semigroup_at(&q, 1.0, 1e-15).unwrap();
        let kernel = DeterminantalKernel::new(&om, 2, crate::Deformation::Classical, -1, 12).unwrap();
        let lam = sig(&[0, 0]);
        let row = semigroup_row(&kernel, &lam, 1.0, 1e-15, &bx).unwrap();
        let i = bx.index_of(&lam).unwrap();
        for j in 0..bx.len() {
            assert!((row[j] - qt.entries[(i, j)]).abs() < 1e-12);
        }
    }

    #[test]
    fn paths_are_reproducible_and_exit_is_reported() {
        let bx = SignatureBox::new(1, 0, 3).unwrap();
        let q = generator_un(&OmegaPoint::pure_beta_plus(0.9), 1, &bx).unwrap();
        let a = sample_path(&q, &sig(&[0]), 2.0, &mut trajectory_rng(7, 3)).unwrap();
        let b = sample_path(&q, &sig(&[0]), 2.0, &mut trajectory_rng(7, 3)).unwrap();
        assert_eq!(a, b);
        let mut exits = 0;
        for s in 0..50 {
            if let Err(Error::TruncationExit { partial, .. }) =
                sample_path(&q, &sig(&[0]), 20.0, &mut trajectory_rng(s, 0))
            {
                assert_eq!(partial.last().unwrap().1, sig(&[3]));
                exits += 1;
            }
        }
        assert!(exits > 40);
        let zero = generator_un(&OmegaPoint::zero(), 1, &bx).unwrap();
        let p = sample_path(&zero, &sig(&[1]), 5.0, &mut trajectory_rng(1, 0)).unwrap();
        assert_eq!(p, vec![(0.0, sig(&[1]))]);
        let p0 = sample_path(&q, &sig(&[1]), 0.0, &mut trajectory_rng(1, 0)).unwrap();
        assert_eq!(p0, vec![(0.0, sig(&[1]))]);
    }

    #[test]
    fn evolve_delta_gives_row() {
        let bx = SignatureBox::new(2, -1, 6).unwrap();
        let q = generator_un(&OmegaPoint::pure_gamma_plus(0.4), 2, &bx).unwrap();
        let qt = semigroup_at(&q, 0.7, 1e-14).unwrap();
        let lam = sig(&[1, 0]);
        let (m, leak) = evolve_measure(&Measure::delta(&bx, &lam).unwrap(), &qt).unwrap();
        let i = bx.index_of(&lam).unwrap();
        for j in 0..bx.len() {
            assert_eq!(m.probs[j], qt.entries[(i, j)]);
        }
        assert!(leak >= -1e-12);
        let id = semigroup_at(&q, 0.0, 1e-14).unwrap();
        let p0 = Measure::delta(&bx, &lam).unwrap();
        assert_eq!(evolve_measure(&p0, &id).unwrap().0.probs, p0.probs);
    }

    #[test]
    fn chapman_kolmogorov_on_interior_rows() {
        let om = OmegaPoint::pure_gamma_plus(0.5);
        let (_, above) = DisplacementLaw::one_step(&om, 2, crate::Deformation::Classical)
            .unwrap()
            .after_time(1.0)
            .radius(INTERIOR_EPS);
        let bx = SignatureBox::new(2, -1, above + 2).unwrap();
        let q = generator_un(&om, 2, &bx).unwrap();
        let a = semigroup_at(&q, 0.3, 1e-15).unwrap();
        let b = semigroup_at(&q, 0.7, 1e-15).unwrap();
        let c = semigroup_at(&q, 1.0, 1e-15).unwrap();
        let prod = &a.entries * &b.entries;
        let (below, above) = c.meta.radius.unwrap();
        let mut checked = 0;
        for (i, lam) in bx.items().iter().enumerate() {
            if !bx.is_inset(lam, below, above) {
                continue;
            }
            checked += 1;
            for j in 0..bx.len() {
                assert!((prod[(i, j)] - c.entries[(i, j)]).abs() <= 1e-8);
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn small_time_recovers_generator() {
        let bx = SignatureBox::new(2, -3, 3).unwrap();
        let q = generator_un(&OmegaPoint::pure_gamma_plus(0.5), 2, &bx).unwrap();
        let l = q.generator().entries;
        let h = 1e-4;
        let qt = semigroup_at(&q, h, 1e-15).unwrap().entries;
        let n = bx.len();
        let diff = (qt - DMatrix::identity(n, n)) / h - &l;
        let norm = l.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(diff.iter().all(|v| v.abs() <= 1e-3 * norm));
    }
}
