//! Links `Λⁿₙ₋₁` between adjacent levels, the boundary kernel `Λ^∞_N`, and
//! intertwining checks.

use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::generators::{level_measure, Deformation, KernelKind, KernelMatrix, KernelMeta, Measure};
use crate::signatures::{enumerate_interlacing, Signature, SignatureBox};
use crate::symfunc::{dim_u, dim_u_f64, qdim, qdim_exact, SchurScalar};
use crate::voiculescu::OmegaPoint;

fn check_levels(n: usize, rows: &SignatureBox, cols: &SignatureBox) -> Result<()> {
    if n < 2 || rows.level() != n || cols.level() + 1 != n {
        return Err(Error::invalid(format!(
            "link needs boxes at levels n and n-1 with n >= 2, got n = {n}, rows at {}, cols at {}",
            rows.level(),
            cols.level()
        )));
    }
    Ok(())
}

fn interlace(mu: &Signature, lam: &Signature) -> bool {
    let (m, l) = (mu.parts(), lam.parts());
    m.len() + 1 == l.len() && (0..m.len()).all(|i| l[i] >= m[i] && m[i] >= l[i + 1])
}

/// `Λ(λ, μ)` for `μ ∈ 𝕊_{n−1}`, `λ ∈ 𝕊_n`; zero unless `μ ≺ λ`.
pub fn link_entry(lam: &Signature, mu: &Signature, q: Deformation) -> f64 {
    if !interlace(mu, lam) {
        return 0.0;
    }
    match q {
        Deformation::Classical => dim_u_f64(mu) / dim_u_f64(lam),
        Deformation::Quantum(q) => {
            let n = lam.len() as i64;
            let e = n * mu.size() - (n - 1) * lam.size();
            q.powi(e as i32) * qdim(mu, q).expect("q validated") / qdim(lam, q).expect("q validated")
        }
    }
}

fn build(n: usize, q: Deformation, rows: &SignatureBox, cols: &SignatureBox) -> Result<KernelMatrix> {
    check_levels(n, rows, cols)?;
    let data: Vec<Vec<(usize, f64)>> = rows
        .items()
        .par_iter()
        .map(|lam| {
            enumerate_interlacing(lam)
                .expect("n >= 2")
                .into_iter()
                .filter_map(|mu| cols.index_of(&mu).map(|j| (j, link_entry(lam, &mu, q))))
                .collect()
        })
        .collect();
    let mut entries = DMatrix::zeros(rows.len(), cols.len());
    for (i, row) in data.into_iter().enumerate() {
        for (j, v) in row {
            entries[(i, j)] = v;
        }
    }
    Ok(KernelMatrix {
        rows: rows.clone(),
        cols: cols.clone(),
        entries,
        kind: KernelKind::Link,
        meta: KernelMeta {
            omega: None,
            level: n,
            q,
            route: "branching".into(),
            radius: None,
            escape_bound: 0.0,
        },
    })
}

/// `Λ(λ, μ) = dim μ / dim λ` for `μ ≺ λ`.
pub fn link_un(n: usize, rows: &SignatureBox, cols: &SignatureBox) -> Result<KernelMatrix> {
    build(n, Deformation::Classical, rows, cols)
}

/// `Λ(λ, μ) = q^{n|μ| − (n−1)|λ|} qdim μ / qdim λ` for `μ ≺ λ`.
pub fn link_uqn(n: usize, q: f64, rows: &SignatureBox, cols: &SignatureBox) -> Result<KernelMatrix> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::invalid(format!("q must lie in (0,1), got {q}")));
    }
    build(n, Deformation::Quantum(q), rows, cols)
}

/// Link with exact rational entries.
#[derive(Clone, Debug)]
pub struct ExactLink {
    pub rows: SignatureBox,
    pub cols: SignatureBox,
    pub entries: Vec<Vec<BigRational>>,
}

impl ExactLink {
    pub fn row_sums(&self) -> Vec<BigRational> {
        self.entries
            .iter()
            .map(|r| r.iter().fold(BigRational::zero(), |a, b| a + b))
            .collect()
    }

    /// Rows whose interlacing set lies inside the column box.
    pub fn complete_rows(&self) -> Vec<usize> {
        (0..self.rows.len())
            .filter(|&i| {
                enumerate_interlacing(self.rows.get(i))
                    .map(|v| v.iter().all(|mu| self.cols.contains(mu)))
                    .unwrap_or(false)
            })
            .collect()
    }

    /// Whether every complete row sums to exactly 1.
    pub fn rows_exactly_stochastic(&self) -> bool {
        let sums = self.row_sums();
        self.complete_rows().into_iter().all(|i| sums[i].is_one())
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        use num_traits::ToPrimitive;
        DMatrix::from_fn(self.rows.len(), self.cols.len(), |i, j| {
            self.entries[i][j].to_f64().unwrap_or(f64::NAN)
        })
    }
}

fn build_exact(
    n: usize,
    rows: &SignatureBox,
    cols: &SignatureBox,
    entry: impl Fn(&Signature, &Signature) -> BigRational + Sync,
) -> Result<ExactLink> {
    check_levels(n, rows, cols)?;
    let entries = rows
        .items()
        .par_iter()
        .map(|lam| {
            cols.items()
                .iter()
                .map(|mu| if interlace(mu, lam) { entry(lam, mu) } else { BigRational::zero() })
                .collect()
        })
        .collect();
    Ok(ExactLink {
        rows: rows.clone(),
        cols: cols.clone(),
        entries,
    })
}

pub fn link_un_exact(n: usize, rows: &SignatureBox, cols: &SignatureBox) -> Result<ExactLink> {
    build_exact(n, rows, cols, |lam, mu| dim_u(mu) / dim_u(lam))
}

pub fn link_uqn_exact(n: usize, q: &BigRational, rows: &SignatureBox, cols: &SignatureBox) -> Result<ExactLink> {
    if !(q > &BigRational::zero() && q < &BigRational::one()) {
        return Err(Error::invalid(format!("q must lie in (0,1), got {q}")));
    }
    build_exact(n, rows, cols, |lam, mu| {
        let nn = lam.len() as i64;
        q.ipow(nn * mu.size() - (nn - 1) * lam.size()) * qdim_exact(mu, q).expect("q checked")
            / qdim_exact(lam, q).expect("q checked")
    })
}

/// `Λ^∞_N(ω, λ) = dim λ · det[φ_ω(λ_i − i + j)]` on `bx`.
pub fn boundary_link(omega: &OmegaPoint, n: usize, bx: &SignatureBox) -> Result<Measure> {
    level_measure(omega, n, Deformation::Classical, bx)
}

/// `max |(ℚ_hi Λ − Λ ℚ_lo)(λ, μ)|` over interior rows of `q_hi`.
///
/// Accepts generators or transitions. The column box of `link` must equal
/// the box of `q_lo` and contain every `μ ≺ λ` for the checked rows.
pub fn verify_intertwine(q_hi: &KernelMatrix, q_lo: &KernelMatrix, link: &KernelMatrix) -> Result<f64> {
    let (qh, ql) = (q_hi.transition(), q_lo.transition());
    if !qh.is_square() || !ql.is_square() || link.kind != KernelKind::Link {
        return Err(Error::invalid("expected square kernels and a link matrix"));
    }
    if qh.rows.len() != link.rows.len()
        || ql.rows.len() != link.cols.len()
        || qh.rows.level() != link.rows.level()
        || ql.rows.level() != link.cols.level()
    {
        return Err(Error::invalid(format!(
            "incompatible shapes: Q_hi {:?}, Q_lo {:?}, link {:?}",
            qh.entries.shape(),
            ql.entries.shape(),
            link.entries.shape()
        )));
    }
    let left = &qh.entries * &link.entries;
    let right = &link.entries * &ql.entries;
    let mut worst = 0.0f64;
    for i in qh.interior_rows() {
        let lam = qh.rows.get(i);
        let below = enumerate_interlacing(lam)?;
        if below.iter().any(|mu| !link.cols.contains(mu)) {
            continue;
        }
        for j in 0..link.cols.len() {
            worst = worst.max((left[(i, j)] - right[(i, j)]).abs());
        }
    }
    Ok(worst)
}

/// `ln` of the two factors in `Λ(ν, μ) = a(μ) b(ν)` for `μ ≺ ν`.
fn ln_link_factors(sig: &Signature, q: Deformation, as_upper: bool) -> f64 {
    match q {
        Deformation::Classical => {
            let d = dim_u_f64(sig).ln();
            if as_upper {
                -d
            } else {
                d
            }
        }
        Deformation::Quantum(q) => {
            let d = qdim(sig, q).expect("q validated").ln();
            let size = sig.size() as f64;
            if as_upper {
                -(sig.len() as f64 - 1.0) * size * q.ln() - d
            } else {
                (sig.len() as f64 + 1.0) * size * q.ln() + d
            }
        }
    }
}

/// `ρ Λ` on `cols` for a row vector `ρ` over the level-`n` box `rows`.
///
/// `Λ(ν, μ)` splits as `a(μ) b(ν)` on `μ ≺ ν`, and the interlacing
/// constraints on `ν₁ ≥ μ₁` and `ν_n ≤ μ_{n−1}` are one-sided, so those two
/// coordinates are summed by cumulative tables (no subtractions) and only
/// the middle coordinates are enumerated.
pub fn apply_link(rho: &[f64], rows: &SignatureBox, cols: &SignatureBox, q: Deformation) -> Result<Vec<f64>> {
    let n = rows.level();
    check_levels(n, rows, cols)?;
    if rho.len() != rows.len() {
        return Err(Error::invalid(format!(
            "row vector has length {}, box has {} states",
            rho.len(),
            rows.len()
        )));
    }
    let (lo, hi) = (rows.lo(), rows.hi());
    let w = (hi - lo + 1) as usize;
    let at = |a: i64, c: i64| (a - lo) as usize * w + (c - lo) as usize;
    let mut tables: std::collections::HashMap<Vec<i64>, Vec<f64>> = std::collections::HashMap::new();
    for (nu, &r) in rows.items().iter().zip(rho) {
        if r == 0.0 {
            continue;
        }
        let g = r.signum() * (r.abs().ln() + ln_link_factors(nu, q, true)).exp();
        let p = nu.parts();
        let t = tables.entry(p[1..n - 1].to_vec()).or_insert_with(|| vec![0.0; w * w]);
        t[at(p[0], p[n - 1])] += g;
    }
    for t in tables.values_mut() {
        for c in lo..=hi {
            for a in (lo..hi).rev() {
                t[at(a, c)] += t[at(a + 1, c)];
            }
        }
        for a in lo..=hi {
            for c in lo + 1..=hi {
                t[at(a, c)] += t[at(a, c - 1)];
            }
        }
    }
    let out = cols
        .items()
        .iter()
        .map(|mu| {
            let m = mu.parts();
            let a = m[0].max(lo);
            let c = m[n - 2].min(hi);
            if a > hi || c < lo {
                return 0.0;
            }
            let mut total = 0.0;
            let mut mid = vec![0i64; n - 2];
            fn rec(
                i: usize,
                m: &[i64],
                mid: &mut Vec<i64>,
                f: &mut dyn FnMut(&[i64]),
            ) {
                if i == mid.len() {
                    f(mid);
                    return;
                }
                // ν_{i+2} ranges over [μ_{i+2}, μ_{i+1}] (1-based)
                for v in m[i + 1]..=m[i] {
                    mid[i] = v;
                    rec(i + 1, m, mid, f);
                }
            }
            rec(0, m, &mut mid, &mut |key: &[i64]| {
                if let Some(t) = tables.get(key) {
                    total += t[at(a, c)];
                }
            });
            if total == 0.0 {
                0.0
            } else {
                total * ln_link_factors(mu, q, false).exp()
            }
        })
        .collect();
    Ok(out)
}

/// Intertwining defect of a single row, with rows of the level-`n` and
/// level-`n−1` kernels supplied by closures over the given column boxes.
pub fn intertwine_row_defect(
    lam: &Signature,
    q: Deformation,
    cols_hi: &SignatureBox,
    cols_lo: &SignatureBox,
    row_hi: impl Fn(&Signature) -> Result<Vec<f64>>,
    row_lo: impl Fn(&Signature) -> Result<Vec<f64>>,
) -> Result<f64> {
    let below = enumerate_interlacing(lam)?;
    if below.iter().any(|mu| !cols_lo.contains(mu)) {
        return Err(Error::invalid(format!(
            "column box at level {} misses part of the interlacing set of {lam}",
            cols_lo.level()
        )));
    }
    let left = apply_link(&row_hi(lam)?, cols_hi, cols_lo, q)?;
    let mut right = vec![0.0; cols_lo.len()];
    for nu in &below {
        let l = link_entry(lam, nu, q);
        for (r, v) in right.iter_mut().zip(row_lo(nu)?) {
            *r += l * v;
        }
    }
    Ok(left.iter().zip(&right).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}
