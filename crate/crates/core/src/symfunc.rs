//! Schur Laurent polynomials, their principal specializations, and
//! Littlewood-Richardson coefficients.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Pow, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{det_with, PivotScalar};
use crate::signatures::Signature;

/// Scalars at which Schur polynomials can be evaluated.
pub trait SchurScalar: PivotScalar {
    /// Integer power; negative exponents invert.
    fn ipow(&self, e: i64) -> Self;
    /// Whether two entries are too close for the bialternant quotient.
    fn coincident(a: &Self, b: &Self) -> bool;
    fn is_zero_value(&self) -> bool;
}

impl SchurScalar for f64 {
    fn ipow(&self, e: i64) -> Self {
        self.powi(e as i32)
    }
    fn coincident(a: &Self, b: &Self) -> bool {
        (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
    }
    fn is_zero_value(&self) -> bool {
        *self == 0.0
    }
}

impl SchurScalar for Complex64 {
    fn ipow(&self, e: i64) -> Self {
        self.powi(e as i32)
    }
    fn coincident(a: &Self, b: &Self) -> bool {
        (a - b).norm() <= 1e-9 * a.norm().max(b.norm())
    }
    fn is_zero_value(&self) -> bool {
        self.is_zero()
    }
}

impl SchurScalar for BigRational {
    fn ipow(&self, e: i64) -> Self {
        Pow::pow(self, e as i32)
    }
    fn coincident(a: &Self, b: &Self) -> bool {
        a == b
    }
    fn is_zero_value(&self) -> bool {
        self.is_zero()
    }
}

/// Nonzero evaluation point `(z₁, …, z_N)`.
#[derive(Clone, Debug)]
pub struct EvalPoint<T>(Vec<T>);

impl<T: SchurScalar> EvalPoint<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.iter().any(|v| v.is_zero_value()) {
            return Err(Error::invalid(
                "Laurent evaluation requires nonzero coordinates",
            ));
        }
        Ok(EvalPoint(values))
    }

    pub fn values(&self) -> &[T] {
        &self.0
    }
}

/// The alternant `det[z_i^{λ_j + N − j}]`.
pub fn alternant<T: SchurScalar>(lam: &Signature, z: &[T]) -> T {
    let n = z.len();
    let p = lam.parts();
    det_with(n, |i, j| z[i].ipow(p[j] + (n - 1 - j) as i64))
}

/// `∏_{i<j} (z_i − z_j)`.
pub fn vandermonde<T: SchurScalar>(z: &[T]) -> T {
    let mut v = T::one();
    for i in 0..z.len() {
        for j in i + 1..z.len() {
            v = v * (z[i].clone() - z[j].clone());
        }
    }
    v
}

/// `s_λ(z)` by the bialternant formula. Errors on (near-)coincident
/// coordinates; use [`schur_eval_jt`] there.
pub fn schur_eval<T: SchurScalar>(lam: &Signature, z: &EvalPoint<T>) -> Result<T> {
    let z = z.values();
    if lam.len() != z.len() {
        return Err(Error::invalid(format!(
            "signature length {} does not match {} variables",
            lam.len(),
            z.len()
        )));
    }
    for i in 0..z.len() {
        for j in i + 1..z.len() {
            if T::coincident(&z[i], &z[j]) {
                return Err(Error::Degenerate(format!(
                    "coordinates {i} and {j} coincide; bialternant quotient undefined"
                )));
            }
        }
    }
    Ok(alternant(lam, z) / vandermonde(z))
}

/// `s_λ(z)` by the Jacobi-Trudi determinant `det[h_{κ_i − i + j}]` after
/// factoring out `(z₁⋯z_N)^{λ_N}`. Division-free, so valid at coincident
/// points.
pub fn schur_eval_jt<T: SchurScalar>(lam: &Signature, z: &EvalPoint<T>) -> Result<T> {
    let z = z.values();
    let n = z.len();
    if lam.len() != n {
        return Err(Error::invalid(format!(
            "signature length {} does not match {} variables",
            lam.len(),
            n
        )));
    }
    let shift = lam.last();
    let kappa: Vec<usize> = lam.parts().iter().map(|p| (p - shift) as usize).collect();
    let top = kappa[0] + n;
    // h[k] for k = 0..top, built one variable at a time
    let mut h = vec![T::zero(); top + 1];
    h[0] = T::one();
    for zi in z {
        for k in 1..=top {
            let add = zi.clone() * h[k - 1].clone();
            h[k] = h[k].clone() + add;
        }
    }
    let hk = |k: i64| -> T {
        if k < 0 {
            T::zero()
        } else {
            h[k as usize].clone()
        }
    };
    let jt = det_with(n, |i, j| hk(kappa[i] as i64 - i as i64 + j as i64));
    let prod = z.iter().fold(T::one(), |acc, v| acc * v.clone());
    Ok(jt * prod.ipow(shift))
}

/// `s_λ(1, …, 1)` as an exact rational: `∏_{i<j} (λ_i − i − λ_j + j)/(j − i)`.
pub fn dim_u(lam: &Signature) -> BigRational {
    let p = lam.parts();
    let n = p.len();
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..n {
        for j in i + 1..n {
            num *= BigInt::from(p[i] - i as i64 - p[j] + j as i64);
            den *= BigInt::from((j - i) as i64);
        }
    }
    BigRational::new(num, den)
}

pub fn dim_u_f64(lam: &Signature) -> f64 {
    let p = lam.parts();
    let n = p.len();
    let mut v = 1.0;
    for i in 0..n {
        for j in i + 1..n {
            v *= (p[i] - i as i64 - p[j] + j as i64) as f64 / (j - i) as f64;
        }
    }
    v
}

fn check_q(q: f64) -> Result<()> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::invalid(format!(
            "deformation parameter q must lie in (0,1), got {q}"
        )));
    }
    Ok(())
}

/// `s_λ(1, t, t², …, t^{N−1})` for `t > 0`, `t ≠ 1`, via the product
/// `∏_{i<j} t^{l_j−d_j} (t^{l_i−l_j} − 1)/(t^{d_i−d_j} − 1)` with
/// `l_i = λ_i + N − i`, `d_i = N − i`.
pub fn principal_specialization(lam: &Signature, t: f64) -> f64 {
    let p = lam.parts();
    let n = p.len();
    let ln_t = t.ln();
    let mut log_scale = 0.0;
    let mut ratio = 1.0;
    for i in 0..n {
        for j in i + 1..n {
            let li = p[i] + (n - 1 - i) as i64;
            let lj = p[j] + (n - 1 - j) as i64;
            let di = (n - 1 - i) as i64;
            let dj = (n - 1 - j) as i64;
            log_scale += (lj - dj) as f64 * ln_t;
            ratio *= ((li - lj) as f64 * ln_t).exp_m1() / ((di - dj) as f64 * ln_t).exp_m1();
        }
    }
    ratio * log_scale.exp()
}

pub fn principal_specialization_exact(lam: &Signature, t: &BigRational) -> BigRational {
    let p = lam.parts();
    let n = p.len();
    let mut v = BigRational::one();
    for i in 0..n {
        for j in i + 1..n {
            let li = p[i] + (n - 1 - i) as i64;
            let lj = p[j] + (n - 1 - j) as i64;
            let di = (n - 1 - i) as i64;
            let dj = (n - 1 - j) as i64;
            v = v * (t.ipow(li) - t.ipow(lj)) / (t.ipow(di) - t.ipow(dj));
        }
    }
    v
}

/// `s_λ(1, q⁻², …, q^{−2(N−1)})`.
pub fn spec_q2(lam: &Signature, q: f64) -> Result<f64> {
    check_q(q)?;
    Ok(principal_specialization(lam, q.powi(-2)))
}

/// Quantum dimension `s_λ(q^{N−1}, q^{N−3}, …, q^{−N+1})`.
pub fn qdim(lam: &Signature, q: f64) -> Result<f64> {
    check_q(q)?;
    let n = lam.len() as i64;
    // s_λ(q^{N-1} y) with y = (1, q^-2, ...) is q^{(N-1)|λ|} s_λ(y)
    let log = (n - 1) as f64 * lam.size() as f64 * q.ln();
    Ok(principal_specialization(lam, q.powi(-2)) * log.exp())
}

fn check_q_exact(q: &BigRational) -> Result<()> {
    if !(q > &BigRational::zero() && q < &BigRational::one()) {
        return Err(Error::invalid(format!(
            "deformation parameter q must lie in (0,1), got {q}"
        )));
    }
    Ok(())
}

pub fn spec_q2_exact(lam: &Signature, q: &BigRational) -> Result<BigRational> {
    check_q_exact(q)?;
    Ok(principal_specialization_exact(lam, &q.ipow(-2)))
}

pub fn qdim_exact(lam: &Signature, q: &BigRational) -> Result<BigRational> {
    check_q_exact(q)?;
    let n = lam.len() as i64;
    Ok(principal_specialization_exact(lam, &q.ipow(-2)) * q.ipow((n - 1) * lam.size()))
}

/// Tensor product multiplicities `N^β_{α,γ}` for fixed `α, γ ∈ 𝕊_N`.
#[derive(Clone, Debug, Serialize)]
pub struct LRTable {
    pub alpha: Signature,
    pub gamma: Signature,
    #[serde(serialize_with = "serialize_entries")]
    pub entries: BTreeMap<Signature, u64>,
}

fn serialize_entries<S: serde::Serializer>(
    entries: &BTreeMap<Signature, u64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut map = s.serialize_map(Some(entries.len()))?;
    for (k, v) in entries.iter().rev() {
        map.serialize_entry(&k.to_string(), v)?;
    }
    map.end()
}

impl LRTable {
    pub fn get(&self, beta: &Signature) -> u64 {
        self.entries.get(beta).copied().unwrap_or(0)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("LR table serializes")
    }
}

/// Littlewood-Richardson coefficients for signatures of equal length.
///
/// Both inputs are shifted to nonnegative signatures (a determinant twist
/// leaves multiplicities unchanged), the LR rule is run with at most `N`
/// rows, and results are shifted back.
pub fn lr_coeffs(alpha: &Signature, gamma: &Signature) -> Result<LRTable> {
    let n = alpha.len();
    if gamma.len() != n {
        return Err(Error::invalid(format!(
            "LR coefficients need equal lengths, got {} and {}",
            n,
            gamma.len()
        )));
    }
    let sa = alpha.last().min(0);
    let sg = gamma.last().min(0);
    let a: Vec<usize> = alpha.parts().iter().map(|&p| (p - sa) as usize).collect();
    let g: Vec<usize> = gamma.parts().iter().map(|&p| (p - sg) as usize).collect();
    let mut entries = BTreeMap::new();
    for (shape, count) in lr_partitions(&a, &g, n) {
        let beta = Signature::new(shape.iter().map(|&p| p as i64 + sa + sg).collect())?;
        entries.insert(beta, count);
    }
    Ok(LRTable {
        alpha: alpha.clone(),
        gamma: gamma.clone(),
        entries,
    })
}

/// LR rule on partitions: successively add horizontal strips of letters
/// `1, 2, …` and keep fillings whose reverse reading word is a lattice word.
fn lr_partitions(alpha: &[usize], gamma: &[usize], rows: usize) -> BTreeMap<Vec<usize>, u64> {
    // per-row list of appended letters (left to right)
    type Filling = Vec<Vec<usize>>;
    let mut states: Vec<(Vec<usize>, Filling)> = vec![(alpha.to_vec(), vec![Vec::new(); rows])];
    for (letter, &count) in gamma.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let mut next = Vec::new();
        for (shape, filling) in &states {
            for strip in horizontal_strips(shape, count) {
                let mut f = filling.clone();
                let mut new_shape = shape.clone();
                for (r, &k) in strip.iter().enumerate() {
                    f[r].extend(std::iter::repeat_n(letter, k));
                    new_shape[r] += k;
                }
                if lattice_ok(&f, letter + 1) {
                    next.push((new_shape, f));
                }
            }
        }
        states = next;
    }
    let mut out = BTreeMap::new();
    for (shape, _) in states {
        *out.entry(shape).or_insert(0) += 1;
    }
    out
}

/// All ways to add `count` boxes to `shape` with no two in one column.
fn horizontal_strips(shape: &[usize], count: usize) -> Vec<Vec<usize>> {
    fn rec(shape: &[usize], row: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if row == shape.len() {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let cap = if row == 0 {
            left
        } else {
            (shape[row - 1] - shape[row]).min(left)
        };
        for k in 0..=cap {
            cur.push(k);
            rec(shape, row + 1, left - k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(shape, 0, count, &mut Vec::new(), &mut out);
    out
}

/// Reverse reading word (rows top to bottom, each right to left) is a
/// lattice word in the letters used so far.
fn lattice_ok(filling: &[Vec<usize>], letters: usize) -> bool {
    let mut seen = vec![0usize; letters];
    for row in filling {
        for &l in row.iter().rev() {
            seen[l] += 1;
            if l > 0 && seen[l] > seen[l - 1] {
                return false;
            }
        }
    }
    true
}

/// Helper to evaluate at an `f64` point without building [`EvalPoint`] by hand.
pub fn schur_at(lam: &Signature, z: &[f64]) -> Result<f64> {
    schur_eval(lam, &EvalPoint::new(z.to_vec())?)
}

/// Complex Schur evaluation used on the torus.
pub fn schur_at_complex(lam: &Signature, z: &[Complex64]) -> Result<Complex64> {
    schur_eval(lam, &EvalPoint::new(z.to_vec())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signatures::{enumerate_box, enumerate_interlacing};

    fn sig(p: &[i64]) -> Signature {
        Signature::new(p.to_vec()).unwrap()
    }

    fn rat(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn schur_examples() {
        assert!((schur_at(&sig(&[0, 0, 0]), &[2.0, -3.0, 0.5]).unwrap() - 1.0).abs() < 1e-14);
        assert!((schur_at(&sig(&[1, 0]), &[2.0, 3.0]).unwrap() - 5.0).abs() < 1e-14);
        assert!((schur_at(&sig(&[1, 1]), &[2.0, 3.0]).unwrap() - 6.0).abs() < 1e-14);
        let z = EvalPoint::new(vec![rat(2, 1), rat(3, 1)]).unwrap();
        assert_eq!(schur_eval(&sig(&[1, 0]), &z).unwrap(), rat(5, 1));
        assert_eq!(schur_eval(&sig(&[1, 1]), &z).unwrap(), rat(6, 1));
    }

    #[test]
    fn coincident_points_are_degenerate() {
        let z = EvalPoint::new(vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            schur_eval(&sig(&[1, 0]), &z),
            Err(Error::Degenerate(_))
        ));
        assert!((schur_eval_jt(&sig(&[1, 0]), &z).unwrap() - 2.0).abs() < 1e-14);
        assert!(EvalPoint::new(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn laurent_evaluation_negative_parts() {
        // s_(0,-1)(x,y) = (x+y)/(xy)
        let v = schur_at(&sig(&[0, -1]), &[2.0, 3.0]).unwrap();
        assert!((v - 5.0 / 6.0).abs() < 1e-14);
        let jt = schur_eval_jt(&sig(&[0, -1]), &EvalPoint::new(vec![2.0, 3.0]).unwrap()).unwrap();
        assert!((jt - 5.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn bialternant_and_jacobi_trudi_agree() {
        let z = [0.7, -1.3, 2.1];
        for lam in enumerate_box(3, -2, 3).unwrap().items() {
            let a = schur_at(lam, &z).unwrap();
            let b = schur_eval_jt(lam, &EvalPoint::new(z.to_vec()).unwrap()).unwrap();
            assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "{lam}: {a} vs {b}");
        }
    }

    #[test]
    fn dimension_examples() {
        assert_eq!(dim_u(&sig(&[0, 0, 0])), rat(1, 1));
        assert_eq!(dim_u(&sig(&[1, 0])), rat(2, 1));
        assert_eq!(dim_u(&sig(&[2, 1, 0])), rat(8, 1));
        assert_eq!(dim_u_f64(&sig(&[2, 1, 0])), 8.0);
    }

    #[test]
    fn dimension_is_limit_and_satisfies_branching() {
        for lam in enumerate_box(3, -1, 2).unwrap().items() {
            let eps = 1e-4;
            let near = schur_eval_jt(lam, &EvalPoint::new(vec![1.0, 1.0 + eps, 1.0 + 2.0 * eps]).unwrap()).unwrap();
            let d = dim_u_f64(lam);
            assert!((near - d).abs() <= 1e-2 * d);
            let exact = schur_eval_jt(lam, &EvalPoint::new(vec![1.0; 3]).unwrap()).unwrap();
            assert!((exact - d).abs() <= 1e-9 * d);
            let branched: BigRational = enumerate_interlacing(lam)
                .unwrap()
                .iter()
                .map(dim_u)
                .fold(BigRational::zero(), |a, b| a + b);
            assert_eq!(branched, dim_u(lam));
        }
    }

    #[test]
    fn q_specialization_examples() {
        let q = 0.37;
        assert!((qdim(&sig(&[0, 0]), q).unwrap() - 1.0).abs() < 1e-14);
        assert!((qdim(&sig(&[1, 0]), q).unwrap() - (q + 1.0 / q)).abs() < 1e-13);
        assert!((qdim(&sig(&[1, 1]), q).unwrap() - 1.0).abs() < 1e-13);
        assert!((spec_q2(&sig(&[0, 0]), q).unwrap() - 1.0).abs() < 1e-14);
        assert!((spec_q2(&sig(&[1, 0]), q).unwrap() - (1.0 + q.powi(-2))).abs() < 1e-12);
        assert!((spec_q2(&sig(&[1, 1]), q).unwrap() - q.powi(-2)).abs() < 1e-12);
        assert!(qdim(&sig(&[1]), 1.0).is_err());
        assert!(spec_q2(&sig(&[1]), 0.0).is_err());
        let qe = rat(1, 2);
        assert_eq!(qdim_exact(&sig(&[1, 0]), &qe).unwrap(), rat(5, 2));
        assert_eq!(spec_q2_exact(&sig(&[1, 0]), &qe).unwrap(), rat(5, 1));
    }

    #[test]
    fn q_specialization_matches_bialternant() {
        let q: f64 = 0.6;
        for lam in enumerate_box(3, -2, 2).unwrap().items() {
            let z: Vec<f64> = (0..3).map(|i| q.powi(-2 * i)).collect();
            let direct = schur_at(lam, &z).unwrap();
            let prod = spec_q2(lam, q).unwrap();
            assert!((direct - prod).abs() <= 1e-10 * direct.abs());
        }
    }

    #[test]
    fn lr_examples() {
        let t = lr_coeffs(&sig(&[0, 0]), &sig(&[3, -1])).unwrap();
        assert_eq!(t.entries.len(), 1);
        assert_eq!(t.get(&sig(&[3, -1])), 1);

        let t = lr_coeffs(&sig(&[1, 0]), &sig(&[1, 0])).unwrap();
        assert_eq!(t.entries.len(), 2);
        assert_eq!(t.get(&sig(&[2, 0])), 1);
        assert_eq!(t.get(&sig(&[1, 1])), 1);

        // s_21 * s_21 in three variables contains s_321 twice
        let t = lr_coeffs(&sig(&[2, 1, 0]), &sig(&[2, 1, 0])).unwrap();
        assert_eq!(t.get(&sig(&[3, 2, 1])), 2);
        assert_eq!(t.get(&sig(&[4, 2, 0])), 1);

        let json = lr_coeffs(&sig(&[1, 0]), &sig(&[1, 0])).unwrap().to_json();
        assert_eq!(json["entries"]["2,0"], 1);
    }

    #[test]
    fn lr_shift_invariance() {
        let a = sig(&[1, -1]);
        let g = sig(&[2, 0]);
        let base = lr_coeffs(&a, &g).unwrap();
        let shifted = lr_coeffs(&a.shifted(3), &g).unwrap();
        for (beta, c) in &base.entries {
            assert_eq!(shifted.get(&beta.shifted(3)), *c);
        }
        assert_eq!(base.entries.len(), shifted.entries.len());
    }

    #[test]
    fn lr_dimension_identity_and_pointwise_product() {
        let items = enumerate_box(3, -1, 1).unwrap();
        let z = [0.9, -0.4, 1.7];
        for a in items.items() {
            for g in items.items() {
                let t = lr_coeffs(a, g).unwrap();
                let lhs: BigRational = t
                    .entries
                    .iter()
                    .map(|(b, &c)| dim_u(b) * BigRational::from_integer(BigInt::from(c)))
                    .fold(BigRational::zero(), |x, y| x + y);
                assert_eq!(lhs, dim_u(a) * dim_u(g), "{a} x {g}");
                let prod = schur_at(a, &z).unwrap() * schur_at(g, &z).unwrap();
                let sum: f64 = t
                    .entries
                    .iter()
                    .map(|(b, &c)| c as f64 * schur_at(b, &z).unwrap())
                    .sum();
                assert!((prod - sum).abs() <= 1e-10 * prod.abs().max(1.0));
            }
        }
    }
}
