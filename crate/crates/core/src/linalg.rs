//! Small dense determinants over floats, complex numbers and exact rationals.

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Scalars usable in Gaussian elimination with partial pivoting.
pub trait PivotScalar:
    Clone
    + Zero
    + One
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + std::ops::Neg<Output = Self>
{
    /// Pivot preference; exact types only need nonzero detection.
    fn pivot_weight(&self) -> f64;
}

impl PivotScalar for f64 {
    fn pivot_weight(&self) -> f64 {
        self.abs()
    }
}

impl PivotScalar for Complex64 {
    fn pivot_weight(&self) -> f64 {
        self.norm()
    }
}

impl PivotScalar for BigRational {
    fn pivot_weight(&self) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            1.0
        }
    }
}

/// Determinant of the square matrix given as a row-major slice of rows.
///
/// Partial pivoting picks the largest pivot for inexact types and the
/// first nonzero one for exact rationals, so the rational result is exact.
pub fn det<T: PivotScalar>(rows: &[Vec<T>]) -> T {
    let n = rows.len();
    if n == 0 {
        return T::one();
    }
    debug_assert!(rows.iter().all(|r| r.len() == n));
    let mut a: Vec<Vec<T>> = rows.to_vec();
    let mut result = T::one();
    for col in 0..n {
        let mut best = col;
        let mut best_w = a[col][col].pivot_weight();
        for (r, row) in a.iter().enumerate().skip(col + 1) {
            let w = row[col].pivot_weight();
            if w > best_w {
                best = r;
                best_w = w;
            }
        }
        if best_w == 0.0 {
            return T::zero();
        }
        if best != col {
            a.swap(best, col);
            result = -result;
        }
        let pivot = a[col][col].clone();
        result = result * pivot.clone();
        let (upper, lower) = a.split_at_mut(col + 1);
        let pivot_row = &upper[col];
        for row in lower.iter_mut() {
            if row[col].is_zero() {
                continue;
            }
            let factor = row[col].clone() / pivot.clone();
            for k in col + 1..n {
                let delta = factor.clone() * pivot_row[k].clone();
                row[k] = row[k].clone() - delta;
            }
        }
    }
    result
}

/// Determinant built from an entry closure.
pub fn det_with<T: PivotScalar>(n: usize, mut entry: impl FnMut(usize, usize) -> T) -> T {
    let rows: Vec<Vec<T>> = (0..n).map(|i| (0..n).map(|j| entry(i, j)).collect()).collect();
    det(&rows)
}

/// `f64` determinant with closed forms for `n ≤ 3`; falls back to
/// elimination above that.
pub fn det_f64(n: usize, entry: impl Fn(usize, usize) -> f64) -> f64 {
    match n {
        0 => 1.0,
        1 => entry(0, 0),
        2 => entry(0, 0) * entry(1, 1) - entry(0, 1) * entry(1, 0),
        3 => {
            let a: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| entry(i, j)));
            a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
        }
        _ => det_with(n, entry),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn brute_force(m: &[Vec<f64>]) -> f64 {
        fn perms(n: usize) -> Vec<Vec<usize>> {
            if n == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for p in perms(n - 1) {
                for pos in 0..=p.len() {
                    let mut q = p.clone();
                    q.insert(pos, n - 1);
                    out.push(q);
                }
            }
            out
        }
        let n = m.len();
        perms(n)
            .into_iter()
            .map(|p| {
                let inversions = (0..n)
                    .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                    .filter(|&(i, j)| p[i] > p[j])
                    .count();
                let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
                sign * (0..n).map(|i| m[i][p[i]]).product::<f64>()
            })
            .sum()
    }

    #[test]
    fn matches_permutation_expansion() {
        let m = vec![
            vec![0.0, 2.0, -1.0, 3.0],
            vec![1.5, 0.0, 4.0, -2.0],
            vec![2.0, 1.0, 0.0, 1.0],
            vec![-1.0, 3.0, 2.5, 0.5],
        ];
        assert!((det(&m) - brute_force(&m)).abs() < 1e-12);
        for n in 1..=4 {
            let sub: Vec<Vec<f64>> = m[..n].iter().map(|r| r[..n].to_vec()).collect();
            assert!((det_f64(n, |i, j| sub[i][j]) - brute_force(&sub)).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_rational_determinant() {
        let r = |a: i64, b: i64| BigRational::new(BigInt::from(a), BigInt::from(b));
        let m = vec![vec![r(1, 2), r(1, 3)], vec![r(1, 4), r(1, 5)]];
        assert_eq!(det(&m), r(1, 10) - r(1, 12));
        let singular = vec![vec![r(1, 2), r(1, 3)], vec![r(1, 1), r(2, 3)]];
        assert!(det(&singular).is_zero());
    }

    #[test]
    fn empty_is_one() {
        let m: Vec<Vec<f64>> = vec![];
        assert_eq!(det(&m), 1.0);
    }
}
