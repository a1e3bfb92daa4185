//! Signatures of U(N), interlacing, Gelfand-Tsetlin patterns and finite
//! enumeration of signature boxes.
//!
//! A signature is a weakly decreasing integer vector; parts may be negative.
//! All enumerations are produced in lexicographically descending order so
//! that matrix indices are reproducible.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A weakly decreasing integer vector `(λ₁ ≥ … ≥ λ_N)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Signature(Vec<i64>);

impl Signature {
    pub fn new(parts: Vec<i64>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::invalid("signature must have at least one part"));
        }
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::invalid(format!(
                "signature parts must be weakly decreasing: {parts:?}"
            )));
        }
        Ok(Signature(parts))
    }

    /// The all-zero signature of length `n`.
    pub fn zero(n: usize) -> Self {
        Signature(vec![0; n])
    }

    pub fn parts(&self) -> &[i64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> i64 {
        self.0[0]
    }

    pub fn last(&self) -> i64 {
        self.0[self.0.len() - 1]
    }

    /// `|λ| = λ₁ + … + λ_N`.
    pub fn size(&self) -> i64 {
        self.0.iter().sum()
    }

    /// `λ + (k, …, k)`.
    pub fn shifted(&self, k: i64) -> Signature {
        Signature(self.0.iter().map(|p| p + k).collect())
    }

    pub fn to_xconfig(&self) -> XConfig {
        to_xconfig(self)
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

impl FromStr for Signature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts = s
            .trim()
            .split(',')
            .map(|t| {
                t.parse::<i64>()
                    .map_err(|e| Error::Parse(format!("bad signature part {t:?} in {s:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Signature::new(parts)
    }
}

impl Serialize for Signature {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Signature {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let parts = Vec::<i64>::deserialize(deserializer)?;
        Signature::new(parts).map_err(serde::de::Error::custom)
    }
}

/// Strictly increasing particle coordinates `x₁ < … < x_n`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct XConfig(Vec<i64>);

impl XConfig {
    pub fn new(points: Vec<i64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("particle configuration must be nonempty"));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(format!(
                "particle coordinates must be strictly increasing: {points:?}"
            )));
        }
        Ok(XConfig(points))
    }

    pub fn points(&self) -> &[i64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Inverse of [`to_xconfig`]: `λ_j = x_{n−j+1} + j`.
    pub fn to_signature(&self) -> Signature {
        let n = self.0.len();
        Signature((1..=n).map(|j| self.0[n - j] + j as i64).collect())
    }

    /// `Y ≺ X`: `x₁ < y₁ ≤ x₂ < … < y_{n−1} ≤ x_n`.
    pub fn interlaced_by(&self, y: &XConfig) -> bool {
        let x = &self.0;
        let y = &y.0;
        if y.len() + 1 != x.len() {
            return false;
        }
        (0..y.len()).all(|k| x[k] < y[k] && y[k] <= x[k + 1])
    }
}

/// `x_k(λ) = λ_{n−k+1} − n + k − 1`.
pub fn to_xconfig(lam: &Signature) -> XConfig {
    let n = lam.len() as i64;
    let parts = lam.parts();
    XConfig(
        (1..=n)
            .map(|k| parts[(n - k) as usize] - n + k - 1)
            .collect(),
    )
}

/// `μ ≺ λ`: `λ₁ ≥ μ₁ ≥ λ₂ ≥ … ≥ μ_{N−1} ≥ λ_N`.
pub fn interlaces(mu: &Signature, lam: &Signature) -> Result<bool> {
    if mu.len() + 1 != lam.len() {
        return Err(Error::invalid(format!(
            "interlacing needs lengths N-1 and N, got {} and {}",
            mu.len(),
            lam.len()
        )));
    }
    let (m, l) = (mu.parts(), lam.parts());
    Ok((0..m.len()).all(|i| l[i] >= m[i] && m[i] >= l[i + 1]))
}

/// All `μ ≺ λ`, lexicographically descending.
pub fn enumerate_interlacing(lam: &Signature) -> Result<Vec<Signature>> {
    if lam.len() < 2 {
        return Err(Error::invalid(
            "interlacing signatures need a level of at least 2",
        ));
    }
    let l = lam.parts();
    let ranges: Vec<(i64, i64)> = (0..l.len() - 1).map(|i| (l[i + 1], l[i])).collect();
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(ranges.len());
    fn rec(ranges: &[(i64, i64)], cur: &mut Vec<i64>, out: &mut Vec<Signature>) {
        if cur.len() == ranges.len() {
            out.push(Signature(cur.clone()));
            return;
        }
        let (lo, hi) = ranges[cur.len()];
        for v in (lo..=hi).rev() {
            cur.push(v);
            rec(ranges, cur, out);
            cur.pop();
        }
    }
    rec(&ranges, &mut cur, &mut out);
    Ok(out)
}

/// All `λ ∈ 𝕊_N` with `lo ≤ λ_N` and `λ₁ ≤ hi`, indexed in
/// lexicographically descending order.
#[derive(Clone, Debug)]
pub struct SignatureBox {
    level: usize,
    lo: i64,
    hi: i64,
    items: Vec<Signature>,
    index: HashMap<Signature, usize>,
}

impl SignatureBox {
    pub fn new(level: usize, lo: i64, hi: i64) -> Result<Self> {
        enumerate_box(level, lo, hi)
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[Signature] {
        &self.items
    }

    pub fn get(&self, i: usize) -> &Signature {
        &self.items[i]
    }

    pub fn index_of(&self, lam: &Signature) -> Option<usize> {
        self.index.get(lam).copied()
    }

    pub fn contains(&self, lam: &Signature) -> bool {
        self.index.contains_key(lam)
    }

    /// Whether every part of `lam` lies at distance at least `below` from
    /// `lo` and `above` from `hi`.
    pub fn is_inset(&self, lam: &Signature, below: i64, above: i64) -> bool {
        lam.len() == self.level && lam.last() - below >= self.lo && lam.first() + above <= self.hi
    }
}

pub fn enumerate_box(level: usize, lo: i64, hi: i64) -> Result<SignatureBox> {
    if level == 0 {
        return Err(Error::invalid("signature box level must be at least 1"));
    }
    if lo > hi {
        return Err(Error::invalid(format!("empty box: lo={lo} > hi={hi}")));
    }
    let mut items = Vec::new();
    let mut cur = Vec::with_capacity(level);
    fn rec(level: usize, lo: i64, upper: i64, cur: &mut Vec<i64>, out: &mut Vec<Signature>) {
        if cur.len() == level {
            out.push(Signature(cur.clone()));
            return;
        }
        for v in (lo..=upper).rev() {
            cur.push(v);
            rec(level, lo, v, cur, out);
            cur.pop();
        }
    }
    rec(level, lo, hi, &mut cur, &mut items);
    let index = items
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i))
        .collect();
    Ok(SignatureBox {
        level,
        lo,
        hi,
        items,
        index,
    })
}

/// An interlacing tower `λ⁽¹⁾ ≺ λ⁽²⁾ ≺ … ≺ λ⁽ᴺ⁾`.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(try_from = "Vec<Signature>", into = "Vec<Signature>")]
pub struct GTPattern {
    levels: Vec<Signature>,
}

impl GTPattern {
    pub fn new(levels: Vec<Signature>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::invalid("pattern must have at least one level"));
        }
        for (n, lam) in levels.iter().enumerate() {
            if lam.len() != n + 1 {
                return Err(Error::invalid(format!(
                    "pattern level {} has length {}",
                    n + 1,
                    lam.len()
                )));
            }
            if n > 0 && !interlaces(&levels[n - 1], lam)? {
                return Err(Error::invalid(format!(
                    "levels {} and {} do not interlace: {} vs {}",
                    n,
                    n + 1,
                    levels[n - 1],
                    lam
                )));
            }
        }
        Ok(GTPattern { levels })
    }

    /// The pattern whose every level is `(c, …, c)`.
    pub fn constant(depth: usize, c: i64) -> Self {
        GTPattern {
            levels: (1..=depth).map(|n| Signature(vec![c; n])).collect(),
        }
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[Signature] {
        &self.levels
    }

    /// Level `n` (1-based).
    pub fn level(&self, n: usize) -> &Signature {
        &self.levels[n - 1]
    }

    pub fn top(&self) -> &Signature {
        &self.levels[self.levels.len() - 1]
    }
}

impl TryFrom<Vec<Signature>> for GTPattern {
    type Error = Error;

    fn try_from(levels: Vec<Signature>) -> Result<Self> {
        GTPattern::new(levels)
    }
}

impl From<GTPattern> for Vec<Signature> {
    fn from(p: GTPattern) -> Self {
        p.levels
    }
}

/// All patterns with top level `top`, in depth-first lexicographic order.
pub fn enumerate_patterns(top: &Signature) -> Vec<GTPattern> {
    fn rec(stack: &mut Vec<Signature>, out: &mut Vec<Vec<Signature>>) {
        let last = stack.last().expect("nonempty stack");
        if last.len() == 1 {
            out.push(stack.iter().rev().cloned().collect());
            return;
        }
        for mu in enumerate_interlacing(last).expect("level >= 2") {
            stack.push(mu);
            rec(stack, out);
            stack.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut vec![top.clone()], &mut out);
    out.into_iter().map(|levels| GTPattern { levels }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(p: &[i64]) -> Signature {
        Signature::new(p.to_vec()).unwrap()
    }

    #[test]
    fn interlacing_examples() {
        assert!(interlaces(&sig(&[0]), &sig(&[0, 0])).unwrap());
        assert!(interlaces(&sig(&[1]), &sig(&[1, 0])).unwrap());
        assert!(!interlaces(&sig(&[2]), &sig(&[1, 0])).unwrap());
        assert!(interlaces(&sig(&[1]), &sig(&[1, 0, 0])).is_err());
    }

    #[test]
    fn xconfig_examples() {
        assert_eq!(to_xconfig(&sig(&[0, 0])).points(), &[-2, -1]);
        assert_eq!(to_xconfig(&sig(&[1, 0])).points(), &[-2, 0]);
        assert_eq!(to_xconfig(&sig(&[7])).points(), &[6]);
        assert_eq!(to_xconfig(&sig(&[-3])).points(), &[-4]);
    }

    #[test]
    fn box_examples() {
        let b = enumerate_box(1, 0, 2).unwrap();
        assert_eq!(b.items(), &[sig(&[2]), sig(&[1]), sig(&[0])]);
        let b = enumerate_box(2, 0, 1).unwrap();
        assert_eq!(b.items(), &[sig(&[1, 1]), sig(&[1, 0]), sig(&[0, 0])]);
        let b = enumerate_box(2, 0, 0).unwrap();
        assert_eq!(b.items(), &[sig(&[0, 0])]);
        assert!(enumerate_box(2, 1, 0).is_err());
    }

    #[test]
    fn box_size_is_binomial() {
        fn binom(n: u64, k: u64) -> u64 {
            (1..=k).fold(1, |acc, i| acc * (n + 1 - i) / i)
        }
        for level in 1..=4usize {
            for (lo, hi) in [(-2i64, 1i64), (0, 3), (-1, -1)] {
                let b = enumerate_box(level, lo, hi).unwrap();
                let expected = binom((hi - lo) as u64 + level as u64, level as u64);
                assert_eq!(b.len() as u64, expected);
                let mut sorted = b.items().to_vec();
                sorted.sort_by(|a, b| b.cmp(a));
                sorted.dedup();
                assert_eq!(sorted, b.items());
                for (i, s) in b.items().iter().enumerate() {
                    assert_eq!(b.index_of(s), Some(i));
                }
            }
        }
    }

    #[test]
    fn interlacing_enumeration_examples() {
        assert_eq!(
            enumerate_interlacing(&sig(&[1, 0])).unwrap(),
            vec![sig(&[1]), sig(&[0])]
        );
        assert_eq!(
            enumerate_interlacing(&sig(&[4, 4])).unwrap(),
            vec![sig(&[4])]
        );
        assert_eq!(
            enumerate_interlacing(&sig(&[2, 0])).unwrap(),
            vec![sig(&[2]), sig(&[1]), sig(&[0])]
        );
        assert!(enumerate_interlacing(&sig(&[3])).is_err());
    }

    #[test]
    fn signature_text_encoding() {
        let s: Signature = "3,-1,-1".parse().unwrap();
        assert_eq!(s.parts(), &[3, -1, -1]);
        assert_eq!(s.to_string(), "3,-1,-1");
        assert!("1, 2".parse::<Signature>().is_err());
        assert!("1,x".parse::<Signature>().is_err());
    }

    #[test]
    fn pattern_validation() {
        assert!(GTPattern::new(vec![sig(&[1]), sig(&[2, 0])]).is_ok());
        assert!(GTPattern::new(vec![sig(&[3]), sig(&[2, 0])]).is_err());
        assert!(GTPattern::new(vec![sig(&[1, 0])]).is_err());
        let all = enumerate_patterns(&sig(&[2, 0]));
        assert_eq!(all.len(), 3);
    }
}
