use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use smallvec::SmallVec;

/// Exponent vector `(k₁,…,kₙ)` of a monomial `x₁^{k₁}⋯xₙ^{kₙ}`.
///
/// Ordering is by total degree, then lexicographic on the exponents; this is
/// the canonical iteration order of every series in the crate.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Multidegree {
    // Field order matters: the derived `Ord` compares `total` first.
    total: u32,
    exps: SmallVec<[u16; 6]>,
}

impl Multidegree {
    pub fn new(exps: &[u32]) -> Self {
        let exps: SmallVec<[u16; 6]> = exps
            .iter()
            .map(|&e| u16::try_from(e).expect("exponent exceeds u16"))
            .collect();
        let total = exps.iter().map(|&e| e as u32).sum();
        Self { total, exps }
    }

    pub fn zero(nvars: usize) -> Self {
        Self {
            total: 0,
            exps: SmallVec::from_elem(0, nvars),
        }
    }

    pub fn unit(nvars: usize, j: usize) -> Self {
        let mut m = Self::zero(nvars);
        m.exps[j] = 1;
        m.total = 1;
        m
    }

    pub fn nvars(&self) -> usize {
        self.exps.len()
    }

    pub fn total(&self) -> u32 {
        self.total
    }

    pub fn get(&self, j: usize) -> u32 {
        self.exps[j] as u32
    }

    pub fn exps(&self) -> impl Iterator<Item = u32> + '_ {
        self.exps.iter().map(|&e| e as u32)
    }

    pub fn to_vec(&self) -> Vec<u32> {
        self.exps().collect()
    }

    pub fn add(&self, other: &Multidegree) -> Multidegree {
        debug_assert_eq!(self.nvars(), other.nvars());
        Multidegree {
            total: self.total + other.total,
            exps: self
                .exps
                .iter()
                .zip(&other.exps)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// `self − other`, if every exponent stays non-negative.
    pub fn checked_sub(&self, other: &Multidegree) -> Option<Multidegree> {
        let exps = self
            .exps
            .iter()
            .zip(&other.exps)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<SmallVec<[u16; 6]>>>()?;
        Some(Multidegree {
            total: self.total - other.total,
            exps,
        })
    }

    /// True when `other − self` has non-negative entries.
    pub fn divides(&self, other: &Multidegree) -> bool {
        self.exps.iter().zip(&other.exps).all(|(a, b)| a <= b)
    }

    pub fn with_exp(&self, j: usize, e: u32) -> Multidegree {
        let mut exps = self.exps.clone();
        exps[j] = u16::try_from(e).expect("exponent exceeds u16");
        Multidegree {
            total: exps.iter().map(|&e| e as u32).sum(),
            exps,
        }
    }

    /// `x^k / x_j`, if `k_j > 0`.
    pub fn lower(&self, j: usize) -> Option<Multidegree> {
        (self.exps[j] > 0).then(|| {
            let mut m = self.clone();
            m.exps[j] -= 1;
            m.total -= 1;
            m
        })
    }

    pub fn raise(&self, j: usize) -> Multidegree {
        let mut m = self.clone();
        m.exps[j] += 1;
        m.total += 1;
        m
    }

    /// `Σ k_j w_j`.
    pub fn dot(&self, weights: &[i64]) -> i64 {
        self.exps
            .iter()
            .zip(weights)
            .map(|(&k, &w)| k as i64 * w)
            .sum()
    }

    /// Drop variable `j` from the exponent vector.
    pub fn remove_var(&self, j: usize) -> Multidegree {
        let mut exps = self.exps.clone();
        let e = exps.remove(j);
        Multidegree {
            total: self.total - e as u32,
            exps,
        }
    }

    /// Insert a new variable at position `j` with exponent `e`.
    pub fn insert_var(&self, j: usize, e: u32) -> Multidegree {
        let mut exps = self.exps.clone();
        exps.insert(j, u16::try_from(e).expect("exponent exceeds u16"));
        Multidegree {
            total: self.total + e,
            exps,
        }
    }

    /// All multidegrees of exactly total degree `d`, in canonical order.
    pub fn of_total(nvars: usize, d: u32) -> Vec<Multidegree> {
        fn rec(nvars: usize, d: u32, prefix: &mut Vec<u32>, out: &mut Vec<Multidegree>) {
            if prefix.len() + 1 == nvars {
                prefix.push(d);
                out.push(Multidegree::new(prefix));
                prefix.pop();
                return;
            }
            for e in 0..=d {
                prefix.push(e);
                rec(nvars, d - e, prefix, out);
                prefix.pop();
            }
        }
        if nvars == 0 {
            return if d == 0 { vec![Multidegree::zero(0)] } else { vec![] };
        }
        let mut out = Vec::new();
        rec(nvars, d, &mut Vec::with_capacity(nvars), &mut out);
        out.sort();
        out
    }

    /// All multidegrees with `lo ≤ total ≤ hi`, in canonical order.
    pub fn up_to(nvars: usize, lo: u32, hi: u32) -> Vec<Multidegree> {
        (lo..=hi).flat_map(|d| Self::of_total(nvars, d)).collect()
    }
}

impl fmt::Debug for Multidegree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Multidegree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, e) in self.exps.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{e}")?;
        }
        f.write_str(")")
    }
}

impl Serialize for Multidegree {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.exps.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Multidegree {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<u32>::deserialize(d)?;
        if v.iter().any(|&e| e > u16::MAX as u32) {
            return Err(serde::de::Error::custom("exponent exceeds u16"));
        }
        Ok(Multidegree::new(&v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn total_is_cached_sum() {
        let k = Multidegree::new(&[2, 0, 3]);
        assert_eq!(k.total(), 5);
        assert_eq!(k.raise(1).total(), 6);
        assert_eq!(k.lower(0).unwrap(), Multidegree::new(&[1, 0, 3]));
        assert!(k.lower(1).is_none());
    }

    #[test]
    fn ordering_is_graded_then_lex() {
        let a = Multidegree::new(&[0, 0, 2]);
        let b = Multidegree::new(&[1, 0, 0]);
        let c = Multidegree::new(&[0, 1, 1]);
        assert!(b < a, "lower total degree comes first");
        assert!(a < c, "same total: lexicographic");
        let mut v = vec![a.clone(), b.clone(), c.clone()];
        v.sort();
        assert_eq!(v, vec![b, a, c]);
    }

    #[test]
    fn enumeration_counts() {
        // C(d + n - 1, n - 1)
        assert_eq!(Multidegree::of_total(3, 4).len(), 15);
        assert_eq!(Multidegree::up_to(3, 0, 8).len(), 165);
        let all = Multidegree::up_to(2, 1, 3);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn variable_insertion_roundtrip() {
        let k = Multidegree::new(&[1, 2]);
        let lifted = k.insert_var(2, 5);
        assert_eq!(lifted, Multidegree::new(&[1, 2, 5]));
        assert_eq!(lifted.remove_var(2), k);
        assert_eq!(lifted.dot(&[-1, -2, 3]), -1 - 4 + 15);
    }
}
