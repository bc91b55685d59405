//! Exterior forms `Σ a_I dx_{i₁}∧…∧dx_{i_q}` with truncated-series coefficients.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::multidegree::Multidegree;
use crate::scalar::Coeff;
use crate::series::TruncatedSeries;

/// A `q`-form keyed by strictly increasing index tuples (0-based).
/// Only nonzero coefficients are stored.
#[derive(Clone, Debug, PartialEq)]
pub struct ExteriorForm<K> {
    degree: usize,
    nvars: usize,
    cap: u32,
    coeffs: BTreeMap<Vec<usize>, TruncatedSeries<K>>,
}

impl<K: Coeff> ExteriorForm<K> {
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Precision of the coefficients. Derivatives of cap-`N` jets are known
    /// through degree `N − 1`, so a wedge of differentials carries cap `N − 1`.
    pub fn cap(&self) -> u32 {
        self.cap
    }

    pub fn coeff(&self, idx: &[usize]) -> TruncatedSeries<K> {
        self.coeffs
            .get(idx)
            .cloned()
            .unwrap_or_else(|| TruncatedSeries::zero(self.nvars, self.cap))
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (&Vec<usize>, &TruncatedSeries<K>)> {
        self.coeffs.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Lowest-degree nonzero coefficient: minimal order first, then the first
    /// index tuple in lexicographic order. Returns the tuple, the coefficient
    /// and the monomial achieving that order.
    pub fn lowest_witness(&self) -> Option<(Vec<usize>, TruncatedSeries<K>, Multidegree)> {
        let mut best: Option<(u32, &Vec<usize>, &TruncatedSeries<K>)> = None;
        for (idx, c) in &self.coeffs {
            let ord = c.order().expect("stored coefficients are nonzero");
            if best.is_none_or(|(b, _, _)| ord < b) {
                best = Some((ord, idx, c));
            }
        }
        best.map(|(_, idx, c)| {
            let k = c.terms().next().unwrap().0.clone();
            (idx.clone(), c.clone(), k)
        })
    }

    pub fn neg(&self) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|(i, c)| (i.clone(), -c)).collect(),
            ..self.clone()
        }
    }
}

/// `df₁ ∧ … ∧ df_q`: the coefficient of `dx_I` is the `q×q` minor
/// `det(∂f_a/∂x_{I_b})`.
pub fn wedge<K: Coeff>(fs: &[TruncatedSeries<K>]) -> Result<ExteriorForm<K>> {
    let Some(first) = fs.first() else {
        return Err(Error::InvalidArgument("wedge of no differentials".into()));
    };
    let (n, cap) = (first.nvars(), first.cap());
    let q = fs.len();
    if q > n {
        return Err(Error::FormDegree { q, nvars: n });
    }
    for f in fs {
        if f.nvars() != n || f.cap() != cap {
            return Err(Error::Dimension("differentials of mismatched series".into()));
        }
    }
    let out_cap = cap.saturating_sub(1);
    let mut partials = Vec::with_capacity(q);
    for f in fs {
        let row = (0..n)
            .map(|j| f.partial_derivative(j).map(|d| d.truncated(out_cap)))
            .collect::<Result<Vec<_>>>()?;
        partials.push(row);
    }
    let zero = TruncatedSeries::zero(n, out_cap);
    let mut coeffs = BTreeMap::new();
    for idx in increasing_tuples(n, q) {
        let minor: Vec<Vec<&TruncatedSeries<K>>> = partials
            .iter()
            .map(|row| idx.iter().map(|&i| &row[i]).collect())
            .collect();
        let d = determinant(&minor, &zero);
        if !d.is_zero() {
            coeffs.insert(idx, d);
        }
    }
    Ok(ExteriorForm {
        degree: q,
        nvars: n,
        cap: out_cap,
        coeffs,
    })
}

/// All strictly increasing `q`-tuples from `0..n`, lexicographically.
pub fn increasing_tuples(n: usize, q: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, q: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == q {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, q, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, q, &mut Vec::new(), &mut out);
    out
}

/// Laplace expansion along the first row; `q` is at most the dimension.
fn determinant<K: Coeff>(m: &[Vec<&TruncatedSeries<K>>], zero: &TruncatedSeries<K>) -> TruncatedSeries<K> {
    let q = m.len();
    if q == 1 {
        return m[0][0].clone();
    }
    let mut acc = zero.clone();
    for col in 0..q {
        if m[0][col].is_zero() {
            continue;
        }
        let minor: Vec<Vec<&TruncatedSeries<K>>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|&(c, _)| c != col)
                    .map(|(_, s)| *s)
                    .collect()
            })
            .collect();
        let term = m[0][col] * &determinant(&minor, zero);
        acc = if col % 2 == 0 { &acc + &term } else { &acc - &term };
    }
    acc
}

#[derive(Serialize)]
#[serde(bound(serialize = ""))]
struct FormRepr<'a, K: Coeff> {
    degree: usize,
    nvars: usize,
    cap: u32,
    coeffs: Vec<(&'a Vec<usize>, &'a TruncatedSeries<K>)>,
}

impl<K: Coeff> Serialize for ExteriorForm<K> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FormRepr {
            degree: self.degree,
            nvars: self.nvars,
            cap: self.cap,
            coeffs: self.coeffs.iter().collect(),
        }
        .serialize(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::GaussianRational as Q;

    type S = TruncatedSeries<Q>;

    fn poly(n: usize, cap: u32, terms: &[(&[u32], i64)]) -> S {
        S::from_terms(n, cap, terms.iter().map(|(k, c)| (Multidegree::new(k), Q::from_i64(*c)))).unwrap()
    }

    #[test]
    fn wedge_of_xz_and_yz() {
        let w = wedge(&[poly(3, 4, &[(&[1, 0, 1], 1)]), poly(3, 4, &[(&[0, 1, 1], 1)])]).unwrap();
        assert_eq!(w.coeff(&[0, 1]), poly(3, 3, &[(&[0, 0, 2], 1)]));
        assert_eq!(w.coeff(&[0, 2]), poly(3, 3, &[(&[0, 1, 1], 1)]));
        assert_eq!(w.coeff(&[1, 2]), poly(3, 3, &[(&[1, 0, 1], -1)]));
        let (idx, _, k) = w.lowest_witness().unwrap();
        assert_eq!(idx, vec![0, 1]);
        assert_eq!(k, Multidegree::new(&[0, 0, 2]));
    }

    #[test]
    fn wedge_alternates() {
        let f = poly(3, 5, &[(&[1, 0, 1], 1), (&[2, 1, 0], 3)]);
        let g = poly(3, 5, &[(&[0, 1, 1], 1), (&[0, 0, 3], -2)]);
        assert!(wedge(&[f.clone(), f.clone()]).unwrap().is_zero());
        assert_eq!(wedge(&[g.clone(), f.clone()]).unwrap(), wedge(&[f, g]).unwrap().neg());
    }

    #[test]
    fn too_many_differentials() {
        let x = S::var(1, 3, 0);
        assert!(matches!(wedge(&[x.clone(), x]), Err(Error::FormDegree { q: 2, nvars: 1 })));
    }

    #[test]
    fn tuples_enumerated_in_order() {
        assert_eq!(increasing_tuples(4, 2).len(), 6);
        assert_eq!(increasing_tuples(3, 2), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
    }
}
