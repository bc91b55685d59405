//! Sparse truncated multivariate power series.
//!
//! A [`TruncatedSeries`] is an element of `ℂ[[x₁,…,xₙ]] / 𝔪^{N+1}` where `N`
//! is the cap fixed at construction. Terms live in a `BTreeMap` keyed by
//! [`Multidegree`], so iteration follows the graded-lex order and output is
//! reproducible. Invariants, maintained by every constructor and operation:
//!
//! - no stored multidegree has total degree above the cap;
//! - no stored coefficient is zero.
//!
//! Binary operations require equal `nvars` and `cap`; a cap mismatch is an
//! error rather than an implicit re-truncation.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::multidegree::Multidegree;
use crate::scalar::{format_rational, parse_rational, Coeff, GaussianRational, Mode, Scalar, C64};

#[derive(Clone, PartialEq)]
pub struct TruncatedSeries<K> {
    nvars: usize,
    cap: u32,
    terms: BTreeMap<Multidegree, K>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeriesOp {
    Add,
    Sub,
    Mul,
}

/// Checked ring operation; the spec-level entry point for series arithmetic.
pub fn series_arith<K: Coeff>(
    a: &TruncatedSeries<K>,
    b: &TruncatedSeries<K>,
    op: SeriesOp,
) -> Result<TruncatedSeries<K>> {
    match op {
        SeriesOp::Add => a.try_add(b),
        SeriesOp::Sub => a.try_sub(b),
        SeriesOp::Mul => a.try_mul(b),
    }
}

impl<K: Coeff> TruncatedSeries<K> {
    pub fn zero(nvars: usize, cap: u32) -> Self {
        Self {
            nvars,
            cap,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, cap: u32, c: K) -> Self {
        Self::monomial(nvars, cap, Multidegree::zero(nvars), c)
    }

    pub fn one(nvars: usize, cap: u32) -> Self {
        Self::constant(nvars, cap, K::one())
    }

    /// The coordinate function `x_j` (0-based index).
    pub fn var(nvars: usize, cap: u32, j: usize) -> Self {
        assert!(j < nvars, "variable index {j} out of range");
        Self::monomial(nvars, cap, Multidegree::unit(nvars, j), K::one())
    }

    pub fn monomial(nvars: usize, cap: u32, k: Multidegree, c: K) -> Self {
        assert_eq!(k.nvars(), nvars, "multidegree arity");
        let mut s = Self::zero(nvars, cap);
        if k.total() <= cap && !c.is_zero() {
            s.terms.insert(k, c);
        }
        s
    }

    /// Build from `(multidegree, coefficient)` pairs; duplicates are summed,
    /// terms above the cap and zero sums are dropped.
    pub fn from_terms(
        nvars: usize,
        cap: u32,
        terms: impl IntoIterator<Item = (Multidegree, K)>,
    ) -> Result<Self> {
        let mut s = Self::zero(nvars, cap);
        for (k, c) in terms {
            if k.nvars() != nvars {
                return Err(Error::Dimension(format!(
                    "multidegree {k} has {} entries, expected {nvars}",
                    k.nvars()
                )));
            }
            s.add_term(k, c);
        }
        Ok(s)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    pub fn mode(&self) -> Mode {
        K::MODE
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Multidegree, &K)> + '_ {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, k: &Multidegree) -> K {
        self.terms.get(k).cloned().unwrap_or_else(K::zero)
    }

    pub fn constant_term(&self) -> K {
        self.coeff(&Multidegree::zero(self.nvars))
    }

    /// Lowest total degree present, `None` for the zero series.
    pub fn order(&self) -> Option<u32> {
        self.terms.keys().next().map(Multidegree::total)
    }

    /// Highest total degree present, `None` for the zero series.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().next_back().map(Multidegree::total)
    }

    /// Accumulate `c·x^k`, keeping both invariants.
    pub fn add_term(&mut self, k: Multidegree, c: K) {
        if k.total() > self.cap || c.is_zero() {
            return;
        }
        match self.terms.entry(k) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get().add_ref(&c);
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(Error::Dimension(format!(
                "{} vs {} variables",
                self.nvars, other.nvars
            )));
        }
        if self.cap != other.cap {
            return Err(Error::Dimension(format!(
                "truncation cap {} vs {}",
                self.cap, other.cap
            )));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(k.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(k.clone(), -c.clone());
        }
        Ok(out)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        let mut acc: BTreeMap<Multidegree, K> = BTreeMap::new();
        for (ka, ca) in &self.terms {
            let room = self.cap - ka.total();
            for (kb, cb) in &other.terms {
                // `other` iterates by ascending total degree.
                if kb.total() > room {
                    break;
                }
                let k = ka.add(kb);
                let p = ca.mul_ref(cb);
                match acc.entry(k) {
                    std::collections::btree_map::Entry::Vacant(e) => {
                        e.insert(p);
                    }
                    std::collections::btree_map::Entry::Occupied(mut e) => {
                        let s = e.get().add_ref(&p);
                        *e.get_mut() = s;
                    }
                }
            }
        }
        acc.retain(|_, c| !c.is_zero());
        Self {
            nvars: self.nvars,
            cap: self.cap,
            terms: acc,
        }
    }

    pub fn scale(&self, c: &K) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars, self.cap);
        }
        let mut out = Self::zero(self.nvars, self.cap);
        for (k, v) in &self.terms {
            let p = v.mul_ref(c);
            if !p.is_zero() {
                out.terms.insert(k.clone(), p);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one(self.nvars, self.cap);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_unchecked(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_unchecked(&base);
            }
        }
        acc
    }

    /// `∂/∂x_j` (0-based). The cap is preserved; the result is exact for
    /// inputs whose degree does not exceed the cap.
    pub fn partial_derivative(&self, j: usize) -> Result<Self> {
        if j >= self.nvars {
            return Err(Error::IndexOutOfRange {
                index: j,
                nvars: self.nvars,
            });
        }
        let mut out = Self::zero(self.nvars, self.cap);
        for (k, c) in &self.terms {
            if let Some(lowered) = k.lower(j) {
                let factor = K::from_i64(k.get(j) as i64);
                out.terms.insert(lowered, c.mul_ref(&factor));
            }
        }
        Ok(out)
    }

    /// `f(map₁,…,mapₙ)` truncated at the cap of the map.
    ///
    /// Every component of `map` must have zero constant term.
    pub fn compose(&self, map: &[TruncatedSeries<K>]) -> Result<Self> {
        Ok(compose_many(std::slice::from_ref(self), map)?.remove(0))
    }

    /// Evaluate as a polynomial at `point`.
    pub fn eval(&self, point: &[K]) -> K {
        assert_eq!(point.len(), self.nvars, "evaluation point arity");
        let mut powers: Vec<Vec<K>> = point.iter().map(|p| vec![K::one(), p.clone()]).collect();
        let mut acc = K::zero();
        for (k, c) in &self.terms {
            let mut term = c.clone();
            for (j, e) in k.exps().enumerate() {
                if e == 0 {
                    continue;
                }
                let table = &mut powers[j];
                while table.len() <= e as usize {
                    let next = table.last().unwrap().mul_ref(&point[j]);
                    table.push(next);
                }
                term = term.mul_ref(&table[e as usize]);
            }
            acc = acc.add_ref(&term);
        }
        acc
    }

    /// Part of total degree exactly `d`.
    pub fn homogeneous(&self, d: u32) -> Self {
        self.filter(|k| k.total() == d)
    }

    pub fn filter(&self, mut keep: impl FnMut(&Multidegree) -> bool) -> Self {
        Self {
            nvars: self.nvars,
            cap: self.cap,
            terms: self
                .terms
                .iter()
                .filter(|(k, _)| keep(k))
                .map(|(k, c)| (k.clone(), c.clone()))
                .collect(),
        }
    }

    /// Re-truncate to a cap no larger than the current one.
    pub fn truncated(&self, cap: u32) -> Self {
        assert!(cap <= self.cap, "cannot raise the cap of a jet");
        let mut out = self.filter(|k| k.total() <= cap);
        out.cap = cap;
        out
    }

    /// Reinterpret a polynomial (degree ≤ new cap) with a larger cap.
    pub fn as_polynomial_with_cap(&self, cap: u32) -> Result<Self> {
        if self.degree().is_some_and(|d| d > cap) {
            return Err(Error::Dimension(format!(
                "polynomial of degree {:?} does not fit cap {cap}",
                self.degree()
            )));
        }
        Ok(Self {
            nvars: self.nvars,
            cap,
            terms: self.terms.clone(),
        })
    }

    /// Substitute `x_j = value`, producing a series in the remaining variables.
    pub fn restrict(&self, j: usize, value: &K) -> Result<Self> {
        if j >= self.nvars {
            return Err(Error::IndexOutOfRange {
                index: j,
                nvars: self.nvars,
            });
        }
        let mut out = Self::zero(self.nvars - 1, self.cap);
        for (k, c) in &self.terms {
            out.add_term(k.remove_var(j), c.mul_ref(&value.pow(k.get(j))));
        }
        Ok(out)
    }

    /// Embed into `nvars + 1` variables, with a new variable at position `j`.
    pub fn insert_var(&self, j: usize) -> Self {
        Self {
            nvars: self.nvars + 1,
            cap: self.cap,
            terms: self
                .terms
                .iter()
                .map(|(k, c)| (k.insert_var(j, 0), c.clone()))
                .collect(),
        }
    }

    /// Exact division by a monomial; the quotient is only known up to
    /// `cap − |m|`, which becomes its cap. `None` if some term is not divisible.
    pub fn div_monomial(&self, m: &Multidegree) -> Option<Self> {
        let cap = self.cap.checked_sub(m.total())?;
        let mut out = Self::zero(self.nvars, cap);
        for (k, c) in &self.terms {
            out.terms.insert(k.checked_sub(m)?, c.clone());
        }
        Some(out)
    }

    /// Exact polynomial division `self / divisor`, `None` unless it divides.
    ///
    /// Both operands are treated as polynomials (no truncation is involved:
    /// every intermediate product has degree at most `deg self`).
    pub fn div_exact(&self, divisor: &Self) -> Result<Option<Self>> {
        self.check_compatible(divisor)?;
        let (lead_k, lead_c) = match divisor.terms.iter().next_back() {
            Some((k, c)) => (k.clone(), c.clone()),
            None => return Err(Error::InvalidArgument("division by zero polynomial".into())),
        };
        let mut rem = self.clone();
        let mut quot = Self::zero(self.nvars, self.cap);
        while let Some((rk, rc)) = rem.terms.iter().next_back() {
            let Some(qk) = rk.checked_sub(&lead_k) else {
                return Ok(None);
            };
            let qc = rc.div_ref(&lead_c);
            for (dk, dc) in &divisor.terms {
                rem.add_term(qk.add(dk), -(qc.mul_ref(dc)));
            }
            quot.add_term(qk, qc);
        }
        Ok(Some(quot))
    }

    /// Coefficient-wise conversion into another mode.
    pub fn map_coeffs<L: Coeff>(&self, mut f: impl FnMut(&K) -> L) -> TruncatedSeries<L> {
        let mut out = TruncatedSeries::zero(self.nvars, self.cap);
        for (k, c) in &self.terms {
            out.add_term(k.clone(), f(c));
        }
        out
    }

    pub fn to_float(&self) -> TruncatedSeries<C64> {
        self.map_coeffs(|c| c.to_c64())
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(Coeff::magnitude).fold(0.0, f64::max)
    }

    /// `max_k |a_k − b_k|` over the union of supports.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut m: f64 = 0.0;
        for (k, c) in &self.terms {
            m = m.max(c.sub_ref(&other.coeff(k)).magnitude());
        }
        for (k, c) in &other.terms {
            if !self.terms.contains_key(k) {
                m = m.max(c.magnitude());
            }
        }
        m
    }
}

/// Compose several functions with the same substitution, sharing the table of
/// monomial powers `map^k` between them.
pub fn compose_many<K: Coeff>(
    fs: &[TruncatedSeries<K>],
    map: &[TruncatedSeries<K>],
) -> Result<Vec<TruncatedSeries<K>>> {
    let Some(first) = map.first() else {
        return Err(Error::Dimension("empty substitution".into()));
    };
    let (m, cap) = (first.nvars, first.cap);
    for (i, g) in map.iter().enumerate() {
        first.check_compatible(g)?;
        if !g.constant_term().is_zero() {
            return Err(Error::NonzeroConstantTerm(i));
        }
    }
    for f in fs {
        if f.nvars != map.len() {
            return Err(Error::Dimension(format!(
                "function of {} variables composed with a map of {} components",
                f.nvars,
                map.len()
            )));
        }
        if f.cap != cap {
            return Err(Error::Dimension(format!(
                "truncation cap {} vs {}",
                f.cap, cap
            )));
        }
    }

    let mut memo: HashMap<Multidegree, TruncatedSeries<K>> = HashMap::new();
    memo.insert(Multidegree::zero(map.len()), TruncatedSeries::one(m, cap));

    fn power<K: Coeff>(
        k: &Multidegree,
        map: &[TruncatedSeries<K>],
        memo: &mut HashMap<Multidegree, TruncatedSeries<K>>,
    ) -> TruncatedSeries<K> {
        if let Some(p) = memo.get(k) {
            return p.clone();
        }
        let j = k.exps().position(|e| e > 0).expect("zero multidegree is memoized");
        let prev = power(&k.lower(j).unwrap(), map, memo);
        let p = prev.mul_unchecked(&map[j]);
        memo.insert(k.clone(), p.clone());
        p
    }

    let mut out = Vec::with_capacity(fs.len());
    for f in fs {
        let mut acc = TruncatedSeries::zero(m, cap);
        for (k, c) in &f.terms {
            let p = power(k, map, &mut memo);
            for (pk, pc) in &p.terms {
                acc.add_term(pk.clone(), pc.mul_ref(c));
            }
        }
        out.push(acc);
    }
    Ok(out)
}

macro_rules! panicking_op {
    ($tr:ident, $m:ident, $checked:ident) => {
        impl<K: Coeff> $tr<&TruncatedSeries<K>> for &TruncatedSeries<K> {
            type Output = TruncatedSeries<K>;
            /// Panics on mismatched `nvars` or cap; use the `try_` form to recover.
            fn $m(self, rhs: &TruncatedSeries<K>) -> TruncatedSeries<K> {
                self.$checked(rhs).expect("incompatible series")
            }
        }
    };
}
panicking_op!(Add, add, try_add);
panicking_op!(Sub, sub, try_sub);
panicking_op!(Mul, mul, try_mul);

impl<K: Coeff> Neg for &TruncatedSeries<K> {
    type Output = TruncatedSeries<K>;
    fn neg(self) -> TruncatedSeries<K> {
        TruncatedSeries {
            nvars: self.nvars,
            cap: self.cap,
            terms: self.terms.iter().map(|(k, c)| (k.clone(), -c.clone())).collect(),
        }
    }
}

impl<K: fmt::Debug> fmt::Display for TruncatedSeries<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (k, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{c:?}")?;
            for (j, e) in k.exps().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "*x{}", j + 1)?,
                    _ => write!(f, "*x{}^{e}", j + 1)?,
                }
            }
        }
        Ok(())
    }
}

impl<K: fmt::Debug> fmt::Debug for TruncatedSeries<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[n={}, cap={}] {}", self.nvars, self.cap, self)
    }
}

#[derive(Serialize, Deserialize)]
struct SeriesRepr {
    nvars: usize,
    cap: u32,
    terms: Vec<TermRepr>,
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    k: Multidegree,
    re: serde_json::Value,
    im: serde_json::Value,
}

/// JSON rendering of a coefficient: `"p/q"` strings in exact mode, numbers in float mode.
pub fn scalar_to_json(s: &Scalar) -> (serde_json::Value, serde_json::Value) {
    match s {
        Scalar::Exact(q) => (
            serde_json::Value::String(format_rational(&q.re)),
            serde_json::Value::String(format_rational(&q.im)),
        ),
        Scalar::Float(z) => (float_json(z.re), float_json(z.im)),
    }
}

fn float_json(x: f64) -> serde_json::Value {
    serde_json::Number::from_f64(x)
        .map(serde_json::Value::Number)
        .unwrap_or(serde_json::Value::Null)
}

/// Parse one coefficient part for the requested mode. Integers and `"p/q"`
/// strings are exact; JSON floats are taken at their exact binary value in
/// exact mode.
pub fn json_to_scalar(re: &serde_json::Value, im: &serde_json::Value, mode: Mode) -> Result<Scalar> {
    fn part(v: &serde_json::Value) -> Result<num::rational::BigRational> {
        match v {
            serde_json::Value::String(s) => parse_rational(s),
            serde_json::Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(num::rational::BigRational::from_integer(i.into()))
                } else if let Some(x) = n.as_f64() {
                    num::rational::BigRational::from_float(x)
                        .ok_or_else(|| Error::Parse(format!("non-finite number {x}")))
                } else {
                    Err(Error::Parse(format!("unsupported number {n}")))
                }
            }
            serde_json::Value::Null => Ok(num::rational::BigRational::from_integer(0.into())),
            other => Err(Error::Parse(format!("expected number or string, got {other}"))),
        }
    }
    match mode {
        Mode::Exact => Ok(Scalar::Exact(GaussianRational::new(part(re)?, part(im)?))),
        Mode::Float => {
            let f = |v: &serde_json::Value| -> Result<f64> {
                match v {
                    serde_json::Value::Number(n) => n
                        .as_f64()
                        .ok_or_else(|| Error::Parse(format!("unsupported number {n}"))),
                    _ => Ok(GaussianRational::from_real(part(v)?).to_c64().re),
                }
            };
            Ok(Scalar::Float(C64::new(f(re)?, f(im)?)))
        }
    }
}

/// `serialize_with` helper rendering coefficients as `{"re", "im"}` objects.
pub fn serialize_coeffs<K: Coeff, S: Serializer>(v: &[K], s: S) -> std::result::Result<S::Ok, S::Error> {
    v.iter()
        .map(|c| {
            let (re, im) = scalar_to_json(&c.to_scalar());
            serde_json::json!({"re": re, "im": im})
        })
        .collect::<Vec<_>>()
        .serialize(s)
}

impl<K: Coeff> Serialize for TruncatedSeries<K> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let terms = self
            .terms
            .iter()
            .map(|(k, c)| {
                let (re, im) = scalar_to_json(&c.to_scalar());
                TermRepr { k: k.clone(), re, im }
            })
            .collect();
        SeriesRepr {
            nvars: self.nvars,
            cap: self.cap,
            terms,
        }
        .serialize(s)
    }
}

impl<'de, K: Coeff> Deserialize<'de> for TruncatedSeries<K> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = SeriesRepr::deserialize(d)?;
        let mut terms = Vec::with_capacity(repr.terms.len());
        for t in repr.terms {
            if t.k.total() > repr.cap {
                return Err(D::Error::custom(format!(
                    "term {} exceeds cap {}",
                    t.k, repr.cap
                )));
            }
            let scalar = json_to_scalar(&t.re, &t.im, K::MODE).map_err(D::Error::custom)?;
            terms.push((t.k, K::from_scalar(&scalar).map_err(D::Error::custom)?));
        }
        TruncatedSeries::from_terms(repr.nvars, repr.cap, terms).map_err(D::Error::custom)
    }
}

/// A series whose mode is only known at runtime (parsed input).
#[derive(Clone, Debug, PartialEq)]
pub enum AnySeries {
    Exact(TruncatedSeries<GaussianRational>),
    Float(TruncatedSeries<C64>),
}

impl AnySeries {
    pub fn mode(&self) -> Mode {
        match self {
            AnySeries::Exact(_) => Mode::Exact,
            AnySeries::Float(_) => Mode::Float,
        }
    }

    pub fn arith(&self, other: &AnySeries, op: SeriesOp) -> Result<AnySeries> {
        match (self, other) {
            (AnySeries::Exact(a), AnySeries::Exact(b)) => series_arith(a, b, op).map(AnySeries::Exact),
            (AnySeries::Float(a), AnySeries::Float(b)) => series_arith(a, b, op).map(AnySeries::Float),
            _ => Err(Error::ModeMismatch {
                left: self.mode(),
                right: other.mode(),
            }),
        }
    }

    pub fn from_json(value: &serde_json::Value, mode: Mode) -> Result<AnySeries> {
        let parse_err = |e: serde_json::Error| Error::Parse(e.to_string());
        Ok(match mode {
            Mode::Exact => AnySeries::Exact(serde_json::from_value(value.clone()).map_err(parse_err)?),
            Mode::Float => AnySeries::Float(serde_json::from_value(value.clone()).map_err(parse_err)?),
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            AnySeries::Exact(s) => serde_json::to_value(s),
            AnySeries::Float(s) => serde_json::to_value(s),
        }
        .expect("series serialization is infallible")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type Q = GaussianRational;
    type S = TruncatedSeries<Q>;

    fn md(e: &[u32]) -> Multidegree {
        Multidegree::new(e)
    }

    fn poly(n: usize, cap: u32, terms: &[(&[u32], i64)]) -> S {
        S::from_terms(n, cap, terms.iter().map(|(k, c)| (md(k), Q::from_i64(*c)))).unwrap()
    }

    #[test]
    fn difference_of_squares() {
        let x = S::var(2, 4, 0);
        let y = S::var(2, 4, 1);
        let got = &(&x + &y) * &(&x - &y);
        assert_eq!(got, poly(2, 4, &[(&[2, 0], 1), (&[0, 2], -1)]));
    }

    #[test]
    fn product_above_cap_vanishes() {
        let xz = poly(3, 3, &[(&[1, 0, 1], 1)]);
        let yz = poly(3, 3, &[(&[0, 1, 1], 1)]);
        assert!((&xz * &yz).is_zero());
    }

    #[test]
    fn geometric_series_truncation() {
        // (1 + x)(1 − x + x² − x³) = 1 + x⁴, and x⁴ is beyond cap 3.
        let a = poly(1, 3, &[(&[0], 1), (&[1], 1)]);
        let b = poly(1, 3, &[(&[0], 1), (&[1], -1), (&[2], 1), (&[3], -1)]);
        assert_eq!(&a * &b, S::one(1, 3));
    }

    #[test]
    fn mismatches_are_errors() {
        let a = S::var(2, 3, 0);
        assert!(matches!(a.try_add(&S::var(2, 4, 0)), Err(Error::Dimension(_))));
        assert!(matches!(a.try_mul(&S::var(3, 3, 0)), Err(Error::Dimension(_))));
        assert!(matches!(
            a.partial_derivative(2),
            Err(Error::IndexOutOfRange { index: 2, nvars: 2 })
        ));
        let f = AnySeries::Exact(a.clone());
        let g = AnySeries::Float(a.to_float());
        assert!(matches!(f.arith(&g, SeriesOp::Add), Err(Error::ModeMismatch { .. })));
    }

    #[test]
    fn partial_derivatives() {
        let xz = poly(3, 4, &[(&[1, 0, 1], 1)]);
        assert_eq!(xz.partial_derivative(0).unwrap(), S::var(3, 4, 2));
        assert_eq!(xz.partial_derivative(2).unwrap(), S::var(3, 4, 0));
        let sum_sq = poly(4, 4, &[(&[2, 0, 0, 0], 1), (&[0, 2, 0, 0], 1), (&[0, 0, 2, 0], 1), (&[0, 0, 0, 2], 1)]);
        assert_eq!(sum_sq.partial_derivative(0).unwrap(), poly(4, 4, &[(&[1, 0, 0, 0], 2)]));
    }

    #[test]
    fn composition_examples() {
        let x2 = poly(2, 4, &[(&[2, 0], 1)]);
        let map = vec![poly(2, 4, &[(&[1, 0], 1), (&[0, 1], 1)]), S::var(2, 4, 1)];
        assert_eq!(
            x2.compose(&map).unwrap(),
            poly(2, 4, &[(&[2, 0], 1), (&[1, 1], 2), (&[0, 2], 1)])
        );

        let xz = poly(3, 4, &[(&[1, 0, 1], 1)]);
        let id: Vec<S> = (0..3).map(|j| S::var(3, 4, j)).collect();
        assert_eq!(xz.compose(&id).unwrap(), xz);

        let x = S::var(1, 3, 0);
        let map = vec![poly(1, 3, &[(&[1], 1), (&[2], 1)])];
        assert_eq!(x.compose(&map).unwrap(), poly(1, 3, &[(&[1], 1), (&[2], 1)]));

        let shifted = vec![poly(1, 3, &[(&[0], 1), (&[1], 1)])];
        assert!(matches!(x.compose(&shifted), Err(Error::NonzeroConstantTerm(0))));
    }

    #[test]
    fn exact_polynomial_division() {
        let x = S::var(2, 6, 0);
        let y = S::var(2, 6, 1);
        let f = &(&(&x * &x) * &y) + &(&x * &y);
        assert_eq!(f.div_exact(&x).unwrap().unwrap(), &(&x * &y) + &y);
        assert!(f.div_exact(&(&x + &y)).unwrap().is_none());
    }

    #[test]
    fn restriction_and_embedding() {
        let f = poly(2, 4, &[(&[1, 1], 3), (&[0, 2], 1)]);
        let r = f.restrict(1, &Q::from_i64(2)).unwrap();
        assert_eq!(r, poly(1, 4, &[(&[1], 6), (&[0], 4)]));
        assert_eq!(r.insert_var(1).restrict(1, &Q::from_i64(5)).unwrap(), r);
    }

    #[test]
    fn json_roundtrip_exact_and_float() {
        let f = S::from_terms(
            2,
            3,
            [
                (md(&[1, 0]), Q::from_ratio(-3, 7)),
                (md(&[1, 2]), Q::new(parse_rational("5/2").unwrap(), parse_rational("-1/3").unwrap())),
            ],
        )
        .unwrap();
        let text = serde_json::to_string(&f).unwrap();
        assert!(text.contains("\"re\":\"-3/7\""), "{text}");
        let back: S = serde_json::from_str(&text).unwrap();
        assert_eq!(back, f);
        assert_eq!(serde_json::to_string(&back).unwrap(), text);

        let g = f.to_float();
        let gtext = serde_json::to_string(&g).unwrap();
        let gback: TruncatedSeries<C64> = serde_json::from_str(&gtext).unwrap();
        assert_eq!(gback, g);
    }
}
