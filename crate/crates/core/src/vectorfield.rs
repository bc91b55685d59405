//! Formal vector fields `X = Σ h_j ∂/∂x_j` and formal diffeomorphisms.
//!
//! Bracket convention: `[X, Y]_j = X(Y_j) − Y(X_j)`. With it the flow
//! `φ = exp(Y)` transports fields by `φ_*X = X − [Y,X] + ½[Y,[Y,X]] − …`,
//! i.e. `exp(−ad_Y)`.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::multidegree::Multidegree;
use crate::scalar::{Coeff, Mode, C64};
use crate::series::{compose_many, TruncatedSeries};

#[derive(Clone, PartialEq, Debug)]
pub struct VectorField<K> {
    comps: Vec<TruncatedSeries<K>>,
}

fn check_shared<K: Coeff>(comps: &[TruncatedSeries<K>]) -> Result<(usize, u32)> {
    let first = comps
        .first()
        .ok_or_else(|| Error::Dimension("no components".into()))?;
    let (n, cap) = (first.nvars(), first.cap());
    if comps.len() != n {
        return Err(Error::Dimension(format!(
            "{} components for {n} variables",
            comps.len()
        )));
    }
    for c in comps {
        if c.nvars() != n || c.cap() != cap {
            return Err(Error::Dimension("components disagree on nvars or cap".into()));
        }
    }
    Ok((n, cap))
}

impl<K: Coeff> VectorField<K> {
    /// A germ singular at the origin: every component has zero constant term.
    pub fn new(comps: Vec<TruncatedSeries<K>>) -> Result<Self> {
        check_shared(&comps)?;
        if let Some(j) = comps.iter().position(|c| !c.constant_term().is_zero()) {
            return Err(Error::RegularPoint(j));
        }
        Ok(Self { comps })
    }

    /// Like [`VectorField::new`] but accepts a nonzero value at the origin.
    pub fn new_allow_regular(comps: Vec<TruncatedSeries<K>>) -> Result<Self> {
        check_shared(&comps)?;
        Ok(Self { comps })
    }

    pub fn zero(n: usize, cap: u32) -> Self {
        Self {
            comps: vec![TruncatedSeries::zero(n, cap); n],
        }
    }

    /// `Σ λ_j x_j ∂/∂x_j`.
    pub fn diagonal(lambda: &[K], cap: u32) -> Self {
        let n = lambda.len();
        Self {
            comps: lambda
                .iter()
                .enumerate()
                .map(|(j, l)| TruncatedSeries::var(n, cap, j).scale(l))
                .collect(),
        }
    }

    /// The linear field `x ↦ A x`.
    pub fn linear(a: &Matrix<K>, cap: u32) -> Self {
        let n = a.rows();
        Self {
            comps: (0..n)
                .map(|i| {
                    let mut s = TruncatedSeries::zero(n, cap);
                    for j in 0..n {
                        s.add_term(Multidegree::unit(n, j), a[(i, j)].clone());
                    }
                    s
                })
                .collect(),
        }
    }

    /// `c · x^k ∂/∂x_j`.
    pub fn monomial(n: usize, cap: u32, j: usize, k: Multidegree, c: K) -> Self {
        let mut x = Self::zero(n, cap);
        x.comps[j] = TruncatedSeries::monomial(n, cap, k, c);
        x
    }

    pub fn nvars(&self) -> usize {
        self.comps.len()
    }

    pub fn cap(&self) -> u32 {
        self.comps[0].cap()
    }

    pub fn component(&self, j: usize) -> &TruncatedSeries<K> {
        &self.comps[j]
    }

    pub fn components(&self) -> &[TruncatedSeries<K>] {
        &self.comps
    }

    pub fn into_components(self) -> Vec<TruncatedSeries<K>> {
        self.comps
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(TruncatedSeries::is_zero)
    }

    pub fn is_singular_at_origin(&self) -> bool {
        self.comps.iter().all(|c| c.constant_term().is_zero())
    }

    fn check(&self, other_n: usize, other_cap: u32) -> Result<()> {
        if self.nvars() != other_n || self.cap() != other_cap {
            return Err(Error::Dimension(format!(
                "field on {} variables at cap {} vs {} at cap {}",
                self.nvars(),
                self.cap(),
                other_n,
                other_cap
            )));
        }
        Ok(())
    }

    /// Derivation action `X(f) = Σ h_j ∂f/∂x_j`.
    pub fn apply(&self, f: &TruncatedSeries<K>) -> Result<TruncatedSeries<K>> {
        self.check(f.nvars(), f.cap())?;
        let mut acc = TruncatedSeries::zero(f.nvars(), f.cap());
        for (j, h) in self.comps.iter().enumerate() {
            if h.is_zero() {
                continue;
            }
            let d = f.partial_derivative(j)?;
            if !d.is_zero() {
                acc = acc.try_add(&h.try_mul(&d)?)?;
            }
        }
        Ok(acc)
    }

    /// `[self, other]_j = self(other_j) − other(self_j)`.
    pub fn lie_bracket(&self, other: &Self) -> Result<Self> {
        self.check(other.nvars(), other.cap())?;
        let comps = (0..self.nvars())
            .map(|j| {
                self.apply(&other.comps[j])?
                    .try_sub(&other.apply(&self.comps[j])?)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { comps })
    }

    /// Matrix of degree-1 coefficients: entry `(i, j)` is the coefficient of `x_j` in `h_i`.
    pub fn linear_part(&self) -> Matrix<K> {
        let n = self.nvars();
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = self.comps[i].coeff(&Multidegree::unit(n, j));
            }
        }
        m
    }

    /// The field minus its linear part.
    pub fn nonlinear_part(&self) -> Self {
        self.map_components(|c| c.filter(|k| k.total() >= 2))
    }

    pub fn map_components(&self, f: impl Fn(&TruncatedSeries<K>) -> TruncatedSeries<K>) -> Self {
        Self {
            comps: self.comps.iter().map(f).collect(),
        }
    }

    pub fn try_add(&self, o: &Self) -> Result<Self> {
        self.check(o.nvars(), o.cap())?;
        Ok(Self {
            comps: self
                .comps
                .iter()
                .zip(&o.comps)
                .map(|(a, b)| a.try_add(b))
                .collect::<Result<_>>()?,
        })
    }

    pub fn try_sub(&self, o: &Self) -> Result<Self> {
        self.try_add(&o.scale(&-K::one()))
    }

    pub fn scale(&self, c: &K) -> Self {
        self.map_components(|s| s.scale(c))
    }

    /// `f · X`.
    pub fn mul_function(&self, f: &TruncatedSeries<K>) -> Result<Self> {
        self.check(f.nvars(), f.cap())?;
        Ok(Self {
            comps: self.comps.iter().map(|c| c.try_mul(f)).collect::<Result<_>>()?,
        })
    }

    pub fn truncated(&self, cap: u32) -> Self {
        self.map_components(|c| c.truncated(cap))
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.comps.iter().map(TruncatedSeries::max_abs_coeff).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, o: &Self) -> f64 {
        self.comps
            .iter()
            .zip(&o.comps)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }

    pub fn to_float(&self) -> VectorField<C64> {
        VectorField {
            comps: self.comps.iter().map(TruncatedSeries::to_float).collect(),
        }
    }

    /// Evaluate all components at a point, as polynomials.
    pub fn eval(&self, p: &[K]) -> Vec<K> {
        self.comps.iter().map(|c| c.eval(p)).collect()
    }
}

/// A tangent map `φ = (φ₁,…,φₙ)` with `φ(0) = 0` and invertible linear part.
#[derive(Clone, PartialEq, Debug)]
pub struct FormalDiffeo<K> {
    comps: Vec<TruncatedSeries<K>>,
    linear: Matrix<K>,
}

impl<K: Coeff> FormalDiffeo<K> {
    pub fn new(comps: Vec<TruncatedSeries<K>>) -> Result<Self> {
        check_shared(&comps)?;
        if let Some(j) = comps.iter().position(|c| !c.constant_term().is_zero()) {
            return Err(Error::NonzeroConstantTerm(j));
        }
        let linear = VectorField { comps: comps.clone() }.linear_part();
        let scale = linear.max_abs();
        if linear.det().is_negligible(scale.powi(linear.rows() as i32)) {
            return Err(Error::SingularLinearPart);
        }
        Ok(Self { comps, linear })
    }

    pub fn identity(n: usize, cap: u32) -> Self {
        Self {
            comps: (0..n).map(|j| TruncatedSeries::var(n, cap, j)).collect(),
            linear: Matrix::identity(n),
        }
    }

    pub fn from_linear(a: &Matrix<K>, cap: u32) -> Result<Self> {
        Self::new(VectorField::linear(a, cap).into_components())
    }

    pub fn nvars(&self) -> usize {
        self.comps.len()
    }

    pub fn cap(&self) -> u32 {
        self.comps[0].cap()
    }

    pub fn component(&self, j: usize) -> &TruncatedSeries<K> {
        &self.comps[j]
    }

    pub fn components(&self) -> &[TruncatedSeries<K>] {
        &self.comps
    }

    pub fn linear_part(&self) -> &Matrix<K> {
        &self.linear
    }

    /// `φ − id`, component-wise.
    pub fn minus_identity(&self) -> Vec<TruncatedSeries<K>> {
        let (n, cap) = (self.nvars(), self.cap());
        self.comps
            .iter()
            .enumerate()
            .map(|(j, c)| c - &TruncatedSeries::var(n, cap, j))
            .collect()
    }

    fn check(&self, o: &Self) -> Result<()> {
        if self.nvars() != o.nvars() || self.cap() != o.cap() {
            return Err(Error::Dimension("diffeomorphisms of different shape".into()));
        }
        Ok(())
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        self.check(inner)?;
        let comps = compose_many(&self.comps, &inner.comps)?;
        Ok(Self {
            comps,
            linear: self.linear.try_mul(&inner.linear)?,
        })
    }

    /// `f ∘ self`.
    pub fn pull_back(&self, f: &TruncatedSeries<K>) -> Result<TruncatedSeries<K>> {
        f.compose(&self.comps)
    }

    pub fn pull_back_many(&self, fs: &[TruncatedSeries<K>]) -> Result<Vec<TruncatedSeries<K>>> {
        compose_many(fs, &self.comps)
    }

    /// Inverse at cap, by the fixed point `ψ = L⁻¹(y − N(ψ))` where
    /// `φ = L + N`; each sweep fixes one more degree.
    pub fn inverse(&self) -> Result<Self> {
        let (n, cap) = (self.nvars(), self.cap());
        let linv = self.linear.inverse()?;
        let nonlinear: Vec<_> = self.comps.iter().map(|c| c.filter(|k| k.total() >= 2)).collect();
        let ys: Vec<_> = (0..n).map(|j| TruncatedSeries::var(n, cap, j)).collect();
        let apply_linv = |v: &[TruncatedSeries<K>]| -> Vec<TruncatedSeries<K>> {
            (0..n)
                .map(|i| {
                    let mut acc = TruncatedSeries::zero(n, cap);
                    for (j, vj) in v.iter().enumerate() {
                        if !linv[(i, j)].is_zero() {
                            acc = &acc + &vj.scale(&linv[(i, j)]);
                        }
                    }
                    acc
                })
                .collect()
        };
        let mut psi = apply_linv(&ys);
        for _ in 1..cap {
            let npsi = compose_many(&nonlinear, &psi)?;
            let rhs: Vec<_> = ys.iter().zip(&npsi).map(|(y, v)| y - v).collect();
            psi = apply_linv(&rhs);
        }
        Ok(Self {
            comps: psi,
            linear: linv,
        })
    }

    pub fn pow(&self, m: u32) -> Result<Self> {
        let mut acc = Self::identity(self.nvars(), self.cap());
        let mut base = self.clone();
        let mut e = m;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.compose(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.compose(&base)?;
            }
        }
        Ok(acc)
    }

    pub fn max_abs_diff(&self, o: &Self) -> f64 {
        self.comps
            .iter()
            .zip(&o.comps)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }

    pub fn to_float(&self) -> FormalDiffeo<C64> {
        FormalDiffeo {
            comps: self.comps.iter().map(TruncatedSeries::to_float).collect(),
            linear: self.linear.to_float(),
        }
    }

    pub fn eval(&self, p: &[K]) -> Vec<K> {
        self.comps.iter().map(|c| c.eval(p)).collect()
    }
}

/// Time-one flow of `Y` as the Lie series `x_j + Y(x_j) + Y²(x_j)/2! + …`.
///
/// Exact mode requires `Y` to have zero linear part, so the series stops
/// after at most `cap` terms. Float mode accepts a linear part and uses
/// scaling and squaring: the series is summed for `Y/2^s` until its terms
/// drop below double precision and the result is composed with itself `s`
/// times.
pub fn exp_formal<K: Coeff>(y: &VectorField<K>) -> Result<FormalDiffeo<K>> {
    if !y.is_singular_at_origin() {
        return Err(Error::RegularPoint(
            y.comps.iter().position(|c| !c.constant_term().is_zero()).unwrap(),
        ));
    }
    let (n, cap) = (y.nvars(), y.cap());
    let lin = y.linear_part();
    if lin.is_zero() {
        return FormalDiffeo::new(lie_series(y, cap as usize + 1, 0.0)?);
    }
    if K::MODE == Mode::Exact {
        return Err(Error::NonterminatingFlow);
    }
    let norm = lin.max_abs() * n as f64;
    let mut s = 0u32;
    while norm / f64::powi(2.0, s as i32) > 0.5 {
        s += 1;
    }
    let scaled = y.scale(&K::from_c64(C64::new(f64::powi(0.5, s as i32), 0.0)).unwrap());
    let mut phi = FormalDiffeo::new(lie_series(&scaled, 200, 1e-18)?)?;
    for _ in 0..s {
        phi = phi.compose(&phi)?;
    }
    Ok(phi)
}

fn lie_series<K: Coeff>(
    y: &VectorField<K>,
    max_terms: usize,
    float_cutoff: f64,
) -> Result<Vec<TruncatedSeries<K>>> {
    let (n, cap) = (y.nvars(), y.cap());
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let mut term = TruncatedSeries::var(n, cap, j);
        let mut acc = term.clone();
        for k in 1..max_terms {
            term = y.apply(&term)?.scale(&K::from_ratio(1, k as i64));
            if term.is_zero() || (K::MODE == Mode::Float && term.max_abs_coeff() < float_cutoff) {
                break;
            }
            acc = &acc + &term;
        }
        out.push(acc);
    }
    Ok(out)
}

/// `φ_*X = (Dφ · X) ∘ φ⁻¹`, by the chain rule.
pub fn pushforward<K: Coeff>(phi: &FormalDiffeo<K>, x: &VectorField<K>) -> Result<VectorField<K>> {
    let inv = phi.inverse()?;
    pushforward_with_inverse(phi, &inv, x)
}

/// Chain-rule pushforward when `φ⁻¹` is already known.
pub fn pushforward_with_inverse<K: Coeff>(
    phi: &FormalDiffeo<K>,
    phi_inv: &FormalDiffeo<K>,
    x: &VectorField<K>,
) -> Result<VectorField<K>> {
    if phi.nvars() != x.nvars() || phi.cap() != x.cap() {
        return Err(Error::Dimension("diffeomorphism and field of different shape".into()));
    }
    let dphi_x = phi
        .comps
        .iter()
        .map(|c| x.apply(c))
        .collect::<Result<Vec<_>>>()?;
    VectorField::new_allow_regular(compose_many(&dphi_x, &phi_inv.comps)?)
}

/// `exp(Y)_* X = Σ_k (−1)^k/k! ad_Y^k X`, for `Y` with zero linear part.
pub fn pushforward_lie<K: Coeff>(y: &VectorField<K>, x: &VectorField<K>) -> Result<VectorField<K>> {
    if !y.linear_part().is_zero() {
        return Err(Error::NonterminatingFlow);
    }
    let mut term = x.clone();
    let mut acc = x.clone();
    for k in 1..=x.cap() as i64 + 1 {
        term = y.lie_bracket(&term)?.scale(&K::from_ratio(-1, k));
        if term.is_zero() {
            break;
        }
        acc = acc.try_add(&term)?;
    }
    Ok(acc)
}

#[derive(Serialize, Deserialize)]
struct TaggedRepr<T> {
    kind: String,
    components: Vec<T>,
}

impl<K: Coeff> Serialize for VectorField<K> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TaggedRepr {
            kind: "vector_field".into(),
            components: self.comps.iter().collect(),
        }
        .serialize(s)
    }
}

impl<K: Coeff> Serialize for FormalDiffeo<K> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TaggedRepr {
            kind: "formal_diffeo".into(),
            components: self.comps.iter().collect(),
        }
        .serialize(s)
    }
}

impl<'de, K: Coeff> Deserialize<'de> for VectorField<K> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = TaggedRepr::<TruncatedSeries<K>>::deserialize(d)?;
        if r.kind != "vector_field" {
            return Err(D::Error::custom(format!("expected kind vector_field, got {}", r.kind)));
        }
        VectorField::new_allow_regular(r.components).map_err(D::Error::custom)
    }
}

impl<'de, K: Coeff> Deserialize<'de> for FormalDiffeo<K> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = TaggedRepr::<TruncatedSeries<K>>::deserialize(d)?;
        if r.kind != "formal_diffeo" {
            return Err(D::Error::custom(format!("expected kind formal_diffeo, got {}", r.kind)));
        }
        FormalDiffeo::new(r.components).map_err(D::Error::custom)
    }
}
