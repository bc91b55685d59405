//! Polynomial first integrals: kernel solves, independence, divisor orders
//! and reconstruction of linearizing coordinates from integrals.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::form::wedge;
use crate::linalg::Matrix;
use crate::multidegree::Multidegree;
use crate::normalform::{unit_factorization, Factorization};
use crate::resonance::{rj_sj, Spectrum};
use crate::scalar::{Coeff, GaussianRational, Mode};
use crate::series::TruncatedSeries;
use crate::vectorfield::{pushforward, FormalDiffeo, VectorField};

fn tolerance<K: Coeff>(scale: f64) -> f64 {
    match K::MODE {
        Mode::Exact => 0.0,
        Mode::Float => 1e-10 * scale.max(1.0),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    KernelSolve,
    HolonomyInvariant,
    Monomial,
    Supplied,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "K: Coeff"))]
pub struct Witness<K> {
    /// Index tuple `I` of `dx_I`.
    pub indices: Vec<usize>,
    pub coefficient: TruncatedSeries<K>,
    /// Lowest monomial of the coefficient.
    pub monomial: Multidegree,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "K: Coeff"))]
pub struct Independence<K> {
    pub independent: bool,
    /// Cap of the wedge (one below the integrals' cap).
    pub cap: u32,
    pub witness: Option<Witness<K>>,
}

/// `dF₁ ∧ … ∧ dF_q ≢ 0` at cap, with the lowest-degree nonzero coefficient.
pub fn independence_test<K: Coeff>(fs: &[TruncatedSeries<K>]) -> Result<Independence<K>> {
    let w = wedge(fs)?;
    let scale = fs.iter().map(TruncatedSeries::max_abs_coeff).fold(0.0, f64::max);
    let tol = tolerance::<K>(scale);
    let significant = w.coeffs().any(|(_, c)| c.max_abs_coeff() > tol);
    let witness = if significant {
        w.lowest_witness().map(|(indices, coefficient, monomial)| Witness {
            indices,
            coefficient,
            monomial,
        })
    } else {
        None
    };
    Ok(Independence {
        independent: significant,
        cap: w.cap(),
        witness,
    })
}

#[derive(Clone, Debug, Serialize)]
#[serde(bound(serialize = "K: Coeff"))]
pub struct FirstIntegralSet<K> {
    pub integrals: Vec<TruncatedSeries<K>>,
    pub independence: Independence<K>,
    pub provenance: Vec<Provenance>,
}

impl<K: Coeff> FirstIntegralSet<K> {
    pub fn new(integrals: Vec<TruncatedSeries<K>>, provenance: Vec<Provenance>) -> Result<Self> {
        if integrals.len() != provenance.len() {
            return Err(Error::Dimension("one provenance tag per integral".into()));
        }
        let independence = independence_test(&integrals)?;
        Ok(Self {
            integrals,
            independence,
            provenance,
        })
    }

    /// `max |X(F_j)|` per integral.
    pub fn defects(&self, x: &VectorField<K>) -> Result<Vec<f64>> {
        self.integrals.iter().map(|f| Ok(x.apply(f)?.max_abs_coeff())).collect()
    }
}

/// `X(f) = 0` at cap (exactly, or within 1e−10 relative in float mode).
pub fn annihilates<K: Coeff>(x: &VectorField<K>, f: &TruncatedSeries<K>) -> Result<bool> {
    let xf = x.apply(f)?;
    Ok(xf.max_abs_coeff() <= tolerance::<K>(x.max_abs_coeff() * f.max_abs_coeff()))
}

/// Kernel of `f ↦ X(f)` on polynomials of degree `1..=d`, in reduced
/// row-echelon form over the monomial order.
pub fn first_integral_kernel<K: Coeff>(x: &VectorField<K>, d: u32) -> Result<Vec<TruncatedSeries<K>>> {
    let (n, cap) = (x.nvars(), x.cap());
    if d > cap {
        return Err(Error::InvalidArgument(format!("degree {d} exceeds cap {cap}")));
    }
    // Graded, then x_1 > x_2 > … within a degree.
    let mut basis = Multidegree::up_to(n, 1, d);
    basis.sort_by(|a, b| a.total().cmp(&b.total()).then_with(|| b.cmp(a)));
    if basis.is_empty() {
        return Ok(Vec::new());
    }
    let mut images = Vec::with_capacity(basis.len());
    let mut rows: BTreeMap<Multidegree, usize> = BTreeMap::new();
    for k in &basis {
        let img = x.apply(&TruncatedSeries::monomial(n, cap, k.clone(), K::one()))?;
        for (m, _) in img.terms() {
            let next = rows.len();
            rows.entry(m.clone()).or_insert(next);
        }
        images.push(img);
    }
    let mut a = vec![vec![K::zero(); basis.len()]; rows.len().max(1)];
    for (col, img) in images.iter().enumerate() {
        for (m, c) in img.terms() {
            a[rows[m]][col] = c.clone();
        }
    }
    let null = Matrix::from_rows(a)?.nullspace();
    if null.is_empty() {
        return Ok(Vec::new());
    }
    let (rref, pivots) = Matrix::from_rows(null)?.rref();
    Ok((0..pivots.len())
        .map(|i| {
            let mut s = TruncatedSeries::zero(n, cap);
            for (col, k) in basis.iter().enumerate() {
                let c = &rref[(i, col)];
                if !c.is_negligible(1.0) {
                    s.add_term(k.clone(), c.clone());
                }
            }
            s
        })
        .collect())
}

/// `f = x_j + h` with `X(f) = μ f` at cap, solved degree by degree against
/// the diagonal linear part; `h` has no monomials with `k·λ = μ`.
pub fn eigenfunction<K: Coeff>(x: &VectorField<K>, j: usize, mu: &K) -> Result<TruncatedSeries<K>> {
    let (n, cap) = (x.nvars(), x.cap());
    if j >= n {
        return Err(Error::IndexOutOfRange { index: j, nvars: n });
    }
    let lin = x.linear_part();
    if !lin.is_diagonal() {
        return Err(Error::Shape("linear part is not diagonal".into()));
    }
    let lambda = lin.diag();
    let scale = lambda.iter().map(|l| l.magnitude()).fold(mu.magnitude(), f64::max);
    let mut f = TruncatedSeries::var(n, cap, j);
    let first = x.apply(&f)?.try_sub(&f.scale(mu))?;
    if !first.homogeneous(1).is_zero() && first.homogeneous(1).max_abs_coeff() > tolerance::<K>(scale) {
        return Err(Error::Shape(format!("x_{j} is not an eigenvector of the linear part for μ")));
    }
    for d in 2..=cap {
        let residual = x.apply(&f)?.try_sub(&f.scale(mu))?.homogeneous(d);
        let mut witnesses = Vec::new();
        for (k, c) in residual.terms() {
            let den = k
                .exps()
                .zip(&lambda)
                .fold(K::zero(), |acc, (e, l)| acc.add_ref(&l.mul_ref(&K::from_i64(e as i64))))
                .sub_ref(mu);
            if den.is_negligible(scale) {
                if c.magnitude() > tolerance::<K>(scale) {
                    witnesses.push(crate::error::ResonantTerm {
                        component: j,
                        monomial: k.clone(),
                    });
                }
                continue;
            }
            f.add_term(k.clone(), K::zero().sub_ref(&c.div_ref(&den)));
        }
        if !witnesses.is_empty() {
            return Err(Error::ResonanceObstruction { witnesses });
        }
    }
    Ok(f)
}

/// Product integrals `F_j` and the eigenfunctions they are built from.
pub type ProductIntegrals<K> = (Vec<TruncatedSeries<K>>, Vec<TruncatedSeries<K>>);

/// `F_j = f_j^{r_j} f_n^{s_j}` from eigenfunctions `f_j` of the diagonal
/// linear part `λ` (integers in the separatrix profile); returns the `F_j`
/// and the eigenfunctions.
pub fn product_integrals<K: Coeff>(
    x: &VectorField<K>,
    spec: &Spectrum,
) -> Result<ProductIntegrals<K>> {
    let n = x.nvars();
    if spec.n() != n {
        return Err(Error::Dimension(format!("spectrum of size {} for {n} variables", spec.n())));
    }
    let lambda = x.linear_part().diag();
    let eig = (0..n)
        .map(|j| eigenfunction(x, j, &lambda[j]))
        .collect::<Result<Vec<_>>>()?;
    let fs = (0..n - 1)
        .map(|j| {
            let (r, s) = rj_sj(spec, j)?;
            eig[j].pow(r).try_mul(&eig[n - 1].pow(s))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((fs, eig))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Valuation {
    Finite(u32),
    /// `f ≡ 0`.
    Infinite,
}

/// Largest `m` with `g^m | f`, for polynomials over ℚ(i).
pub fn vanishing_order(f: &TruncatedSeries<GaussianRational>, g: &TruncatedSeries<GaussianRational>) -> Result<Valuation> {
    if g.degree().unwrap_or(0) == 0 {
        return Err(Error::ConstantDivisor);
    }
    if f.is_zero() {
        return Ok(Valuation::Infinite);
    }
    let mut m = 0;
    let mut rest = f.clone();
    while let Some(q) = rest.div_exact(g)? {
        m += 1;
        rest = q;
    }
    Ok(Valuation::Finite(m))
}

#[derive(Clone, Debug, Serialize)]
#[serde(bound(serialize = "K: Coeff"))]
pub struct LinearizationVerdict<K: Coeff> {
    pub linearized: bool,
    /// Pushforward of `X` by the reconstructed coordinates.
    pub pushed: VectorField<K>,
    pub factorization: Factorization<K>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(bound(serialize = "K: Coeff"))]
pub struct Reconstruction<K: Coeff> {
    /// `(f_1, …, f_{n−1}, x_n)`.
    pub coordinates: FormalDiffeo<K>,
    /// `c_j` in `F_j = c_j f_j^{r_j} x_n^{s_j}`.
    #[serde(serialize_with = "crate::series::serialize_coeffs")]
    pub leading_coefficients: Vec<K>,
    pub verdict: LinearizationVerdict<K>,
}

fn reconstruction_error(index: usize, reason: impl Into<String>) -> Error {
    Error::Reconstruction {
        index,
        reason: reason.into(),
    }
}

/// Formal `r`-th root `f = x_j + …` of `h = x_j^r (1 + 𝔪)`, known through
/// degree `h.cap() − r + 1`.
fn monomial_root<K: Coeff>(h: &TruncatedSeries<K>, j: usize, r: u32, index: usize) -> Result<TruncatedSeries<K>> {
    let n = h.nvars();
    let out_cap = (h.cap() + 1)
        .checked_sub(r)
        .filter(|&c| c >= 1)
        .ok_or_else(|| reconstruction_error(index, format!("cap too small for an order-{r} root")))?;
    let xj = Multidegree::unit(n, j);
    let mut f = TruncatedSeries::var(n, out_cap, j);
    if r == 1 {
        return Ok(h.truncated(out_cap));
    }
    let divisor = xj.with_exp(j, r - 1);
    let r_k = K::from_i64(r as i64);
    for d in 2..=out_cap {
        // Degree r + d − 1 of f^r only involves f_{<d} besides r x_j^{r−1} f_d.
        let pw = f.as_polynomial_with_cap(h.cap())?.pow(r);
        let target = h.homogeneous(r + d - 1);
        let residual = target.try_sub(&pw.homogeneous(r + d - 1))?;
        for (k, c) in residual.terms() {
            let Some(k0) = k.checked_sub(&divisor) else {
                return Err(reconstruction_error(index, format!("root obstructed at monomial {k}")));
            };
            f.add_term(k0, c.div_ref(&r_k));
        }
    }
    Ok(f)
}

/// Recover `f_j` from `F_j = c_j f_j^{r_j} x_n^{s_j}` and test whether the
/// coordinates `(f, x_n)` turn `X` into a unit multiple of `Σ λ_j y_j ∂_j`.
pub fn reconstruct_coordinates<K: Coeff>(x: &VectorField<K>, fs: &[TruncatedSeries<K>]) -> Result<Reconstruction<K>> {
    let (n, cap) = (x.nvars(), x.cap());
    if fs.len() + 1 != n {
        return Err(Error::Dimension(format!("need {} integrals, got {}", n - 1, fs.len())));
    }
    let lin = x.linear_part();
    if !lin.is_diagonal() {
        return Err(Error::Shape("linear part is not diagonal".into()));
    }
    let eig = lin.diag();
    let spec = match K::MODE {
        Mode::Exact => {
            let exact: Vec<GaussianRational> = eig
                .iter()
                .map(|c| GaussianRational::from_c64(c.to_c64()).expect("finite"))
                .collect();
            Spectrum::from_exact(&exact)?
        }
        Mode::Float => Spectrum::from_floats(&eig.iter().map(Coeff::to_c64).collect::<Vec<_>>())?,
    };
    let mut roots = Vec::with_capacity(n - 1);
    let mut leading = Vec::with_capacity(n - 1);
    for (j, fj) in fs.iter().enumerate() {
        if fj.nvars() != n {
            return Err(Error::Dimension(format!("integral {j} has {} variables", fj.nvars())));
        }
        let (r, s) = rj_sj(&spec, j)?;
        let xn_s = Multidegree::zero(n).with_exp(n - 1, s);
        let h = fj
            .div_monomial(&xn_s)
            .ok_or_else(|| reconstruction_error(j, format!("not divisible by x_{}^{s}", n - 1)))?;
        let lead = Multidegree::zero(n).with_exp(j, r);
        let low = h.order().unwrap_or(0);
        let c = h.coeff(&lead);
        if low != r || c.is_negligible(1.0) || h.homogeneous(r).len() != 1 {
            return Err(reconstruction_error(
                j,
                format!("lowest part of F_{j}/x_{}^{s} is not a multiple of x_{j}^{r}", n - 1),
            ));
        }
        let h = h.scale(&K::one().div_ref(&c));
        roots.push(monomial_root(&h, j, r, j)?);
        leading.push(c);
    }
    let out_cap = roots.iter().map(TruncatedSeries::cap).min().unwrap_or(cap);
    let mut comps: Vec<TruncatedSeries<K>> = roots.iter().map(|f| f.truncated(out_cap)).collect();
    comps.push(TruncatedSeries::var(n, out_cap, n - 1));
    let coordinates = FormalDiffeo::new(comps)?;
    let xt = x.truncated(out_cap);
    let pushed = pushforward(&coordinates, &xt)?;
    let x0 = VectorField::diagonal(&eig, out_cap);
    let factorization = unit_factorization(&pushed, &x0);
    Ok(Reconstruction {
        coordinates,
        leading_coefficients: leading,
        verdict: LinearizationVerdict {
            linearized: matches!(factorization, Factorization::UnitMultiple { .. }),
            pushed,
            factorization,
        },
    })
}
