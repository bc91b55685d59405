//! Jordan splitting, homological equations and normal-form reductions.
//!
//! Fields here are expected in the transversal shape
//! `X = Σ_{j<n} (λ_j x_j + f_j) ∂_j + λ_n x_n ∂_n` with integer `λ`
//! (the last coordinate is the separatrix direction). Type `(r, s)` means
//! every monomial of every `f_j` has `x_n`-exponent at least `r` and
//! transverse degree (the total degree in `x_1…x_{n−1}`) at least `s`.
//!
//! A reduction step solves `[Y, X₀] = −(slice)` coefficient-wise,
//! `b = −a / (λ_j − k·λ)`, and replaces `X` by `exp(−Y)_* X`, which equals
//! `X + [Y,X] + ½[Y,[Y,X]] + …` and so removes the slice.

use serde::Serialize;

use crate::error::{Error, ResonantTerm, Result};
use crate::linalg::{char_poly, cluster_roots, poly_roots, Matrix, Poly};
use crate::multidegree::Multidegree;
use crate::resonance::Spectrum;
use crate::scalar::{Coeff, GaussianRational, Mode, C64};
use crate::series::TruncatedSeries;
use crate::vectorfield::{exp_formal, pushforward, pushforward_with_inverse, FormalDiffeo, VectorField};

/// Semisimple and nilpotent parts `L = S + N`, `SN = NS`.
///
/// `S` is obtained by Newton's iteration `S ← S − p(S) p′(S)⁻¹` on the
/// squarefree part `p` of the characteristic polynomial, so it is a
/// polynomial in `L`. In exact mode `p = χ / gcd(χ, χ′)` is computed over
/// ℚ(i) and the iteration terminates exactly; in float mode `p` is built
/// from clustered numerical roots of `χ`.
pub fn jordan_split<K: Coeff>(l: &Matrix<K>) -> Result<(Matrix<K>, Matrix<K>)> {
    if !l.is_square() {
        return Err(Error::Dimension("Jordan splitting of a non-square matrix".into()));
    }
    let n = l.rows();
    let chi = char_poly(l);
    let p = match K::MODE {
        Mode::Exact => chi.div_rem(&chi.gcd(&chi.derivative())).0.monic(),
        Mode::Float => {
            let chi_f = Poly::new(chi.coeffs().iter().map(Coeff::to_c64).collect());
            let roots = cluster_roots(&poly_roots(&chi_f), 1e-6);
            let pf = Poly::<C64>::from_roots(&roots);
            Poly::new(
                pf.coeffs()
                    .iter()
                    .map(|c| K::from_c64(*c).expect("finite root"))
                    .collect(),
            )
        }
    };
    let dp = p.derivative();
    let scale = l.max_abs().max(1.0);
    let mut s = l.clone();
    for _ in 0..(2 * n + 40) {
        let ps = p.eval_matrix(&s);
        if ps.is_negligible(scale.powi(p.degree().unwrap_or(0) as i32)) {
            break;
        }
        let step = ps.try_mul(&dp.eval_matrix(&s).inverse()?)?;
        s = s.sub(&step);
    }
    let nil = l.sub(&s);
    Ok((s, nil))
}

/// Eigenvalues of an exact matrix when they are Gaussian rationals, with
/// multiplicities. Candidates are read off numerical roots by rational
/// approximation and confirmed by exact evaluation and deflation of the
/// characteristic polynomial.
pub fn exact_eigenvalues(l: &Matrix<GaussianRational>) -> Result<Vec<GaussianRational>> {
    let mut chi = char_poly(l);
    let chi_f = Poly::new(chi.coeffs().iter().map(Coeff::to_c64).collect());
    let mut out = Vec::new();
    for z in poly_roots(&chi_f) {
        let cand = rationalize(z).ok_or_else(|| {
            Error::NonRepresentableEigenvalues(format!("eigenvalue near {z} is not a small Gaussian rational"))
        })?;
        let linear = Poly::new(vec![-cand.clone(), GaussianRational::one()]);
        let (q, r) = chi.div_rem(&linear);
        if !r.is_zero() {
            return Err(Error::NonRepresentableEigenvalues(format!(
                "eigenvalue near {z} is not a small Gaussian rational"
            )));
        }
        chi = q;
        out.push(cand);
    }
    if chi.degree() != Some(0) {
        return Err(Error::NonRepresentableEigenvalues("incomplete deflation".into()));
    }
    Ok(out)
}

fn rationalize(z: C64) -> Option<GaussianRational> {
    let part = |x: f64| -> Option<num::rational::BigRational> {
        let (p, q) = crate::resonance::rational_approx(x, 10_000)?;
        ((p as f64 / q as f64 - x).abs() <= 1e-6 * (1.0 + x.abs())).then(|| crate::resonance::ratio(p, q))
    };
    Some(GaussianRational::new(part(z.re)?, part(z.im)?))
}

/// Eigenbasis `P` with `P⁻¹ L P = diag(eigenvalues)`, for diagonalizable `L`
/// with Gaussian-rational eigenvalues. Eigenvalues are returned in the order
/// of the columns of `P`.
pub fn diagonalize(l: &Matrix<GaussianRational>) -> Result<(Matrix<GaussianRational>, Vec<GaussianRational>)> {
    let n = l.rows();
    if l.is_diagonal() {
        return Ok((Matrix::identity(n), l.diag()));
    }
    let mut distinct: Vec<GaussianRational> = Vec::new();
    for e in exact_eigenvalues(l)? {
        if !distinct.contains(&e) {
            distinct.push(e);
        }
    }
    let mut cols = Vec::new();
    let mut eig = Vec::new();
    for mu in &distinct {
        let shifted = l.sub(&Matrix::identity(n).scale(mu));
        for v in shifted.nullspace() {
            cols.push(v);
            eig.push(mu.clone());
        }
    }
    if cols.len() < n {
        let (_, nil) = jordan_split(l)?;
        return Err(Error::NotDiagonalizable(format!("{nil:?}")));
    }
    Ok((Matrix::from_rows(cols)?.transpose(), eig))
}

/// Shape and type bookkeeping for transversal-normal fields.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TypeRS {
    pub r: u32,
    pub s: u32,
}

impl TypeRS {
    pub fn new(r: u32, s: u32) -> Self {
        Self { r, s }
    }
}

impl std::fmt::Display for TypeRS {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.r, self.s)
    }
}

fn lambda_k<K: Coeff>(spec: &Spectrum) -> Vec<K> {
    spec.values().iter().map(|&l| K::from_i64(l)).collect()
}

/// Checks `X_n = λ_n x_n`, linear part `diag(λ)`; returns the corrections `f_j`.
fn corrections<K: Coeff>(x: &VectorField<K>, spec: &Spectrum) -> Result<Vec<TruncatedSeries<K>>> {
    let n = x.nvars();
    if spec.n() != n {
        return Err(Error::Dimension(format!("spectrum of length {} for {n} variables", spec.n())));
    }
    let x0 = VectorField::diagonal(&lambda_k::<K>(spec), x.cap());
    let f = x.try_sub(&x0)?;
    let scale = x.max_abs_coeff().max(1.0);
    if f.component(n - 1).terms().any(|(_, c)| !c.is_negligible(scale)) {
        return Err(Error::Shape(format!(
            "last component must be exactly {} x_{n}",
            spec.get(n - 1)
        )));
    }
    for j in 0..n - 1 {
        if let Some((k, _)) = f.component(j).terms().find(|(k, c)| k.total() <= 1 && !c.is_negligible(scale)) {
            return Err(Error::Shape(format!(
                "component {j} has linear part other than λ_{j} x_{j}: term {k}"
            )));
        }
    }
    Ok(f.into_components())
}

fn transverse_degree(k: &Multidegree) -> u32 {
    k.total() - k.get(k.nvars() - 1)
}

/// The largest `(r, s)` the field satisfies (each reported as `cap + 1`
/// when there are no corrections).
pub fn field_type<K: Coeff>(x: &VectorField<K>, spec: &Spectrum) -> Result<TypeRS> {
    let f = corrections(x, spec)?;
    let n = x.nvars();
    let mut t = TypeRS::new(x.cap() + 1, x.cap() + 1);
    let scale = x.max_abs_coeff();
    for fj in &f[..n - 1] {
        for (k, _) in fj.terms().filter(|(_, c)| !c.is_negligible(scale)) {
            t.r = t.r.min(k.get(n - 1));
            t.s = t.s.min(transverse_degree(k));
        }
    }
    Ok(t)
}

/// Errors with the first offending monomial unless `X` is of type `(r, s)`.
/// Float round-off below the pivot tolerance is not an offending term.
pub fn check_type<K: Coeff>(x: &VectorField<K>, spec: &Spectrum, t: TypeRS) -> Result<()> {
    let f = corrections(x, spec)?;
    let n = x.nvars();
    let scale = x.max_abs_coeff();
    for (j, fj) in f[..n - 1].iter().enumerate() {
        if let Some((k, _)) = fj
            .terms()
            .find(|(k, c)| (k.get(n - 1) < t.r || transverse_degree(k) < t.s) && !c.is_negligible(scale))
        {
            return Err(Error::TypeViolation {
                r: t.r,
                s: t.s,
                component: j,
                monomial: k.clone(),
            });
        }
    }
    Ok(())
}

/// Generator `Y` removing the chosen correction terms: each selected
/// `a x^k ∂_j` gives `b x^k ∂_j` with `b = −a/(λ_j − k·λ)`, so that
/// `[Y, X₀] = −(selected terms)`. Any selected term with vanishing
/// denominator is reported as an obstruction.
fn homological_generator<K: Coeff>(
    f: &[TruncatedSeries<K>],
    spec: &Spectrum,
    components: std::ops::Range<usize>,
    select: impl Fn(&Multidegree) -> bool,
) -> Result<(VectorField<K>, usize)> {
    let n = spec.n();
    let cap = f[0].cap();
    let mut comps = vec![TruncatedSeries::zero(n, cap); n];
    let mut witnesses = Vec::new();
    let mut count = 0;
    for j in components {
        for (k, a) in f[j].terms() {
            if k.total() < 2 || !select(k) {
                continue;
            }
            let den = spec.get(j) - k.dot(spec.values());
            if den == 0 {
                witnesses.push(ResonantTerm {
                    component: j,
                    monomial: k.clone(),
                });
                continue;
            }
            // Integer denominators: |den| ≥ 1 holds by construction.
            comps[j].add_term(k.clone(), -(a.div_ref(&K::from_i64(den))));
            count += 1;
        }
    }
    if !witnesses.is_empty() {
        return Err(Error::ResonanceObstruction { witnesses });
    }
    Ok((VectorField::new(comps)?, count))
}

/// Generator for the `x_n^r` slice of a type-`(r, s)` field.
pub fn solve_homological<K: Coeff>(x: &VectorField<K>, spec: &Spectrum, r: u32) -> Result<VectorField<K>> {
    let f = corrections(x, spec)?;
    let n = x.nvars();
    Ok(homological_generator(&f, spec, 0..n - 1, |k| k.get(n - 1) == r)?.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepLog {
    pub stage: String,
    pub generator_terms: usize,
}

/// `transform_* original = normal`, with the residual of that identity
/// recomputed independently of the steps that produced it.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = ""))]
pub struct ConjugationCertificate<K: Coeff> {
    pub original: VectorField<K>,
    pub normal: VectorField<K>,
    pub transform: FormalDiffeo<K>,
    pub residual: VectorField<K>,
    pub steps: Vec<StepLog>,
}

impl<K: Coeff> ConjugationCertificate<K> {
    fn assemble(original: VectorField<K>, normal: VectorField<K>, transform: FormalDiffeo<K>, steps: Vec<StepLog>) -> Result<Self> {
        let residual = pushforward(&transform, &original)?.try_sub(&normal)?;
        Ok(Self {
            original,
            normal,
            transform,
            residual,
            steps,
        })
    }

    /// Exactly zero in exact mode; at most 1e−12 in float mode.
    pub fn residual_vanishes(&self) -> bool {
        match K::MODE {
            Mode::Exact => self.residual.is_zero(),
            Mode::Float => self.residual.max_abs_coeff() <= 1e-12,
        }
    }
}

/// Apply `exp(−Y)` to both the running field and the running transform.
fn apply_step<K: Coeff>(
    x: &VectorField<K>,
    total: &FormalDiffeo<K>,
    y: &VectorField<K>,
) -> Result<(VectorField<K>, FormalDiffeo<K>)> {
    let phi = exp_formal(&y.scale(&-K::one()))?;
    let phi_inv = exp_formal(y)?;
    let next = pushforward_with_inverse(&phi, &phi_inv, x)?;
    Ok((next, phi.compose(total)?))
}

/// Raise a type-`(r, s)` field (with `r ≥ 1`, `s ≥ 2`) to type `target`,
/// first advancing `r`, then `s`.
pub fn reduce_type<K: Coeff>(x: &VectorField<K>, spec: &Spectrum, target: TypeRS) -> Result<ConjugationCertificate<K>> {
    let cap = x.cap();
    if target.r > cap || target.s > cap {
        return Err(Error::CapTooSmall {
            cap,
            r: target.r,
            s: target.s,
        });
    }
    check_type(x, spec, TypeRS::new(1, 2))?;
    let n = x.nvars();
    let last = n - 1;
    let current = field_type(x, spec)?;
    let mut field = x.clone();
    let mut total = FormalDiffeo::identity(n, cap);
    let mut steps = Vec::new();

    let mut s = current.s.min(target.s).max(2);
    let mut r = current.r.min(target.r).max(1);
    while r < target.r {
        let f = corrections(&field, spec)?;
        let (y, terms) = homological_generator(&f, spec, 0..last, |k| k.get(last) == r)?;
        if terms > 0 {
            (field, total) = apply_step(&field, &total, &y)?;
        }
        steps.push(StepLog {
            stage: format!("({r},{s})->({},{s})", r + 1),
            generator_terms: terms,
        });
        r += 1;
        debug_assert!(check_type(&field, spec, TypeRS::new(r, s)).is_ok());
    }
    while s < target.s {
        let f = corrections(&field, spec)?;
        let (y, terms) = homological_generator(&f, spec, 0..last, |k| transverse_degree(k) == s)?;
        if terms > 0 {
            (field, total) = apply_step(&field, &total, &y)?;
        }
        steps.push(StepLog {
            stage: format!("({r},{s})->({r},{})", s + 1),
            generator_terms: terms,
        });
        s += 1;
    }
    check_type(&field, spec, target)?;
    ConjugationCertificate::assemble(x.clone(), field, total, steps)
}

/// Outcome of [`poincare_dulac`].
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = ""))]
pub struct PoincareDulac<K: Coeff> {
    pub spectrum: Spectrum,
    /// Eigenvalues of the input linear part in the order of the normal coordinates.
    #[serde(serialize_with = "crate::series::serialize_coeffs")]
    pub eigenvalues: Vec<K>,
    pub certificate: ConjugationCertificate<K>,
    pub factorization: Factorization<K>,
}

/// Whether the normal field is `(1 + g) X₀`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case", bound(serialize = ""))]
pub enum Factorization<K: Coeff> {
    /// `g` is known through degree `cap − 1` (one degree is lost dividing by `x_j`).
    UnitMultiple { g: TruncatedSeries<K> },
    None { component: usize, reason: String },
}

/// Remove every non-resonant term, degree by degree, for a field whose
/// linear part is diagonalizable with eigenvalues proportional to integers.
/// Non-diagonal linear parts are first conjugated to their eigenbasis.
pub fn poincare_dulac(x: &VectorField<GaussianRational>) -> Result<PoincareDulac<GaussianRational>> {
    let (n, cap) = (x.nvars(), x.cap());
    let l = x.linear_part();
    let (_, nil) = jordan_split(&l)?;
    if !nil.is_zero() {
        return Err(Error::NotDiagonalizable(format!("{nil:?}")));
    }
    let (p, eig) = diagonalize(&l)?;
    let spec = Spectrum::from_exact(&eig)?;
    let p_inv = FormalDiffeo::from_linear(&p.inverse()?, cap)?;
    let mut field = pushforward(&p_inv, x)?;
    let mut total = p_inv;
    let mut steps = Vec::new();

    for d in 2..=cap {
        let f = field.nonlinear_part().into_components();
        let resonant = |j: usize, k: &Multidegree| k.dot(spec.values()) == spec.get(j);
        let mut comps = vec![TruncatedSeries::zero(n, cap); n];
        let mut terms = 0;
        for j in 0..n {
            for (k, a) in f[j].terms() {
                if k.total() != d || resonant(j, k) {
                    continue;
                }
                let den = &eig[j] - &k_dot(k, &eig);
                comps[j].add_term(k.clone(), -(a / &den));
                terms += 1;
            }
        }
        if terms > 0 {
            let y = VectorField::new(comps)?;
            (field, total) = apply_step(&field, &total, &y)?;
        }
        steps.push(StepLog {
            stage: format!("degree {d}"),
            generator_terms: terms,
        });
    }
    let x0 = VectorField::diagonal(&eig, cap);
    let factorization = unit_factorization(&field, &x0);
    Ok(PoincareDulac {
        spectrum: spec,
        eigenvalues: eig,
        certificate: ConjugationCertificate::assemble(x.clone(), field, total, steps)?,
        factorization,
    })
}

fn k_dot(k: &Multidegree, eig: &[GaussianRational]) -> GaussianRational {
    k.exps()
        .zip(eig)
        .fold(GaussianRational::zero(), |acc, (e, l)| &acc + &(l * &GaussianRational::from_i64(e as i64)))
}

/// Test `normal = (1 + g) X₀` by dividing each component by `λ_j x_j`.
pub fn unit_factorization<K: Coeff>(normal: &VectorField<K>, x0: &VectorField<K>) -> Factorization<K> {
    let n = normal.nvars();
    let mut g: Option<TruncatedSeries<K>> = None;
    for j in 0..n {
        let xj = Multidegree::unit(n, j);
        let lam = x0.component(j).coeff(&xj);
        if lam.is_zero() {
            return Factorization::None {
                component: j,
                reason: "zero eigenvalue".into(),
            };
        }
        let Some(q) = normal.component(j).div_monomial(&xj) else {
            return Factorization::None {
                component: j,
                reason: format!("component {j} is not divisible by x_{j}"),
            };
        };
        let q = q.scale(&K::one().div_ref(&lam));
        let gj = &q - &TruncatedSeries::one(n, q.cap());
        match &g {
            None => g = Some(gj),
            Some(prev) if prev.max_abs_diff(&gj) <= tolerance::<K>() => {}
            Some(_) => {
                return Factorization::None {
                    component: j,
                    reason: format!("component {j} has a different cofactor"),
                }
            }
        }
    }
    Factorization::UnitMultiple { g: g.expect("n ≥ 1") }
}

fn tolerance<K: Coeff>() -> f64 {
    match K::MODE {
        Mode::Exact => 0.0,
        Mode::Float => 1e-12,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resonance::resonant_monomials;
    use crate::scalar::GaussianRational as Q;

    type S = TruncatedSeries<Q>;

    fn md(e: &[u32]) -> Multidegree {
        Multidegree::new(e)
    }

    fn q(v: i64) -> Q {
        <Q as Coeff>::from_i64(v)
    }

    fn mq(rows: &[&[i64]]) -> Matrix<Q> {
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&v| q(v)).collect()).collect()).unwrap()
    }

    fn spec(l: &[i64]) -> Spectrum {
        Spectrum::new(l.to_vec()).unwrap()
    }

    fn x0(l: &[i64], cap: u32) -> VectorField<Q> {
        VectorField::diagonal(&l.iter().map(|&v| q(v)).collect::<Vec<_>>(), cap)
    }

    fn with_terms(base: VectorField<Q>, terms: &[(usize, &[u32], i64)]) -> VectorField<Q> {
        let (n, cap) = (base.nvars(), base.cap());
        terms.iter().fold(base, |acc, (j, k, c)| {
            acc.try_add(&VectorField::monomial(n, cap, *j, md(k), q(*c))).unwrap()
        })
    }

    #[test]
    fn jordan_examples() {
        let d = mq(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, -1]]);
        assert_eq!(jordan_split(&d).unwrap(), (d.clone(), Matrix::zeros(3, 3)));
        let j = mq(&[&[1, 1], &[0, 1]]);
        assert_eq!(jordan_split(&j).unwrap(), (Matrix::identity(2), mq(&[&[0, 1], &[0, 0]])));
        let nil = mq(&[&[0, 1, 2], &[0, 0, 3], &[0, 0, 0]]);
        assert_eq!(jordan_split(&nil).unwrap(), (Matrix::zeros(3, 3), nil.clone()));
        // A non-triangular example: S and N commute and S is diagonalizable.
        let m = mq(&[&[2, 1, 0], &[-1, 4, 0], &[1, 0, 3]]);
        let (s, n) = jordan_split(&m).unwrap();
        assert_eq!(s.try_mul(&n).unwrap(), n.try_mul(&s).unwrap());
        assert!(n.pow(3).is_zero());
        assert_eq!(s.add(&n), m);
    }

    #[test]
    fn float_jordan_agrees() {
        let j = mq(&[&[1, 1], &[0, 1]]).to_float();
        let (s, n) = jordan_split(&j).unwrap();
        assert!(s.sub(&Matrix::identity(2)).max_abs() < 1e-8);
        assert!((n[(0, 1)] - C64::new(1.0, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn eigen_decomposition() {
        let m = mq(&[&[0, 1], &[1, 0]]);
        let (p, eig) = diagonalize(&m).unwrap();
        let d = p.inverse().unwrap().try_mul(&m).unwrap().try_mul(&p).unwrap();
        assert_eq!(d, Matrix::diagonal(&eig));
        assert!(matches!(diagonalize(&mq(&[&[1, 1], &[0, 1]])), Err(Error::NotDiagonalizable(_))));
        assert!(matches!(
            exact_eigenvalues(&mq(&[&[0, 2], &[1, 0]])),
            Err(Error::NonRepresentableEigenvalues(_))
        ));
    }

    #[test]
    fn homological_solve_examples() {
        let s = spec(&[-1, -1, 1]);
        assert!(solve_homological(&x0(&[-1, -1, 1], 6), &s, 2).unwrap().is_zero());
        let x = with_terms(x0(&[-1, -1, 1], 6), &[(0, &[2, 0, 2], 5)]);
        let y = solve_homological(&x, &s, 2).unwrap();
        assert_eq!(y, VectorField::monomial(3, 6, 0, md(&[2, 0, 2]), q(5)));
        let target = VectorField::monomial(3, 6, 0, md(&[2, 0, 2]), q(-5));
        assert_eq!(y.lie_bracket(&x0(&[-1, -1, 1], 6)).unwrap(), target);

        let resonant = with_terms(x0(&[-1, -1, 1], 6), &[(0, &[2, 0, 1], 1)]);
        assert!(resonant_monomials(&s, 0, 3).unwrap().contains(&md(&[2, 0, 1])));
        match solve_homological(&resonant, &s, 1) {
            Err(Error::ResonanceObstruction { witnesses }) => {
                assert_eq!(witnesses, vec![ResonantTerm { component: 0, monomial: md(&[2, 0, 1]) }]);
            }
            other => panic!("expected obstruction, got {other:?}"),
        }
    }

    #[test]
    fn reduce_type_round_trip() {
        let s = spec(&[-1, -1, 1]);
        let x = with_terms(x0(&[-1, -1, 1], 8), &[(0, &[2, 0, 2], 1), (1, &[1, 1, 2], -2)]);
        let cert = reduce_type(&x, &s, TypeRS::new(3, 3)).unwrap();
        assert!(cert.residual_vanishes());
        assert_eq!(cert.transform.linear_part(), &Matrix::identity(3));
        check_type(&cert.normal, &s, TypeRS::new(3, 3)).unwrap();
        assert_eq!(cert.steps[0].stage, "(2,2)->(3,2)");

        let id = reduce_type(&x0(&[-1, -1, 1], 8), &s, TypeRS::new(3, 3)).unwrap();
        assert_eq!(id.transform, FormalDiffeo::identity(3, 8));
        assert_eq!(id.normal, x0(&[-1, -1, 1], 8));

        let bad = with_terms(x0(&[-1, -1, 1], 8), &[(0, &[2, 0, 1], 1)]);
        assert!(matches!(reduce_type(&bad, &s, TypeRS::new(3, 3)), Err(Error::ResonanceObstruction { .. })));
        assert!(matches!(reduce_type(&x, &s, TypeRS::new(9, 2)), Err(Error::CapTooSmall { .. })));
        let low = with_terms(x0(&[-1, -1, 1], 8), &[(0, &[2, 0, 0], 1)]);
        assert!(matches!(reduce_type(&low, &s, TypeRS::new(3, 3)), Err(Error::TypeViolation { .. })));
    }

    #[test]
    fn poincare_dulac_examples() {
        // Non-resonant quadratic terms are removed.
        let x = with_terms(x0(&[-1, -1, 1], 5), &[(0, &[1, 1, 0], 3), (2, &[0, 0, 2], 1)]);
        let pd = poincare_dulac(&x).unwrap();
        assert!(pd.certificate.residual_vanishes());
        assert_eq!(pd.certificate.normal, x0(&[-1, -1, 1], 5));

        // (1 + x₁x₃) X₀ consists of resonant terms only.
        let unit = S::one(3, 5).try_add(&S::monomial(3, 5, md(&[1, 0, 1]), q(1))).unwrap();
        let x = x0(&[-1, -1, 1], 5).mul_function(&unit).unwrap();
        let pd = poincare_dulac(&x).unwrap();
        assert_eq!(pd.certificate.normal, x);
        assert_eq!(
            pd.factorization,
            Factorization::UnitMultiple { g: S::monomial(3, 4, md(&[1, 0, 1]), q(1)) }
        );

        let jordan = VectorField::linear(&mq(&[&[1, 1], &[0, 1]]), 3);
        assert!(matches!(poincare_dulac(&jordan), Err(Error::NotDiagonalizable(_))));
    }
}
