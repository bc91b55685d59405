//! Holonomy of the separatrix `{x' = 0}` of a transversal-normal field,
//! its order, averaging linearization and invariant polynomials.
//!
//! Coordinates are `(x', x_n)` with `x' = (x_1,…,x_{n−1})`. Along the loop
//! `x_n = c₀ e^{2πiτ}`, `τ ∈ [0, 1]`, the leaf through `(u, c₀)` is
//! `x'(τ)`, with `dx'/dτ = (2πi/λ_n) X'(x', c₀e^{2πiτ})`. Treating `x'(τ)`
//! as a jet in the initial value `u`, this is a finite system of ODEs on the
//! jet coefficients; integrating it to `τ = 1` gives the holonomy `Θ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::multidegree::Multidegree;
use crate::ode::{self, Control};
use crate::resonance::{rj_sj, Spectrum};
use crate::scalar::{gcd, lcm, root_of_unity, Coeff, Mode, C64};
use crate::series::{compose_many, TruncatedSeries};
use crate::vectorfield::{FormalDiffeo, VectorField};

/// `e^{2πi p/q}` with `gcd(p, q) = 1`, `q > 0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Phase {
    pub p: i64,
    pub q: i64,
    pub re: f64,
    pub im: f64,
}

impl Phase {
    pub fn new(p: i64, q: i64) -> Self {
        let g = gcd(p, q).max(1) * q.signum();
        let (p, q) = (p / g, q / g);
        let z = root_of_unity(p, q);
        Self { p, q, re: z.re, im: z.im }
    }

    pub fn value(&self) -> C64 {
        C64::new(self.re, self.im)
    }

    pub fn order(&self) -> i64 {
        self.q
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Holonomy {
    pub theta: FormalDiffeo<C64>,
    pub lambda: Vec<i64>,
    pub c0: [f64; 2],
    /// `e^{2πiλ_j/λ_n}` for `j < n`.
    pub phases: Vec<Phase>,
    /// `max |D₀Θ − diag(phases)|`.
    pub linear_deviation: f64,
    pub ode_steps: usize,
}

/// Read `λ` from a field of the shape `Σ_{j<n}(λ_j x_j + f_j)∂_j + λ_n x_n ∂_n`
/// with `f_j(0, x_n) = 0`. Eigenvalues must be integers.
pub fn transversal_spectrum<K: Coeff>(x: &VectorField<K>) -> Result<Spectrum> {
    let n = x.nvars();
    let last = x.component(n - 1);
    let xn = Multidegree::unit(n, n - 1);
    if last.len() != 1 || last.coeff(&xn).is_zero() {
        return Err(Error::Shape(format!("component {} must be λ_n x_{}", n - 1, n - 1)));
    }
    let as_int = |c: &K| -> Option<i64> {
        let z = c.to_c64();
        let r = z.re.round();
        let exact = match K::MODE {
            Mode::Exact => c.sub_ref(&K::from_i64(r as i64)).is_zero(),
            Mode::Float => (z - C64::new(r, 0.0)).norm() <= 1e-12 * (1.0 + r.abs()),
        };
        exact.then_some(r as i64)
    };
    let mut lambda = Vec::with_capacity(n);
    for j in 0..n {
        let c = x.component(j).coeff(&Multidegree::unit(n, j));
        lambda.push(as_int(&c).ok_or_else(|| Error::Spectrum(format!("λ_{j} = {c:?} is not an integer")))?);
        if j + 1 < n {
            for (k, _) in x.component(j).terms() {
                if k.total() - k.get(n - 1) == 0 {
                    return Err(Error::Shape(format!("component {j} has the pure x_n term {k}")));
                }
                if k.total() == 1 && k.get(j) != 1 {
                    return Err(Error::Shape(format!("component {j} has off-diagonal linear term {k}")));
                }
            }
        }
    }
    if lambda[n - 1] <= 0 {
        return Err(Error::Spectrum(format!("λ_n = {} must be a positive integer", lambda[n - 1])));
    }
    // Keep the actual (not gcd-reduced) values: the loop period uses λ_n.
    Ok(Spectrum::new(lambda.clone())?).and_then(|s| {
        if s.values() == lambda.as_slice() {
            Ok(s)
        } else {
            Err(Error::Spectrum(format!("eigenvalues {lambda:?} share a common factor; rescale the field")))
        }
    })
}

/// Holonomy jet at `x_n = c₀`, integrated with relative tolerance 1e−13.
pub fn holonomy_map<K: Coeff>(x: &VectorField<K>, c0: C64) -> Result<Holonomy> {
    if c0.norm() == 0.0 {
        return Err(Error::InvalidArgument("transversal height c₀ must be nonzero".into()));
    }
    let spec = transversal_spectrum(x)?;
    let n = x.nvars();
    let m = n - 1;
    let cap = x.cap();
    let lambda_n = spec.get(m);
    let xf = x.to_float();

    // X_j = Σ_e x_n^e P_{j,e}(x').
    let mut slices: Vec<Vec<(u32, TruncatedSeries<C64>)>> = Vec::with_capacity(m);
    for j in 0..m {
        let mut by_e: std::collections::BTreeMap<u32, TruncatedSeries<C64>> = Default::default();
        for (k, c) in xf.component(j).terms() {
            let e = k.get(m);
            by_e.entry(e)
                .or_insert_with(|| TruncatedSeries::zero(m, cap))
                .add_term(k.remove_var(m), *c);
        }
        slices.push(by_e.into_iter().collect());
    }
    let basis = Multidegree::up_to(m, 1, cap);
    let index: std::collections::HashMap<Multidegree, usize> =
        basis.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
    let nb = basis.len();
    let factor = C64::new(0.0, 2.0 * std::f64::consts::PI / lambda_n as f64);

    let unpack = |y: &[C64]| -> Vec<TruncatedSeries<C64>> {
        (0..m)
            .map(|l| {
                let mut s = TruncatedSeries::zero(m, cap);
                for (i, k) in basis.iter().enumerate() {
                    s.add_term(k.clone(), y[l * nb + i]);
                }
                s
            })
            .collect()
    };
    let rhs = |tau: f64, y: &[C64], dy: &mut [C64]| {
        let xn = c0 * C64::from_polar(1.0, 2.0 * std::f64::consts::PI * tau);
        let map = unpack(y);
        let restricted: Vec<TruncatedSeries<C64>> = slices
            .iter()
            .map(|sl| {
                let mut acc = TruncatedSeries::zero(m, cap);
                for (e, p) in sl {
                    acc = &acc + &p.scale(&xn.powu(*e));
                }
                acc
            })
            .collect();
        let g = compose_many(&restricted, &map).expect("shapes agree");
        dy.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        for (l, gl) in g.iter().enumerate() {
            for (k, c) in gl.terms() {
                dy[l * nb + index[k]] = factor * c;
            }
        }
    };
    let mut y0 = vec![C64::new(0.0, 0.0); m * nb];
    for l in 0..m {
        y0[l * nb + index[&Multidegree::unit(m, l)]] = C64::new(1.0, 0.0);
    }
    let opts = ode::Options {
        rtol: 1e-13,
        atol: 1e-16,
        h0: 1e-3,
        h_max: 0.05,
        max_steps: 200_000,
    };
    let out = ode::integrate(rhs, 0.0, &y0, 1.0, &opts, |_, _| Control::Continue)?;
    let theta = FormalDiffeo::new(unpack(&out.y))?;
    let phases: Vec<Phase> = (0..m).map(|j| Phase::new(spec.get(j), lambda_n)).collect();
    let expected = Matrix::diagonal(&phases.iter().map(Phase::value).collect::<Vec<_>>());
    let linear_deviation = theta.linear_part().sub(&expected).max_abs();
    Ok(Holonomy {
        theta,
        lambda: spec.values().to_vec(),
        c0: [c0.re, c0.im],
        phases,
        linear_deviation,
        ode_steps: out.accepted,
    })
}

/// `lcm_j (λ_n / gcd(λ_j, λ_n))`: the order of the linear holonomy.
pub fn closed_form_order(spec: &Spectrum) -> u32 {
    let n = spec.n();
    let ln = spec.get(n - 1);
    (0..n - 1).fold(1, |acc, j| lcm(acc, ln / gcd(spec.get(j), ln))) as u32
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderReport {
    /// Smallest `m ≤ max_order` with `Θ^m = id` at cap.
    pub order: Option<u32>,
    pub max_order: u32,
    /// `max |Θ^m − id|` for the certified `m`, or the smallest seen otherwise.
    pub deviation: f64,
    /// Lowest degree of `Θ^{λ_n} − id` (`None`: identity through the cap).
    pub tangency_order: Option<u32>,
}

fn jet_tolerance<K: Coeff>(scale: f64) -> f64 {
    match K::MODE {
        Mode::Exact => 0.0,
        Mode::Float => 1e-10 * scale.max(1.0),
    }
}

fn distance_to_identity<K: Coeff>(phi: &FormalDiffeo<K>) -> f64 {
    phi.minus_identity().iter().map(TruncatedSeries::max_abs_coeff).fold(0.0, f64::max)
}

pub fn order_of<K: Coeff>(theta: &FormalDiffeo<K>, max_order: u32, lambda_n: Option<u32>) -> Result<OrderReport> {
    if max_order < 1 {
        return Err(Error::InvalidArgument("max_order must be at least 1".into()));
    }
    let scale = theta.components().iter().map(TruncatedSeries::max_abs_coeff).fold(0.0, f64::max);
    let tol = jet_tolerance::<K>(scale);
    let mut power = theta.clone();
    let mut best = f64::INFINITY;
    let mut order = None;
    for m in 1..=max_order {
        let d = distance_to_identity(&power);
        if d <= tol {
            order = Some(m);
            best = d;
            break;
        }
        best = best.min(d);
        power = power.compose(theta)?;
    }
    let tangency_order = match lambda_n {
        None => None,
        Some(l) => {
            let diff = theta.pow(l)?.minus_identity();
            (1..=theta.cap()).find(|&d| {
                diff.iter()
                    .any(|c| c.homogeneous(d).max_abs_coeff() > tol)
            })
        }
    };
    Ok(OrderReport {
        order,
        max_order,
        deviation: best,
        tangency_order,
    })
}

/// `G = (1/m) Σ_{j<m} A^{−j} ∘ Θ^j` with `A = D₀Θ`; requires `Θ^m = id` at cap.
pub fn linearize_finite<K: Coeff>(theta: &FormalDiffeo<K>, m: u32) -> Result<FormalDiffeo<K>> {
    let scale = theta.components().iter().map(TruncatedSeries::max_abs_coeff).fold(0.0, f64::max);
    if m == 0 || distance_to_identity(&theta.pow(m)?) > jet_tolerance::<K>(scale) {
        return Err(Error::OrderNotCertified(m));
    }
    let (n, cap) = (theta.nvars(), theta.cap());
    let a_inv = theta.linear_part().inverse()?;
    let mut acc = vec![TruncatedSeries::zero(n, cap); n];
    let mut power = FormalDiffeo::identity(n, cap);
    let mut a_pow = Matrix::<K>::identity(n);
    for _ in 0..m {
        for (i, slot) in acc.iter_mut().enumerate() {
            for j in 0..n {
                if !a_pow[(i, j)].is_zero() {
                    *slot = &*slot + &power.component(j).scale(&a_pow[(i, j)]);
                }
            }
        }
        power = power.compose(theta)?;
        a_pow = a_pow.try_mul(&a_inv)?;
    }
    let inv_m = K::from_ratio(1, m as i64);
    FormalDiffeo::new(acc.iter().map(|c| c.scale(&inv_m)).collect())
}

/// `max |G∘Θ − A∘G|`.
pub fn conjugacy_defect<K: Coeff>(g: &FormalDiffeo<K>, theta: &FormalDiffeo<K>) -> Result<f64> {
    let lhs = g.compose(theta)?;
    let a = FormalDiffeo::from_linear(theta.linear_part(), theta.cap())?;
    let rhs = a.compose(g)?;
    Ok(lhs.max_abs_diff(&rhs))
}

/// Transversal invariants `c₀^{s_j} (G_j)^{r_j}`, `j < n − 1`.
pub fn invariant_polynomials_average<K: Coeff>(
    g: &FormalDiffeo<K>,
    spec: &Spectrum,
    c0: &K,
) -> Result<Vec<TruncatedSeries<K>>> {
    let m = spec.n() - 1;
    if g.nvars() != m {
        return Err(Error::Dimension(format!("G acts on {} variables, expected {m}", g.nvars())));
    }
    (0..m)
        .map(|j| {
            let (r, s) = rj_sj(spec, j)?;
            Ok(g.component(j).pow(r).scale(&c0.pow(s)))
        })
        .collect()
}

/// `⟨Θ⟩` with its order when certified.
#[derive(Clone, Debug, Serialize)]
#[serde(bound(serialize = "K: Coeff"))]
pub struct HolonomyGroup<K> {
    pub generator: FormalDiffeo<K>,
    pub order: Option<u32>,
    pub max_order: u32,
    #[serde(skip)]
    pub elements: Vec<FormalDiffeo<K>>,
}

impl<K: Coeff> HolonomyGroup<K> {
    pub fn new(generator: FormalDiffeo<K>, max_order: u32) -> Result<Self> {
        let report = order_of(&generator, max_order, None)?;
        let elements = match report.order {
            Some(m) => cyclic_group(&generator, m)?,
            None => Vec::new(),
        };
        Ok(Self {
            generator,
            order: report.order,
            max_order,
            elements,
        })
    }
}

/// `Θ^0, …, Θ^{m−1}`.
pub fn cyclic_group<K: Coeff>(theta: &FormalDiffeo<K>, order: u32) -> Result<Vec<FormalDiffeo<K>>> {
    let mut out = vec![FormalDiffeo::identity(theta.nvars(), theta.cap())];
    for _ in 1..order {
        let next = out.last().unwrap().compose(theta)?;
        out.push(next);
    }
    Ok(out)
}

fn linear_form<K: Coeff>(coeffs: &[K], n: usize, cap: u32) -> TruncatedSeries<K> {
    let mut s = TruncatedSeries::zero(n, cap);
    for (j, c) in coeffs.iter().enumerate() {
        s.add_term(Multidegree::unit(n, j), c.clone());
    }
    s
}

/// `F_j = Π_{h ∈ H} L_j ∘ h`.
pub fn invariant_polynomials_product<K: Coeff>(
    group: &[FormalDiffeo<K>],
    forms: &[Vec<K>],
) -> Result<Vec<TruncatedSeries<K>>> {
    let first = group
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty group".into()))?;
    let (n, cap) = (first.nvars(), first.cap());
    forms
        .iter()
        .enumerate()
        .map(|(j, l)| {
            if l.len() != n {
                return Err(Error::Dimension(format!("linear form {j} has {} coefficients", l.len())));
            }
            let lf = linear_form(l, n, cap);
            let mut acc = TruncatedSeries::one(n, cap);
            for h in group {
                acc = &acc * &h.pull_back(&lf)?;
            }
            if acc.is_zero() {
                return Err(Error::DegenerateForm(j));
            }
            Ok(acc)
        })
        .collect()
}

/// For every choice `(g_1,…,g_q)` of linear group elements, the forms
/// `L_j ∘ g_j` have only the origin as common zero.
pub fn separating_condition<K: Coeff>(linear_group: &[Matrix<K>], forms: &[Vec<K>]) -> bool {
    let Some(first) = linear_group.first() else {
        return false;
    };
    let n = first.rows();
    if forms.len() < n {
        return false;
    }
    let q = forms.len();
    let g = linear_group.len();
    let mut choice = vec![0usize; q];
    loop {
        let rows: Vec<Vec<K>> = (0..q)
            .map(|j| {
                let a = &linear_group[choice[j]];
                (0..n)
                    .map(|c| (0..n).fold(K::zero(), |acc, i| acc.add_ref(&forms[j][i].mul_ref(&a[(i, c)]))))
                    .collect()
            })
            .collect();
        if Matrix::from_rows(rows).map(|m| m.rank()).unwrap_or(0) < n {
            return false;
        }
        let mut pos = 0;
        loop {
            if pos == q {
                return true;
            }
            choice[pos] += 1;
            if choice[pos] < g {
                break;
            }
            choice[pos] = 0;
            pos += 1;
        }
    }
}

/// Random integer forms (entries in −5..=5) satisfying the separating
/// condition for the linear parts of `group`, one per variable.
pub fn auto_forms<K: Coeff>(group: &[FormalDiffeo<K>], seed: u64) -> Result<Vec<Vec<K>>> {
    let n = group
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty group".into()))?
        .nvars();
    let linear: Vec<Matrix<K>> = group.iter().map(|h| h.linear_part().clone()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..200 {
        let forms: Vec<Vec<K>> = (0..n)
            .map(|_| (0..n).map(|_| K::from_i64(rng.random_range(-5..=5))).collect())
            .collect();
        if separating_condition(&linear, &forms) {
            return Ok(forms);
        }
    }
    Err(Error::DegenerateForm(0))
}

/// Sampled evidence that the functions have no common zero on the sphere of
/// the given radius. Statistical, not a proof.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZeroLocusReport {
    pub label: &'static str,
    pub radius: f64,
    pub grid_points: usize,
    pub random_points: usize,
    /// `min over samples of max_j |F_j|`.
    pub min_max_abs: f64,
    pub threshold: f64,
    pub passed: bool,
}

pub fn zero_locus_check(fs: &[TruncatedSeries<C64>], radius: f64, random_points: usize, seed: u64) -> ZeroLocusReport {
    let n = fs.first().map_or(0, TruncatedSeries::nvars);
    let units = [
        C64::new(1.0, 0.0),
        C64::new(-1.0, 0.0),
        C64::new(0.0, 1.0),
        C64::new(0.0, -1.0),
        C64::new(0.0, 0.0),
    ];
    let mut points: Vec<Vec<C64>> = Vec::new();
    let total = 5usize.pow(n as u32);
    for idx in 0..total {
        let mut v = Vec::with_capacity(n);
        let mut r = idx;
        for _ in 0..n {
            v.push(units[r % 5]);
            r /= 5;
        }
        if v.iter().any(|c| c.norm() > 0.0) {
            points.push(v);
        }
    }
    let grid_points = points.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while points.len() < grid_points + random_points {
        let v: Vec<C64> = (0..n)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-3 && norm <= 1.0 {
            points.push(v);
        }
    }
    let min_max_abs = points
        .par_iter()
        .map(|v| {
            let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            let p: Vec<C64> = v.iter().map(|c| c * (radius / norm)).collect();
            fs.iter().map(|f| f.eval(&p).norm()).fold(0.0, f64::max)
        })
        .reduce(|| f64::INFINITY, f64::min);
    let threshold = 1e-8;
    ZeroLocusReport {
        label: "statistical",
        radius,
        grid_points,
        random_points,
        min_max_abs,
        threshold,
        passed: min_max_abs > threshold,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::GaussianRational as Q;

    fn md(e: &[u32]) -> Multidegree {
        Multidegree::new(e)
    }

    fn q(v: i64) -> Q {
        Q::from_i64(v)
    }

    #[test]
    fn linear_holonomy_phases() {
        let x0 = VectorField::diagonal(&[q(-1), q(-2), q(3)], 4);
        let h = holonomy_map(&x0, C64::new(0.5, 0.0)).unwrap();
        assert!(h.linear_deviation < 1e-10, "{}", h.linear_deviation);
        assert_eq!((h.phases[0].p, h.phases[0].q), (-1, 3));
        assert_eq!((h.phases[1].p, h.phases[1].q), (-2, 3));
        let ord = order_of(&h.theta, 10, Some(3)).unwrap();
        assert_eq!(ord.order, Some(3));
        assert_eq!(ord.tangency_order, None);
        assert_eq!(closed_form_order(&Spectrum::new(vec![-1, -2, 3]).unwrap()), 3);

        let id = holonomy_map(&VectorField::diagonal(&[q(-1), q(-1), q(1)], 3), C64::new(0.5, 0.0)).unwrap();
        assert_eq!(order_of(&id.theta, 4, Some(1)).unwrap().order, Some(1));
    }

    #[test]
    fn parabolic_holonomy_matches_closed_form() {
        // (−x + x²y)∂x + y∂y: 1/x gains −2πi c₀ per loop, Θ(x) = x/(1 − 2πi c₀ x).
        let cap = 6;
        let x = VectorField::diagonal(&[q(-1), q(1)], cap)
            .try_add(&VectorField::monomial(2, cap, 0, md(&[2, 1]), q(1)))
            .unwrap();
        let c0 = C64::new(0.3, 0.1);
        let h = holonomy_map(&x, c0).unwrap();
        let a = C64::new(0.0, 2.0 * std::f64::consts::PI) * c0;
        for d in 1..=cap {
            let got = h.theta.component(0).coeff(&md(&[d]));
            assert!((got - a.powu(d - 1)).norm() < 1e-9 * (1.0 + a.norm().powi(d as i32)), "degree {d}: {got}");
        }
        let ord = order_of(&h.theta, 20, Some(1)).unwrap();
        assert_eq!((ord.order, ord.tangency_order), (None, Some(2)));
    }

    #[test]
    fn shape_is_checked() {
        let bad = VectorField::diagonal(&[q(-1), q(-1), q(1)], 3)
            .try_add(&VectorField::monomial(3, 3, 2, md(&[1, 0, 1]), q(1)))
            .unwrap();
        assert!(matches!(holonomy_map(&bad, C64::new(0.5, 0.0)), Err(Error::Shape(_))));
        let neg = VectorField::diagonal(&[q(1), q(-1)], 3);
        assert!(matches!(holonomy_map(&neg, C64::new(0.5, 0.0)), Err(Error::Spectrum(_))));
    }

    #[test]
    fn parabolic_map_has_no_finite_order() {
        let theta = FormalDiffeo::new(vec![TruncatedSeries::from_terms(1, 4, [(md(&[1]), q(1)), (md(&[2]), q(1))]).unwrap()]).unwrap();
        assert_eq!(order_of(&theta, 12, None).unwrap().order, None);
        assert!(matches!(linearize_finite(&theta, 2), Err(Error::OrderNotCertified(2))));
    }

    #[test]
    fn averaging_an_involution() {
        // Θ = −x − x² is an involution at cap 2 only; G = x + x²/2.
        let theta = FormalDiffeo::new(vec![TruncatedSeries::from_terms(1, 2, [(md(&[1]), q(-1)), (md(&[2]), q(-1))]).unwrap()]).unwrap();
        let g = linearize_finite(&theta, 2).unwrap();
        let expected = TruncatedSeries::from_terms(1, 2, [(md(&[1]), q(1)), (md(&[2]), Q::from_ratio(1, 2))]).unwrap();
        assert_eq!(g.component(0), &expected);
        assert_eq!(conjugacy_defect(&g, &theta).unwrap(), 0.0);

        // Θ = −x/(1 + x) is an involution at every cap.
        let cap = 6;
        let terms = (1..=cap).map(|d| (md(&[d]), q(if d % 2 == 1 { -1 } else { 1 })));
        let theta = FormalDiffeo::new(vec![TruncatedSeries::from_terms(1, cap, terms).unwrap()]).unwrap();
        assert_eq!(order_of(&theta, 5, None).unwrap().order, Some(2));
        let g = linearize_finite(&theta, 2).unwrap();
        assert_eq!(conjugacy_defect(&g, &theta).unwrap(), 0.0);
        let spec = Spectrum::new(vec![-1, 2]).unwrap();
        let c0 = Q::from_ratio(1, 2);
        let inv = invariant_polynomials_average(&g, &spec, &c0).unwrap();
        assert_eq!(inv[0].compose(theta.components()).unwrap().truncated(cap), inv[0]);
    }

    #[test]
    fn product_invariants() {
        let swap = FormalDiffeo::from_linear(&Matrix::from_rows(vec![vec![q(0), q(1)], vec![q(1), q(0)]]).unwrap(), 3).unwrap();
        let group = cyclic_group(&swap, 2).unwrap();
        let f = invariant_polynomials_product(&group, &[vec![q(1), q(2)]]).unwrap();
        let expected = TruncatedSeries::from_terms(2, 3, [(md(&[2, 0]), q(2)), (md(&[1, 1]), q(5)), (md(&[0, 2]), q(2))]).unwrap();
        assert_eq!(f[0], expected);
        assert_eq!(swap.pull_back(&f[0]).unwrap(), f[0]);

        let forms = auto_forms(&group, 7).unwrap();
        let lin: Vec<_> = group.iter().map(|h| h.linear_part().clone()).collect();
        assert!(separating_condition(&lin, &forms));
        assert!(!separating_condition(&lin, &[vec![q(1), q(0)], vec![q(0), q(1)]]));
    }

    #[test]
    fn zero_locus_of_linear_model_invariants() {
        let f: Vec<TruncatedSeries<C64>> = vec![
            TruncatedSeries::monomial(2, 3, md(&[3, 0]), C64::new(0.5, 0.0)),
            TruncatedSeries::monomial(2, 3, md(&[0, 3]), C64::new(0.25, 0.0)),
        ];
        let report = zero_locus_check(&f, 1.0, 2000, 1);
        assert!(report.passed, "{report:?}");
        let degenerate = vec![f[0].clone()];
        assert!(!zero_locus_check(&degenerate, 1.0, 100, 1).passed);
    }
}
