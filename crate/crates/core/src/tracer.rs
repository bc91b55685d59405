//! Numerical leaf tracing in a ball: real-direction flows of a holomorphic
//! field, boundary transversality, a heuristic leaf classification and a
//! numerical holonomy for cross-checking the symbolic jet.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::{self, Control};
use crate::scalar::C64;
use crate::series::TruncatedSeries;
use crate::vectorfield::{FormalDiffeo, VectorField};

/// Distance to the origin counted as reaching it, relative to `ε`.
pub const ORIGIN_THRESHOLD: f64 = 1e-3;
/// Minimal `|cos|` between the flow and the outward normal at an exit.
pub const BOUNDARY_MARGIN: f64 = 1e-6;
/// `|F(seed)|` below which a seed counts as lying on the zero level of the integrals.
pub const LEVEL_GUARD: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceConfig {
    pub epsilon: f64,
    pub c0: [f64; 2],
    pub step: f64,
    pub tol: f64,
    pub max_time: f64,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self {
            epsilon: 1.0,
            c0: [0.5, 0.0],
            step: 1e-3,
            tol: 1e-11,
            max_time: 40.0,
        }
    }
}

impl TraceConfig {
    pub fn validate(&self) -> Result<()> {
        let c0 = self.c0().norm();
        let bad = |m: &str| Err(Error::TraceConfig(m.into()));
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon must be positive");
        }
        if !(c0 > 0.0 && c0 < self.epsilon) {
            return bad("need 0 < |c0| < epsilon");
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return bad("tol must be positive");
        }
        if !(self.step > 0.0 && self.max_time > 0.0) {
            return bad("step and max_time must be positive");
        }
        Ok(())
    }

    pub fn c0(&self) -> C64 {
        C64::new(self.c0[0], self.c0[1])
    }

    fn ode_options(&self) -> ode::Options {
        ode::Options {
            rtol: self.tol,
            atol: self.tol * 1e-3 * self.epsilon,
            h0: self.step,
            h_max: 0.25,
            max_steps: 2_000_000,
        }
    }
}

fn norm(p: &[C64]) -> f64 {
    p.iter().map(C64::norm_sqr).sum::<f64>().sqrt()
}

fn herm(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

/// Equally spaced real directions `θ = 2πk/count` (8 by default in reports).
pub fn directions(count: usize) -> Vec<f64> {
    (0..count).map(|k| 2.0 * std::f64::consts::PI * k as f64 / count as f64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub point: Vec<[f64; 2]>,
}

impl Sample {
    pub fn coords(&self) -> Vec<C64> {
        self.point.iter().map(|z| C64::new(z[0], z[1])).collect()
    }
}

fn sample(t: f64, p: &[C64]) -> Sample {
    Sample {
        t,
        point: p.iter().map(|z| [z.re, z.im]).collect(),
    }
}

fn point_of(s: &Sample) -> Vec<C64> {
    s.coords()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExitEvent {
    pub t: f64,
    pub point: Vec<[f64; 2]>,
    /// Cosine between the flow and the outward normal (signed).
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Branch {
    /// `+1` forward, `−1` backward.
    pub direction: i8,
    pub samples: Vec<Sample>,
    pub exit: Option<ExitEvent>,
    pub reached_origin: bool,
    pub min_distance: f64,
    pub final_time: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Closed,
    SeparatrixCandidate,
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LeafTrace {
    pub theta: f64,
    pub seed: Vec<[f64; 2]>,
    pub forward: Branch,
    pub backward: Branch,
    pub classification: Classification,
    pub min_distance_to_origin: f64,
    /// `max_j max_samples |F_j(p) − F_j(seed)| / (1 + |F_j(seed)|)`.
    pub integral_drift: Option<f64>,
    pub origin_threshold: f64,
    pub boundary_margin: f64,
    pub label: &'static str,
}

/// Trace the real flow of `e^{iθ}X` from `seed` in both time directions
/// until it leaves the ball, approaches the origin or exhausts `max_time`.
pub fn integrate_leaf(
    x: &VectorField<C64>,
    seed: &[C64],
    theta: f64,
    config: &TraceConfig,
    integrals: &[TruncatedSeries<C64>],
) -> Result<LeafTrace> {
    config.validate()?;
    if seed.len() != x.nvars() {
        return Err(Error::Dimension(format!("seed has {} coordinates", seed.len())));
    }
    let r = norm(seed);
    if r > config.epsilon {
        return Err(Error::SeedOutsideBall {
            norm: r,
            epsilon: config.epsilon,
        });
    }
    if norm(&x.eval(seed)) == 0.0 {
        return Err(Error::TraceConfig("seed is a singular point".into()));
    }
    let rot = C64::from_polar(1.0, theta);
    let forward = branch(x, seed, rot, config, 1.0)?;
    let backward = branch(x, seed, rot, config, -1.0)?;

    let min_distance_to_origin = forward.min_distance.min(backward.min_distance);
    let at_seed: Vec<C64> = integrals.iter().map(|f| f.eval(seed)).collect();
    let integral_drift = (!integrals.is_empty()).then(|| {
        forward
            .samples
            .iter()
            .chain(&backward.samples)
            .map(|s| {
                let p = point_of(s);
                integrals
                    .iter()
                    .zip(&at_seed)
                    .map(|(f, f0)| (f.eval(&p) - f0).norm() / (1.0 + f0.norm()))
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    });
    let on_zero_level = at_seed.iter().all(|v| v.norm() <= LEVEL_GUARD);
    let crosses = |b: &Branch| b.exit.as_ref().is_some_and(|e| e.margin.abs() > BOUNDARY_MARGIN);
    let classification = if (forward.reached_origin || backward.reached_origin) && on_zero_level {
        Classification::SeparatrixCandidate
    } else if crosses(&forward) && crosses(&backward) {
        Classification::Closed
    } else {
        Classification::Undetermined
    };
    Ok(LeafTrace {
        theta,
        seed: seed.iter().map(|z| [z.re, z.im]).collect(),
        forward,
        backward,
        classification,
        min_distance_to_origin,
        integral_drift,
        origin_threshold: ORIGIN_THRESHOLD * config.epsilon,
        boundary_margin: BOUNDARY_MARGIN,
        label: "heuristic",
    })
}

fn branch(x: &VectorField<C64>, seed: &[C64], rot: C64, config: &TraceConfig, dir: f64) -> Result<Branch> {
    let eps = config.epsilon;
    let near = ORIGIN_THRESHOLD * eps;
    let opts = config.ode_options();
    let rhs = |_: f64, y: &[C64], dy: &mut [C64]| {
        for (d, v) in dy.iter_mut().zip(x.eval(y)) {
            *d = rot * v;
        }
    };
    let mut samples = Vec::new();
    let mut min_distance = f64::INFINITY;
    let mut reached_origin = false;
    let mut left = false;
    let out = ode::integrate(rhs, 0.0, seed, dir * config.max_time, &opts, |t, y| {
        let r = norm(y);
        min_distance = min_distance.min(r);
        if r > eps {
            left = true;
            return Control::Stop;
        }
        samples.push(sample(t, y));
        if r < near {
            reached_origin = true;
            return Control::Stop;
        }
        Control::Continue
    })?;
    let mut exit = None;
    let mut final_time = out.t;
    if left {
        let last = samples.last().expect("the seed is inside");
        let (t_in, y_in) = (last.t, point_of(last));
        let (t_cross, y_cross) = refine_exit(&rhs, t_in, &y_in, out.t, eps, &opts)?;
        let v: Vec<C64> = x.eval(&y_cross).into_iter().map(|c| rot * c * dir).collect();
        let margin = herm(&v, &y_cross).re / (norm(&v) * norm(&y_cross)).max(f64::MIN_POSITIVE);
        samples.push(sample(t_cross, &y_cross));
        exit = Some(ExitEvent {
            t: t_cross,
            point: y_cross.iter().map(|z| [z.re, z.im]).collect(),
            margin,
        });
        final_time = t_cross;
    }
    Ok(Branch {
        direction: dir as i8,
        samples,
        exit,
        reached_origin,
        min_distance,
        final_time,
    })
}

/// Bisect the crossing time of `|y| = ε` between an inside and an outside time.
fn refine_exit(
    rhs: &impl Fn(f64, &[C64], &mut [C64]),
    t_in: f64,
    y_in: &[C64],
    t_out: f64,
    eps: f64,
    opts: &ode::Options,
) -> Result<(f64, Vec<C64>)> {
    let (mut lo, mut hi) = (0.0, t_out - t_in);
    let mut best = y_in.to_vec();
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        let out = ode::integrate(rhs, 0.0, y_in, mid, opts, |_, _| Control::Continue)?;
        if norm(&out.y) > eps {
            hi = mid;
        } else {
            lo = mid;
            best = out.y;
        }
        if (hi - lo).abs() < 1e-13 * (1.0 + t_in.abs()) {
            break;
        }
    }
    Ok((t_in + lo, best))
}

/// `m / (4λ_n)` with `m = min_j(−λ_j)`; the weight making
/// `|x⁻| |x_n|^{m/(4λ_n)}` decrease along the real flow.
pub fn functional_exponent(lambda: &[f64]) -> Option<f64> {
    let (last, rest) = lambda.split_last()?;
    if rest.is_empty() || *last <= 0.0 || rest.iter().any(|l| *l >= 0.0) {
        return None;
    }
    let m = rest.iter().map(|l| -l).fold(f64::INFINITY, f64::min);
    Some(m / (4.0 * last))
}

/// `|x⁻| |x_n|^e`.
pub fn functional_value(p: &[C64], exponent: f64) -> f64 {
    let (last, rest) = p.split_last().expect("n ≥ 1");
    norm(rest) * last.norm().powf(exponent)
}

/// Real eigenvalues read off a diagonal linear part.
fn real_spectrum(x: &VectorField<C64>) -> Option<Vec<f64>> {
    let l = x.linear_part();
    if !l.is_diagonal() {
        return None;
    }
    let d = l.diag();
    d.iter().all(|z| z.im == 0.0).then(|| d.iter().map(|z| z.re).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SphereMargin {
    /// `Re⟨X(P), P⟩ = ½ d/dt |P|²` along `Re X`.
    pub radial: f64,
    /// `Re(X)(ln|x⁻|² + e ln|x_n|²)` with `e = m/(4λ_n)`, when defined.
    pub functional: Option<f64>,
    pub transverse: bool,
}

pub fn sphere_transversality(x: &VectorField<C64>, p: &[C64], epsilon: f64) -> Result<SphereMargin> {
    let r = norm(p);
    if (r - epsilon).abs() > 1e-9 * epsilon.max(1.0) {
        return Err(Error::NotOnSphere { norm: r, epsilon });
    }
    let v = x.eval(p);
    let radial = herm(&v, p).re;
    let functional = real_spectrum(x).and_then(|l| functional_exponent(&l)).and_then(|e| {
        let n = p.len();
        let (rest, last) = (&p[..n - 1], p[n - 1]);
        let rr = rest.iter().map(C64::norm_sqr).sum::<f64>();
        if rr == 0.0 || last.norm() == 0.0 {
            return None;
        }
        let d_rest = 2.0 * herm(&v[..n - 1], rest).re / rr;
        let d_last = 2.0 * (v[n - 1] * last.conj()).re / last.norm_sqr();
        Some(d_rest + e * d_last)
    });
    Ok(SphereMargin {
        radial,
        functional,
        transverse: radial != 0.0,
    })
}

/// Largest per-step increase of the boundary functional along a trace
/// (forward time), relative to the larger of the two values. `None` when
/// `Re(e^{iθ}) ≤ 0`, where forward time is not a forward `Re(X)` time.
pub fn functional_increase(trace: &LeafTrace, exponent: f64) -> Option<f64> {
    if trace.theta.cos() <= 1e-12 {
        return None;
    }
    let forward = trace.forward.samples.windows(2);
    let backward = trace.backward.samples.windows(2).map(|w| [w[1].clone(), w[0].clone()]);
    let step = |a: &Sample, b: &Sample| {
        let (fa, fb) = (functional_value(&point_of(a), exponent), functional_value(&point_of(b), exponent));
        (fb - fa) / fa.max(fb).max(f64::MIN_POSITIVE)
    };
    forward
        .map(|w| step(&w[0], &w[1]))
        .chain(backward.map(|w| step(&w[0], &w[1])))
        .fold(f64::NEG_INFINITY, f64::max)
        .into()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HolonomySample {
    pub seed: Vec<[f64; 2]>,
    pub endpoint: Vec<[f64; 2]>,
    pub symbolic: Option<Vec<[f64; 2]>>,
    pub deviation: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NumericHolonomy {
    pub c0: [f64; 2],
    pub samples: Vec<HolonomySample>,
    /// Seeds whose leaf left the ball during the loop.
    pub skipped: Vec<usize>,
    pub max_deviation: Option<f64>,
}

/// Transverse seeds of norm at most `radius`, from a seeded generator.
pub fn holonomy_seeds(m: usize, count: usize, radius: f64, seed: u64) -> Vec<Vec<C64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let v: Vec<C64> = (0..m)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let r = norm(&v);
        if r > 0.0 && r <= 1.0 {
            out.push(v.iter().map(|z| z * radius).collect());
        }
    }
    out
}

/// Integrate `(2πi/λ_n) X` over `t ∈ [0, 1]` from `(u, c₀)` for each seed
/// `u`; `x_n` returns to `c₀` and the endpoint is the holonomy image.
pub fn numeric_holonomy(
    x: &VectorField<C64>,
    config: &TraceConfig,
    seeds: &[Vec<C64>],
    symbolic: Option<&FormalDiffeo<C64>>,
) -> Result<NumericHolonomy> {
    config.validate()?;
    let spec = crate::holonomy::transversal_spectrum(x)?;
    let n = x.nvars();
    let lambda_n = spec.get(n - 1) as f64;
    let c0 = config.c0();
    let factor = C64::new(0.0, 2.0 * std::f64::consts::PI / lambda_n);
    let rhs = |_: f64, y: &[C64], dy: &mut [C64]| {
        for (d, v) in dy.iter_mut().zip(x.eval(y)) {
            *d = factor * v;
        }
    };
    let opts = ode::Options {
        rtol: 1e-12,
        atol: 1e-15,
        h0: 1e-3,
        h_max: 0.05,
        max_steps: 1_000_000,
    };
    let mut samples = Vec::new();
    let mut skipped = Vec::new();
    for (i, u) in seeds.iter().enumerate() {
        if u.len() + 1 != n {
            return Err(Error::Dimension(format!("seed {i} has {} coordinates", u.len())));
        }
        let mut y0 = u.clone();
        y0.push(c0);
        let mut escaped = false;
        let out = ode::integrate(rhs, 0.0, &y0, 1.0, &opts, |_, y| {
            if norm(y) > config.epsilon {
                escaped = true;
                Control::Stop
            } else {
                Control::Continue
            }
        })?;
        if escaped {
            skipped.push(i);
            continue;
        }
        let endpoint: Vec<C64> = out.y[..n - 1].to_vec();
        let sym = symbolic.map(|theta| theta.eval(u));
        let deviation = sym.as_ref().map(|s| norm(&s.iter().zip(&endpoint).map(|(a, b)| a - b).collect::<Vec<_>>()));
        let pack = |v: &[C64]| v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>();
        samples.push(HolonomySample {
            seed: pack(u),
            endpoint: pack(&endpoint),
            symbolic: sym.as_deref().map(pack),
            deviation,
        });
    }
    let max_deviation = samples
        .iter()
        .filter_map(|s| s.deviation)
        .reduce(f64::max);
    Ok(NumericHolonomy {
        c0: [c0.re, c0.im],
        samples,
        skipped,
        max_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multidegree::Multidegree;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn diag(l: &[f64]) -> VectorField<C64> {
        VectorField::diagonal(&l.iter().map(|v| c(*v)).collect::<Vec<_>>(), 4)
    }

    fn xz_yz() -> Vec<TruncatedSeries<C64>> {
        vec![
            TruncatedSeries::monomial(3, 4, Multidegree::new(&[1, 0, 1]), c(1.0)),
            TruncatedSeries::monomial(3, 4, Multidegree::new(&[0, 1, 1]), c(1.0)),
        ]
    }

    #[test]
    fn config_validation() {
        assert!(TraceConfig::default().validate().is_ok());
        let bad = TraceConfig { c0: [2.0, 0.0], ..TraceConfig::default() };
        assert!(matches!(bad.validate(), Err(Error::TraceConfig(_))));
        let x = diag(&[1.0, 1.0, -1.0]);
        let far = [c(1.0), c(1.0), c(0.0)];
        assert!(matches!(
            integrate_leaf(&x, &far, 0.0, &TraceConfig::default(), &[]),
            Err(Error::SeedOutsideBall { .. })
        ));
    }

    #[test]
    fn separatrices_of_the_saddle() {
        let x = diag(&[1.0, 1.0, -1.0]);
        let cfg = TraceConfig::default();
        let axis = integrate_leaf(&x, &[c(0.0), c(0.0), c(0.5)], 0.0, &cfg, &xz_yz()).unwrap();
        assert_eq!(axis.classification, Classification::SeparatrixCandidate);
        assert!(axis.forward.reached_origin && axis.backward.exit.is_some());
        let plane = integrate_leaf(&x, &[c(0.3), C64::new(0.1, 0.2), c(0.0)], 0.0, &cfg, &xz_yz()).unwrap();
        assert_eq!(plane.classification, Classification::SeparatrixCandidate);
        assert!(plane.samples_stay_in_plane());

        let generic = integrate_leaf(&x, &[c(0.4), c(0.1), c(0.5)], 0.0, &cfg, &xz_yz()).unwrap();
        assert_eq!(generic.classification, Classification::Closed);
        assert!(generic.integral_drift.unwrap() < 1e-8, "{:?}", generic.integral_drift);
        for b in [&generic.forward, &generic.backward] {
            for s in &b.samples {
                assert!(norm(&point_of(s)) <= cfg.epsilon * (1.0 + 1e-9));
            }
        }
    }

    impl LeafTrace {
        fn samples_stay_in_plane(&self) -> bool {
            self.forward.samples.iter().chain(&self.backward.samples).all(|s| s.point[2] == [0.0, 0.0])
        }
    }

    #[test]
    fn radial_margins() {
        let x = diag(&[-1.0, -1.0, 1.0]);
        let e = 0.8;
        let top = sphere_transversality(&x, &[c(0.0), c(0.0), c(e)], e).unwrap();
        assert!((top.radial - e * e).abs() < 1e-15);
        let side = sphere_transversality(&x, &[c(e), c(0.0), c(0.0)], e).unwrap();
        assert!((side.radial + e * e).abs() < 1e-15);
        let h = e / 2f64.sqrt();
        let tangent = sphere_transversality(&x, &[c(h), c(0.0), c(h)], e).unwrap();
        assert!(tangent.radial.abs() < 1e-15);
        assert!(tangent.functional.unwrap() < 0.0);
        assert!(matches!(
            sphere_transversality(&x, &[c(0.1), c(0.0), c(0.0)], e),
            Err(Error::NotOnSphere { .. })
        ));
    }

    #[test]
    fn functional_decreases() {
        let x = diag(&[-1.0, -2.0, 3.0]);
        let e = functional_exponent(&[-1.0, -2.0, 3.0]).unwrap();
        assert!((e - 1.0 / 12.0).abs() < 1e-15);
        let t = integrate_leaf(&x, &[c(0.3), C64::new(0.0, 0.2), c(0.2)], 0.7, &TraceConfig::default(), &[]).unwrap();
        assert!(functional_increase(&t, e).unwrap() <= 1e-9);
        let back = integrate_leaf(&x, &[c(0.3), c(0.1), c(0.2)], 2.0, &TraceConfig::default(), &[]).unwrap();
        assert!(functional_increase(&back, e).is_none());
    }

    #[test]
    fn diagonal_numeric_holonomy() {
        let x = diag(&[-1.0, -2.0, 3.0]);
        let cfg = TraceConfig::default();
        let seeds = holonomy_seeds(2, 8, 0.1, 3);
        let h = numeric_holonomy(&x, &cfg, &seeds, None).unwrap();
        let w = crate::scalar::root_of_unity(-1, 3);
        for (s, u) in h.samples.iter().zip(&seeds) {
            let got = C64::new(s.endpoint[0][0], s.endpoint[0][1]);
            assert!((got - w * u[0]).norm() < 1e-8);
            let got = C64::new(s.endpoint[1][0], s.endpoint[1][1]);
            assert!((got - w * w * u[1]).norm() < 1e-8);
        }
    }
}
