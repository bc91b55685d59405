//! The analysis pipeline: normalization, then resonance, normal form,
//! holonomy, first integrals and leaf traces, each reported with witnesses.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{anyhow, bail};
use foliation_core::form::wedge;
use foliation_core::series::scalar_to_json;
use foliation_core::holonomy::{
    auto_forms, closed_form_order, conjugacy_defect, cyclic_group, invariant_polynomials_average,
    invariant_polynomials_product, linearize_finite, order_of, transversal_spectrum, zero_locus_check, Holonomy,
};
use foliation_core::integrals::{
    annihilates, first_integral_kernel, independence_test, product_integrals, reconstruct_coordinates, Provenance,
};
use foliation_core::normalform::{exact_eigenvalues, field_type, poincare_dulac, reduce_type, TypeRS};
use foliation_core::resonance::{classify_spectrum, resonance_lattice, resonant_monomials, rj_sj, Spectrum};
use foliation_core::tracer::{
    directions, functional_exponent, functional_increase, holonomy_seeds, integrate_leaf, numeric_holonomy,
    Classification, LeafTrace, TraceConfig,
};
use foliation_core::{
    Coeff, Error, FormalDiffeo, GaussianRational, Mode, Multidegree, TruncatedSeries, VectorField, C64,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::input::FieldSpec;

pub const SCHEMA_VERSION: u32 = 1;
/// Float comparisons of jets and integrals.
const JET_TOL: f64 = 1e-10;
/// Relative drift of first integrals along traces.
const DRIFT_TOL: f64 = 1e-7;
/// Numeric vs symbolic holonomy.
const HOLONOMY_TOL: f64 = 1e-6;
const KERNEL_DEGREE: u32 = 4;
const TRACE_DIRECTIONS: usize = 8;
const HOLONOMY_SEEDS: usize = 32;
const HOLONOMY_SEED_RADIUS: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Resonance,
    Normalform,
    Holonomy,
    Integrals,
    Trace,
}

impl FromStr for Task {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        Ok(match s.trim() {
            "resonance" => Task::Resonance,
            "normalform" => Task::Normalform,
            "holonomy" => Task::Holonomy,
            "integrals" => Task::Integrals,
            "trace" => Task::Trace,
            other => bail!("unknown task {other:?}"),
        })
    }
}

pub const ALL_TASKS: [Task; 5] = [Task::Resonance, Task::Normalform, Task::Holonomy, Task::Integrals, Task::Trace];

/// `"a,b,c"` or `"all"`.
pub fn parse_tasks(s: &str) -> anyhow::Result<BTreeSet<Task>> {
    if s.trim() == "all" {
        return Ok(ALL_TASKS.into_iter().collect());
    }
    s.split(',').filter(|t| !t.trim().is_empty()).map(Task::from_str).collect()
}

#[derive(Clone, Debug)]
pub struct AnalysisRequest {
    pub inputs: Vec<PathBuf>,
    pub cap: u32,
    pub mode: Mode,
    pub tasks: BTreeSet<Task>,
    pub seed: u64,
    pub trace: TraceConfig,
}

#[derive(Debug)]
pub enum RunError {
    Validation(anyhow::Error),
    Internal(anyhow::Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Validation(e) => write!(f, "invalid request: {e:#}"),
            RunError::Internal(e) => write!(f, "internal error: {e:#}"),
        }
    }
}

impl AnalysisRequest {
    pub fn validate(&self) -> anyhow::Result<()> {
        if !(2..=16).contains(&self.cap) {
            bail!("cap {} outside [2, 16]", self.cap);
        }
        if self.tasks.is_empty() {
            bail!("no tasks requested");
        }
        if self.inputs.is_empty() {
            bail!("no input fields");
        }
        if self.mode == Mode::Exact && self.tasks.contains(&Task::Trace) {
            bail!("the trace task needs --mode float");
        }
        self.trace.validate()?;
        Ok(())
    }
}

/// One trace CSV, named deterministically.
#[derive(Clone, Debug)]
pub struct TraceFile {
    pub name: String,
    pub contents: Vec<u8>,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: Value,
    pub traces: Vec<TraceFile>,
    pub obstructed: bool,
    /// Wall-clock seconds per field; kept out of the report.
    pub timing: Vec<(String, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    CiCertifiedAtCap,
    TciConsistentEvidence,
    Obstructed,
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub task: Task,
    pub witness: Value,
}

fn done(body: Value) -> Value {
    json!({"status": "done", "result": body})
}

fn skipped(reason: impl Into<String>) -> Value {
    json!({"status": "skipped", "reason": reason.into()})
}

fn obstructed(reason: impl Into<String>, witness: Value) -> Value {
    json!({"status": "obstructed", "reason": reason.into(), "witness": witness})
}

fn coeff_json<K: Coeff>(c: &K) -> Value {
    let (re, im) = scalar_to_json(&c.to_scalar());
    json!({"re": re, "im": im})
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

fn is_obstruction(e: &Error) -> bool {
    matches!(
        e,
        Error::ResonanceObstruction { .. } | Error::OrderNotCertified(_) | Error::Reconstruction { .. }
    )
}

fn error_witness(e: &Error) -> Value {
    match e {
        Error::ResonanceObstruction { witnesses } => json!({"resonant_terms": to_json(witnesses)}),
        Error::OrderNotCertified(m) => json!({"order": m}),
        Error::Reconstruction { index, reason } => json!({"index": index, "reason": reason}),
        other => json!({"error": other.to_string()}),
    }
}

/// Resolve a file or a directory of `.json`/`.toml` files, sorted by name.
pub fn resolve_inputs(path: &std::path::Path) -> anyhow::Result<Vec<PathBuf>> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("json" | "toml")))
            .collect();
        files.sort();
        if files.is_empty() {
            bail!("{} contains no field files", path.display());
        }
        Ok(files)
    } else if path.exists() {
        Ok(vec![path.to_path_buf()])
    } else {
        bail!("{} does not exist", path.display())
    }
}

pub fn run(request: &AnalysisRequest) -> Result<RunOutput, RunError> {
    request.validate().map_err(RunError::Validation)?;
    let specs = request
        .inputs
        .iter()
        .map(|p| FieldSpec::from_path(p))
        .collect::<anyhow::Result<Vec<_>>>()
        .map_err(RunError::Validation)?;
    let mut fields = Vec::new();
    let mut traces = Vec::new();
    let mut timing = Vec::new();
    let mut obstructed_any = false;
    for (path, spec) in request.inputs.iter().zip(&specs) {
        let start = std::time::Instant::now();
        let out = match request.mode {
            Mode::Exact => analyze::<GaussianRational>(spec, request),
            Mode::Float => analyze::<C64>(spec, request),
        }
        .map_err(|e| match e.downcast_ref::<Error>() {
            Some(Error::RegularPoint(_) | Error::Parse(_) | Error::Dimension(_)) => RunError::Validation(e),
            _ => RunError::Internal(e),
        })?;
        timing.push((spec.name.clone(), start.elapsed().as_secs_f64()));
        obstructed_any |= out.verdicts.iter().any(|v| v.kind == VerdictKind::Obstructed);
        let mut block = out.block;
        let source = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
        block["source"] = json!(source);
        block["verdicts"] = to_json(&out.verdicts);
        fields.push(block);
        traces.extend(out.traces);
    }
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "request": {
            "cap": request.cap,
            "mode": request.mode,
            "tasks": request.tasks,
            "seed": request.seed,
            "trace": request.trace,
        },
        "fields": fields,
    });
    Ok(RunOutput {
        report,
        traces,
        obstructed: obstructed_any,
        timing,
    })
}

struct FieldOutput {
    block: Value,
    verdicts: Vec<Verdict>,
    traces: Vec<TraceFile>,
}

/// The field in coordinates where the lone-sign eigenvalue is last and
/// positive and the eigenvalues are coprime integers.
pub struct Normalized<K: Coeff> {
    pub field: VectorField<K>,
    pub spec: Spectrum,
    /// One eigenvalue of the opposite sign to the others.
    pub profile: bool,
}

fn permute_series<K: Coeff>(f: &TruncatedSeries<K>, perm: &[usize]) -> TruncatedSeries<K> {
    let mut out = TruncatedSeries::zero(f.nvars(), f.cap());
    for (k, c) in f.terms() {
        let exps: Vec<u32> = perm.iter().map(|&p| k.get(p)).collect();
        out.add_term(Multidegree::new(&exps), c.clone());
    }
    out
}

fn spectrum_of<K: Coeff>(d: &[K]) -> foliation_core::Result<Spectrum> {
    match K::MODE {
        Mode::Exact => Spectrum::from_exact(
            &d.iter()
                .map(|c| GaussianRational::from_scalar(&c.to_scalar()))
                .collect::<foliation_core::Result<Vec<_>>>()?,
        ),
        Mode::Float => Spectrum::from_floats(&d.iter().map(Coeff::to_c64).collect::<Vec<_>>()),
    }
}

/// Diagonal fields only; `None` when the linear part is not diagonal or has no
/// integer spectrum. The report value records what was applied.
pub fn normalize<K: Coeff>(x: &VectorField<K>) -> anyhow::Result<(Option<Normalized<K>>, Value)> {
    let lin = x.linear_part();
    if !lin.is_diagonal() {
        return Ok((None, json!({"applied": false, "reason": "linear part is not diagonal"})));
    }
    let d = lin.diag();
    let spec = match spectrum_of(&d) {
        Ok(s) => s,
        Err(e) => return Ok((None, json!({"applied": false, "reason": e.to_string()}))),
    };
    let n = x.nvars();
    let lambda = spec.values();
    let pos: Vec<usize> = (0..n).filter(|&j| lambda[j] > 0).collect();
    let neg: Vec<usize> = (0..n).filter(|&j| lambda[j] < 0).collect();
    let (flip, lone) = if pos.len() == 1 && neg.len() == n - 1 {
        (false, pos[0])
    } else if neg.len() == 1 && pos.len() == n - 1 {
        (true, neg[0])
    } else {
        let raw: Vec<i64> = lambda.to_vec();
        return Ok((
            Some(Normalized {
                field: x.clone(),
                spec,
                profile: false,
            }),
            json!({"applied": false, "reason": "spectrum is not of the separatrix sign profile", "lambda": raw}),
        ));
    };
    let perm: Vec<usize> = (0..n).filter(|&j| j != lone).chain([lone]).collect();
    let j0 = (0..n).find(|&j| lambda[j] != 0).expect("profile has nonzero eigenvalues");
    let mut factor = d[j0].div_ref(&K::from_i64(lambda[j0]));
    if flip {
        factor = K::zero().sub_ref(&factor);
    }
    let inv = K::one().div_ref(&factor);
    let comps: Vec<TruncatedSeries<K>> = perm
        .iter()
        .map(|&p| permute_series(x.component(p), &perm).scale(&inv))
        .collect();
    let field = VectorField::new(comps)?;
    let spec = spectrum_of(&field.linear_part().diag())?;
    let report = json!({
        "applied": true,
        "sign_flip": flip,
        "permutation": perm,
        "divided_by": coeff_json(&factor),
        "lambda": spec.values(),
    });
    Ok((
        Some(Normalized {
            field,
            spec,
            profile: true,
        }),
        report,
    ))
}

fn analyze<K: Coeff>(spec: &FieldSpec, req: &AnalysisRequest) -> anyhow::Result<FieldOutput> {
    let cap = req.cap;
    let n = spec.nvars()?;
    let field = spec.field::<K>(cap)?;
    let supplied = spec.integrals::<K>(cap)?;
    let mut block = json!({
        "name": spec.name,
        "description": spec.description,
        "nvars": n,
        "cap": cap,
    });
    let mut verdicts = Vec::new();
    let mut traces = Vec::new();

    let Some(x) = field else {
        for t in &req.tasks {
            if *t != Task::Integrals {
                block[task_key(*t)] = skipped("no vector field given");
            }
        }
        if req.tasks.contains(&Task::Integrals) {
            block["integrals"] = integrals_only(&supplied, &mut verdicts)?;
        }
        return Ok(FieldOutput { block, verdicts, traces });
    };

    let (norm, norm_report) = normalize(&x)?;
    block["normalization"] = norm_report;
    let profiled = norm.as_ref().filter(|m| m.profile);
    let work = profiled.map_or(&x, |m| &m.field);

    if req.tasks.contains(&Task::Resonance) {
        block["resonance"] = resonance_task(&x, norm.as_ref(), cap)?;
    }
    if req.tasks.contains(&Task::Normalform) {
        block["normalform"] = normalform_task(work, profiled, cap, &mut verdicts)?;
    }
    let mut holonomy = None;
    if req.tasks.contains(&Task::Holonomy) {
        let (value, h) = holonomy_task(work, profiled, req, &mut verdicts)?;
        block["holonomy"] = value;
        holonomy = h;
    }
    let mut integrals: Vec<TruncatedSeries<K>> = Vec::new();
    if req.tasks.contains(&Task::Integrals) {
        let (value, fs) = integrals_task(work, profiled, &supplied, cap, &mut verdicts)?;
        block["integrals"] = value;
        integrals = fs;
    }
    if req.tasks.contains(&Task::Trace) {
        let (value, files) = trace_task(work, profiled, &integrals, holonomy.as_ref(), spec, req)?;
        block["trace"] = value;
        traces = files;
    }
    tci_verdict(&block, &mut verdicts);
    Ok(FieldOutput { block, verdicts, traces })
}

fn task_key(t: Task) -> &'static str {
    match t {
        Task::Resonance => "resonance",
        Task::Normalform => "normalform",
        Task::Holonomy => "holonomy",
        Task::Integrals => "integrals",
        Task::Trace => "trace",
    }
}

fn resonance_task<K: Coeff>(x: &VectorField<K>, norm: Option<&Normalized<K>>, cap: u32) -> anyhow::Result<Value> {
    let spec = match norm {
        Some(m) => m.spec.clone(),
        None if K::MODE == Mode::Exact => {
            let l = x.linear_part().map(|c| GaussianRational::from_scalar(&c.to_scalar()).expect("exact mode"));
            match exact_eigenvalues(&l).and_then(|e| Spectrum::from_exact(&e)) {
                Ok(s) => s,
                Err(e) => return Ok(skipped(e.to_string())),
            }
        }
        None => return Ok(skipped("linear part is not diagonal")),
    };
    let class = classify_spectrum(&spec);
    let lattice = resonance_lattice(&spec, cap)?;
    let n = spec.n();
    let monomials: Vec<Value> = (0..n)
        .map(|j| {
            let ms = resonant_monomials(&spec, j, cap)?;
            Ok(json!(ms.iter().filter(|k| k.total() >= 2).map(Multidegree::to_vec).collect::<Vec<_>>()))
        })
        .collect::<foliation_core::Result<_>>()?;
    let rs: Option<Vec<Value>> = norm.filter(|m| m.profile).map(|m| {
        (0..n - 1)
            .map(|j| {
                let (r, s) = rj_sj(&m.spec, j).expect("profile");
                json!({"r": r, "s": s})
            })
            .collect()
    });
    Ok(done(json!({
        "spectrum": spec.values(),
        "class": to_json(&class),
        "lattice": to_json(&lattice),
        "resonant_monomials_by_component": monomials,
        "rj_sj": rs,
    })))
}

fn normalform_task<K: Coeff>(
    x: &VectorField<K>,
    norm: Option<&Normalized<K>>,
    cap: u32,
    verdicts: &mut Vec<Verdict>,
) -> anyhow::Result<Value> {
    if let Some(m) = norm {
        if let Ok(current) = field_type(x, &m.spec) {
            let target = TypeRS::new(cap / 2, cap / 2);
            if current.r < 1 || current.s < 2 {
                return Ok(skipped(format!("type {current} is below (1,2)")));
            }
            return Ok(match reduce_type(x, &m.spec, target) {
                Ok(cert) => done(json!({
                    "method": "reduce_type",
                    "input_type": current.to_string(),
                    "target_type": target.to_string(),
                    "residual_vanishes": cert.residual_vanishes(),
                    "certificate": to_json(&cert),
                })),
                Err(e) if is_obstruction(&e) => {
                    let w = error_witness(&e);
                    verdicts.push(Verdict {
                        kind: VerdictKind::Obstructed,
                        task: Task::Normalform,
                        witness: w.clone(),
                    });
                    obstructed(e.to_string(), w)
                }
                Err(e) => skipped(e.to_string()),
            });
        }
    }
    if K::MODE != Mode::Exact {
        return Ok(skipped("Poincaré–Dulac reduction of general fields runs in exact mode"));
    }
    let comps = x
        .components()
        .iter()
        .map(|c| c.map_coeffs(|v| GaussianRational::from_scalar(&v.to_scalar()).expect("exact mode")))
        .collect();
    let exact = VectorField::new(comps)?;
    Ok(match poincare_dulac(&exact) {
        Ok(pd) => done(json!({
            "method": "poincare_dulac",
            "residual_vanishes": pd.certificate.residual_vanishes(),
            "result": to_json(&pd),
        })),
        Err(e) if is_obstruction(&e) => obstructed(e.to_string(), error_witness(&e)),
        Err(e) => skipped(e.to_string()),
    })
}

fn lowest_nonlinear_degree(comps: &[TruncatedSeries<C64>], linear: &[C64], tol: f64) -> Option<u32> {
    comps
        .iter()
        .enumerate()
        .filter_map(|(j, c)| {
            let n = c.nvars();
            let mut d = c.clone();
            d.add_term(Multidegree::unit(n, j), C64::new(0.0, 0.0) - linear[j]);
            (1..=c.cap()).find(|&deg| d.homogeneous(deg).max_abs_coeff() > tol)
        })
        .min()
}

fn holonomy_task<K: Coeff>(
    x: &VectorField<K>,
    norm: Option<&Normalized<K>>,
    req: &AnalysisRequest,
    verdicts: &mut Vec<Verdict>,
) -> anyhow::Result<(Value, Option<Holonomy>)> {
    let Some(m) = norm else {
        return Ok((skipped("spectrum is not of the separatrix profile"), None));
    };
    if let Err(e) = transversal_spectrum(x) {
        return Ok((skipped(e.to_string()), None));
    }
    let c0 = req.trace.c0();
    let h = foliation_core::holonomy_map(x, c0)?;
    let spec = &m.spec;
    let n = spec.n();
    let lambda_n = spec.get(n - 1) as u32;
    let closed = closed_form_order(spec);
    let max_order = (2 * closed).max(24);
    let ord = order_of(&h.theta, max_order, Some(lambda_n))?;
    let phases: Vec<C64> = h.phases.iter().map(|p| p.value()).collect();
    let field_k = field_type(x, spec).ok().map(|t| t.r.min(t.s));
    let nonlinear = lowest_nonlinear_degree(h.theta.components(), &phases, JET_TOL);
    let mut body = json!({
        "c0": [c0.re, c0.im],
        "phases": to_json(&h.phases),
        "linear_deviation": h.linear_deviation,
        "ode_steps": h.ode_steps,
        "theta": to_json(&h.theta),
        "order": to_json(&ord),
        "closed_form_order": closed,
        "orders_agree": ord.order == Some(closed),
        "structure": {
            "field_type_k": field_k,
            "lowest_nonlinear_degree": nonlinear,
            "holds": match (field_k, nonlinear) {
                (Some(k), Some(d)) => d >= k.min(x.cap()),
                (_, None) => true,
                (None, Some(_)) => false,
            },
        },
    });
    let Some(order) = ord.order else {
        let w = json!({"max_order": max_order, "deviation": ord.deviation});
        verdicts.push(Verdict {
            kind: VerdictKind::Obstructed,
            task: Task::Holonomy,
            witness: w.clone(),
        });
        return Ok((obstructed("holonomy order not certified", w), Some(h)));
    };
    let g = linearize_finite(&h.theta, order)?;
    let defect = conjugacy_defect(&g, &h.theta)?;
    let g_minus_id = lowest_nonlinear_degree(g.components(), &vec![C64::new(1.0, 0.0); n - 1], JET_TOL);
    let seeds = invariant_polynomials_average(&g, spec, &c0)?;
    let seed_defect = seeds
        .iter()
        .map(|s| Ok(h.theta.pull_back(s)?.max_abs_diff(s)))
        .collect::<foliation_core::Result<Vec<f64>>>()?;
    let group = cyclic_group(&h.theta, order)?;
    let forms = auto_forms(&group, req.seed)?;
    let products = invariant_polynomials_product(&group, &forms)?;
    let product_defect = products
        .iter()
        .map(|f| {
            group
                .iter()
                .map(|e| Ok(e.pull_back(f)?.max_abs_diff(f)))
                .collect::<foliation_core::Result<Vec<f64>>>()
                .map(|v| v.into_iter().fold(0.0, f64::max))
        })
        .collect::<foliation_core::Result<Vec<f64>>>()?;
    let linear_group = group
        .iter()
        .map(|e| FormalDiffeo::from_linear(e.linear_part(), x.cap()))
        .collect::<foliation_core::Result<Vec<_>>>()?;
    let linear_products = invariant_polynomials_product(&linear_group, &forms)?;
    let zero_locus = zero_locus_check(&linear_products, 1.0, 10_000, req.seed);
    body["linearization"] = json!({
        "g": to_json(&g),
        "conjugacy_defect": defect,
        "g_minus_identity_lowest_degree": g_minus_id,
        "average_invariants": to_json(&seeds),
        "average_invariance_defect": seed_defect,
        "product_forms": forms.iter().map(|f| f.iter().map(coeff_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "product_invariants": to_json(&products),
        "product_invariance_defect": product_defect,
        "linear_model_zero_locus": to_json(&zero_locus),
    });
    Ok((done(body), Some(h)))
}

fn integrals_only<K: Coeff>(supplied: &[TruncatedSeries<K>], verdicts: &mut Vec<Verdict>) -> anyhow::Result<Value> {
    if supplied.is_empty() {
        return Ok(skipped("neither a field nor integrals given"));
    }
    let ind = independence_test(supplied)?;
    let lines = singular_lines(supplied)?;
    if ind.independent {
        verdicts.push(Verdict {
            kind: VerdictKind::CiCertifiedAtCap,
            task: Task::Integrals,
            witness: json!({"codimension": supplied.len(), "independence": to_json(&ind)}),
        });
    }
    Ok(done(json!({
        "provenance": vec![Provenance::Supplied; supplied.len()],
        "integrals": to_json(&supplied),
        "independence": to_json(&ind),
        "singular_lines": lines,
    })))
}

/// Lines spanned by nonzero `{−1,0,1}` directions (up to sign) on which every
/// coefficient of `dF₁∧…∧dF_q` vanishes.
fn singular_lines<K: Coeff>(fs: &[TruncatedSeries<K>]) -> anyhow::Result<Value> {
    let n = fs[0].nvars();
    if fs.len() < 2 || n > 6 {
        return Ok(Value::Null);
    }
    let w = wedge(fs)?;
    let scale = w.coeffs().map(|(_, c)| c.max_abs_coeff()).fold(1.0, f64::max);
    let mut lines = Vec::new();
    let total = 3usize.pow(n as u32);
    for code in 1..total {
        let mut v = Vec::with_capacity(n);
        let mut r = code;
        for _ in 0..n {
            v.push((r % 3) as i64 - 1);
            r /= 3;
        }
        // One representative per ±v: first nonzero entry positive.
        if v.iter().find(|&&e| e != 0).is_none_or(|&e| e < 0) {
            continue;
        }
        let p: Vec<K> = v.iter().map(|&e| K::from_i64(e)).collect();
        if w.coeffs().all(|(_, c)| c.eval(&p).is_negligible(scale)) {
            lines.push(v);
        }
    }
    Ok(json!({"count": lines.len(), "directions": lines, "candidates": "nonzero {-1,0,1} directions up to sign"}))
}

fn integrals_task<K: Coeff>(
    x: &VectorField<K>,
    norm: Option<&Normalized<K>>,
    supplied: &[TruncatedSeries<K>],
    cap: u32,
    verdicts: &mut Vec<Verdict>,
) -> anyhow::Result<(Value, Vec<TruncatedSeries<K>>)> {
    let n = x.nvars();
    let degree = KERNEL_DEGREE.min(cap);
    let kernel = first_integral_kernel(x, degree)?;
    let mut selected: Vec<usize> = Vec::new();
    for (i, f) in kernel.iter().enumerate() {
        if selected.len() + 1 >= n {
            break;
        }
        let mut trial: Vec<TruncatedSeries<K>> = selected.iter().map(|&s| kernel[s].clone()).collect();
        trial.push(f.clone());
        if independence_test(&trial)?.independent {
            selected.push(i);
        }
    }
    let mut body = json!({
        "kernel": {
            "degree": degree,
            "dimension": kernel.len(),
            "basis": to_json(&kernel),
            "independent_selection": selected,
        },
    });

    let mut product = None;
    if let Some(m) = norm {
        match product_integrals(x, &m.spec) {
            Ok(p) => product = Some(p),
            Err(e) if is_obstruction(&e) => {
                let w = error_witness(&e);
                verdicts.push(Verdict {
                    kind: VerdictKind::Obstructed,
                    task: Task::Integrals,
                    witness: w.clone(),
                });
                body["eigenfunctions"] = obstructed(e.to_string(), w);
            }
            Err(e) => body["eigenfunctions"] = skipped(e.to_string()),
        }
    }
    let (integrals, provenance) = if !supplied.is_empty() {
        (supplied.to_vec(), vec![Provenance::Supplied; supplied.len()])
    } else if let Some((fs, _)) = &product {
        let tags = fs
            .iter()
            .map(|f| if f.len() == 1 { Provenance::Monomial } else { Provenance::HolonomyInvariant })
            .collect();
        (fs.clone(), tags)
    } else {
        (
            selected.iter().map(|&i| kernel[i].clone()).collect(),
            vec![Provenance::KernelSolve; selected.len()],
        )
    };
    if integrals.is_empty() {
        body["set"] = skipped("no first integrals found");
        return Ok((done(body), integrals));
    }
    let annihilated = integrals.iter().map(|f| annihilates(x, f)).collect::<foliation_core::Result<Vec<bool>>>()?;
    let defects: Vec<f64> = integrals
        .iter()
        .map(|f| Ok(x.apply(f)?.max_abs_coeff()))
        .collect::<foliation_core::Result<_>>()?;
    let independence = independence_test(&integrals)?;
    body["set"] = json!({
        "provenance": provenance,
        "integrals": to_json(&integrals),
        "annihilated": annihilated,
        "annihilation_defects": defects,
        "independence": to_json(&independence),
    });
    if let Some((_, eig)) = &product {
        body["eigenfunctions"] = done(json!({"functions": to_json(eig)}));
        if eig[n - 1] == TruncatedSeries::var(n, cap, n - 1) {
            body["reconstruction"] = match reconstruct_coordinates(x, &integrals) {
                Ok(rec) => done(json!({
                    "coordinates": to_json(&rec.coordinates),
                    "leading_coefficients": rec.leading_coefficients.iter().map(coeff_json).collect::<Vec<_>>(),
                    "linearized": rec.verdict.linearized,
                    "factorization": to_json(&rec.verdict.factorization),
                })),
                Err(e) if is_obstruction(&e) => {
                    let w = error_witness(&e);
                    verdicts.push(Verdict {
                        kind: VerdictKind::Obstructed,
                        task: Task::Integrals,
                        witness: w.clone(),
                    });
                    obstructed(e.to_string(), w)
                }
                Err(e) => skipped(e.to_string()),
            };
        } else {
            body["reconstruction"] = skipped("x_n is not itself an eigenfunction");
        }
    }
    if integrals.len() + 1 == n && annihilated.iter().all(|a| *a) && independence.independent {
        verdicts.push(Verdict {
            kind: VerdictKind::CiCertifiedAtCap,
            task: Task::Integrals,
            witness: json!({
                "annihilation_defects": defects,
                "independence_witness": to_json(&independence.witness),
            }),
        });
    }
    Ok((done(body), integrals))
}

/// Whether `X(F) = 0` holds for the polynomials `X` and `F` with no
/// truncation. Drift bounds only make sense for such integrals; a truncated
/// jet drifts at the order of the dropped terms.
fn polynomial_integrals<K: Coeff>(x: &VectorField<K>, fs: &[TruncatedSeries<K>]) -> anyhow::Result<bool> {
    let dx = x.components().iter().filter_map(TruncatedSeries::degree).max().unwrap_or(0);
    for f in fs {
        let cap = f.degree().unwrap_or(0) + dx;
        let comps = x
            .components()
            .iter()
            .map(|c| c.as_polynomial_with_cap(cap))
            .collect::<foliation_core::Result<Vec<_>>>()?;
        let full = VectorField::new(comps)?.apply(&f.as_polynomial_with_cap(cap)?)?;
        let scale = f.max_abs_coeff().max(1.0);
        if full.terms().any(|(_, c)| !c.is_negligible(scale)) {
            return Ok(false);
        }
    }
    Ok(true)
}

struct TraceJob {
    kind: &'static str,
    seed: Vec<C64>,
}

fn trace_seeds(n: usize, profiled: bool, eps: f64, c0: C64, seed: u64) -> Vec<TraceJob> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0074_7261_6365);
    let mut random = |len: usize, radius: f64| -> Vec<C64> {
        loop {
            let v: Vec<C64> = (0..len)
                .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let r = v.iter().map(C64::norm_sqr).sum::<f64>().sqrt();
            if r > 0.1 && r <= 1.0 {
                return v.iter().map(|z| z * (radius / r)).collect();
            }
        }
    };
    let mut jobs = Vec::new();
    if profiled {
        let mut axis = vec![C64::new(0.0, 0.0); n];
        axis[n - 1] = c0;
        jobs.push(TraceJob { kind: "separatrix_axis", seed: axis });
        let mut plane = random(n - 1, 0.5 * eps);
        plane.push(C64::new(0.0, 0.0));
        jobs.push(TraceJob { kind: "transverse_plane", seed: plane });
    }
    for _ in 0..2 {
        jobs.push(TraceJob {
            kind: "generic",
            seed: random(n, 0.5 * eps),
        });
    }
    jobs
}

fn csv_of(trace: &LeafTrace, integrals: &[TruncatedSeries<C64>]) -> anyhow::Result<Vec<u8>> {
    let n = trace.seed.len();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["branch".to_string(), "t".to_string()];
    for j in 1..=n {
        header.push(format!("re_x{j}"));
        header.push(format!("im_x{j}"));
    }
    for j in 1..=integrals.len() {
        header.push(format!("dev_F{j}"));
    }
    w.write_record(&header)?;
    let seed: Vec<C64> = trace.seed.iter().map(|z| C64::new(z[0], z[1])).collect();
    let at_seed: Vec<C64> = integrals.iter().map(|f| f.eval(&seed)).collect();
    // Backward samples are stored from the seed outward; emit them in time order.
    let rows = trace
        .backward
        .samples
        .iter()
        .rev()
        .map(|s| ("backward", s))
        .chain(trace.forward.samples.iter().map(|s| ("forward", s)));
    {
        for (name, s) in rows {
            let mut row = vec![name.to_string(), format!("{:e}", s.t)];
            for z in &s.point {
                row.push(format!("{:e}", z[0]));
                row.push(format!("{:e}", z[1]));
            }
            let p = s.coords();
            for (f, f0) in integrals.iter().zip(&at_seed) {
                row.push(format!("{:e}", (f.eval(&p) - f0).norm()));
            }
            w.write_record(&row)?;
        }
    }
    w.into_inner().map_err(|e| anyhow!("{e}"))
}

fn trace_task<K: Coeff>(
    x: &VectorField<K>,
    norm: Option<&Normalized<K>>,
    integrals: &[TruncatedSeries<K>],
    holonomy: Option<&Holonomy>,
    spec: &FieldSpec,
    req: &AnalysisRequest,
) -> anyhow::Result<(Value, Vec<TraceFile>)> {
    let xf = x.to_float();
    let n = xf.nvars();
    let cfg = &req.trace;
    let fs: Vec<TruncatedSeries<C64>> = integrals.iter().map(TruncatedSeries::to_float).collect();
    let exact_integrals = !integrals.is_empty() && polynomial_integrals(x, integrals)?;
    let exponent = norm
        .map(|m| m.spec.values().iter().map(|&v| v as f64).collect::<Vec<_>>())
        .and_then(|l| functional_exponent(&l));
    let jobs = trace_seeds(n, norm.is_some(), cfg.epsilon, cfg.c0(), req.seed);
    let thetas = directions(TRACE_DIRECTIONS);
    let pairs: Vec<(usize, usize)> = (0..jobs.len()).flat_map(|i| (0..thetas.len()).map(move |d| (i, d))).collect();
    let results = pairs
        .par_iter()
        .map(|&(i, d)| integrate_leaf(&xf, &jobs[i].seed, thetas[d], cfg, &fs).map(|t| (i, d, t)))
        .collect::<foliation_core::Result<Vec<_>>>()?;

    let mut summaries = Vec::new();
    let mut files = Vec::new();
    for (i, d, t) in &results {
        files.push(TraceFile {
            name: format!("{}_s{}_d{}.csv", spec.name, i, d),
            contents: csv_of(t, &fs)?,
        });
        summaries.push(json!({
            "seed_kind": jobs[*i].kind,
            "seed_index": i,
            "direction_index": d,
            "theta": t.theta,
            "seed": t.seed,
            "classification": t.classification,
            "min_distance_to_origin": t.min_distance_to_origin,
            "integral_drift": t.integral_drift,
            "forward_exit": to_json(&t.forward.exit),
            "backward_exit": to_json(&t.backward.exit),
            "forward_steps": t.forward.samples.len(),
            "backward_steps": t.backward.samples.len(),
            "functional_max_increase": exponent.and_then(|e| functional_increase(t, e)),
        }));
    }
    let jobs = &jobs;
    let by_kind = |kind: &'static str| results.iter().filter(move |(i, _, _)| jobs[*i].kind == kind);
    let axis_candidate = by_kind("separatrix_axis").any(|(_, _, t)| t.classification == Classification::SeparatrixCandidate);
    let generic_never_separatrix = by_kind("generic").all(|(_, _, t)| t.classification != Classification::SeparatrixCandidate);
    let max_drift = results.iter().filter_map(|(_, _, t)| t.integral_drift).reduce(f64::max);
    let max_functional = exponent.map(|e| {
        results
            .iter()
            .filter_map(|(_, _, t)| functional_increase(t, e))
            .fold(f64::NEG_INFINITY, f64::max)
    });

    let numeric = match (norm, transversal_spectrum(x)) {
        (Some(_), Ok(_)) => {
            let seeds = holonomy_seeds(n - 1, HOLONOMY_SEEDS, HOLONOMY_SEED_RADIUS, req.seed);
            let nh = numeric_holonomy(&xf, cfg, &seeds, holonomy.map(|h| &h.theta))?;
            to_json(&nh)
        }
        _ => Value::Null,
    };
    let numeric_dev = numeric.get("max_deviation").and_then(Value::as_f64);
    Ok((
        done(json!({
            "label": "heuristic; leaves sampled along 8 real directions",
            "config": cfg,
            "traces": summaries,
            "evidence": {
                "axis_separatrix_candidate": axis_candidate,
                "generic_never_separatrix": generic_never_separatrix,
                "max_integral_drift": max_drift,
                "integrals_are_polynomial_integrals": exact_integrals,
                "drift_tolerance": DRIFT_TOL,
                "functional_exponent": exponent,
                "functional_max_increase": max_functional,
                "numeric_holonomy_max_deviation": numeric_dev,
                "numeric_holonomy_tolerance": HOLONOMY_TOL,
            },
            "numeric_holonomy": numeric,
        })),
        files,
    ))
}

/// Holonomy of certified finite order, plus every numeric check that ran.
fn tci_verdict(block: &Value, verdicts: &mut Vec<Verdict>) {
    let h = &block["holonomy"];
    if h["status"] != "done" {
        return;
    }
    let order = &h["result"]["order"];
    let mut witness = json!({"order": order, "closed_form_order": h["result"]["closed_form_order"]});
    let ev = &block["trace"]["result"]["evidence"];
    if !ev.is_null() {
        let ok = ev["axis_separatrix_candidate"] == true
            && ev["generic_never_separatrix"] == true
            && (ev["integrals_are_polynomial_integrals"] != true
                || ev["max_integral_drift"].as_f64().is_none_or(|d| d <= DRIFT_TOL))
            && ev["numeric_holonomy_max_deviation"].as_f64().is_none_or(|d| d <= HOLONOMY_TOL);
        if !ok {
            return;
        }
        witness["trace_evidence"] = ev.clone();
    }
    verdicts.push(Verdict {
        kind: VerdictKind::TciConsistentEvidence,
        task: Task::Holonomy,
        witness,
    });
}
