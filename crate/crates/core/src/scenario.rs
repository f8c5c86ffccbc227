//! Scenario files, batch execution and trace output.
//!
//! A scenario is one JSON document describing the pair `(A, B)` through
//! catalog descriptors, a start point, run settings and an optional block of
//! expected values. Running a scenario writes `<name>.trace.csv` and
//! `<name>.summary.json` and maps the outcome to an exit status.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::displacement::{
    build_normal_problem, check_orthogonal_decomposition, estimate_all, method_disagreement, solve_normal,
    DecompositionReport, AGREEMENT_TOL,
};
use crate::engine::{
    anchored_shadow_check, asymptotic_regularity_report, divergence_certificate, fejer_monitor,
    max_step_norm_increase, run, value_monitor, AnchoredReport, DivergenceReport, RegularityReport, RunConfig,
    RunTrace, FEJER_SLACK,
};
use crate::error::Error;
use crate::identities::sample_points;
use crate::model::{DisplacementEstimate, IterateRecord, ProblemSpec, CONVERGENCE_TOL, IDENTITY_TOL};
use crate::oracles::recession_projection_truth;
use crate::par::Execution;
use crate::prox::{ext_real_vec, OperatorDescriptor};
use crate::vector::Vector;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: PathBuf, line: usize, column: usize, message: String },

    #[error("{path}: invalid scenario:\n  - {}", .violations.join("\n  - "))]
    Validation { path: PathBuf, violations: Vec<String> },

    #[error(transparent)]
    Core(#[from] Error),

    #[error("trace csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("trace csv: {0}")]
    TraceFormat(String),
}

pub type HarnessResult<T> = std::result::Result<T, HarnessError>;

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}

fn default_max_iters() -> usize {
    20_000
}

fn default_record_every() -> usize {
    1
}

fn default_oracle_tol() -> f64 {
    1e-4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    /// `0` runs the full budget.
    #[serde(default)]
    pub stop_tol: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    /// A point of `Fix(v + T)`.
    #[serde(default)]
    pub anchor: Option<Vector>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { max_iters: default_max_iters(), stop_tol: 0.0, record_every: 1, anchor: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfspaceConstraint {
    pub u: Vector,
    pub eta: f64,
}

/// Known description of the normal-problem solution set `Z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ZTruth {
    Point {
        point: Vector,
    },
    /// `origin + ℝ₊ direction`.
    Ray { origin: Vector, direction: Vector },
    /// `base + span(basis)`; `basis` orthonormal.
    Affine { base: Vector, basis: Vec<Vector> },
    /// `{lo ≤ x ≤ hi} ∩ ⋂ {⟨x, u⟩ ≤ η}`.
    Polyhedron {
        #[serde(with = "ext_real_vec")]
        lo: Vec<f64>,
        #[serde(with = "ext_real_vec")]
        hi: Vec<f64>,
        #[serde(default)]
        halfspaces: Vec<HalfspaceConstraint>,
    },
}

impl ZTruth {
    pub fn dims(&self) -> Vec<usize> {
        match self {
            Self::Point { point } => vec![point.dim()],
            Self::Ray { origin, direction } => vec![origin.dim(), direction.dim()],
            Self::Affine { base, basis } => std::iter::once(base.dim()).chain(basis.iter().map(Vector::dim)).collect(),
            Self::Polyhedron { lo, hi, halfspaces } => {
                [lo.len(), hi.len()].into_iter().chain(halfspaces.iter().map(|h| h.u.dim())).collect()
            }
        }
    }

    pub fn is_singleton(&self) -> bool {
        match self {
            Self::Point { .. } => true,
            Self::Affine { basis, .. } => basis.is_empty(),
            _ => false,
        }
    }

    /// Distance-based membership with tolerance `tol`.
    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        match self {
            Self::Point { point } => x.dist(point) <= tol,
            Self::Ray { origin, direction } => {
                let rel = x - origin;
                let t = (rel.dot(direction) / direction.norm_sq()).max(0.0);
                rel.dist(&(direction * t)) <= tol
            }
            Self::Affine { base, basis } => {
                let rel = x - base;
                let proj = basis.iter().fold(Vector::zeros(x.dim()), |acc, b| acc.axpy(rel.dot(b), b));
                rel.dist(&proj) <= tol
            }
            Self::Polyhedron { lo, hi, halfspaces } => {
                x.as_slice().iter().zip(lo.iter().zip(hi)).all(|(&c, (&l, &h))| c >= l - tol && c <= h + tol)
                    && halfspaces.iter().all(|hs| x.dot(&hs.u) <= hs.eta + tol * hs.u.norm())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleBlock {
    pub v: Vector,
    pub v_d: Vector,
    pub v_r: Vector,
    #[serde(default)]
    pub z: Option<ZTruth>,
    #[serde(default)]
    pub mu: Option<f64>,
    #[serde(default = "default_oracle_tol")]
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default)]
    pub description: Option<String>,
    pub dim: usize,
    pub operator_a: OperatorDescriptor,
    pub operator_b: OperatorDescriptor,
    pub start: Vector,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub oracle: Option<OracleBlock>,
    /// A point of `dom f ∩ (v + dom g)` for the value monitors.
    #[serde(default)]
    pub test_point_y: Option<Vector>,
}

/// Tolerance for the internal consistency of an oracle block.
pub const ORACLE_CONSISTENCY_TOL: f64 = 1e-9;

impl ScenarioFile {
    /// Every violated invariant, in a stable order.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        let dim = self.dim;
        if dim == 0 {
            out.push("dim must be positive".to_string());
        }
        if self.name.trim().is_empty() {
            out.push("name must not be empty".to_string());
        }
        if !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            out.push(format!("name {:?} may only contain ASCII letters, digits, '_' and '-'", self.name));
        }
        let check_dim = |what: &str, found: usize, out: &mut Vec<String>| {
            if found != dim {
                out.push(format!("{what} has dimension {found}, expected {dim}"));
            }
        };
        for (label, desc) in [("operator_a", &self.operator_a), ("operator_b", &self.operator_b)] {
            check_dim(label, desc.dim(), &mut out);
            out.extend(desc.validation_errors().into_iter().map(|e| format!("{label}: {e}")));
        }
        check_dim("start", self.start.dim(), &mut out);
        if self.run.max_iters == 0 {
            out.push("run.max_iters must be at least 1".to_string());
        }
        if self.run.record_every == 0 {
            out.push("run.record_every must be at least 1".to_string());
        }
        if !(self.run.stop_tol >= 0.0 && self.run.stop_tol.is_finite()) {
            out.push("run.stop_tol must be finite and nonnegative".to_string());
        }
        if let Some(a) = &self.run.anchor {
            check_dim("run.anchor", a.dim(), &mut out);
        }
        if let Some(y) = &self.test_point_y {
            check_dim("test_point_y", y.dim(), &mut out);
        }
        if let Some(o) = &self.oracle {
            let before = out.len();
            check_dim("oracle.v", o.v.dim(), &mut out);
            check_dim("oracle.v_d", o.v_d.dim(), &mut out);
            check_dim("oracle.v_r", o.v_r.dim(), &mut out);
            if out.len() == before {
                let gap = o.v.dist(&(&o.v_d + &o.v_r));
                if gap > ORACLE_CONSISTENCY_TOL * o.v.norm().max(1.0) {
                    out.push(format!("oracle violates v = v_d + v_r (gap {gap:e})"));
                }
                let inner = o.v_d.dot(&o.v_r);
                if inner.abs() > ORACLE_CONSISTENCY_TOL * o.v.norm_sq().max(1.0) {
                    out.push(format!("oracle violates <v_d, v_r> = 0 (inner product {inner:e})"));
                }
            }
            if let Some(z) = &o.z {
                for d in z.dims() {
                    check_dim("oracle.z", d, &mut out);
                }
            }
            if o.mu.is_some_and(|m| !m.is_finite()) {
                out.push("oracle.mu must be finite".to_string());
            }
            if !(o.tol > 0.0 && o.tol.is_finite()) {
                out.push("oracle.tol must be positive".to_string());
            }
        }
        out
    }

    pub fn problem(&self) -> crate::error::Result<ProblemSpec> {
        ProblemSpec::new(self.name.clone(), self.operator_a.build()?, self.operator_b.build()?, self.start.clone())
    }

    pub fn run_config(&self, opts: &RunOptions) -> RunConfig {
        let mut cfg = RunConfig::new(opts.max_iters.unwrap_or(self.run.max_iters))
            .with_stop_tol(opts.stop_tol.unwrap_or(self.run.stop_tol))
            .with_record_every(self.run.record_every);
        cfg.anchor = self.run.anchor.clone();
        if let (Some(o), Some(y)) = (&self.oracle, &self.test_point_y) {
            cfg = cfg.with_monitor(o.v.clone(), y.clone());
        }
        cfg
    }
}

/// Parses and validates a scenario held in memory; `path` is used in errors.
pub fn parse_scenario(text: &str, path: &Path) -> HarnessResult<ScenarioFile> {
    let sc: ScenarioFile = serde_json::from_str(text).map_err(|e| HarnessError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let violations = sc.validate();
    if violations.is_empty() {
        Ok(sc)
    } else {
        Err(HarnessError::Validation { path: path.to_path_buf(), violations })
    }
}

pub fn load_scenario(path: &Path) -> HarnessResult<ScenarioFile> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_scenario(&text, path)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    /// Where to write the trace and summary; nothing is written when `None`.
    pub out_dir: Option<PathBuf>,
    pub max_iters: Option<usize>,
    pub stop_tol: Option<f64>,
    /// Seed for the random points of the normal-problem operator check.
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitStatus {
    Pass,
    Mismatch,
    Failure,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Pass => 0,
            ExitStatus::Mismatch => 1,
            ExitStatus::Failure => 2,
        }
    }

    pub fn of<T>(result: &HarnessResult<T>, status: impl FnOnce(&T) -> ExitStatus) -> ExitStatus {
        match result {
            Ok(v) => status(v),
            Err(_) => ExitStatus::Failure,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Self { name: name.to_string(), pass, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleDeltas {
    pub v: f64,
    pub v_d: f64,
    pub v_r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FejerSummary {
    pub monotone: bool,
    pub max_increase: f64,
    pub initial_distance: f64,
    pub final_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueSummary {
    pub converged_value: f64,
    pub eps_tail: f64,
    pub delta_tail: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalSummary {
    /// Worst `‖T'y − T(y + v)‖` over the random points.
    pub operator_residual: f64,
    pub z_bar: Option<Vector>,
    pub mu: Option<f64>,
    /// `‖p_N − z̄‖` for the original run, when its primal shadows converge.
    pub shadow_gap: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub name: String,
    pub dim: usize,
    pub iterations: usize,
    pub stopped_early: bool,
    pub estimates: Vec<DisplacementEstimate>,
    pub method_disagreement: Option<f64>,
    pub decomposition: Option<DecompositionReport>,
    /// `x_N + N v` for the default estimate.
    pub companion_final: Vector,
    pub regularity: Option<RegularityReport>,
    pub oracle_deltas: Option<OracleDeltas>,
    pub fejer: Option<FejerSummary>,
    pub anchored: Option<AnchoredReport>,
    pub divergence: Option<DivergenceReport>,
    pub values: Option<ValueSummary>,
    pub normal: Option<NormalSummary>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub summary: Summary,
    pub trace: RunTrace,
    pub status: ExitStatus,
}

/// Iterations used by the anchored drift check.
pub const ANCHOR_STEPS: usize = 1000;
/// Random points used by the normal-problem operator check.
pub const NORMAL_SAMPLES: usize = 100;
/// Agreement required between the normal-problem solution and `Z` or the
/// original shadow limit.
pub const NORMAL_TOL: f64 = 1e-3;
/// Bound on the tails of `ε_n` and `δ_n`.
pub const MONITOR_TAIL_TOL: f64 = 1e-6;

/// Runs a loaded scenario and, when `opts.out_dir` is set, writes its trace
/// and summary.
pub fn run_scenario(sc: &ScenarioFile, opts: &RunOptions) -> HarnessResult<ScenarioOutcome> {
    let spec = sc.problem()?;
    let cfg = sc.run_config(opts);
    let trace = run(&spec, &cfg)?;
    let summary = summarize(sc, &spec, &trace, opts)?;
    if let Some(dir) = &opts.out_dir {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        emit_trace_csv(&trace, &dir.join(format!("{}.trace.csv", sc.name)))?;
        let path = dir.join(format!("{}.summary.json", sc.name));
        let json = serde_json::to_string_pretty(&summary).map_err(|e| HarnessError::TraceFormat(e.to_string()))?;
        fs::write(&path, json + "\n").map_err(io_err(&path))?;
    }
    let status = if summary.pass { ExitStatus::Pass } else { ExitStatus::Mismatch };
    Ok(ScenarioOutcome { summary, trace, status })
}

/// Oracle comparison only; writes nothing.
pub fn verify(sc: &ScenarioFile, opts: &RunOptions) -> HarnessResult<ScenarioOutcome> {
    run_scenario(sc, &RunOptions { out_dir: None, ..opts.clone() })
}

fn summarize(sc: &ScenarioFile, spec: &ProblemSpec, trace: &RunTrace, opts: &RunOptions) -> HarnessResult<Summary> {
    let mut checks = Vec::new();
    let worst_identity = trace
        .records
        .iter()
        .flat_map(|r| r.identity_residuals())
        .fold(0.0_f64, f64::max);
    checks.push(Check::new(
        "record_identities",
        worst_identity <= IDENTITY_TOL,
        format!("max residual {worst_identity:e}"),
    ));
    let step_increase = max_step_norm_increase(trace);
    checks.push(Check::new(
        "step_norm_nonincreasing",
        step_increase <= IDENTITY_TOL,
        format!("max increase {step_increase:e}"),
    ));

    let (estimates, disagreement) = match estimate_all(trace) {
        Ok(ests) => {
            let d = method_disagreement(&ests);
            checks.push(Check::new("estimates_converged", d <= AGREEMENT_TOL, format!("max disagreement {d:e}")));
            (ests, Some(d))
        }
        Err(e) => {
            checks.push(Check::new("estimates_converged", false, e.to_string()));
            (Vec::new(), None)
        }
    };
    let default_est = estimates.first().unwrap_or(&trace.final_estimate).clone();
    let companion_final = RunTrace::companion(trace.last(), &default_est.v);
    let regularity = asymptotic_regularity_report(trace, CONVERGENCE_TOL).ok();

    let mut summary = Summary {
        name: sc.name.clone(),
        dim: sc.dim,
        iterations: trace.iterations,
        stopped_early: trace.stopped_early,
        decomposition: estimates.first().map(|e| check_orthogonal_decomposition(e, sc.oracle.as_ref().map_or(1e-4, |o| o.tol))),
        estimates,
        method_disagreement: disagreement,
        companion_final,
        regularity,
        oracle_deltas: None,
        fejer: None,
        anchored: None,
        divergence: None,
        values: None,
        normal: None,
        checks: Vec::new(),
        pass: false,
    };

    if let Some(oracle) = &sc.oracle {
        oracle_checks(sc, oracle, spec, trace, opts, &mut summary, &mut checks);
    }
    summary.pass = checks.iter().all(|c| c.pass);
    summary.checks = checks;
    Ok(summary)
}

fn oracle_checks(
    sc: &ScenarioFile,
    oracle: &OracleBlock,
    spec: &ProblemSpec,
    trace: &RunTrace,
    opts: &RunOptions,
    summary: &mut Summary,
    checks: &mut Vec<Check>,
) {
    let tol = oracle.tol;
    if let Some(est) = summary.estimates.first() {
        let deltas = OracleDeltas { v: est.v.dist(&oracle.v), v_d: est.v_d.dist(&oracle.v_d), v_r: est.v_r.dist(&oracle.v_r) };
        for (name, d) in [("oracle_v", deltas.v), ("oracle_v_d", deltas.v_d), ("oracle_v_r", deltas.v_r)] {
            checks.push(Check::new(name, d <= tol, format!("distance {d:e} (tol {tol:e})")));
        }
        if let Some(dec) = &summary.decomposition {
            checks.push(Check::new(
                "orthogonal_decomposition",
                dec.pass,
                format!("inner {:e}, sum {:e}, pythagoras {:e}", dec.inner_product, dec.sum_residual, dec.pythagoras_residual),
            ));
        }
        summary.oracle_deltas = Some(deltas);
    }

    if let Some(reg) = &summary.regularity {
        let want_primal = oracle.v_r.norm() <= CONVERGENCE_TOL;
        let want_dual = oracle.v_d.norm() <= CONVERGENCE_TOL;
        checks.push(Check::new(
            "regularity_dichotomy",
            reg.primal_regular == want_primal && reg.dual_regular == want_dual,
            format!(
                "primal {} (expected {want_primal}), dual {} (expected {want_dual})",
                reg.primal_regular, reg.dual_regular
            ),
        ));
    }

    match recession_projection_truth(&sc.operator_a, &oracle.v) {
        Ok(rec) => {
            let gap = [
                rec.v_d_from_domain.dist(&oracle.v_d),
                rec.v_r_from_domain.dist(&oracle.v_r),
                rec.v_d_from_range.dist(&oracle.v_d),
                rec.v_r_from_range.dist(&oracle.v_r),
            ]
            .into_iter()
            .fold(0.0_f64, f64::max);
            checks.push(Check::new("recession_projections", gap <= IDENTITY_TOL, format!("max gap {gap:e}")));
        }
        Err(e) => checks.push(Check::new("recession_projections", false, e.to_string())),
    }

    let anchor = sc.run.anchor.as_ref();
    let mut rho0 = None;
    if let Some(f) = anchor {
        match anchored_shadow_check(spec, f, &oracle.v, &oracle.v_d, &oracle.v_r, ANCHOR_STEPS) {
            Ok(r) => {
                checks.push(Check::new(
                    "anchored_drift",
                    r.pass,
                    format!("x {:e}, p {:e}, d {:e} (per step)", r.max_x_residual, r.max_primal_residual, r.max_dual_residual),
                ));
                summary.anchored = Some(r);
            }
            Err(e) => checks.push(Check::new("anchored_drift", false, e.to_string())),
        }
        let jf = spec.op_a.apply(f);
        let kf = f - &jf;
        match fejer_monitor(trace, &oracle.v_d, &oracle.v_r, (&jf, &kf), FEJER_SLACK) {
            Ok(r) => {
                checks.push(Check::new("fejer_monotone", r.monotone, format!("max increase {:e}", r.max_increase)));
                rho0 = Some(r.distances[0].1);
                summary.fejer = Some(FejerSummary {
                    monotone: r.monotone,
                    max_increase: r.max_increase,
                    initial_distance: r.distances[0].1,
                    final_distance: r.distances[r.distances.len() - 1].1,
                });
            }
            Err(e) => checks.push(Check::new("fejer_monotone", false, e.to_string())),
        }
    }

    if oracle.v_r.norm() > 0.0 {
        let constant = match (rho0, anchor) {
            (Some(rho0), Some(f)) => rho0 + spec.op_a.apply(f).norm(),
            _ => trace
                .records
                .iter()
                .map(|r| r.p.axpy(r.n as f64, &oracle.v_r).norm())
                .fold(0.0_f64, f64::max),
        };
        let r = divergence_certificate(trace, &oracle.v_r, constant);
        checks.push(Check::new(
            "divergence_certificate",
            r.pass,
            format!("|p_N| = {:e} vs bound {:e} (N = {}, C = {:e})", r.primal_norm, r.bound, r.n, r.constant),
        ));
        summary.divergence = Some(r);
    }

    if spec.functions_evaluable() && sc.test_point_y.is_some() {
        if let Some(mu) = oracle.mu {
            match value_monitor(trace, &oracle.v, sc.test_point_y.as_ref()) {
                Ok(r) => {
                    let gap = (r.converged_value - mu).abs();
                    checks.push(Check::new("value_limit", gap <= tol, format!("value {} vs mu {mu} (gap {gap:e})", r.converged_value)));
                    checks.push(Check::new(
                        "monitor_tails",
                        r.eps_tail <= MONITOR_TAIL_TOL && r.delta_tail <= MONITOR_TAIL_TOL,
                        format!("eps {:e}, delta {:e}", r.eps_tail, r.delta_tail),
                    ));
                    summary.values = Some(ValueSummary {
                        converged_value: r.converged_value,
                        eps_tail: r.eps_tail,
                        delta_tail: r.delta_tail,
                    });
                }
                Err(e) => checks.push(Check::new("value_limit", false, e.to_string())),
            }
        }
    }

    summary.normal = Some(normal_checks(sc, oracle, spec, trace, opts, checks));
}

fn normal_checks(
    sc: &ScenarioFile,
    oracle: &OracleBlock,
    spec: &ProblemSpec,
    trace: &RunTrace,
    opts: &RunOptions,
    checks: &mut Vec<Check>,
) -> NormalSummary {
    let mut out = NormalSummary { operator_residual: f64::NAN, z_bar: None, mu: None, shadow_gap: None, error: None };
    let np = match build_normal_problem(spec, &oracle.v) {
        Ok(np) => np,
        Err(e) => {
            checks.push(Check::new("normal_operator", false, e.to_string()));
            out.error = Some(e.to_string());
            return out;
        }
    };
    let points: Vec<Vector> = sample_points(sc.dim, NORMAL_SAMPLES, opts.seed).into_iter().map(|(y, _)| y).collect();
    match np.max_operator_residual(&points, Execution::Sequential) {
        Ok(r) => {
            out.operator_residual = r;
            checks.push(Check::new("normal_operator", r <= IDENTITY_TOL, format!("max |T'y - T(y+v)| = {r:e}")));
        }
        Err(e) => checks.push(Check::new("normal_operator", false, e.to_string())),
    }
    let Some(z) = &oracle.z else { return out };
    let cfg = RunConfig::new(opts.max_iters.unwrap_or(sc.run.max_iters)).with_stop_tol(1e-12);
    match solve_normal(&np, &cfg) {
        Ok(sol) => {
            checks.push(Check::new(
                "normal_solution_in_z",
                z.contains(&sol.z_bar, NORMAL_TOL),
                format!("z_bar = {:?}", sol.z_bar.as_slice()),
            ));
            if let (Some(mu), Some(got)) = (oracle.mu, sol.mu) {
                checks.push(Check::new("normal_mu", (got - mu).abs() <= oracle.tol, format!("{got} vs {mu}")));
            }
            // The original primal shadows converge only when v_R = 0, and
            // their limit is pinned down when Z is a point or T' = T.
            if oracle.v_r.norm() == 0.0 && (z.is_singleton() || oracle.v.norm() == 0.0) {
                let gap = trace.last().p.dist(&sol.z_bar);
                checks.push(Check::new("normal_matches_shadow_limit", gap <= NORMAL_TOL, format!("|p_N - z_bar| = {gap:e}")));
                out.shadow_gap = Some(gap);
            }
            out.mu = sol.mu;
            out.z_bar = Some(sol.z_bar);
        }
        Err(e) => {
            checks.push(Check::new("normal_solution_in_z", false, e.to_string()));
            out.error = Some(e.to_string());
        }
    }
    out
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Column names: `n, x_1..x_m, p_*, q_*, d_*, e_*, stepdiff_*, f_val, g_val,
/// eps_n, delta_n`.
pub fn trace_header(dim: usize) -> Vec<String> {
    let mut h = vec!["n".to_string()];
    for prefix in ["x", "p", "q", "d", "e", "stepdiff"] {
        h.extend((1..=dim).map(|i| format!("{prefix}_{i}")));
    }
    h.extend(["f_val", "g_val", "eps_n", "delta_n"].map(String::from));
    h
}

/// Writes one row per record; floats carry 17 significant digits, missing
/// values are empty cells.
pub fn emit_trace_csv(trace: &RunTrace, path: &Path) -> HarnessResult<()> {
    write_records_csv(&trace.records, path)
}

pub fn write_records_csv(records: &[IterateRecord], path: &Path) -> HarnessResult<()> {
    let first = records.first().ok_or(Error::InsufficientData { needed: 1, found: 0 })?;
    let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(source) => HarnessError::Io { path: path.to_path_buf(), source },
        other => HarnessError::TraceFormat(format!("{other:?}")),
    })?;
    w.write_record(trace_header(first.x.dim()))?;
    let mut row = Vec::new();
    for r in records {
        row.clear();
        row.push(r.n.to_string());
        for v in [&r.x, &r.p, &r.q, &r.d, &r.e, &r.step_diff] {
            row.extend(v.as_slice().iter().map(|&c| fmt_f64(c)));
        }
        row.extend([fmt_opt(r.f_val), fmt_opt(r.g_val), fmt_opt(r.eps_n), fmt_opt(r.delta_n)]);
        w.write_record(&row)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Reads a trace written by [`emit_trace_csv`].
pub fn read_trace_csv(path: &Path) -> HarnessResult<Vec<IterateRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    if header.len() < 5 || !(header.len() - 5).is_multiple_of(6) {
        return Err(HarnessError::TraceFormat(format!("unexpected column count {}", header.len())));
    }
    let dim = (header.len() - 5) / 6;
    if header != trace_header(dim) {
        return Err(HarnessError::TraceFormat("header does not match the trace layout".into()));
    }
    let parse = |s: &str| -> HarnessResult<f64> {
        s.parse::<f64>().map_err(|e| HarnessError::TraceFormat(format!("bad number {s:?}: {e}")))
    };
    let opt = |s: &str| -> HarnessResult<Option<f64>> { if s.is_empty() { Ok(None) } else { parse(s).map(Some) } };
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let n = row[0].parse::<usize>().map_err(|e| HarnessError::TraceFormat(e.to_string()))?;
        let mut vecs = Vec::with_capacity(6);
        for k in 0..6 {
            let coords = (0..dim).map(|i| parse(&row[1 + k * dim + i])).collect::<HarnessResult<Vec<f64>>>()?;
            vecs.push(Vector::new(coords)?);
        }
        let base = 1 + 6 * dim;
        let mut it = vecs.into_iter();
        let mut next = || it.next().expect("six vectors");
        records.push(IterateRecord {
            n,
            x: next(),
            p: next(),
            q: next(),
            d: next(),
            e: next(),
            step_diff: next(),
            f_val: opt(&row[base])?,
            g_val: opt(&row[base + 1])?,
            eps_n: opt(&row[base + 2])?,
            delta_n: opt(&row[base + 3])?,
        });
    }
    Ok(records)
}

/// Scenario files (`*.json`) in `dir`, sorted by path.
pub fn scenario_paths(dir: &Path) -> HarnessResult<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    Ok(paths)
}

/// Loads and runs every scenario in `dir`; scenarios run concurrently under
/// [`Execution::Parallel`]. Results are in path order.
pub fn run_all(dir: &Path, opts: &RunOptions, exec: Execution) -> HarnessResult<Vec<(PathBuf, HarnessResult<ScenarioOutcome>)>> {
    let paths = scenario_paths(dir)?;
    let results = exec.map(&paths, |p| load_scenario(p).and_then(|sc| run_scenario(&sc, opts)));
    Ok(paths.into_iter().zip(results).collect())
}

/// Worst status over a batch.
pub fn batch_status<'a>(results: impl IntoIterator<Item = &'a HarnessResult<ScenarioOutcome>>) -> ExitStatus {
    results
        .into_iter()
        .map(|r| ExitStatus::of(r, |o| o.status))
        .max_by_key(|s| s.code())
        .unwrap_or(ExitStatus::Pass)
}
