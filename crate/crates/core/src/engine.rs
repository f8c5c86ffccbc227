//! The Douglas–Rachford iteration `x_{n+1} = T x_n` with
//! `T = Id − J_A + J_B R_A`, full shadow recording, and the online checks run
//! against a recorded trace.

use serde::Serialize;

use crate::displacement::estimate_from_records;
use crate::error::{Error, Result};
use crate::model::{DisplacementEstimate, EstimationMethod, IterateRecord, ProblemSpec, IDENTITY_TOL};
use crate::vector::Vector;

/// Slack allowed in the Fejér monotonicity test.
pub const FEJER_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub max_iters: usize,
    /// Early-stop threshold on the increments of `step_diff` and on the
    /// second differences of the primal shadows. `0` disables early stopping.
    pub stop_tol: f64,
    pub record_every: usize,
    /// A known `f ∈ Fix(v + T)`.
    pub anchor: Option<Vector>,
    /// Displacement vector and test point `y` used to fill `eps_n`/`delta_n`.
    pub monitor: Option<(Vector, Vector)>,
}

impl RunConfig {
    pub fn new(max_iters: usize) -> Self {
        Self { max_iters, stop_tol: 0.0, record_every: 1, anchor: None, monitor: None }
    }

    pub fn with_stop_tol(mut self, stop_tol: f64) -> Self {
        self.stop_tol = stop_tol;
        self
    }

    pub fn with_record_every(mut self, record_every: usize) -> Self {
        self.record_every = record_every;
        self
    }

    pub fn with_anchor(mut self, anchor: Vector) -> Self {
        self.anchor = Some(anchor);
        self
    }

    pub fn with_monitor(mut self, v: Vector, y: Vector) -> Self {
        self.monitor = Some((v, y));
        self
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidParams("max_iters must be at least 1".into()));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParams("record_every must be at least 1".into()));
        }
        if !(self.stop_tol >= 0.0 && self.stop_tol.is_finite()) {
            return Err(Error::InvalidParams(format!("stop_tol must be finite and >= 0, got {}", self.stop_tol)));
        }
        if let Some(a) = &self.anchor {
            a.check_dim(dim)?;
        }
        if let Some((v, y)) = &self.monitor {
            v.check_dim(dim)?;
            y.check_dim(dim)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RunTrace {
    pub records: Vec<IterateRecord>,
    pub final_estimate: DisplacementEstimate,
    /// Last primal shadow, when the primal shadows are asymptotically regular.
    pub limit_primal: Option<Vector>,
    /// Last value `f(p_n) + g(q_n)` under the same condition.
    pub limit_value: Option<f64>,
    /// Number of applications of `T` performed.
    pub iterations: usize,
    pub stopped_early: bool,
}

impl RunTrace {
    pub fn last(&self) -> &IterateRecord {
        self.records.last().expect("trace is never empty")
    }

    pub fn dim(&self) -> usize {
        self.last().x.dim()
    }

    /// `x_n + n v`, bounded whenever `Fix(v + T) ≠ ∅`.
    pub fn companion(record: &IterateRecord, v: &Vector) -> Vector {
        record.x.axpy(record.n as f64, v)
    }
}

struct StepParts {
    p: Vector,
    q: Vector,
    d: Vector,
    e: Vector,
    next: Vector,
}

fn step_parts(spec: &ProblemSpec, x: &Vector) -> StepParts {
    let p = spec.op_a.apply(x);
    let r = p.zip_map(x, |a, b| 2.0 * a - b);
    let q = spec.op_b.apply(&r);
    let d = x - &p;
    let e = &r - &q;
    let next = &(x - &p) + &q;
    StepParts { p, q, d, e, next }
}

/// `T x = x − J_A x + J_B(2 J_A x − x)`.
pub fn dr_step(spec: &ProblemSpec, x: &Vector) -> Result<Vector> {
    x.check_dim(spec.dim)?;
    Ok(step_parts(spec, x).next)
}

fn make_record(spec: &ProblemSpec, n: usize, x: Vector, parts: &StepParts, monitor: Option<&(Vector, Vector)>) -> IterateRecord {
    let step_diff = &x - &parts.next;
    let f_val = spec.op_a.evaluate_opt(&parts.p);
    let g_val = spec.op_b.evaluate_opt(&parts.q);
    let (eps_n, delta_n) = match monitor {
        Some((v, y)) => {
            let w = &(&parts.p - &parts.q) - v;
            let eps = (&(y - &parts.q) - v).dot(&w);
            let delta = w.dot(&(&parts.p - &x.axpy(n as f64, v)));
            (Some(eps), Some(delta))
        }
        None => (None, None),
    };
    IterateRecord {
        n,
        x,
        p: parts.p.clone(),
        q: parts.q.clone(),
        d: parts.d.clone(),
        e: parts.e.clone(),
        step_diff,
        f_val,
        g_val,
        eps_n,
        delta_n,
    }
}

/// Runs `max_iters` applications of `T` from `spec.start` (fewer if the
/// stopping rule fires). Records `n = 0, k, 2k, …` and always the final two
/// iterations, so consecutive differences are available at the end.
pub fn run(spec: &ProblemSpec, cfg: &RunConfig) -> Result<RunTrace> {
    cfg.validate(spec.dim)?;
    let mut records = Vec::with_capacity(cfg.max_iters / cfg.record_every + 3);
    let mut x = spec.start.clone();
    let mut prev: Option<IterateRecord> = None;
    let mut prev_step: Option<Vector> = None;
    let mut p_hist: [Option<Vector>; 2] = [None, None];
    let mut stopped_early = false;
    let mut last_n = 0;

    for n in 0..=cfg.max_iters {
        let parts = step_parts(spec, &x);
        if !parts.next.is_finite() || !parts.p.is_finite() || !parts.q.is_finite() {
            return Err(Error::NonFiniteIterate { iteration: n });
        }
        let next = parts.next.clone();
        let record = make_record(spec, n, x, &parts, cfg.monitor.as_ref());
        last_n = n;

        let stop = cfg.stop_tol > 0.0
            && n >= 2
            && match (&prev_step, &p_hist) {
                (Some(s), [Some(p1), Some(p2)]) => {
                    let ds = record.step_diff.dist(s);
                    let dp = (&(&record.p - p1) - &(p1 - p2)).norm();
                    ds <= cfg.stop_tol && dp <= cfg.stop_tol
                }
                _ => false,
            };
        let is_last = stop || n == cfg.max_iters;

        if let Some(pr) = prev.take() {
            if is_last && pr.n % cfg.record_every != 0 {
                records.push(pr);
            }
        }
        prev_step = Some(record.step_diff.clone());
        p_hist = [Some(record.p.clone()), p_hist[0].take()];
        if n % cfg.record_every == 0 || is_last {
            records.push(record.clone());
        }
        prev = Some(record);
        x = next;
        if stop {
            stopped_early = n < cfg.max_iters;
            break;
        }
    }

    let final_estimate = if records.len() >= crate::displacement::MIN_RECORDS {
        estimate_from_records(&records, EstimationMethod::LastDifference)?
    } else {
        last_pair_estimate(&records)
    };
    let (limit_primal, limit_value) = match records.as_slice() {
        [.., a, b] if a.p.dist(&b.p) <= crate::model::CONVERGENCE_TOL => (Some(b.p.clone()), b.value()),
        _ => (None, None),
    };
    Ok(RunTrace { records, final_estimate, limit_primal, limit_value, iterations: last_n, stopped_early })
}

fn last_pair_estimate(records: &[IterateRecord]) -> DisplacementEstimate {
    let last = records.last().expect("at least one record");
    match records {
        [.., a, b] if b.n == a.n + 1 => DisplacementEstimate::new(
            a.step_diff.clone(),
            &a.d - &b.d,
            &a.p - &b.p,
            EstimationMethod::LastDifference,
            b.n,
        ),
        _ => {
            let mut est = DisplacementEstimate::zero(last.x.dim(), EstimationMethod::LastDifference);
            est.v = last.step_diff.clone();
            est.residual = last.step_diff.norm();
            est
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegularityReport {
    pub primal_regular: bool,
    pub dual_regular: bool,
    /// `‖p_{N−1} − p_N‖` and `‖d_{N−1} − d_N‖`.
    pub primal_increment: f64,
    pub dual_increment: f64,
    /// Whether `primal_regular` agrees with `‖v_R‖ ≤ tol` for the trace's own
    /// estimate (and likewise for the dual side).
    pub consistent_with_estimate: bool,
}

/// Asymptotic regularity of the primal and dual shadows, judged on the
/// final pair of consecutive records.
pub fn asymptotic_regularity_report(trace: &RunTrace, tol: f64) -> Result<RegularityReport> {
    let (a, b) = final_pair(&trace.records)?;
    let primal_increment = a.p.dist(&b.p);
    let dual_increment = a.d.dist(&b.d);
    let primal_regular = primal_increment <= tol;
    let dual_regular = dual_increment <= tol;
    let est = &trace.final_estimate;
    let consistent_with_estimate = primal_regular == (est.v_r.norm() <= tol) && dual_regular == (est.v_d.norm() <= tol);
    Ok(RegularityReport { primal_regular, dual_regular, primal_increment, dual_increment, consistent_with_estimate })
}

fn final_pair(records: &[IterateRecord]) -> Result<(&IterateRecord, &IterateRecord)> {
    match records {
        [.., a, b] => Ok((a, b)),
        _ => Err(Error::InsufficientData { needed: 2, found: records.len() }),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FejerReport {
    /// `(n, ρ_n)` for each recorded iteration.
    pub distances: Vec<(usize, f64)>,
    pub monotone: bool,
    pub max_increase: f64,
}

/// Distances `ρ_n = ‖(p_n + n v_R, d_n + n v_D) − (z, k)‖` in the product
/// norm, and whether they are nonincreasing up to `slack`.
pub fn fejer_monitor(
    trace: &RunTrace,
    v_d: &Vector,
    v_r: &Vector,
    target: (&Vector, &Vector),
    slack: f64,
) -> Result<FejerReport> {
    if trace.records.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, found: trace.records.len() });
    }
    let dim = trace.dim();
    for w in [v_d, v_r, target.0, target.1] {
        w.check_dim(dim)?;
    }
    let distances: Vec<(usize, f64)> = trace
        .records
        .iter()
        .map(|r| {
            let n = r.n as f64;
            let dp = r.p.axpy(n, v_r).dist(target.0);
            let dd = r.d.axpy(n, v_d).dist(target.1);
            (r.n, dp.hypot(dd))
        })
        .collect();
    let max_increase = distances
        .windows(2)
        .map(|w| w[1].1 - w[0].1)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(FejerReport { monotone: max_increase <= slack, max_increase, distances })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnchoredReport {
    pub fixed_point_residual: f64,
    /// Worst `‖Tⁿf − (f − n v)‖ / max(n, 1)` over `n ≤ n_max`, and the
    /// same for the two shadow identities.
    pub max_x_residual: f64,
    pub max_primal_residual: f64,
    pub max_dual_residual: f64,
    pub n_max: usize,
    pub pass: bool,
}

/// Verifies the exact linear drifts `Tⁿf = f − n v`,
/// `J_A Tⁿf = J_A f − n v_R` and `J_{A⁻¹} Tⁿf = J_{A⁻¹} f − n v_D` for
/// `n = 0..=n_max`, each within `max(n, 1) · 1e−10`.
pub fn anchored_shadow_check(
    spec: &ProblemSpec,
    anchor_f: &Vector,
    v: &Vector,
    v_d: &Vector,
    v_r: &Vector,
    n_max: usize,
) -> Result<AnchoredReport> {
    for w in [anchor_f, v, v_d, v_r] {
        w.check_dim(spec.dim)?;
    }
    let t_f = dr_step(spec, anchor_f)?;
    let fixed_point_residual = (&(anchor_f - v) - &t_f).norm();
    if fixed_point_residual > IDENTITY_TOL {
        return Err(Error::NotAFixedPoint { residual: fixed_point_residual });
    }
    let p0 = spec.op_a.apply(anchor_f);
    let d0 = anchor_f - &p0;
    let (mut mx, mut mp, mut md) = (0.0_f64, 0.0_f64, 0.0_f64);
    let mut x = anchor_f.clone();
    for n in 0..=n_max {
        let p = spec.op_a.apply(&x);
        let d = &x - &p;
        let k = -(n as f64);
        let scale = (n.max(1)) as f64;
        mx = mx.max(x.dist(&anchor_f.axpy(k, v)) / scale);
        mp = mp.max(p.dist(&p0.axpy(k, v_r)) / scale);
        md = md.max(d.dist(&d0.axpy(k, v_d)) / scale);
        if n < n_max {
            x = step_parts(spec, &x).next;
        }
    }
    let pass = mx <= IDENTITY_TOL && mp <= IDENTITY_TOL && md <= IDENTITY_TOL;
    Ok(AnchoredReport {
        fixed_point_residual,
        max_x_residual: mx,
        max_primal_residual: mp,
        max_dual_residual: md,
        n_max,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueReport {
    pub values: Vec<f64>,
    pub eps: Vec<f64>,
    pub delta: Vec<f64>,
    pub converged_value: f64,
    /// Largest `|ε_n|` and `|δ_n|` over the last ⌈20%⌉ of records.
    pub eps_tail: f64,
    pub delta_tail: f64,
}

/// Value series `f(p_n) + g(q_n)` and the monitors
/// `ε_n = ⟨y − q_n − v, p_n − q_n − v⟩`,
/// `δ_n = ⟨p_n − q_n − v, p_n − (x_n + n v)⟩`.
pub fn value_monitor(trace: &RunTrace, v: &Vector, y: Option<&Vector>) -> Result<ValueReport> {
    let y = y.ok_or(Error::MissingTestPoint)?;
    let dim = trace.dim();
    v.check_dim(dim)?;
    y.check_dim(dim)?;
    let mut values = Vec::with_capacity(trace.records.len());
    let mut eps = Vec::with_capacity(trace.records.len());
    let mut delta = Vec::with_capacity(trace.records.len());
    for r in &trace.records {
        let f = r.f_val.ok_or_else(|| Error::MissingFunction("A".into()))?;
        let g = r.g_val.ok_or_else(|| Error::MissingFunction("B".into()))?;
        values.push(f + g);
        let w = &(&r.p - &r.q) - v;
        eps.push((&(y - &r.q) - v).dot(&w));
        delta.push(w.dot(&(&r.p - &RunTrace::companion(r, v))));
    }
    let tail = tail_len(values.len());
    let tail_max = |s: &[f64]| s[s.len() - tail..].iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    Ok(ValueReport {
        converged_value: *values.last().expect("trace is never empty"),
        eps_tail: tail_max(&eps),
        delta_tail: tail_max(&delta),
        values,
        eps,
        delta,
    })
}

pub(crate) fn tail_len(len: usize) -> usize {
    (len as f64 * 0.2).ceil().max(1.0) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DivergenceReport {
    pub n: usize,
    pub primal_norm: f64,
    /// `0.5 · N · ‖v_R‖ − C`.
    pub bound: f64,
    pub constant: f64,
    pub pass: bool,
}

/// Checks `‖p_N‖ ≥ 0.5 · N · ‖v_R‖ − C` at the last record.
pub fn divergence_certificate(trace: &RunTrace, v_r: &Vector, constant: f64) -> DivergenceReport {
    let last = trace.last();
    let primal_norm = last.p.norm();
    let bound = 0.5 * last.n as f64 * v_r.norm() - constant;
    DivergenceReport { n: last.n, primal_norm, bound, constant, pass: primal_norm >= bound }
}

/// Largest `‖step_diff_{n+1}‖ − ‖step_diff_n‖` over consecutive records.
pub fn max_step_norm_increase(trace: &RunTrace) -> f64 {
    trace
        .records
        .windows(2)
        .map(|w| w[1].step_diff.norm() - w[0].step_diff.norm())
        .fold(f64::NEG_INFINITY, f64::max)
}
