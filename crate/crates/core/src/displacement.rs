//! Estimating the minimal displacement vector `v = v_D + v_R` from a trace,
//! and the normal problem `0 ∈ −v + Ax + B(x − v)`.

use serde::Serialize;

use crate::engine::{dr_step, run, tail_len, RunConfig, RunTrace};
use crate::error::{Error, Result};
use crate::model::{DisplacementEstimate, EstimationMethod, IterateRecord, ProblemSpec, CONVERGENCE_TOL};
use crate::par::Execution;
use crate::prox::{resolvent_of_shift_plus, translate_operator_arg};
use crate::vector::Vector;

/// Minimum number of records accepted by the estimators.
pub const MIN_RECORDS: usize = 10;

/// Methods that disagree by more than this have not converged yet.
pub const AGREEMENT_TOL: f64 = 5e-3;

pub fn estimate_v(trace: &RunTrace, method: EstimationMethod) -> Result<DisplacementEstimate> {
    estimate_from_records(&trace.records, method)
}

/// Mean per-step drift of `x`, `d` and `p` between two records.
fn drift(a: &IterateRecord, b: &IterateRecord, method: EstimationMethod) -> DisplacementEstimate {
    let steps = (b.n - a.n) as f64;
    let inv = 1.0 / steps;
    DisplacementEstimate::new(
        &(&a.x - &b.x) * inv,
        &(&a.d - &b.d) * inv,
        &(&a.p - &b.p) * inv,
        method,
        b.n,
    )
}

pub fn estimate_from_records(records: &[IterateRecord], method: EstimationMethod) -> Result<DisplacementEstimate> {
    if records.len() < MIN_RECORDS {
        return Err(Error::InsufficientData { needed: MIN_RECORDS, found: records.len() });
    }
    let last = &records[records.len() - 1];
    Ok(match method {
        EstimationMethod::LastDifference => {
            let prev = &records[records.len() - 2];
            if last.n == prev.n + 1 {
                DisplacementEstimate::new(
                    prev.step_diff.clone(),
                    &prev.d - &last.d,
                    &prev.p - &last.p,
                    method,
                    last.n,
                )
            } else {
                drift(prev, last, method)
            }
        }
        EstimationMethod::TailAverage => {
            let k = tail_len(records.len()).max(2);
            drift(&records[records.len() - k], last, method)
        }
        EstimationMethod::Cesaro => {
            let first = &records[0];
            let n = last.n as f64;
            let v = &(&first.x - &last.x) * (1.0 / (last.n - first.n) as f64);
            DisplacementEstimate::new(v, &last.d * (-1.0 / n), &last.p * (-1.0 / n), method, last.n)
        }
    })
}

/// Estimates by every method.
pub fn estimate_all(trace: &RunTrace) -> Result<Vec<DisplacementEstimate>> {
    EstimationMethod::ALL.iter().map(|&m| estimate_v(trace, m)).collect()
}

/// Largest pairwise distance between the estimates, over `v`, `v_D`, `v_R`.
pub fn method_disagreement(estimates: &[DisplacementEstimate]) -> f64 {
    let mut worst = 0.0_f64;
    for (i, a) in estimates.iter().enumerate() {
        for b in &estimates[i + 1..] {
            worst = worst.max(a.v.dist(&b.v)).max(a.v_d.dist(&b.v_d)).max(a.v_r.dist(&b.v_r));
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecompositionReport {
    /// `|⟨v_D, v_R⟩|`.
    pub inner_product: f64,
    /// `‖v − v_D − v_R‖`.
    pub sum_residual: f64,
    /// `|‖v‖² − ‖v_D‖² − ‖v_R‖²|`.
    pub pythagoras_residual: f64,
    /// A failure means the estimate has not converged.
    pub pass: bool,
}

pub fn check_orthogonal_decomposition(est: &DisplacementEstimate, tol: f64) -> DecompositionReport {
    let inner_product = est.v_d.dot(&est.v_r).abs();
    let sum_residual = est.v.dist(&(&est.v_d + &est.v_r));
    let pythagoras_residual = (est.v.norm_sq() - est.v_d.norm_sq() - est.v_r.norm_sq()).abs();
    DecompositionReport {
        inner_product,
        sum_residual,
        pythagoras_residual,
        pass: inner_product <= tol && sum_residual <= tol && pythagoras_residual <= tol,
    }
}

/// The pair `(−v + A, B(· − v))` built from `base`.
#[derive(Debug, Clone)]
pub struct NormalProblem {
    pub base: ProblemSpec,
    pub v: Vector,
    pub shifted: ProblemSpec,
}

impl NormalProblem {
    /// `‖T'y − T(y + v)‖` at `y`.
    pub fn operator_residual(&self, y: &Vector) -> Result<f64> {
        let lhs = dr_step(&self.shifted, y)?;
        let rhs = dr_step(&self.base, &(y + &self.v))?;
        Ok(lhs.dist(&rhs))
    }

    /// Worst [`operator_residual`](Self::operator_residual) over `points`.
    pub fn max_operator_residual(&self, points: &[Vector], exec: Execution) -> Result<f64> {
        exec.map(points, |y| self.operator_residual(y))
            .into_iter()
            .try_fold(0.0_f64, |m, r| Ok(m.max(r?)))
    }
}

pub fn build_normal_problem(spec: &ProblemSpec, v: &Vector) -> Result<NormalProblem> {
    v.check_dim(spec.dim)?;
    if !v.is_finite() {
        return Err(Error::InvalidParams("displacement vector must be finite".into()));
    }
    let op_a = resolvent_of_shift_plus(&spec.op_a, v)?;
    let op_b = translate_operator_arg(&spec.op_b, v)?;
    let shifted = ProblemSpec::new(format!("{}/normal", spec.scenario_name), op_a, op_b, spec.start.clone())?;
    Ok(NormalProblem { base: spec.clone(), v: v.clone(), shifted })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalSolution {
    pub z_bar: Vector,
    /// `f(z̄) + g(z̄ − v)` when both functions are evaluable.
    pub mu: Option<f64>,
    pub iterations: usize,
    /// Final `‖y_N − T'y_N‖`.
    pub residual: f64,
    /// Final primal-shadow increment.
    pub shadow_increment: f64,
}

/// Runs plain DR on the shifted (consistent) pair and returns its primal
/// shadow limit.
pub fn solve_normal(np: &NormalProblem, cfg: &RunConfig) -> Result<NormalSolution> {
    let trace = run(&np.shifted, cfg)?;
    let last = trace.last();
    let residual = last.step_diff.norm();
    let shadow_increment = match trace.records.as_slice() {
        [.., a, b] => a.p.dist(&b.p),
        _ => f64::INFINITY,
    };
    if !(residual <= CONVERGENCE_TOL && shadow_increment <= CONVERGENCE_TOL) {
        return Err(Error::NoConvergence { iterations: trace.iterations, residual: residual.max(shadow_increment) });
    }
    let z_bar = last.p.clone();
    let mu = match (np.base.op_a.evaluate_opt(&z_bar), np.base.op_b.evaluate_opt(&(&z_bar - &np.v))) {
        (Some(f), Some(g)) => Some(f + g),
        _ => None,
    };
    Ok(NormalSolution { z_bar, mu, iterations: trace.iterations, residual, shadow_increment })
}
