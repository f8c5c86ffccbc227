//! Shared data model: operator handles, problem specifications, per-iteration
//! records and displacement estimates.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::Vector;

/// Default tolerance for pointwise identities that hold exactly in exact
/// arithmetic.
pub const IDENTITY_TOL: f64 = 1e-10;

/// Default tolerance for limits (convergence checks).
pub const CONVERGENCE_TOL: f64 = 1e-6;

type ResolventFn = dyn Fn(&Vector) -> Vector + Send + Sync;
type ValueFn = dyn Fn(&Vector) -> f64 + Send + Sync;

/// A maximally monotone operator `A`, represented by its resolvent
/// `J_A = (Id + A)^{-1}`.
///
/// When `A = ∂f` for a known `f`, the handle also carries `f` as an
/// extended-real function (`+∞` outside `dom f`).
#[derive(Clone)]
pub struct OperatorHandle {
    dim: usize,
    label: String,
    resolvent: Arc<ResolventFn>,
    function: Option<Arc<ValueFn>>,
}

impl OperatorHandle {
    pub fn new<F>(dim: usize, label: impl Into<String>, resolvent: F) -> Self
    where
        F: Fn(&Vector) -> Vector + Send + Sync + 'static,
    {
        Self { dim, label: label.into(), resolvent: Arc::new(resolvent), function: None }
    }

    /// Attaches the function `f` with `A = ∂f`.
    pub fn with_function<F>(mut self, f: F) -> Self
    where
        F: Fn(&Vector) -> f64 + Send + Sync + 'static,
    {
        self.function = Some(Arc::new(f));
        self
    }

    pub(crate) fn with_shared_function(mut self, f: Option<Arc<ValueFn>>) -> Self {
        self.function = f;
        self
    }

    pub(crate) fn shared_function(&self) -> Option<Arc<ValueFn>> {
        self.function.clone()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `J_A x`, with a dimension check.
    pub fn resolve(&self, x: &Vector) -> Result<Vector> {
        x.check_dim(self.dim)?;
        Ok((self.resolvent)(x))
    }

    /// `J_A x` without the dimension check.
    #[inline]
    pub fn apply(&self, x: &Vector) -> Vector {
        (self.resolvent)(x)
    }

    /// `R_A x = 2 J_A x - x`.
    #[inline]
    pub fn reflected(&self, x: &Vector) -> Vector {
        let j = self.apply(x);
        j.zip_map(x, |a, b| 2.0 * a - b)
    }

    pub fn has_function(&self) -> bool {
        self.function.is_some()
    }

    /// Evaluates `f` at `x`; `+∞` outside its domain.
    pub fn evaluate(&self, x: &Vector) -> Result<f64> {
        x.check_dim(self.dim)?;
        match &self.function {
            Some(f) => Ok(f(x)),
            None => Err(Error::MissingFunction(self.label.clone())),
        }
    }

    pub(crate) fn evaluate_opt(&self, x: &Vector) -> Option<f64> {
        self.function.as_ref().map(|f| f(x))
    }
}

impl fmt::Debug for OperatorHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperatorHandle")
            .field("dim", &self.dim)
            .field("label", &self.label)
            .field("evaluable", &self.function.is_some())
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FirmNonexpansivenessReport {
    /// Largest `‖Jx − Jy‖² − ⟨Jx − Jy, x − y⟩` over the samples.
    pub max_violation: f64,
    pub pass: bool,
}

/// Certifies `‖Jx − Jy‖² ≤ ⟨Jx − Jy, x − y⟩ + tol` on sample pairs.
pub fn check_firm_nonexpansiveness(
    op: &OperatorHandle,
    samples: &[(Vector, Vector)],
    tol: f64,
) -> Result<FirmNonexpansivenessReport> {
    let mut max_violation = f64::NEG_INFINITY;
    for (x, y) in samples {
        let jx = op.resolve(x)?;
        let jy = op.resolve(y)?;
        let dj = &jx - &jy;
        let violation = dj.norm_sq() - dj.dot(&(x - y));
        max_violation = max_violation.max(violation);
    }
    if samples.is_empty() {
        max_violation = 0.0;
    }
    Ok(FirmNonexpansivenessReport { max_violation, pass: max_violation <= tol })
}

/// The ordered pair `(A, B)` together with a starting point.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub dim: usize,
    pub op_a: OperatorHandle,
    pub op_b: OperatorHandle,
    pub start: Vector,
    pub scenario_name: String,
}

impl ProblemSpec {
    pub fn new(
        scenario_name: impl Into<String>,
        op_a: OperatorHandle,
        op_b: OperatorHandle,
        start: Vector,
    ) -> Result<Self> {
        let dim = op_a.dim();
        if op_b.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: op_b.dim() });
        }
        start.check_dim(dim)?;
        Ok(Self { dim, op_a, op_b, start, scenario_name: scenario_name.into() })
    }

    pub fn with_start(&self, start: Vector) -> Result<Self> {
        start.check_dim(self.dim)?;
        Ok(Self { start, ..self.clone() })
    }

    pub fn functions_evaluable(&self) -> bool {
        self.op_a.has_function() && self.op_b.has_function()
    }
}

/// Diagnostics of one Douglas–Rachford iteration at `x_n = Tⁿx`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateRecord {
    pub n: usize,
    /// Governing iterate `x_n`.
    pub x: Vector,
    /// Primal shadow `J_A x_n`.
    pub p: Vector,
    /// Partner shadow `J_B R_A x_n`.
    pub q: Vector,
    /// Dual shadow `J_{A⁻¹} x_n`.
    pub d: Vector,
    /// Dual partner `J_{B⁻¹} R_A x_n`.
    pub e: Vector,
    /// `x_n − x_{n+1}`.
    pub step_diff: Vector,
    pub f_val: Option<f64>,
    pub g_val: Option<f64>,
    pub eps_n: Option<f64>,
    pub delta_n: Option<f64>,
}

impl IterateRecord {
    /// Max-norm residuals of `p − q = step`, `d + e = step` and `p + d = x`.
    pub fn identity_residuals(&self) -> [f64; 3] {
        let max_abs = |v: Vector| v.as_slice().iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        [
            max_abs(&(&self.p - &self.q) - &self.step_diff),
            max_abs(&(&self.d + &self.e) - &self.step_diff),
            max_abs(&(&self.p + &self.d) - &self.x),
        ]
    }

    pub fn satisfies_identities(&self, tol: f64) -> bool {
        self.identity_residuals().iter().all(|r| *r <= tol)
    }

    pub fn value(&self) -> Option<f64> {
        Some(self.f_val? + self.g_val?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimationMethod {
    LastDifference,
    TailAverage,
    Cesaro,
}

impl EstimationMethod {
    pub const ALL: [EstimationMethod; 3] =
        [EstimationMethod::LastDifference, EstimationMethod::TailAverage, EstimationMethod::Cesaro];
}

/// An estimate of `(v, v_D, v_R)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisplacementEstimate {
    pub v: Vector,
    pub v_d: Vector,
    pub v_r: Vector,
    pub method: EstimationMethod,
    /// `‖v − (v_d + v_r)‖`.
    pub residual: f64,
    pub iterations_used: usize,
}

impl DisplacementEstimate {
    pub fn new(v: Vector, v_d: Vector, v_r: Vector, method: EstimationMethod, iterations_used: usize) -> Self {
        let residual = v.dist(&(&v_d + &v_r));
        Self { v, v_d, v_r, method, residual, iterations_used }
    }

    pub fn zero(dim: usize, method: EstimationMethod) -> Self {
        Self::new(Vector::zeros(dim), Vector::zeros(dim), Vector::zeros(dim), method, 0)
    }
}
