//! Ground truth: closed forms for the worked examples, a brute-force grid
//! minimizer, and recession-cone projections for catalog sets.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ProblemSpec;
use crate::par::Execution;
use crate::prox::{resolvent_of_shift_plus, AffineSubspaceSet, OperatorDescriptor, TranslatedConeSet};
use crate::vector::Vector;

/// Parameters of the shifted-cone example `(A, B) = (N_{a+K}, b + N_K)` with
/// `K = ℝ₊ × {0}`, `a = (α, β)`, `b = (γ, δ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConeExampleParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl ConeExampleParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Result<Self> {
        if [alpha, beta, gamma, delta].iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParams("cone example parameters must be finite".into()));
        }
        if gamma >= 0.0 {
            return Err(Error::InvalidParams(format!("gamma must be negative, got {gamma}")));
        }
        Ok(Self { alpha, beta, gamma, delta })
    }

    pub fn a(&self) -> Vector {
        Vector::from_raw(vec![self.alpha, self.beta])
    }

    pub fn b(&self) -> Vector {
        Vector::from_raw(vec![self.gamma, self.delta])
    }

    pub fn problem(&self, start: Vector) -> Result<ProblemSpec> {
        let op_a = TranslatedConeSet::new(self.a(), 0)?.normal_cone();
        let k = TranslatedConeSet::new(Vector::zeros(2), 0)?.normal_cone();
        let op_b = resolvent_of_shift_plus(&k, &-&self.b())?;
        ProblemSpec::new("cone_example", op_a, op_b, start)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeExampleTruth {
    pub v_d: Vector,
    pub v_r: Vector,
    pub v: Vector,
    /// `Z = [z_left, ∞) × {level}`.
    pub z_left: f64,
    /// `Z̃ = [ztilde_left, ∞) × {level}`.
    pub ztilde_left: f64,
    pub level: f64,
    pub strict_inclusion: bool,
    /// A point of `Fix(v + T)`.
    pub anchor: Vector,
}

impl ConeExampleTruth {
    pub fn z_contains(&self, x: &Vector, tol: f64) -> bool {
        x[0] >= self.z_left - tol && (x[1] - self.level).abs() <= tol
    }

    pub fn ztilde_contains(&self, x: &Vector, tol: f64) -> bool {
        x[0] >= self.ztilde_left - tol && (x[1] - self.level).abs() <= tol
    }
}

pub fn cone_example_truth(p: &ConeExampleParams) -> Result<ConeExampleTruth> {
    let p = ConeExampleParams::new(p.alpha, p.beta, p.gamma, p.delta)?;
    let z_left = p.gamma.max(p.alpha);
    // With f = (s, 2β) and s ≥ max(α, γ): J_A f = (s, β), R_A f = (s, 0),
    // J_B R_A f = (s − γ, 0), so T f = (s − γ, β) = f − v.
    let s = z_left + 1.0;
    Ok(ConeExampleTruth {
        v_d: Vector::from_raw(vec![0.0, p.beta]),
        v_r: Vector::from_raw(vec![p.gamma, 0.0]),
        v: Vector::from_raw(vec![p.gamma, p.beta]),
        z_left,
        ztilde_left: p.alpha.max(0.0),
        level: p.beta,
        strict_inclusion: p.alpha < 0.0,
        anchor: Vector::from_raw(vec![s, 2.0 * p.beta]),
    })
}

/// Tolerance for the orthogonality and membership preconditions of the
/// affine example.
pub const AFFINE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct AffineExampleTruth {
    pub v_d: Vector,
    pub v_r: Vector,
    pub v: Vector,
    /// `Z = a + U`.
    pub z: AffineSubspaceSet,
}

impl AffineExampleTruth {
    pub fn z_contains(&self, x: &Vector, tol: f64) -> bool {
        let rel = x - self.z.basepoint();
        (&rel - &self.z.project_linear(&rel)).norm() <= tol
    }

    /// `a + b ∈ Fix(v + T)`.
    pub fn anchor(&self) -> Vector {
        self.v.clone()
    }
}

/// Truth for `(A, B) = (N_{a+U}, b + N_U)`; `u` supplies the orthonormal basis
/// of `U` (its basepoint is ignored).
pub fn affine_example_truth(u: &AffineSubspaceSet, a: &Vector, b: &Vector) -> Result<AffineExampleTruth> {
    a.check_dim(u.dim())?;
    b.check_dim(u.dim())?;
    let residual = u.basis().iter().map(|e| a.dot(e).abs()).fold(0.0, f64::max);
    if residual > AFFINE_TOL {
        return Err(Error::NotOrthogonal { residual });
    }
    let residual = b.dist(&u.project_linear(b));
    if residual > AFFINE_TOL {
        return Err(Error::NotInSubspace { residual });
    }
    Ok(AffineExampleTruth {
        v_d: a.clone(),
        v_r: b.clone(),
        v: a + b,
        z: AffineSubspaceSet::new(a.clone(), u.basis().to_vec())?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HalfspaceL1Truth {
    pub v_d: Vector,
    pub v_r: Vector,
    pub v: Vector,
    /// `B ∩ C ≠ ∅`.
    pub feasible: bool,
}

/// Truth for `f = ι_B`, `B = {⟨x, u⟩ ≤ η}`, `g = ‖·‖₁ + ι_{[−c, c]}` with
/// finite `c`.
///
/// `B − C` is the halfspace `{⟨y, u⟩ ≤ η + Σ c_i |u_i|}` (a halfspace plus a
/// symmetric box), so `v_D = P_{B−C}(0)` has a closed form for every `u`.
pub fn halfspace_l1_truth(u: &Vector, eta: f64, c: &[f64]) -> Result<HalfspaceL1Truth> {
    if c.len() != u.dim() {
        return Err(Error::DimensionMismatch { expected: u.dim(), found: c.len() });
    }
    if u.norm_sq() == 0.0 || !eta.is_finite() {
        return Err(Error::InvalidParams("need a nonzero normal and a finite offset".into()));
    }
    if let Some((i, ci)) = c.iter().enumerate().find(|(_, ci)| !(ci.is_finite() && **ci >= 0.0)) {
        return Err(Error::InvalidParams(format!("c[{i}] = {ci} must be finite and nonnegative")));
    }
    let support: f64 = c.iter().zip(u.as_slice()).map(|(ci, ui)| ci * ui.abs()).sum();
    let offset = eta + support;
    let feasible = offset >= 0.0;
    let v_d = if feasible { Vector::zeros(u.dim()) } else { u * (offset / u.norm_sq()) };
    Ok(HalfspaceL1Truth { v_r: Vector::zeros(u.dim()), v: v_d.clone(), v_d, feasible })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    lo: Vector,
    hi: Vector,
    points_per_axis: usize,
}

/// Grids above this dimension are refused.
pub const MAX_GRID_DIM: usize = 4;

impl GridSpec {
    pub fn new(lo: Vector, hi: Vector, points_per_axis: usize) -> Result<Self> {
        hi.check_dim(lo.dim())?;
        if lo.as_slice().iter().zip(hi.as_slice()).any(|(l, h)| l >= h) {
            return Err(Error::InvalidParams("grid needs lo < hi componentwise".into()));
        }
        if points_per_axis < 3 {
            return Err(Error::InvalidParams("grid needs at least 3 points per axis".into()));
        }
        if lo.dim() > MAX_GRID_DIM {
            return Err(Error::InvalidParams(format!("grid dimension {} exceeds {MAX_GRID_DIM}", lo.dim())));
        }
        Ok(Self { lo, hi, points_per_axis })
    }

    pub fn dim(&self) -> usize {
        self.lo.dim()
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / (self.points_per_axis - 1) as f64
    }

    /// Grid point with lexicographic index `idx` (first coordinate slowest).
    pub fn point(&self, mut idx: usize) -> Vector {
        let n = self.points_per_axis;
        let mut coords = vec![0.0; self.dim()];
        for axis in (0..self.dim()).rev() {
            let k = idx % n;
            idx /= n;
            coords[axis] = self.lo[axis] + (self.hi[axis] - self.lo[axis]) * k as f64 / (n - 1) as f64;
        }
        Vector::from_raw(coords)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridResult {
    pub argmin: Vector,
    pub min_value: f64,
}

/// Exhaustive minimization of `f(y) + g(y − v)` over the grid. Ties go to
/// the lexicographically smallest point.
pub fn grid_minimize(
    f_eval: &(dyn Fn(&Vector) -> f64 + Sync),
    g_eval: &(dyn Fn(&Vector) -> f64 + Sync),
    v: &Vector,
    grid: &GridSpec,
    exec: Execution,
) -> Result<GridResult> {
    v.check_dim(grid.dim())?;
    let better = |a: (f64, usize), b: (f64, usize)| {
        if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
            b
        } else {
            a
        }
    };
    let (min_value, idx) = exec.map_reduce(
        grid.len(),
        (f64::INFINITY, usize::MAX),
        |i| {
            let y = grid.point(i);
            let val = f_eval(&y) + g_eval(&(&y - v));
            (if val.is_nan() { f64::INFINITY } else { val }, i)
        },
        better,
    );
    if min_value == f64::INFINITY {
        return Err(Error::AllInfinite);
    }
    Ok(GridResult { argmin: grid.point(idx), min_value })
}

/// Closed convex cones with explicit projections.
#[derive(Debug, Clone, PartialEq)]
pub enum ClosedCone {
    /// Product of one-dimensional cones.
    Coordinatewise(Vec<AxisCone>),
    /// Span of an orthonormal basis.
    Subspace(Vec<Vector>),
    /// Orthogonal complement of the span of an orthonormal basis.
    Complement(Vec<Vector>),
    /// `{x : ⟨x, u⟩ ≤ 0}`.
    Halfspace(Vector),
    /// `ℝ₊ u`.
    Ray(Vector),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisCone {
    Free,
    Nonneg,
    Nonpos,
    Zero,
}

impl AxisCone {
    fn polar(self) -> Self {
        match self {
            AxisCone::Free => AxisCone::Zero,
            AxisCone::Zero => AxisCone::Free,
            AxisCone::Nonneg => AxisCone::Nonpos,
            AxisCone::Nonpos => AxisCone::Nonneg,
        }
    }

    fn negate(self) -> Self {
        match self {
            AxisCone::Nonneg => AxisCone::Nonpos,
            AxisCone::Nonpos => AxisCone::Nonneg,
            other => other,
        }
    }

    fn project(self, x: f64) -> f64 {
        match self {
            AxisCone::Free => x,
            AxisCone::Nonneg => x.max(0.0),
            AxisCone::Nonpos => x.min(0.0),
            AxisCone::Zero => 0.0,
        }
    }
}

fn span_projection(basis: &[Vector], x: &Vector) -> Vector {
    basis.iter().fold(Vector::zeros(x.dim()), |acc, b| acc.axpy(x.dot(b), b))
}

impl ClosedCone {
    /// `K^⊖ = {y : ⟨y, k⟩ ≤ 0 for all k ∈ K}`.
    pub fn polar(&self) -> Self {
        match self {
            Self::Coordinatewise(axes) => Self::Coordinatewise(axes.iter().map(|a| a.polar()).collect()),
            Self::Subspace(b) => Self::Complement(b.clone()),
            Self::Complement(b) => Self::Subspace(b.clone()),
            Self::Halfspace(u) => Self::Ray(u.clone()),
            Self::Ray(u) => Self::Halfspace(u.clone()),
        }
    }

    pub fn negate(&self) -> Self {
        match self {
            Self::Coordinatewise(axes) => Self::Coordinatewise(axes.iter().map(|a| a.negate()).collect()),
            Self::Subspace(_) | Self::Complement(_) => self.clone(),
            Self::Halfspace(u) => Self::Halfspace(-u),
            Self::Ray(u) => Self::Ray(-u),
        }
    }

    /// `K^⊕ = −K^⊖`.
    pub fn dual(&self) -> Self {
        self.polar().negate()
    }

    pub fn project(&self, x: &Vector) -> Vector {
        match self {
            Self::Coordinatewise(axes) => {
                Vector::from_raw(x.as_slice().iter().zip(axes).map(|(&c, a)| a.project(c)).collect())
            }
            Self::Subspace(b) => span_projection(b, x),
            Self::Complement(b) => x - &span_projection(b, x),
            Self::Halfspace(u) => x.axpy(-x.dot(u).max(0.0) / u.norm_sq(), u),
            Self::Ray(u) => u * (x.dot(u).max(0.0) / u.norm_sq()),
        }
    }
}

fn box_axis(lo: f64, hi: f64) -> AxisCone {
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => AxisCone::Zero,
        (true, false) => AxisCone::Nonneg,
        (false, true) => AxisCone::Nonpos,
        (false, false) => AxisCone::Free,
    }
}

/// `rec(closure dom A)` for a catalog operator.
pub fn recession_of_domain(desc: &OperatorDescriptor) -> Result<ClosedCone> {
    Ok(match desc {
        OperatorDescriptor::Halfspace { u, .. } => ClosedCone::Halfspace(u.clone()),
        OperatorDescriptor::Box { lo, hi } => {
            ClosedCone::Coordinatewise(lo.iter().zip(hi).map(|(&l, &h)| box_axis(l, h)).collect())
        }
        OperatorDescriptor::TranslatedCone { a, axis } => ClosedCone::Coordinatewise(
            (0..a.dim()).map(|i| if i == *axis { AxisCone::Nonneg } else { AxisCone::Zero }).collect(),
        ),
        OperatorDescriptor::Affine { basis, .. } => ClosedCone::Subspace(basis.clone()),
        OperatorDescriptor::L1Box { c } => ClosedCone::Coordinatewise(
            c.iter().map(|ci| if ci.is_finite() { AxisCone::Zero } else { AxisCone::Free }).collect(),
        ),
        OperatorDescriptor::Shift { inner, .. } | OperatorDescriptor::Translate { inner, .. } => {
            recession_of_domain(inner)?
        }
    })
}

/// `rec(closure ran A)` for a catalog operator.
pub fn recession_of_range(desc: &OperatorDescriptor) -> Result<ClosedCone> {
    Ok(match desc {
        // The range of a normal cone operator of a polyhedral set is the
        // polar of the recession cone of the set.
        OperatorDescriptor::Halfspace { .. }
        | OperatorDescriptor::Box { .. }
        | OperatorDescriptor::TranslatedCone { .. }
        | OperatorDescriptor::Affine { .. } => recession_of_domain(desc)?.polar(),
        // ∂‖·‖₁ is bounded; a finite bound c_i makes coordinate i unbounded.
        OperatorDescriptor::L1Box { c } => ClosedCone::Coordinatewise(
            c.iter().map(|ci| if ci.is_finite() { AxisCone::Free } else { AxisCone::Zero }).collect(),
        ),
        OperatorDescriptor::Shift { inner, .. } | OperatorDescriptor::Translate { inner, .. } => {
            recession_of_range(inner)?
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecessionTruth {
    /// `P_{(rec dom A)^⊕} v`.
    pub v_d_from_domain: Vector,
    /// `P_{−rec dom A} v`.
    pub v_r_from_domain: Vector,
    /// `P_{−rec ran A} v`.
    pub v_d_from_range: Vector,
    /// `P_{(rec ran A)^⊕} v`.
    pub v_r_from_range: Vector,
}

/// The four recession-cone projections of `v` attached to the first
/// operator `A` of a pair.
pub fn recession_projection_truth(op_a: &OperatorDescriptor, v: &Vector) -> Result<RecessionTruth> {
    v.check_dim(op_a.dim())?;
    if !op_a.validation_errors().is_empty() {
        return Err(Error::UnsupportedSet(op_a.validation_errors().join("; ")));
    }
    let dom = recession_of_domain(op_a)?;
    let ran = recession_of_range(op_a)?;
    Ok(RecessionTruth {
        v_d_from_domain: dom.dual().project(v),
        v_r_from_domain: dom.negate().project(v),
        v_d_from_range: ran.negate().project(v),
        v_r_from_range: ran.dual().project(v),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prox::{l1_box_operator, HalfspaceSet};
    use crate::testutil::{assert_close, v, vec2};

    fn cone(a: f64, b: f64, g: f64, d: f64) -> ConeExampleTruth {
        cone_example_truth(&ConeExampleParams { alpha: a, beta: b, gamma: g, delta: d }).unwrap()
    }

    #[test]
    fn cone_truth_first_parameter_set() {
        let t = cone(-2.0, 3.0, -1.0, 0.0);
        assert_eq!(t.v_d, vec2(0.0, 3.0));
        assert_eq!(t.v_r, vec2(-1.0, 0.0));
        assert_eq!(t.v, vec2(-1.0, 3.0));
        assert_eq!((t.z_left, t.level, t.ztilde_left), (-1.0, 3.0, 0.0));
        assert!(t.strict_inclusion);
    }

    #[test]
    fn cone_truth_other_parameter_sets() {
        let t = cone(5.0, 0.0, -1.0, 7.0);
        assert_eq!((t.z_left, t.ztilde_left), (5.0, 5.0));
        assert!(!t.strict_inclusion);
        let t = cone(0.0, 0.0, -1.0, 0.0);
        assert_eq!((t.z_left, t.ztilde_left), (0.0, 0.0));
        assert!(!t.strict_inclusion);
    }

    #[test]
    fn cone_truth_rejects_nonnegative_gamma() {
        let p = ConeExampleParams { alpha: 0.0, beta: 0.0, gamma: 0.0, delta: 0.0 };
        assert!(cone_example_truth(&p).is_err());
    }

    #[test]
    fn cone_anchor_is_fixed_point_of_v_plus_t() {
        for (a, b, g, d) in [(-2.0, 3.0, -1.0, 0.0), (5.0, 0.0, -1.0, 7.0), (0.0, 0.0, -1.0, 0.0), (1.5, -2.0, -0.5, 4.0)] {
            let p = ConeExampleParams::new(a, b, g, d).unwrap();
            let t = cone_example_truth(&p).unwrap();
            let spec = p.problem(t.anchor.clone()).unwrap();
            let tf = crate::engine::dr_step(&spec, &t.anchor).unwrap();
            assert_close(&tf, &(&t.anchor - &t.v), 1e-12);
        }
    }

    #[test]
    fn ztilde_subset_of_z_on_samples() {
        for (a, b) in [(-2.0, 3.0), (5.0, 0.0), (0.0, 0.0), (-0.5, 1.0)] {
            let t = cone(a, b, -1.0, 0.0);
            let mut strict = false;
            for i in 0..=200 {
                let x = vec2(-5.0 + 0.05 * i as f64, b);
                if t.ztilde_contains(&x, 0.0) {
                    assert!(t.z_contains(&x, 0.0));
                }
                strict |= t.z_contains(&x, 0.0) && !t.ztilde_contains(&x, 0.0);
            }
            assert_eq!(strict, a < 0.0);
        }
    }

    #[test]
    fn affine_truth_cases() {
        let u = AffineSubspaceSet::new(vec2(0.0, 0.0), vec![vec2(1.0, 0.0)]).unwrap();
        let t = affine_example_truth(&u, &vec2(0.0, 3.0), &vec2(2.0, 0.0)).unwrap();
        assert_eq!(t.v, vec2(2.0, 3.0));
        assert!(t.z_contains(&vec2(-17.0, 3.0), 1e-12));
        assert!(!t.z_contains(&vec2(0.0, 2.0), 1e-12));

        let z = vec2(0.0, 0.0);
        let t = affine_example_truth(&u, &z, &z).unwrap();
        assert_eq!(t.v, z);
        assert!(t.z_contains(&vec2(4.0, 0.0), 1e-12));

        let point = AffineSubspaceSet::new(vec2(0.0, 0.0), vec![]).unwrap();
        let t = affine_example_truth(&point, &vec2(1.0, 1.0), &z).unwrap();
        assert_eq!(t.v, vec2(1.0, 1.0));
        assert!(t.z_contains(&vec2(1.0, 1.0), 1e-12) && !t.z_contains(&vec2(1.0, 0.0), 1e-6));
    }

    #[test]
    fn affine_truth_checks_preconditions() {
        let u = AffineSubspaceSet::new(vec2(0.0, 0.0), vec![vec2(1.0, 0.0)]).unwrap();
        let z = vec2(0.0, 0.0);
        assert!(matches!(affine_example_truth(&u, &vec2(1.0, 3.0), &z), Err(Error::NotOrthogonal { .. })));
        assert!(matches!(affine_example_truth(&u, &z, &vec2(1.0, 1.0)), Err(Error::NotInSubspace { .. })));
    }

    fn hl1_grid(u: Vector, eta: f64, c: [f64; 2]) -> Vector {
        // P_{B−C}(0) by exhaustive search over differences b − c.
        let hs = HalfspaceSet::new(u, eta).unwrap();
        let grid = GridSpec::new(vec2(-6.0, -6.0), vec2(6.0, 6.0), 241).unwrap();
        let mut best = (f64::INFINITY, Vector::zeros(2));
        for i in 0..grid.len() {
            let b = grid.point(i);
            if !hs.contains(&b) {
                continue;
            }
            // nearest point of b − C to 0 is b − clamp(b, −c, c)
            let cc = vec2(b[0].clamp(-c[0], c[0]), b[1].clamp(-c[1], c[1]));
            let y = &b - &cc;
            if y.norm() < best.0 {
                best = (y.norm(), y);
            }
        }
        best.1
    }

    #[test]
    fn halfspace_l1_truth_cases() {
        let t = halfspace_l1_truth(&vec2(1.0, 0.0), -2.0, &[1.0, 1.0]).unwrap();
        assert_eq!(t.v, vec2(-1.0, 0.0));
        assert_close(&t.v, &hl1_grid(vec2(1.0, 0.0), -2.0, [1.0, 1.0]), 1e-12);
        assert!(!t.feasible);

        let t = halfspace_l1_truth(&vec2(1.0, 0.0), 0.0, &[1.0, 1.0]).unwrap();
        assert_eq!(t.v, vec2(0.0, 0.0));
        assert!(t.feasible);

        let t = halfspace_l1_truth(&vec2(0.0, 1.0), -3.0, &[1.0, 1.0]).unwrap();
        assert_eq!(t.v, vec2(0.0, -2.0));
        assert_close(&t.v, &hl1_grid(vec2(0.0, 1.0), -3.0, [1.0, 1.0]), 1e-12);
    }

    #[test]
    fn halfspace_l1_truth_general_normal_matches_grid() {
        // η' = −4 + 0.5 + 1 = −2.5; v = η' u / ‖u‖² = (−0.5, −1)
        let u = vec2(1.0, 2.0);
        let t = halfspace_l1_truth(&u, -4.0, &[0.5, 0.5]).unwrap();
        assert_close(&t.v, &vec2(-0.5, -1.0), 1e-15);
        assert_close(&t.v, &hl1_grid(u, -4.0, [0.5, 0.5]), 0.05);
    }

    #[test]
    fn halfspace_l1_truth_rejects_infinite_c() {
        assert!(halfspace_l1_truth(&vec2(1.0, 0.0), 0.0, &[f64::INFINITY, 1.0]).is_err());
    }

    #[test]
    fn grid_quadratic_midpoint() {
        let grid = GridSpec::new(vec2(-2.0, -2.0), vec2(2.0, 2.0), 81).unwrap();
        let f = |y: &Vector| 0.5 * (y - &vec2(1.0, 0.0)).norm_sq();
        let g = |y: &Vector| 0.5 * (y - &vec2(0.0, 1.0)).norm_sq();
        let r = grid_minimize(&f, &g, &vec2(0.0, 0.0), &grid, Execution::default()).unwrap();
        assert_close(&r.argmin, &vec2(0.5, 0.5), 1e-12);
    }

    #[test]
    fn grid_halfspace_l1_oracle() {
        let grid = GridSpec::new(vec2(-4.0, -4.0), vec2(2.0, 2.0), 601).unwrap();
        let hs = HalfspaceSet::new(vec2(1.0, 0.0), -2.0).unwrap().normal_cone();
        let g = l1_box_operator(&[1.0, 1.0]).unwrap();
        let fe = |y: &Vector| hs.evaluate(y).unwrap();
        let ge = |y: &Vector| g.evaluate(y).unwrap();
        let r = grid_minimize(&fe, &ge, &vec2(-1.0, 0.0), &grid, Execution::default()).unwrap();
        assert_close(&r.argmin, &vec2(-2.0, 0.0), 1e-12);
        assert!((r.min_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_all_infinite_and_ties() {
        let grid = GridSpec::new(v(&[-1.0]), v(&[1.0]), 5).unwrap();
        let inf = |_: &Vector| f64::INFINITY;
        let zero = |_: &Vector| 0.0;
        assert!(matches!(
            grid_minimize(&inf, &zero, &v(&[0.0]), &grid, Execution::Sequential),
            Err(Error::AllInfinite)
        ));
        let r = grid_minimize(&zero, &zero, &v(&[0.0]), &grid, Execution::default()).unwrap();
        assert_eq!(r.argmin, v(&[-1.0]));
    }

    #[test]
    fn grid_strategies_agree() {
        let grid = GridSpec::new(v(&[-1.0, -1.0, -1.0]), v(&[1.0, 1.0, 1.0]), 21).unwrap();
        let f = |y: &Vector| y.l1_norm();
        let g = |y: &Vector| (y[0] - 0.3).abs();
        let s = grid_minimize(&f, &g, &v(&[0.0, 0.0, 0.0]), &grid, Execution::Sequential).unwrap();
        let p = grid_minimize(&f, &g, &v(&[0.0, 0.0, 0.0]), &grid, Execution::Parallel).unwrap();
        assert_eq!(s, p);
    }

    #[test]
    fn grid_refinement_does_not_worsen_much() {
        let f = |y: &Vector| (y[0] - 0.123).abs() + (y[1] + 0.456).abs();
        let g = |_: &Vector| 0.0;
        let z = vec2(0.0, 0.0);
        let coarse = GridSpec::new(vec2(-1.0, -1.0), vec2(1.0, 1.0), 21).unwrap();
        let fine = GridSpec::new(vec2(-1.0, -1.0), vec2(1.0, 1.0), 41).unwrap();
        let a = grid_minimize(&f, &g, &z, &coarse, Execution::default()).unwrap();
        let b = grid_minimize(&f, &g, &z, &fine, Execution::default()).unwrap();
        // Lipschitz constant √2 times the fine cell diagonal
        let bound = 2.0_f64.sqrt() * fine.spacing(0) * 2.0_f64.sqrt();
        assert!(b.min_value <= a.min_value + bound);
    }

    #[test]
    fn grid_spec_validation() {
        assert!(GridSpec::new(vec2(0.0, 0.0), vec2(1.0, 0.0), 5).is_err());
        assert!(GridSpec::new(vec2(0.0, 0.0), vec2(1.0, 1.0), 2).is_err());
        assert!(GridSpec::new(v(&[0.0; 5]), v(&[1.0; 5]), 3).is_err());
    }

    #[test]
    fn recession_truth_cone_example() {
        let a = OperatorDescriptor::TranslatedCone { a: vec2(-2.0, 3.0), axis: 0 };
        let r = recession_projection_truth(&a, &vec2(-1.0, 3.0)).unwrap();
        assert_eq!(r.v_r_from_domain, vec2(-1.0, 0.0));
        assert_eq!(r.v_d_from_domain, vec2(0.0, 3.0));
        assert_eq!(r.v_d_from_range, vec2(0.0, 3.0));
        assert_eq!(r.v_r_from_range, vec2(-1.0, 0.0));
    }

    #[test]
    fn recession_truth_affine_example() {
        let a = OperatorDescriptor::Affine { a: vec2(0.0, 3.0), basis: vec![vec2(1.0, 0.0)] };
        let r = recession_projection_truth(&a, &vec2(2.0, 3.0)).unwrap();
        assert_eq!(r.v_d_from_domain, vec2(0.0, 3.0));
        assert_eq!(r.v_r_from_domain, vec2(2.0, 0.0));
        assert_eq!(r.v_d_from_range, vec2(0.0, 3.0));
        assert_eq!(r.v_r_from_range, vec2(2.0, 0.0));
    }

    #[test]
    fn recession_truth_of_zero_is_zero() {
        let a = OperatorDescriptor::Halfspace { u: vec2(1.0, 1.0), eta: 0.0 };
        let z = vec2(0.0, 0.0);
        let r = recession_projection_truth(&a, &z).unwrap();
        for p in [r.v_d_from_domain, r.v_r_from_domain, r.v_d_from_range, r.v_r_from_range] {
            assert_eq!(p, z);
        }
    }

    #[test]
    fn recession_truth_rejects_invalid_descriptor() {
        let a = OperatorDescriptor::Halfspace { u: vec2(0.0, 0.0), eta: 0.0 };
        assert!(matches!(recession_projection_truth(&a, &vec2(1.0, 0.0)), Err(Error::UnsupportedSet(_))));
    }

    #[test]
    fn cone_projections_are_moreau_pairs() {
        let cones = [
            ClosedCone::Coordinatewise(vec![AxisCone::Nonneg, AxisCone::Free, AxisCone::Zero]),
            ClosedCone::Halfspace(v(&[1.0, -2.0, 0.5])),
            ClosedCone::Subspace(vec![v(&[0.0, 1.0, 0.0])]),
        ];
        for k in cones {
            for x in crate::testutil::random_points(3, 50, 4) {
                let sum = &k.project(&x) + &k.polar().project(&x);
                assert_close(&sum, &x, 1e-12);
                assert!(k.project(&x).dot(&k.polar().project(&x)).abs() < 1e-10);
            }
        }
    }
}
