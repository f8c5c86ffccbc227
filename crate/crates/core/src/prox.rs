//! Closed-form resolvents for the operator catalog, and the resolvent algebra
//! (reflection, inversion, shifts and translations) built on top of them.
//!
//! Every catalog operator is a subdifferential, so each handle also carries
//! its function. Indicator functions accept points that violate a constraint
//! by at most [`FEASIBILITY_SLACK`] (relative to the constraint scale) so that
//! projections rounded by one ulp still evaluate as feasible.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::OperatorHandle;
use crate::vector::Vector;

pub const FEASIBILITY_SLACK: f64 = 1e-9;

#[inline]
fn within(value: f64, bound: f64) -> bool {
    value <= bound + FEASIBILITY_SLACK * bound.abs().max(1.0)
}

#[inline]
fn indicator(feasible: bool) -> f64 {
    if feasible {
        0.0
    } else {
        f64::INFINITY
    }
}

fn check_same_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// `{x : ⟨x, u⟩ ≤ η}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfspaceSet {
    u: Vector,
    eta: f64,
    u_norm_sq: f64,
}

impl HalfspaceSet {
    pub fn new(u: Vector, eta: f64) -> Result<Self> {
        let u_norm_sq = u.norm_sq();
        if u_norm_sq <= 0.0 {
            return Err(Error::InvalidParams("halfspace normal must be nonzero".into()));
        }
        if !eta.is_finite() {
            return Err(Error::InvalidParams("halfspace offset must be finite".into()));
        }
        Ok(Self { u, eta, u_norm_sq })
    }

    pub fn normal(&self) -> &Vector {
        &self.u
    }

    pub fn offset(&self) -> f64 {
        self.eta
    }

    pub fn dim(&self) -> usize {
        self.u.dim()
    }

    pub fn contains(&self, x: &Vector) -> bool {
        within(x.dot(&self.u), self.eta)
    }

    fn project_unchecked(&self, x: &Vector) -> Vector {
        let s = x.dot(&self.u);
        if s <= self.eta {
            x.clone()
        } else {
            x.axpy((self.eta - s) / self.u_norm_sq, &self.u)
        }
    }

    /// The normal cone operator `N_B`; its function is `ι_B`.
    pub fn normal_cone(&self) -> OperatorHandle {
        let proj = self.clone();
        let ind = self.clone();
        OperatorHandle::new(self.dim(), format!("N_halfspace(eta={})", self.eta), move |x: &Vector| {
            proj.project_unchecked(x)
        })
        .with_function(move |x: &Vector| indicator(ind.contains(x)))
    }
}

pub fn project_halfspace(x: &Vector, hs: &HalfspaceSet) -> Result<Vector> {
    x.check_dim(hs.dim())?;
    Ok(hs.project_unchecked(x))
}

/// `{x : lo ≤ x ≤ hi}` with extended-real bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSet {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoxSet {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() {
            return Err(Error::Empty);
        }
        check_same_dim(lo.len(), hi.len())?;
        for (i, (&l, &h)) in lo.iter().zip(&hi).enumerate() {
            if l.is_nan() || h.is_nan() || l == f64::INFINITY || h == f64::NEG_INFINITY || l > h {
                return Err(Error::InvalidParams(format!("box bounds [{l}, {h}] at coordinate {i}")));
            }
        }
        Ok(Self { lo, hi })
    }

    /// `[−c, c]` for `c ∈ [0, +∞]^m`.
    pub fn symmetric(c: &[f64]) -> Result<Self> {
        check_nonneg_bounds(c)?;
        Self::new(c.iter().map(|v| -v).collect(), c.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lo
    }

    pub fn upper(&self) -> &[f64] {
        &self.hi
    }

    pub fn contains(&self, x: &Vector) -> bool {
        x.as_slice()
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&c, (&l, &h))| within(l, c) && within(c, h))
    }

    fn project_unchecked(&self, x: &Vector) -> Vector {
        Vector::from_raw(
            x.as_slice()
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .map(|(&c, (&l, &h))| c.max(l).min(h))
                .collect(),
        )
    }

    pub fn normal_cone(&self) -> OperatorHandle {
        let proj = self.clone();
        let ind = self.clone();
        OperatorHandle::new(self.dim(), "N_box", move |x: &Vector| proj.project_unchecked(x))
            .with_function(move |x: &Vector| indicator(ind.contains(x)))
    }
}

pub fn project_box(x: &Vector, bx: &BoxSet) -> Result<Vector> {
    x.check_dim(bx.dim())?;
    Ok(bx.project_unchecked(x))
}

fn check_nonneg_bounds(c: &[f64]) -> Result<()> {
    for (index, &value) in c.iter().enumerate() {
        if value.is_nan() || value < 0.0 {
            return Err(Error::NegativeBound { index, value });
        }
    }
    Ok(())
}

fn prox_l1_box_unchecked(x: &Vector, c: &[f64]) -> Vector {
    Vector::from_raw(
        x.as_slice()
            .iter()
            .zip(c)
            .map(|(&xi, &ci)| {
                // f64::signum(0.0) is 1.0; the formula needs sign(0) = 0.
                let sign = if xi > 0.0 {
                    1.0
                } else if xi < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                (xi.abs() - 1.0).max(0.0).min(ci) * sign
            })
            .collect(),
    )
}

/// Proximal mapping of `‖·‖₁ + ι_{[−c, c]}`:
/// `ξ_i = min{max{|x_i| − 1, 0}, c_i} sign(x_i)`.
pub fn prox_l1_box(x: &Vector, c: &[f64]) -> Result<Vector> {
    check_same_dim(x.dim(), c.len())?;
    check_nonneg_bounds(c)?;
    Ok(prox_l1_box_unchecked(x, c))
}

/// `∂(‖·‖₁ + ι_{[−c, c]})`.
pub fn l1_box_operator(c: &[f64]) -> Result<OperatorHandle> {
    let bx = BoxSet::symmetric(c)?;
    let bounds = c.to_vec();
    Ok(OperatorHandle::new(c.len(), "subdiff_l1_box", move |x: &Vector| {
        prox_l1_box_unchecked(x, &bounds)
    })
    .with_function(move |x: &Vector| if bx.contains(x) { x.l1_norm() } else { f64::INFINITY }))
}

/// `a + K` where `K = ℝ₊` on coordinate `axis` and `{0}` on the others.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslatedConeSet {
    anchor: Vector,
    axis: usize,
}

impl TranslatedConeSet {
    pub fn new(anchor: Vector, axis: usize) -> Result<Self> {
        if axis >= anchor.dim() {
            return Err(Error::InvalidParams(format!(
                "cone axis {axis} out of range for dimension {}",
                anchor.dim()
            )));
        }
        Ok(Self { anchor, axis })
    }

    pub fn anchor(&self) -> &Vector {
        &self.anchor
    }

    pub fn axis(&self) -> usize {
        self.axis
    }

    pub fn dim(&self) -> usize {
        self.anchor.dim()
    }

    pub fn contains(&self, x: &Vector) -> bool {
        x.as_slice().iter().zip(self.anchor.as_slice()).enumerate().all(|(i, (&c, &a))| {
            let rel = c - a;
            let scale = a.abs().max(1.0);
            if i == self.axis {
                rel >= -FEASIBILITY_SLACK * scale
            } else {
                rel.abs() <= FEASIBILITY_SLACK * scale
            }
        })
    }

    fn project_unchecked(&self, x: &Vector) -> Vector {
        Vector::from_raw(
            x.as_slice()
                .iter()
                .zip(self.anchor.as_slice())
                .enumerate()
                .map(|(i, (&c, &a))| if i == self.axis { a + (c - a).max(0.0) } else { a })
                .collect(),
        )
    }

    pub fn normal_cone(&self) -> OperatorHandle {
        let proj = self.clone();
        let ind = self.clone();
        OperatorHandle::new(self.dim(), "N_translated_cone", move |x: &Vector| proj.project_unchecked(x))
            .with_function(move |x: &Vector| indicator(ind.contains(x)))
    }
}

pub fn project_translated_cone(x: &Vector, tc: &TranslatedConeSet) -> Result<Vector> {
    x.check_dim(tc.dim())?;
    Ok(tc.project_unchecked(x))
}

/// Tolerance on `|⟨b_i, b_j⟩ − δ_ij|` accepted for an orthonormal basis.
pub const ORTHONORMAL_TOL: f64 = 1e-12;

/// `a + U` with `U` spanned by an orthonormal basis (possibly empty).
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSubspaceSet {
    basepoint: Vector,
    basis: Vec<Vector>,
}

impl AffineSubspaceSet {
    pub fn new(basepoint: Vector, basis: Vec<Vector>) -> Result<Self> {
        let dim = basepoint.dim();
        for b in &basis {
            b.check_dim(dim)?;
        }
        for (i, bi) in basis.iter().enumerate() {
            for (j, bj) in basis.iter().enumerate().skip(i) {
                let target = if i == j { 1.0 } else { 0.0 };
                if (bi.dot(bj) - target).abs() > ORTHONORMAL_TOL {
                    return Err(Error::InvalidParams(format!(
                        "basis vectors {i} and {j} are not orthonormal"
                    )));
                }
            }
        }
        Ok(Self { basepoint, basis })
    }

    pub fn basepoint(&self) -> &Vector {
        &self.basepoint
    }

    pub fn basis(&self) -> &[Vector] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basepoint.dim()
    }

    /// `P_U x` for the linear part `U`.
    pub fn project_linear(&self, x: &Vector) -> Vector {
        self.basis.iter().fold(Vector::zeros(x.dim()), |acc, b| acc.axpy(x.dot(b), b))
    }

    pub fn contains(&self, x: &Vector) -> bool {
        let rel = x - &self.basepoint;
        let off = &rel - &self.project_linear(&rel);
        off.norm() <= FEASIBILITY_SLACK * self.basepoint.norm().max(1.0)
    }

    fn project_unchecked(&self, x: &Vector) -> Vector {
        let rel = x - &self.basepoint;
        &self.basepoint + &self.project_linear(&rel)
    }

    pub fn normal_cone(&self) -> OperatorHandle {
        let proj = self.clone();
        let ind = self.clone();
        OperatorHandle::new(self.dim(), "N_affine", move |x: &Vector| proj.project_unchecked(x))
            .with_function(move |x: &Vector| indicator(ind.contains(x)))
    }
}

pub fn project_affine(x: &Vector, asub: &AffineSubspaceSet) -> Result<Vector> {
    x.check_dim(asub.dim())?;
    Ok(asub.project_unchecked(x))
}

/// The zero operator (`f ≡ 0`, `J = Id`).
pub fn zero_operator(dim: usize) -> OperatorHandle {
    OperatorHandle::new(dim, "zero", |x: &Vector| x.clone()).with_function(|_| 0.0)
}

/// `N_{{0}}` (`J ≡ 0`).
pub fn origin_normal_cone(dim: usize) -> OperatorHandle {
    OperatorHandle::new(dim, "N_origin", move |_: &Vector| Vector::zeros(dim))
        .with_function(|x: &Vector| indicator(x.as_slice().iter().all(|c| c.abs() <= FEASIBILITY_SLACK)))
}

/// Builds the resolvent of `−w + A`, i.e. `J_{−w+A} = J_A(· + w)`.
///
/// When `A = ∂f` the result is `∂(f − ⟨w, ·⟩)`.
pub fn resolvent_of_shift_plus(op: &OperatorHandle, w: &Vector) -> Result<OperatorHandle> {
    w.check_dim(op.dim())?;
    let inner = op.clone();
    let shift = w.clone();
    let f = op.shared_function();
    let shift_f = w.clone();
    let handle = OperatorHandle::new(op.dim(), format!("(-w+{})", op.label()), move |y: &Vector| {
        inner.apply(&(y + &shift))
    });
    Ok(match f {
        Some(f) => handle.with_function(move |x: &Vector| f(x) - x.dot(&shift_f)),
        None => handle,
    })
}

/// Builds `B(· − v)`, whose resolvent is `y ↦ v + J_B(y − v)`.
///
/// When `B = ∂g` the result is `∂(g(· − v))`.
pub fn translate_operator_arg(op: &OperatorHandle, v: &Vector) -> Result<OperatorHandle> {
    v.check_dim(op.dim())?;
    let inner = op.clone();
    let t = v.clone();
    let f = op.shared_function();
    let t_f = v.clone();
    let handle = OperatorHandle::new(op.dim(), format!("{}(.-v)", op.label()), move |y: &Vector| {
        &t + &inner.apply(&(y - &t))
    });
    Ok(match f {
        Some(f) => handle.with_function(move |x: &Vector| f(&(x - &t_f))),
        None => handle,
    })
}

/// `J_{A⁻¹} = Id − J_A`. The conjugate function is not available in closed
/// form, so the returned handle carries none.
pub fn inverse_resolvent(op: &OperatorHandle) -> OperatorHandle {
    let inner = op.clone();
    OperatorHandle::new(op.dim(), format!("inv({})", op.label()), move |y: &Vector| {
        y - &inner.apply(y)
    })
    .with_shared_function(None)
}

/// `R_A = 2 J_A − Id`.
pub fn reflect(op: &OperatorHandle) -> impl Fn(&Vector) -> Vector + Send + Sync + '_ {
    move |y: &Vector| op.reflected(y)
}

/// Serializable description of a catalog operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorDescriptor {
    /// `N_B` for `B = {x : ⟨x, u⟩ ≤ η}`.
    Halfspace { u: Vector, eta: f64 },
    /// `N_C` for `C = [lo, hi]`.
    Box {
        #[serde(with = "ext_real_vec")]
        lo: Vec<f64>,
        #[serde(with = "ext_real_vec")]
        hi: Vec<f64>,
    },
    /// `N_{a+K}` with `K = ℝ₊ e_axis`.
    TranslatedCone { a: Vector, axis: usize },
    /// `N_{a+U}`; `basis` must be orthonormal.
    Affine { a: Vector, basis: Vec<Vector> },
    /// `∂(‖·‖₁ + ι_{[−c, c]})`.
    L1Box {
        #[serde(with = "ext_real_vec")]
        c: Vec<f64>,
    },
    /// `w + inner`.
    Shift { w: Vector, inner: Box<OperatorDescriptor> },
    /// `inner(· − v)`.
    Translate { v: Vector, inner: Box<OperatorDescriptor> },
}

impl OperatorDescriptor {
    pub fn dim(&self) -> usize {
        match self {
            Self::Halfspace { u, .. } => u.dim(),
            Self::Box { lo, .. } => lo.len(),
            Self::TranslatedCone { a, .. } => a.dim(),
            Self::Affine { a, .. } => a.dim(),
            Self::L1Box { c } => c.len(),
            Self::Shift { w, .. } => w.dim(),
            Self::Translate { v, .. } => v.dim(),
        }
    }

    /// Lists every violated invariant; empty when the descriptor is valid.
    pub fn validation_errors(&self) -> Vec<String> {
        let mut errors = Vec::new();
        self.collect_errors("", &mut errors);
        errors
    }

    fn collect_errors(&self, path: &str, errors: &mut Vec<String>) {
        let mut push = |e: Error| errors.push(format!("{path}{}: {e}", self.kind()));
        match self {
            Self::Halfspace { u, eta } => {
                if let Err(e) = HalfspaceSet::new(u.clone(), *eta) {
                    push(e);
                }
            }
            Self::Box { lo, hi } => {
                if let Err(e) = BoxSet::new(lo.clone(), hi.clone()) {
                    push(e);
                }
            }
            Self::TranslatedCone { a, axis } => {
                if let Err(e) = TranslatedConeSet::new(a.clone(), *axis) {
                    push(e);
                }
            }
            Self::Affine { a, basis } => {
                if let Err(e) = AffineSubspaceSet::new(a.clone(), basis.clone()) {
                    push(e);
                }
            }
            Self::L1Box { c } => {
                if let Err(e) = BoxSet::symmetric(c) {
                    push(e);
                }
            }
            Self::Shift { w, inner } | Self::Translate { v: w, inner } => {
                if inner.dim() != w.dim() {
                    push(Error::DimensionMismatch { expected: w.dim(), found: inner.dim() });
                }
                inner.collect_errors(&format!("{path}{}.", self.kind()), errors);
            }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Halfspace { .. } => "halfspace",
            Self::Box { .. } => "box",
            Self::TranslatedCone { .. } => "translated_cone",
            Self::Affine { .. } => "affine",
            Self::L1Box { .. } => "l1_box",
            Self::Shift { .. } => "shift",
            Self::Translate { .. } => "translate",
        }
    }

    pub fn build(&self) -> Result<OperatorHandle> {
        Ok(match self {
            Self::Halfspace { u, eta } => HalfspaceSet::new(u.clone(), *eta)?.normal_cone(),
            Self::Box { lo, hi } => BoxSet::new(lo.clone(), hi.clone())?.normal_cone(),
            Self::TranslatedCone { a, axis } => TranslatedConeSet::new(a.clone(), *axis)?.normal_cone(),
            Self::Affine { a, basis } => AffineSubspaceSet::new(a.clone(), basis.clone())?.normal_cone(),
            Self::L1Box { c } => l1_box_operator(c)?,
            Self::Shift { w, inner } => resolvent_of_shift_plus(&inner.build()?, &-w)?,
            Self::Translate { v, inner } => translate_operator_arg(&inner.build()?, v)?,
        })
    }
}

/// Extended-real vectors in JSON: numbers, or the strings `"inf"`, `"+inf"`,
/// `"-inf"`.
pub(crate) mod ext_real_vec {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(values: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let reprs: Vec<Repr> = values
            .iter()
            .map(|&v| {
                if v == f64::INFINITY {
                    Repr::Text("inf".into())
                } else if v == f64::NEG_INFINITY {
                    Repr::Text("-inf".into())
                } else {
                    Repr::Num(v)
                }
            })
            .collect();
        reprs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Repr>::deserialize(d)?
            .into_iter()
            .map(|r| match r {
                Repr::Num(v) => Ok(v),
                Repr::Text(t) => match t.as_str() {
                    "inf" | "+inf" | "Infinity" => Ok(f64::INFINITY),
                    "-inf" | "-Infinity" => Ok(f64::NEG_INFINITY),
                    other => Err(D::Error::custom(format!("invalid extended real {other:?}"))),
                },
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::check_firm_nonexpansiveness;
    use crate::testutil::{assert_close, grid_argmin_1d, grid_nearest_2d, random_pairs, random_points, v, vec2};

    const INF: f64 = f64::INFINITY;

    fn hs(u: Vector, eta: f64) -> HalfspaceSet {
        HalfspaceSet::new(u, eta).unwrap()
    }

    #[test]
    fn halfspace_feasible_point_is_unchanged() {
        let p = project_halfspace(&vec2(-3.0, 5.0), &hs(vec2(1.0, 0.0), -2.0)).unwrap();
        assert_eq!(p, vec2(-3.0, 5.0));
    }

    #[test]
    fn halfspace_formula_instance() {
        let p = project_halfspace(&vec2(0.0, 1.0), &hs(vec2(1.0, 0.0), -2.0)).unwrap();
        assert_eq!(p, vec2(-2.0, 1.0));
    }

    #[test]
    fn halfspace_diagonal_matches_grid_oracle() {
        let x = vec2(1.0, 1.0);
        let oracle = grid_nearest_2d(&x, |a, b| a + b <= 1e-12, -2.0, 2.0, 401);
        assert_close(&oracle, &vec2(0.0, 0.0), 1e-12);
        let p = project_halfspace(&x, &hs(vec2(1.0, 1.0), 0.0)).unwrap();
        assert_close(&p, &oracle, 1e-12);
    }

    #[test]
    fn halfspace_boundary_tie_returns_input() {
        let x = vec2(-2.0, 7.25);
        let p = project_halfspace(&x, &hs(vec2(1.0, 0.0), -2.0)).unwrap();
        assert_eq!(p, x);
    }

    #[test]
    fn halfspace_rejects_zero_normal_and_dim_mismatch() {
        assert!(HalfspaceSet::new(vec2(0.0, 0.0), 1.0).is_err());
        assert!(matches!(
            project_halfspace(&v(&[1.0, 2.0, 3.0]), &hs(vec2(1.0, 0.0), 0.0)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn box_interior_and_clamp() {
        let bx = BoxSet::symmetric(&[1.0, 1.0]).unwrap();
        assert_eq!(project_box(&vec2(0.5, -0.2), &bx).unwrap(), vec2(0.5, -0.2));
        assert_eq!(project_box(&vec2(3.0, -7.0), &bx).unwrap(), vec2(1.0, -1.0));
    }

    #[test]
    fn box_as_cone_matches_case_oracle() {
        // K = [0, ∞) × {0}
        let bx = BoxSet::new(vec![0.0, 0.0], vec![INF, 0.0]).unwrap();
        let x = vec2(-2.0, 5.0);
        let oracle = grid_nearest_2d(&x, |a, b| a >= 0.0 && b == 0.0, -6.0, 6.0, 1201);
        assert_close(&oracle, &vec2(0.0, 0.0), 1e-12);
        assert_eq!(project_box(&x, &bx).unwrap(), oracle);
    }

    #[test]
    fn box_rejects_bad_bounds() {
        assert!(BoxSet::new(vec![1.0], vec![0.0]).is_err());
        assert!(BoxSet::new(vec![INF], vec![INF]).is_err());
        assert!(BoxSet::new(vec![], vec![]).is_err());
    }

    #[test]
    fn l1_box_kills_small_entries() {
        assert_eq!(prox_l1_box(&vec2(0.5, -0.3), &[INF, INF]).unwrap(), vec2(0.0, 0.0));
    }

    #[test]
    fn l1_box_formula_instance() {
        assert_eq!(prox_l1_box(&vec2(3.0, -3.0), &[1.0, 1.0]).unwrap(), vec2(1.0, -1.0));
    }

    #[test]
    fn l1_box_matches_coordinatewise_grid_oracle() {
        let x = vec2(2.0, 2.0);
        let c = [0.5, 2.0];
        let oracle: Vec<f64> = (0..2)
            .map(|i| grid_argmin_1d(|t| t.abs() + 0.5 * (t - x[i]).powi(2), -c[i], c[i], 4001))
            .collect();
        assert_close(&v(&oracle), &vec2(0.5, 1.0), 1e-12);
        assert_close(&prox_l1_box(&x, &c).unwrap(), &v(&oracle), 1e-12);
    }

    #[test]
    fn l1_box_sign_of_zero() {
        assert_eq!(prox_l1_box(&vec2(0.0, -0.0), &[1.0, 1.0]).unwrap().as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn l1_box_errors() {
        assert!(matches!(
            prox_l1_box(&vec2(1.0, 1.0), &[1.0, -0.5]),
            Err(Error::NegativeBound { index: 1, .. })
        ));
        assert!(matches!(prox_l1_box(&vec2(1.0, 1.0), &[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn translated_cone_cases() {
        let tc = TranslatedConeSet::new(vec2(0.0, 0.0), 0).unwrap();
        assert_eq!(project_translated_cone(&vec2(2.0, 3.0), &tc).unwrap(), vec2(2.0, 0.0));
        assert_eq!(project_translated_cone(&vec2(-1.0, -1.0), &tc).unwrap(), vec2(0.0, 0.0));

        let shifted = TranslatedConeSet::new(vec2(-2.0, 3.0), 0).unwrap();
        let x = vec2(-5.0, 0.0);
        let oracle = grid_nearest_2d(&x, |a, b| a >= -2.0 && b == 3.0, -6.0, 6.0, 1201);
        assert_close(&oracle, &vec2(-2.0, 3.0), 1e-12);
        assert_eq!(project_translated_cone(&x, &shifted).unwrap(), oracle);
    }

    #[test]
    fn affine_projection_cases() {
        let line = AffineSubspaceSet::new(vec2(0.0, 3.0), vec![vec2(1.0, 0.0)]).unwrap();
        assert_eq!(project_affine(&vec2(5.0, 7.0), &line).unwrap(), vec2(5.0, 3.0));

        let point = AffineSubspaceSet::new(vec2(2.0, 1.0), vec![]).unwrap();
        assert_eq!(project_affine(&vec2(-9.0, 4.0), &point).unwrap(), vec2(2.0, 1.0));

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let diag = AffineSubspaceSet::new(vec2(0.0, 0.0), vec![vec2(s, s)]).unwrap();
        // <(2,0), (1,1)/√2> (1,1)/√2 = (1,1)
        assert_close(&project_affine(&vec2(2.0, 0.0), &diag).unwrap(), &vec2(1.0, 1.0), 1e-15);
    }

    #[test]
    fn affine_rejects_non_orthonormal_basis() {
        assert!(AffineSubspaceSet::new(vec2(0.0, 0.0), vec![vec2(1.0, 1.0)]).is_err());
        assert!(AffineSubspaceSet::new(vec2(0.0, 0.0), vec![vec2(1.0, 0.0), vec2(1.0, 0.0)]).is_err());
    }

    fn ray_normal_cone() -> OperatorHandle {
        // N_{[0, ∞)} in dimension 1.
        BoxSet::new(vec![0.0], vec![INF]).unwrap().normal_cone()
    }

    #[test]
    fn shift_by_zero_is_identity() {
        let op = ray_normal_cone();
        let shifted = resolvent_of_shift_plus(&op, &v(&[0.0])).unwrap();
        for y in [-3.0, 0.0, 2.5] {
            assert_eq!(shifted.apply(&v(&[y])), op.apply(&v(&[y])));
        }
    }

    #[test]
    fn shift_one_dimensional_case() {
        // J_{-1+A}(y) = max(y + 1, 0)
        let shifted = resolvent_of_shift_plus(&ray_normal_cone(), &v(&[1.0])).unwrap();
        assert_eq!(shifted.apply(&v(&[-2.0])), v(&[0.0]));
        assert_eq!(shifted.apply(&v(&[0.5])), v(&[1.5]));
    }

    #[test]
    fn translate_cases() {
        let clamp = BoxSet::symmetric(&[1.0]).unwrap().normal_cone();
        assert_eq!(translate_operator_arg(&clamp, &v(&[0.0])).unwrap().apply(&v(&[4.0])), v(&[1.0]));
        // 2 + clamp(4 − 2) = 3
        assert_eq!(translate_operator_arg(&clamp, &v(&[2.0])).unwrap().apply(&v(&[4.0])), v(&[3.0]));
        let singleton = translate_operator_arg(&origin_normal_cone(1), &v(&[5.0])).unwrap();
        for y in [-7.0, 0.0, 5.0, 11.0] {
            assert_eq!(singleton.apply(&v(&[y])), v(&[5.0]));
        }
    }

    #[test]
    fn inverse_resolvent_cases() {
        let y = vec2(1.5, -2.0);
        assert_eq!(inverse_resolvent(&origin_normal_cone(2)).apply(&y), y);
        assert_eq!(inverse_resolvent(&zero_operator(2)).apply(&y), vec2(0.0, 0.0));
        let bx = BoxSet::symmetric(&[1.0, 1.0]).unwrap().normal_cone();
        assert_eq!(inverse_resolvent(&bx).apply(&vec2(3.0, 0.0)), vec2(2.0, 0.0));
    }

    #[test]
    fn reflection_cases() {
        let id = zero_operator(2);
        assert_eq!(reflect(&id)(&vec2(1.0, 2.0)), vec2(1.0, 2.0));
        let h = hs(vec2(1.0, 0.0), 0.0).normal_cone();
        assert_eq!(reflect(&h)(&vec2(2.0, 0.0)), vec2(-2.0, 0.0));
        let inside = vec2(-1.0, 4.0);
        assert_eq!(reflect(&h)(&inside), inside);
    }

    fn catalog(dim: usize) -> Vec<OperatorHandle> {
        let u = Vector::new((0..dim).map(|i| 1.0 + i as f64).collect()).unwrap();
        let c: Vec<f64> = (0..dim).map(|i| if i % 2 == 0 { 1.0 } else { INF }).collect();
        let mut ops = vec![
            hs(u.clone(), 0.5).normal_cone(),
            BoxSet::symmetric(&c).unwrap().normal_cone(),
            TranslatedConeSet::new(&u * 0.3, 0).unwrap().normal_cone(),
            l1_box_operator(&c).unwrap(),
        ];
        let basis = vec![&u * (1.0 / u.norm())];
        ops.push(AffineSubspaceSet::new(Vector::zeros(dim), basis).unwrap().normal_cone());
        let shifted = resolvent_of_shift_plus(&ops[1], &u).unwrap();
        ops.push(translate_operator_arg(&shifted, &(&u * -0.7)).unwrap());
        ops
    }

    #[test]
    fn catalog_is_firmly_nonexpansive() {
        for dim in 1..=4 {
            for op in catalog(dim) {
                let r = check_firm_nonexpansiveness(&op, &random_pairs(dim, 200, dim as u64), 1e-10).unwrap();
                assert!(r.pass, "{} dim {dim}: {r:?}", op.label());
            }
        }
    }

    #[test]
    fn catalog_moreau_idempotence_and_reflection() {
        for dim in 1..=4 {
            for op in catalog(dim) {
                let inv = inverse_resolvent(&op);
                for (x, y) in random_pairs(dim, 100, 11) {
                    let sum = &op.apply(&x) + &inv.apply(&x);
                    assert_close(&sum, &x, 1e-12);
                    let rx = op.reflected(&x);
                    let ry = op.reflected(&y);
                    assert!(rx.dist(&ry) <= x.dist(&y) + 1e-10);
                }
            }
        }
    }

    #[test]
    fn projections_are_idempotent() {
        for dim in 1..=4 {
            // Pure normal cones only; l1_box and the shifted operator are not projections.
            for op in catalog(dim).into_iter().take(5).filter(|o| o.label() != "subdiff_l1_box") {
                for x in random_points(dim, 50, 5) {
                    let p = op.apply(&x);
                    assert_close(&op.apply(&p), &p, 1e-12);
                }
            }
        }
    }

    #[test]
    fn descriptor_round_trip_and_build() {
        let json = r#"{"type":"shift","w":[1.0,0.0],
            "inner":{"type":"box","lo":["-inf",0],"hi":["inf","+inf"]}}"#;
        let d: OperatorDescriptor = serde_json::from_str(json).unwrap();
        assert!(d.validation_errors().is_empty());
        let op = d.build().unwrap();
        // w + N_C has resolvent J_C(y − w).
        assert_eq!(op.apply(&vec2(0.0, -3.0)), vec2(-1.0, 0.0));
        let back: OperatorDescriptor = serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn descriptor_collects_nested_errors() {
        let d = OperatorDescriptor::Translate {
            v: vec2(0.0, 0.0),
            inner: Box::new(OperatorDescriptor::Halfspace { u: v(&[0.0, 0.0, 0.0]), eta: 0.0 }),
        };
        let errs = d.validation_errors();
        assert_eq!(errs.len(), 2, "{errs:?}");
    }

    #[test]
    fn shifted_functions_follow_the_algebra() {
        let g = l1_box_operator(&[1.0, 1.0]).unwrap();
        let t = translate_operator_arg(&g, &vec2(-1.0, 0.0)).unwrap();
        // g(y − v) at y = (−2, 0): g(−1, 0) = 1
        assert_eq!(t.evaluate(&vec2(-2.0, 0.0)).unwrap(), 1.0);
        let s = resolvent_of_shift_plus(&g, &vec2(1.0, 0.0)).unwrap();
        // (g − ⟨w, ·⟩)(0.5, 0) = 0.5 − 0.5
        assert_eq!(s.evaluate(&vec2(0.5, 0.0)).unwrap(), 0.0);
        assert!(inverse_resolvent(&g).evaluate(&vec2(0.0, 0.0)).is_err());
    }
}
