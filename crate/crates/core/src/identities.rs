//! Pointwise identity suite: `J_A + J_{A⁻¹} = Id`,
//! `Id − T = J_A − J_B R_A = J_{A⁻¹} + J_{B⁻¹} R_A`, and the shift identity
//! `J_A y = J_{−w+A}(−w + y)`, checked on seeded random points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::engine::dr_step;
use crate::error::Result;
use crate::model::{OperatorHandle, ProblemSpec, IDENTITY_TOL};
use crate::par::Execution;
use crate::prox::{
    inverse_resolvent, l1_box_operator, resolvent_of_shift_plus, translate_operator_arg, AffineSubspaceSet, BoxSet,
    HalfspaceSet, TranslatedConeSet,
};
use crate::vector::Vector;

/// Half-width of the cube random points are drawn from.
pub const SAMPLE_SCALE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityReport {
    pub samples: usize,
    /// Max-norm residuals of `J + J_{inv} − Id` over both operators.
    pub moreau: f64,
    /// `‖(x − Tx) − (J_A x − J_B R_A x)‖_∞`.
    pub primal_step: f64,
    /// `‖(x − Tx) − (J_{A⁻¹} x + J_{B⁻¹} R_A x)‖_∞`.
    pub dual_step: f64,
    /// `‖J_A y − J_{−w+A}(−w + y)‖_∞` over both operators.
    pub shift: f64,
    pub pass: bool,
}

impl IdentityReport {
    pub fn worst(&self) -> f64 {
        self.moreau.max(self.primal_step).max(self.dual_step).max(self.shift)
    }
}

fn max_abs(v: &Vector) -> f64 {
    v.as_slice().iter().fold(0.0_f64, |m, c| m.max(c.abs()))
}

/// `samples` seeded points (and shift vectors) in `[−SAMPLE_SCALE, SAMPLE_SCALE]^dim`.
pub fn sample_points(dim: usize, samples: usize, seed: u64) -> Vec<(Vector, Vector)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| {
        Vector::from_raw((0..dim).map(|_| rng.random_range(-SAMPLE_SCALE..SAMPLE_SCALE)).collect())
    };
    (0..samples).map(|_| (draw(&mut rng), draw(&mut rng))).collect()
}

struct Residuals([f64; 4]);

fn residuals_at(spec: &ProblemSpec, inv_a: &OperatorHandle, inv_b: &OperatorHandle, x: &Vector, w: &Vector) -> Result<Residuals> {
    let (a, b) = (&spec.op_a, &spec.op_b);
    let p = a.resolve(x)?;
    let r = a.reflected(x);
    let q = b.resolve(&r)?;
    let moreau = max_abs(&(&(&p + &inv_a.apply(x)) - x)).max(max_abs(&(&(&b.apply(x) + &inv_b.apply(x)) - x)));
    let step = x - &dr_step(spec, x)?;
    let primal_step = max_abs(&(&step - &(&p - &q)));
    let dual_step = max_abs(&(&step - &(&inv_a.apply(x) + &inv_b.apply(&r))));
    let shifted_x = x - w;
    let mut shift = 0.0_f64;
    for op in [a, b] {
        let s = resolvent_of_shift_plus(op, w)?;
        shift = shift.max(max_abs(&(&op.apply(x) - &s.apply(&shifted_x))));
    }
    Ok(Residuals([moreau, primal_step, dual_step, shift]))
}

/// Runs the identity suite for the pair in `spec`.
pub fn identity_suite(spec: &ProblemSpec, samples: usize, seed: u64, exec: Execution) -> Result<IdentityReport> {
    let inv_a = inverse_resolvent(&spec.op_a);
    let inv_b = inverse_resolvent(&spec.op_b);
    let points = sample_points(spec.dim, samples, seed);
    let results = exec.map(&points, |(x, w)| residuals_at(spec, &inv_a, &inv_b, x, w));
    let mut worst = [0.0_f64; 4];
    for r in results {
        let Residuals(r) = r?;
        for (w, v) in worst.iter_mut().zip(r) {
            *w = w.max(v);
        }
    }
    let [moreau, primal_step, dual_step, shift] = worst;
    Ok(IdentityReport {
        samples,
        moreau,
        primal_step,
        dual_step,
        shift,
        pass: worst.iter().all(|w| *w <= IDENTITY_TOL),
    })
}

/// Representative catalog pairs in dimension `dim` (at least 1).
pub fn catalog_pairs(dim: usize) -> Result<Vec<ProblemSpec>> {
    let u = Vector::from_raw((0..dim).map(|i| 1.0 - 0.5 * i as f64).collect());
    let e0 = Vector::unit(dim, 0);
    let start = Vector::zeros(dim);
    let c_finite: Vec<f64> = (0..dim).map(|i| 0.5 + i as f64).collect();
    let c_mixed: Vec<f64> = (0..dim).map(|i| if i % 2 == 0 { 1.0 } else { f64::INFINITY }).collect();
    let mut lo = vec![-1.0; dim];
    lo[0] = f64::NEG_INFINITY;
    let hi = vec![2.0; dim];

    let halfspace = HalfspaceSet::new(u.clone(), -2.0)?.normal_cone();
    let bx = BoxSet::new(lo, hi)?.normal_cone();
    let cone = TranslatedConeSet::new(&u * 0.5, 0)?.normal_cone();
    let k = TranslatedConeSet::new(Vector::zeros(dim), 0)?.normal_cone();
    let shifted_k = resolvent_of_shift_plus(&k, &(&e0 * 0.75))?;
    let affine = AffineSubspaceSet::new(&u - &(&e0 * u[0]), vec![e0.clone()])?.normal_cone();
    let line = AffineSubspaceSet::new(Vector::zeros(dim), vec![e0.clone()])?.normal_cone();
    let l1_finite = l1_box_operator(&c_finite)?;
    let l1_mixed = l1_box_operator(&c_mixed)?;
    let translated = translate_operator_arg(&l1_mixed, &(&u * -1.5))?;

    let pairs = [
        ("halfspace/l1_box", halfspace.clone(), l1_finite.clone()),
        ("box/halfspace", bx.clone(), halfspace),
        ("cone/shifted_cone", cone, shifted_k),
        ("affine/shifted_line", affine, resolvent_of_shift_plus(&line, &(&e0 * -2.0))?),
        ("l1_box/translated_l1_box", l1_finite, translated),
        ("box/l1_box_mixed", bx, l1_mixed),
    ];
    pairs
        .into_iter()
        .map(|(name, a, b)| ProblemSpec::new(format!("{name}/dim{dim}"), a, b, start.clone()))
        .collect()
}
