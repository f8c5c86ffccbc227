//! Test-only helpers and brute-force oracles. Nothing here calls into the
//! projection or iteration code it is used to check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::vector::Vector;

pub fn v(coords: &[f64]) -> Vector {
    Vector::new(coords.to_vec()).unwrap()
}

pub fn vec2(a: f64, b: f64) -> Vector {
    v(&[a, b])
}

pub fn random_point(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vector {
    Vector::new((0..dim).map(|_| rng.random_range(-scale..scale)).collect()).unwrap()
}

pub fn random_pairs(dim: usize, n: usize, seed: u64) -> Vec<(Vector, Vector)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (random_point(&mut rng, dim, 5.0), random_point(&mut rng, dim, 5.0))).collect()
}

pub fn random_points(dim: usize, n: usize, seed: u64) -> Vec<Vector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_point(&mut rng, dim, 5.0)).collect()
}

pub fn assert_close(a: &Vector, b: &Vector, tol: f64) {
    assert_eq!(a.dim(), b.dim());
    let d = a.dist(b);
    assert!(d <= tol, "{a:?} vs {b:?}: distance {d:e} > {tol:e}");
}

/// Nearest grid point of a 2-D box grid satisfying `member`, by exhaustive
/// search. Resolution is `(hi − lo) / (n − 1)`.
pub fn grid_nearest_2d(
    x: &Vector,
    member: impl Fn(f64, f64) -> bool,
    lo: f64,
    hi: f64,
    n: usize,
) -> Vector {
    let step = (hi - lo) / (n - 1) as f64;
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..n {
        let a = lo + step * i as f64;
        for j in 0..n {
            let b = lo + step * j as f64;
            if !member(a, b) {
                continue;
            }
            let d = (a - x[0]).powi(2) + (b - x[1]).powi(2);
            if d < best.0 {
                best = (d, a, b);
            }
        }
    }
    vec2(best.1, best.2)
}

/// Minimizer of a scalar function over a uniform grid on `[lo, hi]`.
pub fn grid_argmin_1d(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| lo + step * i as f64)
        .map(|t| (f(t), t))
        .fold((f64::INFINITY, lo), |best, cur| if cur.0 < best.0 { cur } else { best })
        .1
}
