//! Helpers shared by the integration targets: random solenoidal fields and a
//! central-difference oracle that never touches the jet machinery.

#![allow(dead_code)]

use mhs_core::symmetry::KillingParams;
use mhs_core::{Point3, ScalarExpr, VectorExpr};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Step for first derivatives; truncation and rounding both stay near 1e−10.
pub const FD_STEP: f64 = 1e-5;

/// A random potential component: trigonometric modes plus a cubic polynomial.
pub fn random_potential(rng: &mut ChaCha8Rng) -> ScalarExpr {
    let (x, y, z) = (ScalarExpr::x(), ScalarExpr::y(), ScalarExpr::z());
    let mut f = ScalarExpr::constant(0.0);
    for _ in 0..2 {
        let k: [f64; 3] = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        let amp = rng.random_range(-1.0..1.0);
        let arg = ScalarExpr::constant(k[0]) * x.clone()
            + ScalarExpr::constant(k[1]) * y.clone()
            + ScalarExpr::constant(k[2]) * z.clone()
            + ScalarExpr::constant(phase);
        f = f + ScalarExpr::constant(amp) * arg.sin();
    }
    for _ in 0..3 {
        let e: [i32; 3] = std::array::from_fn(|_| rng.random_range(0..=1));
        let mut m = ScalarExpr::constant(rng.random_range(-1.0..1.0));
        for (axis, p) in e.into_iter().enumerate() {
            if p > 0 {
                m = m * ScalarExpr::coord(axis).powi(p + rng.random_range(0..=1));
            }
        }
        f = f + m;
    }
    f
}

/// `∇×A` for a random potential `A`: divergence-free by construction.
pub fn random_solenoidal(rng: &mut ChaCha8Rng) -> VectorExpr {
    VectorExpr::new(std::array::from_fn(|_| random_potential(rng))).curl()
}

pub fn random_generator(rng: &mut ChaCha8Rng) -> KillingParams {
    KillingParams {
        a: std::array::from_fn(|_| rng.random_range(-1.0..1.0)),
        b: std::array::from_fn(|_| rng.random_range(-1.0..1.0)),
    }
}

fn shifted(p: Point3, axis: usize, h: f64) -> Point3 {
    let mut a = p.to_array();
    a[axis] += h;
    Point3::from_array(a)
}

/// `∂_axis f` by second-order central differences of a value function.
pub fn fd_partial<const N: usize>(f: impl Fn(Point3) -> [f64; N], p: Point3, axis: usize) -> [f64; N] {
    let (u, d) = (f(shifted(p, axis, FD_STEP)), f(shifted(p, axis, -FD_STEP)));
    std::array::from_fn(|i| (u[i] - d[i]) / (2.0 * FD_STEP))
}

/// `J[r][c] = ∂_c f_r`.
pub fn fd_jacobian(f: impl Fn(Point3) -> [f64; 3], p: Point3) -> [[f64; 3]; 3] {
    let cols: [[f64; 3]; 3] = std::array::from_fn(|c| fd_partial(&f, p, c));
    std::array::from_fn(|r| std::array::from_fn(|c| cols[c][r]))
}

pub fn fd_curl(f: impl Fn(Point3) -> [f64; 3], p: Point3) -> [f64; 3] {
    let j = fd_jacobian(f, p);
    [j[2][1] - j[1][2], j[0][2] - j[2][0], j[1][0] - j[0][1]]
}

pub fn fd_div(f: impl Fn(Point3) -> [f64; 3], p: Point3) -> f64 {
    let j = fd_jacobian(f, p);
    j[0][0] + j[1][1] + j[2][2]
}

pub fn fd_grad(f: impl Fn(Point3) -> f64, p: Point3) -> [f64; 3] {
    std::array::from_fn(|c| fd_partial(|q| [f(q)], p, c)[0])
}

/// `(ξ·∇)w − (w·∇)ξ` for a Killing field, from a finite-difference Jacobian.
pub fn fd_killing_lie(w: impl Fn(Point3) -> [f64; 3], k: KillingParams, p: Point3) -> [f64; 3] {
    let j = fd_jacobian(&w, p);
    let xi = k.value_at(p);
    let v = w(p);
    let bxw = cross(k.b, v);
    std::array::from_fn(|r| (0..3).map(|c| j[r][c] * xi[c]).sum::<f64>() - bxw[r])
}

pub fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

pub fn norm(a: [f64; 3]) -> f64 {
    dist(a, [0.0; 3])
}
