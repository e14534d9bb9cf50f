//! Method of characteristics for `a·∇u = c₀ + c₁u` with data on a coordinate
//! hyperplane `x_k = const`.
//!
//! The advected coordinate `x_k` serves as the independent variable, so every
//! characteristic reaches the initial plane exactly; this requires `a_k ≠ 0`
//! along the path, which is the transversality condition on the data.

use rayon::prelude::*;
use serde::Serialize;

use crate::expr::{EvalError, Point3, ScalarExpr, VectorExpr};
use crate::sampling::DomainSpec;

pub const DEFAULT_STEP: f64 = 1e-3;
pub const DEFAULT_MAX_STEPS: usize = 2_000_000;

/// Initial data `u = data(x)` on the plane `x_axis = value`.
#[derive(Clone, Debug)]
pub struct InitialPlane {
    pub axis: usize,
    pub value: f64,
    pub data: ScalarExpr,
}

#[derive(Clone, Debug)]
pub struct CharacteristicsProblem {
    pub advect: VectorExpr,
    pub source: ScalarExpr,
    /// Linear coefficient `c₁`; zero for a pure source.
    pub rate: ScalarExpr,
    pub initial: InitialPlane,
    /// Paths leaving this region fail.
    pub region: Option<DomainSpec>,
    pub step: f64,
    pub max_steps: usize,
}

impl CharacteristicsProblem {
    pub fn new(advect: VectorExpr, source: ScalarExpr, initial: InitialPlane) -> Self {
        CharacteristicsProblem {
            advect,
            source,
            rate: ScalarExpr::constant(0.0),
            initial,
            region: None,
            step: DEFAULT_STEP,
            max_steps: DEFAULT_MAX_STEPS,
        }
    }

    pub fn with_rate(mut self, rate: ScalarExpr) -> Self {
        self.rate = rate;
        self
    }

    pub fn within(mut self, region: DomainSpec) -> Self {
        self.region = Some(region);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CharacteristicValue {
    pub point: Point3,
    pub value: Option<f64>,
    /// Richardson estimate `|u_h − u_{h/2}| / 15`.
    pub error_estimate: f64,
    pub steps: usize,
    pub failure: Option<String>,
}

enum Fail {
    Eval(EvalError),
    Left(Point3),
    Tangent(Point3),
}

impl From<EvalError> for Fail {
    fn from(e: EvalError) -> Self {
        Fail::Eval(e)
    }
}

impl CharacteristicsProblem {
    /// Right-hand side in the advected coordinate: `dx/ds = a/a_k`,
    /// `du/ds = (c₀ + c₁u)/a_k`.
    fn rhs(&self, x: [f64; 3], u: f64) -> Result<([f64; 3], f64), Fail> {
        let p = Point3::from_array(x);
        if let Some(r) = &self.region {
            if !r.contains(p) {
                return Err(Fail::Left(p));
            }
        }
        let a = self.advect.value(p)?;
        let ak = a[self.initial.axis];
        if ak.abs() < 1e-12 {
            return Err(Fail::Tangent(p));
        }
        let du = self.source.value(p)? + self.rate.value(p)? * u;
        Ok((a.map(|c| c / ak), du / ak))
    }

    fn rk4(&self, x0: [f64; 3], u0: f64, s0: f64, s1: f64, n: usize) -> Result<([f64; 3], f64), Fail> {
        let h = (s1 - s0) / n as f64;
        let k = self.initial.axis;
        let (mut x, mut u) = (x0, u0);
        let add = |x: [f64; 3], d: [f64; 3], f: f64| -> [f64; 3] { std::array::from_fn(|i| x[i] + f * d[i]) };
        for i in 0..n {
            let (d1, e1) = self.rhs(x, u)?;
            let (d2, e2) = self.rhs(add(x, d1, h / 2.0), u + h / 2.0 * e1)?;
            let (d3, e3) = self.rhs(add(x, d2, h / 2.0), u + h / 2.0 * e2)?;
            let (d4, e4) = self.rhs(add(x, d3, h), u + h * e3)?;
            x = std::array::from_fn(|j| x[j] + h / 6.0 * (d1[j] + 2.0 * d2[j] + 2.0 * d3[j] + d4[j]));
            u += h / 6.0 * (e1 + 2.0 * e2 + 2.0 * e3 + e4);
            x[k] = s0 + (i + 1) as f64 * h;
        }
        Ok((x, u))
    }

    /// Foot on the initial plane, then forward transport of the data.
    fn solve_with(&self, target: [f64; 3], n: usize) -> Result<f64, Fail> {
        let (k, c) = (self.initial.axis, self.initial.value);
        let (foot, _) = self.rk4(target, 0.0, target[k], c, n)?;
        let u0 = self.initial.data.value(Point3::from_array(foot))?;
        let (_, u) = self.rk4(foot, u0, c, target[k], n)?;
        Ok(u)
    }

    pub fn solve_point(&self, p: Point3) -> CharacteristicValue {
        let target = p.to_array();
        let span = (target[self.initial.axis] - self.initial.value).abs();
        if span == 0.0 {
            let v = self.initial.data.value(p);
            return CharacteristicValue {
                point: p,
                error_estimate: 0.0,
                steps: 0,
                failure: v.as_ref().err().map(|e| e.to_string()),
                value: v.ok(),
            };
        }
        let n = ((span / self.step).ceil() as usize).max(1);
        let fail = |msg: String, steps| CharacteristicValue {
            point: p,
            value: None,
            error_estimate: f64::NAN,
            steps,
            failure: Some(msg),
        };
        if 2 * n > self.max_steps {
            return fail(format!("needs {} steps, budget {}", 2 * n, self.max_steps), 0);
        }
        let describe = |f: Fail| match f {
            Fail::Eval(e) => e.to_string(),
            Fail::Left(q) => format!("characteristic left the region at ({}, {}, {})", q.x, q.y, q.z),
            Fail::Tangent(q) => format!(
                "characteristic tangent to the initial plane at ({}, {}, {})",
                q.x, q.y, q.z
            ),
        };
        let coarse = match self.solve_with(target, n) {
            Ok(u) => u,
            Err(f) => return fail(describe(f), n),
        };
        match self.solve_with(target, 2 * n) {
            Ok(fine) => CharacteristicValue {
                point: p,
                value: Some(fine),
                error_estimate: (fine - coarse).abs() / 15.0,
                steps: 2 * n,
                failure: None,
            },
            Err(f) => fail(describe(f), 2 * n),
        }
    }
}

/// Solves at every target point; points are independent and solved in
/// parallel, results keep input order.
pub fn solve_characteristics(prob: &CharacteristicsProblem, targets: &[Point3]) -> Vec<CharacteristicValue> {
    targets.par_iter().map(|p| prob.solve_point(*p)).collect()
}

/// Largest `|numeric − exact(p)|` over solved points; `None` when any point
/// failed.
pub fn sup_error(values: &[CharacteristicValue], exact: impl Fn(Point3) -> f64) -> Option<f64> {
    values
        .iter()
        .try_fold(0.0f64, |m, v| v.value.map(|u| m.max((u - exact(v.point)).abs())))
}
