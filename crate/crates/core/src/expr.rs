//! Immutable expression trees for scalar and vector fields on R³.
//!
//! Every node evaluates to a [`Jet`] of a requested order. Differential nodes
//! (gradient, curl, partials, Lie derivatives) ask their children for one
//! extra order and differentiate the resulting jets exactly, so arbitrarily
//! nested operators stay exact up to [`MAX_ORDER`].

use std::fmt;
use std::ops;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jet::{Jet, Jet2, MAX_ORDER};

/// A point of Euclidean space in Cartesian coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3 { x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Free variables of the expression language. `T` is the argument of
/// univariate profiles such as χ(Θ) or w₃(Θ).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    Y,
    Z,
    T,
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Var::X => "x",
            Var::Y => "y",
            Var::Z => "z",
            Var::T => "T",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Tan,
    Sqrt,
    Atan,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sqrt => "sqrt",
            Func::Atan => "atan",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "sqrt" => Func::Sqrt,
            "atan" => Func::Atan,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum EvalError {
    #[error("{node}: argument {value} is outside the function's domain")]
    Domain { node: &'static str, value: f64 },
    #[error("variable {0} is not bound in this evaluation context")]
    Unbound(Var),
    #[error("{node} produced a non-finite value")]
    NonFinite { node: &'static str },
    #[error("derivative order {0} exceeds the jet capacity")]
    OrderExceeded(usize),
}

#[derive(Clone, Copy, Debug)]
enum Mode {
    Cartesian,
    Univariate,
}

#[derive(Clone, Copy, Debug)]
struct Ctx {
    point: [f64; 3],
    mode: Mode,
}

fn check_order(order: usize) -> Result<usize, EvalError> {
    if order + 1 > MAX_ORDER {
        Err(EvalError::OrderExceeded(order + 1))
    } else {
        Ok(order + 1)
    }
}

fn finite(node: &'static str, jet: Jet) -> Result<Jet, EvalError> {
    if jet.is_finite() {
        Ok(jet)
    } else {
        Err(EvalError::NonFinite { node })
    }
}

// ---------------------------------------------------------------------------
// Scalar expressions
// ---------------------------------------------------------------------------

#[derive(Debug)]
enum ScalarNode {
    Const(f64),
    Var(Var),
    Add(ScalarExpr, ScalarExpr),
    Sub(ScalarExpr, ScalarExpr),
    Mul(ScalarExpr, ScalarExpr),
    Div(ScalarExpr, ScalarExpr),
    Neg(ScalarExpr),
    Powi(ScalarExpr, i32),
    Powf(ScalarExpr, f64),
    Pow(ScalarExpr, ScalarExpr),
    Func(Func, ScalarExpr),
    Atan2(ScalarExpr, ScalarExpr),
    Compose(ScalarExpr, ScalarExpr),
    Partial(ScalarExpr, usize),
    Dot(VectorExpr, VectorExpr),
    Component(VectorExpr, usize),
}

/// A scalar field `R³ → R` (or a univariate profile in `T`).
#[derive(Clone, Debug)]
pub struct ScalarExpr(Arc<ScalarNode>);

impl ScalarExpr {
    fn node(n: ScalarNode) -> Self {
        ScalarExpr(Arc::new(n))
    }

    pub fn constant(c: f64) -> Self {
        Self::node(ScalarNode::Const(c))
    }

    pub fn var(v: Var) -> Self {
        Self::node(ScalarNode::Var(v))
    }

    pub fn x() -> Self {
        Self::var(Var::X)
    }

    pub fn y() -> Self {
        Self::var(Var::Y)
    }

    pub fn z() -> Self {
        Self::var(Var::Z)
    }

    pub fn t() -> Self {
        Self::var(Var::T)
    }

    /// Coordinate function by axis index.
    pub fn coord(axis: usize) -> Self {
        match axis {
            0 => Self::x(),
            1 => Self::y(),
            2 => Self::z(),
            _ => panic!("axis {axis} out of range"),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match *self.0 {
            ScalarNode::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn func(self, f: Func) -> Self {
        Self::node(ScalarNode::Func(f, self))
    }

    pub fn exp(self) -> Self {
        self.func(Func::Exp)
    }

    pub fn ln(self) -> Self {
        self.func(Func::Log)
    }

    pub fn sin(self) -> Self {
        self.func(Func::Sin)
    }

    pub fn cos(self) -> Self {
        self.func(Func::Cos)
    }

    pub fn tan(self) -> Self {
        self.func(Func::Tan)
    }

    pub fn sqrt(self) -> Self {
        self.func(Func::Sqrt)
    }

    pub fn atan(self) -> Self {
        self.func(Func::Atan)
    }

    pub fn powi(self, n: i32) -> Self {
        Self::node(ScalarNode::Powi(self, n))
    }

    pub fn powf(self, r: f64) -> Self {
        Self::node(ScalarNode::Powf(self, r))
    }

    pub fn pow(self, exponent: ScalarExpr) -> Self {
        Self::node(ScalarNode::Pow(self, exponent))
    }

    pub fn atan2(y: ScalarExpr, x: ScalarExpr) -> Self {
        Self::node(ScalarNode::Atan2(y, x))
    }

    /// `profile ∘ self`, where `profile` is an expression in `T`.
    pub fn compose_into(self, profile: &ScalarExpr) -> Self {
        Self::node(ScalarNode::Compose(profile.clone(), self))
    }

    /// `d/dT` of a profile in `T`; `T` occupies axis 0 under univariate
    /// evaluation.
    pub fn profile_derivative(self) -> Self {
        Self::node(ScalarNode::Partial(self, 0))
    }

    pub fn partial(self, axis: usize) -> Self {
        assert!(axis < 3);
        Self::node(ScalarNode::Partial(self, axis))
    }

    pub fn dot(u: &VectorExpr, v: &VectorExpr) -> Self {
        Self::node(ScalarNode::Dot(u.clone(), v.clone()))
    }

    pub fn component(v: &VectorExpr, axis: usize) -> Self {
        assert!(axis < 3);
        Self::node(ScalarNode::Component(v.clone(), axis))
    }

    pub fn grad(&self) -> VectorExpr {
        VectorExpr::grad(self)
    }

    /// Laplacian as a sum of second partials.
    pub fn laplacian(&self) -> Self {
        (0..3)
            .map(|i| self.clone().partial(i).partial(i))
            .reduce(|a, b| a + b)
            .expect("three terms")
    }

    /// Evaluates the field's jet of the given order at `p`.
    pub fn eval(&self, p: Point3, order: usize) -> Result<Jet, EvalError> {
        self.eval_ctx(
            &Ctx {
                point: p.to_array(),
                mode: Mode::Cartesian,
            },
            order,
        )
    }

    pub fn value(&self, p: Point3) -> Result<f64, EvalError> {
        Ok(self.eval(p, 0)?.value())
    }

    pub fn jet2(&self, p: Point3) -> Result<Jet2, EvalError> {
        Ok(self.eval(p, 2)?.to_jet2())
    }

    /// Evaluates a profile in `T` at `t`; entry `k` of the returned jet's
    /// pure-`T` coefficients is `f^(k)(t) / k!`.
    pub fn eval_univariate(&self, t: f64, order: usize) -> Result<Jet, EvalError> {
        self.eval_ctx(
            &Ctx {
                point: [t, 0.0, 0.0],
                mode: Mode::Univariate,
            },
            order,
        )
    }

    /// `k`-th derivative of a profile in `T`.
    pub fn derivative_at(&self, t: f64, k: usize) -> Result<f64, EvalError> {
        Ok(self.eval_univariate(t, k)?.partial([k, 0, 0]))
    }

    fn eval_ctx(&self, ctx: &Ctx, order: usize) -> Result<Jet, EvalError> {
        use ScalarNode as N;
        Ok(match &*self.0 {
            N::Const(c) => Jet::constant(*c, order),
            N::Var(v) => match (ctx.mode, v) {
                (Mode::Cartesian, Var::X) => Jet::variable(0, ctx.point[0], order),
                (Mode::Cartesian, Var::Y) => Jet::variable(1, ctx.point[1], order),
                (Mode::Cartesian, Var::Z) => Jet::variable(2, ctx.point[2], order),
                (Mode::Univariate, Var::T) => Jet::variable(0, ctx.point[0], order),
                (_, v) => return Err(EvalError::Unbound(*v)),
            },
            N::Add(a, b) => a.eval_ctx(ctx, order)?.add(&b.eval_ctx(ctx, order)?),
            N::Sub(a, b) => a.eval_ctx(ctx, order)?.sub(&b.eval_ctx(ctx, order)?),
            N::Mul(a, b) => a.eval_ctx(ctx, order)?.mul(&b.eval_ctx(ctx, order)?),
            N::Div(a, b) => {
                let num = a.eval_ctx(ctx, order)?;
                let den = b.eval_ctx(ctx, order)?;
                if den.value() == 0.0 {
                    return Err(EvalError::Domain {
                        node: "div",
                        value: 0.0,
                    });
                }
                finite("div", num.div(&den))?
            }
            N::Neg(a) => a.eval_ctx(ctx, order)?.neg(),
            N::Powi(a, n) => {
                let base = a.eval_ctx(ctx, order)?;
                if *n < 0 && base.value() == 0.0 {
                    return Err(EvalError::Domain {
                        node: "powi",
                        value: 0.0,
                    });
                }
                finite("powi", base.powi(*n))?
            }
            N::Powf(a, r) => {
                let base = a.eval_ctx(ctx, order)?;
                if base.value() < 0.0 || (base.value() == 0.0 && (order > 0 || *r < 0.0)) {
                    return Err(EvalError::Domain {
                        node: "pow",
                        value: base.value(),
                    });
                }
                finite("pow", base.powf(*r))?
            }
            N::Pow(a, b) => {
                let base = a.eval_ctx(ctx, order)?;
                if base.value() <= 0.0 {
                    return Err(EvalError::Domain {
                        node: "pow",
                        value: base.value(),
                    });
                }
                let e = b.eval_ctx(ctx, order)?;
                finite("pow", e.mul(&base.ln()).exp())?
            }
            N::Func(f, a) => {
                let u = a.eval_ctx(ctx, order)?;
                let u0 = u.value();
                let out = match f {
                    Func::Exp => u.exp(),
                    Func::Log => {
                        if u0 <= 0.0 {
                            return Err(EvalError::Domain { node: "log", value: u0 });
                        }
                        u.ln()
                    }
                    Func::Sin => u.sin(),
                    Func::Cos => u.cos(),
                    Func::Tan => {
                        let c = u.cos();
                        if c.value() == 0.0 {
                            return Err(EvalError::Domain { node: "tan", value: u0 });
                        }
                        u.sin().div(&c)
                    }
                    Func::Sqrt => {
                        if u0 < 0.0 || (u0 == 0.0 && order > 0) {
                            return Err(EvalError::Domain {
                                node: "sqrt",
                                value: u0,
                            });
                        }
                        u.sqrt()
                    }
                    Func::Atan => u.atan(),
                };
                finite(f.name(), out)?
            }
            N::Atan2(y, x) => {
                let yj = y.eval_ctx(ctx, order)?;
                let xj = x.eval_ctx(ctx, order)?;
                if yj.value() == 0.0 && xj.value() == 0.0 {
                    return Err(EvalError::Domain {
                        node: "atan2",
                        value: 0.0,
                    });
                }
                finite("atan2", yj.atan2(&xj))?
            }
            N::Compose(profile, inner) => {
                let u = inner.eval_ctx(ctx, order)?;
                let f = profile.eval_univariate(u.value(), order)?;
                let series: Vec<f64> = (0..=order).map(|k| f.coeff([k, 0, 0])).collect();
                finite("compose", u.compose(&series))?
            }
            N::Partial(a, axis) => a.eval_ctx(ctx, check_order(order)?)?.derivative(*axis),
            N::Dot(u, v) => {
                let a = u.eval_ctx(ctx, order)?;
                let b = v.eval_ctx(ctx, order)?;
                dot_jets(&a, &b)
            }
            N::Component(v, axis) => {
                let [a, b, c] = v.eval_ctx(ctx, order)?;
                [a, b, c].into_iter().nth(*axis).expect("axis < 3")
            }
        })
    }

    fn precedence(&self) -> u8 {
        use ScalarNode as N;
        match &*self.0 {
            N::Add(..) | N::Sub(..) => 1,
            N::Mul(..) | N::Div(..) => 2,
            N::Neg(_) => 3,
            N::Powi(..) | N::Powf(..) | N::Pow(..) => 4,
            N::Const(c) if *c < 0.0 => 3,
            _ => 5,
        }
    }
}

pub(crate) fn fmt_number(c: f64) -> String {
    if c.fract() == 0.0 && c.abs() < 1e15 {
        format!("{}", c as i64)
    } else {
        format!("{c:?}")
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &ScalarExpr, min_prec: u8) -> fmt::Result {
    if e.precedence() < min_prec {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ScalarNode as N;
        match &*self.0 {
            N::Const(c) => f.write_str(&fmt_number(*c)),
            N::Var(v) => write!(f, "{v}"),
            N::Add(a, b) => {
                write_operand(f, a, 1)?;
                f.write_str(" + ")?;
                write_operand(f, b, 2)
            }
            N::Sub(a, b) => {
                write_operand(f, a, 1)?;
                f.write_str(" - ")?;
                write_operand(f, b, 2)
            }
            N::Mul(a, b) => {
                write_operand(f, a, 2)?;
                f.write_str("*")?;
                write_operand(f, b, 3)
            }
            N::Div(a, b) => {
                write_operand(f, a, 2)?;
                f.write_str("/")?;
                write_operand(f, b, 3)
            }
            N::Neg(a) => {
                f.write_str("-")?;
                write_operand(f, a, 4)
            }
            N::Powi(a, n) => {
                write_operand(f, a, 5)?;
                if *n < 0 {
                    write!(f, "^({n})")
                } else {
                    write!(f, "^{n}")
                }
            }
            N::Powf(a, r) => {
                write_operand(f, a, 5)?;
                write!(f, "^({})", fmt_number(*r))
            }
            N::Pow(a, b) => {
                write_operand(f, a, 5)?;
                f.write_str("^")?;
                write_operand(f, b, 5)
            }
            N::Func(func, a) => write!(f, "{}({a})", func.name()),
            N::Atan2(y, x) => write!(f, "atan2({y}, {x})"),
            N::Compose(profile, inner) => write!(f, "compose({profile}, {inner})"),
            N::Partial(a, axis) => write!(f, "d({a}, {})", ["x", "y", "z"][*axis]),
            N::Dot(u, v) => write!(f, "dot({u}, {v})"),
            N::Component(v, axis) => write!(f, "comp({v}, {axis})"),
        }
    }
}

impl From<f64> for ScalarExpr {
    fn from(c: f64) -> Self {
        ScalarExpr::constant(c)
    }
}

macro_rules! scalar_binop {
    ($trait:ident, $method:ident, $node:ident) => {
        impl ops::$trait<ScalarExpr> for ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: ScalarExpr) -> ScalarExpr {
                ScalarExpr::node(ScalarNode::$node(self, rhs))
            }
        }
        impl ops::$trait<&ScalarExpr> for &ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: &ScalarExpr) -> ScalarExpr {
                ScalarExpr::node(ScalarNode::$node(self.clone(), rhs.clone()))
            }
        }
        impl ops::$trait<f64> for ScalarExpr {
            type Output = ScalarExpr;
            fn $method(self, rhs: f64) -> ScalarExpr {
                ScalarExpr::node(ScalarNode::$node(self, ScalarExpr::constant(rhs)))
            }
        }
        impl ops::$trait<ScalarExpr> for f64 {
            type Output = ScalarExpr;
            fn $method(self, rhs: ScalarExpr) -> ScalarExpr {
                ScalarExpr::node(ScalarNode::$node(ScalarExpr::constant(self), rhs))
            }
        }
    };
}

scalar_binop!(Add, add, Add);
scalar_binop!(Sub, sub, Sub);
scalar_binop!(Mul, mul, Mul);
scalar_binop!(Div, div, Div);

impl ops::Neg for ScalarExpr {
    type Output = ScalarExpr;
    fn neg(self) -> ScalarExpr {
        ScalarExpr::node(ScalarNode::Neg(self))
    }
}

// ---------------------------------------------------------------------------
// Vector expressions
// ---------------------------------------------------------------------------

#[derive(Debug)]
enum VectorNode {
    Components([ScalarExpr; 3]),
    Grad(ScalarExpr),
    Curl(VectorExpr),
    Cross(VectorExpr, VectorExpr),
    Scale(ScalarExpr, VectorExpr),
    Add(VectorExpr, VectorExpr),
    Sub(VectorExpr, VectorExpr),
    Neg(VectorExpr),
    Lie(VectorExpr, VectorExpr),
    KillingLie { w: VectorExpr, a: [f64; 3], b: [f64; 3] },
}

/// A vector field `R³ → R³`.
#[derive(Clone, Debug)]
pub struct VectorExpr(Arc<VectorNode>);

fn dot_jets(a: &[Jet; 3], b: &[Jet; 3]) -> Jet {
    a[0].mul(&b[0]).add(&a[1].mul(&b[1])).add(&a[2].mul(&b[2]))
}

fn cross_jets(a: &[Jet; 3], b: &[Jet; 3]) -> [Jet; 3] {
    [
        a[1].mul(&b[2]).sub(&a[2].mul(&b[1])),
        a[2].mul(&b[0]).sub(&a[0].mul(&b[2])),
        a[0].mul(&b[1]).sub(&a[1].mul(&b[0])),
    ]
}

/// `(v·∇)u`, with `u` given one order higher than `v`.
fn directional(v: &[Jet; 3], u_hi: &[Jet; 3]) -> [Jet; 3] {
    std::array::from_fn(|c| {
        let d: [Jet; 3] = std::array::from_fn(|i| u_hi[c].derivative(i));
        dot_jets(v, &d)
    })
}

fn truncate3(v: &[Jet; 3], order: usize) -> [Jet; 3] {
    std::array::from_fn(|i| v[i].truncate(order))
}

impl VectorExpr {
    fn node(n: VectorNode) -> Self {
        VectorExpr(Arc::new(n))
    }

    pub fn new(components: [ScalarExpr; 3]) -> Self {
        Self::node(VectorNode::Components(components))
    }

    pub fn constant(c: [f64; 3]) -> Self {
        Self::new(c.map(ScalarExpr::constant))
    }

    /// The position field `x ↦ x`.
    pub fn position() -> Self {
        Self::new([ScalarExpr::x(), ScalarExpr::y(), ScalarExpr::z()])
    }

    pub fn grad(f: &ScalarExpr) -> Self {
        Self::node(VectorNode::Grad(f.clone()))
    }

    pub fn curl(&self) -> Self {
        Self::node(VectorNode::Curl(self.clone()))
    }

    pub fn cross(&self, other: &VectorExpr) -> Self {
        Self::node(VectorNode::Cross(self.clone(), other.clone()))
    }

    pub fn scale(&self, s: &ScalarExpr) -> Self {
        Self::node(VectorNode::Scale(s.clone(), self.clone()))
    }

    pub fn dot(&self, other: &VectorExpr) -> ScalarExpr {
        ScalarExpr::dot(self, other)
    }

    /// Component `axis`; the stored expression when built from components.
    pub fn component(&self, axis: usize) -> ScalarExpr {
        match &*self.0 {
            VectorNode::Components(c) => c[axis].clone(),
            _ => ScalarExpr::component(self, axis),
        }
    }

    pub fn div(&self) -> ScalarExpr {
        (0..3)
            .map(|i| self.component(i).partial(i))
            .reduce(|a, b| a + b)
            .expect("three terms")
    }

    /// Lie derivative `ℒ_xi self = (xi·∇)self − (self·∇)xi`.
    pub fn lie(&self, xi: &VectorExpr) -> Self {
        Self::node(VectorNode::Lie(self.clone(), xi.clone()))
    }

    /// Lie derivative along the Killing field `a + b×x`, using
    /// `(w·∇)(b×x) = b×w`.
    pub fn killing_lie(&self, a: [f64; 3], b: [f64; 3]) -> Self {
        Self::node(VectorNode::KillingLie { w: self.clone(), a, b })
    }

    pub fn eval(&self, p: Point3, order: usize) -> Result<[Jet; 3], EvalError> {
        self.eval_ctx(
            &Ctx {
                point: p.to_array(),
                mode: Mode::Cartesian,
            },
            order,
        )
    }

    pub fn value(&self, p: Point3) -> Result<[f64; 3], EvalError> {
        let [a, b, c] = self.eval(p, 0)?;
        Ok([a.value(), b.value(), c.value()])
    }

    /// Value and Jacobian `J[i][j] = ∂_j w_i` at `p`.
    pub fn value_and_jacobian(&self, p: Point3) -> Result<([f64; 3], [[f64; 3]; 3]), EvalError> {
        let jets = self.eval(p, 1)?;
        let value = std::array::from_fn(|i| jets[i].value());
        let jac = std::array::from_fn(|i| jets[i].gradient());
        Ok((value, jac))
    }

    fn eval_ctx(&self, ctx: &Ctx, order: usize) -> Result<[Jet; 3], EvalError> {
        use VectorNode as N;
        Ok(match &*self.0 {
            N::Components(c) => [
                c[0].eval_ctx(ctx, order)?,
                c[1].eval_ctx(ctx, order)?,
                c[2].eval_ctx(ctx, order)?,
            ],
            N::Grad(f) => {
                let hi = f.eval_ctx(ctx, check_order(order)?)?;
                std::array::from_fn(|i| hi.derivative(i))
            }
            N::Curl(v) => {
                let hi = v.eval_ctx(ctx, check_order(order)?)?;
                let d = |c: usize, i: usize| hi[c].derivative(i);
                [d(2, 1).sub(&d(1, 2)), d(0, 2).sub(&d(2, 0)), d(1, 0).sub(&d(0, 1))]
            }
            N::Cross(u, v) => cross_jets(&u.eval_ctx(ctx, order)?, &v.eval_ctx(ctx, order)?),
            N::Scale(s, v) => {
                let sj = s.eval_ctx(ctx, order)?;
                v.eval_ctx(ctx, order)?.map(|c| c.mul(&sj))
            }
            N::Add(u, v) => {
                let (a, b) = (u.eval_ctx(ctx, order)?, v.eval_ctx(ctx, order)?);
                std::array::from_fn(|i| a[i].add(&b[i]))
            }
            N::Sub(u, v) => {
                let (a, b) = (u.eval_ctx(ctx, order)?, v.eval_ctx(ctx, order)?);
                std::array::from_fn(|i| a[i].sub(&b[i]))
            }
            N::Neg(u) => u.eval_ctx(ctx, order)?.map(|c| c.neg()),
            N::Lie(w, xi) => {
                let hi = check_order(order)?;
                let w_hi = w.eval_ctx(ctx, hi)?;
                let xi_hi = xi.eval_ctx(ctx, hi)?;
                let along_xi = directional(&truncate3(&xi_hi, order), &w_hi);
                let along_w = directional(&truncate3(&w_hi, order), &xi_hi);
                std::array::from_fn(|i| along_xi[i].sub(&along_w[i]))
            }
            N::KillingLie { w, a, b } => {
                let hi = check_order(order)?;
                let w_hi = w.eval_ctx(ctx, hi)?;
                let w_lo = truncate3(&w_hi, order);
                let pos: [Jet; 3] = match ctx.mode {
                    Mode::Cartesian => std::array::from_fn(|i| Jet::variable(i, ctx.point[i], order)),
                    Mode::Univariate => return Err(EvalError::Unbound(Var::X)),
                };
                let bj = b.map(|c| Jet::constant(c, order));
                let bx = cross_jets(&bj, &pos);
                let xi: [Jet; 3] = std::array::from_fn(|i| bx[i].add_const(a[i]));
                let transport = directional(&xi, &w_hi);
                let rot = cross_jets(&bj, &w_lo);
                std::array::from_fn(|i| transport[i].sub(&rot[i]))
            }
        })
    }
}

fn fmt_triple(v: &[f64; 3]) -> String {
    format!("[{}, {}, {}]", fmt_number(v[0]), fmt_number(v[1]), fmt_number(v[2]))
}

impl fmt::Display for VectorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use VectorNode as N;
        match &*self.0 {
            N::Components(c) => write!(f, "[{}, {}, {}]", c[0], c[1], c[2]),
            N::Grad(s) => write!(f, "grad({s})"),
            N::Curl(v) => write!(f, "curl({v})"),
            N::Cross(u, v) => write!(f, "cross({u}, {v})"),
            N::Scale(s, v) => write!(f, "scale({s}, {v})"),
            N::Add(u, v) => write!(f, "{u} + {v}"),
            N::Sub(u, v) => match &*v.0 {
                N::Add(..) | N::Sub(..) => write!(f, "{u} - ({v})"),
                _ => write!(f, "{u} - {v}"),
            },
            N::Neg(u) => match &*u.0 {
                N::Add(..) | N::Sub(..) => write!(f, "-({u})"),
                _ => write!(f, "-{u}"),
            },
            N::Lie(w, xi) => write!(f, "lie({w}, {xi})"),
            N::KillingLie { w, a, b } => {
                write!(f, "killing_lie({w}, {}, {})", fmt_triple(a), fmt_triple(b))
            }
        }
    }
}

impl ops::Add for VectorExpr {
    type Output = VectorExpr;
    fn add(self, rhs: VectorExpr) -> VectorExpr {
        VectorExpr::node(VectorNode::Add(self, rhs))
    }
}

impl ops::Sub for VectorExpr {
    type Output = VectorExpr;
    fn sub(self, rhs: VectorExpr) -> VectorExpr {
        VectorExpr::node(VectorNode::Sub(self, rhs))
    }
}

impl ops::Neg for VectorExpr {
    type Output = VectorExpr;
    fn neg(self) -> VectorExpr {
        VectorExpr::node(VectorNode::Neg(self))
    }
}

impl ops::Mul<VectorExpr> for ScalarExpr {
    type Output = VectorExpr;
    fn mul(self, rhs: VectorExpr) -> VectorExpr {
        VectorExpr::node(VectorNode::Scale(self, rhs))
    }
}

impl ops::Mul<VectorExpr> for f64 {
    type Output = VectorExpr;
    fn mul(self, rhs: VectorExpr) -> VectorExpr {
        ScalarExpr::constant(self) * rhs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> ScalarExpr {
        ScalarExpr::x()
    }
    fn y() -> ScalarExpr {
        ScalarExpr::y()
    }
    fn z() -> ScalarExpr {
        ScalarExpr::z()
    }

    #[test]
    fn polynomial_jet_matches_hand_values() {
        let f = x().powi(2) - y().powi(2);
        let j = f.jet2(Point3::new(1.0, 2.0, 0.0)).unwrap();
        assert_eq!(j.value, -3.0);
        assert_eq!(j.grad, [2.0, -4.0, 0.0]);
        assert_eq!([j.hess[0], j.hess[3], j.hess[5]], [2.0, -2.0, 0.0]);
    }

    #[test]
    fn log_of_negative_names_the_node() {
        let f = (x() - 1.0).ln();
        let err = f.value(Point3::ORIGIN).unwrap_err();
        assert_eq!(
            err,
            EvalError::Domain {
                node: "log",
                value: -1.0
            }
        );
        assert!(err.to_string().contains("log"));
    }

    #[test]
    fn unbound_profile_variable_is_reported() {
        let f = ScalarExpr::t() * 2.0;
        assert_eq!(f.value(Point3::ORIGIN).unwrap_err(), EvalError::Unbound(Var::T));
        assert_eq!(f.derivative_at(3.0, 1).unwrap(), 2.0);
    }

    #[test]
    fn composition_applies_chain_rule() {
        // profile T^2 composed with sin(x): d/dx sin(x)^2 = sin(2x)
        let profile = ScalarExpr::t().powi(2);
        let f = x().sin().compose_into(&profile);
        let p = Point3::new(0.4, 0.0, 0.0);
        let j = f.jet2(p).unwrap();
        assert!((j.value - 0.4f64.sin().powi(2)).abs() < 1e-15);
        assert!((j.grad[0] - 0.8f64.sin()).abs() < 1e-15);
        assert!((j.hess[0] - 2.0 * 0.8f64.cos()).abs() < 1e-14);
    }

    #[test]
    fn curl_of_constant_rotation() {
        // w = (-y, x, 0) has curl (0, 0, 2)
        let w = VectorExpr::new([-y(), x(), ScalarExpr::constant(0.0)]);
        let c = w.curl().value(Point3::new(0.3, -0.2, 0.9)).unwrap();
        assert_eq!(c, [0.0, 0.0, 2.0]);
    }

    #[test]
    fn killing_lie_matches_general_lie() {
        let w = VectorExpr::new([z().sin(), (x() * y()).cos(), x().exp()]);
        let (a, b) = ([0.2, -0.4, 1.0], [0.5, 0.1, -0.3]);
        let xi = VectorExpr::constant(a) + VectorExpr::constant(b).cross(&VectorExpr::position());
        let p = Point3::new(0.3, -0.7, 0.2);
        let k = w.killing_lie(a, b).eval(p, 2).unwrap();
        let l = w.lie(&xi).eval(p, 2).unwrap();
        for i in 0..3 {
            for (u, v) in k[i].coeffs().iter().zip(l[i].coeffs()) {
                assert!((u - v).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn display_is_readable() {
        let f = (x().powi(2) - y().powi(2)) / 2.0 + z();
        assert_eq!(f.to_string(), "(x^2 - y^2)/2 + z");
        let g = -(x() * (y() + 1.0)).exp();
        assert_eq!(g.to_string(), "-exp(x*(y + 1))");
    }

    #[test]
    fn order_budget_is_enforced() {
        let mut f = x().sin();
        for _ in 0..MAX_ORDER {
            f = f.partial(0);
        }
        assert!(f.value(Point3::ORIGIN).is_ok());
        let g = f.partial(0);
        assert!(matches!(g.value(Point3::ORIGIN), Err(EvalError::OrderExceeded(_))));
    }
}
