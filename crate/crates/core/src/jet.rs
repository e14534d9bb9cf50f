//! Truncated multivariate Taylor jets in three variables.
//!
//! A [`Jet`] of order `K` stores the Taylor coefficients `∂^α f / α!` for every
//! multi-index `|α| ≤ K`. Coefficients are laid out by total degree, so the
//! first `n(K')` entries of an order-`K` jet form the order-`K'` truncation.
//! Partial differentiation maps an order-`K` jet to an exact order-`K − 1` jet,
//! which is how the vector-calculus nodes in [`crate::expr`] compose without
//! finite differences.

use std::sync::OnceLock;

/// Highest jet order supported by the precomputed tables.
pub const MAX_ORDER: usize = 8;

struct Tables {
    multi: Vec<[usize; 3]>,
    degree_end: Vec<usize>,
    lookup: Vec<usize>,
    products: Vec<(u16, u16, u16)>,
    product_end: Vec<usize>,
    shift: [Vec<usize>; 3],
}

const NONE: usize = usize::MAX;

fn lookup_key(a: [usize; 3]) -> usize {
    let m = MAX_ORDER + 1;
    (a[0] * m + a[1]) * m + a[2]
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut multi = Vec::new();
        let mut degree_end = Vec::with_capacity(MAX_ORDER + 1);
        for d in 0..=MAX_ORDER {
            for i in (0..=d).rev() {
                for j in (0..=d - i).rev() {
                    multi.push([i, j, d - i - j]);
                }
            }
            degree_end.push(multi.len());
        }
        let m = MAX_ORDER + 1;
        let mut lookup = vec![NONE; m * m * m];
        for (idx, a) in multi.iter().enumerate() {
            lookup[lookup_key(*a)] = idx;
        }
        let deg = |a: &[usize; 3]| a[0] + a[1] + a[2];
        let mut products = Vec::new();
        let mut product_end = Vec::with_capacity(MAX_ORDER + 1);
        for d in 0..=MAX_ORDER {
            for (ia, a) in multi.iter().enumerate() {
                for (ib, b) in multi.iter().enumerate() {
                    if deg(a) + deg(b) != d {
                        continue;
                    }
                    let out = [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
                    let io = lookup[lookup_key(out)];
                    products.push((ia as u16, ib as u16, io as u16));
                }
            }
            product_end.push(products.len());
        }
        let shift = std::array::from_fn(|axis| {
            multi
                .iter()
                .map(|a| {
                    let mut b = *a;
                    b[axis] += 1;
                    if deg(&b) > MAX_ORDER {
                        NONE
                    } else {
                        lookup[lookup_key(b)]
                    }
                })
                .collect()
        });
        Tables {
            multi,
            degree_end,
            lookup,
            products,
            product_end,
            shift,
        }
    })
}

/// Number of Taylor coefficients of an order-`order` jet in three variables.
pub fn coeff_count(order: usize) -> usize {
    tables().degree_end[order]
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Truncated Taylor polynomial of a scalar function around a point.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    order: usize,
    coeffs: Vec<f64>,
}

impl Jet {
    pub fn constant(value: f64, order: usize) -> Self {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        let mut coeffs = vec![0.0; coeff_count(order)];
        coeffs[0] = value;
        Self { order, coeffs }
    }

    pub fn zero(order: usize) -> Self {
        Self::constant(0.0, order)
    }

    /// The coordinate function `x_axis`, seeded at `value`.
    pub fn variable(axis: usize, value: f64, order: usize) -> Self {
        let mut jet = Self::constant(value, order);
        if order >= 1 {
            let mut a = [0; 3];
            a[axis] = 1;
            jet.coeffs[tables().lookup[lookup_key(a)]] = 1.0;
        }
        jet
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Taylor coefficient for the multi-index `alpha` (zero beyond the order).
    pub fn coeff(&self, alpha: [usize; 3]) -> f64 {
        if alpha.iter().sum::<usize>() > self.order {
            return 0.0;
        }
        self.coeffs[tables().lookup[lookup_key(alpha)]]
    }

    /// The mixed partial derivative `∂^alpha f` at the expansion point.
    pub fn partial(&self, alpha: [usize; 3]) -> f64 {
        let scale: f64 = alpha.iter().map(|&k| factorial(k)).product();
        self.coeff(alpha) * scale
    }

    pub fn gradient(&self) -> [f64; 3] {
        [
            self.partial([1, 0, 0]),
            self.partial([0, 1, 0]),
            self.partial([0, 0, 1]),
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    /// Exact partial derivative along `axis`, one order lower.
    pub fn derivative(&self, axis: usize) -> Jet {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let t = tables();
        let n = coeff_count(self.order - 1);
        let coeffs = (0..n)
            .map(|idx| {
                let up = t.shift[axis][idx];
                (t.multi[idx][axis] + 1) as f64 * self.coeffs[up]
            })
            .collect();
        Jet {
            order: self.order - 1,
            coeffs,
        }
    }

    pub fn truncate(&self, order: usize) -> Jet {
        assert!(order <= self.order);
        Jet {
            order,
            coeffs: self.coeffs[..coeff_count(order)].to_vec(),
        }
    }

    fn paired<'a>(&'a self, other: &'a Jet) -> (usize, &'a [f64], &'a [f64]) {
        let order = self.order.min(other.order);
        let n = coeff_count(order);
        (order, &self.coeffs[..n], &other.coeffs[..n])
    }

    pub fn add(&self, other: &Jet) -> Jet {
        let (order, a, b) = self.paired(other);
        Jet {
            order,
            coeffs: a.iter().zip(b).map(|(x, y)| x + y).collect(),
        }
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        let (order, a, b) = self.paired(other);
        Jet {
            order,
            coeffs: a.iter().zip(b).map(|(x, y)| x - y).collect(),
        }
    }

    pub fn neg(&self) -> Jet {
        self.scale(-1.0)
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add_const(&self, s: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    pub fn mul(&self, other: &Jet) -> Jet {
        let (order, a, b) = self.paired(other);
        let t = tables();
        let mut coeffs = vec![0.0; a.len()];
        for &(ia, ib, io) in &t.products[..t.product_end[order]] {
            coeffs[io as usize] += a[ia as usize] * b[ib as usize];
        }
        Jet { order, coeffs }
    }

    /// Evaluates `Σ series[k] (self − self(0))^k`, i.e. composes a univariate
    /// function with known Taylor coefficients at `self.value()`.
    pub fn compose(&self, series: &[f64]) -> Jet {
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let k_max = self.order.min(series.len().saturating_sub(1));
        let mut acc = Jet::constant(series[k_max], self.order);
        for k in (0..k_max).rev() {
            acc = acc.mul(&h).add_const(series[k]);
        }
        acc
    }

    pub fn recip(&self) -> Jet {
        self.compose(&series::powi(self.value(), -1, self.order))
    }

    pub fn div(&self, other: &Jet) -> Jet {
        self.mul(&other.recip())
    }

    pub fn powi(&self, n: i32) -> Jet {
        self.compose(&series::powi(self.value(), n, self.order))
    }

    pub fn powf(&self, r: f64) -> Jet {
        self.compose(&series::powf(self.value(), r, self.order))
    }

    pub fn exp(&self) -> Jet {
        self.compose(&series::exp(self.value(), self.order))
    }

    pub fn ln(&self) -> Jet {
        self.compose(&series::ln(self.value(), self.order))
    }

    pub fn sin(&self) -> Jet {
        self.compose(&series::sin(self.value(), self.order))
    }

    pub fn cos(&self) -> Jet {
        self.compose(&series::cos(self.value(), self.order))
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    pub fn atan(&self) -> Jet {
        self.compose(&series::atan(self.value(), self.order))
    }

    /// Four-quadrant arctangent of `self / x`, smooth away from the origin.
    pub fn atan2(&self, x: &Jet) -> Jet {
        let (y0, x0) = (self.value(), x.value());
        let value = y0.atan2(x0);
        let mut out = if x0.abs() >= y0.abs() {
            self.div(x).atan()
        } else {
            x.div(self).atan().neg()
        };
        out.coeffs[0] = value;
        out
    }

    pub fn to_jet2(&self) -> Jet2 {
        Jet2::from_jet(self)
    }
}

/// Taylor coefficients `f^(k)(a) / k!` of elementary functions.
pub mod series {
    use super::factorial;

    pub fn exp(a: f64, order: usize) -> Vec<f64> {
        let e = a.exp();
        (0..=order).map(|k| e / factorial(k)).collect()
    }

    pub fn ln(a: f64, order: usize) -> Vec<f64> {
        let mut out = vec![a.ln()];
        for k in 1..=order {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            out.push(sign / (k as f64 * a.powi(k as i32)));
        }
        out
    }

    pub fn sin(a: f64, order: usize) -> Vec<f64> {
        let (s, c) = a.sin_cos();
        let cycle = [s, c, -s, -c];
        (0..=order).map(|k| cycle[k % 4] / factorial(k)).collect()
    }

    pub fn cos(a: f64, order: usize) -> Vec<f64> {
        let (s, c) = a.sin_cos();
        let cycle = [c, -s, -c, s];
        (0..=order).map(|k| cycle[k % 4] / factorial(k)).collect()
    }

    pub fn powi(a: f64, n: i32, order: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(order + 1);
        let mut binom = 1.0;
        for k in 0..=order {
            if k > 0 {
                binom *= (n as f64 - (k - 1) as f64) / k as f64;
            }
            if n >= 0 && k as i32 > n {
                out.push(0.0);
            } else {
                out.push(binom * a.powi(n - k as i32));
            }
        }
        out
    }

    pub fn powf(a: f64, r: f64, order: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(order + 1);
        let mut binom = 1.0;
        for k in 0..=order {
            if k > 0 {
                binom *= (r - (k - 1) as f64) / k as f64;
            }
            out.push(binom * a.powf(r - k as f64));
        }
        out
    }

    pub fn atan(a: f64, order: usize) -> Vec<f64> {
        // 1 / (1 + (a + t)^2) expanded in t, then integrated term by term.
        let q0 = 1.0 + a * a;
        let q1 = 2.0 * a;
        let mut g: Vec<f64> = Vec::with_capacity(order);
        for n in 0..order {
            let v = match n {
                0 => 1.0 / q0,
                1 => -q1 * g[0] / q0,
                _ => -(q1 * g[n - 1] + g[n - 2]) / q0,
            };
            g.push(v);
        }
        let mut out = vec![a.atan()];
        out.extend((1..=order).map(|k| g[k - 1] / k as f64));
        out
    }
}

/// Value, gradient and symmetric Hessian of a scalar at a point.
///
/// The Hessian is stored as its upper triangle in the order
/// `xx, xy, xz, yy, yz, zz`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Jet2 {
    pub value: f64,
    pub grad: [f64; 3],
    pub hess: [f64; 6],
}

impl Jet2 {
    fn from_jet(jet: &Jet) -> Self {
        let p = |a| jet.partial(a);
        Self {
            value: jet.value(),
            grad: jet.gradient(),
            hess: [
                p([2, 0, 0]),
                p([1, 1, 0]),
                p([1, 0, 1]),
                p([0, 2, 0]),
                p([0, 1, 1]),
                p([0, 0, 2]),
            ],
        }
    }

    pub fn hess_entry(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let idx = match (i, j) {
            (0, 0) => 0,
            (0, 1) => 1,
            (0, 2) => 2,
            (1, 1) => 3,
            (1, 2) => 4,
            _ => 5,
        };
        self.hess[idx]
    }

    pub fn laplacian(&self) -> f64 {
        self.hess[0] + self.hess[3] + self.hess[5]
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.grad.iter().all(|g| g.is_finite()) && self.hess.iter().all(|h| h.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xyz(p: [f64; 3], order: usize) -> [Jet; 3] {
        std::array::from_fn(|i| Jet::variable(i, p[i], order))
    }

    #[test]
    fn coefficient_counts_follow_binomials() {
        assert_eq!(coeff_count(0), 1);
        assert_eq!(coeff_count(2), 10);
        assert_eq!(coeff_count(5), 56);
        assert_eq!(coeff_count(MAX_ORDER), 165);
    }

    #[test]
    fn product_of_coordinates_has_unit_mixed_partial() {
        let [x, y, z] = xyz([0.5, -1.0, 2.0], 3);
        let f = x.mul(&y).mul(&z);
        assert_eq!(f.value(), -1.0);
        assert_eq!(f.partial([1, 1, 1]), 1.0);
        assert_eq!(f.partial([1, 1, 0]), 2.0);
        assert_eq!(f.partial([2, 0, 0]), 0.0);
    }

    #[test]
    fn exp_series_matches_closed_form_derivatives() {
        let [x, _, _] = xyz([0.3, 0.0, 0.0], 6);
        let f = x.scale(2.0).exp();
        for k in 0..=6 {
            let expect = 2f64.powi(k as i32) * 0.6f64.exp();
            assert!((f.partial([k, 0, 0]) - expect).abs() < 1e-12 * expect);
        }
    }

    #[test]
    fn derivative_lowers_order_exactly() {
        let [x, y, _] = xyz([1.2, 0.7, 0.0], 4);
        let f = x.sin().mul(&y.cos());
        let fx = f.derivative(0);
        assert_eq!(fx.order(), 3);
        let g = x.cos().mul(&y.cos());
        for (a, b) in fx.coeffs().iter().zip(g.truncate(3).coeffs()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn atan2_matches_atan_in_both_branches() {
        for &(py, px) in &[(0.3, 1.1), (1.4, 0.2), (-0.9, -0.3), (0.5, -2.0)] {
            let [x, y, _] = xyz([px, py, 0.0], 3);
            let f = y.atan2(&x);
            assert!((f.value() - f64::atan2(py, px)).abs() < 1e-15);
            let r2 = px * px + py * py;
            assert!((f.partial([1, 0, 0]) + py / r2).abs() < 1e-14);
            assert!((f.partial([0, 1, 0]) - px / r2).abs() < 1e-14);
            // ∂xx atan2 = 2xy / r^4
            let dxx = 2.0 * px * py / (r2 * r2);
            assert!((f.partial([2, 0, 0]) - dxx).abs() < 1e-13);
        }
    }

    #[test]
    fn negative_integer_powers_handle_negative_base() {
        let [x, _, _] = xyz([-2.0, 0.0, 0.0], 3);
        let f = x.powi(-2);
        assert!((f.value() - 0.25).abs() < 1e-15);
        assert!((f.partial([1, 0, 0]) - 0.25).abs() < 1e-15);
        assert!((f.partial([3, 0, 0]) - (-24.0 / -32.0)).abs() < 1e-14);
    }

    #[test]
    fn jet2_hessian_is_symmetric_view() {
        let [x, y, z] = xyz([1.0, 2.0, 0.5], 2);
        let f = x.mul(&x).sub(&y.mul(&y)).add(&x.mul(&z));
        let j = f.to_jet2();
        assert_eq!(j.hess_entry(0, 2), j.hess_entry(2, 0));
        assert_eq!(j.hess_entry(0, 2), 1.0);
        assert_eq!(j.laplacian(), 0.0);
    }
}
