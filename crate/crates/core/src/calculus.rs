//! Differential operators on field expressions and the residual checks built
//! from them.

use crate::expr::{EvalError, Point3, ScalarExpr, VectorExpr};
use crate::jet::Jet2;
use crate::report::{columns, cross3, dot3, norm3, per_sample, sub3, CheckStats, ResidualReport};
use crate::sampling::SampleSet;

pub fn eval_jet(f: &ScalarExpr, p: Point3) -> Result<Jet2, EvalError> {
    f.jet2(p)
}

pub fn grad(f: &ScalarExpr) -> VectorExpr {
    VectorExpr::grad(f)
}

pub fn div(w: &VectorExpr, p: Point3) -> Result<f64, EvalError> {
    let (_, j) = w.value_and_jacobian(p)?;
    Ok(j[0][0] + j[1][1] + j[2][2])
}

pub fn curl(w: &VectorExpr) -> VectorExpr {
    w.curl()
}

/// `(ξ·∇)w − (w·∇)ξ`.
pub fn lie_derivative(w: &VectorExpr, xi: &VectorExpr) -> VectorExpr {
    w.lie(xi)
}

/// `(∇φ)² (w·∇φ)²`; vanishes on characteristic covectors.
pub fn characteristic_polynomial(w: [f64; 3], phi_grad: [f64; 3]) -> f64 {
    let g2 = dot3(phi_grad, phi_grad);
    let wg = dot3(w, phi_grad);
    g2 * wg * wg
}

/// Curl from a Jacobian `J[i][j] = ∂_j w_i`.
pub fn curl_of_jacobian(j: &[[f64; 3]; 3]) -> [f64; 3] {
    [j[2][1] - j[1][2], j[0][2] - j[2][0], j[1][0] - j[0][1]]
}

pub fn trace(j: &[[f64; 3]; 3]) -> f64 {
    j[0][0] + j[1][1] + j[2][2]
}

/// Per-sample `|w×(∇×w) − ∇χ|` and `|∇·w|`.
pub fn force_balance_residual(w: &VectorExpr, chi: &ScalarExpr, samples: &SampleSet, tol: f64) -> ResidualReport {
    let rows = per_sample(samples, |p| {
        let (v, j) = w.value_and_jacobian(p)?;
        let gchi = chi.eval(p, 1)?.gradient();
        let lorentz = cross3(v, curl_of_jacobian(&j));
        Ok([norm3(sub3(lorentz, gchi)), trace(&j).abs()])
    });
    let [fb, dv] = columns(&rows);
    let mut r = ResidualReport::new(format!("force balance of {w}"), samples);
    r.push(CheckStats::from_results("force_balance", &fb, tol));
    r.push(CheckStats::from_results("divergence", &dv, tol));
    r
}

/// Per-sample `|∇×w − ĥw|` and `|∇·w|`.
pub fn beltrami_residual(w: &VectorExpr, h: &ScalarExpr, samples: &SampleSet, tol: f64) -> ResidualReport {
    let rows = per_sample(samples, |p| {
        let (v, j) = w.value_and_jacobian(p)?;
        let hv = h.value(p)?;
        let c = curl_of_jacobian(&j);
        Ok([norm3(sub3(c, v.map(|x| hv * x))), trace(&j).abs()])
    });
    let [bel, dv] = columns(&rows);
    let mut r = ResidualReport::new(format!("beltrami residual of {w}"), samples);
    r.push(CheckStats::from_results("beltrami", &bel, tol));
    r.push(CheckStats::from_results("divergence", &dv, tol));
    r
}

/// Per-sample Euclidean norm of a vector field, as a named check.
pub fn magnitude_check(name: &str, v: &VectorExpr, samples: &SampleSet, tol: f64) -> CheckStats {
    let vals = per_sample(samples, |p| Ok(norm3(v.value(p)?)));
    CheckStats::from_results(name, &vals, tol)
}

/// Per-sample absolute value of a scalar field, as a named check.
pub fn abs_check(name: &str, f: &ScalarExpr, samples: &SampleSet, tol: f64) -> CheckStats {
    let vals = per_sample(samples, |p| Ok(f.value(p)?.abs()));
    CheckStats::from_results(name, &vals, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_scalar, parse_vector};
    use crate::sampling::DomainSpec;

    #[test]
    fn polynomial_jet() {
        let j = eval_jet(&parse_scalar("x^2 - y^2").unwrap(), Point3::new(1.0, 2.0, 0.0)).unwrap();
        assert_eq!(j.value, -3.0);
        assert_eq!(j.grad, [2.0, -4.0, 0.0]);
        assert_eq!(
            [j.hess_entry(0, 0), j.hess_entry(1, 1), j.hess_entry(2, 2)],
            [2.0, -2.0, 0.0]
        );
    }

    #[test]
    fn divergence_examples() {
        let p = Point3::new(0.3, -0.7, 0.2);
        assert_eq!(div(&parse_vector("[x, -y, 0]").unwrap(), p).unwrap(), 0.0);
        assert_eq!(div(&VectorExpr::position(), p).unwrap(), 3.0);
    }

    #[test]
    fn characteristic_polynomial_examples() {
        assert_eq!(characteristic_polynomial([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]), 0.0);
        assert_eq!(characteristic_polynomial([1.0, 0.0, 0.0], [1.0, 0.0, 0.0]), 1.0);
        assert_eq!(characteristic_polynomial([1.0, 1.0, 0.0], [2.0, 0.0, 0.0]), 16.0);
    }

    #[test]
    fn constant_field_rotation_lie() {
        let w = VectorExpr::constant([1.0, 0.0, 0.0]);
        let xi = parse_vector("[-y, x, 0]").unwrap();
        let l = lie_derivative(&w, &xi);
        for p in [Point3::ORIGIN, Point3::new(0.4, -1.0, 2.0)] {
            assert_eq!(l.value(p).unwrap(), [0.0, -1.0, 0.0]);
        }
    }

    #[test]
    fn gradient_field_is_force_free_with_zero_pressure() {
        let s = SampleSet::halton(&DomainSpec::unit_ball(), 200, 0).unwrap();
        let w = grad(&parse_scalar("x*y*z + exp(x)*sin(y)").unwrap());
        let r = force_balance_residual(&w, &ScalarExpr::constant(0.0), &s, 1e-10);
        assert!(r.check("force_balance").unwrap().passed);
        assert!(r.max("force_balance") < 1e-12);
    }

    #[test]
    fn failing_samples_are_counted_not_fatal() {
        let d = DomainSpec::boxed([-1.0, -1.0, -1.0], [1.0, 1.0, 1.0]);
        let s = SampleSet::halton(&d, 100, 0).unwrap();
        let w = grad(&parse_scalar("log(x)").unwrap());
        let r = force_balance_residual(&w, &ScalarExpr::constant(0.0), &s, 1e-8);
        let c = r.check("force_balance").unwrap();
        assert!(c.n_failed > 0 && c.n_ok > 0);
        assert!(!r.passed());
    }
}
