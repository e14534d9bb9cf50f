//! Lie transport of Beltrami fields along Euclidean Killing fields.
//!
//! For `ξ = a + b×x`, `ℒ_ξ` commutes with the curl, so when `ξ·∇ĥ = 0` every
//! `ℒ_ξⁿ w` is again a Beltrami field with the same `ĥ`.

use serde::Serialize;
use thiserror::Error;

use crate::beltrami::BeltramiRecord;
use crate::calculus::{beltrami_residual, curl_of_jacobian, trace};
use crate::expr::{EvalError, Point3, ScalarExpr, VectorExpr};
use crate::report::{columns, dot3, norm3, per_sample, sub3, CheckStats, ResidualReport};
use crate::sampling::SampleSet;
use crate::symmetry::{lie_euclidean, KillingParams};

pub const H_SYMMETRY_TOL: f64 = 1e-9;
pub const MEMBER_BELTRAMI_TOL: f64 = 1e-7;
pub const MEMBER_DIVERGENCE_TOL: f64 = 1e-8;
pub const COMMUTATOR_TOL: f64 = 1e-5;
/// Relative to the base field's largest sampled magnitude.
pub const TERMINAL_NULL: f64 = 1e-12;
/// Each member costs one derivative order.
pub const MAX_ORBIT_DEPTH: usize = 4;

#[derive(Debug, Error)]
pub enum OrbitError {
    #[error("generator does not preserve h: max |xi.grad h| = {max:e}")]
    Hypothesis { max: f64, report: Box<ResidualReport> },
    #[error("orbit depth {0} exceeds the supported maximum {MAX_ORBIT_DEPTH}")]
    TooDeep(usize),
}

/// `|ℒ_ξ(∇×w) − ∇×(ℒ_ξ w)|` with the solenoidality precondition.
pub fn commutator_defect(w: &VectorExpr, k: KillingParams, samples: &SampleSet) -> ResidualReport {
    let lhs = lie_euclidean(&w.curl(), k);
    let rhs = lie_euclidean(w, k).curl();
    let rows = per_sample(samples, |p| {
        let (_, j) = w.value_and_jacobian(p)?;
        Ok([norm3(sub3(lhs.value(p)?, rhs.value(p)?)), trace(&j).abs()])
    });
    let [d, dv] = columns(&rows);
    let mut r = ResidualReport::new(format!("curl commutator of {w} along {k}"), samples);
    r.push(CheckStats::from_results("commutator", &d, COMMUTATOR_TOL));
    r.push(CheckStats::from_results("divergence", &dv, MEMBER_DIVERGENCE_TOL));
    r
}

/// `|(a + b×x)·∇ĥ|`.
pub fn h_symmetry_check(h: &ScalarExpr, k: KillingParams, samples: &SampleSet) -> ResidualReport {
    let vals = per_sample(samples, |p| Ok(dot3(k.value_at(p), h.eval(p, 1)?.gradient()).abs()));
    let mut r = ResidualReport::new(format!("invariance of h = {h} along {k}"), samples);
    r.push(CheckStats::from_results("h_invariance", &vals, H_SYMMETRY_TOL));
    r
}

#[derive(Clone, Debug)]
pub struct LieOrbit {
    pub base: BeltramiRecord,
    pub generator: KillingParams,
    /// `ℒⁿ w` for `n = 0..`; ends early at a terminal null or a failed member.
    pub members: Vec<VectorExpr>,
    pub reports: Vec<ResidualReport>,
    pub max_magnitudes: Vec<f64>,
    /// First `n` whose member vanishes on the samples.
    pub terminal_null: Option<usize>,
    /// First `n` whose member failed its residual gates.
    pub truncated: Option<usize>,
    pub requested: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct MemberSummary {
    pub n: usize,
    pub max_magnitude: f64,
    pub beltrami_max: f64,
    pub divergence_max: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct OrbitSummary {
    pub base: String,
    pub h: String,
    pub generator: KillingParams,
    pub requested: usize,
    pub members: Vec<MemberSummary>,
    pub terminal_null: Option<usize>,
    pub truncated: Option<usize>,
    pub passed: bool,
}

impl LieOrbit {
    /// Every member up to the terminal null (if any) passed.
    pub fn passed(&self) -> bool {
        self.truncated.is_none() && self.reports.iter().all(|r| r.passed())
    }

    pub fn summary(&self) -> OrbitSummary {
        OrbitSummary {
            base: self.base.name.clone(),
            h: self.base.h.to_string(),
            generator: self.generator,
            requested: self.requested,
            members: self
                .reports
                .iter()
                .enumerate()
                .map(|(n, r)| MemberSummary {
                    n,
                    max_magnitude: self.max_magnitudes[n],
                    beltrami_max: r.max("beltrami"),
                    divergence_max: r.max("divergence"),
                    passed: r.passed(),
                })
                .collect(),
            terminal_null: self.terminal_null,
            truncated: self.truncated,
            passed: self.passed(),
        }
    }
}

fn member_report(w: &VectorExpr, h: &ScalarExpr, samples: &SampleSet, n: usize) -> ResidualReport {
    let mut r = beltrami_residual(w, h, samples, MEMBER_BELTRAMI_TOL);
    r.subject = format!("orbit member {n}");
    if let Some(c) = r.checks.iter_mut().find(|c| c.name == "divergence") {
        c.tolerance = MEMBER_DIVERGENCE_TOL;
        c.passed = c.n_ok > 0 && c.n_failed == 0 && c.max < MEMBER_DIVERGENCE_TOL;
    }
    r
}

fn max_magnitude(w: &VectorExpr, samples: &SampleSet) -> f64 {
    per_sample(samples, |p| Ok(norm3(w.value(p)?)))
        .into_iter()
        .map(|v| v.unwrap_or(f64::NAN))
        .fold(0.0, f64::max)
}

/// Builds `ℒⁿ_ξ w` for `n ≤ depth`, verifying each member on `samples`.
pub fn lie_generate(
    base: &BeltramiRecord,
    k: KillingParams,
    depth: usize,
    samples: &SampleSet,
) -> Result<LieOrbit, OrbitError> {
    if depth > MAX_ORBIT_DEPTH {
        return Err(OrbitError::TooDeep(depth));
    }
    let hyp = h_symmetry_check(&base.h, k, samples);
    if !hyp.passed() {
        return Err(OrbitError::Hypothesis {
            max: hyp.max("h_invariance"),
            report: Box::new(hyp),
        });
    }
    let mut orbit = LieOrbit {
        base: base.clone(),
        generator: k,
        members: vec![base.field.clone()],
        reports: vec![member_report(&base.field, &base.h, samples, 0)],
        max_magnitudes: vec![max_magnitude(&base.field, samples)],
        terminal_null: None,
        truncated: None,
        requested: depth,
    };
    let scale = orbit.max_magnitudes[0];
    for n in 1..=depth {
        let m = lie_euclidean(&orbit.members[n - 1], k);
        let mag = max_magnitude(&m, samples);
        let report = member_report(&m, &base.h, samples, n);
        let ok = report.passed();
        orbit.members.push(m);
        orbit.reports.push(report);
        orbit.max_magnitudes.push(mag);
        if mag <= TERMINAL_NULL * scale {
            orbit.terminal_null = Some(n);
            break;
        }
        if !ok {
            orbit.truncated = Some(n);
            break;
        }
    }
    Ok(orbit)
}

/// Rigid motion generated by `a + b×x` at time `eps`: `x ↦ R x + S a` with
/// `R = exp(eps K_b)` and `S = ∫₀^eps exp(s K_b) ds`.
pub fn rigid_motion(k: KillingParams, eps: f64) -> ([[f64; 3]; 3], [[f64; 3]; 3]) {
    let b = k.b;
    let nb = norm3(b);
    let kb = [[0.0, -b[2], b[1]], [b[2], 0.0, -b[0]], [-b[1], b[0], 0.0]];
    let mut k2 = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k2[i][j] = (0..3).map(|l| kb[i][l] * kb[l][j]).sum();
        }
    }
    let id = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    if nb == 0.0 {
        return (
            std::array::from_fn(|i| std::array::from_fn(|j| id(i, j))),
            std::array::from_fn(|i| std::array::from_fn(|j| eps * id(i, j))),
        );
    }
    let t = eps * nb;
    let (c1, c2) = (t.sin() / nb, (1.0 - t.cos()) / (nb * nb));
    let (s1, s2) = ((1.0 - t.cos()) / (nb * nb), (eps - t.sin() / nb) / (nb * nb));
    (
        std::array::from_fn(|i| std::array::from_fn(|j| id(i, j) + c1 * kb[i][j] + c2 * k2[i][j])),
        std::array::from_fn(|i| std::array::from_fn(|j| eps * id(i, j) + s1 * kb[i][j] + s2 * k2[i][j])),
    )
}

/// Pullback of `w` by the rigid motion: `Rᵀ w(R x + S a)`.
pub fn rigid_pullback(w: &VectorExpr, k: KillingParams, eps: f64, p: Point3) -> Result<[f64; 3], EvalError> {
    let (r, s) = rigid_motion(k, eps);
    let x = p.to_array();
    let q: [f64; 3] = std::array::from_fn(|i| (0..3).map(|j| r[i][j] * x[j] + s[i][j] * k.a[j]).sum());
    let v = w.value(Point3::from_array(q))?;
    Ok(std::array::from_fn(|i| (0..3).map(|j| r[j][i] * v[j]).sum()))
}

#[derive(Clone, Debug, Serialize)]
pub struct TransportSlope {
    pub eps: Vec<f64>,
    /// `max |pullback_eps w − (w + eps ℒ w)|` over the samples.
    pub defect: Vec<f64>,
    /// Least-squares slope of log defect against log eps.
    pub slope: f64,
}

/// Agreement of first-order transport `w + εℒw` with the exact rigid
/// pullback; the defect is `O(ε²)`, so the slope should be 2.
pub fn transport_slope(w: &VectorExpr, k: KillingParams, samples: &SampleSet, eps: &[f64]) -> TransportSlope {
    let lie = lie_euclidean(w, k);
    let defect: Vec<f64> = eps
        .iter()
        .map(|&e| {
            per_sample(samples, |p| {
                let exact = rigid_pullback(w, k, e, p)?;
                let (v, l) = (w.value(p)?, lie.value(p)?);
                Ok(norm3(std::array::from_fn(|i| exact[i] - v[i] - e * l[i])))
            })
            .into_iter()
            .map(|v| v.unwrap_or(f64::NAN))
            .fold(0.0, f64::max)
        })
        .collect();
    let (lx, ly): (Vec<f64>, Vec<f64>) = eps.iter().zip(&defect).map(|(e, d)| (e.ln(), d.ln())).unzip();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    TransportSlope {
        eps: eps.to_vec(),
        defect,
        slope: cov / var,
    }
}

/// `e^x[(1+x) sin s + y cos s, (1+x) cos s − y sin s, 0]` with `s = y + z²`:
/// the first rotational transport of `zsq_x3` about the z-axis.
pub fn rotated_zsq_member() -> VectorExpr {
    let (x, y, z) = (ScalarExpr::x(), ScalarExpr::y(), ScalarExpr::z());
    let s = y.clone() + z.powi(2);
    let e = x.clone().exp();
    let one_x = ScalarExpr::constant(1.0) + x;
    VectorExpr::new([
        e.clone() * (one_x.clone() * s.clone().sin() + y.clone() * s.clone().cos()),
        e * (one_x * s.clone().cos() - y * s.sin()),
        ScalarExpr::constant(0.0),
    ])
}

/// Largest `|∇×w − ĥw|` for an arbitrary field, used on orbit members
/// outside [`lie_generate`].
pub fn beltrami_defect(w: &VectorExpr, h: &ScalarExpr, p: Point3) -> Result<f64, EvalError> {
    let (v, j) = w.value_and_jacobian(p)?;
    let hv = h.value(p)?;
    Ok(norm3(sub3(curl_of_jacobian(&j), v.map(|c| hv * c))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beltrami::catalog;
    use crate::sampling::DomainSpec;
    use crate::symmetry::{killing_scan, DEFAULT_THRESHOLD};

    fn samples(d: &DomainSpec, n: usize) -> SampleSet {
        SampleSet::halton(d, n, 0).unwrap()
    }

    #[test]
    fn h_symmetry_examples() {
        let h = ScalarExpr::constant(2.0) * ScalarExpr::z();
        let s = samples(&DomainSpec::unit_ball(), 100);
        assert_eq!(
            h_symmetry_check(&h, KillingParams::translation(0), &s).max("h_invariance"),
            0.0
        );
        assert_eq!(
            h_symmetry_check(&h, KillingParams::rotation(2), &s).max("h_invariance"),
            0.0
        );
        let r = h_symmetry_check(&h, KillingParams::translation(2), &s);
        let c = r.check("h_invariance").unwrap();
        assert!(!c.passed && c.max == 2.0 && c.mean == 2.0);
    }

    #[test]
    fn commutator_vanishes() {
        let rec = catalog("abc_minimal").unwrap();
        let s = samples(&rec.domain, 100);
        let r = commutator_defect(&rec.field, KillingParams::translation(2), &s);
        assert!(r.passed() && r.max("commutator") < 1e-12);
        assert_eq!(
            commutator_defect(&rec.field, KillingParams::ZERO, &s).max("commutator"),
            0.0
        );
    }

    #[test]
    fn x_translation_reproduces_the_field() {
        let rec = catalog("zsq_x3").unwrap();
        let s = samples(&rec.domain, 200);
        let orbit = lie_generate(&rec, KillingParams::translation(0), 3, &s).unwrap();
        assert_eq!(orbit.members.len(), 4);
        assert!(orbit.passed());
        for m in &orbit.members[1..] {
            for p in &s.points {
                let (a, b) = (m.value(*p).unwrap(), rec.field.value(*p).unwrap());
                assert!(norm3(sub3(a, b)) < 1e-9);
            }
        }
    }

    #[test]
    fn rotation_member_matches_closed_form() {
        let rec = catalog("zsq_x3").unwrap();
        let s = samples(&rec.domain, 200);
        let orbit = lie_generate(&rec, KillingParams::rotation(2), 2, &s).unwrap();
        assert!(orbit.passed(), "{:?}", orbit.summary());
        let closed = rotated_zsq_member();
        for p in &s.points {
            let (a, b) = (orbit.members[1].value(*p).unwrap(), closed.value(*p).unwrap());
            assert!(norm3(sub3(a, b)) < 1e-8);
        }
        let k = killing_scan(&orbit.members[1], &s, DEFAULT_THRESHOLD).unwrap();
        assert_eq!(k.null_dim, 0);
    }

    #[test]
    fn symmetry_direction_is_terminal_null() {
        let rec = catalog("abc_minimal").unwrap();
        let s = samples(&rec.domain, 100);
        let orbit = lie_generate(&rec, KillingParams::translation(0), 3, &s).unwrap();
        assert_eq!(orbit.terminal_null, Some(1));
        assert_eq!(orbit.members.len(), 2);
    }

    #[test]
    fn hypothesis_and_depth_are_enforced() {
        let rec = catalog("zsq_x3").unwrap();
        let s = samples(&rec.domain, 50);
        assert!(matches!(
            lie_generate(&rec, KillingParams::translation(2), 1, &s),
            Err(OrbitError::Hypothesis { .. })
        ));
        assert!(matches!(
            lie_generate(&rec, KillingParams::translation(0), 5, &s),
            Err(OrbitError::TooDeep(5))
        ));
    }

    #[test]
    fn rigid_motion_is_the_flow() {
        // Rotation about z by eps plus translation along z: a helix.
        let k = KillingParams::from_vec6([0.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
        let (r, s) = rigid_motion(k, 0.3);
        let x = [1.0, 0.0, 0.0];
        let q: [f64; 3] = std::array::from_fn(|i| (0..3).map(|j| r[i][j] * x[j] + s[i][j] * k.a[j]).sum());
        assert!((q[0] - 0.3f64.cos()).abs() < 1e-15);
        assert!((q[1] - 0.3f64.sin()).abs() < 1e-15);
        assert!((q[2] - 0.3).abs() < 1e-15);
        // Off-axis translation with rotation: compare against a fine Euler
        // integration of dx/dt = a + b×x.
        let k = KillingParams::from_vec6([0.3, -0.2, 0.5, 0.4, 1.1, -0.7]);
        let (r, s) = rigid_motion(k, 0.8);
        let x0 = [0.2, -0.5, 0.9];
        let exact: [f64; 3] = std::array::from_fn(|i| (0..3).map(|j| r[i][j] * x0[j] + s[i][j] * k.a[j]).sum());
        let mut y = x0;
        let n = 20000;
        let h = 0.8 / n as f64;
        let f = |y: [f64; 3]| k.value_at(Point3::from_array(y));
        for _ in 0..n {
            let k1 = f(y);
            let k2 = f(std::array::from_fn(|i| y[i] + h / 2.0 * k1[i]));
            let k3 = f(std::array::from_fn(|i| y[i] + h / 2.0 * k2[i]));
            let k4 = f(std::array::from_fn(|i| y[i] + h * k3[i]));
            y = std::array::from_fn(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
        }
        assert!(norm3(sub3(y, exact)) < 1e-12);
    }

    #[test]
    fn first_order_transport_slope_is_two() {
        let rec = catalog("zsq_x3").unwrap();
        let s = samples(&rec.domain, 100);
        for k in [
            KillingParams::rotation(2),
            KillingParams::from_vec6([0.5, 0.2, 0.0, 0.0, 0.0, 1.0]),
        ] {
            let t = transport_slope(&rec.field, k, &s, &[1e-2, 1e-3, 1e-4]);
            assert!((t.slope - 2.0).abs() < 0.1, "{t:?}");
        }
    }
}
