//! Finite-pressure equilibria `w = ∇((x² − y²)/2 + φ) + e^ψ ∇x` with
//! pressure function `χ = e^ψ (x + e^ψ/2)`.
//!
//! Here `φ(y, z)` is harmonic and `ψ(y, z)` solves the transport constraint
//! `−y ψ_y + ∇φ·∇ψ = −1`. The Clebsch potentials are `Ψ = e^ψ` and `Θ = x`,
//! so `∇×w = ∇Ψ × ∇Θ`. The name `clebsch_psi` is used for `ψ` wherever it
//! could be confused with a chart coordinate.

use serde::Serialize;
use thiserror::Error;

use crate::calculus::{curl_of_jacobian, trace};
use crate::characteristics::{CharacteristicsProblem, InitialPlane};
use crate::expr::{ScalarExpr, VectorExpr};
use crate::report::{columns, cross3, dot3, norm3, per_sample, sub3, CheckStats, ResidualReport};
use crate::sampling::{DomainError, DomainSpec, SampleSet};

pub const FORCE_TOL: f64 = 1e-8;
pub const DIVERGENCE_TOL: f64 = 1e-9;
pub const HARMONIC_TOL: f64 = 1e-9;
pub const CONSTRAINT_TOL: f64 = 1e-8;
pub const DEFAULT_SAMPLES: usize = 1000;

pub const CATALOG: [&str; 4] = ["w4_1", "w4_2", "w4_3", "w4_4"];

#[derive(Debug, Error)]
pub enum PressureError {
    #[error("construction failed: {reason}")]
    ConstructionFailed {
        reason: String,
        report: Box<ResidualReport>,
    },
    #[error("invalid parameters: {0}")]
    Parameters(String),
    #[error("unknown pressure catalog entry '{0}'")]
    UnknownName(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

#[derive(Clone, Debug)]
pub struct ClebschSolution {
    pub name: String,
    pub phi: ScalarExpr,
    pub clebsch_psi: ScalarExpr,
    pub field: VectorExpr,
    pub chi: ScalarExpr,
    pub domain: DomainSpec,
    /// Region for symmetry scans; the closed form may be smooth beyond
    /// `domain`.
    pub scan_domain: DomainSpec,
    pub provenance: String,
    pub report: ResidualReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClebschSummary {
    pub name: String,
    pub phi: String,
    pub psi: String,
    pub field: String,
    pub chi: String,
    pub domain: String,
    pub scan_domain: String,
    pub provenance: String,
    pub passed: bool,
}

impl ClebschSolution {
    pub fn summary(&self) -> ClebschSummary {
        ClebschSummary {
            name: self.name.clone(),
            phi: self.phi.to_string(),
            psi: self.clebsch_psi.to_string(),
            field: self.field.to_string(),
            chi: self.chi.to_string(),
            domain: self.domain.to_string(),
            scan_domain: self.scan_domain.to_string(),
            provenance: self.provenance.clone(),
            passed: self.report.passed(),
        }
    }

    /// Full invariant suite on the given samples.
    pub fn verify(&self, samples: &SampleSet) -> ResidualReport {
        verify_clebsch(&self.phi, &self.clebsch_psi, &self.field, &self.chi, samples)
    }

    /// Replaces the field and pressure by equivalent closed forms after
    /// checking agreement on the construction domain.
    pub fn with_closed_form(mut self, field: VectorExpr, chi: ScalarExpr) -> Result<Self, PressureError> {
        let samples = SampleSet::halton(&self.domain, DEFAULT_SAMPLES, 0)?;
        let rows = per_sample(&samples, |p| {
            let (a, b) = (self.field.value(p)?, field.value(p)?);
            let (c, d) = (self.chi.value(p)?, chi.value(p)?);
            Ok([norm3(sub3(a, b)) / (1.0 + norm3(a)), (c - d).abs() / (1.0 + c.abs())])
        });
        let [dw, dchi] = columns(&rows);
        let mut r = ResidualReport::new(format!("closed form of {}", self.name), &samples);
        r.push(CheckStats::from_results("closed_form_field", &dw, 1e-12));
        r.push(CheckStats::from_results("closed_form_chi", &dchi, 1e-12));
        if !r.passed() {
            return Err(PressureError::ConstructionFailed {
                reason: "closed form disagrees with the constructed field".into(),
                report: Box::new(r),
            });
        }
        self.field = field;
        self.chi = chi;
        Ok(self)
    }

    pub fn with_scan_domain(mut self, d: DomainSpec) -> Self {
        self.scan_domain = d;
        self
    }
}

fn x() -> ScalarExpr {
    ScalarExpr::x()
}
fn y() -> ScalarExpr {
    ScalarExpr::y()
}
fn z() -> ScalarExpr {
    ScalarExpr::z()
}
fn c(v: f64) -> ScalarExpr {
    ScalarExpr::constant(v)
}

/// `∇((x² − y²)/2 + φ) + e^ψ ∇x`.
pub fn clebsch_field(phi: &ScalarExpr, clebsch_psi: &ScalarExpr) -> VectorExpr {
    let potential = (x().powi(2) - y().powi(2)) / 2.0 + phi.clone();
    VectorExpr::grad(&potential) + clebsch_psi.clone().exp() * VectorExpr::constant([1.0, 0.0, 0.0])
}

/// `e^ψ (x + e^ψ/2)`.
pub fn clebsch_chi(clebsch_psi: &ScalarExpr) -> ScalarExpr {
    let e = clebsch_psi.clone().exp();
    e.clone() * (x() + e / 2.0)
}

fn verify_clebsch(
    phi: &ScalarExpr,
    psi: &ScalarExpr,
    w: &VectorExpr,
    chi: &ScalarExpr,
    samples: &SampleSet,
) -> ResidualReport {
    let rows = per_sample(samples, |p| {
        let fj = phi.eval(p, 2)?;
        let sj = psi.eval(p, 1)?;
        let (gphi, gpsi) = (fj.gradient(), sj.gradient());
        let lap = fj.partial([2, 0, 0]) + fj.partial([0, 2, 0]) + fj.partial([0, 0, 2]);
        let (v, j) = w.value_and_jacobian(p)?;
        let cw = curl_of_jacobian(&j);
        let gchi = chi.eval(p, 1)?.gradient();
        let e = sj.value().exp();
        let g_big_psi = gpsi.map(|g| e * g);
        Ok([
            lap.abs(),
            gphi[0].abs().max(gpsi[0].abs()),
            (-p.y * gpsi[1] + dot3(gphi, gpsi) + 1.0).abs(),
            norm3(sub3(cross3(v, cw), gchi)),
            trace(&j).abs(),
            norm3(sub3(cw, cross3(g_big_psi, [1.0, 0.0, 0.0]))),
            dot3(v, gchi).abs(),
            dot3(cw, gchi).abs(),
            g_big_psi[0].abs(),
        ])
    });
    let [lap, xdep, constraint, fb, dv, curl_id, chi_w, chi_cw, orth] = columns(&rows);
    let mut r = ResidualReport::new(format!("clebsch equilibrium phi = {phi}, psi = {psi}"), samples);
    r.push(CheckStats::from_results("laplacian_phi", &lap, HARMONIC_TOL));
    r.push(CheckStats::from_results("x_independence", &xdep, HARMONIC_TOL));
    r.push(CheckStats::from_results(
        "transport_constraint",
        &constraint,
        CONSTRAINT_TOL,
    ));
    r.push(CheckStats::from_results("force_balance", &fb, FORCE_TOL));
    r.push(CheckStats::from_results("divergence", &dv, DIVERGENCE_TOL));
    r.push(CheckStats::from_results("curl_identity", &curl_id, DIVERGENCE_TOL));
    r.push(CheckStats::from_results("chi_along_w", &chi_w, FORCE_TOL));
    r.push(CheckStats::from_results("chi_along_curl", &chi_cw, FORCE_TOL));
    r.push(CheckStats::from_results("potentials_orthogonal", &orth, DIVERGENCE_TOL));
    r
}

/// Builds and verifies the equilibrium on 1000 Halton samples of `domain`.
pub fn make_clebsch(
    phi: &ScalarExpr,
    clebsch_psi: &ScalarExpr,
    domain: &DomainSpec,
) -> Result<ClebschSolution, PressureError> {
    let field = clebsch_field(phi, clebsch_psi);
    let chi = clebsch_chi(clebsch_psi);
    let samples = SampleSet::halton(domain, DEFAULT_SAMPLES, 0)?;
    let report = verify_clebsch(phi, clebsch_psi, &field, &chi, &samples);
    if !report.passed() {
        return Err(PressureError::ConstructionFailed {
            reason: "equilibrium invariants violated".into(),
            report: Box::new(report),
        });
    }
    Ok(ClebschSolution {
        name: format!("clebsch(phi = {phi}, psi = {clebsch_psi})"),
        phi: phi.clone(),
        clebsch_psi: clebsch_psi.clone(),
        field,
        chi,
        domain: domain.clone(),
        scan_domain: domain.clone(),
        provenance: "Clebsch construction with Theta = x".into(),
        report,
    })
}

/// `(−1)^p` when `m = p/q` in lowest terms with `q` odd, so that
/// `(−s)^m = (−1)^p s^m` is the real branch.
pub fn real_branch_sign(m: f64) -> Option<f64> {
    (1..=64u32).find_map(|q| {
        let p = m * q as f64;
        ((p - p.round()).abs() < 1e-12).then(|| {
            if q % 2 == 1 {
                Some(if (p.round() as i64) % 2 == 0 { 1.0 } else { -1.0 })
            } else {
                None
            }
        })?
    })
}

/// The four-parameter family
/// `φ = α(z² − y²)/2 + βz + γy`,
/// `ψ = log(s)/(1+α) + δ(−s)^{α/(1+α)}(β/α + z)` with `s = (1+α)y − γ`.
pub fn make_clebsch_family(
    alpha: f64,
    beta: f64,
    gamma: f64,
    delta: f64,
    domain: &DomainSpec,
) -> Result<ClebschSolution, PressureError> {
    if !(alpha.is_finite() && beta.is_finite() && gamma.is_finite() && delta.is_finite()) {
        return Err(PressureError::Parameters("parameters must be finite".into()));
    }
    if alpha == 0.0 {
        return Err(PressureError::Parameters("alpha = 0 divides beta/alpha".into()));
    }
    if alpha == -1.0 {
        return Err(PressureError::Parameters("alpha = -1 divides by 1 + alpha".into()));
    }
    let s = c(1.0 + alpha) * y() - c(gamma);
    let samples = SampleSet::halton(domain, DEFAULT_SAMPLES, 0)?;
    let s_min = samples
        .points
        .iter()
        .map(|p| (1.0 + alpha) * p.y - gamma)
        .fold(f64::INFINITY, f64::min);
    if s_min <= 0.0 {
        return Err(PressureError::Parameters(format!(
            "(1 + alpha) y - gamma must be positive on the domain; minimum sampled value {s_min}"
        )));
    }
    let phi = c(alpha) * (z().powi(2) - y().powi(2)) / 2.0 + c(beta) * z() + c(gamma) * y();
    let mut psi = c(1.0 / (1.0 + alpha)) * s.clone().ln();
    if delta != 0.0 {
        let m = alpha / (1.0 + alpha);
        let sign = real_branch_sign(m).ok_or_else(|| {
            PressureError::Parameters(format!(
                "exponent alpha/(1 + alpha) = {m} has an even denominator: (-s)^m is not real"
            ))
        })?;
        let power = if m.fract() == 0.0 { s.powi(m as i32) } else { s.powf(m) };
        psi = psi + c(delta * sign) * power * (c(beta / alpha) + z());
    }
    let mut sol = make_clebsch(&phi, &psi, domain)?;
    sol.name = format!("family(alpha = {alpha}, beta = {beta}, gamma = {gamma}, delta = {delta})");
    sol.provenance = "four-parameter harmonic family".into();
    Ok(sol)
}

/// `[−1,1] × [0.5,1.5] × [0.5,1.5]`, away from `y = 0` and `z = 0`.
pub fn offset_box() -> DomainSpec {
    DomainSpec::boxed([-1.0, 0.5, 0.5], [1.0, 1.5, 1.5])
}

/// Parameters of the catalog instance of the four-parameter family.
pub const FAMILY_INSTANCE: (f64, f64, f64, f64) = (-0.5, 0.2, 0.0, 0.3);

pub fn catalog(name: &str) -> Result<ClebschSolution, PressureError> {
    let base = |name: &str, prov: &str, mut s: ClebschSolution| {
        s.name = name.into();
        s.provenance = prov.into();
        s
    };
    Ok(match name {
        "w4_1" => {
            let s = make_clebsch(&z(), &(-z()), &DomainSpec::unit_ball())?;
            let e = (-z()).exp();
            let w = VectorExpr::new([x() + e.clone(), -y(), c(1.0)]);
            let chi = e.clone() * (x() + e / 2.0);
            base(name, "phi = z, psi = -z", s).with_closed_form(w, chi)?
        }
        "w4_2" => {
            let s = make_clebsch(&z(), &(z() + c(2.0) * y().ln()), &offset_box())?;
            let e = y().powi(2) * z().exp();
            let w = VectorExpr::new([x() + e.clone(), -y(), c(1.0)]);
            let chi = e.clone() * (x() + e / 2.0);
            base(name, "phi = z, psi = z + 2 log y", s)
                .with_closed_form(w, chi)?
                .with_scan_domain(DomainSpec::unit_ball())
        }
        "w4_3" => {
            let s = make_clebsch(&((z().powi(2) - y().powi(2)) / 2.0), &(y() * z()).ln(), &offset_box())?;
            let e = y() * z();
            let w = VectorExpr::new([x() + e.clone(), c(-2.0) * y(), z()]);
            let chi = e.clone() * (x() + e / 2.0);
            base(name, "phi = (z^2 - y^2)/2, psi = log(y z)", s)
                .with_closed_form(w, chi)?
                .with_scan_domain(DomainSpec::unit_ball())
        }
        "w4_4" => {
            let (a, b, g, d) = FAMILY_INSTANCE;
            let s = make_clebsch_family(a, b, g, d, &offset_box())?;
            base(
                name,
                "four-parameter family, alpha = -1/2, beta = 0.2, gamma = 0, delta = 0.3",
                s,
            )
        }
        _ => return Err(PressureError::UnknownName(name.into())),
    })
}

/// Characteristics of `−y ψ_y + ∇φ·∇ψ = −1`: advecting field
/// `(0, φ_y − y, φ_z)` and unit negative source.
pub fn clebsch_characteristics(phi: &ScalarExpr, initial: InitialPlane) -> CharacteristicsProblem {
    let a = VectorExpr::new([c(0.0), phi.clone().partial(1) - y(), phi.clone().partial(2)]);
    CharacteristicsProblem::new(a, c(-1.0), initial)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::characteristics::{solve_characteristics, sup_error};
    use crate::expr::Point3;

    #[test]
    fn w4_1_spot_values() {
        let s = catalog("w4_1").unwrap();
        assert_eq!(s.field.value(Point3::ORIGIN).unwrap(), [1.0, 0.0, 1.0]);
        assert_eq!(s.chi.eval(Point3::ORIGIN, 1).unwrap().gradient(), [1.0, 0.0, -1.0]);
        let (v, j) = s.field.value_and_jacobian(Point3::ORIGIN).unwrap();
        assert_eq!(cross3(v, curl_of_jacobian(&j)), [1.0, 0.0, -1.0]);
        assert_eq!(curl_of_jacobian(&j), [0.0, -1.0, 0.0]);
    }

    #[test]
    fn catalog_entries_pass_their_suites() {
        for name in CATALOG {
            let s = catalog(name).unwrap();
            assert!(s.report.passed(), "{name}");
            let fresh = SampleSet::random(&s.domain, 300, 3).unwrap();
            assert!(s.verify(&fresh).passed(), "{name}");
        }
    }

    #[test]
    fn family_examples() {
        let d = offset_box();
        let s = make_clebsch_family(1.0, 0.0, 0.0, 0.0, &d).unwrap();
        for p in SampleSet::halton(&d, 50, 0).unwrap().points {
            let want = 0.5 * (2.0 * p.y).ln();
            assert!((s.clebsch_psi.value(p).unwrap() - want).abs() < 1e-14);
        }
        assert!(matches!(
            make_clebsch_family(-1.0, 0.0, 0.0, 0.0, &d),
            Err(PressureError::Parameters(_))
        ));
        assert!(matches!(
            make_clebsch_family(0.0, 0.0, 0.0, 1.0, &d),
            Err(PressureError::Parameters(_))
        ));
        // m = 1/2 has no real branch for negative bases.
        assert!(matches!(
            make_clebsch_family(1.0, 0.0, 0.0, 1.0, &d),
            Err(PressureError::Parameters(_))
        ));
        // s = 2y − 3 < 0 on the box.
        assert!(make_clebsch_family(1.0, 0.0, 3.0, 0.0, &d).is_err());
        // m = 2: even integer exponent.
        assert!(make_clebsch_family(
            -2.0,
            0.5,
            -4.0,
            0.1,
            &DomainSpec::boxed([-1.0, -1.5, 0.5], [1.0, -0.5, 1.5])
        )
        .is_ok());
    }

    #[test]
    fn real_branch_signs() {
        assert_eq!(real_branch_sign(-1.0), Some(-1.0));
        assert_eq!(real_branch_sign(2.0), Some(1.0));
        assert_eq!(real_branch_sign(1.0 / 3.0), Some(-1.0));
        assert_eq!(real_branch_sign(2.0 / 3.0), Some(1.0));
        assert_eq!(real_branch_sign(0.5), None);
        assert_eq!(real_branch_sign(std::f64::consts::PI), None);
    }

    #[test]
    fn wrong_psi_is_rejected() {
        let err = make_clebsch(&z(), &z(), &DomainSpec::unit_ball()).unwrap_err();
        match err {
            PressureError::ConstructionFailed { report, .. } => {
                assert!(!report.check("transport_constraint").unwrap().passed);
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn characteristics_reproduce_closed_forms() {
        let d = offset_box();
        let targets = SampleSet::halton(&d, 40, 0).unwrap().points;
        let prob = clebsch_characteristics(
            &z(),
            InitialPlane {
                axis: 2,
                value: 0.0,
                data: c(2.0) * y().ln(),
            },
        );
        let out = solve_characteristics(&prob, &targets);
        assert!(sup_error(&out, |p: Point3| p.z + 2.0 * p.y.ln()).unwrap() < 1e-6);
        let zero = clebsch_characteristics(
            &z(),
            InitialPlane {
                axis: 2,
                value: 0.0,
                data: c(0.0),
            },
        );
        let out = solve_characteristics(&zero, &targets);
        assert!(sup_error(&out, |p: Point3| -p.z).unwrap() < 1e-6);
    }
}
