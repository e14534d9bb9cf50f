//! Piecewise fields: a finite-pressure core in a ball surrounded by a
//! Beltrami shell, checked region by region and for square integrability.
//!
//! Nothing here forces the two pieces to match at the interface or to be
//! tangent to the boundaries; jumps and normal flux are measured and
//! reported.

use serde::Serialize;
use thiserror::Error;

use crate::beltrami::BeltramiRecord;
use crate::calculus::{beltrami_residual, force_balance_residual};
use crate::expr::{EvalError, Point3, ScalarExpr, VectorExpr};
use crate::pressure::ClebschSolution;
use crate::report::{dot3, norm3, per_sample, sub3, ResidualReport};
use crate::sampling::{sphere_points, DomainError, DomainSpec, SampleSet};
use crate::symmetry::{killing_scan, KillingReport, SymmetryError, DEFAULT_SCAN_SAMPLES, DEFAULT_THRESHOLD};

pub const REGION_TOL: f64 = 1e-8;
pub const MC_POINTS: usize = 100_000;
pub const MC_SEED: u64 = 0;
pub const MAX_RELATIVE_SE: f64 = 0.02;
pub const INTERFACE_POINTS: usize = 2000;

#[derive(Debug, Error)]
pub enum CompositeError {
    #[error("core radius {eps} must lie in (0, {radius})")]
    Radius { eps: f64, radius: f64 },
    #[error("core domain {0} does not contain the core ball")]
    CoreNotContained(String),
    #[error("shell field is singular in the shell: {0}")]
    Singular(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    Core,
    Shell,
}

#[derive(Clone, Debug)]
pub struct Region {
    pub name: String,
    pub kind: RegionKind,
    pub domain: DomainSpec,
    pub field: VectorExpr,
    /// Pressure function of a core region.
    pub chi: Option<ScalarExpr>,
    /// Proportionality factor of a Beltrami region.
    pub h: Option<ScalarExpr>,
}

/// Regions tile the ambient ball up to the interface spheres.
#[derive(Clone, Debug)]
pub struct PiecewiseField {
    pub regions: Vec<Region>,
    pub ambient: DomainSpec,
    pub center: [f64; 3],
    pub core_radius: f64,
    pub outer_radius: f64,
}

impl PiecewiseField {
    /// Index of the region owning `p`; interface points go to the core.
    pub fn region_of(&self, p: Point3) -> Option<usize> {
        let r = norm3(sub3(p.to_array(), self.center));
        if r > self.outer_radius {
            None
        } else {
            Some(if r <= self.core_radius { 0 } else { 1 })
        }
    }

    pub fn value(&self, p: Point3) -> Result<Option<[f64; 3]>, EvalError> {
        match self.region_of(p) {
            Some(i) => Ok(Some(self.regions[i].field.value(p)?)),
            None => Ok(None),
        }
    }
}

/// Core ball `B(0, eps)` with `core`'s field inside an ambient ball of radius
/// `radius`, `shell`'s field in between.
pub fn assemble(
    core: &ClebschSolution,
    shell: &BeltramiRecord,
    radius: f64,
    eps: f64,
) -> Result<PiecewiseField, CompositeError> {
    if !(eps > 0.0 && eps < radius) {
        return Err(CompositeError::Radius { eps, radius });
    }
    let center = [0.0; 3];
    let core_ball = DomainSpec::ball(center, eps);
    let probe = SampleSet::halton(&core_ball, 500, 0)?;
    let boundary = sphere_points(center, eps * (1.0 - 1e-12), 200);
    if !probe.points.iter().chain(&boundary).all(|p| core.domain.contains(*p)) {
        return Err(CompositeError::CoreNotContained(core.domain.to_string()));
    }
    let shell_domain = DomainSpec::shell(center, eps, radius);
    if let Some(s) = shell.singular.iter().find(|s| shell_domain.meets(s)) {
        return Err(CompositeError::Singular(format!("{} meets {s:?}", shell_domain)));
    }
    let check = SampleSet::halton(&shell_domain, 500, 0)?;
    if let Some((p, e)) = check
        .points
        .iter()
        .zip(per_sample(&check, |p| shell.field.value(p)))
        .find_map(|(p, r)| r.err().map(|e| (*p, e)))
    {
        return Err(CompositeError::Singular(format!("at ({}, {}, {}): {e}", p.x, p.y, p.z)));
    }
    Ok(PiecewiseField {
        regions: vec![
            Region {
                name: core.name.clone(),
                kind: RegionKind::Core,
                domain: core_ball,
                field: core.field.clone(),
                chi: Some(core.chi.clone()),
                h: None,
            },
            Region {
                name: shell.name.clone(),
                kind: RegionKind::Shell,
                domain: shell_domain,
                field: shell.field.clone(),
                chi: None,
                h: Some(shell.h.clone()),
            },
        ],
        ambient: DomainSpec::ball(center, radius),
        center,
        core_radius: eps,
        outer_radius: radius,
    })
}

/// The simplest Clebsch core of radius 0.4 inside the `exp_x3` field on the
/// unit ball.
pub fn default_assembly() -> Result<PiecewiseField, Box<dyn std::error::Error + Send + Sync>> {
    let core = crate::pressure::catalog("w4_1")?;
    let shell = crate::beltrami::catalog("exp_x3")?;
    Ok(assemble(&core, &shell, 1.0, 0.4)?)
}

#[derive(Clone, Debug, Serialize)]
pub struct L2Estimate {
    /// Monte Carlo estimate of `∫|w|²` over the ambient ball.
    pub estimate: f64,
    pub standard_error: f64,
    pub relative_se: f64,
    pub n_points: usize,
    pub seed: u64,
}

/// Statistics of a reported (ungated) surface quantity.
#[derive(Clone, Debug, Serialize)]
pub struct SurfaceStats {
    pub name: String,
    pub radius: f64,
    pub max: f64,
    pub mean: f64,
    pub n_points: usize,
}

impl SurfaceStats {
    fn from_values(name: &str, radius: f64, v: &[f64]) -> Self {
        SurfaceStats {
            name: name.into(),
            radius,
            max: v.iter().copied().fold(0.0, f64::max),
            mean: v.iter().sum::<f64>() / v.len().max(1) as f64,
            n_points: v.len(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CompositeReport {
    pub regions: Vec<ResidualReport>,
    pub l2: L2Estimate,
    pub interface_jump: SurfaceStats,
    pub normal_flux: Vec<SurfaceStats>,
    pub core_killing: KillingReport,
    pub passed: bool,
}

fn region_report(r: &Region, samples: &SampleSet) -> ResidualReport {
    let mut rep = match (&r.chi, &r.h) {
        (Some(chi), _) => force_balance_residual(&r.field, chi, samples, REGION_TOL),
        (None, Some(h)) => beltrami_residual(&r.field, h, samples, REGION_TOL),
        (None, None) => force_balance_residual(&r.field, &ScalarExpr::constant(0.0), samples, REGION_TOL),
    };
    rep.subject = format!("{:?} region {}", r.kind, r.name).to_lowercase();
    rep
}

/// Monte Carlo `∫|w|²` over the ambient ball with uniform random points.
pub fn l2_estimate(pf: &PiecewiseField, n: usize, seed: u64) -> Result<L2Estimate, CompositeError> {
    let pts = SampleSet::random(&pf.ambient, n, seed)?;
    let vals: Vec<f64> = per_sample(&pts, |p| {
        let v = pf.value(p)?.unwrap_or([0.0; 3]);
        Ok(dot3(v, v))
    })
    .into_iter()
    .map(|v| v.unwrap_or(f64::INFINITY))
    .collect();
    let m = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / m;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
    let vol = 4.0 / 3.0 * std::f64::consts::PI * pf.outer_radius.powi(3);
    let estimate = vol * mean;
    let standard_error = vol * (var / m).sqrt();
    Ok(L2Estimate {
        estimate,
        standard_error,
        relative_se: standard_error / estimate.abs(),
        n_points: vals.len(),
        seed,
    })
}

/// Region residuals, L² membership, interface jump, normal flux and the
/// core's Euclidean symmetry scan.
pub fn verify_composite(pf: &PiecewiseField, samples_per_region: usize) -> Result<CompositeReport, CompositeError> {
    let regions: Vec<ResidualReport> = pf
        .regions
        .iter()
        .map(|r| Ok(region_report(r, &SampleSet::halton(&r.domain, samples_per_region, 0)?)))
        .collect::<Result<_, CompositeError>>()?;
    let l2 = l2_estimate(pf, MC_POINTS, MC_SEED)?;
    let (core, shell) = (&pf.regions[0], &pf.regions[1]);
    let inner = sphere_points(pf.center, pf.core_radius, INTERFACE_POINTS);
    let outer = sphere_points(pf.center, pf.outer_radius, INTERFACE_POINTS);
    let on = |pts: &[Point3], f: &(dyn Fn(Point3) -> Result<f64, EvalError> + Sync)| -> Vec<f64> {
        let s = SampleSet::from_points(pts.to_vec(), &DomainSpec::ball(pf.center, 2.0 * pf.outer_radius));
        per_sample(&s, f).into_iter().map(|v| v.unwrap_or(f64::NAN)).collect()
    };
    let normal = |p: Point3| {
        let d = sub3(p.to_array(), pf.center);
        let n = norm3(d);
        d.map(|c| c / n)
    };
    let jump = on(&inner, &|p| {
        Ok(norm3(sub3(core.field.value(p)?, shell.field.value(p)?)))
    });
    let flux_core = on(&inner, &|p| Ok(dot3(core.field.value(p)?, normal(p)).abs()));
    let flux_shell_in = on(&inner, &|p| Ok(dot3(shell.field.value(p)?, normal(p)).abs()));
    let flux_outer = on(&outer, &|p| Ok(dot3(shell.field.value(p)?, normal(p)).abs()));
    let core_samples = SampleSet::halton(&core.domain, DEFAULT_SCAN_SAMPLES, 0)?;
    let core_killing = killing_scan(&core.field, &core_samples, DEFAULT_THRESHOLD)?;
    let passed = regions.iter().all(|r| r.passed())
        && l2.estimate.is_finite()
        && l2.relative_se < MAX_RELATIVE_SE
        && core_killing.null_dim == 0;
    Ok(CompositeReport {
        regions,
        l2,
        interface_jump: SurfaceStats::from_values("interface_jump", pf.core_radius, &jump),
        normal_flux: vec![
            SurfaceStats::from_values("core_flux_at_interface", pf.core_radius, &flux_core),
            SurfaceStats::from_values("shell_flux_at_interface", pf.core_radius, &flux_shell_in),
            SurfaceStats::from_values("shell_flux_at_boundary", pf.outer_radius, &flux_outer),
        ],
        core_killing,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beltrami::catalog as beltrami;
    use crate::pressure::catalog as pressure;

    #[test]
    fn default_assembly_passes() {
        let pf = default_assembly().unwrap();
        assert_eq!(pf.region_of(Point3::new(0.1, 0.0, 0.0)), Some(0));
        assert_eq!(pf.region_of(Point3::new(0.7, 0.0, 0.0)), Some(1));
        assert_eq!(pf.region_of(Point3::new(1.5, 0.0, 0.0)), None);
        let r = verify_composite(&pf, 500).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.l2.relative_se < 0.02);
        assert!(r.interface_jump.max > 0.1);
        assert!(r.normal_flux[0].max > 0.1);
    }

    #[test]
    fn rejections() {
        let core = pressure("w4_1").unwrap();
        let shell = beltrami("exp_x3").unwrap();
        assert!(matches!(
            assemble(&core, &shell, 1.0, 1.0),
            Err(CompositeError::Radius { .. })
        ));
        assert!(matches!(
            assemble(&core, &shell, 1.0, -0.1),
            Err(CompositeError::Radius { .. })
        ));
        let cyl = beltrami("cylindrical").unwrap();
        assert!(matches!(
            assemble(&core, &cyl, 1.0, 0.4),
            Err(CompositeError::Singular(_))
        ));
        let offset = pressure("w4_2").unwrap();
        assert!(matches!(
            assemble(&offset, &shell, 1.0, 0.4),
            Err(CompositeError::CoreNotContained(_))
        ));
    }

    #[test]
    fn identical_fields_have_no_jump() {
        let shell = beltrami("exp_x3").unwrap();
        let mut core = pressure("w4_1").unwrap();
        core.field = shell.field.clone();
        core.chi = ScalarExpr::constant(0.0);
        let pf = assemble(&core, &shell, 1.0, 0.4).unwrap();
        let r = verify_composite(&pf, 200).unwrap();
        assert!(r.interface_jump.max < 1e-12);
    }

    #[test]
    fn l2_estimate_is_stable_under_doubling() {
        let pf = default_assembly().unwrap();
        let a = l2_estimate(&pf, 50_000, 0).unwrap();
        let b = l2_estimate(&pf, 100_000, 0).unwrap();
        assert!((a.estimate - b.estimate).abs() < 3.0 * a.standard_error);
    }
}
