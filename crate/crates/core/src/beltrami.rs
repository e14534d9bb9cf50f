//! Beltrami fields `∇×w = ĥw` built from admissible coordinate charts.
//!
//! A chart `(x¹, x², x³)` with contravariant metric `g^{ij} = ∇x^i·∇x^j` is
//! admissible when `w = cos x³ ∇x² + sin x³ ∇x¹` is a solenoidal Beltrami
//! field. For orthogonal charts the conditions reduce to `g¹¹ = g²²` and
//! `Δx² cos x³ = Δx¹ sin x³`, which harmonic conjugates `(u, v)` in the plane
//! together with `x³ = σ(z)` satisfy; then `ĥ = σ'(z)`.

use serde::Serialize;
use thiserror::Error;

use crate::calculus::beltrami_residual;
use crate::expr::{EvalError, Point3, ScalarExpr, VectorExpr};
use crate::report::{columns, cross3, dot3, norm3, per_sample, CheckStats, ResidualReport};
use crate::sampling::{DomainSpec, Exclusion, SampleSet, SingularSet};

/// Residual gate for catalog and constructed Beltrami fields.
pub const BELTRAMI_TOL: f64 = 1e-8;
/// Gate for the admissibility conditions of a chart.
pub const ADMISSIBLE_TOL: f64 = 1e-7;
/// Gate for harmonic-pair and construction self-checks.
pub const CONSTRUCTION_TOL: f64 = 1e-9;
pub const DEFAULT_SAMPLES: usize = 1000;

#[derive(Debug, Error)]
pub enum BeltramiError {
    #[error("unknown catalog entry '{0}'")]
    UnknownName(String),
    #[error("construction failed: {reason}")]
    ConstructionFailed {
        reason: String,
        report: Box<ResidualReport>,
    },
    #[error(transparent)]
    Domain(#[from] crate::sampling::DomainError),
}

/// Functions `u(x, y)`, `v(x, y)` expected to be harmonic conjugates.
#[derive(Clone, Debug)]
pub struct HarmonicPair {
    pub u: ScalarExpr,
    pub v: ScalarExpr,
}

impl HarmonicPair {
    pub fn new(u: ScalarExpr, v: ScalarExpr) -> Self {
        HarmonicPair { u, v }
    }

    /// Cauchy-Riemann residuals `|u_x − v_y|`, `|u_y + v_x|`, Laplacians and
    /// `z`-independence.
    pub fn verify(&self, samples: &SampleSet, tol: f64) -> ResidualReport {
        let rows = per_sample(samples, |p| {
            let u = self.u.eval(p, 2)?;
            let v = self.v.eval(p, 2)?;
            let (gu, gv) = (u.gradient(), v.gradient());
            let lap = |j: &crate::jet::Jet| j.partial([2, 0, 0]) + j.partial([0, 2, 0]) + j.partial([0, 0, 2]);
            Ok([
                (gu[0] - gv[1]).abs(),
                (gu[1] + gv[0]).abs(),
                lap(&u).abs(),
                lap(&v).abs(),
                gu[2].abs().max(gv[2].abs()),
            ])
        });
        let [cr1, cr2, lu, lv, zdep] = columns(&rows);
        let mut r = ResidualReport::new(format!("harmonic pair ({}, {})", self.u, self.v), samples);
        r.push(CheckStats::from_results("cauchy_riemann_1", &cr1, tol));
        r.push(CheckStats::from_results("cauchy_riemann_2", &cr2, tol));
        r.push(CheckStats::from_results("laplacian_u", &lu, tol));
        r.push(CheckStats::from_results("laplacian_v", &lv, tol));
        r.push(CheckStats::from_results("z_independence", &zdep, tol));
        r
    }
}

/// Curvilinear coordinates `(x¹, x², x³)`.
#[derive(Clone, Debug)]
pub struct AdmissibleChart {
    pub x1: ScalarExpr,
    pub x2: ScalarExpr,
    pub x3: ScalarExpr,
    pub orthogonal: bool,
}

impl AdmissibleChart {
    pub fn new(x1: ScalarExpr, x2: ScalarExpr, x3: ScalarExpr, orthogonal: bool) -> Self {
        AdmissibleChart { x1, x2, x3, orthogonal }
    }

    /// `cos x³ ∇x² + sin x³ ∇x¹`.
    pub fn field(&self) -> VectorExpr {
        self.x3.clone().cos() * VectorExpr::grad(&self.x2) + self.x3.clone().sin() * VectorExpr::grad(&self.x1)
    }

    /// Tangent vectors `∂_i = (∇x^j × ∇x^k) / (∇x¹·∇x²×∇x³)` for cyclic
    /// `(i, j, k)`.
    pub fn tangents(&self) -> [VectorExpr; 3] {
        let g = [
            VectorExpr::grad(&self.x1),
            VectorExpr::grad(&self.x2),
            VectorExpr::grad(&self.x3),
        ];
        let jac = g[0].dot(&g[1].cross(&g[2]));
        let inv = ScalarExpr::constant(1.0) / jac;
        std::array::from_fn(|i| g[(i + 1) % 3].cross(&g[(i + 2) % 3]).scale(&inv))
    }

    fn coords(&self) -> [&ScalarExpr; 3] {
        [&self.x1, &self.x2, &self.x3]
    }
}

impl std::fmt::Display for AdmissibleChart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.x1, self.x2, self.x3)
    }
}

/// Residuals of the admissibility conditions at samples.
///
/// General charts report the three conditions `mt1`, `mt2`, `mt3`; orthogonal
/// charts report `g11_minus_g22`, `laplacian_balance` and the off-diagonal
/// metric entries.
pub fn verify_admissible(chart: &AdmissibleChart, samples: &SampleSet, tol: f64) -> ResidualReport {
    let rows = per_sample(samples, |p| {
        let jets = chart
            .coords()
            .map(|c| c.eval(p, 2))
            .into_iter()
            .collect::<Result<Vec<_>, EvalError>>()?;
        let grads: Vec<[f64; 3]> = jets.iter().map(|j| j.gradient()).collect();
        let lap: Vec<f64> = jets
            .iter()
            .map(|j| j.partial([2, 0, 0]) + j.partial([0, 2, 0]) + j.partial([0, 0, 2]))
            .collect();
        let g = |i: usize, j: usize| dot3(grads[i], grads[j]);
        let (s, c) = jets[2].value().sin_cos();
        Ok([
            c * s * (g(1, 1) - g(0, 0)) - g(0, 1) * (c * c - s * s),
            s * g(0, 2) + c * g(1, 2),
            c * (g(2, 0) + lap[1]) + s * (lap[0] - g(2, 1)),
            g(0, 0) - g(1, 1),
            lap[1] * c - lap[0] * s,
            g(0, 1).abs().max(g(0, 2).abs()).max(g(1, 2).abs()),
        ])
    });
    let cols = columns(&rows);
    let abs = |v: &Vec<Result<f64, EvalError>>| -> Vec<Result<f64, EvalError>> {
        v.iter().map(|r| r.clone().map(f64::abs)).collect()
    };
    let mut r = ResidualReport::new(format!("admissibility of chart {chart}"), samples);
    if chart.orthogonal {
        r.push(CheckStats::from_results("g11_minus_g22", &abs(&cols[3]), tol));
        r.push(CheckStats::from_results("laplacian_balance", &abs(&cols[4]), tol));
        r.push(CheckStats::from_results("off_diagonal_metric", &cols[5], tol));
        let signed: Vec<f64> = cols[3].iter().filter_map(|v| v.clone().ok()).collect();
        if !signed.is_empty() {
            let mean = signed.iter().sum::<f64>() / signed.len() as f64;
            r.note(format!("mean signed g11 - g22 = {mean}"));
        }
    } else {
        r.push(CheckStats::from_results("mt1", &abs(&cols[0]), tol));
        r.push(CheckStats::from_results("mt2", &abs(&cols[1]), tol));
        r.push(CheckStats::from_results("mt3", &abs(&cols[2]), tol));
    }
    r
}

#[derive(Clone, Debug)]
pub struct BeltramiRecord {
    pub name: String,
    pub field: VectorExpr,
    pub h: ScalarExpr,
    pub domain: DomainSpec,
    pub chart: Option<AdmissibleChart>,
    pub provenance: String,
    /// Sets where the field itself is not defined.
    pub singular: Vec<SingularSet>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BeltramiSummary {
    pub name: String,
    pub components: [String; 3],
    pub field: String,
    pub h: String,
    pub domain: String,
    pub chart: Option<[String; 3]>,
    pub provenance: String,
}

impl BeltramiRecord {
    pub fn summary(&self) -> BeltramiSummary {
        BeltramiSummary {
            name: self.name.clone(),
            components: std::array::from_fn(|i| self.field.component(i).to_string()),
            field: self.field.to_string(),
            h: self.h.to_string(),
            domain: self.domain.to_string(),
            chart: self
                .chart
                .as_ref()
                .map(|c| [c.x1.to_string(), c.x2.to_string(), c.x3.to_string()]),
            provenance: self.provenance.clone(),
        }
    }

    pub fn default_samples(&self, count: usize, seed: u64) -> Result<SampleSet, BeltramiError> {
        Ok(SampleSet::halton(&self.domain, count, seed)?)
    }

    /// Beltrami and divergence residuals with this record's `ĥ`.
    pub fn verify(&self, samples: &SampleSet, tol: f64) -> ResidualReport {
        let mut r = beltrami_residual(&self.field, &self.h, samples, tol);
        r.subject = format!("beltrami residual of {}", self.name);
        r
    }
}

/// `w = cos σ ∇v + sin σ ∇u` with `ĥ = σ'(z)`, self-verified on the domain.
pub fn from_harmonic_pair(
    pair: &HarmonicPair,
    sigma: &ScalarExpr,
    domain: &DomainSpec,
) -> Result<BeltramiRecord, BeltramiError> {
    let samples = SampleSet::halton(domain, DEFAULT_SAMPLES, 0)?;
    let pair_report = pair.verify(&samples, CONSTRUCTION_TOL);
    if !pair_report.passed() {
        return Err(BeltramiError::ConstructionFailed {
            reason: "(u, v) are not harmonic conjugates in the plane".into(),
            report: Box::new(pair_report),
        });
    }
    let sigma_xy = per_sample(&samples, |p| {
        let g = sigma.eval(p, 1)?.gradient();
        Ok(g[0].abs().max(g[1].abs()))
    });
    let sigma_check = CheckStats::from_results("sigma_depends_on_z_only", &sigma_xy, CONSTRUCTION_TOL);
    let h = sigma.clone().partial(2);
    let chart = AdmissibleChart::new(pair.u.clone(), pair.v.clone(), sigma.clone(), true);
    let field = chart.field();
    let rec = BeltramiRecord {
        name: format!("harmonic_pair(u = {}, v = {}, sigma = {})", pair.u, pair.v, sigma),
        field,
        h,
        domain: domain.clone(),
        chart: Some(chart),
        provenance: "harmonic-conjugate chart with x3 = sigma(z)".into(),
        singular: Vec::new(),
    };
    let mut report = rec.verify(&samples, CONSTRUCTION_TOL);
    report.push(sigma_check);
    let h_vals: Vec<f64> = per_sample(&samples, |p| rec.h.value(p))
        .into_iter()
        .filter_map(Result::ok)
        .collect();
    let vanishes = h_vals.contains(&0.0) || (h_vals.iter().any(|v| *v > 0.0) && h_vals.iter().any(|v| *v < 0.0));
    if vanishes {
        report.note("sigma'(z) vanishes in the domain");
    }
    if !report.passed() || vanishes {
        return Err(BeltramiError::ConstructionFailed {
            reason: "constructed field failed its residual gates".into(),
            report: Box::new(report),
        });
    }
    Ok(rec)
}

pub const CATALOG: [&str; 5] = ["abc_minimal", "cylindrical", "exp_x3", "zsq_x3", "example3"];

fn x() -> ScalarExpr {
    ScalarExpr::x()
}
fn y() -> ScalarExpr {
    ScalarExpr::y()
}
fn z() -> ScalarExpr {
    ScalarExpr::z()
}

/// `e^x(−cos(y + σ), sin(y + σ), 0)`: the chart field of the pair
/// `(e^x sin y, −e^x cos y)` with third coordinate `σ(z)`, in closed form.
fn exp_pair_field(sigma: ScalarExpr) -> VectorExpr {
    let s = y() + sigma;
    let e = x().exp();
    VectorExpr::new([-(e.clone() * s.clone().cos()), e * s.sin(), ScalarExpr::constant(0.0)])
}

/// `(e^x sin y, −e^x cos y)`.
pub fn exp_pair() -> HarmonicPair {
    HarmonicPair::new(x().exp() * y().sin(), -(x().exp() * y().cos()))
}

/// Box `[−1,1]² × [0.5, 1.5]` keeping `ĥ = 2z` away from zero.
pub fn positive_z_box() -> DomainSpec {
    DomainSpec::boxed([-1.0, -1.0, 0.5], [1.0, 1.0, 1.5])
}

pub fn catalog(name: &str) -> Result<BeltramiRecord, BeltramiError> {
    let rec = match name {
        "abc_minimal" => {
            let chart = AdmissibleChart::new(x(), y(), z(), true);
            BeltramiRecord {
                name: name.into(),
                field: VectorExpr::new([z().sin(), z().cos(), ScalarExpr::constant(0.0)]),
                h: ScalarExpr::constant(1.0),
                domain: DomainSpec::unit_ball(),
                chart: Some(chart),
                provenance: "minimal ABC flow cos z grad y + sin z grad x".into(),
                singular: Vec::new(),
            }
        }
        "cylindrical" => {
            let log_r = ScalarExpr::constant(0.5) * (x().powi(2) + y().powi(2)).ln();
            let angle = ScalarExpr::atan2(y(), x());
            let chart = AdmissibleChart::new(angle, log_r, z(), true);
            let r2 = x().powi(2) + y().powi(2);
            let field = VectorExpr::new([
                (x() * z().cos() - y() * z().sin()) / r2.clone(),
                (y() * z().cos() + x() * z().sin()) / r2,
                ScalarExpr::constant(0.0),
            ]);
            BeltramiRecord {
                name: name.into(),
                field,
                h: ScalarExpr::constant(-1.0),
                domain: DomainSpec::cyl_shell(0.5, 1.5, -1.0, 1.0).excluding(Exclusion::ZAxisCylinder { radius: 0.5 }),
                chart: Some(chart),
                provenance: "cos z grad(log r) + sin z grad(azimuth), chart (azimuth, log r, z)".into(),
                singular: vec![SingularSet::ZAxis],
            }
        }
        "exp_x3" => {
            let chart = AdmissibleChart::new(exp_pair().u, exp_pair().v, z().exp(), true);
            BeltramiRecord {
                name: name.into(),
                field: exp_pair_field(z().exp()),
                h: z().exp(),
                domain: DomainSpec::unit_ball(),
                chart: Some(chart),
                provenance: "harmonic pair (e^x sin y, -e^x cos y), x3 = e^z".into(),
                singular: Vec::new(),
            }
        }
        "zsq_x3" | "example3" => {
            let chart = AdmissibleChart::new(exp_pair().u, exp_pair().v, z().powi(2), true);
            BeltramiRecord {
                name: name.into(),
                field: exp_pair_field(z().powi(2)),
                h: ScalarExpr::constant(2.0) * z(),
                domain: positive_z_box(),
                chart: Some(chart),
                provenance: if name == "zsq_x3" {
                    "harmonic pair (e^x sin y, -e^x cos y), x3 = z^2".into()
                } else {
                    "chart (e^x sin y, -e^x cos y, z^2) on the z > 0 branch, local symmetry example".into()
                },
                singular: Vec::new(),
            }
        }
        _ => return Err(BeltramiError::UnknownName(name.into())),
    };
    Ok(rec)
}

/// `|w·∇ĥ|` at samples, alongside the Beltrami residual so inconsistent
/// records are flagged rather than silently accepted.
pub fn verify_h_invariance(rec: &BeltramiRecord, samples: &SampleSet, tol: f64) -> ResidualReport {
    let rows = per_sample(samples, |p| {
        let w = rec.field.value(p)?;
        let gh = rec.h.eval(p, 1)?.gradient();
        Ok(dot3(w, gh).abs())
    });
    let mut r = ResidualReport::new(format!("h invariance of {}", rec.name), samples);
    r.push(CheckStats::from_results("h_invariance", &rows, tol));
    let bel = rec.verify(samples, BELTRAMI_TOL);
    if !bel.passed() {
        r.note(format!(
            "record is inconsistent: beltrami residual max {:e}",
            bel.max("beltrami")
        ));
    }
    r
}

/// Per-sample helicity density `w·(∇×w)`.
pub fn helicity(rec: &BeltramiRecord, samples: &SampleSet) -> Vec<Result<f64, EvalError>> {
    per_sample(samples, |p| {
        let (w, j) = rec.field.value_and_jacobian(p)?;
        Ok(dot3(w, crate::calculus::curl_of_jacobian(&j)))
    })
}

/// Smallest `|w·(∇×w)|` over the samples; failed evaluations count as zero.
pub fn min_abs_helicity(rec: &BeltramiRecord, samples: &SampleSet) -> f64 {
    helicity(rec, samples)
        .into_iter()
        .map(|v| v.map_or(0.0, f64::abs))
        .fold(f64::INFINITY, f64::min)
}

/// Largest `|w×v|/(|w||v|)` over samples; zero when the fields are parallel.
pub fn max_misalignment(a: &VectorExpr, b: &VectorExpr, samples: &SampleSet) -> f64 {
    per_sample(samples, |p: Point3| {
        let (u, v) = (a.value(p)?, b.value(p)?);
        Ok(norm3(cross3(u, v)) / (norm3(u) * norm3(v)).max(f64::MIN_POSITIVE))
    })
    .into_iter()
    .map(|v| v.unwrap_or(f64::INFINITY))
    .fold(0.0, f64::max)
}
