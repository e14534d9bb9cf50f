//! Detection of continuous Euclidean symmetries and verification of local
//! (chart-dependent) symmetries.
//!
//! A Euclidean Killing field `ξ = a + b×x` is a symmetry of `w` when
//! `ℒ_ξ w = (ξ·∇)w − b×w` vanishes. The map `(a, b) ↦ ℒ_ξ w(p)` is linear, so
//! sampling it at many points gives a `3n × 6` matrix whose numerical null
//! space is the symmetry algebra on the sampled domain.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::beltrami::{AdmissibleChart, BeltramiRecord};
use crate::characteristics::{solve_characteristics, CharacteristicValue, CharacteristicsProblem, InitialPlane};
use crate::expr::{EvalError, Point3, ScalarExpr, VectorExpr};
use crate::report::{columns, cross3, norm3, per_sample, CheckStats, ResidualReport};
use crate::sampling::{DomainError, DomainSpec, Generator, SampleSet};

pub const DEFAULT_THRESHOLD: f64 = 1e-6;
pub const DEFAULT_SCAN_SAMPLES: usize = 400;
pub const LOCAL_SYMMETRY_TOL: f64 = 1e-7;
pub const XI_DIVERGENCE_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum SymmetryError {
    #[error("killing scan needs at least 6 valid samples, got {0}")]
    TooFewSamples(usize),
    #[error("unknown generator '{0}': expected trans-x|y|z, rot-x|y|z or six comma-separated numbers")]
    UnknownGenerator(String),
    #[error("characteristics solve only covers abc_minimal and cylindrical, not '{0}'")]
    UnsupportedExample(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Euclidean Killing field `a + b×x`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KillingParams {
    pub a: [f64; 3],
    pub b: [f64; 3],
}

impl KillingParams {
    pub const ZERO: KillingParams = KillingParams {
        a: [0.0; 3],
        b: [0.0; 3],
    };

    pub fn translation(axis: usize) -> Self {
        let mut k = Self::ZERO;
        k.a[axis] = 1.0;
        k
    }

    pub fn rotation(axis: usize) -> Self {
        let mut k = Self::ZERO;
        k.b[axis] = 1.0;
        k
    }

    /// The six canonical generators: translations then rotations.
    pub fn canonical() -> [KillingParams; 6] {
        std::array::from_fn(|i| Self::from_vec6([0, 1, 2, 3, 4, 5].map(|j| if i == j { 1.0 } else { 0.0 })))
    }

    pub fn from_vec6(v: [f64; 6]) -> Self {
        KillingParams {
            a: [v[0], v[1], v[2]],
            b: [v[3], v[4], v[5]],
        }
    }

    pub fn to_vec6(self) -> [f64; 6] {
        [self.a[0], self.a[1], self.a[2], self.b[0], self.b[1], self.b[2]]
    }

    pub fn norm(self) -> f64 {
        self.to_vec6().iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.to_vec6().iter().all(|c| c.is_finite())
    }

    pub fn scale(self, c: f64) -> Self {
        Self::from_vec6(self.to_vec6().map(|x| c * x))
    }

    /// `a + b×x` as a field expression.
    pub fn field(self) -> VectorExpr {
        VectorExpr::constant(self.a) + VectorExpr::constant(self.b).cross(&VectorExpr::position())
    }

    pub fn value_at(self, p: Point3) -> [f64; 3] {
        let r = cross3(self.b, p.to_array());
        std::array::from_fn(|i| self.a[i] + r[i])
    }
}

impl fmt::Display for KillingParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b] = [self.a, self.b];
        write!(
            f,
            "a = ({}, {}, {}), b = ({}, {}, {})",
            a[0], a[1], a[2], b[0], b[1], b[2]
        )
    }
}

impl FromStr for KillingParams {
    type Err = SymmetryError;

    /// `trans-x`, `rot-z`, or `ax,ay,az,bx,by,bz`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let axis = |c: &str| match c {
            "x" => Some(0),
            "y" => Some(1),
            "z" => Some(2),
            _ => None,
        };
        if let Some(rest) = s.strip_prefix("trans-") {
            return axis(rest)
                .map(Self::translation)
                .ok_or_else(|| SymmetryError::UnknownGenerator(s.into()));
        }
        if let Some(rest) = s.strip_prefix("rot-") {
            return axis(rest)
                .map(Self::rotation)
                .ok_or_else(|| SymmetryError::UnknownGenerator(s.into()));
        }
        let nums: Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
        match nums {
            Ok(v) if v.len() == 6 && v.iter().all(|c| c.is_finite()) => {
                Ok(Self::from_vec6(std::array::from_fn(|i| v[i])))
            }
            _ => Err(SymmetryError::UnknownGenerator(s.into())),
        }
    }
}

impl std::ops::Add for KillingParams {
    type Output = KillingParams;
    fn add(self, o: KillingParams) -> KillingParams {
        let (u, v) = (self.to_vec6(), o.to_vec6());
        Self::from_vec6(std::array::from_fn(|i| u[i] + v[i]))
    }
}

/// `(a + b×x)·∇w − b×w` as a structural node.
pub fn lie_euclidean(w: &VectorExpr, k: KillingParams) -> VectorExpr {
    w.killing_lie(k.a, k.b)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KillingReport {
    /// Descending.
    pub singular_values: Vec<f64>,
    pub relative_singular_values: Vec<f64>,
    pub null_dim: usize,
    /// Orthonormal in R⁶, canonicalised by row reduction.
    pub null_basis: Vec<KillingParams>,
    pub threshold: f64,
    /// Smallest retained relative singular value over the largest discarded
    /// one; absent when nothing or everything is discarded.
    pub gap: Option<f64>,
    pub domain: String,
    pub seed: u64,
    pub n_samples: usize,
    pub n_failed: usize,
    pub generator: Generator,
    /// Samples nearly on a line or plane, which can fake null directions.
    pub degenerate_sampling: bool,
}

/// Per-sample `3 × 6` block: column `i < 3` is `∂_i w`, column `3 + i` is
/// `(e_i×p)·∇w − e_i×w`; rows scaled by `1/max(1, |w|)`.
fn killing_block(w: &VectorExpr, p: Point3) -> Result<[[f64; 6]; 3], EvalError> {
    let (v, j) = w.value_and_jacobian(p)?;
    let s = 1.0 / norm3(v).max(1.0);
    let x = p.to_array();
    let mut m = [[0.0; 6]; 3];
    for i in 0..3 {
        let mut e = [0.0; 3];
        e[i] = 1.0;
        let t = cross3(e, x);
        let ev = cross3(e, v);
        for r in 0..3 {
            m[r][i] = s * j[r][i];
            let dt: f64 = (0..3).map(|c| j[r][c] * t[c]).sum();
            m[r][3 + i] = s * (dt - ev[r]);
        }
    }
    Ok(m)
}

/// Sampled least-squares symmetry scan.
pub fn killing_scan(w: &VectorExpr, samples: &SampleSet, threshold: f64) -> Result<KillingReport, SymmetryError> {
    let blocks = per_sample(samples, |p| killing_block(w, p));
    let ok: Vec<[[f64; 6]; 3]> = blocks.iter().filter_map(|b| b.as_ref().ok().copied()).collect();
    if ok.len() < 6 {
        return Err(SymmetryError::TooFewSamples(ok.len()));
    }
    let rows = 3 * ok.len();
    let m = DMatrix::from_fn(rows, 6, |r, c| ok[r / 3][r % 3][c]);
    let svd = m.svd(false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let top = sv[0];
    let rel: Vec<f64> = sv.iter().map(|s| if top > 0.0 { s / top } else { 0.0 }).collect();
    let null: Vec<usize> = (0..6).filter(|&i| top == 0.0 || rel[i] < threshold).collect();
    let null_dim = null.len();
    let vectors: Vec<[f64; 6]> = null
        .iter()
        .map(|&i| std::array::from_fn(|c| vt[(order[i], c)]))
        .collect();
    let gap = (null_dim > 0 && null_dim < 6 && rel[null[0]] > 0.0).then(|| rel[null[0] - 1] / rel[null[0]]);
    Ok(KillingReport {
        singular_values: sv,
        relative_singular_values: rel,
        null_dim,
        null_basis: canonical_basis(vectors)
            .into_iter()
            .map(KillingParams::from_vec6)
            .collect(),
        threshold,
        gap,
        domain: samples.domain.to_string(),
        seed: samples.seed,
        n_samples: samples.len(),
        n_failed: samples.len() - ok.len(),
        generator: samples.generator,
        degenerate_sampling: is_degenerate(&samples.points),
    })
}

/// Halton samples of `domain` followed by [`killing_scan`].
pub fn killing_scan_on(
    w: &VectorExpr,
    domain: &DomainSpec,
    n_samples: usize,
    seed: u64,
    threshold: f64,
) -> Result<KillingReport, SymmetryError> {
    if n_samples < 6 {
        return Err(SymmetryError::TooFewSamples(n_samples));
    }
    killing_scan(w, &SampleSet::halton(domain, n_samples, seed)?, threshold)
}

/// Row reduction then Gram-Schmidt: a deterministic orthonormal basis of the
/// span that does not depend on the SVD's arbitrary rotation within it.
fn canonical_basis(mut rows: Vec<[f64; 6]>) -> Vec<[f64; 6]> {
    let k = rows.len();
    let mut pivot_row = 0;
    for col in 0..6 {
        if pivot_row == k {
            break;
        }
        let (best, mag) = (pivot_row..k)
            .map(|r| (r, rows[r][col].abs()))
            .fold((pivot_row, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if mag < 1e-8 {
            continue;
        }
        rows.swap(pivot_row, best);
        let pv = rows[pivot_row][col];
        rows[pivot_row] = rows[pivot_row].map(|v| v / pv);
        for r in 0..k {
            if r != pivot_row {
                let f = rows[r][col];
                let pr = rows[pivot_row];
                rows[r] = std::array::from_fn(|c| rows[r][c] - f * pr[c]);
            }
        }
        pivot_row += 1;
    }
    let mut out: Vec<[f64; 6]> = Vec::with_capacity(k);
    for mut v in rows {
        for u in &out {
            let d: f64 = (0..6).map(|c| v[c] * u[c]).sum();
            v = std::array::from_fn(|c| v[c] - d * u[c]);
        }
        let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if n > 1e-12 {
            out.push(v.map(|c| {
                let c = c / n;
                if c.abs() < 1e-12 {
                    0.0
                } else {
                    c
                }
            }));
        }
    }
    out
}

/// Smallest over largest eigenvalue of the sample covariance below `1e−6`.
fn is_degenerate(points: &[Point3]) -> bool {
    if points.len() < 3 {
        return true;
    }
    let n = points.len() as f64;
    let mean: [f64; 3] = std::array::from_fn(|i| points.iter().map(|p| p.to_array()[i]).sum::<f64>() / n);
    let cov = nalgebra::Matrix3::from_fn(|i, j| {
        points
            .iter()
            .map(|p| (p.to_array()[i] - mean[i]) * (p.to_array()[j] - mean[j]))
            .sum::<f64>()
            / n
    });
    let ev = cov.symmetric_eigenvalues();
    let (lo, hi) = (ev.min(), ev.max());
    hi <= 0.0 || lo / hi < 1e-6
}

/// Out-of-sample check of each null vector:
/// `max |ℒ_k w| / (|k| · max|∇w|)` over `fresh`.
pub fn validate_null_basis(w: &VectorExpr, report: &KillingReport, fresh: &SampleSet) -> Vec<f64> {
    let grad_max = per_sample(fresh, |p| {
        let (_, j) = w.value_and_jacobian(p)?;
        Ok(j.iter().flatten().map(|c| c * c).sum::<f64>().sqrt())
    })
    .into_iter()
    .filter_map(Result::ok)
    .fold(0.0, f64::max);
    report
        .null_basis
        .iter()
        .map(|k| {
            let l = lie_euclidean(w, *k);
            let m = per_sample(fresh, |p| Ok(norm3(l.value(p)?)))
                .into_iter()
                .map(|v| v.unwrap_or(f64::INFINITY))
                .fold(0.0, f64::max);
            m / (k.norm() * grad_max.max(f64::MIN_POSITIVE))
        })
        .collect()
}

/// A supplied non-Euclidean symmetry direction with the data it was built
/// from.
#[derive(Clone, Debug)]
pub struct LocalSymmetrySpec {
    pub xi: VectorExpr,
    pub chart: AdmissibleChart,
    /// Free-function choices as `(name, expression)` pairs.
    pub choices: Vec<(String, String)>,
    /// `g` with `w×ξ = ∇g`, when the construction asserts it.
    pub potential: Option<ScalarExpr>,
}

/// `ξ = ĥ[α ∂₁ + ((g'(x₃) + α cos x₃)/sin x₃) ∂₂]` in the chart's tangent
/// frame, which makes `w×ξ = ∇(g∘x₃)`. `g` is a profile in `T`.
pub fn local_symmetry_from_chart(
    chart: &AdmissibleChart,
    h: &ScalarExpr,
    alpha: &ScalarExpr,
    g: &ScalarExpr,
) -> LocalSymmetrySpec {
    let x3 = chart.x3.clone();
    let g_prime = x3.clone().compose_into(&g.clone().profile_derivative());
    let beta = (g_prime + alpha.clone() * x3.clone().cos()) / x3.clone().sin();
    let [t1, t2, _] = chart.tangents();
    let xi = (t1.scale(alpha) + t2.scale(&beta)).scale(h);
    LocalSymmetrySpec {
        xi,
        chart: chart.clone(),
        choices: vec![("alpha".into(), alpha.to_string()), ("g".into(), g.to_string())],
        potential: Some(x3.compose_into(g)),
    }
}

/// `|ℒ_ξ w|`, `|∇·ξ|` and, when a potential is recorded, `|w×ξ − ∇g|`.
pub fn verify_local_symmetry(
    w: &VectorExpr,
    spec: &LocalSymmetrySpec,
    samples: &SampleSet,
    tol: f64,
) -> ResidualReport {
    let lie = w.lie(&spec.xi);
    let rows = per_sample(samples, |p| {
        let (_, jx) = spec.xi.value_and_jacobian(p)?;
        let l = norm3(lie.value(p)?);
        let pot = match &spec.potential {
            Some(g) => {
                let wx = cross3(w.value(p)?, spec.xi.value(p)?);
                let gg = g.eval(p, 1)?.gradient();
                norm3(std::array::from_fn(|i| wx[i] - gg[i]))
            }
            None => 0.0,
        };
        Ok([l, (jx[0][0] + jx[1][1] + jx[2][2]).abs(), pot])
    });
    let [l, d, pot] = columns(&rows);
    let mut r = ResidualReport::new(format!("local symmetry {} of {w}", spec.xi), samples);
    r.push(CheckStats::from_results("lie", &l, tol));
    r.push(CheckStats::from_results("divergence_xi", &d, XI_DIVERGENCE_TOL));
    if spec.potential.is_some() {
        r.push(CheckStats::from_results("potential", &pot, tol));
    }
    for (k, v) in &spec.choices {
        r.note(format!("{k} = {v}"));
    }
    r
}

fn c(v: f64) -> ScalarExpr {
    ScalarExpr::constant(v)
}

/// Translational symmetry of `abc_minimal` from `(p, g) = (1, −sin z)`.
pub fn abc_translation_spec(rec: &BeltramiRecord) -> LocalSymmetrySpec {
    let chart = rec.chart.as_ref().expect("abc_minimal has a chart");
    local_symmetry_from_chart(chart, &rec.h, &c(1.0), &(-ScalarExpr::t().sin()))
}

/// Rotation about the z-axis for `cylindrical` from `(p, g) = (0, −sin z)`;
/// then `α = 1`.
pub fn cylindrical_rotation_spec(rec: &BeltramiRecord) -> LocalSymmetrySpec {
    let chart = rec.chart.as_ref().expect("cylindrical has a chart");
    let mut s = local_symmetry_from_chart(chart, &rec.h, &c(1.0), &(-ScalarExpr::t().sin()));
    s.choices.insert(0, ("p".into(), "0".into()));
    s
}

/// Non-Euclidean symmetry of the chart `(e^x sin y, −e^x cos y, z²)` with
/// `p = 0`, `g = θ`:
/// `α = (ℓS + (ℓ² + ψ²) atan(ℓ/ψ)) / (sin θ · S²)`, `S = ψ − cot θ · ℓ`.
pub fn example3_spec(rec: &BeltramiRecord) -> LocalSymmetrySpec {
    let chart = rec.chart.as_ref().expect("example3 has a chart");
    let (l, psi, th) = (chart.x1.clone(), chart.x2.clone(), chart.x3.clone());
    let s = psi.clone() - th.clone().cos() / th.clone().sin() * l.clone();
    let alpha =
        (l.clone() * s.clone() + (l.clone().powi(2) + psi.clone().powi(2)) * (l / psi).atan()) / (th.sin() * s.powi(2));
    let mut spec = local_symmetry_from_chart(chart, &rec.h, &alpha, &ScalarExpr::t());
    spec.choices.insert(0, ("p".into(), "0".into()));
    spec
}

/// Region where the closed-form example-3 symmetry is smooth:
/// `θ = z² > 0.25` and `sin(θ + y) > 0`.
pub fn example3_region() -> DomainSpec {
    DomainSpec::boxed([-0.5, -0.3, 0.7], [0.5, 0.3, 1.3])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaExample {
    AbcMinimal,
    Cylindrical,
}

impl FromStr for AlphaExample {
    type Err = SymmetryError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "abc_minimal" => Ok(AlphaExample::AbcMinimal),
            "cylindrical" => Ok(AlphaExample::Cylindrical),
            _ => Err(SymmetryError::UnsupportedExample(s.into())),
        }
    }
}

/// Numerical `α` at target points together with the closed form.
///
/// Points are in solver coordinates: Cartesian `(x, y, z)` for
/// `abc_minimal`, `(azimuth, log r, z)` for `cylindrical`.
#[derive(Clone, Debug, Serialize)]
pub struct AlphaSolution {
    pub example: AlphaExample,
    pub values: Vec<CharacteristicValue>,
    pub closed_form: Vec<f64>,
    /// `None` when any characteristic failed.
    pub sup_error: Option<f64>,
}

/// Plane on which initial data for the cylindrical `α` is given.
pub const CYLINDRICAL_INITIAL_AZIMUTH: f64 = 0.0;

/// Solves the transport equation for `α` by characteristics.
///
/// `abc_minimal`: `α_x + cot z α_y = 0` with `α = p(y, z)` on `x = 0`, so
/// `α = p(y − x cot z, z)`.
///
/// `cylindrical`: `α_ϑ + cot z α_ρ = −2g'(z)/sin z − 2 cot z α` with
/// `α = ½ tan z p(ρ, z) − g'/cos z` on `ϑ = 0`, whose solution is
/// `½ tan z p(ρ − ϑ cot z, z) e^{−2ϑ cot z} − g'/cos z`.
///
/// `p` is written in solver coordinates and read on the initial plane; `g` is
/// a profile in `T`.
pub fn alpha_from_characteristics(
    example: AlphaExample,
    p: &ScalarExpr,
    g: &ScalarExpr,
    targets: &[Point3],
) -> Result<AlphaSolution, SymmetryError> {
    let z = ScalarExpr::z();
    let cot = z.clone().cos() / z.clone().sin();
    let advect = VectorExpr::new([c(1.0), cot.clone(), c(0.0)]);
    let g_prime = z.clone().compose_into(&g.clone().profile_derivative());
    type ClosedForm = Box<dyn Fn(Point3) -> Result<f64, EvalError> + Sync>;
    let (prob, closed): (CharacteristicsProblem, ClosedForm) = match example {
        AlphaExample::AbcMinimal => {
            let prob = CharacteristicsProblem::new(
                advect,
                c(0.0),
                InitialPlane {
                    axis: 0,
                    value: 0.0,
                    data: p.clone(),
                },
            );
            let p = p.clone();
            let closed = move |q: Point3| {
                let cz = q.z.cos() / q.z.sin();
                p.value(Point3::new(0.0, q.y - q.x * cz, q.z))
            };
            (prob, Box::new(closed))
        }
        AlphaExample::Cylindrical => {
            let q0 = CYLINDRICAL_INITIAL_AZIMUTH;
            let offset = g_prime.clone() / z.clone().cos();
            let data = c(0.5) * z.clone().tan() * p.clone() - offset.clone();
            let prob = CharacteristicsProblem::new(
                advect,
                c(-2.0) * g_prime.clone() / z.clone().sin(),
                InitialPlane {
                    axis: 0,
                    value: q0,
                    data,
                },
            )
            .with_rate(c(-2.0) * cot);
            let p = p.clone();
            let closed = move |q: Point3| {
                let cz = q.z.cos() / q.z.sin();
                let foot = Point3::new(q0, q.y - cz * (q.x - q0), q.z);
                let off = offset.value(q)?;
                Ok(0.5 * q.z.tan() * p.value(foot)? * (2.0 * cz * (q0 - q.x)).exp() - off)
            };
            (prob, Box::new(closed))
        }
    };
    let values = solve_characteristics(&prob, targets);
    let closed_form = targets
        .iter()
        .map(|q| closed(*q))
        .collect::<Result<Vec<f64>, EvalError>>()?;
    let sup_error = values
        .iter()
        .zip(&closed_form)
        .try_fold(0.0f64, |m, (v, e)| v.value.map(|u| m.max((u - e).abs())));
    Ok(AlphaSolution {
        example,
        values,
        closed_form,
        sup_error,
    })
}

/// Default targets in solver coordinates, away from `sin z = 0`.
pub fn alpha_targets(example: AlphaExample, count: usize, seed: u64) -> Result<Vec<Point3>, SymmetryError> {
    let d = match example {
        AlphaExample::AbcMinimal => DomainSpec::boxed([-0.5, -0.5, 0.6], [0.5, 0.5, 1.0]),
        AlphaExample::Cylindrical => DomainSpec::boxed([-1.0, 0.5f64.ln(), 0.6], [1.0, 1.5f64.ln(), 1.0]),
    };
    Ok(SampleSet::halton(&d, count, seed)?.points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beltrami::catalog;
    use crate::parse::parse_vector;

    fn scan(w: &VectorExpr, d: &DomainSpec) -> KillingReport {
        killing_scan_on(w, d, DEFAULT_SCAN_SAMPLES, 0, DEFAULT_THRESHOLD).unwrap()
    }

    #[test]
    fn lie_euclidean_examples() {
        let w = VectorExpr::constant([1.0, 0.0, 0.0]);
        let p = Point3::new(0.2, -0.4, 0.9);
        assert_eq!(lie_euclidean(&w, KillingParams::ZERO).value(p).unwrap(), [0.0; 3]);
        assert_eq!(
            lie_euclidean(&w, KillingParams::rotation(2)).value(p).unwrap(),
            [0.0, -1.0, 0.0]
        );
    }

    #[test]
    fn generator_parsing() {
        assert_eq!("rot-z".parse::<KillingParams>().unwrap(), KillingParams::rotation(2));
        assert_eq!(
            "trans-x".parse::<KillingParams>().unwrap(),
            KillingParams::translation(0)
        );
        assert_eq!(
            "1,0,0,0,0,2".parse::<KillingParams>().unwrap(),
            KillingParams::from_vec6([1.0, 0.0, 0.0, 0.0, 0.0, 2.0])
        );
        assert!("rot-w".parse::<KillingParams>().is_err());
        assert!("1,2,3".parse::<KillingParams>().is_err());
    }

    #[test]
    fn constant_field_has_four_dimensional_algebra() {
        let r = scan(&VectorExpr::constant([1.0, 0.0, 0.0]), &DomainSpec::unit_ball());
        assert_eq!(r.null_dim, 4);
        let want = [
            KillingParams::translation(0),
            KillingParams::translation(1),
            KillingParams::translation(2),
            KillingParams::rotation(0),
        ];
        assert_eq!(r.null_basis, want);
        assert!(!r.degenerate_sampling);
    }

    #[test]
    fn zero_field_is_fully_symmetric() {
        let r = scan(&VectorExpr::constant([0.0; 3]), &DomainSpec::unit_ball());
        assert_eq!(r.null_dim, 6);
    }

    #[test]
    fn collinear_samples_are_flagged() {
        let pts: Vec<Point3> = (0..20).map(|i| Point3::new(0.01 * i as f64, 0.0, 0.0)).collect();
        let s = SampleSet::from_points(pts, &DomainSpec::unit_ball());
        let r = killing_scan(&parse_vector("[sin(z), cos(z), 0]").unwrap(), &s, DEFAULT_THRESHOLD).unwrap();
        assert!(r.degenerate_sampling);
    }

    #[test]
    fn abc_minimal_has_translations_and_a_screw() {
        let rec = catalog("abc_minimal").unwrap();
        let r = scan(&rec.field, &rec.domain);
        assert_eq!(r.null_dim, 3);
        let screw = KillingParams::from_vec6([0.0, 0.0, 1.0, 0.0, 0.0, -1.0]);
        assert!(lie_euclidean(&rec.field, screw)
            .value(Point3::new(0.3, 0.1, 0.7))
            .unwrap()
            .iter()
            .all(|c| c.abs() < 1e-15));
        let fresh = SampleSet::random(&rec.domain, 200, 9).unwrap();
        assert!(validate_null_basis(&rec.field, &r, &fresh)
            .iter()
            .all(|v| *v < 10.0 * DEFAULT_THRESHOLD));
    }

    #[test]
    fn catalog_verdicts() {
        for (name, dim) in [("cylindrical", 1), ("exp_x3", 0), ("zsq_x3", 0)] {
            let rec = catalog(name).unwrap();
            let r = scan(&rec.field, &rec.domain);
            assert_eq!(r.null_dim, dim, "{name}: {:?}", r.relative_singular_values);
        }
        let rec = catalog("cylindrical").unwrap();
        let r = scan(&rec.field, &rec.domain);
        assert_eq!(r.null_basis, vec![KillingParams::rotation(2)]);
    }

    #[test]
    fn local_symmetries_of_examples() {
        let abc = catalog("abc_minimal").unwrap();
        let spec = abc_translation_spec(&abc);
        let s = SampleSet::halton(&DomainSpec::boxed([-1.0, -1.0, 0.3], [1.0, 1.0, 1.2]), 300, 0).unwrap();
        let p = Point3::new(0.3, 0.2, 0.8);
        let xi = spec.xi.value(p).unwrap();
        assert!((xi[0] - 1.0).abs() < 1e-15 && xi[1].abs() < 1e-15 && xi[2] == 0.0);
        assert!(verify_local_symmetry(&abc.field, &spec, &s, 1e-12).passed());

        let cyl = catalog("cylindrical").unwrap();
        let spec = cylindrical_rotation_spec(&cyl);
        let d = DomainSpec::cyl_shell(0.5, 1.5, 0.3, 1.2);
        let s = SampleSet::halton(&d, 300, 0).unwrap();
        let xi = spec.xi.value(p).unwrap();
        assert!((xi[0] - p.y).abs() < 1e-14 && (xi[1] + p.x).abs() < 1e-14);
        assert!(verify_local_symmetry(&cyl.field, &spec, &s, 1e-8).passed());

        let ex3 = catalog("example3").unwrap();
        let spec = example3_spec(&ex3);
        let s = SampleSet::halton(&example3_region(), 500, 0).unwrap();
        let r = verify_local_symmetry(&ex3.field, &spec, &s, LOCAL_SYMMETRY_TOL);
        assert!(r.passed(), "{r:?}");
        // Not Euclidean: ξ is not of the form a + b×x.
        let k = killing_scan(&ex3.field, &s, DEFAULT_THRESHOLD).unwrap();
        assert_eq!(k.null_dim, 0);
    }

    #[test]
    fn alpha_matches_closed_forms() {
        let p = crate::parse::parse_scalar("sin(y) + z").unwrap();
        let g = -ScalarExpr::t().sin();
        for ex in [AlphaExample::AbcMinimal, AlphaExample::Cylindrical] {
            let t = alpha_targets(ex, 60, 0).unwrap();
            let sol = alpha_from_characteristics(ex, &p, &g, &t).unwrap();
            assert!(sol.sup_error.unwrap() < 1e-6, "{ex:?}: {:?}", sol.sup_error);
        }
        // p = 0 on the cylinder gives the constant α = 1 of the rotation.
        let t = alpha_targets(AlphaExample::Cylindrical, 20, 1).unwrap();
        let sol = alpha_from_characteristics(AlphaExample::Cylindrical, &c(0.0), &g, &t).unwrap();
        assert!(sol.values.iter().all(|v| (v.value.unwrap() - 1.0).abs() < 1e-10));
    }

    #[test]
    fn constant_data_is_transported_unchanged() {
        let t = alpha_targets(AlphaExample::AbcMinimal, 20, 0).unwrap();
        let sol = alpha_from_characteristics(AlphaExample::AbcMinimal, &c(0.7), &c(0.0), &t).unwrap();
        assert!(sol.values.iter().all(|v| (v.value.unwrap() - 0.7).abs() < 1e-14));
    }
}
