use std::fmt::{self, Write as _};

use anyhow::Result;
use mhs_core::beltrami::{self, verify_h_invariance, BeltramiRecord, BELTRAMI_TOL};
use mhs_core::calculus::{beltrami_residual, force_balance_residual};
use mhs_core::characteristics::{solve_characteristics, CharacteristicValue, InitialPlane};
use mhs_core::composite::{assemble, default_assembly, verify_composite, PiecewiseField};
use mhs_core::gradshafranov::{
    clebsch_decomposition, decomposition_box, ggse_check, gs_residual, reconstruction_report, ChartKind, GSProblem,
};
use mhs_core::orbit::lie_generate;
use mhs_core::pressure::{self, clebsch_characteristics, offset_box, ClebschSolution, FORCE_TOL};
use mhs_core::report::{per_sample, CheckStats, ResidualReport};
use mhs_core::symmetry::{
    alpha_from_characteristics, alpha_targets, killing_scan, AlphaExample, KillingParams, KillingReport,
};
use mhs_core::{parse_scalar, parse_vector, DomainSpec, Generator, Point3, SampleSet, ScalarExpr, VectorExpr};
use serde_json::{json, Value};

use crate::output::{num, report_text, reports_csv, Outcome};
use crate::{CatalogAction, Command, FieldArgs, Format, SampleArgs, Sampler};

/// Bad input: unknown names, malformed expressions or domains, invalid flag
/// combinations.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Tolerance for the characteristics solves against closed forms.
pub const CHARACTERISTICS_TOL: f64 = 1e-6;
/// Force-balance tolerance for Grad-Shafranov reconstructions.
pub const RECONSTRUCTION_TOL: f64 = 1e-7;

pub fn run(cmd: &Command, format: Format) -> Result<Outcome> {
    match cmd {
        Command::Catalog { action } => catalog(action.as_ref()),
        Command::Verify { field, sampling } => verify(field, sampling),
        Command::Symmetry {
            field,
            sampling,
            threshold,
            expect,
        } => symmetry(field, sampling, *threshold, *expect),
        Command::Orbit {
            field,
            sampling,
            generator,
            n,
        } => orbit(field, sampling, generator, *n),
        Command::Gs {
            chart,
            theta,
            chi,
            w3,
            sampling,
        } => gs(chart, theta, chi, w3, sampling),
        Command::Ggse { integrate, sampling } => ggse(*integrate, sampling),
        Command::Composite {
            core,
            shell,
            radius,
            eps,
            samples,
        } => composite(core, shell, *radius, *eps, *samples),
        Command::Export { name, grid, domain } => export(name, *grid, domain.as_deref(), format),
        Command::Characteristics {
            example,
            p,
            g,
            samples,
            seed,
        } => characteristics(example, p, g, *samples, *seed),
    }
}

enum Subject {
    Beltrami(BeltramiRecord),
    Pressure(ClebschSolution),
    Inline {
        field: VectorExpr,
        h: Option<ScalarExpr>,
        chi: Option<ScalarExpr>,
    },
}

fn scalar(src: &str, what: &str) -> Result<ScalarExpr> {
    parse_scalar(src).map_err(|e| usage(format!("malformed {what} '{src}': {e}")))
}

fn vector(src: &str, what: &str) -> Result<VectorExpr> {
    parse_vector(src).map_err(|e| usage(format!("malformed {what} '{src}': {e}")))
}

fn domain(src: &str) -> Result<DomainSpec> {
    src.parse::<DomainSpec>()
        .map_err(|e| usage(format!("malformed domain '{src}': {e}")))
}

fn is_beltrami(name: &str) -> bool {
    beltrami::CATALOG.contains(&name)
}

fn is_pressure(name: &str) -> bool {
    pressure::CATALOG.contains(&name)
}

fn unknown(name: &str) -> anyhow::Error {
    usage(format!(
        "unknown field '{name}'; known: {}, {}",
        beltrami::CATALOG.join(", "),
        pressure::CATALOG.join(", ")
    ))
}

/// Parses everything first so bad input is rejected before computing.
fn resolve(f: &FieldArgs) -> Result<Subject> {
    let h = f.h.as_deref().map(|s| scalar(s, "h")).transpose()?;
    let chi = f.chi.as_deref().map(|s| scalar(s, "chi")).transpose()?;
    match (&f.name, &f.field) {
        (Some(_), Some(_)) => Err(usage("give a catalog name or --field, not both")),
        (None, None) => Err(usage("a catalog name or --field is required")),
        (None, Some(src)) => Ok(Subject::Inline {
            field: vector(src, "field")?,
            h,
            chi,
        }),
        (Some(name), None) => {
            if is_beltrami(name) {
                let mut rec = beltrami::catalog(name)?;
                if let Some(h) = h {
                    rec.h = h;
                }
                Ok(Subject::Beltrami(rec))
            } else if is_pressure(name) {
                let mut sol = pressure::catalog(name)?;
                if let Some(chi) = chi {
                    sol.chi = chi;
                }
                Ok(Subject::Pressure(sol))
            } else {
                Err(unknown(name))
            }
        }
    }
}

fn samples(s: &SampleArgs, default_domain: &DomainSpec, default_count: usize) -> Result<SampleSet> {
    let d = match &s.domain {
        Some(src) => domain(src)?,
        None => default_domain.clone(),
    };
    let g = match s.sampler {
        Sampler::Halton => Generator::Halton,
        Sampler::Random => Generator::Random,
    };
    SampleSet::generate(&d, g, s.samples.unwrap_or(default_count), s.seed).map_err(|e| usage(e.to_string()))
}

fn report_outcome(command: &'static str, reports: Vec<ResidualReport>, extra: Value) -> Outcome {
    let passed = reports.iter().all(|r| r.passed());
    let text: String = reports.iter().map(report_text).collect::<Vec<_>>().join("\n")
        + &format!("{}\n", if passed { "PASS" } else { "FAIL" });
    let csv = reports_csv(&reports.iter().collect::<Vec<_>>());
    let mut payload = json!({ "reports": reports });
    if let (Value::Object(p), Value::Object(e)) = (&mut payload, extra) {
        p.extend(e);
    }
    Outcome::new(command, passed, payload, text).with_csv(csv)
}

fn catalog(action: Option<&CatalogAction>) -> Result<Outcome> {
    match action {
        None => {
            let b: Vec<_> = beltrami::CATALOG
                .iter()
                .map(|n| beltrami::catalog(n).map(|r| r.summary()))
                .collect::<Result<_, _>>()?;
            let p: Vec<_> = pressure::CATALOG
                .iter()
                .map(|n| pressure::catalog(n).map(|s| s.summary()))
                .collect::<Result<_, _>>()?;
            let mut text = String::from("beltrami fields (curl w = h w)\n");
            for s in &b {
                let _ = writeln!(
                    text,
                    "  {:<12} h = {:<10} domain {:<40} {}",
                    s.name, s.h, s.domain, s.provenance
                );
            }
            text.push_str("finite-pressure fields (w x curl w = grad chi)\n");
            for s in &p {
                let _ = writeln!(text, "  {:<12} domain {:<40} {}", s.name, s.domain, s.provenance);
            }
            Ok(Outcome::new(
                "catalog",
                true,
                json!({ "beltrami": b, "pressure": p }),
                text,
            ))
        }
        Some(CatalogAction::Show { name }) => {
            if is_beltrami(name) {
                let s = beltrami::catalog(name)?.summary();
                let text = format!(
                    "{}\n  w = [{}, {}, {}]\n  h = {}\n  domain {}\n  {}\n",
                    s.name, s.components[0], s.components[1], s.components[2], s.h, s.domain, s.provenance
                );
                Ok(Outcome::new(
                    "catalog",
                    true,
                    json!({ "kind": "beltrami", "entry": s }),
                    text,
                ))
            } else if is_pressure(name) {
                let sol = pressure::catalog(name)?;
                let s = sol.summary();
                let c: Vec<String> = (0..3).map(|i| sol.field.component(i).to_string()).collect();
                let text = format!(
                    "{}\n  w = [{}, {}, {}]\n  chi = {}\n  phi = {}\n  psi = {}\n  domain {} (scans on {})\n  {}\n",
                    s.name, c[0], c[1], c[2], s.chi, s.phi, s.psi, s.domain, s.scan_domain, s.provenance
                );
                Ok(Outcome::new(
                    "catalog",
                    true,
                    json!({ "kind": "pressure", "entry": s, "components": c }),
                    text,
                ))
            } else {
                Err(unknown(name))
            }
        }
    }
}

fn verify(f: &FieldArgs, s: &SampleArgs) -> Result<Outcome> {
    let subject = resolve(f)?;
    let reports = match subject {
        Subject::Beltrami(rec) => {
            let smp = samples(s, &rec.domain, beltrami::DEFAULT_SAMPLES)?;
            let mut r = rec.verify(&smp, BELTRAMI_TOL);
            r.merge(verify_h_invariance(&rec, &smp, BELTRAMI_TOL));
            vec![r]
        }
        Subject::Pressure(sol) => {
            let smp = samples(s, &sol.domain, pressure::DEFAULT_SAMPLES)?;
            if f.chi.is_some() {
                vec![chi_report(&sol.field, &sol.chi, &smp)]
            } else {
                vec![sol.verify(&smp)]
            }
        }
        Subject::Inline { field, h, chi } => {
            let smp = samples(s, &DomainSpec::unit_ball(), beltrami::DEFAULT_SAMPLES)?;
            match (h, chi) {
                (Some(h), _) => vec![beltrami_residual(&field, &h, &smp, BELTRAMI_TOL)],
                (None, Some(chi)) => vec![chi_report(&field, &chi, &smp)],
                (None, None) => return Err(usage("an inline field needs --h or --chi")),
            }
        }
    };
    Ok(report_outcome("verify", reports, json!({})))
}

/// Force balance plus constancy of `χ` along field lines.
fn chi_report(w: &VectorExpr, chi: &ScalarExpr, smp: &SampleSet) -> ResidualReport {
    let mut r = force_balance_residual(w, chi, smp, FORCE_TOL);
    let along = per_sample(smp, |p| {
        let v = w.value(p)?;
        let g = chi.eval(p, 1)?.gradient();
        Ok((v[0] * g[0] + v[1] * g[1] + v[2] * g[2]).abs())
    });
    r.push(CheckStats::from_results("chi_along_w", &along, FORCE_TOL));
    r
}

fn killing_text(r: &KillingReport) -> String {
    let mut s = format!(
        "killing scan on {} ({} {} samples, seed {}, {} failed)\n  singular values:",
        r.domain, r.n_samples, r.generator, r.seed, r.n_failed
    );
    for v in &r.singular_values {
        let _ = write!(s, " {v:.3e}");
    }
    let _ = writeln!(s, "\n  null dimension {} (threshold {:e})", r.null_dim, r.threshold);
    if let Some(g) = r.gap {
        let _ = writeln!(s, "  gap at null boundary {g:.3e}");
    }
    for k in &r.null_basis {
        let _ = writeln!(s, "  null direction {k}");
    }
    if r.degenerate_sampling {
        s.push_str("  warning: samples are nearly collinear or coplanar\n");
    }
    s
}

fn symmetry(f: &FieldArgs, s: &SampleArgs, threshold: f64, expect: Option<usize>) -> Result<Outcome> {
    let (field, d) = match resolve(f)? {
        Subject::Beltrami(rec) => (rec.field, rec.domain),
        Subject::Pressure(sol) => (sol.field, sol.scan_domain),
        Subject::Inline { field, .. } => (field, DomainSpec::unit_ball()),
    };
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(usage("--threshold must lie in (0, 1)"));
    }
    let smp = samples(s, &d, mhs_core::symmetry::DEFAULT_SCAN_SAMPLES)?;
    let r = killing_scan(&field, &smp, threshold)?;
    let passed = expect.is_none_or(|e| e == r.null_dim);
    let mut text = killing_text(&r);
    if let Some(e) = expect {
        let _ = writeln!(
            text,
            "expected null dimension {e}: {}",
            if passed { "PASS" } else { "FAIL" }
        );
    }
    Ok(Outcome::new("symmetry", passed, serde_json::to_value(&r)?, text))
}

fn orbit(f: &FieldArgs, s: &SampleArgs, generator: &str, n: usize) -> Result<Outcome> {
    let k: KillingParams = generator
        .parse()
        .map_err(|e: mhs_core::symmetry::SymmetryError| usage(e.to_string()))?;
    let rec = match resolve(f)? {
        Subject::Beltrami(rec) => rec,
        Subject::Inline { field, h: Some(h), .. } => BeltramiRecord {
            name: "inline".into(),
            field,
            h,
            domain: DomainSpec::unit_ball(),
            chart: None,
            provenance: "inline".into(),
            singular: Vec::new(),
        },
        _ => {
            return Err(usage(
                "orbits need a Beltrami field: a Beltrami catalog entry or --field with --h",
            ))
        }
    };
    let smp = samples(s, &rec.domain, 200)?;
    let orbit = lie_generate(&rec, k, n, &smp).map_err(|e| match e {
        mhs_core::orbit::OrbitError::TooDeep(_) => usage(e.to_string()),
        e => anyhow::Error::new(e),
    })?;
    let summary = orbit.summary();
    let mut text = format!("orbit of {} along {} (h = {})\n", summary.base, k, summary.h);
    for m in &summary.members {
        let _ = writeln!(
            text,
            "  member {}: max |w| {:.3e}, beltrami {:.3e}, divergence {:.3e} {}",
            m.n,
            m.max_magnitude,
            m.beltrami_max,
            m.divergence_max,
            if m.passed { "PASS" } else { "FAIL" }
        );
    }
    if let Some(t) = summary.terminal_null {
        let _ = writeln!(text, "  terminal null at member {t}");
    }
    if let Some(t) = summary.truncated {
        let _ = writeln!(text, "  truncated at member {t}");
    }
    text.push_str(if summary.passed { "PASS\n" } else { "FAIL\n" });
    let csv = reports_csv(&orbit.reports.iter().collect::<Vec<_>>());
    Ok(Outcome::new("orbit", summary.passed, serde_json::to_value(&summary)?, text).with_csv(csv))
}

fn gs(chart: &str, theta: &str, chi: &str, w3: &str, s: &SampleArgs) -> Result<Outcome> {
    let kind: ChartKind = chart.parse().map_err(usage)?;
    let prob = GSProblem::new(kind, scalar(theta, "theta")?, scalar(w3, "w3")?, scalar(chi, "chi")?);
    let d = match kind {
        ChartKind::Translational => DomainSpec::unit_ball(),
        ChartKind::Axisymmetric => DomainSpec::cyl_shell(0.3, 1.0, -0.5, 0.5),
    };
    let smp = samples(s, &d, 500)?;
    let reports = vec![
        gs_residual(&prob, &smp),
        reconstruction_report(&prob, &smp, RECONSTRUCTION_TOL),
    ];
    Ok(report_outcome("gs", reports, json!({ "problem": prob.summary() })))
}

fn ggse(integrate: bool, s: &SampleArgs) -> Result<Outcome> {
    let d = decomposition_box();
    let smp = samples(s, &d, 500)?;
    let c = d.center();
    let r = ggse_check(&clebsch_decomposition(!integrate), &smp, Point3::from_array(c));
    Ok(report_outcome(
        "ggse",
        vec![r],
        json!({ "integrated_potential": integrate }),
    ))
}

fn composite_field(core: &str, shell: &str, radius: f64, eps: f64) -> Result<PiecewiseField> {
    if !is_pressure(core) {
        return Err(usage(format!("core must be a pressure catalog entry, got '{core}'")));
    }
    if !is_beltrami(shell) {
        return Err(usage(format!("shell must be a Beltrami catalog entry, got '{shell}'")));
    }
    Ok(assemble(
        &pressure::catalog(core)?,
        &beltrami::catalog(shell)?,
        radius,
        eps,
    )?)
}

fn composite(core: &str, shell: &str, radius: f64, eps: f64, n: usize) -> Result<Outcome> {
    let pf = composite_field(core, shell, radius, eps)?;
    let r = verify_composite(&pf, n)?;
    let mut text: String = r.regions.iter().map(report_text).collect::<Vec<_>>().join("\n");
    let _ = writeln!(
        text,
        "L2 norm squared {:.6e} +- {:.2e} (relative {:.3e}, {} points, seed {})",
        r.l2.estimate, r.l2.standard_error, r.l2.relative_se, r.l2.n_points, r.l2.seed
    );
    for s in std::iter::once(&r.interface_jump).chain(&r.normal_flux) {
        let _ = writeln!(
            text,
            "{} at radius {}: max {:.3e}, mean {:.3e}",
            s.name, s.radius, s.max, s.mean
        );
    }
    text.push_str(&killing_text(&r.core_killing));
    text.push_str(if r.passed { "PASS\n" } else { "FAIL\n" });
    let csv = reports_csv(&r.regions.iter().collect::<Vec<_>>());
    Ok(Outcome::new("composite", r.passed, serde_json::to_value(&r)?, text).with_csv(csv))
}

/// Inclusive grid over the bounding box, x slowest and z fastest.
fn grid_points(d: &DomainSpec, n: usize) -> Vec<Point3> {
    let (lo, hi) = d.bounds();
    let at = |a: usize, i: usize| {
        if n == 1 {
            0.5 * (lo[a] + hi[a])
        } else {
            lo[a] + (hi[a] - lo[a]) * i as f64 / (n - 1) as f64
        }
    };
    let mut pts = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                pts.push(Point3::new(at(0, i), at(1, j), at(2, k)));
            }
        }
    }
    pts
}

fn export(name: &str, n: usize, dom: Option<&str>, format: Format) -> Result<Outcome> {
    if n == 0 {
        return Err(usage("--grid must be positive"));
    }
    type Row = Vec<f64>;
    type RowFn = Box<dyn Fn(Point3) -> Row>;
    let (d, columns, eval): (DomainSpec, Vec<&str>, RowFn) = if name == "composite" {
        let pf = default_assembly().map_err(|e| anyhow::anyhow!("{e}"))?;
        let d = pf.ambient.clone();
        let f = move |p: Point3| -> Row {
            match (pf.region_of(p), pf.value(p)) {
                (Some(i), Ok(Some(v))) => vec![v[0], v[1], v[2], i as f64],
                _ => vec![f64::NAN, f64::NAN, f64::NAN, -1.0],
            }
        };
        (d, vec!["x", "y", "z", "wx", "wy", "wz", "region"], Box::new(f))
    } else if is_beltrami(name) {
        let rec = beltrami::catalog(name)?;
        let w = rec.field.clone();
        let f = move |p: Point3| -> Row { w.value(p).map_or(vec![f64::NAN; 3], |v| v.to_vec()) };
        (rec.domain, vec!["x", "y", "z", "wx", "wy", "wz"], Box::new(f))
    } else if is_pressure(name) {
        let sol = pressure::catalog(name)?;
        let (w, chi) = (sol.field.clone(), sol.chi.clone());
        let f = move |p: Point3| -> Row {
            let mut r = w.value(p).map_or(vec![f64::NAN; 3], |v| v.to_vec());
            r.push(chi.value(p).unwrap_or(f64::NAN));
            r
        };
        (sol.domain, vec!["x", "y", "z", "wx", "wy", "wz", "chi"], Box::new(f))
    } else {
        return Err(unknown(name));
    };
    let d = match dom {
        Some(s) => domain(s)?,
        None => d,
    };
    let pts = grid_points(&d, n);
    let rows: Vec<Row> = pts
        .iter()
        .map(|p| {
            let mut r = vec![p.x, p.y, p.z];
            r.extend(eval(*p));
            r
        })
        .collect();
    let mut csv = columns.join(",");
    csv.push('\n');
    for r in &rows {
        csv.push_str(&r.iter().map(|v| num(*v)).collect::<Vec<_>>().join(","));
        csv.push('\n');
    }
    let payload = if format == Format::Json {
        json!({ "name": name, "domain": d.to_string(), "grid": n, "columns": columns, "rows": rows })
    } else {
        json!({})
    };
    Ok(Outcome::new("export", true, payload, csv.clone()).with_csv(csv))
}

fn characteristics(example: &str, p: &str, g: &str, n: usize, seed: u64) -> Result<Outcome> {
    let (values, exact, label): (Vec<CharacteristicValue>, Vec<f64>, String) = match example {
        "w4_1" | "w4_2" | "w4_3" => {
            let targets = SampleSet::halton(&offset_box(), n, seed)?.points;
            let (y, z) = (ScalarExpr::y(), ScalarExpr::z());
            let c = ScalarExpr::constant;
            let (phi, plane, exact): (ScalarExpr, InitialPlane, fn(Point3) -> f64) = match example {
                "w4_1" => (
                    z.clone(),
                    InitialPlane {
                        axis: 2,
                        value: 0.0,
                        data: c(0.0),
                    },
                    |q| -q.z,
                ),
                "w4_2" => (
                    z.clone(),
                    InitialPlane {
                        axis: 2,
                        value: 0.0,
                        data: c(2.0) * y.clone().ln(),
                    },
                    |q| q.z + 2.0 * q.y.ln(),
                ),
                _ => (
                    (z.clone().powi(2) - y.clone().powi(2)) / 2.0,
                    InitialPlane {
                        axis: 2,
                        value: 0.5,
                        data: (c(0.5) * y.clone()).ln(),
                    },
                    |q| (q.y * q.z).ln(),
                ),
            };
            let prob = clebsch_characteristics(&phi, plane);
            let vals = solve_characteristics(&prob, &targets);
            let ex = targets.iter().map(|q| exact(*q)).collect();
            (vals, ex, format!("clebsch exponent of {example}"))
        }
        "abc_minimal" | "cylindrical" => {
            let ex: AlphaExample = example
                .parse()
                .map_err(|e: mhs_core::symmetry::SymmetryError| usage(e.to_string()))?;
            let (p, g) = (scalar(p, "p")?, scalar(g, "g")?);
            let targets = alpha_targets(ex, n, seed)?;
            let sol = alpha_from_characteristics(ex, &p, &g, &targets)?;
            (
                sol.values,
                sol.closed_form,
                format!("symmetry coefficient of {example}"),
            )
        }
        _ => {
            return Err(usage(format!(
                "unknown characteristics example '{example}': expected w4_1, w4_2, w4_3, abc_minimal or cylindrical"
            )))
        }
    };
    let sup = values
        .iter()
        .zip(&exact)
        .try_fold(0.0f64, |m, (v, e)| v.value.map(|u| m.max((u - e).abs())));
    let failures = values.iter().filter(|v| v.failure.is_some()).count();
    let est = values.iter().map(|v| v.error_estimate).fold(0.0, f64::max);
    let passed = sup.is_some_and(|s| s < CHARACTERISTICS_TOL);
    let text = format!(
        "{label}: {} targets, sup error {}, largest error estimate {:.3e}, {} failures\n{}\n",
        values.len(),
        sup.map_or("n/a".to_string(), |s| format!("{s:.3e}")),
        est,
        failures,
        if passed { "PASS" } else { "FAIL" }
    );
    let mut csv = String::from("x,y,z,value,exact,error_estimate\n");
    for (v, e) in values.iter().zip(&exact) {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            num(v.point.x),
            num(v.point.y),
            num(v.point.z),
            v.value.map_or("nan".into(), num),
            num(*e),
            num(v.error_estimate)
        );
    }
    let payload = json!({
        "example": example,
        "sup_error": sup,
        "tolerance": CHARACTERISTICS_TOL,
        "max_error_estimate": est,
        "failures": failures,
        "values": values,
        "closed_form": exact,
    });
    Ok(Outcome::new("characteristics", passed, payload, text).with_csv(csv))
}
