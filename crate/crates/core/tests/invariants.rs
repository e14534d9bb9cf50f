//! Invariance and cross-module agreement: verdicts that must not depend on
//! sampling, coordinates or scale, and composite pieces that must agree with
//! the modules that own them.

mod common;

use mhs_core::beltrami;
use mhs_core::calculus::{beltrami_residual, force_balance_residual};
use mhs_core::composite::{default_assembly, verify_composite, REGION_TOL};
use mhs_core::gradshafranov::{gs_residual, ChartKind, GSProblem};
use mhs_core::orbit::lie_generate;
use mhs_core::symmetry::{killing_scan, validate_null_basis, KillingParams, DEFAULT_THRESHOLD};
use mhs_core::{DomainSpec, Point3, SampleSet, ScalarExpr, VectorExpr};

use common::dist;

fn null_dim(w: &VectorExpr, s: &SampleSet) -> usize {
    killing_scan(w, s, DEFAULT_THRESHOLD).unwrap().null_dim
}

/// Rotation by `angle` about the unit vector `u` (Rodrigues).
fn rotation(u: [f64; 3], angle: f64) -> [[f64; 3]; 3] {
    let (s, c) = angle.sin_cos();
    let k = [[0.0, -u[2], u[1]], [u[2], 0.0, -u[0]], [-u[1], u[0], 0.0]];
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let k2: f64 = (0..3).map(|l| k[i][l] * k[l][j]).sum();
            (if i == j { 1.0 } else { 0.0 }) + s * k[i][j] + (1.0 - c) * k2
        })
    })
}

fn apply(r: &[[f64; 3]; 3], p: Point3) -> Point3 {
    let x = p.to_array();
    Point3::from_array(std::array::from_fn(|i| (0..3).map(|j| r[i][j] * x[j]).sum()))
}

/// `R w(Rᵀx)` for `w = [sin λz, cos λz, 0]`, built from expressions.
fn rotated_abc(r: &[[f64; 3]; 3], lambda: f64) -> VectorExpr {
    let c = ScalarExpr::constant;
    // (Rᵀx)_z = Σ_k R[k][2] x_k
    let zr = (0..3).fold(c(0.0), |acc, k| acc + c(r[k][2]) * ScalarExpr::coord(k));
    let arg = c(lambda) * zr;
    let (s, co) = (arg.clone().sin(), arg.cos());
    VectorExpr::new(std::array::from_fn(|i| {
        c(r[i][0]) * s.clone() + c(r[i][1]) * co.clone()
    }))
}

#[test]
fn verdict_is_invariant_under_rigid_motion_of_samples_and_field() {
    let ball = DomainSpec::unit_ball();
    let s = SampleSet::halton(&ball, 400, 0).unwrap();
    let r = rotation([0.48, 0.6, 0.64], 0.9);
    let abc = beltrami::catalog("abc_minimal").unwrap();
    let base = null_dim(&abc.field, &s);
    assert_eq!(base, 3);
    let moved = s.mapped(|p| apply(&r, p));
    assert_eq!(null_dim(&abc.field, &moved), base);
    let identity = rotation([0.0, 0.0, 1.0], 0.0);
    let same = rotated_abc(&identity, 1.0);
    for &p in &s.points {
        assert!(dist(same.value(p).unwrap(), abc.field.value(p).unwrap()) < 1e-15);
    }
    assert_eq!(null_dim(&rotated_abc(&r, 1.0), &s), base);
}

#[test]
fn verdict_is_invariant_under_scaling() {
    let s = SampleSet::halton(&DomainSpec::unit_ball(), 400, 0).unwrap();
    let id = rotation([1.0, 0.0, 0.0], 0.0);
    for lambda in [0.5, 3.0] {
        assert_eq!(null_dim(&rotated_abc(&id, lambda), &s), 3, "lambda = {lambda}");
    }
    for name in ["cylindrical", "zsq_x3"] {
        let rec = beltrami::catalog(name).unwrap();
        let s = SampleSet::halton(&rec.domain, 400, 0).unwrap();
        let base = null_dim(&rec.field, &s);
        for c in [1e-3, 1e3] {
            let scaled = rec.field.scale(&ScalarExpr::constant(c));
            assert_eq!(null_dim(&scaled, &s), base, "{name} x {c}");
        }
    }
}

#[test]
fn null_vectors_validate_out_of_sample() {
    for name in ["abc_minimal", "cylindrical"] {
        let rec = beltrami::catalog(name).unwrap();
        let s = SampleSet::halton(&rec.domain, 400, 0).unwrap();
        let report = killing_scan(&rec.field, &s, DEFAULT_THRESHOLD).unwrap();
        let fresh = SampleSet::random(&rec.domain, 400, 99).unwrap();
        let v = validate_null_basis(&rec.field, &report, &fresh);
        assert_eq!(v.len(), report.null_dim);
        assert!(v.iter().all(|&e| e < 10.0 * DEFAULT_THRESHOLD), "{name}: {v:?}");
    }
}

#[test]
fn orbit_members_are_linear_in_the_generator() {
    let rec = beltrami::catalog("zsq_x3").unwrap();
    let s = SampleSet::halton(&rec.domain, 300, 0).unwrap();
    let k1 = KillingParams::translation(1);
    let k2 = KillingParams::rotation(2).scale(0.7);
    let m = |k| lie_generate(&rec, k, 1, &s).unwrap().members[1].clone();
    let (a, b, sum) = (m(k1), m(k2), m(k1 + k2));
    for &p in &s.points {
        let (va, vb) = (a.value(p).unwrap(), b.value(p).unwrap());
        let want = std::array::from_fn(|i| va[i] + vb[i]);
        assert!(dist(sum.value(p).unwrap(), want) < 1e-10);
    }
}

/// `ΔΘ − (2/r)Θ_r + c²Θ` in cylindrical coordinates, written out by hand.
#[test]
fn axisymmetric_residual_matches_cylindrical_expansion() {
    let d = DomainSpec::cyl_shell(0.2, 1.0, -1.0, 1.0);
    let s = SampleSet::halton(&d, 500, 0).unwrap();
    let (x, y, z) = (ScalarExpr::x(), ScalarExpr::y(), ScalarExpr::z());
    let r2 = x.powi(2) + y.powi(2);
    type Oracle = fn(f64, f64, f64) -> f64;
    let cases: [(ScalarExpr, f64, Oracle); 3] = [
        // Θ = r⁴/4 + r²z²: Θ_r = r³ + 2rz², Θ_rr = 3r² + 2z², Θ_zz = 2r².
        (
            r2.clone().powi(2) / 4.0 + r2.clone() * z.clone().powi(2),
            0.5,
            |r, z, c| 4.0 * r * r + c * c * (r.powi(4) / 4.0 + r * r * z * z),
        ),
        // Θ = r² cos z: exact solution for c = 1.
        (r2.clone() * z.clone().cos(), 1.0, |r, z, c| {
            (c * c - 1.0) * r * r * z.cos()
        }),
        (r2 * z.cos(), 2.0, |r, z, c| (c * c - 1.0) * r * r * z.cos()),
    ];
    for (theta, c, oracle) in cases {
        let prob = GSProblem::new(
            ChartKind::Axisymmetric,
            theta.clone(),
            ScalarExpr::constant(c) * ScalarExpr::t(),
            ScalarExpr::constant(0.0),
        );
        let rep = gs_residual(&prob, &s);
        let lib = rep.check("gs_residual").unwrap();
        assert_eq!(lib.n_failed, 0);
        let want_max = s
            .points
            .iter()
            .map(|p| oracle(p.x.hypot(p.y), p.z, c).abs())
            .fold(0.0, f64::max);
        assert!(
            (lib.max - want_max).abs() < 1e-8,
            "{theta}, c = {c}: {} vs {want_max}",
            lib.max
        );
        assert!(rep.max("fifth_term") < 1e-10);
    }
}

#[test]
fn composite_regions_agree_with_owning_modules() {
    let pf = default_assembly().unwrap();
    let rep = verify_composite(&pf, 400).unwrap();
    let core = &pf.regions[0];
    let shell = &pf.regions[1];
    let cs = SampleSet::halton(&core.domain, 400, 0).unwrap();
    let ss = SampleSet::halton(&shell.domain, 400, 0).unwrap();
    let direct_core = force_balance_residual(&core.field, core.chi.as_ref().unwrap(), &cs, REGION_TOL);
    let direct_shell = beltrami_residual(&shell.field, shell.h.as_ref().unwrap(), &ss, REGION_TOL);
    assert_eq!(rep.regions[0].checks, direct_core.checks);
    assert_eq!(rep.regions[1].checks, direct_shell.checks);
    let w41 = mhs_core::pressure::catalog("w4_1").unwrap();
    let exp = beltrami::catalog("exp_x3").unwrap();
    for &p in cs.points.iter().take(50) {
        assert_eq!(pf.value(p).unwrap().unwrap(), w41.field.value(p).unwrap());
    }
    for &p in ss.points.iter().take(50) {
        assert_eq!(pf.value(p).unwrap().unwrap(), exp.field.value(p).unwrap());
    }
    let core_alone = killing_scan(
        &w41.field,
        &SampleSet::halton(&core.domain, 400, 0).unwrap(),
        DEFAULT_THRESHOLD,
    )
    .unwrap();
    assert_eq!(rep.core_killing.null_dim, core_alone.null_dim);
}
