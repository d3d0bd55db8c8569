//! Acceptance suite: one test per criterion, at the stated tolerances.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use std::f64::consts::{FRAC_PI_3, PI};
use std::sync::Arc;
use std::time::{Duration, Instant};

use partconn::actions::{
    action_by_name, hxh_on_su3, isotropy_algebra, vertical_rotation, Action, Manifold,
    ManifoldPoint, ACTION_NAMES,
};
use partconn::cli::{
    builtin_forms, involutivity_suite, projection_suite, run_scenario, well_conditioned,
    ScenarioConfig,
};
use partconn::connections::{mu_q, simple_mechanical_mu};
use partconn::curvature::{
    annihilator_residual, curvature, curvature_leftright_closed, curvature_table, d_oneform,
    docile, interior_product_residual, structure_residual, tame,
};
use partconn::frames::{
    beta_equivariance_check, dnat_curve, dnat_rho, eastward_field, geodesic_curvature_residual,
    pmf_from_field, random_rotation, rho_equivariance_residual, rho_us2, sample_triple,
    us2_retract,
};
use partconn::groups::{cay_inverse, dnat_cay, rotation_about, su3_index::*};
use partconn::linalg::{range_space, singular_values, SubspaceBasis};
use partconn::report::CheckRecord;
use partconn::sampling::{ball, normal_vector, rng, unit3};
use partconn::slices::{abel_involutivity, cayley_slice, s1s1_example, s1s1_r, slice_verify};
use partconn::Tolerances;

fn e(n: usize, i: usize) -> DVector<f64> {
    DVector::from_fn(n, |k, _| f64::from(k == i))
}

fn dv3(v: &Vector3<f64>) -> DVector<f64> {
    DVector::from_column_slice(v.as_slice())
}

fn assert_all_pass(records: &[CheckRecord]) {
    let failed: Vec<String> = records
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{} residual {:.3e} > {:.1e}", c.id, c.residual, c.tolerance))
        .collect();
    assert!(failed.is_empty(), "failed checks:\n{}", failed.join("\n"));
}

fn assert_within(start: Instant, budget: Duration) {
    let t = start.elapsed();
    assert!(t < budget, "took {t:?}, budget {budget:?}");
}

/// Nonzero entries of the curvature table on basis pairs `i < j`.
fn expected_entry(i: usize, j: usize) -> DVector<f64> {
    match (i, j) {
        (S1, X1) => -e(8, D1),
        (S2, X2) => e(8, D1),
        (S1, X2) | (S2, X1) => -e(8, S3),
        _ => DVector::zeros(8),
    }
}

#[test]
fn criterion_01_su3_curvature_table() {
    let start = Instant::now();
    let lr = hxh_on_su3();
    let target = SubspaceBasis::from_vectors(8, &[e(8, D1), e(8, S3)], 1e-12).unwrap();
    let mut entry_errors = Vec::new();
    for theta in [PI / 5.0, FRAC_PI_3, 1.0] {
        let g = vertical_rotation(theta);
        let mut cols = Vec::new();
        for i in 0..8 {
            for j in i + 1..8 {
                let v = curvature_leftright_closed(
                    lr.group_algebra(),
                    lr.inclusion(),
                    &g,
                    &e(8, i),
                    &e(8, j),
                    1e-8,
                )
                .unwrap();
                let err = (&v - expected_entry(i, j)).amax();
                if err > 1e-9 {
                    entry_errors.push(format!("θ={theta:.4} ({i},{j}) error {err:.3e}"));
                }
                cols.push(v);
            }
        }
        let table = DMatrix::from_columns(&cols);
        let sv = singular_values(&table);
        assert!(sv[1] / sv[0] > 1e-10, "rank below 2 at θ={theta}");
        assert!(
            sv[2] / sv[0] < 1e-10,
            "rank above 2 at θ={theta}: σ₃/σ₁ = {:.3e}",
            sv[2] / sv[0]
        );
        let range = range_space(&table, 1e-10).unwrap();
        assert!(
            range.distance_to(&target).unwrap() < 1e-9,
            "range is not span{{δ₁, σ₃}} at θ={theta}"
        );
    }
    assert_within(start, Duration::from_secs(1));
    assert!(
        entry_errors.is_empty(),
        "table entries differ:\n{}",
        entry_errors.join("\n")
    );
}

#[test]
fn criterion_02_closed_form_vs_finite_difference() {
    let start = Instant::now();
    let tol = Tolerances::default();
    let lr = Arc::new(hxh_on_su3());
    let action: Arc<dyn Action> = lr.clone();
    let mut r = rng(2);
    let probes: Vec<ManifoldPoint> = (0..4).map(|_| action.sample_point(&mut r)).collect();
    let nu = tame(&simple_mechanical_mu(action.clone()), &probes).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let g = action.sample_point(&mut r);
        let (xi, om) = (normal_vector(&mut r, 8), normal_vector(&mut r, 8));
        let fd = curvature(&nu, &g, &xi, &om, &tol).unwrap();
        let closed = curvature_leftright_closed(
            lr.group_algebra(),
            lr.inclusion(),
            &g.matrix(),
            &xi,
            &om,
            tol.rank,
        )
        .unwrap();
        worst = worst.max((fd - closed).norm());
    }
    assert_within(start, Duration::from_secs(10));
    assert!(worst < 1e-5, "max discrepancy {worst:.3e}");
}

#[test]
fn criterion_03_docility_dichotomy() {
    let tol = Tolerances::default();
    let origin = ManifoldPoint::from_vec3(&Vector3::zeros());
    let one = mu_q(Arc::new(|_| 1.0), "1").unwrap();
    let doc = docile(&one, &origin, &tol).unwrap();
    assert!(!doc.docile);
    let (u, v, val) = doc.witness.expect("non-docile form reports a witness");
    let cross = Vector3::new(u[0], u[1], u[2]).cross(&Vector3::new(v[0], v[1], v[2]));
    assert!((&val - dv3(&cross) * 2.0).norm() < 1e-6);
    let fd = d_oneform(&one, &origin, &u, &v, tol.fd_step);
    assert!((fd - dv3(&cross) * 2.0).norm() < 1e-6);

    let lin = mu_q(Arc::new(|t| t), "t").unwrap();
    assert!(docile(&lin, &origin, &tol).unwrap().docile);
    assert!(curvature_table(&lin, &origin, &tol).unwrap().norm() < 1e-7);
}

#[test]
fn criterion_04_structure_equation() {
    let tol = Tolerances::default();
    let mut r = rng(4);
    for case in builtin_forms(&mut r).unwrap() {
        let man = case.form.action().manifold();
        let mut worst: f64 = 0.0;
        let mut used = 0;
        while used < 100 {
            let m = case.sample(&mut r);
            if !well_conditioned(&case.form, &m, &tol)
                || !docile(&case.form, &m, &tol).unwrap().docile
            {
                continue;
            }
            used += 1;
            let (u, v) = (
                man.random_tangent(&m, &mut r),
                man.random_tangent(&m, &mut r),
            );
            worst = worst.max(structure_residual(&case.form, &m, &u, &v, &tol).unwrap());
        }
        assert!(
            worst < 1e-5,
            "{}: structure residual {worst:.3e}",
            case.id()
        );
    }
}

#[test]
fn criterion_05_projection_suite() {
    let tol = Tolerances::default();
    for (k, name) in ACTION_NAMES.iter().enumerate() {
        let mut r = rng(50 + k as u64);
        let recs = projection_suite(action_by_name(name).unwrap(), 1000, &mut r, &tol).unwrap();
        let tol_of = |suffix: &str| {
            recs.iter()
                .find(|c| c.id.ends_with(suffix))
                .unwrap()
                .tolerance
        };
        assert_eq!(tol_of(".idempotent"), 1e-9);
        assert_eq!(tol_of(".equivariant"), 1e-8);
        assert_eq!(tol_of(".dimensions"), 0.0);
        assert_all_pass(&recs);
    }
}

#[test]
fn criterion_06_interior_product_and_annihilator() {
    let tol = Tolerances::default();
    let mut r = rng(6);
    for case in builtin_forms(&mut r).unwrap() {
        let a = case.form.action();
        let man = a.manifold();
        let (mut interior, mut annihilator): (f64, f64) = (0.0, 0.0);
        for _ in 0..200 {
            let m = case.sample(&mut r);
            let eta = normal_vector(&mut r, a.algebra().dim());
            let v = man.random_tangent(&m, &mut r);
            interior = interior.max(interior_product_residual(
                &case.form,
                &m,
                &eta,
                &v,
                tol.fd_step,
            ));
            if let Some(p) = a.sample_isotropic_point(&mut r) {
                let iso = isotropy_algebra(a, &p, tol.rank).unwrap();
                let ker = case.form.kernel_at(&p, tol.rank).unwrap();
                if iso.dim() > 0 && ker.dim() > 0 {
                    let zeta = iso.matrix() * normal_vector(&mut r, iso.dim());
                    let u = ker.matrix() * normal_vector(&mut r, ker.dim());
                    annihilator = annihilator.max(annihilator_residual(
                        &case.form,
                        &p,
                        &u,
                        &zeta,
                        tol.fd_step,
                    ));
                }
            }
        }
        assert!(
            interior < 1e-6,
            "{}: interior product residual {interior:.3e}",
            case.id()
        );
        assert!(
            annihilator < 1e-6,
            "{}: annihilator residual {annihilator:.3e}",
            case.id()
        );
    }
}

#[test]
fn criterion_07_cayley_slice() {
    let tol = Tolerances::default();
    let sigma = Vector3::z();
    let g_plus = rotation_about(&sigma, 0.5);
    let (action, form) = s1s1_example(&sigma, &g_plus, &tol).unwrap();
    let slice = cayley_slice(&sigma, &g_plus, 1.0).unwrap();
    let mut r = rng(7);
    let recs = slice_verify(&slice, action.as_ref(), 50, &mut r, &tol).unwrap();
    for cond in [
        ".i-direct-sum",
        ".ii-spanning",
        ".iii-excludes-nonisotropy",
        ".iii-isotropy-invariant",
    ] {
        assert!(recs.iter().any(|c| c.id.ends_with(cond)), "missing {cond}");
    }
    assert_all_pass(&recs);

    for _ in 0..50 {
        let p = ball(&mut r, 2, 0.5);
        let m = slice.point(&p);
        let eta = cay_inverse(&(m.rotation() * g_plus.transpose())).unwrap();
        assert!(eta.dot(&sigma).abs() < 1e-12);
        let eta_p = unit3(&mut r);
        let lhs = (sigma + m.rotation() * sigma).dot(&(dnat_cay(&eta) * eta_p));
        let reduced = lhs * (1.0 + eta.norm_squared() / 4.0) / 2.0;
        assert!((reduced - sigma.dot(&eta_p)).abs() < 1e-8);
    }

    let mu = form.base_form();
    for _ in 0..100 {
        let m = action.sample_point(&mut r);
        let chi = mu.inertia_matrix(&m);
        let rg = s1s1_r(&sigma, &m.rotation());
        for (nu, lambda) in [([1.0, 1.0], 1.0 - rg), ([1.0, -1.0], 1.0 + rg)] {
            let nu = DVector::from_vec(nu.to_vec());
            assert!((&chi * &nu - &nu * lambda).norm() < 1e-10);
        }
        assert!(curvature_table(mu, &m, &tol).unwrap().norm() < 1e-7);
    }
}

#[test]
fn criterion_08_involutivity() {
    let tol = Tolerances::default();
    for (k, name) in ACTION_NAMES.iter().enumerate() {
        let mut r = rng(80 + k as u64);
        let form = simple_mechanical_mu(action_by_name(name).unwrap());
        let a = form.action_arc();
        let case = partconn::cli::FormCase {
            form,
            sampler: Arc::new(move |r| a.sample_point(r)),
        };
        assert_all_pass(&involutivity_suite(&case, 50, &mut r, &tol).unwrap());
    }

    let sigma = Vector3::z();
    let g_plus = rotation_about(&sigma, 0.5);
    let (_, form) = s1s1_example(&sigma, &g_plus, &tol).unwrap();
    let mut r = rng(88);
    let near: Vec<ManifoldPoint> = (0..50)
        .map(|_| {
            let xi = ball(&mut r, 3, 0.3);
            ManifoldPoint::from_rotation(
                &(partconn::groups::rodrigues(&Vector3::new(xi[0], xi[1], xi[2])) * g_plus),
            )
        })
        .collect();
    let recs = abel_involutivity(&form, &near, &mut r, &tol).unwrap();
    assert_eq!(recs.len(), 4);
    assert_all_pass(&recs);
}

#[test]
fn criterion_09_moving_frames() {
    let tol = Tolerances::default();
    let man = Manifold::UnitTangentSphere;
    let mut r = rng(9);
    for _ in 0..1000 {
        let p = man.random_point(&mut r);
        let (m, u) = (p.m(), p.u());
        assert!(rho_equivariance_residual(&random_rotation(&mut r), &m, &u).unwrap() < 1e-10);
        let t = man.random_tangent(&p, &mut r);
        let (dm, du) = (
            Vector3::new(t[0], t[1], t[2]),
            Vector3::new(t[3], t[4], t[5]),
        );
        let fd = dnat_curve(
            &|s| {
                let (m1, u1) = us2_retract(&m, &u, &dm, &du, s);
                rho_us2(&m1, &u1)
            },
            tol.fd_step,
        )
        .unwrap();
        assert!((fd - dnat_rho(&m, &u, &dm, &du)).norm() < 1e-6);
    }
    for theta0 in [0.3, 0.7, 1.2, 2.0, 2.8] {
        for s in [0.0, 0.4, 1.3] {
            assert!(geodesic_curvature_residual(theta0, s, tol.fd_step).unwrap() < 1e-5);
        }
    }

    let pmf = pmf_from_field(eastward_field(), &[Vector3::x()]).unwrap();
    let recs = beta_equivariance_check(&pmf, 200, &mut r, tol.fd_step, 1e-5).unwrap();
    let beta = recs
        .iter()
        .find(|c| c.id == "pmf.beta-equivariance")
        .unwrap();
    assert!(
        beta.passed && beta.tolerance == 1e-5,
        "β residual {:.3e}",
        beta.residual
    );
    assert_all_pass(&recs);
    for _ in 0..1000 {
        let (g, m, _) = sample_triple(&pmf, &mut r);
        let slip: Matrix3<f64> = pmf.slip(&g, &m).unwrap();
        assert!((slip * m - g * m).norm() < 1e-9);
    }
}

#[test]
fn criterion_10_full_suite_deterministic_and_fast() {
    let start = Instant::now();
    let config = ScenarioConfig::new("property-suite-all");
    let a = run_scenario(&config).unwrap().to_json().unwrap();
    assert_within(start, Duration::from_secs(60));
    let b = run_scenario(&config).unwrap().to_json().unwrap();
    assert_eq!(a, b);
}
