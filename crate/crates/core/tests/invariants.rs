//! Property tests for algebraic and geometric invariants.

use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;

use partconn::actions::{action_by_name, ACTION_NAMES};
use partconn::connections::{projection_p_mu, simple_mechanical_mu};
use partconn::frames::{
    eastward_field, pmf_from_field, random_rotation, rho_equivariance_residual, rho_us2,
    sample_triple,
};
use partconn::groups::{cay, cay_inverse, hat, rodrigues, so3, su3};
use partconn::sampling::{normal_vector, rng, unit3};
use partconn::Tolerances;

fn vec3() -> impl Strategy<Value = Vector3<f64>> {
    prop::array::uniform3(-3.0..3.0f64).prop_map(|a| Vector3::new(a[0], a[1], a[2]))
}

fn orthogonality_residual(r: &Matrix3<f64>) -> f64 {
    (r.transpose() * r - Matrix3::identity()).amax() + (r.determinant() - 1.0).abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hat_is_cross_product(v in vec3(), w in vec3()) {
        prop_assert!((hat(&v) * w - v.cross(&w)).norm() < 1e-12);
    }

    #[test]
    fn cayley_is_rotation_and_invertible(eta in vec3()) {
        let r = cay(&eta);
        prop_assert!(orthogonality_residual(&r) < 1e-12);
        let back = cay_inverse(&r).unwrap();
        prop_assert!((back - eta).norm() < 1e-9 * (1.0 + eta.norm_squared()));
    }

    #[test]
    fn rodrigues_is_rotation_fixing_axis(xi in vec3()) {
        let r = rodrigues(&xi);
        prop_assert!(orthogonality_residual(&r) < 1e-12);
        prop_assert!((r * xi - xi).norm() < 1e-12);
    }

    #[test]
    fn su3_bracket_is_matrix_commutator(seed in any::<u64>()) {
        let alg = su3();
        let mut r = rng(seed);
        let (a, b) = (normal_vector(&mut r, 8), normal_vector(&mut r, 8));
        let (ma, mb) = (alg.matrix(&a), alg.matrix(&b));
        let comm = ma * mb - mb * ma;
        prop_assert!((alg.matrix(&alg.bracket(&a, &b)) - comm).norm() < 1e-12);
    }

    #[test]
    fn brackets_are_antisymmetric_and_satisfy_jacobi(seed in any::<u64>()) {
        let mut r = rng(seed);
        for alg in [so3(), su3()] {
            let n = alg.dim();
            let (a, b, c) = (normal_vector(&mut r, n), normal_vector(&mut r, n), normal_vector(&mut r, n));
            prop_assert!((alg.bracket(&a, &b) + alg.bracket(&b, &a)).norm() < 1e-12);
            let jac = alg.bracket(&a, &alg.bracket(&b, &c))
                + alg.bracket(&b, &alg.bracket(&c, &a))
                + alg.bracket(&c, &alg.bracket(&a, &b));
            prop_assert!(jac.norm() < 1e-11);
        }
    }

    #[test]
    fn moving_frame_is_equivariant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = unit3(&mut r);
        let w = unit3(&mut r);
        let u = (w - m * m.dot(&w)).normalize();
        let frame = rho_us2(&m, &u).unwrap();
        prop_assert!(orthogonality_residual(&frame) < 1e-12);
        prop_assert!(rho_equivariance_residual(&random_rotation(&mut r), &m, &u).unwrap() < 1e-10);
    }

    #[test]
    fn mechanical_projection_is_idempotent(seed in any::<u64>(), k in 0..ACTION_NAMES.len()) {
        let tol = Tolerances::default();
        let action = action_by_name(ACTION_NAMES[k]).unwrap();
        let mut r = rng(seed);
        let m = action.sample_point(&mut r);
        let p = projection_p_mu(&simple_mechanical_mu(action.clone()), &m, &tol).unwrap();
        prop_assert!((&p * &p - &p).amax() < 1e-9);
        let xi = normal_vector(&mut r, action.algebra().dim());
        let v = action.generator(&xi, &m);
        prop_assert!((&p * &v - &v).norm() < 1e-8 * (1.0 + v.norm()));
    }

    #[test]
    fn slip_maps_point_like_group_element(seed in any::<u64>()) {
        let pmf = pmf_from_field(eastward_field(), &[Vector3::x()]).unwrap();
        let mut r = rng(seed);
        let (g, m, _) = sample_triple(&pmf, &mut r);
        let slip = pmf.slip(&g, &m).unwrap();
        prop_assert!(orthogonality_residual(&slip) < 1e-10);
        prop_assert!((slip * m - g * m).norm() < 1e-9);
    }
}
