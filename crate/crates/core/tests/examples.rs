//! Worked examples checked against independently computed values.

use nalgebra::{DVector, Matrix3, Vector3};
use num_complex::Complex64;

use partconn::actions::{action_by_name, isotropy_algebra, ManifoldPoint};
use partconn::groups::{cay, su3};
use partconn::sampling::{normal_vector, rng};
use partconn::Tolerances;

type CMat3 = nalgebra::Matrix3<Complex64>;

fn e(n: usize, i: usize) -> DVector<f64> {
    DVector::from_fn(n, |k, _| f64::from(k == i))
}

/// `i(E_kl + E_lk)`, built entry by entry.
fn sym(k: usize, l: usize) -> CMat3 {
    let mut m = CMat3::zeros();
    m[(k, l)] = Complex64::i();
    m[(l, k)] = Complex64::i();
    m
}

/// `E_kl − E_lk`, built entry by entry.
fn skew(k: usize, l: usize) -> CMat3 {
    let mut m = CMat3::zeros();
    m[(k, l)] = Complex64::new(1.0, 0.0);
    m[(l, k)] = Complex64::new(-1.0, 0.0);
    m
}

#[test]
fn su3_brackets_of_off_diagonal_generators() {
    let alg = su3();
    let (s1, s2, x3) = (sym(1, 2), sym(2, 0), skew(0, 1));
    // By hand: σ₁σ₂ = −E₁₀ and σ₂σ₁ = −E₀₁, so [σ₁, σ₂] = E₀₁ − E₁₀ = ξ₃.
    let comm = s1 * s2 - s2 * s1;
    assert!(
        (alg.matrix(&e(8, 2)) - s1).norm()
            + (alg.matrix(&e(8, 3)) - s2).norm()
            + (alg.matrix(&e(8, 7)) - x3).norm()
            < 1e-15
    );
    assert!((comm - x3).norm() < 1e-15);
    let coords = alg.bracket(&e(8, 2), &e(8, 3));
    assert!((coords - e(8, 7)).norm() < 1e-12);
}

#[test]
fn rotation_generators_on_euclidean_space() {
    let a = action_by_name("so3-on-r3").unwrap();
    let mut r = rng(11);
    for _ in 0..20 {
        let x = normal_vector(&mut r, 3);
        let xi = normal_vector(&mut r, 3);
        let m = ManifoldPoint::new(x.clone());
        let expected = Vector3::new(xi[0], xi[1], xi[2]).cross(&Vector3::new(x[0], x[1], x[2]));
        let got = a.generator(&xi, &m);
        assert!((got - DVector::from_column_slice(expected.as_slice())).norm() < 1e-12);
    }
}

#[test]
fn isotropy_dimensions_on_euclidean_space() {
    let a = action_by_name("so3-on-r3").unwrap();
    let tol = Tolerances::default().rank;
    let at = |v: [f64; 3]| {
        isotropy_algebra(
            a.as_ref(),
            &ManifoldPoint::new(DVector::from_row_slice(&v)),
            tol,
        )
        .unwrap()
    };
    assert_eq!(at([0.0, 0.0, 0.0]).dim(), 3);
    assert_eq!(at([1.0, 0.0, 0.0]).dim(), 1);
    assert_eq!(at([0.0, 2.0, -1.0]).dim(), 1);
}

#[test]
fn cayley_of_axis_vector_is_rotation_by_twice_arctan_half() {
    // cay(t·e₃) rotates by angle 2·atan(t/2) about e₃.
    for t in [0.1, 0.7, 2.0, -3.5] {
        let angle = 2.0 * (t / 2.0f64).atan();
        let (c, s) = (angle.cos(), angle.sin());
        let expected = Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0);
        assert!((cay(&Vector3::new(0.0, 0.0, t)) - expected).amax() < 1e-14);
    }
}
