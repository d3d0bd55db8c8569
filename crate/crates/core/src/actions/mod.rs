//! Concrete group actions with generators, isotropy algebras and orbit
//! tangent spaces.

mod manifold;

pub use manifold::{Manifold, ManifoldPoint};

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::groups::{
    circle, complexify, hat, rotation_about, so3, su3, su3_torus, CMat3, GroupElement, LieAlgebra,
    ProductAlgebra,
};
use crate::linalg::{range_space, rank_nullspace, SubspaceBasis};
use crate::sampling::{ball, uniform, unit3, SampleRng};

/// Names accepted by [`action_by_name`].
pub const ACTION_NAMES: [&str; 5] = [
    "so3-on-r3",
    "hxh-on-su3",
    "s1s1-on-so3",
    "so3-on-us2",
    "so3-on-s2",
];

/// A left action of a matrix group on one of the built-in manifolds.
pub trait Action: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    fn manifold(&self) -> &Manifold;
    fn algebra(&self) -> &ProductAlgebra;
    fn apply(&self, g: &GroupElement, m: &ManifoldPoint) -> ManifoldPoint;
    /// `dΦ_g` at `m` in tangent coordinates.
    fn push_forward(&self, g: &GroupElement, m: &ManifoldPoint, v: &DVector<f64>) -> DVector<f64>;
    /// Matrix of `ξ ↦ ξ_M(m)` (tangent coordinates × algebra coordinates).
    fn generator_matrix(&self, m: &ManifoldPoint) -> DMatrix<f64>;
    fn sample_point(&self, rng: &mut SampleRng) -> ManifoldPoint;
    /// A random point with nontrivial isotropy, when the action has any.
    fn sample_isotropic_point(&self, rng: &mut SampleRng) -> Option<ManifoldPoint>;

    fn generator(&self, xi: &DVector<f64>, m: &ManifoldPoint) -> DVector<f64> {
        self.generator_matrix(m) * xi
    }

    fn sample_group(&self, rng: &mut SampleRng) -> GroupElement {
        let alg = self.algebra();
        alg.exp(&ball(rng, alg.dim(), FRAC_PI_2))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum RotationTarget {
    Euclidean,
    Sphere,
    UnitTangent,
}

/// SO(3) acting by rotation on ℝ³, S² or US².
#[derive(Debug)]
pub struct RotationAction {
    name: &'static str,
    target: RotationTarget,
    manifold: Manifold,
    algebra: ProductAlgebra,
}

impl RotationAction {
    fn new(name: &'static str, target: RotationTarget, manifold: Manifold) -> Self {
        Self {
            name,
            target,
            manifold,
            algebra: ProductAlgebra::single(so3()),
        }
    }
}

pub fn so3_on_r3() -> RotationAction {
    RotationAction::new("so3-on-r3", RotationTarget::Euclidean, Manifold::Euclidean3)
}

pub fn so3_on_s2() -> RotationAction {
    RotationAction::new("so3-on-s2", RotationTarget::Sphere, Manifold::Sphere2)
}

pub fn so3_on_us2() -> RotationAction {
    RotationAction::new(
        "so3-on-us2",
        RotationTarget::UnitTangent,
        Manifold::UnitTangentSphere,
    )
}

fn rotate_coords(r: &Matrix3<f64>, v: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(v.len());
    for block in 0..v.len() / 3 {
        let x = Vector3::new(v[3 * block], v[3 * block + 1], v[3 * block + 2]);
        out.rows_mut(3 * block, 3).copy_from(&(r * x));
    }
    out
}

impl Action for RotationAction {
    fn name(&self) -> &str {
        self.name
    }

    fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    fn algebra(&self) -> &ProductAlgebra {
        &self.algebra
    }

    fn apply(&self, g: &GroupElement, m: &ManifoldPoint) -> ManifoldPoint {
        ManifoldPoint::new(rotate_coords(&g.real_factor(0), m.coords()))
    }

    fn push_forward(&self, g: &GroupElement, _m: &ManifoldPoint, v: &DVector<f64>) -> DVector<f64> {
        rotate_coords(&g.real_factor(0), v)
    }

    fn generator_matrix(&self, m: &ManifoldPoint) -> DMatrix<f64> {
        let block = |x: Vector3<f64>| -hat(&x);
        match self.target {
            RotationTarget::Euclidean | RotationTarget::Sphere => {
                DMatrix::from_iterator(3, 3, block(m.m()).iter().cloned())
            }
            RotationTarget::UnitTangent => {
                let mut out = DMatrix::zeros(6, 3);
                out.view_mut((0, 0), (3, 3)).copy_from(&block(m.m()));
                out.view_mut((3, 0), (3, 3)).copy_from(&block(m.u()));
                out
            }
        }
    }

    fn sample_point(&self, rng: &mut SampleRng) -> ManifoldPoint {
        self.manifold.random_point(rng)
    }

    fn sample_isotropic_point(&self, rng: &mut SampleRng) -> Option<ManifoldPoint> {
        match self.target {
            RotationTarget::UnitTangent => None,
            _ => Some(self.manifold.random_point(rng)),
        }
    }
}

#[derive(Clone, Debug)]
enum LeftRightKind {
    Torus,
    Circle(Vector3<f64>),
}

/// `H × H` acting on a group `G ⊇ H` by `(h, k)·g = h g k⁻¹`.
#[derive(Debug)]
pub struct LeftRightAction {
    name: &'static str,
    kind: LeftRightKind,
    manifold: Manifold,
    full: LieAlgebra,
    sub: LieAlgebra,
    algebra: ProductAlgebra,
    inclusion: DMatrix<f64>,
}

impl LeftRightAction {
    fn new(name: &'static str, kind: LeftRightKind, full: LieAlgebra, sub: LieAlgebra) -> Self {
        let inclusion = full
            .inclusion_of(&sub)
            .expect("subalgebra basis lies in the ambient algebra");
        Self {
            name,
            kind,
            manifold: Manifold::Group(full.clone()),
            algebra: ProductAlgebra::new(vec![sub.clone(), sub.clone()]),
            full,
            sub,
            inclusion,
        }
    }

    pub fn group_algebra(&self) -> &LieAlgebra {
        &self.full
    }

    pub fn subalgebra(&self) -> &LieAlgebra {
        &self.sub
    }

    /// Columns: the subalgebra basis in ambient algebra coordinates.
    pub fn inclusion(&self) -> &DMatrix<f64> {
        &self.inclusion
    }

    pub fn axis(&self) -> Option<Vector3<f64>> {
        match self.kind {
            LeftRightKind::Circle(a) => Some(a),
            LeftRightKind::Torus => None,
        }
    }
}

/// The diagonal two-torus `H ⊂ SU(3)` acting on SU(3) from both sides.
pub fn hxh_on_su3() -> LeftRightAction {
    LeftRightAction::new("hxh-on-su3", LeftRightKind::Torus, su3(), su3_torus())
}

/// Rotations about `axis` acting on SO(3) from both sides.
pub fn s1s1_on_so3(axis: &Vector3<f64>) -> LeftRightAction {
    let axis = axis.normalize();
    LeftRightAction::new(
        "s1s1-on-so3",
        LeftRightKind::Circle(axis),
        so3(),
        circle(&axis),
    )
}

/// `R_z(θ)` as an element of SU(3).
pub fn vertical_rotation(theta: f64) -> CMat3 {
    complexify(&rotation_about(&Vector3::z(), theta))
}

impl Action for LeftRightAction {
    fn name(&self) -> &str {
        self.name
    }

    fn manifold(&self) -> &Manifold {
        &self.manifold
    }

    fn algebra(&self) -> &ProductAlgebra {
        &self.algebra
    }

    fn apply(&self, g: &GroupElement, m: &ManifoldPoint) -> ManifoldPoint {
        ManifoldPoint::from_matrix(&(g.factor(0) * m.matrix() * g.factor(1).adjoint()))
    }

    fn push_forward(&self, g: &GroupElement, _m: &ManifoldPoint, v: &DVector<f64>) -> DVector<f64> {
        let h = g.factor(0);
        self.full
            .project_coords(&(h * self.full.matrix(v) * h.adjoint()))
    }

    fn generator_matrix(&self, m: &ManifoldPoint) -> DMatrix<f64> {
        let ad = self
            .full
            .adjoint(&m.matrix())
            .expect("Ad_g preserves the algebra");
        let k = self.sub.dim();
        let mut out = DMatrix::zeros(self.full.dim(), 2 * k);
        out.view_mut((0, 0), (self.full.dim(), k))
            .copy_from(&self.inclusion);
        out.view_mut((0, k), (self.full.dim(), k))
            .copy_from(&(-(ad * &self.inclusion)));
        out
    }

    fn sample_point(&self, rng: &mut SampleRng) -> ManifoldPoint {
        self.manifold.random_point(rng)
    }

    fn sample_isotropic_point(&self, rng: &mut SampleRng) -> Option<ManifoldPoint> {
        match &self.kind {
            LeftRightKind::Torus => {
                let theta = uniform(rng, 0.1, FRAC_PI_2 - 0.1);
                let h = self.sub.exp(&ball(rng, 2, PI));
                let k = self.sub.exp(&ball(rng, 2, PI));
                Some(ManifoldPoint::from_matrix(
                    &(h * vertical_rotation(theta) * k.adjoint()),
                ))
            }
            LeftRightKind::Circle(axis) => {
                let angle = uniform(rng, -PI, PI);
                let base = rotation_about(axis, angle);
                let flip = if rng_bool(rng) {
                    let perp = axis.cross(&unit3(rng)).normalize();
                    rotation_about(&perp, PI)
                } else {
                    Matrix3::identity()
                };
                Some(ManifoldPoint::from_rotation(&(base * flip)))
            }
        }
    }
}

fn rng_bool(rng: &mut SampleRng) -> bool {
    uniform(rng, 0.0, 1.0) < 0.5
}

/// Looks up a built-in action; the circle action uses the axis `e₃`.
pub fn action_by_name(name: &str) -> Result<Arc<dyn Action>> {
    Ok(match name {
        "so3-on-r3" => Arc::new(so3_on_r3()),
        "so3-on-s2" => Arc::new(so3_on_s2()),
        "so3-on-us2" => Arc::new(so3_on_us2()),
        "hxh-on-su3" => Arc::new(hxh_on_su3()),
        "s1s1-on-so3" => Arc::new(s1s1_on_so3(&Vector3::z())),
        other => return Err(Error::UnknownAction(other.to_string())),
    })
}

/// `𝔤_m = ker(ξ ↦ ξ_M(m))`.
pub fn isotropy_algebra(a: &dyn Action, m: &ManifoldPoint, tol_rank: f64) -> Result<SubspaceBasis> {
    Ok(rank_nullspace(&a.generator_matrix(m), tol_rank)?.1)
}

/// `T_m(G·m)` in tangent coordinates.
pub fn orbit_tangent(a: &dyn Action, m: &ManifoldPoint, tol_rank: f64) -> Result<SubspaceBasis> {
    range_space(&a.generator_matrix(m), tol_rank)
}

/// Compares the isotropy dimension at `m` with retracted points at `probe_radius`.
pub fn is_regular(
    a: &dyn Action,
    m: &ManifoldPoint,
    probe_radius: f64,
    samples: usize,
    tol_rank: f64,
    rng: &mut SampleRng,
) -> Result<bool> {
    let man = a.manifold();
    let d0 = isotropy_algebra(a, m, tol_rank)?.dim();
    for _ in 0..samples {
        let v = man.random_tangent(m, rng);
        let v = &v * (probe_radius / v.norm().max(f64::MIN_POSITIVE));
        let p = man.retract(m, &v);
        if isotropy_algebra(a, &p, tol_rank)?.dim() != d0 {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::su3_index::*;
    use crate::linalg::central_difference;
    use crate::sampling::{normal_vector, rng};

    fn e(n: usize, i: usize) -> DVector<f64> {
        DVector::from_fn(n, |k, _| f64::from(k == i))
    }

    fn all() -> Vec<Arc<dyn Action>> {
        ACTION_NAMES
            .iter()
            .map(|n| action_by_name(n).unwrap())
            .collect()
    }

    #[test]
    fn rotation_generator_example() {
        let a = so3_on_r3();
        let m = ManifoldPoint::from_vec3(&Vector3::x());
        assert!((a.generator(&e(3, 2), &m) - e(3, 1)).norm() < 1e-15);
        assert_eq!(a.generator(&DVector::zeros(3), &m).norm(), 0.0);
    }

    #[test]
    fn left_right_generator_at_identity() {
        let a = s1s1_on_so3(&Vector3::z());
        let g = ManifoldPoint::from_rotation(&Matrix3::identity());
        let v = a.generator(&DVector::from_vec(vec![0.7, 0.2]), &g);
        assert!((v - e(3, 2) * 0.5).norm() < 1e-15);
    }

    #[test]
    fn generators_match_differenced_action() {
        let mut r = rng(11);
        for a in all() {
            let man = a.manifold();
            let m = a.sample_point(&mut r);
            let xi = normal_vector(&mut r, a.algebra().dim());
            let f = |t: &DVector<f64>| {
                Ok(a.apply(&a.algebra().exp(&(&xi * t[0])), &m)
                    .coords()
                    .clone())
            };
            let w = central_difference(f, &DVector::zeros(1), 1e-5)
                .unwrap()
                .column(0)
                .into_owned();
            let fd = man.velocity_to_tangent(&m, &w);
            assert!((fd - a.generator(&xi, &m)).norm() < 1e-6, "{}", a.name());
        }
    }

    #[test]
    fn isotropy_examples() {
        let a = so3_on_r3();
        let zero = ManifoldPoint::from_vec3(&Vector3::zeros());
        assert_eq!(isotropy_algebra(&a, &zero, 1e-8).unwrap().dim(), 3);
        assert_eq!(orbit_tangent(&a, &zero, 1e-8).unwrap().dim(), 0);
        let e3 = ManifoldPoint::from_vec3(&Vector3::z());
        let iso = isotropy_algebra(&a, &e3, 1e-8).unwrap();
        assert_eq!(iso.dim(), 1);
        assert!(iso.contains(&e(3, 2), 1e-12).unwrap());
        let orb = orbit_tangent(&a, &e3, 1e-8).unwrap();
        assert_eq!(orb.dim(), 2);
        assert!(orb.contains(&e(3, 0), 1e-12).unwrap() && orb.contains(&e(3, 1), 1e-12).unwrap());
    }

    #[test]
    fn torus_isotropy_at_vertical_rotation() {
        let a = hxh_on_su3();
        let g = ManifoldPoint::from_matrix(&vertical_rotation(PI / 5.0));
        let iso = isotropy_algebra(&a, &g, 1e-8).unwrap();
        assert_eq!(iso.dim(), 1);
        assert!(iso
            .contains(&DVector::from_vec(vec![0.0, 1.0, 0.0, 1.0]), 1e-10)
            .unwrap());
        let orb = orbit_tangent(&a, &g, 1e-8).unwrap();
        assert_eq!(orb.dim(), 3);
        for i in [D1, D2, S3] {
            assert!(orb.contains(&e(8, i), 1e-10).unwrap());
        }
    }

    #[test]
    fn regularity_examples() {
        let mut r = rng(5);
        let a = so3_on_r3();
        assert!(is_regular(
            &a,
            &ManifoldPoint::from_vec3(&Vector3::x()),
            1e-2,
            20,
            1e-8,
            &mut r
        )
        .unwrap());
        assert!(!is_regular(
            &a,
            &ManifoldPoint::from_vec3(&Vector3::zeros()),
            1e-2,
            20,
            1e-8,
            &mut r
        )
        .unwrap());
        let c = s1s1_on_so3(&Vector3::z());
        let gp = ManifoldPoint::from_rotation(&rotation_about(&Vector3::z(), 0.8));
        assert!(!is_regular(&c, &gp, 1e-2, 20, 1e-8, &mut r).unwrap());
    }

    #[test]
    fn unknown_action_is_rejected() {
        assert!(matches!(
            action_by_name("so4-on-r4"),
            Err(Error::UnknownAction(_))
        ));
    }
}
