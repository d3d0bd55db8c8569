use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::groups::{constraint_residual, CMat3, LieAlgebra};
use crate::sampling::{ball, normal_vector, unit3, SampleRng};

/// A point stored in ambient coordinates.
///
/// ℝ³ and S² use 3 coordinates, US² stores `(m, u)` as 6, and group
/// manifolds store the real then imaginary parts of the 3×3 matrix row by row.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldPoint(DVector<f64>);

impl ManifoldPoint {
    pub fn new(coords: DVector<f64>) -> Self {
        Self(coords)
    }

    pub fn from_vec3(v: &Vector3<f64>) -> Self {
        Self(DVector::from_column_slice(v.as_slice()))
    }

    pub fn from_pair(m: &Vector3<f64>, u: &Vector3<f64>) -> Self {
        Self(DVector::from_iterator(6, m.iter().chain(u.iter()).cloned()))
    }

    pub fn from_matrix(g: &CMat3) -> Self {
        let mut c = DVector::zeros(18);
        for r in 0..3 {
            for s in 0..3 {
                c[3 * r + s] = g[(r, s)].re;
                c[9 + 3 * r + s] = g[(r, s)].im;
            }
        }
        Self(c)
    }

    pub fn from_rotation(r: &Matrix3<f64>) -> Self {
        Self::from_matrix(&crate::groups::complexify(r))
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn vec3(&self) -> Vector3<f64> {
        Vector3::new(self.0[0], self.0[1], self.0[2])
    }

    pub fn m(&self) -> Vector3<f64> {
        self.vec3()
    }

    pub fn u(&self) -> Vector3<f64> {
        Vector3::new(self.0[3], self.0[4], self.0[5])
    }

    pub fn matrix(&self) -> CMat3 {
        CMat3::from_fn(|r, s| Complex64::new(self.0[3 * r + s], self.0[9 + 3 * r + s]))
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|r, s| self.0[3 * r + s])
    }

    pub fn distance(&self, other: &ManifoldPoint) -> f64 {
        (&self.0 - &other.0).norm()
    }
}

/// The concrete manifolds the built-in actions live on.
///
/// Tangent vectors are coordinate vectors: ambient velocities on the embedded
/// manifolds and right-trivialized algebra coordinates (`v = ξ̂ g`) on groups.
#[derive(Clone, Debug)]
pub enum Manifold {
    Euclidean3,
    Sphere2,
    UnitTangentSphere,
    Group(LieAlgebra),
}

fn sphere_basis(m: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let k = m.iamin();
    let mut a = Vector3::zeros();
    a[k] = 1.0;
    let t1 = (a - m * m[k]).normalize();
    (t1, m.cross(&t1))
}

impl Manifold {
    pub fn name(&self) -> &str {
        match self {
            Manifold::Euclidean3 => "R3",
            Manifold::Sphere2 => "S2",
            Manifold::UnitTangentSphere => "US2",
            Manifold::Group(alg) => alg.name(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Manifold::Euclidean3 => 3,
            Manifold::Sphere2 => 2,
            Manifold::UnitTangentSphere => 3,
            Manifold::Group(alg) => alg.dim(),
        }
    }

    /// Length of a tangent coordinate vector.
    pub fn coord_dim(&self) -> usize {
        match self {
            Manifold::Euclidean3 | Manifold::Sphere2 => 3,
            Manifold::UnitTangentSphere => 6,
            Manifold::Group(alg) => alg.dim(),
        }
    }

    pub fn constraint_residual(&self, p: &ManifoldPoint) -> f64 {
        match self {
            Manifold::Euclidean3 => 0.0,
            Manifold::Sphere2 => (p.m().norm() - 1.0).abs(),
            Manifold::UnitTangentSphere => {
                let (m, u) = (p.m(), p.u());
                (m.norm() - 1.0).abs() + (u.norm() - 1.0).abs() + m.dot(&u).abs()
            }
            Manifold::Group(alg) => {
                let g = p.matrix();
                let realness = if alg.is_real() {
                    g.iter().map(|z| z.im.abs()).sum::<f64>()
                } else {
                    0.0
                };
                constraint_residual(&g) + realness
            }
        }
    }

    pub fn check_point(&self, p: &ManifoldPoint) -> Result<()> {
        let expected = match self {
            Manifold::Euclidean3 | Manifold::Sphere2 => 3,
            Manifold::UnitTangentSphere => 6,
            Manifold::Group(_) => 18,
        };
        if p.coords().len() != expected || p.coords().iter().any(|x| !x.is_finite()) {
            return Err(Error::Input(format!("malformed point for {}", self.name())));
        }
        let r = self.constraint_residual(p);
        if r > 1e-10 {
            return Err(Error::Domain(format!(
                "point violates the constraints of {} (residual {:.3e})",
                self.name(),
                r
            )));
        }
        Ok(())
    }

    /// Residual of the linearized constraints for a tangent coordinate vector.
    pub fn tangent_residual(&self, p: &ManifoldPoint, v: &DVector<f64>) -> f64 {
        match self {
            Manifold::Euclidean3 | Manifold::Group(_) => 0.0,
            Manifold::Sphere2 => p.m().dot(&Vector3::new(v[0], v[1], v[2])).abs(),
            Manifold::UnitTangentSphere => {
                let (m, u) = (p.m(), p.u());
                let dm = Vector3::new(v[0], v[1], v[2]);
                let du = Vector3::new(v[3], v[4], v[5]);
                m.dot(&dm).abs() + u.dot(&du).abs() + (dm.dot(&u) + m.dot(&du)).abs()
            }
        }
    }

    /// Orthonormal basis of the tangent space in coordinates, as columns.
    pub fn tangent_basis(&self, p: &ManifoldPoint) -> DMatrix<f64> {
        match self {
            Manifold::Euclidean3 => DMatrix::identity(3, 3),
            Manifold::Group(alg) => DMatrix::identity(alg.dim(), alg.dim()),
            Manifold::Sphere2 => {
                let (t1, t2) = sphere_basis(&p.m().normalize());
                DMatrix::from_columns(&[
                    DVector::from_column_slice(t1.as_slice()),
                    DVector::from_column_slice(t2.as_slice()),
                ])
            }
            Manifold::UnitTangentSphere => {
                let (m, u) = (p.m(), p.u());
                let w = m.cross(&u);
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let col = |a: Vector3<f64>, b: Vector3<f64>| {
                    DVector::from_iterator(6, a.iter().chain(b.iter()).cloned())
                };
                DMatrix::from_columns(&[
                    col(Vector3::zeros(), w),
                    col(-w, Vector3::zeros()),
                    col(u * s, -m * s),
                ])
            }
        }
    }

    /// Euclidean orthogonal projector onto the tangent space.
    pub fn tangent_projector(&self, p: &ManifoldPoint) -> DMatrix<f64> {
        let b = self.tangent_basis(p);
        &b * b.transpose()
    }

    /// Retraction `R_p(v)`: a point with `R_p(0) = p` and `d/dt R_p(tv)|₀ = v`.
    pub fn retract(&self, p: &ManifoldPoint, v: &DVector<f64>) -> ManifoldPoint {
        match self {
            Manifold::Euclidean3 => ManifoldPoint(p.coords() + v),
            Manifold::Sphere2 => {
                let m = p.m() + Vector3::new(v[0], v[1], v[2]);
                ManifoldPoint::from_vec3(&m.normalize())
            }
            Manifold::UnitTangentSphere => {
                let m = (p.m() + Vector3::new(v[0], v[1], v[2])).normalize();
                let u = p.u() + Vector3::new(v[3], v[4], v[5]);
                let u = (u - m * m.dot(&u)).normalize();
                ManifoldPoint::from_pair(&m, &u)
            }
            Manifold::Group(alg) => ManifoldPoint::from_matrix(&(alg.exp(v) * p.matrix())),
        }
    }

    /// Coordinate expression of the bracket of the frame fields extending `u`, `v`.
    ///
    /// Zero for ambient coordinates; for right-invariant fields on a group
    /// `[X_u, X_v] = −X_[u,v]`.
    pub fn frame_bracket(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        match self {
            Manifold::Group(alg) => -alg.bracket(u, v),
            _ => DVector::zeros(u.len()),
        }
    }

    /// Riemannian metric in tangent coordinates.
    pub fn metric(&self) -> DMatrix<f64> {
        match self {
            Manifold::Group(alg) => alg.gram().clone(),
            _ => DMatrix::identity(self.coord_dim(), self.coord_dim()),
        }
    }

    /// Converts an ambient velocity (derivative of stored coordinates) to tangent coordinates.
    pub fn velocity_to_tangent(&self, p: &ManifoldPoint, w: &DVector<f64>) -> DVector<f64> {
        match self {
            Manifold::Group(alg) => {
                let dg = ManifoldPoint(w.clone()).matrix();
                alg.project_coords(&(dg * p.matrix().adjoint()))
            }
            _ => w.clone(),
        }
    }

    pub fn random_point(&self, rng: &mut SampleRng) -> ManifoldPoint {
        match self {
            Manifold::Euclidean3 => ManifoldPoint(normal_vector(rng, 3)),
            Manifold::Sphere2 => ManifoldPoint::from_vec3(&unit3(rng)),
            Manifold::UnitTangentSphere => {
                let m = unit3(rng);
                let (t1, t2) = sphere_basis(&m);
                let a = crate::sampling::uniform(rng, 0.0, std::f64::consts::TAU);
                ManifoldPoint::from_pair(&m, &(t1 * a.cos() + t2 * a.sin()))
            }
            Manifold::Group(alg) => {
                let xi = ball(rng, alg.dim(), std::f64::consts::FRAC_PI_2);
                ManifoldPoint::from_matrix(&alg.exp(&xi))
            }
        }
    }

    /// Random tangent vector with standard normal coefficients in the tangent basis.
    pub fn random_tangent(&self, p: &ManifoldPoint, rng: &mut SampleRng) -> DVector<f64> {
        let b = self.tangent_basis(p);
        &b * normal_vector(rng, b.ncols())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{so3, su3};
    use crate::sampling::rng;

    fn manifolds() -> Vec<Manifold> {
        vec![
            Manifold::Euclidean3,
            Manifold::Sphere2,
            Manifold::UnitTangentSphere,
            Manifold::Group(so3()),
            Manifold::Group(su3()),
        ]
    }

    #[test]
    fn retraction_has_unit_velocity() {
        let mut r = rng(3);
        for man in manifolds() {
            let p = man.random_point(&mut r);
            man.check_point(&p).unwrap();
            let v = man.random_tangent(&p, &mut r);
            assert!(man.tangent_residual(&p, &v) < 1e-12);
            assert!(man.retract(&p, &(&v * 0.0)).distance(&p) < 1e-14);
            let h = 1e-6;
            let w = (man.retract(&p, &(&v * h)).coords() - man.retract(&p, &(&v * -h)).coords())
                / (2.0 * h);
            let back = man.velocity_to_tangent(&p, &w);
            assert!(
                (back - &v).norm() < 1e-6 * v.norm().max(1.0),
                "{}",
                man.name()
            );
        }
    }

    #[test]
    fn tangent_basis_is_orthonormal_and_tangent() {
        let mut r = rng(4);
        for man in manifolds() {
            let p = man.random_point(&mut r);
            let b = man.tangent_basis(&p);
            assert_eq!(b.ncols(), man.dim());
            assert!((b.transpose() * &b - DMatrix::identity(man.dim(), man.dim())).norm() < 1e-12);
            for j in 0..b.ncols() {
                assert!(man.tangent_residual(&p, &b.column(j).into_owned()) < 1e-12);
            }
        }
    }
}
