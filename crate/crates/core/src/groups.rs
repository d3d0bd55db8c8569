//! Matrix Lie groups SO(3), SU(3) and their subgroups.
//!
//! Algebra elements are real coordinate vectors in a fixed basis of 3×3
//! complex matrices. The inner product is `scale · Re tr(Aᴴ B)`, which is
//! Euclidean on so(3) ≅ ℝ³ (scale ½) and `−tr(AB)` on su(3) (scale 1).

use nalgebra::{DMatrix, DVector, Matrix3, SymmetricEigen, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{block_diag, SubspaceBasis};

pub type CMat3 = Matrix3<Complex64>;

/// Coordinate indices of the su(3) basis returned by [`su3`].
pub mod su3_index {
    pub const D1: usize = 0;
    pub const D2: usize = 1;
    pub const S1: usize = 2;
    pub const S2: usize = 3;
    pub const S3: usize = 4;
    pub const X1: usize = 5;
    pub const X2: usize = 6;
    pub const X3: usize = 7;
    pub const LABELS: [&str; 8] = ["δ1", "δ2", "σ1", "σ2", "σ3", "ξ1", "ξ2", "ξ3"];
}

pub fn hat(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`hat`] on the skew part of `m`.
pub fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

pub fn rodrigues(v: &Vector3<f64>) -> Matrix3<f64> {
    let t = v.norm();
    let k = hat(v);
    let (a, b) = if t < 1e-6 {
        (1.0 - t * t / 6.0, 0.5 - t * t / 24.0)
    } else {
        (t.sin() / t, (1.0 - t.cos()) / (t * t))
    };
    Matrix3::identity() + k * a + k * k * b
}

pub fn rotation_about(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    rodrigues(&(axis.normalize() * angle))
}

/// Cayley transform `(1 − η̂/2)⁻¹ (1 + η̂/2)`.
pub fn cay(eta: &Vector3<f64>) -> Matrix3<f64> {
    let h = hat(eta) * 0.5;
    let i = Matrix3::identity();
    (i - h).try_inverse().expect("1 − η̂/2 is always invertible") * (i + h)
}

/// Inverse Cayley transform `vee(2 (R − 1)(R + 1)⁻¹)`; fails for half turns.
pub fn cay_inverse(r: &Matrix3<f64>) -> Result<Vector3<f64>> {
    let i = Matrix3::identity();
    let inv = (r + i)
        .try_inverse()
        .ok_or_else(|| Error::Domain("Cayley chart undefined at half turns".into()))?;
    Ok(vee(&((r - i) * inv * 2.0)))
}

/// Right-trivialized derivative of [`cay`]: `η′ ↦ vee(d cay(η)[η′] · cay(η)ᵀ)`.
pub fn dnat_cay(eta: &Vector3<f64>) -> Matrix3<f64> {
    (Matrix3::identity() + hat(eta) * 0.5) / (1.0 + eta.norm_squared() / 4.0)
}

pub fn complexify(m: &Matrix3<f64>) -> CMat3 {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn real_part(m: &CMat3) -> Matrix3<f64> {
    m.map(|z| z.re)
}

fn is_real(m: &CMat3) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

/// `exp` of a skew-Hermitian matrix through the Hermitian eigendecomposition.
pub fn exp_skew_hermitian(a: &CMat3) -> CMat3 {
    let i = Complex64::new(0.0, 1.0);
    let h = a * (-i);
    let h = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    let u = eig.eigenvectors;
    let d = CMat3::from_diagonal(&eig.eigenvalues.map(|l| (i * l).exp()));
    u * d * u.adjoint()
}

fn frob(m: &CMat3) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Residual of the unitary and unit-determinant constraints.
pub fn constraint_residual(g: &CMat3) -> f64 {
    frob(&(g.adjoint() * g - CMat3::identity()))
        + (g.determinant() - Complex64::new(1.0, 0.0)).norm()
}

/// A real Lie algebra of 3×3 complex matrices with a fixed basis.
#[derive(Clone, Debug)]
pub struct LieAlgebra {
    name: String,
    basis: Vec<CMat3>,
    gram: DMatrix<f64>,
    gram_inv: DMatrix<f64>,
    trace_scale: f64,
    structure: Vec<Vec<DVector<f64>>>,
    real: bool,
}

impl LieAlgebra {
    /// Builds the algebra; fails if the basis is degenerate or not closed under brackets.
    pub fn new(name: impl Into<String>, basis: Vec<CMat3>, trace_scale: f64) -> Result<Self> {
        let n = basis.len();
        let gram = DMatrix::from_fn(n, n, |i, j| {
            trace_scale * (basis[i].adjoint() * basis[j]).trace().re
        });
        let gram_inv = gram
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Input("degenerate algebra basis".into()))?;
        let real = basis.iter().all(is_real);
        let mut alg = Self {
            name: name.into(),
            basis,
            gram,
            gram_inv,
            trace_scale,
            structure: Vec::new(),
            real,
        };
        let mut structure = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::with_capacity(n);
            for j in 0..n {
                let c = alg.basis[i] * alg.basis[j] - alg.basis[j] * alg.basis[i];
                row.push(alg.coords(&c)?);
            }
            structure.push(row);
        }
        alg.structure = structure;
        Ok(alg)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[CMat3] {
        &self.basis
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn gram_inv(&self) -> &DMatrix<f64> {
        &self.gram_inv
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn matrix_inner(&self, a: &CMat3, b: &CMat3) -> f64 {
        self.trace_scale * (a.adjoint() * b).trace().re
    }

    pub fn inner(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        (a.transpose() * &self.gram * b)[(0, 0)]
    }

    pub fn norm(&self, a: &DVector<f64>) -> f64 {
        self.inner(a, a).max(0.0).sqrt()
    }

    pub fn matrix(&self, coords: &DVector<f64>) -> CMat3 {
        self.basis
            .iter()
            .zip(coords.iter())
            .fold(CMat3::zeros(), |acc, (b, c)| {
                acc + b * Complex64::new(*c, 0.0)
            })
    }

    /// Least-squares coordinates, without a membership check.
    pub fn project_coords(&self, a: &CMat3) -> DVector<f64> {
        let rhs = DVector::from_iterator(
            self.dim(),
            self.basis.iter().map(|b| self.matrix_inner(b, a)),
        );
        &self.gram_inv * rhs
    }

    /// Coordinates of a matrix lying in the algebra.
    pub fn coords(&self, a: &CMat3) -> Result<DVector<f64>> {
        let c = self.project_coords(a);
        let residual = frob(&(a - self.matrix(&c)));
        if residual > 1e-9 * frob(a).max(1.0) {
            return Err(Error::Internal(format!(
                "matrix lies outside {} (residual {:.3e})",
                self.name, residual
            )));
        }
        Ok(c)
    }

    pub fn bracket(&self, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        for i in 0..self.dim() {
            if a[i] == 0.0 {
                continue;
            }
            for j in 0..self.dim() {
                if b[j] != 0.0 {
                    out += &self.structure[i][j] * (a[i] * b[j]);
                }
            }
        }
        out
    }

    /// Matrix of `ad_ξ = [ξ, ·]`.
    pub fn ad_matrix(&self, xi: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            m.set_column(
                j,
                &self.bracket(xi, &DVector::from_fn(n, |i, _| f64::from(i == j))),
            );
        }
        m
    }

    /// Matrix of `Ad_g` for a unitary `g` normalizing the algebra.
    pub fn adjoint(&self, g: &CMat3) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let gi = g.adjoint();
        let mut m = DMatrix::zeros(n, n);
        for (j, b) in self.basis.iter().enumerate() {
            m.set_column(j, &self.coords(&(g * b * gi))?);
        }
        Ok(m)
    }

    pub fn exp(&self, xi: &DVector<f64>) -> CMat3 {
        let a = self.matrix(xi);
        if self.real {
            complexify(&rodrigues(&vee(&real_part(&a))))
        } else {
            exp_skew_hermitian(&a)
        }
    }

    /// Largest Jacobi-identity residual over basis triples.
    pub fn jacobi_residual(&self) -> f64 {
        let n = self.dim();
        let e = |i: usize| DVector::from_fn(n, |k, _| f64::from(k == i));
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let (a, b, c) = (e(i), e(j), e(k));
                    let r = self.bracket(&a, &self.bracket(&b, &c))
                        + self.bracket(&b, &self.bracket(&c, &a))
                        + self.bracket(&c, &self.bracket(&a, &b));
                    worst = worst.max(r.norm());
                }
            }
        }
        worst
    }

    /// Orthogonal projector (in the algebra inner product) onto a coordinate subspace.
    pub fn projector(&self, s: &SubspaceBasis) -> DMatrix<f64> {
        let n = self.dim();
        if s.dim() == 0 {
            return DMatrix::zeros(n, n);
        }
        let b = s.matrix();
        let small = b.transpose() * &self.gram * b;
        let inv = small
            .try_inverse()
            .expect("basis of a subspace has an invertible Gram matrix");
        b * inv * b.transpose() * &self.gram
    }

    pub fn orth_project(&self, s: &SubspaceBasis, xi: &DVector<f64>) -> DVector<f64> {
        self.projector(s) * xi
    }

    /// Coordinates of `sub`'s basis inside `self`, as columns.
    pub fn inclusion_of(&self, sub: &LieAlgebra) -> Result<DMatrix<f64>> {
        let mut m = DMatrix::zeros(self.dim(), sub.dim());
        for (j, b) in sub.basis.iter().enumerate() {
            m.set_column(j, &self.coords(b)?);
        }
        Ok(m)
    }
}

/// so(3) in the basis `hat(e₁), hat(e₂), hat(e₃)`; coordinates are the usual 3-vectors.
pub fn so3() -> LieAlgebra {
    let basis = (0..3)
        .map(|i| complexify(&hat(&Vector3::from_fn(|k, _| f64::from(k == i)))))
        .collect();
    LieAlgebra::new("so(3)", basis, 0.5).expect("so(3) basis is valid")
}

fn unit_entry(k: usize, l: usize, z: Complex64) -> CMat3 {
    let mut m = CMat3::zeros();
    m[(k, l)] = z;
    m
}

/// su(3) in the ordered basis `δ₁, δ₂, σ₁, σ₂, σ₃, ξ₁, ξ₂, ξ₃`.
pub fn su3() -> LieAlgebra {
    LieAlgebra::new("su(3)", su3_matrices(), 1.0).expect("su(3) basis is valid")
}

pub fn su3_matrices() -> Vec<CMat3> {
    let i = Complex64::new(0.0, 1.0);
    let one = Complex64::new(1.0, 0.0);
    let d1 = CMat3::from_diagonal(&Vector3::new(i, -i, Complex64::new(0.0, 0.0)));
    let d2 = CMat3::from_diagonal(&Vector3::new(i, i, -i * 2.0));
    let pairs = [(1, 2), (2, 0), (0, 1)];
    let mut basis = vec![d1, d2];
    for &(k, l) in &pairs {
        basis.push(unit_entry(k, l, i) + unit_entry(l, k, i));
    }
    for &(k, l) in &pairs {
        basis.push(unit_entry(k, l, one) - unit_entry(l, k, one));
    }
    basis
}

/// Diagonal maximal torus of su(3), basis `δ₁, δ₂`.
pub fn su3_torus() -> LieAlgebra {
    let m = su3_matrices();
    LieAlgebra::new("h", vec![m[0], m[1]], 1.0).expect("torus basis is valid")
}

/// Rotations about a fixed unit axis, basis `hat(σ)`.
pub fn circle(axis: &Vector3<f64>) -> LieAlgebra {
    LieAlgebra::new("s1", vec![complexify(&hat(&axis.normalize()))], 0.5)
        .expect("circle basis is valid")
}

/// Element of a product of matrix groups, one 3×3 block per factor.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    factors: Vec<CMat3>,
}

impl GroupElement {
    pub fn new(factors: Vec<CMat3>) -> Self {
        Self { factors }
    }

    pub fn single(g: CMat3) -> Self {
        Self { factors: vec![g] }
    }

    pub fn rotation(r: Matrix3<f64>) -> Self {
        Self::single(complexify(&r))
    }

    pub fn identity(n: usize) -> Self {
        Self {
            factors: vec![CMat3::identity(); n],
        }
    }

    pub fn factors(&self) -> &[CMat3] {
        &self.factors
    }

    pub fn factor(&self, i: usize) -> &CMat3 {
        &self.factors[i]
    }

    pub fn real_factor(&self, i: usize) -> Matrix3<f64> {
        real_part(&self.factors[i])
    }

    pub fn mul(&self, other: &GroupElement) -> GroupElement {
        Self {
            factors: self
                .factors
                .iter()
                .zip(&other.factors)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }

    pub fn inverse(&self) -> GroupElement {
        Self {
            factors: self.factors.iter().map(|a| a.adjoint()).collect(),
        }
    }

    pub fn constraint_residual(&self) -> f64 {
        self.factors
            .iter()
            .map(constraint_residual)
            .fold(0.0, f64::max)
    }

    pub fn distance(&self, other: &GroupElement) -> f64 {
        self.factors
            .iter()
            .zip(&other.factors)
            .map(|(a, b)| frob(&(a - b)))
            .fold(0.0, f64::max)
    }
}

/// Lie algebra of a product group, coordinates concatenated factor by factor.
#[derive(Clone, Debug)]
pub struct ProductAlgebra {
    factors: Vec<LieAlgebra>,
    offsets: Vec<usize>,
    dim: usize,
}

impl ProductAlgebra {
    pub fn new(factors: Vec<LieAlgebra>) -> Self {
        let mut offsets = Vec::with_capacity(factors.len());
        let mut dim = 0;
        for f in &factors {
            offsets.push(dim);
            dim += f.dim();
        }
        Self {
            factors,
            offsets,
            dim,
        }
    }

    pub fn single(alg: LieAlgebra) -> Self {
        Self::new(vec![alg])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn factors(&self) -> &[LieAlgebra] {
        &self.factors
    }

    pub fn split(&self, xi: &DVector<f64>) -> Vec<DVector<f64>> {
        self.factors
            .iter()
            .zip(&self.offsets)
            .map(|(f, &o)| xi.rows(o, f.dim()).into_owned())
            .collect()
    }

    pub fn join(&self, parts: &[DVector<f64>]) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim);
        for (p, &o) in parts.iter().zip(&self.offsets) {
            out.rows_mut(o, p.len()).copy_from(p);
        }
        out
    }

    pub fn gram(&self) -> DMatrix<f64> {
        block_diag(
            &self
                .factors
                .iter()
                .map(|f| f.gram().clone())
                .collect::<Vec<_>>(),
        )
    }

    pub fn gram_inv(&self) -> DMatrix<f64> {
        block_diag(
            &self
                .factors
                .iter()
                .map(|f| f.gram_inv().clone())
                .collect::<Vec<_>>(),
        )
    }

    pub fn inner(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        (a.transpose() * self.gram() * b)[(0, 0)]
    }

    pub fn bracket(&self, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        let parts: Vec<_> = self
            .factors
            .iter()
            .zip(self.split(a).iter().zip(self.split(b)))
            .map(|(f, (x, y))| f.bracket(x, &y))
            .collect();
        self.join(&parts)
    }

    pub fn ad_matrix(&self, xi: &DVector<f64>) -> DMatrix<f64> {
        let blocks: Vec<_> = self
            .factors
            .iter()
            .zip(self.split(xi))
            .map(|(f, x)| f.ad_matrix(&x))
            .collect();
        block_diag(&blocks)
    }

    pub fn adjoint(&self, g: &GroupElement) -> Result<DMatrix<f64>> {
        let blocks = self
            .factors
            .iter()
            .zip(g.factors())
            .map(|(f, gi)| f.adjoint(gi))
            .collect::<Result<Vec<_>>>()?;
        Ok(block_diag(&blocks))
    }

    pub fn exp(&self, xi: &DVector<f64>) -> GroupElement {
        GroupElement::new(
            self.factors
                .iter()
                .zip(self.split(xi))
                .map(|(f, x)| f.exp(&x))
                .collect(),
        )
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement::identity(self.factors.len())
    }

    pub fn projector(&self, s: &SubspaceBasis) -> DMatrix<f64> {
        let n = self.dim;
        if s.dim() == 0 {
            return DMatrix::zeros(n, n);
        }
        let g = self.gram();
        let b = s.matrix();
        let inv = (b.transpose() * &g * b)
            .try_inverse()
            .expect("basis of a subspace has an invertible Gram matrix");
        b * inv * b.transpose() * g
    }

    pub fn jacobi_residual(&self) -> f64 {
        self.factors
            .iter()
            .map(LieAlgebra::jacobi_residual)
            .fold(0.0, f64::max)
    }
}
