//! Small dense linear algebra and finite-difference kernels.
//!
//! Every coordinate representation in the crate is a [`DMatrix<f64>`] or a
//! [`DVector<f64>`]; complex matrices only appear inside the SU(3) group code.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::ops::{Mul, Sub};

use crate::error::{Error, Result};

/// Numerical tolerances shared by every module.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative singular-value threshold for rank decisions.
    pub rank: f64,
    /// Equality tolerance for closed-form identities.
    pub eq: f64,
    /// Tolerance for identities that stack two finite differences.
    pub structure: f64,
    /// Central-difference step.
    pub fd_step: f64,
    /// Step for nested derivatives (brackets of fields built from forms).
    pub fd_step_nested: f64,
    /// Relative tolerance for range membership (consistency and docility).
    pub consist: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank: 1e-8,
            eq: 1e-8,
            structure: 1e-5,
            fd_step: 1e-5,
            fd_step_nested: 1e-4,
            consist: 1e-7,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.rank,
            self.eq,
            self.structure,
            self.fd_step,
            self.fd_step_nested,
            self.consist,
        ];
        if all.iter().all(|t| t.is_finite() && *t > 0.0) {
            Ok(())
        } else {
            Err(Error::Input(
                "tolerances must be positive and finite".into(),
            ))
        }
    }
}

/// Orthonormal basis (Euclidean in coordinates) of a linear subspace.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceBasis {
    ambient_dim: usize,
    vectors: DMatrix<f64>,
}

impl SubspaceBasis {
    pub fn zero(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            vectors: DMatrix::zeros(ambient_dim, 0),
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            vectors: DMatrix::identity(ambient_dim, ambient_dim),
        }
    }

    /// Basis for the column span of `spanning`.
    pub fn from_spanning(spanning: &DMatrix<f64>, tol_rank: f64) -> Result<Self> {
        range_space(spanning, tol_rank)
    }

    pub fn from_vectors(ambient_dim: usize, vs: &[DVector<f64>], tol_rank: f64) -> Result<Self> {
        let mut m = DMatrix::zeros(ambient_dim, vs.len());
        for (j, v) in vs.iter().enumerate() {
            if v.len() != ambient_dim {
                return Err(Error::Input(format!(
                    "vector of length {} in ambient dimension {}",
                    v.len(),
                    ambient_dim
                )));
            }
            m.set_column(j, v);
        }
        Self::from_spanning(&m, tol_rank)
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// Orthonormal basis vectors as columns.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> DVector<f64> {
        self.vectors.column(i).into_owned()
    }

    /// Euclidean orthogonal projector onto the subspace.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.vectors * self.vectors.transpose()
    }

    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.vectors * (self.vectors.transpose() * v)
    }

    pub fn distance(&self, v: &DVector<f64>) -> Result<f64> {
        self.check_len(v.len())?;
        Ok((v - self.project(v)).norm())
    }

    /// True iff the distance from `v` to the span is at most `tol·max(1, ‖v‖)`.
    pub fn contains(&self, v: &DVector<f64>, tol: f64) -> Result<bool> {
        Ok(self.distance(v)? <= tol * v.norm().max(1.0))
    }

    /// Largest distance of a basis vector of `other` from this subspace.
    pub fn containment_residual(&self, other: &SubspaceBasis) -> Result<f64> {
        self.check_len(other.ambient_dim)?;
        let mut worst: f64 = 0.0;
        for j in 0..other.dim() {
            worst = worst.max(self.distance(&other.vector(j))?);
        }
        Ok(worst)
    }

    pub fn contains_subspace(&self, other: &SubspaceBasis, tol: f64) -> Result<bool> {
        Ok(self.containment_residual(other)? <= tol)
    }

    /// Largest principal-angle sine between equal-dimensional subspaces; 1 if
    /// the dimensions differ.
    pub fn distance_to(&self, other: &SubspaceBasis) -> Result<f64> {
        if self.dim() != other.dim() {
            return Ok(1.0);
        }
        Ok(self
            .containment_residual(other)?
            .max(other.containment_residual(self)?))
    }

    pub fn sum(&self, other: &SubspaceBasis, tol_rank: f64) -> Result<SubspaceBasis> {
        self.check_len(other.ambient_dim)?;
        let mut m = DMatrix::zeros(self.ambient_dim, self.dim() + other.dim());
        m.view_mut((0, 0), (self.ambient_dim, self.dim()))
            .copy_from(&self.vectors);
        m.view_mut((0, self.dim()), (self.ambient_dim, other.dim()))
            .copy_from(&other.vectors);
        Self::from_spanning(&m, tol_rank)
    }

    pub fn intersection_dim(&self, other: &SubspaceBasis, tol_rank: f64) -> Result<usize> {
        let s = self.sum(other, tol_rank)?;
        Ok(self.dim() + other.dim() - s.dim())
    }

    pub fn complement(&self, tol_rank: f64) -> Result<SubspaceBasis> {
        let (_, k) = rank_nullspace(&self.vectors.transpose(), tol_rank)?;
        Ok(k)
    }

    /// Image of the subspace under a linear map.
    pub fn image(&self, map: &DMatrix<f64>, tol_rank: f64) -> Result<SubspaceBasis> {
        if map.ncols() != self.ambient_dim {
            return Err(Error::Input("map/subspace dimension mismatch".into()));
        }
        let img = map * &self.vectors;
        if img.ncols() == 0 {
            return Ok(SubspaceBasis::zero(map.nrows()));
        }
        Self::from_spanning(&img, tol_rank)
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n == self.ambient_dim {
            Ok(())
        } else {
            Err(Error::Input(format!(
                "dimension mismatch: {} vs ambient {}",
                n, self.ambient_dim
            )))
        }
    }
}

fn check_finite(a: &DMatrix<f64>) -> Result<()> {
    if a.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Input("matrix has non-finite entries".into()))
    }
}

fn threshold(sv: &DVector<f64>, tol_rank: f64) -> f64 {
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    tol_rank * smax
}

/// Spectral norm.
pub fn norm2(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    a.singular_values().iter().cloned().fold(0.0, f64::max)
}

pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = a.singular_values().iter().cloned().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// Numerical rank and kernel basis.
pub fn rank_nullspace(a: &DMatrix<f64>, tol_rank: f64) -> Result<(usize, SubspaceBasis)> {
    check_finite(a)?;
    if tol_rank.is_nan() || tol_rank <= 0.0 {
        return Err(Error::Input("tol_rank must be positive".into()));
    }
    let (m, n) = a.shape();
    if n == 0 {
        return Ok((0, SubspaceBasis::zero(0)));
    }
    if m == 0 {
        return Ok((0, SubspaceBasis::full(n)));
    }
    let padded = if m < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Internal("SVD did not return V".into()))?;
    let thr = threshold(&svd.singular_values, tol_rank);
    let mut kernel = Vec::new();
    let mut rank = 0;
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s > thr && *s > 0.0 {
            rank += 1;
        } else {
            kernel.push(v_t.row(i).transpose());
        }
    }
    let mut k = DMatrix::zeros(n, kernel.len());
    for (j, v) in kernel.iter().enumerate() {
        k.set_column(j, v);
    }
    Ok((
        rank,
        SubspaceBasis {
            ambient_dim: n,
            vectors: k,
        },
    ))
}

pub fn rank(a: &DMatrix<f64>, tol_rank: f64) -> Result<usize> {
    Ok(rank_nullspace(a, tol_rank)?.0)
}

/// Orthonormal basis of the column space.
pub fn range_space(a: &DMatrix<f64>, tol_rank: f64) -> Result<SubspaceBasis> {
    check_finite(a)?;
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Ok(SubspaceBasis::zero(m));
    }
    let svd = a.clone().svd(true, false);
    let u = svd
        .u
        .ok_or_else(|| Error::Internal("SVD did not return U".into()))?;
    let thr = threshold(&svd.singular_values, tol_rank);
    let cols: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| **s > thr && **s > 0.0)
        .map(|(i, _)| i)
        .collect();
    let mut b = DMatrix::zeros(m, cols.len());
    for (j, &i) in cols.iter().enumerate() {
        b.set_column(j, &u.column(i));
    }
    Ok(SubspaceBasis {
        ambient_dim: m,
        vectors: b,
    })
}

/// Moore–Penrose pseudo-inverse with relative singular-value cutoff.
pub fn pseudo_inverse(a: &DMatrix<f64>, tol_rank: f64) -> Result<DMatrix<f64>> {
    check_finite(a)?;
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Ok(DMatrix::zeros(n, m));
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested V");
    let thr = threshold(&svd.singular_values, tol_rank);
    let mut out = DMatrix::zeros(n, m);
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s > thr && *s > 0.0 {
            out += v_t.row(i).transpose() * u.column(i).transpose() / *s;
        }
    }
    Ok(out)
}

/// Minimum-norm solution of `A x = b`, rejecting `b` outside the numerical range.
pub fn solve_consistent(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    tol_rank: f64,
    tol_consist: f64,
) -> Result<DVector<f64>> {
    if a.nrows() != b.len() {
        return Err(Error::Input(format!(
            "rhs of length {} for {} rows",
            b.len(),
            a.nrows()
        )));
    }
    if b.iter().any(|x| !x.is_finite()) {
        return Err(Error::Input("rhs has non-finite entries".into()));
    }
    let x = pseudo_inverse(a, tol_rank)? * b;
    let residual = (a * &x - b).norm();
    let bound = tol_consist * (norm2(a) * x.norm()).max(b.norm());
    if residual > bound {
        return Err(Error::Inconsistent { residual });
    }
    Ok(x)
}

pub fn subspace_contains(s: &SubspaceBasis, v: &DVector<f64>, tol: f64) -> Result<bool> {
    s.contains(v, tol)
}

/// Jacobian by central differences, column j = (f(x + h eⱼ) − f(x − h eⱼ)) / 2h.
pub fn central_difference<F>(mut f: F, x: &DVector<f64>, h: f64) -> Result<DMatrix<f64>>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    if h.is_nan() || h <= 0.0 {
        return Err(Error::Input(
            "finite-difference step must be positive".into(),
        ));
    }
    let n = x.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += h;
        xm[j] -= h;
        cols.push((f(&xp)? - f(&xm)?) / (2.0 * h));
    }
    let rows = cols.first().map_or(0, |c| c.len());
    let mut jac = DMatrix::zeros(rows, n);
    for (j, c) in cols.iter().enumerate() {
        if c.len() != rows {
            return Err(Error::Input("map changed output dimension".into()));
        }
        jac.set_column(j, c);
    }
    Ok(jac)
}

/// Derivative at 0 of a curve `t ↦ f(t)` by a symmetric difference.
pub fn curve_derivative<T, F>(f: F, h: f64) -> Result<T>
where
    F: Fn(f64) -> Result<T>,
    T: Sub<Output = T> + Mul<f64, Output = T>,
{
    Ok((f(h)? - f(-h)?) * (0.5 / h))
}

/// Block-diagonal assembly of square blocks.
pub fn block_diag(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), b.shape()).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn rank_of_trivial_matrices() {
        let (r, k) = rank_nullspace(&DMatrix::zeros(3, 3), 1e-8).unwrap();
        assert_eq!((r, k.dim()), (0, 3));
        let (r, k) = rank_nullspace(&DMatrix::identity(3, 3), 1e-8).unwrap();
        assert_eq!((r, k.dim()), (3, 0));
    }

    #[test]
    fn wide_matrix_kernel() {
        let a = dmatrix![1.0, 0.0, 0.0; 0.0, 1.0, 0.0];
        let (r, k) = rank_nullspace(&a, 1e-8).unwrap();
        assert_eq!(r, 2);
        assert_eq!(k.dim(), 1);
        assert!((k.vector(0)[2].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_finite_is_rejected() {
        let a = dmatrix![f64::NAN];
        assert!(matches!(rank_nullspace(&a, 1e-8), Err(Error::Input(_))));
    }

    #[test]
    fn solve_examples() {
        let x = solve_consistent(
            &DMatrix::identity(2, 2),
            &DVector::from_vec(vec![1.0, 2.0]),
            1e-8,
            1e-7,
        )
        .unwrap();
        assert!((x - DVector::from_vec(vec![1.0, 2.0])).norm() < 1e-14);
        let a = dmatrix![1.0, 0.0; 0.0, 0.0];
        let x = solve_consistent(&a, &DVector::from_vec(vec![3.0, 0.0]), 1e-8, 1e-7).unwrap();
        assert!((x - DVector::from_vec(vec![3.0, 0.0])).norm() < 1e-14);
        let e = solve_consistent(&a, &DVector::from_vec(vec![0.0, 1.0]), 1e-8, 1e-7);
        assert!(
            matches!(e, Err(Error::Inconsistent { residual }) if (residual - 1.0).abs() < 1e-12)
        );
    }

    #[test]
    fn containment_examples() {
        let s = SubspaceBasis::from_vectors(2, &[DVector::from_vec(vec![1.0, 0.0])], 1e-8).unwrap();
        assert!(s
            .contains(&DVector::from_vec(vec![1.0, 0.0]), 1e-9)
            .unwrap());
        assert!(!s
            .contains(&DVector::from_vec(vec![0.0, 1.0]), 1e-9)
            .unwrap());
        let s = SubspaceBasis::from_vectors(2, &[DVector::from_vec(vec![1.0, 1.0])], 1e-8).unwrap();
        assert!(s
            .contains(&DVector::from_vec(vec![2.0, 2.0]), 1e-9)
            .unwrap());
        assert!(s.contains(&DVector::from_vec(vec![2.0]), 1e-9).is_err());
    }

    #[test]
    fn central_difference_examples() {
        let x = DVector::from_vec(vec![1.0]);
        let j = central_difference(|x| Ok(x.map(|t| t * t)), &x, 1e-5).unwrap();
        assert!((j[(0, 0)] - 2.0).abs() < 1e-9);
        let j = central_difference(|_| Ok(DVector::from_vec(vec![3.0, 4.0])), &x, 1e-5).unwrap();
        assert!(j.norm() < 1e-12 / 1e-5);
        let j = central_difference(|x| Ok(x.map(f64::sin)), &DVector::zeros(1), 1e-5).unwrap();
        assert!((j[(0, 0)] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn pseudo_inverse_of_rank_one() {
        let a = dmatrix![1.0, 1.0; 1.0, 1.0];
        let p = pseudo_inverse(&a, 1e-8).unwrap();
        assert!((p - dmatrix![0.25, 0.25; 0.25, 0.25]).norm() < 1e-14);
    }

    #[test]
    fn intersection_and_complement() {
        let a =
            SubspaceBasis::from_spanning(&dmatrix![1.0, 0.0; 0.0, 1.0; 0.0, 0.0], 1e-8).unwrap();
        let b =
            SubspaceBasis::from_spanning(&dmatrix![0.0, 0.0; 1.0, 0.0; 0.0, 1.0], 1e-8).unwrap();
        assert_eq!(a.intersection_dim(&b, 1e-8).unwrap(), 1);
        let c = a.complement(1e-8).unwrap();
        assert_eq!(c.dim(), 1);
        assert!((c.vector(0)[2].abs() - 1.0).abs() < 1e-12);
    }
}
