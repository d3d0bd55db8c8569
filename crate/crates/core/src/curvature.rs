//! Exterior and covariant derivatives of dual connection forms, docility,
//! curvature, taming, structure equations and involutivity.
//!
//! One-forms are extended off a point by frame fields: constant ambient
//! coordinates on embedded manifolds (whose brackets vanish) and right-invariant
//! fields on groups (with `[X_u, X_v] = −X_[u,v]`). Derivatives of matrix
//! fields are central differences along the manifold's retraction.

use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

use crate::actions::{Manifold, ManifoldPoint};
use crate::connections::{inertia_factor, projection_p_mu, DualForm, GValuedForm};
use crate::error::{Error, Result};
use crate::groups::{CMat3, LieAlgebra};
use crate::linalg::{
    norm2, pseudo_inverse, range_space, solve_consistent, SubspaceBasis, Tolerances,
};

/// Derivative of a matrix field along the retraction curve `t ↦ R_m(t u)`.
pub fn field_derivative(
    man: &Manifold,
    m: &ManifoldPoint,
    u: &DVector<f64>,
    h: f64,
    f: &dyn Fn(&ManifoldPoint) -> DMatrix<f64>,
) -> DMatrix<f64> {
    let p = man.retract(m, &(u * h));
    let q = man.retract(m, &(u * -h));
    (f(&p) - f(&q)) / (2.0 * h)
}

/// `dμ(u, v) = D_u(μ v) − D_v(μ u) − μ([X_u, X_v])` with frame-field extensions.
pub fn d_oneform(
    mu: &DualForm,
    m: &ManifoldPoint,
    u: &DVector<f64>,
    v: &DVector<f64>,
    h: f64,
) -> DVector<f64> {
    let man = mu.action().manifold();
    let f = mu.field();
    let du = field_derivative(man, m, u, h, &*f);
    let dv = field_derivative(man, m, v, h, &*f);
    du * v - dv * u - mu.matrix(m) * man.frame_bracket(u, v)
}

/// Derivative of the inertia factor, `dχ(u)`.
pub fn d_inertia(mu: &DualForm, m: &ManifoldPoint, u: &DVector<f64>, h: f64) -> DMatrix<f64> {
    let man = mu.action().manifold();
    field_derivative(man, m, u, h, &|p: &ManifoldPoint| mu.inertia_matrix(p))
}

/// Horizontal projector `P_Γ = 1 − P_μ` on tangent coordinates.
pub fn horizontal_projector(
    mu: &DualForm,
    m: &ManifoldPoint,
    tol: &Tolerances,
) -> Result<DMatrix<f64>> {
    let t = mu.action().manifold().tangent_projector(m);
    Ok(t - projection_p_mu(mu, m, tol)?)
}

/// `∇μ(u, v) = dμ(P_Γ u, P_Γ v)`.
pub fn covariant_derivative(
    mu: &DualForm,
    m: &ManifoldPoint,
    u: &DVector<f64>,
    v: &DVector<f64>,
    tol: &Tolerances,
) -> Result<DVector<f64>> {
    let p = horizontal_projector(mu, m, tol)?;
    Ok(d_oneform(mu, m, &(&p * u), &(&p * v), tol.fd_step))
}

/// Outcome of a docility test.
#[derive(Clone, Debug, PartialEq)]
pub struct Docility {
    pub docile: bool,
    /// Largest distance of a probed `∇μ` value from `range μ_m`.
    pub residual: f64,
    pub threshold: f64,
    /// Violating probe pair and its `∇μ` value.
    pub witness: Option<(DVector<f64>, DVector<f64>, DVector<f64>)>,
}

/// Tests `range ∇μ_m ⊆ range μ_m` on all pairs of tangent basis vectors.
pub fn docile(mu: &DualForm, m: &ManifoldPoint, tol: &Tolerances) -> Result<Docility> {
    let man = mu.action().manifold();
    let t = man.tangent_basis(m);
    let probes: Vec<DVector<f64>> = (0..t.ncols()).map(|j| t.column(j).into_owned()).collect();
    docile_on(mu, m, &probes, tol)
}

pub fn docile_on(
    mu: &DualForm,
    m: &ManifoldPoint,
    probes: &[DVector<f64>],
    tol: &Tolerances,
) -> Result<Docility> {
    let t = mu.action().manifold().tangent_basis(m);
    let mu_t = mu.matrix(m) * &t;
    let range = range_space(&mu_t, tol.rank)?;
    let threshold = tol.consist * norm2(&mu_t).max(1.0);
    let p = horizontal_projector(mu, m, tol)?;
    let mut worst = 0.0;
    let mut witness = None;
    for i in 0..probes.len() {
        for j in i + 1..probes.len() {
            let (u, v) = (&probes[i], &probes[j]);
            let val = d_oneform(mu, m, &(&p * u), &(&p * v), tol.fd_step);
            let d = range.distance(&val)?;
            if d > worst {
                worst = d;
                if d > threshold {
                    witness = Some((u.clone(), v.clone(), val));
                }
            }
        }
    }
    Ok(Docility {
        docile: worst <= threshold,
        residual: worst,
        threshold,
        witness,
    })
}

/// `γ(m)` as a matrix on dual coordinates: `ξ_M ∘ χ(m)⁺`.
fn gamma_matrix(mu: &DualForm, m: &ManifoldPoint, tol: &Tolerances) -> Result<DMatrix<f64>> {
    let chi = inertia_factor(mu, m, tol.rank)?;
    Ok(mu.action().generator_matrix(m) * pseudo_inverse(&chi.matrix, tol.rank)?)
}

/// `Ω(u, v) = γ(∇μ(u, v))`; fails with the residual if μ is not docile at `m`.
pub fn curvature(
    mu: &DualForm,
    m: &ManifoldPoint,
    u: &DVector<f64>,
    v: &DVector<f64>,
    tol: &Tolerances,
) -> Result<DVector<f64>> {
    let doc = docile(mu, m, tol)?;
    if !doc.docile {
        return Err(Error::Inconsistent {
            residual: doc.residual,
        });
    }
    curvature_unchecked(mu, m, u, v, tol)
}

/// Curvature at a point already known to be docile.
pub fn curvature_unchecked(
    mu: &DualForm,
    m: &ManifoldPoint,
    u: &DVector<f64>,
    v: &DVector<f64>,
    tol: &Tolerances,
) -> Result<DVector<f64>> {
    let nabla = covariant_derivative(mu, m, u, v, tol)?;
    Ok(gamma_matrix(mu, m, tol)? * nabla)
}

/// Curvature values on all pairs `i < j` of tangent basis vectors, as columns.
pub fn curvature_table(mu: &DualForm, m: &ManifoldPoint, tol: &Tolerances) -> Result<DMatrix<f64>> {
    let doc = docile(mu, m, tol)?;
    if !doc.docile {
        return Err(Error::Inconsistent {
            residual: doc.residual,
        });
    }
    let man = mu.action().manifold();
    let t = man.tangent_basis(m);
    let n = t.ncols();
    let gamma = gamma_matrix(mu, m, tol)?;
    let p = horizontal_projector(mu, m, tol)?;
    let mut cols = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let (u, v) = (t.column(i).into_owned(), t.column(j).into_owned());
            cols.push(&gamma * d_oneform(mu, m, &(&p * u), &(&p * v), tol.fd_step));
        }
    }
    let mut out = DMatrix::zeros(man.coord_dim(), cols.len());
    for (j, c) in cols.iter().enumerate() {
        out.set_column(j, c);
    }
    Ok(out)
}

/// `Ω^α = α ∘ Ω`.
pub fn curvature_alpha(
    alpha: &GValuedForm,
    mu: &DualForm,
    m: &ManifoldPoint,
    u: &DVector<f64>,
    v: &DVector<f64>,
    tol: &Tolerances,
) -> Result<DVector<f64>> {
    Ok(alpha.apply(m, &curvature(mu, m, u, v, tol)?))
}

/// `μ̃ = χ ∘ μ^♯`, after checking that `χ` is symmetric at the probe points.
pub fn tame(mu: &DualForm, probes: &[ManifoldPoint]) -> Result<DualForm> {
    for p in probes {
        let chi = mu.inertia_matrix(p);
        let asym = (&chi - chi.transpose()).norm();
        if asym > 1e-10 * chi.norm().max(1.0) {
            return Err(Error::Contract(format!(
                "inertia factor is not symmetric (residual {asym:.3e})"
            )));
        }
    }
    let inner = mu.clone();
    let sharp = mu.action().algebra().gram_inv();
    Ok(DualForm::new(
        mu.action_arc(),
        format!("tamed[{}]", mu.label()),
        Arc::new(move |m| inner.inertia_matrix(m) * &sharp * inner.matrix(m)),
    ))
}

/// Closed-form curvature of the tamed momentum map of `H × H` acting on `G`:
/// `(P_𝔥 − P_{Ad_g 𝔥})[P_Γ ξ, P_Γ ω]` with `Γ_g = (𝔥 + Ad_g 𝔥)⊥`.
pub fn curvature_leftright_closed(
    alg: &LieAlgebra,
    h_basis: &DMatrix<f64>,
    g: &CMat3,
    xi: &DVector<f64>,
    omega: &DVector<f64>,
    tol_rank: f64,
) -> Result<DVector<f64>> {
    let ad = alg.adjoint(g)?;
    let h = SubspaceBasis::from_spanning(h_basis, tol_rank)?;
    let adh = SubspaceBasis::from_spanning(&(ad * h_basis), tol_rank)?;
    let sum = h.sum(&adh, tol_rank)?;
    let n = alg.dim();
    let p_gamma = DMatrix::identity(n, n) - alg.projector(&sum);
    let br = alg.bracket(&(&p_gamma * xi), &(&p_gamma * omega));
    Ok((alg.projector(&h) - alg.projector(&adh)) * br)
}

/// `‖Ω(u,v) + [ξ,η]_M − γ(dμ(u,v) − dχ(u)η + dχ(v)ξ)‖` with `χξ = μ(u)`, `χη = μ(v)`.
pub fn structure_residual(
    mu: &DualForm,
    m: &ManifoldPoint,
    u: &DVector<f64>,
    v: &DVector<f64>,
    tol: &Tolerances,
) -> Result<f64> {
    let omega = curvature(mu, m, u, v, tol)?;
    let a = mu.action();
    let chi = mu.inertia_matrix(m);
    let xi = solve_consistent(&chi, &mu.apply(m, u), tol.rank, tol.consist)?;
    let eta = solve_consistent(&chi, &mu.apply(m, v), tol.rank, tol.consist)?;
    let lhs = omega + a.generator(&a.algebra().bracket(&xi, &eta), m);
    let h = tol.fd_step;
    let rhs_dual =
        d_oneform(mu, m, u, v, h) - d_inertia(mu, m, u, h) * &eta + d_inertia(mu, m, v, h) * &xi;
    let rhs = gamma_matrix(mu, m, tol)? * rhs_dual;
    Ok((lhs - rhs).norm())
}

/// `‖dμ(η_M(m), v) + ad*_η μ(v) + dχ(v)η‖`.
pub fn interior_product_residual(
    mu: &DualForm,
    m: &ManifoldPoint,
    eta: &DVector<f64>,
    v: &DVector<f64>,
    h: f64,
) -> f64 {
    let a = mu.action();
    let eta_m = a.generator(eta, m);
    let ad_star = a.algebra().ad_matrix(eta).transpose() * mu.apply(m, v);
    (d_oneform(mu, m, &eta_m, v, h) + ad_star + d_inertia(mu, m, v, h) * eta).norm()
}

/// `‖dχ(u)ζ‖` for `u ∈ ker μ_m`, `ζ ∈ 𝔤_m`.
pub fn annihilator_residual(
    mu: &DualForm,
    m: &ManifoldPoint,
    u: &DVector<f64>,
    zeta: &DVector<f64>,
    h: f64,
) -> f64 {
    (d_inertia(mu, m, u, h) * zeta).norm()
}

/// Lie bracket of coordinate vector fields, `D_X Y − D_Y X + [frames]`.
pub fn field_bracket(
    man: &Manifold,
    m: &ManifoldPoint,
    x: &dyn Fn(&ManifoldPoint) -> DVector<f64>,
    y: &dyn Fn(&ManifoldPoint) -> DVector<f64>,
    h: f64,
) -> DVector<f64> {
    let (xm, ym) = (x(m), y(m));
    let along = |f: &dyn Fn(&ManifoldPoint) -> DVector<f64>, w: &DVector<f64>| {
        (f(&man.retract(m, &(w * h))) - f(&man.retract(m, &(w * -h)))) / (2.0 * h)
    };
    along(y, &xm) - along(x, &ym) + man.frame_bracket(&xm, &ym)
}

/// Residuals of the involutivity identities for horizontal fields.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Involutivity {
    /// `‖μ(Ω(X,Y) + [X,Y])‖`.
    pub horizontal: f64,
    /// `‖Ω(X,Y) − (P_Γ − 1)[X,Y]‖`.
    pub identity: f64,
}

/// Checks `Ω(X, Y) = (P_Γ − 1)[X, Y]` for `X = P_Γ w₁`, `Y = P_Γ w₂` at a regular point.
pub fn involutivity_check(
    mu: &DualForm,
    m: &ManifoldPoint,
    w1: &DVector<f64>,
    w2: &DVector<f64>,
    tol: &Tolerances,
) -> Result<Involutivity> {
    let man = mu.action().manifold();
    let x = |p: &ManifoldPoint| horizontal_projector(mu, p, tol).map(|pr| pr * w1);
    let y = |p: &ManifoldPoint| horizontal_projector(mu, p, tol).map(|pr| pr * w2);
    let (xm, ym) = (x(m)?, y(m)?);
    for s in [tol.fd_step_nested, -tol.fd_step_nested] {
        x(&man.retract(m, &(&ym * s)))?;
        y(&man.retract(m, &(&xm * s)))?;
    }
    let xf = |p: &ManifoldPoint| x(p).expect("checked above");
    let yf = |p: &ManifoldPoint| y(p).expect("checked above");
    let br = field_bracket(man, m, &xf, &yf, tol.fd_step_nested);
    let omega = curvature(mu, m, &xm, &ym, tol)?;
    let p = horizontal_projector(mu, m, tol)?;
    let t = man.tangent_projector(m);
    Ok(Involutivity {
        horizontal: mu.apply(m, &(&omega + &br)).norm(),
        identity: (&omega - (p - t) * &br).norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::action_by_name;
    use crate::connections::{mu_q, simple_mechanical_mu};
    use nalgebra::Vector3;

    fn v3(x: f64, y: f64, z: f64) -> DVector<f64> {
        DVector::from_vec(vec![x, y, z])
    }

    #[test]
    fn constant_form_is_closed() {
        let action = action_by_name("so3-on-r3").unwrap();
        let c = DMatrix::from_fn(3, 3, |i, j| (i + 2 * j) as f64);
        let mu = DualForm::new(action, "const", Arc::new(move |_| c.clone()));
        let m = ManifoldPoint::from_vec3(&Vector3::new(0.2, 0.1, -0.4));
        assert!(d_oneform(&mu, &m, &v3(1.0, 0.0, 0.0), &v3(0.0, 1.0, 0.0), 1e-5).norm() < 1e-10);
    }

    #[test]
    fn mu_q_exterior_derivative_at_origin() {
        let mu = mu_q(Arc::new(|t| 1.5 + t), "1.5+t").unwrap();
        let o = ManifoldPoint::from_vec3(&Vector3::zeros());
        let (u, v) = (Vector3::new(1.0, 0.5, 0.0), Vector3::new(-0.3, 0.2, 1.0));
        let d = d_oneform(&mu, &o, &v3(u.x, u.y, u.z), &v3(v.x, v.y, v.z), 1e-5);
        let expected = u.cross(&v) * 3.0;
        assert!((d - v3(expected.x, expected.y, expected.z)).norm() < 1e-9);
    }

    #[test]
    fn docility_dichotomy_at_origin() {
        let tol = Tolerances::default();
        let o = ManifoldPoint::from_vec3(&Vector3::zeros());
        let one = mu_q(Arc::new(|_| 1.0), "1").unwrap();
        let doc = docile(&one, &o, &tol).unwrap();
        assert!(!doc.docile && doc.witness.is_some());
        let lin = mu_q(Arc::new(|t| t), "t").unwrap();
        assert!(docile(&lin, &o, &tol).unwrap().docile);
        let omega = curvature(&lin, &o, &v3(1.0, 0.0, 0.0), &v3(0.0, 1.0, 0.0), &tol).unwrap();
        assert!(omega.norm() < 1e-7);
    }

    #[test]
    fn vertical_input_has_zero_covariant_derivative() {
        let tol = Tolerances::default();
        let a = action_by_name("so3-on-r3").unwrap();
        let mu = simple_mechanical_mu(a.clone());
        let m = ManifoldPoint::from_vec3(&Vector3::new(0.3, -0.5, 0.8));
        let u = a.generator(&v3(0.1, 0.7, 0.2), &m);
        let v = v3(0.4, 0.1, -0.9);
        assert!(covariant_derivative(&mu, &m, &u, &v, &tol).unwrap().norm() < 1e-12);
        let a1 = covariant_derivative(&mu, &m, &v, &v3(1.0, 0.0, 0.0), &tol).unwrap();
        let a2 = covariant_derivative(&mu, &m, &v3(1.0, 0.0, 0.0), &v, &tol).unwrap();
        assert!((a1 + a2).norm() < 1e-9);
    }

    #[test]
    fn tame_rejects_asymmetric_inertia() {
        let a = action_by_name("so3-on-r3").unwrap();
        let skewed = DualForm::new(
            a,
            "skewed",
            Arc::new(|m: &ManifoldPoint| {
                let x = m.vec3();
                let h = crate::groups::hat(&x);
                let b = nalgebra::Matrix3::new(1.0, 2.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
                let mm = b * h.transpose();
                DMatrix::from_iterator(3, 3, mm.iter().cloned())
            }),
        );
        let p = ManifoldPoint::from_vec3(&Vector3::new(0.3, 0.4, 0.5));
        assert!(matches!(tame(&skewed, &[p]), Err(Error::Contract(_))));
    }
}
