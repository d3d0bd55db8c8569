//! Dual connection forms, inertia factors, the γ-map and equivariant
//! projections onto orbit tangent spaces.
//!
//! A form is stored extensionally: an evaluator returning, at each point, the
//! matrix of `μ_m` from tangent coordinates to dual-basis coordinates of 𝔤*
//! (or to 𝔤-coordinates for a 𝔤-valued form).

use nalgebra::{DMatrix, DVector, Vector3};
use std::fmt;
use std::sync::Arc;

use crate::actions::{isotropy_algebra, orbit_tangent, so3_on_r3, Action, ManifoldPoint};
use crate::error::{Error, Result};
use crate::groups::{hat, GroupElement};
use crate::linalg::{
    pseudo_inverse, range_space, rank_nullspace, solve_consistent, SubspaceBasis, Tolerances,
};
use crate::report::{CheckRecord, Worst};

pub type MatrixField = Arc<dyn Fn(&ManifoldPoint) -> DMatrix<f64> + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type PointFn = Arc<dyn Fn(&Vector3<f64>) -> f64 + Send + Sync>;

/// A 𝔤*-valued one-form on the action's manifold.
#[derive(Clone)]
pub struct DualForm {
    action: Arc<dyn Action>,
    label: String,
    eval: MatrixField,
}

impl fmt::Debug for DualForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DualForm")
            .field("action", &self.action.name())
            .field("label", &self.label)
            .finish()
    }
}

impl DualForm {
    pub fn new(action: Arc<dyn Action>, label: impl Into<String>, eval: MatrixField) -> Self {
        Self {
            action,
            label: label.into(),
            eval,
        }
    }

    pub fn action(&self) -> &dyn Action {
        self.action.as_ref()
    }

    pub fn action_arc(&self) -> Arc<dyn Action> {
        self.action.clone()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn field(&self) -> MatrixField {
        self.eval.clone()
    }

    /// Matrix of `μ_m` (algebra dim × tangent coordinate dim).
    pub fn matrix(&self, m: &ManifoldPoint) -> DMatrix<f64> {
        (self.eval)(m)
    }

    pub fn apply(&self, m: &ManifoldPoint, v: &DVector<f64>) -> DVector<f64> {
        self.matrix(m) * v
    }

    /// `χ(m) = μ_m ∘ d_eΦ̂_m` without the nondegeneracy check.
    pub fn inertia_matrix(&self, m: &ManifoldPoint) -> DMatrix<f64> {
        self.matrix(m) * self.action.generator_matrix(m)
    }

    /// `range μ_m` restricted to the tangent space.
    pub fn range_at(&self, m: &ManifoldPoint, tol_rank: f64) -> Result<SubspaceBasis> {
        let t = self.action.manifold().tangent_basis(m);
        range_space(&(self.matrix(m) * t), tol_rank)
    }

    /// `ker μ_m ∩ T_m M` in tangent coordinates.
    pub fn kernel_at(&self, m: &ManifoldPoint, tol_rank: f64) -> Result<SubspaceBasis> {
        let t = self.action.manifold().tangent_basis(m);
        let (_, k) = rank_nullspace(&(self.matrix(m) * &t), tol_rank)?;
        if k.dim() == 0 {
            return Ok(SubspaceBasis::zero(t.nrows()));
        }
        SubspaceBasis::from_spanning(&(&t * k.matrix()), tol_rank)
    }
}

/// A 𝔤-valued one-form; may be discontinuous at singular points.
#[derive(Clone)]
pub struct GValuedForm {
    action: Arc<dyn Action>,
    label: String,
    eval: MatrixField,
}

impl fmt::Debug for GValuedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GValuedForm")
            .field("action", &self.action.name())
            .field("label", &self.label)
            .finish()
    }
}

impl GValuedForm {
    pub fn new(action: Arc<dyn Action>, label: impl Into<String>, eval: MatrixField) -> Self {
        Self {
            action,
            label: label.into(),
            eval,
        }
    }

    pub fn action(&self) -> &dyn Action {
        self.action.as_ref()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn matrix(&self, m: &ManifoldPoint) -> DMatrix<f64> {
        (self.eval)(m)
    }

    pub fn apply(&self, m: &ManifoldPoint, v: &DVector<f64>) -> DVector<f64> {
        self.matrix(m) * v
    }

    /// `P_α = d_eΦ̂_m ∘ α_m`.
    pub fn projection(&self, m: &ManifoldPoint) -> DMatrix<f64> {
        self.action.generator_matrix(m) * self.matrix(m)
    }
}

/// The inertia factor `χ(m)` at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct InertiaMap {
    pub matrix: DMatrix<f64>,
}

impl InertiaMap {
    pub fn kernel(&self, tol_rank: f64) -> Result<SubspaceBasis> {
        Ok(rank_nullspace(&self.matrix, tol_rank)?.1)
    }

    pub fn range(&self, tol_rank: f64) -> Result<SubspaceBasis> {
        range_space(&self.matrix, tol_rank)
    }

    pub fn symmetry_residual(&self) -> f64 {
        (&self.matrix - self.matrix.transpose()).norm()
    }
}

/// The horizontal system `Γ = ker μ` of a dual connection form.
#[derive(Clone, Debug)]
pub struct PartialConnection {
    form: DualForm,
}

impl PartialConnection {
    pub fn new(form: DualForm) -> Self {
        Self { form }
    }

    pub fn form(&self) -> &DualForm {
        &self.form
    }

    pub fn basis(&self, m: &ManifoldPoint, tol_rank: f64) -> Result<SubspaceBasis> {
        self.form.kernel_at(m, tol_rank)
    }

    /// `P_Γ = 1 − P_μ` on tangent coordinates.
    pub fn projector(&self, m: &ManifoldPoint, tol: &Tolerances) -> Result<DMatrix<f64>> {
        let p = projection_p_mu(&self.form, m, tol)?;
        let t = self.form.action().manifold().tangent_projector(m);
        Ok(t - p)
    }
}

/// Simple mechanical form `μ(v)·ξ = ⟨v, ξ_M(m)⟩` of the manifold's invariant metric.
pub fn simple_mechanical_mu(action: Arc<dyn Action>) -> DualForm {
    let a = action.clone();
    DualForm::new(
        action,
        "simple-mechanical",
        Arc::new(move |m| a.generator_matrix(m).transpose() * a.manifold().metric()),
    )
}

/// `μ^q(v) = q(‖m‖²) m × v` on ℝ³; `q` must be positive on (0, ∞).
pub fn mu_q(q: ScalarFn, label: &str) -> Result<DualForm> {
    for k in -30..=30 {
        let t = 10f64.powf(k as f64 / 10.0);
        let value = q(t);
        if value.is_nan() || value <= 0.0 {
            return Err(Error::Contract(format!(
                "q must be positive on (0, ∞); q({t:.3e}) = {value:.3e}"
            )));
        }
    }
    let action: Arc<dyn Action> = Arc::new(so3_on_r3());
    Ok(DualForm::new(
        action,
        format!("mu-q[{label}]"),
        Arc::new(move |m| {
            let x = m.vec3();
            let h = hat(&x) * q(x.norm_squared());
            DMatrix::from_iterator(3, 3, h.iter().cloned())
        }),
    ))
}

/// `χ(m)` with the nondegeneracy conditions `ker χ = 𝔤_m` and `range χ = range μ_m`.
pub fn inertia_factor(mu: &DualForm, m: &ManifoldPoint, tol_rank: f64) -> Result<InertiaMap> {
    let chi = InertiaMap {
        matrix: mu.inertia_matrix(m),
    };
    let iso = isotropy_algebra(mu.action(), m, tol_rank)?;
    let ker = chi.kernel(tol_rank)?;
    let gap = ker.distance_to(&iso)?;
    if gap > 1e-6 {
        return Err(Error::Degenerate(format!(
            "ker χ has dimension {} but the isotropy algebra has dimension {}",
            ker.dim(),
            iso.dim()
        )));
    }
    let range = chi.range(tol_rank)?;
    let range_mu = mu.range_at(m, tol_rank)?;
    if range.distance_to(&range_mu)? > 1e-6 {
        return Err(Error::Degenerate(format!(
            "range χ has dimension {} but range μ has dimension {}",
            range.dim(),
            range_mu.dim()
        )));
    }
    Ok(chi)
}

/// `γ(m)ν = ξ_M(m)` for any `ξ` with `χ(m)ξ = ν`.
pub fn gamma_apply(
    mu: &DualForm,
    m: &ManifoldPoint,
    nu: &DVector<f64>,
    tol: &Tolerances,
) -> Result<DVector<f64>> {
    let chi = inertia_factor(mu, m, tol.rank)?;
    gamma_with(mu.action(), &chi, m, nu, tol)
}

pub(crate) fn gamma_with(
    action: &dyn Action,
    chi: &InertiaMap,
    m: &ManifoldPoint,
    nu: &DVector<f64>,
    tol: &Tolerances,
) -> Result<DVector<f64>> {
    let xi = solve_consistent(&chi.matrix, nu, tol.rank, tol.consist)?;
    Ok(action.generator(&xi, m))
}

/// `P_μ = γ ∘ μ`, the equivariant projection onto the orbit tangent space.
pub fn projection_p_mu(mu: &DualForm, m: &ManifoldPoint, tol: &Tolerances) -> Result<DMatrix<f64>> {
    let chi = inertia_factor(mu, m, tol.rank)?;
    let pinv = pseudo_inverse(&chi.matrix, tol.rank)?;
    Ok(mu.action().generator_matrix(m) * pinv * mu.matrix(m))
}

/// `α(v) = ‖m‖⁻² m × v + f(m)⟨m, v⟩ m` on ℝ³, and `α = 0` at the origin.
pub fn alpha_so3r3(f: PointFn, label: &str) -> GValuedForm {
    let action: Arc<dyn Action> = Arc::new(so3_on_r3());
    GValuedForm::new(
        action,
        format!("alpha[{label}]"),
        Arc::new(move |m| {
            let x = m.vec3();
            let r2 = x.norm_squared();
            if r2 == 0.0 {
                return DMatrix::zeros(3, 3);
            }
            let a = hat(&x) / r2 + x * x.transpose() * f(&x);
            DMatrix::from_iterator(3, 3, a.iter().cloned())
        }),
    )
}

/// `α̃ = α ∘ P_α`.
pub fn clean_alpha(alpha: &GValuedForm) -> GValuedForm {
    let inner = alpha.clone();
    GValuedForm::new(
        alpha.action.clone(),
        format!("clean[{}]", alpha.label),
        Arc::new(move |m| inner.matrix(m) * inner.projection(m)),
    )
}

/// Matrix of `dΦ_g` at `m` on tangent coordinates.
pub fn push_forward_matrix(
    action: &dyn Action,
    g: &GroupElement,
    m: &ManifoldPoint,
) -> DMatrix<f64> {
    let n = action.manifold().coord_dim();
    let mut out = DMatrix::zeros(n, n);
    for j in 0..n {
        let e = DVector::from_fn(n, |i, _| f64::from(i == j));
        out.set_column(j, &action.push_forward(g, m, &e));
    }
    out
}

/// `Ad*_{g⁻¹} = (Ad_{g⁻¹})ᵀ` on dual-basis coordinates.
pub fn coadjoint_inverse(action: &dyn Action, g: &GroupElement) -> Result<DMatrix<f64>> {
    Ok(action.algebra().adjoint(&g.inverse())?.transpose())
}

/// `‖μ_{g·m} ∘ dΦ_g − Ad*_{g⁻¹} ∘ μ_m‖` on the tangent space.
pub fn equivariance_residual(
    action: &dyn Action,
    field: &dyn Fn(&ManifoldPoint) -> DMatrix<f64>,
    g: &GroupElement,
    m: &ManifoldPoint,
) -> Result<f64> {
    let t = action.manifold().tangent_basis(m);
    let gm = action.apply(g, m);
    let lhs = field(&gm) * push_forward_matrix(action, g, m) * &t;
    let rhs = coadjoint_inverse(action, g)? * field(m) * &t;
    Ok((lhs - rhs).norm())
}

fn splitting_and_conditions(
    action: &dyn Action,
    field: &dyn Fn(&ManifoldPoint) -> DMatrix<f64>,
    m: &ManifoldPoint,
    tol_rank: f64,
) -> Result<(bool, f64, f64)> {
    let man = action.manifold();
    let t = man.tangent_basis(m);
    let mu = field(m);
    let orbit = orbit_tangent(action, m, tol_rank)?;
    let (_, k) = rank_nullspace(&(&mu * &t), tol_rank)?;
    let ker = if k.dim() == 0 {
        SubspaceBasis::zero(t.nrows())
    } else {
        SubspaceBasis::from_spanning(&(&t * k.matrix()), tol_rank)?
    };
    let split =
        orbit.dim() + ker.dim() == man.dim() && orbit.intersection_dim(&ker, tol_rank)? == 0;
    let chi = InertiaMap {
        matrix: &mu * action.generator_matrix(m),
    };
    let iso = isotropy_algebra(action, m, tol_rank)?;
    let ker_gap = chi.kernel(tol_rank)?.distance_to(&iso)?;
    let range_gap = chi
        .range(tol_rank)?
        .distance_to(&range_space(&(&mu * &t), tol_rank)?)?;
    Ok((split, ker_gap, range_gap))
}

/// Checks that `field` defines an equivariant dual connection form at the given samples.
pub fn form_checks(
    prefix: &str,
    action: &dyn Action,
    field: &dyn Fn(&ManifoldPoint) -> DMatrix<f64>,
    points: &[ManifoldPoint],
    groups: &[GroupElement],
    tol: &Tolerances,
) -> Result<Vec<CheckRecord>> {
    let mut split = Worst::default();
    let mut ker = Worst::default();
    let mut range = Worst::default();
    let mut equi = Worst::default();
    for (i, m) in points.iter().enumerate() {
        let (s, kg, rg) = splitting_and_conditions(action, field, m, tol.rank)?;
        let p = m.coords().as_slice();
        split.update(if s { 0.0 } else { 1.0 }, p);
        ker.update(kg, p);
        range.update(rg, p);
        if let Some(g) = groups.get(i % groups.len().max(1)) {
            equi.update(equivariance_residual(action, field, g, m)?, p);
        }
    }
    Ok(vec![
        split.record(
            &format!("{prefix}.splitting"),
            "tangent space = orbit tangent ⊕ ker μ",
            0.0,
        ),
        ker.record(
            &format!("{prefix}.kernel-chi"),
            "ker χ(m) = isotropy algebra",
            1e-6,
        ),
        range.record(
            &format!("{prefix}.range-chi"),
            "range χ(m) = range μ_m",
            1e-6,
        ),
        equi.record(
            &format!("{prefix}.equivariance"),
            "pullback by Φ_g equals Ad* of g⁻¹",
            1e-8,
        ),
    ])
}

/// Report-based verification of a dual connection form.
pub fn dual_form_verify(
    mu: &DualForm,
    points: &[ManifoldPoint],
    groups: &[GroupElement],
    tol: &Tolerances,
) -> Result<Vec<CheckRecord>> {
    let f = mu.field();
    form_checks(
        &format!("dual-form.{}.{}", mu.action().name(), mu.label()),
        mu.action(),
        &|m: &ManifoldPoint| f(m),
        points,
        groups,
        tol,
    )
}

/// Largest `‖μ(R_{m_s}(s d)) − μ(m_s)‖ / (10 s)` along eight rays at steps 10⁻², 10⁻³, 10⁻⁴.
pub fn continuity_probe(
    action: &dyn Action,
    field: &dyn Fn(&ManifoldPoint) -> DMatrix<f64>,
    singular: &ManifoldPoint,
) -> f64 {
    let man = action.manifold();
    let t = man.tangent_basis(singular);
    let base = field(singular);
    let mut worst: f64 = 0.0;
    for ray in 0..8 {
        let mut d = DVector::zeros(t.ncols());
        for (j, x) in d.iter_mut().enumerate() {
            *x = if (ray >> (j % 3)) & 1 == 1 { 1.0 } else { -1.0 } * (1.0 + 0.25 * j as f64);
        }
        let dir = &t * d.normalize();
        for s in [1e-2, 1e-3, 1e-4] {
            let p = man.retract(singular, &(&dir * s));
            worst = worst.max((field(&p) - &base).norm() / (10.0 * s));
        }
    }
    worst
}

/// Verifies that `μ = χ·α` is a dual connection form: continuity at the
/// singular samples, equivariance, and nondegeneracy.
pub fn pair_check(
    label: &str,
    alpha: &GValuedForm,
    chi: MatrixField,
    points: &[ManifoldPoint],
    singular: &[ManifoldPoint],
    groups: &[GroupElement],
    tol: &Tolerances,
) -> Result<Vec<CheckRecord>> {
    let a = alpha.clone();
    let mu = move |m: &ManifoldPoint| chi(m) * a.matrix(m);
    let mut cont = Worst::default();
    for s in singular {
        cont.update(
            continuity_probe(alpha.action(), &mu, s),
            s.coords().as_slice(),
        );
    }
    let mut out = form_checks(
        &format!("pair.{label}"),
        alpha.action(),
        &mu,
        points,
        groups,
        tol,
    )?;
    if !singular.is_empty() {
        out.push(cont.record(
            &format!("pair.{label}.continuity"),
            "χ·α is smooth at singular points",
            1.0,
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::action_by_name;
    use crate::sampling::rng;

    fn v3(x: f64, y: f64, z: f64) -> DVector<f64> {
        DVector::from_vec(vec![x, y, z])
    }

    fn p3(x: f64, y: f64, z: f64) -> ManifoldPoint {
        ManifoldPoint::from_vec3(&Vector3::new(x, y, z))
    }

    #[test]
    fn simple_mechanical_on_r3_is_cross_product() {
        let mu = simple_mechanical_mu(action_by_name("so3-on-r3").unwrap());
        let m = p3(0.0, 0.0, 1.0);
        assert!((mu.apply(&m, &v3(1.0, 0.0, 0.0)) - v3(0.0, 1.0, 0.0)).norm() < 1e-15);
        assert!(mu.apply(&m, &v3(0.0, 0.0, 2.0)).norm() < 1e-15);
    }

    #[test]
    fn mu_q_examples() {
        let mu = mu_q(Arc::new(|_| 1.0), "1").unwrap();
        let m = p3(0.0, 0.0, 1.0);
        assert!((mu.apply(&m, &v3(1.0, 0.0, 0.0)) - v3(0.0, 1.0, 0.0)).norm() < 1e-15);
        assert!(mu.apply(&p3(0.3, 0.2, 0.1), &v3(0.3, 0.2, 0.1)).norm() < 1e-15);
        let q = |t: f64| 2.0 + t;
        let mu = mu_q(Arc::new(q), "2+t").unwrap();
        let chi = mu.inertia_matrix(&m);
        let mut ev: Vec<f64> = chi.symmetric_eigenvalues().iter().cloned().collect();
        ev.sort_by(f64::total_cmp);
        assert!(
            ev[0].abs() < 1e-14 && (ev[1] - q(1.0)).abs() < 1e-14 && (ev[2] - q(1.0)).abs() < 1e-14
        );
        assert!(matches!(
            mu_q(Arc::new(|t| 1.0 - t), "bad"),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn projection_example_on_r3() {
        let mu = simple_mechanical_mu(action_by_name("so3-on-r3").unwrap());
        let tol = Tolerances::default();
        let p = projection_p_mu(&mu, &p3(0.0, 0.0, 1.0), &tol).unwrap();
        assert!((p * v3(1.0, 0.0, 1.0) - v3(1.0, 0.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn gamma_at_origin() {
        let mu = mu_q(Arc::new(|_| 1.0), "1").unwrap();
        let tol = Tolerances::default();
        let o = p3(0.0, 0.0, 0.0);
        assert_eq!(
            gamma_apply(&mu, &o, &DVector::zeros(3), &tol)
                .unwrap()
                .norm(),
            0.0
        );
        assert!(matches!(
            gamma_apply(&mu, &o, &v3(1.0, 0.0, 0.0), &tol),
            Err(Error::Inconsistent { .. })
        ));
    }

    #[test]
    fn zero_form_is_degenerate() {
        let action = action_by_name("so3-on-r3").unwrap();
        let zero = DualForm::new(action, "zero", Arc::new(|_| DMatrix::zeros(3, 3)));
        assert!(matches!(
            inertia_factor(&zero, &p3(1.0, 0.0, 0.0), 1e-8),
            Err(Error::Degenerate(_))
        ));
        let mut r = rng(1);
        let pts = vec![p3(1.0, 0.5, 0.0)];
        let gs = vec![zero.action().sample_group(&mut r)];
        let rep = dual_form_verify(&zero, &pts, &gs, &Tolerances::default()).unwrap();
        assert!(rep.iter().any(|c| !c.passed));
    }

    #[test]
    fn alpha_examples() {
        let alpha = alpha_so3r3(Arc::new(|_| 0.0), "0");
        let m = p3(0.0, 0.0, 1.0);
        assert!((alpha.apply(&m, &v3(1.0, 0.0, 0.0)) - v3(0.0, 1.0, 0.0)).norm() < 1e-15);
        assert!(alpha.apply(&p3(0.5, 0.1, 0.2), &v3(0.5, 0.1, 0.2)).norm() < 1e-14);
        assert_eq!(alpha.matrix(&p3(0.0, 0.0, 0.0)).norm(), 0.0);
        let w = alpha.apply(&p3(0.0, 0.0, 1e-6), &v3(1.0, 0.0, 0.0)).norm();
        assert!(w > 1e5);
    }

    #[test]
    fn cleaning_removes_radial_part() {
        let raw = alpha_so3r3(Arc::new(|m: &Vector3<f64>| 1.0 + m.x * m.x), "f");
        let plain = alpha_so3r3(Arc::new(|_| 0.0), "0");
        let clean = clean_alpha(&raw);
        let m = p3(0.3, -0.7, 0.4);
        for v in [v3(1.0, 2.0, -0.5), v3(0.3, -0.7, 0.4)] {
            assert!((clean.apply(&m, &v) - plain.apply(&m, &v)).norm() < 1e-13);
        }
        assert!((clean.projection(&m) - raw.projection(&m)).norm() < 1e-13);
    }
}
