//! Adaptors, adapted inertia factors and dual forms, almost-horizontal
//! systems, Cayley-transform slices and their verification.
//!
//! The worked example is rotations about an axis `σ` acting on SO(3) from both
//! sides. Its inertia factor is `χ(g) = [[1, −r], [−r, 1]]` with
//! `r(g) = ⟨σ, gσ⟩`, and the trivial adaptor suffices near the normalizer.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use std::fmt;
use std::sync::Arc;

use crate::actions::{isotropy_algebra, s1s1_on_so3, Action, Manifold, ManifoldPoint};
use crate::connections::{simple_mechanical_mu, DualForm, InertiaMap, MatrixField};
use crate::curvature::field_bracket;
use crate::error::{Error, Result};
use crate::groups::{cay, cay_inverse, dnat_cay, GroupElement};
use crate::linalg::{norm2, pseudo_inverse, rank, rank_nullspace, SubspaceBasis, Tolerances};
use crate::report::{CheckRecord, Worst};
use crate::sampling::{ball, normal_vector, uniform, SampleRng};

pub type GroupMap = Arc<dyn Fn(&ManifoldPoint) -> GroupElement + Send + Sync>;
pub type ParamMap = Arc<dyn Fn(&DVector<f64>) -> ManifoldPoint + Send + Sync>;
pub type ParamTangent = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;
pub type ParamGuess = Arc<dyn Fn(&ManifoldPoint) -> DVector<f64> + Send + Sync>;

/// Step used to difference group-valued maps and slice parametrizations.
const MAP_STEP: f64 = 1e-6;

/// A `G_{m₀}`-equivariant map `φ` near `m₀` with `Ad_{φ(m)} 𝔤_{m₀} ⊇ 𝔤_m`.
#[derive(Clone)]
pub struct Adaptor {
    action: Arc<dyn Action>,
    base: ManifoldPoint,
    map: GroupMap,
}

impl fmt::Debug for Adaptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Adaptor")
            .field("action", &self.action.name())
            .field("base", &self.base)
            .finish()
    }
}

impl Adaptor {
    pub fn new(action: Arc<dyn Action>, base: ManifoldPoint, map: GroupMap) -> Self {
        Self { action, base, map }
    }

    /// `φ ≡ e`.
    pub fn trivial(action: Arc<dyn Action>, base: ManifoldPoint) -> Self {
        let e = action.algebra().identity();
        Self::new(action, base, Arc::new(move |_| e.clone()))
    }

    pub fn action(&self) -> &dyn Action {
        self.action.as_ref()
    }

    pub fn base(&self) -> &ManifoldPoint {
        &self.base
    }

    pub fn phi(&self, m: &ManifoldPoint) -> GroupElement {
        (self.map)(m)
    }

    pub fn ad_phi(&self, m: &ManifoldPoint) -> Result<DMatrix<f64>> {
        self.action.algebra().adjoint(&self.phi(m))
    }

    /// `𝔤_{m₀}`.
    pub fn base_isotropy(&self, tol_rank: f64) -> Result<SubspaceBasis> {
        isotropy_algebra(self.action(), &self.base, tol_rank)
    }

    /// Left-trivialized derivative `φ(m)⁻¹ dφ(v)` in algebra coordinates.
    pub fn dnat_left(&self, m: &ManifoldPoint, v: &DVector<f64>) -> DVector<f64> {
        let man = self.action.manifold();
        let alg = self.action.algebra();
        let p = self.phi(&man.retract(m, &(v * MAP_STEP)));
        let q = self.phi(&man.retract(m, &(v * -MAP_STEP)));
        let at = self.phi(m).inverse();
        let parts: Vec<DVector<f64>> = alg
            .factors()
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let d = (p.factor(i) - q.factor(i)) / nalgebra::Complex::new(2.0 * MAP_STEP, 0.0);
                f.project_coords(&(at.factor(i) * d))
            })
            .collect();
        alg.join(&parts)
    }

    /// Largest distance of `[d^♮ᴸφ(x), ζ]` from `𝔤_{m₀}` over basis vectors `x` of `xi`, `ζ` of `𝔤_{m₀}`.
    pub fn bracket_condition_residual(
        &self,
        m: &ManifoldPoint,
        xi: &SubspaceBasis,
        tol_rank: f64,
    ) -> Result<f64> {
        let iso = self.base_isotropy(tol_rank)?;
        let alg = self.action.algebra();
        let mut worst: f64 = 0.0;
        for i in 0..xi.dim() {
            let d = self.dnat_left(m, &xi.vector(i));
            for j in 0..iso.dim() {
                let b = alg.bracket(&d, &iso.vector(j));
                worst = worst.max(iso.distance(&b)? / b.norm().max(1.0));
            }
        }
        Ok(worst)
    }

    /// Membership, isotropy containment and conjugation equivariance at samples.
    pub fn verify(
        &self,
        prefix: &str,
        points: &[ManifoldPoint],
        isotropy_samples: &[GroupElement],
        tol_rank: f64,
    ) -> Result<Vec<CheckRecord>> {
        let a = self.action();
        let phi0 = self.phi(&self.base);
        let member = a.apply(&phi0, &self.base).distance(&self.base);
        let iso0 = self.base_isotropy(tol_rank)?;
        let mut contain = Worst::default();
        let mut equiv = Worst::default();
        for m in points {
            let conj = iso0.image(&self.ad_phi(m)?, tol_rank)?;
            let iso = isotropy_algebra(a, m, tol_rank)?;
            contain.update(conj.containment_residual(&iso)?, m.coords().as_slice());
            for h in isotropy_samples {
                let lhs = self.phi(&a.apply(h, m));
                let rhs = h.mul(&self.phi(m)).mul(&h.inverse());
                equiv.update(lhs.distance(&rhs), m.coords().as_slice());
            }
        }
        Ok(vec![
            CheckRecord::new(
                format!("{prefix}.adaptor-base-isotropy"),
                "φ(m₀) ∈ G_{m₀}",
                self.base.coords().as_slice(),
                member,
                1e-10,
            ),
            contain.record(
                &format!("{prefix}.adaptor-contains-isotropy"),
                "Ad_φ 𝔤_{m₀} ⊇ 𝔤_m",
                1e-6,
            ),
            equiv.record(
                &format!("{prefix}.adaptor-equivariance"),
                "φ(h·m) = h φ(m) h⁻¹",
                1e-8,
            ),
        ])
    }
}

/// `χ_φ(m) = χ(m) ∘ Ad_{φ(m)}`, with `ker χ_φ(m) ⊆ 𝔤_{m₀}` enforced.
pub fn adapted_inertia(
    mu: &DualForm,
    adaptor: &Adaptor,
    m: &ManifoldPoint,
    tol_rank: f64,
) -> Result<InertiaMap> {
    let chi = InertiaMap {
        matrix: mu.inertia_matrix(m) * adaptor.ad_phi(m)?,
    };
    let ker = chi.kernel(tol_rank)?;
    let iso0 = adaptor.base_isotropy(tol_rank)?;
    let gap = iso0.containment_residual(&ker)?;
    if gap > 1e-6 {
        return Err(Error::Contract(format!(
            "ker χ_φ is not contained in the base isotropy algebra (residual {gap:.3e})"
        )));
    }
    Ok(chi)
}

/// The adapted dual connection form `μ̃ = χ_φ ∘ π ∘ ι ∘ μ`.
#[derive(Clone)]
pub struct AdaptedForm {
    mu: DualForm,
    adaptor: Adaptor,
    pi: DMatrix<f64>,
    iota: MatrixField,
    tol_rank: f64,
}

impl fmt::Debug for AdaptedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AdaptedForm")
            .field("mu", &self.mu)
            .field("pi", &self.pi)
            .finish()
    }
}

/// Builds `μ̃` after checking `ker π = 𝔤_{m₀}` and `π = π ι χ_φ` at the probes.
pub fn adapted_dual_form(
    mu: &DualForm,
    adaptor: &Adaptor,
    pi: DMatrix<f64>,
    iota: MatrixField,
    probes: &[ManifoldPoint],
    tol: &Tolerances,
) -> Result<AdaptedForm> {
    let iso0 = adaptor.base_isotropy(tol.rank)?;
    let (_, ker) = rank_nullspace(&pi, tol.rank)?;
    if ker.distance_to(&iso0)? > 1e-6 {
        return Err(Error::Input(format!(
            "ker π has dimension {} but the base isotropy algebra has dimension {}",
            ker.dim(),
            iso0.dim()
        )));
    }
    let form = AdaptedForm {
        mu: mu.clone(),
        adaptor: adaptor.clone(),
        pi,
        iota,
        tol_rank: tol.rank,
    };
    for p in probes {
        let r = form.iota_residual(p)?;
        if r > tol.eq.max(1e-9) {
            return Err(Error::Input(format!(
                "restricted pseudo-inverse fails π = π∘ι∘χ_φ (residual {r:.3e})"
            )));
        }
    }
    Ok(form)
}

impl AdaptedForm {
    pub fn base_form(&self) -> &DualForm {
        &self.mu
    }

    pub fn adaptor(&self) -> &Adaptor {
        &self.adaptor
    }

    pub fn pi(&self) -> &DMatrix<f64> {
        &self.pi
    }

    pub fn iota(&self, m: &ManifoldPoint) -> DMatrix<f64> {
        (self.iota)(m)
    }

    pub fn chi_phi(&self, m: &ManifoldPoint) -> Result<InertiaMap> {
        adapted_inertia(&self.mu, &self.adaptor, m, self.tol_rank)
    }

    /// `‖π − π ∘ ι(m) ∘ χ_φ(m)‖`.
    pub fn iota_residual(&self, m: &ManifoldPoint) -> Result<f64> {
        let chi = self.chi_phi(m)?;
        Ok((&self.pi - &self.pi * self.iota(m) * chi.matrix).norm())
    }

    /// `π̃_φ(m) = χ_φ(m) ∘ π ∘ ι(m)`.
    pub fn pi_tilde(&self, m: &ManifoldPoint) -> Result<DMatrix<f64>> {
        Ok(self.chi_phi(m)?.matrix * &self.pi * self.iota(m))
    }

    /// `‖π̃_φ ∘ χ_φ − χ_φ ∘ π‖`.
    pub fn commutation_residual(&self, m: &ManifoldPoint) -> Result<f64> {
        let chi = self.chi_phi(m)?.matrix;
        Ok((self.pi_tilde(m)? * &chi - &chi * &self.pi).norm())
    }

    pub fn matrix(&self, m: &ManifoldPoint) -> Result<DMatrix<f64>> {
        Ok(self.pi_tilde(m)? * self.mu.matrix(m))
    }

    /// `μ̃` as a plain dual form; panics outside the adaptor's domain.
    pub fn as_dual_form(&self) -> DualForm {
        let me = self.clone();
        DualForm::new(
            self.mu.action_arc(),
            format!("adapted[{}]", self.mu.label()),
            Arc::new(move |m| {
                me.matrix(m)
                    .expect("adapted form evaluated inside its domain")
            }),
        )
    }

    /// `ker μ̃|_m` in tangent coordinates.
    pub fn kernel_at(&self, m: &ManifoldPoint) -> Result<SubspaceBasis> {
        let t = self.mu.action().manifold().tangent_basis(m);
        let (_, k) = rank_nullspace(&(self.matrix(m)? * &t), self.tol_rank)?;
        if k.dim() == 0 {
            return Ok(SubspaceBasis::zero(t.nrows()));
        }
        SubspaceBasis::from_spanning(&(&t * k.matrix()), self.tol_rank)
    }

    pub fn rank_at(&self, m: &ManifoldPoint) -> Result<usize> {
        let t = self.mu.action().manifold().tangent_basis(m);
        rank(&(self.matrix(m)? * t), self.tol_rank)
    }

    /// Metric-orthogonal projector onto `ker μ̃|_m`.
    pub fn kernel_projector(&self, m: &ManifoldPoint) -> Result<DMatrix<f64>> {
        let man = self.mu.action().manifold();
        let k = self.kernel_at(m)?;
        let n = man.coord_dim();
        if k.dim() == 0 {
            return Ok(DMatrix::zeros(n, n));
        }
        let g = man.metric();
        let b = k.matrix();
        let small = (b.transpose() * &g * b)
            .try_inverse()
            .ok_or_else(|| Error::Internal("metric restricted to a subspace is singular".into()))?;
        Ok(b * small * b.transpose() * g)
    }
}

/// `Ξ|_m = Γ|_m ⊕ (Ad_φ 𝔤_{m₀})~|_m`; fails if the sum is not direct.
pub fn almost_horizontal_basis(
    mu: &DualForm,
    adaptor: &Adaptor,
    m: &ManifoldPoint,
    tol_rank: f64,
) -> Result<SubspaceBasis> {
    let gamma = mu.kernel_at(m, tol_rank)?;
    let iso0 = adaptor.base_isotropy(tol_rank)?;
    if iso0.dim() == 0 {
        return Ok(gamma);
    }
    let gen = mu.action().generator_matrix(m);
    let vert = &gen * adaptor.ad_phi(m)? * iso0.matrix();
    let vert_basis = scaled_range(&vert, tol_rank * norm2(&gen).max(1.0))?;
    let sum = gamma.sum(&vert_basis, tol_rank)?;
    if sum.dim() != gamma.dim() + vert_basis.dim() {
        return Err(Error::Contract(format!(
            "Γ and the adapted isotropy directions overlap: {} + {} > {}",
            gamma.dim(),
            vert_basis.dim(),
            sum.dim()
        )));
    }
    Ok(sum)
}

/// Range of `a` keeping singular directions above an absolute threshold.
fn scaled_range(a: &DMatrix<f64>, threshold: f64) -> Result<SubspaceBasis> {
    let svd = a.clone().svd(true, false);
    let u = svd
        .u
        .ok_or_else(|| Error::Internal("SVD without U".into()))?;
    let keep: Vec<DVector<f64>> = (0..svd.singular_values.len())
        .filter(|&j| svd.singular_values[j] > threshold)
        .map(|j| u.column(j).into_owned())
        .collect();
    if keep.is_empty() {
        return Ok(SubspaceBasis::zero(a.nrows()));
    }
    SubspaceBasis::from_vectors(a.nrows(), &keep, 1e-12)
}

/// A parametrized candidate slice `ψ: B_r ⊂ ℝᵏ → M` through `ψ(0)`.
#[derive(Clone)]
pub struct SliceCandidate {
    label: String,
    manifold: Manifold,
    param_dim: usize,
    radius: f64,
    psi: ParamMap,
    tangent: Option<ParamTangent>,
    guess: Option<ParamGuess>,
}

impl fmt::Debug for SliceCandidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SliceCandidate")
            .field("label", &self.label)
            .field("param_dim", &self.param_dim)
            .field("radius", &self.radius)
            .finish()
    }
}

impl SliceCandidate {
    pub fn new(
        label: impl Into<String>,
        manifold: Manifold,
        param_dim: usize,
        radius: f64,
        psi: ParamMap,
    ) -> Self {
        Self {
            label: label.into(),
            manifold,
            param_dim,
            radius,
            psi,
            tangent: None,
            guess: None,
        }
    }

    /// Closed-form `dψ` in tangent coordinates (tangent dim × param dim).
    pub fn with_tangent(mut self, tangent: ParamTangent) -> Self {
        self.tangent = Some(tangent);
        self
    }

    /// Starting parameters for point recovery.
    pub fn with_guess(mut self, guess: ParamGuess) -> Self {
        self.guess = Some(guess);
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn param_dim(&self) -> usize {
        self.param_dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn base(&self) -> ManifoldPoint {
        self.point(&DVector::zeros(self.param_dim))
    }

    pub fn point(&self, p: &DVector<f64>) -> ManifoldPoint {
        (self.psi)(p)
    }

    /// `dψ(p)` by central differences of the stored coordinates.
    pub fn tangent_fd(&self, p: &DVector<f64>) -> DMatrix<f64> {
        let at = self.point(p);
        let mut out = DMatrix::zeros(self.manifold.coord_dim(), self.param_dim);
        for j in 0..self.param_dim {
            let mut e = DVector::zeros(self.param_dim);
            e[j] = MAP_STEP;
            let w = (self.point(&(p + &e)).coords() - self.point(&(p - &e)).coords())
                / (2.0 * MAP_STEP);
            out.set_column(j, &self.manifold.velocity_to_tangent(&at, &w));
        }
        out
    }

    pub fn tangent(&self, p: &DVector<f64>) -> DMatrix<f64> {
        match &self.tangent {
            Some(t) => t(p),
            None => self.tangent_fd(p),
        }
    }

    /// Gauss–Newton inversion of `ψ`: parameters and the remaining distance to `m`.
    pub fn recover(&self, m: &ManifoldPoint) -> Result<(DVector<f64>, f64)> {
        let mut p = match &self.guess {
            Some(g) => g(m),
            None => DVector::zeros(self.param_dim),
        };
        for _ in 0..60 {
            let r = self.point(&p).coords() - m.coords();
            let mut j = DMatrix::zeros(r.len(), self.param_dim);
            for k in 0..self.param_dim {
                let mut e = DVector::zeros(self.param_dim);
                e[k] = MAP_STEP;
                j.set_column(
                    k,
                    &((self.point(&(&p + &e)).coords() - self.point(&(&p - &e)).coords())
                        / (2.0 * MAP_STEP)),
                );
            }
            let step = pseudo_inverse(&j, 1e-10)? * r;
            p -= &step;
            if step.norm() < 1e-15 {
                break;
            }
        }
        let dist = self.point(&p).distance(m);
        Ok((p, dist))
    }

    /// `m ∈ S` at the recovery tolerance with parameters inside the ball.
    pub fn contains(&self, m: &ManifoldPoint, tol: f64) -> Result<bool> {
        let (p, d) = self.recover(m)?;
        Ok(d < tol && p.norm() < self.radius)
    }
}

fn perpendicular_basis(sigma: &Vector3<f64>) -> DMatrix<f64> {
    let k = sigma.iamin();
    let mut e = Vector3::zeros();
    e[k] = 1.0;
    let a = sigma.cross(&e).normalize();
    let b = sigma.cross(&a);
    DMatrix::from_columns(&[
        DVector::from_column_slice(a.as_slice()),
        DVector::from_column_slice(b.as_slice()),
    ])
}

fn to_vec3(v: &DVector<f64>) -> Vector3<f64> {
    Vector3::new(v[0], v[1], v[2])
}

/// `S = {cay(η) g₀ : η ⟂ σ, ‖η‖ < r}`, parametrized by an orthonormal basis of `σ⊥`.
pub fn cayley_slice(sigma: &Vector3<f64>, g0: &Matrix3<f64>, r: f64) -> Result<SliceCandidate> {
    if (sigma.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::Input(format!(
            "σ must be a unit vector, |σ| = {}",
            sigma.norm()
        )));
    }
    if !(r > 0.0 && r < 2.0) {
        return Err(Error::Input(format!(
            "Cayley slice radius must lie in (0, 2), got {r}"
        )));
    }
    normalizer_sign(sigma, g0)?;
    let b = perpendicular_basis(sigma);
    let (b1, b2, b3) = (b.clone(), b.clone(), b.clone());
    let g0 = *g0;
    let psi: ParamMap =
        Arc::new(move |p| ManifoldPoint::from_rotation(&(cay(&to_vec3(&(&b1 * p))) * g0)));
    let tangent: ParamTangent = Arc::new(move |p| {
        let eta = to_vec3(&(&b2 * p));
        let d = dnat_cay(&eta);
        DMatrix::from_iterator(3, 3, d.iter().cloned()) * &b2
    });
    let guess: ParamGuess =
        Arc::new(
            move |m| match cay_inverse(&(m.rotation() * g0.transpose())) {
                Ok(eta) => b3.transpose() * DVector::from_column_slice(eta.as_slice()),
                Err(_) => DVector::zeros(2),
            },
        );
    Ok(
        SliceCandidate::new("cayley", Manifold::Group(crate::groups::so3()), 2, r, psi)
            .with_tangent(tangent)
            .with_guess(guess),
    )
}

/// `±1` according to `g₀σ = ±σ`; errors outside the normalizer case.
pub fn normalizer_sign(sigma: &Vector3<f64>, g0: &Matrix3<f64>) -> Result<f64> {
    let gs = g0 * sigma;
    if (gs - sigma).norm() < 1e-10 {
        Ok(1.0)
    } else if (gs + sigma).norm() < 1e-10 {
        Ok(-1.0)
    } else {
        Err(Error::Input("g₀ must map σ to ±σ".into()))
    }
}

/// A full neighborhood chart `v ↦ R_{m₀}(v)`, a non-slice used as a negative control.
pub fn neighborhood_chart(manifold: Manifold, base: ManifoldPoint, radius: f64) -> SliceCandidate {
    let t = manifold.tangent_basis(&base);
    let dim = t.ncols();
    let man = manifold.clone();
    SliceCandidate::new(
        "neighborhood",
        manifold,
        dim,
        radius,
        Arc::new(move |p| man.retract(&base, &(&t * p))),
    )
}

/// The orbit map `ξ ↦ exp(ξ)·m₀`, a non-slice used as a negative control.
pub fn orbit_chart(action: Arc<dyn Action>, base: ManifoldPoint, radius: f64) -> SliceCandidate {
    let dim = action.algebra().dim();
    let man = action.manifold().clone();
    SliceCandidate::new(
        "orbit",
        man,
        dim,
        radius,
        Arc::new(move |p| action.apply(&action.algebra().exp(p), &base)),
    )
}

/// Slice conditions (i)–(iii) at sampled points of `S`.
pub fn slice_verify(
    slice: &SliceCandidate,
    action: &dyn Action,
    samples: usize,
    rng: &mut SampleRng,
    tol: &Tolerances,
) -> Result<Vec<CheckRecord>> {
    let prefix = format!("slice[{}]", slice.label());
    let man = action.manifold();
    let n = man.dim();
    let m0 = slice.base();
    let zero = DVector::zeros(slice.param_dim());
    let ts0 = slice.tangent(&zero);
    let orbit0 = action.generator_matrix(&m0);
    let (rs, ro) = (rank(&ts0, tol.rank)?, rank(&orbit0, tol.rank)?);
    let both = rank(&DMatrix::from_columns(&cols(&[&ts0, &orbit0])), tol.rank)?;
    let direct = rs + ro == n && both == n;

    let iso0 = isotropy_algebra(action, &m0, tol.rank)?;
    let alg = action.algebra();
    let off_iso = DMatrix::identity(alg.dim(), alg.dim()) - alg.projector(&iso0);
    let inner = 0.5 * slice.radius().min(1.0);
    let mut span_fail = 0usize;
    let mut invariant = Worst::default();
    let mut excluded_fail = 0usize;
    for _ in 0..samples {
        let p = ball(rng, slice.param_dim(), inner);
        let m = slice.point(&p);
        let ts = slice.tangent(&p);
        let span = rank(
            &DMatrix::from_columns(&cols(&[&ts, &action.generator_matrix(&m)])),
            tol.rank,
        )?;
        if span != n {
            span_fail += 1;
        }
        if iso0.dim() > 0 {
            let c = iso0.matrix() * normal_vector(rng, iso0.dim()) * 2.0;
            let h = alg.exp(&c);
            let (q, d) = slice.recover(&action.apply(&h, &m))?;
            let outside = if q.norm() < slice.radius() { 0.0 } else { 1.0 };
            invariant.update(d + outside, p.as_slice());
        }
        let xi = &off_iso * normal_vector(rng, alg.dim());
        if xi.norm() > 1e-6 {
            let t = uniform(rng, 0.05, 0.3);
            let g = alg.exp(&(xi.normalize() * t));
            let gm = action.apply(&g, &m);
            if gm.distance(&m) > 1e-8 && slice.contains(&gm, 1e-8)? {
                excluded_fail += 1;
            }
        }
    }
    let base = m0.coords().as_slice();
    let mut out = vec![
        CheckRecord::flag(
            format!("{prefix}.i-direct-sum"),
            "T_{m₀}M = T_{m₀}S ⊕ 𝔤̃|_{m₀}",
            base,
            direct,
        ),
        CheckRecord::new(
            format!("{prefix}.ii-spanning"),
            "T_mM = T_mS + 𝔤̃|_m",
            base,
            span_fail as f64,
            0.0,
        ),
        CheckRecord::new(
            format!("{prefix}.iii-excludes-nonisotropy"),
            "g·m ∈ S only if g ∈ G_{m₀}",
            base,
            excluded_fail as f64,
            0.0,
        ),
    ];
    if iso0.dim() > 0 {
        out.push(invariant.record(
            &format!("{prefix}.iii-isotropy-invariant"),
            "h·m ∈ S for h ∈ G_{m₀}",
            1e-8,
        ));
    }
    Ok(out)
}

fn cols(ms: &[&DMatrix<f64>]) -> Vec<DVector<f64>> {
    ms.iter()
        .flat_map(|m| (0..m.ncols()).map(move |j| m.column(j).into_owned()))
        .collect()
}

/// Involutivity of the almost-horizontal system `Ξ = ker μ̃` at sampled points.
pub fn abel_involutivity(
    form: &AdaptedForm,
    points: &[ManifoldPoint],
    rng: &mut SampleRng,
    tol: &Tolerances,
) -> Result<Vec<CheckRecord>> {
    let mu = form.base_form();
    let man = mu.action().manifold();
    let mu_t = form.as_dual_form();
    let mut annihilated = Worst::default();
    let mut in_xi = Worst::default();
    let mut same = Worst::default();
    let mut correction = Worst::default();
    for m in points {
        let w1 = man.random_tangent(m, rng);
        let w2 = man.random_tangent(m, rng);
        let x = |p: &ManifoldPoint| form.kernel_projector(p).map(|k| k * &w1);
        let y = |p: &ManifoldPoint| form.kernel_projector(p).map(|k| k * &w2);
        let (xm, ym) = (x(m)?, y(m)?);
        for s in [tol.fd_step_nested, -tol.fd_step_nested] {
            x(&man.retract(m, &(&ym * s)))?;
            y(&man.retract(m, &(&xm * s)))?;
            x(&man.retract(m, &(&xm * s)))?;
        }
        let xf = |p: &ManifoldPoint| x(p).expect("checked above");
        let yf = |p: &ManifoldPoint| y(p).expect("checked above");
        let br = field_bracket(man, m, &xf, &yf, tol.fd_step_nested);
        let at = m.coords().as_slice();
        annihilated.update(mu_t.apply(m, &br).norm(), at);
        in_xi.update(form.kernel_at(m)?.distance(&br)?, at);
        same.update(
            field_bracket(man, m, &xf, &xf, tol.fd_step_nested).norm(),
            at,
        );
        correction.update(correction_terms(form, m, &xm, &ym, tol)?, at);
    }
    Ok(vec![
        annihilated.record("abel.bracket-annihilated", "μ̃([X, Y]) = 0", tol.structure),
        in_xi.record("abel.bracket-in-xi", "[X, Y] ∈ Ξ", tol.structure),
        same.record("abel.self-bracket", "[X, X] = 0", tol.eq),
        correction.record(
            "abel.correction-terms",
            "dχ_φ(u)πη − dχ_φ(v)πξ = 0 on Ξ",
            tol.structure,
        ),
    ])
}

/// `‖dχ_φ(u)πη − dχ_φ(v)πξ‖` with `χ_φ ξ = μ(u)`, `χ_φ η = μ(v)` for `u, v ∈ Ξ`.
fn correction_terms(
    form: &AdaptedForm,
    m: &ManifoldPoint,
    u: &DVector<f64>,
    v: &DVector<f64>,
    tol: &Tolerances,
) -> Result<f64> {
    let mu = form.base_form();
    let man = mu.action().manifold();
    let chi = form.chi_phi(m)?.matrix;
    let pinv = pseudo_inverse(&chi, tol.rank)?;
    let xi = &pinv * mu.apply(m, u);
    let eta = &pinv * mu.apply(m, v);
    let h = tol.fd_step;
    let dchi = |w: &DVector<f64>| -> Result<DMatrix<f64>> {
        let p = form.chi_phi(&man.retract(m, &(w * h)))?.matrix;
        let q = form.chi_phi(&man.retract(m, &(w * -h)))?.matrix;
        Ok((p - q) / (2.0 * h))
    };
    let pi = form.pi();
    Ok((dchi(u)? * pi * eta - dchi(v)? * pi * xi).norm())
}

/// `r(g) = ⟨σ, gσ⟩`.
pub fn s1s1_r(sigma: &Vector3<f64>, g: &Matrix3<f64>) -> f64 {
    sigma.dot(&(g * sigma))
}

/// `χ(g) = [[1, −r], [−r, 1]]`.
pub fn s1s1_chi(r: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[1.0, -r, -r, 1.0])
}

/// `(ν₊, λ₊)` and `(ν₋, λ₋)` with `ν± = (1, ±1)`, `λ± = 1 ∓ r`.
pub fn s1s1_eigen(r: f64) -> [(DVector<f64>, f64); 2] {
    [
        (DVector::from_vec(vec![1.0, 1.0]), 1.0 - r),
        (DVector::from_vec(vec![1.0, -1.0]), 1.0 + r),
    ]
}

/// The rotation example at `g₀` with `g₀σ = ±σ`: simple mechanical μ, trivial
/// adaptor, `π = ½χ(g₀)` and `ι(g) = 1/λ∓(g)`.
pub fn s1s1_example(
    sigma: &Vector3<f64>,
    g0: &Matrix3<f64>,
    tol: &Tolerances,
) -> Result<(Arc<dyn Action>, AdaptedForm)> {
    let sign = normalizer_sign(sigma, g0)?;
    let action: Arc<dyn Action> = Arc::new(s1s1_on_so3(sigma));
    let base = ManifoldPoint::from_rotation(g0);
    let mu = simple_mechanical_mu(action.clone());
    let adaptor = Adaptor::trivial(action.clone(), base.clone());
    let pi = mu.inertia_matrix(&base) * 0.5;
    let s = *sigma;
    let iota: MatrixField = Arc::new(move |m| {
        let lambda = 1.0 + sign * s1s1_r(&s, &m.rotation());
        DMatrix::identity(2, 2) / lambda
    });
    let form = adapted_dual_form(&mu, &adaptor, pi, iota, &[base], tol)?;
    Ok((action, form))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::rotation_about;
    use crate::sampling::rng;

    fn g_plus() -> Matrix3<f64> {
        rotation_about(&Vector3::z(), 0.7)
    }

    fn g_minus() -> Matrix3<f64> {
        rotation_about(&Vector3::x(), std::f64::consts::PI) * rotation_about(&Vector3::z(), 0.3)
    }

    #[test]
    fn trivial_adaptor_leaves_inertia_unchanged() {
        let tol = Tolerances::default();
        let (action, form) = s1s1_example(&Vector3::z(), &g_plus(), &tol).unwrap();
        let m = ManifoldPoint::from_rotation(&(rotation_about(&Vector3::x(), 0.2) * g_plus()));
        let chi = form.chi_phi(&m).unwrap().matrix;
        let mu = simple_mechanical_mu(action);
        assert!((chi - mu.inertia_matrix(&m)).norm() < 1e-14);
    }

    #[test]
    fn inertia_at_normalizer_points() {
        let tol = Tolerances::default();
        for (g0, nu) in [(g_plus(), [1.0, -1.0]), (g_minus(), [1.0, 1.0])] {
            let (_, form) = s1s1_example(&Vector3::z(), &g0, &tol).unwrap();
            let chi = form
                .chi_phi(&ManifoldPoint::from_rotation(&g0))
                .unwrap()
                .matrix;
            let nu = DVector::from_vec(nu.to_vec());
            assert!((chi - &nu * nu.transpose()).norm() < 1e-12);
        }
    }

    #[test]
    fn eigenstructure_matches_closed_form() {
        let sigma = Vector3::z();
        let action: Arc<dyn Action> = Arc::new(s1s1_on_so3(&sigma));
        let mu = simple_mechanical_mu(action.clone());
        let mut r = rng(3);
        for _ in 0..20 {
            let m = action.sample_point(&mut r);
            let rr = s1s1_r(&sigma, &m.rotation());
            let chi = mu.inertia_matrix(&m);
            assert!((&chi - s1s1_chi(rr)).norm() < 1e-12);
            for (nu, l) in s1s1_eigen(rr) {
                assert!((&chi * &nu - nu * l).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn adapted_form_has_constant_rank_and_expected_kernel() {
        let tol = Tolerances::default();
        let sigma = Vector3::z();
        let (action, form) = s1s1_example(&sigma, &g_plus(), &tol).unwrap();
        let mut r = rng(5);
        for k in 0..30 {
            let m = if k == 0 {
                ManifoldPoint::from_rotation(&g_plus())
            } else {
                action.manifold().retract(
                    &ManifoldPoint::from_rotation(&g_plus()),
                    &ball(&mut r, 3, 0.5),
                )
            };
            assert_eq!(form.rank_at(&m).unwrap(), 1);
            let g = m.rotation();
            let normal = DVector::from_column_slice((sigma + g * sigma).as_slice());
            let expected = SubspaceBasis::from_spanning(&DMatrix::from_columns(&[normal]), 1e-10)
                .unwrap()
                .complement(1e-10)
                .unwrap();
            assert!(form.kernel_at(&m).unwrap().distance_to(&expected).unwrap() < 1e-8);
            let xi =
                almost_horizontal_basis(form.base_form(), form.adaptor(), &m, tol.rank).unwrap();
            assert_eq!(xi.dim(), 2);
            assert!(xi.distance_to(&expected).unwrap() < 1e-6);
            assert!(form.commutation_residual(&m).unwrap() < 1e-9);
        }
    }

    #[test]
    fn iota_contract_is_enforced() {
        let tol = Tolerances::default();
        let (_, form) = s1s1_example(&Vector3::z(), &g_plus(), &tol).unwrap();
        let base = ManifoldPoint::from_rotation(&g_plus());
        let bad: MatrixField = Arc::new(|_| DMatrix::identity(2, 2) * 3.0);
        let err = adapted_dual_form(
            form.base_form(),
            form.adaptor(),
            form.pi().clone(),
            bad,
            &[base],
            &tol,
        );
        assert!(matches!(err, Err(Error::Input(_))));
    }

    #[test]
    fn cayley_slice_basics() {
        let sigma = Vector3::z();
        assert!(matches!(
            cayley_slice(&sigma, &g_plus(), 2.0),
            Err(Error::Input(_))
        ));
        assert!(cayley_slice(&sigma, &rotation_about(&Vector3::x(), 0.4), 1.0).is_err());
        let s = cayley_slice(&sigma, &g_plus(), 1.0).unwrap();
        assert!(s.base().rotation().relative_eq(&g_plus(), 1e-14, 1e-14));
        let mut r = rng(9);
        for _ in 0..20 {
            let p = ball(&mut r, 2, 0.8);
            assert!((s.tangent(&p) - s.tangent_fd(&p)).norm() < 1e-8);
            let (q, d) = s.recover(&s.point(&p)).unwrap();
            assert!(d < 1e-12 && (q - p).norm() < 1e-10);
        }
    }

    #[test]
    fn cayley_slice_passes_and_controls_fail() {
        let tol = Tolerances::default();
        let sigma = Vector3::z();
        for g0 in [g_plus(), g_minus()] {
            let (action, _) = s1s1_example(&sigma, &g0, &tol).unwrap();
            let s = cayley_slice(&sigma, &g0, 1.0).unwrap();
            let recs = slice_verify(&s, action.as_ref(), 20, &mut rng(11), &tol).unwrap();
            assert_eq!(recs.len(), 4);
            assert!(recs.iter().all(|c| c.passed), "{recs:?}");
        }
        let (action, _) = s1s1_example(&sigma, &g_plus(), &tol).unwrap();
        let base = ManifoldPoint::from_rotation(&g_plus());
        let nb = neighborhood_chart(action.manifold().clone(), base, 0.5);
        let recs = slice_verify(&nb, action.as_ref(), 5, &mut rng(1), &tol).unwrap();
        assert!(!recs[0].passed);
        let generic = ManifoldPoint::from_rotation(&rotation_about(&Vector3::x(), 0.6));
        let orbit = orbit_chart(action.clone(), generic, 0.5);
        let recs = slice_verify(&orbit, action.as_ref(), 5, &mut rng(1), &tol).unwrap();
        assert!(!recs[0].passed);
    }

    #[test]
    fn almost_horizontal_system_is_involutive() {
        let tol = Tolerances::default();
        let (action, form) = s1s1_example(&Vector3::z(), &g_plus(), &tol).unwrap();
        let base = ManifoldPoint::from_rotation(&g_plus());
        let mut r = rng(21);
        let points: Vec<_> = (0..10)
            .map(|_| action.manifold().retract(&base, &ball(&mut r, 3, 0.3)))
            .collect();
        let recs = abel_involutivity(&form, &points, &mut r, &tol).unwrap();
        assert!(recs.iter().all(|c| c.passed), "{recs:?}");
    }

    #[test]
    fn trivial_adaptor_verifies() {
        let tol = Tolerances::default();
        let (action, form) = s1s1_example(&Vector3::z(), &g_plus(), &tol).unwrap();
        let base = ManifoldPoint::from_rotation(&g_plus());
        let mut r = rng(2);
        let points: Vec<_> = (0..10)
            .map(|_| action.manifold().retract(&base, &ball(&mut r, 3, 0.3)))
            .collect();
        let iso = form.adaptor().base_isotropy(tol.rank).unwrap();
        let hs: Vec<_> = (0..3)
            .map(|_| {
                action
                    .algebra()
                    .exp(&(iso.matrix() * normal_vector(&mut r, 1)))
            })
            .collect();
        let recs = form
            .adaptor()
            .verify("s1s1", &points, &hs, tol.rank)
            .unwrap();
        assert!(recs.iter().all(|c| c.passed), "{recs:?}");
        let xi = almost_horizontal_basis(form.base_form(), form.adaptor(), &points[0], tol.rank)
            .unwrap();
        assert_eq!(
            form.adaptor()
                .bracket_condition_residual(&points[0], &xi, tol.rank)
                .unwrap(),
            0.0
        );
    }
}
