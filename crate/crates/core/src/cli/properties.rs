//! Property suites run across every built-in dual connection form.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use std::sync::Arc;

use super::ScenarioConfig;
use crate::actions::{
    action_by_name, is_regular, isotropy_algebra, Action, ManifoldPoint, ACTION_NAMES,
};
use crate::connections::{
    mu_q, projection_p_mu, push_forward_matrix, simple_mechanical_mu, DualForm,
};
use crate::curvature::{
    annihilator_residual, docile, interior_product_residual, involutivity_check,
    structure_residual, tame,
};
use crate::error::Result;
use crate::linalg::{rank, singular_values, Tolerances};
use crate::report::{CheckRecord, Worst};
use crate::sampling::{normal_vector, SampleRng};

pub type PointSampler = Arc<dyn Fn(&mut SampleRng) -> ManifoldPoint + Send + Sync>;

/// A dual connection form with the sampler used for its generic points.
#[derive(Clone)]
pub struct FormCase {
    pub form: DualForm,
    pub sampler: PointSampler,
}

impl FormCase {
    fn generic(form: DualForm) -> Self {
        let a = form.action_arc();
        Self {
            form,
            sampler: Arc::new(move |r| a.sample_point(r)),
        }
    }

    pub fn id(&self) -> String {
        format!("{}.{}", self.form.action().name(), self.form.label())
    }

    pub fn sample(&self, rng: &mut SampleRng) -> ManifoldPoint {
        (self.sampler)(rng)
    }
}

/// Simple mechanical forms of every action, `μ^q` for three profiles, and the
/// tamed forms of the two left-right actions.
pub fn builtin_forms(rng: &mut SampleRng) -> Result<Vec<FormCase>> {
    let mut out = Vec::new();
    for name in ACTION_NAMES {
        out.push(FormCase::generic(simple_mechanical_mu(action_by_name(
            name,
        )?)));
    }
    out.push(FormCase::generic(mu_q(Arc::new(|_| 1.0), "1")?));
    out.push(FormCase::generic(mu_q(Arc::new(|t| t), "t")?));
    out.push(FormCase::generic(mu_q(Arc::new(|t| 1.0 + t), "1+t")?));
    for name in ["hxh-on-su3", "s1s1-on-so3"] {
        let a = action_by_name(name)?;
        let probes: Vec<ManifoldPoint> = (0..4).map(|_| a.sample_point(rng)).collect();
        out.push(FormCase::generic(tame(&simple_mechanical_mu(a), &probes)?));
    }
    Ok(out)
}

/// Rank of `a` on the orthonormal tangent basis `t`; the threshold is absolute
/// since projectors have unit scale and a vanishing image must count as rank 0.
fn tangent_rank(a: &DMatrix<f64>, t: &DMatrix<f64>, tol_rank: f64) -> usize {
    singular_values(&(a * t))
        .iter()
        .filter(|s| **s > tol_rank)
        .count()
}

/// Idempotency, equivariance and dimension identities of `P_μ` for the
/// simple mechanical form of `action`.
pub fn projection_suite(
    action: Arc<dyn Action>,
    samples: usize,
    rng: &mut SampleRng,
    tol: &Tolerances,
) -> Result<Vec<CheckRecord>> {
    let prefix = format!("projection.{}", action.name());
    let mu = simple_mechanical_mu(action.clone());
    let man = action.manifold();
    let n = man.dim();
    let gdim = action.algebra().dim();
    let mut idem = Worst::default();
    let mut equi = Worst::default();
    let mut dims = Worst::default();
    let mut dim_failures = 0usize;
    for _ in 0..samples {
        let m = action.sample_point(rng);
        let g = action.sample_group(rng);
        let at = m.coords().as_slice();
        let t = man.tangent_projector(&m);
        let tb = man.tangent_basis(&m);
        let p = projection_p_mu(&mu, &m, tol)? * &t;
        idem.update((&p * &p - &p).norm(), at);

        let gm = action.apply(&g, &m);
        let p_gm = projection_p_mu(&mu, &gm, tol)? * man.tangent_projector(&gm);
        let phi = push_forward_matrix(action.as_ref(), &g, &m);
        equi.update((&phi * &p - &p_gm * &phi).norm(), at);

        let orbit = gdim - isotropy_algebra(action.as_ref(), &m, tol.rank)?.dim();
        let image = tangent_rank(&p, &tb, tol.rank);
        let gamma = tangent_rank(&(&t - &p), &tb, tol.rank);
        let range_mu = rank(&(mu.matrix(&m) * &tb), tol.rank)?;
        if image != orbit || gamma != n - orbit || range_mu != orbit {
            dim_failures += 1;
            dims.update(dim_failures as f64, at);
        }
    }
    if dim_failures == 0 {
        dims.update(0.0, &[]);
    }
    Ok(vec![
        idem.record(&format!("{prefix}.idempotent"), "P_μ ∘ P_μ = P_μ", 1e-9),
        equi.record(
            &format!("{prefix}.equivariant"),
            "dΦ_g ∘ P_μ = P_μ ∘ dΦ_g",
            1e-8,
        ),
        dims.record(
            &format!("{prefix}.dimensions"),
            "rank P_μ = dim orbit, rank P_Γ = dim M − dim orbit",
            0.0,
        ),
    ])
}

/// Smallest admissible ratio of the extreme nonzero singular values of `χ(m)`.
///
/// Samples closer to the singular stratum than this are not regular in any
/// numerically useful sense: differenced identities lose accuracy in
/// proportion to the condition number of `χ`.
pub const CONDITIONING_MARGIN: f64 = 1e-3;

/// Whether `χ(m)` is well conditioned on its range.
pub fn well_conditioned(form: &DualForm, m: &ManifoldPoint, tol: &Tolerances) -> bool {
    let sv = singular_values(&form.inertia_matrix(m));
    let top = sv.first().copied().unwrap_or(0.0);
    let low = sv
        .iter()
        .copied()
        .filter(|s| *s > tol.rank * top.max(1.0))
        .fold(f64::INFINITY, f64::min);
    top == 0.0 || low >= CONDITIONING_MARGIN * top
}

/// Samples points of `case` until `want` docile, well-conditioned ones are found
/// or the budget runs out.
fn docile_points(
    case: &FormCase,
    want: usize,
    rng: &mut SampleRng,
    tol: &Tolerances,
) -> Result<Vec<ManifoldPoint>> {
    let mut out = Vec::with_capacity(want);
    for _ in 0..4 * want {
        if out.len() == want {
            break;
        }
        let m = case.sample(rng);
        if well_conditioned(&case.form, &m, tol) && docile(&case.form, &m, tol)?.docile {
            out.push(m);
        }
    }
    Ok(out)
}

/// Structure equation of the curvature at docile points.
pub fn structure_suite(
    case: &FormCase,
    samples: usize,
    rng: &mut SampleRng,
    tol: &Tolerances,
) -> Result<Vec<CheckRecord>> {
    let prefix = format!("structure.{}", case.id());
    let man = case.form.action().manifold();
    let points = docile_points(case, samples, rng, tol)?;
    let mut worst = Worst::default();
    for m in &points {
        let u = man.random_tangent(m, rng);
        let v = man.random_tangent(m, rng);
        worst.update(
            structure_residual(&case.form, m, &u, &v, tol)?,
            m.coords().as_slice(),
        );
    }
    Ok(vec![
        worst.record(
            &format!("{prefix}.residual"),
            "Ω(u,v) + [ξ,η]_M = γ(dμ(u,v) − dχ(u)η + dχ(v)ξ)",
            tol.structure,
        ),
        CheckRecord::new(
            format!("{prefix}.docile-samples"),
            "structure equation sampled at docile points",
            &[],
            (samples - points.len()) as f64,
            0.0,
        ),
    ])
}

/// Interior product identity at generic points and the annihilator property at
/// points with nontrivial isotropy.
pub fn interior_product_suite(
    case: &FormCase,
    samples: usize,
    rng: &mut SampleRng,
    tol: &Tolerances,
) -> Result<Vec<CheckRecord>> {
    let prefix = format!("interior.{}", case.id());
    let a = case.form.action();
    let man = a.manifold();
    let gdim = a.algebra().dim();
    let mut interior = Worst::default();
    let mut annihilator = Worst::default();
    let mut isotropic = false;
    for _ in 0..samples {
        let m = case.sample(rng);
        let eta = normal_vector(rng, gdim);
        let v = man.random_tangent(&m, rng);
        interior.update(
            interior_product_residual(&case.form, &m, &eta, &v, tol.fd_step),
            m.coords().as_slice(),
        );

        let Some(p) = a.sample_isotropic_point(rng) else {
            continue;
        };
        let iso = isotropy_algebra(a, &p, tol.rank)?;
        let ker = case.form.kernel_at(&p, tol.rank)?;
        if iso.dim() == 0 {
            continue;
        }
        isotropic = true;
        let zeta = iso.matrix() * normal_vector(rng, iso.dim());
        let u = if ker.dim() == 0 {
            DVector::zeros(man.coord_dim())
        } else {
            ker.matrix() * normal_vector(rng, ker.dim())
        };
        annihilator.update(
            annihilator_residual(&case.form, &p, &u, &zeta, tol.fd_step),
            p.coords().as_slice(),
        );
    }
    let mut out = vec![interior.record(
        &format!("{prefix}.identity"),
        "i_{η_M} dμ = −ad*_η μ − dχ(·)η",
        1e-6,
    )];
    if isotropic {
        out.push(annihilator.record(
            &format!("{prefix}.annihilator"),
            "dχ(u)ζ = 0 for u ∈ ker μ, ζ ∈ 𝔤_m",
            1e-6,
        ));
    }
    Ok(out)
}

/// `Ω(X, Y) = (P_Γ − 1)[X, Y]` for projected coordinate fields at regular docile points.
pub fn involutivity_suite(
    case: &FormCase,
    samples: usize,
    rng: &mut SampleRng,
    tol: &Tolerances,
) -> Result<Vec<CheckRecord>> {
    let prefix = format!("involutivity.{}", case.id());
    let a = case.form.action();
    let man = a.manifold();
    let mut horizontal = Worst::default();
    let mut identity = Worst::default();
    let mut found = 0usize;
    for _ in 0..4 * samples {
        if found == samples {
            break;
        }
        let m = case.sample(rng);
        if !well_conditioned(&case.form, &m, tol)
            || !is_regular(a, &m, 1e-3, 4, tol.rank, rng)?
            || !docile(&case.form, &m, tol)?.docile
        {
            continue;
        }
        found += 1;
        let tb = man.tangent_basis(&m);
        let k = tb.ncols();
        if k < 2 {
            horizontal.update(0.0, m.coords().as_slice());
            identity.update(0.0, m.coords().as_slice());
            continue;
        }
        let i = rng.random_range(0..k);
        let j = (i + rng.random_range(1..k)) % k;
        let (w1, w2) = (tb.column(i).into_owned(), tb.column(j).into_owned());
        let r = involutivity_check(&case.form, &m, &w1, &w2, tol)?;
        horizontal.update(r.horizontal, m.coords().as_slice());
        identity.update(r.identity, m.coords().as_slice());
    }
    Ok(vec![
        horizontal.record(
            &format!("{prefix}.horizontal"),
            "μ(Ω(X,Y) + [X,Y]) = 0",
            1e-5,
        ),
        identity.record(
            &format!("{prefix}.identity"),
            "Ω(X,Y) = (P_Γ − 1)[X,Y]",
            1e-5,
        ),
        CheckRecord::new(
            format!("{prefix}.regular-samples"),
            "involutivity sampled at regular points",
            &[],
            (samples - found) as f64,
            0.0,
        ),
    ])
}

/// Every cross-form suite with its default sample counts.
pub fn all(config: &ScenarioConfig) -> Result<Vec<CheckRecord>> {
    let tol = &config.tolerances;
    let mut out = Vec::new();
    let mut r = config.stream(100);
    let forms = builtin_forms(&mut r)?;
    for (k, name) in ACTION_NAMES.iter().enumerate() {
        let mut r = config.stream(200 + k as u64);
        out.extend(projection_suite(
            action_by_name(name)?,
            config.count(1000),
            &mut r,
            tol,
        )?);
    }
    for (k, case) in forms.iter().enumerate() {
        let mut r = config.stream(300 + k as u64);
        out.extend(structure_suite(case, config.count(100), &mut r, tol)?);
        let mut r = config.stream(400 + k as u64);
        out.extend(interior_product_suite(
            case,
            config.count(200),
            &mut r,
            tol,
        )?);
        let mut r = config.stream(500 + k as u64);
        out.extend(involutivity_suite(case, config.count(50), &mut r, tol)?);
    }
    Ok(out)
}
