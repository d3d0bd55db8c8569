//! The worked-example scenarios.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use std::f64::consts::{FRAC_PI_3, PI};
use std::sync::Arc;

use super::properties::projection_suite;
use super::ScenarioConfig;
use crate::actions::{
    action_by_name, hxh_on_su3, isotropy_algebra, vertical_rotation, Action, Manifold,
    ManifoldPoint,
};
use crate::connections::{
    alpha_so3r3, clean_alpha, dual_form_verify, mu_q, pair_check, simple_mechanical_mu,
    MatrixField, ScalarFn,
};
use crate::curvature::{
    curvature, curvature_leftright_closed, curvature_table, d_oneform, docile, tame,
};
use crate::error::Result;
use crate::frames::{
    beta_equivariance_check, dnat_curve, dnat_rho, eastward_field, geodesic_curvature_residual,
    latitude_curve, pmf_from_field, random_rotation, rho_equivariance_residual, rho_us2,
    sample_triple, tangent_pair, us2_retract, PartialMovingFrame,
};
use crate::groups::{
    cay_inverse, dnat_cay, rotation_about, su3_index::*, GroupElement, LieAlgebra,
};
use crate::linalg::{range_space, singular_values, SubspaceBasis, Tolerances};
use crate::report::{CheckRecord, Worst};
use crate::sampling::{ball, normal_vector, uniform, unit3};
use crate::slices::{
    abel_involutivity, almost_horizontal_basis, cayley_slice, neighborhood_chart, orbit_chart,
    s1s1_chi, s1s1_eigen, s1s1_example, s1s1_r, slice_verify,
};

fn dv3(v: &Vector3<f64>) -> DVector<f64> {
    DVector::from_column_slice(v.as_slice())
}

fn e(n: usize, i: usize) -> DVector<f64> {
    DVector::from_fn(n, |k, _| f64::from(k == i))
}

fn q_profiles() -> Vec<(&'static str, ScalarFn)> {
    vec![
        ("1", Arc::new(|_| 1.0)),
        ("t", Arc::new(|t| t)),
        ("1+t", Arc::new(|t| 1.0 + t)),
    ]
}

/// `χ^q(m) = q(‖m‖²)(‖m‖² 1 − m mᵀ)`.
fn chi_q(q: Arc<dyn Fn(f64) -> f64 + Send + Sync>) -> MatrixField {
    Arc::new(move |m| {
        let x = m.vec3();
        let s = x.norm_squared();
        let c = (Matrix3::identity() * s - x * x.transpose()) * q(s);
        DMatrix::from_iterator(3, 3, c.iter().cloned())
    })
}

pub fn so3_r3_basics(config: &ScenarioConfig) -> Result<Vec<CheckRecord>> {
    let tol = &config.tolerances;
    let action = action_by_name("so3-on-r3")?;
    let mut out = Vec::new();
    let origin = ManifoldPoint::from_vec3(&Vector3::zeros());
    let e1 = ManifoldPoint::from_vec3(&Vector3::x());
    out.push(CheckRecord::flag(
        "isotropy.origin",
        "𝔤_0 = so(3)",
        origin.coords().as_slice(),
        isotropy_algebra(action.as_ref(), &origin, tol.rank)?.dim() == 3,
    ));
    out.push(CheckRecord::flag(
        "isotropy.e1",
        "𝔤_{e₁} = span{e₁}",
        e1.coords().as_slice(),
        isotropy_algebra(action.as_ref(), &e1, tol.rank)?
            .distance_to(&SubspaceBasis::from_vectors(3, &[e(3, 0)], tol.rank)?)?
            < 1e-12,
    ));

    let mut r = config.stream(1);
    let n = config.count(100);
    let points: Vec<ManifoldPoint> = (0..n).map(|_| action.sample_point(&mut r)).collect();
    let groups: Vec<GroupElement> = (0..n).map(|_| action.sample_group(&mut r)).collect();
    let mut gen = Worst::default();
    for m in &points {
        let xi = normal_vector(&mut r, 3);
        let x = m.vec3();
        let closed = Vector3::new(xi[0], xi[1], xi[2]).cross(&x);
        gen.update(
            (action.generator(&xi, m) - dv3(&closed)).norm(),
            m.coords().as_slice(),
        );
    }
    out.push(gen.record("generator.closed-form", "ξ_M(m) = ξ × m", 1e-12));

    for (label, q) in q_profiles() {
        let mu = mu_q(q.clone(), label)?;
        out.extend(dual_form_verify(&mu, &points, &groups, tol)?);

        let alpha = alpha_so3r3(Arc::new(|_| 1.0), "f=1");
        out.extend(pair_check(
            &format!("q={label}"),
            &alpha,
            chi_q(q.clone()),
            &points,
            std::slice::from_ref(&origin),
            &groups,
            tol,
        )?);
        let chi = chi_q(q);
        let mut fact = Worst::default();
        for m in &points {
            fact.update(
                (chi(m) * alpha.matrix(m) - mu.matrix(m)).norm(),
                m.coords().as_slice(),
            );
        }
        out.push(fact.record(
            &format!("pair.q={label}.factorization"),
            "χ^q ∘ α = μ^q",
            1e-10,
        ));
    }

    let raw = alpha_so3r3(Arc::new(|m: &Vector3<f64>| 1.0 + m.x * m.x), "f=1+x²");
    let clean = clean_alpha(&raw);
    let mut idem = Worst::default();
    let mut gen_inv = Worst::default();
    for m in &points {
        let p = clean.projection(m);
        idem.update(
            (&p * &p - &p).norm() + (clean.matrix(m) * &p - clean.matrix(m)).norm(),
            m.coords().as_slice(),
        );
        let g = action.generator_matrix(m);
        gen_inv.update((&p * &g - &g).norm(), m.coords().as_slice());
    }
    out.push(idem.record(
        "alpha.clean-idempotent",
        "P_α² = P_α and α ∘ P_α = α after cleaning",
        1e-10,
    ));
    out.push(gen_inv.record("alpha.generator", "P_α ξ_M = ξ_M", 1e-10));

    let mut r = config.stream(2);
    out.extend(projection_suite(action, config.count(200), &mut r, tol)?);
    Ok(out)
}

pub fn so3_r3_docility(config: &ScenarioConfig) -> Result<Vec<CheckRecord>> {
    let tol = &config.tolerances;
    let origin = ManifoldPoint::from_vec3(&Vector3::zeros());
    let at0 = origin.coords().as_slice();
    let mut out = Vec::new();

    let one = mu_q(Arc::new(|_| 1.0), "1")?;
    let doc = docile(&one, &origin, tol)?;
    out.push(CheckRecord::flag(
        "q=1.non-docile-at-origin",
        "μ^q docile iff q(0) = 0",
        at0,
        !doc.docile,
    ));
    let witness = match &doc.witness {
        Some((u, v, val)) => {
            let cross = Vector3::new(u[0], u[1], u[2]).cross(&Vector3::new(v[0], v[1], v[2]));
            (val - dv3(&cross) * 2.0).norm()
        }
        None => f64::INFINITY,
    };
    out.push(CheckRecord::new(
        "q=1.witness",
        "dμ(0)(u₀, v₀) = 2 u₀ × v₀",
        at0,
        witness,
        1e-6,
    ));
    let d12 = d_oneform(&one, &origin, &e(3, 0), &e(3, 1), tol.fd_step);
    out.push(CheckRecord::new(
        "q=1.d-mu-e1-e2",
        "dμ(0)(e₁, e₂) = 2 e₃",
        at0,
        (d12 - e(3, 2) * 2.0).norm(),
        1e-6,
    ));

    let lin = mu_q(Arc::new(|t| t), "t")?;
    let doc = docile(&lin, &origin, tol)?;
    out.push(CheckRecord::flag(
        "q=t.docile-at-origin",
        "μ^q docile iff q(0) = 0",
        at0,
        doc.docile,
    ));
    let omega = curvature_table(&lin, &origin, tol)
        .map(|t| t.norm())
        .unwrap_or(f64::INFINITY);
    out.push(CheckRecord::new(
        "q=t.curvature-at-origin",
        "Ω(0) = 0 for q(t) = t",
        at0,
        omega,
        1e-7,
    ));

    let affine = mu_q(Arc::new(|t| 1.0 + t), "1+t")?;
    let mut r = config.stream(3);
    let mut d_origin = Worst::default();
    for _ in 0..config.count(20) {
        let (u, v) = (unit3(&mut r), unit3(&mut r));
        let d = d_oneform(&affine, &origin, &dv3(&u), &dv3(&v), tol.fd_step);
        d_origin.update(
            (d - dv3(&u.cross(&v)) * 2.0).norm(),
            &[u.x, u.y, u.z, v.x, v.y, v.z],
        );
    }
    out.push(d_origin.record("q=1+t.d-mu-at-origin", "dμ(0)(u, v) = 2 q(0) u × v", 1e-6));

    for (label, q) in q_profiles() {
        let mu = mu_q(q, label)?;
        let mut failures = 0usize;
        let mut last = vec![];
        for _ in 0..config.count(50) {
            let m = mu.action().sample_point(&mut r);
            if !docile(&mu, &m, tol)?.docile {
                failures += 1;
                last = m.coords().as_slice().to_vec();
            }
        }
        out.push(CheckRecord::new(
            format!("q={label}.docile-away-from-origin"),
            "μ^q docile at m ≠ 0",
            &last,
            failures as f64,
            0.0,
        ));
    }
    Ok(out)
}

/// Expected curvature of a basis pair `(i, j)` with `i < j`.
fn expected_table_entry(i: usize, j: usize) -> DVector<f64> {
    match (i, j) {
        (S1, X1) => -e(8, D1),
        (S2, X2) => e(8, D1),
        (S1, X2) | (S2, X1) => -e(8, S3),
        _ => DVector::zeros(8),
    }
}

fn closed_table(
    alg: &LieAlgebra,
    h: &DMatrix<f64>,
    theta: f64,
    tol: &Tolerances,
) -> Result<Vec<(usize, usize, DVector<f64>)>> {
    let g = vertical_rotation(theta);
    let mut out = Vec::new();
    for i in 0..8 {
        for j in i + 1..8 {
            out.push((
                i,
                j,
                curvature_leftright_closed(alg, h, &g, &e(8, i), &e(8, j), tol.rank)?,
            ));
        }
    }
    Ok(out)
}

/// `(⟨h_i, v⟩, −⟨Ad_g h_i, v⟩)` for the simple mechanical form of `H × H`.
fn hxh_mu_closed(alg: &LieAlgebra, g: &ManifoldPoint, v: &DVector<f64>) -> DVector<f64> {
    let gm = g.matrix();
    let vm = alg.matrix(v);
    let mut out = DVector::zeros(4);
    for i in 0..2 {
        let h = alg.basis()[i];
        out[i] = alg.matrix_inner(&h, &vm);
        out[2 + i] = -alg.matrix_inner(&(gm * h * gm.adjoint()), &vm);
    }
    out
}

fn hxh_chi_closed(alg: &LieAlgebra, g: &ManifoldPoint) -> DMatrix<f64> {
    let gm = g.matrix();
    let h = [alg.basis()[0], alg.basis()[1]];
    let adh = h.map(|x| gm * x * gm.adjoint());
    DMatrix::from_fn(4, 4, |a, b| {
        let (i, j) = (a % 2, b % 2);
        match (a < 2, b < 2) {
            (true, true) => alg.matrix_inner(&h[i], &h[j]),
            (false, false) => alg.matrix_inner(&adh[i], &adh[j]),
            (true, false) => -alg.matrix_inner(&h[i], &adh[j]),
            (false, true) => -alg.matrix_inner(&adh[i], &h[j]),
        }
    })
}

fn hxh_dmu_closed(
    alg: &LieAlgebra,
    g: &ManifoldPoint,
    u: &DVector<f64>,
    v: &DVector<f64>,
) -> DVector<f64> {
    let gm = g.matrix();
    let br = alg.matrix(&alg.bracket(u, v));
    let back = gm.adjoint() * br * gm;
    let mut out = DVector::zeros(4);
    for i in 0..2 {
        let h = alg.basis()[i];
        out[i] = alg.matrix_inner(&h, &br);
        out[2 + i] = alg.matrix_inner(&h, &back);
    }
    out
}

pub fn hxh_su3_curvature(config: &ScenarioConfig) -> Result<Vec<CheckRecord>> {
    let tol = &config.tolerances;
    let lr = Arc::new(hxh_on_su3());
    let action: Arc<dyn Action> = lr.clone();
    let alg = lr.group_algebra();
    let h = lr.inclusion();
    let mut out = Vec::new();

    let target = SubspaceBasis::from_vectors(8, &[e(8, D1), e(8, S3)], tol.rank)?;
    for (k, theta) in [PI / 5.0, FRAC_PI_3, 1.0].into_iter().enumerate() {
        let prefix = format!("table.theta[{k}]");
        let table = closed_table(alg, h, theta, tol)?;
        let mut entries = Worst::default();
        let mut cols = DMatrix::zeros(8, table.len());
        for (c, (i, j, val)) in table.iter().enumerate() {
            let diff = val - expected_table_entry(*i, *j);
            entries.update(diff.amax(), &[theta, *i as f64, *j as f64]);
            cols.set_column(c, val);
        }
        out.push(entries.record(
            &format!("{prefix}.entries"),
            "Ω(σ₁,ξ₁) = −δ₁, Ω(σ₂,ξ₂) = δ₁, Ω(σ₁,ξ₂) = Ω(σ₂,ξ₁) = −σ₃, others 0",
            1e-9,
        ));
        let sv = singular_values(&cols);
        let s1 = sv.first().copied().unwrap_or(0.0);
        let rel = |i: usize| sv.get(i).copied().unwrap_or(0.0) / s1.max(f64::MIN_POSITIVE);
        out.push(CheckRecord::new(
            format!("{prefix}.third-singular-value"),
            "σ₃/σ₁ of the curvature table",
            &[theta],
            rel(2),
            1e-10,
        ));
        out.push(CheckRecord::flag(
            format!("{prefix}.rank-two"),
            "curvature has rank 2",
            &[theta],
            s1 > 0.0 && rel(1) > 1e-10 && rel(2) <= 1e-10,
        ));
        let range = range_space(&cols, 1e-10)?;
        let gap = if range.dim() == 2 {
            range.distance_to(&target)?
        } else {
            f64::INFINITY
        };
        out.push(CheckRecord::new(
            format!("{prefix}.range"),
            "range Ω = span{δ₁, σ₃}",
            &[theta],
            gap,
            1e-9,
        ));
        let p = ManifoldPoint::from_matrix(&vertical_rotation(theta));
        out.push(CheckRecord::flag(
            format!("{prefix}.isotropy-dim"),
            "dim 𝔤_g = 1 at g = R_z(θ)",
            &[theta],
            isotropy_algebra(action.as_ref(), &p, tol.rank)?.dim() == 1,
        ));
    }

    let mu = simple_mechanical_mu(action.clone());
    let mut r = config.stream(4);
    let probes: Vec<ManifoldPoint> = (0..4).map(|_| action.sample_point(&mut r)).collect();
    let nu = tame(&mu, &probes)?;

    let mut mu_gap = Worst::default();
    let mut chi_gap = Worst::default();
    let mut dmu_gap = Worst::default();
    for _ in 0..config.count(50) {
        let g = action.sample_point(&mut r);
        let (u, v) = (normal_vector(&mut r, 8), normal_vector(&mut r, 8));
        let at = g.coords().as_slice();
        mu_gap.update((mu.apply(&g, &u) - hxh_mu_closed(alg, &g, &u)).norm(), at);
        chi_gap.update((mu.inertia_matrix(&g) - hxh_chi_closed(alg, &g)).norm(), at);
        let d = d_oneform(&mu, &g, &u, &v, tol.fd_step);
        dmu_gap.update((d - hxh_dmu_closed(alg, &g, &u, &v)).norm(), at);
    }
    out.push(mu_gap.record("oracle.mu", "μ_g(v) = (⟨h, v⟩, −⟨Ad_g h, v⟩)", 1e-12));
    out.push(chi_gap.record(
        "oracle.chi",
        "χ(g) = [[G_h, −⟨h, Ad_g h⟩], [−⟨Ad_g h, h⟩, G_h]]",
        1e-12,
    ));
    out.push(dmu_gap.record(
        "oracle.d-mu",
        "dμ(u, v) = (⟨h, [u,v]⟩, ⟨h, Ad_{g⁻¹}[u,v]⟩)",
        1e-6,
    ));

    let mut agree = Worst::default();
    for _ in 0..config.count(50) {
        let g = action.sample_point(&mut r);
        let (xi, om) = (normal_vector(&mut r, 8), normal_vector(&mut r, 8));
        let closed = curvature_leftright_closed(alg, h, &g.matrix(), &xi, &om, tol.rank)?;
        let res = match curvature(&nu, &g, &xi, &om, tol) {
            Ok(fd) => (fd - closed).norm(),
            Err(_) => f64::INFINITY,
        };
        agree.update(res, g.coords().as_slice());
    }
    out.push(agree.record(
        "closed-vs-fd",
        "(P_𝔥 − P_{Ad_g 𝔥})[P_Γ ξ, P_Γ ω] equals the curvature of the tamed form",
        tol.structure,
    ));

    let e_pt = ManifoldPoint::from_matrix(&vertical_rotation(0.0));
    out.push(CheckRecord::flag(
        "untamed.non-docile-at-identity",
        "simple mechanical form fails docility on the normalizer",
        e_pt.coords().as_slice(),
        !docile(&mu, &e_pt, tol)?.docile,
    ));
    let mut tamed_ok = true;
    for theta in [PI / 5.0, FRAC_PI_3, 1.0] {
        let p = ManifoldPoint::from_matrix(&vertical_rotation(theta));
        tamed_ok &= docile(&nu, &p, tol)?.docile;
    }
    out.push(CheckRecord::flag(
        "tamed.docile-at-rz",
        "tamed form is docile at R_z(θ)",
        &[],
        tamed_ok,
    ));
    Ok(out)
}

pub fn s1s1_so3_slice(config: &ScenarioConfig) -> Result<Vec<CheckRecord>> {
    let tol = &config.tolerances;
    let sigma = Vector3::z();
    let g_plus = rotation_about(&sigma, 0.5);
    let base = ManifoldPoint::from_rotation(&g_plus);
    let (action, form) = s1s1_example(&sigma, &g_plus, tol)?;
    let mut out = Vec::new();

    let slice = cayley_slice(&sigma, &g_plus, 1.0)?;
    let mut r = config.stream(5);
    out.extend(slice_verify(
        &slice,
        action.as_ref(),
        config.count(50),
        &mut r,
        tol,
    )?);
    let neighborhood = neighborhood_chart(action.manifold().clone(), base.clone(), 0.5);
    let orbit = orbit_chart(
        action.clone(),
        ManifoldPoint::from_rotation(&rotation_about(&Vector3::x(), 0.8)),
        0.5,
    );
    for control in [neighborhood, orbit] {
        let rep = slice_verify(&control, action.as_ref(), 5, &mut r, tol)?;
        let direct = rep
            .iter()
            .find(|c| c.id.ends_with(".i-direct-sum"))
            .is_some_and(|c| c.passed);
        out.push(CheckRecord::flag(
            format!("control[{}].fails-direct-sum", control.label()),
            "non-slices violate the direct-sum condition",
            &[],
            !direct,
        ));
    }

    let mut tangency = Worst::default();
    let mut in_xi = Worst::default();
    let mu = form.base_form().clone();
    for _ in 0..config.count(50) {
        let p = ball(&mut r, 2, 0.5);
        let m = slice.point(&p);
        let eta = cay_inverse(&(m.rotation() * g_plus.transpose()))?;
        let eta_p = unit3(&mut r);
        let psi_sigma = m.rotation() * sigma;
        let lhs = (sigma + psi_sigma).dot(&(dnat_cay(&eta) * eta_p));
        let scaled = lhs * (1.0 + eta.norm_squared() / 4.0) / 2.0;
        tangency.update((scaled - sigma.dot(&eta_p)).abs(), p.as_slice());
        let xi = almost_horizontal_basis(&mu, form.adaptor(), &m, tol.rank)?;
        let ts = SubspaceBasis::from_spanning(&slice.tangent(&p), tol.rank)?;
        in_xi.update(xi.containment_residual(&ts)?, p.as_slice());
    }
    out.push(tangency.record(
        "cayley.tangency",
        "⟨σ ± ψσ, d^♮ψ(η)η′⟩ reduces to ⟨σ, η′⟩",
        1e-8,
    ));
    out.push(in_xi.record("cayley.tangent-in-xi", "T_{ψ(η)}S ⊆ Ξ_{ψ(η)}", 1e-8));

    let mut eig = Worst::default();
    let mut chi_oracle = Worst::default();
    for _ in 0..config.count(100) {
        let m = action.sample_point(&mut r);
        let chi = mu.inertia_matrix(&m);
        let rg = s1s1_r(&sigma, &m.rotation());
        for (nu, lambda) in s1s1_eigen(rg) {
            eig.update((&chi * &nu - &nu * lambda).norm(), m.coords().as_slice());
        }
        chi_oracle.update((&chi - s1s1_chi(rg)).norm(), m.coords().as_slice());
    }
    out.push(eig.record("chi.eigenstructure", "χ(g)ν± = (1 ∓ r(g))ν±", 1e-10));
    out.push(chi_oracle.record("chi.closed-form", "χ(g) = [[1, −r], [−r, 1]]", 1e-10));
    let nu_minus = DVector::from_vec(vec![1.0, -1.0]);
    out.push(CheckRecord::new(
        "chi.at-base",
        "χ(g₊) = ν₋ν₋ᵀ",
        base.coords().as_slice(),
        (mu.inertia_matrix(&base) - &nu_minus * nu_minus.transpose()).norm(),
        1e-10,
    ));

    let mut flat = Worst::default();
    for _ in 0..config.count(100) {
        let m = action.sample_point(&mut r);
        let n = curvature_table(&mu, &m, tol)
            .map(|t| t.norm())
            .unwrap_or(f64::INFINITY);
        flat.update(n, m.coords().as_slice());
    }
    out.push(flat.record("curvature.zero", "the curvature vanishes identically", 1e-7));

    let near: Vec<ManifoldPoint> = (0..config.count(50))
        .map(|_| {
            let xi = ball(&mut r, 3, 0.3);
            ManifoldPoint::from_rotation(
                &(crate::groups::rodrigues(&Vector3::new(xi[0], xi[1], xi[2])) * g_plus),
            )
        })
        .collect();
    let mut iota = Worst::default();
    let mut commute = Worst::default();
    let mut xi_gap = Worst::default();
    let mut xi_two_ways = Worst::default();
    let mut rank_fail = 0usize;
    for m in &near {
        let at = m.coords().as_slice();
        iota.update(form.iota_residual(m)?, at);
        commute.update(form.commutation_residual(m)?, at);
        if form.rank_at(m)? != 1 {
            rank_fail += 1;
        }
        let normal = sigma + m.rotation() * sigma;
        let closed = SubspaceBasis::from_spanning(
            &DMatrix::from_column_slice(3, 1, normal.as_slice()),
            tol.rank,
        )?
        .complement(tol.rank)?;
        let ker = form.kernel_at(m)?;
        xi_gap.update(ker.distance_to(&closed)?, at);
        xi_two_ways.update(
            ker.distance_to(&almost_horizontal_basis(&mu, form.adaptor(), m, tol.rank)?)?,
            at,
        );
    }
    out.push(iota.record("adapted.iota", "π = π ∘ ι ∘ χ_φ", 1e-9));
    out.push(commute.record("adapted.commutation", "π̃_φ ∘ χ_φ = χ_φ ∘ π", 1e-9));
    out.push(CheckRecord::new(
        "adapted.rank",
        "rank μ̃ = 1 near g₊",
        &[],
        rank_fail as f64,
        0.0,
    ));
    out.push(xi_gap.record(
        "adapted.kernel-closed-form",
        "ker μ̃ = {ξ : ⟨ξ, σ + gσ⟩ = 0}",
        1e-8,
    ));
    out.push(xi_two_ways.record("adapted.kernel-is-xi", "ker μ̃ = Γ ⊕ (Ad_φ 𝔤_{m₀})~", 1e-8));

    out.extend(abel_involutivity(&form, &near, &mut r, tol)?);

    let iso0 = isotropy_algebra(action.as_ref(), &base, tol.rank)?;
    let alg = action.algebra();
    let iso_samples: Vec<GroupElement> = (0..5)
        .map(|_| alg.exp(&(iso0.matrix() * normal_vector(&mut r, iso0.dim()))))
        .collect();
    out.extend(
        form.adaptor()
            .verify("adaptor", &near, &iso_samples, tol.rank)?,
    );
    Ok(out)
}

pub fn us2_moving_frame(config: &ScenarioConfig) -> Result<Vec<CheckRecord>> {
    let tol = &config.tolerances;
    let man = Manifold::UnitTangentSphere;
    let mut r = config.stream(6);
    let mut frame = Worst::default();
    let mut equi = Worst::default();
    let mut dnat = Worst::default();
    for _ in 0..config.count(1000) {
        let p = man.random_point(&mut r);
        let (m, u) = (p.m(), p.u());
        let at = p.coords().as_slice();
        let rho = rho_us2(&m, &u)?;
        frame.update(
            (rho.transpose() * rho - Matrix3::identity()).norm() + (rho.determinant() - 1.0).abs(),
            at,
        );
        let g = random_rotation(&mut r);
        equi.update(rho_equivariance_residual(&g, &m, &u)?, at);
        let t = man.random_tangent(&p, &mut r);
        let (dm, du) = (
            Vector3::new(t[0], t[1], t[2]),
            Vector3::new(t[3], t[4], t[5]),
        );
        let fd = dnat_curve(
            &|s| {
                let (m1, u1) = us2_retract(&m, &u, &dm, &du, s);
                rho_us2(&m1, &u1)
            },
            tol.fd_step,
        )?;
        dnat.update((fd - dnat_rho(&m, &u, &dm, &du)).norm(), at);
    }
    let mut out = vec![
        frame.record("rho.frame", "ρ(m, u) = (m, u, m × u) ∈ SO(3)", 1e-10),
        equi.record("rho.equivariance", "ρ(g·m, g·u) = g ρ(m, u)", 1e-10),
        dnat.record(
            "rho.dnat-vs-fd",
            "d^♮ρ(δm, δu) = m × δm + ⟨u × δu, m⟩ m",
            1e-6,
        ),
    ];

    let (m, u) = (Vector3::x(), Vector3::y());
    let ex = dnat_rho(&m, &u, &Vector3::z(), &Vector3::zeros());
    out.push(CheckRecord::new(
        "rho.example-e1-e2-e3",
        "d^♮ρ(e₃, 0) = −e₂ at (e₁, e₂)",
        &[],
        (ex + Vector3::y()).norm(),
        1e-14,
    ));
    let t = 0.7;
    let du = m.cross(&u) * t;
    let closed = dnat_rho(&m, &u, &Vector3::zeros(), &du);
    let fd = dnat_curve(
        &|s| {
            let (m1, u1) = us2_retract(&m, &u, &Vector3::zeros(), &du, s);
            rho_us2(&m1, &u1)
        },
        tol.fd_step,
    )?;
    out.push(CheckRecord::new(
        "rho.example-rotating-u",
        "δu = t m × u gives d^♮ρ = t m",
        &[t],
        (closed - m * t).norm() + (fd - m * t).norm(),
        1e-6,
    ));

    let mut lat = Worst::default();
    for theta0 in [0.3, 0.7, 1.2, 2.0, 2.8] {
        for s in [0.0, 0.4, 1.3] {
            lat.update(
                geodesic_curvature_residual(theta0, s, tol.fd_step)?,
                &[theta0, s],
            );
        }
    }
    out.push(lat.record(
        "latitude.geodesic-curvature",
        "d^♮ρ(ṁ, m̈) = m × ṁ + cot θ₀ m",
        1e-5,
    ));
    Ok(out)
}

pub fn s2_pmf_beta(config: &ScenarioConfig) -> Result<Vec<CheckRecord>> {
    let tol = &config.tolerances;
    let pmf: PartialMovingFrame = pmf_from_field(eastward_field(), &[Vector3::x(), Vector3::y()])?;
    let mut r = config.stream(7);
    let mut out =
        beta_equivariance_check(&pmf, config.count(200), &mut r, tol.fd_step, tol.structure)?;

    let mut slip = Worst::default();
    let mut consist = Worst::default();
    for _ in 0..config.count(1000) {
        let (g, m, _) = sample_triple(&pmf, &mut r);
        let at = [m.x, m.y, m.z];
        slip.update((pmf.slip(&g, &m)? * m - g * m).norm(), &at);
        consist.update((pmf.slip(&g, &m)? - pmf.slip_direct(&g, &m)?).norm(), &at);
    }
    out.push(slip.record("slip.map-1000", "φ_g(m)·m = g·m", 1e-9));
    out.push(consist.record("slip.consistency-1000", "φ_g(m) = φ(g·m) φ(m)⁻¹", 1e-9));

    let mut polar = Worst::default();
    for _ in 0..config.count(50) {
        let (_, m, _) = sample_triple(&pmf, &mut r);
        let g = rotation_about(&Vector3::z(), uniform(&mut r, -PI, PI));
        if !pmf.in_domain(&(g * m)) {
            continue;
        }
        let res = pmf.slip_angle(&g, &m)?.abs() + (pmf.slip(&g, &m)? - g).norm();
        polar.update(res, &[m.x, m.y, m.z]);
    }
    out.push(polar.record(
        "slip.polar-rotations",
        "θ(g, m) = 0 and φ_g = g for polar rotations",
        1e-9,
    ));

    let mut section = Worst::default();
    let reference = pmf.cross_section(&Vector3::x())?;
    for _ in 0..config.count(50) {
        let (_, m, _) = sample_triple(&pmf, &mut r);
        let pi_m = pmf.cross_section(&m)?;
        let mut res = (pi_m - reference).norm();
        for _ in 0..20 {
            let g = random_rotation(&mut r);
            if pmf.in_domain(&(g * m)) {
                res = res.max((pmf.cross_section(&(g * m))? - pi_m).norm());
            }
        }
        section.update(res, &[m.x, m.y, m.z]);
    }
    out.push(section.record(
        "cross-section.invariance",
        "π_φ(g·m) = π_φ(m), constant on S²",
        1e-8,
    ));

    let mut conn = Worst::default();
    for _ in 0..config.count(50) {
        let (_, m, _) = sample_triple(&pmf, &mut r);
        let (ker, image) = pmf.connection(&m, tol.fd_step, tol.rank)?;
        let res = if ker.dim() == 0 && image.dim() == 0 {
            0.0
        } else {
            1.0 + ker.dim() as f64 + image.dim() as f64
        };
        conn.update(res, &[m.x, m.y, m.z]);
    }
    out.push(conn.record(
        "connection.two-ways",
        "Γ|_m = {0} as kernel and as image of d(Φ_φ ∘ π_φ)",
        0.0,
    ));

    let mut lat = Worst::default();
    for theta0 in [0.3, 0.7, 1.2, 2.0, 2.8] {
        for s in [0.0, 0.4, 1.3] {
            let (m, v, _) = latitude_curve(theta0, s);
            let expected = m.cross(&v) + m / theta0.tan();
            let res = (pmf.dnat(&m, &v, tol.fd_step)? - expected).norm()
                + (pmf.dnat_fd(&m, &v, tol.fd_step)? - expected).norm();
            lat.update(res, &[theta0, s]);
        }
    }
    out.push(lat.record("latitude.dnat", "d^♮φ(ṁ) = m × ṁ + cot θ₀ m", 1e-5));

    let mut closed = Worst::default();
    for _ in 0..config.count(200) {
        let (_, m, v) = sample_triple(&pmf, &mut r);
        let (t1, _) = tangent_pair(&m);
        let mut res: f64 = 0.0;
        for w in [v, t1] {
            res = res
                .max((pmf.dnat(&m, &w, tol.fd_step)? - pmf.dnat_fd(&m, &w, tol.fd_step)?).norm());
        }
        closed.update(res, &[m.x, m.y, m.z]);
    }
    out.push(closed.record(
        "dnat.closed-vs-fd",
        "closed-form d^♮φ matches finite differences",
        1e-6,
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hxh_closed_oracles_match_action() {
        let lr = hxh_on_su3();
        let alg = lr.group_algebra();
        let g = ManifoldPoint::from_matrix(&vertical_rotation(0.4));
        let a: Arc<dyn Action> = Arc::new(hxh_on_su3());
        let mu = simple_mechanical_mu(a);
        let v = DVector::from_fn(8, |i, _| (i as f64 + 1.0) * 0.1);
        assert!((mu.apply(&g, &v) - hxh_mu_closed(alg, &g, &v)).norm() < 1e-12);
        assert!((mu.inertia_matrix(&g) - hxh_chi_closed(alg, &g)).norm() < 1e-12);
    }

    #[test]
    fn expected_table_support() {
        assert_eq!(expected_table_entry(S1, X1), -e(8, D1));
        assert_eq!(expected_table_entry(D1, D2).norm(), 0.0);
    }
}
