//! Moving frames on the unit tangent bundle US² and partial moving frames on
//! subsets of S² built from unit vector fields.
//!
//! All trivialized derivatives are right-trivialized and returned as 3-vectors
//! through `hat`. A partial moving frame `φ = ρ ∘ Y` is equivariant only up to
//! the slip map `φ_g(m) = g exp(θ(g, m) m)`.

use nalgebra::{Matrix3, Vector3};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::groups::{rodrigues, rotation_about, vee};
use crate::linalg::{rank_nullspace, SubspaceBasis};
use crate::report::{CheckRecord, Worst};
use crate::sampling::{ball, unit3, SampleRng};

/// Tolerance on the US² constraints `|m| = |u| = 1`, `⟨m, u⟩ = 0`.
const FRAME_CONSTRAINT: f64 = 1e-10;

/// `ρ(m, u) = (m, u, m × u)` as columns.
pub fn rho_us2(m: &Vector3<f64>, u: &Vector3<f64>) -> Result<Matrix3<f64>> {
    let res = (m.norm() - 1.0).abs() + (u.norm() - 1.0).abs() + m.dot(u).abs();
    if res > FRAME_CONSTRAINT {
        return Err(Error::Input(format!(
            "(m, u) is not a unit tangent vector (residual {res:.3e})"
        )));
    }
    Ok(Matrix3::from_columns(&[*m, *u, m.cross(u)]))
}

/// `d^♮ρ(δm, δu) = m × δm + ⟨u × δu, m⟩ m`.
pub fn dnat_rho(
    m: &Vector3<f64>,
    u: &Vector3<f64>,
    dm: &Vector3<f64>,
    du: &Vector3<f64>,
) -> Vector3<f64> {
    m.cross(dm) + m * u.cross(du).dot(m)
}

/// Right-trivialized derivative `vee(dR · R(0)ᵀ)` of a rotation-valued curve by central differences.
pub fn dnat_curve(f: &dyn Fn(f64) -> Result<Matrix3<f64>>, h: f64) -> Result<Vector3<f64>> {
    let d = (f(h)? - f(-h)?) / (2.0 * h);
    let skew = d * f(0.0)?.transpose();
    Ok(vee(&((skew - skew.transpose()) * 0.5)))
}

/// Unit tangent retraction `(m, u) + t(δm, δu)` renormalized onto US².
pub fn us2_retract(
    m: &Vector3<f64>,
    u: &Vector3<f64>,
    dm: &Vector3<f64>,
    du: &Vector3<f64>,
    t: f64,
) -> (Vector3<f64>, Vector3<f64>) {
    let m1 = (m + dm * t).normalize();
    let u1 = u + du * t;
    (m1, (u1 - m1 * m1.dot(&u1)).normalize())
}

/// `‖ρ(g·u) − g ρ(u)‖`.
pub fn rho_equivariance_residual(
    g: &Matrix3<f64>,
    m: &Vector3<f64>,
    u: &Vector3<f64>,
) -> Result<f64> {
    Ok((rho_us2(&(g * m), &(g * u))? - g * rho_us2(m, u)?).norm())
}

pub type VectorField = Arc<dyn Fn(&Vector3<f64>) -> Vector3<f64> + Send + Sync>;
pub type DomainTest = Arc<dyn Fn(&Vector3<f64>) -> bool + Send + Sync>;
pub type FieldDerivative = Arc<dyn Fn(&Vector3<f64>, &Vector3<f64>) -> Vector3<f64> + Send + Sync>;

/// A unit vector field `Y` on a subset of S².
#[derive(Clone)]
pub struct SphereField {
    label: String,
    eval: VectorField,
    domain: DomainTest,
    derivative: Option<FieldDerivative>,
}

impl fmt::Debug for SphereField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SphereField")
            .field("label", &self.label)
            .finish()
    }
}

impl SphereField {
    pub fn new(label: impl Into<String>, eval: VectorField, domain: DomainTest) -> Self {
        Self {
            label: label.into(),
            eval,
            domain,
            derivative: None,
        }
    }

    pub fn with_derivative(mut self, d: FieldDerivative) -> Self {
        self.derivative = Some(d);
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn in_domain(&self, m: &Vector3<f64>) -> bool {
        (self.domain)(m)
    }

    /// `Y(m)`, checked to be a unit tangent vector inside the domain.
    pub fn at(&self, m: &Vector3<f64>) -> Result<Vector3<f64>> {
        if !self.in_domain(m) {
            return Err(Error::Domain(format!(
                "{} is undefined at {m:?}",
                self.label
            )));
        }
        let y = (self.eval)(m);
        let res = (y.norm() - 1.0).abs() + y.dot(m).abs();
        if res.is_nan() || res > 1e-9 {
            return Err(Error::Domain(format!(
                "{} is not a unit tangent field at {m:?} (residual {res:.3e})",
                self.label
            )));
        }
        Ok(y)
    }

    /// `dY(δm)`, in closed form when available.
    pub fn derivative(&self, m: &Vector3<f64>, dm: &Vector3<f64>, h: f64) -> Result<Vector3<f64>> {
        if let Some(d) = &self.derivative {
            self.at(m)?;
            return Ok(d(m, dm));
        }
        let p = self.at(&(m + dm * h).normalize())?;
        let q = self.at(&(m - dm * h).normalize())?;
        Ok((p - q) / (2.0 * h))
    }
}

/// Angular radius of the excluded polar caps.
pub const POLAR_CAP: f64 = 1e-2;

/// The normalized eastward field `e₃ × m / |e₃ × m|` on S² minus polar caps.
pub fn eastward_field() -> SphereField {
    let cap = POLAR_CAP.sin();
    SphereField::new(
        "eastward",
        Arc::new(|m| {
            let x = Vector3::z().cross(m);
            x / x.norm()
        }),
        Arc::new(move |m| Vector3::z().cross(m).norm() >= cap * m.norm()),
    )
    .with_derivative(Arc::new(|m, dm| {
        let x = Vector3::z().cross(m);
        let n = x.norm();
        let y = x / n;
        let dx = Vector3::z().cross(dm);
        (dx - y * y.dot(&dx)) / n
    }))
}

/// `φ = ρ ∘ Y` for a unit vector field `Y` on a subset of S².
#[derive(Clone, Debug)]
pub struct PartialMovingFrame {
    field: SphereField,
}

/// Builds `φ = ρ ∘ Y` after validating `Y` at the probe points.
pub fn pmf_from_field(field: SphereField, probes: &[Vector3<f64>]) -> Result<PartialMovingFrame> {
    for m in probes {
        field.at(m)?;
    }
    Ok(PartialMovingFrame { field })
}

impl PartialMovingFrame {
    pub fn field(&self) -> &SphereField {
        &self.field
    }

    pub fn in_domain(&self, m: &Vector3<f64>) -> bool {
        self.field.in_domain(m)
    }

    pub fn phi(&self, m: &Vector3<f64>) -> Result<Matrix3<f64>> {
        rho_us2(m, &self.field.at(m)?)
    }

    /// `d^♮φ(δm) = m × δm + ⟨Y(m) × dY(δm), m⟩ m`.
    pub fn dnat(&self, m: &Vector3<f64>, dm: &Vector3<f64>, h: f64) -> Result<Vector3<f64>> {
        let y = self.field.at(m)?;
        let dy = self.field.derivative(m, dm, h)?;
        Ok(m.cross(dm) + m * y.cross(&dy).dot(m))
    }

    /// `d^♮φ(δm)` by differencing `φ` along `t ↦ (m + tδm)/|m + tδm|`.
    pub fn dnat_fd(&self, m: &Vector3<f64>, dm: &Vector3<f64>, h: f64) -> Result<Vector3<f64>> {
        dnat_curve(&|t| self.phi(&(m + dm * t).normalize()), h)
    }

    /// Signed angle from `Y(m)` to `g⁻¹ Y(g·m)` about `m`.
    pub fn slip_angle(&self, g: &Matrix3<f64>, m: &Vector3<f64>) -> Result<f64> {
        let y = self.field.at(m)?;
        let u = g.transpose() * self.field.at(&(g * m))?;
        Ok(u.dot(&m.cross(&y)).atan2(u.dot(&y)))
    }

    /// `φ_g(m) = g exp(θ(g, m) m̂)`.
    pub fn slip(&self, g: &Matrix3<f64>, m: &Vector3<f64>) -> Result<Matrix3<f64>> {
        Ok(g * rotation_about(m, self.slip_angle(g, m)?))
    }

    /// `φ(g·m) φ(m)⁻¹` evaluated directly.
    pub fn slip_direct(&self, g: &Matrix3<f64>, m: &Vector3<f64>) -> Result<Matrix3<f64>> {
        Ok(self.phi(&(g * m))? * self.phi(m)?.transpose())
    }

    /// `d^♮φ_g(v)` by differencing the slip map along the sphere retraction.
    pub fn dnat_slip(
        &self,
        g: &Matrix3<f64>,
        m: &Vector3<f64>,
        v: &Vector3<f64>,
        h: f64,
    ) -> Result<Vector3<f64>> {
        dnat_curve(&|t| self.slip(g, &(m + v * t).normalize()), h)
    }

    /// `π_φ(m) = φ(m)⁻¹ · m`.
    pub fn cross_section(&self, m: &Vector3<f64>) -> Result<Vector3<f64>> {
        Ok(self.phi(m)?.transpose() * m)
    }

    /// `‖(d^♮φ(ξ × m) − ξ) × m‖`: the generator of `d^♮φ(ξ_M(m)) − ξ` at `m`.
    pub fn generator_residual(&self, m: &Vector3<f64>, xi: &Vector3<f64>, h: f64) -> Result<f64> {
        Ok((self.dnat(m, &xi.cross(m), h)? - xi).cross(m).norm())
    }

    /// `Γ|_m` as `ker(v ↦ d^♮φ(v) × m)` and as `d(Φ_{φ(m)} ∘ π_φ)(T_mS²)`.
    pub fn connection(
        &self,
        m: &Vector3<f64>,
        h: f64,
        tol_rank: f64,
    ) -> Result<(SubspaceBasis, SubspaceBasis)> {
        let (t1, t2) = tangent_pair(m);
        let tb = nalgebra::DMatrix::from_columns(&[dv(&t1), dv(&t2)]);
        let mut proj = nalgebra::DMatrix::zeros(3, 2);
        let mut image = nalgebra::DMatrix::zeros(3, 2);
        let phi = self.phi(m)?;
        for (j, t) in [t1, t2].iter().enumerate() {
            proj.set_column(j, &dv(&self.dnat(m, t, h)?.cross(m)));
            let d = (self.cross_section(&(m + t * h).normalize())?
                - self.cross_section(&(m - t * h).normalize())?)
                / (2.0 * h);
            image.set_column(j, &dv(&(phi * d)));
        }
        let (_, k) = rank_nullspace(&proj, tol_rank)?;
        let kernel = if k.dim() == 0 {
            SubspaceBasis::zero(3)
        } else {
            SubspaceBasis::from_spanning(&(&tb * k.matrix()), tol_rank)?
        };
        let scale = 1e-6;
        let range = if image.norm() <= scale {
            SubspaceBasis::zero(3)
        } else {
            SubspaceBasis::from_spanning(&image, tol_rank)?
        };
        Ok((kernel, range))
    }
}

fn dv(v: &Vector3<f64>) -> nalgebra::DVector<f64> {
    nalgebra::DVector::from_column_slice(v.as_slice())
}

/// An orthonormal basis of `T_mS²`.
pub fn tangent_pair(m: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let k = m.iamin();
    let mut e = Vector3::zeros();
    e[k] = 1.0;
    let a = m.cross(&e).normalize();
    (a, m.cross(&a))
}

/// The latitude circle at polar angle `θ₀` traversed at unit speed: `(m, ṁ, m̈)` at time `t`.
pub fn latitude_curve(theta0: f64, t: f64) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
    let s = theta0.sin();
    let a = t / s;
    (
        Vector3::new(s * a.cos(), s * a.sin(), theta0.cos()),
        Vector3::new(-a.sin(), a.cos(), 0.0),
        Vector3::new(-a.cos(), -a.sin(), 0.0) / s,
    )
}

/// `‖d^♮ρ(ṁ, m̈) − (m × ṁ + cot θ₀ m)‖` with `d^♮ρ` differenced along the lifted curve.
pub fn geodesic_curvature_residual(theta0: f64, t: f64, h: f64) -> Result<f64> {
    let (m, v, _) = latitude_curve(theta0, t);
    let fd = dnat_curve(
        &|s| {
            let (m, v, _) = latitude_curve(theta0, t + s);
            rho_us2(&m, &v)
        },
        h,
    )?;
    Ok((fd - (m.cross(&v) + m / theta0.tan())).norm())
}

/// Random rotation `exp(ξ)` with `ξ` uniform in the ball of radius π/2.
pub fn random_rotation(rng: &mut SampleRng) -> Matrix3<f64> {
    let v = ball(rng, 3, std::f64::consts::FRAC_PI_2);
    rodrigues(&Vector3::new(v[0], v[1], v[2]))
}

/// Samples `(g, m, v)` with `m` and `g·m` in the frame's domain and `v ∈ T_mS²`.
pub fn sample_triple(
    pmf: &PartialMovingFrame,
    rng: &mut SampleRng,
) -> (Matrix3<f64>, Vector3<f64>, Vector3<f64>) {
    loop {
        let g = random_rotation(rng);
        let m = unit3(rng);
        if !pmf.in_domain(&m) || !pmf.in_domain(&(g * m)) {
            continue;
        }
        let w = unit3(rng);
        let v = w - m * m.dot(&w);
        if v.norm() > 1e-3 {
            return (g, m, v);
        }
    }
}

/// β-relative equivariance identities of `d^♮φ` at sampled `(g, m, v)`.
pub fn beta_equivariance_check(
    pmf: &PartialMovingFrame,
    samples: usize,
    rng: &mut SampleRng,
    h: f64,
    tol: f64,
) -> Result<Vec<CheckRecord>> {
    let mut beta = Worst::default();
    let mut eq1 = Worst::default();
    let mut generator = Worst::default();
    let mut slip = Worst::default();
    let mut consistency = Worst::default();
    let mut dual = Worst::default();
    for _ in 0..samples {
        let (g, m, v) = sample_triple(pmf, rng);
        let at = [g.as_slice(), m.as_slice(), v.as_slice()].concat();
        let b = pmf.slip(&g, &m)?;
        let zeta = pmf.dnat_slip(&g, &m, &v, h)?;
        let gm = g * m;
        // d^♮φ(dΦ_g v) = Ad_{φ_g(m)} d^♮φ(v) + d^♮φ_g(v).
        let lhs = pmf.dnat_fd(&gm, &(g * v), h)?;
        let rhs = b * pmf.dnat_fd(&m, &v, h)? + zeta;
        beta.update((lhs - rhs).norm(), &at);
        // dΦ_g v − dΦ_{β_g(m)} v = ζ_M(g·m).
        eq1.update((g * v - b * v - zeta.cross(&gm)).norm(), &at);
        let xi = unit3(rng);
        generator.update(pmf.generator_residual(&m, &xi, h)?, &at);
        slip.update((b * m - gm).norm(), &at);
        consistency.update((pmf.slip_direct(&g, &m)? - b).norm(), &at);
        // μ(dΦ_g v) = Ad*_{β⁻¹} μ(v) + χ(g·m) ζ modulo 𝔤_{g·m}, with μ = d^♮φ.
        let chi_zeta = pmf.dnat(&gm, &zeta.cross(&gm), h)?;
        let lhs = pmf.dnat(&gm, &(g * v), h)?;
        let rhs = b * pmf.dnat(&m, &v, h)? + chi_zeta;
        dual.update((lhs - rhs).cross(&gm).norm(), &at);
    }
    Ok(vec![
        beta.record(
            "pmf.beta-equivariance",
            "d^♮φ(dΦ_g v) = Ad_{φ_g(m)} d^♮φ(v) + d^♮φ_g(v)",
            tol,
        ),
        eq1.record(
            "pmf.slip-linearization",
            "dΦ_g − dΦ_{β_g(m)} = dΦ̂_{g·m} ∘ d^♮β_g",
            tol,
        ),
        generator.record(
            "pmf.generator-mod-isotropy",
            "d^♮φ(ξ_M(m)) = ξ mod 𝔤_m",
            1e-6,
        ),
        slip.record("pmf.slip-map", "φ_g(m)·m = g·m", 1e-9),
        consistency.record("pmf.slip-consistency", "φ(g·m) = φ_g(m) φ(m)", 1e-9),
        dual.record(
            "pmf.dual-form-mod-isotropy",
            "Φ_g*μ = Ad*_{β⁻¹}μ + χ(g·m) d^♮β_g mod 𝔤_{g·m}",
            tol,
        ),
    ])
}
