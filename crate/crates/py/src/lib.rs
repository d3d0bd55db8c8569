//! Python bindings for the `partconn` library.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use std::sync::Arc;

use partconn::actions::{action_by_name, isotropy_algebra, Action, ManifoldPoint};
use partconn::cli::{render, run_scenario as run, Format, ScenarioConfig};
use partconn::connections::mu_q;
use partconn::curvature::{curvature_leftright_closed, docile};
use partconn::groups::{cay as cay_rs, rodrigues, su3};
use partconn::{Error, Tolerances};

fn py_err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn rows3(m: &Matrix3<f64>) -> Vec<Vec<f64>> {
    (0..3)
        .map(|i| (0..3).map(|j| m[(i, j)]).collect())
        .collect()
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn v3(v: [f64; 3]) -> Vector3<f64> {
    Vector3::new(v[0], v[1], v[2])
}

fn e(n: usize, i: usize) -> DVector<f64> {
    DVector::from_fn(n, |k, _| f64::from(k == i))
}

/// The skew matrix `v̂` with `v̂ w = v × w`.
#[pyfunction]
pub fn hat(v: [f64; 3]) -> Vec<Vec<f64>> {
    rows3(&partconn::groups::hat(&v3(v)))
}

/// Cayley transform `(1 − η̂/2)⁻¹(1 + η̂/2)`.
#[pyfunction]
pub fn cay(eta: [f64; 3]) -> Vec<Vec<f64>> {
    rows3(&cay_rs(&v3(eta)))
}

/// Rotation `exp(ξ̂)`.
#[pyfunction]
pub fn so3_exp(xi: [f64; 3]) -> Vec<Vec<f64>> {
    rows3(&rodrigues(&v3(xi)))
}

/// Coordinates of `[b_i, b_j]` in the su(3) basis `δ₁, δ₂, σ₁, σ₂, σ₃, ξ₁, ξ₂, ξ₃`.
#[pyfunction]
pub fn su3_bracket(i: usize, j: usize) -> PyResult<Vec<f64>> {
    let alg = su3();
    if i >= 8 || j >= 8 {
        return Err(PyValueError::new_err("su(3) basis indices lie in 0..8"));
    }
    Ok(alg.bracket(&e(8, i), &e(8, j)).iter().copied().collect())
}

/// Closed-form curvature of `H × H` on SU(3) at `R_z(θ)` for all basis pairs `i < j`.
#[pyfunction]
pub fn hxh_curvature_table(theta: f64) -> PyResult<Vec<(usize, usize, Vec<f64>)>> {
    let lr = partconn::actions::hxh_on_su3();
    let g = partconn::actions::vertical_rotation(theta);
    let tol = Tolerances::default();
    let mut out = Vec::new();
    for i in 0..8 {
        for j in i + 1..8 {
            let v = curvature_leftright_closed(
                lr.group_algebra(),
                lr.inclusion(),
                &g,
                &e(8, i),
                &e(8, j),
                tol.rank,
            )
            .map_err(py_err)?;
            out.push((i, j, v.iter().copied().collect()));
        }
    }
    Ok(out)
}

/// Docility of `μ^q` on ℝ³ at `point` for `q` one of `"1"`, `"t"`, `"1+t"`.
#[pyfunction]
pub fn mu_q_docile(q: &str, point: [f64; 3]) -> PyResult<bool> {
    let f: Arc<dyn Fn(f64) -> f64 + Send + Sync> = match q {
        "1" => Arc::new(|_| 1.0),
        "t" => Arc::new(|t| t),
        "1+t" => Arc::new(|t| 1.0 + t),
        other => return Err(PyValueError::new_err(format!("unknown profile {other:?}"))),
    };
    let mu = mu_q(f, q).map_err(py_err)?;
    let m = ManifoldPoint::from_vec3(&v3(point));
    Ok(docile(&mu, &m, &Tolerances::default())
        .map_err(py_err)?
        .docile)
}

/// The frame `(m, u, m × u)` of a unit tangent vector.
#[pyfunction]
pub fn rho_us2(m: [f64; 3], u: [f64; 3]) -> PyResult<Vec<Vec<f64>>> {
    Ok(rows3(
        &partconn::frames::rho_us2(&v3(m), &v3(u)).map_err(py_err)?,
    ))
}

/// Runs a scenario and returns its JSON report.
#[pyfunction]
#[pyo3(signature = (scenario, seed=None, samples=None))]
pub fn run_scenario(scenario: &str, seed: Option<u64>, samples: Option<usize>) -> PyResult<String> {
    let mut config = ScenarioConfig::new(scenario);
    if let Some(s) = seed {
        config.seed = s;
    }
    config.samples = samples;
    let report = run(&config).map_err(py_err)?;
    render(&report, Format::Json).map_err(py_err)
}

/// A built-in group action.
#[pyclass(name = "Action", frozen)]
struct PyAction {
    inner: Arc<dyn Action>,
}

#[pymethods]
impl PyAction {
    #[new]
    fn new(name: &str) -> PyResult<Self> {
        Ok(Self {
            inner: action_by_name(name).map_err(py_err)?,
        })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn manifold_dim(&self) -> usize {
        self.inner.manifold().dim()
    }

    #[getter]
    fn algebra_dim(&self) -> usize {
        self.inner.algebra().dim()
    }

    /// Matrix of `ξ ↦ ξ_M(m)`; points are ℝ³ coordinates, `(m, u)` pairs, or the
    /// real then imaginary parts of a 3×3 group matrix in row-major order.
    fn generator_matrix(&self, point: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        let m = self.point(point)?;
        Ok(rows(&self.inner.generator_matrix(&m)))
    }

    fn isotropy_dim(&self, point: Vec<f64>) -> PyResult<usize> {
        let m = self.point(point)?;
        Ok(
            isotropy_algebra(self.inner.as_ref(), &m, Tolerances::default().rank)
                .map_err(py_err)?
                .dim(),
        )
    }

    fn __repr__(&self) -> String {
        format!("Action({:?})", self.inner.name())
    }
}

impl PyAction {
    fn point(&self, coords: Vec<f64>) -> PyResult<ManifoldPoint> {
        let p = ManifoldPoint::new(DVector::from_vec(coords));
        self.inner.manifold().check_point(&p).map_err(py_err)?;
        Ok(p)
    }
}

#[pymodule]
fn partconn_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(hat, m)?)?;
    m.add_function(wrap_pyfunction!(cay, m)?)?;
    m.add_function(wrap_pyfunction!(so3_exp, m)?)?;
    m.add_function(wrap_pyfunction!(su3_bracket, m)?)?;
    m.add_function(wrap_pyfunction!(hxh_curvature_table, m)?)?;
    m.add_function(wrap_pyfunction!(mu_q_docile, m)?)?;
    m.add_function(wrap_pyfunction!(rho_us2, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_class::<PyAction>()?;
    Ok(())
}
