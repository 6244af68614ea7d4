//! Python bindings for the biocontrol toolkit.
//!
//! One `Params` class mirrors the model parameter record; analysis
//! operations hang off it and return plain Python data (tuples, lists,
//! dicts). Complex numbers cross the boundary as `(re, im)` tuples.

use biocontrol::continuation;
use biocontrol::dynamics::{self, OrbitVerdict};
use biocontrol::hopf;
use biocontrol::linalg::{CVec4, Complex64};
use biocontrol::model::EquilibriumId;
use biocontrol::stability;
use biocontrol::{Error, ModelParams, State, ToleranceSettings};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidInput(_) | Error::Domain(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn tolerances(sigma_tol: Option<f64>) -> ToleranceSettings {
    let mut tol = ToleranceSettings::default();
    if let Some(band) = sigma_tol {
        tol.on_sigma_rel = band;
    }
    tol
}

/// Variety sample crossing the Python boundary:
/// `(k1, k2, omega0, l1_sign, delta_residual)`.
type SigmaRow = (f64, f64, f64, i8, f64);

/// Trajectory sample: `(t, P, M, L, G)`.
type TrajectoryRow = (f64, f64, f64, f64, f64);

fn pair(z: Complex64) -> (f64, f64) {
    (z.re, z.im)
}

fn cvec_pairs(v: &CVec4) -> Vec<(f64, f64)> {
    v.iter().map(|z| pair(*z)).collect()
}

fn parse_cvec(q: Vec<(f64, f64)>) -> PyResult<CVec4> {
    if q.len() != 4 {
        return Err(PyValueError::new_err(format!(
            "eigenvector override needs 4 components, got {}",
            q.len()
        )));
    }
    Ok([
        Complex64::new(q[0].0, q[0].1),
        Complex64::new(q[1].0, q[1].1),
        Complex64::new(q[2].0, q[2].1),
        Complex64::new(q[3].0, q[3].1),
    ])
}

fn state_tuple(s: &State) -> (f64, f64, f64, f64) {
    (s.p, s.m, s.l, s.g)
}

fn equilibrium_id(name: &str) -> PyResult<EquilibriumId> {
    match name {
        "A1" => Ok(EquilibriumId::A1),
        "A2" => Ok(EquilibriumId::A2),
        "A3" => Ok(EquilibriumId::A3),
        "A4" => Ok(EquilibriumId::A4),
        other => Err(PyValueError::new_err(format!(
            "unknown equilibrium `{other}` (expected A1..A4)"
        ))),
    }
}

/// Model parameters. Defaults are the reference field-study table; the
/// interaction pair `k1`, `k2` is required.
#[pyclass(name = "Params", from_py_object)]
#[derive(Clone)]
struct Params {
    inner: ModelParams,
}

#[pymethods]
impl Params {
    #[new]
    #[pyo3(signature = (k1, k2, *, alpha1=None, beta1=None, mu1=None, phi1=None, c1=None,
                        alpha2=None, beta2=None, mu2=None, phi2=None, c2=None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        k1: f64,
        k2: f64,
        alpha1: Option<f64>,
        beta1: Option<f64>,
        mu1: Option<f64>,
        phi1: Option<f64>,
        c1: Option<f64>,
        alpha2: Option<f64>,
        beta2: Option<f64>,
        mu2: Option<f64>,
        phi2: Option<f64>,
        c2: Option<f64>,
    ) -> PyResult<Self> {
        let mut p = ModelParams::reference(k1, k2);
        if let Some(v) = alpha1 {
            p.alpha1 = v;
        }
        if let Some(v) = beta1 {
            p.beta1 = v;
        }
        if let Some(v) = mu1 {
            p.mu1 = v;
        }
        if let Some(v) = phi1 {
            p.phi1 = v;
        }
        if let Some(v) = c1 {
            p.c1 = v;
        }
        if let Some(v) = alpha2 {
            p.alpha2 = v;
        }
        if let Some(v) = beta2 {
            p.beta2 = v;
        }
        if let Some(v) = mu2 {
            p.mu2 = v;
        }
        if let Some(v) = phi2 {
            p.phi2 = v;
        }
        if let Some(v) = c2 {
            p.c2 = v;
        }
        p.validate().map_err(to_py_err)?;
        Ok(Params { inner: p })
    }

    #[getter]
    fn k1(&self) -> f64 {
        self.inner.k1
    }

    #[getter]
    fn k2(&self) -> f64 {
        self.inner.k2
    }

    #[getter]
    fn c2(&self) -> f64 {
        self.inner.c2
    }

    fn with_interactions(&self, k1: f64, k2: f64) -> Params {
        Params {
            inner: self.inner.with_interactions(k1, k2),
        }
    }

    fn with_c2(&self, c2: f64) -> Params {
        Params {
            inner: self.inner.with_c2(c2),
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "Params(k1={}, k2={}, c2={})",
            self.inner.k1, self.inner.k2, self.inner.c2
        )
    }

    /// Right-hand side of the model at a state `(P, M, L, G)`.
    fn vector_field(&self, x: (f64, f64, f64, f64)) -> PyResult<(f64, f64, f64, f64)> {
        let s = State::new(x.0, x.1, x.2, x.3);
        Ok(state_tuple(&self.inner.vector_field(&s).map_err(to_py_err)?))
    }

    /// Jacobian at a state, as four row lists.
    fn jacobian(&self, x: (f64, f64, f64, f64)) -> Vec<Vec<f64>> {
        let j = self.inner.jacobian(&State::new(x.0, x.1, x.2, x.3));
        j.0.iter().map(|row| row.to_vec()).collect()
    }

    /// `(R1, R2)`.
    fn reproduction_numbers(&self) -> (f64, f64) {
        let r = self.inner.reproduction_numbers();
        (r.r1, r.r2)
    }

    fn k1_max(&self) -> PyResult<f64> {
        self.inner.k1_max().map_err(to_py_err)
    }

    /// Dict mapping `"A1".."A4"` to coordinate tuples.
    fn equilibria<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let set = self.inner.equilibria().map_err(to_py_err)?;
        let dict = PyDict::new(py);
        for id in EquilibriumId::ALL {
            dict.set_item(id.label(), state_tuple(&set.get(id)))?;
        }
        Ok(dict)
    }

    /// `(admissible, [violation messages])`.
    fn is_admissible(&self) -> (bool, Vec<String>) {
        let a = self.inner.is_admissible();
        (
            a.admissible,
            a.violations.iter().map(|v| v.to_string()).collect(),
        )
    }

    /// Routh-Hurwitz discriminant at the coexistence equilibrium.
    fn delta(&self) -> PyResult<f64> {
        stability::delta_at_a4(&self.inner).map_err(to_py_err)
    }

    /// Stability classification of one equilibrium:
    /// `{"kind": str, "eigenvalues": [(re, im); 4]}`.
    fn classify<'py>(&self, py: Python<'py>, name: &str) -> PyResult<Bound<'py, PyDict>> {
        let id = equilibrium_id(name)?;
        let c = stability::classify(&self.inner, id, &ToleranceSettings::default())
            .map_err(to_py_err)?;
        let dict = PyDict::new(py);
        dict.set_item("kind", c.kind.label())?;
        dict.set_item(
            "eigenvalues",
            c.spectrum.eigenvalues.iter().map(|z| pair(*z)).collect::<Vec<_>>(),
        )?;
        if let Some(rh) = c.routh {
            dict.set_item("delta", rh.delta)?;
            dict.set_item("routh_stable", rh.stable)?;
        }
        Ok(dict)
    }

    /// Critical frequency on the Hopf variety.
    #[pyo3(signature = (sigma_tol=None))]
    fn omega0(&self, sigma_tol: Option<f64>) -> PyResult<f64> {
        hopf::omega0_at(&self.inner, &tolerances(sigma_tol)).map_err(to_py_err)
    }

    /// Full projection-method report at a Hopf point.
    #[pyo3(signature = (q=None, sigma_tol=None))]
    fn lyapunov<'py>(
        &self,
        py: Python<'py>,
        q: Option<Vec<(f64, f64)>>,
        sigma_tol: Option<f64>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let q_override = q.map(parse_cvec).transpose()?;
        let report = hopf::lyapunov_l1(&self.inner, q_override.as_ref(), &tolerances(sigma_tol))
            .map_err(to_py_err)?;
        let dict = PyDict::new(py);
        dict.set_item("omega0", report.omega0)?;
        dict.set_item("l1", report.l1)?;
        dict.set_item("g21", pair(report.g21))?;
        dict.set_item("transversality", report.transversality)?;
        dict.set_item("q", cvec_pairs(&report.q))?;
        dict.set_item("p", cvec_pairs(&report.p))?;
        dict.set_item("h11", cvec_pairs(&report.h11))?;
        dict.set_item("h20", cvec_pairs(&report.h20))?;
        dict.set_item(
            "normalization",
            match report.normalization {
                hopf::NormalizationTag::DefaultUnit => "default-unit",
                hopf::NormalizationTag::CallerSupplied => "caller-supplied",
            },
        )?;
        Ok(dict)
    }

    /// Integrate from `x0` for `t_end` time units; returns
    /// `[(t, P, M, L, G), ...]` samples.
    #[pyo3(signature = (x0, t_end, tol=1e-10))]
    fn integrate(
        &self,
        x0: (f64, f64, f64, f64),
        t_end: f64,
        tol: f64,
    ) -> PyResult<Vec<TrajectoryRow>> {
        let s0 = State::new(x0.0, x0.1, x0.2, x0.3);
        let traj = dynamics::integrate(&self.inner, &s0, t_end, tol).map_err(to_py_err)?;
        Ok(traj
            .samples
            .iter()
            .map(|(t, s)| (*t, s.p, s.m, s.l, s.g))
            .collect())
    }

    /// Locate the bifurcating periodic orbit near the Hopf variety:
    /// `{"anchor", "period", "multipliers", "verdict"}`.
    #[pyo3(signature = (hint_radius=None))]
    fn find_orbit<'py>(
        &self,
        py: Python<'py>,
        hint_radius: Option<f64>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let orbit =
            dynamics::find_periodic_orbit(&self.inner, hint_radius, &ToleranceSettings::default())
                .map_err(to_py_err)?;
        let dict = PyDict::new(py);
        dict.set_item("anchor", state_tuple(&orbit.anchor))?;
        dict.set_item("period", orbit.period)?;
        dict.set_item(
            "multipliers",
            orbit.multipliers.iter().map(|m| pair(*m)).collect::<Vec<_>>(),
        )?;
        dict.set_item(
            "verdict",
            match orbit.verdict {
                OrbitVerdict::UnstableSaddleCycle => "unstable-saddle-cycle",
                OrbitVerdict::Stable => "stable",
                OrbitVerdict::Indeterminate => "indeterminate",
            },
        )?;
        Ok(dict)
    }
}

/// Solve the Hopf-variety root `k2` on one `k1` slice; `None` if the slice
/// has no crossing. Returns `(k1, k2, omega0, l1_sign, delta_residual)`.
#[pyfunction]
fn solve_sigma_k2(
    params: &Params,
    k1: f64,
    c2: f64,
) -> PyResult<Option<SigmaRow>> {
    let pt = continuation::solve_sigma_k2(&params.inner, k1, c2).map_err(to_py_err)?;
    Ok(pt.map(|p| (p.k1, p.k2, p.omega0, p.l1_sign, p.delta_residual)))
}

/// Trace the Hopf variety; returns a list of
/// `(k1, k2, omega0, l1_sign, delta_residual)` tuples.
#[pyfunction]
fn trace_sigma(
    params: &Params,
    c2: f64,
    n: usize,
) -> PyResult<Vec<SigmaRow>> {
    let pts = continuation::trace_sigma(&params.inner, c2, n).map_err(to_py_err)?;
    Ok(pts
        .iter()
        .map(|p| (p.k1, p.k2, p.omega0, p.l1_sign, p.delta_residual))
        .collect())
}

/// Tangency of the variety family with the diagonal `k1 = k2`:
/// `{"c2_star", "k1", "k2", "gradient"}`.
#[pyfunction]
fn find_tangency<'py>(py: Python<'py>, params: &Params) -> PyResult<Bound<'py, PyDict>> {
    let t = continuation::find_tangency(&params.inner).map_err(to_py_err)?;
    let dict = PyDict::new(py);
    dict.set_item("c2_star", t.c2_star)?;
    dict.set_item("k1", t.k1)?;
    dict.set_item("k2", t.k2)?;
    dict.set_item("gradient", (t.gradient[0], t.gradient[1]))?;
    Ok(dict)
}

#[pymodule]
fn biocontrol_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Params>()?;
    m.add_function(wrap_pyfunction!(solve_sigma_k2, m)?)?;
    m.add_function(wrap_pyfunction!(trace_sigma, m)?)?;
    m.add_function(wrap_pyfunction!(find_tangency, m)?)?;
    Ok(())
}
