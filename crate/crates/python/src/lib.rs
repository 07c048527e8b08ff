// Copyright 2026 The spintomo Developers
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Python bindings (`spintomo_py`).
//!
//! States cross the boundary as `DensityMatrix` objects, measurement data as the JSON
//! text of the measurement file format.

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use spintomo::coherent;
use spintomo::grid::{self, build_grid};
use spintomo::measurement::{self, MeasurementSet};
use spintomo::multipole::{self, ConeDesign};
use spintomo::recon::{self, ReconstructOptions};
use spintomo::spin::{self, Direction, TwiceSpin};
use spintomo::{Error, NumericPolicy};

create_exception!(
    spintomo_py,
    SingularSystemError,
    PyValueError,
    "Singular or rank-deficient inversion."
);

fn py_err(e: Error) -> PyErr {
    match e {
        Error::SingularBlock { .. } | Error::RankDeficient { .. } => {
            SingularSystemError::new_err(e.to_string())
        }
        other => PyValueError::new_err(other.to_string()),
    }
}

fn direction(theta: f64, phi: f64) -> PyResult<Direction> {
    Direction::new(theta, phi).map_err(py_err)
}

/// Spin density matrix in the basis mu = s, s-1, ..., -s.
#[pyclass(name = "DensityMatrix", module = "spintomo_py", from_py_object)]
#[derive(Clone)]
pub struct PyDensityMatrix {
    inner: spin::DensityMatrix,
}

#[pymethods]
impl PyDensityMatrix {
    /// Builds a matrix from nested lists of complex numbers.
    #[new]
    fn new(twice_s: u32, entries: Vec<Vec<Complex64>>) -> PyResult<Self> {
        let n = entries.len();
        if entries.iter().any(|row| row.len() != n) {
            return Err(PyValueError::new_err(
                "entries must be a square list of lists",
            ));
        }
        let m = spintomo::linalg::CMatrix::from_fn(n, n, |i, j| entries[i][j]);
        let inner = spin::DensityMatrix::new(TwiceSpin(twice_s), m).map_err(py_err)?;
        Ok(PyDensityMatrix { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (twice_s, seed, purity=None))]
    fn random(twice_s: u32, seed: u64, purity: Option<f64>) -> PyResult<Self> {
        let inner = spin::random_density(TwiceSpin(twice_s), seed, purity).map_err(py_err)?;
        Ok(PyDensityMatrix { inner })
    }

    #[staticmethod]
    fn maximally_mixed(twice_s: u32) -> Self {
        PyDensityMatrix {
            inner: spin::DensityMatrix::maximally_mixed(TwiceSpin(twice_s)),
        }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(PyDensityMatrix { inner })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("density matrices serialize")
    }

    #[getter]
    fn twice_s(&self) -> u32 {
        self.inner.twice_s().twice()
    }

    fn entries(&self) -> Vec<Vec<Complex64>> {
        let e = self.inner.entries();
        (0..e.nrows())
            .map(|i| (0..e.ncols()).map(|j| e[(i, j)]).collect())
            .collect()
    }

    fn trace(&self) -> Complex64 {
        self.inner.trace()
    }

    fn max_abs_diff(&self, other: &PyDensityMatrix) -> f64 {
        self.inner.max_abs_diff(&other.inner)
    }

    #[pyo3(signature = (tol=1e-10))]
    fn validate<'py>(&self, py: Python<'py>, tol: f64) -> PyResult<Bound<'py, PyDict>> {
        let rep = self.inner.validate(tol);
        let d = PyDict::new(py);
        d.set_item("hermiticity_defect", rep.hermiticity_defect)?;
        d.set_item("trace_defect", rep.trace_defect)?;
        d.set_item("min_eigenvalue", rep.min_eigenvalue)?;
        d.set_item("hermitian", rep.hermitian)?;
        d.set_item("normalized", rep.normalized)?;
        d.set_item("physical", rep.physical)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("DensityMatrix(twice_s={})", self.inner.twice_s().twice())
    }
}

/// Circle grid parameters. `r` and `delta` default to the spin-dependent values.
#[pyclass(name = "GridSpec", module = "spintomo_py", from_py_object)]
#[derive(Clone)]
pub struct PyGridSpec {
    inner: grid::GridSpec,
}

#[pymethods]
impl PyGridSpec {
    #[new]
    #[pyo3(signature = (twice_s, r=None, delta=None))]
    fn new(twice_s: u32, r: Option<f64>, delta: Option<f64>) -> PyResult<Self> {
        let ts = TwiceSpin(twice_s);
        let inner = grid::GridSpec::new(
            ts,
            r.unwrap_or_else(|| grid::default_r(ts)),
            delta.unwrap_or_else(|| grid::default_delta(ts)),
        )
        .map_err(py_err)?;
        Ok(PyGridSpec { inner })
    }

    #[getter]
    fn twice_s(&self) -> u32 {
        self.inner.twice_s().twice()
    }

    #[getter]
    fn r(&self) -> f64 {
        self.inner.r()
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta()
    }

    /// `(q, r_index, theta, phi)` for every grid point, circle-major.
    fn points(&self) -> Vec<(usize, usize, f64, f64)> {
        build_grid(&self.inner)
            .points
            .iter()
            .map(|p| (p.q, p.r_index, p.direction.theta, p.direction.phi))
            .collect()
    }

    /// Condition number of every equilibrated block.
    fn block_condition(&self) -> Vec<f64> {
        recon::condition_report(&self.inner).block_condition
    }

    fn __repr__(&self) -> String {
        format!(
            "GridSpec(twice_s={}, r={}, delta={})",
            self.inner.twice_s().twice(),
            self.inner.r(),
            self.inner.delta()
        )
    }
}

/// Probability of the outcome mu = s along (theta, phi).
#[pyfunction]
fn coherent_probability(rho: &PyDensityMatrix, theta: f64, phi: f64) -> PyResult<f64> {
    coherent::coherent_probability(&rho.inner, direction(theta, phi)?).map_err(py_err)
}

/// All 2s+1 outcome probabilities along (theta, phi), ordered mu = s, ..., -s.
#[pyfunction]
fn outcome_distribution(rho: &PyDensityMatrix, theta: f64, phi: f64) -> PyResult<Vec<f64>> {
    Ok(
        coherent::outcome_distribution(&rho.inner, direction(theta, phi)?)
            .map_err(py_err)?
            .probs,
    )
}

/// Simulated measurement file as JSON text. `shots = 0` gives exact probabilities.
#[pyfunction]
#[pyo3(signature = (rho, shots=0, seed=0, mode="coherent", grid=None))]
fn simulate(
    rho: &PyDensityMatrix,
    shots: u64,
    seed: u64,
    mode: &str,
    grid: Option<PyGridSpec>,
) -> PyResult<String> {
    let ts = rho.inner.twice_s();
    let policy = NumericPolicy::DEFAULT;
    let set = match mode {
        "coherent" => {
            let spec = grid
                .map(|g| g.inner)
                .unwrap_or_else(|| grid::GridSpec::with_defaults(ts));
            measurement::simulate_coherent(&rho.inner, &spec, shots, seed, &policy)
        }
        "multipole" => measurement::simulate_multipole(
            &rho.inner,
            &ConeDesign::corrected(ts),
            shots,
            seed,
            &policy,
        ),
        other => return Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
    }
    .map_err(py_err)?;
    Ok(set.to_json())
}

/// Reconstructs a state from measurement JSON. Returns `(rho, diagnostics)`.
#[pyfunction]
#[pyo3(signature = (measurements, renormalize=false, project_psd=false, cond_threshold=1e12))]
fn reconstruct<'py>(
    py: Python<'py>,
    measurements: &str,
    renormalize: bool,
    project_psd: bool,
    cond_threshold: f64,
) -> PyResult<(PyDensityMatrix, Bound<'py, PyDict>)> {
    let set = MeasurementSet::from_json(measurements).map_err(py_err)?;
    let options = ReconstructOptions {
        renormalize,
        project_psd,
        policy: NumericPolicy {
            condition_threshold: cond_threshold,
            ..NumericPolicy::DEFAULT
        },
    };
    let out = measurement::reconstruct_measurements(&set, &options).map_err(py_err)?;
    let diag = &out.diagnostics;
    let d = PyDict::new(py);
    d.set_item("trace_defect", diag.trace_defect)?;
    d.set_item("hermiticity_defect", diag.hermiticity_defect)?;
    d.set_item("min_eigenvalue", diag.min_eigenvalue)?;
    d.set_item("block_condition", diag.block_condition.clone())?;
    d.set_item("renormalized", diag.renormalized)?;
    d.set_item("psd_projected", diag.psd_projected)?;
    Ok((PyDensityMatrix { inner: out.rho }, d))
}

/// `<j1 m1 j2 m2 | j m>` with (half-)integer arguments given as floats.
#[pyfunction]
fn clebsch_gordan(j1: f64, m1: f64, j2: f64, m2: f64, j: f64, m: f64) -> PyResult<f64> {
    let twice = |x: f64| -> PyResult<i32> {
        let t = 2.0 * x;
        if (t - t.round()).abs() > 1e-9 {
            return Err(PyValueError::new_err(format!(
                "{x} is not a multiple of 1/2"
            )));
        }
        Ok(t.round() as i32)
    };
    Ok(multipole::clebsch_gordan(
        twice(j1)?,
        twice(m1)?,
        twice(j2)?,
        twice(m2)?,
        twice(j)?,
        twice(m)?,
    ))
}

/// Azimuthal orthogonality defects for 2s+1 and 4s+1 equispaced azimuths.
#[pyfunction]
fn aliasing_defect<'py>(py: Python<'py>, twice_s: u32) -> PyResult<Bound<'py, PyDict>> {
    let rep = multipole::aliasing_defect(TwiceSpin(twice_s));
    let d = PyDict::new(py);
    d.set_item("short_defect", rep.short_defect)?;
    d.set_item("long_defect", rep.long_defect)?;
    d.set_item("alias_pairs", rep.alias_pairs)?;
    Ok(d)
}

/// Numerical rank of a cone design and the required rank (2s+1)^2.
#[pyfunction]
#[pyo3(signature = (twice_s, thetas, azimuths, rank_tol=1e-10))]
fn cone_design_rank(
    twice_s: u32,
    thetas: Vec<f64>,
    azimuths: usize,
    rank_tol: f64,
) -> PyResult<(usize, usize)> {
    let design = ConeDesign::new(thetas, azimuths).map_err(py_err)?;
    let rep =
        multipole::cone_design_matrix(TwiceSpin(twice_s), &design, rank_tol).map_err(py_err)?;
    Ok((rep.rank, rep.required))
}

#[pymodule]
fn spintomo_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDensityMatrix>()?;
    m.add_class::<PyGridSpec>()?;
    m.add_function(wrap_pyfunction!(coherent_probability, m)?)?;
    m.add_function(wrap_pyfunction!(outcome_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(clebsch_gordan, m)?)?;
    m.add_function(wrap_pyfunction!(aliasing_defect, m)?)?;
    m.add_function(wrap_pyfunction!(cone_design_rank, m)?)?;
    m.add(
        "SingularSystemError",
        m.py().get_type::<SingularSystemError>(),
    )?;
    Ok(())
}
