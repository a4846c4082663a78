//! Python bindings. Matrices cross the boundary as nested lists of
//! `complex`; reports come back as plain dicts.

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use rsplab::bloch::{self, BlochVector as CoreBloch};
use rsplab::io::FamilyFile;
use rsplab::protocol::{self, RspProtocol as CoreProtocol, RspTranscript as CoreTranscript};
use rsplab::qmath::{self, ComplexMatrix, Subsystem};
use rsplab::rsp_eq::{self, StateSampler};

create_exception!(rsplab, RspError, PyValueError);

fn err(e: rsplab::Error) -> PyErr {
    RspError::new_err(e.to_string())
}

fn to_dict<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| RspError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn to_rows(m: &ComplexMatrix) -> Vec<Vec<Complex64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn from_rows(rows: Vec<Vec<Complex64>>) -> PyResult<ComplexMatrix> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(RspError::new_err("matrix must be a non-empty rectangular list of rows"));
    }
    Ok(ComplexMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn parse_sampler(name: &str) -> PyResult<StateSampler> {
    match name {
        "haar" => Ok(StateSampler::Haar),
        "equatorial" => Ok(StateSampler::Equatorial),
        "generic" => Ok(StateSampler::Generic),
        _ => Err(RspError::new_err(format!("unknown sampler `{name}`"))),
    }
}

fn core_unitaries(us: &[PyRef<'_, UnitaryOperator>]) -> Vec<qmath::UnitaryOperator> {
    us.iter().map(|u| u.inner.clone()).collect()
}

#[pyclass(module = "rsplab", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PureState {
    inner: qmath::PureState,
}

#[pymethods]
impl PureState {
    /// Unit-norm amplitudes; pass `normalize=True` to rescale.
    #[new]
    #[pyo3(signature = (amplitudes, normalize = false))]
    fn new(amplitudes: Vec<Complex64>, normalize: bool) -> PyResult<Self> {
        let inner = if normalize {
            qmath::PureState::normalized(amplitudes)
        } else {
            qmath::PureState::new(amplitudes)
        }
        .map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn basis(d: usize, k: usize) -> PyResult<Self> {
        Ok(Self {
            inner: qmath::PureState::basis(d, k).map_err(err)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn amplitudes(&self) -> Vec<Complex64> {
        self.inner.amplitudes().iter().copied().collect()
    }

    fn inner(&self, other: &PureState) -> PyResult<Complex64> {
        self.inner.inner(&other.inner).map_err(err)
    }

    fn projector(&self) -> DensityOperator {
        DensityOperator {
            inner: self.inner.projector(),
        }
    }

    fn evolve(&self, u: &UnitaryOperator) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.evolve(&u.inner).map_err(err)?,
        })
    }

    fn bloch(&self) -> PyResult<BlochVector> {
        Ok(BlochVector {
            inner: CoreBloch::from_pure(&self.inner).map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!("PureState({:?})", self.amplitudes())
    }
}

#[pyclass(module = "rsplab", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct DensityOperator {
    inner: qmath::DensityOperator,
}

#[pymethods]
impl DensityOperator {
    #[new]
    fn new(matrix: Vec<Vec<Complex64>>) -> PyResult<Self> {
        Ok(Self {
            inner: qmath::DensityOperator::new(from_rows(matrix)?).map_err(err)?,
        })
    }

    #[staticmethod]
    fn maximally_mixed(d: usize) -> PyResult<Self> {
        Ok(Self {
            inner: qmath::DensityOperator::maximally_mixed(d).map_err(err)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn matrix(&self) -> Vec<Vec<Complex64>> {
        to_rows(self.inner.matrix())
    }

    fn purity(&self) -> f64 {
        self.inner.purity()
    }

    fn eigenvalues(&self) -> Vec<f64> {
        self.inner.eigenvalues().iter().copied().collect()
    }

    fn fidelity_with(&self, psi: &PureState) -> PyResult<f64> {
        self.inner.fidelity_with(&psi.inner).map_err(err)
    }

    fn entropy(&self) -> f64 {
        qmath::von_neumann_entropy(&self.inner)
    }

    /// Keeps subsystem `keep` ("A" or "B") of a `d_a ⊗ d_b` state.
    fn partial_trace(&self, keep: &str, d_a: usize, d_b: usize) -> PyResult<Self> {
        let keep = match keep {
            "A" | "a" => Subsystem::A,
            "B" | "b" => Subsystem::B,
            _ => return Err(RspError::new_err("keep must be \"A\" or \"B\"")),
        };
        Ok(Self {
            inner: qmath::partial_trace(&self.inner, keep, d_a, d_b).map_err(err)?,
        })
    }

    fn overlap(&self, other: &DensityOperator) -> PyResult<f64> {
        qmath::overlap_trace(&self.inner, &other.inner).map_err(err)
    }
}

#[pyclass(module = "rsplab", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct UnitaryOperator {
    inner: qmath::UnitaryOperator,
}

#[pymethods]
impl UnitaryOperator {
    #[new]
    fn new(matrix: Vec<Vec<Complex64>>) -> PyResult<Self> {
        Ok(Self {
            inner: qmath::UnitaryOperator::new(from_rows(matrix)?).map_err(err)?,
        })
    }

    #[staticmethod]
    fn identity(d: usize) -> Self {
        Self {
            inner: qmath::UnitaryOperator::identity(d),
        }
    }

    /// Clock-and-shift operator `u_{p,x}`.
    #[staticmethod]
    fn shift(p: usize, x: usize, d: usize) -> PyResult<Self> {
        Ok(Self {
            inner: protocol::shift_operator(p, x, d).map_err(err)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn matrix(&self) -> Vec<Vec<Complex64>> {
        to_rows(self.inner.matrix())
    }

    fn adjoint(&self) -> Self {
        Self {
            inner: self.inner.adjoint(),
        }
    }

    fn compose(&self, other: &UnitaryOperator) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.compose(&other.inner).map_err(err)?,
        })
    }

    /// SO(3) image as a row-major 3×3 nested list (qubits only).
    fn rotation(&self) -> PyResult<Vec<Vec<f64>>> {
        let r = bloch::rotation_from_unitary(&self.inner).map_err(err)?;
        let m = r.matrix();
        Ok((0..3).map(|i| (0..3).map(|j| m[(i, j)]).collect()).collect())
    }
}

#[pyclass(module = "rsplab", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct BlochVector {
    inner: CoreBloch,
}

#[pymethods]
impl BlochVector {
    #[new]
    fn new(x: f64, y: f64, z: f64) -> Self {
        Self {
            inner: CoreBloch::new(x, y, z),
        }
    }

    #[getter]
    fn x(&self) -> f64 {
        self.inner.x()
    }
    #[getter]
    fn y(&self) -> f64 {
        self.inner.y()
    }
    #[getter]
    fn z(&self) -> f64 {
        self.inner.z()
    }

    fn norm(&self) -> f64 {
        self.inner.norm()
    }

    fn to_state(&self) -> PyResult<PureState> {
        Ok(PureState {
            inner: self.inner.to_pure().map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!("BlochVector({}, {}, {})", self.x(), self.y(), self.z())
    }
}

#[pyclass(module = "rsplab", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct RspProtocol {
    inner: CoreProtocol,
}

#[pymethods]
impl RspProtocol {
    /// Family with a fixed probability vector, or the solver-backed
    /// state-dependent rule when `probabilities` is omitted.
    #[new]
    #[pyo3(signature = (unitaries, probabilities = None))]
    fn new(
        unitaries: Vec<PyRef<'_, UnitaryOperator>>,
        probabilities: Option<Vec<f64>>,
    ) -> PyResult<Self> {
        let rule = match probabilities {
            Some(p) => protocol::ProbRule::Fixed(p),
            None => protocol::ProbRule::solver(),
        };
        Ok(Self {
            inner: CoreProtocol::new(core_unitaries(&unitaries), rule).map_err(err)?,
        })
    }

    #[staticmethod]
    fn shift_family(d: usize) -> PyResult<Self> {
        Ok(Self {
            inner: protocol::shift_family(d).map_err(err)?,
        })
    }

    #[staticmethod]
    fn pauli_family() -> Self {
        Self {
            inner: protocol::pauli_family(),
        }
    }

    #[staticmethod]
    fn equatorial() -> Self {
        Self {
            inner: bloch::equatorial_protocol(),
        }
    }

    /// Parses the JSON family-file format.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let file: FamilyFile =
            serde_json::from_str(text).map_err(|e| RspError::new_err(e.to_string()))?;
        Ok(Self {
            inner: file.into_protocol().map_err(err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&FamilyFile::from_protocol(&self.inner))
            .map_err(|e| RspError::new_err(e.to_string()))
    }

    fn truncated(&self, n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.truncated(n).map_err(err)?,
        })
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn classical_cost(&self) -> f64 {
        self.inner.classical_cost()
    }

    fn unitaries(&self) -> Vec<UnitaryOperator> {
        self.inner
            .unitaries()
            .iter()
            .map(|u| UnitaryOperator { inner: u.clone() })
            .collect()
    }

    fn probabilities(&self, phi: &PureState) -> PyResult<Vec<f64>> {
        self.inner.probabilities(&phi.inner).map_err(err)
    }

    /// Post-correction fidelity per outcome; `None` where `p_m = 0`.
    fn branch_fidelities(&self, phi: &PureState) -> PyResult<Vec<Option<f64>>> {
        protocol::branch_fidelities(&phi.inner, &self.inner).map_err(err)
    }

    /// One seeded run of the protocol on `phi`.
    #[pyo3(signature = (phi, seed, stream = 0))]
    fn run(&self, phi: &PureState, seed: u64, stream: u64) -> PyResult<RspTranscript> {
        let mut rng = qmath::seeded_rng(seed, stream);
        let t = protocol::run_rsp(&phi.inner, &self.inner, &mut rng).map_err(err)?;
        Ok(RspTranscript { inner: t })
    }

    /// Oblivious-case report for the protocol's fixed or uniform `p`.
    fn bound_report<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let n = self.inner.n();
        let p = match self.inner.prob_rule() {
            protocol::ProbRule::Fixed(p) => p.clone(),
            _ => vec![1.0 / n as f64; n],
        };
        let r = rsp_eq::oblivious_bound_report(self.inner.unitaries(), &p).map_err(err)?;
        to_dict(py, &r)
    }
}

#[pyclass(module = "rsplab", frozen, skip_from_py_object)]
pub struct RspTranscript {
    inner: CoreTranscript,
}

#[pymethods]
impl RspTranscript {
    /// 1-based message index.
    #[getter]
    fn outcome(&self) -> usize {
        self.inner.outcome
    }
    #[getter]
    fn outcome_probability(&self) -> f64 {
        self.inner.outcome_probability
    }
    #[getter]
    fn fidelity(&self) -> f64 {
        self.inner.fidelity
    }
    #[getter]
    fn classical_cost(&self) -> f64 {
        self.inner.classical_cost
    }
    #[getter]
    fn pre_correction_state(&self) -> DensityOperator {
        DensityOperator {
            inner: self.inner.pre_correction_state.clone(),
        }
    }
    #[getter]
    fn post_correction_state(&self) -> DensityOperator {
        DensityOperator {
            inner: self.inner.post_correction_state.clone(),
        }
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_dict(py, &self.inner)
    }
}

#[pyfunction]
#[pyo3(signature = (d, seed, stream = 0))]
fn haar_random_state(d: usize, seed: u64, stream: u64) -> PyResult<PureState> {
    let mut rng = qmath::seeded_rng(seed, stream);
    Ok(PureState {
        inner: qmath::haar_random_state(d, &mut rng).map_err(err)?,
    })
}

#[pyfunction]
#[pyo3(signature = (d, seed, stream = 0))]
fn haar_random_unitary(d: usize, seed: u64, stream: u64) -> UnitaryOperator {
    let mut rng = qmath::seeded_rng(seed, stream);
    UnitaryOperator {
        inner: qmath::haar_random_unitary(d, &mut rng),
    }
}

#[pyfunction]
fn max_entangled(d: usize) -> PyResult<PureState> {
    Ok(PureState {
        inner: qmath::max_entangled(d).map_err(err)?,
    })
}

#[pyfunction]
fn rsp_residual(
    unitaries: Vec<PyRef<'_, UnitaryOperator>>,
    p: Vec<f64>,
    phi: &PureState,
) -> PyResult<f64> {
    rsp_eq::rsp_residual(&core_unitaries(&unitaries), &p, &phi.inner).map_err(err)
}

/// Returns `{"status", "probabilities", "min_residual", "tolerance"}`.
#[pyfunction]
#[pyo3(signature = (unitaries, phi, tol = rsp_eq::DEFAULT_TOL))]
fn solve_probabilities<'py>(
    py: Python<'py>,
    unitaries: Vec<PyRef<'_, UnitaryOperator>>,
    phi: &PureState,
    tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let r = rsp_eq::solve_probabilities(&core_unitaries(&unitaries), &phi.inner, tol)
        .map_err(err)?;
    let dict = to_dict(py, &r)?;
    // the minimizer is not part of the wire format but useful from Python
    dict.cast::<PyDict>()?.set_item("minimizer", r.minimizer)?;
    Ok(dict)
}

#[pyfunction]
#[pyo3(signature = (unitaries, sampler = "haar", count = 100, tol = rsp_eq::DEFAULT_TOL, seed = 0))]
fn feasibility_scan<'py>(
    py: Python<'py>,
    unitaries: Vec<PyRef<'_, UnitaryOperator>>,
    sampler: &str,
    count: usize,
    tol: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let sampler = parse_sampler(sampler)?;
    let unitaries = core_unitaries(&unitaries);
    let r = py
        .detach(|| rsp_eq::feasibility_scan(&unitaries, sampler, count, tol, seed))
        .map_err(err)?;
    to_dict(py, &r)
}

#[pyfunction]
fn completeness_rank(unitaries: Vec<PyRef<'_, UnitaryOperator>>, phi: &PureState) -> PyResult<usize> {
    rsp_eq::completeness_rank(&core_unitaries(&unitaries), &phi.inner).map_err(err)
}

#[pyfunction]
fn trace_orthogonality_defect(unitaries: Vec<PyRef<'_, UnitaryOperator>>) -> PyResult<f64> {
    rsp_eq::trace_orthogonality_defect(&core_unitaries(&unitaries)).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (count = 500, seed = 0, tol = rsp_eq::DEFAULT_TOL))]
fn n3_impossibility_scan<'py>(
    py: Python<'py>,
    count: usize,
    seed: u64,
    tol: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let r = py
        .detach(|| bloch::n3_impossibility_scan(count, seed, tol))
        .map_err(err)?;
    to_dict(py, &r)
}

#[pyfunction]
#[pyo3(signature = (samples = 100, seed = 0, sampler = "equatorial"))]
fn equator_demo<'py>(
    py: Python<'py>,
    samples: usize,
    seed: u64,
    sampler: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let sampler = parse_sampler(sampler)?;
    let (report, _) = py
        .detach(|| bloch::equator_demo(samples, seed, sampler))
        .map_err(err)?;
    to_dict(py, &report)
}

#[pymodule(name = "rsplab")]
fn rsplab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("RspError", m.py().get_type::<RspError>())?;
    m.add("DEFAULT_TOL", rsp_eq::DEFAULT_TOL)?;
    m.add_class::<PureState>()?;
    m.add_class::<DensityOperator>()?;
    m.add_class::<UnitaryOperator>()?;
    m.add_class::<BlochVector>()?;
    m.add_class::<RspProtocol>()?;
    m.add_class::<RspTranscript>()?;
    m.add_function(wrap_pyfunction!(haar_random_state, m)?)?;
    m.add_function(wrap_pyfunction!(haar_random_unitary, m)?)?;
    m.add_function(wrap_pyfunction!(max_entangled, m)?)?;
    m.add_function(wrap_pyfunction!(rsp_residual, m)?)?;
    m.add_function(wrap_pyfunction!(solve_probabilities, m)?)?;
    m.add_function(wrap_pyfunction!(feasibility_scan, m)?)?;
    m.add_function(wrap_pyfunction!(completeness_rank, m)?)?;
    m.add_function(wrap_pyfunction!(trace_orthogonality_defect, m)?)?;
    m.add_function(wrap_pyfunction!(n3_impossibility_scan, m)?)?;
    m.add_function(wrap_pyfunction!(equator_demo, m)?)?;
    Ok(())
}
