//! Python bindings for the SCE solver.

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

use sce_core::kinematics::{self, CouplingParams, MomentConvention};
use sce_core::mode_oracle::{self, BumpSpec};
use sce_core::propagator::{self, PotentialTrajectory};
use sce_core::sce::{self, BackgroundField, Formulation, InitialData, ScaleFactorJet, SolveOptions};
use sce_core::seqspace::{self, NormSpec, Triple, WeightSpec};
use sce_core::SceError;

create_exception!(sce_py, NumericalHalt, PyException, "The integration stopped before reaching the requested time.");

fn err(e: SceError) -> PyErr {
    match e {
        SceError::InvalidArgument(_) | SceError::Domain(_) | SceError::InsufficientJetOrder { .. } | SceError::IndexOutOfRange { .. } => {
            PyValueError::new_err(e.to_string())
        }
        _ => NumericalHalt::new_err(e.to_string()),
    }
}

/// Truncated moment sequence (M_0, …, M_N) of (φφ, φπ, ππ) triples.
#[pyclass(module = "sce_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct MomentVector(seqspace::MomentVector);

#[pymethods]
impl MomentVector {
    #[new]
    fn new(entries: Vec<Triple>) -> PyResult<Self> {
        seqspace::MomentVector::new(entries).map(Self).map_err(err)
    }

    #[getter]
    fn order(&self) -> usize {
        self.0.order()
    }

    fn entries(&self) -> Vec<Triple> {
        self.0.entries().to_vec()
    }

    fn __getitem__(&self, n: usize) -> PyResult<Triple> {
        if n > self.0.order() {
            return Err(pyo3::exceptions::PyIndexError::new_err(n));
        }
        Ok(self.0.get(n))
    }

    fn __len__(&self) -> usize {
        self.0.order() + 1
    }

    /// Weighted ℓᵖ norm with geometric weights c·ωⁿ, or (2n)!·ω²ⁿ when `factorial`.
    #[pyo3(signature = (p=f64::INFINITY, omega=1.0, c=1.0, factorial=false))]
    fn norm(&self, p: f64, omega: f64, c: f64, factorial: bool) -> PyResult<f64> {
        let weights = if factorial { WeightSpec::factorial(omega) } else { WeightSpec::geometric(c, omega) }.map_err(err)?;
        let spec = NormSpec { p, weights };
        spec.validate().map_err(err)?;
        Ok(seqspace::weighted_norm(&self.0, &spec))
    }

    fn __repr__(&self) -> String {
        format!("MomentVector(order={}, M_0={:?})", self.0.order(), self.0.get(0))
    }
}

/// V(τ) as a constant or base + amplitude·sin(frequency·τ + phase).
#[pyclass(module = "sce_py", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct Potential(propagator::Potential);

#[pymethods]
impl Potential {
    #[staticmethod]
    fn constant(value: f64) -> Self {
        Self(propagator::Potential::Constant { value })
    }

    #[staticmethod]
    #[pyo3(signature = (base, amplitude, frequency, phase=0.0))]
    fn sinusoid(base: f64, amplitude: f64, frequency: f64, phase: f64) -> Self {
        Self(propagator::Potential::Sinusoid { base, amplitude, frequency, phase })
    }

    fn __call__(&self, tau: f64) -> f64 {
        self.0.value(tau)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.0)
    }
}

#[pyclass(module = "sce_py", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PhysicsParams(sce::PhysicsParams);

#[pymethods]
impl PhysicsParams {
    #[new]
    #[pyo3(signature = (m=1.0, xi=0.0, kappa=1.0, c1=0.0, c2=0.0, c3=-1.0/3.0, c4=0.0, lambda0=1.0))]
    #[allow(clippy::too_many_arguments)]
    fn new(m: f64, xi: f64, kappa: f64, c1: f64, c2: f64, c3: f64, c4: f64, lambda0: f64) -> PyResult<Self> {
        let coupling = CouplingParams::new(m, xi).map_err(err)?;
        sce::PhysicsParams::new(coupling, kappa, [c1, c2, c3, c4], lambda0).map(Self).map_err(err)
    }

    /// ξ = 1/6 and 3c₃ + c₄ = −1/(5760π²).
    #[staticmethod]
    #[pyo3(signature = (m=1.0, kappa=1.0, c1=0.0, c2=0.0, lambda0=1.0))]
    fn conformal(m: f64, kappa: f64, c1: f64, c2: f64, lambda0: f64) -> PyResult<Self> {
        sce::PhysicsParams::conformal(m, kappa, c1, c2, lambda0).map(Self).map_err(err)
    }

    /// Copy with c₁ chosen so the static energy constraint holds for `moments`.
    fn calibrated(&self, moments: &MomentVector) -> PyResult<Self> {
        let mut p = self.0;
        p.c1 = sce::calibrate_c1(moments.0.get(0)[2], p.m(), p.lambda0).map_err(err)?;
        Ok(Self(p))
    }

    #[getter]
    fn m(&self) -> f64 {
        self.0.m()
    }
    #[getter]
    fn xi(&self) -> f64 {
        self.0.xi()
    }
    #[getter]
    fn kappa(&self) -> f64 {
        self.0.kappa
    }
    #[getter]
    fn c(&self) -> [f64; 4] {
        [self.0.c1, self.0.c2, self.0.c3, self.0.c4]
    }
    #[getter]
    fn lambda0(&self) -> f64 {
        self.0.lambda0
    }

    fn is_conformal(&self) -> bool {
        self.0.is_conformal()
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.0)
    }
}

/// Sampled solution; columns are plain lists.
#[pyclass(module = "sce_py", frozen, get_all)]
struct Trajectory {
    tau: Vec<f64>,
    a: Vec<f64>,
    a1: Vec<f64>,
    a2: Vec<f64>,
    a3: Vec<f64>,
    hubble: Vec<f64>,
    ricci: Vec<f64>,
    trace_residual: Vec<f64>,
    energy_residual: Vec<f64>,
    /// Halt reason, or None when the run reached the end of the span.
    halt: Option<String>,
    moments: Vec<MomentVector>,
}

#[pymethods]
impl Trajectory {
    fn __len__(&self) -> usize {
        self.tau.len()
    }

    fn __repr__(&self) -> String {
        format!("Trajectory(samples={}, halt={:?})", self.tau.len(), self.halt)
    }
}

impl From<sce::SceTrajectory> for Trajectory {
    fn from(t: sce::SceTrajectory) -> Self {
        let col = |f: &dyn Fn(&sce::TrajectorySample) -> f64| t.samples.iter().map(f).collect::<Vec<f64>>();
        Self {
            tau: col(&|s| s.tau),
            a: col(&|s| s.jet.a),
            a1: col(&|s| s.jet.a1),
            a2: col(&|s| s.jet.a2),
            a3: col(&|s| s.jet.a3),
            hubble: col(&|s| s.jet.hubble()),
            ricci: col(&|s| s.jet.ricci()),
            trace_residual: col(&|s| s.diagnostics.trace_residual),
            energy_residual: col(&|s| s.diagnostics.energy_residual),
            halt: t.halt.as_ref().map(|h| format!("tau = {}: {}", h.tau, h.reason)),
            moments: t.samples.iter().map(|s| MomentVector(s.moments.clone())).collect(),
        }
    }
}

fn formulation(name: &str) -> PyResult<Formulation> {
    match name {
        "fourth_order" => Ok(Formulation::FourthOrder),
        "conformal_second_order" => Ok(Formulation::ConformalSecondOrder),
        _ => Err(PyValueError::new_err(format!("unknown formulation '{name}'"))),
    }
}

#[pyfunction]
#[pyo3(signature = (m, mu, order))]
fn vacuum_moments(m: f64, mu: f64, order: usize) -> PyResult<MomentVector> {
    kinematics::vacuum_moments(m, mu, order).map(MomentVector).map_err(err)
}

/// Thermal moments; massless closed form when m = 0.
#[pyfunction]
#[pyo3(signature = (beta, order, m=0.0, mu=1.0))]
fn thermal_moments(beta: f64, order: usize, m: f64, mu: f64) -> PyResult<MomentVector> {
    let out = if m == 0.0 {
        kinematics::thermal_moments(beta, order, MomentConvention::PositionSpace)
    } else {
        kinematics::massive_thermal_moments(m, mu, beta, order)
    };
    out.map(MomentVector).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (center, width, amplitude, order, smoothness=8, nodes=257))]
fn bump_moments(center: f64, width: f64, amplitude: Triple, order: usize, smoothness: u32, nodes: usize) -> PyResult<MomentVector> {
    let b = BumpSpec { smoothness, nodes, ..BumpSpec::new(center, width, amplitude) };
    b.validate().map_err(err)?;
    mode_oracle::bump_moments(&b, order).map(MomentVector).map_err(err)
}

/// Evolve the moment hierarchy dM/dτ = S(V)M with adaptive Runge–Kutta.
#[pyfunction]
#[pyo3(signature = (moments, potential, tau0, tau1, tol=1e-12))]
fn evolve_moments(py: Python<'_>, moments: &MomentVector, potential: &Potential, tau0: f64, tau1: f64, tol: f64) -> PyResult<MomentVector> {
    let (m, v) = (moments.0.clone(), potential.0);
    py.detach(|| propagator::evolve_rk(&m, &v, tau0, tau1, tol)).map(MomentVector).map_err(err)
}

/// (‖U‖ bound, C) for the geometric weights ωⁿ.
#[pyfunction]
fn geometric_bound(potential: &Potential, omega: f64, tau0: f64, tau1: f64) -> PyResult<(f64, f64)> {
    let r = propagator::geometric_bound(&potential.0, omega, tau0, tau1).map_err(err)?;
    Ok((r.bound, r.c_omega))
}

/// a‴ solving the energy constraint.
#[pyfunction]
#[pyo3(signature = (jet, moments, params, background=(0.0, 0.0)))]
fn solve_energy_for_a3(jet: (f64, f64, f64), moments: &MomentVector, params: &PhysicsParams, background: (f64, f64)) -> PyResult<f64> {
    let j = ScaleFactorJet::new(jet.0, jet.1, jet.2, 0.0);
    let bg = BackgroundField::new(background.0, background.1);
    sce::solve_energy_for_a3(&j, &moments.0.get(0), &moments.0.get(1), &bg, &params.0).map_err(err)
}

/// (trace residual, energy residual) at one jet (a, a′, a″, a‴, a⁗).
#[pyfunction]
#[pyo3(signature = (jet, moments, params, background=(0.0, 0.0)))]
fn residuals(jet: (f64, f64, f64, f64, f64), moments: &MomentVector, params: &PhysicsParams, background: (f64, f64)) -> PyResult<(f64, f64)> {
    let j = ScaleFactorJet::new(jet.0, jet.1, jet.2, jet.3).with_a4(jet.4);
    let bg = BackgroundField::new(background.0, background.1);
    let (m0, m1) = (moments.0.get(0), moments.0.get(1));
    let t = sce::trace_from_components(&j, &m0, &m1, &bg, &params.0).map_err(err)?;
    let e = sce::energy_residual(&j, &m0, &m1, &bg, &params.0).map_err(err)?;
    Ok((t, e.value))
}

/// Integrate the semiclassical Einstein equation from jet (a, a′, a″, a‴).
///
/// A halt does not raise; it is reported in `Trajectory.halt`.
#[pyfunction]
#[pyo3(signature = (jet, moments, params, span, formulation="fourth_order", background=(0.0, 0.0), tol=1e-10, sample_dt=0.01))]
#[allow(clippy::too_many_arguments)]
fn solve_sce(
    py: Python<'_>,
    jet: (f64, f64, f64, f64),
    moments: &MomentVector,
    params: &PhysicsParams,
    span: (f64, f64),
    formulation: &str,
    background: (f64, f64),
    tol: f64,
    sample_dt: f64,
) -> PyResult<Trajectory> {
    let form = self::formulation(formulation)?;
    let init = InitialData::new(
        ScaleFactorJet::new(jet.0, jet.1, jet.2, jet.3),
        moments.0.clone(),
        BackgroundField::new(background.0, background.1),
    );
    let opts = SolveOptions { tol, sample_dt, ..Default::default() };
    let p = params.0;
    py.detach(|| sce::solve_sce(&init, &p, form, span, &opts)).map(Trajectory::from).map_err(err)
}

/// Largest per-index gap between mode-by-mode and hierarchy evolution of a bump state.
#[pyfunction]
#[pyo3(signature = (center, width, amplitude, potential, tau0, tau1, order, tol=1e-12))]
#[allow(clippy::too_many_arguments)]
fn oracle_gap(
    py: Python<'_>,
    center: f64,
    width: f64,
    amplitude: Triple,
    potential: &Potential,
    tau0: f64,
    tau1: f64,
    order: usize,
    tol: f64,
) -> PyResult<(f64, usize)> {
    let b = BumpSpec::new(center, width, amplitude);
    let v = potential.0;
    let r = py.detach(|| mode_oracle::oracle_compare(&b, &v, tau0, tau1, order, tol)).map_err(err)?;
    Ok((r.max_abs_gap, r.retained))
}

#[pymodule]
fn sce_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<MomentVector>()?;
    m.add_class::<Potential>()?;
    m.add_class::<PhysicsParams>()?;
    m.add_class::<Trajectory>()?;
    m.add("NumericalHalt", m.py().get_type::<NumericalHalt>())?;
    m.add_function(wrap_pyfunction!(vacuum_moments, m)?)?;
    m.add_function(wrap_pyfunction!(thermal_moments, m)?)?;
    m.add_function(wrap_pyfunction!(bump_moments, m)?)?;
    m.add_function(wrap_pyfunction!(evolve_moments, m)?)?;
    m.add_function(wrap_pyfunction!(geometric_bound, m)?)?;
    m.add_function(wrap_pyfunction!(solve_energy_for_a3, m)?)?;
    m.add_function(wrap_pyfunction!(residuals, m)?)?;
    m.add_function(wrap_pyfunction!(solve_sce, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_gap, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_split_by_kind() {
        Python::initialize();
        Python::attach(|py| {
            assert!(err(SceError::InvalidArgument("x".into())).is_instance_of::<PyValueError>(py));
            assert!(err(SceError::BigBang { a: 0.0 }).is_instance_of::<NumericalHalt>(py));
        });
    }
}
