//! Python module `pysharpnorm`: thin wrappers over the `sharpnorm` crate.
//!
//! Long computations release the GIL. Invalid arguments raise `ValueError`;
//! numerical failures raise `pysharpnorm.NumericalError`.

use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use sharpnorm::kernels::{self, PhysicalParams, FINE_STRUCTURE};
use sharpnorm::quadrature::QuadSpec;
use sharpnorm::schur::{self, SearchSettings, WeightPair};
use sharpnorm::spectral::{self, DiagonalTreatment, MeshSpec};
use sharpnorm::variational::{self, TestFunctionSpec};
use sharpnorm::{Error, KernelSpec, SHARP_CONSTANT};

create_exception!(pysharpnorm, NumericalError, PyRuntimeError, "A computation failed to converge or produced a non-finite value.");

pub fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Domain { .. } | Error::InvalidInput(_) | Error::ZeroNorm => PyValueError::new_err(e.to_string()),
        other => NumericalError::new_err(other.to_string()),
    }
}

trait IntoPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for sharpnorm::Result<T> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(to_py_err)
    }
}

/// `"t"`, `"t0"` or `"g<l>"`.
pub fn kernel_by_name(name: &str) -> sharpnorm::Result<KernelSpec> {
    match name {
        "t" => Ok(KernelSpec::massive_t()),
        "t0" => Ok(KernelSpec::massless_t0()),
        _ => match name.strip_prefix('g').and_then(|l| l.parse().ok()) {
            Some(l) => KernelSpec::homogeneous(l),
            None => Err(Error::InvalidInput(format!("unknown kernel {name:?}; use t, t0 or g<l>"))),
        },
    }
}

fn quad(rel_tol: f64) -> sharpnorm::Result<QuadSpec> {
    let spec = QuadSpec::with_tolerances(rel_tol, 1e-14);
    spec.validate()?;
    Ok(spec)
}

fn params(alpha: f64) -> sharpnorm::Result<PhysicalParams> {
    PhysicalParams::new(1.0, 1.0, alpha, 0.0)
}

#[pyfunction]
fn kernel_t(x: f64, y: f64) -> PyResult<f64> {
    kernels::kernel_t(x, y).py_err()
}

#[pyfunction]
fn kernel_t0(x: f64, y: f64) -> PyResult<f64> {
    kernels::kernel_t0(x, y).py_err()
}

#[pyfunction]
fn g0(u: f64) -> PyResult<f64> {
    kernels::g0(u).py_err()
}

#[pyfunction]
fn g1(u: f64) -> PyResult<f64> {
    kernels::g1(u).py_err()
}

#[pyfunction]
fn g_l(l: usize, u: f64) -> PyResult<f64> {
    kernels::g_l(l, u).py_err()
}

#[pyfunction]
fn legendre_q(l: usize, z: f64) -> PyResult<f64> {
    kernels::legendre_q(l, z).py_err()
}

#[pyfunction]
fn critical_charge(alpha: f64) -> PyResult<f64> {
    kernels::critical_charge(alpha).py_err()
}

/// Closed form of the Schur bound function for the default weights.
#[pyfunction]
fn closed_form_bound(x: f64) -> f64 {
    schur::closed_form_bound(x)
}

/// Supremum of the weighted Schur bound function. Returns a dict with
/// `sup`, `attained`, `limit`, `roots` and `samples` (list of `(x, F(x))`).
#[pyfunction]
#[pyo3(signature = (weights = "sharp", grid_points = 400, x_min = 1e-4, x_max = 1e4, rel_tol = 1e-10))]
fn schur_bound<'py>(
    py: Python<'py>,
    weights: &str,
    grid_points: usize,
    x_min: f64,
    x_max: f64,
    rel_tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let w = match weights {
        "sharp" => WeightPair::sharp(),
        "unweighted" => WeightPair::unweighted(),
        other => return Err(PyValueError::new_err(format!("unknown weights {other:?}; use sharp or unweighted"))),
    };
    let search = SearchSettings {
        grid_points,
        x_min,
        x_max,
        ..SearchSettings::default()
    };
    let spec = quad(rel_tol).py_err()?;
    let r = py.detach(|| schur::schur_bound(&w, &search, &spec)).py_err()?;
    let roots: Vec<f64> = schur::sup_f_analysis().py_err()?.roots.iter().map(|b| b.root).collect();
    let d = PyDict::new(py);
    d.set_item("sup", r.sup_value)?;
    d.set_item("attained", r.attained)?;
    d.set_item("limit", r.limit_value)?;
    d.set_item("roots", roots)?;
    d.set_item("samples", r.samples)?;
    Ok(d)
}

/// Rayleigh quotient of `chi_(1,delta)(x)/sqrt(x)`.
#[pyfunction]
#[pyo3(signature = (delta, kernel = "t", rel_tol = 1e-9))]
fn rayleigh_quotient(py: Python<'_>, delta: f64, kernel: &str, rel_tol: f64) -> PyResult<f64> {
    let k = kernel_by_name(kernel).py_err()?;
    let phi = TestFunctionSpec::chi_over_sqrt(delta).py_err()?;
    let spec = quad(rel_tol).py_err()?;
    py.detach(|| variational::rayleigh_quotient(&k, &phi, &spec)).py_err()
}

/// Quotients for increasing `deltas` and the `limit - c1/L - c2/L^2` fit.
#[pyfunction]
#[pyo3(signature = (deltas, kernel = "t", rel_tol = 1e-9))]
fn rayleigh_scan<'py>(py: Python<'py>, deltas: Vec<f64>, kernel: &str, rel_tol: f64) -> PyResult<Bound<'py, PyDict>> {
    let k = kernel_by_name(kernel).py_err()?;
    let spec = quad(rel_tol).py_err()?;
    let scan = py.detach(|| variational::rayleigh_scan(&k, &deltas, &spec)).py_err()?;
    let d = PyDict::new(py);
    d.set_item("points", scan.points)?;
    if let Some(fit) = scan.fit {
        d.set_item("limit", fit.limit)?;
        d.set_item("limit_std_error", fit.limit_std_error)?;
    }
    Ok(d)
}

/// Largest eigenvalue of the Nystrom matrix on `[eps, r]`.
#[pyfunction]
#[pyo3(signature = (eps, r, kernel = "t", panels_per_decade = 3, order = 8, grading = 6, ignore_diagonal = false, eig_tol = 1e-12))]
#[allow(clippy::too_many_arguments)]
fn nystrom<'py>(
    py: Python<'py>,
    eps: f64,
    r: f64,
    kernel: &str,
    panels_per_decade: usize,
    order: usize,
    grading: usize,
    ignore_diagonal: bool,
    eig_tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let k = kernel_by_name(kernel).py_err()?;
    let mesh = MeshSpec {
        panels_per_decade,
        order,
        end_grading: grading,
        treatment: if ignore_diagonal {
            DiagonalTreatment::IgnoreDiagonal
        } else {
            DiagonalTreatment::ProductIntegration
        },
    };
    let (disc, res) = py
        .detach(|| {
            let disc = spectral::build_nystrom(&k, eps, r, &mesh)?;
            let res = disc.largest_eigenvalue(eig_tol)?;
            Ok((disc, res))
        })
        .py_err()?;
    let d = PyDict::new(py);
    d.set_item("lambda_max", res.lambda_max)?;
    d.set_item("residual", res.residual)?;
    d.set_item("n", disc.n())?;
    d.set_item("nodes", disc.nodes)?;
    d.set_item("eigenvector", res.eigenvector)?;
    Ok(d)
}

/// Partial-wave dominance scan; returns `pairs_checked`, `worst_ratio` and
/// `violations` as `(l, s, p_prime, p)` tuples.
#[pyfunction]
#[pyo3(signature = (l_max = 4, grid = 50, lo = 1e-2, hi = 1e2, slack = 1e-12, alpha = FINE_STRUCTURE))]
fn dominance_scan<'py>(
    py: Python<'py>,
    l_max: usize,
    grid: usize,
    lo: f64,
    hi: f64,
    slack: f64,
    alpha: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let p = params(alpha).py_err()?;
    let r = py.detach(|| kernels::dominance_scan(l_max, grid, lo, hi, slack, &p)).py_err()?;
    let violations: Vec<(usize, f64, f64, f64)> =
        r.violations.iter().map(|v| (v.l, v.spin.value(), v.p_prime, v.p)).collect();
    let d = PyDict::new(py);
    d.set_item("pairs_checked", r.pairs_checked)?;
    d.set_item("worst_ratio", r.worst_ratio)?;
    d.set_item("violations", violations)?;
    Ok(d)
}

/// Stability margins for seeded random trial functions: one list per
/// trial, one margin per entry of `z_fracs`.
#[pyfunction]
#[pyo3(signature = (seed = 2024, trials = 50, z_fracs = vec![0.3, 0.7, 1.0], alpha = FINE_STRUCTURE, rel_tol = 1e-9))]
fn stability_margins(
    py: Python<'_>,
    seed: u64,
    trials: usize,
    z_fracs: Vec<f64>,
    alpha: f64,
    rel_tol: f64,
) -> PyResult<Vec<Vec<f64>>> {
    let p = params(alpha).py_err()?;
    let spec = quad(rel_tol).py_err()?;
    let suite = py
        .detach(|| variational::stability_suite(seed, trials, &z_fracs, &p, &spec))
        .py_err()?;
    Ok(suite
        .iter()
        .map(|(_, reports)| reports.iter().map(|r| r.margin).collect())
        .collect())
}

#[pymodule]
fn pysharpnorm(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", sharpnorm::VERSION)?;
    m.add("SHARP_CONSTANT", SHARP_CONSTANT)?;
    m.add("FINE_STRUCTURE", FINE_STRUCTURE)?;
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add_function(wrap_pyfunction!(kernel_t, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_t0, m)?)?;
    m.add_function(wrap_pyfunction!(g0, m)?)?;
    m.add_function(wrap_pyfunction!(g1, m)?)?;
    m.add_function(wrap_pyfunction!(g_l, m)?)?;
    m.add_function(wrap_pyfunction!(legendre_q, m)?)?;
    m.add_function(wrap_pyfunction!(critical_charge, m)?)?;
    m.add_function(wrap_pyfunction!(closed_form_bound, m)?)?;
    m.add_function(wrap_pyfunction!(schur_bound, m)?)?;
    m.add_function(wrap_pyfunction!(rayleigh_quotient, m)?)?;
    m.add_function(wrap_pyfunction!(rayleigh_scan, m)?)?;
    m.add_function(wrap_pyfunction!(nystrom, m)?)?;
    m.add_function(wrap_pyfunction!(dominance_scan, m)?)?;
    m.add_function(wrap_pyfunction!(stability_margins, m)?)?;
    Ok(())
}
