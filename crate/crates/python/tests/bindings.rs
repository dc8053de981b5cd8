use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pysharpnorm::{kernel_by_name, to_py_err};
use sharpnorm::kernels::KernelFamily;
use sharpnorm::quadrature::IntegralResult;
use sharpnorm::Error;

#[test]
fn kernel_names() {
    assert_eq!(kernel_by_name("t").unwrap().family, KernelFamily::MassiveT);
    assert_eq!(kernel_by_name("t0").unwrap().family, KernelFamily::MasslessT0);
    assert_eq!(kernel_by_name("g3").unwrap().family, KernelFamily::HomogeneousG(3));
    assert!(kernel_by_name("g99").is_err());
    assert!(kernel_by_name("k").is_err());
}

#[test]
fn errors_map_to_python_types() {
    Python::attach(|py| {
        let bad = to_py_err(Error::InvalidInput("x".into()));
        assert!(bad.is_instance_of::<PyValueError>(py));
        let numeric = to_py_err(Error::NonConvergence {
            best: IntegralResult {
                value: 1.0,
                error_estimate: 1e-3,
                subdivisions_used: 10,
                converged: false,
            },
        });
        assert!(numeric.is_instance_of::<PyRuntimeError>(py));
        assert!(!numeric.is_instance_of::<PyValueError>(py));
        assert!(numeric.to_string().contains("did not converge"));
    });
}
