//! Python module `vfe`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use vfe_core::algebraic::{self, RationalTime};
use vfe_core::analysis::{self, Side, DEFAULT_HOLDER_WINDOW, DEFAULT_PHI_TERMS};
use vfe_core::gauss::{self, GaussArgs};
use vfe_core::reproduce::standard_steps;
use vfe_core::spectral::{self, GridSpec};
use vfe_core::VfeError;

type Pair = (f64, f64);

fn err(e: VfeError) -> PyErr {
    match e {
        VfeError::InvalidArgument(_) | VfeError::NoInverse { .. } | VfeError::Parse(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn time(m: u32, p: i64, q: i64) -> PyResult<RationalTime> {
    RationalTime::new(m, p, q).map_err(err)
}

/// `G(a, b, c)` in closed form as `(re, im)`; needs `gcd(a, c) = 1`.
#[pyfunction]
fn gauss_sum(a: i64, b: i64, c: i64) -> PyResult<Pair> {
    let g = gauss::gauss_sum_closed(GaussArgs::new(a, b, c).map_err(err)?).map_err(err)?;
    Ok((g.re, g.im))
}

/// `G(a, b, c)` by direct summation as `(re, im)`.
#[pyfunction]
fn gauss_sum_direct(a: i64, b: i64, c: i64) -> PyResult<Pair> {
    let g = gauss::gauss_sum_direct(GaussArgs::new(a, b, c).map_err(err)?);
    Ok((g.re, g.im))
}

#[pyfunction]
fn gauss_magnitude(a: i64, b: i64, c: i64) -> PyResult<f64> {
    gauss::gauss_magnitude(GaussArgs::new(a, b, c).map_err(err)?).map_err(err)
}

#[pyfunction]
fn rho_angle(m: u32, q: i64) -> PyResult<f64> {
    if m < 3 || q < 1 {
        return Err(PyValueError::new_err("need M >= 3 and q >= 1"));
    }
    Ok(algebraic::rho_angle(m, q))
}

#[pyfunction]
fn psi_hat0(m: u32, p: i64, q: i64) -> PyResult<f64> {
    Ok(algebraic::psi_hat0(&time(m, p, q)?))
}

#[pyfunction]
fn closure_residual(m: u32, p: i64, q: i64) -> PyResult<f64> {
    Ok(algebraic::closure_residual(&time(m, p, q)?).max())
}

fn triples(v: &[nalgebra::Vector3<f64>]) -> Vec<[f64; 3]> {
    v.iter().map(|x| [x.x, x.y, x.z]).collect()
}

/// Exact polygon at `(2 pi / M^2)(p / q)` as a dict of lists.
#[pyfunction]
fn build_polygon<'py>(py: Python<'py>, m: u32, p: i64, q: i64) -> PyResult<Bound<'py, PyDict>> {
    let poly = algebraic::build_polygon(&time(m, p, q)?).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("vertices", triples(&poly.vertices))?;
    d.set_item("tangents", triples(&poly.tangents))?;
    d.set_item("virtual", poly.virtual_vertex.clone())?;
    d.set_item("side_length", poly.side_length)?;
    d.set_item("side_count", poly.side_count())?;
    d.set_item("closure_gap", poly.closure_gap)?;
    Ok(d)
}

/// One period from the regular `M`-gon; returns times, corner path, centre
/// height and the linear speed fit.
#[pyfunction]
#[pyo3(signature = (m, nodes_per_side, steps=None))]
fn simulate<'py>(py: Python<'py>, m: u32, nodes_per_side: usize, steps: Option<usize>) -> PyResult<Bound<'py, PyDict>> {
    let steps = steps.unwrap_or_else(|| standard_steps(m, nodes_per_side));
    let spec = GridSpec::new(m, nodes_per_side, steps).map_err(err)?;
    let traj = py.detach(|| spectral::run(&spec, &[])).map_err(err)?;
    let fit = analysis::fit_center_speed(&traj).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("times", traj.times.clone())?;
    d.set_item("corner", triples(&traj.corner))?;
    d.set_item("height", traj.height.clone())?;
    d.set_item("c_m", fit.c_m)?;
    d.set_item("max_deviation", fit.max_deviation)?;
    Ok(d)
}

/// Truncated `phi(t)` as `(re, im)`.
#[pyfunction]
#[pyo3(signature = (t, terms=DEFAULT_PHI_TERMS))]
fn phi(t: f64, terms: usize) -> Pair {
    let v = analysis::phi_series(t, terms);
    (v.re, v.im)
}

/// Power-law exponent of `|z(t) - z(t0)|` against `|t - t0|` over the window.
#[pyfunction]
#[pyo3(signature = (times, z_re, z_im, t0, lo=DEFAULT_HOLDER_WINDOW.0, hi=DEFAULT_HOLDER_WINDOW.1))]
fn holder_exponent(times: Vec<f64>, z_re: Vec<f64>, z_im: Vec<f64>, t0: f64, lo: f64, hi: f64) -> PyResult<(f64, f64)> {
    if times.len() != z_re.len() || times.len() != z_im.len() {
        return Err(PyValueError::new_err("times, z_re and z_im must have equal length"));
    }
    let samples: Vec<_> = times
        .iter()
        .zip(z_re.iter().zip(&z_im))
        .map(|(&t, (&re, &im))| (t, num_complex::Complex64::new(re, im)))
        .collect();
    let fit = analysis::holder_exponent(&samples, t0, (lo, hi), Side::Both).map_err(err)?;
    Ok((fit.exponent, fit.r_squared))
}

#[pymodule]
fn vfe(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(gauss_sum, m)?)?;
    m.add_function(wrap_pyfunction!(gauss_sum_direct, m)?)?;
    m.add_function(wrap_pyfunction!(gauss_magnitude, m)?)?;
    m.add_function(wrap_pyfunction!(rho_angle, m)?)?;
    m.add_function(wrap_pyfunction!(psi_hat0, m)?)?;
    m.add_function(wrap_pyfunction!(closure_residual, m)?)?;
    m.add_function(wrap_pyfunction!(build_polygon, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(phi, m)?)?;
    m.add_function(wrap_pyfunction!(holder_exponent, m)?)?;
    Ok(())
}
