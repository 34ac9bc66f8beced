//! Drives the extension module through an embedded interpreter.

use pyo3::prelude::*;
use pyo3::types::{IntoPyDict, PyDict, PyModule};

fn with_module<R>(f: impl FnOnce(&Bound<'_, PyModule>) -> PyResult<R>) -> R {
    Python::attach(|py| {
        let m = PyModule::new(py, "mimo_coexist").unwrap();
        mimo_coexist::mimo_coexist(&m).unwrap();
        f(&m).unwrap()
    })
}

#[test]
fn path_loss_and_books_cross_the_boundary() {
    with_module(|m| {
        let pl: f64 = m.getattr("path_loss_db")?.call1((1000.0,))?.extract()?;
        assert_eq!(pl, 130.0);
        let book = m.getattr("PilotBook")?.getattr("wbe")?.call1((10, 20))?;
        let stats = book.call_method0("gram_stats")?;
        let welch: f64 = stats.get_item("welch_sum")?.extract()?;
        assert!((welch - 40.0).abs() < 1e-9);
        Ok(())
    });
}

#[test]
fn link_model_rates_match_evaluate() {
    with_module(|m| {
        let s = m.getattr("Scenario")?.getattr("generate")?.call((), Some(&[("antennas", 64)].into_py_dict(m.py())?))?;
        let p = m.getattr("sci_data_powers")?.call1((&s,))?;
        let model = m.getattr("LinkModel")?.call1((&s, "sc3"))?;
        let rates: Vec<f64> = model.call_method1("rates", (&p,))?.extract()?;
        let rows = model.call_method1("evaluate", (&p,))?;
        assert_eq!(rates.len(), 50);
        for (i, r) in rates.iter().enumerate() {
            let row = rows.get_item(i)?.cast_into::<PyDict>()?;
            let rate: f64 = row.get_item("rate")?.unwrap().extract()?;
            assert_eq!(rate, *r);
        }
        Ok(())
    });
}

#[test]
fn core_errors_become_value_errors() {
    Python::attach(|py| {
        let m = PyModule::new(py, "mimo_coexist").unwrap();
        mimo_coexist::mimo_coexist(&m).unwrap();
        let err = m.getattr("error_floor").unwrap().call1((20, 10, "mmse")).unwrap_err();
        assert!(err.is_instance_of::<pyo3::exceptions::PyValueError>(py));
        let err = m.getattr("path_loss_db").unwrap().call1((-1.0,)).unwrap_err();
        assert!(err.is_instance_of::<pyo3::exceptions::PyValueError>(py));
    });
}
