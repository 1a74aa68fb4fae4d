use pyo3::prelude::*;

mod bindings;

#[pymodule]
fn primsketch_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    bindings::register(m)
}
