use pyo3::prelude::*;

#[pymodule]
fn mouflon_py(_m: &Bound<'_, PyModule>) -> PyResult<()> {
    Ok(())
}
