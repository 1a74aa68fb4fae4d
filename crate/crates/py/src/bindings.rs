use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use primsketch::budget::Budgeted;
use primsketch::cli::{RecordsFile, RECORDS_SCHEMA_VERSION};
use primsketch::{
    abstract_sketch, primitive_set, render_primitive_svg, render_sketch_svg, sw_abstract,
    usage_stats, FitConfig, Gamma, Grid, Point, PrimitiveSketch, Sketch, Stroke, SvgStyle,
    DEFAULT_GRID_RESOLUTION, DEFAULT_KAPPA,
};

fn value_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// An ordered list of strokes in canvas coordinates.
#[pyclass(name = "Sketch", from_py_object)]
#[derive(Clone)]
pub struct PySketch {
    inner: Sketch,
}

#[pymethods]
impl PySketch {
    /// Builds a sketch from a list of strokes, each a list of (x, y)
    /// pairs.
    #[new]
    #[pyo3(signature = (strokes, id=None, category=None))]
    fn new(strokes: Vec<Vec<(f64, f64)>>, id: Option<String>, category: Option<String>) -> PyResult<Self> {
        let strokes = strokes
            .into_iter()
            .map(|pts| Stroke::new(pts.into_iter().map(|(x, y)| Point::new(x, y)).collect()))
            .collect::<Result<Vec<_>, _>>()
            .map_err(value_err)?;
        Ok(PySketch {
            inner: Sketch::new(strokes, id, category).map_err(value_err)?,
        })
    }

    #[getter]
    fn id(&self) -> Option<String> {
        self.inner.id.clone()
    }

    #[getter]
    fn category(&self) -> Option<String> {
        self.inner.category.clone()
    }

    fn strokes(&self) -> Vec<Vec<(f64, f64)>> {
        self.inner
            .strokes()
            .iter()
            .map(|s| s.points().iter().map(|p| (p.x, p.y)).collect())
            .collect()
    }

    /// Budget messages: ceil(points / 3) summed over strokes.
    fn message_count(&self) -> usize {
        self.inner.message_count()
    }

    /// Keeps the first max(1, floor(fraction * total)) messages in
    /// drawing order.
    fn truncate(&self, fraction: f64) -> PyResult<PySketch> {
        Ok(PySketch {
            inner: self.inner.truncate(fraction).map_err(value_err)?,
        })
    }

    fn to_svg(&self) -> String {
        render_sketch_svg(&self.inner, &SvgStyle::default())
    }

    fn __repr__(&self) -> String {
        format!(
            "Sketch(strokes={}, id={:?}, category={:?})",
            self.inner.strokes().len(),
            self.inner.id,
            self.inner.category
        )
    }
}

/// The abstracted sketch: one primitive record per source stroke.
#[pyclass(name = "PrimitiveSketch", from_py_object)]
#[derive(Clone)]
pub struct PyPrimitiveSketch {
    inner: PrimitiveSketch,
}

#[pymethods]
impl PyPrimitiveSketch {
    #[getter]
    fn sketch_id(&self) -> Option<String> {
        self.inner.sketch_id.clone()
    }

    #[getter]
    fn category(&self) -> Option<String> {
        self.inner.category.clone()
    }

    /// Records as dicts with keys id, theta1, sx, theta2, tx, ty, w.
    fn records<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.inner
            .records
            .iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("id", r.id.name())?;
                d.set_item("theta1", r.theta1)?;
                d.set_item("sx", r.sx)?;
                d.set_item("theta2", r.theta2)?;
                d.set_item("tx", r.tx)?;
                d.set_item("ty", r.ty)?;
                d.set_item("w", r.w)?;
                Ok(d)
            })
            .collect()
    }

    #[getter]
    fn residuals(&self) -> Vec<f64> {
        self.inner.residuals.clone()
    }

    #[getter]
    fn compat(&self) -> Vec<Vec<f64>> {
        self.inner.compat.clone()
    }

    #[getter]
    fn skipped_strokes(&self) -> Vec<usize> {
        self.inner.skipped_strokes.clone()
    }

    fn message_count(&self) -> usize {
        self.inner.message_count()
    }

    fn truncate(&self, fraction: f64) -> PyResult<PyPrimitiveSketch> {
        Ok(PyPrimitiveSketch {
            inner: self.inner.truncate(fraction).map_err(value_err)?,
        })
    }

    /// Re-draws every record into a canvas-space sketch.
    fn reconstruct(&self) -> PyResult<PySketch> {
        Ok(PySketch {
            inner: self.inner.reconstruct(primitive_set()).map_err(value_err)?,
        })
    }

    fn to_svg(&self) -> PyResult<String> {
        render_primitive_svg(&self.inner, primitive_set(), &SvgStyle::default())
            .map_err(value_err)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(value_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<PyPrimitiveSketch> {
        Ok(PyPrimitiveSketch {
            inner: serde_json::from_str(text).map_err(value_err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "PrimitiveSketch(records={}, skipped={})",
            self.inner.records.len(),
            self.inner.skipped_strokes.len()
        )
    }
}

/// Parses newline-delimited JSON sketches (QuickDraw raw format).
#[pyfunction]
fn parse_ndjson(text: &str) -> PyResult<Vec<PySketch>> {
    let sketches = primsketch::parse_ndjson(text.as_bytes()).map_err(value_err)?;
    Ok(sketches.into_iter().map(|inner| PySketch { inner }).collect())
}

/// Parses stroke-3 rows of (dx, dy, pen_lift).
#[pyfunction]
fn parse_stroke3(rows: Vec<(f64, f64, u8)>) -> PyResult<PySketch> {
    Ok(PySketch {
        inner: primsketch::parse_stroke3(&rows).map_err(value_err)?,
    })
}

/// Abstracts one sketch with the primitive matcher (`method="pmn"`) or
/// the least-squares line/arc baseline (`method="sw"`).
#[pyfunction(name = "abstract")]
#[pyo3(signature = (
    sketch,
    grid = DEFAULT_GRID_RESOLUTION,
    gamma = 6.0,
    kappa = DEFAULT_KAPPA,
    method = "pmn",
    coarse_steps = None,
    refine_iters = None,
    top_k = None,
))]
#[allow(clippy::too_many_arguments)]
fn abstract_py(
    py: Python<'_>,
    sketch: PySketch,
    grid: usize,
    gamma: f64,
    kappa: f64,
    method: &str,
    coarse_steps: Option<usize>,
    refine_iters: Option<usize>,
    top_k: Option<usize>,
) -> PyResult<PyPrimitiveSketch> {
    let grid = Grid::new(grid).map_err(value_err)?;
    let gamma = Gamma::new(gamma).map_err(value_err)?;
    let mut cfg = FitConfig::default();
    if let Some(v) = coarse_steps {
        cfg.coarse_theta_steps = v;
    }
    if let Some(v) = refine_iters {
        cfg.max_refine_iters = v;
    }
    if let Some(v) = top_k {
        cfg.refine_top_k = v;
    }
    let set = primitive_set();
    let inner = py.detach(|| match method {
        "pmn" => abstract_sketch(&sketch.inner, set, &grid, gamma, &cfg, kappa).map_err(value_err),
        "sw" => Ok(sw_abstract(&sketch.inner, set, &grid, gamma)),
        other => Err(value_err(format!("unknown method {other:?} (use \"pmn\" or \"sw\")"))),
    })?;
    Ok(PyPrimitiveSketch { inner })
}

/// Usage percentages per primitive, overall and per category.
#[pyfunction(name = "usage_stats")]
fn usage_stats_py<'py>(py: Python<'py>, results: Vec<PyPrimitiveSketch>) -> PyResult<Bound<'py, PyDict>> {
    let inner: Vec<PrimitiveSketch> = results.into_iter().map(|r| r.inner).collect();
    let stats = usage_stats(&inner);
    let out = PyDict::new(py);
    out.set_item("total_records", stats.total_records)?;
    let overall = PyDict::new(py);
    for e in &stats.overall {
        overall.set_item(e.id.name(), e.percent)?;
    }
    out.set_item("overall", overall)?;
    let per_cat = PyDict::new(py);
    for (cat, entries) in &stats.per_category {
        let d = PyDict::new(py);
        for e in entries {
            d.set_item(e.id.name(), e.percent)?;
        }
        per_cat.set_item(cat, d)?;
    }
    out.set_item("per_category", per_cat)?;
    Ok(out)
}

/// Human-vs-primitive message accounting for one sketch.
#[pyfunction]
fn compression_summary<'py>(
    py: Python<'py>,
    sketch: PySketch,
    abstraction: PyPrimitiveSketch,
) -> PyResult<Bound<'py, PyDict>> {
    let s = primsketch::compression_summary(&sketch.inner, &abstraction.inner);
    let out = PyDict::new(py);
    out.set_item("human_messages", s.human_messages)?;
    out.set_item("primitive_messages", s.primitive_messages)?;
    out.set_item("ratio", s.ratio)?;
    let kept = PyDict::new(py);
    for line in &s.kept {
        kept.set_item(
            format!("{}", line.fraction),
            (line.human_kept, line.primitive_kept),
        )?;
    }
    out.set_item("kept", kept)?;
    Ok(out)
}

/// Serializes abstractions into the records-file JSON the CLI reads.
#[pyfunction]
fn records_to_json(results: Vec<PyPrimitiveSketch>) -> PyResult<String> {
    let file = RecordsFile {
        schema_version: RECORDS_SCHEMA_VERSION,
        sketches: results.into_iter().map(|r| r.inner).collect(),
    };
    serde_json::to_string_pretty(&file).map_err(value_err)
}

/// Names of the primitive vocabulary, in order.
#[pyfunction]
fn primitive_names() -> Vec<&'static str> {
    primsketch::PrimitiveId::ALL.iter().map(|id| id.name()).collect()
}

pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySketch>()?;
    m.add_class::<PyPrimitiveSketch>()?;
    m.add_function(wrap_pyfunction!(parse_ndjson, m)?)?;
    m.add_function(wrap_pyfunction!(parse_stroke3, m)?)?;
    m.add_function(wrap_pyfunction!(abstract_py, m)?)?;
    m.add_function(wrap_pyfunction!(usage_stats_py, m)?)?;
    m.add_function(wrap_pyfunction!(compression_summary, m)?)?;
    m.add_function(wrap_pyfunction!(records_to_json, m)?)?;
    m.add_function(wrap_pyfunction!(primitive_names, m)?)?;
    m.add("DEFAULT_GRID_RESOLUTION", DEFAULT_GRID_RESOLUTION)?;
    m.add("DEFAULT_KAPPA", DEFAULT_KAPPA)?;
    Ok(())
}
