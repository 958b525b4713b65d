//! Python bindings: synthetic data, schedule evaluation and full pipeline runs.

use std::path::{Path, PathBuf};
use std::time::Duration;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use examsched::data::{build_calendar, parse_enrollment, write_enrollment, CalendarConfig, EnrollmentTable, SlotCalendar};
use examsched::metrics::{self, read_schedule, MetricWeights, MetricsReport};
use examsched::mip::{make_backend, BackendKind, SolveLimits};
use examsched::pipeline::{run_pipeline, write_artifacts, Method, PipelineConfig, PipelineError, StageLimits};
use examsched::synth::{generate, SynthConfig};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn pipeline_err(e: PipelineError) -> PyErr {
    match e {
        PipelineError::Input(_) | PipelineError::Output { .. } => value_err(e),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn load(
    enrollment: &Path,
    calendar: Option<&Path>,
    days: usize,
    slots_per_day: usize,
) -> PyResult<(EnrollmentTable, SlotCalendar)> {
    let table = parse_enrollment(enrollment).map_err(value_err)?;
    let cfg = match calendar {
        Some(p) => CalendarConfig::from_path(p).map_err(value_err)?,
        None => CalendarConfig::uniform(days, slots_per_day),
    };
    Ok((table, build_calendar(&cfg).map_err(value_err)?))
}

fn weights(spec: Option<&str>) -> PyResult<MetricWeights> {
    spec.map_or_else(|| Ok(MetricWeights::default()), |s| MetricWeights::parse(s).map_err(PyValueError::new_err))
}

fn report_dict<'py>(py: Python<'py>, r: &MetricsReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("conflicts", r.conflicts)?;
    d.set_item("triples", r.triples)?;
    d.set_item("triples_same_day", r.triples_same_day)?;
    d.set_item("triples_24hr", r.triples_24hr)?;
    d.set_item("b2b", r.b2b)?;
    d.set_item("b2b_evening_morning", r.b2b_evening_morning)?;
    d.set_item("b2b_other", r.b2b_other)?;
    d.set_item("two_in_24", r.two_in_24)?;
    d.set_item("three_in_4", r.three_in_4)?;
    d.set_item("reschedules", r.reschedules)?;
    d.set_item("weighted_score", r.weighted_score)?;
    Ok(d)
}

/// Write a seeded synthetic enrollment CSV and return its record count.
#[pyfunction]
#[pyo3(signature = (exams, students, path, seed = 0))]
fn synth(exams: usize, students: usize, path: PathBuf, seed: u64) -> PyResult<usize> {
    let t = generate(&SynthConfig::semester(exams, students, seed));
    let f = std::fs::File::create(&path).map_err(value_err)?;
    write_enrollment(&t, std::io::BufWriter::new(f)).map_err(value_err)?;
    Ok(t.num_records())
}

/// Metrics of a schedule CSV as a dict.
#[pyfunction]
#[pyo3(signature = (enrollment, schedule, days = 8, slots_per_day = 3, calendar = None, weights = None))]
fn evaluate<'py>(
    py: Python<'py>,
    enrollment: PathBuf,
    schedule: PathBuf,
    days: usize,
    slots_per_day: usize,
    calendar: Option<PathBuf>,
    weights: Option<&str>,
) -> PyResult<Bound<'py, PyDict>> {
    let (table, cal) = load(&enrollment, calendar.as_deref(), days, slots_per_day)?;
    let f = std::fs::File::open(&schedule).map_err(value_err)?;
    let s = read_schedule(&table, f).map_err(value_err)?;
    let r = metrics::evaluate(&s, &table, &cal, &self::weights(weights)?).map_err(value_err)?;
    report_dict(py, &r)
}

/// Run a pipeline and return `{"method", "metrics", "schedule"}`, where
/// `schedule` maps exam id to slot index. Artifacts are written when
/// `out_dir` is given.
#[pyfunction]
#[pyo3(signature = (
    enrollment, method = "gtsp", days = 8, slots_per_day = 3, calendar = None, weights = None,
    time_limit = 60.0, node_limit = None, layer_size = 15000, out_dir = None, backend = None
))]
#[allow(clippy::too_many_arguments)]
fn run<'py>(
    py: Python<'py>,
    enrollment: PathBuf,
    method: &str,
    days: usize,
    slots_per_day: usize,
    calendar: Option<PathBuf>,
    weights: Option<&str>,
    time_limit: f64,
    node_limit: Option<u64>,
    layer_size: u64,
    out_dir: Option<PathBuf>,
    backend: Option<&str>,
) -> PyResult<Bound<'py, PyDict>> {
    let (table, cal) = load(&enrollment, calendar.as_deref(), days, slots_per_day)?;
    let method: Method = method.parse().map_err(value_err)?;
    let lim = {
        let l = SolveLimits::seconds(time_limit);
        node_limit.map_or(l.clone(), |n| l.with_nodes(n))
    };
    let cfg = PipelineConfig {
        method,
        weights: self::weights(weights)?,
        limits: StageLimits {
            assign: lim.clone(),
            sequence: lim.clone(),
            post_total: Duration::from_secs_f64(time_limit.max(0.0)),
            post_window: lim.clone(),
            layer: lim,
        },
        layer_n2: layer_size,
        ..PipelineConfig::default()
    };
    let kind = match backend {
        Some(b) => b.parse::<BackendKind>().map_err(value_err)?,
        None => BackendKind::from_env().map_err(value_err)?,
    };
    let be = make_backend(kind).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let out = py.detach(|| run_pipeline(&cfg, &table, &cal, be.as_ref())).map_err(pipeline_err)?;
    if let Some(dir) = &out_dir {
        write_artifacts(&out, &table, dir).map_err(pipeline_err)?;
    }
    let d = PyDict::new(py);
    d.set_item("method", out.method.name())?;
    d.set_item("metrics", report_dict(py, &out.report)?)?;
    let slots = PyDict::new(py);
    for (e, &s) in out.schedule.slots().iter().enumerate() {
        slots.set_item(table.exam_id(e), s)?;
    }
    d.set_item("schedule", slots)?;
    Ok(d)
}

#[pymodule]
fn examsched_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
