//! End-to-end pipelines, artefact output and parameter sweeps.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assign::{self, check_block_count, write_blocks, AssignError, BlockAssignment};
use crate::data::{compute_stats, CoenrollmentStats, EnrollmentTable, SlotCalendar};
use crate::layer_cake::{
    default_n3, hybrid_pipeline, layer_cake_run, plan_layers, HybridConfig, HybridError, LayerCakeConfig,
    LayerCakeError, LayerRecord,
};
use crate::local_search::{post_process, LocalSearchConfig};
use crate::metrics::{evaluate, write_schedule, ExamSchedule, MetricWeights, MetricsError, MetricsReport};
use crate::mip::{Backend, MipError, SolveLimits};
use crate::schedule_ip::{ScheduleIpError, ZetaPenalty};
use crate::sequencing::{
    apply_sequence, solve_sequencing, windows_from_days, write_sequence, BlockSequence, FrontLoad, SeqWeights,
    SequencingError, SequencingInstance, ThreeInFourMode,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Gts,
    Gtsp,
    ZeroGtsp,
    Layercake,
    Hybrid,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Gts => "gts",
            Method::Gtsp => "gtsp",
            Method::ZeroGtsp => "zero-gtsp",
            Method::Layercake => "layercake",
            Method::Hybrid => "hybrid",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gts" => Ok(Method::Gts),
            "gtsp" => Ok(Method::Gtsp),
            "zero-gtsp" | "zero_gtsp" => Ok(Method::ZeroGtsp),
            "layercake" | "layer-cake" => Ok(Method::Layercake),
            "hybrid" => Ok(Method::Hybrid),
            other => Err(format!("unknown method `{other}`")),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-stage solver limits.
#[derive(Debug, Clone)]
pub struct StageLimits {
    pub assign: SolveLimits,
    pub sequence: SolveLimits,
    /// Total post-processing budget.
    pub post_total: Duration,
    /// Each rescheduling solve inside post-processing.
    pub post_window: SolveLimits,
    pub layer: SolveLimits,
}

impl Default for StageLimits {
    fn default() -> Self {
        Self {
            assign: SolveLimits::seconds(1500.0),
            sequence: SolveLimits::seconds(1500.0),
            post_total: Duration::from_secs(600),
            post_window: SolveLimits::seconds(30.0),
            layer: SolveLimits::seconds(1500.0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub method: Method,
    /// Block count for the group-then-sequence methods; all available slots
    /// when unset.
    pub k: Option<usize>,
    /// Extra slots to exclude on top of the calendar's own.
    pub excluded: Vec<usize>,
    pub front_load: Option<FrontLoad>,
    pub weights: MetricWeights,
    pub mode: ThreeInFourMode,
    pub limits: StageLimits,
    pub layer_n2: u64,
    pub layer_n3: Option<u64>,
    pub window: usize,
    /// Recorded with the outputs. Every stage is deterministic, so the seed
    /// does not change results.
    pub seed: u64,
    /// Flag days whose student-exam count exceeds this.
    pub daily_cap: Option<u64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            method: Method::Gtsp,
            k: None,
            excluded: Vec::new(),
            front_load: Some(FrontLoad::default()),
            weights: MetricWeights::default(),
            mode: ThreeInFourMode::default(),
            limits: StageLimits::default(),
            layer_n2: 15_000,
            layer_n3: None,
            window: 25,
            seed: 0,
            daily_cap: Some(5000),
        }
    }
}

impl PipelineConfig {
    pub fn zeta(&self, num_slots: usize) -> Option<ZetaPenalty> {
        self.front_load.map(|fl| ZetaPenalty::standard(fl, num_slots, self.weights.lambda1))
    }

    pub fn local_search(&self, num_slots: usize) -> LocalSearchConfig {
        LocalSearchConfig {
            time_limit: self.limits.post_total,
            ip_limits: self.limits.post_window.clone(),
            weights: self.weights,
            zeta: self.zeta(num_slots),
            ..LocalSearchConfig::with_window(self.window)
        }
    }

    pub fn layer_cake(&self, num_slots: usize) -> LayerCakeConfig {
        LayerCakeConfig {
            n2: self.layer_n2,
            n3: self.layer_n3.unwrap_or_else(|| default_n3(self.layer_n2)),
            layer_limits: self.limits.layer.clone(),
            weights: self.weights,
            zeta: self.zeta(num_slots),
        }
    }

    /// Calendar with the configured exclusions applied.
    pub fn calendar(&self, cal: &SlotCalendar) -> Result<SlotCalendar, PipelineError> {
        if self.excluded.is_empty() {
            return Ok(cal.clone());
        }
        let mut avail = cal.available_slots();
        for &x in &self.excluded {
            if x >= cal.len() {
                return Err(PipelineError::Input(format!("excluded slot {x} outside a {}-slot calendar", cal.len())));
            }
        }
        avail.retain(|s| !self.excluded.contains(s));
        cal.restricted_to(&avail).map_err(|e| PipelineError::Input(e.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("input: {0}")]
    Input(String),
    #[error("{stage}: infeasible: {message}")]
    Infeasible { stage: &'static str, message: String },
    #[error("{stage}: solver: {message}")]
    Solver { stage: &'static str, message: String },
    #[error("writing {path}: {message}")]
    Output { path: String, message: String },
}

impl PipelineError {
    /// 2 infeasible, 3 input, 4 solver or backend.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Infeasible { .. } => 2,
            PipelineError::Input(_) | PipelineError::Output { .. } => 3,
            PipelineError::Solver { .. } => 4,
        }
    }

    pub fn from_assign(e: AssignError) -> Self {
        match e {
            AssignError::Infeasible { .. } => Self::Infeasible { stage: "assign", message: e.to_string() },
            AssignError::ZeroBlocks | AssignError::TooManyBlocks { .. } | AssignError::Parse { .. } | AssignError::Csv(_) => {
                Self::Input(e.to_string())
            }
            AssignError::NoIncumbent { .. } | AssignError::Mip(_) => Self::Solver { stage: "assign", message: e.to_string() },
        }
    }

    pub fn from_sequencing(e: SequencingError) -> Self {
        match e {
            SequencingError::Infeasible | SequencingError::FrontLoadInfeasible { .. } => {
                Self::Infeasible { stage: "sequence", message: e.to_string() }
            }
            SequencingError::SlotsPerDay(_) | SequencingError::TooManyBlocks { .. } | SequencingError::BlockMismatch { .. } => {
                Self::Input(e.to_string())
            }
            SequencingError::NoIncumbent(_) | SequencingError::Mip(_) | SequencingError::Csv(_) => {
                Self::Solver { stage: "sequence", message: e.to_string() }
            }
        }
    }

    pub fn from_reschedule(stage: &'static str, e: ScheduleIpError) -> Self {
        match e {
            ScheduleIpError::NoSlots => Self::Input(e.to_string()),
            _ => Self::Solver { stage, message: e.to_string() },
        }
    }

    pub fn from_layer_cake(e: LayerCakeError) -> Self {
        match e {
            LayerCakeError::LayerSizes { .. } => Self::Input(e.to_string()),
            LayerCakeError::Layer { .. } => Self::Solver { stage: "layercake", message: e.to_string() },
        }
    }
}

impl From<MetricsError> for PipelineError {
    fn from(e: MetricsError) -> Self {
        PipelineError::Input(e.to_string())
    }
}

impl From<MipError> for PipelineError {
    fn from(e: MipError) -> Self {
        PipelineError::Solver { stage: "backend", message: e.to_string() }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub method: Method,
    pub schedule: ExamSchedule,
    pub report: MetricsReport,
    pub blocks: Option<BlockAssignment>,
    pub sequence: Option<BlockSequence>,
    pub layers: Vec<LayerRecord>,
    /// Days over the daily cap, with their loads.
    pub overloaded_days: Vec<(usize, u64)>,
    pub wall_time: Duration,
}

fn sequence_blocks(
    stats: &CoenrollmentStats,
    cal: &SlotCalendar,
    cfg: &PipelineConfig,
    blocks: &BlockAssignment,
    initial: Option<&[usize]>,
    backend: &dyn Backend,
) -> Result<(BlockSequence, ExamSchedule), PipelineError> {
    let mut inst = SequencingInstance::from_assignment(
        stats,
        blocks,
        cal,
        windows_from_days(cal),
        SeqWeights::from(&cfg.weights),
        cfg.front_load,
    );
    inst.mode = cfg.mode;
    let seq = solve_sequencing(&inst, initial, &cfg.limits.sequence, backend).map_err(PipelineError::from_sequencing)?;
    let sched = apply_sequence(&seq, blocks).map_err(PipelineError::from_sequencing)?.finalized();
    Ok((seq, sched))
}

/// Run one pipeline in memory.
pub fn run_pipeline(
    cfg: &PipelineConfig,
    table: &EnrollmentTable,
    calendar: &SlotCalendar,
    backend: &dyn Backend,
) -> Result<PipelineOutput, PipelineError> {
    let start = Instant::now();
    if table.num_exams() == 0 {
        return Err(PipelineError::Input("enrollment has no exams".into()));
    }
    let cal = cfg.calendar(calendar)?;
    let stats = compute_stats(table);
    let avail = cal.available_slots();
    let mut blocks = None;
    let mut sequence = None;
    let mut layers = Vec::new();
    let schedule = match cfg.method {
        Method::Gts | Method::Gtsp | Method::ZeroGtsp => {
            let k = cfg.k.unwrap_or(avail.len());
            check_block_count(k, avail.len()).map_err(PipelineError::from_assign)?;
            let ba = if cfg.method == Method::ZeroGtsp {
                assign::solve_zero_conflict(&stats, k, &cfg.limits.assign, backend)
            } else {
                assign::solve_min_conflict(&stats, k, &cfg.limits.assign, backend)
            }
            .map_err(PipelineError::from_assign)?;
            let (seq, sched) = sequence_blocks(&stats, &cal, cfg, &ba, None, backend)?;
            blocks = Some(ba);
            sequence = Some(seq);
            if cfg.method == Method::Gts {
                sched
            } else {
                post_process(&stats, &sched, &avail, &cfg.local_search(cal.len()), backend)
                    .map_err(|e| PipelineError::from_reschedule("postprocess", e))?
                    .schedule
            }
        }
        Method::Layercake => {
            let lc_cfg = cfg.layer_cake(cal.len());
            let plan = plan_layers(&stats, lc_cfg.n2, lc_cfg.n3).map_err(PipelineError::from_layer_cake)?;
            let r = layer_cake_run(&stats, &plan, &avail, &lc_cfg, backend).map_err(PipelineError::from_layer_cake)?;
            layers = r.layers;
            r.schedule
        }
        Method::Hybrid => {
            let hc = HybridConfig {
                layer_cake: cfg.layer_cake(cal.len()),
                front_load: cfg.front_load,
                mode: cfg.mode,
                sequencing_limits: cfg.limits.sequence.clone(),
                local_search: cfg.local_search(cal.len()),
            };
            let r = hybrid_pipeline(&stats, &cal, &hc, backend).map_err(|e| match e {
                HybridError::LayerCake(e) => PipelineError::from_layer_cake(e),
                HybridError::Sequencing(e) => PipelineError::from_sequencing(e),
                HybridError::PostProcess(e) => PipelineError::from_reschedule("postprocess", e),
            })?;
            layers = r.layer_cake.layers.clone();
            blocks = Some(r.blocks.clone());
            sequence = Some(r.sequence.clone());
            r.post.schedule
        }
    };
    schedule.validate(&cal, |e| table.exam_id(e).to_string())?;
    let report = evaluate(&schedule, table, &cal, &cfg.weights)?;
    let overloaded_days = match cfg.daily_cap {
        Some(cap) => overloaded_days(&stats, &cal, &schedule, cap),
        None => Vec::new(),
    };
    for &(d, load) in &overloaded_days {
        log::warn!("day {d} has {load} student-exams, above the cap");
    }
    Ok(PipelineOutput {
        method: cfg.method,
        schedule,
        report,
        blocks,
        sequence,
        layers,
        overloaded_days,
        wall_time: start.elapsed(),
    })
}

/// Days whose total student-exam count exceeds `cap`.
pub fn overloaded_days(stats: &CoenrollmentStats, cal: &SlotCalendar, s: &ExamSchedule, cap: u64) -> Vec<(usize, u64)> {
    let mut per_day = vec![0u64; cal.num_days()];
    for (e, &slot) in s.slots().iter().enumerate() {
        per_day[cal.day(slot)] += u64::from(stats.size(e));
    }
    per_day.into_iter().enumerate().filter(|&(_, l)| l > cap).collect()
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, PipelineError> {
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| PipelineError::Output { path: path.display().to_string(), message: e.to_string() })
}

/// Write `schedule.csv`, `metrics.json`, and when present `blocks.csv`,
/// `sequence.csv` and `layers.csv`.
pub fn write_artifacts(out: &PipelineOutput, table: &EnrollmentTable, dir: &Path) -> Result<(), PipelineError> {
    let fail = |name: &str| {
        let path = dir.join(name).display().to_string();
        move |e: &dyn std::fmt::Display| PipelineError::Output { path: path.clone(), message: e.to_string() }
    };
    std::fs::create_dir_all(dir).map_err(|e| fail("")(&e))?;
    write_schedule(&out.schedule, table, create(dir, "schedule.csv")?).map_err(|e| fail("schedule.csv")(&e))?;
    std::fs::write(dir.join("metrics.json"), out.report.to_json() + "\n").map_err(|e| fail("metrics.json")(&e))?;
    if let Some(ba) = &out.blocks {
        write_blocks(ba, table, create(dir, "blocks.csv")?).map_err(|e| fail("blocks.csv")(&e))?;
    }
    if let Some(seq) = &out.sequence {
        write_sequence(seq, create(dir, "sequence.csv")?).map_err(|e| fail("sequence.csv")(&e))?;
    }
    if !out.layers.is_empty() {
        let mut w = csv::Writer::from_writer(create(dir, "layers.csv")?);
        let res: Result<(), csv::Error> = (|| {
            w.write_record(["layer", "n_new", "n_overlap", "objective", "warm_objective"])?;
            for l in &out.layers {
                w.write_record([
                    l.index.to_string(),
                    l.n_new.to_string(),
                    l.n_overlap.to_string(),
                    l.objective.to_string(),
                    l.warm_objective.to_string(),
                ])?;
            }
            w.flush()?;
            Ok(())
        })();
        res.map_err(|e| fail("layers.csv")(&e))?;
    }
    Ok(())
}

/// Axes of a parameter sweep. Empty axes fall back to the base config.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepGrid {
    pub methods: Vec<Method>,
    pub blocks: Vec<usize>,
    pub size_cutoffs: Vec<u32>,
    pub slot_cutoffs: Vec<usize>,
    /// Triple weight as a multiple of the back-to-back weight.
    pub triple_ratios: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub method: Method,
    pub blocks: Option<usize>,
    pub size_cutoff: Option<u32>,
    pub slot_cutoff: Option<usize>,
    pub triple_ratio: f64,
}

impl SweepGrid {
    /// Cartesian product in axis order: method, blocks, size cutoff, slot
    /// cutoff, triple ratio.
    pub fn points(&self, base: &PipelineConfig) -> Vec<SweepPoint> {
        fn or_base<T: Clone>(axis: &[T], base: T) -> Vec<T> {
            if axis.is_empty() {
                vec![base]
            } else {
                axis.to_vec()
            }
        }
        let methods = or_base(&self.methods, base.method);
        let blocks: Vec<Option<usize>> = if self.blocks.is_empty() { vec![base.k] } else { self.blocks.iter().map(|&k| Some(k)).collect() };
        let sizes: Vec<Option<u32>> = if self.size_cutoffs.is_empty() {
            vec![base.front_load.map(|f| f.size_cutoff)]
        } else {
            self.size_cutoffs.iter().map(|&c| Some(c)).collect()
        };
        let slots: Vec<Option<usize>> = if self.slot_cutoffs.is_empty() {
            vec![base.front_load.map(|f| f.slot_cutoff)]
        } else {
            self.slot_cutoffs.iter().map(|&c| Some(c)).collect()
        };
        let ratios = or_base(&self.triple_ratios, base.weights.triple_w / base.weights.b2b_w);
        let mut out = Vec::new();
        for &method in &methods {
            for &k in &blocks {
                for &sc in &sizes {
                    for &tc in &slots {
                        for &r in &ratios {
                            out.push(SweepPoint { method, blocks: k, size_cutoff: sc, slot_cutoff: tc, triple_ratio: r });
                        }
                    }
                }
            }
        }
        out
    }
}

impl SweepPoint {
    pub fn apply(&self, base: &PipelineConfig) -> PipelineConfig {
        let mut cfg = base.clone();
        cfg.method = self.method;
        cfg.k = self.blocks;
        cfg.front_load = match (self.size_cutoff, self.slot_cutoff) {
            (None, None) => None,
            (a, b) => {
                let d = base.front_load.unwrap_or_default();
                Some(FrontLoad { size_cutoff: a.unwrap_or(d.size_cutoff), slot_cutoff: b.unwrap_or(d.slot_cutoff) })
            }
        };
        cfg.weights.triple_w = self.triple_ratio * cfg.weights.b2b_w;
        cfg
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub point: SweepPoint,
    pub status: String,
    pub report: Option<MetricsReport>,
    pub wall_time: Duration,
}

/// Run every grid point on a pool of `parallelism` threads. Rows come back in
/// grid order and failed runs keep their row.
pub fn sweep(
    grid: &SweepGrid,
    base: &PipelineConfig,
    table: &EnrollmentTable,
    calendar: &SlotCalendar,
    parallelism: usize,
    backend: &dyn Backend,
) -> Vec<SweepRow> {
    let points = grid.points(base);
    let run = |p: &SweepPoint| {
        let start = Instant::now();
        let cfg = p.apply(base);
        let (status, report) = match run_pipeline(&cfg, table, calendar, backend) {
            Ok(o) => ("ok".to_string(), Some(o.report)),
            Err(e) => (format!("error[{}]: {e}", e.exit_code()), None),
        };
        SweepRow { point: p.clone(), status, report, wall_time: start.elapsed() }
    };
    match rayon::ThreadPoolBuilder::new().num_threads(parallelism.max(1)).build() {
        Ok(pool) => pool.install(|| points.par_iter().map(run).collect()),
        Err(_) => points.iter().map(run).collect(),
    }
}

pub const SWEEP_HEADER: [&str; 18] = [
    "method",
    "blocks",
    "size_cutoff",
    "slot_cutoff",
    "triple_ratio",
    "status",
    "conflicts",
    "triples",
    "triples_same_day",
    "triples_24hr",
    "b2b",
    "b2b_evening_morning",
    "b2b_other",
    "two_in_24",
    "three_in_4",
    "reschedules",
    "weighted_score",
    "wall_time_s",
];

pub fn write_sweep<W: std::io::Write>(rows: &[SweepRow], out: W) -> Result<(), csv::Error> {
    let opt = |v: Option<String>| v.unwrap_or_default();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        let p = &r.point;
        let mut rec = vec![
            p.method.to_string(),
            opt(p.blocks.map(|x| x.to_string())),
            opt(p.size_cutoff.map(|x| x.to_string())),
            opt(p.slot_cutoff.map(|x| x.to_string())),
            p.triple_ratio.to_string(),
            r.status.clone(),
        ];
        match &r.report {
            Some(m) => rec.extend(
                [
                    m.conflicts,
                    m.triples,
                    m.triples_same_day,
                    m.triples_24hr,
                    m.b2b,
                    m.b2b_evening_morning,
                    m.b2b_other,
                    m.two_in_24,
                    m.three_in_4,
                    m.reschedules,
                ]
                .map(|x| x.to_string())
                .into_iter()
                .chain([m.weighted_score.to_string()]),
            ),
            None => rec.extend(std::iter::repeat_n(String::new(), 11)),
        }
        rec.push(format!("{:.3}", r.wall_time.as_secs_f64()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
