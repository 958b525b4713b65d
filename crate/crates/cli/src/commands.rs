use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use examsched::assign::{self, read_blocks, write_blocks, MaxClique};
use examsched::data::{
    build_calendar, build_conflict_graph, compute_stats, parse_enrollment, write_enrollment, CalendarConfig,
    EnrollmentTable, SlotCalendar,
};
use examsched::local_search::post_process;
use examsched::metrics::{self, read_schedule, write_schedule, MetricWeights};
use examsched::mip::{make_backend, Backend, BackendKind, SolveLimits};
use examsched::nottingham::{self, AdjacencyWeights, NottinghamConfig, NottinghamInstance, Sidecar};
use examsched::pipeline::{self, run_pipeline, write_artifacts, Method, PipelineConfig, PipelineError, StageLimits, SweepGrid};
use examsched::report::{render_svg, slot_loads, write_loads_csv};
use examsched::sequencing::{
    apply_sequence, solve_sequencing, windows_from_days, write_sequence, FrontLoad, SeqWeights, SequencingInstance,
};
use examsched::synth::{generate, SynthConfig};

use crate::{Inputs, Tuning};

/// `println!` that exits quietly when stdout is closed early.
macro_rules! say {
    ($($t:tt)*) => {
        emit(format_args!($($t)*))
    };
}

fn emit(args: std::fmt::Arguments) {
    let mut out = std::io::stdout().lock();
    if let Err(e) = out.write_fmt(args).and_then(|_| out.write_all(b"\n")) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
    }
}

pub struct Failure {
    pub code: u8,
    pub message: String,
}

type Res = Result<(), Failure>;

fn input(e: impl std::fmt::Display) -> Failure {
    Failure { code: 3, message: e.to_string() }
}

fn solver(e: impl std::fmt::Display) -> Failure {
    Failure { code: 4, message: e.to_string() }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure { code: e.exit_code() as u8, message: e.to_string() }
    }
}

fn load(inputs: &Inputs) -> Result<(EnrollmentTable, SlotCalendar), Failure> {
    let table = parse_enrollment(&inputs.enrollment).map_err(input)?;
    let cfg = match &inputs.calendar {
        Some(p) => CalendarConfig::from_path(p).map_err(input)?,
        None => CalendarConfig::uniform(inputs.days, inputs.slots_per_day),
    };
    Ok((table, build_calendar(&cfg).map_err(input)?))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| input(format!("{}: {e}", dir.display())))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path).map(BufReader::new).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn backend(name: Option<&str>) -> Result<Box<dyn Backend>, Failure> {
    let kind = match name {
        Some(n) => n.parse::<BackendKind>().map_err(input)?,
        None => BackendKind::from_env().map_err(input)?,
    };
    make_backend(kind).map_err(solver)
}

fn limits(secs: f64, nodes: Option<u64>) -> SolveLimits {
    let l = SolveLimits::seconds(secs);
    match nodes {
        Some(n) => l.with_nodes(n),
        None => l,
    }
}

fn config(t: &Tuning, method: Method) -> Result<PipelineConfig, Failure> {
    let weights = match &t.weights {
        Some(w) => MetricWeights::parse(w).map_err(input)?,
        None => MetricWeights::default(),
    };
    Ok(PipelineConfig {
        method,
        k: t.blocks,
        excluded: t.exclude_slots.clone(),
        front_load: (!t.no_front_load).then_some(FrontLoad { size_cutoff: t.size_cutoff, slot_cutoff: t.slot_cutoff }),
        weights,
        mode: t.three_in_four.parse().map_err(input)?,
        limits: StageLimits {
            assign: limits(t.time_limit_assign, t.node_limit),
            sequence: limits(t.time_limit_sequence, t.node_limit),
            post_total: Duration::from_secs_f64(t.time_limit_postprocess.max(0.0)),
            post_window: limits(t.time_limit_window, t.node_limit),
            layer: limits(t.time_limit_layer, t.node_limit),
        },
        layer_n2: t.layer_size,
        layer_n3: t.layer_reentry,
        window: t.window,
        seed: t.seed,
        daily_cap: (t.daily_cap > 0).then_some(t.daily_cap),
    })
}

pub fn ingest(inputs: &Inputs, out: Option<&Path>) -> Res {
    let (t, cal) = load(inputs)?;
    say!(
        "{} students, {} exams, {} enrollments; {} slots over {} days, {} available",
        t.num_students(),
        t.num_exams(),
        t.num_records(),
        cal.len(),
        cal.num_days(),
        cal.num_available()
    );
    if let Some(p) = out {
        write_enrollment(&t, create(p)?).map_err(input)?;
    }
    Ok(())
}

pub fn stats(inputs: &Inputs, pairs_out: Option<&Path>) -> Res {
    let (t, _) = load(inputs)?;
    let st = compute_stats(&t);
    let g = build_conflict_graph(&st);
    let max_deg = (0..g.num_vertices()).map(|e| g.degree(e)).max().unwrap_or(0);
    let summary = serde_json::json!({
        "exams": st.num_exams(),
        "students": t.num_students(),
        "enrollments": st.total_enrollment(),
        "largest_exam": st.sizes().iter().max().copied().unwrap_or(0),
        "coenrolled_pairs": st.num_pairs(),
        "coenrolled_triples": st.num_triples(),
        "max_degree": max_deg,
    });
    say!("{}", serde_json::to_string_pretty(&summary).expect("json"));
    if let Some(p) = pairs_out {
        let mut w = create(p)?;
        let io = |e: std::io::Error| input(format!("{}: {e}", p.display()));
        writeln!(w, "exam_a,exam_b,students").map_err(io)?;
        for (i, j, c) in st.pairs() {
            writeln!(w, "{},{},{c}", t.exam_id(i), t.exam_id(j)).map_err(io)?;
        }
        w.flush().map_err(io)?;
    }
    Ok(())
}

pub fn clique(inputs: &Inputs, t: &Tuning) -> Res {
    let (table, cal) = load(inputs)?;
    let g = build_conflict_graph(&compute_stats(&table));
    let be = backend(t.backend.as_deref())?;
    let c: MaxClique =
        assign::solve_max_clique(&g, &limits(t.time_limit_assign, t.node_limit), be.as_ref()).map_err(solver)?;
    let names: Vec<&str> = c.members.iter().map(|&e| table.exam_id(e)).collect();
    say!("clique size {} ({:?}, upper bound {})", c.members.len(), c.status, c.upper_bound);
    say!("members: {}", names.join(","));
    if c.members.len() > cal.num_available() {
        say!("more than the {} available slots: every schedule has conflicts", cal.num_available());
    }
    Ok(())
}

pub fn assign(inputs: &Inputs, t: &Tuning, zero: bool, out: &Path) -> Res {
    let (table, cal) = load(inputs)?;
    let cfg = config(t, if zero { Method::ZeroGtsp } else { Method::Gts })?;
    let cal = cfg.calendar(&cal)?;
    let st = compute_stats(&table);
    let k = cfg.k.unwrap_or(cal.num_available());
    assign::check_block_count(k, cal.num_available()).map_err(PipelineError::from_assign)?;
    let be = backend(t.backend.as_deref())?;
    let ba = if zero {
        assign::solve_zero_conflict(&st, k, &cfg.limits.assign, be.as_ref())
    } else {
        assign::solve_min_conflict(&st, k, &cfg.limits.assign, be.as_ref())
    }
    .map_err(PipelineError::from_assign)?;
    write_blocks(&ba, &table, create(out)?).map_err(input)?;
    say!(
        "{k} blocks ({:?}): {} conflicts within blocks, {} between consecutive blocks",
        ba.status, ba.within_block_conflicts, ba.neighbor_path_cost
    );
    Ok(())
}

pub fn sequence(inputs: &Inputs, t: &Tuning, blocks_file: &Path, out_dir: &Path) -> Res {
    let (table, cal) = load(inputs)?;
    let cfg = config(t, Method::Gts)?;
    let cal = cfg.calendar(&cal)?;
    let st = compute_stats(&table);
    let ba = read_blocks(&st, &table, open(blocks_file)?).map_err(input)?;
    let mut inst = SequencingInstance::from_assignment(
        &st,
        &ba,
        &cal,
        windows_from_days(&cal),
        SeqWeights::from(&cfg.weights),
        cfg.front_load,
    );
    inst.mode = cfg.mode;
    let be = backend(t.backend.as_deref())?;
    let seq = solve_sequencing(&inst, None, &cfg.limits.sequence, be.as_ref()).map_err(PipelineError::from_sequencing)?;
    let sched = apply_sequence(&seq, &ba).map_err(PipelineError::from_sequencing)?.finalized();
    write_sequence(&seq, create(&out_dir.join("sequence.csv"))?).map_err(input)?;
    write_schedule(&sched, &table, create(&out_dir.join("schedule.csv"))?).map_err(input)?;
    say!("sequence objective {} ({:?})", seq.objective, seq.status);
    Ok(())
}

pub fn postprocess(inputs: &Inputs, t: &Tuning, schedule: &Path, out: &Path) -> Res {
    let (table, cal) = load(inputs)?;
    let cfg = config(t, Method::Gtsp)?;
    let cal = cfg.calendar(&cal)?;
    let st = compute_stats(&table);
    let base = read_schedule(&table, open(schedule)?).map_err(input)?;
    base.validate(&cal, |e| table.exam_id(e).to_string()).map_err(input)?;
    let be = backend(t.backend.as_deref())?;
    let r = post_process(&st, &base, &cal.available_slots(), &cfg.local_search(cal.len()), be.as_ref())
        .map_err(|e| PipelineError::from_reschedule("postprocess", e))?;
    write_schedule(&r.schedule, &table, create(out)?).map_err(input)?;
    say!(
        "score {} -> {} in {} iterations ({} accepted)",
        r.initial_score, r.final_score, r.iterations, r.accepted
    );
    Ok(())
}

pub fn run(method: &str, inputs: &Inputs, t: &Tuning, out_dir: &Path) -> Res {
    let (table, cal) = load(inputs)?;
    let cfg = config(t, method.parse().map_err(input)?)?;
    let be = backend(t.backend.as_deref())?;
    let out = run_pipeline(&cfg, &table, &cal, be.as_ref())?;
    write_artifacts(&out, &table, out_dir)?;
    let r = &out.report;
    say!(
        "{}: conflicts {} triples {} b2b {} two_in_24 {} three_in_4 {} score {} ({:.1}s)",
        out.method,
        r.conflicts,
        r.triples,
        r.b2b,
        r.two_in_24,
        r.three_in_4,
        r.weighted_score,
        out.wall_time.as_secs_f64()
    );
    for (d, load) in &out.overloaded_days {
        say!("warning: day {d} carries {load} student-exams");
    }
    Ok(())
}

pub fn evaluate(inputs: &Inputs, schedule: &Path, weights: Option<&str>, out: Option<&Path>) -> Res {
    let (table, cal) = load(inputs)?;
    let w = match weights {
        Some(w) => MetricWeights::parse(w).map_err(input)?,
        None => MetricWeights::default(),
    };
    let s = read_schedule(&table, open(schedule)?).map_err(input)?;
    let report = metrics::evaluate(&s, &table, &cal, &w).map_err(input)?;
    let json = report.to_json();
    match out {
        Some(p) => std::fs::write(p, json + "\n").map_err(|e| input(format!("{}: {e}", p.display())))?,
        None => say!("{json}"),
    }
    Ok(())
}

pub struct GridArgs {
    pub methods: Vec<String>,
    pub blocks_list: Vec<usize>,
    pub size_cutoffs: Vec<u32>,
    pub slot_cutoffs: Vec<usize>,
    pub triple_ratios: Vec<f64>,
}

pub fn sweep(inputs: &Inputs, t: &Tuning, g: GridArgs, parallelism: usize, out: &Path) -> Res {
    let (table, cal) = load(inputs)?;
    let methods = g.methods.iter().map(|m| m.parse::<Method>()).collect::<Result<Vec<_>, _>>().map_err(input)?;
    let base = config(t, methods.first().copied().unwrap_or(Method::Gtsp))?;
    let grid = SweepGrid {
        methods,
        blocks: g.blocks_list,
        size_cutoffs: g.size_cutoffs,
        slot_cutoffs: g.slot_cutoffs,
        triple_ratios: g.triple_ratios,
    };
    let be = backend(t.backend.as_deref())?;
    let rows = pipeline::sweep(&grid, &base, &table, &cal, parallelism, be.as_ref());
    pipeline::write_sweep(&rows, create(out)?).map_err(input)?;
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    say!("{} rows written, {failed} failed", rows.len());
    Ok(())
}

pub fn report(inputs: &Inputs, schedule: &Path, out_dir: &Path) -> Res {
    let (table, cal) = load(inputs)?;
    let s = read_schedule(&table, open(schedule)?).map_err(input)?;
    s.validate(&cal, |e| table.exam_id(e).to_string()).map_err(input)?;
    let rows = slot_loads(&s, &table, &cal);
    write_loads_csv(&rows, create(&out_dir.join("slot_loads.csv"))?).map_err(input)?;
    let svg_path = out_dir.join("schedule.svg");
    std::fs::write(&svg_path, render_svg(&rows, &cal)).map_err(|e| input(format!("{}: {e}", svg_path.display())))?;
    Ok(())
}

pub struct NottinghamArgs {
    pub crs: PathBuf,
    pub stu: PathBuf,
    pub sidecar: Option<PathBuf>,
    pub slots: usize,
    pub slots_per_day: usize,
    pub variant: String,
    pub same_day_weight: f64,
    pub overnight_weight: f64,
    pub time_limit_assign: f64,
    pub time_limit_postprocess: f64,
    pub node_limit: Option<u64>,
    pub backend: Option<String>,
    pub out_dir: PathBuf,
}

/// Calendar of `slots` slots, `per_day` to a day, the last day possibly short.
fn partial_days(slots: usize, per_day: usize) -> Result<SlotCalendar, Failure> {
    let per_day = per_day.max(1);
    let mut cfg = CalendarConfig::uniform(slots.div_ceil(per_day), per_day);
    if let Some(last) = cfg.days.last_mut() {
        let keep = slots - (slots.div_ceil(per_day) - 1) * per_day;
        last.slots.truncate(keep);
    }
    build_calendar(&cfg).map_err(input)
}

pub fn nottingham(a: NottinghamArgs) -> Res {
    let data = nottingham::parse_toronto(&a.crs, &a.stu).map_err(input)?;
    let side = match &a.sidecar {
        Some(p) => Sidecar::from_path(p).map_err(input)?,
        None => Sidecar::default(),
    };
    let cal = partial_days(a.slots, a.slots_per_day)?;
    let weights = AdjacencyWeights { same_day: a.same_day_weight, overnight: a.overnight_weight };
    let inst = NottinghamInstance::new(&data.table, &side, cal, a.variant.parse().map_err(input)?, weights)
        .map_err(input)?;
    let cfg = NottinghamConfig {
        assign_limits: limits(a.time_limit_assign, a.node_limit),
        post_time: Duration::from_secs_f64(a.time_limit_postprocess.max(0.0)),
        window_limits: limits(60.0, a.node_limit),
        ..NottinghamConfig::default()
    };
    let be = backend(a.backend.as_deref())?;
    let r = nottingham::adapt_and_solve(&inst, &cfg, be.as_ref()).map_err(|e| match e {
        nottingham::NottinghamError::Infeasible { .. } => Failure { code: 2, message: e.to_string() },
        nottingham::NottinghamError::Mip(_) => solver(e),
        _ => input(e),
    })?;
    write_schedule(&r.schedule, &data.table, create(&a.out_dir.join("schedule.csv"))?).map_err(input)?;
    let summary = serde_json::json!({
        "variant": a.variant,
        "slots": a.slots,
        "objective": r.objective,
        "soft_violations": r.soft_violations,
        "max_load": r.max_load,
        "capacity": inst.capacity,
        "exams": data.table.num_exams(),
        "merged_exams": inst.num_exams(),
    });
    let text = serde_json::to_string_pretty(&summary).expect("json");
    std::fs::write(a.out_dir.join("nottingham.json"), text.clone() + "\n").map_err(input)?;
    say!("{text}");
    Ok(())
}

pub fn synth(exams: usize, students: usize, seed: u64, out: &Path) -> Res {
    let t = generate(&SynthConfig::semester(exams, students, seed));
    write_enrollment(&t, create(out)?).map_err(input)?;
    say!("{} students, {} exams, {} enrollments", t.num_students(), t.num_exams(), t.num_records());
    Ok(())
}
