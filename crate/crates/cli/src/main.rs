use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

use commands::Failure;

#[derive(Parser)]
#[command(name = "examsched", version, about = "Final exam scheduling by integer programming")]
struct Cli {
    /// Log level (error, warn, info, debug).
    #[arg(long, global = true, default_value = "warn")]
    log: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct Inputs {
    /// Enrollment CSV with `student_id,exam_id` rows.
    #[arg(long, short = 'e')]
    pub enrollment: PathBuf,
    /// Calendar JSON. Without it, `--days` uniform days are used.
    #[arg(long, short = 'c')]
    pub calendar: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    pub days: usize,
    #[arg(long, default_value_t = 3)]
    pub slots_per_day: usize,
}

#[derive(Args, Clone)]
pub struct Tuning {
    /// Number of blocks; defaults to the number of available slots.
    #[arg(long)]
    pub blocks: Option<usize>,
    /// Comma-separated slot indices to leave empty.
    #[arg(long, value_delimiter = ',')]
    pub exclude_slots: Vec<usize>,
    #[arg(long, default_value_t = 300)]
    pub size_cutoff: u32,
    #[arg(long, default_value_t = 23)]
    pub slot_cutoff: usize,
    /// Disable front-loading of large exams.
    #[arg(long)]
    pub no_front_load: bool,
    /// Relative weights, e.g. `conflict=1000,triple=10,three4=5,two24=0.5`.
    #[arg(long)]
    pub weights: Option<String>,
    /// Coefficient used for four-in-a-row block patterns.
    #[arg(long, default_value = "corrected")]
    pub three_in_four: String,
    #[arg(long, default_value_t = 1500.0)]
    pub time_limit_assign: f64,
    #[arg(long, default_value_t = 1500.0)]
    pub time_limit_sequence: f64,
    #[arg(long, default_value_t = 600.0)]
    pub time_limit_postprocess: f64,
    /// Limit for each rescheduling solve inside post-processing.
    #[arg(long, default_value_t = 30.0)]
    pub time_limit_window: f64,
    #[arg(long, default_value_t = 1500.0)]
    pub time_limit_layer: f64,
    /// Node cap applied to every solve, on top of the time limits.
    #[arg(long)]
    pub node_limit: Option<u64>,
    /// Solver backend: `oracle` (built in) or `external`.
    #[arg(long)]
    pub backend: Option<String>,
    /// Exams rescheduled per post-processing window.
    #[arg(long, default_value_t = 25)]
    pub window: usize,
    /// Student-exam pairs per layer.
    #[arg(long, default_value_t = 15000)]
    pub layer_size: u64,
    #[arg(long)]
    pub layer_reentry: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Warn about days above this many student-exams (0 disables).
    #[arg(long, default_value_t = 5000)]
    pub daily_cap: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Validate an enrollment file and calendar and print a summary.
    Ingest {
        #[command(flatten)]
        inputs: Inputs,
        /// Write the normalized enrollment here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exam sizes and co-enrollment counts.
    Stats {
        #[command(flatten)]
        inputs: Inputs,
        /// Write `exam_a,exam_b,students` rows here.
        #[arg(long)]
        pairs_out: Option<PathBuf>,
    },
    /// Largest set of pairwise co-enrolled exams.
    Clique {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Group exams into blocks.
    Assign {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        tuning: Tuning,
        /// Forbid co-enrolled exams in one block.
        #[arg(long)]
        zero_conflict: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Order blocks into slots.
    Sequence {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        tuning: Tuning,
        /// Block CSV from `assign`.
        #[arg(long)]
        blocks_file: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Improve a schedule by windowed rescheduling.
    Postprocess {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        tuning: Tuning,
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a schedule layer by layer.
    Layercake {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        tuning: Tuning,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run a full pipeline: gts, gtsp, zero-gtsp, layercake or hybrid.
    Run {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        tuning: Tuning,
        #[arg(long, default_value = "gtsp")]
        method: String,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Metrics of an existing schedule as JSON.
    Evaluate {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long)]
        weights: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a grid of configurations and collect one CSV row each.
    Sweep {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        tuning: Tuning,
        #[arg(long, value_delimiter = ',', default_value = "gtsp")]
        methods: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        blocks_list: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        size_cutoffs: Vec<u32>,
        #[arg(long, value_delimiter = ',')]
        slot_cutoffs: Vec<usize>,
        /// Triple weight relative to the back-to-back weight.
        #[arg(long, value_delimiter = ',')]
        triple_ratios: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-slot load chart (SVG) and table (CSV).
    Report {
        #[command(flatten)]
        inputs: Inputs,
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Capacitated benchmark in Toronto format.
    Nottingham {
        #[arg(long)]
        crs: PathBuf,
        #[arg(long)]
        stu: PathBuf,
        /// JSON with allowed slots, precedence, groups, coincident exams and capacity.
        #[arg(long)]
        sidecar: Option<PathBuf>,
        #[arg(long, default_value_t = 23)]
        slots: usize,
        #[arg(long, default_value_t = 3)]
        slots_per_day: usize,
        #[arg(long, default_value = "a")]
        variant: String,
        #[arg(long, default_value_t = 3.0)]
        same_day_weight: f64,
        #[arg(long, default_value_t = 1.0)]
        overnight_weight: f64,
        #[arg(long, default_value_t = 36000.0)]
        time_limit_assign: f64,
        #[arg(long, default_value_t = 1800.0)]
        time_limit_postprocess: f64,
        #[arg(long)]
        node_limit: Option<u64>,
        #[arg(long)]
        backend: Option<String>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Write a seeded synthetic enrollment with departmental clustering.
    Synth {
        #[arg(long)]
        exams: usize,
        #[arg(long)]
        students: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().parse_filters(&cli.log).format_timestamp(None).init();
    let result = match cli.command {
        Command::Ingest { inputs, out } => commands::ingest(&inputs, out.as_deref()),
        Command::Stats { inputs, pairs_out } => commands::stats(&inputs, pairs_out.as_deref()),
        Command::Clique { inputs, tuning } => commands::clique(&inputs, &tuning),
        Command::Assign { inputs, tuning, zero_conflict, out } => commands::assign(&inputs, &tuning, zero_conflict, &out),
        Command::Sequence { inputs, tuning, blocks_file, out_dir } => {
            commands::sequence(&inputs, &tuning, &blocks_file, &out_dir)
        }
        Command::Postprocess { inputs, tuning, schedule, out } => commands::postprocess(&inputs, &tuning, &schedule, &out),
        Command::Layercake { inputs, tuning, out_dir } => commands::run("layercake", &inputs, &tuning, &out_dir),
        Command::Run { inputs, tuning, method, out_dir } => commands::run(&method, &inputs, &tuning, &out_dir),
        Command::Evaluate { inputs, schedule, weights, out } => {
            commands::evaluate(&inputs, &schedule, weights.as_deref(), out.as_deref())
        }
        Command::Sweep {
            inputs,
            tuning,
            methods,
            blocks_list,
            size_cutoffs,
            slot_cutoffs,
            triple_ratios,
            parallelism,
            out,
        } => commands::sweep(
            &inputs,
            &tuning,
            commands::GridArgs { methods, blocks_list, size_cutoffs, slot_cutoffs, triple_ratios },
            parallelism,
            &out,
        ),
        Command::Report { inputs, schedule, out_dir } => commands::report(&inputs, &schedule, &out_dir),
        Command::Nottingham {
            crs,
            stu,
            sidecar,
            slots,
            slots_per_day,
            variant,
            same_day_weight,
            overnight_weight,
            time_limit_assign,
            time_limit_postprocess,
            node_limit,
            backend,
            out_dir,
        } => commands::nottingham(commands::NottinghamArgs {
            crs,
            stu,
            sidecar,
            slots,
            slots_per_day,
            variant,
            same_day_weight,
            overnight_weight,
            time_limit_assign,
            time_limit_postprocess,
            node_limit,
            backend,
            out_dir,
        }),
        Command::Synth { exams, students, seed, out } => commands::synth(exams, students, seed, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, message }) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
