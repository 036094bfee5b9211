//! Command-line front end.
//!
//! `track` turns per-sequence detection files into trajectory files,
//! `evaluate` scores trajectory files against ground truth, `curves` exports
//! the recall sweep and `bench` times the tracking stage alone.
//!
//! Every subcommand accepts `--config <json>`; flags override the file.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::assignment::AffinityMode;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::io::{
    load_sequence, load_sequences, sequence_files, write_results_csv, write_results_kitti,
    CriterionKind, RunConfig, SequenceBundle, TrackerOverrides,
};
use crate::metrics::{curves_csv, curves_svg, evaluate, CurveMetric, MetricsReport};
use crate::tracker::{run_sequence_classes, TrackerConfig};

/// Object classes of the KITTI label set.
pub const KNOWN_CLASSES: [&str; 8] = [
    "Car",
    "Van",
    "Truck",
    "Pedestrian",
    "Person_sitting",
    "Cyclist",
    "Tram",
    "Misc",
];

#[derive(Debug, Parser)]
#[command(
    name = "mot3d",
    version,
    about = "Online 3D multi-object tracking and evaluation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Track detections into trajectories.
    Track(TrackArgs),
    /// Evaluate trajectories against ground truth.
    Evaluate(EvalArgs),
    /// Export per-recall metric curves.
    Curves(CurvesArgs),
    /// Time the tracking stage.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args, Default)]
pub struct CommonArgs {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Comma-separated class filter.
    #[arg(long, value_delimiter = ',', global = true)]
    pub classes: Option<Vec<String>>,
    /// Disable data-parallel execution.
    #[arg(long, global = true)]
    pub sequential: bool,
}

#[derive(Debug, Clone, Args, Default)]
pub struct TrackerFlags {
    /// IoU association gate (selects IoU affinity).
    #[arg(long, conflicts_with = "dist_max")]
    pub iou_min: Option<f64>,
    /// Center-distance association gate in meters (selects distance affinity).
    #[arg(long)]
    pub dist_max: Option<f64>,
    /// Matched frames needed to confirm a trajectory.
    #[arg(long)]
    pub bir_min: Option<u32>,
    /// Missed frames tolerated before a confirmed trajectory is deleted.
    #[arg(long)]
    pub age_max: Option<u32>,
    /// Track angular velocity.
    #[arg(long)]
    pub angular_velocity: bool,
    /// Keep the predicted heading even when a detection points the other way.
    #[arg(long)]
    pub no_orientation_correction: bool,
    /// Emit predicted boxes for unmatched confirmed trajectories.
    #[arg(long)]
    pub coasting: bool,
    /// Do not emit tentative trajectories during the first frames.
    #[arg(long)]
    pub no_startup_emit: bool,
}

impl TrackerFlags {
    pub fn overrides(&self) -> TrackerOverrides {
        let mut o = TrackerOverrides {
            bir_min: self.bir_min,
            age_max: self.age_max,
            ..Default::default()
        };
        if let Some(g) = self.iou_min {
            o.affinity = Some(AffinityMode::Iou);
            o.gate = Some(g);
        }
        if let Some(g) = self.dist_max {
            o.affinity = Some(AffinityMode::NegDistance);
            o.gate = Some(g);
        }
        o.angular_velocity = self.angular_velocity.then_some(true);
        o.orientation_correction = self.no_orientation_correction.then_some(false);
        o.output_coasting = self.coasting.then_some(true);
        o.startup_emit = self.no_startup_emit.then_some(false);
        o
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum OutputFormat {
    #[default]
    Kitti,
    Csv,
    Both,
}

#[derive(Debug, Clone, Args)]
pub struct TrackArgs {
    /// Detection file or directory of per-sequence files.
    pub input: PathBuf,
    /// Output directory.
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = OutputFormat::Kitti)]
    pub format: OutputFormat,
    #[command(flatten)]
    pub tracker: TrackerFlags,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args, Default)]
pub struct MetricFlags {
    /// Ground-truth file or directory.
    #[arg(long)]
    pub gt: PathBuf,
    /// Trajectory file or directory.
    #[arg(long)]
    pub hyp: PathBuf,
    /// IoU matching threshold; repeat for several evaluations.
    #[arg(long, conflicts_with = "dist_thres")]
    pub iou_thres: Vec<f64>,
    /// Center-distance matching threshold in meters.
    #[arg(long)]
    pub dist_thres: Option<f64>,
    /// Number of recall steps of the sweep.
    #[arg(long)]
    pub recall_steps: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub metric: MetricFlags,
    /// Also write the full report as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CurvesArgs {
    #[command(flatten)]
    pub metric: MetricFlags,
    /// Output directory.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Also write SVG plots.
    #[arg(long)]
    pub svg: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Detection file or directory.
    pub input: PathBuf,
    /// Timed repetitions; the median is reported.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(3..))]
    pub repeat: u32,
    #[command(flatten)]
    pub tracker: TrackerFlags,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Validated inputs shared by the subcommands.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub inputs: Vec<PathBuf>,
    pub config: RunConfig,
    pub classes: Vec<String>,
    pub execution: Execution,
}

impl RunManifest {
    fn build(inputs: &[&Path], common: &CommonArgs) -> Result<Self> {
        for p in inputs {
            if !p.exists() {
                return Err(Error::Usage(format!(
                    "path does not exist: {}",
                    p.display()
                )));
            }
        }
        let config = match &common.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let classes = common
            .classes
            .clone()
            .unwrap_or_else(|| config.classes.clone());
        if classes.is_empty() {
            return Err(Error::Usage("no classes selected".into()));
        }
        let execution = if common.sequential {
            Execution::Sequential
        } else {
            config.execution
        };
        Ok(Self {
            inputs: inputs.iter().map(|p| p.to_path_buf()).collect(),
            config,
            classes,
            execution,
        })
    }

    /// Rejects classes that are neither KITTI classes nor present in `data`.
    fn check_classes(&self, data: &[SequenceBundle]) -> Result<()> {
        let mut valid: Vec<String> = KNOWN_CLASSES.iter().map(|s| s.to_string()).collect();
        for b in data {
            for c in b.classes() {
                if !valid.contains(&c) {
                    valid.push(c);
                }
            }
        }
        for c in &self.classes {
            if !valid.contains(c) {
                return Err(Error::Usage(format!(
                    "unknown class `{c}`; valid classes: {}",
                    valid.join(", ")
                )));
            }
        }
        Ok(())
    }

    fn tracker_configs(&self, flags: &TrackerFlags) -> Result<BTreeMap<String, TrackerConfig>> {
        let cli = flags.overrides();
        self.classes
            .iter()
            .map(|c| Ok((c.clone(), self.config.tracker_config(c, &cli)?)))
            .collect()
    }

    fn eval_config(&self, flags: &MetricFlags) -> Result<crate::io::EvalConfig> {
        let mut e = self.config.evaluation.clone();
        if !flags.iou_thres.is_empty() {
            e.criterion = CriterionKind::Iou;
            e.iou_thres = flags.iou_thres.clone();
        }
        if let Some(d) = flags.dist_thres {
            e.criterion = CriterionKind::Distance;
            e.dist_thres = d;
        }
        if let Some(l) = flags.recall_steps {
            e.recall_steps = l;
        }
        e.validate()?;
        Ok(e)
    }
}

/// Per-sequence outcome of `track`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackSummary {
    pub sequence: String,
    pub frames: usize,
    pub rows: usize,
    pub files: Vec<PathBuf>,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn load_with_context(path: &Path) -> Result<SequenceBundle> {
    load_sequence(path).map(|(b, _)| b).map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

fn load_all(path: &Path, exec: Execution) -> Result<Vec<SequenceBundle>> {
    let files = sequence_files(path)?;
    exec.try_map(&files, |p| load_with_context(p))
}

pub fn cmd_track(args: &TrackArgs) -> Result<Vec<TrackSummary>> {
    let m = RunManifest::build(&[&args.input], &args.common)?;
    let data = load_all(&args.input, m.execution)?;
    m.check_classes(&data)?;
    let configs = m.tracker_configs(&args.tracker)?;
    fs::create_dir_all(&args.output).map_err(|e| Error::io(&args.output, e))?;

    let mut log_rows = String::from("sequence,frame,micros,active,emitted\n");
    let mut summaries = Vec::with_capacity(data.len());
    for bundle in &data {
        let frames = bundle.detections_per_frame();
        let started = Instant::now();
        let outputs = run_sequence_classes(m.execution, &frames, &m.classes, &configs)?;
        let micros = started.elapsed().as_micros();

        // per-frame log: emitted rows per frame, distinct ids seen so far
        let mut emitted = vec![0usize; frames.len()];
        for o in &outputs {
            if let Some(e) = emitted.get_mut(o.frame as usize) {
                *e += 1;
            }
        }
        let per_frame = micros / frames.len().max(1) as u128;
        for (f, e) in emitted.iter().enumerate() {
            log_rows.push_str(&format!("{},{f},{per_frame},{e},{e}\n", bundle.id));
        }
        log::info!(
            "sequence {}: {} frames, {} rows, {:.1} ms",
            bundle.id,
            frames.len(),
            outputs.len(),
            micros as f64 / 1000.0
        );

        let mut files = Vec::new();
        if matches!(args.format, OutputFormat::Kitti | OutputFormat::Both) {
            let p = args.output.join(format!("{}.txt", bundle.id));
            write_file(&p, &write_results_kitti(&outputs))?;
            files.push(p);
        }
        if matches!(args.format, OutputFormat::Csv | OutputFormat::Both) {
            let p = args.output.join(format!("{}.csv", bundle.id));
            write_file(&p, &write_results_csv(&outputs))?;
            files.push(p);
        }
        summaries.push(TrackSummary {
            sequence: bundle.id.clone(),
            frames: frames.len(),
            rows: outputs.len(),
            files,
        });
    }
    write_file(&args.output.join("run.log"), &log_rows)?;
    Ok(summaries)
}

fn reports(metric: &MetricFlags, common: &CommonArgs) -> Result<Vec<MetricsReport>> {
    let m = RunManifest::build(&[&metric.gt, &metric.hyp], common)?;
    let eval = m.eval_config(metric)?;
    let gt = load_all(&metric.gt, m.execution)?;
    let hyp = load_all(&metric.hyp, m.execution)?;
    m.check_classes(&gt)?;
    eval.criteria()
        .into_iter()
        .map(|c| {
            evaluate(
                &gt,
                &hyp,
                &m.classes,
                c,
                eval.recall_steps,
                &eval.neighbor_classes,
                m.execution,
            )
        })
        .collect()
}

pub fn cmd_evaluate(args: &EvalArgs, out: &mut dyn Write) -> Result<Vec<MetricsReport>> {
    let reports = reports(&args.metric, &args.common)?;
    for r in &reports {
        write!(out, "{}", r.table()).map_err(|e| Error::io("<stdout>", e))?;
    }
    if let Some(p) = &args.json {
        write_file(p, &serde_json::to_string_pretty(&reports)?)?;
    }
    Ok(reports)
}

pub fn cmd_curves(args: &CurvesArgs) -> Result<Vec<PathBuf>> {
    let reports = reports(&args.metric, &args.common)?;
    fs::create_dir_all(&args.output).map_err(|e| Error::io(&args.output, e))?;
    let mut files = Vec::new();
    for r in &reports {
        let tag = r.criterion.label().replace('=', "_");
        for c in &r.classes {
            let stem = format!("{}_{tag}", c.class);
            let p = args.output.join(format!("{stem}.csv"));
            write_file(&p, &curves_csv(&c.sweep))?;
            files.push(p);
            if args.svg {
                for (metric, name) in [
                    (CurveMetric::Mota, "mota"),
                    (CurveMetric::Smota, "smota"),
                    (CurveMetric::Motp, "motp"),
                ] {
                    let p = args.output.join(format!("{stem}_{name}.svg"));
                    write_file(&p, &curves_svg(&c.sweep, metric))?;
                    files.push(p);
                }
            }
        }
    }
    Ok(files)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub frames: usize,
    /// Wall-clock seconds per repetition.
    pub seconds: Vec<f64>,
    pub median_seconds: f64,
    pub fps: f64,
}

/// Times the tracking stage only; input is parsed once up front.
pub fn cmd_bench(args: &BenchArgs) -> Result<BenchResult> {
    let m = RunManifest::build(&[&args.input], &args.common)?;
    let data = load_sequences(&args.input)?;
    m.check_classes(&data)?;
    let configs = m.tracker_configs(&args.tracker)?;
    let frames: Vec<_> = data.iter().map(|b| b.detections_per_frame()).collect();
    bench_frames(
        &frames,
        &m.classes,
        &configs,
        m.execution,
        args.repeat as usize,
    )
}

pub fn bench_frames(
    sequences: &[Vec<Vec<crate::io::Detection3D>>],
    classes: &[String],
    configs: &BTreeMap<String, TrackerConfig>,
    exec: Execution,
    repeat: usize,
) -> Result<BenchResult> {
    let total: usize = sequences.iter().map(Vec::len).sum();
    let mut seconds = Vec::with_capacity(repeat);
    for _ in 0..repeat.max(1) {
        let t = Instant::now();
        exec.try_map(sequences, |frames| {
            run_sequence_classes(Execution::Sequential, frames, classes, configs)
        })?;
        seconds.push(t.elapsed().as_secs_f64());
    }
    let mut sorted = seconds.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    Ok(BenchResult {
        frames: total,
        seconds,
        median_seconds: median,
        fps: if median > 0.0 {
            total as f64 / median
        } else {
            f64::INFINITY
        },
    })
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Track(a) => cmd_track(a).map(|s| {
            let rows: usize = s.iter().map(|x| x.rows).sum();
            println!(
                "tracked {} sequences, {rows} rows -> {}",
                s.len(),
                a.output.display()
            );
        }),
        Command::Evaluate(a) => cmd_evaluate(a, &mut std::io::stdout()).map(|_| ()),
        Command::Curves(a) => {
            cmd_curves(a).map(|f| println!("wrote {} files to {}", f.len(), a.output.display()))
        }
        Command::Bench(a) => cmd_bench(a).map(|b| {
            println!(
                "{} frames, median {:.4} s over {} runs, {:.1} FPS",
                b.frames,
                b.median_seconds,
                b.seconds.len(),
                b.fps
            );
        }),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
