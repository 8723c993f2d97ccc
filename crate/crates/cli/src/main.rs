//! `videval`: evaluate video object detectors against frame-level ground
//! truth.
//!
//! Exit codes: 0 on success, 2 for invalid inputs or configuration, 3 for
//! filesystem problems, 4 when the ground truth contains no boxes at all.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use videval_core::ingest::{
    load_class_table, write_yolo_labels, ClassTable, FilterPolicy, GroundTruthFrame,
};
use videval_core::report::{
    load_ground_truth, run_evaluate, run_stats, write_outputs, ConfidenceMode, GtFormat,
    RunConfig, TOOL_NAME, TOOL_VERSION,
};
use videval_core::tracklets::build_tracklets;
use videval_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "videval",
    version,
    about = "Evaluate video object detectors: accuracy, temporal stability, failure breakdowns"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full evaluation: AP suite, operating point, stability, failures.
    Evaluate(EvaluateArgs),
    /// Temporal stability only (translation, scale and aspect, fragmentation).
    Stability(EvaluateArgs),
    /// False-negative breakdown only.
    Failures(EvaluateArgs),
    /// Convert a directory of VOC XML annotations to YOLO label files.
    Convert(ConvertArgs),
    /// Dataset statistics: split summary, centroid and area histograms.
    Stats(StatsArgs),
    /// Link ground truth into tracklets and print them.
    Tracklets(TrackletsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Voc,
    Yolo,
}

impl From<FormatArg> for GtFormat {
    fn from(value: FormatArg) -> Self {
        match value {
            FormatArg::Voc => GtFormat::Voc,
            FormatArg::Yolo => GtFormat::Yolo,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FilterPolicyArg {
    /// Drop boxes with out-of-range or degenerate coordinates.
    Reject,
    /// Clip coordinates into the frame, dropping boxes that collapse.
    Clamp,
}

impl From<FilterPolicyArg> for FilterPolicy {
    fn from(value: FilterPolicyArg) -> Self {
        match value {
            FilterPolicyArg::Reject => FilterPolicy::Reject,
            FilterPolicyArg::Clamp => FilterPolicy::Clamp,
        }
    }
}

/// `--conf` accepts a number or the word `auto`.
#[derive(Clone, Copy)]
enum ConfArg {
    Auto,
    Value(f64),
}

impl FromStr for ConfArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Self::Auto);
        }
        s.parse::<f64>()
            .map(Self::Value)
            .map_err(|_| format!("expected a confidence value or `auto`, got `{s}`"))
    }
}

#[derive(Args)]
struct EvaluateArgs {
    /// Ground-truth annotation directory.
    #[arg(long)]
    gt: PathBuf,

    /// Ground-truth annotation format.
    #[arg(long, value_enum, default_value = "voc")]
    format: FormatArg,

    /// Class-name table, one name per line (required for YOLO ground truth).
    #[arg(long)]
    classes: Option<PathBuf>,

    /// Detection stream, one JSON object per line.
    #[arg(long)]
    detections: PathBuf,

    /// Video manifest (frame sizes, counts, tags).
    #[arg(long)]
    manifest: Option<PathBuf>,

    /// IOU at or above which a detection matches a ground-truth box.
    #[arg(long, default_value_t = 0.5)]
    match_iou: f64,

    /// IOU at or above which ground-truth boxes link across frames.
    #[arg(long, default_value_t = 0.5)]
    link_iou: f64,

    /// Operating confidence threshold, or `auto` to pick the F1-best one.
    #[arg(long, default_value = "auto")]
    conf: ConfArg,

    /// What to do with invalid ground-truth coordinates.
    #[arg(long, value_enum, default_value = "reject")]
    filter_policy: FilterPolicyArg,

    /// Skip malformed detection lines instead of failing.
    #[arg(long)]
    skip_bad_detections: bool,

    /// Directory for the report and CSV sidecars (default: JSON to stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl EvaluateArgs {
    fn to_config(&self) -> RunConfig {
        let mut config = RunConfig::new(&self.gt, self.format.into(), &self.detections);
        config.classes = self.classes.clone();
        config.manifest = self.manifest.clone();
        config.match_iou = self.match_iou;
        config.link_iou = self.link_iou;
        config.confidence = match self.conf {
            ConfArg::Auto => ConfidenceMode::Auto,
            ConfArg::Value(v) => ConfidenceMode::Value(v),
        };
        config.filter_policy = self.filter_policy.into();
        if self.skip_bad_detections {
            config.detection_parse_policy =
                videval_core::ingest::DetectionParsePolicy::Skip;
        }
        config
    }
}

#[derive(Args)]
struct ConvertArgs {
    /// VOC XML annotation directory.
    #[arg(long)]
    gt: PathBuf,

    /// Class-name table; derived from the data (sorted) when omitted.
    #[arg(long)]
    classes: Option<PathBuf>,

    /// Video manifest, used as a frame-size fallback.
    #[arg(long)]
    manifest: Option<PathBuf>,

    /// What to do with invalid ground-truth coordinates.
    #[arg(long, value_enum, default_value = "reject")]
    filter_policy: FilterPolicyArg,

    /// Output directory for the label files and classes.txt.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    /// Ground-truth annotation directory.
    #[arg(long)]
    gt: PathBuf,

    /// Ground-truth annotation format.
    #[arg(long, value_enum, default_value = "voc")]
    format: FormatArg,

    /// Class-name table (required for YOLO ground truth).
    #[arg(long)]
    classes: Option<PathBuf>,

    /// Video manifest; supplies per-video frame counts and tags.
    #[arg(long)]
    manifest: PathBuf,

    /// What to do with invalid ground-truth coordinates.
    #[arg(long, value_enum, default_value = "reject")]
    filter_policy: FilterPolicyArg,

    /// Centroid histogram resolution (cells per axis).
    #[arg(long, default_value_t = videval_core::stats::DEFAULT_GRID)]
    grid: usize,

    /// Directory for stats.json and histogram CSVs (default: JSON to stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrackletsArgs {
    /// Ground-truth annotation directory.
    #[arg(long)]
    gt: PathBuf,

    /// Ground-truth annotation format.
    #[arg(long, value_enum, default_value = "voc")]
    format: FormatArg,

    /// Class-name table (required for YOLO ground truth).
    #[arg(long)]
    classes: Option<PathBuf>,

    /// Video manifest, used as a frame-size fallback.
    #[arg(long)]
    manifest: Option<PathBuf>,

    /// IOU at or above which ground-truth boxes link across frames.
    #[arg(long, default_value_t = 0.5)]
    link_iou: f64,

    /// What to do with invalid ground-truth coordinates.
    #[arg(long, value_enum, default_value = "reject")]
    filter_policy: FilterPolicyArg,

    /// File for the tracklet JSON (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::ZeroGroundTruth => 4,
        _ if err.is_validation() => 2,
        _ => 3,
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Evaluate(args) => cmd_evaluate(&args),
        Command::Stability(args) => cmd_section(&args, Section::Stability),
        Command::Failures(args) => cmd_section(&args, Section::Failures),
        Command::Convert(args) => cmd_convert(&args),
        Command::Stats(args) => cmd_stats(&args),
        Command::Tracklets(args) => cmd_tracklets(&args),
    }
}

fn emit_json(value: &impl serde::Serialize, out: Option<&Path>, name: &str) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Config(format!("serialization: {e}")))?;
    text.push('\n');
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|source| Error::File {
                path: dir.to_path_buf(),
                source,
            })?;
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|source| Error::File { path, source })
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let output = run_evaluate(&args.to_config())?;
    match &args.out {
        Some(dir) => {
            let written = write_outputs(&output, dir)?;
            for path in written {
                eprintln!("wrote {}", path.display());
            }
            Ok(())
        }
        None => emit_json(&output.report, None, "report.json"),
    }
}

enum Section {
    Stability,
    Failures,
}

fn cmd_section(args: &EvaluateArgs, section: Section) -> Result<()> {
    let output = run_evaluate(&args.to_config())?;
    let report = &output.report;
    let header = serde_json::json!({
        "tool": report.tool,
        "version": report.version,
        "generated_at": report.generated_at,
        "config": report.config,
        "inputs": report.inputs,
    });
    let mut body = header;
    match section {
        Section::Stability => {
            body["stability"] = serde_json::to_value(&report.stability)
                .map_err(|e| Error::Config(format!("serialization: {e}")))?;
            emit_json(&body, args.out.as_deref(), "stability.json")?;
            if let Some(dir) = &args.out {
                let path = dir.join("stability_per_tracklet.csv");
                let mut csv = Vec::new();
                videval_core::stability::write_stability_csv(&report.stability, &mut csv)?;
                std::fs::write(&path, csv).map_err(|source| Error::File { path, source })?;
            }
        }
        Section::Failures => {
            body["failures"] = serde_json::to_value(&report.failures)
                .map_err(|e| Error::Config(format!("serialization: {e}")))?;
            emit_json(&body, args.out.as_deref(), "failures.json")?;
            if let Some(dir) = &args.out {
                let path = dir.join("failures.csv");
                let mut csv = Vec::new();
                videval_core::failure::write_failures_csv(&report.failures, &mut csv)?;
                std::fs::write(&path, csv).map_err(|source| Error::File { path, source })?;
            }
        }
    }
    Ok(())
}

/// Build a class table from the data itself: the distinct class names,
/// sorted case-insensitively.
fn derive_class_table(frames: &[GroundTruthFrame]) -> Result<ClassTable> {
    let mut names: Vec<String> = Vec::new();
    for frame in frames {
        for object in &frame.objects {
            let name = object.object_class.trim();
            if !names
                .iter()
                .any(|n| n.eq_ignore_ascii_case(name))
            {
                names.push(name.to_string());
            }
        }
    }
    names.sort_by(|a, b| a.to_ascii_lowercase().cmp(&b.to_ascii_lowercase()));
    ClassTable::new(names)
}

fn cmd_convert(args: &ConvertArgs) -> Result<()> {
    let manifest = match &args.manifest {
        Some(path) => Some(videval_core::ingest::parse_manifest(
            &videval_core::ingest::read_file(path)?,
        )?),
        None => None,
    };
    let (frames, _) = load_ground_truth(
        &args.gt,
        GtFormat::Voc,
        None,
        manifest.as_deref(),
        args.filter_policy.into(),
    )?;
    let classes = match &args.classes {
        Some(path) => load_class_table(path)?,
        None => derive_class_table(&frames)?,
    };
    std::fs::create_dir_all(&args.out).map_err(|source| Error::File {
        path: args.out.clone(),
        source,
    })?;
    for frame in &frames {
        let text = write_yolo_labels(frame, &classes)?;
        let path = args
            .out
            .join(format!("{}_{:06}.txt", frame.video_id, frame.frame_index));
        std::fs::write(&path, text).map_err(|source| Error::File { path, source })?;
    }
    let classes_path = args.out.join("classes.txt");
    let mut table = classes.names().join("\n");
    table.push('\n');
    std::fs::write(&classes_path, table).map_err(|source| Error::File {
        path: classes_path,
        source,
    })?;
    eprintln!("wrote {} label files to {}", frames.len(), args.out.display());
    Ok(())
}

fn cmd_stats(args: &StatsArgs) -> Result<()> {
    let stats = run_stats(
        &args.gt,
        args.format.into(),
        args.classes.as_deref(),
        &args.manifest,
        args.filter_policy.into(),
        args.grid,
    )?;
    emit_json(&stats, args.out.as_deref(), "stats.json")?;
    if let Some(dir) = &args.out {
        let path = dir.join("centroids.csv");
        let mut csv = Vec::new();
        stats.centroids.write_csv(&mut csv)?;
        std::fs::write(&path, csv).map_err(|source| Error::File { path, source })?;
        let path = dir.join("areas.csv");
        let mut csv = Vec::new();
        stats.areas.write_csv(&mut csv)?;
        std::fs::write(&path, csv).map_err(|source| Error::File { path, source })?;
    }
    Ok(())
}

fn cmd_tracklets(args: &TrackletsArgs) -> Result<()> {
    let manifest = match &args.manifest {
        Some(path) => Some(videval_core::ingest::parse_manifest(
            &videval_core::ingest::read_file(path)?,
        )?),
        None => None,
    };
    let (frames, _) = load_ground_truth(
        &args.gt,
        args.format.into(),
        args.classes.as_deref(),
        manifest.as_deref(),
        args.filter_policy.into(),
    )?;
    let tracklets = build_tracklets(&frames, args.link_iou)?;
    let body = serde_json::json!({
        "tool": TOOL_NAME,
        "version": TOOL_VERSION,
        "link_iou": args.link_iou,
        "tracklet_count": tracklets.len(),
        "tracklets": tracklets,
    });
    match &args.out {
        Some(path) => {
            let mut text = serde_json::to_string_pretty(&body)
                .map_err(|e| Error::Config(format!("serialization: {e}")))?;
            text.push('\n');
            std::fs::write(path, text).map_err(|source| Error::File {
                path: path.clone(),
                source,
            })
        }
        None => {
            let mut text = serde_json::to_string_pretty(&body)
                .map_err(|e| Error::Config(format!("serialization: {e}")))?;
            text.push('\n');
            print!("{text}");
            Ok(())
        }
    }
}
