use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use shoal_core::io::{self, AppConfig};
use shoal_core::metrics::{evaluate_sequence, MetricsReport};
use shoal_core::simulator::{adjacent_iou_stats, generate, HISTOGRAM_BINS};
use shoal_core::tracker::track_sequence;
use shoal_core::MaskStore;

#[derive(Parser)]
#[command(name = "shoal", version, about = "Multi-object tracking for dense groups of similar animals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// JSON configuration with optional `tracker`, `scenario` and `metrics` sections
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> Result<AppConfig> {
        match &self.config {
            Some(path) => Ok(io::load_config(path)?),
            None => Ok(AppConfig::default()),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Track detections and write trajectories as MOT CSV
    Track {
        #[arg(long)]
        detections: PathBuf,
        /// Mask manifest (frame,det_index,path)
        #[arg(long)]
        masks: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        disable_interaction: bool,
        #[arg(long)]
        disable_refind: bool,
    },
    /// Score tracks against ground truth
    Evaluate {
        /// Ground-truth file; repeat together with --tracks for several sequences
        #[arg(long, required = true)]
        gt: Vec<PathBuf>,
        /// Tracker output, paired with --gt in order
        #[arg(long, required = true)]
        tracks: Vec<PathBuf>,
        /// Write the report as JSON here
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Generate a synthetic scenario into a directory
    Simulate {
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Adjacent-frame IoU statistics of ground-truth trajectories
    Analyze {
        /// Trajectories to analyze; without it a scenario is simulated from the config
        #[arg(long)]
        gt: Option<PathBuf>,
        /// Histogram CSV (bin_start,bin_end,count)
        #[arg(long)]
        output: PathBuf,
        /// Write mean, histogram and per-track means as JSON here
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Render trajectories as an SVG of box-centre polylines
    Plot {
        #[arg(long)]
        tracks: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Track {
            detections,
            masks,
            output,
            config,
            disable_interaction,
            disable_refind,
        } => {
            let mut tracker_config = config.load()?.tracker;
            tracker_config.interaction_enabled &= !disable_interaction;
            tracker_config.refind_enabled &= !disable_refind;
            let mut frames = io::read_detections(&detections)?;
            let store = match &masks {
                Some(path) => io::load_masks(path, &mut frames)?,
                None => MaskStore::new(),
            };
            let run = track_sequence(&frames, &store, tracker_config).context("tracking failed")?;
            for w in &run.warnings {
                log::warn!("{w}");
            }
            io::write_tracks(&output, &run.trajectories)?;
            log::info!(
                "{} tracks, {} boxes written to {}",
                run.trajectories.len(),
                run.trajectories.point_count(),
                output.display()
            );
        }
        Command::Evaluate {
            gt,
            tracks,
            report,
            config,
        } => {
            if gt.len() != tracks.len() {
                bail!("{} --gt files but {} --tracks files", gt.len(), tracks.len());
            }
            let gate = config.load()?.metrics.iou_gate;
            let mut sequences = Vec::with_capacity(gt.len());
            for (g, t) in gt.iter().zip(&tracks) {
                let gt_set = io::read_tracks(g)?;
                let hyp = io::read_tracks(t)?;
                sequences.push(evaluate_sequence(&sequence_name(g), &gt_set, &hyp, gate));
            }
            let summary = MetricsReport::from_sequences(sequences, gate);
            print!("{}", summary.to_text());
            if let Some(path) = report {
                write_json(&path, &summary)?;
            }
        }
        Command::Simulate { output, seed, config } => {
            let mut scenario_config = config.load()?.scenario;
            if let Some(seed) = seed {
                scenario_config.seed = seed;
            }
            let scenario = generate(&scenario_config)?;
            io::write_scenario(&output, &scenario)?;
            for d in &scenario.dropouts {
                log::debug!("dropped agent {} in frame {}", d.agent, d.frame);
            }
            log::info!(
                "{} detections ({} dropped) written to {}",
                scenario.detection_count(),
                scenario.dropouts.len(),
                output.display()
            );
        }
        Command::Analyze {
            gt,
            output,
            report,
            seed,
            config,
        } => {
            let trajectories = match &gt {
                Some(path) => io::read_tracks(path)?,
                None => {
                    let mut scenario_config = config.load()?.scenario;
                    if let Some(seed) = seed {
                        scenario_config.seed = seed;
                    }
                    generate(&scenario_config)?.gt
                }
            };
            let Some(stats) = adjacent_iou_stats(&trajectories) else {
                bail!("no track has two consecutive frames; adjacent IoU is not applicable");
            };
            let mut csv = String::from("bin_start,bin_end,count\n");
            for (i, count) in stats.histogram.iter().enumerate() {
                let lo = i as f64 / HISTOGRAM_BINS as f64;
                let hi = (i + 1) as f64 / HISTOGRAM_BINS as f64;
                let _ = writeln!(csv, "{lo:.2},{hi:.2},{count}");
            }
            std::fs::write(&output, csv).with_context(|| format!("writing {}", output.display()))?;
            println!("pairs {}", stats.pairs);
            println!("mean adjacent IoU {:.6}", stats.mean);
            if let Some(path) = report {
                write_json(&path, &stats)?;
            }
        }
        Command::Plot { tracks, output } => {
            let set = io::read_tracks(&tracks)?;
            std::fs::write(&output, io::render_svg(&set))
                .with_context(|| format!("writing {}", output.display()))?;
        }
    }
    Ok(())
}

fn sequence_name(path: &Path) -> String {
    path.parent()
        .and_then(|p| p.file_name())
        .or_else(|| path.file_stem())
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
