use std::collections::BTreeSet;
use std::io::Read;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use loomkit_core::bench::{dataset_stats, evaluate, load_benchmark, load_predictions, render_table};
use loomkit_core::model::{Dataset, Shot};
use loomkit_core::prompt::{build_action_prompt, parse_action_output, token_budget, ShotContext, DEFAULT_SAMPLE_FPS};
use loomkit_core::raster::RgbImage;
use loomkit_core::shots::{partition, FeatureSource, FrameFeatureSeries, KtsKernel, PartitionParams};
use loomkit_pipeline::{
    annotate_dataset, apply_review_decisions, merge_with_mapping, AnnotateConfig, Captioner, Clients, DescriptionModel,
    Detector, HttpCaptioner, HttpDescriptionModel, HttpDetector, HttpTracker, HttpTransport, MockCaptioner,
    MockDescriptionModel, MockDetector, MockTracker, ModelClientConfig, ReviewDecision, Tracker,
};
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(
    name = "loomkit",
    version,
    about = "Video annotation pipeline and spatial-temporal evaluation toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kernel {
    Linear,
    NormalizedLinear,
}

#[derive(Subcommand)]
enum Command {
    /// Split a video into shots from a features document, a CSV or a directory of PNG frames.
    Partition {
        input: PathBuf,
        #[arg(long, default_value_t = 27.0)]
        threshold: f64,
        #[arg(long = "max-cp", default_value_t = 24)]
        max_cp: usize,
        #[arg(long, default_value_t = 1.0)]
        penalty: f64,
        #[arg(long = "min-shot-s", default_value_t = 1.0)]
        min_shot_s: f64,
        #[arg(long = "max-shots", default_value_t = 10)]
        max_shots: usize,
        #[arg(long = "min-gap", default_value_t = 0)]
        min_gap: usize,
        #[arg(long, value_enum, default_value_t = Kernel::NormalizedLinear)]
        kernel: Kernel,
        /// Video frame rate for CSV and frame-directory input.
        #[arg(long, default_value_t = 30.0)]
        fps: f64,
        /// Rate at which CSV rows were sampled; defaults to --fps.
        #[arg(long)]
        sample_fps: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the annotation stages over a dataset whose videos already have shots.
    Annotate {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        detector: Option<String>,
        #[arg(long)]
        tracker: Option<String>,
        #[arg(long)]
        captioner: Option<String>,
        #[arg(long)]
        describer: Option<String>,
        /// Use the built-in fixture clients instead of model servers.
        #[arg(long)]
        mock: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        max_in_flight: usize,
        #[arg(long, default_value_t = 0.35)]
        score_floor: f64,
        #[arg(long)]
        token: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Merge adjacent annotated shots of a shot list.
    MergeShots {
        /// JSON array of shots.
        #[arg(long)]
        shots: PathBuf,
        /// Comma-separated covered shot indices.
        #[arg(long, value_delimiter = ',')]
        covered: Vec<usize>,
    },
    /// Print the action-description prompt for a shot context document.
    Prompts {
        #[arg(long)]
        shot: PathBuf,
        #[arg(long)]
        frames: u32,
    },
    /// Parse model output from stdin into action descriptions.
    ParseActions {
        #[arg(long = "max-id")]
        max_id: u32,
        #[arg(long, default_value_t = DEFAULT_SAMPLE_FPS)]
        sample_fps: f64,
    },
    /// Visual token accounting for a slow/fast frame configuration.
    Tokens {
        #[arg(long, default_value_t = 5)]
        slow: u32,
        #[arg(long = "slow-tokens", default_value_t = 256)]
        slow_tokens: u32,
        #[arg(long, default_value_t = 128)]
        fast: u32,
        #[arg(long, default_value_t = 4)]
        ratio: u32,
        #[arg(long = "id-overhead", default_value_t = 0)]
        id_overhead: u32,
    },
    /// Score a prediction file against a benchmark.
    Eval {
        #[arg(long)]
        bench: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        buckets: bool,
        #[arg(long = "group-by", value_parser = ["category"])]
        group_by: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dataset statistics as JSON.
    Stats {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Replay a decision log onto a dataset offline.
    ApplyDecisions {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the manual verification API.
    ServeReview {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        log: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        #[arg(long)]
        token: Option<String>,
        #[arg(long)]
        frames_dir: Option<PathBuf>,
    },
}

/// Features document accepted by `partition`.
#[derive(Deserialize)]
struct FeaturesDoc {
    video_id: String,
    fps: f64,
    frame_count: usize,
    sample_fps: f64,
    #[serde(default)]
    features: Option<Vec<Vec<f64>>>,
    /// CSV path relative to the document.
    #[serde(default)]
    features_csv: Option<PathBuf>,
}

#[derive(Serialize)]
struct PartitionDoc {
    video_id: String,
    fps: f64,
    frame_count: usize,
    #[serde(flatten)]
    report: loomkit_core::shots::PartitionReport,
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, format!("{text}\n")).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_frames(dir: &Path) -> Result<Vec<RgbImage>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no PNG frames in {}", dir.display());
    }
    files
        .iter()
        .map(|p| RgbImage::read_png(p).with_context(|| format!("decoding {}", p.display())))
        .collect()
}

fn http(endpoint: &str, token: &Option<String>) -> Result<HttpTransport> {
    let mut cfg = ModelClientConfig::new(endpoint);
    cfg.auth_token = token.clone();
    Ok(HttpTransport::new(cfg)?)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Partition {
            input,
            threshold,
            max_cp,
            penalty,
            min_shot_s,
            max_shots,
            min_gap,
            kernel,
            fps,
            sample_fps,
            out,
        } => {
            let (video_id, fps, frame_count, features) = if input.is_dir() {
                let frames = load_frames(&input)?;
                let id = input
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default();
                (id, fps, frames.len(), FrameFeatureSeries::from_frames(&frames, fps)?)
            } else if input.extension().is_some_and(|e| e == "csv") {
                let sample = sample_fps.unwrap_or(fps);
                let f = FrameFeatureSeries::from_csv_path(&input, sample)?;
                let n = ((f.len() as f64) * fps / sample).round() as usize;
                let id = input
                    .file_stem()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default();
                (id, fps, n, f)
            } else {
                let doc: FeaturesDoc = read_json(&input)?;
                let f = match (doc.features, doc.features_csv) {
                    (Some(rows), None) => FrameFeatureSeries::new(rows, doc.sample_fps, FeatureSource::External)?,
                    (None, Some(csv)) => {
                        let base = input.parent().unwrap_or(Path::new("."));
                        FrameFeatureSeries::from_csv_path(&base.join(csv), doc.sample_fps)?
                    }
                    _ => bail!("{}: give exactly one of features or features_csv", input.display()),
                };
                (doc.video_id, doc.fps, doc.frame_count, f)
            };
            let params = PartitionParams {
                threshold,
                max_change_points: max_cp,
                penalty_weight: penalty,
                kernel: match kernel {
                    Kernel::Linear => KtsKernel::Linear,
                    Kernel::NormalizedLinear => KtsKernel::NormalizedLinear,
                },
                min_gap_frames: min_gap,
                min_shot_s,
                max_shots,
            };
            let report = partition(&features, frame_count, fps, &params)?;
            let doc = PartitionDoc {
                video_id,
                fps,
                frame_count,
                report,
            };
            write_or_print(out.as_deref(), &serde_json::to_string_pretty(&doc)?)
        }
        Command::Annotate {
            dataset,
            detector,
            tracker,
            captioner,
            describer,
            mock,
            seed,
            max_in_flight,
            score_floor,
            token,
            out,
        } => {
            let ds = Dataset::load(&dataset)?;
            let config = AnnotateConfig {
                max_in_flight,
                score_floor,
                ..Default::default()
            };
            let (result, summary) = if mock {
                // smallest frame so generated boxes fit every video
                let geometry = ds
                    .videos
                    .iter()
                    .map(|v| v.meta.geometry)
                    .min_by_key(|g| g.pixel_count())
                    .unwrap_or(loomkit_core::model::FrameGeometry { height: 1, width: 1 });
                let det = MockDetector::generated(seed, geometry);
                let desc = MockDescriptionModel { seed };
                let clients = Clients {
                    detector: &det,
                    tracker: &MockTracker,
                    captioner: &MockCaptioner::default(),
                    describer: Some(&desc),
                };
                annotate_dataset(&ds, clients, &config)?
            } else {
                let (Some(d), Some(t), Some(c)) = (detector, tracker, captioner) else {
                    bail!("--detector, --tracker and --captioner are required without --mock");
                };
                let det = HttpDetector(http(&d, &token)?);
                let tr = HttpTracker(http(&t, &token)?);
                let cap = HttpCaptioner(http(&c, &token)?);
                let desc = describer
                    .map(|u| http(&u, &token).map(HttpDescriptionModel))
                    .transpose()?;
                let clients = Clients {
                    detector: &det as &dyn Detector,
                    tracker: &tr as &dyn Tracker,
                    captioner: &cap as &dyn Captioner,
                    describer: desc.as_ref().map(|d| d as &dyn DescriptionModel),
                };
                annotate_dataset(&ds, clients, &config)?
            };
            result.save(&out)?;
            eprintln!("annotated {} videos, skipped {}", summary.annotated, summary.skipped);
            Ok(())
        }
        Command::MergeShots { shots, covered } => {
            let shots: Vec<Shot> = read_json(&shots)?;
            let covered: BTreeSet<usize> = covered.into_iter().collect();
            if let Some(bad) = covered.iter().find(|&&i| i >= shots.len()) {
                bail!("covered index {bad} out of range for {} shots", shots.len());
            }
            let m = merge_with_mapping(&shots, &covered);
            println!(
                "{}",
                serde_json::to_string_pretty(&serde_json::json!({"shots": m.shots, "mapping": m.mapping}))?
            );
            Ok(())
        }
        Command::Prompts { shot, frames } => {
            let ctx: ShotContext = read_json(&shot)?;
            println!("{}", build_action_prompt(&ctx, frames)?);
            Ok(())
        }
        Command::ParseActions { max_id, sample_fps } => {
            let mut text = String::new();
            std::io::stdin().read_to_string(&mut text)?;
            let parsed = parse_action_output(&text, max_id, sample_fps)?;
            println!("{}", serde_json::to_string_pretty(&parsed)?);
            Ok(())
        }
        Command::Tokens {
            slow,
            slow_tokens,
            fast,
            ratio,
            id_overhead,
        } => {
            let b = token_budget(slow, slow_tokens, fast, ratio, id_overhead)?;
            println!("{}", serde_json::to_string_pretty(&b)?);
            Ok(())
        }
        Command::Eval {
            bench,
            pred,
            buckets,
            group_by,
            out,
        } => {
            let bench = load_benchmark(&bench)?;
            let preds = load_predictions(&pred)?;
            let report = evaluate(&bench, &preds)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            let categories = group_by.is_some();
            print!("{}", render_table(&report, buckets, categories));
            let mut json = report.to_percent_json();
            if !buckets {
                json.as_object_mut().map(|o| o.remove("buckets"));
            }
            if !categories {
                json.as_object_mut().map(|o| o.remove("categories"));
            }
            if let Some(out) = out {
                std::fs::write(&out, serde_json::to_string_pretty(&json)? + "\n")
                    .with_context(|| format!("writing {}", out.display()))?;
            }
            Ok(())
        }
        Command::Stats { dataset } => {
            let ds = Dataset::load(&dataset)?;
            println!("{}", serde_json::to_string_pretty(&dataset_stats(&ds)?)?);
            Ok(())
        }
        Command::ApplyDecisions { dataset, log, out } => {
            let ds = Dataset::load(&dataset)?;
            let text = std::fs::read_to_string(&log).with_context(|| format!("reading {}", log.display()))?;
            let decisions = text
                .lines()
                .enumerate()
                .filter(|(_, l)| !l.trim().is_empty())
                .map(|(i, l)| {
                    serde_json::from_str::<ReviewDecision>(l)
                        .with_context(|| format!("{} line {}", log.display(), i + 1))
                })
                .collect::<Result<Vec<_>>>()?;
            apply_review_decisions(&ds, &decisions)?.save(&out)?;
            Ok(())
        }
        Command::ServeReview {
            dataset,
            log,
            port,
            host,
            token,
            frames_dir,
        } => Ok(loomkit_review::serve(loomkit_review::ServeConfig {
            dataset,
            log,
            addr: SocketAddr::new(host, port),
            token,
            frames_dir,
        })?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
