//! The `patchdct` binary: mask coding, oracle refinement, and evaluation
//! from the command line.
//!
//! Exit codes: 0 on success, 1 on any input error (bad flags, unreadable or
//! malformed files), 2 on an internal invariant violation.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use patchdct::mask::BinaryMask;
use patchdct::metrics::{self, EvalRow, ReportKey};
use patchdct::pbm::{self, PbmFormat};
use patchdct::refine::RefineConfig;
use patchdct::sweep;
use patchdct::synth;

#[derive(Parser)]
#[command(
    name = "patchdct",
    version,
    about = "DCT mask coding, patch refinement, and evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a PBM mask into a DCT coefficient vector (JSON).
    Encode(EncodeArgs),
    /// Decode a coefficient vector (JSON) back into a PBM mask.
    Decode(DecodeArgs),
    /// Run oracle patch refinement of a coarse mask against ground truth.
    Refine(RefineArgs),
    /// Run a reconstruction-quality sweep from a JSON spec, emitting CSV.
    Sweep(SweepArgs),
    /// Evaluate paired prediction/truth masks (IoU and boundary IoU).
    Eval(EvalArgs),
    /// Per-class patch coefficient statistics over a corpus.
    Stats(StatsArgs),
    /// Generate a seeded synthetic mask corpus with a manifest.
    Synth(SynthArgs),
    /// Paint prediction/truth agreement as a PPM image.
    Overlay(OverlayArgs),
}

#[derive(Args)]
struct EncodeArgs {
    /// Input mask (PBM, P1 or P4).
    mask: PathBuf,
    /// Number of retained coefficients.
    #[arg(long)]
    dim: usize,
    /// Output JSON path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DecodeArgs {
    /// Input coefficient vector (JSON).
    vector: PathBuf,
    /// Output PBM path.
    #[arg(long)]
    out: PathBuf,
    /// Write plain P1 instead of raw P4.
    #[arg(long)]
    ascii: bool,
}

#[derive(Args)]
struct RefineArgs {
    /// Coarse input mask (PBM); recorded in the trace.
    #[arg(long)]
    coarse: PathBuf,
    /// Ground-truth mask (PBM) driving the oracle.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, default_value_t = 8)]
    patch_size: usize,
    #[arg(long, default_value_t = 6)]
    patch_dim: usize,
    #[arg(long, default_value_t = 1)]
    stages: usize,
    /// Class-flip probability per patch.
    #[arg(long, default_value_t = 0.0)]
    flip_prob: f64,
    /// Additive Gaussian noise width per coefficient.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output PBM path for the refined mask.
    #[arg(long)]
    out: PathBuf,
    /// Optional JSON trace output.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    ascii: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep specification (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Predicted masks (PBM), paired with --truth by position.
    #[arg(long, num_args = 1..)]
    pred: Vec<PathBuf>,
    /// Ground-truth masks (PBM).
    #[arg(long, num_args = 1..)]
    truth: Vec<PathBuf>,
    /// Boundary band width in pixels; defaults to the diagonal rule.
    #[arg(long)]
    band: Option<u32>,
    /// Output stem; writes `<out>.csv` and `<out>.json`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    /// Annotation file to rasterize instead of a synthetic corpus.
    #[arg(long, conflicts_with_all = ["seed", "count"])]
    annotations: Option<PathBuf>,
    /// Synthetic corpus seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Synthetic corpus size.
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 112)]
    resolution: usize,
    #[arg(long, default_value_t = 8)]
    patch_size: usize,
    #[arg(long, default_value_t = 6)]
    patch_dim: usize,
    /// Output JSON path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 112)]
    resolution: usize,
    /// Output directory; receives `mask_NNNN.pbm` files plus `manifest.json`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    ascii: bool,
}

#[derive(Args)]
struct OverlayArgs {
    /// Predicted mask (PBM).
    #[arg(long)]
    mask: PathBuf,
    /// Ground-truth mask (PBM).
    #[arg(long)]
    truth: PathBuf,
    /// Output PPM path.
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) if err.use_stderr() => {
            eprintln!("error: {err}");
            std::process::exit(1);
        }
        Err(help_or_version) => {
            print!("{help_or_version}");
            std::process::exit(0);
        }
    };
    configure_threads();

    // Command logic never panics on bad input; a panic is an internal bug.
    std::panic::set_hook(Box::new(|info| {
        eprintln!("internal error: {info}");
    }));
    let outcome = std::panic::catch_unwind(|| run(cli));
    match outcome {
        Ok(Ok(())) => {}
        Ok(Err(err)) => {
            eprintln!("error: {err:#}");
            std::process::exit(1);
        }
        Err(_) => std::process::exit(2),
    }
}

/// `PATCHDCT_THREADS` caps sweep/eval parallelism.
fn configure_threads() {
    if let Ok(value) = std::env::var("PATCHDCT_THREADS") {
        if let Ok(threads) = value.parse::<usize>() {
            if threads >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Encode(args) => cmd_encode(args),
        Command::Decode(args) => cmd_decode(args),
        Command::Refine(args) => cmd_refine(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Stats(args) => cmd_stats(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Overlay(args) => cmd_overlay(args),
    }
}

fn read_mask(path: &Path) -> Result<BinaryMask> {
    pbm::read_mask(path).with_context(|| format!("reading mask {}", path.display()))
}

fn pbm_format(ascii: bool) -> PbmFormat {
    if ascii {
        PbmFormat::Ascii
    } else {
        PbmFormat::Binary
    }
}

fn cmd_encode(args: EncodeArgs) -> Result<()> {
    let mask = read_mask(&args.mask)?;
    let vector = patchdct::codec::encode_mask(&mask, args.dim)?;
    std::fs::write(&args.out, vector.to_json() + "\n")
        .with_context(|| format!("writing {}", args.out.display()))?;
    Ok(())
}

fn cmd_decode(args: DecodeArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.vector)
        .with_context(|| format!("reading {}", args.vector.display()))?;
    let vector = patchdct::codec::DctVector::from_json(&text)?;
    let mask = patchdct::codec::decode_mask(&vector);
    pbm::write_mask(&args.out, &mask, pbm_format(args.ascii))?;
    Ok(())
}

fn cmd_refine(args: RefineArgs) -> Result<()> {
    let coarse = read_mask(&args.coarse)?;
    let truth = read_mask(&args.truth)?;
    let cfg = RefineConfig {
        patch_size: args.patch_size,
        vector_dim: args.patch_dim,
        stages: args.stages,
        flip_prob: args.flip_prob,
        noise_sigma: args.noise,
        seed: args.seed,
    };
    let (refined, trace) = patchdct::refine::oracle_refine(&coarse, &truth, &cfg)?;
    pbm::write_mask(&args.out, &refined, pbm_format(args.ascii))?;
    if let Some(trace_path) = args.trace {
        std::fs::write(&trace_path, trace.to_json() + "\n")
            .with_context(|| format!("writing {}", trace_path.display()))?;
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.spec)
        .with_context(|| format!("reading {}", args.spec.display()))?;
    let spec = sweep::SweepSpec::from_json(&text)?;
    let (label, corpus) = sweep::load_corpus(&spec)?;
    let rows = sweep::run_sweep(&spec, &label, &corpus)?;
    // All configurations succeeded; only now touch the output file.
    std::fs::write(&args.out, sweep::rows_to_csv(&rows))
        .with_context(|| format!("writing {}", args.out.display()))?;
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    if args.pred.is_empty() {
        bail!("no prediction masks given");
    }
    if args.pred.len() != args.truth.len() {
        bail!(
            "{} predictions but {} truth masks; lists must pair up",
            args.pred.len(),
            args.truth.len()
        );
    }
    let mut rows = Vec::with_capacity(args.pred.len());
    let mut band = args.band;
    for (pred_path, truth_path) in args.pred.iter().zip(&args.truth) {
        let pred = read_mask(pred_path)?;
        let truth = read_mask(truth_path)?;
        let d = *band.get_or_insert_with(|| metrics::default_band_width(truth.size()));
        rows.push(EvalRow {
            label: pred_path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| pred_path.display().to_string()),
            iou: metrics::iou(&pred, &truth)?,
            boundary_iou: metrics::boundary_iou(&pred, &truth, d)?,
        });
    }
    let key = ReportKey {
        band,
        ..ReportKey::default()
    };
    let report = metrics::aggregate(key, rows)?;
    let csv_path = args.out.with_extension("csv");
    let json_path = args.out.with_extension("json");
    std::fs::write(&csv_path, report.rows_to_csv())
        .with_context(|| format!("writing {}", csv_path.display()))?;
    std::fs::write(&json_path, report.to_json() + "\n")
        .with_context(|| format!("writing {}", json_path.display()))?;
    println!(
        "evaluated {} pairs: mean IoU {:.6}, mean boundary IoU {:.6}",
        report.count, report.mean_iou, report.mean_boundary_iou
    );
    Ok(())
}

fn load_stats_corpus(args: &StatsArgs) -> Result<Vec<BinaryMask>> {
    match &args.annotations {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let outcome = patchdct::ingest::parse_annotations(&text)?;
            for err in &outcome.record_errors {
                eprintln!("warning: skipping record {}: {}", err.index, err.message);
            }
            if outcome.records.is_empty() {
                bail!("annotation file holds no valid records");
            }
            outcome
                .records
                .iter()
                .map(|r| Ok(patchdct::ingest::rasterize(r, args.resolution)?))
                .collect()
        }
        None => Ok(synth::synth_corpus(args.seed, args.count, args.resolution)?),
    }
}

fn cmd_stats(args: StatsArgs) -> Result<()> {
    let corpus = load_stats_corpus(&args)?;
    let stats = patchdct::patch::coefficient_stats(&corpus, args.patch_size, args.patch_dim)?;
    let json = serde_json::to_string_pretty(&stats)?;
    std::fs::write(&args.out, json + "\n")
        .with_context(|| format!("writing {}", args.out.display()))?;
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let corpus = synth::synth_corpus(args.seed, args.count, args.resolution)?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    for (index, mask) in corpus.iter().enumerate() {
        let path = args.out.join(format!("mask_{index:04}.pbm"));
        pbm::write_mask(&path, mask, pbm_format(args.ascii))?;
    }
    let manifest = synth::corpus_manifest(args.seed, args.resolution, &corpus);
    let manifest_path = args.out.join("manifest.json");
    std::fs::write(
        &manifest_path,
        serde_json::to_string_pretty(&manifest)? + "\n",
    )
    .with_context(|| format!("writing {}", manifest_path.display()))?;
    println!("wrote {} masks to {}", corpus.len(), args.out.display());
    Ok(())
}

fn cmd_overlay(args: OverlayArgs) -> Result<()> {
    let mask = read_mask(&args.mask)?;
    let truth = read_mask(&args.truth)?;
    let ppm = patchdct::overlay::overlay_ppm(&mask, &truth)?;
    std::fs::write(&args.out, ppm).with_context(|| format!("writing {}", args.out.display()))?;
    Ok(())
}
