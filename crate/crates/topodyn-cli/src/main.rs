//! Pipeline driver: synthesize benchmark series, compute persistence
//! diagrams, compare diagram files, and run the full classification
//! protocol. Subcommands mirror the pipeline stages so every
//! intermediate artifact can be inspected.
//!
//! Diagnostics go to stderr; data goes to files or stdout. Exit code 0
//! means the operation fully succeeded. Every artifact embeds the
//! pipeline fingerprint and the seed it was produced with.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use topodyn::classify::{evaluate, EvalProtocol, PipelineConfig, TauPolicy};
use topodyn::dataset::{load_dataset, DatasetManifest, LoadOptions};
use topodyn::dynamics::{integrate, synth_signal, OdeSpec, SignalKind, SignalParams, System};
use topodyn::embedding::{delay_embed, estimate_delay, subsample, EmbeddingConfig};
use topodyn::filtration::{build_rips, ScalePolicy};
use topodyn::homology::{compute_persistence, PersistenceDiagram};
use topodyn::io;
use topodyn::metrics::{bottleneck, wasserstein1};

#[derive(Parser)]
#[command(name = "topodyn", version, about = "Topological time-series analysis pipeline")]
struct Cli {
    /// Cap the worker thread count (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a benchmark time series as CSV.
    Synth(SynthArgs),
    /// Compute persistence diagrams for every channel of a CSV file.
    Persist(PersistArgs),
    /// Distance between two diagram files.
    Dist(DistArgs),
    /// Evaluate 1-NN classification over a manifest corpus.
    Classify(ClassifyArgs),
}

/// Embedding and filtration parameters shared by persist and classify.
#[derive(Args)]
struct PipelineArgs {
    /// Embedding dimension.
    #[arg(long, default_value_t = 3)]
    m: usize,
    /// Embedding delay: a positive lag, or `auto` for the
    /// autocorrelation zero-crossing per channel.
    #[arg(long, default_value = "auto")]
    tau: String,
    /// Cap on points per cloud (uniform temporal subsampling).
    #[arg(long, default_value_t = 150)]
    max_points: usize,
    /// Filtration scale cap: a number, or `diameter` for the cloud
    /// diameter.
    #[arg(long, default_value = "diameter")]
    eps_max: String,
    /// Build a plain Vietoris-Rips filtration without value-0 edges
    /// between temporally consecutive points.
    #[arg(long)]
    no_temporal_links: bool,
}

impl PipelineArgs {
    fn to_config(&self) -> Result<PipelineConfig> {
        let tau = match self.tau.as_str() {
            "auto" => TauPolicy::Auto,
            t => TauPolicy::Fixed(
                t.parse().with_context(|| format!("--tau must be `auto` or a lag, got {t:?}"))?,
            ),
        };
        let scale = match self.eps_max.as_str() {
            "diameter" => ScalePolicy::Diameter,
            e => ScalePolicy::Fixed(
                e.parse()
                    .with_context(|| format!("--eps-max must be `diameter` or a number, got {e:?}"))?,
            ),
        };
        Ok(PipelineConfig {
            m: self.m,
            tau,
            max_points: self.max_points,
            scale,
            temporal_links: !self.no_temporal_links,
        })
    }
}

#[derive(Args)]
struct SynthArgs {
    /// One of: lorenz, rossler, sine, noisy_sine, damped_sine.
    preset: String,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Sample count for the sinusoid presets.
    #[arg(long, default_value_t = 800)]
    n: usize,
    /// RNG seed (noisy_sine).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Integration steps for the flow presets.
    #[arg(long, default_value_t = 6000)]
    steps: usize,
    /// Burn-in steps discarded from the start of a flow.
    #[arg(long, default_value_t = 1000)]
    burn_in: usize,
    /// Initial state x,y,z for the flow presets.
    #[arg(long, default_value = "1,1,1", value_parser = parse_x0)]
    x0: [f64; 3],
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long)]
    period: Option<f64>,
    #[arg(long)]
    phase: Option<f64>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    decay: Option<f64>,
}

fn parse_x0(text: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err("expected three comma-separated numbers".into());
    }
    let mut x0 = [0.0; 3];
    for (slot, part) in x0.iter_mut().zip(parts) {
        *slot = part.trim().parse().map_err(|e| format!("{e}"))?;
    }
    Ok(x0)
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let channels = match args.preset.as_str() {
        "lorenz" | "rossler" => {
            let system = if args.preset == "lorenz" {
                let System::Lorenz { sigma, rho, beta } = System::lorenz() else { unreachable!() };
                System::Lorenz {
                    sigma: args.sigma.unwrap_or(sigma),
                    rho: args.rho.unwrap_or(rho),
                    beta: args.beta.unwrap_or(beta),
                }
            } else {
                let System::Rossler { a, b, c } = System::rossler() else { unreachable!() };
                System::Rossler {
                    a: args.a.unwrap_or(a),
                    b: args.b.unwrap_or(b),
                    c: args.c.unwrap_or(c),
                }
            };
            let spec = OdeSpec {
                n_steps: args.steps,
                burn_in: args.burn_in,
                ..OdeSpec::new(system, args.x0)
            };
            integrate(&spec).context("integration failed")?.to_vec()
        }
        "sine" | "noisy_sine" | "damped_sine" => {
            let kind = match args.preset.as_str() {
                "sine" => SignalKind::Sine,
                "noisy_sine" => SignalKind::NoisySine,
                _ => SignalKind::DampedSine,
            };
            let defaults = SignalParams::default();
            let params = SignalParams {
                amplitude: args.amplitude.unwrap_or(defaults.amplitude),
                period: args.period.unwrap_or(defaults.period),
                phase: args.phase.unwrap_or(defaults.phase),
                noise: args.noise.unwrap_or(defaults.noise),
                decay: args.decay.unwrap_or(defaults.decay),
            };
            vec![synth_signal(kind, &params, args.n, args.seed).context("generation failed")?]
        }
        other => bail!(
            "unknown preset {other:?}; expected lorenz, rossler, sine, noisy_sine, or damped_sine"
        ),
    };
    let rows = channels[0].len();
    match &args.out {
        Some(path) => {
            io::write_csv_file(path, &channels)
                .with_context(|| format!("writing {}", path.display()))?;
            eprintln!(
                "synth {}: {} channel(s) x {} rows, seed {} -> {}",
                args.preset,
                channels.len(),
                rows,
                args.seed,
                path.display()
            );
        }
        None => print!("{}", io::to_csv(&channels)),
    }
    Ok(())
}

#[derive(Args)]
struct PersistArgs {
    /// Input CSV time-series file.
    input: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Directory for the diagram files (one per channel per dimension).
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Seed recorded in the artifacts (this command uses no randomness).
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Diagram artifact: fingerprint/seed/channel header comments (skipped
/// by the parser) followed by the diagram serialization.
fn diagram_artifact(
    diagram: &PersistenceDiagram,
    fingerprint: &str,
    seed: u64,
    channel: &str,
    dim: u8,
    tau: usize,
) -> String {
    let mut out = String::new();
    writeln!(out, "# fingerprint\t{fingerprint}").unwrap();
    writeln!(out, "# seed\t{seed}").unwrap();
    writeln!(out, "# channel\t{channel}\tdim\t{dim}\ttau\t{tau}").unwrap();
    out.push_str(&diagram.to_text(false));
    out
}

fn cmd_persist(args: &PersistArgs) -> Result<()> {
    let cfg = args.pipeline.to_config()?;
    let fingerprint = cfg.fingerprint();
    let channels = io::read_csv_file(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    let stem = args
        .input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "series".to_string());
    for channel in &channels {
        let context = |stage: &'static str| format!("channel {}: {stage}", channel.id());
        let tau = match cfg.tau {
            TauPolicy::Auto => estimate_delay(channel).with_context(|| context("delay"))?,
            TauPolicy::Fixed(t) => t,
        };
        let ecfg = EmbeddingConfig { m: cfg.m, tau, max_points: cfg.max_points };
        let cloud = delay_embed(channel, &ecfg).with_context(|| context("embedding"))?;
        let cloud = subsample(&cloud, cfg.max_points);
        let filt = build_rips(&cloud, cfg.scale, cfg.temporal_links)
            .with_context(|| context("filtration"))?;
        let diagram = compute_persistence(&filt).with_context(|| context("reduction"))?;
        for dim in [0u8, 1] {
            let pairs = diagram.pairs().iter().filter(|p| p.dim == dim).copied().collect();
            let sub = PersistenceDiagram::new(pairs, diagram.eps_max())
                .expect("per-dimension pairs of a valid diagram");
            let name = format!("{stem}.{}.dim{dim}.dgm", channel.id());
            let path = args.out_dir.join(&name);
            let kept = sub.pairs().iter().filter(|p| !p.is_zero_persistence()).count();
            let text = diagram_artifact(&sub, &fingerprint, args.seed, channel.id(), dim, tau);
            std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("persist: {} ({kept} pairs)", path.display());
        }
    }
    Ok(())
}

#[derive(Args)]
struct DistArgs {
    left: PathBuf,
    right: PathBuf,
    /// w1 (1-Wasserstein, L1 ground metric) or bottleneck.
    #[arg(long, default_value = "w1")]
    metric: String,
}

fn read_diagram(path: &Path) -> Result<PersistenceDiagram> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let diagram =
        PersistenceDiagram::parse_text(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(diagram)
}

fn uniform_dim(d: &PersistenceDiagram) -> Result<Option<u8>> {
    let mut dim = None;
    for p in d.pairs() {
        match dim {
            None => dim = Some(p.dim),
            Some(k) if k != p.dim => bail!("diagram mixes dimensions {k} and {}", p.dim),
            _ => {}
        }
    }
    Ok(dim)
}

fn cmd_dist(args: &DistArgs) -> Result<()> {
    let left = read_diagram(&args.left)?;
    let right = read_diagram(&args.right)?;
    let (dl, dr) = (uniform_dim(&left)?, uniform_dim(&right)?);
    if let (Some(a), Some(b)) = (dl, dr) {
        if a != b {
            bail!("dimension mismatch: {} has dim {a}, {} has dim {b}", args.left.display(), args.right.display());
        }
    }
    if left.eps_max() != right.eps_max() {
        bail!(
            "scale mismatch: eps_max {} vs {}; diagrams are only comparable at the same cap",
            left.eps_max(),
            right.eps_max()
        );
    }
    let (left, right) = (left.finitized(), right.finitized());
    let d = match args.metric.as_str() {
        "w1" => wasserstein1(&left, &right)?,
        "bottleneck" => bottleneck(&left, &right)?,
        other => bail!("unknown metric {other:?}; expected w1 or bottleneck"),
    };
    println!("{d}");
    Ok(())
}

#[derive(Args)]
struct ClassifyArgs {
    /// Corpus manifest (tab-separated: path, label, sample_id, checksum).
    manifest: PathBuf,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Number of random splits.
    #[arg(long, default_value_t = 20)]
    splits: usize,
    /// Test samples drawn per class in each split.
    #[arg(long, default_value_t = 3)]
    test_per_class: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Accept samples whose channels have differing lengths.
    #[arg(long)]
    allow_ragged: bool,
    /// Z-score each channel before embedding.
    #[arg(long)]
    zscore: bool,
    /// Write the full report here (summary always goes to stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_classify(args: &ClassifyArgs) -> Result<()> {
    let cfg = args.pipeline.to_config()?;
    let manifest = DatasetManifest::read_file(&args.manifest)?;
    let samples = load_dataset(
        &manifest,
        &LoadOptions { allow_ragged: args.allow_ragged, zscore: args.zscore },
    )?;
    eprintln!("classify: {} samples, {} classes", samples.len(), manifest.classes().len());
    let protocol = EvalProtocol {
        n_splits: args.splits,
        test_per_class: args.test_per_class,
        seed: args.seed,
    };
    let report = evaluate(&samples, &cfg, &protocol)?;
    if let Some(path) = &args.out {
        std::fs::write(path, report.to_text())
            .with_context(|| format!("writing {}", path.display()))?;
        eprintln!("classify: report -> {}", path.display());
    }
    println!(
        "mean accuracy {} +/- {} (population std over {} splits)",
        report.mean_accuracy, report.std_accuracy, report.n_splits
    );
    println!("confusion (rows true, cols predicted; classes {})", report.classes.join(" "));
    for (class, row) in report.classes.iter().zip(&report.confusion) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.3}")).collect();
        println!("{class}\t{}", cells.join("\t"));
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) =
            rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()
        {
            eprintln!("topodyn: --threads: {e}");
            std::process::exit(1);
        }
    }
    let result = match &cli.cmd {
        Cmd::Synth(args) => cmd_synth(args),
        Cmd::Persist(args) => cmd_persist(args),
        Cmd::Dist(args) => cmd_dist(args),
        Cmd::Classify(args) => cmd_classify(args),
    };
    if let Err(e) = result {
        eprintln!("topodyn: {e:#}");
        std::process::exit(1);
    }
}
