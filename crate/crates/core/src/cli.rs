//! `spgcl` command line.
//!
//! Every command writes exactly one JSON report envelope. Relative paths, for
//! inputs and outputs alike, are resolved against `--out-dir`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::augment::{add_edges, drop_edges, mask_attributes, ppr_diffusion, AugmentKind};
use crate::contrastive::{embed, train_with, TrainConfig};
use crate::encoder::{read_checkpoint, write_checkpoint, EncoderParams};
use crate::error::{Error, Result};
use crate::eval::{linear_probe, mean_std, ProbeConfig};
use crate::graph::{edge_homophily, node_homophily, FeatureMatrix, Graph, LabelVector};
use crate::io;
use crate::rng::{derive_seed, rng_from_seed};
use crate::spectral::{band_distances, masking_band_distances, LaplacianSource};
use crate::synth::{generate_csbm, generate_neighbor_dist_graph, CsbmParams, NeighborDistParams};
use crate::verify;

pub const SEED_ENV: &str = "SPGCL_SEED";

#[derive(Parser, Debug)]
#[command(name = "spgcl", version, about = "Single-pass graph contrastive learning toolkit")]
struct Cli {
    /// Directory that relative paths are resolved against.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Per-epoch progress on stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic graph with features and labels.
    Synth(SynthArgs),
    /// Apply one augmentation to a graph or feature file.
    Augment(AugmentArgs),
    /// Train an encoder.
    Train(TrainArgs),
    /// Linear-probe a trained encoder.
    Eval(EvalArgs),
    /// Band-wise distances between a graph and its augmentations.
    Spectral(SpectralArgs),
    /// Run the theory checks.
    Verify(VerifyArgs),
    /// Sweep K_pos or T and probe each setting.
    Ablate(AblateArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum SynthModel {
    Csbm,
    NeighborDist,
}

#[derive(Args, Debug, Serialize)]
struct SynthArgs {
    #[arg(long, value_enum, default_value = "csbm")]
    model: SynthModel,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Same-class edge probability (csbm).
    #[arg(long, default_value_t = 0.032)]
    p: f64,
    /// Cross-class edge probability (csbm).
    #[arg(long, default_value_t = 0.008)]
    s: f64,
    /// Norm of the class mean `μ`; classes sit at `±μ`.
    #[arg(long, default_value_t = 1.0)]
    mu_sep: f64,
    #[arg(long, default_value_t = 16)]
    feat_dim: usize,
    /// Probability that a sampled neighbour shares the label (neighbor-dist).
    #[arg(long, default_value_t = 0.7)]
    same_prob: f64,
    /// Neighbour draws per node (neighbor-dist).
    #[arg(long, default_value_t = 8)]
    degree: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Serialize)]
struct AugmentArgs {
    #[arg(long)]
    kind: String,
    #[arg(long, default_value_t = 0.2)]
    ratio: f64,
    #[arg(long, default_value_t = 0.15)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Feature CSV, required for attr_mask.
    #[arg(long)]
    features: Option<PathBuf>,
    /// Output file (TSV edge list, or CSV for attr_mask and ppr).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct TrainArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    features: PathBuf,
    /// Labels are only used for diagnostics.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// JSON object with `TrainConfig` keys; missing keys take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
enum ProbeTarget {
    H,
    Z,
}

#[derive(Args, Debug, Serialize)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    #[arg(long, value_enum, default_value = "h")]
    target: ProbeTarget,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "result.json")]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct SpectralArgs {
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Feature CSV, required for attr_mask.
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long, default_value = "edge_drop")]
    aug_kind: String,
    #[arg(long, default_value_t = 0.2)]
    ratio: f64,
    #[arg(long, default_value_t = 0.15)]
    alpha: f64,
    #[arg(long, default_value_t = 10)]
    bands: usize,
    #[arg(long, default_value_t = 10)]
    seeds: usize,
    /// Fraction of frequencies in the low band (attr_mask).
    #[arg(long, default_value_t = 0.8)]
    keep_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "report.json")]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
enum Suite {
    Lemma1,
    Thm1,
    Thm2,
    Thm3,
    All,
}

#[derive(Args, Debug, Serialize)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    suite: Suite,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "report.json")]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
enum AblateParam {
    KPos,
    Hops,
}

#[derive(Args, Debug, Serialize)]
struct AblateArgs {
    #[arg(long, value_enum)]
    param: AblateParam,
    /// Comma-separated values to sweep.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<usize>,
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Training runs per value; run `r > 0` uses a derived seed.
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    /// Probe splits per training run.
    #[arg(long, default_value_t = 10)]
    probe_repeats: usize,
    #[arg(long, value_enum, default_value = "h")]
    target: ProbeTarget,
    #[arg(long, default_value_t = 0)]
    probe_seed: u64,
    #[arg(long, default_value = "ablate.json")]
    out: PathBuf,
}

#[derive(Serialize)]
struct ReportEnvelope<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a C,
    timing_ms: u128,
    results: Value,
}

struct Context {
    out_dir: PathBuf,
    verbose: bool,
    seed_override: Option<u64>,
}

impl Context {
    fn out(&self, p: &Path) -> PathBuf {
        self.out_dir.join(p)
    }

    fn seed(&self, given: u64) -> u64 {
        self.seed_override.unwrap_or(given)
    }

    fn emit<C: Serialize>(&self, path: &Path, command: &str, config: &C, started: Instant, results: Value) -> Result<()> {
        let env = ReportEnvelope {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            timing_ms: started.elapsed().as_millis(),
            results,
        };
        let text = serde_json::to_string_pretty(&env).map_err(|e| Error::Parse(e.to_string()))?;
        let full = self.out(path);
        io::write(&full, &(text + "\n"))?;
        println!("{}", full.display());
        Ok(())
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Parse(e.to_string()))
}

fn seed_override() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("{SEED_ENV}={s:?} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code. Errors are printed to stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprint!("E_USAGE: {e}");
            return 64;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let ctx = Context {
        out_dir: cli.out_dir,
        verbose: cli.verbose,
        seed_override: seed_override()?,
    };
    match cli.command {
        Command::Synth(a) => synth(&ctx, a),
        Command::Augment(a) => augment(&ctx, a),
        Command::Train(a) => train_cmd(&ctx, a),
        Command::Eval(a) => eval_cmd(&ctx, a),
        Command::Spectral(a) => spectral(&ctx, a),
        Command::Verify(a) => verify_cmd(&ctx, a),
        Command::Ablate(a) => ablate(&ctx, a),
    }
}

fn synth(ctx: &Context, mut a: SynthArgs) -> Result<()> {
    let started = Instant::now();
    a.seed = ctx.seed(a.seed);
    let (g, x, y, params) = match a.model {
        SynthModel::Csbm => {
            let p = CsbmParams::two_class(a.n, a.p, a.s, a.mu_sep, a.feat_dim, a.seed);
            let (g, x, y) = generate_csbm(&p)?;
            (g, x, y, to_value(&p)?)
        }
        SynthModel::NeighborDist => {
            if !(0.0..=1.0).contains(&a.same_prob) {
                return Err(Error::Config(format!("same_prob {} outside [0, 1]", a.same_prob)));
            }
            let csbm = CsbmParams::two_class(a.n, 0.0, 0.0, a.mu_sep, a.feat_dim, a.seed);
            let q = a.same_prob;
            let p = NeighborDistParams {
                n: a.n,
                neighbor_dist: vec![vec![q, 1.0 - q], vec![1.0 - q, q]],
                degree: a.degree,
                mu: csbm.mu,
                priors: None,
                seed: a.seed,
            };
            let (g, x, y) = generate_neighbor_dist_graph(&p)?;
            (g, x, y, to_value(&p)?)
        }
    };
    io::write_graph(&ctx.out(Path::new("graph.tsv")), &g)?;
    io::write_labels(&ctx.out(Path::new("labels.txt")), &y)?;
    io::write_matrix_csv(&ctx.out(Path::new("features.csv")), x.as_mat())?;
    let results = json!({
        "params": params,
        "num_nodes": g.num_nodes(),
        "num_edges": g.num_edges(),
        "edge_homophily": edge_homophily(&g, &y).ok(),
        "node_homophily": node_homophily(&g, &y).ok(),
        "files": ["graph.tsv", "labels.txt", "features.csv"],
    });
    ctx.emit(Path::new("meta.json"), "synth", &a, started, results)
}

fn read_inputs(ctx: &Context, graph: &Path, features: &Path, labels: Option<&Path>) -> Result<(Graph, FeatureMatrix, Option<LabelVector>)> {
    let x = io::read_features(&ctx.out(features))?;
    let g = io::read_graph(&ctx.out(graph), Some(x.num_nodes()))?;
    let y = labels.map(|p| io::read_labels(&ctx.out(p))).transpose()?;
    if let Some(y) = &y {
        if y.len() != g.num_nodes() {
            return Err(Error::Shape(format!("{} labels for {} nodes", y.len(), g.num_nodes())));
        }
    }
    Ok((g, x, y))
}

fn augment(ctx: &Context, mut a: AugmentArgs) -> Result<()> {
    let started = Instant::now();
    a.seed = ctx.seed(a.seed);
    let kind: AugmentKind = a.kind.parse()?;
    let mut rng = rng_from_seed(a.seed);
    let need = |p: &Option<PathBuf>, what: &str| {
        p.as_deref().map(|p| ctx.out(p)).ok_or_else(|| Error::Config(format!("{} requires --{what}", a.kind)))
    };
    let out = ctx.out(&a.out);
    let results = match kind {
        AugmentKind::AttrMask => {
            let x = io::read_features(&need(&a.features, "features")?)?;
            let m = mask_attributes(&x, a.ratio, &mut rng)?;
            io::write_matrix_csv(&out, m.as_mat())?;
            json!({ "kind": kind, "rows": m.num_nodes(), "cols": m.dim() })
        }
        AugmentKind::PprDiffusion => {
            let g = io::read_graph(&need(&a.graph, "graph")?, None)?;
            let s = ppr_diffusion(&g, a.alpha)?;
            io::write_matrix_csv(&out, &s)?;
            json!({ "kind": kind, "num_nodes": g.num_nodes() })
        }
        AugmentKind::EdgeDrop | AugmentKind::EdgeAdd => {
            let g = io::read_graph(&need(&a.graph, "graph")?, None)?;
            let h = if kind == AugmentKind::EdgeDrop {
                drop_edges(&g, a.ratio, &mut rng)?
            } else {
                add_edges(&g, a.ratio, &mut rng)?
            };
            io::write_graph(&out, &h)?;
            json!({ "kind": kind, "edges_before": g.num_edges(), "edges_after": h.num_edges() })
        }
    };
    let report = a.out.with_extension("json");
    ctx.emit(&report, "augment", &a, started, results)
}

fn load_config(path: Option<&Path>, ctx: &Context) -> Result<TrainConfig> {
    let mut cfg = match path {
        Some(p) => {
            let p = ctx.out(p);
            let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
        None => TrainConfig::default(),
    };
    cfg.seed = ctx.seed(cfg.seed);
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Serialize)]
struct TrainEcho<'a> {
    args: &'a TrainArgs,
    train_config: &'a TrainConfig,
}

fn train_cmd(ctx: &Context, a: TrainArgs) -> Result<()> {
    let started = Instant::now();
    let cfg = load_config(a.config.as_deref(), ctx)?;
    let (g, x, y) = read_inputs(ctx, &a.graph, &a.features, a.labels.as_deref())?;
    let verbose = ctx.verbose;
    let mut lines = String::new();
    let mut on_epoch = |m: &crate::contrastive::EpochMetrics| {
        if verbose {
            eprintln!("epoch {:>4}  loss {:+.5}  cover {:.3}", m.epoch, m.loss, m.node_cover_ratio);
        }
        lines.push_str(&serde_json::to_string(m).expect("metrics serialise"));
        lines.push('\n');
    };
    let (params, metrics) = train_with(&g, &x, &cfg, y.as_ref(), &mut on_epoch)?;
    write_checkpoint(&ctx.out(Path::new("checkpoint.bin")), &params)?;
    io::write(&ctx.out(Path::new("metrics.jsonl")), &lines)?;
    let last = metrics.epochs.last();
    let results = json!({
        "epochs": metrics.epochs.len(),
        "final": last,
        "checkpoint": "checkpoint.bin",
        "metrics": "metrics.jsonl",
    });
    let echo = TrainEcho {
        args: &a,
        train_config: &cfg,
    };
    ctx.emit(Path::new("report.json"), "train", &echo, started, results)
}

fn probe_embeddings(params: &EncoderParams, g: &Graph, x: &FeatureMatrix, target: ProbeTarget) -> Result<crate::numerics::Mat> {
    let emb = embed(params, g, x)?;
    Ok(match target {
        ProbeTarget::H => emb.h,
        ProbeTarget::Z => emb.z,
    })
}

fn eval_cmd(ctx: &Context, mut a: EvalArgs) -> Result<()> {
    let started = Instant::now();
    a.seed = ctx.seed(a.seed);
    let params = read_checkpoint(&ctx.out(&a.checkpoint))?;
    let (g, x, y) = read_inputs(ctx, &a.graph, &a.features, Some(&a.labels))?;
    let y = y.expect("labels requested");
    let h = probe_embeddings(&params, &g, &x, a.target)?;
    let cfg = ProbeConfig {
        repeats: a.repeats,
        seed: a.seed,
        ..ProbeConfig::default()
    };
    let res = linear_probe(&h, &y, &cfg)?;
    let results = json!({
        "accuracy": res.mean_accuracy,
        "accuracy_std": res.std_accuracy,
        "auc": res.mean_auc,
        "auc_std": res.std_auc,
        "per_repeat": res,
    });
    ctx.emit(&a.out, "eval", &a, started, results)
}

#[derive(Serialize)]
struct BandStat {
    band: usize,
    mean: f64,
    std: f64,
}

fn spectral(ctx: &Context, mut a: SpectralArgs) -> Result<()> {
    let started = Instant::now();
    a.seed = ctx.seed(a.seed);
    let kind: AugmentKind = a.aug_kind.parse()?;
    if a.seeds == 0 {
        return Err(Error::Config("seeds must be >= 1".into()));
    }
    let results = if kind == AugmentKind::AttrMask {
        let path = a.features.as_deref().map(|p| ctx.out(p)).ok_or_else(|| Error::Config("attr_mask requires --features".into()))?;
        let x = io::read_features(&path)?;
        let (mut lows, mut highs) = (Vec::new(), Vec::new());
        for s in 0..a.seeds {
            let mut rng = rng_from_seed(derive_seed(a.seed, s as u64));
            let m = mask_attributes(&x, a.ratio, &mut rng)?;
            let d = masking_band_distances(&x, &m, a.keep_fraction)?;
            lows.push(d.f_low);
            highs.push(d.f_high);
        }
        let (lm, ls) = mean_std(&lows);
        let (hm, hs) = mean_std(&highs);
        json!({
            "kind": kind,
            "f_low": { "mean": lm, "std": ls },
            "f_high": { "mean": hm, "std": hs },
        })
    } else {
        let path = a.graph.as_deref().map(|p| ctx.out(p)).ok_or_else(|| Error::Config(format!("{} requires --graph", a.aug_kind)))?;
        let g = io::read_graph(&path, None)?;
        let mut per_band = vec![Vec::new(); a.bands];
        for s in 0..a.seeds {
            let mut rng = rng_from_seed(derive_seed(a.seed, s as u64));
            let d = match kind {
                AugmentKind::EdgeDrop => {
                    let h = drop_edges(&g, a.ratio, &mut rng)?;
                    band_distances(LaplacianSource::Graph(&g), LaplacianSource::Graph(&h), a.bands)?
                }
                AugmentKind::EdgeAdd => {
                    let h = add_edges(&g, a.ratio, &mut rng)?;
                    band_distances(LaplacianSource::Graph(&g), LaplacianSource::Graph(&h), a.bands)?
                }
                AugmentKind::PprDiffusion => {
                    let s = ppr_diffusion(&g, a.alpha)?;
                    band_distances(LaplacianSource::Graph(&g), LaplacianSource::Dense(&s), a.bands)?
                }
                AugmentKind::AttrMask => unreachable!("handled above"),
            };
            for (acc, v) in per_band.iter_mut().zip(d) {
                acc.push(v);
            }
        }
        let bands: Vec<BandStat> = per_band
            .iter()
            .enumerate()
            .map(|(band, v)| {
                let (mean, std) = mean_std(v);
                BandStat { band, mean, std }
            })
            .collect();
        json!({ "kind": kind, "bands": bands })
    };
    ctx.emit(&a.out, "spectral", &a, started, results)
}

fn verify_cmd(ctx: &Context, mut a: VerifyArgs) -> Result<()> {
    let started = Instant::now();
    a.seed = ctx.seed(a.seed);
    let want = |s: Suite| a.suite == s || a.suite == Suite::All;
    let mut results = serde_json::Map::new();
    let mut pass = true;
    if want(Suite::Lemma1) {
        let r = verify::lemma1_suite(a.seed, 20)?;
        pass &= r.pass;
        results.insert("lemma1".into(), to_value(&r)?);
    }
    if want(Suite::Thm1) {
        let r = verify::theorem1_suite(a.seed)?;
        pass &= r.pass;
        results.insert("thm1".into(), to_value(&r)?);
    }
    if want(Suite::Thm2) {
        let r = verify::theorem2_suite(a.seed, 10)?;
        pass &= r.pass;
        results.insert("thm2".into(), to_value(&r)?);
    }
    if want(Suite::Thm3) {
        let r = verify::theorem3_suite(a.seed, 2)?;
        pass &= r.pass;
        results.insert("thm3".into(), to_value(&r)?);
    }
    results.insert("pass".into(), Value::Bool(pass));
    ctx.emit(&a.out, "verify", &a, started, Value::Object(results))
}

#[derive(Serialize)]
struct AblateEntry {
    value: usize,
    accuracies: Vec<f64>,
    mean: f64,
    std: f64,
}

#[derive(Serialize)]
struct AblateEcho<'a> {
    args: &'a AblateArgs,
    train_config: &'a TrainConfig,
}

fn ablate(ctx: &Context, mut a: AblateArgs) -> Result<()> {
    let started = Instant::now();
    a.probe_seed = ctx.seed(a.probe_seed);
    if a.repeats == 0 {
        return Err(Error::Config("repeats must be >= 1".into()));
    }
    let base = load_config(a.config.as_deref(), ctx)?;
    let (g, x, y) = read_inputs(ctx, &a.graph, &a.features, Some(&a.labels))?;
    let y = y.expect("labels requested");
    let mut entries = Vec::new();
    for &value in &a.values {
        let mut accs = Vec::new();
        for r in 0..a.repeats {
            let mut cfg = base.clone();
            match a.param {
                AblateParam::KPos => cfg.k_pos = value,
                AblateParam::Hops => cfg.hops = value,
            }
            if r > 0 {
                cfg.seed = derive_seed(base.seed, r as u64);
            }
            cfg.validate()?;
            let (params, _) = train_with(&g, &x, &cfg, None, &mut |_| {})?;
            let h = probe_embeddings(&params, &g, &x, a.target)?;
            let probe = ProbeConfig {
                repeats: a.probe_repeats,
                seed: a.probe_seed,
                ..ProbeConfig::default()
            };
            accs.push(linear_probe(&h, &y, &probe)?.mean_accuracy);
            if ctx.verbose {
                eprintln!("{:?}={value} run {r}: {:.4}", a.param, accs[accs.len() - 1]);
            }
        }
        let (mean, std) = mean_std(&accs);
        entries.push(AblateEntry {
            value,
            accuracies: accs,
            mean,
            std,
        });
    }
    let means: Vec<f64> = entries.iter().map(|e| e.mean).collect();
    let spread = means.iter().copied().fold(f64::NEG_INFINITY, f64::max) - means.iter().copied().fold(f64::INFINITY, f64::min);
    let results = json!({ "param": a.param, "entries": entries, "spread": spread });
    let echo = AblateEcho {
        args: &a,
        train_config: &base,
    };
    ctx.emit(&a.out, "ablate", &echo, started, results)
}
