use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use handover_core::data::{
    load_checkpoint, load_records, save_checkpoint, save_records, Checkpoint, Dataset, SplitMode,
};
use handover_core::eval::{compare_layouts, multi_seed_eval};
use handover_core::feature::Layout;
use handover_core::mlp::TrainConfig;
use handover_core::synth::{generate, SceneConfig};
use handover_core::{Error, Result};

/// Handover gesture classifier: synthetic data, training, evaluation, inference.
#[derive(Parser)]
#[command(name = "handover", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a labeled synthetic record file.
    Generate(GenerateArgs),
    /// Train on every record of a file and write a checkpoint.
    Train(TrainArgs),
    /// Balance/split/train/test over several seeds and report accuracy.
    Eval(EvalArgs),
    /// Evaluate both layouts, also on a translated copy of each test set.
    Compare(CompareArgs),
    /// Score records with a checkpoint; one JSON object per line.
    Predict(PredictArgs),
    /// Validate a record file and print class counts.
    Inspect(InspectArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long = "pos-frac", default_value_t = 0.5)]
    pos_frac: f64,
    #[arg(long, default_value_t = 3.0)]
    noise: f64,
    #[arg(long = "corner-frac", default_value_t = 0.2)]
    corner_frac: f64,
    #[arg(long, default_value_t = 640.0)]
    width: f64,
    #[arg(long, default_value_t = 480.0)]
    height: f64,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, default_value = "relative", value_parser = parse_layout)]
    layout: Layout,
    /// Four comma-separated hidden layer sizes.
    #[arg(long, default_value = "64,64,32,16", value_parser = parse_hidden)]
    hidden: HiddenDims,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch: usize,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// z-score inputs with training-set statistics.
    #[arg(long)]
    normalize: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.8)]
    ratio: f64,
    #[arg(long = "split-mode", default_value = "frame", value_parser = parse_split_mode)]
    split_mode: SplitMode,
}

impl ModelArgs {
    fn config(&self) -> Result<TrainConfig> {
        let cfg = TrainConfig {
            layout: self.layout,
            hidden_dims: self.hidden.0.clone(),
            learning_rate: self.lr,
            batch_size: self.batch,
            epochs: self.epochs,
            threshold: self.threshold,
            seed: self.seed,
            normalize: self.normalize,
            split_ratio: self.ratio,
            split_mode: self.split_mode,
            ..TrainConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Loss history path; defaults to `<out>.history.json`.
    #[arg(long)]
    history: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// JSON report path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-split CSV path.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    splits: usize,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    eval: EvalArgs,
    /// Test-set translation in pixels, `dx,dy`.
    #[arg(long, default_value = "160,120", value_parser = parse_shift, allow_hyphen_values = true)]
    shift: (f64, f64),
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    model: PathBuf,
    /// JSON-lines output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the checkpoint's threshold.
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long = "in")]
    input: PathBuf,
}

fn parse_layout(s: &str) -> std::result::Result<Layout, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_split_mode(s: &str) -> std::result::Result<SplitMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Clone)]
struct HiddenDims(Vec<usize>);

fn parse_hidden(s: &str) -> std::result::Result<HiddenDims, String> {
    s.split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<std::result::Result<_, _>>()
        .map(HiddenDims)
}

fn parse_shift(s: &str) -> std::result::Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [dx, dy] => {
            let dx = dx.trim().parse::<f64>().map_err(|e| e.to_string())?;
            let dy = dy.trim().parse::<f64>().map_err(|e| e.to_string())?;
            Ok((dx, dy))
        }
        _ => Err(format!("expected dx,dy, got {s:?}")),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn to_pretty_json<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::NonFinite(format!("cannot serialize report: {e}")))?;
    text.push('\n');
    Ok(text)
}

fn labeled_dataset(path: &Path) -> Result<Dataset> {
    Dataset::new(load_records(path)?)
}

fn run_generate(args: GenerateArgs) -> Result<()> {
    let cfg = SceneConfig {
        image_width: args.width,
        image_height: args.height,
        n_records: args.n,
        positive_fraction: args.pos_frac,
        noise_sigma: args.noise,
        corner_fraction: args.corner_frac,
        seed: args.seed,
        ..SceneConfig::default()
    };
    let ds = generate(&cfg)?;
    save_records(ds.records(), &args.out)?;
    let (pos, neg) = ds.class_counts();
    println!(
        "wrote {} records ({pos} positive, {neg} negative) to {}",
        ds.len(),
        args.out.display()
    );
    Ok(())
}

fn run_train(args: TrainArgs) -> Result<()> {
    let cfg = args.model.config()?;
    let ds = labeled_dataset(&args.input)?;
    let (checkpoint, history) = Checkpoint::fit(&ds, &cfg)?;
    save_checkpoint(&checkpoint, &args.out)?;
    let history_path = args.history.unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".history.json");
        PathBuf::from(p)
    });
    write_file(
        &history_path,
        &to_pretty_json(&serde_json::json!({ "epoch_mean_loss": history }))?,
    )?;
    println!(
        "trained {} model on {} records; final loss {:.6}; checkpoint {}",
        cfg.layout,
        ds.len(),
        history.last().copied().unwrap_or(f64::NAN),
        args.out.display()
    );
    Ok(())
}

fn run_eval(args: EvalArgs) -> Result<()> {
    let cfg = args.model.config()?;
    let records = load_records(&args.input)?;
    let report = multi_seed_eval(&records, &cfg, args.splits)?;
    print!("{}", report.to_table());
    if let Some(out) = &args.out {
        write_file(out, &to_pretty_json(&report)?)?;
    }
    if let Some(csv) = &args.csv {
        write_file(csv, &report.to_csv())?;
    }
    Ok(())
}

fn run_compare(args: CompareArgs) -> Result<()> {
    let eval = args.eval;
    let cfg = eval.model.config()?;
    let records = load_records(&eval.input)?;
    let comparison = compare_layouts(&records, &cfg, eval.splits, args.shift)?;
    print!("{}", comparison.to_table());
    if let Some(out) = &eval.out {
        write_file(out, &to_pretty_json(&comparison)?)?;
    }
    if let Some(csv) = &eval.csv {
        write_file(csv, &comparison.to_csv())?;
    }
    Ok(())
}

fn run_predict(args: PredictArgs) -> Result<()> {
    let mut checkpoint = load_checkpoint(&args.model)?;
    if let Some(t) = args.threshold {
        checkpoint.config.threshold = t;
        checkpoint.config.validate()?;
    }
    let records = load_records(&args.input)?;
    let mut lines = String::new();
    for r in &records {
        let p = checkpoint.predict(r)?;
        let line = serde_json::json!({
            "frame_id": r.frame_id,
            "probability": p.probability,
            "label": p.label,
        });
        lines.push_str(&line.to_string());
        lines.push('\n');
    }
    match &args.out {
        Some(path) => write_file(path, &lines),
        None => io::stdout()
            .write_all(lines.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn run_inspect(args: InspectArgs) -> Result<()> {
    let records = load_records(&args.input)?;
    let pos = records.iter().filter(|r| r.label == Some(1)).count();
    let neg = records.iter().filter(|r| r.label == Some(0)).count();
    let unlabeled = records.len() - pos - neg;
    let no_object = records.iter().filter(|r| r.objects.is_empty()).count();
    let no_face = records.iter().filter(|r| r.head_pose.is_none()).count();
    let mut videos: Vec<&str> = records.iter().map(|r| r.source_video.as_str()).collect();
    videos.sort_unstable();
    videos.dedup();
    println!("records: {}", records.len());
    println!("positive: {pos}");
    println!("negative: {neg}");
    println!("unlabeled: {unlabeled}");
    println!("without object: {no_object}");
    println!("without head pose: {no_face}");
    println!("source videos: {}", videos.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            if !err.use_stderr() {
                let _ = err.print();
                return ExitCode::SUCCESS;
            }
            let msg = err.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            let first = first.strip_prefix("error: ").unwrap_or(first);
            eprintln!("error[config]: {first}");
            return ExitCode::from(3);
        }
    };
    let result = match cli.command {
        Command::Generate(a) => run_generate(a),
        Command::Train(a) => run_train(a),
        Command::Eval(a) => run_eval(a),
        Command::Compare(a) => run_compare(a),
        Command::Predict(a) => run_predict(a),
        Command::Inspect(a) => run_inspect(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let category = err.category();
            let msg = err.to_string().replace('\n', " ");
            eprintln!("error[{category}]: {msg}");
            ExitCode::from(category.exit_code() as u8)
        }
    }
}
