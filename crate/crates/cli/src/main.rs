use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ebnarx::data::{load_csv, make_windows, write_csv, NoiseKind, WindowConfig, WindowDataset};
use ebnarx::harness::{
    evaluate_mse, export_density_sequence, run_sweep, train_model, ExperimentSpec, Generator,
    InferenceSettings, ModelKind, TrainSettings, TrainedModel,
};

#[derive(Parser)]
#[command(name = "ebnarx", version, about = "Energy-based NARX density models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a system and write its `u,y` CSV.
    Generate(GenerateArgs),
    /// Train a model on a `u,y` CSV and save it as JSON.
    Train(TrainArgs),
    /// Predictive density summary (MAP and HDR intervals) at one regressor.
    Predict(PredictArgs),
    /// Validation MSE and mean log-likelihood on a `u,y` CSV.
    Evaluate(EvaluateArgs),
    /// Run a hyperparameter sweep from an experiment JSON.
    Sweep(SweepArgs),
    /// Write gridded densities and intervals for every row of a CSV.
    ExportDensity(ExportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum System {
    Ar,
    Arx,
    Chen,
}

#[derive(Clone, Copy, ValueEnum)]
enum Noise {
    Gaussian,
    Bimodal,
    Cauchy,
    StateDependent,
}

impl From<Noise> for NoiseKind {
    fn from(n: Noise) -> Self {
        match n {
            Noise::Gaussian => NoiseKind::Gaussian,
            Noise::Bimodal => NoiseKind::Bimodal,
            Noise::Cauchy => NoiseKind::Cauchy,
            Noise::StateDependent => NoiseKind::StateDependent,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Ebm,
    Fcn,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    system: System,
    /// Noise case for the AR system.
    #[arg(long, value_enum, default_value = "gaussian")]
    noise: Noise,
    #[arg(long)]
    len: usize,
    #[arg(long, default_value_t = 0.0)]
    sigma_v: f64,
    #[arg(long, default_value_t = 0.0)]
    sigma_w: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct WindowArgs {
    /// Output delays.
    #[arg(long)]
    dy: usize,
    /// Input delays.
    #[arg(long, default_value_t = 0)]
    du: usize,
}

impl WindowArgs {
    fn config(&self) -> Result<WindowConfig> {
        Ok(WindowConfig::new(self.dy, self.du)?)
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    window: WindowArgs,
    /// JSON training settings; command-line flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    model: Option<Kind>,
    #[arg(long)]
    width: Option<usize>,
    /// Train on this leading fraction of samples only.
    #[arg(long)]
    train_fraction: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Per-epoch training log CSV.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct InferenceArgs {
    /// JSON inference settings (grid, ascent, levels).
    #[arg(long)]
    inference: Option<PathBuf>,
    #[arg(long)]
    grid_points: Option<usize>,
}

impl InferenceArgs {
    fn settings(&self) -> Result<InferenceSettings> {
        let mut s: InferenceSettings = match &self.inference {
            Some(p) => read_json(p)?,
            None => InferenceSettings::default(),
        };
        if let Some(n) = self.grid_points {
            s.grid_points = n;
        }
        Ok(s)
    }
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// Comma-separated regressor `[y_{t-1}..y_{t-dy}, u_{t-1}..u_{t-du}]`.
    #[arg(long, allow_hyphen_values = true)]
    x: String,
    #[command(flatten)]
    inference: InferenceArgs,
    /// Accepted for uniformity; inference is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Only score targets at this sample index or later.
    #[arg(long, default_value_t = 0)]
    from_sample: usize,
    #[command(flatten)]
    inference: InferenceArgs,
    #[arg(long)]
    skip_log_likelihood: bool,
    /// Accepted for uniformity; evaluation is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Replace the spec's seed list with this single seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 0)]
    from_sample: usize,
    #[command(flatten)]
    inference: InferenceArgs,
    #[arg(long)]
    out: PathBuf,
    /// Accepted for uniformity; export is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Windows of the CSV whose targets lie at or after `from_sample`.
fn windows_from(path: &Path, window: WindowConfig, from_sample: usize) -> Result<WindowDataset<f64>> {
    let series = load_csv::<f64>(path)?;
    let all = make_windows(&series, window)?;
    if from_sample <= all.t0 {
        return Ok(all);
    }
    if from_sample >= all.t0 + all.len() {
        bail!("--from-sample {from_sample} is past the last sample of {}", path.display());
    }
    Ok(all.split_at(from_sample - all.t0)?.1)
}

fn generate(a: GenerateArgs) -> Result<()> {
    let generator = match a.system {
        System::Ar => Generator::Ar { noise: a.noise.into() },
        System::Arx => Generator::Arx,
        System::Chen => Generator::Chen {
            sigma_v: a.sigma_v,
            sigma_w: a.sigma_w,
        },
    };
    let series = generator.simulate(a.len, a.seed)?;
    write_csv(&series, &a.out)?;
    eprintln!("wrote {} samples to {}", series.len(), a.out.display());
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let mut settings: TrainSettings = match &a.config {
        Some(p) => read_json(p)?,
        None => TrainSettings::default(),
    };
    if let Some(k) = a.model {
        settings.model = match k {
            Kind::Ebm => ModelKind::Ebm,
            Kind::Fcn => ModelKind::Fcn,
        };
    }
    if let Some(w) = a.width {
        settings.width = w;
    }
    let settings = settings.with_seed(a.seed);
    let series = load_csv::<f64>(&a.data)?;
    let mut data = make_windows(&series, a.window.config()?)?;
    if let Some(f) = a.train_fraction {
        data = data.split_fraction(f)?.0;
    }
    let (model, log) = train_model(&settings, &data)?;
    model.save(&a.out)?;
    if let Some(p) = &a.log {
        log.write_csv(p)?;
    }
    eprintln!(
        "trained {} model for {} epochs (best held-out loss {:.6} at epoch {}), saved to {}",
        model.kind(),
        log.epochs.len(),
        log.best_val_loss,
        log.best_epoch,
        a.out.display()
    );
    Ok(())
}

fn predict(a: PredictArgs) -> Result<()> {
    let model = TrainedModel::load(&a.model)?;
    let x = a
        .x
        .split(',')
        .map(|s| s.trim().parse::<f64>().with_context(|| format!("invalid regressor value {s:?}")))
        .collect::<Result<Vec<f64>>>()?;
    let p = model.predict(&x, &a.inference.settings()?)?;
    println!("{}", serde_json::to_string_pretty(&p.summary())?);
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let model = TrainedModel::load(&a.model)?;
    let settings = a.inference.settings()?;
    let data = windows_from(&a.data, model.window(), a.from_sample)?;
    let mse = evaluate_mse(&model, &data, &settings)?;
    let ll = if a.skip_log_likelihood {
        None
    } else {
        Some(model.log_likelihood(&data, &settings)?)
    };
    let out = serde_json::json!({ "rows": data.len(), "mse": mse, "log_likelihood": ll });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<()> {
    let mut spec: ExperimentSpec = read_json(&a.spec)?;
    if let Some(s) = a.seed {
        spec.seeds = vec![s];
    }
    let report = run_sweep(&spec, &a.out)?;
    for r in &report.records {
        eprintln!(
            "trial {:>3}  width {:>4}  batch {:>3}  seed {:>3}  mse {:.6}",
            r.trial, r.width, r.batch_size, r.seed, r.mse
        );
    }
    println!("{}", serde_json::to_string_pretty(report.best_record())?);
    Ok(())
}

fn export_density(a: ExportArgs) -> Result<()> {
    let model = TrainedModel::load(&a.model)?;
    let data = windows_from(&a.data, model.window(), a.from_sample)?;
    let paths = export_density_sequence(&model, &data, &a.inference.settings()?, &a.out)?;
    eprintln!(
        "wrote {} and {}",
        paths.density_csv.display(),
        paths.predictions_json.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Sweep(a) => sweep(a),
        Command::ExportDensity(a) => export_density(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
