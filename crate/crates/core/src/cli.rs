//! Command-line surface: `gen`, `analyze`, `embed`, `train`, `forecast`, `evaluate`.
//!
//! Settings resolve as defaults, then the `--config` JSON file, then flags.
//! Every run writes the resolved settings to `resolved_config.json` in the
//! output directory. If a command fails, files it already wrote are removed.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::analysis::{mi_profile, ProfileOptions};
use crate::embedding::{embed, plan_split};
use crate::error::{Error, Result};
use crate::forecast::{predict_horizon, rmse, rolling_evaluate, EvalOptions};
use crate::forest::{load_model, train_forest, Bootstrap, ForestConfig, RandomForestModel};
use crate::synth::{SynthKind, SynthSpec};
use crate::timeseries::{parse_csv, IngestConfig, TimestampFormat, WindSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum BootstrapMode {
    WithReplacement,
    Subsample,
    Off,
}

/// Every tunable of a run; field names double as config-file keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: Option<String>,
    pub input: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub output: Option<PathBuf>,
    pub model: Option<PathBuf>,

    pub timestamp_format: TimestampFormat,
    pub interval_s: i64,
    pub max_gap: usize,

    pub m: usize,
    pub auto_m: bool,
    pub bins: usize,
    pub max_delay: usize,
    pub threshold_fraction: f64,
    pub noise_floor_factor: f64,
    pub first_minimum: bool,
    pub emit_matrix: bool,

    pub n_trees: usize,
    pub mtry: Option<usize>,
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
    pub bootstrap: BootstrapMode,
    pub subsample_fraction: f64,
    pub seed: u64,
    pub threads: Option<usize>,

    pub n_train: usize,
    pub n_validation: usize,
    pub first_test_index: Option<usize>,
    pub stride: usize,
    pub block_len: usize,
    pub horizon_steps: usize,
    pub origin: Option<usize>,

    pub synth: SynthSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        let ingest = IngestConfig::default();
        let profile = ProfileOptions::default();
        let forest = ForestConfig::default();
        Self {
            subcommand: None,
            input: None,
            output_dir: PathBuf::from("."),
            output: None,
            model: None,
            timestamp_format: ingest.timestamp_format,
            interval_s: ingest.interval_s,
            max_gap: ingest.max_gap,
            m: crate::embedding::DEFAULT_EMBEDDING,
            auto_m: false,
            bins: profile.bins,
            max_delay: profile.max_delay,
            threshold_fraction: profile.threshold_fraction,
            noise_floor_factor: profile.noise_floor_factor,
            first_minimum: profile.first_minimum,
            emit_matrix: false,
            n_trees: forest.n_trees,
            mtry: forest.mtry,
            min_leaf: forest.min_leaf,
            max_depth: forest.max_depth,
            bootstrap: BootstrapMode::WithReplacement,
            subsample_fraction: 0.667,
            seed: forest.seed,
            threads: None,
            n_train: crate::embedding::TWO_WEEKS,
            n_validation: crate::embedding::TWO_WEEKS,
            first_test_index: None,
            stride: crate::embedding::TWO_WEEKS,
            block_len: crate::embedding::TWO_WEEKS,
            horizon_steps: 6,
            origin: None,
            synth: SynthSpec::default(),
        }
    }
}

impl RunConfig {
    pub fn ingest(&self) -> IngestConfig {
        IngestConfig {
            timestamp_format: self.timestamp_format,
            interval_s: self.interval_s,
            max_gap: self.max_gap,
            ..IngestConfig::default()
        }
    }

    pub fn profile(&self) -> ProfileOptions {
        ProfileOptions {
            max_delay: self.max_delay,
            bins: self.bins,
            threshold_fraction: self.threshold_fraction,
            noise_floor_factor: self.noise_floor_factor,
            first_minimum: self.first_minimum,
        }
    }

    pub fn forest(&self) -> ForestConfig {
        ForestConfig {
            n_trees: self.n_trees,
            mtry: self.mtry,
            min_leaf: self.min_leaf,
            max_depth: self.max_depth,
            bootstrap: match self.bootstrap {
                BootstrapMode::WithReplacement => Bootstrap::WithReplacement,
                BootstrapMode::Subsample => Bootstrap::Subsample {
                    fraction: self.subsample_fraction,
                },
                BootstrapMode::Off => Bootstrap::Off,
            },
            seed: self.seed,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::invalid(format!("config {}: {e}", path.display())))
    }
}

#[derive(Debug, Parser)]
#[command(name = "windrf", version, about = "Delay-embedding random forest forecasting for wind speed series")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Write a synthetic series CSV
    Gen,
    /// Autocorrelation and mutual-information lag profile
    Analyze,
    /// Report embedding dimensions, optionally dumping the matrix
    Embed,
    /// Train a random forest on the leading embedding rows
    Train,
    /// Iterated forecast from a single origin
    Forecast,
    /// Rolling block RMSE evaluation over the test span
    Evaluate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Gen => "gen",
            Command::Analyze => "analyze",
            Command::Embed => "embed",
            Command::Train => "train",
            Command::Forecast => "forecast",
            Command::Evaluate => "evaluate",
        }
    }
}

#[derive(Debug, Default, Args)]
pub struct Flags {
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[arg(long, global = true, value_parser = parse_timestamp_format)]
    pub timestamp_format: Option<TimestampFormat>,
    #[arg(long, global = true)]
    pub interval_s: Option<i64>,
    #[arg(long, global = true)]
    pub max_gap: Option<usize>,

    #[arg(long, global = true)]
    pub m: Option<usize>,
    #[arg(long, global = true)]
    pub auto_m: bool,
    #[arg(long, global = true)]
    pub bins: Option<usize>,
    #[arg(long, global = true)]
    pub max_delay: Option<usize>,
    #[arg(long, global = true)]
    pub threshold_fraction: Option<f64>,
    #[arg(long, global = true)]
    pub noise_floor_factor: Option<f64>,
    #[arg(long, global = true)]
    pub first_minimum: bool,
    #[arg(long, global = true)]
    pub emit_matrix: bool,

    #[arg(long, global = true)]
    pub n_trees: Option<usize>,
    #[arg(long, global = true)]
    pub mtry: Option<usize>,
    #[arg(long, global = true)]
    pub min_leaf: Option<usize>,
    #[arg(long, global = true)]
    pub max_depth: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub bootstrap: Option<BootstrapMode>,
    #[arg(long, global = true)]
    pub subsample_fraction: Option<f64>,

    #[arg(long, global = true)]
    pub n_train: Option<usize>,
    #[arg(long, global = true)]
    pub n_validation: Option<usize>,
    #[arg(long, global = true)]
    pub first_test_index: Option<usize>,
    #[arg(long, global = true)]
    pub stride: Option<usize>,
    #[arg(long, global = true)]
    pub block_len: Option<usize>,
    #[arg(long, global = true)]
    pub horizon_steps: Option<usize>,
    #[arg(long, global = true)]
    pub origin: Option<usize>,

    #[arg(long, global = true, value_parser = parse_kind)]
    pub kind: Option<SynthKind>,
    #[arg(long, global = true)]
    pub length: Option<usize>,
    #[arg(long, global = true)]
    pub phi1: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub phi2: Option<f64>,
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    #[arg(long, global = true)]
    pub level: Option<f64>,
    #[arg(long, global = true)]
    pub amplitude: Option<f64>,
    #[arg(long, global = true)]
    pub period: Option<usize>,
    #[arg(long, global = true)]
    pub gen_seed: Option<u64>,
}

fn parse_timestamp_format(s: &str) -> std::result::Result<TimestampFormat, String> {
    match s {
        "epoch" => Ok(TimestampFormat::Epoch),
        "iso8601" | "iso" => Ok(TimestampFormat::Iso8601),
        other => Err(format!("unknown timestamp format `{other}` (epoch | iso8601)")),
    }
}

fn parse_kind(s: &str) -> std::result::Result<SynthKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Defaults, overlaid by the config file, overlaid by flags.
pub fn resolve(command: Command, flags: &Flags) -> Result<RunConfig> {
    let mut c = match &flags.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    c.subcommand = Some(command.name().to_string());

    macro_rules! set {
        ($($field:ident),*) => { $( if let Some(v) = flags.$field.clone() { c.$field = v; } )* };
    }
    macro_rules! set_opt {
        ($($field:ident),*) => { $( if let Some(v) = flags.$field.clone() { c.$field = Some(v); } )* };
    }
    set!(output_dir, timestamp_format, interval_s, max_gap, m, bins, max_delay, threshold_fraction,
        noise_floor_factor, n_trees, min_leaf, bootstrap, subsample_fraction, seed, n_train,
        n_validation, stride, block_len, horizon_steps);
    set_opt!(input, output, model, threads, mtry, max_depth, first_test_index, origin);
    c.auto_m |= flags.auto_m;
    c.first_minimum |= flags.first_minimum;
    c.emit_matrix |= flags.emit_matrix;

    let s = &mut c.synth;
    if let Some(v) = flags.kind {
        s.kind = v;
    }
    if let Some(v) = flags.length {
        s.length = v;
    }
    if let Some(v) = flags.phi1 {
        s.phi1 = v;
    }
    if let Some(v) = flags.phi2 {
        s.phi2 = v;
    }
    if let Some(v) = flags.sigma {
        s.sigma = v;
    }
    if let Some(v) = flags.level {
        s.level = v;
    }
    if let Some(v) = flags.amplitude {
        s.amplitude = v;
    }
    if let Some(v) = flags.period {
        s.period = v;
    }
    if command == Command::Gen {
        if let Some(v) = flags.seed {
            s.seed = v;
        }
    }
    if let Some(v) = flags.gen_seed {
        s.seed = v;
    }
    Ok(c)
}

/// Files written so far; removed again if the command fails.
#[derive(Default)]
struct Outputs {
    written: Vec<PathBuf>,
}

impl Outputs {
    fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        self.written.push(path.to_path_buf());
        fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    fn write_with(&mut self, path: &Path, f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf).map_err(|e| Error::io(path, e))?;
        self.write(path, &buf)
    }

    fn discard(&self) {
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
    }
}

fn pretty_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

fn read_series(c: &RunConfig) -> Result<WindSeries> {
    let path = c.input.as_ref().ok_or_else(|| Error::invalid("--input is required"))?;
    Ok(parse_csv(path, &c.ingest())?.0)
}

fn read_model(c: &RunConfig) -> Result<RandomForestModel> {
    let path = c
        .model
        .clone()
        .unwrap_or_else(|| c.output_dir.join("model.json"));
    load_model(path)
}

/// Runs one subcommand; returns the text destined for standard output.
pub fn run(command: Command, config: &RunConfig) -> Result<String> {
    let mut outputs = Outputs::default();
    let result = match config.threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::invalid(e.to_string()))?;
            pool.install(|| dispatch(command, config, &mut outputs))
        }
        None => dispatch(command, config, &mut outputs),
    };
    if result.is_err() {
        outputs.discard();
    }
    result
}

fn dispatch(command: Command, c: &RunConfig, out: &mut Outputs) -> Result<String> {
    out.write(&c.output_dir.join("resolved_config.json"), &pretty_json(c)?)?;
    match command {
        Command::Gen => cmd_gen(c, out),
        Command::Analyze => cmd_analyze(c, out),
        Command::Embed => cmd_embed(c, out),
        Command::Train => cmd_train(c, out),
        Command::Forecast => cmd_forecast(c, out),
        Command::Evaluate => cmd_evaluate(c, out),
    }
}

fn cmd_gen(c: &RunConfig, out: &mut Outputs) -> Result<String> {
    let series = c.synth.generate()?;
    let path = c.output.clone().unwrap_or_else(|| c.output_dir.join("series.csv"));
    out.write_with(&path, |buf| series.write_csv(buf))?;
    Ok(format!("wrote {} samples to {}\n", series.len(), path.display()))
}

fn cmd_analyze(c: &RunConfig, out: &mut Outputs) -> Result<String> {
    let series = read_series(c)?;
    let profile = mi_profile(series.values(), &c.profile())?;
    out.write_with(&c.output_dir.join("profile.csv"), |buf| profile.write_csv(buf))?;
    let summary = format!("selected_lag={}\nconverged={}\n", profile.selected_lag, profile.converged);
    out.write(&c.output_dir.join("analysis_summary.txt"), summary.as_bytes())?;
    Ok(summary)
}

#[derive(Serialize)]
struct EmbedSummary {
    m: usize,
    rows: usize,
    columns: usize,
    origin_index: usize,
}

fn cmd_embed(c: &RunConfig, out: &mut Outputs) -> Result<String> {
    let series = read_series(c)?;
    let data = embed(&series, c.m)?;
    if c.emit_matrix {
        out.write_with(&c.output_dir.join("embedding.csv"), |buf| data.write_csv(buf))?;
    }
    let summary = EmbedSummary {
        m: data.m(),
        rows: data.n_rows(),
        columns: data.m() + 1,
        origin_index: data.origin_index(),
    };
    Ok(String::from_utf8(pretty_json(&summary)?).expect("json is utf-8"))
}

#[derive(Debug, Serialize)]
pub struct TrainReport {
    pub m: usize,
    pub n_train: usize,
    pub n_validation: usize,
    pub test_start_index: usize,
    pub train_rmse: f64,
    pub validation_rmse: Option<f64>,
    pub oob_rmse: Option<f64>,
    pub mean_unique_in_bag_fraction: f64,
    pub model_path: PathBuf,
}

fn dataset_rmse(model: &RandomForestModel, data: &crate::embedding::EmbeddingDataset) -> Result<Option<f64>> {
    if data.is_empty() {
        return Ok(None);
    }
    let predicted: Vec<f64> = data.rows().map(|(x, _)| model.predict(x)).collect::<Result<_>>()?;
    rmse(data.targets(), &predicted).map(Some)
}

fn cmd_train(c: &RunConfig, out: &mut Outputs) -> Result<String> {
    let series = read_series(c)?;
    let m = if c.auto_m {
        let span = (c.max_delay + c.n_train + c.n_validation).min(series.len());
        mi_profile(&series.values()[..span], &c.profile())?.selected_lag
    } else {
        c.m
    };
    let plan = plan_split(&series, m, c.n_train, c.n_validation)?;
    let model = train_forest(&plan.train, &c.forest())?;
    let path = c
        .model
        .clone()
        .or_else(|| c.output.clone())
        .unwrap_or_else(|| c.output_dir.join("model.json"));
    out.write(&path, model.to_json()?.as_bytes())?;

    let report = TrainReport {
        m,
        n_train: plan.train.n_rows(),
        n_validation: plan.validation.n_rows(),
        test_start_index: plan.test_start_index,
        train_rmse: dataset_rmse(&model, &plan.train)?.unwrap_or(0.0),
        validation_rmse: dataset_rmse(&model, &plan.validation)?,
        oob_rmse: model.oob_rmse(),
        mean_unique_in_bag_fraction: model.mean_unique_in_bag_fraction(),
        model_path: path,
    };
    let json = pretty_json(&report)?;
    out.write(&c.output_dir.join("train_report.json"), &json)?;
    Ok(String::from_utf8(json).expect("json is utf-8"))
}

fn cmd_forecast(c: &RunConfig, out: &mut Outputs) -> Result<String> {
    let series = read_series(c)?;
    let model = read_model(c)?;
    let m = model.m();
    if c.m != m && c.m != RunConfig::default().m {
        return Err(Error::invalid(format!("--m {} does not match the model's m = {m}", c.m)));
    }
    let origin = c.origin.unwrap_or(series.len());
    if origin < m {
        return Err(Error::invalid(format!("origin {origin} needs {m} preceding samples")));
    }
    if origin > series.len() {
        return Err(Error::invalid(format!(
            "origin {origin} lies beyond the end of the series ({} samples)",
            series.len()
        )));
    }
    let path = predict_horizon(&model, &series.values()[origin - m..origin], c.horizon_steps)?;
    let mut csv = String::from("step,predicted_ms\n");
    for (k, v) in path.iter().enumerate() {
        csv.push_str(&format!("{},{}\n", k + 1, v));
    }
    let file = c.output.clone().unwrap_or_else(|| c.output_dir.join("forecast.csv"));
    out.write(&file, csv.as_bytes())?;
    Ok(csv)
}

fn cmd_evaluate(c: &RunConfig, out: &mut Outputs) -> Result<String> {
    let series = read_series(c)?;
    let model = read_model(c)?;
    let options = EvalOptions {
        first_test_index: c
            .first_test_index
            .unwrap_or(model.m() + c.n_train + c.n_validation),
        stride: c.stride,
        horizon_steps: c.horizon_steps,
        block_len: c.block_len,
    };
    let report = rolling_evaluate(&model, &series, &options)?;
    out.write_with(&c.output_dir.join("evaluation.csv"), |buf| report.write_csv(buf))?;
    out.write_with(&c.output_dir.join("evaluation_steps.csv"), |buf| report.write_step_csv(buf))?;
    let json = pretty_json(&report.summary())?;
    out.write(&c.output_dir.join("evaluation_summary.json"), &json)?;
    Ok(String::from_utf8(json).expect("json is utf-8"))
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = resolve(cli.command, &cli.flags).and_then(|c| run(cli.command, &c));
    match result {
        Ok(stdout) => {
            print!("{stdout}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
