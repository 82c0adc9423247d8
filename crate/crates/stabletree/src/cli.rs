//! `stabletree` command-line interface.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use stabletree_core::grower::{GrowConfig, Grower, Stopping};
use stabletree_core::loss::{self, InstabilityKind};
use stabletree_core::pareto::pareto_front;
use stabletree_core::{seed, CirConfig, Dataset, StableLossConfig};

use crate::data::{self, align_columns, encode_features, load_csv, preprocess, select_columns, Preprocessing, Registry, SchemaHints};
use crate::error::{Error, Result};
use crate::experiment::{
    self, full_grid, selected_with_baseline, IterativeConfig, MainConfig, ModelSettings, Report, VariedNConfig,
};
use crate::model_io;

#[derive(Debug, Parser)]
#[command(name = "stabletree", version, about = "Regression trees with stability-regularized updates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a tree on a CSV file.
    Fit(FitArgs),
    /// Update a fitted tree on new data under the stable loss.
    Update(UpdateArgs),
    /// Predict every row of a CSV file.
    Predict(PredictArgs),
    /// Main k-fold protocol over the full (alpha, beta) grid.
    Grid(BenchArgs),
    /// Main k-fold protocol over selected configurations.
    BenchMain(BenchArgs),
    /// Varying training-set size with a fixed test set.
    BenchN(BenchNArgs),
    /// Repeated updates as data arrives fold by fold.
    BenchIter(BenchArgs),
    /// Flag the Pareto-efficient rows of a report CSV.
    Pareto(ParetoArgs),
    /// List registered datasets.
    Datasets(DatasetsArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GrowArgs {
    /// Maximum tree depth (unlimited by default).
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// Minimum training rows per leaf.
    #[arg(long, default_value_t = 2)]
    pub min_leaf: usize,
    /// Disable adaptive stopping; split while the loss decreases.
    #[arg(long)]
    pub no_adaptive: bool,
    /// Keep a split iff its loss reduction exceeds this value (replaces
    /// adaptive stopping).
    #[arg(long, conflicts_with = "no_adaptive")]
    pub split_threshold: Option<f64>,
    /// Simulated paths for the split-selection adjustment.
    #[arg(long, default_value_t = 1000)]
    pub cir_paths: usize,
    /// Grid points per simulated path.
    #[arg(long, default_value_t = 100)]
    pub cir_grid: usize,
}

impl GrowArgs {
    fn config(&self, seed: u64) -> GrowConfig {
        let stopping = match (self.split_threshold, self.no_adaptive) {
            (Some(t), _) => Stopping::Threshold(t),
            (None, true) => Stopping::Off,
            (None, false) => Stopping::Adaptive,
        };
        GrowConfig {
            stopping,
            max_depth: self.max_depth,
            min_samples_leaf: self.min_leaf,
            cir: CirConfig {
                n_paths: self.cir_paths,
                grid_size: self.cir_grid,
                ..CirConfig::default()
            },
            seed,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Training CSV with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Response column.
    #[arg(long)]
    pub target: String,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub grow: GrowArgs,
}

#[derive(Debug, Clone, Args)]
pub struct UpdateArgs {
    /// Model file of the current tree.
    #[arg(long)]
    pub model: PathBuf,
    /// All data available now, as CSV.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub target: String,
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
    #[arg(long, default_value_t = loss::DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub grow: GrowArgs,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// CSV holding (at least) the model's feature columns.
    #[arg(long)]
    pub data: PathBuf,
    /// Output CSV (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Registered dataset name.
    #[arg(long)]
    pub dataset: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Use the full repeat counts (10 for k-fold, 50 otherwise).
    #[arg(long)]
    pub full: bool,
    /// Override the number of repeats.
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Directory for the report CSV and manifest.
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Configurations as `alpha:beta` pairs separated by commas.
    #[arg(long)]
    pub configs: Option<String>,
    /// Run on a seeded random subset of this many rows.
    #[arg(long)]
    pub subsample: Option<usize>,
    #[arg(long, default_value_t = loss::DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[command(flatten)]
    pub grow: GrowArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BenchNArgs {
    #[command(flatten)]
    pub bench: BenchArgs,
    /// Training sizes, comma separated.
    #[arg(long, default_value = "1000,5000,10000,15000")]
    pub n_values: String,
    /// Rows held out for testing.
    #[arg(long, default_value_t = 5000)]
    pub test_size: usize,
}

#[derive(Debug, Clone, Args)]
pub struct ParetoArgs {
    /// CSV with `loss` and `instability` columns.
    #[arg(long)]
    pub input: PathBuf,
    /// Write the input with a `pareto` column here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DatasetsArgs {
    /// Load every dataset and verify its shape.
    #[arg(long)]
    pub check: bool,
}

/// Parses `a:b,a:b,...`.
pub fn parse_configs(s: &str) -> Result<Vec<(f64, f64)>> {
    s.split(',')
        .map(|p| {
            let (a, b) = p
                .trim()
                .split_once(':')
                .ok_or_else(|| Error::Usage(format!("config '{p}' is not alpha:beta")))?;
            let num = |v: &str| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Usage(format!("config '{p}' is not alpha:beta")))
            };
            Ok((num(a)?, num(b)?))
        })
        .collect()
}

fn parse_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| Error::Usage(format!("'{v}' is not a row count")))
        })
        .collect()
}

fn load_training(path: &Path, target: &str) -> Result<Dataset> {
    let raw = load_csv(path, Some(target), &SchemaHints::default())?;
    preprocess(&raw, target, &Preprocessing::default())
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn cmd_fit(a: &FitArgs, out: &mut String) -> Result<()> {
    let d = load_training(&a.data, &a.target)?;
    let grower = Grower::new(a.grow.config(a.seed), d.n_features())?;
    let model = grower.fit(&d)?;
    model_io::save(&model, &a.out)?;
    let mse = loss::mean_squared_error(&model.predict_matrix(&d.x)?, &d.y)?;
    writeln!(out, "leaves: {}", model.n_leaves()).unwrap();
    writeln!(out, "train_mse: {mse}").unwrap();
    Ok(())
}

fn cmd_update(a: &UpdateArgs, out: &mut String) -> Result<()> {
    let f0 = model_io::load(&a.model)?;
    let d = load_training(&a.data, &a.target)?;
    let x = align_columns(&d.x, &d.feature_names, f0.feature_names())?;
    let d = Dataset::new(x, d.y, f0.feature_names().to_vec(), d.target_name)?;
    let cfg = StableLossConfig::new(a.alpha, a.beta)?.with_epsilon(a.epsilon)?;
    let grower = Grower::new(a.grow.config(a.seed), d.n_features())?;
    let f1 = grower.update(&f0, &d, &cfg)?;
    model_io::save(&f1, &a.out)?;
    let p0 = f0.predict_matrix(&d.x)?;
    let p1 = f1.predict_matrix(&d.x)?;
    writeln!(out, "leaves: {}", f1.n_leaves()).unwrap();
    writeln!(out, "loss: {}", loss::mean_squared_error(&p1, &d.y)?).unwrap();
    writeln!(out, "instability: {}", loss::instability(&p0, &p1, InstabilityKind::SquaredError)?).unwrap();
    Ok(())
}

fn cmd_predict(a: &PredictArgs, out: &mut String) -> Result<()> {
    let model = model_io::load(&a.model)?;
    let raw = load_csv(&a.data, None, &SchemaHints::default())?;
    let f = encode_features(&raw, None, &Preprocessing::default())?;
    if f.rows.len() != raw.n_rows() {
        return Err(Error::Data(format!(
            "{}: {} rows have missing values",
            a.data.display(),
            raw.n_rows() - f.rows.len()
        )));
    }
    let x = select_columns(&f.x, &f.names, model.feature_names())?;
    let mut csv = String::from("prediction\n");
    for p in model.predict_matrix(&x)? {
        writeln!(csv, "{p}").unwrap();
    }
    match &a.out {
        Some(path) => write_file(path, &csv),
        None => {
            out.push_str(&csv);
            Ok(())
        }
    }
}

struct Prepared {
    data: Dataset,
    configs: Option<Vec<(f64, f64)>>,
    model: ModelSettings,
}

fn prepare(b: &BenchArgs) -> Result<Prepared> {
    let registry = Registry::open_default()?;
    let mut data = registry.load(&b.dataset)?;
    if let Some(k) = b.subsample {
        if k == 0 || k > data.n_rows() {
            return Err(Error::Usage(format!(
                "--subsample must be in 1..={}, got {k}",
                data.n_rows()
            )));
        }
        let all: Vec<usize> = (0..data.n_rows()).collect();
        data = data.select(&data::sample(&all, k, seed::derive(b.seed, &[0x5b5a])));
    }
    let configs = b.configs.as_deref().map(parse_configs).transpose()?;
    if b.repeats == Some(0) {
        return Err(Error::Usage("--repeats must be >= 1".into()));
    }
    Ok(Prepared {
        data,
        configs,
        model: ModelSettings {
            grow: b.grow.config(0),
            epsilon: b.epsilon,
        },
    })
}

fn finish(b: &BenchArgs, report: &Report, stem: &str, out: &mut String) -> Result<()> {
    let csv = b.out_dir.join(format!("{}_{stem}.csv", b.dataset));
    let manifest = b.out_dir.join(format!("{}_{stem}.json", b.dataset));
    write_file(&csv, &report.to_csv())?;
    write_file(&manifest, &report.manifest_json())?;
    writeln!(out, "wrote {} ({} rows) and {}", csv.display(), report.rows.len(), manifest.display()).unwrap();
    for r in report.rows.iter().filter(|r| r.pareto) {
        let mut key = String::new();
        if let Some(n) = r.n {
            write!(key, " n={n}").unwrap();
        }
        if let Some(t) = r.iteration {
            write!(key, " iteration={t}").unwrap();
        }
        writeln!(
            out,
            "pareto:{key} alpha={} beta={} loss_rel={:.4} instability_rel={:.4}",
            r.alpha, r.beta, r.loss_rel, r.instability_rel
        )
        .unwrap();
    }
    Ok(())
}

fn cmd_main(b: &BenchArgs, all_configs: bool, out: &mut String) -> Result<()> {
    let p = prepare(b)?;
    let mut cfg = if b.full { MainConfig::full(b.seed) } else { MainConfig::desk(b.seed) };
    cfg.configs = p.configs.unwrap_or_else(|| if all_configs { full_grid() } else { selected_with_baseline() });
    if let Some(r) = b.repeats {
        cfg.repeats = r;
    }
    cfg.model = p.model;
    let report = experiment::with_jobs(b.jobs, || experiment::run_main(&b.dataset, &p.data, &cfg))??;
    finish(b, &report, if all_configs { "grid" } else { "main" }, out)
}

fn cmd_bench_n(a: &BenchNArgs, out: &mut String) -> Result<()> {
    let b = &a.bench;
    let p = prepare(b)?;
    let mut cfg = if b.full { VariedNConfig::full(b.seed) } else { VariedNConfig::desk(b.seed) };
    cfg.n_values = parse_list(&a.n_values)?;
    cfg.test_size = a.test_size;
    if let Some(c) = p.configs {
        cfg.configs = c;
    }
    if let Some(r) = b.repeats {
        cfg.repetitions = r;
    }
    cfg.model = p.model;
    let report = experiment::with_jobs(b.jobs, || experiment::run_varied_n(&b.dataset, &p.data, &cfg))??;
    finish(b, &report, "varied_n", out)
}

fn cmd_bench_iter(b: &BenchArgs, out: &mut String) -> Result<()> {
    let p = prepare(b)?;
    let mut cfg = if b.full { IterativeConfig::full(b.seed) } else { IterativeConfig::desk(b.seed) };
    if let Some(c) = p.configs {
        cfg.configs = c;
    }
    if let Some(r) = b.repeats {
        cfg.repetitions = r;
    }
    cfg.model = p.model;
    let report = experiment::with_jobs(b.jobs, || experiment::run_iterative(&b.dataset, &p.data, &cfg))??;
    finish(b, &report, "iterative", out)
}

fn cmd_pareto(a: &ParetoArgs, out: &mut String) -> Result<()> {
    let src = a.input.display().to_string();
    let file = std::fs::File::open(&a.input).map_err(|e| Error::io(&a.input, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let csv_err = |e: csv::Error| Error::Csv {
        path: src.clone(),
        line: e.position().map_or(1, |p| p.line()),
        message: e.to_string(),
    };
    let header = rdr.headers().map_err(csv_err)?.clone();
    let col = |name: &str| header.iter().position(|h| h.trim() == name);
    let (Some(li), Some(ii)) = (col("loss"), col("instability")) else {
        return Err(Error::Data(format!("{src}: needs 'loss' and 'instability' columns")));
    };
    let group_cols: Vec<usize> = ["n", "iteration"].iter().filter_map(|c| col(c)).collect();
    let records: Vec<csv::StringRecord> = rdr.records().collect::<std::result::Result<_, _>>().map_err(csv_err)?;
    let mut points = Vec::with_capacity(records.len());
    for (k, r) in records.iter().enumerate() {
        let num = |j: usize| {
            r.get(j)
                .and_then(|v| v.trim().parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Csv {
                    path: src.clone(),
                    line: k as u64 + 2,
                    message: format!("'{}' is not a finite number", r.get(j).unwrap_or("")),
                })
        };
        points.push((num(li)?, num(ii)?));
    }

    // Rows are compared only within the same (n, iteration) group.
    let key = |r: &csv::StringRecord| -> Vec<String> {
        group_cols.iter().map(|&j| r.get(j).unwrap_or("").to_string()).collect()
    };
    let mut flags = vec![false; records.len()];
    let mut keys: Vec<Vec<String>> = records.iter().map(key).collect();
    keys.dedup();
    let mut seen = std::collections::HashSet::new();
    for k in keys.into_iter().filter(|k| seen.insert(k.clone())) {
        let idx: Vec<usize> = (0..records.len()).filter(|&i| key(&records[i]) == k).collect();
        let pts: Vec<(f64, f64)> = idx.iter().map(|&i| points[i]).collect();
        for (i, f) in idx.into_iter().zip(pareto_front(&pts)?) {
            flags[i] = f;
        }
    }

    let n_flagged = flags.iter().filter(|&&f| f).count();
    writeln!(out, "{n_flagged} of {} rows are Pareto-efficient", records.len()).unwrap();
    for (i, r) in records.iter().enumerate().filter(|(i, _)| flags[*i]) {
        writeln!(out, "row {}: {}", i + 1, r.iter().collect::<Vec<_>>().join(",")).unwrap();
    }
    if let Some(path) = &a.out {
        let pcol = col("pareto");
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut h: Vec<&str> = header.iter().collect();
        if pcol.is_none() {
            h.push("pareto");
        }
        w.write_record(&h).map_err(csv_err)?;
        for (r, f) in records.iter().zip(&flags) {
            let mut v: Vec<String> = r.iter().map(str::to_string).collect();
            match pcol {
                Some(j) => v[j] = f.to_string(),
                None => v.push(f.to_string()),
            }
            w.write_record(&v).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
        write_file(path, &String::from_utf8(bytes).expect("csv output is utf-8"))?;
    }
    Ok(())
}

fn cmd_datasets(a: &DatasetsArgs, out: &mut String) -> Result<()> {
    let registry = Registry::open_default()?;
    let mut failed = Vec::new();
    for e in registry.entries() {
        let present = registry.path(e).is_file();
        write!(
            out,
            "{:<12} {:>6} x {:<3} target={:<12} {}",
            e.name,
            e.rows,
            e.features,
            e.target,
            if present { "present" } else { "missing" }
        )
        .unwrap();
        if a.check {
            match registry.load(&e.name) {
                Ok(_) => out.push_str(" ok"),
                Err(err) => {
                    write!(out, " FAILED ({err})").unwrap();
                    failed.push(e.name.clone());
                }
            }
        }
        out.push('\n');
    }
    if !failed.is_empty() {
        return Err(Error::Registry(format!("shape check failed for {}", failed.join(", "))));
    }
    Ok(())
}

/// Runs a parsed command; human-readable output is appended to `out`.
pub fn run(cli: &Cli, out: &mut String) -> Result<()> {
    match &cli.command {
        Command::Fit(a) => cmd_fit(a, out),
        Command::Update(a) => cmd_update(a, out),
        Command::Predict(a) => cmd_predict(a, out),
        Command::Grid(b) => cmd_main(b, true, out),
        Command::BenchMain(b) => cmd_main(b, false, out),
        Command::BenchN(a) => cmd_bench_n(a, out),
        Command::BenchIter(b) => cmd_bench_iter(b, out),
        Command::Pareto(a) => cmd_pareto(a, out),
        Command::Datasets(a) => cmd_datasets(a, out),
    }
}

/// Entry point of the binary; returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand { 2 } else { 0 };
            }
            let msg = e.to_string();
            // Clap spreads its message over several lines; keep everything
            // before the usage block on one line.
            let line = msg
                .lines()
                .take_while(|l| !l.starts_with("Usage:"))
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .collect::<Vec<_>>()
                .join(" ");
            let line = line.trim_start_matches("error: ");
            eprintln!("error: usage: {line}");
            return 2;
        }
    };
    let mut out = String::new();
    let res = run(&cli, &mut out);
    let _ = std::io::stdout().write_all(out.as_bytes());
    match res {
        Ok(()) => 0,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: {}: {msg}", e.kind());
            1
        }
    }
}
