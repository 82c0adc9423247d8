//! Experiment protocols, scoring and reports.
//!
//! * main: repeated k-fold. Each fold is the test set once, the other folds
//!   are `D1` and a seeded half of `D1` is `D0`.
//! * varied-n: a fixed-size test set, then `D1` of each size `n` drawn from
//!   the remaining rows.
//! * iterative: seven folds; one test fold, one initial fold, and five
//!   updates that each add one fold.
//!
//! Work items are independent and seeded from `(seed, repeat, fold)`, so they
//! run in parallel and are reduced in a fixed order; results do not depend on
//! the thread count.

use rayon::prelude::*;
use serde_json::json;
use stabletree_core::grower::{GrowConfig, Grower, Stopping};
use stabletree_core::loss::{self, InstabilityKind};
use stabletree_core::pareto::pareto_front;
use stabletree_core::{seed, Dataset, StableLossConfig, TreeModel};

use crate::data::{half, k_folds, permutation, split_folds};
use crate::error::{Error, Result};

pub const BASELINE: (f64, f64) = (0.0, 0.0);

/// Configurations highlighted in the varied-n and iterative protocols.
pub const SELECTED_CONFIGS: [(f64, f64); 5] = [(0.2, 0.6), (0.4, 0.6), (1.0, 1.0), (1.2, 0.4), (2.0, 0.2)];

pub const AVERAGING: &str =
    "pointwise mean over the test rows of each run, then the mean over runs";

// Stream tags for seed derivation.
const TAG_HALF: u64 = 1;
const TAG_CIR: u64 = 2;
const TAG_PERM: u64 = 3;
const TAG_FOLDS: u64 = 4;

/// `{0, 0.2, ..., 2.0}^2`, alpha-major.
pub fn full_grid() -> Vec<(f64, f64)> {
    let v: Vec<f64> = (0..=10).map(|i| i as f64 / 5.0).collect();
    v.iter().flat_map(|&a| v.iter().map(move |&b| (a, b))).collect()
}

/// Baseline followed by [`SELECTED_CONFIGS`].
pub fn selected_with_baseline() -> Vec<(f64, f64)> {
    std::iter::once(BASELINE).chain(SELECTED_CONFIGS).collect()
}

/// Tree settings shared by every model of an experiment. `grow.seed` is
/// replaced per run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSettings {
    pub grow: GrowConfig,
    pub epsilon: f64,
}

impl Default for ModelSettings {
    fn default() -> Self {
        Self {
            grow: GrowConfig::default(),
            epsilon: loss::DEFAULT_EPSILON,
        }
    }
}

impl ModelSettings {
    fn loss(&self, (alpha, beta): (f64, f64)) -> Result<StableLossConfig> {
        Ok(StableLossConfig::new(alpha, beta)?.with_epsilon(self.epsilon)?)
    }

    fn grower(&self, seed: u64, n_features: usize) -> Result<Grower> {
        Ok(Grower::new(GrowConfig { seed, ..self.grow }, n_features)?)
    }

    fn manifest(&self) -> serde_json::Value {
        let g = &self.grow;
        let stopping = match g.stopping {
            Stopping::Adaptive => json!("adaptive"),
            Stopping::Threshold(t) => json!({ "threshold": t }),
            Stopping::Off => json!("off"),
        };
        json!({
            "stopping": stopping,
            "max_depth": g.max_depth,
            "min_samples_leaf": g.min_samples_leaf,
            "cir_paths": g.cir.n_paths,
            "cir_grid": g.cir.grid_size,
            "epsilon": self.epsilon,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MainConfig {
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
    pub configs: Vec<(f64, f64)>,
    pub model: ModelSettings,
}

impl MainConfig {
    /// Five folds, three repeats, full grid.
    pub fn desk(seed: u64) -> Self {
        Self {
            folds: 5,
            repeats: 3,
            seed,
            configs: full_grid(),
            model: ModelSettings::default(),
        }
    }

    /// Five folds, ten repeats, full grid.
    pub fn full(seed: u64) -> Self {
        Self {
            repeats: 10,
            ..Self::desk(seed)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariedNConfig {
    pub n_values: Vec<usize>,
    pub test_size: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub configs: Vec<(f64, f64)>,
    pub model: ModelSettings,
}

impl VariedNConfig {
    pub fn desk(seed: u64) -> Self {
        Self {
            n_values: vec![1000, 5000, 10000, 15000],
            test_size: 5000,
            repetitions: 10,
            seed,
            configs: selected_with_baseline(),
            model: ModelSettings::default(),
        }
    }

    pub fn full(seed: u64) -> Self {
        Self {
            repetitions: 50,
            ..Self::desk(seed)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterativeConfig {
    pub folds: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub configs: Vec<(f64, f64)>,
    pub model: ModelSettings,
}

impl IterativeConfig {
    pub fn desk(seed: u64) -> Self {
        Self {
            folds: 7,
            repetitions: 10,
            seed,
            configs: selected_with_baseline(),
            model: ModelSettings::default(),
        }
    }

    pub fn full(seed: u64) -> Self {
        Self {
            repetitions: 50,
            ..Self::desk(seed)
        }
    }

    /// One fold is the test set and one trains the initial model; every other
    /// fold drives one update.
    pub fn n_updates(&self) -> usize {
        self.folds.saturating_sub(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub loss: f64,
    pub instability: f64,
}

/// Test loss of `pred1` and its squared instability against `pred0`.
pub fn score(pred0: &[f64], pred1: &[f64], y: &[f64]) -> Result<Score> {
    Ok(Score {
        loss: loss::mean_squared_error(pred1, y)?,
        instability: loss::instability(pred0, pred1, InstabilityKind::SquaredError)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub alpha: f64,
    pub beta: f64,
    pub n: Option<usize>,
    pub iteration: Option<usize>,
    pub loss: f64,
    pub instability: f64,
    pub loss_rel: f64,
    pub instability_rel: f64,
    pub pareto: bool,
}

impl ReportRow {
    pub fn config(&self) -> (f64, f64) {
        (self.alpha, self.beta)
    }

    pub fn is_baseline(&self) -> bool {
        self.config() == BASELINE
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub dataset: String,
    pub experiment: &'static str,
    pub rows: Vec<ReportRow>,
    pub manifest: serde_json::Value,
}

pub const CSV_HEADER: &str = "dataset,alpha,beta,n,iteration,loss,instability,loss_rel,instability_rel,pareto";

fn opt(v: Option<usize>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl Report {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                self.dataset,
                r.alpha,
                r.beta,
                opt(r.n),
                opt(r.iteration),
                r.loss,
                r.instability,
                r.loss_rel,
                r.instability_rel,
                r.pareto
            ));
        }
        s
    }

    pub fn manifest_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        s.push('\n');
        s
    }

    /// Rows of the given group (`n` / `iteration`) key.
    pub fn group(&self, n: Option<usize>, iteration: Option<usize>) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(move |r| r.n == n && r.iteration == iteration)
    }
}

fn relative(v: f64, base: f64) -> f64 {
    if base == 0.0 {
        if v == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        v / base
    }
}

/// Builds one group of rows: `scores[i]` belongs to `configs[i]`, and the
/// baseline score is used for the relative columns.
fn group_rows(
    configs: &[(f64, f64)],
    scores: &[Score],
    baseline: Score,
    n: Option<usize>,
    iteration: Option<usize>,
) -> Result<Vec<ReportRow>> {
    let points: Vec<(f64, f64)> = scores.iter().map(|s| (s.loss, s.instability)).collect();
    let flags = pareto_front(&points)?;
    Ok(configs
        .iter()
        .zip(scores)
        .zip(flags)
        .map(|((&(alpha, beta), s), pareto)| ReportRow {
            alpha,
            beta,
            n,
            iteration,
            loss: s.loss,
            instability: s.instability,
            loss_rel: relative(s.loss, baseline.loss),
            instability_rel: relative(s.instability, baseline.instability),
            pareto,
        })
        .collect())
}

/// Reported configs plus the baseline when it is not among them.
fn evaluated_configs(configs: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    if configs.is_empty() {
        return Err(Error::Usage("no configurations to evaluate".into()));
    }
    let mut v = configs.to_vec();
    if !v.contains(&BASELINE) {
        v.push(BASELINE);
    }
    Ok(v)
}

fn mean_scores(runs: &[Vec<Score>], n_configs: usize) -> Vec<Score> {
    let k = runs.len() as f64;
    (0..n_configs)
        .map(|c| {
            let (l, i) = runs
                .iter()
                .fold((0.0, 0.0), |(l, i), r| (l + r[c].loss, i + r[c].instability));
            Score {
                loss: l / k,
                instability: i / k,
            }
        })
        .collect()
}

/// Fits `f0` on `d0` and scores the update to every config on `test`.
fn fit_update_score(
    data: &Dataset,
    d0: &[usize],
    d1: &[usize],
    test: &[usize],
    configs: &[(f64, f64)],
    model: &ModelSettings,
    cir_seed: u64,
) -> Result<Vec<Score>> {
    let grower = model.grower(cir_seed, data.n_features())?;
    let f0 = grower.fit(&data.select(d0))?;
    let d1 = data.select(d1);
    let test = data.select(test);
    let p0 = f0.predict_matrix(&test.x)?;
    configs
        .par_iter()
        .map(|&c| {
            let f1 = grower.update(&f0, &d1, &model.loss(c)?)?;
            score(&p0, &f1.predict_matrix(&test.x)?, &test.y)
        })
        .collect()
}

fn base_manifest(experiment: &str, dataset: &str, data: &Dataset, seed: u64, configs: &[(f64, f64)], model: &ModelSettings) -> serde_json::Value {
    json!({
        "tool": "stabletree",
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": experiment,
        "dataset": dataset,
        "rows": data.n_rows(),
        "features": data.n_features(),
        "seed": seed,
        "configs": configs,
        "model": model.manifest(),
        "averaging": AVERAGING,
        "instability": "squared_error",
    })
}

fn merge(mut a: serde_json::Value, b: serde_json::Value) -> serde_json::Value {
    if let (Some(a), serde_json::Value::Object(b)) = (a.as_object_mut(), b) {
        a.extend(b);
    }
    a
}

/// Repeated k-fold protocol. One row per configuration.
pub fn run_main(dataset: &str, data: &Dataset, cfg: &MainConfig) -> Result<Report> {
    if cfg.repeats == 0 {
        return Err(Error::Usage("repeats must be >= 1".into()));
    }
    let configs = evaluated_configs(&cfg.configs)?;
    let assignments = split_folds(data.n_rows(), cfg.folds, cfg.repeats, cfg.seed)?;
    let tasks: Vec<(usize, usize)> = (0..cfg.repeats)
        .flat_map(|r| (0..cfg.folds).map(move |f| (r, f)))
        .collect();
    let seeds = |r: usize, f: usize| {
        let path = [r as u64, f as u64];
        (
            seed::derive(cfg.seed, &[TAG_HALF, path[0], path[1]]),
            seed::derive(cfg.seed, &[TAG_CIR, path[0], path[1]]),
        )
    };
    let runs: Vec<Vec<Score>> = tasks
        .par_iter()
        .map(|&(r, f)| {
            let folds = &assignments[r];
            let mut d1: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|&(g, _)| g != f)
                .flat_map(|(_, v)| v.iter().copied())
                .collect();
            d1.sort_unstable();
            let (half_seed, cir_seed) = seeds(r, f);
            let d0 = half(&d1, half_seed);
            fit_update_score(data, &d0, &d1, &folds[f], &configs, &cfg.model, cir_seed)
        })
        .collect::<Result<_>>()?;

    let means = mean_scores(&runs, configs.len());
    let base = means[configs.iter().position(|&c| c == BASELINE).unwrap()];
    let n = cfg.configs.len();
    let rows = group_rows(&cfg.configs, &means[..n], base, None, None)?;
    let run_seeds: Vec<_> = tasks
        .iter()
        .map(|&(r, f)| {
            let (h, c) = seeds(r, f);
            json!({ "repeat": r, "fold": f, "half_seed": h, "cir_seed": c })
        })
        .collect();
    let manifest = merge(
        base_manifest("main", dataset, data, cfg.seed, &cfg.configs, &cfg.model),
        json!({ "folds": cfg.folds, "repeats": cfg.repeats, "fold_seeds": (0..cfg.repeats).map(|r| seed::derive(cfg.seed, &[r as u64])).collect::<Vec<_>>(), "runs": run_seeds }),
    );
    Ok(Report {
        dataset: dataset.to_string(),
        experiment: "main",
        rows,
        manifest,
    })
}

/// Fixed test set, growing `D1`. One row per `(n, config)`.
pub fn run_varied_n(dataset: &str, data: &Dataset, cfg: &VariedNConfig) -> Result<Report> {
    if cfg.repetitions == 0 {
        return Err(Error::Usage("repetitions must be >= 1".into()));
    }
    if cfg.n_values.is_empty() {
        return Err(Error::Usage("no training sizes given".into()));
    }
    for &n in &cfg.n_values {
        if n < 2 {
            return Err(Error::Usage(format!("training size must be >= 2, got {n}")));
        }
        if n + cfg.test_size > data.n_rows() {
            return Err(Error::Data(format!(
                "{dataset} has {} rows; n = {n} plus {} test rows does not fit",
                data.n_rows(),
                cfg.test_size
            )));
        }
    }
    let configs = evaluated_configs(&cfg.configs)?;
    let tasks: Vec<(usize, usize)> = (0..cfg.repetitions)
        .flat_map(|r| (0..cfg.n_values.len()).map(move |i| (r, i)))
        .collect();
    let perm_seed = |r: usize| seed::derive(cfg.seed, &[TAG_PERM, r as u64]);
    let seeds = |r: usize, i: usize| {
        (
            seed::derive(cfg.seed, &[TAG_HALF, r as u64, i as u64]),
            seed::derive(cfg.seed, &[TAG_CIR, r as u64, i as u64]),
        )
    };
    let runs: Vec<Vec<Score>> = tasks
        .par_iter()
        .map(|&(r, i)| {
            let perm = permutation(data.n_rows(), perm_seed(r));
            let (test, pool) = perm.split_at(cfg.test_size);
            let mut test = test.to_vec();
            test.sort_unstable();
            let mut d1 = pool[..cfg.n_values[i]].to_vec();
            d1.sort_unstable();
            let (half_seed, cir_seed) = seeds(r, i);
            let d0 = half(&d1, half_seed);
            fit_update_score(data, &d0, &d1, &test, &configs, &cfg.model, cir_seed)
        })
        .collect::<Result<_>>()?;

    let base_idx = configs.iter().position(|&c| c == BASELINE).unwrap();
    let mut rows = Vec::new();
    for (i, &n) in cfg.n_values.iter().enumerate() {
        let per_n: Vec<Vec<Score>> = runs
            .iter()
            .zip(&tasks)
            .filter(|(_, t)| t.1 == i)
            .map(|(s, _)| s.clone())
            .collect();
        let means = mean_scores(&per_n, configs.len());
        rows.extend(group_rows(&cfg.configs, &means[..cfg.configs.len()], means[base_idx], Some(n), None)?);
    }
    let run_seeds: Vec<_> = tasks
        .iter()
        .map(|&(r, i)| {
            let (h, c) = seeds(r, i);
            json!({ "repetition": r, "n": cfg.n_values[i], "perm_seed": perm_seed(r), "half_seed": h, "cir_seed": c })
        })
        .collect();
    let manifest = merge(
        base_manifest("varied_n", dataset, data, cfg.seed, &cfg.configs, &cfg.model),
        json!({ "n_values": cfg.n_values, "test_size": cfg.test_size, "repetitions": cfg.repetitions, "runs": run_seeds }),
    );
    Ok(Report {
        dataset: dataset.to_string(),
        experiment: "varied_n",
        rows,
        manifest,
    })
}

/// Successive updates of one model. One row per `(iteration, config)`;
/// instability compares consecutive models.
pub fn run_iterative(dataset: &str, data: &Dataset, cfg: &IterativeConfig) -> Result<Report> {
    if cfg.repetitions == 0 {
        return Err(Error::Usage("repetitions must be >= 1".into()));
    }
    if cfg.folds < 3 {
        return Err(Error::Usage(format!("iterative setup needs at least 3 folds, got {}", cfg.folds)));
    }
    let configs = evaluated_configs(&cfg.configs)?;
    let t_max = cfg.n_updates();
    let seeds = |r: usize| {
        (
            seed::derive(cfg.seed, &[TAG_FOLDS, r as u64]),
            seed::derive(cfg.seed, &[TAG_CIR, r as u64]),
        )
    };
    // runs[r][t][c]
    let runs: Vec<Vec<Vec<Score>>> = (0..cfg.repetitions)
        .into_par_iter()
        .map(|r| {
            let (fold_seed, cir_seed) = seeds(r);
            let folds = k_folds(data.n_rows(), cfg.folds, fold_seed)?;
            let grower = cfg.model.grower(cir_seed, data.n_features())?;
            let test = data.select(&folds[0]);
            let f0 = grower.fit(&data.select(&folds[1]))?;
            let p0 = f0.predict_matrix(&test.x)?;
            let per_config: Vec<Vec<Score>> = configs
                .par_iter()
                .map(|&c| {
                    let loss_cfg = cfg.model.loss(c)?;
                    let mut idx = folds[1].clone();
                    let mut prev: TreeModel = f0.clone();
                    let mut prev_pred = p0.clone();
                    let mut out = Vec::with_capacity(t_max);
                    for fold in &folds[2..] {
                        idx.extend_from_slice(fold);
                        idx.sort_unstable();
                        let next = grower.update(&prev, &data.select(&idx), &loss_cfg)?;
                        let pred = next.predict_matrix(&test.x)?;
                        out.push(score(&prev_pred, &pred, &test.y)?);
                        prev = next;
                        prev_pred = pred;
                    }
                    Ok(out)
                })
                .collect::<Result<_>>()?;
            Ok((0..t_max)
                .map(|t| per_config.iter().map(|s| s[t]).collect())
                .collect())
        })
        .collect::<Result<_>>()?;

    let base_idx = configs.iter().position(|&c| c == BASELINE).unwrap();
    let mut rows = Vec::new();
    for t in 0..t_max {
        let per_t: Vec<Vec<Score>> = runs.iter().map(|r| r[t].clone()).collect();
        let means = mean_scores(&per_t, configs.len());
        rows.extend(group_rows(&cfg.configs, &means[..cfg.configs.len()], means[base_idx], None, Some(t + 1))?);
    }
    let run_seeds: Vec<_> = (0..cfg.repetitions)
        .map(|r| {
            let (f, c) = seeds(r);
            json!({ "repetition": r, "fold_seed": f, "cir_seed": c })
        })
        .collect();
    let manifest = merge(
        base_manifest("iterative", dataset, data, cfg.seed, &cfg.configs, &cfg.model),
        json!({ "folds": cfg.folds, "updates": t_max, "repetitions": cfg.repetitions, "runs": run_seeds }),
    );
    Ok(Report {
        dataset: dataset.to_string(),
        experiment: "iterative",
        rows,
        manifest,
    })
}

/// Runs `f` on a pool of `jobs` threads (`0` = rayon's default).
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start {jobs} worker threads: {e}")))?;
    Ok(pool.install(f))
}
