//! End-to-end run execution: ingestion, injection, splitting, training,
//! prediction, evaluation, and artifact output.
//!
//! Output directory layout is fixed: `report.json`, `model.json`,
//! `delays.csv`, `config.resolved.toml`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::{InjectionConfig, Method, RunConfig};
use crate::dataset::{align, load_csv, split, write_csv, DelayVector, TaskKind, TimeSeriesDataset};
use crate::ensemble::{
    perturbed_train, point_predict, tde_point_train, tdb_train, tsmb_predict_rows, tsmb_train,
    PredictionDistribution, TsmbConfig, TsmbModel, MODEL_FORMAT_VERSION,
};
use crate::error::{Error, Result};
use crate::evaluation::{
    auc, coverage, coverage_for_classification, delay_distribution, r_squared, CoverageEntry,
    EvaluationReport, MetricKind, REPORT_FORMAT_VERSION,
};
use crate::injection::{inject_fixed, inject_stochastic, FixedDelaySpec, InjectionTruth,
    StochasticDelaySpec};
use crate::learners::FittedLearner;

/// Artifact written for methods that fit a single model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointModelArtifact {
    pub format_version: u32,
    pub method: Method,
    pub delays: DelayVector,
    pub learner: FittedLearner,
}

/// Inject delays per the config and write the misaligned dataset plus its
/// ground-truth sidecar. Returns `(dataset_path, sidecar_path)`.
pub fn cmd_inject(cfg: &RunConfig) -> Result<(PathBuf, PathBuf)> {
    cfg.validate()?;
    let injection = cfg.injection.as_ref().ok_or_else(|| {
        Error::Config("cmd inject requires an [injection] section in the config".into())
    })?;
    let dataset = load_csv(&cfg.dataset.path, &cfg.dataset.target_column, cfg.dataset.task)?;

    let (injected, truth) = match injection {
        InjectionConfig::Fixed { delays } => inject_fixed(
            &dataset,
            &FixedDelaySpec {
                delays: delays.clone(),
            },
        )?,
        InjectionConfig::Stochastic { candidates, seed } => inject_stochastic(
            &dataset,
            &StochasticDelaySpec {
                candidates: candidates.clone(),
                seed: *seed,
            },
        )?,
    };

    std::fs::create_dir_all(&cfg.out_dir)?;
    let data_path = cfg.out_dir.join("injected.csv");
    write_csv(&injected, &data_path)?;
    let sidecar_path = sidecar_for(&data_path);
    write_sidecar(&truth, &sidecar_path)?;
    log::info!(
        "injected dataset written to {} (truth sidecar {})",
        data_path.display(),
        sidecar_path.display()
    );
    Ok((data_path, sidecar_path))
}

fn sidecar_for(dataset_path: &Path) -> PathBuf {
    let mut s = dataset_path.to_path_buf().into_os_string();
    s.push(".truth.toml");
    PathBuf::from(s)
}

pub fn write_sidecar(truth: &InjectionTruth, path: &Path) -> Result<()> {
    let text = toml::to_string_pretty(truth).map_err(|e| Error::Serialization(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_sidecar(path: &Path) -> Result<InjectionTruth> {
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::Serialization(format!("sidecar parse error: {e}")))
}

/// Execute the configured method end to end and write all artifacts.
pub fn cmd_run(cfg: &RunConfig) -> Result<EvaluationReport> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    pool.install(|| run_inner(cfg))
}

enum Trained {
    Ensemble(TsmbModel),
    Point(Box<FittedLearner>, DelayVector),
}

fn run_inner(cfg: &RunConfig) -> Result<EvaluationReport> {
    let started = Instant::now();
    let dataset = load_csv(&cfg.dataset.path, &cfg.dataset.target_column, cfg.dataset.task)?;
    let (train, _validation, test) = split(&dataset, &cfg.split.to_spec()?)?;
    let search = cfg.search.to_box(dataset.n_features())?;
    let tsmb_cfg = TsmbConfig {
        b: cfg.method.b,
        score: cfg.score.to_score(),
        learner: cfg.learner.to_spec(cfg.dataset.task, cfg.seed),
        bootstrap: crate::bootstrap::BlockBootstrapSpec {
            block_fraction: cfg.method.block_fraction,
            seed: cfg.seed,
        },
        search: search.clone(),
        seed: cfg.seed,
    };

    // Common evaluation window: the rows that survive alignment at the box
    // corner, so every method and member is scored on the same rows.
    let eval_rows = align(&test, &search.upper_corner())?.rows();
    if eval_rows < 2 {
        return Err(Error::Config(format!(
            "test partition leaves only {eval_rows} rows after worst-case alignment"
        )));
    }

    let truth = read_truth_if_present(cfg)?;

    let trained = match cfg.method.name {
        Method::Tsmb => Trained::Ensemble(tsmb_train(&train, &tsmb_cfg)?),
        Method::Perturbed => {
            Trained::Ensemble(perturbed_train(&train, &tsmb_cfg, cfg.method.sigma)?)
        }
        Method::Tdb => {
            let (learner, dv) = tdb_train(&train, &tsmb_cfg)?;
            Trained::Point(Box::new(learner), dv)
        }
        Method::TdePoint => {
            let (learner, dv) = tde_point_train(&train, &tsmb_cfg)?;
            Trained::Point(Box::new(learner), dv)
        }
        Method::NoAlignment => {
            let dv = DelayVector::zero(train.n_features());
            let learner = crate::ensemble::fit_at(&train, &tsmb_cfg.learner, &dv)?;
            Trained::Point(Box::new(learner), dv)
        }
        Method::RealDelay => {
            let truth = truth.as_ref().ok_or_else(|| {
                Error::Config(format!(
                    "method real-delay requires the ground-truth sidecar {}",
                    cfg.dataset.sidecar_path().display()
                ))
            })?;
            let dv = DelayVector::new(truth.representative_delays(), 1)?;
            let learner = crate::ensemble::fit_at(&train, &tsmb_cfg.learner, &dv)?;
            Trained::Point(Box::new(learner), dv)
        }
    };

    // Classic point-estimate run used for the delay-distribution marker and,
    // on classification tasks, as the reference for interval coverage.
    let tde_reference = match cfg.method.name {
        Method::Tsmb | Method::Perturbed | Method::Tdb => {
            Some(tde_point_train(&train, &tsmb_cfg)?)
        }
        _ => None,
    };

    let metric_kind = match cfg.dataset.task {
        TaskKind::Regression => MetricKind::R2,
        TaskKind::Classification => MetricKind::Auc,
    };

    let report = match trained {
        Trained::Ensemble(model) => {
            let alpha0 = cfg.method.alphas[0];
            let dist = tsmb_predict_rows(&model, &test, alpha0, Some(eval_rows))?;
            let rows = dist.rows();
            let actual = &test.target()[..rows];
            let metric_value = compute_metric(metric_kind, dist.mean(), actual)?;
            let per_member: Vec<f64> = dist
                .members()
                .iter()
                .map(|m| compute_metric(metric_kind, m, actual))
                .collect::<Result<_>>()?;

            let coverage_entries = coverage_entries(
                cfg,
                &dist,
                actual,
                tde_reference.as_ref().map(|(learner, dv)| (learner, dv)),
                &test,
                rows,
            )?;

            let summary = delay_distribution(
                &model.member_delays(),
                &search,
                dataset.feature_names(),
                tde_reference.as_ref().map(|(_, dv)| dv),
                truth.as_ref().map(|t| t.representative_delays()).as_deref(),
            )?;

            let report = EvaluationReport {
                format_version: REPORT_FORMAT_VERSION,
                method: cfg.method.name,
                metric: metric_kind,
                metric_value,
                evaluated_rows: rows,
                coverage: coverage_entries,
                per_member_metrics: Some(per_member),
                member_delays: model.member_delays(),
                delay_summary: Some(summary),
                config: cfg.clone(),
                runtime_seconds: Some(started.elapsed().as_secs_f64()),
            };
            write_outputs(cfg, &report, &ModelOutput::Ensemble(&model))?;
            report
        }
        Trained::Point(learner, dv) => {
            let preds = point_predict(&learner, &dv, &test, Some(eval_rows))?;
            let rows = preds.len();
            let actual = &test.target()[..rows];
            let metric_value = compute_metric(metric_kind, &preds, actual)?;
            let report = EvaluationReport {
                format_version: REPORT_FORMAT_VERSION,
                method: cfg.method.name,
                metric: metric_kind,
                metric_value,
                evaluated_rows: rows,
                coverage: Vec::new(),
                per_member_metrics: None,
                member_delays: vec![dv.clone()],
                delay_summary: None,
                config: cfg.clone(),
                runtime_seconds: Some(started.elapsed().as_secs_f64()),
            };
            let artifact = PointModelArtifact {
                format_version: MODEL_FORMAT_VERSION,
                method: cfg.method.name,
                delays: dv,
                learner: *learner,
            };
            write_outputs(cfg, &report, &ModelOutput::Point(&artifact))?;
            report
        }
    };

    log::info!(
        "{} finished in {:.2}s: {:?} = {:.4} on {} rows",
        cfg.method.name,
        report.runtime_seconds.unwrap_or_default(),
        report.metric,
        report.metric_value,
        report.evaluated_rows
    );
    Ok(report)
}

fn compute_metric(kind: MetricKind, pred: &[f64], actual: &[f64]) -> Result<f64> {
    match kind {
        MetricKind::R2 => r_squared(pred, actual),
        MetricKind::Auc => auc(pred, actual),
    }
}

fn coverage_entries(
    cfg: &RunConfig,
    dist: &PredictionDistribution,
    actual: &[f64],
    tde_reference: Option<(&FittedLearner, &DelayVector)>,
    test: &TimeSeriesDataset,
    rows: usize,
) -> Result<Vec<CoverageEntry>> {
    let mut entries = Vec::with_capacity(cfg.method.alphas.len());
    match cfg.dataset.task {
        TaskKind::Regression => {
            for &alpha in &cfg.method.alphas {
                let intervals = dist.interval_at(alpha)?;
                entries.push(CoverageEntry {
                    alpha,
                    coverage: coverage(&intervals, actual)?,
                });
            }
        }
        TaskKind::Classification => {
            // Binary outcomes cannot be covered by probability intervals;
            // coverage is measured against the classic point-estimate
            // predictions instead.
            let (learner, dv) = tde_reference.ok_or_else(|| {
                Error::Config("classification coverage needs the point-estimate reference".into())
            })?;
            let baseline = point_predict(learner, dv, test, Some(rows))?;
            for &alpha in &cfg.method.alphas {
                let c = if alpha == dist.alpha() {
                    coverage_for_classification(dist, &baseline)?
                } else {
                    coverage(&dist.interval_at(alpha)?, &baseline)?
                };
                entries.push(CoverageEntry { alpha, coverage: c });
            }
        }
    }
    Ok(entries)
}

enum ModelOutput<'a> {
    Ensemble(&'a TsmbModel),
    Point(&'a PointModelArtifact),
}

fn write_outputs(cfg: &RunConfig, report: &EvaluationReport, model: &ModelOutput) -> Result<()> {
    std::fs::create_dir_all(&cfg.out_dir)?;
    std::fs::write(cfg.out_dir.join("config.resolved.toml"), cfg.to_toml()?)?;
    std::fs::write(cfg.out_dir.join("report.json"), report.to_json()?)?;
    match model {
        ModelOutput::Ensemble(m) => m.save(cfg.out_dir.join("model.json"))?,
        ModelOutput::Point(artifact) => {
            let json = serde_json::to_string_pretty(artifact)
                .map_err(|e| Error::Serialization(e.to_string()))?;
            std::fs::write(cfg.out_dir.join("model.json"), json)?;
        }
    }
    write_delays_csv(cfg, report)?;
    Ok(())
}

/// One row per member: the realized delay vector and window, in ticks.
fn write_delays_csv(cfg: &RunConfig, report: &EvaluationReport) -> Result<()> {
    let mut writer = csv::Writer::from_path(cfg.out_dir.join("delays.csv"))?;
    let n = report
        .member_delays
        .first()
        .map_or(0, |dv| dv.delays.len());
    let mut header = vec!["member".to_owned()];
    header.extend((0..n).map(|i| format!("delay_{i}")));
    header.push("window".to_owned());
    writer.write_record(&header)?;
    for (b, dv) in report.member_delays.iter().enumerate() {
        let mut row = vec![b.to_string()];
        row.extend(dv.delays.iter().map(usize::to_string));
        row.push(dv.window.to_string());
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

fn read_truth_if_present(cfg: &RunConfig) -> Result<Option<InjectionTruth>> {
    let path = cfg.dataset.sidecar_path();
    if path.exists() {
        Ok(Some(read_sidecar(&path)?))
    } else {
        Ok(None)
    }
}

/// One run per entry of `b_list`, sharing the seed so member `b` is common
/// across runs; outputs land in `<out_dir>/b<B>/`.
pub fn cmd_sweep_b(cfg: &RunConfig, b_list: &[usize]) -> Result<Vec<EvaluationReport>> {
    if b_list.is_empty() {
        return Err(Error::Config("b-list must not be empty".into()));
    }
    if b_list.contains(&0) {
        return Err(Error::Config("b-list entries must be >= 1".into()));
    }
    let mut sorted = b_list.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Config("b-list entries must be distinct".into()));
    }

    let mut reports = Vec::with_capacity(b_list.len());
    for &b in b_list {
        let mut sub = cfg.clone();
        sub.method.b = b;
        sub.out_dir = cfg.out_dir.join(format!("b{b}"));
        reports.push(cmd_run(&sub)?);
    }

    std::fs::create_dir_all(&cfg.out_dir)?;
    let mut table = String::from("b\tmetric\tvalue\n");
    for (b, report) in b_list.iter().zip(&reports) {
        table.push_str(&format!(
            "{b}\t{:?}\t{:.6}\n",
            report.metric, report.metric_value
        ));
    }
    std::fs::write(cfg.out_dir.join("sweep_summary.txt"), table)?;
    Ok(reports)
}

/// Compact single-line JSON summary for stdout.
pub fn summary_json(report: &EvaluationReport) -> Result<String> {
    let value = serde_json::json!({
        "method": report.method.to_string(),
        "metric": report.metric,
        "metric_value": report.metric_value,
        "evaluated_rows": report.evaluated_rows,
        "coverage": report.coverage,
        "b": report.member_delays.len(),
    });
    serde_json::to_string(&value).map_err(|e| Error::Serialization(e.to_string()))
}
