//! The four subcommands: train, predict, evaluate, generate.

use std::path::Path;

use renewal_core::datagen::{generate, GeneratorSpec, ProcessSpec};
use renewal_core::features::TransactionLog;
use renewal_core::metrics::{auc_quantile_summary, mean_custom_loss, rmse, RulPrediction, ScoredLabel};
use renewal_core::model::{hit_probability, point_estimate, train, LossMode, ModelConfig};

use crate::checkpoint::{self, Loaded};
use crate::config::{GenerateConfig, RunConfig};
use crate::data::{
    final_tse, prepare_training, read_transactions, subject_arrivals, subject_features, CSV_HEADER,
};
use crate::error::CliError;

/// Fits a model on the input transactions and writes the checkpoint plus
/// a loss-history CSV (`iteration,loss`; the loss is measured before each
/// update).
pub fn cmd_train(cfg: &RunConfig, checkpoint_path: &Path, out: &Path) -> Result<(), CliError> {
    let log = read_transactions(&cfg.input)?;
    let prepared = prepare_training(&log, cfg.tau, cfg.window, cfg.stride)?;
    let model_cfg = ModelConfig {
        hidden: cfg.hidden_or_default(),
        processes: prepared.processes.len(),
        mode: cfg.mode_or_default(),
        k_max: cfg.k_max_or_default(),
        mu_bar: prepared.mu_bar.clone(),
        learning_rate: cfg.learning_rate,
        iterations: cfg.iterations,
        clip_threshold: cfg.clip,
        seed: cfg.seed,
    };
    let outcome = train(&prepared.dataset, &model_cfg)?;
    checkpoint::save(checkpoint_path, &outcome.model, &prepared.stats, &prepared.processes)?;

    let mut writer = csv::Writer::from_path(out)?;
    writer.write_record(["iteration", "loss"])?;
    for (i, loss) in outcome.loss_history.iter().enumerate() {
        writer.write_record([i.to_string(), loss.to_string()])?;
    }
    writer.flush()?;
    Ok(())
}

/// Explicit config values must agree with the checkpoint they are applied
/// to; silence defers to the checkpoint.
fn check_compatible(cfg: &RunConfig, loaded: &Loaded) -> Result<(), CliError> {
    let trained = &loaded.model.config;
    if let Some(mode) = cfg.mode {
        if mode != trained.mode {
            return Err(CliError::Shape(format!(
                "checkpoint was trained in {} mode, config asks for {}",
                trained.mode.name(),
                mode.name()
            )));
        }
    }
    if let Some(hidden) = cfg.hidden {
        if hidden != trained.hidden {
            return Err(CliError::Shape(format!(
                "checkpoint has hidden width {}, config asks for {hidden}",
                trained.hidden
            )));
        }
    }
    if let Some(k_max) = cfg.k_max {
        if k_max != trained.k_max {
            return Err(CliError::Shape(format!(
                "checkpoint has k_max {}, config asks for {k_max}",
                trained.k_max
            )));
        }
    }
    Ok(())
}

/// Per-subject, per-process forecasts at the end of the training window:
/// probability of an arrival within `gamma`, a point estimate of the
/// remaining time, and the elapsed time since the last arrival. In sqloss
/// mode the probability column carries the ranking score `gamma - pred`
/// instead (the network predicts times, not distributions).
pub fn cmd_predict(cfg: &RunConfig, checkpoint_path: &Path, out: &Path) -> Result<(), CliError> {
    let loaded = checkpoint::load(checkpoint_path)?;
    check_compatible(cfg, &loaded)?;
    let log = read_transactions(&cfg.input)?;
    let subjects = log.subject_ids();
    if subjects.is_empty() {
        return Err(CliError::Empty("no transactions in input".into()));
    }
    let steps = cfg.tau as usize;
    let gamma = cfg.gamma as f64;

    let mut writer = csv::Writer::from_path(out)?;
    writer.write_record(["subject_id", "process_id", "hit_probability", "point_estimate", "tse"])?;
    for subject in &subjects {
        let xs = subject_features(&log, subject, &loaded.processes, &loaded.stats, cfg.tau)?;
        let mut tses = Vec::with_capacity(loaded.processes.len());
        for process in &loaded.processes {
            tses.push(final_tse(&subject_arrivals(&log, subject, process, cfg.tau)?));
        }
        match loaded.model.config.mode {
            LossMode::SqLoss => {
                let points = loaded.model.final_step_points(&xs, steps)?;
                for (i, process) in loaded.processes.iter().enumerate() {
                    writer.write_record([
                        subject.clone(),
                        process.clone(),
                        (gamma - points[i]).to_string(),
                        points[i].to_string(),
                        tses[i].to_string(),
                    ])?;
                }
            }
            _ => {
                let params = loaded.model.final_step_params(&xs, steps)?;
                for (i, process) in loaded.processes.iter().enumerate() {
                    let tse = loaded.model.conditioning_tse(tses[i]);
                    let hit = hit_probability(&params[i], tse, gamma)?;
                    let point = point_estimate(&params[i], tse, cfg.statistic)?;
                    writer.write_record([
                        subject.clone(),
                        process.clone(),
                        hit.to_string(),
                        point.to_string(),
                        tses[i].to_string(),
                    ])?;
                }
            }
        }
    }
    writer.flush()?;
    Ok(())
}

fn first_arrival_after(log: &TransactionLog, subject: &str, process: &str, tau: u32) -> Option<u32> {
    log.records()
        .iter()
        .filter(|r| r.subject_id == subject && r.process_id == process && r.t > tau)
        .map(|r| r.t)
        .min()
}

/// Scores the holdout window `(tau, tau + gamma]`: per-process ROC-AUC on
/// "did an arrival land in the window", a quantile summary across the
/// defined AUCs, and, when any subject has an observed next arrival, RMSE
/// and the asymmetric early/late penalty over remaining-time predictions.
/// Features come strictly from steps at or before `tau`.
pub fn cmd_evaluate(cfg: &RunConfig, checkpoint_path: &Path, out: &Path) -> Result<(), CliError> {
    let loaded = checkpoint::load(checkpoint_path)?;
    check_compatible(cfg, &loaded)?;
    let log = read_transactions(&cfg.input)?;
    let subjects = log.subject_ids();
    if subjects.is_empty() {
        return Err(CliError::Empty("no transactions in input".into()));
    }
    let steps = cfg.tau as usize;
    let gamma = cfg.gamma as f64;
    let horizon_end = cfg.tau.checked_add(cfg.gamma).ok_or_else(|| {
        CliError::Parse(format!("tau + gamma overflows the grid: {} + {}", cfg.tau, cfg.gamma))
    })?;

    let p = loaded.processes.len();
    let mut scored: Vec<Vec<ScoredLabel>> = vec![Vec::with_capacity(subjects.len()); p];
    let mut rul: Vec<RulPrediction> = Vec::new();

    for subject in &subjects {
        let xs = subject_features(&log, subject, &loaded.processes, &loaded.stats, cfg.tau)?;
        let points: Vec<f64>;
        let scores: Vec<f64>;
        match loaded.model.config.mode {
            LossMode::SqLoss => {
                points = loaded.model.final_step_points(&xs, steps)?;
                scores = points.iter().map(|pt| gamma - pt).collect();
            }
            _ => {
                let params = loaded.model.final_step_params(&xs, steps)?;
                let mut hit = Vec::with_capacity(p);
                let mut point = Vec::with_capacity(p);
                for (i, process) in loaded.processes.iter().enumerate() {
                    let raw_tse =
                        final_tse(&subject_arrivals(&log, subject, process, cfg.tau)?);
                    let tse = loaded.model.conditioning_tse(raw_tse);
                    hit.push(hit_probability(&params[i], tse, gamma)?);
                    point.push(point_estimate(&params[i], tse, cfg.statistic)?);
                }
                points = point;
                scores = hit;
            }
        }
        for (i, process) in loaded.processes.iter().enumerate() {
            let next = first_arrival_after(&log, subject, process, cfg.tau);
            let label = next.is_some_and(|t| t <= horizon_end);
            scored[i].push(ScoredLabel { score: scores[i], label });
            if let Some(t) = next {
                rul.push(RulPrediction { predicted: points[i], actual: (t - cfg.tau) as f64 });
            }
        }
    }

    let mut aucs: Vec<Option<f64>> = Vec::with_capacity(p);
    for items in &scored {
        let positives = items.iter().filter(|it| it.label).count();
        if positives == 0 || positives == items.len() {
            aucs.push(None);
        } else {
            aucs.push(Some(renewal_core::metrics::roc_auc(items)?));
        }
    }

    let blank = || String::new();
    let mut writer = csv::Writer::from_path(out)?;
    writer.write_record(["record", "process_id", "min", "q25", "q50", "q75", "max", "mean", "value"])?;
    for (process, auc) in loaded.processes.iter().zip(&aucs) {
        writer.write_record([
            "roc_auc".to_string(),
            process.clone(),
            blank(),
            blank(),
            blank(),
            blank(),
            blank(),
            blank(),
            auc.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    let defined: Vec<f64> = aucs.iter().flatten().copied().collect();
    if !defined.is_empty() {
        let summary = auc_quantile_summary(&defined)?;
        writer.write_record([
            "auc_summary".to_string(),
            blank(),
            summary.min.to_string(),
            summary.q25.to_string(),
            summary.q50.to_string(),
            summary.q75.to_string(),
            summary.max.to_string(),
            summary.mean.to_string(),
            blank(),
        ])?;
    }
    if !rul.is_empty() {
        for (name, value) in [("rmse", rmse(&rul)?), ("mcl", mean_custom_loss(&rul)?)] {
            writer.write_record([
                name.to_string(),
                blank(),
                blank(),
                blank(),
                blank(),
                blank(),
                blank(),
                blank(),
                value.to_string(),
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}

/// Emits a synthetic transaction log in the ingestion schema, plus a
/// `<out>.truth.csv` sidecar recording the ground-truth scale and shape
/// per process.
pub fn cmd_generate(cfg: &GenerateConfig, out: &Path) -> Result<(), CliError> {
    let spec = GeneratorSpec {
        processes: cfg
            .scales
            .iter()
            .zip(&cfg.shapes)
            .zip(&cfg.betas)
            .map(|((&scale, &shape), &covariate_beta)| ProcessSpec { scale, shape, covariate_beta })
            .collect(),
        coupling: cfg.coupling,
        subjects: cfg.subjects,
        window_end: cfg.tau,
        seed: cfg.seed,
    };
    let ds = generate(&spec)?;

    let mut writer = csv::Writer::from_path(out)?;
    writer.write_record(CSV_HEADER)?;
    for subject in &ds.subjects {
        for (i, seq) in subject.arrivals.iter().enumerate() {
            let process = process_id(i);
            for &t in seq.arrivals() {
                writer.write_record([
                    subject.id.clone(),
                    process.clone(),
                    t.to_string(),
                    "1".to_string(),
                    "1".to_string(),
                ])?;
            }
        }
    }
    writer.flush()?;

    let truth_path = out.with_extension("truth.csv");
    let mut truth = csv::Writer::from_path(&truth_path)?;
    truth.write_record(["process_id", "scale", "shape"])?;
    for (i, pr) in spec.processes.iter().enumerate() {
        truth.write_record([process_id(i), pr.scale.to_string(), pr.shape.to_string()])?;
    }
    truth.flush()?;
    Ok(())
}

/// Generated process ids sort in index order up to 100 processes.
pub fn process_id(index: usize) -> String {
    format!("p{index:02}")
}
