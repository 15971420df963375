//! Transaction CSV ingestion and training-set assembly.

use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use renewal_core::features::{
    build_features, channel_count, compute_stats, normalize_features, ChannelStats, Transaction,
    TransactionLog,
};
use renewal_core::grid::{build_targets, sliding_windows, ArrivalSequence};
use renewal_core::model::Dataset;

use crate::error::CliError;

pub const CSV_HEADER: [&str; 5] = ["subject_id", "process_id", "t", "value", "quantity"];

fn field<T>(raw: &str, name: &str, line: u64) -> Result<T, CliError>
where
    T: FromStr,
    T::Err: Display,
{
    raw.trim()
        .parse()
        .map_err(|e| CliError::Parse(format!("line {line}: field {name}: {e} (got {raw:?})")))
}

/// Reads the transaction schema `subject_id,process_id,t,value,quantity`.
/// Any malformed row is a parse error naming its line.
pub fn read_transactions(path: &Path) -> Result<TransactionLog, CliError> {
    let mut reader = csv::ReaderBuilder::new().from_path(path)?;
    {
        let headers = reader.headers()?;
        if headers.iter().ne(CSV_HEADER) {
            return Err(CliError::Parse(format!(
                "line 1: expected header {:?}, got {:?}",
                CSV_HEADER.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let tx = Transaction::new(
            record[0].to_string(),
            record[1].to_string(),
            field(&record[2], "t", line)?,
            field(&record[3], "value", line)?,
            field(&record[4], "quantity", line)?,
        )
        .map_err(|e| CliError::Parse(format!("line {line}: {e}")))?;
        rows.push(tx);
    }
    Ok(TransactionLog::new(rows))
}

/// Arrival cells for one subject and process: transaction times at or
/// before `tau`, sorted and deduplicated.
pub fn subject_arrivals(
    log: &TransactionLog,
    subject: &str,
    process: &str,
    tau: u32,
) -> Result<ArrivalSequence, CliError> {
    let ts: Vec<u32> = log
        .records()
        .iter()
        .filter(|r| r.subject_id == subject && r.process_id == process)
        .map(|r| r.t)
        .collect();
    Ok(ArrivalSequence::from_unordered(ts, tau)?)
}

/// Steps elapsed at `tau` since the last arrival (the window start counts
/// as arrival zero).
pub fn final_tse(seq: &ArrivalSequence) -> u32 {
    match seq.arrivals().last() {
        Some(&a) => seq.window_end() - a,
        None => seq.window_end(),
    }
}

/// Normalized flattened feature sequence for one subject over `1..=tau`.
pub fn subject_features(
    log: &TransactionLog,
    subject: &str,
    processes: &[String],
    stats: &ChannelStats,
    tau: u32,
) -> Result<Vec<f64>, CliError> {
    let mut series = build_features(log, subject, processes, tau)?;
    normalize_features(&mut series, stats)?;
    Ok(series.data)
}

/// Everything `train` needs, derived from one transaction log.
pub struct Prepared {
    pub subjects: Vec<String>,
    pub processes: Vec<String>,
    pub stats: ChannelStats,
    /// Mean observed inter-arrival time per process; `tau` when no pair
    /// of arrivals was ever observed.
    pub mu_bar: Vec<f64>,
    pub dataset: Dataset,
}

/// Builds normalized features, supervision targets, and scale anchors
/// over steps `1..=tau`. With `window` set, every subject is cut into
/// sliding segments of that length (targets rebuilt from in-segment
/// arrivals; feature rows keep their full-history values, which only look
/// backwards).
pub fn prepare_training(
    log: &TransactionLog,
    tau: u32,
    window: Option<usize>,
    stride: usize,
) -> Result<Prepared, CliError> {
    let subjects = log.subject_ids();
    if subjects.is_empty() {
        return Err(CliError::Empty("no transactions in input".into()));
    }
    let processes = log.process_ids(tau);
    if processes.is_empty() {
        return Err(CliError::Empty(format!("no transactions at or before step {tau}")));
    }
    let channels = channel_count(processes.len());

    let mut series = Vec::with_capacity(subjects.len());
    for s in &subjects {
        series.push(build_features(log, s, &processes, tau)?);
    }
    let stats = compute_stats(&series)?;
    for fs in &mut series {
        normalize_features(fs, &stats)?;
    }

    let mut arrivals: Vec<Vec<ArrivalSequence>> = Vec::with_capacity(subjects.len());
    for s in &subjects {
        let per_process = processes
            .iter()
            .map(|p| subject_arrivals(log, s, p, tau))
            .collect::<Result<Vec<_>, CliError>>()?;
        arrivals.push(per_process);
    }

    let mut mu_bar = Vec::with_capacity(processes.len());
    for i in 0..processes.len() {
        let mut sum = 0.0;
        let mut count = 0u64;
        for subj in &arrivals {
            for pair in subj[i].arrivals().windows(2) {
                sum += (pair[1] - pair[0]) as f64;
                count += 1;
            }
        }
        mu_bar.push(if count == 0 { tau as f64 } else { sum / count as f64 });
    }

    let dataset = match window {
        None => Dataset {
            steps: tau as usize,
            channels,
            features: series.into_iter().map(|fs| fs.data).collect(),
            targets: arrivals
                .iter()
                .map(|subj| subj.iter().map(build_targets).collect())
                .collect(),
        },
        Some(w) => {
            let ranges = sliding_windows(tau as usize, w, stride)?;
            let mut features = Vec::with_capacity(series.len() * ranges.len());
            let mut targets = Vec::with_capacity(series.len() * ranges.len());
            for (fs, subj) in series.iter().zip(&arrivals) {
                for r in &ranges {
                    features.push(fs.data[r.start * channels..r.end * channels].to_vec());
                    let segment = subj
                        .iter()
                        .map(|seq| {
                            let shifted: Vec<u32> = seq
                                .arrivals()
                                .iter()
                                .filter(|&&a| a as usize > r.start && a as usize <= r.end)
                                .map(|&a| a - r.start as u32)
                                .collect();
                            ArrivalSequence::from_unordered(shifted, w as u32)
                                .map(|seq| build_targets(&seq))
                        })
                        .collect::<renewal_core::Result<Vec<_>>>()?;
                    targets.push(segment);
                }
            }
            Dataset { steps: w, channels, features, targets }
        }
    };

    Ok(Prepared { subjects, processes, stats, mu_bar, dataset })
}
