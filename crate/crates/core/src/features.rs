//! Covariate construction from raw transaction logs.
//!
//! Each subject gets a per-step feature matrix with three aggregation
//! levels. Channels 0..6 are shared: recency/frequency/monetary over the
//! subject's entire transaction history ("overall"), then over the modeled
//! processes ("basket"). After that come five channels per modeled process:
//! recency, frequency, monetary, a first-purchase indicator, and
//! `ln(1 + tse)`. A one-process model therefore sees 11 channels.
//!
//! Conventions: recency counts steps since the last purchase at or before
//! `t` (zero at a purchase step, `t` before the first); frequency counts
//! repeat purchase occasions (distinct purchase steps minus one, floored at
//! zero); monetary is cumulative spend. Only records at `t <= tau` are
//! consulted, so a feature at step `t` never sees the future.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Transaction {
    pub subject_id: String,
    pub process_id: String,
    /// Grid time of the purchase, >= 1.
    pub t: u32,
    /// Monetary value, >= 0.
    pub value: f64,
    /// Units purchased, >= 1.
    pub quantity: u32,
}

impl Transaction {
    pub fn new(
        subject_id: String,
        process_id: String,
        t: u32,
        value: f64,
        quantity: u32,
    ) -> Result<Self> {
        if subject_id.is_empty() || process_id.is_empty() {
            return Err(Error::InvalidData("empty subject or process id".into()));
        }
        if t == 0 {
            return Err(Error::InvalidData("grid time must be >= 1".into()));
        }
        if !value.is_finite() || value < 0.0 {
            return Err(Error::InvalidData(format!("bad monetary value {value}")));
        }
        if quantity == 0 {
            return Err(Error::InvalidData("quantity must be >= 1".into()));
        }
        Ok(Self { subject_id, process_id, t, value, quantity })
    }
}

#[derive(Debug, Clone, Default)]
pub struct TransactionLog {
    records: Vec<Transaction>,
}

impl TransactionLog {
    pub fn new(records: Vec<Transaction>) -> Self {
        Self { records }
    }

    pub fn records(&self) -> &[Transaction] {
        &self.records
    }

    /// Sorted unique subject ids.
    pub fn subject_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.records.iter().map(|r| r.subject_id.clone()).collect();
        ids.sort();
        ids.dedup();
        ids
    }

    /// Sorted unique process ids among records at or before `tau`.
    pub fn process_ids(&self, tau: u32) -> Vec<String> {
        let mut ids: Vec<String> = self
            .records
            .iter()
            .filter(|r| r.t <= tau)
            .map(|r| r.process_id.clone())
            .collect();
        ids.sort();
        ids.dedup();
        ids
    }
}

pub const SHARED_CHANNELS: usize = 6;
pub const PER_PROCESS_CHANNELS: usize = 5;

pub fn channel_count(processes: usize) -> usize {
    SHARED_CHANNELS + PER_PROCESS_CHANNELS * processes
}

/// Row-major `[steps, channels]` feature matrix for one subject.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSeries {
    pub steps: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl FeatureSeries {
    pub fn row(&self, step: usize) -> &[f64] {
        &self.data[step * self.channels..(step + 1) * self.channels]
    }
}

/// Running RFM state for one aggregation level.
struct LevelState {
    last_step: Option<u32>,
    occasions: u32,
    monetary: f64,
}

impl LevelState {
    fn new() -> Self {
        Self { last_step: None, occasions: 0, monetary: 0.0 }
    }

    fn recency(&self, t: u32) -> f64 {
        match self.last_step {
            Some(w) => (t - w) as f64,
            None => t as f64,
        }
    }

    fn frequency(&self) -> f64 {
        self.occasions.saturating_sub(1) as f64
    }
}

/// Builds the per-step feature matrix for `subject_id` over steps
/// `1..=tau`, with per-process channels ordered by `processes`.
pub fn build_features(
    log: &TransactionLog,
    subject_id: &str,
    processes: &[String],
    tau: u32,
) -> Result<FeatureSeries> {
    let mut rows: Vec<&Transaction> = log
        .records
        .iter()
        .filter(|r| r.subject_id == subject_id)
        .collect();
    if rows.is_empty() {
        return Err(Error::Empty(format!("no transactions for subject {subject_id:?}")));
    }
    rows.retain(|r| r.t <= tau);
    rows.sort_by_key(|r| r.t);

    let proc_index = |pid: &str| processes.iter().position(|p| p == pid);
    let channels = channel_count(processes.len());
    let steps = tau as usize;
    let mut data = vec![0.0f64; steps * channels];

    let mut overall = LevelState::new();
    let mut basket = LevelState::new();
    let mut per_proc: Vec<LevelState> = (0..processes.len()).map(|_| LevelState::new()).collect();
    let mut cursor = 0usize;

    for t in 1..=tau {
        // Fold in this step's transactions before reading the state, so
        // recency is zero at a purchase step.
        let mut overall_hit = false;
        let mut basket_hit = false;
        let mut proc_hit = vec![false; processes.len()];
        while cursor < rows.len() && rows[cursor].t == t {
            let r = rows[cursor];
            overall_hit = true;
            overall.monetary += r.value;
            if let Some(i) = proc_index(&r.process_id) {
                basket_hit = true;
                basket.monetary += r.value;
                per_proc[i].monetary += r.value;
                proc_hit[i] = true;
            }
            cursor += 1;
        }
        if overall_hit {
            overall.last_step = Some(t);
            overall.occasions += 1;
        }
        if basket_hit {
            basket.last_step = Some(t);
            basket.occasions += 1;
        }
        for (i, hit) in proc_hit.iter().enumerate() {
            if *hit {
                per_proc[i].last_step = Some(t);
                per_proc[i].occasions += 1;
            }
        }

        let row = &mut data[(t as usize - 1) * channels..(t as usize) * channels];
        row[0] = overall.recency(t);
        row[1] = overall.frequency();
        row[2] = overall.monetary;
        row[3] = basket.recency(t);
        row[4] = basket.frequency();
        row[5] = basket.monetary;
        for (i, st) in per_proc.iter().enumerate() {
            let base = SHARED_CHANNELS + PER_PROCESS_CHANNELS * i;
            let rec = st.recency(t);
            row[base] = rec;
            row[base + 1] = st.frequency();
            row[base + 2] = st.monetary;
            row[base + 3] = if st.last_step.is_some() { 1.0 } else { 0.0 };
            row[base + 4] = rec.ln_1p();
        }
    }

    Ok(FeatureSeries { steps, channels, data })
}

/// Ranking score for choosing which processes to model: mean purchases per
/// customer times the log of the customer count.
pub fn basket_score(mean_purchases: f64, unique_customers: u64) -> Result<f64> {
    if unique_customers == 0 {
        return Err(Error::InvalidParameter("unique customer count must be >= 1".into()));
    }
    if mean_purchases.is_nan() || mean_purchases < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "mean purchases must be >= 0, got {mean_purchases}"
        )));
    }
    Ok(mean_purchases * (unique_customers as f64).ln())
}

/// Per-channel population mean and standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Population statistics over every step of every subject; compute these on
/// the training span only.
pub fn compute_stats(series: &[FeatureSeries]) -> Result<ChannelStats> {
    let first = series.first().ok_or_else(|| Error::Empty("no feature series".into()))?;
    let channels = first.channels;
    let mut count = 0u64;
    let mut mean = vec![0.0f64; channels];
    for s in series {
        if s.channels != channels {
            return Err(Error::ShapeMismatch("feature channel counts differ".into()));
        }
        for step in 0..s.steps {
            let row = s.row(step);
            for (c, v) in row.iter().enumerate() {
                mean[c] += v;
            }
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Empty("feature series have no steps".into()));
    }
    for m in &mut mean {
        *m /= count as f64;
    }
    let mut var = vec![0.0f64; channels];
    for s in series {
        for step in 0..s.steps {
            let row = s.row(step);
            for (c, v) in row.iter().enumerate() {
                let d = v - mean[c];
                var[c] += d * d;
            }
        }
    }
    let std = var.into_iter().map(|v| (v / count as f64).sqrt()).collect();
    Ok(ChannelStats { mean, std })
}

/// In-place z-scoring; zero-variance channels become all zeros.
pub fn normalize_features(series: &mut FeatureSeries, stats: &ChannelStats) -> Result<()> {
    if stats.mean.len() != series.channels {
        return Err(Error::ShapeMismatch(format!(
            "stats cover {} channels, series has {}",
            stats.mean.len(),
            series.channels
        )));
    }
    for step in 0..series.steps {
        let row = &mut series.data[step * series.channels..(step + 1) * series.channels];
        for (c, v) in row.iter_mut().enumerate() {
            *v = if stats.std[c] > 0.0 { (*v - stats.mean[c]) / stats.std[c] } else { 0.0 };
        }
    }
    Ok(())
}
