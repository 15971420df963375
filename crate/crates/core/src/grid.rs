//! Discrete event grid: turn arrival timestamps into per-step supervision
//! targets (tse, tte, censoring flag, mask).
//!
//! Time steps are the integers `1..=window_end`. An arrival sequence lists
//! the occupied cells in strictly increasing order; ingestion is expected to
//! have snapped raw timestamps onto the grid already (this crate's
//! convention is ceiling snapping: cell `c` covers `(c-1, c]`), collapsing
//! multiple arrivals in one cell.
//!
//! Target series are indexed so that position `i` describes step `t = i+1`.

use crate::error::{Error, Result};

/// Arrival cells for one (subject, process) pair over a window `(0, tau]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrivalSequence {
    arrivals: Vec<u32>,
    window_end: u32,
}

impl ArrivalSequence {
    /// Validates `0 < W_1 < W_2 < ... <= window_end`.
    pub fn new(arrivals: Vec<u32>, window_end: u32) -> Result<Self> {
        if window_end == 0 {
            return Err(Error::InvalidData("window_end must be positive".into()));
        }
        for (i, &w) in arrivals.iter().enumerate() {
            if w == 0 {
                return Err(Error::InvalidData("arrival time 0 is outside the grid".into()));
            }
            if w > window_end {
                return Err(Error::InvalidData(format!(
                    "arrival {w} exceeds window end {window_end}"
                )));
            }
            if i > 0 && arrivals[i - 1] >= w {
                return Err(Error::InvalidData(format!(
                    "arrivals must be strictly increasing, got {} then {w}",
                    arrivals[i - 1]
                )));
            }
        }
        Ok(Self { arrivals, window_end })
    }

    /// Sorts, deduplicates, and drops cells outside `(0, window_end]`.
    /// Ingestion entry point for unordered raw rows.
    pub fn from_unordered(mut cells: Vec<u32>, window_end: u32) -> Result<Self> {
        cells.sort_unstable();
        cells.dedup();
        cells.retain(|&c| c >= 1 && c <= window_end);
        Self::new(cells, window_end)
    }

    pub fn arrivals(&self) -> &[u32] {
        &self.arrivals
    }

    pub fn window_end(&self) -> u32 {
        self.window_end
    }

    /// Number of arrivals at or before `t`.
    pub fn count_arrivals(&self, t: u32) -> Result<usize> {
        if t > self.window_end {
            return Err(Error::InvalidData(format!(
                "t = {t} is outside the window (end {})",
                self.window_end
            )));
        }
        Ok(self.arrivals.partition_point(|&w| w <= t))
    }
}

/// Per-step supervision series, all of length `window_end`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurvivalTarget {
    /// Steps since the last arrival; equals `t` before the first arrival
    /// (the window start acts as arrival number zero).
    pub tse: Vec<u32>,
    /// Steps to the next arrival, or to the window end when censored.
    pub tte: Vec<u32>,
    /// True where the next arrival was actually observed inside the window.
    pub uncensored: Vec<bool>,
    /// False strictly before the first arrival; those steps carry no loss.
    pub mask: Vec<bool>,
}

impl SurvivalTarget {
    pub fn len(&self) -> usize {
        self.tse.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tse.is_empty()
    }
}

/// Builds the per-step series for steps `1..=window_end`.
pub fn build_targets(seq: &ArrivalSequence) -> SurvivalTarget {
    let tau = seq.window_end;
    let arrivals = seq.arrivals();
    let n = tau as usize;
    let mut tse = Vec::with_capacity(n);
    let mut tte = Vec::with_capacity(n);
    let mut uncensored = Vec::with_capacity(n);
    let mut mask = Vec::with_capacity(n);

    // idx = number of arrivals at or before t, maintained incrementally.
    let mut idx = 0usize;
    for t in 1..=tau {
        while idx < arrivals.len() && arrivals[idx] <= t {
            idx += 1;
        }
        let last = if idx == 0 { 0 } else { arrivals[idx - 1] };
        tse.push(t - last);
        if idx < arrivals.len() {
            tte.push(arrivals[idx] - t);
            uncensored.push(true);
        } else {
            tte.push(tau - t);
            uncensored.push(false);
        }
        mask.push(idx > 0);
    }

    SurvivalTarget { tse, tte, uncensored, mask }
}

/// Builds targets for several processes sharing one window.
pub fn build_multivariate_targets(seqs: &[ArrivalSequence]) -> Result<Vec<SurvivalTarget>> {
    if let Some(first) = seqs.first() {
        for s in &seqs[1..] {
            if s.window_end != first.window_end {
                return Err(Error::ShapeMismatch(format!(
                    "window ends differ: {} vs {}",
                    first.window_end, s.window_end
                )));
            }
        }
    }
    Ok(seqs.iter().map(build_targets).collect())
}

/// All contiguous index ranges of length `window` over a series of length
/// `len`, advancing by `stride`.
pub fn sliding_windows(
    len: usize,
    window: usize,
    stride: usize,
) -> Result<Vec<std::ops::Range<usize>>> {
    if window == 0 || stride == 0 {
        return Err(Error::InvalidParameter(
            "window and stride must be positive".into(),
        ));
    }
    if window > len {
        return Err(Error::InvalidParameter(format!(
            "window {window} exceeds series length {len}"
        )));
    }
    Ok((0..=len - window)
        .step_by(stride)
        .map(|start| start..start + window)
        .collect())
}
