//! The assembled forecaster: a stacked-LSTM network whose raw outputs are
//! activated into per-step, per-process Weibull parameters (or point
//! estimates), trained against masked censoring-aware losses.
//!
//! Three loss modes:
//!
//! * `matrnn`: parameters describe the full span length distribution; the
//!   likelihood conditions on the elapsed time `tse` at every step.
//! * `wtte`: parameters describe the remaining time directly; the
//!   likelihood ignores `tse` (equivalently, conditions on zero).
//! * `sqloss`: a softplus point estimate trained by squared error on
//!   uncensored steps only; censored steps contribute nothing.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::SurvivalTarget;
use crate::neural::{clip_gradients, Adam, Network, Tensor};
use crate::survival::{
    self, excess_survival, step_log_likelihood_with_gradient, CensorObservation, WeibullParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossMode {
    MatRnn,
    Wtte,
    SqLoss,
}

impl LossMode {
    pub fn name(self) -> &'static str {
        match self {
            LossMode::MatRnn => "matrnn",
            LossMode::Wtte => "wtte",
            LossMode::SqLoss => "sqloss",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "matrnn" => Ok(LossMode::MatRnn),
            "wtte" => Ok(LossMode::Wtte),
            "sqloss" => Ok(LossMode::SqLoss),
            other => Err(Error::InvalidParameter(format!(
                "unknown loss mode {other:?} (expected matrnn, wtte, or sqloss)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub hidden: usize,
    pub processes: usize,
    pub mode: LossMode,
    /// Upper bound of the shape activation, in (1, 10].
    pub k_max: f64,
    /// Mean observed inter-arrival time per process; anchors the scale
    /// activation so a raw output of zero starts at the data's own scale.
    pub mu_bar: Vec<f64>,
    pub learning_rate: f64,
    pub iterations: usize,
    pub clip_threshold: f64,
    pub seed: u64,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.processes == 0 {
            return Err(Error::InvalidParameter(
                "hidden size and process count must be >= 1".into(),
            ));
        }
        if !(self.k_max > 1.0 && self.k_max <= survival::K_MAX) {
            return Err(Error::InvalidParameter(format!(
                "k_max must lie in (1, {}], got {}",
                survival::K_MAX,
                self.k_max
            )));
        }
        if self.mu_bar.len() != self.processes {
            return Err(Error::ShapeMismatch(format!(
                "mu_bar has {} entries for {} processes",
                self.mu_bar.len(),
                self.processes
            )));
        }
        if self.mu_bar.iter().any(|&m| !m.is_finite() || m <= 0.0) {
            return Err(Error::InvalidParameter("mu_bar entries must be > 0".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter("learning rate must be > 0".into()));
        }
        if self.clip_threshold.is_nan() || self.clip_threshold <= 0.0 {
            return Err(Error::InvalidParameter("clip threshold must be > 0".into()));
        }
        Ok(())
    }
}

/// Training data: per-subject feature sequences plus per-subject,
/// per-process supervision targets on a shared step grid.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub steps: usize,
    pub channels: usize,
    /// One `[steps * channels]` row-major sequence per subject.
    pub features: Vec<Vec<f64>>,
    /// `targets[subject][process]`, each of length `steps`.
    pub targets: Vec<Vec<SurvivalTarget>>,
}

impl Dataset {
    pub fn subjects(&self) -> usize {
        self.features.len()
    }

    pub fn validate(&self, processes: usize) -> Result<()> {
        if self.features.is_empty() {
            return Err(Error::Empty("dataset has no subjects".into()));
        }
        if self.features.len() != self.targets.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} feature sequences vs {} target groups",
                self.features.len(),
                self.targets.len()
            )));
        }
        for (s, xs) in self.features.iter().enumerate() {
            if xs.len() != self.steps * self.channels {
                return Err(Error::ShapeMismatch(format!(
                    "subject {s}: {} feature values, expected {} x {}",
                    xs.len(),
                    self.steps,
                    self.channels
                )));
            }
            if xs.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidData(format!("subject {s}: non-finite feature")));
            }
            if self.targets[s].len() != processes {
                return Err(Error::ShapeMismatch(format!(
                    "subject {s}: {} target series for {processes} processes",
                    self.targets[s].len()
                )));
            }
            for (i, tg) in self.targets[s].iter().enumerate() {
                if tg.len() != self.steps {
                    return Err(Error::ShapeMismatch(format!(
                        "subject {s} process {i}: target length {} != steps {}",
                        tg.len(),
                        self.steps
                    )));
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

/// Shape activation: `k_max / (1 + (k_max - 1) * exp(-raw))`, a scaled
/// logistic picked so raw = 0 lands exactly on shape 1. The output is then
/// clamped a hair inside `(0, k_max)` so the open bounds survive rounding.
pub fn activate_shape(raw: f64, k_max: f64) -> f64 {
    let k = k_max / (1.0 + (k_max - 1.0) * (-raw).exp());
    k.clamp(k_max * 1e-12, k_max * (1.0 - 1e-12))
}

/// `d shape / d raw` expressed through the activated value.
pub fn activate_shape_gradient(shape: f64, k_max: f64) -> f64 {
    shape * (1.0 - shape / k_max)
}

/// Raw output range for the scale activation; keeps `exp` well away from
/// overflow while spanning nine decades around the anchor.
const SCALE_RAW_LIMIT: f64 = 20.0;

/// Scale activation: `mu_bar * exp(raw)` with the raw value clamped to
/// +-20. Raw = 0 maps exactly to the anchor `mu_bar`.
pub fn activate_scale(raw: f64, mu_bar: f64) -> f64 {
    mu_bar * raw.clamp(-SCALE_RAW_LIMIT, SCALE_RAW_LIMIT).exp()
}

/// `d scale / d raw`: the scale itself inside the clamp, zero outside.
pub fn activate_scale_gradient(raw: f64, scale: f64) -> f64 {
    if raw.abs() > SCALE_RAW_LIMIT {
        0.0
    } else {
        scale
    }
}

pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else if x < -30.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

/// Raw network outputs per step are laid out process-major:
/// `(raw_scale_1, raw_shape_1, ..., raw_scale_p, raw_shape_p)`.
pub fn output_width(processes: usize) -> usize {
    2 * processes
}

/// Turns one step's raw output pair into Weibull parameters.
pub fn step_params(raw_scale: f64, raw_shape: f64, mu_bar: f64, k_max: f64) -> WeibullParams {
    WeibullParams {
        scale: activate_scale(raw_scale, mu_bar),
        shape: activate_shape(raw_shape, k_max),
    }
}

/// Loss and output-gradient for one subject. `d_out` (when given) is
/// filled with `weight * d loss / d raw`, so the caller controls batch
/// averaging; masked steps stay exactly zero.
fn subject_loss(
    outputs: &[f64],
    steps: usize,
    targets: &[SurvivalTarget],
    cfg: &ModelConfig,
    weight: f64,
    mut d_out: Option<&mut [f64]>,
) -> Result<f64> {
    let width = output_width(cfg.processes);
    let mut loss = 0.0;
    for t in 0..steps {
        let row = &outputs[t * width..(t + 1) * width];
        for i in 0..cfg.processes {
            let tg = &targets[i];
            if !tg.mask[t] {
                continue;
            }
            match cfg.mode {
                LossMode::MatRnn | LossMode::Wtte => {
                    let raw_scale = row[2 * i];
                    let raw_shape = row[2 * i + 1];
                    let p = step_params(raw_scale, raw_shape, cfg.mu_bar[i], cfg.k_max);
                    let tse = match cfg.mode {
                        LossMode::MatRnn => tg.tse[t] as f64,
                        _ => 0.0,
                    };
                    let obs = CensorObservation {
                        tse,
                        tte: tg.tte[t] as f64,
                        uncensored: tg.uncensored[t],
                    };
                    let (ll, d_scale, d_shape) = step_log_likelihood_with_gradient(&obs, &p)?;
                    loss -= ll;
                    if let Some(d) = d_out.as_deref_mut() {
                        let base = t * width + 2 * i;
                        d[base] -= weight
                            * d_scale
                            * activate_scale_gradient(raw_scale, p.scale);
                        d[base + 1] -= weight
                            * d_shape
                            * activate_shape_gradient(p.shape, cfg.k_max);
                    }
                }
                LossMode::SqLoss => {
                    if !tg.uncensored[t] {
                        continue;
                    }
                    let raw = row[2 * i];
                    let pred = cfg.mu_bar[i] * softplus(raw);
                    let diff = pred - tg.tte[t] as f64;
                    loss += diff * diff;
                    if let Some(d) = d_out.as_deref_mut() {
                        d[t * width + 2 * i] +=
                            weight * 2.0 * diff * cfg.mu_bar[i] * sigmoid(raw);
                    }
                }
            }
        }
    }
    Ok(loss)
}

/// Total loss at the current weights: summed over steps and processes,
/// averaged over subjects.
pub fn evaluate_loss(net: &Network, ds: &Dataset, cfg: &ModelConfig) -> Result<f64> {
    cfg.validate()?;
    ds.validate(cfg.processes)?;
    check_net_shape(net, ds, cfg)?;
    let mut total = 0.0;
    for s in 0..ds.subjects() {
        let outputs = net.forward(&ds.features[s], ds.steps)?;
        total += subject_loss(&outputs, ds.steps, &ds.targets[s], cfg, 0.0, None)?;
    }
    Ok(total / ds.subjects() as f64)
}

/// Loss plus exact gradients w.r.t. every network tensor.
pub fn loss_and_gradients(
    net: &Network,
    ds: &Dataset,
    cfg: &ModelConfig,
) -> Result<(f64, Vec<Tensor>)> {
    cfg.validate()?;
    ds.validate(cfg.processes)?;
    check_net_shape(net, ds, cfg)?;
    let mut grads = net.zero_grads();
    let mut total = 0.0;
    let weight = 1.0 / ds.subjects() as f64;
    let width = output_width(cfg.processes);
    for s in 0..ds.subjects() {
        let xs = &ds.features[s];
        let (outputs, caches) = net.forward_sequence(xs, ds.steps)?;
        let mut d_out = vec![0.0f64; ds.steps * width];
        total += subject_loss(
            &outputs,
            ds.steps,
            &ds.targets[s],
            cfg,
            weight,
            Some(&mut d_out),
        )?;
        net.backward_sequence(xs, ds.steps, &caches, &d_out, &mut grads)?;
    }
    Ok((total * weight, grads))
}

fn check_net_shape(net: &Network, ds: &Dataset, cfg: &ModelConfig) -> Result<()> {
    if net.features != ds.channels || net.outputs != output_width(cfg.processes) {
        return Err(Error::ShapeMismatch(format!(
            "network expects {} channels and {} outputs, dataset/config give {} and {}",
            net.features,
            net.outputs,
            ds.channels,
            output_width(cfg.processes)
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub config: ModelConfig,
    pub network: Network,
    pub optimizer: Adam,
}

pub struct TrainOutcome {
    pub model: TrainedModel,
    /// Loss before each update, one entry per iteration.
    pub loss_history: Vec<f64>,
}

/// Full-batch Adam training. Deterministic for a fixed seed; aborts with
/// [`Error::Diverged`] the moment the loss stops being finite.
pub fn train(ds: &Dataset, cfg: &ModelConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    ds.validate(cfg.processes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut net = Network::init(
        ds.channels,
        cfg.hidden,
        output_width(cfg.processes),
        &mut rng,
    )?;
    let mut optimizer = Adam::new(cfg.learning_rate, &net.tensors());
    let mut loss_history = Vec::with_capacity(cfg.iterations);

    for iteration in 0..cfg.iterations {
        let (loss, mut grads) = loss_and_gradients(&net, ds, cfg)?;
        if !loss.is_finite() {
            return Err(Error::Diverged { iteration, loss });
        }
        loss_history.push(loss);
        clip_gradients(&mut grads, cfg.clip_threshold)?;
        optimizer.update(&mut net.tensors_mut(), &grads)?;
    }

    Ok(TrainOutcome {
        model: TrainedModel { config: cfg.clone(), network: net, optimizer },
        loss_history,
    })
}

// ---------------------------------------------------------------------------
// Prediction queries
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    Mode,
    Median,
    Mean,
}

impl Statistic {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "mode" => Ok(Statistic::Mode),
            "median" => Ok(Statistic::Median),
            "mean" => Ok(Statistic::Mean),
            other => Err(Error::InvalidParameter(format!(
                "unknown statistic {other:?} (expected mode, median, or mean)"
            ))),
        }
    }
}

impl TrainedModel {
    /// Final-step Weibull parameters per process for one subject's feature
    /// sequence. Probability modes only.
    pub fn final_step_params(&self, xs: &[f64], steps: usize) -> Result<Vec<WeibullParams>> {
        if self.config.mode == LossMode::SqLoss {
            return Err(Error::InvalidParameter(
                "sqloss checkpoints produce point estimates, not distribution parameters".into(),
            ));
        }
        let outputs = self.network.forward(xs, steps)?;
        let width = output_width(self.config.processes);
        let row = &outputs[(steps - 1) * width..steps * width];
        Ok((0..self.config.processes)
            .map(|i| {
                step_params(
                    row[2 * i],
                    row[2 * i + 1],
                    self.config.mu_bar[i],
                    self.config.k_max,
                )
            })
            .collect())
    }

    /// Final-step point estimates per process (sqloss mode).
    pub fn final_step_points(&self, xs: &[f64], steps: usize) -> Result<Vec<f64>> {
        if self.config.mode != LossMode::SqLoss {
            return Err(Error::InvalidParameter(
                "point-estimate outputs require sqloss mode".into(),
            ));
        }
        let outputs = self.network.forward(xs, steps)?;
        let width = output_width(self.config.processes);
        let row = &outputs[(steps - 1) * width..steps * width];
        Ok((0..self.config.processes)
            .map(|i| self.config.mu_bar[i] * softplus(row[2 * i]))
            .collect())
    }

    /// The elapsed time the prediction queries should condition on: the
    /// real `tse` when parameters describe whole spans, zero when they
    /// describe the remaining time directly.
    pub fn conditioning_tse(&self, final_tse: u32) -> f64 {
        match self.config.mode {
            LossMode::MatRnn => final_tse as f64,
            _ => 0.0,
        }
    }
}

/// `P(next arrival within gamma)` given `tse` already elapsed.
pub fn hit_probability(p: &WeibullParams, tse: f64, gamma: f64) -> Result<f64> {
    Ok(1.0 - excess_survival(gamma, tse, p)?)
}

/// `P(arrival in (gamma1, gamma1 + gamma2] | no arrival within gamma1)`,
/// with `tse` already elapsed. Algebraically the survival ratio
/// `1 - S_Z(g1+g2)/S_Z(g1)`, computed in one exponential so the ratio never
/// divides by a vanishing tail.
pub fn deferred_probability(p: &WeibullParams, tse: f64, gamma1: f64, gamma2: f64) -> Result<f64> {
    if gamma1 < 0.0 || gamma2 < 0.0 {
        return Err(Error::InvalidParameter("horizons must be nonnegative".into()));
    }
    Ok(1.0 - excess_survival(gamma2, tse + gamma1, p)?)
}

/// A point statistic of the remaining-time distribution given `tse`
/// elapsed.
pub fn point_estimate(p: &WeibullParams, tse: f64, stat: Statistic) -> Result<f64> {
    match stat {
        Statistic::Mode => {
            // The span-length density peaks at scale*((k-1)/k)^(1/k) for
            // k > 1 (at zero otherwise); conditioning on tse shifts and
            // floors it.
            if p.shape <= 1.0 {
                Ok(0.0)
            } else {
                let peak = p.scale * ((p.shape - 1.0) / p.shape).powf(1.0 / p.shape);
                Ok((peak - tse).max(0.0))
            }
        }
        Statistic::Median => median_excess(p, tse),
        Statistic::Mean => mean_excess(p, tse),
    }
}

const POINT_TOL: f64 = 1e-8;

/// Bisection on the excess survival curve for S = 0.5.
fn median_excess(p: &WeibullParams, s: f64) -> Result<f64> {
    let mut hi = p.scale.max(1.0);
    let mut guard = 0;
    while excess_survival(hi, s, p)? > 0.5 {
        hi *= 2.0;
        guard += 1;
        if guard > 600 {
            return Err(Error::InvalidParameter(
                "median search failed to bracket; parameters degenerate".into(),
            ));
        }
    }
    let mut lo = 0.0;
    while hi - lo > POINT_TOL {
        let mid = 0.5 * (lo + hi);
        if excess_survival(mid, s, p)? > 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Mean of a nonnegative variable as the integral of its survival curve,
/// by adaptive trapezoid refinement.
fn mean_excess(p: &WeibullParams, s: f64) -> Result<f64> {
    // Extend the upper limit until the remaining tail is negligible; the
    // t*S(t) proxy over-covers the stretched-exponential tails of small
    // shapes.
    let mut hi = p.scale.max(1.0);
    let mut guard = 0;
    loop {
        let tail = excess_survival(hi, s, p)? * hi;
        if tail < 1e-10 || guard > 900 || hi > 1e300 {
            break;
        }
        hi *= 2.0;
        guard += 1;
    }
    let f = |t: f64| excess_survival(t, s, p);
    let fa = f(0.0)?;
    let fb = f(hi)?;
    let whole = 0.5 * (fa + fb) * hi;
    adaptive_trapezoid(&f, 0.0, hi, fa, fb, whole, POINT_TOL, 0)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_trapezoid<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let left = 0.25 * (fa + fm) * (b - a);
    let right = 0.25 * (fm + fb) * (b - a);
    let refined = left + right;
    if depth >= 52 || (refined - whole).abs() <= 3.0 * tol {
        // Richardson extrapolation of the trapezoid pair.
        return Ok(refined + (refined - whole) / 3.0);
    }
    let l = adaptive_trapezoid(f, a, m, fa, fm, left, 0.5 * tol, depth + 1)?;
    let r = adaptive_trapezoid(f, m, b, fm, fb, right, 0.5 * tol, depth + 1)?;
    Ok(l + r)
}
