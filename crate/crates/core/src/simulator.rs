//! Two-hop link simulation and achievable-rate computation for a plan.
//!
//! The relay forwards its projected observations `w_p = N_p y_r` (noise
//! included) through the downlink precoders. Every receiver removes the
//! component caused by its own uplink symbols, then separates its two
//! desired messages with a linear equalizer.

use std::collections::BTreeMap;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::theorem_sum_dof;
use crate::channel::{sample_channel_trial, trial_rng, AntennaConfig, ChannelRealization, PowerConfig};
use crate::error::{Error, Result};
use crate::linalg::{hstack, ln_det_spd, max_abs, pseudo_inverse, spd_inverse, Mat, DEFAULT_TOL};
use crate::scheme::{build_plan, validate_plan, BeamformingPlan, EffectiveChannel, Pair};

/// Messages `(from, to)` in report order: 12, 13, 21, 23, 31, 32.
pub const MESSAGES: [(usize, usize); 6] = [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)];

/// Relative size of cross-pair leakage above which a plan is rejected.
const LEAKAGE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct StreamSymbols {
    pub u: BTreeMap<(usize, usize), DVector<f64>>,
}

impl StreamSymbols {
    pub fn zeros(plan: &BeamformingPlan) -> Self {
        let u = MESSAGES
            .iter()
            .map(|&(j, k)| ((j, k), DVector::zeros(plan.alloc.message_streams(j, k))))
            .collect();
        Self { u }
    }

    /// I.i.d. standard normal symbols.
    pub fn gaussian<R: Rng>(plan: &BeamformingPlan, rng: &mut R) -> Self {
        let u = MESSAGES
            .iter()
            .map(|&(j, k)| {
                let d = plan.alloc.message_streams(j, k);
                ((j, k), DVector::from_fn(d, |_, _| StandardNormal.sample(rng)))
            })
            .collect();
        Self { u }
    }

    fn check(&self, plan: &BeamformingPlan) -> Result<()> {
        for &(j, k) in &MESSAGES {
            let want = plan.alloc.message_streams(j, k);
            let got = self.u.get(&(j, k)).map_or(usize::MAX, |v| v.len());
            if got != want {
                return Err(Error::ShapeMismatch(format!(
                    "message {}{}: expected {} symbols",
                    j + 1,
                    k + 1,
                    want
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelayObservation {
    /// Received vector in the relay's active coordinates.
    pub y_r: DVector<f64>,
    /// `w_p = N_p y_r` per pair.
    pub w: BTreeMap<Pair, DVector<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput {
    pub relay: RelayObservation,
    /// Signal at each user's antennas over the block (all antennas).
    pub received: [DVector<f64>; 3],
    /// Active-antenna observation after removing the user's own symbols.
    pub cancelled: [DVector<f64>; 3],
    /// Equalizer output per message `(from, to)`, at the receiver `to`.
    pub decoded: BTreeMap<(usize, usize), DVector<f64>>,
    /// Per-user uplink symbol amplitude and relay gain used for this run.
    pub uplink_amplitude: [f64; 3],
    pub relay_gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub p: f64,
    /// Bits per channel use, in [`MESSAGES`] order.
    pub per_message_rate: [f64; 6],
    pub sum_rate: f64,
}

impl RateReport {
    pub fn rate(&self, from: usize, to: usize) -> f64 {
        let idx = MESSAGES.iter().position(|&m| m == (from, to)).expect("valid message");
        self.per_message_rate[idx]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DofReport {
    pub p_grid: Vec<f64>,
    pub sum_rates: Vec<f64>,
    pub rates: Vec<RateReport>,
    pub estimated_slope: f64,
    pub theorem_sum: usize,
}

/// End-to-end map from the symbols of `(from, to)` to the active
/// observation of `rx`, without amplitude or relay gain.
fn end_to_end(plan: &BeamformingPlan, eff: &EffectiveChannel, relay: &Mat, rx: usize, from: usize, to: usize) -> Mat {
    &eff.d[rx] * relay * &eff.h[from] * &plan.v[&(from, to)]
}

/// Desired-signal matrix of receiver `k`: columns for `(j, k)` in user
/// order, each scaled by the sender's amplitude.
fn desired_matrix(plan: &BeamformingPlan, eff: &EffectiveChannel, relay: &Mat, amp: &[f64; 3], k: usize) -> Mat {
    let blocks: Vec<Mat> = (0..3)
        .filter(|&j| j != k)
        .map(|j| end_to_end(plan, eff, relay, k, j, k) * amp[j])
        .collect();
    let refs: Vec<&Mat> = blocks.iter().collect();
    hstack(&refs)
}

fn gaussian_vector<R: Rng>(len: usize, std_dev: f64, rng: &mut R) -> DVector<f64> {
    let normal = Normal::new(0.0, std_dev).expect("finite standard deviation");
    DVector::from_fn(len, |_, _| normal.sample(rng))
}

/// Runs one block through uplink, relay and downlink. `noise_seed = None`
/// disables all noise.
pub fn run_chain(
    plan: &BeamformingPlan,
    ch: &ChannelRealization,
    sym: &StreamSymbols,
    power: &PowerConfig,
    noise_seed: Option<u64>,
) -> Result<ChainOutput> {
    sym.check(plan)?;
    let eff = plan.effective_channel(ch)?;
    let cfg = &plan.config;
    let slots = plan.slots();
    let sigma = power.noise_variance().sqrt();
    let amp: [f64; 3] = std::array::from_fn(|j| plan.uplink_amplitude(j, power.p()));
    let gain = plan.relay_gain(power.p(), power.noise_variance());
    let mut rng = noise_seed.map(|s| trial_rng(s, u64::MAX));
    let mut noise = |len: usize| match rng.as_mut() {
        Some(r) => gaussian_vector(len, sigma, r),
        None => DVector::zeros(len),
    };

    // Uplink on the full block antennas.
    let mut y_full = noise(cfg.n() * slots);
    for (j, &a) in amp.iter().enumerate() {
        let mut x = DVector::zeros(cfg.m(j) * slots);
        for k in (0..3).filter(|&k| k != j) {
            x += plan.full_precoder(j, k) * &sym.u[&(j, k)] * a;
        }
        y_full += &eff.block.h[j] * x;
    }
    let y_r = &plan.relay_combiner * y_full;
    let w: BTreeMap<Pair, DVector<f64>> = Pair::ALL.iter().map(|&p| (p, &plan.n_proj[&p] * &y_r)).collect();

    let mut x_bar = DVector::zeros(plan.reduced.n_bar);
    for p in Pair::ALL {
        x_bar += &plan.t[&p] * &w[&p];
    }
    let x_relay = plan.relay_combiner.transpose() * (x_bar * gain);

    let relay = plan.relay_map();
    let mut received: [DVector<f64>; 3] = std::array::from_fn(|_| DVector::zeros(0));
    let mut cancelled: [DVector<f64>; 3] = std::array::from_fn(|_| DVector::zeros(0));
    let mut decoded = BTreeMap::new();
    for k in 0..3 {
        let y = &eff.block.d[k] * &x_relay + noise(cfg.m(k) * slots);
        let mut obs = plan.user_selection(k) * &y;
        for j in (0..3).filter(|&j| j != k) {
            obs -= end_to_end(plan, &eff, &relay, k, k, j) * &sym.u[&(k, j)] * (amp[k] * gain);
        }
        let a = desired_matrix(plan, &eff, &relay, &amp, k) * gain;
        if a.ncols() > 0 && crate::linalg::rank(&a, DEFAULT_TOL) < a.ncols() {
            return Err(Error::DegenerateChannel(format!(
                "equalizer of user {} is singular",
                k + 1
            )));
        }
        let est = pseudo_inverse(&a, DEFAULT_TOL) * &obs;
        let mut at = 0;
        for j in (0..3).filter(|&j| j != k) {
            let d = plan.alloc.message_streams(j, k);
            decoded.insert((j, k), est.rows(at, d).into_owned());
            at += d;
        }
        received[k] = y;
        cancelled[k] = obs;
    }

    Ok(ChainOutput {
        relay: RelayObservation { y_r, w },
        received,
        cancelled,
        decoded,
        uplink_amplitude: amp,
        relay_gain: gain,
    })
}

/// Expected transmit energy per channel use of each user and of the relay.
pub fn transmit_energies(plan: &BeamformingPlan, power: &PowerConfig) -> ([f64; 3], f64) {
    let slots = plan.slots() as f64;
    let users = std::array::from_fn(|j| {
        plan.uplink_amplitude(j, power.p()).powi(2) * plan.user_precoder(j).norm_squared() / slots
    });
    let g = plan.relay_gain(power.p(), power.noise_variance());
    let relay =
        g * g * (power.p() * plan.relay_signal_energy + power.noise_variance() * plan.relay_noise_energy) / slots;
    (users, relay)
}

/// Gaussian-input rate of every message over its own effective channel,
/// `(1/2) log2 det(I + G^T S^-1 G) / slots` bits per channel use, where `G`
/// maps the message to the receiver's cancelled observation and `S` is the
/// receiver noise plus forwarded relay noise.
pub fn analytic_rates(plan: &BeamformingPlan, ch: &ChannelRealization, power: &PowerConfig) -> Result<RateReport> {
    let eff = plan.effective_channel(ch)?;
    let slots = plan.slots() as f64;
    let amp: [f64; 3] = std::array::from_fn(|j| plan.uplink_amplitude(j, power.p()));
    let gain = plan.relay_gain(power.p(), power.noise_variance());
    let nv = power.noise_variance();
    let relay = plan.relay_map();
    let mut per_message = [0.0; 6];

    for k in 0..3 {
        let (i, l) = match k {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let a = desired_matrix(plan, &eff, &relay, &amp, k) * gain;
        if a.ncols() == 0 {
            continue;
        }
        let leak = end_to_end(plan, &eff, &relay, k, i, l) * (amp[i] * gain);
        let leak_back = end_to_end(plan, &eff, &relay, k, l, i) * (amp[l] * gain);
        let leakage = max_abs(&leak).max(max_abs(&leak_back));
        if leakage > LEAKAGE_TOL * max_abs(&a).max(f64::MIN_POSITIVE) {
            return Err(Error::DegenerateChannel(format!(
                "cross-pair leakage {leakage:e} at user {}",
                k + 1
            )));
        }

        let forwarded = &eff.d[k] * &relay * gain;
        let cov = (&forwarded * forwarded.transpose() + Mat::identity(a.nrows(), a.nrows())) * nv;
        let cov_inv = spd_inverse(&cov).ok_or_else(|| Error::DegenerateChannel("singular noise covariance".into()))?;
        let fisher = a.transpose() * &cov_inv * &a;
        if spd_inverse(&fisher).is_none() {
            return Err(Error::DegenerateChannel(format!(
                "equalizer of user {} is singular",
                k + 1
            )));
        }

        let mut at = 0;
        for j in (0..3).filter(|&j| j != k) {
            let d = plan.alloc.message_streams(j, k);
            if d > 0 {
                let snr = fisher.view((at, at), (d, d)).into_owned();
                let snr = (&snr + snr.transpose()) * 0.5;
                let Some(ln_det) = ln_det_spd(&(snr + Mat::identity(d, d))) else {
                    return Err(Error::DegenerateChannel("rate matrix not positive definite".into()));
                };
                let bits = 0.5 * ln_det / std::f64::consts::LN_2 / slots;
                let idx = MESSAGES.iter().position(|&m| m == (j, k)).expect("valid message");
                per_message[idx] = bits.max(0.0);
            }
            at += d;
        }
    }
    Ok(RateReport {
        p: power.p(),
        sum_rate: per_message.iter().sum(),
        per_message_rate: per_message,
    })
}

fn check_grid(p_grid: &[f64]) -> Result<()> {
    if p_grid.len() < 2 {
        return Err(Error::InvalidGrid("need at least two powers".into()));
    }
    if p_grid.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
        return Err(Error::InvalidGrid("powers must be positive".into()));
    }
    if p_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("powers must be strictly increasing".into()));
    }
    Ok(())
}

/// Sum rate over `p_grid` and the slope between its end points, measured
/// against `(1/2) log2 P`.
pub fn estimate_dof(plan: &BeamformingPlan, ch: &ChannelRealization, p_grid: &[f64]) -> Result<DofReport> {
    check_grid(p_grid)?;
    let rates = p_grid
        .iter()
        .map(|&p| analytic_rates(plan, ch, &PowerConfig::new(p, 1.0)?))
        .collect::<Result<Vec<_>>>()?;
    let sum_rates: Vec<f64> = rates.iter().map(|r| r.sum_rate).collect();
    let (p_lo, p_hi) = (p_grid[0], p_grid[p_grid.len() - 1]);
    let slope = (sum_rates[sum_rates.len() - 1] - sum_rates[0]) / (0.5 * (p_hi / p_lo).log2());
    Ok(DofReport {
        p_grid: p_grid.to_vec(),
        sum_rates,
        rates,
        estimated_slope: slope,
        theorem_sum: theorem_sum_dof(&plan.config).theorem_sum,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub trial: u64,
    pub validation_passed: bool,
    /// `None` when the plan could not be built on this draw.
    pub report: Option<DofReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloReport {
    pub trials: Vec<TrialResult>,
    pub theorem_sum: usize,
    pub mean_slope: f64,
    pub min_slope: f64,
    pub max_slope: f64,
    pub pass_rate: f64,
}

pub fn run_trial(cfg: &AntennaConfig, p_grid: &[f64], seed: u64, trial: u64, reciprocal: bool) -> TrialResult {
    let ch = sample_channel_trial(cfg, reciprocal, seed, trial);
    let outcome = build_plan(cfg, &ch).and_then(|plan| {
        let passed = validate_plan(&plan, &ch).passed;
        estimate_dof(&plan, &ch, p_grid).map(|r| (passed, r))
    });
    match outcome {
        Ok((passed, report)) => TrialResult {
            trial,
            validation_passed: passed,
            report: Some(report),
            error: None,
        },
        Err(e) => TrialResult {
            trial,
            validation_passed: false,
            report: None,
            error: Some(e.to_string()),
        },
    }
}

/// Independent trials with per-trial channel streams of `seed`. Trials run
/// in parallel; results are ordered by trial index.
pub fn monte_carlo(
    cfg: &AntennaConfig,
    trials: u64,
    p_grid: &[f64],
    seed: u64,
    reciprocal: bool,
) -> Result<MonteCarloReport> {
    if trials == 0 {
        return Err(Error::InvalidGrid("at least one trial is required".into()));
    }
    check_grid(p_grid)?;
    let results: Vec<TrialResult> = (0..trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, p_grid, seed, t, reciprocal))
        .collect();
    let slopes: Vec<f64> = results
        .iter()
        .filter_map(|r| r.report.as_ref().map(|d| d.estimated_slope))
        .collect();
    let passed = results.iter().filter(|r| r.validation_passed).count();
    let (mean, min, max) = if slopes.is_empty() {
        (f64::NAN, f64::NAN, f64::NAN)
    } else {
        (
            slopes.iter().sum::<f64>() / slopes.len() as f64,
            slopes.iter().copied().fold(f64::INFINITY, f64::min),
            slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        )
    };
    Ok(MonteCarloReport {
        trials: results,
        theorem_sum: theorem_sum_dof(cfg).theorem_sum,
        mean_slope: mean,
        min_slope: min,
        max_slope: max,
        pass_rate: passed as f64 / trials as f64,
    })
}
