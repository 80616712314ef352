//! Seeded Monte Carlo campaigns.
//!
//! Each trial draws a channel, synthesizes one frame, picks the target lag,
//! trains every requested equalizer on that same frame, and scores them with
//! the exact covariances of the drawn channel.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Campaign, DeltaRule, EqualizerId, TrialConfig};
use crate::equalize::{
    lr_tmmse_train, mmse_sample, mmse_theoretical, sample_mse, select_delta, LrTmmseConfig,
};
use crate::error::Result;
use crate::linalg::C64;
use crate::metrics::{count_lr_tmmse, count_mmse, sinr, to_db};
use crate::sysmodel::{draw_channel, synthesize_frame, theoretical_covariances, SignalFrame};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable per-trial seed from the master seed, sweep index and trial index.
pub fn trial_seed(master: u64, sweep_index: usize, trial: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ sweep_index as u64) ^ trial as u64)
}

/// Score of one equalizer in one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualizerOutcome {
    pub id: EqualizerId,
    pub sinr: f64,
    pub mse: f64,
    pub iterations: usize,
    pub converged: bool,
    pub formula_products: u128,
    pub instrumented_products: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub seed: u64,
    pub delta: usize,
    pub frame_checksum: u64,
    pub equalizers: Vec<EqualizerOutcome>,
}

fn choose_delta(cfg: &TrialConfig, frame: &SignalFrame, genie: usize) -> Result<usize> {
    match cfg.delta_rule {
        DeltaRule::Genie => Ok(genie),
        DeltaRule::Training => {
            let mut best = (0, f64::INFINITY);
            for lag in 0..cfg.scenario.taps {
                let s = frame.training(cfg.target_user, lag)?;
                let rep = mmse_sample(&frame.x, &s, lag, cfg.sample_loading)?;
                let mse = rep.final_mse().unwrap_or(f64::INFINITY);
                if mse < best.1 {
                    best = (lag, mse);
                }
            }
            Ok(best.0)
        }
    }
}

/// Runs one trial with the given seed.
pub fn run_trial(cfg: &TrialConfig, equalizers: &[EqualizerId], seed: u64) -> Result<TrialOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scenario = &cfg.scenario;
    let channel = draw_channel(scenario, &mut rng)?;
    let frame = synthesize_frame(scenario, &channel, &mut rng)?;
    let cov = theoretical_covariances(scenario, &channel, cfg.target_user)?;
    let genie = select_delta(&cov.r_ss(), channel.matrix(cfg.target_user), &cov.r_xx)?;
    let delta = choose_delta(cfg, &frame, genie)?;
    let s = frame.training(cfg.target_user, delta)?;
    let checksum = frame.checksum();
    let score = |w: &[C64]| sinr(w, &cov.r_xx, &cov.r_ii, &cov.r_bb);

    let n = scenario.antennas as u64;
    let k = scenario.frame_len as u64;
    let mut outcomes = Vec::with_capacity(equalizers.len());
    for &id in equalizers {
        let outcome = match id {
            EqualizerId::MmseTheoretical => {
                let w = mmse_theoretical(&cov.r_xx, &cov.cross[delta])?;
                EqualizerOutcome {
                    id,
                    sinr: score(&w)?,
                    mse: sample_mse(&w, &frame.x, &s)?,
                    iterations: 0,
                    converged: true,
                    formula_products: 0,
                    instrumented_products: 0,
                }
            }
            EqualizerId::MmseSample => {
                let rep = mmse_sample(&frame.x, &s, delta, cfg.sample_loading)?;
                EqualizerOutcome {
                    id,
                    sinr: score(&rep.w_vec)?,
                    mse: rep.final_mse().unwrap_or(f64::NAN),
                    iterations: 0,
                    converged: true,
                    formula_products: count_mmse(n, k),
                    instrumented_products: rep.counts.map_or(0, |c| c.total()),
                }
            }
            EqualizerId::LrTmmse => {
                let filter_cfg = LrTmmseConfig {
                    seed: splitmix64(seed ^ 0x5eed),
                    ..cfg.filter.clone()
                };
                let rep = lr_tmmse_train(&frame.x, &s, &filter_cfg)?;
                let dims: Vec<u64> = filter_cfg.dims.iter().map(|&d| d as u64).collect();
                EqualizerOutcome {
                    id,
                    sinr: score(&rep.w_vec)?,
                    mse: rep.final_mse().unwrap_or(f64::NAN),
                    iterations: rep.iterations,
                    converged: rep.converged,
                    formula_products: count_lr_tmmse(
                        &dims,
                        filter_cfg.rank as u64,
                        rep.iterations as u64,
                        k,
                        cfg.solve_tail,
                    ),
                    instrumented_products: rep.counts.map_or(0, |c| c.total()),
                }
            }
        };
        outcomes.push(outcome);
    }
    log::debug!("trial seed {seed:#018x}: delta {delta}, frame checksum {checksum:#018x}");
    Ok(TrialOutcome {
        seed,
        delta,
        frame_checksum: checksum,
        equalizers: outcomes,
    })
}

/// Aggregate over the trials of one sweep point for one equalizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    /// Name of the swept variable.
    pub sweep: String,
    pub sweep_value: f64,
    pub equalizer: String,
    /// dB of the mean linear SINR.
    pub sinr_db: f64,
    pub sinr_linear: f64,
    /// Mean of per-trial SINR in dB.
    pub sinr_db_trial_mean: f64,
    /// Standard deviation of per-trial SINR in dB.
    pub sinr_db_std: f64,
    /// Mean sample MSE on the training frame.
    pub mse: f64,
    /// Mean closed-form product count.
    pub formula_products: u64,
    /// Mean instrumented product count.
    pub instrumented_products: u64,
    pub iterations: f64,
    pub convergence_rate: f64,
    pub seed: u64,
}

fn mean(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = v.clone().count();
    if n == 0 {
        return f64::NAN;
    }
    v.sum::<f64>() / n as f64
}

/// Aggregates one equalizer's outcomes at one sweep point.
pub fn aggregate(
    campaign: &Campaign,
    value: f64,
    id: EqualizerId,
    trials: &[TrialOutcome],
) -> ResultRow {
    let picks: Vec<&EqualizerOutcome> = trials
        .iter()
        .filter_map(|t| t.equalizers.iter().find(|e| e.id == id))
        .collect();
    let count = picks.len().max(1) as u128;
    let lin = mean(picks.iter().map(|e| e.sinr));
    let dbs: Vec<f64> = picks.iter().map(|e| to_db(e.sinr)).collect();
    let db_mean = mean(dbs.iter().copied());
    let db_std = if dbs.len() > 1 {
        (dbs.iter().map(|d| (d - db_mean).powi(2)).sum::<f64>() / (dbs.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    let formula = picks.iter().map(|e| e.formula_products).sum::<u128>() / count;
    let instrumented = picks
        .iter()
        .map(|e| e.instrumented_products as u128)
        .sum::<u128>()
        / count;
    ResultRow {
        sweep: campaign.sweep.name().to_string(),
        sweep_value: value,
        equalizer: id.name().to_string(),
        sinr_db: to_db(lin),
        sinr_linear: lin,
        sinr_db_trial_mean: db_mean,
        sinr_db_std: db_std,
        mse: mean(picks.iter().map(|e| e.mse)),
        formula_products: u64::try_from(formula).unwrap_or(u64::MAX),
        instrumented_products: u64::try_from(instrumented).unwrap_or(u64::MAX),
        iterations: mean(picks.iter().map(|e| e.iterations as f64)),
        convergence_rate: mean(picks.iter().map(|e| if e.converged { 1.0 } else { 0.0 })),
        seed: campaign.master_seed,
    }
}

/// Raw trial outcomes for every sweep point, in sweep order.
pub fn run_trials(campaign: &Campaign) -> Result<Vec<(f64, Vec<TrialOutcome>)>> {
    campaign.validate()?;
    let mut equalizers = campaign.equalizers.clone();
    equalizers.sort();
    equalizers.dedup();
    campaign
        .values
        .iter()
        .enumerate()
        .map(|(si, &value)| {
            let cfg = campaign.point(value)?;
            let outcomes = (0..campaign.trials)
                .into_par_iter()
                .map(|t| run_trial(&cfg, &equalizers, trial_seed(campaign.master_seed, si, t)))
                .collect::<Result<Vec<_>>>()?;
            log::info!(
                "{} = {value}: {} trials done",
                campaign.sweep,
                campaign.trials
            );
            Ok((value, outcomes))
        })
        .collect()
}

/// Runs the campaign and returns one row per (sweep value, equalizer), sorted
/// by sweep value and then equalizer.
pub fn run_campaign(campaign: &Campaign) -> Result<Vec<ResultRow>> {
    let mut equalizers = campaign.equalizers.clone();
    equalizers.sort();
    equalizers.dedup();
    let mut rows = Vec::new();
    for (value, outcomes) in run_trials(campaign)? {
        for &id in &equalizers {
            rows.push(aggregate(campaign, value, id, &outcomes));
        }
    }
    rows.sort_by(|a, b| {
        a.sweep_value
            .total_cmp(&b.sweep_value)
            .then_with(|| a.equalizer.cmp(&b.equalizer))
    });
    Ok(rows)
}
