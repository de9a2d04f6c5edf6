//! Surrogate edge-caching environment with three conflicting objectives.
//!
//! A cellular network proactively caches files at base stations. The state is
//! the vector of file request probabilities; the action chooses per-file cache
//! probabilities and radio bandwidth. Rewards (all nonpositive):
//!
//! - QoS: negated expected fraction of requests not served from caches;
//! - BW: negated total allocated bandwidth;
//! - BH: the unserved fraction again (reactive core-network fetches) plus a
//!   cache-fill charge on newly cached probability mass.
//!
//! The reception-outage law is a closed-form surrogate
//! `O = exp(-kappa * lambda_b * p * w/(w + w0))` with the physical
//! monotonicities (more caching or bandwidth, fewer outages) rather than a
//! physical-layer model. Request dynamics mix a Zipf popularity profile with
//! log-normal perturbations and re-requests from unserved demand.

use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};

use crate::env::{Environment, MoMdpSpec};
use crate::error::{CoreError, Result};
use crate::math;

pub const NUM_OBJECTIVES: usize = 3;

/// Environment parameters. `num_files`/`cache_capacity`/intensities follow the
/// paper-scale experiment; the remaining knobs parameterize the surrogate.
#[derive(Debug, Clone, PartialEq)]
pub struct CacheEnvConfig {
    /// Library size N.
    pub num_files: usize,
    /// Per-station cache capacity M (files), M <= N.
    pub cache_capacity: usize,
    /// Base-station spatial intensity lambda_b (points/km^2).
    pub bs_intensity: f64,
    /// User spatial intensity lambda_u (points/km^2). Kept for config parity;
    /// the surrogate outage law uses `bs_intensity` only.
    pub user_intensity: f64,
    /// Episode length T.
    pub horizon: usize,
    /// Discount factor of the induced MDP.
    pub gamma_disc: f64,
    /// Outage exponent scale kappa.
    pub outage_scale: f64,
    /// Bandwidth half-saturation w0 in `w/(w + w0)`.
    pub bandwidth_halfsat: f64,
    /// Backhaul charge per unit of newly cached probability mass.
    pub fill_cost: f64,
    /// Zipf popularity exponent.
    pub popularity_exponent: f64,
    /// Log-normal perturbation scale of the request dynamics.
    pub popularity_noise: f64,
    /// Fraction of unserved demand re-requested next slot, in [0, 1).
    pub rerequest_gain: f64,
}

impl Default for CacheEnvConfig {
    /// Desk-scale defaults; see [`CacheEnvConfig::paper_scale`] for the
    /// published experiment dimensions.
    fn default() -> Self {
        CacheEnvConfig {
            num_files: 20,
            cache_capacity: 2,
            bs_intensity: 10.0,
            user_intensity: 1e5,
            horizon: 64,
            gamma_disc: 0.96,
            outage_scale: 0.5,
            bandwidth_halfsat: 1.0,
            fill_cost: 0.5,
            popularity_exponent: 0.8,
            popularity_noise: 0.1,
            rerequest_gain: 0.2,
        }
    }
}

impl CacheEnvConfig {
    /// N = 100 files, M = 10 cache slots, T = 256 slots.
    pub fn paper_scale() -> Self {
        CacheEnvConfig {
            num_files: 100,
            cache_capacity: 10,
            horizon: 256,
            ..CacheEnvConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_files == 0 || self.cache_capacity == 0 || self.horizon == 0 {
            return Err(CoreError::InvalidConfig {
                what: "cache env sizes must be >= 1",
            });
        }
        if self.cache_capacity > self.num_files {
            return Err(CoreError::InvalidConfig {
                what: "cache_capacity must not exceed num_files",
            });
        }
        if !(self.gamma_disc > 0.0 && self.gamma_disc <= 1.0) {
            return Err(CoreError::InvalidConfig {
                what: "gamma_disc must lie in (0, 1]",
            });
        }
        let positive = [
            self.bs_intensity,
            self.user_intensity,
            self.outage_scale,
            self.bandwidth_halfsat,
            self.popularity_exponent,
        ];
        if positive.iter().any(|&v| !(v > 0.0)) {
            return Err(CoreError::InvalidConfig {
                what: "cache env intensities/scales must be > 0",
            });
        }
        if !(self.fill_cost >= 0.0) || !(self.popularity_noise >= 0.0) {
            return Err(CoreError::InvalidConfig {
                what: "fill_cost and popularity_noise must be >= 0",
            });
        }
        if !(self.rerequest_gain >= 0.0 && self.rerequest_gain < 1.0) {
            return Err(CoreError::InvalidConfig {
                what: "rerequest_gain must lie in [0, 1)",
            });
        }
        Ok(())
    }
}

/// Per-file request probabilities; entries in [0, 1], sum at most 1.
#[derive(Debug, Clone, PartialEq)]
pub struct CacheState {
    pub request_probs: Vec<f64>,
}

/// Feasible action after squashing: cache probabilities within capacity and
/// nonnegative bandwidths.
#[derive(Debug, Clone, PartialEq)]
pub struct CacheAction {
    pub cache_probs: Vec<f64>,
    pub bandwidths: Vec<f64>,
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + math::exp(-x))
    } else {
        let e = math::exp(x);
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else if x < -30.0 {
        math::exp(x)
    } else {
        math::ln_1p(math::exp(x))
    }
}

/// Maps a raw 2N-vector into the feasible action set: `p = logistic(raw)`
/// per file, `w = softplus(raw)`, then cache capacity projection
/// `p <- p * min(1, M / sum p)`.
pub fn squash_action(raw: &[f64], cfg: &CacheEnvConfig) -> Result<CacheAction> {
    let n = cfg.num_files;
    if raw.len() != 2 * n {
        return Err(CoreError::DimMismatch {
            what: "raw cache action",
            expected: 2 * n,
            got: raw.len(),
        });
    }
    if !math::all_finite(raw) {
        return Err(CoreError::NonFinite { what: "raw cache action" });
    }
    let mut cache_probs: Vec<f64> = raw[..n].iter().map(|&x| logistic(x)).collect();
    let total: f64 = cache_probs.iter().sum();
    if total > cfg.cache_capacity as f64 {
        let shrink = cfg.cache_capacity as f64 / total;
        for p in cache_probs.iter_mut() {
            *p *= shrink;
        }
    }
    let bandwidths = raw[n..].iter().map(|&x| softplus(x)).collect();
    Ok(CacheAction {
        cache_probs,
        bandwidths,
    })
}

/// Surrogate reception outage `exp(-kappa * lambda_b * p * w/(w + w0))`:
/// 1 when the file is uncached or unserved, strictly decreasing in both `p`
/// and `w`, saturating as `w` grows.
pub fn outage_probability(cache_prob: f64, bandwidth: f64, cfg: &CacheEnvConfig) -> f64 {
    let served = bandwidth / (bandwidth + cfg.bandwidth_halfsat);
    math::exp(-cfg.outage_scale * cfg.bs_intensity * cache_prob * served)
}

/// The three nonpositive rewards `(r_QoS, r_BW, r_BH)` for one step.
///
/// `prev_cache_probs` is the previous slot's cache placement; the positive
/// part of the change is charged to the backhaul as cache-fill traffic.
pub fn rewards(
    state: &[f64],
    action: &CacheAction,
    prev_cache_probs: &[f64],
    cfg: &CacheEnvConfig,
) -> [f64; NUM_OBJECTIVES] {
    let n = cfg.num_files;
    debug_assert_eq!(state.len(), n);
    debug_assert_eq!(prev_cache_probs.len(), n);
    let mut unserved = 0.0;
    let mut bandwidth_total = 0.0;
    let mut fill = 0.0;
    for i in 0..n {
        let o = outage_probability(action.cache_probs[i], action.bandwidths[i], cfg);
        unserved += state[i] * o;
        bandwidth_total += action.bandwidths[i];
        let dp = action.cache_probs[i] - prev_cache_probs[i];
        if dp > 0.0 {
            fill += dp;
        }
    }
    [
        -unserved,
        -bandwidth_total,
        -(unserved + cfg.fill_cost * fill),
    ]
}

/// Next request probabilities: Zipf popularity with log-normal perturbation
/// plus re-requested unserved demand, renormalized to the previous total
/// (capped at 1) and clipped to [0, 1].
pub fn transition(
    state: &[f64],
    action: &CacheAction,
    cfg: &CacheEnvConfig,
    zipf: &[f64],
    rng: &mut dyn rand::RngCore,
) -> Vec<f64> {
    let n = cfg.num_files;
    let mut unnorm = vec![0.0; n];
    let mut mass = 0.0;
    for i in 0..n {
        let xi: f64 = StandardNormal.sample(rng);
        let o = outage_probability(action.cache_probs[i], action.bandwidths[i], cfg);
        unnorm[i] = zipf[i] * math::exp(cfg.popularity_noise * xi)
            + cfg.rerequest_gain * state[i] * o;
        mass += unnorm[i];
    }
    let prev_total: f64 = state.iter().sum();
    let target = prev_total.min(1.0);
    let scale = if mass > 0.0 { target / mass } else { 0.0 };
    unnorm
        .iter()
        .map(|&u| (u * scale).clamp(0.0, 1.0))
        .collect()
}

/// Normalized Zipf popularity profile `zipf_i ~ 1/(i+1)^s`.
pub fn zipf_profile(n: usize, exponent: f64) -> Vec<f64> {
    let mut z: Vec<f64> = (0..n)
        .map(|i| math::powf((i + 1) as f64, -exponent))
        .collect();
    let total: f64 = z.iter().sum();
    for v in z.iter_mut() {
        *v /= total;
    }
    z
}

/// The edge-caching environment. Holds the previous cache placement so the
/// backhaul fill charge spans consecutive slots; caches start cold (all
/// zeros) at every reset.
pub struct CacheEnv {
    cfg: CacheEnvConfig,
    spec: MoMdpSpec,
    zipf: Vec<f64>,
    prev_cache_probs: Vec<f64>,
}

impl CacheEnv {
    pub fn new(cfg: CacheEnvConfig) -> Result<Self> {
        cfg.validate()?;
        let spec = MoMdpSpec::new(
            cfg.num_files,
            2 * cfg.num_files,
            NUM_OBJECTIVES,
            cfg.horizon,
            cfg.gamma_disc,
        )?;
        let zipf = zipf_profile(cfg.num_files, cfg.popularity_exponent);
        let prev = vec![0.0; cfg.num_files];
        Ok(CacheEnv {
            cfg,
            spec,
            zipf,
            prev_cache_probs: prev,
        })
    }

    pub fn config(&self) -> &CacheEnvConfig {
        &self.cfg
    }
}

impl Environment for CacheEnv {
    fn spec(&self) -> &MoMdpSpec {
        &self.spec
    }

    fn reset(&mut self, rng: &mut dyn rand::RngCore) -> Vec<f64> {
        for p in self.prev_cache_probs.iter_mut() {
            *p = 0.0;
        }
        let n = self.cfg.num_files;
        let mut s = vec![0.0; n];
        let mut mass = 0.0;
        for i in 0..n {
            let xi: f64 = StandardNormal.sample(rng);
            s[i] = self.zipf[i] * math::exp(self.cfg.popularity_noise * xi);
            mass += s[i];
        }
        for v in s.iter_mut() {
            *v /= mass;
        }
        s
    }

    fn step(
        &mut self,
        state: &[f64],
        action: &[f64],
        rng: &mut dyn rand::RngCore,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        if state.len() != self.cfg.num_files {
            return Err(CoreError::DimMismatch {
                what: "cache env state",
                expected: self.cfg.num_files,
                got: state.len(),
            });
        }
        let squashed = squash_action(action, &self.cfg)?;
        let r = rewards(state, &squashed, &self.prev_cache_probs, &self.cfg);
        let next = transition(state, &squashed, &self.cfg, &self.zipf, rng);
        self.prev_cache_probs.copy_from_slice(&squashed.cache_probs);
        Ok((next, r.to_vec()))
    }
}
