//! Multi-objective MDP abstraction: environment trait, trajectory recording,
//! and discounted multi-objective returns.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::math;

/// Shape of a multi-objective MDP with a fixed finite horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct MoMdpSpec {
    pub state_dim: usize,
    pub action_dim: usize,
    pub num_objectives: usize,
    pub horizon: usize,
    pub gamma_disc: f64,
}

impl MoMdpSpec {
    pub fn new(
        state_dim: usize,
        action_dim: usize,
        num_objectives: usize,
        horizon: usize,
        gamma_disc: f64,
    ) -> Result<Self> {
        if state_dim == 0 || action_dim == 0 || num_objectives == 0 || horizon == 0 {
            return Err(CoreError::InvalidConfig {
                what: "MoMdpSpec dimensions and horizon must be >= 1",
            });
        }
        if !(gamma_disc > 0.0 && gamma_disc <= 1.0) {
            return Err(CoreError::InvalidConfig {
                what: "gamma_disc must lie in (0, 1]",
            });
        }
        Ok(MoMdpSpec {
            state_dim,
            action_dim,
            num_objectives,
            horizon,
            gamma_disc,
        })
    }
}

/// One recorded step: `(s, a, {r_j}, s', log pi(a|s))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub rewards: Vec<f64>,
    pub next_state: Vec<f64>,
    pub log_prob: f64,
}

/// Ordered transitions of one episode; step k's `next_state` is step k+1's
/// `state`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    transitions: Vec<Transition>,
}

impl Trajectory {
    pub fn new() -> Self {
        Trajectory::default()
    }

    pub fn push(&mut self, t: Transition) {
        self.transitions.push(t);
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    /// Checks the chaining invariant and finiteness of rewards.
    pub fn validate(&self) -> Result<()> {
        for w in self.transitions.windows(2) {
            if w[0].next_state != w[1].state {
                return Err(CoreError::InvalidConfig {
                    what: "trajectory chaining broken: next_state != following state",
                });
            }
        }
        for t in &self.transitions {
            if !math::all_finite(&t.rewards) {
                return Err(CoreError::NonFinite {
                    what: "trajectory rewards",
                });
            }
        }
        Ok(())
    }
}

/// A multi-objective environment. One instance per rollout worker; the RNG
/// stream is owned by the caller so rollouts stay reproducible per seed.
pub trait Environment {
    fn spec(&self) -> &MoMdpSpec;

    /// Returns the initial state; deterministic for a given RNG state.
    fn reset(&mut self, rng: &mut dyn rand::RngCore) -> Vec<f64>;

    /// Returns `(next_state, rewards)`. A NaN action is a caller bug and is
    /// reported as an input error.
    fn step(
        &mut self,
        state: &[f64],
        action: &[f64],
        rng: &mut dyn rand::RngCore,
    ) -> Result<(Vec<f64>, Vec<f64>)>;
}

/// Discounted suffix sums `R_j(t) = sum_{k=t}^{T} gamma^{k-t} r_j(k)`,
/// computed by the backward recursion `R(t) = r(t) + gamma * R(t+1)`.
pub fn discounted_returns(rewards_per_step: &[Vec<f64>], gamma_disc: f64) -> Result<Vec<Vec<f64>>> {
    if !(gamma_disc > 0.0 && gamma_disc <= 1.0) {
        return Err(CoreError::InvalidConfig {
            what: "gamma_disc must lie in (0, 1]",
        });
    }
    let t_len = rewards_per_step.len();
    if t_len == 0 {
        return Ok(Vec::new());
    }
    let r = rewards_per_step[0].len();
    let mut out = vec![vec![0.0; r]; t_len];
    for rw in rewards_per_step {
        if rw.len() != r {
            return Err(CoreError::DimMismatch {
                what: "rewards_per_step row",
                expected: r,
                got: rw.len(),
            });
        }
    }
    for k in (0..t_len).rev() {
        for j in 0..r {
            let tail = if k + 1 < t_len { out[k + 1][j] } else { 0.0 };
            out[k][j] = rewards_per_step[k][j] + gamma_disc * tail;
        }
    }
    Ok(out)
}

/// Adapter collapsing an inner environment's reward vector to the single
/// objective `sum_j scales_j * r_j`. Used by the r = 1 reduction checks.
pub struct ScalarizedEnv<E> {
    inner: E,
    scales: Vec<f64>,
    spec: MoMdpSpec,
}

impl<E: Environment> ScalarizedEnv<E> {
    pub fn new(inner: E, scales: Vec<f64>) -> Result<Self> {
        let inner_spec = inner.spec();
        if scales.len() != inner_spec.num_objectives {
            return Err(CoreError::DimMismatch {
                what: "ScalarizedEnv scales",
                expected: inner_spec.num_objectives,
                got: scales.len(),
            });
        }
        let spec = MoMdpSpec {
            num_objectives: 1,
            ..inner_spec.clone()
        };
        Ok(ScalarizedEnv {
            inner,
            scales,
            spec,
        })
    }
}

impl<E: Environment> Environment for ScalarizedEnv<E> {
    fn spec(&self) -> &MoMdpSpec {
        &self.spec
    }

    fn reset(&mut self, rng: &mut dyn rand::RngCore) -> Vec<f64> {
        self.inner.reset(rng)
    }

    fn step(
        &mut self,
        state: &[f64],
        action: &[f64],
        rng: &mut dyn rand::RngCore,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let (next, rewards) = self.inner.step(state, action, rng)?;
        Ok((next, vec![math::dot(&self.scales, &rewards)]))
    }
}
