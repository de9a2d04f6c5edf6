//! Minimal dense numeric kernel: a one-hidden-layer MLP with hand-written
//! backpropagation, parameter flattening, and a diagonal Gaussian policy head.
//!
//! Parameters live in a single flat [`ParamVector`] with the layout
//! `[W1 (hidden x input, row-major), b1, W2 (output x hidden, row-major), b2]`;
//! the Gaussian policy appends one learnable `log_std` entry per action
//! dimension. Forward and backward accumulate over the input index in
//! ascending order, which fixes the floating-point operation order relied on
//! by the bit-exact re-evaluation tests.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Deref;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{CoreError, Result};
use crate::math;

/// Flat vector of all learnable parameters of one network.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    /// Wraps a raw vector; every entry must be finite.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if !math::all_finite(&values) {
            return Err(CoreError::NonFinite { what: "ParamVector" });
        }
        Ok(ParamVector(values))
    }

    pub fn zeros(len: usize) -> Self {
        ParamVector(vec![0.0; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for ParamVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Hidden-layer activation. Only ReLU is needed here.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HiddenActivation {
    Relu,
}

/// Shape of a one-hidden-layer feed-forward network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub output_dim: usize,
    pub hidden_activation: HiddenActivation,
}

impl MlpSpec {
    pub fn new(input_dim: usize, hidden_dim: usize, output_dim: usize) -> Result<Self> {
        if input_dim == 0 || hidden_dim == 0 || output_dim == 0 {
            return Err(CoreError::InvalidConfig {
                what: "MlpSpec dimensions must be >= 1",
            });
        }
        Ok(MlpSpec {
            input_dim,
            hidden_dim,
            output_dim,
            hidden_activation: HiddenActivation::Relu,
        })
    }

    /// Total parameter count: `(input+1)*hidden + (hidden+1)*output`.
    pub fn param_count(&self) -> usize {
        (self.input_dim + 1) * self.hidden_dim + (self.hidden_dim + 1) * self.output_dim
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let w1_end = self.hidden_dim * self.input_dim;
        let b1_end = w1_end + self.hidden_dim;
        let w2_end = b1_end + self.output_dim * self.hidden_dim;
        (w1_end, b1_end, w2_end)
    }

    fn check(&self, params: &[f64], input: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(CoreError::DimMismatch {
                what: "mlp params",
                expected: self.param_count(),
                got: params.len(),
            });
        }
        if input.len() != self.input_dim {
            return Err(CoreError::DimMismatch {
                what: "mlp input",
                expected: self.input_dim,
                got: input.len(),
            });
        }
        Ok(())
    }

    /// Pre-activations of the hidden layer, `z1 = W1 x + b1`.
    fn hidden_pre(&self, params: &[f64], input: &[f64], z1: &mut [f64]) {
        let (w1_end, _, _) = self.offsets();
        let w1 = &params[..w1_end];
        let b1 = &params[w1_end..w1_end + self.hidden_dim];
        for h in 0..self.hidden_dim {
            let row = &w1[h * self.input_dim..(h + 1) * self.input_dim];
            z1[h] = b1[h] + math::dot(row, input);
        }
    }

    /// Deterministic forward pass `W2 relu(W1 x + b1) + b2`.
    pub fn forward(&self, params: &[f64], input: &[f64]) -> Result<Vec<f64>> {
        self.check(params, input)?;
        let mut z1 = vec![0.0; self.hidden_dim];
        self.hidden_pre(params, input, &mut z1);
        for z in z1.iter_mut() {
            if *z < 0.0 {
                *z = 0.0;
            }
        }
        let (_, b1_end, w2_end) = self.offsets();
        let w2 = &params[b1_end..w2_end];
        let b2 = &params[w2_end..];
        let mut out = vec![0.0; self.output_dim];
        for o in 0..self.output_dim {
            let row = &w2[o * self.hidden_dim..(o + 1) * self.hidden_dim];
            out[o] = b2[o] + math::dot(row, &z1);
        }
        Ok(out)
    }

    /// Gradient of `upstream . output` with respect to the parameters.
    pub fn backward(
        &self,
        params: &[f64],
        input: &[f64],
        upstream: &[f64],
    ) -> Result<ParamVector> {
        let mut grad = ParamVector::zeros(self.param_count());
        self.backward_acc(params, input, upstream, 1.0, grad.as_mut_slice())?;
        Ok(grad)
    }

    /// Accumulates `scale * d(upstream . output)/d(params)` into `acc`.
    ///
    /// This is the workhorse behind [`MlpSpec::backward`] and the gradient
    /// assemblies in `a2c`; it avoids allocating one gradient per call site.
    pub fn backward_acc(
        &self,
        params: &[f64],
        input: &[f64],
        upstream: &[f64],
        scale: f64,
        acc: &mut [f64],
    ) -> Result<()> {
        self.check(params, input)?;
        if upstream.len() != self.output_dim {
            return Err(CoreError::DimMismatch {
                what: "mlp upstream gradient",
                expected: self.output_dim,
                got: upstream.len(),
            });
        }
        if acc.len() != self.param_count() {
            return Err(CoreError::DimMismatch {
                what: "mlp gradient accumulator",
                expected: self.param_count(),
                got: acc.len(),
            });
        }
        let mut z1 = vec![0.0; self.hidden_dim];
        self.hidden_pre(params, input, &mut z1);
        let (w1_end, b1_end, w2_end) = self.offsets();
        let w2 = &params[b1_end..w2_end];

        // Output layer: dW2[o][h] = u[o]*relu(z1[h]), db2[o] = u[o].
        let (acc_head, acc_b2) = acc.split_at_mut(w2_end);
        let (acc_low, acc_w2) = acc_head.split_at_mut(b1_end);
        let (acc_w1, acc_b1) = acc_low.split_at_mut(w1_end);
        for o in 0..self.output_dim {
            let u = scale * upstream[o];
            let row = &mut acc_w2[o * self.hidden_dim..(o + 1) * self.hidden_dim];
            for h in 0..self.hidden_dim {
                let a = if z1[h] > 0.0 { z1[h] } else { 0.0 };
                row[h] += u * a;
            }
            acc_b2[o] += u;
        }
        // Hidden layer: dz1[h] = relu'(z1[h]) * sum_o u[o]*W2[o][h].
        for h in 0..self.hidden_dim {
            if z1[h] <= 0.0 {
                continue;
            }
            let mut dz = 0.0;
            for o in 0..self.output_dim {
                dz += upstream[o] * w2[o * self.hidden_dim + h];
            }
            dz *= scale;
            let row = &mut acc_w1[h * self.input_dim..(h + 1) * self.input_dim];
            for i in 0..self.input_dim {
                row[i] += dz * input[i];
            }
            acc_b1[h] += dz;
        }
        Ok(())
    }

    /// Seeded uniform init in `[-1/sqrt(fan_in), +1/sqrt(fan_in)]`.
    pub fn init_params(&self, rng: &mut crate::Rng) -> ParamVector {
        let mut p = vec![0.0; self.param_count()];
        let (w1_end, b1_end, _) = self.offsets();
        let bound1 = 1.0 / math::sqrt(self.input_dim as f64);
        for v in p[..b1_end].iter_mut() {
            *v = rng.gen_range(-bound1..bound1);
        }
        let bound2 = 1.0 / math::sqrt(self.hidden_dim as f64);
        for v in p[b1_end..].iter_mut() {
            *v = rng.gen_range(-bound2..bound2);
        }
        ParamVector(p)
    }
}

/// Structured view of the flat parameter layout.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpLayers {
    /// `hidden x input`, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// `output x hidden`, row-major.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

/// Splits a flat parameter vector into its layers.
pub fn unflatten(spec: &MlpSpec, params: &ParamVector) -> Result<MlpLayers> {
    if params.len() != spec.param_count() {
        return Err(CoreError::DimMismatch {
            what: "unflatten params",
            expected: spec.param_count(),
            got: params.len(),
        });
    }
    let (w1_end, b1_end, w2_end) = spec.offsets();
    Ok(MlpLayers {
        w1: params[..w1_end].to_vec(),
        b1: params[w1_end..b1_end].to_vec(),
        w2: params[b1_end..w2_end].to_vec(),
        b2: params[w2_end..].to_vec(),
    })
}

/// Inverse of [`unflatten`]; round-trips exactly.
pub fn flatten(layers: &MlpLayers) -> ParamVector {
    let mut p = Vec::with_capacity(
        layers.w1.len() + layers.b1.len() + layers.w2.len() + layers.b2.len(),
    );
    p.extend_from_slice(&layers.w1);
    p.extend_from_slice(&layers.b1);
    p.extend_from_slice(&layers.w2);
    p.extend_from_slice(&layers.b2);
    ParamVector(p)
}

/// Mean and clamped log-std of a diagonal Gaussian policy at one state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPolicyOutput {
    pub mean: Vec<f64>,
    pub log_std: Vec<f64>,
}

/// Diagonal Gaussian policy: state-dependent mean from an MLP, one learnable
/// state-independent `log_std` per action dimension appended to the flat
/// parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPolicy {
    pub mlp: MlpSpec,
    pub log_std_min: f64,
    pub log_std_max: f64,
}

impl GaussianPolicy {
    pub fn new(
        state_dim: usize,
        hidden_dim: usize,
        action_dim: usize,
        log_std_min: f64,
        log_std_max: f64,
    ) -> Result<Self> {
        if log_std_min >= log_std_max {
            return Err(CoreError::InvalidConfig {
                what: "log_std clamp range must satisfy min < max",
            });
        }
        Ok(GaussianPolicy {
            mlp: MlpSpec::new(state_dim, hidden_dim, action_dim)?,
            log_std_min,
            log_std_max,
        })
    }

    pub fn action_dim(&self) -> usize {
        self.mlp.output_dim
    }

    pub fn param_count(&self) -> usize {
        self.mlp.param_count() + self.action_dim()
    }

    /// MLP init for the mean head; `log_std` entries start at `log_std_init`.
    pub fn init_params(&self, log_std_init: f64, rng: &mut crate::Rng) -> ParamVector {
        let mut p = self.mlp.init_params(rng).into_vec();
        p.resize(self.param_count(), log_std_init);
        ParamVector(p)
    }

    pub fn forward(&self, params: &ParamVector, state: &[f64]) -> Result<GaussianPolicyOutput> {
        if params.len() != self.param_count() {
            return Err(CoreError::DimMismatch {
                what: "policy params",
                expected: self.param_count(),
                got: params.len(),
            });
        }
        let mean = self.mlp.forward(&params[..self.mlp.param_count()], state)?;
        let log_std = params[self.mlp.param_count()..]
            .iter()
            .map(|&v| v.clamp(self.log_std_min, self.log_std_max))
            .collect();
        Ok(GaussianPolicyOutput { mean, log_std })
    }

    /// Log-probability of `action` plus `scale * d(log pi)/d(params)`
    /// accumulated into `acc`.
    ///
    /// Gradient flows into the mean head through the MLP and into the raw
    /// `log_std` entries wherever the clamp is inactive.
    pub fn log_prob_acc(
        &self,
        params: &ParamVector,
        state: &[f64],
        action: &[f64],
        scale: f64,
        acc: &mut [f64],
    ) -> Result<f64> {
        let out = self.forward(params, state)?;
        if acc.len() != self.param_count() {
            return Err(CoreError::DimMismatch {
                what: "policy gradient accumulator",
                expected: self.param_count(),
                got: acc.len(),
            });
        }
        let lp = gaussian_logprob(&out, action)?;
        // d logpi / d mean_d = (a_d - mu_d)/sigma_d^2
        let mut upstream = vec![0.0; self.action_dim()];
        for d in 0..self.action_dim() {
            let sigma = math::exp(out.log_std[d]);
            upstream[d] = (action[d] - out.mean[d]) / (sigma * sigma);
        }
        let mlp_n = self.mlp.param_count();
        self.mlp
            .backward_acc(&params[..mlp_n], state, &upstream, scale, &mut acc[..mlp_n])?;
        // d logpi / d log_std_d = (a_d - mu_d)^2/sigma_d^2 - 1, zero when clamped.
        for d in 0..self.action_dim() {
            let raw = params[mlp_n + d];
            if raw > self.log_std_min && raw < self.log_std_max {
                let sigma = math::exp(out.log_std[d]);
                let z = (action[d] - out.mean[d]) / sigma;
                acc[mlp_n + d] += scale * (z * z - 1.0);
            }
        }
        Ok(lp)
    }
}

/// Diagonal Gaussian log-density:
/// `sum_d [ -(a_d-mu_d)^2/(2 sigma_d^2) - log sigma_d - 0.5 log(2 pi) ]`.
pub fn gaussian_logprob(out: &GaussianPolicyOutput, action: &[f64]) -> Result<f64> {
    if action.len() != out.mean.len() || out.log_std.len() != out.mean.len() {
        return Err(CoreError::DimMismatch {
            what: "gaussian_logprob action",
            expected: out.mean.len(),
            got: action.len(),
        });
    }
    let mut lp = 0.0;
    for d in 0..action.len() {
        let sigma = math::exp(out.log_std[d]);
        let z = (action[d] - out.mean[d]) / sigma;
        lp += -0.5 * z * z - out.log_std[d] - 0.5 * math::LN_2PI;
    }
    Ok(lp)
}

/// Draws `a = mean + sigma .* z` with `z` i.i.d. standard normal.
pub fn sample_action(out: &GaussianPolicyOutput, rng: &mut dyn rand::RngCore) -> Vec<f64> {
    out.mean
        .iter()
        .zip(&out.log_std)
        .map(|(&m, &ls)| {
            let z: f64 = StandardNormal.sample(rng);
            m + math::exp(ls) * z
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn pv(v: &[f64]) -> ParamVector {
        ParamVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn zero_params_give_zero_output() {
        let spec = MlpSpec::new(3, 4, 2).unwrap();
        let params = ParamVector::zeros(spec.param_count());
        let out = spec.forward(&params, &[1.0, -2.0, 0.5]).unwrap();
        assert_eq!(out, vec![0.0, 0.0]);
    }

    #[test]
    fn identity_like_1_1_1_net_passes_positive_input() {
        let spec = MlpSpec::new(1, 1, 1).unwrap();
        // layout: [w1, b1, w2, b2]
        let params = pv(&[1.0, 0.0, 1.0, 0.0]);
        let out = spec.forward(&params, &[2.0]).unwrap();
        assert_eq!(out[0], 2.0);
        // negative input is cut by the ReLU
        let out = spec.forward(&params, &[-2.0]).unwrap();
        assert_eq!(out[0], 0.0);
    }

    #[test]
    fn forward_matches_straight_line_reevaluation_bitwise() {
        let mut rng = crate::Rng::seed_from_u64(11);
        for _ in 0..20 {
            let spec = MlpSpec::new(
                rng.gen_range(1..6),
                rng.gen_range(1..8),
                rng.gen_range(1..5),
            )
            .unwrap();
            let params = spec.init_params(&mut rng);
            let input: Vec<f64> = (0..spec.input_dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let out = spec.forward(&params, &input).unwrap();

            // Independent re-evaluation with identical accumulation order.
            let l = unflatten(&spec, &params).unwrap();
            let mut h = vec![0.0; spec.hidden_dim];
            for j in 0..spec.hidden_dim {
                let mut z = l.b1[j];
                for i in 0..spec.input_dim {
                    z += l.w1[j * spec.input_dim + i] * input[i];
                }
                h[j] = if z > 0.0 { z } else { 0.0 };
            }
            for o in 0..spec.output_dim {
                let mut y = l.b2[o];
                for j in 0..spec.hidden_dim {
                    y += l.w2[o * spec.hidden_dim + j] * h[j];
                }
                assert_eq!(y, out[o], "bitwise forward mismatch");
            }
        }
    }

    #[test]
    fn backward_zero_upstream_gives_zero_gradient() {
        let mut rng = crate::Rng::seed_from_u64(3);
        let spec = MlpSpec::new(2, 3, 2).unwrap();
        let params = spec.init_params(&mut rng);
        let g = spec.backward(&params, &[0.3, -0.7], &[0.0, 0.0]).unwrap();
        assert!(g.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn backward_single_path_chain_rule() {
        let spec = MlpSpec::new(1, 1, 1).unwrap();
        let params = pv(&[2.0, 0.5, 3.0, 0.0]);
        // hidden activation = relu(2*1.5+0.5) = 3.5; dW2 = u * 3.5
        let g = spec.backward(&params, &[1.5], &[1.0]).unwrap();
        let (w1_end, b1_end, _) = spec.offsets();
        assert_eq!(g[b1_end], 3.5); // dW2
        assert_eq!(g[w1_end], 3.0); // db1 = u*W2*relu' = 3
        assert_eq!(g[0], 3.0 * 1.5); // dW1 = db1 * x
    }

    fn finite_diff_check(spec: &MlpSpec, params: &ParamVector, input: &[f64], upstream: &[f64]) {
        let analytic = spec.backward(params, input, upstream).unwrap();
        let eps = 1e-5;
        for k in 0..params.len() {
            let mut plus = params.clone();
            plus.as_mut_slice()[k] += eps;
            let mut minus = params.clone();
            minus.as_mut_slice()[k] -= eps;
            let f = |p: &ParamVector| -> f64 {
                let out = spec.forward(p, input).unwrap();
                math::dot(&out, upstream)
            };
            let num = (f(&plus) - f(&minus)) / (2.0 * eps);
            let denom = num.abs().max(analytic[k].abs()).max(1e-8);
            assert!(
                (num - analytic[k]).abs() / denom <= 1e-5,
                "param {k}: numeric {num} vs analytic {}",
                analytic[k]
            );
        }
    }

    #[test]
    fn backward_matches_central_finite_differences() {
        let mut rng = crate::Rng::seed_from_u64(42);
        for _ in 0..10 {
            let spec = MlpSpec::new(
                rng.gen_range(1..5),
                rng.gen_range(1..6),
                rng.gen_range(1..4),
            )
            .unwrap();
            let params = spec.init_params(&mut rng);
            let input: Vec<f64> = (0..spec.input_dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let upstream: Vec<f64> =
                (0..spec.output_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            finite_diff_check(&spec, &params, &input, &upstream);
        }
    }

    #[test]
    fn flatten_unflatten_roundtrip_is_exact() {
        let mut rng = crate::Rng::seed_from_u64(9);
        let spec = MlpSpec::new(4, 7, 3).unwrap();
        let params = spec.init_params(&mut rng);
        let layers = unflatten(&spec, &params).unwrap();
        assert_eq!(flatten(&layers), params);
    }

    #[test]
    fn logprob_standard_normal_values() {
        let out = GaussianPolicyOutput {
            mean: vec![0.0],
            log_std: vec![0.0],
        };
        let lp0 = gaussian_logprob(&out, &[0.0]).unwrap();
        assert!((lp0 - (-0.9189385)).abs() < 1e-6);
        let lp1 = gaussian_logprob(&out, &[1.0]).unwrap();
        assert!((lp1 - (-1.4189385)).abs() < 1e-6);
        let out2 = GaussianPolicyOutput {
            mean: vec![0.0, 0.0],
            log_std: vec![0.0, 0.0],
        };
        let lp2 = gaussian_logprob(&out2, &[0.0, 1.0]).unwrap();
        assert!((lp2 - (-2.3378771)).abs() < 1e-6);
    }

    #[test]
    fn sampling_is_deterministic_per_seed_and_degenerate_at_std_floor() {
        let policy = GaussianPolicy::new(2, 3, 2, -40.0, 2.0).unwrap();
        let mut rng = crate::Rng::seed_from_u64(5);
        let params = policy.init_params(-39.0, &mut rng);
        let state = [0.4, -0.2];
        let out = policy.forward(&params, &state).unwrap();

        let mut r1 = crate::Rng::seed_from_u64(123);
        let mut r2 = crate::Rng::seed_from_u64(123);
        let a1 = sample_action(&out, &mut r1);
        let a2 = sample_action(&out, &mut r2);
        assert_eq!(a1, a2);

        // std = e^-39: action within 6 std-floors of the mean
        let floor = math::exp(-39.0);
        for d in 0..2 {
            assert!((a1[d] - out.mean[d]).abs() <= 6.0 * floor);
        }
    }

    #[test]
    fn sampling_monte_carlo_moments() {
        let out = GaussianPolicyOutput {
            mean: vec![0.0],
            log_std: vec![0.0],
        };
        let mut rng = crate::Rng::seed_from_u64(77);
        let n = 100_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let a = sample_action(&out, &mut rng)[0];
            sum += a;
            sumsq += a * a;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn policy_logprob_gradient_matches_finite_differences() {
        let policy = GaussianPolicy::new(3, 4, 2, -5.0, 2.0).unwrap();
        let mut rng = crate::Rng::seed_from_u64(21);
        let params = policy.init_params(-0.3, &mut rng);
        let state = [0.2, -0.5, 1.1];
        let action = [0.7, -0.4];

        let mut grad = vec![0.0; policy.param_count()];
        policy
            .log_prob_acc(&params, &state, &action, 1.0, &mut grad)
            .unwrap();

        let eps = 1e-6;
        for k in 0..params.len() {
            let mut plus = params.clone();
            plus.as_mut_slice()[k] += eps;
            let mut minus = params.clone();
            minus.as_mut_slice()[k] -= eps;
            let f = |p: &ParamVector| {
                let out = policy.forward(p, &state).unwrap();
                gaussian_logprob(&out, &action).unwrap()
            };
            let num = (f(&plus) - f(&minus)) / (2.0 * eps);
            let denom = num.abs().max(grad[k].abs()).max(1e-8);
            assert!(
                (num - grad[k]).abs() / denom <= 1e-4,
                "param {k}: numeric {num} vs analytic {}",
                grad[k]
            );
        }
    }
}
