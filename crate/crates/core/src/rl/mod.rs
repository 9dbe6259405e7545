//! Discrete-gate disentanglement by policy-gradient reinforcement learning.
//!
//! For every sequence a fresh policy network proposes action sequences of
//! length `L`. The input to the network is the list of actions chosen so
//! far, one-hot encoded slot by slot. An episode's reward is the probability
//! that the measured qubit reads 0 after all of its actions, and the policy is
//! trained with the REINFORCE loss `−Σ log P(a) · R`. Training on a
//! sequence stops at the first sampled episode in which some prefix of the
//! actions brings that probability to `reward_stop`; the winning sequence is
//! cut after that prefix.

mod policy;

pub use policy::{softmax, PolicyNet};

use log::{debug, info};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::action::{action_set, apply_actions_inverse, Action};
use crate::error::{Error, Result};
use crate::optim::{Adam, AdamConfig};
use crate::state::StateVector;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RlConfig {
    /// Actions per episode (L).
    pub episode_len: usize,
    /// Episodes sampled per epoch.
    pub dataset_size: usize,
    /// Training epochs allowed per sequence (T).
    pub epochs_per_sequence: usize,
    pub reward_stop: f64,
    pub policy_learning_rate: f64,
    pub hidden_sizes: Vec<usize>,
}

impl Default for RlConfig {
    fn default() -> Self {
        Self {
            episode_len: 10,
            dataset_size: 50,
            epochs_per_sequence: 100,
            reward_stop: 1.0 - 1e-6,
            policy_learning_rate: 0.003,
            hidden_sizes: vec![64, 64],
        }
    }
}

impl RlConfig {
    pub fn validate(&self) -> Result<()> {
        if self.episode_len == 0 || self.dataset_size == 0 || self.epochs_per_sequence == 0 {
            return Err(Error::invalid(
                "episode length, dataset size and epochs must be positive",
            ));
        }
        if !(self.reward_stop > 0.0 && self.reward_stop <= 1.0) {
            return Err(Error::invalid(format!(
                "reward stop {} outside (0, 1]",
                self.reward_stop
            )));
        }
        if self.hidden_sizes.iter().any(|&h| h == 0) {
            return Err(Error::invalid("hidden layer sizes must be positive"));
        }
        AdamConfig {
            learning_rate: self.policy_learning_rate,
            ..AdamConfig::default()
        }
        .validate()
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.policy_learning_rate,
            ..AdamConfig::default()
        }
    }
}

/// One-hot encoding of the actions chosen so far: `episode_len` slots of
/// `n_actions + 1` symbols, where symbol `k < n_actions` is action `k` and
/// symbol `n_actions` marks an empty slot.
pub fn encode_state(chosen: &[usize], episode_len: usize, n_actions: usize) -> Result<Vec<f64>> {
    if chosen.len() > episode_len {
        return Err(Error::invalid(format!(
            "{} actions do not fit in {episode_len} slots",
            chosen.len()
        )));
    }
    let width = n_actions + 1;
    let mut x = vec![0.0; episode_len * width];
    for slot in 0..episode_len {
        let symbol = match chosen.get(slot) {
            Some(&k) if k < n_actions => k,
            Some(&k) => {
                return Err(Error::invalid(format!(
                    "action index {k} out of range for {n_actions} actions"
                )))
            }
            None => n_actions,
        };
        x[slot * width + symbol] = 1.0;
    }
    Ok(x)
}

/// A sampled action sequence and its outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct Episode {
    pub actions: Vec<Action>,
    pub chosen_indices: Vec<usize>,
    /// P(last qubit = 0) after each step.
    pub step_probs: Vec<f64>,
    /// P(last qubit = 0) after the whole sequence.
    pub reward: f64,
}

impl Episode {
    /// Number of leading actions needed to first reach `threshold`, if ever.
    pub fn steps_to_reach(&self, threshold: f64) -> Option<usize> {
        self.step_probs.iter().position(|p| *p >= threshold).map(|t| t + 1)
    }
}

fn check_net(net: &PolicyNet, episode_len: usize, n_actions: usize) -> Result<()> {
    if net.input_dim() != episode_len * (n_actions + 1) || net.output_dim() != n_actions {
        return Err(Error::invalid(format!(
            "policy shape {}→{} does not match L = {episode_len}, d = {n_actions}",
            net.input_dim(),
            net.output_dim()
        )));
    }
    Ok(())
}

/// Rolls out `episode_len` actions drawn from the policy.
pub fn sample_episode<R: Rng + ?Sized>(
    net: &PolicyNet,
    input_state: &StateVector,
    actions: &[Action],
    episode_len: usize,
    rng: &mut R,
) -> Result<Episode> {
    let d = actions.len();
    check_net(net, episode_len, d)?;
    let mut state = input_state.clone();
    let mut chosen = Vec::with_capacity(episode_len);
    let mut step_probs = Vec::with_capacity(episode_len);
    for _ in 0..episode_len {
        let probs = net.forward(&encode_state(&chosen, episode_len, d)?)?;
        let dist = WeightedIndex::new(&probs)
            .map_err(|e| Error::invalid(format!("bad policy output: {e}")))?;
        let k = dist.sample(rng);
        actions[k].apply(&mut state)?;
        chosen.push(k);
        step_probs.push(state.prob_last_zero());
    }
    let reward = state.prob_last_zero().clamp(0.0, 1.0);
    Ok(Episode {
        actions: chosen.iter().map(|&k| actions[k]).collect(),
        chosen_indices: chosen,
        step_probs,
        reward,
    })
}

/// REINFORCE loss `−Σ_episodes Σ_steps log P(a_t | S_t) · R` under the current
/// network, with its gradient.
pub fn policy_loss(episodes: &[Episode], net: &PolicyNet, episode_len: usize) -> Result<(f64, Vec<f64>)> {
    if episodes.is_empty() {
        return Err(Error::invalid("policy loss needs at least one episode"));
    }
    let d = net.output_dim();
    check_net(net, episode_len, d)?;
    let mut grad = vec![0.0; net.n_params()];
    let mut loss = 0.0;
    for ep in episodes {
        for t in 0..ep.chosen_indices.len() {
            let x = encode_state(&ep.chosen_indices[..t], episode_len, d)?;
            loss += net.accumulate_nll(&x, ep.chosen_indices[t], ep.reward, &mut grad)?;
        }
    }
    Ok((loss, grad))
}

/// Result of training one sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RlSequenceResult {
    pub n_active: usize,
    /// Best episode reward per epoch.
    pub reward_max_history: Vec<f64>,
    /// Mean episode reward per epoch.
    pub reward_mean_history: Vec<f64>,
    /// Winning actions, truncated after the first step that reaches
    /// `reward_stop`. Empty when the input was already disentangled.
    pub winning_actions: Vec<Action>,
    /// P(last qubit = 0) after the truncated winning sequence.
    pub winning_reward: Option<f64>,
    /// Epoch (1-based) in which the winner was sampled; 0 when no training
    /// was needed; `None` when no episode won within the epoch budget.
    pub stop_epoch: Option<usize>,
}

impl RlSequenceResult {
    pub fn succeeded(&self) -> bool {
        self.stop_epoch.is_some()
    }
}

/// Trains a fresh policy until one sampled episode disentangles the last
/// qubit of `input_state`, or the epoch budget runs out.
pub fn train_rl_sequence<R: Rng + ?Sized>(
    input_state: &StateVector,
    cfg: &RlConfig,
    rng: &mut R,
) -> Result<RlSequenceResult> {
    cfg.validate()?;
    let n = input_state.n_qubits();
    let actions = action_set(n)?;
    let d = actions.len();
    let mut result = RlSequenceResult {
        n_active: n,
        reward_max_history: Vec::new(),
        reward_mean_history: Vec::new(),
        winning_actions: Vec::new(),
        winning_reward: None,
        stop_epoch: None,
    };
    let initial = input_state.prob_last_zero();
    if initial >= cfg.reward_stop {
        result.winning_reward = Some(initial);
        result.stop_epoch = Some(0);
        return Ok(result);
    }

    let l = cfg.episode_len;
    let mut net = PolicyNet::new(l * (d + 1), &cfg.hidden_sizes, d, rng)?;
    let mut adam = Adam::new(cfg.adam(), net.n_params())?;
    for epoch in 1..=cfg.epochs_per_sequence {
        let seeds: Vec<u64> = (0..cfg.dataset_size).map(|_| rng.random()).collect();
        let episodes = seeds
            .par_iter()
            .map(|&s| sample_episode(&net, input_state, &actions, l, &mut crate::seeded_rng(s)))
            .collect::<Result<Vec<_>>>()?;
        let max = episodes.iter().map(|e| e.reward).fold(0.0, f64::max);
        let mean = episodes.iter().map(|e| e.reward).sum::<f64>() / episodes.len() as f64;
        result.reward_max_history.push(max);
        result.reward_mean_history.push(mean);
        debug!("n_active={n} epoch={epoch} max_reward={max:.6} mean_reward={mean:.4}");

        // Judged on prefixes: with a fixed even L some targets (GHZ on an odd
        // number of qubits) are only disentangled after an odd number of steps.
        let winner = episodes
            .iter()
            .find_map(|e| e.steps_to_reach(cfg.reward_stop).map(|keep| (e, keep)));
        if let Some((winner, keep)) = winner {
            result.winning_actions = winner.actions[..keep].to_vec();
            result.winning_reward = Some(winner.step_probs[keep - 1]);
            result.stop_epoch = Some(epoch);
            info!("n_active={n}: disentangled at epoch {epoch} with {keep} actions");
            return Ok(result);
        }

        let (_, grad) = policy_loss(&episodes, &net, l)?;
        adam.step(net.params_mut(), &grad)?;
    }
    info!("n_active={n}: no disentangling sequence within {} epochs", cfg.epochs_per_sequence);
    Ok(result)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RlRecord {
    pub config: RlConfig,
    pub n_qubits: usize,
    /// One entry per trained sequence, subsystem sizes `n, n−1, …, 2`.
    pub sequences: Vec<RlSequenceResult>,
    /// The single qubit left after the last sequence. The discrete set has no
    /// way to rotate it, so it is kept as-is.
    pub final_qubit: Option<StateVector>,
    /// P(final qubit = 1).
    pub final_residual: Option<f64>,
    pub success: bool,
}

/// Runs RL sequences on subsystems of `n, n−1, …, 2` qubits, projecting out the
/// disentangled qubit after each. Stops at the first synthesis failure.
pub fn rl_disentangle<R: Rng + ?Sized>(
    psi: &StateVector,
    cfg: &RlConfig,
    rng: &mut R,
) -> Result<RlRecord> {
    cfg.validate()?;
    let n = psi.n_qubits();
    if n < 2 {
        return Err(Error::invalid("RL disentanglement needs at least 2 qubits"));
    }
    let mut current = psi.clone();
    let mut sequences = Vec::with_capacity(n - 1);
    let mut success = true;
    for _ in 0..n - 1 {
        let seq = train_rl_sequence(&current, cfg, rng)?;
        if !seq.succeeded() {
            sequences.push(seq);
            success = false;
            break;
        }
        for a in &seq.winning_actions {
            a.apply(&mut current)?;
        }
        current = current.project_out_last()?.0;
        sequences.push(seq);
    }
    let (final_qubit, final_residual) = if success {
        let residual = current.prob_last_one();
        (Some(current), Some(residual))
    } else {
        (None, None)
    };
    Ok(RlRecord {
        config: cfg.clone(),
        n_qubits: n,
        sequences,
        final_qubit,
        final_residual,
        success,
    })
}

/// Undoes the recorded action sequences starting from
/// `final_qubit ⊗ |0…0⟩`.
pub fn reconstruct_rl(record: &RlRecord) -> Result<StateVector> {
    let final_qubit = match (&record.final_qubit, record.success) {
        (Some(q), true) if record.sequences.len() + 1 == record.n_qubits => q,
        _ => return Err(Error::invalid("RL record is incomplete")),
    };
    let mut state = final_qubit.clone();
    for seq in record.sequences.iter().rev() {
        state = state.tensor_zero();
        state = apply_actions_inverse(&state, &seq.winning_actions, seq.n_active)?;
    }
    Ok(state)
}
