//! Clipped-surrogate actor-critic updates with generalized advantage
//! estimation, plus the finite-difference gradient checker.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use super::net::{log_softmax_at, softmax, Adam, Net};
use super::TrainConfig;

/// One on-policy batch (a rollout or a minibatch view of one).
#[derive(Debug, Clone, Default)]
pub struct Batch {
    pub feats: Vec<Vec<f64>>,
    pub actions: Vec<usize>,
    pub logp_old: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    fn select(&self, idx: &[usize]) -> Batch {
        Batch {
            feats: idx.iter().map(|&i| self.feats[i].clone()).collect(),
            actions: idx.iter().map(|&i| self.actions[i]).collect(),
            logp_old: idx.iter().map(|&i| self.logp_old[i]).collect(),
            advantages: idx.iter().map(|&i| self.advantages[i]).collect(),
            returns: idx.iter().map(|&i| self.returns[i]).collect(),
        }
    }
}

/// Loss diagnostics for one update.
#[derive(Debug, Clone, Copy, Default)]
pub struct LossStats {
    pub total: f64,
    pub surrogate: f64,
    pub value_loss: f64,
    pub entropy: f64,
}

/// Generalized advantage estimation over a rollout.
///
/// `values` has one extra trailing entry: the bootstrap value of the state
/// after the last step (0 if that step ended the episode).
pub fn gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    debug_assert_eq!(values.len(), n + 1);
    let mut advantages = vec![0.0; n];
    let mut acc = 0.0;
    for t in (0..n).rev() {
        let nonterminal = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * values[t + 1] * nonterminal - values[t];
        acc = delta + gamma * lambda * nonterminal * acc;
        advantages[t] = acc;
    }
    let returns: Vec<f64> = advantages
        .iter()
        .zip(values.iter())
        .map(|(a, v)| a + v)
        .collect();
    (advantages, returns)
}

/// Normalizes advantages in place unless their spread is negligible.
pub fn normalize_advantages(adv: &mut [f64]) {
    let n = adv.len() as f64;
    if n < 2.0 {
        return;
    }
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std < 1e-8 {
        return;
    }
    for a in adv.iter_mut() {
        *a = (*a - mean) / std;
    }
}

/// Full loss over a batch: clipped surrogate + value MSE - entropy bonus.
/// Returns the loss value, the parameter gradient, and diagnostics.
pub fn loss_and_grad(net: &Net, batch: &Batch, cfg: &TrainConfig) -> (f64, Vec<f64>, LossStats) {
    let n = batch.len();
    let mut grads = vec![0.0; net.layout.n_params()];
    let mut stats = LossStats::default();
    if n == 0 {
        return (0.0, grads, stats);
    }
    let inv_n = 1.0 / n as f64;
    let n_actions = net.layout.n_actions;
    for t in 0..n {
        let x = &batch.feats[t];
        let act = net.forward(x);
        let probs = softmax(&act.logits);
        let a = batch.actions[t];
        let logp = log_softmax_at(&act.logits, a);
        let ratio = (logp - batch.logp_old[t]).exp();
        let adv = batch.advantages[t];
        let unclipped = ratio * adv;
        let clipped = ratio.clamp(1.0 - cfg.clip_epsilon, 1.0 + cfg.clip_epsilon) * adv;
        let surr = unclipped.min(clipped);
        let verr = act.value - batch.returns[t];
        let entropy: f64 = probs
            .iter()
            .map(|&p| if p > 0.0 { -p * p.ln() } else { 0.0 })
            .sum();
        stats.surrogate += surr * inv_n;
        stats.value_loss += verr * verr * inv_n;
        stats.entropy += entropy * inv_n;

        // d(-surr)/dlogits
        let mut dlogits = vec![0.0; n_actions];
        // min(ratio*adv, clip(ratio)*adv): when the unclipped term wins the
        // gradient flows through the ratio; when the clipped term strictly
        // wins the clamp is active and the gradient is zero.
        let surrogate_grad_scale = if unclipped <= clipped { ratio * adv } else { 0.0 };
        if surrogate_grad_scale != 0.0 {
            for k in 0..n_actions {
                let indicator = if k == a { 1.0 } else { 0.0 };
                dlogits[k] -= surrogate_grad_scale * (indicator - probs[k]) * inv_n;
            }
        }
        // entropy bonus: loss term is -c_e * H
        if cfg.entropy_coef != 0.0 {
            for k in 0..n_actions {
                if probs[k] > 0.0 {
                    dlogits[k] += cfg.entropy_coef * probs[k] * (probs[k].ln() + entropy) * inv_n;
                }
            }
        }
        let dvalue = 2.0 * cfg.value_coef * verr * inv_n;
        net.backward_into(x, &act, &dlogits, dvalue, &mut grads);
    }
    stats.total = -stats.surrogate + cfg.value_coef * stats.value_loss - cfg.entropy_coef * stats.entropy;
    (stats.total, grads, stats)
}

/// One full update pass over a rollout: `epochs_per_rollout` epochs of
/// shuffled minibatches. Returns the last minibatch's stats.
pub fn clipped_surrogate_update(
    net: &mut Net,
    adam: &mut Adam,
    batch: &Batch,
    cfg: &TrainConfig,
    shuffle_rng: &mut ChaCha8Rng,
) -> LossStats {
    let n = batch.len();
    let mut last = LossStats::default();
    if n == 0 {
        return last;
    }
    let mb = cfg.minibatch_size.max(1).min(n);
    let mut idx: Vec<usize> = (0..n).collect();
    for _ in 0..cfg.epochs_per_rollout {
        idx.shuffle(shuffle_rng);
        for chunk in idx.chunks(mb) {
            let view = batch.select(chunk);
            let (_, grads, stats) = loss_and_grad(net, &view, cfg);
            adam.step(&mut net.params, &grads);
            last = stats;
        }
    }
    last
}

/// Compares analytic gradients of the full loss against central finite
/// differences (step 1e-5); returns the max relative error.
pub fn gradient_check(net: &Net, batch: &Batch, cfg: &TrainConfig) -> f64 {
    let (_, analytic, _) = loss_and_grad(net, batch, cfg);
    let h = 1e-5;
    let mut probe = net.clone();
    let mut worst = 0.0f64;
    for i in 0..net.params.len() {
        let orig = net.params[i];
        probe.params[i] = orig + h;
        let (lp, _, _) = loss_and_grad(&probe, batch, cfg);
        probe.params[i] = orig - h;
        let (lm, _, _) = loss_and_grad(&probe, batch, cfg);
        probe.params[i] = orig;
        let numeric = (lp - lm) / (2.0 * h);
        let denom = (analytic[i].abs() + numeric.abs()).max(1e-6);
        worst = worst.max((analytic[i] - numeric).abs() / denom);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::net::Layout;
    use crate::rng;
    use rand::Rng;

    fn tiny_cfg() -> TrainConfig {
        TrainConfig {
            clip_epsilon: 0.2,
            value_coef: 0.5,
            entropy_coef: 0.01,
            ..TrainConfig::default()
        }
    }

    fn random_batch(
        layout: Layout,
        n: usize,
        rng: &mut rand_chacha::ChaCha8Rng,
        spread_old_logp: bool,
    ) -> Batch {
        let mut b = Batch::default();
        for _ in 0..n {
            let x: Vec<f64> = (0..layout.input_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            b.feats.push(x);
            b.actions.push(rng.gen_range(0..layout.n_actions));
            let base: f64 = rng.gen_range(-2.0..-0.1);
            b.logp_old
                .push(if spread_old_logp { base } else { -(layout.n_actions as f64).ln() });
            b.advantages.push(rng.gen_range(-1.0..1.0));
            b.returns.push(rng.gen_range(-1.0..1.0));
        }
        b
    }

    #[test]
    fn zero_advantages_and_zero_entropy_leave_policy_untouched() {
        let layout = Layout {
            input_dim: 3,
            hidden: 4,
            n_actions: 2,
        };
        let mut r = rng::stream(11);
        let net = Net::init(layout, &mut r);
        let mut batch = random_batch(layout, 6, &mut r, false);
        for (i, f) in batch.feats.iter().enumerate() {
            // make the value target equal the current value so nothing moves
            batch.returns[i] = net.forward(f).value;
            batch.advantages[i] = 0.0;
            batch.logp_old[i] = log_softmax_at(&net.forward(f).logits, batch.actions[i]);
        }
        let cfg = TrainConfig {
            entropy_coef: 0.0,
            ..tiny_cfg()
        };
        let (_, grads, _) = loss_and_grad(&net, &batch, &cfg);
        let norm: f64 = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
        assert!(norm < 1e-10, "gradient norm {norm} should vanish");
    }

    #[test]
    fn policy_gradient_norm_vanishes_with_zero_adv_and_entropy() {
        let layout = Layout {
            input_dim: 3,
            hidden: 4,
            n_actions: 3,
        };
        let mut r = rng::stream(13);
        let net = Net::init(layout, &mut r);
        let mut batch = random_batch(layout, 5, &mut r, true);
        for a in batch.advantages.iter_mut() {
            *a = 0.0;
        }
        let cfg = TrainConfig {
            entropy_coef: 0.0,
            value_coef: 0.5,
            ..tiny_cfg()
        };
        let (_, grads, _) = loss_and_grad(&net, &batch, &cfg);
        // policy head rows live between off_wp and off_wv
        let d = layout.input_dim;
        let h = layout.hidden;
        let a = layout.n_actions;
        let off_wp = h * d + h;
        let off_wv = off_wp + a * h + a;
        let head_norm: f64 = grads[off_wp..off_wv].iter().map(|g| g * g).sum::<f64>().sqrt();
        assert!(head_norm < 1e-10);
    }

    #[test]
    fn hand_computed_two_action_gradient() {
        // Single step, 2-action softmax, no clipping active, entropy off.
        // loss = -ratio * A with ratio = pi(a)/pi_old(a);
        // d loss/d logits_k = -ratio * A * (1[k=a] - pi_k).
        let layout = Layout {
            input_dim: 1,
            hidden: 1,
            n_actions: 2,
        };
        // Fix weights so the chain rule is easy to write down by hand:
        // hidden = tanh(w1*x + b1), logits_k = wp_k*hidden + bp_k.
        let mut net = Net::zeros(layout);
        // params: w1 [1], b1 [1], wp [2], bp [2], wv [1], bv [1]
        net.params[0] = 0.7; // w1
        net.params[1] = 0.1; // b1
        net.params[2] = 0.9; // wp_0
        net.params[3] = -0.4; // wp_1
        let x = [0.5];
        let act = net.forward(&x);
        let probs = softmax(&act.logits);
        let a = 0usize;
        let adv = 0.8;
        let logp_old = log_softmax_at(&act.logits, a) - 0.05; // ratio = e^{0.05}
        let cfg = TrainConfig {
            entropy_coef: 0.0,
            value_coef: 0.0,
            clip_epsilon: 0.2,
            ..TrainConfig::default()
        };
        let batch = Batch {
            feats: vec![x.to_vec()],
            actions: vec![a],
            logp_old: vec![logp_old],
            advantages: vec![adv],
            returns: vec![act.value],
        };
        let (_, grads, _) = loss_and_grad(&net, &batch, &cfg);
        let ratio = 0.05f64.exp();
        let dlogit0 = -ratio * adv * (1.0 - probs[0]);
        let dlogit1 = -ratio * adv * (0.0 - probs[1]);
        let hidden = (0.7f64 * 0.5 + 0.1).tanh();
        // wp gradients
        assert!((grads[2] - dlogit0 * hidden).abs() < 1e-12);
        assert!((grads[3] - dlogit1 * hidden).abs() < 1e-12);
        // bp gradients
        assert!((grads[4] - dlogit0).abs() < 1e-12);
        assert!((grads[5] - dlogit1).abs() < 1e-12);
        // trunk gradient through tanh
        let dhidden = dlogit0 * 0.9 + dlogit1 * (-0.4);
        let dz = dhidden * (1.0 - hidden * hidden);
        assert!((grads[0] - dz * 0.5).abs() < 1e-12);
        assert!((grads[1] - dz).abs() < 1e-12);
    }

    #[test]
    fn ratio_pushed_past_clip_gives_zero_surrogate_gradient() {
        let layout = Layout {
            input_dim: 2,
            hidden: 3,
            n_actions: 2,
        };
        let mut r = rng::stream(17);
        let net = Net::init(layout, &mut r);
        let x = vec![0.3, -0.6];
        let act = net.forward(&x);
        let a = 0usize;
        let logp = log_softmax_at(&act.logits, a);
        // old log-prob far below current: ratio >> 1 + eps, positive advantage
        let batch = Batch {
            feats: vec![x.clone()],
            actions: vec![a],
            logp_old: vec![logp - 1.0],
            advantages: vec![1.0],
            returns: vec![act.value],
        };
        let cfg = TrainConfig {
            entropy_coef: 0.0,
            value_coef: 0.0,
            ..tiny_cfg()
        };
        let (_, grads, _) = loss_and_grad(&net, &batch, &cfg);
        let norm: f64 = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
        assert!(norm < 1e-12, "clipping plateau should kill the gradient");
    }

    #[test]
    fn gae_matches_hand_rollout() {
        // two steps, episode ends at step 1
        let rewards = [1.0, 2.0];
        let values = [0.5, 0.4, 0.9];
        let dones = [false, true];
        let (adv, ret) = gae(&rewards, &values, &dones, 0.9, 0.8);
        let delta1 = 2.0 - 0.4; // terminal: no bootstrap
        let delta0 = 1.0 + 0.9 * 0.4 - 0.5;
        assert!((adv[1] - delta1).abs() < 1e-12);
        assert!((adv[0] - (delta0 + 0.9 * 0.8 * delta1)).abs() < 1e-12);
        assert!((ret[0] - (adv[0] + 0.5)).abs() < 1e-12);
    }

    #[test]
    fn gradient_check_on_random_instances() {
        let mut r = rng::stream(23);
        for case in 0..10 {
            let layout = Layout {
                input_dim: 3 + (case % 3),
                hidden: 4,
                n_actions: 2 + (case % 2),
            };
            let net = Net::init(layout, &mut r);
            let batch = random_batch(layout, 6, &mut r, true);
            let err = gradient_check(&net, &batch, &tiny_cfg());
            assert!(err < 1e-4, "case {case}: max relative error {err}");
        }
    }
}
