//! Desk-scale learners: a clipped-surrogate actor-critic (`acrl`), a
//! linear-feature Q-learner (`linq`), and the shared train/eval harness that
//! produces reproducible run records.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub mod acrl;
pub mod linq;
pub mod net;
mod params_io;

pub use params_io::{load_params, save_params, PolicyParams};

use crate::envs::{Env, Game, Split, FRAME, TEST_SEEDS, TRAIN_SEEDS};
use crate::error::{Error, Result};
use crate::rng;
use crate::util::canon9;
use crate::wrappers::{
    normalize_return, ChannelMode, PerturbationConfig, Phase, ShapingScheme, WrappedEnv,
};

use self::acrl::{clipped_surrogate_update, gae, normalize_advantages, Batch};
use self::net::{log_softmax_at, sample_categorical, softmax, Adam, Layout, Net};
use self::linq::{q_update, LinqNet};

/// Downsample factor from frame pixels to network input cells.
pub const DOWNSAMPLE: usize = 5;
/// Flattened network input size: (65/5)^2 cells x 3 channels.
pub const INPUT_DIM: usize = (FRAME / DOWNSAMPLE) * (FRAME / DOWNSAMPLE) * 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    /// Clipped-surrogate actor-critic.
    Acrl,
    /// Linear Q-learning on frozen random features.
    Linq,
}

impl Algorithm {
    pub const ALL: [Algorithm; 2] = [Algorithm::Acrl, Algorithm::Linq];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Acrl => "acrl",
            Algorithm::Linq => "linq",
        }
    }

    pub fn parse(s: &str) -> Option<Algorithm> {
        Algorithm::ALL.into_iter().find(|a| a.name() == s)
    }

    pub(crate) fn tag(self) -> u64 {
        match self {
            Algorithm::Acrl => 1,
            Algorithm::Linq => 2,
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Hyperparameters for one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub total_steps: u64,
    pub eval_every: u64,
    pub eval_episodes: usize,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_epsilon: f64,
    pub learning_rate: f64,
    pub rollout_length: usize,
    pub minibatch_size: usize,
    pub epochs_per_rollout: usize,
    pub hidden_units: usize,
    pub entropy_coef: f64,
    pub value_coef: f64,
    /// Step size for the linear Q-learner.
    pub q_learning_rate: f64,
    /// Final epsilon of the Q-learner's linearly decayed exploration.
    pub q_explore_final: f64,
    pub rng_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            total_steps: 300_000,
            eval_every: 5_000,
            eval_episodes: 50,
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_epsilon: 0.2,
            learning_rate: 3e-4,
            rollout_length: 1024,
            minibatch_size: 256,
            epochs_per_rollout: 3,
            hidden_units: 128,
            entropy_coef: 0.01,
            value_coef: 0.5,
            q_learning_rate: 0.01,
            q_explore_final: 0.05,
            rng_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config(format!("gamma must be in (0,1), got {}", self.gamma)));
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return Err(Error::Config(format!(
                "gae_lambda must be in [0,1], got {}",
                self.gae_lambda
            )));
        }
        if self.clip_epsilon <= 0.0 {
            return Err(Error::Config(format!(
                "clip_epsilon must be > 0, got {}",
                self.clip_epsilon
            )));
        }
        if self.eval_every == 0 || self.eval_episodes == 0 || self.rollout_length == 0 {
            return Err(Error::Config(
                "eval_every, eval_episodes and rollout_length must be positive".to_string(),
            ));
        }
        Ok(())
    }
}

/// Time-stamped normalized generalization returns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RewardCurve {
    pub points: Vec<(u64, f64)>,
}

impl RewardCurve {
    /// Appends a point, canonicalizing the value to report precision.
    pub fn push(&mut self, step: u64, value: f64) {
        debug_assert!(
            self.points.last().map(|&(s, _)| step > s).unwrap_or(true),
            "curve steps must increase"
        );
        self.points.push((step, canon9(value)));
    }

    pub fn auc(&self) -> Result<f64> {
        crate::metrics::auc(&self.points)
    }

    pub fn last_value(&self) -> Option<f64> {
        self.points.last().map(|&(_, v)| v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunStatus {
    Ok,
    /// Training aborted on a non-finite loss; diagnostics recorded.
    AbortedNaN { step: u64, detail: String },
}

impl RunStatus {
    pub fn label(&self) -> String {
        match self {
            RunStatus::Ok => "ok".to_string(),
            RunStatus::AbortedNaN { step, detail } => {
                format!("aborted_nan(step={step},{detail})")
            }
        }
    }
}

/// Everything one training run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub game: Game,
    pub algorithm: Algorithm,
    pub mode: ChannelMode,
    pub p: f64,
    pub shaping: ShapingScheme,
    pub seed: u64,
    pub train_curve: RewardCurve,
    pub eval_curve: RewardCurve,
    pub final_returns: Vec<f64>,
    pub status: RunStatus,
}

/// Mean-pools each 5x5 pixel block per channel: 65x65x3 -> 13x13x3.
pub fn downsample(input: &[f64]) -> Vec<f64> {
    debug_assert_eq!(input.len(), FRAME * FRAME * 3);
    let side = FRAME / DOWNSAMPLE;
    let mut out = vec![0.0; side * side * 3];
    let inv = 1.0 / (DOWNSAMPLE * DOWNSAMPLE) as f64;
    for cy in 0..side {
        for cx in 0..side {
            let mut acc = [0.0f64; 3];
            for py in 0..DOWNSAMPLE {
                for px in 0..DOWNSAMPLE {
                    let y = cy * DOWNSAMPLE + py;
                    let x = cx * DOWNSAMPLE + px;
                    let base = (y * FRAME + x) * 3;
                    acc[0] += input[base];
                    acc[1] += input[base + 1];
                    acc[2] += input[base + 2];
                }
            }
            let base = (cy * side + cx) * 3;
            out[base] = acc[0] * inv;
            out[base + 1] = acc[1] * inv;
            out[base + 2] = acc[2] * inv;
        }
    }
    out
}

/// Samples a training level id.
fn sample_train_level(rng: &mut ChaCha8Rng) -> u64 {
    TRAIN_SEEDS.start + rng.gen_range(0..TRAIN_SEEDS.end - TRAIN_SEEDS.start)
}

/// Builds the training-phase wrapper around a first level; the reward-mask
/// stream is per-run and survives episode resets.
fn train_wrapper(
    game: Game,
    perturbation: &PerturbationConfig,
    run_seed: u64,
    env_rng: &mut ChaCha8Rng,
) -> Result<WrappedEnv> {
    let cfg = PerturbationConfig {
        phase: Phase::Train,
        ..*perturbation
    };
    let first = Env::generate_raw(game, sample_train_level(env_rng));
    WrappedEnv::new(first, cfg, rng::mix(run_seed, &[3]))
}

/// Plays `eval_episodes` held-out levels with the given action picker and
/// returns (mean normalized return, per-episode normalized returns).
fn evaluate<F>(
    game: Game,
    perturbation: &PerturbationConfig,
    eval_episodes: usize,
    run_seed: u64,
    eval_index: u64,
    mut pick: F,
) -> Result<(f64, Vec<f64>)>
where
    F: FnMut(&[f64], &mut ChaCha8Rng) -> usize,
{
    let meta = game.meta();
    let eval_cfg = PerturbationConfig {
        phase: Phase::Eval,
        ..*perturbation
    };
    let n_levels = (TEST_SEEDS.end - TEST_SEEDS.start) as usize;
    let mut returns = Vec::with_capacity(eval_episodes);
    for ep in 0..eval_episodes {
        let level = TEST_SEEDS.start + (ep % n_levels) as u64;
        let env = Env::generate(&crate::envs::LevelSpec {
            game,
            level_seed: level,
            split: Split::Test,
        })?;
        let mut wrapped = WrappedEnv::new(env, eval_cfg, rng::mix(run_seed, &[4, eval_index, ep as u64]))?;
        let mut ep_rng = rng::substream(run_seed, &[5, eval_index, ep as u64]);
        let mut input = wrapped.current_input();
        while !wrapped.done() {
            let feat = downsample(&input);
            let a_idx = pick(&feat, &mut ep_rng);
            let step = wrapped.step(meta.action_set[a_idx])?;
            input = step.input;
        }
        returns.push(canon9(normalize_return(wrapped.env().raw_return(), meta)?));
    }
    let mean = returns.iter().sum::<f64>() / returns.len() as f64;
    Ok((canon9(mean), returns))
}

/// Trains one run to completion. Deterministic given the config's rng_seed.
pub fn train(
    algorithm: Algorithm,
    game: Game,
    perturbation: &PerturbationConfig,
    cfg: &TrainConfig,
    roster_seed: u64,
) -> Result<RunRecord> {
    Ok(train_full(algorithm, game, perturbation, cfg, roster_seed)?.0)
}

/// Like [`train`], also returning the final policy parameters.
pub fn train_full(
    algorithm: Algorithm,
    game: Game,
    perturbation: &PerturbationConfig,
    cfg: &TrainConfig,
    roster_seed: u64,
) -> Result<(RunRecord, PolicyParams)> {
    cfg.validate()?;
    perturbation.validate(game)?;
    match algorithm {
        Algorithm::Acrl => train_acrl(game, perturbation, cfg, roster_seed),
        Algorithm::Linq => train_linq(game, perturbation, cfg, roster_seed),
    }
}

/// Rewards are scaled to roughly unit episode range inside the learners so
/// value targets stay O(1) across games; the recorded curves always use the
/// raw game units normalized by [`normalize_return`].
fn learner_reward_scale(game: Game) -> f64 {
    let meta = game.meta();
    1.0 / (meta.r_max - meta.r_min)
}

/// Online per-feature standardization (Welford). Static input features
/// (backgrounds, fixed scenery) shrink toward zero and moving entities
/// become salient, which both learners need at this scale. Statistics are
/// updated during training steps only and frozen for evaluations.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureNorm {
    mean: Vec<f64>,
    m2: Vec<f64>,
    count: f64,
}

impl FeatureNorm {
    pub fn new(dim: usize) -> FeatureNorm {
        FeatureNorm {
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
            count: 0.0,
        }
    }

    pub fn update(&mut self, x: &[f64]) {
        self.count += 1.0;
        for i in 0..x.len() {
            let delta = x[i] - self.mean[i];
            self.mean[i] += delta / self.count;
            self.m2[i] += delta * (x[i] - self.mean[i]);
        }
    }

    /// (x - mean) / max(std, 1e-3), clamped to [-5, 5]; identity until two
    /// samples have been seen.
    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        if self.count < 2.0 {
            return x.to_vec();
        }
        let n = self.count;
        x.iter()
            .enumerate()
            .map(|(i, &v)| {
                let std = (self.m2[i] / n).sqrt().max(1e-3);
                ((v - self.mean[i]) / std).clamp(-5.0, 5.0)
            })
            .collect()
    }

    /// Serializes as [mean.., m2.., count] for the params file.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = self.mean.clone();
        out.extend_from_slice(&self.m2);
        out.push(self.count);
        out
    }

    pub fn from_flat(dim: usize, flat: &[f64]) -> Option<FeatureNorm> {
        if flat.len() != 2 * dim + 1 {
            return None;
        }
        Some(FeatureNorm {
            mean: flat[..dim].to_vec(),
            m2: flat[dim..2 * dim].to_vec(),
            count: flat[2 * dim],
        })
    }

    pub fn flat_len(dim: usize) -> usize {
        2 * dim + 1
    }
}

/// The linear Q-learner's feature map: standardized, then scaled by
/// 1/sqrt(input_dim) so the TD step size is roughly frame-independent.
pub fn linq_features(norm: &FeatureNorm, raw: &[f64]) -> Vec<f64> {
    let scale = 1.0 / (raw.len() as f64).sqrt();
    norm.transform(raw).into_iter().map(|v| v * scale).collect()
}

/// Bookkeeping shared by both training loops.
struct Harness {
    game: Game,
    perturbation: PerturbationConfig,
    run_seed: u64,
    eval_every: u64,
    eval_episodes: usize,
    eval_index: u64,
    next_eval_at: u64,
    train_curve: RewardCurve,
    eval_curve: RewardCurve,
    final_returns: Vec<f64>,
    window_returns: Vec<f64>,
    last_train_point: f64,
}

impl Harness {
    fn new(game: Game, perturbation: &PerturbationConfig, cfg: &TrainConfig) -> Harness {
        Harness {
            game,
            perturbation: *perturbation,
            run_seed: cfg.rng_seed,
            eval_every: cfg.eval_every,
            eval_episodes: cfg.eval_episodes,
            eval_index: 0,
            next_eval_at: 0,
            train_curve: RewardCurve::default(),
            eval_curve: RewardCurve::default(),
            final_returns: Vec::new(),
            window_returns: Vec::new(),
            last_train_point: 0.0,
        }
    }

    fn record_train_episode(&mut self, raw_return: f64) -> Result<()> {
        self.window_returns
            .push(normalize_return(raw_return, self.game.meta())?);
        Ok(())
    }

    fn due(&self, steps_done: u64) -> bool {
        steps_done >= self.next_eval_at
    }

    fn run_eval<F>(&mut self, steps_done: u64, pick: F) -> Result<()>
    where
        F: FnMut(&[f64], &mut ChaCha8Rng) -> usize,
    {
        let (mean, returns) = evaluate(
            self.game,
            &self.perturbation,
            self.eval_episodes,
            self.run_seed,
            self.eval_index,
            pick,
        )?;
        self.eval_curve.push(steps_done, mean);
        let train_point = if self.window_returns.is_empty() {
            self.last_train_point
        } else {
            self.window_returns.iter().sum::<f64>() / self.window_returns.len() as f64
        };
        self.last_train_point = train_point;
        self.train_curve.push(steps_done, train_point);
        self.window_returns.clear();
        self.final_returns = returns;
        self.eval_index += 1;
        self.next_eval_at = self.next_eval_at.saturating_add(self.eval_every).max(steps_done + 1);
        Ok(())
    }

    fn finish(
        self,
        algorithm: Algorithm,
        p: f64,
        mode: ChannelMode,
        shaping: ShapingScheme,
        seed: u64,
        status: RunStatus,
    ) -> RunRecord {
        RunRecord {
            game: self.game,
            algorithm,
            mode,
            p,
            shaping,
            seed,
            train_curve: self.train_curve,
            eval_curve: self.eval_curve,
            final_returns: self.final_returns,
            status,
        }
    }
}

fn train_acrl(
    game: Game,
    perturbation: &PerturbationConfig,
    cfg: &TrainConfig,
    roster_seed: u64,
) -> Result<(RunRecord, PolicyParams)> {
    let meta = game.meta();
    let n_actions = meta.action_set.len();
    let layout = Layout {
        input_dim: INPUT_DIM,
        hidden: cfg.hidden_units,
        n_actions,
    };
    let run_seed = cfg.rng_seed;
    let mut init_rng = rng::substream(run_seed, &[1]);
    let mut env_rng = rng::substream(run_seed, &[2]);
    let mut policy_rng = rng::substream(run_seed, &[6]);
    let mut net = Net::init(layout, &mut init_rng);
    let mut adam = Adam::new(cfg.learning_rate, layout.n_params());
    let mut norm = FeatureNorm::new(INPUT_DIM);
    let mut harness = Harness::new(game, perturbation, cfg);

    let mut wrapped = train_wrapper(game, perturbation, run_seed, &mut env_rng)?;
    let mut input = wrapped.current_input();
    let mut raw_feat = downsample(&input);

    let reward_scale = learner_reward_scale(game);
    let mut steps_done: u64 = 0;
    let mut status = RunStatus::Ok;

    // initial evaluation before any training
    {
        let net_ref = &net;
        let norm_ref = &norm;
        harness.run_eval(0, |x, r| {
            let act = net_ref.forward(&norm_ref.transform(x));
            sample_categorical(&softmax(&act.logits), r)
        })?;
    }

    'outer: while steps_done < cfg.total_steps {
        let horizon = cfg.rollout_length.min((cfg.total_steps - steps_done) as usize);
        let mut batch = Batch::default();
        let mut rewards = Vec::with_capacity(horizon);
        let mut dones = Vec::with_capacity(horizon);
        let mut values = Vec::with_capacity(horizon + 1);
        for _ in 0..horizon {
            let feat = norm.transform(&raw_feat);
            norm.update(&raw_feat);
            let act = net.forward(&feat);
            let probs = softmax(&act.logits);
            let a_idx = sample_categorical(&probs, &mut policy_rng);
            let logp = log_softmax_at(&act.logits, a_idx);
            let step = wrapped.step(meta.action_set[a_idx])?;
            batch.feats.push(feat);
            batch.actions.push(a_idx);
            batch.logp_old.push(logp);
            values.push(act.value);
            rewards.push(step.reward * reward_scale);
            dones.push(step.done);
            steps_done += 1;
            if step.done {
                harness.record_train_episode(wrapped.env().raw_return())?;
                input = wrapped.reset(Env::generate_raw(game, sample_train_level(&mut env_rng)));
            } else {
                input = step.input;
            }
            raw_feat = downsample(&input);
        }
        // bootstrap value for the state after the last collected step
        let tail_value = if *dones.last().unwrap_or(&true) {
            0.0
        } else {
            net.forward(&norm.transform(&raw_feat)).value
        };
        values.push(tail_value);
        let (mut advantages, returns) = gae(&rewards, &values, &dones, cfg.gamma, cfg.gae_lambda);
        normalize_advantages(&mut advantages);
        batch.advantages = advantages;
        batch.returns = returns;
        let stats = clipped_surrogate_update(&mut net, &mut adam, &batch, cfg, &mut policy_rng);
        if !stats.total.is_finite() {
            status = RunStatus::AbortedNaN {
                step: steps_done,
                detail: format!(
                    "surrogate={:.3e},value={:.3e},entropy={:.3e}",
                    stats.surrogate, stats.value_loss, stats.entropy
                ),
            };
            break 'outer;
        }
        if harness.due(steps_done) {
            let net_ref = &net;
            let norm_ref = &norm;
            harness.run_eval(steps_done, |x, r| {
                let act = net_ref.forward(&norm_ref.transform(x));
                sample_categorical(&softmax(&act.logits), r)
            })?;
        }
    }
    if status == RunStatus::Ok && harness.eval_curve.points.last().map(|&(s, _)| s) != Some(steps_done)
    {
        let net_ref = &net;
        let norm_ref = &norm;
        harness.run_eval(steps_done, |x, r| {
            let act = net_ref.forward(&norm_ref.transform(x));
            sample_categorical(&softmax(&act.logits), r)
        })?;
    }
    let record = harness.finish(
        Algorithm::Acrl,
        perturbation.p,
        perturbation.mode,
        perturbation.shaping,
        roster_seed,
        status,
    );
    let params = PolicyParams::Acrl {
        game,
        mode: perturbation.mode,
        net,
        norm,
    };
    Ok((record, params))
}

fn train_linq(
    game: Game,
    perturbation: &PerturbationConfig,
    cfg: &TrainConfig,
    roster_seed: u64,
) -> Result<(RunRecord, PolicyParams)> {
    let meta = game.meta();
    let n_actions = meta.action_set.len();
    let run_seed = cfg.rng_seed;
    let mut env_rng = rng::substream(run_seed, &[2]);
    let mut policy_rng = rng::substream(run_seed, &[6]);
    let mut net = LinqNet::init(INPUT_DIM, n_actions);
    let mut norm = FeatureNorm::new(INPUT_DIM);
    let mut harness = Harness::new(game, perturbation, cfg);

    let mut wrapped = train_wrapper(game, perturbation, run_seed, &mut env_rng)?;
    let mut raw_feat = downsample(&wrapped.current_input());

    let reward_scale = learner_reward_scale(game);
    let mut steps_done: u64 = 0;
    let explore_span = (cfg.total_steps / 2).max(1) as f64;

    {
        let net_ref = &net;
        let norm_ref = &norm;
        harness.run_eval(0, |x, _| net_ref.greedy(&linq_features(norm_ref, x)))?;
    }

    while steps_done < cfg.total_steps {
        let phi = linq_features(&norm, &raw_feat);
        norm.update(&raw_feat);
        let eps = 1.0 + (cfg.q_explore_final - 1.0) * (steps_done as f64 / explore_span).min(1.0);
        let a_idx = if policy_rng.gen::<f64>() < eps {
            policy_rng.gen_range(0..n_actions)
        } else {
            net.greedy(&phi)
        };
        let step = wrapped.step(meta.action_set[a_idx])?;
        steps_done += 1;
        let r = step.reward * reward_scale;
        if step.done {
            q_update(&mut net, &phi, a_idx, r, None, cfg.gamma, cfg.q_learning_rate);
            harness.record_train_episode(wrapped.env().raw_return())?;
            let input = wrapped.reset(Env::generate_raw(game, sample_train_level(&mut env_rng)));
            raw_feat = downsample(&input);
        } else {
            let raw_next = downsample(&step.input);
            let phi_next = linq_features(&norm, &raw_next);
            q_update(
                &mut net,
                &phi,
                a_idx,
                r,
                Some(&phi_next),
                cfg.gamma,
                cfg.q_learning_rate,
            );
            raw_feat = raw_next;
        }
        if harness.due(steps_done) {
            let net_ref = &net;
            let norm_ref = &norm;
            harness.run_eval(steps_done, |x, _| net_ref.greedy(&linq_features(norm_ref, x)))?;
        }
    }
    if harness.eval_curve.points.last().map(|&(s, _)| s) != Some(steps_done) {
        let net_ref = &net;
        let norm_ref = &norm;
        harness.run_eval(steps_done, |x, _| net_ref.greedy(&linq_features(norm_ref, x)))?;
    }
    let record = harness.finish(
        Algorithm::Linq,
        perturbation.p,
        perturbation.mode,
        perturbation.shaping,
        roster_seed,
        RunStatus::Ok,
    );
    let params = PolicyParams::Linq {
        game,
        mode: perturbation.mode,
        net,
        norm,
    };
    Ok((record, params))
}
