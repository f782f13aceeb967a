//! Exact finite-MDP machinery: value iteration, policy evaluation,
//! Monte-Carlo rollouts, and tabular Q-learning. Used as the ground-truth
//! oracle for the stochastic-reward invariance checks.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;
use crate::wrappers::perturb_reward;

const ROW_SUM_TOL: f64 = 1e-9;

/// A finite MDP with per-(state, action) rewards R(s, a).
#[derive(Debug, Clone)]
pub struct TabularMdp {
    n_states: usize,
    n_actions: usize,
    /// P(s'|s,a), flat [s][a][s'].
    transition: Vec<f64>,
    /// R(s,a), flat [s][a].
    reward: Vec<f64>,
    discount: f64,
    terminal: Vec<bool>,
    name: String,
}

impl TabularMdp {
    /// Builds and validates an MDP. Terminal rows may be left all-zero; they
    /// are auto-filled with a reward-0 self-transition.
    pub fn new(
        name: &str,
        n_states: usize,
        n_actions: usize,
        discount: f64,
        transition: Vec<f64>,
        reward: Vec<f64>,
        terminal: Vec<bool>,
    ) -> Result<TabularMdp> {
        if !(0.0..1.0).contains(&discount) {
            return Err(Error::InvalidMdp(format!(
                "discount must be in [0, 1), got {discount}"
            )));
        }
        if transition.len() != n_states * n_actions * n_states
            || reward.len() != n_states * n_actions
            || terminal.len() != n_states
        {
            return Err(Error::InvalidMdp("table shapes do not match".to_string()));
        }
        let mut mdp = TabularMdp {
            n_states,
            n_actions,
            transition,
            reward,
            discount,
            terminal,
            name: name.to_string(),
        };
        for s in 0..n_states {
            if mdp.terminal[s] {
                for a in 0..n_actions {
                    let row = mdp.row_mut(s, a);
                    row.iter_mut().for_each(|p| *p = 0.0);
                    row[s] = 1.0;
                    mdp.reward[s * n_actions + a] = 0.0;
                }
            }
        }
        mdp.validate()?;
        Ok(mdp)
    }

    fn validate(&self) -> Result<()> {
        for s in 0..self.n_states {
            for a in 0..self.n_actions {
                let sum: f64 = self.row(s, a).iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOL {
                    return Err(Error::InvalidMdp(format!(
                        "{}: transition row (s={s}, a={a}) sums to {sum}, not 1",
                        self.name
                    )));
                }
                if self.row(s, a).iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                    return Err(Error::InvalidMdp(format!(
                        "{}: transition row (s={s}, a={a}) has probabilities outside [0,1]",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        self.terminal[s]
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.n_actions + a]
    }

    pub fn max_abs_reward(&self) -> f64 {
        self.reward.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    fn row(&self, s: usize, a: usize) -> &[f64] {
        let base = (s * self.n_actions + a) * self.n_states;
        &self.transition[base..base + self.n_states]
    }

    fn row_mut(&mut self, s: usize, a: usize) -> &mut [f64] {
        let base = (s * self.n_actions + a) * self.n_states;
        &mut self.transition[base..base + self.n_states]
    }

    pub fn transition_prob(&self, s: usize, a: usize, s2: usize) -> f64 {
        self.row(s, a)[s2]
    }

    /// Samples the successor state.
    pub fn sample_next(&self, s: usize, a: usize, rng: &mut rand_chacha::ChaCha8Rng) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let row = self.row(s, a);
        for (s2, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return s2;
            }
        }
        self.n_states - 1
    }

    /// The smallest horizon H with `discount^H * max|R| < bias_bound`.
    pub fn truncation_horizon(&self, bias_bound: f64) -> usize {
        let r = self.max_abs_reward();
        if r == 0.0 || self.discount == 0.0 {
            return 1;
        }
        let mut h = 1usize;
        let mut pw = self.discount;
        while pw * r >= bias_bound && h < 100_000 {
            pw *= self.discount;
            h += 1;
        }
        h
    }
}

/// Action-value table, one entry per (state, action).
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    n_states: usize,
    n_actions: usize,
    q: Vec<f64>,
}

impl QTable {
    pub fn zeros(n_states: usize, n_actions: usize) -> QTable {
        QTable {
            n_states,
            n_actions,
            q: vec![0.0; n_states * n_actions],
        }
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.q[s * self.n_actions + a]
    }

    pub fn set(&mut self, s: usize, a: usize, v: f64) {
        self.q[s * self.n_actions + a] = v;
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn max_q(&self, s: usize) -> f64 {
        (0..self.n_actions)
            .map(|a| self.get(s, a))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Greedy action, ties broken toward the lower index.
    pub fn greedy_action(&self, s: usize) -> usize {
        let mut best = 0;
        for a in 1..self.n_actions {
            if self.get(s, a) > self.get(s, best) {
                best = a;
            }
        }
        best
    }

    /// Gap between the best and second-best action values in state s.
    pub fn top2_gap(&self, s: usize) -> f64 {
        let mut vals: Vec<f64> = (0..self.n_actions).map(|a| self.get(s, a)).collect();
        vals.sort_by(|a, b| b.partial_cmp(a).expect("finite q values"));
        if vals.len() < 2 {
            f64::INFINITY
        } else {
            vals[0] - vals[1]
        }
    }

    pub fn sup_distance(&self, other: &QTable) -> f64 {
        self.q
            .iter()
            .zip(other.q.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn value_range(&self) -> f64 {
        let lo = self.q.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }
}

/// Stochastic tabular policy, one distribution per state.
#[derive(Debug, Clone)]
pub struct TabularPolicy {
    n_states: usize,
    n_actions: usize,
    probs: Vec<f64>,
}

impl TabularPolicy {
    pub fn new(n_states: usize, n_actions: usize, probs: Vec<f64>) -> Result<TabularPolicy> {
        if probs.len() != n_states * n_actions {
            return Err(Error::InvalidMdp("policy shape mismatch".to_string()));
        }
        for s in 0..n_states {
            let sum: f64 = probs[s * n_actions..(s + 1) * n_actions].iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidMdp(format!(
                    "policy row for state {s} sums to {sum}, not 1"
                )));
            }
        }
        Ok(TabularPolicy {
            n_states,
            n_actions,
            probs,
        })
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> TabularPolicy {
        TabularPolicy {
            n_states,
            n_actions,
            probs: vec![1.0 / n_actions as f64; n_states * n_actions],
        }
    }

    /// Deterministic policy that is greedy with respect to `q`.
    pub fn greedy_from(q: &QTable) -> TabularPolicy {
        let mut probs = vec![0.0; q.n_states() * q.n_actions()];
        for s in 0..q.n_states() {
            probs[s * q.n_actions() + q.greedy_action(s)] = 1.0;
        }
        TabularPolicy {
            n_states: q.n_states(),
            n_actions: q.n_actions(),
            probs,
        }
    }

    pub fn prob(&self, s: usize, a: usize) -> f64 {
        self.probs[s * self.n_actions + a]
    }

    pub fn sample(&self, s: usize, rng: &mut rand_chacha::ChaCha8Rng) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for a in 0..self.n_actions {
            acc += self.prob(s, a);
            if u < acc {
                return a;
            }
        }
        self.n_actions - 1
    }
}

const MAX_SWEEPS: usize = 1_000_000;

/// Optimal action values by synchronous value iteration, stopped when the
/// per-sweep sup-norm residual drops below `tol`.
pub fn value_iteration(mdp: &TabularMdp, tol: f64) -> Result<QTable> {
    if tol <= 0.0 {
        return Err(Error::Config(format!("tolerance must be > 0, got {tol}")));
    }
    let mut q = QTable::zeros(mdp.n_states(), mdp.n_actions());
    for _ in 0..MAX_SWEEPS {
        let (next, residual) = bellman_optimality_sweep(mdp, &q);
        q = next;
        if residual < tol {
            return Ok(q);
        }
    }
    Err(Error::Pipeline(format!(
        "value iteration on {} did not reach tol {tol}",
        mdp.name()
    )))
}

/// One synchronous Bellman optimality backup; returns (new table, residual).
pub fn bellman_optimality_sweep(mdp: &TabularMdp, q: &QTable) -> (QTable, f64) {
    let mut next = QTable::zeros(mdp.n_states(), mdp.n_actions());
    let mut residual = 0.0f64;
    for s in 0..mdp.n_states() {
        for a in 0..mdp.n_actions() {
            let v = if mdp.is_terminal(s) {
                0.0
            } else {
                let mut exp = 0.0;
                for s2 in 0..mdp.n_states() {
                    let p = mdp.transition_prob(s, a, s2);
                    if p > 0.0 {
                        exp += p * q.max_q(s2);
                    }
                }
                mdp.reward(s, a) + mdp.discount() * exp
            };
            residual = residual.max((v - q.get(s, a)).abs());
            next.set(s, a, v);
        }
    }
    (next, residual)
}

/// Action values of a fixed policy by iterative policy evaluation.
pub fn policy_evaluation(mdp: &TabularMdp, policy: &TabularPolicy, tol: f64) -> Result<QTable> {
    if tol <= 0.0 {
        return Err(Error::Config(format!("tolerance must be > 0, got {tol}")));
    }
    if policy.n_states != mdp.n_states() || policy.n_actions != mdp.n_actions() {
        return Err(Error::InvalidMdp(
            "policy shape does not match MDP".to_string(),
        ));
    }
    let mut q = QTable::zeros(mdp.n_states(), mdp.n_actions());
    for _ in 0..MAX_SWEEPS {
        let mut next = QTable::zeros(mdp.n_states(), mdp.n_actions());
        let mut residual = 0.0f64;
        for s in 0..mdp.n_states() {
            for a in 0..mdp.n_actions() {
                let v = if mdp.is_terminal(s) {
                    0.0
                } else {
                    let mut exp = 0.0;
                    for s2 in 0..mdp.n_states() {
                        let p = mdp.transition_prob(s, a, s2);
                        if p > 0.0 {
                            let mut sv = 0.0;
                            for a2 in 0..mdp.n_actions() {
                                sv += policy.prob(s2, a2) * q.get(s2, a2);
                            }
                            exp += p * sv;
                        }
                    }
                    mdp.reward(s, a) + mdp.discount() * exp
                };
                residual = residual.max((v - q.get(s, a)).abs());
                next.set(s, a, v);
            }
        }
        q = next;
        if residual < tol {
            return Ok(q);
        }
    }
    Err(Error::Pipeline(format!(
        "policy evaluation on {} did not reach tol {tol}",
        mdp.name()
    )))
}

/// Optional stochastic reward mask applied inside Monte-Carlo rollouts.
#[derive(Debug, Clone, Copy)]
pub struct RewardPerturbation {
    pub p: f64,
}

/// Monte-Carlo Q estimate with per-entry standard errors.
#[derive(Debug, Clone)]
pub struct McEstimate {
    pub mean: QTable,
    pub stderr: QTable,
    pub episodes: usize,
}

/// Estimates Q^pi by exploring-starts rollouts: each (s, a) gets `episodes`
/// truncated episodes that start with action `a` in state `s` and then follow
/// the policy. The trajectory stream and the reward-perturbation stream are
/// separate, so p = 1 reproduces the unperturbed returns exactly.
pub fn monte_carlo_q(
    mdp: &TabularMdp,
    policy: &TabularPolicy,
    perturbation: Option<RewardPerturbation>,
    episodes: usize,
    horizon: usize,
    rng_seed: u64,
) -> Result<McEstimate> {
    if episodes < 1 {
        return Err(Error::Config("episodes must be >= 1".to_string()));
    }
    if let Some(pt) = perturbation {
        if !(pt.p > 0.0 && pt.p <= 1.0) {
            return Err(Error::Config(format!(
                "reward probability p must be in (0, 1], got {}",
                pt.p
            )));
        }
    }
    let mut mean = QTable::zeros(mdp.n_states(), mdp.n_actions());
    let mut stderr = QTable::zeros(mdp.n_states(), mdp.n_actions());
    for s in 0..mdp.n_states() {
        if mdp.is_terminal(s) {
            continue;
        }
        for a in 0..mdp.n_actions() {
            let shard = (s * mdp.n_actions() + a) as u64;
            let mut traj_rng = rng::substream(rng_seed, &[shard, 0]);
            let mut noise_rng = rng::substream(rng_seed, &[shard, 1]);
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for _ in 0..episodes {
                let g = rollout_return(
                    mdp,
                    policy,
                    perturbation,
                    s,
                    a,
                    horizon,
                    &mut traj_rng,
                    &mut noise_rng,
                )?;
                sum += g;
                sumsq += g * g;
            }
            let n = episodes as f64;
            let m = sum / n;
            let var = if episodes > 1 {
                (sumsq - n * m * m).max(0.0) / (n - 1.0)
            } else {
                0.0
            };
            mean.set(s, a, m);
            stderr.set(s, a, (var / n).sqrt());
        }
    }
    Ok(McEstimate {
        mean,
        stderr,
        episodes,
    })
}

#[allow(clippy::too_many_arguments)]
fn rollout_return(
    mdp: &TabularMdp,
    policy: &TabularPolicy,
    perturbation: Option<RewardPerturbation>,
    s0: usize,
    a0: usize,
    horizon: usize,
    traj_rng: &mut rand_chacha::ChaCha8Rng,
    noise_rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<f64> {
    let mut g = 0.0;
    let mut disc = 1.0;
    let mut s = s0;
    let mut a = a0;
    for _ in 0..horizon {
        if mdp.is_terminal(s) {
            break;
        }
        let mut r = mdp.reward(s, a);
        if let Some(pt) = perturbation {
            r = perturb_reward(r, pt.p, noise_rng)?;
        }
        g += disc * r;
        disc *= mdp.discount();
        s = mdp.sample_next(s, a, traj_rng);
        if mdp.is_terminal(s) {
            break;
        }
        a = policy.sample(s, traj_rng);
    }
    Ok(g)
}

/// Configuration for tabular Q-learning runs on the MDP corpus.
#[derive(Debug, Clone, Copy)]
pub struct TabularQConfig {
    pub steps: usize,
    /// Learning rate for update n of an entry is `alpha0 / n^alpha_decay`.
    pub alpha0: f64,
    pub alpha_decay: f64,
    /// Reward probability (1.0 = unperturbed).
    pub p: f64,
}

impl Default for TabularQConfig {
    fn default() -> Self {
        TabularQConfig {
            steps: 2_000_000,
            alpha0: 1.0,
            alpha_decay: 0.75,
            p: 1.0,
        }
    }
}

/// Tabular Q-learning under (optionally) perturbed rewards, behaving
/// uniformly at random with exploring restarts. Returns the learned table.
pub fn tabular_q_learning(mdp: &TabularMdp, cfg: &TabularQConfig, seed: u64) -> Result<QTable> {
    if !(cfg.p > 0.0 && cfg.p <= 1.0) {
        return Err(Error::Config(format!(
            "reward probability p must be in (0, 1], got {}",
            cfg.p
        )));
    }
    let mut q = QTable::zeros(mdp.n_states(), mdp.n_actions());
    let mut counts = vec![0u64; mdp.n_states() * mdp.n_actions()];
    let mut behavior_rng = rng::substream(seed, &[0]);
    let mut noise_rng = rng::substream(seed, &[1]);
    let nonterminal: Vec<usize> = (0..mdp.n_states()).filter(|&s| !mdp.is_terminal(s)).collect();
    if nonterminal.is_empty() {
        return Ok(q);
    }
    let mut s = nonterminal[behavior_rng.gen_range(0..nonterminal.len())];
    for _ in 0..cfg.steps {
        let a = behavior_rng.gen_range(0..mdp.n_actions());
        let mut r = mdp.reward(s, a);
        if cfg.p < 1.0 {
            r = perturb_reward(r, cfg.p, &mut noise_rng)?;
        }
        let s2 = mdp.sample_next(s, a, &mut behavior_rng);
        let bootstrap = if mdp.is_terminal(s2) { 0.0 } else { q.max_q(s2) };
        let idx = s * mdp.n_actions() + a;
        counts[idx] += 1;
        let alpha = cfg.alpha0 / (counts[idx] as f64).powf(cfg.alpha_decay);
        let target = r + mdp.discount() * bootstrap;
        q.set(s, a, q.get(s, a) + alpha * (target - q.get(s, a)));
        s = if mdp.is_terminal(s2) {
            nonterminal[behavior_rng.gen_range(0..nonterminal.len())]
        } else {
            s2
        };
    }
    Ok(q)
}

/// Parses the plain-text corpus format.
///
/// Lines: `#` comments, `discount <g>`, `states <n>`, `actions <n>`,
/// `terminal <s>` (repeatable), then one transition per line:
/// `s a s' prob reward`. All lines for one (s, a) must carry the same
/// reward, which is R(s, a).
pub fn parse_mdp(name: &str, text: &str) -> Result<TabularMdp> {
    let mut discount: Option<f64> = None;
    let mut n_states: Option<usize> = None;
    let mut n_actions: Option<usize> = None;
    let mut terminals: Vec<usize> = Vec::new();
    let mut triples: Vec<(usize, usize, usize, f64, f64, usize)> = Vec::new();
    let perr = |line: usize, msg: String| Error::Parse {
        file: name.to_string(),
        line,
        msg,
    };
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks[0] {
            "discount" | "states" | "actions" | "terminal" => {
                if toks.len() != 2 {
                    return Err(perr(lineno, format!("{} needs one value", toks[0])));
                }
                match toks[0] {
                    "discount" => {
                        discount = Some(toks[1].parse().map_err(|e| {
                            perr(lineno, format!("bad discount: {e}"))
                        })?)
                    }
                    "states" => {
                        n_states = Some(toks[1].parse().map_err(|e| {
                            perr(lineno, format!("bad state count: {e}"))
                        })?)
                    }
                    "actions" => {
                        n_actions = Some(toks[1].parse().map_err(|e| {
                            perr(lineno, format!("bad action count: {e}"))
                        })?)
                    }
                    _ => terminals.push(toks[1].parse().map_err(|e| {
                        perr(lineno, format!("bad terminal state: {e}"))
                    })?),
                }
            }
            _ => {
                if toks.len() != 5 {
                    return Err(perr(
                        lineno,
                        format!("expected `s a s' prob reward`, got {} fields", toks.len()),
                    ));
                }
                let s: usize = toks[0]
                    .parse()
                    .map_err(|e| perr(lineno, format!("bad s: {e}")))?;
                let a: usize = toks[1]
                    .parse()
                    .map_err(|e| perr(lineno, format!("bad a: {e}")))?;
                let s2: usize = toks[2]
                    .parse()
                    .map_err(|e| perr(lineno, format!("bad s': {e}")))?;
                let p: f64 = toks[3]
                    .parse()
                    .map_err(|e| perr(lineno, format!("bad prob: {e}")))?;
                let r: f64 = toks[4]
                    .parse()
                    .map_err(|e| perr(lineno, format!("bad reward: {e}")))?;
                triples.push((s, a, s2, p, r, lineno));
            }
        }
    }
    let discount = discount.ok_or_else(|| perr(0, "missing discount".to_string()))?;
    let n_states = n_states.ok_or_else(|| perr(0, "missing states".to_string()))?;
    let n_actions = n_actions.ok_or_else(|| perr(0, "missing actions".to_string()))?;
    let mut transition = vec![0.0; n_states * n_actions * n_states];
    let mut reward = vec![f64::NAN; n_states * n_actions];
    for (s, a, s2, p, r, lineno) in triples {
        if s >= n_states || a >= n_actions || s2 >= n_states {
            return Err(perr(lineno, format!("index out of range: {s} {a} {s2}")));
        }
        transition[(s * n_actions + a) * n_states + s2] += p;
        let slot = &mut reward[s * n_actions + a];
        if slot.is_nan() {
            *slot = r;
        } else if *slot != r {
            return Err(perr(
                lineno,
                format!("conflicting rewards for (s={s}, a={a}): {} vs {r}", *slot),
            ));
        }
    }
    let mut terminal = vec![false; n_states];
    for t in terminals {
        if t >= n_states {
            return Err(perr(0, format!("terminal state {t} out of range")));
        }
        terminal[t] = true;
    }
    for r in reward.iter_mut() {
        if r.is_nan() {
            *r = 0.0;
        }
    }
    TabularMdp::new(name, n_states, n_actions, discount, transition, reward, terminal)
}

/// Result of one Monte-Carlo reward-invariance check: the perturbed-reward
/// Q estimate must match exact policy evaluation within `sigma_tol`
/// standard errors on every (s, a).
#[derive(Debug, Clone)]
pub struct InvarianceCheck {
    pub mdp: String,
    pub p: f64,
    pub episodes: usize,
    /// Worst |mc - exact| / stderr over all entries (0-stderr entries must
    /// match exactly and report 0 when they do).
    pub worst_sigmas: f64,
    pub worst_entry: (usize, usize),
    pub pass: bool,
}

/// Monte-Carlo Q under a perturbed reward stream vs exact policy evaluation
/// of the unperturbed MDP, under the uniform policy.
pub fn check_reward_invariance(
    mdp: &TabularMdp,
    p: f64,
    episodes: usize,
    rng_seed: u64,
    sigma_tol: f64,
) -> Result<InvarianceCheck> {
    let policy = TabularPolicy::uniform(mdp.n_states(), mdp.n_actions());
    let exact = policy_evaluation(mdp, &policy, 1e-12)?;
    let horizon = mdp.truncation_horizon(1e-4);
    let est = monte_carlo_q(
        mdp,
        &policy,
        Some(RewardPerturbation { p }),
        episodes,
        horizon,
        rng_seed,
    )?;
    let mut worst = 0.0f64;
    let mut worst_entry = (0, 0);
    let mut pass = true;
    for s in 0..mdp.n_states() {
        if mdp.is_terminal(s) {
            continue;
        }
        for a in 0..mdp.n_actions() {
            let diff = (est.mean.get(s, a) - exact.get(s, a)).abs();
            let se = est.stderr.get(s, a);
            let sigmas = if se > 0.0 {
                diff / se
            } else if diff <= 1e-4 {
                // deterministic return: exact up to the truncation bias bound
                0.0
            } else {
                f64::INFINITY
            };
            if sigmas > worst {
                worst = sigmas;
                worst_entry = (s, a);
            }
            if sigmas > sigma_tol {
                pass = false;
            }
        }
    }
    Ok(InvarianceCheck {
        mdp: mdp.name().to_string(),
        p,
        episodes,
        worst_sigmas: worst,
        worst_entry,
        pass,
    })
}

/// Result of one greedy-policy invariance check: tabular Q-learning under
/// perturbed rewards must recover the unperturbed optimal greedy policy in
/// all non-tied states, and Q* within a relative sup-norm bound.
#[derive(Debug, Clone)]
pub struct GreedyCheck {
    pub mdp: String,
    pub p: f64,
    pub seed: u64,
    pub mismatched_states: Vec<usize>,
    pub tied_states: Vec<usize>,
    /// sup-norm distance to Q*, relative to Q*'s value range.
    pub rel_sup_err: f64,
    pub pass: bool,
}

/// Ties (top-2 gap below this) are excluded from greedy comparisons.
pub const GREEDY_TIE_GAP: f64 = 1e-6;

pub fn check_qlearning_invariance(
    mdp: &TabularMdp,
    cfg: &TabularQConfig,
    seed: u64,
    rel_tol: f64,
) -> Result<GreedyCheck> {
    let qstar = value_iteration(mdp, 1e-12)?;
    let learned = tabular_q_learning(mdp, cfg, seed)?;
    let mut mismatched = Vec::new();
    let mut tied = Vec::new();
    for s in 0..mdp.n_states() {
        if mdp.is_terminal(s) {
            continue;
        }
        if qstar.top2_gap(s) < GREEDY_TIE_GAP {
            tied.push(s);
            continue;
        }
        if qstar.greedy_action(s) != learned.greedy_action(s) {
            mismatched.push(s);
        }
    }
    let range = qstar.value_range();
    let rel_sup_err = if range > 0.0 {
        qstar.sup_distance(&learned) / range
    } else {
        qstar.sup_distance(&learned)
    };
    let pass = mismatched.is_empty() && rel_sup_err < rel_tol;
    Ok(GreedyCheck {
        mdp: mdp.name().to_string(),
        p: cfg.p,
        seed,
        mismatched_states: mismatched,
        tied_states: tied,
        rel_sup_err,
        pass,
    })
}

/// The three hand-built corpus MDPs bundled with the repo.
pub fn corpus() -> Vec<TabularMdp> {
    vec![
        parse_mdp("chain2", include_str!("../data/mdp/chain2.mdp")).expect("bundled chain2"),
        parse_mdp("gridchain4", include_str!("../data/mdp/gridchain4.mdp"))
            .expect("bundled gridchain4"),
        parse_mdp("loop5", include_str!("../data/mdp/loop5.mdp")).expect("bundled loop5"),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_step_mdp() -> TabularMdp {
        // s0 -> terminal s1, R = 1, gamma = 0.9
        TabularMdp::new(
            "one_step",
            2,
            1,
            0.9,
            vec![0.0, 1.0, 0.0, 0.0],
            vec![1.0, 0.0],
            vec![false, true],
        )
        .unwrap()
    }

    fn two_chain() -> TabularMdp {
        // s0 -> s1 (R=0), s1 -> terminal (R=1), gamma = 0.9
        TabularMdp::new(
            "chain",
            3,
            1,
            0.9,
            vec![
                0.0, 1.0, 0.0, // s0
                0.0, 0.0, 1.0, // s1
                0.0, 0.0, 0.0, // terminal (auto-filled)
            ],
            vec![0.0, 1.0, 0.0],
            vec![false, false, true],
        )
        .unwrap()
    }

    #[test]
    fn value_iteration_one_step() {
        let q = value_iteration(&one_step_mdp(), 1e-10).unwrap();
        assert!((q.get(0, 0) - 1.0).abs() < 1e-9);
        assert_eq!(q.get(1, 0), 0.0);
    }

    #[test]
    fn value_iteration_two_chain() {
        let q = value_iteration(&two_chain(), 1e-12).unwrap();
        assert!((q.get(0, 0) - 0.9).abs() < 1e-9);
        assert!((q.get(1, 0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn value_iteration_zero_rewards() {
        let mdp = TabularMdp::new(
            "zeros",
            2,
            2,
            0.9,
            vec![
                0.5, 0.5, 0.5, 0.5, // s0
                0.5, 0.5, 0.5, 0.5, // s1
            ],
            vec![0.0; 4],
            vec![false, false],
        )
        .unwrap();
        let q = value_iteration(&mdp, 1e-10).unwrap();
        for s in 0..2 {
            for a in 0..2 {
                assert_eq!(q.get(s, a), 0.0);
            }
        }
    }

    #[test]
    fn residual_decreases_monotonically() {
        let mdp = two_chain();
        let mut q = QTable::zeros(3, 1);
        let mut last = f64::INFINITY;
        for _ in 0..30 {
            let (next, res) = bellman_optimality_sweep(&mdp, &q);
            assert!(res <= last + 1e-12, "residual grew: {res} > {last}");
            last = res;
            q = next;
        }
    }

    #[test]
    fn rejects_non_stochastic_rows() {
        let err = TabularMdp::new(
            "bad",
            2,
            1,
            0.9,
            vec![0.5, 0.4, 0.0, 1.0],
            vec![0.0, 0.0],
            vec![false, true],
        )
        .unwrap_err();
        match err {
            Error::InvalidMdp(_) => {}
            other => panic!("expected InvalidMdp, got {other:?}"),
        }
    }

    #[test]
    fn policy_evaluation_zero_rewards_uniform() {
        let mdp = TabularMdp::new(
            "zeros",
            2,
            2,
            0.9,
            vec![0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5],
            vec![0.0; 4],
            vec![false, false],
        )
        .unwrap();
        let pi = TabularPolicy::uniform(2, 2);
        let q = policy_evaluation(&mdp, &pi, 1e-10).unwrap();
        for s in 0..2 {
            for a in 0..2 {
                assert_eq!(q.get(s, a), 0.0);
            }
        }
    }

    #[test]
    fn greedy_policy_evaluation_matches_value_iteration() {
        for mdp in corpus() {
            let qstar = value_iteration(&mdp, 1e-12).unwrap();
            let pi = TabularPolicy::greedy_from(&qstar);
            let qpi = policy_evaluation(&mdp, &pi, 1e-12).unwrap();
            assert!(
                qstar.sup_distance(&qpi) < 1e-8,
                "{}: greedy policy evaluation drifted from Q*",
                mdp.name()
            );
        }
    }

    #[test]
    fn mc_identity_at_p_one() {
        let mdp = two_chain();
        let pi = TabularPolicy::uniform(3, 1);
        let h = mdp.truncation_horizon(1e-4);
        let plain = monte_carlo_q(&mdp, &pi, None, 200, h, 99).unwrap();
        let perturbed = monte_carlo_q(
            &mdp,
            &pi,
            Some(RewardPerturbation { p: 1.0 }),
            200,
            h,
            99,
        )
        .unwrap();
        assert_eq!(plain.mean, perturbed.mean);
    }

    #[test]
    fn corpus_parses_and_describes_itself() {
        let mdps = corpus();
        assert_eq!(mdps.len(), 3);
        assert_eq!(mdps[0].name(), "chain2");
        assert!(mdps.iter().all(|m| m.n_actions() == 2));
    }

    #[test]
    fn parse_reports_file_and_line() {
        let err = parse_mdp("broken", "discount 0.9\nstates 2\nactions 1\n0 0 zzz 1.0 0.0\n")
            .unwrap_err();
        match err {
            Error::Parse { file, line, .. } => {
                assert_eq!(file, "broken");
                assert_eq!(line, 4);
            }
            other => panic!("expected Parse error, got {other:?}"),
        }
    }
}
