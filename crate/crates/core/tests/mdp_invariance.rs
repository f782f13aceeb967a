//! Ground-truth checks for the stochastic-reward invariance result on the
//! bundled MDP corpus: Monte-Carlo action values under masked-and-rescaled
//! rewards must match exact policy evaluation of the unperturbed MDP, and
//! tabular Q-learning under perturbed rewards must recover the unperturbed
//! greedy policy.

use lcd_core::mdp::{
    check_qlearning_invariance, check_reward_invariance, corpus, monte_carlo_q,
    policy_evaluation, tabular_q_learning, value_iteration, parse_mdp, QTable, TabularMdp,
    TabularPolicy, TabularQConfig, GREEDY_TIE_GAP,
};
use lcd_core::rng;

const P_GRID: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

#[test]
fn monte_carlo_matches_policy_evaluation_under_perturbation() {
    for mdp in corpus() {
        for &p in &P_GRID {
            let check = check_reward_invariance(&mdp, p, 4000, 0xD1CE, 3.0).unwrap();
            assert!(
                check.pass,
                "{} p={p}: worst deviation {:.3} sigma at {:?}",
                check.mdp, check.worst_sigmas, check.worst_entry
            );
        }
    }
}

#[test]
fn q_learning_under_sparse_rewards_recovers_greedy_policy() {
    for mdp in corpus() {
        for seed in 0..3u64 {
            let cfg = TabularQConfig {
                p: 0.25,
                ..TabularQConfig::default()
            };
            let check =
                check_qlearning_invariance(&mdp, &cfg, rng::mix(0xBEEF, &[seed]), 0.05).unwrap();
            assert!(
                check.pass,
                "{} seed {seed}: mismatches {:?}, rel sup err {:.4}",
                check.mdp, check.mismatched_states, check.rel_sup_err
            );
        }
    }
}

#[test]
fn q_learning_greedy_matches_value_iteration_across_p_grid() {
    for mdp in corpus() {
        let qstar = value_iteration(&mdp, 1e-12).unwrap();
        for &p in &P_GRID {
            let cfg = TabularQConfig {
                p,
                ..TabularQConfig::default()
            };
            let learned = tabular_q_learning(&mdp, &cfg, 0x5EED).unwrap();
            for s in 0..mdp.n_states() {
                if mdp.is_terminal(s) || qstar.top2_gap(s) < GREEDY_TIE_GAP {
                    continue;
                }
                assert_eq!(
                    qstar.greedy_action(s),
                    learned.greedy_action(s),
                    "{} p={p}: greedy mismatch in state {s}",
                    mdp.name()
                );
            }
        }
    }
}

#[test]
fn single_terminal_transition_with_unit_rate_sets_q_exactly() {
    let mdp = parse_mdp(
        "unit",
        "discount 0.9\nstates 2\nactions 1\nterminal 1\n0 0 1 1.0 1.0\n",
    )
    .unwrap();
    let cfg = TabularQConfig {
        steps: 1,
        alpha0: 1.0,
        alpha_decay: 0.0,
        p: 1.0,
    };
    let q = tabular_q_learning(&mdp, &cfg, 3).unwrap();
    assert_eq!(q.get(0, 0), 1.0);
}

/// Independent oracle: solve (I - gamma * P_pi) v = r_pi by Gaussian
/// elimination, then Q(s,a) = R(s,a) + gamma * sum_s' P(s'|s,a) v(s').
fn linear_system_q(mdp: &TabularMdp, policy: &TabularPolicy) -> QTable {
    let n = mdp.n_states();
    let na = mdp.n_actions();
    // v = state values of the policy
    let mut a = vec![vec![0.0f64; n + 1]; n];
    for s in 0..n {
        for s2 in 0..n {
            let mut p_pi = 0.0;
            for act in 0..na {
                p_pi += policy.prob(s, act) * mdp.transition_prob(s, act, s2);
            }
            a[s][s2] = if s == s2 { 1.0 } else { 0.0 }
                - if mdp.is_terminal(s) { 0.0 } else { mdp.discount() * p_pi };
        }
        let mut r_pi = 0.0;
        for act in 0..na {
            r_pi += policy.prob(s, act) * mdp.reward(s, act);
        }
        a[s][n] = if mdp.is_terminal(s) { 0.0 } else { r_pi };
    }
    // Gaussian elimination with partial pivoting
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        let div = a[col][col];
        for k in col..=n {
            a[col][k] /= div;
        }
        for row in 0..n {
            if row != col && a[row][col] != 0.0 {
                let factor = a[row][col];
                for k in col..=n {
                    a[row][k] -= factor * a[col][k];
                }
            }
        }
    }
    let v: Vec<f64> = (0..n).map(|s| a[s][n]).collect();
    let mut q = QTable::zeros(n, na);
    for s in 0..n {
        if mdp.is_terminal(s) {
            continue;
        }
        for act in 0..na {
            let mut exp = 0.0;
            for s2 in 0..n {
                exp += mdp.transition_prob(s, act, s2) * v[s2];
            }
            q.set(s, act, mdp.reward(s, act) + mdp.discount() * exp);
        }
    }
    q
}

#[test]
fn policy_evaluation_agrees_with_direct_linear_solve() {
    for mdp in corpus() {
        let policy = TabularPolicy::uniform(mdp.n_states(), mdp.n_actions());
        let iterative = policy_evaluation(&mdp, &policy, 1e-13).unwrap();
        let direct = linear_system_q(&mdp, &policy);
        assert!(
            iterative.sup_distance(&direct) < 1e-9,
            "{}: iterative vs direct solve drifted {:.2e}",
            mdp.name(),
            iterative.sup_distance(&direct)
        );
    }
}

#[test]
fn unperturbed_monte_carlo_is_consistent_with_exact_values() {
    for mdp in corpus() {
        let policy = TabularPolicy::uniform(mdp.n_states(), mdp.n_actions());
        let exact = policy_evaluation(&mdp, &policy, 1e-12).unwrap();
        let horizon = mdp.truncation_horizon(1e-4);
        let est = monte_carlo_q(&mdp, &policy, None, 4000, horizon, 0xFACE).unwrap();
        for s in 0..mdp.n_states() {
            if mdp.is_terminal(s) {
                continue;
            }
            for a in 0..mdp.n_actions() {
                let diff = (est.mean.get(s, a) - exact.get(s, a)).abs();
                let bound = 3.0 * est.stderr.get(s, a) + 1e-3;
                assert!(
                    diff <= bound,
                    "{} ({s},{a}): |{:.5} - {:.5}| > {:.5}",
                    mdp.name(),
                    est.mean.get(s, a),
                    exact.get(s, a),
                    bound
                );
            }
        }
    }
}

#[test]
fn identical_seeds_reproduce_monte_carlo_exactly() {
    let mdp = &corpus()[0];
    let policy = TabularPolicy::uniform(mdp.n_states(), mdp.n_actions());
    let a = monte_carlo_q(mdp, &policy, None, 500, 50, 42).unwrap();
    let b = monte_carlo_q(mdp, &policy, None, 500, 50, 42).unwrap();
    assert_eq!(a.mean, b.mean);
    assert_eq!(a.stderr, b.stderr);
}
