//! Dev probe: one cell of the matrix with hyperparameter overrides.
//! Not part of the shipped CLI surface.

use lcd_core::agents::{train, Algorithm, TrainConfig};
use lcd_core::envs::Game;
use lcd_core::wrappers::{ChannelMode, PerturbationConfig, Phase, ShapingScheme};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let game = Game::parse(&args[1]).unwrap();
    let algo = Algorithm::parse(&args[2]).unwrap();
    let mode = ChannelMode::parse(&args[3]).unwrap();
    let steps: u64 = args[4].parse().unwrap();
    let p: f64 = args[5].parse().unwrap();
    let shaping = ShapingScheme::parse(&args[6]).unwrap();
    let seed: u64 = args[7].parse().unwrap();
    let mut cfg = TrainConfig {
        total_steps: steps,
        eval_every: (steps / 12).max(1),
        eval_episodes: 30,
        rng_seed: seed,
        ..TrainConfig::default()
    };
    // extra args: key=value overrides
    for kv in &args[8..] {
        let (k, v) = kv.split_once('=').unwrap();
        match k {
            "lr" => cfg.learning_rate = v.parse().unwrap(),
            "qlr" => cfg.q_learning_rate = v.parse().unwrap(),
            "epochs" => cfg.epochs_per_rollout = v.parse().unwrap(),
            "rollout" => cfg.rollout_length = v.parse().unwrap(),
            "minibatch" => cfg.minibatch_size = v.parse().unwrap(),
            "entropy" => cfg.entropy_coef = v.parse().unwrap(),
            "gamma" => cfg.gamma = v.parse().unwrap(),
            "hidden" => cfg.hidden_units = v.parse().unwrap(),
            "explore_final" => cfg.q_explore_final = v.parse().unwrap(),
            _ => panic!("unknown override {k}"),
        }
    }
    let pert = PerturbationConfig {
        mode,
        p,
        shaping,
        phase: Phase::Train,
    };
    let t = std::time::Instant::now();
    let rec = train(algo, game, &pert, &cfg, seed).unwrap();
    let curve: Vec<String> = rec
        .eval_curve
        .points
        .iter()
        .map(|(_, v)| format!("{v:.2}"))
        .collect();
    println!(
        "{} {} {} p={p} sh={} seed={seed} {} | auc={:.4} | [{}] | {} | {:.0?}",
        game.name(),
        algo.name(),
        mode.name(),
        shaping.name(),
        args[8..].join(" "),
        rec.eval_curve.auc().unwrap(),
        curve.join(" "),
        rec.status.label(),
        t.elapsed()
    );
}
