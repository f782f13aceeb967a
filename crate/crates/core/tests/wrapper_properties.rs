//! The perturbation wrappers: expected-reward preservation, the eval-phase
//! gate, shaping schemes, channel selection, and return normalization.

use lcd_core::envs::{Action, Env, Event, Game, GameMeta};
use lcd_core::rng;
use lcd_core::wrappers::{
    normalize_return, perturb_reward, select_channel, shape_reward, ChannelMode,
    PerturbationConfig, Phase, ShapingScheme, ShapingState, WrappedEnv, NOVELTY_BETA,
};
use rand::Rng;
use rand_chacha::rand_core::RngCore;

#[test]
fn lemma_mean_preservation_over_a_million_draws() {
    // empirical mean within 4 sigma / sqrt(N) of r,
    // sigma = |r| * sqrt((1-p)/p)
    let n = 1_000_000u64;
    for &r in &[-2.0f64, 0.5, 2.0] {
        for &p in &[0.25f64, 0.5, 0.75] {
            let mut stream = rng::substream(0x1E, &[(r * 4.0) as u64 as u64, (p * 100.0) as u64]);
            let mut sum = 0.0;
            for _ in 0..n {
                sum += perturb_reward(r, p, &mut stream).unwrap();
            }
            let mean = sum / n as f64;
            let sigma = r.abs() * ((1.0 - p) / p).sqrt();
            let bound = 4.0 * sigma / (n as f64).sqrt();
            assert!(
                (mean - r).abs() <= bound,
                "r={r} p={p}: mean {mean:.5} deviates more than {bound:.5}"
            );
        }
    }
}

#[test]
fn p_one_is_the_identity() {
    let mut stream = rng::stream(0);
    for i in 0..100 {
        let r = i as f64 - 50.0;
        assert_eq!(perturb_reward(r, 1.0, &mut stream).unwrap(), r);
    }
}

#[test]
fn zero_rewards_consume_no_randomness() {
    let mut stream = rng::stream(9);
    let before = stream.get_word_pos();
    assert_eq!(perturb_reward(0.0, 0.5, &mut stream).unwrap(), 0.0);
    assert_eq!(stream.get_word_pos(), before);
    // a nonzero reward does consume exactly one draw's worth
    perturb_reward(1.0, 0.5, &mut stream).unwrap();
    assert_ne!(stream.get_word_pos(), before);
}

#[test]
fn out_of_range_p_is_a_config_error() {
    let mut stream = rng::stream(0);
    assert!(perturb_reward(1.0, 0.0, &mut stream).is_err());
    assert!(perturb_reward(1.0, -0.5, &mut stream).is_err());
    assert!(perturb_reward(1.0, 1.5, &mut stream).is_err());
}

#[test]
fn keyvault_subgoal_bonuses_count_keys_and_doors() {
    let mut state = ShapingState::default();
    let events = vec![
        Event::KeyCollected,
        Event::DoorOpened,
        Event::CellVisited { x: 1, y: 1 },
    ];
    let mut total = 0.0;
    // an episode with 2 keys, 2 doors and the gem
    total += shape_reward(&events, ShapingScheme::KeyvaultSubgoals, &mut state);
    total += shape_reward(&events, ShapingScheme::KeyvaultSubgoals, &mut state);
    total += shape_reward(
        &[Event::GoalReached, Event::CellVisited { x: 2, y: 1 }],
        ShapingScheme::KeyvaultSubgoals,
        &mut state,
    );
    assert_eq!(total, 4.0);
}

#[test]
fn novelty_bonus_decays_with_visit_count() {
    let mut state = ShapingState::default();
    let at = |x, y| vec![Event::CellVisited { x, y }];
    let first = shape_reward(&at(3, 4), ShapingScheme::MazerunNovelty, &mut state);
    assert_eq!(first, NOVELTY_BETA);
    let second = shape_reward(&at(3, 4), ShapingScheme::MazerunNovelty, &mut state);
    assert!((second - NOVELTY_BETA / 2.0f64.sqrt()).abs() < 1e-12);
    let other = shape_reward(&at(4, 4), ShapingScheme::MazerunNovelty, &mut state);
    assert_eq!(other, NOVELTY_BETA);
}

#[test]
fn lane_progress_counts_lane_events() {
    let mut state = ShapingState::default();
    let bonus = shape_reward(
        &[Event::LaneAdvanced, Event::CellVisited { x: 0, y: 11 }],
        ShapingScheme::LaneleaperProgress,
        &mut state,
    );
    assert_eq!(bonus, 1.0);
}

#[test]
fn scheme_game_mismatch_is_a_config_error() {
    let cfg = PerturbationConfig {
        mode: ChannelMode::Semantic,
        p: 1.0,
        shaping: ShapingScheme::KeyvaultSubgoals,
        phase: Phase::Train,
    };
    assert!(cfg.validate(Game::MazeRun).is_err());
    assert!(cfg.validate(Game::KeyVault).is_ok());
}

static TEST_META: GameMeta = GameMeta {
    game: Game::DenseCollect,
    r_max: 9.0,
    r_min: 1.0,
    r_min_se: 0.0,
    episode_cap: 10,
    action_set: &[Action::Stay],
    entity_table: &[(1, "thing")],
    fg_table: &[0, 1],
};

#[test]
fn normalization_formula_endpoints() {
    assert_eq!(normalize_return(1.0, &TEST_META).unwrap(), 0.0);
    assert_eq!(normalize_return(9.0, &TEST_META).unwrap(), 1.0);
    assert_eq!(normalize_return(5.0, &TEST_META).unwrap(), 0.5);
    // not clamped below zero
    assert!(normalize_return(0.0, &TEST_META).unwrap() < 0.0);
}

#[test]
fn degenerate_score_range_is_rejected() {
    static BAD: GameMeta = GameMeta {
        game: Game::DenseCollect,
        r_max: 1.0,
        r_min: 1.0,
        r_min_se: 0.0,
        episode_cap: 10,
        action_set: &[Action::Stay],
        entity_table: &[],
        fg_table: &[0],
    };
    assert!(normalize_return(0.5, &BAD).is_err());
}

#[test]
fn channel_selection_scales_and_replicates() {
    let env = Env::generate_raw(Game::MazeRun, 3);
    let obs = env.render();
    let meta = env.meta();

    let px = select_channel(&obs, ChannelMode::Pixels, meta);
    assert_eq!(px.len(), 65 * 65 * 3);
    for (i, &b) in obs.pixels.iter().enumerate() {
        assert_eq!(px[i], b as f64 / 255.0);
        if b == 255 {
            assert_eq!(px[i], 1.0);
        }
    }

    let sem = select_channel(&obs, ChannelMode::Semantic, meta);
    let max_id = meta.max_semantic_id() as f64;
    for i in 0..obs.semantic.len() {
        let expected = obs.semantic[i] as f64 / max_id;
        assert_eq!(sem[i * 3], expected);
        assert_eq!(sem[i * 3 + 1], expected);
        assert_eq!(sem[i * 3 + 2], expected);
        if obs.semantic[i] == meta.max_semantic_id() {
            assert_eq!(sem[i * 3], 1.0);
        }
    }

    // figure/ground for MazeRun is binary, so inputs are exactly {0, 1}
    let fg = select_channel(&obs, ChannelMode::FigureGround, meta);
    assert!(fg.iter().all(|&v| v == 0.0 || v == 1.0));

    // shape constancy across modes
    assert_eq!(px.len(), sem.len());
    assert_eq!(px.len(), fg.len());
}

#[test]
fn eval_phase_rewards_are_bit_identical_to_the_raw_env() {
    for game in Game::ALL {
        let mut raw = Env::generate_raw(game, 12);
        let eval_cfg = PerturbationConfig {
            mode: ChannelMode::Semantic,
            p: 0.25,
            shaping: match game {
                Game::KeyVault => ShapingScheme::KeyvaultSubgoals,
                Game::LaneLeaper => ShapingScheme::LaneleaperProgress,
                Game::MazeRun => ShapingScheme::MazerunNovelty,
                _ => ShapingScheme::Off,
            },
            phase: Phase::Eval,
        };
        let mut wrapped = WrappedEnv::new(Env::generate_raw(game, 12), eval_cfg, 777).unwrap();
        let mut stream = rng::substream(5, &[game.meta().episode_cap as u64]);
        let set = game.meta().action_set;
        while !raw.done() {
            let a = set[stream.gen_range(0..set.len())];
            let r1 = raw.step(a).unwrap();
            let r2 = wrapped.step(a).unwrap();
            assert_eq!(r1.reward.to_bits(), r2.reward.to_bits(), "{game}");
            assert_eq!(r2.shaping_bonus, 0.0);
            assert_eq!(r1.done, r2.done);
        }
    }
}

#[test]
fn train_phase_applies_shaping_on_top_of_the_masked_reward() {
    // with p=1 the mask is the identity, so delivered = raw + bonus
    let cfg = PerturbationConfig {
        mode: ChannelMode::Semantic,
        p: 1.0,
        shaping: ShapingScheme::MazerunNovelty,
        phase: Phase::Train,
    };
    let mut wrapped = WrappedEnv::new(Env::generate_raw(Game::MazeRun, 1), cfg, 3).unwrap();
    let step = wrapped.step(Action::Stay).unwrap();
    assert_eq!(step.reward, step.raw_reward + step.shaping_bonus);
    assert_eq!(step.shaping_bonus, NOVELTY_BETA);
}
