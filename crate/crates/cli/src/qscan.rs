//! Dev calibration helper: recomputes the committed random-agent baselines.

use lcd_core::envs::{estimate_random_baseline, Game, CALIBRATION_EPISODES, CALIBRATION_SEED};

fn main() {
    for game in Game::ALL {
        let (mean, se) =
            estimate_random_baseline(game, CALIBRATION_EPISODES, CALIBRATION_SEED).unwrap();
        println!("{}: r_min = {:.17e} se = {:.17e}", game.name(), mean, se);
    }
}
