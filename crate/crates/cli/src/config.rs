//! Flat `key = value` experiment configuration with `#` comments and dotted
//! keys for nesting. Every parse or validation error names the offending
//! file, line, and field.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use lcd_core::agents::{Algorithm, TrainConfig};
use lcd_core::envs::Game;
use lcd_core::error::Error;
use lcd_core::lcd::{MatrixConfig, PhiFormula, P_PERCENTS};
use lcd_core::wrappers::{ChannelMode, ShapingScheme};

/// Everything `diagnose` needs: the matrix plus output location.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub matrix: MatrixConfig,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let mut shaping = BTreeMap::new();
        shaping.insert(Game::KeyVault, ShapingScheme::KeyvaultSubgoals);
        shaping.insert(Game::LaneLeaper, ShapingScheme::LaneleaperProgress);
        shaping.insert(Game::MazeRun, ShapingScheme::MazerunNovelty);
        ExperimentConfig {
            matrix: MatrixConfig {
                games: Game::ALL.to_vec(),
                algorithms: Algorithm::ALL.to_vec(),
                seeds: vec![0, 1, 2, 3, 4],
                modes: ChannelMode::ALL.to_vec(),
                p_values: P_PERCENTS.to_vec(),
                shaping,
                train: TrainConfig::default(),
                theta: 0.5,
                phi_formula: PhiFormula::RelativeChange,
                master_seed: 17,
            },
            output_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    /// Shrinks the experiment to a quick pipeline-liveness pass:
    /// two games, one seed, 20k steps.
    pub fn apply_smoke(&mut self) {
        self.matrix.games.truncate(2);
        self.matrix.seeds.truncate(1);
        self.matrix
            .shaping
            .retain(|game, _| self.matrix.games.contains(game));
        let t = &mut self.matrix.train;
        t.total_steps = t.total_steps.min(20_000);
        t.eval_every = t.eval_every.min(2_000);
        t.eval_episodes = t.eval_episodes.min(10);
    }
}

fn perr(file: &Path, line: usize, msg: String) -> Error {
    Error::Parse {
        file: file.display().to_string(),
        line,
        msg,
    }
}

/// Parses a config file over the defaults.
pub fn parse_config(path: &Path, text: &str) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::default();
    // list-valued keys replace the default on first mention
    let mut shaping_cleared = false;
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            perr(path, lineno, format!("expected `key = value`, got `{line}`"))
        })?;
        let key = key.trim();
        let value = value.trim();
        let bad = |msg: String| perr(path, lineno, msg);
        match key {
            "games" => {
                cfg.matrix.games = split_list(value)
                    .map(|t| {
                        Game::parse(t).ok_or_else(|| bad(format!("games: unknown game `{t}`")))
                    })
                    .collect::<Result<_, _>>()?;
            }
            "algorithms" => {
                cfg.matrix.algorithms = split_list(value)
                    .map(|t| {
                        Algorithm::parse(t)
                            .ok_or_else(|| bad(format!("algorithms: unknown algorithm `{t}`")))
                    })
                    .collect::<Result<_, _>>()?;
            }
            "seeds" => {
                cfg.matrix.seeds = split_list(value)
                    .map(|t| {
                        t.parse::<u64>()
                            .map_err(|e| bad(format!("seeds: bad value `{t}`: {e}")))
                    })
                    .collect::<Result<_, _>>()?;
            }
            "modes" => {
                cfg.matrix.modes = split_list(value)
                    .map(|t| {
                        ChannelMode::parse(t)
                            .ok_or_else(|| bad(format!("modes: unknown mode `{t}`")))
                    })
                    .collect::<Result<_, _>>()?;
            }
            "p_values" => {
                cfg.matrix.p_values = split_list(value)
                    .map(|t| {
                        let p: f64 = t
                            .parse()
                            .map_err(|e| bad(format!("p_values: bad value `{t}`: {e}")))?;
                        let percent = (p * 100.0).round() as u32;
                        if (percent as f64 - p * 100.0).abs() > 1e-9 {
                            return Err(bad(format!("p_values: unsupported value `{t}`")));
                        }
                        Ok(percent)
                    })
                    .collect::<Result<_, _>>()?;
            }
            "theta" => {
                cfg.matrix.theta = value
                    .parse()
                    .map_err(|e| bad(format!("theta: bad value `{value}`: {e}")))?;
            }
            "phi_formula" => {
                cfg.matrix.phi_formula = PhiFormula::parse(value)
                    .ok_or_else(|| bad(format!("phi_formula: unknown formula `{value}`")))?;
            }
            "output_dir" => {
                cfg.output_dir = PathBuf::from(value);
            }
            "master_seed" => {
                cfg.matrix.master_seed = value
                    .parse()
                    .map_err(|e| bad(format!("master_seed: bad value `{value}`: {e}")))?;
            }
            _ if key.starts_with("shaping.") => {
                if !shaping_cleared {
                    cfg.matrix.shaping.clear();
                    shaping_cleared = true;
                }
                let game_name = &key["shaping.".len()..];
                let game = Game::parse(game_name)
                    .ok_or_else(|| bad(format!("shaping: unknown game `{game_name}`")))?;
                let scheme = ShapingScheme::parse(value)
                    .ok_or_else(|| bad(format!("shaping.{game_name}: unknown scheme `{value}`")))?;
                if scheme != ShapingScheme::Off {
                    cfg.matrix.shaping.insert(game, scheme);
                }
            }
            _ if key.starts_with("train.") => {
                parse_train_key(&mut cfg.matrix.train, &key["train.".len()..], value)
                    .map_err(|msg| bad(msg))?;
            }
            _ => {
                return Err(bad(format!("unknown key `{key}`")));
            }
        }
    }
    Ok(cfg)
}

fn split_list(value: &str) -> impl Iterator<Item = &str> {
    value
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
}

fn parse_train_key(train: &mut TrainConfig, key: &str, value: &str) -> Result<(), String> {
    macro_rules! set {
        ($field:ident) => {{
            train.$field = value
                .parse()
                .map_err(|e| format!("train.{key}: bad value `{value}`: {e}"))?;
        }};
    }
    match key {
        "total_steps" => set!(total_steps),
        "eval_every" => set!(eval_every),
        "eval_episodes" => set!(eval_episodes),
        "gamma" => set!(gamma),
        "gae_lambda" => set!(gae_lambda),
        "clip_epsilon" => set!(clip_epsilon),
        "learning_rate" => set!(learning_rate),
        "rollout_length" => set!(rollout_length),
        "minibatch_size" => set!(minibatch_size),
        "epochs_per_rollout" => set!(epochs_per_rollout),
        "hidden_units" => set!(hidden_units),
        "entropy_coef" => set!(entropy_coef),
        "value_coef" => set!(value_coef),
        "q_learning_rate" => set!(q_learning_rate),
        "q_explore_final" => set!(q_explore_final),
        _ => return Err(format!("unknown key `train.{key}`")),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_pass_validation() {
        let cfg = ExperimentConfig::default();
        cfg.matrix.validate().unwrap();
    }

    #[test]
    fn parses_overrides() {
        let text = "\n# demo\ngames = DenseCollect, LaneLeaper\nseeds = 3\ntrain.total_steps = 1000\nshaping.LaneLeaper = laneleaper_progress\n";
        let cfg = parse_config(Path::new("demo.cfg"), text).unwrap();
        assert_eq!(cfg.matrix.games, vec![Game::DenseCollect, Game::LaneLeaper]);
        assert_eq!(cfg.matrix.seeds, vec![3]);
        assert_eq!(cfg.matrix.train.total_steps, 1000);
        assert_eq!(cfg.matrix.shaping.len(), 1);
    }

    #[test]
    fn errors_carry_line_and_field() {
        let err = parse_config(Path::new("x.cfg"), "theta = 0.5\np_values = 1.0, bogus\n")
            .unwrap_err();
        match err {
            Error::Parse { line, msg, .. } => {
                assert_eq!(line, 2);
                assert!(msg.contains("p_values"), "{msg}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_p_value_fails_validation_naming_field() {
        let cfg = parse_config(Path::new("x.cfg"), "p_values = 1.0, 0.75, 0.25\n").unwrap();
        let err = cfg.matrix.validate().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("p_values"), "{msg}");
        assert!(msg.contains("0.5"), "{msg}");
    }

    #[test]
    fn smoke_shrinks_the_grid() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_smoke();
        assert_eq!(cfg.matrix.games.len(), 2);
        assert_eq!(cfg.matrix.seeds.len(), 1);
        assert_eq!(cfg.matrix.train.total_steps, 20_000);
        cfg.matrix.validate().unwrap();
    }
}
