//! `lcd` command-line driver.
//!
//! Subcommands:
//!   diagnose --config <file> [--workers N] [--smoke]
//!   verify-theorem
//!   play <game> --seed S [--policy <file>|random] --steps N [--dump-frames DIR]
//!   report --from <runs.jsonl> [--theta T] [--phi-formula F]
//!
//! Exit codes: 0 success, 2 config error, 3 partial run failure,
//! 4 verification failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

mod config;
mod output;

use lcd_core::agents::{downsample, load_params, Algorithm, PolicyParams, RunStatus, TrainConfig};
use lcd_core::envs::{
    trajectory_line, write_mask_matrix, write_ppm, Env, Game, LevelSpec, Split,
    TEST_SEEDS, TRAIN_SEEDS,
};
use lcd_core::error::Error;
use lcd_core::lcd::{build_report, run_matrix, MatrixConfig, PhiFormula, P_PERCENTS};
use lcd_core::mdp::{
    check_qlearning_invariance, check_reward_invariance, corpus, TabularQConfig,
};
use lcd_core::rng;
use lcd_core::wrappers::{select_channel, ChannelMode};

use config::{parse_config, ExperimentConfig};

const EXIT_CONFIG: u8 = 2;
const EXIT_PARTIAL: u8 = 3;
const EXIT_VERIFY: u8 = 4;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let code = match args.first().map(String::as_str) {
        Some("diagnose") => cmd_diagnose(&args[1..]),
        Some("verify-theorem") => cmd_verify_theorem(),
        Some("play") => cmd_play(&args[1..]),
        Some("report") => cmd_report(&args[1..]),
        Some("--help") | Some("-h") | None => {
            print_usage();
            Ok(0)
        }
        Some(other) => Err(Error::Config(format!("unknown command `{other}`"))),
    };
    match code {
        Ok(n) => ExitCode::from(n),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn print_usage() {
    println!(
        "usage:\n  lcd diagnose --config <file> [--workers N] [--smoke]\n  lcd verify-theorem\n  lcd play <game> --seed S [--policy <file>|random] --steps N [--dump-frames DIR]\n  lcd report --from <runs.jsonl> [--theta T] [--phi-formula F]\n\nLCD_OUTPUT_DIR overrides the configured output directory."
    );
}

fn flag_value<'a>(args: &'a [String], flag: &str) -> Option<&'a str> {
    args.iter()
        .position(|a| a == flag)
        .and_then(|i| args.get(i + 1))
        .map(String::as_str)
}

fn cmd_diagnose(args: &[String]) -> Result<u8, Error> {
    let config_path = flag_value(args, "--config")
        .ok_or_else(|| Error::Config("diagnose requires --config <file>".to_string()))?;
    let workers: usize = match flag_value(args, "--workers") {
        Some(v) => v
            .parse()
            .map_err(|e| Error::Config(format!("--workers: bad value `{v}`: {e}")))?,
        None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    let text = std::fs::read_to_string(config_path)?;
    let mut cfg = parse_config(Path::new(config_path), &text)?;
    if args.iter().any(|a| a == "--smoke") {
        cfg.apply_smoke();
    }
    if let Ok(dir) = std::env::var("LCD_OUTPUT_DIR") {
        cfg.output_dir = PathBuf::from(dir);
    }
    cfg.matrix.validate()?;

    let report = run_matrix(&cfg.matrix, workers)?;
    write_artifacts(&report, &cfg)?;
    eprintln!(
        "diagnose: {} runs ({} failed), {} profiles -> {}",
        report.records.len(),
        report.n_failed,
        report.profiles.len(),
        cfg.output_dir.display()
    );
    for note in &report.incomplete {
        eprintln!("diagnose: incomplete: {note}");
    }
    if report.n_failed > 0 || !report.incomplete.is_empty() {
        return Ok(EXIT_PARTIAL);
    }
    Ok(0)
}

fn write_artifacts(
    report: &lcd_core::lcd::MatrixReport,
    cfg: &ExperimentConfig,
) -> Result<(), Error> {
    std::fs::create_dir_all(&cfg.output_dir)?;
    output::write_runs_jsonl(&report.records, &cfg.output_dir.join("runs.jsonl"))?;
    output::write_profiles_csv(report, cfg.matrix.theta, &cfg.output_dir.join("profiles.csv"))?;
    output::write_consistency_csv(report, &cfg.output_dir.join("consistency.csv"))?;
    output::write_synergy_csv(report, &cfg.output_dir.join("synergy.csv"))?;
    output::write_curve_svgs(report, &cfg.output_dir.join("curves"))?;
    Ok(())
}

fn cmd_verify_theorem() -> Result<u8, Error> {
    let mut all_pass = true;
    println!("reward-invariance checks (Monte-Carlo Q vs exact policy evaluation):");
    for mdp in corpus() {
        for &p in &[0.25, 0.5, 0.75, 1.0] {
            let check = check_reward_invariance(&mdp, p, 4000, 0xD1CE, 3.0)?;
            println!(
                "  {:<11} p={:<5} worst |dQ|/se = {:.3} sigma at (s={}, a={})  [{}]",
                check.mdp,
                p,
                check.worst_sigmas,
                check.worst_entry.0,
                check.worst_entry.1,
                if check.pass { "pass" } else { "FAIL" }
            );
            all_pass &= check.pass;
        }
    }
    println!("greedy-policy invariance (tabular Q-learning under p=0.25 vs value iteration):");
    for mdp in corpus() {
        for seed in 0..3u64 {
            let cfg = TabularQConfig {
                p: 0.25,
                ..TabularQConfig::default()
            };
            let check = check_qlearning_invariance(&mdp, &cfg, rng::mix(0xBEEF, &[seed]), 0.05)?;
            println!(
                "  {:<11} seed {} mismatches={:?} ties={:?} rel_sup_err={:.4}  [{}]",
                check.mdp,
                seed,
                check.mismatched_states,
                check.tied_states,
                check.rel_sup_err,
                if check.pass { "pass" } else { "FAIL" }
            );
            all_pass &= check.pass;
        }
    }
    if all_pass {
        println!("verify-theorem: all checks passed");
        Ok(0)
    } else {
        println!("verify-theorem: FAILURES above");
        Ok(EXIT_VERIFY)
    }
}

fn cmd_play(args: &[String]) -> Result<u8, Error> {
    let game_name = args
        .first()
        .ok_or_else(|| Error::Config("play requires a game name".to_string()))?;
    let game = Game::parse(game_name)
        .ok_or_else(|| Error::Config(format!("unknown game `{game_name}`")))?;
    let seed: u64 = flag_value(args, "--seed")
        .ok_or_else(|| Error::Config("play requires --seed".to_string()))?
        .parse()
        .map_err(|e| Error::Config(format!("--seed: {e}")))?;
    let steps: u64 = flag_value(args, "--steps")
        .ok_or_else(|| Error::Config("play requires --steps".to_string()))?
        .parse()
        .map_err(|e| Error::Config(format!("--steps: {e}")))?;
    let policy_arg = flag_value(args, "--policy").unwrap_or("random");
    let dump_frames = flag_value(args, "--dump-frames");

    let split = if TRAIN_SEEDS.contains(&seed) {
        Split::Train
    } else if TEST_SEEDS.contains(&seed) {
        Split::Test
    } else {
        return Err(Error::Config(format!(
            "seed {seed} outside the train ({}..{}) and test ({}..{}) ranges",
            TRAIN_SEEDS.start, TRAIN_SEEDS.end, TEST_SEEDS.start, TEST_SEEDS.end
        )));
    };
    let policy: Option<PolicyParams> = if policy_arg == "random" {
        None
    } else {
        let mut f = std::fs::File::open(policy_arg)?;
        let p = load_params(&mut f)?;
        if p.game() != game {
            return Err(Error::Config(format!(
                "policy file is for {}, not {}",
                p.game().name(),
                game.name()
            )));
        }
        Some(p)
    };

    let mut env = Env::generate(&LevelSpec {
        game,
        level_seed: seed,
        split,
    })?;
    let meta = game.meta();
    let mut action_rng = rng::substream(seed, &[0x417]);
    println!(
        "# lcd trajectory game={} seed={} split={} policy={} steps={}",
        game.name(),
        seed,
        split.name(),
        if policy.is_some() { policy_arg } else { "random" },
        steps
    );
    if let Some(dir) = dump_frames {
        std::fs::create_dir_all(dir)?;
        dump_frame(&env, dir, 0)?;
    }
    use rand::Rng;
    for t in 1..=steps {
        if env.done() {
            break;
        }
        let action = match &policy {
            None => meta.action_set[action_rng.gen_range(0..meta.action_set.len())],
            Some(params) => {
                let obs = env.render();
                let feat = downsample(&select_channel(&obs, params.mode(), meta));
                match params {
                    PolicyParams::Acrl { net, norm, .. } => {
                        let act = net.forward(&norm.transform(&feat));
                        let probs = lcd_core::agents::net::softmax(&act.logits);
                        meta.action_set
                            [lcd_core::agents::net::sample_categorical(&probs, &mut action_rng)]
                    }
                    PolicyParams::Linq { net, norm, .. } => {
                        meta.action_set[net.greedy(&lcd_core::agents::linq_features(norm, &feat))]
                    }
                }
            }
        };
        let step = env.step(action)?;
        println!(
            "{}",
            trajectory_line(t as u32, action, step.reward, step.done, &step.events)
        );
        if let Some(dir) = dump_frames {
            dump_frame(&env, dir, t)?;
        }
    }
    Ok(0)
}

fn dump_frame(env: &Env, dir: &str, t: u64) -> Result<(), Error> {
    let obs = env.render();
    let base = Path::new(dir).join(format!("frame_{t:04}"));
    let mut ppm = std::fs::File::create(base.with_extension("ppm"))?;
    write_ppm(&obs, &mut ppm)?;
    let mut sem = std::fs::File::create(base.with_extension("sem.txt"))?;
    write_mask_matrix(&obs.semantic, &mut sem)?;
    let mut fg = std::fs::File::create(base.with_extension("fg.txt"))?;
    write_mask_matrix(&obs.figure_ground, &mut fg)?;
    Ok(())
}

fn cmd_report(args: &[String]) -> Result<u8, Error> {
    let from = flag_value(args, "--from")
        .ok_or_else(|| Error::Config("report requires --from <runs.jsonl>".to_string()))?;
    let theta: f64 = match flag_value(args, "--theta") {
        Some(v) => v
            .parse()
            .map_err(|e| Error::Config(format!("--theta: {e}")))?,
        None => 0.5,
    };
    let phi_formula = match flag_value(args, "--phi-formula") {
        Some(v) => PhiFormula::parse(v)
            .ok_or_else(|| Error::Config(format!("--phi-formula: unknown formula `{v}`")))?,
        None => PhiFormula::RelativeChange,
    };
    let records = output::read_runs_jsonl(Path::new(from))?;
    if records.is_empty() {
        return Err(Error::Config(format!("{from}: no records")));
    }
    // reconstruct the roster from the records, in canonical order
    let games: Vec<Game> = Game::ALL
        .into_iter()
        .filter(|g| records.iter().any(|r| r.game == *g))
        .collect();
    let algorithms: Vec<Algorithm> = Algorithm::ALL
        .into_iter()
        .filter(|a| records.iter().any(|r| r.algorithm == *a))
        .collect();
    let mut shaping = std::collections::BTreeMap::new();
    for r in &records {
        if r.shaping != lcd_core::wrappers::ShapingScheme::Off {
            shaping.insert(r.game, r.shaping);
        }
    }
    let cfg = MatrixConfig {
        games,
        algorithms,
        seeds: Vec::new(), // unused by aggregation
        modes: ChannelMode::ALL.to_vec(),
        p_values: P_PERCENTS.to_vec(),
        shaping,
        train: TrainConfig::default(),
        theta,
        phi_formula,
        master_seed: 0,
    };
    let report = build_report(records, &cfg)?;
    let out_dir = std::env::var("LCD_OUTPUT_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|_| {
            Path::new(from)
                .parent()
                .unwrap_or(Path::new("."))
                .to_path_buf()
        });
    std::fs::create_dir_all(&out_dir)?;
    output::write_profiles_csv(&report, theta, &out_dir.join("profiles.csv"))?;
    output::write_consistency_csv(&report, &out_dir.join("consistency.csv"))?;
    output::write_synergy_csv(&report, &out_dir.join("synergy.csv"))?;
    eprintln!(
        "report: {} records -> {} profiles in {}",
        report.records.len(),
        report.profiles.len(),
        out_dir.display()
    );
    let failed = report
        .records
        .iter()
        .filter(|r| r.status != RunStatus::Ok)
        .count();
    if failed > 0 || !report.incomplete.is_empty() {
        return Ok(EXIT_PARTIAL);
    }
    Ok(0)
}
