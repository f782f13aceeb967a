//! Report artifacts: runs.jsonl, the aggregate CSVs, and SVG curve plots.
//! All numbers are written with 9 significant digits, and every byte is a
//! pure function of the record set, so reruns and re-aggregations reproduce
//! the files exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use lcd_core::agents::{Algorithm, RewardCurve, RunRecord, RunStatus};
use lcd_core::envs::Game;
use lcd_core::error::Error;
use lcd_core::lcd::{p_from_percent, MatrixReport};
use lcd_core::util::fmt_sig9;
use lcd_core::wrappers::{ChannelMode, ShapingScheme};

fn fmt_p(p: f64) -> &'static str {
    match (p * 100.0).round() as u32 {
        100 => "1.0",
        75 => "0.75",
        50 => "0.5",
        25 => "0.25",
        _ => "0.0",
    }
}

/// One record per line; field names and order are fixed.
pub fn record_to_json(r: &RunRecord) -> String {
    let mut s = String::with_capacity(256);
    s.push('{');
    let _ = write!(s, "\"game\":\"{}\"", r.game.name());
    let _ = write!(s, ",\"algorithm\":\"{}\"", r.algorithm.name());
    let _ = write!(s, ",\"mode\":\"{}\"", r.mode.name());
    let _ = write!(s, ",\"p\":{}", fmt_p(r.p));
    let _ = write!(s, ",\"shaping\":\"{}\"", r.shaping.name());
    let _ = write!(s, ",\"seed\":{}", r.seed);
    s.push_str(",\"eval_curve\":[");
    for (i, (step, v)) in r.eval_curve.points.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        let _ = write!(s, "[{},{}]", step, fmt_sig9(*v));
    }
    s.push_str("],\"final_returns\":[");
    for (i, v) in r.final_returns.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push_str(&fmt_sig9(*v));
    }
    s.push(']');
    let _ = write!(s, ",\"status\":\"{}\"", r.status.label());
    s.push('}');
    s
}

pub fn write_runs_jsonl(records: &[RunRecord], path: &Path) -> Result<(), Error> {
    let mut out = String::new();
    for r in records {
        out.push_str(&record_to_json(r));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads records back from a runs.jsonl file.
pub fn read_runs_jsonl(path: &Path) -> Result<Vec<RunRecord>, Error> {
    let text = fs::read_to_string(path)?;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let v: serde_json::Value = serde_json::from_str(line).map_err(|e| Error::Parse {
            file: path.display().to_string(),
            line: lineno,
            msg: e.to_string(),
        })?;
        records.push(record_from_json(&v).map_err(|msg| Error::Parse {
            file: path.display().to_string(),
            line: lineno,
            msg,
        })?);
    }
    Ok(records)
}

fn record_from_json(v: &serde_json::Value) -> Result<RunRecord, String> {
    let str_field = |k: &str| -> Result<&str, String> {
        v.get(k)
            .and_then(|x| x.as_str())
            .ok_or_else(|| format!("missing string field `{k}`"))
    };
    let game = Game::parse(str_field("game")?).ok_or("unknown game")?;
    let algorithm = Algorithm::parse(str_field("algorithm")?).ok_or("unknown algorithm")?;
    let mode = ChannelMode::parse(str_field("mode")?).ok_or("unknown mode")?;
    let shaping = ShapingScheme::parse(str_field("shaping")?).ok_or("unknown shaping")?;
    let p = v
        .get("p")
        .and_then(|x| x.as_f64())
        .ok_or("missing number field `p`")?;
    let seed = v
        .get("seed")
        .and_then(|x| x.as_u64())
        .ok_or("missing integer field `seed`")?;
    let curve = v
        .get("eval_curve")
        .and_then(|x| x.as_array())
        .ok_or("missing array field `eval_curve`")?;
    let mut eval_curve = RewardCurve::default();
    for pt in curve {
        let pair = pt.as_array().ok_or("eval_curve: point is not a pair")?;
        if pair.len() != 2 {
            return Err("eval_curve: point is not a pair".to_string());
        }
        let step = pair[0].as_u64().ok_or("eval_curve: bad step")?;
        let value = pair[1].as_f64().ok_or("eval_curve: bad value")?;
        eval_curve.points.push((step, value));
    }
    let final_returns = v
        .get("final_returns")
        .and_then(|x| x.as_array())
        .ok_or("missing array field `final_returns`")?
        .iter()
        .map(|x| x.as_f64().ok_or("final_returns: bad value".to_string()))
        .collect::<Result<Vec<f64>, String>>()?;
    let status_text = str_field("status")?;
    let status = if status_text == "ok" {
        RunStatus::Ok
    } else {
        RunStatus::AbortedNaN {
            step: 0,
            detail: status_text.to_string(),
        }
    };
    Ok(RunRecord {
        game,
        algorithm,
        mode,
        p,
        shaping,
        seed,
        train_curve: RewardCurve::default(),
        eval_curve,
        final_returns,
        status,
    })
}

pub fn write_profiles_csv(report: &MatrixReport, theta: f64, path: &Path) -> Result<(), Error> {
    let mut out = String::from("game,algorithm,phi_raw,psi_raw,phi,psi,quadrant\n");
    // quadrants per algorithm so every row can be labeled
    for profile in &report.profiles {
        let quadrant = {
            let same_algo: Vec<_> = report
                .profiles
                .iter()
                .filter(|p| p.algorithm == profile.algorithm)
                .cloned()
                .collect();
            lcd_core::lcd::classify(&same_algo, theta)
                .ok()
                .and_then(|t| {
                    t.into_iter()
                        .find(|e| e.game == profile.game)
                        .map(|e| e.quadrant.label())
                })
                .unwrap_or("unclassified")
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            profile.game.name(),
            profile.algorithm.name(),
            fmt_sig9(profile.phi_raw),
            fmt_sig9(profile.psi_raw),
            profile.phi.map(fmt_sig9).unwrap_or_default(),
            profile.psi.map(fmt_sig9).unwrap_or_default(),
            quadrant
        );
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_consistency_csv(report: &MatrixReport, path: &Path) -> Result<(), Error> {
    let mut out = String::from("algorithm_a,algorithm_b,rho_phi,rho_psi\n");
    if let Some((rp, rs)) = report.consistency {
        let a = report
            .profiles
            .first()
            .map(|p| p.algorithm.name())
            .unwrap_or("acrl");
        let b = report
            .profiles
            .iter()
            .map(|p| p.algorithm)
            .find(|&x| Some(x.name()) != Some(a))
            .map(|x| x.name())
            .unwrap_or("linq");
        let _ = writeln!(out, "{},{},{},{}", a, b, fmt_sig9(rp), fmt_sig9(rs));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_synergy_csv(report: &MatrixReport, path: &Path) -> Result<(), Error> {
    let mut out = String::from("game,base,b_sem,b_pix,a_sem,synergy\n");
    for row in &report.synergy {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            row.game.name(),
            fmt_sig9(row.base),
            fmt_sig9(row.b_sem),
            fmt_sig9(row.b_pix),
            fmt_sig9(row.a_sem),
            fmt_sig9(row.synergy)
        );
    }
    fs::write(path, out)?;
    Ok(())
}

const SVG_COLORS: [&str; 4] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728"];

/// A minimal polyline plot: axes, ticks, legend, one polyline per curve.
pub fn curve_svg(title: &str, curves: &[(String, &RewardCurve)]) -> String {
    let (w, h) = (640.0, 400.0);
    let (ml, mr, mt, mb) = (60.0, 20.0, 40.0, 50.0);
    let x_max = curves
        .iter()
        .flat_map(|(_, c)| c.points.last().map(|&(s, _)| s))
        .max()
        .unwrap_or(1)
        .max(1) as f64;
    let (y_min, y_max) = (-0.1, 1.05);
    let px = |step: f64| ml + (w - ml - mr) * (step / x_max);
    let py = |v: f64| {
        let v = v.clamp(y_min, y_max);
        h - mb - (h - mt - mb) * ((v - y_min) / (y_max - y_min))
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    );
    let _ = writeln!(
        s,
        "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/><text x=\"{}\" y=\"24\" font-size=\"15\" text-anchor=\"middle\" font-family=\"sans-serif\">{}</text>",
        w / 2.0,
        title
    );
    // axes
    let _ = writeln!(
        s,
        "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        h - mb,
        w - mr,
        h - mb
    );
    let _ = writeln!(
        s,
        "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>",
        h - mb
    );
    for i in 0..=4 {
        let v = y_min + (y_max - y_min) * i as f64 / 4.0;
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\" font-family=\"sans-serif\">{v:.2}</text>",
            ml - 6.0,
            py(v) + 4.0
        );
        let _ = writeln!(
            s,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#ddd\"/>",
            ml,
            py(v),
            w - mr,
            py(v)
        );
    }
    for i in 0..=4 {
        let step = x_max * i as f64 / 4.0;
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\" font-family=\"sans-serif\">{:.0}k</text>",
            px(step),
            h - mb + 18.0,
            step / 1000.0
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\" font-family=\"sans-serif\">env steps</text>",
        (w + ml - mr) / 2.0,
        h - 12.0
    );
    for (i, (label, curve)) in curves.iter().enumerate() {
        let color = SVG_COLORS[i % SVG_COLORS.len()];
        let pts: Vec<String> = curve
            .points
            .iter()
            .map(|&(step, v)| format!("{:.1},{:.1}", px(step as f64), py(v)))
            .collect();
        if pts.len() >= 2 {
            let _ = writeln!(
                s,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
                pts.join(" ")
            );
        }
        let ly = mt + 14.0 * i as f64;
        let _ = writeln!(
            s,
            "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/><text x=\"{}\" y=\"{}\" font-size=\"11\" font-family=\"sans-serif\">{label}</text>",
            w - mr - 150.0,
            w - mr - 130.0,
            w - mr - 124.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Writes one plot per (game, algorithm) and axis: modes at p=1, p values at
/// semantic, and shaped-vs-unshaped where configured.
pub fn write_curve_svgs(report: &MatrixReport, dir: &Path) -> Result<(), Error> {
    fs::create_dir_all(dir)?;
    let mut groups: std::collections::BTreeMap<(Game, Algorithm), Vec<&RunRecord>> =
        std::collections::BTreeMap::new();
    for r in &report.records {
        groups.entry((r.game, r.algorithm)).or_default().push(r);
    }
    for ((game, algo), records) in groups {
        // one representative seed per label: the lowest
        let pick = |f: &dyn Fn(&&&RunRecord) -> bool| -> Vec<&RunRecord> {
            let mut v: Vec<&RunRecord> = records
                .iter()
                .filter(|r| f(&r))
                .copied()
                .collect();
            v.sort_by_key(|r| r.seed);
            v
        };
        let modes: Vec<(String, &RewardCurve)> = ChannelMode::ALL
            .iter()
            .filter_map(|&m| {
                pick(&|r| {
                    r.mode == m && (r.p - 1.0).abs() < 1e-9 && r.shaping == ShapingScheme::Off
                })
                .first()
                .map(|r| (m.name().to_string(), &r.eval_curve))
            })
            .collect();
        if !modes.is_empty() {
            let svg = curve_svg(&format!("{game} / {algo} by input mode"), &modes);
            fs::write(dir.join(format!("{game}_{algo}_modes.svg")), svg)?;
        }
        let ps: Vec<(String, &RewardCurve)> = [100u32, 75, 50, 25]
            .iter()
            .filter_map(|&pc| {
                pick(&|r| {
                    r.mode == ChannelMode::Semantic
                        && ((r.p * 100.0).round() as u32) == pc
                        && r.shaping == ShapingScheme::Off
                })
                .first()
                .map(|r| (format!("p={}", p_from_percent(pc)), &r.eval_curve))
            })
            .collect();
        if !ps.is_empty() {
            let svg = curve_svg(&format!("{game} / {algo} by reward probability"), &ps);
            fs::write(dir.join(format!("{game}_{algo}_pvalues.svg")), svg)?;
        }
        let shaped: Vec<(String, &RewardCurve)> = [
            ("shaped", true),
            ("unshaped", false),
        ]
        .iter()
        .filter_map(|&(label, want_shaped)| {
            pick(&|r| {
                r.mode == ChannelMode::Semantic
                    && (r.p - 1.0).abs() < 1e-9
                    && (r.shaping != ShapingScheme::Off) == want_shaped
            })
            .first()
            .map(|r| (label.to_string(), &r.eval_curve))
        })
        .collect();
        if shaped.len() == 2 {
            let svg = curve_svg(&format!("{game} / {algo} reward shaping"), &shaped);
            fs::write(dir.join(format!("{game}_{algo}_shaping.svg")), svg)?;
        }
    }
    Ok(())
}
