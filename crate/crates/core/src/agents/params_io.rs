//! Trained-parameter serialization: a small text header (algorithm, game,
//! mode, shape list) followed by a flat little-endian array of 64-bit reals.
//! The flat array is the learner parameters followed by the feature
//! normalizer state [mean.., m2.., count].

use std::io::{Read, Write};

use crate::envs::Game;
use crate::error::{Error, Result};
use crate::wrappers::ChannelMode;

use super::linq::LinqNet;
use super::net::{Layout, Net};
use super::{Algorithm, FeatureNorm};

const MAGIC: &str = "lcd-params";

/// A deserialized policy of either algorithm.
#[derive(Debug, Clone)]
pub enum PolicyParams {
    Acrl {
        game: Game,
        mode: ChannelMode,
        net: Net,
        norm: FeatureNorm,
    },
    Linq {
        game: Game,
        mode: ChannelMode,
        net: LinqNet,
        norm: FeatureNorm,
    },
}

impl PolicyParams {
    pub fn game(&self) -> Game {
        match self {
            PolicyParams::Acrl { game, .. } | PolicyParams::Linq { game, .. } => *game,
        }
    }

    pub fn mode(&self) -> ChannelMode {
        match self {
            PolicyParams::Acrl { mode, .. } | PolicyParams::Linq { mode, .. } => *mode,
        }
    }

    pub fn norm(&self) -> &FeatureNorm {
        match self {
            PolicyParams::Acrl { norm, .. } | PolicyParams::Linq { norm, .. } => norm,
        }
    }
}

/// Writes header + flat parameter array.
pub fn save_params(params: &PolicyParams, w: &mut impl Write) -> Result<()> {
    let (algo, game, mode, dims, mut flat): (Algorithm, Game, ChannelMode, Vec<usize>, Vec<f64>) =
        match params {
            PolicyParams::Acrl { game, mode, net, .. } => (
                Algorithm::Acrl,
                *game,
                *mode,
                vec![
                    net.layout.input_dim,
                    net.layout.hidden,
                    net.layout.n_actions,
                ],
                net.params.clone(),
            ),
            PolicyParams::Linq { game, mode, net, .. } => {
                let mut flat = Vec::with_capacity(net.w.len() + net.b.len());
                flat.extend_from_slice(&net.w);
                flat.extend_from_slice(&net.b);
                (
                    Algorithm::Linq,
                    *game,
                    *mode,
                    vec![net.input_dim, net.n_actions],
                    flat,
                )
            }
        };
    flat.extend_from_slice(&params.norm().to_flat());
    writeln!(
        w,
        "{MAGIC} {} {} {}",
        algo.name(),
        game.name(),
        mode.name()
    )?;
    writeln!(
        w,
        "{}",
        dims.iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    )?;
    for v in flat {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a parameter file written by [`save_params`].
pub fn load_params(r: &mut impl Read) -> Result<PolicyParams> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let header_end = find_line_end(&bytes, 0)
        .ok_or_else(|| Error::Config("params file: missing header".to_string()))?;
    let shape_end = find_line_end(&bytes, header_end + 1)
        .ok_or_else(|| Error::Config("params file: missing shape line".to_string()))?;
    let header = std::str::from_utf8(&bytes[..header_end])
        .map_err(|_| Error::Config("params file: header is not UTF-8".to_string()))?;
    let shapes = std::str::from_utf8(&bytes[header_end + 1..shape_end])
        .map_err(|_| Error::Config("params file: shape line is not UTF-8".to_string()))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 4 || toks[0] != MAGIC {
        return Err(Error::Config(format!("params file: bad header `{header}`")));
    }
    let algo = Algorithm::parse(toks[1])
        .ok_or_else(|| Error::Config(format!("params file: unknown algorithm {}", toks[1])))?;
    let game = Game::parse(toks[2])
        .ok_or_else(|| Error::Config(format!("params file: unknown game {}", toks[2])))?;
    let mode = ChannelMode::parse(toks[3])
        .ok_or_else(|| Error::Config(format!("params file: unknown mode {}", toks[3])))?;
    let dims: Vec<usize> = shapes
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|e| Error::Config(format!("params file: bad shape token {t}: {e}")))
        })
        .collect::<Result<_>>()?;
    let payload = &bytes[shape_end + 1..];
    if payload.len() % 8 != 0 {
        return Err(Error::Config(
            "params file: payload is not a whole number of f64s".to_string(),
        ));
    }
    let flat: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let split_norm = |flat: Vec<f64>, n_params: usize, dim: usize| -> Result<(Vec<f64>, FeatureNorm)> {
        let expect = n_params + FeatureNorm::flat_len(dim);
        if flat.len() != expect {
            return Err(Error::Config(format!(
                "params file: expected {expect} values, got {}",
                flat.len()
            )));
        }
        let mut params = flat;
        let tail = params.split_off(n_params);
        let norm = FeatureNorm::from_flat(dim, &tail)
            .ok_or_else(|| Error::Config("params file: bad normalizer block".to_string()))?;
        Ok((params, norm))
    };
    match algo {
        Algorithm::Acrl => {
            if dims.len() != 3 {
                return Err(Error::Config(format!(
                    "params file: expected 3 shape dims, got {}",
                    dims.len()
                )));
            }
            let layout = Layout {
                input_dim: dims[0],
                hidden: dims[1],
                n_actions: dims[2],
            };
            let (params, norm) = split_norm(flat, layout.n_params(), layout.input_dim)?;
            Ok(PolicyParams::Acrl {
                game,
                mode,
                net: Net { layout, params },
                norm,
            })
        }
        Algorithm::Linq => {
            if dims.len() != 2 {
                return Err(Error::Config(format!(
                    "params file: expected 2 shape dims, got {}",
                    dims.len()
                )));
            }
            let (d, a) = (dims[0], dims[1]);
            let (params, norm) = split_norm(flat, a * d + a, d)?;
            let mut it = params;
            let b = it.split_off(a * d);
            let w = it;
            Ok(PolicyParams::Linq {
                game,
                mode,
                net: LinqNet {
                    input_dim: d,
                    n_actions: a,
                    w,
                    b,
                },
                norm,
            })
        }
    }
}

fn find_line_end(bytes: &[u8], from: usize) -> Option<usize> {
    bytes[from..].iter().position(|&b| b == b'\n').map(|i| from + i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn acrl_round_trip() {
        let layout = Layout {
            input_dim: 6,
            hidden: 4,
            n_actions: 3,
        };
        let net = Net::init(layout, &mut rng::stream(2));
        let mut norm = FeatureNorm::new(6);
        norm.update(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        norm.update(&[2.0, 2.0, 2.0, 2.0, 2.0, 2.0]);
        let p = PolicyParams::Acrl {
            game: Game::MazeRun,
            mode: ChannelMode::Semantic,
            net: net.clone(),
            norm: norm.clone(),
        };
        let mut buf = Vec::new();
        save_params(&p, &mut buf).unwrap();
        match load_params(&mut buf.as_slice()).unwrap() {
            PolicyParams::Acrl {
                game,
                mode,
                net: loaded,
                norm: loaded_norm,
            } => {
                assert_eq!(game, Game::MazeRun);
                assert_eq!(mode, ChannelMode::Semantic);
                assert_eq!(loaded, net);
                assert_eq!(loaded_norm, norm);
            }
            other => panic!("wrong variant {other:?}"),
        }
    }

    #[test]
    fn linq_round_trip() {
        let mut net = LinqNet::init(5, 2);
        net.w[3] = 0.25;
        net.b[1] = -0.5;
        let p = PolicyParams::Linq {
            game: Game::LaneLeaper,
            mode: ChannelMode::Pixels,
            net: net.clone(),
            norm: FeatureNorm::new(5),
        };
        let mut buf = Vec::new();
        save_params(&p, &mut buf).unwrap();
        match load_params(&mut buf.as_slice()).unwrap() {
            PolicyParams::Linq { net: loaded, .. } => assert_eq!(loaded, net),
            other => panic!("wrong variant {other:?}"),
        }
    }

    #[test]
    fn corrupt_header_is_rejected() {
        let err = load_params(&mut &b"nonsense\n1 2 3\n"[..]).unwrap_err();
        match err {
            Error::Config(_) => {}
            other => panic!("{other:?}"),
        }
    }
}
