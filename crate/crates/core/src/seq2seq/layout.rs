//! Parameter names, shapes and initializers of the network.

use crate::config::{ContextMode, PmrProjection, TrainConfig};
use crate::corpus::labels::{MASLOW_SIZE, PLUTCHIK_SIZE, REISS_SIZE};
use crate::error::{Error, Result};
use crate::numerics::{Init, ParamId, ParamStore, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub init: Init,
}

fn spec(name: impl Into<String>, shape: &[usize], init: Init) -> ParamSpec {
    ParamSpec {
        name: name.into(),
        shape: shape.to_vec(),
        init,
    }
}

/// Encoder stacks by context mode.
pub fn encoder_names(mode: ContextMode) -> &'static [&'static str] {
    match mode {
        ContextMode::Merged => &["enc"],
        ContextMode::Independent => &["enc_ctx", "enc_sent"],
    }
}

const DIRECTIONS: [&str; 2] = ["fwd", "bwd"];

/// Every trainable tensor in registration order.
pub fn param_specs(cfg: &TrainConfig, vocab_size: usize) -> Vec<ParamSpec> {
    let (e, h, c) = (cfg.emb_dim, cfg.hidden, cfg.max_chars);
    let mut out = vec![
        spec("embedding", &[vocab_size, e], Init::Embedding),
        spec("state.plutchik", &[PLUTCHIK_SIZE, e], Init::Embedding),
        spec("state.maslow", &[MASLOW_SIZE, e], Init::Embedding),
        spec("state.reiss", &[REISS_SIZE, e], Init::Embedding),
    ];
    match cfg.pmr_projection {
        PmrProjection::Unified => {
            out.push(spec("pmr.w", &[e, h], Init::Uniform));
            out.push(spec("pmr.b", &[1, h], Init::Zeros));
        }
        PmrProjection::PerIndicator => {
            for k in ["p", "m", "r"] {
                out.push(spec(format!("pmr.w_{k}"), &[e, h], Init::Uniform));
                out.push(spec(format!("pmr.b_{k}"), &[1, h], Init::Zeros));
            }
        }
    }
    for stack in encoder_names(cfg.context_mode) {
        for l in 0..cfg.enc_layers {
            let input = if l == 0 { e } else { 2 * h };
            for d in DIRECTIONS {
                out.push(spec(format!("{stack}.l{l}.{d}.w_ih"), &[input, 4 * h], Init::Uniform));
                out.push(spec(format!("{stack}.l{l}.{d}.w_hh"), &[h, 4 * h], Init::Uniform));
                out.push(spec(format!("{stack}.l{l}.{d}.b"), &[1, 4 * h], Init::Zeros));
            }
        }
    }
    let bridge_in = 2 * h * encoder_names(cfg.context_mode).len();
    out.extend([
        spec("bridge.w", &[bridge_in, h], Init::Uniform),
        spec("bridge.b", &[1, h], Init::Zeros),
        spec("enc_att.w_key", &[2 * h, h], Init::Uniform),
        spec("enc_att.w_query", &[h, h], Init::Uniform),
        spec("enc_att.v", &[h, 1], Init::Uniform),
        spec("gate.w", &[e + h + 2 * h, c], Init::Uniform),
        spec("psy_att.w", &[h, h], Init::Uniform),
        spec("psy_att.u", &[h, h], Init::Uniform),
        spec("psy_att.v", &[h, 1], Init::Uniform),
        spec("dec.w_ih", &[e + h + 2 * h, 4 * h], Init::Uniform),
        spec("dec.w_hh", &[h, 4 * h], Init::Uniform),
        spec("dec.b", &[1, 4 * h], Init::Zeros),
        spec("out.w", &[h, vocab_size], Init::Uniform),
        spec("out.b", &[1, vocab_size], Init::Zeros),
    ]);
    out
}

#[derive(Clone, Copy, Debug)]
pub struct LstmIds {
    pub w_ih: ParamId,
    pub w_hh: ParamId,
    pub b: ParamId,
}

#[derive(Clone, Debug)]
pub enum PmrIds {
    Unified { w: ParamId, b: ParamId },
    PerIndicator { w: [ParamId; 3], b: [ParamId; 3] },
}

/// Typed handles into a [`ParamStore`] laid out by [`param_specs`].
#[derive(Clone, Debug)]
pub struct Layout {
    pub embedding: ParamId,
    pub states: [ParamId; 3],
    pub pmr: PmrIds,
    /// `encoders[stack][layer][direction]`.
    pub encoders: Vec<Vec<[LstmIds; 2]>>,
    pub bridge_w: ParamId,
    pub bridge_b: ParamId,
    pub att_key: ParamId,
    pub att_query: ParamId,
    pub att_v: ParamId,
    pub gate_w: ParamId,
    pub psy_w: ParamId,
    pub psy_u: ParamId,
    pub psy_v: ParamId,
    pub dec: LstmIds,
    pub out_w: ParamId,
    pub out_b: ParamId,
}

impl Layout {
    /// Checks that `store` holds exactly the tensors of [`param_specs`], in
    /// order and with matching shapes, and returns typed handles.
    pub fn resolve<T: Scalar>(cfg: &TrainConfig, vocab_size: usize, store: &ParamStore<T>) -> Result<Self> {
        let specs = param_specs(cfg, vocab_size);
        if specs.len() != store.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} parameter tensors, found {}",
                specs.len(),
                store.len()
            )));
        }
        for (s, (_, name, t)) in specs.iter().zip(store.iter()) {
            if s.name != name || s.shape != t.shape() {
                return Err(Error::Checkpoint(format!(
                    "parameter `{name}` {:?} does not match expected `{}` {:?}",
                    t.shape(),
                    s.name,
                    s.shape
                )));
            }
        }
        let id = |n: &str| store.id(n).expect("validated above");
        let lstm = |p: &str| LstmIds {
            w_ih: id(&format!("{p}.w_ih")),
            w_hh: id(&format!("{p}.w_hh")),
            b: id(&format!("{p}.b")),
        };
        let pmr = match cfg.pmr_projection {
            PmrProjection::Unified => PmrIds::Unified {
                w: id("pmr.w"),
                b: id("pmr.b"),
            },
            PmrProjection::PerIndicator => PmrIds::PerIndicator {
                w: [id("pmr.w_p"), id("pmr.w_m"), id("pmr.w_r")],
                b: [id("pmr.b_p"), id("pmr.b_m"), id("pmr.b_r")],
            },
        };
        let encoders = encoder_names(cfg.context_mode)
            .iter()
            .map(|stack| {
                (0..cfg.enc_layers)
                    .map(|l| DIRECTIONS.map(|d| lstm(&format!("{stack}.l{l}.{d}"))))
                    .collect()
            })
            .collect();
        Ok(Self {
            embedding: id("embedding"),
            states: [id("state.plutchik"), id("state.maslow"), id("state.reiss")],
            pmr,
            encoders,
            bridge_w: id("bridge.w"),
            bridge_b: id("bridge.b"),
            att_key: id("enc_att.w_key"),
            att_query: id("enc_att.w_query"),
            att_v: id("enc_att.v"),
            gate_w: id("gate.w"),
            psy_w: id("psy_att.w"),
            psy_u: id("psy_att.u"),
            psy_v: id("psy_att.v"),
            dec: lstm("dec"),
            out_w: id("out.w"),
            out_b: id("out.b"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn names_are_unique_in_every_mode() {
        for mode in [ContextMode::Merged, ContextMode::Independent] {
            for proj in [PmrProjection::Unified, PmrProjection::PerIndicator] {
                let cfg = TrainConfig {
                    context_mode: mode,
                    pmr_projection: proj,
                    ..TrainConfig::default()
                };
                let specs = param_specs(&cfg, 50);
                let names: HashSet<_> = specs.iter().map(|s| &s.name).collect();
                assert_eq!(names.len(), specs.len());
            }
        }
    }

    #[test]
    fn bridge_width_follows_context_mode() {
        let merged = TrainConfig {
            context_mode: ContextMode::Merged,
            ..TrainConfig::default()
        };
        let find = |cfg: &TrainConfig| param_specs(cfg, 10).into_iter().find(|s| s.name == "bridge.w").unwrap().shape;
        assert_eq!(find(&merged), vec![512, 256]);
        assert_eq!(find(&TrainConfig::default()), vec![1024, 256]);
    }
}
