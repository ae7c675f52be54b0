//! Loop-level f64 reimplementation of the network's teacher-forced NLL.
//! Shares nothing with the library beyond reading parameter values by name,
//! so agreement is evidence that the graph computes the intended formulas.

use socp::config::{ContextMode, GateMode, PmrProjection};
use socp::corpus::StoryExample;
use socp::seq2seq::Network;

struct M {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl M {
    fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

struct Oracle<'a> {
    net: &'a Network<f64>,
}

fn vecmat(x: &[f64], w: &M) -> Vec<f64> {
    assert_eq!(x.len(), w.rows, "vecmat shape");
    let mut out = vec![0.0; w.cols];
    for (i, &xi) in x.iter().enumerate() {
        for (o, &wij) in out.iter_mut().zip(&w.data[i * w.cols..(i + 1) * w.cols]) {
            *o += xi * wij;
        }
    }
    out
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn softmax(xs: &[f64]) -> Vec<f64> {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = xs.iter().map(|x| (x - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|x| x / s).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl<'a> Oracle<'a> {
    fn m(&self, name: &str) -> M {
        let t = self.net.params.by_name(name).unwrap_or_else(|| panic!("no tensor {name}"));
        M {
            rows: t.shape()[0],
            cols: t.shape()[1],
            data: t.data().to_vec(),
        }
    }

    fn h(&self) -> usize {
        self.net.config.hidden
    }

    fn lstm(&self, x: &[f64], h: &[f64], c: &[f64], prefix: &str) -> (Vec<f64>, Vec<f64>) {
        let n = self.h();
        let z = add(&add(&vecmat(x, &self.m(&format!("{prefix}.w_ih"))), &vecmat(h, &self.m(&format!("{prefix}.w_hh")))), self.m(&format!("{prefix}.b")).row(0));
        let mut h2 = vec![0.0; n];
        let mut c2 = vec![0.0; n];
        for k in 0..n {
            let i = sigmoid(z[k]);
            let f = sigmoid(z[n + k]);
            let g = z[2 * n + k].tanh();
            let o = sigmoid(z[3 * n + k]);
            c2[k] = f * c[k] + i * g;
            h2[k] = o * c2[k].tanh();
        }
        (h2, c2)
    }

    /// Top-layer states and `[last forward; first backward]`.
    fn encoder(&self, stack: &str, ids: &[usize]) -> (Vec<Vec<f64>>, Vec<f64>) {
        let emb = self.m("embedding");
        let n = self.h();
        let mut xs: Vec<Vec<f64>> = ids.iter().map(|&i| emb.row(i).to_vec()).collect();
        let mut fin = Vec::new();
        for l in 0..self.net.config.enc_layers {
            let mut fwd = vec![vec![0.0; n]; xs.len()];
            let mut bwd = vec![vec![0.0; n]; xs.len()];
            let (mut h, mut c) = (vec![0.0; n], vec![0.0; n]);
            for t in 0..xs.len() {
                (h, c) = self.lstm(&xs[t], &h, &c, &format!("{stack}.l{l}.fwd"));
                fwd[t] = h.clone();
            }
            let (mut h, mut c) = (vec![0.0; n], vec![0.0; n]);
            for t in (0..xs.len()).rev() {
                (h, c) = self.lstm(&xs[t], &h, &c, &format!("{stack}.l{l}.bwd"));
                bwd[t] = h.clone();
            }
            fin = [fwd[xs.len() - 1].clone(), bwd[0].clone()].concat();
            xs = fwd.iter().zip(&bwd).map(|(f, b)| [f.clone(), b.clone()].concat()).collect();
        }
        (xs, fin)
    }

    /// Row `s` of a character: `W·(score_s v_s) + b` with the block's weights.
    fn pmr_rows(&self, slots: &[f32]) -> Vec<Vec<f64>> {
        let tables = [self.m("state.plutchik"), self.m("state.maslow"), self.m("state.reiss")];
        let unified = self.net.config.pmr_projection == PmrProjection::Unified;
        let mut rows = Vec::new();
        let mut s = 0;
        for (k, table) in tables.iter().enumerate() {
            let suffix = ["p", "m", "r"][k];
            let (w, b) = if unified {
                (self.m("pmr.w"), self.m("pmr.b"))
            } else {
                (self.m(&format!("pmr.w_{suffix}")), self.m(&format!("pmr.b_{suffix}")))
            };
            for r in 0..table.rows {
                let sv: Vec<f64> = table.row(r).iter().map(|v| f64::from(slots[s]) * v).collect();
                rows.push(add(&vecmat(&sv, &w), b.row(0)));
                s += 1;
            }
        }
        rows
    }

    fn nll(&self, ex: &StoryExample, gate: GateMode) -> f64 {
        let n = self.h();
        let cfg = &self.net.config;
        let (states, fin) = match cfg.context_mode {
            ContextMode::Merged => {
                let ids: Vec<usize> = ex.context_tokens.iter().chain(&ex.input_tokens).copied().collect();
                self.encoder("enc", &ids)
            }
            ContextMode::Independent => {
                let ctx_fin = if ex.context_tokens.is_empty() {
                    vec![0.0; 2 * n]
                } else {
                    self.encoder("enc_ctx", &ex.context_tokens).1
                };
                let (states, sent_fin) = self.encoder("enc_sent", &ex.input_tokens);
                (states, [ctx_fin, sent_fin].concat())
            }
        };
        let mut h: Vec<f64> = add(&vecmat(&fin, &self.m("bridge.w")), self.m("bridge.b").row(0))
            .iter()
            .map(|x| x.tanh())
            .collect();
        let mut c = vec![0.0; n];
        let chars: Vec<Vec<Vec<f64>>> = ex.char_scores.iter().map(|s| self.pmr_rows(&s.slots())).collect();
        let padding: Vec<bool> = ex.char_scores.iter().map(|s| s.is_padding()).collect();
        let emb = self.m("embedding");
        let (w_key, w_q, v_att) = (self.m("enc_att.w_key"), self.m("enc_att.w_query"), self.m("enc_att.v"));
        let gate_w = self.m("gate.w");
        let (pw, pu, pv) = (self.m("psy_att.w"), self.m("psy_att.u"), self.m("psy_att.v"));
        let (out_w, out_b) = (self.m("out.w"), self.m("out.b"));
        let mut total = 0.0;
        for t in 0..ex.target_tokens.len() - 1 {
            let y = emb.row(ex.target_tokens[t]).to_vec();
            // Encoder attention.
            let q = vecmat(&h, &w_q);
            let scores: Vec<f64> = states
                .iter()
                .map(|s| {
                    let k = vecmat(s, &w_key);
                    let e: Vec<f64> = k.iter().zip(&q).map(|(a, b)| (a + b).tanh()).collect();
                    dot(&e, &v_att.data)
                })
                .collect();
            let w = softmax(&scores);
            let mut ctx = vec![0.0; 2 * n];
            for (wj, s) in w.iter().zip(&states) {
                for k in 0..2 * n {
                    ctx[k] += wj * s[k];
                }
            }
            // Character selection.
            let x = [y.clone(), h.clone(), ctx.clone()].concat();
            let logits: Vec<f64> = vecmat(&x, &gate_w)
                .iter()
                .zip(&padding)
                .map(|(&l, &p)| if p { f64::NEG_INFINITY } else { l })
                .collect();
            let g = softmax(&logits);
            let s_char: Vec<Vec<f64>> = match gate {
                GateMode::Soft => (0..32)
                    .map(|s| (0..n).map(|k| (0..chars.len()).map(|ci| g[ci] * chars[ci][s][k]).sum()).collect())
                    .collect(),
                GateMode::HardSt => {
                    let best = (0..g.len()).fold(0, |b, i| if g[i] > g[b] { i } else { b });
                    chars[best].clone()
                }
            };
            // State attention.
            let hu = vecmat(&h, &pu);
            let e: Vec<f64> = s_char
                .iter()
                .map(|row| {
                    let a = vecmat(row, &pw);
                    let z: Vec<f64> = a.iter().zip(&hu).map(|(x, y)| (x + y).tanh()).collect();
                    dot(&z, &pv.data)
                })
                .collect();
            let alpha = softmax(&e);
            let c_pmr: Vec<f64> = if cfg.ablate_pmr {
                vec![0.0; n]
            } else {
                (0..n).map(|k| (0..32).map(|s| alpha[s] * s_char[s][k]).sum()).collect()
            };
            // Decoder.
            let x = [y, c_pmr, ctx].concat();
            (h, c) = self.lstm(&x, &h, &c, "dec");
            let logits = add(&vecmat(&h, &out_w), out_b.row(0));
            let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
            total += lse - logits[ex.target_tokens[t + 1]];
        }
        total
    }
}

/// Summed teacher-forced NLL of `ex`, computed with plain loops.
pub fn reference_nll(net: &Network<f64>, ex: &StoryExample, gate: GateMode) -> f64 {
    Oracle { net }.nll(ex, gate)
}

/// The same quantity through the library's graph.
pub fn graph_nll(net: &Network<f64>, ex: &StoryExample, gate: GateMode) -> f64 {
    let mut f = net.forward();
    let l = f.example_nll(ex, gate, None).unwrap();
    f.g.value(l).data()[0]
}
