use rand::RngCore;

use super::layout::{param_specs, Layout, LstmIds, PmrIds};
use super::trace::{AttentionTrace, StepTrace};
use crate::config::{ContextMode, GateMode, TrainConfig};
use crate::corpus::{CharArcScores, StoryExample, SLOT_COUNT};
use crate::error::{Error, Result};
use crate::numerics::rng::{self, Stream};
use crate::numerics::{argmax, Axis, Bound, Graph, ParamStore, Scalar, Tensor, Var};
use crate::pmr::{pmr_encode, PmrRepr, PmrWeights};

/// Parameters plus the configuration that gives them meaning.
#[derive(Clone, Debug)]
pub struct Network<T: Scalar> {
    pub config: TrainConfig,
    pub vocab_size: usize,
    pub layout: Layout,
    pub params: ParamStore<T>,
}

impl<T: Scalar> Network<T> {
    /// Freshly initialized network; draws from the init stream of `config.seed`.
    pub fn new(config: TrainConfig, vocab_size: usize) -> Result<Self> {
        config.validate()?;
        let mut rng = rng::stream(config.seed, Stream::Init);
        let mut params = ParamStore::new();
        for s in param_specs(&config, vocab_size) {
            params.register(&s.name, &s.shape, s.init, &mut rng)?;
        }
        Self::from_params(config, vocab_size, params)
    }

    pub fn from_params(config: TrainConfig, vocab_size: usize, params: ParamStore<T>) -> Result<Self> {
        let layout = Layout::resolve(&config, vocab_size, &params)?;
        Ok(Self {
            config,
            vocab_size,
            layout,
            params,
        })
    }

    pub fn cast<U: Scalar>(&self) -> Network<U> {
        Network {
            config: self.config.clone(),
            vocab_size: self.vocab_size,
            layout: self.layout.clone(),
            params: self.params.cast(),
        }
    }

    /// A fresh graph with every parameter bound.
    pub fn forward(&self) -> Forward<'_, T> {
        let mut g = Graph::new();
        let p = self.params.bind(&mut g);
        Forward { g, p, net: self }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EncoderOutput {
    /// Per-token states used as attention values, `[n, 2H]`.
    pub states: Var,
    /// Projected attention keys, `[n, H]`.
    pub keys: Var,
    /// Bridged initial decoder state, `[1, H]`.
    pub h0: Var,
}

#[derive(Clone, Copy, Debug)]
pub struct CharacterGate {
    /// Gate distribution, `[1, C]`.
    pub probs: Var,
    pub selected: usize,
    /// Selected state rows, `[32, H]`.
    pub s_char: Var,
}

#[derive(Clone, Copy, Debug)]
pub struct LstmState {
    pub h: Var,
    pub c: Var,
}

pub struct StepOutput {
    pub state: LstmState,
    /// `[1, V]`.
    pub logits: Var,
    pub trace: StepTrace,
    /// Psychological context fed to the decoder, `[1, H]`.
    pub c_pmr: Var,
}

pub struct TeacherForced {
    /// `[T, V]`, one row per predicted target position.
    pub logits: Var,
    pub trace: AttentionTrace,
    pub c_pmr: Vec<Var>,
}

/// One forward computation over a bound network.
pub struct Forward<'p, T: Scalar> {
    pub g: Graph<'p, T>,
    pub p: Bound,
    net: &'p Network<T>,
}

impl<'p, T: Scalar> Forward<'p, T> {
    fn cfg(&self) -> &'p TrainConfig {
        &self.net.config
    }

    fn layout(&self) -> &'p Layout {
        &self.net.layout
    }

    fn zeros(&mut self, cols: usize) -> Var {
        self.g.constant(Tensor::zeros(&[1, cols]))
    }

    pub fn embed(&mut self, ids: &[usize]) -> Result<Var> {
        let table = self.p[self.layout().embedding];
        self.g.embedding(table, ids)
    }

    /// `gates = xw + h·W_hh`, gate order input, forget, cell, output.
    fn lstm_cell(&mut self, xw: Var, state: LstmState, w_hh: Var) -> Result<LstmState> {
        let h = self.cfg().hidden;
        let hw = self.g.matmul(state.h, w_hh)?;
        let gates = self.g.add(xw, hw)?;
        let i = self.g.slice_cols(gates, 0, h)?;
        let f = self.g.slice_cols(gates, h, h)?;
        let c_hat = self.g.slice_cols(gates, 2 * h, h)?;
        let o = self.g.slice_cols(gates, 3 * h, h)?;
        let i = self.g.sigmoid(i)?;
        let f = self.g.sigmoid(f)?;
        let c_hat = self.g.tanh(c_hat)?;
        let o = self.g.sigmoid(o)?;
        let keep = self.g.mul(f, state.c)?;
        let write = self.g.mul(i, c_hat)?;
        let c = self.g.add(keep, write)?;
        let tc = self.g.tanh(c)?;
        let h = self.g.mul(o, tc)?;
        Ok(LstmState { h, c })
    }

    /// Runs one directional pass; returns hidden states in time order.
    fn lstm_pass(&mut self, x: Var, ids: LstmIds, reverse: bool) -> Result<Vec<Var>> {
        let n = self.g.shape(x)[0];
        let (w_ih, w_hh, b) = (self.p[ids.w_ih], self.p[ids.w_hh], self.p[ids.b]);
        let xw = self.g.matmul(x, w_ih)?;
        let xw = self.g.add_row(xw, b)?;
        let h = self.cfg().hidden;
        let mut state = LstmState {
            h: self.zeros(h),
            c: self.zeros(h),
        };
        let mut out = vec![state.h; n];
        let order: Vec<usize> = if reverse { (0..n).rev().collect() } else { (0..n).collect() };
        for t in order {
            let xt = self.g.slice_rows(xw, t, 1)?;
            state = self.lstm_cell(xt, state, w_hh)?;
            out[t] = state.h;
        }
        Ok(out)
    }

    /// Bidirectional multi-layer encoder. Returns per-token top-layer
    /// states `[n, 2H]` and `[last forward; first backward]` as `[1, 2H]`.
    fn encode_stack(&mut self, stack: usize, ids: &[usize]) -> Result<(Var, Var)> {
        let mut x = self.embed(ids)?;
        let layers = self.layout().encoders[stack].clone();
        let mut last = None;
        for [fwd, bwd] in layers {
            let hf = self.lstm_pass(x, fwd, false)?;
            let hb = self.lstm_pass(x, bwd, true)?;
            let f = self.g.concat_rows(&hf)?;
            let b = self.g.concat_rows(&hb)?;
            x = self.g.concat_cols(&[f, b])?;
            last = Some((hf[hf.len() - 1], hb[0]));
        }
        let (lf, lb) = last.expect("at least one encoder layer");
        let fin = self.g.concat_cols(&[lf, lb])?;
        Ok((x, fin))
    }

    fn bridge_and_keys(&mut self, states: Var, fin: Var) -> Result<EncoderOutput> {
        let l = self.layout();
        let z = self.g.matmul(fin, self.p[l.bridge_w])?;
        let z = self.g.add_row(z, self.p[l.bridge_b])?;
        let h0 = self.g.tanh(z)?;
        let keys = self.g.matmul(states, self.p[l.att_key])?;
        Ok(EncoderOutput { states, keys, h0 })
    }

    /// Single encoder over `context ‖ sentence`.
    pub fn encode_merged(&mut self, context: &[usize], sentence: &[usize]) -> Result<EncoderOutput> {
        if context.is_empty() && sentence.is_empty() {
            return Err(Error::EmptyInput("context and sentence are both empty".into()));
        }
        let ids: Vec<usize> = context.iter().chain(sentence).copied().collect();
        let (states, fin) = self.encode_stack(0, &ids)?;
        self.bridge_and_keys(states, fin)
    }

    /// Separate encoders; attention runs over the sentence states only and
    /// an empty context contributes a zero final state.
    pub fn encode_independent(&mut self, context: &[usize], sentence: &[usize]) -> Result<EncoderOutput> {
        if sentence.is_empty() {
            return Err(Error::EmptyInput("sentence is empty".into()));
        }
        let ctx_fin = if context.is_empty() {
            let w = 2 * self.cfg().hidden;
            self.zeros(w)
        } else {
            self.encode_stack(0, context)?.1
        };
        let (states, sent_fin) = self.encode_stack(1, sentence)?;
        let fin = self.g.concat_cols(&[ctx_fin, sent_fin])?;
        self.bridge_and_keys(states, fin)
    }

    pub fn encode(&mut self, context: &[usize], sentence: &[usize]) -> Result<EncoderOutput> {
        match self.cfg().context_mode {
            ContextMode::Merged => self.encode_merged(context, sentence),
            ContextMode::Independent => self.encode_independent(context, sentence),
        }
    }

    pub fn pmr(&mut self, scores: &[CharArcScores]) -> Result<PmrRepr> {
        if scores.len() != self.cfg().max_chars {
            return Err(Error::ShapeMismatch(format!(
                "{} character slots, model expects {}",
                scores.len(),
                self.cfg().max_chars
            )));
        }
        let l = self.layout();
        let tables = l.states.map(|id| self.p[id]);
        let weights = match &l.pmr {
            PmrIds::Unified { w, b } => PmrWeights::Unified {
                w: self.p[*w],
                b: self.p[*b],
            },
            PmrIds::PerIndicator { w, b } => PmrWeights::PerIndicator {
                w: w.map(|id| self.p[id]),
                b: b.map(|id| self.p[id]),
            },
        };
        pmr_encode(&mut self.g, tables, &weights, scores)
    }

    /// Additive attention of `h_prev` over encoder states. Returns the
    /// context `[1, 2H]` and the weights `[1, n]`.
    pub fn encoder_attend(&mut self, h_prev: Var, enc: &EncoderOutput) -> Result<(Var, Var)> {
        let l = self.layout();
        let q = self.g.matmul(h_prev, self.p[l.att_query])?;
        let e = self.g.add_row(enc.keys, q)?;
        let e = self.g.tanh(e)?;
        let e = self.g.matmul(e, self.p[l.att_v])?;
        let e = self.g.transpose(e)?;
        let w = self.g.softmax(e, Axis::Cols)?;
        let c = self.g.matmul(w, enc.states)?;
        Ok((c, w))
    }

    /// Character gate over `[y_prev; h_prev; c_t]` with padding slots masked.
    pub fn select_character(
        &mut self,
        y_prev: Var,
        h_prev: Var,
        c_t: Var,
        pmr: &PmrRepr,
        mode: GateMode,
    ) -> Result<CharacterGate> {
        if pmr.padding.iter().all(|&p| p) {
            return Err(Error::AllCharactersMasked);
        }
        let x = self.g.concat_cols(&[y_prev, h_prev, c_t])?;
        let logits = self.g.matmul(x, self.p[self.layout().gate_w])?;
        let logits = self.g.mask_fill(logits, &pmr.padding, T::neg_infinity())?;
        let probs = self.g.softmax(logits, Axis::Cols)?;
        let selected = argmax(self.g.value(probs).data());
        let hidden = self.cfg().hidden;
        let mixed = self.g.matmul(probs, pmr.stacked)?;
        let soft = self.g.reshape(mixed, &[SLOT_COUNT, hidden])?;
        let s_char = match mode {
            GateMode::Soft => soft,
            GateMode::HardSt => {
                let value = self.g.value(pmr.rows[selected]).clone();
                self.g.straight_through(value, soft)?
            }
        };
        Ok(CharacterGate { probs, selected, s_char })
    }

    /// Attention over the 32 state rows. Returns `α` as `[32, 1]` and the
    /// psychological context `[1, H]`.
    pub fn psych_attend(&mut self, s_char: Var, h_prev: Var) -> Result<(Var, Var)> {
        let l = self.layout();
        let a = self.g.matmul(s_char, self.p[l.psy_w])?;
        let u = self.g.matmul(h_prev, self.p[l.psy_u])?;
        let e = self.g.add_row(a, u)?;
        let e = self.g.tanh(e)?;
        let e = self.g.matmul(e, self.p[l.psy_v])?;
        let alpha = self.g.softmax(e, Axis::Rows)?;
        let at = self.g.transpose(alpha)?;
        let c = self.g.matmul(at, s_char)?;
        Ok((alpha, c))
    }

    /// One decoder step on `[y_prev; c_pmr; c_t]`. Dropout is applied to
    /// that input when `rng` is given.
    pub fn decode_step(
        &mut self,
        y_prev: Var,
        c_pmr: Var,
        c_t: Var,
        state: LstmState,
        rng: Option<&mut dyn RngCore>,
    ) -> Result<(LstmState, Var)> {
        let l = self.layout();
        let x = self.g.concat_cols(&[y_prev, c_pmr, c_t])?;
        let x = self.g.dropout(x, self.cfg().dropout, rng)?;
        let xw = self.g.matmul(x, self.p[l.dec.w_ih])?;
        let xw = self.g.add_row(xw, self.p[l.dec.b])?;
        let state = self.lstm_cell(xw, state, self.p[l.dec.w_hh])?;
        let logits = self.g.matmul(state.h, self.p[l.out_w])?;
        let logits = self.g.add_row(logits, self.p[l.out_b])?;
        Ok((state, logits))
    }

    pub fn initial_state(&mut self, enc: &EncoderOutput) -> LstmState {
        let h = self.cfg().hidden;
        LstmState {
            h: enc.h0,
            c: self.zeros(h),
        }
    }

    /// encoder attention, character selection, state attention, decoder.
    pub fn step(
        &mut self,
        y_prev: usize,
        state: LstmState,
        enc: &EncoderOutput,
        pmr: &PmrRepr,
        mode: GateMode,
        rng: Option<&mut dyn RngCore>,
    ) -> Result<StepOutput> {
        let y = self.embed(&[y_prev])?;
        let (c_t, enc_w) = self.encoder_attend(state.h, enc)?;
        let gate = self.select_character(y, state.h, c_t, pmr, mode)?;
        let (alpha, c_pmr) = self.psych_attend(gate.s_char, state.h)?;
        let c_pmr = if self.cfg().ablate_pmr {
            let h = self.cfg().hidden;
            self.zeros(h)
        } else {
            c_pmr
        };
        let (state, logits) = self.decode_step(y, c_pmr, c_t, state, rng)?;
        let trace = StepTrace {
            char_gate: self.g.value(gate.probs).to_f64_vec(),
            psy_attention: self.g.value(alpha).to_f64_vec(),
            enc_attention: self.g.value(enc_w).to_f64_vec(),
            selected: gate.selected,
        };
        Ok(StepOutput {
            state,
            logits,
            trace,
            c_pmr,
        })
    }

    /// Runs the decoder over the gold target, feeding gold previous tokens.
    pub fn teacher_forced(
        &mut self,
        ex: &StoryExample,
        mode: GateMode,
        mut rng: Option<&mut dyn RngCore>,
    ) -> Result<TeacherForced> {
        let steps = ex.predicted_len();
        if steps == 0 {
            return Err(Error::EmptyInput("target has no predicted positions".into()));
        }
        let enc = self.encode(&ex.context_tokens, &ex.input_tokens)?;
        let pmr = self.pmr(&ex.char_scores)?;
        let mut state = self.initial_state(&enc);
        let mut rows = Vec::with_capacity(steps);
        let mut trace = AttentionTrace::default();
        let mut c_pmr = Vec::with_capacity(steps);
        for t in 0..steps {
            let out = self.step(ex.target_tokens[t], state, &enc, &pmr, mode, rng.as_mut().map(|r| &mut **r as &mut dyn RngCore))?;
            state = out.state;
            rows.push(out.logits);
            trace.steps.push(out.trace);
            c_pmr.push(out.c_pmr);
        }
        let logits = self.g.concat_rows(&rows)?;
        Ok(TeacherForced { logits, trace, c_pmr })
    }

    /// Summed negative log-likelihood of `targets` under row-wise `logits`.
    pub fn sequence_nll(&mut self, logits: Var, targets: &[usize]) -> Result<Var> {
        if self.g.shape(logits)[0] != targets.len() {
            return Err(Error::LengthMismatch(format!(
                "{} logit rows for {} targets",
                self.g.shape(logits)[0],
                targets.len()
            )));
        }
        let ls = self.g.log_softmax_rows(logits)?;
        let picked = self.g.pick_cols(ls, targets)?;
        let total = self.g.sum(picked)?;
        self.g.scale(total, -T::one())
    }

    /// Teacher-forced summed NLL of one example.
    pub fn example_nll(
        &mut self,
        ex: &StoryExample,
        mode: GateMode,
        rng: Option<&mut dyn RngCore>,
    ) -> Result<Var> {
        let tf = self.teacher_forced(ex, mode, rng)?;
        self.sequence_nll(tf.logits, &ex.target_tokens[1..])
    }
}
