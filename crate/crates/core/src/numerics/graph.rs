//! Tape-based reverse-mode differentiation over dense 2-D tensors.
//!
//! Every operation appends a node holding its forward value and the
//! information its backward rule needs. Nodes are only ever appended, so
//! tape order is a topological order and [`Graph::backward`] is a single
//! reverse sweep.
//!
//! Parameters are borrowed into the tape rather than copied, which keeps
//! binding a large parameter store per training example cheap.

use std::borrow::Cow;

use rand::Rng;

use super::tensor::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Handle to a node on a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Rows,
    Cols,
}

enum Op<T> {
    Constant,
    Param,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    AddRow(Var, Var),
    Mul(Var, Var),
    MulConst(Var, Tensor<T>),
    Scale(Var, T),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    SliceCols(Var, usize),
    SliceRows(Var, usize),
    Reshape(Var),
    Transpose(Var),
    Tanh(Var),
    Sigmoid(Var),
    Relu(Var),
    Log(Var),
    Softmax(Var, Axis),
    LogSoftmaxRows(Var),
    Embedding(Var, Vec<usize>),
    Sum(Var),
    Mean(Var),
    MaskFill(Var, Vec<bool>),
    PickCols(Var, Vec<usize>),
    StraightThrough(Var),
    BceWithLogits(Var, Tensor<T>),
}

struct Node<'p, T: Scalar> {
    value: Cow<'p, Tensor<T>>,
    op: Op<T>,
    needs_grad: bool,
}

/// A recording of one forward computation.
pub struct Graph<'p, T: Scalar> {
    nodes: Vec<Node<'p, T>>,
}

impl<T: Scalar> Default for Graph<'_, T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<'p, T: Scalar> Graph<'p, T> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::with_capacity(1024),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, name: &str) -> Result<Var> {
        value.ensure_finite(name)?;
        Ok(self.push_unchecked(Cow::Owned(value), op))
    }

    fn push_unchecked(&mut self, value: Cow<'p, Tensor<T>>, op: Op<T>) -> Var {
        let needs_grad = match &op {
            Op::Constant => false,
            Op::Param => true,
            Op::MatMul(a, b) | Op::Add(a, b) | Op::Sub(a, b) | Op::AddRow(a, b) | Op::Mul(a, b) => {
                self.needs(*a) || self.needs(*b)
            }
            Op::ConcatCols(vs) | Op::ConcatRows(vs) => vs.iter().any(|v| self.needs(*v)),
            Op::MulConst(a, _)
            | Op::Scale(a, _)
            | Op::SliceCols(a, _)
            | Op::SliceRows(a, _)
            | Op::Reshape(a)
            | Op::Transpose(a)
            | Op::Tanh(a)
            | Op::Sigmoid(a)
            | Op::Relu(a)
            | Op::Log(a)
            | Op::Softmax(a, _)
            | Op::LogSoftmaxRows(a)
            | Op::Embedding(a, _)
            | Op::Sum(a)
            | Op::Mean(a)
            | Op::MaskFill(a, _)
            | Op::PickCols(a, _)
            | Op::StraightThrough(a)
            | Op::BceWithLogits(a, _) => self.needs(*a),
        };
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// A value that receives no gradient.
    pub fn constant(&mut self, t: Tensor<T>) -> Var {
        self.push_unchecked(Cow::Owned(t), Op::Constant)
    }

    /// A trainable leaf borrowed from a parameter store.
    pub fn param(&mut self, t: &'p Tensor<T>) -> Var {
        self.push_unchecked(Cow::Borrowed(t), Op::Param)
    }

    /// A trainable leaf that owns its value.
    pub fn param_owned(&mut self, t: Tensor<T>) -> Var {
        self.push_unchecked(Cow::Owned(t), Op::Param)
    }

    fn two_d(&self, v: Var, op: &str) -> Result<(usize, usize)> {
        let s = self.shape(v);
        if s.len() != 2 {
            return Err(Error::ShapeMismatch(format!("{op}: expected 2-D, got {s:?}")));
        }
        Ok((s[0], s[1]))
    }

    fn same_shape(&self, a: Var, b: Var, op: &str) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::ShapeMismatch(format!(
                "{op}: {:?} vs {:?}",
                self.shape(a),
                self.shape(b)
            )));
        }
        Ok(())
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).matmul(self.value(b))?;
        self.push(out, Op::MatMul(a, b), "matmul")
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "add")?;
        let mut out = self.value(a).clone();
        out.add_assign(self.value(b));
        self.push(out, Op::Add(a, b), "add")
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "sub")?;
        let bv = self.value(b).data();
        let out = Tensor::new(
            self.shape(a).to_vec(),
            self.value(a).data().iter().zip(bv).map(|(&x, &y)| x - y).collect(),
        )?;
        self.push(out, Op::Sub(a, b), "sub")
    }

    /// `a[m, n] + b[1, n]`, broadcasting `b` over rows.
    pub fn add_row(&mut self, a: Var, b: Var) -> Result<Var> {
        let (_, n) = self.two_d(a, "add_row")?;
        if self.shape(b) != [1, n] {
            return Err(Error::ShapeMismatch(format!(
                "add_row: {:?} + {:?}",
                self.shape(a),
                self.shape(b)
            )));
        }
        let bias = self.value(b).data().to_vec();
        let mut out = self.value(a).clone();
        for row in out.data_mut().chunks_mut(n) {
            for (x, &y) in row.iter_mut().zip(&bias) {
                *x = *x + y;
            }
        }
        self.push(out, Op::AddRow(a, b), "add_row")
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "mul")?;
        let bv = self.value(b).data();
        let out = Tensor::new(
            self.shape(a).to_vec(),
            self.value(a).data().iter().zip(bv).map(|(&x, &y)| x * y).collect(),
        )?;
        self.push(out, Op::Mul(a, b), "mul")
    }

    /// Elementwise product with a constant tensor.
    pub fn mul_const(&mut self, a: Var, k: Tensor<T>) -> Result<Var> {
        if self.shape(a) != k.shape() {
            return Err(Error::ShapeMismatch(format!(
                "mul_const: {:?} vs {:?}",
                self.shape(a),
                k.shape()
            )));
        }
        let out = Tensor::new(
            k.shape().to_vec(),
            self.value(a).data().iter().zip(k.data()).map(|(&x, &y)| x * y).collect(),
        )?;
        self.push(out, Op::MulConst(a, k), "mul_const")
    }

    pub fn scale(&mut self, a: Var, k: T) -> Result<Var> {
        let out = self.value(a).map(|x| x * k);
        self.push(out, Op::Scale(a, k), "scale")
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let rows = self.two_d(parts[0], "concat_cols")?.0;
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let (r, c) = self.two_d(p, "concat_cols")?;
            if r != rows {
                return Err(Error::ShapeMismatch("concat_cols: row counts differ".into()));
            }
            widths.push(c);
        }
        let total: usize = widths.iter().sum();
        let mut out = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for &p in parts {
                out.extend_from_slice(self.value(p).row_slice(r));
            }
        }
        self.push(Tensor::new(vec![rows, total], out)?, Op::ConcatCols(parts.to_vec()), "concat_cols")
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let cols = self.two_d(parts[0], "concat_rows")?.1;
        let mut rows = 0;
        for &p in parts {
            let (r, c) = self.two_d(p, "concat_rows")?;
            if c != cols {
                return Err(Error::ShapeMismatch("concat_rows: column counts differ".into()));
            }
            rows += r;
        }
        let mut out = Vec::with_capacity(rows * cols);
        for &p in parts {
            out.extend_from_slice(self.value(p).data());
        }
        self.push(Tensor::new(vec![rows, cols], out)?, Op::ConcatRows(parts.to_vec()), "concat_rows")
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, width: usize) -> Result<Var> {
        let (rows, cols) = self.two_d(a, "slice_cols")?;
        if start + width > cols {
            return Err(Error::ShapeMismatch(format!(
                "slice_cols {start}..{} of {cols}",
                start + width
            )));
        }
        let src = self.value(a);
        let mut out = Vec::with_capacity(rows * width);
        for r in 0..rows {
            out.extend_from_slice(&src.row_slice(r)[start..start + width]);
        }
        self.push(Tensor::new(vec![rows, width], out)?, Op::SliceCols(a, start), "slice_cols")
    }

    pub fn slice_rows(&mut self, a: Var, start: usize, count: usize) -> Result<Var> {
        let (rows, cols) = self.two_d(a, "slice_rows")?;
        if start + count > rows {
            return Err(Error::ShapeMismatch(format!(
                "slice_rows {start}..{} of {rows}",
                start + count
            )));
        }
        let out = self.value(a).data()[start * cols..(start + count) * cols].to_vec();
        self.push(Tensor::new(vec![count, cols], out)?, Op::SliceRows(a, start), "slice_rows")
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let out = Tensor::new(shape.to_vec(), self.value(a).data().to_vec())?;
        self.push(out, Op::Reshape(a), "reshape")
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        self.two_d(a, "transpose")?;
        let out = self.value(a).transpose();
        self.push(out, Op::Transpose(a), "transpose")
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(|x| x.tanh());
        self.push(out, Op::Tanh(a), "tanh")
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(sigmoid);
        self.push(out, Op::Sigmoid(a), "sigmoid")
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(|x| x.max(T::zero()));
        self.push(out, Op::Relu(a), "relu")
    }

    pub fn log(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).map(|x| x.ln());
        self.push(out, Op::Log(a), "log")
    }

    /// Softmax along `axis`. Entries equal to negative infinity (from
    /// [`Graph::mask_fill`]) receive exactly zero probability.
    pub fn softmax(&mut self, a: Var, axis: Axis) -> Result<Var> {
        let (rows, cols) = self.two_d(a, "softmax")?;
        let src = self.value(a);
        let mut out = src.clone();
        let data = out.data_mut();
        match axis {
            Axis::Cols => {
                for r in 0..rows {
                    softmax_in_place(data, r * cols, 1, cols);
                }
            }
            Axis::Rows => {
                for c in 0..cols {
                    softmax_in_place(data, c, cols, rows);
                }
            }
        }
        self.push(out, Op::Softmax(a, axis), "softmax")
    }

    /// Row-wise log-softmax.
    pub fn log_softmax_rows(&mut self, a: Var) -> Result<Var> {
        let (rows, cols) = self.two_d(a, "log_softmax")?;
        let mut out = self.value(a).clone();
        for row in out.data_mut().chunks_mut(cols).take(rows) {
            let m = row.iter().copied().fold(T::neg_infinity(), T::max);
            let lse = m + row.iter().map(|&x| (x - m).exp()).sum::<T>().ln();
            for x in row.iter_mut() {
                *x = *x - lse;
            }
        }
        self.push(out, Op::LogSoftmaxRows(a), "log_softmax")
    }

    /// Gathers rows of `table` by id.
    pub fn embedding(&mut self, table: Var, ids: &[usize]) -> Result<Var> {
        let (vocab, dim) = self.two_d(table, "embedding")?;
        let t = self.value(table);
        let mut out = Vec::with_capacity(ids.len() * dim);
        for &id in ids {
            if id >= vocab {
                return Err(Error::ShapeMismatch(format!("embedding id {id} >= {vocab}")));
            }
            out.extend_from_slice(t.row_slice(id));
        }
        self.push(
            Tensor::new(vec![ids.len(), dim], out)?,
            Op::Embedding(table, ids.to_vec()),
            "embedding",
        )
    }

    pub fn sum(&mut self, a: Var) -> Result<Var> {
        let s: T = self.value(a).data().iter().copied().sum();
        self.push(Tensor::scalar(s), Op::Sum(a), "sum")
    }

    pub fn mean(&mut self, a: Var) -> Result<Var> {
        let v = self.value(a);
        let s: T = v.data().iter().copied().sum::<T>() / T::lit(v.numel() as f64);
        self.push(Tensor::scalar(s), Op::Mean(a), "mean")
    }

    /// Replaces entries where `mask` is true with `fill`. This is the one
    /// op allowed to produce infinities, for masking ahead of a softmax.
    pub fn mask_fill(&mut self, a: Var, mask: &[bool], fill: T) -> Result<Var> {
        if mask.len() != self.value(a).numel() {
            return Err(Error::ShapeMismatch("mask_fill: mask length".into()));
        }
        let mut out = self.value(a).clone();
        for (x, &m) in out.data_mut().iter_mut().zip(mask) {
            if m {
                *x = fill;
            }
        }
        if out.data().iter().any(|x| x.is_nan()) {
            return Err(Error::NonFiniteValue("mask_fill".into()));
        }
        Ok(self.push_unchecked(Cow::Owned(out), Op::MaskFill(a, mask.to_vec())))
    }

    /// `out[i, 0] = a[i, cols[i]]`.
    pub fn pick_cols(&mut self, a: Var, cols: &[usize]) -> Result<Var> {
        let (rows, width) = self.two_d(a, "pick_cols")?;
        if cols.len() != rows || cols.iter().any(|&c| c >= width) {
            return Err(Error::ShapeMismatch("pick_cols: index out of range".into()));
        }
        let v = self.value(a);
        let out = cols.iter().enumerate().map(|(r, &c)| v.get(r, c)).collect();
        self.push(Tensor::column(out), Op::PickCols(a, cols.to_vec()), "pick_cols")
    }

    /// Forward value `value`; backward passes the incoming gradient to
    /// `surrogate` unchanged (straight-through estimator).
    pub fn straight_through(&mut self, value: Tensor<T>, surrogate: Var) -> Result<Var> {
        if value.shape() != self.shape(surrogate) {
            return Err(Error::ShapeMismatch("straight_through".into()));
        }
        self.push(value, Op::StraightThrough(surrogate), "straight_through")
    }

    /// Summed binary cross-entropy of `sigmoid(logits)` against `targets`.
    pub fn bce_with_logits(&mut self, logits: Var, targets: Tensor<T>) -> Result<Var> {
        if self.shape(logits) != targets.shape() {
            return Err(Error::ShapeMismatch("bce_with_logits".into()));
        }
        let loss: T = self
            .value(logits)
            .data()
            .iter()
            .zip(targets.data())
            .map(|(&z, &y)| z.max(T::zero()) - z * y + (T::one() + (-z.abs()).exp()).ln())
            .sum();
        self.push(Tensor::scalar(loss), Op::BceWithLogits(logits, targets), "bce")
    }

    /// Inverted dropout. Returns `a` unchanged when `rng` is absent or the
    /// rate is zero.
    pub fn dropout<R: Rng + ?Sized>(&mut self, a: Var, rate: f64, rng: Option<&mut R>) -> Result<Var> {
        match rng {
            Some(rng) if rate > 0.0 => {
                let mask = dropout_mask(self.shape(a), rate, rng);
                self.mul_const(a, mask)
            }
            _ => Ok(a),
        }
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        let shape = self.shape(loss);
        if shape.iter().product::<usize>() != 1 {
            return Err(Error::NotScalarLoss(shape.to_vec()));
        }
        self.value(loss).ensure_finite("loss")?;
        let mut grads: Vec<Option<Tensor<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::full(shape, T::one()));

        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            let y = &*node.value;
            match &node.op {
                Op::Constant => {}
                Op::Param => {
                    grads[i] = Some(g);
                    continue;
                }
                Op::MatMul(a, b) => {
                    if self.needs(*a) {
                        let ga = g.matmul_t(self.value(*b));
                        accumulate(&mut grads, *a, ga);
                    }
                    if self.needs(*b) {
                        let gb = self.value(*a).t_matmul(&g);
                        accumulate(&mut grads, *b, gb);
                    }
                }
                Op::Add(a, b) => {
                    if self.needs(*a) {
                        accumulate(&mut grads, *a, g.clone());
                    }
                    if self.needs(*b) {
                        accumulate(&mut grads, *b, g);
                    }
                }
                Op::Sub(a, b) => {
                    if self.needs(*a) {
                        accumulate(&mut grads, *a, g.clone());
                    }
                    if self.needs(*b) {
                        accumulate(&mut grads, *b, g.map(|x| -x));
                    }
                }
                Op::AddRow(a, b) => {
                    if self.needs(*b) {
                        let n = g.cols();
                        let mut gb = vec![T::zero(); n];
                        for row in g.data().chunks(n) {
                            for (acc, &x) in gb.iter_mut().zip(row) {
                                *acc = *acc + x;
                            }
                        }
                        accumulate(&mut grads, *b, Tensor::row(gb));
                    }
                    if self.needs(*a) {
                        accumulate(&mut grads, *a, g);
                    }
                }
                Op::Mul(a, b) => {
                    if self.needs(*a) {
                        accumulate(&mut grads, *a, zip_with(&g, self.value(*b), |x, y| x * y));
                    }
                    if self.needs(*b) {
                        accumulate(&mut grads, *b, zip_with(&g, self.value(*a), |x, y| x * y));
                    }
                }
                Op::MulConst(a, k) => accumulate(&mut grads, *a, zip_with(&g, k, |x, y| x * y)),
                Op::Scale(a, k) => {
                    let k = *k;
                    accumulate(&mut grads, *a, g.map(|x| x * k));
                }
                Op::ConcatCols(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let (rows, width) = (self.value(p).rows(), self.value(p).cols());
                        if self.needs(p) {
                            let mut gp = Vec::with_capacity(rows * width);
                            for r in 0..rows {
                                gp.extend_from_slice(&g.row_slice(r)[offset..offset + width]);
                            }
                            accumulate(&mut grads, p, Tensor::new(vec![rows, width], gp)?);
                        }
                        offset += width;
                    }
                }
                Op::ConcatRows(parts) => {
                    let cols = g.cols();
                    let mut offset = 0;
                    for &p in parts {
                        let rows = self.value(p).rows();
                        if self.needs(p) {
                            let gp = g.data()[offset * cols..(offset + rows) * cols].to_vec();
                            accumulate(&mut grads, p, Tensor::new(vec![rows, cols], gp)?);
                        }
                        offset += rows;
                    }
                }
                Op::SliceCols(a, start) => {
                    let src = self.value(*a);
                    let (cols, width) = (src.cols(), g.cols());
                    let mut ga = Tensor::zeros(src.shape());
                    for r in 0..src.rows() {
                        ga.data_mut()[r * cols + start..r * cols + start + width]
                            .copy_from_slice(g.row_slice(r));
                    }
                    accumulate(&mut grads, *a, ga);
                }
                Op::SliceRows(a, start) => {
                    let src = self.value(*a);
                    let cols = src.cols();
                    let mut ga = Tensor::zeros(src.shape());
                    ga.data_mut()[start * cols..start * cols + g.numel()].copy_from_slice(g.data());
                    accumulate(&mut grads, *a, ga);
                }
                Op::Reshape(a) => {
                    let ga = Tensor::new(self.shape(*a).to_vec(), g.into_data())?;
                    accumulate(&mut grads, *a, ga);
                }
                Op::Transpose(a) => accumulate(&mut grads, *a, g.transpose()),
                Op::Tanh(a) => {
                    accumulate(&mut grads, *a, zip_with(&g, y, |g, y| g * (T::one() - y * y)))
                }
                Op::Sigmoid(a) => {
                    accumulate(&mut grads, *a, zip_with(&g, y, |g, y| g * y * (T::one() - y)))
                }
                Op::Relu(a) => accumulate(
                    &mut grads,
                    *a,
                    zip_with(&g, y, |g, y| if y > T::zero() { g } else { T::zero() }),
                ),
                Op::Log(a) => accumulate(&mut grads, *a, zip_with(&g, self.value(*a), |g, x| g / x)),
                Op::Softmax(a, axis) => {
                    let (rows, cols) = (y.rows(), y.cols());
                    let mut ga = Tensor::zeros(y.shape());
                    let (outer, inner, stride, step) = match axis {
                        Axis::Cols => (rows, cols, 1, cols),
                        Axis::Rows => (cols, rows, cols, 1),
                    };
                    for o in 0..outer {
                        let base = o * step;
                        let dot: T = (0..inner)
                            .map(|k| g.data()[base + k * stride] * y.data()[base + k * stride])
                            .sum();
                        for k in 0..inner {
                            let idx = base + k * stride;
                            ga.data_mut()[idx] = y.data()[idx] * (g.data()[idx] - dot);
                        }
                    }
                    accumulate(&mut grads, *a, ga);
                }
                Op::LogSoftmaxRows(a) => {
                    let cols = y.cols();
                    let mut ga = g.clone();
                    for (grow, yrow) in ga.data_mut().chunks_mut(cols).zip(y.data().chunks(cols)) {
                        let total: T = grow.iter().copied().sum();
                        for (gx, &ly) in grow.iter_mut().zip(yrow) {
                            *gx = *gx - ly.exp() * total;
                        }
                    }
                    accumulate(&mut grads, *a, ga);
                }
                Op::Embedding(table, ids) => {
                    let t = self.value(*table);
                    let dim = t.cols();
                    // Scatter straight into the table's gradient; lookups of a
                    // few rows must not allocate a full table each.
                    let gt = grads[table.0].get_or_insert_with(|| Tensor::zeros(t.shape()));
                    for (r, &id) in ids.iter().enumerate() {
                        let dst = &mut gt.data_mut()[id * dim..(id + 1) * dim];
                        for (d, &x) in dst.iter_mut().zip(g.row_slice(r)) {
                            *d = *d + x;
                        }
                    }
                }
                Op::Sum(a) => {
                    let g0 = g.data()[0];
                    accumulate(&mut grads, *a, Tensor::full(self.shape(*a), g0));
                }
                Op::Mean(a) => {
                    let n = T::lit(self.value(*a).numel() as f64);
                    let g0 = g.data()[0] / n;
                    accumulate(&mut grads, *a, Tensor::full(self.shape(*a), g0));
                }
                Op::MaskFill(a, mask) => {
                    let mut ga = g;
                    for (x, &m) in ga.data_mut().iter_mut().zip(mask) {
                        if m {
                            *x = T::zero();
                        }
                    }
                    accumulate(&mut grads, *a, ga);
                }
                Op::PickCols(a, cols) => {
                    let src = self.value(*a);
                    let width = src.cols();
                    let mut ga = Tensor::zeros(src.shape());
                    for (r, &c) in cols.iter().enumerate() {
                        ga.data_mut()[r * width + c] = g.data()[r];
                    }
                    accumulate(&mut grads, *a, ga);
                }
                Op::StraightThrough(s) => accumulate(&mut grads, *s, g),
                Op::BceWithLogits(z, targets) => {
                    let g0 = g.data()[0];
                    let gz = zip_with(self.value(*z), targets, |z, t| g0 * (sigmoid(z) - t));
                    accumulate(&mut grads, *z, gz);
                }
            }
        }
        Ok(Gradients { grads })
    }
}

/// Gradients produced by one backward sweep.
pub struct Gradients<T> {
    grads: Vec<Option<Tensor<T>>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn wrt(&self, v: Var) -> Option<&Tensor<T>> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor<T>> {
        self.grads.get_mut(v.0).and_then(Option::take)
    }
}

fn accumulate<T: Scalar>(grads: &mut [Option<Tensor<T>>], v: Var, g: Tensor<T>) {
    match &mut grads[v.0] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

fn zip_with<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>, f: impl Fn(T, T) -> T) -> Tensor<T> {
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    Tensor::new(a.shape().to_vec(), data).expect("zip_with on equal shapes")
}

#[inline]
pub(crate) fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

fn softmax_in_place<T: Scalar>(data: &mut [T], start: usize, stride: usize, len: usize) {
    let idx = |k: usize| start + k * stride;
    let m = (0..len).map(|k| data[idx(k)]).fold(T::neg_infinity(), T::max);
    let mut total = T::zero();
    for k in 0..len {
        let e = (data[idx(k)] - m).exp();
        data[idx(k)] = e;
        total = total + e;
    }
    for k in 0..len {
        data[idx(k)] = data[idx(k)] / total;
    }
}

/// Mask for inverted dropout: kept units are scaled by `1 / (1 - rate)`.
pub fn dropout_mask<T: Scalar, R: Rng + ?Sized>(shape: &[usize], rate: f64, rng: &mut R) -> Tensor<T> {
    let keep = T::lit(1.0 / (1.0 - rate));
    let n = shape.iter().product();
    let data = (0..n)
        .map(|_| if rng.random::<f64>() < rate { T::zero() } else { keep })
        .collect();
    Tensor::new(shape.to_vec(), data).expect("mask shape")
}

/// Inverted dropout on a plain tensor; identity outside training.
pub fn dropout<T: Scalar, R: Rng + ?Sized>(x: &Tensor<T>, rate: f64, training: bool, rng: &mut R) -> Tensor<T> {
    if !training || rate == 0.0 {
        return x.clone();
    }
    let mask = dropout_mask::<T, R>(x.shape(), rate, rng);
    zip_with(x, &mask, |a, b| a * b)
}
