//! Forward recording and reverse-mode gradients over module applications.

use std::collections::BTreeMap;

use super::{Block, Model};
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug)]
enum Op {
    Input,
    Embed(usize),
    Associate(Var, Var),
    Saliency(Var),
    Dissociate(Var),
}

/// Execution-ordered record of module applications with their outputs.
#[derive(Clone, Debug)]
pub struct Tape {
    dim: usize,
    ops: Vec<Op>,
    values: Vec<Vec<f64>>,
}

impl Tape {
    pub fn new(dim: usize) -> Self {
        Tape {
            dim,
            ops: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn value(&self, var: Var) -> &[f64] {
        &self.values[var.0]
    }

    fn push(&mut self, op: Op, value: Vec<f64>) -> Var {
        self.ops.push(op);
        self.values.push(value);
        Var(self.ops.len() - 1)
    }

    fn check(&self, model: &Model) -> Result<()> {
        if model.dim() != self.dim {
            return Err(Error::Structure(format!(
                "tape dimension {} does not match model dimension {}",
                self.dim,
                model.dim()
            )));
        }
        Ok(())
    }

    fn check_var(&self, var: Var) -> Result<()> {
        if var.0 >= self.ops.len() {
            return Err(Error::Structure(format!("unknown tape variable {}", var.0)));
        }
        Ok(())
    }

    /// A constant vector; receives no parameter gradient.
    pub fn input(&mut self, values: &[f64]) -> Result<Var> {
        if values.len() != self.dim {
            return Err(Error::Structure(format!(
                "input has {} entries, tape dimension is {}",
                values.len(),
                self.dim
            )));
        }
        Ok(self.push(Op::Input, values.to_vec()))
    }

    pub fn embed(&mut self, model: &Model, id: usize) -> Result<Var> {
        self.check(model)?;
        let row = model.embedding(id)?.to_vec();
        Ok(self.push(Op::Embed(id), row))
    }

    pub fn associate(&mut self, model: &Model, left: Var, right: Var) -> Result<Var> {
        self.check(model)?;
        self.check_var(left)?;
        self.check_var(right)?;
        let d = self.dim;
        if self.values[left.0].len() != d || self.values[right.0].len() != d {
            return Err(Error::Structure("associate expects two d-vectors".into()));
        }
        let mut out = vec![0.0; d];
        model.assoc_into(&self.values[left.0], &self.values[right.0], &mut out);
        Ok(self.push(Op::Associate(left, right), out))
    }

    pub fn saliency(&mut self, model: &Model, x: Var) -> Result<Var> {
        self.check(model)?;
        self.check_var(x)?;
        if self.values[x.0].len() != self.dim {
            return Err(Error::Structure("saliency expects a d-vector".into()));
        }
        let s = model.score(&self.values[x.0]);
        Ok(self.push(Op::Saliency(x), vec![s]))
    }

    /// Records the dissociation output as a single `2d` vector: the first half
    /// reconstructs the left input, the second half the right.
    pub fn dissociate(&mut self, model: &Model, x: Var) -> Result<Var> {
        self.check(model)?;
        self.check_var(x)?;
        if self.values[x.0].len() != self.dim {
            return Err(Error::Structure("dissociate expects a d-vector".into()));
        }
        let mut out = vec![0.0; 2 * self.dim];
        model.dissoc_into(&self.values[x.0], &mut out);
        Ok(self.push(Op::Dissociate(x), out))
    }
}

/// Reverse-mode gradients of a scalar loss whose partial derivatives with
/// respect to some recorded values are given in `upstream`.
pub fn backward(model: &Model, tape: &Tape, upstream: &[(Var, Vec<f64>)]) -> Result<GradientSet> {
    tape.check(model)?;
    let d = tape.dim;
    let mut grads: Vec<Option<Vec<f64>>> = vec![None; tape.len()];
    for (var, g) in upstream {
        tape.check_var(*var)?;
        if g.len() != tape.values[var.0].len() {
            return Err(Error::Structure(format!(
                "upstream gradient for variable {} has {} entries, value has {}",
                var.0,
                g.len(),
                tape.values[var.0].len()
            )));
        }
        accumulate(&mut grads[var.0], g);
    }

    let mut out = GradientSet::new(d, model.vocab_size());
    for idx in (0..tape.len()).rev() {
        let Some(g) = grads[idx].take() else {
            continue;
        };
        match tape.ops[idx] {
            Op::Input => {}
            Op::Embed(id) => out.add_embed_row(id, &g),
            Op::Saliency(x) => {
                let gs = g[0];
                let xv = &tape.values[x.0];
                let gw = out.dense_mut(Block::SalW);
                for (acc, v) in gw.iter_mut().zip(xv) {
                    *acc += gs * v;
                }
                out.dense_mut(Block::SalB)[0] += gs;
                let dx: Vec<f64> = model.sal_w.iter().map(|w| gs * w).collect();
                accumulate(&mut grads[x.0], &dx);
            }
            Op::Associate(l, r) => {
                let y = &tape.values[idx];
                let dz: Vec<f64> = g
                    .iter()
                    .zip(y)
                    .map(|(gi, yi)| gi * (1.0 - yi * yi))
                    .collect();
                let (lv, rv) = (&tape.values[l.0], &tape.values[r.0]);
                let mut dl = vec![0.0; d];
                let mut dr = vec![0.0; d];
                {
                    let gw = out.dense_mut(Block::AssocW);
                    for (i, &dzi) in dz.iter().enumerate() {
                        let row = &mut gw[i * 2 * d..(i + 1) * 2 * d];
                        for (acc, x) in row[..d].iter_mut().zip(lv) {
                            *acc += dzi * x;
                        }
                        for (acc, x) in row[d..].iter_mut().zip(rv) {
                            *acc += dzi * x;
                        }
                        let wrow = &model.assoc_w[i * 2 * d..(i + 1) * 2 * d];
                        for (acc, w) in dl.iter_mut().zip(&wrow[..d]) {
                            *acc += dzi * w;
                        }
                        for (acc, w) in dr.iter_mut().zip(&wrow[d..]) {
                            *acc += dzi * w;
                        }
                    }
                }
                for (acc, v) in out.dense_mut(Block::AssocB).iter_mut().zip(&dz) {
                    *acc += v;
                }
                accumulate(&mut grads[l.0], &dl);
                accumulate(&mut grads[r.0], &dr);
            }
            Op::Dissociate(x) => {
                let xv = &tape.values[x.0];
                let mut dx = vec![0.0; d];
                {
                    let gw = out.dense_mut(Block::DissocW);
                    for (i, &gi) in g.iter().enumerate() {
                        let row = &mut gw[i * d..(i + 1) * d];
                        for (acc, v) in row.iter_mut().zip(xv) {
                            *acc += gi * v;
                        }
                        let wrow = &model.dissoc_w[i * d..(i + 1) * d];
                        for (acc, w) in dx.iter_mut().zip(wrow) {
                            *acc += gi * w;
                        }
                    }
                }
                for (acc, v) in out.dense_mut(Block::DissocB).iter_mut().zip(&g) {
                    *acc += v;
                }
                accumulate(&mut grads[x.0], &dx);
            }
        }
    }
    Ok(out)
}

fn accumulate(slot: &mut Option<Vec<f64>>, g: &[f64]) {
    match slot {
        Some(acc) => {
            for (a, v) in acc.iter_mut().zip(g) {
                *a += v;
            }
        }
        None => *slot = Some(g.to_vec()),
    }
}

/// Gradient accumulator shaped like a [`Model`].
///
/// Embedding gradients are kept per touched row; the other blocks are
/// allocated on first touch.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientSet {
    dim: usize,
    vocab_size: usize,
    embed_rows: BTreeMap<usize, Vec<f64>>,
    dense: [Option<Vec<f64>>; 6],
}

impl GradientSet {
    pub fn new(dim: usize, vocab_size: usize) -> Self {
        GradientSet {
            dim,
            vocab_size,
            embed_rows: BTreeMap::new(),
            dense: Default::default(),
        }
    }

    pub fn for_model(model: &Model) -> Self {
        GradientSet::new(model.dim(), model.vocab_size())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// True when no parameter block was touched.
    pub fn is_empty(&self) -> bool {
        self.embed_rows.is_empty() && self.dense.iter().all(Option::is_none)
    }

    pub fn embed_rows(&self) -> &BTreeMap<usize, Vec<f64>> {
        &self.embed_rows
    }

    pub fn embed_row(&self, id: usize) -> Option<&[f64]> {
        self.embed_rows.get(&id).map(Vec::as_slice)
    }

    /// Dense block gradient, if touched. Panics on [`Block::Embed`].
    pub fn block(&self, block: Block) -> Option<&[f64]> {
        self.dense[block.dense_index()].as_deref()
    }

    /// Partial derivative for one flat parameter index of `block`
    /// (row-major `id * d + j` for embeddings); zero when untouched.
    pub fn get(&self, block: Block, index: usize) -> f64 {
        match block {
            Block::Embed => self
                .embed_rows
                .get(&(index / self.dim))
                .map_or(0.0, |row| row[index % self.dim]),
            _ => self.block(block).map_or(0.0, |g| g[index]),
        }
    }

    /// Flat parameter indices carrying gradient, per block.
    pub fn touched(&self) -> Vec<(Block, usize)> {
        let mut out = Vec::new();
        for &id in self.embed_rows.keys() {
            out.extend((0..self.dim).map(|j| (Block::Embed, id * self.dim + j)));
        }
        for block in Block::DENSE {
            if let Some(g) = self.block(block) {
                out.extend((0..g.len()).map(|i| (block, i)));
            }
        }
        out
    }

    fn dense_mut(&mut self, block: Block) -> &mut Vec<f64> {
        let len = block.len(self.dim, self.vocab_size);
        self.dense[block.dense_index()].get_or_insert_with(|| vec![0.0; len])
    }

    pub(crate) fn add_embed_row(&mut self, id: usize, g: &[f64]) {
        match self.embed_rows.get_mut(&id) {
            Some(acc) => {
                for (a, v) in acc.iter_mut().zip(g) {
                    *a += v;
                }
            }
            None => {
                self.embed_rows.insert(id, g.to_vec());
            }
        }
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &GradientSet, scale: f64) -> Result<()> {
        if other.dim != self.dim || other.vocab_size != self.vocab_size {
            return Err(Error::Structure("gradient sets have different shapes".into()));
        }
        for (&id, row) in &other.embed_rows {
            let scaled: Vec<f64> = row.iter().map(|v| v * scale).collect();
            self.add_embed_row(id, &scaled);
        }
        for block in Block::DENSE {
            if let Some(g) = other.block(block) {
                for (a, v) in self.dense_mut(block).iter_mut().zip(g) {
                    *a += scale * v;
                }
            }
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        for row in self.embed_rows.values_mut() {
            row.iter_mut().for_each(|v| *v *= factor);
        }
        for g in self.dense.iter_mut().flatten() {
            g.iter_mut().for_each(|v| *v *= factor);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.embed_rows.values().flatten().all(|v| v.is_finite())
            && self.dense.iter().flatten().flatten().all(|v| v.is_finite())
    }
}
