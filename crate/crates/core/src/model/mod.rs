//! Trainable parameters and the four modules that read them.
//!
//! A [`Model`] owns exactly one copy of every parameter block:
//!
//! - the word embedding table (`V x d`),
//! - the association layer `tanh(A_w [u; v] + A_b)` mapping two vectors to one,
//! - the dissociation layer `D_w x + D_b` mapping one vector back to two,
//! - the saliency scorer `R_w . x + R_b`.
//!
//! Every tree node built by the parser or the trainer calls into the same
//! blocks, so an update to `A_w` is visible at every association site of the
//! next forward pass.

mod io;
mod tape;

use std::ops::{Deref, RangeInclusive};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Vocab;
use crate::error::{Error, Result};

pub use io::{
    export_embeddings, load_model, load_pretrained, read_header, save_model, ModelHeader,
    FORMAT_VERSION, MAGIC,
};
pub use tape::{backward, GradientSet, Tape, Var};

pub const DEFAULT_DIM: usize = 50;
pub const DEFAULT_DIM_BOUNDS: RangeInclusive<usize> = 20..=200;

/// One parameter block of a [`Model`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Block {
    Embed,
    AssocW,
    AssocB,
    DissocW,
    DissocB,
    SalW,
    SalB,
}

impl Block {
    pub const ALL: [Block; 7] = [
        Block::Embed,
        Block::AssocW,
        Block::AssocB,
        Block::DissocW,
        Block::DissocB,
        Block::SalW,
        Block::SalB,
    ];

    /// Blocks other than the embedding table; these are stored densely in a
    /// [`GradientSet`].
    pub const DENSE: [Block; 6] = [
        Block::AssocW,
        Block::AssocB,
        Block::DissocW,
        Block::DissocB,
        Block::SalW,
        Block::SalB,
    ];

    pub fn len(self, dim: usize, vocab_size: usize) -> usize {
        match self {
            Block::Embed => vocab_size * dim,
            Block::AssocW | Block::DissocW => 2 * dim * dim,
            Block::AssocB | Block::SalW => dim,
            Block::DissocB => 2 * dim,
            Block::SalB => 1,
        }
    }

    pub(crate) fn dense_index(self) -> usize {
        match self {
            Block::Embed => panic!("embedding block is sparse"),
            Block::AssocW => 0,
            Block::AssocB => 1,
            Block::DissocW => 2,
            Block::DissocB => 3,
            Block::SalW => 4,
            Block::SalB => 5,
        }
    }
}

/// A point in the representation space.
#[derive(Clone, Debug, PartialEq)]
pub struct Repr(Vec<f64>);

impl Repr {
    pub fn new(values: Vec<f64>) -> Self {
        Repr(values)
    }

    pub fn zeros(dim: usize) -> Self {
        Repr(vec![0.0; dim])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl Deref for Repr {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Repr {
    fn from(v: Vec<f64>) -> Self {
        Repr(v)
    }
}

/// Options for random initialization.
#[derive(Clone, Debug)]
pub struct InitOptions {
    pub dim: usize,
    pub seed: u64,
    pub dim_bounds: RangeInclusive<usize>,
}

impl InitOptions {
    pub fn new(dim: usize, seed: u64) -> Self {
        InitOptions {
            dim,
            seed,
            dim_bounds: DEFAULT_DIM_BOUNDS,
        }
    }

    pub fn with_bounds(mut self, bounds: RangeInclusive<usize>) -> Self {
        self.dim_bounds = bounds;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    dim: usize,
    vocab_size: usize,
    embed: Vec<f64>,
    assoc_w: Vec<f64>,
    assoc_b: Vec<f64>,
    dissoc_w: Vec<f64>,
    dissoc_b: Vec<f64>,
    sal_w: Vec<f64>,
    sal_b: Vec<f64>,
}

impl Model {
    /// All-zero parameters. No dimension bounds are applied; this is the raw
    /// constructor for hand-built models.
    pub fn zeros(dim: usize, vocab_size: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        Model {
            dim,
            vocab_size,
            embed: vec![0.0; vocab_size * dim],
            assoc_w: vec![0.0; 2 * dim * dim],
            assoc_b: vec![0.0; dim],
            dissoc_w: vec![0.0; 2 * dim * dim],
            dissoc_b: vec![0.0; 2 * dim],
            sal_w: vec![0.0; dim],
            sal_b: vec![0.0; 1],
        }
    }

    /// Random initialization: embeddings and saliency weights uniform in
    /// `+-1/sqrt(d)`, association weights in `+-1/sqrt(2d)` and dissociation
    /// weights in `+-1/sqrt(d)` (one over the square root of the fan-in),
    /// biases zero.
    pub fn init(vocab_size: usize, opts: &InitOptions) -> Result<Self> {
        let dim = opts.dim;
        if !opts.dim_bounds.contains(&dim) {
            return Err(Error::Parameter(format!(
                "dimension {dim} outside allowed range {}..={}",
                opts.dim_bounds.start(),
                opts.dim_bounds.end()
            )));
        }
        let mut model = Model::zeros(dim, vocab_size);
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let a = 1.0 / (dim as f64).sqrt();
        let a2 = 1.0 / ((2 * dim) as f64).sqrt();
        fill_uniform(&mut rng, &mut model.embed, a);
        fill_uniform(&mut rng, &mut model.assoc_w, a2);
        fill_uniform(&mut rng, &mut model.dissoc_w, a);
        fill_uniform(&mut rng, &mut model.sal_w, a);
        Ok(model)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn block(&self, block: Block) -> &[f64] {
        match block {
            Block::Embed => &self.embed,
            Block::AssocW => &self.assoc_w,
            Block::AssocB => &self.assoc_b,
            Block::DissocW => &self.dissoc_w,
            Block::DissocB => &self.dissoc_b,
            Block::SalW => &self.sal_w,
            Block::SalB => &self.sal_b,
        }
    }

    pub fn block_mut(&mut self, block: Block) -> &mut [f64] {
        match block {
            Block::Embed => &mut self.embed,
            Block::AssocW => &mut self.assoc_w,
            Block::AssocB => &mut self.assoc_b,
            Block::DissocW => &mut self.dissoc_w,
            Block::DissocB => &mut self.dissoc_b,
            Block::SalW => &mut self.sal_w,
            Block::SalB => &mut self.sal_b,
        }
    }

    pub fn is_finite(&self) -> bool {
        Block::ALL
            .iter()
            .all(|&b| self.block(b).iter().all(|x| x.is_finite()))
    }

    /// Borrow row `id` of the embedding table.
    pub fn embedding(&self, id: usize) -> Result<&[f64]> {
        if id >= self.vocab_size {
            return Err(Error::Index {
                id,
                size: self.vocab_size,
            });
        }
        Ok(&self.embed[id * self.dim..(id + 1) * self.dim])
    }

    pub fn embedding_mut(&mut self, id: usize) -> Result<&mut [f64]> {
        if id >= self.vocab_size {
            return Err(Error::Index {
                id,
                size: self.vocab_size,
            });
        }
        let d = self.dim;
        Ok(&mut self.embed[id * d..(id + 1) * d])
    }

    pub fn embed(&self, id: usize) -> Result<Repr> {
        self.embedding(id).map(|row| Repr(row.to_vec()))
    }

    pub fn associate(&self, u: &[f64], v: &[f64]) -> Result<Repr> {
        self.check_input(u, "associate")?;
        self.check_input(v, "associate")?;
        let mut out = vec![0.0; self.dim];
        self.assoc_into(u, v, &mut out);
        Ok(Repr(out))
    }

    pub fn saliency(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x, "saliency")?;
        Ok(self.score(x))
    }

    pub fn dissociate(&self, x: &[f64]) -> Result<(Repr, Repr)> {
        self.check_input(x, "dissociate")?;
        let mut out = vec![0.0; 2 * self.dim];
        self.dissoc_into(x, &mut out);
        let right = out.split_off(self.dim);
        Ok((Repr(out), Repr(right)))
    }

    fn check_input(&self, x: &[f64], op: &'static str) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Structure(format!(
                "{op}: input has {} entries, model dimension is {}",
                x.len(),
                self.dim
            )));
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::NumericInput(op));
        }
        Ok(())
    }

    // Unchecked kernels shared by the parser, the tape and the public wrappers,
    // so every path produces bit-identical values.

    pub(crate) fn assoc_into(&self, u: &[f64], v: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.assoc_w[i * 2 * d..(i + 1) * 2 * d];
            let mut z = self.assoc_b[i];
            for (w, x) in row[..d].iter().zip(u) {
                z += w * x;
            }
            for (w, x) in row[d..].iter().zip(v) {
                z += w * x;
            }
            *o = z.tanh();
        }
    }

    pub(crate) fn score(&self, x: &[f64]) -> f64 {
        let mut s = self.sal_b[0];
        for (w, v) in self.sal_w.iter().zip(x) {
            s += w * v;
        }
        s
    }

    pub(crate) fn dissoc_into(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.dissoc_w[i * d..(i + 1) * d];
            let mut z = self.dissoc_b[i];
            for (w, v) in row.iter().zip(x) {
                z += w * v;
            }
            *o = z;
        }
    }

    /// `p <- p + scale * g` for every parameter carried by `grads`.
    pub fn apply_update(&mut self, grads: &GradientSet, scale: f64) -> Result<()> {
        if grads.dim() != self.dim || grads.vocab_size() != self.vocab_size {
            return Err(Error::Structure(format!(
                "gradient shape (d={}, V={}) does not match model (d={}, V={})",
                grads.dim(),
                grads.vocab_size(),
                self.dim,
                self.vocab_size
            )));
        }
        let d = self.dim;
        for (&id, row) in grads.embed_rows() {
            for (p, g) in self.embed[id * d..(id + 1) * d].iter_mut().zip(row) {
                *p += scale * g;
            }
        }
        for block in Block::DENSE {
            if let Some(g) = grads.block(block) {
                for (p, g) in self.block_mut(block).iter_mut().zip(g) {
                    *p += scale * g;
                }
            }
        }
        Ok(())
    }
}

fn fill_uniform(rng: &mut ChaCha8Rng, xs: &mut [f64], bound: f64) {
    for x in xs {
        // Reject the closed endpoint so |x| < bound holds strictly.
        *x = loop {
            let v = rng.gen_range(-bound..bound);
            if v != -bound {
                break v;
            }
        };
    }
}

/// Random initialization over a vocabulary, optionally overwriting rows with
/// vectors from a pretrained embedding file.
pub fn init_model(dim: usize, vocab: &Vocab, seed: u64, pretrained: Option<&Path>) -> Result<Model> {
    let mut model = Model::init(vocab.len(), &InitOptions::new(dim, seed))?;
    if let Some(path) = pretrained {
        load_pretrained(&mut model, vocab, path)?;
    }
    Ok(model)
}
