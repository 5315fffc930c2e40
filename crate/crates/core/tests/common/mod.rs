//! Shared test helpers: a forward evaluator written against the raw parameter
//! blocks, independent of the library's tape, and a finite-difference checker.

#![allow(dead_code)]

use raam::model::{Block, GradientSet, InitOptions, Model};
use raam::parser::Bracketing;

pub const FD_STEP: f64 = 1e-5;
pub const FD_REL_TOL: f64 = 1e-4;
pub const FD_ABS_FLOOR: f64 = 1e-7;

/// Freshly initialized model for tests, allowing any dimension.
pub fn model(vocab: usize, dim: usize, seed: u64) -> Model {
    Model::init(vocab, &InitOptions::new(dim, seed).with_bounds(1..=512)).unwrap()
}

/// Parameter snapshot with its own forward pass.
pub struct Params {
    d: usize,
    w: Vec<f64>,
    aw: Vec<f64>,
    ab: Vec<f64>,
    dw: Vec<f64>,
    db: Vec<f64>,
    rw: Vec<f64>,
    rb: f64,
}

impl Params {
    pub fn of(m: &Model) -> Self {
        Params {
            d: m.dim(),
            w: m.block(Block::Embed).to_vec(),
            aw: m.block(Block::AssocW).to_vec(),
            ab: m.block(Block::AssocB).to_vec(),
            dw: m.block(Block::DissocW).to_vec(),
            db: m.block(Block::DissocB).to_vec(),
            rw: m.block(Block::SalW).to_vec(),
            rb: m.block(Block::SalB)[0],
        }
    }

    pub fn word(&self, id: usize) -> Vec<f64> {
        self.w[id * self.d..(id + 1) * self.d].to_vec()
    }

    pub fn assoc(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let d = self.d;
        let x: Vec<f64> = u.iter().chain(v).copied().collect();
        (0..d)
            .map(|i| {
                let z: f64 = (0..2 * d).map(|j| self.aw[i * 2 * d + j] * x[j]).sum();
                (z + self.ab[i]).tanh()
            })
            .collect()
    }

    pub fn sal(&self, x: &[f64]) -> f64 {
        self.rb + x.iter().zip(&self.rw).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn dissoc(&self, x: &[f64]) -> Vec<f64> {
        let d = self.d;
        (0..2 * d)
            .map(|i| self.db[i] + (0..d).map(|j| self.dw[i * d + j] * x[j]).sum::<f64>())
            .collect()
    }

    /// Node vectors (leaves, then merges in order).
    pub fn nodes(&self, words: &[usize], merges: &[(usize, usize)]) -> Vec<Vec<f64>> {
        let mut nodes: Vec<Vec<f64>> = words.iter().map(|&w| self.word(w)).collect();
        for &(l, r) in merges {
            let v = self.assoc(&nodes[l], &nodes[r]);
            nodes.push(v);
        }
        nodes
    }

    pub fn tree_score(&self, words: &[usize], merges: &[(usize, usize)]) -> f64 {
        let n = words.len();
        self.nodes(words, merges)[n..].iter().map(|x| self.sal(x)).sum()
    }

    pub fn ranking(
        &self,
        good: &[usize],
        bad: &[usize],
        merges: &[(usize, usize)],
        position: usize,
        margin: f64,
    ) -> f64 {
        let n = good.len();
        let cover = covering(n, merges, position);
        let g = self.nodes(good, merges);
        let b = self.nodes(bad, merges);
        (0..merges.len())
            .filter(|&k| cover[k])
            .map(|k| (margin - self.sal(&g[n + k]) + self.sal(&b[n + k])).max(0.0))
            .sum()
    }

    pub fn recon(&self, words: &[usize], merges: &[(usize, usize)], weight: f64) -> f64 {
        if merges.is_empty() {
            return 0.0;
        }
        let n = words.len();
        let nodes = self.nodes(words, merges);
        let total: f64 = merges
            .iter()
            .enumerate()
            .map(|(k, &(l, r))| {
                let out = self.dissoc(&nodes[n + k]);
                out.iter()
                    .zip(nodes[l].iter().chain(&nodes[r]))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
            })
            .sum();
        weight * total / merges.len() as f64
    }

    pub fn hinge(
        &self,
        words: &[usize],
        gold: &[(usize, usize)],
        pred: &[(usize, usize)],
        margin: f64,
    ) -> f64 {
        (margin + self.tree_score(words, pred) - self.tree_score(words, gold)).max(0.0)
    }
}

/// For each merge, whether its leaf set contains `position`.
pub fn covering(n: usize, merges: &[(usize, usize)], position: usize) -> Vec<bool> {
    let mut leaves: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    for &(l, r) in merges {
        let mut s = leaves[l].clone();
        s.extend(&leaves[r]);
        leaves.push(s);
    }
    leaves[n..].iter().map(|s| s.contains(&position)).collect()
}

/// Largest finite-difference disagreement over every parameter of `model`,
/// as `(block, index, analytic, numeric)`; `None` when all pass.
pub fn fd_mismatch(
    model: &Model,
    grads: &GradientSet,
    loss: impl Fn(&Params) -> f64,
) -> Option<(Block, usize, f64, f64)> {
    let mut probe = model.clone();
    for block in Block::ALL {
        for i in 0..block.len(model.dim(), model.vocab_size()) {
            let orig = probe.block(block)[i];
            probe.block_mut(block)[i] = orig + FD_STEP;
            let up = loss(&Params::of(&probe));
            probe.block_mut(block)[i] = orig - FD_STEP;
            let down = loss(&Params::of(&probe));
            probe.block_mut(block)[i] = orig;
            let numeric = (up - down) / (2.0 * FD_STEP);
            let analytic = grads.get(block, i);
            let diff = (analytic - numeric).abs();
            let scale = analytic.abs().max(numeric.abs());
            if diff > FD_ABS_FLOOR && diff / scale >= FD_REL_TOL {
                return Some((block, i, analytic, numeric));
            }
        }
    }
    None
}

/// All binary bracketings of `n` leaves, built independently of the library.
pub fn all_merge_lists(n: usize) -> Vec<Vec<(usize, usize)>> {
    // Trees as nested pairs over leaf ranges, then flattened post-order.
    #[derive(Clone)]
    enum T {
        Leaf(usize),
        Node(Box<T>, Box<T>),
    }
    fn build(lo: usize, hi: usize) -> Vec<T> {
        if hi - lo == 1 {
            return vec![T::Leaf(lo)];
        }
        let mut out = Vec::new();
        for mid in lo + 1..hi {
            for l in build(lo, mid) {
                for r in build(mid, hi) {
                    out.push(T::Node(Box::new(l.clone()), Box::new(r)));
                }
            }
        }
        out
    }
    fn flatten(t: &T, n: usize, merges: &mut Vec<(usize, usize)>) -> usize {
        match t {
            T::Leaf(i) => *i,
            T::Node(l, r) => {
                let a = flatten(l, n, merges);
                let b = flatten(r, n, merges);
                merges.push((a, b));
                n + merges.len() - 1
            }
        }
    }
    build(0, n)
        .iter()
        .map(|t| {
            let mut m = Vec::new();
            flatten(t, n, &mut m);
            m
        })
        .collect()
}

pub fn bracketing(n: usize, merges: &[(usize, usize)]) -> Bracketing {
    Bracketing::new(n, merges.to_vec()).unwrap()
}
