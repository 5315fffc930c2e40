use rand::Rng;

use super::steps::corrupt;
use crate::corpus::{Segment, Vocab};
use crate::error::Result;
use crate::model::Model;
use crate::parser::{ParseTree, Strategy};

/// Summed saliency of the nodes covering `position`, for the genuine tree
/// and for the corrupted words placed in the same bracketing.
pub fn covering_scores(
    model: &Model,
    genuine: &ParseTree,
    corrupted_words: &[usize],
    position: usize,
) -> Result<(f64, f64)> {
    let shape = genuine.bracketing();
    let bad = ParseTree::build(model, corrupted_words, &shape)?;
    let mut good_sum = 0.0;
    let mut bad_sum = 0.0;
    for (g, b) in genuine.internal_nodes().zip(bad.internal_nodes()) {
        if g.span.contains(position) {
            good_sum += g.saliency().unwrap_or(0.0);
            bad_sum += b.saliency().unwrap_or(0.0);
        }
    }
    Ok((good_sum, bad_sum))
}

/// Fraction of segments whose genuine covering-node scores strictly beat
/// those of one randomly corrupted copy.
pub fn ranking_accuracy<R: Rng + ?Sized>(
    model: &Model,
    segments: &[Segment],
    vocab: &Vocab,
    cap: Option<usize>,
    strategy: Strategy,
    rng: &mut R,
) -> Result<f64> {
    if segments.is_empty() {
        return Ok(0.0);
    }
    let mut wins = 0usize;
    for seg in segments {
        let tree = strategy.parse(model, &seg.ids)?.tree;
        let pair = corrupt(seg, vocab, cap, rng)?;
        let (good, bad) = covering_scores(model, &tree, &pair.corrupted.ids, pair.position)?;
        if good > bad {
            wins += 1;
        }
    }
    Ok(wins as f64 / segments.len() as f64)
}

/// Mean over segments of the per-node reconstruction error of their trees.
pub fn mean_reconstruction_error(model: &Model, segments: &[Segment], strategy: Strategy) -> Result<f64> {
    if segments.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for seg in segments {
        let tree = strategy.parse(model, &seg.ids)?.tree;
        total += reconstruction_error(model, &tree);
    }
    Ok(total / segments.len() as f64)
}

/// Mean over internal nodes of `|dissociate(node) - [left; right]|^2`,
/// computed without recording gradients.
pub fn reconstruction_error(model: &Model, tree: &ParseTree) -> f64 {
    let d = model.dim();
    let mut out = vec![0.0; 2 * d];
    let mut total = 0.0;
    let mut count = 0;
    for node in tree.internal_nodes() {
        let (l, r) = node.children().expect("internal");
        model.dissoc_into(&node.repr, &mut out);
        let target = tree.node(l).repr.iter().chain(tree.node(r).repr.iter());
        total += out.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        count += 1;
    }
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}
