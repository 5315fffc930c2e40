//! Single-example losses and their gradients.
//!
//! Discrete structure (which bracketing is used) is fixed before each loss is
//! evaluated; gradients flow through representations and scores only.

use rand::Rng;

use crate::corpus::{Segment, Vocab, NUM_SPECIALS};
use crate::error::{Error, Result};
use crate::model::{backward, GradientSet, Model, Tape, Var};
use crate::parser::{Bracketing, ParseTree, SpanCost, Strategy};

/// A genuine segment and a copy with exactly one word replaced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorruptedPair {
    pub genuine: Segment,
    pub corrupted: Segment,
    pub position: usize,
    pub replacement: usize,
}

/// Replace one uniformly chosen word by a uniformly chosen different word.
///
/// Replacements are drawn from the non-special words, limited to the first
/// `cap` of them when a curriculum cap applies.
pub fn corrupt<R: Rng + ?Sized>(
    segment: &Segment,
    vocab: &Vocab,
    cap: Option<usize>,
    rng: &mut R,
) -> Result<CorruptedPair> {
    if segment.is_empty() {
        return Err(Error::Parameter("cannot corrupt an empty segment".into()));
    }
    let words = cap.map_or(vocab.num_words(), |c| c.min(vocab.num_words()));
    if words < 2 {
        return Err(Error::Config(format!(
            "corruption needs at least 2 usable words, vocabulary offers {words}"
        )));
    }
    let position = rng.gen_range(0..segment.len());
    let original = segment.ids[position];
    let replacement = loop {
        let id = NUM_SPECIALS + rng.gen_range(0..words);
        if id != original {
            break id;
        }
    };
    let mut corrupted = segment.clone();
    corrupted.ids[position] = replacement;
    Ok(CorruptedPair {
        genuine: segment.clone(),
        corrupted,
        position,
        replacement,
    })
}

/// Records the tree for `words` under `shape` and returns the variable of
/// every node (leaves first) plus the saliency variable of every internal
/// node, in merge order.
pub(crate) fn record_tree(
    tape: &mut Tape,
    model: &Model,
    words: &[usize],
    shape: &Bracketing,
) -> Result<(Vec<Var>, Vec<Var>)> {
    if words.len() != shape.n_leaves() {
        return Err(Error::Structure(format!(
            "bracketing has {} leaves, segment has {} words",
            shape.n_leaves(),
            words.len()
        )));
    }
    let mut nodes = Vec::with_capacity(2 * words.len());
    for &w in words {
        nodes.push(tape.embed(model, w)?);
    }
    let mut scores = Vec::with_capacity(shape.merges().len());
    for &(l, r) in shape.merges() {
        let v = tape.associate(model, nodes[l], nodes[r])?;
        scores.push(tape.saliency(model, v)?);
        nodes.push(v);
    }
    Ok((nodes, scores))
}

/// Loss value with its gradient.
#[derive(Clone, Debug)]
pub struct StepOutput {
    pub loss: f64,
    pub grads: GradientSet,
}

impl StepOutput {
    fn zero(model: &Model, loss: f64) -> Self {
        StepOutput {
            loss,
            grads: GradientSet::for_model(model),
        }
    }
}

/// Ranking loss for a corrupted pair under a fixed bracketing: a hinge
/// `max(0, margin - s_good + s_bad)` for every internal node whose span covers
/// the corrupted position.
pub fn ranking_loss(
    model: &Model,
    pair: &CorruptedPair,
    shape: &Bracketing,
    margin: f64,
) -> Result<StepOutput> {
    let mut tape = Tape::new(model.dim());
    let (_, good) = record_tree(&mut tape, model, &pair.genuine.ids, shape)?;
    let (_, bad) = record_tree(&mut tape, model, &pair.corrupted.ids, shape)?;
    let spans = shape.node_spans();
    let n = shape.n_leaves();
    let mut loss = 0.0;
    let mut upstream = Vec::new();
    for (k, (&g, &b)) in good.iter().zip(&bad).enumerate() {
        if !spans[n + k].contains(pair.position) {
            continue;
        }
        let h = margin - tape.value(g)[0] + tape.value(b)[0];
        if h > 0.0 {
            loss += h;
            upstream.push((g, vec![-1.0]));
            upstream.push((b, vec![1.0]));
        }
    }
    if upstream.is_empty() {
        return Ok(StepOutput::zero(model, loss));
    }
    let grads = backward(model, &tape, &upstream)?;
    Ok(StepOutput { loss, grads })
}

/// Unsupervised step output: the loss, its gradient, and the objects it was
/// computed from.
#[derive(Clone, Debug)]
pub struct UnsupStep {
    pub loss: f64,
    pub grads: GradientSet,
    pub pair: CorruptedPair,
    pub tree: ParseTree,
}

/// Bracket the genuine segment with `strategy`, corrupt one word, and score
/// the corrupted copy under the same bracketing.
pub fn unsup_step<R: Rng + ?Sized>(
    model: &Model,
    segment: &Segment,
    vocab: &Vocab,
    cap: Option<usize>,
    strategy: Strategy,
    margin: f64,
    rng: &mut R,
) -> Result<UnsupStep> {
    let tree = strategy.parse(model, &segment.ids)?.tree;
    let pair = corrupt(segment, vocab, cap, rng)?;
    let out = ranking_loss(model, &pair, &tree.bracketing(), margin)?;
    Ok(UnsupStep {
        loss: out.loss,
        grads: out.grads,
        pair,
        tree,
    })
}

/// Auto-encoder loss over a tree: `weight` times the mean, over internal
/// nodes, of `|dissociate(node) - [left; right]|^2`.
pub fn recon_step(model: &Model, tree: &ParseTree, weight: f64) -> Result<StepOutput> {
    recon_loss(model, &tree.words(), &tree.bracketing(), weight)
}

/// [`recon_step`] for an explicit word sequence and bracketing.
pub fn recon_loss(
    model: &Model,
    words: &[usize],
    shape: &Bracketing,
    weight: f64,
) -> Result<StepOutput> {
    if weight == 0.0 || shape.merges().is_empty() {
        return Ok(StepOutput::zero(model, 0.0));
    }
    let d = model.dim();
    let mut tape = Tape::new(d);
    let (nodes, _) = record_tree(&mut tape, model, words, shape)?;
    let n = shape.n_leaves();
    let scale = weight / shape.merges().len() as f64;
    let mut loss = 0.0;
    let mut upstream = Vec::with_capacity(3 * shape.merges().len());
    for (k, &(l, r)) in shape.merges().iter().enumerate() {
        let out = tape.dissociate(model, nodes[n + k])?;
        let rec = tape.value(out);
        let (lv, rv) = (tape.value(nodes[l]), tape.value(nodes[r]));
        let diff: Vec<f64> = rec[..d]
            .iter()
            .zip(lv)
            .chain(rec[d..].iter().zip(rv))
            .map(|(a, b)| a - b)
            .collect();
        loss += scale * diff.iter().map(|x| x * x).sum::<f64>();
        let g: Vec<f64> = diff.iter().map(|x| 2.0 * scale * x).collect();
        upstream.push((nodes[l], g[..d].iter().map(|x| -x).collect()));
        upstream.push((nodes[r], g[d..].iter().map(|x| -x).collect()));
        upstream.push((out, g));
    }
    let grads = backward(model, &tape, &upstream)?;
    Ok(StepOutput { loss, grads })
}

/// Structured hinge against a gold bracketing:
/// `max(0, margin + score(predicted) - score(gold))`, where the prediction
/// comes from `strategy`. When the prediction is the gold tree the loss is the
/// margin and the gradients cancel exactly, so none are returned.
///
/// With `cost_augmented`, the search behind the prediction adds `margin` to
/// every merge outside the gold tree, so gold is only predicted once each of
/// its merges wins by the margin.
pub fn sup_step(
    model: &Model,
    words: &[usize],
    gold: &Bracketing,
    strategy: Strategy,
    margin: f64,
    cost_augmented: bool,
) -> Result<StepOutput> {
    if gold.n_leaves() != words.len() {
        return Err(Error::Structure(format!(
            "gold tree has {} leaves, sentence has {} words",
            gold.n_leaves(),
            words.len()
        )));
    }
    let predicted = if cost_augmented {
        strategy.parse_with_cost(model, words, &SpanCost::new(gold, margin))?
    } else {
        strategy.parse(model, words)?
    };
    let predicted = predicted.tree.bracketing();
    structured_hinge(model, words, gold, &predicted, margin)
}

/// The structured hinge for an explicit predicted bracketing.
pub fn structured_hinge(
    model: &Model,
    words: &[usize],
    gold: &Bracketing,
    predicted: &Bracketing,
    margin: f64,
) -> Result<StepOutput> {
    if predicted.same_tree(gold) {
        return Ok(StepOutput::zero(model, margin));
    }
    let mut tape = Tape::new(model.dim());
    let (_, pred_scores) = record_tree(&mut tape, model, words, predicted)?;
    let (_, gold_scores) = record_tree(&mut tape, model, words, gold)?;
    let total = |vars: &[Var]| vars.iter().map(|&v| tape.value(v)[0]).sum::<f64>();
    let loss = margin + total(&pred_scores) - total(&gold_scores);
    if loss <= 0.0 {
        return Ok(StepOutput::zero(model, 0.0));
    }
    let upstream: Vec<(Var, Vec<f64>)> = pred_scores
        .iter()
        .map(|&v| (v, vec![1.0]))
        .chain(gold_scores.iter().map(|&v| (v, vec![-1.0])))
        .collect();
    let grads = backward(model, &tape, &upstream)?;
    Ok(StepOutput { loss, grads })
}

/// Plain gradient descent: `p <- p - rate * g` for every carried parameter.
pub fn sgd_apply(model: &mut Model, grads: &GradientSet, rate: f64) -> Result<()> {
    model.apply_update(grads, -rate)
}

/// Uniformly random bracketing built by merging random adjacent pairs.
pub fn random_bracketing<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Bracketing {
    let mut items: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    while items.len() > 1 {
        let k = rng.gen_range(0..items.len() - 1);
        merges.push((items[k], items[k + 1]));
        items[k] = n + merges.len() - 1;
        items.remove(k + 1);
    }
    Bracketing::new(n.max(1), merges).expect("valid by construction")
}
