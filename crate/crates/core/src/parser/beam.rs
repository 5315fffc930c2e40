use std::cmp::Ordering;

use super::tree::{NodeKind, ParseTree, Span, TreeNode};
use super::{check_words, Action, ParseResult, SpanCost};
use crate::error::{Error, Result};
use crate::model::Model;

#[derive(Clone)]
struct State {
    nodes: Vec<TreeNode>,
    stack: Vec<usize>,
    cursor: usize,
    score: f64,
    actions: Vec<Action>,
}

/// Shift-reduce parsing with a stack-organized memory and beam search.
///
/// After every action the `width` best states are kept, ranked by partial
/// score; equal scores are ordered by action sequence with shift before
/// reduce. All states in the beam have taken the same number of actions.
pub fn shift_reduce_beam(model: &Model, words: &[usize], width: usize) -> Result<ParseResult> {
    beam_impl(model, words, width, None)
}

pub(crate) fn beam_impl(
    model: &Model,
    words: &[usize],
    width: usize,
    cost: Option<&SpanCost>,
) -> Result<ParseResult> {
    if width == 0 {
        return Err(Error::Parameter("beam width must be at least 1".into()));
    }
    check_words(model, words)?;
    let n = words.len();
    let leaves: Vec<TreeNode> = words
        .iter()
        .enumerate()
        .map(|(pos, &word)| {
            Ok(TreeNode {
                span: Span::unit(pos),
                repr: model.embed(word)?,
                kind: NodeKind::Leaf { word },
            })
        })
        .collect::<Result<_>>()?;

    let mut beam = vec![State {
        nodes: leaves,
        stack: Vec::new(),
        cursor: 0,
        score: 0.0,
        actions: Vec::new(),
    }];
    let mut buf = vec![0.0; model.dim()];

    for _ in 0..2 * n - 1 {
        let mut next = Vec::with_capacity(beam.len() * 2);
        for state in &beam {
            if state.cursor < n {
                let mut s = state.clone();
                s.stack.push(s.cursor);
                s.cursor += 1;
                s.actions.push(Action::Shift);
                next.push(s);
            }
            if state.stack.len() >= 2 {
                let l = state.stack[state.stack.len() - 2];
                let r = state.stack[state.stack.len() - 1];
                model.assoc_into(&state.nodes[l].repr, &state.nodes[r].repr, &mut buf);
                let saliency = model.score(&buf);
                let span = state.nodes[l].span.union(&state.nodes[r].span)?;
                let extra = cost.map_or(0.0, |c| c.of(&span));
                let mut s = state.clone();
                s.stack.truncate(s.stack.len() - 2);
                s.nodes.push(TreeNode {
                    span,
                    repr: buf.clone().into(),
                    kind: NodeKind::Internal {
                        left: l,
                        right: r,
                        saliency,
                    },
                });
                s.stack.push(s.nodes.len() - 1);
                s.score += saliency + extra;
                s.actions.push(Action::Reduce);
                next.push(s);
            }
        }
        next.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.actions.cmp(&b.actions))
        });
        next.truncate(width);
        beam = next;
    }

    let best = beam
        .into_iter()
        .find(|s| s.cursor == n && s.stack.len() == 1)
        .expect("2n-1 actions always complete a parse");
    let tree = ParseTree::from_nodes(best.nodes, n);
    Ok(ParseResult::from_tree(tree, Some(best.actions)))
}
