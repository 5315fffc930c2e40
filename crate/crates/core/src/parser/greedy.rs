use super::stm::{Adjacency, Stm};
use super::tree::{NodeKind, ParseTree, Span, TreeNode};
use super::{check_words, ParseResult, SpanCost};
use crate::error::Result;
use crate::model::Model;

/// Insert all words, then repeatedly associate the candidate pair whose
/// association has the highest saliency.
///
/// Ties go to the candidate whose merged span starts leftmost, then to the
/// shorter merged span.
pub fn greedy_parse(model: &Model, words: &[usize], policy: Adjacency) -> Result<ParseResult> {
    greedy_impl(model, words, Stm::new(policy), None)
}

/// [`greedy_parse`] with a bounded memory. Fails with a capacity error when
/// the segment has more words than the memory can hold.
pub fn greedy_parse_with_capacity(
    model: &Model,
    words: &[usize],
    policy: Adjacency,
    capacity: usize,
) -> Result<ParseResult> {
    greedy_impl(model, words, Stm::new(policy).with_capacity_limit(capacity), None)
}

pub(crate) fn greedy_impl(
    model: &Model,
    words: &[usize],
    mut stm: Stm,
    cost: Option<&SpanCost>,
) -> Result<ParseResult> {
    check_words(model, words)?;
    let n = words.len();
    let mut nodes = Vec::with_capacity(2 * n - 1);
    for (pos, &word) in words.iter().enumerate() {
        let repr = model.embed(word)?;
        stm.insert(repr.clone(), Span::unit(pos), pos)?;
        nodes.push(TreeNode {
            span: Span::unit(pos),
            repr,
            kind: NodeKind::Leaf { word },
        });
    }

    let mut buf = vec![0.0; model.dim()];
    while stm.len() > 1 {
        let items = stm.items();
        let mut candidates: Vec<(usize, usize)> = match stm.policy() {
            Adjacency::AdjacentOnly => (0..items.len() - 1).map(|k| (k, k + 1)).collect(),
            Adjacency::AnyPair => (0..items.len())
                .flat_map(|i| (i + 1..items.len()).map(move |j| (i, j)))
                .collect(),
        };
        // Items are sorted by span start, so i < j means item i is leftmost.
        candidates.sort_by_key(|&(i, j)| (items[i].span.start(), items[i].span.width() + items[j].span.width(), j));

        let mut best: Option<((usize, usize), f64)> = None;
        for &(i, j) in &candidates {
            model.assoc_into(&items[i].repr, &items[j].repr, &mut buf);
            let mut s = model.score(&buf);
            if let Some(c) = cost {
                s += c.of(&items[i].span.union(&items[j].span)?);
            }
            if best.map_or(true, |(_, b)| s > b) {
                best = Some(((i, j), s));
            }
        }
        let ((i, j), _) = best.expect("at least one candidate");
        let tag = nodes.len();
        let red = stm.reduce(i, j, model, tag)?;
        nodes.push(TreeNode {
            span: red.span,
            repr: red.repr,
            kind: NodeKind::Internal {
                left: red.left_tag,
                right: red.right_tag,
                saliency: red.saliency,
            },
        });
    }
    Ok(ParseResult::from_tree(ParseTree::from_nodes(nodes, n), None))
}
