use std::rc::Rc;

use super::tree::{Bracketing, ParseTree};
use super::{check_words, ParseResult, SpanCost};
use crate::error::{Error, Result};
use crate::model::Model;

/// Longest segment accepted by the exhaustive search (4862 trees).
pub const EXHAUSTIVE_MAX_LEN: usize = 10;

enum Shape {
    Leaf(usize),
    Node(Rc<Shape>, Rc<Shape>),
}

fn shapes(i: usize, j: usize) -> Vec<Rc<Shape>> {
    if j - i == 1 {
        return vec![Rc::new(Shape::Leaf(i))];
    }
    let mut out = Vec::new();
    // Largest split point first: left-heavy trees come first.
    for k in (i + 1..j).rev() {
        let lefts = shapes(i, k);
        let rights = shapes(k, j);
        for l in &lefts {
            for r in &rights {
                out.push(Rc::new(Shape::Node(l.clone(), r.clone())));
            }
        }
    }
    out
}

fn post_order(shape: &Shape, n: usize, merges: &mut Vec<(usize, usize)>) -> usize {
    match shape {
        Shape::Leaf(p) => *p,
        Shape::Node(l, r) => {
            let a = post_order(l, n, merges);
            let b = post_order(r, n, merges);
            merges.push((a, b));
            n + merges.len() - 1
        }
    }
}

/// Every binary bracketing of `n` contiguous leaves, left-branching first.
pub fn enumerate_bracketings(n: usize) -> Result<Vec<Bracketing>> {
    if n == 0 {
        return Err(Error::Parameter("cannot enumerate trees over zero leaves".into()));
    }
    if n > EXHAUSTIVE_MAX_LEN {
        return Err(Error::Size(format!(
            "exhaustive search supports at most {EXHAUSTIVE_MAX_LEN} words, got {n}; use beam search"
        )));
    }
    Ok(shapes(0, n)
        .iter()
        .map(|s| {
            let mut merges = Vec::with_capacity(n - 1);
            post_order(s, n, &mut merges);
            Bracketing::new(n, merges).expect("enumerated trees are valid")
        })
        .collect())
}

/// Best-scoring bracketing together with the number of trees scored.
/// Score ties keep the earliest tree in enumeration order.
pub fn exhaustive_search(model: &Model, words: &[usize]) -> Result<(ParseResult, usize)> {
    search_impl(model, words, None)
}

pub(crate) fn search_impl(
    model: &Model,
    words: &[usize],
    cost: Option<&SpanCost>,
) -> Result<(ParseResult, usize)> {
    check_words(model, words)?;
    let all = enumerate_bracketings(words.len())?;
    let count = all.len();
    let mut best: Option<ParseTree> = None;
    let mut best_score = f64::NEG_INFINITY;
    for shape in &all {
        let tree = ParseTree::build(model, words, shape)?;
        let mut score = tree.total_score();
        if let Some(c) = cost {
            score += tree.internal_nodes().map(|node| c.of(&node.span)).sum::<f64>();
        }
        if best.is_none() || score > best_score {
            best_score = score;
            best = Some(tree);
        }
    }
    let tree = best.expect("at least one tree");
    Ok((ParseResult::from_tree(tree, None), count))
}

pub fn exhaustive_parse(model: &Model, words: &[usize]) -> Result<ParseResult> {
    exhaustive_search(model, words).map(|(r, _)| r)
}
