//! Bracketing strategies built on the short-term memory template.
//!
//! - [`greedy_parse`]: insert every word, then repeatedly associate the pair
//!   whose association scores highest.
//! - [`shift_reduce_beam`]: stack-organized memory explored with a beam.
//! - [`exhaustive_parse`]: score every binary bracketing of a short segment.
//!
//! All strategies are pure functions of the segment, the model and their own
//! parameters, and share one tree representation ([`ParseTree`]).

mod beam;
mod exhaustive;
mod greedy;
mod stm;
mod tree;
mod unfold;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Model;

pub use beam::shift_reduce_beam;
pub use exhaustive::{enumerate_bracketings, exhaustive_parse, exhaustive_search, EXHAUSTIVE_MAX_LEN};
pub use greedy::{greedy_parse, greedy_parse_with_capacity};
pub use stm::{Adjacency, Reduction, Stm, StmItem};
pub use tree::{parse_bracketed, tree_to_json, Bracketing, NodeKind, ParseTree, Span, TreeNode};
pub use unfold::{unfold, UnfoldNode};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Shift,
    Reduce,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParseResult {
    pub tree: ParseTree,
    pub total_score: f64,
    /// Shift/reduce sequence, for strategies that produce one.
    pub actions: Option<Vec<Action>>,
}

impl ParseResult {
    pub(crate) fn from_tree(tree: ParseTree, actions: Option<Vec<Action>>) -> Self {
        let total_score = tree.total_score();
        ParseResult {
            tree,
            total_score,
            actions,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Greedy(Adjacency),
    Beam(usize),
    Exhaustive,
}

impl Default for Strategy {
    fn default() -> Self {
        Strategy::Greedy(Adjacency::AdjacentOnly)
    }
}

impl Strategy {
    pub fn parse(&self, model: &Model, words: &[usize]) -> Result<ParseResult> {
        match *self {
            Strategy::Greedy(policy) => greedy_parse(model, words, policy),
            Strategy::Beam(width) => shift_reduce_beam(model, words, width),
            Strategy::Exhaustive => exhaustive_parse(model, words),
        }
    }

    /// Search as [`Strategy::parse`] does, but with `cost.cost` added to the
    /// saliency of every merge whose span is not in the reference tree. The
    /// returned scores are the plain saliencies.
    pub fn parse_with_cost(&self, model: &Model, words: &[usize], cost: &SpanCost) -> Result<ParseResult> {
        match *self {
            Strategy::Greedy(policy) => greedy::greedy_impl(model, words, Stm::new(policy), Some(cost)),
            Strategy::Beam(width) => beam::beam_impl(model, words, width, Some(cost)),
            Strategy::Exhaustive => exhaustive::search_impl(model, words, Some(cost)).map(|(r, _)| r),
        }
    }
}

/// Search-time penalty for spans outside a reference bracketing.
#[derive(Clone, Debug, PartialEq)]
pub struct SpanCost {
    reference: BTreeSet<Span>,
    pub cost: f64,
}

impl SpanCost {
    pub fn new(reference: &Bracketing, cost: f64) -> Self {
        SpanCost {
            reference: reference.span_set(),
            cost,
        }
    }

    pub fn of(&self, span: &Span) -> f64 {
        if self.reference.contains(span) {
            0.0
        } else {
            self.cost
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;

    /// Accepts `greedy`, `greedy:any`, `beam:K` and `exhaustive`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" | "greedy:adjacent" => Ok(Strategy::Greedy(Adjacency::AdjacentOnly)),
            "greedy:any" => Ok(Strategy::Greedy(Adjacency::AnyPair)),
            "exhaustive" => Ok(Strategy::Exhaustive),
            _ => {
                let width = s
                    .strip_prefix("beam:")
                    .and_then(|w| w.parse::<usize>().ok())
                    .ok_or_else(|| Error::Config(format!("unknown parse strategy {s:?}")))?;
                Ok(Strategy::Beam(width))
            }
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Greedy(Adjacency::AdjacentOnly) => f.write_str("greedy"),
            Strategy::Greedy(Adjacency::AnyPair) => f.write_str("greedy:any"),
            Strategy::Beam(w) => write!(f, "beam:{w}"),
            Strategy::Exhaustive => f.write_str("exhaustive"),
        }
    }
}

pub(crate) fn check_words(model: &Model, words: &[usize]) -> Result<()> {
    if words.is_empty() {
        return Err(Error::Parameter("cannot parse an empty segment".into()));
    }
    if let Some(&id) = words.iter().find(|&&id| id >= model.vocab_size()) {
        return Err(Error::Index {
            id,
            size: model.vocab_size(),
        });
    }
    Ok(())
}

/// Catalan number `C(k)`: the count of binary trees with `k + 1` leaves.
pub fn catalan(k: usize) -> u64 {
    let mut c: u64 = 1;
    for i in 0..k as u64 {
        c = c * 2 * (2 * i + 1) / (i + 2);
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalan_values() {
        let got: Vec<u64> = (0..10).map(catalan).collect();
        assert_eq!(got, [1, 1, 2, 5, 14, 42, 132, 429, 1430, 4862]);
    }

    #[test]
    fn strategy_strings() {
        for s in ["greedy", "greedy:any", "beam:42", "exhaustive"] {
            assert_eq!(s.parse::<Strategy>().unwrap().to_string(), s);
        }
        assert!("beam:x".parse::<Strategy>().is_err());
        assert!("chart".parse::<Strategy>().is_err());
    }
}
