//! Short-term memory: the working set of the parser template.
//!
//! Two actions exist: insert a representation, or replace two stored
//! representations by their association. Strategies differ only in how they
//! choose among those actions.

use serde::{Deserialize, Serialize};

use super::tree::Span;
use crate::error::{Error, Result};
use crate::model::{Model, Repr};

/// Which pairs of items may be associated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Adjacency {
    /// Only items whose spans touch, left item first.
    #[default]
    AdjacentOnly,
    /// Any two items; arguments are ordered by span start.
    AnyPair,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StmItem {
    pub repr: Repr,
    pub span: Span,
    /// Caller-assigned identifier, typically a node id in a tree under
    /// construction.
    pub tag: usize,
}

/// Result of associating two items.
#[derive(Clone, Debug, PartialEq)]
pub struct Reduction {
    pub left_tag: usize,
    pub right_tag: usize,
    pub repr: Repr,
    pub span: Span,
    pub saliency: f64,
}

#[derive(Clone, Debug)]
pub struct Stm {
    items: Vec<StmItem>,
    policy: Adjacency,
    capacity: Option<usize>,
}

impl Stm {
    pub fn new(policy: Adjacency) -> Self {
        Stm {
            items: Vec::new(),
            policy,
            capacity: None,
        }
    }

    /// Bound the number of simultaneously held items.
    pub fn with_capacity_limit(mut self, capacity: usize) -> Self {
        self.capacity = Some(capacity);
        self
    }

    pub fn policy(&self) -> Adjacency {
        self.policy
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Items in order of span start.
    pub fn items(&self) -> &[StmItem] {
        &self.items
    }

    pub fn insert(&mut self, repr: Repr, span: Span, tag: usize) -> Result<()> {
        if let Some(cap) = self.capacity {
            if self.items.len() >= cap {
                return Err(Error::Capacity(cap));
            }
        }
        if let Some(other) = self.items.iter().find(|it| it.span.overlaps(&span)) {
            return Err(Error::Span(format!(
                "inserted span {span} overlaps stored span {}",
                other.span
            )));
        }
        let at = self
            .items
            .partition_point(|it| it.span.start() < span.start());
        self.items.insert(at, StmItem { repr, span, tag });
        Ok(())
    }

    /// Checks that items `i` and `j` may be associated and returns them as
    /// (left, right) indices.
    pub fn check_pair(&self, i: usize, j: usize) -> Result<(usize, usize)> {
        let len = self.items.len();
        if len < 2 {
            return Err(Error::Parameter(format!(
                "reduce needs at least two items, memory holds {len}"
            )));
        }
        if i >= len || j >= len || i == j {
            return Err(Error::Parameter(format!(
                "invalid item pair ({i}, {j}) for memory of size {len}"
            )));
        }
        match self.policy {
            Adjacency::AdjacentOnly => {
                if self.items[i].span.end() != self.items[j].span.start()
                    || !self.items[i].span.is_contiguous()
                    || !self.items[j].span.is_contiguous()
                {
                    return Err(Error::Policy(format!(
                        "spans {} and {} are not adjacent in left-to-right order",
                        self.items[i].span, self.items[j].span
                    )));
                }
                Ok((i, j))
            }
            Adjacency::AnyPair => {
                if self.items[i].span.start() < self.items[j].span.start() {
                    Ok((i, j))
                } else {
                    Ok((j, i))
                }
            }
        }
    }

    /// Association of items `i` and `j` without modifying the memory.
    pub fn preview(&self, i: usize, j: usize, model: &Model) -> Result<(Repr, f64)> {
        let (l, r) = self.check_pair(i, j)?;
        let mut out = vec![0.0; model.dim()];
        model.assoc_into(&self.items[l].repr, &self.items[r].repr, &mut out);
        let s = model.score(&out);
        Ok((Repr::new(out), s))
    }

    /// Replace items `i` and `j` by their association, tagged `new_tag`.
    pub fn reduce(&mut self, i: usize, j: usize, model: &Model, new_tag: usize) -> Result<Reduction> {
        let (l, r) = self.check_pair(i, j)?;
        let span = self.items[l].span.union(&self.items[r].span)?;
        let (repr, saliency) = self.preview(l, r, model)?;
        let reduction = Reduction {
            left_tag: self.items[l].tag,
            right_tag: self.items[r].tag,
            repr: repr.clone(),
            span: span.clone(),
            saliency,
        };
        let (hi, lo) = if l > r { (l, r) } else { (r, l) };
        self.items.remove(hi);
        self.items.remove(lo);
        // Capacity cannot be exceeded: two items were just removed.
        let at = self
            .items
            .partition_point(|it| it.span.start() < span.start());
        self.items.insert(
            at,
            StmItem {
                repr,
                span,
                tag: new_tag,
            },
        );
        Ok(reduction)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(x: f64) -> Repr {
        Repr::new(vec![x, -x])
    }

    #[test]
    fn insert_keeps_order() {
        let mut stm = Stm::new(Adjacency::AdjacentOnly);
        stm.insert(r(0.1), Span::unit(1), 1).unwrap();
        assert_eq!(stm.len(), 1);
        stm.insert(r(0.2), Span::unit(0), 0).unwrap();
        let starts: Vec<usize> = stm.items().iter().map(|it| it.span.start()).collect();
        assert_eq!(starts, [0, 1]);
    }

    #[test]
    fn insert_overlap_and_capacity() {
        let mut stm = Stm::new(Adjacency::AdjacentOnly);
        stm.insert(r(0.0), Span::interval(1, 3), 0).unwrap();
        assert!(matches!(
            stm.insert(r(0.0), Span::interval(0, 2), 1),
            Err(Error::Span(_))
        ));
        let mut small = Stm::new(Adjacency::AdjacentOnly).with_capacity_limit(1);
        small.insert(r(0.0), Span::unit(0), 0).unwrap();
        assert!(matches!(
            small.insert(r(0.0), Span::unit(1), 1),
            Err(Error::Capacity(1))
        ));
    }

    #[test]
    fn reduce_adjacent() {
        let m = Model::zeros(2, 1);
        let mut stm = Stm::new(Adjacency::AdjacentOnly);
        stm.insert(r(0.1), Span::unit(0), 0).unwrap();
        stm.insert(r(0.2), Span::unit(1), 1).unwrap();
        let red = stm.reduce(0, 1, &m, 2).unwrap();
        assert_eq!(stm.len(), 1);
        assert_eq!(stm.items()[0].span, Span::interval(0, 2));
        assert_eq!((red.left_tag, red.right_tag), (0, 1));
        assert_eq!(red.saliency, 0.0);
    }

    #[test]
    fn reduce_errors() {
        let m = Model::zeros(2, 1);
        let mut stm = Stm::new(Adjacency::AdjacentOnly);
        stm.insert(r(0.1), Span::unit(0), 0).unwrap();
        assert!(matches!(stm.reduce(0, 1, &m, 9), Err(Error::Parameter(_))));
        stm.insert(r(0.1), Span::unit(2), 2).unwrap();
        assert!(matches!(stm.reduce(0, 1, &m, 9), Err(Error::Policy(_))));
        stm.insert(r(0.1), Span::unit(1), 1).unwrap();
        // right-to-left order is a policy violation
        assert!(matches!(stm.reduce(1, 0, &m, 9), Err(Error::Policy(_))));
        assert!(matches!(stm.reduce(0, 0, &m, 9), Err(Error::Parameter(_))));
    }

    #[test]
    fn any_pair_records_split_span() {
        let m = Model::zeros(2, 1);
        let mut stm = Stm::new(Adjacency::AnyPair);
        stm.insert(r(0.1), Span::unit(0), 0).unwrap();
        stm.insert(r(0.2), Span::unit(1), 1).unwrap();
        stm.insert(r(0.3), Span::unit(2), 2).unwrap();
        // arguments given right-to-left are reordered by span start
        let red = stm.reduce(2, 0, &m, 3).unwrap();
        assert_eq!((red.left_tag, red.right_tag), (0, 2));
        assert_eq!(red.span.intervals(), &[(0, 1), (2, 3)]);
        let spans: Vec<String> = stm.items().iter().map(|it| it.span.to_string()).collect();
        assert_eq!(spans, ["[0,1)+[2,3)", "[1,2)"]);
        // the remaining two can still be joined, filling the gap
        let red = stm.reduce(0, 1, &m, 4).unwrap();
        assert_eq!(red.span, Span::interval(0, 3));
    }
}
