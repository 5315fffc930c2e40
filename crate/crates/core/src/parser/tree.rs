use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Model, Repr};

/// Set of word positions covered by a node, stored as sorted, disjoint,
/// non-touching half-open intervals. Contiguous spans have one interval.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span(Vec<(usize, usize)>);

impl Span {
    pub fn unit(pos: usize) -> Self {
        Span(vec![(pos, pos + 1)])
    }

    pub fn interval(start: usize, end: usize) -> Self {
        assert!(start < end, "empty span");
        Span(vec![(start, end)])
    }

    pub fn intervals(&self) -> &[(usize, usize)] {
        &self.0
    }

    pub fn start(&self) -> usize {
        self.0[0].0
    }

    pub fn end(&self) -> usize {
        self.0[self.0.len() - 1].1
    }

    /// Number of covered positions.
    pub fn width(&self) -> usize {
        self.0.iter().map(|(s, e)| e - s).sum()
    }

    pub fn is_contiguous(&self) -> bool {
        self.0.len() == 1
    }

    pub fn contains(&self, pos: usize) -> bool {
        self.0.iter().any(|&(s, e)| s <= pos && pos < e)
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.0
            .iter()
            .any(|&(s, e)| other.0.iter().any(|&(s2, e2)| s < e2 && s2 < e))
    }

    pub fn is_subset_of(&self, other: &Span) -> bool {
        self.0
            .iter()
            .all(|&(s, e)| other.0.iter().any(|&(s2, e2)| s2 <= s && e <= e2))
    }

    /// Union of two disjoint spans.
    pub fn union(&self, other: &Span) -> Result<Span> {
        if self.overlaps(other) {
            return Err(Error::Span(format!("{self} overlaps {other}")));
        }
        let mut all: Vec<(usize, usize)> = self.0.iter().chain(&other.0).copied().collect();
        all.sort_unstable();
        let mut merged: Vec<(usize, usize)> = Vec::with_capacity(all.len());
        for (s, e) in all {
            match merged.last_mut() {
                Some(last) if last.1 == s => last.1 = e,
                _ => merged.push((s, e)),
            }
        }
        Ok(Span(merged))
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (s, e)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            write!(f, "[{s},{e})")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum NodeKind {
    Leaf { word: usize },
    Internal { left: usize, right: usize, saliency: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeNode {
    pub span: Span,
    pub repr: Repr,
    pub kind: NodeKind,
}

impl TreeNode {
    pub fn saliency(&self) -> Option<f64> {
        match self.kind {
            NodeKind::Internal { saliency, .. } => Some(saliency),
            NodeKind::Leaf { .. } => None,
        }
    }

    pub fn children(&self) -> Option<(usize, usize)> {
        match self.kind {
            NodeKind::Internal { left, right, .. } => Some((left, right)),
            NodeKind::Leaf { .. } => None,
        }
    }
}

/// Shape of a binary tree over `n` leaves, independent of any model.
///
/// Node ids `0..n` are the leaves in position order; the `k`-th merge creates
/// node `n + k` from two earlier, not yet merged, nodes.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Bracketing {
    n: usize,
    merges: Vec<(usize, usize)>,
}

impl Bracketing {
    pub fn new(n: usize, merges: Vec<(usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Structure("bracketing needs at least one leaf".into()));
        }
        if merges.len() != n - 1 {
            return Err(Error::Structure(format!(
                "{} leaves need {} merges, got {}",
                n,
                n - 1,
                merges.len()
            )));
        }
        let mut used = vec![false; 2 * n - 1];
        for (k, &(l, r)) in merges.iter().enumerate() {
            let available = n + k;
            if l >= available || r >= available || l == r || used[l] || used[r] {
                return Err(Error::Structure(format!("invalid merge ({l}, {r}) at step {k}")));
            }
            used[l] = true;
            used[r] = true;
        }
        Ok(Bracketing { n, merges })
    }

    pub fn n_leaves(&self) -> usize {
        self.n
    }

    pub fn merges(&self) -> &[(usize, usize)] {
        &self.merges
    }

    pub fn root(&self) -> usize {
        2 * self.n - 2
    }

    /// Fully left-branching tree `(((w0 w1) w2) ...)`.
    pub fn left_branching(n: usize) -> Self {
        let mut merges = Vec::with_capacity(n.saturating_sub(1));
        let mut acc = 0;
        for k in 1..n {
            merges.push((acc, k));
            acc = n + k - 1;
        }
        Bracketing { n, merges }
    }

    /// Fully right-branching tree `(w0 (w1 (w2 ...)))`.
    pub fn right_branching(n: usize) -> Self {
        let mut merges = Vec::with_capacity(n.saturating_sub(1));
        if n > 1 {
            let mut acc = n - 1;
            for k in (0..n - 1).rev() {
                merges.push((k, acc));
                acc = n + merges.len() - 1;
            }
        }
        Bracketing { n, merges }
    }

    /// Span of every node, indexed by node id.
    pub fn node_spans(&self) -> Vec<Span> {
        let mut spans: Vec<Span> = (0..self.n).map(Span::unit).collect();
        for &(l, r) in &self.merges {
            let s = spans[l].union(&spans[r]).expect("valid bracketing");
            spans.push(s);
        }
        spans
    }

    /// Spans of internal nodes, as a set. Two bracketings describe the same
    /// tree exactly when these sets are equal.
    pub fn span_set(&self) -> BTreeSet<Span> {
        let spans = self.node_spans();
        spans.into_iter().skip(self.n).collect()
    }

    pub fn same_tree(&self, other: &Bracketing) -> bool {
        self.n == other.n && self.span_set() == other.span_set()
    }

    /// Nested-parenthesis rendering with the given leaf labels.
    pub fn render<S: AsRef<str>>(&self, leaves: &[S]) -> String {
        let mut rendered: Vec<String> = leaves
            .iter()
            .map(|t| escape_token(t.as_ref()))
            .collect();
        for &(l, r) in &self.merges {
            let s = format!("({} {})", rendered[l], rendered[r]);
            rendered.push(s);
        }
        rendered.pop().unwrap_or_default()
    }
}

fn escape_token(t: &str) -> String {
    match t {
        "(" => "-LRB-".to_string(),
        ")" => "-RRB-".to_string(),
        _ => t.to_string(),
    }
}

fn unescape_token(t: &str) -> String {
    match t {
        "-LRB-" => "(".to_string(),
        "-RRB-" => ")".to_string(),
        _ => t.to_string(),
    }
}

/// Parse a bracketing such as `((the cat) (sat (on (the mat))))` into its
/// tokens and shape. A bare token is a one-leaf tree.
pub fn parse_bracketed(text: &str) -> Result<(Vec<String>, Bracketing)> {
    enum Item {
        Open,
        Node(usize),
    }
    let mut tokens = Vec::new();
    let mut merges = Vec::new();
    // Node ids are assigned after all leaves are known; record leaf ids first
    // as placeholders and fix up at the end.
    let mut stack: Vec<Item> = Vec::new();
    let mut pending: Vec<(Node, Node)> = Vec::new();
    #[derive(Clone, Copy)]
    enum Node {
        Leaf(usize),
        Merge(usize),
    }
    let mut nodes: Vec<Node> = Vec::new();

    let spaced = text.replace('(', " ( ").replace(')', " ) ");
    for piece in spaced.split_whitespace() {
        match piece {
            "(" => stack.push(Item::Open),
            ")" => {
                let mut children = Vec::new();
                loop {
                    match stack.pop() {
                        Some(Item::Node(i)) => children.push(i),
                        Some(Item::Open) => break,
                        None => return Err(Error::Structure("unbalanced ')'".into())),
                    }
                }
                if children.len() != 2 {
                    return Err(Error::Structure(format!(
                        "bracket with {} children; trees must be binary",
                        children.len()
                    )));
                }
                pending.push((nodes[children[1]], nodes[children[0]]));
                nodes.push(Node::Merge(pending.len() - 1));
                stack.push(Item::Node(nodes.len() - 1));
            }
            tok => {
                tokens.push(unescape_token(tok));
                nodes.push(Node::Leaf(tokens.len() - 1));
                stack.push(Item::Node(nodes.len() - 1));
            }
        }
    }
    if stack.len() != 1 || !matches!(stack[0], Item::Node(_)) {
        return Err(Error::Structure(
            "bracketing must form exactly one tree".into(),
        ));
    }
    let n = tokens.len();
    let id = |node: Node| match node {
        Node::Leaf(i) => i,
        Node::Merge(k) => n + k,
    };
    for (l, r) in pending {
        merges.push((id(l), id(r)));
    }
    let b = Bracketing::new(n, merges)?;
    Ok((tokens, b))
}

/// Binary tree over a segment, with the representation and saliency of every
/// node under the model that built it.
#[derive(Clone, Debug, PartialEq)]
pub struct ParseTree {
    nodes: Vec<TreeNode>,
    n_leaves: usize,
}

impl ParseTree {
    /// Evaluate a bracketing bottom-up.
    pub fn build(model: &Model, words: &[usize], shape: &Bracketing) -> Result<Self> {
        if words.len() != shape.n_leaves() {
            return Err(Error::Structure(format!(
                "bracketing has {} leaves, segment has {} words",
                shape.n_leaves(),
                words.len()
            )));
        }
        let mut nodes = Vec::with_capacity(2 * words.len() - 1);
        for (pos, &word) in words.iter().enumerate() {
            nodes.push(TreeNode {
                span: Span::unit(pos),
                repr: model.embed(word)?,
                kind: NodeKind::Leaf { word },
            });
        }
        let mut tree = ParseTree {
            nodes,
            n_leaves: words.len(),
        };
        for &(l, r) in shape.merges() {
            tree.push_merge(model, l, r)?;
        }
        Ok(tree)
    }

    pub(crate) fn from_nodes(nodes: Vec<TreeNode>, n_leaves: usize) -> Self {
        ParseTree { nodes, n_leaves }
    }

    pub(crate) fn push_merge(&mut self, model: &Model, l: usize, r: usize) -> Result<usize> {
        let span = self.nodes[l].span.union(&self.nodes[r].span)?;
        let mut out = vec![0.0; model.dim()];
        model.assoc_into(&self.nodes[l].repr, &self.nodes[r].repr, &mut out);
        let saliency = model.score(&out);
        self.nodes.push(TreeNode {
            span,
            repr: Repr::new(out),
            kind: NodeKind::Internal {
                left: l,
                right: r,
                saliency,
            },
        });
        Ok(self.nodes.len() - 1)
    }

    pub fn n_leaves(&self) -> usize {
        self.n_leaves
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn root(&self) -> &TreeNode {
        self.nodes.last().expect("non-empty tree")
    }

    pub fn root_id(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn internal_nodes(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes[self.n_leaves..].iter()
    }

    pub fn words(&self) -> Vec<usize> {
        self.nodes[..self.n_leaves]
            .iter()
            .map(|n| match n.kind {
                NodeKind::Leaf { word } => word,
                NodeKind::Internal { .. } => unreachable!("leaves come first"),
            })
            .collect()
    }

    /// Sum of internal-node saliencies.
    pub fn total_score(&self) -> f64 {
        self.internal_nodes().filter_map(TreeNode::saliency).sum()
    }

    pub fn bracketing(&self) -> Bracketing {
        let merges = self
            .internal_nodes()
            .map(|n| n.children().expect("internal"))
            .collect();
        Bracketing {
            n: self.n_leaves,
            merges,
        }
    }

    pub fn render<S: AsRef<str>>(&self, leaves: &[S]) -> String {
        self.bracketing().render(leaves)
    }

    /// Check structural invariants and that every stored representation is
    /// reproduced bit-exactly by a bottom-up recomputation under `model`.
    pub fn validate(&self, model: &Model) -> Result<()> {
        let n = self.n_leaves;
        if n == 0 || self.nodes.len() != 2 * n - 1 {
            return Err(Error::Structure(format!(
                "{} nodes for {} leaves",
                self.nodes.len(),
                n
            )));
        }
        let rebuilt = ParseTree::build(model, &self.words(), &self.bracketing())?;
        for (a, b) in self.nodes.iter().zip(&rebuilt.nodes) {
            if a.span != b.span {
                return Err(Error::Structure(format!("span {} != {}", a.span, b.span)));
            }
            let same_bits = a.repr.len() == b.repr.len()
                && a.repr.iter().zip(b.repr.iter()).all(|(x, y)| x.to_bits() == y.to_bits());
            if !same_bits {
                return Err(Error::Structure(format!(
                    "stored representation at {} differs from recomputation",
                    a.span
                )));
            }
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct JsonNode<'a> {
    span: &'a [(usize, usize)],
    left: usize,
    right: usize,
    saliency: f64,
}

#[derive(Serialize)]
struct JsonTree<'a, S: Serialize> {
    tokens: &'a [S],
    bracketing: String,
    total_score: f64,
    nodes: Vec<JsonNode<'a>>,
}

/// One JSON object describing the tree: tokens, the parenthesized form, every
/// internal node's span and saliency, and the total score.
pub fn tree_to_json<S: AsRef<str> + Serialize>(tree: &ParseTree, tokens: &[S]) -> String {
    let nodes = tree
        .internal_nodes()
        .map(|n| {
            let (left, right) = n.children().expect("internal");
            JsonNode {
                span: n.span.intervals(),
                left,
                right,
                saliency: n.saliency().unwrap_or(0.0),
            }
        })
        .collect();
    let doc = JsonTree {
        tokens,
        bracketing: tree.render(tokens),
        total_score: tree.total_score(),
        nodes,
    };
    serde_json::to_string(&doc).expect("serializable")
}
