use crate::model::{Model, Repr};

/// Tree recovered from a single vector by repeated dissociation. Leaves carry
/// only their representation; mapping them back to words is a nearest-neighbor
/// lookup (see [`crate::analysis::label_unfolded`]).
#[derive(Clone, Debug, PartialEq)]
pub enum UnfoldNode {
    Leaf(Repr),
    Branch {
        repr: Repr,
        saliency: f64,
        left: Box<UnfoldNode>,
        right: Box<UnfoldNode>,
    },
}

impl UnfoldNode {
    pub fn repr(&self) -> &Repr {
        match self {
            UnfoldNode::Leaf(r) | UnfoldNode::Branch { repr: r, .. } => r,
        }
    }

    /// Leaves in left-to-right order.
    pub fn leaves(&self) -> Vec<&Repr> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a Repr>) {
        match self {
            UnfoldNode::Leaf(r) => out.push(r),
            UnfoldNode::Branch { left, right, .. } => {
                left.collect_leaves(out);
                right.collect_leaves(out);
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            UnfoldNode::Leaf(_) => 0,
            UnfoldNode::Branch { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// Parenthesized rendering with caller-supplied leaf labels.
    pub fn render(&self, label: &mut dyn FnMut(&Repr) -> String) -> String {
        match self {
            UnfoldNode::Leaf(r) => label(r),
            UnfoldNode::Branch { left, right, .. } => {
                format!("({} {})", left.render(label), right.render(label))
            }
        }
    }
}

/// Dissociate `x` while its saliency reaches `threshold`, up to `max_depth`
/// levels. Only sufficiently salient vectors are treated as associations.
pub fn unfold(x: &[f64], model: &Model, threshold: f64, max_depth: usize) -> UnfoldNode {
    let repr = Repr::new(x.to_vec());
    let saliency = model.score(x);
    if max_depth == 0 || saliency < threshold || !saliency.is_finite() {
        return UnfoldNode::Leaf(repr);
    }
    let d = model.dim();
    let mut out = vec![0.0; 2 * d];
    model.dissoc_into(x, &mut out);
    let left = unfold(&out[..d], model, threshold, max_depth - 1);
    let right = unfold(&out[d..], model, threshold, max_depth - 1);
    UnfoldNode::Branch {
        repr,
        saliency,
        left: Box::new(left),
        right: Box::new(right),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Block, InitOptions};

    #[test]
    fn depth_zero_and_infinite_threshold_give_leaves() {
        let m = Model::init(3, &InitOptions::new(4, 1).with_bounds(1..=8)).unwrap();
        let x = [0.2, -0.1, 0.4, 0.0];
        assert_eq!(unfold(&x, &m, f64::NEG_INFINITY, 0), UnfoldNode::Leaf(Repr::new(x.to_vec())));
        assert_eq!(unfold(&x, &m, f64::INFINITY, 5), UnfoldNode::Leaf(Repr::new(x.to_vec())));
    }

    #[test]
    fn identity_dissociation_unfolds_to_copies() {
        let mut m = Model::zeros(2, 1);
        m.block_mut(Block::DissocW)
            .copy_from_slice(&[1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0]);
        m.block_mut(Block::SalB)[0] = 1.0;
        let t = unfold(&[0.3, 0.6], &m, 0.0, 2);
        assert_eq!(t.depth(), 2);
        let leaves = t.leaves();
        assert_eq!(leaves.len(), 4);
        assert!(leaves.iter().all(|r| &***r == [0.3, 0.6]));
        let s = t.render(&mut |_| "x".to_string());
        assert_eq!(s, "((x x) (x x))");
    }
}
