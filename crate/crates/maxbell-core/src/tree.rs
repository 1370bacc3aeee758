//! Finite probability trees and simple functions on their atoms.
//!
//! A [`ProbTree`] is a finite truncation of a tree of measurable subsets of a
//! probability space: the root carries measure 1, every internal node has at
//! least two children, and the children of a node partition it (their
//! measures sum to the parent's). Leaves are the atoms — the finest
//! resolution this crate works at. The vanishing-diameter condition of the
//! infinite model is represented by the truncation depth; all quantities of
//! interest are limits of finite-depth values, and convergence is tested,
//! not assumed.

use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result, STRUCTURAL_REL_TOL};

/// Index of a node inside a [`ProbTree`]. The root is always node 0 and
/// children are stored after their parent, so ascending order is topological.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

impl NodeId {
    /// Position of the node in the tree's storage.
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
struct Node {
    measure: f64,
    parent: Option<NodeId>,
    children: Vec<NodeId>,
    leaf_index: Option<usize>,
}

/// A finite probability tree. Immutable after construction.
#[derive(Debug, Clone)]
pub struct ProbTree {
    nodes: Vec<Node>,
    leaves: Vec<NodeId>,
    depth: usize,
}

/// Branching description accepted by [`build_tree`].
#[derive(Debug, Clone)]
pub enum TreeSpec {
    /// Every internal node splits into `arity` children of equal measure,
    /// down to the given depth.
    Uniform { arity: usize, depth: usize },
    /// Explicit measure splits, node by node, starting from the root.
    Explicit(NodeSpec),
}

/// One node of an explicit branching description. `Branch` children carry
/// absolute measures, which must sum to the parent's measure.
#[derive(Debug, Clone)]
pub enum NodeSpec {
    Leaf,
    Branch(Vec<(f64, NodeSpec)>),
}

/// Builds a [`ProbTree`] from a branching description.
pub fn build_tree(spec: &TreeSpec) -> Result<ProbTree> {
    match spec {
        TreeSpec::Uniform { arity, depth } => ProbTree::uniform(*arity, *depth),
        TreeSpec::Explicit(node) => ProbTree::from_splits(node),
    }
}

/// Incremental construction of a [`ProbTree`]. All structural invariants are
/// checked in [`TreeBuilder::finish`].
#[derive(Debug)]
pub struct TreeBuilder {
    nodes: Vec<Node>,
}

impl TreeBuilder {
    /// Starts a tree whose root carries measure 1.
    pub fn new() -> Self {
        TreeBuilder {
            nodes: alloc::vec![Node {
                measure: 1.0,
                parent: None,
                children: Vec::new(),
                leaf_index: None,
            }],
        }
    }

    /// The root under construction (measure 1).
    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    /// Appends a child of `parent` with the given measure and returns its id.
    pub fn add_child(&mut self, parent: NodeId, measure: f64) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node {
            measure,
            parent: Some(parent),
            children: Vec::new(),
            leaf_index: None,
        });
        self.nodes[parent.0].children.push(id);
        id
    }

    /// Validates the structure and freezes it.
    pub fn finish(mut self) -> Result<ProbTree> {
        if math::abs(self.nodes[0].measure - 1.0) > STRUCTURAL_REL_TOL {
            return Err(Error::InvalidTree("root measure must be 1"));
        }
        if self.nodes[0].children.is_empty() {
            return Err(Error::InvalidTree(
                "the root must be subdivided (truncation depth >= 1)",
            ));
        }
        for node in &self.nodes {
            if !(node.measure > 0.0) || !node.measure.is_finite() {
                return Err(Error::InvalidTree("all measures must be positive and finite"));
            }
            if node.children.len() == 1 {
                return Err(Error::InvalidTree(
                    "internal nodes must have at least two children",
                ));
            }
            if !node.children.is_empty() {
                let sum: f64 = node.children.iter().map(|c| self.nodes[c.0].measure).sum();
                if math::abs(sum - node.measure) > STRUCTURAL_REL_TOL * node.measure {
                    return Err(Error::InvalidTree(
                        "children measures must sum to the parent's measure",
                    ));
                }
            }
        }
        let mut leaves = Vec::new();
        for i in 0..self.nodes.len() {
            if self.nodes[i].children.is_empty() {
                self.nodes[i].leaf_index = Some(leaves.len());
                leaves.push(NodeId(i));
            }
        }
        let mut depth = 0usize;
        for &leaf in &leaves {
            let mut d = 0usize;
            let mut cur = leaf;
            while let Some(p) = self.nodes[cur.0].parent {
                d += 1;
                cur = p;
            }
            depth = depth.max(d);
        }
        Ok(ProbTree {
            nodes: self.nodes,
            leaves,
            depth,
        })
    }
}

impl Default for TreeBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl ProbTree {
    /// Uniform `arity`-ary tree of the given depth; all atoms have measure
    /// `arity^-depth`.
    pub fn uniform(arity: usize, depth: usize) -> Result<Self> {
        if arity < 2 {
            return Err(Error::InvalidTree(
                "internal nodes must have at least two children",
            ));
        }
        if depth == 0 {
            return Err(Error::InvalidTree(
                "the root must be subdivided (truncation depth >= 1)",
            ));
        }
        let mut builder = TreeBuilder::new();
        let mut frontier = alloc::vec![(NodeId(0), 1.0f64)];
        for _ in 0..depth {
            let mut next = Vec::with_capacity(frontier.len() * arity);
            for (id, measure) in frontier {
                let share = measure / arity as f64;
                let mut assigned = 0.0;
                for j in 0..arity {
                    // Last child absorbs the rounding remainder so sums stay exact.
                    let m = if j + 1 == arity { measure - assigned } else { share };
                    assigned += m;
                    let child = builder.add_child(id, m);
                    next.push((child, m));
                }
            }
            frontier = next;
        }
        builder.finish()
    }

    /// Builds a tree from explicit measure splits; the root carries measure 1.
    pub fn from_splits(spec: &NodeSpec) -> Result<Self> {
        fn expand(builder: &mut TreeBuilder, id: NodeId, spec: &NodeSpec) {
            if let NodeSpec::Branch(children) = spec {
                for (measure, child_spec) in children {
                    let child = builder.add_child(id, *measure);
                    expand(builder, child, child_spec);
                }
            }
        }
        let mut builder = TreeBuilder::new();
        expand(&mut builder, NodeId(0), spec);
        builder.finish()
    }

    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn measure(&self, id: NodeId) -> f64 {
        self.nodes[id.0].measure
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id.0].parent
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id.0].children
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        self.nodes[id.0].children.is_empty()
    }

    /// Atoms in storage order.
    pub fn leaves(&self) -> &[NodeId] {
        &self.leaves
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    /// Measure of the `i`-th atom.
    pub fn leaf_measure(&self, i: usize) -> f64 {
        self.nodes[self.leaves[i].0].measure
    }

    /// Position of a leaf node among the atoms, if it is one.
    pub fn leaf_index_of(&self, id: NodeId) -> Option<usize> {
        self.nodes[id.0].leaf_index
    }

    /// Longest root-to-leaf path length.
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// `∫_I φ dμ` for every node `I`, computed in one bottom-up pass.
    pub fn node_integrals(&self, phi: &AtomFunction) -> Result<Vec<f64>> {
        phi.check_against(self)?;
        let mut integrals = alloc::vec![0.0f64; self.nodes.len()];
        for i in (0..self.nodes.len()).rev() {
            let node = &self.nodes[i];
            integrals[i] = match node.leaf_index {
                Some(li) => phi.values()[li] * node.measure,
                // Children are stored after their parent, so they are done.
                None => node.children.iter().map(|c| integrals[c.0]).sum(),
            };
        }
        Ok(integrals)
    }

    /// `(1/μ(I)) ∫_I φ dμ` for every node `I`.
    pub fn node_averages(&self, phi: &AtomFunction) -> Result<Vec<f64>> {
        let mut integrals = self.node_integrals(phi)?;
        for (i, node) in self.nodes.iter().enumerate() {
            integrals[i] /= node.measure;
        }
        Ok(integrals)
    }
}

/// A nonnegative simple function given by one value per atom of a tree.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomFunction {
    values: Vec<f64>,
}

impl AtomFunction {
    pub fn new(tree: &ProbTree, values: Vec<f64>) -> Result<Self> {
        if values.len() != tree.leaf_count() {
            return Err(Error::FunctionMismatch {
                expected_leaves: tree.leaf_count(),
                got: values.len(),
            });
        }
        for &v in &values {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::OutOfDomain {
                    what: "atom value",
                    value: v,
                    lo: 0.0,
                    hi: f64::INFINITY,
                });
            }
        }
        Ok(AtomFunction { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn check_against(&self, tree: &ProbTree) -> Result<()> {
        if self.values.len() != tree.leaf_count() {
            return Err(Error::FunctionMismatch {
                expected_leaves: tree.leaf_count(),
                got: self.values.len(),
            });
        }
        Ok(())
    }

    /// `∫_X φ dμ`.
    pub fn mean(&self, tree: &ProbTree) -> Result<f64> {
        self.check_against(tree)?;
        Ok(self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| tree.leaf_measure(i) * v)
            .sum())
    }

    /// `∫_X φ^q dμ`, exact on atoms.
    pub fn power_moment(&self, tree: &ProbTree, q: f64) -> Result<f64> {
        self.check_against(tree)?;
        Ok(self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| tree.leaf_measure(i) * math::powf(v, q))
            .sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_binary_depth2_has_four_quarter_atoms() {
        let tree = ProbTree::uniform(2, 2).unwrap();
        assert_eq!(tree.leaf_count(), 4);
        for i in 0..4 {
            assert_eq!(tree.leaf_measure(i), 0.25);
        }
        assert_eq!(tree.depth(), 2);
        assert_eq!(tree.measure(tree.root()), 1.0);
    }

    #[test]
    fn explicit_root_split() {
        let spec = NodeSpec::Branch(alloc::vec![(0.6, NodeSpec::Leaf), (0.4, NodeSpec::Leaf)]);
        let tree = ProbTree::from_splits(&spec).unwrap();
        assert_eq!(tree.leaf_count(), 2);
        assert_eq!(tree.leaf_measure(0), 0.6);
        assert_eq!(tree.leaf_measure(1), 0.4);
        assert_eq!(tree.depth(), 1);
    }

    #[test]
    fn uniform_binary_depth3_children_sum_to_parent() {
        let tree = ProbTree::uniform(2, 3).unwrap();
        assert_eq!(tree.leaf_count(), 8);
        for i in 0..tree.node_count() {
            let id = NodeId(i);
            if !tree.is_leaf(id) {
                let sum: f64 = tree.children(id).iter().map(|&c| tree.measure(c)).sum();
                assert_eq!(sum, tree.measure(id));
            }
        }
    }

    #[test]
    fn rejects_single_child() {
        let spec = NodeSpec::Branch(alloc::vec![(1.0, NodeSpec::Leaf)]);
        assert!(matches!(
            ProbTree::from_splits(&spec),
            Err(Error::InvalidTree(_))
        ));
    }

    #[test]
    fn rejects_nonpositive_measure() {
        let spec = NodeSpec::Branch(alloc::vec![(1.2, NodeSpec::Leaf), (-0.2, NodeSpec::Leaf)]);
        assert!(matches!(
            ProbTree::from_splits(&spec),
            Err(Error::InvalidTree(_))
        ));
    }

    #[test]
    fn rejects_measure_sum_mismatch() {
        let spec = NodeSpec::Branch(alloc::vec![(0.5, NodeSpec::Leaf), (0.4, NodeSpec::Leaf)]);
        assert!(matches!(
            ProbTree::from_splits(&spec),
            Err(Error::InvalidTree(_))
        ));
    }

    #[test]
    fn rejects_undivided_root() {
        assert!(ProbTree::uniform(2, 0).is_err());
        assert!(ProbTree::from_splits(&NodeSpec::Leaf).is_err());
    }

    #[test]
    fn atom_function_checks_length_and_sign() {
        let tree = ProbTree::uniform(2, 1).unwrap();
        assert!(AtomFunction::new(&tree, alloc::vec![1.0]).is_err());
        assert!(AtomFunction::new(&tree, alloc::vec![1.0, -1.0]).is_err());
        let phi = AtomFunction::new(&tree, alloc::vec![3.0, 1.0]).unwrap();
        assert_eq!(phi.mean(&tree).unwrap(), 2.0);
    }

    #[test]
    fn node_integrals_bottom_up() {
        let tree = ProbTree::uniform(2, 2).unwrap();
        let phi = AtomFunction::new(&tree, alloc::vec![4.0, 2.0, 1.0, 1.0]).unwrap();
        let ints = tree.node_integrals(&phi).unwrap();
        assert_eq!(ints[0], 2.0); // ∫φ over X
        let avgs = tree.node_averages(&phi).unwrap();
        assert_eq!(avgs[0], 2.0);
        // The two depth-1 nodes average 3 and 1.
        let mut level1: Vec<f64> = tree
            .children(tree.root())
            .iter()
            .map(|&c| avgs[c.index()])
            .collect();
        level1.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(level1, alloc::vec![1.0, 3.0]);
    }
}
