//! MIN-MAX tree representation, classical evaluation, threshold reduction,
//! and seeded tree generation.
//!
//! Trees are stored in an arena of [`Node`]s. Leaves carry a 1-based
//! [`LeafIndex`] into the accompanying [`LeafAssignment`]; internal nodes
//! carry a [`Gate`] and an ordered child list. Gates strictly alternate
//! along every root-to-leaf path and every internal node has at least one
//! child; both invariants are enforced at construction time and a
//! non-conforming input is rejected rather than normalized.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// 1-based position of a leaf in the tree's left-to-right leaf order.
pub type LeafIndex = usize;

/// Index into a tree's node arena.
pub type NodeId = usize;

/// Gate carried by an internal node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gate {
    Min,
    Max,
}

impl Gate {
    pub fn flip(self) -> Gate {
        match self {
            Gate::Min => Gate::Max,
            Gate::Max => Gate::Min,
        }
    }
}

/// One arena slot of a [`MinMaxTree`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Node {
    Internal { gate: Gate, children: Vec<NodeId> },
    Leaf { index: LeafIndex },
}

/// A rooted tree of alternating Min/Max gates over `N` indexed leaves.
///
/// Invariants (checked by [`MinMaxTree::new`]):
/// - the arena is connected and acyclic with every node reachable from the
///   root exactly once;
/// - every internal node has at least one child;
/// - gates strictly alternate along every root-to-leaf path;
/// - the leaf indices are a bijection with `1..=N`.
///
/// A tree is immutable after construction and safe to share across
/// concurrent trials.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinMaxTree {
    nodes: Vec<Node>,
    root: NodeId,
    leaf_count: usize,
}

impl MinMaxTree {
    /// Builds a tree from a raw arena, validating all structural invariants.
    pub fn new(nodes: Vec<Node>, root: NodeId) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Contract("tree arena is empty".into()));
        }
        if root >= nodes.len() {
            return Err(Error::Contract(format!("root id {root} out of bounds")));
        }
        let mut visited = vec![false; nodes.len()];
        let mut leaf_indices = Vec::new();
        // Stack of (node, gate of the nearest internal ancestor).
        let mut stack: Vec<(NodeId, Option<Gate>)> = vec![(root, None)];
        while let Some((id, parent_gate)) = stack.pop() {
            if visited[id] {
                return Err(Error::Contract(format!(
                    "node {id} is reachable twice (cycle or shared child)"
                )));
            }
            visited[id] = true;
            match &nodes[id] {
                Node::Leaf { index } => leaf_indices.push(*index),
                Node::Internal { gate, children } => {
                    if children.is_empty() {
                        return Err(Error::Contract(format!(
                            "internal node {id} has no children"
                        )));
                    }
                    if parent_gate == Some(*gate) {
                        return Err(Error::Contract(format!(
                            "gates do not alternate at node {id}"
                        )));
                    }
                    for &child in children {
                        if child >= nodes.len() {
                            return Err(Error::Contract(format!(
                                "child id {child} out of bounds at node {id}"
                            )));
                        }
                        stack.push((child, Some(*gate)));
                    }
                }
            }
        }
        if let Some(unreached) = visited.iter().position(|v| !v) {
            return Err(Error::Contract(format!(
                "node {unreached} is not reachable from the root"
            )));
        }
        let leaf_count = leaf_indices.len();
        leaf_indices.sort_unstable();
        for (pos, index) in leaf_indices.iter().enumerate() {
            if *index != pos + 1 {
                return Err(Error::Contract(format!(
                    "leaf indices are not a bijection with 1..={leaf_count}"
                )));
            }
        }
        Ok(MinMaxTree {
            nodes,
            root,
            leaf_count,
        })
    }

    /// Builds a tree from its nested structural description.
    pub fn from_structure(structure: &TreeStructure) -> Result<Self> {
        fn build(s: &TreeStructure, nodes: &mut Vec<Node>) -> NodeId {
            match s {
                TreeStructure::Leaf { leaf } => {
                    nodes.push(Node::Leaf { index: *leaf });
                    nodes.len() - 1
                }
                TreeStructure::Internal { gate, children } => {
                    let ids: Vec<NodeId> = children.iter().map(|c| build(c, nodes)).collect();
                    nodes.push(Node::Internal {
                        gate: *gate,
                        children: ids,
                    });
                    nodes.len() - 1
                }
            }
        }
        let mut nodes = Vec::new();
        let root = build(structure, &mut nodes);
        MinMaxTree::new(nodes, root)
    }

    /// Recovers the nested structural description (used for serialization).
    pub fn to_structure(&self) -> TreeStructure {
        fn rebuild(tree: &MinMaxTree, id: NodeId) -> TreeStructure {
            match &tree.nodes[id] {
                Node::Leaf { index } => TreeStructure::Leaf { leaf: *index },
                Node::Internal { gate, children } => TreeStructure::Internal {
                    gate: *gate,
                    children: children.iter().map(|&c| rebuild(tree, c)).collect(),
                },
            }
        }
        rebuild(self, self.root)
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    /// Number of leaves `N`.
    pub fn leaf_count(&self) -> usize {
        self.leaf_count
    }

    /// Children of the root (candidate optimal moves).
    pub fn root_children(&self) -> &[NodeId] {
        match &self.nodes[self.root] {
            Node::Internal { children, .. } => children,
            Node::Leaf { .. } => &[],
        }
    }
}

/// Nested tree description and on-disk JSON form: internal nodes serialize
/// as `{"gate": "min"|"max", "children": [...]}`, leaves as `{"leaf": k}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeStructure {
    Leaf { leaf: LeafIndex },
    Internal { gate: Gate, children: Vec<TreeStructure> },
}

impl TreeStructure {
    pub fn leaf(leaf: LeafIndex) -> Self {
        TreeStructure::Leaf { leaf }
    }

    pub fn min(children: Vec<TreeStructure>) -> Self {
        TreeStructure::Internal {
            gate: Gate::Min,
            children,
        }
    }

    pub fn max(children: Vec<TreeStructure>) -> Self {
        TreeStructure::Internal {
            gate: Gate::Max,
            children,
        }
    }
}

/// A tree plus its leaf values, as stored in CLI fixture files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeDocument {
    pub root: TreeStructure,
    pub values: Vec<i64>,
}

impl TreeDocument {
    pub fn from_parts(tree: &MinMaxTree, values: &LeafAssignment) -> Self {
        TreeDocument {
            root: tree.to_structure(),
            values: values.as_slice().to_vec(),
        }
    }

    pub fn into_parts(self) -> Result<(MinMaxTree, LeafAssignment)> {
        let tree = MinMaxTree::from_structure(&self.root)?;
        let values = LeafAssignment::new(self.values);
        if values.len() != tree.leaf_count() {
            return Err(Error::Contract(format!(
                "document has {} values for a tree with {} leaves",
                values.len(),
                tree.leaf_count()
            )));
        }
        Ok((tree, values))
    }
}

/// The hidden leaf values `x_1, ..., x_N`. Position `k` holds `x_k`;
/// duplicates are permitted. Values are 64-bit integers: the algorithm only
/// ever compares them, and integers keep exhaustive small-case tests exact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeafAssignment {
    values: Vec<i64>,
}

impl LeafAssignment {
    pub fn new(values: Vec<i64>) -> Self {
        LeafAssignment { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value `x_k` for 1-based leaf index `k`. Panics on an out-of-range
    /// index; callers validate indices at the API boundary.
    pub fn value(&self, k: LeafIndex) -> i64 {
        assert!(k >= 1 && k <= self.values.len(), "leaf index {k} out of range");
        self.values[k - 1]
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.values
    }
}

fn check_assignment(tree: &MinMaxTree, values: &LeafAssignment) -> Result<()> {
    if values.len() != tree.leaf_count() {
        return Err(Error::Contract(format!(
            "assignment has {} values for a tree with {} leaves",
            values.len(),
            tree.leaf_count()
        )));
    }
    Ok(())
}

/// Walks the tree and returns the leaf index attaining each gate's optimum,
/// using only strict comparisons between leaf indices. Ties break to the
/// leftmost attaining child, so the witness is deterministic.
pub(crate) fn witness_with<F>(tree: &MinMaxTree, id: NodeId, less: &mut F) -> LeafIndex
where
    F: FnMut(LeafIndex, LeafIndex) -> bool,
{
    match tree.node(id) {
        Node::Leaf { index } => *index,
        Node::Internal { gate, children } => {
            let mut best = witness_with(tree, children[0], less);
            for &child in &children[1..] {
                let candidate = witness_with(tree, child, less);
                let improves = match gate {
                    Gate::Min => less(candidate, best),
                    Gate::Max => less(best, candidate),
                };
                if improves {
                    best = candidate;
                }
            }
            best
        }
    }
}

/// Short-circuit Boolean evaluation of the tree with Min read as AND and
/// Max read as OR, pulling each leaf's bit lazily from `bit`.
pub(crate) fn eval_threshold_with<F>(tree: &MinMaxTree, bit: &mut F) -> bool
where
    F: FnMut(LeafIndex) -> bool,
{
    fn go<F: FnMut(LeafIndex) -> bool>(tree: &MinMaxTree, id: NodeId, bit: &mut F) -> bool {
        match tree.node(id) {
            Node::Leaf { index } => bit(*index),
            Node::Internal { gate, children } => match gate {
                Gate::Min => children.iter().all(|&c| go(tree, c, bit)),
                Gate::Max => children.iter().any(|&c| go(tree, c, bit)),
            },
        }
    }
    go(tree, tree.root(), bit)
}

/// Evaluates the tree, returning its value and a witness leaf index with
/// `x_witness == value`. The witness follows gate-optimal children with a
/// leftmost tie-break.
pub fn eval_minmax(tree: &MinMaxTree, values: &LeafAssignment) -> Result<(i64, LeafIndex)> {
    check_assignment(tree, values)?;
    let witness = witness_with(tree, tree.root(), &mut |j, k| {
        values.value(j) < values.value(k)
    });
    Ok((values.value(witness), witness))
}

/// Decides `value(tree) >= v` by evaluating the Boolean threshold tree:
/// gates become AND/OR and leaf `k` becomes the bit `[x_k >= v]`. This is
/// a structural reduction and never consults the min/max evaluation.
pub fn eval_threshold(tree: &MinMaxTree, values: &LeafAssignment, v: i64) -> Result<bool> {
    check_assignment(tree, values)?;
    Ok(eval_threshold_with(tree, &mut |k| values.value(k) >= v))
}

/// Returns the leftmost root child whose subtree attains the tree value
/// `x_value_index` (the optimal move). Comparison-only: the walk never reads
/// a raw value, so it can run against a comparison oracle via
/// [`attaining_subtree_with`].
pub fn attaining_subtree(
    tree: &MinMaxTree,
    values: &LeafAssignment,
    value_index: LeafIndex,
) -> Result<NodeId> {
    check_assignment(tree, values)?;
    attaining_subtree_with(
        tree,
        &mut |j, k| values.value(j) < values.value(k),
        value_index,
    )
}

/// [`attaining_subtree`] with an abstract strict comparison, e.g. a closure
/// charging comparison queries against an oracle handle.
pub fn attaining_subtree_with<F>(
    tree: &MinMaxTree,
    less: &mut F,
    value_index: LeafIndex,
) -> Result<NodeId>
where
    F: FnMut(LeafIndex, LeafIndex) -> bool,
{
    if value_index < 1 || value_index > tree.leaf_count() {
        return Err(Error::Contract(format!(
            "value index {value_index} out of range"
        )));
    }
    for &child in tree.root_children() {
        let w = witness_with(tree, child, less);
        let equal = !less(w, value_index) && !less(value_index, w);
        if equal {
            return Ok(child);
        }
    }
    Err(Error::Contract(
        "no root child attains the claimed tree value".into(),
    ))
}

/// Shape half of a [`TreeShapeSpec`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    /// Full `arity`-ary tree of the given depth; depth 0 is a single leaf.
    Balanced { arity: usize, depth: u32 },
    /// Random alternating tree with exactly `leaves` leaves; internal nodes
    /// draw their child count uniformly from `2..=max_arity` (clamped by
    /// the leaves remaining).
    Random { leaves: usize, max_arity: usize },
}

/// How leaf values are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueDistribution {
    /// A random permutation of `1..=N` (all values distinct).
    Permutation,
    /// Independent uniform draws from `lo..=hi`.
    Uniform { lo: i64, hi: i64 },
    /// Independent uniform draws from `1..=distinct`, forcing duplicates
    /// whenever `distinct < N`.
    Duplicates { distinct: usize },
}

/// Deterministic generator spec: same spec and seed, same tree and values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeShapeSpec {
    pub shape: Shape,
    pub values: ValueDistribution,
    pub seed: u64,
}

pub const DEFAULT_RANDOM_MAX_ARITY: usize = 4;

/// Generates a tree and leaf assignment from a spec. Balanced trees are
/// rooted at a Max gate (game convention: the player to move maximizes), as
/// are random trees.
pub fn gen_tree(spec: &TreeShapeSpec) -> Result<(MinMaxTree, LeafAssignment)> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let structure = match spec.shape {
        Shape::Balanced { arity, depth } => {
            if arity < 1 {
                return Err(Error::Config("balanced arity must be >= 1".into()));
            }
            let leaves = (arity as u64).checked_pow(depth).ok_or_else(|| {
                Error::Config(format!("balanced({arity}, {depth}) overflows the leaf count"))
            })?;
            if leaves > (1 << 26) {
                return Err(Error::Config(format!(
                    "balanced({arity}, {depth}) would have {leaves} leaves; cap is 2^26"
                )));
            }
            let mut next_leaf = 1;
            build_balanced(arity, depth, Gate::Max, &mut next_leaf)
        }
        Shape::Random { leaves, max_arity } => {
            if leaves < 1 {
                return Err(Error::Config("random tree needs at least one leaf".into()));
            }
            if max_arity < 2 {
                return Err(Error::Config("random max_arity must be >= 2".into()));
            }
            let mut next_leaf = 1;
            build_random(leaves, max_arity, Gate::Max, &mut next_leaf, &mut rng)
        }
    };
    let tree = MinMaxTree::from_structure(&structure)?;
    let n = tree.leaf_count();
    let values = match spec.values {
        ValueDistribution::Permutation => {
            let mut v: Vec<i64> = (1..=n as i64).collect();
            v.shuffle(&mut rng);
            v
        }
        ValueDistribution::Uniform { lo, hi } => {
            if lo > hi {
                return Err(Error::Config(format!("uniform range {lo}..={hi} is empty")));
            }
            (0..n).map(|_| rng.gen_range(lo..=hi)).collect()
        }
        ValueDistribution::Duplicates { distinct } => {
            if distinct < 1 {
                return Err(Error::Config("duplicates profile needs distinct >= 1".into()));
            }
            (0..n).map(|_| rng.gen_range(1..=distinct as i64)).collect()
        }
    };
    Ok((tree, LeafAssignment::new(values)))
}

fn build_balanced(arity: usize, depth: u32, gate: Gate, next_leaf: &mut LeafIndex) -> TreeStructure {
    if depth == 0 {
        let leaf = *next_leaf;
        *next_leaf += 1;
        return TreeStructure::Leaf { leaf };
    }
    let children = (0..arity)
        .map(|_| build_balanced(arity, depth - 1, gate.flip(), next_leaf))
        .collect();
    TreeStructure::Internal { gate, children }
}

fn build_random(
    leaves: usize,
    max_arity: usize,
    gate: Gate,
    next_leaf: &mut LeafIndex,
    rng: &mut ChaCha8Rng,
) -> TreeStructure {
    if leaves == 1 {
        let leaf = *next_leaf;
        *next_leaf += 1;
        return TreeStructure::Leaf { leaf };
    }
    let arity = rng.gen_range(2..=max_arity.min(leaves));
    // Split `leaves` into `arity` positive parts via sorted distinct cuts.
    let mut cuts = rand::seq::index::sample(rng, leaves - 1, arity - 1).into_vec();
    cuts.sort_unstable();
    let mut parts = Vec::with_capacity(arity);
    let mut prev = 0;
    for cut in cuts {
        parts.push(cut + 1 - prev);
        prev = cut + 1;
    }
    parts.push(leaves - prev);
    let children = parts
        .into_iter()
        .map(|p| build_random(p, max_arity, gate.flip(), next_leaf, rng))
        .collect();
    TreeStructure::Internal { gate, children }
}

/// A fixed family of small alternating shapes (1 to 8 leaves) used by
/// exhaustive equivalence tests and CLI fixtures. Leaves are numbered
/// left to right.
pub fn small_shape_family() -> Vec<TreeStructure> {
    use TreeStructure as T;
    vec![
        // 1: single leaf
        T::leaf(1),
        // 2: max(1,2)
        T::max(vec![T::leaf(1), T::leaf(2)]),
        // 3: min(1,2)
        T::min(vec![T::leaf(1), T::leaf(2)]),
        // 4: max(min(1,2), min(3,4))
        T::max(vec![
            T::min(vec![T::leaf(1), T::leaf(2)]),
            T::min(vec![T::leaf(3), T::leaf(4)]),
        ]),
        // 5: min(max(1,2), max(3,4))
        T::min(vec![
            T::max(vec![T::leaf(1), T::leaf(2)]),
            T::max(vec![T::leaf(3), T::leaf(4)]),
        ]),
        // 6: max over three binary mins
        T::max(vec![
            T::min(vec![T::leaf(1), T::leaf(2)]),
            T::min(vec![T::leaf(3), T::leaf(4)]),
            T::min(vec![T::leaf(5), T::leaf(6)]),
        ]),
        // 7: min over two ternary maxes
        T::min(vec![
            T::max(vec![T::leaf(1), T::leaf(2), T::leaf(3)]),
            T::max(vec![T::leaf(4), T::leaf(5), T::leaf(6)]),
        ]),
        // 8: balanced(2,3) rooted at max
        T::max(vec![
            T::min(vec![
                T::max(vec![T::leaf(1), T::leaf(2)]),
                T::max(vec![T::leaf(3), T::leaf(4)]),
            ]),
            T::min(vec![
                T::max(vec![T::leaf(5), T::leaf(6)]),
                T::max(vec![T::leaf(7), T::leaf(8)]),
            ]),
        ]),
        // 9: balanced(2,3) rooted at min
        T::min(vec![
            T::max(vec![
                T::min(vec![T::leaf(1), T::leaf(2)]),
                T::min(vec![T::leaf(3), T::leaf(4)]),
            ]),
            T::max(vec![
                T::min(vec![T::leaf(5), T::leaf(6)]),
                T::min(vec![T::leaf(7), T::leaf(8)]),
            ]),
        ]),
        // 10: irregular depths, leaf beside a subtree
        T::max(vec![
            T::min(vec![T::max(vec![T::leaf(1), T::leaf(2)]), T::leaf(3)]),
            T::min(vec![T::leaf(4), T::leaf(5)]),
        ]),
        // 11: mixed arity with a bare leaf child of the root
        T::min(vec![
            T::max(vec![
                T::min(vec![T::leaf(1), T::leaf(2)]),
                T::min(vec![T::leaf(3), T::leaf(4)]),
            ]),
            T::max(vec![T::leaf(5), T::leaf(6)]),
            T::leaf(7),
        ]),
        // 12: shallow wide max under a narrow min
        T::max(vec![T::leaf(1), T::min(vec![T::leaf(2), T::leaf(3), T::leaf(4), T::leaf(5)])]),
        // 13: wide min of 8 leaves
        T::min(vec![
            T::leaf(1),
            T::leaf(2),
            T::leaf(3),
            T::leaf(4),
            T::leaf(5),
            T::leaf(6),
            T::leaf(7),
            T::leaf(8),
        ]),
        // 14: wide max of 7 leaves
        T::max(vec![
            T::leaf(1),
            T::leaf(2),
            T::leaf(3),
            T::leaf(4),
            T::leaf(5),
            T::leaf(6),
            T::leaf(7),
        ]),
        // 15: ternary root over mixed-arity subtrees
        T::max(vec![
            T::min(vec![T::leaf(1), T::leaf(2), T::leaf(3)]),
            T::min(vec![T::leaf(4), T::leaf(5)]),
            T::min(vec![T::leaf(6), T::max(vec![T::leaf(7), T::leaf(8)])]),
        ]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent brute-force oracle: recursive min/max over the nested
    /// structure, never touching the arena walkers under test.
    fn naive_value(structure: &TreeStructure, values: &[i64]) -> i64 {
        match structure {
            TreeStructure::Leaf { leaf } => values[*leaf - 1],
            TreeStructure::Internal { gate, children } => {
                let it = children.iter().map(|c| naive_value(c, values));
                match gate {
                    Gate::Min => it.min().unwrap(),
                    Gate::Max => it.max().unwrap(),
                }
            }
        }
    }

    fn tree_of(structure: &TreeStructure) -> MinMaxTree {
        MinMaxTree::from_structure(structure).unwrap()
    }

    fn two_level_max() -> (MinMaxTree, LeafAssignment) {
        // MAX(MIN(3,7), MIN(2,5))
        let t = tree_of(&TreeStructure::max(vec![
            TreeStructure::min(vec![TreeStructure::leaf(1), TreeStructure::leaf(2)]),
            TreeStructure::min(vec![TreeStructure::leaf(3), TreeStructure::leaf(4)]),
        ]));
        (t, LeafAssignment::new(vec![3, 7, 2, 5]))
    }

    #[test]
    fn eval_two_level_max() {
        let (t, x) = two_level_max();
        assert_eq!(eval_minmax(&t, &x).unwrap(), (3, 1));
    }

    #[test]
    fn eval_single_leaf() {
        let t = tree_of(&TreeStructure::leaf(1));
        let x = LeafAssignment::new(vec![42]);
        assert_eq!(eval_minmax(&t, &x).unwrap(), (42, 1));
    }

    #[test]
    fn eval_witness_in_duplicate_subtree() {
        // MIN(MAX(1,4), MAX(6,2), MAX(3,3)): value 3 attained at leaf 5,
        // frozen from the brute-force oracle plus the leftmost tie-break.
        let s = TreeStructure::min(vec![
            TreeStructure::max(vec![TreeStructure::leaf(1), TreeStructure::leaf(2)]),
            TreeStructure::max(vec![TreeStructure::leaf(3), TreeStructure::leaf(4)]),
            TreeStructure::max(vec![TreeStructure::leaf(5), TreeStructure::leaf(6)]),
        ]);
        let values = vec![1, 4, 6, 2, 3, 3];
        assert_eq!(naive_value(&s, &values), 3);
        let t = tree_of(&s);
        let x = LeafAssignment::new(values);
        assert_eq!(eval_minmax(&t, &x).unwrap(), (3, 5));
    }

    #[test]
    fn eval_length_mismatch_is_contract_error() {
        let (t, _) = two_level_max();
        let short = LeafAssignment::new(vec![1, 2, 3]);
        assert!(matches!(
            eval_minmax(&t, &short),
            Err(crate::Error::Contract(_))
        ));
        assert!(matches!(
            eval_threshold(&t, &short, 1),
            Err(crate::Error::Contract(_))
        ));
    }

    #[test]
    fn threshold_frozen_examples() {
        let (t, x) = two_level_max();
        assert!(eval_threshold(&t, &x, 3).unwrap());
        assert!(!eval_threshold(&t, &x, 5).unwrap());
        // v below every leaf value: all bits are 1.
        assert!(eval_threshold(&t, &x, 2).unwrap());
    }

    #[test]
    fn threshold_matches_minimax_exhaustively_on_small_shapes() {
        // Every shape in the fixed family, every assignment over {1,2,3},
        // every threshold in {1,2,3,4}.
        for s in small_shape_family() {
            let t = tree_of(&s);
            let n = t.leaf_count();
            let mut assignment = vec![1i64; n];
            loop {
                let x = LeafAssignment::new(assignment.clone());
                let value = naive_value(&s, &assignment);
                let (got_value, witness) = eval_minmax(&t, &x).unwrap();
                assert_eq!(got_value, value);
                assert_eq!(x.value(witness), value);
                for v in 1..=4i64 {
                    assert_eq!(
                        eval_threshold(&t, &x, v).unwrap(),
                        value >= v,
                        "shape {s:?}, assignment {assignment:?}, v={v}"
                    );
                }
                // Next assignment in base-3 counting.
                let mut pos = 0;
                loop {
                    if pos == n {
                        break;
                    }
                    if assignment[pos] < 3 {
                        assignment[pos] += 1;
                        break;
                    }
                    assignment[pos] = 1;
                    pos += 1;
                }
                if pos == n {
                    break;
                }
            }
        }
    }

    #[test]
    fn boolean_reduction_matches_and_or() {
        // Over {0,1} with v=1 the threshold tree is plain AND-OR evaluation.
        fn naive_bool(structure: &TreeStructure, bits: &[i64]) -> bool {
            match structure {
                TreeStructure::Leaf { leaf } => bits[*leaf - 1] == 1,
                TreeStructure::Internal { gate, children } => match gate {
                    Gate::Min => children.iter().all(|c| naive_bool(c, bits)),
                    Gate::Max => children.iter().any(|c| naive_bool(c, bits)),
                },
            }
        }
        for s in small_shape_family() {
            let t = tree_of(&s);
            let n = t.leaf_count();
            for mask in 0..(1u32 << n) {
                let bits: Vec<i64> = (0..n).map(|i| ((mask >> i) & 1) as i64).collect();
                let x = LeafAssignment::new(bits.clone());
                assert_eq!(eval_threshold(&t, &x, 1).unwrap(), naive_bool(&s, &bits));
            }
        }
    }

    #[test]
    fn gen_balanced_permutation() {
        let spec = TreeShapeSpec {
            shape: Shape::Balanced { arity: 2, depth: 2 },
            values: ValueDistribution::Permutation,
            seed: 11,
        };
        let (t, x) = gen_tree(&spec).unwrap();
        assert_eq!(t.leaf_count(), 4);
        let mut sorted = x.as_slice().to_vec();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![1, 2, 3, 4]);
    }

    #[test]
    fn gen_depth_zero_is_single_leaf() {
        let spec = TreeShapeSpec {
            shape: Shape::Balanced { arity: 2, depth: 0 },
            values: ValueDistribution::Permutation,
            seed: 0,
        };
        let (t, x) = gen_tree(&spec).unwrap();
        assert_eq!(t.leaf_count(), 1);
        assert_eq!(x.as_slice(), &[1]);
    }

    #[test]
    fn gen_random_is_deterministic_per_seed() {
        let spec = TreeShapeSpec {
            shape: Shape::Random {
                leaves: 7,
                max_arity: DEFAULT_RANDOM_MAX_ARITY,
            },
            values: ValueDistribution::Uniform { lo: -5, hi: 5 },
            seed: 99,
        };
        let (t1, x1) = gen_tree(&spec).unwrap();
        let (t2, x2) = gen_tree(&spec).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(x1, x2);
        assert_eq!(t1.leaf_count(), 7);
    }

    #[test]
    fn gen_rejects_bad_specs() {
        let bad = TreeShapeSpec {
            shape: Shape::Balanced { arity: 0, depth: 3 },
            values: ValueDistribution::Permutation,
            seed: 0,
        };
        assert!(matches!(gen_tree(&bad), Err(crate::Error::Config(_))));
        let bad = TreeShapeSpec {
            shape: Shape::Random { leaves: 0, max_arity: 2 },
            values: ValueDistribution::Permutation,
            seed: 0,
        };
        assert!(matches!(gen_tree(&bad), Err(crate::Error::Config(_))));
        let bad = TreeShapeSpec {
            shape: Shape::Balanced { arity: 2, depth: 2 },
            values: ValueDistribution::Uniform { lo: 5, hi: -5 },
            seed: 0,
        };
        assert!(matches!(gen_tree(&bad), Err(crate::Error::Config(_))));
    }

    #[test]
    fn attaining_subtree_frozen_examples() {
        let (t, x) = two_level_max();
        // Subtree values are 3 and 2; the first child attains the value.
        assert_eq!(attaining_subtree(&t, &x, 1).unwrap(), t.root_children()[0]);

        // Single-child root.
        let t1 = tree_of(&TreeStructure::max(vec![TreeStructure::min(vec![
            TreeStructure::leaf(1),
        ])]));
        let x1 = LeafAssignment::new(vec![9]);
        assert_eq!(attaining_subtree(&t1, &x1, 1).unwrap(), t1.root_children()[0]);

        // Duplicate tree value in both subtrees: leftmost wins.
        let t2 = tree_of(&TreeStructure::max(vec![
            TreeStructure::min(vec![TreeStructure::leaf(1), TreeStructure::leaf(2)]),
            TreeStructure::min(vec![TreeStructure::leaf(3), TreeStructure::leaf(4)]),
        ]));
        let x2 = LeafAssignment::new(vec![3, 9, 8, 3]);
        let (value, witness) = eval_minmax(&t2, &x2).unwrap();
        assert_eq!(value, 3);
        assert_eq!(attaining_subtree(&t2, &x2, witness).unwrap(), t2.root_children()[0]);
    }

    #[test]
    fn attaining_subtree_rejects_non_attaining_index() {
        let (t, x) = two_level_max();
        // x_2 = 7 is not the tree value.
        assert!(matches!(
            attaining_subtree(&t, &x, 2),
            Err(crate::Error::Contract(_))
        ));
    }

    #[test]
    fn attaining_subtree_runs_on_comparison_queries_alone() {
        use crate::oracle::{ExtIndex, OracleHandle, OracleMode};
        let (t, x) = two_level_max();
        let mut h = OracleHandle::new(&x, OracleMode::Comparison);
        let child = attaining_subtree_with(
            &t,
            &mut |j, k| {
                h.compare(ExtIndex::Leaf(j), ExtIndex::Leaf(k))
                    .expect("indices in range")
            },
            1,
        )
        .unwrap();
        assert_eq!(child, t.root_children()[0]);
        let ledger = h.ledger_report();
        assert!(ledger.comparison_queries > 0);
        assert_eq!(ledger.value_queries, 0);
    }

    #[test]
    fn construction_rejects_broken_invariants() {
        // Non-alternating gates.
        let s = TreeStructure::max(vec![TreeStructure::max(vec![
            TreeStructure::leaf(1),
            TreeStructure::leaf(2),
        ])]);
        assert!(matches!(
            MinMaxTree::from_structure(&s),
            Err(crate::Error::Contract(_))
        ));
        // Duplicate leaf index.
        let s = TreeStructure::max(vec![TreeStructure::leaf(1), TreeStructure::leaf(1)]);
        assert!(matches!(
            MinMaxTree::from_structure(&s),
            Err(crate::Error::Contract(_))
        ));
        // Gap in leaf indices.
        let s = TreeStructure::max(vec![TreeStructure::leaf(1), TreeStructure::leaf(3)]);
        assert!(matches!(
            MinMaxTree::from_structure(&s),
            Err(crate::Error::Contract(_))
        ));
        // Childless internal node.
        let nodes = vec![Node::Internal {
            gate: Gate::Max,
            children: vec![],
        }];
        assert!(matches!(
            MinMaxTree::new(nodes, 0),
            Err(crate::Error::Contract(_))
        ));
    }

    #[test]
    fn json_wire_format_is_stable() {
        let (t, x) = two_level_max();
        let doc = TreeDocument::from_parts(&t, &x);
        let json = serde_json::to_string(&doc).unwrap();
        assert_eq!(
            json,
            "{\"root\":{\"gate\":\"max\",\"children\":[\
             {\"gate\":\"min\",\"children\":[{\"leaf\":1},{\"leaf\":2}]},\
             {\"gate\":\"min\",\"children\":[{\"leaf\":3},{\"leaf\":4}]}]},\
             \"values\":[3,7,2,5]}"
        );
        let back: TreeDocument = serde_json::from_str(&json).unwrap();
        let (t2, x2) = back.into_parts().unwrap();
        assert_eq!(eval_minmax(&t2, &x2).unwrap(), eval_minmax(&t, &x).unwrap());
    }

    proptest! {
        #[test]
        fn generated_trees_round_trip_through_json(seed in any::<u64>(), leaves in 1usize..40) {
            let spec = TreeShapeSpec {
                shape: Shape::Random { leaves, max_arity: DEFAULT_RANDOM_MAX_ARITY },
                values: ValueDistribution::Uniform { lo: -100, hi: 100 },
                seed,
            };
            let (tree, values) = gen_tree(&spec).unwrap();
            prop_assert_eq!(tree.leaf_count(), leaves);
            let doc = TreeDocument::from_parts(&tree, &values);
            let json = serde_json::to_string(&doc).unwrap();
            let (tree2, values2) = serde_json::from_str::<TreeDocument>(&json)
                .unwrap()
                .into_parts()
                .unwrap();
            prop_assert_eq!(eval_minmax(&tree, &values).unwrap(), eval_minmax(&tree2, &values2).unwrap());
        }

        #[test]
        fn threshold_is_monotone_in_v(seed in any::<u64>(), leaves in 1usize..24) {
            let spec = TreeShapeSpec {
                shape: Shape::Random { leaves, max_arity: 3 },
                values: ValueDistribution::Duplicates { distinct: 5 },
                seed,
            };
            let (tree, values) = gen_tree(&spec).unwrap();
            let mut prev = true;
            for v in 0..=6i64 {
                let cur = eval_threshold(&tree, &values, v).unwrap();
                if v > 0 {
                    prop_assert!(prev || !cur, "threshold became true as v grew");
                }
                prev = cur;
            }
        }

        #[test]
        fn witness_value_equals_tree_value(seed in any::<u64>(), leaves in 1usize..32) {
            let spec = TreeShapeSpec {
                shape: Shape::Random { leaves, max_arity: 4 },
                values: ValueDistribution::Duplicates { distinct: 4 },
                seed,
            };
            let (tree, values) = gen_tree(&spec).unwrap();
            let (value, witness) = eval_minmax(&tree, &values).unwrap();
            prop_assert_eq!(values.value(witness), value);
            // Cross-check the value against the independent naive oracle.
            let structure = tree.to_structure();
            prop_assert_eq!(naive_value(&structure, values.as_slice()), value);
        }
    }
}
