//! Repeated spectral bisection into a binary tree of asset clusters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_graph::MarketGraph;
use crate::spectral_cut::{spectral_bisect, CutObjective};

/// How the next leaf to cut is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LeafSelection {
    #[default]
    #[serde(rename = "vertices")]
    MostVertices,
    #[serde(rename = "volume")]
    LargestVolume,
}

impl LeafSelection {
    pub fn as_str(self) -> &'static str {
        match self {
            LeafSelection::MostVertices => "vertices",
            LeafSelection::LargestVolume => "volume",
        }
    }
}

impl std::str::FromStr for LeafSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vertices" | "most_vertices" => Ok(LeafSelection::MostVertices),
            "volume" | "largest_volume" => Ok(LeafSelection::LargestVolume),
            other => Err(Error::InvalidInput(format!("unknown leaf selection `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutPolicy {
    pub max_cuts: usize,
    /// A leaf whose lambda2 exceeds this is left uncut.
    pub lambda2_threshold: Option<f64>,
    pub leaf_selection: LeafSelection,
    /// Smallest cluster a cut may produce; leaves need twice this many
    /// members to be considered.
    pub min_leaf_size: usize,
}

impl Default for CutPolicy {
    fn default() -> Self {
        Self {
            max_cuts: 1,
            lambda2_threshold: None,
            leaf_selection: LeafSelection::MostVertices,
            min_leaf_size: 2,
        }
    }
}

impl CutPolicy {
    pub fn with_max_cuts(max_cuts: usize) -> Self {
        Self {
            max_cuts,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_leaf_size == 0 {
            return Err(Error::InvalidInput("min_leaf_size must be at least 1".into()));
        }
        if let Some(t) = self.lambda2_threshold {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidInput(format!("lambda2 threshold must be positive, got {t}")));
            }
        }
        Ok(())
    }
}

/// Why a leaf that was large enough was not cut.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    Lambda2AboveThreshold,
    UndersizedSide,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub reason: RejectReason,
    /// lambda2 of the cut that was tried.
    pub lambda2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutTreeNode {
    pub id: usize,
    pub parent: Option<usize>,
    /// Global asset indices, ascending.
    pub members: Vec<usize>,
    /// Number of cuts between the root and this node.
    pub depth: usize,
    pub lambda2_at_split: Option<f64>,
    /// Empty for leaves, otherwise exactly two ids; the first child holds the
    /// smallest member.
    pub children: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejected: Option<Rejection>,
}

impl CutTreeNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    MaxCuts,
    /// Every leaf that was large enough had lambda2 above the threshold.
    Lambda2Threshold,
    NoEligibleLeaf,
}

/// Binary tree of portfolio cuts. Node ids equal their position in `nodes`
/// and are assigned in creation order; the root is node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CutTreeRepr")]
pub struct CutTree {
    objective: CutObjective,
    num_assets: usize,
    root_id: usize,
    k_performed: usize,
    nodes: Vec<CutTreeNode>,
    leaf_ids: Vec<usize>,
    /// Internal node ids in the order they were cut.
    split_order: Vec<usize>,
    termination: Option<Termination>,
}

#[derive(Deserialize)]
struct CutTreeRepr {
    objective: CutObjective,
    num_assets: usize,
    root_id: usize,
    k_performed: usize,
    nodes: Vec<CutTreeNode>,
    leaf_ids: Vec<usize>,
    split_order: Vec<usize>,
    termination: Option<Termination>,
}

impl TryFrom<CutTreeRepr> for CutTree {
    type Error = Error;

    fn try_from(r: CutTreeRepr) -> Result<Self> {
        let tree = CutTree {
            objective: r.objective,
            num_assets: r.num_assets,
            root_id: r.root_id,
            k_performed: r.k_performed,
            nodes: r.nodes,
            leaf_ids: r.leaf_ids,
            split_order: r.split_order,
            termination: r.termination,
        };
        tree.validate()?;
        Ok(tree)
    }
}

impl CutTree {
    /// A single root leaf holding assets `0..num_assets`.
    pub fn new(num_assets: usize, objective: CutObjective) -> Result<Self> {
        if num_assets == 0 {
            return Err(Error::InvalidInput("a cut tree needs at least one asset".into()));
        }
        Ok(Self {
            objective,
            num_assets,
            root_id: 0,
            k_performed: 0,
            nodes: vec![CutTreeNode {
                id: 0,
                parent: None,
                members: (0..num_assets).collect(),
                depth: 0,
                lambda2_at_split: None,
                children: Vec::new(),
                rejected: None,
            }],
            leaf_ids: vec![0],
            split_order: Vec::new(),
            termination: None,
        })
    }

    pub fn objective(&self) -> CutObjective {
        self.objective
    }

    pub fn num_assets(&self) -> usize {
        self.num_assets
    }

    pub fn root_id(&self) -> usize {
        self.root_id
    }

    pub fn k_performed(&self) -> usize {
        self.k_performed
    }

    pub fn nodes(&self) -> &[CutTreeNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> Option<&CutTreeNode> {
        self.nodes.get(id)
    }

    /// Leaf ids in left-to-right (depth-first) order.
    pub fn leaf_ids(&self) -> &[usize] {
        &self.leaf_ids
    }

    pub fn leaves(&self) -> impl Iterator<Item = &CutTreeNode> {
        self.leaf_ids.iter().map(|&id| &self.nodes[id])
    }

    pub fn split_order(&self) -> &[usize] {
        &self.split_order
    }

    pub fn termination(&self) -> Option<Termination> {
        self.termination
    }

    /// lambda2 of each executed cut, in execution order.
    pub fn lambda2_trace(&self) -> Vec<f64> {
        self.split_order
            .iter()
            .filter_map(|&id| self.nodes[id].lambda2_at_split)
            .collect()
    }

    /// Replaces leaf `leaf_id` by two children holding `left` and `right`.
    pub fn split_leaf(
        &mut self,
        leaf_id: usize,
        mut left: Vec<usize>,
        mut right: Vec<usize>,
        lambda2: Option<f64>,
    ) -> Result<(usize, usize)> {
        let leaf = self
            .nodes
            .get(leaf_id)
            .ok_or_else(|| Error::InvalidInput(format!("no node {leaf_id}")))?;
        if !leaf.is_leaf() {
            return Err(Error::InvalidInput(format!("node {leaf_id} is not a leaf")));
        }
        if left.is_empty() || right.is_empty() {
            return Err(Error::InvalidPartition(format!("split of leaf {leaf_id} leaves a side empty")));
        }
        left.sort_unstable();
        right.sort_unstable();
        let mut union: Vec<usize> = left.iter().chain(&right).copied().collect();
        union.sort_unstable();
        if union != leaf.members {
            return Err(Error::InvalidPartition(format!(
                "children do not partition the members of leaf {leaf_id}"
            )));
        }
        if right[0] < left[0] {
            std::mem::swap(&mut left, &mut right);
        }
        let depth = leaf.depth + 1;
        let a = self.nodes.len();
        let b = a + 1;
        for (id, members) in [(a, left), (b, right)] {
            self.nodes.push(CutTreeNode {
                id,
                parent: Some(leaf_id),
                members,
                depth,
                lambda2_at_split: None,
                children: Vec::new(),
                rejected: None,
            });
        }
        let node = &mut self.nodes[leaf_id];
        node.children = vec![a, b];
        node.lambda2_at_split = lambda2;
        node.rejected = None;
        self.k_performed += 1;
        self.split_order.push(leaf_id);
        self.leaf_ids = self.collect_leaves();
        Ok((a, b))
    }

    fn collect_leaves(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![self.root_id];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if node.is_leaf() {
                out.push(id);
            } else {
                stack.push(node.children[1]);
                stack.push(node.children[0]);
            }
        }
        out
    }

    /// Checks every structural invariant; used when a tree is deserialized.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Inconsistent(msg));
        if self.nodes.is_empty() || self.root_id != 0 {
            return bad("tree must have root node 0".into());
        }
        let root = &self.nodes[0];
        if root.parent.is_some() || root.depth != 0 || root.members != (0..self.num_assets).collect::<Vec<_>>() {
            return bad("root must hold every asset at depth 0".into());
        }
        let mut internal = 0;
        for (pos, node) in self.nodes.iter().enumerate() {
            if node.id != pos {
                return bad(format!("node at position {pos} has id {}", node.id));
            }
            if node.members.is_empty() || node.members.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!("node {pos} members must be nonempty and strictly ascending"));
            }
            match node.children.as_slice() {
                [] => {}
                &[a, b] => {
                    internal += 1;
                    let (Some(ca), Some(cb)) = (self.nodes.get(a), self.nodes.get(b)) else {
                        return bad(format!("node {pos} has a missing child"));
                    };
                    if a <= pos || b <= pos {
                        return bad(format!("children of node {pos} must be created after it"));
                    }
                    for c in [ca, cb] {
                        if c.parent != Some(pos) || c.depth != node.depth + 1 {
                            return bad(format!("child {} of node {pos} has wrong parent or depth", c.id));
                        }
                    }
                    let mut union: Vec<usize> = ca.members.iter().chain(&cb.members).copied().collect();
                    union.sort_unstable();
                    if union != node.members {
                        return bad(format!("children of node {pos} do not partition its members"));
                    }
                }
                _ => return bad(format!("node {pos} must have zero or two children")),
            }
            if pos != 0 {
                match node.parent.and_then(|p| self.nodes.get(p)) {
                    Some(p) if p.children.contains(&pos) => {}
                    _ => return bad(format!("node {pos} is not listed by its parent")),
                }
            }
        }
        if internal != self.k_performed || self.split_order.len() != internal {
            return bad(format!(
                "k_performed {} does not match {internal} internal nodes",
                self.k_performed
            ));
        }
        let mut sorted_splits = self.split_order.clone();
        sorted_splits.sort_unstable();
        sorted_splits.dedup();
        if sorted_splits.len() != internal || sorted_splits.iter().any(|&id| self.nodes[id].is_leaf()) {
            return bad("split order must list every internal node once".into());
        }
        if self.leaf_ids != self.collect_leaves() {
            return bad("leaf ids do not match the tree".into());
        }
        Ok(())
    }

    /// `sum N_i (N_i + 1) / 2` after each executed cut, starting from the
    /// root alone.
    pub fn edge_budget_trace(&self) -> Vec<u64> {
        let edges = |n: usize| (n * (n + 1) / 2) as u64;
        let mut budget = edges(self.num_assets);
        let mut trace = vec![budget];
        for &id in &self.split_order {
            let node = &self.nodes[id];
            budget -= edges(node.members.len());
            for &c in &node.children {
                budget += edges(self.nodes[c].members.len());
            }
            trace.push(budget);
        }
        trace
    }
}

/// Number of within-cluster edges (self-loops included) the leaves keep:
/// `sum N_i (N_i + 1) / 2`.
pub fn leaf_edge_budget(tree: &CutTree) -> u64 {
    tree.leaves()
        .map(|leaf| {
            let n = leaf.members.len() as u64;
            n * (n + 1) / 2
        })
        .sum()
}

fn induced_volume(graph: &MarketGraph, members: &[usize]) -> f64 {
    let w = graph.weights();
    members
        .iter()
        .map(|&i| members.iter().map(|&j| w[(i, j)]).sum::<f64>())
        .sum()
}

/// The leaf to cut next, or `None` when no leaf has at least
/// `2 * min_leaf_size` members and a clean record. Ties go to the leaf
/// holding the smallest asset index.
pub fn select_leaf(tree: &CutTree, graph: &MarketGraph, policy: &CutPolicy) -> Option<usize> {
    let needed = 2 * policy.min_leaf_size;
    let mut best: Option<(f64, usize, usize)> = None;
    for leaf in tree.leaves() {
        if leaf.rejected.is_some() || leaf.members.len() < needed {
            continue;
        }
        let score = match policy.leaf_selection {
            LeafSelection::MostVertices => leaf.members.len() as f64,
            LeafSelection::LargestVolume => induced_volume(graph, &leaf.members),
        };
        let first = leaf.members[0];
        let better = match best {
            None => true,
            Some((s, f, _)) => score > s || (score == s && first < f),
        };
        if better {
            best = Some((score, first, leaf.id));
        }
    }
    best.map(|(_, _, id)| id)
}

/// Cuts leaves one at a time until `max_cuts` cuts are done or no leaf is
/// eligible. A leaf whose spectral cut has lambda2 above the threshold, or
/// would produce a side smaller than `min_leaf_size`, is marked rejected and
/// skipped from then on; other leaves can still be cut.
pub fn build_cut_tree(graph: &MarketGraph, objective: CutObjective, policy: &CutPolicy) -> Result<CutTree> {
    policy.validate()?;
    let n = graph.num_vertices();
    if n < 2 {
        return Err(Error::InsufficientData {
            what: "cut tree (assets)",
            needed: 2,
            got: n,
        });
    }
    let mut tree = CutTree::new(n, objective)?;
    let termination = loop {
        if tree.k_performed == policy.max_cuts {
            break Termination::MaxCuts;
        }
        let Some(leaf_id) = select_leaf(&tree, graph, policy) else {
            let gated = tree
                .leaves()
                .any(|l| matches!(l.rejected, Some(Rejection { reason: RejectReason::Lambda2AboveThreshold, .. })));
            break if gated {
                Termination::Lambda2Threshold
            } else {
                Termination::NoEligibleLeaf
            };
        };
        let members = tree.nodes[leaf_id].members.clone();
        let partition = graph
            .induced_subgraph(&members)
            .and_then(|sub| spectral_bisect(&sub, objective))
            .map_err(|e| Error::LeafSplit {
                leaf_id,
                source: Box::new(e),
            })?;
        let lambda2 = partition.lambda2.unwrap_or(0.0);

        let reason = if policy.lambda2_threshold.is_some_and(|tau| lambda2 > tau) {
            Some(RejectReason::Lambda2AboveThreshold)
        } else if partition.n1 < policy.min_leaf_size || partition.n2 < policy.min_leaf_size {
            Some(RejectReason::UndersizedSide)
        } else {
            None
        };
        if let Some(reason) = reason {
            tree.nodes[leaf_id].rejected = Some(Rejection { reason, lambda2 });
            continue;
        }

        let mut left = Vec::with_capacity(partition.n1);
        let mut right = Vec::with_capacity(partition.n2);
        for (local, &side) in partition.side_of.iter().enumerate() {
            if side == 1 {
                left.push(members[local]);
            } else {
                right.push(members[local]);
            }
        }
        tree.split_leaf(leaf_id, left, right, Some(lambda2))?;
    };
    tree.termination = Some(termination);
    Ok(tree)
}
