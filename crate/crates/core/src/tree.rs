//! Conditional riskiness on finite event trees.
//!
//! A node at depth `s` stands for an atom of the information available at
//! time `s`. Its conditional law is the distribution of terminal payoffs
//! below it, and its riskiness is the riskiness of that law.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, RiskError};
use crate::gamble::{neumaier_sum, DiscreteGamble, Gamble, PROBABILITY_TOLERANCE};
use crate::phi;
use crate::measure::{riskiness, Regime};

/// Relative tolerance used when comparing riskiness values across trees.
pub const COMPARISON_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    children: Option<Vec<RawNode>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    payoff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf { p: f64, payoff: f64 },
    Branch { p: f64, children: Vec<Node> },
}

impl Node {
    /// One-step probability of reaching this node from its parent.
    pub fn p(&self) -> f64 {
        match self {
            Node::Leaf { p, .. } | Node::Branch { p, .. } => *p,
        }
    }

    pub fn children(&self) -> &[Node] {
        match self {
            Node::Leaf { .. } => &[],
            Node::Branch { children, .. } => children,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Leaf { .. })
    }

    fn leaves(&self, weight: f64, out: &mut Vec<(f64, f64)>) {
        match self {
            Node::Leaf { payoff, .. } => out.push((*payoff, weight)),
            Node::Branch { children, .. } => {
                for c in children {
                    c.leaves(weight * c.p(), out);
                }
            }
        }
    }

    fn to_raw(&self, is_root: bool) -> RawNode {
        let p = (!is_root).then(|| self.p());
        match self {
            Node::Leaf { payoff, .. } => RawNode {
                p,
                children: None,
                payoff: Some(*payoff),
            },
            Node::Branch { children, .. } => RawNode {
                p,
                children: Some(children.iter().map(|c| c.to_raw(false)).collect()),
                payoff: None,
            },
        }
    }
}

/// Address of a node: child indices from the root, shown as `root/0/1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct NodeId(pub Vec<usize>);

impl NodeId {
    pub fn root() -> Self {
        NodeId(Vec::new())
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn child(&self, i: usize) -> Self {
        let mut v = self.0.clone();
        v.push(i);
        NodeId(v)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("root")?;
        for i in &self.0 {
            write!(f, "/{i}")?;
        }
        Ok(())
    }
}

impl FromStr for NodeId {
    type Err = RiskError;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split('/');
        if parts.next() != Some("root") {
            return Err(RiskError::Parse(format!("node path must start with 'root': {s}")));
        }
        parts
            .map(|p| {
                p.parse::<usize>()
                    .map_err(|_| RiskError::Parse(format!("bad node path segment '{p}' in {s}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(NodeId)
    }
}

impl Serialize for NodeId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// A finite event tree with payoffs at the leaves, all at depth `horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct GambleTree {
    root: Node,
    horizon: usize,
}

impl GambleTree {
    pub fn new(root: Node) -> Result<Self> {
        let mut horizon = None;
        check_node(&root, &NodeId::root(), &mut horizon)?;
        let horizon = horizon.unwrap_or(0);
        if horizon == 0 {
            return Err(RiskError::InvalidTree("the root must have children".into()));
        }
        Ok(GambleTree { root, horizon })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: RawNode = serde_json::from_str(s)?;
        if let Some(p) = raw.p {
            if p != 1.0 {
                return Err(RiskError::InvalidTree(format!(
                    "root probability must be 1 when given, got {p}"
                )));
            }
        }
        GambleTree::new(from_raw(raw, 1.0, &NodeId::root())?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.root.to_raw(true)).expect("tree serializes")
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn node(&self, id: &NodeId) -> Result<&Node> {
        let mut node = &self.root;
        for &i in &id.0 {
            node = node
                .children()
                .get(i)
                .ok_or_else(|| RiskError::InvalidTree(format!("no node {id}")))?;
        }
        Ok(node)
    }

    /// Ids of all nodes at `depth`, in lexicographic order.
    pub fn nodes_at_depth(&self, depth: usize) -> Vec<NodeId> {
        let mut level = vec![NodeId::root()];
        for _ in 0..depth {
            level = level
                .iter()
                .flat_map(|id| {
                    let n = self.node(id).map(|n| n.children().len()).unwrap_or(0);
                    (0..n).map(move |i| id.child(i))
                })
                .collect();
        }
        level
    }

    /// Same shape with every payoff multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<GambleTree> {
        fn go(n: &Node, c: f64) -> Node {
            match n {
                Node::Leaf { p, payoff } => Node::Leaf {
                    p: *p,
                    payoff: c * payoff,
                },
                Node::Branch { p, children } => Node::Branch {
                    p: *p,
                    children: children.iter().map(|ch| go(ch, c)).collect(),
                },
            }
        }
        GambleTree::new(go(&self.root, c))
    }

    fn same_shape(&self, other: &GambleTree) -> bool {
        fn go(a: &Node, b: &Node) -> bool {
            a.is_leaf() == b.is_leaf()
                && a.children().len() == b.children().len()
                && a.children().iter().zip(b.children()).all(|(x, y)| go(x, y))
        }
        go(&self.root, &other.root)
    }
}

fn from_raw(raw: RawNode, p: f64, id: &NodeId) -> Result<Node> {
    match (raw.children, raw.payoff) {
        (Some(children), None) => {
            let children = children
                .into_iter()
                .enumerate()
                .map(|(i, c)| {
                    let cid = id.child(i);
                    let cp = c
                        .p
                        .ok_or_else(|| RiskError::InvalidTree(format!("{cid} has no 'p'")))?;
                    from_raw(c, cp, &cid)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Node::Branch { p, children })
        }
        (None, Some(payoff)) => Ok(Node::Leaf { p, payoff }),
        _ => Err(RiskError::InvalidTree(format!(
            "{id} needs exactly one of 'children' or 'payoff'"
        ))),
    }
}

fn check_node(node: &Node, id: &NodeId, horizon: &mut Option<usize>) -> Result<()> {
    match node {
        Node::Leaf { payoff, .. } => {
            if !payoff.is_finite() {
                return Err(RiskError::InvalidTree(format!("{id} has a non-finite payoff")));
            }
            match *horizon {
                None => *horizon = Some(id.depth()),
                Some(h) if h != id.depth() => {
                    return Err(RiskError::InvalidTree(format!(
                        "leaf {id} is at depth {}, expected {h}",
                        id.depth()
                    )))
                }
                _ => {}
            }
        }
        Node::Branch { children, .. } => {
            if children.is_empty() {
                return Err(RiskError::InvalidTree(format!("{id} has no children")));
            }
            for (i, c) in children.iter().enumerate() {
                let p = c.p();
                if !(p > 0.0 && p <= 1.0) {
                    return Err(RiskError::InvalidTree(format!(
                        "{} has probability {p} outside (0, 1]",
                        id.child(i)
                    )));
                }
            }
            let total = neumaier_sum(children.iter().map(Node::p));
            if (total - 1.0).abs() > PROBABILITY_TOLERANCE {
                return Err(RiskError::InvalidTree(format!(
                    "children of {id} have probabilities summing to {total}"
                )));
            }
            for (i, c) in children.iter().enumerate() {
                check_node(c, &id.child(i), horizon)?;
            }
        }
    }
    Ok(())
}

/// Distribution of terminal payoffs below `id`, given that `id` is reached.
pub fn conditional_law(tree: &GambleTree, id: &NodeId) -> Result<Vec<(f64, f64)>> {
    let node = tree.node(id)?;
    if node.is_leaf() {
        return Err(RiskError::InvalidTree(format!("{id} is terminal")));
    }
    let mut out = Vec::new();
    node.leaves(1.0, &mut out);
    let total = neumaier_sum(out.iter().map(|o| o.1));
    for o in &mut out {
        o.1 /= total;
    }
    Ok(out)
}

/// `L_s`: largest loss among the terminal descendants of `id`.
pub fn conditional_max_loss(tree: &GambleTree, id: &NodeId) -> Result<f64> {
    Ok(-conditional_law(tree, id)?
        .iter()
        .map(|o| o.0)
        .fold(f64::INFINITY, f64::min))
}

fn conditional_gamble(tree: &GambleTree, id: &NodeId) -> Result<DiscreteGamble> {
    DiscreteGamble::new(conditional_law(tree, id)?).map_err(|e| match e {
        RiskError::NotAGamble { reason } => RiskError::NotConditionalGamble {
            node: id.to_string(),
            reason,
        },
        other => other,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeRiskiness {
    pub node: NodeId,
    pub depth: usize,
    pub rho: f64,
    pub regime: Regime,
    pub max_loss: f64,
    /// `|E[log(1 + X / rho) | node]|` in the equation-solved regime.
    pub residual: f64,
}

/// `rho_s` at `id`: the root of the conditional equation, or `L_s` where the
/// conditional `phi` at `1/L_s` is nonnegative.
pub fn conditional_riskiness(tree: &GambleTree, id: &NodeId) -> Result<NodeRiskiness> {
    let g = Gamble::Discrete(conditional_gamble(tree, id)?);
    let r = riskiness(&g)?;
    let residual = match r.regime {
        Regime::EquationSolved => phi::phi(&g, r.lambda)?.value.abs(),
        Regime::MaximalLoss => 0.0,
    };
    Ok(NodeRiskiness {
        node: id.clone(),
        depth: id.depth(),
        rho: r.rho,
        regime: r.regime,
        max_loss: g.max_loss(),
        residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskinessProcess {
    pub horizon: usize,
    /// Non-terminal nodes, depth by depth.
    pub nodes: Vec<NodeRiskiness>,
}

impl RiskinessProcess {
    pub fn at_depth(&self, depth: usize) -> impl Iterator<Item = &NodeRiskiness> {
        self.nodes.iter().filter(move |n| n.depth == depth)
    }

    pub fn get(&self, id: &NodeId) -> Option<&NodeRiskiness> {
        self.nodes.iter().find(|n| &n.node == id)
    }
}

pub fn riskiness_process(tree: &GambleTree) -> Result<RiskinessProcess> {
    let mut nodes = Vec::new();
    for depth in 0..tree.horizon() {
        for id in tree.nodes_at_depth(depth) {
            nodes.push(conditional_riskiness(tree, &id)?);
        }
    }
    Ok(RiskinessProcess {
        horizon: tree.horizon(),
        nodes,
    })
}

/// A depth `s` where `first` is at least as risky as `second` at every node
/// of depth `s + 1` but strictly less risky at `node`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    /// `"a-b"` when `a` is the tree ranked riskier tomorrow, `"b-a"` otherwise.
    pub order: String,
    pub depth: usize,
    pub node: NodeId,
    pub rho_first: f64,
    pub rho_second: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeConsistencyReport {
    pub process_a: RiskinessProcess,
    pub process_b: RiskinessProcess,
    pub violations: Vec<Violation>,
}

impl TimeConsistencyReport {
    pub fn violated(&self) -> bool {
        !self.violations.is_empty()
    }
}

fn at_least(x: f64, y: f64) -> bool {
    x >= y - COMPARISON_TOLERANCE * x.abs().max(y.abs())
}

fn less(x: f64, y: f64) -> bool {
    !at_least(x, y)
}

fn witnesses(
    first: &RiskinessProcess,
    second: &RiskinessProcess,
    order: &str,
) -> Vec<Violation> {
    let mut out = Vec::new();
    for s in 0..first.horizon.saturating_sub(1) {
        let tomorrow = first
            .at_depth(s + 1)
            .zip(second.at_depth(s + 1))
            .all(|(a, b)| at_least(a.rho, b.rho));
        if !tomorrow {
            continue;
        }
        for (a, b) in first.at_depth(s).zip(second.at_depth(s)) {
            if less(a.rho, b.rho) {
                out.push(Violation {
                    order: order.to_string(),
                    depth: s,
                    node: a.node.clone(),
                    rho_first: a.rho,
                    rho_second: b.rho,
                });
            }
        }
    }
    out
}

/// Searches both orderings of `(a, b)` for a depth where the ranking at
/// every node tomorrow is reversed at some node today.
pub fn time_consistency_check(a: &GambleTree, b: &GambleTree) -> Result<TimeConsistencyReport> {
    if !a.same_shape(b) {
        return Err(RiskError::ShapeMismatch(
            "trees must have the same branching at every node".into(),
        ));
    }
    let pa = riskiness_process(a)?;
    let pb = riskiness_process(b)?;
    let mut violations = witnesses(&pa, &pb, "a-b");
    violations.extend(witnesses(&pb, &pa, "b-a"));
    Ok(TimeConsistencyReport {
        process_a: pa,
        process_b: pb,
        violations,
    })
}
