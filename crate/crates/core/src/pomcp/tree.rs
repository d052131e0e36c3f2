use crate::error::{AvsError, Result};
use crate::pomdp::{Action, ActionSet, History};

pub type NodeId = usize;

/// Statistics for one action edge `ha`.
#[derive(Debug, Clone)]
pub struct ActionChild<O> {
    pub visits: u32,
    pub value: f64,
    /// Observation branches `hao`, in creation order.
    pub branches: Vec<(O, NodeId)>,
    returns: Option<Vec<f64>>,
}

impl<O> ActionChild<O> {
    fn new(record: bool) -> Self {
        Self {
            visits: 0,
            value: 0.0,
            branches: Vec::new(),
            returns: record.then(Vec::new),
        }
    }

    /// Every return backed up through this edge, when recording is enabled.
    pub fn recorded_returns(&self) -> Option<&[f64]> {
        self.returns.as_deref()
    }
}

/// Node `T(h)` for one history.
#[derive(Debug, Clone)]
pub struct TreeNode<S, O> {
    pub visits: u32,
    pub children: [ActionChild<O>; 4],
    /// States that passed through this node during simulation.
    pub particles: Vec<S>,
    parent: Option<(NodeId, Action, usize)>,
}

impl<S, O> TreeNode<S, O> {
    fn new(parent: Option<(NodeId, Action, usize)>, record: bool) -> Self {
        Self {
            visits: 0,
            children: std::array::from_fn(|_| ActionChild::new(record)),
            particles: Vec::new(),
            parent,
        }
    }

    pub fn child(&self, a: Action) -> &ActionChild<O> {
        &self.children[a.index()]
    }
}

/// Arena of history nodes. Node 0 is the root (empty relative history).
#[derive(Debug, Clone)]
pub struct SearchTree<S, O> {
    nodes: Vec<TreeNode<S, O>>,
    record: bool,
}

impl<S, O: Clone> SearchTree<S, O> {
    pub const ROOT: NodeId = 0;

    pub fn new() -> Self {
        Self::build(false)
    }

    /// Tree that keeps every backed-up return per edge, for auditing.
    pub fn with_recording() -> Self {
        Self::build(true)
    }

    fn build(record: bool) -> Self {
        Self {
            nodes: vec![TreeNode::new(None, record)],
            record,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &TreeNode<S, O> {
        &self.nodes[id]
    }

    pub fn root(&self) -> &TreeNode<S, O> {
        &self.nodes[Self::ROOT]
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &TreeNode<S, O>)> {
        self.nodes.iter().enumerate()
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id].parent.map(|(p, _, _)| p)
    }

    /// First branch under `ha` whose observation satisfies `matches`.
    pub fn find_branch(&self, id: NodeId, a: Action, matches: impl Fn(&O) -> bool) -> Option<NodeId> {
        self.nodes[id].children[a.index()]
            .branches
            .iter()
            .find(|(o, _)| matches(o))
            .map(|(_, n)| *n)
    }

    /// Create the node for history `hao` with all action children initialized.
    pub fn add_branch(&mut self, id: NodeId, a: Action, obs: O) -> NodeId {
        let new_id = self.nodes.len();
        let slot = self.nodes[id].children[a.index()].branches.len();
        self.nodes.push(TreeNode::new(Some((id, a, slot)), self.record));
        self.nodes[id].children[a.index()].branches.push((obs, new_id));
        new_id
    }

    /// Incremental mean update `V(ha) += (R - V(ha)) / N(ha)`.
    pub fn backup(&mut self, id: NodeId, a: Action, ret: f64) {
        let node = &mut self.nodes[id];
        node.visits += 1;
        let child = &mut node.children[a.index()];
        child.visits += 1;
        child.value += (ret - child.value) / child.visits as f64;
        if let Some(rs) = child.returns.as_mut() {
            rs.push(ret);
        }
    }

    pub fn add_particle(&mut self, id: NodeId, state: S) {
        self.nodes[id].particles.push(state);
    }

    /// History of `id` relative to the root.
    pub fn history(&self, id: NodeId) -> History<O> {
        let mut rev = Vec::new();
        let mut cur = id;
        while let Some((p, a, slot)) = self.nodes[cur].parent {
            let obs = self.nodes[p].children[a.index()].branches[slot].0.clone();
            rev.push((a, obs));
            cur = p;
        }
        let mut h = History::new();
        for (a, o) in rev.into_iter().rev() {
            h.push(a, o);
        }
        h
    }
}

impl<S, O: Clone> Default for SearchTree<S, O> {
    fn default() -> Self {
        Self::new()
    }
}

/// UCB1 selection over `legal`.
///
/// Unvisited children win outright (first in action order); otherwise the
/// argmax of `V(ha) + c·sqrt(ln N(h) / N(ha))` with ties kept by action order.
pub fn uct_select<S, O>(node: &TreeNode<S, O>, c: f64, legal: ActionSet) -> Result<Action> {
    if legal.is_empty() {
        return Err(AvsError::Blocked);
    }
    if let Some(a) = legal.iter().find(|a| node.child(*a).visits == 0) {
        return Ok(a);
    }
    let ln_n = (node.visits.max(1) as f64).ln();
    let mut best: Option<(Action, f64)> = None;
    for a in legal.iter() {
        let ch = node.child(a);
        let score = ch.value + c * (ln_n / ch.visits as f64).sqrt();
        if best.map_or(true, |(_, s)| score > s) {
            best = Some((a, score));
        }
    }
    Ok(best.expect("legal set is non-empty").0)
}

/// Greedy argmax of `V(ha)` over `legal`, ties by action order.
pub fn greedy_action<S, O>(node: &TreeNode<S, O>, legal: ActionSet) -> Result<Action> {
    let mut best: Option<(Action, f64)> = None;
    for a in legal.iter() {
        let v = node.child(a).value;
        if best.map_or(true, |(_, s)| v > s) {
            best = Some((a, v));
        }
    }
    best.map(|(a, _)| a).ok_or(AvsError::Blocked)
}
