//! Partially observable Monte-Carlo planning.
//!
//! A fresh [`SearchTree`] is grown for every real decision: `n_sim`
//! simulations, each starting from a state drawn uniformly from the current
//! belief, descend the tree with UCB1, expand one node per new history and
//! estimate it with a uniform-random rollout.

mod belief;
mod tree;

pub use belief::{reinvigorate, update_belief, BeliefState, Reinvigorator, UpdateStats};
pub use tree::{greedy_action, uct_select, ActionChild, NodeId, SearchTree, TreeNode};

use rand::Rng;

use crate::error::{AvsError, Result};
use crate::pomdp::{Action, SolverConfig, Simulator};

/// Result of one planning call.
#[derive(Debug)]
pub struct SearchOutput<S, O> {
    pub action: Action,
    pub tree: SearchTree<S, O>,
}

/// POMCP planner bound to a simulator and a configuration.
pub struct Pomcp<'a, M: Simulator> {
    sim: &'a M,
    cfg: &'a SolverConfig,
    record: bool,
}

impl<'a, M: Simulator> Pomcp<'a, M> {
    pub fn new(sim: &'a M, cfg: &'a SolverConfig) -> Self {
        Self { sim, cfg, record: false }
    }

    /// Keep every backed-up return in the tree (see [`ActionChild::recorded_returns`]).
    pub fn recording(mut self) -> Self {
        self.record = true;
        self
    }

    pub fn config(&self) -> &SolverConfig {
        self.cfg
    }

    /// Run `n_sim` simulations from the belief and return `argmax_a V(ha)`
    /// over the root's legal actions.
    pub fn search<R: Rng>(
        &self,
        belief: &BeliefState<M::State>,
        rng: &mut R,
    ) -> Result<SearchOutput<M::State, M::Observation>> {
        let first = belief.particles().first().ok_or(AvsError::EmptyBelief)?;
        let legal = self.sim.legal_actions(first);
        if legal.is_empty() {
            return Err(AvsError::Blocked);
        }
        // Root is pre-expanded so every simulation backs up through it.
        let mut tree = if self.record {
            SearchTree::with_recording()
        } else {
            SearchTree::new()
        };
        for _ in 0..self.cfg.n_sim {
            let mut s = belief.sample(rng)?.clone();
            self.simulate(&mut s, SearchTree::<M::State, M::Observation>::ROOT, 0, &mut tree, rng)?;
        }
        let action = greedy_action(tree.root(), legal)?;
        Ok(SearchOutput { action, tree })
    }

    /// One descent from `node` (which must already exist in the tree).
    /// `state` is advanced in place.
    pub fn simulate<R: Rng>(
        &self,
        state: &mut M::State,
        node: NodeId,
        depth: usize,
        tree: &mut SearchTree<M::State, M::Observation>,
        rng: &mut R,
    ) -> Result<f64> {
        if self.cfg.beyond_horizon(depth) || self.sim.is_terminal(state) {
            return Ok(0.0);
        }
        let legal = self.sim.legal_actions(state);
        if legal.is_empty() {
            return Ok(0.0);
        }
        let action = uct_select(tree.node(node), self.cfg.exploration, legal)?;
        let before = state.clone();
        let (obs, reward, terminal) = self.sim.step_mut(state, action, rng)?;

        let mut future = 0.0;
        if !terminal && !self.cfg.beyond_horizon(depth + 1) {
            let sim = self.sim;
            match tree.find_branch(node, action, |o| sim.observations_match(o, &obs)) {
                Some(child) => future = self.simulate(state, child, depth + 1, tree, rng)?,
                None => {
                    tree.add_branch(node, action, obs);
                    future = self.rollout(state, depth + 1, rng)?;
                }
            }
        }
        let ret = reward + self.cfg.gamma * future;
        tree.add_particle(node, before);
        tree.backup(node, action, ret);
        Ok(ret)
    }

    /// Uniform-random rollout from `depth`; `state` is advanced in place.
    ///
    /// Stops at the discount horizon, at `max_depth`, on a terminal state or
    /// when no action is legal. A state that is already terminal yields 0.
    pub fn rollout<R: Rng>(&self, state: &mut M::State, depth: usize, rng: &mut R) -> Result<f64> {
        let mut ret = 0.0;
        let mut discount = 1.0;
        let mut d = depth;
        while !self.cfg.beyond_horizon(d) && d < self.cfg.max_depth && !self.sim.is_terminal(state) {
            let Some(action) = self.sim.legal_actions(state).sample(rng) else {
                break;
            };
            let (_, reward, terminal) = self.sim.step_mut(state, action, rng)?;
            ret += discount * reward;
            discount *= self.cfg.gamma;
            d += 1;
            if terminal {
                break;
            }
        }
        Ok(ret)
    }
}
