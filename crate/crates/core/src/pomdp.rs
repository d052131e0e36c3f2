//! Generic POMDP contracts shared by the planner and the environments.
//!
//! Environments are black boxes: the planner never sees transition or
//! observation tables, only a [`Simulator`] that draws `(s', o, r)` for a
//! given `(s, a)`.

use std::fmt;

use rand::Rng;

use crate::error::{AvsError, Result};

/// Cardinal move by one grid cell. `North` decreases `y`.
///
/// The declaration order is the global tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    North,
    East,
    South,
    West,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::North, Action::East, Action::South, Action::West];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Action {
        Action::ALL[i]
    }

    /// Unit offset `(dx, dy)`.
    pub fn offset(self) -> (i32, i32) {
        match self {
            Action::North => (0, -1),
            Action::East => (1, 0),
            Action::South => (0, 1),
            Action::West => (-1, 0),
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Action::North => "NORTH",
            Action::East => "EAST",
            Action::South => "SOUTH",
            Action::West => "WEST",
        };
        f.write_str(s)
    }
}

/// Subset of [`Action::ALL`], iterated in tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct ActionSet(u8);

impl ActionSet {
    pub const EMPTY: ActionSet = ActionSet(0);
    pub const FULL: ActionSet = ActionSet(0b1111);

    pub fn insert(&mut self, a: Action) {
        self.0 |= 1 << a.index();
    }

    pub fn remove(&mut self, a: Action) {
        self.0 &= !(1 << a.index());
    }

    pub fn contains(self, a: Action) -> bool {
        self.0 & (1 << a.index()) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Action> {
        Action::ALL.into_iter().filter(move |a| self.contains(*a))
    }

    /// The `n`-th member in tie-break order.
    pub fn nth(self, n: usize) -> Option<Action> {
        self.iter().nth(n)
    }

    /// Uniform draw; consumes exactly one RNG draw when non-empty.
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> Option<Action> {
        let n = self.len();
        if n == 0 {
            return None;
        }
        self.nth(rng.gen_range(0..n))
    }
}

impl FromIterator<Action> for ActionSet {
    fn from_iter<I: IntoIterator<Item = Action>>(iter: I) -> Self {
        let mut set = ActionSet::EMPTY;
        for a in iter {
            set.insert(a);
        }
        set
    }
}

/// Append-only sequence of `(action, observation)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct History<O> {
    steps: Vec<(Action, O)>,
}

impl<O> Default for History<O> {
    fn default() -> Self {
        Self { steps: Vec::new() }
    }
}

impl<O> History<O> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, action: Action, obs: O) {
        self.steps.push((action, obs));
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[(Action, O)] {
        &self.steps
    }

    pub fn last(&self) -> Option<&(Action, O)> {
        self.steps.last()
    }

    /// True when `self` is `other` followed by exactly one more pair.
    pub fn extends_by_one(&self, other: &History<O>) -> bool
    where
        O: PartialEq,
    {
        self.steps.len() == other.steps.len() + 1 && self.steps[..other.steps.len()] == other.steps[..]
    }
}

/// `Σ_k γ^k r_k` over the sequence.
pub fn discounted_return(rewards: &[f64], gamma: f64) -> f64 {
    // Horner form keeps γ = 0 exact (0^0 = 1 for the first term).
    rewards.iter().rev().fold(0.0, |acc, r| r + gamma * acc)
}

/// One draw `(s', o, r)` from the generative model plus the terminal flag.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome<S, O> {
    pub next: S,
    pub observation: O,
    pub reward: f64,
    pub terminal: bool,
}

/// Planner parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Simulations per decision.
    pub n_sim: usize,
    /// Particle count.
    pub particles: usize,
    /// UCB1 exploration constant, on the scale of the return range.
    pub exploration: f64,
    pub gamma: f64,
    /// Simulations stop once `gamma^depth < epsilon`.
    pub epsilon: f64,
    /// Hard cap on rollout depth.
    pub max_depth: usize,
    pub seed: u64,
    /// Simulator calls allowed per accepted particle before reinvigoration.
    pub rejection_factor: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            n_sim: 50,
            particles: 200,
            exploration: 100.0,
            gamma: 0.95,
            epsilon: 0.01,
            max_depth: 100,
            seed: 0,
            rejection_factor: 100,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(AvsError::Config(m.to_string()));
        if self.n_sim < 1 {
            return bad("n_sim must be >= 1");
        }
        if self.particles < 1 {
            return bad("particle count must be >= 1");
        }
        if !(self.exploration >= 0.0) {
            return bad("exploration constant must be >= 0");
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1)");
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad("epsilon must lie in (0, 1)");
        }
        if self.rejection_factor < 1 {
            return bad("rejection factor must be >= 1");
        }
        Ok(())
    }

    /// True when the discount horizon has been reached at `depth`.
    pub fn beyond_horizon(&self, depth: usize) -> bool {
        self.gamma.powi(depth as i32) < self.epsilon
    }
}

/// Black-box generative model `G(s, a)`.
///
/// Implementations must derive observations from the input state only, never
/// from a hidden ground truth, and must be deterministic given the RNG stream.
pub trait Simulator {
    type State: Clone;
    type Observation: Clone + fmt::Debug;

    fn legal_actions(&self, state: &Self::State) -> ActionSet;

    /// Advance `state` in place, returning `(observation, reward, terminal)`.
    fn step_mut<R: Rng + ?Sized>(
        &self,
        state: &mut Self::State,
        action: Action,
        rng: &mut R,
    ) -> Result<(Self::Observation, f64, bool)>;

    fn is_terminal(&self, state: &Self::State) -> bool;

    /// Observation equivalence used by the tree and by belief updates.
    fn observations_match(&self, a: &Self::Observation, b: &Self::Observation) -> bool;

    fn step<R: Rng + ?Sized>(
        &self,
        state: &Self::State,
        action: Action,
        rng: &mut R,
    ) -> Result<StepOutcome<Self::State, Self::Observation>> {
        let mut next = state.clone();
        let (observation, reward, terminal) = self.step_mut(&mut next, action, rng)?;
        Ok(StepOutcome {
            next,
            observation,
            reward,
            terminal,
        })
    }
}
