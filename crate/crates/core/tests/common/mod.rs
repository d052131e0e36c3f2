#![allow(dead_code)]

use avs_core::avs2d::{
    CellValue, Footprint, GridMap2D, ObjectShape, ObservationModel, Placement, Pos, RewardConfig, SearchSim2D,
    SearchState2D,
};
use avs_core::pomcp::BeliefState;
use avs_core::pomdp::{Action, Simulator};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use smallvec::smallvec;

/// `Σ (obs − exp)² / exp` and its upper-tail p-value.
pub fn chi_square(observed: &[f64], expected: &[f64]) -> (f64, f64) {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let stat: f64 = observed.iter().zip(expected).map(|(o, e)| (o - e).powi(2) / e).sum();
    let dist = ChiSquared::new((observed.len() - 1) as f64).unwrap();
    (stat, 1.0 - dist.cdf(stat))
}

pub fn single_cell() -> ObjectShape {
    ObjectShape::new("dot", [Pos::new(0, 0)]).unwrap()
}

/// 3×1 corridor seen through a 1×1 camera, object of one cell.
pub fn corridor_sim() -> SearchSim2D {
    SearchSim2D::new(Footprint::new(1, 1), RewardConfig::default(), ObservationModel::Grid, 1)
}

/// Agent at `agent` has observed its own cell; the rest is unexplored.
pub fn corridor_map(len: usize, agent: i32) -> GridMap2D {
    let mut m = GridMap2D::filled(len, 1, CellValue::Candidate);
    m.set(Pos::new(agent, 0), CellValue::Empty);
    m
}

pub fn corridor_state(len: usize, agent: i32, object: i32) -> SearchState2D {
    let pl: Placement = smallvec![Pos::new(object, 0)];
    SearchState2D::new(corridor_map(len, agent), Pos::new(agent, 0), pl)
}

/// Middle of the 1×3 corridor, `west` particles on the west cell and
/// `east` on the east cell.
pub fn corridor_belief(west: usize, east: usize) -> BeliefState<SearchState2D> {
    let mut ps = vec![corridor_state(3, 1, 0); west];
    ps.extend(std::iter::repeat_n(corridor_state(3, 1, 2), east));
    BeliefState::new(ps)
}

/// Exhaustive expectimax over a deterministic simulator.
///
/// `belief` carries unnormalized weights. Observations are grouped with the
/// simulator's own matching rule; terminal states contribute nothing.
/// Returns the best action and the weighted value, or `(None, 0)` past the
/// horizon.
pub fn expectimax<M: Simulator>(sim: &M, belief: &[(M::State, f64)], depth: usize, gamma: f64) -> (Option<Action>, f64) {
    let live: Vec<&(M::State, f64)> = belief.iter().filter(|(s, _)| !sim.is_terminal(s)).collect();
    if depth == 0 || live.is_empty() {
        return (None, 0.0);
    }
    let legal = sim.legal_actions(&live[0].0);
    let mut best: (Option<Action>, f64) = (None, f64::NEG_INFINITY);
    for a in legal.iter() {
        let mut q = 0.0;
        let mut groups: Vec<(M::Observation, Vec<(M::State, f64)>)> = Vec::new();
        for (s, w) in &live {
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let out = sim.step(s, a, &mut rng).expect("legal action");
            q += w * out.reward;
            match groups.iter_mut().find(|(o, _)| sim.observations_match(o, &out.observation)) {
                Some((_, g)) => g.push((out.next, *w)),
                None => groups.push((out.observation, vec![(out.next, *w)])),
            }
        }
        for (_, g) in &groups {
            q += gamma * expectimax(sim, g, depth - 1, gamma).1;
        }
        if q > best.1 {
            best = (Some(a), q);
        }
    }
    best
}
