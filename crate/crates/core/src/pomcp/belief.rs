use rand::Rng;

use crate::error::{AvsError, Result};
use crate::pomdp::{Action, SolverConfig, Simulator};

/// Unweighted particle approximation of `B(·, h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState<S> {
    particles: Vec<S>,
}

impl<S> BeliefState<S> {
    pub fn new(particles: Vec<S>) -> Self {
        Self { particles }
    }

    pub fn particles(&self) -> &[S] {
        &self.particles
    }

    pub fn into_particles(self) -> Vec<S> {
        self.particles
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// Uniform draw; one RNG draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<&S> {
        if self.particles.is_empty() {
            return Err(AvsError::EmptyBelief);
        }
        Ok(&self.particles[rng.gen_range(0..self.particles.len())])
    }
}

/// Bookkeeping for one belief update.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UpdateStats {
    pub simulated: usize,
    pub accepted: usize,
    pub reinvigorated: usize,
}

/// Source of fresh particles consistent with the agent's real knowledge.
pub trait Reinvigorator<S> {
    fn draw(&mut self, rng: &mut dyn rand::RngCore) -> Result<S>;
}

impl<S, F> Reinvigorator<S> for F
where
    F: FnMut(&mut dyn rand::RngCore) -> Result<S>,
{
    fn draw(&mut self, rng: &mut dyn rand::RngCore) -> Result<S> {
        self(rng)
    }
}

/// `count` fresh particles from `source`.
pub fn reinvigorate<S>(
    count: usize,
    source: &mut dyn Reinvigorator<S>,
    rng: &mut dyn rand::RngCore,
) -> Result<BeliefState<S>> {
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push(source.draw(rng)?);
    }
    Ok(BeliefState::new(out))
}

/// Monte-Carlo belief update by rejection sampling.
///
/// Draws particles uniformly, pushes them through the simulator with the real
/// action and keeps successors whose observation matches `real_obs`. After
/// `rejection_factor · K` simulator calls the shortfall is filled from
/// `source`. If `source` cannot produce a particle, accepted particles are
/// resampled instead; only a belief with no accepted particle fails.
pub fn update_belief<M, R>(
    sim: &M,
    belief: &BeliefState<M::State>,
    action: Action,
    real_obs: &M::Observation,
    cfg: &SolverConfig,
    source: &mut dyn Reinvigorator<M::State>,
    rng: &mut R,
) -> Result<(BeliefState<M::State>, UpdateStats)>
where
    M: Simulator,
    R: Rng,
{
    if belief.is_empty() {
        return Err(AvsError::EmptyBelief);
    }
    let k = cfg.particles;
    let budget = cfg.rejection_factor.saturating_mul(k);
    let mut stats = UpdateStats::default();
    let mut next = Vec::with_capacity(k);

    while next.len() < k && stats.simulated < budget {
        stats.simulated += 1;
        let mut s = belief.sample(rng)?.clone();
        if !sim.legal_actions(&s).contains(action) {
            continue;
        }
        let (obs, _, _) = sim.step_mut(&mut s, action, rng)?;
        if sim.observations_match(&obs, real_obs) {
            next.push(s);
        }
    }
    stats.accepted = next.len();

    while next.len() < k {
        match source.draw(rng) {
            Ok(s) => {
                next.push(s);
                stats.reinvigorated += 1;
            }
            Err(AvsError::Unsatisfiable) if stats.accepted > 0 => {
                let i = rng.gen_range(0..stats.accepted);
                next.push(next[i].clone());
            }
            Err(e) => return Err(e),
        }
    }
    Ok((BeliefState::new(next), stats))
}
