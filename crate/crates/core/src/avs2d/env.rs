use std::str::FromStr;

use rand::{Rng, RngCore};

use super::map::{CellValue, Footprint, GridMap2D, Pos};
use super::observe::{render_window, BorderNoise, ObservationGrid2D};
use super::shape::{consistent_placements, is_connected4, placements_where, ObjectShape, Placement};
use super::sim::SearchState2D;
use crate::error::{AvsError, Result};
use crate::pomcp::{BeliefState, Reinvigorator};
use crate::pomdp::Action;

/// Static scene: true cell values (`Empty`, `Object`, `OtherObject`,
/// `Blocked`), the object placement and the agent start.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene2D {
    pub truth: GridMap2D,
    pub object: Placement,
    pub shape: ObjectShape,
    pub agent_start: Pos,
}

/// Parsed ASCII map file.
///
/// `.` floor, `#` blocked, `X` other object, `O` object cell, `A` agent
/// start (on floor).
#[derive(Debug, Clone, PartialEq)]
pub struct MapFile {
    pub truth: GridMap2D,
    pub object: Placement,
    pub agent_start: Option<Pos>,
}

impl FromStr for MapFile {
    type Err = AvsError;

    fn from_str(text: &str) -> Result<Self> {
        let rows: Vec<&str> = text
            .lines()
            .map(|l| l.trim_end())
            .filter(|l| !l.is_empty())
            .collect();
        if rows.is_empty() {
            return Err(AvsError::Map("map file is empty".into()));
        }
        let width = rows[0].chars().count();
        let mut truth = GridMap2D::filled(width, rows.len(), CellValue::Empty);
        let mut object: Placement = Placement::new();
        let mut agent = None;
        for (y, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(AvsError::Map(format!("row {} has length {}, expected {width}", y + 1, row.chars().count())));
            }
            for (x, c) in row.chars().enumerate() {
                let p = Pos::new(x as i32, y as i32);
                let v = match c {
                    '.' => CellValue::Empty,
                    '#' => CellValue::Blocked,
                    'X' => CellValue::OtherObject,
                    'O' => {
                        object.push(p);
                        CellValue::Object
                    }
                    'A' => {
                        if agent.replace(p).is_some() {
                            return Err(AvsError::Map("more than one agent start".into()));
                        }
                        CellValue::Empty
                    }
                    other => return Err(AvsError::Map(format!("unknown map symbol '{other}' at {p}"))),
                };
                truth.set(p, v);
            }
        }
        if object.is_empty() {
            return Err(AvsError::Map("map has no object cells".into()));
        }
        if !is_connected4(&object) {
            return Err(AvsError::Map("object cells are not 4-connected".into()));
        }
        object.sort();
        Ok(MapFile {
            truth,
            object,
            agent_start: agent,
        })
    }
}

impl Scene2D {
    /// Open `width × height` floor with `shape` placed uniformly at random and
    /// a uniformly random agent start.
    ///
    /// Draw order: object placement, then agent start.
    pub fn random<R: Rng + ?Sized>(width: usize, height: usize, shape: &ObjectShape, rng: &mut R) -> Result<Self> {
        Self::random_on(GridMap2D::filled(width, height, CellValue::Empty), shape, rng)
    }

    /// Random object and agent placement on a given floor (`Empty`,
    /// `Blocked`, `OtherObject` cells).
    pub fn random_on<R: Rng + ?Sized>(floor: GridMap2D, shape: &ObjectShape, rng: &mut R) -> Result<Self> {
        let options = placements_where(floor.width(), floor.height(), shape, |p| floor.get(p) == Some(CellValue::Empty));
        if options.is_empty() {
            return Err(AvsError::Map("object does not fit on the floor".into()));
        }
        let object = options[rng.gen_range(0..options.len())].clone();
        let mut truth = floor;
        for p in &object {
            truth.set(*p, CellValue::Object);
        }
        let agent_start = random_free_cell(&truth, rng)?;
        Ok(Self {
            truth,
            object,
            shape: shape.clone(),
            agent_start,
        })
    }

    /// Scene from a map file. A missing `A` start is drawn uniformly.
    pub fn from_map_file<R: Rng + ?Sized>(file: &MapFile, rng: &mut R) -> Result<Self> {
        let shape = ObjectShape::new("map", file.object.iter().copied())?;
        let agent_start = match file.agent_start {
            Some(p) => p,
            None => random_free_cell(&file.truth, rng)?,
        };
        Ok(Self {
            truth: file.truth.clone(),
            object: file.object.clone(),
            shape,
            agent_start,
        })
    }
}

fn random_free_cell<R: Rng + ?Sized>(map: &GridMap2D, rng: &mut R) -> Result<Pos> {
    let free: Vec<Pos> = map.positions().filter(|p| map.get(*p) != Some(CellValue::Blocked)).collect();
    if free.is_empty() {
        return Err(AvsError::Map("no free cell for the agent".into()));
    }
    Ok(free[rng.gen_range(0..free.len())])
}

/// Ground-truth episode environment for the search stage.
#[derive(Debug, Clone)]
pub struct GroundTruthEnv {
    scene: Scene2D,
    agent: Pos,
    footprint: Footprint,
    noise: BorderNoise,
    steps: usize,
    max_steps: usize,
}

impl GroundTruthEnv {
    pub fn new(scene: Scene2D, footprint: Footprint, p_noise: f64, max_steps: usize) -> Self {
        let agent = scene.agent_start;
        Self {
            scene,
            agent,
            footprint,
            noise: BorderNoise { p: p_noise },
            steps: 0,
            max_steps,
        }
    }

    pub fn scene(&self) -> &Scene2D {
        &self.scene
    }

    pub fn agent(&self) -> Pos {
        self.agent
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn max_steps(&self) -> usize {
        self.max_steps
    }

    pub fn exhausted(&self) -> bool {
        self.steps >= self.max_steps
    }

    /// Noise-free true view from `pose`.
    pub fn render_truth(&self, pose: Pos) -> ObservationGrid2D {
        render_window(&self.scene.truth, &self.scene.object, pose, self.footprint)
    }

    /// True view from `pose` with border-cell noise.
    pub fn observe_true<R: Rng + ?Sized>(&self, pose: Pos, rng: &mut R) -> ObservationGrid2D {
        let mut obs = self.render_truth(pose);
        self.noise.corrupt(&mut obs, rng);
        obs
    }

    /// Move the agent and return the (noisy) observation at the new pose.
    pub fn step<R: Rng + ?Sized>(&mut self, action: Action, rng: &mut R) -> Result<ObservationGrid2D> {
        let (dx, dy) = action.offset();
        let dest = self.agent.offset(dx, dy);
        match self.scene.truth.get(dest) {
            Some(v) if v != CellValue::Blocked => {}
            _ => return Err(AvsError::IllegalAction { action }),
        }
        self.agent = dest;
        self.steps += 1;
        Ok(self.observe_true(dest, rng))
    }
}

/// Draws particles whose believed object placement is uniform over the
/// placements consistent with the agent's real map.
///
/// Placements are enumerated lazily on the first draw.
pub struct ConsistentSampler2D<'a> {
    map: &'a GridMap2D,
    agent: Pos,
    shape: &'a ObjectShape,
    placements: Option<Vec<Placement>>,
}

impl<'a> ConsistentSampler2D<'a> {
    pub fn new(map: &'a GridMap2D, agent: Pos, shape: &'a ObjectShape) -> Self {
        Self {
            map,
            agent,
            shape,
            placements: None,
        }
    }

    pub fn placements(&mut self) -> &[Placement] {
        let (map, shape) = (self.map, self.shape);
        self.placements.get_or_insert_with(|| consistent_placements(map, shape))
    }
}

impl Reinvigorator<SearchState2D> for ConsistentSampler2D<'_> {
    fn draw(&mut self, rng: &mut dyn RngCore) -> Result<SearchState2D> {
        let agent = self.agent;
        let map = self.map;
        let options = self.placements();
        if options.is_empty() {
            return Err(AvsError::Unsatisfiable);
        }
        let pl = options[rng.gen_range(0..options.len())].clone();
        Ok(SearchState2D::new(map.clone(), agent, pl))
    }
}

/// `k` particles consistent with `map`, e.g. the initial belief.
pub fn initial_belief<R: Rng>(
    map: &GridMap2D,
    agent: Pos,
    shape: &ObjectShape,
    k: usize,
    rng: &mut R,
) -> Result<BeliefState<SearchState2D>> {
    let mut sampler = ConsistentSampler2D::new(map, agent, shape);
    crate::pomcp::reinvigorate(k, &mut sampler, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parse_map_file() {
        let m: MapFile = "A..#\n.OO.\n..OX\n".parse().unwrap();
        assert_eq!(m.truth.width(), 4);
        assert_eq!(m.truth.height(), 3);
        assert_eq!(m.agent_start, Some(Pos::new(0, 0)));
        assert_eq!(m.object.len(), 3);
        assert_eq!(m.truth.get(Pos::new(3, 0)), Some(CellValue::Blocked));
        assert_eq!(m.truth.get(Pos::new(3, 2)), Some(CellValue::OtherObject));
    }

    #[test]
    fn map_file_errors() {
        assert!("....\n....\n".parse::<MapFile>().is_err());
        assert!("O..O\n....\n".parse::<MapFile>().is_err());
        assert!("O...\n...\n".parse::<MapFile>().is_err());
        assert!("O..Q\n....\n".parse::<MapFile>().is_err());
        assert!("OA.A\n....\n".parse::<MapFile>().is_err());
    }

    #[test]
    fn random_scene_is_reproducible() {
        let shape = ObjectShape::l();
        let a = Scene2D::random(20, 20, &shape, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = Scene2D::random(20, 20, &shape, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.truth.count(CellValue::Object), 3);
    }

    #[test]
    fn env_rejects_blocked_moves() {
        let file: MapFile = "A#\nOO\n.O\n".parse().unwrap();
        let scene = Scene2D::from_map_file(&file, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let mut env = GroundTruthEnv::new(scene, Footprint::default(), 0.0, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(env.step(Action::East, &mut rng).is_err());
        let obs = env.step(Action::South, &mut rng).unwrap();
        assert_eq!(obs.count(CellValue::Object), 3);
        assert_eq!(env.steps(), 1);
    }

    #[test]
    fn sampler_unsatisfiable_on_resolved_map() {
        let map = GridMap2D::filled(5, 5, CellValue::Empty);
        let shape = ObjectShape::l();
        let mut s = ConsistentSampler2D::new(&map, Pos::new(0, 0), &shape);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(s.draw(&mut rng).unwrap_err(), AvsError::Unsatisfiable);
    }
}
