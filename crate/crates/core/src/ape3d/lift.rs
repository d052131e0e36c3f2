use std::collections::{BTreeSet, HashMap};

use rand::{Rng, RngCore};

use super::cloud::{render_occupancy, CloudConfig};
use super::map::{GridMap3D, Pos3};
use super::sim::{is_terminal_3d, legal_actions_3d, SearchState3D, Shape3};
use super::voxel::{voxelize, window_origin, ObservationGrid3D};
use crate::avs2d::{is_terminal, CellValue, Footprint, Placement, Pos, Scene2D, SearchState2D};
use crate::error::{AvsError, Result};
use crate::pomcp::{BeliefState, Reinvigorator};
use crate::pomdp::Action;

/// True when the cells form one face-connected component.
pub fn is_connected6(cells: &[Pos3]) -> bool {
    let Some(&first) = cells.first() else { return true };
    let mut seen = vec![false; cells.len()];
    seen[0] = true;
    let mut stack = vec![first];
    while let Some(c) = stack.pop() {
        for (i, o) in cells.iter().enumerate() {
            if !seen[i] && c.is_face_adjacent(*o) {
                seen[i] = true;
                stack.push(*o);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// All face-connected sets of `cubes` cells in levels `0..z_levels` whose
/// top-down shadow is exactly `columns`. Sorted, each set sorted.
pub fn shapes_over_footprint(columns: &[Pos], z_levels: usize, cubes: usize) -> Vec<Shape3> {
    let cols: Vec<Pos> = columns.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let mut out = Vec::new();
    if cols.is_empty() || cubes < cols.len() || cubes > cols.len() * z_levels || z_levels > 16 {
        return out;
    }
    // One non-empty level mask per column.
    fn walk(cols: &[Pos], z: usize, left: usize, acc: &mut Shape3, out: &mut Vec<Shape3>) {
        let Some((&col, rest)) = cols.split_first() else {
            if left == 0 && is_connected6(acc) {
                let mut s = acc.clone();
                s.sort();
                out.push(s);
            }
            return;
        };
        for mask in 1u32..(1 << z) {
            let k = mask.count_ones() as usize;
            if k > left || left - k < rest.len() {
                continue;
            }
            let before = acc.len();
            acc.extend((0..z).filter(|b| mask & (1 << b) != 0).map(|b| Pos3::new(col.x, col.y, b as i32)));
            walk(rest, z, left - k, acc, out);
            acc.truncate(before);
        }
    }
    walk(&cols, z_levels, cubes, &mut Shape3::new(), &mut out);
    out.sort();
    out
}

/// Turn a finished search belief into a pose belief.
///
/// Each particle's map is lifted (level 0 copied, higher levels
/// `Candidate`) and its believed object is drawn uniformly from the shapes of
/// `cubes` cells over its 2D footprint. One RNG draw per particle.
pub fn lift_belief<R: Rng + ?Sized>(
    belief2d: &BeliefState<SearchState2D>,
    z_levels: usize,
    cubes: usize,
    rng: &mut R,
) -> Result<BeliefState<SearchState3D>> {
    if belief2d.is_empty() {
        return Err(AvsError::EmptyBelief);
    }
    if let Some(index) = belief2d.particles().iter().position(|s| !is_terminal(s)) {
        return Err(AvsError::StageOrder { index });
    }
    let mut cache: HashMap<Placement, Vec<Shape3>> = HashMap::new();
    let mut out = Vec::with_capacity(belief2d.len());
    for s in belief2d.particles() {
        let shapes = cache
            .entry(s.believed.clone())
            .or_insert_with(|| shapes_over_footprint(&s.believed, z_levels, cubes));
        if shapes.is_empty() {
            return Err(AvsError::Unsatisfiable);
        }
        let shape = shapes[rng.gen_range(0..shapes.len())].clone();
        out.push(SearchState3D::new(GridMap3D::lift(&s.map, z_levels), s.agent, shape));
    }
    Ok(BeliefState::new(out))
}

/// 3D scene: the object rests flat on a pedestal of `elevation` cubes.
///
/// The 2D scene truth is the top-down projection of this one. Other objects
/// are one cube tall and blocked columns are blocked at every level.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene3D {
    pub truth: GridMap3D,
    pub object: Shape3,
    pub elevation: usize,
}

impl Scene3D {
    pub fn from_scene2d(scene: &Scene2D, z_levels: usize, elevation: usize) -> Result<Self> {
        if elevation >= z_levels {
            return Err(AvsError::Config(format!("elevation {elevation} needs more than {z_levels} levels")));
        }
        let t = &scene.truth;
        let mut truth = GridMap3D::filled(t.width(), t.height(), z_levels, CellValue::Empty);
        for p in t.positions() {
            match t.get(p) {
                Some(CellValue::Blocked) => {
                    for z in 0..z_levels as i32 {
                        truth.set(Pos3::new(p.x, p.y, z), CellValue::Blocked);
                    }
                }
                Some(CellValue::OtherObject) => truth.set(Pos3::new(p.x, p.y, 0), CellValue::OtherObject),
                _ => {}
            }
        }
        let e = elevation as i32;
        let mut object = Shape3::new();
        for p in &scene.object {
            for z in 0..e {
                truth.set(Pos3::new(p.x, p.y, z), CellValue::OtherObject);
            }
            truth.set(Pos3::new(p.x, p.y, e), CellValue::Object);
            object.push(Pos3::new(p.x, p.y, e));
        }
        object.sort();
        Ok(Self {
            truth,
            object,
            elevation,
        })
    }

    /// Elevation drawn uniformly from `0..=max_elevation`; one RNG draw.
    pub fn random<R: Rng + ?Sized>(scene: &Scene2D, z_levels: usize, max_elevation: usize, rng: &mut R) -> Result<Self> {
        let e = rng.gen_range(0..=max_elevation);
        Self::from_scene2d(scene, z_levels, e)
    }

    fn occupancy(&self, p: Pos3) -> Option<CellValue> {
        match self.truth.get(p)? {
            CellValue::Object => Some(CellValue::Object),
            CellValue::OtherObject | CellValue::Blocked => Some(CellValue::OtherObject),
            _ => None,
        }
    }
}

/// Ground-truth environment for the pose stage.
#[derive(Debug, Clone)]
pub struct GroundTruthEnv3D {
    scene: Scene3D,
    agent: Pos,
    footprint: Footprint,
    cloud: CloudConfig,
    steps: usize,
    max_steps: usize,
}

impl GroundTruthEnv3D {
    pub fn new(scene: Scene3D, agent: Pos, footprint: Footprint, cloud: CloudConfig, max_steps: usize) -> Self {
        Self {
            scene,
            agent,
            footprint,
            cloud,
            steps: 0,
            max_steps,
        }
    }

    pub fn scene(&self) -> &Scene3D {
        &self.scene
    }

    pub fn agent(&self) -> Pos {
        self.agent
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn exhausted(&self) -> bool {
        self.steps >= self.max_steps
    }

    /// Voxelized sensor view of the true scene from `pose`.
    pub fn observe_true<R: Rng + ?Sized>(&self, pose: Pos, rng: &mut R) -> ObservationGrid3D {
        let t = &self.scene.truth;
        let pc = render_occupancy(
            |p| self.scene.occupancy(p),
            t.width(),
            t.height(),
            t.depth(),
            pose,
            self.footprint,
            &self.cloud,
            rng,
        );
        let origin = window_origin(pose, self.footprint, self.cloud.cell_size);
        voxelize(&pc, origin, self.cloud.cell_size, (self.footprint.w, self.footprint.h, t.depth()))
    }

    pub fn step<R: Rng + ?Sized>(&mut self, action: Action, rng: &mut R) -> Result<ObservationGrid3D> {
        if !legal_actions_3d(&self.scene.truth, self.agent).contains(action) {
            return Err(AvsError::IllegalAction { action });
        }
        let (dx, dy) = action.offset();
        self.agent = self.agent.offset(dx, dy);
        self.steps += 1;
        Ok(self.observe_true(self.agent, rng))
    }
}

/// Draws pose particles from a fixed hypothesis set, filtered against the
/// agent's real 3D map.
///
/// Strict filter: every cell is `Candidate` or `Object`, nothing solid is
/// mapped above the shape, and every `Object` cell above level 0 in the
/// shape's columns belongs to it. Falls back to the first rule alone when no
/// hypothesis passes.
pub struct ConsistentSampler3D<'a> {
    map: &'a GridMap3D,
    agent: Pos,
    hypotheses: &'a [Shape3],
    options: Option<Vec<usize>>,
}

impl<'a> ConsistentSampler3D<'a> {
    pub fn new(map: &'a GridMap3D, agent: Pos, hypotheses: &'a [Shape3]) -> Self {
        Self {
            map,
            agent,
            hypotheses,
            options: None,
        }
    }

    fn cells_open(&self, h: &Shape3) -> bool {
        h.iter()
            .all(|c| matches!(self.map.get(*c), Some(CellValue::Candidate | CellValue::Object)))
    }

    fn strict(&self, h: &Shape3) -> bool {
        self.cells_open(h)
            && h.iter().all(|c| {
                (0..self.map.depth() as i32).all(|z| {
                    let p = Pos3::new(c.x, c.y, z);
                    let v = self.map.get(p);
                    if z > c.z {
                        !matches!(v, Some(CellValue::Object | CellValue::OtherObject | CellValue::Blocked))
                    } else {
                        z == 0 || v != Some(CellValue::Object) || h.contains(&p)
                    }
                })
            })
    }

    /// Indices of the hypotheses currently consistent with the map.
    pub fn consistent(&mut self) -> &[usize] {
        if self.options.is_none() {
            let strict: Vec<usize> = (0..self.hypotheses.len()).filter(|&i| self.strict(&self.hypotheses[i])).collect();
            let picked = if strict.is_empty() {
                (0..self.hypotheses.len()).filter(|&i| self.cells_open(&self.hypotheses[i])).collect()
            } else {
                strict
            };
            self.options = Some(picked);
        }
        self.options.as_deref().unwrap_or(&[])
    }

    /// Hypotheses that would be terminal on the real map.
    pub fn resolved(&self) -> Vec<&Shape3> {
        self.hypotheses
            .iter()
            .filter(|h| self.strict(h) && is_terminal_3d(&SearchState3D::new(self.map.clone(), self.agent, (*h).clone())))
            .collect()
    }
}

impl Reinvigorator<SearchState3D> for ConsistentSampler3D<'_> {
    fn draw(&mut self, rng: &mut dyn RngCore) -> Result<SearchState3D> {
        let options = self.consistent();
        if options.is_empty() {
            return Err(AvsError::Unsatisfiable);
        }
        let i = options[rng.gen_range(0..options.len())];
        Ok(SearchState3D::new(self.map.clone(), self.agent, self.hypotheses[i].clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::avs2d::{GridMap2D, ObjectShape};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use smallvec::smallvec;

    fn l_cols() -> Vec<Pos> {
        vec![Pos::new(2, 2), Pos::new(3, 2), Pos::new(2, 3)]
    }

    #[test]
    fn flat_shapes_over_l() {
        let shapes = shapes_over_footprint(&l_cols(), 5, 3);
        assert_eq!(shapes.len(), 5);
        for (z, s) in shapes.iter().enumerate() {
            assert!(s.iter().all(|c| c.z == shapes[z][0].z));
        }
    }

    #[test]
    fn four_cubes_over_a_domino() {
        // Two adjacent columns, two levels: four cubes fill the slab.
        let cols = [Pos::new(0, 0), Pos::new(1, 0)];
        assert_eq!(shapes_over_footprint(&cols, 2, 4).len(), 1);
        // 3 cubes over 2 levels: one column full, the other at either level.
        assert_eq!(shapes_over_footprint(&cols, 2, 3).len(), 4);
    }

    #[test]
    fn six_connectivity() {
        assert!(is_connected6(&[Pos3::new(0, 0, 0), Pos3::new(0, 0, 1), Pos3::new(1, 0, 1)]));
        assert!(!is_connected6(&[Pos3::new(0, 0, 0), Pos3::new(1, 0, 1)]));
    }

    fn finished_particle() -> SearchState2D {
        let mut map = GridMap2D::filled(6, 6, CellValue::Empty);
        for p in l_cols() {
            map.set(p, CellValue::Object);
        }
        map.set(Pos::new(5, 5), CellValue::Candidate);
        SearchState2D::new(map, Pos::new(2, 2), l_cols().into_iter().collect())
    }

    #[test]
    fn lift_copies_level_zero_and_projects() {
        let b = BeliefState::new(vec![finished_particle(); 50]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let lifted = lift_belief(&b, 5, 3, &mut rng).unwrap();
        assert_eq!(lifted.len(), 50);
        for (s3, s2) in lifted.particles().iter().zip(b.particles()) {
            assert_eq!(s3.map.level(0), s2.map);
            for z in 1..5 {
                assert_eq!(s3.map.level(z).count(CellValue::Candidate), 36);
            }
            let shadow: BTreeSet<Pos> = s3.believed.iter().map(|c| c.column()).collect();
            assert_eq!(shadow, l_cols().into_iter().collect());
        }
    }

    #[test]
    fn lift_rejects_unfinished_search() {
        let mut p = finished_particle();
        p.map.set(Pos::new(3, 2), CellValue::Candidate);
        let b = BeliefState::new(vec![finished_particle(), p]);
        let err = lift_belief(&b, 5, 3, &mut ChaCha8Rng::seed_from_u64(0)).unwrap_err();
        assert_eq!(err, AvsError::StageOrder { index: 1 });
    }

    #[test]
    fn scene_stacks_object_on_pedestal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s2 = Scene2D::random(6, 6, &ObjectShape::l(), &mut rng).unwrap();
        let s3 = Scene3D::from_scene2d(&s2, 5, 2).unwrap();
        assert_eq!(s3.truth.count(CellValue::Object), 3);
        assert_eq!(s3.truth.count(CellValue::OtherObject), 6);
        assert!(s3.object.iter().all(|c| c.z == 2));
        assert!(Scene3D::from_scene2d(&s2, 5, 5).is_err());
    }

    #[test]
    fn strict_filter_uses_observed_top() {
        let base = GridMap2D::filled(6, 6, CellValue::Empty);
        let mut map = GridMap3D::lift(&base, 5);
        let hyps = shapes_over_footprint(&l_cols(), 5, 3);
        for c in &hyps[2] {
            map.set(*c, CellValue::Object);
            for z in 3..5 {
                map.set(Pos3::new(c.x, c.y, z), CellValue::Empty);
            }
            map.set(Pos3::new(c.x, c.y, 0), CellValue::Object);
        }
        let mut s = ConsistentSampler3D::new(&map, Pos::new(2, 2), &hyps);
        assert_eq!(s.consistent(), &[2]);
        assert_eq!(s.resolved(), vec![&hyps[2]]);
        let drawn = s.draw(&mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let expect: Shape3 = smallvec![Pos3::new(2, 2, 2), Pos3::new(2, 3, 2), Pos3::new(3, 2, 2)];
        assert_eq!(drawn.believed, expect);
    }
}
