use rand::Rng;
use smallvec::SmallVec;

use super::map::{CellValue, Footprint, GridMap2D, Pos};

/// Discretized camera image: `w × h` cell values, row-major, anchored to the
/// agent-centered footprint. Never contains `Candidate`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ObservationGrid2D {
    w: usize,
    h: usize,
    cells: SmallVec<[CellValue; 9]>,
}

impl ObservationGrid2D {
    pub fn from_cells(w: usize, h: usize, cells: impl IntoIterator<Item = CellValue>) -> Self {
        let cells: SmallVec<[CellValue; 9]> = cells.into_iter().collect();
        assert_eq!(cells.len(), w * h, "observation size mismatch");
        debug_assert!(!cells.contains(&CellValue::Candidate));
        Self { w, h, cells }
    }

    pub fn width(&self) -> usize {
        self.w
    }

    pub fn height(&self) -> usize {
        self.h
    }

    pub fn cells(&self) -> &[CellValue] {
        &self.cells
    }

    /// Value at column `i`, row `j`.
    pub fn at(&self, i: usize, j: usize) -> CellValue {
        self.cells[j * self.w + i]
    }

    pub fn count(&self, v: CellValue) -> usize {
        self.cells.iter().filter(|c| **c == v).count()
    }

    pub fn center_index(&self) -> usize {
        (self.h / 2) * self.w + self.w / 2
    }
}

/// Noise-free rendering of what the camera at `pose` would see if the object
/// occupied `object` and the rest of the scene matched `map`.
///
/// Window cells: `Object` if in `object`; `OtherObject`/`Blocked` if `map`
/// says so; `Blocked` outside the map; otherwise `Empty`.
pub fn render_window(map: &GridMap2D, object: &[Pos], pose: Pos, fp: Footprint) -> ObservationGrid2D {
    let cells = fp.window(pose).map(|p| match map.get(p) {
        None => CellValue::Blocked,
        Some(_) if object.contains(&p) => CellValue::Object,
        Some(v @ (CellValue::OtherObject | CellValue::Blocked)) => v,
        Some(_) => CellValue::Empty,
    });
    ObservationGrid2D::from_cells(fp.w, fp.h, cells)
}

/// Per-step map change counts used by the reward.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MapDelta {
    /// `Candidate` cells that received an observed value.
    pub resolved_candidates: usize,
    /// Cells newly marked `Object`.
    pub new_objects: usize,
    /// `Object` cells overwritten with `Empty`.
    pub discarded_objects: usize,
    /// Any cell value changed.
    pub changed: bool,
}

impl MapDelta {
    /// Diff of two maps of equal shape.
    pub fn between(before: &GridMap2D, after: &GridMap2D) -> Self {
        let mut d = MapDelta::default();
        for (a, b) in before.cells().iter().zip(after.cells()) {
            d.record(*a, *b);
        }
        d
    }

    pub(crate) fn record(&mut self, before: CellValue, after: CellValue) {
        if before == after {
            return;
        }
        self.changed = true;
        if before == CellValue::Candidate {
            self.resolved_candidates += 1;
        }
        if after == CellValue::Object {
            self.new_objects += 1;
        }
        if before == CellValue::Object && after == CellValue::Empty {
            self.discarded_objects += 1;
        }
    }
}

/// Overwrite the footprint cells of `map` with the observed values.
///
/// Window cells outside the map are skipped. The floor plan is known, so
/// `Blocked` map cells are never overwritten and an observed `Blocked` value
/// carries no new information for a free cell.
pub fn apply_observation(map: &mut GridMap2D, obs: &ObservationGrid2D, pose: Pos) -> MapDelta {
    let fp = Footprint { w: obs.width(), h: obs.height() };
    let mut delta = MapDelta::default();
    for (p, &v) in fp.window(pose).zip(obs.cells()) {
        let Some(old) = map.get(p) else { continue };
        if old == CellValue::Blocked || v == CellValue::Blocked || v == CellValue::Candidate {
            continue;
        }
        if old != v {
            delta.record(old, v);
            map.set(p, v);
        }
    }
    delta
}

/// Perspective-distortion noise: each non-center cell independently takes the
/// clean value of a uniformly chosen in-window 4-neighbour with probability `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BorderNoise {
    pub p: f64,
}

impl BorderNoise {
    /// Applies the noise in place and returns the window indices that were
    /// resampled (whether or not the value changed).
    ///
    /// Draw order: row-major over non-center cells, one Bernoulli draw each,
    /// followed by one neighbour draw when the cell flips.
    pub fn corrupt<R: Rng + ?Sized>(&self, obs: &mut ObservationGrid2D, rng: &mut R) -> Vec<usize> {
        let mut flipped = Vec::new();
        if self.p <= 0.0 {
            return flipped;
        }
        let clean = obs.cells.clone();
        let (w, h) = (obs.w, obs.h);
        let center = obs.center_index();
        for idx in 0..clean.len() {
            if idx == center || !rng.gen_bool(self.p.min(1.0)) {
                continue;
            }
            let (i, j) = ((idx % w) as i32, (idx / w) as i32);
            let mut nbrs: SmallVec<[usize; 4]> = SmallVec::new();
            for (dx, dy) in [(0, -1), (1, 0), (0, 1), (-1, 0)] {
                let (ni, nj) = (i + dx, j + dy);
                if ni >= 0 && nj >= 0 && (ni as usize) < w && (nj as usize) < h {
                    nbrs.push(nj as usize * w + ni as usize);
                }
            }
            if nbrs.is_empty() {
                continue;
            }
            let pick = nbrs[rng.gen_range(0..nbrs.len())];
            obs.cells[idx] = clean[pick];
            flipped.push(idx);
        }
        flipped
    }
}

/// Binary detector used by the ablation: fires only when the whole object
/// (`object_size` cells) is in view.
pub fn make_binary_observation(obs: &ObservationGrid2D, object_size: usize) -> bool {
    object_size > 0 && obs.count(CellValue::Object) >= object_size
}
