use super::cloud::{CloudPoint, PointCloud};
use super::map::{GridMap3D, Pos3};
use crate::avs2d::{CellValue, Footprint, MapDelta, Pos};
use crate::error::{AvsError, Result};

/// Voxelized view: `w × h × d` values plus a core flag per cell.
///
/// Index order is level, row, column. Cells with no points that sit below a
/// core cell of the same column are reported `Candidate`: the sensor cannot
/// see them.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ObservationGrid3D {
    w: usize,
    h: usize,
    d: usize,
    cells: Vec<CellValue>,
    core: Vec<bool>,
}

impl ObservationGrid3D {
    pub fn filled(w: usize, h: usize, d: usize, v: CellValue) -> Self {
        Self {
            w,
            h,
            d,
            cells: vec![v; w * h * d],
            core: vec![false; w * h * d],
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.w, self.h, self.d)
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.h + j) * self.w + i
    }

    pub fn at(&self, i: usize, j: usize, k: usize) -> CellValue {
        self.cells[self.index(i, j, k)]
    }

    pub fn is_core(&self, i: usize, j: usize, k: usize) -> bool {
        self.core[self.index(i, j, k)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: CellValue, core: bool) {
        let n = self.index(i, j, k);
        self.cells[n] = v;
        self.core[n] = core;
    }

    pub fn cells(&self) -> &[CellValue] {
        &self.cells
    }

    pub fn core_flags(&self) -> &[bool] {
        &self.core
    }

    pub fn core_count(&self) -> usize {
        self.core.iter().filter(|c| **c).count()
    }
}

/// Bit of the x–y quadrant holding `pos` in the cell whose low corner is
/// `lo`. Points on a split line belong to the upper half.
fn quadrant_bit(pos: [f64; 3], lo: [f64; 3], cell_size: f64) -> u8 {
    let half = cell_size / 2.0;
    let qx = (pos[0] - lo[0] >= half) as u8;
    let qy = (pos[1] - lo[1] >= half) as u8;
    1 << (qy * 2 + qx)
}

/// A cell is core iff its points cover all four x–y quadrants.
pub fn classify_core(points: &[CloudPoint], lo: [f64; 3], cell_size: f64) -> bool {
    points.iter().fold(0u8, |m, p| m | quadrant_bit(p.pos, lo, cell_size)) == 0b1111
}

/// Bin a cloud into a `w × h × d` grid anchored at `origin`.
///
/// Point cells take the majority source label (ties go to `Object`).
/// Point-free cells are `Empty`, or `Candidate` when a core cell lies above
/// them in the same column. Points outside the grid are ignored.
pub fn voxelize(pc: &PointCloud, origin: [f64; 3], cell_size: f64, dims: (usize, usize, usize)) -> ObservationGrid3D {
    assert!(cell_size > 0.0, "cell size must be positive");
    let (w, h, d) = dims;
    let n = w * h * d;
    let mut objects = vec![0u32; n];
    let mut others = vec![0u32; n];
    let mut quads = vec![0u8; n];
    let mut grid = ObservationGrid3D::filled(w, h, d, CellValue::Empty);

    for p in &pc.points {
        let rel = [0, 1, 2].map(|a| (p.pos[a] - origin[a]) / cell_size);
        if rel.iter().any(|r| !r.is_finite() || *r < 0.0) {
            continue;
        }
        let (i, j, k) = (rel[0] as usize, rel[1] as usize, rel[2] as usize);
        if i >= w || j >= h || k >= d {
            continue;
        }
        let idx = grid.index(i, j, k);
        let lo = [i, j, k].map(|c| c as f64 * cell_size);
        let lo = [lo[0] + origin[0], lo[1] + origin[1], lo[2] + origin[2]];
        quads[idx] |= quadrant_bit(p.pos, lo, cell_size);
        if p.source == CellValue::OtherObject {
            others[idx] += 1;
        } else {
            objects[idx] += 1;
        }
    }

    for j in 0..h {
        for i in 0..w {
            let mut covered = false;
            for k in (0..d).rev() {
                let idx = grid.index(i, j, k);
                if objects[idx] + others[idx] > 0 {
                    let v = if objects[idx] >= others[idx] {
                        CellValue::Object
                    } else {
                        CellValue::OtherObject
                    };
                    let core = quads[idx] == 0b1111;
                    grid.set(i, j, k, v, core);
                    covered |= core;
                } else if covered {
                    grid.set(i, j, k, CellValue::Candidate, false);
                }
            }
        }
    }
    grid
}

/// Equality on core cells only: the grids must agree in value on every cell
/// that is core in either of them.
///
/// Reflexive and symmetric, but not transitive.
pub fn soft_equal(a: &ObservationGrid3D, b: &ObservationGrid3D) -> Result<bool> {
    if a.dims() != b.dims() {
        return Err(AvsError::DimensionMismatch {
            left: a.dims(),
            right: b.dims(),
        });
    }
    Ok(a
        .cells
        .iter()
        .zip(&b.cells)
        .zip(a.core.iter().zip(&b.core))
        .all(|((va, vb), (ca, cb))| !(ca | cb) || va == vb))
}

/// Lower corner of the observation window for an agent at `pose`.
pub fn window_origin(pose: Pos, fp: Footprint, cell_size: f64) -> [f64; 3] {
    [
        (pose.x - (fp.w / 2) as i32) as f64 * cell_size,
        (pose.y - (fp.h / 2) as i32) as f64 * cell_size,
        0.0,
    ]
}

/// Write a voxelized view into `map`.
///
/// Core cells set their value and visible point-free cells become `Empty`.
/// Non-core point cells (stray or partial returns) and occluded cells leave
/// the map alone, as do `Blocked` map cells.
pub fn apply_observation_3d(map: &mut GridMap3D, obs: &ObservationGrid3D, pose: Pos) -> MapDelta {
    let (w, h, d) = obs.dims();
    let fp = Footprint { w, h };
    let mut delta = MapDelta::default();
    for k in 0..d {
        for j in 0..h {
            for i in 0..w {
                let col = fp.window_pos(pose, i, j);
                let p = Pos3::new(col.x, col.y, k as i32);
                let Some(old) = map.get(p) else { continue };
                let v = obs.at(i, j, k);
                let write = match v {
                    CellValue::Empty => true,
                    CellValue::Object | CellValue::OtherObject => obs.is_core(i, j, k),
                    _ => false,
                };
                if write && old != CellValue::Blocked && old != v {
                    delta.record(old, v);
                    map.set(p, v);
                }
            }
        }
    }
    delta
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, y: f64, z: f64) -> CloudPoint {
        CloudPoint {
            pos: [x, y, z],
            source: CellValue::Object,
        }
    }

    #[test]
    fn core_needs_all_quadrants() {
        let lo = [0.0, 0.0, 0.0];
        let four = [pt(0.1, 0.1, 0.5), pt(0.9, 0.1, 0.5), pt(0.1, 0.9, 0.5), pt(0.9, 0.9, 0.5)];
        assert!(classify_core(&four, lo, 1.0));
        assert!(!classify_core(&four[..3], lo, 1.0));
        assert!(!classify_core(&[], lo, 1.0));
    }

    #[test]
    fn empty_cloud_is_all_empty() {
        let g = voxelize(&PointCloud::new(), [0.0; 3], 1.0, (3, 3, 5));
        assert_eq!(g.cells().iter().filter(|c| **c == CellValue::Empty).count(), 45);
        assert_eq!(g.core_count(), 0);
    }

    #[test]
    fn single_point_occupies_one_cell() {
        let mut pc = PointCloud::new();
        pc.push([1.5, 0.5, 2.5], CellValue::Object);
        let g = voxelize(&pc, [0.0; 3], 1.0, (3, 3, 5));
        let occupied: Vec<_> = g.cells().iter().enumerate().filter(|(_, c)| **c == CellValue::Object).collect();
        assert_eq!(occupied.len(), 1);
        assert_eq!(occupied[0].0, g.index(1, 0, 2));
        assert!(!g.is_core(1, 0, 2));
    }

    #[test]
    fn majority_label_wins() {
        let mut pc = PointCloud::new();
        pc.push([0.2, 0.2, 0.5], CellValue::OtherObject);
        pc.push([0.3, 0.2, 0.5], CellValue::OtherObject);
        pc.push([0.7, 0.2, 0.5], CellValue::Object);
        let g = voxelize(&pc, [0.0; 3], 1.0, (1, 1, 1));
        assert_eq!(g.at(0, 0, 0), CellValue::OtherObject);
    }

    #[test]
    fn cells_under_a_core_cell_are_occluded() {
        let mut pc = PointCloud::new();
        for (x, y) in [(0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.75, 0.75)] {
            pc.push([x, y, 2.9], CellValue::Object);
        }
        let g = voxelize(&pc, [0.0; 3], 1.0, (1, 1, 5));
        let col: Vec<_> = (0..5).map(|k| g.at(0, 0, k)).collect();
        use CellValue::*;
        assert_eq!(col, vec![Candidate, Candidate, Object, Empty, Empty]);
    }

    #[test]
    fn soft_equality_ignores_non_core_cells() {
        let mut a = ObservationGrid3D::filled(3, 3, 2, CellValue::Empty);
        a.set(1, 1, 0, CellValue::Object, true);
        let mut b = a.clone();
        b.set(0, 0, 0, CellValue::Object, false);
        assert!(soft_equal(&a, &b).unwrap());
        assert!(soft_equal(&b, &a).unwrap());
        b.set(1, 1, 0, CellValue::OtherObject, true);
        assert!(!soft_equal(&a, &b).unwrap());
        let c = ObservationGrid3D::filled(3, 3, 3, CellValue::Empty);
        assert!(matches!(soft_equal(&a, &c), Err(AvsError::DimensionMismatch { .. })));
    }

    #[test]
    fn apply_writes_core_and_visible_empty() {
        let base = crate::avs2d::GridMap2D::filled(3, 3, CellValue::Candidate);
        let mut map = GridMap3D::lift(&base, 3);
        let mut obs = ObservationGrid3D::filled(3, 3, 3, CellValue::Empty);
        obs.set(1, 1, 1, CellValue::Object, true);
        obs.set(1, 1, 0, CellValue::Candidate, false);
        obs.set(0, 1, 1, CellValue::Object, false);
        let delta = apply_observation_3d(&mut map, &obs, Pos::new(1, 1));
        assert_eq!(map.get(Pos3::new(1, 1, 1)), Some(CellValue::Object));
        assert_eq!(map.get(Pos3::new(1, 1, 0)), Some(CellValue::Candidate));
        assert_eq!(map.get(Pos3::new(0, 1, 1)), Some(CellValue::Candidate));
        assert_eq!(map.get(Pos3::new(1, 1, 2)), Some(CellValue::Empty));
        assert_eq!(delta.new_objects, 1);
        assert_eq!(delta.resolved_candidates, 27 - 2);
    }
}
