use std::fmt;

use crate::avs2d::{CellValue, GridMap2D, Pos};

/// Voxel coordinate; `z = 0` is the table plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Pos3 {
    pub x: i32,
    pub y: i32,
    pub z: i32,
}

impl Pos3 {
    pub const fn new(x: i32, y: i32, z: i32) -> Self {
        Self { x, y, z }
    }

    pub fn column(self) -> Pos {
        Pos::new(self.x, self.y)
    }

    pub fn is_face_adjacent(self, o: Pos3) -> bool {
        (self.x - o.x).abs() + (self.y - o.y).abs() + (self.z - o.z).abs() == 1
    }
}

impl fmt::Display for Pos3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.x, self.y, self.z)
    }
}

/// `x × y × z` voxel map, stored level by level in row-major order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GridMap3D {
    width: usize,
    height: usize,
    depth: usize,
    cells: Vec<CellValue>,
}

impl GridMap3D {
    pub fn filled(width: usize, height: usize, depth: usize, v: CellValue) -> Self {
        assert!(width >= 1 && height >= 1 && depth >= 1, "map must be at least 1x1x1");
        Self {
            width,
            height,
            depth,
            cells: vec![v; width * height * depth],
        }
    }

    /// Level 0 copies `base`; every higher level is `Candidate`.
    pub fn lift(base: &GridMap2D, depth: usize) -> Self {
        let mut m = Self::filled(base.width(), base.height(), depth, CellValue::Candidate);
        let n = base.width() * base.height();
        m.cells[..n].copy_from_slice(base.cells());
        m
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn contains(&self, p: Pos3) -> bool {
        p.x >= 0
            && p.y >= 0
            && p.z >= 0
            && (p.x as usize) < self.width
            && (p.y as usize) < self.height
            && (p.z as usize) < self.depth
    }

    pub fn contains_column(&self, p: Pos) -> bool {
        p.x >= 0 && p.y >= 0 && (p.x as usize) < self.width && (p.y as usize) < self.height
    }

    fn idx(&self, p: Pos3) -> usize {
        (p.z as usize * self.height + p.y as usize) * self.width + p.x as usize
    }

    pub fn get(&self, p: Pos3) -> Option<CellValue> {
        self.contains(p).then(|| self.cells[self.idx(p)])
    }

    pub fn set(&mut self, p: Pos3, v: CellValue) {
        assert!(self.contains(p), "{p} out of bounds");
        let i = self.idx(p);
        self.cells[i] = v;
    }

    pub fn cells(&self) -> &[CellValue] {
        &self.cells
    }

    /// One horizontal level as a 2D map.
    pub fn level(&self, z: usize) -> GridMap2D {
        let mut m = GridMap2D::filled(self.width, self.height, CellValue::Empty);
        for p in m.clone().positions() {
            m.set(p, self.cells[self.idx(Pos3::new(p.x, p.y, z as i32))]);
        }
        m
    }

    pub fn count(&self, v: CellValue) -> usize {
        self.cells.iter().filter(|c| **c == v).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lift_copies_level_zero() {
        let mut base = GridMap2D::filled(4, 3, CellValue::Empty);
        base.set(Pos::new(1, 2), CellValue::Object);
        base.set(Pos::new(0, 0), CellValue::Blocked);
        let m = GridMap3D::lift(&base, 5);
        assert_eq!(m.level(0), base);
        for z in 1..5 {
            assert_eq!(m.level(z).count(CellValue::Candidate), 12);
        }
        assert_eq!(m.get(Pos3::new(1, 2, 0)), Some(CellValue::Object));
        assert_eq!(m.get(Pos3::new(1, 2, 5)), None);
    }
}
