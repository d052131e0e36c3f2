use std::collections::BTreeSet;
use std::str::FromStr;

use rand::Rng;
use smallvec::SmallVec;

use super::map::{CellValue, GridMap2D, Pos};
use crate::error::{AvsError, Result};

/// Sorted set of cells occupied by an object.
pub type Placement = SmallVec<[Pos; 8]>;

/// Letter-shaped object template: a 4-connected set of cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectShape {
    name: String,
    cells: Vec<Pos>,
}

impl ObjectShape {
    /// Normalizes the cells so the bounding box starts at the origin.
    pub fn new(name: impl Into<String>, cells: impl IntoIterator<Item = Pos>) -> Result<Self> {
        let cells = normalize(cells.into_iter().collect());
        if cells.is_empty() {
            return Err(AvsError::Map("object shape has no cells".into()));
        }
        if !is_connected4(&cells) {
            return Err(AvsError::Map("object cells are not 4-connected".into()));
        }
        Ok(Self { name: name.into(), cells })
    }

    /// The 3-cell L.
    pub fn l() -> Self {
        Self::named("L").expect("builtin shape")
    }

    /// Builtin letters: `L`, `I`, `T`, `O` (2×2), `J`, `U`, `S`.
    pub fn named(name: &str) -> Result<Self> {
        let rows: &[&str] = match name.to_ascii_uppercase().as_str() {
            "L" => &["#.", "##"],
            "I" => &["#", "#", "#"],
            "T" => &["###", ".#."],
            "O" => &["##", "##"],
            "J" => &[".#", ".#", "##"],
            "U" => &["#.#", "###"],
            "S" => &[".##", "##."],
            other => return Err(AvsError::Config(format!("unknown object shape '{other}'"))),
        };
        let cells = rows.iter().enumerate().flat_map(|(y, row)| {
            row.chars()
                .enumerate()
                .filter(|(_, c)| *c == '#')
                .map(move |(x, _)| Pos::new(x as i32, y as i32))
        });
        Self::new(name.to_ascii_uppercase(), cells)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn cells(&self) -> &[Pos] {
        &self.cells
    }

    pub fn size(&self) -> usize {
        self.cells.len()
    }

    /// Distinct 90° rotations, each normalized.
    pub fn rotations(&self) -> Vec<Vec<Pos>> {
        let mut out: Vec<Vec<Pos>> = Vec::with_capacity(4);
        let mut cur = self.cells.clone();
        for _ in 0..4 {
            if !out.contains(&cur) {
                out.push(cur.clone());
            }
            cur = normalize(cur.iter().map(|p| Pos::new(-p.y, p.x)).collect());
        }
        out
    }
}

impl FromStr for ObjectShape {
    type Err = AvsError;

    fn from_str(s: &str) -> Result<Self> {
        Self::named(s.trim())
    }
}

fn normalize(mut cells: Vec<Pos>) -> Vec<Pos> {
    let min_x = cells.iter().map(|p| p.x).min().unwrap_or(0);
    let min_y = cells.iter().map(|p| p.y).min().unwrap_or(0);
    for p in cells.iter_mut() {
        *p = Pos::new(p.x - min_x, p.y - min_y);
    }
    cells.sort();
    cells.dedup();
    cells
}

pub(crate) fn is_connected4(cells: &[Pos]) -> bool {
    let Some(&start) = cells.first() else {
        return false;
    };
    let all: BTreeSet<Pos> = cells.iter().copied().collect();
    let mut seen = BTreeSet::from([start]);
    let mut stack = vec![start];
    while let Some(p) = stack.pop() {
        for (dx, dy) in [(0, -1), (1, 0), (0, 1), (-1, 0)] {
            let q = p.offset(dx, dy);
            if all.contains(&q) && seen.insert(q) {
                stack.push(q);
            }
        }
    }
    seen.len() == all.len()
}

/// Every distinct placement of `shape` (all rotations) whose cells satisfy `ok`,
/// in deterministic order.
pub fn placements_where(
    width: usize,
    height: usize,
    shape: &ObjectShape,
    mut ok: impl FnMut(Pos) -> bool,
) -> Vec<Placement> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for rot in shape.rotations() {
        let rw = rot.iter().map(|p| p.x).max().unwrap_or(0) + 1;
        let rh = rot.iter().map(|p| p.y).max().unwrap_or(0) + 1;
        for oy in 0..=(height as i32 - rh) {
            for ox in 0..=(width as i32 - rw) {
                if rot.iter().all(|p| ok(p.offset(ox, oy))) {
                    let mut pl: Placement = rot.iter().map(|p| p.offset(ox, oy)).collect();
                    pl.sort();
                    if seen.insert(pl.clone()) {
                        out.push(pl);
                    }
                }
            }
        }
    }
    out
}

/// Placements lying entirely on `Candidate` or `Object` cells of `map`.
pub fn candidate_placements(map: &GridMap2D, shape: &ObjectShape) -> Vec<Placement> {
    placements_where(map.width(), map.height(), shape, |p| {
        matches!(map.get(p), Some(CellValue::Candidate | CellValue::Object))
    })
}

/// Placements consistent with an accumulated map: on `Candidate`/`Object`
/// cells and covering every `Object` cell. When no placement covers all
/// observed object cells (noisy maps), falls back to [`candidate_placements`].
pub fn consistent_placements(map: &GridMap2D, shape: &ObjectShape) -> Vec<Placement> {
    let all = candidate_placements(map, shape);
    let objects: Vec<Pos> = map.positions().filter(|p| map.get(*p) == Some(CellValue::Object)).collect();
    if objects.is_empty() {
        return all;
    }
    let strict: Vec<Placement> = all
        .iter()
        .filter(|pl| objects.iter().all(|o| pl.contains(o)))
        .cloned()
        .collect();
    if strict.is_empty() {
        all
    } else {
        strict
    }
}

/// Uniform draw over placements of `shape` on `Candidate`/`Object` cells.
pub fn place_object_simulation<R: Rng + ?Sized>(
    map: &GridMap2D,
    shape: &ObjectShape,
    rng: &mut R,
) -> Result<Placement> {
    let all = candidate_placements(map, shape);
    if all.is_empty() {
        return Err(AvsError::Unsatisfiable);
    }
    Ok(all[rng.gen_range(0..all.len())].clone())
}
