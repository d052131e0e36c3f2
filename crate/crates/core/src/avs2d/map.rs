use std::fmt;

/// Knowledge value of one environment cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum CellValue {
    Empty,
    Candidate,
    Object,
    OtherObject,
    Blocked,
}

impl CellValue {
    pub const ALL: [CellValue; 5] = [
        CellValue::Empty,
        CellValue::Candidate,
        CellValue::Object,
        CellValue::OtherObject,
        CellValue::Blocked,
    ];

    pub fn symbol(self) -> char {
        match self {
            CellValue::Empty => '.',
            CellValue::Candidate => '?',
            CellValue::Object => 'O',
            CellValue::OtherObject => 'X',
            CellValue::Blocked => '#',
        }
    }

    /// Cells that physically stop a point-cloud ray or show up in an image.
    pub fn is_occupied(self) -> bool {
        matches!(self, CellValue::Object | CellValue::OtherObject | CellValue::Blocked)
    }
}

/// Integer grid coordinate. `y` grows southwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Pos {
    pub x: i32,
    pub y: i32,
}

impl Pos {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn offset(self, dx: i32, dy: i32) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }

    pub fn manhattan(self, other: Pos) -> i32 {
        (self.x - other.x).abs() + (self.y - other.y).abs()
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// Row-major `width × height` map `M`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GridMap2D {
    width: usize,
    height: usize,
    cells: Vec<CellValue>,
}

impl GridMap2D {
    pub fn filled(width: usize, height: usize, value: CellValue) -> Self {
        assert!(width >= 1 && height >= 1, "map must be at least 1x1");
        Self {
            width,
            height,
            cells: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn contains(&self, p: Pos) -> bool {
        p.x >= 0 && p.y >= 0 && (p.x as usize) < self.width && (p.y as usize) < self.height
    }

    fn idx(&self, p: Pos) -> usize {
        p.y as usize * self.width + p.x as usize
    }

    pub fn get(&self, p: Pos) -> Option<CellValue> {
        self.contains(p).then(|| self.cells[self.idx(p)])
    }

    /// Panics when `p` is out of bounds.
    pub fn set(&mut self, p: Pos, v: CellValue) {
        assert!(self.contains(p), "{p} out of bounds");
        let i = self.idx(p);
        self.cells[i] = v;
    }

    pub fn cells(&self) -> &[CellValue] {
        &self.cells
    }

    pub fn positions(&self) -> impl Iterator<Item = Pos> + '_ {
        (0..self.height).flat_map(move |y| (0..self.width).map(move |x| Pos::new(x as i32, y as i32)))
    }

    pub fn count(&self, v: CellValue) -> usize {
        self.cells.iter().filter(|c| **c == v).count()
    }

    /// Agent knowledge at episode start: the floor plan (blocked cells) is
    /// known, everything else is a candidate.
    pub fn initial_knowledge(truth: &GridMap2D) -> GridMap2D {
        let cells = truth
            .cells
            .iter()
            .map(|c| if *c == CellValue::Blocked { CellValue::Blocked } else { CellValue::Candidate })
            .collect();
        GridMap2D {
            width: truth.width,
            height: truth.height,
            cells,
        }
    }

    /// Text dump, one row per line.
    pub fn render_ascii(&self) -> String {
        let mut s = String::with_capacity((self.width + 1) * self.height);
        for row in self.cells.chunks(self.width) {
            s.extend(row.iter().map(|c| c.symbol()));
            s.push('\n');
        }
        s
    }
}

/// Agent-centered `w × h` camera window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Footprint {
    pub w: usize,
    pub h: usize,
}

impl Default for Footprint {
    fn default() -> Self {
        Self { w: 3, h: 3 }
    }
}

impl Footprint {
    pub fn new(w: usize, h: usize) -> Self {
        assert!(w % 2 == 1 && h % 2 == 1, "footprint dimensions must be odd");
        Self { w, h }
    }

    pub fn len(&self) -> usize {
        self.w * self.h
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Map position of window cell `(i, j)` (column, row).
    pub fn window_pos(&self, agent: Pos, i: usize, j: usize) -> Pos {
        agent.offset(i as i32 - (self.w / 2) as i32, j as i32 - (self.h / 2) as i32)
    }

    /// Window index of map position `p`, if inside the (unclipped) window.
    pub fn window_index(&self, agent: Pos, p: Pos) -> Option<usize> {
        let i = p.x - agent.x + (self.w / 2) as i32;
        let j = p.y - agent.y + (self.h / 2) as i32;
        (i >= 0 && j >= 0 && (i as usize) < self.w && (j as usize) < self.h).then(|| j as usize * self.w + i as usize)
    }

    /// Window positions in row-major order, unclipped.
    pub fn window(&self, agent: Pos) -> impl Iterator<Item = Pos> + '_ {
        (0..self.h).flat_map(move |j| (0..self.w).map(move |i| self.window_pos(agent, i, j)))
    }

    /// Window cells clipped to a `width × height` map.
    pub fn cells(&self, agent: Pos, width: usize, height: usize) -> Vec<Pos> {
        self.window(agent)
            .filter(|p| p.x >= 0 && p.y >= 0 && (p.x as usize) < width && (p.y as usize) < height)
            .collect()
    }
}
