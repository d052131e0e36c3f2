use std::fmt::Write as _;

use rand::Rng;

use super::map::Pos3;
use crate::avs2d::{CellValue, Footprint, Pos};
use crate::error::{AvsError, Result};

/// One sampled surface point. `source` is `Object` or `OtherObject` and
/// stands in for the segmentation label a real depth pipeline would attach.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloudPoint {
    pub pos: [f64; 3],
    pub source: CellValue,
}

/// Points in environment units.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<CloudPoint>,
}

impl PointCloud {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn push(&mut self, pos: [f64; 3], source: CellValue) {
        self.points.push(CloudPoint { pos, source });
    }

    /// One `x y z` row per point, three decimals. Source labels are not
    /// written.
    pub fn to_xyz(&self) -> String {
        let mut out = String::with_capacity(self.points.len() * 24);
        for p in &self.points {
            let [x, y, z] = p.pos;
            let _ = writeln!(out, "{x:.3} {y:.3} {z:.3}");
        }
        out
    }

    /// Parse XYZ rows; every point is labelled `Object`. Blank lines and
    /// `#` comments are skipped.
    pub fn from_xyz(text: &str) -> Result<Self> {
        let mut cloud = PointCloud::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| AvsError::PointCloud(format!("line {}: {e}", n + 1)))?;
            match vals[..] {
                [x, y, z] if vals.iter().all(|v| v.is_finite()) => cloud.push([x, y, z], CellValue::Object),
                _ => return Err(AvsError::PointCloud(format!("line {}: expected three finite numbers", n + 1))),
            }
        }
        Ok(cloud)
    }
}

/// Synthetic depth-sensor parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloudConfig {
    pub cell_size: f64,
    pub points_per_face: usize,
    /// Uniform x/y jitter bound as a fraction of `cell_size`.
    pub jitter: f64,
    pub dropout: f64,
}

impl Default for CloudConfig {
    fn default() -> Self {
        Self {
            cell_size: 1.0,
            points_per_face: 64,
            jitter: 0.1,
            dropout: 0.05,
        }
    }
}

impl CloudConfig {
    /// No jitter, no dropout.
    pub fn noise_free() -> Self {
        Self {
            jitter: 0.0,
            dropout: 0.0,
            ..Self::default()
        }
    }
}

/// Top-down view of an occupancy function.
///
/// For each footprint column inside the `width × height` workspace only the
/// top face of the highest occupied cell is sampled, so lower cells in the
/// column are occluded. Points sit just below the face plane so they bin into
/// the cell that owns the face.
///
/// Draw order per point: dropout, face u, face v, jitter x, jitter y.
#[allow(clippy::too_many_arguments)]
pub fn render_occupancy<R, F>(
    occupied: F,
    width: usize,
    height: usize,
    depth: usize,
    pose: Pos,
    fp: Footprint,
    cfg: &CloudConfig,
    rng: &mut R,
) -> PointCloud
where
    R: Rng + ?Sized,
    F: Fn(Pos3) -> Option<CellValue>,
{
    let cs = cfg.cell_size;
    let (max_x, max_y) = (width as f64 * cs, height as f64 * cs);
    let mut cloud = PointCloud::new();
    for col in fp.cells(pose, width, height) {
        let top = (0..depth as i32)
            .rev()
            .find_map(|z| occupied(Pos3::new(col.x, col.y, z)).map(|src| (z, src)));
        let Some((z, source)) = top else { continue };
        let face_z = (z as f64 + 1.0 - 0.05) * cs;
        for _ in 0..cfg.points_per_face {
            let dropped = cfg.dropout > 0.0 && rng.gen_bool(cfg.dropout);
            let u: f64 = rng.gen();
            let v: f64 = rng.gen();
            let (jx, jy) = if cfg.jitter > 0.0 {
                (rng.gen_range(-cfg.jitter..=cfg.jitter), rng.gen_range(-cfg.jitter..=cfg.jitter))
            } else {
                (0.0, 0.0)
            };
            if dropped {
                continue;
            }
            let x = ((col.x as f64 + u + jx) * cs).clamp(0.0, max_x);
            let y = ((col.y as f64 + v + jy) * cs).clamp(0.0, max_y);
            cloud.push([x, y, face_z], source);
        }
    }
    cloud
}
