//! Voxelization, occlusion, soft equality and belief lifting.

use std::collections::BTreeSet;

use avs_core::ape3d::{
    lift_belief, render_pointcloud, soft_equal, voxelize, window_origin, CloudConfig, GridMap3D, ObservationGrid3D,
    PointCloud, Pos3, SearchState3D, Shape3,
};
use avs_core::avs2d::{CellValue, Footprint, GridMap2D, Pos, SearchState2D};
use avs_core::harness::{run_episode, ExperimentConfig, RunPoint, Stage};
use avs_core::pomcp::BeliefState;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn occupied_cells(g: &ObservationGrid3D) -> BTreeSet<(usize, usize, usize)> {
    let (w, h, d) = g.dims();
    let mut out = BTreeSet::new();
    for k in 0..d {
        for j in 0..h {
            for i in 0..w {
                if matches!(g.at(i, j, k), CellValue::Object | CellValue::OtherObject) {
                    out.insert((i, j, k));
                }
            }
        }
    }
    out
}

fn empty_state(w: usize, h: usize, d: usize, agent: Pos, believed: Shape3) -> SearchState3D {
    SearchState3D::new(GridMap3D::filled(w, h, d, CellValue::Empty), agent, believed)
}

/// Points binned into voxel `c` of the map frame.
fn points_in(pc: &PointCloud, c: Pos3) -> usize {
    pc.points
        .iter()
        .filter(|p| {
            p.pos[0].floor() as i32 == c.x && p.pos[1].floor() as i32 == c.y && p.pos[2].floor() as i32 == c.z
        })
        .count()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    /// A solid cube of `s³` grid cells, sampled on a dense interior lattice,
    /// voxelizes to exactly the cells it contains.
    #[test]
    fn dense_cube_voxelizes_to_its_cells(
        cx in 0usize..4, cy in 0usize..4, cz in 0usize..3, s in 1usize..3,
        ox in -3i32..3, oy in -3i32..3, cell in prop::sample::select(vec![0.5f64, 1.0, 2.5]),
    ) {
        let (w, h, d) = (6, 6, 5);
        prop_assume!(cx + s <= w && cy + s <= h && cz + s <= d);
        let origin = [ox as f64 * cell, oy as f64 * cell, 0.0];
        let per_cell = 6usize;
        let mut pc = PointCloud::new();
        let n = s * per_cell;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let f = |k: usize, base: usize, o: f64| o + (base as f64 + (k as f64 + 0.5) / per_cell as f64) * cell;
                    pc.push([f(a, cx, origin[0]), f(b, cy, origin[1]), f(c, cz, origin[2])], CellValue::Object);
                }
            }
        }
        let g = voxelize(&pc, origin, cell, (w, h, d));
        let mut oracle = BTreeSet::new();
        for i in cx..cx + s {
            for j in cy..cy + s {
                for k in cz..cz + s {
                    oracle.insert((i, j, k));
                }
            }
        }
        prop_assert_eq!(occupied_cells(&g), oracle.clone());
        for (i, j, k) in oracle {
            prop_assert!(g.is_core(i, j, k));
        }
    }

    /// Putting something on top of a cell never adds points to it; with a
    /// noise-free sensor the covered cell gets none at all.
    #[test]
    fn stacking_occludes_lower_cells(
        cells in prop::collection::btree_set((0i32..3, 0i32..3, 0i32..3), 1..8),
        pick in any::<prop::sample::Index>(),
        lift in 1i32..3,
        seed in any::<u64>(),
    ) {
        let cells: Vec<Pos3> = cells.into_iter().map(|(x, y, z)| Pos3::new(x, y, z)).collect();
        let target = cells[pick.index(cells.len())];
        let above = Pos3::new(target.x, target.y, target.z + lift);
        let mut with_above: Vec<Pos3> = cells.clone();
        if !with_above.contains(&above) {
            with_above.push(above);
        }
        for cfg in [CloudConfig::noise_free(), CloudConfig::default()] {
            let before = empty_state(3, 3, 6, Pos::new(1, 1), cells.iter().copied().collect());
            let after = empty_state(3, 3, 6, Pos::new(1, 1), with_above.iter().copied().collect());
            let fp = Footprint::default();
            let pb = render_pointcloud(&before, Pos::new(1, 1), fp, &cfg, &mut ChaCha8Rng::seed_from_u64(seed));
            let pa = render_pointcloud(&after, Pos::new(1, 1), fp, &cfg, &mut ChaCha8Rng::seed_from_u64(seed));
            prop_assert!(points_in(&pa, target) <= points_in(&pb, target));
            if cfg.jitter == 0.0 {
                prop_assert_eq!(points_in(&pa, target), 0);
            }
        }
    }

    #[test]
    fn soft_equality_is_reflexive_and_symmetric(
        a in prop::collection::vec((0u8..4, any::<bool>()), 18),
        b in prop::collection::vec((0u8..4, any::<bool>()), 18),
    ) {
        let build = |cells: &[(u8, bool)]| {
            let mut g = ObservationGrid3D::filled(3, 3, 2, CellValue::Empty);
            for (n, (v, core)) in cells.iter().enumerate() {
                let v = [CellValue::Empty, CellValue::Object, CellValue::OtherObject, CellValue::Candidate][*v as usize];
                g.set(n % 3, (n / 3) % 3, n / 9, v, *core);
            }
            g
        };
        let (ga, gb) = (build(&a), build(&b));
        prop_assert!(soft_equal(&ga, &ga).unwrap());
        prop_assert_eq!(soft_equal(&ga, &gb).unwrap(), soft_equal(&gb, &ga).unwrap());
    }

    #[test]
    fn xyz_text_round_trips(pts in prop::collection::vec((-5000i32..5000, -5000i32..5000, 0i32..5000), 0..40)) {
        let mut pc = PointCloud::new();
        for (x, y, z) in pts {
            pc.push([x as f64 / 1000.0, y as f64 / 1000.0, z as f64 / 1000.0], CellValue::Object);
        }
        let back = PointCloud::from_xyz(&pc.to_xyz()).unwrap();
        prop_assert_eq!(back.len(), pc.len());
        for (p, q) in pc.points.iter().zip(&back.points) {
            for a in 0..3 {
                prop_assert!((p.pos[a] - q.pos[a]).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn single_cube_render_voxelizes_to_that_cube() {
    for z in 0..4 {
        let cube = Pos3::new(2, 1, z);
        let s = empty_state(4, 4, 4, Pos::new(2, 2), [cube].into_iter().collect());
        let fp = Footprint::default();
        let cfg = CloudConfig::noise_free();
        let pc = render_pointcloud(&s, s.agent, fp, &cfg, &mut ChaCha8Rng::seed_from_u64(z as u64));
        assert_eq!(pc.len(), cfg.points_per_face);
        let g = voxelize(&pc, window_origin(s.agent, fp, 1.0), 1.0, (3, 3, 4));
        // Window column (1, 0) is map column (2, 1).
        let expect: BTreeSet<_> = [(1, 0, z as usize)].into_iter().collect();
        assert_eq!(occupied_cells(&g), expect);
        assert!(g.is_core(1, 0, z as usize));
        assert_eq!(g.core_count(), 1);
    }
}

#[test]
fn empty_window_renders_no_points() {
    let s = empty_state(5, 5, 3, Pos::new(1, 1), [Pos3::new(4, 4, 0)].into_iter().collect());
    let pc = render_pointcloud(&s, s.agent, Footprint::default(), &CloudConfig::default(), &mut ChaCha8Rng::seed_from_u64(0));
    assert!(pc.is_empty());
}

#[test]
fn lifting_fifty_particles() {
    let cols = [Pos::new(3, 3), Pos::new(4, 3), Pos::new(3, 4)];
    let mut map = GridMap2D::filled(8, 8, CellValue::Candidate);
    for p in cols {
        map.set(p, CellValue::Object);
    }
    map.set(Pos::new(0, 0), CellValue::Blocked);
    let b = BeliefState::new(vec![SearchState2D::new(map, Pos::new(3, 2), cols.into_iter().collect()); 50]);
    let lifted = lift_belief(&b, 5, 3, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    assert_eq!(lifted.len(), 50);
    let mut heights = BTreeSet::new();
    for (s3, s2) in lifted.particles().iter().zip(b.particles()) {
        assert_eq!(s3.map.level(0).cells(), s2.map.cells());
        for z in 1..5 {
            assert!(s3.map.level(z).cells().iter().all(|c| *c == CellValue::Candidate));
        }
        let shadow: BTreeSet<Pos> = s3.believed.iter().map(|c| c.column()).collect();
        assert_eq!(shadow, cols.into_iter().collect());
        heights.insert(s3.believed[0].z);
    }
    // Fifty uniform draws over five heights miss one with probability < 1e-4.
    assert_eq!(heights.len(), 5);
}

#[test]
fn finished_pose_stage_names_the_true_cells() {
    let cfg = ExperimentConfig {
        width: 10,
        height: 10,
        stage: Stage::SearchAndPose,
        max_steps: 120,
        ..ExperimentConfig::default()
    };
    let mut finished = 0;
    for seed in 0..8 {
        let r = run_episode(&cfg, RunPoint::pomcp(50, 100), seed).unwrap();
        assert_eq!(r.diagnostics.level0_preserved.unwrap_or(true), true);
        if r.found {
            finished += 1;
            assert_eq!(r.diagnostics.pose_correct, Some(true), "seed {seed}");
        }
    }
    assert!(finished >= 6, "only {finished} of 8 episodes finished");
}
