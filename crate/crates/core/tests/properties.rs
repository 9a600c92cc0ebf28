//! Randomised invariants of the deposit, redistribution and push.

use ifepic::driver::BenchmarkSpec;
use ifepic::geometry::{CartesianGrid, InterfaceGeometry, Point, Side, TriangulatedMesh};
use ifepic::pic::{area_weights, deposit_improved, deposit_standard, push_boris, redistribute, ParticleSet};
use proptest::prelude::*;

fn benchmark_mesh() -> TriangulatedMesh {
    BenchmarkSpec::default().mesh(40).unwrap()
}

fn interface_cells(mesh: &TriangulatedMesh) -> Vec<usize> {
    (0..mesh.grid.cell_count()).filter(|&c| mesh.is_interface_cell(c)).collect()
}

/// Fractional coordinate that lands on a cell edge or node about half the
/// time.
fn fraction() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(1.0), Just(0.5), 0.0..=1.0f64]
}

/// Particles in interface cells, outside the conductor, many of them on cell
/// edges and nodes.
fn interface_particles(mesh: &TriangulatedMesh, raw: &[(usize, f64, f64, f64)]) -> ParticleSet {
    let cells = interface_cells(mesh);
    let g = &mesh.grid;
    let mut set = ParticleSet::default();
    for &(pick, s, t, q) in raw {
        let (i, j) = g.cell_ij(cells[pick % cells.len()]);
        let p = [g.xmin + (i as f64 + s) * g.hx, g.ymin + (j as f64 + t) * g.hy];
        if mesh.geometry.level_set(p) >= 0.0 {
            set.push(p, [0.0, 0.0], q, 1.0);
        }
    }
    set
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

proptest! {
    #[test]
    fn weights_form_a_simplex(s in fraction(), t in fraction()) {
        let w = area_weights(s, t);
        prop_assert!(w.iter().all(|&v| (0.0..=1.0).contains(&v)));
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn redistribution_conserves_and_empties_inside_corners(
        mask in 1u8..15,
        s in fraction(),
        t in fraction(),
        q in -10.0..10.0f64,
    ) {
        let inside: [bool; 4] = std::array::from_fn(|k| mask & (1 << k) != 0);
        let w = area_weights(s, t);
        let first = w.map(|v| v * q);
        let out = redistribute(first, w, inside);
        for k in 0..4 {
            if inside[k] {
                prop_assert_eq!(out[k], 0.0);
            } else {
                prop_assert!(out[k] * q >= 0.0);
            }
        }
        prop_assert!((out.iter().sum::<f64>() - q).abs() <= 1e-14 * q.abs().max(1.0));
    }

    #[test]
    fn improved_deposit_conserves_charge(
        raw in prop::collection::vec((any::<usize>(), fraction(), fraction(), -5.0..-0.1f64), 1..200),
    ) {
        let mesh = benchmark_mesh();
        let set = interface_particles(&mesh, &raw);
        prop_assume!(!set.is_empty());
        let r = deposit_improved(&set, &mesh).unwrap();
        prop_assert!(rel(r.plasma_charge(&mesh), set.total_charge()) < 1e-12);
        prop_assert_eq!(r.lost_charge, 0.0);
        for (n, &q) in r.charge.iter().enumerate() {
            if mesh.node_sides[n] == Side::Minus {
                prop_assert_eq!(q, 0.0);
            }
        }
    }

    #[test]
    fn deposit_is_independent_of_particle_order(
        raw in prop::collection::vec((any::<usize>(), fraction(), fraction(), -5.0..-0.1f64), 2..200),
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mesh = benchmark_mesh();
        let set = interface_particles(&mesh, &raw);
        let mut order: Vec<usize> = (0..set.len()).collect();
        order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let mut shuffled = ParticleSet::default();
        for &k in &order {
            shuffled.push(set.position(k), [0.0, 0.0], set.q[k], 1.0);
        }
        let a = deposit_improved(&set, &mesh).unwrap();
        let b = deposit_improved(&shuffled, &mesh).unwrap();
        for (x, y) in a.charge.iter().zip(&b.charge) {
            prop_assert!((x - y).abs() <= 1e-14 * x.abs().max(1e-300) + 1e-300);
        }
    }

    #[test]
    fn standard_deposit_loses_charge_to_inside_corners(
        raw in prop::collection::vec((any::<usize>(), 0.05..0.95f64, 0.05..0.95f64, -5.0..-0.1f64), 1..50),
    ) {
        let mesh = benchmark_mesh();
        let set = interface_particles(&mesh, &raw);
        prop_assume!(!set.is_empty());
        // every particle sits strictly inside an interface cell, so each one
        // gives a positive weight to at least one conductor corner
        let r = deposit_standard(&set, &mesh).unwrap();
        let total = set.total_charge();
        prop_assert!(r.plasma_charge(&mesh).abs() < total.abs());
        prop_assert!(rel(r.plasma_charge(&mesh) + r.lost_charge, total) < 1e-12);
    }

    #[test]
    fn straight_line_motion_without_fields(
        x in -0.9..0.9f64,
        y in -0.9..0.9f64,
        vx in -1.0..1.0f64,
        vy in -1.0..1.0f64,
    ) {
        let grid = CartesianGrid::new(-1e3, 1e3, -1e3, 1e3, 4, 4).unwrap();
        let geom = InterfaceGeometry::circle([1e4, 1e4], 1.0);
        let mut set = ParticleSet::default();
        set.push([x, y], [vx, vy], -1.0, 1.0);
        let dt = 0.01;
        for _ in 0..100 {
            prop_assert_eq!(push_boris(&mut set, &[[0.0, 0.0]], 0.0, dt, &grid, &geom), 0);
        }
        prop_assert_eq!((set.vx[0], set.vy[0]), (vx, vy));
        prop_assert!((set.x[0] - (x + 100.0 * dt * vx)).abs() < 1e-12);
        prop_assert!((set.y[0] - (y + 100.0 * dt * vy)).abs() < 1e-12);
    }
}

/// The three redistribution cases written out node by node, with the corners
/// numbered 1..4 counter-clockwise from the lower left.
fn case_formula(first: [f64; 4], w: [f64; 4], inside: &[usize]) -> [f64; 4] {
    let [q1, q2, q3, q4] = first;
    let [w1, _, w3, w4] = w;
    match inside {
        [2] => [
            q1 + w1 / (w1 + w3 + w4) * q2,
            0.0,
            q3 + w3 / (w1 + w3 + w4) * q2,
            q4 + w4 / (w1 + w3 + w4) * q2,
        ],
        [2, 4] => [q1 + w1 / (w1 + w3) * (q2 + q4), 0.0, q3 + w3 / (w1 + w3) * (q2 + q4), 0.0],
        [2, 3, 4] => [q1 + q2 + q3 + q4, 0.0, 0.0, 0.0],
        _ => unreachable!(),
    }
}

#[test]
fn generalised_redistribution_matches_the_three_cases() {
    let samples = [(0.3, 0.6), (0.5, 0.5), (0.9, 0.1), (0.0, 0.7), (0.25, 1.0)];
    for (s, t) in samples {
        let w = area_weights(s, t);
        let first = w.map(|v| -2.5 * v);
        for case in [&[2usize][..], &[2, 4], &[2, 3, 4]] {
            let inside: [bool; 4] = std::array::from_fn(|k| case.contains(&(k + 1)));
            let got = redistribute(first, w, inside);
            let want = case_formula(first, w, case);
            for k in 0..4 {
                assert!((got[k] - want[k]).abs() < 1e-15, "case {case:?} at ({s}, {t}): {got:?} vs {want:?}");
            }
        }
    }
}

#[test]
fn every_inside_subset_is_handled() {
    // all 14 nonempty proper subsets of the four corners, at points with and
    // without vanishing outside weights
    for mask in 1u8..15 {
        let inside: [bool; 4] = std::array::from_fn(|k| mask & (1 << k) != 0);
        for (s, t) in [(0.37, 0.61), (0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.5, 0.0)] {
            let w = area_weights(s, t);
            let first = w.map(|v| 3.0 * v);
            let out = redistribute(first, w, inside);
            assert!((out.iter().sum::<f64>() - 3.0).abs() < 1e-14, "mask {mask:04b} at ({s}, {t})");
            for k in 0..4 {
                if inside[k] {
                    assert_eq!(out[k], 0.0);
                } else {
                    assert!(out[k] >= 0.0);
                }
            }
        }
    }
}

#[test]
fn boris_conserves_speed_in_pure_magnetic_field() {
    let grid = CartesianGrid::new(-1e3, 1e3, -1e3, 1e3, 4, 4).unwrap();
    let geom = InterfaceGeometry::circle([1e4, 1e4], 1.0);
    let mut set = ParticleSet::default();
    let v0: Point = [0.7, -0.2];
    set.push([0.0, 0.0], v0, -1.0, 1.0);
    let speed0 = v0[0].hypot(v0[1]);
    for _ in 0..10_000 {
        push_boris(&mut set, &[[0.0, 0.0]], 2.5, 0.05, &grid, &geom);
    }
    let speed = set.vx[0].hypot(set.vy[0]);
    assert!(rel(speed, speed0) < 1e-12, "speed drifted to {speed}");
    // the orbit stays bounded: radius m v / (|q| B) = 0.728 / 2.5
    assert!(set.x[0].hypot(set.y[0]) < 1.0);
}

#[test]
fn particle_on_interface_cell_edges_and_nodes_conserves() {
    let mesh = benchmark_mesh();
    let g = &mesh.grid;
    let mut set = ParticleSet::default();
    for c in interface_cells(&mesh) {
        let corners = g.cell_corners(c);
        for (k, &n) in corners.iter().enumerate() {
            let a = g.node_position(n);
            let b = g.node_position(corners[(k + 1) % 4]);
            for p in [a, [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]] {
                if mesh.geometry.level_set(p) >= 0.0 {
                    set.push(p, [0.0, 0.0], -1.0, 1.0);
                }
            }
        }
    }
    assert!(set.len() > 100);
    let r = deposit_improved(&set, &mesh).unwrap();
    assert!(rel(r.plasma_charge(&mesh), set.total_charge()) < 1e-12);
}
