//! Particle loading, charge deposit, field gather and push.

use rayon::prelude::*;

use crate::error::{IfePicError, Result};
use crate::geometry::{CartesianGrid, InterfaceGeometry, Point, Side, TriangulatedMesh};
use crate::ife::BasisTable;

/// Structure-of-arrays particle storage. Only active particles are stored;
/// absorbed particles are removed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParticleSet {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub vx: Vec<f64>,
    pub vy: Vec<f64>,
    pub q: Vec<f64>,
    pub m: Vec<f64>,
}

impl ParticleSet {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn push(&mut self, pos: Point, vel: Point, q: f64, m: f64) {
        assert!(m > 0.0, "particle mass must be positive");
        self.x.push(pos[0]);
        self.y.push(pos[1]);
        self.vx.push(vel[0]);
        self.vy.push(vel[1]);
        self.q.push(q);
        self.m.push(m);
    }

    pub fn position(&self, k: usize) -> Point {
        [self.x[k], self.y[k]]
    }

    pub fn total_charge(&self) -> f64 {
        compensated_sum(self.q.iter().copied())
    }

    /// Keeps particles for which `keep` is true, preserving order.
    pub fn retain(&mut self, keep: &[bool]) {
        let mut w = 0;
        for k in 0..self.len() {
            if keep[k] {
                self.x[w] = self.x[k];
                self.y[w] = self.y[k];
                self.vx[w] = self.vx[k];
                self.vy[w] = self.vy[k];
                self.q[w] = self.q[k];
                self.m[w] = self.m[k];
                w += 1;
            }
        }
        for v in [&mut self.x, &mut self.y, &mut self.vx, &mut self.vy, &mut self.q, &mut self.m] {
            v.truncate(w);
        }
    }

    pub fn set_mass(&mut self, m: f64) {
        assert!(m > 0.0);
        self.m.iter_mut().for_each(|v| *v = m);
    }
}

/// Running sum with Neumaier compensation. Charge totals add millions of
/// same-signed, nearly equal terms, where plain summation drifts well above
/// the conservation tolerance.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::default();
    values.into_iter().for_each(|v| acc.add(v));
    acc.value()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadPattern {
    /// `m * m` particles at `xmin + i * (xmax - xmin) / (m + 1)`, `i = 1..=m`.
    Global(usize),
    /// `k * k` particles per cell on a cell-centred sub-lattice, offsets
    /// `(a + 1/2) / k`.
    PerCell(usize),
    /// `k * k` particles per cell on a sub-lattice anchored at the lower-left
    /// corner, offsets `a / k`; particles sit on cell edges and nodes.
    PerCellAnchored(usize),
}

/// Loads a uniform cloud carrying density `rho`, then removes particles
/// inside the conductor. Each particle carries `rho` times the area it
/// represents, so a full cloud deposits exactly `rho` on interior nodes.
pub fn load_uniform(grid: &CartesianGrid, geom: &InterfaceGeometry, pattern: LoadPattern, rho: f64, mass: f64) -> Result<ParticleSet> {
    let mut set = ParticleSet::default();
    match pattern {
        LoadPattern::Global(0) | LoadPattern::PerCell(0) | LoadPattern::PerCellAnchored(0) => {
            return Err(IfePicError::InvalidConfig("particle count must be positive".into()))
        }
        LoadPattern::Global(m) => {
            let dx = (grid.xmax - grid.xmin) / (m + 1) as f64;
            let dy = (grid.ymax - grid.ymin) / (m + 1) as f64;
            let q = rho * dx * dy;
            for j in 1..=m {
                for i in 1..=m {
                    let p = [grid.xmin + i as f64 * dx, grid.ymin + j as f64 * dy];
                    if geom.level_set(p) >= 0.0 {
                        set.push(p, [0.0, 0.0], q, mass);
                    }
                }
            }
        }
        LoadPattern::PerCell(k) | LoadPattern::PerCellAnchored(k) => {
            let shift = if matches!(pattern, LoadPattern::PerCell(_)) { 0.5 } else { 0.0 };
            let q = rho * grid.hx * grid.hy / (k * k) as f64;
            for cj in 0..grid.ny {
                for ci in 0..grid.nx {
                    for b in 0..k {
                        for a in 0..k {
                            let p = [
                                grid.xmin + (ci as f64 + (a as f64 + shift) / k as f64) * grid.hx,
                                grid.ymin + (cj as f64 + (b as f64 + shift) / k as f64) * grid.hy,
                            ];
                            if geom.level_set(p) >= 0.0 {
                                set.push(p, [0.0, 0.0], q, mass);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(set)
}

/// Area weights of the four cell corners (counter-clockwise from lower
/// left) for a point at fractional cell coordinates `(s, t)`.
#[inline]
pub fn area_weights(s: f64, t: f64) -> [f64; 4] {
    [(1.0 - s) * (1.0 - t), s * (1.0 - t), s * t, (1.0 - s) * t]
}

fn cell_coords(grid: &CartesianGrid, p: Point) -> Result<(usize, [f64; 2])> {
    let (i, j) = grid.locate_cell(p)?;
    let s = ((p[0] - (grid.xmin + i as f64 * grid.hx)) / grid.hx).clamp(0.0, 1.0);
    let t = ((p[1] - (grid.ymin + j as f64 * grid.hy)) / grid.hy).clamp(0.0, 1.0);
    Ok((grid.cell_index(i, j), [s, t]))
}

/// Moves the charge on inside corners to the outside corners in proportion
/// to their own weights; falls back to an equal split when every outside
/// weight vanishes.
pub fn redistribute(first: [f64; 4], weights: [f64; 4], inside: [bool; 4]) -> [f64; 4] {
    let moved: f64 = (0..4).filter(|&k| inside[k]).map(|k| first[k]).sum();
    let outside_w: f64 = (0..4).filter(|&k| !inside[k]).map(|k| weights[k]).sum();
    let n_out = inside.iter().filter(|&&b| !b).count();
    let mut out = [0.0; 4];
    for k in 0..4 {
        if inside[k] {
            continue;
        }
        let share = if outside_w > 0.0 { weights[k] / outside_w } else { 1.0 / n_out as f64 };
        out[k] = first[k] + share * moved;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepositMode {
    Standard,
    Improved,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepositResult {
    /// Charge at every node, including nodes inside the conductor.
    pub charge: Vec<f64>,
    pub density: Vec<f64>,
    pub mode: DepositMode,
    /// Charge that landed on nodes inside the conductor.
    pub lost_charge: f64,
}

impl DepositResult {
    /// Charge on nodes outside the conductor.
    pub fn plasma_charge(&self, mesh: &TriangulatedMesh) -> f64 {
        compensated_sum(
            self.charge
                .iter()
                .zip(&mesh.node_sides)
                .filter(|(_, &s)| s == Side::Plus)
                .map(|(q, _)| *q),
        )
    }

    pub fn total_charge(&self) -> f64 {
        compensated_sum(self.charge.iter().copied())
    }
}

const DEPOSIT_CHUNK: usize = 4096;

fn deposit(particles: &ParticleSet, mesh: &TriangulatedMesh, mode: DepositMode) -> Result<Vec<f64>> {
    let grid = &mesh.grid;
    let n = grid.node_count();
    // fixed-size chunks merged in chunk order: independent of thread count
    let partials: Vec<Result<Vec<CompensatedSum>>> = (0..particles.len())
        .collect::<Vec<_>>()
        .par_chunks(DEPOSIT_CHUNK)
        .map(|chunk| {
            let mut acc = vec![CompensatedSum::default(); n];
            for &k in chunk {
                let (cell, [s, t]) = cell_coords(grid, particles.position(k))?;
                let corners = grid.cell_corners(cell);
                let w = area_weights(s, t);
                let q = particles.q[k];
                let first = w.map(|wk| wk * q);
                let share = match mode {
                    DepositMode::Standard => first,
                    DepositMode::Improved => {
                        let inside = corners.map(|c| mesh.node_sides[c] == Side::Minus);
                        if inside.iter().all(|&b| b) {
                            return Err(IfePicError::GeometryInconsistency { cell });
                        }
                        if inside.iter().any(|&b| b) {
                            redistribute(first, w, inside)
                        } else {
                            first
                        }
                    }
                };
                for c in 0..4 {
                    acc[corners[c]].add(share[c]);
                }
            }
            Ok(acc)
        })
        .collect();
    let mut charge = vec![CompensatedSum::default(); n];
    for part in partials {
        for (c, v) in charge.iter_mut().zip(part?) {
            c.add(v.sum);
            c.add(v.comp);
        }
    }
    Ok(charge.iter().map(CompensatedSum::value).collect())
}

fn finish(charge: Vec<f64>, mesh: &TriangulatedMesh, mode: DepositMode) -> DepositResult {
    let lost_charge = compensated_sum(
        charge
            .iter()
            .zip(&mesh.node_sides)
            .filter(|(_, &s)| s == Side::Minus)
            .map(|(q, _)| *q),
    );
    let density = charge_to_density(&charge, &mesh.grid);
    DepositResult { charge, density, mode, lost_charge }
}

/// Plain area-weight deposit onto the four corners of each particle's cell.
pub fn deposit_standard(particles: &ParticleSet, mesh: &TriangulatedMesh) -> Result<DepositResult> {
    let charge = deposit(particles, mesh, DepositMode::Standard)?;
    Ok(finish(charge, mesh, DepositMode::Standard))
}

/// Area-weight deposit followed, in interface cells, by moving the charge
/// of inside-conductor corners onto the outside corners.
pub fn deposit_improved(particles: &ParticleSet, mesh: &TriangulatedMesh) -> Result<DepositResult> {
    let charge = deposit(particles, mesh, DepositMode::Improved)?;
    Ok(finish(charge, mesh, DepositMode::Improved))
}

pub fn deposit_with(mode: DepositMode, particles: &ParticleSet, mesh: &TriangulatedMesh) -> Result<DepositResult> {
    match mode {
        DepositMode::Standard => deposit_standard(particles, mesh),
        DepositMode::Improved => deposit_improved(particles, mesh),
    }
}

/// Nodal charge divided by the node's control volume clipped to the box.
pub fn charge_to_density(charge: &[f64], grid: &CartesianGrid) -> Vec<f64> {
    charge
        .iter()
        .enumerate()
        .map(|(node, q)| q / control_volume(grid, node))
        .collect()
}

pub fn control_volume(grid: &CartesianGrid, node: usize) -> f64 {
    let (i, j) = grid.node_ij(node);
    let fx = if i == 0 || i == grid.nx { 0.5 } else { 1.0 };
    let fy = if j == 0 || j == grid.ny { 0.5 } else { 1.0 };
    fx * fy * grid.hx * grid.hy
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldAtNodes {
    pub ex: Vec<f64>,
    pub ey: Vec<f64>,
}

/// Nodal `E = -grad(phi)` by central differences, one-sided second-order
/// differences on the box boundary.
pub fn nodal_field_fd(potential: &[f64], grid: &CartesianGrid) -> FieldAtNodes {
    let n = grid.node_count();
    let mut ex = vec![0.0; n];
    let mut ey = vec![0.0; n];
    let at = |i: usize, j: usize| potential[grid.node_index(i, j)];
    for j in 0..=grid.ny {
        for i in 0..=grid.nx {
            let node = grid.node_index(i, j);
            let dx = if i == 0 {
                (-3.0 * at(0, j) + 4.0 * at(1, j) - at(2, j)) / (2.0 * grid.hx)
            } else if i == grid.nx {
                (3.0 * at(i, j) - 4.0 * at(i - 1, j) + at(i - 2, j)) / (2.0 * grid.hx)
            } else {
                (at(i + 1, j) - at(i - 1, j)) / (2.0 * grid.hx)
            };
            let dy = if j == 0 {
                (-3.0 * at(i, 0) + 4.0 * at(i, 1) - at(i, 2)) / (2.0 * grid.hy)
            } else if j == grid.ny {
                (3.0 * at(i, j) - 4.0 * at(i, j - 1) + at(i, j - 2)) / (2.0 * grid.hy)
            } else {
                (at(i, j + 1) - at(i, j - 1)) / (2.0 * grid.hy)
            };
            ex[node] = -dx;
            ey[node] = -dy;
        }
    }
    FieldAtNodes { ex, ey }
}

/// Area-weight interpolation of nodal E to a particle position.
pub fn gather_fd(field: &FieldAtNodes, grid: &CartesianGrid, p: Point) -> Result<Point> {
    let (cell, [s, t]) = cell_coords(grid, p)?;
    let corners = grid.cell_corners(cell);
    let w = area_weights(s, t);
    let mut e = [0.0, 0.0];
    for k in 0..4 {
        e[0] += w[k] * field.ex[corners[k]];
        e[1] += w[k] * field.ey[corners[k]];
    }
    Ok(e)
}

/// E from the gradient of the local IFE (or standard) functions of the
/// triangle containing `p`, on the plasma side.
pub fn gather_ife(potential: &[f64], mesh: &TriangulatedMesh, basis: &BasisTable, p: Point) -> Result<Point> {
    let loc = mesh.locate(p)?;
    if loc.side == Side::Minus {
        return Err(IfePicError::InsideConductor { x: p[0], y: p[1] });
    }
    let pieces = basis.pieces(loc.triangle, loc.side);
    let nodes = mesh.triangles[loc.triangle].nodes;
    let mut e = [0.0, 0.0];
    for i in 0..3 {
        let g = pieces[i].grad();
        e[0] -= potential[nodes[i]] * g[0];
        e[1] -= potential[nodes[i]] * g[1];
    }
    Ok(e)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GatherMode {
    FiniteDifference,
    Ife,
}

/// Field at every particle.
pub fn gather_all(
    mode: GatherMode,
    particles: &ParticleSet,
    mesh: &TriangulatedMesh,
    basis: &BasisTable,
    potential: &[f64],
) -> Result<Vec<Point>> {
    match mode {
        GatherMode::FiniteDifference => {
            let field = nodal_field_fd(potential, &mesh.grid);
            (0..particles.len())
                .into_par_iter()
                .map(|k| gather_fd(&field, &mesh.grid, particles.position(k)))
                .collect()
        }
        GatherMode::Ife => (0..particles.len())
            .into_par_iter()
            .map(|k| gather_ife(potential, mesh, basis, particles.position(k)))
            .collect(),
    }
}

/// Boris step in the plane with a static out-of-plane field `bz`: half
/// electric kick, magnetic rotation, half kick, drift. Particles that leave
/// the box or enter the conductor are removed. Returns the number removed.
pub fn push_boris(
    particles: &mut ParticleSet,
    e_at: &[Point],
    bz: f64,
    dt: f64,
    grid: &CartesianGrid,
    geom: &InterfaceGeometry,
) -> usize {
    assert_eq!(e_at.len(), particles.len());
    for k in 0..particles.len() {
        let qm = particles.q[k] / particles.m[k];
        let half = 0.5 * qm * dt;
        let mut vx = particles.vx[k] + half * e_at[k][0];
        let mut vy = particles.vy[k] + half * e_at[k][1];
        let t = half * bz;
        if t != 0.0 {
            let s = 2.0 * t / (1.0 + t * t);
            // v' = v- + v- x t ; v+ = v- + v' x s, with t, s along z
            let px = vx + vy * t;
            let py = vy - vx * t;
            vx += py * s;
            vy -= px * s;
        }
        vx += half * e_at[k][0];
        vy += half * e_at[k][1];
        particles.vx[k] = vx;
        particles.vy[k] = vy;
        particles.x[k] += vx * dt;
        particles.y[k] += vy * dt;
    }
    let keep: Vec<bool> = (0..particles.len())
        .map(|k| {
            let p = particles.position(k);
            grid.contains(p) && geom.level_set(p) >= 0.0
        })
        .collect();
    let removed = keep.iter().filter(|&&b| !b).count();
    if removed > 0 {
        particles.retain(&keep);
    }
    removed
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, InterfaceGeometry};
    use std::f64::consts::PI;

    fn benchmark(n: usize) -> TriangulatedMesh {
        build_mesh(CartesianGrid::square(n).unwrap(), InterfaceGeometry::circle([0.0, 0.0], PI / 12.0)).unwrap()
    }

    fn single(p: Point, q: f64) -> ParticleSet {
        let mut s = ParticleSet::default();
        s.push(p, [0.0, 0.0], q, 1.0);
        s
    }

    #[test]
    fn global_pattern_counts() {
        let grid = CartesianGrid::square(40).unwrap();
        let far = InterfaceGeometry::circle([5.0, 5.0], 0.1);
        let set = load_uniform(&grid, &far, LoadPattern::Global(1279), -4.0, 1.0).unwrap();
        assert_eq!(set.len(), 1_635_841);
        let geom = InterfaceGeometry::circle([0.0, 0.0], PI / 12.0);
        let set = load_uniform(&grid, &geom, LoadPattern::Global(1279), -4.0, 1.0).unwrap();
        assert!(set.len() < 1_635_841);
        assert!((0..set.len()).all(|k| geom.level_set(set.position(k)) >= 0.0));
    }

    #[test]
    fn per_cell_one_sits_at_centres() {
        let grid = CartesianGrid::square(20).unwrap();
        let geom = InterfaceGeometry::circle([0.0, 0.0], PI / 12.0);
        let set = load_uniform(&grid, &geom, LoadPattern::PerCell(1), -4.0, 1.0).unwrap();
        let inside_centres = (0..grid.cell_count())
            .filter(|&c| {
                let (i, j) = grid.cell_ij(c);
                let p = [grid.xmin + (i as f64 + 0.5) * grid.hx, grid.ymin + (j as f64 + 0.5) * grid.hy];
                geom.level_set(p) < 0.0
            })
            .count();
        assert_eq!(set.len(), 400 - inside_centres);
        assert!((set.q[0] - (-4.0 * 0.01)).abs() < 1e-15);
        assert!(load_uniform(&grid, &geom, LoadPattern::PerCell(0), -4.0, 1.0).is_err());
        assert!(load_uniform(&grid, &geom, LoadPattern::Global(0), -4.0, 1.0).is_err());
    }

    #[test]
    fn weights_at_centre_and_corner() {
        assert_eq!(area_weights(0.5, 0.5), [0.25; 4]);
        assert_eq!(area_weights(0.0, 0.0), [1.0, 0.0, 0.0, 0.0]);
        let mesh = benchmark(20);
        let r = deposit_standard(&single([-0.95, -0.95], 1.0), &mesh).unwrap();
        for n in mesh.grid.cell_corners(0) {
            assert!((r.charge[n] - 0.25).abs() < 1e-15);
        }
        let r = deposit_standard(&single([-0.9, -0.9], 1.0), &mesh).unwrap();
        assert!((r.charge[mesh.grid.node_index(1, 1)] - 1.0).abs() < 1e-14);
        assert!(r.charge.iter().filter(|&&q| q.abs() > 1e-14).count() == 1);
    }

    #[test]
    fn redistribution_case_one() {
        let w = [0.4, 0.1, 0.3, 0.2];
        let first = w.map(|x| x * 2.0);
        let got = redistribute(first, w, [false, true, false, false]);
        let want = [0.4 + 0.4 / 0.9 * 0.1, 0.0, 0.3 + 0.3 / 0.9 * 0.1, 0.2 + 0.2 / 0.9 * 0.1].map(|x| x * 2.0);
        for k in 0..4 {
            assert!((got[k] - want[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn redistribution_equal_split_when_outside_weights_vanish() {
        let w = [1.0, 0.0, 0.0, 0.0];
        let got = redistribute(w, w, [true, false, false, false]);
        for k in 1..4 {
            assert!((got[k] - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn improved_conserves_on_interface_cell() {
        let mesh = benchmark(20);
        let cell = (0..mesh.grid.cell_count()).find(|&c| mesh.is_interface_cell(c)).unwrap();
        let (i, j) = mesh.grid.cell_ij(cell);
        // a point in this cell outside the conductor
        let mut p = None;
        'outer: for a in 1..10 {
            for b in 1..10 {
                let q = [
                    mesh.grid.xmin + (i as f64 + a as f64 / 10.0) * mesh.grid.hx,
                    mesh.grid.ymin + (j as f64 + b as f64 / 10.0) * mesh.grid.hy,
                ];
                if mesh.geometry.level_set(q) > 0.0 {
                    p = Some(q);
                    break 'outer;
                }
            }
        }
        let set = single(p.unwrap(), -0.7);
        let std = deposit_standard(&set, &mesh).unwrap();
        let imp = deposit_improved(&set, &mesh).unwrap();
        assert!((imp.plasma_charge(&mesh) - (-0.7)).abs() < 1e-15);
        assert_eq!(imp.lost_charge, 0.0);
        assert!(std.plasma_charge(&mesh).abs() < 0.7);
    }

    #[test]
    fn improved_rejects_particle_in_fully_inside_cell() {
        let mesh = benchmark(20);
        let set = single([0.01, 0.01], 1.0);
        assert!(matches!(deposit_improved(&set, &mesh), Err(IfePicError::GeometryInconsistency { .. })));
    }

    #[test]
    fn density_conversion() {
        let grid = CartesianGrid::square(4).unwrap();
        let mut charge = vec![0.0; grid.node_count()];
        let a = grid.hx * grid.hy;
        charge[grid.node_index(2, 2)] = -4.0 * a;
        charge[grid.node_index(0, 2)] = -2.0 * a;
        charge[grid.node_index(0, 0)] = -1.0 * a;
        let d = charge_to_density(&charge, &grid);
        assert!((d[grid.node_index(2, 2)] + 4.0).abs() < 1e-14);
        assert!((d[grid.node_index(0, 2)] + 4.0).abs() < 1e-14);
        assert!((d[grid.node_index(0, 0)] + 4.0).abs() < 1e-14);
        assert_eq!(d[grid.node_index(1, 1)], 0.0);
    }

    #[test]
    fn full_cloud_gives_exact_density_away_from_interface() {
        let mesh = benchmark(20);
        for k in [1, 2, 4] {
            let set = load_uniform(&mesh.grid, &mesh.geometry, LoadPattern::PerCell(k), -4.0, 1.0).unwrap();
            let r = deposit_standard(&set, &mesh).unwrap();
            for node in 0..mesh.grid.node_count() {
                let touches_interface = (0..mesh.grid.cell_count())
                    .filter(|&c| mesh.grid.cell_corners(c).contains(&node))
                    .any(|c| mesh.is_interface_cell(c) || mesh.grid.cell_corners(c).iter().any(|&n| mesh.node_sides[n] == Side::Minus));
                if !touches_interface {
                    assert!((r.density[node] + 4.0).abs() < 1e-12, "node {node}: {}", r.density[node]);
                }
            }
        }
    }

    #[test]
    fn fd_gather_linear_and_constant() {
        let grid = CartesianGrid::square(10).unwrap();
        let phi: Vec<f64> = (0..grid.node_count()).map(|n| grid.node_position(n)[0]).collect();
        let f = nodal_field_fd(&phi, &grid);
        for n in 0..grid.node_count() {
            assert!((f.ex[n] + 1.0).abs() < 1e-12 && f.ey[n].abs() < 1e-12);
        }
        let e = gather_fd(&f, &grid, [0.33, -0.71]).unwrap();
        assert!((e[0] + 1.0).abs() < 1e-12 && e[1].abs() < 1e-12);
        let c = vec![2.5; grid.node_count()];
        let f = nodal_field_fd(&c, &grid);
        assert!(f.ex.iter().chain(&f.ey).all(|&v| v == 0.0));
    }

    #[test]
    fn ife_gather_linear_potential() {
        let mesh = benchmark(20);
        let basis = BasisTable::build(&mesh, 1.0, 1.0).unwrap();
        let phi: Vec<f64> = (0..mesh.grid.node_count())
            .map(|n| {
                let p = mesh.grid.node_position(n);
                2.0 * p[0] - 3.0 * p[1]
            })
            .collect();
        for p in [[0.5, 0.5], [0.27, 0.01], [-0.9, 0.3]] {
            let e = gather_ife(&phi, &mesh, &basis, p).unwrap();
            assert!((e[0] + 2.0).abs() < 1e-10 && (e[1] - 3.0).abs() < 1e-10);
        }
        assert!(matches!(gather_ife(&phi, &mesh, &basis, [0.0, 0.0]), Err(IfePicError::InsideConductor { .. })));
    }

    #[test]
    fn boris_straight_line_without_fields() {
        let grid = CartesianGrid::square(10).unwrap();
        let geom = InterfaceGeometry::circle([5.0, 5.0], 0.1);
        let mut set = ParticleSet::default();
        set.push([0.1, 0.2], [0.3, -0.4], 1.0, 1.0);
        push_boris(&mut set, &[[0.0, 0.0]], 0.0, 0.5, &grid, &geom);
        assert_eq!(set.position(0), [0.1 + 0.3 * 0.5, 0.2 - 0.4 * 0.5]);
        assert_eq!((set.vx[0], set.vy[0]), (0.3, -0.4));
    }

    #[test]
    fn boris_uniform_field_from_rest() {
        let grid = CartesianGrid::new(-1e6, 1e6, -1e6, 1e6, 2, 2).unwrap();
        let geom = InterfaceGeometry::circle([5e7, 0.0], 0.1);
        let mut set = ParticleSet::default();
        set.push([0.0, 0.0], [0.0, 0.0], 2.0, 4.0);
        let e = [0.3, -0.1];
        let dt = 0.01;
        for n in 1..=50 {
            push_boris(&mut set, &[e], 0.0, dt, &grid, &geom);
            let want = [n as f64 * 0.5 * e[0] * dt, n as f64 * 0.5 * e[1] * dt];
            assert!((set.vx[0] - want[0]).abs() < 1e-14 && (set.vy[0] - want[1]).abs() < 1e-14);
        }
    }

    #[test]
    fn boris_absorbs_at_conductor_and_box() {
        let grid = CartesianGrid::square(10).unwrap();
        let geom = InterfaceGeometry::circle([0.0, 0.0], 0.25);
        let mut set = ParticleSet::default();
        set.push([0.3, 0.0], [-1.0, 0.0], 1.0, 1.0);
        set.push([0.95, 0.0], [1.0, 0.0], 1.0, 1.0);
        set.push([0.5, 0.5], [0.0, 0.0], 1.0, 1.0);
        let removed = push_boris(&mut set, &[[0.0, 0.0]; 3], 0.0, 0.1, &grid, &geom);
        assert_eq!(removed, 2);
        assert_eq!(set.len(), 1);
        assert_eq!(set.position(0), [0.5, 0.5]);
    }
}
