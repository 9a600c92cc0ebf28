//! Cartesian grid, its two-triangle-per-cell triangulation, and the
//! classification of that triangulation against a level-set interface.
//!
//! Sign convention: `level_set < 0` is the conductor (minus side), `> 0` the
//! plasma region (plus side).

use crate::error::{IfePicError, Result};

pub type Point = [f64; 2];

/// Minor sub-area fraction below which a cut triangle is treated as
/// belonging wholly to its majority side.
pub const DEGENERATE_AREA_FRACTION: f64 = 1e-10;

/// Segment-parameter tolerance of the bisection in [`edge_root`].
pub const ROOT_PARAM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Minus,
    Plus,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Minus => Side::Plus,
            Side::Plus => Side::Minus,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CartesianGrid {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
}

impl CartesianGrid {
    pub fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64, nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(IfePicError::InvalidGrid(format!(
                "need at least 2 cells per axis, got {nx}x{ny}"
            )));
        }
        let hx = (xmax - xmin) / nx as f64;
        let hy = (ymax - ymin) / ny as f64;
        if !(hx > 0.0 && hy > 0.0 && hx.is_finite() && hy.is_finite()) {
            return Err(IfePicError::InvalidGrid(format!(
                "degenerate extent [{xmin}, {xmax}] x [{ymin}, {ymax}]"
            )));
        }
        Ok(Self { xmin, xmax, ymin, ymax, nx, ny, hx, hy })
    }

    /// The benchmark box [-1, 1]^2 with `n` cells per axis.
    pub fn square(n: usize) -> Result<Self> {
        Self::new(-1.0, 1.0, -1.0, 1.0, n, n)
    }

    pub fn node_count(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn cell_count(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    #[inline]
    pub fn node_ij(&self, node: usize) -> (usize, usize) {
        (node % (self.nx + 1), node / (self.nx + 1))
    }

    #[inline]
    pub fn node_position(&self, node: usize) -> Point {
        let (i, j) = self.node_ij(node);
        [self.xmin + i as f64 * self.hx, self.ymin + j as f64 * self.hy]
    }

    #[inline]
    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn cell_ij(&self, cell: usize) -> (usize, usize) {
        (cell % self.nx, cell / self.nx)
    }

    /// Corner nodes of a cell, counter-clockwise from the lower-left corner.
    pub fn cell_corners(&self, cell: usize) -> [usize; 4] {
        let (i, j) = self.cell_ij(cell);
        [
            self.node_index(i, j),
            self.node_index(i + 1, j),
            self.node_index(i + 1, j + 1),
            self.node_index(i, j + 1),
        ]
    }

    pub fn is_boundary_node(&self, node: usize) -> bool {
        let (i, j) = self.node_ij(node);
        i == 0 || j == 0 || i == self.nx || j == self.ny
    }

    pub fn area(&self) -> f64 {
        (self.xmax - self.xmin) * (self.ymax - self.ymin)
    }

    pub fn contains(&self, p: Point) -> bool {
        p[0] >= self.xmin && p[0] <= self.xmax && p[1] >= self.ymin && p[1] <= self.ymax
    }

    /// Cell containing `p`. Points on a shared cell boundary go to the
    /// lower-index cell.
    pub fn locate_cell(&self, p: Point) -> Result<(usize, usize)> {
        if !self.contains(p) {
            return Err(IfePicError::OutOfDomain { x: p[0], y: p[1] });
        }
        let i = lower_cell_index((p[0] - self.xmin) / self.hx, self.nx);
        let j = lower_cell_index((p[1] - self.ymin) / self.hy, self.ny);
        Ok((i, j))
    }
}

fn lower_cell_index(t: f64, n: usize) -> usize {
    let f = t.floor();
    let k = if f == t && t > 0.0 { f as usize - 1 } else { f as usize };
    k.min(n - 1)
}

#[derive(Debug, Clone, PartialEq)]
pub enum InterfaceGeometry {
    Circle { center: Point, radius: f64 },
    /// Level set `normal . x - offset`.
    HalfPlane { normal: Point, offset: f64 },
}

impl InterfaceGeometry {
    pub fn circle(center: Point, radius: f64) -> Self {
        InterfaceGeometry::Circle { center, radius }
    }

    #[inline]
    pub fn level_set(&self, p: Point) -> f64 {
        match *self {
            InterfaceGeometry::Circle { center, radius } => {
                let dx = p[0] - center[0];
                let dy = p[1] - center[1];
                dx * dx + dy * dy - radius * radius
            }
            InterfaceGeometry::HalfPlane { normal, offset } => {
                normal[0] * p[0] + normal[1] * p[1] - offset
            }
        }
    }

    /// Number of distinct interface crossings in the open segment `(p, q)`.
    pub fn segment_crossings(&self, p: Point, q: Point) -> usize {
        let d = sub(q, p);
        match *self {
            InterfaceGeometry::Circle { center, radius } => {
                let f = sub(p, center);
                let a = dot(d, d);
                let b = 2.0 * dot(f, d);
                let c = dot(f, f) - radius * radius;
                let disc = b * b - 4.0 * a * c;
                if a == 0.0 || disc <= 0.0 {
                    return 0;
                }
                let s = disc.sqrt();
                [(-b - s) / (2.0 * a), (-b + s) / (2.0 * a)]
                    .iter()
                    .filter(|&&t| t > 0.0 && t < 1.0)
                    .count()
            }
            InterfaceGeometry::HalfPlane { .. } => {
                let a = self.level_set(p);
                let b = self.level_set(q);
                usize::from(a * b < 0.0)
            }
        }
    }
}

/// Point on segment `p1 p2` where the level set vanishes, by bisection on
/// the segment parameter.
pub fn edge_root(p1: Point, p2: Point, geom: &InterfaceGeometry) -> Result<Point> {
    let f1 = geom.level_set(p1);
    let f2 = geom.level_set(p2);
    let len2 = dot(sub(p2, p1), sub(p2, p1));
    let on_gamma = 1e-12 * len2.max(f64::MIN_POSITIVE);
    if f1.abs() <= on_gamma {
        return Ok(p1);
    }
    if f2.abs() <= on_gamma {
        return Ok(p2);
    }
    if f1 * f2 > 0.0 {
        return Err(IfePicError::NotBracketing { phi1: f1, phi2: f2 });
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let lo_negative = f1 < 0.0;
    while hi - lo > ROOT_PARAM_TOL {
        let mid = 0.5 * (lo + hi);
        let fm = geom.level_set(lerp(p1, p2, mid));
        if fm == 0.0 {
            return Ok(lerp(p1, p2, mid));
        }
        if (fm < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lerp(p1, p2, 0.5 * (lo + hi)))
}

/// Same root as [`edge_root`] but independent of endpoint order, so both
/// triangles sharing an edge see bitwise-identical cut points.
fn canonical_edge_root(a: Point, b: Point, geom: &InterfaceGeometry) -> Result<Point> {
    if (a[0], a[1]) <= (b[0], b[1]) {
        edge_root(a, b, geom)
    } else {
        edge_root(b, a, geom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubTriangle {
    /// (i,j), (i+1,j), (i+1,j+1)
    Lower,
    /// (i,j), (i+1,j+1), (i,j+1)
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriangleKind {
    NonInterfaceMinus,
    NonInterfacePlus,
    Interface,
}

impl TriangleKind {
    pub fn uniform_side(self) -> Option<Side> {
        match self {
            TriangleKind::NonInterfaceMinus => Some(Side::Minus),
            TriangleKind::NonInterfacePlus => Some(Side::Plus),
            TriangleKind::Interface => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triangle {
    /// Counter-clockwise global node indices.
    pub nodes: [usize; 3],
    pub cell: usize,
    pub tag: SubTriangle,
}

/// Interior edge shared by two triangles. The edge normal points from
/// `triangles[0]` into `triangles[1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub nodes: [usize; 2],
    pub triangles: [usize; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceCut {
    pub triangle: usize,
    pub vertices: [Point; 3],
    pub vertex_sides: [Side; 3],
    pub d: Point,
    pub e: Point,
    /// Local index of the vertex alone on its side; D lies on the edge to
    /// the next vertex and E on the edge to the previous one.
    pub lone_vertex: usize,
    pub plus_polygon: Vec<Point>,
    pub minus_polygon: Vec<Point>,
    pub plus_area: f64,
    pub minus_area: f64,
    /// Unit normal of DE pointing from the minus to the plus side.
    pub normal: Point,
}

impl InterfaceCut {
    pub fn area(&self) -> f64 {
        self.plus_area + self.minus_area
    }

    pub fn polygon(&self, side: Side) -> &[Point] {
        match side {
            Side::Plus => &self.plus_polygon,
            Side::Minus => &self.minus_polygon,
        }
    }

    /// Majority side when the minor sub-area is negligible.
    pub fn degenerate_side(&self) -> Option<Side> {
        let total = self.area();
        if self.minus_area / total < DEGENERATE_AREA_FRACTION {
            Some(Side::Plus)
        } else if self.plus_area / total < DEGENERATE_AREA_FRACTION {
            Some(Side::Minus)
        } else {
            None
        }
    }

    /// Side of the straight segment DE that `p` falls on.
    pub fn side_of(&self, p: Point) -> Side {
        if dot(self.normal, sub(p, self.d)) > 0.0 {
            Side::Plus
        } else {
            Side::Minus
        }
    }
}

/// Cuts an interface triangle along the straight segment joining the two
/// edge roots.
pub fn compute_cut(
    triangle: usize,
    vertices: [Point; 3],
    vertex_sides: [Side; 3],
    geom: &InterfaceGeometry,
) -> Result<InterfaceCut> {
    let lone = (0..3)
        .find(|&k| vertex_sides[k] != vertex_sides[(k + 1) % 3] && vertex_sides[k] != vertex_sides[(k + 2) % 3])
        .ok_or_else(|| {
            IfePicError::InvalidConfig(format!("triangle {triangle} is not an interface triangle"))
        })?;
    let next = (lone + 1) % 3;
    let prev = (lone + 2) % 3;
    let d = canonical_edge_root(vertices[lone], vertices[next], geom)?;
    let e = canonical_edge_root(vertices[prev], vertices[lone], geom)?;

    // Counter-clockwise: lone, D, E for the lone piece and D, next, prev, E
    // for the remaining quadrilateral.
    let lone_poly = vec![vertices[lone], d, e];
    let quad_poly = vec![d, vertices[next], vertices[prev], e];
    let lone_area = polygon_area(&lone_poly);
    let quad_area = polygon_area(&quad_poly);

    let (plus_polygon, minus_polygon, plus_area, minus_area) = match vertex_sides[lone] {
        Side::Plus => (lone_poly, quad_poly, lone_area, quad_area),
        Side::Minus => (quad_poly, lone_poly, quad_area, lone_area),
    };

    let t = sub(e, d);
    let len = dot(t, t).sqrt();
    let mut normal = if len > 0.0 { [t[1] / len, -t[0] / len] } else { [0.0, 0.0] };
    let plus_vertex = (0..3).find(|&k| vertex_sides[k] == Side::Plus).unwrap();
    if len == 0.0 {
        // Both roots coincide at a vertex; fall back to the level-set gradient
        // direction approximated by the plus vertex.
        let w = sub(vertices[plus_vertex], d);
        let wl = dot(w, w).sqrt();
        normal = [w[0] / wl, w[1] / wl];
    } else if dot(normal, sub(vertices[plus_vertex], d)) < 0.0 {
        normal = [-normal[0], -normal[1]];
    }

    Ok(InterfaceCut {
        triangle,
        vertices,
        vertex_sides,
        d,
        e,
        lone_vertex: lone,
        plus_polygon,
        minus_polygon,
        plus_area,
        minus_area,
        normal,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Location {
    pub cell: usize,
    pub cell_ij: (usize, usize),
    pub triangle: usize,
    pub side: Side,
}

#[derive(Debug, Clone)]
pub struct TriangulatedMesh {
    pub grid: CartesianGrid,
    pub geometry: InterfaceGeometry,
    pub node_sides: Vec<Side>,
    pub triangles: Vec<Triangle>,
    pub kinds: Vec<TriangleKind>,
    pub edges: Vec<Edge>,
    pub cuts: Vec<InterfaceCut>,
    /// Index into `cuts` for every triangle that is `Interface`.
    pub cut_of: Vec<Option<usize>>,
}

impl TriangulatedMesh {
    pub fn triangle_vertices(&self, t: usize) -> [Point; 3] {
        let n = self.triangles[t].nodes;
        [
            self.grid.node_position(n[0]),
            self.grid.node_position(n[1]),
            self.grid.node_position(n[2]),
        ]
    }

    pub fn triangle_area(&self) -> f64 {
        0.5 * self.grid.hx * self.grid.hy
    }

    pub fn cut(&self, t: usize) -> Option<&InterfaceCut> {
        self.cut_of[t].map(|k| &self.cuts[k])
    }

    pub fn is_interface_edge(&self, e: &Edge) -> bool {
        self.node_sides[e.nodes[0]] != self.node_sides[e.nodes[1]]
    }

    pub fn interface_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(|e| self.is_interface_edge(e))
    }

    /// A cell is an interface cell when its corners lie on both sides.
    pub fn is_interface_cell(&self, cell: usize) -> bool {
        let c = self.grid.cell_corners(cell);
        let s0 = self.node_sides[c[0]];
        c[1..].iter().any(|&n| self.node_sides[n] != s0)
    }

    pub fn triangle_of(&self, cell: usize, tag: SubTriangle) -> usize {
        2 * cell
            + match tag {
                SubTriangle::Lower => 0,
                SubTriangle::Upper => 1,
            }
    }

    /// Cell, triangle and side containing `p`.
    pub fn locate(&self, p: Point) -> Result<Location> {
        let (i, j) = self.grid.locate_cell(p)?;
        let cell = self.grid.cell_index(i, j);
        let s = (p[0] - (self.grid.xmin + i as f64 * self.grid.hx)) / self.grid.hx;
        let t = (p[1] - (self.grid.ymin + j as f64 * self.grid.hy)) / self.grid.hy;
        let tag = if t <= s { SubTriangle::Lower } else { SubTriangle::Upper };
        let side = if self.geometry.level_set(p) < 0.0 { Side::Minus } else { Side::Plus };
        Ok(Location { cell, cell_ij: (i, j), triangle: self.triangle_of(cell, tag), side })
    }
}

/// Triangulates the grid along the lower-left to upper-right diagonal and
/// classifies every triangle against the interface.
pub fn build_mesh(grid: CartesianGrid, geom: InterfaceGeometry) -> Result<TriangulatedMesh> {
    let zero_tol = 1e-12 * grid.hx.min(grid.hy).powi(2);
    let node_sides: Vec<Side> = (0..grid.node_count())
        .map(|n| {
            let phi = geom.level_set(grid.node_position(n));
            if phi < 0.0 || phi.abs() < zero_tol {
                Side::Minus
            } else {
                Side::Plus
            }
        })
        .collect();

    let mut triangles = Vec::with_capacity(2 * grid.cell_count());
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let cell = grid.cell_index(i, j);
            let [a, b, c, d] = grid.cell_corners(cell);
            triangles.push(Triangle { nodes: [a, b, c], cell, tag: SubTriangle::Lower });
            triangles.push(Triangle { nodes: [a, c, d], cell, tag: SubTriangle::Upper });
        }
    }

    let lower = |i: usize, j: usize| 2 * grid.cell_index(i, j);
    let upper = |i: usize, j: usize| 2 * grid.cell_index(i, j) + 1;
    let mut edges = Vec::new();
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let [a, _, c, _] = grid.cell_corners(grid.cell_index(i, j));
            edges.push(Edge { nodes: sorted2(a, c), triangles: [lower(i, j), upper(i, j)] });
            if j > 0 {
                let n0 = grid.node_index(i, j);
                let n1 = grid.node_index(i + 1, j);
                edges.push(Edge { nodes: sorted2(n0, n1), triangles: [upper(i, j - 1), lower(i, j)] });
            }
            if i > 0 {
                let n0 = grid.node_index(i, j);
                let n1 = grid.node_index(i, j + 1);
                edges.push(Edge { nodes: sorted2(n0, n1), triangles: [lower(i - 1, j), upper(i, j)] });
            }
        }
    }

    let mut kinds = Vec::with_capacity(triangles.len());
    let mut cuts = Vec::new();
    let mut cut_of = vec![None; triangles.len()];
    for (t, tri) in triangles.iter().enumerate() {
        let v = tri.nodes.map(|n| grid.node_position(n));
        let cut_edges = (0..3)
            .filter(|&k| {
                let (a, b) = (tri.nodes[k], tri.nodes[(k + 1) % 3]);
                node_sides[a] != node_sides[b]
                    || geom.segment_crossings(v[k], v[(k + 1) % 3]) > 0
            })
            .count();
        if cut_edges > 2 {
            return Err(IfePicError::UnderResolved { triangle: t, cut_edges });
        }
        let sides = tri.nodes.map(|n| node_sides[n]);
        let kind = if sides.iter().all(|&s| s == Side::Minus) {
            TriangleKind::NonInterfaceMinus
        } else if sides.iter().all(|&s| s == Side::Plus) {
            TriangleKind::NonInterfacePlus
        } else {
            let cut = compute_cut(t, v, sides, &geom)?;
            match cut.degenerate_side() {
                Some(Side::Minus) => TriangleKind::NonInterfaceMinus,
                Some(Side::Plus) => TriangleKind::NonInterfacePlus,
                None => {
                    cut_of[t] = Some(cuts.len());
                    cuts.push(cut);
                    TriangleKind::Interface
                }
            }
        };
        kinds.push(kind);
    }

    Ok(TriangulatedMesh { grid, geometry: geom, node_sides, triangles, kinds, edges, cuts, cut_of })
}

fn sorted2(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn lerp(a: Point, b: Point, t: f64) -> Point {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

/// Signed shoelace area (positive for counter-clockwise polygons).
pub fn polygon_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    let mut s = 0.0;
    for k in 0..n {
        let p = poly[k];
        let q = poly[(k + 1) % n];
        s += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * s
}

/// Fan triangulation of a convex polygon.
pub fn fan_triangles(poly: &[Point]) -> impl Iterator<Item = [Point; 3]> + '_ {
    (1..poly.len().saturating_sub(1)).map(move |k| [poly[0], poly[k], poly[k + 1]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn benchmark(n: usize) -> TriangulatedMesh {
        build_mesh(CartesianGrid::square(n).unwrap(), InterfaceGeometry::circle([0.0, 0.0], PI / 12.0))
            .unwrap()
    }

    fn find_triangle(mesh: &TriangulatedMesh, verts: [Point; 3]) -> usize {
        let close = |a: Point, b: Point| (a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12;
        (0..mesh.triangles.len())
            .find(|&t| {
                let v = mesh.triangle_vertices(t);
                verts.iter().all(|p| v.iter().any(|q| close(*p, *q)))
            })
            .expect("triangle present")
    }

    #[test]
    fn grid_rejects_too_few_cells() {
        assert!(CartesianGrid::square(1).is_err());
        assert!(CartesianGrid::new(0.0, 0.0, 0.0, 1.0, 4, 4).is_err());
    }

    #[test]
    fn classification_examples() {
        let mesh = benchmark(20);
        // phi at (0,0),(0.1,0),(0.1,0.1) is -0.0685, -0.0585, -0.0485
        let t = find_triangle(&mesh, [[0.0, 0.0], [0.1, 0.0], [0.1, 0.1]]);
        assert_eq!(mesh.kinds[t], TriangleKind::NonInterfaceMinus);
        // phi(0.2,0) = -0.0285 < 0, phi(0.3,0) = 0.0215 > 0
        let t = find_triangle(&mesh, [[0.2, 0.0], [0.3, 0.0], [0.3, 0.1]]);
        assert_eq!(mesh.kinds[t], TriangleKind::Interface);
    }

    #[test]
    fn domain_inside_large_circle_has_no_interface() {
        let mesh = build_mesh(CartesianGrid::square(8).unwrap(), InterfaceGeometry::circle([0.0, 0.0], 10.0))
            .unwrap();
        assert!(mesh.kinds.iter().all(|&k| k == TriangleKind::NonInterfaceMinus));
        assert_eq!(mesh.interface_edges().count(), 0);
        assert!(mesh.cuts.is_empty());
    }

    #[test]
    fn edges_have_two_triangles_and_partition_area() {
        let mesh = benchmark(20);
        let n = 20;
        // 3 n^2 - 2n interior edges for the diagonal-split grid
        assert_eq!(mesh.edges.len(), 3 * n * n - 2 * n);
        for e in &mesh.edges {
            assert_ne!(e.triangles[0], e.triangles[1]);
            for &t in &e.triangles {
                assert!(e.nodes.iter().all(|n| mesh.triangles[t].nodes.contains(n)));
            }
        }
        let total: f64 = (0..mesh.triangles.len())
            .map(|t| polygon_area(&mesh.triangle_vertices(t)))
            .sum();
        assert!((total - 4.0).abs() < 1e-12 * 4.0);
    }

    #[test]
    fn edge_root_on_axis() {
        let g = InterfaceGeometry::circle([0.0, 0.0], PI / 12.0);
        let r0 = PI / 12.0;
        let q = edge_root([0.2, 0.0], [0.3, 0.0], &g).unwrap();
        assert!((q[0] - r0).abs() < 1e-12 && q[1] == 0.0);
        let q = edge_root([-r0 - 0.1, 0.0], [-r0 + 0.1, 0.0], &g).unwrap();
        assert!((q[0] + r0).abs() < 1e-12);
        let q = edge_root([r0, 0.0], [0.5, 0.0], &g).unwrap();
        assert_eq!(q, [r0, 0.0]);
        assert!(matches!(
            edge_root([0.5, 0.0], [0.6, 0.0], &g),
            Err(IfePicError::NotBracketing { .. })
        ));
    }

    #[test]
    fn reference_cut() {
        let g = InterfaceGeometry::HalfPlane { normal: [1.0, 1.0], offset: 0.5 };
        let v = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let sides = v.map(|p| if g.level_set(p) < 0.0 { Side::Minus } else { Side::Plus });
        let cut = compute_cut(0, v, sides, &g).unwrap();
        assert!((cut.d[0] - 0.5).abs() < 1e-12 && cut.d[1].abs() < 1e-12);
        assert!(cut.e[0].abs() < 1e-12 && (cut.e[1] - 0.5).abs() < 1e-12);
        assert!((cut.minus_area - 0.125).abs() < 1e-12);
        assert!((cut.plus_area - 0.375).abs() < 1e-12);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((cut.normal[0] - s).abs() < 1e-12 && (cut.normal[1] - s).abs() < 1e-12);
        assert_eq!(cut.degenerate_side(), None);
    }

    #[test]
    fn benchmark_cuts_partition_and_lie_on_interface() {
        let mesh = benchmark(40);
        assert!(!mesh.cuts.is_empty());
        for cut in &mesh.cuts {
            let area = polygon_area(&cut.vertices);
            assert!((cut.area() - area).abs() <= 1e-12 * area);
            assert!(mesh.geometry.level_set(cut.d).abs() < 1e-10);
            assert!(mesh.geometry.level_set(cut.e).abs() < 1e-10);
            let nl = dot(cut.normal, cut.normal).sqrt();
            assert!((nl - 1.0).abs() < 1e-14);
            // normal points away from the circle centre
            let mid = lerp(cut.d, cut.e, 0.5);
            assert!(dot(cut.normal, mid) > 0.0);
        }
    }

    #[test]
    fn interface_iff_two_sign_change_edges() {
        let mesh = benchmark(40);
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let changes = (0..3)
                .filter(|&k| mesh.node_sides[tri.nodes[k]] != mesh.node_sides[tri.nodes[(k + 1) % 3]])
                .count();
            assert!(changes == 0 || changes == 2);
            assert_eq!(mesh.kinds[t] == TriangleKind::Interface, changes == 2);
        }
    }

    #[test]
    fn under_resolved_interface_is_rejected() {
        // circle around the incentre of the lower triangle of cell (1,1),
        // crossing all three of its edges while every vertex stays outside
        let grid = CartesianGrid::square(2).unwrap();
        let geom = InterfaceGeometry::circle([1.0 - 0.2929, 0.2929], 0.35);
        match build_mesh(grid, geom) {
            Err(IfePicError::UnderResolved { cut_edges, .. }) => assert_eq!(cut_edges, 3),
            other => panic!("expected under-resolution error, got {other:?}"),
        }
    }

    #[test]
    fn locate_conventions() {
        let mesh = benchmark(20);
        let loc = mesh.locate([-1.0, -1.0]).unwrap();
        assert_eq!(loc.cell_ij, (0, 0));
        let loc = mesh.locate([0.95, 0.95]).unwrap();
        assert_eq!(loc.cell_ij, (19, 19));
        // interior node (0.1, 0.1) is node (11, 11); lower-index cell is (10, 10)
        let loc = mesh.locate([0.1, 0.1]).unwrap();
        assert_eq!(loc.cell_ij, (10, 10));
        assert!(matches!(mesh.locate([1.5, 0.0]), Err(IfePicError::OutOfDomain { .. })));
        for n in 0..mesh.grid.node_count() {
            mesh.locate(mesh.grid.node_position(n)).unwrap();
        }
        let loc = mesh.locate([1.0, 1.0]).unwrap();
        assert_eq!(loc.cell_ij, (19, 19));
    }

    #[test]
    fn locate_picks_triangle_by_diagonal() {
        let mesh = benchmark(20);
        let below = mesh.locate([-0.96, -0.99]).unwrap();
        let above = mesh.locate([-0.99, -0.96]).unwrap();
        assert_eq!(mesh.triangles[below.triangle].tag, SubTriangle::Lower);
        assert_eq!(mesh.triangles[above.triangle].tag, SubTriangle::Upper);
        assert_eq!(below.side, Side::Plus);
        assert_eq!(mesh.locate([0.0, 0.0]).unwrap().side, Side::Minus);
    }
}
