//! Classical Galerkin and partially penalized IFE discretisations of
//! `-div(beta grad u) = f` with Dirichlet data on the box boundary.

use rayon::prelude::*;

use crate::error::{IfePicError, Result};
use crate::geometry::{dot, edge_root, lerp, sub, Edge, Point, Side, TriangulatedMesh};
use crate::ife::BasisTable;
use crate::quadrature::{TriangleRule, GAUSS2};
use crate::sparse::{bicgstab, pcg, CsrMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Galerkin,
    Ppife,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhsMode {
    Analytic,
    NodalDensity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub scheme: Scheme,
    /// -1 symmetric, 0 incomplete, +1 nonsymmetric.
    pub epsilon: i8,
    /// Penalty scale; the edge penalty is `sigma0 * max(beta-, beta+)`.
    pub sigma0: f64,
    pub linear_tol: f64,
    pub max_iterations: usize,
    pub rhs_mode: RhsMode,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Ppife,
            epsilon: 1,
            sigma0: 10.0,
            linear_tol: 1e-10,
            max_iterations: 20_000,
            rhs_mode: RhsMode::Analytic,
        }
    }
}

impl SolverConfig {
    pub fn galerkin() -> Self {
        Self { scheme: Scheme::Galerkin, ..Self::default() }
    }

    pub fn ppife(epsilon: i8, sigma0: f64) -> Self {
        Self { scheme: Scheme::Ppife, epsilon, sigma0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if ![-1, 0, 1].contains(&self.epsilon) {
            return Err(IfePicError::InvalidConfig(format!("epsilon must be -1, 0 or 1, got {}", self.epsilon)));
        }
        if !(self.sigma0 >= 0.0 && self.sigma0.is_finite()) {
            return Err(IfePicError::InvalidConfig(format!("sigma0 must be nonnegative, got {}", self.sigma0)));
        }
        if self.scheme == Scheme::Ppife && self.epsilon != 1 && self.sigma0 <= 0.0 {
            return Err(IfePicError::InvalidConfig(
                "symmetric and incomplete PPIFE need a positive penalty".into(),
            ));
        }
        if !(self.linear_tol > 0.0 && self.linear_tol < 1.0) {
            return Err(IfePicError::InvalidConfig(format!("linear_tol must lie in (0, 1), got {}", self.linear_tol)));
        }
        if self.max_iterations == 0 {
            return Err(IfePicError::InvalidConfig("max_iterations must be positive".into()));
        }
        Ok(())
    }

    pub fn is_symmetric(&self) -> bool {
        self.scheme == Scheme::Galerkin || self.epsilon == -1
    }
}

/// Right-hand side of the field equation.
pub enum Source<'a> {
    /// `f(x, side)`.
    Analytic(&'a (dyn Fn(Point, Side) -> f64 + Sync)),
    /// Continuous piecewise-linear interpolant of nodal values. When
    /// `minus_side` is given it replaces the interpolant on conductor-side
    /// pieces and supplies the nodal values at conductor nodes.
    NodalDensity {
        density: &'a [f64],
        minus_side: Option<&'a (dyn Fn(Point) -> f64 + Sync)>,
    },
}

impl Source<'_> {
    pub fn mode(&self) -> RhsMode {
        match self {
            Source::Analytic(_) => RhsMode::Analytic,
            Source::NodalDensity { .. } => RhsMode::NodalDensity,
        }
    }
}

/// Dense block contributed by one triangle or edge, indexed by `nodes`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalBlock {
    pub nodes: Vec<usize>,
    /// Row-major `nodes.len()` squared; row = test function, column = trial.
    pub values: Vec<f64>,
}

impl LocalBlock {
    fn zeros(nodes: Vec<usize>) -> Self {
        let n = nodes.len();
        Self { nodes, values: vec![0.0; n * n] }
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.nodes.len() + c]
    }

    fn add(&mut self, r: usize, c: usize, v: f64) {
        let n = self.nodes.len();
        self.values[r * n + c] += v;
    }
}

/// Per-triangle stiffness blocks `sum_pieces beta |piece| grad phi_i . grad phi_j`.
pub fn assemble_volume(mesh: &TriangulatedMesh, basis: &BasisTable) -> Vec<LocalBlock> {
    (0..mesh.triangles.len())
        .into_par_iter()
        .map(|t| volume_block(mesh, basis, t))
        .collect()
}

fn volume_block(mesh: &TriangulatedMesh, basis: &BasisTable, t: usize) -> LocalBlock {
    let mut block = LocalBlock::zeros(mesh.triangles[t].nodes.to_vec());
    let pieces_and_areas: Vec<(Side, f64)> = match mesh.cut(t) {
        Some(cut) if matches!(basis.local[t], crate::ife::LocalBasis::Immersed { .. }) => {
            vec![(Side::Plus, cut.plus_area), (Side::Minus, cut.minus_area)]
        }
        _ => vec![(basis.effective_side(t, Side::Plus), mesh.triangle_area())],
    };
    for (side, area) in pieces_and_areas {
        let beta = basis.beta(side);
        let p = basis.pieces(t, side);
        for i in 0..3 {
            for j in 0..3 {
                block.add(i, j, beta * area * dot(p[i].grad(), p[j].grad()));
            }
        }
    }
    block
}

/// Trace data of one triangle's local functions along an edge segment.
struct Trace<'a> {
    nodes: [usize; 3],
    pieces: &'a [crate::ife::LinearPiece; 3],
    beta: f64,
}

/// Interface-edge blocks of the PPIFE form: consistency, symmetrisation and
/// penalty terms.
pub fn assemble_penalty(mesh: &TriangulatedMesh, basis: &BasisTable, config: &SolverConfig) -> Result<Vec<LocalBlock>> {
    config.validate()?;
    if config.scheme != Scheme::Ppife {
        return Err(IfePicError::InvalidConfig("penalty terms requested for a non-PPIFE scheme".into()));
    }
    let sigma = config.sigma0 * basis.beta_minus.max(basis.beta_plus);
    let eps = f64::from(config.epsilon);
    let edges: Vec<&Edge> = mesh.interface_edges().collect();
    edges
        .into_par_iter()
        .map(|e| edge_block(mesh, basis, e, eps, sigma))
        .collect()
}

fn edge_block(mesh: &TriangulatedMesh, basis: &BasisTable, e: &Edge, eps: f64, sigma: f64) -> Result<LocalBlock> {
    let grid = &mesh.grid;
    let [t1, t2] = e.triangles;
    let mut nodes: Vec<usize> = mesh.triangles[t1].nodes.to_vec();
    for &n in &mesh.triangles[t2].nodes {
        if !nodes.contains(&n) {
            nodes.push(n);
        }
    }
    let mut block = LocalBlock::zeros(nodes.clone());
    let local_index = |n: usize| nodes.iter().position(|&m| m == n).unwrap();

    let p = grid.node_position(e.nodes[0]);
    let q = grid.node_position(e.nodes[1]);
    let tangent = sub(q, p);
    let len = dot(tangent, tangent).sqrt();
    // normal from t1 into t2: t1's third vertex lies on the opposite side
    let mut normal = [tangent[1] / len, -tangent[0] / len];
    let third = mesh.triangles[t1]
        .nodes
        .iter()
        .copied()
        .find(|n| !e.nodes.contains(n))
        .unwrap();
    if dot(normal, sub(grid.node_position(third), p)) > 0.0 {
        normal = [-normal[0], -normal[1]];
    }

    // sub-segments with a single piece on each side
    let sp = mesh.node_sides[e.nodes[0]];
    let sq = mesh.node_sides[e.nodes[1]];
    let segments: Vec<(Point, Point, Side)> = if sp == sq {
        vec![(p, q, sp)]
    } else {
        let c = canonical_root(p, q, mesh)?;
        vec![(p, c, sp), (c, q, sq)]
    };

    for (a, b, side) in segments {
        let seg_len = dot(sub(b, a), sub(b, a)).sqrt();
        if seg_len == 0.0 {
            continue;
        }
        let traces: [Trace; 2] = [t1, t2].map(|t| {
            let s = basis.effective_side(t, side);
            Trace { nodes: mesh.triangles[t].nodes, pieces: basis.pieces(t, s), beta: basis.beta(s) }
        });
        for &(xi, w) in &GAUSS2 {
            let x = lerp(a, b, xi);
            let wq = w * seg_len;
            // jump and average-flux of every local function at x
            let mut jump = vec![0.0; nodes.len()];
            let mut avg_flux = vec![0.0; nodes.len()];
            for (k, tr) in traces.iter().enumerate() {
                let sign = if k == 0 { 1.0 } else { -1.0 };
                for (i, &n) in tr.nodes.iter().enumerate() {
                    let li = local_index(n);
                    jump[li] += sign * tr.pieces[i].eval(x);
                    avg_flux[li] += 0.5 * tr.beta * dot(tr.pieces[i].grad(), normal);
                }
            }
            for r in 0..nodes.len() {
                for c in 0..nodes.len() {
                    let v = -avg_flux[c] * jump[r] + eps * avg_flux[r] * jump[c] + sigma / len * jump[c] * jump[r];
                    block.add(r, c, wq * v);
                }
            }
        }
    }
    Ok(block)
}

fn canonical_root(a: Point, b: Point, mesh: &TriangulatedMesh) -> Result<Point> {
    if (a[0], a[1]) <= (b[0], b[1]) {
        edge_root(a, b, &mesh.geometry)
    } else {
        edge_root(b, a, &mesh.geometry)
    }
}

/// Global matrix over all mesh nodes (no boundary elimination).
pub fn assemble_global(mesh: &TriangulatedMesh, basis: &BasisTable, config: &SolverConfig) -> Result<CsrMatrix> {
    config.validate()?;
    let mut triplets = Vec::with_capacity(9 * mesh.triangles.len());
    let mut push = |b: &LocalBlock| {
        for (r, &nr) in b.nodes.iter().enumerate() {
            for (c, &nc) in b.nodes.iter().enumerate() {
                triplets.push((nr, nc, b.at(r, c)));
            }
        }
    };
    for b in assemble_volume(mesh, basis) {
        push(&b);
    }
    if config.scheme == Scheme::Ppife {
        for b in assemble_penalty(mesh, basis, config)? {
            push(&b);
        }
    }
    let n = mesh.grid.node_count();
    Ok(CsrMatrix::from_triplets(n, n, &triplets))
}

/// Load vector `(f, phi_i)` over all mesh nodes.
pub fn assemble_load(mesh: &TriangulatedMesh, basis: &BasisTable, source: &Source) -> Vec<f64> {
    let rule = TriangleRule::degree4();
    // With a conductor-side closure, conductor nodes take its value as well:
    // plasma charge never lands there, and a zero would drag the interpolant
    // on the plasma side of interface triangles toward zero.
    let nodal: Vec<f64> = match source {
        Source::NodalDensity { density, minus_side } => {
            assert_eq!(density.len(), mesh.grid.node_count(), "density must be sized to the node count");
            match minus_side {
                Some(g) => (0..density.len())
                    .map(|n| match mesh.node_sides[n] {
                        Side::Minus => g(mesh.grid.node_position(n)),
                        Side::Plus => density[n],
                    })
                    .collect(),
                None => density.to_vec(),
            }
        }
        Source::Analytic(_) => Vec::new(),
    };
    let blocks: Vec<[f64; 3]> = (0..mesh.triangles.len())
        .into_par_iter()
        .map(|t| {
            let verts = mesh.triangle_vertices(t);
            let nodes = mesh.triangles[t].nodes;
            let hat = crate::ife::standard_basis(&verts);
            let mut out = [0.0; 3];
            for (poly, side) in basis.regions(mesh, t) {
                let pieces = basis.pieces(t, side);
                for sub_tri in crate::geometry::fan_triangles(&poly) {
                    for (i, piece) in pieces.iter().enumerate() {
                        out[i] += rule.integrate(&sub_tri, |x| {
                            let f = match source {
                                Source::Analytic(f) => f(x, side),
                                Source::NodalDensity { minus_side, .. } => match (side, minus_side) {
                                    (Side::Minus, Some(g)) => g(x),
                                    _ => (0..3).map(|k| nodal[nodes[k]] * hat[k].eval(x)).sum(),
                                },
                            };
                            f * piece.eval(x)
                        });
                    }
                }
            }
            out
        })
        .collect();
    let mut load = vec![0.0; mesh.grid.node_count()];
    for (t, b) in blocks.iter().enumerate() {
        for (i, &n) in mesh.triangles[t].nodes.iter().enumerate() {
            load[n] += b[i];
        }
    }
    load
}

/// Reduced system on the free (interior) nodes.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub free_to_global: Vec<usize>,
    /// `usize::MAX` for Dirichlet nodes.
    pub global_to_free: Vec<usize>,
    /// Boundary values at every node (zero at free nodes).
    pub dirichlet: Vec<f64>,
}

/// Eliminates boundary rows and moves known boundary values to the
/// right-hand side.
pub fn apply_dirichlet(mesh: &TriangulatedMesh, global: &CsrMatrix, load: &[f64], g: &dyn Fn(Point) -> f64) -> SparseSystem {
    let grid = &mesh.grid;
    let n = grid.node_count();
    let mut global_to_free = vec![usize::MAX; n];
    let mut free_to_global = Vec::new();
    let mut dirichlet = vec![0.0; n];
    for node in 0..n {
        if grid.is_boundary_node(node) {
            dirichlet[node] = g(grid.node_position(node));
        } else {
            global_to_free[node] = free_to_global.len();
            free_to_global.push(node);
        }
    }
    let mut triplets = Vec::with_capacity(global.nnz());
    let mut rhs = Vec::with_capacity(free_to_global.len());
    for (fr, &r) in free_to_global.iter().enumerate() {
        let mut b = load[r];
        for (c, v) in global.row(r) {
            match global_to_free[c] {
                usize::MAX => b -= v * dirichlet[c],
                fc => triplets.push((fr, fc, v)),
            }
        }
        rhs.push(b);
    }
    let m = free_to_global.len();
    SparseSystem { matrix: CsrMatrix::from_triplets(m, m, &triplets), rhs, free_to_global, global_to_free, dirichlet }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSolution {
    /// Nodal potential at every mesh node.
    pub potential: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

pub fn solve(system: &SparseSystem, config: &SolverConfig) -> Result<FieldSolution> {
    config.validate()?;
    let mut x = vec![0.0; system.rhs.len()];
    let out = if config.is_symmetric() {
        pcg(&system.matrix, &system.rhs, &mut x, config.linear_tol, config.max_iterations)?
    } else {
        bicgstab(&system.matrix, &system.rhs, &mut x, config.linear_tol, config.max_iterations)?
    };
    let mut potential = system.dirichlet.clone();
    for (f, &g) in system.free_to_global.iter().enumerate() {
        potential[g] = x[f];
    }
    Ok(FieldSolution { potential, residual: out.residual, iterations: out.iterations })
}

/// Assemble, eliminate boundary values, and solve in one call.
pub fn solve_field(
    mesh: &TriangulatedMesh,
    basis: &BasisTable,
    config: &SolverConfig,
    source: &Source,
    g: &dyn Fn(Point) -> f64,
) -> Result<FieldSolution> {
    config.validate()?;
    if source.mode() != config.rhs_mode {
        return Err(IfePicError::InvalidConfig(format!(
            "source is {:?} but the configuration requests {:?}",
            source.mode(),
            config.rhs_mode
        )));
    }
    let global = assemble_global(mesh, basis, config)?;
    let load = assemble_load(mesh, basis, source);
    let system = apply_dirichlet(mesh, &global, &load, g);
    solve(&system, config)
}
