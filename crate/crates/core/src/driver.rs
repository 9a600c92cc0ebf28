//! Conducting-cylinder benchmark: exact solution, error metrics, the
//! comparison tables, and the push / deposit / solve / gather loop.

use std::f64::consts::PI;

use crate::error::{IfePicError, Result};
use crate::geometry::{build_mesh, fan_triangles, CartesianGrid, InterfaceGeometry, Point, Side, TriangleKind, TriangulatedMesh};
use crate::ife::BasisTable;
use crate::pic::{self, DepositMode, DepositResult, GatherMode, LoadPattern, ParticleSet};
use crate::quadrature::TriangleRule;
use crate::solver::{solve_field, FieldSolution, RhsMode, Scheme, SolverConfig, Source};

/// Piecewise-quadratic potential of a charged cylinder in a uniform
/// background: `r^2 / beta+` outside, `r^2 / beta- + (1/beta+ - 1/beta-) r0^2`
/// inside. Both sides satisfy `-div(beta grad u) = -4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactSolution {
    pub center: Point,
    pub radius: f64,
    pub beta_minus: f64,
    pub beta_plus: f64,
}

impl ExactSolution {
    pub const SOURCE: f64 = -4.0;

    fn r2(&self, p: Point) -> f64 {
        (p[0] - self.center[0]).powi(2) + (p[1] - self.center[1]).powi(2)
    }

    pub fn value_on(&self, p: Point, side: Side) -> f64 {
        let r2 = self.r2(p);
        match side {
            Side::Plus => r2 / self.beta_plus,
            Side::Minus => r2 / self.beta_minus + (1.0 / self.beta_plus - 1.0 / self.beta_minus) * self.radius.powi(2),
        }
    }

    pub fn value(&self, p: Point) -> f64 {
        let side = if self.r2(p) <= self.radius * self.radius { Side::Minus } else { Side::Plus };
        self.value_on(p, side)
    }

    pub fn gradient_on(&self, p: Point, side: Side) -> Point {
        let beta = match side {
            Side::Plus => self.beta_plus,
            Side::Minus => self.beta_minus,
        };
        [2.0 * (p[0] - self.center[0]) / beta, 2.0 * (p[1] - self.center[1]) / beta]
    }

    pub fn source(&self, _p: Point) -> f64 {
        Self::SOURCE
    }

    /// Largest value and flux jump over `samples` points on the interface.
    pub fn jump_residuals(&self, samples: usize) -> (f64, f64) {
        let mut worst_value = 0.0_f64;
        let mut worst_flux = 0.0_f64;
        for k in 0..samples {
            let a = 2.0 * PI * k as f64 / samples as f64;
            let n = [a.cos(), a.sin()];
            let p = [self.center[0] + self.radius * n[0], self.center[1] + self.radius * n[1]];
            worst_value = worst_value.max((self.value_on(p, Side::Plus) - self.value_on(p, Side::Minus)).abs());
            let gp = self.gradient_on(p, Side::Plus);
            let gm = self.gradient_on(p, Side::Minus);
            let fp = self.beta_plus * (gp[0] * n[0] + gp[1] * n[1]);
            let fm = self.beta_minus * (gm[0] * n[0] + gm[1] * n[1]);
            worst_flux = worst_flux.max((fp - fm).abs());
        }
        (worst_value, worst_flux)
    }
}

/// Which elements define the node set averaged by [`compute_density_metrics`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterfaceElements {
    /// Rectangular cells with corners on both sides (the deposit cells).
    Cells,
    /// Interface triangles of the triangulation.
    Triangles,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSpec {
    pub grid_sizes: Vec<usize>,
    pub beta_minus: f64,
    pub beta_plus: f64,
    pub center: Point,
    pub radius: f64,
    pub rho: f64,
    pub pattern: LoadPattern,
    pub deposit: DepositMode,
    pub scheme: Scheme,
    pub gather: GatherMode,
    pub epsilon: i8,
    pub sigma0: f64,
    pub linear_tol: f64,
    pub interface_elements: InterfaceElements,
    /// Per-cell tables place particles on the corner-anchored sub-lattice
    /// instead of the cell-centred one.
    pub anchored_lattice: bool,
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        Self {
            grid_sizes: vec![40],
            beta_minus: 1.0,
            beta_plus: 10.0,
            center: [0.0, 0.0],
            radius: PI / 12.0,
            rho: -4.0,
            pattern: LoadPattern::Global(1279),
            deposit: DepositMode::Improved,
            scheme: Scheme::Ppife,
            gather: GatherMode::Ife,
            epsilon: 1,
            sigma0: 10.0,
            linear_tol: 1e-10,
            interface_elements: InterfaceElements::Cells,
            anchored_lattice: false,
        }
    }
}

impl BenchmarkSpec {
    pub fn geometry(&self) -> InterfaceGeometry {
        InterfaceGeometry::circle(self.center, self.radius)
    }

    pub fn exact(&self) -> ExactSolution {
        ExactSolution { center: self.center, radius: self.radius, beta_minus: self.beta_minus, beta_plus: self.beta_plus }
    }

    pub fn mesh(&self, n: usize) -> Result<TriangulatedMesh> {
        build_mesh(CartesianGrid::square(n)?, self.geometry())
    }

    /// Load pattern with `n` (a perfect square) particles per cell.
    pub fn per_cell_pattern(&self, n: usize) -> Result<LoadPattern> {
        let k = (n as f64).sqrt().round() as usize;
        if n == 0 || k * k != n {
            return Err(IfePicError::InvalidConfig(format!("particles per cell must be a positive perfect square, got {n}")));
        }
        Ok(if self.anchored_lattice { LoadPattern::PerCellAnchored(k) } else { LoadPattern::PerCell(k) })
    }

    pub fn solver_config(&self, scheme: Scheme, rhs_mode: RhsMode) -> SolverConfig {
        SolverConfig {
            scheme,
            epsilon: self.epsilon,
            sigma0: self.sigma0,
            linear_tol: self.linear_tol,
            rhs_mode,
            ..SolverConfig::default()
        }
    }
}

/// Traditional or improved combination of solver, deposit and gather.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pipeline {
    Traditional,
    Improved,
}

impl Pipeline {
    pub fn scheme(self) -> Scheme {
        match self {
            Pipeline::Traditional => Scheme::Galerkin,
            Pipeline::Improved => Scheme::Ppife,
        }
    }

    pub fn deposit(self) -> DepositMode {
        match self {
            Pipeline::Traditional => DepositMode::Standard,
            Pipeline::Improved => DepositMode::Improved,
        }
    }

    pub fn gather(self) -> GatherMode {
        match self {
            Pipeline::Traditional => GatherMode::FiniteDifference,
            Pipeline::Improved => GatherMode::Ife,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub rho_bar: f64,
    pub density_error: f64,
    pub l2_error: f64,
}

/// Nodes outside the conductor that belong to at least one interface
/// element.
pub fn interface_nodes(mesh: &TriangulatedMesh, elements: InterfaceElements) -> Vec<usize> {
    let mut mark = vec![false; mesh.grid.node_count()];
    match elements {
        InterfaceElements::Cells => {
            for c in 0..mesh.grid.cell_count() {
                if mesh.is_interface_cell(c) {
                    for n in mesh.grid.cell_corners(c) {
                        mark[n] = true;
                    }
                }
            }
        }
        InterfaceElements::Triangles => {
            for (t, tri) in mesh.triangles.iter().enumerate() {
                if mesh.kinds[t] == TriangleKind::Interface {
                    for &n in &tri.nodes {
                        mark[n] = true;
                    }
                }
            }
        }
    }
    (0..mark.len()).filter(|&n| mark[n] && mesh.node_sides[n] == Side::Plus).collect()
}

/// Mean interface-node density and its relative deviation from `rho`.
pub fn compute_density_metrics(density: &[f64], nodes: &[usize], rho: f64) -> Result<(f64, f64)> {
    if nodes.is_empty() {
        return Err(IfePicError::EmptyInterfaceNodes);
    }
    let rho_bar = nodes.iter().map(|&n| density[n]).sum::<f64>() / nodes.len() as f64;
    Ok((rho_bar, (rho - rho_bar).abs() / rho.abs()))
}

/// `|| u - u_h ||_L2` over the whole box with the degree-4 rule on every
/// sub-region.
pub fn compute_l2_error(mesh: &TriangulatedMesh, basis: &BasisTable, potential: &[f64], exact: &dyn Fn(Point) -> f64) -> f64 {
    l2_error_with_rule(mesh, basis, potential, exact, &TriangleRule::degree4())
}

pub fn l2_error_with_rule(
    mesh: &TriangulatedMesh,
    basis: &BasisTable,
    potential: &[f64],
    exact: &dyn Fn(Point) -> f64,
    rule: &TriangleRule,
) -> f64 {
    let mut total = 0.0;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for (poly, side) in basis.regions(mesh, t) {
            let pieces = basis.pieces(t, side);
            for sub_tri in fan_triangles(&poly) {
                total += rule.integrate(&sub_tri, |x| {
                    let uh: f64 = (0..3).map(|i| potential[tri.nodes[i]] * pieces[i].eval(x)).sum();
                    (exact(x) - uh).powi(2)
                });
            }
        }
    }
    total.sqrt()
}

/// Least-squares slope of `log(error)` against `log(h)`.
pub fn convergence_rate(h: &[f64], err: &[f64]) -> f64 {
    let n = h.len() as f64;
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Static deposit-and-solve on one mesh.
#[derive(Debug, Clone)]
pub struct StaticRun {
    pub deposit: DepositResult,
    pub solution: FieldSolution,
    pub l2_error: f64,
    pub particle_charge: f64,
}

pub fn run_static(
    spec: &BenchmarkSpec,
    mesh: &TriangulatedMesh,
    basis: &BasisTable,
    particles: &ParticleSet,
    pipeline: Pipeline,
) -> Result<StaticRun> {
    let exact = spec.exact();
    let deposit = pic::deposit_with(pipeline.deposit(), particles, mesh)?;
    let cfg = spec.solver_config(pipeline.scheme(), RhsMode::NodalDensity);
    let minus = |p: Point| exact.source(p);
    let source = Source::NodalDensity { density: &deposit.density, minus_side: Some(&minus) };
    let solution = solve_field(mesh, basis, &cfg, &source, &|p| exact.value(p))?;
    let l2_error = compute_l2_error(mesh, basis, &solution.potential, &|p| exact.value(p));
    Ok(StaticRun { deposit, solution, l2_error, particle_charge: particles.total_charge() })
}

/// Particle counts per cell used by the density and potential tables.
pub const PER_CELL_COUNTS: [usize; 6] = [1, 4, 16, 64, 256, 1024];

/// Mesh sequence of the convergence table.
pub const MESH_SEQUENCE: [usize; 6] = [10, 20, 40, 80, 160, 320];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityRow {
    pub n: usize,
    pub rho_bar_standard: f64,
    pub err_standard: f64,
    pub rho_bar_improved: f64,
    pub err_improved: f64,
    /// `|nodal - particle| / |particle|` for the improved deposit.
    pub conservation_defect: f64,
}

pub fn run_table1(spec: &BenchmarkSpec, counts: &[usize]) -> Result<Vec<DensityRow>> {
    let n_mesh = spec.grid_sizes.first().copied().unwrap_or(40);
    let mesh = spec.mesh(n_mesh)?;
    let nodes = interface_nodes(&mesh, spec.interface_elements);
    counts
        .iter()
        .map(|&n| {
            let particles = pic::load_uniform(&mesh.grid, &mesh.geometry, spec.per_cell_pattern(n)?, spec.rho, 1.0)?;
            let std = pic::deposit_standard(&particles, &mesh)?;
            let imp = pic::deposit_improved(&particles, &mesh)?;
            let (rho_bar_standard, err_standard) = compute_density_metrics(&std.density, &nodes, spec.rho)?;
            let (rho_bar_improved, err_improved) = compute_density_metrics(&imp.density, &nodes, spec.rho)?;
            let total = particles.total_charge();
            let nodal = imp.total_charge();
            Ok(DensityRow {
                n,
                rho_bar_standard,
                err_standard,
                rho_bar_improved,
                err_improved,
                conservation_defect: (nodal - total).abs() / total.abs(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRow {
    /// Particles per cell (potential table) or cells per axis (convergence
    /// table).
    pub n: usize,
    pub traditional: f64,
    pub improved: f64,
}

pub fn run_table2(spec: &BenchmarkSpec, counts: &[usize]) -> Result<Vec<ErrorRow>> {
    let n_mesh = spec.grid_sizes.first().copied().unwrap_or(40);
    let mesh = spec.mesh(n_mesh)?;
    let basis = BasisTable::build(&mesh, spec.beta_minus, spec.beta_plus)?;
    counts
        .iter()
        .map(|&n| {
            let particles = pic::load_uniform(&mesh.grid, &mesh.geometry, spec.per_cell_pattern(n)?, spec.rho, 1.0)?;
            let trad = run_static(spec, &mesh, &basis, &particles, Pipeline::Traditional)?;
            let imp = run_static(spec, &mesh, &basis, &particles, Pipeline::Improved)?;
            Ok(ErrorRow { n, traditional: trad.l2_error, improved: imp.l2_error })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<ErrorRow>,
    pub rate_traditional: f64,
    pub rate_improved: f64,
}

pub fn run_table3(spec: &BenchmarkSpec, meshes: &[usize]) -> Result<ConvergenceTable> {
    let mut rows = Vec::with_capacity(meshes.len());
    for &n in meshes {
        let mesh = spec.mesh(n)?;
        let basis = BasisTable::build(&mesh, spec.beta_minus, spec.beta_plus)?;
        let particles = pic::load_uniform(&mesh.grid, &mesh.geometry, spec.pattern, spec.rho, 1.0)?;
        let trad = run_static(spec, &mesh, &basis, &particles, Pipeline::Traditional)?;
        let imp = run_static(spec, &mesh, &basis, &particles, Pipeline::Improved)?;
        rows.push(ErrorRow { n, traditional: trad.l2_error, improved: imp.l2_error });
    }
    let h: Vec<f64> = meshes.iter().map(|&n| 2.0 / n as f64).collect();
    let trad: Vec<f64> = rows.iter().map(|r| r.traditional).collect();
    let imp: Vec<f64> = rows.iter().map(|r| r.improved).collect();
    Ok(ConvergenceTable { rate_traditional: convergence_rate(&h, &trad), rate_improved: convergence_rate(&h, &imp), rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleConfig {
    pub spec: BenchmarkSpec,
    pub mesh: usize,
    pub pattern: LoadPattern,
    pub deposit: DepositMode,
    pub gather: GatherMode,
    pub scheme: Scheme,
    pub dt: f64,
    pub steps: usize,
    pub bz: f64,
    pub mass: f64,
}

impl Default for CycleConfig {
    fn default() -> Self {
        Self {
            spec: BenchmarkSpec::default(),
            mesh: 40,
            pattern: LoadPattern::PerCell(2),
            deposit: DepositMode::Improved,
            gather: GatherMode::Ife,
            scheme: Scheme::Ppife,
            dt: 0.0,
            steps: 0,
            bz: 0.0,
            mass: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSummary {
    pub step: usize,
    pub active: usize,
    pub particle_charge: f64,
    /// Charge on nodes outside the conductor.
    pub deposited_charge: f64,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct CycleState {
    pub summaries: Vec<StepSummary>,
    pub particles: ParticleSet,
    pub potential: Vec<f64>,
    pub density: Vec<f64>,
    pub mesh: TriangulatedMesh,
}

/// Initial deposit / solve / gather, then `steps` repetitions of
/// push, deposit, solve, gather.
pub fn run_cycle(config: &CycleConfig) -> Result<CycleState> {
    if !(config.dt >= 0.0 && config.mass > 0.0) {
        return Err(IfePicError::InvalidConfig("dt must be nonnegative and mass positive".into()));
    }
    let spec = &config.spec;
    let mesh = spec.mesh(config.mesh)?;
    let basis = BasisTable::build(&mesh, spec.beta_minus, spec.beta_plus)?;
    let exact = spec.exact();
    let mut particles = pic::load_uniform(&mesh.grid, &mesh.geometry, config.pattern, spec.rho, config.mass)?;
    let cfg = spec.solver_config(config.scheme, RhsMode::NodalDensity);
    let minus = |p: Point| exact.source(p);

    let field_step = |particles: &ParticleSet, step: usize| -> Result<(DepositResult, FieldSolution, Vec<Point>, StepSummary)> {
        let deposit = pic::deposit_with(config.deposit, particles, &mesh)?;
        let source = Source::NodalDensity { density: &deposit.density, minus_side: Some(&minus) };
        let solution = solve_field(&mesh, &basis, &cfg, &source, &|p| exact.value(p))
            .map_err(|e| IfePicError::CycleStep { step, source: Box::new(e) })?;
        let e_at = pic::gather_all(config.gather, particles, &mesh, &basis, &solution.potential)?;
        let summary = StepSummary {
            step,
            active: particles.len(),
            particle_charge: particles.total_charge(),
            deposited_charge: deposit.plasma_charge(&mesh),
            residual: solution.residual,
            iterations: solution.iterations,
        };
        Ok((deposit, solution, e_at, summary))
    };

    let (mut deposit, mut solution, mut e_at, summary) = field_step(&particles, 0)?;
    let mut summaries = vec![summary];
    for step in 1..=config.steps {
        pic::push_boris(&mut particles, &e_at, config.bz, config.dt, &mesh.grid, &mesh.geometry);
        // removal invalidates the per-particle field; it is recomputed below
        let (d, s, e, summary) = field_step(&particles, step)?;
        deposit = d;
        solution = s;
        e_at = e;
        summaries.push(summary);
    }
    Ok(CycleState { summaries, particles, potential: solution.potential, density: deposit.density, mesh })
}
