//! `ifepic`: run the conducting-cylinder benchmark, single deposits, field
//! solves and the full particle loop from the command line.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use ifepic::driver::{
    self, compute_density_metrics, compute_l2_error, interface_nodes, BenchmarkSpec, CycleConfig, MESH_SEQUENCE,
    PER_CELL_COUNTS,
};
use ifepic::geometry::{Point, Side};
use ifepic::ife::BasisTable;
use ifepic::io;
use ifepic::pic::{self, DepositMode, GatherMode, LoadPattern};
use ifepic::solver::{self, RhsMode, Scheme, Source};

/// Relative tolerance of the charge-conservation invariant.
const CONSERVATION_TOL: f64 = 1e-12;

#[derive(Parser, Debug)]
#[command(name = "ifepic", version, about = "Immersed finite element particle-in-cell runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Cells per axis on [-1, 1]^2.
    #[arg(long, global = true)]
    mesh: Option<usize>,
    /// Coefficient inside the conductor.
    #[arg(long, global = true)]
    beta_minus: Option<f64>,
    /// Coefficient in the plasma.
    #[arg(long, global = true)]
    beta_plus: Option<f64>,
    /// PPIFE variant: -1 symmetric, 0 incomplete, 1 nonsymmetric.
    #[arg(long, global = true, allow_hyphen_values = true)]
    epsilon: Option<i8>,
    /// Penalty scale; the edge penalty is sigma * max(beta).
    #[arg(long, global = true)]
    sigma: Option<f64>,
    #[arg(long, global = true, value_enum)]
    deposit: Option<DepositArg>,
    #[arg(long, global = true, value_enum)]
    gather: Option<GatherArg>,
    #[arg(long, global = true, value_enum)]
    scheme: Option<SchemeArg>,
    /// Particles per cell (a perfect square).
    #[arg(long, global = true)]
    particles_per_cell: Option<usize>,
    /// Load an M x M lattice over the whole box instead of per-cell particles.
    #[arg(long, global = true, value_name = "M")]
    global: Option<usize>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Uniform magnetic field along z.
    #[arg(long, global = true, allow_hyphen_values = true)]
    bz: Option<f64>,
    /// Output directory (created if missing).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// `key = value` settings; explicit flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Field solve with the analytic benchmark source and exact boundary data.
    Solve {
        /// Also write the reduced system matrix in coordinate form.
        #[arg(long)]
        dump_matrix: bool,
    },
    /// Load particles, deposit once and export charge and density.
    Deposit,
    /// Deposit, solve, gather and push for the requested number of steps.
    Cycle,
    /// Reproduce one of the benchmark tables.
    Bench {
        #[arg(value_enum)]
        table: TableArg,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum DepositArg {
    Standard,
    Improved,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum GatherArg {
    Fd,
    Ife,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum SchemeArg {
    Galerkin,
    Ppife,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum TableArg {
    Table1,
    Table2,
    Table3,
}

/// Fully resolved run settings.
#[derive(Debug, Clone, PartialEq)]
struct Settings {
    mesh: usize,
    beta_minus: f64,
    beta_plus: f64,
    epsilon: i8,
    sigma: f64,
    deposit: DepositArg,
    gather: GatherArg,
    scheme: SchemeArg,
    particles_per_cell: usize,
    global: Option<usize>,
    dt: f64,
    steps: usize,
    bz: f64,
    out: PathBuf,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            mesh: 40,
            beta_minus: 1.0,
            beta_plus: 10.0,
            epsilon: 1,
            sigma: 10.0,
            deposit: DepositArg::Improved,
            gather: GatherArg::Ife,
            scheme: SchemeArg::Ppife,
            particles_per_cell: 4,
            global: None,
            dt: 0.0,
            steps: 0,
            bz: 0.0,
            out: PathBuf::from("out"),
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| anyhow::anyhow!("invalid value {value:?} for {key}: {e}"))
}

fn parse_enum<T: ValueEnum>(key: &str, value: &str) -> Result<T> {
    T::from_str(value, true).map_err(|e| anyhow::anyhow!("invalid value {value:?} for {key}: {e}"))
}

/// `key = value` lines; `#` starts a comment; keys may use `-` or `_`.
fn read_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("config line {}: expected `key = value`, got {raw:?}", k + 1);
        };
        let key = key.trim().replace('_', "-");
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            bail!("config line {}: duplicate key {key:?}", k + 1);
        }
    }
    Ok(map)
}

impl Settings {
    fn apply_config(&mut self, map: &BTreeMap<String, String>) -> Result<()> {
        for (key, value) in map {
            match key.as_str() {
                "mesh" => self.mesh = parse_value(key, value)?,
                "beta-minus" => self.beta_minus = parse_value(key, value)?,
                "beta-plus" => self.beta_plus = parse_value(key, value)?,
                "epsilon" => self.epsilon = parse_value(key, value)?,
                "sigma" => self.sigma = parse_value(key, value)?,
                "deposit" => self.deposit = parse_enum(key, value)?,
                "gather" => self.gather = parse_enum(key, value)?,
                "scheme" => self.scheme = parse_enum(key, value)?,
                "particles-per-cell" => self.particles_per_cell = parse_value(key, value)?,
                "global" => self.global = Some(parse_value(key, value)?),
                "dt" => self.dt = parse_value(key, value)?,
                "steps" => self.steps = parse_value(key, value)?,
                "bz" => self.bz = parse_value(key, value)?,
                "out" => self.out = PathBuf::from(value),
                _ => bail!("unknown config key {key:?}"),
            }
        }
        Ok(())
    }

    fn apply_flags(&mut self, cli: &Cli) {
        macro_rules! take {
            ($($field:ident),*) => {$(
                if let Some(v) = cli.$field.clone() {
                    self.$field = v;
                }
            )*};
        }
        take!(mesh, beta_minus, beta_plus, epsilon, sigma, deposit, gather, scheme, particles_per_cell, dt, steps, bz, out);
        if cli.global.is_some() {
            self.global = cli.global;
        }
    }

    fn resolve(cli: &Cli) -> Result<Self> {
        let mut s = Settings::default();
        if let Some(path) = &cli.config {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            s.apply_config(&read_config(&text)?).with_context(|| format!("in {}", path.display()))?;
        }
        s.apply_flags(cli);
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if self.mesh < 2 {
            bail!("--mesh must be at least 2");
        }
        if !(self.beta_minus > 0.0 && self.beta_plus > 0.0 && self.beta_minus.is_finite() && self.beta_plus.is_finite()) {
            bail!("coefficients must be positive and finite");
        }
        if !(self.dt >= 0.0 && self.dt.is_finite()) {
            bail!("--dt must be nonnegative");
        }
        if !self.bz.is_finite() {
            bail!("--bz must be finite");
        }
        if self.global == Some(0) {
            bail!("--global must be positive");
        }
        self.spec().per_cell_pattern(self.particles_per_cell)?;
        self.spec().solver_config(self.scheme(), RhsMode::Analytic).validate()?;
        Ok(())
    }

    fn scheme(&self) -> Scheme {
        match self.scheme {
            SchemeArg::Galerkin => Scheme::Galerkin,
            SchemeArg::Ppife => Scheme::Ppife,
        }
    }

    fn deposit_mode(&self) -> DepositMode {
        match self.deposit {
            DepositArg::Standard => DepositMode::Standard,
            DepositArg::Improved => DepositMode::Improved,
        }
    }

    fn gather_mode(&self) -> GatherMode {
        match self.gather {
            GatherArg::Fd => GatherMode::FiniteDifference,
            GatherArg::Ife => GatherMode::Ife,
        }
    }

    fn pattern(&self) -> Result<LoadPattern> {
        match self.global {
            Some(m) => Ok(LoadPattern::Global(m)),
            None => Ok(self.spec().per_cell_pattern(self.particles_per_cell)?),
        }
    }

    fn spec(&self) -> BenchmarkSpec {
        let mut spec = BenchmarkSpec {
            grid_sizes: vec![self.mesh],
            beta_minus: self.beta_minus,
            beta_plus: self.beta_plus,
            epsilon: self.epsilon,
            sigma0: self.sigma,
            deposit: self.deposit_mode(),
            scheme: self.scheme(),
            gather: self.gather_mode(),
            ..BenchmarkSpec::default()
        };
        if let Some(m) = self.global {
            spec.pattern = LoadPattern::Global(m);
        }
        spec
    }
}

fn out_file(settings: &Settings, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(&settings.out).with_context(|| format!("creating {}", settings.out.display()))?;
    Ok(settings.out.join(name))
}

fn relative_defect(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        (a - b).abs() / b.abs()
    }
}

fn run_solve(settings: &Settings, dump_matrix: bool) -> Result<()> {
    let spec = settings.spec();
    let mesh = spec.mesh(settings.mesh)?;
    let basis = BasisTable::build(&mesh, spec.beta_minus, spec.beta_plus)?;
    let exact = spec.exact();
    let config = spec.solver_config(settings.scheme(), RhsMode::Analytic);
    let f = |p: Point, _side: Side| exact.source(p);
    let g = |p: Point| exact.value(p);

    let global = solver::assemble_global(&mesh, &basis, &config)?;
    let load = solver::assemble_load(&mesh, &basis, &Source::Analytic(&f));
    let system = solver::apply_dirichlet(&mesh, &global, &load, &g);
    if dump_matrix {
        let path = out_file(settings, "matrix.txt")?;
        let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        system.matrix.write_coordinate(std::io::BufWriter::new(file))?;
    }
    let solution = solver::solve(&system, &config)?;
    let l2 = compute_l2_error(&mesh, &basis, &solution.potential, &g);
    io::export_nodal_field(&solution.potential, &mesh.grid, &out_file(settings, "potential.csv")?)?;

    println!("mesh = {0}x{0}", settings.mesh);
    println!("interface triangles = {}", mesh.cuts.len());
    println!("iterations = {}", solution.iterations);
    println!("residual = {:.3e}", solution.residual);
    println!("l2_error = {l2:.6e}");
    Ok(())
}

fn run_deposit(settings: &Settings) -> Result<bool> {
    let spec = settings.spec();
    let mesh = spec.mesh(settings.mesh)?;
    let particles = pic::load_uniform(&mesh.grid, &mesh.geometry, settings.pattern()?, spec.rho, 1.0)?;
    let result = pic::deposit_with(settings.deposit_mode(), &particles, &mesh)?;
    let nodes = interface_nodes(&mesh, spec.interface_elements);
    let (rho_bar, err) = compute_density_metrics(&result.density, &nodes, spec.rho)?;
    io::export_nodal_field(&result.charge, &mesh.grid, &out_file(settings, "charge.csv")?)?;
    io::export_nodal_field(&result.density, &mesh.grid, &out_file(settings, "density.csv")?)?;

    let total = particles.total_charge();
    let plasma = result.plasma_charge(&mesh);
    let defect = relative_defect(plasma, total);
    println!("particles = {}", particles.len());
    println!("particle_charge = {total:.17e}");
    println!("deposited_charge = {plasma:.17e}");
    println!("lost_charge = {:.17e}", result.lost_charge);
    println!("interface_nodes = {}", nodes.len());
    println!("rho_bar = {rho_bar:.6}");
    println!("density_error = {:.2}%", 100.0 * err);
    if settings.deposit == DepositArg::Improved && defect > CONSERVATION_TOL {
        eprintln!("error: charge not conserved (relative defect {defect:.3e})");
        return Ok(false);
    }
    Ok(true)
}

fn run_cycle(settings: &Settings) -> Result<bool> {
    let config = CycleConfig {
        spec: settings.spec(),
        mesh: settings.mesh,
        pattern: settings.pattern()?,
        deposit: settings.deposit_mode(),
        gather: settings.gather_mode(),
        scheme: settings.scheme(),
        dt: settings.dt,
        steps: settings.steps,
        bz: settings.bz,
        mass: 1.0,
    };
    let state = driver::run_cycle(&config)?;
    io::export_table(&io::cycle_table(&state.summaries), &out_file(settings, "cycle.csv")?)?;
    io::export_nodal_field(&state.potential, &state.mesh.grid, &out_file(settings, "potential.csv")?)?;
    io::export_nodal_field(&state.density, &state.mesh.grid, &out_file(settings, "density.csv")?)?;
    io::export_particles(&state.particles, &out_file(settings, "particles.csv")?)?;

    let mut ok = true;
    for s in &state.summaries {
        println!(
            "step {:4}  active {:8}  charge {:.6e}  deposited {:.6e}  iterations {}",
            s.step, s.active, s.particle_charge, s.deposited_charge, s.iterations
        );
        let defect = relative_defect(s.deposited_charge, s.particle_charge);
        if settings.deposit == DepositArg::Improved && defect > CONSERVATION_TOL {
            eprintln!("error: step {}: charge not conserved (relative defect {defect:.3e})", s.step);
            ok = false;
        }
    }
    Ok(ok)
}

fn run_bench(settings: &Settings, table: TableArg) -> Result<bool> {
    let spec = settings.spec();
    let (csv, name, ok) = match table {
        TableArg::Table1 => {
            let rows = driver::run_table1(&spec, &PER_CELL_COUNTS)?;
            let worst = rows.iter().map(|r| r.conservation_defect).fold(0.0, f64::max);
            if worst > CONSERVATION_TOL {
                eprintln!("error: improved deposit not conservative (relative defect {worst:.3e})");
            }
            (io::density_table(&rows), "table1.csv", worst <= CONSERVATION_TOL)
        }
        TableArg::Table2 => (io::potential_table(&driver::run_table2(&spec, &PER_CELL_COUNTS)?), "table2.csv", true),
        TableArg::Table3 => (io::convergence_table(&driver::run_table3(&spec, &MESH_SEQUENCE)?), "table3.csv", true),
    };
    io::export_table(&csv, &out_file(settings, name)?)?;
    print!("{}", csv.to_csv());
    Ok(ok)
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("IFEPIC_THREADS") {
        let n: usize = v.trim().parse().with_context(|| format!("IFEPIC_THREADS={v:?} is not a count"))?;
        ifepic::configure_threads(n)?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<bool> {
    configure_threads()?;
    let settings = Settings::resolve(cli)?;
    match &cli.command {
        Command::Solve { dump_matrix } => run_solve(&settings, *dump_matrix).map(|_| true),
        Command::Deposit => run_deposit(&settings),
        Command::Cycle => run_cycle(&settings),
        Command::Bench { table } => run_bench(&settings, *table),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
