//! Prints the density, potential and convergence tables of the
//! conducting-cylinder benchmark.

use std::time::Instant;

use ifepic::driver::{run_table1, run_table2, run_table3, BenchmarkSpec, MESH_SEQUENCE, PER_CELL_COUNTS};

fn main() -> ifepic::Result<()> {
    let spec = BenchmarkSpec::default();
    let which: Vec<String> = std::env::args().skip(1).collect();
    let want = |s: &str| which.is_empty() || which.iter().any(|w| w == s);

    if want("table1") {
        let t = Instant::now();
        println!("N  rho_std  err_std  rho_imp  err_imp  defect");
        for r in run_table1(&spec, &PER_CELL_COUNTS)? {
            println!(
                "{:5} {:.6} {:6.2}% {:.6} {:6.2}% {:.1e}",
                r.n,
                r.rho_bar_standard,
                100.0 * r.err_standard,
                r.rho_bar_improved,
                100.0 * r.err_improved,
                r.conservation_defect
            );
        }
        eprintln!("table1: {:?}", t.elapsed());
    }
    if want("table2") {
        let t = Instant::now();
        println!("N  traditional  improved");
        for r in run_table2(&spec, &PER_CELL_COUNTS)? {
            println!("{:5} {:.6e} {:.6e}", r.n, r.traditional, r.improved);
        }
        eprintln!("table2: {:?}", t.elapsed());
    }
    if want("table3") {
        let t = Instant::now();
        let c = run_table3(&spec, &MESH_SEQUENCE)?;
        println!("mesh  traditional  improved");
        for r in &c.rows {
            println!("{:4} {:.6e} {:.6e}", r.n, r.traditional, r.improved);
        }
        println!("rate {:.6} {:.6}", c.rate_traditional, c.rate_improved);
        eprintln!("table3: {:?}", t.elapsed());
    }
    Ok(())
}
