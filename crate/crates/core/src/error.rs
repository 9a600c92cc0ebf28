use thiserror::Error;

pub type Result<T> = std::result::Result<T, IfePicError>;

#[derive(Debug, Error)]
pub enum IfePicError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("interface under-resolved: triangle {triangle} has {cut_edges} cut edges")]
    UnderResolved { triangle: usize, cut_edges: usize },

    #[error("edge root requested on non-bracketing segment (phi = {phi1:e}, {phi2:e})")]
    NotBracketing { phi1: f64, phi2: f64 },

    #[error("position ({x}, {y}) lies outside the domain")]
    OutOfDomain { x: f64, y: f64 },

    #[error("degenerate cut on triangle {triangle}: condition estimate {condition:e}")]
    DegenerateCut { triangle: usize, condition: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    SolverFailure { iterations: usize, residual: f64 },

    #[error("cell {cell} has all corners inside the conductor but contains an active particle")]
    GeometryInconsistency { cell: usize },

    #[error("particle at ({x}, {y}) is inside the conductor")]
    InsideConductor { x: f64, y: f64 },

    #[error("interface node set is empty")]
    EmptyInterfaceNodes,

    #[error("field solve failed at step {step}: {source}")]
    CycleStep {
        step: usize,
        #[source]
        source: Box<IfePicError>,
    },

    #[error("charge conservation violated: nodal {nodal:e} vs particles {particles:e}")]
    ChargeNotConserved { nodal: f64, particles: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
