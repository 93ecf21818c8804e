//! Domino tilings of multiply-connected lattice domains.

pub mod enumerate;
pub mod heights;
pub mod lattice;
pub mod render;
pub mod sample;
pub mod shapes;
pub mod tension;
pub mod varsolve;

pub use enumerate::{census, count_tilings, enumerate_tilings, verify_cutting_rule, EnumerateError, TilingCensus};
pub use heights::{
    approximate_profile, height_from_tiling, max_extension, min_extension, tiling_from_height, HeightError, HeightFunction, Tiling,
};
pub use lattice::{CutSystem, Dir, LatticeDomain, LatticeError, MonodromyVector, Square, Vertex};
pub use sample::{run_chain, sample_uniform, EmpiricalField, MarkovState, SampleConfig, SampleError};
pub use shapes::ShapeError;
pub use tension::{lobachevsky, sigma, sigma_gradient, solve_slope_system, Slope, SlopeTension, TensionError};
pub use varsolve::{
    build_mesh, compare_to_empirical, functional_value, maximize, AsymptoticHeight, BoundaryData, ContinuumDomain, Mesh, SolveOptions,
    SolveReport, VarSolveError,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
