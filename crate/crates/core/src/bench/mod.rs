//! Benchmark presets, config files, the case runner and scheme comparison.

mod compare;
mod run;
mod spec;

pub use compare::{
    compare_runs, compare_schemes, compare_summaries, ComparisonReport, ComparisonRow,
};
pub use run::{
    branch_tips, build_mesh, build_setup, crack_path_slope, dynamic_time_step, execute,
    preview_mesh, run_case, solver_config, CaseOutcome, MeshSignature, RunSummary, Setup,
    CRACK_THRESHOLD,
};
pub use spec::{
    load_config, parse_config, BoundarySpec, Case, CustomSpec, DynamicSpec, FatigueSpec, Geometry,
    MaterialSpec, RunSpec, SolverSpec, TractionSpec,
};
