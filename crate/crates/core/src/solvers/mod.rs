//! Increment solvers, convergence tests, step control and the load-program
//! driver.

mod adaptive;
mod bfgs;
mod config;
mod convergence;
mod driver;
mod increment;
mod model;
mod runlog;

pub use adaptive::{ControllerSettings, IncrementController, StepDecision};
pub use bfgs::BfgsUpdates;
pub use config::{Scheme, SolverConfig};
pub use convergence::{
    check_convergence, check_field, ConvergenceVerdict, FieldStats, FieldVerdict, FluxAverager,
    Tolerances,
};
pub use driver::{
    run_load_program, run_load_program_with, IncrementEvent, LoadProgram, Monitors, RunOutcome,
    Waveform,
};
pub use increment::{
    solve_increment, solve_increment_monolithic, solve_increment_staggered, FluxScales,
    IncrementResult,
};
pub use model::{LoadStep, Model};
pub use runlog::{IncrementRecord, RunLog};
