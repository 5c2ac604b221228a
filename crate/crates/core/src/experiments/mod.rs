//! Numerical experiments: manufactured-solution convergence sweeps and
//! solid body rotation, with error norms and CSV/VTK output.

mod convergence;
mod norms;
mod output;
mod problems;
mod solid_body;

pub use convergence::{
    fit_order, run_convergence, run_manufactured, strategy_levels, uniform_space,
    ExperimentReport, Rate, RunRecord, Strategy, CONVERGENCE_CFL, FIXED_H_LEVEL,
};
pub use norms::l2_error;
pub use output::{save_cross_section, save_vtk, write_cross_section, write_vtk, CrossSample};
pub use problems::{
    manufactured_problem, manufactured_solution, manufactured_source, manufactured_velocity,
    solid_body_initial, solid_body_problem, solid_body_solution,
};
pub use solid_body::{run_solid_body, run_solid_body_with, Line, SolidBodyRun, CROSS_SAMPLES};
