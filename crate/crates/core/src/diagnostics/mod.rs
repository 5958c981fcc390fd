//! Singularity diagnostics: sign averages, empirical constants, growth
//! parameters, triviality distances and `ψ` brackets.

pub mod constants;
pub mod distance;
pub mod nabla;
pub mod params;
pub mod psi;
pub mod sampling;

pub use constants::{centralizer_constant, centralizer_ratio, quasi_linearity_constant, ConstantEstimate, SamplerConfig};
pub use distance::{triviality_distance, DistanceEstimate, FitConfig, SolverTrace};
pub use nabla::{kalton_peck_nabla_closed_form, nabla, sign_pattern_deviations, Evaluation, NablaMode, NablaResult};
pub use params::{
    duality_check, param_table, parameter_big_m, parameter_small_m, parameters, DualityReport, ParamEstimate,
    ParamStrategy, ParamTable,
};
pub use psi::{
    estimate_chain_check, kalton_peck_track, pconvex_schreier_track, psi_lower_track, psi_upper_scan,
    schreier_half_track, AnalyticParams, ChainReport, LogBase, PsiCandidate, PsiScan,
};
