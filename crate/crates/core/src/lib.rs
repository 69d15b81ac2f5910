//! Critical points of the double-well gradient energy
//! `P(u) = ∫ ½ν(½|∇u|² - λ)² dμ - ∫ f u dμ - ∫_{Γt} t u dΓ`
//! through its canonical dual.
//!
//! The dual problem reduces to the cubic `|σ|² = 2ζ²(λ + ζ/ν)` at every point.
//! Its real roots are found in closed form ([`dae`]), turned into primal
//! solutions `ū' = σ/ζ̄` by integration ([`reconstruct`]), and checked for the
//! zero duality gap and their extremality type ([`verify`]).
//!
//! All numerical code is generic over [`Real`] (`f32` or `f64`); the aliases
//! at the crate root fix the scalar to `f64`.
//!
//! ```
//! use dualwell::{solve_dae, Material, StressSample};
//!
//! let roots = solve_dae(StressSample::new(1.0 / 9.0).unwrap(), &Material::unit(), 1e-12);
//! assert!((roots.zeta1.unwrap() - 0.213928).abs() < 1e-6);
//! assert_eq!(roots.count(), 3);
//! ```

// NaN inputs must fail the range checks, hence `!(a < b)` throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dae;
pub mod energy;
pub mod error;
pub mod numerics;
pub mod problems;
pub mod reconstruct;
pub mod scalar;
pub mod verify;

pub use dae::{
    cardano_roots, classify_regime, dae_residual, sigma_threshold, solve_dae, trig_roots, Regime,
    DEFAULT_REGIME_TOL,
};
pub use error::{Error, Result};
pub use numerics::{integrate_adaptive, make_radial_grid};
pub use problems::{check_load_balance, problem_from_json, ProblemConfig};
pub use reconstruct::{compatibility_residual, path_integral_u, pde_residual, solve_branch};
pub use scalar::Real;
pub use verify::{
    classify_branch, duality_gap, perturbation_probe, run_suite, stationarity_probe, Check,
    SuiteOptions, TrialityLabel, VerificationReport,
};

pub type Material = dae::Material<f64>;
pub type StressSample = dae::StressSample<f64>;
pub type RootSet = dae::RootSet<f64>;
pub type RadialGrid = numerics::RadialGrid<f64>;
pub type GaussLegendre = numerics::GaussLegendre<f64>;
pub type RadialField = energy::RadialField<f64>;
pub type EnergyReport = energy::EnergyReport<f64>;
pub type AnnulusProblem = problems::AnnulusProblem<f64>;
pub type Bar1DProblem = problems::Bar1DProblem<f64>;
pub type BarSource = problems::BarSource<f64>;
pub type Problem = problems::Problem<f64>;
pub type BranchMap = reconstruct::BranchMap<f64>;
pub type Segment = reconstruct::Segment<f64>;
pub type SolutionBranch = reconstruct::SolutionBranch<f64>;
