//! Numerical solver for a linear two-sex age-structured population model.
//!
//! The model is a pair of age-structured transport equations coupled through
//! a nonlocal birth law at age zero. Mortality is removed from the transport
//! equations by the survival-probability change of variables `u = p / pi`,
//! leaving a pure ageing equation whose boundary value is a maternity-weighted
//! integral of the standing population. The discrete solver uses backward
//! differences in age and a one-parameter implicit theta-method in time, with
//! a single factorization of the stepping matrix reused across all steps.
//!
//! Modules:
//!
//! * [`grid`], [`lattice`], [`sex`] — age/time lattices, discrete L2 inner
//!   products, difference operators, two-sex containers;
//! * [`survival`], [`fertility`] — mortality, survival and maternity curves;
//! * [`state`] — population states in natural or transformed units;
//! * [`operators`], [`solver`], [`stepper`] — discrete generator and birth
//!   operator, bordered linear solver, theta-method time stepping;
//! * [`analysis`] — energy/Lyapunov functionals, decay rates, error norms;
//! * [`dataio`] — demographic CSV ingestion, disaggregation, interpolation,
//!   annual restriction and result export;
//! * [`pipeline`] — the end-to-end projection run driven by a scenario file.

pub mod analysis;
pub mod dataio;
pub mod error;
pub mod fertility;
pub mod grid;
pub mod lattice;
pub mod operators;
pub mod pipeline;
pub mod sex;
pub mod solver;
pub mod state;
pub mod stepper;
pub mod survival;

pub use error::Error;
pub use fertility::{FertilityModuli, MaternityModuli};
pub use grid::{AgeGrid, TimeGrid};
pub use lattice::{LatticeFunction, Range};
pub use operators::DiscreteOperators;
pub use sex::{Sex, SexPair};
pub use state::{PopulationState, Units};
pub use stepper::{SchemeConfig, StepperWorkspace, Trajectory};
pub use survival::{MortalityCurve, SurvivalCurve};

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
