use thiserror::Error;

use crate::interp::InterpError;
use crate::quadrature::QuadratureError;
use crate::special_fn::SpecialFnError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BasisError {
    #[error("{what} = {value} outside the working range (limit {limit})")]
    Range { what: &'static str, value: f64, limit: f64 },
    #[error("invalid basis parameter {what} = {value}")]
    Parameter { what: &'static str, value: f64 },
    #[error("tridiagonalization broke down at step {step} (off-diagonal {value:e})")]
    Breakdown { step: usize, value: f64 },
    #[error("recursion unstable: defect {defect:e}")]
    Unstable { defect: f64 },
    #[error("imaginary residual {residual:e} on the imaginary axis")]
    ImaginaryResidual { residual: f64 },
    #[error(transparent)]
    Special(#[from] SpecialFnError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ForwardError {
    #[error("energy {energy} hits the spectrum (distance {distance:e})")]
    Pole { energy: f64, distance: f64 },
    #[error("eigen solver did not converge")]
    Convergence,
    #[error("Jacobi reconstruction broke down at step {step}")]
    Breakdown { step: usize },
    #[error("invalid Hamiltonian: {0}")]
    Invalid(String),
    #[error("bound-state root near kappa = {kappa} rejected (residual {residual:e})")]
    RootRejected { kappa: f64, residual: f64 },
    #[error("singular scattering system")]
    Singular,
    #[error(transparent)]
    Basis(#[from] BasisError),
}

impl From<SpecialFnError> for ForwardError {
    fn from(e: SpecialFnError) -> Self {
        ForwardError::Basis(e.into())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InputError {
    #[error("invalid scattering input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Interp(#[from] InterpError),
}

/// Stages of the inversion pipeline, used to label failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Input,
    Taper,
    Quadrature,
    FTable,
    QMatrix,
    Kernel,
    Recover,
    RoundTrip,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Stage::Input => "input",
            Stage::Taper => "taper",
            Stage::Quadrature => "quadrature",
            Stage::FTable => "f-table",
            Stage::QMatrix => "q-matrix",
            Stage::Kernel => "kernel",
            Stage::Recover => "recover",
            Stage::RoundTrip => "round-trip",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InverseError {
    #[error("{stage}: {message}")]
    Stage { stage: Stage, message: String },
    #[error("kernel: singular window system in row {row}")]
    SingularWindow { row: usize },
    #[error("kernel: non-positive normalization {value:e} in row {row}")]
    NonPositive { row: usize, value: f64 },
    #[error("quadrature: {0}")]
    Quadrature(#[from] QuadratureError),
}

impl InverseError {
    pub fn at(stage: Stage, err: impl std::fmt::Display) -> Self {
        InverseError::Stage { stage, message: err.to_string() }
    }

    pub fn stage(&self) -> Stage {
        match self {
            InverseError::Stage { stage, .. } => *stage,
            InverseError::SingularWindow { .. } | InverseError::NonPositive { .. } => Stage::Kernel,
            InverseError::Quadrature(_) => Stage::Quadrature,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RefineError {
    #[error("Newton iteration did not converge in {iterations} steps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("refined lambda_0 = {lambda0} is not below lambda_1 = {lambda1}")]
    Ordering { lambda0: f64, lambda1: f64 },
    #[error("invalid refinement input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Forward(#[from] ForwardError),
}
