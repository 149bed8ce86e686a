//! Error classes and their exit codes.

use tribody_core::analysis::AnalysisError;
use tribody_core::assembly::AssemblyError;
use tribody_core::kernels2d::KernelError;
use tribody_core::onebody::OneBodyError;
use tribody_core::operator_algebra::AlgebraError;
use tribody_core::separation::SeparationError;

use crate::config::ConfigError;

/// Class of a numerical failure, for scripted gates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NumericClass {
    Singular,
    NoConvergence,
    /// Inputs rejected by a numerical routine.
    Input,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("numerical failure: {message}")]
    Numeric { class: NumericClass, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric { class: NumericClass::Singular, .. } => 3,
            CliError::Numeric { class: NumericClass::NoConvergence, .. } => 4,
            CliError::Numeric { class: NumericClass::Input, .. } | CliError::Io(_) | CliError::Output(_) => 1,
        }
    }

    fn numeric(class: NumericClass, e: impl std::fmt::Display) -> Self {
        CliError::Numeric { class, message: e.to_string() }
    }
}

fn onebody_class(e: &OneBodyError) -> NumericClass {
    match e {
        OneBodyError::SingularMomentum { .. } => NumericClass::Singular,
        OneBodyError::NonConstantWronskian { .. } | OneBodyError::IntegratorFailure(_) => NumericClass::NoConvergence,
        OneBodyError::WrongHalfPlane(_) | OneBodyError::InvalidPotential(_) => NumericClass::Input,
    }
}

fn kernel_class(e: &KernelError) -> NumericClass {
    match e {
        KernelError::QuadratureFailure(_) => NumericClass::NoConvergence,
        KernelError::CoincidentPoints | KernelError::DegenerateGeometry => NumericClass::Singular,
        KernelError::OneBody(o) => onebody_class(o),
        _ => NumericClass::Input,
    }
}

fn algebra_class(e: &AlgebraError) -> NumericClass {
    match e {
        AlgebraError::Singular(_) => NumericClass::Singular,
        AlgebraError::SeriesPrecondition { .. } | AlgebraError::Diverged { .. } => NumericClass::NoConvergence,
        AlgebraError::DimensionMismatch { .. } | AlgebraError::Empty => NumericClass::Input,
    }
}

fn assembly_class(e: &AssemblyError) -> NumericClass {
    match e {
        AssemblyError::SingularOperator { .. } => NumericClass::Singular,
        AssemblyError::NoConvergence { .. } | AssemblyError::FarFieldUnstable { .. } => NumericClass::NoConvergence,
        AssemblyError::Kernel(k) => kernel_class(k),
        AssemblyError::Algebra(_) | AssemblyError::InvalidGrid(_) | AssemblyError::InvalidInput(_) => NumericClass::Input,
    }
}

fn separation_class(e: &SeparationError) -> NumericClass {
    match e {
        SeparationError::Singular(_) | SeparationError::IllConditioned { .. } => NumericClass::Singular,
        SeparationError::FitFailure(_) => NumericClass::NoConvergence,
        SeparationError::Assembly(a) => assembly_class(a),
        SeparationError::InvalidInput(_) => NumericClass::Input,
    }
}

fn analysis_class(e: &AnalysisError) -> NumericClass {
    match e {
        AnalysisError::FitFailure(_) => NumericClass::NoConvergence,
        AnalysisError::WindowViolation(_) | AnalysisError::InvalidInput(_) => NumericClass::Input,
    }
}

macro_rules! classify {
    ($($ty:ty => $f:ident),* $(,)?) => {$(
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::numeric($f(&e), e)
            }
        }
    )*};
}

classify! {
    OneBodyError => onebody_class,
    KernelError => kernel_class,
    AlgebraError => algebra_class,
    AssemblyError => assembly_class,
    SeparationError => separation_class,
    AnalysisError => analysis_class,
}
