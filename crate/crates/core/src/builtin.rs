//! Built-in benchmark problems: the discretized Doyle plant with one input and
//! one output, its two-input/two-output variant, and the two initial
//! correlations used with both.

use nalgebra::dmatrix;

use crate::mateq::Matrix;
use crate::problem::{CostWeights, InitialCorrelation, Plant, ProblemInstance};

/// Which initial correlation to attach to a built-in plant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Correlation {
    /// `Y_g`: small cross-correlation, `Y22 ≠ Y12ᵀ`.
    General,
    /// `Y_s`: `Y22 = Y12ᵀ`.
    Special,
}

impl Correlation {
    pub fn label(self) -> &'static str {
        match self {
            Correlation::General => "Y_g",
            Correlation::Special => "Y_s",
        }
    }

    pub fn matrix(self) -> Matrix {
        match self {
            Correlation::General => y_general(),
            Correlation::Special => y_special(),
        }
    }
}

pub fn y_general() -> Matrix {
    dmatrix![
        2.0, 0.0, 0.1, 0.0;
        0.0, 2.0, 0.0, 0.1;
        0.1, 0.0, 1.0, 0.0;
        0.0, 0.1, 0.0, 1.0
    ]
}

pub fn y_special() -> Matrix {
    dmatrix![
        2.0, 0.0, 1.0, 0.0;
        0.0, 2.0, 0.0, 1.0;
        1.0, 0.0, 1.0, 0.0;
        0.0, 1.0, 0.0, 1.0
    ]
}

fn doyle_a() -> Matrix {
    dmatrix![1.1, 0.1; 0.0, 1.1]
}

pub fn doyle_1d_plant() -> Plant {
    Plant::new(doyle_a(), dmatrix![0.0; 0.1], dmatrix![1.0, 1.0]).expect("static dimensions")
}

pub fn doyle_2d_plant() -> Plant {
    Plant::new(
        doyle_a(),
        dmatrix![0.0, 0.1; 0.1, 0.0],
        dmatrix![1.0, 1.0; 0.0, 1.0],
    )
    .expect("static dimensions")
}

/// `Q = 0.25 I₂`, `R = 0.2`.
pub fn doyle_1d_weights() -> CostWeights {
    CostWeights::new(Matrix::identity(2, 2) * 0.25, dmatrix![0.2]).expect("static dimensions")
}

/// Weights for the two-input plant are not given alongside it; the default
/// reuses the single-input weights, `Q = 0.25 I₂` and `R = 0.2 I₂`. With these
/// the reported cost table (25.4400 / 25.1660) is reproduced.
pub fn doyle_2d_default_weights() -> CostWeights {
    CostWeights::new(Matrix::identity(2, 2) * 0.25, Matrix::identity(2, 2) * 0.2)
        .expect("static dimensions")
}

pub fn doyle_1d(correlation: Correlation) -> ProblemInstance {
    ProblemInstance::new(
        doyle_1d_plant(),
        doyle_1d_weights(),
        InitialCorrelation::new(correlation.matrix()).expect("static dimensions"),
    )
    .expect("static dimensions")
}

pub fn doyle_2d(correlation: Correlation) -> ProblemInstance {
    doyle_2d_with_weights(correlation, doyle_2d_default_weights()).expect("static dimensions")
}

pub fn doyle_2d_with_weights(
    correlation: Correlation,
    weights: CostWeights,
) -> crate::Result<ProblemInstance> {
    ProblemInstance::new(
        doyle_2d_plant(),
        weights,
        InitialCorrelation::new(correlation.matrix())?,
    )
}
