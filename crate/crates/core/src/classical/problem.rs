//! 1D Poisson problem description shared by all solvers.
//!
//! The discrete operator is A = tridiag(1, -2, 1) / dx^2 at every row; all N
//! grid values are unknowns and Dirichlet data enters exclusively through the
//! ghost values u_{-1} and u_N supplied by the boundary oracle. dx is
//! restricted to powers of two so the Jacobi division by the diagonal is an
//! exact shift in fixed point.

use crate::error::{Error, Result};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Right-hand side oracle: f(i) generated on the fly from the grid index.
#[derive(Clone)]
pub enum Rhs {
    Zero,
    /// One full period across the domain: f(i) = sin(2 pi i / N).
    Sine,
    Table(Arc<Vec<f64>>),
}

impl Rhs {
    pub fn eval(&self, i: u64, n_points: u64) -> f64 {
        match self {
            Rhs::Zero => 0.0,
            Rhs::Sine => (2.0 * std::f64::consts::PI * i as f64 / n_points as f64).sin(),
            Rhs::Table(t) => t[i as usize],
        }
    }
}

impl std::fmt::Debug for Rhs {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Rhs::Zero => write!(f, "Rhs::Zero"),
            Rhs::Sine => write!(f, "Rhs::Sine"),
            Rhs::Table(t) => write!(f, "Rhs::Table(len={})", t.len()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridProblem {
    /// Index qubits; the grid has N = 2^n points.
    pub n: u32,
    /// dx = 2^dx_log2.
    pub dx_log2: i32,
    pub rhs: Rhs,
    /// Ghost values (u_{-1}, u_N).
    pub boundary: (f64, f64),
}

impl GridProblem {
    pub fn new(n: u32, dx_log2: i32, rhs: Rhs, boundary: (f64, f64)) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidArgument("need at least 2 grid points (n >= 1)".into()));
        }
        Ok(Self { n, dx_log2, rhs, boundary })
    }

    pub fn size(&self) -> u64 {
        1u64 << self.n
    }

    pub fn dx(&self) -> f64 {
        2f64.powi(self.dx_log2)
    }

    pub fn dx2(&self) -> f64 {
        2f64.powi(2 * self.dx_log2)
    }

    pub fn ghost(&self, side: Side) -> f64 {
        match side {
            Side::Left => self.boundary.0,
            Side::Right => self.boundary.1,
        }
    }

    pub fn rhs_at(&self, i: u64) -> f64 {
        self.rhs.eval(i, self.size())
    }
}

/// V-cycle parameters. The smoother weight applies to real-mode runs; the
/// fixed-point pipelines smooth undamped so they match the quantum branch
/// arithmetic word for word.
#[derive(Debug, Clone, Copy)]
pub struct VCycleConfig {
    pub s0: u32,
    pub s1: u32,
    /// Coarsest level index; the coarsest grid has 2^i_min points.
    pub i_min: u32,
    pub omega: f64,
}

impl VCycleConfig {
    pub fn new(s0: u32, s1: u32, i_min: u32, omega: f64) -> Result<Self> {
        if i_min < 1 {
            return Err(Error::InvalidArgument("i_min must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&omega) {
            return Err(Error::InvalidArgument("omega must lie in [0, 1]".into()));
        }
        Ok(Self { s0, s1, i_min, omega })
    }

    pub fn validate_for(&self, n: u32) -> Result<()> {
        if self.i_min > n {
            return Err(Error::InvalidArgument(format!(
                "i_min {} exceeds the finest level {n}",
                self.i_min
            )));
        }
        Ok(())
    }
}

/// Grid function at one level, in either arithmetic mode.
#[derive(Debug, Clone)]
pub enum SolutionVector {
    Real { values: Vec<f64>, level: u32 },
    Fixed { values: Vec<crate::encoding::DataWord>, level: u32 },
}

impl SolutionVector {
    pub fn len(&self) -> usize {
        match self {
            SolutionVector::Real { values, .. } => values.len(),
            SolutionVector::Fixed { values, .. } => values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn level(&self) -> u32 {
        match self {
            SolutionVector::Real { level, .. } | SolutionVector::Fixed { level, .. } => *level,
        }
    }

    /// Values as reals (fixed words are decoded).
    pub fn to_reals(&self) -> Vec<f64> {
        match self {
            SolutionVector::Real { values, .. } => values.clone(),
            SolutionVector::Fixed { values, .. } => values.iter().map(|w| w.value()).collect(),
        }
    }
}
