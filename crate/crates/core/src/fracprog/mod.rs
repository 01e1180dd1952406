//! Linear and linear-fractional programming.
//!
//! Both problem kinds use the same inequality form, `Ax <= b` with `x >= 0`
//! implied. [`lp_solve`] is a vertex-returning simplex; [`lfp_solve`]
//! maximises `(c·x + α) / (d·x + β)` by Bitran–Novaes iteration, re-solving
//! the LP with an updated marginal objective `c − L(x)·d` until the vertex
//! stops moving.

mod lfp;
mod simplex;

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use lfp::{lfp_gamma, lfp_solve, lfp_solve_with, LfpOptions};
pub use simplex::Simplex;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("feasible set is empty")]
    Infeasible,
    #[error("objective is unbounded above")]
    Unbounded,
    #[error("{what} has length {found}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("problem has no variables or no constraints")]
    Empty,
    #[error("simplex exceeded {0} pivots")]
    IterationLimit(usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LfpError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("denominator direction d is the zero vector")]
    ZeroDenominatorDirection,
    #[error("denominator d·x + β = {value} is not positive at an iterate")]
    NonpositiveDenominator { value: f64 },
    #[error("no fixed point after {0} iterations")]
    MaxIterationsExceeded(usize),
}

/// `max objective·x  s.t.  constraints·x <= rhs,  x >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub constraints: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

impl LpProblem {
    pub fn new(
        objective: Vec<f64>,
        constraints: Vec<Vec<f64>>,
        rhs: Vec<f64>,
    ) -> Result<Self, LpError> {
        let p = LpProblem {
            objective,
            constraints,
            rhs,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn validate(&self) -> Result<(), LpError> {
        validate_system(self.objective.len(), &self.constraints, &self.rhs)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        dot(&self.objective, x)
    }
}

/// `max (num·x + num_offset) / (den·x + den_offset)` over `constraints·x <= rhs, x >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LfpProblem {
    pub num: Vec<f64>,
    pub num_offset: f64,
    pub den: Vec<f64>,
    pub den_offset: f64,
    pub constraints: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

impl LfpProblem {
    pub fn num_vars(&self) -> usize {
        self.num.len()
    }

    pub fn validate(&self) -> Result<(), LpError> {
        if self.den.len() != self.num.len() {
            return Err(LpError::DimensionMismatch {
                what: "denominator coefficients",
                expected: self.num.len(),
                found: self.den.len(),
            });
        }
        validate_system(self.num.len(), &self.constraints, &self.rhs)
    }

    pub fn numerator(&self, x: &[f64]) -> f64 {
        dot(&self.num, x) + self.num_offset
    }

    pub fn denominator(&self, x: &[f64]) -> f64 {
        dot(&self.den, x) + self.den_offset
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.numerator(x) / self.denominator(x)
    }

    /// Feasible polytope with a replacement objective.
    pub fn as_lp(&self, objective: Vec<f64>) -> LpProblem {
        LpProblem {
            objective,
            constraints: self.constraints.clone(),
            rhs: self.rhs.clone(),
        }
    }

    /// Largest violation of `Ax <= b` and `x >= 0`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self
            .constraints
            .iter()
            .zip(&self.rhs)
            .map(|(a, &b)| dot(a, x) - b);
        let bounds = x.iter().map(|&v| -v);
        rows.chain(bounds).fold(0.0_f64, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LfpSolution {
    pub x_opt: Vec<f64>,
    pub objective_value: f64,
    /// Number of marginal-objective LP solves after the initial vertex.
    pub iterations: usize,
    /// Objective value at every visited vertex, starting with the initial one.
    pub trace: Vec<f64>,
    /// Visited vertices, parallel to `trace`.
    pub path: Vec<Vec<f64>>,
}

impl LfpSolution {
    /// Writes `iteration,objective,x0,x1,...` rows for every visited vertex.
    pub fn write_trace_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let n = self.x_opt.len();
        write!(out, "iteration,objective")?;
        for j in 0..n {
            write!(out, ",x{j}")?;
        }
        writeln!(out)?;
        for (i, (value, x)) in self.trace.iter().zip(&self.path).enumerate() {
            write!(out, "{i},{value}")?;
            for v in x {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Solves an LP and returns an optimal vertex.
pub fn lp_solve(problem: &LpProblem) -> Result<Vec<f64>, LpError> {
    Simplex::new(problem)?.maximize(&problem.objective)
}

fn validate_system(n: usize, constraints: &[Vec<f64>], rhs: &[f64]) -> Result<(), LpError> {
    if n == 0 || rhs.is_empty() {
        return Err(LpError::Empty);
    }
    if constraints.len() != rhs.len() {
        return Err(LpError::DimensionMismatch {
            what: "constraint rows",
            expected: rhs.len(),
            found: constraints.len(),
        });
    }
    if let Some(row) = constraints.iter().find(|row| row.len() != n) {
        return Err(LpError::DimensionMismatch {
            what: "constraint row",
            expected: n,
            found: row.len(),
        });
    }
    Ok(())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
