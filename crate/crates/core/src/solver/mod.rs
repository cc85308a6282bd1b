//! Single-player impulse-control solvers used as the inner step of the game
//! iteration.

mod brute;
mod fppi;
mod howard;
mod restrict;
mod tridiag;

pub use brute::{solve_brute_force, BruteForceResult, BRUTE_FORCE_BUDGET};
pub use fppi::{solve_fppi, FppiStep};
pub use howard::solve_howard;
pub use restrict::{restrict, RestrictedProblem};
pub use tridiag::tridiagonal_solve;

use crate::discretization::Discretization;
use crate::error::{Error, Result};

/// Strategy `(I, delta)`: intervention flags on the grid and, per node, the
/// impulse as a number of grid steps.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Policy {
    pub intervene: Vec<bool>,
    pub steps: Vec<usize>,
}

impl Policy {
    /// Never intervene, zero impulses.
    pub fn passive(n: usize) -> Self {
        Self {
            intervene: vec![false; n],
            steps: vec![0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.intervene.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervene.is_empty()
    }

    pub fn intervention_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.intervene[i]).collect()
    }

    /// Checks `I` lies on negative nodes and every impulse is admissible.
    pub fn validate(&self, disc: &Discretization) -> Result<()> {
        if self.len() != disc.len() || self.steps.len() != disc.len() {
            return Err(Error::Dimension {
                expected: disc.len(),
                got: self.len(),
            });
        }
        for i in 0..self.len() {
            if self.steps[i] > disc.sets.max_steps(i) || (self.intervene[i] && !disc.grid.is_negative(i)) {
                return Err(Error::InadmissibleImpulse {
                    x: disc.grid.x(i),
                    delta: disc.impulse_value(self.steps[i]),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverVariant {
    #[default]
    Fppi,
    Howard,
}

/// Denominator used by the inner stopping rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StoppingDenominator {
    /// `max{|v|, scale}`.
    #[default]
    Abs,
    /// `max{v, scale}` without the absolute value.
    Signed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    pub lambda: f64,
    pub inner_tol: f64,
    pub scale: f64,
    pub max_inner_iters: usize,
    pub variant: SolverVariant,
    pub denominator: StoppingDenominator,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            inner_tol: 1e-15,
            scale: 1.0,
            max_inner_iters: 100_000,
            variant: SolverVariant::Fppi,
            denominator: StoppingDenominator::Abs,
        }
    }
}

/// Result of an inner solve, extended to the whole grid.
#[derive(Debug, Clone)]
pub struct InnerSolution {
    pub v: Vec<f64>,
    pub intervene: Vec<bool>,
    /// `delta*(v)` in grid steps at every node.
    pub steps: Vec<usize>,
    pub iters: usize,
    /// False when the iteration budget ran out first.
    pub converged: bool,
}

impl InnerSolution {
    pub fn policy(&self) -> Policy {
        Policy {
            intervene: self.intervene.clone(),
            steps: self.steps.clone(),
        }
    }
}

/// Dispatches on `params.variant`.
pub fn solve_inner(problem: &RestrictedProblem, params: &SolverParams) -> Result<InnerSolution> {
    match params.variant {
        SolverVariant::Fppi => solve_fppi(problem, params, None),
        SolverVariant::Howard => solve_howard(problem, params),
    }
}

/// Relative change `max_i |a_i - b_i| / max{|a_i|, scale}`.
pub(crate) fn relative_change(new: &[f64], old: &[f64], scale: f64, den: StoppingDenominator) -> f64 {
    new.iter()
        .zip(old)
        .map(|(&a, &b)| {
            let d = match den {
                StoppingDenominator::Abs => a.abs().max(scale),
                StoppingDenominator::Signed => a.max(scale),
            };
            (a - b).abs() / d
        })
        .fold(0.0, f64::max)
}
