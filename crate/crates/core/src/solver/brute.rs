use super::howard::evaluate_policy;
use super::restrict::RestrictedProblem;
use super::InnerSolution;
use crate::error::{Error, Result};

/// Largest number of policies [`solve_brute_force`] will enumerate.
pub const BRUTE_FORCE_BUDGET: u128 = 1_000_000;

/// Residual threshold (relative to `max{1, |v|}`) for accepting a policy.
const VERIFY_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct BruteForceResult {
    pub solution: InnerSolution,
    pub enumerated: u128,
    /// Number of policies whose payoff passed the residual check.
    pub verified: usize,
    pub max_residual: f64,
}

/// Enumerates every policy on `D`, solves its linear system and keeps the
/// payoffs that satisfy the restricted QVI. Uses `lambda = 1`.
pub fn solve_brute_force(problem: &RestrictedProblem) -> Result<BruteForceResult> {
    let m = problem.len();
    let radix: Vec<usize> = (0..m)
        .map(|a| {
            if problem.can_intervene(a) {
                problem.disc.sets.max_steps(problem.domain[a]) + 1
            } else {
                1
            }
        })
        .collect();
    let total = radix.iter().try_fold(1u128, |acc, &r| {
        let next = acc.saturating_mul(r as u128);
        (next <= BRUTE_FORCE_BUDGET).then_some(next)
    });
    let Some(total) = total else {
        let full = radix.iter().fold(1u128, |acc, &r| acc.saturating_mul(r as u128));
        return Err(Error::BudgetExceeded(full));
    };

    let mut digits = vec![0usize; m];
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut verified = 0;
    for _ in 0..total {
        let intervene: Vec<bool> = digits.iter().map(|&d| d > 0).collect();
        if let Ok(v) = evaluate_policy(problem, &intervene, &digits, 1.0) {
            let res = problem
                .qvi_residual(&v)
                .iter()
                .fold(0.0f64, |s, r| s.max(r.abs()));
            let scale = v.iter().fold(1.0f64, |s, x| s.max(x.abs()));
            if res <= VERIFY_TOL * scale {
                verified += 1;
                if best.as_ref().is_none_or(|(_, r)| res < *r) {
                    best = Some((v, res));
                }
            }
        }
        for (d, &r) in digits.iter_mut().zip(&radix) {
            *d += 1;
            if *d < r {
                break;
            }
            *d = 0;
        }
    }
    let (v, max_residual) = best.ok_or(Error::NoVerifiedPolicy)?;
    Ok(BruteForceResult {
        solution: problem.finish(&v, 1.0, total as usize, true),
        enumerated: total,
        verified,
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{build_grid, Discretization};
    use crate::game::GameSpec;
    use crate::solver::{restrict, solve_howard, SolverParams};

    #[test]
    fn small_grid_matches_howard() {
        let d = Discretization::with_defaults(GameSpec::linear_game(), build_grid(4.0, 2.0).unwrap()).unwrap();
        let p = restrict(&d, &vec![0.0; d.len()], &vec![true; d.len()]).unwrap();
        let brute = solve_brute_force(&p).unwrap();
        assert_eq!(brute.enumerated, 4 * 2);
        let howard = solve_howard(&p, &SolverParams::default()).unwrap();
        assert_eq!(brute.solution.intervene, howard.intervene);
        for (x, y) in brute.solution.v.iter().zip(&howard.v) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn prohibitive_cost_selects_passive_policy() {
        let mut spec = GameSpec::linear_game();
        spec.cost.c0 = 1e9;
        let d = Discretization::with_defaults(spec, build_grid(2.0, 1.0).unwrap()).unwrap();
        let p = restrict(&d, &vec![0.0; d.len()], &vec![true; d.len()]).unwrap();
        let brute = solve_brute_force(&p).unwrap();
        assert!(brute.solution.intervene.iter().all(|&b| !b));
        assert_eq!(brute.verified, 1);
    }

    #[test]
    fn budget_is_enforced() {
        let d = Discretization::with_defaults(GameSpec::linear_game(), build_grid(4.0, 0.25).unwrap()).unwrap();
        let p = restrict(&d, &vec![0.0; d.len()], &vec![true; d.len()]).unwrap();
        assert!(matches!(solve_brute_force(&p), Err(Error::BudgetExceeded(_))));
    }
}
