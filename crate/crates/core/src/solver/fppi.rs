use super::restrict::RestrictedProblem;
use super::tridiag::tridiagonal_solve;
use super::{relative_change, InnerSolution, SolverParams};
use crate::error::Result;

/// One iteration of the fixed-point policy iteration, in local numbering.
#[derive(Debug, Clone)]
pub struct FppiStep {
    /// Intervention set used for this linear solve.
    pub intervene: Vec<bool>,
    /// `M~ v^k`, the right-hand side on intervention rows.
    pub loss_rhs: Vec<f64>,
    /// The new iterate `v^{k+1}`.
    pub v: Vec<f64>,
}

/// Fixed-point policy iteration. Every step solves one tridiagonal system:
/// generator rows off the intervention set, `v_i = M~v^k(i)` on it.
///
/// Starts from `I = {}` and `v = w` on `D`. Pass `trace` to record every
/// iterate.
pub fn solve_fppi(
    problem: &RestrictedProblem,
    params: &SolverParams,
    mut trace: Option<&mut Vec<FppiStep>>,
) -> Result<InnerSolution> {
    let m = problem.len();
    let mut v = problem.initial();
    let mut intervene = vec![false; m];
    let mut iters = 0;
    let mut converged = false;
    let mut system = problem.l.clone();
    while iters < params.max_inner_iters {
        let (loss, _) = problem.loss(&v);
        let mut rhs = vec![0.0; m];
        for a in 0..m {
            if intervene[a] {
                system.lower[a] = 0.0;
                system.diag[a] = 1.0;
                system.upper[a] = 0.0;
                rhs[a] = loss[a];
            } else {
                system.lower[a] = problem.l.lower[a];
                system.diag[a] = problem.l.diag[a];
                system.upper[a] = problem.l.upper[a];
                rhs[a] = -problem.f[a];
            }
        }
        let next = tridiagonal_solve(&system, &rhs)?;
        iters += 1;
        let diff = relative_change(&next, &v, params.scale, params.denominator);
        let next_set = problem.intervention_set(&next, params.lambda);
        if let Some(t) = trace.as_deref_mut() {
            t.push(FppiStep {
                intervene: intervene.clone(),
                loss_rhs: loss,
                v: next.clone(),
            });
        }
        v = next;
        intervene = next_set;
        if diff < params.inner_tol {
            converged = true;
            break;
        }
    }
    Ok(problem.finish(&v, params.lambda, iters, converged))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{build_grid, Discretization};
    use crate::game::GameSpec;
    use crate::solver::restrict;

    #[test]
    fn prohibitive_cost_gives_plain_solve() {
        let mut spec = GameSpec::linear_game();
        spec.cost.c0 = 1e9;
        let d = Discretization::with_defaults(spec, build_grid(4.0, 0.5).unwrap()).unwrap();
        let p = restrict(&d, &vec![0.0; d.len()], &vec![true; d.len()]).unwrap();
        let mut trace = Vec::new();
        let sol = solve_fppi(&p, &SolverParams::default(), Some(&mut trace)).unwrap();
        assert!(sol.converged);
        assert!(sol.intervene.iter().all(|&b| !b));
        let neg_f: Vec<f64> = d.f().iter().map(|x| -x).collect();
        let direct = tridiagonal_solve(d.l(), &neg_f).unwrap();
        assert_eq!(trace[0].v, direct);
        assert_eq!(sol.v, direct);
        assert!(sol.iters <= 2);
    }

    #[test]
    fn constant_payoff_gives_constant_value() {
        let mut spec = GameSpec::linear_game();
        spec.running_payoff = crate::game::PayoffFamily::new(vec![1.0], 0.0);
        spec.cost.c0 = 1e9;
        spec.cost.c1 = 0.0;
        spec.gain.g1 = 0.0;
        let d = Discretization::with_defaults(spec, build_grid(2.0, 0.25).unwrap()).unwrap();
        let p = restrict(&d, &vec![0.0; d.len()], &vec![true; d.len()]).unwrap();
        let sol = solve_fppi(&p, &SolverParams::default(), None).unwrap();
        for x in sol.v {
            assert!((x - 1.0 / 0.02).abs() < 1e-9);
        }
    }
}
