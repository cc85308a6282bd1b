use super::restrict::RestrictedProblem;
use super::{relative_change, InnerSolution, SolverParams};
use crate::error::{Error, Result};
use crate::matrix::{is_wcdd, solve_dense, SparseMatrix};

/// Assembles `A(phi) v = b(phi)` for a local policy: generator rows
/// `-L~ v = f~` off the intervention set and `lambda (v_i - v[[x_i + delta]])
/// = -lambda c(delta)` on it, with frozen exterior values moved to `b`.
pub(crate) fn policy_system(
    problem: &RestrictedProblem,
    intervene: &[bool],
    steps: &[usize],
    lambda: f64,
) -> (SparseMatrix, Vec<f64>) {
    let m = problem.len();
    let mut rows = Vec::with_capacity(m);
    let mut b = Vec::with_capacity(m);
    for a in 0..m {
        if intervene[a] {
            let k = steps[a];
            let target = problem.domain[a] + k;
            let mut row = vec![(a, lambda)];
            let mut rhs = -lambda * problem.disc.cost_steps(k);
            match problem.local_index(target) {
                Some(t) => row.push((t, -lambda)),
                None => rhs += lambda * problem.w[target],
            }
            rows.push(row);
            b.push(rhs);
        } else {
            let mut row = vec![(a, -problem.l.diag[a])];
            if a > 0 {
                row.push((a - 1, -problem.l.lower[a]));
            }
            if a + 1 < m {
                row.push((a + 1, -problem.l.upper[a]));
            }
            rows.push(row);
            b.push(problem.f[a]);
        }
    }
    (SparseMatrix::from_rows(m, rows), b)
}

/// Solves the linear system of one policy after checking it is WCDD.
pub(crate) fn evaluate_policy(
    problem: &RestrictedProblem,
    intervene: &[bool],
    steps: &[usize],
    lambda: f64,
) -> Result<Vec<f64>> {
    let (a, b) = policy_system(problem, intervene, steps, lambda);
    if !is_wcdd(&a) {
        return Err(Error::SingularPolicy("policy matrix is not WCDD".into()));
    }
    solve_dense(&a, &b)
}

/// Classic policy iteration. Improvement compares the continuation value
/// with the best strictly positive impulse; ties keep the current action.
pub fn solve_howard(problem: &RestrictedProblem, params: &SolverParams) -> Result<InnerSolution> {
    let m = problem.len();
    let mut intervene = vec![false; m];
    let mut steps = vec![0usize; m];
    let mut prev: Option<Vec<f64>> = None;
    let mut iters = 0;
    let mut converged = false;
    let mut v = problem.initial();
    while iters < params.max_inner_iters {
        v = evaluate_policy(problem, &intervene, &steps, params.lambda)?;
        iters += 1;
        let full = problem.extend(&v);
        let cont = problem.continuation_residual(&v);
        let mut next_int = vec![false; m];
        let mut next_steps = vec![0usize; m];
        for a in 0..m {
            if !problem.can_intervene(a) {
                continue;
            }
            let Some((val, k)) = problem.disc.loss_at_positive(&full, problem.domain[a]) else {
                continue;
            };
            let act = params.lambda * (val - v[a]);
            let choose = act > cont[a] || (act == cont[a] && intervene[a]);
            if choose {
                next_int[a] = true;
                next_steps[a] = k;
            }
        }
        let repeated = next_int == intervene && next_steps == steps;
        let small = prev
            .as_ref()
            .is_some_and(|p| relative_change(&v, p, params.scale, params.denominator) < params.inner_tol);
        if repeated || small {
            converged = true;
            break;
        }
        intervene = next_int;
        steps = next_steps;
        prev = Some(v.clone());
    }
    Ok(problem.finish(&v, params.lambda, iters, converged))
}
