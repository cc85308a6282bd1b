//! Coefficient matrices of the outer fixed-point map, residual metrics and
//! a-posteriori checks on computed payoffs.

use crate::discretization::Discretization;
use crate::error::Result;
use crate::matrix::{solve_dense, SparseMatrix};
use crate::solver::Policy;

/// Matrices of the outer iteration `A v_new = B v_old + C` for a pair of
/// strategies `(phi, phi_bar)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTriple {
    pub a: SparseMatrix,
    pub b: SparseMatrix,
    pub c: Vec<f64>,
}

impl CoefficientTriple {
    pub fn a_minus_b(&self) -> SparseMatrix {
        self.a.sub(&self.b)
    }

    /// `max_i |(A v_new - B v_old - C)_i|`.
    pub fn relation_residual(&self, v_new: &[f64], v_old: &[f64]) -> f64 {
        let av = self.a.matvec(v_new);
        let bv = self.b.matvec(v_old);
        (0..av.len())
            .map(|i| (av[i] - bv[i] - self.c[i]).abs())
            .fold(0.0, f64::max)
    }
}

/// Assembles the triple for the opponent strategy `phi` (acting through the
/// reflection) and the player's own strategy `phi_bar`.
///
/// Row `i` is `e_i - B(delta_bar)_i` on `I_bar`, `e_i` on `-I`, and `-L_i`
/// on the common continuation region.
pub fn assemble_coefficients(disc: &Discretization, phi: &Policy, phi_bar: &Policy) -> CoefficientTriple {
    let n = disc.len();
    let grid = &disc.grid;
    let l = disc.l();
    let mut a_rows = Vec::with_capacity(n);
    let mut b_rows = vec![Vec::new(); n];
    let mut c = Vec::with_capacity(n);
    for i in 0..n {
        let m = grid.mirror(i);
        if phi_bar.intervene[i] {
            let k = phi_bar.steps[i];
            a_rows.push(vec![(i, 1.0), (i + k, -1.0)]);
            c.push(-disc.cost_steps(k));
        } else if phi.intervene[m] {
            let k = phi.steps[m];
            a_rows.push(vec![(i, 1.0)]);
            b_rows[i] = vec![(i - k, 1.0)];
            c.push(disc.gain_steps(k));
        } else {
            let mut row = vec![(i, -l.diag[i])];
            if i > 0 {
                row.push((i - 1, -l.lower[i]));
            }
            if i + 1 < n {
                row.push((i + 1, -l.upper[i]));
            }
            a_rows.push(row);
            c.push(disc.f()[i]);
        }
    }
    CoefficientTriple {
        a: SparseMatrix::from_rows(n, a_rows),
        b: SparseMatrix::from_rows(n, b_rows),
        c,
    }
}

/// `max_i |new_i - old_i| / max{|new_i|, scale}`.
pub fn diff_metric(v_new: &[f64], v_old: &[f64], scale: f64) -> f64 {
    crate::solver::relative_change(v_new, v_old, scale, crate::solver::StoppingDenominator::Abs)
}

/// `{Lv + f <= Mv - v}` restricted to negative nodes.
pub fn intervention_set(disc: &Discretization, v: &[f64]) -> Vec<bool> {
    let (mv, _) = disc.loss_operator(v);
    let cont = disc.continuation_residual(v);
    (0..disc.len())
        .map(|i| disc.grid.is_negative(i) && cont[i] <= mv[i] - v[i])
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    /// Signed residual per node.
    pub residual: Vec<f64>,
    pub max: f64,
    /// Nodes within two grid steps of the border of `-I`.
    pub spike: Vec<bool>,
    pub max_excluding_spikes: f64,
    pub intervene: Vec<bool>,
}

/// Radius (in nodes) around the border of `-I` that is flagged as spike.
pub const SPIKE_RADIUS: usize = 2;

/// Residual of the discrete QVI system: `max{Lv + f, Mv - v}` off `-I` and
/// `Hv - v` on `-I`.
pub fn qvi_residual(disc: &Discretization, v: &[f64]) -> ResidualReport {
    let n = disc.len();
    let grid = &disc.grid;
    let (mv, steps) = disc.loss_operator(v);
    let cont = disc.continuation_residual(v);
    let intervene: Vec<bool> = (0..n)
        .map(|i| grid.is_negative(i) && cont[i] <= mv[i] - v[i])
        .collect();
    let opp: Vec<bool> = (0..n).map(|i| intervene[grid.mirror(i)]).collect();
    let residual: Vec<f64> = (0..n)
        .map(|i| {
            if opp[i] {
                disc.gain_at(v, &steps, i) - v[i]
            } else {
                cont[i].max(mv[i] - v[i])
            }
        })
        .collect();
    let mut spike = vec![false; n];
    for j in (0..n).filter(|&j| opp[j]) {
        let border = (j > 0 && !opp[j - 1]) || (j + 1 < n && !opp[j + 1]);
        if border {
            let lo = j.saturating_sub(SPIKE_RADIUS);
            let hi = (j + SPIKE_RADIUS).min(n - 1);
            spike[lo..=hi].iter_mut().for_each(|s| *s = true);
        }
    }
    let max = residual.iter().fold(0.0f64, |s, r| s.max(r.abs()));
    let max_excluding_spikes = residual
        .iter()
        .zip(&spike)
        .filter(|(_, &s)| !s)
        .fold(0.0f64, |s, (r, _)| s.max(r.abs()));
    ResidualReport {
        residual,
        max,
        spike,
        max_excluding_spikes,
        intervene,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UipReport {
    pub holds: bool,
    /// `(node, number of near-maximizing impulses)` for every intervention node.
    pub counts: Vec<(usize, usize)>,
}

/// Counts impulses within `rel_tol` of the maximum in `Mv` at every
/// intervention node (absolute tolerance when the maximum is zero).
pub fn uip_check(disc: &Discretization, v: &[f64], rel_tol: f64) -> UipReport {
    let set = intervention_set(disc, v);
    let counts: Vec<(usize, usize)> = (0..disc.len())
        .filter(|&i| set[i])
        .map(|i| {
            let vals: Vec<f64> = (0..=disc.sets.max_steps(i))
                .map(|k| v[i + k] - disc.cost_steps(k))
                .collect();
            let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let tol = if max == 0.0 { rel_tol } else { rel_tol * max.abs() };
            (i, vals.iter().filter(|&&x| max - x <= tol).count())
        })
        .collect();
    UipReport {
        holds: counts.iter().all(|&(_, c)| c == 1),
        counts,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharacterizationReport {
    /// `u = (A - B)^{-1} C` at `(phi*, phi*)`.
    pub u: Vec<f64>,
    pub gap: f64,
}

/// Builds `phi* = (I(v), delta*(v))`, solves `(A - B) u = C` at
/// `(phi*, phi*)` and measures `|u - v|`.
pub fn verify_solution_characterization(disc: &Discretization, v: &[f64]) -> Result<CharacterizationReport> {
    let (_, steps) = disc.loss_operator(v);
    let phi = Policy {
        intervene: intervention_set(disc, v),
        steps,
    };
    let triple = assemble_coefficients(disc, &phi, &phi);
    let u = solve_dense(&triple.a_minus_b(), &triple.c)?;
    let gap = u.iter().zip(v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(CharacterizationReport { u, gap })
}

/// The opponent's payoff and strategy, obtained by reflection.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryReport {
    pub opponent_payoff: Vec<f64>,
    /// Opponent impulse at each node, `-delta(-x)` (nonpositive).
    pub opponent_impulse: Vec<f64>,
    pub opponent_intervene: Vec<bool>,
    /// Opponent targets stay on the grid and mirror the player's.
    pub consistent: bool,
}

pub fn symmetry_report(disc: &Discretization, v: &[f64], policy: &Policy) -> SymmetryReport {
    let grid = &disc.grid;
    let n = disc.len();
    let opponent_impulse: Vec<f64> = (0..n)
        .map(|i| -disc.impulse_value(policy.steps[grid.mirror(i)]))
        .collect();
    let opponent_intervene = grid.reflect(&policy.intervene);
    let consistent = (0..n).all(|i| {
        let k = policy.steps[grid.mirror(i)];
        k <= i && grid.x(i - k) == -grid.x(grid.mirror(i) + k)
    });
    SymmetryReport {
        opponent_payoff: grid.reflect(v),
        opponent_impulse,
        opponent_intervene,
        consistent,
    }
}
