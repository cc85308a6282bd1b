//! Outer iteration for symmetric equilibria: apply the opponent's mirrored
//! strategy through the gain operator, then re-solve the player's impulse
//! control problem on the remaining nodes.

use std::collections::hash_map::DefaultHasher;
use std::collections::VecDeque;
use std::fmt;
use std::hash::{Hash, Hasher};

use crate::diagnostics::{
    assemble_coefficients, diff_metric, intervention_set, qvi_residual, ResidualReport,
};
use crate::discretization::Discretization;
use crate::error::{Error, Result};
use crate::matrix::{is_substochastic, is_wcdd};
use crate::solver::{restrict, solve_inner, Policy, SolverParams};

#[derive(Debug, Clone, PartialEq)]
pub struct DriverParams {
    pub tol: f64,
    pub scale: f64,
    pub max_outer_iters: usize,
    pub cycle_window: usize,
    /// Initial payoff; zero when `None`.
    pub v0: Option<Vec<f64>>,
    /// Check the outer fixed-point relation and matrix properties at every
    /// step (costs a sparse assembly per iteration).
    pub check_invariants: bool,
}

impl Default for DriverParams {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            scale: 1.0,
            max_outer_iters: 500,
            cycle_window: 8,
            v0: None,
            check_invariants: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationState {
    pub k: usize,
    pub v: Vec<f64>,
    pub policy: Policy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantCheck {
    pub relation_residual: f64,
    pub b_substochastic: bool,
    pub a_wcdd: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub diff: f64,
    pub max_res: f64,
    pub max_res_excluding_spikes: f64,
    pub inner_iters: usize,
    pub inner_converged: bool,
    pub invariants: Option<InvariantCheck>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutcomeKind {
    ConvergedExact,
    ConvergedTol,
    Cycled(usize),
    Stagnated,
    MaxIters,
}

impl OutcomeKind {
    pub fn is_converged(self) -> bool {
        matches!(self, Self::ConvergedExact | Self::ConvergedTol)
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Self::ConvergedExact | Self::ConvergedTol => 0,
            Self::Cycled(_) => 2,
            Self::Stagnated => 3,
            Self::MaxIters => 4,
        }
    }
}

impl fmt::Display for OutcomeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ConvergedExact => write!(f, "ConvergedExact"),
            Self::ConvergedTol => write!(f, "ConvergedTol"),
            Self::Cycled(p) => write!(f, "Cycled({p})"),
            Self::Stagnated => write!(f, "Stagnated"),
            Self::MaxIters => write!(f, "MaxIters"),
        }
    }
}

/// Equilibrium summary in original (unshifted) coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NashSummary {
    /// Rightmost intervention node of player 1.
    pub boundary: Option<f64>,
    /// Impulse target from the boundary node.
    pub target: Option<f64>,
    /// Smallest and largest impulse targets over the intervention set.
    pub target_range: Option<(f64, f64)>,
    /// Leftmost intervention node of player 2.
    pub opponent_boundary: Option<f64>,
    pub opponent_target: Option<f64>,
}

/// Intervention nodes whose impulses point at degenerate patterns.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DegenerateReport {
    /// Target lands in the opponent's intervention region.
    pub alternated: Vec<usize>,
    /// One-step impulse onto another intervention node.
    pub one_sided: Vec<usize>,
}

impl DegenerateReport {
    pub fn is_clean(&self) -> bool {
        self.alternated.is_empty() && self.one_sided.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub kind: OutcomeKind,
    pub v: Vec<f64>,
    pub policy: Policy,
    pub iters: usize,
    pub history: Vec<IterationRecord>,
    pub nash: NashSummary,
    pub degenerate: DegenerateReport,
    /// Largest sup-norm over all iterates.
    pub max_norm: f64,
    pub residual: ResidualReport,
    /// Number of inner solves that hit their iteration budget.
    pub inner_failures: usize,
}

/// `v0`, `I0 = {Lv0 + f <= Mv0 - v0}` on negative nodes and `delta*(v0)`.
pub fn init(disc: &Discretization, v0: Option<&[f64]>) -> Result<IterationState> {
    let v = match v0 {
        Some(v) if v.len() != disc.len() => {
            return Err(Error::Dimension {
                expected: disc.len(),
                got: v.len(),
            })
        }
        Some(v) => v.to_vec(),
        None => vec![0.0; disc.len()],
    };
    let (_, steps) = disc.loss_operator(&v);
    let intervene = intervention_set(disc, &v);
    Ok(IterationState {
        k: 0,
        v,
        policy: Policy { intervene, steps },
    })
}

/// One outer step. Returns the new state and the inner solver's report.
pub fn step(
    disc: &Discretization,
    state: &IterationState,
    params: &SolverParams,
) -> Result<(IterationState, usize, bool)> {
    let grid = &disc.grid;
    let n = disc.len();
    let mut half = state.v.clone();
    let mut in_domain = vec![true; n];
    for i in state.policy.intervention_nodes() {
        let j = grid.mirror(i);
        half[j] = disc.gain_at(&state.v, &state.policy.steps, j);
        in_domain[j] = false;
    }
    let problem = restrict(disc, &half, &in_domain)?;
    let sol = solve_inner(&problem, params)?;
    let next = IterationState {
        k: state.k + 1,
        policy: sol.policy(),
        v: sol.v,
    };
    Ok((next, sol.iters, sol.converged))
}

fn fingerprint(state: &IterationState) -> u64 {
    let mut h = DefaultHasher::new();
    for x in &state.v {
        format!("{x:.11e}").hash(&mut h);
    }
    state.policy.intervene.hash(&mut h);
    h.finish()
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |s, x| s.max(x.abs()))
}

/// Runs the outer iteration until convergence, a cycle, stagnation or the
/// iteration cap.
pub fn run(disc: &Discretization, solver: &SolverParams, params: &DriverParams) -> Result<Outcome> {
    let mut state = init(disc, params.v0.as_deref())?;
    let window = params.cycle_window.max(1);
    let mut recent: VecDeque<u64> = VecDeque::with_capacity(window);
    recent.push_back(fingerprint(&state));
    let mut history = Vec::new();
    let mut max_norm = sup_norm(&state.v);
    let mut best_diff = f64::INFINITY;
    let mut since_best = 0;
    let mut inner_failures = 0;
    let kind = loop {
        if state.k >= params.max_outer_iters {
            break OutcomeKind::MaxIters;
        }
        let (next, inner_iters, inner_converged) = step(disc, &state, solver)?;
        if !inner_converged {
            inner_failures += 1;
        }
        let diff = diff_metric(&next.v, &state.v, params.scale);
        let res = qvi_residual(disc, &next.v);
        let invariants = params.check_invariants.then(|| {
            let triple = assemble_coefficients(disc, &state.policy, &next.policy);
            InvariantCheck {
                relation_residual: triple.relation_residual(&next.v, &state.v),
                b_substochastic: is_substochastic(&triple.b),
                a_wcdd: is_wcdd(&triple.a),
            }
        });
        history.push(IterationRecord {
            diff,
            max_res: res.max,
            max_res_excluding_spikes: res.max_excluding_spikes,
            inner_iters,
            inner_converged,
            invariants,
        });
        max_norm = max_norm.max(sup_norm(&next.v));
        let exact = next.v == state.v;
        let fp = fingerprint(&next);
        state = next;
        if exact {
            break OutcomeKind::ConvergedExact;
        }
        if diff < params.tol {
            break OutcomeKind::ConvergedTol;
        }
        // A repeat of the previous fingerprint only means the last digits are
        // still settling; the plateau rule below handles that case.
        if let Some(pos) = recent.iter().rposition(|&f| f == fp) {
            let period = recent.len() - pos;
            if period >= 2 {
                break OutcomeKind::Cycled(period);
            }
        }
        if recent.len() == window {
            recent.pop_front();
        }
        recent.push_back(fp);
        if diff < best_diff {
            best_diff = diff;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= window {
                break OutcomeKind::Stagnated;
            }
        }
    };
    let residual = qvi_residual(disc, &state.v);
    Ok(Outcome {
        kind,
        nash: nash_summary(disc, &state.policy),
        degenerate: detect_degenerate_equilibrium(disc, &state.policy),
        iters: state.k,
        v: state.v,
        policy: state.policy,
        history,
        max_norm,
        residual,
        inner_failures,
    })
}

pub fn nash_summary(disc: &Discretization, policy: &Policy) -> NashSummary {
    let grid = &disc.grid;
    let s = &disc.spec;
    let nodes = policy.intervention_nodes();
    let Some(&b) = nodes.last() else {
        return NashSummary::default();
    };
    let target_of = |i: usize| grid.x(i + policy.steps[i]);
    let targets: Vec<f64> = nodes.iter().map(|&i| target_of(i)).collect();
    let lo = targets.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = targets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    NashSummary {
        boundary: Some(s.unshift(grid.x(b))),
        target: Some(s.unshift(target_of(b))),
        target_range: Some((s.unshift(lo), s.unshift(hi))),
        opponent_boundary: Some(s.unshift(-grid.x(b))),
        opponent_target: Some(s.unshift(-target_of(b))),
    }
}

/// Flags intervention nodes whose target lies in the opponent's region
/// (alternated interventions) or one step ahead inside the own region
/// (one-sided chains).
pub fn detect_degenerate_equilibrium(disc: &Discretization, policy: &Policy) -> DegenerateReport {
    let grid = &disc.grid;
    let mut report = DegenerateReport::default();
    for i in policy.intervention_nodes() {
        let t = i + policy.steps[i];
        if policy.intervene[grid.mirror(t)] {
            report.alternated.push(i);
        }
        if policy.steps[i] == 1 && policy.intervene[t] {
            report.one_sided.push(i);
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::build_grid;
    use crate::game::GameSpec;

    fn disc(spec: GameSpec, h: f64) -> Discretization {
        Discretization::with_defaults(spec, build_grid(4.0, h).unwrap()).unwrap()
    }

    #[test]
    fn init_matches_direct_evaluation() {
        let d = disc(GameSpec::linear_game(), 0.5);
        let s = init(&d, None).unwrap();
        for i in 0..d.len() {
            // With v = 0: Lv + f = f and Mv - v = -c at the cheapest impulse.
            let expect = d.grid.is_negative(i) && d.f()[i] <= -100.0;
            assert_eq!(s.policy.intervene[i], expect);
        }
        let mut spec = GameSpec::linear_game();
        spec.cost.c0 = 1e9;
        assert!(init(&disc(spec, 0.5), None).unwrap().policy.intervention_nodes().is_empty());
    }

    #[test]
    fn empty_intervention_set_is_a_plain_solve() {
        let d = disc(GameSpec::linear_game(), 1.0);
        let s = init(&d, None).unwrap();
        assert!(s.policy.intervention_nodes().is_empty());
        let (next, _, ok) = step(&d, &s, &SolverParams::default()).unwrap();
        assert!(ok);
        let p = restrict(&d, &s.v, &vec![true; d.len()]).unwrap();
        let direct = solve_inner(&p, &SolverParams::default()).unwrap();
        assert_eq!(next.v, direct.v);
    }

    #[test]
    fn fixed_point_is_stationary() {
        let d = disc(GameSpec::linear_game(), 1.0);
        let dp = DriverParams {
            tol: 0.0,
            ..DriverParams::default()
        };
        let out = run(&d, &SolverParams::default(), &dp).unwrap();
        assert_eq!(out.kind, OutcomeKind::ConvergedExact);
        let state = IterationState {
            k: out.iters,
            v: out.v.clone(),
            policy: out.policy.clone(),
        };
        let (next, _, _) = step(&d, &state, &SolverParams::default()).unwrap();
        assert_eq!(next.v, out.v);
    }

    #[test]
    fn degenerate_flags() {
        let d = disc(GameSpec::linear_game(), 1.0);
        let mut p = Policy::passive(d.len());
        p.intervene[0] = true;
        p.steps[0] = 1;
        p.intervene[1] = true;
        p.steps[1] = 6; // lands on x = 4, mirror of x = -4
        let rep = detect_degenerate_equilibrium(&d, &p);
        assert_eq!(rep.one_sided, vec![0]);
        assert_eq!(rep.alternated, vec![1]);
        assert!(detect_degenerate_equilibrium(&d, &Policy::passive(d.len())).is_clean());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(OutcomeKind::ConvergedExact.exit_code(), 0);
        assert_eq!(OutcomeKind::ConvergedTol.exit_code(), 0);
        assert_eq!(OutcomeKind::Cycled(3).exit_code(), 2);
        assert_eq!(OutcomeKind::Stagnated.exit_code(), 3);
        assert_eq!(OutcomeKind::MaxIters.exit_code(), 4);
    }
}
