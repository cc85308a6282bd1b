mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use symgame::diagnostics::{qvi_residual, symmetry_report, verify_solution_characterization};
use symgame::discretization::{build_grid, Discretization, Tridiagonal};
use symgame::driver::{run, DriverParams, OutcomeKind};
use symgame::error::Error;
use symgame::game::GameSpec;
use symgame::solver::{
    restrict, solve_brute_force, solve_fppi, solve_howard, tridiagonal_solve, SolverParams, SolverVariant,
};

fn exact_params() -> DriverParams {
    DriverParams {
        tol: 0.0,
        ..DriverParams::default()
    }
}

fn linear(h: f64) -> Discretization {
    Discretization::with_defaults(GameSpec::linear_game(), build_grid(4.0, h).unwrap()).unwrap()
}

proptest! {
    #[test]
    fn thomas_matches_dense_lu(
        rows in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, 0.01f64..2.0, -10.0f64..10.0), 1..40)
    ) {
        let n = rows.len();
        let mut t = Tridiagonal { lower: vec![0.0; n], diag: vec![0.0; n], upper: vec![0.0; n] };
        let mut rhs = vec![0.0; n];
        for (i, &(lo, up, margin, b)) in rows.iter().enumerate() {
            t.lower[i] = if i > 0 { lo } else { 0.0 };
            t.upper[i] = if i + 1 < n { up } else { 0.0 };
            t.diag[i] = t.lower[i].abs() + t.upper[i].abs() + margin;
            rhs[i] = b;
        }
        let x = tridiagonal_solve(&t, &rhs).unwrap();
        let dense = DMatrix::from_fn(n, n, |i, j| t.to_sparse().get(i, j));
        let y = dense.lu().solve(&DVector::from_vec(rhs)).unwrap();
        let scale = y.iter().fold(1.0f64, |s, v| s.max(v.abs()));
        prop_assert!(max_abs_diff(&x, y.as_slice()) <= 1e-12 * scale);
    }
}

#[test]
fn fppi_and_howard_agree_on_larger_problems() {
    let mut rng = rng(11);
    let params = SolverParams::default();
    for _ in 0..40 {
        let disc = random_disc(&mut rng, 24);
        let (w, dom) = random_restriction(&mut rng, &disc);
        let p = restrict(&disc, &w, &dom).unwrap();
        let f = solve_fppi(&p, &params, None).unwrap();
        let h = solve_howard(&p, &params).unwrap();
        assert!(f.converged && h.converged);
        let scale = f.v.iter().fold(1.0f64, |s, x| s.max(x.abs()));
        assert!(max_abs_diff(&f.v, &h.v) <= 1e-12 * scale);
        assert_eq!(f.intervene, h.intervene);
    }
}

#[test]
fn brute_force_rejects_large_problems() {
    let d = linear(0.25);
    let p = restrict(&d, &vec![0.0; d.len()], &vec![true; d.len()]).unwrap();
    assert!(matches!(solve_brute_force(&p), Err(Error::BudgetExceeded(_))));
}

#[test]
fn coarse_linear_game_converges_exactly() {
    for (h, iters) in [(1.0, 17), (0.5, 13)] {
        let d = linear(h);
        let out = run(&d, &SolverParams::default(), &exact_params()).unwrap();
        assert_eq!(out.kind, OutcomeKind::ConvergedExact);
        assert_eq!(out.iters, iters);
        assert!(out.degenerate.is_clean());
        assert!(out.residual.max <= 1e-14);
        assert_eq!(out.nash.boundary, Some(-3.0));
        assert!(verify_solution_characterization(&d, &out.v).unwrap().gap <= 1e-10);
    }
}

#[test]
fn howard_driver_reaches_the_same_equilibrium() {
    let d = linear(0.5);
    let fppi = run(&d, &SolverParams::default(), &exact_params()).unwrap();
    let sp = SolverParams {
        variant: SolverVariant::Howard,
        ..SolverParams::default()
    };
    let howard = run(&d, &sp, &exact_params()).unwrap();
    assert!(howard.kind.is_converged());
    assert_eq!(howard.policy.intervene, fppi.policy.intervene);
    assert!(max_abs_diff(&howard.v, &fppi.v) <= 1e-10);
}

#[test]
fn opponent_strategy_mirrors_the_player() {
    let d = linear(0.5);
    let out = run(&d, &SolverParams::default(), &exact_params()).unwrap();
    let s = symmetry_report(&d, &out.v, &out.policy);
    assert!(s.consistent);
    let n = d.len();
    for i in 0..n {
        assert_eq!(s.opponent_payoff[i], out.v[n - 1 - i]);
        assert_eq!(s.opponent_intervene[i], out.policy.intervene[n - 1 - i]);
    }
    assert_eq!(out.nash.opponent_boundary, out.nash.boundary.map(|b| -b));
}

#[test]
fn tolerance_mode_stops_early() {
    let d = linear(1.0);
    let out = run(&d, &SolverParams::default(), &DriverParams::default()).unwrap();
    assert_eq!(out.kind, OutcomeKind::ConvergedTol);
    assert!(out.iters < 17);
    assert!(out.history.last().unwrap().diff < 1e-10);
}

#[test]
fn residual_is_small_away_from_the_opponent_border_at_coarse_steps() {
    let d = linear(1.0);
    let out = run(&d, &SolverParams::default(), &exact_params()).unwrap();
    let r = qvi_residual(&d, &out.v);
    assert!(r.max_excluding_spikes <= r.max);
    assert!(r.spike.iter().any(|&s| s));
}
