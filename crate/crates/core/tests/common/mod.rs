#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use symgame::discretization::{build_grid, Discretization};
use symgame::game::{CostFamily, GainFamily, GameSpec, PayoffFamily};
use symgame::matrix::SparseMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_game(rng: &mut ChaCha8Rng) -> GameSpec {
    let degree = rng.gen_range(0..=2);
    let poly = (0..=degree).map(|_| rng.gen_range(-3.0..3.0)).collect();
    let c1 = rng.gen_range(0.0..3.0);
    GameSpec::new(
        rng.gen_range(0.0..0.5),
        rng.gen_range(0.1..2.0),
        rng.gen_range(0.01..1.0),
        PayoffFamily::new(poly, rng.gen_range(-1.0..0.5)),
        CostFamily {
            c0: rng.gen_range(0.2..5.0),
            c1,
            c2: 0.0,
            c_sqrt: 0.0,
        },
        GainFamily {
            g0: rng.gen_range(-1.0..1.0),
            g1: rng.gen_range(0.0..=c1),
        },
    )
    .unwrap()
}

/// Random game on `N` nodes per side with `N <= n_max`.
pub fn random_disc(rng: &mut ChaCha8Rng, n_max: usize) -> Discretization {
    let n = rng.gen_range(1..=n_max);
    let h = [0.25, 0.5, 1.0][rng.gen_range(0..3)];
    let grid = build_grid(n as f64 * h, h).unwrap();
    Discretization::with_defaults(random_game(rng), grid).unwrap()
}

/// Random frozen data and domain: every nonpositive node is kept, positive
/// nodes are dropped at random.
pub fn random_restriction(rng: &mut ChaCha8Rng, disc: &Discretization) -> (Vec<f64>, Vec<bool>) {
    let zero = disc.grid.zero_index();
    let w = (0..disc.len()).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let dom = (0..disc.len()).map(|i| i <= zero || rng.gen_bool(0.6)).collect();
    (w, dom)
}

/// Random nonnegative matrix with entries in multiples of 1/4 and row sums
/// at most one, so powers are computed exactly.
pub fn random_substochastic(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut budget = if rng.gen_bool(0.2) { rng.gen_range(0..4) } else { 4 };
        while budget > 0 && rng.gen_bool(0.7) {
            let q = rng.gen_range(1..=budget);
            a[(i, rng.gen_range(0..n))] += q as f64 / 4.0;
            budget -= q;
        }
    }
    a
}

fn norm_inf(a: &DMatrix<f64>) -> f64 {
    a.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// `inf{n : ||A^(n+1)||_inf < 1}` by explicit powers; `None` if no power
/// up to `A^(dim+1)` contracts (the walk bound makes that final).
pub fn contraction_by_powers(a: &DMatrix<f64>) -> Option<usize> {
    let mut p = a.clone();
    for n in 0..=a.nrows() {
        if norm_inf(&p) < 1.0 {
            return Some(n);
        }
        p = &p * a;
    }
    None
}

/// Random L0-matrix, weakly diagonally dominant, with a random number of
/// strict rows (possibly none).
pub fn random_wdd_l0(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut off = 0.0;
        for j in (0..n).filter(|&j| j != i) {
            if rng.gen_bool(0.3) {
                let x = rng.gen_range(0.1..2.0);
                a[(i, j)] = -x;
                off += x;
            }
        }
        let margin = if rng.gen_bool(0.3) { rng.gen_range(0.01..1.0) } else { 0.0 };
        a[(i, i)] = off + margin;
    }
    a
}

pub fn sparse(a: &DMatrix<f64>) -> SparseMatrix {
    SparseMatrix::from_dense(a)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
