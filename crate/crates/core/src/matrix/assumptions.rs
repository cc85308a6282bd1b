//! Walk-based validators for the structural assumptions on strategies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{distances_to, index_of_connectivity, Index, SparseMatrix};
use crate::diagnostics::assemble_coefficients;
use crate::discretization::Discretization;
use crate::solver::Policy;

/// True if every source row has a walk in the graph of `a` ending in a
/// target row.
pub fn reach_targets(a: &SparseMatrix, sources: &[bool], targets: &[bool]) -> bool {
    let dist = distances_to(&a.off_diagonal_graph(), targets);
    (0..a.dim()).all(|i| !sources[i] || dist[i].is_some())
}

/// Every node of the intervention set reaches its complement through the
/// graph of the impulse operator.
pub fn check_a0(b: &SparseMatrix, intervene: &[bool]) -> bool {
    let outside: Vec<bool> = intervene.iter().map(|&x| !x).collect();
    reach_targets(b, intervene, &outside)
}

/// Every row of `I_bar` or `-I` reaches the common continuation region
/// through the combined impulse graph of both players.
pub fn check_a0_prime(disc: &Discretization, phi: &Policy, phi_bar: &Policy) -> bool {
    let n = disc.len();
    let grid = &disc.grid;
    let mut rows = vec![Vec::new(); n];
    let mut sources = vec![false; n];
    for i in 0..n {
        if phi_bar.intervene[i] {
            rows[i].push((i + phi_bar.steps[i], 1.0));
            sources[i] = true;
        }
        let m = grid.mirror(i);
        if phi.intervene[m] {
            rows[i].push((i - phi.steps[m], 1.0));
            sources[i] = true;
        }
    }
    let targets: Vec<bool> = sources.iter().map(|&s| !s).collect();
    reach_targets(&SparseMatrix::from_rows(n, rows), &sources, &targets)
}

/// Random strategy: each negative node intervenes with a per-draw
/// probability, using a strictly positive admissible impulse.
pub fn sample_policy<R: Rng>(disc: &Discretization, rng: &mut R) -> Policy {
    let n = disc.len();
    let p: f64 = rng.gen_range(0.0..=1.0);
    let mut policy = Policy::passive(n);
    for i in 0..n {
        let max = disc.sets.max_steps(i);
        if max >= 1 && rng.gen_bool(p) {
            policy.intervene[i] = true;
            policy.steps[i] = rng.gen_range(1..=max);
        }
    }
    policy
}

#[derive(Debug, Clone)]
pub struct A0DoublePrimeReport {
    pub holds: bool,
    pub trials: usize,
    pub max_con: Index,
    /// First pair whose index exceeded `N`.
    pub counterexample: Option<(Policy, Policy)>,
}

/// Samples strategy pairs and checks `con[(A - B)(phi, phi_bar)] <= N`.
pub fn check_a0_doubleprime_sampled(disc: &Discretization, trials: usize, seed: u64) -> A0DoublePrimeReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = Index::Finite(disc.grid.n());
    let mut max_con = Index::Finite(0);
    let mut counterexample = None;
    for _ in 0..trials {
        let phi = sample_policy(disc, &mut rng);
        let phi_bar = sample_policy(disc, &mut rng);
        let con = index_of_connectivity(&assemble_coefficients(disc, &phi, &phi_bar).a_minus_b())
            .map_or(Index::Infinite, |r| r.con);
        max_con = max_con.max(con);
        if con > bound && counterexample.is_none() {
            counterexample = Some((phi, phi_bar));
        }
    }
    A0DoublePrimeReport {
        holds: counterexample.is_none(),
        trials,
        max_con,
        counterexample,
    }
}
