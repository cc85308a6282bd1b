//! Grid, generator and intervention operators on a symmetric equispaced grid.
//!
//! Nodes are stored by position `idx = i + N` for `i = -N..=N`. The
//! reflection `x -> -x` is the index map `idx -> 2N - idx`.

use crate::error::{Error, Result};
use crate::game::GameSpec;
use crate::matrix::{classify_rows, SparseMatrix};

/// Symmetric equispaced grid `x_i = i h`, `i = -N..=N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n: usize,
    h: f64,
}

impl Grid {
    pub fn new(n: usize, h: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGrid("N must be positive".into()));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidGrid(format!("step must be > 0, got {h}")));
        }
        Ok(Self { n, h })
    }

    /// Half-width in nodes.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        2 * self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x_max(&self) -> f64 {
        self.n as f64 * self.h
    }

    /// Signed node number `i` of position `idx`.
    pub fn node(&self, idx: usize) -> isize {
        idx as isize - self.n as isize
    }

    pub fn x(&self, idx: usize) -> f64 {
        self.node(idx) as f64 * self.h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.x(k)).collect()
    }

    pub fn mirror(&self, idx: usize) -> usize {
        2 * self.n - idx
    }

    pub fn is_negative(&self, idx: usize) -> bool {
        idx < self.n
    }

    pub fn zero_index(&self) -> usize {
        self.n
    }

    /// `Sv(x) = v(-x)`.
    pub fn reflect<T: Copy>(&self, v: &[T]) -> Vec<T> {
        v.iter().rev().copied().collect()
    }

    /// Linear interpolation weights of the point `y` on the closest nodes,
    /// clamped to the end nodes beyond the grid.
    pub fn interpolation_weights(&self, y: f64) -> Vec<(usize, f64)> {
        let t = y / self.h + self.n as f64;
        let last = self.len() - 1;
        if t <= 0.0 {
            return vec![(0, 1.0)];
        }
        if t >= last as f64 {
            return vec![(last, 1.0)];
        }
        let lo = t.floor();
        let frac = t - lo;
        let lo = lo as usize;
        if frac == 0.0 {
            vec![(lo, 1.0)]
        } else {
            vec![(lo, 1.0 - frac), (lo + 1, frac)]
        }
    }
}

/// Builds the grid with `N = x_max / h` nodes on each side of zero.
pub fn build_grid(x_max: f64, h: f64) -> Result<Grid> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidGrid(format!("step must be > 0, got {h}")));
    }
    if !(x_max > 0.0 && x_max.is_finite()) {
        return Err(Error::InvalidGrid(format!("x_max must be > 0, got {x_max}")));
    }
    let ratio = x_max / h;
    let n = ratio.round();
    if n < 1.0 || (ratio - n).abs() > 1e-9 * n.max(1.0) {
        return Err(Error::InvalidGrid(format!(
            "x_max / h = {ratio} is not a positive integer"
        )));
    }
    Grid::new(n as usize, h)
}

/// Neumann slopes at the left and right ghost nodes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BoundaryData {
    pub lbc: f64,
    pub rbc: f64,
}

/// Slopes `(c1, g1)` of affine cost and gain families; `(0, 0)` otherwise.
pub fn default_boundary(spec: &GameSpec) -> BoundaryData {
    if spec.cost.is_affine() {
        BoundaryData {
            lbc: spec.cost.c1,
            rbc: spec.gain.g1,
        }
    } else {
        BoundaryData::default()
    }
}

/// Whether [`default_boundary`] falls back to a guess for this game.
pub fn boundary_is_heuristic(spec: &GameSpec) -> bool {
    !spec.cost.is_affine()
}

/// Tridiagonal matrix stored by diagonals. `lower[0]` and `upper[n-1]` are 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|i| self.row_dot(i, v)).collect()
    }

    pub fn row_dot(&self, i: usize, v: &[f64]) -> f64 {
        let mut s = self.diag[i] * v[i];
        if i > 0 {
            s += self.lower[i] * v[i - 1];
        }
        if i + 1 < self.len() {
            s += self.upper[i] * v[i + 1];
        }
        s
    }

    pub fn to_sparse(&self) -> SparseMatrix {
        let n = self.len();
        let rows = (0..n)
            .map(|i| {
                let mut r = vec![(i, self.diag[i])];
                if i > 0 {
                    r.push((i - 1, self.lower[i]));
                }
                if i + 1 < n {
                    r.push((i + 1, self.upper[i]));
                }
                r
            })
            .collect();
        SparseMatrix::from_rows(n, rows)
    }
}

/// Upwind discretization `L` of `1/2 sigma^2 V'' + mu V' - rho V` together
/// with the running payoff corrected for the folded ghost nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    pub l: Tridiagonal,
    pub f_adjusted: Vec<f64>,
}

pub fn build_generator(spec: &GameSpec, grid: &Grid, bc: BoundaryData) -> Result<GeneratorMatrix> {
    let n = grid.len();
    let h = grid.h();
    let diffusion = 0.5 * spec.sigma0 * spec.sigma0 / (h * h);
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut f: Vec<f64> = (0..n)
        .map(|k| spec.running_payoff.eval_shifted(grid.x(k)))
        .collect();

    for k in 0..n {
        let mu = spec.drift_shifted(grid.x(k));
        let (mut lo, mut up) = (diffusion, diffusion);
        let mut d = -2.0 * diffusion - spec.rho;
        if mu >= 0.0 {
            up += mu / h;
            d -= mu / h;
        } else {
            lo += -mu / h;
            d += mu / h;
        }
        // Ghost values: v(x_-N - h) = v(x_-N) - lbc h, v(x_N + h) = v(x_N) + rbc h.
        if k == 0 {
            d += lo;
            f[k] -= lo * bc.lbc * h;
            lo = 0.0;
        }
        if k + 1 == n {
            d += up;
            f[k] += up * bc.rbc * h;
            up = 0.0;
        }
        lower[k] = lo;
        diag[k] = d;
        upper[k] = up;
    }

    let l = Tridiagonal { lower, diag, upper };
    let minus_l = l.to_sparse().scale(-1.0);
    let class = classify_rows(&minus_l);
    if let Some(row) = (0..n).find(|&i| class.rows[i] != crate::matrix::RowKind::Sdd) {
        return Err(Error::GeneratorNotSdd(row));
    }
    if !minus_l.is_l0() {
        return Err(Error::GeneratorNotSdd(0));
    }
    Ok(GeneratorMatrix { l, f_adjusted: f })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ImpulseMode {
    /// Impulses stop short of the mirror node: `Z(x_i) = {0, h, ..., (2|i|-1) h}`.
    #[default]
    Constrained,
    /// Impulses up to the right end: `Z(x_i) = {0, h, ..., (N-i) h}`.
    Unconstrained,
}

/// Admissible impulse sets, stored as the largest number of grid steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpulseSets {
    pub mode: ImpulseMode,
    grid: Grid,
}

impl ImpulseSets {
    pub fn new(grid: Grid, mode: ImpulseMode) -> Self {
        Self { mode, grid }
    }

    pub fn max_steps(&self, idx: usize) -> usize {
        let i = self.grid.node(idx);
        if i >= 0 {
            return 0;
        }
        let n = self.grid.n() as isize;
        match self.mode {
            ImpulseMode::Constrained => (2 * (-i) - 1) as usize,
            ImpulseMode::Unconstrained => (n - i) as usize,
        }
    }

    /// Number of elements of `Z(x)`.
    pub fn size(&self, idx: usize) -> usize {
        self.max_steps(idx) + 1
    }

    pub fn impulses(&self, idx: usize) -> Vec<f64> {
        (0..=self.max_steps(idx))
            .map(|k| k as f64 * self.grid.h())
            .collect()
    }

    /// Converts a real impulse to a step count, if admissible.
    pub fn steps_of(&self, idx: usize, delta: f64) -> Option<usize> {
        let k = (delta / self.grid.h()).round();
        if k < 0.0 || k as usize > self.max_steps(idx) {
            return None;
        }
        ((k * self.grid.h() - delta).abs() <= 1e-12 * self.grid.h().max(delta.abs()))
            .then_some(k as usize)
    }
}

/// Sparse impulse operator `B(delta)v(x) = v[[x + delta(x)]]` for real
/// impulses, which must belong to `Z(x)`.
pub fn build_impulse_operator(
    grid: &Grid,
    sets: &ImpulseSets,
    delta: &[f64],
) -> Result<SparseMatrix> {
    if delta.len() != grid.len() {
        return Err(Error::Dimension {
            expected: grid.len(),
            got: delta.len(),
        });
    }
    let rows = delta
        .iter()
        .enumerate()
        .map(|(k, &d)| {
            if sets.steps_of(k, d).is_none() {
                return Err(Error::InadmissibleImpulse { x: grid.x(k), delta: d });
            }
            Ok(grid.interpolation_weights(grid.x(k) + d))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SparseMatrix::from_rows(grid.len(), rows))
}

/// Impulse operator for impulses given as step counts.
pub fn impulse_operator_steps(grid: &Grid, steps: &[usize]) -> SparseMatrix {
    let last = grid.len() - 1;
    let rows = steps
        .iter()
        .enumerate()
        .map(|(k, &s)| vec![((k + s).min(last), 1.0)])
        .collect();
    SparseMatrix::from_rows(grid.len(), rows)
}

/// Everything needed to evaluate the discrete QVI system of one game on one
/// grid.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub spec: GameSpec,
    pub grid: Grid,
    pub boundary: BoundaryData,
    pub generator: GeneratorMatrix,
    pub sets: ImpulseSets,
    /// `cost[k] = c(k h)` for every step count in use.
    cost: Vec<f64>,
    /// Impulse sizes at which the cost is not positive.
    pub nonpositive_costs: Vec<f64>,
}

impl Discretization {
    pub fn new(
        spec: GameSpec,
        grid: Grid,
        boundary: BoundaryData,
        mode: ImpulseMode,
    ) -> Result<Self> {
        spec.validate()?;
        let generator = build_generator(&spec, &grid, boundary)?;
        let sets = ImpulseSets::new(grid, mode);
        let max = (0..grid.len()).map(|k| sets.max_steps(k)).max().unwrap_or(0);
        let cost: Vec<f64> = (0..=max)
            .map(|k| spec.cost.eval(k as f64 * grid.h()))
            .collect();
        let nonpositive_costs = cost
            .iter()
            .enumerate()
            .filter(|(_, &c)| c <= 0.0)
            .map(|(k, _)| k as f64 * grid.h())
            .collect();
        Ok(Self {
            spec,
            grid,
            boundary,
            generator,
            sets,
            cost,
            nonpositive_costs,
        })
    }

    /// Default boundary slopes and constrained impulse sets.
    pub fn with_defaults(spec: GameSpec, grid: Grid) -> Result<Self> {
        let bc = default_boundary(&spec);
        Self::new(spec, grid, bc, ImpulseMode::Constrained)
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn f(&self) -> &[f64] {
        &self.generator.f_adjusted
    }

    pub fn l(&self) -> &Tridiagonal {
        &self.generator.l
    }

    pub fn cost_steps(&self, steps: usize) -> f64 {
        self.cost[steps]
    }

    pub fn gain_steps(&self, steps: usize) -> f64 {
        self.spec.gain.eval(steps as f64 * self.grid.h())
    }

    pub fn impulse_value(&self, steps: usize) -> f64 {
        steps as f64 * self.grid.h()
    }

    /// `Lv + f`.
    pub fn continuation_residual(&self, v: &[f64]) -> Vec<f64> {
        let l = self.l();
        (0..self.len())
            .map(|i| l.row_dot(i, v) + self.f()[i])
            .collect()
    }

    /// `Mv` and the largest maximizing impulse (in steps) at every node.
    pub fn loss_operator(&self, v: &[f64]) -> (Vec<f64>, Vec<usize>) {
        (0..self.len()).map(|i| self.loss_at(v, i)).unzip()
    }

    /// Maximization of `v[[x + d]] - c(d)` over `Z(x)` at a single node.
    /// Exact ties resolve to the larger impulse.
    pub fn loss_at(&self, v: &[f64], i: usize) -> (f64, usize) {
        let mut best = (v[i] - self.cost[0], 0);
        for k in 1..=self.sets.max_steps(i) {
            let val = v[i + k] - self.cost[k];
            if val >= best.0 {
                best = (val, k);
            }
        }
        best
    }

    /// Best strictly positive impulse, used when a node is forced to act.
    pub fn loss_at_positive(&self, v: &[f64], i: usize) -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for k in 1..=self.sets.max_steps(i) {
            let val = v[i + k] - self.cost[k];
            if best.is_none_or(|(b, _)| val >= b) {
                best = Some((val, k));
            }
        }
        best
    }

    /// `Hv(x) = v[[x - d]] + g(d)` with `d = delta*(-x)`.
    pub fn gain_operator(&self, v: &[f64], delta_star: &[usize]) -> Vec<f64> {
        (0..self.len()).map(|i| self.gain_at(v, delta_star, i)).collect()
    }

    pub fn gain_at(&self, v: &[f64], delta_star: &[usize], i: usize) -> f64 {
        let d = delta_star[self.grid.mirror(i)];
        v[i.saturating_sub(d)] + self.gain_steps(d)
    }

    pub fn impulse_operator(&self, steps: &[usize]) -> SparseMatrix {
        impulse_operator_steps(&self.grid, steps)
    }

    pub fn generator_sparse(&self) -> SparseMatrix {
        self.l().to_sparse()
    }
}
