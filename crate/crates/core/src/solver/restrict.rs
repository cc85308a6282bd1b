use crate::discretization::{Discretization, Tridiagonal};
use crate::error::{Error, Result};

/// The impulse-control problem restricted to a domain `D`, with the values
/// outside `D` frozen to `w`.
///
/// The restricted generator stays tridiagonal in local numbering: two
/// consecutive local nodes are coupled only when they are neighbours on the
/// grid.
#[derive(Debug, Clone)]
pub struct RestrictedProblem<'a> {
    pub disc: &'a Discretization,
    /// Global indices of `D`, ascending.
    pub domain: Vec<usize>,
    local: Vec<Option<usize>>,
    pub l: Tridiagonal,
    pub f: Vec<f64>,
    /// Frozen values (only entries outside `D` are read).
    pub w: Vec<f64>,
}

/// Builds the restriction to `D`. `D` must contain every nonpositive node.
pub fn restrict<'a>(
    disc: &'a Discretization,
    w: &[f64],
    in_domain: &[bool],
) -> Result<RestrictedProblem<'a>> {
    let n = disc.len();
    for (len, got) in [(n, w.len()), (n, in_domain.len())] {
        if len != got {
            return Err(Error::Dimension { expected: len, got });
        }
    }
    if let Some(k) = (0..=disc.grid.zero_index()).find(|&k| !in_domain[k]) {
        return Err(Error::DomainMissingNode(disc.grid.x(k)));
    }
    let domain: Vec<usize> = (0..n).filter(|&k| in_domain[k]).collect();
    let mut local = vec![None; n];
    for (a, &g) in domain.iter().enumerate() {
        local[g] = Some(a);
    }
    let l = disc.l();
    let m = domain.len();
    let mut lt = Tridiagonal {
        lower: vec![0.0; m],
        diag: vec![0.0; m],
        upper: vec![0.0; m],
    };
    let mut f = Vec::with_capacity(m);
    for (a, &g) in domain.iter().enumerate() {
        lt.diag[a] = l.diag[g];
        let mut fa = disc.f()[g];
        if g > 0 {
            if in_domain[g - 1] {
                lt.lower[a] = l.lower[g];
            } else {
                fa += l.lower[g] * w[g - 1];
            }
        }
        if g + 1 < n {
            if in_domain[g + 1] {
                lt.upper[a] = l.upper[g];
            } else {
                fa += l.upper[g] * w[g + 1];
            }
        }
        f.push(fa);
    }
    Ok(RestrictedProblem {
        disc,
        domain,
        local,
        l: lt,
        f,
        w: w.to_vec(),
    })
}

impl RestrictedProblem<'_> {
    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }

    pub fn local_index(&self, global: usize) -> Option<usize> {
        self.local[global]
    }

    /// Values on `D`, taken from `w`.
    pub fn initial(&self) -> Vec<f64> {
        self.domain.iter().map(|&g| self.w[g]).collect()
    }

    /// Full-grid vector equal to `v` on `D` and `w` elsewhere.
    pub fn extend(&self, v: &[f64]) -> Vec<f64> {
        let mut full = self.w.clone();
        for (a, &g) in self.domain.iter().enumerate() {
            full[g] = v[a];
        }
        full
    }

    /// `L~ v + f~`.
    pub fn continuation_residual(&self, v: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|a| self.l.row_dot(a, v) + self.f[a]).collect()
    }

    /// Whether the local node may intervene (negative grid nodes only).
    pub fn can_intervene(&self, a: usize) -> bool {
        self.disc.grid.is_negative(self.domain[a])
    }

    /// `M~ v` and the maximizing impulses, on `D`.
    pub fn loss(&self, v: &[f64]) -> (Vec<f64>, Vec<usize>) {
        let full = self.extend(v);
        self.domain
            .iter()
            .map(|&g| self.disc.loss_at(&full, g))
            .unzip()
    }

    /// `{L~v + f~ <= lambda (M~v - v)}` on negative nodes of `D`, in local
    /// numbering.
    pub fn intervention_set(&self, v: &[f64], lambda: f64) -> Vec<bool> {
        let (mv, _) = self.loss(v);
        let cont = self.continuation_residual(v);
        (0..self.len())
            .map(|a| self.can_intervene(a) && cont[a] <= lambda * (mv[a] - v[a]))
            .collect()
    }

    /// Residual `max{L~v + f~, M~v - v}` per local node.
    pub fn qvi_residual(&self, v: &[f64]) -> Vec<f64> {
        let (mv, _) = self.loss(v);
        let cont = self.continuation_residual(v);
        (0..self.len()).map(|a| cont[a].max(mv[a] - v[a])).collect()
    }

    /// Packages a local solution as a full-grid [`super::InnerSolution`].
    pub(crate) fn finish(&self, v: &[f64], lambda: f64, iters: usize, converged: bool) -> super::InnerSolution {
        let local_set = self.intervention_set(v, lambda);
        let full = self.extend(v);
        let (_, steps) = self.disc.loss_operator(&full);
        let mut intervene = vec![false; self.disc.len()];
        for (a, &g) in self.domain.iter().enumerate() {
            intervene[g] = local_set[a];
        }
        super::InnerSolution {
            v: full,
            intervene,
            steps,
            iters,
            converged,
        }
    }
}
