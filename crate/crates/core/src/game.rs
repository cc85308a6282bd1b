//! Analytic ingredients of a symmetric impulse game.
//!
//! Every family is a closed parametric form in the shifted variable
//! `y = x - s`, where `s` is the symmetry line. The rest of the crate works
//! in shifted coordinates and only converts back when reporting.

use crate::error::{Error, Result};

/// Running payoff `f(x) = sum_k a_k (x-s)^k + alpha |x-s|`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PayoffFamily {
    pub poly_coeffs: Vec<f64>,
    pub abs_coeff: f64,
}

impl PayoffFamily {
    pub fn new(poly_coeffs: Vec<f64>, abs_coeff: f64) -> Self {
        Self {
            poly_coeffs,
            abs_coeff,
        }
    }

    /// Evaluates at a shifted argument `y`.
    pub fn eval_shifted(&self, y: f64) -> f64 {
        // Horner
        let poly = self
            .poly_coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, &a| acc * y + a);
        poly + self.abs_coeff * y.abs()
    }
}

/// Intervention cost `c(x, d) = c0 + c1 d + c2 d^2 + c_sqrt sqrt(d)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostFamily {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c_sqrt: f64,
}

impl CostFamily {
    pub fn eval(&self, delta: f64) -> f64 {
        self.c0 + self.c1 * delta + self.c2 * delta * delta + self.c_sqrt * delta.sqrt()
    }

    /// Affine families admit the boundary slope heuristic.
    pub fn is_affine(&self) -> bool {
        self.c2 == 0.0 && self.c_sqrt == 0.0
    }
}

/// Gain `g(x, d) = g0 + g1 d` collected when the opponent shifts the state
/// by an impulse of magnitude `d >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GainFamily {
    pub g0: f64,
    pub g1: f64,
}

impl GainFamily {
    pub fn eval(&self, d: f64) -> f64 {
        self.g0 + self.g1 * d
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    /// Mean-reversion speed; the drift is `-kappa (x - s)`.
    pub drift_kappa: f64,
    pub sigma0: f64,
    pub rho: f64,
    pub running_payoff: PayoffFamily,
    pub cost: CostFamily,
    pub gain: GainFamily,
    pub symmetry_line: f64,
}

impl GameSpec {
    pub fn new(
        drift_kappa: f64,
        sigma0: f64,
        rho: f64,
        running_payoff: PayoffFamily,
        cost: CostFamily,
        gain: GainFamily,
    ) -> Result<Self> {
        let spec = Self {
            drift_kappa,
            sigma0,
            rho,
            running_payoff,
            cost,
            gain,
            symmetry_line: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_symmetry_line(mut self, s: f64) -> Self {
        self.symmetry_line = s;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.drift_kappa,
            self.sigma0,
            self.rho,
            self.running_payoff.abs_coeff,
            self.cost.c0,
            self.cost.c1,
            self.cost.c2,
            self.cost.c_sqrt,
            self.gain.g0,
            self.gain.g1,
            self.symmetry_line,
        ]
        .iter()
        .chain(self.running_payoff.poly_coeffs.iter())
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidGame("non-finite parameter".into()));
        }
        if self.rho <= 0.0 {
            return Err(Error::InvalidGame(format!("rho must be > 0, got {}", self.rho)));
        }
        if self.sigma0 <= 0.0 {
            return Err(Error::InvalidGame(format!(
                "sigma0 must be > 0, got {}",
                self.sigma0
            )));
        }
        if self.drift_kappa < 0.0 {
            return Err(Error::InvalidGame(format!(
                "drift_kappa must be >= 0, got {}",
                self.drift_kappa
            )));
        }
        Ok(())
    }

    /// The linear game `mu=0, sigma=.15, rho=.02, f=x+3, c=100+15d, g=15d`.
    pub fn linear_game() -> Self {
        Self::new(
            0.0,
            0.15,
            0.02,
            PayoffFamily::new(vec![3.0, 1.0], 0.0),
            CostFamily {
                c0: 100.0,
                c1: 15.0,
                ..Default::default()
            },
            GainFamily { g0: 0.0, g1: 15.0 },
        )
        .expect("valid constants")
    }

    /// The cash-management game `mu=0, sigma=1, rho=.5, f=-|x|, c=3+d, g=-1`.
    pub fn cash_game() -> Self {
        Self::new(
            0.0,
            1.0,
            0.5,
            PayoffFamily::new(vec![], -1.0),
            CostFamily {
                c0: 3.0,
                c1: 1.0,
                ..Default::default()
            },
            GainFamily { g0: -1.0, g1: 0.0 },
        )
        .expect("valid constants")
    }

    pub fn shift(&self, x: f64) -> f64 {
        x - self.symmetry_line
    }

    pub fn unshift(&self, y: f64) -> f64 {
        y + self.symmetry_line
    }

    pub fn drift_shifted(&self, y: f64) -> f64 {
        -self.drift_kappa * y
    }

    pub fn eval_drift(&self, x: f64) -> f64 {
        self.drift_shifted(self.shift(x))
    }

    pub fn eval_f(&self, x: f64) -> f64 {
        self.running_payoff.eval_shifted(self.shift(x))
    }

    /// Cost families do not depend on the state; `x` is accepted for symmetry
    /// with the analytic definition.
    pub fn eval_cost(&self, _x: f64, delta: f64) -> f64 {
        self.cost.eval(delta)
    }

    pub fn eval_gain(&self, _x: f64, d: f64) -> f64 {
        self.gain.eval(d)
    }

    /// Sufficient condition for `c > 0` on every impulse `d >= 0`.
    pub fn cost_trivially_positive(&self) -> bool {
        self.cost.c0 > 0.0 && self.cost.c1 >= 0.0 && self.cost.c2 >= 0.0 && self.cost.c_sqrt >= 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ou(kappa: f64, s: f64) -> GameSpec {
        GameSpec::new(
            kappa,
            1.0,
            0.1,
            PayoffFamily::default(),
            CostFamily {
                c0: 1.0,
                ..Default::default()
            },
            GainFamily::default(),
        )
        .unwrap()
        .with_symmetry_line(s)
    }

    #[test]
    fn drift_examples() {
        assert_eq!(ou(0.0, 0.0).eval_drift(3.7), 0.0);
        assert_eq!(ou(1.0, 0.0).eval_drift(2.0), -2.0);
        assert_eq!(ou(0.5, 1.0).eval_drift(0.0), 0.5);
    }

    #[test]
    fn family_examples() {
        let lin = GameSpec::linear_game();
        assert_eq!(lin.eval_cost(0.0, 2.0), 130.0);
        assert_eq!(lin.eval_f(-3.0), 0.0);
        let cash = GameSpec::cash_game();
        for d in [0.0, 0.5, 7.0] {
            assert_eq!(cash.eval_gain(1.0, d), -1.0);
        }
        assert_eq!(cash.eval_f(-2.5), -2.5);
    }

    #[test]
    fn sqrt_cost() {
        let c = CostFamily {
            c0: 10.0,
            c_sqrt: 20.0,
            ..Default::default()
        };
        assert_eq!(c.eval(4.0), 50.0);
        assert!(!c.is_affine());
    }

    #[test]
    fn rejects_bad_parameters() {
        let bad = GameSpec::new(
            0.0,
            1.0,
            0.0,
            PayoffFamily::default(),
            CostFamily::default(),
            GainFamily::default(),
        );
        assert!(bad.is_err());
        let bad = GameSpec::new(
            0.0,
            -1.0,
            0.1,
            PayoffFamily::default(),
            CostFamily::default(),
            GainFamily::default(),
        );
        assert!(bad.is_err());
    }

    proptest::proptest! {
        #[test]
        fn drift_is_odd_about_symmetry_line(kappa in 0.0f64..5.0, s in -3.0f64..3.0, x in -10.0f64..10.0) {
            // s + x and s - x are rounded before the shift is undone
            let g = ou(kappa, s);
            let tol = 4.0 * f64::EPSILON * kappa * (s.abs() + x.abs());
            proptest::prop_assert!((g.eval_drift(s + x) + g.eval_drift(s - x)).abs() <= tol);
        }

        #[test]
        fn cost_bounded_below_by_fixed_part(c0 in 0.01f64..100.0, c1 in 0.0f64..10.0, c2 in 0.0f64..10.0, cs in 0.0f64..10.0, d in 0.0f64..50.0) {
            let c = CostFamily { c0, c1, c2, c_sqrt: cs };
            proptest::prop_assert!(c.eval(d) >= c0);
        }
    }
}
