//! One-dimensional type distributions with closed-form quantiles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::integrate;

/// Distribution of agent types on a compact support.
///
/// `cdf` and `quantile` are primitive; survival and expectations are derived
/// from them. The equal-revenue law carries an atom of mass `1/H` at `H` so
/// that `Pr[theta >= h] = 1/h` holds on all of `[1, H]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TypeDistribution {
    Uniform {
        lo: f64,
        hi: f64,
    },
    EqualRevenue {
        #[serde(rename = "H")]
        h: f64,
    },
    /// Piecewise-linear CDF through `knots` (`[theta, F(theta)]` pairs). The
    /// last knot may sit below 1, in which case the remainder is an atom at
    /// the top of the support.
    PiecewiseCdf {
        knots: Vec<[f64; 2]>,
    },
}

impl TypeDistribution {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        let d = TypeDistribution::Uniform { lo, hi };
        d.check()?;
        Ok(d)
    }

    pub fn equal_revenue(h: f64) -> Result<Self> {
        let d = TypeDistribution::EqualRevenue { h };
        d.check()?;
        Ok(d)
    }

    pub fn piecewise(knots: Vec<[f64; 2]>) -> Result<Self> {
        let d = TypeDistribution::PiecewiseCdf { knots };
        d.check()?;
        Ok(d)
    }

    /// Structural checks; every constructor and deserialized spec goes
    /// through this.
    pub fn check(&self) -> Result<()> {
        match self {
            TypeDistribution::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(Error::Domain(format!("uniform needs lo < hi, got [{lo}, {hi}]")));
                }
            }
            TypeDistribution::EqualRevenue { h } => {
                if !(h.is_finite() && *h >= 1.0) {
                    return Err(Error::Domain(format!("equal-revenue needs H >= 1, got {h}")));
                }
            }
            TypeDistribution::PiecewiseCdf { knots } => {
                if knots.len() < 2 {
                    return Err(Error::Domain("piecewise cdf needs at least two knots".into()));
                }
                if knots[0][1] != 0.0 {
                    return Err(Error::Domain("piecewise cdf must start at F = 0".into()));
                }
                for w in knots.windows(2) {
                    if !(w[1][0] > w[0][0]) || w[1][1] < w[0][1] {
                        return Err(Error::Domain(
                            "piecewise cdf knots must have increasing theta and non-decreasing F"
                                .into(),
                        ));
                    }
                }
                let last = knots[knots.len() - 1][1];
                if !(last > 0.0 && last <= 1.0) {
                    return Err(Error::Domain(format!("last knot F must lie in (0, 1], got {last}")));
                }
                if knots.iter().flatten().any(|x| !x.is_finite()) {
                    return Err(Error::Domain("non-finite knot".into()));
                }
            }
        }
        Ok(())
    }

    pub fn support_lo(&self) -> f64 {
        match self {
            TypeDistribution::Uniform { lo, .. } => *lo,
            TypeDistribution::EqualRevenue { .. } => 1.0,
            TypeDistribution::PiecewiseCdf { knots } => knots[0][0],
        }
    }

    pub fn support_hi(&self) -> f64 {
        match self {
            TypeDistribution::Uniform { hi, .. } => *hi,
            TypeDistribution::EqualRevenue { h } => *h,
            TypeDistribution::PiecewiseCdf { knots } => knots[knots.len() - 1][0],
        }
    }

    /// Probability mass sitting exactly at `support_hi`.
    pub fn atom_at_hi(&self) -> f64 {
        match self {
            TypeDistribution::Uniform { .. } => 0.0,
            TypeDistribution::EqualRevenue { h } => 1.0 / h,
            TypeDistribution::PiecewiseCdf { knots } => 1.0 - knots[knots.len() - 1][1],
        }
    }

    /// `Pr[theta <= x]`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x >= self.support_hi() {
            return 1.0;
        }
        self.cdf_left(x)
    }

    /// Left limit `Pr[theta < x]`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        if x <= self.support_lo() {
            return 0.0;
        }
        if x > self.support_hi() {
            return 1.0;
        }
        match self {
            TypeDistribution::Uniform { lo, hi } => (x - lo) / (hi - lo),
            TypeDistribution::EqualRevenue { .. } => 1.0 - 1.0 / x,
            TypeDistribution::PiecewiseCdf { knots } => {
                let i = knots.partition_point(|k| k[0] < x);
                // knots[i-1].theta < x <= knots[i].theta
                let (a, b) = (knots[i - 1], knots[i]);
                a[1] + (b[1] - a[1]) * (x - a[0]) / (b[0] - a[0])
            }
        }
    }

    /// `Pr[theta >= x]`, consistent with the atom at the top.
    pub fn survival(&self, x: f64) -> f64 {
        1.0 - self.cdf_left(x)
    }

    /// Generalized inverse: the smallest `theta` with `cdf(theta) >= u`.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match self {
            TypeDistribution::Uniform { lo, hi } => lo + u * (hi - lo),
            TypeDistribution::EqualRevenue { h } => {
                if u >= 1.0 - 1.0 / h {
                    *h
                } else {
                    (1.0 / (1.0 - u)).max(1.0)
                }
            }
            TypeDistribution::PiecewiseCdf { knots } => {
                let top = knots[knots.len() - 1];
                if u > top[1] {
                    return top[0];
                }
                if u <= 0.0 {
                    return knots[0][0];
                }
                let i = knots.partition_point(|k| k[1] < u);
                let (a, b) = (knots[i - 1], knots[i]);
                a[0] + (b[0] - a[0]) * (u - a[1]) / (b[1] - a[1])
            }
        }
    }

    /// Integrates `f(theta)` over the types with quantile in `[u_from, u_to]`:
    /// adaptive quadrature on the continuous part plus the atom's share.
    pub fn integrate_quantiles<F: Fn(f64) -> f64>(
        &self,
        u_from: f64,
        u_to: f64,
        f: F,
        tol: f64,
    ) -> Result<f64> {
        let (u_from, u_to) = (u_from.clamp(0.0, 1.0), u_to.clamp(0.0, 1.0));
        if u_to <= u_from {
            return Ok(0.0);
        }
        let atom = self.atom_at_hi();
        let u_atom = 1.0 - atom;
        let cont_hi = u_to.min(u_atom);
        let mut total = 0.0;
        if cont_hi > u_from {
            total += integrate(|u| f(self.quantile(u)), u_from, cont_hi, tol)?;
        }
        let atom_share = u_to - u_from.max(u_atom);
        if atom > 0.0 && atom_share > 0.0 {
            total += atom_share * f(self.support_hi());
        }
        Ok(total)
    }

    /// Integrates `f` over types in `[from, to)`, or `[from, hi]` (atom
    /// included) when `to` is `None`.
    pub fn integrate_between<F: Fn(f64) -> f64>(
        &self,
        from: f64,
        to: Option<f64>,
        f: F,
        tol: f64,
    ) -> Result<f64> {
        let u_from = self.cdf_left(from);
        let u_to = to.map_or(1.0, |t| self.cdf_left(t));
        self.integrate_quantiles(u_from, u_to, f, tol)
    }

    /// `E[f(theta)]` with the default quadrature tolerance.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        self.expect_with(f, crate::Settings::default().quad)
    }

    pub fn expect_with<F: Fn(f64) -> f64>(&self, f: F, tol: f64) -> Result<f64> {
        self.integrate_quantiles(0.0, 1.0, f, tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_mean_and_normalization() {
        let d = TypeDistribution::uniform(0.0, 1.0).unwrap();
        assert!((d.expect(|t| t).unwrap() - 0.5).abs() < 1e-12);
        assert!((d.expect(|_| 1.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn equal_revenue_mean_is_one_plus_log_h() {
        let h = 4f64.exp();
        let d = TypeDistribution::equal_revenue(h).unwrap();
        assert!((d.expect(|t| t).unwrap() - 5.0).abs() < 1e-8);
        assert!((d.expect(|_| 1.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn equal_revenue_atom_and_survival() {
        let d = TypeDistribution::equal_revenue(10.0).unwrap();
        assert_eq!(d.cdf(10.0), 1.0);
        assert!((d.cdf_left(10.0) - 0.9).abs() < 1e-15);
        assert!((d.atom_at_hi() - 0.1).abs() < 1e-15);
        for h in [1.0, 1.5, 2.0, 7.0, 10.0] {
            assert!((d.survival(h) * h - 1.0).abs() < 1e-9);
        }
        assert_eq!(d.quantile(0.95), 10.0);
    }

    #[test]
    fn equal_revenue_quantile_values() {
        let d = TypeDistribution::equal_revenue(4.0).unwrap();
        assert!((d.quantile(0.25) - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(d.quantile(0.75), 4.0);
        assert_eq!(d.quantile(0.5), 2.0);
    }

    #[test]
    fn piecewise_cdf_with_atom() {
        let d = TypeDistribution::piecewise(vec![[0.0, 0.0], [1.0, 0.5], [2.0, 0.8]]).unwrap();
        assert!((d.atom_at_hi() - 0.2).abs() < 1e-15);
        assert!((d.cdf(0.5) - 0.25).abs() < 1e-15);
        assert!((d.cdf(1.5) - 0.65).abs() < 1e-15);
        assert_eq!(d.cdf(2.0), 1.0);
        assert!((d.quantile(0.65) - 1.5).abs() < 1e-12);
        assert_eq!(d.quantile(0.9), 2.0);
        // mean = int_0^1 t*0.5 + int_1^2 t*0.3 + 0.2*2
        let mean = 0.25 + 0.45 + 0.4;
        assert!((d.expect(|t| t).unwrap() - mean).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(TypeDistribution::uniform(1.0, 1.0).is_err());
        assert!(TypeDistribution::equal_revenue(0.5).is_err());
        assert!(TypeDistribution::piecewise(vec![[0.0, 0.1], [1.0, 1.0]]).is_err());
        assert!(TypeDistribution::piecewise(vec![[0.0, 0.0], [0.0, 1.0]]).is_err());
    }

    #[test]
    fn integrate_between_splits_mass() {
        let d = TypeDistribution::equal_revenue(10.0).unwrap();
        let lower = d.integrate_between(1.0, Some(2.0), |_| 1.0, 1e-10).unwrap();
        let upper = d.integrate_between(2.0, None, |_| 1.0, 1e-10).unwrap();
        assert!((lower - 0.5).abs() < 1e-12);
        assert!((upper - 0.5).abs() < 1e-12);
    }
}
