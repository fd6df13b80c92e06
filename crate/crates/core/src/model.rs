//! Economy and pricing-instance primitives.

use serde::{Deserialize, Serialize};

use crate::dist::TypeDistribution;
use crate::settings::Settings;

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

/// Consumer value `f(q; phi)` for a product certified at quality `q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ConsumerValue {
    /// `scale * phi * q`
    Linear {
        #[serde(default = "one")]
        scale: f64,
    },
    /// `scale * q`, identical for every consumer.
    Flat {
        #[serde(default = "one")]
        scale: f64,
    },
    /// `scale * phi * (q - q^2 / 2)`, increasing on `[0, 1]`.
    Concave {
        #[serde(default = "one")]
        scale: f64,
    },
}

impl ConsumerValue {
    pub fn eval(&self, q: f64, phi: f64) -> f64 {
        match self {
            ConsumerValue::Linear { scale } => scale * phi * q,
            ConsumerValue::Flat { scale } => scale * q,
            ConsumerValue::Concave { scale } => scale * phi * (q - 0.5 * q * q),
        }
    }
}

/// Producer cost `g(q; psi)` of producing at quality `q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ProducerCost {
    Zero,
    /// `scale * q^2 / (2 psi)`
    Quadratic {
        #[serde(default = "one")]
        scale: f64,
    },
    /// `max(0, slope * (q - psi))`
    Kink {
        #[serde(default = "two")]
        slope: f64,
    },
}

impl ProducerCost {
    pub fn eval(&self, q: f64, psi: f64) -> f64 {
        match self {
            ProducerCost::Zero => 0.0,
            ProducerCost::Quadratic { scale } => scale * q * q / (2.0 * psi),
            ProducerCost::Kink { slope } => (slope * (q - psi)).max(0.0),
        }
    }
}

/// The two-sided certification game: consumers `phi ~ F`, producers
/// `psi ~ G`, verification cost `c` per non-trivial certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationEconomy {
    pub consumer_value: ConsumerValue,
    pub producer_cost: ProducerCost,
    pub consumers: TypeDistribution,
    pub producers: TypeDistribution,
    pub c: f64,
    pub q_max: f64,
    /// Bound on `df/dq` at `q = 0` across consumers.
    pub lambda: f64,
}

impl CertificationEconomy {
    pub fn f(&self, q: f64, phi: f64) -> f64 {
        self.consumer_value.eval(q, phi)
    }

    pub fn g(&self, q: f64, psi: f64) -> f64 {
        self.producer_cost.eval(q, psi)
    }

    /// Consumer at the same quantile as producer `psi`.
    pub fn matched_consumer_unchecked(&self, psi: f64) -> f64 {
        self.consumers.quantile(self.producers.cdf(psi))
    }

    /// Joint surplus of producer `psi` trading with its matched consumer.
    pub fn gains_from_trade(&self, q: f64, psi: f64) -> f64 {
        self.f(q, self.matched_consumer_unchecked(psi)) - self.g(q, psi)
    }
}

/// Buyer valuation `v(q; theta)` of the single-buyer pricing problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Valuation {
    /// `(intercept + slope * theta) * q`
    Linear {
        #[serde(default)]
        intercept: f64,
        #[serde(default = "one")]
        slope: f64,
    },
    /// `min(q, 2 theta - q)`: peaks at `q = theta` with value `theta`.
    PiecewiseGap,
    /// `theta * q - curvature * q^2 / 2`
    Quadratic { curvature: f64 },
    /// `f(q; phi(psi)) - g(q; psi)` for an economy.
    Reduced { economy: Box<CertificationEconomy> },
}

impl Valuation {
    pub fn linear() -> Self {
        Valuation::Linear {
            intercept: 0.0,
            slope: 1.0,
        }
    }

    pub fn eval(&self, q: f64, theta: f64) -> f64 {
        match self {
            Valuation::Linear { intercept, slope } => (intercept + slope * theta) * q,
            Valuation::PiecewiseGap => q.min(2.0 * theta - q),
            Valuation::Quadratic { curvature } => theta * q - 0.5 * curvature * q * q,
            Valuation::Reduced { economy } => economy.gains_from_trade(q, theta),
        }
    }
}

/// The reduced problem: one seller posts a menu of (quantity, price) pairs
/// to a buyer of privately known type `theta ~ dist`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricingInstance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub valuation: Valuation,
    pub dist: TypeDistribution,
    /// Cost per non-trivial sale.
    pub c: f64,
    pub q_max: f64,
    /// Slope bound on `v` at `q = 0`.
    pub lambda: f64,
    #[serde(skip)]
    pub settings: Settings,
}

impl PricingInstance {
    #[inline]
    pub fn value(&self, q: f64, theta: f64) -> f64 {
        self.valuation.eval(q, theta)
    }

    pub fn lo(&self) -> f64 {
        self.dist.support_lo()
    }

    pub fn hi(&self) -> f64 {
        self.dist.support_hi()
    }

    pub fn with_settings(mut self, settings: Settings) -> Self {
        self.settings = settings;
        self
    }

    pub fn with_cost(mut self, c: f64) -> Self {
        self.c = c;
        self
    }
}
