//! Serializable instance descriptions and the named instance zoo.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dist::TypeDistribution;
use crate::error::{Error, Result};
use crate::menu::Menu;
use crate::model::{CertificationEconomy, ConsumerValue, PricingInstance, ProducerCost, Valuation};
use crate::reduction::reduce_to_pricing;
use crate::validate::{validate_economy, validate_single_crossing};

pub type Params = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricingSpec {
    pub name: String,
    #[serde(default)]
    pub params: Params,
    pub valuation: Valuation,
    /// Buyer type distribution.
    pub distribution: TypeDistribution,
    pub q_max: f64,
    pub c: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EconomySpec {
    pub name: String,
    #[serde(default)]
    pub params: Params,
    pub consumer_value: ConsumerValue,
    pub producer_cost: ProducerCost,
    /// Producer type distribution `G`.
    pub distribution: TypeDistribution,
    /// Consumer type distribution `F`.
    pub consumer_distribution: TypeDistribution,
    pub q_max: f64,
    pub c: f64,
    pub lambda: f64,
}

/// Tagged description of either a pricing instance or an economy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InstanceSpec {
    Pricing(PricingSpec),
    Economy(EconomySpec),
}

impl InstanceSpec {
    pub fn name(&self) -> &str {
        match self {
            InstanceSpec::Pricing(p) => &p.name,
            InstanceSpec::Economy(e) => &e.name,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: InstanceSpec =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance specs always serialize")
    }

    pub fn economy(&self) -> Option<CertificationEconomy> {
        match self {
            InstanceSpec::Pricing(_) => None,
            InstanceSpec::Economy(e) => Some(CertificationEconomy {
                consumer_value: e.consumer_value.clone(),
                producer_cost: e.producer_cost.clone(),
                consumers: e.consumer_distribution.clone(),
                producers: e.distribution.clone(),
                c: e.c,
                q_max: e.q_max,
                lambda: e.lambda,
            }),
        }
    }

    /// The pricing problem this spec describes; economies are reduced.
    pub fn pricing_instance(&self) -> Result<PricingInstance> {
        let mut inst = match self {
            InstanceSpec::Pricing(p) => {
                p.distribution.check()?;
                let inst = PricingInstance {
                    name: None,
                    valuation: p.valuation.clone(),
                    dist: p.distribution.clone(),
                    c: p.c,
                    q_max: p.q_max,
                    lambda: p.lambda,
                    settings: Default::default(),
                };
                validate_single_crossing(&inst, 50)?.into_result()?;
                inst
            }
            InstanceSpec::Economy(_) => {
                let econ = self.economy().expect("economy variant");
                econ.consumers.check()?;
                econ.producers.check()?;
                reduce_to_pricing(&econ)?
            }
        };
        inst.name = Some(self.name().to_string());
        Ok(inst)
    }

    /// Runs every validator that applies to this spec.
    pub fn validate(&self) -> Result<()> {
        if let Some(econ) = self.economy() {
            econ.consumers.check()?;
            econ.producers.check()?;
            validate_economy(&econ, 50)?.into_result()?;
        }
        self.pricing_instance().map(|_| ())
    }
}

pub const ZOO_NAMES: &[&str] = &[
    "linear_equal_revenue",
    "piecewise_gap",
    "linear_uniform",
    "quadratic_screening",
    "gap_economy",
    "custom",
];

struct ParamReader<'a> {
    name: &'a str,
    params: &'a Params,
    allowed: &'a [&'a str],
}

impl ParamReader<'_> {
    fn check_keys(&self) -> Result<()> {
        for key in self.params.keys() {
            if !self.allowed.contains(&key.as_str()) {
                return Err(Error::Parse(format!(
                    "unknown parameter `{key}` for `{}` (expected one of {:?})",
                    self.name, self.allowed
                )));
            }
        }
        Ok(())
    }

    fn get(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }

    fn positive(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.get(key, default);
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Domain(format!("`{key}` must be positive, got {v}")));
        }
        Ok(v)
    }

    fn horizon(&self, default: f64) -> Result<f64> {
        let h = self.get("H", default);
        if !(h >= 1.0 && h.is_finite()) {
            return Err(Error::Domain(format!("H must be >= 1, got {h}")));
        }
        Ok(h)
    }

    fn cost(&self) -> Result<f64> {
        let c = self.get("c", 0.0);
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::Domain(format!("c must be >= 0, got {c}")));
        }
        Ok(c)
    }
}

/// Builds and validates a named instance.
///
/// * `linear_equal_revenue(H)`: `v = theta q`, equal-revenue types on `[1, H]`.
/// * `piecewise_gap(H)`: `v = min(q, 2 theta - q)`, equal-revenue types, `q_max = 2H`.
/// * `linear_uniform`: `v = theta q`, uniform types on `[0, 1]`.
/// * `quadratic_screening(a, b)`: economy with `f = phi q`, `g = q^2 / (2 psi)`,
///   both sides uniform on `[a, b]`.
/// * `gap_economy(H)`: economy with `f = q`, `g = max(0, 2 (q - psi))`, both
///   sides equal-revenue on `[1, H]`; it reduces to `piecewise_gap(H)`.
/// * `custom(lo, hi, curvature, q_max)`: `v = theta q - curvature q^2 / 2`
///   with uniform types on `[lo, hi]`.
///
/// Every entry also accepts a verification cost `c`.
pub fn make_named_instance(name: &str, params: &Params) -> Result<InstanceSpec> {
    let allowed: &[&str] = match name {
        "linear_equal_revenue" | "piecewise_gap" | "gap_economy" => &["H", "c"],
        "linear_uniform" => &["c"],
        "quadratic_screening" => &["a", "b", "c"],
        "custom" => &["lo", "hi", "curvature", "q_max", "c"],
        other => return Err(Error::UnknownInstance(other.to_string())),
    };
    let r = ParamReader {
        name,
        params,
        allowed,
    };
    r.check_keys()?;
    let c = r.cost()?;
    let pricing = |valuation, distribution, q_max, lambda| {
        InstanceSpec::Pricing(PricingSpec {
            name: name.to_string(),
            params: params.clone(),
            valuation,
            distribution,
            q_max,
            c,
            lambda,
        })
    };
    let spec = match name {
        "linear_equal_revenue" => {
            let h = r.horizon(10.0)?;
            pricing(Valuation::linear(), TypeDistribution::equal_revenue(h)?, 1.0, h)
        }
        "piecewise_gap" => {
            let h = r.horizon(4f64.exp())?;
            pricing(
                Valuation::PiecewiseGap,
                TypeDistribution::equal_revenue(h)?,
                2.0 * h,
                1.0,
            )
        }
        "linear_uniform" => pricing(
            Valuation::linear(),
            TypeDistribution::uniform(0.0, 1.0)?,
            1.0,
            1.0,
        ),
        "custom" => {
            let lo = r.get("lo", 0.0);
            let hi = r.positive("hi", 1.0)?;
            let curvature = r.positive("curvature", 1.0)?;
            let q_max = r.positive("q_max", 1.0)?;
            if !(lo >= 0.0 && lo < hi) {
                return Err(Error::Domain(format!("custom needs 0 <= lo < hi, got [{lo}, {hi}]")));
            }
            pricing(
                Valuation::Quadratic { curvature },
                TypeDistribution::uniform(lo, hi)?,
                q_max,
                hi,
            )
        }
        "quadratic_screening" => {
            let a = r.positive("a", 0.25)?;
            let b = r.positive("b", 1.0)?;
            let d = TypeDistribution::uniform(a, b)?;
            InstanceSpec::Economy(EconomySpec {
                name: name.to_string(),
                params: params.clone(),
                consumer_value: ConsumerValue::Linear { scale: 1.0 },
                producer_cost: ProducerCost::Quadratic { scale: 1.0 },
                distribution: d.clone(),
                consumer_distribution: d,
                q_max: 1.0,
                c,
                lambda: b,
            })
        }
        "gap_economy" => {
            let h = r.horizon(4f64.exp())?;
            let d = TypeDistribution::equal_revenue(h)?;
            InstanceSpec::Economy(EconomySpec {
                name: name.to_string(),
                params: params.clone(),
                consumer_value: ConsumerValue::Flat { scale: 1.0 },
                producer_cost: ProducerCost::Kink { slope: 2.0 },
                distribution: d.clone(),
                consumer_distribution: d,
                q_max: 2.0 * h,
                c,
                lambda: 1.0,
            })
        }
        _ => unreachable!(),
    };
    spec.validate()?;
    Ok(spec)
}

/// Shorthand for zoo instances in code and tests.
pub fn zoo(name: &str, params: &[(&str, f64)]) -> Result<PricingInstance> {
    let params: Params = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    make_named_instance(name, &params)?.pricing_instance()
}

pub fn zoo_economy(name: &str, params: &[(&str, f64)]) -> Result<CertificationEconomy> {
    let params: Params = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    make_named_instance(name, &params)?
        .economy()
        .ok_or_else(|| Error::Precondition(format!("`{name}` is not an economy")))
}

/// The rich menu `{(q, q/2)}` for the gap instance with parameter `h`, on
/// geometric qualities `(1 + ratio)^i` in `[1, h]` (plus `h` itself).
pub fn gap_rich_menu(h: f64, ratio: f64) -> Menu {
    let mut pairs = Vec::new();
    let mut q: f64 = 1.0;
    while q < h {
        pairs.push((q, q / 2.0));
        q *= 1.0 + ratio;
    }
    pairs.push((h, h / 2.0));
    Menu::from_pairs(pairs).expect("finite pairs")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn piecewise_gap_example_values() {
        let inst = zoo("piecewise_gap", &[("H", 54.598)]).unwrap();
        assert!((inst.dist.survival(2.0) - 0.5).abs() < 1e-12);
        assert_eq!(inst.value(3.0, 2.0), 1.0);
        assert_eq!(inst.q_max, 2.0 * 54.598);
    }

    #[test]
    fn linear_uniform_example_value() {
        let inst = zoo("linear_uniform", &[]).unwrap();
        assert_eq!(inst.value(1.0, 0.5), 0.5);
    }

    #[test]
    fn equal_revenue_atom_mass() {
        let inst = zoo("linear_equal_revenue", &[("H", 10.0)]).unwrap();
        assert_eq!(inst.dist.cdf(10.0), 1.0);
        assert!((inst.dist.atom_at_hi() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_names_and_parameters() {
        assert!(matches!(zoo("nope", &[]), Err(Error::UnknownInstance(_))));
        assert!(matches!(zoo("piecewise_gap", &[("H", 0.5)]), Err(Error::Domain(_))));
        assert!(matches!(zoo("quadratic_screening", &[("a", -1.0)]), Err(Error::Domain(_))));
        assert!(matches!(zoo("linear_uniform", &[("H", 2.0)]), Err(Error::Parse(_))));
    }

    #[test]
    fn every_zoo_entry_validates_on_fifty_point_grid() {
        for name in ZOO_NAMES {
            let inst = zoo(name, &[]).unwrap();
            let report = validate_single_crossing(&inst, 50).unwrap();
            assert!(report.passed(), "{name}: {:?}", report.violations.first());
        }
    }

    #[test]
    fn json_round_trip() {
        for name in ZOO_NAMES {
            let spec = make_named_instance(name, &Params::new()).unwrap();
            let back = InstanceSpec::from_json(&spec.to_json()).unwrap();
            assert_eq!(spec, back);
        }
        let text = r#"{"kind":"pricing","name":"k","valuation":{"family":"linear"},
            "distribution":{"family":"piecewise_cdf","knots":[[0,0],[1,1]]},
            "q_max":1,"c":0,"lambda":1}"#;
        let spec = InstanceSpec::from_json(text).unwrap();
        assert_eq!(spec.pricing_instance().unwrap().value(1.0, 0.25), 0.25);
    }
}
