//! Assortative matching and the reduction of a certification economy to a
//! single-buyer pricing instance.

use crate::error::{Error, Result};
use crate::model::{CertificationEconomy, PricingInstance, Valuation};
use crate::validate::{validate_economy, validate_single_crossing};

/// Consumer type trading with producer `psi`: `F^-1(G(psi))`.
pub fn matched_consumer(econ: &CertificationEconomy, psi: f64) -> Result<f64> {
    let (lo, hi) = (econ.producers.support_lo(), econ.producers.support_hi());
    if !(psi >= lo && psi <= hi) {
        return Err(Error::Domain(format!(
            "producer type {psi} outside support [{lo}, {hi}]"
        )));
    }
    Ok(econ.matched_consumer_unchecked(psi))
}

/// The pricing instance whose buyer `psi ~ G` values quality `q` at
/// `f(q; phi(psi)) - g(q; psi)`. Both sides and the result are validated.
pub fn reduce_to_pricing(econ: &CertificationEconomy) -> Result<PricingInstance> {
    validate_economy(econ, 50)?.into_result()?;
    let inst = reduced_instance(econ);
    let report = validate_single_crossing(&inst, 50)?;
    if !report.passed() {
        return Err(Error::Internal(format!(
            "reduced valuation failed validation: {:?}",
            report.violations.first()
        )));
    }
    Ok(inst)
}

/// The reduced instance without validating either side.
pub(crate) fn reduced_instance(econ: &CertificationEconomy) -> PricingInstance {
    PricingInstance {
        name: None,
        valuation: Valuation::Reduced {
            economy: Box::new(econ.clone()),
        },
        dist: econ.producers.clone(),
        c: econ.c,
        q_max: econ.q_max,
        lambda: econ.lambda,
        settings: Default::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::TypeDistribution;
    use crate::model::{ConsumerValue, ProducerCost};
    use rand::{Rng, SeedableRng};

    fn econ(consumers: TypeDistribution, producers: TypeDistribution) -> CertificationEconomy {
        CertificationEconomy {
            consumer_value: ConsumerValue::Linear { scale: 1.0 },
            producer_cost: ProducerCost::Quadratic { scale: 1.0 },
            consumers,
            producers,
            c: 0.0,
            q_max: 1.0,
            lambda: 1.0,
        }
    }

    #[test]
    fn matching_examples() {
        let u01 = TypeDistribution::uniform(0.0, 1.0).unwrap();
        let e = econ(u01.clone(), u01.clone());
        assert!((matched_consumer(&e, 0.3).unwrap() - 0.3).abs() < 1e-15);
        let e = econ(u01.clone(), TypeDistribution::uniform(0.0, 2.0).unwrap());
        assert!((matched_consumer(&e, 1.0).unwrap() - 0.5).abs() < 1e-15);
        let e = econ(TypeDistribution::equal_revenue(4.0).unwrap(), u01);
        assert!((matched_consumer(&e, 0.5).unwrap() - 2.0).abs() < 1e-12);
        assert!(matches!(matched_consumer(&e, 1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn matching_is_monotone() {
        let e = econ(
            TypeDistribution::equal_revenue(7.0).unwrap(),
            TypeDistribution::uniform(0.2, 1.0).unwrap(),
        );
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=200 {
            let psi = 0.2 + 0.8 * i as f64 / 200.0;
            let phi = matched_consumer(&e, psi).unwrap();
            assert!(phi >= prev);
            prev = phi;
        }
    }

    #[test]
    fn quadratic_screening_substitution() {
        let u = TypeDistribution::uniform(0.25, 1.0).unwrap();
        let inst = reduce_to_pricing(&econ(u.clone(), u)).unwrap();
        assert_eq!(inst.value(0.0, 0.7), 0.0);
        assert!(inst.value(0.5, 0.5).abs() < 1e-15);
    }

    #[test]
    fn gap_footnote_economy_reduces_to_piecewise_gap() {
        let er = TypeDistribution::equal_revenue(8.0).unwrap();
        let e = CertificationEconomy {
            consumer_value: ConsumerValue::Flat { scale: 1.0 },
            producer_cost: ProducerCost::Kink { slope: 2.0 },
            consumers: er.clone(),
            producers: er,
            c: 0.0,
            q_max: 16.0,
            lambda: 1.0,
        };
        let inst = reduce_to_pricing(&e).unwrap();
        for (q, t) in [(0.5, 1.0), (3.0, 2.0), (5.0, 4.0), (15.0, 8.0)] {
            let expect = Valuation::PiecewiseGap.eval(q, t);
            assert!((inst.value(q, t) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn reduction_preserves_evaluation() {
        let e = econ(
            TypeDistribution::uniform(0.3, 1.0).unwrap(),
            TypeDistribution::uniform(0.5, 1.5).unwrap(),
        );
        let inst = reduce_to_pricing(&e).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let q: f64 = rng.gen_range(0.0..1.0);
            let psi: f64 = rng.gen_range(0.5..1.5);
            let phi = matched_consumer(&e, psi).unwrap();
            assert_eq!(inst.value(q, psi), e.f(q, phi) - e.g(q, psi));
        }
    }
}
