//! Seeded generators shared by the integration tests.
#![allow(dead_code)]

use certmenu_core::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

/// A zoo pricing instance with randomized parameters.
pub fn random_instance(rng: &mut ChaCha8Rng) -> PricingInstance {
    match rng.gen_range(0..5) {
        0 => zoo("linear_uniform", &[("c", rng.gen_range(0.0..0.2))]).unwrap(),
        1 => zoo("linear_equal_revenue", &[("H", rng.gen_range(1.5..10.0))]).unwrap(),
        2 => zoo("piecewise_gap", &[("H", rng.gen_range(2.0..8.0))]).unwrap(),
        3 => {
            let lo = rng.gen_range(0.0..1.0);
            zoo(
                "custom",
                &[
                    ("lo", lo),
                    ("hi", lo + rng.gen_range(0.3..1.5)),
                    ("curvature", rng.gen_range(0.2..2.0)),
                ],
            )
            .unwrap()
        }
        _ => {
            let a = rng.gen_range(0.1..0.5);
            zoo("quadratic_screening", &[("a", a), ("b", a + rng.gen_range(0.3..1.0))]).unwrap()
        }
    }
}

/// Largest value any type puts on any quality, scanned on a grid.
pub fn top_value(inst: &PricingInstance) -> f64 {
    (1..=64)
        .map(|i| inst.value(inst.q_max * i as f64 / 64.0, inst.hi()))
        .fold(0.0, f64::max)
}

/// Up to `n` items with random qualities in `(0, q_max]` and prices in
/// `[0, top]`, in arbitrary price order.
pub fn random_menu(rng: &mut ChaCha8Rng, inst: &PricingInstance, n: usize, top: f64) -> Menu {
    let pairs: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let q = inst.q_max * rng.gen_range(0.01..=1.0);
            (q, top * rng.gen_range(0.0..1.0))
        })
        .collect();
    Menu::from_pairs(pairs).unwrap()
}

/// A random menu with prices non-decreasing in quality.
pub fn random_monotone_menu(rng: &mut ChaCha8Rng, inst: &PricingInstance, n: usize, top: f64) -> Menu {
    let mut qs: Vec<f64> = (0..n).map(|_| inst.q_max * rng.gen_range(0.01..=1.0)).collect();
    let mut ps: Vec<f64> = (0..n).map(|_| top * rng.gen_range(0.0..1.0)).collect();
    qs.sort_by(f64::total_cmp);
    ps.sort_by(f64::total_cmp);
    Menu::from_pairs(qs.into_iter().zip(ps)).unwrap()
}

fn random_dist(rng: &mut ChaCha8Rng, min_lo: f64) -> TypeDistribution {
    if rng.gen_bool(0.6) {
        let lo = rng.gen_range(min_lo..0.6);
        TypeDistribution::uniform(lo, lo + rng.gen_range(0.4..1.5)).unwrap()
    } else {
        TypeDistribution::equal_revenue(rng.gen_range(1.5..8.0)).unwrap()
    }
}

/// A random economy that reduces to a valid pricing instance, with the
/// reduced instance.
pub fn random_economy(rng: &mut ChaCha8Rng) -> (CertificationEconomy, PricingInstance) {
    loop {
        let scale = rng.gen_range(0.5..1.5);
        let consumer_value = match rng.gen_range(0..3) {
            0 => ConsumerValue::Linear { scale },
            1 => ConsumerValue::Concave { scale },
            _ => ConsumerValue::Flat { scale },
        };
        let producer_cost = match rng.gen_range(0..3) {
            0 => ProducerCost::Zero,
            1 => ProducerCost::Quadratic {
                scale: rng.gen_range(0.2..2.0),
            },
            _ => ProducerCost::Kink {
                slope: rng.gen_range(1.5..3.0),
            },
        };
        let consumers = random_dist(rng, 0.0);
        let producers = random_dist(rng, 0.2);
        let lambda = match consumer_value {
            ConsumerValue::Flat { scale } => scale,
            _ => scale * consumers.support_hi(),
        };
        let econ = CertificationEconomy {
            consumer_value,
            producer_cost,
            consumers,
            producers,
            c: if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.0..0.1) },
            q_max: 1.0,
            lambda,
        };
        if let Ok(inst) = reduce_to_pricing(&econ) {
            return (econ, inst);
        }
    }
}
