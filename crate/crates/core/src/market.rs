//! The full certification game: producers pick certificates, consumers buy
//! at market-clearing prices, and the outcome is checked against the
//! Walrasian conditions.

use serde::{Deserialize, Serialize};

use crate::choice::{segment_outcome, Segment};
use crate::error::{Error, Result};
use crate::menu::Menu;
use crate::model::CertificationEconomy;
use crate::reduction::reduced_instance;

const EQUILIBRIUM_TOL: f64 = 1e-7;

/// Producer cutoffs: producers in `[theta_from, theta_to)` buy the segment's
/// certificate (`price` is the certification fee).
pub fn producer_choices(econ: &CertificationEconomy, menu: &Menu) -> Result<Vec<Segment>> {
    let inst = reduced_instance(econ);
    Ok(segment_outcome(&inst, menu)?.segments)
}

/// Consumer price per traded quality, anchored at 0 for quality 0 and
/// chained through the consumers matched to each producer cutoff.
pub fn clearing_prices(econ: &CertificationEconomy, segments: &[Segment]) -> Result<Vec<[f64; 2]>> {
    let mut prices = vec![[0.0, 0.0]];
    for s in segments.iter().filter(|s| s.quality > 0.0) {
        let [q_prev, p_prev] = *prices.last().expect("anchored");
        let boundary = boundary_consumer(econ, s.theta_from);
        let p = p_prev + econ.f(s.quality, boundary) - econ.f(q_prev, boundary);
        prices.push([s.quality, p]);
    }
    // every probed consumer must weakly prefer its assigned level
    let n = 64;
    for j in 0..n {
        let u = (j as f64 + 0.5) / n as f64;
        let phi = econ.consumers.quantile(u);
        let psi = econ.producers.quantile(u);
        let assigned = price_of(&prices, assigned_quality(segments, psi)).expect("traded");
        let own = econ.f(assigned[0], phi) - assigned[1];
        for alt in &prices {
            let other = econ.f(alt[0], phi) - alt[1];
            if other > own + EQUILIBRIUM_TOL * own.abs().max(1.0) {
                return Err(Error::Equilibrium(format!(
                    "consumer {phi} prefers quality {} at {} over assigned {}",
                    alt[0], alt[1], assigned[0]
                )));
            }
        }
    }
    Ok(prices)
}

/// Lowest consumer trading with producers from `psi` up. Uses the producer
/// mass strictly below `psi`, so a segment holding only an atom is matched
/// to the consumers of the same quantile range.
fn boundary_consumer(econ: &CertificationEconomy, psi: f64) -> f64 {
    econ.consumers.quantile(econ.producers.cdf_left(psi))
}

fn assigned_quality(segments: &[Segment], psi: f64) -> f64 {
    let i = segments.partition_point(|s| s.theta_from <= psi);
    segments[i.saturating_sub(1)].quality
}

fn price_of(prices: &[[f64; 2]], q: f64) -> Option<[f64; 2]> {
    if q == 0.0 {
        return Some([0.0, 0.0]);
    }
    prices.iter().find(|x| x[0] == q).copied()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameOutcome {
    pub producer_segments: Vec<Segment>,
    /// `[quality, price]` per traded level, starting at `[0, 0]`.
    pub consumer_prices: Vec<[f64; 2]>,
    pub certifier_revenue: f64,
    pub total_welfare: f64,
    pub producer_surplus: f64,
    pub consumer_surplus: f64,
}

/// Consumer quantile cutoffs matched to the producer segmentation:
/// consumers with quantile in `[cut[i], cut[i + 1])` buy level `i` of
/// `prices`. Demand alone cannot pin these down when consumers are
/// indifferent between levels, and quantiles can split a consumer atom.
fn consumer_cutoffs(econ: &CertificationEconomy, segments: &[Segment]) -> Vec<f64> {
    let mut cuts = vec![0.0];
    cuts.extend(
        segments
            .iter()
            .filter(|s| s.quality > 0.0)
            .map(|s| econ.producers.cdf_left(s.theta_from)),
    );
    cuts
}

/// Simulates the game under a menu: producer choices, clearing prices,
/// and the split of welfare among certifier, producers and consumers.
pub fn full_game_outcome(econ: &CertificationEconomy, menu: &Menu) -> Result<GameOutcome> {
    let inst = reduced_instance(econ);
    let settings = inst.settings;
    let segments = segment_outcome(&inst, menu)?.segments;
    let prices = clearing_prices(econ, &segments)?;
    let cuts = consumer_cutoffs(econ, &segments);
    let traded: Vec<&Segment> = segments.iter().filter(|s| s.quality > 0.0).collect();

    let mut revenue = 0.0;
    let mut consumer_value = 0.0;
    let mut consumer_surplus = 0.0;
    let levels = prices.len();
    for (i, &[q, p]) in prices.iter().enumerate() {
        if q == 0.0 {
            continue;
        }
        let from = cuts[i];
        let to = if i + 1 < levels { cuts[i + 1] } else { 1.0 };
        let mass = to - from;
        let fee = traded[i - 1].price;
        revenue += (fee - econ.c) * mass;
        let value = econ
            .consumers
            .integrate_quantiles(from, to, |phi| econ.f(q, phi), settings.quad)?;
        consumer_value += value;
        consumer_surplus += value - p * mass;
    }

    let mut producer_cost = 0.0;
    let mut producer_surplus = 0.0;
    let n = segments.len();
    for (k, s) in segments.iter().enumerate() {
        if s.quality == 0.0 {
            continue;
        }
        let p = price_of(&prices, s.quality).expect("traded")[1];
        let to = (k + 1 < n).then_some(s.theta_to);
        let cost = econ
            .producers
            .integrate_between(s.theta_from, to, |psi| econ.g(s.quality, psi), settings.quad)?;
        producer_cost += cost;
        producer_surplus += (p - s.price) * s.mass - cost;
    }
    let trading_mass: f64 = traded.iter().map(|s| s.mass).sum();
    Ok(GameOutcome {
        producer_segments: segments,
        consumer_prices: prices,
        certifier_revenue: revenue,
        total_welfare: consumer_value - producer_cost - econ.c * trading_mass,
        producer_surplus,
        consumer_surplus,
    })
}

/// Pass/fail per Walrasian condition with the worst observed gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalrasianReport {
    pub demand_satisfied: bool,
    pub measure_balanced: bool,
    pub producers_optimal: bool,
    pub worst_demand_gap: f64,
    pub worst_balance_gap: f64,
    pub worst_producer_gap: f64,
    /// First violation found, if any.
    pub violation: Option<String>,
}

impl WalrasianReport {
    pub fn passed(&self) -> bool {
        self.demand_satisfied && self.measure_balanced && self.producers_optimal
    }
}

/// Checks demand satisfaction and producer optimality at `n_probe`
/// quantile-stratified types, and equal consumer and producer mass per
/// traded level. Untraded menu levels are valued, for a deviating producer,
/// at the highest price its matched consumer would pay.
pub fn verify_walrasian(
    econ: &CertificationEconomy,
    menu: &Menu,
    outcome: &GameOutcome,
    n_probe: usize,
) -> Result<WalrasianReport> {
    let prices = &outcome.consumer_prices;
    let segments = &outcome.producer_segments;
    let mut report = WalrasianReport {
        demand_satisfied: true,
        measure_balanced: true,
        producers_optimal: true,
        worst_demand_gap: 0.0,
        worst_balance_gap: 0.0,
        worst_producer_gap: 0.0,
        violation: None,
    };
    let note = |report: &mut WalrasianReport, msg: String| {
        if report.violation.is_none() {
            report.violation = Some(msg);
        }
    };

    for j in 0..n_probe {
        let u = (j as f64 + 0.5) / n_probe as f64;
        let phi = econ.consumers.quantile(u);
        let psi = econ.producers.quantile(u);
        let seg = &segments[segments.partition_point(|s| s.theta_from <= psi).saturating_sub(1)];
        let Some([q, p]) = price_of(prices, seg.quality) else {
            report.demand_satisfied = false;
            note(&mut report, format!("no consumer price for traded quality {}", seg.quality));
            continue;
        };
        let own = econ.f(q, phi) - p;
        let best = prices
            .iter()
            .map(|&[qa, pa]| (econ.f(qa, phi) - pa, qa))
            .fold((f64::NEG_INFINITY, 0.0), |a, b| if b.0 > a.0 { b } else { a });
        let gap = best.0 - own;
        report.worst_demand_gap = report.worst_demand_gap.max(gap);
        if gap > EQUILIBRIUM_TOL * own.abs().max(1.0) {
            report.demand_satisfied = false;
            note(&mut report, format!("consumer {phi} prefers quality {} to {q}", best.1));
        }

        // producer deviations
        let matched = econ.matched_consumer_unchecked(psi);
        let surplus = econ.f(q, matched) - p;
        let consumer_price = |quality: f64| match price_of(prices, quality) {
            Some([_, p]) => p,
            None => econ.f(quality, matched) - surplus,
        };
        let payoff = |quality: f64, fee: f64| consumer_price(quality) - econ.g(quality, psi) - fee;
        let own = payoff(seg.quality, seg.price);
        for item in menu.items() {
            let gap = payoff(item.quality, item.price) - own;
            report.worst_producer_gap = report.worst_producer_gap.max(gap);
            if gap > EQUILIBRIUM_TOL * own.abs().max(1.0) {
                report.producers_optimal = false;
                note(
                    &mut report,
                    format!("producer {psi} gains {gap} by certifying at {}", item.quality),
                );
            }
        }
    }

    let cuts = consumer_cutoffs(econ, segments);
    let levels = prices.len();
    for (i, &[q, _]) in prices.iter().enumerate() {
        let consumer_mass = if i + 1 < levels { cuts[i + 1] } else { 1.0 } - cuts[i];
        let producer_mass: f64 = segments.iter().filter(|s| s.quality == q).map(|s| s.mass).sum();
        let gap = (consumer_mass - producer_mass).abs();
        report.worst_balance_gap = report.worst_balance_gap.max(gap);
        if gap > EQUILIBRIUM_TOL {
            report.measure_balanced = false;
            note(
                &mut report,
                format!("quality {q}: consumer mass {consumer_mass} vs producer mass {producer_mass}"),
            );
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::segment_outcome;
    use crate::instance::{zoo, zoo_economy};
    use crate::reduction::reduce_to_pricing;

    fn menu(pairs: &[(f64, f64)]) -> Menu {
        Menu::from_pairs(pairs.iter().copied()).unwrap()
    }

    #[test]
    fn quadratic_screening_cutoff() {
        let econ = zoo_economy("quadratic_screening", &[]).unwrap();
        let segs = producer_choices(&econ, &menu(&[(0.5, 0.05)])).unwrap();
        assert_eq!(segs.len(), 2);
        // 0.5 psi - 0.125 / psi = 0.05
        let cut = 0.05 + (0.05f64 * 0.05 + 0.25).sqrt();
        assert!((segs[1].theta_from - cut).abs() < 1e-8);
        assert_eq!(segs[1].quality, 0.5);
    }

    #[test]
    fn two_level_chain_prices_boundary_consumer() {
        let econ = zoo_economy("quadratic_screening", &[]).unwrap();
        let segs = producer_choices(&econ, &menu(&[(0.5, 0.05)])).unwrap();
        let prices = clearing_prices(&econ, &segs).unwrap();
        let phi = econ.matched_consumer_unchecked(segs[1].theta_from);
        assert_eq!(prices.len(), 2);
        assert!((prices[1][1] - econ.f(0.5, phi)).abs() < 1e-15);
    }

    #[test]
    fn three_levels_have_rising_prices() {
        let econ = zoo_economy("quadratic_screening", &[]).unwrap();
        let m = menu(&[(0.2, 0.01), (0.5, 0.06), (0.9, 0.15)]);
        let out = full_game_outcome(&econ, &m).unwrap();
        assert_eq!(out.consumer_prices.len(), 4);
        assert!(out.consumer_prices.windows(2).all(|w| w[1][1] > w[0][1]));
        assert!(verify_walrasian(&econ, &m, &out, 200).unwrap().passed());
    }

    #[test]
    fn matches_reduced_revenue_and_welfare() {
        let econ = zoo_economy("quadratic_screening", &[("c", 0.01)]).unwrap();
        let m = menu(&[(0.5, 0.05)]);
        let out = full_game_outcome(&econ, &m).unwrap();
        let reduced = segment_outcome(&reduce_to_pricing(&econ).unwrap(), &m).unwrap();
        assert!((out.certifier_revenue - reduced.revenue).abs() < 1e-6);
        assert!((out.total_welfare - reduced.welfare).abs() < 1e-6);
        let cut = 0.05 + (0.05f64 * 0.05 + 0.25).sqrt();
        let mass = (1.0 - cut) / 0.75;
        assert!((out.certifier_revenue - 0.04 * mass).abs() < 1e-8);
        let sum = out.certifier_revenue + out.producer_surplus + out.consumer_surplus;
        assert!((sum - out.total_welfare).abs() < 1e-8);
    }

    #[test]
    fn trivial_menu_is_all_zero() {
        let econ = zoo_economy("quadratic_screening", &[]).unwrap();
        let out = full_game_outcome(&econ, &Menu::trivial()).unwrap();
        assert_eq!(out.producer_segments.len(), 1);
        assert_eq!(out.producer_segments[0].quality, 0.0);
        assert_eq!(out.certifier_revenue, 0.0);
        assert_eq!(out.total_welfare, 0.0);
        assert!(verify_walrasian(&econ, &Menu::trivial(), &out, 50).unwrap().passed());
    }

    #[test]
    fn perturbed_price_breaks_demand() {
        let econ = zoo_economy("quadratic_screening", &[]).unwrap();
        let m = menu(&[(0.3, 0.02), (0.8, 0.15)]);
        let mut out = full_game_outcome(&econ, &m).unwrap();
        assert!(verify_walrasian(&econ, &m, &out, 200).unwrap().passed());
        out.consumer_prices[1][1] += 0.05;
        let report = verify_walrasian(&econ, &m, &out, 200).unwrap();
        assert!(!report.demand_satisfied);
        assert!(report.violation.is_some());
    }

    #[test]
    fn gap_economy_rich_menu_revenue() {
        let h = 8.0;
        let econ = zoo_economy("gap_economy", &[("H", h)]).unwrap();
        let m = crate::instance::gap_rich_menu(h, 0.002);
        let out = full_game_outcome(&econ, &m).unwrap();
        // E[theta] / 2 under the equal-revenue law
        let expect = (1.0 + h.ln()) / 2.0;
        assert!((out.certifier_revenue - expect).abs() < 0.01);
        let gap = zoo("piecewise_gap", &[("H", h)]).unwrap();
        let reduced = segment_outcome(&gap, &m).unwrap();
        assert!((out.certifier_revenue - reduced.revenue).abs() < 1e-6);
        // producers choose certificates close to their own type
        for s in out.producer_segments.iter().filter(|s| s.mass > 0.01) {
            assert!(s.quality <= s.theta_to + 0.02 && s.quality >= s.theta_from - 0.02);
        }
    }
}
