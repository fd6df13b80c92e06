//! Buyer best responses, cutoff segmentation of the type space and exact
//! revenue/welfare evaluation of a menu.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::Deserializer;
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::menu::{Menu, MenuItem};
use crate::model::PricingInstance;
use crate::numeric::bisect_threshold;

#[inline]
pub fn utility(inst: &PricingInstance, item: MenuItem, theta: f64) -> f64 {
    inst.value(item.quality, theta) - item.price
}

#[inline]
fn tie_slack(tie: f64, a: f64, b: f64) -> f64 {
    tie * a.abs().max(b.abs()).max(1.0)
}

/// Index of the utility-maximizing item; ties go to the higher quality.
pub fn best_response(inst: &PricingInstance, menu: &Menu, theta: f64) -> usize {
    let tie = inst.settings.tie;
    let mut best = 0;
    let mut best_u = 0.0;
    for (i, item) in menu.items().iter().enumerate().skip(1) {
        let u = utility(inst, *item, theta);
        if u >= best_u - tie_slack(tie, u, best_u) {
            best = i;
            best_u = best_u.max(u);
        }
    }
    best
}

/// Smallest type in `[from, to]` that weakly prefers `upper` to `lower`.
pub(crate) fn switch_point(
    inst: &PricingInstance,
    lower: MenuItem,
    upper: MenuItem,
    from: f64,
    to: f64,
) -> Result<Option<f64>> {
    let tie = inst.settings.tie;
    let dp = upper.price - lower.price;
    bisect_threshold(
        |t| {
            let dv = inst.value(upper.quality, t) - inst.value(lower.quality, t);
            dv - dp >= -tie_slack(tie, dv, dp)
        },
        from,
        to,
        inst.settings.root,
    )
}

/// The type indifferent between `a` and `b` (`a.quality < b.quality`), if
/// the preference actually flips inside the support.
pub fn indifference_type(inst: &PricingInstance, a: MenuItem, b: MenuItem) -> Result<Option<f64>> {
    if !(a.quality < b.quality) {
        return Err(Error::Precondition(format!(
            "indifference_type needs a.quality < b.quality, got {} and {}",
            a.quality, b.quality
        )));
    }
    let (lo, hi) = (inst.lo(), inst.hi());
    match switch_point(inst, a, b, lo, hi)? {
        Some(t) if t > lo => Ok(Some(t)),
        _ => Ok(None),
    }
}

/// Infimum of the types willing to buy `item` rather than nothing.
pub fn lowest_buyer(inst: &PricingInstance, item: MenuItem) -> Result<Option<f64>> {
    if !(item.quality > 0.0) {
        return Err(Error::Precondition("lowest_buyer needs a non-trivial item".into()));
    }
    switch_point(inst, MenuItem::TRIVIAL, item, inst.lo(), inst.hi())
}

/// Types in `[theta_from, theta_to)` buy `item_index` (the last segment
/// also holds the atom at the top of the support).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub theta_from: f64,
    pub theta_to: f64,
    pub item_index: usize,
    pub quality: f64,
    pub price: f64,
    pub mass: f64,
}

/// Serialized as a `[theta_from, theta_to, quality, price, mass]` row; the
/// item index is implied by the quality and is not part of the row.
impl Serialize for Segment {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.theta_from, self.theta_to, self.quality, self.price, self.mass].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Segment {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [theta_from, theta_to, quality, price, mass] = <[f64; 5]>::deserialize(d)?;
        Ok(Segment {
            theta_from,
            theta_to,
            item_index: 0,
            quality,
            price,
            mass,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketOutcome {
    pub segments: Vec<Segment>,
    pub revenue: f64,
    pub welfare: f64,
    pub buyer_surplus: f64,
}

impl MarketOutcome {
    /// Segment holding type `theta`.
    pub fn segment_of(&self, theta: f64) -> &Segment {
        let i = self.segments.partition_point(|s| s.theta_from <= theta);
        &self.segments[i.saturating_sub(1)]
    }

    /// Menu indices that are bought by a positive mass of types.
    pub fn purchased_items(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.segments.iter().map(|s| s.item_index).collect();
        v.dedup();
        v
    }

    /// Mass of types buying a non-trivial item.
    pub fn trading_mass(&self) -> f64 {
        self.segments
            .iter()
            .filter(|s| s.quality > 0.0)
            .map(|s| s.mass)
            .sum()
    }
}

/// Cutoff walk over the menu: returns raw `(from, to, item)` triples with
/// `to = None` for the last one.
fn cutoff_walk(inst: &PricingInstance, menu: &Menu) -> Result<Vec<(f64, Option<f64>, usize)>> {
    let items = menu.items();
    let (lo, hi) = (inst.lo(), inst.hi());
    let root = inst.settings.root;
    let mut out = Vec::new();
    let mut cur = best_response(inst, menu, lo);
    let mut from = lo;
    loop {
        let mut next: Option<(f64, usize)> = None;
        for (j, &cand) in items.iter().enumerate().skip(cur + 1) {
            let upper_limit = match next {
                Some((t, _)) => {
                    // skip candidates that cannot switch before the current best
                    let probe = switch_point(inst, items[cur], cand, t, t)?;
                    if probe.is_none() {
                        continue;
                    }
                    t
                }
                None => hi,
            };
            if let Some(t) = switch_point(inst, items[cur], cand, from, upper_limit)? {
                next = match next {
                    Some((tb, _)) if t >= tb - root => Some((tb, j)),
                    _ => Some((t, j)),
                };
            }
        }
        match next {
            Some((t, j)) => {
                out.push((from, Some(t), cur));
                from = t;
                cur = j;
            }
            None => {
                out.push((from, None, cur));
                return Ok(out);
            }
        }
    }
}

/// Evaluates a menu exactly: cutoff partition, revenue net of the per-sale
/// cost, welfare and buyer surplus. The partition is cross-checked against
/// direct best responses at seeded random probe types.
pub fn segment_outcome(inst: &PricingInstance, menu: &Menu) -> Result<MarketOutcome> {
    let dist = &inst.dist;
    let settings = inst.settings;
    let atom = dist.atom_at_hi();
    let items = menu.items();
    let mut segments = Vec::new();
    for (from, to, idx) in cutoff_walk(inst, menu)? {
        let mass = match to {
            Some(t) => dist.survival(from) - dist.survival(t),
            None => dist.survival(from),
        };
        let width = to.unwrap_or(inst.hi()) - from;
        let holds_atom = to.is_none() && atom > 0.0;
        if mass <= 0.0 || (width <= 2.0 * settings.root && !holds_atom) {
            continue;
        }
        let item = items[idx];
        segments.push(Segment {
            theta_from: from,
            theta_to: to.unwrap_or(inst.hi()),
            item_index: idx,
            quality: item.quality,
            price: item.price,
            mass,
        });
    }

    let mut revenue = 0.0;
    let mut welfare = 0.0;
    let n = segments.len();
    for (k, s) in segments.iter().enumerate() {
        if s.quality == 0.0 {
            continue;
        }
        revenue += (s.price - inst.c) * s.mass;
        let to = if k + 1 == n { None } else { Some(s.theta_to) };
        welfare += dist.integrate_between(
            s.theta_from,
            to,
            |t| inst.value(s.quality, t) - inst.c,
            settings.quad,
        )?;
    }
    let outcome = MarketOutcome {
        segments,
        revenue,
        welfare,
        buyer_surplus: welfare - revenue,
    };
    verify_probes(inst, menu, &outcome)?;
    Ok(outcome)
}

fn verify_probes(inst: &PricingInstance, menu: &Menu, outcome: &MarketOutcome) -> Result<()> {
    let settings = inst.settings;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.probe_seed);
    let items = menu.items();
    for _ in 0..settings.probes {
        let theta = inst.dist.quantile(rng.gen_range(0.0..1.0));
        let seg = outcome.segment_of(theta);
        let assigned = utility(inst, items[seg.item_index], theta);
        let best = utility(inst, items[best_response(inst, menu, theta)], theta);
        let slack = 1e-7 * best.abs().max(1.0) + inst.lambda.max(1.0) * 1e3 * settings.root;
        if assigned < best - slack {
            return Err(Error::Internal(format!(
                "segment map disagrees with best response at theta={theta}: {assigned} < {best}"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::zoo;

    fn menu(pairs: &[(f64, f64)]) -> Menu {
        Menu::from_pairs(pairs.iter().copied()).unwrap()
    }

    #[test]
    fn best_response_examples() {
        let gap = zoo("piecewise_gap", &[]).unwrap();
        let m = menu(&[(1.0, 0.5), (2.0, 1.0)]);
        let i = best_response(&gap, &m, 2.0);
        assert_eq!(m.items()[i], MenuItem::new(2.0, 1.0));
        assert!((utility(&gap, m.items()[i], 2.0) - 1.0).abs() < 1e-15);

        let lin = zoo("linear_uniform", &[]).unwrap();
        assert_eq!(best_response(&lin, &Menu::trivial(), 0.7), 0);
        assert_eq!(best_response(&lin, &menu(&[(1.0, 0.5)]), 0.4), 0);
    }

    #[test]
    fn ties_go_to_higher_quality() {
        let lin = zoo("linear_uniform", &[]).unwrap();
        assert_eq!(best_response(&lin, &menu(&[(1.0, 0.5)]), 0.5), 1);
    }

    #[test]
    fn indifference_examples() {
        let lin = zoo("linear_uniform", &[]).unwrap();
        let t = indifference_type(&lin, MenuItem::new(0.5, 0.2), MenuItem::new(1.0, 0.6)).unwrap();
        assert!((t.unwrap() - 0.8).abs() < 1e-9);
        let none = indifference_type(&lin, MenuItem::TRIVIAL, MenuItem::new(1.0, 2.0)).unwrap();
        assert_eq!(none, None);

        // min(3, 2t-3) - min(1, 2t-1) = 1 solves at t = 2.5, where both
        // items leave utility 0.5
        let gap = zoo("piecewise_gap", &[]).unwrap();
        let (a, b) = (MenuItem::new(1.0, 0.5), MenuItem::new(3.0, 1.5));
        let t = indifference_type(&gap, a, b).unwrap().unwrap();
        assert!((t - 2.5).abs() < 1e-9);
        assert!((utility(&gap, a, t) - utility(&gap, b, t)).abs() < 1e-8);
    }

    #[test]
    fn lowest_buyer_examples() {
        let lin = zoo("linear_uniform", &[]).unwrap();
        let t = lowest_buyer(&lin, MenuItem::new(1.0, 0.5)).unwrap().unwrap();
        assert!((t - 0.5).abs() < 1e-9);
        assert_eq!(lowest_buyer(&lin, MenuItem::new(1.0, 2.0)).unwrap(), None);
        let gap = zoo("piecewise_gap", &[]).unwrap();
        assert_eq!(lowest_buyer(&gap, MenuItem::new(1.0, 0.5)).unwrap(), Some(1.0));
    }

    #[test]
    fn linear_uniform_single_item_outcome() {
        let lin = zoo("linear_uniform", &[]).unwrap();
        let out = segment_outcome(&lin, &menu(&[(1.0, 0.5)])).unwrap();
        assert!((out.revenue - 0.25).abs() < 1e-9);
        assert!((out.buyer_surplus - 0.125).abs() < 1e-8);
        assert!((out.welfare - 0.375).abs() < 1e-8);
        assert_eq!(out.segments.len(), 2);
    }

    #[test]
    fn equal_revenue_top_price_collects_the_atom() {
        let h = 10.0;
        let er = zoo("linear_equal_revenue", &[("H", h)]).unwrap();
        let out = segment_outcome(&er, &menu(&[(1.0, h)])).unwrap();
        assert!((out.revenue - 1.0).abs() < 1e-9);
    }

    #[test]
    fn trivial_menu_has_no_trade() {
        let gap = zoo("piecewise_gap", &[]).unwrap();
        let out = segment_outcome(&gap, &Menu::trivial()).unwrap();
        assert_eq!(out.revenue, 0.0);
        assert_eq!(out.welfare, 0.0);
        assert_eq!(out.segments.len(), 1);
        assert_eq!(out.segments[0].mass, 1.0);
    }

    #[test]
    fn never_bought_item_changes_nothing() {
        let lin = zoo("linear_uniform", &[]).unwrap();
        let base = segment_outcome(&lin, &menu(&[(0.5, 0.1), (1.0, 0.4)])).unwrap();
        let padded = segment_outcome(&lin, &menu(&[(0.5, 0.1), (0.7, 0.9), (1.0, 0.4)])).unwrap();
        assert!((base.revenue - padded.revenue).abs() < 1e-12);
        assert!((base.welfare - padded.welfare).abs() < 1e-12);
    }

    #[test]
    fn cost_is_charged_on_nontrivial_sales() {
        let lin = zoo("linear_uniform", &[("c", 0.1)]).unwrap();
        let out = segment_outcome(&lin, &menu(&[(1.0, 0.5)])).unwrap();
        assert!((out.revenue - 0.2).abs() < 1e-9);
        // welfare = int_{0.5}^{1} (t - 0.1) dt
        assert!((out.welfare - 0.325).abs() < 1e-8);
    }

    #[test]
    fn segments_serialize_as_rows() {
        let lin = zoo("linear_uniform", &[]).unwrap();
        let out = segment_outcome(&lin, &menu(&[(1.0, 0.5)])).unwrap();
        let json = serde_json::to_value(&out).unwrap();
        assert_eq!(json["segments"][1].as_array().unwrap().len(), 5);
        let back: MarketOutcome = serde_json::from_value(json).unwrap();
        assert_eq!(back.revenue, out.revenue);
    }
}
