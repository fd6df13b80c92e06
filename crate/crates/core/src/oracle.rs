//! Exhaustive ground truth on small discretized instances.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::menu::{Menu, MenuItem};
use crate::model::PricingInstance;

/// Default cap on the number of candidate menus `brute_force_optimal` will
/// enumerate.
pub const DEFAULT_ENUMERATION_BUDGET: u128 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Revenue,
    Welfare,
}

impl std::str::FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "revenue" => Ok(Objective::Revenue),
            "welfare" => Ok(Objective::Welfare),
            other => Err(Error::Parse(format!("unknown objective `{other}`"))),
        }
    }
}

/// Finitely many weighted types plus a finite grid of candidate qualities
/// and prices, with values tabulated per `(quality, type)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteInstance {
    /// `(theta, mass)` in increasing `theta`.
    pub types: Vec<(f64, f64)>,
    /// Non-trivial candidate qualities, strictly increasing.
    pub qualities: Vec<f64>,
    pub prices: Vec<f64>,
    /// `v_table[i][j] = v(qualities[i]; types[j].0)`.
    pub v_table: Vec<Vec<f64>>,
    pub c: f64,
    pub tie: f64,
}

/// `n` quantile-stratified atoms `quantile((j - 0.5) / n)` of mass `1/n`.
/// The grid is left empty; attach one with [`DiscreteInstance::with_grid`].
pub fn discretize_types(inst: &PricingInstance, n: usize) -> Result<DiscreteInstance> {
    if n == 0 {
        return Err(Error::Precondition("need at least one type atom".into()));
    }
    let mass = 1.0 / n as f64;
    let types = (0..n)
        .map(|j| (inst.dist.quantile((j as f64 + 0.5) / n as f64), mass))
        .collect();
    Ok(DiscreteInstance {
        types,
        qualities: Vec::new(),
        prices: Vec::new(),
        v_table: Vec::new(),
        c: inst.c,
        tie: inst.settings.tie,
    })
}

impl DiscreteInstance {
    /// Attaches candidate qualities (zero and duplicates dropped) and prices,
    /// tabulating values from `inst`.
    pub fn with_grid(mut self, inst: &PricingInstance, qualities: &[f64], prices: &[f64]) -> Self {
        let mut qs: Vec<f64> = qualities.iter().copied().filter(|q| *q > 0.0).collect();
        qs.sort_by(f64::total_cmp);
        qs.dedup();
        let mut ps = prices.to_vec();
        ps.sort_by(f64::total_cmp);
        ps.dedup();
        self.v_table = qs
            .iter()
            .map(|&q| self.types.iter().map(|&(t, _)| inst.value(q, t)).collect())
            .collect();
        self.qualities = qs;
        self.prices = ps;
        self
    }

    pub fn n_types(&self) -> usize {
        self.types.len()
    }

    /// `surv[j]` = mass of atoms `j..`, with `surv[n] = 0`.
    pub fn survival_table(&self) -> Vec<f64> {
        let mut surv = vec![0.0; self.types.len() + 1];
        for j in (0..self.types.len()).rev() {
            surv[j] = surv[j + 1] + self.types[j].1;
        }
        surv
    }

    #[inline]
    pub(crate) fn slack(&self, a: f64, b: f64) -> f64 {
        self.tie * a.abs().max(b.abs()).max(1.0)
    }

    /// Revenue and welfare of the menu made of `(quality index, price index)`
    /// items, sorted by quality, under the best-response tie rule.
    pub fn evaluate(&self, items: &[(usize, usize)]) -> (f64, f64) {
        let mut revenue = 0.0;
        let mut welfare = 0.0;
        for (j, &(_, mass)) in self.types.iter().enumerate() {
            let mut best: Option<usize> = None;
            let mut best_u = 0.0;
            for (i, &(qi, pi)) in items.iter().enumerate() {
                let u = self.v_table[qi][j] - self.prices[pi];
                if u >= best_u - self.slack(u, best_u) {
                    best = Some(i);
                    best_u = f64::max(best_u, u);
                }
            }
            if let Some(i) = best {
                let (qi, pi) = items[i];
                revenue += (self.prices[pi] - self.c) * mass;
                welfare += (self.v_table[qi][j] - self.c) * mass;
            }
        }
        (revenue, welfare)
    }

    pub fn menu_of(&self, items: &[(usize, usize)]) -> Menu {
        Menu::from_pairs(items.iter().map(|&(q, p)| (self.qualities[q], self.prices[p])))
            .expect("grid values are finite and non-negative")
    }

    /// Number of menus with at most `k` items of distinct qualities.
    pub fn menu_count(&self, k: usize) -> u128 {
        let nq = self.qualities.len() as u128;
        let np = self.prices.len() as u128;
        let mut total = 1u128;
        let mut choose = 1u128;
        let mut pow = 1u128;
        for m in 1..=k.min(self.qualities.len()) {
            let m = m as u128;
            choose = choose * (nq - m + 1) / m;
            pow = pow.saturating_mul(np);
            total = total.saturating_add(choose.saturating_mul(pow));
        }
        total
    }
}

/// Best menu of at most `k` items drawn from the instance grid, found by
/// enumerating every candidate. Among equal values the lexicographically
/// first menu wins.
pub fn brute_force_optimal(di: &DiscreteInstance, k: usize, objective: Objective) -> Result<(Menu, f64)> {
    brute_force_with_budget(di, k, objective, DEFAULT_ENUMERATION_BUDGET)
}

pub fn brute_force_with_budget(
    di: &DiscreteInstance,
    k: usize,
    objective: Objective,
    budget: u128,
) -> Result<(Menu, f64)> {
    let required = di.menu_count(k);
    if required > budget {
        return Err(Error::Resource {
            message: "oracle enumeration exceeds budget; shrink the grids or k".into(),
            required,
            cap: budget,
        });
    }
    let k = k.min(di.qualities.len());
    if k == 0 || di.prices.is_empty() {
        return Ok((Menu::trivial(), 0.0));
    }
    let score = |items: &[(usize, usize)]| {
        let (rev, wel) = di.evaluate(items);
        match objective {
            Objective::Revenue => rev,
            Objective::Welfare => wel,
        }
    };
    // one independent search per leading quality
    let partial: Vec<(f64, Vec<(usize, usize)>)> = (0..di.qualities.len())
        .into_par_iter()
        .map(|first| {
            let mut best = (f64::NEG_INFINITY, Vec::new());
            let mut qs = vec![first];
            search_qualities(di, k, &mut qs, &mut |items| {
                let v = score(items);
                if v > best.0 {
                    best = (v, items.to_vec());
                }
            });
            best
        })
        .collect();
    let mut best = (0.0, Vec::new());
    for (v, items) in partial {
        if v > best.0 {
            best = (v, items);
        }
    }
    Ok((di.menu_of(&best.1), best.0))
}

/// Enumerates every quality subset extending `qs` (up to `k` elements) and,
/// for each, every price assignment.
fn search_qualities<F: FnMut(&[(usize, usize)])>(
    di: &DiscreteInstance,
    k: usize,
    qs: &mut Vec<usize>,
    visit: &mut F,
) {
    let mut items: Vec<(usize, usize)> = qs.iter().map(|&q| (q, 0)).collect();
    assign_prices(di, 0, &mut items, visit);
    if qs.len() == k {
        return;
    }
    let last = *qs.last().expect("non-empty");
    for next in last + 1..di.qualities.len() {
        qs.push(next);
        search_qualities(di, k, qs, visit);
        qs.pop();
    }
}

fn assign_prices<F: FnMut(&[(usize, usize)])>(
    di: &DiscreteInstance,
    pos: usize,
    items: &mut Vec<(usize, usize)>,
    visit: &mut F,
) {
    if pos == items.len() {
        visit(items);
        return;
    }
    for p in 0..di.prices.len() {
        items[pos].1 = p;
        assign_prices(di, pos + 1, items, visit);
    }
}

/// Convenience for the common case of a menu of grid values rather than
/// grid indices.
pub fn evaluate_discrete(di: &DiscreteInstance, menu: &Menu) -> (f64, f64) {
    let mut revenue = 0.0;
    let mut welfare = 0.0;
    for (j, &(_, mass)) in di.types.iter().enumerate() {
        let mut best: Option<MenuItem> = None;
        let mut best_u = 0.0;
        for item in menu.nontrivial() {
            let v = value_at(di, item.quality, j).unwrap_or(f64::NAN);
            let u = v - item.price;
            if u >= best_u - di.slack(u, best_u) {
                best = Some(*item);
                best_u = f64::max(best_u, u);
            }
        }
        if let Some(item) = best {
            revenue += (item.price - di.c) * mass;
            welfare += (value_at(di, item.quality, j).unwrap_or(f64::NAN) - di.c) * mass;
        }
    }
    (revenue, welfare)
}

fn value_at(di: &DiscreteInstance, q: f64, j: usize) -> Option<f64> {
    di.qualities
        .iter()
        .position(|&x| x == q)
        .map(|i| di.v_table[i][j])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::TypeDistribution;
    use crate::instance::zoo;

    #[test]
    fn quantile_midpoint_atoms() {
        let lin = zoo("linear_uniform", &[]).unwrap();
        let di = discretize_types(&lin, 4).unwrap();
        let thetas: Vec<f64> = di.types.iter().map(|t| t.0).collect();
        assert_eq!(thetas, vec![0.125, 0.375, 0.625, 0.875]);
        assert!(di.types.iter().all(|t| t.1 == 0.25));

        let mut er = lin.clone();
        er.dist = TypeDistribution::equal_revenue(4.0).unwrap();
        let di = discretize_types(&er, 2).unwrap();
        assert!((di.types[0].0 - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(di.types[1].0, 4.0);

        let di = discretize_types(&lin, 1).unwrap();
        assert_eq!(di.types, vec![(0.5, 1.0)]);
    }

    #[test]
    fn masses_sum_to_one() {
        let gap = zoo("piecewise_gap", &[]).unwrap();
        let di = discretize_types(&gap, 37).unwrap();
        let total: f64 = di.types.iter().map(|t| t.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!((di.survival_table()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_price_on_linear_uniform() {
        let lin = zoo("linear_uniform", &[]).unwrap();
        let prices: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
        let di = discretize_types(&lin, 50).unwrap().with_grid(&lin, &[1.0], &prices);
        let (menu, rev) = brute_force_optimal(&di, 1, Objective::Revenue).unwrap();
        assert_eq!(menu.pairs(), vec![(0.0, 0.0), (1.0, 0.5)]);
        assert!((rev - 0.25).abs() < 1e-12);
    }

    #[test]
    fn zero_items_gives_trivial_menu() {
        let lin = zoo("linear_uniform", &[]).unwrap();
        let di = discretize_types(&lin, 10).unwrap().with_grid(&lin, &[1.0], &[0.5]);
        let (menu, v) = brute_force_optimal(&di, 0, Objective::Revenue).unwrap();
        assert_eq!(menu, Menu::trivial());
        assert_eq!(v, 0.0);
    }

    #[test]
    fn value_grows_with_k_and_scope() {
        let gap = zoo("piecewise_gap", &[("H", 7.0)]).unwrap();
        let qs = [1.0, 2.0, 4.0, 8.0, 12.0];
        let ps = [0.5, 1.0, 2.0, 3.0, 4.0, 6.0];
        let di = discretize_types(&gap, 30).unwrap().with_grid(&gap, &qs, &ps);
        let mut prev = 0.0;
        for k in 0..=3 {
            let (_, v) = brute_force_optimal(&di, k, Objective::Revenue).unwrap();
            assert!(v >= prev);
            prev = v;
        }
        let wider = discretize_types(&gap, 30)
            .unwrap()
            .with_grid(&gap, &qs, &[0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0]);
        let (_, v) = brute_force_optimal(&wider, 3, Objective::Revenue).unwrap();
        assert!(v >= prev);
    }

    #[test]
    fn budget_is_enforced() {
        let lin = zoo("linear_uniform", &[]).unwrap();
        let qs: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        let di = discretize_types(&lin, 5).unwrap().with_grid(&lin, &qs, &qs);
        let err = brute_force_with_budget(&di, 3, Objective::Revenue, 1000).unwrap_err();
        match err {
            Error::Resource { required, .. } => assert_eq!(required, di.menu_count(3)),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(di.menu_count(1), 1 + 100);
    }

    #[test]
    fn evaluation_of_values_matches_indices() {
        let gap = zoo("piecewise_gap", &[("H", 7.0)]).unwrap();
        let di = discretize_types(&gap, 20)
            .unwrap()
            .with_grid(&gap, &[1.0, 3.0, 6.0], &[0.5, 1.5, 3.0]);
        let items = [(0, 0), (1, 1), (2, 2)];
        assert_eq!(di.evaluate(&items), evaluate_discrete(&di, &di.menu_of(&items)));
    }
}
