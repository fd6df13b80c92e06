//! Revenue-preserving (or bounded-loss) menu rewrites: monotone pruning,
//! sparsification and grid discretization.

use crate::choice::segment_outcome;
use crate::error::{Error, Result};
use crate::menu::{normalize_menu, Menu, MenuItem};
use crate::model::PricingInstance;

use super::grids::{floor_to_step, quality_floor};

/// Drops items bought by no one.
fn purchased_only(inst: &PricingInstance, menu: &Menu) -> Result<(Menu, f64)> {
    let out = segment_outcome(inst, menu)?;
    let bought = out.purchased_items();
    Ok((menu.retain_indices(|i| bought.contains(&i)), out.revenue))
}

/// One pruning step on a non-monotone price sequence: the indices to keep.
fn prune_step(prices: &[f64]) -> Vec<usize> {
    let n = prices.len();
    // suffix maxima of the later prices
    let mut later_max = vec![f64::NEG_INFINITY; n];
    for i in (0..n - 1).rev() {
        later_max[i] = later_max[i + 1].max(prices[i + 1]);
    }
    if let Some(i) = (0..n - 1).find(|&i| prices[i] > later_max[i]) {
        return (0..=i).collect();
    }
    let i = (0..n - 1)
        .find(|&i| prices[i + 1] < prices[i])
        .expect("called on a non-monotone sequence");
    let j = (i + 2..n)
        .find(|&j| prices[j] >= prices[i])
        .expect("some later price reaches p_i when no item tops all later prices");
    (0..=i).chain(j..n).collect()
}

/// Rewrites a menu into one with prices non-decreasing in quality without
/// lowering revenue. Items nobody buys are dropped first.
pub fn monotone_prune(inst: &PricingInstance, menu: &Menu) -> Result<Menu> {
    let (mut current, revenue_in) = purchased_only(inst, menu)?;
    while !current.is_monotone() {
        let prices: Vec<f64> = current.items().iter().map(|it| it.price).collect();
        let keep = prune_step(&prices);
        current = current.retain_indices(|i| keep.contains(&i));
    }
    let (pruned, revenue_out) = purchased_only(inst, &current)?;
    if revenue_out < revenue_in - 1e-9 * revenue_in.abs().max(1.0) {
        return Err(Error::Internal(format!(
            "monotone pruning lowered revenue from {revenue_in} to {revenue_out}"
        )));
    }
    Ok(pruned)
}

/// Keeps, for each price level `a` in `{0, eps, 2 eps, ...} ∩ [0, 1]`, the
/// cheapest non-trivial item priced at least `a`. The result has at most
/// `floor(1/eps) + 1` non-trivial items.
pub fn sparsify(_inst: &PricingInstance, menu: &Menu, eps: f64) -> Result<Menu> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("epsilon must lie in (0, 1), got {eps}")));
    }
    if !menu.is_monotone() {
        return Err(Error::Precondition("sparsify needs prices non-decreasing in quality".into()));
    }
    let items = menu.items();
    let levels = (1.0 / eps + 1e-9).floor() as usize;
    let mut keep = Vec::with_capacity(levels + 1);
    for l in 0..=levels {
        let a = l as f64 * eps;
        if let Some(i) = items.iter().skip(1).position(|it| it.price >= a) {
            keep.push(i + 1);
        }
    }
    Ok(menu.retain_indices(|i| keep.contains(&i)))
}

/// Rounds every quality down to the geometric grid, scales its price by the
/// same ratio, rounds the price down to a multiple of `eps` and discounts the
/// `i`-th item by `3 i eps`. Items below the smallest grid quality are
/// dropped.
pub fn discretize_menu(inst: &PricingInstance, menu: &Menu, eps: f64) -> Result<Menu> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("epsilon must be positive, got {eps}")));
    }
    if !menu.is_monotone() {
        return Err(Error::Precondition(
            "discretize_menu needs prices non-decreasing in quality".into(),
        ));
    }
    let mut out = Vec::with_capacity(menu.len());
    for (i, item) in menu.nontrivial().iter().enumerate() {
        let Some((_, q)) = quality_floor(eps, item.quality) else {
            continue;
        };
        let scaled = item.price * q / item.quality;
        let price = floor_to_step(scaled, eps) - 3.0 * (i + 1) as f64 * eps;
        out.push(MenuItem::new(q, price));
    }
    normalize_menu(out, inst.q_max)
}
