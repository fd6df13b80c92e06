use crate::error::{Error, Result};
use crate::menu::Menu;
use crate::model::PricingInstance;
use crate::numeric::{bisect_threshold, golden_max};

/// Whether `v(q; theta) = q v(q_max; theta) / q_max` on a probe grid.
pub fn is_linear_in_quality(inst: &PricingInstance) -> bool {
    let top = inst.q_max;
    (0..=8).all(|i| {
        let theta = inst.dist.quantile(i as f64 / 8.0);
        let full = inst.value(top, theta);
        [0.1, 0.25, 0.5, 0.75, 0.9].iter().all(|&f| {
            let expect = f * full;
            (inst.value(f * top, theta) - expect).abs() <= inst.settings.compare * expect.abs().max(1.0)
        })
    })
}

/// Revenue of posting the full quantity at `price`.
fn posted_revenue(inst: &PricingInstance, price: f64) -> f64 {
    let top = inst.q_max;
    let tol = inst.settings.root;
    let buyers = match bisect_threshold(|t| inst.value(top, t) >= price, inst.lo(), inst.hi(), tol) {
        Ok(Some(t)) => inst.dist.survival(t),
        _ => 0.0,
    };
    (price - inst.c) * buyers
}

/// Optimal single posted price for the whole quantity when values are
/// linear in quality. Among prices with equal revenue the highest is chosen.
pub fn linear_single_item(inst: &PricingInstance) -> Result<Menu> {
    if !is_linear_in_quality(inst) {
        return Err(Error::Precondition(
            "linear_single_item needs values proportional to quality".into(),
        ));
    }
    let lo = inst.value(inst.q_max, inst.lo()).max(0.0);
    let hi = inst.value(inst.q_max, inst.hi());
    if !(hi > lo) {
        let rev = posted_revenue(inst, hi);
        return if rev > 0.0 {
            Menu::from_pairs([(inst.q_max, hi)])
        } else {
            Ok(Menu::trivial())
        };
    }
    const GRID: usize = 2000;
    let h = (hi - lo) / GRID as f64;
    let grid: Vec<(f64, f64)> = (0..=GRID)
        .map(|i| {
            let p = if i == GRID { hi } else { lo + i as f64 * h };
            (p, posted_revenue(inst, p))
        })
        .collect();
    let top = grid.iter().fold(grid[0], |b, &x| if x.1 > b.1 { x } else { b });
    let refined = golden_max(
        |p| posted_revenue(inst, p),
        (top.0 - h).max(lo),
        (top.0 + h).min(hi),
        inst.settings.root,
    );
    let best_value = top.1.max(refined.1);
    let tol = inst.settings.compare * best_value.abs().max(1.0);
    // among (near-)ties the seller posts the highest price
    let best = match grid.iter().rev().find(|x| x.1 >= best_value - tol) {
        Some(&x) => x,
        None => refined,
    };
    if best.1 <= 0.0 {
        return Ok(Menu::trivial());
    }
    Menu::from_pairs([(inst.q_max, best.0)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::segment_outcome;
    use crate::instance::zoo;

    #[test]
    fn linear_uniform_price_half() {
        let lin = zoo("linear_uniform", &[]).unwrap();
        let m = linear_single_item(&lin).unwrap();
        assert_eq!(m.nontrivial_len(), 1);
        assert!((m.items()[1].price - 0.5).abs() < 1e-6);
        assert!((segment_outcome(&lin, &m).unwrap().revenue - 0.25).abs() < 1e-9);
    }

    #[test]
    fn equal_revenue_earns_one() {
        let er = zoo("linear_equal_revenue", &[("H", 10.0)]).unwrap();
        let m = linear_single_item(&er).unwrap();
        assert_eq!(m.items()[1].price, 10.0);
        assert!((segment_outcome(&er, &m).unwrap().revenue - 1.0).abs() < 1e-6);
    }

    #[test]
    fn prohibitive_cost_gives_trivial_menu() {
        let lin = zoo("linear_uniform", &[("c", 1.5)]).unwrap();
        assert_eq!(linear_single_item(&lin).unwrap(), Menu::trivial());
    }

    #[test]
    fn rejects_nonlinear() {
        let gap = zoo("piecewise_gap", &[]).unwrap();
        assert!(matches!(linear_single_item(&gap), Err(Error::Precondition(_))));
    }
}
