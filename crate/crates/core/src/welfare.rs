//! Welfare-optimal menus: every quality at cost, and the best menu with a
//! bounded number of at-cost levels.

use rayon::prelude::*;

use crate::choice::segment_outcome;
use crate::error::{Error, Result};
use crate::fptas::dp::{check_memory, TableAxis, DEFAULT_MEMORY_CAP, DEFAULT_TYPE_ATOMS, NONE};
use crate::fptas::DpTables;
use crate::menu::Menu;
use crate::model::PricingInstance;
use crate::numeric::golden_max;
use crate::oracle::discretize_types;

/// Offers `n_grid` evenly spaced qualities in `(0, q_max]`, all priced at
/// the verification cost. Returns the menu and its exact welfare.
pub fn welfare_optimal_dense(inst: &PricingInstance, n_grid: usize) -> Result<(Menu, f64)> {
    if n_grid < 2 {
        return Err(Error::Precondition("dense menu needs at least 2 grid points".into()));
    }
    let menu = Menu::from_pairs((1..=n_grid).map(|i| (inst.q_max * i as f64 / n_grid as f64, inst.c)))?;
    let welfare = segment_outcome(inst, &menu)?.welfare;
    Ok((menu, welfare))
}

/// Welfare minus revenue: the surplus left to the buyer side.
pub fn wel_minus_rev(inst: &PricingInstance, menu: &Menu) -> Result<f64> {
    Ok(segment_outcome(inst, menu)?.buyer_surplus)
}

/// `E[max(0, max_q v(q; theta) - c)]`, maximizing over quality per type.
pub fn first_best_welfare(inst: &PricingInstance) -> Result<f64> {
    let tol = inst.settings.root;
    inst.dist.expect_with(
        |t| {
            let (_, best) = golden_max(|q| inst.value(q, t), 0.0, inst.q_max, tol);
            (best - inst.c).max(0.0)
        },
        inst.settings.quad,
    )
}

#[derive(Debug, Clone)]
pub struct WelfareSolution {
    pub menu: Menu,
    pub tables: DpTables,
    /// Welfare on the type atoms, as optimized.
    pub welfare_dp: f64,
    /// Welfare of the menu under the continuous type law.
    pub welfare_exact: f64,
}

/// Best menu of at most `k` at-cost levels on the multiple-of-`eps` quality
/// grid. Cells are indexed by (quality, lowest buyer atom).
pub fn welfare_dp(inst: &PricingInstance, eps: f64, k: usize) -> Result<WelfareSolution> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("epsilon must lie in (0, 1), got {eps}")));
    }
    if k == 0 {
        return Err(Error::Precondition("welfare_dp needs k >= 1".into()));
    }
    let levels = (inst.q_max / eps + 1e-9).floor() as usize;
    let qualities: Vec<f64> = (1..=levels).map(|l| l as f64 * eps).collect();
    let n = DEFAULT_TYPE_ATOMS;
    let nq = qualities.len();
    check_memory((nq * n * k * 24 + nq * (n + 1) * 8) as u128, DEFAULT_MEMORY_CAP)?;
    let di = discretize_types(inst, n)?.with_grid(inst, &qualities, &[inst.c]);
    let thetas: Vec<f64> = di.types.iter().map(|t| t.0).collect();
    let mut tables = DpTables::new(TableAxis::Threshold, qualities.clone(), thetas.clone(), k, thetas);
    let surv = di.survival_table();
    let v = &di.v_table;
    let c = inst.c;
    // suffix sums of mass * value
    let sv: Vec<Vec<f64>> = v
        .iter()
        .map(|row| {
            let mut out = vec![0.0; n + 1];
            for j in (0..n).rev() {
                out[j] = out[j + 1] + di.types[j].1 * row[j];
            }
            out
        })
        .collect();
    // switch atom from each lower level to each higher one at equal prices
    let switch: Vec<Vec<usize>> = (0..nq)
        .into_par_iter()
        .map(|upper| {
            (0..upper)
                .map(|lower| (0..n).find(|&j| {
                    let dv = v[upper][j] - v[lower][j];
                    dv >= -di.slack(dv, 0.0)
                }).unwrap_or(n))
                .collect()
        })
        .collect();

    let mut base = vec![f64::NEG_INFINITY; nq * n];
    for q in 0..nq {
        let t = v[q].partition_point(|&x| x - c < -di.slack(x, c));
        if t < n {
            base[q * n + t] = sv[q][t] - c * surv[t];
        }
    }
    let mut layers: Vec<Vec<(f64, u32, u32)>> = vec![base.iter().map(|&m| (m, NONE, NONE)).collect()];
    for _ in 2..=k {
        let prev = layers.last().expect("at least one layer");
        let mut next: Vec<(f64, u32, u32)> = base.iter().map(|&m| (m, NONE, NONE)).collect();
        for q in 0..nq {
            for lower in 0..q {
                let t = switch[q][lower];
                if t == 0 || t >= n {
                    continue;
                }
                // best lower cell whose lowest buyer sits strictly below t
                let mut best = (f64::NEG_INFINITY, NONE);
                for tl in 0..t {
                    let m = prev[lower * n + tl].0;
                    if m > best.0 {
                        best = (m, tl as u32);
                    }
                }
                if best.1 == NONE {
                    continue;
                }
                let cand = best.0 + sv[q][t] - sv[lower][t];
                if cand > next[q * n + t].0 {
                    next[q * n + t] = (cand, lower as u32, best.1);
                }
            }
        }
        layers.push(next);
    }
    for (layer_no, layer) in layers.iter().enumerate() {
        for (cell, &(m, bq, bt)) in layer.iter().enumerate() {
            if m.is_finite() {
                tables.set(cell / n, cell % n, layer_no + 1, m, (cell % n) as u32, (bq, bt));
            }
        }
    }
    let top = layers.last().expect("at least one layer");
    let mut best: Option<(usize, f64)> = None;
    for (cell, &(m, _, _)) in top.iter().enumerate() {
        if m > best.map_or(0.0, |b| b.1) {
            best = Some((cell, m));
        }
    }
    let mut items = Vec::new();
    let mut welfare_dp = 0.0;
    if let Some((mut cell, value)) = best {
        welfare_dp = value;
        for layer in layers.iter().rev() {
            items.push((qualities[cell / n], c));
            let (_, bq, bt) = layer[cell];
            if bq == NONE {
                break;
            }
            cell = bq as usize * n + bt as usize;
        }
    }
    let menu = Menu::from_pairs(items)?;
    let welfare_exact = segment_outcome(inst, &menu)?.welfare;
    Ok(WelfareSolution {
        menu,
        tables,
        welfare_dp,
        welfare_exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::zoo;

    #[test]
    fn dense_menu_on_linear_uniform() {
        let lin = zoo("linear_uniform", &[]).unwrap();
        let (menu, w) = welfare_optimal_dense(&lin, 100).unwrap();
        assert_eq!(menu.nontrivial_len(), 100);
        assert!((w - 0.5).abs() < 0.01);
    }

    #[test]
    fn dense_menu_on_equal_revenue() {
        let er = zoo("linear_equal_revenue", &[("H", 4f64.exp())]).unwrap();
        let (_, w) = welfare_optimal_dense(&er, 50).unwrap();
        assert!((w - 5.0).abs() < 0.05);
        assert!((first_best_welfare(&er).unwrap() - 5.0).abs() < 1e-6);
    }

    #[test]
    fn prohibitive_cost_kills_trade() {
        let lin = zoo("linear_uniform", &[("c", 2.0)]).unwrap();
        let (_, w) = welfare_optimal_dense(&lin, 10).unwrap();
        assert_eq!(w, 0.0);
        assert_eq!(first_best_welfare(&lin).unwrap(), 0.0);
    }

    #[test]
    fn dense_welfare_grows_with_grid() {
        let gap = zoo("piecewise_gap", &[("H", 7.389)]).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for n in [4, 8, 16, 32] {
            let (_, w) = welfare_optimal_dense(&gap, n).unwrap();
            assert!(w >= prev - 1e-9);
            prev = w;
        }
    }

    #[test]
    fn single_level_dp_on_linear_uniform() {
        let lin = zoo("linear_uniform", &[]).unwrap();
        let sol = welfare_dp(&lin, 0.01, 1).unwrap();
        assert_eq!(sol.menu.pairs(), vec![(0.0, 0.0), (1.0, 0.0)]);
        assert!((sol.welfare_exact - 0.5).abs() < 1e-9);
    }

    #[test]
    fn more_levels_help_on_gap() {
        let gap = zoo("piecewise_gap", &[("H", 2f64.exp())]).unwrap();
        let one = welfare_dp(&gap, 0.1, 1).unwrap();
        let eight = welfare_dp(&gap, 0.1, 8).unwrap();
        assert!(eight.welfare_exact > one.welfare_exact + 0.1);
        let (_, dense) = welfare_optimal_dense(&gap, 400).unwrap();
        assert!(eight.welfare_exact <= dense + 1e-6);
        // at-cost prices leave the certifier nothing
        assert!(segment_outcome(&gap, &eight.menu).unwrap().revenue.abs() < 1e-12);
    }

    #[test]
    fn surplus_examples() {
        let lin = zoo("linear_uniform", &[]).unwrap();
        assert_eq!(wel_minus_rev(&lin, &Menu::trivial()).unwrap(), 0.0);
        let m = Menu::from_pairs([(1.0, 0.5)]).unwrap();
        assert!((wel_minus_rev(&lin, &m).unwrap() - 0.125).abs() < 1e-8);
    }
}
