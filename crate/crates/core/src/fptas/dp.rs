//! The layered revenue dynamic program over (top quality, top price) cells.
//!
//! Types are represented by weighted atoms. A cell keeps, instead of a single
//! (revenue, lowest buyer) pair, the full Pareto frontier of those pairs: a
//! lower lowest-buyer leaves more room for the next item, so a cell's best
//! revenue alone does not determine which extensions are feasible.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::choice::segment_outcome;
use crate::error::{Error, Result};
use crate::menu::Menu;
use crate::model::PricingInstance;
use crate::oracle::{discretize_types, DiscreteInstance};

use super::grids::{check_eps, Grids};

pub(crate) const NONE: u32 = u32::MAX;

/// Default number of type atoms for continuous instances.
pub const DEFAULT_TYPE_ATOMS: usize = 1000;
/// Default memory cap for DP tables.
pub const DEFAULT_MEMORY_CAP: u128 = 2 << 30;
/// Pair-work level above which `Auto` switches to the binding recursion.
pub const AUTO_PAIR_WORK: f64 = 5e8;

/// Number of menu items allowed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemLimit {
    Count(usize),
    /// `ceil(1/eps)` items with price step `eps^2`.
    Unlimited,
}

impl ItemLimit {
    pub fn resolve(self, eps: f64) -> (usize, f64) {
        match self {
            ItemLimit::Count(k) => (k, eps),
            ItemLimit::Unlimited => ((1.0 / eps).ceil() as usize, eps * eps),
        }
    }
}

impl From<usize> for ItemLimit {
    fn from(k: usize) -> Self {
        ItemLimit::Count(k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DpStrategy {
    /// Exhaustive when the pair work is small, binding otherwise.
    Auto,
    /// Every (lower cell, upper cell) transition on the price grid.
    Exhaustive,
    /// Cells indexed by (quality, threshold atom); each price difference is
    /// the largest grid value that keeps the threshold atom buying.
    Binding,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpOptions {
    pub strategy: DpStrategy,
    pub type_atoms: usize,
    pub memory_cap_bytes: u128,
}

impl Default for DpOptions {
    fn default() -> Self {
        Self {
            strategy: DpStrategy::Auto,
            type_atoms: DEFAULT_TYPE_ATOMS,
            memory_cap_bytes: DEFAULT_MEMORY_CAP,
        }
    }
}

/// What the second cell coordinate indexes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableAxis {
    Price,
    Threshold,
}

/// Filled DP tables. Cell `(q, col, k)` holds the best value of a menu with
/// at most `k` items whose highest item has quality `qualities[q]` and,
/// depending on the axis, price `columns[col]` or lowest buyer
/// `columns[col]`.
#[derive(Debug, Clone)]
pub struct DpTables {
    pub axis: TableAxis,
    pub qualities: Vec<f64>,
    pub columns: Vec<f64>,
    pub layers: usize,
    thetas: Vec<f64>,
    m: Vec<f64>,
    l: Vec<u32>,
    choice: Vec<(u32, u32)>,
}

impl DpTables {
    pub(crate) fn new(axis: TableAxis, qualities: Vec<f64>, columns: Vec<f64>, layers: usize, thetas: Vec<f64>) -> Self {
        let size = qualities.len() * columns.len() * layers;
        Self {
            axis,
            qualities,
            columns,
            layers,
            thetas,
            m: vec![f64::NEG_INFINITY; size],
            l: vec![NONE; size],
            choice: vec![(NONE, NONE); size],
        }
    }

    #[inline]
    fn idx(&self, q: usize, col: usize, k: usize) -> usize {
        assert!(k >= 1 && k <= self.layers, "layer {k} out of range");
        ((k - 1) * self.qualities.len() + q) * self.columns.len() + col
    }

    pub(crate) fn set(&mut self, q: usize, col: usize, k: usize, m: f64, l: u32, choice: (u32, u32)) {
        let i = self.idx(q, col, k);
        self.m[i] = m;
        self.l[i] = l;
        self.choice[i] = choice;
    }

    /// Best value in the cell, `None` when no menu reaches it.
    pub fn value(&self, q: usize, col: usize, k: usize) -> Option<f64> {
        let v = self.m[self.idx(q, col, k)];
        v.is_finite().then_some(v)
    }

    /// Lowest type buying the top item in the best menu of the cell.
    pub fn lowest_type(&self, q: usize, col: usize, k: usize) -> Option<f64> {
        let l = self.l[self.idx(q, col, k)];
        (l != NONE).then(|| self.thetas[l as usize])
    }

    /// Cell of the next-lower item in the best menu of the cell, in layer
    /// `k - 1`; `None` for single-item menus.
    pub fn choice(&self, q: usize, col: usize, k: usize) -> Option<(usize, usize)> {
        let (a, b) = self.choice[self.idx(q, col, k)];
        (a != NONE).then_some((a as usize, b as usize))
    }

    /// Maximum over every cell of the top layer, or 0 for the empty menu.
    pub fn best(&self) -> f64 {
        let layer = self.qualities.len() * self.columns.len();
        self.m[(self.layers - 1) * layer..]
            .iter()
            .copied()
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub cells: u64,
    pub grid_q: usize,
    pub grid_p: usize,
    pub wall_ms: f64,
    pub revenue_dp: f64,
    pub revenue_exact: f64,
    pub strategy: DpStrategy,
    pub type_atoms: usize,
}

#[derive(Debug, Clone)]
pub struct DpSolution {
    pub menu: Menu,
    pub tables: DpTables,
    pub diagnostics: Diagnostics,
    pub grids: Grids,
}

/// Revenue DP with default options.
pub fn dp_solve(inst: &PricingInstance, eps: f64, k: ItemLimit) -> Result<DpSolution> {
    dp_solve_with(inst, eps, k, &DpOptions::default())
}

pub fn dp_solve_with(inst: &PricingInstance, eps: f64, limit: ItemLimit, opts: &DpOptions) -> Result<DpSolution> {
    check_eps(eps)?;
    let start = Instant::now();
    let (k, step) = limit.resolve(eps);
    let grids = Grids::build(inst, eps, k, step)?;
    let di = discretize_types(inst, opts.type_atoms)?.with_grid(inst, grids.qualities(), &grid_prices(&grids));
    let strategy = match opts.strategy {
        DpStrategy::Auto => {
            let nq = di.qualities.len() as f64;
            let np = di.prices.len() as f64;
            if nq * nq * np * np * (k.max(2) - 1) as f64 / 2.0 <= AUTO_PAIR_WORK {
                DpStrategy::Exhaustive
            } else {
                DpStrategy::Binding
            }
        }
        s => s,
    };
    let (items, value, tables, cells) = match strategy {
        DpStrategy::Binding => {
            check_memory(binding_bytes(&di, k), opts.memory_cap_bytes)?;
            solve_binding(&di, k, step, grids.price_grid[0])?
        }
        _ => {
            check_memory(exhaustive_bytes(&di, k), opts.memory_cap_bytes)?;
            let (items, value, tables) = solve_exhaustive(&di, k);
            let cells = (di.qualities.len() * di.prices.len() * k.max(1)) as u64;
            (items, value, tables, cells)
        }
    };
    let menu = Menu::from_pairs(items)?;
    let exact = segment_outcome(inst, &menu)?;
    let diagnostics = Diagnostics {
        cells,
        grid_q: grids.quantity_grid.len(),
        grid_p: grids.price_grid.len(),
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        revenue_dp: value,
        revenue_exact: exact.revenue,
        strategy,
        type_atoms: opts.type_atoms,
    };
    Ok(DpSolution {
        menu,
        tables,
        diagnostics,
        grids,
    })
}

fn grid_prices(grids: &Grids) -> Vec<f64> {
    grids.price_grid.clone()
}

fn exhaustive_bytes(di: &DiscreteInstance, k: usize) -> u128 {
    let cells = (di.qualities.len() * di.prices.len()) as u128;
    // tables plus a few frontier entries per cell and layer
    cells * k.max(1) as u128 * (16 + 4 + 8 + 3 * 24) + (di.qualities.len() * di.n_types() * 8) as u128
}

fn binding_bytes(di: &DiscreteInstance, k: usize) -> u128 {
    let nq = di.qualities.len() as u128;
    let n = di.n_types() as u128;
    nq * n * k.max(1) as u128 * (8 + 4 + 8 + 16) + nq * nq * n * 2
}

pub(crate) fn check_memory(required: u128, cap: u128) -> Result<()> {
    if required > cap {
        return Err(Error::Resource {
            message: "DP tables exceed the memory cap; use a larger epsilon or fewer items".into(),
            required,
            cap,
        });
    }
    Ok(())
}

/// Exhaustive DP on the instance's own grids; the value equals the best
/// revenue over every menu of at most `k` grid items evaluated on the atoms.
pub fn solve_on_grid(di: &DiscreteInstance, k: usize) -> (Menu, f64, DpTables) {
    let (items, value, tables) = solve_exhaustive(di, k);
    (Menu::from_pairs(items).expect("grid values are finite"), value, tables)
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    l: u32,
    m: f64,
    back: (u32, u32, u32),
}

type Frontier = Vec<Entry>;

/// First atom where `values[j] - price` clears the tie slack.
#[inline]
fn first_at_least(di: &DiscreteInstance, values: &[f64], price: f64) -> usize {
    values.partition_point(|&v| v - price < -di.slack(v, price))
}

fn pareto(mut cands: Vec<Entry>) -> Frontier {
    cands.sort_by(|a, b| a.l.cmp(&b.l).then(b.m.total_cmp(&a.m)));
    let mut out: Frontier = Vec::new();
    for e in cands {
        if out.last().is_none_or(|last| e.m > last.m) {
            out.push(e);
        }
    }
    out
}

fn solve_exhaustive(di: &DiscreteInstance, k: usize) -> (Vec<(f64, f64)>, f64, DpTables) {
    let nq = di.qualities.len();
    let np = di.prices.len();
    let n = di.n_types();
    let thetas: Vec<f64> = di.types.iter().map(|t| t.0).collect();
    let mut tables = DpTables::new(TableAxis::Price, di.qualities.clone(), di.prices.clone(), k.max(1), thetas);
    if k == 0 || nq == 0 || np == 0 || n == 0 {
        return (Vec::new(), 0.0, tables);
    }
    let surv = di.survival_table();
    let base: Vec<Frontier> = (0..nq * np)
        .map(|cell| {
            let (q, p) = (cell / np, cell % np);
            let t = first_at_least(di, &di.v_table[q], di.prices[p]);
            if t < n {
                vec![Entry {
                    l: t as u32,
                    m: (di.prices[p] - di.c) * surv[t],
                    back: (NONE, NONE, NONE),
                }]
            } else {
                Vec::new()
            }
        })
        .collect();
    let mut layers: Vec<Vec<Frontier>> = vec![base.clone()];
    for _ in 2..=k {
        let prev = layers.last().expect("at least one layer");
        let rows: Vec<Vec<Frontier>> = (0..nq)
            .into_par_iter()
            .map(|q| extend_row(di, &surv, prev, &base, q))
            .collect();
        layers.push(rows.into_iter().flatten().collect());
    }

    let mut best: Option<(usize, usize, f64)> = None;
    for (layer_no, layer) in layers.iter().enumerate() {
        for (cell, fr) in layer.iter().enumerate() {
            if let Some(top) = fr.last() {
                let (q, p) = (cell / np, cell % np);
                let (bq, bp) = (top.back.0, top.back.1);
                tables.set(q, p, layer_no + 1, top.m, top.l, (bq, bp));
            }
        }
    }
    let top = layers.last().expect("at least one layer");
    for (cell, fr) in top.iter().enumerate() {
        if let Some(e) = fr.last() {
            if e.m > best.map_or(0.0, |b| b.2) {
                best = Some((cell, fr.len() - 1, e.m));
            }
        }
    }
    let Some((cell, entry, value)) = best else {
        return (Vec::new(), 0.0, tables);
    };
    let mut items = Vec::new();
    let (mut cell, mut entry) = (cell, entry);
    for layer in layers.iter().rev() {
        let e = layer[cell][entry];
        items.push((di.qualities[cell / np], di.prices[cell % np]));
        if e.back.0 == NONE {
            break;
        }
        cell = e.back.0 as usize * np + e.back.1 as usize;
        entry = e.back.2 as usize;
    }
    items.reverse();
    (items, value, tables)
}

/// Frontiers of row `q` in the next layer.
fn extend_row(di: &DiscreteInstance, surv: &[f64], prev: &[Frontier], base: &[Frontier], q: usize) -> Vec<Frontier> {
    let np = di.prices.len();
    let n = di.n_types();
    let mut cands: Vec<Vec<Entry>> = (0..np).map(|p| base[q * np + p].clone()).collect();
    let mut dv = vec![0.0; n];
    for lower in 0..q {
        for j in 0..n {
            dv[j] = di.v_table[q][j] - di.v_table[lower][j];
        }
        for pl in 0..np {
            let fr = &prev[lower * np + pl];
            if fr.is_empty() {
                continue;
            }
            for p in 0..np {
                let d = di.prices[p] - di.prices[pl];
                let t = first_at_least(di, &dv, d);
                if t >= n {
                    continue;
                }
                let i = fr.partition_point(|e| (e.l as usize) < t);
                if i == 0 {
                    continue;
                }
                let e = fr[i - 1];
                cands[p].push(Entry {
                    l: t as u32,
                    m: e.m + d * surv[t],
                    back: (lower as u32, pl as u32, (i - 1) as u32),
                });
            }
        }
    }
    cands.into_iter().map(pareto).collect()
}

/// Largest grid value `x` (multiple of `step`) with `value - x` within the
/// tie slack of non-negative.
#[inline]
fn binding_step(di: &DiscreteInstance, value: f64, step: f64) -> i64 {
    let mut l = (value / step).floor() as i64;
    let up = (l + 1) as f64 * step;
    if value - up >= -di.slack(value, up) {
        l += 1;
    }
    l
}

fn solve_binding(
    di: &DiscreteInstance,
    k: usize,
    step: f64,
    price_floor: f64,
) -> Result<(Vec<(f64, f64)>, f64, DpTables, u64)> {
    let nq = di.qualities.len();
    let n = di.n_types();
    let thetas: Vec<f64> = di.types.iter().map(|t| t.0).collect();
    let mut tables = DpTables::new(TableAxis::Threshold, di.qualities.clone(), thetas.clone(), k.max(1), thetas);
    let cells = (nq * n * k.max(1)) as u64;
    if k == 0 || nq == 0 || n == 0 {
        return Ok((Vec::new(), 0.0, tables, cells));
    }
    let surv = di.survival_table();
    let v = &di.v_table;
    let is_threshold = |values: &dyn Fn(usize) -> f64, t: usize, x: f64| {
        let at = values(t);
        if at - x < -di.slack(at, x) {
            return false;
        }
        t == 0 || {
            let before = values(t - 1);
            before - x < -di.slack(before, x)
        }
    };

    // base price index per (quality, threshold), i64::MIN when infeasible
    let floor_l = (price_floor / step).round() as i64;
    let base: Vec<i64> = (0..nq * n)
        .map(|cell| {
            let (q, t) = (cell / n, cell % n);
            let l = binding_step(di, v[q][t], step);
            let ok = l >= floor_l && is_threshold(&|j| v[q][j], t, l as f64 * step);
            if ok {
                l
            } else {
                i64::MIN
            }
        })
        .collect();
    // price-difference steps per (lower, upper, threshold)
    let trans: Vec<Vec<i32>> = (0..nq * nq)
        .into_par_iter()
        .map(|pair| {
            let (upper, lower) = (pair / nq, pair % nq);
            if lower >= upper {
                return Vec::new();
            }
            (0..n)
                .map(|t| {
                    let dv = |j: usize| v[upper][j] - v[lower][j];
                    let l = binding_step(di, dv(t), step);
                    if t >= 1 && l >= 0 && l <= i32::MAX as i64 && is_threshold(&dv, t, l as f64 * step) {
                        l as i32
                    } else {
                        i32::MIN
                    }
                })
                .collect()
        })
        .collect();

    let base_m: Vec<f64> = (0..nq * n)
        .map(|cell| {
            if base[cell] == i64::MIN {
                f64::NEG_INFINITY
            } else {
                (base[cell] as f64 * step - di.c) * surv[cell % n]
            }
        })
        .collect();
    let mut layers: Vec<Vec<(f64, u32, u32)>> = vec![base_m.iter().map(|&m| (m, NONE, NONE)).collect()];
    for _ in 2..=k {
        let prev = layers.last().expect("at least one layer");
        // prefix maxima with argmax over thresholds strictly below t
        let pref: Vec<Vec<(f64, u32)>> = (0..nq)
            .map(|q| {
                let mut out = vec![(f64::NEG_INFINITY, NONE); n + 1];
                for t in 0..n {
                    let here = prev[q * n + t].0;
                    out[t + 1] = if here > out[t].0 { (here, t as u32) } else { out[t] };
                }
                out
            })
            .collect();
        let next: Vec<Vec<(f64, u32, u32)>> = (0..nq)
            .into_par_iter()
            .map(|q| {
                (0..n)
                    .map(|t| {
                        let mut best = (base_m[q * n + t], NONE, NONE);
                        for lower in 0..q {
                            let d = trans[q * nq + lower][t];
                            if d == i32::MIN {
                                continue;
                            }
                            let (m, arg) = pref[lower][t];
                            if arg == NONE {
                                continue;
                            }
                            let cand = m + d as f64 * step * surv[t];
                            if cand > best.0 {
                                best = (cand, lower as u32, arg);
                            }
                        }
                        best
                    })
                    .collect()
            })
            .collect();
        layers.push(next.into_iter().flatten().collect());
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
    let Some((mut cell, value)) = best else {
        return Ok((Vec::new(), 0.0, tables, cells));
    };
    // walk down to the lowest item, then price upward
    let mut chain = Vec::new();
    for layer in layers.iter().rev() {
        chain.push(cell);
        let (_, bq, bt) = layer[cell];
        if bq == NONE {
            break;
        }
        cell = bq as usize * n + bt as usize;
    }
    chain.reverse();
    let mut items = Vec::with_capacity(chain.len());
    let mut level = base[chain[0]];
    if level == i64::MIN {
        return Err(Error::Internal("binding DP reconstructed an infeasible base".into()));
    }
    items.push((di.qualities[chain[0] / n], level as f64 * step));
    for w in chain.windows(2) {
        let (lower, upper, t) = (w[0] / n, w[1] / n, w[1] % n);
        level += trans[upper * nq + lower][t] as i64;
        items.push((di.qualities[upper], level as f64 * step));
    }
    Ok((items, value, tables, cells))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::zoo;
    use crate::oracle::{brute_force_optimal, Objective};

    #[test]
    fn linear_uniform_single_item() {
        let lin = zoo("linear_uniform", &[]).unwrap();
        let sol = dp_solve(&lin, 0.05, ItemLimit::Count(1)).unwrap();
        assert_eq!(sol.menu.nontrivial_len(), 1);
        assert!((sol.diagnostics.revenue_exact - 0.25).abs() < 0.02);
        assert!(sol.menu.is_monotone());
    }

    #[test]
    fn matches_oracle_on_small_gap_grid() {
        let gap = zoo("piecewise_gap", &[("H", 7.0)]).unwrap();
        let qs = [0.5, 1.0, 2.0, 4.0, 8.0, 12.0];
        let ps = [0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0];
        let di = discretize_types(&gap, 40).unwrap().with_grid(&gap, &qs, &ps);
        for k in 1..=3 {
            let (menu, value, _) = solve_on_grid(&di, k);
            let (_, oracle) = brute_force_optimal(&di, k, Objective::Revenue).unwrap();
            assert!((value - oracle).abs() < 1e-12, "k={k}: {value} vs {oracle}");
            let (rev, _) = crate::oracle::evaluate_discrete(&di, &menu);
            assert!((rev - value).abs() < 1e-12);
        }
    }

    #[test]
    fn tables_are_monotone_in_layers() {
        let gap = zoo("piecewise_gap", &[("H", 7.0)]).unwrap();
        let di = discretize_types(&gap, 30)
            .unwrap()
            .with_grid(&gap, &[1.0, 2.0, 4.0, 8.0], &[0.5, 1.0, 2.0, 3.0]);
        let (_, _, t) = solve_on_grid(&di, 3);
        for q in 0..4 {
            for p in 0..4 {
                for k in 2..=3 {
                    let lo = t.value(q, p, k - 1).unwrap_or(f64::NEG_INFINITY);
                    let hi = t.value(q, p, k).unwrap_or(f64::NEG_INFINITY);
                    assert!(hi >= lo);
                }
                if let Some(m1) = t.value(q, p, 1) {
                    let theta = t.lowest_type(q, p, 1).unwrap();
                    let buyers: f64 = di
                        .types
                        .iter()
                        .filter(|x| x.0 >= theta)
                        .map(|x| x.1)
                        .sum();
                    assert!((m1 - di.prices[p] * buyers).abs() < 1e-12);
                    assert!((1.0..=7.0).contains(&theta));
                }
            }
        }
    }

    #[test]
    fn binding_agrees_with_exhaustive_on_dp_grids() {
        for (name, params, eps, k) in [
            ("piecewise_gap", vec![("H", 7.389)], 0.2, 3),
            ("linear_uniform", vec![], 0.1, 2),
            ("custom", vec![("curvature", 0.8)], 0.2, 3),
        ] {
            let inst = zoo(name, &params).unwrap();
            let opts = |strategy| DpOptions {
                strategy,
                type_atoms: 200,
                ..DpOptions::default()
            };
            let a = dp_solve_with(&inst, eps, ItemLimit::Count(k), &opts(DpStrategy::Exhaustive)).unwrap();
            let b = dp_solve_with(&inst, eps, ItemLimit::Count(k), &opts(DpStrategy::Binding)).unwrap();
            assert!(
                (a.diagnostics.revenue_dp - b.diagnostics.revenue_dp).abs() < 1e-9,
                "{name}: {} vs {}",
                a.diagnostics.revenue_dp,
                b.diagnostics.revenue_dp
            );
        }
    }

    #[test]
    fn memory_cap_is_a_resource_error() {
        let lin = zoo("linear_uniform", &[]).unwrap();
        let opts = DpOptions {
            memory_cap_bytes: 1000,
            ..DpOptions::default()
        };
        let err = dp_solve_with(&lin, 0.1, ItemLimit::Count(2), &opts).unwrap_err();
        assert!(matches!(err, Error::Resource { .. }));
    }

    #[test]
    fn diagnostics_shape() {
        let lin = zoo("linear_uniform", &[]).unwrap();
        let sol = dp_solve(&lin, 0.2, ItemLimit::Count(1)).unwrap();
        let json = serde_json::to_value(&sol.diagnostics).unwrap();
        for key in ["cells", "grid_q", "grid_p", "wall_ms", "revenue_dp", "revenue_exact"] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }
}
