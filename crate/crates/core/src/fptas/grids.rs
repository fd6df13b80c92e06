use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PricingInstance;

/// Candidate qualities and prices searched by the revenue DP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grids {
    pub epsilon: f64,
    /// Leading 0, then `eps (1 + eps)^l` up to `q_max`.
    pub quantity_grid: Vec<f64>,
    /// `l * price_step` for `-3k <= l <= ceil(p_max / price_step)`.
    pub price_grid: Vec<f64>,
    pub price_step: f64,
    /// Index of the price 0 in `price_grid`.
    pub zero_price: usize,
}

/// The `l`-th geometric grid quality `eps (1 + eps)^l`.
#[inline]
pub fn grid_quality(eps: f64, l: i32) -> f64 {
    eps * (1.0 + eps).powi(l)
}

/// Largest geometric grid quality not above `q`, with its exponent; `None`
/// when `q < eps`.
pub fn quality_floor(eps: f64, q: f64) -> Option<(i32, f64)> {
    if !(q >= eps) {
        return None;
    }
    let mut l = ((q / eps).ln() / eps.ln_1p()).floor() as i32;
    while l > 0 && grid_quality(eps, l) > q {
        l -= 1;
    }
    while grid_quality(eps, l + 1) <= q {
        l += 1;
    }
    Some((l, grid_quality(eps, l)))
}

/// Largest multiple of `step` not above `x`, forgiving a relative rounding
/// error of 1e-9 steps.
#[inline]
pub fn floor_to_step(x: f64, step: f64) -> f64 {
    (x / step + 1e-9).floor() * step
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("epsilon must lie in (0, 1), got {eps}")));
    }
    Ok(())
}

impl Grids {
    /// Grids for `k` menu items with the given price step.
    pub fn build(inst: &PricingInstance, eps: f64, k: usize, price_step: f64) -> Result<Self> {
        check_eps(eps)?;
        let mut quantity_grid = vec![0.0];
        let mut l = 0;
        loop {
            let q = grid_quality(eps, l);
            if q > inst.q_max {
                break;
            }
            quantity_grid.push(q);
            l += 1;
        }
        let top = inst.hi();
        let p_max = quantity_grid
            .iter()
            .map(|&q| inst.value(q, top))
            .fold(0.0, f64::max)
            + price_step;
        let lowest = -3 * k as i64;
        let highest = (p_max / price_step).ceil() as i64;
        let price_grid: Vec<f64> = (lowest..=highest).map(|l| l as f64 * price_step).collect();
        Ok(Grids {
            epsilon: eps,
            quantity_grid,
            price_grid,
            price_step,
            zero_price: (-lowest) as usize,
        })
    }

    /// Non-trivial qualities.
    pub fn qualities(&self) -> &[f64] {
        &self.quantity_grid[1..]
    }
}
