//! Small numeric kernels: adaptive Gauss-Kronrod quadrature, monotone
//! bisection and golden-section search.

use crate::error::{Error, Result};
use crate::settings::BISECTION_MAX_ITER;

// 15-point Kronrod nodes on [-1, 1] (non-negative half) and weights; the
// embedded 7-point Gauss rule uses every other node.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 20_000;

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let sum = f(center - dx) + f(center + dx);
        kronrod += w * sum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }
    let k = kronrod * half;
    let g = gauss * half;
    (k, (k - g).abs())
}

/// Integrates `f` over `[a, b]` to absolute accuracy `tol` by adaptive
/// bisection of Gauss-Kronrod 7/15 panels.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(b > a) {
        return Ok(0.0);
    }
    let total = b - a;
    let mut stack = vec![(a, b)];
    let mut result = 0.0;
    let mut evaluated = 0usize;
    let mut failed = false;
    while let Some((lo, hi)) = stack.pop() {
        evaluated += 1;
        let (value, err) = gk15(&f, lo, hi);
        if !value.is_finite() {
            return Err(Error::Numeric {
                message: format!("non-finite integrand on [{lo}, {hi}]"),
                estimate: result,
            });
        }
        let budget = tol * (hi - lo) / total;
        let width_floor = (hi - lo) <= 1e-13 * total.max(1.0);
        if err <= budget.max(f64::EPSILON * value.abs()) || width_floor {
            result += value;
        } else if evaluated + stack.len() >= MAX_INTERVALS {
            failed = true;
            result += value;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi));
            stack.push((lo, mid));
        }
    }
    if failed {
        return Err(Error::Numeric {
            message: "quadrature did not converge".into(),
            estimate: result,
        });
    }
    Ok(result)
}

/// Returns the infimum of `{x in [lo, hi] : pred(x)}` for a predicate that
/// is monotone (false then true), or `None` when `pred(hi)` is false.
pub fn bisect_threshold<P: Fn(f64) -> bool>(
    pred: P,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<Option<f64>> {
    if pred(lo) {
        return Ok(Some(lo));
    }
    if !pred(hi) {
        return Ok(None);
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..BISECTION_MAX_ITER {
        if b - a <= tol {
            return Ok(Some(b));
        }
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            return Ok(Some(b));
        }
        if pred(mid) {
            b = mid;
        } else {
            a = mid;
        }
    }
    Err(Error::Numeric {
        message: format!("bisection hit the {BISECTION_MAX_ITER}-iteration cap"),
        estimate: b,
    })
}

/// Maximizes a unimodal function on `[lo, hi]`; returns `(argmax, max)`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    // endpoints matter for monotone (boundary-maximized) functions
    [(lo, f(lo)), (hi, f(hi)), (c, fc), (d, fd)]
        .into_iter()
        .fold((lo, f64::NEG_INFINITY), |best, cand| {
            if cand.1 > best.1 {
                cand
            } else {
                best
            }
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let v = integrate(|x| x * x * x - 2.0 * x, 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 0.0).abs() < 1e-12);
        let v = integrate(|x| x, 0.0, 1.0, 1e-12).unwrap();
        assert!((v - 0.5).abs() < 1e-14);
    }

    #[test]
    fn integrates_kinks_adaptively() {
        // |x - 0.3| on [0, 1] = 0.045 + 0.245
        let v = integrate(|x: f64| (x - 0.3).abs(), 0.0, 1.0, 1e-10).unwrap();
        assert!((v - 0.29).abs() < 1e-9);
    }

    #[test]
    fn bisection_finds_infimum() {
        let t = bisect_threshold(|x| x >= 0.37, 0.0, 1.0, 1e-12).unwrap();
        assert!((t.unwrap() - 0.37).abs() < 1e-11);
        assert_eq!(bisect_threshold(|x| x > 2.0, 0.0, 1.0, 1e-12).unwrap(), None);
        assert_eq!(bisect_threshold(|_| true, 0.0, 1.0, 1e-12).unwrap(), Some(0.0));
    }

    #[test]
    fn golden_section_handles_interior_and_boundary() {
        let (x, v) = golden_max(|p| p * (1.0 - p), 0.0, 1.0, 1e-10);
        assert!((x - 0.5).abs() < 1e-6 && (v - 0.25).abs() < 1e-12);
        let (x, _) = golden_max(|p| p, 0.0, 3.0, 1e-10);
        assert_eq!(x, 3.0);
    }
}
