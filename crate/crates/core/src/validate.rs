//! Grid validators for the structural assumptions on valuations and on the
//! two sides of an economy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CertificationEconomy, PricingInstance};

/// Stored violations and warnings are capped; counts are exact.
const MAX_RECORDED: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Normalization,
    Concavity,
    Convexity,
    NonDecreasing,
    SingleCrossing,
    SlopeBound,
    ValueScale,
    Parameter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Grid point(s) involved, e.g. `[theta1, theta2, q1, q2]`.
    pub point: Vec<f64>,
    /// How far the inequality is missed.
    pub amount: f64,
    pub subject: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violation_count: usize,
    pub violations: Vec<Violation>,
    /// Weak-only inequalities (strict form fails, weak form holds), and
    /// soft conditions such as the value scale.
    pub warning_count: usize,
    pub warnings: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }

    fn violation(&mut self, v: Violation) {
        self.violation_with(|| v);
    }

    fn warning(&mut self, v: Violation) {
        self.warning_with(|| v);
    }

    /// Counts a violation, building the record only while there is room.
    fn violation_with(&mut self, make: impl FnOnce() -> Violation) {
        self.violation_count += 1;
        if self.violations.len() < MAX_RECORDED {
            self.violations.push(make());
        }
    }

    fn warning_with(&mut self, make: impl FnOnce() -> Violation) {
        self.warning_count += 1;
        if self.warnings.len() < MAX_RECORDED {
            self.warnings.push(make());
        }
    }

    pub fn merge(&mut self, other: ValidationReport) {
        self.violation_count += other.violation_count;
        self.warning_count += other.warning_count;
        for v in other.violations {
            if self.violations.len() < MAX_RECORDED {
                self.violations.push(v);
            }
        }
        for w in other.warnings {
            if self.warnings.len() < MAX_RECORDED {
                self.warnings.push(w);
            }
        }
    }

    pub fn into_result(self) -> Result<ValidationReport> {
        if self.passed() {
            Ok(self)
        } else {
            Err(Error::Validation(Box::new(self)))
        }
    }
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Shape of a two-argument function over a (type, quality) grid.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Curvature {
    Concave,
    Convex,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Crossing {
    /// Increments in q grow with type.
    Increasing,
    /// Increments in q shrink with type.
    Decreasing,
}

struct TableCheck<'a> {
    subject: &'a str,
    types: Vec<f64>,
    qs: Vec<f64>,
    table: Vec<Vec<f64>>,
    tol: f64,
}

impl<'a> TableCheck<'a> {
    fn build<F: Fn(f64, f64) -> f64>(
        subject: &'a str,
        f: F,
        types: Vec<f64>,
        qs: Vec<f64>,
        compare: f64,
    ) -> Result<Self> {
        let mut table = Vec::with_capacity(types.len());
        let mut scale: f64 = 1.0;
        for &t in &types {
            let mut row = Vec::with_capacity(qs.len());
            for &q in &qs {
                let v = f(q, t);
                if !v.is_finite() {
                    return Err(Error::Evaluation { q, theta: t });
                }
                scale = scale.max(v.abs());
                row.push(v);
            }
            table.push(row);
        }
        Ok(Self {
            subject,
            types,
            qs,
            table,
            tol: compare * scale,
        })
    }

    fn normalization(&self, report: &mut ValidationReport) {
        for (i, row) in self.table.iter().enumerate() {
            if row[0].abs() > self.tol {
                report.violation(Violation {
                    kind: ViolationKind::Normalization,
                    point: vec![self.types[i], 0.0],
                    amount: row[0].abs(),
                    subject: self.subject.into(),
                });
            }
        }
    }

    fn curvature(&self, shape: Curvature, report: &mut ValidationReport) {
        for (i, row) in self.table.iter().enumerate() {
            for j in 1..row.len() - 1 {
                let avg = 0.5 * (row[j - 1] + row[j + 1]);
                let gap = match shape {
                    Curvature::Concave => row[j] - avg,
                    Curvature::Convex => avg - row[j],
                };
                if gap < -self.tol {
                    report.violation(Violation {
                        kind: match shape {
                            Curvature::Concave => ViolationKind::Concavity,
                            Curvature::Convex => ViolationKind::Convexity,
                        },
                        point: vec![self.types[i], self.qs[j]],
                        amount: -gap,
                        subject: self.subject.into(),
                    });
                }
            }
        }
    }

    fn non_decreasing_in_q(&self, report: &mut ValidationReport) {
        for (i, row) in self.table.iter().enumerate() {
            for j in 1..row.len() {
                if row[j] < row[j - 1] - self.tol {
                    report.violation(Violation {
                        kind: ViolationKind::NonDecreasing,
                        point: vec![self.types[i], self.qs[j - 1], self.qs[j]],
                        amount: row[j - 1] - row[j],
                        subject: self.subject.into(),
                    });
                }
            }
        }
    }

    fn crossing(&self, dir: Crossing, report: &mut ValidationReport) {
        let n_t = self.types.len();
        let n_q = self.qs.len();
        for i1 in 0..n_t {
            for i2 in i1 + 1..n_t {
                let (r1, r2) = (&self.table[i1], &self.table[i2]);
                for j1 in 0..n_q {
                    for j2 in j1 + 1..n_q {
                        let high = r2[j2] - r2[j1];
                        let low = r1[j2] - r1[j1];
                        let gap = match dir {
                            Crossing::Increasing => high - low,
                            Crossing::Decreasing => low - high,
                        };
                        if gap > self.tol {
                            continue;
                        }
                        let v = || Violation {
                            kind: ViolationKind::SingleCrossing,
                            point: vec![self.types[i1], self.types[i2], self.qs[j1], self.qs[j2]],
                            amount: -gap,
                            subject: self.subject.into(),
                        };
                        if gap < -self.tol {
                            report.violation_with(v);
                        } else {
                            report.warning_with(v);
                        }
                    }
                }
            }
        }
    }

    fn slope_at_zero(&self, lambda: f64, report: &mut ValidationReport, f: &dyn Fn(f64, f64) -> f64) {
        let delta = 1e-7 * self.qs[self.qs.len() - 1];
        for &t in &self.types {
            let slope = (f(delta, t) - f(0.0, t)) / delta;
            if slope > lambda * (1.0 + 1e-6) + 1e-9 {
                report.violation(Violation {
                    kind: ViolationKind::SlopeBound,
                    point: vec![t, delta],
                    amount: slope - lambda,
                    subject: self.subject.into(),
                });
            }
        }
    }
}

fn parameter(report: &mut ValidationReport, ok: bool, what: &str, value: f64) {
    if !ok {
        report.violation(Violation {
            kind: ViolationKind::Parameter,
            point: vec![value],
            amount: value,
            subject: what.into(),
        });
    }
}

/// Checks normalization, concavity in `q`, weak single-crossing and the
/// slope bound of a pricing instance's valuation on an `n_grid` grid.
pub fn validate_single_crossing(inst: &PricingInstance, n_grid: usize) -> Result<ValidationReport> {
    if n_grid < 3 {
        return Err(Error::Precondition(format!("n_grid must be >= 3, got {n_grid}")));
    }
    let mut report = ValidationReport::default();
    parameter(&mut report, inst.c >= 0.0, "c", inst.c);
    parameter(&mut report, inst.q_max > 0.0, "q_max", inst.q_max);
    parameter(&mut report, inst.lambda > 0.0, "lambda", inst.lambda);
    let f = |q: f64, t: f64| inst.value(q, t);
    let check = TableCheck::build(
        "v",
        f,
        grid(inst.lo(), inst.hi(), n_grid),
        grid(0.0, inst.q_max, n_grid),
        inst.settings.compare,
    )?;
    check.normalization(&mut report);
    check.curvature(Curvature::Concave, &mut report);
    check.crossing(Crossing::Increasing, &mut report);
    check.slope_at_zero(inst.lambda, &mut report, &f);
    Ok(report)
}

/// Checks the consumer side (`f` concave, non-decreasing, single-crossing)
/// and the producer side (`g` convex, non-decreasing, reversed
/// single-crossing) of an economy.
pub fn validate_economy(econ: &CertificationEconomy, n_grid: usize) -> Result<ValidationReport> {
    if n_grid < 3 {
        return Err(Error::Precondition(format!("n_grid must be >= 3, got {n_grid}")));
    }
    let compare = crate::Settings::default().compare;
    let mut report = ValidationReport::default();
    parameter(&mut report, econ.c >= 0.0, "c", econ.c);
    parameter(&mut report, econ.q_max > 0.0, "q_max", econ.q_max);
    parameter(&mut report, econ.lambda > 0.0, "lambda", econ.lambda);
    // a producer atom must be matched to a single consumer type
    let atom = econ.producers.atom_at_hi();
    parameter(
        &mut report,
        atom <= econ.consumers.atom_at_hi() + compare,
        "producer atom",
        atom,
    );
    let qs = grid(0.0, econ.q_max, n_grid);

    let f = |q: f64, phi: f64| econ.f(q, phi);
    let fc = TableCheck::build(
        "f",
        f,
        grid(econ.consumers.support_lo(), econ.consumers.support_hi(), n_grid),
        qs.clone(),
        compare,
    )?;
    fc.normalization(&mut report);
    fc.curvature(Curvature::Concave, &mut report);
    fc.non_decreasing_in_q(&mut report);
    fc.crossing(Crossing::Increasing, &mut report);
    fc.slope_at_zero(econ.lambda, &mut report, &f);
    for (i, row) in fc.table.iter().enumerate() {
        let top = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if top > 1.0 + compare {
            report.warning(Violation {
                kind: ViolationKind::ValueScale,
                point: vec![fc.types[i]],
                amount: top - 1.0,
                subject: "f".into(),
            });
        }
    }

    let g = |q: f64, psi: f64| econ.g(q, psi);
    let gc = TableCheck::build(
        "g",
        g,
        grid(econ.producers.support_lo(), econ.producers.support_hi(), n_grid),
        qs,
        compare,
    )?;
    gc.normalization(&mut report);
    gc.curvature(Curvature::Convex, &mut report);
    gc.non_decreasing_in_q(&mut report);
    gc.crossing(Crossing::Decreasing, &mut report);
    Ok(report)
}
