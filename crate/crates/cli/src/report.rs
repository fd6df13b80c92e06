//! Versioned report envelope and per-command result payloads.

use std::collections::BTreeMap;

use certmenu_core::fptas::Diagnostics;
use certmenu_core::{
    GameOutcome, InstanceSpec, MarketOutcome, Menu, Objective, Segment, Settings, ValidationReport, WalrasianReport,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<R> {
    pub schema: u32,
    pub command: String,
    /// SHA-256 of the canonical JSON of the instance, menu and config.
    pub input_digest: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<InstanceSpec>,
    pub config: BTreeMap<String, serde_json::Value>,
    pub tolerances: Settings,
    pub wall_ms: f64,
    pub result: R,
}

pub fn digest(parts: &serde_json::Value) -> String {
    let canonical = serde_json::to_string(parts).expect("json values serialize");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRevenueResult {
    pub menu: Menu,
    /// Revenue of the menu under the continuous type law.
    pub revenue: f64,
    /// Revenue on the type atoms, as optimized.
    pub revenue_dp: f64,
    pub welfare: f64,
    pub buyer_surplus: f64,
    pub segments: Vec<Segment>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveWelfareResult {
    /// `dp` or `dense`.
    pub method: String,
    pub menu: Menu,
    pub welfare: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub welfare_dp: Option<f64>,
    pub first_best_welfare: f64,
    pub revenue: f64,
    pub segments: Vec<Segment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateResult {
    pub menu: Menu,
    pub outcome: MarketOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateResult {
    pub menu: Menu,
    pub outcome: GameOutcome,
    /// Revenue of the same menu in the reduced pricing problem.
    pub reduced_revenue: f64,
    pub walrasian: WalrasianReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub objective: Objective,
    pub k: usize,
    pub types: Vec<(f64, f64)>,
    pub qualities: Vec<f64>,
    pub prices: Vec<f64>,
    pub menus_enumerated: u64,
    pub menu: Menu,
    pub value: f64,
    /// Value found by the DP on the same grid (revenue objective only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dp_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateResult {
    pub passed: bool,
    /// Checks on the pricing valuation (the reduced one for economies).
    pub pricing: ValidationReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub economy: Option<ValidationReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    #[serde(rename = "H")]
    pub h: f64,
    /// Best single item on piecewise_gap(H), from the DP with k = 1.
    pub single_item_revenue: f64,
    /// The menu {(q, q/2)} on piecewise_gap(H).
    pub rich_menu_revenue: f64,
    /// `(1 + ln H) / 2`.
    pub rich_menu_formula: f64,
    /// First-best welfare on linear_equal_revenue(H).
    pub first_best_welfare: f64,
    /// Welfare of the revenue-optimal single item on linear_equal_revenue(H).
    pub revenue_optimal_welfare: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapDemoResult {
    pub rows: Vec<GapRow>,
}

/// Row-oriented view of a result for `--format csv`.
pub trait CsvTable {
    fn header(&self) -> Vec<&'static str>;
    fn rows(&self) -> Vec<Vec<f64>>;
}

pub const SEGMENT_COLUMNS: [&str; 5] = ["theta_from", "theta_to", "quality", "price", "mass"];

fn segment_rows(segments: &[Segment]) -> Vec<Vec<f64>> {
    segments
        .iter()
        .map(|s| vec![s.theta_from, s.theta_to, s.quality, s.price, s.mass])
        .collect()
}

impl CsvTable for SolveRevenueResult {
    fn header(&self) -> Vec<&'static str> {
        SEGMENT_COLUMNS.to_vec()
    }
    fn rows(&self) -> Vec<Vec<f64>> {
        segment_rows(&self.segments)
    }
}

impl CsvTable for SolveWelfareResult {
    fn header(&self) -> Vec<&'static str> {
        SEGMENT_COLUMNS.to_vec()
    }
    fn rows(&self) -> Vec<Vec<f64>> {
        segment_rows(&self.segments)
    }
}

impl CsvTable for EvaluateResult {
    fn header(&self) -> Vec<&'static str> {
        SEGMENT_COLUMNS.to_vec()
    }
    fn rows(&self) -> Vec<Vec<f64>> {
        segment_rows(&self.outcome.segments)
    }
}

impl CsvTable for SimulateResult {
    fn header(&self) -> Vec<&'static str> {
        SEGMENT_COLUMNS.to_vec()
    }
    fn rows(&self) -> Vec<Vec<f64>> {
        segment_rows(&self.outcome.producer_segments)
    }
}

impl CsvTable for OracleResult {
    fn header(&self) -> Vec<&'static str> {
        vec!["quality", "price"]
    }
    fn rows(&self) -> Vec<Vec<f64>> {
        self.menu.items().iter().map(|it| vec![it.quality, it.price]).collect()
    }
}

impl CsvTable for ValidateResult {
    fn header(&self) -> Vec<&'static str> {
        vec!["violations", "warnings"]
    }
    fn rows(&self) -> Vec<Vec<f64>> {
        let mut rows = vec![vec![
            self.pricing.violation_count as f64,
            self.pricing.warning_count as f64,
        ]];
        if let Some(e) = &self.economy {
            rows.push(vec![e.violation_count as f64, e.warning_count as f64]);
        }
        rows
    }
}

impl CsvTable for GapDemoResult {
    fn header(&self) -> Vec<&'static str> {
        vec![
            "H",
            "single_item_revenue",
            "rich_menu_revenue",
            "rich_menu_formula",
            "first_best_welfare",
            "revenue_optimal_welfare",
        ]
    }
    fn rows(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    r.h,
                    r.single_item_revenue,
                    r.rich_menu_revenue,
                    r.rich_menu_formula,
                    r.first_best_welfare,
                    r.revenue_optimal_welfare,
                ]
            })
            .collect()
    }
}
