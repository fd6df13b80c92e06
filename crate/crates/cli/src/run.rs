//! Command execution: instance loading, solver calls and report output.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use certmenu_core::fptas::{dp_solve_with, linear_single_item, solve_on_grid, DpOptions, DpStrategy};
use certmenu_core::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::*;
use crate::report::*;

/// Failure of a command, with the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub tag: String,
    pub message: String,
    pub details: Option<Value>,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Validation,
            tag: "usage".into(),
            message: message.into(),
            details: None,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Validation => 1,
            ErrorKind::Resource => 2,
            ErrorKind::Internal => 3,
        }
    }

    /// Machine-readable error object for the error stream.
    pub fn to_json(&self) -> Value {
        let mut obj = json!({
            "error": {
                "kind": self.kind,
                "tag": self.tag,
                "message": self.message,
                "exit_code": self.exit_code(),
            }
        });
        if let Some(d) = &self.details {
            obj["error"]["details"] = d.clone();
        }
        obj
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let details = match &e {
            Error::Validation(report) => serde_json::to_value(report).ok(),
            _ => None,
        };
        Self {
            kind: e.kind(),
            tag: e.tag().into(),
            message: e.to_string(),
            details,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self {
            kind: ErrorKind::Validation,
            tag: "io".into(),
            message: e.to_string(),
            details: None,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn parse_params(raw: &[String]) -> CliResult<Params> {
    raw.iter()
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("--param expects KEY=VALUE, got `{kv}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| CliError::usage(format!("--param {k}: `{v}` is not a number")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

/// Reads the instance spec. File specs are validated only when `validate`
/// is set, so the `validate` command can report on broken ones.
fn load_spec(src: &InstanceArgs, validate: bool) -> CliResult<InstanceSpec> {
    match (&src.zoo, &src.instance) {
        (Some(name), None) => Ok(make_named_instance(name, &parse_params(&src.params)?)?),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)?;
            if validate {
                Ok(InstanceSpec::from_json(&text)?)
            } else {
                serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()).into())
            }
        }
        _ => Err(CliError::usage("give exactly one of --zoo or --instance")),
    }
}

fn settings(common: &Common) -> CliResult<Settings> {
    let mut s = Settings {
        probe_seed: common.seed,
        ..Settings::default()
    };
    for (name, value, slot) in [
        ("--tol-root", common.tol_root, &mut s.root),
        ("--tol-quad", common.tol_quad, &mut s.quad),
    ] {
        if let Some(v) = value {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::usage(format!("{name} must be positive, got {v}")));
            }
            *slot = v;
        }
    }
    Ok(s)
}

fn pricing(spec: &InstanceSpec, common: &Common) -> CliResult<PricingInstance> {
    Ok(spec.pricing_instance()?.with_settings(settings(common)?))
}

fn parse_menu(raw: &str, q_max: f64) -> CliResult<Menu> {
    let text = if raw.trim_start().starts_with('[') {
        raw.to_string()
    } else {
        std::fs::read_to_string(raw)?
    };
    let items: Vec<MenuItem> =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("menu: {e}")))?;
    Ok(normalize_menu(items, q_max)?)
}

fn check_eps(eps: f64) -> CliResult<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("--eps must lie in (0, 1), got {eps}")).into())
    }
}

/// Collects everything a report needs besides its result.
struct Envelope<'a> {
    command: &'static str,
    common: &'a Common,
    instance: Option<InstanceSpec>,
    config: BTreeMap<String, Value>,
    start: Instant,
}

impl<'a> Envelope<'a> {
    fn new(command: &'static str, common: &'a Common, instance: Option<InstanceSpec>) -> Self {
        let mut config = BTreeMap::new();
        config.insert("seed".into(), json!(common.seed));
        config.insert("threads".into(), json!(rayon::current_num_threads()));
        Self {
            command,
            common,
            instance,
            config,
            start: Instant::now(),
        }
    }

    fn set(&mut self, key: &str, value: impl Serialize) {
        self.config.insert(key.into(), serde_json::to_value(value).expect("config serializes"));
    }

    fn finish<R: Serialize + CsvTable>(self, result: R) -> CliResult<()> {
        let tolerances = settings(self.common)?;
        let input_digest = digest(&json!({
            "command": self.command,
            "instance": self.instance,
            "config": self.config,
            "tolerances": tolerances,
        }));
        let wall_ms = if self.common.no_timing {
            0.0
        } else {
            self.start.elapsed().as_secs_f64() * 1e3
        };
        let report = Report {
            schema: SCHEMA,
            command: self.command.to_string(),
            input_digest,
            instance: self.instance,
            config: self.config,
            tolerances,
            wall_ms,
            result,
        };
        let bytes = match self.common.format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&report).expect("reports serialize");
                s.push('\n');
                s.into_bytes()
            }
            Format::Csv => csv_bytes(&report.result)?,
        };
        match &self.common.out {
            Some(path) => std::fs::write(path, bytes)?,
            None => std::io::stdout().lock().write_all(&bytes)?,
        }
        Ok(())
    }
}

fn csv_bytes<R: CsvTable>(result: &R) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let internal = |e: csv::Error| CliError {
        kind: ErrorKind::Internal,
        tag: "csv".into(),
        message: e.to_string(),
        details: None,
    };
    w.write_record(result.header()).map_err(internal)?;
    for row in result.rows() {
        w.write_record(row.iter().map(|x| x.to_string())).map_err(internal)?;
    }
    w.into_inner().map_err(|e| CliError {
        kind: ErrorKind::Internal,
        tag: "csv".into(),
        message: e.to_string(),
        details: None,
    })
}

fn configure_threads(common: &Common) -> CliResult<()> {
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        // a pool built earlier in the same process keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn common_of(cmd: &Command) -> &Common {
    match cmd {
        Command::SolveRevenue(a) => &a.common,
        Command::SolveWelfare(a) => &a.common,
        Command::Evaluate(a) => &a.common,
        Command::Simulate(a) => &a.common,
        Command::Oracle(a) => &a.common,
        Command::Validate(a) => &a.common,
        Command::GapDemo(a) => &a.common,
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    configure_threads(common_of(&cli.command))?;
    match cli.command {
        Command::SolveRevenue(a) => solve_revenue(a),
        Command::SolveWelfare(a) => solve_welfare(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Simulate(a) => simulate(a),
        Command::Oracle(a) => oracle(a),
        Command::Validate(a) => validate(a),
        Command::GapDemo(a) => gap_demo(a),
    }
}

fn item_limit(raw: &str) -> CliResult<ItemLimit> {
    if raw == "unlimited" {
        return Ok(ItemLimit::Unlimited);
    }
    raw.parse::<usize>()
        .map(ItemLimit::Count)
        .map_err(|_| CliError::usage(format!("--k expects a count or `unlimited`, got `{raw}`")))
}

fn solve_revenue(a: SolveRevenueArgs) -> CliResult<()> {
    check_eps(a.eps)?;
    let limit = item_limit(&a.k)?;
    let spec = load_spec(&a.source, true)?;
    let inst = pricing(&spec, &a.common)?;
    let mut env = Envelope::new("solve-revenue", &a.common, Some(spec));
    env.set("eps", a.eps);
    env.set("k", limit);
    env.set("strategy", format!("{:?}", a.strategy).to_lowercase());
    env.set("type_atoms", a.type_atoms);
    let opts = DpOptions {
        strategy: match a.strategy {
            Strategy::Auto => DpStrategy::Auto,
            Strategy::Exhaustive => DpStrategy::Exhaustive,
            Strategy::Binding => DpStrategy::Binding,
        },
        type_atoms: a.type_atoms,
        ..DpOptions::default()
    };
    let sol = dp_solve_with(&inst, a.eps, limit, &opts)?;
    let out = segment_outcome(&inst, &sol.menu)?;
    let mut diagnostics = sol.diagnostics;
    if a.common.no_timing {
        diagnostics.wall_ms = 0.0;
    }
    env.finish(SolveRevenueResult {
        menu: sol.menu,
        revenue: out.revenue,
        revenue_dp: diagnostics.revenue_dp,
        welfare: out.welfare,
        buyer_surplus: out.buyer_surplus,
        segments: out.segments,
        diagnostics,
    })
}

fn solve_welfare(a: SolveWelfareArgs) -> CliResult<()> {
    let spec = load_spec(&a.source, true)?;
    let inst = pricing(&spec, &a.common)?;
    let mut env = Envelope::new("solve-welfare", &a.common, Some(spec));
    let (method, menu, welfare_dp) = match a.dense {
        Some(n) => {
            env.set("dense", n);
            let (menu, _) = welfare_optimal_dense(&inst, n)?;
            ("dense", menu, None)
        }
        None => {
            check_eps(a.eps)?;
            env.set("eps", a.eps);
            env.set("k", a.k);
            let sol = welfare_dp(&inst, a.eps, a.k)?;
            ("dp", sol.menu, Some(sol.welfare_dp))
        }
    };
    let out = segment_outcome(&inst, &menu)?;
    env.finish(SolveWelfareResult {
        method: method.into(),
        menu,
        welfare: out.welfare,
        welfare_dp,
        first_best_welfare: first_best_welfare(&inst)?,
        revenue: out.revenue,
        segments: out.segments,
    })
}

fn evaluate(a: MenuArgs) -> CliResult<()> {
    let spec = load_spec(&a.source, true)?;
    let inst = pricing(&spec, &a.common)?;
    let menu = parse_menu(&a.menu, inst.q_max)?;
    let mut env = Envelope::new("evaluate", &a.common, Some(spec));
    env.set("menu", &menu);
    let outcome = segment_outcome(&inst, &menu)?;
    env.finish(EvaluateResult { menu, outcome })
}

fn simulate(a: SimulateArgs) -> CliResult<()> {
    let spec = load_spec(&a.source, true)?;
    let econ = spec.economy().ok_or_else(|| {
        CliError::from(Error::Precondition(format!(
            "`{}` is a pricing instance; simulate needs an economy",
            spec.name()
        )))
    })?;
    let inst = pricing(&spec, &a.common)?;
    let menu = parse_menu(&a.menu, econ.q_max)?;
    let mut env = Envelope::new("simulate", &a.common, Some(spec));
    env.set("menu", &menu);
    env.set("probes", a.probes);
    let outcome = full_game_outcome(&econ, &menu)?;
    let walrasian = verify_walrasian(&econ, &menu, &outcome, a.probes)?;
    let reduced_revenue = segment_outcome(&inst, &menu)?.revenue;
    if !walrasian.passed() {
        return Err(CliError {
            kind: ErrorKind::Internal,
            tag: "equilibrium".into(),
            message: walrasian.violation.clone().unwrap_or_default(),
            details: serde_json::to_value(&walrasian).ok(),
        });
    }
    env.finish(SimulateResult {
        menu,
        outcome,
        reduced_revenue,
        walrasian,
    })
}

fn oracle(a: OracleArgs) -> CliResult<()> {
    if a.qualities == 0 || a.prices == 0 {
        return Err(CliError::usage("--qualities and --prices must be at least 1"));
    }
    let spec = load_spec(&a.source, true)?;
    let inst = pricing(&spec, &a.common)?;
    let objective = match a.objective {
        ObjectiveArg::Revenue => Objective::Revenue,
        ObjectiveArg::Welfare => Objective::Welfare,
    };
    let mut env = Envelope::new("oracle", &a.common, Some(spec));
    env.set("k", a.k);
    env.set("objective", objective);
    env.set("types", a.types);
    env.set("qualities", a.qualities);
    env.set("prices", a.prices);
    let qs: Vec<f64> = (1..=a.qualities)
        .map(|i| inst.q_max * i as f64 / a.qualities as f64)
        .collect();
    let top = qs.iter().map(|&q| inst.value(q, inst.hi())).fold(0.0, f64::max);
    let ps: Vec<f64> = (0..a.prices).map(|j| top * j as f64 / a.prices as f64).collect();
    let di = discretize_types(&inst, a.types)?.with_grid(&inst, &qs, &ps);
    let (menu, value) = brute_force_optimal(&di, a.k, objective)?;
    let dp_value = (objective == Objective::Revenue).then(|| solve_on_grid(&di, a.k).1);
    env.finish(OracleResult {
        objective,
        k: a.k,
        menus_enumerated: u64::try_from(di.menu_count(a.k)).unwrap_or(u64::MAX),
        types: di.types.clone(),
        qualities: di.qualities.clone(),
        prices: di.prices.clone(),
        menu,
        value,
        dp_value,
    })
}

fn validate(a: ValidateArgs) -> CliResult<()> {
    let spec = load_spec(&a.source, false)?;
    let mut env = Envelope::new("validate", &a.common, Some(spec.clone()));
    env.set("grid", a.grid);
    let (inst, economy) = match &spec {
        InstanceSpec::Pricing(p) => {
            p.distribution.check()?;
            let inst = PricingInstance {
                name: Some(p.name.clone()),
                valuation: p.valuation.clone(),
                dist: p.distribution.clone(),
                c: p.c,
                q_max: p.q_max,
                lambda: p.lambda,
                settings: settings(&a.common)?,
            };
            (inst, None)
        }
        InstanceSpec::Economy(_) => {
            let econ = spec.economy().expect("economy variant");
            econ.consumers.check()?;
            econ.producers.check()?;
            let report = validate_economy(&econ, a.grid)?;
            let inst = PricingInstance {
                name: Some(spec.name().to_string()),
                valuation: Valuation::Reduced {
                    economy: Box::new(econ.clone()),
                },
                dist: econ.producers.clone(),
                c: econ.c,
                q_max: econ.q_max,
                lambda: econ.lambda,
                settings: settings(&a.common)?,
            };
            (inst, Some(report))
        }
    };
    let pricing = validate_single_crossing(&inst, a.grid)?;
    let passed = pricing.passed() && economy.as_ref().is_none_or(|r| r.passed());
    let failure = (!passed).then(|| {
        let first = pricing
            .violations
            .first()
            .or_else(|| economy.as_ref().and_then(|r| r.violations.first()));
        CliError {
            kind: ErrorKind::Validation,
            tag: "validation".into(),
            message: format!("validation failed: {first:?}"),
            details: None,
        }
    });
    env.finish(ValidateResult {
        passed,
        pricing,
        economy,
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn gap_demo(a: GapDemoArgs) -> CliResult<()> {
    check_eps(a.eps)?;
    if !(a.ratio > 0.0) {
        return Err(CliError::usage("--ratio must be positive"));
    }
    let mut env = Envelope::new("gap-demo", &a.common, None);
    env.set("H", &a.h);
    env.set("eps", a.eps);
    env.set("ratio", a.ratio);
    let s = settings(&a.common)?;
    let mut rows = Vec::with_capacity(a.h.len());
    for &h in &a.h {
        let gap = zoo("piecewise_gap", &[("H", h)])?.with_settings(s);
        let single = dp_solve_with(&gap, a.eps, ItemLimit::Count(1), &DpOptions::default())?;
        let rich = segment_outcome(&gap, &gap_rich_menu(h, a.ratio))?.revenue;
        let er = zoo("linear_equal_revenue", &[("H", h)])?.with_settings(s);
        let item = linear_single_item(&er)?;
        rows.push(GapRow {
            h,
            single_item_revenue: single.diagnostics.revenue_exact,
            rich_menu_revenue: rich,
            rich_menu_formula: (1.0 + h.ln()) / 2.0,
            first_best_welfare: first_best_welfare(&er)?,
            revenue_optimal_welfare: segment_outcome(&er, &item)?.welfare,
        });
    }
    env.finish(GapDemoResult { rows })
}
