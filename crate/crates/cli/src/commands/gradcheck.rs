use matbp::gradcheck::{check, registry, GradReport};
use serde::Serialize;

/// Seeds per operation.
pub const SEEDS_PER_OP: u64 = 20;

#[derive(Debug, Clone, Serialize)]
pub struct GradcheckSummary {
    pub filter: Option<String>,
    pub ops: usize,
    pub reports: usize,
    pub passed: usize,
    pub failed: usize,
    pub worst_relative_error: f64,
    pub min_order: Option<f64>,
    pub min_taylor_order: Option<f64>,
}

/// An operation is selected when its family equals `pattern` or its name
/// contains it.
pub fn selects(pattern: &str, name: &str, family: &str) -> bool {
    family == pattern || name.contains(pattern)
}

/// Runs every selected operation on seeds `seed .. seed + SEEDS_PER_OP`.
pub fn run(filter: Option<&str>, seed: u64) -> (GradcheckSummary, Vec<GradReport>) {
    let seeds: Vec<u64> = (seed..seed + SEEDS_PER_OP).collect();
    let ops: Vec<_> = registry()
        .into_iter()
        .filter(|op| filter.is_none_or(|p| selects(p, op.name, op.family)))
        .collect();
    let reports: Vec<GradReport> = ops
        .iter()
        .flat_map(|op| check(op, &seeds, op.tolerance.value(), 0.0))
        .collect();
    let passed = reports.iter().filter(|r| r.pass).count();
    let min = |v: Vec<f64>| v.into_iter().reduce(f64::min);
    let summary = GradcheckSummary {
        filter: filter.map(str::to_string),
        ops: ops.len(),
        reports: reports.len(),
        passed,
        failed: reports.len() - passed,
        worst_relative_error: reports.iter().map(|r| r.relative_error).fold(0.0, f64::max),
        min_order: min(reports.iter().filter_map(|r| r.order).collect()),
        min_taylor_order: min(reports.iter().filter_map(|r| r.taylor_order).collect()),
    };
    (summary, reports)
}
