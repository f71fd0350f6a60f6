use std::time::Instant;

use anyhow::Result;
use evoreg::verification::{CheckRow, Suite};
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct CriterionResult {
    pub number: usize,
    pub title: &'static str,
    pub passed: bool,
    pub rows: Vec<CheckRow>,
}

#[derive(Debug, Serialize)]
pub struct SuiteResult {
    pub passed: bool,
    pub criteria: Vec<CriterionResult>,
}

impl SuiteResult {
    pub fn failures(&self, suite: Suite) -> Vec<String> {
        self.criteria
            .iter()
            .flat_map(|c| c.rows.iter().filter(|r| !r.passed).map(move |r| format!("{suite}: {}: {}", c.title, r.invariant)))
            .collect()
    }
}

/// Runs every criterion of `suite`; the second value is the elapsed time.
pub fn run_suite(suite: Suite, level: usize, seed: u64) -> Result<(SuiteResult, f64)> {
    let start = Instant::now();
    let mut criteria = Vec::new();
    for c in suite.criteria() {
        let rows = c.run(level, seed)?;
        criteria.push(CriterionResult {
            number: c.number(),
            title: c.title(),
            passed: rows.iter().all(|r| r.passed),
            rows,
        });
    }
    let passed = criteria.iter().all(|c| c.passed);
    Ok((SuiteResult { passed, criteria }, start.elapsed().as_secs_f64()))
}

pub fn print_table(suite: Suite, result: &SuiteResult) {
    println!("suite {suite}");
    println!(
        "{:<58} {:>14} {:>14} {:>10} {:>11}  result",
        "invariant", "measured", "reference", "relation", "threshold"
    );
    for c in &result.criteria {
        println!("[criterion {}: {}]", c.number, c.title);
        for row in &c.rows {
            println!("{row}");
        }
    }
    println!("suite {suite}: {}", if result.passed { "pass" } else { "FAIL" });
}
