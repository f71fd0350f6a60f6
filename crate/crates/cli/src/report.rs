use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use evoreg::diagnostics::{DiagnosticsReport, LevelRecord, PhenomenonReport};
use evoreg::scenarios::ScenarioSpec;
use serde::Serialize;

use crate::config::Config;
use crate::suites::SuiteResult;

#[derive(Debug, Serialize)]
pub struct ConfigEcho {
    pub file: Config,
    /// The scenario after presets and overrides.
    pub resolved: ScenarioSpec,
}

#[derive(Debug, Serialize)]
pub struct Diagnostics {
    pub refinement: DiagnosticsReport,
    /// Present for rough forcing only.
    pub phenomenon: Option<PhenomenonReport>,
    pub residual_tolerance: f64,
    pub residuals_within_tolerance: bool,
}

#[derive(Debug, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub strict: bool,
    pub passed: bool,
    pub failures: Vec<String>,
}

/// Top-level keys are fixed: config, suites, diagnostics, timings, meta.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub config: ConfigEcho,
    pub suites: BTreeMap<String, SuiteResult>,
    pub diagnostics: Diagnostics,
    /// Wall-clock seconds; the only field that varies between identical runs.
    pub timings: BTreeMap<String, f64>,
    pub meta: Meta,
}

/// Writes next to the target and renames, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path.file_name().context("output path has no file name")?.to_string_lossy();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    std::fs::write(&tmp, contents).with_context(|| format!("cannot write {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("cannot move report into {}", path.display()))?;
    Ok(())
}

pub const CSV_HEADER: &str = "level,n_t,n_x,u_1,Cu_half,Cstarv_0,v_half,kappa";

pub fn refinement_csv(levels: &[LevelRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in levels {
        let n = &r.norms;
        let kappa = r.kappa.map(|k| format!("{k:e}")).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{:e},{:e},{:e},{:e},{}",
            r.level, r.n_t, r.n_x, n.u_1, n.cu_half, n.cstar_v_0, n.v_half, kappa
        )
        .expect("writing to a string");
    }
    out
}
