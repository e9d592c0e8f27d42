//! Report emission: machine JSON, per-factor CSV, and aligned text tables
//! with significance stars.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::exp1::Exp1Report;
use super::exp3::Exp3Report;
use crate::audit::SensitivityProfile;
use crate::error::Result;
use crate::util::sig4;

/// One named pass/fail band for `--check` runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl BandCheck {
    pub fn new(name: &str, pass: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            pass,
            detail,
        }
    }
}

/// Renders band checks as one line each; true when all passed.
pub fn print_checks(checks: &[BandCheck]) -> bool {
    let mut all = true;
    for c in checks {
        eprintln!("[check] {:<32} {} ({})", c.name, if c.pass { "PASS" } else { "FAIL" }, c.detail);
        all &= c.pass;
    }
    all
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Paper-style table: one row per factor, before/after F and stars.
fn exp1_text_table(report: &Exp1Report) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<14} {:>10} {:>6} {:>12} {:>6} {:>12}\n",
        "factor", "F(before)", "sig", "F(after)", "sig", "gap"
    ));
    for (i, before) in report.profile_before.factors.iter().enumerate() {
        let after = &report.profile_after_sdrs.factors[i];
        let diag = &report.diagnosis.factors[i];
        out.push_str(&format!(
            "{:<14} {:>10} {:>6} {:>12} {:>6} {:>12}\n",
            before.factor,
            sig4(before.f),
            SensitivityProfile::stars(before),
            sig4(after.f),
            SensitivityProfile::stars(after),
            diag.class.to_string(),
        ));
    }
    out.push('\n');
    out.push_str(&format!(
        "accuracy: baseline {}  combined {}  task-only {}\n",
        sig4(report.arms.baseline_accuracy),
        sig4(report.arms.sdrs_accuracy),
        sig4(report.arms.task_only_accuracy),
    ));
    out.push_str(&format!(
        "synthetic data: {} diversity samples, {} counterfactual pairs\n",
        report.type1_samples, report.counterfactual_pairs
    ));
    out.push('\n');
    out.push_str("sensitivity transfer (before -> after combined objective):\n");
    out.push_str(&report.transfer.text_table());
    out
}

fn exp1_csv(report: &Exp1Report) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record([
        "factor",
        "f_before",
        "p_before",
        "sig_before",
        "f_after_sdrs",
        "sig_after_sdrs",
        "f_after_task_only",
        "sig_after_task_only",
        "gap",
        "coverage_drop",
        "delta_f",
        "delta_pct",
        "transfer_up",
    ])?;
    for (i, before) in report.profile_before.factors.iter().enumerate() {
        let sdrs = &report.profile_after_sdrs.factors[i];
        let task = &report.profile_after_task_only.factors[i];
        let diag = &report.diagnosis.factors[i];
        let transfer = &report.transfer.rows[i];
        writer.write_record([
            before.factor.clone(),
            format!("{}", before.f),
            format!("{}", before.p_raw),
            SensitivityProfile::stars(before).to_string(),
            format!("{}", sdrs.f),
            SensitivityProfile::stars(sdrs).to_string(),
            format!("{}", task.f),
            SensitivityProfile::stars(task).to_string(),
            diag.class.to_string(),
            format!("{}", diag.coverage_drop),
            format!("{}", transfer.delta_f),
            format!("{}", transfer.delta_pct),
            transfer.increased.to_string(),
        ])?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| crate::error::DoeError::InvalidConfig(e.to_string()))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

/// Writes exp1_report.json / exp1_factors.csv / exp1_table.txt.
pub fn emit_exp1(report: &Exp1Report, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let json = dir.join("exp1_report.json");
    let csv_path = dir.join("exp1_factors.csv");
    let txt = dir.join("exp1_table.txt");
    write_json(report, &json)?;
    fs::write(&csv_path, exp1_csv(report)?)?;
    fs::write(&txt, exp1_text_table(report))?;
    Ok(vec![json, csv_path, txt])
}

fn exp3_text_table(report: &Exp3Report) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<14} {:>12} {:>14} {:>10}\n",
        "factor", "F(perfect)", "F(entangled)", "dF"
    ));
    for row in &report.rows {
        out.push_str(&format!(
            "{:<14} {:>12} {:>14} {:>10}\n",
            row.factor,
            sig4(row.f_perfect),
            sig4(row.f_entangled),
            sig4(row.delta_f),
        ));
    }
    out.push('\n');
    out.push_str(&format!(
        "audit-split accuracy: perfect {}  entangled {}\n",
        sig4(report.accuracy_perfect),
        sig4(report.accuracy_entangled)
    ));
    out
}

fn exp3_csv(report: &Exp3Report) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["factor", "f_perfect", "f_entangled", "delta_f"])?;
    for row in &report.rows {
        writer.write_record([
            row.factor.clone(),
            format!("{}", row.f_perfect),
            format!("{}", row.f_entangled),
            format!("{}", row.delta_f),
        ])?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| crate::error::DoeError::InvalidConfig(e.to_string()))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

/// Writes exp3_report.json / exp3_factors.csv / exp3_table.txt.
pub fn emit_exp3(report: &Exp3Report, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let json = dir.join("exp3_report.json");
    let csv_path = dir.join("exp3_factors.csv");
    let txt = dir.join("exp3_table.txt");
    write_json(report, &json)?;
    fs::write(&csv_path, exp3_csv(report)?)?;
    fs::write(&txt, exp3_text_table(report))?;
    Ok(vec![json, csv_path, txt])
}
