//! Document renderers for the command outputs.
//!
//! CSV and JSON carry numbers at full precision (shortest representation
//! that parses back to the same `f64`). Markdown rounds weights to two
//! decimals for reading.

use serde::Serialize;
use serde_json::json;

use crate::oracle::{CellOutcome, GridValidation};
use crate::risk_model::LoanProfile;
use crate::serviceability::{GridSpec, RiskWeightGrid};

fn csv_document(rows: Vec<Vec<String>>) -> String {
    let mut writer = csv::WriterBuilder::new()
        .flexible(true)
        .from_writer(Vec::new());
    for row in rows {
        writer.write_record(&row).expect("in-memory csv write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory csv flush"))
        .expect("csv output is utf-8")
}

fn json_document<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable document");
    text.push('\n');
    text
}

fn full(x: f64) -> String {
    format!("{x}")
}

// 1.0 -> "1.0", 0.25 -> "0.25"
fn axis_label(x: f64) -> String {
    if x.fract() == 0.0 {
        format!("{x:.1}")
    } else {
        format!("{x}")
    }
}

fn percent_label(sd: f64) -> String {
    let pct = (sd * 100.0 * 1e6).round() / 1e6;
    format!("{pct}%")
}

pub fn grid_csv(grid: &RiskWeightGrid) -> String {
    let mut rows = Vec::with_capacity(grid.nsr_axis.len() + 1);
    rows.push(
        std::iter::once("nsr".to_string())
            .chain(grid.sd_axis.iter().map(|&s| full(s)))
            .collect(),
    );
    for (nsr, row) in grid.nsr_axis.iter().zip(&grid.values) {
        rows.push(
            std::iter::once(full(*nsr))
                .chain(row.iter().map(|&v| full(v)))
                .collect(),
        );
    }
    csv_document(rows)
}

pub fn grid_json(grid: &RiskWeightGrid) -> String {
    json_document(grid)
}

pub fn grid_markdown(grid: &RiskWeightGrid) -> String {
    let mut out = String::from("| NSR |");
    for &sd in &grid.sd_axis {
        out.push_str(&format!(" {} |", percent_label(sd)));
    }
    out.push_str("\n|----:|");
    for _ in &grid.sd_axis {
        out.push_str("----:|");
    }
    out.push('\n');
    for (nsr, row) in grid.nsr_axis.iter().zip(&grid.values) {
        out.push_str(&format!("| {} |", axis_label(*nsr)));
        for v in row {
            out.push_str(&format!(" {v:.2} |"));
        }
        out.push('\n');
    }
    out
}

pub fn score_csv(profile: &LoanProfile) -> String {
    let mut rows = vec![vec!["quantity".into(), "name".into(), "value".into()]];
    let plain = |q: &str, v: f64| vec![q.to_string(), String::new(), full(v)];
    rows.push(plain("base_pd", profile.base_pd()));
    rows.push(plain("base_lgd", profile.base_lgd()));
    for w in profile.pd_weights().iter() {
        rows.push(vec!["pd_weight".into(), w.name.clone(), full(w.factor)]);
    }
    for w in profile.lgd_weights().iter() {
        rows.push(vec!["lgd_weight".into(), w.name.clone(), full(w.factor)]);
    }
    rows.push(plain("adjusted_pd", profile.adjusted_pd()));
    rows.push(plain("adjusted_lgd", profile.adjusted_lgd()));
    rows.push(plain("expected_loss", profile.expected_loss()));
    csv_document(rows)
}

pub fn score_json(profile: &LoanProfile) -> String {
    json_document(&json!({
        "base_pd": profile.base_pd(),
        "base_lgd": profile.base_lgd(),
        "pd_floor": profile.pd_floor(),
        "pd_cap": profile.pd_cap(),
        "pd_weights": profile.pd_weights(),
        "lgd_weights": profile.lgd_weights(),
        "adjusted_pd": profile.adjusted_pd(),
        "adjusted_lgd": profile.adjusted_lgd(),
        "expected_loss": profile.expected_loss(),
    }))
}

pub fn score_markdown(profile: &LoanProfile) -> String {
    let mut out = String::from("| Quantity | Name | Value |\n|---|---|---:|\n");
    out.push_str(&format!("| Base PD | | {} |\n", profile.base_pd()));
    out.push_str(&format!("| Base LGD | | {} |\n", profile.base_lgd()));
    for w in profile.pd_weights().iter() {
        out.push_str(&format!("| PD weight | {} | {:.4} |\n", w.name, w.factor));
    }
    for w in profile.lgd_weights().iter() {
        out.push_str(&format!("| LGD weight | {} | {:.4} |\n", w.name, w.factor));
    }
    out.push_str(&format!(
        "| Adjusted PD | | {:.6} |\n",
        profile.adjusted_pd()
    ));
    out.push_str(&format!(
        "| Adjusted LGD | | {:.6} |\n",
        profile.adjusted_lgd()
    ));
    out.push_str(&format!(
        "| Expected loss | | {:.6} |\n",
        profile.expected_loss()
    ));
    out
}

const VALIDATION_HEADER: [&str; 11] = [
    "nsr",
    "sd",
    "status",
    "samples",
    "empirical_pd_num",
    "empirical_pd_den",
    "empirical_weight",
    "standard_error",
    "analytic_weight",
    "z_score",
    "note",
];

pub fn validation_csv(v: &GridValidation) -> String {
    let mut rows = vec![VALIDATION_HEADER
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()];
    for cell in &v.cells {
        let mut row = vec![full(cell.nsr), full(cell.sd)];
        match &cell.outcome {
            CellOutcome::Report(r) => {
                row.push("ok".into());
                row.push(r.samples.to_string());
                for x in [
                    r.empirical_pd_num,
                    r.empirical_pd_den,
                    r.empirical_weight,
                    r.standard_error,
                    r.analytic_weight,
                    r.z_score,
                ] {
                    row.push(full(x));
                }
                row.push(if r.is_exception() {
                    "exception".into()
                } else {
                    String::new()
                });
            }
            CellOutcome::Skipped(reason) => {
                row.push("skipped".into());
                row.extend(std::iter::repeat_n(String::new(), 7));
                row.push(reason.to_string());
            }
            CellOutcome::Failed(e) => {
                row.push("failed".into());
                row.extend(std::iter::repeat_n(String::new(), 7));
                row.push(e.to_string());
            }
        }
        rows.push(row);
    }
    csv_document(rows)
}

fn finite_or_null(x: f64) -> serde_json::Value {
    if x.is_finite() {
        json!(x)
    } else {
        serde_json::Value::Null
    }
}

pub fn validation_json(v: &GridValidation, grid: &GridSpec) -> String {
    let cells: Vec<_> = v
        .cells
        .iter()
        .map(|cell| match &cell.outcome {
            CellOutcome::Report(r) => json!({
                "nsr": cell.nsr,
                "sd": cell.sd,
                "status": "ok",
                "samples": r.samples,
                "empirical_pd_num": r.empirical_pd_num,
                "empirical_pd_den": r.empirical_pd_den,
                "empirical_weight": r.empirical_weight,
                "standard_error": r.standard_error,
                "analytic_weight": r.analytic_weight,
                "z_score": finite_or_null(r.z_score),
                "exception": r.is_exception(),
            }),
            CellOutcome::Skipped(reason) => json!({
                "nsr": cell.nsr, "sd": cell.sd, "status": "skipped", "reason": reason.to_string(),
            }),
            CellOutcome::Failed(e) => json!({
                "nsr": cell.nsr, "sd": cell.sd, "status": "failed", "reason": e.to_string(),
            }),
        })
        .collect();
    json_document(&json!({
        "stress_factor": grid.stress_factor,
        "base_nsr": grid.base_nsr,
        "samples": v.samples,
        "seed": v.seed,
        "cells": cells,
        "summary": v.summary(),
    }))
}

pub fn validation_markdown(v: &GridValidation) -> String {
    let mut out = String::from(
        "| NSR | SD | Status | Empirical | Std. error | Analytic | z |\n|---:|---:|---|---:|---:|---:|---:|\n",
    );
    for cell in &v.cells {
        let lead = format!("| {} | {} |", axis_label(cell.nsr), percent_label(cell.sd));
        match &cell.outcome {
            CellOutcome::Report(r) => out.push_str(&format!(
                "{lead} {} | {:.4} | {:.2e} | {:.4} | {:.2} |\n",
                if r.is_exception() { "exception" } else { "ok" },
                r.empirical_weight,
                r.standard_error,
                r.analytic_weight,
                r.z_score
            )),
            CellOutcome::Skipped(reason) => {
                out.push_str(&format!("{lead} skipped: {reason} | | | | |\n"))
            }
            CellOutcome::Failed(e) => out.push_str(&format!("{lead} failed: {e} | | | | |\n")),
        }
    }
    out
}

pub fn validation_summary_line(v: &GridValidation) -> String {
    let s = v.summary();
    format!(
        "validated {} cells: {} reported, {} skipped, {} failed, {} with |z| > 3",
        s.cells, s.reported, s.skipped, s.failed, s.exceptions
    )
}
