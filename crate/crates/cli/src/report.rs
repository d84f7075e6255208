//! Pole tables (CSV) and run reports (JSON).

use crate::config::RunConfig;
use crate::CliError;
use dtn_core::linalg::C64;
use dtn_core::multilevel::MultilevelReport;
use dtn_core::oracle::DiskPole;
use dtn_core::sim::ValidatedPole;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const POLE_HEADER: &str = "re_k,im_k,residual,group_size,cell_center_re,cell_center_im";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoleRow {
    pub re_k: f64,
    pub im_k: f64,
    pub residual: f64,
    pub group_size: usize,
    pub cell_center_re: f64,
    pub cell_center_im: f64,
}

impl PoleRow {
    pub fn k(&self) -> C64 {
        C64::new(self.re_k, self.im_k)
    }
}

impl From<&ValidatedPole> for PoleRow {
    fn from(p: &ValidatedPole) -> Self {
        Self {
            re_k: p.lambda.re,
            im_k: p.lambda.im,
            residual: p.residual,
            group_size: p.group_size,
            cell_center_re: p.cell_of_origin.center.re,
            cell_center_im: p.cell_of_origin.center.im,
        }
    }
}

impl From<&DiskPole> for PoleRow {
    fn from(p: &DiskPole) -> Self {
        Self {
            re_k: p.k.re,
            im_k: p.k.im,
            residual: p.newton_residual,
            group_size: 1,
            cell_center_re: p.k.re,
            cell_center_im: p.k.im,
        }
    }
}

pub fn write_poles_csv(rows: &[PoleRow]) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(vec![]);
    for r in rows {
        w.serialize(r)?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| CliError::Csv(e.to_string()))?)
        .expect("csv output is UTF-8");
    Ok(format!("{POLE_HEADER}\n{body}"))
}

pub fn read_poles_csv(text: &str) -> Result<Vec<PoleRow>, CliError> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != POLE_HEADER {
        return Err(CliError::Csv(format!("unexpected header `{}`", header.join(","))));
    }
    rd.deserialize().map(|r| r.map_err(CliError::from)).collect()
}

pub fn read_poles_file(path: &Path) -> Result<Vec<PoleRow>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    read_poles_csv(&text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub level: usize,
    pub ndof: usize,
    pub mesh_size: f64,
    pub poles: Vec<PoleRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LostRow {
    pub level: usize,
    pub re_k: f64,
    pub im_k: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub config: String,
    pub poles: Vec<PoleRow>,
    pub levels: Vec<LevelSummary>,
    pub candidates: usize,
    pub flagged: usize,
    pub rejected: Vec<String>,
    pub lost: Vec<LostRow>,
}

impl SolveReport {
    pub fn new(config: &RunConfig, run: &MultilevelReport) -> Self {
        Self {
            config: config.to_text(),
            poles: run.poles().iter().map(PoleRow::from).collect(),
            levels: run
                .levels
                .iter()
                .map(|l| LevelSummary {
                    level: l.level,
                    ndof: l.ndof,
                    mesh_size: l.mesh_size,
                    poles: l.poles.iter().map(PoleRow::from).collect(),
                })
                .collect(),
            candidates: run.search.candidates.len(),
            flagged: run.search.candidates.iter().filter(|c| c.flagged).count(),
            rejected: run
                .search
                .rejected
                .iter()
                .map(|r| format!("cell {} (half-width {:.1e}): {}", r.cell.center, r.cell.half_width, r.reason))
                .collect(),
            lost: run
                .lost
                .iter()
                .map(|l| LostRow {
                    level: l.level,
                    re_k: l.from.re,
                    im_k: l.from.im,
                    reason: l.reason.clone(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> Result<String, CliError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        Ok(serde_json::from_str(text)?)
    }
}
