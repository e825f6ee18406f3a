//! Result documents and their JSON / CSV forms.

use crate::config::{RunConfig, Zone};
use crate::error::CliResult;
use chernq_core::oracle::TwistPhase;
use serde::{Deserialize, Serialize};
use std::fmt::Write;

pub const TOOL: &str = "chernq";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl Meta {
    pub fn new(seed: u64, wall_time_s: Option<f64>) -> Meta {
        Meta { tool: TOOL.into(), version: VERSION.into(), seed, wall_time_s }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxSummary {
    /// Plaquettes per side of the emitted grid.
    pub n: usize,
    pub origin: [f64; 2],
    pub delta_k: f64,
    pub zone: Zone,
    pub oracle_chern: i64,
    /// Largest per-plaquette deviation from the oracle flux (circuit backends).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_abs_deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WannierSummary {
    pub ky: Vec<f64>,
    pub centers: Vec<f64>,
    pub winding: i64,
    pub oracle_centers: Vec<f64>,
    pub oracle_winding: i64,
    /// Grid of the density rows in `grid`.
    pub x_grid: Vec<f64>,
}

/// One run: config echo, a row-major grid (flux map or density rows), the
/// Chern estimate and its rounding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub config: RunConfig,
    pub grid: Vec<Vec<f64>>,
    pub chern_real: Option<f64>,
    pub chern_int: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flux: Option<FluxSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wannier: Option<WannierSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heisenberg: Option<TwistPhase>,
    pub meta: Meta,
}

/// Round half away from zero.
pub fn round_chern(x: f64) -> i64 {
    x.round() as i64
}

pub fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn grid_csv(grid: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for row in grid {
        let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record: Option<ResultRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub config: RunConfig,
    pub parameter: String,
    pub values: Vec<f64>,
    pub points: Vec<SweepPoint>,
    pub meta: Meta,
}

impl SweepRecord {
    /// Columns: value, chern_real, chern_int (empty on failed points).
    pub fn csv(&self) -> String {
        let mut out = format!("# {} chern_real chern_int\n", self.parameter);
        for p in &self.points {
            match &p.record {
                Some(r) => writeln!(out, "{} {} {}", p.value, opt(r.chern_real), opt(r.chern_int)).ok(),
                None => writeln!(out, "{} nan nan", p.value).ok(),
            };
        }
        out
    }
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map_or_else(|| "nan".to_string(), |v| v.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellError {
    pub i_m: usize,
    pub i_phi: usize,
    pub message: String,
}

/// `chern_*[i_m][i_phi]`; `boundary_m[i_phi] = 3 sqrt(3) |sin phi|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagramRecord {
    pub config: RunConfig,
    pub m_values: Vec<f64>,
    pub phi_values: Vec<f64>,
    pub chern_real: Vec<Vec<Option<f64>>>,
    pub chern_int: Vec<Vec<Option<i64>>>,
    pub expected: Vec<Vec<i64>>,
    pub boundary_m: Vec<f64>,
    pub errors: Vec<CellError>,
    pub meta: Meta,
}

impl PhaseDiagramRecord {
    /// Gnuplot-style blocks: one line per cell, blank line between m rows.
    pub fn csv(&self) -> String {
        let mut out = String::from("# m phi chern_real chern_int expected boundary_m\n");
        for (i, m) in self.m_values.iter().enumerate() {
            for (j, phi) in self.phi_values.iter().enumerate() {
                writeln!(
                    out,
                    "{m} {phi} {} {} {} {}",
                    opt(self.chern_real[i][j]),
                    opt(self.chern_int[i][j]),
                    self.expected[i][j],
                    self.boundary_m[j]
                )
                .ok();
            }
            out.push('\n');
        }
        out
    }
}
