//! Input-region analysis: per-cluster error statistics and ED histograms.
//!
//! The operand space is split into a `g x g` grid of clusters, each holding
//! `s` consecutive values of either operand (`g = 2^n / s`). Cluster NED is
//! normalized by the cluster's own largest exact product, and cluster PSNR
//! uses that same product as its peak by default.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fabric::CellGrid;
use crate::metrics::{fmt_sig6, parse_real, psnr_with_peak_sq, PSNR_PEAK_SQ};
use crate::par;

pub const DEFAULT_CLUSTER_SIZE: u64 = 16;
pub const DEFAULT_NED_THRESHOLD: f64 = 1.0;
pub const DEFAULT_PSNR_THRESHOLD: f64 = 25.0;

/// Peak used for per-cluster PSNR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PsnrPeak {
    /// `10 log10(pmax_cluster^2 / mse)`.
    #[default]
    ClusterPmax,
    /// `10 log10(255^2 / mse)`, the global formula applied per cluster.
    Fixed255,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub width: u32,
    pub size: u64,
    #[serde(default)]
    pub psnr_peak: PsnrPeak,
}

impl ClusterSpec {
    pub fn new(width: u32, size: u64) -> Result<Self> {
        let spec = ClusterSpec {
            width,
            size,
            psnr_peak: PsnrPeak::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_psnr_peak(mut self, peak: PsnrPeak) -> Self {
        self.psnr_peak = peak;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let span = 1u64.checked_shl(self.width).unwrap_or(0);
        if self.width == 0 || self.width > 16 || self.size == 0 || !span.is_multiple_of(self.size) {
            return Err(Error::InvalidClusterSpec {
                size: self.size,
                width: self.width,
            });
        }
        Ok(())
    }

    /// Clusters per operand axis.
    pub fn side(&self) -> u64 {
        (1u64 << self.width) / self.size
    }

    pub fn cluster_count(&self) -> u64 {
        self.side() * self.side()
    }

    /// Largest exact product inside cluster `(ia, ib)`.
    pub fn pmax(&self, ia: u64, ib: u64) -> u64 {
        (self.size * ia + self.size - 1) * (self.size * ib + self.size - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterCell {
    pub ia: u64,
    pub ib: u64,
    pub count: u64,
    pub sum_ed: u128,
    pub sum_ed_sq: u128,
    pub max_ed: u64,
    pub mean_ed: f64,
    pub pmax_cluster: u64,
    pub ned: f64,
    pub mse: f64,
    #[serde(with = "crate::metrics::inf_as_null")]
    pub psnr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub spec: ClusterSpec,
    /// Row-major: index `ia * g + ib`.
    pub cells: Vec<ClusterCell>,
    pub ned_avg: f64,
    pub ned_max: f64,
    /// Mean over cells with finite PSNR; `None` when every cell is error-free.
    pub psnr_avg: Option<f64>,
    pub psnr_min: Option<f64>,
    pub infinite_psnr_cells: usize,
}

impl ClusterReport {
    pub fn side(&self) -> u64 {
        self.spec.side()
    }

    pub fn cell(&self, ia: u64, ib: u64) -> &ClusterCell {
        &self.cells[(ia * self.side() + ib) as usize]
    }

    pub fn count_ned_over(&self, threshold: f64) -> usize {
        self.cells.iter().filter(|c| c.ned > threshold).count()
    }

    pub fn count_psnr_under(&self, threshold: f64) -> usize {
        self.cells.iter().filter(|c| c.psnr < threshold).count()
    }

    /// `g x g` matrix of one cell field, rows indexed by `ia`.
    pub fn matrix(&self, field: impl Fn(&ClusterCell) -> f64) -> Vec<Vec<f64>> {
        let g = self.side() as usize;
        self.cells.chunks(g).map(|row| row.iter().map(&field).collect()).collect()
    }

    pub fn summary(&self, ned_threshold: f64, psnr_threshold: f64) -> ClusterSummary {
        let (ned_violations, psnr_violations) =
            threshold_counts(self, ned_threshold, psnr_threshold);
        ClusterSummary {
            clusters: self.cells.len(),
            ned_avg: self.ned_avg,
            ned_max: self.ned_max,
            psnr_avg: self.psnr_avg,
            psnr_min: self.psnr_min,
            infinite_psnr_cells: self.infinite_psnr_cells,
            ned_threshold,
            psnr_threshold,
            ned_violations,
            psnr_violations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub clusters: usize,
    pub ned_avg: f64,
    pub ned_max: f64,
    pub psnr_avg: Option<f64>,
    pub psnr_min: Option<f64>,
    pub infinite_psnr_cells: usize,
    pub ned_threshold: f64,
    pub psnr_threshold: f64,
    pub ned_violations: usize,
    pub psnr_violations: usize,
}

/// `(cells with ned > ned_threshold, cells with psnr < psnr_threshold)`.
pub fn threshold_counts(report: &ClusterReport, ned_threshold: f64, psnr_threshold: f64) -> (usize, usize) {
    (
        report.count_ned_over(ned_threshold),
        report.count_psnr_under(psnr_threshold),
    )
}

/// Integer totals of one cluster; `finish_cell` turns them into a cell.
fn cluster_totals(grid: &CellGrid, spec: &ClusterSpec, ia: u64, ib: u64) -> (u64, u128, u128, u64) {
    let s = spec.size;
    let (mut count, mut sum, mut sum_sq, mut max) = (0u64, 0u128, 0u128, 0u64);
    for x in s * ia..s * ia + s {
        for y in s * ib..s * ib + s {
            let ed = (x * y).abs_diff(grid.product(x, y));
            count += 1;
            sum += u128::from(ed);
            sum_sq += u128::from(ed) * u128::from(ed);
            max = max.max(ed);
        }
    }
    (count, sum, sum_sq, max)
}

/// Builds a cell from integer totals.
pub fn finish_cell(
    spec: &ClusterSpec,
    ia: u64,
    ib: u64,
    (count, sum_ed, sum_ed_sq, max_ed): (u64, u128, u128, u64),
) -> ClusterCell {
    let pmax = spec.pmax(ia, ib);
    let mean_ed = sum_ed as f64 / count as f64;
    let mse = sum_ed_sq as f64 / count as f64;
    let peak_sq = match spec.psnr_peak {
        PsnrPeak::ClusterPmax => (pmax as f64) * (pmax as f64),
        PsnrPeak::Fixed255 => PSNR_PEAK_SQ,
    };
    ClusterCell {
        ia,
        ib,
        count,
        sum_ed,
        sum_ed_sq,
        max_ed,
        mean_ed,
        pmax_cluster: pmax,
        ned: mean_ed / pmax as f64,
        mse,
        psnr: psnr_with_peak_sq(mse, peak_sq).expect("mse is non-negative"),
    }
}

/// Assembles report-level statistics from cells in row-major order.
pub fn assemble_report(spec: ClusterSpec, cells: Vec<ClusterCell>) -> ClusterReport {
    let n = cells.len() as f64;
    let ned_avg = cells.iter().map(|c| c.ned).sum::<f64>() / n;
    let ned_max = cells.iter().map(|c| c.ned).fold(0.0, f64::max);
    let finite: Vec<f64> = cells.iter().map(|c| c.psnr).filter(|p| p.is_finite()).collect();
    let infinite_psnr_cells = cells.len() - finite.len();
    let (psnr_avg, psnr_min) = if finite.is_empty() {
        (None, None)
    } else {
        (
            Some(finite.iter().sum::<f64>() / finite.len() as f64),
            Some(finite.iter().copied().fold(f64::INFINITY, f64::min)),
        )
    };
    ClusterReport {
        spec,
        cells,
        ned_avg,
        ned_max,
        psnr_avg,
        psnr_min,
        infinite_psnr_cells,
    }
}

/// Per-cluster sweep of every operand pair of `grid`.
pub fn cluster_sweep(grid: &CellGrid, spec: &ClusterSpec) -> Result<ClusterReport> {
    spec.validate()?;
    if spec.width != grid.width() {
        return Err(Error::InvalidClusterSpec {
            size: spec.size,
            width: grid.width(),
        });
    }
    let g = spec.side();
    let cells = par::map_range(0..g * g, |k| {
        let (ia, ib) = (k / g, k % g);
        finish_cell(spec, ia, ib, cluster_totals(grid, spec, ia, ib))
    });
    Ok(assemble_report(*spec, cells))
}

pub const CLUSTER_CSV_HEADER: &str = "ia,ib,mean_ed,pmax_cluster,ned,mse,psnr";

pub fn cluster_csv(report: &ClusterReport) -> String {
    let mut out = format!("{CLUSTER_CSV_HEADER}\n");
    for c in &report.cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            c.ia,
            c.ib,
            fmt_sig6(c.mean_ed),
            c.pmax_cluster,
            fmt_sig6(c.ned),
            fmt_sig6(c.mse),
            fmt_sig6(c.psnr)
        ));
    }
    out
}

/// One parsed row of [`cluster_csv`].
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterCsvRow {
    pub ia: u64,
    pub ib: u64,
    pub mean_ed: f64,
    pub pmax_cluster: u64,
    pub ned: f64,
    pub mse: f64,
    pub psnr: f64,
}

pub fn parse_cluster_csv(text: &str) -> Result<Vec<ClusterCsvRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(CLUSTER_CSV_HEADER) {
        return Err(Error::Parse("cluster csv header mismatch".into()));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(Error::Parse(format!("cluster row '{line}' needs 7 fields")));
            }
            let int = |s: &str| {
                s.parse::<u64>()
                    .map_err(|e| Error::Parse(format!("cluster row '{line}': {e}")))
            };
            Ok(ClusterCsvRow {
                ia: int(f[0])?,
                ib: int(f[1])?,
                mean_ed: parse_real(f[2])?,
                pmax_cluster: int(f[3])?,
                ned: parse_real(f[4])?,
                mse: parse_real(f[5])?,
                psnr: parse_real(f[6])?,
            })
        })
        .collect()
}

/// Whitespace-separated matrix, one line per row.
pub fn matrix_text(matrix: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for row in matrix {
        let line: Vec<String> = row.iter().map(|v| fmt_sig6(*v)).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_matrix_text(text: &str) -> Result<Vec<Vec<f64>>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split_whitespace().map(parse_real).collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdHistogram {
    pub bin_width: u64,
    /// `(lower_edge, count)`; bin `k` covers `[k * bin_width, (k + 1) * bin_width)`.
    pub bins: Vec<(u64, u64)>,
    pub total_count: u64,
    pub min_ed: u64,
    pub max_ed: u64,
    pub mean_ed: f64,
}

/// Exact count of every error distance over the full sweep.
pub fn ed_tally(grid: &CellGrid) -> BTreeMap<u64, u64> {
    let span = 1u64 << grid.width();
    let rows = par::map_range(0..span, |x| {
        let mut t = BTreeMap::new();
        for y in 0..span {
            *t.entry((x * y).abs_diff(grid.product(x, y))).or_insert(0u64) += 1;
        }
        t
    });
    let mut total = BTreeMap::new();
    for row in rows {
        for (ed, c) in row {
            *total.entry(ed).or_insert(0) += c;
        }
    }
    total
}

/// Plotting default: about 64 bins across the observed range.
pub fn default_bin_width(max_ed: u64) -> u64 {
    max_ed.div_ceil(64).max(1)
}

pub fn histogram_from_tally(tally: &BTreeMap<u64, u64>, bin_width: Option<u64>) -> Result<EdHistogram> {
    let (Some((&min_ed, _)), Some((&max_ed, _))) = (tally.first_key_value(), tally.last_key_value())
    else {
        return Err(Error::EmptySweep);
    };
    let bin_width = bin_width.unwrap_or_else(|| default_bin_width(max_ed));
    if bin_width == 0 {
        return Err(Error::InvalidMetric("bin width must be at least 1".into()));
    }
    let nbins = (max_ed / bin_width + 1) as usize;
    let mut counts = vec![0u64; nbins];
    let mut weighted = 0u128;
    for (&ed, &c) in tally {
        counts[(ed / bin_width) as usize] += c;
        weighted += u128::from(ed) * u128::from(c);
    }
    let total_count: u64 = counts.iter().sum();
    Ok(EdHistogram {
        bin_width,
        bins: counts
            .into_iter()
            .enumerate()
            .map(|(k, c)| (k as u64 * bin_width, c))
            .collect(),
        total_count,
        min_ed,
        max_ed,
        mean_ed: weighted as f64 / total_count as f64,
    })
}

/// ED histogram over all `2^(2n)` pairs. `None` picks [`default_bin_width`].
pub fn ed_histogram(grid: &CellGrid, bin_width: Option<u64>) -> Result<EdHistogram> {
    histogram_from_tally(&ed_tally(grid), bin_width)
}

pub fn histogram_csv(h: &EdHistogram) -> String {
    let mut out = String::from("lower_edge,upper_edge,count\n");
    for &(lo, c) in &h.bins {
        out.push_str(&format!("{},{},{}\n", lo, lo + h.bin_width, c));
    }
    out
}

pub fn parse_histogram_csv(text: &str) -> Result<Vec<(u64, u64, u64)>> {
    let mut lines = text.lines();
    if lines.next() != Some("lower_edge,upper_edge,count") {
        return Err(Error::Parse("histogram csv header mismatch".into()));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|line| {
            let f: Vec<u64> = line
                .split(',')
                .map(|s| s.parse::<u64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("histogram row '{line}': {e}")))?;
            match f[..] {
                [lo, hi, c] => Ok((lo, hi, c)),
                _ => Err(Error::Parse(format!("histogram row '{line}' needs 3 fields"))),
            }
        })
        .collect()
}
