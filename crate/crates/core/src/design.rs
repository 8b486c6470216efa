//! The 20-design library (adder type x approximation degree), its accuracy
//! table, and per-cluster design selection under a quality constraint.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::adder::AdderLibrary;
use crate::cluster::{cluster_sweep, ClusterReport, ClusterSpec, ClusterSummary};
use crate::error::{Error, Result};
use crate::fabric::{build_multiplier, Architecture, MultiplierConfig};
use crate::metrics::{sweep_report, MetricReport, REPORT_CSV_HEADER};

/// Adder-type knob values, in design order.
pub const AMA_TYPES: [&str; 5] = ["AMA1", "AMA2", "AMA3", "AMA4", "AMA5"];

/// Operand width of the design library.
pub const LIBRARY_WIDTH: u32 = 8;

/// Degree knob: how many result LSBs come from approximate cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DegreeKnob {
    D1,
    D2,
    D3,
    D4,
}

impl DegreeKnob {
    pub const ALL: [DegreeKnob; 4] = [DegreeKnob::D1, DegreeKnob::D2, DegreeKnob::D3, DegreeKnob::D4];

    /// Approximated result bits for 8-bit operands.
    pub fn bits(self) -> u32 {
        match self {
            DegreeKnob::D1 => 7,
            DegreeKnob::D2 => 8,
            DegreeKnob::D3 => 9,
            DegreeKnob::D4 => 16,
        }
    }

    pub fn index(self) -> u32 {
        self as u32
    }

    pub fn from_bits(bits: u32) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.bits() == bits)
    }
}

impl fmt::Display for DegreeKnob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "D{}", self.index() + 1)
    }
}

impl FromStr for DegreeKnob {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "D1" | "d1" => Ok(DegreeKnob::D1),
            "D2" | "d2" => Ok(DegreeKnob::D2),
            "D3" | "d3" => Ok(DegreeKnob::D3),
            "D4" | "d4" => Ok(DegreeKnob::D4),
            other => Err(Error::InvalidConfig(format!("unknown degree knob '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DesignId {
    /// 1-based, row-major over (type, degree).
    pub ordinal: u32,
    pub adder: String,
    /// Approximated result bits.
    pub degree: u32,
    pub knob: Option<DegreeKnob>,
}

impl DesignId {
    pub fn label(&self) -> String {
        format!("Design{}", self.ordinal)
    }

    pub fn degree_label(&self) -> String {
        self.knob
            .map(|k| k.to_string())
            .unwrap_or_else(|| self.degree.to_string())
    }
}

impl fmt::Display for DesignId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Design{} ({}/{})", self.ordinal, self.adder, self.degree_label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Design {
    pub id: DesignId,
    pub config: MultiplierConfig,
}

/// The 20 library designs in ordinal order (AMA1/D1 = Design1 .. AMA5/D4 = Design20).
pub fn enumerate_library(library: &AdderLibrary, architecture: Architecture) -> Result<Vec<Design>> {
    let missing: Vec<String> = AMA_TYPES
        .iter()
        .filter(|t| !library.contains(t))
        .map(|t| t.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingAdders(missing));
    }
    let mut designs = Vec::with_capacity(20);
    for (ti, adder) in AMA_TYPES.iter().enumerate() {
        for knob in DegreeKnob::ALL {
            designs.push(Design {
                id: DesignId {
                    ordinal: 4 * ti as u32 + knob.index() + 1,
                    adder: adder.to_string(),
                    degree: knob.bits(),
                    knob: Some(knob),
                },
                config: MultiplierConfig::with_architecture(LIBRARY_WIDTH, *adder, knob.bits(), architecture),
            });
        }
    }
    Ok(designs)
}

/// Full sweep plus cluster sweep of one design.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignEvaluation {
    pub id: DesignId,
    /// Global metrics with the cluster averages attached.
    pub report: MetricReport,
    pub clusters: ClusterReport,
}

pub fn evaluate_design(
    design: &Design,
    library: &AdderLibrary,
    cluster_size: u64,
) -> Result<DesignEvaluation> {
    let grid = build_multiplier(&design.config, library)?;
    let spec = ClusterSpec::new(design.config.width, cluster_size)?;
    let clusters = cluster_sweep(&grid, &spec)?;
    let mut report = sweep_report(&grid)?;
    report.ned_clustered_avg = Some(clusters.ned_avg);
    report.psnr_clustered_avg = clusters.psnr_avg;
    Ok(DesignEvaluation {
        id: design.id.clone(),
        report,
        clusters,
    })
}

/// Evaluates the given designs in order.
pub fn evaluate_designs(
    designs: &[Design],
    library: &AdderLibrary,
    cluster_size: u64,
) -> Result<Vec<DesignEvaluation>> {
    designs
        .iter()
        .map(|d| evaluate_design(d, library, cluster_size))
        .collect()
}

/// Accuracy table for the 20 library designs, ordered by ordinal.
pub fn library_metrics_table(
    library: &AdderLibrary,
    architecture: Architecture,
    cluster_size: u64,
) -> Result<Vec<DesignEvaluation>> {
    evaluate_designs(&enumerate_library(library, architecture)?, library, cluster_size)
}

/// One row of the table export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub id: DesignId,
    pub report: MetricReport,
    pub clusters: ClusterSummary,
}

pub fn table_rows(evals: &[DesignEvaluation], ned_threshold: f64, psnr_threshold: f64) -> Vec<TableRow> {
    evals
        .iter()
        .map(|e| TableRow {
            id: e.id.clone(),
            report: e.report.clone(),
            clusters: e.clusters.summary(ned_threshold, psnr_threshold),
        })
        .collect()
}

pub fn table_csv_header() -> String {
    format!("ordinal,design,type,degree,{REPORT_CSV_HEADER},ned_violations,psnr_violations")
}

pub fn table_csv(rows: &[TableRow]) -> String {
    let mut out = table_csv_header();
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.id.ordinal,
            r.id.label(),
            r.id.adder,
            r.id.degree_label(),
            r.report.csv_row(),
            r.clusters.ned_violations,
            r.clusters.psnr_violations
        ));
    }
    out
}

/// Parsed table CSV row: `(ordinal, type, degree label, report, ned violations, psnr violations)`.
pub type TableCsvRow = (u32, String, String, MetricReport, usize, usize);

pub fn parse_table_csv(text: &str) -> Result<Vec<TableCsvRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(table_csv_header().as_str()) {
        return Err(Error::Parse("table csv header mismatch".into()));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 16 {
                return Err(Error::Parse(format!("table row '{line}' needs 16 fields")));
            }
            let int = |s: &str| {
                s.parse::<usize>()
                    .map_err(|e| Error::Parse(format!("table row '{line}': {e}")))
            };
            Ok((
                int(f[0])? as u32,
                f[2].to_string(),
                f[3].to_string(),
                MetricReport::from_csv_fields(&f[4..14])?,
                int(f[14])?,
                int(f[15])?,
            ))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QualityMetric {
    /// Passes when cluster NED <= threshold.
    Ned,
    /// Passes when cluster PSNR >= threshold.
    Psnr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    /// Prefer the most approximated bits.
    MaxDegree,
    /// Prefer the lowest cost; keyed by design ordinal.
    MinCost(BTreeMap<u32, f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionPolicy {
    pub metric: QualityMetric,
    pub threshold: f64,
    pub objective: Objective,
}

impl SelectionPolicy {
    pub fn ned(threshold: f64) -> Self {
        SelectionPolicy {
            metric: QualityMetric::Ned,
            threshold,
            objective: Objective::MaxDegree,
        }
    }

    pub fn psnr(threshold: f64) -> Self {
        SelectionPolicy {
            metric: QualityMetric::Psnr,
            threshold,
            objective: Objective::MaxDegree,
        }
    }

    fn passes(&self, ned: f64, psnr: f64) -> bool {
        match self.metric {
            QualityMetric::Ned => ned <= self.threshold,
            QualityMetric::Psnr => psnr >= self.threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionMap {
    pub side: u64,
    /// Row-major chosen ordinal per cluster; `None` is the exact fallback.
    pub assignments: Vec<Option<u32>>,
    pub designs: Vec<DesignId>,
}

impl SelectionMap {
    pub fn get(&self, ia: u64, ib: u64) -> Option<u32> {
        self.assignments[(ia * self.side + ib) as usize]
    }

    /// Clusters per design label, plus `"exact"`.
    pub fn usage(&self) -> BTreeMap<String, usize> {
        let mut usage = BTreeMap::new();
        for a in &self.assignments {
            let key = a.map(|o| format!("Design{o}")).unwrap_or_else(|| "exact".into());
            *usage.entry(key).or_insert(0) += 1;
        }
        usage
    }

    pub fn exact_fraction(&self) -> f64 {
        let exact = self.assignments.iter().filter(|a| a.is_none()).count();
        exact as f64 / self.assignments.len() as f64
    }

    pub fn design(&self, ordinal: u32) -> Option<&DesignId> {
        self.designs.iter().find(|d| d.ordinal == ordinal)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("ia,ib,design\n");
        for (k, a) in self.assignments.iter().enumerate() {
            let k = k as u64;
            let label = a.map(|o| o.to_string()).unwrap_or_else(|| "exact".into());
            out.push_str(&format!("{},{},{}\n", k / self.side, k % self.side, label));
        }
        out
    }

    pub fn summary(&self, policy: &SelectionPolicy) -> SelectionSummary {
        SelectionSummary {
            side: self.side,
            clusters: self.assignments.len(),
            policy: policy.clone(),
            usage: self.usage(),
            exact_fraction: self.exact_fraction(),
        }
    }
}

/// Parses [`SelectionMap::to_csv`] output into `(ia, ib, ordinal or None)`.
pub fn parse_selection_csv(text: &str) -> Result<Vec<(u64, u64, Option<u32>)>> {
    let mut lines = text.lines();
    if lines.next() != Some("ia,ib,design") {
        return Err(Error::Parse("selection csv header mismatch".into()));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|line| {
            let bad = |e: String| Error::Parse(format!("selection row '{line}': {e}"));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 3 {
                return Err(bad("needs 3 fields".into()));
            }
            let ia = f[0].parse().map_err(|e| bad(format!("{e}")))?;
            let ib = f[1].parse().map_err(|e| bad(format!("{e}")))?;
            let d = match f[2] {
                "exact" => None,
                s => Some(s.parse().map_err(|e| bad(format!("{e}")))?),
            };
            Ok((ia, ib, d))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionSummary {
    pub side: u64,
    pub clusters: usize,
    pub policy: SelectionPolicy,
    pub usage: BTreeMap<String, usize>,
    pub exact_fraction: f64,
}

/// Picks, per cluster, the cheapest design whose cluster cell meets the
/// policy; ties go to the lower cluster NED, then the lower ordinal.
/// Clusters where nothing qualifies fall back to exact.
pub fn select_per_cluster(
    candidates: &[(DesignId, &ClusterReport)],
    policy: &SelectionPolicy,
) -> Result<SelectionMap> {
    if !policy.threshold.is_finite() && policy.threshold != f64::INFINITY {
        return Err(Error::InvalidConfig("selection threshold must not be NaN".into()));
    }
    let Some((_, first)) = candidates.first() else {
        return Err(Error::InvalidConfig("no candidate designs".into()));
    };
    let spec = first.spec;
    if let Some((id, _)) = candidates.iter().find(|(_, r)| r.spec != spec) {
        return Err(Error::MismatchedClusterSpecs(format!(
            "{} uses a different cluster grid",
            id.label()
        )));
    }
    let cost = |id: &DesignId| -> Result<f64> {
        match &policy.objective {
            Objective::MaxDegree => Ok(-f64::from(id.degree)),
            Objective::MinCost(table) => table.get(&id.ordinal).copied().ok_or_else(|| {
                Error::InvalidConfig(format!("no cost given for {}", id.label()))
            }),
        }
    };
    let costs: Vec<f64> = candidates.iter().map(|(id, _)| cost(id)).collect::<Result<_>>()?;

    let side = spec.side();
    let assignments = (0..side * side)
        .map(|k| {
            candidates
                .iter()
                .zip(&costs)
                .filter_map(|((id, report), &c)| {
                    let cell = &report.cells[k as usize];
                    policy
                        .passes(cell.ned, cell.psnr)
                        .then_some((c, cell.ned, id.ordinal))
                })
                .min_by(|a, b| {
                    a.0.total_cmp(&b.0)
                        .then(a.1.total_cmp(&b.1))
                        .then(a.2.cmp(&b.2))
                })
                .map(|(_, _, ordinal)| ordinal)
        })
        .collect();
    Ok(SelectionMap {
        side,
        assignments,
        designs: candidates.iter().map(|(id, _)| id.clone()).collect(),
    })
}
