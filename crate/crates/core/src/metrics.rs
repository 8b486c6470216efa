//! Error metrics over exhaustive operand sweeps.
//!
//! Sweeps accumulate exact integer statistics into a [`MetricAccumulator`];
//! accumulators merge associatively, so any partition of the operand space
//! reduces to the same totals. Floating point only enters in [`finalize`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fabric::CellGrid;
use crate::par;

/// Peak value used by [`psnr_from_mse`]: an 8-bit pixel maximum, squared.
pub const PSNR_PEAK_SQ: f64 = 255.0 * 255.0;

/// Fractional bits of the fixed-point relative-error sum.
const RED_FRAC_BITS: u32 = 56;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalOutcome {
    pub x: u64,
    pub y: u64,
    pub exact: u64,
    pub approx: u64,
}

impl EvalOutcome {
    pub fn new(x: u64, y: u64, exact: u64, approx: u64) -> Self {
        EvalOutcome {
            x,
            y,
            exact,
            approx,
        }
    }

    /// Error distance `|P - P'|`.
    #[inline]
    pub fn ed(&self) -> u64 {
        self.exact.abs_diff(self.approx)
    }
}

/// Sufficient statistics for every sweep metric.
///
/// The relative-error sum is held in fixed point (`ED * 2^56 / P`, floored
/// per outcome) so that it is exact under merge in any order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MetricAccumulator {
    pub count: u64,
    pub err_count: u64,
    pub sum_ed: u128,
    pub sum_ed_sq: u128,
    pub max_ed: u64,
    pub sum_red_fixed: u128,
    pub red_count: u64,
}

impl MetricAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn accumulate(&mut self, o: &EvalOutcome) {
        let ed = o.ed();
        self.count += 1;
        self.err_count += u64::from(ed > 0);
        self.sum_ed += u128::from(ed);
        self.sum_ed_sq += u128::from(ed) * u128::from(ed);
        self.max_ed = self.max_ed.max(ed);
        if o.exact > 0 {
            self.sum_red_fixed += (u128::from(ed) << RED_FRAC_BITS) / u128::from(o.exact);
            self.red_count += 1;
        }
    }

    pub fn with(mut self, o: &EvalOutcome) -> Self {
        self.accumulate(o);
        self
    }

    pub fn merge(mut self, other: &MetricAccumulator) -> Self {
        self.count += other.count;
        self.err_count += other.err_count;
        self.sum_ed += other.sum_ed;
        self.sum_ed_sq += other.sum_ed_sq;
        self.max_ed = self.max_ed.max(other.max_ed);
        self.sum_red_fixed += other.sum_red_fixed;
        self.red_count += other.red_count;
        self
    }

    /// Sum of `ED / P` over outcomes with `P > 0`.
    pub fn sum_red(&self) -> f64 {
        self.sum_red_fixed as f64 / (1u128 << RED_FRAC_BITS) as f64
    }
}

impl<'a> FromIterator<&'a EvalOutcome> for MetricAccumulator {
    fn from_iter<I: IntoIterator<Item = &'a EvalOutcome>>(iter: I) -> Self {
        iter.into_iter().fold(Self::new(), |acc, o| acc.with(o))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub er: f64,
    pub med: f64,
    pub ned_global: f64,
    #[serde(default)]
    pub ned_clustered_avg: Option<f64>,
    pub mred: f64,
    pub mse: f64,
    #[serde(with = "inf_as_null")]
    pub psnr_global: f64,
    #[serde(default)]
    pub psnr_clustered_avg: Option<f64>,
    pub max_ed: u64,
    pub count: u64,
}

/// Converts accumulated statistics into rates and means.
pub fn finalize(acc: &MetricAccumulator, pmax: u64) -> Result<MetricReport> {
    if acc.count == 0 {
        return Err(Error::EmptySweep);
    }
    if pmax == 0 {
        return Err(Error::InvalidMetric("Pmax must be positive".into()));
    }
    let count = acc.count as f64;
    let med = acc.sum_ed as f64 / count;
    let mse = acc.sum_ed_sq as f64 / count;
    let mred = if acc.red_count == 0 {
        0.0
    } else {
        acc.sum_red() / acc.red_count as f64
    };
    Ok(MetricReport {
        er: acc.err_count as f64 / count,
        med,
        ned_global: med / pmax as f64,
        ned_clustered_avg: None,
        mred,
        mse,
        psnr_global: psnr_from_mse(mse)?,
        psnr_clustered_avg: None,
        max_ed: acc.max_ed,
        count: acc.count,
    })
}

/// `10 log10(255^2 / mse)`; infinite when `mse == 0`.
pub fn psnr_from_mse(mse: f64) -> Result<f64> {
    psnr_with_peak_sq(mse, PSNR_PEAK_SQ)
}

/// `10 log10(peak_sq / mse)` for an arbitrary squared peak.
pub fn psnr_with_peak_sq(mse: f64, peak_sq: f64) -> Result<f64> {
    if mse.is_nan() || mse < 0.0 {
        return Err(Error::InvalidMetric(format!("mse must be >= 0, got {mse}")));
    }
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak_sq / mse).log10())
}

/// Largest exact product for `width`-bit operands.
pub fn global_pmax(width: u32) -> u64 {
    let m = (1u64 << width) - 1;
    m * m
}

/// Accumulates all `2^(2n)` ordered operand pairs of the grid.
pub fn exhaustive_sweep(grid: &CellGrid) -> MetricAccumulator {
    let span = 1u64 << grid.width();
    par::map_range(0..span, |x| sweep_row(grid, x, span))
        .iter()
        .fold(MetricAccumulator::new(), |acc, row| acc.merge(row))
}

/// Same as [`exhaustive_sweep`] but never leaves the calling thread.
pub fn exhaustive_sweep_seq(grid: &CellGrid) -> MetricAccumulator {
    let span = 1u64 << grid.width();
    par::map_range_seq(0..span, |x| sweep_row(grid, x, span))
        .iter()
        .fold(MetricAccumulator::new(), |acc, row| acc.merge(row))
}

fn sweep_row(grid: &CellGrid, x: u64, span: u64) -> MetricAccumulator {
    let mut acc = MetricAccumulator::new();
    for y in 0..span {
        acc.accumulate(&EvalOutcome::new(x, y, x * y, grid.product(x, y)));
    }
    acc
}

/// Builds the report for a full sweep of `grid`.
pub fn sweep_report(grid: &CellGrid) -> Result<MetricReport> {
    finalize(&exhaustive_sweep(grid), global_pmax(grid.width()))
}

pub const REPORT_CSV_HEADER: &str = "er,med,ned,mred,mse,psnr,ned_global,psnr_global,max_ed,count";

impl MetricReport {
    /// Values in the column order of [`REPORT_CSV_HEADER`]. `ned`/`psnr`
    /// hold the cluster averages and are empty when none are attached.
    pub fn csv_fields(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(fmt_sig6).unwrap_or_default();
        vec![
            fmt_sig6(self.er),
            fmt_sig6(self.med),
            opt(self.ned_clustered_avg),
            fmt_sig6(self.mred),
            fmt_sig6(self.mse),
            opt(self.psnr_clustered_avg),
            fmt_sig6(self.ned_global),
            fmt_sig6(self.psnr_global),
            self.max_ed.to_string(),
            self.count.to_string(),
        ]
    }

    pub fn csv_row(&self) -> String {
        self.csv_fields().join(",")
    }

    /// Inverse of [`MetricReport::csv_fields`], up to the 6-digit rounding.
    pub fn from_csv_fields(fields: &[&str]) -> Result<Self> {
        if fields.len() != 10 {
            return Err(Error::Parse(format!(
                "report row has {} fields, expected 10",
                fields.len()
            )));
        }
        let real = |s: &str| parse_real(s);
        let opt = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                parse_real(s).map(Some)
            }
        };
        let int = |s: &str| {
            s.parse::<u64>()
                .map_err(|e| Error::Parse(format!("integer field '{s}': {e}")))
        };
        Ok(MetricReport {
            er: real(fields[0])?,
            med: real(fields[1])?,
            ned_clustered_avg: opt(fields[2])?,
            mred: real(fields[3])?,
            mse: real(fields[4])?,
            psnr_clustered_avg: opt(fields[5])?,
            ned_global: real(fields[6])?,
            psnr_global: real(fields[7])?,
            max_ed: int(fields[8])?,
            count: int(fields[9])?,
        })
    }
}

pub(crate) fn parse_real(s: &str) -> Result<f64> {
    match s {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s
            .parse::<f64>()
            .map_err(|e| Error::Parse(format!("real field '{s}': {e}"))),
    }
}

/// Formats with 6 significant digits, `%g` style.
pub fn fmt_sig6(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Serializes non-finite reals as `null` and reads `null` back as `+inf`.
pub mod inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}
