use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::str::FromStr;

use axmul_core::adder::{error_profile, load_library_file, AdderLibrary, EXACT_NAME};
use axmul_core::cluster::{cluster_csv, ed_histogram, histogram_csv, matrix_text, ClusterReport};
use axmul_core::design::{
    enumerate_library, evaluate_design, table_csv, table_rows, DegreeKnob, Design, DesignEvaluation,
    DesignId, SelectionPolicy, LIBRARY_WIDTH,
};
use axmul_core::fabric::{build_multiplier, MultiplierConfig};
use axmul_core::metrics::{fmt_sig6, MetricReport, REPORT_CSV_HEADER};
use axmul_core::svg::{heatmap_svg, histogram_svg};
use axmul_core::{select_per_cluster, Error};
use serde_json::json;

use crate::{Format, Metric, RunArgs};

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { code: 1, message: message.into() }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        CliError { code: 3, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            e if e.is_input_format() => 2,
            Error::Io(_) | Error::MissingAdders(_) => 2,
            Error::UnknownAdder(_)
            | Error::InvalidConfig(_)
            | Error::InvalidClusterSpec { .. }
            | Error::OperandOutOfRange { .. } => 1,
            _ => 3,
        };
        CliError { code, message: e.to_string() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Degree {
    Knob(DegreeKnob),
    Bits(u32),
}

impl FromStr for Degree {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if let Ok(k) = s.parse::<DegreeKnob>() {
            return Ok(Degree::Knob(k));
        }
        s.parse::<u32>()
            .map(Degree::Bits)
            .map_err(|_| format!("'{s}' is neither D1..D4 nor a bit count"))
    }
}

impl Degree {
    fn bits(self, width: u32) -> Result<u32, CliError> {
        match self {
            Degree::Bits(b) => Ok(b),
            Degree::Knob(k) if width == LIBRARY_WIDTH => Ok(k.bits()),
            Degree::Knob(k) => Err(CliError::usage(format!(
                "{k} is defined for {LIBRARY_WIDTH}-bit operands; give a bit count for width {width}"
            ))),
        }
    }

    fn matches(self, id: &DesignId) -> bool {
        match self {
            Degree::Knob(k) => id.knob == Some(k),
            Degree::Bits(b) => id.degree == b,
        }
    }
}

fn load(run: &RunArgs) -> Result<AdderLibrary, CliError> {
    match &run.library {
        Some(path) => Ok(load_library_file(path)?),
        None => Ok(AdderLibrary::exact_only()),
    }
}

/// Prints a line; a closed stdout is not an error.
fn say(line: String) {
    let _ = writeln!(io::stdout().lock(), "{line}");
}

fn wants(run: &RunArgs, f: Format) -> bool {
    run.format.contains(&f)
}

fn write(run: &RunArgs, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(&run.out)
        .map_err(|e| CliError::internal(format!("cannot create {}: {e}", run.out.display())))?;
    let path = run.out.join(name);
    fs::write(&path, contents).map_err(|e| CliError::internal(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn document(value: &serde_json::Value) -> String {
    serde_json::to_string_pretty(value).expect("serializable") + "\n"
}

/// Library designs narrowed by `--design`, `--type` and `--degree`.
fn library_designs(run: &RunArgs, lib: &AdderLibrary) -> Result<Vec<Design>, CliError> {
    if run.width != LIBRARY_WIDTH {
        return Err(CliError::usage(format!("the design library is defined for --width {LIBRARY_WIDTH}")));
    }
    let designs: Vec<Design> = enumerate_library(lib, run.arch)?
        .into_iter()
        .filter(|d| run.design.is_empty() || run.design.contains(&d.id.ordinal))
        .filter(|d| run.adder_type.as_ref().is_none_or(|t| *t == d.id.adder))
        .filter(|d| run.degree.is_none_or(|k| k.matches(&d.id)))
        .collect();
    if let Some(o) = run.design.iter().find(|o| !(1..=20).contains(*o)) {
        return Err(CliError::usage(format!("design ordinal {o} outside 1..=20")));
    }
    if designs.is_empty() {
        return Err(CliError::usage("no design matches the filter"));
    }
    Ok(designs)
}

/// The one design named by `--design N` or `--type T --degree D`.
fn single_design(run: &RunArgs, lib: &AdderLibrary) -> Result<Design, CliError> {
    if !run.design.is_empty() {
        let designs = library_designs(run, lib)?;
        return match <[Design; 1]>::try_from(designs) {
            Ok([d]) => Ok(d),
            Err(_) => Err(CliError::usage("give exactly one design")),
        };
    }
    let adder = run
        .adder_type
        .clone()
        .ok_or_else(|| CliError::usage("give --design N or --type T --degree D"))?;
    let degree = match run.degree {
        Some(d) => d,
        None if adder == EXACT_NAME => Degree::Bits(0),
        None => return Err(CliError::usage("--degree is required with --type")),
    };
    let bits = degree.bits(run.width)?;
    let knob = match degree {
        Degree::Knob(k) => Some(k),
        Degree::Bits(b) if run.width == LIBRARY_WIDTH => DegreeKnob::from_bits(b),
        Degree::Bits(_) => None,
    };
    let ordinal = match (run.width == LIBRARY_WIDTH, knob) {
        (true, Some(k)) => axmul_core::design::AMA_TYPES
            .iter()
            .position(|t| *t == adder)
            .map_or(0, |i| 4 * i as u32 + k.index() + 1),
        _ => 0,
    };
    let config = MultiplierConfig::with_architecture(run.width, adder.clone(), bits, run.arch);
    build_multiplier(&config, lib)?;
    Ok(Design {
        id: DesignId { ordinal, adder, degree: bits, knob },
        config,
    })
}

fn file_stem(id: &DesignId) -> String {
    format!("{}-{}", id.adder, id.degree_label())
}

fn summary_line(id: &DesignId, r: &MetricReport) -> String {
    let opt = |v: Option<f64>| v.map_or("-".to_string(), fmt_sig6);
    format!(
        "{}/{}: ER {} MED {} NED {} MRED {} MSE {} PSNR {} (global NED {} PSNR {}) max ED {}",
        id.adder,
        id.degree_label(),
        fmt_sig6(r.er),
        fmt_sig6(r.med),
        opt(r.ned_clustered_avg),
        fmt_sig6(r.mred),
        fmt_sig6(r.mse),
        opt(r.psnr_clustered_avg),
        fmt_sig6(r.ned_global),
        fmt_sig6(r.psnr_global),
        r.max_ed
    )
}

pub fn validate(path: Option<&PathBuf>) -> Result<(), CliError> {
    let path = path.ok_or_else(|| CliError::usage("give a library path or --library"))?;
    let lib = load_library_file(path)?;
    for spec in lib.iter() {
        let profile = error_profile(spec);
        let k = profile.row_error_count();
        let rows = |set: &std::collections::BTreeSet<usize>| {
            set.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(" ")
        };
        if k == 0 {
            say(format!("{}: 0 erroneous rows", spec.name()));
        } else {
            say(format!(
                "{}: {k} erroneous rows (sum: {}; cout: {})",
                spec.name(),
                rows(&profile.sum_error_rows),
                rows(&profile.cout_error_rows)
            ));
        }
    }
    Ok(())
}

pub fn sweep(run: &RunArgs) -> Result<(), CliError> {
    let lib = load(run)?;
    let design = single_design(run, &lib)?;
    let eval = evaluate_design(&design, &lib, run.cluster_size)?;
    let stem = file_stem(&design.id);
    if wants(run, Format::Json) {
        let doc = json!({ "design": design.id, "config": design.config, "report": eval.report });
        write(run, &format!("{stem}.json"), &document(&doc))?;
    }
    if wants(run, Format::Csv) {
        write(run, &format!("{stem}.csv"), &format!("{REPORT_CSV_HEADER}\n{}\n", eval.report.csv_row()))?;
    }
    say(summary_line(&design.id, &eval.report));
    Ok(())
}

fn evaluate_all(run: &RunArgs, lib: &AdderLibrary) -> Result<Vec<DesignEvaluation>, CliError> {
    library_designs(run, lib)?
        .iter()
        .map(|d| evaluate_design(d, lib, run.cluster_size).map_err(CliError::from))
        .collect()
}

pub fn table(run: &RunArgs) -> Result<(), CliError> {
    let lib = load(run)?;
    let evals = evaluate_all(run, &lib)?;
    let rows = table_rows(&evals, run.ned_threshold, run.psnr_threshold);
    if wants(run, Format::Csv) {
        write(run, "table.csv", &table_csv(&rows))?;
    }
    if wants(run, Format::Json) {
        write(run, "table.json", &document(&json!(rows)))?;
    }
    for e in &evals {
        say(format!("{}: {}", e.id.label(), summary_line(&e.id, &e.report)));
    }
    Ok(())
}

fn threshold_lines(report: &ClusterReport, run: &RunArgs) -> [String; 2] {
    let total = report.cells.len();
    [
        format!(
            "ned>{}%: {}/{total}",
            fmt_sig6(100.0 * run.ned_threshold),
            report.count_ned_over(run.ned_threshold)
        ),
        format!(
            "psnr<{}dB: {}/{total}",
            fmt_sig6(run.psnr_threshold),
            report.count_psnr_under(run.psnr_threshold)
        ),
    ]
}

pub fn clusters(run: &RunArgs) -> Result<(), CliError> {
    let lib = load(run)?;
    let design = single_design(run, &lib)?;
    let eval = evaluate_design(&design, &lib, run.cluster_size)?;
    let report = &eval.clusters;
    let stem = file_stem(&design.id);
    let ned = report.matrix(|c| c.ned);
    let psnr = report.matrix(|c| c.psnr);
    if wants(run, Format::Csv) {
        write(run, &format!("{stem}_clusters.csv"), &cluster_csv(report))?;
    }
    if wants(run, Format::Txt) {
        write(run, &format!("{stem}_ned.txt"), &matrix_text(&ned))?;
        write(run, &format!("{stem}_psnr.txt"), &matrix_text(&psnr))?;
    }
    if wants(run, Format::Svg) {
        let label = format!("{}/{}", design.id.adder, design.id.degree_label());
        write(run, &format!("{stem}_ned.svg"), &heatmap_svg(&ned, &format!("{label} cluster NED")))?;
        write(run, &format!("{stem}_psnr.svg"), &heatmap_svg(&psnr, &format!("{label} cluster PSNR (dB)")))?;
    }
    if wants(run, Format::Json) {
        let doc = json!({
            "design": design.id,
            "summary": report.summary(run.ned_threshold, run.psnr_threshold),
            "clusters": report,
        });
        write(run, &format!("{stem}_clusters.json"), &document(&doc))?;
    }
    for line in threshold_lines(report, run) {
        say(line);
    }
    Ok(())
}

pub fn histogram(run: &RunArgs, bin_width: Option<u64>) -> Result<(), CliError> {
    let lib = load(run)?;
    let design = single_design(run, &lib)?;
    let grid = build_multiplier(&design.config, &lib)?;
    let h = ed_histogram(&grid, bin_width)?;
    let stem = file_stem(&design.id);
    if wants(run, Format::Csv) {
        write(run, &format!("{stem}_histogram.csv"), &histogram_csv(&h))?;
    }
    if wants(run, Format::Json) {
        write(run, &format!("{stem}_histogram.json"), &document(&json!({ "design": design.id, "histogram": h })))?;
    }
    if wants(run, Format::Svg) {
        let title = format!("{}/{} error distance", design.id.adder, design.id.degree_label());
        write(run, &format!("{stem}_histogram.svg"), &histogram_svg(&h, &title))?;
    }
    say(format!(
        "ED {}..{} mean {} over {} pairs, {} bins of width {}",
        h.min_ed,
        h.max_ed,
        fmt_sig6(h.mean_ed),
        h.total_count,
        h.bins.len(),
        h.bin_width
    ));
    Ok(())
}

pub fn select(run: &RunArgs, metric: Metric) -> Result<(), CliError> {
    let lib = load(run)?;
    let evals = evaluate_all(run, &lib)?;
    let policy = match metric {
        Metric::Ned => SelectionPolicy::ned(run.ned_threshold),
        Metric::Psnr => SelectionPolicy::psnr(run.psnr_threshold),
    };
    let candidates: Vec<(DesignId, &ClusterReport)> = evals.iter().map(|e| (e.id.clone(), &e.clusters)).collect();
    let map = select_per_cluster(&candidates, &policy)?;
    if wants(run, Format::Csv) {
        write(run, "selection.csv", &map.to_csv())?;
    }
    if wants(run, Format::Json) {
        write(run, "selection.json", &document(&json!({ "summary": map.summary(&policy), "map": map })))?;
    }
    if wants(run, Format::Svg) || wants(run, Format::Txt) {
        let degree = |o: Option<u32>| o.and_then(|o| map.design(o)).map_or(0.0, |d| f64::from(d.degree));
        let side = map.side as usize;
        let matrix: Vec<Vec<f64>> = map
            .assignments
            .chunks(side)
            .map(|row| row.iter().map(|a| degree(*a)).collect())
            .collect();
        if wants(run, Format::Svg) {
            write(run, "selection.svg", &heatmap_svg(&matrix, "approximated bits per cluster"))?;
        }
        if wants(run, Format::Txt) {
            write(run, "selection.txt", &matrix_text(&matrix))?;
        }
    }
    let usage = map.usage();
    let total = map.assignments.len();
    for id in &map.designs {
        if let Some(count) = usage.get(&id.label()) {
            say(format!("{}: {count}/{total} ({}/{})", id.label(), id.adder, id.degree_label()));
        }
    }
    if let Some(count) = usage.get("exact") {
        say(format!("exact: {count}/{total}"));
    }
    Ok(())
}
