//! CSV readers and writers for torque curves, spring catalogs and the
//! plot-ready tables derived from a study report.

use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::biomech::{CurveSample, PostureLabel, TorqueCurve};
use crate::error::{Error, Result};
use crate::spring_design::SpringCatalogEntry;
use crate::trial::{csv_error, parse_likert_csv, LikertResponse, StudyReport};

pub const TORQUE_CURVE_HEADER: [&str; 2] = ["angle_rad", "moment_Nm"];
pub const CATALOG_HEADER: [&str; 2] = ["name", "stiffness_Nmm_per_deg"];

pub const ROM_BOXPLOT_FILE: &str = "rom_boxplot.csv";
pub const TORQUE_BOXPLOT_FILE: &str = "torque_boxplot.csv";
pub const REPEATABILITY_FILE: &str = "repeatability.csv";

/// Records of a two-column CSV with the given header, as (line, fields).
fn read_two_columns<R: Read>(reader: R, source_name: &str, header: [&str; 2]) -> Result<Vec<(u64, String, String)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let found = rdr.headers().map_err(|e| csv_error(e, source_name))?.clone();
    if found.is_empty() || (found.len() == 1 && found[0].is_empty()) {
        return Err(Error::parse(source_name, 1, "file is empty"));
    }
    if found.iter().ne(header) {
        return Err(Error::parse(
            source_name,
            1,
            format!("expected header {}", header.join(",")),
        ));
    }
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(e, source_name))?;
        let line = record.position().map_or(0, |p| p.line());
        out.push((line, record[0].to_string(), record[1].to_string()));
    }
    Ok(out)
}

fn parse_f64(text: &str, source_name: &str, line: u64, what: &str) -> Result<f64> {
    text.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::parse(source_name, line, format!("invalid {what} {text:?}")))
}

/// Posture label implied by a curve file stem: `p3.csv` is P3, anything
/// that is not a preset name is custom.
pub fn posture_from_stem(path: &Path) -> PostureLabel {
    path.file_stem()
        .and_then(|s| s.to_str())
        .and_then(|s| s.parse().ok())
        .unwrap_or(PostureLabel::Custom)
}

pub fn parse_torque_curve<R: Read>(reader: R, source_name: &str, posture: PostureLabel) -> Result<TorqueCurve> {
    let rows = read_two_columns(reader, source_name, TORQUE_CURVE_HEADER)?;
    if rows.is_empty() {
        return Err(Error::parse(source_name, 2, "torque curve has no samples"));
    }
    let mut samples = Vec::with_capacity(rows.len());
    for (line, a, m) in &rows {
        let angle = parse_f64(a, source_name, *line, "angle")?;
        let moment = parse_f64(m, source_name, *line, "moment")?;
        if let Some(prev) = samples.last().map(|s: &CurveSample| s.angle) {
            if angle <= prev {
                return Err(Error::parse(source_name, *line, "angles must be strictly increasing"));
            }
        }
        samples.push(CurveSample { angle, moment });
    }
    TorqueCurve::new(samples, posture)
}

pub fn read_torque_curve(path: &Path) -> Result<TorqueCurve> {
    let file = File::open(path)?;
    parse_torque_curve(file, &path.display().to_string(), posture_from_stem(path))
}

pub fn write_torque_curve<W: Write>(writer: W, curve: &TorqueCurve) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TORQUE_CURVE_HEADER)
        .map_err(|e| csv_error(e, "output"))?;
    for s in curve.samples() {
        w.write_record([s.angle.to_string(), s.moment.to_string()])
            .map_err(|e| csv_error(e, "output"))?;
    }
    w.flush()?;
    Ok(())
}

pub fn parse_catalog<R: Read>(reader: R, source_name: &str) -> Result<Vec<SpringCatalogEntry>> {
    let rows = read_two_columns(reader, source_name, CATALOG_HEADER)?;
    if rows.is_empty() {
        return Err(Error::parse(source_name, 2, "catalog has no entries"));
    }
    rows.iter()
        .map(|(line, name, k)| {
            if name.is_empty() {
                return Err(Error::parse(source_name, *line, "empty spring name"));
            }
            let k = parse_f64(k, source_name, *line, "stiffness")?;
            SpringCatalogEntry::new(name.clone(), k).map_err(|e| Error::parse(source_name, *line, e.to_string()))
        })
        .collect()
}

pub fn read_catalog(path: &Path) -> Result<Vec<SpringCatalogEntry>> {
    let file = File::open(path)?;
    parse_catalog(file, &path.display().to_string())
}

pub fn read_likert(path: &Path) -> Result<Vec<LikertResponse>> {
    let file = File::open(path)?;
    parse_likert_csv(file, &path.display().to_string())
}

fn write_rows(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    let name = path.display().to_string();
    w.write_record(header).map_err(|e| csv_error(e, &name))?;
    for r in rows {
        w.write_record(&r).map_err(|e| csv_error(e, &name))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the box-plot and repeatability tables next to each other in
/// `dir`, returning the paths written.
pub fn write_plot_csvs(report: &StudyReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let rom = dir.join(ROM_BOXPLOT_FILE);
    write_rows(
        &rom,
        &["spring", "n", "min_deg", "q1_deg", "median_deg", "q3_deg", "max_deg"],
        report
            .distributions
            .iter()
            .map(|d| {
                let q = &d.rom_total_deg;
                vec![
                    d.spring.to_string(),
                    q.n.to_string(),
                    q.min.to_string(),
                    q.q1.to_string(),
                    q.median.to_string(),
                    q.q3.to_string(),
                    q.max.to_string(),
                ]
            })
            .collect(),
    )?;

    let torque = dir.join(TORQUE_BOXPLOT_FILE);
    write_rows(
        &torque,
        &["spring", "n", "min_mNm", "q1_mNm", "median_mNm", "q3_mNm", "max_mNm"],
        report
            .distributions
            .iter()
            .map(|d| {
                let q = &d.tau_rms_mNm;
                vec![
                    d.spring.to_string(),
                    q.n.to_string(),
                    q.min.to_string(),
                    q.q1.to_string(),
                    q.median.to_string(),
                    q.q3.to_string(),
                    q.max.to_string(),
                ]
            })
            .collect(),
    )?;

    let rep = dir.join(REPEATABILITY_FILE);
    let r = &report.repeatability;
    let groups = r.by_spring_posture.iter().chain(&r.by_spring).chain(r.overall.iter());
    write_rows(
        &rep,
        &["spring", "posture", "n", "mean_deg", "sd_deg"],
        groups
            .map(|g| {
                vec![
                    g.spring.map_or_else(|| "all".to_string(), |s| s.to_string()),
                    g.posture.clone().unwrap_or_else(|| "all".to_string()),
                    g.n.to_string(),
                    g.mean_deg.to_string(),
                    g.sd_deg.to_string(),
                ]
            })
            .collect(),
    )?;
    Ok(vec![rom, torque, rep])
}
