//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 configuration error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use crate::biomech::{sweep_torque_curve, PostureLabel, TorqueCurve};
use crate::config::ToolkitConfig;
use crate::error::{Error, Result};
use crate::io::{read_catalog, read_likert, read_torque_curve, write_plot_csvs, write_torque_curve};
use crate::json::to_canonical_string;
use crate::spring_design::{
    catalog_match, derive_spring, fit_linear, stiffness_to_nmm_per_deg, worst_case_index, SpringCatalogEntry,
    SpringWarning,
};
use crate::trial::{aggregate_report, read_trial_file, Rejection, StudyReport, TrialInput};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_CONFIG: u8 = 3;

pub const LIKERT_FILE: &str = "likert.csv";

#[derive(Debug, Parser)]
#[command(
    name = "wristexo",
    version,
    about = "Wrist exoskeleton spring design and trial analysis"
)]
pub struct Cli {
    /// Toolkit configuration file; built-in defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PostureArg {
    #[value(name = "P1")]
    P1,
    #[value(name = "P2")]
    P2,
    #[value(name = "P3")]
    P3,
    Custom,
    All,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep the wrist reaction moment over the motion cycle.
    Simulate {
        #[arg(long, value_enum, default_value = "all")]
        posture: PostureArg,
        /// Number of evenly spaced angles.
        #[arg(long, default_value_t = 50)]
        samples: usize,
        /// Output CSV, or a directory when `--posture all`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the worst-case curve and size a spring.
    Fit {
        #[arg(required = true)]
        curves: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Spring catalog CSV; overrides the configured catalog.
        #[arg(long)]
        catalog: Option<PathBuf>,
    },
    /// Analyze a directory of trial logs.
    Analyze {
        dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Where to write the plot CSVs; defaults to the report's directory.
        #[arg(long)]
        plots_dir: Option<PathBuf>,
        /// Questionnaire CSV; defaults to `likert.csv` inside the trial directory.
        #[arg(long)]
        likert: Option<PathBuf>,
    },
    /// Re-render the plot CSVs from an existing report.
    Report {
        report: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        _ => EXIT_DATA,
    }
}

/// Parses `args` (including the program name) and runs the command,
/// writing human-readable output to `out` and diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<ToolkitConfig> {
    match path {
        Some(p) => ToolkitConfig::load(p),
        None => Ok(ToolkitConfig::default()),
    }
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let cfg = load_config(cli.config.as_deref())?;
    match &cli.command {
        Command::Simulate {
            posture,
            samples,
            out: path,
        } => simulate(&cfg, *posture, *samples, path, out),
        Command::Fit {
            curves,
            out: path,
            catalog,
        } => fit(&cfg, curves, path, catalog.as_deref(), out),
        Command::Analyze {
            dir,
            out: path,
            plots_dir,
            likert,
        } => analyze(&cfg, dir, path, plots_dir.as_deref(), likert.as_deref(), out),
        Command::Report { report, out_dir } => rerender(report, out_dir, out),
    }
}

fn write_file(path: &Path, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    write(&mut f)?;
    f.flush()?;
    Ok(())
}

fn simulate(cfg: &ToolkitConfig, posture: PostureArg, samples: usize, path: &Path, out: &mut dyn Write) -> Result<()> {
    let labels: Vec<PostureLabel> = match posture {
        PostureArg::P1 => vec![PostureLabel::P1],
        PostureArg::P2 => vec![PostureLabel::P2],
        PostureArg::P3 => vec![PostureLabel::P3],
        PostureArg::Custom => vec![PostureLabel::Custom],
        PostureArg::All => cfg.postures.keys().copied().collect(),
    };
    let mut curves: Vec<TorqueCurve> = Vec::with_capacity(labels.len());
    for label in &labels {
        let p = cfg.posture(*label)?;
        curves.push(sweep_torque_curve(
            &cfg.chain,
            p,
            &cfg.motion,
            &cfg.load,
            cfg.gravity,
            samples,
        )?);
    }

    if posture == PostureArg::All {
        fs::create_dir_all(path)?;
        for c in &curves {
            let file = path.join(format!("{}.csv", c.posture().as_str().to_ascii_lowercase()));
            write_file(&file, |w| write_torque_curve(w, c))?;
        }
    } else {
        write_file(path, |w| write_torque_curve(w, &curves[0]))?;
    }

    writeln!(out, "posture  samples  peak_abs_moment_Nm  r_squared")?;
    for c in &curves {
        let r2 = fit_linear(c)
            .map(|f| format!("{:.4}", f.r_squared))
            .unwrap_or_else(|_| "n/a".into());
        writeln!(
            out,
            "{:<8} {:>7}  {:>18.6}  {:>9}",
            c.posture().as_str(),
            c.len(),
            c.peak_abs_moment(),
            r2
        )?;
    }
    let worst = worst_case_index(&curves)?;
    writeln!(out, "worst case: {}", curves[worst].posture())?;
    Ok(())
}

fn entry_json(e: &SpringCatalogEntry) -> serde_json::Value {
    json!({ "name": e.name, "stiffness_Nmm_per_deg": e.stiffness })
}

fn fit(
    cfg: &ToolkitConfig,
    paths: &[PathBuf],
    path: &Path,
    catalog_path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<()> {
    let curves = paths.iter().map(|p| read_torque_curve(p)).collect::<Result<Vec<_>>>()?;
    let catalog = match catalog_path {
        Some(p) => read_catalog(p)?,
        None => cfg.catalog.clone(),
    };
    let worst = worst_case_index(&curves)?;
    let curve = &curves[worst];
    let line = fit_linear(curve)?;
    let spring = derive_spring(&line)?;
    let k_nmm = stiffness_to_nmm_per_deg(spring.stiffness_k)?;
    let matched = catalog_match(k_nmm, &catalog)?;

    let warnings: Vec<&str> = spring
        .warning
        .iter()
        .map(|w| match w {
            SpringWarning::NegativePretension => "negative_pretension",
        })
        .collect();
    let report = json!({
        "curves": paths.iter().zip(&curves).map(|(p, c)| json!({
            "file": p.display().to_string(),
            "posture": c.posture().as_str(),
            "n_points": c.len(),
            "peak_abs_moment_Nm": c.peak_abs_moment(),
        })).collect::<Vec<_>>(),
        "worst_case": {
            "file": paths[worst].display().to_string(),
            "posture": curve.posture().as_str(),
        },
        "slope": line.slope,
        "intercept": line.intercept,
        "r_squared": line.r_squared,
        "n_points": line.n_points,
        "k_Nm_per_rad": spring.stiffness_k,
        "k_Nmm_per_deg": k_nmm,
        "theta0_rad": spring.theta0,
        "theta0_deg": spring.theta0.to_degrees(),
        "catalog": {
            "nominal": entry_json(&matched.nominal),
            "softer": matched.softer.as_ref().map(entry_json),
            "stiffer": matched.stiffer.as_ref().map(entry_json),
        },
        "warnings": warnings,
    });
    let text = to_canonical_string(&report)?;
    write_file(path, |w| Ok(w.write_all(text.as_bytes())?))?;
    writeln!(
        out,
        "worst case {}: k = {:.4} N·m/rad ({:.2} N·mm/deg), theta0 = {:.4} rad, R² = {:.4}; nominal spring {}",
        curve.posture(),
        spring.stiffness_k,
        k_nmm,
        spring.theta0,
        line.r_squared,
        matched.nominal.name
    )?;
    for w in &warnings {
        writeln!(out, "warning: {w}")?;
    }
    Ok(())
}

fn trial_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let is_csv = path.extension().is_some_and(|e| e == "csv");
        let is_likert = path.file_name().is_some_and(|n| n == LIKERT_FILE);
        if path.is_file() && is_csv && !is_likert {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn file_label(path: &Path) -> String {
    path.file_name()
        .map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn analyze(
    cfg: &ToolkitConfig,
    dir: &Path,
    path: &Path,
    plots_dir: Option<&Path>,
    likert: Option<&Path>,
    out: &mut dyn Write,
) -> Result<()> {
    let files = trial_files(dir)?;
    let parsed: Vec<std::result::Result<TrialInput, Rejection>> = files
        .par_iter()
        .map(|p| {
            read_trial_file(p)
                .map(|log| TrialInput {
                    file: file_label(p),
                    log,
                })
                .map_err(|e| Rejection {
                    file: file_label(p),
                    reason: e.to_string(),
                })
        })
        .collect();
    let mut inputs = Vec::new();
    let mut rejected = Vec::new();
    for r in parsed {
        match r {
            Ok(i) => inputs.push(i),
            Err(r) => rejected.push(r),
        }
    }
    if inputs.is_empty() {
        return Err(Error::Degenerate(format!(
            "no parseable trial logs in {} ({} file(s) rejected)",
            dir.display(),
            rejected.len()
        )));
    }
    let mut report = aggregate_report(&inputs, &cfg.cleaning, &cfg.gear, rejected)?;

    let likert_path = likert.map(Path::to_path_buf).or_else(|| {
        let p = dir.join(LIKERT_FILE);
        p.is_file().then_some(p)
    });
    if let Some(p) = likert_path {
        report.attach_likert(&read_likert(&p)?);
    }

    let text = to_canonical_string(&report)?;
    write_file(path, |w| Ok(w.write_all(text.as_bytes())?))?;
    let canonical: StudyReport = serde_json::from_str(&text)?;
    let plots = plots_dir
        .map(Path::to_path_buf)
        .unwrap_or_else(|| path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf));
    let plots = if plots.as_os_str().is_empty() {
        PathBuf::from(".")
    } else {
        plots
    };
    write_plot_csvs(&canonical, &plots)?;

    writeln!(
        out,
        "{} trial(s) analyzed, {} rejected",
        canonical.n_trials,
        canonical.rejected.len()
    )?;
    for r in &canonical.rejected {
        writeln!(out, "rejected {}: {}", r.file, r.reason)?;
    }
    for (name, f) in &canonical.friedman {
        writeln!(out, "Friedman {name}: chi2 = {}, p = {}", f.chi2, f.p)?;
    }
    for w in &canonical.warnings {
        writeln!(out, "warning: {w}")?;
    }
    Ok(())
}

fn rerender(report_path: &Path, out_dir: &Path, out: &mut dyn Write) -> Result<()> {
    let text = fs::read_to_string(report_path)?;
    let report: StudyReport = serde_json::from_str(&text)?;
    for p in write_plot_csvs(&report, out_dir)? {
        writeln!(out, "wrote {}", p.display())?;
    }
    Ok(())
}
