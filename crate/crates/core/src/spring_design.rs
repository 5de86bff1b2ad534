//! Spring stiffness and pretension from simulated torque curves.
//!
//! The worst-case posture curve is fitted with an ordinary least-squares
//! line. Its slope magnitude is the effective stiffness and its x-intercept
//! the zero-torque (pretension) angle. The stiffness is then matched against
//! a catalog of off-the-shelf clock springs quoted in N·mm/deg.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::biomech::{CurveSample, TorqueCurve};
use crate::error::{Error, Result};
use crate::transmission::SpringSpec;

/// N·m/rad -> N·mm/deg
pub const NM_PER_RAD_TO_NMM_PER_DEG: f64 = 1000.0 * PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    /// N·m/rad
    pub slope: f64,
    /// N·m
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

impl LinearFit {
    pub fn predict(&self, angle: f64) -> f64 {
        self.slope * angle + self.intercept
    }
}

/// Least-squares line of moment on angle.
pub fn fit_linear(curve: &TorqueCurve) -> Result<LinearFit> {
    fit_linear_samples(curve.samples())
}

pub fn fit_linear_samples(samples: &[CurveSample]) -> Result<LinearFit> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::Degenerate(format!(
            "need at least 2 points to fit a line, got {n}"
        )));
    }
    let nf = n as f64;
    let mean_x = samples.iter().map(|s| s.angle).sum::<f64>() / nf;
    let mean_y = samples.iter().map(|s| s.moment).sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for s in samples {
        let dx = s.angle - mean_x;
        let dy = s.moment - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx.is_nan() || sxx <= 0.0 {
        return Err(Error::Degenerate("all angles are identical".into()));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = samples
        .iter()
        .map(|s| {
            let e = s.moment - (slope * s.angle + intercept);
            e * e
        })
        .sum();
    let r_squared = if syy == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
        n_points: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpringWarning {
    /// The fitted line crosses zero at a negative angle: with the spring
    /// preloaded to match, it never unloads inside the working range.
    NegativePretension,
}

/// Stiffness and zero-torque angle implied by a fitted line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedSpring {
    /// N·m/rad
    pub stiffness_k: f64,
    /// rad
    pub theta0: f64,
    pub warning: Option<SpringWarning>,
}

impl DerivedSpring {
    /// Spring with the derived stiffness, pre-wound to its zero-torque angle.
    pub fn spring_spec(&self) -> Result<SpringSpec> {
        SpringSpec::new(self.stiffness_k, self.theta0, Some(self.theta0))
    }
}

pub fn derive_spring(fit: &LinearFit) -> Result<DerivedSpring> {
    if fit.slope == 0.0 || !fit.slope.is_finite() || !fit.intercept.is_finite() {
        return Err(Error::Degenerate(format!(
            "cannot derive a spring from slope {} and intercept {}",
            fit.slope, fit.intercept
        )));
    }
    let theta0 = -fit.intercept / fit.slope;
    Ok(DerivedSpring {
        stiffness_k: fit.slope.abs(),
        // -0.0 reads badly in reports
        theta0: if theta0 == 0.0 { 0.0 } else { theta0 },
        warning: (theta0 < 0.0).then_some(SpringWarning::NegativePretension),
    })
}

/// The curve with the largest peak absolute moment. Ties go to the lower
/// posture label, then to the earlier curve.
pub fn worst_case_select(curves: &[TorqueCurve]) -> Result<&TorqueCurve> {
    worst_case_index(curves).map(|i| &curves[i])
}

pub fn worst_case_index(curves: &[TorqueCurve]) -> Result<usize> {
    if curves.is_empty() {
        return Err(Error::domain("no torque curves to select from"));
    }
    let mut best = 0;
    for (i, c) in curves.iter().enumerate().skip(1) {
        let (peak, best_peak) = (c.peak_abs_moment(), curves[best].peak_abs_moment());
        if peak > best_peak || (peak == best_peak && c.posture() < curves[best].posture()) {
            best = i;
        }
    }
    Ok(best)
}

pub fn stiffness_to_nmm_per_deg(k: f64) -> Result<f64> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::domain(format!("stiffness must be > 0, got {k}")));
    }
    Ok(k * NM_PER_RAD_TO_NMM_PER_DEG)
}

pub fn stiffness_from_nmm_per_deg(k: f64) -> Result<f64> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::domain(format!("stiffness must be > 0, got {k}")));
    }
    Ok(k / NM_PER_RAD_TO_NMM_PER_DEG)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpringCatalogEntry {
    pub name: String,
    /// N·mm/deg
    pub stiffness: f64,
}

impl SpringCatalogEntry {
    pub fn new(name: impl Into<String>, stiffness: f64) -> Result<Self> {
        let name = name.into();
        if !(stiffness.is_finite() && stiffness > 0.0) {
            return Err(Error::domain(format!(
                "catalog entry '{name}' needs a positive stiffness, got {stiffness}"
            )));
        }
        Ok(Self { name, stiffness })
    }
}

/// The three clock springs evaluated experimentally.
pub fn default_catalog() -> Vec<SpringCatalogEntry> {
    vec![
        SpringCatalogEntry::new("S1", 10.66).unwrap(),
        SpringCatalogEntry::new("S2", 11.71).unwrap(),
        SpringCatalogEntry::new("S3", 13.2).unwrap(),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogMatch {
    pub nominal: SpringCatalogEntry,
    pub softer: Option<SpringCatalogEntry>,
    pub stiffer: Option<SpringCatalogEntry>,
}

/// Nearest catalog spring to `target` (N·mm/deg), preferring the softer one
/// on a tie, plus its nearest softer and stiffer neighbours.
pub fn catalog_match(target: f64, catalog: &[SpringCatalogEntry]) -> Result<CatalogMatch> {
    if catalog.is_empty() {
        return Err(Error::domain("spring catalog is empty"));
    }
    if !target.is_finite() {
        return Err(Error::domain(format!("target stiffness must be finite, got {target}")));
    }
    let mut nominal = &catalog[0];
    for e in &catalog[1..] {
        let (d, d_best) = ((e.stiffness - target).abs(), (nominal.stiffness - target).abs());
        if d < d_best || (d == d_best && e.stiffness < nominal.stiffness) {
            nominal = e;
        }
    }
    let softer = catalog
        .iter()
        .filter(|e| e.stiffness < nominal.stiffness)
        .max_by(|a, b| a.stiffness.total_cmp(&b.stiffness));
    let stiffer = catalog
        .iter()
        .filter(|e| e.stiffness > nominal.stiffness)
        .min_by(|a, b| a.stiffness.total_cmp(&b.stiffness));
    Ok(CatalogMatch {
        nominal: nominal.clone(),
        softer: softer.cloned(),
        stiffer: stiffer.cloned(),
    })
}
