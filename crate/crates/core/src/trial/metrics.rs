use serde::{Deserialize, Serialize};

use super::log::{SpringLabel, TrialLog, TrialMeta, TrialSample};
use crate::error::{Error, Result};
use crate::transmission::Gearing;

/// Which samples count as implausible and how many may be repaired.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CleaningPolicy {
    pub angle_min_deg: f64,
    pub angle_max_deg: f64,
    /// Largest repairable fraction of invalid samples.
    pub max_invalid_fraction: f64,
}

impl Default for CleaningPolicy {
    /// Design range of motion [-44, +30] deg widened for calibration slack.
    fn default() -> Self {
        Self {
            angle_min_deg: -60.0,
            angle_max_deg: 45.0,
            max_invalid_fraction: 0.05,
        }
    }
}

impl CleaningPolicy {
    fn is_valid(&self, s: &TrialSample) -> bool {
        s.angle_deg.is_finite()
            && s.current_ma.is_finite()
            && s.angle_deg >= self.angle_min_deg
            && s.angle_deg <= self.angle_max_deg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CleanedTrial {
    pub log: TrialLog,
    /// Invalid samples (repaired or dropped) over the original sample count.
    pub interpolated_fraction: f64,
    pub repaired: usize,
    pub dropped: usize,
}

/// Repairs invalid samples by linear interpolation in time between the
/// nearest valid neighbours; invalid samples before the first or after the
/// last valid one are dropped.
///
/// A sample is invalid when its angle or current is not finite or its angle
/// falls outside the policy bounds. Both channels of an invalid sample are
/// interpolated.
pub fn clean_interpolate(log: &TrialLog, policy: &CleaningPolicy) -> Result<CleanedTrial> {
    let samples = log.samples();
    let total = samples.len();
    if total == 0 {
        return Err(Error::domain("cannot clean an empty trial"));
    }
    let valid: Vec<bool> = samples.iter().map(|s| policy.is_valid(s)).collect();
    let invalid = valid.iter().filter(|v| !**v).count();
    let fraction = invalid as f64 / total as f64;
    let (Some(first), Some(last)) = (valid.iter().position(|v| *v), valid.iter().rposition(|v| *v)) else {
        return Err(Error::Rejected {
            invalid,
            total,
            fraction,
            limit: policy.max_invalid_fraction,
        });
    };
    if fraction > policy.max_invalid_fraction {
        return Err(Error::Rejected {
            invalid,
            total,
            fraction,
            limit: policy.max_invalid_fraction,
        });
    }

    let mut out: Vec<TrialSample> = samples[first..=last].to_vec();
    let ok = &valid[first..=last];
    let mut prev_valid = 0usize;
    let mut i = 0usize;
    while i < out.len() {
        if ok[i] {
            prev_valid = i;
            i += 1;
            continue;
        }
        let next_valid = (i..out.len()).find(|&j| ok[j]).expect("last sample is valid");
        let (a, b) = (out[prev_valid], out[next_valid]);
        for s in &mut out[i..next_valid] {
            let w = (s.t - a.t) / (b.t - a.t);
            s.angle_deg = a.angle_deg + (b.angle_deg - a.angle_deg) * w;
            s.current_ma = a.current_ma + (b.current_ma - a.current_ma) * w;
        }
        i = next_valid;
    }
    let dropped = first + (total - 1 - last);
    Ok(CleanedTrial {
        log: TrialLog::new(log.meta().clone(), out)?,
        interpolated_fraction: fraction,
        repaired: invalid - dropped,
        dropped,
    })
}

/// Range of motion in degrees. Each side is clamped at zero, so a trace that
/// never crosses neutral has no range on that side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rom {
    pub ab: f64,
    pub ad: f64,
    pub total: f64,
}

pub fn rom_metrics(log: &TrialLog) -> Result<Rom> {
    let mut angles = log.angles();
    let first = angles.next().ok_or_else(|| Error::domain("empty trial"))?;
    let non_finite = || Error::domain("trial contains non-finite angles; clean it first");
    if !first.is_finite() {
        return Err(non_finite());
    }
    let (mut lo, mut hi) = (first, first);
    for a in angles {
        if !a.is_finite() {
            return Err(non_finite());
        }
        lo = lo.min(a);
        hi = hi.max(a);
    }
    let ab = hi.max(0.0);
    let ad = if lo < 0.0 { -lo } else { 0.0 };
    Ok(Rom { ab, ad, total: ab + ad })
}

/// Motor-side torque per sample, `tau = K_T * I` with the current in A.
pub fn torque_series(log: &TrialLog, gear: &Gearing) -> Vec<(f64, f64)> {
    log.samples()
        .iter()
        .map(|s| (s.t, gear.torque_constant_kt * (s.current_ma / 1000.0)))
        .collect()
}

/// Motor-side RMS torque, `K_T * sqrt(sum(I^2) / N)`, N·m.
pub fn rms_torque(log: &TrialLog, gear: &Gearing) -> Result<f64> {
    if log.is_empty() {
        return Err(Error::domain("empty trial"));
    }
    let mut sum_sq = 0.0;
    for s in log.samples() {
        let amps = s.current_ma / 1000.0;
        sum_sq += amps * amps;
    }
    let rms = gear.torque_constant_kt * (sum_sq / log.len() as f64).sqrt();
    if !rms.is_finite() {
        return Err(Error::domain("trial contains non-finite currents; clean it first"));
    }
    Ok(rms)
}

/// Joint torque delivered by a motor-side torque through the gearhead and
/// transmission, `tau * ratio * efficiency`.
pub fn joint_torque_estimate(tau_motor: f64, gear: &Gearing) -> f64 {
    tau_motor * gear.ratio * gear.efficiency
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    /// deg
    pub rom_ab: f64,
    pub rom_ad: f64,
    pub rom_total: f64,
    /// Motor-side RMS torque, N·m.
    pub tau_rms: f64,
    pub n_samples: usize,
    pub interpolated_fraction: f64,
}

pub fn trial_metrics(cleaned: &CleanedTrial, gear: &Gearing) -> Result<TrialMetrics> {
    let rom = rom_metrics(&cleaned.log)?;
    Ok(TrialMetrics {
        rom_ab: rom.ab,
        rom_ad: rom.ad,
        rom_total: rom.total,
        tau_rms: rms_torque(&cleaned.log, gear)?,
        n_samples: cleaned.log.len(),
        interpolated_fraction: cleaned.interpolated_fraction,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatabilityRecord {
    pub spring: SpringLabel,
    pub posture: String,
    /// `|T1 - T2|` of total range of motion, deg.
    pub delta_rom: f64,
}

pub fn repeatability(
    first: (&TrialMeta, &TrialMetrics),
    second: (&TrialMeta, &TrialMetrics),
) -> Result<RepeatabilityRecord> {
    if !first.0.same_condition(second.0) {
        return Err(Error::domain(format!(
            "repeatability needs trials from one condition, got {} and {}",
            first.0.file_name(),
            second.0.file_name()
        )));
    }
    Ok(RepeatabilityRecord {
        spring: first.0.spring,
        posture: first.0.posture.clone(),
        delta_rom: (first.1.rom_total - second.1.rom_total).abs(),
    })
}
