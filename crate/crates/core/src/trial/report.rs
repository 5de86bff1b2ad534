use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::likert::{likert_summary, LikertResponse, LikertSummary};
use super::log::{LoadCondition, SpringLabel, TrialLog};
use super::metrics::{clean_interpolate, joint_torque_estimate, trial_metrics, CleaningPolicy};
use super::stats::friedman_test;
use crate::error::{Error, Result};
use crate::transmission::Gearing;

/// A parsed trial log together with the file it came from.
#[derive(Debug, Clone)]
pub struct TrialInput {
    pub file: String,
    pub log: TrialLog,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub file: String,
    pub participant: String,
    pub posture: String,
    pub load: LoadCondition,
    pub spring: SpringLabel,
    pub trial_index: u32,
    pub rom_ab_deg: f64,
    pub rom_ad_deg: f64,
    pub rom_total_deg: f64,
    pub tau_rms_mNm: f64,
    pub joint_torque_Nm: f64,
    pub n_samples: usize,
    pub interpolated_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub file: String,
    pub reason: String,
}

/// Five-number summary with linearly interpolated quartiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    let d = b - a;
    if t >= 0.5 {
        b - d * (1.0 - t)
    } else {
        a + d * t
    }
}

fn sorted_quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor();
    let i = lo as usize;
    if i + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    lerp(sorted[i], sorted[i + 1], h - lo)
}

pub fn quantiles(values: &[f64]) -> Result<Quantiles> {
    if values.is_empty() {
        return Err(Error::Degenerate("quantiles of an empty sample".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("quantiles need finite values"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(Quantiles {
        n: v.len(),
        min: v[0],
        q1: sorted_quantile(&v, 0.25),
        median: sorted_quantile(&v, 0.5),
        q3: sorted_quantile(&v, 0.75),
        max: v[v.len() - 1],
    })
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpringDistribution {
    pub spring: SpringLabel,
    pub rom_total_deg: Quantiles,
    pub tau_rms_mNm: Quantiles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatabilityPair {
    pub participant: String,
    pub posture: String,
    pub load: LoadCondition,
    pub spring: SpringLabel,
    pub trial_a: u32,
    pub trial_b: u32,
    pub delta_rom_deg: f64,
}

/// Mean and sample SD of `|T1 - T2|` over a group; `None` keys mean "all".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpread {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spring: Option<SpringLabel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub posture: Option<String>,
    pub n: usize,
    pub mean_deg: f64,
    pub sd_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatabilitySection {
    pub pairs: Vec<RepeatabilityPair>,
    pub by_spring_posture: Vec<GroupSpread>,
    pub by_spring: Vec<GroupSpread>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overall: Option<GroupSpread>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FriedmanSection {
    pub metric: String,
    pub conditions: Vec<SpringLabel>,
    pub n_subjects: usize,
    pub df: usize,
    pub chi2: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub units: BTreeMap<String, String>,
    pub n_trials: usize,
    pub trials: Vec<TrialRow>,
    pub rejected: Vec<Rejection>,
    pub distributions: Vec<SpringDistribution>,
    pub repeatability: RepeatabilitySection,
    #[serde(default)]
    pub friedman: BTreeMap<String, FriedmanSection>,
    #[serde(default)]
    pub likert: Vec<LikertSummary>,
    pub warnings: Vec<String>,
}

impl StudyReport {
    pub fn attach_likert(&mut self, responses: &[LikertResponse]) {
        self.likert = likert_summary(responses);
        for s in &self.likert {
            if s.single_response {
                self.warnings.push(format!(
                    "questionnaire item '{}' has a single response; sd reported as 0",
                    s.item
                ));
            }
        }
    }
}

/// Cleans one trial and computes its metrics; failures become a rejection.
pub fn evaluate_trial(
    input: &TrialInput,
    policy: &CleaningPolicy,
    gear: &Gearing,
) -> std::result::Result<TrialRow, Rejection> {
    let reject = |e: Error| Rejection {
        file: input.file.clone(),
        reason: e.to_string(),
    };
    let cleaned = clean_interpolate(&input.log, policy).map_err(reject)?;
    let m = trial_metrics(&cleaned, gear).map_err(reject)?;
    let meta = input.log.meta();
    Ok(TrialRow {
        file: input.file.clone(),
        participant: meta.participant.clone(),
        posture: meta.posture.clone(),
        load: meta.load,
        spring: meta.spring,
        trial_index: meta.trial_index,
        rom_ab_deg: m.rom_ab,
        rom_ad_deg: m.rom_ad,
        rom_total_deg: m.rom_total,
        tau_rms_mNm: m.tau_rms * 1000.0,
        joint_torque_Nm: joint_torque_estimate(m.tau_rms, gear),
        n_samples: m.n_samples,
        interpolated_fraction: m.interpolated_fraction,
    })
}

/// Evaluates every trial (in parallel) and reduces the results to a report.
pub fn aggregate_report(
    inputs: &[TrialInput],
    policy: &CleaningPolicy,
    gear: &Gearing,
    mut rejected: Vec<Rejection>,
) -> Result<StudyReport> {
    let outcomes: Vec<_> = inputs.par_iter().map(|i| evaluate_trial(i, policy, gear)).collect();
    let mut rows = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        match o {
            Ok(row) => rows.push(row),
            Err(r) => rejected.push(r),
        }
    }
    build_report(rows, rejected)
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mut sum = 0.0;
    for v in values {
        sum += v;
    }
    let mean = sum / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let mut ss = 0.0;
    for v in values {
        ss += (v - mean) * (v - mean);
    }
    (mean, (ss / (n - 1) as f64).sqrt())
}

fn spread(spring: Option<SpringLabel>, posture: Option<String>, values: &[f64]) -> GroupSpread {
    let (mean_deg, sd_deg) = mean_sd(values);
    GroupSpread {
        spring,
        posture,
        n: values.len(),
        mean_deg,
        sd_deg,
    }
}

fn repeatability_section(rows: &[TrialRow]) -> RepeatabilitySection {
    type Condition<'a> = (&'a str, &'a str, LoadCondition, SpringLabel);
    let mut groups: BTreeMap<Condition<'_>, Vec<&TrialRow>> = BTreeMap::new();
    for r in rows {
        groups
            .entry((&r.participant, &r.posture, r.load, r.spring))
            .or_default()
            .push(r);
    }
    let mut pairs = Vec::new();
    for ((participant, posture, load, spring), mut trials) in groups {
        trials.sort_by_key(|r| r.trial_index);
        for w in trials.windows(2) {
            pairs.push(RepeatabilityPair {
                participant: participant.to_string(),
                posture: posture.to_string(),
                load,
                spring,
                trial_a: w[0].trial_index,
                trial_b: w[1].trial_index,
                delta_rom_deg: (w[0].rom_total_deg - w[1].rom_total_deg).abs(),
            });
        }
    }

    let mut by_sp: BTreeMap<(SpringLabel, &str), Vec<f64>> = BTreeMap::new();
    let mut by_s: BTreeMap<SpringLabel, Vec<f64>> = BTreeMap::new();
    let mut all = Vec::with_capacity(pairs.len());
    for p in &pairs {
        by_sp.entry((p.spring, &p.posture)).or_default().push(p.delta_rom_deg);
        by_s.entry(p.spring).or_default().push(p.delta_rom_deg);
        all.push(p.delta_rom_deg);
    }
    let by_spring_posture = by_sp
        .iter()
        .map(|((s, p), v)| spread(Some(*s), Some(p.to_string()), v))
        .collect();
    let by_spring = by_s.iter().map(|(s, v)| spread(Some(*s), None, v)).collect();
    let overall = (!all.is_empty()).then(|| spread(None, None, &all));
    RepeatabilitySection {
        pairs,
        by_spring_posture,
        by_spring,
        overall,
    }
}

/// Participant-by-spring means of `metric`, or the reason the design is incomplete.
fn friedman_cells(
    rows: &[TrialRow],
    springs: &[SpringLabel],
    metric: impl Fn(&TrialRow) -> f64,
) -> std::result::Result<Vec<Vec<f64>>, String> {
    let mut cells: BTreeMap<&str, BTreeMap<SpringLabel, Vec<f64>>> = BTreeMap::new();
    for r in rows {
        cells
            .entry(&r.participant)
            .or_default()
            .entry(r.spring)
            .or_default()
            .push(metric(r));
    }
    let mut blocks = Vec::with_capacity(cells.len());
    for (participant, by_spring) in &cells {
        let mut row = Vec::with_capacity(springs.len());
        for s in springs {
            let Some(values) = by_spring.get(s) else {
                return Err(format!(
                    "participant {participant} has no accepted trials with spring {s}"
                ));
            };
            row.push(mean_sd(values).0);
        }
        blocks.push(row);
    }
    Ok(blocks)
}

type MetricFn = fn(&TrialRow) -> f64;

/// Reduces per-trial rows to the study report. Rows are processed in file
/// name order so the result does not depend on input order.
pub fn build_report(mut rows: Vec<TrialRow>, mut rejected: Vec<Rejection>) -> Result<StudyReport> {
    if rows.is_empty() {
        return Err(Error::Degenerate("no usable trials".into()));
    }
    rows.sort_by(|a, b| a.file.cmp(&b.file));
    rejected.sort_by(|a, b| a.file.cmp(&b.file));
    let mut warnings = Vec::new();

    let springs: Vec<SpringLabel> = rows
        .iter()
        .map(|r| r.spring)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let mut distributions = Vec::with_capacity(springs.len());
    for &s in &springs {
        let rom: Vec<f64> = rows.iter().filter(|r| r.spring == s).map(|r| r.rom_total_deg).collect();
        let tau: Vec<f64> = rows.iter().filter(|r| r.spring == s).map(|r| r.tau_rms_mNm).collect();
        distributions.push(SpringDistribution {
            spring: s,
            rom_total_deg: quantiles(&rom)?,
            tau_rms_mNm: quantiles(&tau)?,
        });
    }

    let repeatability = repeatability_section(&rows);
    if repeatability.pairs.is_empty() {
        warnings.push("no repeated trials; repeatability section is empty".to_string());
    }

    let mut friedman = BTreeMap::new();
    let participants = rows
        .iter()
        .map(|r| r.participant.as_str())
        .collect::<BTreeSet<_>>()
        .len();
    if springs.len() < 2 {
        warnings.push("Friedman tests omitted: fewer than two spring conditions".to_string());
    } else if participants < 2 {
        warnings.push("Friedman tests omitted: fewer than two participants".to_string());
    } else {
        let metrics: [(&str, MetricFn); 2] = [
            ("rom_total_deg", |r| r.rom_total_deg),
            ("tau_rms_mNm", |r| r.tau_rms_mNm),
        ];
        for (name, metric) in metrics {
            match friedman_cells(&rows, &springs, metric) {
                Ok(blocks) => {
                    let f = friedman_test(&blocks)?;
                    friedman.insert(
                        name.to_string(),
                        FriedmanSection {
                            metric: name.to_string(),
                            conditions: springs.clone(),
                            n_subjects: f.n_subjects,
                            df: f.df,
                            chi2: f.chi2,
                            p: f.p,
                        },
                    );
                }
                Err(why) => warnings.push(format!("Friedman test on {name} omitted: {why}")),
            }
        }
    }
    if !rejected.is_empty() {
        warnings.push(format!("{} trial(s) rejected", rejected.len()));
    }

    let units = [
        ("angle", "deg"),
        ("rom", "deg"),
        ("delta_rom", "deg"),
        ("tau_rms", "mN·m, motor side"),
        ("joint_torque", "N·m, joint side"),
        ("interpolated_fraction", "fraction of samples"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect();

    Ok(StudyReport {
        units,
        n_trials: rows.len(),
        trials: rows,
        rejected,
        distributions,
        repeatability,
        friedman,
        likert: Vec::new(),
        warnings,
    })
}
