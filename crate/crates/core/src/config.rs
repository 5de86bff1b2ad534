//! Toolkit configuration: a line-oriented `key = value` format grouped into
//! `[section]` blocks. `#` starts a comment. Every key is optional and falls
//! back to the built-in default; unknown sections or keys are errors.
//!
//! ```text
//! [segments]
//! hand_mass_kg = 0.71
//!
//! [posture.P3]
//! forearm_pronation_deg = 90
//!
//! [motion]
//! mean_deg = -7
//! amplitude_deg = 37
//! harmonic_3_deg = 2.0
//!
//! [transmission]
//! efficiency = 0.78
//!
//! [catalog]
//! path = springs.csv
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::biomech::{
    hand_mass_from_body, ArmPosture, BodySegment, Harmonic, JointLimits, LoadSpec, MotionProfile, PostureLabel,
    SegmentChain, SegmentRole, Sex, STANDARD_GRAVITY,
};
use crate::error::{Error, Result};
use crate::io::read_catalog;
use crate::spring_design::{default_catalog, SpringCatalogEntry};
use crate::transmission::{CableRoute, Gearing};
use crate::trial::CleaningPolicy;

#[derive(Debug, Clone, PartialEq)]
pub struct ToolkitConfig {
    pub chain: SegmentChain,
    pub postures: BTreeMap<PostureLabel, ArmPosture>,
    pub motion: MotionProfile,
    pub joint_limits: JointLimits,
    pub load: LoadSpec,
    /// m/s²
    pub gravity: f64,
    pub catalog: Vec<SpringCatalogEntry>,
    pub catalog_path: Option<PathBuf>,
    pub route: CableRoute,
    pub gear: Gearing,
    pub cleaning: CleaningPolicy,
}

impl Default for ToolkitConfig {
    fn default() -> Self {
        Self {
            chain: SegmentChain::default(),
            postures: PostureLabel::PRESETS
                .into_iter()
                .map(|l| (l, ArmPosture::preset(l).expect("preset")))
                .collect(),
            motion: MotionProfile::default(),
            joint_limits: JointLimits::default(),
            load: LoadSpec::default(),
            gravity: STANDARD_GRAVITY,
            catalog: default_catalog(),
            catalog_path: None,
            route: CableRoute::default(),
            gear: Gearing::default(),
            cleaning: CleaningPolicy::default(),
        }
    }
}

struct Entry {
    value: String,
    line: u64,
}

struct Section<'a> {
    name: String,
    entries: BTreeMap<String, Entry>,
    source: &'a str,
    header_line: u64,
}

impl Section<'_> {
    fn err(&self, line: u64, msg: impl std::fmt::Display) -> Error {
        Error::config(format!("{}:{}: {}", self.source, line, msg))
    }

    fn line_of(&self, key: &str) -> u64 {
        self.entries.get(key).map_or(self.header_line, |e| e.line)
    }

    fn take_str(&mut self, key: &str) -> Option<(String, u64)> {
        self.entries.remove(key).map(|e| (e.value, e.line))
    }

    fn take_f64(&mut self, key: &str) -> Result<Option<f64>> {
        match self.take_str(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .map(Some)
                .ok_or_else(|| self.err(line, format!("[{}] {key}: expected a number, got {v:?}", self.name))),
        }
    }

    /// Applies a fallible constructor, pinning its error to the section header.
    fn check<T>(&self, r: Result<T>) -> Result<T> {
        r.map_err(|e| {
            let msg = match e {
                Error::Domain(m) | Error::Config(m) => m,
                other => other.to_string(),
            };
            self.err(self.header_line, format!("[{}] {msg}", self.name))
        })
    }

    fn finish(self) -> Result<()> {
        match self.entries.iter().next() {
            None => Ok(()),
            Some((k, e)) => Err(self.err(e.line, format!("[{}] unknown key '{k}'", self.name))),
        }
    }
}

fn split_sections<'a>(text: &str, source: &'a str) -> Result<Vec<Section<'a>>> {
    let mut sections: Vec<Section<'a>> = Vec::new();
    let err = |line: u64, msg: String| Error::config(format!("{source}:{line}: {msg}"));
    for (idx, raw) in text.lines().enumerate() {
        let line = idx as u64 + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .map(str::trim)
                .filter(|n| !n.is_empty())
                .ok_or_else(|| err(line, format!("malformed section header {content:?}")))?;
            if sections.iter().any(|s| s.name == name) {
                return Err(err(line, format!("duplicate section [{name}]")));
            }
            sections.push(Section {
                name: name.to_string(),
                entries: BTreeMap::new(),
                source,
                header_line: line,
            });
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected 'key = value', got {content:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(err(line, "empty key".into()));
        }
        let section = sections
            .last_mut()
            .ok_or_else(|| err(line, format!("key '{key}' appears before any [section]")))?;
        if section.entries.contains_key(key) {
            return Err(err(line, format!("duplicate key '{key}' in [{}]", section.name)));
        }
        section.entries.insert(
            key.to_string(),
            Entry {
                value: value.to_string(),
                line,
            },
        );
    }
    Ok(sections)
}

fn apply_segments(cfg: &mut ToolkitConfig, s: &mut Section<'_>) -> Result<()> {
    if let (Some(_), Some(e)) = (s.entries.get("hand_mass_kg"), s.entries.get("body_mass_kg")) {
        return Err(s.err(e.line, "[segments] give hand_mass_kg or body_mass_kg, not both"));
    }
    for role in [SegmentRole::UpperArm, SegmentRole::Forearm, SegmentRole::Hand] {
        let current = *s.check(cfg.chain.get(role))?;
        let mass = s.take_f64(&format!("{role}_mass_kg"))?.unwrap_or(current.mass);
        let length = s.take_f64(&format!("{role}_length_m"))?.unwrap_or(current.length);
        let com = s.take_f64(&format!("{role}_com_ratio"))?.unwrap_or(current.com_ratio);
        let seg = s.check(BodySegment::new(role, mass, length, com))?;
        *cfg.chain.get_mut(role).expect("segment present") = seg;
    }
    let body = s.take_f64("body_mass_kg")?;
    let sex = s.take_str("sex");
    let fraction = s.take_f64("hand_mass_fraction")?;
    if let Some(body) = body {
        let sex = match sex {
            Some((v, line)) => v.parse::<Sex>().map_err(|e| s.err(line, e))?,
            None => Sex::Male,
        };
        let m = s.check(hand_mass_from_body(body, sex, fraction))?;
        cfg.chain.get_mut(SegmentRole::Hand).expect("hand present").mass = m;
    } else if sex.is_some() || fraction.is_some() {
        return Err(s.err(s.header_line, "[segments] sex / hand_mass_fraction need body_mass_kg"));
    }
    Ok(())
}

fn apply_posture(cfg: &mut ToolkitConfig, label: PostureLabel, s: &mut Section<'_>) -> Result<()> {
    let base = cfg.postures.get(&label).copied();
    let keys = ["shoulder_flexion_deg", "elbow_flexion_deg", "forearm_pronation_deg"];
    let mut angles = [0.0; 3];
    for (slot, key) in angles.iter_mut().zip(keys) {
        let fallback = base.map(|p| match key {
            "shoulder_flexion_deg" => p.shoulder_flexion.to_degrees(),
            "elbow_flexion_deg" => p.elbow_flexion.to_degrees(),
            _ => p.forearm_pronation.to_degrees(),
        });
        *slot = match (s.take_f64(key)?, fallback) {
            (Some(v), _) => v,
            (None, Some(v)) => v,
            (None, None) => return Err(s.err(s.header_line, format!("[{}] missing required key '{key}'", s.name))),
        };
    }
    let p = s.check(ArmPosture::from_degrees(label, angles[0], angles[1], angles[2]))?;
    cfg.postures.insert(label, p);
    Ok(())
}

fn apply_motion(cfg: &mut ToolkitConfig, s: &mut Section<'_>) -> Result<()> {
    let m = &cfg.motion;
    let mean = s.take_f64("mean_deg")?.map_or(m.mean_angle, f64::to_radians);
    let amplitude = s.take_f64("amplitude_deg")?.map_or(m.amplitude, f64::to_radians);
    let period = s.take_f64("period_s")?.unwrap_or(m.period);
    let min = s
        .take_f64("limit_min_deg")?
        .map_or(cfg.joint_limits.min, f64::to_radians);
    let max = s
        .take_f64("limit_max_deg")?
        .map_or(cfg.joint_limits.max, f64::to_radians);

    let mut harmonics = m.harmonics.clone();
    let harmonic_keys: Vec<String> = s
        .entries
        .keys()
        .filter(|k| k.starts_with("harmonic_") && k.ends_with("_deg"))
        .cloned()
        .collect();
    for key in harmonic_keys {
        let line = s.entries[&key].line;
        let order: u32 = key["harmonic_".len()..key.len() - "_deg".len()]
            .parse()
            .ok()
            .filter(|o| *o >= 2)
            .ok_or_else(|| s.err(line, format!("[motion] {key}: harmonic order must be an integer >= 2")))?;
        let c = s.take_f64(&key)?.expect("key present");
        harmonics.retain(|h| h.order != order);
        harmonics.push(Harmonic {
            order,
            coefficient: c.to_radians(),
        });
    }
    harmonics.sort_by_key(|h| h.order);
    cfg.motion = s.check(MotionProfile::new(mean, amplitude, period, harmonics))?;
    cfg.joint_limits = s.check(JointLimits::new(min, max))?;
    Ok(())
}

fn apply_load(cfg: &mut ToolkitConfig, s: &mut Section<'_>) -> Result<()> {
    let mass = s.take_f64("handheld_mass_kg")?.unwrap_or(cfg.load.handheld_mass);
    let offset = s.take_f64("grip_offset_m")?.unwrap_or(cfg.load.grip_offset);
    cfg.load = s.check(LoadSpec::new(mass, offset))?;
    let g_line = s.line_of("gravity_mps2");
    if let Some(g) = s.take_f64("gravity_mps2")? {
        if g < 0.0 {
            return Err(s.err(g_line, "[load] gravity_mps2 must be >= 0"));
        }
        cfg.gravity = g;
    }
    Ok(())
}

fn apply_transmission(cfg: &mut ToolkitConfig, s: &mut Section<'_>) -> Result<()> {
    let r = &cfg.route;
    let radius = s.take_f64("lever_radius_m")?.unwrap_or(r.lever_radius);
    let mu = s.take_f64("friction_mu")?.unwrap_or(r.friction_mu);
    let wrap_rad = s.take_f64("wrap_angle_rad")?;
    let wrap_deg = s.take_f64("wrap_angle_deg")?;
    let wrap = match (wrap_rad, wrap_deg) {
        (Some(_), Some(_)) => {
            return Err(s.err(
                s.header_line,
                "[transmission] give wrap_angle_rad or wrap_angle_deg, not both",
            ))
        }
        (Some(w), None) => w,
        (None, Some(w)) => w.to_radians(),
        (None, None) => r.wrap_angle,
    };
    cfg.route = s.check(CableRoute::new(mu, wrap, radius))?;

    let g = &cfg.gear;
    let ratio = s.take_f64("gear_ratio")?.unwrap_or(g.ratio);
    let eff_line = s.line_of("efficiency");
    let efficiency = s.take_f64("efficiency")?.unwrap_or(g.efficiency);
    let kt = s.take_f64("torque_constant_Nm_per_A")?.unwrap_or(g.torque_constant_kt);
    if !(0.5..=1.0).contains(&efficiency) {
        return Err(s.err(
            eff_line,
            format!("[transmission] efficiency must lie in [0.5, 1], got {efficiency}"),
        ));
    }
    cfg.gear = s.check(Gearing::new(ratio, efficiency, kt))?;
    Ok(())
}

fn apply_catalog(cfg: &mut ToolkitConfig, s: &mut Section<'_>, base_dir: &Path) -> Result<()> {
    if let Some((p, line)) = s.take_str("path") {
        let path = base_dir.join(&p);
        if !path.is_file() {
            return Err(s.err(line, format!("[catalog] file {} does not exist", path.display())));
        }
        cfg.catalog = read_catalog(&path).map_err(|e| s.err(line, format!("[catalog] {e}")))?;
        cfg.catalog_path = Some(path);
    }
    Ok(())
}

fn apply_analysis(cfg: &mut ToolkitConfig, s: &mut Section<'_>) -> Result<()> {
    let frac_line = s.line_of("max_invalid_fraction");
    let c = &mut cfg.cleaning;
    c.angle_min_deg = s.take_f64("angle_min_deg")?.unwrap_or(c.angle_min_deg);
    c.angle_max_deg = s.take_f64("angle_max_deg")?.unwrap_or(c.angle_max_deg);
    c.max_invalid_fraction = s.take_f64("max_invalid_fraction")?.unwrap_or(c.max_invalid_fraction);
    if c.angle_min_deg >= c.angle_max_deg {
        return Err(s.err(s.header_line, "[analysis] angle_min_deg must be below angle_max_deg"));
    }
    if !(0.0..=1.0).contains(&c.max_invalid_fraction) {
        return Err(s.err(frac_line, "[analysis] max_invalid_fraction must lie in [0, 1]"));
    }
    Ok(())
}

impl ToolkitConfig {
    /// Parses configuration text. Relative file paths resolve against `base_dir`.
    pub fn parse(text: &str, source_name: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg = Self::default();
        for mut s in split_sections(text, source_name)? {
            let name = s.name.clone();
            match name.as_str() {
                "segments" => apply_segments(&mut cfg, &mut s)?,
                "motion" => apply_motion(&mut cfg, &mut s)?,
                "load" => apply_load(&mut cfg, &mut s)?,
                "transmission" => apply_transmission(&mut cfg, &mut s)?,
                "catalog" => apply_catalog(&mut cfg, &mut s, base_dir)?,
                "analysis" => apply_analysis(&mut cfg, &mut s)?,
                other => match other.strip_prefix("posture.").map(str::parse::<PostureLabel>) {
                    Some(Ok(label)) => apply_posture(&mut cfg, label, &mut s)?,
                    _ => return Err(s.err(s.header_line, format!("unknown section [{other}]"))),
                },
            }
            s.finish()?;
        }
        cfg.motion.check_limits(&cfg.joint_limits)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, &path.display().to_string(), base)
    }

    pub fn posture(&self, label: PostureLabel) -> Result<&ArmPosture> {
        self.postures
            .get(&label)
            .ok_or_else(|| Error::config(format!("posture {label} is not configured")))
    }
}
