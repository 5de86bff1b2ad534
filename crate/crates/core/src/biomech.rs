//! Quasi-static rigid-link arm model for the wrist Ab-Ad reaction moment.
//!
//! The arm is a serial chain in a world frame with `x` pointing forward, `y`
//! to the subject's left and `z` up; gravity acts along `-z`.
//!
//! - Shoulder flexion rotates the upper arm about the horizontal `-y` axis, so
//!   positive flexion swings a hanging arm forward.
//! - Elbow flexion rotates the forearm about the same axis (sagittal plane).
//! - Forearm pronation rotates the hand frame about the forearm long axis.
//!   Zero pronation is the anatomical neutral (thumb pointing away from the
//!   elbow's flexion side, i.e. "thumb up" when the forearm is horizontal);
//!   positive pronation turns the thumb of a right arm medially.
//! - The wrist Ab-Ad axis is perpendicular to the hand plane, oriented so
//!   that a positive rotation moves the hand toward the thumb (abduction).
//!
//! Only gravity is modelled. The returned reaction moment is the torque the
//! joint has to supply to hold the hand and handheld load static, i.e. the
//! negated gravity moment about the Ab-Ad axis.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const STANDARD_GRAVITY: f64 = 9.81;

/// Hand mass as a fraction of body mass (mean values, male / female).
pub const HAND_MASS_FRACTION_MALE: f64 = 0.0065;
pub const HAND_MASS_FRACTION_FEMALE: f64 = 0.0050;

/// Mean + 1 SD male fraction, used for the large-hand worst case.
pub const HAND_MASS_FRACTION_WORST_CASE: f64 = 0.0071;
pub const WORST_CASE_BODY_MASS_KG: f64 = 100.0;

/// Design range of motion of the wrist joint, radians.
pub const DESIGN_ABDUCTION_LIMIT: f64 = 30.0 * PI / 180.0;
pub const DESIGN_ADDUCTION_LIMIT: f64 = -44.0 * PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointLimits {
    pub min: f64,
    pub max: f64,
}

impl JointLimits {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) || min >= max {
            return Err(Error::domain(format!(
                "joint limits must be finite with min < max, got [{min}, {max}]"
            )));
        }
        Ok(Self { min, max })
    }

    pub fn contains(&self, angle: f64) -> bool {
        angle >= self.min && angle <= self.max
    }
}

impl Default for JointLimits {
    fn default() -> Self {
        Self {
            min: DESIGN_ADDUCTION_LIMIT,
            max: DESIGN_ABDUCTION_LIMIT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentRole {
    UpperArm,
    Forearm,
    Hand,
}

impl fmt::Display for SegmentRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SegmentRole::UpperArm => "upper_arm",
            SegmentRole::Forearm => "forearm",
            SegmentRole::Hand => "hand",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodySegment {
    pub role: SegmentRole,
    /// kg
    pub mass: f64,
    /// m
    pub length: f64,
    /// Centre of mass as a fraction of `length`, measured from the proximal joint.
    pub com_ratio: f64,
}

impl BodySegment {
    pub fn new(role: SegmentRole, mass: f64, length: f64, com_ratio: f64) -> Result<Self> {
        if !(mass.is_finite() && mass >= 0.0) {
            return Err(Error::domain(format!("{role}: mass must be >= 0, got {mass}")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::domain(format!("{role}: length must be > 0, got {length}")));
        }
        if !(0.0..=1.0).contains(&com_ratio) {
            return Err(Error::domain(format!(
                "{role}: com_ratio must lie in [0, 1], got {com_ratio}"
            )));
        }
        Ok(Self {
            role,
            mass,
            length,
            com_ratio,
        })
    }

    /// Distance from the proximal joint to the centre of mass.
    pub fn com_distance(&self) -> f64 {
        self.length * self.com_ratio
    }
}

/// The upper arm, forearm and hand segments of one arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentChain {
    segments: Vec<BodySegment>,
}

impl SegmentChain {
    pub fn new(segments: Vec<BodySegment>) -> Self {
        Self { segments }
    }

    /// Large adult male arm. The forearm mass is carried for completeness only;
    /// it sits proximal to the wrist and never enters the wrist moment.
    pub fn worst_case_adult() -> Self {
        let hand_mass = WORST_CASE_BODY_MASS_KG * HAND_MASS_FRACTION_WORST_CASE;
        Self::new(vec![
            BodySegment {
                role: SegmentRole::UpperArm,
                mass: 2.8,
                length: 0.30,
                com_ratio: 0.436,
            },
            BodySegment {
                role: SegmentRole::Forearm,
                mass: 1.6,
                length: 0.26,
                com_ratio: 0.43,
            },
            BodySegment {
                role: SegmentRole::Hand,
                mass: hand_mass,
                length: 0.19,
                com_ratio: 0.5,
            },
        ])
    }

    pub fn segments(&self) -> &[BodySegment] {
        &self.segments
    }

    pub fn get(&self, role: SegmentRole) -> Result<&BodySegment> {
        self.segments
            .iter()
            .find(|s| s.role == role)
            .ok_or_else(|| Error::config(format!("segment chain has no {role} segment")))
    }

    pub fn get_mut(&mut self, role: SegmentRole) -> Option<&mut BodySegment> {
        self.segments.iter_mut().find(|s| s.role == role)
    }
}

impl Default for SegmentChain {
    fn default() -> Self {
        Self::worst_case_adult()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sex {
    Male,
    Female,
}

impl FromStr for Sex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "male" | "m" => Ok(Sex::Male),
            "female" | "f" => Ok(Sex::Female),
            other => Err(Error::domain(format!("unknown sex '{other}'"))),
        }
    }
}

/// Hand segment mass from total body mass.
///
/// The fraction defaults to the population mean for `sex`; an override must
/// lie strictly inside (0, 0.05).
pub fn hand_mass_from_body(body_mass: f64, sex: Sex, fraction_override: Option<f64>) -> Result<f64> {
    if !(body_mass.is_finite() && body_mass > 0.0) {
        return Err(Error::domain(format!("body mass must be > 0 kg, got {body_mass}")));
    }
    let fraction = match fraction_override {
        Some(f) if f > 0.0 && f < 0.05 => f,
        Some(f) => {
            return Err(Error::domain(format!(
                "hand mass fraction must lie in (0, 0.05), got {f}"
            )))
        }
        None => match sex {
            Sex::Male => HAND_MASS_FRACTION_MALE,
            Sex::Female => HAND_MASS_FRACTION_FEMALE,
        },
    };
    Ok(body_mass * fraction)
}

/// Posture presets, ordered P1 < P2 < P3 < Custom for tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PostureLabel {
    P1,
    P2,
    P3,
    #[serde(rename = "custom")]
    Custom,
}

impl PostureLabel {
    pub const PRESETS: [PostureLabel; 3] = [PostureLabel::P1, PostureLabel::P2, PostureLabel::P3];

    pub fn as_str(&self) -> &'static str {
        match self {
            PostureLabel::P1 => "P1",
            PostureLabel::P2 => "P2",
            PostureLabel::P3 => "P3",
            PostureLabel::Custom => "custom",
        }
    }
}

impl fmt::Display for PostureLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PostureLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "P1" | "p1" => Ok(PostureLabel::P1),
            "P2" | "p2" => Ok(PostureLabel::P2),
            "P3" | "p3" => Ok(PostureLabel::P3),
            "custom" | "CUSTOM" | "Custom" => Ok(PostureLabel::Custom),
            other => Err(Error::domain(format!(
                "unknown posture '{other}' (expected P1, P2, P3 or custom)"
            ))),
        }
    }
}

/// Joint angles of the proximal chain, radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmPosture {
    pub shoulder_flexion: f64,
    pub elbow_flexion: f64,
    pub forearm_pronation: f64,
    pub label: PostureLabel,
}

impl ArmPosture {
    pub fn from_degrees(
        label: PostureLabel,
        shoulder_flexion: f64,
        elbow_flexion: f64,
        forearm_pronation: f64,
    ) -> Result<Self> {
        let p = Self {
            shoulder_flexion: shoulder_flexion.to_radians(),
            elbow_flexion: elbow_flexion.to_radians(),
            forearm_pronation: forearm_pronation.to_radians(),
            label,
        };
        p.validate()?;
        Ok(p)
    }

    /// Resting (P1), reaching (P2) and drinking (P3) postures. P3's pronation
    /// is not given by the source data; 90 degrees is assumed.
    pub fn preset(label: PostureLabel) -> Option<Self> {
        let (s, e, p) = match label {
            PostureLabel::P1 => (30.0, 60.0, 90.0),
            PostureLabel::P2 => (45.0, 60.0, 0.0),
            PostureLabel::P3 => (75.0, 120.0, 90.0),
            PostureLabel::Custom => return None,
        };
        Some(Self::from_degrees(label, s, e, p).expect("preset angles are finite"))
    }

    pub fn validate(&self) -> Result<()> {
        if [self.shoulder_flexion, self.elbow_flexion, self.forearm_pronation]
            .iter()
            .all(|a| a.is_finite())
        {
            Ok(())
        } else {
            Err(Error::domain(format!("posture {} has a non-finite angle", self.label)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadSpec {
    /// kg
    pub handheld_mass: f64,
    /// Distance of the load centre of mass from the wrist joint along the hand axis, m.
    pub grip_offset: f64,
}

impl LoadSpec {
    pub fn new(handheld_mass: f64, grip_offset: f64) -> Result<Self> {
        if !(handheld_mass.is_finite() && handheld_mass >= 0.0) {
            return Err(Error::domain(format!(
                "handheld mass must be >= 0, got {handheld_mass}"
            )));
        }
        if !(grip_offset.is_finite() && grip_offset >= 0.0) {
            return Err(Error::domain(format!("grip offset must be >= 0, got {grip_offset}")));
        }
        Ok(Self {
            handheld_mass,
            grip_offset,
        })
    }
}

impl Default for LoadSpec {
    fn default() -> Self {
        Self {
            handheld_mass: 0.5,
            grip_offset: 0.08,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub order: u32,
    /// rad
    pub coefficient: f64,
}

/// Periodic wrist trajectory
/// `theta(t) = mean + amplitude * sin(w t) + sum_k c_k * sin(k w t)`, `w = 2 pi / period`.
///
/// `harmonics` holds the terms on top of the fundamental; the default profile
/// has none.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionProfile {
    pub mean_angle: f64,
    pub amplitude: f64,
    pub period: f64,
    pub harmonics: Vec<Harmonic>,
}

impl MotionProfile {
    pub fn new(mean_angle: f64, amplitude: f64, period: f64, harmonics: Vec<Harmonic>) -> Result<Self> {
        if !mean_angle.is_finite() {
            return Err(Error::domain("motion mean angle must be finite"));
        }
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(Error::domain(format!("motion amplitude must be >= 0, got {amplitude}")));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::domain(format!("motion period must be > 0, got {period}")));
        }
        for h in &harmonics {
            if h.order == 0 || !h.coefficient.is_finite() {
                return Err(Error::domain(format!(
                    "invalid harmonic (order {}, coefficient {})",
                    h.order, h.coefficient
                )));
            }
        }
        Ok(Self {
            mean_angle,
            amplitude,
            period,
            harmonics,
        })
    }

    pub fn angle_at(&self, t: f64) -> f64 {
        let w = 2.0 * PI / self.period;
        let extra: f64 = self
            .harmonics
            .iter()
            .map(|h| h.coefficient * (f64::from(h.order) * w * t).sin())
            .sum();
        self.mean_angle + self.amplitude * (w * t).sin() + extra
    }

    /// Smallest and largest angle reached over one cycle.
    pub fn cycle_range(&self) -> (f64, f64) {
        if self.harmonics.is_empty() {
            return (self.mean_angle - self.amplitude, self.mean_angle + self.amplitude);
        }
        const GRID: usize = 8192;
        let dt = self.period / GRID as f64;
        let (mut i_min, mut i_max) = (0usize, 0usize);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..GRID {
            let a = self.angle_at(i as f64 * dt);
            if a < lo {
                lo = a;
                i_min = i;
            }
            if a > hi {
                hi = a;
                i_max = i;
            }
        }
        let refine = |centre: usize, sign: f64| {
            let c = centre as f64 * dt;
            let f = |t: f64| sign * self.angle_at(t);
            sign * golden_min(f, c - dt, c + dt)
        };
        (refine(i_min, 1.0).min(lo), (refine(i_max, -1.0)).max(hi))
    }

    pub fn check_limits(&self, limits: &JointLimits) -> Result<()> {
        let (lo, hi) = self.cycle_range();
        const SLACK: f64 = 1e-9;
        if lo < limits.min - SLACK || hi > limits.max + SLACK {
            return Err(Error::config(format!(
                "motion profile spans [{:.3}, {:.3}] deg, outside joint limits [{:.3}, {:.3}] deg",
                lo.to_degrees(),
                hi.to_degrees(),
                limits.min.to_degrees(),
                limits.max.to_degrees()
            )));
        }
        Ok(())
    }
}

impl Default for MotionProfile {
    /// One harmonic centred at -7 deg with 37 deg amplitude: spans the design
    /// range [-44, +30] deg.
    fn default() -> Self {
        Self {
            mean_angle: (-7.0f64).to_radians(),
            amplitude: 37.0f64.to_radians(),
            period: 4.0,
            harmonics: Vec::new(),
        }
    }
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    for _ in 0..80 {
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - inv_phi * (b - a);
        d = a + inv_phi * (b - a);
    }
    f(0.5 * (a + b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    /// rad
    pub angle: f64,
    /// N·m
    pub moment: f64,
}

/// Reaction moment sampled against wrist angle, sorted by strictly increasing angle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorqueCurve {
    samples: Vec<CurveSample>,
    posture: PostureLabel,
}

impl TorqueCurve {
    pub fn new(samples: Vec<CurveSample>, posture: PostureLabel) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::domain("torque curve has no samples"));
        }
        if let Some(s) = samples.iter().find(|s| !(s.angle.is_finite() && s.moment.is_finite())) {
            return Err(Error::domain(format!(
                "torque curve sample ({}, {}) is not finite",
                s.angle, s.moment
            )));
        }
        if let Some(w) = samples.windows(2).find(|w| w[1].angle <= w[0].angle) {
            return Err(Error::domain(format!(
                "torque curve angles must be strictly increasing ({} then {})",
                w[0].angle, w[1].angle
            )));
        }
        Ok(Self { samples, posture })
    }

    pub fn samples(&self) -> &[CurveSample] {
        &self.samples
    }

    pub fn posture(&self) -> PostureLabel {
        self.posture
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Largest absolute moment over the samples.
    pub fn peak_abs_moment(&self) -> f64 {
        self.samples.iter().map(|s| s.moment.abs()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            samples: self
                .samples
                .iter()
                .map(|s| CurveSample {
                    angle: s.angle,
                    moment: s.moment * factor,
                })
                .collect(),
            posture: self.posture,
        }
    }
}

/// World-frame geometry of the distal chain at one wrist angle.
struct WristFrame {
    wrist: Vector3<f64>,
    axis: Unit<Vector3<f64>>,
    hand_dir: Vector3<f64>,
}

fn wrist_frame(chain: &SegmentChain, posture: &ArmPosture, wrist_angle: f64) -> Result<WristFrame> {
    let upper = chain.get(SegmentRole::UpperArm)?;
    let fore = chain.get(SegmentRole::Forearm)?;
    chain.get(SegmentRole::Hand)?;

    let flex_axis = -Vector3::y_axis();
    let down = -Vector3::z();
    let upper_dir = Rotation3::from_axis_angle(&flex_axis, posture.shoulder_flexion) * down;
    let fore_rot = Rotation3::from_axis_angle(&flex_axis, posture.shoulder_flexion + posture.elbow_flexion);
    let fore_dir = fore_rot * down;
    // With the arm hanging at zero flexion the thumb points forward.
    let thumb_neutral = fore_rot * Vector3::x();
    let pronation = Rotation3::from_axis_angle(&Unit::new_normalize(-fore_dir), posture.forearm_pronation);
    let thumb = pronation * thumb_neutral;

    let axis = Unit::new_normalize(fore_dir.cross(&thumb));
    let hand_dir = Rotation3::from_axis_angle(&axis, wrist_angle) * fore_dir;
    let wrist = upper.length * upper_dir + fore.length * fore_dir;
    Ok(WristFrame { wrist, axis, hand_dir })
}

/// Static reaction moment about the wrist Ab-Ad axis, N·m, abduction positive.
///
/// Sums the gravity moments of the hand segment and the handheld load about
/// the wrist joint, projects them on the Ab-Ad axis and negates the result.
pub fn wrist_reaction_moment(
    chain: &SegmentChain,
    posture: &ArmPosture,
    wrist_angle: f64,
    load: &LoadSpec,
    gravity: f64,
) -> Result<f64> {
    if !wrist_angle.is_finite() {
        return Err(Error::domain(format!("wrist angle must be finite, got {wrist_angle}")));
    }
    if !gravity.is_finite() {
        return Err(Error::domain(format!("gravity must be finite, got {gravity}")));
    }
    posture.validate()?;
    let hand = chain.get(SegmentRole::Hand)?;
    let frame = wrist_frame(chain, posture, wrist_angle)?;

    let g = Vector3::new(0.0, 0.0, -gravity);
    let masses = [(hand.mass, hand.com_distance()), (load.handheld_mass, load.grip_offset)];
    let mut moment = 0.0;
    let mut scale = 0.0;
    for (mass, distance) in masses {
        let position = frame.wrist + distance * frame.hand_dir;
        let r = position - frame.wrist;
        moment -= r.cross(&(mass * g)).dot(&frame.axis);
        scale += mass * distance * gravity.abs();
    }
    // Quadrant posture angles leave rounding residue where the exact moment
    // is zero (e.g. a vertical Ab-Ad axis).
    if moment.abs() <= 1e-12 * scale {
        moment = 0.0;
    }
    Ok(moment)
}

/// Samples the reaction moment at `n_samples` evenly spaced angles covering
/// the range swept by one cycle of `motion`.
///
/// The moment depends on angle only, so the outgoing and returning strokes
/// of the cycle coincide; the curve is sorted by angle and duplicate angles
/// are collapsed, keeping the first.
pub fn sweep_torque_curve(
    chain: &SegmentChain,
    posture: &ArmPosture,
    motion: &MotionProfile,
    load: &LoadSpec,
    gravity: f64,
    n_samples: usize,
) -> Result<TorqueCurve> {
    if n_samples < 2 {
        return Err(Error::domain(format!("need at least 2 samples, got {n_samples}")));
    }
    let (lo, hi) = motion.cycle_range();
    let last = (n_samples - 1) as f64;
    let mut samples: Vec<CurveSample> = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let angle = if i == n_samples - 1 {
            hi
        } else {
            lo + (hi - lo) * (i as f64 / last)
        };
        if samples.last().is_some_and(|s| s.angle >= angle) {
            continue;
        }
        let moment = wrist_reaction_moment(chain, posture, angle, load, gravity)?;
        samples.push(CurveSample { angle, moment });
    }
    TorqueCurve::new(samples, posture.label)
}
