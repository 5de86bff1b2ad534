//! Torque path between the wrist joint and the motor: clock spring, lever
//! arm, Bowden-cable capstan friction, gearhead and motor torque constant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Clock spring about the wrist axis.
///
/// The spring torque falls linearly with abduction and vanishes at
/// `pretension_theta0`: `T_s(theta) = k * (theta0 - theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpringSpec {
    /// N·m/rad
    pub stiffness_k: f64,
    /// Zero-torque wrist angle, rad.
    pub pretension_theta0: f64,
    /// Wind-up applied at assembly, rad.
    pub pre_wind_turns: Option<f64>,
}

impl SpringSpec {
    pub fn new(stiffness_k: f64, pretension_theta0: f64, pre_wind_turns: Option<f64>) -> Result<Self> {
        if !(stiffness_k.is_finite() && stiffness_k > 0.0) {
            return Err(Error::domain(format!(
                "spring stiffness must be > 0, got {stiffness_k}"
            )));
        }
        if !(pretension_theta0.is_finite() && pretension_theta0 >= 0.0) {
            return Err(Error::domain(format!(
                "spring pretension angle must be >= 0, got {pretension_theta0}"
            )));
        }
        if let Some(p) = pre_wind_turns {
            if !p.is_finite() {
                return Err(Error::domain("pre-wind angle must be finite"));
            }
        }
        Ok(Self {
            stiffness_k,
            pretension_theta0,
            pre_wind_turns,
        })
    }
}

/// Spring torque at `wrist_angle` (rad, abduction positive), N·m.
pub fn spring_torque(spec: &SpringSpec, wrist_angle: f64) -> f64 {
    spec.stiffness_k * (spec.pretension_theta0 - wrist_angle)
}

/// Baseline torque installed by pre-winding the spring: `k * theta_pre`.
pub fn pretension_torque(spec: &SpringSpec) -> Result<f64> {
    spec.pre_wind_turns
        .map(|pre| spec.stiffness_k * pre)
        .ok_or_else(|| Error::config("spring has no pre-wind angle"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CableRoute {
    pub friction_mu: f64,
    /// Total bend of the Bowden sheath, rad.
    pub wrap_angle: f64,
    /// Joint axis to cable tangent, m. The motor spool is taken to have the
    /// same radius.
    pub lever_radius: f64,
}

impl CableRoute {
    pub fn new(friction_mu: f64, wrap_angle: f64, lever_radius: f64) -> Result<Self> {
        if !(friction_mu.is_finite() && friction_mu >= 0.0) {
            return Err(Error::domain(format!(
                "friction coefficient must be >= 0, got {friction_mu}"
            )));
        }
        if !(wrap_angle.is_finite() && wrap_angle >= 0.0) {
            return Err(Error::domain(format!("wrap angle must be >= 0, got {wrap_angle}")));
        }
        if !(lever_radius.is_finite() && lever_radius > 0.0) {
            return Err(Error::domain(format!("lever radius must be > 0, got {lever_radius}")));
        }
        Ok(Self {
            friction_mu,
            wrap_angle,
            lever_radius,
        })
    }

    /// `e^(mu * theta_w)`
    pub fn capstan_factor(&self) -> f64 {
        (self.friction_mu * self.wrap_angle).exp()
    }
}

impl Default for CableRoute {
    fn default() -> Self {
        Self {
            friction_mu: 0.04,
            wrap_angle: std::f64::consts::PI,
            lever_radius: 0.025,
        }
    }
}

/// Which side of the wrapped sheath the known force sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrictionDirection {
    /// Friction opposes the pull: maps a load-side tension to the larger
    /// tension the source has to supply (`F * e^(mu theta_w)`).
    Opposing,
    /// Friction helps hold the load: maps a source-side tension to the
    /// smaller tension delivered past the bend (`F * e^(-mu theta_w)`).
    Aiding,
}

pub fn capstan_transmit(force_in: f64, route: &CableRoute, direction: FrictionDirection) -> Result<f64> {
    if !(force_in.is_finite() && force_in >= 0.0) {
        return Err(Error::domain(format!("cable force must be >= 0, got {force_in}")));
    }
    let exponent = route.friction_mu * route.wrap_angle;
    Ok(match direction {
        FrictionDirection::Opposing => force_in * exponent.exp(),
        FrictionDirection::Aiding => force_in * (-exponent).exp(),
    })
}

/// Joint torque from a tangential cable tension, `tau = r * F`.
pub fn joint_torque_from_tension(force: f64, route: &CableRoute) -> f64 {
    route.lever_radius * force
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gearing {
    /// Motor turns per joint-side spool turn.
    pub ratio: f64,
    pub efficiency: f64,
    /// N·m/A
    pub torque_constant_kt: f64,
}

impl Gearing {
    pub fn new(ratio: f64, efficiency: f64, torque_constant_kt: f64) -> Result<Self> {
        if !(ratio.is_finite() && ratio >= 1.0) {
            return Err(Error::domain(format!("gear ratio must be >= 1, got {ratio}")));
        }
        if !(efficiency > 0.0 && efficiency <= 1.0) {
            return Err(Error::domain(format!(
                "efficiency must lie in (0, 1], got {efficiency}"
            )));
        }
        if !(torque_constant_kt.is_finite() && torque_constant_kt > 0.0) {
            return Err(Error::domain(format!(
                "torque constant must be > 0, got {torque_constant_kt}"
            )));
        }
        Ok(Self {
            ratio,
            efficiency,
            torque_constant_kt,
        })
    }
}

impl Default for Gearing {
    /// 128:1 planetary gearhead, 0.0105 N·m/A motor, 78 % transmission efficiency.
    fn default() -> Self {
        Self {
            ratio: 128.0,
            efficiency: 0.78,
            torque_constant_kt: 0.0105,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CableStatus {
    MotorDriven,
    /// The spring alone meets the demand; the cable would have to push.
    SpringDriven,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotorDemand {
    /// A
    pub current: f64,
    /// Joint-side cable tension, N.
    pub joint_tension: f64,
    /// Motor-side cable tension after capstan losses, N.
    pub motor_tension: f64,
    /// Motor shaft torque, N·m.
    pub motor_torque: f64,
    pub status: CableStatus,
}

/// Motor current needed to hold `joint_torque` at `wrist_angle`.
///
/// The spring torque counters the cable, so the cable supplies the
/// difference `joint_torque - spring_torque(theta)`. A negative difference
/// would need a pushing cable; the tension is clamped to zero and the result
/// flagged [`CableStatus::SpringDriven`].
pub fn motor_current_for_joint_torque(
    joint_torque: f64,
    spring: &SpringSpec,
    wrist_angle: f64,
    route: &CableRoute,
    gear: &Gearing,
) -> Result<MotorDemand> {
    if !(joint_torque.is_finite() && wrist_angle.is_finite()) {
        return Err(Error::domain("joint torque and wrist angle must be finite"));
    }
    let net = joint_torque - spring_torque(spring, wrist_angle);
    if net <= 0.0 {
        return Ok(MotorDemand {
            current: 0.0,
            joint_tension: 0.0,
            motor_tension: 0.0,
            motor_torque: 0.0,
            status: CableStatus::SpringDriven,
        });
    }
    let joint_tension = net / route.lever_radius;
    let motor_tension = capstan_transmit(joint_tension, route, FrictionDirection::Opposing)?;
    let spool_torque = motor_tension * route.lever_radius;
    let motor_torque = spool_torque / (gear.ratio * gear.efficiency);
    Ok(MotorDemand {
        current: motor_torque / gear.torque_constant_kt,
        joint_tension,
        motor_tension,
        motor_torque,
        status: CableStatus::MotorDriven,
    })
}
