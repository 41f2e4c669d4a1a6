//! Static force and speed capability of one finger under a parameter set.

use nalgebra::Vector3;
use serde::Serialize;

use crate::actuation::MotorParams;
use crate::config::HandConfig;
use crate::error::{ensure_finite, Error, Result};
use crate::kinematics::{fingertip_force_to_joint_torque, jacobian, joint_torque_to_fingertip_force, FINGER_COUNT};
use crate::transmission::joint_to_motor_torque;

pub const MOTOR_NAMES: [&str; 3] = ["palm1", "palm2", "arm"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationReport {
    pub finger: usize,
    pub posture_deg: [f64; 3],
    /// Unit direction of the fingertip force in the finger frame.
    pub direction: [f64; 3],
    /// Joint moments per newton of fingertip force, N·mm/N.
    pub joint_torque_per_newton: [f64; 3],
    /// Motor output torques per newton, N·mm/N.
    pub motor_torque_per_newton: [f64; 3],
    /// Largest continuous output torque of each motor, N·mm.
    pub motor_capacity_nmm: [f64; 3],
    pub max_force_n: f64,
    pub limiting_motor: &'static str,
    /// `‖Jᵀ F̂ - τ‖` for the force recovered from the joint moments at
    /// `max_force_n`.
    pub duality_residual: f64,
    /// Joint speed with every motor at no-load speed, rpm.
    pub no_load_joint_speed_rpm: [f64; 3],
}

/// Largest torque the motor sustains under driver current regulation.
pub fn motor_capacity(params: &MotorParams) -> f64 {
    (params.current_limit_a * params.output_torque_constant()).min(params.stall_torque_nmm)
}

/// `‖Jᵀ F̂ - τ‖` where `τ = Jᵀ F` and `F̂` is the least-squares force
/// recovered from `τ`.
pub fn static_duality_residual(jac: &nalgebra::Matrix3<f64>, force: &Vector3<f64>) -> Result<f64> {
    let tau = fingertip_force_to_joint_torque(jac, force);
    let recovered = joint_torque_to_fingertip_force(jac, &tau)?;
    Ok((jac.transpose() * recovered - tau).norm())
}

/// Fingertip force the motors of `finger` can hold along `direction` at
/// `posture` (radians).
pub fn fingertip_force_capability(
    config: &HandConfig,
    finger: usize,
    posture: &Vector3<f64>,
    direction: &Vector3<f64>,
) -> Result<CalibrationReport> {
    if finger >= FINGER_COUNT {
        return Err(Error::InvalidArgument(format!("finger index {finger} out of range")));
    }
    ensure_finite(direction.as_slice(), "force direction")?;
    let dir = direction
        .try_normalize(1e-12)
        .ok_or_else(|| Error::InvalidArgument("force direction must be non-zero".into()))?;
    let geom = &config.hand.finger(finger).geometry;
    let jac = jacobian(geom, posture)?;
    let tau_unit = fingertip_force_to_joint_torque(&jac, &dir);
    let motor_unit = joint_to_motor_torque(&config.routing, &tau_unit);
    let motors = [&config.motors.palm, &config.motors.palm, &config.motors.forearm];
    let capacity = motors.map(motor_capacity);
    let (limiting, max_force) = (0..3)
        .filter(|&k| motor_unit[k].abs() > 1e-12)
        .map(|k| (k, capacity[k] / motor_unit[k].abs()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::InvalidArgument("force direction loads no motor at this posture".into()))?;
    let duality_residual = static_duality_residual(&jac, &(dir * max_force))?;

    let r = &config.routing;
    let no_load = |m: &MotorParams| config.control.supply_v / m.back_emf_v_s_per_rad;
    let rad_s_to_rpm = 60.0 / (2.0 * std::f64::consts::PI);
    let no_load_joint_speed_rpm = [
        no_load(&config.motors.palm) * r.r_palm_mm / r.r_mcp1_mm * rad_s_to_rpm,
        no_load(&config.motors.palm) * r.r_palm_mm / r.r_mcp2_mm * rad_s_to_rpm,
        no_load(&config.motors.forearm) * r.r_arm_mm / r.r_pip_mm * rad_s_to_rpm,
    ];

    Ok(CalibrationReport {
        finger,
        posture_deg: [posture.x, posture.y, posture.z].map(f64::to_degrees),
        direction: [dir.x, dir.y, dir.z],
        joint_torque_per_newton: [tau_unit.x, tau_unit.y, tau_unit.z],
        motor_torque_per_newton: [motor_unit.x, motor_unit.y, motor_unit.z],
        motor_capacity_nmm: capacity,
        max_force_n: max_force,
        limiting_motor: MOTOR_NAMES[limiting],
        duality_residual,
        no_load_joint_speed_rpm,
    })
}
