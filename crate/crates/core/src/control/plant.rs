use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::actuation::{motor_torque, BridgeCommand, MotorParams};
use crate::error::{Error, Result};
use crate::kinematics::{FingerGeometry, JointState};
use crate::transmission::{joint_to_motor_velocity, motor_to_joint_torque, TendonRouting};

/// Rigid single-axis joint dynamics `I θ̈ = M - b θ̇`.
///
/// Default inertias are dominated by motor rotors reflected through the
/// gearbox and the 2:1 pulley ratio (two palm rotors per MCP axis); the
/// phalanges themselves add only a few percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantParams {
    /// N·mm·s²/rad for MCP-1, MCP-2, PIP.
    pub inertia_nmm_s2: [f64; 3],
    /// N·mm·s/rad.
    pub damping_nmm_s: [f64; 3],
    /// Spring preload on every tendon, N.
    pub tendon_pretension_n: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self {
            inertia_nmm_s2: [0.8, 0.8, 0.5],
            damping_nmm_s: [4.0, 4.0, 3.0],
            tendon_pretension_n: 2.0,
        }
    }
}

impl PlantParams {
    pub fn validate(&self) -> Result<()> {
        if self.inertia_nmm_s2.iter().any(|&i| !(i > 0.0)) {
            return Err(Error::Config("joint inertia must be positive".into()));
        }
        if self.damping_nmm_s.iter().any(|&b| !(b >= 0.0)) {
            return Err(Error::Config("joint damping must be non-negative".into()));
        }
        if !(self.tendon_pretension_n >= 0.0) {
            return Err(Error::Config("tendon pretension must be non-negative".into()));
        }
        Ok(())
    }
}

/// Result of one plant step of one finger.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantStep {
    pub current: Vector3<f64>,
    pub motor_torque: Vector3<f64>,
    pub joint_torque: Vector3<f64>,
    pub torque_saturated: bool,
}

/// Advances one finger by `dt`: motor windings, tendon transmission, then
/// semi-implicit Euler on the joints with hard stops at the joint limits.
#[allow(clippy::too_many_arguments)]
pub fn step_finger_plant(
    joints: &mut JointState,
    current: &Vector3<f64>,
    bridge: &[BridgeCommand; 3],
    geom: &FingerGeometry,
    routing: &TendonRouting,
    motors: [&MotorParams; 3],
    plant: &PlantParams,
    supply: f64,
    dt: f64,
) -> Result<PlantStep> {
    let omega = joint_to_motor_velocity(routing, &joints.theta_dot);
    let mut next_current = Vector3::zeros();
    let mut torque = Vector3::zeros();
    let mut saturated = false;
    for k in 0..3 {
        next_current[k] = bridge[k].step(motors[k], current[k], supply, omega[k], dt)?;
        let t = motor_torque(motors[k], next_current[k]);
        torque[k] = t.torque;
        saturated |= t.saturated;
    }
    let joint_torque = motor_to_joint_torque(routing, &torque);
    for j in 0..3 {
        let accel = (joint_torque[j] - plant.damping_nmm_s[j] * joints.theta_dot[j]) / plant.inertia_nmm_s2[j];
        joints.theta_dot[j] += dt * accel;
        joints.theta[j] += dt * joints.theta_dot[j];
        let lim = geom.limits()[j];
        if joints.theta[j] < lim.min {
            joints.theta[j] = lim.min;
            joints.theta_dot[j] = joints.theta_dot[j].max(0.0);
        } else if joints.theta[j] > lim.max {
            joints.theta[j] = lim.max;
            joints.theta_dot[j] = joints.theta_dot[j].min(0.0);
        }
    }
    Ok(PlantStep {
        current: next_current,
        motor_torque: torque,
        joint_torque,
        torque_saturated: saturated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(duty: Vector3<f64>, steps: usize) -> JointState {
        let bridge = [0, 1, 2].map(|k| BridgeCommand::Pwm(duty[k]));
        let geom = FingerGeometry::default();
        let routing = TendonRouting::default();
        let palm = MotorParams::palm_default();
        let arm = MotorParams::forearm_default();
        let plant = PlantParams::default();
        let mut js = JointState::at_rest(Vector3::new(0.0, 0.5, 0.5));
        let mut i = Vector3::zeros();
        for _ in 0..steps {
            let out = step_finger_plant(
                &mut js,
                &i,
                &bridge,
                &geom,
                &routing,
                [&palm, &palm, &arm],
                &plant,
                12.0,
                1e-3,
            )
            .unwrap();
            i = out.current;
        }
        js
    }

    #[test]
    fn zero_duty_at_rest_stays_put() {
        let js = run(Vector3::zeros(), 100);
        assert_eq!(js, JointState::at_rest(Vector3::new(0.0, 0.5, 0.5)));
    }

    #[test]
    fn opposed_palm_duty_flexes_mcp2_only() {
        let js = run(Vector3::new(0.2, -0.2, 0.0), 50);
        assert!(js.theta[1] > 0.5);
        assert!(js.theta[0].abs() < 1e-12);
        assert_eq!(js.theta[2], 0.5);
    }

    #[test]
    fn hard_stop_holds_joint_inside_limits() {
        let js = run(Vector3::new(0.0, 0.0, 1.0), 3000);
        assert_eq!(js.theta[2], std::f64::consts::FRAC_PI_2);
        assert!(js.theta_dot[2] <= 0.0);
    }
}
