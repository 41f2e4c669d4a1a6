//! Brushed DC gearmotor model driven by a PWM H-bridge.
//!
//! Torque and speed are referred to the gearbox output shaft. The winding is
//! first order (`L di/dt = d·V - Ke ω - R i`); with zero inductance it
//! collapses to the algebraic steady state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotorParams {
    /// Motor-side torque constant, N·mm/A.
    pub torque_constant_nmm_per_a: f64,
    /// Back-EMF per output-shaft rad/s, V·s/rad.
    pub back_emf_v_s_per_rad: f64,
    pub winding_resistance_ohm: f64,
    /// Zero selects the algebraic electrical model.
    #[serde(default)]
    pub winding_inductance_h: f64,
    pub gear_ratio: f64,
    /// Output-shaft stall torque at the top of the supply range, N·mm.
    pub stall_torque_nmm: f64,
    /// Output-shaft no-load speed at the top of the supply range, rad/s.
    pub max_speed_rad_s: f64,
    pub voltage_range_v: [f64; 2],
    /// Driver current regulation limit, A.
    pub current_limit_a: f64,
}

impl MotorParams {
    /// Palm MCP motor: N20-class micro gearmotor, 100:1.
    pub fn palm_default() -> Self {
        Self::consistent(5.0, 100.0, 20.0, 0.28)
    }

    /// Forearm PIP motor: 180-class gearmotor, 50:1.
    pub fn forearm_default() -> Self {
        Self::consistent(8.0, 50.0, 4.0, 1.5)
    }

    /// Ideal-motor parameter set: back-EMF equals the output torque constant
    /// and stall/no-load figures follow from 12 V.
    pub fn consistent(kt_nmm_per_a: f64, gear_ratio: f64, resistance_ohm: f64, current_limit_a: f64) -> Self {
        let v_max = 12.0;
        let ke = gear_ratio * kt_nmm_per_a / 1000.0;
        Self {
            torque_constant_nmm_per_a: kt_nmm_per_a,
            back_emf_v_s_per_rad: ke,
            winding_resistance_ohm: resistance_ohm,
            winding_inductance_h: 0.0,
            gear_ratio,
            stall_torque_nmm: gear_ratio * kt_nmm_per_a * v_max / resistance_ohm,
            max_speed_rad_s: v_max / ke,
            voltage_range_v: [3.0, v_max],
            current_limit_a,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("torque_constant_nmm_per_a", self.torque_constant_nmm_per_a),
            ("back_emf_v_s_per_rad", self.back_emf_v_s_per_rad),
            ("winding_resistance_ohm", self.winding_resistance_ohm),
            ("gear_ratio", self.gear_ratio),
            ("stall_torque_nmm", self.stall_torque_nmm),
            ("max_speed_rad_s", self.max_speed_rad_s),
            ("current_limit_a", self.current_limit_a),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("motor {name} must be positive, got {v}")));
            }
        }
        if !(self.winding_inductance_h >= 0.0) {
            return Err(Error::Config("winding inductance must be non-negative".into()));
        }
        let [lo, hi] = self.voltage_range_v;
        if !(lo > 0.0 && lo < hi) {
            return Err(Error::Config(format!(
                "invalid voltage range {:?}",
                self.voltage_range_v
            )));
        }
        Ok(())
    }

    /// Output torque per ampere, N·mm/A.
    pub fn output_torque_constant(&self) -> f64 {
        self.gear_ratio * self.torque_constant_nmm_per_a
    }

    /// Winding current at stall with full supply.
    pub fn stall_current(&self) -> f64 {
        self.voltage_range_v[1] / self.winding_resistance_ohm
    }

    pub fn check_supply(&self, supply: f64) -> Result<()> {
        let [lo, hi] = self.voltage_range_v;
        if supply.is_finite() && supply >= lo && supply <= hi {
            Ok(())
        } else {
            Err(Error::Config(format!("supply {supply} V outside [{lo}, {hi}] V")))
        }
    }
}

/// What the H-bridge does with the winding during one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BridgeCommand {
    /// Signed PWM duty in `[-1, 1]`.
    Pwm(f64),
    /// Outputs released to high impedance.
    Release,
}

impl BridgeCommand {
    /// Winding current after one step of `dt` seconds.
    pub fn step(self, params: &MotorParams, current: f64, supply: f64, omega: f64, dt: f64) -> Result<f64> {
        match self {
            BridgeCommand::Pwm(duty) => electrical_step(params, current, duty, supply, omega, dt),
            BridgeCommand::Release => coast_step(params, current, supply, omega, dt),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotorTorque {
    /// Output-shaft torque, N·mm.
    pub torque: f64,
    /// Set when the stall limit clipped the ideal torque.
    pub saturated: bool,
}

/// Output torque `gear · kt · i`, clipped to `±stall_torque`.
pub fn motor_torque(params: &MotorParams, current: f64) -> MotorTorque {
    let ideal = params.output_torque_constant() * current;
    let limit = params.stall_torque_nmm;
    MotorTorque {
        torque: ideal.clamp(-limit, limit),
        saturated: ideal.abs() > limit,
    }
}

/// Winding current after one step of `dt` seconds with signed PWM duty
/// `duty ∈ [-1, 1]` on `supply` volts and output speed `omega`.
///
/// With inductance the first-order ODE is integrated exactly over the step
/// (the 1 kHz step is far longer than the winding time constant, where forward
/// Euler diverges).
pub fn electrical_step(params: &MotorParams, current: f64, duty: f64, supply: f64, omega: f64, dt: f64) -> Result<f64> {
    params.check_supply(supply)?;
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let steady = steady_state_current(params, duty, supply, omega);
    Ok(approach(params, current, steady, dt))
}

/// Winding current after `dt` with the H-bridge released (both outputs high
/// impedance). Current only flows through the body diodes once the back-EMF
/// exceeds the supply.
pub fn coast_step(params: &MotorParams, current: f64, supply: f64, omega: f64, dt: f64) -> Result<f64> {
    params.check_supply(supply)?;
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let emf = params.back_emf_v_s_per_rad * omega;
    let steady = -emf.signum() * (emf.abs() - supply).max(0.0) / params.winding_resistance_ohm;
    Ok(approach(params, current, steady, dt))
}

fn approach(params: &MotorParams, current: f64, steady: f64, dt: f64) -> f64 {
    let l = params.winding_inductance_h;
    if l == 0.0 {
        return steady;
    }
    let decay = (-params.winding_resistance_ohm * dt / l).exp();
    steady + (current - steady) * decay
}

pub fn steady_state_current(params: &MotorParams, duty: f64, supply: f64, omega: f64) -> f64 {
    let duty = duty.clamp(-1.0, 1.0);
    (duty * supply - params.back_emf_v_s_per_rad * omega) / params.winding_resistance_ohm
}
