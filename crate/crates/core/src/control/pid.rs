use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Bound on the integral term's contribution to the output.
    pub integral_limit: f64,
    pub output_limit: f64,
}

impl PidGains {
    pub fn validate(&self) -> Result<()> {
        if [self.kp, self.ki, self.kd]
            .iter()
            .any(|g| !(g.is_finite() && *g >= 0.0))
        {
            return Err(Error::Config(format!("PID gains must be non-negative: {self:?}")));
        }
        if !(self.integral_limit > 0.0 && self.output_limit > 0.0) {
            return Err(Error::Config(format!("PID limits must be positive: {self:?}")));
        }
        Ok(())
    }

    pub fn proportional(kp: f64, output_limit: f64) -> Self {
        Self {
            kp,
            ki: 0.0,
            kd: 0.0,
            integral_limit: output_limit,
            output_limit,
        }
    }
}

/// Discrete PID with clamped integral and saturated output.
///
/// The derivative acts on the measurement, not the error, so reference steps
/// do not kick the output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pid {
    pub gains: PidGains,
    integral: f64,
    last_measurement: Option<f64>,
    saturated: bool,
}

impl Pid {
    pub fn new(gains: PidGains) -> Self {
        Self {
            gains,
            integral: 0.0,
            last_measurement: None,
            saturated: false,
        }
    }

    pub fn reset(&mut self) {
        self.integral = 0.0;
        self.last_measurement = None;
        self.saturated = false;
    }

    pub fn integral_term(&self) -> f64 {
        self.integral
    }

    pub fn saturated(&self) -> bool {
        self.saturated
    }

    pub fn step(&mut self, reference: f64, measurement: f64, dt: f64) -> f64 {
        let g = &self.gains;
        let error = reference - measurement;
        self.integral = (self.integral + g.ki * error * dt).clamp(-g.integral_limit, g.integral_limit);
        let rate = match self.last_measurement {
            Some(prev) => (measurement - prev) / dt,
            None => 0.0,
        };
        self.last_measurement = Some(measurement);
        let raw = g.kp * error + self.integral - g.kd * rate;
        let out = raw.clamp(-g.output_limit, g.output_limit);
        self.saturated = out != raw;
        out
    }
}

/// Joint-space position loop of one finger: one PID per joint, producing
/// desired joint moments in N·mm.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionLoop {
    pids: [Pid; 3],
}

impl PositionLoop {
    pub fn new(gains: [PidGains; 3]) -> Self {
        Self {
            pids: gains.map(Pid::new),
        }
    }

    pub fn reset(&mut self) {
        self.pids.iter_mut().for_each(Pid::reset);
    }

    pub fn saturated(&self) -> bool {
        self.pids.iter().any(Pid::saturated)
    }

    /// Fails on non-finite input without touching the loop state; the caller
    /// is expected to command zero torque and latch a fault.
    pub fn step(&mut self, theta_ref: &Vector3<f64>, theta_meas: &Vector3<f64>, dt: f64) -> Result<Vector3<f64>> {
        ensure_finite(theta_ref.as_slice(), "joint reference")?;
        ensure_finite(theta_meas.as_slice(), "joint measurement")?;
        Ok(Vector3::from_fn(|j, _| {
            self.pids[j].step(theta_ref[j], theta_meas[j], dt)
        }))
    }
}

/// One outer-loop update; thin wrapper over [`PositionLoop::step`].
pub fn position_loop_step(
    loop_: &mut PositionLoop,
    theta_ref: &Vector3<f64>,
    theta_meas: &Vector3<f64>,
    dt: f64,
) -> Result<Vector3<f64>> {
    loop_.step(theta_ref, theta_meas, dt)
}

/// One inner-loop update: signed PWM duty in `[-1, 1]` from the current error.
pub fn current_loop_step(pid: &mut Pid, i_ref: f64, i_meas: f64, dt: f64) -> f64 {
    let duty = pid.step(i_ref, i_meas, dt);
    duty.clamp(-1.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gains(kp: f64, ki: f64, kd: f64) -> PidGains {
        PidGains {
            kp,
            ki,
            kd,
            integral_limit: 5.0,
            output_limit: 100.0,
        }
    }

    #[test]
    fn matched_reference_gives_zero() {
        let mut l = PositionLoop::new([gains(300.0, 10.0, 20.0); 3]);
        let th = Vector3::new(0.1, 0.5, 0.3);
        assert_eq!(l.step(&th, &th, 0.02).unwrap(), Vector3::zeros());
    }

    #[test]
    fn proportional_only() {
        let mut pid = Pid::new(gains(7.0, 0.0, 0.0));
        for _ in 0..5 {
            assert_eq!(pid.step(1.5, 1.0, 0.02), 3.5);
        }
    }

    #[test]
    fn integral_saturates_at_limit() {
        let mut pid = Pid::new(gains(0.0, 100.0, 0.0));
        let mut last = 0.0;
        for _ in 0..200 {
            let out = pid.step(1.0, 0.0, 0.001);
            assert!(out >= last);
            last = out;
        }
        assert_eq!(pid.integral_term(), 5.0);
        assert_eq!(last, 5.0);
    }

    #[test]
    fn output_is_saturated_and_flagged() {
        let mut pid = Pid::new(gains(1000.0, 0.0, 0.0));
        assert_eq!(pid.step(1.0, 0.0, 0.01), 100.0);
        assert!(pid.saturated());
        assert_eq!(pid.step(-1.0, 0.0, 0.01), -100.0);
    }

    #[test]
    fn derivative_acts_on_measurement() {
        let mut pid = Pid::new(gains(0.0, 0.0, 2.0));
        assert_eq!(pid.step(0.0, 0.0, 0.1), 0.0);
        // Reference jump alone: no kick.
        assert_eq!(pid.step(5.0, 0.0, 0.1), 0.0);
        assert!((pid.step(5.0, 0.1, 0.1) + 2.0).abs() < 1e-12);
    }

    #[test]
    fn current_loop_p_term_is_idle_at_zero_error() {
        let mut pid = Pid::new(PidGains {
            kp: 0.2,
            ki: 0.0,
            kd: 0.0,
            integral_limit: 1.0,
            output_limit: 1.0,
        });
        assert_eq!(current_loop_step(&mut pid, 0.3, 0.3, 1e-3), 0.0);
        assert_eq!(current_loop_step(&mut pid, 10.0, 0.0, 1e-3), 1.0);
    }

    #[test]
    fn non_finite_measurement_is_an_error() {
        let mut l = PositionLoop::new([gains(1.0, 0.0, 0.0); 3]);
        let err = l.step(&Vector3::zeros(), &Vector3::new(0.0, f64::NAN, 0.0), 0.02);
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
    }
}
