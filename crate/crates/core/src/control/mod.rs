//! Cascaded control: a 50 Hz joint position loop on the central controller
//! feeding 1 kHz current loops on the driver boards, plus the watchdog and
//! low-pass that protect against a lost link.

mod pid;
mod plant;
mod sim;
mod watchdog;

pub use pid::{current_loop_step, position_loop_step, Pid, PidGains, PositionLoop};
pub use plant::{step_finger_plant, PlantParams};
pub use sim::{
    DriverFlags, FingerFlags, FingerState, HandSimulator, HandState, RoundReport, SimOptions, TelemetryRecord,
    TransportKind,
};
pub use watchdog::{protective_decay, watchdog_step, LinkState, Watchdog};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopTiming {
    pub outer_hz: u32,
    pub inner_hz: u32,
    pub sensor_hz: u32,
    /// Missed outer frames tolerated before the protective stop.
    pub watchdog_window: u32,
}

impl Default for LoopTiming {
    fn default() -> Self {
        Self {
            outer_hz: 50,
            inner_hz: 1000,
            sensor_hz: 200,
            watchdog_window: 5,
        }
    }
}

impl LoopTiming {
    pub fn validate(&self) -> Result<()> {
        if self.outer_hz == 0 || self.inner_hz == 0 || self.sensor_hz == 0 {
            return Err(Error::Config("loop rates must be positive".into()));
        }
        if !self.inner_hz.is_multiple_of(self.outer_hz) {
            return Err(Error::Config(format!(
                "inner rate {} Hz is not a multiple of outer rate {} Hz",
                self.inner_hz, self.outer_hz
            )));
        }
        if self.sensor_hz < self.outer_hz || !self.inner_hz.is_multiple_of(self.sensor_hz) {
            return Err(Error::Config(format!(
                "sensor rate {} Hz must be at least the outer rate and divide the inner rate",
                self.sensor_hz
            )));
        }
        Ok(())
    }

    pub fn inner_per_outer(&self) -> u32 {
        self.inner_hz / self.outer_hz
    }

    pub fn inner_per_sensor(&self) -> u32 {
        self.inner_hz / self.sensor_hz
    }

    pub fn outer_dt(&self) -> f64 {
        1.0 / f64::from(self.outer_hz)
    }

    pub fn inner_dt(&self) -> f64 {
        1.0 / f64::from(self.inner_hz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlConfig {
    pub timing: LoopTiming,
    /// MCP-1, MCP-2, PIP; output in N·mm of joint moment.
    pub position_gains: [PidGains; 3],
    /// Output is PWM duty.
    pub palm_current_gains: PidGains,
    pub forearm_current_gains: PidGains,
    /// Per-inner-tick factor of the protective low-pass, in (0, 1).
    pub protective_alpha: f64,
    /// Fraction of the pre-stop setpoint at which the low-pass hands over
    /// to a released H-bridge, in [0, 1).
    pub protective_release: f64,
    pub supply_v: f64,
}

impl Default for ControlConfig {
    /// Gains tuned against the default plant and motors.
    fn default() -> Self {
        let position = |kp: f64, ki: f64, kd: f64| PidGains {
            kp,
            ki,
            kd,
            integral_limit: 1.0,
            output_limit: 1000.0,
        };
        let current = |kp: f64, ki: f64| PidGains {
            kp,
            ki,
            kd: 0.0,
            integral_limit: 1.0,
            output_limit: 1.0,
        };
        Self {
            timing: LoopTiming::default(),
            position_gains: [
                position(320.0, 600.0, 24.0),
                position(320.0, 600.0, 24.0),
                position(200.0, 400.0, 14.0),
            ],
            palm_current_gains: current(0.03, 1200.0),
            forearm_current_gains: current(0.006, 240.0),
            protective_alpha: 0.5,
            protective_release: 0.01,
            supply_v: 12.0,
        }
    }
}

impl ControlConfig {
    pub fn validate(&self) -> Result<()> {
        self.timing.validate()?;
        for g in self
            .position_gains
            .iter()
            .chain([&self.palm_current_gains, &self.forearm_current_gains])
        {
            g.validate()?;
        }
        if !(self.protective_alpha > 0.0 && self.protective_alpha < 1.0) {
            return Err(Error::Config(format!(
                "protective_alpha must lie in (0, 1), got {}",
                self.protective_alpha
            )));
        }
        if !(0.0..1.0).contains(&self.protective_release) {
            return Err(Error::Config(format!(
                "protective_release must lie in [0, 1), got {}",
                self.protective_release
            )));
        }
        Ok(())
    }
}
