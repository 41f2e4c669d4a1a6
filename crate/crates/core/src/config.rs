//! Hand parameter file: geometry, transmission, motors, sensors, control,
//! plant and bus wiring in one JSON document.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::actuation::MotorParams;
use crate::bus::BoardId;
use crate::control::{ControlConfig, PlantParams};
use crate::error::{Error, Result};
use crate::kinematics::{HandModel, FINGER_COUNT};
use crate::sensing::SensorConfig;
use crate::transmission::TendonRouting;

/// The default parameter file, identical to [`HandConfig::default`].
pub const DEFAULT_CONFIG_JSON: &str = include_str!("../data/default_hand.json");

/// Motors per finger: palm 1, palm 2, forearm.
pub const MOTORS_PER_FINGER: usize = 3;
pub const MOTOR_COUNT: usize = FINGER_COUNT * MOTORS_PER_FINGER;
pub const SLOTS_PER_DRIVER: usize = 4;

/// Where the default motor constants come from.
pub const MOTOR_PROVENANCE: &str = "Datasheet-class values, not measurements of a specific unit. \
palm: N20-size micro gearmotor, 100:1, kt 5 N*mm/A, 20 ohm, driver limit 0.28 A. \
forearm: 180-size gearmotor, 50:1, kt 8 N*mm/A, 4 ohm, driver limit 1.5 A. \
Back-EMF equals the output torque constant; stall and no-load figures at 12 V. \
Current limits calibrated so the index fingertip holds about 11 N along +z at (0, 30, 30) deg.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotorSet {
    /// Free-text origin of the constants; not interpreted.
    #[serde(default)]
    pub provenance: String,
    pub palm: MotorParams,
    pub forearm: MotorParams,
}

impl Default for MotorSet {
    fn default() -> Self {
        Self {
            provenance: MOTOR_PROVENANCE.to_string(),
            palm: MotorParams::palm_default(),
            forearm: MotorParams::forearm_default(),
        }
    }
}

impl MotorSet {
    /// Parameters of motor `k` of a finger (`0`, `1` palm; `2` forearm).
    pub fn for_slot(&self, k: usize) -> &MotorParams {
        if k < 2 {
            &self.palm
        } else {
            &self.forearm
        }
    }
}

/// Driver board and channel serving one motor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotorSlot {
    /// Driver index 0..4 (board id 5..8).
    pub driver: u8,
    pub channel: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusConfig {
    /// Entry `3 * finger + k` wires motor `k` of `finger`.
    pub motor_map: Vec<MotorSlot>,
}

impl Default for BusConfig {
    fn default() -> Self {
        let motor_map = (0..MOTOR_COUNT)
            .map(|m| MotorSlot {
                driver: (m / SLOTS_PER_DRIVER) as u8,
                channel: (m % SLOTS_PER_DRIVER) as u8,
            })
            .collect();
        Self { motor_map }
    }
}

impl BusConfig {
    pub fn validate(&self) -> Result<()> {
        if self.motor_map.len() != MOTOR_COUNT {
            return Err(Error::Config(format!(
                "motor_map needs {MOTOR_COUNT} entries, got {}",
                self.motor_map.len()
            )));
        }
        let mut used = [[false; SLOTS_PER_DRIVER]; BoardId::DRIVER_COUNT as usize];
        for (m, s) in self.motor_map.iter().enumerate() {
            let (d, c) = (s.driver as usize, s.channel as usize);
            if d >= used.len() || c >= SLOTS_PER_DRIVER {
                return Err(Error::Config(format!("motor {m} mapped to missing slot {s:?}")));
            }
            if std::mem::replace(&mut used[d][c], true) {
                return Err(Error::Config(format!("motor {m} shares slot {s:?} with another motor")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HandConfig {
    pub hand: HandModel,
    pub routing: TendonRouting,
    pub motors: MotorSet,
    pub sensors: SensorConfig,
    pub control: ControlConfig,
    pub plant: PlantParams,
    pub bus: BusConfig,
}

impl HandConfig {
    pub fn validate(&self) -> Result<()> {
        self.routing.validate()?;
        self.motors.palm.validate()?;
        self.motors.forearm.validate()?;
        self.motors.palm.check_supply(self.control.supply_v)?;
        self.motors.forearm.check_supply(self.control.supply_v)?;
        self.sensors.validate()?;
        self.control.validate()?;
        self.plant.validate()?;
        self.bus.validate()?;
        let inner = self.control.timing.inner_hz;
        if self.sensors.sample_hz != self.control.timing.sensor_hz {
            return Err(Error::Config(format!(
                "sensor sample rate {} Hz differs from the loop timing's {} Hz",
                self.sensors.sample_hz, self.control.timing.sensor_hz
            )));
        }
        if !inner.is_multiple_of(self.sensors.sample_hz) {
            return Err(Error::Config("sensor rate must divide the inner loop rate".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_validates_and_round_trips() {
        let cfg = HandConfig::default();
        cfg.validate().unwrap();
        let back = HandConfig::from_json(&cfg.to_json_pretty().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn shipped_file_matches_default() {
        assert_eq!(
            HandConfig::from_json(DEFAULT_CONFIG_JSON).unwrap(),
            HandConfig::default()
        );
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut v: serde_json::Value = serde_json::to_value(HandConfig::default()).unwrap();
        v["plant"]["mass"] = 1.0.into();
        assert!(matches!(HandConfig::from_json(&v.to_string()), Err(Error::Json(_))));
    }

    #[test]
    fn duplicate_motor_slot_is_rejected() {
        let mut cfg = HandConfig::default();
        cfg.bus.motor_map[3] = cfg.bus.motor_map[2];
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn default_map_leaves_last_channel_spare() {
        let cfg = BusConfig::default();
        assert_eq!(cfg.motor_map[14], MotorSlot { driver: 3, channel: 2 });
    }
}
