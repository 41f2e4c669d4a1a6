use nalgebra::{Isometry3, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::finger::{FingerGeometry, FingerParams};
use crate::error::{Error, Result};

pub const FINGER_COUNT: usize = 5;
pub const JOINTS_PER_FINGER: usize = 3;
pub const HAND_DOF: usize = FINGER_COUNT * JOINTS_PER_FINGER;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FingerName {
    Thumb,
    Index,
    Middle,
    Ring,
    Little,
}

impl FingerName {
    pub const ALL: [FingerName; FINGER_COUNT] = [
        FingerName::Thumb,
        FingerName::Index,
        FingerName::Middle,
        FingerName::Ring,
        FingerName::Little,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FingerName::Thumb => "thumb",
            FingerName::Index => "index",
            FingerName::Middle => "middle",
            FingerName::Ring => "ring",
            FingerName::Little => "little",
        }
    }
}

/// Placement of a finger base frame in the palm frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mounting {
    pub translation_mm: [f64; 3],
    /// Roll, pitch, yaw about the palm x, y, z axes.
    pub rpy_deg: [f64; 3],
}

impl Mounting {
    pub fn isometry(&self) -> Isometry3<f64> {
        let [x, y, z] = self.translation_mm;
        let [r, p, w] = self.rpy_deg.map(f64::to_radians);
        Isometry3::from_parts(Translation3::new(x, y, z), UnitQuaternion::from_euler_angles(r, p, w))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MountedFingerParams {
    pub name: FingerName,
    pub geometry: FingerParams,
    pub mounting: Mounting,
}

/// JSON form of the hand: exactly five fingers in thumb-to-little order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HandParams {
    pub fingers: Vec<MountedFingerParams>,
}

impl Default for HandParams {
    /// Palm frame: `x` toward the fingertips, `y` toward the thumb side, `z`
    /// out of the palm. The four long fingers sit 18 mm apart on the distal
    /// palm edge. The thumb lies across the palm, yawed 90° so it points
    /// along `+y`; its exact placement is an estimate.
    fn default() -> Self {
        let finger = |name, translation_mm: [f64; 3], yaw: f64| MountedFingerParams {
            name,
            geometry: FingerParams::default(),
            mounting: Mounting {
                translation_mm,
                rpy_deg: [0.0, 0.0, yaw],
            },
        };
        Self {
            fingers: vec![
                finger(FingerName::Thumb, [30.0, 45.0, 0.0], 90.0),
                finger(FingerName::Index, [90.0, 27.0, 0.0], 0.0),
                finger(FingerName::Middle, [90.0, 9.0, 0.0], 0.0),
                finger(FingerName::Ring, [90.0, -9.0, 0.0], 0.0),
                finger(FingerName::Little, [90.0, -27.0, 0.0], 0.0),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MountedFinger {
    pub name: FingerName,
    pub geometry: FingerGeometry,
    pub mounting: Isometry3<f64>,
}

/// Five mounted fingers, fifteen actuated joints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HandParams", into = "HandParams")]
pub struct HandModel {
    params: HandParams,
    fingers: [MountedFinger; FINGER_COUNT],
}

impl HandModel {
    pub fn fingers(&self) -> &[MountedFinger; FINGER_COUNT] {
        &self.fingers
    }

    pub fn finger(&self, index: usize) -> &MountedFinger {
        &self.fingers[index]
    }

    pub fn dof(&self) -> usize {
        self.fingers.len() * JOINTS_PER_FINGER
    }

    /// Splits a 15-vector into per-finger joint triples.
    pub fn split_joints(joints: &[f64; HAND_DOF]) -> [Vector3<f64>; FINGER_COUNT] {
        std::array::from_fn(|f| Vector3::from_fn(|j, _| joints[f * JOINTS_PER_FINGER + j]))
    }

    pub fn join_joints(per_finger: &[Vector3<f64>; FINGER_COUNT]) -> [f64; HAND_DOF] {
        std::array::from_fn(|k| per_finger[k / JOINTS_PER_FINGER][k % JOINTS_PER_FINGER])
    }
}

impl Default for HandModel {
    fn default() -> Self {
        HandParams::default()
            .try_into()
            .expect("default hand parameters are valid")
    }
}

impl TryFrom<HandParams> for HandModel {
    type Error = Error;

    fn try_from(params: HandParams) -> Result<Self> {
        if params.fingers.len() != FINGER_COUNT {
            return Err(Error::Config(format!(
                "a hand has exactly {FINGER_COUNT} fingers, got {}",
                params.fingers.len()
            )));
        }
        let mut built = Vec::with_capacity(FINGER_COUNT);
        for (slot, f) in params.fingers.iter().enumerate() {
            if f.name != FingerName::ALL[slot] {
                return Err(Error::Config(format!(
                    "finger {slot} must be `{}`, got `{}`",
                    FingerName::ALL[slot].as_str(),
                    f.name.as_str()
                )));
            }
            built.push(MountedFinger {
                name: f.name,
                geometry: FingerGeometry::try_from(f.geometry.clone())?,
                mounting: f.mounting.isometry(),
            });
        }
        let fingers: [MountedFinger; FINGER_COUNT] = built
            .try_into()
            .map_err(|_| Error::Config("finger count mismatch".into()))?;
        Ok(Self { params, fingers })
    }
}

impl From<HandModel> for HandParams {
    fn from(h: HandModel) -> Self {
        h.params
    }
}
