//! Reference trajectory files for `simulate`.
//!
//! ```json
//! { "waypoints": [ { "t_s": 0.0, "joints_deg": [[0, 0, 0], ...5 fingers] }, ... ] }
//! ```
//!
//! References are interpolated linearly between waypoints and held constant
//! before the first and after the last.

use std::path::Path;

use serde::Deserialize;
use tendon_hand::kinematics::{FINGER_COUNT, HAND_DOF};
use tendon_hand::{Error, Result};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct Waypoint {
    t_s: f64,
    joints_deg: [[f64; 3]; FINGER_COUNT],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrajectoryFile {
    waypoints: Vec<Waypoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    /// Radians, finger-major.
    joints: Vec<[f64; HAND_DOF]>,
}

impl Trajectory {
    pub fn constant(joints: [f64; HAND_DOF]) -> Self {
        Self {
            times: vec![0.0],
            joints: vec![joints],
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: TrajectoryFile = serde_json::from_str(text)?;
        if file.waypoints.is_empty() {
            return Err(Error::InvalidArgument("trajectory has no waypoints".into()));
        }
        let mut times = Vec::with_capacity(file.waypoints.len());
        let mut joints = Vec::with_capacity(file.waypoints.len());
        for w in &file.waypoints {
            let flat: Vec<f64> = w.joints_deg.iter().flatten().map(|d| d.to_radians()).collect();
            if !w.t_s.is_finite() || flat.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("trajectory values must be finite".into()));
            }
            if times.last().is_some_and(|&t| w.t_s <= t) {
                return Err(Error::InvalidArgument("waypoint times must increase strictly".into()));
            }
            times.push(w.t_s);
            joints.push(flat.try_into().expect("5 × 3 joints"));
        }
        Ok(Self { times, joints })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn at(&self, t: f64) -> [f64; HAND_DOF] {
        let i = self.times.partition_point(|&w| w <= t);
        if i == 0 {
            return self.joints[0];
        }
        if i == self.times.len() {
            return self.joints[i - 1];
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let s = (t - t0) / (t1 - t0);
        std::array::from_fn(|k| self.joints[i - 1][k] + s * (self.joints[i][k] - self.joints[i - 1][k]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point() -> Trajectory {
        let a = [[0.0; 3]; FINGER_COUNT];
        let mut b = a;
        b[1][1] = 60.0;
        let text = serde_json::json!({
            "waypoints": [
                { "t_s": 1.0, "joints_deg": a },
                { "t_s": 2.0, "joints_deg": b },
            ]
        });
        Trajectory::from_json(&text.to_string()).unwrap()
    }

    #[test]
    fn holds_outside_and_interpolates_inside() {
        let tr = two_point();
        assert_eq!(tr.at(0.0)[4], 0.0);
        assert!((tr.at(1.5)[4] - 30f64.to_radians()).abs() < 1e-12);
        assert!((tr.at(5.0)[4] - 60f64.to_radians()).abs() < 1e-12);
    }

    #[test]
    fn non_increasing_times_are_rejected() {
        let text = r#"{"waypoints":[{"t_s":1,"joints_deg":[[0,0,0],[0,0,0],[0,0,0],[0,0,0],[0,0,0]]},
                                    {"t_s":1,"joints_deg":[[0,0,0],[0,0,0],[0,0,0],[0,0,0],[0,0,0]]}]}"#;
        assert!(Trajectory::from_json(text).is_err());
    }
}
