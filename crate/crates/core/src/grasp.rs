//! Grasp preset library: named whole-hand joint configurations following the
//! 33 types of a standard human grasp taxonomy, with feasibility checks and
//! closed-loop execution.
//!
//! The joint vectors are hand-authored approximations of each grasp type.

use serde::{Deserialize, Serialize};

use crate::control::{HandSimulator, LinkState, TelemetryRecord};
use crate::error::{Error, Result};
use crate::kinematics::{forward_kinematics, mounted_position, FingerName, HandModel, FINGER_COUNT, HAND_DOF};

const SHIPPED: &str = include_str!("../data/grasp_poses.json");

pub const JOINT_NAMES: [&str; 3] = ["mcp1", "mcp2", "pip"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraspCategory {
    Power,
    Precision,
    Intermediate,
}

/// A named hand configuration; joints in radians, finger-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GraspPose {
    pub name: String,
    pub category: GraspCategory,
    pub joints: [f64; HAND_DOF],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseRecord {
    name: String,
    category: GraspCategory,
    joints_deg: [[f64; 3]; FINGER_COUNT],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseFile {
    angle_unit: String,
    finger_order: Vec<FingerName>,
    joint_order: Vec<String>,
    poses: Vec<PoseRecord>,
}

impl GraspPose {
    /// Joint angles in degrees, `[finger][mcp1, mcp2, pip]`.
    pub fn joints_deg(&self) -> [[f64; 3]; FINGER_COUNT] {
        std::array::from_fn(|f| std::array::from_fn(|j| self.joints[3 * f + j].to_degrees()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraspLibrary {
    poses: Vec<GraspPose>,
}

impl GraspLibrary {
    /// The 33 poses compiled into the crate.
    pub fn shipped() -> Self {
        Self::from_json(SHIPPED).expect("shipped grasp file is valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: PoseFile = serde_json::from_str(text)?;
        if file.angle_unit != "deg" {
            return Err(Error::Config(format!("unsupported angle unit `{}`", file.angle_unit)));
        }
        if file.finger_order != FingerName::ALL {
            return Err(Error::Config(
                "finger_order must be thumb, index, middle, ring, little".into(),
            ));
        }
        if file.joint_order != JOINT_NAMES {
            return Err(Error::Config("joint_order must be mcp1, mcp2, pip".into()));
        }
        let mut poses: Vec<GraspPose> = Vec::with_capacity(file.poses.len());
        for r in file.poses {
            if poses.iter().any(|p| p.name == r.name) {
                return Err(Error::Config(format!("duplicate grasp pose `{}`", r.name)));
            }
            let flat: Vec<f64> = r.joints_deg.iter().flatten().map(|d| d.to_radians()).collect();
            crate::error::ensure_finite(&flat, "grasp joints")?;
            poses.push(GraspPose {
                name: r.name,
                category: r.category,
                joints: flat.try_into().expect("5 × 3 joints"),
            });
        }
        Ok(Self { poses })
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn poses(&self) -> &[GraspPose] {
        &self.poses
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.poses.iter().map(|p| p.name.as_str())
    }

    pub fn get(&self, name: &str) -> Result<&GraspPose> {
        self.poses
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| Error::UnknownPose(name.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointViolation {
    pub finger: FingerName,
    pub joint: &'static str,
    pub angle_deg: f64,
    pub min_deg: f64,
    pub max_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub name: String,
    pub feasible: bool,
    pub violations: Vec<JointViolation>,
    /// Fingertip positions in the hand frame, mm.
    pub fingertips_mm: [[f64; 3]; FINGER_COUNT],
}

/// Checks every joint of `pose` against the limits of `hand` and reports
/// the resulting fingertip positions.
pub fn validate_pose(pose: &GraspPose, hand: &HandModel) -> Result<FeasibilityReport> {
    let mut violations = Vec::new();
    let mut fingertips_mm = [[0.0; 3]; FINGER_COUNT];
    for (f, theta) in HandModel::split_joints(&pose.joints).iter().enumerate() {
        let finger = hand.finger(f);
        for (j, lim) in finger.geometry.limits().iter().enumerate() {
            if !lim.contains(theta[j]) {
                violations.push(JointViolation {
                    finger: finger.name,
                    joint: JOINT_NAMES[j],
                    angle_deg: theta[j].to_degrees(),
                    min_deg: lim.min.to_degrees(),
                    max_deg: lim.max.to_degrees(),
                });
            }
        }
        let tip = forward_kinematics(&finger.geometry, theta)?;
        let p = mounted_position(&finger.mounting, &tip.position);
        fingertips_mm[f] = [p.x, p.y, p.z];
    }
    Ok(FeasibilityReport {
        name: pose.name.clone(),
        feasible: violations.is_empty(),
        violations,
        fingertips_mm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExecuteOptions {
    /// Simulated time allowed, s.
    pub timeout_s: f64,
    /// Largest joint error that counts as settled, degrees.
    pub tolerance_deg: f64,
    /// Host stops sending frames after this much simulated time.
    pub disconnect_after_s: Option<f64>,
}

impl Default for ExecuteOptions {
    fn default() -> Self {
        Self {
            timeout_s: 2.0,
            tolerance_deg: 1.0,
            disconnect_after_s: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExecutionReport {
    pub name: String,
    /// Settled and stayed settled until the timeout.
    pub converged: bool,
    /// Time after which the error stayed within tolerance, s.
    pub settling_time_s: Option<f64>,
    pub max_error_deg: f64,
    pub final_error_deg: [[f64; 3]; FINGER_COUNT],
    pub protective_stop: bool,
    pub faults: Vec<String>,
    pub outer_ticks: u64,
}

fn max_error(pose: &GraspPose, theta: &[f64; HAND_DOF]) -> f64 {
    pose.joints
        .iter()
        .zip(theta)
        .map(|(r, t)| (r - t).abs())
        .fold(0.0, f64::max)
        .to_degrees()
}

/// Drives `sim` to `pose` through the full control stack and reports how
/// the joints settled. `sim` must start at rest.
pub fn execute_pose(
    pose: &GraspPose,
    sim: &mut HandSimulator,
    options: &ExecuteOptions,
) -> Result<(ExecutionReport, Vec<TelemetryRecord>)> {
    if !(options.timeout_s > 0.0 && options.tolerance_deg > 0.0) {
        return Err(Error::InvalidArgument("timeout and tolerance must be positive".into()));
    }
    if sim
        .state()
        .fingers
        .iter()
        .any(|f| f.joints.theta_dot.iter().any(|&v| v != 0.0))
    {
        return Err(Error::InvalidArgument(
            "simulator must be at rest before executing a pose".into(),
        ));
    }
    let dt = sim.config().control.timing.outer_dt();
    let ticks = (options.timeout_s / dt).round() as u64;
    let disconnect = options.disconnect_after_s.map(|t| (t / dt).round() as u64);
    let mut settled_at = (max_error(pose, &sim.state().joint_angles()) <= options.tolerance_deg).then_some(0);
    let mut protective_stop = false;
    let mut faults = Vec::new();
    let mut telemetry = Vec::with_capacity(ticks as usize);
    for n in 0..ticks {
        let host_frame = disconnect.is_none_or(|d| n < d).then_some(&pose.joints);
        let rec = sim.tick(host_frame)?;
        if rec.host_link == LinkState::ProtectiveStop || rec.drivers.iter().any(|d| d.protective_stop) {
            if !protective_stop {
                faults.push(format!("protective stop at t = {:.2} s", rec.time_s));
            }
            protective_stop = true;
        }
        for (f, flags) in rec.fingers.iter().enumerate() {
            if flags.fault {
                let msg = format!("{} fault latched", FingerName::ALL[f].as_str());
                if !faults.contains(&msg) {
                    faults.push(msg);
                }
            }
        }
        let within = max_error(pose, &rec.theta) <= options.tolerance_deg;
        settled_at = match (within, settled_at) {
            (false, _) => None,
            (true, None) => Some(n + 1),
            (true, s) => s,
        };
        telemetry.push(rec);
    }
    let theta = sim.state().joint_angles();
    let final_error_deg =
        std::array::from_fn(|f| std::array::from_fn(|j| (theta[3 * f + j] - pose.joints[3 * f + j]).to_degrees()));
    let report = ExecutionReport {
        name: pose.name.clone(),
        converged: settled_at.is_some() && !protective_stop,
        settling_time_s: settled_at.map(|n| n as f64 * dt),
        max_error_deg: max_error(pose, &theta),
        final_error_deg,
        protective_stop,
        faults,
        outer_ticks: ticks,
    };
    Ok((report, telemetry))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_library_has_33_unique_poses() {
        let lib = GraspLibrary::shipped();
        assert_eq!(lib.poses().len(), 33);
    }

    #[test]
    fn unknown_name_is_a_lookup_error() {
        let err = GraspLibrary::shipped().get("juggle").unwrap_err();
        assert!(matches!(err, Error::UnknownPose(n) if n == "juggle"));
    }

    #[test]
    fn zero_pose_is_feasible() {
        let pose = GraspPose {
            name: "flat".into(),
            category: GraspCategory::Power,
            joints: [0.0; HAND_DOF],
        };
        assert!(validate_pose(&pose, &HandModel::default()).unwrap().feasible);
    }

    #[test]
    fn overflexed_pip_is_named() {
        let mut joints = [0.0; HAND_DOF];
        joints[8] = 100f64.to_radians();
        let pose = GraspPose {
            name: "bad".into(),
            category: GraspCategory::Power,
            joints,
        };
        let report = validate_pose(&pose, &HandModel::default()).unwrap();
        assert!(!report.feasible);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].finger, FingerName::Middle);
        assert_eq!(report.violations[0].joint, "pip");
    }
}
