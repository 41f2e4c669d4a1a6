//! Finger kinematics.
//!
//! Forward kinematics is a product of exponentials over the finger's screw
//! axes. Inverse kinematics is closed form: the abduction angle comes from the
//! abduction-plane constraint, the PIP angle from the law of cosines and the
//! MCP flexion angle from the remaining planar triangle. The elbow-down branch
//! (`theta3 >= 0`) is always returned.

mod finger;
mod hand;
pub mod screw;

pub use finger::{DipJoint, FingerGeometry, FingerParams, JointLimits};
pub use hand::{
    FingerName, HandModel, HandParams, MountedFinger, MountedFingerParams, Mounting, FINGER_COUNT, HAND_DOF,
    JOINTS_PER_FINGER,
};

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Isometry3, Matrix3, Point3, UnitQuaternion, Vector3};
use serde::Serialize;

use crate::error::{ensure_finite, Constraint, Error, Result};

/// Joint angles `(MCP-1 abduction, MCP-2 flexion, PIP flexion)` and rates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct JointState {
    pub theta: Vector3<f64>,
    pub theta_dot: Vector3<f64>,
}

impl JointState {
    pub fn at_rest(theta: Vector3<f64>) -> Self {
        Self {
            theta,
            theta_dot: Vector3::zeros(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FingertipPoint {
    /// Millimetres in the finger base frame.
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
}

impl FingertipPoint {
    fn from_pose(pose: &Isometry3<f64>) -> Self {
        Self {
            position: pose.translation.vector,
            orientation: pose.rotation,
        }
    }
}

fn chain_pose(geom: &FingerGeometry, theta: &Vector3<f64>) -> Isometry3<f64> {
    let [s1, s2, s3] = geom.screw_axes();
    s1.exp(theta[0]) * s2.exp(theta[1]) * s3.exp(theta[2]) * geom.home_pose()
}

/// Fingertip pose `T(θ) = e^[S1]θ1 e^[S2]θ2 e^[S3]θ3 M` with the DIP locked.
pub fn forward_kinematics(geom: &FingerGeometry, theta: &Vector3<f64>) -> Result<FingertipPoint> {
    ensure_finite(theta.as_slice(), "joint angles")?;
    Ok(FingertipPoint::from_pose(&chain_pose(geom, theta)))
}

/// Forward kinematics with the optional DIP joint appended to the chain.
pub fn forward_kinematics_with_dip(
    geom: &FingerGeometry,
    theta: &Vector3<f64>,
    dip_angle: f64,
) -> Result<FingertipPoint> {
    ensure_finite(theta.as_slice(), "joint angles")?;
    ensure_finite(&[dip_angle], "DIP angle")?;
    let dip = geom
        .dip_axis()
        .ok_or_else(|| Error::InvalidArgument("finger has no DIP joint".into()))?;
    let [s1, s2, s3] = geom.screw_axes();
    let pose = s1.exp(theta[0]) * s2.exp(theta[1]) * s3.exp(theta[2]) * dip.exp(dip_angle) * geom.home_pose();
    Ok(FingertipPoint::from_pose(&pose))
}

/// Signed distance of `p` from the abduction axis, measured in the finger
/// plane selected by `theta1`.
///
/// Equals `sqrt(X² + Y²)` while the fingertip is on the palm side of the
/// abduction axis, and goes negative once flexion curls the tip past it.
pub fn planar_reach(p: &Vector3<f64>, theta1: f64) -> f64 {
    let (s1, c1) = theta1.sin_cos();
    p.x * c1 + p.y * s1
}

/// Residuals of the three fingertip closure constraints at `(theta, p)`.
///
/// The radial term uses [`planar_reach`] so the residuals also vanish for
/// poses whose fingertip has crossed the abduction axis.
pub fn closure_residuals(geom: &FingerGeometry, theta: &Vector3<f64>, p: &Vector3<f64>) -> [f64; 3] {
    let (l1, l2, l3) = (geom.l1(), geom.l2(), geom.l3());
    let (s1, c1) = theta[0].sin_cos();
    let (s2, c2) = theta[1].sin_cos();
    let (s3, c3) = theta[2].sin_cos();
    let rho = planar_reach(p, theta[0]);
    [
        p.x * s1 - p.y * c1,
        (l2 + l3 * c3) * s2 + l3 * s3 * c2 - p.z,
        (rho - l1).powi(2) + p.z * p.z - l2 * l2 - l3 * l3 - 2.0 * l2 * l3 * c3,
    ]
}

fn wrap_pi(a: f64) -> f64 {
    let mut a = a;
    while a > PI {
        a -= 2.0 * PI;
    }
    while a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Closed-form position-only inverse kinematics (elbow-down branch).
///
/// The returned angles are not checked against joint limits; use
/// [`FingerGeometry::within_limits`] for that.
pub fn inverse_kinematics(geom: &FingerGeometry, target: &Vector3<f64>) -> Result<JointState> {
    ensure_finite(target.as_slice(), "target")?;
    let (l1, l2, l3) = (geom.l1(), geom.l2(), geom.l3());
    let scale = geom.total_length();

    if target.x.hypot(target.y) <= 1e-12 * scale {
        return Err(Error::SingularTarget);
    }
    // The abduction plane contains the target; pick the representative of
    // atan2 in (-π/2, π/2] so the finger, not its mirror, points at it.
    let mut theta1 = target.y.atan2(target.x);
    if theta1 > FRAC_PI_2 {
        theta1 -= PI;
    } else if theta1 <= -FRAC_PI_2 {
        theta1 += PI;
    }
    let a = planar_reach(target, theta1) - l1;
    let z = target.z;
    let d2 = a * a + z * z;

    let cos_theta3 = (d2 - l2 * l2 - l3 * l3) / (2.0 * l2 * l3);
    let outer = (l2 + l3) * (l2 + l3);
    let inner = (l2 - l3) * (l2 - l3);
    let tol = 1e-12 * outer;
    if d2 > outer + tol || d2 < inner - tol {
        return Err(Error::Unreachable {
            constraint: Constraint::Reach,
            cos_theta3,
        });
    }
    // Half-angle form of acos(cos_theta3); better conditioned near full extension and full fold.
    let theta3 = 2.0 * (outer - d2).max(0.0).sqrt().atan2((d2 - inner).max(0.0).sqrt());
    let (s3, c3) = theta3.sin_cos();
    let theta2 = wrap_pi(z.atan2(a) - (l3 * s3).atan2(l2 + l3 * c3));

    Ok(JointState::at_rest(Vector3::new(theta1, theta2, theta3)))
}

/// Positional Jacobian `∂p/∂θ` in mm/rad; columns are the joints.
pub fn jacobian(geom: &FingerGeometry, theta: &Vector3<f64>) -> Result<Matrix3<f64>> {
    ensure_finite(theta.as_slice(), "joint angles")?;
    let tip = chain_pose(geom, theta).translation.vector;
    let mut prefix = Isometry3::identity();
    let mut j = Matrix3::zeros();
    for (i, screw) in geom.screw_axes().iter().enumerate() {
        let column = screw.transformed(&prefix).point_velocity(&tip);
        j.set_column(i, &column);
        prefix *= screw.exp(theta[i]);
    }
    Ok(j)
}

/// Static duality `τ = Jᵀ F`: joint torques (N·mm) balancing a fingertip force (N).
pub fn fingertip_force_to_joint_torque(j: &Matrix3<f64>, force: &Vector3<f64>) -> Vector3<f64> {
    j.transpose() * force
}

/// Least-squares recovery of the fingertip force producing joint torques `tau`.
pub fn joint_torque_to_fingertip_force(j: &Matrix3<f64>, tau: &Vector3<f64>) -> Result<Vector3<f64>> {
    let svd = j.transpose().svd(true, true);
    svd.solve(tau, 1e-12)
        .map_err(|e| Error::InvalidArgument(format!("force recovery failed: {e}")))
}

/// Fingertip location in the hand frame for a mounted finger.
pub fn mounted_position(mount: &Isometry3<f64>, local: &Vector3<f64>) -> Vector3<f64> {
    (mount * Point3::from(*local)).coords
}
