//! Antagonistic tendon transmission between the three finger motors and the
//! three finger joints.
//!
//! Both palm motors drive the two-axis MCP joint through antagonistic tendon
//! pairs: pulling both the same way abducts, pulling them against each other
//! flexes. The forearm motor drives the PIP joint through a conduit.
//!
//! Motor-side vectors are always ordered `(palm1, palm2, arm)`; joint-side
//! vectors `(MCP-1, MCP-2, PIP)`. Torques are N·mm, lengths mm.
//!
//! Sign convention for `palm2`: a positive `palm2` torque abducts the finger
//! like `palm1` but extends the MCP flexion axis, so equal torques give pure
//! abduction and opposite torques give pure flexion.

use nalgebra::{Matrix3, SMatrix, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TENDON_COUNT: usize = 6;

/// Tendon order used by [`tendon_excursion`] and [`tendon_tensions`].
pub const TENDON_NAMES: [&str; TENDON_COUNT] = [
    "palm1_left",
    "palm1_right",
    "palm2_left",
    "palm2_right",
    "arm_flexor",
    "arm_extensor",
];

/// Pulley radii of one finger.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TendonRouting {
    pub r_mcp1_mm: f64,
    pub r_mcp2_mm: f64,
    pub r_pip_mm: f64,
    pub r_palm_mm: f64,
    pub r_arm_mm: f64,
    /// Constant conduit efficiency in (0, 1]; 1 is lossless.
    #[serde(default = "unit_efficiency")]
    pub efficiency: f64,
}

fn unit_efficiency() -> f64 {
    1.0
}

impl Default for TendonRouting {
    fn default() -> Self {
        Self {
            r_mcp1_mm: 5.0,
            r_mcp2_mm: 5.0,
            r_pip_mm: 5.0,
            r_palm_mm: 2.5,
            r_arm_mm: 2.5,
            efficiency: 1.0,
        }
    }
}

impl TendonRouting {
    pub fn validate(&self) -> Result<()> {
        let radii = [
            ("r_mcp1_mm", self.r_mcp1_mm),
            ("r_mcp2_mm", self.r_mcp2_mm),
            ("r_pip_mm", self.r_pip_mm),
            ("r_palm_mm", self.r_palm_mm),
            ("r_arm_mm", self.r_arm_mm),
        ];
        for (name, r) in radii {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {r}")));
            }
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::Config(format!(
                "efficiency must lie in (0, 1], got {}",
                self.efficiency
            )));
        }
        Ok(())
    }

    /// `M = A τ`.
    pub fn torque_matrix(&self) -> Matrix3<f64> {
        let a1 = self.r_mcp1_mm / self.r_palm_mm;
        let a2 = self.r_mcp2_mm / self.r_palm_mm;
        let a3 = self.r_pip_mm / self.r_arm_mm;
        Matrix3::new(a1, a1, 0.0, a2, -a2, 0.0, 0.0, 0.0, a3) * self.efficiency
    }

    /// Tendon excursion per unit joint rotation; rows follow [`TENDON_NAMES`].
    pub fn excursion_matrix(&self) -> SMatrix<f64, TENDON_COUNT, 3> {
        let (r1, r2, r3) = (self.r_mcp1_mm, self.r_mcp2_mm, self.r_pip_mm);
        SMatrix::<f64, TENDON_COUNT, 3>::from_row_slice(&[
            r1, r2, 0.0, //
            -r1, -r2, 0.0, //
            r1, -r2, 0.0, //
            -r1, r2, 0.0, //
            0.0, 0.0, r3, //
            0.0, 0.0, -r3,
        ])
    }
}

/// Joint moments `(M_MCP1, M_MCP2, M_PIP)` produced by the motor torques.
pub fn motor_to_joint_torque(routing: &TendonRouting, motor: &Vector3<f64>) -> Vector3<f64> {
    let (p1, p2, arm) = (motor[0], motor[1], motor[2]);
    let eta = routing.efficiency;
    Vector3::new(
        eta * routing.r_mcp1_mm / routing.r_palm_mm * (p1 + p2),
        eta * routing.r_mcp2_mm / routing.r_palm_mm * (p1 - p2),
        eta * routing.r_pip_mm / routing.r_arm_mm * arm,
    )
}

/// Motor torques that produce the requested joint moments.
pub fn joint_to_motor_torque(routing: &TendonRouting, joint: &Vector3<f64>) -> Vector3<f64> {
    let eta = routing.efficiency;
    let sum = joint[0] * routing.r_palm_mm / (eta * routing.r_mcp1_mm);
    let diff = joint[1] * routing.r_palm_mm / (eta * routing.r_mcp2_mm);
    Vector3::new(
        0.5 * (sum + diff),
        0.5 * (sum - diff),
        joint[2] * routing.r_arm_mm / (eta * routing.r_pip_mm),
    )
}

/// Motor output-shaft rates implied by joint rates (the same map carries
/// joint angles to motor angles).
pub fn joint_to_motor_velocity(routing: &TendonRouting, joint_rate: &Vector3<f64>) -> Vector3<f64> {
    let a1 = routing.r_mcp1_mm / routing.r_palm_mm;
    let a2 = routing.r_mcp2_mm / routing.r_palm_mm;
    let a3 = routing.r_pip_mm / routing.r_arm_mm;
    Vector3::new(
        a1 * joint_rate[0] + a2 * joint_rate[1],
        a1 * joint_rate[0] - a2 * joint_rate[1],
        a3 * joint_rate[2],
    )
}

/// Length each tendon is drawn in (positive) or paid out (negative) by the
/// joint rotation `theta`, from the pulley arc length `Δl = R Δθ`.
pub fn tendon_excursion(routing: &TendonRouting, theta: &Vector3<f64>) -> [f64; TENDON_COUNT] {
    let e = routing.excursion_matrix() * theta;
    std::array::from_fn(|i| e[i])
}

/// Spring terminus state shared by a finger's tendons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TendonState {
    pub tensions: [f64; TENDON_COUNT],
    pub excursions: [f64; TENDON_COUNT],
    pub spring_pretension_n: f64,
    pub spring_rate_n_per_mm: f64,
}

impl Default for TendonState {
    fn default() -> Self {
        Self {
            tensions: [0.0; TENDON_COUNT],
            excursions: [0.0; TENDON_COUNT],
            spring_pretension_n: 2.0,
            spring_rate_n_per_mm: 0.5,
        }
    }
}

/// Tension held by the terminus spring after it has been stretched by
/// `stretch` mm (negative means slack). Cables cannot push.
pub fn spring_tension(state: &TendonState, stretch: f64) -> f64 {
    (state.spring_pretension_n + state.spring_rate_n_per_mm * stretch).max(0.0)
}

/// Cable tensions (N) with every tendon preloaded to `pretension` and each
/// motor pulley adding `±τ / (2r)` to its pair. A tendon whose share would be
/// negative goes slack at zero.
pub fn tendon_tensions(routing: &TendonRouting, motor: &Vector3<f64>, pretension: f64) -> [f64; TENDON_COUNT] {
    let half = |tau: f64, r: f64| 0.5 * tau / r;
    let d1 = half(motor[0], routing.r_palm_mm);
    let d2 = half(motor[1], routing.r_palm_mm);
    let d3 = half(motor[2], routing.r_arm_mm);
    [
        pretension + d1,
        pretension - d1,
        pretension + d2,
        pretension - d2,
        pretension + d3,
        pretension - d3,
    ]
    .map(|t| t.max(0.0))
}
