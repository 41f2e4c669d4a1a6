use nalgebra::{Isometry3, Point3, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::screw::Screw;
use crate::error::{Error, Result};

/// Closed joint interval in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointLimits {
    pub min: f64,
    pub max: f64,
}

impl JointLimits {
    pub fn from_degrees(min: f64, max: f64) -> Self {
        Self {
            min: min.to_radians(),
            max: max.to_radians(),
        }
    }

    pub fn contains(&self, angle: f64) -> bool {
        angle >= self.min && angle <= self.max
    }

    pub fn clamp(&self, angle: f64) -> f64 {
        angle.clamp(self.min, self.max)
    }

    pub fn span(&self) -> f64 {
        self.max - self.min
    }
}

/// Optional distal interphalangeal joint. When locked it stays at 0 and its
/// segment is part of the effective distal link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DipJoint {
    pub length_mm: f64,
    pub limits_deg: [f64; 2],
    #[serde(default)]
    pub active: bool,
}

/// JSON form of a finger. Angles are degrees here and nowhere else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FingerParams {
    /// MCP abduction axis to MCP flexion axis.
    pub l1_mm: f64,
    /// Proximal phalanx.
    pub l2_mm: f64,
    /// PIP axis to fingertip with the DIP locked straight.
    pub l3_mm: f64,
    /// `[min, max]` for MCP-1, MCP-2 and PIP.
    pub limits_deg: [[f64; 2]; 3],
    #[serde(default)]
    pub dip: Option<DipJoint>,
}

impl Default for FingerParams {
    fn default() -> Self {
        Self {
            l1_mm: 16.0,
            l2_mm: 32.0,
            l3_mm: 44.0,
            limits_deg: [[-30.0, 30.0], [0.0, 90.0], [0.0, 90.0]],
            dip: Some(DipJoint {
                length_mm: 20.0,
                limits_deg: [0.0, 90.0],
                active: false,
            }),
        }
    }
}

/// Geometry of one three-joint finger.
///
/// Base frame sits at the MCP-1 joint: `x` runs along the straight finger,
/// `z` is the abduction axis, and both flexion axes point along `-y` so that
/// positive flexion lifts the fingertip toward `+z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FingerParams", into = "FingerParams")]
pub struct FingerGeometry {
    params: FingerParams,
    l1: f64,
    l2: f64,
    l3: f64,
    limits: [JointLimits; 3],
    dip: Option<DipJoint>,
    screw_axes: [Screw; 3],
    dip_axis: Option<Screw>,
    home: Isometry3<f64>,
}

impl FingerGeometry {
    pub fn new(l1: f64, l2: f64, l3: f64, limits: [JointLimits; 3]) -> Result<Self> {
        for (name, v) in [("l1", l1), ("l2", l2), ("l3", l3)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be a positive length, got {v}")));
            }
        }
        for (i, lim) in limits.iter().enumerate() {
            if !(lim.min.is_finite() && lim.max.is_finite() && lim.min <= lim.max) {
                return Err(Error::Config(format!("joint {i} has an invalid range {lim:?}")));
            }
        }
        let flex_axis = -Vector3::y_axis();
        let screw_axes = [
            Screw::revolute(Vector3::z_axis(), Point3::origin()),
            Screw::revolute(flex_axis, Point3::new(l1, 0.0, 0.0)),
            Screw::revolute(flex_axis, Point3::new(l1 + l2, 0.0, 0.0)),
        ];
        let home = Isometry3::from_parts(Translation3::new(l1 + l2 + l3, 0.0, 0.0), UnitQuaternion::identity());
        Ok(Self {
            params: FingerParams {
                l1_mm: l1,
                l2_mm: l2,
                l3_mm: l3,
                limits_deg: limits.map(|l| [l.min.to_degrees(), l.max.to_degrees()]),
                dip: None,
            },
            l1,
            l2,
            l3,
            limits,
            dip: None,
            screw_axes,
            dip_axis: None,
            home,
        })
    }

    /// Splits the last `dip.length_mm` of the distal link off as a fourth joint.
    pub fn with_dip(mut self, dip: DipJoint) -> Result<Self> {
        if !(dip.length_mm > 0.0 && dip.length_mm < self.l3) {
            return Err(Error::Config(format!(
                "DIP segment {} mm must be positive and shorter than the distal link {} mm",
                dip.length_mm, self.l3
            )));
        }
        if dip.limits_deg[0] > dip.limits_deg[1] {
            return Err(Error::Config(format!("DIP range {:?} is inverted", dip.limits_deg)));
        }
        let pivot = self.l1 + self.l2 + self.l3 - dip.length_mm;
        self.dip_axis = Some(Screw::revolute(-Vector3::y_axis(), Point3::new(pivot, 0.0, 0.0)));
        self.dip = Some(dip);
        self.params.dip = Some(dip);
        Ok(self)
    }

    pub fn l1(&self) -> f64 {
        self.l1
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }

    pub fn l3(&self) -> f64 {
        self.l3
    }

    pub fn total_length(&self) -> f64 {
        self.l1 + self.l2 + self.l3
    }

    pub fn limits(&self) -> &[JointLimits; 3] {
        &self.limits
    }

    pub fn dip(&self) -> Option<&DipJoint> {
        self.dip.as_ref()
    }

    pub fn dip_limits(&self) -> Option<JointLimits> {
        self.dip
            .map(|d| JointLimits::from_degrees(d.limits_deg[0], d.limits_deg[1]))
    }

    pub fn dip_axis(&self) -> Option<&Screw> {
        self.dip_axis.as_ref()
    }

    pub fn screw_axes(&self) -> &[Screw; 3] {
        &self.screw_axes
    }

    pub fn home_pose(&self) -> &Isometry3<f64> {
        &self.home
    }

    pub fn within_limits(&self, theta: &Vector3<f64>) -> bool {
        self.limits.iter().zip(theta.iter()).all(|(l, &t)| l.contains(t))
    }

    pub fn clamp_to_limits(&self, theta: &Vector3<f64>) -> Vector3<f64> {
        Vector3::from_fn(|i, _| self.limits[i].clamp(theta[i]))
    }
}

impl Default for FingerGeometry {
    fn default() -> Self {
        FingerParams::default()
            .try_into()
            .expect("default finger parameters are valid")
    }
}

impl TryFrom<FingerParams> for FingerGeometry {
    type Error = Error;

    fn try_from(p: FingerParams) -> Result<Self> {
        let limits = p.limits_deg.map(|[lo, hi]| JointLimits::from_degrees(lo, hi));
        let mut geom = FingerGeometry::new(p.l1_mm, p.l2_mm, p.l3_mm, limits)?;
        if let Some(dip) = p.dip {
            geom = geom.with_dip(dip)?;
        }
        geom.params = p;
        Ok(geom)
    }
}

impl From<FingerGeometry> for FingerParams {
    fn from(g: FingerGeometry) -> Self {
        g.params
    }
}
