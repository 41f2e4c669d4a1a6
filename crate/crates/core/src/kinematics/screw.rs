use nalgebra::{Isometry3, Matrix3, Point3, Translation3, Unit, UnitQuaternion, Vector3};

/// Skew-symmetric matrix `[w]` such that `[w] x = w × x`.
pub fn hat(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

/// A unit screw axis `(ω, v)` expressed in the finger base frame.
///
/// Only revolute joints appear in the finger, so `ω` is always a unit vector
/// and `v = -ω × q` for any point `q` on the axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Screw {
    pub angular: Vector3<f64>,
    pub linear: Vector3<f64>,
}

impl Screw {
    /// Revolute screw about `axis` passing through `point`.
    pub fn revolute(axis: Unit<Vector3<f64>>, point: Point3<f64>) -> Self {
        let angular = axis.into_inner();
        Self {
            angular,
            linear: -angular.cross(&point.coords),
        }
    }

    pub fn is_unit(&self, tol: f64) -> bool {
        (self.angular.norm() - 1.0).abs() <= tol
    }

    /// Matrix exponential `exp([S] θ)` of a revolute screw.
    ///
    /// Rotation is Rodrigues' formula; translation is
    /// `(Iθ + (1 - cos θ)[ω] + (θ - sin θ)[ω]²) v`.
    pub fn exp(&self, theta: f64) -> Isometry3<f64> {
        let w = hat(&self.angular);
        let w2 = w * w;
        let (s, c) = theta.sin_cos();
        let g = Matrix3::identity() * theta + w * (1.0 - c) + w2 * (theta - s);
        let translation = g * self.linear;
        let rotation = UnitQuaternion::from_axis_angle(&Unit::new_unchecked(self.angular), theta);
        Isometry3::from_parts(Translation3::from(translation), rotation)
    }

    /// Adjoint map `Ad_T S` carrying this screw through the rigid motion `t`.
    pub fn transformed(&self, t: &Isometry3<f64>) -> Screw {
        let angular = t.rotation * self.angular;
        let linear = t.translation.vector.cross(&angular) + t.rotation * self.linear;
        Screw { angular, linear }
    }

    /// Linear velocity of the point `p` for a unit joint rate about this screw.
    pub fn point_velocity(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.angular.cross(p) + self.linear
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn exp_at_zero_is_identity() {
        let s = Screw::revolute(Vector3::y_axis(), Point3::new(16.0, 0.0, 0.0));
        assert_eq!(s.exp(0.0), Isometry3::identity());
    }

    #[test]
    fn exp_rotates_about_offset_axis() {
        // Quarter turn about -y through (16, 0, 0) carries (92, 0, 0) to (16, 0, 76).
        let s = Screw::revolute(-Vector3::y_axis(), Point3::new(16.0, 0.0, 0.0));
        let p = s.exp(FRAC_PI_2) * Point3::new(92.0, 0.0, 0.0);
        assert!((p - Point3::new(16.0, 0.0, 76.0)).norm() < 1e-12);
    }

    #[test]
    fn hat_matches_cross_product() {
        let a = Vector3::new(0.3, -1.2, 2.0);
        let b = Vector3::new(-0.7, 0.1, 0.5);
        assert!((hat(&a) * b - a.cross(&b)).norm() < 1e-15);
    }
}
