use thiserror::Error;

/// Which of the three fingertip closure constraints a target violates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    /// `X s1 - Y c1 = 0`: the fingertip lies in the abduction plane.
    AbductionPlane,
    /// `(L2 + L3 c3) s2 + L3 s3 c2 - Z = 0`: flexion height.
    FlexionHeight,
    /// Law-of-cosines closure; violated when `|c3| > 1`.
    Reach,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("target unreachable: {constraint:?} constraint violated (cos(theta3) = {cos_theta3})")]
    Unreachable { constraint: Constraint, cos_theta3: f64 },

    #[error("target lies on the abduction axis (X = Y = 0); abduction angle is undefined")]
    SingularTarget,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown grasp pose `{0}`")]
    UnknownPose(String),

    #[error("frame error: {0}")]
    Frame(#[from] crate::bus::FrameError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{what} must be finite, got {values:?}")))
    }
}
