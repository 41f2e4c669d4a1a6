//! Host side of the hand's serial link: the byte-stream protocol an external
//! process uses to drive a [`HandSimulator`].
//!
//! The host sends `HOST_TARGETS` frames (one per finger it wants to move)
//! and then a `HOST_STEP` frame. Each step advances the simulation by one
//! outer tick and is answered with five `HOST_STATE` frames carrying the
//! measured joint angles and status bits of every finger. A step that
//! arrives without any targets since the previous step counts as a silent
//! host tick for the watchdog.

use nalgebra::Vector3;

use crate::bus::{angle_to_counts, counts_to_angle, Message, StreamDecoder};
use crate::control::{HandSimulator, TelemetryRecord};
use crate::error::Result;
use crate::kinematics::{HandModel, FINGER_COUNT};

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct HostStats {
    pub steps: u64,
    pub targets: u64,
    /// Well-formed frames that are not host requests, or name a missing finger.
    pub ignored_frames: u64,
}

pub struct HostSession {
    sim: HandSimulator,
    decoder: StreamDecoder,
    pending: [Option<Vector3<f64>>; FINGER_COUNT],
    pub stats: HostStats,
}

impl HostSession {
    pub fn new(sim: HandSimulator) -> Self {
        Self {
            sim,
            decoder: StreamDecoder::new(),
            pending: [None; FINGER_COUNT],
            stats: HostStats::default(),
        }
    }

    pub fn simulator(&self) -> &HandSimulator {
        &self.sim
    }

    pub fn decoder(&self) -> &StreamDecoder {
        &self.decoder
    }

    /// Consumes `bytes` and returns the response bytes together with the
    /// telemetry of every step they triggered.
    pub fn feed(&mut self, bytes: &[u8]) -> Result<(Vec<u8>, Vec<TelemetryRecord>)> {
        self.decoder.push(bytes);
        let mut out = Vec::new();
        let mut telemetry = Vec::new();
        while let Some(frame) = self.decoder.next_frame() {
            match Message::from_frame(&frame) {
                Ok(Message::HostTargets { finger, angles }) if usize::from(finger) < FINGER_COUNT => {
                    self.pending[usize::from(finger)] = Some(Vector3::from_fn(|j, _| counts_to_angle(angles[j])));
                    self.stats.targets += 1;
                }
                Ok(Message::HostStep) => {
                    let rec = self.step()?;
                    for (f, flags) in rec.fingers.iter().enumerate() {
                        let reply = Message::HostState {
                            finger: f as u8,
                            flags: flags.bits(),
                            angles: std::array::from_fn(|j| angle_to_counts(rec.theta_meas[3 * f + j])),
                        };
                        out.extend_from_slice(&reply.to_frame().encode());
                    }
                    telemetry.push(rec);
                }
                _ => {
                    log::warn!(
                        "ignoring frame {:02X}/{:02X} from host",
                        frame.board.get(),
                        frame.command
                    );
                    self.stats.ignored_frames += 1;
                }
            }
        }
        Ok((out, telemetry))
    }

    fn step(&mut self) -> Result<TelemetryRecord> {
        self.stats.steps += 1;
        if self.pending.iter().all(Option::is_none) {
            return self.sim.tick(None);
        }
        let mut refs = HandModel::split_joints(&self.sim.references());
        for (r, p) in refs.iter_mut().zip(self.pending.iter_mut()) {
            if let Some(t) = p.take() {
                *r = t;
            }
        }
        self.sim.tick(Some(&HandModel::join_joints(&refs)))
    }
}

/// Frames a host would send to move `finger` to `angles` (radians).
pub fn targets_frame(finger: u8, angles: &[f64; 3]) -> [u8; crate::bus::FRAME_LEN] {
    Message::HostTargets {
        finger,
        angles: angles.map(angle_to_counts),
    }
    .to_frame()
    .encode()
}

pub fn step_frame() -> [u8; crate::bus::FRAME_LEN] {
    Message::HostStep.to_frame().encode()
}
