//! Typed messages carried in frames, and their payload layouts.

use super::frame::{BoardId, BoardRole, Frame, FrameError, PAYLOAD_LEN};

pub mod command {
    pub const READ_POSITIONS: u8 = 0x01;
    pub const SET_CURRENTS: u8 = 0x02;
    pub const PROTECTIVE_STOP: u8 = 0x03;
    pub const HOST_TARGETS: u8 = 0x10;
    pub const HOST_STEP: u8 = 0x11;
    pub const POSITIONS: u8 = 0x81;
    pub const DRIVER_STATUS: u8 = 0x82;
    pub const HOST_STATE: u8 = 0x90;
}

/// Current setpoints travel as signed 0.1 mA counts.
pub const CURRENT_LSB_A: f64 = 1e-4;
/// Host joint angles travel as signed hundredths of a degree.
pub const ANGLE_LSB_DEG: f64 = 0.01;

pub fn current_to_counts(amps: f64) -> i16 {
    (amps / CURRENT_LSB_A)
        .round()
        .clamp(f64::from(i16::MIN), f64::from(i16::MAX)) as i16
}

pub fn counts_to_current(counts: i16) -> f64 {
    f64::from(counts) * CURRENT_LSB_A
}

pub fn angle_to_counts(rad: f64) -> i16 {
    (rad.to_degrees() / ANGLE_LSB_DEG)
        .round()
        .clamp(f64::from(i16::MIN), f64::from(i16::MAX)) as i16
}

pub fn counts_to_angle(counts: i16) -> f64 {
    (f64::from(counts) * ANGLE_LSB_DEG).to_radians()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Message {
    /// Central asks a sensor board for its latest ADC codes.
    ReadPositions { board: BoardId },
    /// Sensor board reply: MCP-1, MCP-2, PIP, DIP codes.
    Positions { board: BoardId, codes: [u16; 4] },
    /// Central sets the four current targets of a driver board.
    SetCurrents { board: BoardId, targets: [i16; 4] },
    /// Central orders a driver board to ramp its currents to zero.
    ProtectiveStop { board: BoardId },
    /// Driver board acknowledgement with measured currents.
    DriverStatus { board: BoardId, currents: [i16; 4] },
    /// Host sets the three joint targets of one finger.
    HostTargets { finger: u8, angles: [i16; 3] },
    /// Host advances the simulation by one control period.
    HostStep,
    /// Central reports one finger's measured joint angles to the host.
    HostState { finger: u8, flags: u8, angles: [i16; 3] },
}

fn pack_u16x4(v: [u16; 4]) -> [u8; PAYLOAD_LEN] {
    let mut p = [0u8; PAYLOAD_LEN];
    for (i, x) in v.iter().enumerate() {
        p[2 * i..2 * i + 2].copy_from_slice(&x.to_le_bytes());
    }
    p
}

fn unpack_u16x4(p: &[u8; PAYLOAD_LEN]) -> [u16; 4] {
    std::array::from_fn(|i| u16::from_le_bytes([p[2 * i], p[2 * i + 1]]))
}

fn pack_i16x4(v: [i16; 4]) -> [u8; PAYLOAD_LEN] {
    pack_u16x4(v.map(|x| x as u16))
}

fn unpack_i16x4(p: &[u8; PAYLOAD_LEN]) -> [i16; 4] {
    unpack_u16x4(p).map(|x| x as i16)
}

fn pack_finger(finger: u8, flags: u8, angles: [i16; 3]) -> [u8; PAYLOAD_LEN] {
    let mut p = [0u8; PAYLOAD_LEN];
    p[0] = finger;
    p[1] = flags;
    for (i, a) in angles.iter().enumerate() {
        p[2 + 2 * i..4 + 2 * i].copy_from_slice(&a.to_le_bytes());
    }
    p
}

fn unpack_finger(p: &[u8; PAYLOAD_LEN]) -> (u8, u8, [i16; 3]) {
    let angles = std::array::from_fn(|i| i16::from_le_bytes([p[2 + 2 * i], p[3 + 2 * i]]));
    (p[0], p[1], angles)
}

impl Message {
    pub fn to_frame(&self) -> Frame {
        use command::*;
        let (board, command, payload) = match *self {
            Message::ReadPositions { board } => (board, READ_POSITIONS, [0; PAYLOAD_LEN]),
            Message::Positions { board, codes } => (board, POSITIONS, pack_u16x4(codes)),
            Message::SetCurrents { board, targets } => (board, SET_CURRENTS, pack_i16x4(targets)),
            Message::ProtectiveStop { board } => (board, PROTECTIVE_STOP, [0; PAYLOAD_LEN]),
            Message::DriverStatus { board, currents } => (board, DRIVER_STATUS, pack_i16x4(currents)),
            Message::HostTargets { finger, angles } => (BoardId::CENTRAL, HOST_TARGETS, pack_finger(finger, 0, angles)),
            Message::HostStep => (BoardId::CENTRAL, HOST_STEP, [0; PAYLOAD_LEN]),
            Message::HostState { finger, flags, angles } => {
                (BoardId::CENTRAL, HOST_STATE, pack_finger(finger, flags, angles))
            }
        };
        Frame {
            board,
            command,
            payload,
        }
    }

    pub fn from_frame(frame: &Frame) -> Result<Self, FrameError> {
        use command::*;
        let board = frame.board;
        let p = &frame.payload;
        let unexpected = || FrameError::UnexpectedCommand {
            board: board.get(),
            command: frame.command,
        };
        let msg = match (board.role(), frame.command) {
            (BoardRole::Sensor, READ_POSITIONS) => Message::ReadPositions { board },
            (BoardRole::Sensor, POSITIONS) => Message::Positions {
                board,
                codes: unpack_u16x4(p),
            },
            (BoardRole::Driver, SET_CURRENTS) => Message::SetCurrents {
                board,
                targets: unpack_i16x4(p),
            },
            (BoardRole::Driver, PROTECTIVE_STOP) => Message::ProtectiveStop { board },
            (BoardRole::Driver, DRIVER_STATUS) => Message::DriverStatus {
                board,
                currents: unpack_i16x4(p),
            },
            (BoardRole::Central, HOST_TARGETS) => {
                let (finger, _, angles) = unpack_finger(p);
                Message::HostTargets { finger, angles }
            }
            (BoardRole::Central, HOST_STEP) => Message::HostStep,
            (BoardRole::Central, HOST_STATE) => {
                let (finger, flags, angles) = unpack_finger(p);
                Message::HostState { finger, flags, angles }
            }
            _ => return Err(unexpected()),
        };
        Ok(msg)
    }
}
