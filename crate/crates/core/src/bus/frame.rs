//! Fixed 13-byte frame used on every link of the hand's network.
//!
//! ```text
//! offset  size  field
//!      0     1  sync, always 0xAA
//!      1     1  board id (0-4 sensor, 5-8 driver, 9 central)
//!      2     1  command
//!      3     8  payload, multi-byte fields little-endian
//!     11     2  CRC-16/CCITT-FALSE over bytes 0..11, big-endian
//! ```

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use super::crc::crc16;

pub const SYNC: u8 = 0xAA;
pub const PAYLOAD_LEN: usize = 8;
pub const FRAME_LEN: usize = 13;
const CRC_OFFSET: usize = 11;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("need {needed} more byte(s)")]
    NeedMoreData { needed: usize },
    #[error("bad sync byte {0:#04x}")]
    BadSync(u8),
    #[error("CRC mismatch: frame carries {found:#06x}, computed {computed:#06x}")]
    BadCrc { found: u16, computed: u16 },
    #[error("unknown board id {0}")]
    UnknownBoard(u8),
    #[error("payload must be {PAYLOAD_LEN} bytes, got {0}")]
    BadPayloadLength(usize),
    #[error("command {command:#04x} is not valid for board {board}")]
    UnexpectedCommand { board: u8, command: u8 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoardRole {
    Sensor,
    Driver,
    Central,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct BoardId(u8);

impl BoardId {
    pub const CENTRAL: BoardId = BoardId(9);
    pub const SENSOR_COUNT: u8 = 5;
    pub const DRIVER_COUNT: u8 = 4;
    pub const FIRST_DRIVER: u8 = 5;

    pub fn new(id: u8) -> Result<Self, FrameError> {
        if id <= 9 {
            Ok(BoardId(id))
        } else {
            Err(FrameError::UnknownBoard(id))
        }
    }

    pub fn sensor(finger: usize) -> Self {
        assert!(
            finger < usize::from(Self::SENSOR_COUNT),
            "sensor board {finger} out of range"
        );
        BoardId(finger as u8)
    }

    pub fn driver(index: usize) -> Self {
        assert!(
            index < usize::from(Self::DRIVER_COUNT),
            "driver board {index} out of range"
        );
        BoardId(Self::FIRST_DRIVER + index as u8)
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn role(self) -> BoardRole {
        match self.0 {
            0..=4 => BoardRole::Sensor,
            5..=8 => BoardRole::Driver,
            _ => BoardRole::Central,
        }
    }
}

impl fmt::Display for BoardId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Frame {
    pub board: BoardId,
    pub command: u8,
    pub payload: [u8; PAYLOAD_LEN],
}

impl Frame {
    pub fn encode(&self) -> [u8; FRAME_LEN] {
        let mut out = [0u8; FRAME_LEN];
        out[0] = SYNC;
        out[1] = self.board.get();
        out[2] = self.command;
        out[3..CRC_OFFSET].copy_from_slice(&self.payload);
        let crc = crc16(&out[..CRC_OFFSET]);
        out[CRC_OFFSET..].copy_from_slice(&crc.to_be_bytes());
        out
    }
}

/// Builds the wire image of a frame. `payload` must be exactly 8 bytes.
pub fn encode_frame(board: u8, command: u8, payload: &[u8]) -> Result<[u8; FRAME_LEN], FrameError> {
    let payload: [u8; PAYLOAD_LEN] = payload
        .try_into()
        .map_err(|_| FrameError::BadPayloadLength(payload.len()))?;
    Ok(Frame {
        board: BoardId::new(board)?,
        command,
        payload,
    }
    .encode())
}

/// Validates the first 13 bytes of `bytes` as a frame. Trailing bytes are ignored.
pub fn decode_frame(bytes: &[u8]) -> Result<Frame, FrameError> {
    if bytes.len() < FRAME_LEN {
        return Err(FrameError::NeedMoreData {
            needed: FRAME_LEN - bytes.len(),
        });
    }
    if bytes[0] != SYNC {
        return Err(FrameError::BadSync(bytes[0]));
    }
    let found = u16::from_be_bytes([bytes[CRC_OFFSET], bytes[CRC_OFFSET + 1]]);
    let computed = crc16(&bytes[..CRC_OFFSET]);
    if found != computed {
        return Err(FrameError::BadCrc { found, computed });
    }
    let board = BoardId::new(bytes[1])?;
    let mut payload = [0u8; PAYLOAD_LEN];
    payload.copy_from_slice(&bytes[3..CRC_OFFSET]);
    Ok(Frame {
        board,
        command: bytes[2],
        payload,
    })
}

/// Incremental decoder for a byte stream carrying back-to-back frames.
///
/// Garbage and corrupted frames are skipped by rescanning for the next sync
/// byte after the rejected one.
#[derive(Debug, Default)]
pub struct StreamDecoder {
    buf: Vec<u8>,
    pub skipped_bytes: usize,
    pub rejected_frames: usize,
}

impl StreamDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, data: &[u8]) {
        self.buf.extend_from_slice(data);
    }

    pub fn buffered(&self) -> usize {
        self.buf.len()
    }

    /// Next valid frame, or `None` when more bytes are needed.
    pub fn next_frame(&mut self) -> Option<Frame> {
        loop {
            match self.buf.iter().position(|&b| b == SYNC) {
                Some(start) => {
                    self.skipped_bytes += start;
                    self.buf.drain(..start);
                }
                None => {
                    self.skipped_bytes += self.buf.len();
                    self.buf.clear();
                    return None;
                }
            }
            match decode_frame(&self.buf) {
                Ok(frame) => {
                    self.buf.drain(..FRAME_LEN);
                    return Some(frame);
                }
                Err(FrameError::NeedMoreData { .. }) => return None,
                Err(FrameError::UnknownBoard(_)) => {
                    // CRC passed, so this really was a frame; drop all of it.
                    self.rejected_frames += 1;
                    self.buf.drain(..FRAME_LEN);
                }
                Err(_) => {
                    self.rejected_frames += 1;
                    self.skipped_bytes += 1;
                    self.buf.drain(..1);
                }
            }
        }
    }
}

/// Space-separated uppercase hex, the format used in frame logs.
pub fn hex_dump(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02X}")).collect::<Vec<_>>().join(" ")
}
