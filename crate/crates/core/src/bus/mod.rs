//! Emulation of the hand's board network: five sensor boards and four driver
//! boards around one central controller, exchanging CRC-checked frames.
//!
//! The request/response rounds themselves are driven by
//! [`crate::control::HandSimulator`], which owns the boards and uses a
//! [`Transport`] for every exchange.

pub mod crc;
mod frame;
mod link;
mod message;

pub use frame::{
    decode_frame, encode_frame, hex_dump, BoardId, BoardRole, Frame, FrameError, StreamDecoder, FRAME_LEN, PAYLOAD_LEN,
    SYNC,
};
pub use link::{BusLink, BusStats, Delivery, Exchange, FrameLogEntry, LossModel, LossyChannel, Transport};
pub use message::{
    angle_to_counts, command, counts_to_angle, counts_to_current, current_to_counts, Message, ANGLE_LSB_DEG,
    CURRENT_LSB_A,
};
