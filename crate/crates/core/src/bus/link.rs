//! Links between the central controller and the peripheral boards.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::frame::{decode_frame, hex_dump, FRAME_LEN};
use super::message::Message;
use crate::error::{Error, Result};

/// Per-frame fault injection probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossModel {
    pub drop_probability: f64,
    /// Probability that a frame that was not dropped has one bit flipped.
    pub corrupt_probability: f64,
}

impl LossModel {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("drop_probability", self.drop_probability),
            ("corrupt_probability", self.corrupt_probability),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        Ok(())
    }
}

/// Seeded channel that drops or bit-flips frames.
#[derive(Debug, Clone)]
pub struct LossyChannel {
    model: LossModel,
    rng: ChaCha8Rng,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delivery {
    Intact([u8; FRAME_LEN]),
    Corrupted([u8; FRAME_LEN]),
    Dropped,
}

impl LossyChannel {
    pub fn new(model: LossModel, seed: u64) -> Self {
        Self {
            model,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn transmit(&mut self, bytes: [u8; FRAME_LEN]) -> Delivery {
        // Always draw the same number of values so the stream position does
        // not depend on which branch was taken.
        let drop_draw: f64 = self.rng.random();
        let corrupt_draw: f64 = self.rng.random();
        let bit = self.rng.random_range(0..FRAME_LEN * 8);
        if drop_draw < self.model.drop_probability {
            Delivery::Dropped
        } else if corrupt_draw < self.model.corrupt_probability {
            let mut out = bytes;
            out[bit / 8] ^= 1 << (bit % 8);
            Delivery::Corrupted(out)
        } else {
            Delivery::Intact(bytes)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct BusStats {
    pub frames_sent: u64,
    pub frames_dropped: u64,
    pub frames_corrupted: u64,
    pub retries: u64,
    pub failed_exchanges: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FrameLogEntry {
    pub round: u64,
    pub hex: String,
    pub fate: &'static str,
}

/// Outcome of one request/response exchange.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Exchange {
    /// The peer saw at least one copy of the request.
    pub request_delivered: bool,
    pub response: Option<Message>,
}

/// Encodes every message into a frame and sends it through a lossy channel.
#[derive(Debug, Clone)]
pub struct BusLink {
    channel: LossyChannel,
    pub stats: BusStats,
    log: Option<Vec<FrameLogEntry>>,
    round: u64,
}

impl BusLink {
    pub fn new(model: LossModel, seed: u64) -> Self {
        Self {
            channel: LossyChannel::new(model, seed),
            stats: BusStats::default(),
            log: None,
            round: 0,
        }
    }

    /// Changes the fault probabilities from the next frame on; the random
    /// stream continues where it was.
    pub fn set_loss_model(&mut self, model: LossModel) {
        self.channel.model = model;
    }

    pub fn with_frame_log(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    pub fn take_log(&mut self) -> Vec<FrameLogEntry> {
        self.log.as_mut().map(std::mem::take).unwrap_or_default()
    }

    fn send(&mut self, msg: &Message) -> Option<Message> {
        let bytes = msg.to_frame().encode();
        self.stats.frames_sent += 1;
        let delivery = self.channel.transmit(bytes);
        let (fate, received) = match delivery {
            Delivery::Dropped => {
                self.stats.frames_dropped += 1;
                ("dropped", None)
            }
            Delivery::Corrupted(b) => ("corrupted", Some(b)),
            Delivery::Intact(b) => ("ok", Some(b)),
        };
        let decoded = received
            .and_then(|b| decode_frame(&b).ok())
            .and_then(|f| Message::from_frame(&f).ok());
        if received.is_some() && decoded.is_none() {
            self.stats.frames_corrupted += 1;
        }
        let round = self.round;
        if let Some(log) = self.log.as_mut() {
            log.push(FrameLogEntry {
                round,
                hex: hex_dump(&received.unwrap_or(bytes)),
                fate,
            });
        }
        decoded
    }
}

#[derive(Debug, Clone)]
pub enum Transport {
    /// Messages are handed over in memory; nothing can be lost.
    Direct,
    Bus(Box<BusLink>),
}

impl Transport {
    pub fn set_round(&mut self, round: u64) {
        if let Transport::Bus(link) = self {
            link.round = round;
        }
    }

    pub fn stats(&self) -> BusStats {
        match self {
            Transport::Direct => BusStats::default(),
            Transport::Bus(link) => link.stats,
        }
    }

    pub fn take_log(&mut self) -> Vec<FrameLogEntry> {
        match self {
            Transport::Direct => Vec::new(),
            Transport::Bus(link) => link.take_log(),
        }
    }

    /// Sends `request`, lets `peer` answer it, and returns the answer. On the
    /// bus a failed exchange is retried once within the same round.
    pub fn exchange(&mut self, request: Message, mut peer: impl FnMut(Message) -> Message) -> Exchange {
        match self {
            Transport::Direct => Exchange {
                request_delivered: true,
                response: Some(peer(request)),
            },
            Transport::Bus(link) => {
                let mut request_delivered = false;
                for attempt in 0..2 {
                    if attempt > 0 {
                        link.stats.retries += 1;
                    }
                    let Some(received) = link.send(&request) else {
                        continue;
                    };
                    request_delivered = true;
                    let reply = peer(received);
                    if let Some(response) = link.send(&reply) {
                        return Exchange {
                            request_delivered,
                            response: Some(response),
                        };
                    }
                }
                link.stats.failed_exchanges += 1;
                Exchange {
                    request_delivered,
                    response: None,
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bus::frame::BoardId;

    fn echo(m: Message) -> Message {
        match m {
            Message::ReadPositions { board } => Message::Positions {
                board,
                codes: [1, 2, 3, 4],
            },
            other => other,
        }
    }

    #[test]
    fn lossless_bus_matches_direct() {
        let req = Message::ReadPositions {
            board: BoardId::sensor(1),
        };
        let direct = Transport::Direct.exchange(req, echo);
        let mut bus = Transport::Bus(Box::new(BusLink::new(LossModel::default(), 3)));
        assert_eq!(bus.exchange(req, echo), direct);
        assert_eq!(bus.stats().frames_sent, 2);
    }

    #[test]
    fn total_loss_fails_after_one_retry() {
        let model = LossModel {
            drop_probability: 1.0,
            corrupt_probability: 0.0,
        };
        let mut bus = Transport::Bus(Box::new(BusLink::new(model, 3)));
        let mut calls = 0;
        let out = bus.exchange(
            Message::ReadPositions {
                board: BoardId::sensor(0),
            },
            |m| {
                calls += 1;
                echo(m)
            },
        );
        assert_eq!(out.response, None);
        assert!(!out.request_delivered);
        assert_eq!(calls, 0);
        let stats = bus.stats();
        assert_eq!((stats.frames_sent, stats.retries, stats.failed_exchanges), (2, 1, 1));
    }

    #[test]
    fn corruption_is_always_detected() {
        let model = LossModel {
            drop_probability: 0.0,
            corrupt_probability: 1.0,
        };
        let mut link = BusLink::new(model, 11);
        for _ in 0..500 {
            assert!(link.send(&Message::HostStep).is_none());
        }
        assert_eq!(link.stats.frames_corrupted, 500);
    }

    #[test]
    fn probabilities_are_validated() {
        assert!(LossModel {
            drop_probability: 1.5,
            corrupt_probability: 0.0
        }
        .validate()
        .is_err());
    }
}
