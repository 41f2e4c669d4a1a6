use proptest::prelude::*;
use tendon_hand::bus::crc::crc16;
use tendon_hand::bus::{
    decode_frame, encode_frame, BoardId, Delivery, Frame, LossModel, LossyChannel, Message, StreamDecoder, FRAME_LEN,
};

/// Bit-at-a-time CRC-16, MSB first, poly 0x1021, init 0xFFFF, no reflection,
/// no final XOR.
fn crc_oracle(data: &[u8]) -> u16 {
    let mut crc: u16 = 0xFFFF;
    for &byte in data {
        for bit in (0..8).rev() {
            let input = (byte >> bit) & 1 == 1;
            let top = crc & 0x8000 != 0;
            crc <<= 1;
            if input != top {
                crc ^= 0x1021;
            }
        }
    }
    crc
}

fn frames() -> impl Strategy<Value = Frame> {
    (0u8..=9, any::<u8>(), any::<[u8; 8]>()).prop_map(|(b, command, payload)| Frame {
        board: BoardId::new(b).unwrap(),
        command,
        payload,
    })
}

#[test]
fn check_value_matches_oracle() {
    assert_eq!(crc_oracle(b"123456789"), 0x29B1);
    assert_eq!(crc16(b"123456789"), crc_oracle(b"123456789"));
}

#[test]
fn known_frame_image() {
    let bytes = encode_frame(5, 0x02, &[1, 0, 2, 0, 3, 0, 4, 0]).unwrap();
    assert_eq!(&bytes[..11], &[0xAA, 5, 2, 1, 0, 2, 0, 3, 0, 4, 0]);
    assert_eq!(u16::from_be_bytes([bytes[11], bytes[12]]), crc_oracle(&bytes[..11]));
}

#[test]
fn bad_inputs_are_rejected() {
    assert!(encode_frame(10, 0, &[0; 8]).is_err());
    assert!(encode_frame(0, 0, &[0; 7]).is_err());
    assert!(decode_frame(&[0xAA; 5]).is_err());
}

#[test]
fn stream_decoder_resynchronises_after_garbage() {
    let a = encode_frame(1, 0x01, &[0; 8]).unwrap();
    let mut b = encode_frame(6, 0x82, &[9; 8]).unwrap();
    let c = encode_frame(9, 0x11, &[0; 8]).unwrap();
    b[7] ^= 0x10;
    let mut stream = vec![0x00, 0xAA, 0x13];
    stream.extend_from_slice(&a);
    stream.extend_from_slice(&b);
    stream.extend_from_slice(&c);
    let mut dec = StreamDecoder::new();
    for chunk in stream.chunks(4) {
        dec.push(chunk);
    }
    let got: Vec<_> = std::iter::from_fn(|| dec.next_frame()).map(|f| f.encode()).collect();
    assert_eq!(got, vec![a, c]);
    assert!(dec.rejected_frames >= 1);
}

#[test]
fn lossy_channel_replays_under_the_same_seed() {
    let model = LossModel {
        drop_probability: 0.3,
        corrupt_probability: 0.3,
    };
    let frame = encode_frame(2, 0x01, &[0; 8]).unwrap();
    let run = |seed| {
        let mut ch = LossyChannel::new(model, seed);
        (0..200).map(|_| ch.transmit(frame)).collect::<Vec<_>>()
    };
    assert_eq!(run(3), run(3));
    assert_ne!(run(3), run(4));
    let out = run(3);
    assert!(out.iter().any(|d| matches!(d, Delivery::Dropped)));
    for d in out {
        if let Delivery::Corrupted(bytes) = d {
            let flipped: u32 = bytes.iter().zip(&frame).map(|(a, b)| (a ^ b).count_ones()).sum();
            assert_eq!(flipped, 1);
            assert!(decode_frame(&bytes).is_err());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn codec_is_a_bijection(f in frames()) {
        let bytes = f.encode();
        prop_assert_eq!(decode_frame(&bytes).unwrap(), f);
        prop_assert_eq!(decode_frame(&bytes).unwrap().encode(), bytes);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn crc_matches_oracle(data in proptest::collection::vec(any::<u8>(), 0..64)) {
        prop_assert_eq!(crc16(&data), crc_oracle(&data));
    }

    #[test]
    fn every_single_bit_flip_is_rejected(f in frames()) {
        let bytes = f.encode();
        for bit in 0..FRAME_LEN * 8 {
            let mut bad = bytes;
            bad[bit / 8] ^= 1 << (bit % 8);
            prop_assert!(decode_frame(&bad).is_err(), "bit {} accepted", bit);
        }
    }

    #[test]
    fn messages_survive_framing(finger in 0u8..5, flags in any::<u8>(), angles in any::<[i16; 3]>(), targets in any::<[i16; 4]>(), d in 0usize..4) {
        let msgs = [
            Message::HostTargets { finger, angles },
            Message::HostState { finger, flags, angles },
            Message::SetCurrents { board: BoardId::driver(d), targets },
            Message::DriverStatus { board: BoardId::driver(d), currents: targets },
            Message::ReadPositions { board: BoardId::sensor(usize::from(finger)) },
            Message::Positions { board: BoardId::sensor(usize::from(finger)), codes: targets.map(|t| t as u16) },
            Message::ProtectiveStop { board: BoardId::driver(d) },
            Message::HostStep,
        ];
        for m in msgs {
            let back = Message::from_frame(&decode_frame(&m.to_frame().encode()).unwrap()).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
