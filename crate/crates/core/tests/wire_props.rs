use crc::{Crc, CRC_16_IBM_3740};
use proptest::prelude::*;
use thea_core::wire::frame::{FIDELITY_SCALE, OVERHEAD, SOF, VERSION};
use thea_core::wire::{
    crc16_ccitt, decode_stream, encode, encode_raw, ActuationDone, Completeness, DeviceStatus,
    Diagnostic, Frame, StreamDecoder, MAX_ACTUATION_MS,
};

// Same polynomial/init/no-reflect/no-xorout as CRC-16/CCITT-FALSE.
const REFERENCE: Crc<u16> = Crc::<u16>::new(&CRC_16_IBM_3740);

fn completeness() -> impl Strategy<Value = Completeness> {
    prop_oneof![
        Just(Completeness::None),
        Just(Completeness::Partial),
        Just(Completeness::Complete)
    ]
}

fn frame() -> impl Strategy<Value = Frame> {
    prop_oneof![
        (1u8..=4, 0u16..=MAX_ACTUATION_MS).prop_map(|(channel, duration_ms)| Frame::Actuate {
            channel,
            duration_ms
        }),
        Just(Frame::StopAll),
        Just(Frame::StatusReq),
        (any::<bool>(), any::<bool>(), 0u8..=4, 0u8..16, any::<u32>()).prop_map(
            |(
                kill_switch_on,
                usage_limit_reached,
                active_channel,
                calibrated_mask,
                cumulative_on_ms,
            )| {
                Frame::StatusResp(DeviceStatus {
                    kill_switch_on,
                    usage_limit_reached,
                    active_channel,
                    calibrated_mask,
                    cumulative_on_ms,
                })
            }
        ),
        (any::<bool>(), any::<bool>()).prop_map(|(engaged, usage_limit_reached)| {
            Frame::EventKill {
                engaged,
                usage_limit_reached,
            }
        }),
        Just(Frame::Ping),
        Just(Frame::Pong),
        (1u8..=4, 0u16..=FIDELITY_SCALE).prop_map(|(channel, fidelity_bp)| Frame::CalibrateSet {
            channel,
            fidelity_bp
        }),
        (
            1u8..=4,
            completeness(),
            0u16..=MAX_ACTUATION_MS,
            any::<u32>(),
            any::<bool>(),
            any::<bool>()
        )
            .prop_map(
                |(
                    channel,
                    completeness,
                    on_ms,
                    cumulative_on_ms,
                    usage_limit_reached,
                    interrupted,
                )| {
                    Frame::ActuationDone(ActuationDone {
                        channel,
                        completeness,
                        on_ms,
                        cumulative_on_ms,
                        usage_limit_reached,
                        interrupted,
                    })
                }
            ),
    ]
}

#[test]
fn crc_check_vector_matches_reference() {
    assert_eq!(crc16_ccitt(b"123456789"), 0x29B1);
    assert_eq!(REFERENCE.checksum(b"123456789"), 0x29B1);
}

#[test]
fn ping_is_six_bytes() {
    let b = encode(&Frame::Ping).unwrap();
    assert_eq!(b.len(), OVERHEAD);
    assert_eq!(&b[..4], &[SOF, VERSION, 0x06, 0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2048))]

    #[test]
    fn decode_inverts_encode(f in frame()) {
        let bytes = encode(&f).unwrap();
        let d = decode_stream(&bytes);
        prop_assert_eq!(d.frames, vec![f]);
        prop_assert!(d.diagnostics.is_empty());
        prop_assert!(d.remainder.is_empty());
    }

    #[test]
    fn crc_agrees_with_reference(data in proptest::collection::vec(any::<u8>(), 0..300)) {
        prop_assert_eq!(crc16_ccitt(&data), REFERENCE.checksum(&data));
    }

    #[test]
    fn trailer_is_little_endian_crc(f in frame()) {
        let b = encode(&f).unwrap();
        let n = b.len();
        let expect = REFERENCE.checksum(&b[1..n - 2]);
        prop_assert_eq!(u16::from_le_bytes([b[n - 2], b[n - 1]]), expect);
        prop_assert_eq!(b[3] as usize, n - OVERHEAD);
    }

    #[test]
    fn resyncs_past_garbage(
        f in frame(),
        pre in proptest::collection::vec(any::<u8>().prop_filter("no SOF", |b| *b != SOF), 0..40),
        post in proptest::collection::vec(any::<u8>().prop_filter("no SOF", |b| *b != SOF), 0..40),
    ) {
        let mut buf = pre;
        buf.extend(encode(&f).unwrap());
        buf.extend(post);
        prop_assert_eq!(decode_stream(&buf).frames, vec![f]);
    }

    #[test]
    fn arbitrary_bytes_never_panic(data in proptest::collection::vec(any::<u8>(), 0..600)) {
        let d = decode_stream(&data);
        for f in &d.frames {
            prop_assert!(f.validate().is_ok());
        }
        prop_assert!(d.remainder.len() <= data.len());
    }

    #[test]
    fn chunked_stream_matches_whole(
        frames in proptest::collection::vec(frame(), 1..12),
        cuts in proptest::collection::vec(1usize..16, 1..40),
    ) {
        let bytes: Vec<u8> = frames.iter().flat_map(|f| encode(f).unwrap()).collect();
        let mut dec = StreamDecoder::new();
        let mut got = Vec::new();
        let mut at = 0;
        for c in cuts.iter().cycle() {
            if at >= bytes.len() {
                break;
            }
            let end = (at + c).min(bytes.len());
            got.extend(dec.push(&bytes[at..end]).0);
            at = end;
        }
        prop_assert_eq!(got, frames);
        prop_assert!(dec.finish().is_empty());
    }

    #[test]
    fn over_ceiling_actuation_is_not_decodable(d in (MAX_ACTUATION_MS + 1)..=u16::MAX, ch in 1u8..=4) {
        let too_long = Frame::Actuate { channel: ch, duration_ms: d };
        prop_assert!(encode(&too_long).is_err());
        let mut p = vec![ch];
        p.extend(d.to_le_bytes());
        let raw = encode_raw(0x01, &p).unwrap();
        let out = decode_stream(&raw);
        prop_assert!(out.frames.is_empty());
        let malformed = matches!(out.diagnostics.as_slice(), [Diagnostic::MalformedPayload { .. }]);
        prop_assert!(malformed);
    }
}
