//! Randomized round-trip and robustness properties for the KPM schema
//! codecs and the E2AP framing.

use e2stack::e2ap::{self};
use e2stack::kpm;
use e2stack::testkit;

#[test]
fn kpm_schema_round_trips() {
    let mut rng = testkit::rng(0x5EED_0001);
    for _ in 0..300 {
        let t = testkit::random_event_trigger(&mut rng);
        let octets = kpm::encode_event_trigger(&t).unwrap();
        assert_eq!(octets.len(), 2);
        assert_eq!(kpm::decode_event_trigger(&octets).unwrap(), t);
        assert_eq!(
            kpm::encode_event_trigger(&kpm::decode_event_trigger(&octets).unwrap()).unwrap(),
            octets
        );

        let a = testkit::random_action_definition(&mut rng);
        let octets = kpm::encode_action_definition(&a).unwrap();
        assert_eq!(kpm::decode_action_definition(&octets).unwrap(), a);

        let d = testkit::random_function_definition(&mut rng);
        let octets = kpm::encode_ran_function_definition(&d).unwrap();
        let back = kpm::decode_ran_function_definition(&octets).unwrap();
        assert_eq!(back, d);
        assert_eq!(
            kpm::function_definition_summary(&back),
            kpm::function_definition_summary(&d)
        );

        let h = testkit::random_indication_header(&mut rng);
        let octets = kpm::encode_indication_header(&h).unwrap();
        assert_eq!(kpm::decode_indication_header(&octets).unwrap(), h);

        let m = testkit::random_indication_message(&mut rng);
        let octets = kpm::encode_indication_message(&m).unwrap();
        assert_eq!(kpm::decode_indication_message(&octets).unwrap(), m);
        assert_eq!(
            kpm::encode_indication_message(&kpm::decode_indication_message(&octets).unwrap())
                .unwrap(),
            octets
        );
    }
}

#[test]
fn e2ap_frame_round_trips_all_kinds() {
    let mut rng = testkit::rng(0x5EED_0002);
    for kind in 0..12u8 {
        for _ in 0..100 {
            let msg = testkit::random_e2ap_message(&mut rng, kind);
            let octets = e2ap::frame(&msg).unwrap();
            let (back, consumed) = e2ap::parse(&octets).unwrap();
            assert_eq!(back, msg);
            assert_eq!(consumed, octets.len());
            // byte inverse on valid frames
            assert_eq!(e2ap::frame(&back).unwrap(), octets);
        }
    }
}

#[test]
fn single_bit_flips_never_crash_and_never_alias() {
    // flipping any single bit of a valid encoding either decodes to a
    // different value or errors; it never panics and never yields the
    // original value
    let mut rng = testkit::rng(0x5EED_0003);
    for _ in 0..40 {
        let m = testkit::random_indication_message(&mut rng);
        let octets = kpm::encode_indication_message(&m).unwrap();
        for byte in 0..octets.len() {
            for bit in 0..8 {
                let mut mutated = octets.clone();
                mutated[byte] ^= 0x80 >> bit;
                if let Ok(other) = kpm::decode_indication_message(&mutated) {
                    assert_ne!(other, m, "bit flip aliased at {byte}:{bit}")
                }
            }
        }
    }
}

#[test]
fn fuzzed_byte_strings_never_crash_the_parser() {
    let mut rng = testkit::rng(0x5EED_0004);
    use rand::Rng;
    for _ in 0..20_000 {
        let len = rng.gen_range(0..64);
        let bytes: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
        let _ = e2ap::parse(&bytes);
        let _ = kpm::decode_indication_message(&bytes);
        let _ = kpm::decode_ran_function_definition(&bytes);
        let _ = kpm::decode_action_definition(&bytes);
        let _ = kpm::decode_event_trigger(&bytes);
        let _ = kpm::decode_indication_header(&bytes);
    }
    // truncations of valid frames as well
    for kind in 0..12u8 {
        let msg = testkit::random_e2ap_message(&mut rng, kind);
        let octets = e2ap::frame(&msg).unwrap();
        for cut in 0..octets.len() {
            assert!(e2ap::parse(&octets[..cut]).is_err());
        }
    }
}

#[test]
fn subscription_fsm_brute_force_depth_six() {
    use e2ap::{subscription_transition, SubAction, SubEvent, SubscriptionState};
    let events = [
        SubEvent::SendSubReq,
        SubEvent::RecvSubResp { admitted: true },
        SubEvent::RecvSubResp { admitted: false },
        SubEvent::RecvSubFail,
        SubEvent::RecvIndication { sn: 0 },
        SubEvent::SendDelReq,
        SubEvent::RecvDelResp,
        SubEvent::PeerDisconnect,
    ];
    let mut stack = vec![(SubscriptionState::Idle, 0usize, false)];
    let mut active_reachable = false;
    let mut delivery_seen_in = std::collections::BTreeSet::new();
    while let Some((state, depth, was_active)) = stack.pop() {
        if depth == 6 {
            continue;
        }
        for &event in &events {
            let (next, actions) = subscription_transition(state, event);
            for action in &actions {
                if let SubAction::Deliver { .. } = action {
                    delivery_seen_in.insert(format!("{state:?}"));
                    // deliveries only in Active or Deleting
                    assert!(
                        matches!(
                            state,
                            SubscriptionState::Active | SubscriptionState::Deleting
                        ),
                        "delivery in {state:?}"
                    );
                }
            }
            // Closed absorbs everything
            if state == SubscriptionState::Closed {
                assert_eq!(next, SubscriptionState::Closed);
            }
            // Active is reachable only through Pending
            if next == SubscriptionState::Active && state != SubscriptionState::Active {
                assert_eq!(state, SubscriptionState::Pending);
                active_reachable = true;
            }
            stack.push((
                next,
                depth + 1,
                was_active || next == SubscriptionState::Active,
            ));
        }
    }
    assert!(active_reachable);
    assert_eq!(
        delivery_seen_in.into_iter().collect::<Vec<_>>(),
        vec!["Active".to_string(), "Deleting".to_string()]
    );
}
