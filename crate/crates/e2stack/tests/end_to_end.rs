//! Full-stack scenarios: RIC server, node simulator, and xApp SDK wired
//! over loopback TCP.

use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use e2stack::e2ap::{GlobalE2NodeId, SnVerdict};
use e2stack::kpm::{self, IndicationMessage, MeasValue, SUPPORTED_METRICS};
use e2stack::nodesim::{NodeSim, Scenario, TraceRow, TrafficTrace};
use e2stack::registry::SmRegistry;
use e2stack::ric::Ric;
use e2stack::testkit::ScriptedNode;
use e2stack::xapp::{self, DecodedIndication, XappError};

fn reference_identity() -> GlobalE2NodeId {
    GlobalE2NodeId::new(
        GlobalE2NodeId::plmn_from_hex("00F110").unwrap(),
        0x0000_0E05,
    )
    .unwrap()
}

fn registry() -> Arc<SmRegistry> {
    Arc::new(SmRegistry::with_kpm_v3())
}

fn steady_trace(seconds: u64, ue: &str) -> TrafficTrace {
    let rows = (0..seconds)
        .map(|i| TraceRow {
            t_ms: i * 1000,
            interval_ms: 1000,
            ue_id: ue.to_string(),
            dl_app_bytes: 1_400_000,
            ul_app_bytes: 380_000,
            dl_pkts: 1000,
            ul_pkts: 1000,
            prb_dl: 50,
            prb_ul: 20,
            rlc_delay_dl_ms: 6.5,
        })
        .collect();
    TrafficTrace::from_rows(rows).unwrap()
}

struct Collected {
    indications: Arc<Mutex<Vec<DecodedIndication>>>,
    count: Arc<AtomicU32>,
}

fn collect(ctx: &xapp::XappContext) -> Collected {
    let indications = Arc::new(Mutex::new(Vec::new()));
    let count = Arc::new(AtomicU32::new(0));
    let sink = indications.clone();
    let counter = count.clone();
    ctx.on_indication(move |ind| {
        sink.lock().unwrap().push(ind);
        counter.fetch_add(1, Ordering::SeqCst);
    });
    Collected { indications, count }
}

fn wait_for(count: &AtomicU32, target: u32, timeout: Duration) -> bool {
    let deadline = Instant::now() + timeout;
    while Instant::now() < deadline {
        if count.load(Ordering::SeqCst) >= target {
            return true;
        }
        std::thread::sleep(Duration::from_millis(5));
    }
    false
}

/// Polls the inventory until `node` shows up CONNECTED (the node's E2
/// setup races the xApp registration).
fn wait_for_node(ctx: &xapp::XappContext, node: &str) -> Result<(), String> {
    let deadline = Instant::now() + Duration::from_secs(5);
    loop {
        let nodes = ctx.list_nodes().map_err(|e| e.to_string())?;
        if nodes
            .iter()
            .any(|n| n.inventory_name == node && n.connection_status == "CONNECTED")
        {
            return Ok(());
        }
        if Instant::now() >= deadline {
            return Err(format!("node {node} never connected"));
        }
        std::thread::sleep(Duration::from_millis(10));
    }
}

#[test]
fn full_monitoring_scenario() {
    let ric = Ric::start("127.0.0.1:0", registry()).unwrap();
    let ric_addr = ric.local_addr().to_string();

    let scenario = Scenario::new(reference_identity(), &ric_addr, steady_trace(5, "ue0"));
    let node = NodeSim::new(scenario);
    let node_handle = node.handle();
    let node_thread = std::thread::spawn(move || node.run());

    let ctx = xapp::register(&ric_addr, "kpm-monitor", registry()).unwrap();
    let collected = collect(&ctx);
    let count = collected.count.clone();
    let logic_ctx = ctx.clone();
    xapp::run(&ctx, move |_| {
        wait_for_node(&logic_ctx, "gnb_001_001_00000e05")?;
        let nodes = logic_ctx.list_nodes().map_err(|e| e.to_string())?;
        assert_eq!(nodes.len(), 1);
        assert_eq!(nodes[0].inventory_name, "gnb_001_001_00000e05");
        assert_eq!(nodes[0].global_nb_id.plmn_id, "00F110");
        assert_eq!(nodes[0].connection_status, "CONNECTED");

        let functions = logic_ctx
            .available_functions("gnb_001_001_00000e05")
            .map_err(|e| e.to_string())?;
        let info = functions.get(&147).expect("kpm function advertised");
        match info {
            xapp::FunctionInfo::Decoded { summary, .. } => {
                assert_eq!(summary[&3], SUPPORTED_METRICS.to_vec());
                assert!(summary[&0].is_empty());
            }
            other => panic!("expected decoded function, got {other:?}"),
        }

        logic_ctx
            .subscribe("gnb_001_001_00000e05", 147, &SUPPORTED_METRICS, 1000, 1000)
            .map_err(|e| e.to_string())?;
        assert!(
            wait_for(&count, 5, Duration::from_secs(10)),
            "indications missing"
        );
        logic_ctx.stop();
        Ok(())
    })
    .unwrap();

    node_handle.stop();
    let report = node_thread.join().unwrap().unwrap();
    assert_eq!(report.indications_sent, 5);

    let indications = collected.indications.lock().unwrap();
    assert_eq!(indications.len(), 5);
    for (i, ind) in indications.iter().enumerate() {
        assert_eq!(ind.sn, i as u32);
        assert_eq!(ind.verdict, SnVerdict::Ok);
        assert_eq!(ind.node, "gnb_001_001_00000e05");
        assert_eq!(ind.ran_function_id, 147);

        // end-to-end structural fidelity: what was decoded re-encodes to
        // exactly the bytes the node emitted
        let header = ind.header.decoded().expect("header decodes");
        assert_eq!(header.sender, "gnb_001_001_00000e05");
        assert_eq!(header.collection_start_time_ms, i as u64 * 1000);
        let message = ind.message.decoded().expect("message decodes");
        let emitted = &report.emitted[i];
        assert_eq!(
            e2stack::to_hex(&kpm::encode_indication_header(header).unwrap()),
            emitted.header_hex
        );
        assert_eq!(
            e2stack::to_hex(&kpm::encode_indication_message(message).unwrap()),
            emitted.message_hex
        );

        // one UE, one record per report at g == P, values per the model
        match message {
            IndicationMessage::PerUe { ue_reports } => {
                assert_eq!(ue_reports.len(), 1);
                assert_eq!(ue_reports[0].ue_id, "ue0");
                assert_eq!(ue_reports[0].records.len(), 1);
                let values = &ue_reports[0].records[0].values;
                assert_eq!(values.len(), 7);
                assert_eq!(values[0], MeasValue::Int(1_400_000 + 43_000));
                assert_eq!(values[1], MeasValue::Int(380_000 + 43_000));
                assert_eq!(values[3], MeasValue::Real(1_443_000.0 * 8.0 / 1000.0));
            }
            other => panic!("expected per-UE message, got {other:?}"),
        }
    }
    assert_eq!(ctx.decode_failures(), 0);
    ric.shutdown();
}

#[test]
fn inventory_tracks_disconnect_and_notifies_owner() {
    let ric = Ric::start("127.0.0.1:0", registry()).unwrap();
    let ric_addr = ric.local_addr().to_string();

    let scenario = Scenario::new(reference_identity(), &ric_addr, steady_trace(3, "ue0"));
    let node = NodeSim::new(scenario);
    let node_handle = node.handle();
    let node_thread = std::thread::spawn(move || node.run());

    let ctx = xapp::register(&ric_addr, "watcher", registry()).unwrap();
    let collected = collect(&ctx);
    let count = collected.count.clone();
    let logic_ctx = ctx.clone();
    let node_handle_for_logic = node_handle.clone();
    xapp::run(&ctx, move |_| {
        wait_for_node(&logic_ctx, "gnb_001_001_00000e05")?;
        logic_ctx
            .subscribe("gnb_001_001_00000e05", 147, &["DRB.UEThpDl"], 1000, 1000)
            .map_err(|e| e.to_string())?;
        assert!(wait_for(&count, 3, Duration::from_secs(10)));

        // drop the node and wait for the inventory to flip
        node_handle_for_logic.stop();
        let deadline = Instant::now() + Duration::from_secs(5);
        loop {
            let nodes = logic_ctx.list_nodes().map_err(|e| e.to_string())?;
            if nodes[0].connection_status == "DISCONNECTED" {
                break;
            }
            assert!(Instant::now() < deadline, "node never went DISCONNECTED");
            std::thread::sleep(Duration::from_millis(10));
        }

        // the owner hears that its subscription closed
        let deadline = Instant::now() + Duration::from_secs(5);
        while logic_ctx.closed_events().is_empty() {
            assert!(Instant::now() < deadline, "no close notification");
            std::thread::sleep(Duration::from_millis(10));
        }
        let events = logic_ctx.closed_events();
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].1, e2stack::north::NorthCause::NodeDisconnected);

        // subscribing again now fails with node-unavailable
        let err = logic_ctx
            .subscribe("gnb_001_001_00000e05", 147, &["DRB.UEThpDl"], 1000, 1000)
            .unwrap_err();
        assert!(matches!(
            err,
            XappError::Refused(e2stack::north::NorthCause::NodeUnavailable)
        ));
        logic_ctx.stop();
        Ok(())
    })
    .unwrap();

    let _ = node_thread.join().unwrap();
    let snapshot = ric.inventory_snapshot();
    assert_eq!(snapshot[0].connection_status, "DISCONNECTED");
    assert_eq!(
        snapshot[0].global_nb_id.nb_id,
        "00000000000000000000111000000101"
    );
    ric.shutdown();
}

#[test]
fn control_passthrough_is_byte_identical() {
    let ric = Ric::start("127.0.0.1:0", registry()).unwrap();
    let ric_addr = ric.local_addr().to_string();

    let scenario = Scenario::new(reference_identity(), &ric_addr, steady_trace(1, "ue0"));
    let node = NodeSim::new(scenario);
    let node_handle = node.handle();
    let node_thread = std::thread::spawn(move || node.run());

    let ctx = xapp::register(&ric_addr, "controller", registry()).unwrap();
    let logic_ctx = ctx.clone();
    let node_handle_for_logic = node_handle.clone();
    xapp::run(&ctx, move |_| {
        wait_for_node(&logic_ctx, "gnb_001_001_00000e05")?;
        let header = vec![0x00, 0xFF, 0x13, 0x37];
        let message = vec![0xDE, 0xAD, 0xBE, 0xEF, 0x00, 0x01];
        let acked = logic_ctx
            .send_control("gnb_001_001_00000e05", 147, &header, &message)
            .map_err(|e| e.to_string())?;
        assert!(acked);

        // zero-length payloads are legal and acked
        let acked = logic_ctx
            .send_control("gnb_001_001_00000e05", 147, &[], &[])
            .map_err(|e| e.to_string())?;
        assert!(acked);

        let deadline = Instant::now() + Duration::from_secs(5);
        while node_handle_for_logic.controls().len() < 2 {
            assert!(Instant::now() < deadline);
            std::thread::sleep(Duration::from_millis(5));
        }
        let controls = node_handle_for_logic.controls();
        assert_eq!(
            controls[0],
            ("00FF1337".to_string(), "DEADBEEF0001".to_string())
        );
        assert_eq!(controls[1], (String::new(), String::new()));

        // a control to an unknown node is not acked
        let acked = logic_ctx
            .send_control("gnb_999_999_00000000", 147, &[1], &[2])
            .map_err(|e| e.to_string())?;
        assert!(!acked);
        logic_ctx.stop();
        Ok(())
    })
    .unwrap();

    node_handle.stop();
    let report = node_thread.join().unwrap().unwrap();
    assert_eq!(report.controls.len(), 2);
    ric.shutdown();
}

#[test]
fn two_xapps_receive_only_their_own_streams() {
    let ric = Ric::start("127.0.0.1:0", registry()).unwrap();
    let ric_addr = ric.local_addr().to_string();

    let scenario = Scenario::new(reference_identity(), &ric_addr, steady_trace(3, "ue0"));
    let node = NodeSim::new(scenario);
    let node_handle = node.handle();
    let node_thread = std::thread::spawn(move || node.run());

    // spawn both xApps concurrently
    let spawn = |xapp_id: &'static str| {
        let ric_addr = ric_addr.clone();
        std::thread::spawn(move || {
            let ctx = xapp::register(&ric_addr, xapp_id, registry()).unwrap();
            let collected = collect(&ctx);
            let count = collected.count.clone();
            let logic_ctx = ctx.clone();
            xapp::run(&ctx, move |_| {
                wait_for_node(&logic_ctx, "gnb_001_001_00000e05")?;
                logic_ctx
                    .subscribe("gnb_001_001_00000e05", 147, &["DRB.UEThpDl"], 1000, 1000)
                    .map_err(|e| e.to_string())?;
                assert!(wait_for(&count, 3, Duration::from_secs(10)));
                logic_ctx.stop();
                Ok(())
            })
            .unwrap();
            let got = collected.indications.lock().unwrap().clone();
            got
        })
    };
    let a = spawn("xapp-a");
    let b = spawn("xapp-b");
    let got_a = a.join().unwrap();
    let got_b = b.join().unwrap();

    node_handle.stop();
    let _ = node_thread.join().unwrap();

    for got in [&got_a, &got_b] {
        assert_eq!(got.len(), 3);
        let sns: Vec<u32> = got.iter().map(|i| i.sn).collect();
        assert_eq!(sns, vec![0, 1, 2], "per-subscription order preserved");
        assert!(got.iter().all(|i| i.verdict == SnVerdict::Ok));
    }
    ric.shutdown();
}

#[test]
fn refusals_and_local_validation() {
    let ric = Ric::start("127.0.0.1:0", registry()).unwrap();
    let ric_addr = ric.local_addr().to_string();

    let scenario = Scenario::new(reference_identity(), &ric_addr, steady_trace(2, "ue0"));
    let node = NodeSim::new(scenario);
    let node_handle = node.handle();
    let node_thread = std::thread::spawn(move || node.run());

    let ctx = xapp::register(&ric_addr, "strict", registry()).unwrap();
    let logic_ctx = ctx.clone();
    xapp::run(&ctx, move |_| {
        wait_for_node(&logic_ctx, "gnb_001_001_00000e05")?;
        // unknown metric is refused by admission, not locally
        let err = logic_ctx
            .subscribe("gnb_001_001_00000e05", 147, &["NoSuch.Metric"], 1000, 1000)
            .unwrap_err();
        assert!(matches!(
            err,
            XappError::Refused(e2stack::north::NorthCause::UnknownMetric)
        ));

        // granularity must divide the period: local error, nothing sent
        let err = logic_ctx
            .subscribe("gnb_001_001_00000e05", 147, &["DRB.UEThpDl"], 1000, 300)
            .unwrap_err();
        assert!(matches!(err, XappError::Validation(_)));

        // empty metric list: local error
        let err = logic_ctx
            .subscribe("gnb_001_001_00000e05", 147, &[], 1000, 1000)
            .unwrap_err();
        assert!(matches!(err, XappError::Validation(_)));

        // unknown function id
        let err = logic_ctx
            .subscribe("gnb_001_001_00000e05", 9, &["DRB.UEThpDl"], 1000, 1000)
            .unwrap_err();
        assert!(matches!(err, XappError::Validation(_)));

        logic_ctx.stop();
        Ok(())
    })
    .unwrap();

    // duplicate xapp id is rejected at registration
    let _keep = xapp::register(&ric_addr, "pinned-id", registry()).unwrap();
    match xapp::register(&ric_addr, "pinned-id", registry()) {
        Err(XappError::RegistrationRejected) => {}
        Err(other) => panic!("expected rejection, got {other}"),
        Ok(_) => panic!("duplicate registration accepted"),
    }

    node_handle.stop();
    let _ = node_thread.join().unwrap();
    ric.shutdown();
}

#[test]
fn failing_logic_deletes_subscriptions_best_effort() {
    let ric = Ric::start("127.0.0.1:0", registry()).unwrap();
    let ric_addr = ric.local_addr().to_string();

    let scenario = Scenario::new(reference_identity(), &ric_addr, steady_trace(30, "ue0"));
    let node = NodeSim::new(scenario);
    let node_handle = node.handle();
    let node_thread = std::thread::spawn(move || node.run());

    let ctx = xapp::register(&ric_addr, "crasher", registry()).unwrap();
    collect(&ctx);
    let logic_ctx = ctx.clone();
    let err = xapp::run(&ctx, move |_| {
        logic_ctx
            .subscribe("gnb_001_001_00000e05", 147, &["DRB.UEThpDl"], 1000, 1000)
            .map_err(|e| e.to_string())?;
        Err("simulated application failure".to_string())
    })
    .unwrap_err();
    assert!(matches!(err, XappError::Logic(_)));

    // the delete reached the RIC: no live subscription records remain
    let deadline = Instant::now() + Duration::from_secs(5);
    while !ric.subscription_states().is_empty() {
        assert!(Instant::now() < deadline, "subscription not cleaned up");
        std::thread::sleep(Duration::from_millis(10));
    }

    node_handle.stop();
    let _ = node_thread.join().unwrap();
    ric.shutdown();
}

#[test]
fn scripted_node_verdicts_and_unknown_request_ids() {
    let ric = Ric::start("127.0.0.1:0", registry()).unwrap();
    let ric_addr = ric.local_addr().to_string();

    let definition =
        kpm::encode_ran_function_definition(&kpm::KpmRanFunctionDefinition::reference("KPMFN"))
            .unwrap();
    let mut node = ScriptedNode::setup(&ric_addr, reference_identity(), 147, definition).unwrap();

    let ctx = xapp::register(&ric_addr, "verdicts", registry()).unwrap();
    let collected = collect(&ctx);
    let count = collected.count.clone();
    let logic_ctx = ctx.clone();

    let node_driver = std::thread::spawn(move || {
        let request_id = node.admit_next_subscription();
        let header = kpm::encode_indication_header(&kpm::IndicationHeader {
            collection_start_time_ms: 0,
            sender: "gnb_001_001_00000e05".to_string(),
        })
        .unwrap();
        let message =
            kpm::encode_indication_message(&IndicationMessage::PerUe { ue_reports: vec![] })
                .unwrap();
        // ok, ok, duplicate, gap (sn 3 skipped then 4)
        for sn in [0u32, 1, 1, 4] {
            node.send_indication(request_id, sn, header.clone(), message.clone());
        }
        // unknown request id draws an error indication back
        node.send_indication(e2stack::e2ap::RicRequestId::new(42, 42), 0, header, message);
        let deadline = Instant::now() + Duration::from_secs(5);
        loop {
            assert!(Instant::now() < deadline, "no error indication received");
            match node.recv() {
                Some(e2stack::e2ap::E2apMessage::ErrorIndication { .. }) => break,
                Some(_) => continue,
                None => panic!("connection closed early"),
            }
        }
        node
    });

    xapp::run(&ctx, move |_| {
        wait_for_node(&logic_ctx, "gnb_001_001_00000e05")?;
        logic_ctx
            .subscribe("gnb_001_001_00000e05", 147, &["DRB.UEThpDl"], 1000, 1000)
            .map_err(|e| e.to_string())?;
        assert!(wait_for(&count, 4, Duration::from_secs(10)));
        logic_ctx.stop();
        Ok(())
    })
    .unwrap();

    let _node = node_driver.join().unwrap();
    let verdicts: Vec<SnVerdict> = collected
        .indications
        .lock()
        .unwrap()
        .iter()
        .map(|i| i.verdict)
        .collect();
    assert_eq!(
        verdicts,
        vec![
            SnVerdict::Ok,
            SnVerdict::Ok,
            SnVerdict::Duplicate,
            SnVerdict::Gap
        ]
    );
    let counters = ric.counters();
    assert_eq!(counters.sn_duplicates, 1);
    assert_eq!(counters.sn_gaps, 1);
    assert_eq!(counters.unknown_request_ids, 1);
    ric.shutdown();
}

#[test]
fn unbound_service_model_surfaces_opaque_entries() {
    let ric = Ric::start("127.0.0.1:0", registry()).unwrap();
    let ric_addr = ric.local_addr().to_string();

    // octets no registered codec understands: unbound at setup, opaque
    // at discovery, byte-identical hex
    let garbage = vec![0xFF, 0xEE, 0xDD];
    let _node = ScriptedNode::setup(&ric_addr, reference_identity(), 9, garbage.clone()).unwrap();

    let ctx = xapp::register(&ric_addr, "prober", registry()).unwrap();
    let functions = ctx.available_functions("gnb_001_001_00000e05").unwrap();
    match functions.get(&9) {
        Some(xapp::FunctionInfo::Opaque { hex }) => {
            assert_eq!(hex, &e2stack::to_hex(&garbage));
        }
        other => panic!("expected opaque entry, got {other:?}"),
    }
    ric.shutdown();
}

#[test]
fn unreachable_ric_fails_after_bounded_retry() {
    // nothing listens on this address: bind a port, then drop it
    let addr = {
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        listener.local_addr().unwrap().to_string()
    };
    let mut scenario = Scenario::new(reference_identity(), &addr, steady_trace(1, "ue0"));
    scenario.connect_attempts = 3;
    scenario.connect_retry_delay = Duration::from_millis(5);
    let started = Instant::now();
    let err = NodeSim::new(scenario).run().unwrap_err();
    assert!(matches!(
        err,
        e2stack::nodesim::NodeError::RicUnreachable { attempts: 3, .. }
    ));
    assert!(started.elapsed() < Duration::from_secs(2));

    // the sdk fails the same way, with no partial context
    match xapp::register(&addr, "nobody", registry()) {
        Err(XappError::Connect { .. }) => {}
        Err(other) => panic!("expected connect error, got {other}"),
        Ok(_) => panic!("register succeeded against a dead address"),
    }
}

#[test]
fn deterministic_indication_streams_across_runs() {
    let run_once = || {
        let ric = Ric::start("127.0.0.1:0", registry()).unwrap();
        let ric_addr = ric.local_addr().to_string();
        let scenario = Scenario::new(reference_identity(), &ric_addr, steady_trace(4, "ue0"));
        let node = NodeSim::new(scenario);
        let node_handle = node.handle();
        let node_thread = std::thread::spawn(move || node.run());

        let ctx = xapp::register(&ric_addr, "det", registry()).unwrap();
        let collected = collect(&ctx);
        let count = collected.count.clone();
        let logic_ctx = ctx.clone();
        xapp::run(&ctx, move |_| {
            wait_for_node(&logic_ctx, "gnb_001_001_00000e05")?;
            logic_ctx
                .subscribe("gnb_001_001_00000e05", 147, &SUPPORTED_METRICS, 1000, 500)
                .map_err(|e| e.to_string())?;
            assert!(wait_for(&count, 4, Duration::from_secs(10)));
            logic_ctx.stop();
            Ok(())
        })
        .unwrap();
        node_handle.stop();
        let report = node_thread.join().unwrap().unwrap();
        ric.shutdown();
        report
            .emitted
            .iter()
            .map(|e| format!("{}:{}:{}", e.sn, e.header_hex, e.message_hex))
            .collect::<Vec<_>>()
    };
    assert_eq!(run_once(), run_once());
}
