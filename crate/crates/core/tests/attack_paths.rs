// Active attacks against a simulated drone: hijack, replay, and the TCP
// relay that lets an external process drive an attacker radio.

use std::io::{BufReader, Write};
use std::net::TcpStream;
use std::thread;
use std::time::Duration;

use wingtap::attack::{
    handshake_segment, hijack_world, prepare_target, read_envelope, relay_send, replay, write_envelope, AttackError,
    AttackLink, HijackConfig, HijackPlan, PlanStep, RelayLink, RelayServer, TakeoverMode, TargetConfig,
};
use wingtap::captureio::CaptureRecord;
use wingtap::framing::CommandId;
use wingtap::linkproto::{LedColor, LinkConfig};
use wingtap::simworld::{secs_to_us, World, WorldConfig, TICK_US};

fn target(seed: u64, mode: TakeoverMode) -> World {
    prepare_target(&TargetConfig::new(seed, mode)).unwrap()
}

fn plan(steps: &[(CommandId, f64)]) -> HijackPlan {
    HijackPlan {
        mode: TakeoverMode::AfterRcDisconnect,
        steps: steps
            .iter()
            .map(|&(command, duration)| PlanStep { command, duration })
            .collect(),
    }
}

/// Air traffic of a normally paired controller, for replay material.
fn recorded_session(seed: u64, seconds: f64) -> Vec<CaptureRecord> {
    let mut w = World::new(WorldConfig::new(seed, LinkConfig::default())).unwrap();
    let tap = w.attach_tap(149).unwrap();
    w.run_until(secs_to_us(seconds));
    w.take_tap(tap)
}

#[test]
fn hijack_after_disconnect_verifies_every_step() {
    let mut w = target(1, TakeoverMode::AfterRcDisconnect);
    assert_eq!(w.drone_link().led(), LedColor::Red);
    let report = hijack_world(&mut w, &HijackPlan::all10(), Some(149), &HijackConfig::default()).unwrap();
    assert_eq!(report.steps.len(), 10);
    assert!(report.all_verified(), "{report:#?}");
    assert!(report.check().is_ok());
}

#[test]
fn hijack_alongside_the_controller_verifies_every_step() {
    let mut w = target(2, TakeoverMode::CoexistWithRc);
    assert!(w.rc_link().is_some());
    let mut p = HijackPlan::all10();
    p.mode = TakeoverMode::CoexistWithRc;
    let report = hijack_world(&mut w, &p, Some(149), &HijackConfig::default()).unwrap();
    assert!(report.all_verified(), "{report:#?}");
    assert_eq!(w.drone_link().connected().count(), 2);
}

#[test]
fn hijack_scans_when_no_channel_is_given() {
    let mut cfg = TargetConfig::new(3, TakeoverMode::AfterRcDisconnect);
    cfg.link = LinkConfig {
        channel: 161,
        ..LinkConfig::default()
    };
    let mut w = prepare_target(&cfg).unwrap();
    let p = plan(&[(CommandId::Ready, 1.0), (CommandId::FullUp, 1.0)]);
    let report = hijack_world(&mut w, &p, None, &HijackConfig::default()).unwrap();
    assert_eq!(report.channel, 161);
    assert!(report.all_verified());
}

#[test]
fn climbing_without_propellers_is_unverified() {
    let mut w = target(4, TakeoverMode::AfterRcDisconnect);
    let report = hijack_world(
        &mut w,
        &plan(&[(CommandId::FullUp, 1.0)]),
        Some(149),
        &HijackConfig::default(),
    )
    .unwrap();
    assert!(!report.all_verified());
    assert!(matches!(report.check(), Err(AttackError::StepUnverified(0))));
    assert_eq!(w.body().z, 0.0);
}

#[test]
fn malformed_plans_are_rejected() {
    assert!(matches!(plan(&[]).validate(), Err(AttackError::InvalidPlan(_))));
    assert!(matches!(
        plan(&[(CommandId::Ready, -1.0)]).validate(),
        Err(AttackError::InvalidPlan(_))
    ));
    assert!(HijackPlan::from_json("{\"steps\": 3}").is_err());
}

#[test]
fn replayed_handshake_reconnects_an_abandoned_drone() {
    let recorded = recorded_session(10, 3.0);
    let rc = LinkConfig::default().rc_mac;
    let segment = handshake_segment(&recorded, rc, secs_to_us(2.5)).unwrap();
    let mut w = target(11, TakeoverMode::AfterRcDisconnect);
    assert!(!w.drone_link().is_connected());
    let radio = w.add_radio(149).unwrap();
    let start = w.now_us();
    let res = replay(&mut w, radio, &segment, start).unwrap();
    assert_eq!(res.sent, segment.len());
    while !w.drone_link().is_connected() {
        assert!(w.now_us() - start < secs_to_us(1.0), "not reconnected within a second");
        w.run_tick();
    }
    let peers: Vec<_> = w.drone_link().connected().map(|p| p.mac).collect();
    assert_eq!(peers, vec![rc]);
}

#[test]
fn replayed_idle_controls_outlast_the_peer_timeout() {
    let recorded = recorded_session(12, 4.0);
    let rc = LinkConfig::default().rc_mac;
    let segment = handshake_segment(&recorded, rc, secs_to_us(3.0)).unwrap();
    let mut w = target(13, TakeoverMode::AfterRcDisconnect);
    let radio = w.add_radio(149).unwrap();
    let start = w.now_us();
    let res = replay(&mut w, radio, &segment, start).unwrap();
    let timeout = secs_to_us(w.link().peer_timeout_ms as f64 / 1000.0);
    w.run_until(start + secs_to_us(0.5));
    assert!(w.drone_link().is_connected());
    while w.now_us() < res.last_us {
        w.run_tick();
        assert!(w.drone_link().is_connected(), "dropped at {} us", w.now_us());
    }
    assert!(res.last_us - start > timeout);
}

#[test]
fn replay_on_the_wrong_channel_does_nothing() {
    let recorded = recorded_session(14, 3.0);
    let segment = handshake_segment(&recorded, LinkConfig::default().rc_mac, secs_to_us(2.5)).unwrap();
    let mut w = target(15, TakeoverMode::AfterRcDisconnect);
    let body = *w.body();
    let radio = w.add_radio(153).unwrap();
    let start = w.now_us();
    let res = replay(&mut w, radio, &segment, start).unwrap();
    assert_eq!(res.channel, 153);
    w.run_until(res.last_us + TICK_US);
    assert!(!w.drone_link().is_connected());
    assert!(w.drone_link().peers().is_empty());
    assert_eq!(*w.body(), body);
}

#[test]
fn replay_rejects_empty_and_decrypted_segments() {
    let mut w = target(16, TakeoverMode::AfterRcDisconnect);
    let radio = w.add_radio(149).unwrap();
    assert!(matches!(replay(&mut w, radio, &[], 0), Err(AttackError::EmptySegment)));
    let mut r = CaptureRecord::new(0, 149, vec![0; 30]);
    r.flags = wingtap::captureio::FLAG_DECRYPTED;
    assert!(matches!(
        replay(&mut w, radio, &[r], 0),
        Err(AttackError::InvalidSegment(_))
    ));
}

fn serve_in_background(world: World, server: RelayServer) -> thread::JoinHandle<(World, wingtap::attack::RelayStats)> {
    thread::spawn(move || server.serve(world).unwrap())
}

#[test]
fn relay_delivers_a_thousand_frames_in_order() {
    let mut w = World::new(WorldConfig::new(20, LinkConfig::default())).unwrap();
    let tap = w.attach_tap(149).unwrap();
    let server = RelayServer::bind("127.0.0.1:0").unwrap().max_clients(1);
    let addr = server.local_addr().unwrap();
    let handle = serve_in_background(w, server);

    let frames: Vec<Vec<u8>> = (0..1000u32)
        .map(|i| {
            let mut f = vec![0x08, 0x00, 0, 0];
            f.extend_from_slice(&[0xee; 20]);
            f.extend_from_slice(&i.to_be_bytes());
            f
        })
        .collect();
    assert_eq!(relay_send(addr, &frames).unwrap(), 1000);
    let (w, stats) = handle.join().unwrap();
    assert_eq!(stats.injected, 1000);
    assert!(stats.dropped.is_empty(), "{:?}", stats.dropped);
    let ours: Vec<&[u8]> = w
        .tap_records(tap)
        .iter()
        .filter(|r| r.frame.len() == 28 && r.frame[4..24] == [0xee; 20])
        .map(|r| r.frame.as_slice())
        .collect();
    assert_eq!(ours.len(), 1000);
    for (got, sent) in ours.iter().zip(&frames) {
        assert_eq!(*got, sent.as_slice());
    }
}

#[test]
fn malformed_envelope_drops_only_that_client() {
    let w = World::new(WorldConfig::new(21, LinkConfig::default())).unwrap();
    let server = RelayServer::bind("127.0.0.1:0").unwrap().max_clients(2);
    let addr = server.local_addr().unwrap();
    let handle = serve_in_background(w, server);

    let mut good = RelayLink::connect(addr).unwrap();
    good.tick(Vec::new()).unwrap();

    let mut bad = TcpStream::connect(addr).unwrap();
    bad.set_read_timeout(Some(Duration::from_secs(5))).unwrap();
    write_envelope(&mut bad, &[1, 2, 3, 4, 5]).unwrap();
    bad.flush().unwrap();
    let mut r = BufReader::new(bad);
    assert!(matches!(read_envelope(&mut r), Ok(None) | Err(_)));

    // the other client keeps its radio
    assert!(good.tick(Vec::new()).is_ok());
    drop(good);
    let (_, stats) = handle.join().unwrap();
    assert_eq!(stats.clients, 2);
    assert_eq!(stats.dropped.len(), 1);
    assert!(stats.dropped[0].contains("5-byte"), "{:?}", stats.dropped);
}

#[test]
fn idle_client_times_out() {
    let w = World::new(WorldConfig::new(22, LinkConfig::default())).unwrap();
    let server = RelayServer::bind("127.0.0.1:0")
        .unwrap()
        .max_clients(1)
        .idle_timeout(Duration::from_millis(200));
    let addr = server.local_addr().unwrap();
    let handle = serve_in_background(w, server);
    let _quiet = TcpStream::connect(addr).unwrap();
    let (_, stats) = handle.join().unwrap();
    assert_eq!(stats.dropped.len(), 1);
    assert!(stats.dropped[0].contains("idle"), "{:?}", stats.dropped);
}

#[test]
fn relay_link_reports_a_lost_server() {
    let w = World::new(WorldConfig::new(23, LinkConfig::default())).unwrap();
    let server = RelayServer::bind("127.0.0.1:0").unwrap();
    let addr = server.local_addr().unwrap();
    let stop = server.stop_handle();
    let handle = serve_in_background(w, server);
    let mut link = RelayLink::connect(addr).unwrap();
    link.tick(Vec::new()).unwrap();
    stop.store(true, std::sync::atomic::Ordering::Relaxed);
    handle.join().unwrap();
    assert!(matches!(link.tick(Vec::new()), Err(AttackError::ConnectionLost)));
}
