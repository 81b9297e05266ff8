// Link-layer behaviour of the simulated drone and controller, observed from
// the air.

use wingtap::attack::{forge_session, ForgedFrames, FrameFactory};
use wingtap::framing::{decode_control, movement_for, CommandId, CrcConfig};
use wingtap::linkproto::{
    classify_frame, detect_beacon_channel, ChannelScanner, FrameKind, LedColor, LinkConfig, LinkError, LinkEvent,
    LinkFrame, MacAddr, RcLinkState, VALID_CHANNELS,
};
use wingtap::simworld::{secs_to_us, ScenarioScript, StickTimeline, World, WorldConfig, WorldScanner, TICK_US};

const HANDSHAKE: [FrameKind; 5] = [
    FrameKind::Beacon,
    FrameKind::ArpRequest,
    FrameKind::ArpResponse,
    FrameKind::ConnectionInitiator,
    FrameKind::Control,
];

fn world(seed: u64) -> World {
    World::new(WorldConfig::new(seed, LinkConfig::default())).unwrap()
}

fn quiet_world(seed: u64) -> World {
    let mut wc = WorldConfig::new(seed, LinkConfig::default());
    wc.rc_enabled = false;
    World::new(wc).unwrap()
}

fn classified(world: &World, records: &[wingtap::captureio::CaptureRecord]) -> Vec<(u64, LinkFrame)> {
    let key = world.link().wep_key.clone();
    records
        .iter()
        .filter_map(|r| classify_frame(&r.frame, r.channel, Some(&key), false).map(|f| (r.ts_us, f)))
        .collect()
}

fn first_occurrences(frames: &[(u64, LinkFrame)]) -> Vec<FrameKind> {
    let mut seen = Vec::new();
    for (_, f) in frames {
        if HANDSHAKE.contains(&f.kind) && !seen.contains(&f.kind) {
            seen.push(f.kind);
        }
    }
    seen
}

fn attacker(world: &World, last_octet: u8) -> FrameFactory {
    let link = world.link();
    let mac = MacAddr([0x02, 0, 0, 0, 0, last_octet]);
    let mut f = FrameFactory::new(
        link.wep_key.clone(),
        ForgedFrames::reference(),
        mac,
        std::net::Ipv4Addr::new(192, 168, 2, 100 + last_octet),
        link.drone_ip,
    );
    f.set_drone(link.drone_mac);
    f
}

/// ARP request in one tick, initiator in the next.
fn connect(world: &mut World, radio: usize, f: &mut FrameFactory) {
    world.inject(radio, vec![f.arp_request()]);
    world.run_tick();
    world.inject(radio, vec![f.initiator()]);
    world.run_tick();
}

fn connected_macs(world: &World) -> Vec<MacAddr> {
    world.drone_link().connected().map(|p| p.mac).collect()
}

#[test]
fn pairing_follows_the_handshake_order() {
    let mut w = world(1);
    let tap = w.attach_tap(149).unwrap();
    w.run_until(secs_to_us(1.0));
    let frames = classified(&w, w.tap_records(tap));
    assert_eq!(first_occurrences(&frames), HANDSHAKE.to_vec());

    let rc = w.link().rc_mac;
    let from_rc: Vec<_> = frames.iter().filter(|(_, f)| f.src_mac == rc).cloned().collect();
    assert_eq!(
        first_occurrences(&from_rc),
        vec![
            FrameKind::Beacon,
            FrameKind::ArpRequest,
            FrameKind::ConnectionInitiator,
            FrameKind::Control
        ]
    );
}

#[test]
fn controller_sends_one_initiator_then_a_control_per_tick() {
    let mut w = world(2);
    let tap = w.attach_tap(149).unwrap();
    w.run_until(secs_to_us(5.0));
    let rc = w.link().rc_mac;
    let frames = classified(&w, w.tap_records(tap));
    let from_rc = |k: FrameKind| frames.iter().filter(|(_, f)| f.src_mac == rc && f.kind == k).count();
    assert_eq!(from_rc(FrameKind::ConnectionInitiator), 1);
    assert_eq!(from_rc(FrameKind::Ack), 0);
    let first_control = frames
        .iter()
        .find(|(_, f)| f.src_mac == rc && f.kind == FrameKind::Control)
        .map(|(t, _)| *t)
        .unwrap();
    let expected = (secs_to_us(5.0) - first_control).div_ceil(TICK_US) as usize;
    assert_eq!(from_rc(FrameKind::Control), expected);
}

#[test]
fn full_up_for_two_seconds_is_a_hundred_frames() {
    let mut w = world(3);
    w.set_sticks(StickTimeline {
        spans: vec![(secs_to_us(1.0), secs_to_us(3.0), CommandId::FullUp)],
    });
    let tap = w.attach_tap(149).unwrap();
    w.run_until(secs_to_us(4.0));
    let rc = w.link().rc_mac;
    let up = movement_for(CommandId::FullUp);
    let frames = classified(&w, w.tap_records(tap));
    let movements: Vec<_> = frames
        .iter()
        .filter(|(_, f)| f.src_mac == rc && f.kind == FrameKind::Control)
        .map(|(t, f)| {
            let pkt = decode_control(&f.udp_payload().unwrap(), CrcConfig::default()).unwrap();
            (*t, pkt.movement)
        })
        .collect();
    assert_eq!(movements.iter().filter(|(_, m)| *m == up).count(), 100);
    for (t, m) in &movements {
        let inside = (secs_to_us(1.0)..secs_to_us(3.0)).contains(t);
        assert_eq!(*m == up, inside, "frame at {t} us");
    }
}

#[test]
fn lone_controller_keeps_beaconing_and_asking() {
    let cfg = LinkConfig::default();
    let mut rc = RcLinkState::new(&cfg, 9);
    let mut kinds = Vec::new();
    for k in 0..150u64 {
        for f in rc.step(LinkEvent::Tick, k * TICK_US, &cfg) {
            kinds.push(classify_frame(&f, cfg.channel, Some(&cfg.wep_key), false).unwrap().kind);
        }
    }
    let count = |k: FrameKind| kinds.iter().filter(|&&x| x == k).count();
    assert_eq!(count(FrameKind::Beacon), 30);
    assert_eq!(count(FrameKind::ArpRequest), 6);
    assert_eq!(kinds.len(), 36);
}

#[test]
fn idle_link_holds_without_acks() {
    let mut w = world(4);
    let tap = w.attach_tap(149).unwrap();
    w.run_until(secs_to_us(0.5));
    assert!(w.drone_link().is_connected());
    while w.now_us() < secs_to_us(10.0) {
        w.run_tick();
        assert!(w.drone_link().is_connected(), "dropped at {} us", w.now_us());
        assert_eq!(w.drone_link().led(), LedColor::Green);
    }
    let frames = classified(&w, w.tap_records(tap));
    assert!(frames.iter().all(|(_, f)| f.kind != FrameKind::Ack));
}

#[test]
fn second_peer_joins_and_both_are_obeyed_in_arrival_order() {
    let mut w = quiet_world(5);
    let ra = w.add_radio(149).unwrap();
    let rb = w.add_radio(149).unwrap();
    let mut a = attacker(&w, 0x0a);
    let mut b = attacker(&w, 0x0b);
    assert_eq!(w.drone_link().led(), LedColor::Red);
    connect(&mut w, ra, &mut a);
    assert_eq!(connected_macs(&w), vec![a.mac()]);
    connect(&mut w, rb, &mut b);
    assert_eq!(connected_macs(&w).len(), 2);
    assert_eq!(w.drone_link().led(), LedColor::Green);

    let before = w.delivered().len();
    let mut expected = Vec::new();
    for k in 0..20u64 {
        let base = w.now_us();
        // alternate which peer goes first within the tick
        let (first, second) = if k % 2 == 0 {
            ((ra, 0), (rb, 1))
        } else {
            ((rb, 1), (ra, 0))
        };
        for (offset, (radio, who)) in [(3_000, first), (7_000, second)] {
            let (f, cmd) = if who == 0 {
                (&mut a, CommandId::FullForward)
            } else {
                (&mut b, CommandId::FullBackward)
            };
            w.transmit_at(radio, base + offset, f.command(cmd));
            expected.push((f.mac(), movement_for(cmd)));
        }
        w.run_tick();
    }
    let got: Vec<_> = w.delivered()[before..].iter().map(|d| (d.from, d.movement)).collect();
    assert_eq!(got, expected);
}

#[test]
fn silent_peer_expires_after_the_timeout() {
    let mut w = quiet_world(6);
    let radio = w.add_radio(149).unwrap();
    let mut a = attacker(&w, 0x0c);
    connect(&mut w, radio, &mut a);
    let mut last_sent = 0;
    while w.now_us() < secs_to_us(5.0) {
        last_sent = w.now_us() + 10_000;
        w.transmit_at(radio, last_sent, a.command(CommandId::Idle));
        w.run_tick();
        assert_eq!(connected_macs(&w), vec![a.mac()]);
    }
    let timeout = w.link().peer_timeout_ms * 1000;
    while w.drone_link().is_connected() {
        assert!(
            w.now_us() - last_sent <= timeout + 2 * TICK_US,
            "peer outlived its timeout"
        );
        w.run_tick();
    }
    assert!(w.now_us() - last_sent > timeout);
    assert!(w.drone_link().peers().is_empty());
    assert_eq!(w.drone_link().led(), LedColor::Red);
}

#[test]
fn beacons_alone_keep_a_peer_alive() {
    let mut w = quiet_world(7);
    let radio = w.add_radio(149).unwrap();
    let mut a = attacker(&w, 0x0d);
    connect(&mut w, radio, &mut a);
    let ch = w.link().channel;
    while w.now_us() < secs_to_us(4.0) {
        if (w.now_us() / TICK_US).is_multiple_of(5) {
            let now = w.now_us();
            w.inject(radio, vec![a.beacon(now, 100, ch)]);
        }
        w.run_tick();
        assert!(w.drone_link().is_connected());
    }
}

#[test]
fn scan_finds_the_drone_channel() {
    let mut w = world(8);
    let radio = w.add_radio(36).unwrap();
    let mut scanner = WorldScanner { world: &mut w, radio };
    assert_eq!(detect_beacon_channel(&mut scanner, &VALID_CHANNELS, 200).unwrap(), 149);
}

#[test]
fn scan_follows_an_automatically_chosen_channel() {
    for seed in [1, 2, 3, 4, 5, 6] {
        let mut script = ScenarioScript::empty(seed);
        script.auto_channel = true;
        let link = script.session_link();
        let mut w = World::new(WorldConfig::new(seed, link.clone())).unwrap();
        let radio = w.add_radio(36).unwrap();
        let mut scanner = WorldScanner { world: &mut w, radio };
        assert_eq!(
            detect_beacon_channel(&mut scanner, &VALID_CHANNELS, 200).unwrap(),
            link.channel
        );
    }
}

struct Silence;

impl ChannelScanner for Silence {
    fn listen(&mut self, _channel: u8, _dwell_ms: u64) -> Vec<Vec<u8>> {
        Vec::new()
    }
}

#[test]
fn scan_without_a_drone_is_not_found() {
    assert!(matches!(
        detect_beacon_channel(&mut Silence, &VALID_CHANNELS, 200),
        Err(LinkError::NotFound)
    ));
    let mut w = world(9);
    let radio = w.add_radio(36).unwrap();
    let elsewhere: Vec<u8> = VALID_CHANNELS.iter().copied().filter(|&c| c != 149).collect();
    let mut scanner = WorldScanner { world: &mut w, radio };
    assert!(matches!(
        detect_beacon_channel(&mut scanner, &elsewhere, 200),
        Err(LinkError::NotFound)
    ));
    assert!(matches!(
        detect_beacon_channel(&mut Silence, &VALID_CHANNELS, 100),
        Err(LinkError::DwellTooShort(100))
    ));
}

#[test]
fn other_channels_hear_nothing() {
    let mut w = world(10);
    let here = w.attach_tap(149).unwrap();
    let there = w.attach_tap(153).unwrap();
    w.run_until(secs_to_us(2.0));
    assert!(!w.tap_records(here).is_empty());
    assert!(w.tap_records(there).is_empty());
}

#[test]
fn forged_session_matches_controller_handshake() {
    // A factory built from a cracked key speaks the same handshake as the
    // real controller.
    let mut w = quiet_world(11);
    let tap = w.attach_tap(149).unwrap();
    let radio = w.add_radio(149).unwrap();
    let link = w.link().clone();
    let mut f = forge_session(
        link.wep_key.clone(),
        ForgedFrames::reference(),
        MacAddr([2, 0, 0, 0, 0, 0x0e]),
    );
    f.set_drone(link.drone_mac);
    let now = w.now_us();
    w.inject(radio, vec![f.beacon(now, 100, 149), f.arp_request()]);
    w.run_tick();
    w.inject(radio, vec![f.initiator(), f.command(CommandId::Idle)]);
    w.run_tick();
    let frames = classified(&w, w.tap_records(tap));
    let from_us: Vec<_> = frames.iter().filter(|(_, x)| x.src_mac == f.mac()).cloned().collect();
    assert_eq!(
        first_occurrences(&from_us),
        vec![
            FrameKind::Beacon,
            FrameKind::ArpRequest,
            FrameKind::ConnectionInitiator,
            FrameKind::Control
        ]
    );
    assert_eq!(connected_macs(&w), vec![f.mac()]);
}
