// End-to-end runs of the `wingtap` binary, each step handing files to the
// next exactly as an operator would.

use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Command, Output, Stdio};

use serde_json::Value;
use wingtap::framing::{altered_bits, movement_for, CommandId};
use wingtap::linkproto::{parse_dot11, Dot11Frame, LinkConfig};
use wingtap::wepcrypt::{wep_decrypt, WepFrame, WepKey};

const SUBCOMMANDS: [&str; 11] = [
    "simulate",
    "scan",
    "crack-wep",
    "decrypt",
    "filter",
    "correlate",
    "bitdiff",
    "forge",
    "replay",
    "hijack",
    "relay",
];

fn wingtap(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wingtap"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(dir: &Path, args: &[&str]) -> Value {
    let mut full = vec!["--json"];
    full.extend_from_slice(args);
    let out = wingtap(dir, &full);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{args:?}: {e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn simulate(dir: &Path) {
    json_of(
        dir,
        &["simulate", "--out", "s.dwcp", "--obs", "s.obs", "--pcap", "s.pcap"],
    );
}

#[test]
fn every_subcommand_has_help() {
    let dir = tempfile::tempdir().unwrap();
    assert!(wingtap(dir.path(), &["--help"]).status.success());
    assert!(wingtap(dir.path(), &["help"]).status.success());
    for sub in SUBCOMMANDS {
        let out = wingtap(dir.path(), &[sub, "--help"]);
        assert!(out.status.success(), "{sub} --help");
        assert!(!out.stdout.is_empty());
        assert!(wingtap(dir.path(), &["help", sub]).status.success(), "help {sub}");
    }
}

#[test]
fn usage_and_runtime_errors_have_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(wingtap(dir.path(), &["fly-away"]).status.code(), Some(2));
    assert_eq!(wingtap(dir.path(), &["decrypt", "x.dwcp"]).status.code(), Some(2));

    let missing = wingtap(dir.path(), &["crack-wep", "nope.dwcp"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error:"));

    std::fs::write(dir.path().join("bad.toml"), "[nonsense]\nx = 1\n").unwrap();
    let bad = wingtap(dir.path(), &["--config", "bad.toml", "filter", "nope.dwcp"]);
    assert_eq!(bad.status.code(), Some(1));

    std::fs::write(dir.path().join("junk.dwcp"), b"not a capture").unwrap();
    assert_eq!(wingtap(dir.path(), &["filter", "junk.dwcp"]).status.code(), Some(1));
    assert_eq!(
        wingtap(dir.path(), &["forge", "--key", "abc", "--command", "Idle"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn sniff_crack_analyse_and_take_over() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simulate(d);
    assert!(d.join("s.pcap").exists());

    assert_eq!(json_of(d, &["scan", "--capture", "s.dwcp"])["channel"], 149);

    let crack = json_of(d, &["crack-wep", "s.dwcp"]);
    let key = crack["key"].as_str().unwrap().to_string();
    assert_eq!(key, "c0ffee1337");

    let dec = json_of(d, &["decrypt", "s.dwcp", "--key", &key, "--out", "d.dwcp"]);
    assert_eq!(dec["dropped"], 0);

    let filter = json_of(d, &["filter", "d.dwcp"]);
    assert_eq!(filter["dominant"], 0x3c);
    assert_eq!(filter["ranked"][1][0], 0x56);

    json_of(
        d,
        &[
            "correlate",
            "d.dwcp",
            "--obs",
            "s.obs",
            "--csv",
            "series.csv",
            "--out",
            "corr.json",
        ],
    );
    let csv = std::fs::read_to_string(d.join("series.csv")).unwrap();
    assert!(csv.starts_with("t,"));

    let bits = json_of(d, &["bitdiff", "corr.json", "--out", "bits.json"]);
    let idle = movement_for(CommandId::Idle);
    assert_eq!(bits["baseline"], idle.to_hex());
    for cmd in [
        CommandId::Ready,
        CommandId::FullUp,
        CommandId::FullForward,
        CommandId::FullBackward,
        CommandId::FullDown,
    ] {
        let truth = altered_bits(movement_for(cmd), idle);
        let entry = &bits["commands"][cmd.name()];
        let changed: Vec<u8> = serde_json::from_value(entry["changed"].clone()).unwrap();
        let low: Vec<u8> = serde_json::from_value(entry["active_low"].clone()).unwrap();
        assert_eq!(changed, truth.changed.iter().copied().collect::<Vec<_>>(), "{cmd}");
        assert_eq!(low, truth.active_low.iter().copied().collect::<Vec<_>>(), "{cmd}");
    }

    let forged = json_of(d, &["forge", "--key", &key, "--command", "FullUp", "--count", "2"]);
    let frames: Vec<String> = serde_json::from_value(forged).unwrap();
    assert_eq!(frames.len(), 2);
    assert_ne!(frames[0], frames[1]);
    let wep: WepKey = key.parse().unwrap();
    for hex_frame in &frames {
        let raw = hex::decode(hex_frame).unwrap();
        let Dot11Frame::Data { header, body } = parse_dot11(&raw) else {
            panic!("not a data frame");
        };
        assert!(header.protected);
        let msdu = wep_decrypt(&wep, &WepFrame::from_bytes(&body).unwrap()).unwrap();
        let up = movement_for(CommandId::FullUp).to_bytes();
        assert!(msdu.windows(6).any(|w| w == up));
    }

    let report = json_of(d, &["hijack", "--key", &key, "--out", "hijack.json"]);
    assert_eq!(report["verified"], 10);
    assert_eq!(report["channel"], 149);
    assert!(d.join("hijack.json").exists());

    let replayed = json_of(d, &["replay", "s.dwcp"]);
    assert!(replayed["connected_after_us"].as_u64().unwrap() <= 1_000_000);
}

#[test]
fn wrong_key_cannot_take_over() {
    let dir = tempfile::tempdir().unwrap();
    let other = LinkConfig::default().wep_key.to_hex();
    let out = wingtap(dir.path(), &["hijack", "--channel", "149", "--key", &other]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn equal_seeds_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for tag in ["a", "b"] {
        let out = format!("{tag}.dwcp");
        let obs = format!("{tag}.obs");
        json_of(d, &["--seed", "42", "simulate", "--out", &out, "--obs", &obs]);
        let hj = format!("{tag}.json");
        json_of(
            d,
            &[
                "--seed",
                "42",
                "hijack",
                "--key",
                "c0ffee1337",
                "--loss",
                "0.05",
                "--out",
                &hj,
            ],
        );
    }
    for ext in ["dwcp", "obs", "json"] {
        let a = std::fs::read(d.join(format!("a.{ext}"))).unwrap();
        let b = std::fs::read(d.join(format!("b.{ext}"))).unwrap();
        assert!(a == b, "{ext} files differ");
    }
}

#[test]
fn hijack_through_a_relay_server() {
    let dir = tempfile::tempdir().unwrap();
    let mut server = Command::new(env!("CARGO_BIN_EXE_wingtap"))
        .current_dir(dir.path())
        .args(["--json", "relay", "--listen", "127.0.0.1:0", "--max-clients", "2"])
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut lines = BufReader::new(server.stdout.take().unwrap()).lines();
    let first: Value = serde_json::from_str(&lines.next().unwrap().unwrap()).unwrap();
    let addr = first["listening"].as_str().unwrap().to_string();

    let scan = json_of(dir.path(), &["scan", "--relay", &addr]);
    assert_eq!(scan["channel"], 149);
    let report = json_of(dir.path(), &["hijack", "--relay", &addr, "--key", "c0ffee1337"]);
    assert_eq!(report["verified"], 10);

    let status = server.wait().unwrap();
    assert!(status.success());
    let summary: Vec<String> = lines.map_while(Result::ok).collect();
    assert!(!summary.is_empty());
}
