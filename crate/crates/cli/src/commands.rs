use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use serde::Serialize;
use serde_json::json;
use wingtap::analysis::{
    associate, build_series, decrypt_capture, derive_bit_table, dominant_length, length_histogram, series_csv,
    CorrelationReport,
};
use wingtap::attack::{
    handshake_segment, hijack, prepare_target, replay, scan_order, AttackLink, DirectLink, ForgedFrames, FrameFactory,
    HijackPlan, LinkScanner, RelayLink, RelayServer, TakeoverMode, TargetConfig, DEFAULT_ATTACKER_IP,
    DEFAULT_ATTACKER_MAC,
};
use wingtap::captureio::{
    export_pcap, read_capture, read_observations, write_capture, write_observations, CaptureRecord,
};
use wingtap::framing::{CommandId, MovementField};
use wingtap::linkproto::{detect_beacon_channel, is_drone_beacon, LinkConfig, MacAddr};
use wingtap::simworld::{run_scenario, ScenarioScript, TICK_US};
use wingtap::wepcrypt::{crack_session, WepKey};

use crate::config::AppConfig;
use crate::{Cli, Command, ForgeKind, ServeArgs};

struct Ctx {
    seed: Option<u64>,
    json: bool,
    cfg: AppConfig,
}

impl Ctx {
    fn script(&self, path: Option<&Path>) -> anyhow::Result<ScenarioScript> {
        let mut s = match path {
            Some(p) => ScenarioScript::load(p).with_context(|| format!("loading {}", p.display()))?,
            None => ScenarioScript::reference(),
        };
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        if let Some(link) = &self.cfg.link {
            s.link = link.clone();
        }
        Ok(s)
    }

    /// Link settings for a live target: config file, then script, then the
    /// bundled reference session.
    fn link(&self, script: Option<&Path>) -> anyhow::Result<LinkConfig> {
        if let Some(l) = &self.cfg.link {
            return Ok(l.clone());
        }
        Ok(self.script(script)?.session_link())
    }

    /// Prints a report as pretty JSON and optionally saves it.
    fn report<T: Serialize>(&self, value: &T, out: Option<&Path>) -> anyhow::Result<()> {
        let text = serde_json::to_string_pretty(value)?;
        if let Some(p) = out {
            std::fs::write(p, format!("{text}\n")).with_context(|| format!("writing {}", p.display()))?;
        }
        say(text);
        Ok(())
    }

    /// Plain text normally, a JSON object under `--json`.
    fn emit(&self, plain: impl std::fmt::Display, value: serde_json::Value) {
        if self.json {
            say(value);
        } else {
            say(plain);
        }
    }
}

/// Writes a line to stdout; a closed pipe (e.g. `| head`) ends the process quietly.
fn say(line: impl std::fmt::Display) {
    let mut out = std::io::stdout().lock();
    if let Err(e) = writeln!(out, "{line}").and_then(|()| out.flush()) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
    }
}

#[derive(Serialize)]
struct FilterReport {
    total: usize,
    dominant: Option<usize>,
    /// (length, count), most frequent first
    ranked: Vec<(usize, usize)>,
    counts: std::collections::BTreeMap<usize, usize>,
}

fn load_capture(p: &Path) -> anyhow::Result<Vec<CaptureRecord>> {
    read_capture(p).with_context(|| format!("reading capture {}", p.display()))
}

fn parse_key(s: &str) -> anyhow::Result<WepKey> {
    s.parse().map_err(|e| anyhow!("bad key {s:?}: {e}"))
}

fn parse_mac(s: &str) -> anyhow::Result<MacAddr> {
    s.parse().map_err(|e| anyhow!("bad MAC {s:?}: {e}"))
}

fn templates(path: Option<&Path>) -> anyhow::Result<ForgedFrames> {
    match path {
        Some(p) => Ok(ForgedFrames::from_capture(&load_capture(p)?)?),
        None => Ok(ForgedFrames::reference()),
    }
}

pub fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let ctx = Ctx {
        seed: cli.seed,
        json: cli.json,
        cfg: AppConfig::load(cli.config.as_deref())?,
    };
    match cli.command {
        Command::Simulate {
            script,
            out,
            obs,
            pcap,
            serve,
            serve_args,
        } => match serve {
            Some(addr) => serve_target(&ctx, addr, script.as_deref(), &serve_args),
            None => simulate(&ctx, script.as_deref(), out, obs, pcap),
        },
        Command::Scan {
            capture,
            relay,
            dwell_ms,
        } => scan(&ctx, capture.as_deref(), relay, dwell_ms),
        Command::CrackWep { capture } => {
            let cap = load_capture(&capture)?;
            let report = crack_session(&cap, ctx.cfg.crack)?;
            ctx.emit(report.key.to_hex(), serde_json::to_value(&report)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Decrypt { capture, key, out } => {
            let key = parse_key(&key)?;
            let (dec, stats) = decrypt_capture(&load_capture(&capture)?, &key);
            write_capture(&out, &dec)?;
            ctx.emit(
                format!(
                    "decrypted {} frames, {} passed through, {} dropped",
                    stats.decrypted, stats.passed_through, stats.dropped
                ),
                serde_json::to_value(stats)?,
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Filter { capture, out } => {
            let h = length_histogram(&load_capture(&capture)?);
            let v = FilterReport {
                total: h.total(),
                dominant: dominant_length(&h).ok(),
                ranked: h.ranked(),
                counts: h.counts.clone(),
            };
            ctx.report(&v, out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Correlate {
            capture,
            obs,
            length,
            key,
            csv,
            out,
        } => {
            let mut cap = load_capture(&capture)?;
            if let Some(k) = key {
                cap = decrypt_capture(&cap, &parse_key(&k)?).0;
            }
            let observations = read_observations(&obs)?;
            let length = match length {
                Some(l) => l,
                None => dominant_length(&length_histogram(&cap))?,
            };
            let series = build_series(&cap, length, &ctx.cfg.series)?;
            if let Some(p) = csv {
                std::fs::write(&p, series_csv(&series)).with_context(|| format!("writing {}", p.display()))?;
            }
            let report = associate(&series, &observations, &ctx.cfg.association)?;
            ctx.report(&report, out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Bitdiff { report, idle, out } => {
            let text = std::fs::read_to_string(&report).with_context(|| format!("reading {}", report.display()))?;
            let r: CorrelationReport = serde_json::from_str(&text).context("parsing correlation report")?;
            let idle = idle
                .map(|h| MovementField::from_hex(&h).map_err(|e| anyhow!("bad idle payload: {e}")))
                .transpose()?;
            ctx.report(&derive_bit_table(&r, idle)?, out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Forge {
            key,
            kind,
            command,
            templates: tpl,
            attacker_mac,
            count,
        } => {
            let link = ctx.link(None)?;
            let mac = attacker_mac
                .as_deref()
                .map(parse_mac)
                .transpose()?
                .unwrap_or(DEFAULT_ATTACKER_MAC);
            let mut f = FrameFactory::new(
                parse_key(&key)?,
                templates(tpl.as_deref())?,
                mac,
                DEFAULT_ATTACKER_IP,
                link.drone_ip,
            );
            f.set_bssid(link.bssid());
            f.set_drone(link.drone_mac);
            let cmd: CommandId = command.parse().map_err(|e| anyhow!("{e}"))?;
            let frames: Vec<String> = (0..count)
                .map(|i| {
                    hex::encode(match kind {
                        ForgeKind::Control => f.command(cmd),
                        ForgeKind::Initiator => f.initiator(),
                        ForgeKind::Arp => f.arp_request(),
                        ForgeKind::Beacon => f.beacon(
                            i as u64 * link.beacon_interval_ms * 1000,
                            link.beacon_interval_ms,
                            link.channel,
                        ),
                    })
                })
                .collect();
            ctx.emit(frames.join("\n"), json!(frames));
            Ok(ExitCode::SUCCESS)
        }
        Command::Replay {
            capture,
            src,
            span_s,
            relay,
            script,
        } => replay_cmd(&ctx, &capture, src.as_deref(), span_s, relay, script.as_deref()),
        Command::Hijack {
            plan,
            channel,
            relay,
            key,
            templates: tpl,
            clone_mac,
            mode,
            loss,
            script,
            out,
        } => {
            let mut plan = match plan {
                Some(p) => HijackPlan::load(&p)?,
                None => HijackPlan::all10(),
            };
            if let Some(m) = mode {
                plan.mode = m.into();
            }
            let channel = match channel.as_str() {
                "auto" => None,
                c => Some(
                    c.parse::<u8>()
                        .map_err(|_| anyhow!("--channel takes a number or \"auto\""))?,
                ),
            };
            let link = ctx.link(script.as_deref())?;
            let key = match key {
                Some(k) => parse_key(&k)?,
                None => link.wep_key.clone(),
            };
            let (mac, ip) = if clone_mac {
                (link.rc_mac, link.rc_ip)
            } else {
                (DEFAULT_ATTACKER_MAC, DEFAULT_ATTACKER_IP)
            };
            let factory = FrameFactory::new(key, templates(tpl.as_deref())?, mac, ip, link.drone_ip);
            let report = match relay {
                Some(addr) => {
                    let mut l = RelayLink::connect(addr).with_context(|| format!("connecting to relay {addr}"))?;
                    hijack(&mut l, factory, &plan, channel, &ctx.cfg.hijack)?
                }
                None => {
                    let mut tc = TargetConfig::new(ctx.seed.unwrap_or(0), plan.mode);
                    tc.link = link.clone();
                    tc.loss = loss;
                    let mut world = prepare_target(&tc)?;
                    let mut l = DirectLink::new(&mut world, channel.unwrap_or(link.channel))?;
                    hijack(&mut l, factory, &plan, channel, &ctx.cfg.hijack)?
                }
            };
            ctx.report(&report, out.as_deref())?;
            if let Err(e) = report.check() {
                eprintln!("error: {e}");
                return Ok(ExitCode::FAILURE);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Relay {
            listen,
            script,
            serve_args,
        } => serve_target(&ctx, listen, script.as_deref(), &serve_args),
    }
}

fn simulate(
    ctx: &Ctx,
    script: Option<&Path>,
    out: Option<PathBuf>,
    obs: Option<PathBuf>,
    pcap: Option<PathBuf>,
) -> anyhow::Result<ExitCode> {
    let s = ctx.script(script)?;
    let o = run_scenario(&s)?;
    if let Some(p) = &out {
        write_capture(p, &o.capture)?;
    }
    if let Some(p) = &obs {
        write_observations(p, &o.observations)?;
    }
    if let Some(p) = &pcap {
        export_pcap(&o.capture, p)?;
    }
    ctx.emit(
        format!(
            "channel {}: {} frames captured, {} observations",
            o.channel,
            o.capture.len(),
            o.observations.len()
        ),
        json!({
            "channel": o.channel,
            "records": o.capture.len(),
            "observations": o.observations,
            "final": o.final_body,
        }),
    );
    Ok(ExitCode::SUCCESS)
}

fn serve_target(ctx: &Ctx, addr: SocketAddr, script: Option<&Path>, args: &ServeArgs) -> anyhow::Result<ExitCode> {
    let mode: TakeoverMode = args.mode.into();
    let mut tc = TargetConfig::new(ctx.seed.unwrap_or(0), mode);
    tc.link = ctx.link(script)?;
    let world = prepare_target(&tc)?;
    let mut server = RelayServer::bind(addr).with_context(|| format!("binding {addr}"))?;
    if let Some(n) = args.max_clients {
        server = server.max_clients(n);
    }
    let local = server.local_addr()?;
    ctx.emit(
        format!("listening on {local}"),
        json!({ "listening": local.to_string() }),
    );
    let (world, stats) = server.serve(world)?;
    ctx.emit(
        format!(
            "served {} clients, {} frames injected over {} ticks",
            stats.clients, stats.injected, stats.ticks
        ),
        json!({ "stats": stats, "final": world.body() }),
    );
    Ok(ExitCode::SUCCESS)
}

fn scan(ctx: &Ctx, capture: Option<&Path>, relay: Option<SocketAddr>, dwell_ms: u64) -> anyhow::Result<ExitCode> {
    let channel = match (capture, relay) {
        (Some(p), _) => load_capture(p)?
            .iter()
            .find(|r| !r.is_decrypted() && is_drone_beacon(&r.frame))
            .map(|r| r.channel)
            .ok_or_else(|| anyhow!("no drone beacon in {}", p.display()))?,
        (None, Some(addr)) => {
            let mut link = RelayLink::connect(addr).with_context(|| format!("connecting to relay {addr}"))?;
            let mut scanner = LinkScanner {
                link: &mut link,
                error: None,
            };
            let found = detect_beacon_channel(&mut scanner, &scan_order(), dwell_ms);
            if let Some(e) = scanner.error {
                return Err(e.into());
            }
            found?
        }
        (None, None) => bail!("scan needs --capture or --relay"),
    };
    ctx.emit(channel, json!({ "channel": channel }));
    Ok(ExitCode::SUCCESS)
}

fn replay_cmd(
    ctx: &Ctx,
    capture: &Path,
    src: Option<&str>,
    span_s: f64,
    relay: Option<SocketAddr>,
    script: Option<&Path>,
) -> anyhow::Result<ExitCode> {
    let link = ctx.link(script)?;
    let src = src.map(parse_mac).transpose()?.unwrap_or(link.rc_mac);
    if !(span_s.is_finite() && span_s > 0.0) {
        bail!("--span-s must be positive");
    }
    let span_us = (span_s * 1e6) as u64;
    let segment = handshake_segment(&load_capture(capture)?, src, span_us)?;
    match relay {
        Some(addr) => {
            let mut l = RelayLink::connect(addr).with_context(|| format!("connecting to relay {addr}"))?;
            let t0 = segment[0].ts_us;
            let ticks = (segment.last().expect("nonempty").ts_us - t0) / TICK_US + 1;
            let mut it = segment.iter().peekable();
            for k in 0..ticks {
                let mut frames = Vec::new();
                while let Some(r) = it.next_if(|r| (r.ts_us - t0) / TICK_US == k) {
                    frames.push(r.frame.clone());
                }
                l.tick(frames)?;
            }
            ctx.report(&json!({ "sent": segment.len(), "ticks": ticks }), None)?;
        }
        None => {
            let mut tc = TargetConfig::new(ctx.seed.unwrap_or(0), TakeoverMode::AfterRcDisconnect);
            tc.link = link.clone();
            let mut world = prepare_target(&tc)?;
            let radio = world.add_radio(link.channel)?;
            let start = world.now_us();
            let result = replay(&mut world, radio, &segment, start)?;
            let mut connected_after_us = None;
            while world.now_us() <= result.last_us {
                world.run_tick();
                if connected_after_us.is_none() && world.drone_link().is_connected() {
                    connected_after_us = Some(world.now_us() - start);
                }
            }
            ctx.report(
                &json!({
                    "sent": result.sent,
                    "channel": result.channel,
                    "connected_after_us": connected_after_us,
                    "connected_at_end": world.drone_link().is_connected(),
                }),
                None,
            )?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
