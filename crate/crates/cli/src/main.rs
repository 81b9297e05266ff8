//! `wingtap`: command-line front end for the drone-link attack toolchain.
//!
//! Each subcommand is one step of the attack and couples to the others only
//! through files: simulate → crack-wep → decrypt → filter → correlate →
//! bitdiff → forge/hijack.

mod commands;
mod config;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use wingtap::attack::TakeoverMode;

#[derive(Debug, Parser)]
#[command(
    name = "wingtap",
    version,
    about = "Simulate, sniff, crack and hijack an Enhanced Wi-Fi drone link"
)]
pub struct Cli {
    /// Overrides the seed of scripts and live targets.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML file with link, analysis, crack and hijack settings.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Machine-readable output on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Coexist,
    AfterRcDisconnect,
}

impl From<Mode> for TakeoverMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Coexist => TakeoverMode::CoexistWithRc,
            Mode::AfterRcDisconnect => TakeoverMode::AfterRcDisconnect,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ForgeKind {
    Control,
    Initiator,
    Arp,
    Beacon,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Drone state the attacker finds.
    #[arg(long, value_enum, default_value = "after-rc-disconnect")]
    pub mode: Mode,
    /// Exit after this many relay clients have disconnected.
    #[arg(long)]
    pub max_clients: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scripted session and record it, or serve a live target over the relay.
    Simulate {
        /// Scenario JSON; the bundled reference session when omitted.
        #[arg(long)]
        script: Option<PathBuf>,
        /// Capture file to write.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Observation log (JSON lines) to write.
        #[arg(long)]
        obs: Option<PathBuf>,
        /// Also export the capture as pcap.
        #[arg(long)]
        pcap: Option<PathBuf>,
        /// Instead of a scripted run, serve a live drone on this address.
        #[arg(long)]
        serve: Option<SocketAddr>,
        #[command(flatten)]
        serve_args: ServeArgs,
    },
    /// Find the drone's channel from its beacons.
    Scan {
        /// Look for beacons in a capture file.
        #[arg(long, conflicts_with = "relay")]
        capture: Option<PathBuf>,
        /// Sweep channels through a relay.
        #[arg(long)]
        relay: Option<SocketAddr>,
        #[arg(long, default_value_t = 200)]
        dwell_ms: u64,
    },
    /// Recover the WEP key from a capture.
    CrackWep { capture: PathBuf },
    /// Decrypt a capture into a new, flagged capture.
    Decrypt {
        capture: PathBuf,
        #[arg(long)]
        key: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Histogram of data-frame lengths.
    Filter {
        capture: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Associate movement payloads with observed maneuvers.
    Correlate {
        /// Decrypted capture.
        capture: PathBuf,
        #[arg(long)]
        obs: PathBuf,
        /// Payload length to analyse; the dominant length when omitted.
        #[arg(long)]
        length: Option<usize>,
        /// Decrypt on the fly with this key.
        #[arg(long)]
        key: Option<String>,
        /// Write the cumulative series as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Derive the command bit table from a correlation report.
    Bitdiff {
        report: PathBuf,
        /// Idle payload (hex); taken from the report when omitted.
        #[arg(long)]
        idle: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print forged frames as hex.
    Forge {
        #[arg(long)]
        key: String,
        #[arg(long, value_enum, default_value = "control")]
        kind: ForgeKind,
        /// Command for control frames.
        #[arg(long, default_value = "Idle")]
        command: String,
        /// Decrypted capture to lift templates from; bundled templates otherwise.
        #[arg(long)]
        templates: Option<PathBuf>,
        #[arg(long)]
        attacker_mac: Option<String>,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
    /// Replay a recorded handshake and idle stream.
    Replay {
        capture: PathBuf,
        /// Sender whose frames are replayed; the controller's MAC by default.
        #[arg(long)]
        src: Option<String>,
        #[arg(long, default_value_t = 3.0)]
        span_s: f64,
        /// Inject through a relay instead of a local simulated drone.
        #[arg(long)]
        relay: Option<SocketAddr>,
        /// Link settings of the local target (scenario JSON).
        #[arg(long)]
        script: Option<PathBuf>,
    },
    /// Take over the drone and fly a plan.
    Hijack {
        /// Plan JSON; the bundled ten-command plan when omitted.
        #[arg(long)]
        plan: Option<PathBuf>,
        /// Channel number or "auto" to sweep.
        #[arg(long, default_value = "auto")]
        channel: String,
        /// Drive a remote drone through a relay.
        #[arg(long)]
        relay: Option<SocketAddr>,
        /// WEP key (hex); the link config's key when omitted.
        #[arg(long)]
        key: Option<String>,
        #[arg(long)]
        templates: Option<PathBuf>,
        /// Use the controller's MAC address instead of a distinct one.
        #[arg(long)]
        clone_mac: bool,
        /// Overrides the plan's takeover mode for the local target.
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        /// Radio loss on the local target.
        #[arg(long, default_value_t = 0.0)]
        loss: f64,
        #[arg(long)]
        script: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve a simulated drone's medium to remote injectors.
    Relay {
        #[arg(long, default_value = "127.0.0.1:7700")]
        listen: SocketAddr,
        #[arg(long)]
        script: Option<PathBuf>,
        #[command(flatten)]
        serve_args: ServeArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
