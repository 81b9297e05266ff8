//! A simulated drone in the state an attacker finds it: paired with its
//! controller, or abandoned after the controller went dark.

use super::forge::{forge_session, ForgedFrames, DEFAULT_ATTACKER_MAC};
use super::hijack::{hijack, HijackConfig, HijackPlan, HijackReport, TakeoverMode};
use super::link::DirectLink;
use super::AttackError;
use crate::linkproto::LinkConfig;
use crate::simworld::{secs_to_us, World, WorldConfig, TICK_US};

#[derive(Debug, Clone, PartialEq)]
pub struct TargetConfig {
    pub seed: u64,
    pub link: LinkConfig,
    pub mode: TakeoverMode,
    /// Loss on every radio path, attacker's included.
    pub loss: f64,
    /// When the controller pairs and, for `AfterRcDisconnect`, is switched off.
    pub rc_off_at_s: f64,
}

impl TargetConfig {
    pub fn new(seed: u64, mode: TakeoverMode) -> Self {
        TargetConfig {
            seed,
            link: LinkConfig::default(),
            mode,
            loss: 0.0,
            rc_off_at_s: 1.0,
        }
    }
}

/// Runs the world until the attacker would show up.
pub fn prepare_target(cfg: &TargetConfig) -> Result<World, AttackError> {
    let mut wc = WorldConfig::new(cfg.seed, cfg.link.clone());
    wc.link_loss = cfg.loss;
    let mut world = World::new(wc)?;
    world.run_until(secs_to_us(cfg.rc_off_at_s));
    if cfg.mode == TakeoverMode::AfterRcDisconnect {
        world.power_off_rc();
        // wait for the drone to give up on it, then a little longer
        let limit = world.now_us() + 2 * cfg.link.peer_timeout_ms * 1000;
        while world.drone_link().is_connected() && world.now_us() < limit {
            world.run_tick();
        }
        world.run_until(world.now_us() + 10 * TICK_US);
    }
    Ok(world)
}

/// Hijack through an attacker radio placed directly in `world`, using the
/// bundled packet templates and the world's key (as if already cracked).
pub fn hijack_world(
    world: &mut World,
    plan: &HijackPlan,
    channel: Option<u8>,
    cfg: &HijackConfig,
) -> Result<HijackReport, AttackError> {
    let key = world.link().wep_key.clone();
    let start = channel.unwrap_or(world.link().channel);
    let factory = forge_session(key, ForgedFrames::reference(), DEFAULT_ATTACKER_MAC);
    let mut link = DirectLink::new(world, start)?;
    hijack(&mut link, factory, plan, channel, cfg)
}
