//! How the attacker reaches the air: a radio in the simulated world, or a
//! remote injector behind the TCP relay. Both advance in whole ticks.

use super::AttackError;
use crate::linkproto::ChannelScanner;
use crate::simworld::{NodeId, World, TICK_US};

pub trait AttackLink {
    fn tune(&mut self, channel: u8) -> Result<(), AttackError>;

    /// Queues `frames` for the next tick, lets the tick run, and returns
    /// every frame the attacker radio heard meanwhile.
    fn tick(&mut self, frames: Vec<Vec<u8>>) -> Result<Vec<Vec<u8>>, AttackError>;
}

/// An attacker radio inside a world the caller owns.
pub struct DirectLink<'a> {
    pub world: &'a mut World,
    pub radio: NodeId,
}

impl<'a> DirectLink<'a> {
    pub fn new(world: &'a mut World, channel: u8) -> Result<Self, AttackError> {
        let radio = world.add_radio(channel)?;
        Ok(DirectLink { world, radio })
    }
}

impl AttackLink for DirectLink<'_> {
    fn tune(&mut self, channel: u8) -> Result<(), AttackError> {
        Ok(self.world.tune_radio(self.radio, channel)?)
    }

    fn tick(&mut self, frames: Vec<Vec<u8>>) -> Result<Vec<Vec<u8>>, AttackError> {
        self.world.inject(self.radio, frames);
        self.world.run_tick();
        Ok(self.world.take_heard(self.radio).into_iter().map(|(_, f)| f).collect())
    }
}

/// Channel sweep over any attack link, one dwell per channel.
pub struct LinkScanner<'a, L: AttackLink + ?Sized> {
    pub link: &'a mut L,
    pub error: Option<AttackError>,
}

impl<L: AttackLink + ?Sized> ChannelScanner for LinkScanner<'_, L> {
    fn listen(&mut self, channel: u8, dwell_ms: u64) -> Vec<Vec<u8>> {
        if self.error.is_some() {
            return Vec::new();
        }
        if let Err(e) = self.link.tune(channel) {
            self.error = Some(e);
            return Vec::new();
        }
        let ticks = (dwell_ms * 1000).div_ceil(TICK_US);
        let mut heard = Vec::new();
        for _ in 0..ticks {
            match self.link.tick(Vec::new()) {
                Ok(f) => heard.extend(f),
                Err(e) => {
                    self.error = Some(e);
                    break;
                }
            }
        }
        heard
    }
}
