//! The channel between Alice and Bob and the hook an adversary uses to sit on
//! it.

use rand_chacha::ChaCha8Rng;

use super::arena::ParticleArena;
use super::message::{Actor, Routed, Step, TranscriptRecord};
use super::profile::StateProfile;
use super::{RoundConfig, RoundOutcome};

/// Points in a round where an interposer may inject messages of its own.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    RoundStart,
    ChallengesDelivered,
    TestingStarted,
    TestingFinished,
}

/// What an interposer can see and touch while a message is in flight.
pub struct ChannelContext<'a> {
    pub arena: &'a mut ParticleArena,
    pub profile: &'a StateProfile,
    pub config: &'a RoundConfig,
    pub round: u32,
    pub(crate) log: &'a mut Option<Vec<TranscriptRecord>>,
    pub(crate) step: Step,
}

impl ChannelContext<'_> {
    /// Appends an attack event to the session transcript.
    pub fn log_event(&mut self, index: Option<u32>, note: impl Into<String>) {
        if let Some(log) = self.log.as_mut() {
            log.push(TranscriptRecord {
                round: self.round,
                step: self.step,
                sender: Actor::Eve,
                variant: "Attack",
                index,
                note: Some(note.into()),
            });
        }
    }
}

/// Key material Eve shares with each legitimate party at the end of a round.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SharedPairs {
    pub with_alice: u32,
    pub with_bob: u32,
}

/// Full control over the classical and quantum channel.
pub trait Interposer {
    /// Decides what is delivered in place of `routed`. Returned messages whose
    /// `from` is [`Actor::Eve`] were injected.
    fn interpose(&mut self, routed: Routed, ctx: &mut ChannelContext<'_>) -> Vec<Routed>;

    fn on_phase(&mut self, _phase: Phase, _ctx: &mut ChannelContext<'_>) -> Vec<Routed> {
        Vec::new()
    }

    fn on_round_end(&mut self, _outcome: &RoundOutcome, _shared: SharedPairs) {}
}

/// Delivers everything unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct Honest;

impl Interposer for Honest {
    fn interpose(&mut self, routed: Routed, _ctx: &mut ChannelContext<'_>) -> Vec<Routed> {
        vec![routed]
    }
}

/// Independent stream for an adversary acting in a session seeded with `seed`.
pub fn adversary_rng(seed: u64) -> ChaCha8Rng {
    super::stream(seed, super::STREAM_ADVERSARY)
}
