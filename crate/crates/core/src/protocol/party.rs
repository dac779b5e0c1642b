use std::collections::VecDeque;

use rand::seq::{index, SliceRandom};
use rand_chacha::ChaCha8Rng;

use crate::state::sample_projective_test;

use super::arena::{Holder, ParticleArena, ParticleId};
use super::message::{AbortReason, Seat, WireMessage};
use super::profile::StateProfile;
use super::RoundConfig;

/// One endpoint of the protocol, seen from inside.
#[derive(Debug, Clone)]
pub struct Party {
    pub(crate) seat: Seat,
    /// Who physically holds this seat's particles; Eve when impersonating.
    pub(crate) holder: Holder,
    pub(crate) honest: bool,
    /// Active catalyst halves in slot order.
    pub(crate) key: Vec<ParticleId>,
    pub(crate) reserves: VecDeque<Vec<ParticleId>>,
    /// This party's half of challenge pair `i`, at position `i - 1`.
    pub(crate) challenges: Vec<Option<ParticleId>>,
    pub(crate) converted: Vec<bool>,
    /// Indices the peer asked this party to return, in arrival order.
    pub(crate) requests_received: Vec<u32>,
    /// Indices this party tested as verifier.
    pub(crate) tested: Vec<u32>,
    pub(crate) outstanding: Option<u32>,
    pub(crate) aborted: Option<AbortReason>,
    pub(crate) selection_rng: ChaCha8Rng,
    pub(crate) relabel_rng: ChaCha8Rng,
}

pub(crate) struct Context<'a> {
    pub arena: &'a mut ParticleArena,
    pub profile: &'a StateProfile,
    pub config: &'a RoundConfig,
    pub nature: &'a mut ChaCha8Rng,
}

impl Party {
    pub(crate) fn new(seat: Seat, selection_rng: ChaCha8Rng, relabel_rng: ChaCha8Rng) -> Self {
        Party {
            seat,
            holder: seat.holder(),
            honest: true,
            key: Vec::new(),
            reserves: VecDeque::new(),
            challenges: Vec::new(),
            converted: Vec::new(),
            requests_received: Vec::new(),
            tested: Vec::new(),
            outstanding: None,
            aborted: None,
            selection_rng,
            relabel_rng,
        }
    }

    pub fn seat(&self) -> Seat {
        self.seat
    }

    pub fn is_honest(&self) -> bool {
        self.honest
    }

    pub fn key(&self) -> &[ParticleId] {
        &self.key
    }

    pub fn reserve_sets(&self) -> usize {
        self.reserves.len()
    }

    pub fn aborted(&self) -> Option<AbortReason> {
        self.aborted
    }

    pub fn requests_received(&self) -> &[u32] {
        &self.requests_received
    }

    pub fn tested(&self) -> &[u32] {
        &self.tested
    }

    pub fn challenge_half(&self, index: u32) -> Option<ParticleId> {
        let slot = (index as usize).checked_sub(1)?;
        self.challenges.get(slot).copied().flatten()
    }

    pub(crate) fn is_verifier(&self, index: u32) -> bool {
        Seat::verifier_of(index) == self.seat
    }

    /// Every particle this party currently references.
    pub(crate) fn referenced(&self) -> impl Iterator<Item = ParticleId> + '_ {
        self.key
            .iter()
            .chain(self.reserves.iter().flatten())
            .copied()
            .chain(self.challenges.iter().flatten().copied())
    }

    pub(crate) fn begin_round(&mut self, k: u32) {
        let slots = 2 * k as usize;
        self.challenges = vec![None; slots];
        self.converted = vec![false; slots];
        self.requests_received.clear();
        self.tested.clear();
        self.outstanding = None;
    }

    /// Chooses `k_prime` of this party's verifier indices uniformly without
    /// replacement, in random order.
    pub(crate) fn select_tests(&mut self, k: u32, k_prime: u32) -> Vec<u32> {
        let offset = match self.seat {
            Seat::Bob => 1,
            Seat::Alice => 2,
        };
        let mut picks: Vec<u32> = index::sample(&mut self.selection_rng, k as usize, k_prime as usize)
            .into_iter()
            .map(|j| 2 * j as u32 + offset)
            .collect();
        picks.shuffle(&mut self.selection_rng);
        picks
    }

    pub(crate) fn abort(&mut self, reason: AbortReason) -> Vec<WireMessage> {
        if !self.honest {
            return Vec::new();
        }
        self.aborted = Some(reason);
        self.outstanding = None;
        vec![WireMessage::Abort { reason }]
    }

    /// Handles one delivered message and returns the replies to send.
    pub(crate) fn receive(&mut self, msg: WireMessage, ctx: &mut Context<'_>) -> Vec<WireMessage> {
        if self.aborted.is_some() {
            if let Some(p) = msg.particle() {
                ctx.arena.discard(p);
            }
            return Vec::new();
        }
        if let Some(p) = msg.particle() {
            ctx.arena.set_holder(p, self.holder);
        }
        if let Some(index) = msg.index() {
            if index == 0 || index > 2 * ctx.config.k {
                if let Some(p) = msg.particle() {
                    ctx.arena.discard(p);
                }
                return self.abort(AbortReason::WrongRole { index });
            }
        }
        match msg {
            WireMessage::Challenge { index, particle } => {
                let slot = index as usize - 1;
                if self.is_verifier(index) || self.challenges[slot].is_some() {
                    ctx.arena.discard(particle);
                    return self.abort(AbortReason::WrongRole { index });
                }
                self.challenges[slot] = Some(particle);
                Vec::new()
            }
            WireMessage::CatalysisClassical { index, .. } => {
                if self.is_verifier(index) {
                    return self.abort(AbortReason::WrongRole { index });
                }
                if let Some(flag) = self.converted.get_mut(index as usize - 1) {
                    *flag = true;
                }
                Vec::new()
            }
            WireMessage::ResponseRequest { index } => self.respond(index, ctx),
            WireMessage::Response { index, particle } => self.check_response(index, particle, ctx),
            WireMessage::Abort { .. } => {
                if self.honest {
                    self.aborted = Some(AbortReason::PeerAborted);
                }
                Vec::new()
            }
        }
    }

    fn respond(&mut self, index: u32, ctx: &mut Context<'_>) -> Vec<WireMessage> {
        if self.honest {
            if self.is_verifier(index) {
                return self.abort(AbortReason::WrongRole { index });
            }
            if self.requests_received.contains(&index) {
                return self.abort(AbortReason::DuplicateRequest { index });
            }
        }
        self.requests_received.push(index);
        if self.honest && self.requests_received.len() > ctx.config.k_prime as usize {
            return self.abort(AbortReason::RequestFlood);
        }
        match self.challenges.get_mut(index as usize - 1).and_then(Option::take) {
            Some(particle) => {
                ctx.arena.set_holder(particle, Holder::Channel);
                vec![WireMessage::Response { index, particle }]
            }
            None => self.abort(AbortReason::MissingParticle { index }),
        }
    }

    fn check_response(&mut self, index: u32, received: ParticleId, ctx: &mut Context<'_>) -> Vec<WireMessage> {
        if self.outstanding != Some(index) {
            ctx.arena.discard(received);
            return self.abort(AbortReason::UnexpectedMessage);
        }
        self.outstanding = None;
        let Some(own) = self.challenges[index as usize - 1].take() else {
            ctx.arena.discard(received);
            return self.abort(AbortReason::MissingParticle { index });
        };
        self.tested.push(index);
        if !self.honest {
            // an impostor keeps whatever it is sent and measures nothing
            return Vec::new();
        }
        let p = ctx
            .arena
            .test_pass_probability(own, received, ctx.profile)
            .clamp(0.0, 1.0);
        let passed = sample_projective_test(p, ctx.nature).expect("clamped probability");
        ctx.arena.consume_tested(own, received, passed);
        if passed {
            Vec::new()
        } else {
            self.abort(AbortReason::TestFailed { index })
        }
    }

    /// Moves every particle this party still holds from the round and from
    /// the active key set to the discard pile.
    pub(crate) fn discard_active(&mut self, arena: &mut ParticleArena) {
        for p in self
            .key
            .drain(..)
            .chain(self.challenges.iter_mut().filter_map(Option::take))
        {
            arena.transfer(p, self.holder, Holder::Discarded);
        }
    }

    /// Step 5 bookkeeping after a successful round: drops catalysts and
    /// challenge halves of every index that was tested (from this party's
    /// point of view), merges the rest into the key and relabels it.
    pub(crate) fn merge_survivors(&mut self, k: u32, arena: &mut ParticleArena) {
        let used = (2 * k as usize).min(self.key.len());
        let mut tested = vec![false; 2 * k as usize];
        for &i in self.tested.iter().chain(&self.requests_received) {
            if let Some(flag) = tested.get_mut(i as usize - 1) {
                *flag = true;
            }
        }
        let unused = self.key.split_off(used);
        let mut merged = Vec::with_capacity(unused.len() + 2 * used);
        for (slot, p) in self.key.drain(..).enumerate() {
            if tested[slot] {
                arena.transfer(p, self.holder, Holder::Discarded);
            } else {
                merged.push(p);
            }
        }
        for (slot, half) in self.challenges.iter_mut().enumerate() {
            if let Some(p) = half.take() {
                if tested[slot] {
                    arena.transfer(p, self.holder, Holder::Discarded);
                } else {
                    merged.push(p);
                }
            }
        }
        merged.extend(unused);
        merged.shuffle(&mut self.relabel_rng);
        self.key = merged;
    }

    /// Falls back to the next reserve key set; false if none is left.
    pub(crate) fn activate_reserve(&mut self) -> bool {
        match self.reserves.pop_front() {
            Some(set) => {
                self.key = set;
                true
            }
            None => false,
        }
    }
}
