//! Authentication rounds between Alice and Bob.
//!
//! A round runs in five steps:
//!
//! 1. each party prepares `K` challenge pairs in the challenge state and sends
//!    one half to the other (Bob verifies odd indices, Alice even ones);
//! 2. every challenge pair is converted to the catalyst state with the help of
//!    the key pair in the same slot; only the verifier measures, and the
//!    prover follows the verifier's classical messages;
//! 3. each verifier picks `K'` of its indices, asks for the prover's half and
//!    projects the pair onto the catalyst state, Bob and Alice taking turns;
//! 4. a failed test, an unanswered message or more than `K'` requests aborts;
//! 5. on success the untested catalysts and converted challenges become the
//!    new key, relabelled by a permutation both parties derive from shared
//!    seed material. On abort the active key set is discarded.
//!
//! Conversions are modelled on Schmidt coefficients, not on the underlying
//! measurement sequence: an assisted conversion yields the catalyst state
//! exactly, an unassisted one yields the best approximation, whose test pass
//! probability is `p0`.

mod arena;
mod channel;
mod message;
mod party;
mod profile;

use std::collections::{HashSet, VecDeque};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::schmidt::SchmidtVector;

pub use arena::{Holder, PairState, ParticleArena, ParticleId};
pub use channel::{adversary_rng, ChannelContext, Honest, Interposer, Phase, SharedPairs};
pub use message::{write_transcript, AbortReason, Actor, Routed, Seat, Step, TranscriptRecord, WireMessage};
pub use party::Party;
pub use profile::StateProfile;

pub(crate) const STREAM_ALICE: u64 = 1;
pub(crate) const STREAM_BOB: u64 = 2;
pub(crate) const STREAM_NATURE: u64 = 3;
pub(crate) const STREAM_RELABEL: u64 = 4;
pub(crate) const STREAM_ADVERSARY: u64 = 5;

pub(crate) fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("invalid round configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid state choice: {0}")]
    States(String),
    #[error("session terminated: no key set left")]
    Terminated,
}

/// Parameters of every round in a session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundConfig {
    /// Challenge pairs prepared by each party per round.
    pub k: u32,
    /// Pairs each verifier tests per round.
    pub k_prime: u32,
    /// Seed shared with the initial key material.
    pub seed: u64,
    /// Allows `k_prime == 0`, which offers no security.
    #[serde(default)]
    pub test_mode: bool,
}

impl RoundConfig {
    pub fn new(k: u32, k_prime: u32, seed: u64) -> Self {
        RoundConfig {
            k,
            k_prime,
            seed,
            test_mode: false,
        }
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.k == 0 {
            return Err(ProtocolError::InvalidConfig("K must be positive".into()));
        }
        if 2 * u64::from(self.k_prime) >= u64::from(self.k) && !(self.k_prime == 0 && self.test_mode) {
            return Err(ProtocolError::InvalidConfig(format!(
                "K' = {} must be smaller than K/2 = {}",
                self.k_prime,
                f64::from(self.k) / 2.0
            )));
        }
        if self.k_prime == 0 && !self.test_mode {
            return Err(ProtocolError::InvalidConfig(
                "K' = 0 is only allowed in test mode".into(),
            ));
        }
        Ok(())
    }

    /// Pairs gained by a successful round: `2K - 4K'`.
    pub fn key_growth(&self) -> i64 {
        2 * i64::from(self.k) - 4 * i64::from(self.k_prime)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum RoundOutcome {
    Success,
    Aborted {
        by: Seat,
        reason: AbortReason,
        /// Projective tests completed before the abort.
        at_test: u32,
    },
}

impl RoundOutcome {
    pub fn is_success(&self) -> bool {
        matches!(self, RoundOutcome::Success)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundResult {
    pub outcome: RoundOutcome,
    /// Change in the size of the key store.
    pub key_delta: i64,
    pub transcript: Vec<TranscriptRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatalysisOutcome {
    pub index: u32,
    /// Whether a genuine key pair assisted the conversion.
    pub assisted: bool,
    /// Fidelity of the verifier's challenge pair with the catalyst state.
    pub fidelity: f64,
}

/// Test sets of both verifiers, in request order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestSets {
    /// `Q_A`: even indices Alice tests.
    pub alice: Vec<u32>,
    /// `Q_B`: odd indices Bob tests.
    pub bob: Vec<u32>,
}

impl TestSets {
    pub fn of(&self, seat: Seat) -> &[u32] {
        match seat {
            Seat::Alice => &self.alice,
            Seat::Bob => &self.bob,
        }
    }
}

/// Step 3 summary, before the key store is updated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExchangeReport {
    pub tests_completed: u32,
    pub abort: Option<(Seat, AbortReason)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SlotState {
    Pair(SchmidtVector),
    Compromised,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeySlot {
    pub index: usize,
    pub state_tag: SlotState,
    pub entangled_with_legitimate_peer: bool,
}

/// Slot-by-slot view of the active key set as Alice and Bob would pair it up.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyStore {
    pub slots: Vec<KeySlot>,
}

impl KeyStore {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn genuine(&self) -> usize {
        self.slots.iter().filter(|s| s.entangled_with_legitimate_peer).count()
    }
}

/// Alice, Bob, their shared key material and the particles in play.
#[derive(Debug, Clone)]
pub struct Session {
    config: RoundConfig,
    profile: Arc<StateProfile>,
    arena: ParticleArena,
    alice: Party,
    bob: Party,
    displaced: Option<Party>,
    nature: ChaCha8Rng,
    round: u32,
    terminated: bool,
    log: Option<Vec<TranscriptRecord>>,
    step: Step,
    first_abort: Option<(Seat, AbortReason, u32)>,
    classical_counter: u32,
}

/// Creates a session whose parties share `initial_key_sets` sets of `2K`
/// catalyst pairs; the first set is active and the rest are reserves.
pub fn new_session(config: RoundConfig, initial_key_sets: u32) -> Result<Session, ProtocolError> {
    Session::new(config, initial_key_sets)
}

impl Session {
    pub fn new(config: RoundConfig, initial_key_sets: u32) -> Result<Self, ProtocolError> {
        Self::with_profile(config, initial_key_sets, Arc::new(StateProfile::standard()))
    }

    pub fn with_profile(
        config: RoundConfig,
        initial_key_sets: u32,
        profile: Arc<StateProfile>,
    ) -> Result<Self, ProtocolError> {
        config.validate()?;
        if initial_key_sets == 0 {
            return Err(ProtocolError::InvalidConfig("at least one key set is required".into()));
        }
        let relabel = stream(config.seed, STREAM_RELABEL);
        let mut alice = Party::new(Seat::Alice, stream(config.seed, STREAM_ALICE), relabel.clone());
        let mut bob = Party::new(Seat::Bob, stream(config.seed, STREAM_BOB), relabel);
        let mut arena = ParticleArena::new();
        for set in 0..initial_key_sets {
            let (mut a_set, mut b_set) = (Vec::new(), Vec::new());
            for _ in 0..2 * config.k {
                let (a, b) = arena.new_pair(PairState::Catalyst, (Holder::Alice, Holder::Bob));
                a_set.push(a);
                b_set.push(b);
            }
            if set == 0 {
                alice.key = a_set;
                bob.key = b_set;
            } else {
                alice.reserves.push_back(a_set);
                bob.reserves.push_back(b_set);
            }
        }
        Ok(Session {
            config,
            profile,
            arena,
            alice,
            bob,
            displaced: None,
            nature: stream(config.seed, STREAM_NATURE),
            round: 0,
            terminated: false,
            log: Some(Vec::new()),
            step: Step::Challenge,
            first_abort: None,
            classical_counter: 0,
        })
    }

    pub fn config(&self) -> &RoundConfig {
        &self.config
    }

    pub fn profile(&self) -> &StateProfile {
        &self.profile
    }

    pub fn arena(&self) -> &ParticleArena {
        &self.arena
    }

    pub fn party(&self, seat: Seat) -> &Party {
        match seat {
            Seat::Alice => &self.alice,
            Seat::Bob => &self.bob,
        }
    }

    fn party_mut(&mut self, seat: Seat) -> &mut Party {
        match seat {
            Seat::Alice => &mut self.alice,
            Seat::Bob => &mut self.bob,
        }
    }

    /// Rounds started so far.
    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn is_terminated(&self) -> bool {
        self.terminated
    }

    /// Size of `seat`'s active key set.
    pub fn key_size(&self, seat: Seat) -> usize {
        self.party(seat).key.len()
    }

    /// Turns transcript recording on or off (on by default).
    pub fn set_recording(&mut self, on: bool) {
        self.log = on.then(Vec::new);
    }

    /// Replaces the party at `seat` by Eve, who holds none of its key.
    pub fn install_impostor(&mut self, seat: Seat) {
        let relabel = stream(self.config.seed, STREAM_ADVERSARY);
        let mut impostor = Party::new(seat, stream(self.config.seed, STREAM_ADVERSARY + 1), relabel);
        impostor.holder = Holder::Eve;
        impostor.honest = false;
        let original = std::mem::replace(self.party_mut(seat), impostor);
        self.displaced = Some(original);
    }

    fn actor(&self, seat: Seat) -> Actor {
        if self.party(seat).holder == Holder::Eve {
            Actor::Eve
        } else {
            Actor::from(seat)
        }
    }

    pub fn any_aborted(&self) -> bool {
        self.first_abort.is_some()
    }

    fn record(&mut self, sender: Actor, msg: &WireMessage) {
        if let Some(log) = self.log.as_mut() {
            log.push(TranscriptRecord {
                round: self.round,
                step: self.step,
                sender,
                variant: msg.variant(),
                index: msg.index(),
                note: None,
            });
        }
    }

    fn note_abort(&mut self, seat: Seat) {
        if self.first_abort.is_none() {
            if let Some(reason) = self.party(seat).aborted {
                let tests = (self.alice.tested.len() + self.bob.tested.len()) as u32;
                self.first_abort = Some((seat, reason, tests));
            }
        }
    }

    fn with_channel<T>(&mut self, f: impl FnOnce(&mut ChannelContext<'_>) -> T) -> T {
        let mut ctx = ChannelContext {
            arena: &mut self.arena,
            profile: &self.profile,
            config: &self.config,
            round: self.round,
            log: &mut self.log,
            step: self.step,
        };
        f(&mut ctx)
    }

    /// Sends messages through the channel until it goes quiet.
    pub fn dispatch(&mut self, messages: Vec<Routed>, adversary: &mut dyn Interposer) {
        let mut queue: VecDeque<Routed> = messages.into();
        while let Some(routed) = queue.pop_front() {
            self.record(routed.from, &routed.msg);
            let delivered = if routed.from == Actor::Eve {
                vec![routed]
            } else {
                self.with_channel(|ctx| adversary.interpose(routed, ctx))
            };
            for d in delivered {
                if d.from == Actor::Eve && d != routed {
                    self.record(Actor::Eve, &d.msg);
                }
                let sender = self.actor(d.to);
                let (party, arena) = match d.to {
                    Seat::Alice => (&mut self.alice, &mut self.arena),
                    Seat::Bob => (&mut self.bob, &mut self.arena),
                };
                let mut ctx = party::Context {
                    arena,
                    profile: &self.profile,
                    config: &self.config,
                    nature: &mut self.nature,
                };
                let replies = party.receive(d.msg, &mut ctx);
                self.note_abort(d.to);
                queue.extend(replies.into_iter().map(|m| Routed::new(sender, d.to.peer(), m)));
            }
        }
    }

    fn abort_party(&mut self, seat: Seat, reason: AbortReason, adversary: &mut dyn Interposer) {
        let messages = self.party_mut(seat).abort(reason);
        self.note_abort(seat);
        let sender = self.actor(seat);
        let routed = messages
            .into_iter()
            .map(|m| Routed::new(sender, seat.peer(), m))
            .collect();
        self.dispatch(routed, adversary);
    }

    fn run_phase(&mut self, phase: Phase, adversary: &mut dyn Interposer) {
        let injected = self.with_channel(|ctx| adversary.on_phase(phase, ctx));
        self.dispatch(injected, adversary);
    }

    /// Starts a new round: clears per-round state on both sides.
    pub fn begin_round(&mut self, adversary: &mut dyn Interposer) -> Result<(), ProtocolError> {
        if self.terminated {
            return Err(ProtocolError::Terminated);
        }
        self.round += 1;
        self.first_abort = None;
        self.step = Step::Challenge;
        if let Some(log) = self.log.as_mut() {
            log.clear();
        }
        let k = self.config.k;
        self.alice.begin_round(k);
        self.alice.aborted = None;
        self.bob.begin_round(k);
        self.bob.aborted = None;
        self.run_phase(Phase::RoundStart, adversary);
        Ok(())
    }

    /// Step 1: each verifier prepares its challenge pairs, keeps one half and
    /// returns the messages carrying the other half.
    pub fn prepare_challenges(&mut self) -> Vec<Routed> {
        self.step = Step::Challenge;
        let mut out = Vec::with_capacity(2 * self.config.k as usize);
        for index in 1..=2 * self.config.k {
            let verifier = Seat::verifier_of(index);
            let holder = self.party(verifier).holder;
            // first particle is the A-side half
            let (a_half, b_half) = self
                .arena
                .new_pair(PairState::Challenge, (Holder::Channel, Holder::Channel));
            let (kept, sent) = match verifier {
                Seat::Bob => (b_half, a_half),
                Seat::Alice => (a_half, b_half),
            };
            self.arena.set_holder(kept, holder);
            self.party_mut(verifier).challenges[index as usize - 1] = Some(kept);
            out.push(Routed::new(
                self.actor(verifier),
                verifier.peer(),
                WireMessage::Challenge { index, particle: sent },
            ));
        }
        out
    }

    /// Delivers the challenges; provers still missing one abort on timeout.
    pub fn deliver_challenges(&mut self, challenges: Vec<Routed>, adversary: &mut dyn Interposer) {
        self.dispatch(challenges, adversary);
        self.run_phase(Phase::ChallengesDelivered, adversary);
        for seat in [Seat::Bob, Seat::Alice] {
            if self.any_aborted() {
                return;
            }
            let party = self.party(seat);
            let missing = party.honest
                && (1..=2 * self.config.k).any(|i| !party.is_verifier(i) && party.challenge_half(i).is_none());
            if missing {
                self.abort_party(seat, AbortReason::Timeout, adversary);
            }
        }
    }

    fn slot_genuine(&self, slot: usize) -> bool {
        match (self.alice.key.get(slot), self.bob.key.get(slot)) {
            (Some(&a), Some(&b)) => {
                self.arena.are_partners(a, b)
                    && self.arena.pair_state(a) == Some(PairState::Catalyst)
                    && self.arena.holder(a) == Holder::Alice
                    && self.arena.holder(b) == Holder::Bob
            }
            _ => false,
        }
    }

    /// Step 2 for challenge pair `index`, catalysed by the key pair in slot
    /// `index`. Returns `None` if the round aborted instead.
    pub fn perform_catalysis(&mut self, index: u32, adversary: &mut dyn Interposer) -> Option<CatalysisOutcome> {
        self.step = Step::Catalysis;
        if self.any_aborted() {
            return None;
        }
        let verifier = Seat::verifier_of(index);
        let prover = verifier.peer();
        let Some(own) = self.party(verifier).challenge_half(index) else {
            self.abort_party(verifier, AbortReason::MissingParticle { index }, adversary);
            return None;
        };
        self.classical_counter += 1;
        let msg = WireMessage::CatalysisClassical {
            index,
            outcome: self.classical_counter,
        };
        self.dispatch(vec![Routed::new(self.actor(verifier), prover, msg)], adversary);
        if self.any_aborted() {
            return None;
        }
        let p = self.party(prover);
        if p.honest && !p.converted[index as usize - 1] {
            self.abort_party(prover, AbortReason::Timeout, adversary);
            return None;
        }

        let other = self.party(prover).challenge_half(index);
        let genuine = self.slot_genuine(index as usize - 1);
        let assisted = match other {
            Some(other) if self.arena.are_partners(own, other) => {
                let state = if genuine {
                    PairState::Catalyst
                } else {
                    PairState::BestApproximation
                };
                self.arena.set_pair_state(own, state);
                genuine
            }
            _ => {
                // the prover's particle is not the verifier's partner
                self.arena.set_pair_state(own, PairState::BestApproximation);
                if let Some(other) = other {
                    let forger_holds_partner = self
                        .arena
                        .partner(other)
                        .is_some_and(|q| self.arena.holder(q) == Holder::Eve);
                    if forger_holds_partner {
                        self.arena.set_pair_state(other, PairState::Catalyst);
                    }
                }
                false
            }
        };
        let fidelity = self.arena.pair_state(own).map_or(0.0, |s| self.profile.fidelity(s));
        Some(CatalysisOutcome {
            index,
            assisted,
            fidelity,
        })
    }

    /// Step 3 selection: `K'` indices per verifier from each party's own
    /// seeded stream.
    pub fn select_test_sets(&mut self) -> TestSets {
        let (k, k_prime) = (self.config.k, self.config.k_prime);
        TestSets {
            alice: self.alice.select_tests(k, k_prime),
            bob: self.bob.select_tests(k, k_prime),
        }
    }

    /// Steps 3 and 4: alternating request/response/test turns, Bob first.
    pub fn exchange_tests(&mut self, sets: &TestSets, adversary: &mut dyn Interposer) -> ExchangeReport {
        self.step = Step::Testing;
        if !self.any_aborted() {
            self.run_phase(Phase::TestingStarted, adversary);
        }
        let turns = sets.alice.len().max(sets.bob.len());
        'turns: for t in 0..turns {
            for seat in [Seat::Bob, Seat::Alice] {
                if self.any_aborted() {
                    break 'turns;
                }
                let Some(&index) = sets.of(seat).get(t) else {
                    continue;
                };
                self.party_mut(seat).outstanding = Some(index);
                let msg = WireMessage::ResponseRequest { index };
                self.dispatch(vec![Routed::new(self.actor(seat), seat.peer(), msg)], adversary);
                let party = self.party(seat);
                if party.outstanding.is_some() && party.honest && party.aborted.is_none() {
                    self.abort_party(seat, AbortReason::Timeout, adversary);
                }
                self.party_mut(seat).outstanding = None;
            }
        }
        if !self.any_aborted() {
            self.run_phase(Phase::TestingFinished, adversary);
        }
        ExchangeReport {
            tests_completed: (self.alice.tested.len() + self.bob.tested.len()) as u32,
            abort: self.first_abort.map(|(seat, reason, _)| (seat, reason)),
        }
    }

    /// Step 5 on success, key-set discard on abort.
    pub fn finalize_round(&mut self, adversary: &mut dyn Interposer) -> RoundResult {
        self.step = Step::Finalize;
        let reference = if self.bob.honest { Seat::Bob } else { Seat::Alice };
        let before = self.key_size(reference) as i64;
        let outcome = match self.first_abort {
            None => RoundOutcome::Success,
            Some((by, reason, at_test)) => RoundOutcome::Aborted { by, reason, at_test },
        };
        let k = self.config.k;
        for seat in [Seat::Alice, Seat::Bob] {
            let (party, arena) = match seat {
                Seat::Alice => (&mut self.alice, &mut self.arena),
                Seat::Bob => (&mut self.bob, &mut self.arena),
            };
            if !party.honest {
                continue;
            }
            if outcome.is_success() {
                party.merge_survivors(k, arena);
            } else {
                party.discard_active(arena);
                if !party.activate_reserve() {
                    self.terminated = true;
                }
            }
        }
        let key_delta = self.key_size(reference) as i64 - before;
        let shared = self.shared_with_eve();
        adversary.on_round_end(&outcome, shared);
        let transcript = match self.log.as_mut() {
            Some(log) => std::mem::take(log),
            None => Vec::new(),
        };
        RoundResult {
            outcome,
            key_delta,
            transcript,
        }
    }

    /// Runs all five steps.
    pub fn run_round(&mut self, adversary: &mut dyn Interposer) -> Result<RoundResult, ProtocolError> {
        self.begin_round(adversary)?;
        let challenges = self.prepare_challenges();
        self.deliver_challenges(challenges, adversary);
        for index in 1..=2 * self.config.k {
            if self.perform_catalysis(index, adversary).is_none() {
                break;
            }
        }
        if !self.any_aborted() {
            let sets = self.select_test_sets();
            self.exchange_tests(&sets, adversary);
        }
        Ok(self.finalize_round(adversary))
    }

    /// Key pairs of each honest party whose partner particle Eve holds.
    pub fn shared_with_eve(&self) -> SharedPairs {
        let count = |party: &Party| -> u32 {
            if !party.honest {
                return 0;
            }
            party
                .key
                .iter()
                .chain(party.reserves.iter().flatten())
                .filter(|&&p| {
                    self.arena
                        .partner(p)
                        .is_some_and(|q| self.arena.holder(q) == Holder::Eve)
                })
                .count() as u32
        };
        SharedPairs {
            with_alice: count(&self.alice),
            with_bob: count(&self.bob),
        }
    }

    /// Slot view of the active key sets.
    pub fn key_store(&self) -> KeyStore {
        let n = self.alice.key.len().max(self.bob.key.len());
        let slots = (0..n)
            .map(|slot| {
                let genuine = self.slot_genuine(slot);
                let state_tag = if genuine {
                    let p = self.bob.key[slot];
                    SlotState::Pair(self.arena.pair_schmidt(p, &self.profile).cloned().expect("paired"))
                } else {
                    SlotState::Compromised
                };
                KeySlot {
                    index: slot + 1,
                    state_tag,
                    entangled_with_legitimate_peer: genuine,
                }
            })
            .collect();
        KeyStore { slots }
    }

    /// Checks that no particle is in flight and that every particle a party
    /// references is held by that party and referenced by nobody else.
    pub fn check_conservation(&self) -> Result<(), String> {
        if self.arena.in_transit() != 0 {
            return Err(format!("{} particles still in transit", self.arena.in_transit()));
        }
        let mut seen = HashSet::new();
        let parties = [Some(&self.alice), Some(&self.bob), self.displaced.as_ref()];
        for party in parties.into_iter().flatten() {
            for p in party.referenced() {
                if !seen.insert(p) {
                    return Err(format!("particle {p:?} referenced twice"));
                }
                if self.arena.holder(p) != party.holder {
                    return Err(format!(
                        "{:?} references {p:?} held by {:?}",
                        party.seat,
                        self.arena.holder(p)
                    ));
                }
            }
        }
        Ok(())
    }
}
