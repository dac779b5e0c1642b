//! Eve: channel interposition strategies and the ledger of key pairs she
//! shares with Alice and Bob.
//!
//! Eve is granted the best outcome each attack allows: pairs she converts
//! without a catalyst sit at fidelity exactly `p0`, and pairs the analysis
//! assumes she brings to the catalyst state are set to it.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::protocol::{
    adversary_rng, Actor, ChannelContext, Holder, Interposer, PairState, ParticleId, Phase, RoundOutcome, Routed, Seat,
    Session, SharedPairs, WireMessage,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DosMode {
    /// Replace the first response with a particle entangled with nothing.
    Garbage,
    /// Deliver nothing at all.
    Drop,
    /// Send `K' + 1` response requests to Alice.
    Flood,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttackKind {
    Passive,
    /// Eve stands in for the absent `target`.
    Impersonation {
        target: Seat,
    },
    DenialOfService {
        mode: DosMode,
    },
    /// Man in the middle who leaves challenges alone. Option 1 relays,
    /// option 2 swaps responses, option 3 withholds Bob's request, forges the
    /// response and steals another pair from Alice.
    TypeI {
        option: u8,
    },
    /// Man in the middle who intercepts challenges on their way to Alice.
    /// When Bob asks for an attacked pair Eve returns the intercepted
    /// particle; case 2 follows with a theft from Alice, case 3 relays the
    /// request and discards Alice's response.
    TypeII {
        case: u8,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseAttackError(String);

impl fmt::Display for ParseAttackError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown attack `{}`", self.0)
    }
}

impl std::error::Error for ParseAttackError {}

impl FromStr for AttackKind {
    type Err = ParseAttackError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseAttackError(s.to_string());
        let lower = s.trim().to_ascii_lowercase();
        let (name, arg) = match lower.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (lower.as_str(), None),
        };
        let number = |range: std::ops::RangeInclusive<u8>| -> Result<u8, ParseAttackError> {
            let n: u8 = arg.ok_or_else(err)?.parse().map_err(|_| err())?;
            range.contains(&n).then_some(n).ok_or_else(err)
        };
        match name {
            "passive" if arg.is_none() => Ok(AttackKind::Passive),
            "impersonation" => {
                let target = match arg {
                    None | Some("alice") => Seat::Alice,
                    Some("bob") => Seat::Bob,
                    _ => return Err(err()),
                };
                Ok(AttackKind::Impersonation { target })
            }
            "dos" => {
                let mode = match arg {
                    Some("garbage") => DosMode::Garbage,
                    Some("drop") => DosMode::Drop,
                    Some("flood") => DosMode::Flood,
                    _ => return Err(err()),
                };
                Ok(AttackKind::DenialOfService { mode })
            }
            "type1" => Ok(AttackKind::TypeI { option: number(1..=3)? }),
            "type2" => Ok(AttackKind::TypeII { case: number(1..=3)? }),
            _ => Err(err()),
        }
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttackKind::Passive => write!(f, "passive"),
            AttackKind::Impersonation { target: Seat::Alice } => write!(f, "impersonation:alice"),
            AttackKind::Impersonation { target: Seat::Bob } => write!(f, "impersonation:bob"),
            AttackKind::DenialOfService { mode } => {
                let m = match mode {
                    DosMode::Garbage => "garbage",
                    DosMode::Drop => "drop",
                    DosMode::Flood => "flood",
                };
                write!(f, "dos:{m}")
            }
            AttackKind::TypeI { option } => write!(f, "type1:{option}"),
            AttackKind::TypeII { case } => write!(f, "type2:{case}"),
        }
    }
}

impl Serialize for AttackKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AttackKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An attack and the number of pairs it targets per round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackStrategy {
    pub kind: AttackKind,
    /// `L`: pairs attacked per round.
    pub budget: u32,
}

impl AttackStrategy {
    pub fn new(kind: AttackKind, budget: u32) -> Self {
        AttackStrategy { kind, budget }
    }

    pub fn passive() -> Self {
        Self::new(AttackKind::Passive, 0)
    }

    /// Checks `L <= K` for strategies that spend a budget.
    pub fn validate(&self, k: u32) -> Result<(), String> {
        let uses_budget = matches!(self.kind, AttackKind::TypeI { .. } | AttackKind::TypeII { .. });
        if uses_budget && self.budget > k {
            return Err(format!("attack budget L = {} exceeds K = {k}", self.budget));
        }
        Ok(())
    }
}

/// Eve's running account across rounds.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct EveLedger {
    /// Key pairs Alice holds whose partner Eve holds.
    pub pairs_with_alice: u32,
    pub pairs_with_bob: u32,
    /// Set once any round Eve took part in aborts.
    pub detected: bool,
    /// Pairs lost when a detecting party discarded its key set.
    pub invalidated_pairs: u32,
    /// Tests Eve exposed herself to with a particle not entangled with the
    /// verifier's catalyst.
    pub exposures: u32,
    /// Pairs taken from Alice with requests Bob did not make.
    pub thefts: u32,
}

impl EveLedger {
    /// Fraction `e` of a `K`-pair key Eve shares with the better-exposed party.
    pub fn eve_fraction(&self, k: u32) -> f64 {
        f64::from(self.pairs_with_alice.max(self.pairs_with_bob)) / f64::from(k)
    }

    fn total(&self) -> u32 {
        self.pairs_with_alice + self.pairs_with_bob
    }
}

#[derive(Debug, Clone, Default)]
struct RoundMemory {
    /// Challenges Eve intercepted, with the particle she kept.
    intercepted: HashMap<u32, ParticleId>,
    /// Attacked indices Bob asked for.
    answered: HashSet<u32>,
    /// Indices Eve asked Alice for and whose responses she intercepts.
    pending: HashSet<u32>,
    /// Responses Eve holds, by index.
    stolen: HashMap<u32, ParticleId>,
    /// Every index Alice has been asked for this round.
    asked_alice: HashSet<u32>,
    /// Bob's requests Eve did not pass on.
    withheld: HashSet<u32>,
    /// Budget used so far.
    spent: u32,
    active: bool,
}

/// The adversary on the channel.
#[derive(Debug, Clone)]
pub struct Eve {
    strategy: AttackStrategy,
    ledger: EveLedger,
    rng: ChaCha8Rng,
    memory: RoundMemory,
}

impl Eve {
    pub fn new(strategy: AttackStrategy, seed: u64) -> Self {
        Eve {
            strategy,
            ledger: EveLedger::default(),
            rng: adversary_rng(seed),
            memory: RoundMemory::default(),
        }
    }

    pub fn strategy(&self) -> &AttackStrategy {
        &self.strategy
    }

    pub fn ledger(&self) -> &EveLedger {
        &self.ledger
    }

    /// Prepares `session` for this strategy; impersonation removes the target.
    pub fn attach(&self, session: &mut Session) {
        if let AttackKind::Impersonation { target } = self.strategy.kind {
            session.install_impostor(target);
        }
    }

    fn forge(&mut self, ctx: &mut ChannelContext<'_>) -> ParticleId {
        let fidelity = ctx.profile.p0;
        let (_kept, sent) = ctx
            .arena
            .new_pair(PairState::Forgery { fidelity }, (Holder::Eve, Holder::Channel));
        self.ledger.exposures += 1;
        sent
    }

    fn seize(ctx: &mut ChannelContext<'_>, msg: &WireMessage) {
        if let Some(p) = msg.particle() {
            ctx.arena.set_holder(p, Holder::Eve);
        }
    }

    /// Next odd index after `from` that Alice can still be asked for.
    fn theft_target(&self, from: u32, k: u32) -> Option<u32> {
        let n = 2 * k;
        let m = &self.memory;
        (1..=k).map(|step| (from - 1 + 2 * step) % n + 1).find(|j| {
            !m.asked_alice.contains(j)
                && !m.withheld.contains(j)
                && !m.intercepted.contains_key(j)
                && !m.stolen.contains_key(j)
        })
    }

    fn steal(&mut self, from: u32, ctx: &mut ChannelContext<'_>) -> Option<Routed> {
        let j = self.theft_target(from, ctx.config.k)?;
        self.memory.asked_alice.insert(j);
        self.memory.pending.insert(j);
        self.ledger.thefts += 1;
        ctx.log_event(Some(j), "requested pair from Alice");
        Some(Routed::new(
            Actor::Eve,
            Seat::Alice,
            WireMessage::ResponseRequest { index: j },
        ))
    }

    fn stolen_reply(&mut self, index: u32) -> Option<Routed> {
        let particle = self.memory.stolen.remove(&index)?;
        Some(Routed::new(
            Actor::Eve,
            Seat::Bob,
            WireMessage::Response { index, particle },
        ))
    }

    fn type_one(&mut self, option: u8, routed: Routed, ctx: &mut ChannelContext<'_>) -> Vec<Routed> {
        match (routed.from, routed.msg) {
            (Actor::Bob, WireMessage::ResponseRequest { index }) => {
                if let Some(reply) = self.stolen_reply(index) {
                    return vec![reply];
                }
                if self.memory.spent >= self.strategy.budget || option == 1 {
                    self.memory.asked_alice.insert(index);
                    return vec![routed];
                }
                if option == 2 {
                    self.memory.spent += 1;
                    self.memory.asked_alice.insert(index);
                    self.memory.pending.insert(index);
                    ctx.log_event(Some(index), "relayed request, will swap response");
                    return vec![routed];
                }
                self.memory.spent += 1;
                self.memory.withheld.insert(index);
                ctx.log_event(Some(index), "withheld request, sent forged response");
                let particle = self.forge(ctx);
                let mut out = vec![Routed::new(
                    Actor::Eve,
                    Seat::Bob,
                    WireMessage::Response { index, particle },
                )];
                out.extend(self.steal(index, ctx));
                out
            }
            (Actor::Alice, WireMessage::Response { index, .. }) if self.memory.pending.remove(&index) => {
                Self::seize(ctx, &routed.msg);
                if option == 2 {
                    let particle = self.forge(ctx);
                    return vec![Routed::new(
                        Actor::Eve,
                        Seat::Bob,
                        WireMessage::Response { index, particle },
                    )];
                }
                if let Some(p) = routed.msg.particle() {
                    self.memory.stolen.insert(index, p);
                }
                Vec::new()
            }
            _ => vec![routed],
        }
    }

    fn type_two(&mut self, case: u8, routed: Routed, ctx: &mut ChannelContext<'_>) -> Vec<Routed> {
        match (routed.from, routed.msg) {
            (Actor::Bob, WireMessage::Challenge { index, particle })
                if self.memory.intercepted.contains_key(&index) =>
            {
                ctx.arena.set_holder(particle, Holder::Eve);
                let (alpha_a, _alpha_e) = ctx.arena.new_pair(PairState::Challenge, (Holder::Channel, Holder::Eve));
                self.memory.intercepted.insert(index, particle);
                ctx.log_event(Some(index), "intercepted challenge, substituted own pair");
                vec![Routed::new(
                    Actor::Eve,
                    Seat::Alice,
                    WireMessage::Challenge {
                        index,
                        particle: alpha_a,
                    },
                )]
            }
            (Actor::Bob, WireMessage::ResponseRequest { index }) => {
                if let Some(reply) = self.stolen_reply(index) {
                    return vec![reply];
                }
                let Some(&beta_e) = self.memory.intercepted.get(&index) else {
                    self.memory.asked_alice.insert(index);
                    return vec![routed];
                };
                self.memory.answered.insert(index);
                self.ledger.exposures += 1;
                let reply = Routed::new(
                    Actor::Eve,
                    Seat::Bob,
                    WireMessage::Response {
                        index,
                        particle: beta_e,
                    },
                );
                match case {
                    3 => {
                        self.memory.asked_alice.insert(index);
                        self.memory.pending.insert(index);
                        ctx.log_event(Some(index), "relayed request, will answer with intercepted particle");
                        vec![routed]
                    }
                    2 => {
                        ctx.log_event(Some(index), "answered with intercepted particle");
                        let mut out = vec![reply];
                        out.extend(self.steal(index, ctx));
                        out
                    }
                    _ => {
                        ctx.log_event(Some(index), "answered with intercepted particle");
                        vec![reply]
                    }
                }
            }
            (Actor::Alice, WireMessage::Response { index, .. }) if self.memory.pending.remove(&index) => {
                Self::seize(ctx, &routed.msg);
                if let Some(p) = routed.msg.particle() {
                    if self.memory.intercepted.contains_key(&index) {
                        // case 3: Alice's particle is dropped, Bob gets Eve's
                        ctx.arena.discard(p);
                        let beta_e = self.memory.intercepted[&index];
                        return vec![Routed::new(
                            Actor::Eve,
                            Seat::Bob,
                            WireMessage::Response {
                                index,
                                particle: beta_e,
                            },
                        )];
                    }
                    self.memory.stolen.insert(index, p);
                }
                Vec::new()
            }
            _ => vec![routed],
        }
    }

    fn dos(&mut self, mode: DosMode, routed: Routed, ctx: &mut ChannelContext<'_>) -> Vec<Routed> {
        match mode {
            DosMode::Drop => {
                Self::seize(ctx, &routed.msg);
                Vec::new()
            }
            DosMode::Garbage => match routed.msg {
                WireMessage::Response { index, .. } if !self.memory.active => {
                    self.memory.active = true;
                    Self::seize(ctx, &routed.msg);
                    let particle = ctx.arena.new_unpaired(Holder::Channel);
                    ctx.log_event(Some(index), "replaced response with garbage");
                    vec![Routed::new(
                        Actor::Eve,
                        routed.to,
                        WireMessage::Response { index, particle },
                    )]
                }
                _ => vec![routed],
            },
            DosMode::Flood => match routed.msg {
                WireMessage::Response { index, .. }
                    if routed.from == Actor::Alice && self.memory.pending.remove(&index) =>
                {
                    Self::seize(ctx, &routed.msg);
                    Vec::new()
                }
                _ => vec![routed],
            },
        }
    }

    fn flood(&mut self, count: u32, ctx: &mut ChannelContext<'_>) -> Vec<Routed> {
        let mut out = Vec::new();
        for step in 0..2 * ctx.config.k {
            if out.len() as u32 >= count {
                break;
            }
            let j = 2 * (step % ctx.config.k) + 1;
            if self.memory.asked_alice.insert(j) {
                self.memory.pending.insert(j);
                out.push(Routed::new(
                    Actor::Eve,
                    Seat::Alice,
                    WireMessage::ResponseRequest { index: j },
                ));
            }
        }
        ctx.log_event(None, format!("sent {} requests to Alice", out.len()));
        out
    }
}

impl Interposer for Eve {
    fn interpose(&mut self, routed: Routed, ctx: &mut ChannelContext<'_>) -> Vec<Routed> {
        match self.strategy.kind {
            AttackKind::Passive | AttackKind::Impersonation { .. } => vec![routed],
            AttackKind::DenialOfService { mode } => self.dos(mode, routed, ctx),
            AttackKind::TypeI { option } => self.type_one(option, routed, ctx),
            AttackKind::TypeII { case } => self.type_two(case, routed, ctx),
        }
    }

    fn on_phase(&mut self, phase: Phase, ctx: &mut ChannelContext<'_>) -> Vec<Routed> {
        match (phase, self.strategy.kind) {
            (Phase::RoundStart, _) => {
                self.memory = RoundMemory::default();
                if let AttackKind::TypeII { .. } = self.strategy.kind {
                    let k = ctx.config.k as usize;
                    let l = (self.strategy.budget as usize).min(k);
                    for j in index::sample(&mut self.rng, k, l) {
                        // placeholder until the challenge passes by
                        self.memory.intercepted.insert(2 * j as u32 + 1, ParticleId(u32::MAX));
                    }
                }
                Vec::new()
            }
            (Phase::TestingStarted, AttackKind::DenialOfService { mode: DosMode::Flood }) => {
                self.flood(ctx.config.k_prime + 1, ctx)
            }
            (Phase::TestingFinished, AttackKind::TypeI { option: 3 }) => {
                // budget left over after Bob's requests ran out
                let extra = self.strategy.budget.saturating_sub(self.memory.spent);
                let mut out = Vec::new();
                for _ in 0..extra {
                    self.memory.spent += 1;
                    out.extend(self.steal(1, ctx));
                }
                out
            }
            (Phase::TestingFinished, AttackKind::TypeII { .. }) => {
                // untested pairs are brought to the catalyst state
                for (&i, &beta_e) in &self.memory.intercepted {
                    if !self.memory.answered.contains(&i) && beta_e.0 != u32::MAX {
                        ctx.arena.set_pair_state(beta_e, PairState::Catalyst);
                    }
                }
                Vec::new()
            }
            _ => Vec::new(),
        }
    }

    fn on_round_end(&mut self, outcome: &RoundOutcome, shared: SharedPairs) {
        let before = self.ledger.total();
        if !outcome.is_success() {
            self.ledger.detected = true;
        }
        self.ledger.pairs_with_alice = shared.with_alice;
        self.ledger.pairs_with_bob = shared.with_bob;
        self.ledger.invalidated_pairs += before.saturating_sub(self.ledger.total());
    }
}
