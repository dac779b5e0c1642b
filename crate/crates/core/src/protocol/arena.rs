//! Particle bookkeeping: who holds each particle and which particles form a
//! pair in which state.

use serde::Serialize;

use crate::schmidt::SchmidtVector;
use crate::state::product_marginal_fidelity;

use super::profile::StateProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ParticleId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Holder {
    Alice,
    Bob,
    Eve,
    /// In flight on the channel; never observed between protocol steps.
    Channel,
    Discarded,
}

/// State of a pair, at the level of Schmidt coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PairState {
    /// Freshly prepared challenge `|b⟩`.
    Challenge,
    /// Catalyst `|c⟩`.
    Catalyst,
    /// Best unassisted approximation of `|c⟩` reachable from `|b⟩`.
    BestApproximation,
    /// Pair prepared by Eve whose one half is presented to a verifier in
    /// place of the genuine response; the verifier's test passes with
    /// `fidelity`.
    Forgery { fidelity: f64 },
}

#[derive(Debug, Clone)]
struct Particle {
    holder: Holder,
    pair: Option<usize>,
}

#[derive(Debug, Clone)]
struct PairRecord {
    members: [ParticleId; 2],
    state: PairState,
}

#[derive(Debug, Clone, Default)]
pub struct ParticleArena {
    particles: Vec<Particle>,
    pairs: Vec<PairRecord>,
}

impl ParticleArena {
    pub fn new() -> Self {
        Self::default()
    }

    /// Creates a pair; the first particle goes to `holders.0`.
    pub fn new_pair(&mut self, state: PairState, holders: (Holder, Holder)) -> (ParticleId, ParticleId) {
        let pair = self.pairs.len();
        let a = self.push(holders.0, Some(pair));
        let b = self.push(holders.1, Some(pair));
        self.pairs.push(PairRecord { members: [a, b], state });
        (a, b)
    }

    /// A lone particle entangled with nothing and orthogonal to every target.
    pub fn new_unpaired(&mut self, holder: Holder) -> ParticleId {
        self.push(holder, None)
    }

    fn push(&mut self, holder: Holder, pair: Option<usize>) -> ParticleId {
        let id = ParticleId(self.particles.len() as u32);
        self.particles.push(Particle { holder, pair });
        id
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn holder(&self, p: ParticleId) -> Holder {
        self.particles[p.0 as usize].holder
    }

    pub fn set_holder(&mut self, p: ParticleId, holder: Holder) {
        self.particles[p.0 as usize].holder = holder;
    }

    /// Moves `p` to `to`, but only if `from` holds it.
    pub fn transfer(&mut self, p: ParticleId, from: Holder, to: Holder) -> bool {
        let particle = &mut self.particles[p.0 as usize];
        if particle.holder == from {
            particle.holder = to;
            true
        } else {
            false
        }
    }

    pub fn partner(&self, p: ParticleId) -> Option<ParticleId> {
        let pair = self.particles[p.0 as usize].pair?;
        let [a, b] = self.pairs[pair].members;
        Some(if a == p { b } else { a })
    }

    pub fn are_partners(&self, p: ParticleId, q: ParticleId) -> bool {
        p != q && self.partner(p) == Some(q)
    }

    pub fn pair_state(&self, p: ParticleId) -> Option<PairState> {
        self.particles[p.0 as usize].pair.map(|i| self.pairs[i].state)
    }

    pub fn set_pair_state(&mut self, p: ParticleId, state: PairState) {
        if let Some(i) = self.particles[p.0 as usize].pair {
            self.pairs[i].state = state;
        }
    }

    /// Probability that a test of `|c⟩⟨c|` on the verifier's half `own` and
    /// the received particle `received` passes.
    pub fn test_pass_probability(&self, own: ParticleId, received: ParticleId, profile: &StateProfile) -> f64 {
        if self.are_partners(own, received) {
            return self.pair_state(own).map_or(0.0, |s| profile.fidelity(s));
        }
        match (self.pair_state(own), self.pair_state(received)) {
            (_, Some(PairState::Forgery { fidelity })) => fidelity,
            (Some(a), Some(b)) => {
                product_marginal_fidelity(profile.marginal(a), profile.marginal(b), &profile.pair.catalyst)
            }
            _ => 0.0,
        }
    }

    /// Both tested particles are consumed. A passed forgery leaves the
    /// forger's kept half paired, in state `|c⟩`, with the particle that was
    /// entangled with the verifier's half.
    pub fn consume_tested(&mut self, own: ParticleId, received: ParticleId, passed: bool) {
        let forged_keep = match self.pair_state(received) {
            Some(PairState::Forgery { .. }) if passed => self.partner(received),
            _ => None,
        };
        let own_partner = self.partner(own).filter(|&q| q != received);
        for p in [own, received] {
            self.dissolve(p);
            self.set_holder(p, Holder::Discarded);
        }
        if let (Some(kept), Some(other)) = (forged_keep, own_partner) {
            self.dissolve(kept);
            self.dissolve(other);
            let pair = self.pairs.len();
            self.pairs.push(PairRecord {
                members: [kept, other],
                state: PairState::Catalyst,
            });
            self.particles[kept.0 as usize].pair = Some(pair);
            self.particles[other.0 as usize].pair = Some(pair);
        }
    }

    /// Detaches `p` and its partner from their pair record.
    fn dissolve(&mut self, p: ParticleId) {
        if let Some(i) = self.particles[p.0 as usize].pair.take() {
            for m in self.pairs[i].members {
                self.particles[m.0 as usize].pair = None;
            }
        }
    }

    pub fn discard(&mut self, p: ParticleId) {
        self.set_holder(p, Holder::Discarded);
    }

    /// Particles currently on the channel.
    pub fn in_transit(&self) -> usize {
        self.particles.iter().filter(|p| p.holder == Holder::Channel).count()
    }

    /// Schmidt vector of the pair containing `p`, if any.
    pub fn pair_schmidt<'a>(&self, p: ParticleId, profile: &'a StateProfile) -> Option<&'a SchmidtVector> {
        self.pair_state(p).map(|s| profile.state_vector(s))
    }
}
