use std::io::{self, Write};

use serde::Serialize;

use super::arena::{Holder, ParticleId};

/// One of the two legitimate protocol endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Seat {
    Alice,
    Bob,
}

impl Seat {
    pub fn peer(self) -> Seat {
        match self {
            Seat::Alice => Seat::Bob,
            Seat::Bob => Seat::Alice,
        }
    }

    /// Verifier of challenge index `i`: Bob for odd indices, Alice for even.
    pub fn verifier_of(index: u32) -> Seat {
        if index % 2 == 1 {
            Seat::Bob
        } else {
            Seat::Alice
        }
    }

    pub fn holder(self) -> Holder {
        match self {
            Seat::Alice => Holder::Alice,
            Seat::Bob => Holder::Bob,
        }
    }
}

/// Whoever actually put a message on the channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Actor {
    Alice,
    Bob,
    Eve,
}

impl From<Seat> for Actor {
    fn from(seat: Seat) -> Self {
        match seat {
            Seat::Alice => Actor::Alice,
            Seat::Bob => Actor::Bob,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum AbortReason {
    /// A projective test of the catalyst state failed.
    TestFailed {
        index: u32,
    },
    /// More than `K'` response requests were received.
    RequestFlood,
    DuplicateRequest {
        index: u32,
    },
    /// Request or challenge for an index whose role does not match.
    WrongRole {
        index: u32,
    },
    UnexpectedMessage,
    MissingParticle {
        index: u32,
    },
    /// The channel went quiet while a message was still expected.
    Timeout,
    PeerAborted,
}

impl std::fmt::Display for AbortReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AbortReason::TestFailed { index } => write!(f, "test failed on pair {index}"),
            AbortReason::RequestFlood => write!(f, "request flood"),
            AbortReason::DuplicateRequest { index } => write!(f, "duplicate request for pair {index}"),
            AbortReason::WrongRole { index } => write!(f, "wrong role for pair {index}"),
            AbortReason::UnexpectedMessage => write!(f, "unexpected message"),
            AbortReason::MissingParticle { index } => write!(f, "missing particle {index}"),
            AbortReason::Timeout => write!(f, "timeout"),
            AbortReason::PeerAborted => write!(f, "peer aborted"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WireMessage {
    Challenge { index: u32, particle: ParticleId },
    CatalysisClassical { index: u32, outcome: u32 },
    ResponseRequest { index: u32 },
    Response { index: u32, particle: ParticleId },
    Abort { reason: AbortReason },
}

impl WireMessage {
    pub fn variant(&self) -> &'static str {
        match self {
            WireMessage::Challenge { .. } => "Challenge",
            WireMessage::CatalysisClassical { .. } => "CatalysisClassical",
            WireMessage::ResponseRequest { .. } => "ResponseRequest",
            WireMessage::Response { .. } => "Response",
            WireMessage::Abort { .. } => "Abort",
        }
    }

    pub fn index(&self) -> Option<u32> {
        match *self {
            WireMessage::Challenge { index, .. }
            | WireMessage::CatalysisClassical { index, .. }
            | WireMessage::ResponseRequest { index }
            | WireMessage::Response { index, .. } => Some(index),
            WireMessage::Abort { .. } => None,
        }
    }

    pub fn particle(&self) -> Option<ParticleId> {
        match *self {
            WireMessage::Challenge { particle, .. } | WireMessage::Response { particle, .. } => Some(particle),
            _ => None,
        }
    }
}

/// A message on the channel with its true sender and intended recipient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Routed {
    pub from: Actor,
    pub to: Seat,
    pub msg: WireMessage,
}

impl Routed {
    pub fn new(from: impl Into<Actor>, to: Seat, msg: WireMessage) -> Self {
        Routed {
            from: from.into(),
            to,
            msg,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    Challenge,
    Catalysis,
    Testing,
    Finalize,
}

/// One transcript line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TranscriptRecord {
    pub round: u32,
    pub step: Step,
    pub sender: Actor,
    pub variant: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Writes one JSON object per line.
pub fn write_transcript<W: Write>(records: &[TranscriptRecord], mut out: W) -> io::Result<()> {
    for record in records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
