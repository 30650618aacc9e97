//! Simulation of 1-of-2 string oblivious transfer over a wiretapped binary
//! erasure broadcast channel, with the matching rate bounds and a suite of
//! attackers that probe the protocol's privacy and security.

pub mod analysis;
pub mod bits;
pub mod bounds;
pub mod channel;
pub mod cli;
pub mod error;
pub mod hash;
pub mod protocol;
pub mod rng;

pub use bits::BitVec;
pub use channel::{ChannelParams, Trit, TritVector};
pub use hash::LinearHash;
pub use protocol::{run_protocol, OtInputs, ProtocolConfig, ProtocolRun, Transcript};
