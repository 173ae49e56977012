//! Static analysis and chain forensics for arbitrage-bot smart contract scams.

pub mod address;
pub mod chain;
pub mod cluster;
pub mod deobfuscate;
pub mod similarity;
pub mod solidity;
pub mod synth;
pub mod triage;
pub mod victims;

pub use address::Address;
