//! Seeded generators for synthetic contracts and chain fixtures with known
//! ground truth.

pub mod chain;
pub mod contracts;
pub mod videos;

pub use contracts::{
    generate_contract, random_address, random_subset_contract, Assembly, Negative, SynthContract,
    SynthOptions, Trick,
};
pub use chain::{generate_world, SynthWorld, WorldOptions};
pub use videos::generate_video_corpus;
