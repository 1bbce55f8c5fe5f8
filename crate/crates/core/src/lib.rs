//! Iterative Plurality voting where each voter only knows the current tally
//! up to some distance, and moves when one ballot locally dominates another.

pub mod dominance;
pub mod dynamics;
pub mod election;
pub mod error;
pub mod metrics;
pub mod prefgen;

pub use election::{Action, BallotProfile, Candidate, PreferenceOrder, PreferenceProfile, ScoreVector};
