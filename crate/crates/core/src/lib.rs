pub mod augment;
pub mod axis;
pub mod clients;
pub mod generators;
pub mod harness;
pub mod prompts;
pub mod geometry;
pub mod render;
pub mod sample;
pub mod scoring;
pub mod seed;
pub mod stats;
