//! Finite metric spaces, lamplighter metrics over them, and the embeddings
//! that move distortion bounds from a base space to its lamplighter.

pub mod cli;
pub mod embeddings;
pub mod lamplighter;
pub mod markov;
pub mod metric;
pub mod rational;
pub mod trees;
