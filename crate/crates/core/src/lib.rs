pub mod graph;
pub mod idiom;
pub mod inference;
pub mod causal;
pub mod lint;
pub mod model;
pub mod fixtures;
pub mod cli;
