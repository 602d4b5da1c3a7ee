pub mod dfs;
pub mod error;
pub mod floquet;
pub mod fock;
pub mod golden_rule;
pub mod operator;
pub mod quadrature;
pub mod qubit;
pub mod reservoir;
pub mod zeno;

pub use error::{Error, Result};
