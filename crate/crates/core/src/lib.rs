pub mod birth;
pub mod cli;
pub mod diffusion;
pub mod error;
pub mod grammar;
pub mod minimal;
pub mod nonstandard;
pub mod operator;
pub mod rates;
pub mod standard;
pub mod trajectory;

pub use error::{Error, Result};
pub use operator::{SuperOperator, TruncatedOperator, C64};
pub use rates::RateSequence;
