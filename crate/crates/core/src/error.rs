use thiserror::Error;

use crate::set::ElementSet;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("ground set of {size} elements exceeds the cap of {cap}")]
    TooLarge { size: usize, cap: usize },

    #[error("exact canonicalization supports at most {cap} elements, got {size}")]
    SizeExceeded { size: usize, cap: usize },

    #[error("not a matroid: {reason}")]
    NotAMatroid {
        reason: String,
        /// A pair of bases violating the exchange axiom, when one exists.
        exchange_failure: Option<(ElementSet, ElementSet)>,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("flat lattice has {flats} flats, cap is {cap}")]
    FlatLatticeTooLarge { flats: usize, cap: usize },

    #[error("invalid modular cut: {0}")]
    InvalidCut(String),

    #[error("matroid has rank {rank}, at least 3 required")]
    RankTooLow { rank: usize },

    #[error("tableau is not decisive")]
    NotDecisive,

    #[error("invalid sub-tableau selection: {0}")]
    InvalidSelection(String),

    #[error("neither matroid is a deflate of the other")]
    NotADeflate,

    #[error("matroid is not registered in the tableau")]
    UnknownMatroid,

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
