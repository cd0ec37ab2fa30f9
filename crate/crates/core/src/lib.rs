//! Dynamics of bicritical rational maps over Puiseux series fields.
//!
//! The crate works bottom-up: complex polynomial algebra ([`algebra`]),
//! truncated Puiseux series ([`puiseux`]), rational maps with series
//! coefficients ([`ratmap`]), type II points of the Berkovich line and
//! their tangent maps ([`berkovich`]), cycle finding and lifting
//! ([`dynamics`]), concrete families ([`families`]) and numerical
//! cross-checks on complex maps ([`numeric`]).

pub mod algebra;
pub mod berkovich;
pub mod dynamics;
pub mod error;
pub mod families;
pub mod numeric;
pub mod puiseux;
pub mod ratmap;
pub mod text;

pub use error::{Error, Result};
