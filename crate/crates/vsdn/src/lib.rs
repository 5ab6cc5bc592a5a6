//! Scene-text recognition with decoupled visual and semantic decoding.
//!
//! The crate covers the full desk-scale pipeline: synthetic word-image
//! generation ([`glyphforge`]), visually-grounded word corruption for
//! correction pre-training ([`lexnoise`]), the network itself with exact
//! analytic gradients ([`netcore`]), training ([`trainkit`]) and the
//! vocabulary-reliance benchmark harness ([`evalbench`]).

pub mod charset;
pub mod evalbench;
pub mod glyphforge;
pub mod lexnoise;
pub mod netcore;
pub mod seeds;
pub mod trainkit;
