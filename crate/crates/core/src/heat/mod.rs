//! Time-fractional and classical backwards heat problems on a periodic grid.

pub mod construct;
pub mod meyer;
pub mod mittag_leffler;
pub mod operator;

pub use construct::{band_kappa, build_band_dfd, build_wvd, wvd_kappa, BandInfo, LevelBracket, WvdInfo};
pub use meyer::MeyerWavelet;
pub use mittag_leffler::{envelope_constants, mittag_leffler};
pub use operator::{sobolev_norm, HeatOperator, HeatParams};

#[cfg(test)]
mod tests;
