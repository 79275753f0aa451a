//! Escape brackets, coverage, return maps, sampling and the verification suite.

mod escape;
mod gas;
mod iet;
mod orbits;
mod return_map;
mod verify;

pub use escape::{coverage_fraction, escape_bracket, escape_bracket_side, BracketEntry, Coverage, EscapeBracketSeq};
pub use gas::{gas_events, gas_map, GasAngle, GasEvent, GasState, RangeFlag};
pub use iet::{iet_classify, Component, ComponentKind, Iet, IetCell, IetClassification, IetPiece};
pub use orbits::{
    certify_periodic, foliation_sample, gl_loop_check, FoliationStats, GlLoop, SampleOutcome,
};
pub use return_map::{
    build_return_map, build_return_map_with, ghost_complete, PartitionInterval, ReturnClass,
    ReturnMapPartition,
};
pub use verify::{verify_all, CheckResult, CheckStatus, VerificationReport};

use crate::error::{Error, Result};
use crate::geometry::TriangleConfig;

pub(crate) fn require_theorem_range(cfg: &TriangleConfig) -> Result<()> {
    if cfg.in_theorem_range() {
        Ok(())
    } else {
        Err(Error::OutOfRange(format!(
            "alpha = {} is not in (pi/6, pi/4)",
            cfg.alpha().canonical()
        )))
    }
}
