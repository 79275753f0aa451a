use std::cmp::Ordering;

use crate::beams::{decompose_side, find_exceptional, BandSide, Beam};
use crate::coding::Code;
use crate::error::{Error, Result};
use crate::exact::Real;
use crate::geometry::{Terminal, TriangleConfig};
use crate::interval::Interval;

use super::require_theorem_range;

#[derive(Clone, Debug)]
pub struct BracketEntry {
    pub n: i64,
    pub lo: Real,
    pub hi: Real,
    pub width: Interval,
    pub code: Code,
}

/// Initial intervals of the exceptional beam leaving level 0, for `N = 1..`.
#[derive(Clone, Debug)]
pub struct EscapeBracketSeq {
    pub side: BandSide,
    pub entries: Vec<BracketEntry>,
    /// `nested[i]`: entry `i + 1` is certified inside entry `i` and not wider.
    pub nested: Vec<bool>,
}

impl EscapeBracketSeq {
    pub fn is_nested(&self) -> bool {
        self.nested.iter().all(|&b| b)
    }

    pub fn last(&self) -> Option<&BracketEntry> {
        self.entries.last()
    }
}

fn exceptional_from_zero(cfg: &TriangleConfig, side: BandSide, n: i64) -> Result<Beam> {
    let bs = decompose_side(cfg, side, n)?;
    let (up, down) = find_exceptional(&bs)?;
    Ok(match side {
        BandSide::Positive => up,
        BandSide::Negative => down,
    })
}

pub fn escape_bracket(cfg: &TriangleConfig, n_max: i64) -> Result<EscapeBracketSeq> {
    escape_bracket_side(cfg, BandSide::Positive, n_max)
}

pub fn escape_bracket_side(
    cfg: &TriangleConfig,
    side: BandSide,
    n_max: i64,
) -> Result<EscapeBracketSeq> {
    require_theorem_range(cfg)?;
    if n_max < 1 {
        return Err(Error::Invalid(format!("nmax = {n_max} must be at least 1")));
    }
    let beams = cfg
        .exec()
        .map_range(1..n_max as usize + 1, |n| exceptional_from_zero(cfg, side, n as i64));
    let mut entries = Vec::with_capacity(beams.len());
    for (i, b) in beams.into_iter().enumerate() {
        let b = b?;
        entries.push(BracketEntry {
            n: i as i64 + 1,
            width: b.width(),
            lo: b.lo,
            hi: b.hi,
            code: b.code,
        });
    }
    let unf = cfg.perpendicular();
    let mut nested = Vec::with_capacity(entries.len().saturating_sub(1));
    for w in entries.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let inside = unf.cmp(&a.lo, &b.lo)? != Ordering::Greater
            && unf.cmp(&b.hi, &a.hi)? != Ordering::Greater;
        let narrower = unf.cmp(&b.hi.sub(&b.lo), &a.hi.sub(&a.lo))? != Ordering::Greater;
        nested.push(inside && narrower);
    }
    Ok(EscapeBracketSeq {
        side,
        entries,
        nested,
    })
}

/// Widths of level-0 beams in the symmetric band `-N..N`, as parts of `|L|`.
#[derive(Clone, Debug)]
pub struct Coverage {
    pub n: i64,
    pub length: Interval,
    pub returning: Interval,
    pub escaping: Interval,
    /// Width of start sets that could not be certified.
    pub unresolved: Interval,
    /// Enclosure of `returning / length`.
    pub fraction: Interval,
}

impl Coverage {
    /// Certified lower bound of the fraction.
    pub fn fraction_lower(&self) -> f64 {
        self.fraction.lo_f64()
    }
}

pub fn coverage_fraction(cfg: &TriangleConfig, n: i64) -> Result<Coverage> {
    if n < 1 {
        return Err(Error::Invalid(format!("N = {n} must be at least 1")));
    }
    let prec = cfg.precision_bits();
    let half = cfg.half_length()?.enc;
    let length = half.mul_int(2);
    let (pos, neg) = cfg.exec().join(
        || decompose_side(cfg, BandSide::Positive, n),
        || decompose_side(cfg, BandSide::Negative, n),
    );
    let mut returning = Interval::zero(prec);
    let mut escaping = Interval::zero(prec);
    let mut unresolved = Interval::zero(prec);
    for side in [pos, neg] {
        match side {
            Ok(bs) => {
                for b in bs.from_level0().filter(|b| !b.flags.degenerate) {
                    let w = b.width();
                    if b.terminal == Terminal::StepBudgetExhausted {
                        unresolved = unresolved.add(&w);
                    } else if b.is_returning() {
                        returning = returning.add(&w);
                    } else {
                        escaping = escaping.add(&w);
                    }
                }
            }
            // each side starts from one half of L
            Err(Error::Undecided { .. }) => unresolved = unresolved.add(&half),
            Err(e) => return Err(e),
        }
    }
    let fraction = returning
        .div(&length)
        .ok_or_else(|| Error::Invalid("degenerate diagonal".into()))?;
    Ok(Coverage {
        n,
        length,
        returning,
        escaping,
        unresolved,
        fraction,
    })
}
