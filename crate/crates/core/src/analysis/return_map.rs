//! First return to level 0 in the band `M..N`, and its ghost completion.

use std::cmp::Ordering;
use std::sync::Arc;

use serde::Serialize;

use crate::beams::propagate;
use crate::coding::Code;
use crate::error::{Error, Result};
use crate::exact::{Direction, Real, ZeroTest};
use crate::geometry::{StopRule, Terminal, TriangleConfig, Unfolder};

use super::iet::{iet_classify, ComponentKind, Iet, IetPiece};

/// Default iteration cap when classifying the ghost map.
pub const IET_MAX_ITER: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "class")]
pub enum ReturnClass {
    /// Class P: periodic under the return map.
    Periodic { period: usize },
    /// Class M: no period found; minimality is not certified.
    Minimal { iterations: usize },
    /// Class U: reaches level `M` or `N` before returning.
    Escaping { level: i64 },
    /// Step budget exhausted before any stop.
    Unresolved,
}

#[derive(Clone, Debug)]
pub struct PartitionInterval {
    pub lo: Real,
    pub hi: Real,
    pub class: ReturnClass,
    /// Code up to the first stop.
    pub code: Code,
    /// Return map `x -> x + shift`, for returning intervals.
    pub shift: Option<Real>,
    /// The ghost orbit of this interval leaves the domain of the return map.
    pub via_ghost: bool,
}

impl PartitionInterval {
    pub fn is_returning(&self) -> bool {
        self.shift.is_some()
    }
}

#[derive(Clone, Debug)]
pub struct ReturnMapPartition {
    pub alpha: String,
    pub theta0: Direction,
    pub band: (i64, i64),
    /// Simplicity of the direction is assumed, not verified (non-perpendicular only).
    pub assumes_simple_direction: bool,
    /// Level 0 as offsets from the copy centre.
    pub domain: (Real, Real),
    /// Left to right, tiling the domain up to `singular_points`.
    pub intervals: Vec<PartitionInterval>,
    pub singular_points: Vec<Real>,
    pub ghost: Option<Iet>,
    unf: Arc<Unfolder>,
}

impl ReturnMapPartition {
    pub fn unfolder(&self) -> &Arc<Unfolder> {
        &self.unf
    }

    pub fn has_escaping(&self) -> bool {
        self.intervals
            .iter()
            .any(|i| matches!(i.class, ReturnClass::Escaping { .. }))
    }

    /// True return map on the returning intervals.
    pub fn apply(&self, x: &Real) -> Result<Option<Real>> {
        for i in self.intervals.iter().filter(|i| i.is_returning()) {
            if self.unf.cmp(&i.lo, x)? == Ordering::Less && self.unf.cmp(x, &i.hi)? == Ordering::Less
            {
                return Ok(Some(x.add(i.shift.as_ref().unwrap())));
            }
        }
        Ok(None)
    }
}

pub fn build_return_map(
    cfg: &TriangleConfig,
    theta0: &Direction,
    m: i64,
    n: i64,
) -> Result<ReturnMapPartition> {
    build_return_map_with(cfg, theta0, m, n, IET_MAX_ITER)
}

/// As [`build_return_map`], with an explicit iteration cap for the ghost map.
pub fn build_return_map_with(
    cfg: &TriangleConfig,
    theta0: &Direction,
    m: i64,
    n: i64,
    max_iter: usize,
) -> Result<ReturnMapPartition> {
    if !(m < 0 && 0 < n) {
        return Err(Error::Invalid(format!("band {m}..{n} must satisfy M < 0 < N")));
    }
    let unf = cfg.unfolder(theta0)?;
    let hw = unf.shape(0)?.half_width.clone();
    let stop = StopRule::band(m, n);
    let (beams, splits) = propagate(&unf, 0, hw.neg(), hw.clone(), &stop, cfg.step_budget())?;
    let intervals = beams
        .into_iter()
        .map(|b| {
            let (class, shift) = match b.terminal {
                Terminal::ReturnedToLevel0 => (
                    ReturnClass::Minimal { iterations: 0 },
                    Some(b.final_shift().neg()),
                ),
                Terminal::ReachedBandEdge { level } => (ReturnClass::Escaping { level }, None),
                _ => (ReturnClass::Unresolved, None),
            };
            PartitionInterval {
                lo: b.lo,
                hi: b.hi,
                class,
                code: b.code,
                shift,
                via_ghost: false,
            }
        })
        .collect();
    let mut part = ReturnMapPartition {
        alpha: cfg.alpha().canonical(),
        theta0: theta0.clone(),
        band: (m, n),
        assumes_simple_direction: !theta0.is_perpendicular(),
        domain: (hw.neg(), hw),
        intervals,
        singular_points: splits.into_iter().map(|s| s.x).collect(),
        ghost: None,
        unf,
    };
    let ghost = ghost_complete(&part)?;
    refine_classes(&mut part, &ghost, max_iter)?;
    part.ghost = Some(ghost);
    Ok(part)
}

/// Replace each returning interval by its ghost-map cells, labelled P or M.
fn refine_classes(part: &mut ReturnMapPartition, ghost: &Iet, max_iter: usize) -> Result<()> {
    let cls = iet_classify(ghost, max_iter)?;
    let unf = part.unf.clone();
    let mut out = Vec::with_capacity(part.intervals.len());
    for iv in part.intervals.drain(..) {
        if !iv.is_returning() {
            out.push(iv);
            continue;
        }
        for c in &cls.cells {
            let inside = unf.cmp(&iv.lo, &c.lo)? != Ordering::Greater
                && unf.cmp(&c.hi, &iv.hi)? != Ordering::Greater;
            if !inside {
                continue;
            }
            // cells without a period are cut only by the iteration; merge them back
            if let (Some(prev), ComponentKind::UnresolvedMinimal { .. }) = (out.last_mut(), c.kind) {
                let prev: &mut PartitionInterval = prev;
                if matches!(prev.class, ReturnClass::Minimal { .. })
                    && prev.code == iv.code
                    && prev.hi.poly == c.lo.poly
                {
                    prev.hi = c.hi.clone();
                    prev.via_ghost |= c.via_ghost;
                    continue;
                }
            }
            out.push(PartitionInterval {
                lo: c.lo.clone(),
                hi: c.hi.clone(),
                class: match c.kind {
                    ComponentKind::Periodic { period } => ReturnClass::Periodic { period },
                    ComponentKind::UnresolvedMinimal { iterations } => {
                        ReturnClass::Minimal { iterations }
                    }
                },
                code: iv.code.clone(),
                shift: iv.shift.clone(),
                via_ghost: c.via_ghost,
            });
        }
    }
    part.intervals = out;
    Ok(())
}

fn certified_zero(unf: &Unfolder, d: &Real) -> bool {
    match unf.field().zero_test(&d.poly) {
        ZeroTest::Zero => true,
        ZeroTest::NonZero => false,
        ZeroTest::Unknown => d.enc.below_pow2((d.enc.prec() / 2) as i64),
    }
}

/// Complement of sorted disjoint open intervals inside `(lo, hi)`.
fn gaps(unf: &Unfolder, lo: &Real, hi: &Real, mut parts: Vec<(Real, Real)>) -> Result<Vec<(Real, Real)>> {
    parts.sort_by(|a, b| a.0.mid_f64().total_cmp(&b.0.mid_f64()));
    let mut out = Vec::new();
    let mut cur = lo.clone();
    for (a, b) in parts {
        if unf.cmp(&a, &cur)? == Ordering::Greater {
            out.push((cur.clone(), a));
        }
        if unf.cmp(&b, &cur)? == Ordering::Greater {
            cur = b;
        }
    }
    if unf.cmp(hi, &cur)? == Ordering::Greater {
        out.push((cur, hi.clone()));
    }
    Ok(out)
}

/// Complete the partial return map to an interval exchange: the domain gaps
/// are sent to the range gaps in left-to-right order by translations.
pub fn ghost_complete(part: &ReturnMapPartition) -> Result<Iet> {
    let unf = part.unf.clone();
    let (lo, hi) = &part.domain;
    let returning: Vec<&PartitionInterval> =
        part.intervals.iter().filter(|i| i.is_returning()).collect();
    let dom = gaps(&unf, lo, hi, returning.iter().map(|i| (i.lo.clone(), i.hi.clone())).collect())?;
    let ran = gaps(
        &unf,
        lo,
        hi,
        returning
            .iter()
            .map(|i| {
                let s = i.shift.as_ref().unwrap();
                (i.lo.add(s), i.hi.add(s))
            })
            .collect(),
    )?;
    let total = |g: &[(Real, Real)]| {
        g.iter()
            .fold(unf.real(crate::exact::TrigPoly::zero()), |acc, (a, b)| {
                acc.map(|t| t.add(&b.sub(a)))
            })
    };
    let (dl, rl) = (total(&dom)?, total(&ran)?);
    if !certified_zero(&unf, &dl.sub(&rl)) {
        return Err(Error::LengthMismatch {
            domain: dl.mid_f64(),
            range: rl.mid_f64(),
        });
    }

    let mut pieces: Vec<IetPiece> = returning
        .iter()
        .map(|i| IetPiece {
            lo: i.lo.clone(),
            hi: i.hi.clone(),
            shift: i.shift.clone().unwrap(),
            ghost: false,
        })
        .collect();
    let (mut i, mut j) = (0, 0);
    let mut da = dom.first().map(|g| g.0.clone());
    let mut ra = ran.first().map(|g| g.0.clone());
    while i < dom.len() && j < ran.len() {
        let (d0, r0) = (da.clone().unwrap(), ra.clone().unwrap());
        let ld = dom[i].1.sub(&d0);
        let lr = ran[j].1.sub(&r0);
        let shift = r0.sub(&d0);
        let ord = unf.cmp(&ld, &lr)?;
        let end = if ord == Ordering::Greater { d0.add(&lr) } else { dom[i].1.clone() };
        pieces.push(IetPiece {
            lo: d0,
            hi: end.clone(),
            shift,
            ghost: true,
        });
        match ord {
            Ordering::Less => {
                ra = Some(r0.add(&ld));
                i += 1;
                da = dom.get(i).map(|g| g.0.clone());
            }
            Ordering::Equal => {
                i += 1;
                j += 1;
                da = dom.get(i).map(|g| g.0.clone());
                ra = ran.get(j).map(|g| g.0.clone());
            }
            Ordering::Greater => {
                da = Some(end);
                j += 1;
                ra = ran.get(j).map(|g| g.0.clone());
            }
        }
    }
    pieces.sort_by(|a, b| a.lo.mid_f64().total_cmp(&b.lo.mid_f64()));
    Iet::new(unf, pieces)
}
