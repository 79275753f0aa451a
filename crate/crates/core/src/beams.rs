//! Beams: maximal intervals of parallel rays sharing one code.
//!
//! An interval of start offsets is pushed through the unfolding as a whole.
//! Whenever the top vertex of the current copy falls strictly inside the
//! interval, the interval is cut there; the cut is a singular ray through
//! that vertex.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::coding::{classify_code, is_palindrome, Code, CodeClass};
use crate::error::{Error, Result};
use crate::exact::{Real, TrigPoly, Q};
use crate::geometry::{
    BaseVertex, Side, StartPoint, StopRule, Terminal, TriangleConfig, Unfolder,
};
use crate::interval::Interval;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeamFlags {
    pub palindromic: bool,
    /// Copy index whose centre lies strictly inside the beam.
    pub contains_center: Option<usize>,
    pub exceptional_up: bool,
    pub exceptional_down: bool,
    /// Zero-width record of a singular ray through a vertex and a centre.
    pub degenerate: bool,
}

#[derive(Clone, Debug)]
pub struct Beam {
    /// Level of the copy the beam starts in; offsets are relative to its centre.
    pub start_level: i64,
    pub lo: Real,
    pub hi: Real,
    pub code: Code,
    pub class: CodeClass,
    pub terminal: Terminal,
    /// Horizontal offsets of the visited copy centres, one per code entry.
    pub centres: Vec<Real>,
    pub flags: BeamFlags,
}

impl Beam {
    pub fn p(&self) -> usize {
        self.code.p()
    }

    pub fn width(&self) -> Interval {
        self.hi.enc.sub(&self.lo.enc)
    }

    pub fn mid(&self) -> Real {
        self.lo.add(&self.hi).scale(Q::new(1, 2))
    }

    /// Offset of the last copy centre; `J = I - final_shift`.
    pub fn final_shift(&self) -> &Real {
        self.centres.last().expect("at least one centre")
    }

    pub fn j_lo(&self) -> Real {
        self.lo.sub(self.final_shift())
    }

    pub fn j_hi(&self) -> Real {
        self.hi.sub(self.final_shift())
    }

    pub fn is_returning(&self) -> bool {
        matches!(self.class, CodeClass::ReturningUp | CodeClass::ReturningDown)
    }

    pub fn is_exceptional(&self) -> bool {
        matches!(self.class, CodeClass::EscapesUp | CodeClass::EscapesDown)
    }
}

/// Singular ray separating two beams: it meets `vertex` in the copy `step`.
#[derive(Clone, Debug)]
pub struct SplitPoint {
    pub start_level: i64,
    pub x: Real,
    pub step: usize,
    pub level: i64,
    pub vertex: BaseVertex,
}

/// Which side of level 0 a band lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BandSide {
    Positive,
    Negative,
}

#[derive(Clone, Debug)]
pub struct CenterHit {
    pub beam: usize,
    pub step: usize,
    pub level: i64,
}

#[derive(Clone, Debug)]
pub struct BeamSet {
    pub alpha: String,
    pub precision: u32,
    /// `(0, N)` for the positive side, `(M, 0)` for the negative side.
    pub band: (i64, i64),
    pub side: BandSide,
    /// Ordered by start level (level 0 first), then by position.
    pub beams: Vec<Beam>,
    pub splits: Vec<SplitPoint>,
    pub center_hits: Vec<CenterHit>,
}

impl BeamSet {
    /// Beams starting on `L` (level 0).
    pub fn from_level0(&self) -> impl Iterator<Item = &Beam> {
        self.beams.iter().filter(|b| b.start_level == 0)
    }

    /// Non-degenerate beams.
    pub fn proper(&self) -> impl Iterator<Item = &Beam> {
        self.beams.iter().filter(|b| !b.flags.degenerate)
    }

    pub fn edge_level(&self) -> i64 {
        match self.side {
            BandSide::Positive => self.band.1,
            BandSide::Negative => self.band.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BandDecomposition {
    pub positive: Option<BeamSet>,
    pub negative: Option<BeamSet>,
}

struct Item {
    lo: Real,
    hi: Real,
    level: i64,
    xc: Real,
    code: Code,
    centres: Vec<Real>,
}

fn undecided(what: String, e: Error) -> Error {
    match e {
        Error::Undecided { bits, .. } => Error::Undecided { what, bits },
        e => e,
    }
}

/// Push the open interval `(lo, hi)` of offsets in a level-`level` copy
/// through the unfolding until every piece stops.
pub fn propagate(
    unf: &Unfolder,
    level: i64,
    lo: Real,
    hi: Real,
    stop: &StopRule,
    budget: usize,
) -> Result<(Vec<Beam>, Vec<SplitPoint>)> {
    let zero = unf.real(TrigPoly::zero())?;
    let mut work = vec![Item {
        lo,
        hi,
        level,
        xc: zero.clone(),
        code: Code::start(level),
        centres: vec![zero],
    }];
    let mut beams = Vec::new();
    let mut splits = Vec::new();
    while let Some(mut it) = work.pop() {
        let terminal = loop {
            let n = it.code.p();
            if let Some(t) = stop.check_steps(n, budget) {
                break t;
            }
            let sh = unf.shape(it.level)?;
            let sp = it.xc.add(&sh.split);
            let at = |what: &str| {
                format!(
                    "{what} near x = {:.17} (start level {level}, level {}, step {n})",
                    sp.mid_f64(),
                    it.level
                )
            };
            let c_lo = unf
                .cmp(&sp, &it.lo)
                .map_err(|e| undecided(at("split against lower end"), e))?;
            let c_hi = unf
                .cmp(&sp, &it.hi)
                .map_err(|e| undecided(at("split against upper end"), e))?;
            let side = if c_lo == Ordering::Greater && c_hi == Ordering::Less {
                splits.push(SplitPoint {
                    start_level: level,
                    x: sp.clone(),
                    step: n,
                    level: it.level,
                    vertex: sh.top.base(n),
                });
                work.push(Item {
                    lo: sp.clone(),
                    hi: it.hi.clone(),
                    level: it.level,
                    xc: it.xc.clone(),
                    code: it.code.clone(),
                    centres: it.centres.clone(),
                });
                it.hi = sp;
                Side::Left
            } else if c_lo != Ordering::Greater {
                Side::Right
            } else {
                Side::Left
            };
            let e = sh.edge(side);
            it.xc.add_assign(&e.shift);
            it.level += e.delta;
            it.code.push(it.level);
            it.centres.push(it.xc.clone());
            if let Some(t) = stop.check_level(level, it.level, None) {
                break t;
            }
        };
        let band = stop
            .band
            .map(|(a, b)| (a.min(0), b.max(0)))
            .unwrap_or((it.code.min_level().min(0), it.code.max_level().max(0)));
        let class = if band.0 == band.1 {
            CodeClass::Interior
        } else {
            classify_code(&it.code, band)?
        };
        beams.push(Beam {
            start_level: level,
            flags: BeamFlags {
                palindromic: is_palindrome(&it.code),
                exceptional_up: class == CodeClass::EscapesUp,
                exceptional_down: class == CodeClass::EscapesDown,
                ..Default::default()
            },
            lo: it.lo,
            hi: it.hi,
            code: it.code,
            class,
            terminal,
            centres: it.centres,
        });
    }
    beams.sort_by(|a, b| a.lo.mid_f64().total_cmp(&b.lo.mid_f64()));
    splits.sort_by(|a, b| a.x.mid_f64().total_cmp(&b.x.mid_f64()));
    Ok((beams, splits))
}

/// Beams of the perpendicular flow starting in the interval `(lo, hi)` of `L`.
pub fn propagate_beam(
    cfg: &TriangleConfig,
    interval: (&StartPoint, &StartPoint),
    stop: &StopRule,
) -> Result<Vec<Beam>> {
    let unf = cfg.perpendicular();
    let lo = unf.start_offset(interval.0)?;
    let hi = unf.start_offset(interval.1)?;
    if unf.cmp(&lo, &hi)? != Ordering::Less {
        return Err(Error::Invalid("empty start interval".into()));
    }
    Ok(propagate(&unf, 0, lo, hi, stop, cfg.step_budget())?.0)
}

/// The part of the level-`level` copy whose rays leave towards `toward`.
fn start_set(unf: &Unfolder, level: i64, toward: i64) -> Result<Option<(Real, Real)>> {
    let sh = unf.shape(level)?;
    let want = (toward - level).signum();
    let hw = &sh.half_width;
    if sh.tie {
        return Ok((sh.left.delta == want).then(|| (hw.neg(), hw.clone())));
    }
    Ok(if sh.left.delta == want {
        Some((hw.neg(), sh.split.clone()))
    } else {
        Some((sh.split.clone(), hw.clone()))
    })
}

/// Decompose one side of level 0: start sets at level 0 and at the far band
/// level, traced until they reach level 0 or the far level.
pub fn decompose_side(cfg: &TriangleConfig, side: BandSide, n: i64) -> Result<BeamSet> {
    if n <= 0 {
        return Err(Error::Invalid(format!("band size {n} must be positive")));
    }
    let unf = cfg.perpendicular();
    let edge = match side {
        BandSide::Positive => n,
        BandSide::Negative => -n,
    };
    let band = (edge.min(0), edge.max(0));
    let stop = StopRule::band(band.0, band.1);
    let budget = cfg.step_budget();
    let run = |level: i64, toward: i64| -> Result<(Vec<Beam>, Vec<SplitPoint>)> {
        match start_set(&unf, level, toward)? {
            Some((a, b)) => propagate(&unf, level, a, b, &stop, budget),
            None => Ok((Vec::new(), Vec::new())),
        }
    };
    let (near, far) = cfg.exec().join(|| run(0, edge), || run(edge, 0));
    let (mut beams, mut splits) = near?;
    let (fb, fs) = far?;
    beams.extend(fb);
    splits.extend(fs);

    // centre incidences, per beam
    let found = cfg.exec().map(&beams, |b| centre_incidences(&unf, b));
    let mut rows: Vec<(Beam, Vec<(usize, i64)>)> = Vec::with_capacity(beams.len());
    let mut degenerate: Vec<Beam> = Vec::new();
    for (mut b, r) in beams.into_iter().zip(found) {
        let (inside, on_edge) = r?;
        b.flags.contains_center = inside.first().map(|h| h.0);
        for (step, at_lo) in on_edge {
            let x = if at_lo { b.lo.clone() } else { b.hi.clone() };
            let dup = degenerate
                .iter()
                .any(|d| d.start_level == b.start_level && d.lo.poly == x.poly);
            if dup {
                continue;
            }
            degenerate.push(Beam {
                start_level: b.start_level,
                lo: x.clone(),
                hi: x,
                code: b.code.clone(),
                class: b.class,
                terminal: b.terminal,
                centres: b.centres.clone(),
                flags: BeamFlags {
                    palindromic: b.flags.palindromic,
                    contains_center: Some(step),
                    degenerate: true,
                    ..Default::default()
                },
            });
        }
        rows.push((b, inside));
    }
    rows.extend(degenerate.into_iter().map(|b| (b, Vec::new())));
    rows.sort_by(|(a, _), (b, _)| {
        (a.start_level != 0)
            .cmp(&(b.start_level != 0))
            .then(a.lo.mid_f64().total_cmp(&b.lo.mid_f64()))
            .then(a.flags.degenerate.cmp(&b.flags.degenerate))
    });
    let mut beams = Vec::with_capacity(rows.len());
    let mut hits = Vec::new();
    for (i, (b, inside)) in rows.into_iter().enumerate() {
        hits.extend(inside.into_iter().map(|(step, level)| CenterHit {
            beam: i,
            step,
            level,
        }));
        beams.push(b);
    }
    Ok(BeamSet {
        alpha: cfg.alpha().canonical(),
        precision: cfg.precision_bits(),
        band,
        side,
        beams,
        splits,
        center_hits: hits,
    })
}

/// Copy centres strictly inside the beam, and centres on its boundary rays.
/// The first and last copies are excluded.
#[allow(clippy::type_complexity)]
fn centre_incidences(
    unf: &Unfolder,
    b: &Beam,
) -> Result<(Vec<(usize, i64)>, Vec<(usize, bool)>)> {
    let mut inside = Vec::new();
    let mut on_edge = Vec::new();
    let p = b.p();
    for n in 1..p {
        let x = &b.centres[n];
        // cheap rejection on enclosures
        if x.enc.certainly_lt(&b.lo.enc) || b.hi.enc.certainly_lt(&x.enc) {
            continue;
        }
        let c_lo = unf.cmp(x, &b.lo)?;
        let c_hi = unf.cmp(x, &b.hi)?;
        match (c_lo, c_hi) {
            (Ordering::Greater, Ordering::Less) => inside.push((n, b.code.entries()[n])),
            (Ordering::Equal, _) => on_edge.push((n, true)),
            (_, Ordering::Equal) => on_edge.push((n, false)),
            _ => {}
        }
    }
    Ok((inside, on_edge))
}

/// Decompose the band `M..N`; a zero bound omits that side.
pub fn decompose_band(cfg: &TriangleConfig, m: i64, n: i64) -> Result<BandDecomposition> {
    if m > 0 || n < 0 || m == n {
        return Err(Error::Invalid(format!("invalid band {m}..{n}")));
    }
    let (pos, neg) = cfg.exec().join(
        || (n > 0).then(|| decompose_side(cfg, BandSide::Positive, n)),
        || (m < 0).then(|| decompose_side(cfg, BandSide::Negative, -m)),
    );
    Ok(BandDecomposition {
        positive: pos.transpose()?,
        negative: neg.transpose()?,
    })
}

/// The unique beam from 0 to the far level and the unique beam back.
pub fn find_exceptional(bs: &BeamSet) -> Result<(Beam, Beam)> {
    let edge = bs.edge_level();
    let pick = |from: i64, to: i64, kind: &'static str| -> Result<Beam> {
        let c: Vec<&Beam> = bs
            .proper()
            .filter(|b| b.is_exceptional() && b.code.first() == from && b.code.last() == to)
            .collect();
        if c.len() != 1 {
            return Err(Error::CountViolation {
                kind,
                found: c.len(),
            });
        }
        Ok(c[0].clone())
    };
    match bs.side {
        BandSide::Positive => Ok((pick(0, edge, "up")?, pick(edge, 0, "down")?)),
        BandSide::Negative => Ok((pick(edge, 0, "up")?, pick(0, edge, "down")?)),
    }
}

#[derive(Clone, Debug)]
pub struct CenterHitReport {
    /// Copy index examined, `floor(p/2)`.
    pub step: usize,
    /// Enclosure of `|mid - centre|`, accumulated along the path.
    pub residual: Interval,
    /// The residual is zero as an exact expression.
    pub exact_zero: bool,
    /// The residual is certified below `2^-(precision/2)`.
    pub certified: bool,
}

/// Distance between the midpoint ray and the centre of copy `floor(p/2)`.
pub fn center_hit_report(cfg: &TriangleConfig, beam: &Beam) -> Result<CenterHitReport> {
    if !beam.is_returning() {
        return Err(Error::Invalid(format!(
            "beam {} does not return",
            beam.code
        )));
    }
    let step = beam.p() / 2;
    let x = &beam.centres[step];
    let d = beam.mid().sub(x);
    let exact_zero = cfg.perpendicular().field().zero_test(&d.poly) == crate::exact::ZeroTest::Zero;
    let residual = d.enc.abs();
    let prec = d.enc.prec();
    Ok(CenterHitReport {
        step,
        certified: residual.below_pow2((prec / 2) as i64),
        residual,
        exact_zero,
    })
}

#[derive(Clone, Debug)]
pub struct SymmetryReport {
    /// Enclosure of `|lo(J) + hi(I)|` (equal to `|hi(J) + lo(I)|`).
    pub residual: Interval,
    pub holds: bool,
}

/// Whether `J` is the point reflection of `I` through the centre of its copy.
pub fn half_period_symmetry(beam: &Beam) -> SymmetryReport {
    let jlo = beam.j_lo();
    let d = jlo.add(&beam.hi);
    let residual = d.enc.abs();
    let prec = d.enc.prec();
    let returns = beam.code.first() == beam.code.last() && beam.p() > 0;
    SymmetryReport {
        holds: returns && residual.below_pow2((prec / 2) as i64),
        residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_triangle;

    #[test]
    fn band_zero_one() {
        let cfg = make_triangle("0.7", 128).unwrap();
        let d = decompose_band(&cfg, 0, 1).unwrap();
        assert!(d.negative.is_none());
        let bs = d.positive.unwrap();
        let codes: Vec<String> = bs.beams.iter().map(|b| b.code.compact()).collect();
        assert_eq!(codes, vec!["01", "10"]);
        let (up, down) = find_exceptional(&bs).unwrap();
        assert_eq!(up.code.compact(), "01");
        assert_eq!(down.code.compact(), "10");
    }

    #[test]
    fn full_l_one_step() {
        let cfg = make_triangle("0.7", 128).unwrap();
        let beams = propagate_beam(
            &cfg,
            (&StartPoint::left_endpoint(), &StartPoint::right_endpoint()),
            &StopRule::steps(1),
        )
        .unwrap();
        let codes: Vec<String> = beams.iter().map(|b| b.code.compact()).collect();
        assert_eq!(codes, vec!["01", "0(-1)"]);
    }

    #[test]
    fn returning_beams_are_symmetric() {
        let cfg = make_triangle("0.7", 128).unwrap();
        let bs = decompose_side(&cfg, BandSide::Positive, 6).unwrap();
        for b in bs.proper().filter(|b| b.is_returning()) {
            assert!(b.flags.palindromic && b.p() % 2 == 0, "{}", b.code);
            let r = center_hit_report(&cfg, b).unwrap();
            assert!(r.certified && r.exact_zero);
            assert!(half_period_symmetry(b).holds);
        }
        let (up, _) = find_exceptional(&bs).unwrap();
        assert!(!half_period_symmetry(&up).holds);
    }

    #[test]
    fn negative_side_mirrors_positive() {
        let cfg = make_triangle("0.7", 128).unwrap();
        let d = decompose_band(&cfg, -4, 4).unwrap();
        let pos = d.positive.unwrap();
        let neg = d.negative.unwrap();
        let pc: Vec<Code> = pos.from_level0().map(|b| b.code.negated()).collect();
        let mut nc: Vec<Code> = neg.from_level0().map(|b| b.code.clone()).collect();
        nc.reverse();
        assert_eq!(pc, nc);
    }
}
