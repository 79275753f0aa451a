use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::VerificationReport;
use crate::beams::{
    BandDecomposition, BandSide, Beam, BeamFlags, BeamSet, CenterHit, SplitPoint,
};
use crate::coding::{Code, CodeClass};
use crate::error::{Error, Result};
use crate::exact::{Real, TrigPoly};
use crate::geometry::{BaseVertex, Terminal, TriangleConfig, Unfolder};
use crate::interval::Interval;

pub const FORMAT_VERSION: u32 = 1;

/// Symbolic values behind a beam record, as sums of `cos(m*alpha)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactEnds {
    pub lo: TrigPoly,
    pub hi: TrigPoly,
    /// Offsets of the visited copy centres.
    pub centres: Vec<TrigPoly>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeamRecord {
    pub side: BandSide,
    pub start_level: i64,
    /// Outward-rounded decimal enclosures of the endpoints.
    #[serde(rename = "I")]
    pub i: [String; 2],
    #[serde(rename = "J")]
    pub j: [String; 2],
    pub code: Code,
    pub p: usize,
    pub class: CodeClass,
    pub terminal: Terminal,
    pub flags: BeamFlags,
    pub exact: ExactEnds,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub side: BandSide,
    pub start_level: i64,
    pub x: [String; 2],
    pub exact: TrigPoly,
    pub step: usize,
    pub level: i64,
    pub vertex: BaseVertex,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CenterHitRecord {
    /// Index into `beams`.
    pub beam: usize,
    pub step: usize,
    pub level: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeamTable {
    pub version: u32,
    pub alpha_spec: String,
    pub precision: u32,
    pub band: [i64; 2],
    pub beams: Vec<BeamRecord>,
    pub splits: Vec<SplitRecord>,
    pub center_hits: Vec<CenterHitRecord>,
}

fn digits(prec: u32) -> u32 {
    (prec as f64 * std::f64::consts::LOG10_2).ceil() as u32 + 2
}

/// Outward-rounded decimal endpoints, with enough digits for the precision of `e`.
pub fn decimal_enclosure(e: &Interval) -> [String; 2] {
    let d = digits(e.prec());
    [e.lo_decimal(d), e.hi_decimal(d)]
}

/// Decimal enclosure of `p`, evaluated afresh so that it does not depend on
/// how the value was accumulated.
fn decimals(unf: &Unfolder, p: &TrigPoly, prec: u32) -> Result<[String; 2]> {
    Ok(decimal_enclosure(&unf.field().eval(p, prec)?))
}

impl BeamTable {
    pub fn from_decomposition(cfg: &TriangleConfig, d: &BandDecomposition) -> Result<BeamTable> {
        let mut t = BeamTable {
            version: FORMAT_VERSION,
            alpha_spec: cfg.alpha().canonical(),
            precision: cfg.precision_bits(),
            band: [
                d.negative.as_ref().map_or(0, |s| s.band.0),
                d.positive.as_ref().map_or(0, |s| s.band.1),
            ],
            beams: Vec::new(),
            splits: Vec::new(),
            center_hits: Vec::new(),
        };
        for bs in [&d.positive, &d.negative].into_iter().flatten() {
            t.push_set(cfg, bs)?;
        }
        Ok(t)
    }

    pub fn from_set(cfg: &TriangleConfig, bs: &BeamSet) -> Result<BeamTable> {
        let mut t = BeamTable {
            version: FORMAT_VERSION,
            alpha_spec: cfg.alpha().canonical(),
            precision: cfg.precision_bits(),
            band: [bs.band.0, bs.band.1],
            beams: Vec::new(),
            splits: Vec::new(),
            center_hits: Vec::new(),
        };
        t.push_set(cfg, bs)?;
        Ok(t)
    }

    fn push_set(&mut self, cfg: &TriangleConfig, bs: &BeamSet) -> Result<()> {
        let unf = cfg.perpendicular();
        let prec = cfg.precision_bits();
        let dec = |p: &TrigPoly| decimals(&unf, p, prec);
        let base = self.beams.len();
        for b in &bs.beams {
            self.beams.push(BeamRecord {
                side: bs.side,
                start_level: b.start_level,
                i: [dec(&b.lo.poly)?[0].clone(), dec(&b.hi.poly)?[1].clone()],
                j: [dec(&b.j_lo().poly)?[0].clone(), dec(&b.j_hi().poly)?[1].clone()],
                code: b.code.clone(),
                p: b.p(),
                class: b.class,
                terminal: b.terminal,
                flags: b.flags.clone(),
                exact: ExactEnds {
                    lo: b.lo.poly.clone(),
                    hi: b.hi.poly.clone(),
                    centres: b.centres.iter().map(|c| c.poly.clone()).collect(),
                },
            });
        }
        for s in &bs.splits {
            self.splits.push(SplitRecord {
                side: bs.side,
                start_level: s.start_level,
                x: dec(&s.x.poly)?,
                exact: s.x.poly.clone(),
                step: s.step,
                level: s.level,
                vertex: s.vertex,
            });
        }
        for h in &bs.center_hits {
            self.center_hits.push(CenterHitRecord {
                beam: base + h.beam,
                step: h.step,
                level: h.level,
            });
        }
        Ok(())
    }

    /// Rebuild the beam sets, re-evaluating every symbolic value under `cfg`.
    pub fn to_decomposition(&self, cfg: &TriangleConfig) -> Result<BandDecomposition> {
        if self.version != FORMAT_VERSION {
            return Err(Error::Invalid(format!(
                "beam table version {} (expected {FORMAT_VERSION})",
                self.version
            )));
        }
        if self.alpha_spec != cfg.alpha().canonical() {
            return Err(Error::Invalid(format!(
                "beam table is for alpha = {}, not {}",
                self.alpha_spec,
                cfg.alpha().canonical()
            )));
        }
        let unf = cfg.perpendicular();
        let real = |p: &TrigPoly| unf.real(p.clone());
        let mut out = BandDecomposition {
            positive: None,
            negative: None,
        };
        for side in [BandSide::Positive, BandSide::Negative] {
            let idx: Vec<usize> = (0..self.beams.len())
                .filter(|&i| self.beams[i].side == side)
                .collect();
            let has_side = match side {
                BandSide::Positive => self.band[1] > 0,
                BandSide::Negative => self.band[0] < 0,
            };
            if !has_side {
                continue;
            }
            let mut beams = Vec::with_capacity(idx.len());
            for &i in &idx {
                let r = &self.beams[i];
                beams.push(Beam {
                    start_level: r.start_level,
                    lo: real(&r.exact.lo)?,
                    hi: real(&r.exact.hi)?,
                    code: r.code.clone(),
                    class: r.class,
                    terminal: r.terminal,
                    centres: r
                        .exact
                        .centres
                        .iter()
                        .map(real)
                        .collect::<Result<Vec<Real>>>()?,
                    flags: r.flags.clone(),
                });
            }
            let splits = self
                .splits
                .iter()
                .filter(|s| s.side == side)
                .map(|s| {
                    Ok(SplitPoint {
                        start_level: s.start_level,
                        x: real(&s.exact)?,
                        step: s.step,
                        level: s.level,
                        vertex: s.vertex,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let center_hits = self
                .center_hits
                .iter()
                .filter_map(|h| {
                    idx.iter().position(|&i| i == h.beam).map(|k| CenterHit {
                        beam: k,
                        step: h.step,
                        level: h.level,
                    })
                })
                .collect();
            let band = match side {
                BandSide::Positive => (0, self.band[1]),
                BandSide::Negative => (self.band[0], 0),
            };
            let set = BeamSet {
                alpha: self.alpha_spec.clone(),
                precision: cfg.precision_bits(),
                band,
                side,
                beams,
                splits,
                center_hits,
            };
            match side {
                BandSide::Positive => out.positive = Some(set),
                BandSide::Negative => out.negative = Some(set),
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

pub fn export_beams_json(table: &BeamTable, path: &Path) -> Result<()> {
    fs::write(path, table.to_json()?)?;
    Ok(())
}

pub fn import_beams_json(path: &Path) -> Result<BeamTable> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn report_json(report: &VerificationReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)? + "\n")
}
