use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::beams::BandSide;
use crate::coding::Code;
use crate::error::{Error, Result};
use crate::exact::{Direction, Real, ZeroTest, Q};
use crate::geometry::{trace_ray, BaseVertex, StartPoint, StopRule, Terminal, TriangleConfig};
use crate::interval::Interval;

use super::escape::escape_bracket_side;
use super::require_theorem_range;

#[derive(Clone, Debug)]
pub struct GlLoop {
    pub left_code: Code,
    pub right_code: Code,
    /// Offsets where the two endpoint orbits come back to `L`.
    pub left_return: Interval,
    pub right_return: Interval,
    /// Both returns are certified to lie strictly inside `L`.
    pub interior: bool,
    pub holds: bool,
}

/// Trace the perpendicular orbits from both endpoints of `L` to their first
/// return.
pub fn gl_loop_check(cfg: &TriangleConfig) -> Result<GlLoop> {
    require_theorem_range(cfg)?;
    let unf = cfg.perpendicular();
    let half = cfg.half_length()?;
    let run = |s: StartPoint| -> Result<(Code, Real)> {
        let t = trace_ray(cfg, &s, &Direction::Perpendicular, &StopRule::first_return())?;
        match t.terminal {
            Terminal::ReturnedToLevel0 => Ok((t.code, t.final_offset)),
            Terminal::Undecided { bits } => Err(Error::Undecided {
                what: format!("endpoint orbit from {s:?}"),
                bits,
            }),
            other => Err(Error::Invalid(format!("endpoint orbit from {s:?} ended with {other:?}"))),
        }
    };
    let (lc, lu) = run(StartPoint::left_endpoint())?;
    let (rc, ru) = run(StartPoint::right_endpoint())?;
    let strictly_inside = |u: &Real| -> Result<bool> {
        Ok(unf.cmp(&half.neg(), u)? == Ordering::Less && unf.cmp(u, &half)? == Ordering::Less)
    };
    let interior = strictly_inside(&lu)? && strictly_inside(&ru)?;
    let holds = interior && lc.compact() == "010" && rc.compact() == "0(-1)0";
    Ok(GlLoop {
        left_code: lc,
        right_code: rc,
        left_return: lu.enc,
        right_return: ru.enc,
        interior,
        holds,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "outcome")]
pub enum SampleOutcome {
    /// The orbit came back to its start state exactly after `steps` crossings.
    Periodic { steps: usize, returns: usize },
    Singular { vertex: BaseVertex },
    Unresolved { reason: String },
}

/// Follow the perpendicular orbit through successive returns to `L` until
/// the start state recurs exactly.
///
/// A return happens at level 0, or for rational angles at any level whose
/// copy is a translate of the base copy. The orbit is periodic when the
/// offset at a return equals the start offset as an exact expression.
pub fn certify_periodic(
    cfg: &TriangleConfig,
    start: &StartPoint,
    n_cap: i64,
    max_returns: usize,
) -> Result<SampleOutcome> {
    let unf = cfg.perpendicular();
    let u0 = unf.start_offset(start)?;
    let stop = StopRule {
        band: Some((-n_cap, n_cap)),
        first_return: false,
        perpendicular_return: true,
        max_steps: None,
    };
    let mut u = u0.clone();
    let mut level = 0;
    let mut steps = 0;
    for r in 1..=max_returns {
        let budget = cfg.step_budget().saturating_sub(steps);
        let t = unf.trace_offset(&u, level, &stop, budget)?;
        steps += t.code.p();
        match t.terminal {
            Terminal::ReturnedToLevel0 | Terminal::PerpendicularReturn { .. } => {}
            Terminal::VertexSingular(v) => return Ok(SampleOutcome::Singular { vertex: v }),
            other => {
                return Ok(SampleOutcome::Unresolved {
                    reason: format!("{other:?} after {steps} steps"),
                })
            }
        }
        level = t.code.last();
        u = t.final_offset;
        match unf.field().zero_test(&u.poly.sub(&u0.poly)) {
            ZeroTest::Zero => return Ok(SampleOutcome::Periodic { steps, returns: r }),
            ZeroTest::NonZero => {}
            ZeroTest::Unknown => {
                return Ok(SampleOutcome::Unresolved {
                    reason: "no exact zero test for this angle".into(),
                })
            }
        }
    }
    Ok(SampleOutcome::Unresolved {
        reason: format!("no recurrence within {max_returns} returns"),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FoliationStats {
    pub samples: usize,
    pub seed: u64,
    pub n_cap: i64,
    /// Samples inside the positive or negative escape bracket at `n_cap`.
    pub inside_bracket: usize,
    /// Counts over samples outside the brackets.
    pub periodic: usize,
    pub singular: usize,
    pub unresolved: usize,
    pub unresolved_inside_bracket: usize,
    /// Total bracket width as a fraction of `|L|` (upper bound).
    pub bracket_fraction: f64,
    /// Start points as multiples of `cos(alpha)`, with outcomes, in sample order.
    pub outcomes: Vec<(f64, SampleOutcome)>,
}

impl FoliationStats {
    pub fn outside(&self) -> usize {
        self.samples - self.inside_bracket
    }

    pub fn unresolved_fraction(&self) -> f64 {
        if self.outside() == 0 {
            0.0
        } else {
            self.unresolved as f64 / self.outside() as f64
        }
    }

    pub fn periodic_fraction(&self) -> f64 {
        if self.outside() == 0 {
            0.0
        } else {
            self.periodic as f64 / self.outside() as f64
        }
    }
}

/// Dyadic sample `n / 2^52` in `(-1, 1)`.
fn draw(rng: &mut ChaCha8Rng) -> Q {
    const D: i128 = 1 << 52;
    Q::new(rng.gen_range(-D + 1..D), D)
}

/// Uniform start points on `L` (fixed seed), each followed until it recurs,
/// hits a vertex or leaves the band `-N_cap..N_cap`.
pub fn foliation_sample(
    cfg: &TriangleConfig,
    sample_count: usize,
    n_cap: i64,
    seed: u64,
) -> Result<FoliationStats> {
    require_theorem_range(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts: Vec<Q> = (0..sample_count).map(|_| draw(&mut rng)).collect();
    let (pos, neg) = cfg.exec().join(
        || escape_bracket_side(cfg, BandSide::Positive, n_cap),
        || escape_bracket_side(cfg, BandSide::Negative, n_cap),
    );
    let brackets: Vec<(Real, Real)> = [pos?, neg?]
        .iter()
        .map(|s| {
            let e = s.last().expect("n_cap >= 1");
            (e.lo.clone(), e.hi.clone())
        })
        .collect();
    let unf = cfg.perpendicular();
    let half = cfg.half_length()?.enc;
    let bracket_width = brackets
        .iter()
        .fold(Interval::zero(cfg.precision_bits()), |a, (lo, hi)| a.add(&hi.enc.sub(&lo.enc)));
    let bracket_fraction = bracket_width.hi_f64() / (2.0 * half.lo_f64());

    let results = cfg.exec().map(&starts, |q| -> Result<(bool, SampleOutcome)> {
        let sp = StartPoint::CosMultiple(*q);
        let x = unf.start_offset(&sp)?;
        let mut inside = false;
        for (lo, hi) in &brackets {
            if unf.cmp(lo, &x)? != Ordering::Greater && unf.cmp(&x, hi)? != Ordering::Greater {
                inside = true;
            }
        }
        let out = certify_periodic(cfg, &sp, n_cap, 16)?;
        Ok((inside, out))
    });
    let mut st = FoliationStats {
        samples: sample_count,
        seed,
        n_cap,
        inside_bracket: 0,
        periodic: 0,
        singular: 0,
        unresolved: 0,
        unresolved_inside_bracket: 0,
        bracket_fraction,
        outcomes: Vec::with_capacity(sample_count),
    };
    for (q, r) in starts.iter().zip(results) {
        let (inside, out) = r?;
        if inside {
            st.inside_bracket += 1;
            if matches!(out, SampleOutcome::Unresolved { .. }) {
                st.unresolved_inside_bracket += 1;
            }
        } else {
            match out {
                SampleOutcome::Periodic { .. } => st.periodic += 1,
                SampleOutcome::Singular { .. } => st.singular += 1,
                SampleOutcome::Unresolved { .. } => st.unresolved += 1,
            }
        }
        st.outcomes.push((*q.numer() as f64 / *q.denom() as f64, out));
    }
    Ok(st)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_triangle;

    #[test]
    fn gl_loop_at_07() {
        let cfg = make_triangle("0.7", 128).unwrap();
        let g = gl_loop_check(&cfg).unwrap();
        assert!(g.holds, "{g:?}");
    }

    #[test]
    fn samples_recur() {
        let cfg = make_triangle("0.7", 128).unwrap();
        let o = certify_periodic(&cfg, &StartPoint::CosMultiple(Q::new(-5, 9)), 20, 8).unwrap();
        assert_eq!(o, SampleOutcome::Periodic { steps: 64, returns: 2 });
        let o = certify_periodic(&cfg, &StartPoint::CosMultiple(Q::new(0, 1)), 20, 8).unwrap();
        assert_eq!(o, SampleOutcome::Singular { vertex: BaseVertex::ObtuseTop });
    }

    #[test]
    fn foliation_is_reproducible() {
        let cfg = make_triangle("0.7", 128).unwrap();
        let a = foliation_sample(&cfg, 20, 6, 7).unwrap();
        let b = foliation_sample(&cfg, 20, 6, 7).unwrap();
        assert_eq!(a.outcomes, b.outcomes);
        assert_eq!(a.samples, 20);
    }
}
