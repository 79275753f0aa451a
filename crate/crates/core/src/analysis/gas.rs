//! Two point masses on the unit interval as a right-triangle billiard.
//!
//! With `y_i = sqrt(m_i) x_i` the configuration set `0 <= x1 <= x2 <= 1`
//! becomes a right triangle with legs `sqrt(m1)`, `sqrt(m2)` and elastic
//! collisions become specular reflections.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RangeFlag {
    /// `alpha < pi/6`.
    Below,
    /// Within `1e-12` of `pi/6`.
    LowerBoundary,
    InRange,
    /// Within `1e-12` of `pi/4` (equal masses).
    UpperBoundary,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GasAngle {
    pub alpha: f64,
    pub range: RangeFlag,
}

impl GasAngle {
    /// Decimal literal accepted by the angle parser.
    pub fn spec(&self) -> String {
        format!("{:.17}", self.alpha)
    }
}

/// Smaller angle of the triangle for masses `m1`, `m2`.
pub fn gas_map(m1: f64, m2: f64) -> Result<GasAngle> {
    if !(m1 > 0.0 && m2 > 0.0 && m1.is_finite() && m2.is_finite()) {
        return Err(Error::Invalid(format!("masses must be positive, got {m1}, {m2}")));
    }
    let alpha = (m1.min(m2) / m1.max(m2)).sqrt().atan();
    let (lo, hi) = (std::f64::consts::FRAC_PI_6, std::f64::consts::FRAC_PI_4);
    let range = if (alpha - hi).abs() < 1e-12 {
        RangeFlag::UpperBoundary
    } else if (alpha - lo).abs() < 1e-12 {
        RangeFlag::LowerBoundary
    } else if alpha < lo {
        RangeFlag::Below
    } else {
        RangeFlag::InRange
    };
    Ok(GasAngle { alpha, range })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GasEvent {
    /// Particle 1 bounces off the wall at 0.
    LeftWall,
    /// Particle 2 bounces off the wall at 1.
    RightWall,
    Collision,
}

/// Positions `0 < x1 < x2 < 1` and velocities.
#[derive(Clone, Copy, Debug)]
pub struct GasState {
    pub x1: f64,
    pub x2: f64,
    pub v1: f64,
    pub v2: f64,
}

struct Embedding {
    k: f64,
    swap: bool,
    r1: f64,
    r2: f64,
}

impl Embedding {
    fn new(m1: f64, m2: f64) -> Self {
        Embedding {
            k: (m1 + m2).sqrt(),
            swap: m1 <= m2,
            r1: m1.sqrt(),
            r2: m2.sqrt(),
        }
    }

    /// Offset from the right-angle corner `(0, sqrt(m2))`, taken to the
    /// triangle with legs on the positive axes and unit hypotenuse.
    fn map(&self, dx: f64, dy: f64) -> (f64, f64) {
        if self.swap {
            (-dy / self.k, dx / self.k)
        } else {
            (dx / self.k, -dy / self.k)
        }
    }

    fn point(&self, s: &GasState) -> (f64, f64) {
        self.map(self.r1 * s.x1, self.r2 * (s.x2 - 1.0))
    }

    fn velocity(&self, s: &GasState) -> (f64, f64) {
        self.map(self.r1 * s.v1, self.r2 * s.v2)
    }

    /// Leg on the `x` axis and leg on the `y` axis.
    fn legs(&self) -> (GasEvent, GasEvent) {
        if self.swap {
            (GasEvent::LeftWall, GasEvent::RightWall)
        } else {
            (GasEvent::RightWall, GasEvent::LeftWall)
        }
    }
}

/// Event sequence of the gas, computed as a billiard in the triangle.
/// Stops early if the orbit runs into a corner.
pub fn gas_events(m1: f64, m2: f64, start: &GasState, count: usize) -> Result<Vec<GasEvent>> {
    let a = gas_map(m1, m2)?;
    if !(0.0 < start.x1 && start.x1 < start.x2 && start.x2 < 1.0) {
        return Err(Error::Invalid("positions must satisfy 0 < x1 < x2 < 1".into()));
    }
    let emb = Embedding::new(m1, m2);
    let (c, s) = (a.alpha.cos(), a.alpha.sin());
    let (mut px, mut py) = emb.point(start);
    let (mut vx, mut vy) = emb.velocity(start);
    let (on_x, on_y) = emb.legs();
    // unit normal of the hypotenuse, pointing out
    let (nx, ny) = (s, c);
    let mut out = Vec::with_capacity(count);
    const CORNER: f64 = 1e-12;
    while out.len() < count {
        let mut hits: Vec<(f64, GasEvent)> = Vec::with_capacity(3);
        if vy < 0.0 {
            hits.push((-py / vy, on_x));
        }
        if vx < 0.0 {
            hits.push((-px / vx, on_y));
        }
        let vn = nx * vx + ny * vy;
        if vn > 0.0 {
            hits.push(((s * c - nx * px - ny * py) / vn, GasEvent::Collision));
        }
        hits.sort_by(|a, b| a.0.total_cmp(&b.0));
        let Some(&(t, ev)) = hits.first() else {
            break;
        };
        if hits.len() > 1 && hits[1].0 - t < CORNER {
            break;
        }
        px += t * vx;
        py += t * vy;
        match ev {
            GasEvent::Collision => {
                let d = 2.0 * vn;
                vx -= d * nx;
                vy -= d * ny;
            }
            e if e == on_x => {
                py = 0.0;
                vy = -vy;
            }
            _ => {
                px = 0.0;
                vx = -vx;
            }
        }
        out.push(ev);
    }
    Ok(out)
}
