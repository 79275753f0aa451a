//! Triangle configuration and certified unfolding of straight trajectories.
//!
//! The flow is rotated to be vertical. The copy of the rhombus at level `k`
//! is then the base rhombus turned by `phi_k = 2k*alpha + beta` (as a set),
//! and a ray is described by its horizontal offset `u` from the copy centre.
//! Inside one copy the ray leaves through the upper chain of edges: left of
//! the top vertex through one edge, right of it through the other. Crossing
//! an edge reflects the copy, which moves the centre and changes the level by
//! one.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::angle::{parse_angle, AngleClass, AngleSpec};
use crate::coding::Code;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::exact::{Direction, Real, TrigField, TrigPoly, TrigTable, ZeroTest, Q};
use crate::interval::{pi, Interval};

pub const DEFAULT_PRECISION: u32 = 128;
pub const DEFAULT_MAX_PRECISION: u32 = 1024;
pub const DEFAULT_STEP_BUDGET: usize = 200_000;

/// The four vertices of the base rhombus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseVertex {
    /// `(-cos a, 0)`, left end of `L`.
    AcuteLeft,
    /// `(cos a, 0)`, right end of `L`.
    AcuteRight,
    /// `(0, sin a)`.
    ObtuseTop,
    /// `(0, -sin a)`.
    ObtuseBottom,
}

impl BaseVertex {
    pub const ALL: [BaseVertex; 4] = [
        BaseVertex::AcuteRight,
        BaseVertex::ObtuseTop,
        BaseVertex::AcuteLeft,
        BaseVertex::ObtuseBottom,
    ];

    pub fn coords(self, c: f64, s: f64) -> (f64, f64) {
        match self {
            BaseVertex::AcuteLeft => (-c, 0.0),
            BaseVertex::AcuteRight => (c, 0.0),
            BaseVertex::ObtuseTop => (0.0, s),
            BaseVertex::ObtuseBottom => (0.0, -s),
        }
    }

    pub fn is_acute(self) -> bool {
        matches!(self, BaseVertex::AcuteLeft | BaseVertex::AcuteRight)
    }
}

/// Half-diagonal of a copy: `P` along the long diagonal, `Q` along the short.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Letter {
    P,
    Q,
}

/// A vertex of a copy, `sign * P` or `sign * Q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct VertexRef {
    pub letter: Letter,
    pub sign: i8,
}

impl VertexRef {
    /// The base vertex this copy vertex is the image of, after `steps` crossings.
    pub fn base(self, steps: usize) -> BaseVertex {
        match self.letter {
            Letter::P if self.sign > 0 => BaseVertex::AcuteRight,
            Letter::P => BaseVertex::AcuteLeft,
            Letter::Q => {
                // each crossing adds a reflection, which flips the short diagonal
                let s = if steps % 2 == 0 { self.sign } else { -self.sign };
                if s > 0 {
                    BaseVertex::ObtuseTop
                } else {
                    BaseVertex::ObtuseBottom
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Edge {
    /// Level change, `+1` or `-1`.
    pub delta: i64,
    pub ends: [VertexRef; 2],
    /// Horizontal displacement of the copy centre across this edge.
    pub shift: Real,
    pub shift_y: f64,
}

/// Exit data of the level-`k` copy.
#[derive(Clone, Debug)]
pub struct LevelShape {
    pub level: i64,
    /// Horizontal offset of the top vertex from the centre.
    pub split: Real,
    /// Half the horizontal extent of the copy.
    pub half_width: Real,
    pub top: VertexRef,
    /// A vertical edge: every interior ray leaves through the same edge.
    pub tie: bool,
    pub left: Edge,
    pub right: Edge,
}

impl LevelShape {
    pub fn edge(&self, side: Side) -> &Edge {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Left,
    Right,
}

/// Unfolding machinery for one angle and one flow direction.
#[derive(Debug)]
pub struct Unfolder {
    field: TrigField,
    alpha_f64: f64,
    beta_f64: f64,
    period: Option<i64>,
    shapes: Mutex<HashMap<i64, Arc<LevelShape>>>,
}

impl Unfolder {
    pub fn new(alpha: &AngleSpec, direction: Direction, prec: u32, max_prec: u32) -> Result<Self> {
        let beta_f64 = direction
            .beta(64)
            .map(|b| b.mid_f64())
            .ok_or_else(|| Error::Invalid("direction cannot be evaluated".into()))?;
        let period = match (alpha.class(), direction.is_perpendicular()) {
            (AngleClass::RationalPi { den, .. }, true) => Some(den / den.gcd(&2)),
            _ => None,
        };
        Ok(Unfolder {
            field: TrigField::new(alpha, direction, prec, max_prec),
            alpha_f64: alpha.to_f64(),
            beta_f64,
            period,
            shapes: Mutex::new(HashMap::new()),
        })
    }

    pub fn field(&self) -> &TrigField {
        &self.field
    }

    pub fn direction(&self) -> &Direction {
        self.field.direction()
    }

    pub fn alpha_f64(&self) -> f64 {
        self.alpha_f64
    }

    pub fn beta_f64(&self) -> f64 {
        self.beta_f64
    }

    /// Levels whose copies are translates of the base copy, for rational
    /// angles in the perpendicular direction.
    pub fn period(&self) -> Option<i64> {
        self.period
    }

    pub fn real(&self, p: TrigPoly) -> Result<Real> {
        self.field.real(p)
    }

    pub fn shape(&self, k: i64) -> Result<Arc<LevelShape>> {
        if let Some(s) = self.shapes.lock().unwrap().get(&k) {
            return Ok(s.clone());
        }
        let s = Arc::new(self.compute_shape(k)?);
        self.shapes.lock().unwrap().insert(k, s.clone());
        Ok(s)
    }

    fn cos_term(&self, m: i64, q: Q) -> TrigPoly {
        TrigPoly::cos(m as i32, q, self.field.folded())
    }

    /// Sign of a quantity only available numerically; escalates precision.
    fn numeric_sign(&self, mmax: i32, f: impl Fn(&TrigTable) -> Interval) -> Result<Ordering> {
        let mut prec = self.field.base_prec();
        loop {
            let t = self.field.table(prec, mmax)?;
            let v = f(&t);
            if v.lo_scaled().is_positive() {
                return Ok(Ordering::Greater);
            }
            if v.hi_scaled().is_negative() {
                return Ok(Ordering::Less);
            }
            if prec >= self.field.max_prec() {
                return Err(Error::Undecided {
                    what: "level geometry".into(),
                    bits: prec,
                });
            }
            prec = (prec * 2).min(self.field.max_prec());
        }
    }

    fn compute_shape(&self, k: i64) -> Result<LevelShape> {
        let one = Q::from_integer(1);
        let half = Q::new(1, 2);
        let f = &self.field;
        let cp = self.cos_term(2 * k + 1, one);
        let cm = self.cos_term(2 * k - 1, one);
        let sp = f.sign_of(&cp, None)?.0;
        let sm = f.sign_of(&cm, None)?.0;
        let px = cp.add(&cm).scale(half);
        let qx = cp.sub(&cm).scale(half);
        let mm = (2 * k).unsigned_abs() as i32 + 4;
        let m0 = (2 * k) as i32;
        let sgn = |o: Ordering| if o == Ordering::Greater { 1i8 } else { -1 };

        if sp != Ordering::Equal && sm != Ordering::Equal {
            let (w, v, sw, sv) = if sp == sm {
                // |P_x| > |Q_x|; the top vertex is +-Q with Q_y = s cos(phi)
                let sv = f.sign_of(&self.cos_term(2 * k, one), None)?.0;
                (Letter::P, Letter::Q, sgn(sp), sgn(sv))
            } else {
                // |Q_x| > |P_x|; the top vertex is +-P with P_y = c sin(phi)
                let sv = self.numeric_sign(mm, |t| t.sin(m0).clone())?;
                (Letter::Q, Letter::P, sgn(sp), sgn(sv))
            };
            let xpoly = |l: Letter| if l == Letter::P { &px } else { &qx };
            let top = VertexRef { letter: v, sign: sv };
            let leftmost = VertexRef { letter: w, sign: -sw };
            let rightmost = VertexRef { letter: w, sign: sw };
            let split = xpoly(v).scale(Q::from_integer(sv as i128));
            let half_width = xpoly(w).scale(Q::from_integer(sw as i128));
            return Ok(LevelShape {
                level: k,
                split: f.real(split)?,
                half_width: f.real(half_width)?,
                top,
                tie: false,
                left: self.edge(k, leftmost, top)?,
                right: self.edge(k, top, rightmost)?,
            });
        }

        // One edge is vertical: P_x = +-Q_x. Only the upper slanted edge is crossed.
        let (spx, sqx) = if sm == Ordering::Equal {
            (sgn(sp), sgn(sp))
        } else {
            (sgn(sm), -sgn(sm))
        };
        // y of the right-hand P vertex minus y of the right-hand Q vertex
        let higher_p = self.numeric_sign(mm, |t| {
            let py = t.cos_alpha().mul(t.sin(m0)).mul_int(spx as i64);
            let qy = t.sin_alpha().mul(t.cos(m0)).mul_int(sqx as i64);
            py.sub(&qy)
        })?;
        let rp = VertexRef {
            letter: Letter::P,
            sign: spx,
        };
        let rq = VertexRef {
            letter: Letter::Q,
            sign: sqx,
        };
        let (hi, lo) = if higher_p == Ordering::Greater {
            (rp, rq)
        } else {
            (rq, rp)
        };
        let lo_left = VertexRef {
            letter: lo.letter,
            sign: -lo.sign,
        };
        let edge = self.edge(k, lo_left, hi)?;
        let half_width = px.scale(Q::from_integer(spx as i128));
        let hw = f.real(half_width)?;
        Ok(LevelShape {
            level: k,
            split: hw.clone(),
            half_width: hw,
            top: hi,
            tie: true,
            left: edge.clone(),
            right: edge,
        })
    }

    fn edge(&self, k: i64, a: VertexRef, b: VertexRef) -> Result<Edge> {
        let (ps, qs) = match (a.letter, b.letter) {
            (Letter::P, Letter::Q) => (a.sign, b.sign),
            (Letter::Q, Letter::P) => (b.sign, a.sign),
            _ => unreachable!("an edge joins a P vertex to a Q vertex"),
        };
        let half = Q::new(1, 2);
        let (delta, s, m_lo, m_hi, psi_m) = if ps != qs {
            (1, qs, 2 * k - 1, 2 * k + 3, 2 * k + 1)
        } else {
            (-1, ps, 2 * k - 3, 2 * k + 1, 2 * k - 1)
        };
        // outward normal is s * rot90(e) with e at angle psi; centre moves by sin(2a)
        // times it, and sin(2a) sin(psi) = (cos(psi - 2a) - cos(psi + 2a)) / 2
        let mut shift = self.cos_term(m_lo, -half * Q::from_integer(s as i128));
        shift.add_assign(&self.cos_term(m_hi, half * Q::from_integer(s as i128)));
        let a64 = self.alpha_f64;
        let psi = psi_m as f64 * a64 + self.beta_f64;
        Ok(Edge {
            delta,
            ends: [a, b],
            shift: self.field.real(shift)?,
            shift_y: s as f64 * (2.0 * a64).sin() * psi.cos(),
        })
    }

    /// Sign of `value`, from the enclosure if possible, else exactly or by escalation.
    pub fn decide(&self, enc: &Interval, poly: impl FnOnce() -> TrigPoly) -> Result<Ordering> {
        if enc.lo_scaled().is_positive() {
            return Ok(Ordering::Greater);
        }
        if enc.hi_scaled().is_negative() {
            return Ok(Ordering::Less);
        }
        Ok(self.field.sign_of(&poly(), Some(enc))?.0)
    }

    pub fn cmp(&self, a: &Real, b: &Real) -> Result<Ordering> {
        let e = a.enc.sub(&b.enc);
        self.decide(&e, || a.poly.sub(&b.poly))
    }

    /// Horizontal offset of a start point on `L` from the centre of the base copy.
    pub fn start_offset(&self, start: &StartPoint) -> Result<Real> {
        let folded = self.field.folded();
        let poly = match start {
            StartPoint::Rational(r) => TrigPoly::cos(0, *r, folded),
            StartPoint::CosMultiple(q) => {
                let h = *q * Q::new(1, 2);
                let mut p = TrigPoly::cos(1, h, folded);
                p.add_cos(-1, h, folded);
                p
            }
        };
        self.real(poly)
    }

    /// Trace the ray with horizontal offset `u0` from the centre of a copy at `level`.
    pub fn trace_offset(
        &self,
        u0: &Real,
        level: i64,
        stop: &StopRule,
        budget: usize,
    ) -> Result<Trajectory> {
        let mut k = level;
        let mut xc = self.real(TrigPoly::zero())?;
        let mut yc = 0.0f64;
        let mut code = Code::start(level);
        let mut events = Vec::new();
        let mut centre_passages = Vec::new();
        let mut centres = vec![(0.0, 0.0)];
        let terminal;
        loop {
            let n = code.p();
            if let Some(t) = stop.check_steps(n, budget) {
                terminal = t;
                break;
            }
            let sh = self.shape(k)?;
            let u_enc = u0.enc.sub(&xc.enc);
            if u_enc.contains_zero() && self.field.zero_test(&u0.poly.sub(&xc.poly)) == ZeroTest::Zero
            {
                centre_passages.push(n);
            }
            let d_enc = u_enc.sub(&sh.split.enc);
            let side = match self.decide(&d_enc, || u0.poly.sub(&xc.poly).sub(&sh.split.poly)) {
                Ok(Ordering::Less) => Side::Left,
                Ok(Ordering::Greater) => Side::Right,
                Ok(Ordering::Equal) => {
                    terminal = Terminal::VertexSingular(sh.top.base(n));
                    break;
                }
                Err(Error::Undecided { bits, .. }) => {
                    terminal = Terminal::Undecided { bits };
                    break;
                }
                Err(e) => return Err(e),
            };
            let e = sh.edge(side);
            events.push(Crossing {
                step: n,
                from_level: k,
                to_level: k + e.delta,
                side,
                edge: [e.ends[0].base(n), e.ends[1].base(n)],
                offset: d_enc,
                centre_x: xc.enc.clone(),
            });
            xc.add_assign(&e.shift);
            yc += e.shift_y;
            k += e.delta;
            code.push(k);
            centres.push((xc.mid_f64(), yc));
            if let Some(t) = stop.check_level(level, k, self.period) {
                terminal = t;
                break;
            }
        }
        Ok(Trajectory {
            start: u0.clone(),
            direction: self.direction().clone(),
            alpha: self.alpha_f64,
            beta: self.beta_f64,
            code,
            events,
            centre_passages,
            centres,
            final_offset: u0.sub(&xc),
            terminal,
        })
    }
}

/// Triangle with smaller angle `alpha`, unit hypotenuse, and a precision ladder.
#[derive(Clone, Debug)]
pub struct TriangleConfig {
    alpha: AngleSpec,
    precision_bits: u32,
    max_precision_bits: u32,
    step_budget: usize,
    in_theorem_range: bool,
    exec: Exec,
    perp: Arc<Unfolder>,
}

/// Compare `alpha` with `frac * pi`, escalating precision up to `max`.
fn cmp_pi_multiple(alpha: &AngleSpec, frac: Q, prec: u32, max: u32) -> Option<Ordering> {
    if let Some((a, b)) = alpha.affine() {
        if b.is_zero() {
            let f = num_rational::BigRational::new((*frac.numer()).into(), (*frac.denom()).into());
            return Some(a.cmp(&f));
        }
    }
    let mut p = prec;
    loop {
        if let Some(v) = alpha.eval(p) {
            let d = v.sub(&pi(p).mul_ratio(&frac));
            if d.lo_scaled().is_positive() {
                return Some(Ordering::Greater);
            }
            if d.hi_scaled().is_negative() {
                return Some(Ordering::Less);
            }
        }
        if p >= max {
            return None;
        }
        p = (p * 2).min(max);
    }
}

impl TriangleConfig {
    pub fn new(alpha: AngleSpec, precision_bits: u32, max_precision_bits: u32) -> Result<Self> {
        if precision_bits < 16 {
            return Err(Error::Invalid(format!(
                "precision {precision_bits} is below 16 bits"
            )));
        }
        let max_precision_bits = max_precision_bits.max(precision_bits);
        let undecidable = || Error::UndecidableRange(alpha.canonical());
        let lo = cmp_pi_multiple(&alpha, Q::zero(), precision_bits, max_precision_bits)
            .ok_or_else(undecidable)?;
        let hi = cmp_pi_multiple(&alpha, Q::new(1, 4), precision_bits, max_precision_bits)
            .ok_or_else(undecidable)?;
        if lo != Ordering::Greater || hi != Ordering::Less {
            return Err(Error::OutOfRange(alpha.canonical()));
        }
        let sixth = cmp_pi_multiple(&alpha, Q::new(1, 6), precision_bits, max_precision_bits)
            .ok_or_else(undecidable)?;
        let perp = Arc::new(Unfolder::new(
            &alpha,
            Direction::Perpendicular,
            precision_bits,
            max_precision_bits,
        )?);
        Ok(TriangleConfig {
            alpha,
            precision_bits,
            max_precision_bits,
            step_budget: DEFAULT_STEP_BUDGET,
            in_theorem_range: sixth == Ordering::Greater,
            exec: Exec::default(),
            perp,
        })
    }

    pub fn with_step_budget(mut self, steps: usize) -> Self {
        self.step_budget = steps;
        self
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn exec(&self) -> Exec {
        self.exec
    }

    /// Same angle at another working precision (the cap is raised if needed).
    pub fn with_precision(&self, bits: u32) -> Result<Self> {
        let cfg = TriangleConfig::new(
            self.alpha.clone(),
            bits,
            self.max_precision_bits.max(bits),
        )?;
        Ok(cfg.with_step_budget(self.step_budget).with_exec(self.exec))
    }

    pub fn alpha(&self) -> &AngleSpec {
        &self.alpha
    }

    pub fn precision_bits(&self) -> u32 {
        self.precision_bits
    }

    pub fn max_precision_bits(&self) -> u32 {
        self.max_precision_bits
    }

    pub fn step_budget(&self) -> usize {
        self.step_budget
    }

    /// `pi/6 < alpha < pi/4`, certified.
    pub fn in_theorem_range(&self) -> bool {
        self.in_theorem_range
    }

    pub fn alpha_f64(&self) -> f64 {
        self.perp.alpha_f64
    }

    /// Half-diagonals `(cos a, sin a)` at the working precision.
    pub fn half_diagonals(&self) -> Result<(Interval, Interval)> {
        let t = self.perp.field.table(self.precision_bits, 1)?;
        Ok((t.cos(1).clone(), t.sin(1).clone()))
    }

    /// Rhombus vertices in the order right, top, left, bottom.
    pub fn vertices_f64(&self) -> [(f64, f64); 4] {
        let a = self.alpha_f64();
        let (c, s) = (a.cos(), a.sin());
        BaseVertex::ALL.map(|v| v.coords(c, s))
    }

    pub fn perpendicular(&self) -> Arc<Unfolder> {
        self.perp.clone()
    }

    pub fn unfolder(&self, direction: &Direction) -> Result<Arc<Unfolder>> {
        match direction {
            Direction::Perpendicular => Ok(self.perp.clone()),
            d => Ok(Arc::new(Unfolder::new(
                &self.alpha,
                d.clone(),
                self.precision_bits,
                self.max_precision_bits,
            )?)),
        }
    }

    /// `cos(alpha)` as an exact value: the right end of `L`.
    pub fn half_length(&self) -> Result<Real> {
        self.perp.start_offset(&StartPoint::CosMultiple(Q::from_integer(1)))
    }
}

/// Build a configuration with the default precision cap.
pub fn make_triangle(alpha_spec: &str, precision_bits: u32) -> Result<TriangleConfig> {
    TriangleConfig::new(parse_angle(alpha_spec)?, precision_bits, DEFAULT_MAX_PRECISION)
}

/// A start point on `L`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StartPoint {
    /// `x = r`.
    Rational(Q),
    /// `x = q * cos(alpha)`, i.e. the fraction `q` of the half-diagonal.
    CosMultiple(Q),
}

impl StartPoint {
    pub fn left_endpoint() -> Self {
        StartPoint::CosMultiple(Q::from_integer(-1))
    }

    pub fn right_endpoint() -> Self {
        StartPoint::CosMultiple(Q::from_integer(1))
    }

    /// `"left"`, `"right"`, a rational such as `"-0.25"` or `"1/3"`, or a
    /// multiple of `cos(alpha)` written with a trailing `c`, e.g. `"0.3c"`.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        match t {
            "left" => return Ok(Self::left_endpoint()),
            "right" => return Ok(Self::right_endpoint()),
            _ => {}
        }
        let (body, cos) = match t.strip_suffix('c') {
            Some(b) => (b.trim_end_matches('*'), true),
            None => (t, false),
        };
        let a = parse_angle(body)?;
        let q = match a.affine() {
            Some((p, r)) if p.is_zero() => {
                let n = r.numer().to_i128();
                let d = r.denom().to_i128();
                match (n, d) {
                    (Some(n), Some(d)) => Q::new(n, d),
                    _ => return Err(Error::Invalid(format!("start point {t} too large"))),
                }
            }
            _ => return Err(Error::Invalid(format!("start point {t} is not rational"))),
        };
        Ok(if cos {
            StartPoint::CosMultiple(q)
        } else {
            StartPoint::Rational(q)
        })
    }

    pub fn to_f64(&self, alpha: f64) -> f64 {
        match self {
            StartPoint::Rational(r) => *r.numer() as f64 / *r.denom() as f64,
            StartPoint::CosMultiple(q) => *q.numer() as f64 / *q.denom() as f64 * alpha.cos(),
        }
    }
}

/// When to stop tracing. Levels are checked after every crossing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopRule {
    /// Stop on reaching either level of the band.
    pub band: Option<(i64, i64)>,
    /// Stop on returning to the start level.
    pub first_return: bool,
    /// Also stop on levels whose copies are translates of the base copy.
    pub perpendicular_return: bool,
    pub max_steps: Option<usize>,
}

impl StopRule {
    pub fn first_return() -> Self {
        StopRule {
            band: None,
            first_return: true,
            perpendicular_return: false,
            max_steps: None,
        }
    }

    pub fn band(lo: i64, hi: i64) -> Self {
        StopRule {
            band: Some((lo, hi)),
            ..Self::first_return()
        }
    }

    pub fn steps(n: usize) -> Self {
        StopRule {
            band: None,
            first_return: false,
            perpendicular_return: false,
            max_steps: Some(n),
        }
    }

    pub fn perpendicular_return() -> Self {
        StopRule {
            perpendicular_return: true,
            ..Self::first_return()
        }
    }

    pub fn with_band(mut self, lo: i64, hi: i64) -> Self {
        self.band = Some((lo, hi));
        self
    }

    pub fn with_steps(mut self, n: usize) -> Self {
        self.max_steps = Some(n);
        self
    }

    pub(crate) fn check_steps(&self, n: usize, budget: usize) -> Option<Terminal> {
        let limit = self.max_steps.map_or(budget, |m| m.min(budget));
        (n >= limit).then_some(Terminal::StepBudgetExhausted)
    }

    pub(crate) fn check_level(&self, start: i64, k: i64, period: Option<i64>) -> Option<Terminal> {
        let edge = |k: i64| {
            if k == 0 {
                Terminal::ReturnedToLevel0
            } else {
                Terminal::ReachedBandEdge { level: k }
            }
        };
        if self.first_return && k == start {
            return Some(edge(k));
        }
        if let Some((lo, hi)) = self.band {
            if k <= lo || k >= hi {
                return Some(edge(k));
            }
        }
        if self.perpendicular_return {
            if k == 0 {
                return Some(Terminal::ReturnedToLevel0);
            }
            if let Some(q) = period {
                if k % q == 0 {
                    return Some(Terminal::PerpendicularReturn { level: k });
                }
            }
        }
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Terminal {
    ReturnedToLevel0,
    /// Reached a level whose copy is a translate of the base copy, so the
    /// ray meets the image of `L` perpendicularly.
    PerpendicularReturn { level: i64 },
    ReachedBandEdge { level: i64 },
    VertexSingular(BaseVertex),
    Undecided { bits: u32 },
    StepBudgetExhausted,
}

/// One edge crossing of the unfolded ray.
#[derive(Clone, Debug)]
pub struct Crossing {
    /// Index of the copy being left.
    pub step: usize,
    pub from_level: i64,
    pub to_level: i64,
    pub side: Side,
    /// The crossed edge, as base-rhombus vertices.
    pub edge: [BaseVertex; 2],
    /// Enclosure of the ray offset minus the top-vertex offset.
    pub offset: Interval,
    /// Enclosure of the horizontal position of the copy centre.
    pub centre_x: Interval,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    /// Horizontal offset of the ray from the centre of the first copy.
    pub start: Real,
    pub direction: Direction,
    pub alpha: f64,
    pub beta: f64,
    pub code: Code,
    pub events: Vec<Crossing>,
    /// Copy indices whose centre the ray passes through (transparent).
    pub centre_passages: Vec<usize>,
    /// Approximate centre of every visited copy, for drawing.
    pub centres: Vec<(f64, f64)>,
    /// Offset of the ray from the centre of the last copy.
    pub final_offset: Real,
    pub terminal: Terminal,
}

/// Orientation-preserving or reversing map taking the base rhombus to a copy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Isometry {
    /// Rotation angle of the linear part, applied after the reflection.
    pub rotation: f64,
    /// Linear part includes a reflection in the horizontal axis.
    pub reflected: bool,
    pub translation: (f64, f64),
}

impl Isometry {
    pub fn apply(&self, p: (f64, f64)) -> (f64, f64) {
        let (x, y) = if self.reflected { (p.0, -p.1) } else { p };
        let (s, c) = self.rotation.sin_cos();
        (
            self.translation.0 + c * x - s * y,
            self.translation.1 + s * x + c * y,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnfoldFrame {
    pub isometry: Isometry,
    pub level: i64,
    pub step_index: usize,
}

impl UnfoldFrame {
    /// Images of the base vertices, in [`BaseVertex::ALL`] order.
    pub fn vertices(&self, alpha: f64) -> [(f64, f64); 4] {
        let (c, s) = (alpha.cos(), alpha.sin());
        BaseVertex::ALL.map(|v| self.isometry.apply(v.coords(c, s)))
    }

    pub fn vertex(&self, alpha: f64, v: BaseVertex) -> (f64, f64) {
        self.isometry.apply(v.coords(alpha.cos(), alpha.sin()))
    }
}

impl Trajectory {
    pub fn frames(&self) -> Vec<UnfoldFrame> {
        self.code
            .entries()
            .iter()
            .enumerate()
            .map(|(n, &k)| UnfoldFrame {
                isometry: Isometry {
                    rotation: 2.0 * k as f64 * self.alpha + self.beta,
                    reflected: n % 2 == 1,
                    translation: self.centres[n],
                },
                level: k,
                step_index: n,
            })
            .collect()
    }

    /// Horizontal position of the ray in the unfolded plane.
    pub fn x_f64(&self) -> f64 {
        self.start.mid_f64()
    }
}

/// Trace the straight ray from `start` on `L` in the given direction.
///
/// Crossing decisions that cannot be certified at the precision cap end the
/// trajectory with [`Terminal::Undecided`]; a ray through a rhombus vertex
/// ends with [`Terminal::VertexSingular`]. Rays may start at an endpoint of
/// `L`; they are then continued into the rhombus.
pub fn trace_ray(
    cfg: &TriangleConfig,
    start: &StartPoint,
    direction: &Direction,
    stop: &StopRule,
) -> Result<Trajectory> {
    let unf = cfg.unfolder(direction)?;
    if let StartPoint::Rational(r) = start {
        let half = cfg.half_length()?;
        let x = cfg.perp.real(TrigPoly::constant(r.abs()))?;
        if cfg.perp.cmp(&x, &half)? == Ordering::Greater {
            return Err(Error::Invalid(format!("start point {r} is outside L")));
        }
    }
    if let StartPoint::CosMultiple(q) = start {
        if q.abs() > Q::from_integer(1) {
            return Err(Error::Invalid(format!("start point {q}*cos(alpha) is outside L")));
        }
    }
    let u0 = unf.start_offset(start)?;
    unf.trace_offset(&u0, 0, stop, cfg.step_budget)
}
