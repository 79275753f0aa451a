//! Exact coordinates for the unfolding.
//!
//! Every horizontal coordinate produced by the unfolding with a vertical flow
//! is a rational combination of `cos(m*alpha + beta)` plus a rational
//! constant. [`TrigPoly`] stores such a combination symbolically, [`Real`]
//! pairs it with a numeric enclosure, and [`TrigField`] decides signs: first
//! from the enclosure, then by an exact zero test where the angle allows one,
//! then by re-evaluating at doubled precision up to the cap.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::angle::{AngleClass, AngleSpec};
use crate::error::{Error, Result};
use crate::interval::{pi, Interval};

pub type Q = Ratio<i128>;

/// Guard bits used when building trig tables.
const TABLE_GUARD: u32 = 32;

/// Largest cyclotomic order for which the exact zero test is attempted.
const MAX_CYCLOTOMIC_ORDER: i64 = 20_000;

/// `constant + sum_m terms[m] * cos(m*alpha + beta)`.
///
/// With `beta = 0` the basis is folded: negative indices are mirrored and
/// index 0 merges into the constant, which makes the representation unique.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct TrigPoly {
    constant: Q,
    terms: BTreeMap<i32, Q>,
}

impl TrigPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(q: Q) -> Self {
        TrigPoly {
            constant: q,
            terms: BTreeMap::new(),
        }
    }

    /// `q * cos(m*alpha + beta)`, folded when `beta` is zero.
    pub fn cos(m: i32, q: Q, folded: bool) -> Self {
        let mut p = TrigPoly::zero();
        p.add_cos(m, q, folded);
        p
    }

    pub fn add_cos(&mut self, m: i32, q: Q, folded: bool) {
        if q.is_zero() {
            return;
        }
        if folded && m == 0 {
            self.constant += q;
            return;
        }
        let m = if folded { m.abs() } else { m };
        let e = self.terms.entry(m).or_insert_with(Q::zero);
        *e += q;
        if e.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn constant_term(&self) -> Q {
        self.constant
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, Q)> + '_ {
        self.terms.iter().map(|(&m, &q)| (m, q))
    }

    pub fn is_formal_zero(&self) -> bool {
        self.constant.is_zero() && self.terms.is_empty()
    }

    pub fn max_index(&self) -> i32 {
        self.terms.keys().map(|m| m.abs()).max().unwrap_or(0)
    }

    pub fn add(&self, other: &TrigPoly) -> TrigPoly {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn add_assign(&mut self, other: &TrigPoly) {
        self.constant += other.constant;
        for (&m, &q) in &other.terms {
            // other is already canonical, so no folding is needed
            let e = self.terms.entry(m).or_insert_with(Q::zero);
            *e += q;
            if e.is_zero() {
                self.terms.remove(&m);
            }
        }
    }

    pub fn neg(&self) -> TrigPoly {
        self.scale(-Q::one())
    }

    pub fn sub(&self, other: &TrigPoly) -> TrigPoly {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: Q) -> TrigPoly {
        if k.is_zero() {
            return TrigPoly::zero();
        }
        TrigPoly {
            constant: self.constant * k,
            terms: self.terms.iter().map(|(&m, &q)| (m, q * k)).collect(),
        }
    }

    pub fn eval(&self, table: &TrigTable) -> Interval {
        let mut acc = Interval::from_ratio_i128(&self.constant, table.prec);
        for (&m, q) in &self.terms {
            acc = acc.add(&table.cos(m).mul_ratio(q));
        }
        acc
    }
}

fn fmt_q(q: &Q) -> String {
    if q.denom() == &1 {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

fn parse_q(s: &str) -> Option<Q> {
    match s.split_once('/') {
        Some((n, d)) => {
            let n: i128 = n.trim().parse().ok()?;
            let d: i128 = d.trim().parse().ok()?;
            (d != 0).then(|| Q::new(n, d))
        }
        None => Some(Q::from_integer(s.trim().parse().ok()?)),
    }
}

impl fmt::Display for TrigPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_formal_zero() {
            return f.write_str("0");
        }
        let mut first = true;
        let mut put = |f: &mut fmt::Formatter<'_>, q: Q, tail: String| -> fmt::Result {
            let neg = q < Q::zero();
            let a = q.abs();
            let sign = match (first, neg) {
                (true, true) => "-",
                (true, false) => "",
                (false, true) => " - ",
                (false, false) => " + ",
            };
            first = false;
            if tail.is_empty() {
                write!(f, "{sign}{}", fmt_q(&a))
            } else if a.is_one() {
                write!(f, "{sign}{tail}")
            } else {
                write!(f, "{sign}{}*{tail}", fmt_q(&a))
            }
        };
        if !self.constant.is_zero() {
            put(f, self.constant, String::new())?;
        }
        for (&m, &q) in &self.terms {
            put(f, q, format!("cos[{m}]"))?;
        }
        Ok(())
    }
}

/// Serialized form: `{"constant": "p/q", "cos": {"m": "p/q", ...}}`.
#[derive(Serialize, Deserialize)]
struct TrigPolyRepr {
    constant: String,
    cos: BTreeMap<i32, String>,
}

impl Serialize for TrigPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TrigPolyRepr {
            constant: fmt_q(&self.constant),
            cos: self.terms.iter().map(|(&m, q)| (m, fmt_q(q))).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TrigPoly {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = TrigPolyRepr::deserialize(d)?;
        let bad = |s: &str| serde::de::Error::custom(format!("bad rational '{s}'"));
        let constant = parse_q(&r.constant).ok_or_else(|| bad(&r.constant))?;
        let mut terms = BTreeMap::new();
        for (m, s) in r.cos {
            let q = parse_q(&s).ok_or_else(|| bad(&s))?;
            if !q.is_zero() {
                terms.insert(m, q);
            }
        }
        Ok(TrigPoly { constant, terms })
    }
}

/// Enclosures of `cos(m*alpha + beta)` and `sin(m*alpha + beta)` for
/// `|m| <= mmax` at one precision.
#[derive(Debug)]
pub struct TrigTable {
    pub prec: u32,
    mmax: i32,
    cos: Vec<Interval>,
    sin: Vec<Interval>,
    cos_a: Interval,
    sin_a: Interval,
}

impl TrigTable {
    pub fn cos_alpha(&self) -> &Interval {
        &self.cos_a
    }

    pub fn sin_alpha(&self) -> &Interval {
        &self.sin_a
    }

    pub fn mmax(&self) -> i32 {
        self.mmax
    }

    pub fn cos(&self, m: i32) -> &Interval {
        &self.cos[(m + self.mmax) as usize]
    }

    pub fn sin(&self, m: i32) -> &Interval {
        &self.sin[(m + self.mmax) as usize]
    }
}

/// Symbolic value with a numeric enclosure at the working precision.
#[derive(Clone, Debug)]
pub struct Real {
    pub poly: TrigPoly,
    pub enc: Interval,
}

impl Real {
    pub fn add(&self, o: &Real) -> Real {
        Real {
            poly: self.poly.add(&o.poly),
            enc: self.enc.add(&o.enc),
        }
    }

    pub fn sub(&self, o: &Real) -> Real {
        Real {
            poly: self.poly.sub(&o.poly),
            enc: self.enc.sub(&o.enc),
        }
    }

    pub fn neg(&self) -> Real {
        Real {
            poly: self.poly.neg(),
            enc: self.enc.neg(),
        }
    }

    pub fn scale(&self, q: Q) -> Real {
        Real {
            poly: self.poly.scale(q),
            enc: self.enc.mul_ratio(&q),
        }
    }

    pub fn add_assign(&mut self, o: &Real) {
        self.poly.add_assign(&o.poly);
        self.enc = self.enc.add(&o.enc);
    }

    pub fn mid_f64(&self) -> f64 {
        self.enc.mid_f64()
    }
}

/// Outcome of the exact zero test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZeroTest {
    Zero,
    NonZero,
    Unknown,
}

#[derive(Debug)]
enum Algebra {
    /// `cos(alpha)` is transcendental: the folded basis is linearly independent.
    Independent,
    /// `alpha = r*pi/q`; values live in the cyclotomic field of order `n = 2q`.
    Cyclotomic { r: i64, n: usize, phi: Vec<BigInt> },
    Opaque,
}

/// Flow direction: perpendicular to `L`, or at angle `theta` to it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Direction {
    Perpendicular,
    Angle(AngleSpec),
}

impl Direction {
    pub fn from_theta(theta: AngleSpec) -> Direction {
        if theta.same_affine(&AngleSpec::right_angle()) {
            Direction::Perpendicular
        } else {
            Direction::Angle(theta)
        }
    }

    pub fn is_perpendicular(&self) -> bool {
        matches!(self, Direction::Perpendicular)
    }

    /// Canonical angle text of the direction.
    pub fn canonical(&self) -> String {
        match self {
            Direction::Perpendicular => "pi/2".into(),
            Direction::Angle(a) => a.canonical(),
        }
    }

    /// Enclosure of `beta = pi/2 - theta`, the rotation taking the flow to vertical.
    pub fn beta(&self, prec: u32) -> Option<Interval> {
        match self {
            Direction::Perpendicular => Some(Interval::zero(prec)),
            Direction::Angle(t) => {
                let half_pi = pi(prec).mul_ratio(&Ratio::new(1, 2));
                Some(half_pi.sub(&t.eval(prec)?))
            }
        }
    }
}

/// Arithmetic context for one angle and one flow direction.
#[derive(Debug)]
pub struct TrigField {
    alpha: AngleSpec,
    direction: Direction,
    algebra: Algebra,
    base_prec: u32,
    max_prec: u32,
    tables: Mutex<HashMap<u32, Arc<TrigTable>>>,
}

impl TrigField {
    pub fn new(alpha: &AngleSpec, direction: Direction, base_prec: u32, max_prec: u32) -> Self {
        let algebra = if direction.is_perpendicular() {
            match alpha.class() {
                AngleClass::Transcendental => Algebra::Independent,
                AngleClass::RationalPi { num, den } if den <= MAX_CYCLOTOMIC_ORDER / 2 => {
                    let n = (2 * den) as usize;
                    Algebra::Cyclotomic {
                        r: num,
                        n,
                        phi: cyclotomic(n),
                    }
                }
                _ => Algebra::Opaque,
            }
        } else {
            Algebra::Opaque
        };
        TrigField {
            alpha: alpha.clone(),
            direction,
            algebra,
            base_prec,
            max_prec: max_prec.max(base_prec),
            tables: Mutex::new(HashMap::new()),
        }
    }

    pub fn alpha(&self) -> &AngleSpec {
        &self.alpha
    }

    pub fn direction(&self) -> &Direction {
        &self.direction
    }

    /// `true` when the basis is folded (`beta = 0`).
    pub fn folded(&self) -> bool {
        self.direction.is_perpendicular()
    }

    pub fn base_prec(&self) -> u32 {
        self.base_prec
    }

    pub fn max_prec(&self) -> u32 {
        self.max_prec
    }

    pub fn has_exact_test(&self) -> bool {
        !matches!(self.algebra, Algebra::Opaque)
    }

    /// Trig table at `prec` covering at least `|m| <= mmax`.
    pub fn table(&self, prec: u32, mmax: i32) -> Result<Arc<TrigTable>> {
        {
            let tables = self.tables.lock().unwrap();
            if let Some(t) = tables.get(&prec) {
                if t.mmax >= mmax {
                    return Ok(t.clone());
                }
            }
        }
        let old = self
            .tables
            .lock()
            .unwrap()
            .get(&prec)
            .map(|t| t.mmax)
            .unwrap_or(0);
        let want = mmax.max(2 * old).max(16);
        let t = Arc::new(self.build_table(prec, want)?);
        let mut tables = self.tables.lock().unwrap();
        let entry = tables.entry(prec).or_insert_with(|| t.clone());
        if entry.mmax < t.mmax {
            *entry = t.clone();
        }
        Ok(entry.clone())
    }

    fn build_table(&self, prec: u32, mmax: i32) -> Result<TrigTable> {
        let w = prec + TABLE_GUARD;
        let undecided = || Error::Undecided {
            what: format!("evaluating {}", self.alpha),
            bits: prec,
        };
        let a = self.alpha.eval(w).ok_or_else(undecided)?;
        let b = self.direction.beta(w).ok_or_else(undecided)?;
        let n = (2 * mmax + 1) as usize;
        let mut cos = Vec::with_capacity(n);
        let mut sin = Vec::with_capacity(n);
        for m in -mmax..=mmax {
            let x = a.mul_int(m as i64).add(&b);
            let (s, c) = x.sin_cos();
            cos.push(c.with_prec(prec));
            sin.push(s.with_prec(prec));
        }
        let (sa, ca) = a.sin_cos();
        Ok(TrigTable {
            prec,
            mmax,
            cos,
            sin,
            cos_a: ca.with_prec(prec),
            sin_a: sa.with_prec(prec),
        })
    }

    pub fn eval(&self, p: &TrigPoly, prec: u32) -> Result<Interval> {
        Ok(p.eval(&*self.table(prec, p.max_index())?))
    }

    pub fn real(&self, p: TrigPoly) -> Result<Real> {
        let enc = self.eval(&p, self.base_prec)?;
        Ok(Real { poly: p, enc })
    }

    /// Exact zero test for the value of `p`.
    pub fn zero_test(&self, p: &TrigPoly) -> ZeroTest {
        match &self.algebra {
            Algebra::Independent => {
                if p.is_formal_zero() {
                    ZeroTest::Zero
                } else {
                    ZeroTest::NonZero
                }
            }
            Algebra::Cyclotomic { r, n, phi } => cyclotomic_zero(p, *r, *n, phi),
            Algebra::Opaque => {
                if p.is_formal_zero() {
                    ZeroTest::Zero
                } else {
                    ZeroTest::Unknown
                }
            }
        }
    }

    /// Certified sign of `p`, starting from an optional enclosure at the base
    /// precision. Returns the sign and the precision that settled it.
    pub fn sign_of(&self, p: &TrigPoly, enc: Option<&Interval>) -> Result<(Ordering, u32)> {
        let mut prec = self.base_prec;
        let mut e = match enc {
            Some(e) => e.clone(),
            None => self.eval(p, prec)?,
        };
        let mut tested = false;
        loop {
            if e.lo_scaled().is_positive() {
                return Ok((Ordering::Greater, prec));
            }
            if e.hi_scaled().is_negative() {
                return Ok((Ordering::Less, prec));
            }
            if !tested {
                tested = true;
                if self.zero_test(p) == ZeroTest::Zero {
                    return Ok((Ordering::Equal, prec));
                }
            }
            if prec >= self.max_prec {
                return Err(Error::Undecided {
                    what: format!("sign of {p}"),
                    bits: prec,
                });
            }
            prec = (prec * 2).min(self.max_prec);
            e = self.eval(p, prec)?;
        }
    }

    pub fn sign(&self, r: &Real) -> Result<Ordering> {
        Ok(self.sign_of(&r.poly, Some(&r.enc))?.0)
    }

    /// Certified comparison of two values.
    pub fn cmp(&self, a: &Real, b: &Real) -> Result<Ordering> {
        self.sign(&a.sub(b))
    }
}

fn to_big(q: &Q) -> BigRational {
    BigRational::new(BigInt::from(*q.numer()), BigInt::from(*q.denom()))
}

fn cyclotomic_zero(p: &TrigPoly, r: i64, n: usize, phi: &[BigInt]) -> ZeroTest {
    let ni = n as i64;
    let mut v = vec![BigRational::zero(); n];
    v[0] += to_big(&p.constant);
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    for (m, q) in p.terms() {
        let c = to_big(&q) * &half;
        let e = (m as i64 * r).rem_euclid(ni) as usize;
        let f = (-(m as i64) * r).rem_euclid(ni) as usize;
        v[e] += &c;
        v[f] += &c;
    }
    // reduce modulo the monic polynomial phi
    let d = phi.len() - 1;
    for i in (d..n).rev() {
        if v[i].is_zero() {
            continue;
        }
        let c = v[i].clone();
        for (j, pj) in phi.iter().enumerate() {
            if !pj.is_zero() {
                v[i - d + j] -= &c * BigRational::from_integer(pj.clone());
            }
        }
    }
    if v.iter().all(|x| x.is_zero()) {
        ZeroTest::Zero
    } else {
        ZeroTest::NonZero
    }
}

fn cyclotomic_cache() -> &'static Mutex<HashMap<usize, Vec<BigInt>>> {
    static C: OnceLock<Mutex<HashMap<usize, Vec<BigInt>>>> = OnceLock::new();
    C.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Coefficients (constant term first) of the `n`-th cyclotomic polynomial.
pub fn cyclotomic(n: usize) -> Vec<BigInt> {
    if let Some(v) = cyclotomic_cache().lock().unwrap().get(&n) {
        return v.clone();
    }
    let mut p = vec![BigInt::zero(); n + 1];
    p[0] = -BigInt::one();
    p[n] = BigInt::one();
    for d in 1..n {
        if n % d == 0 {
            p = poly_div_exact(&p, &cyclotomic(d));
        }
    }
    cyclotomic_cache().lock().unwrap().insert(n, p.clone());
    p
}

/// Quotient of integer polynomials when the divisor is monic and divides exactly.
fn poly_div_exact(num: &[BigInt], den: &[BigInt]) -> Vec<BigInt> {
    let mut r = num.to_vec();
    let dn = den.len() - 1;
    let qn = r.len() - 1 - dn;
    let mut q = vec![BigInt::zero(); qn + 1];
    for i in (0..=qn).rev() {
        let c = r[i + dn].clone();
        if c.is_zero() {
            continue;
        }
        for (j, dj) in den.iter().enumerate() {
            r[i + j] -= &c * dj;
        }
        q[i] = c;
    }
    debug_assert!(r.iter().all(|x| x.is_zero()));
    q
}

/// Euler's totient, used by tests and diagnostics.
pub fn totient(n: usize) -> usize {
    (1..=n).filter(|k| k.gcd(&n) == 1).count()
}
