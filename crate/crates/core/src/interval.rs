//! Fixed-point interval arithmetic with outward rounding.
//!
//! An [`Interval`] encloses a real number by two integers scaled by
//! `2^-prec`. Every operation rounds the lower endpoint down and the upper
//! endpoint up, so the true value of any expression evaluated on enclosures
//! stays inside the result. Transcendental constants and functions carry an
//! explicit truncation bound.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Extra bits carried internally by the transcendental routines.
const GUARD_BITS: u32 = 40;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Interval {
    lo: BigInt,
    hi: BigInt,
    prec: u32,
}

fn shr_floor(x: &BigInt, k: u32) -> BigInt {
    // num-bigint rounds arithmetic right shifts toward negative infinity.
    x >> k
}

fn shr_ceil(x: &BigInt, k: u32) -> BigInt {
    -((-x) >> k)
}

fn div_floor(n: &BigInt, d: &BigInt) -> BigInt {
    n.div_floor(d)
}

fn div_ceil(n: &BigInt, d: &BigInt) -> BigInt {
    -((-n).div_floor(d))
}

fn big_to_f64_scaled(v: &BigInt, prec: u32) -> f64 {
    if prec > 64 {
        let shifted = v >> (prec - 64);
        shifted.to_f64().unwrap_or(f64::NAN) * 2f64.powi(-64)
    } else {
        v.to_f64().unwrap_or(f64::NAN) * 2f64.powi(-(prec as i32))
    }
}

impl Interval {
    pub fn zero(prec: u32) -> Self {
        Interval {
            lo: BigInt::zero(),
            hi: BigInt::zero(),
            prec,
        }
    }

    pub fn from_int(v: i64, prec: u32) -> Self {
        let x = BigInt::from(v) << prec;
        Interval {
            lo: x.clone(),
            hi: x,
            prec,
        }
    }

    /// Enclosure of `num / den`; `den` must be nonzero.
    pub fn from_ratio(num: &BigInt, den: &BigInt, prec: u32) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        let scaled = num << prec;
        let (a, b) = (div_floor(&scaled, den), div_ceil(&scaled, den));
        Interval {
            lo: a.clone().min(b.clone()),
            hi: a.max(b),
            prec,
        }
    }

    pub fn from_ratio_i128(r: &Ratio<i128>, prec: u32) -> Self {
        Self::from_ratio(&BigInt::from(*r.numer()), &BigInt::from(*r.denom()), prec)
    }

    /// Exact enclosure of a finite `f64`.
    pub fn from_f64(x: f64, prec: u32) -> Self {
        assert!(x.is_finite(), "non-finite f64");
        let bits = x.to_bits();
        let sign = if bits >> 63 == 0 { 1i64 } else { -1 };
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let mant = if exp == 0 {
            (bits & 0xf_ffff_ffff_ffff) << 1
        } else {
            (bits & 0xf_ffff_ffff_ffff) | 0x10_0000_0000_0000
        };
        let e = exp - 1075;
        let m = BigInt::from(sign) * BigInt::from(mant);
        if e >= 0 {
            let v = m << (e as u32);
            Self::from_ratio(&v, &BigInt::one(), prec)
        } else {
            Self::from_ratio(&m, &(BigInt::one() << ((-e) as u32)), prec)
        }
    }

    /// Interval from explicit scaled endpoints, mainly for tests.
    pub fn from_scaled(lo: BigInt, hi: BigInt, prec: u32) -> Self {
        assert!(lo <= hi, "inverted interval");
        Interval { lo, hi, prec }
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn lo_scaled(&self) -> &BigInt {
        &self.lo
    }

    pub fn hi_scaled(&self) -> &BigInt {
        &self.hi
    }

    pub fn lo_f64(&self) -> f64 {
        big_to_f64_scaled(&self.lo, self.prec)
    }

    pub fn hi_f64(&self) -> f64 {
        big_to_f64_scaled(&self.hi, self.prec)
    }

    pub fn mid_f64(&self) -> f64 {
        big_to_f64_scaled(&((&self.lo + &self.hi) >> 1u32), self.prec)
    }

    pub fn with_prec(&self, prec: u32) -> Self {
        match prec.cmp(&self.prec) {
            Ordering::Equal => self.clone(),
            Ordering::Greater => {
                let d = prec - self.prec;
                Interval {
                    lo: &self.lo << d,
                    hi: &self.hi << d,
                    prec,
                }
            }
            Ordering::Less => {
                let d = self.prec - prec;
                Interval {
                    lo: shr_floor(&self.lo, d),
                    hi: shr_ceil(&self.hi, d),
                    prec,
                }
            }
        }
    }

    fn aligned(&self, other: &Interval) -> (Interval, Interval) {
        let p = self.prec.max(other.prec);
        (self.with_prec(p), other.with_prec(p))
    }

    pub fn add(&self, other: &Interval) -> Interval {
        if self.prec == other.prec {
            return Interval {
                lo: &self.lo + &other.lo,
                hi: &self.hi + &other.hi,
                prec: self.prec,
            };
        }
        let (a, b) = self.aligned(other);
        a.add(&b)
    }

    pub fn sub(&self, other: &Interval) -> Interval {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Interval {
        Interval {
            lo: -&self.hi,
            hi: -&self.lo,
            prec: self.prec,
        }
    }

    pub fn mul(&self, other: &Interval) -> Interval {
        if self.prec != other.prec {
            let (a, b) = self.aligned(other);
            return a.mul(&b);
        }
        let p = self.prec;
        let products = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        let min = products.iter().min().unwrap();
        let max = products.iter().max().unwrap();
        Interval {
            lo: shr_floor(min, p),
            hi: shr_ceil(max, p),
            prec: p,
        }
    }

    pub fn mul_int(&self, k: i64) -> Interval {
        let k = BigInt::from(k);
        let (a, b) = (&self.lo * &k, &self.hi * &k);
        Interval {
            lo: a.clone().min(b.clone()),
            hi: a.max(b),
            prec: self.prec,
        }
    }

    /// Multiply by an exact rational.
    pub fn mul_ratio(&self, r: &Ratio<i128>) -> Interval {
        let n = BigInt::from(*r.numer());
        let d = BigInt::from(*r.denom());
        let (a, b) = (&self.lo * &n, &self.hi * &n);
        let (a, b) = (a.clone().min(b.clone()), a.max(b));
        // denominators from num-rational are always positive
        Interval {
            lo: div_floor(&a, &d),
            hi: div_ceil(&b, &d),
            prec: self.prec,
        }
    }

    /// Division by an interval that excludes zero; `None` otherwise.
    pub fn div(&self, other: &Interval) -> Option<Interval> {
        if other.contains_zero() {
            return None;
        }
        if self.prec != other.prec {
            let (a, b) = self.aligned(other);
            return a.div(&b);
        }
        let p = self.prec;
        let nums = [&self.lo << p, &self.hi << p];
        let dens = [&other.lo, &other.hi];
        let mut lo: Option<BigInt> = None;
        let mut hi: Option<BigInt> = None;
        for n in &nums {
            for d in dens {
                let f = div_floor(n, d);
                let c = div_ceil(n, d);
                lo = Some(match lo {
                    Some(l) if l <= f => l,
                    _ => f,
                });
                hi = Some(match hi {
                    Some(h) if h >= c => h,
                    _ => c,
                });
            }
        }
        Some(Interval {
            lo: lo.unwrap(),
            hi: hi.unwrap(),
            prec: p,
        })
    }

    pub fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    /// Certified sign, or `None` when the enclosure straddles zero.
    pub fn sign(&self) -> Option<Ordering> {
        if self.lo.is_positive() {
            Some(Ordering::Greater)
        } else if self.hi.is_negative() {
            Some(Ordering::Less)
        } else if self.lo.is_zero() && self.hi.is_zero() {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    /// Upper bound on `|x|` over the enclosure, as a point interval.
    pub fn abs_upper(&self) -> Interval {
        let m = self.lo.abs().max(self.hi.abs());
        Interval {
            lo: m.clone(),
            hi: m,
            prec: self.prec,
        }
    }

    /// Enclosure of `|x|`.
    pub fn abs(&self) -> Interval {
        if !self.lo.is_negative() {
            self.clone()
        } else if !self.hi.is_positive() {
            self.neg()
        } else {
            Interval {
                lo: BigInt::zero(),
                hi: self.lo.abs().max(self.hi.abs()),
                prec: self.prec,
            }
        }
    }

    pub fn width(&self) -> Interval {
        let w = &self.hi - &self.lo;
        Interval {
            lo: w.clone(),
            hi: w,
            prec: self.prec,
        }
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        let (a, b) = self.aligned(other);
        Interval {
            lo: a.lo.min(b.lo),
            hi: a.hi.max(b.hi),
            prec: a.prec,
        }
    }

    /// Intersection, `None` when disjoint.
    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let (a, b) = self.aligned(other);
        let lo = a.lo.max(b.lo);
        let hi = a.hi.min(b.hi);
        (lo <= hi).then_some(Interval { lo, hi, prec: a.prec })
    }

    /// `true` when `other` lies inside `self`.
    pub fn contains(&self, other: &Interval) -> bool {
        let (a, b) = self.aligned(other);
        a.lo <= b.lo && b.hi <= a.hi
    }

    /// Certified `self < other` (every point of self below every point of other).
    pub fn certainly_lt(&self, other: &Interval) -> bool {
        let (a, b) = self.aligned(other);
        a.hi < b.lo
    }

    /// `true` when every point of the enclosure has magnitude below `2^-k`.
    pub fn below_pow2(&self, k: i64) -> bool {
        let m = self.lo.abs().max(self.hi.abs());
        let e = self.prec as i64 - k;
        if e < 0 {
            // threshold is below the grid resolution: only an exact zero qualifies
            return m.is_zero();
        }
        m < (BigInt::one() << (e as u32))
    }

    /// `log2` of the magnitude upper bound; `-inf` for an exact zero.
    pub fn log2_upper(&self) -> f64 {
        let m = self.lo.abs().max(self.hi.abs());
        if m.is_zero() {
            return f64::NEG_INFINITY;
        }
        let bits = m.bits() as i64;
        let top = if bits > 60 {
            (&m >> ((bits - 60) as u32)).to_f64().unwrap() * 2f64.powi((bits - 60) as i32)
        } else {
            m.to_f64().unwrap()
        };
        // log2 of the scaled value; the f64 estimate is rounded up by one ulp worth
        top.log2() - self.prec as f64 + 1e-12
    }

    /// Decimal string of the lower endpoint rounded down to `digits` places.
    pub fn lo_decimal(&self, digits: u32) -> String {
        let scaled = shr_floor(&(&self.lo * BigInt::from(10u32).pow(digits)), self.prec);
        format_fixed(&scaled, digits)
    }

    /// Decimal string of the upper endpoint rounded up to `digits` places.
    pub fn hi_decimal(&self, digits: u32) -> String {
        let scaled = shr_ceil(&(&self.hi * BigInt::from(10u32).pow(digits)), self.prec);
        format_fixed(&scaled, digits)
    }

    /// Clamp the enclosure to `[-1, 1]` (used for sine and cosine).
    fn clamp_unit(mut self) -> Interval {
        let one = BigInt::one() << self.prec;
        if self.hi > one {
            self.hi = one.clone();
        }
        if self.lo < -&one {
            self.lo = -one;
        }
        self
    }

    /// Enclosures of `(sin x, cos x)`.
    pub fn sin_cos(&self) -> (Interval, Interval) {
        let p = self.prec;
        let w = p + GUARD_BITS;
        let x = self.with_prec(w);
        let half_pi = pi(w).mul_ratio(&Ratio::new(1, 2));
        let j = (self.mid_f64() / std::f64::consts::FRAC_PI_2).round() as i64;
        let y = x.sub(&half_pi.mul_int(j));
        let (s, c) = taylor_sin_cos(&y);
        let (s, c) = match j.rem_euclid(4) {
            0 => (s, c),
            1 => (c, s.neg()),
            2 => (s.neg(), c.neg()),
            _ => (c.neg(), s),
        };
        (
            s.with_prec(p).clamp_unit(),
            c.with_prec(p).clamp_unit(),
        )
    }
}

fn format_fixed(v: &BigInt, digits: u32) -> String {
    let neg = v.is_negative();
    let s = v.abs().to_string();
    let d = digits as usize;
    let padded = if s.len() <= d {
        format!("{}{}", "0".repeat(d + 1 - s.len()), s)
    } else {
        s
    };
    let (int, frac) = padded.split_at(padded.len() - d);
    let body = if d == 0 {
        int.to_string()
    } else {
        format!("{int}.{frac}")
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

/// Taylor enclosures of sine and cosine for a small argument.
fn taylor_sin_cos(y: &Interval) -> (Interval, Interval) {
    let p = y.prec;
    let mag = y.abs_upper();
    let mut sin = Interval::zero(p);
    let mut cos = Interval::zero(p);
    let mut term = Interval::from_int(1, p);
    // remainder bound mag^k / k!, tracked as an upper bound
    let mut bound = Interval::from_int(1, p);
    let target = BigInt::one();
    let mut k: u32 = 0;
    loop {
        match k % 4 {
            0 => cos = cos.add(&term),
            1 => sin = sin.add(&term),
            2 => cos = cos.sub(&term),
            _ => sin = sin.sub(&term),
        }
        k += 1;
        let kk = BigInt::from(k);
        term = term.mul(y);
        term = Interval {
            lo: div_floor(&term.lo, &kk),
            hi: div_ceil(&term.hi, &kk),
            prec: p,
        };
        let b = shr_ceil(&(&bound.hi * &mag.hi), p);
        let b = div_ceil(&b, &kk);
        bound = Interval {
            lo: b.clone(),
            hi: b,
            prec: p,
        };
        if bound.hi <= target && k > 2 {
            break;
        }
    }
    // |sin y - partial| and |cos y - partial| are both at most mag^k / k!
    let r = Interval {
        lo: -bound.hi.clone(),
        hi: bound.hi.clone(),
        prec: p,
    };
    (sin.add(&r), cos.add(&r))
}

/// Enclosure of `atan(1/k)` for an integer `k >= 2`.
fn atan_inv(k: u64, prec: u32) -> Interval {
    let one = BigInt::one() << prec;
    let k = BigInt::from(k);
    let k2 = &k * &k;
    let mut acc = Interval::zero(prec);
    let mut power = k.clone();
    let mut n: u64 = 0;
    loop {
        let den = &power * BigInt::from(2 * n + 1);
        let t = Interval {
            lo: div_floor(&one, &den),
            hi: div_ceil(&one, &den),
            prec,
        };
        if t.hi <= BigInt::one() {
            // alternating series with decreasing terms: the tail is bounded by this term
            let r = Interval {
                lo: -t.hi.clone(),
                hi: t.hi.clone(),
                prec,
            };
            return acc.add(&r);
        }
        acc = if n % 2 == 0 { acc.add(&t) } else { acc.sub(&t) };
        power = &power * &k2;
        n += 1;
    }
}

fn pi_cache() -> &'static Mutex<HashMap<u32, Interval>> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Interval>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Enclosure of pi at the given precision (Machin's formula).
pub fn pi(prec: u32) -> Interval {
    if let Some(v) = pi_cache().lock().unwrap().get(&prec) {
        return v.clone();
    }
    let w = prec + 16;
    let a = atan_inv(5, w).mul_int(16);
    let b = atan_inv(239, w).mul_int(4);
    let v = a.sub(&b).with_prec(prec);
    pi_cache().lock().unwrap().insert(prec, v.clone());
    v
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{:.17e}, {:.17e}]@{}",
            self.lo_f64(),
            self.hi_f64(),
            self.prec
        )
    }
}
