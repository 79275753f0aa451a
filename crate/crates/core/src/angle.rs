//! Angle expressions: parsing, canonical printing and evaluation at any
//! precision.
//!
//! Grammar (whitespace is ignored):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | primary
//! primary := number | "pi" | "π" | '(' expr ')'
//! number  := digits ['.' digits] | '.' digits
//! ```
//!
//! Expressions that are affine in pi (`a*pi + b` with rational `a`, `b`) are
//! reduced symbolically; the affine form decides whether `alpha/pi` is
//! rational and whether `cos(alpha)` is provably transcendental.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::interval::{pi, Interval};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Expr {
    Num(BigRational),
    Pi,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AngleKind {
    RationalMultipleOfPi,
    DecimalLiteral,
    Expression,
}

/// What is known about the number-theoretic nature of an angle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AngleClass {
    /// `alpha = (num/den) * pi` in lowest terms, `den > 0`.
    RationalPi { num: i64, den: i64 },
    /// `alpha = a*pi + b` with rational `b != 0`; `cos(alpha)` is then transcendental.
    Transcendental,
    /// No usable algebraic information.
    Unknown,
}

/// A parsed angle that can be re-evaluated at arbitrary precision.
#[derive(Clone, Debug)]
pub struct AngleSpec {
    source: String,
    kind: AngleKind,
    expr: Expr,
    /// `(a, b)` with value `a*pi + b`, when the expression is affine in pi.
    affine: Option<(BigRational, BigRational)>,
}

impl PartialEq for AngleSpec {
    fn eq(&self, other: &Self) -> bool {
        self.canonical() == other.canonical()
    }
}

impl Eq for AngleSpec {}

struct Parser<'a> {
    chars: Vec<(usize, char)>,
    pos: usize,
    src: &'a str,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            chars: src.char_indices().collect(),
            pos: 0,
            src,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].1.is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).map(|&(_, c)| c)
    }

    fn offset(&self) -> usize {
        self.chars
            .get(self.pos)
            .map(|&(i, _)| i)
            .unwrap_or(self.src.len())
    }

    fn error(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            position: self.offset(),
            message: msg.into(),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(c) = self.peek() {
            match c {
                '+' => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                '-' => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(c) = self.peek() {
            match c {
                '*' => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                '/' => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek() == Some('-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some('π') => {
                self.pos += 1;
                Ok(Expr::Pi)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_alphabetic() => {
                let start = self.pos;
                let mut word = String::new();
                while let Some(&(_, ch)) = self.chars.get(self.pos) {
                    if ch.is_alphanumeric() {
                        word.push(ch);
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                if word.eq_ignore_ascii_case("pi") {
                    Ok(Expr::Pi)
                } else {
                    self.pos = start;
                    Err(self.error(format!("unknown identifier '{word}'")))
                }
            }
            Some(c) => Err(self.error(format!("unexpected character '{c}'"))),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let mut int = String::new();
        let mut frac = String::new();
        while let Some(&(_, c)) = self.chars.get(self.pos) {
            if c.is_ascii_digit() {
                int.push(c);
                self.pos += 1;
            } else {
                break;
            }
        }
        if let Some(&(_, '.')) = self.chars.get(self.pos) {
            self.pos += 1;
            while let Some(&(_, c)) = self.chars.get(self.pos) {
                if c.is_ascii_digit() {
                    frac.push(c);
                    self.pos += 1;
                } else {
                    break;
                }
            }
            if frac.is_empty() {
                self.pos = start;
                return Err(self.error("malformed number"));
            }
        }
        if int.is_empty() && frac.is_empty() {
            self.pos = start;
            return Err(self.error("malformed number"));
        }
        let digits: BigInt = format!("{int}{frac}").parse().expect("digits");
        let den = BigInt::from(10u32).pow(frac.len() as u32);
        Ok(Expr::Num(BigRational::new(digits, den)))
    }
}

/// Affine form `a*pi + b`, or `None` once the expression leaves that family.
fn affine(e: &Expr) -> Option<(BigRational, BigRational)> {
    let zero = BigRational::zero;
    Some(match e {
        Expr::Num(v) => (zero(), v.clone()),
        Expr::Pi => (BigRational::one(), zero()),
        Expr::Neg(x) => {
            let (a, b) = affine(x)?;
            (-a, -b)
        }
        Expr::Add(x, y) => {
            let (a, b) = affine(x)?;
            let (c, d) = affine(y)?;
            (a + c, b + d)
        }
        Expr::Sub(x, y) => {
            let (a, b) = affine(x)?;
            let (c, d) = affine(y)?;
            (a - c, b - d)
        }
        Expr::Mul(x, y) => {
            let (a, b) = affine(x)?;
            let (c, d) = affine(y)?;
            if a.is_zero() {
                (&b * &c, b * d)
            } else if c.is_zero() {
                (a * &d, b * d)
            } else {
                return None;
            }
        }
        Expr::Div(x, y) => {
            let (a, b) = affine(x)?;
            let (c, d) = affine(y)?;
            if !c.is_zero() || d.is_zero() {
                return None;
            }
            (a / &d, b / d)
        }
    })
}

fn has_zero_division(e: &Expr) -> bool {
    match e {
        Expr::Num(_) | Expr::Pi => false,
        Expr::Neg(x) => has_zero_division(x),
        Expr::Add(x, y) | Expr::Sub(x, y) | Expr::Mul(x, y) => {
            has_zero_division(x) || has_zero_division(y)
        }
        Expr::Div(x, y) => {
            has_zero_division(x)
                || has_zero_division(y)
                || matches!(affine(y), Some((a, b)) if a.is_zero() && b.is_zero())
        }
    }
}

/// Terminating decimal representation, if the denominator allows one.
fn decimal_string(v: &BigRational) -> Option<String> {
    let mut den = v.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let (mut twos, mut fives) = (0u32, 0u32);
    while (&den % &two).is_zero() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return None;
    }
    let digits = twos.max(fives);
    let scaled = v * BigRational::from_integer(BigInt::from(10u32).pow(digits));
    let n = scaled.to_integer();
    let neg = n.is_negative();
    let s = n.abs().to_string();
    let d = digits as usize;
    let s = if s.len() <= d {
        format!("{}{}", "0".repeat(d + 1 - s.len()), s)
    } else {
        s
    };
    let (i, f) = s.split_at(s.len() - d);
    let body = if d == 0 {
        i.to_string()
    } else {
        format!("{i}.{f}")
    };
    Some(if neg { format!("-{body}") } else { body })
}

fn rational_string(v: &BigRational) -> String {
    decimal_string(v).unwrap_or_else(|| format!("{}/{}", v.numer(), v.denom()))
}

fn pi_term_string(a: &BigRational) -> String {
    let n = a.numer().abs();
    let d = a.denom();
    let sign = if a.is_negative() { "-" } else { "" };
    let num = if n.is_one() {
        "pi".to_string()
    } else {
        format!("{n}*pi")
    };
    if d.is_one() {
        format!("{sign}{num}")
    } else {
        format!("{sign}{num}/{d}")
    }
}

fn expr_string(e: &Expr) -> String {
    match e {
        Expr::Num(v) => rational_string(v),
        Expr::Pi => "pi".into(),
        Expr::Neg(x) => format!("(-{})", expr_string(x)),
        Expr::Add(x, y) => format!("({} + {})", expr_string(x), expr_string(y)),
        Expr::Sub(x, y) => format!("({} - {})", expr_string(x), expr_string(y)),
        Expr::Mul(x, y) => format!("({}*{})", expr_string(x), expr_string(y)),
        Expr::Div(x, y) => format!("({}/{})", expr_string(x), expr_string(y)),
    }
}

fn eval(e: &Expr, prec: u32) -> Option<Interval> {
    Some(match e {
        Expr::Num(v) => Interval::from_ratio(v.numer(), v.denom(), prec),
        Expr::Pi => pi(prec),
        Expr::Neg(x) => eval(x, prec)?.neg(),
        Expr::Add(x, y) => eval(x, prec)?.add(&eval(y, prec)?),
        Expr::Sub(x, y) => eval(x, prec)?.sub(&eval(y, prec)?),
        Expr::Mul(x, y) => eval(x, prec)?.mul(&eval(y, prec)?),
        Expr::Div(x, y) => eval(x, prec)?.div(&eval(y, prec)?)?,
    })
}

/// Parse an angle expression.
pub fn parse_angle(text: &str) -> Result<AngleSpec> {
    let mut p = Parser::new(text);
    if p.peek().is_none() {
        return Err(p.error("empty angle expression"));
    }
    let expr = p.expr()?;
    if p.peek().is_some() {
        return Err(p.error(format!(
            "unexpected trailing input '{}'",
            p.chars[p.pos].1
        )));
    }
    if has_zero_division(&expr) {
        return Err(Error::Parse {
            position: 0,
            message: "division by zero".into(),
        });
    }
    let affine = affine(&expr);
    let kind = match (&expr, &affine) {
        (Expr::Num(_), _) => AngleKind::DecimalLiteral,
        (_, Some((_, b))) if b.is_zero() => AngleKind::RationalMultipleOfPi,
        _ => AngleKind::Expression,
    };
    Ok(AngleSpec {
        source: text.to_string(),
        kind,
        expr,
        affine,
    })
}

impl AngleSpec {
    /// Exact right angle, the default perpendicular direction.
    pub fn right_angle() -> Self {
        parse_angle("pi/2").expect("static")
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn kind(&self) -> AngleKind {
        self.kind
    }

    /// Affine coefficients `(a, b)` of `a*pi + b`.
    pub fn affine(&self) -> Option<&(BigRational, BigRational)> {
        self.affine.as_ref()
    }

    pub fn canonical(&self) -> String {
        match &self.affine {
            Some((a, b)) if a.is_zero() => rational_string(b),
            Some((a, b)) if b.is_zero() => pi_term_string(a),
            Some((a, b)) => {
                let bs = rational_string(&b.abs());
                let op = if b.is_negative() { "-" } else { "+" };
                format!("{} {op} {bs}", pi_term_string(a))
            }
            None => expr_string(&self.expr),
        }
    }

    pub fn class(&self) -> AngleClass {
        match &self.affine {
            Some((a, b)) if b.is_zero() => {
                match (a.numer().to_i64(), a.denom().to_i64()) {
                    (Some(num), Some(den)) => AngleClass::RationalPi { num, den },
                    _ => AngleClass::Unknown,
                }
            }
            Some(_) => AngleClass::Transcendental,
            None => AngleClass::Unknown,
        }
    }

    /// Enclosure of the angle; `None` when a divisor cannot be separated from
    /// zero at this precision.
    pub fn eval(&self, prec: u32) -> Option<Interval> {
        if let Some((a, b)) = &self.affine {
            let pa = pi(prec + 8).mul(&Interval::from_ratio(a.numer(), a.denom(), prec + 8));
            let v = pa.add(&Interval::from_ratio(b.numer(), b.denom(), prec + 8));
            return Some(v.with_prec(prec));
        }
        eval(&self.expr, prec)
    }

    pub fn to_f64(&self) -> f64 {
        self.eval(80).map(|v| v.mid_f64()).unwrap_or(f64::NAN)
    }

    /// `true` when the two specs denote the same affine value.
    pub fn same_affine(&self, other: &AngleSpec) -> bool {
        matches!((&self.affine, &other.affine), (Some(x), Some(y)) if x == y)
    }
}

impl fmt::Display for AngleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

impl std::str::FromStr for AngleSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_angle(s)
    }
}

impl Serialize for AngleSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.canonical())
    }
}

impl<'de> Deserialize<'de> for AngleSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_angle(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rational_multiple_of_pi() {
        let a = parse_angle("pi/5").unwrap();
        assert_eq!(a.kind(), AngleKind::RationalMultipleOfPi);
        assert_eq!(a.canonical(), "pi/5");
        assert_eq!(a.class(), AngleClass::RationalPi { num: 1, den: 5 });
        let b = parse_angle(" 2 * π / 10 ").unwrap();
        assert_eq!(b.canonical(), "pi/5");
        assert_eq!(parse_angle("4*pi/14").unwrap().canonical(), "2*pi/7");
    }

    #[test]
    fn decimal_literal_is_normalised() {
        let a = parse_angle("0.70000").unwrap();
        assert_eq!(a.kind(), AngleKind::DecimalLiteral);
        assert_eq!(a.canonical(), "0.7");
        assert_eq!(a.class(), AngleClass::Transcendental);
        assert_eq!(parse_angle(".5").unwrap().canonical(), "0.5");
    }

    #[test]
    fn unknown_identifier_reports_position() {
        match parse_angle("2*pi/7 + x") {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 9),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_inputs() {
        for bad in ["", "pi/", "(pi", "3.", "pi pi", "1/0", "pi/(pi-pi)"] {
            assert!(parse_angle(bad).is_err(), "{bad:?} should fail");
        }
    }

    #[test]
    fn mixed_affine_expression() {
        let a = parse_angle("2*pi/7 + 1/10").unwrap();
        assert_eq!(a.kind(), AngleKind::Expression);
        assert_eq!(a.canonical(), "2*pi/7 + 0.1");
        assert_eq!(a.class(), AngleClass::Transcendental);
        let v = a.eval(100).unwrap();
        let expected = 2.0 * std::f64::consts::PI / 7.0 + 0.1;
        assert!((v.mid_f64() - expected).abs() < 1e-15);
        let b = parse_angle("1/3 - pi/12").unwrap();
        assert_eq!(b.canonical(), "-pi/12 + 1/3");
    }

    #[test]
    fn nonlinear_expression_keeps_tree() {
        let a = parse_angle("pi*pi/16").unwrap();
        assert_eq!(a.class(), AngleClass::Unknown);
        assert_eq!(a.canonical(), "((pi*pi)/16)");
        let v = a.eval(128).unwrap();
        let pi = std::f64::consts::PI;
        assert!((v.mid_f64() - pi * pi / 16.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn canonical_round_trips(num in -40i64..40, den in 1i64..40, c in -999i64..999) {
            let text = format!("{num}*pi/{den} + {c}/100");
            let a = parse_angle(&text).unwrap();
            let b = parse_angle(&a.canonical()).unwrap();
            prop_assert_eq!(a.canonical(), b.canonical());
            prop_assert!(a.same_affine(&b));
        }
    }
}
