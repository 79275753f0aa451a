//! Level codes of orbits and beams.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Sequence of rhombus levels `a_0 .. a_p`, stored literally (not as steps).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Code {
    entries: Vec<i64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodeClass {
    ReturningUp,
    ReturningDown,
    EscapesUp,
    EscapesDown,
    Interior,
}

impl Code {
    pub fn new(entries: Vec<i64>) -> Result<Code> {
        if entries.is_empty() {
            return Err(Error::MalformedCode("empty code".into()));
        }
        if let Some(w) = entries.windows(2).find(|w| (w[1] - w[0]).abs() != 1) {
            return Err(Error::MalformedCode(format!(
                "adjacent entries {} and {} do not differ by one",
                w[0], w[1]
            )));
        }
        Ok(Code { entries })
    }

    pub(crate) fn start(level: i64) -> Code {
        Code {
            entries: vec![level],
        }
    }

    pub(crate) fn push(&mut self, level: i64) {
        debug_assert_eq!((level - self.last()).abs(), 1);
        self.entries.push(level);
    }

    pub fn entries(&self) -> &[i64] {
        &self.entries
    }

    /// Number of steps, `p`.
    pub fn p(&self) -> usize {
        self.entries.len() - 1
    }

    pub fn first(&self) -> i64 {
        self.entries[0]
    }

    pub fn last(&self) -> i64 {
        *self.entries.last().unwrap()
    }

    pub fn max_level(&self) -> i64 {
        *self.entries.iter().max().unwrap()
    }

    pub fn min_level(&self) -> i64 {
        *self.entries.iter().min().unwrap()
    }

    pub fn reversed(&self) -> Code {
        let mut e = self.entries.clone();
        e.reverse();
        Code { entries: e }
    }

    pub fn negated(&self) -> Code {
        Code {
            entries: self.entries.iter().map(|x| -x).collect(),
        }
    }

    /// The same path read from its level-0 end. Codes that end at 0 but start
    /// elsewhere are reversed; everything else is returned unchanged.
    pub fn anchored(&self) -> Code {
        if self.first() != 0 && self.last() == 0 {
            self.reversed()
        } else {
            self.clone()
        }
    }

    /// Compact form without separators when every entry is a single digit,
    /// e.g. `0121210` or `0(-1)0`.
    pub fn compact(&self) -> String {
        self.entries
            .iter()
            .map(|&x| {
                if x < 0 {
                    format!("({x})")
                } else {
                    x.to_string()
                }
            })
            .collect()
    }
}

pub fn is_palindrome(code: &Code) -> bool {
    let e = code.entries();
    e.iter().eq(e.iter().rev())
}

/// Classify a code against the band `(M, N)`; the levels `M`, `0` and `N`
/// are the stopping levels.
pub fn classify_code(code: &Code, band: (i64, i64)) -> Result<CodeClass> {
    let (m, n) = band;
    if m > 0 || n < 0 || m >= n {
        return Err(Error::MalformedCode(format!("invalid band {m}..{n}")));
    }
    let e = code.entries();
    if let Some(x) = e.iter().find(|&&x| x < m || x > n) {
        return Err(Error::MalformedCode(format!(
            "level {x} outside band {m}..{n}"
        )));
    }
    let stop = |x: i64| x == m || x == 0 || x == n;
    let (a0, ap) = (code.first(), code.last());
    if code.p() == 0 || !stop(a0) || !stop(ap) || e[1..e.len() - 1].iter().any(|&x| stop(x)) {
        return Ok(CodeClass::Interior);
    }
    let up = e[1] > a0;
    Ok(match (a0 == ap, up, ap > a0) {
        (true, true, _) => CodeClass::ReturningUp,
        (true, false, _) => CodeClass::ReturningDown,
        (false, _, true) => CodeClass::EscapesUp,
        (false, _, false) => CodeClass::EscapesDown,
    })
}

/// Reverse and negate the entries. This is an involution; use
/// [`Code::anchored`] to read the result from its level-0 end.
pub fn reverse_negate(code: &Code) -> Code {
    code.reversed().negated()
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .entries
            .iter()
            .map(|&x| {
                if x < 0 {
                    format!("({x})")
                } else {
                    x.to_string()
                }
            })
            .collect();
        f.write_str(&parts.join(" "))
    }
}

impl FromStr for Code {
    type Err = Error;

    /// Accepts `"0 1 2 1 0"`, `"0 (-1) 0"`, `"0,-1,0"` and the compact
    /// single-digit form `"0121210"` / `"0(-1)0"`.
    fn from_str(s: &str) -> Result<Code> {
        let s = s.replace('\u{2212}', "-");
        let bad = |t: &str| Error::MalformedCode(format!("bad entry '{t}'"));
        let spaced = s.contains(|c: char| c.is_whitespace() || c == ',');
        let mut out = Vec::new();
        if spaced {
            for tok in s.split(|c: char| c.is_whitespace() || c == ',') {
                if tok.is_empty() {
                    continue;
                }
                let t = tok.trim_start_matches('(').trim_end_matches(')');
                out.push(t.parse::<i64>().map_err(|_| bad(tok))?);
            }
        } else {
            let chars: Vec<char> = s.chars().collect();
            let mut i = 0;
            while i < chars.len() {
                if chars[i] == '(' {
                    let j = chars[i..]
                        .iter()
                        .position(|&c| c == ')')
                        .ok_or_else(|| bad(&s))?
                        + i;
                    let t: String = chars[i + 1..j].iter().collect();
                    out.push(t.parse::<i64>().map_err(|_| bad(&t))?);
                    i = j + 1;
                } else {
                    let d = chars[i].to_digit(10).ok_or_else(|| bad(&s))?;
                    out.push(d as i64);
                    i += 1;
                }
            }
        }
        Code::new(out)
    }
}

impl Serialize for Code {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Code {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(s: &str) -> Code {
        s.parse().unwrap()
    }

    #[test]
    fn palindromes() {
        assert!(is_palindrome(&c("010")));
        assert!(is_palindrome(&c("0121210")));
        assert!(!is_palindrome(&c("0121")));
        assert!("011".parse::<Code>().is_err());
    }

    #[test]
    fn classification() {
        let band = |n| (-1, n);
        assert_eq!(classify_code(&c("010"), band(2)).unwrap(), CodeClass::ReturningUp);
        assert_eq!(classify_code(&c("01"), band(1)).unwrap(), CodeClass::EscapesUp);
        assert_eq!(
            classify_code(&c("0121210"), band(3)).unwrap(),
            CodeClass::ReturningUp
        );
        assert_eq!(classify_code(&c("10"), (0, 1)).unwrap(), CodeClass::EscapesDown);
        assert_eq!(
            classify_code(&c("0(-1)0"), (-2, 2)).unwrap(),
            CodeClass::ReturningDown
        );
        assert_eq!(classify_code(&c("212"), (0, 2)).unwrap(), CodeClass::ReturningDown);
        assert_eq!(classify_code(&c("(-1)0"), (-1, 2)).unwrap(), CodeClass::EscapesUp);
        assert_eq!(classify_code(&c("012"), band(3)).unwrap(), CodeClass::Interior);
        assert_eq!(classify_code(&c("01010"), band(3)).unwrap(), CodeClass::Interior);
        assert!(classify_code(&c("0123"), band(2)).is_err());
    }

    #[test]
    fn reverse_negate_examples() {
        assert_eq!(reverse_negate(&c("01")), c("(-1)0"));
        assert_eq!(reverse_negate(&c("01")).anchored(), c("0(-1)"));
        assert_eq!(reverse_negate(&c("010")), c("0(-1)0"));
    }

    #[test]
    fn string_forms() {
        let x = c("0 (-1) (-2) (-1) 0");
        assert_eq!(x.to_string(), "0 (-1) (-2) (-1) 0");
        assert_eq!(x.compact(), "0(-1)(-2)(-1)0");
        assert_eq!(c(&x.compact()), x);
        assert_eq!(c("0,1,2,1,0").to_string(), "0 1 2 1 0");
        let j = serde_json::to_string(&x).unwrap();
        assert_eq!(serde_json::from_str::<Code>(&j).unwrap(), x);
    }

    fn walk() -> impl Strategy<Value = Code> {
        (-3i64..3, prop::collection::vec(any::<bool>(), 0..40)).prop_map(|(a0, steps)| {
            let mut e = vec![a0];
            for up in steps {
                let l = *e.last().unwrap();
                e.push(if up { l + 1 } else { l - 1 });
            }
            Code::new(e).unwrap()
        })
    }

    proptest! {
        #[test]
        fn reverse_negate_is_involution(code in walk()) {
            prop_assert_eq!(reverse_negate(&reverse_negate(&code)), code);
        }

        #[test]
        fn palindrome_invariant_under_reversal(code in walk()) {
            prop_assert_eq!(is_palindrome(&code), is_palindrome(&code.reversed()));
        }

        #[test]
        fn classification_total_on_stopped_codes(code in walk()) {
            let band = (code.min_level().min(0) - 1, code.max_level().max(0) + 1);
            prop_assert!(classify_code(&code, band).is_ok());
        }
    }
}
