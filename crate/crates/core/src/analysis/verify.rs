use serde::Serialize;

use crate::beams::{
    center_hit_report, decompose_side, find_exceptional, half_period_symmetry, BandSide, BeamSet,
};
use crate::coding::is_palindrome;
use crate::error::{Error, Result};
use crate::geometry::TriangleConfig;

use super::escape::escape_bracket_side;
use super::orbits::gl_loop_check;
use super::require_theorem_range;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    Pass,
    Fail,
    Undecided,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub status: CheckStatus,
    /// `log2` of the residual bound, where one applies.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckResult {
    fn new(name: impl Into<String>, ok: bool) -> Self {
        CheckResult {
            name: name.into(),
            status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
            residual: None,
            detail: None,
        }
    }

    fn residual(mut self, r: f64) -> Self {
        self.residual = Some(r);
        self
    }

    fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = Some(d.into());
        self
    }

    fn from_err(name: impl Into<String>, e: &Error) -> Self {
        let status = if matches!(e, Error::Undecided { .. }) {
            CheckStatus::Undecided
        } else {
            CheckStatus::Fail
        };
        CheckResult {
            name: name.into(),
            status,
            residual: None,
            detail: Some(e.to_string()),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub alpha_spec: String,
    pub precision: u32,
    #[serde(rename = "N")]
    pub n: i64,
    pub checks: Vec<CheckResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beams_ref: Option<String>,
    /// Empty unless requested, to keep reports byte-identical across runs.
    pub timestamps: Vec<String>,
}

impl VerificationReport {
    pub fn overall(&self) -> CheckStatus {
        if self.checks.iter().any(|c| c.status == CheckStatus::Fail) {
            CheckStatus::Fail
        } else if self.checks.iter().any(|c| c.status == CheckStatus::Undecided) {
            CheckStatus::Undecided
        } else {
            CheckStatus::Pass
        }
    }

    pub fn undecided(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Undecided)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Fail)
    }
}

fn side_name(side: BandSide) -> &'static str {
    match side {
        BandSide::Positive => "positive",
        BandSide::Negative => "negative",
    }
}

fn beam_checks(cfg: &TriangleConfig, bs: &BeamSet, out: &mut Vec<CheckResult>) {
    let side = side_name(bs.side);
    let n = bs.edge_level().abs() as usize;
    let proper: Vec<_> = bs.proper().collect();
    let from0 = proper.iter().filter(|b| b.start_level == 0).count();
    out.push(
        CheckResult::new(format!("{side}/count-from-level-0"), from0 <= n)
            .detail(format!("{from0} beams, bound {n}")),
    );
    out.push(
        CheckResult::new(format!("{side}/count-start-set"), proper.len() <= n + 1)
            .detail(format!("{} beams, bound {}", proper.len(), n + 1)),
    );
    let checked: Vec<_> = cfg.exec().map(&proper, |b| {
        if !b.is_returning() {
            return None;
        }
        let pal = is_palindrome(&b.code) && b.p() % 2 == 0;
        let hit = center_hit_report(cfg, b);
        let sym = half_period_symmetry(b);
        Some((b.code.to_string(), pal, hit, sym))
    });
    for (code, pal, hit, sym) in checked.into_iter().flatten() {
        let name = |k: &str| format!("{side}/beam {code}/{k}");
        out.push(CheckResult::new(name("palindrome-even"), pal));
        let hit_ok = match &hit {
            Ok(h) => {
                out.push(
                    CheckResult::new(name("center-hit"), h.certified)
                        .residual(h.residual.log2_upper())
                        .detail(format!("copy {}, exact zero: {}", h.step, h.exact_zero)),
                );
                h.certified
            }
            Err(e) => {
                out.push(CheckResult::from_err(name("center-hit"), e));
                false
            }
        };
        out.push(
            CheckResult::new(name("half-period-symmetry"), sym.holds)
                .residual(sym.residual.log2_upper()),
        );
        out.push(CheckResult::new(
            name("three-way-agreement"),
            pal == hit_ok && hit_ok == sym.holds,
        ));
    }
    match find_exceptional(bs) {
        Ok((up, down)) => {
            out.push(CheckResult::new(format!("{side}/exceptional-unique"), true));
            out.push(
                CheckResult::new(
                    format!("{side}/exceptional-reversal"),
                    down.code == up.code.reversed(),
                )
                .detail(format!("up {}, down {}", up.code, down.code)),
            );
            out.push(CheckResult::new(
                format!("{side}/exceptional-no-center-claim"),
                !up.is_returning() && !down.is_returning(),
            ));
        }
        Err(e) => out.push(CheckResult::from_err(format!("{side}/exceptional-unique"), &e)),
    }
}

/// Run every check at band size `N` and collect the results.
pub fn verify_all(cfg: &TriangleConfig, n: i64) -> Result<VerificationReport> {
    require_theorem_range(cfg)?;
    if n < 1 {
        return Err(Error::Invalid(format!("N = {n} must be at least 1")));
    }
    let mut checks = Vec::new();
    for side in [BandSide::Positive, BandSide::Negative] {
        match decompose_side(cfg, side, n) {
            Ok(bs) => beam_checks(cfg, &bs, &mut checks),
            Err(e) => checks.push(CheckResult::from_err(
                format!("{}/decomposition", side_name(side)),
                &e,
            )),
        }
        match escape_bracket_side(cfg, side, n) {
            Ok(s) => {
                let w = s.last().map(|e| e.width.hi_f64()).unwrap_or(0.0);
                checks.push(
                    CheckResult::new(format!("{}/bracket-nesting", side_name(side)), s.is_nested())
                        .detail(format!("width at N = {n}: {w:.3e}")),
                );
            }
            Err(e) => checks.push(CheckResult::from_err(
                format!("{}/bracket-nesting", side_name(side)),
                &e,
            )),
        }
    }
    match gl_loop_check(cfg) {
        Ok(g) => checks.push(
            CheckResult::new("gl-loop", g.holds)
                .detail(format!("left {}, right {}", g.left_code, g.right_code)),
        ),
        Err(e) => checks.push(CheckResult::from_err("gl-loop", &e)),
    }
    Ok(VerificationReport {
        alpha_spec: cfg.alpha().canonical(),
        precision: cfg.precision_bits(),
        n,
        checks,
        beams_ref: None,
        timestamps: Vec::new(),
    })
}
