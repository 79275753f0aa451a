use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use rhombill::analysis::{
    build_return_map, coverage_fraction, escape_bracket_side, foliation_sample, gas_events,
    gas_map, verify_all, CheckStatus, GasState, ReturnClass,
};
use rhombill::angle::parse_angle;
use rhombill::beams::{decompose_band, BandSide, BeamSet};
use rhombill::exact::{Direction, Real};
use rhombill::geometry::{trace_ray, StartPoint, StopRule, TriangleConfig};
use rhombill::io::{
    decimal_enclosure, render_beams_svg, render_trajectory_svg, report_json, BeamCache, BeamTable,
    CacheKey, SvgOptions,
};
use rhombill::Error;

const PASS: u8 = 0;
const FAILURES: u8 = 1;
const UNDECIDED: u8 = 2;
const USAGE: u8 = 3;

#[derive(Parser)]
#[command(name = "rhombill", version, about = "Perpendicular billiards in right triangles")]
struct Cli {
    #[command(flatten)]
    opts: Opts,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Opts {
    /// Working precision in bits.
    #[arg(long, global = true, default_value_t = 128)]
    precision: u32,
    /// Precision cap when a sign has to be decided.
    #[arg(long, global = true, default_value_t = 1024)]
    max_precision: u32,
    /// Crossing budget per trajectory.
    #[arg(long, global = true)]
    steps: Option<usize>,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Directory for cached beam tables.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Svg,
}

#[derive(Subcommand)]
enum Cmd {
    /// Beam decomposition of the start sets in the band M..N.
    Beams {
        #[arg(long)]
        alpha: String,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_band)]
        band: (i64, i64),
    },
    /// Escape brackets for N = 1..K on both sides.
    Escape {
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        nmax: i64,
    },
    /// Run every check at band size N.
    Verify {
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        n: i64,
    },
    /// First return to L in the band M..N for flow direction theta.
    ReturnMap {
        #[arg(long)]
        alpha: String,
        #[arg(long, allow_hyphen_values = true)]
        theta: String,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_band)]
        band: (i64, i64),
    },
    /// Fraction of L whose orbit returns within -N..N, and optionally a
    /// random sample of start points.
    Coverage {
        #[arg(long)]
        alpha: String,
        #[arg(long, default_value_t = 15)]
        n: i64,
        /// Number of random start points to certify.
        #[arg(long, default_value_t = 0)]
        samples: usize,
    },
    /// Picture of a trajectory, or of the beams of a band side.
    Render {
        #[arg(long)]
        alpha: String,
        /// Start point: left, right, a rational, or a multiple of cos(alpha) such as 0.3c.
        #[arg(long, allow_hyphen_values = true, default_value = "left")]
        start: String,
        /// Draw the beams of this band instead; the side containing N is drawn.
        #[arg(long, allow_hyphen_values = true, value_parser = parse_band)]
        band: Option<(i64, i64)>,
    },
    /// Triangle angle and event sequence of two particles on a segment.
    Gas {
        #[arg(long)]
        m1: f64,
        #[arg(long)]
        m2: f64,
        #[arg(long, default_value_t = 0)]
        events: usize,
        #[arg(long, allow_hyphen_values = true, num_args = 4, value_names = ["X1", "X2", "V1", "V2"])]
        state: Option<Vec<f64>>,
    },
}

fn parse_band(s: &str) -> Result<(i64, i64), String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("band {s:?} is not of the form M..N"))?;
    let m = a.trim().parse().map_err(|e| format!("band start {a:?}: {e}"))?;
    let n = b.trim().parse().map_err(|e| format!("band end {b:?}: {e}"))?;
    if m > n {
        return Err(format!("band {m}..{n} is empty"));
    }
    Ok((m, n))
}

/// Error with the exit code it maps to.
struct Fail(u8, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse { .. }
            | Error::OutOfRange(_)
            | Error::UndecidableRange(_)
            | Error::Invalid(_) => USAGE,
            Error::Undecided { .. } | Error::StepBudgetExhausted(_) => UNDECIDED,
            _ => FAILURES,
        };
        Fail(code, e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> Fail {
    Fail(USAGE, msg.into())
}

type Out = Result<(String, u8), Fail>;

fn config(o: &Opts, alpha: &str) -> Result<TriangleConfig, Fail> {
    let mut cfg = TriangleConfig::new(parse_angle(alpha)?, o.precision, o.max_precision)?;
    if let Some(s) = o.steps {
        cfg = cfg.with_step_budget(s);
    }
    Ok(cfg)
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json values serialize") + "\n"
}

fn enc(r: &Real) -> [String; 2] {
    decimal_enclosure(&r.enc)
}

fn require_json(o: &Opts, verb: &str) -> Result<(), Fail> {
    if o.format == Format::Svg {
        return Err(usage(format!("{verb} has no svg output")));
    }
    Ok(())
}

/// Beam table from the cache, or computed and stored. Custom step budgets
/// bypass the cache, since the key does not record them.
fn beam_table(o: &Opts, cfg: &TriangleConfig, band: (i64, i64)) -> Result<String, Fail> {
    let cache = match (&o.cache_dir, o.steps) {
        (Some(d), None) => Some(BeamCache::new(d)?),
        _ => None,
    };
    let key = CacheKey::new(&cfg.alpha().canonical(), cfg.precision_bits(), band);
    if let Some(c) = &cache {
        if let Some(hit) = c.get(&key)? {
            return Ok(hit);
        }
    }
    let d = decompose_band(cfg, band.0, band.1)?;
    let text = BeamTable::from_decomposition(cfg, &d)?.to_json()?;
    if let Some(c) = &cache {
        c.put(&key, &text)?;
    }
    Ok(text)
}

fn beams(o: &Opts, alpha: &str, band: (i64, i64)) -> Out {
    let cfg = config(o, alpha)?;
    let text = beam_table(o, &cfg, band)?;
    if o.format == Format::Json {
        return Ok((text, PASS));
    }
    let table: BeamTable = serde_json::from_str(&text).map_err(Error::from)?;
    let d = table.to_decomposition(&cfg)?;
    let bs: &BeamSet = d
        .positive
        .as_ref()
        .or(d.negative.as_ref())
        .ok_or_else(|| usage("band must contain a nonzero level"))?;
    Ok((render_beams_svg(&cfg, bs, &SvgOptions::default())?, PASS))
}

fn escape(o: &Opts, alpha: &str, nmax: i64) -> Out {
    require_json(o, "escape")?;
    let cfg = config(o, alpha)?;
    let mut sides = Vec::new();
    let mut nested = true;
    for side in [BandSide::Positive, BandSide::Negative] {
        let s = escape_bracket_side(&cfg, side, nmax)?;
        nested &= s.is_nested();
        let entries: Vec<Value> = s
            .entries
            .iter()
            .map(|e| {
                json!({
                    "N": e.n,
                    "lo": enc(&e.lo),
                    "hi": enc(&e.hi),
                    "width": decimal_enclosure(&e.width),
                    "code": e.code,
                })
            })
            .collect();
        sides.push(json!({
            "side": side,
            "entries": entries,
            "nested": s.nested,
        }));
    }
    let v = json!({
        "alpha_spec": cfg.alpha().canonical(),
        "precision": cfg.precision_bits(),
        "nmax": nmax,
        "sides": sides,
        "nested": nested,
    });
    Ok((pretty(&v), if nested { PASS } else { FAILURES }))
}

fn verify(o: &Opts, alpha: &str, n: i64) -> Out {
    require_json(o, "verify")?;
    let cfg = config(o, alpha)?;
    let r = verify_all(&cfg, n)?;
    let code = match r.overall() {
        CheckStatus::Pass => PASS,
        CheckStatus::Fail => FAILURES,
        CheckStatus::Undecided => UNDECIDED,
    };
    Ok((report_json(&r)?, code))
}

fn return_map(o: &Opts, alpha: &str, theta: &str, band: (i64, i64)) -> Out {
    require_json(o, "return-map")?;
    let cfg = config(o, alpha)?;
    let dir = Direction::from_theta(parse_angle(theta)?);
    let part = build_return_map(&cfg, &dir, band.0, band.1)?;
    let intervals: Vec<Value> = part
        .intervals
        .iter()
        .map(|i| {
            json!({
                "lo": enc(&i.lo),
                "hi": enc(&i.hi),
                "class": i.class,
                "code": i.code,
                "shift": i.shift.as_ref().map(enc),
                "via_ghost": i.via_ghost,
            })
        })
        .collect();
    let ghost: Vec<Value> = part.ghost.as_ref().map_or(Vec::new(), |g| {
        g.pieces
            .iter()
            .map(|p| {
                json!({
                    "lo": enc(&p.lo),
                    "hi": enc(&p.hi),
                    "shift": enc(&p.shift),
                    "ghost": p.ghost,
                })
            })
            .collect()
    });
    let unresolved = part
        .intervals
        .iter()
        .any(|i| i.class == ReturnClass::Unresolved);
    let v = json!({
        "alpha_spec": part.alpha,
        "theta": dir.canonical(),
        "precision": cfg.precision_bits(),
        "band": [part.band.0, part.band.1],
        "assumes_simple_direction": part.assumes_simple_direction,
        "domain": [enc(&part.domain.0), enc(&part.domain.1)],
        "intervals": intervals,
        "singular_points": part.singular_points.iter().map(enc).collect::<Vec<_>>(),
        "ghost": ghost,
    });
    Ok((pretty(&v), if unresolved { UNDECIDED } else { PASS }))
}

fn coverage(o: &Opts, alpha: &str, n: i64, samples: usize) -> Out {
    require_json(o, "coverage")?;
    let cfg = config(o, alpha)?;
    let c = coverage_fraction(&cfg, n)?;
    let mut v = json!({
        "alpha_spec": cfg.alpha().canonical(),
        "precision": cfg.precision_bits(),
        "N": n,
        "length": decimal_enclosure(&c.length),
        "returning": decimal_enclosure(&c.returning),
        "escaping": decimal_enclosure(&c.escaping),
        "unresolved": decimal_enclosure(&c.unresolved),
        "fraction": decimal_enclosure(&c.fraction),
    });
    let mut code = if c.unresolved.hi_f64() > 0.0 { UNDECIDED } else { PASS };
    if samples > 0 {
        let st = foliation_sample(&cfg, samples, n, o.seed)?;
        if st.unresolved > 0 {
            code = UNDECIDED;
        }
        v["samples"] = serde_json::to_value(&st).map_err(Error::from)?;
    }
    Ok((pretty(&v), code))
}

fn render(o: &Opts, alpha: &str, start: &str, band: Option<(i64, i64)>) -> Out {
    if o.format != Format::Svg {
        return Err(usage("render writes svg; pass --format svg"));
    }
    let cfg = config(o, alpha)?;
    if let Some(band) = band {
        return beams(o, alpha, band);
    }
    let sp = StartPoint::parse(start)?;
    let t = trace_ray(&cfg, &sp, &Direction::Perpendicular, &StopRule::first_return())?;
    Ok((render_trajectory_svg(&t, &SvgOptions::default()), PASS))
}

fn gas(o: &Opts, m1: f64, m2: f64, events: usize, state: Option<&[f64]>) -> Out {
    require_json(o, "gas")?;
    let a = gas_map(m1, m2)?;
    let mut v = json!({
        "m1": m1,
        "m2": m2,
        "alpha": a.alpha,
        "alpha_spec": a.spec(),
        "range": a.range,
    });
    if events > 0 {
        let s = match state {
            Some(&[x1, x2, v1, v2]) => GasState { x1, x2, v1, v2 },
            Some(_) => unreachable!("clap takes exactly four values"),
            None => GasState {
                x1: 0.25,
                x2: 0.6,
                v1: 1.0,
                v2: -0.35,
            },
        };
        v["events"] = serde_json::to_value(gas_events(m1, m2, &s, events)?).map_err(Error::from)?;
    }
    Ok((pretty(&v), PASS))
}

fn run(cli: &Cli) -> Out {
    let o = &cli.opts;
    match &cli.cmd {
        Cmd::Beams { alpha, band } => beams(o, alpha, *band),
        Cmd::Escape { alpha, nmax } => escape(o, alpha, *nmax),
        Cmd::Verify { alpha, n } => verify(o, alpha, *n),
        Cmd::ReturnMap { alpha, theta, band } => return_map(o, alpha, theta, *band),
        Cmd::Coverage { alpha, n, samples } => coverage(o, alpha, *n, *samples),
        Cmd::Render { alpha, start, band } => render(o, alpha, start, *band),
        Cmd::Gas {
            m1,
            m2,
            events,
            state,
        } => gas(o, *m1, *m2, *events, state.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { PASS });
        }
    };
    match run(&cli) {
        Ok((text, code)) => {
            let written = match &cli.opts.output {
                Some(p) => fs::write(p, &text),
                None => std::io::stdout().write_all(text.as_bytes()),
            };
            if let Err(e) = written {
                eprintln!("rhombill: {e}");
                return ExitCode::from(FAILURES);
            }
            ExitCode::from(code)
        }
        Err(Fail(code, msg)) => {
            eprintln!("rhombill: {msg}");
            ExitCode::from(code)
        }
    }
}
