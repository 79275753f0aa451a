//! SVG pictures of unfoldings. Output depends only on the input: numbers are
//! printed with a fixed number of decimals and elements in a fixed order.

use std::collections::BTreeSet;
use std::fmt::Write;

use crate::beams::{BeamSet, BandSide};
use crate::error::Result;
use crate::geometry::{StopRule, Trajectory, TriangleConfig, UnfoldFrame};

#[derive(Clone, Debug)]
pub struct SvgOptions {
    /// Pixels per unit length.
    pub scale: f64,
    pub margin: f64,
    pub labels: bool,
}

impl Default for SvgOptions {
    fn default() -> Self {
        SvgOptions {
            scale: 120.0,
            margin: 20.0,
            labels: true,
        }
    }
}

#[derive(Default)]
struct Scene {
    copies: Vec<([(f64, f64); 4], i64)>,
    strips: Vec<(f64, f64, f64, f64, bool)>,
    rays: Vec<((f64, f64), (f64, f64), bool)>,
    centres: Vec<((f64, f64), bool)>,
    labels: Vec<((f64, f64), String)>,
}

fn level_colour(level: i64) -> String {
    let hue = (level * 47).rem_euclid(360);
    format!("hsl({hue},60%,80%)")
}

impl Scene {
    fn bounds(&self) -> Option<(f64, f64, f64, f64)> {
        let mut pts: Vec<(f64, f64)> = Vec::new();
        for (v, _) in &self.copies {
            pts.extend_from_slice(v);
        }
        for &(x0, x1, y0, y1, _) in &self.strips {
            pts.push((x0, y0));
            pts.push((x1, y1));
        }
        for (a, b, _) in &self.rays {
            pts.push(*a);
            pts.push(*b);
        }
        if pts.is_empty() {
            return None;
        }
        let f = |g: fn(f64, f64) -> f64, init: f64, pick: fn(&(f64, f64)) -> f64| {
            pts.iter().map(pick).fold(init, g)
        };
        Some((
            f(f64::min, f64::INFINITY, |p| p.0),
            f(f64::max, f64::NEG_INFINITY, |p| p.0),
            f(f64::min, f64::INFINITY, |p| p.1),
            f(f64::max, f64::NEG_INFINITY, |p| p.1),
        ))
    }

    fn render(&self, opts: &SvgOptions) -> String {
        let (x0, x1, y0, y1) = self.bounds().unwrap_or((0.0, 0.0, 0.0, 0.0));
        let k = opts.scale;
        let m = opts.margin;
        let w = (x1 - x0) * k + 2.0 * m;
        let h = (y1 - y0) * k + 2.0 * m;
        // flip y so that the flow points up
        let tx = |x: f64| (x - x0) * k + m;
        let ty = |y: f64| (y1 - y) * k + m;
        let mut s = String::new();
        let _ = writeln!(s, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>");
        let _ = writeln!(
            s,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w:.2}\" height=\"{h:.2}\" viewBox=\"0 0 {w:.2} {h:.2}\">"
        );
        let _ = writeln!(s, "<g id=\"copies\" stroke=\"#333\" stroke-width=\"1\">");
        for (v, level) in &self.copies {
            let pts: Vec<String> = v.iter().map(|p| format!("{:.3},{:.3}", tx(p.0), ty(p.1))).collect();
            let _ = writeln!(
                s,
                "<polygon points=\"{}\" fill=\"{}\" fill-opacity=\"0.6\" data-level=\"{level}\"/>",
                pts.join(" "),
                level_colour(*level)
            );
        }
        let _ = writeln!(s, "</g>");
        let _ = writeln!(s, "<g id=\"beams\" stroke=\"none\">");
        for &(a, b, c, d, ret) in &self.strips {
            let fill = if ret { "#2b6cb0" } else { "#c53030" };
            let _ = writeln!(
                s,
                "<rect x=\"{:.3}\" y=\"{:.3}\" width=\"{:.3}\" height=\"{:.3}\" fill=\"{fill}\" fill-opacity=\"0.25\"/>",
                tx(a),
                ty(d),
                (b - a) * k,
                (d - c) * k
            );
        }
        let _ = writeln!(s, "</g>");
        let _ = writeln!(s, "<g id=\"rays\" stroke=\"#000\" stroke-width=\"1\" fill=\"none\">");
        for (a, b, dashed) in &self.rays {
            let dash = if *dashed { " stroke-dasharray=\"4 3\"" } else { "" };
            let _ = writeln!(
                s,
                "<line x1=\"{:.3}\" y1=\"{:.3}\" x2=\"{:.3}\" y2=\"{:.3}\"{dash}/>",
                tx(a.0),
                ty(a.1),
                tx(b.0),
                ty(b.1)
            );
        }
        let _ = writeln!(s, "</g>");
        let _ = writeln!(s, "<g id=\"centres\">");
        for (c, hit) in &self.centres {
            let (r, fill) = if *hit { (4.0, "#e53e3e") } else { (2.0, "#333") };
            let _ = writeln!(
                s,
                "<circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"{r}\" fill=\"{fill}\"/>",
                tx(c.0),
                ty(c.1)
            );
        }
        let _ = writeln!(s, "</g>");
        if opts.labels {
            let _ = writeln!(s, "<g id=\"labels\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">");
            for (p, t) in &self.labels {
                let _ = writeln!(s, "<text x=\"{:.3}\" y=\"{:.3}\">{t}</text>", tx(p.0), ty(p.1) - 6.0);
            }
            let _ = writeln!(s, "</g>");
        }
        s.push_str("</svg>\n");
        s
    }

    fn add_frames(&mut self, frames: &[UnfoldFrame], alpha: f64, dx: f64, seen: &mut BTreeSet<(i64, i64, i64)>) {
        for f in frames {
            let (cx, cy) = f.isometry.translation;
            let key = (f.level, (cx * 1e6).round() as i64, (cy * 1e6).round() as i64);
            if !seen.insert(key) {
                continue;
            }
            let v = f.vertices(alpha).map(|(x, y)| (x + dx, y));
            self.copies.push((v, f.level));
            self.labels.push(((cx + dx, cy), f.level.to_string()));
        }
    }
}

/// A trajectory drawn over the copies it visits.
pub fn render_trajectory_svg(t: &Trajectory, opts: &SvgOptions) -> String {
    let mut sc = Scene::default();
    let frames = t.frames();
    let mut seen = BTreeSet::new();
    sc.add_frames(&frames, t.alpha, 0.0, &mut seen);
    let x = t.x_f64();
    let y_end = t.centres.last().map_or(0.0, |c| c.1);
    sc.rays.push(((x, 0.0), (x, y_end), false));
    for (n, c) in t.centres.iter().enumerate() {
        sc.centres.push((*c, t.centre_passages.contains(&n)));
    }
    sc.render(opts)
}

/// Every beam of the set as a shaded strip over its copies. Beams starting at
/// the far band level are drawn in a second panel to the right.
pub fn render_beams_svg(cfg: &TriangleConfig, bs: &BeamSet, opts: &SvgOptions) -> Result<String> {
    let unf = cfg.perpendicular();
    let alpha = cfg.alpha_f64();
    let mut sc = Scene::default();
    let mut seen = BTreeSet::new();
    let panel = 3.0 * alpha.cos();
    let hits: BTreeSet<(usize, usize)> = bs.center_hits.iter().map(|h| (h.beam, h.step)).collect();
    for (i, b) in bs.beams.iter().enumerate() {
        let dx = if b.start_level == 0 { 0.0 } else { panel };
        let t = unf.trace_offset(&b.mid(), b.start_level, &StopRule::steps(b.p()), b.p().max(1))?;
        sc.add_frames(&t.frames(), alpha, dx, &mut seen);
        let y_end = t.centres.last().map_or(0.0, |c| c.1);
        let (lo, hi) = (b.lo.mid_f64() + dx, b.hi.mid_f64() + dx);
        if b.flags.degenerate {
            sc.rays.push(((lo, 0.0), (lo, y_end), false));
        } else {
            sc.strips.push((lo, hi, y_end.min(0.0), y_end.max(0.0), b.is_returning()));
            sc.rays.push(((lo, 0.0), (lo, y_end), true));
            sc.rays.push(((hi, 0.0), (hi, y_end), true));
        }
        for (n, c) in t.centres.iter().enumerate() {
            sc.centres.push(((c.0 + dx, c.1), hits.contains(&(i, n))));
        }
    }
    if bs.side == BandSide::Negative {
        // the negative side runs downwards; mirror so the picture reads upwards
        for (v, _) in sc.copies.iter_mut() {
            v.iter_mut().for_each(|p| p.1 = -p.1);
        }
        for s in sc.strips.iter_mut() {
            *s = (s.0, s.1, -s.3, -s.2, s.4);
        }
        for r in sc.rays.iter_mut() {
            r.0 .1 = -r.0 .1;
            r.1 .1 = -r.1 .1;
        }
        for c in sc.centres.iter_mut() {
            c.0 .1 = -c.0 .1;
        }
        for l in sc.labels.iter_mut() {
            l.0 .1 = -l.0 .1;
        }
    }
    Ok(sc.render(opts))
}

pub fn render_empty_svg(opts: &SvgOptions) -> String {
    Scene::default().render(opts)
}
