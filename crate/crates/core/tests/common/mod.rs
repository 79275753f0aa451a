//! Plain double-precision simulators used as oracles. They share no code
//! with the library.

#![allow(dead_code)]

/// Billiard in the right triangle with vertices `(0,0)`, `(cos a, 0)` and
/// `(0, sin a)`. The unfolded orbit is tracked through the orientation `m`
/// of the current triangle copy, so that every hypotenuse hit can be given
/// the level of the rhombus copy it enters.
pub struct Folded {
    c: f64,
    s: f64,
    alpha: f64,
    pub pos: (f64, f64),
    pub vel: (f64, f64),
    m: [[f64; 2]; 2],
    pub level: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Wall {
    /// The leg on the x axis, half of the long diagonal.
    Long,
    /// The leg on the y axis, half of the short diagonal.
    Short,
    Hypotenuse,
}

fn mul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut r = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    r
}

impl Folded {
    /// Start on the long diagonal at `x` (between `-cos a` and `cos a`),
    /// moving perpendicular to it.
    pub fn new(alpha: f64, x: f64) -> Self {
        let sx = if x < 0.0 { -1.0 } else { 1.0 };
        Folded {
            c: alpha.cos(),
            s: alpha.sin(),
            alpha,
            pos: (x.abs(), 0.0),
            vel: (0.0, 1.0),
            m: [[sx, 0.0], [0.0, 1.0]],
            level: 0,
        }
    }

    fn off_diagonal(&self, k: i64) -> f64 {
        let t = -2.0 * k as f64 * self.alpha;
        let rot = [[t.cos(), -t.sin()], [t.sin(), t.cos()]];
        let r = mul(rot, self.m);
        r[0][1].abs() + r[1][0].abs()
    }

    /// Move to the next wall and reflect. Returns the wall and the distance
    /// of the hit point to the nearest vertex.
    pub fn bounce(&mut self) -> (Wall, f64) {
        let (x, y) = self.pos;
        let (vx, vy) = self.vel;
        let (c, s) = (self.c, self.s);
        let mut best = (f64::INFINITY, Wall::Long);
        if vy < 0.0 {
            best = best.min_by(-y / vy, Wall::Long);
        }
        if vx < 0.0 {
            best = best.min_by(-x / vx, Wall::Short);
        }
        // s x + c y = s c
        let dn = s * vx + c * vy;
        if dn > 0.0 {
            best = best.min_by((s * c - s * x - c * y) / dn, Wall::Hypotenuse);
        }
        let (t, wall) = best;
        let p = (x + t * vx, y + t * vy);
        self.pos = p;
        let refl = match wall {
            Wall::Long => [[1.0, 0.0], [0.0, -1.0]],
            Wall::Short => [[-1.0, 0.0], [0.0, 1.0]],
            Wall::Hypotenuse => {
                let (nx, ny) = (s, c);
                [[1.0 - 2.0 * nx * nx, -2.0 * nx * ny], [-2.0 * nx * ny, 1.0 - 2.0 * ny * ny]]
            }
        };
        self.vel = (
            refl[0][0] * vx + refl[0][1] * vy,
            refl[1][0] * vx + refl[1][1] * vy,
        );
        self.m = mul(self.m, refl);
        if wall == Wall::Hypotenuse {
            let (up, down) = (self.off_diagonal(self.level + 1), self.off_diagonal(self.level - 1));
            self.level += if up < down { 1 } else { -1 };
        }
        let d = |q: (f64, f64)| ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt();
        let near = d((0.0, 0.0)).min(d((c, 0.0))).min(d((0.0, s)));
        (wall, near)
    }
}

trait MinBy {
    fn min_by(self, t: f64, w: Wall) -> Self;
}

impl MinBy for (f64, Wall) {
    fn min_by(self, t: f64, w: Wall) -> Self {
        if t >= 0.0 && t < self.0 {
            (t, w)
        } else {
            self
        }
    }
}

/// Levels visited over `steps` edge crossings, stopping early (second value
/// `false`) once a hit comes within `tol` of a vertex.
pub fn folded_code(alpha: f64, x: f64, steps: usize, tol: f64) -> (Vec<i64>, bool) {
    let mut f = Folded::new(alpha, x);
    let mut code = vec![0];
    let mut guard = 0;
    while code.len() <= steps {
        let (wall, near) = f.bounce();
        if near < tol {
            return (code, false);
        }
        if wall == Wall::Hypotenuse {
            code.push(f.level);
        }
        guard += 1;
        assert!(guard < 100_000, "orbit never reaches the hypotenuse");
    }
    (code, true)
}

/// Two particles on `[0, 1]`: particle 1 bounces off 0, particle 2 off 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GasKind {
    Left,
    Right,
    Collide,
}

/// Event-driven simulation. Stops early when two candidate events are
/// closer in time than `tol` relative to the step.
pub fn gas_oracle(m: (f64, f64), mut x: (f64, f64), mut v: (f64, f64), count: usize, tol: f64) -> Vec<GasKind> {
    let mut out = Vec::new();
    while out.len() < count {
        let mut c: Vec<(f64, GasKind)> = Vec::new();
        if v.0 < 0.0 {
            c.push((-x.0 / v.0, GasKind::Left));
        }
        if v.1 > 0.0 {
            c.push(((1.0 - x.1) / v.1, GasKind::Right));
        }
        if v.0 > v.1 {
            c.push(((x.1 - x.0) / (v.0 - v.1), GasKind::Collide));
        }
        c.sort_by(|a, b| a.0.total_cmp(&b.0));
        if c.len() > 1 && c[1].0 - c[0].0 < tol * c[1].0.max(1.0) {
            break;
        }
        let (t, k) = c[0];
        x = (x.0 + t * v.0, x.1 + t * v.1);
        match k {
            GasKind::Left => v.0 = -v.0,
            GasKind::Right => v.1 = -v.1,
            GasKind::Collide => {
                let (m1, m2) = m;
                let s = m1 + m2;
                v = (
                    ((m1 - m2) * v.0 + 2.0 * m2 * v.1) / s,
                    ((m2 - m1) * v.1 + 2.0 * m1 * v.0) / s,
                );
            }
        }
        out.push(k);
    }
    out
}
