//! Interval exchange transformations with symbolic endpoints.

use std::cmp::Ordering;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{Real, ZeroTest};
use crate::geometry::Unfolder;

/// `[lo, hi)` moved by `shift`.
#[derive(Clone, Debug)]
pub struct IetPiece {
    pub lo: Real,
    pub hi: Real,
    pub shift: Real,
    /// Added by the completion rather than taken from the dynamics.
    pub ghost: bool,
}

impl IetPiece {
    pub fn image(&self) -> (Real, Real) {
        (self.lo.add(&self.shift), self.hi.add(&self.shift))
    }
}

/// Pieces sorted left to right and tiling `[lo, hi)`.
#[derive(Clone, Debug)]
pub struct Iet {
    pub pieces: Vec<IetPiece>,
    unf: Arc<Unfolder>,
}

impl Iet {
    pub fn new(unf: Arc<Unfolder>, pieces: Vec<IetPiece>) -> Result<Iet> {
        if pieces.is_empty() {
            return Err(Error::Invalid("empty interval exchange".into()));
        }
        for w in pieces.windows(2) {
            if unf.cmp(&w[0].hi, &w[1].lo)? != Ordering::Equal {
                return Err(Error::Invalid("pieces do not tile an interval".into()));
            }
        }
        for p in &pieces {
            if unf.cmp(&p.lo, &p.hi)? != Ordering::Less {
                return Err(Error::Invalid("empty piece".into()));
            }
        }
        Ok(Iet { pieces, unf })
    }

    pub fn unfolder(&self) -> &Arc<Unfolder> {
        &self.unf
    }

    pub fn lo(&self) -> &Real {
        &self.pieces[0].lo
    }

    pub fn hi(&self) -> &Real {
        &self.pieces.last().unwrap().hi
    }

    /// Index of the piece containing `x`.
    pub fn locate(&self, x: &Real) -> Result<Option<usize>> {
        if self.unf.cmp(x, self.lo())? == Ordering::Less
            || self.unf.cmp(x, self.hi())? != Ordering::Less
        {
            return Ok(None);
        }
        let (mut a, mut b) = (0, self.pieces.len());
        while b - a > 1 {
            let m = (a + b) / 2;
            if self.unf.cmp(x, &self.pieces[m].lo)? == Ordering::Less {
                b = m;
            } else {
                a = m;
            }
        }
        Ok(Some(a))
    }

    pub fn apply(&self, x: &Real) -> Result<Option<Real>> {
        Ok(self.locate(x)?.map(|i| x.add(&self.pieces[i].shift)))
    }

    /// Whether the images tile the domain.
    pub fn is_bijective(&self) -> Result<bool> {
        let mut images: Vec<(Real, Real)> = self.pieces.iter().map(|p| p.image()).collect();
        images.sort_by(|a, b| a.0.mid_f64().total_cmp(&b.0.mid_f64()));
        if self.unf.cmp(&images[0].0, self.lo())? != Ordering::Equal {
            return Ok(false);
        }
        for w in images.windows(2) {
            if self.unf.cmp(&w[0].1, &w[1].0)? != Ordering::Equal {
                return Ok(false);
            }
        }
        Ok(self.unf.cmp(&images.last().unwrap().1, self.hi())? == Ordering::Equal)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ComponentKind {
    Periodic { period: usize },
    /// No return found within the iteration cap; minimality is not certified.
    UnresolvedMinimal { iterations: usize },
}

/// Maximal subinterval on which the first `period` (or `iterations`) iterates
/// are continuous.
#[derive(Clone, Debug)]
pub struct IetCell {
    pub lo: Real,
    pub hi: Real,
    pub piece: usize,
    pub kind: ComponentKind,
    pub component: usize,
    /// Some iterate passes through a ghost piece.
    pub via_ghost: bool,
}

#[derive(Clone, Debug)]
pub struct Component {
    pub kind: ComponentKind,
    pub cells: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct IetClassification {
    pub cells: Vec<IetCell>,
    pub components: Vec<Component>,
}

struct Work {
    lo: Real,
    hi: Real,
    piece: usize,
    shift: Real,
    steps: usize,
    orbit: Vec<Real>,
    via_ghost: bool,
}

/// Split the domain into cells that are periodic (the iterate returns with
/// total translation exactly zero) or unresolved after `max_iter` steps.
pub fn iet_classify(iet: &Iet, max_iter: usize) -> Result<IetClassification> {
    let unf = iet.unfolder();
    let zero = unf.real(crate::exact::TrigPoly::zero())?;
    let mut work: Vec<Work> = iet
        .pieces
        .iter()
        .enumerate()
        .rev()
        .map(|(i, p)| Work {
            lo: p.lo.clone(),
            hi: p.hi.clone(),
            piece: i,
            shift: zero.clone(),
            steps: 0,
            orbit: Vec::new(),
            via_ghost: false,
        })
        .collect();
    let mut done: Vec<(IetCell, Vec<Real>)> = Vec::new();
    while let Some(mut w) = work.pop() {
        let kind = loop {
            if w.steps > 0 && unf.field().zero_test(&w.shift.poly) == ZeroTest::Zero {
                break ComponentKind::Periodic { period: w.steps };
            }
            if w.steps >= max_iter {
                break ComponentKind::UnresolvedMinimal { iterations: w.steps };
            }
            let a = w.lo.add(&w.shift);
            let j = iet
                .locate(&a)?
                .ok_or_else(|| Error::Invalid("iterate left the domain".into()))?;
            let p = &iet.pieces[j];
            let b = w.hi.add(&w.shift);
            if unf.cmp(&b, &p.hi)? == Ordering::Greater {
                // cut where the image meets the discontinuity
                let cut = p.hi.sub(&w.shift);
                work.push(Work {
                    lo: cut.clone(),
                    hi: w.hi.clone(),
                    piece: w.piece,
                    shift: w.shift.clone(),
                    steps: w.steps,
                    orbit: w.orbit.clone(),
                    via_ghost: w.via_ghost,
                });
                w.hi = cut;
            }
            w.orbit.push(w.shift.clone());
            w.via_ghost |= p.ghost;
            w.shift.add_assign(&p.shift);
            w.steps += 1;
        };
        done.push((
            IetCell {
                lo: w.lo,
                hi: w.hi,
                piece: w.piece,
                kind,
                component: 0,
                via_ghost: w.via_ghost,
            },
            w.orbit,
        ));
    }
    done.sort_by(|a, b| a.0.lo.mid_f64().total_cmp(&b.0.lo.mid_f64()));

    // group periodic cells by orbit; unresolved cells share one component
    let mut components: Vec<Component> = Vec::new();
    let mut orbits: Vec<(usize, Vec<(Real, Real)>)> = Vec::new();
    let mut unresolved: Option<usize> = None;
    for i in 0..done.len() {
        let kind = done[i].0.kind;
        let id = match kind {
            ComponentKind::UnresolvedMinimal { iterations } => *unresolved.get_or_insert_with(|| {
                components.push(Component {
                    kind: ComponentKind::UnresolvedMinimal { iterations },
                    cells: Vec::new(),
                });
                components.len() - 1
            }),
            ComponentKind::Periodic { .. } => {
                let x = done[i].0.lo.add(&done[i].0.hi).scale(crate::exact::Q::new(1, 2));
                let mut found = None;
                'search: for (id, imgs) in &orbits {
                    for (a, b) in imgs {
                        if unf.cmp(a, &x)? == Ordering::Less && unf.cmp(&x, b)? == Ordering::Less {
                            found = Some(*id);
                            break 'search;
                        }
                    }
                }
                match found {
                    Some(id) => id,
                    None => {
                        components.push(Component {
                            kind,
                            cells: Vec::new(),
                        });
                        let id = components.len() - 1;
                        let c = &done[i].0;
                        let imgs = done[i]
                            .1
                            .iter()
                            .map(|s| (c.lo.add(s), c.hi.add(s)))
                            .collect();
                        orbits.push((id, imgs));
                        id
                    }
                }
            }
        };
        done[i].0.component = id;
        components[id].cells.push(i);
    }
    Ok(IetClassification {
        cells: done.into_iter().map(|(c, _)| c).collect(),
        components,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::angle::parse_angle;
    use crate::exact::{Direction, TrigPoly, Q};

    fn rotation(unf: &Arc<Unfolder>, a: TrigPoly) -> Iet {
        // x -> x + a mod 1 on [0, 1)
        let r = |p: TrigPoly| unf.real(p).unwrap();
        let zero = r(TrigPoly::zero());
        let one = r(TrigPoly::constant(Q::from_integer(1)));
        let a = r(a);
        let cut = one.sub(&a);
        Iet::new(
            unf.clone(),
            vec![
                IetPiece { lo: zero.clone(), hi: cut.clone(), shift: a.clone(), ghost: false },
                IetPiece { lo: cut, hi: one, shift: a.sub(&r(TrigPoly::constant(Q::from_integer(1)))), ghost: false },
            ],
        )
        .unwrap()
    }

    #[test]
    fn rational_rotation_is_periodic() {
        let unf = Arc::new(
            Unfolder::new(&parse_angle("pi/8").unwrap(), Direction::Perpendicular, 128, 512).unwrap(),
        );
        let iet = rotation(&unf, TrigPoly::constant(Q::new(1, 3)));
        assert!(iet.is_bijective().unwrap());
        let c = iet_classify(&iet, 50).unwrap();
        assert!(c.cells.iter().all(|c| c.kind == ComponentKind::Periodic { period: 3 }));
        assert_eq!(c.components.len(), 1);
    }

    #[test]
    fn irrational_rotation_is_unresolved() {
        // cos(2 * pi/8) = 1/sqrt(2)
        let unf = Arc::new(
            Unfolder::new(&parse_angle("pi/8").unwrap(), Direction::Perpendicular, 128, 512).unwrap(),
        );
        let iet = rotation(&unf, TrigPoly::cos(2, Q::from_integer(1), true));
        let c = iet_classify(&iet, 40).unwrap();
        assert!(c
            .cells
            .iter()
            .all(|c| matches!(c.kind, ComponentKind::UnresolvedMinimal { iterations: 40 })));
    }
}
