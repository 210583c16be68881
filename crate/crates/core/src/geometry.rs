//! Interval, box, and point-set primitives shared by every other module.
//!
//! Half-open intervals are the internal default; every half-open box contains
//! an open box of the same volume, and emptiness of the open interior is what
//! dispersion reports. All types are immutable after construction.

// geometry uses Coord-level zero/one only
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Coord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Openness {
    /// `[lo, hi)`
    HalfOpenLoClosed,
    /// `(lo, hi)`
    Open,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Interval<C: Coord> {
    pub lo: C,
    pub hi: C,
    pub openness: Openness,
}

impl<C: Coord> Interval<C> {
    pub fn new(lo: C, hi: C, openness: Openness) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidInterval);
        }
        Ok(Interval { lo, hi, openness })
    }

    pub fn open(lo: C, hi: C) -> Result<Self> {
        Self::new(lo, hi, Openness::Open)
    }

    pub fn half_open(lo: C, hi: C) -> Result<Self> {
        Self::new(lo, hi, Openness::HalfOpenLoClosed)
    }

    pub fn length(&self) -> C {
        self.hi.clone() - self.lo.clone()
    }

    pub fn contains(&self, x: &C) -> bool {
        match self.openness {
            Openness::HalfOpenLoClosed => *x >= self.lo && *x < self.hi,
            Openness::Open => *x > self.lo && *x < self.hi,
        }
    }

    /// The open interval with the same endpoints (a volume-preserving no-op).
    pub fn interior(&self) -> Interval<C> {
        Interval {
            lo: self.lo.clone(),
            hi: self.hi.clone(),
            openness: Openness::Open,
        }
    }
}

/// Product of per-axis intervals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AxisBox<C: Coord> {
    axes: Vec<Interval<C>>,
}

impl<C: Coord> AxisBox<C> {
    pub fn new(axes: Vec<Interval<C>>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::ZeroDimension);
        }
        Ok(AxisBox { axes })
    }

    /// The open unit cube `(0,1)^d`.
    pub fn unit_cube(d: usize) -> Result<Self> {
        let axes = (0..d)
            .map(|_| Interval::open(C::zero(), C::one()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(axes)
    }

    pub fn dimension(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Interval<C>] {
        &self.axes
    }

    pub fn volume(&self) -> C {
        let mut v = C::one();
        for ax in &self.axes {
            v = v * ax.length();
        }
        v
    }

    pub fn contains_point(&self, p: &[C]) -> Result<bool> {
        if p.len() != self.axes.len() {
            return Err(Error::DimensionMismatch {
                expected: self.axes.len(),
                got: p.len(),
            });
        }
        Ok(self.axes.iter().zip(p).all(|(ax, x)| ax.contains(x)))
    }

    pub fn is_empty_of(&self, points: &PointSet<C>) -> Result<bool> {
        if points.dimension() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: points.dimension(),
            });
        }
        for p in points.points() {
            if self.contains_point(p)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// True if contained in `[0,1]^d`.
    pub fn inside_unit_cube(&self) -> bool {
        self.axes
            .iter()
            .all(|ax| ax.lo >= C::zero() && ax.hi <= C::one())
    }
}

/// Wrapping interval on the circle: `(a,b)` denotes `(a,1] ∪ [0,b)` when `a >= b`.
/// `a == b` denotes the full circle minus the single point `a`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ToroidalInterval<C: Coord> {
    pub a: C,
    pub b: C,
}

impl<C: Coord> ToroidalInterval<C> {
    pub fn new(a: C, b: C) -> Result<Self> {
        let in_range = |x: &C| *x >= C::zero() && *x < C::one();
        if !in_range(&a) || !in_range(&b) {
            return Err(Error::CoordinateOutOfRange(format!("({a}, {b})")));
        }
        Ok(ToroidalInterval { a, b })
    }

    pub fn length(&self) -> C {
        if self.a < self.b {
            self.b.clone() - self.a.clone()
        } else {
            C::one() - self.a.clone() + self.b.clone()
        }
    }

    /// Open membership: excludes both endpoints; for `a == b` excludes only `a`.
    pub fn contains(&self, x: &C) -> bool {
        if self.a < self.b {
            *x > self.a && *x < self.b
        } else {
            *x > self.a || *x < self.b
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ToroidalBox<C: Coord> {
    axes: Vec<ToroidalInterval<C>>,
}

impl<C: Coord> ToroidalBox<C> {
    pub fn new(axes: Vec<ToroidalInterval<C>>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::ZeroDimension);
        }
        Ok(ToroidalBox { axes })
    }

    pub fn dimension(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[ToroidalInterval<C>] {
        &self.axes
    }

    pub fn volume(&self) -> C {
        let mut v = C::one();
        for ax in &self.axes {
            v = v * ax.length();
        }
        v
    }

    pub fn contains_point(&self, p: &[C]) -> Result<bool> {
        if p.len() != self.axes.len() {
            return Err(Error::DimensionMismatch {
                expected: self.axes.len(),
                got: p.len(),
            });
        }
        Ok(self.axes.iter().zip(p).all(|(ax, x)| ax.contains(x)))
    }

    pub fn is_empty_of(&self, points: &PointSet<C>) -> Result<bool> {
        if points.dimension() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: points.dimension(),
            });
        }
        for p in points.points() {
            if self.contains_point(p)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Space {
    Cube,
    Torus,
}

/// Immutable list of `d`-dimensional points. Duplicates are permitted and
/// counted with multiplicity; they never change emptiness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointSet<C: Coord> {
    dimension: usize,
    points: Vec<Vec<C>>,
    space: Space,
}

impl<C: Coord> PointSet<C> {
    pub fn new(dimension: usize, points: Vec<Vec<C>>, space: Space) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::ZeroDimension);
        }
        for p in &points {
            if p.len() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    got: p.len(),
                });
            }
            for x in p {
                if *x < C::zero() || *x > C::one() {
                    return Err(Error::CoordinateOutOfRange(x.to_string()));
                }
            }
        }
        Ok(PointSet {
            dimension,
            points,
            space,
        })
    }

    pub fn empty(dimension: usize, space: Space) -> Result<Self> {
        Self::new(dimension, Vec::new(), space)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<C>] {
        &self.points
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn with_space(mut self, space: Space) -> Self {
        self.space = space;
        self
    }
}

impl PointSet<crate::scalar::Rational> {
    /// Float view of an exact set.
    pub fn to_f64_set(&self) -> PointSet<crate::scalar::F64> {
        let pts = self
            .points
            .iter()
            .map(|p| {
                p.iter()
                    .map(|x| crate::scalar::f64_coord(x.to_f64().clamp(0.0, 1.0)))
                    .collect()
            })
            .collect();
        PointSet {
            dimension: self.dimension,
            points: pts,
            space: self.space,
        }
    }
}

pub fn box_volume<C: Coord>(b: &AxisBox<C>) -> C {
    b.volume()
}

pub fn box_contains_point<C: Coord>(b: &AxisBox<C>, p: &[C]) -> Result<bool> {
    b.contains_point(p)
}

pub fn box_is_empty<C: Coord>(b: &AxisBox<C>, points: &PointSet<C>) -> Result<bool> {
    b.is_empty_of(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{f64_coord, Coord, Rational};

    fn r(n: i64, d: i64) -> Rational {
        Rational::from_int_ratio(n, d)
    }

    #[test]
    fn unit_cube_volume_is_one() {
        let b: AxisBox<Rational> = AxisBox::unit_cube(3).unwrap();
        assert_eq!(b.volume(), r(1, 1));
    }

    #[test]
    fn product_volume() {
        let b = AxisBox::new(vec![
            Interval::half_open(r(1, 2), r(1, 1)).unwrap(),
            Interval::half_open(r(1, 3), r(2, 3)).unwrap(),
        ])
        .unwrap();
        assert_eq!(b.volume(), r(1, 6));
    }

    #[test]
    fn degenerate_side_gives_zero() {
        let b = AxisBox::new(vec![Interval::open(r(1, 2), r(1, 2)).unwrap()]).unwrap();
        assert_eq!(b.volume(), r(0, 1));
    }

    #[test]
    fn boundary_semantics() {
        let half = Interval::half_open(r(1, 2), r(1, 1)).unwrap();
        assert!(half.contains(&r(1, 2)));
        let open = Interval::open(r(1, 2), r(1, 1)).unwrap();
        assert!(!open.contains(&r(1, 2)));
    }

    #[test]
    fn open_square_contains_center() {
        let b: AxisBox<crate::scalar::F64> = AxisBox::unit_cube(2).unwrap();
        assert!(b.contains_point(&[f64_coord(0.5), f64_coord(0.5)]).unwrap());
    }

    #[test]
    fn membership_direct_comparison() {
        let b = AxisBox::new(vec![
            Interval::half_open(r(1, 2), r(1, 1)).unwrap(),
            Interval::half_open(r(1, 3), r(2, 3)).unwrap(),
        ])
        .unwrap();
        // 7/9 > 2/3, so the point is outside.
        assert!(!b.contains_point(&[r(5, 8), r(7, 9)]).unwrap());
    }

    #[test]
    fn emptiness_cases() {
        let empty = PointSet::<Rational>::empty(2, Space::Cube).unwrap();
        let b = AxisBox::unit_cube(2).unwrap();
        assert!(b.is_empty_of(&empty).unwrap());

        let grid = PointSet::new(
            2,
            vec![
                vec![r(1, 4), r(1, 4)],
                vec![r(1, 4), r(3, 4)],
                vec![r(3, 4), r(1, 4)],
                vec![r(3, 4), r(3, 4)],
            ],
            Space::Cube,
        )
        .unwrap();
        let open_mid = AxisBox::new(vec![
            Interval::open(r(1, 4), r(3, 4)).unwrap(),
            Interval::open(r(0, 1), r(1, 1)).unwrap(),
        ])
        .unwrap();
        // Open box excludes the boundary coordinates 1/4 and 3/4.
        assert!(open_mid.is_empty_of(&grid).unwrap());

        let center = PointSet::new(2, vec![vec![r(1, 2), r(1, 2)]], Space::Cube).unwrap();
        assert!(!b.is_empty_of(&center).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let b: AxisBox<Rational> = AxisBox::unit_cube(2).unwrap();
        assert!(b.contains_point(&[r(1, 2)]).is_err());
    }

    #[test]
    fn toroidal_length_wraps() {
        let t = ToroidalInterval::new(r(4, 5), r(1, 5)).unwrap();
        assert_eq!(t.length(), r(2, 5));
        assert!(t.contains(&r(9, 10)));
        assert!(t.contains(&r(1, 10)));
        assert!(!t.contains(&r(1, 2)));
        let full = ToroidalInterval::new(r(1, 2), r(1, 2)).unwrap();
        assert_eq!(full.length(), r(1, 1));
        assert!(!full.contains(&r(1, 2)));
        assert!(full.contains(&r(1, 4)));
    }

    #[test]
    fn pointset_rejects_out_of_range() {
        assert!(PointSet::new(1, vec![vec![r(9, 8)]], Space::Cube).is_err());
    }
}
