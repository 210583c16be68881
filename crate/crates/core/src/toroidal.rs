//! Toroidal dispersion: the per-axis split function f_(a,b), the largest
//! usual box inside a shifted toroidal box, exact best-shift selection over
//! the (1/d, …, 1/d) shift family, and the d-fold shifted construction.

use num_traits::One;

use crate::error::{Error, Result};
use crate::geometry::{AxisBox, Interval, PointSet, Space, ToroidalBox, ToroidalInterval};
use crate::radix::{stage1, stage2, ConstructionParams};
use crate::scalar::{f64_coord, Rational, F64};

/// Forward (counter-clockwise) distance from `a` to `x` on the circle;
/// `a == x` maps to 0.
fn tor_len(a: f64, x: f64) -> f64 {
    let t = x - a;
    if t < 0.0 {
        t + 1.0
    } else {
        t
    }
}

/// log(max{len(a,x), len(x,b)} / len(a,b)) for x strictly inside the
/// toroidal interval (a,b), and 0 outside. Nonpositive, with minimum
/// log(1/2) at the midpoint.
pub fn f_ab(x: f64, a: f64, b: f64) -> Result<f64> {
    let iv = ToroidalInterval::new(f64_coord(a), f64_coord(b))?;
    let len = iv.length().into_inner();
    if len == 0.0 {
        return Err(Error::InvalidParameter(
            "toroidal interval has zero length".into(),
        ));
    }
    if !iv.contains(&f64_coord(x)) {
        return Ok(0.0);
    }
    let left = tor_len(a, x);
    let right = tor_len(x, b);
    Ok((left.max(right) / len).ln())
}

/// Largest usual (non-wrapping) box contained in B − x, together with its
/// volume. Per axis: subtracting x_i leaves the interval unwrapped unless
/// x_i lies inside it, in which case the longer of the two pieces survives;
/// the volume is vol(B)·exp(Σ f_(a_i,b_i)(x_i)).
pub fn largest_usual_box_in_shifted(
    b: &ToroidalBox<F64>,
    x: &[F64],
) -> Result<(AxisBox<F64>, f64)> {
    if x.len() != b.dimension() {
        return Err(Error::DimensionMismatch {
            expected: b.dimension(),
            got: x.len(),
        });
    }
    let mut axes = Vec::with_capacity(b.dimension());
    let mut volume = 1.0f64;
    for (iv, xi) in b.axes().iter().zip(x) {
        let (a, bb, xi) = (iv.a.into_inner(), iv.b.into_inner(), xi.into_inner());
        let len = iv.length().into_inner();
        if len == 0.0 {
            return Err(Error::InvalidParameter(
                "toroidal interval has zero length".into(),
            ));
        }
        let (lo, hi) = if iv.contains(&f64_coord(xi)) {
            let left = tor_len(a, xi);
            let right = tor_len(xi, bb);
            if left >= right {
                // Piece (a−x, 0) mod 1, i.e. (1−left, 1).
                (1.0 - left, 1.0)
            } else {
                (0.0, right)
            }
        } else {
            // Unwrapped: starts at a−x mod 1.
            let start = tor_len(xi, a);
            (start, start + len)
        };
        volume *= hi - lo;
        axes.push(Interval::open(f64_coord(lo), f64_coord(hi.min(1.0)))?);
    }
    Ok((AxisBox::new(axes)?, volume))
}

/// Exact argmax over the d shifts r·(1/d,…,1/d): returns the shift index and
/// the volume of the largest usual box inside B₀ − rv.
pub fn best_shift(b0: &ToroidalBox<F64>, d: usize) -> Result<(usize, f64)> {
    if d == 0 {
        return Err(Error::ZeroDimension);
    }
    let mut best = (0usize, f64::NEG_INFINITY);
    for r in 0..d {
        let shift: Vec<F64> =
            vec![f64_coord(r as f64 / d as f64); b0.dimension()];
        let (_, vol) = largest_usual_box_in_shifted(b0, &shift)?;
        if vol > best.1 {
            best = (r, vol);
        }
    }
    Ok(best)
}

/// Union of the d shifts P + r·(1/d,…,1/d) mod 1 of the two-stage
/// construction run with budget n/d, as an exact toroidal point set.
pub fn toroidal_construction(
    n: u128,
    params: &ConstructionParams,
    seed: u64,
) -> Result<PointSet<Rational>> {
    let d = params.d;
    if n % d as u128 != 0 {
        return Err(Error::Divisibility(format!(
            "budget {n} is not divisible by the dimension {d}"
        )));
    }
    let inner = params.round_n(n / d as u128)?;
    let s1 = stage1(inner, params, seed, true)?;
    let base = stage2(&s1.points, params)?;
    let dr = Rational::from_integer(d.into());
    let mut shifted = Vec::new();
    for r in 0..d as u64 {
        let rv = Rational::new(r.into(), dr.numer().clone());
        for p in base.points() {
            let q: Vec<Rational> = p
                .iter()
                .map(|c| {
                    let mut v = c.clone() + rv.clone();
                    if v >= Rational::one() {
                        v -= Rational::one();
                    }
                    v
                })
                .collect();
            shifted.push(q);
        }
    }
    shifted.sort();
    shifted.dedup();
    PointSet::new(d, shifted, Space::Torus)
}
