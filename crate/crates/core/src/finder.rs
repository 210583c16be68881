//! Certified empty-box search: pick a translate with small total weight by
//! seeded sampling, shave the surrounding cube, and return the resulting box
//! together with its certificate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{AxisBox, Interval, PointSet, Space};
use crate::scalar::{f64_coord, Coord, F64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum WeightMode {
    Simple,
    TwoLevel,
}

/// Weight function on `[0, R0]`: `f(R) = log(R0/R)`, optionally capped at
/// `log(R0/T)` for `R <= T`. Vanishes for `R >= R0`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WeightSpec {
    pub r0: f64,
    pub t: Option<f64>,
    pub mode: WeightMode,
}

impl WeightSpec {
    pub fn simple(r0: f64) -> Result<Self> {
        if !(r0 > 0.0) {
            return Err(Error::InvalidParameter("R0 must be positive".into()));
        }
        Ok(WeightSpec {
            r0,
            t: None,
            mode: WeightMode::Simple,
        })
    }

    /// Requires `0 < T < R0` and `R0 - T < log(R0/T)`.
    pub fn two_level(r0: f64, t: f64) -> Result<Self> {
        if !(r0 > 0.0 && t > 0.0 && t < r0) {
            return Err(Error::InvalidParameter("need 0 < T < R0".into()));
        }
        if !(r0 - t < (r0 / t).ln()) {
            return Err(Error::InvalidParameter(
                "need R0 - T < log(R0/T)".into(),
            ));
        }
        Ok(WeightSpec {
            r0,
            t: Some(t),
            mode: WeightMode::TwoLevel,
        })
    }

    /// Default simple spec, `R0 = 2d`.
    pub fn simple_default(d: usize) -> Self {
        WeightSpec::simple(2.0 * d as f64).expect("positive R0")
    }

    /// Two-level preset `(2d, 2d e^{-2d})`.
    pub fn two_level_exponential(d: usize) -> Result<Self> {
        let r0 = 2.0 * d as f64;
        WeightSpec::two_level(r0, r0 * (-r0).exp())
    }

    /// Two-level preset `(3.69513, 0.101622)` optimized for d = 2.
    pub fn two_level_planar() -> Result<Self> {
        WeightSpec::two_level(3.69513, 0.101622)
    }

    /// Mass `M = ∫ f`: `R0` for simple, `R0 - T` for two-level.
    pub fn mass(&self) -> f64 {
        match self.t {
            None => self.r0,
            Some(t) => self.r0 - t,
        }
    }

    fn f(&self, radius_measure: f64) -> f64 {
        if radius_measure >= self.r0 {
            return 0.0;
        }
        match self.t {
            Some(t) if radius_measure <= t => (self.r0 / t).ln(),
            _ => (self.r0 / radius_measure).ln(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FinderParams {
    pub weight: WeightSpec,
    pub sample_budget: u64,
    pub rng_seed: u64,
}

impl FinderParams {
    /// Default budget `1000·d` with the simple weight `R0 = 2d`.
    pub fn simple_default(d: usize, seed: u64) -> Self {
        FinderParams {
            weight: WeightSpec::simple_default(d),
            sample_budget: 1000 * d as u64,
            rng_seed: seed,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub theorem_bound_met: bool,
    pub lemma_lower_bound: f64,
    pub weight_sum: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertifiedBox {
    #[serde(rename = "box")]
    pub empty_box: AxisBox<F64>,
    pub volume: f64,
    pub certificate: Certificate,
    pub translate_accepted: bool,
}

/// Half the side of the cube `B = [-δ, δ]^d` of volume `R0/n`.
pub fn delta(r0: f64, n: usize, d: usize) -> f64 {
    0.5 * (r0 / n as f64).powf(1.0 / d as f64)
}

/// `F(x) = f(2^d r^d n)` for `r = ‖x‖∞`; vanishes outside `B`.
pub fn weight_at(x: &[f64], n: usize, d: usize, spec: &WeightSpec) -> f64 {
    let r = x.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let radius_measure = (2.0f64).powi(d as i32) * r.powi(d as i32) * n as f64;
    if radius_measure == 0.0 {
        return f64::INFINITY;
    }
    spec.f(radius_measure)
}

fn points_f64(p: &PointSet<F64>) -> Vec<Vec<f64>> {
    p.points()
        .iter()
        .map(|pt| pt.iter().map(|x| x.to_f64()).collect())
        .collect()
}

fn weight_sum_at(points: &[Vec<f64>], t: &[f64], n: usize, d: usize, spec: &WeightSpec) -> f64 {
    let mut rel = vec![0.0f64; d];
    let mut sum = 0.0;
    for p in points {
        for i in 0..d {
            rel[i] = p[i] - t[i];
        }
        sum += weight_at(&rel, n, d, spec);
        if sum.is_infinite() {
            break;
        }
    }
    sum
}

/// Sample translates from `[δ, 1-δ]^d` until one has weight sum at most
/// `M/(1-2δ)^d`; fall back to the minimum-weight translate seen.
pub fn find_translate(p: &PointSet<F64>, params: &FinderParams) -> Result<(Vec<f64>, f64, bool)> {
    let d = p.dimension();
    let n = p.len();
    let r0 = params.weight.r0;
    if n > 0 && r0 > n as f64 {
        return Err(Error::Precondition(format!(
            "R0 = {r0} exceeds n = {n}; use the trivial slab instead"
        )));
    }
    if n == 0 {
        // No points: the center works with zero weight.
        return Ok((vec![0.5; d], 0.0, true));
    }
    let del = delta(r0, n, d);
    if del > 0.5 {
        return Err(Error::Precondition("δ exceeds 1/2".into()));
    }
    let threshold = params.weight.mass() / (1.0 - 2.0 * del).powi(d as i32);
    let points = points_f64(p);
    let mut rng = ChaCha12Rng::seed_from_u64(params.rng_seed);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for _ in 0..params.sample_budget.max(1) {
        let t: Vec<f64> = (0..d)
            .map(|_| rng.gen_range(del..=(1.0 - del)))
            .collect();
        let w = weight_sum_at(&points, &t, n, d, &params.weight);
        if w <= threshold {
            return Ok((t, w, true));
        }
        if best.as_ref().map_or(true, |(_, bw)| w < *bw) {
            best = Some((t, w));
        }
    }
    let (t, w) = best.expect("at least one sample");
    Ok((t, w, false))
}

/// Shave the sides off `B = [-δ, δ]^d`: for each point the dominant
/// coordinate (largest absolute value, ties to the lowest index) caps one
/// side of the box.
pub fn shave(points: &[Vec<f64>], del: f64, d: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut a = vec![del; d]; // negative sides
    let mut b = vec![del; d]; // positive sides
    for p in points {
        let mut dom = 0usize;
        for i in 1..d {
            if p[i].abs() > p[dom].abs() {
                dom = i;
            }
        }
        if p[dom].abs() > del {
            return Err(Error::Precondition(format!(
                "point outside B: |{}| > {del}",
                p[dom]
            )));
        }
        if p[dom] <= 0.0 {
            a[dom] = a[dom].min(-p[dom]);
        }
        if p[dom] >= 0.0 {
            b[dom] = b[dom].min(p[dom]);
        }
    }
    Ok((a, b))
}

fn lemma_bound(points: &[Vec<f64>], del: f64, r0: f64, n: usize) -> f64 {
    let mut prod = 1.0;
    for p in points {
        let r = p.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        prod *= (r / del).sqrt();
    }
    (r0 / n.max(1) as f64) * prod
}

/// Closed-form Theorem 1 lower bound `(1/n)(2d/e)(1 - 4d n^{-1/d})`, clamped
/// at zero.
pub fn theorem1_bound(d: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let d_f = d as f64;
    let n_f = n as f64;
    ((2.0 * d_f / std::f64::consts::E) * (1.0 - 4.0 * d_f * n_f.powf(-1.0 / d_f)) / n_f).max(0.0)
}

/// Theorem 3 limit bound `R0 exp(-(R0-T)/(2d))` on `c_d`.
pub fn theorem3_bound(d: usize, spec: &WeightSpec) -> Result<f64> {
    let t = spec
        .t
        .ok_or_else(|| Error::InvalidParameter("two-level spec required".into()))?;
    Ok(spec.r0 * (-(spec.r0 - t) / (2.0 * d as f64)).exp())
}

/// Compose translate search and shaving into a certified empty box in
/// `[0,1]^d`.
pub fn find_empty_box(p: &PointSet<F64>, params: &FinderParams) -> Result<CertifiedBox> {
    if p.space() != Space::Cube {
        return Err(Error::Precondition("cube-space point set required".into()));
    }
    let d = p.dimension();
    let n = p.len();
    if n == 0 {
        let axes = (0..d)
            .map(|_| Interval::open(f64_coord(0.0), f64_coord(1.0)))
            .collect::<Result<Vec<_>>>()?;
        return Ok(CertifiedBox {
            empty_box: AxisBox::new(axes)?,
            volume: 1.0,
            certificate: Certificate {
                theorem_bound_met: false,
                lemma_lower_bound: 1.0,
                weight_sum: 0.0,
            },
            translate_accepted: true,
        });
    }
    let (t, weight_sum, accepted) = find_translate(p, params)?;
    let r0 = params.weight.r0;
    let del = delta(r0, n, d);

    // P' = (P - t) ∩ B, points on the boundary of B included.
    let points = points_f64(p);
    let shifted: Vec<Vec<f64>> = points
        .iter()
        .map(|pt| (0..d).map(|i| pt[i] - t[i]).collect::<Vec<f64>>())
        .filter(|q: &Vec<f64>| q.iter().all(|x| x.abs() <= del))
        .collect();
    let (a, b) = shave(&shifted, del, d)?;

    let axes = (0..d)
        .map(|i| {
            let lo = (t[i] - a[i]).max(0.0);
            let hi = (t[i] + b[i]).min(1.0);
            Interval::open(f64_coord(lo), f64_coord(hi))
        })
        .collect::<Result<Vec<_>>>()?;
    let empty_box = AxisBox::new(axes)?;
    if !empty_box.is_empty_of(p)? {
        return Err(Error::Internal("shaved box is not empty".into()));
    }
    let volume = Coord::to_f64(&empty_box.volume());

    let lemma = lemma_bound(&shifted, del, r0, n);
    if volume < lemma - 1e-12 {
        return Err(Error::Internal(format!(
            "lemma bound violated: {volume} < {lemma}"
        )));
    }

    // Two-level acceptance caps the weight below log(R0/T), so no point of P'
    // can sit in the capped zone R <= T.
    if accepted {
        if let Some(t_cap) = params.weight.t {
            for q in &shifted {
                let r = q.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
                let measure = (2.0f64).powi(d as i32) * r.powi(d as i32) * n as f64;
                if measure <= t_cap && weight_sum < (r0 / t_cap).ln() {
                    return Err(Error::Internal(
                        "two-level cap violated despite accepted weight".into(),
                    ));
                }
            }
        }
    }

    let theorem_applicable = accepted
        && params.weight.mode == WeightMode::Simple
        && (params.weight.r0 - 2.0 * d as f64).abs() < 1e-9
        && 4.0 * d as f64 * (n as f64).powf(-1.0 / d as f64) < 1.0;
    let theorem_bound_met = theorem_applicable && volume >= theorem1_bound(d, n) - 1e-12;

    Ok(CertifiedBox {
        empty_box,
        volume,
        certificate: Certificate {
            theorem_bound_met,
            lemma_lower_bound: lemma,
            weight_sum,
        },
        translate_accepted: accepted,
    })
}
