//! Exact computation of the largest empty axis-parallel box, in the cube and
//! on the torus.
//!
//! Candidate grid: every maximal empty box has each face supported by a point
//! coordinate or the cube boundary, so per-axis candidate bounds are
//! `{0, 1} ∪ {coordinates of P}` (point coordinates only on the torus, which
//! has no boundary). The pruned depth-first search below and the independent
//! no-pruning enumeration in `exhaustive_volume` both search exactly this
//! grid; the test suite cross-checks them against each other.

use std::collections::BTreeMap;

use num::{BigUint, Integer, One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{AxisBox, Interval, PointSet, Space, ToroidalBox, ToroidalInterval};
use crate::scalar::{Coord, Rational, F64};

#[derive(Debug, Clone, Serialize)]
pub enum Witness<C: Coord> {
    Cube(AxisBox<C>),
    Torus(ToroidalBox<C>),
}

#[derive(Debug, Clone, Serialize)]
pub struct DispersionResult<C: Coord> {
    pub volume: C,
    pub witness: Witness<C>,
    /// `volume × n`, the quantity compared against `c_d`.
    pub scaled: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct OracleOptions {
    /// Upper bound on the number of candidate boxes the search may visit.
    pub max_candidate_boxes: u64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            max_candidate_boxes: 200_000_000,
        }
    }
}

fn scaled_volume<C: Coord>(volume: &C, n: usize) -> f64 {
    volume.to_f64() * n as f64
}

fn candidates_cube<C: Coord>(points: &[Vec<C>], axis: usize) -> Vec<C> {
    let mut c: Vec<C> = points.iter().map(|p| p[axis].clone()).collect();
    c.push(C::zero());
    c.push(C::one());
    c.sort();
    c.dedup();
    c
}

fn candidates_torus<C: Coord>(points: &[Vec<C>], axis: usize) -> Vec<C> {
    let mut c: Vec<C> = points.iter().map(|p| p[axis].clone()).collect();
    c.sort();
    c.dedup();
    c
}

// ---------------------------------------------------------------------------
// Generic depth-first search with pruning (any dimension).
// ---------------------------------------------------------------------------

struct CubeDfs<'a, C: Coord> {
    cands: Vec<Vec<C>>,
    points: &'a [Vec<C>],
    best_vol: C,
    best_bounds: Option<Vec<(C, C)>>,
    visited: u64,
    budget: u64,
}

impl<'a, C: Coord> CubeDfs<'a, C> {
    fn run(&mut self) -> Result<()> {
        let alive: Vec<usize> = (0..self.points.len()).collect();
        let mut prefix: Vec<(C, C)> = Vec::new();
        self.recurse(0, C::one(), alive, &mut prefix)
    }

    fn recurse(
        &mut self,
        axis: usize,
        partial_vol: C,
        alive: Vec<usize>,
        prefix: &mut Vec<(C, C)>,
    ) -> Result<()> {
        let d = self.cands.len();
        if axis == d {
            self.visited += 1;
            if self.visited > self.budget {
                return Err(Error::ResourceLimit(format!(
                    "candidate budget {} exhausted",
                    self.budget
                )));
            }
            if alive.is_empty() && partial_vol > self.best_vol {
                self.best_vol = partial_vol;
                self.best_bounds = Some(prefix.clone());
            }
            return Ok(());
        }
        let cands = self.cands[axis].clone();
        for i in 0..cands.len() {
            for j in (i + 1)..cands.len() {
                let lo = cands[i].clone();
                let hi = cands[j].clone();
                let vol = partial_vol.clone() * (hi.clone() - lo.clone());
                // Remaining axes extend at most over (0,1), so partial volume
                // bounds everything below this node.
                if vol <= self.best_vol {
                    continue;
                }
                let next_alive: Vec<usize> = alive
                    .iter()
                    .copied()
                    .filter(|&p| {
                        let x = &self.points[p][axis];
                        *x > lo && *x < hi
                    })
                    .collect();
                prefix.push((lo, hi));
                self.recurse(axis + 1, vol, next_alive, prefix)?;
                prefix.pop();
            }
        }
        Ok(())
    }
}

fn dfs_cube<C: Coord>(
    points: &[Vec<C>],
    d: usize,
    opts: &OracleOptions,
) -> Result<(C, Vec<(C, C)>)> {
    let cands: Vec<Vec<C>> = (0..d).map(|a| candidates_cube(points, a)).collect();
    let mut dfs = CubeDfs {
        cands,
        points,
        best_vol: C::zero(),
        best_bounds: None,
        visited: 0,
        budget: opts.max_candidate_boxes,
    };
    dfs.run()?;
    dfs.best_bounds
        .map(|b| (dfs.best_vol, b))
        .ok_or_else(|| Error::Internal("no empty box found on candidate grid".into()))
}

/// Independent no-pruning enumeration over the same candidate grid.
/// Returns the maximum empty-box volume only. Deliberately naive; used as the
/// cross-check oracle for the pruned search.
pub fn exhaustive_volume<C: Coord>(p: &PointSet<C>) -> Result<C> {
    let d = p.dimension();
    let points = p.points();
    let cands: Vec<Vec<C>> = (0..d).map(|a| candidates_cube(points, a)).collect();
    let mut best = C::zero();
    let mut pairs: Vec<(usize, usize)> = vec![(0, 1); d];
    loop {
        // Evaluate current box.
        let mut vol = C::one();
        for (a, &(i, j)) in pairs.iter().enumerate() {
            vol = vol * (cands[a][j].clone() - cands[a][i].clone());
        }
        let empty = points.iter().all(|pt| {
            !(0..d).all(|a| {
                let (i, j) = pairs[a];
                pt[a] > cands[a][i] && pt[a] < cands[a][j]
            })
        });
        if empty && vol > best {
            best = vol;
        }
        // Odometer step over all (i < j) pairs per axis.
        let mut a = 0;
        loop {
            if a == d {
                return Ok(best);
            }
            let (i, j) = pairs[a];
            if j + 1 < cands[a].len() {
                pairs[a] = (i, j + 1);
                break;
            } else if i + 2 < cands[a].len() {
                pairs[a] = (i + 1, i + 2);
                break;
            } else {
                pairs[a] = (0, 1);
                a += 1;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// d = 2 sweep (generic scalar).
// ---------------------------------------------------------------------------

struct GapSet<C: Coord> {
    ys: BTreeMap<C, usize>,
    gaps: BTreeMap<C, usize>,
}

impl<C: Coord> GapSet<C> {
    fn new() -> Self {
        let mut gaps = BTreeMap::new();
        gaps.insert(C::one(), 1usize);
        GapSet {
            ys: BTreeMap::new(),
            gaps,
        }
    }

    fn add_gap(&mut self, g: C) {
        *self.gaps.entry(g).or_insert(0) += 1;
    }

    fn remove_gap(&mut self, g: &C) {
        let c = self.gaps.get_mut(g).expect("gap present");
        *c -= 1;
        if *c == 0 {
            self.gaps.remove(g);
        }
    }

    fn insert(&mut self, y: C) {
        if let Some(c) = self.ys.get_mut(&y) {
            *c += 1;
            return;
        }
        let pred = self
            .ys
            .range(..y.clone())
            .next_back()
            .map(|(k, _)| k.clone())
            .unwrap_or_else(C::zero);
        let succ = self
            .ys
            .range(y.clone()..)
            .next()
            .map(|(k, _)| k.clone())
            .unwrap_or_else(C::one);
        self.remove_gap(&(succ.clone() - pred.clone()));
        self.add_gap(y.clone() - pred);
        self.add_gap(succ - y.clone());
        self.ys.insert(y, 1);
    }

    fn max_gap(&self) -> C {
        self.gaps
            .keys()
            .next_back()
            .cloned()
            .unwrap_or_else(C::zero)
    }

    /// First (lowest) gap of the given length, with 0/1 sentinels.
    fn find_gap(&self, len: &C) -> (C, C) {
        let mut prev = C::zero();
        for y in self.ys.keys() {
            if y.clone() - prev.clone() == *len {
                return (prev, y.clone());
            }
            prev = y.clone();
        }
        (prev, C::one())
    }
}

fn sweep_cube<C: Coord>(points: &[Vec<C>]) -> (C, Vec<(C, C)>) {
    let cx = candidates_cube(points, 0);
    let mut by_x: Vec<usize> = (0..points.len()).collect();
    by_x.sort_by(|&a, &b| points[a][0].cmp(&points[b][0]));

    let mut best_vol = C::zero();
    let mut best: Option<(usize, usize)> = None;
    for i in 0..cx.len() - 1 {
        let mut gaps = GapSet::new();
        // Points with x == cx[k] enter the slab once the right bound passes them.
        let mut cursor = by_x.partition_point(|&p| points[p][0] <= cx[i]);
        for j in (i + 1)..cx.len() {
            while cursor < by_x.len() && points[by_x[cursor]][0] < cx[j] {
                gaps.insert(points[by_x[cursor]][1].clone());
                cursor += 1;
            }
            let gap = gaps.max_gap();
            let vol = (cx[j].clone() - cx[i].clone()) * gap.clone();
            if vol > best_vol {
                best_vol = vol;
                best = Some((i, j));
            }
            // Future widths are bounded by 1 - cx[i] and the gap only shrinks.
            if (C::one() - cx[i].clone()) * gap <= best_vol && j + 1 < cx.len() {
                break;
            }
        }
    }
    let (i, j) = best.expect("at least one candidate box");
    // Rebuild the winning slab to recover the y-interval.
    let mut gaps = GapSet::new();
    for p in points {
        if p[0] > cx[i] && p[0] < cx[j] {
            gaps.insert(p[1].clone());
        }
    }
    let g = gaps.max_gap();
    let (ylo, yhi) = gaps.find_gap(&g);
    (best_vol, vec![(cx[i].clone(), cx[j].clone()), (ylo, yhi)])
}

// ---------------------------------------------------------------------------
// d = 2 sweep on an integer grid (fast path for large exact sets).
// ---------------------------------------------------------------------------

struct GapSetU64 {
    ys: BTreeMap<u64, u32>,
    gaps: BTreeMap<u64, u32>,
    hi: u64,
}

impl GapSetU64 {
    fn new(hi: u64) -> Self {
        let mut gaps = BTreeMap::new();
        gaps.insert(hi, 1u32);
        GapSetU64 {
            ys: BTreeMap::new(),
            gaps,
            hi,
        }
    }

    fn add_gap(&mut self, g: u64) {
        *self.gaps.entry(g).or_insert(0) += 1;
    }

    fn remove_gap(&mut self, g: u64) {
        let c = self.gaps.get_mut(&g).expect("gap present");
        *c -= 1;
        if *c == 0 {
            self.gaps.remove(&g);
        }
    }

    fn insert(&mut self, y: u64) {
        if let Some(c) = self.ys.get_mut(&y) {
            *c += 1;
            return;
        }
        let pred = self.ys.range(..y).next_back().map(|(&k, _)| k).unwrap_or(0);
        let succ = self
            .ys
            .range(y..)
            .next()
            .map(|(&k, _)| k)
            .unwrap_or(self.hi);
        self.remove_gap(succ - pred);
        self.add_gap(y - pred);
        self.add_gap(succ - y);
        self.ys.insert(y, 1);
    }

    fn max_gap(&self) -> u64 {
        self.gaps.keys().next_back().copied().unwrap_or(0)
    }

    fn find_gap(&self, len: u64) -> (u64, u64) {
        let mut prev = 0u64;
        for (&y, _) in &self.ys {
            if y - prev == len {
                return (prev, y);
            }
            prev = y;
        }
        (prev, self.hi)
    }
}

fn sweep_cube_u64(points: &[(u64, u64)], lx: u64, ly: u64) -> (u128, [(u64, u64); 2]) {
    let mut cx: Vec<u64> = points.iter().map(|p| p.0).collect();
    cx.push(0);
    cx.push(lx);
    cx.sort_unstable();
    cx.dedup();
    let mut by_x: Vec<usize> = (0..points.len()).collect();
    by_x.sort_unstable_by_key(|&p| points[p].0);

    let mut best_num: u128 = 0;
    let mut best: Option<(usize, usize)> = None;
    for i in 0..cx.len() - 1 {
        let mut gaps = GapSetU64::new(ly);
        let mut cursor = by_x.partition_point(|&p| points[p].0 <= cx[i]);
        for j in (i + 1)..cx.len() {
            while cursor < by_x.len() && points[by_x[cursor]].0 < cx[j] {
                gaps.insert(points[by_x[cursor]].1);
                cursor += 1;
            }
            let gap = gaps.max_gap();
            let vol = (cx[j] - cx[i]) as u128 * gap as u128;
            if vol > best_num {
                best_num = vol;
                best = Some((i, j));
            }
            if (lx - cx[i]) as u128 * gap as u128 <= best_num && j + 1 < cx.len() {
                break;
            }
        }
    }
    let (i, j) = best.expect("at least one candidate box");
    let mut gaps = GapSetU64::new(ly);
    for p in points {
        if p.0 > cx[i] && p.0 < cx[j] {
            gaps.insert(p.1);
        }
    }
    let g = gaps.max_gap();
    let (ylo, yhi) = gaps.find_gap(g);
    (best_num, [(cx[i], cx[j]), (ylo, yhi)])
}

/// Decide whether some empty box beats `threshold_num` grid units without
/// tracking a witness: the sweep starts from the threshold instead of zero,
/// so the pruning row-break fires immediately on rows that cannot win.
fn sweep_cube_u64_exceeds(points: &[(u64, u64)], lx: u64, ly: u64, threshold_num: u128) -> bool {
    let mut cx: Vec<u64> = points.iter().map(|p| p.0).collect();
    cx.push(0);
    cx.push(lx);
    cx.sort_unstable();
    cx.dedup();
    let mut by_x: Vec<usize> = (0..points.len()).collect();
    by_x.sort_unstable_by_key(|&p| points[p].0);
    for i in 0..cx.len() - 1 {
        let mut gaps = GapSetU64::new(ly);
        let mut cursor = by_x.partition_point(|&p| points[p].0 <= cx[i]);
        for j in (i + 1)..cx.len() {
            while cursor < by_x.len() && points[by_x[cursor]].0 < cx[j] {
                gaps.insert(points[by_x[cursor]].1);
                cursor += 1;
            }
            let gap = gaps.max_gap();
            if (cx[j] - cx[i]) as u128 * gap as u128 > threshold_num {
                return true;
            }
            if (lx - cx[i]) as u128 * gap as u128 <= threshold_num && j + 1 < cx.len() {
                break;
            }
        }
    }
    false
}

/// Whether the largest empty open box of `p` has volume strictly greater
/// than `threshold`. Much faster than the full oracle on large d = 2 grids.
pub fn dispersion_exceeds_exact(p: &PointSet<Rational>, threshold: &Rational) -> Result<bool> {
    if p.space() != Space::Cube {
        return Err(Error::Precondition("cube-space point set required".into()));
    }
    if threshold < &Rational::zero() {
        return Ok(true);
    }
    if p.dimension() == 2 {
        if let Some((denoms, grid)) = to_integer_grid(p.points(), 2) {
            let pts: Vec<(u64, u64)> = grid.iter().map(|r| (r[0], r[1])).collect();
            let scale = Rational::from_integer((denoms[0] as i64).into())
                * Rational::from_integer((denoms[1] as i64).into());
            let t = threshold * &scale;
            // Integer volumes exceed the rational threshold exactly when they
            // exceed its floor.
            let seed = t.floor().to_integer();
            let seed: u128 = seed
                .try_into()
                .map_err(|_| Error::ResourceLimit("threshold too large".into()))?;
            return Ok(sweep_cube_u64_exceeds(&pts, denoms[0], denoms[1], seed));
        }
    }
    let res = largest_empty_box_exact(p, &OracleOptions::default())?;
    Ok(&res.volume > threshold)
}

/// Per-axis common denominators and integer numerators, when they fit in u64.
fn to_integer_grid(points: &[Vec<Rational>], d: usize) -> Option<(Vec<u64>, Vec<Vec<u64>>)> {
    let mut denoms = vec![BigUint::one(); d];
    for p in points {
        for (a, x) in p.iter().enumerate() {
            let den = x.denom().to_biguint()?;
            denoms[a] = denoms[a].lcm(&den);
        }
    }
    let denoms_u64: Vec<u64> = denoms
        .iter()
        .map(|l| l.to_u64())
        .collect::<Option<Vec<_>>>()?;
    // Keep products of two axis volumes inside u128.
    if denoms_u64.iter().any(|&l| l > u32::MAX as u64) {
        return None;
    }
    let mut grid = Vec::with_capacity(points.len());
    for p in points {
        let mut row = Vec::with_capacity(d);
        for (a, x) in p.iter().enumerate() {
            let num = x.numer().to_biguint()?;
            let den = x.denom().to_biguint()?;
            let scaled = num * (&denoms[a] / den);
            row.push(scaled.to_u64()?);
        }
        grid.push(row);
    }
    Some((denoms_u64, grid))
}

// ---------------------------------------------------------------------------
// Toroidal search.
// ---------------------------------------------------------------------------

fn toroidal_len<C: Coord>(a: &C, b: &C) -> C {
    if a < b {
        b.clone() - a.clone()
    } else {
        C::one() - a.clone() + b.clone()
    }
}

fn in_toroidal<C: Coord>(a: &C, b: &C, x: &C) -> bool {
    if a < b {
        x > a && x < b
    } else {
        x > a || x < b
    }
}

struct TorusDfs<'a, C: Coord> {
    cands: Vec<Vec<C>>,
    points: &'a [Vec<C>],
    best_vol: C,
    best_bounds: Option<Vec<(C, C)>>,
    visited: u64,
    budget: u64,
}

impl<'a, C: Coord> TorusDfs<'a, C> {
    fn recurse(
        &mut self,
        axis: usize,
        partial_vol: C,
        alive: Vec<usize>,
        prefix: &mut Vec<(C, C)>,
    ) -> Result<()> {
        let d = self.cands.len();
        if axis == d {
            self.visited += 1;
            if self.visited > self.budget {
                return Err(Error::ResourceLimit(format!(
                    "candidate budget {} exhausted",
                    self.budget
                )));
            }
            if alive.is_empty() && partial_vol > self.best_vol {
                self.best_vol = partial_vol;
                self.best_bounds = Some(prefix.clone());
            }
            return Ok(());
        }
        let cands = self.cands[axis].clone();
        for a in &cands {
            for b in &cands {
                let len = toroidal_len(a, b);
                let vol = partial_vol.clone() * len;
                if vol <= self.best_vol {
                    continue;
                }
                let next_alive: Vec<usize> = alive
                    .iter()
                    .copied()
                    .filter(|&p| in_toroidal(a, b, &self.points[p][axis]))
                    .collect();
                prefix.push((a.clone(), b.clone()));
                self.recurse(axis + 1, vol, next_alive, prefix)?;
                prefix.pop();
            }
        }
        Ok(())
    }
}

fn dfs_torus<C: Coord>(
    points: &[Vec<C>],
    d: usize,
    opts: &OracleOptions,
) -> Result<(C, Vec<(C, C)>)> {
    let cands: Vec<Vec<C>> = (0..d).map(|a| candidates_torus(points, a)).collect();
    let mut dfs = TorusDfs {
        cands,
        points,
        best_vol: C::zero(),
        best_bounds: None,
        visited: 0,
        budget: opts.max_candidate_boxes,
    };
    let alive: Vec<usize> = (0..points.len()).collect();
    let mut prefix = Vec::new();
    dfs.recurse(0, C::one(), alive, &mut prefix)?;
    dfs.best_bounds
        .map(|b| (dfs.best_vol, b))
        .ok_or_else(|| Error::Internal("no toroidal box found on candidate grid".into()))
}

struct CircularGapSetU64 {
    ys: BTreeMap<u64, u32>,
    gaps: BTreeMap<u64, u32>,
    period: u64,
}

impl CircularGapSetU64 {
    fn new(period: u64) -> Self {
        CircularGapSetU64 {
            ys: BTreeMap::new(),
            gaps: BTreeMap::new(),
            period,
        }
    }

    fn circ(&self, from: u64, to: u64) -> u64 {
        if to > from {
            to - from
        } else {
            self.period - from + to
        }
    }

    fn add_gap(&mut self, g: u64) {
        *self.gaps.entry(g).or_insert(0) += 1;
    }

    fn remove_gap(&mut self, g: u64) {
        let c = self.gaps.get_mut(&g).expect("gap present");
        *c -= 1;
        if *c == 0 {
            self.gaps.remove(&g);
        }
    }

    fn insert(&mut self, y: u64) {
        if let Some(c) = self.ys.get_mut(&y) {
            *c += 1;
            return;
        }
        if self.ys.is_empty() {
            self.ys.insert(y, 1);
            self.add_gap(self.period);
            return;
        }
        let pred = self
            .ys
            .range(..y)
            .next_back()
            .map(|(&k, _)| k)
            .unwrap_or_else(|| *self.ys.keys().next_back().unwrap());
        let succ = self
            .ys
            .range(y..)
            .next()
            .map(|(&k, _)| k)
            .unwrap_or_else(|| *self.ys.keys().next().unwrap());
        let old = self.circ(pred, succ);
        self.remove_gap(old);
        self.add_gap(self.circ(pred, y));
        self.add_gap(self.circ(y, succ));
        self.ys.insert(y, 1);
    }

    /// Max circular gap; the full period when no points are present.
    fn max_gap(&self) -> u64 {
        if self.ys.is_empty() {
            self.period
        } else {
            self.gaps.keys().next_back().copied().unwrap_or(self.period)
        }
    }

    /// First circular gap of the given length, as (start, end) coordinates.
    fn find_gap(&self, len: u64, fallback: u64) -> (u64, u64) {
        if self.ys.is_empty() {
            return (fallback, fallback);
        }
        let keys: Vec<u64> = self.ys.keys().copied().collect();
        for w in 0..keys.len() {
            let from = keys[w];
            let to = keys[(w + 1) % keys.len()];
            if self.circ(from, to) == len {
                return (from, to);
            }
        }
        (fallback, fallback)
    }
}

fn sweep_torus_u64(points: &[(u64, u64)], lx: u64, ly: u64) -> (u128, [(u64, u64); 2]) {
    let mut cx: Vec<u64> = points.iter().map(|p| p.0).collect();
    cx.sort_unstable();
    cx.dedup();
    let m = cx.len();
    let mut by_x: Vec<Vec<u64>> = vec![Vec::new(); m];
    for p in points {
        let idx = cx.binary_search(&p.0).unwrap();
        by_x[idx].push(p.1);
    }

    let mut best_num: u128 = 0;
    let mut best: Option<(usize, usize)> = None;
    for i in 0..m {
        let mut gaps = CircularGapSetU64::new(ly);
        for t in 1..=m {
            // Column entering the slab when the right bound moves past it.
            if t >= 2 {
                let col = (i + t - 1) % m;
                for &y in &by_x[col] {
                    gaps.insert(y);
                }
            }
            let j = (i + t) % m;
            let len = if t == m {
                lx
            } else if cx[j] > cx[i] {
                cx[j] - cx[i]
            } else {
                lx - cx[i] + cx[j]
            };
            let gap = gaps.max_gap();
            let vol = len as u128 * gap as u128;
            if vol > best_num {
                best_num = vol;
                best = Some((i, t));
            }
        }
    }
    let (i, t) = best.expect("at least one candidate box");
    let j = (i + t) % m;
    let mut gaps = CircularGapSetU64::new(ly);
    let a = cx[i];
    let b = cx[j];
    for p in points {
        let inside = if t == m {
            p.0 != a
        } else if a < b {
            p.0 > a && p.0 < b
        } else {
            p.0 > a || p.0 < b
        };
        if inside {
            gaps.insert(p.1);
        }
    }
    let g = gaps.max_gap();
    let fallback = points.iter().map(|p| p.1).min().unwrap_or(0);
    let (ylo, yhi) = gaps.find_gap(g, fallback);
    (best_num, [(a, b), (ylo, yhi)])
}

// ---------------------------------------------------------------------------
// Public entry points.
// ---------------------------------------------------------------------------

fn bounds_to_box<C: Coord>(bounds: &[(C, C)]) -> Result<AxisBox<C>> {
    AxisBox::new(
        bounds
            .iter()
            .map(|(lo, hi)| Interval::open(lo.clone(), hi.clone()))
            .collect::<Result<Vec<_>>>()?,
    )
}

fn bounds_to_toroidal<C: Coord>(bounds: &[(C, C)]) -> Result<ToroidalBox<C>> {
    ToroidalBox::new(
        bounds
            .iter()
            .map(|(a, b)| ToroidalInterval::new(a.clone(), b.clone()))
            .collect::<Result<Vec<_>>>()?,
    )
}

fn check_cube_witness<C: Coord>(b: &AxisBox<C>, p: &PointSet<C>, volume: &C) -> Result<()> {
    if !b.inside_unit_cube() || !b.is_empty_of(p)? || b.volume() != *volume {
        return Err(Error::Internal("invalid cube witness".into()));
    }
    Ok(())
}

fn check_torus_witness<C: Coord>(b: &ToroidalBox<C>, p: &PointSet<C>, volume: &C) -> Result<()> {
    if !b.is_empty_of(p)? || b.volume() != *volume {
        return Err(Error::Internal("invalid toroidal witness".into()));
    }
    Ok(())
}

/// Largest empty open box for an exact point set in the cube.
pub fn largest_empty_box_exact(
    p: &PointSet<Rational>,
    opts: &OracleOptions,
) -> Result<DispersionResult<Rational>> {
    if p.space() != Space::Cube {
        return Err(Error::Precondition("cube-space point set required".into()));
    }
    let d = p.dimension();
    let (volume, bounds) = if d == 2 {
        if let Some((denoms, grid)) = to_integer_grid(p.points(), 2) {
            let pts: Vec<(u64, u64)> = grid.iter().map(|r| (r[0], r[1])).collect();
            let (_num, w) = sweep_cube_u64(&pts, denoms[0], denoms[1]);
            let conv = |v: u64, l: u64| Rational::from_int_ratio(v as i64, l as i64);
            let bounds = vec![
                (conv(w[0].0, denoms[0]), conv(w[0].1, denoms[0])),
                (conv(w[1].0, denoms[1]), conv(w[1].1, denoms[1])),
            ];
            let volume = (bounds[0].1.clone() - bounds[0].0.clone())
                * (bounds[1].1.clone() - bounds[1].0.clone());
            (volume, bounds)
        } else {
            sweep_cube(p.points())
        }
    } else {
        dfs_cube(p.points(), d, opts)?
    };
    let witness = bounds_to_box(&bounds)?;
    check_cube_witness(&witness, p, &volume)?;
    Ok(DispersionResult {
        scaled: scaled_volume(&volume, p.len()),
        volume,
        witness: Witness::Cube(witness),
    })
}

/// Largest empty open box for a float point set in the cube.
pub fn largest_empty_box_f64(
    p: &PointSet<F64>,
    opts: &OracleOptions,
) -> Result<DispersionResult<F64>> {
    if p.space() != Space::Cube {
        return Err(Error::Precondition("cube-space point set required".into()));
    }
    let d = p.dimension();
    let (volume, bounds) = if d == 2 {
        sweep_cube(p.points())
    } else {
        dfs_cube(p.points(), d, opts)?
    };
    let witness = bounds_to_box(&bounds)?;
    check_cube_witness(&witness, p, &volume)?;
    Ok(DispersionResult {
        scaled: scaled_volume(&volume, p.len()),
        volume,
        witness: Witness::Cube(witness),
    })
}

fn torus_full_result<C: Coord>(p: &PointSet<C>) -> Result<DispersionResult<C>> {
    // No supported witness exists for an empty set on the torus; report the
    // full torus at volume 1.
    let d = p.dimension();
    let witness = bounds_to_toroidal(&vec![(C::zero(), C::zero()); d])?;
    Ok(DispersionResult {
        volume: C::one(),
        scaled: 0.0,
        witness: Witness::Torus(witness),
    })
}

/// Largest empty open toroidal box for an exact point set on the torus.
pub fn largest_empty_toroidal_box_exact(
    p: &PointSet<Rational>,
    opts: &OracleOptions,
) -> Result<DispersionResult<Rational>> {
    if p.space() != Space::Torus {
        return Err(Error::Precondition("torus-space point set required".into()));
    }
    if p.is_empty() {
        return torus_full_result(p);
    }
    let d = p.dimension();
    let (volume, bounds) = if d == 2 {
        if let Some((denoms, grid)) = to_integer_grid(p.points(), 2) {
            let pts: Vec<(u64, u64)> = grid.iter().map(|r| (r[0], r[1])).collect();
            let (_num, w) = sweep_torus_u64(&pts, denoms[0], denoms[1]);
            let conv = |v: u64, l: u64| Rational::from_int_ratio(v as i64, l as i64);
            let bounds = vec![
                (conv(w[0].0, denoms[0]), conv(w[0].1, denoms[0])),
                (conv(w[1].0, denoms[1]), conv(w[1].1, denoms[1])),
            ];
            let volume = toroidal_len(&bounds[0].0, &bounds[0].1)
                * toroidal_len(&bounds[1].0, &bounds[1].1);
            (volume, bounds)
        } else {
            dfs_torus(p.points(), d, opts)?
        }
    } else {
        dfs_torus(p.points(), d, opts)?
    };
    let witness = bounds_to_toroidal(&bounds)?;
    check_torus_witness(&witness, p, &volume)?;
    Ok(DispersionResult {
        scaled: scaled_volume(&volume, p.len()),
        volume,
        witness: Witness::Torus(witness),
    })
}

/// Largest empty open toroidal box for a float point set on the torus.
pub fn largest_empty_toroidal_box_f64(
    p: &PointSet<F64>,
    opts: &OracleOptions,
) -> Result<DispersionResult<F64>> {
    if p.space() != Space::Torus {
        return Err(Error::Precondition("torus-space point set required".into()));
    }
    if p.is_empty() {
        return torus_full_result(p);
    }
    let d = p.dimension();
    let (volume, bounds) = dfs_torus(p.points(), d, opts)?;
    let witness = bounds_to_toroidal(&bounds)?;
    check_torus_witness(&witness, p, &volume)?;
    Ok(DispersionResult {
        scaled: scaled_volume(&volume, p.len()),
        volume,
        witness: Witness::Torus(witness),
    })
}

/// Widest empty axis-aligned slab: guaranteed volume at least `1/(n+1)`.
pub fn trivial_slab<C: Coord>(p: &PointSet<C>) -> Result<AxisBox<C>> {
    if p.space() != Space::Cube {
        return Err(Error::Precondition("cube-space point set required".into()));
    }
    let d = p.dimension();
    let mut best_axis = 0usize;
    let mut best_gap: Option<(C, C, C)> = None; // (len, lo, hi)
    for axis in 0..d {
        let mut coords: Vec<C> = p.points().iter().map(|pt| pt[axis].clone()).collect();
        coords.push(C::zero());
        coords.push(C::one());
        coords.sort();
        for w in coords.windows(2) {
            let len = w[1].clone() - w[0].clone();
            let better = match &best_gap {
                None => true,
                Some((g, _, _)) => len > *g,
            };
            if better {
                best_gap = Some((len, w[0].clone(), w[1].clone()));
                best_axis = axis;
            }
        }
    }
    let (_, lo, hi) = best_gap.expect("nonempty candidate list");
    let axes = (0..d)
        .map(|a| {
            if a == best_axis {
                Interval::open(lo.clone(), hi.clone())
            } else {
                Interval::open(C::zero(), C::one())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    AxisBox::new(axes)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    use super::*;
    use crate::scalar::f64_coord;

    fn r(n: i64, d: i64) -> Rational {
        Rational::from_int_ratio(n, d)
    }

    fn exact_set(d: usize, pts: Vec<Vec<Rational>>, space: Space) -> PointSet<Rational> {
        PointSet::new(d, pts, space).unwrap()
    }

    #[test]
    fn empty_set_full_cube() {
        let p = exact_set(2, vec![], Space::Cube);
        let res = largest_empty_box_exact(&p, &OracleOptions::default()).unwrap();
        assert_eq!(res.volume, r(1, 1));
    }

    #[test]
    fn single_center_point() {
        let p = exact_set(2, vec![vec![r(1, 2), r(1, 2)]], Space::Cube);
        let res = largest_empty_box_exact(&p, &OracleOptions::default()).unwrap();
        assert_eq!(res.volume, r(1, 2));
    }

    #[test]
    fn midpoint_grid() {
        let p = exact_set(
            2,
            vec![
                vec![r(1, 4), r(1, 4)],
                vec![r(1, 4), r(3, 4)],
                vec![r(3, 4), r(1, 4)],
                vec![r(3, 4), r(3, 4)],
            ],
            Space::Cube,
        );
        let res = largest_empty_box_exact(&p, &OracleOptions::default()).unwrap();
        assert_eq!(res.volume, r(1, 2));
    }

    #[test]
    fn sweep_matches_dfs_and_exhaustive_small() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..25 {
            let pts: Vec<Vec<Rational>> = (0..8)
                .map(|_| {
                    (0..2)
                        .map(|_| r(rng.gen_range(0..=1000), 1000))
                        .collect()
                })
                .collect();
            let p = exact_set(2, pts, Space::Cube);
            let sweep = largest_empty_box_exact(&p, &OracleOptions::default()).unwrap();
            let dfs = dfs_cube(p.points(), 2, &OracleOptions::default()).unwrap();
            let ex = exhaustive_volume(&p).unwrap();
            assert_eq!(sweep.volume, dfs.0);
            assert_eq!(sweep.volume, ex);
        }
    }

    #[test]
    fn float_sweep_matches_exhaustive() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let pts: Vec<Vec<F64>> = (0..10)
                .map(|_| (0..2).map(|_| f64_coord(rng.gen::<f64>())).collect())
                .collect();
            let p = PointSet::new(2, pts, Space::Cube).unwrap();
            let sweep = largest_empty_box_f64(&p, &OracleOptions::default()).unwrap();
            let ex = exhaustive_volume(&p).unwrap();
            assert!((Coord::to_f64(&sweep.volume) - Coord::to_f64(&ex)).abs() < 1e-15);
        }
    }

    #[test]
    fn toroidal_single_point_dispersion_one() {
        let p = exact_set(2, vec![vec![r(1, 2), r(1, 2)]], Space::Torus);
        let res = largest_empty_toroidal_box_exact(&p, &OracleOptions::default()).unwrap();
        assert_eq!(res.volume, r(1, 1));

        let p1 = exact_set(1, vec![vec![r(1, 3)]], Space::Torus);
        let res1 = largest_empty_toroidal_box_exact(&p1, &OracleOptions::default()).unwrap();
        assert_eq!(res1.volume, r(1, 1));
    }

    #[test]
    fn toroidal_three_even_points_one_dim() {
        let p = exact_set(
            1,
            vec![vec![r(0, 1)], vec![r(1, 3)], vec![r(2, 3)]],
            Space::Torus,
        );
        let res = largest_empty_toroidal_box_exact(&p, &OracleOptions::default()).unwrap();
        assert_eq!(res.volume, r(1, 3));
    }

    #[test]
    fn toroidal_sweep_matches_dfs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..15 {
            let pts: Vec<Vec<Rational>> = (0..7)
                .map(|_| (0..2).map(|_| r(rng.gen_range(0..64), 64)).collect())
                .collect();
            let p = exact_set(2, pts, Space::Torus);
            let res = largest_empty_toroidal_box_exact(&p, &OracleOptions::default()).unwrap();
            let dfs = dfs_torus(p.points(), 2, &OracleOptions::default()).unwrap();
            assert_eq!(res.volume, dfs.0);
        }
    }

    #[test]
    fn toroidal_dominates_cube() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let pts: Vec<Vec<Rational>> = (0..6)
                .map(|_| (0..2).map(|_| r(rng.gen_range(0..100), 100)).collect())
                .collect();
            let cube = exact_set(2, pts.clone(), Space::Cube);
            let torus = exact_set(2, pts, Space::Torus);
            let vc = largest_empty_box_exact(&cube, &OracleOptions::default()).unwrap();
            let vt = largest_empty_toroidal_box_exact(&torus, &OracleOptions::default()).unwrap();
            assert!(vt.volume >= vc.volume);
        }
    }

    #[test]
    fn trivial_slab_cases() {
        let p = exact_set(1, vec![vec![r(1, 2)]], Space::Cube);
        let slab = trivial_slab(&p).unwrap();
        assert_eq!(slab.volume(), r(1, 2));

        let empty = exact_set(3, vec![], Space::Cube);
        let slab = trivial_slab(&empty).unwrap();
        assert_eq!(slab.volume(), r(1, 1));

        let p3 = exact_set(
            1,
            vec![vec![r(1, 4)], vec![r(1, 2)], vec![r(3, 4)]],
            Space::Cube,
        );
        let slab = trivial_slab(&p3).unwrap();
        assert!(slab.volume() >= r(1, 4));
    }

    #[test]
    fn trivial_bound_holds() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let n = rng.gen_range(1..8);
            let pts: Vec<Vec<Rational>> = (0..n)
                .map(|_| (0..2).map(|_| r(rng.gen_range(0..=100), 100)).collect())
                .collect();
            let p = exact_set(2, pts, Space::Cube);
            let res = largest_empty_box_exact(&p, &OracleOptions::default()).unwrap();
            assert!(res.volume >= r(1, n as i64 + 1));
        }
    }

    #[test]
    fn dfs_budget_reports_limit() {
        let pts: Vec<Vec<Rational>> = (0..6)
            .map(|i| (0..3).map(|a| r((i * 7 + a * 3) % 10, 10)).collect())
            .collect();
        let p = exact_set(3, pts, Space::Cube);
        let tiny = OracleOptions {
            max_candidate_boxes: 5,
        };
        match largest_empty_box_exact(&p, &tiny) {
            Err(Error::ResourceLimit(_)) => {}
            other => panic!("expected resource limit, got {other:?}"),
        }
    }

    #[test]
    fn exceeds_threshold_agrees_with_full_oracle() {
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        for _ in 0..40 {
            let n = rng.gen_range(1..12usize);
            let pts: Vec<Vec<Rational>> = (0..n)
                .map(|_| {
                    (0..2)
                        .map(|_| r(rng.gen_range(0..32), 32))
                        .collect()
                })
                .collect();
            let p = exact_set(2, pts, Space::Cube);
            let res = largest_empty_box_exact(&p, &OracleOptions::default()).unwrap();
            let eps = r(1, 1024);
            let above = res.volume.clone() + eps.clone();
            let below = res.volume.clone() - eps;
            assert!(!dispersion_exceeds_exact(&p, &above).unwrap());
            assert!(dispersion_exceeds_exact(&p, &below).unwrap());
            assert!(!dispersion_exceeds_exact(&p, &res.volume).unwrap());
        }
    }
}
