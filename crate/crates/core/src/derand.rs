//! Deterministic replacement for the randomized first stage: an n-independent
//! pre-processing step enumerates all residue-set solutions and scaled
//! progression representatives, then picks window anchors by greedy
//! max-coverage (derandomizing the union bound); the n-dependent step scales
//! the anchors back up and applies the digit-reversal map.

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeSet;
use std::hash::{Hash, Hasher};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::radix::{
    augment_until_met, bitmap_to_points, reverse_digits_fixed, ConstructionParams, Stage1Output,
};

// ---------------------------------------------------------------------------
// 𝓛′ enumeration.
// ---------------------------------------------------------------------------

/// Solve α_i + kδ_i ∈ J_i (mod p_i^s) for every tuple
/// (α_i, δ_i, b_i, c_i) ∈ (Z/p_i^s)^{4d}, where J_i is the set of base-p_i
/// digit reversals of [b_i, c_i); returns the deduplicated solution sets
/// (each a sorted subset of [0, γ^s)).
pub fn enumerate_l_prime(params: &ConstructionParams) -> Result<Vec<Vec<u64>>> {
    let d = params.d;
    let gs = params.gamma_pow(params.s)?;
    let ps: Vec<u64> = (0..d)
        .map(|i| params.prime_pow(i, params.s).map(|v| v as u64))
        .collect::<Result<_>>()?;
    // Tuple count (∏ p_i^s)^4 = γ^{4s}.
    let mut tuple_count = 1u128;
    for &q in &ps {
        tuple_count = tuple_count
            .checked_mul((q as u128).pow(4))
            .filter(|&c| c <= 100_000_000)
            .ok_or_else(|| Error::ResourceLimit("γ^{4s} tuples is too many".into()))?;
    }
    // Precompute reversal tables per axis.
    let rev: Vec<Vec<u64>> = ps
        .iter()
        .enumerate()
        .map(|(i, &q)| {
            (0..q)
                .map(|m| reverse_digits_fixed(m as u128, params.primes[i], params.s) as u64)
                .collect()
        })
        .collect();
    let mut sets: BTreeSet<Vec<u64>> = BTreeSet::new();
    // Per-axis admissible residue masks: for a fixed axis tuple
    // (α, δ, b, c) the solutions k mod p^s form a set; the system's
    // solution set is the intersection over axes, read off via CRT on
    // k ∈ [0, γ^s).
    let mut axis_sets: Vec<Vec<Vec<bool>>> = Vec::with_capacity(d);
    for i in 0..d {
        let q = ps[i];
        let mut all = Vec::new();
        let mut dedup = BTreeSet::new();
        for alpha in 0..q {
            for delta in 0..q {
                for b in 0..q {
                    for c in 0..q {
                        let mut mask = vec![false; q as usize];
                        for k in 0..q {
                            let lhs = (alpha + k * delta) % q;
                            let r = rev[i][lhs as usize];
                            if r >= b && r < c {
                                mask[k as usize] = true;
                            }
                        }
                        dedup.insert(mask);
                    }
                }
            }
        }
        for mask in dedup {
            all.push(mask);
        }
        axis_sets.push(all);
    }
    // Cartesian product of per-axis solution masks.
    let mut idx = vec![0usize; d];
    loop {
        let mut l = Vec::new();
        for k in 0..gs as u64 {
            if (0..d).all(|i| axis_sets[i][idx[i]][(k % ps[i]) as usize]) {
                l.push(k);
            }
        }
        sets.insert(l);
        let mut i = 0;
        loop {
            if i == d {
                return Ok(sets.into_iter().collect());
            }
            idx[i] += 1;
            if idx[i] < axis_sets[i].len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

// ---------------------------------------------------------------------------
// Representatives.
// ---------------------------------------------------------------------------

/// Constraints of the representative definition, derived from the exponent
/// family by the 2γ^{e_d}/n scaling (at the full-scale exponents these read:
/// 𝒜′ divisible by 2γ^7, 𝒟′ even in (2γ^8−2, 8γ^{11}], domain [0, 2γ^{15}),
/// window γ^8, size ≥ γ^4/16 + 1).
#[derive(Debug, Clone, Copy)]
pub struct ScaledBounds {
    pub a_divisor: u128,
    pub d_lo_exclusive: i128,
    pub d_hi: u128,
    pub domain: u128,
    pub window: u128,
    /// |Y′| passes when 16·|Y′| ≥ size_threshold_num (= γ^{e_a} + 16).
    pub size_threshold_num: u128,
}

pub fn scaled_bounds(params: &ConstructionParams) -> Result<ScaledBounds> {
    Ok(ScaledBounds {
        a_divisor: 2 * params.gamma_pow(params.e_d - params.e_a)?,
        d_lo_exclusive: 2 * params.gamma_pow(params.e_d - params.s)? as i128 - 2,
        d_hi: 8 * params.gamma_pow(params.e_d)?,
        domain: 2 * params.gamma_pow(params.e_d + params.e_x)?,
        window: params.gamma_pow(params.e_d - params.e_w)?,
        size_threshold_num: params.gamma_pow(params.e_a)? + 16,
    })
}

/// A representative set Y′ = (𝒜′ + L𝒟′) ∩ [0, domain) together with one
/// witness triple that generates it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Representative {
    pub a_prime: u64,
    pub d_prime: u64,
    pub l_index: usize,
    pub y_prime: Vec<u64>,
}

fn y_prime_of(a_prime: u128, d_prime: u128, l: &[u64], gs: u128, domain: u128) -> Vec<u64> {
    let mut out = Vec::new();
    let mut k = 0u128;
    loop {
        let x = a_prime + k * d_prime;
        if x >= domain {
            return out;
        }
        if l.binary_search(&((k % gs) as u64)).is_ok() {
            out.push(x as u64);
        }
        k += 1;
    }
}

/// Enumerate all (𝒜′, 𝒟′, L) triples under the scaled constraints,
/// materialize Y′, filter by the size bound, and deduplicate by Y′.
pub fn enumerate_representatives(
    params: &ConstructionParams,
    l_prime: &[Vec<u64>],
) -> Result<Vec<Representative>> {
    let b = scaled_bounds(params)?;
    let gs = params.gamma_pow(params.s)?;
    if b.domain > 1 << 24 || b.d_hi > 1 << 24 {
        return Err(Error::ResourceLimit(
            "representative enumeration is beyond desk scale".into(),
        ));
    }
    let mut seen: BTreeSet<Vec<u64>> = BTreeSet::new();
    let mut out = Vec::new();
    let d_lo = (b.d_lo_exclusive + 1).max(2) as u128;
    let mut d_prime = d_lo + d_lo % 2;
    while d_prime <= b.d_hi {
        let mut a_prime = 0u128;
        while a_prime < d_prime {
            for (li, l) in l_prime.iter().enumerate() {
                if l.is_empty() {
                    continue;
                }
                let y = y_prime_of(a_prime, d_prime, l, gs, b.domain);
                if 16 * y.len() as u128 >= b.size_threshold_num && seen.insert(y.clone()) {
                    out.push(Representative {
                        a_prime: a_prime as u64,
                        d_prime: d_prime as u64,
                        l_index: li,
                        y_prime: y,
                    });
                }
            }
            a_prime += b.a_divisor;
        }
        d_prime += 2;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Anchor selection.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionStrategy {
    /// Each pick maximizes the number of not-yet-hit representatives whose
    /// Y′ intersects the pick's window.
    GreedyMaxCoverage,
    /// Each pick maximizes the drop of the union-bound potential
    /// Σ (1−p_r)^{remaining budget} over unhit representatives, where p_r is
    /// the per-anchor hit probability of representative r.
    ConditionalExpectation,
}

/// Deterministically choose window anchors X′ ⊆ [0, domain) so that
/// X′ + [0, window) intersects every representative.
pub fn select_x_prime(
    reps: &[Representative],
    params: &ConstructionParams,
    strategy: SelectionStrategy,
) -> Result<Vec<u64>> {
    let b = scaled_bounds(params)?;
    let domain = b.domain as usize;
    let window = b.window as u64;
    let budget = params.sample_count()?;
    if domain > 1 << 24 {
        return Err(Error::ResourceLimit("anchor domain too large".into()));
    }
    if strategy == SelectionStrategy::ConditionalExpectation
        && (reps.len() > 20_000 || domain > 1 << 14)
    {
        return Err(Error::ResourceLimit(
            "conditional-expectation selection is limited to toy scale".into(),
        ));
    }
    let mut unhit: Vec<usize> = (0..reps.len()).collect();
    let mut chosen = Vec::new();
    // Anchor x hits y iff x ∈ [y−window+1, y]; windows around distinct
    // elements of one Y′ are disjoint because consecutive elements are at
    // least 𝒟′ > window apart.
    let mut counts = vec![0f64; domain];
    let span = |y: u64| -> (usize, usize) {
        let lo = y.saturating_sub(window - 1) as usize;
        (lo, (y as usize + 1).min(domain))
    };
    let add = |counts: &mut [f64], rep: &Representative, weight: f64| {
        for &y in &rep.y_prime {
            let (lo, hi) = span(y);
            for c in &mut counts[lo..hi] {
                *c += weight;
            }
        }
    };
    for (_, rep) in reps.iter().enumerate() {
        add(&mut counts, rep, 1.0);
    }
    for pick in 0..budget {
        if unhit.is_empty() {
            break;
        }
        if strategy == SelectionStrategy::ConditionalExpectation {
            // Rebuild weighted coverage with weights (1−p_r)^{remaining}.
            let remaining = (budget - pick) as f64;
            counts.iter_mut().for_each(|c| *c = 0.0);
            for &r in &unhit {
                let p_r = reps[r].y_prime.len() as f64 * window as f64 / domain as f64;
                add(&mut counts, &reps[r], (1.0 - p_r).powf(remaining));
            }
        }
        let (best_x, best_c) = counts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(x, &c)| (x, c))
            .expect("nonempty domain");
        if best_c <= 0.0 {
            break;
        }
        chosen.push(best_x as u64);
        let x = best_x as u64;
        unhit.retain(|&r| {
            let hit = reps[r]
                .y_prime
                .iter()
                .any(|&y| y >= x && (y as u128) < x as u128 + window as u128);
            if hit && strategy == SelectionStrategy::GreedyMaxCoverage {
                add(&mut counts, &reps[r], -1.0);
            }
            !hit
        });
    }
    if !unhit.is_empty() {
        return Err(Error::Internal(format!(
            "{} representatives left uncovered within the budget",
            unhit.len()
        )));
    }
    Ok(chosen)
}

// ---------------------------------------------------------------------------
// n-dependent assembly.
// ---------------------------------------------------------------------------

/// Scale the pre-processed anchors by n/2γ^{e_d}, take windows of length
/// n/γ^{e_w}, and apply the digit-reversal map. With `verify` set the output
/// is checked against every good box and deterministically extended on any
/// miss, so repeated runs are bit-identical.
pub fn derandomized_stage1(
    n: u128,
    x_prime: &[u64],
    params: &ConstructionParams,
    verify: bool,
) -> Result<Stage1Output> {
    params.check_n(n)?;
    let scale = n / (2 * params.gamma_pow(params.e_d)?);
    let w = params.window_len(n)?;
    let domain = params.domain(n)?;
    if domain + w > 1 << 27 {
        return Err(Error::ResourceLimit("assembly domain too large".into()));
    }
    let mut bitmap = vec![false; (domain + w) as usize];
    let mut starts = Vec::with_capacity(x_prime.len());
    for &xp in x_prime {
        let x = xp as u128 * scale;
        if x >= domain {
            return Err(Error::Precondition(format!(
                "anchor {xp} scales outside the domain"
            )));
        }
        starts.push(x as u64);
        for b in &mut bitmap[x as usize..(x + w) as usize] {
            *b = true;
        }
    }
    let augmented = if verify {
        augment_until_met(&mut bitmap, &mut starts, n, params)?
    } else {
        0
    };
    let (integers, points) = bitmap_to_points(&bitmap, params)?;
    Ok(Stage1Output {
        window_starts: starts,
        integers,
        points,
        augmented,
    })
}

// ---------------------------------------------------------------------------
// Pre-processing cache.
// ---------------------------------------------------------------------------

const CACHE_HEADER: &str = "# disperse-preprocess v1";

/// Stable key identifying the parameter family a cache was built for.
pub fn params_key(params: &ConstructionParams) -> String {
    let mut h = DefaultHasher::new();
    params.primes.hash(&mut h);
    (params.s, params.e_a, params.e_d, params.e_w, params.e_x).hash(&mut h);
    params.sample_multiplier.hash(&mut h);
    format!("{:016x}", h.finish())
}

#[derive(Debug, Clone)]
pub struct PreprocessCache {
    pub key: String,
    pub l_prime: Vec<Vec<u64>>,
    pub representatives: Vec<Representative>,
    pub x_prime: Vec<u64>,
}

impl PreprocessCache {
    pub fn build(params: &ConstructionParams, strategy: SelectionStrategy) -> Result<Self> {
        let l_prime = enumerate_l_prime(params)?;
        let representatives = enumerate_representatives(params, &l_prime)?;
        let x_prime = select_x_prime(&representatives, params, strategy)?;
        Ok(PreprocessCache {
            key: params_key(params),
            l_prime,
            representatives,
            x_prime,
        })
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "{CACHE_HEADER} key={}", self.key)?;
        writeln!(w, "lprime {}", self.l_prime.len())?;
        for l in &self.l_prime {
            let items: Vec<String> = l.iter().map(|k| k.to_string()).collect();
            writeln!(w, "L {}", items.join(","))?;
        }
        writeln!(w, "representatives {}", self.representatives.len())?;
        for r in &self.representatives {
            writeln!(w, "R {} {} {}", r.a_prime, r.d_prime, r.l_index)?;
        }
        let items: Vec<String> = self.x_prime.iter().map(|x| x.to_string()).collect();
        writeln!(w, "xprime {}", items.join(","))?;
        Ok(())
    }

    pub fn read_from(r: impl BufRead, params: &ConstructionParams) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("empty cache file".into()))??;
        let expected = format!("{CACHE_HEADER} key={}", params_key(params));
        if header != expected {
            return Err(Error::Format(format!(
                "cache header mismatch: got {header:?}, expected {expected:?}"
            )));
        }
        let mut l_prime = Vec::new();
        let mut reps = Vec::new();
        let mut x_prime = Vec::new();
        for line in lines {
            let line = line?;
            if let Some(rest) = line.strip_prefix("L ") {
                let l: Vec<u64> = if rest.is_empty() {
                    Vec::new()
                } else {
                    rest.split(',')
                        .map(|t| t.parse().map_err(|_| Error::Format(format!("bad residue {t:?}"))))
                        .collect::<Result<_>>()?
                };
                l_prime.push(l);
            } else if let Some(rest) = line.strip_prefix("R ") {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                if parts.len() != 3 {
                    return Err(Error::Format(format!("bad representative line {line:?}")));
                }
                let a_prime: u64 = parts[0]
                    .parse()
                    .map_err(|_| Error::Format("bad 𝒜′".into()))?;
                let d_prime: u64 = parts[1]
                    .parse()
                    .map_err(|_| Error::Format("bad 𝒟′".into()))?;
                let l_index: usize = parts[2]
                    .parse()
                    .map_err(|_| Error::Format("bad L index".into()))?;
                reps.push((a_prime, d_prime, l_index));
            } else if let Some(rest) = line.strip_prefix("xprime") {
                let rest = rest.trim();
                if !rest.is_empty() {
                    x_prime = rest
                        .split(',')
                        .map(|t| t.parse().map_err(|_| Error::Format(format!("bad anchor {t:?}"))))
                        .collect::<Result<_>>()?;
                }
            }
        }
        let b = scaled_bounds(params)?;
        let gs = params.gamma_pow(params.s)?;
        let representatives = reps
            .into_iter()
            .map(|(a_prime, d_prime, l_index)| {
                let l = l_prime
                    .get(l_index)
                    .ok_or_else(|| Error::Format("L index out of range".into()))?;
                Ok(Representative {
                    a_prime,
                    d_prime,
                    l_index,
                    y_prime: y_prime_of(a_prime as u128, d_prime as u128, l, gs, b.domain),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PreprocessCache {
            key: params_key(params),
            l_prime,
            representatives,
            x_prime,
        })
    }
}
