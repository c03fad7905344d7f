//! Type-class combinatorics of the universal fixed-length code.
//!
//! The classical core of the code keeps every type class `T_P^n` whose size is
//! at most `2^{an + b√n}`. Its dimension is computed exactly; the dimension of
//! the full basis-independent code space is only available as an upper bound.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::model::{MixedSourceSpec, SourceSpectrum};
use crate::spectrum::{
    binomial, component_spectra, log2_big, multinomial, next_sequence, sequence_count,
    MixtureLogs, TypeCap, BRUTE_FORCE_LIMIT,
};
use crate::sum::CompensatedSum;

/// Half-width of the band around the size threshold inside which a `log2`
/// comparison is flagged as a boundary decision.
pub const BOUNDARY_GUARD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct UniversalDims {
    pub n: usize,
    pub d: usize,
    pub a: f64,
    pub b: f64,
    /// Number of sequences in the kept type classes.
    pub xi_exact: BigUint,
    pub log2_xi: f64,
    /// `(d² + d) log2(n+1) + an + b√n`.
    pub log2_upsilon_bound: f64,
    /// Types whose size was decided by a `log2` comparison within
    /// [`BOUNDARY_GUARD`] of the threshold.
    pub boundary_types: u64,
}

impl UniversalDims {
    pub fn threshold(&self) -> f64 {
        size_exponent(self.n, self.a, self.b)
    }

    /// `d log2(n+1) + an + b√n`, the type-counting bound on `log2_xi`.
    pub fn log2_xi_bound(&self) -> f64 {
        self.d as f64 * ((self.n + 1) as f64).log2() + self.threshold()
    }
}

/// `an + b√n`.
pub fn size_exponent(n: usize, a: f64, b: f64) -> f64 {
    a * n as f64 + b * (n as f64).sqrt()
}

/// Whether `|T| <= 2^x`, and whether that was a near-tie decided in `log2`.
///
/// Below `x = 63` the comparison is exact against `floor(2^x)`; above it the
/// class size is compared in `log2`, which is accurate to about 1e-16
/// relative.
pub fn size_within(size: &BigUint, x: f64) -> (bool, bool) {
    if x < 0.0 {
        return (false, false);
    }
    if x < 63.0 {
        let limit = x.exp2().floor() as u64;
        return (size.to_u64().is_some_and(|s| s <= limit), false);
    }
    let l = log2_big(size);
    (l <= x, (l - x).abs() <= BOUNDARY_GUARD)
}

/// Number of partitions of `n` into at most `d` parts, saturating.
fn partition_count(n: usize, d: usize) -> u128 {
    // p[m] = partitions of m into parts of size <= k, for k = 1..d
    let mut p = vec![0u128; n + 1];
    p[0] = 1;
    for k in 1..=d {
        for m in k..=n {
            p[m] = p[m].saturating_add(p[m - k]);
        }
    }
    p[n]
}

/// Distinct permutations of a non-increasing count vector.
fn arrangements(sorted: &[usize]) -> u64 {
    let d = sorted.len() as u64;
    let mut total: u64 = (1..=d).product();
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
            total /= run;
        } else {
            run = 1;
        }
    }
    total
}

struct OrbitWalk<'a> {
    n: usize,
    d: usize,
    thresholds: &'a [f64],
    ln_fact: Vec<f64>,
    counts: Vec<usize>,
    xi: Vec<BigUint>,
    boundary: Vec<u64>,
}

impl OrbitWalk<'_> {
    fn walk(&mut self, level: usize, remaining: usize, cap_above: usize, prefix: &BigUint) {
        let parts_left = self.d - level;
        if parts_left == 1 {
            self.counts[level] = remaining;
            self.leaf(prefix);
            return;
        }
        let hi = cap_above.min(remaining);
        let lo = remaining.div_ceil(parts_left);
        if lo > hi {
            return;
        }
        let mut binom = binomial(remaining, hi);
        for k in (lo..=hi).rev() {
            self.counts[level] = k;
            let mult = prefix * &binom;
            self.walk(level + 1, remaining - k, k, &mult);
            if k > lo {
                binom *= k as u64;
                binom /= (remaining - k + 1) as u64;
            }
        }
    }

    fn leaf(&mut self, size: &BigUint) {
        let ln = self.ln_fact[self.n] - self.counts.iter().map(|&k| self.ln_fact[k]).sum::<f64>();
        let approx = ln / std::f64::consts::LN_2;
        let perms = arrangements(&self.counts);
        let mut weighted: Option<BigUint> = None;
        for (j, &x) in self.thresholds.iter().enumerate() {
            let margin = 1e-6 * x.abs().max(1.0);
            let keep = if approx < x - margin && x >= 63.0 {
                true
            } else if approx > x + margin && x >= 63.0 {
                false
            } else {
                let (keep, boundary) = size_within(size, x);
                if boundary {
                    self.boundary[j] += perms;
                }
                keep
            };
            if keep {
                let w = weighted.get_or_insert_with(|| size * perms);
                self.xi[j] += &*w;
            }
        }
    }
}

/// [`universal_dims`] for several `(a, b)` pairs sharing one enumeration.
///
/// Type classes are visited once per orbit under letter permutations (sorted
/// count vectors), so the work is the number of partitions of `n` into at
/// most `d` parts; that count is what `cap` limits.
pub fn universal_dims_batch(
    n: usize,
    d: usize,
    params: &[(f64, f64)],
    cap: TypeCap,
) -> Result<Vec<UniversalDims>> {
    if n == 0 || d == 0 {
        return Err(Error::Domain(format!("need n >= 1 and d >= 1 (got n = {n}, d = {d})")));
    }
    if params.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
        return Err(Error::Domain("rates a and b must be finite".into()));
    }
    cap.check(partition_count(n, d))?;

    let thresholds: Vec<f64> = params.iter().map(|&(a, b)| size_exponent(n, a, b)).collect();
    let mut walk = OrbitWalk {
        n,
        d,
        thresholds: &thresholds,
        ln_fact: (0..=n).map(|k| libm::lgamma(k as f64 + 1.0)).collect(),
        counts: vec![0; d],
        xi: vec![BigUint::zero(); params.len()],
        boundary: vec![0; params.len()],
    };
    walk.walk(0, n, n, &BigUint::from(1u32));
    let OrbitWalk { xi, boundary, .. } = walk;

    let log2_n1 = ((n + 1) as f64).log2();
    Ok(params
        .iter()
        .zip(&thresholds)
        .zip(xi.into_iter().zip(boundary))
        .map(|((&(a, b), x), (xi, boundary_types))| UniversalDims {
            n,
            d,
            a,
            b,
            log2_xi: log2_big(&xi),
            xi_exact: xi,
            log2_upsilon_bound: (d * d + d) as f64 * log2_n1 + *x,
            boundary_types,
        })
        .collect())
}

/// Exact size of the kept type classes and the code-space dimension bound.
pub fn universal_dims(n: usize, d: usize, a: f64, b: f64, cap: TypeCap) -> Result<UniversalDims> {
    Ok(universal_dims_batch(n, d, &[(a, b)], cap)?.remove(0))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InclusionReport {
    /// Sequences with `-log2 P^n(x) < an + b√n`.
    pub typical_sequences: u64,
    /// First such sequence whose type class is too large, if any.
    pub violation: Option<Vec<usize>>,
}

impl InclusionReport {
    pub fn holds(&self) -> bool {
        self.violation.is_none()
    }
}

/// Brute-force check that every sequence with `-log2 P^n(x) < an + b√n` has a
/// type class of size at most `2^{an + b√n}`.
pub fn hayashi_inclusion_check(
    p: &SourceSpectrum,
    n: usize,
    a: f64,
    b: f64,
) -> Result<InclusionReport> {
    let d = p.dim();
    let total = sequence_count(n, d);
    if total > BRUTE_FORCE_LIMIT {
        return Err(Error::CapExceeded { required: total, cap: BRUTE_FORCE_LIMIT as u64 });
    }
    let x = size_exponent(n, a, b);
    let surprisal: Vec<f64> = p.probs().iter().map(|&q| -q.log2()).collect();
    let mut verdicts: HashMap<Vec<usize>, bool> = HashMap::new();
    let mut typical = 0u64;
    let mut seq = vec![0usize; n];
    let mut counts = vec![0usize; d];
    loop {
        let info: f64 = seq.iter().map(|&i| surprisal[i]).sum();
        if info < x {
            typical += 1;
            counts.iter_mut().for_each(|c| *c = 0);
            for &i in &seq {
                counts[i] += 1;
            }
            let inside = *verdicts
                .entry(counts.clone())
                .or_insert_with(|| size_within(&multinomial(&counts), x).0);
            if !inside {
                return Ok(InclusionReport { typical_sequences: typical, violation: Some(seq) });
            }
        }
        if !next_sequence(&mut seq, d) {
            break;
        }
    }
    Ok(InclusionReport { typical_sequences: typical, violation: None })
}

/// Lower bound `Σ_j t_j tr(ρ_j^n {ρ_j^n >= 2^{-an-b√n}})` on the fidelity of the
/// universal code: every sequence with `P^n(x) >= 2^{-an-b√n}` lies in a kept
/// type class, because `|T_P| P^n(x) <= 1`.
pub fn universal_achievability_fidelity(
    m: &MixedSourceSpec,
    n: usize,
    a: f64,
    b: f64,
    cap: TypeCap,
) -> Result<f64> {
    let gamma = -size_exponent(n, a, b);
    let spectra = component_spectra(m, n, cap)?;
    Ok(m.weights()
        .zip(&spectra)
        .map(|(t, s)| t * s.head(gamma))
        .collect::<CompensatedSum>()
        .value())
}

/// `tr(ρ^(n) Π)` for `Π` the projector onto the kept type classes in the
/// shared eigenbasis: the exact fidelity of the classical part of the code.
pub fn kept_classes_mass(
    m: &MixedSourceSpec,
    n: usize,
    a: f64,
    b: f64,
    cap: TypeCap,
) -> Result<f64> {
    let d = m.dim();
    cap.check(crate::spectrum::type_count(n, d))?;
    let x = size_exponent(n, a, b);
    let logs = MixtureLogs::new(m);
    let mut scratch = Vec::new();
    let mut acc = CompensatedSum::new();
    crate::spectrum::for_each_type(n, d, |counts, size| {
        if size_within(size, x).0 {
            let v = logs.type_value(counts, &mut scratch);
            if v > f64::NEG_INFINITY {
                acc.add((log2_big(size) + v).exp2());
            }
        }
    });
    Ok(acc.value())
}
