//! Exact finite-blocklength spectrum of `ρ^(n) = Σ_j t_j ρ_j^{⊗n}`.
//!
//! With a shared eigenbasis, every sequence `x ∈ [d]^n` is an eigenvector of
//! `ρ^(n)` with eigenvalue `Σ_j t_j Π_i p_j(x_i)`. That value depends on `x`
//! only through its type (letter counts), so the spectrum is assembled by
//! enumerating the `C(n+d-1, d-1)` types and weighting each by the exact size
//! of its type class.
//!
//! Eigenvalues are stored as `log2` values so that `n` in the thousands does
//! not underflow; multiplicities are exact big integers.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::model::{MixedSourceSpec, SourceSpectrum};
use crate::sum::CompensatedSum;

/// Upper limit on the number of types an enumeration may visit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TypeCap(pub u64);

impl TypeCap {
    pub const DEFAULT: TypeCap = TypeCap(5_000_000);
    pub const ENV_VAR: &'static str = "SOCA_TYPE_CAP";

    /// Reads `SOCA_TYPE_CAP`, falling back to the default when unset.
    pub fn from_env() -> Result<Self> {
        match std::env::var(Self::ENV_VAR) {
            Ok(raw) => raw
                .trim()
                .parse::<u64>()
                .map(TypeCap)
                .map_err(|_| Error::Domain(format!("{} = {raw:?} is not an integer", Self::ENV_VAR))),
            Err(_) => Ok(Self::DEFAULT),
        }
    }

    pub(crate) fn check(self, required: u128) -> Result<()> {
        if required > self.0 as u128 {
            Err(Error::CapExceeded { required, cap: self.0 })
        } else {
            Ok(())
        }
    }
}

impl Default for TypeCap {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Number of types `C(n+d-1, d-1)`, saturating at `u128::MAX`.
pub fn type_count(n: usize, d: usize) -> u128 {
    if d == 0 {
        return 0;
    }
    let k = (d - 1) as u128;
    let mut c: u128 = 1;
    for i in 1..=k {
        // c = C(n + i, i) after this step; stays exact as a product of binomials
        c = match c.checked_mul(n as u128 + i) {
            Some(v) => v / i,
            None => return u128::MAX,
        };
    }
    c
}

/// Letter counts `k_1..k_d` of a sequence of length `n = Σ k_i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeComposition {
    counts: Vec<usize>,
}

impl TypeComposition {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::Domain("a type needs at least one letter".into()));
        }
        Ok(Self { counts })
    }

    pub fn of_sequence(seq: &[usize], d: usize) -> Self {
        let mut counts = vec![0; d];
        for &x in seq {
            counts[x] += 1;
        }
        Self { counts }
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn n(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }
}

/// Every type of length `n` over `d` letters, in descending lexicographic
/// order: `(n,0,..,0)` first, `(0,..,0,n)` last.
pub fn enumerate_types(n: usize, d: usize) -> TypeIter {
    assert!(d >= 1, "alphabet must be nonempty");
    let mut first = vec![0; d];
    first[0] = n;
    TypeIter { next: Some(first) }
}

#[derive(Debug, Clone)]
pub struct TypeIter {
    next: Option<Vec<usize>>,
}

impl Iterator for TypeIter {
    type Item = TypeComposition;

    fn next(&mut self) -> Option<TypeComposition> {
        let current = self.next.take()?;
        let d = current.len();
        // rightmost movable position, excluding the last letter
        if let Some(j) = (0..d.saturating_sub(1)).rev().find(|&j| current[j] > 0) {
            let mut succ = current.clone();
            let tail: usize = succ[j + 1..].iter().sum();
            succ[j] -= 1;
            for c in &mut succ[j + 1..] {
                *c = 0;
            }
            succ[j + 1] = tail + 1;
            self.next = Some(succ);
        }
        Some(TypeComposition { counts: current })
    }
}

/// `C(n, k)` as a big integer.
pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut c = BigUint::one();
    for i in 0..k {
        c *= (n - i) as u64;
        c /= (i + 1) as u64;
    }
    c
}

/// Exact multinomial coefficient `n! / (k_1! ... k_d!)`.
pub fn multinomial(counts: &[usize]) -> BigUint {
    let mut remaining: usize = counts.iter().sum();
    let mut acc = BigUint::one();
    for &k in counts {
        acc *= binomial(remaining, k);
        remaining -= k;
    }
    acc
}

/// `log2` of a big integer, accurate to about one part in 2^52.
pub fn log2_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    if bits <= 64 {
        return x.to_u64().map(|v| (v as f64).log2()).unwrap_or(f64::NAN);
    }
    let shift = bits - 64;
    let top = (x >> shift).to_u64().unwrap_or(u64::MAX);
    (top as f64).log2() + shift as f64
}

fn ln_factorial(k: usize) -> f64 {
    libm::lgamma(k as f64 + 1.0)
}

/// `log2 |T_P^n|` through log-gamma, together with the exact class size.
pub fn log2_multinomial(k: &TypeComposition) -> (f64, BigUint) {
    let n = k.n();
    let ln = ln_factorial(n) - k.counts.iter().map(|&c| ln_factorial(c)).sum::<f64>();
    (ln / std::f64::consts::LN_2, multinomial(&k.counts))
}

/// Per-letter `log2` probabilities and `log2` weights of a mixture, cached for
/// repeated type evaluations.
#[derive(Debug, Clone)]
pub(crate) struct MixtureLogs {
    log2_weights: Vec<f64>,
    log2_probs: Vec<Vec<f64>>,
}

impl MixtureLogs {
    pub(crate) fn new(m: &MixedSourceSpec) -> Self {
        Self {
            log2_weights: m.weights().map(f64::log2).collect(),
            log2_probs: m.components().iter().map(|c| c.spectrum.log2_probs()).collect(),
        }
    }

    /// `log2 Σ_j t_j Π_i p_j(i)^{k_i}` by log-sum-exp in base 2.
    pub(crate) fn type_value(&self, counts: &[usize], scratch: &mut Vec<f64>) -> f64 {
        scratch.clear();
        for (lw, lp) in self.log2_weights.iter().zip(&self.log2_probs) {
            let mut e = *lw;
            for (&k, &l) in counts.iter().zip(lp) {
                if k > 0 {
                    e += k as f64 * l;
                }
            }
            scratch.push(e);
        }
        log2_sum_exp2(scratch)
    }
}

/// `log2 Σ 2^{e_i}`; `-inf` when every term is `-inf`.
pub(crate) fn log2_sum_exp2(exps: &[f64]) -> f64 {
    let max = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    if exps.len() == 1 {
        return max;
    }
    let s: f64 = exps.iter().map(|&e| (e - max).exp2()).sum();
    max + s.log2()
}

/// `log2` of the eigenvalue shared by all sequences of type `k`.
pub fn mixed_type_value(k: &TypeComposition, m: &MixedSourceSpec) -> f64 {
    MixtureLogs::new(m).type_value(&k.counts, &mut Vec::new())
}

/// Merge tolerance for two `log2` eigenvalues: 1e-12, scaled up once values
/// exceed one in magnitude so that a few ulps of rounding never split a level.
pub fn level_tolerance(v: f64) -> f64 {
    1e-12 * v.abs().max(1.0)
}

fn same_level(leader: f64, v: f64) -> bool {
    if leader == f64::NEG_INFINITY || v == f64::NEG_INFINITY {
        return leader == v;
    }
    leader - v <= level_tolerance(leader)
}

/// One eigenvalue level of `ρ^(n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumAtom {
    /// `log2` of the eigenvalue (`-inf` for the zero eigenvalue).
    pub log2_value: f64,
    pub multiplicity: BigUint,
}

impl SpectrumAtom {
    /// `log2(multiplicity · value)`.
    pub fn log2_mass(&self) -> f64 {
        log2_big(&self.multiplicity) + self.log2_value
    }

    /// Total probability carried by this level.
    pub fn mass(&self) -> f64 {
        if self.log2_value == f64::NEG_INFINITY {
            return 0.0;
        }
        if self.multiplicity.bits() <= 53 && self.log2_value > -1000.0 {
            let m = self.multiplicity.to_u64().unwrap_or(0) as f64;
            return m * self.log2_value.exp2();
        }
        self.log2_mass().exp2()
    }
}

/// Minimal code size at a given error, exact and in bits.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressionLength {
    pub log2_m: f64,
    pub m: BigUint,
}

/// Eigenvalue levels sorted by decreasing value, equal levels merged.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    atoms: Vec<SpectrumAtom>,
}

impl Spectrum {
    /// Sorts and merges raw `(log2 value, multiplicity)` pairs.
    pub fn from_levels(mut raw: Vec<(f64, BigUint)>) -> Self {
        raw.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut atoms: Vec<SpectrumAtom> = Vec::new();
        for (v, mult) in raw {
            if mult.is_zero() {
                continue;
            }
            match atoms.last_mut() {
                Some(last) if same_level(last.log2_value, v) => last.multiplicity += mult,
                _ => atoms.push(SpectrumAtom { log2_value: v, multiplicity: mult }),
            }
        }
        Self { atoms }
    }

    pub fn atoms(&self) -> &[SpectrumAtom] {
        &self.atoms
    }

    /// Total multiplicity, i.e. `d^n`.
    pub fn dimension(&self) -> BigUint {
        self.atoms.iter().map(|a| &a.multiplicity).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(SpectrumAtom::mass).collect::<CompensatedSum>().value()
    }

    pub fn max_log2_value(&self) -> f64 {
        self.atoms.first().map_or(f64::NEG_INFINITY, |a| a.log2_value)
    }

    pub fn min_log2_value(&self) -> f64 {
        self.atoms.last().map_or(f64::NEG_INFINITY, |a| a.log2_value)
    }

    /// `tr(ρ {ρ <= 2^γ})`: mass of all levels at or below `gamma`.
    pub fn tail(&self, gamma: f64) -> f64 {
        let cut = gamma + level_tolerance(gamma);
        self.atoms
            .iter()
            .rev()
            .take_while(|a| a.log2_value <= cut)
            .map(SpectrumAtom::mass)
            .collect::<CompensatedSum>()
            .value()
            .clamp(0.0, 1.0)
    }

    /// Mass of levels strictly below `gamma` (ties excluded).
    pub fn tail_strict(&self, gamma: f64) -> f64 {
        let cut = gamma - level_tolerance(gamma);
        self.atoms
            .iter()
            .rev()
            .take_while(|a| a.log2_value < cut)
            .map(SpectrumAtom::mass)
            .collect::<CompensatedSum>()
            .value()
            .clamp(0.0, 1.0)
    }

    /// Mass of levels at or above `gamma` (ties included).
    pub fn head(&self, gamma: f64) -> f64 {
        let cut = gamma - level_tolerance(gamma);
        self.atoms
            .iter()
            .take_while(|a| a.log2_value >= cut)
            .map(SpectrumAtom::mass)
            .collect::<CompensatedSum>()
            .value()
            .clamp(0.0, 1.0)
    }

    /// `sup{γ : tr(ρ {ρ <= 2^γ}) <= ε}`: the first level, going up, whose
    /// cumulative mass exceeds `eps`.
    pub fn d_s_eps(&self, eps: f64) -> f64 {
        let mut acc = CompensatedSum::new();
        for atom in self.atoms.iter().rev() {
            acc.add(atom.mass());
            if acc.value() > eps {
                return atom.log2_value;
            }
        }
        self.max_log2_value()
    }

    /// Smallest `M` such that the `M` largest eigenvalues sum to at least `1 - ε`.
    pub fn min_compression_length(&self, eps: f64) -> CompressionLength {
        let target = 1.0 - eps;
        let mut acc = CompensatedSum::new();
        let mut m = BigUint::zero();
        for atom in &self.atoms {
            if atom.log2_value == f64::NEG_INFINITY {
                break;
            }
            let need = units_needed(target - acc.value(), atom.log2_value);
            if need <= atom.multiplicity {
                m += need;
                return CompressionLength { log2_m: log2_big(&m), m };
            }
            m += &atom.multiplicity;
            acc.add(atom.mass());
        }
        // target not reached through rounding: the whole support is needed
        CompressionLength { log2_m: log2_big(&m), m }
    }

    /// Sum of the `m` largest eigenvalues, the best fidelity of any code of size `m`.
    pub fn top_mass(&self, m: &BigUint) -> f64 {
        let mut left = m.clone();
        let mut acc = CompensatedSum::new();
        for atom in &self.atoms {
            if left.is_zero() {
                break;
            }
            if left >= atom.multiplicity {
                acc.add(atom.mass());
                left -= &atom.multiplicity;
            } else {
                acc.add((log2_big(&left) + atom.log2_value).exp2());
                left = BigUint::zero();
            }
        }
        acc.value()
    }

    /// Same levels (values within `tol`) with identical multiplicities.
    pub fn matches(&self, other: &Spectrum, tol: f64) -> bool {
        self.atoms.len() == other.atoms.len()
            && self.atoms.iter().zip(&other.atoms).all(|(a, b)| {
                a.multiplicity == b.multiplicity
                    && (a.log2_value == b.log2_value || (a.log2_value - b.log2_value).abs() <= tol)
            })
    }
}

/// `ceil(remaining / 2^v)` as an integer, with values within 1e-12 relative
/// of an integer snapped to it first.
fn units_needed(remaining: f64, v: f64) -> BigUint {
    if remaining <= 0.0 {
        return BigUint::zero();
    }
    let vi = v.floor();
    let q = remaining / (v - vi).exp2();
    let shift = -vi;
    if shift < 900.0 {
        let f = q * shift.exp2();
        if f < 2f64.powi(53) {
            let r = f.round();
            let c = if (f - r).abs() <= 1e-12 * f.max(1.0) { r } else { f.ceil() };
            return BigUint::from(c.max(1.0) as u64);
        }
    }
    ceil_scaled(q, shift as i64)
}

/// `ceil(q · 2^e)` for positive finite `q`.
fn ceil_scaled(q: f64, e: i64) -> BigUint {
    let bits = q.to_bits();
    let raw_exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, exp) = if raw_exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), raw_exp - 1075) };
    let s = exp + e;
    if s >= 0 {
        BigUint::from(mant) << (s as u64)
    } else if s <= -64 {
        BigUint::one()
    } else {
        let s = (-s) as u32;
        let m = mant as u128;
        BigUint::from((m + (1u128 << s) - 1) >> s)
    }
}

/// Visits every type of length `n` over `d` letters with its exact class
/// size, in the same order as [`enumerate_types`].
pub(crate) fn for_each_type<F: FnMut(&[usize], &BigUint)>(n: usize, d: usize, mut f: F) {
    let mut counts = vec![0usize; d];
    walk(0, n, &BigUint::one(), &mut counts, &mut f);
}

fn walk<F: FnMut(&[usize], &BigUint)>(
    level: usize,
    remaining: usize,
    prefix: &BigUint,
    counts: &mut Vec<usize>,
    f: &mut F,
) {
    if level + 1 == counts.len() {
        counts[level] = remaining;
        f(counts, prefix);
        return;
    }
    // C(r, k) for k = r, r-1, ..., 0
    let mut binom = BigUint::one();
    for k in (0..=remaining).rev() {
        counts[level] = k;
        let mult = prefix * &binom;
        walk(level + 1, remaining - k, &mult, counts, f);
        if k > 0 {
            binom *= k as u64;
            binom /= (remaining - k + 1) as u64;
        }
    }
}

/// Spectrum of `ρ^(n)` assembled from types.
pub fn exact_spectrum(m: &MixedSourceSpec, n: usize, cap: TypeCap) -> Result<Spectrum> {
    let d = m.dim();
    cap.check(type_count(n, d))?;
    let logs = MixtureLogs::new(m);
    let mut scratch = Vec::with_capacity(m.len());
    let mut raw = Vec::new();
    for_each_type(n, d, |counts, mult| {
        raw.push((logs.type_value(counts, &mut scratch), mult.clone()));
    });
    Ok(Spectrum::from_levels(raw))
}

/// Largest `d^n` accepted by [`brute_force_spectrum`].
pub const BRUTE_FORCE_LIMIT: u128 = 1_000_000;

pub(crate) fn sequence_count(n: usize, d: usize) -> u128 {
    let mut total: u128 = 1;
    for _ in 0..n {
        total = total.saturating_mul(d as u128);
    }
    total
}

/// Steps `seq` to the next sequence in `[d]^n`; false after the last one.
pub(crate) fn next_sequence(seq: &mut [usize], d: usize) -> bool {
    for x in seq.iter_mut().rev() {
        *x += 1;
        if *x < d {
            return true;
        }
        *x = 0;
    }
    false
}

/// Spectrum of `ρ^(n)` by direct evaluation of every one of the `d^n`
/// eigenvalues. Independent of the type machinery; used as a test oracle.
pub fn brute_force_spectrum(m: &MixedSourceSpec, n: usize) -> Result<Spectrum> {
    let d = m.dim();
    let total = sequence_count(n, d);
    if total > BRUTE_FORCE_LIMIT {
        return Err(Error::CapExceeded { required: total, cap: BRUTE_FORCE_LIMIT as u64 });
    }
    let mut values: Vec<f64> = Vec::with_capacity(total as usize);
    let mut seq = vec![0usize; n];
    loop {
        let value: f64 = m
            .components()
            .iter()
            .map(|c| c.weight * seq.iter().map(|&x| c.spectrum.probs()[x]).product::<f64>())
            .sum();
        values.push(if value > 0.0 { value.log2() } else { f64::NEG_INFINITY });
        if !next_sequence(&mut seq, d) {
            break;
        }
    }
    values.sort_by(|a, b| b.total_cmp(a));
    let mut raw: Vec<(f64, u64)> = Vec::new();
    for v in values {
        match raw.last_mut() {
            Some((leader, count)) if same_level(*leader, v) => *count += 1,
            _ => raw.push((v, 1)),
        }
    }
    Ok(Spectrum::from_levels(raw.into_iter().map(|(v, c)| (v, BigUint::from(c))).collect()))
}

pub fn spectral_tail(m: &MixedSourceSpec, n: usize, gamma: f64, cap: TypeCap) -> Result<f64> {
    Ok(exact_spectrum(m, n, cap)?.tail(gamma))
}

pub fn d_s_eps(m: &MixedSourceSpec, n: usize, eps: f64, cap: TypeCap) -> Result<f64> {
    check_eps(eps)?;
    Ok(exact_spectrum(m, n, cap)?.d_s_eps(eps))
}

pub fn min_compression_length(
    m: &MixedSourceSpec,
    n: usize,
    eps: f64,
    cap: TypeCap,
) -> Result<CompressionLength> {
    check_eps(eps)?;
    Ok(exact_spectrum(m, n, cap)?.min_compression_length(eps))
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("eps = {eps} is outside (0, 1)")))
    }
}

/// Per-component spectra `ρ_j^{⊗n}`, in component order.
pub fn component_spectra(m: &MixedSourceSpec, n: usize, cap: TypeCap) -> Result<Vec<Spectrum>> {
    m.components()
        .iter()
        .map(|c| exact_spectrum(&MixedSourceSpec::memoryless(c.spectrum.clone()), n, cap))
        .collect()
}

/// Upper bound on the fidelity of any size-`2^{log2_m}` visible code:
/// `1 - Σ_j t_j tr(ρ_j^n {ρ_j^n <= 2^{-γ}}) + 2^{-γ + log2_m}`.
pub fn fidelity_converse_rhs(
    m: &MixedSourceSpec,
    n: usize,
    gamma: f64,
    log2_m: f64,
    cap: TypeCap,
) -> Result<f64> {
    let spectra = component_spectra(m, n, cap)?;
    Ok(converse_rhs_from_spectra(m, &spectra, gamma, log2_m))
}

pub(crate) fn converse_rhs_from_spectra(
    m: &MixedSourceSpec,
    spectra: &[Spectrum],
    gamma: f64,
    log2_m: f64,
) -> f64 {
    let tails: f64 = m
        .weights()
        .zip(spectra)
        .map(|(t, s)| t * s.tail(-gamma))
        .collect::<CompensatedSum>()
        .value();
    1.0 - tails + (log2_m - gamma).exp2()
}

/// Builds a memoryless spec from a bare probability vector.
pub fn memoryless(probs: &[f64]) -> Result<MixedSourceSpec> {
    Ok(MixedSourceSpec::memoryless(SourceSpectrum::new(probs.to_vec())?))
}
