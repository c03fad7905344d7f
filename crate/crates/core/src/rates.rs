//! Second-order rate equations for mixed sources.
//!
//! For a first-order rate `a` and error `ε`, the second-order rate `b` solves
//!
//! ```text
//! Σ_{S_i = a} t_i Φ(b / σ_i) + Σ_{S_i < a} t_i = 1 - ε
//! ```
//!
//! The left-hand side is strictly increasing in `b` whenever some component
//! sits at entropy `a`, so the root is found by bracketing and bisection. When
//! the target lies outside the range of the left-hand side the rate is `±∞`.

use crate::error::{Error, Result};
use crate::gaussian::{std_normal_cdf, std_normal_quantile};
use crate::model::{MixedSourceSpec, SourceStats};
use crate::sum::compensated_sum;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateQuery {
    pub a: f64,
    pub eps: f64,
}

impl RateQuery {
    pub fn new(a: f64, eps: f64) -> Result<Self> {
        check_eps(eps)?;
        if !a.is_finite() {
            return Err(Error::Domain(format!("rate {a} is not finite")));
        }
        Ok(Self { a, eps })
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("eps = {eps} is outside (0, 1)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RateCase {
    GeneralSolve,
    /// Two components of equal entropy.
    Case1,
    /// `S₁ > S₂` and `t > ε`: first-order rate `S₁`.
    Case2,
    /// `S₁ > S₂` and `t < ε`: first-order rate `S₂`.
    Case3,
    /// The equation has no finite root; `b` is `±∞`.
    Degenerate,
}

impl RateCase {
    pub fn name(self) -> &'static str {
        match self {
            RateCase::GeneralSolve => "GeneralSolve",
            RateCase::Case1 => "Case1",
            RateCase::Case2 => "Case2",
            RateCase::Case3 => "Case3",
            RateCase::Degenerate => "Degenerate",
        }
    }
}

/// `b` is `f64::INFINITY` / `f64::NEG_INFINITY` when no finite rate exists.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateResult {
    pub a: f64,
    pub b: f64,
    pub case: RateCase,
}

impl RateResult {
    pub fn is_finite(&self) -> bool {
        self.b.is_finite()
    }
}

/// `F(b) = lt_mass + Σ weight_k Φ(b / sigma_k)`.
#[derive(Debug, Clone)]
pub(crate) struct MixtureEquation {
    terms: Vec<(f64, f64)>,
    lt_mass: f64,
}

impl MixtureEquation {
    pub(crate) fn new(terms: Vec<(f64, f64)>, lt_mass: f64) -> Self {
        Self { terms, lt_mass }
    }

    pub(crate) fn eval(&self, b: f64) -> f64 {
        self.lt_mass
            + compensated_sum(self.terms.iter().map(|&(w, s)| w * std_normal_cdf(b / s)))
    }

    fn eq_mass(&self) -> f64 {
        compensated_sum(self.terms.iter().map(|&(w, _)| w))
    }

    /// Root of `F(b) = target`, or `±∞` when the target is not in the open
    /// range `(lt_mass, lt_mass + eq_mass)`.
    pub(crate) fn solve(&self, target: f64) -> Result<f64> {
        let eq_mass = self.eq_mass();
        if eq_mass == 0.0 {
            return if (self.lt_mass - target).abs() <= 1e-12 {
                Err(Error::Infeasible { lhs: self.lt_mass, target })
            } else if self.lt_mass > target {
                Ok(f64::NEG_INFINITY)
            } else {
                Ok(f64::INFINITY)
            };
        }
        if target <= self.lt_mass {
            return Ok(f64::NEG_INFINITY);
        }
        if target >= self.lt_mass + eq_mass {
            return Ok(f64::INFINITY);
        }

        let max_sigma = self.terms.iter().map(|&(_, s)| s).fold(0.0, f64::max);
        let mut hi = 10.0 * max_sigma;
        let mut lo = -hi;
        let mut doublings = 0;
        while self.eval(lo) > target || self.eval(hi) < target {
            lo *= 2.0;
            hi *= 2.0;
            doublings += 1;
            if doublings > 64 {
                return Err(Error::Bracketing { target });
            }
        }

        // Bisect until the bracket cannot be split further in f64.
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 1e-15 {
                break;
            }
            let f = self.eval(mid);
            if f == target {
                return Ok(mid);
            }
            if f < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (flo, fhi) = (self.eval(lo), self.eval(hi));
        Ok(if (flo - target).abs() <= (fhi - target).abs() { lo } else { hi })
    }
}

/// Solves the mixed-source rate equation at the first-order rate `q.a`.
///
/// Components within `eta` of `q.a` in entropy are treated as sitting exactly
/// at `q.a`; each of them needs positive varentropy.
pub fn solve_second_order(m: &MixedSourceSpec, q: RateQuery, eta: f64) -> Result<RateResult> {
    let components: Vec<(f64, SourceStats)> =
        m.components().iter().zip(m.stats()).map(|(c, s)| (c.weight, s)).collect();
    solve_second_order_stats(&components, q, eta)
}

/// [`solve_second_order`] on components given as `(weight, stats)` pairs.
pub fn solve_second_order_stats(
    components: &[(f64, SourceStats)],
    q: RateQuery,
    eta: f64,
) -> Result<RateResult> {
    check_eps(q.eps)?;
    let mut terms = Vec::new();
    let mut lt = Vec::new();
    for (i, &(w, s)) in components.iter().enumerate() {
        if (s.entropy - q.a).abs() <= eta {
            if s.sigma <= 0.0 {
                return Err(Error::DegenerateSigma { component: i });
            }
            terms.push((w, s.sigma));
        } else if s.entropy < q.a {
            lt.push(w);
        }
    }
    let b = MixtureEquation::new(terms, compensated_sum(lt)).solve(1.0 - q.eps)?;
    let case = if b.is_finite() { RateCase::GeneralSolve } else { RateCase::Degenerate };
    Ok(RateResult { a: q.a, b, case })
}

/// The optimal first-order rate: the smallest component entropy `a` with
/// `Σ_{S_i <= a} t_i > 1 - ε`. Entropies within `eta` are grouped into one
/// level. Fails when the cumulative weight lands exactly on `1 - ε`, where the
/// rate is not pinned down.
pub fn first_order_rate(m: &MixedSourceSpec, eps: f64, eta: f64) -> Result<f64> {
    check_eps(eps)?;
    let mut levels: Vec<(f64, f64)> = m
        .components()
        .iter()
        .map(|c| (c.spectrum.entropy(), c.weight))
        .collect();
    levels.sort_by(|x, y| x.0.total_cmp(&y.0));

    let target = 1.0 - eps;
    let mut acc = 0.0;
    let mut i = 0;
    while i < levels.len() {
        let level = levels[i].0;
        while i < levels.len() && levels[i].0 - level <= eta {
            acc += levels[i].1;
            i += 1;
        }
        if (acc - target).abs() <= eta {
            return Err(Error::BoundaryTEqualsEps { t: 1.0 - acc, eps });
        }
        if acc > target {
            return Ok(level);
        }
    }
    // weights sum to one and target < 1, so the loop always returns
    Ok(levels.last().map(|l| l.0).unwrap_or(0.0))
}

/// First-order rate plus the matching second-order rate.
pub fn predict_rates(m: &MixedSourceSpec, eps: f64, eta: f64) -> Result<RateResult> {
    let a = first_order_rate(m, eps, eta)?;
    solve_second_order(m, RateQuery::new(a, eps)?, eta)
}

/// Two-component mixture `t ρ₁^{⊗n} + (1-t) ρ₂^{⊗n}` with automatic case
/// selection. Inputs are swapped internally so that `S₁ >= S₂`.
pub fn two_source_rate(
    s1: SourceStats,
    s2: SourceStats,
    t: f64,
    eps: f64,
    eta: f64,
) -> Result<RateResult> {
    check_eps(eps)?;
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Domain(format!("mixing weight t = {t} is outside (0, 1)")));
    }
    let (s1, s2, t) = if s2.entropy > s1.entropy { (s2, s1, 1.0 - t) } else { (s1, s2, t) };

    if (s1.entropy - s2.entropy).abs() <= eta {
        if s1.sigma <= 0.0 {
            return Err(Error::DegenerateSigma { component: 0 });
        }
        if s2.sigma <= 0.0 {
            return Err(Error::DegenerateSigma { component: 1 });
        }
        let b = equal_entropy_rate(s1.sigma, s2.sigma, t, eps)?;
        return Ok(RateResult { a: s1.entropy, b, case: RateCase::Case1 });
    }

    if (t - eps).abs() <= eta {
        return Err(Error::BoundaryTEqualsEps { t, eps });
    }
    if t > eps {
        if s1.sigma <= 0.0 {
            return Err(Error::DegenerateSigma { component: 0 });
        }
        let b = -s1.sigma * std_normal_quantile(eps / t)?;
        Ok(RateResult { a: s1.entropy, b: b + 0.0, case: RateCase::Case2 })
    } else {
        if s2.sigma <= 0.0 {
            return Err(Error::DegenerateSigma { component: 1 });
        }
        let b = -s2.sigma * std_normal_quantile((eps - t) / (1.0 - t))?;
        Ok(RateResult { a: s2.entropy, b: b + 0.0, case: RateCase::Case3 })
    }
}

/// Root `L` of `t Φ(L/σ₁) + (1-t) Φ(L/σ₂) = 1 - ε`.
pub fn equal_entropy_rate(sigma1: f64, sigma2: f64, t: f64, eps: f64) -> Result<f64> {
    check_eps(eps)?;
    if !(sigma1 > 0.0 && sigma2 > 0.0) {
        return Err(Error::Domain(format!("sigmas must be positive ({sigma1}, {sigma2})")));
    }
    MixtureEquation::new(vec![(t, sigma1), (1.0 - t, sigma2)], 0.0).solve(1.0 - eps)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lo - tol && x <= self.hi + tol
    }
}

/// Range of the equal-entropy rate `L` implied by the two single-source rates
/// `-σ_i Φ⁻¹(ε)`. Degenerates to `{0}` at `ε = 1/2`.
pub fn l_range(sigma1: f64, sigma2: f64, eps: f64) -> Result<Interval> {
    check_eps(eps)?;
    if !(sigma1 > 0.0 && sigma2 > 0.0) {
        return Err(Error::Domain(format!("sigmas must be positive ({sigma1}, {sigma2})")));
    }
    if eps == 0.5 {
        return Ok(Interval { lo: 0.0, hi: 0.0 });
    }
    let (small, large) = if sigma1 <= sigma2 { (sigma1, sigma2) } else { (sigma2, sigma1) };
    let z = std_normal_quantile(eps)?;
    let (u, v) = (-small * z, -large * z);
    Ok(if eps < 0.5 { Interval { lo: u, hi: v } } else { Interval { lo: v, hi: u } })
}
