//! Memoryless and mixed source descriptions, their entropy statistics, and the
//! entropy-based partition of mixture components.
//!
//! All logarithms are base 2.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, ValidationError};

/// Tolerance on `Σ p = 1` for spectra and mixture weights.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Default width of the "same entropy" band used by [`classify_by_entropy`].
pub const DEFAULT_ETA: f64 = 1e-9;

/// Eigenvalues (equivalently, letter probabilities) of one memoryless source.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSpectrum {
    probs: Vec<f64>,
}

impl SourceSpectrum {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let mut errors = Vec::new();
        check_probs(0, &probs, &mut errors);
        if errors.is_empty() {
            Ok(Self { probs })
        } else {
            Err(Error::Invalid(errors))
        }
    }

    pub fn uniform(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be positive");
        Self { probs: vec![1.0 / dim as f64; dim] }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn dim(&self) -> usize {
        self.probs.len()
    }

    pub fn entropy(&self) -> f64 {
        entropy(self)
    }

    pub fn varentropy(&self) -> f64 {
        varentropy(self)
    }

    pub fn stats(&self) -> SourceStats {
        SourceStats::from_spectrum(self)
    }

    /// `log2 p_i`, with `-inf` for zero entries.
    pub(crate) fn log2_probs(&self) -> Vec<f64> {
        self.probs.iter().map(|&p| if p > 0.0 { p.log2() } else { f64::NEG_INFINITY }).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceStats {
    pub entropy: f64,
    pub varentropy: f64,
    pub sigma: f64,
}

impl SourceStats {
    pub fn from_spectrum(s: &SourceSpectrum) -> Self {
        let varentropy = varentropy(s);
        Self { entropy: entropy(s), varentropy, sigma: varentropy.sqrt() }
    }

    /// Stats given directly as entropy and standard deviation.
    pub fn new(entropy: f64, sigma: f64) -> Self {
        Self { entropy, varentropy: sigma * sigma, sigma }
    }
}

/// One `(weight, spectrum)` entry of a mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub spectrum: SourceSpectrum,
}

/// A finite mixture `Σ_j t_j ρ_j^{⊗n}` of memoryless sources sharing one
/// eigenbasis. A single component is an ordinary memoryless source.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedSourceSpec {
    components: Vec<Component>,
}

impl MixedSourceSpec {
    pub fn new(components: Vec<(f64, SourceSpectrum)>) -> Result<Self> {
        let raw: Vec<RawComponent> = components
            .iter()
            .map(|(w, s)| RawComponent { weight: *w, eigenvalues: s.probs.clone() })
            .collect();
        validate_mixed(&raw).map_err(Error::Invalid)?;
        Ok(Self {
            components: components
                .into_iter()
                .map(|(weight, spectrum)| Component { weight, spectrum })
                .collect(),
        })
    }

    pub fn from_raw(raw: &RawSource) -> Result<Self> {
        validate_mixed(&raw.components).map_err(Error::Invalid)?;
        Ok(Self {
            components: raw
                .components
                .iter()
                .map(|c| Component {
                    weight: c.weight,
                    spectrum: SourceSpectrum { probs: c.eigenvalues.clone() },
                })
                .collect(),
        })
    }

    pub fn memoryless(spectrum: SourceSpectrum) -> Self {
        Self { components: vec![Component { weight: 1.0, spectrum }] }
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.components[0].spectrum.dim()
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.components.iter().map(|c| c.weight)
    }

    pub fn stats(&self) -> Vec<SourceStats> {
        self.components.iter().map(|c| c.spectrum.stats()).collect()
    }

    pub fn to_raw(&self) -> RawSource {
        RawSource {
            components: self
                .components
                .iter()
                .map(|c| RawComponent { weight: c.weight, eigenvalues: c.spectrum.probs.clone() })
                .collect(),
        }
    }
}

/// JSON form of a source: `{"components": [{"weight": w, "eigenvalues": [..]}, ..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSource {
    pub components: Vec<RawComponent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawComponent {
    pub weight: f64,
    pub eigenvalues: Vec<f64>,
}

fn check_probs(component: usize, probs: &[f64], errors: &mut Vec<ValidationError>) {
    if probs.is_empty() {
        errors.push(ValidationError::EmptySpectrum { component });
        return;
    }
    let mut finite = true;
    for (index, &value) in probs.iter().enumerate() {
        if !value.is_finite() {
            errors.push(ValidationError::NonFinite { component, index, value });
            finite = false;
        } else if value < 0.0 {
            errors.push(ValidationError::NegativeProbability { component, index, value });
        }
    }
    if finite {
        let sum = crate::sum::compensated_sum(probs.iter().copied());
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            errors.push(ValidationError::NotNormalized { component: Some(component), sum });
        }
    }
}

/// Checks every invariant of a mixed source and reports all violations at once.
pub fn validate_mixed(components: &[RawComponent]) -> std::result::Result<(), Vec<ValidationError>> {
    let mut errors = Vec::new();
    if components.is_empty() {
        return Err(vec![ValidationError::EmptySpec]);
    }
    let expected = components[0].eigenvalues.len();
    let mut weights_finite = true;
    for (i, c) in components.iter().enumerate() {
        if !c.weight.is_finite() {
            weights_finite = false;
            errors.push(ValidationError::NonFinite { component: i, index: 0, value: c.weight });
        } else if c.weight <= 0.0 {
            errors.push(ValidationError::NonPositiveWeight { component: i, weight: c.weight });
        }
        if c.eigenvalues.len() != expected {
            errors.push(ValidationError::DimensionMismatch {
                component: i,
                expected,
                found: c.eigenvalues.len(),
            });
        }
        check_probs(i, &c.eigenvalues, &mut errors);
    }
    if weights_finite {
        let sum = crate::sum::compensated_sum(components.iter().map(|c| c.weight));
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            errors.push(ValidationError::NotNormalized { component: None, sum });
        }
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

/// Shannon (von Neumann) entropy in bits, with `0 log 0 = 0`.
pub fn entropy(s: &SourceSpectrum) -> f64 {
    let h = -crate::sum::compensated_sum(
        s.probs.iter().filter(|&&p| p > 0.0).map(|&p| p * p.log2()),
    );
    // -0.0 for deterministic sources
    h.max(0.0)
}

/// Variance of `-log2 p` under `p` (bits²). Zero entries contribute nothing.
pub fn varentropy(s: &SourceSpectrum) -> f64 {
    let h = entropy(s);
    crate::sum::compensated_sum(s.probs.iter().filter(|&&p| p > 0.0).map(|&p| {
        let dev = -p.log2() - h;
        p * dev * dev
    }))
}

/// Partition of mixture components by how their entropy compares with `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyClasses {
    pub eq_idx: Vec<usize>,
    pub lt_idx: Vec<usize>,
    pub gt_idx: Vec<usize>,
    pub eta: f64,
}

impl EntropyClasses {
    pub fn mass(&self, m: &MixedSourceSpec, idx: &[usize]) -> f64 {
        crate::sum::compensated_sum(idx.iter().map(|&i| m.components[i].weight))
    }
}

/// Components with `|S_i - a| <= eta` count as having entropy exactly `a`.
pub fn classify_by_entropy(m: &MixedSourceSpec, a: f64, eta: f64) -> EntropyClasses {
    let mut classes =
        EntropyClasses { eq_idx: Vec::new(), lt_idx: Vec::new(), gt_idx: Vec::new(), eta };
    for (i, c) in m.components.iter().enumerate() {
        let s = entropy(&c.spectrum);
        if (s - a).abs() <= eta {
            classes.eq_idx.push(i);
        } else if s < a {
            classes.lt_idx.push(i);
        } else {
            classes.gt_idx.push(i);
        }
    }
    classes
}
