#![allow(dead_code)]

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use soca::{MixedSourceSpec, SourceSpectrum};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random probability vector; sometimes with a zero entry.
pub fn random_probs(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    let zero_at = if d > 1 && rng.gen_bool(0.15) { Some(rng.gen_range(0..d)) } else { None };
    let raw: Vec<f64> =
        (0..d).map(|i| if Some(i) == zero_at { 0.0 } else { rng.gen_range(0.05..1.0) }).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| x / total).collect()
}

pub fn random_spectrum(rng: &mut impl Rng, d: usize) -> SourceSpectrum {
    SourceSpectrum::new(random_probs(rng, d)).unwrap()
}

/// One to three components; occasionally a component is a permutation of
/// another, which gives exactly tied entropies.
pub fn random_mixed(rng: &mut impl Rng, d: usize) -> MixedSourceSpec {
    let k = rng.gen_range(1..=3);
    let weights = random_probs_positive(rng, k);
    let mut specs: Vec<Vec<f64>> = Vec::new();
    for _ in 0..k {
        let probs = match specs.last() {
            Some(prev) if rng.gen_bool(0.2) => {
                let mut p = prev.clone();
                p.rotate_left(1);
                p
            }
            _ => random_probs(rng, d),
        };
        specs.push(probs);
    }
    MixedSourceSpec::new(
        weights.into_iter().zip(specs).map(|(w, p)| (w, SourceSpectrum::new(p).unwrap())).collect(),
    )
    .unwrap()
}

pub fn random_probs_positive(rng: &mut impl Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| x / total).collect()
}

pub fn bernoulli(p: f64) -> SourceSpectrum {
    SourceSpectrum::new(vec![p, 1.0 - p]).unwrap()
}
