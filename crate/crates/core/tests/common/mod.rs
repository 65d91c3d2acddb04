#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thouless_lab::{LeadModel, SampleSpec, Side, ThermoState};

pub fn sample(rng: &mut ChaCha8Rng, max_len: usize) -> SampleSpec {
    let len = rng.gen_range(1..=max_len);
    let hop = (1..len).map(|_| rng.gen_range(0.5..1.5)).collect();
    let onsite = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
    SampleSpec::new(hop, onsite, rng.gen_range(0.5..1.5)).unwrap()
}

/// Sample whose spectrum lies in `[0, inf)`.
pub fn positive_sample(rng: &mut ChaCha8Rng, max_len: usize) -> SampleSpec {
    let s = sample(rng, max_len);
    let lo = s.band_spectrum().unwrap().hull().unwrap().lo;
    let shift = rng.gen_range(0.0..0.5) - lo;
    let onsite = s.onsites().iter().map(|v| v + shift).collect();
    SampleSpec::new(s.hoppings().to_vec(), onsite, s.kappa_s()).unwrap()
}

pub fn chain(rng: &mut ChaCha8Rng, center: f64) -> LeadModel {
    LeadModel::half_line_chain(rng.gen_range(0.6..1.6), center + rng.gen_range(-0.6..0.6)).unwrap()
}

/// Either a homogeneous chain or the half-crystal of an unrelated sample.
pub fn lead(rng: &mut ChaCha8Rng, side: Side, center: f64) -> LeadModel {
    if rng.gen_bool(0.7) {
        chain(rng, center)
    } else {
        let s = sample(rng, 3);
        let shift = center - s.onsites().iter().sum::<f64>() / s.len() as f64;
        let onsite = s.onsites().iter().map(|v| v + shift).collect();
        let s = SampleSpec::new(s.hoppings().to_vec(), onsite, s.kappa_s()).unwrap();
        LeadModel::crystalline(s, side)
    }
}

/// Coupling bounded away from `kappa_s`.
pub fn mismatched_kappa(rng: &mut ChaCha8Rng, kappa_s: f64) -> f64 {
    loop {
        let k: f64 = rng.gen_range(0.4..1.6);
        if (k - kappa_s).abs() > 0.05 {
            return k;
        }
    }
}

pub fn center(s: &SampleSpec) -> f64 {
    let h = s.band_spectrum().unwrap().hull().unwrap();
    0.5 * (h.lo + h.hi)
}

pub fn thermo(rng: &mut ChaCha8Rng, center: f64) -> ThermoState {
    ThermoState::new(
        rng.gen_range(0.5..5.0),
        center + rng.gen_range(-1.0..1.0),
        rng.gen_range(0.5..5.0),
        center + rng.gen_range(-1.0..1.0),
    )
    .unwrap()
}

/// `n` evenly spaced points strictly inside `[lo, hi]`.
pub fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64)
        .collect()
}
