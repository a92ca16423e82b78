#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spectral_transfer::dataio::{synth_two_instrument, ResponseTable, SynthParams};
use spectral_transfer::experiment::ScenarioData;
use spectral_transfer::graphreg::StandardsPair;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

/// Column-centered copy.
pub fn centered(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for mut col in out.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    out
}

pub fn centered_vec(v: &DVector<f64>) -> DVector<f64> {
    v.add_scalar(-v.mean())
}

pub fn relative(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Synthetic two-instrument scenario; `standards` replaces the generated
/// standards when given.
pub fn synthetic_scenario(params: &SynthParams, standards: Option<StandardsPair>) -> ScenarioData {
    let data = synth_two_instrument(params).unwrap();
    let (primary, secondary, y) = data.all_samples().unwrap();
    ScenarioData::new(
        "primary".into(),
        "secondary".into(),
        primary,
        secondary,
        ResponseTable::single("analyte", y.values()),
        Some(standards.unwrap_or_else(|| data.standards.clone())),
    )
    .unwrap()
}

/// Gaussian band sampled on `d` channels spanning the unit interval.
pub fn band(d: usize, amplitude: f64, center: f64, width: f64) -> DVector<f64> {
    DVector::from_fn(d, |j, _| {
        let z = (j as f64 / (d - 1) as f64 - center) / width;
        amplitude * (-0.5 * z * z).exp()
    })
}
