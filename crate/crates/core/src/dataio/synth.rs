//! Seeded two-instrument data generator.
//!
//! Sample spectra are sums of Gaussian bands on a sloped baseline: one
//! analyte band, two interferent bands. The response depends linearly on
//! the analyte and the first interferent. Standards are built from narrow
//! bands near the ends of the range that no sample shares. The secondary
//! instrument sees every spectrum through the same perturbation: a gain,
//! a wavelength shift and additive offset bands.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::graphreg::StandardsPair;
use crate::numcore::{ResponseVector, SpectraMatrix};

pub const SYNTH_START_NM: f64 = 1100.0;
pub const SYNTH_STEP_NM: f64 = 2.0;

/// Gaussian band on the unit-scaled wavelength axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub amplitude: f64,
    /// Band centre as a fraction of the wavelength range.
    pub center: f64,
    /// Standard deviation as a fraction of the wavelength range.
    pub width: f64,
}

impl Band {
    pub const fn new(amplitude: f64, center: f64, width: f64) -> Self {
        Self {
            amplitude,
            center,
            width,
        }
    }

    fn eval(&self, u: f64) -> f64 {
        let z = (u - self.center) / self.width;
        self.amplitude * (-0.5 * z * z).exp()
    }
}

/// Secondary-instrument perturbation.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftSpec {
    pub gain: f64,
    pub wavelength_shift_nm: f64,
    pub offsets: Vec<Band>,
}

impl ShiftSpec {
    pub fn none() -> Self {
        Self {
            gain: 1.0,
            wavelength_shift_nm: 0.0,
            offsets: Vec::new(),
        }
    }

    /// Additive band overlapping the analyte band.
    pub fn offset(amplitude: f64) -> Self {
        Self {
            offsets: vec![Band::new(amplitude, 0.40, 0.08)],
            ..Self::none()
        }
    }

    pub fn with_gain(mut self, gain: f64) -> Self {
        self.gain = gain;
        self
    }

    pub fn with_wavelength_shift(mut self, nm: f64) -> Self {
        self.wavelength_shift_nm = nm;
        self
    }

    pub fn with_offset(mut self, band: Band) -> Self {
        self.offsets.push(band);
        self
    }

    pub fn is_identity(&self) -> bool {
        self.gain == 1.0 && self.wavelength_shift_nm == 0.0 && self.offsets.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub n_calibration: usize,
    pub n_validation: usize,
    pub n_channels: usize,
    pub n_standards: usize,
    pub shift: ShiftSpec,
    /// Standard deviation of white noise added to every measured channel.
    pub noise_level: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            n_calibration: 60,
            n_validation: 20,
            n_channels: 200,
            n_standards: 3,
            shift: ShiftSpec::offset(0.05),
            noise_level: 1e-3,
            seed: 7,
        }
    }
}

/// Generated calibration/validation sets for both instruments.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub primary_cal: SpectraMatrix,
    pub secondary_cal: SpectraMatrix,
    pub y_cal: ResponseVector,
    pub standards: StandardsPair,
    pub primary_val: SpectraMatrix,
    pub secondary_val: SpectraMatrix,
    pub y_val: ResponseVector,
}

const ANALYTE: Band = Band::new(1.0, 0.35, 0.05);
const INTERFERENT_1: Band = Band::new(1.0, 0.55, 0.07);
const INTERFERENT_2: Band = Band::new(1.0, 0.75, 0.10);
const GLASS_LOW: Band = Band::new(1.0, 0.08, 0.03);
const GLASS_HIGH: Band = Band::new(1.0, 0.93, 0.03);

/// Noise-free spectrum as a function of the unit wavelength coordinate.
#[derive(Debug, Clone)]
struct Source {
    bands: Vec<(Band, f64)>,
    baseline: f64,
    slope: f64,
}

impl Source {
    fn eval(&self, u: f64) -> f64 {
        self.bands.iter().map(|(b, c)| c * b.eval(u)).sum::<f64>() + self.baseline + self.slope * u
    }
}

pub fn synth_two_instrument(params: &SynthParams) -> Result<SynthDataset> {
    let p = params;
    if p.n_calibration < 2 || p.n_validation == 0 || p.n_channels < 2 || p.n_standards == 0 {
        return Err(Error::InvalidInput(
            "need >= 2 calibration samples, >= 1 validation sample, >= 2 channels and >= 1 standard"
                .into(),
        ));
    }
    if !(p.noise_level.is_finite() && p.noise_level >= 0.0) {
        return Err(Error::InvalidInput(
            "noise level must be finite and >= 0".into(),
        ));
    }
    if !(p.shift.gain.is_finite() && p.shift.gain > 0.0 && p.shift.wavelength_shift_nm.is_finite())
    {
        return Err(Error::InvalidInput(
            "gain must be positive and shift finite".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let d = p.n_channels;
    let range_nm = SYNTH_STEP_NM * (d - 1) as f64;
    let axis: Vec<f64> = (0..d)
        .map(|j| SYNTH_START_NM + SYNTH_STEP_NM * j as f64)
        .collect();
    let u_of = |j: usize| j as f64 / (d - 1) as f64;
    let du = p.shift.wavelength_shift_nm / range_nm;
    let noise = Normal::new(0.0, p.noise_level.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    let draw_noise = |rng: &mut ChaCha8Rng| {
        if p.noise_level == 0.0 {
            0.0
        } else {
            noise.sample(rng)
        }
    };

    let n = p.n_calibration + p.n_validation;
    let mut primary = DMatrix::zeros(n, d);
    let mut secondary = DMatrix::zeros(n, d);
    let mut y = DVector::zeros(n);
    for i in 0..n {
        let ca = rng.random_range(0.5..1.5);
        let cb = rng.random_range(0.5..1.5);
        let cc = rng.random_range(0.0..0.05);
        let src = Source {
            bands: vec![(ANALYTE, ca), (INTERFERENT_1, cb), (INTERFERENT_2, cc)],
            baseline: rng.random_range(0.19..0.21),
            slope: rng.random_range(0.0..0.01),
        };
        y[i] = 3.0 * ca + 1.5 * cb;
        for j in 0..d {
            primary[(i, j)] = src.eval(u_of(j)) + draw_noise(&mut rng);
        }
        for j in 0..d {
            secondary[(i, j)] =
                measure_secondary(&src, &p.shift, u_of(j), du) + draw_noise(&mut rng);
        }
    }

    let k = p.n_standards;
    let mut xp = DMatrix::zeros(k, d);
    let mut xs = DMatrix::zeros(k, d);
    for i in 0..k {
        let src = Source {
            bands: vec![
                (GLASS_LOW, rng.random_range(0.5..1.5)),
                (GLASS_HIGH, rng.random_range(0.5..1.5)),
            ],
            baseline: rng.random_range(0.05..0.15),
            slope: 0.0,
        };
        for j in 0..d {
            xp[(i, j)] = src.eval(u_of(j)) + draw_noise(&mut rng);
        }
        for j in 0..d {
            xs[(i, j)] = measure_secondary(&src, &p.shift, u_of(j), du) + draw_noise(&mut rng);
        }
    }

    let cal: Vec<usize> = (0..p.n_calibration).collect();
    let val: Vec<usize> = (p.n_calibration..n).collect();
    let ids: Vec<String> = (0..n).map(|i| format!("s{:03}", i + 1)).collect();
    let full = |m: DMatrix<f64>| -> Result<SpectraMatrix> {
        SpectraMatrix::new(m)?
            .with_wavelengths(axis.clone())?
            .with_sample_ids(ids.clone())
    };
    let primary = full(primary)?;
    let secondary = full(secondary)?;
    let y = ResponseVector::new(y)?;
    Ok(SynthDataset {
        primary_cal: primary.select_rows(&cal)?,
        secondary_cal: secondary.select_rows(&cal)?,
        y_cal: y.select(&cal)?,
        standards: StandardsPair::new(xp, xs)?,
        primary_val: primary.select_rows(&val)?,
        secondary_val: secondary.select_rows(&val)?,
        y_val: y.select(&val)?,
    })
}

fn measure_secondary(src: &Source, shift: &ShiftSpec, u: f64, du: f64) -> f64 {
    shift.gain * src.eval(u + du) + shift.offsets.iter().map(|b| b.eval(u)).sum::<f64>()
}

impl SynthDataset {
    /// Calibration rows followed by validation rows, for both instruments.
    pub fn all_samples(&self) -> Result<(SpectraMatrix, SpectraMatrix, ResponseVector)> {
        let stack = |a: &SpectraMatrix, b: &SpectraMatrix| -> Result<SpectraMatrix> {
            let (na, nb) = (a.nrows(), b.nrows());
            let mut m = DMatrix::zeros(na + nb, a.ncols());
            m.rows_mut(0, na).copy_from(a.values());
            m.rows_mut(na, nb).copy_from(b.values());
            let mut s = SpectraMatrix::new(m)?;
            if let Some(w) = a.wavelengths() {
                s = s.with_wavelengths(w.to_vec())?;
            }
            if let (Some(ia), Some(ib)) = (a.sample_ids(), b.sample_ids()) {
                s = s.with_sample_ids(ia.iter().chain(ib).cloned().collect())?;
            }
            Ok(s)
        };
        let y = DVector::from_iterator(
            self.y_cal.len() + self.y_val.len(),
            self.y_cal
                .values()
                .iter()
                .chain(self.y_val.values().iter())
                .copied(),
        );
        Ok((
            stack(&self.primary_cal, &self.primary_val)?,
            stack(&self.secondary_cal, &self.secondary_val)?,
            ResponseVector::new(y)?,
        ))
    }
}
