mod common;

use common::*;
use spectral_transfer::dataio::{synth_two_instrument, Method, ShiftSpec, SynthParams};
use spectral_transfer::experiment::{self, RunConfig, StandardsMode};
use spectral_transfer::gctpls::{self, FitConfig};
use spectral_transfer::graphreg::StandardsPair;

#[test]
fn offset_shift_hurts_pls_but_not_the_regularized_model() {
    let scenario = synthetic_scenario(&SynthParams::default(), None);
    let cfg = RunConfig::default();
    let prep = experiment::prepare(&scenario, "analyte", &cfg).unwrap();
    let gct = experiment::run_method(&prep, Method::Gct, &cfg).unwrap();
    let pls = experiment::run_method(&prep, Method::Pls, &cfg).unwrap();
    let baseline = pls.rmsep_primary;
    assert!(
        gct.rmsep_secondary <= 1.5 * baseline,
        "{} vs {baseline}",
        gct.rmsep_secondary
    );
    assert!(
        pls.rmsep_secondary >= 3.0 * baseline,
        "{} vs {baseline}",
        pls.rmsep_secondary
    );
}

#[test]
fn no_shift_no_noise_makes_gamma_irrelevant() {
    let params = SynthParams {
        shift: ShiftSpec::none(),
        noise_level: 0.0,
        ..SynthParams::default()
    };
    let data = synth_two_instrument(&params).unwrap();
    assert_eq!(data.standards.primary(), data.standards.secondary());
    let pls = gctpls::fit(
        &data.primary_cal,
        &data.y_cal,
        &data.standards,
        &FitConfig::new(0.0, 2),
    )
    .unwrap();
    for gamma in [1.0, 1e6] {
        let gct = gctpls::fit(
            &data.primary_cal,
            &data.y_cal,
            &data.standards,
            &FitConfig::new(gamma, 2),
        )
        .unwrap();
        let a = gctpls::predict(&gct, &data.secondary_val).unwrap();
        let b = gctpls::predict(&pls, &data.secondary_val).unwrap();
        assert!(relative(a.values(), b.values()) <= 1e-12);
    }
}

#[test]
fn generator_is_bitwise_reproducible() {
    let params = SynthParams {
        shift: ShiftSpec::offset(0.05)
            .with_gain(1.03)
            .with_wavelength_shift(0.7),
        ..SynthParams::default()
    };
    let a = synth_two_instrument(&params).unwrap();
    let b = synth_two_instrument(&params).unwrap();
    assert_eq!(a, b);
    let c = synth_two_instrument(&SynthParams { seed: 8, ..params }).unwrap();
    assert_ne!(a.primary_cal, c.primary_cal);
}

#[test]
fn single_offset_standards_lose_cross_residual_after_one_component() {
    let params = SynthParams::default();
    let d = params.n_channels;
    let glass = band(d, 1.0, 0.08, 0.03);
    let offset = band(d, 0.05, 0.40, 0.08);
    let a = [0.7, 1.0, 1.3];
    let xp = nalgebra::DMatrix::from_fn(3, d, |i, j| a[i] * glass[j]);
    let xs = nalgebra::DMatrix::from_fn(3, d, |i, j| a[i] * (glass[j] + offset[j]));
    let std = StandardsPair::new(xp, xs).unwrap();
    let data = synth_two_instrument(&params).unwrap();
    let model = gctpls::fit(
        &data.primary_cal,
        &data.y_cal,
        &std,
        &FitConfig::new(1e6, 2),
    )
    .unwrap();
    let res = gctpls::standards_residuals(&model).unwrap();
    assert!(res[1].norms.cross * 100.0 <= res[0].norms.cross);
}

#[test]
fn kennard_stone_standards_run_end_to_end() {
    let scenario = synthetic_scenario(&SynthParams::default(), None);
    let cfg = RunConfig {
        standards: StandardsMode::KennardStone(10),
        ..RunConfig::default()
    };
    let prep = experiment::prepare(&scenario, "analyte", &cfg).unwrap();
    let r = experiment::run_method(&prep, Method::Gct, &cfg).unwrap();
    assert_eq!(r.standards_residual_norms.len(), 3);
    assert_eq!(r.predictions.len(), 20);
    assert!(r.rmsep_secondary.is_finite());
}
