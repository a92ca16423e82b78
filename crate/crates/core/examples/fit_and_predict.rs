//! Fit the regularized model on primary calibration spectra and predict
//! spectra measured on the secondary instrument.

use spectral_transfer::dataio::{synth_two_instrument, SynthParams};
use spectral_transfer::gctpls::{self, FitConfig};
use spectral_transfer::sampling::rmsep;

fn main() -> spectral_transfer::Result<()> {
    let data = synth_two_instrument(&SynthParams::default())?;
    let config = FitConfig::new(1e6, 2);
    let model = gctpls::fit(&data.primary_cal, &data.y_cal, &data.standards, &config)?;

    for (i, c) in model.components().iter().enumerate() {
        println!(
            "LV {}: c = {:+.4}, |w| = {:.3}",
            i + 1,
            c.regression,
            c.weight.norm()
        );
    }
    let on_secondary = gctpls::predict(&model, &data.secondary_val)?;
    let on_primary = gctpls::predict(&model, &data.primary_val)?;
    println!("RMSEP secondary {:.4}", rmsep(&data.y_val, &on_secondary)?);
    println!("RMSEP primary   {:.4}", rmsep(&data.y_val, &on_primary)?);

    let sequential = gctpls::predict_sequential(&model, &data.secondary_val)?;
    let gap = (on_secondary.values() - sequential.values()).amax();
    println!("coefficient and score pipelines agree to {gap:.1e}");
    Ok(())
}
