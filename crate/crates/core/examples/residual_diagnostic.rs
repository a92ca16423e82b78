//! Deflation residuals of the standards, used to choose the number of
//! latent variables: once the cross-instrument residual is gone, further
//! components carry no transferable structure.

use spectral_transfer::dataio::{synth_two_instrument, SynthParams};
use spectral_transfer::gctpls::{self, FitConfig};

fn main() -> spectral_transfer::Result<()> {
    let data = synth_two_instrument(&SynthParams {
        n_standards: 2,
        ..SynthParams::default()
    })?;
    let model = gctpls::fit(
        &data.primary_cal,
        &data.y_cal,
        &data.standards,
        &FitConfig::new(1e6, 3),
    )?;
    let residuals = gctpls::standards_residuals(&model)?;
    println!("LV  |Xp res|   |Xs res|   |Xp res - Xs res|");
    for r in &residuals {
        println!(
            "{:>2}  {:9.3e}  {:9.3e}  {:9.3e}",
            r.n_lv, r.norms.primary, r.norms.secondary, r.norms.cross
        );
    }
    let norms: Vec<_> = residuals.iter().map(|r| r.norms).collect();
    match gctpls::exhausted_after(&norms, 0.01) {
        Some(lv) => println!("cross-instrument residual below 1% after LV {lv}"),
        None => println!("cross-instrument residual never drops below 1%"),
    }
    Ok(())
}
