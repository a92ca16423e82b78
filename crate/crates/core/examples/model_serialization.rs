//! Save a fitted model, load it back and predict with the copy.

use spectral_transfer::dataio::{synth_two_instrument, SynthParams};
use spectral_transfer::gctpls::{self, FitConfig};
use spectral_transfer::persist;

fn main() -> spectral_transfer::Result<()> {
    let data = synth_two_instrument(&SynthParams::default())?;
    let model = gctpls::fit(
        &data.primary_cal,
        &data.y_cal,
        &data.standards,
        &FitConfig::default(),
    )?;

    let dir = std::env::temp_dir().join("spectral-transfer-example");
    std::fs::create_dir_all(&dir)
        .map_err(|e| spectral_transfer::Error::InvalidInput(e.to_string()))?;
    let path = dir.join("model.json");
    persist::save_model(&path, &model)?;
    let loaded = persist::load_model(&path)?;

    let a = gctpls::predict(&model, &data.secondary_val)?;
    let b = gctpls::predict(&loaded, &data.secondary_val)?;
    println!("saved to {}", path.display());
    println!("predictions identical after reload: {}", a == b);
    Ok(())
}
