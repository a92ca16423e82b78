//! Kennard-Stone calibration/validation split and standards selection.

use spectral_transfer::dataio::{synth_two_instrument, SynthParams};
use spectral_transfer::numcore::SpectraMatrix;
use spectral_transfer::sampling;

fn main() -> spectral_transfer::Result<()> {
    let toy = SpectraMatrix::from_rows(&[
        vec![0.0, 0.0],
        vec![1.0, 0.0],
        vec![0.0, 1.0],
        vec![5.0, 5.0],
        vec![2.5, 2.4],
    ])?;
    println!("selection order: {:?}", sampling::kennard_stone(&toy, 5)?);

    let data = synth_two_instrument(&SynthParams::default())?;
    let (primary, _, _) = data.all_samples()?;
    let split = sampling::kennard_stone_split(&primary, 60)?;
    println!(
        "{} calibration samples, first picks {:?}; validation {:?}",
        split.calibration.len(),
        &split.calibration[..4],
        split.validation
    );

    let cal = primary.select_rows(&split.calibration)?;
    let standards = sampling::select_standards(&cal, sampling::DEFAULT_STANDARD_COUNT)?;
    println!("standards (calibration rows): {standards:?}");
    Ok(())
}
