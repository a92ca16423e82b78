//! Direct standardization maps primary spectra onto the secondary
//! instrument through the standards. It is exact on the standards, but
//! cannot correct a perturbation the standards do not exhibit in their own
//! bands.

use spectral_transfer::baselines;
use spectral_transfer::dataio::{synth_two_instrument, SynthParams};
use spectral_transfer::numcore::SpectraMatrix;

fn main() -> spectral_transfer::Result<()> {
    let data = synth_two_instrument(&SynthParams::default())?;
    let map = baselines::direct_standardization(&data.standards)?;
    println!(
        "transfer map {}x{}, rank {}",
        map.matrix.nrows(),
        map.matrix.ncols(),
        map.rank
    );

    let mapped =
        baselines::apply_transfer(&map, &SpectraMatrix::new(data.standards.primary().clone())?)?;
    let err = (mapped.values() - data.standards.secondary()).norm();
    println!("standards reproduced to {err:.1e}");

    let mapped = baselines::apply_transfer(&map, &data.primary_val)?;
    let err =
        (mapped.values() - data.secondary_val.values()).norm() / data.secondary_val.values().norm();
    println!(
        "validation samples reproduced to {:.1}% relative error",
        100.0 * err
    );
    Ok(())
}
