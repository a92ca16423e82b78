//! How the regularization weight trades primary fit for agreement between
//! the instruments' standards scores.

use spectral_transfer::dataio::{synth_two_instrument, ResponseTable, SynthParams};
use spectral_transfer::experiment::{self, RunConfig, ScenarioData};

fn main() -> spectral_transfer::Result<()> {
    let data = synth_two_instrument(&SynthParams::default())?;
    let (primary, secondary, y) = data.all_samples()?;
    let scenario = ScenarioData::new(
        "primary".into(),
        "secondary".into(),
        primary,
        secondary,
        ResponseTable::single("analyte", y.values()),
        Some(data.standards.clone()),
    )?;
    let cfg = RunConfig::default();
    let prep = experiment::prepare(&scenario, "analyte", &cfg)?;
    let grid: Vec<f64> = (0..=8)
        .map(|e| if e == 0 { 0.0 } else { 10f64.powi(e) })
        .collect();
    println!("gamma     rmsep(sec)  rmsep(pri)  |Tp-Ts|    recon gap");
    for r in experiment::sweep(&prep, &grid, &cfg)? {
        println!(
            "{:<8.0e}  {:10.4}  {:10.4}  {:9.2e}  {:9.2e}",
            r.gamma, r.rmsep_secondary, r.rmsep_primary, r.score_mismatch, r.reconstruction_gap
        );
    }
    Ok(())
}
