//! Write a dataset with its manifest, run all three methods from the
//! manifest, and emit the plot-ready tables.

use spectral_transfer::dataio::{
    self, emit_result_tables, DatasetManifest, Method, ResponseTable, RoleFiles, SynthParams,
};
use spectral_transfer::experiment::{self, RunConfig, ScenarioData};
use spectral_transfer::numcore::SpectraMatrix;

fn main() -> spectral_transfer::Result<()> {
    let dir = std::env::temp_dir().join("spectral-transfer-tables");
    std::fs::create_dir_all(&dir)
        .map_err(|e| spectral_transfer::Error::InvalidInput(e.to_string()))?;

    let data = dataio::synth_two_instrument(&SynthParams::default())?;
    let (primary, secondary, y) = data.all_samples()?;
    dataio::save_spectra_csv(dir.join("bench.csv"), &primary)?;
    dataio::save_spectra_csv(dir.join("field.csv"), &secondary)?;
    dataio::save_spectra_csv(
        dir.join("bench_std.csv"),
        &SpectraMatrix::new(data.standards.primary().clone())?,
    )?;
    dataio::save_spectra_csv(
        dir.join("field_std.csv"),
        &SpectraMatrix::new(data.standards.secondary().clone())?,
    )?;
    dataio::save_responses_csv(
        dir.join("y.csv"),
        &ResponseTable::single("analyte", y.values()),
    )?;

    let manifest = DatasetManifest::single(
        "example",
        vec!["analyte".into()],
        RoleFiles {
            primary_spectra: "bench.csv".into(),
            secondary_spectra: "field.csv".into(),
            responses: "y.csv".into(),
            primary_standards: Some("bench_std.csv".into()),
            secondary_standards: Some("field_std.csv".into()),
            primary_label: Some("bench".into()),
            secondary_label: Some("field".into()),
        },
    );
    let path = dir.join("manifest.toml");
    std::fs::write(&path, manifest.to_toml()?)
        .map_err(|e| spectral_transfer::Error::InvalidInput(e.to_string()))?;

    let manifest = DatasetManifest::load(&path)?;
    let cfg = RunConfig::default();
    let mut results = Vec::new();
    for scenario in ScenarioData::load_all(&manifest)? {
        let prep = experiment::prepare(&scenario, "analyte", &cfg)?;
        for method in [Method::Gct, Method::Pls, Method::DsPls] {
            results.push(experiment::run_method(&prep, method, &cfg)?);
        }
    }
    for file in emit_result_tables(&results, &dir.join("tables"))? {
        println!("{}", file.display());
    }
    Ok(())
}
