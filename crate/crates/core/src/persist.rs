//! Versioned JSON documents for fitted models and transfer maps.
//!
//! Both documents carry a `format` tag and a `version`. Matrices are stored
//! as arrays of columns (one array per latent variable for `weights` and
//! `loadings`, one per output channel for the transfer map); floats are
//! written in shortest round-trip form, so loading reproduces every value
//! bit for bit.
//!
//! ```json
//! {
//!   "format": "spectral-transfer/latent-model",
//!   "version": 1,
//!   "config": { "gamma": 1000000.0, "n_components": 2, "center_standards": false },
//!   "n_channels": 700,
//!   "centering": { "x_mean": [...], "y_mean": 10.2 },
//!   "weights": [[...], [...]],
//!   "loadings": [[...], [...]],
//!   "regression": [0.8, 0.1],
//!   "coefficients": [...],
//!   "standards_residual_norms": [{ "primary": 1.0, "secondary": 1.1, "cross": 0.3 }, ...]
//! }
//! ```

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::baselines::TransferMap;
use crate::error::{Error, Result};
use crate::gctpls::{FitConfig, LatentModel, ResidualNorms};
use crate::numcore::CenteringInfo;

pub const MODEL_FORMAT: &str = "spectral-transfer/latent-model";
pub const TRANSFER_MAP_FORMAT: &str = "spectral-transfer/transfer-map";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDocument {
    format: String,
    version: u32,
    config: FitConfig,
    n_channels: usize,
    centering: CenteringInfo,
    weights: Vec<Vec<f64>>,
    loadings: Vec<Vec<f64>>,
    regression: Vec<f64>,
    coefficients: Vec<f64>,
    #[serde(default)]
    standards_residual_norms: Vec<ResidualNorms>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransferMapDocument {
    format: String,
    version: u32,
    source_label: String,
    target_label: String,
    rank: usize,
    n_channels: usize,
    columns: Vec<Vec<f64>>,
}

fn columns(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.column_iter()
        .map(|c| c.iter().copied().collect())
        .collect()
}

fn from_columns(cols: &[Vec<f64>], rows: usize, what: &str) -> Result<DMatrix<f64>> {
    if let Some(c) = cols.iter().find(|c| c.len() != rows) {
        return Err(Error::Serde(format!(
            "{what}: column of length {} where {rows} expected",
            c.len()
        )));
    }
    Ok(DMatrix::from_iterator(
        rows,
        cols.len(),
        cols.iter().flatten().copied(),
    ))
}

fn check_header(format: &str, version: u32, expected: &str) -> Result<()> {
    if format != expected {
        return Err(Error::Serde(format!(
            "expected a {expected:?} document, found {format:?}"
        )));
    }
    if version != FORMAT_VERSION {
        return Err(Error::Serde(format!(
            "unsupported {expected} version {version} (this build reads {FORMAT_VERSION})"
        )));
    }
    Ok(())
}

pub fn model_to_json(model: &LatentModel) -> Result<String> {
    let doc = ModelDocument {
        format: MODEL_FORMAT.into(),
        version: FORMAT_VERSION,
        config: *model.config(),
        n_channels: model.n_channels(),
        centering: model.centering().clone(),
        weights: columns(model.weights()),
        loadings: columns(model.loadings()),
        regression: model.regression().iter().copied().collect(),
        coefficients: model.coefficients().iter().copied().collect(),
        standards_residual_norms: model.residual_norms().to_vec(),
    };
    serde_json::to_string_pretty(&doc).map_err(|e| Error::Serde(e.to_string()))
}

pub fn model_from_json(text: &str) -> Result<LatentModel> {
    let doc: ModelDocument = serde_json::from_str(text).map_err(|e| Error::Serde(e.to_string()))?;
    check_header(&doc.format, doc.version, MODEL_FORMAT)?;
    let d = doc.n_channels;
    LatentModel::from_parts(
        from_columns(&doc.weights, d, "weights")?,
        from_columns(&doc.loadings, d, "loadings")?,
        DVector::from_vec(doc.regression),
        DVector::from_vec(doc.coefficients),
        doc.centering,
        doc.config,
        doc.standards_residual_norms,
    )
}

pub fn transfer_map_to_json(map: &TransferMap) -> Result<String> {
    let doc = TransferMapDocument {
        format: TRANSFER_MAP_FORMAT.into(),
        version: FORMAT_VERSION,
        source_label: map.source_label.clone(),
        target_label: map.target_label.clone(),
        rank: map.rank,
        n_channels: map.matrix.nrows(),
        columns: columns(&map.matrix),
    };
    serde_json::to_string_pretty(&doc).map_err(|e| Error::Serde(e.to_string()))
}

pub fn transfer_map_from_json(text: &str) -> Result<TransferMap> {
    let doc: TransferMapDocument =
        serde_json::from_str(text).map_err(|e| Error::Serde(e.to_string()))?;
    check_header(&doc.format, doc.version, TRANSFER_MAP_FORMAT)?;
    let matrix = from_columns(&doc.columns, doc.n_channels, "transfer map")?;
    if matrix.ncols() != doc.n_channels {
        return Err(Error::Serde("transfer map must be square".into()));
    }
    Ok(TransferMap {
        matrix,
        source_label: doc.source_label,
        target_label: doc.target_label,
        rank: doc.rank,
    })
}

pub fn save_model(path: impl AsRef<Path>, model: &LatentModel) -> Result<()> {
    crate::dataio::write_atomic(path.as_ref(), model_to_json(model)?.as_bytes())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<LatentModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_json(&text)
}

pub fn save_transfer_map(path: impl AsRef<Path>, map: &TransferMap) -> Result<()> {
    crate::dataio::write_atomic(path.as_ref(), transfer_map_to_json(map)?.as_bytes())
}

pub fn load_transfer_map(path: impl AsRef<Path>) -> Result<TransferMap> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    transfer_map_from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gctpls;
    use crate::graphreg::StandardsPair;
    use crate::numcore::{ResponseVector, SpectraMatrix};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fitted(seed: u64) -> LatentModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = |r, c| DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0));
        let x = m(15, 9);
        let y = x.column(0) * 2.0 - x.column(3) + m(15, 1).column(0) * 0.05;
        let std = StandardsPair::new(m(2, 9), m(2, 9)).unwrap();
        gctpls::fit(
            &SpectraMatrix::new(x).unwrap(),
            &ResponseVector::new(y).unwrap(),
            &std,
            &FitConfig::new(10.0, 3),
        )
        .unwrap()
    }

    #[test]
    fn model_round_trip_is_lossless() {
        let model = fitted(1);
        let back = model_from_json(&model_to_json(&model).unwrap()).unwrap();
        assert_eq!(back.weights(), model.weights());
        assert_eq!(back.loadings(), model.loadings());
        assert_eq!(back.regression(), model.regression());
        assert_eq!(back.coefficients(), model.coefficients());
        assert_eq!(back.centering(), model.centering());
        assert_eq!(back.config(), model.config());
        assert_eq!(back.residual_norms(), model.residual_norms());
        assert!(back.components().is_empty());
    }

    #[test]
    fn rejects_foreign_documents() {
        let model = fitted(2);
        let json = model_to_json(&model).unwrap();
        let wrong_version = json.replace("\"version\": 1", "\"version\": 9");
        assert!(model_from_json(&wrong_version).is_err());
        let wrong_format = json.replace(MODEL_FORMAT, TRANSFER_MAP_FORMAT);
        assert!(model_from_json(&wrong_format).is_err());
        assert!(model_from_json("{}").is_err());
    }

    proptest! {
        #[test]
        fn transfer_map_round_trip(vals in proptest::collection::vec(-1e6f64..1e6, 9), rank in 0usize..3) {
            let map = TransferMap {
                matrix: DMatrix::from_row_slice(3, 3, &vals),
                source_label: "m5".into(),
                target_label: "mp6".into(),
                rank,
            };
            let back = transfer_map_from_json(&transfer_map_to_json(&map).unwrap()).unwrap();
            prop_assert_eq!(back, map);
        }
    }
}
