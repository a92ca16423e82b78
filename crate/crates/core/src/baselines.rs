//! Reference methods: ordinary PLS1 and global direct standardization.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gctpls::{self, ComponentFit, FitConfig, LatentModel, SolveStrategy};
use crate::graphreg::StandardsPair;
use crate::numcore::{self, ResponseVector, SpectraMatrix};

/// Direct-standardization map `F = Xp⁺ Xs`, applied as `X F`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMap {
    pub matrix: DMatrix<f64>,
    pub source_label: String,
    pub target_label: String,
    /// Numerical rank of the primary standards.
    pub rank: usize,
}

impl TransferMap {
    pub fn with_labels(mut self, source: impl Into<String>, target: impl Into<String>) -> Self {
        self.source_label = source.into();
        self.target_label = target.into();
        self
    }
}

pub fn direct_standardization(std: &StandardsPair) -> Result<TransferMap> {
    let pinv = numcore::pseudo_inverse(std.primary())?;
    Ok(TransferMap {
        matrix: pinv * std.secondary(),
        source_label: "primary".into(),
        target_label: "secondary".into(),
        rank: numcore::numerical_rank(std.primary()),
    })
}

pub fn apply_transfer(map: &TransferMap, x: &SpectraMatrix) -> Result<SpectraMatrix> {
    if x.ncols() != map.matrix.nrows() {
        return Err(Error::Shape(format!(
            "transfer map is {}x{}, spectra have {} channels",
            map.matrix.nrows(),
            map.matrix.ncols(),
            x.ncols()
        )));
    }
    SpectraMatrix::new(x.values() * &map.matrix)
}

/// Plain PLS1: the regularized fit with `γ = 0`. Standards, when given,
/// are carried along so their scores and residuals can be compared.
pub fn fit_pls(
    x0: &SpectraMatrix,
    y0: &ResponseVector,
    n_components: usize,
    std: Option<&StandardsPair>,
) -> Result<LatentModel> {
    gctpls::fit_with(
        x0,
        y0,
        std,
        &FitConfig::new(0.0, n_components),
        SolveStrategy::Auto,
    )
}

/// Textbook NIPALS PLS1 with response deflation, written independently of
/// [`gctpls::fit`]. Weights keep whatever sign NIPALS produces.
pub fn fit_pls_reference(
    x0: &SpectraMatrix,
    y0: &ResponseVector,
    n_components: usize,
) -> Result<LatentModel> {
    let config = FitConfig::new(0.0, n_components);
    config.validate(x0.nrows(), x0.ncols())?;
    let (xc, yc, centering) = numcore::mean_center(x0, y0)?;
    let mut x = xc.into_values();
    let mut y = yc.values().clone();
    let energy = x.norm_squared();
    if y.norm_squared() == 0.0 {
        return Err(Error::DegenerateResponse(0.0));
    }

    let d = x.ncols();
    let mut components = Vec::with_capacity(n_components);
    for a in 0..n_components {
        let mut w = x.transpose() * &y;
        let wn = w.norm();
        if wn == 0.0 {
            return Err(Error::RankExhausted {
                component: a + 1,
                score_norm_sq: 0.0,
            });
        }
        w /= wn;
        let t = &x * &w;
        let tt = t.dot(&t);
        if tt <= 1e-20 * energy {
            return Err(Error::RankExhausted {
                component: a + 1,
                score_norm_sq: tt,
            });
        }
        let p = x.transpose() * &t / tt;
        let q = y.dot(&t) / tt;
        x -= &t * p.transpose();
        y -= &t * q;
        components.push(ComponentFit {
            weight: w,
            scores: t,
            loading: p,
            primary_scores: DVector::zeros(0),
            secondary_scores: DVector::zeros(0),
            primary_loading: DVector::zeros(d),
            secondary_loading: DVector::zeros(d),
            regression: q,
        });
    }

    let a = components.len();
    let mut w_mat = DMatrix::zeros(d, a);
    let mut p_mat = DMatrix::zeros(d, a);
    let mut q = DVector::zeros(a);
    for (j, c) in components.iter().enumerate() {
        w_mat.set_column(j, &c.weight);
        p_mat.set_column(j, &c.loading);
        q[j] = c.regression;
    }
    // P'W is unit upper triangular for NIPALS; back-substitute.
    let ptw = p_mat.transpose() * &w_mat;
    let mut z = DVector::zeros(a);
    for i in (0..a).rev() {
        let mut acc = q[i];
        for j in i + 1..a {
            acc -= ptw[(i, j)] * z[j];
        }
        if ptw[(i, i)].abs() < 1e-12 {
            return Err(Error::Collinear);
        }
        z[i] = acc / ptw[(i, i)];
    }
    let coefficients = &w_mat * z;
    LatentModel::from_fit(
        components,
        w_mat,
        p_mat,
        q,
        coefficients,
        centering,
        config,
        None,
        Vec::new(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_standards_give_identity_map() {
        let eye = DMatrix::<f64>::identity(4, 4);
        let std = StandardsPair::new(eye.clone(), eye.clone()).unwrap();
        let map = direct_standardization(&std).unwrap();
        assert!((&map.matrix - &eye).amax() < 1e-14);
        assert_eq!(map.rank, 4);
    }

    #[test]
    fn single_row_pseudo_inverse() {
        let std = StandardsPair::new(dmatrix![2.0, 0.0], dmatrix![1.0, 1.0]).unwrap();
        let map = direct_standardization(&std).unwrap();
        assert!((&map.matrix - dmatrix![0.5, 0.5; 0.0, 0.0]).amax() < 1e-15);
        let xp = SpectraMatrix::new(dmatrix![2.0, 0.0]).unwrap();
        let mapped = apply_transfer(&map, &xp).unwrap();
        assert!((mapped.values() - dmatrix![1.0, 1.0]).amax() < 1e-15);
    }

    #[test]
    fn full_row_rank_interpolates_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let xp = DMatrix::from_fn(3, 20, |_, _| rng.random_range(0.0..1.0));
        let xs = DMatrix::from_fn(3, 20, |_, _| rng.random_range(0.0..1.0));
        let std = StandardsPair::new(xp.clone(), xs.clone()).unwrap();
        let map = direct_standardization(&std).unwrap();
        assert_eq!(map.rank, 3);
        assert!((&xp * &map.matrix - &xs).norm() <= 1e-8 * xs.norm());
    }

    #[test]
    fn apply_transfer_trivial_maps() {
        let x = SpectraMatrix::new(dmatrix![1.0, 2.0; 3.0, -4.0]).unwrap();
        let ident = TransferMap {
            matrix: DMatrix::identity(2, 2),
            source_label: "a".into(),
            target_label: "b".into(),
            rank: 2,
        };
        assert_eq!(apply_transfer(&ident, &x).unwrap(), x);
        let zero = TransferMap {
            matrix: DMatrix::zeros(2, 2),
            ..ident.clone()
        };
        assert_eq!(
            apply_transfer(&zero, &x).unwrap().values(),
            &DMatrix::zeros(2, 2)
        );
        let wrong = TransferMap {
            matrix: DMatrix::zeros(3, 3),
            ..ident
        };
        assert!(matches!(apply_transfer(&wrong, &x), Err(Error::Shape(_))));
    }

    #[test]
    fn apply_transfer_rows_independently() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let x = DMatrix::from_fn(5, 4, |_, _| rng.random_range(-1.0..1.0));
        let f = DMatrix::from_fn(4, 4, |_, _| rng.random_range(-1.0..1.0));
        let map = TransferMap {
            matrix: f.clone(),
            source_label: "p".into(),
            target_label: "s".into(),
            rank: 4,
        };
        let out = apply_transfer(&map, &SpectraMatrix::new(x.clone()).unwrap()).unwrap();
        for i in 0..5 {
            for j in 0..4 {
                let expect: f64 = (0..4).map(|k| x[(i, k)] * f[(k, j)]).sum();
                assert!((out.values()[(i, j)] - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn reference_recovers_rank_one_direction() {
        let t = DVector::from_column_slice(&[-2.0, -1.0, 0.0, 1.0, 2.0]);
        let p = DVector::from_column_slice(&[0.6, 0.0, -0.8]);
        let x = SpectraMatrix::new(&t * p.transpose()).unwrap();
        let y = ResponseVector::new(t.clone()).unwrap();
        let model = fit_pls_reference(&x, &y, 1).unwrap();
        let w = &model.components()[0].weight;
        assert!((w.dot(&p).abs() - 1.0).abs() < 1e-12);
        let yhat = gctpls::predict(&model, &x).unwrap();
        assert!((yhat.values() - &t).norm() < 1e-12);
    }

    #[test]
    fn reference_matches_unregularized_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let x = DMatrix::from_fn(30, 20, |_, _| rng.random_range(-1.0..1.0));
        let beta = DVector::from_fn(20, |_, _| rng.random_range(-1.0..1.0));
        let y = &x * beta + DVector::from_fn(30, |_, _| rng.random_range(-0.1..0.1));
        let x = SpectraMatrix::new(x).unwrap();
        let y = ResponseVector::new(y).unwrap();
        for a in 1..=5 {
            let reference = fit_pls_reference(&x, &y, a).unwrap();
            let ours = fit_pls(&x, &y, a, None).unwrap();
            let yr = gctpls::predict(&reference, &x).unwrap();
            let yo = gctpls::predict(&ours, &x).unwrap();
            assert!(
                (yr.values() - yo.values()).norm() <= 1e-8 * yr.values().norm(),
                "A={a}"
            );
            for (r, o) in reference.components().iter().zip(ours.components()) {
                assert!((r.weight.dot(&o.weight).abs() - 1.0).abs() < 1e-10);
            }
        }
    }
}
