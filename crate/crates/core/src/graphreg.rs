//! Matched-standards graph and the latent-space alignment penalty.
//!
//! The graph has one vertex per standard spectrum, primary rows first and
//! secondary rows second, with an unweighted edge joining each standard to
//! its own measurement on the other instrument. For stacked standards
//! `K = [Xp; Xs]` the penalty on a weight vector `w` is `w' K' L K w`, and
//! since `L = [[I, -I], [-I, I]]` the regularizer collapses to
//! `Γ = (Xp - Xs)' (Xp - Xs)`. The factored form is what the solver uses.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Standards measured on both instruments; row `i` of each is the same
/// physical sample.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardsPair {
    primary: DMatrix<f64>,
    secondary: DMatrix<f64>,
}

impl StandardsPair {
    pub fn new(primary: DMatrix<f64>, secondary: DMatrix<f64>) -> Result<Self> {
        if primary.shape() != secondary.shape() {
            return Err(Error::Shape(format!(
                "primary standards are {}x{}, secondary {}x{}",
                primary.nrows(),
                primary.ncols(),
                secondary.nrows(),
                secondary.ncols()
            )));
        }
        if primary.nrows() == 0 || primary.ncols() == 0 {
            return Err(Error::InvalidInput(
                "at least one standard is required".into(),
            ));
        }
        if primary
            .iter()
            .chain(secondary.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidInput(
                "standards contain non-finite values".into(),
            ));
        }
        Ok(Self { primary, secondary })
    }

    pub fn primary(&self) -> &DMatrix<f64> {
        &self.primary
    }

    pub fn secondary(&self) -> &DMatrix<f64> {
        &self.secondary
    }

    /// Number of matched standards.
    pub fn count(&self) -> usize {
        self.primary.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.primary.ncols()
    }

    /// `[Xp; Xs]`
    pub fn stacked(&self) -> DMatrix<f64> {
        let (k, d) = self.primary.shape();
        let mut out = DMatrix::zeros(2 * k, d);
        out.rows_mut(0, k).copy_from(&self.primary);
        out.rows_mut(k, k).copy_from(&self.secondary);
        out
    }

    /// Each side centered by its own column means.
    pub fn centered(&self) -> Self {
        let center = |m: &DMatrix<f64>| {
            let mean = crate::numcore::column_means(m);
            crate::numcore::subtract_row(m, &mean)
        };
        Self {
            primary: center(&self.primary),
            secondary: center(&self.secondary),
        }
    }
}

/// Adjacency, degree and Laplacian of the matched-pairs graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphMatrices {
    pub adjacency: DMatrix<f64>,
    pub degree: DMatrix<f64>,
    pub laplacian: DMatrix<f64>,
}

pub fn build_graph(k_count: usize) -> Result<GraphMatrices> {
    if k_count == 0 {
        return Err(Error::InvalidInput(
            "graph needs at least one standard".into(),
        ));
    }
    let n = 2 * k_count;
    let adjacency = DMatrix::from_fn(
        n,
        n,
        |i, j| {
            if i.abs_diff(j) == k_count {
                1.0
            } else {
                0.0
            }
        },
    );
    let degree = DMatrix::from_diagonal(&DVector::from_iterator(
        n,
        adjacency.row_iter().map(|r| r.sum()),
    ));
    let laplacian = &degree - &adjacency;
    Ok(GraphMatrices {
        adjacency,
        degree,
        laplacian,
    })
}

/// `Γ` held through its rank-K factor `Xp - Xs`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizerMatrix {
    diff: DMatrix<f64>,
}

impl RegularizerMatrix {
    /// Wraps a K×d standards difference `Xp - Xs`.
    pub fn from_difference(diff: DMatrix<f64>) -> Self {
        Self { diff }
    }

    /// Regularizer with no standards: `Γ = 0`.
    pub fn zero(d: usize) -> Self {
        Self {
            diff: DMatrix::zeros(0, d),
        }
    }

    pub fn difference(&self) -> &DMatrix<f64> {
        &self.diff
    }

    pub fn dim(&self) -> usize {
        self.diff.ncols()
    }

    /// The d×d matrix `Γ`.
    pub fn dense(&self) -> DMatrix<f64> {
        self.diff.tr_mul(&self.diff)
    }

    /// `Γ w` without forming `Γ`.
    pub fn apply(&self, w: &DVector<f64>) -> DVector<f64> {
        self.diff.tr_mul(&(&self.diff * w))
    }

    pub fn is_zero(&self) -> bool {
        self.diff.iter().all(|&v| v == 0.0)
    }
}

pub fn regularizer(std: &StandardsPair) -> RegularizerMatrix {
    RegularizerMatrix::from_difference(&std.primary - &std.secondary)
}

/// `K' L K` assembled from the explicit graph Laplacian.
pub fn laplacian_form(std: &StandardsPair) -> Result<DMatrix<f64>> {
    let graph = build_graph(std.count())?;
    let k = std.stacked();
    Ok(k.transpose() * graph.laplacian * k)
}

/// `w' Γ w`, the summed squared score gap of every matched pair.
pub fn regularizer_value(w: &DVector<f64>, reg: &RegularizerMatrix) -> Result<f64> {
    if w.len() != reg.dim() {
        return Err(Error::Shape(format!(
            "weight has {} entries, regularizer is {}x{}",
            w.len(),
            reg.dim(),
            reg.dim()
        )));
    }
    Ok((&reg.diff * w).norm_squared())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pair(rng: &mut ChaCha8Rng, k: usize, d: usize) -> StandardsPair {
        let mut m = || DMatrix::from_fn(k, d, |_, _| rng.random_range(-1.0..1.0));
        StandardsPair::new(m(), m()).unwrap()
    }

    #[test]
    fn two_standard_adjacency() {
        let g = build_graph(2).unwrap();
        let expected = dmatrix![
            0.0, 0.0, 1.0, 0.0;
            0.0, 0.0, 0.0, 1.0;
            1.0, 0.0, 0.0, 0.0;
            0.0, 1.0, 0.0, 0.0
        ];
        assert_eq!(g.adjacency, expected);
        assert_eq!(g.degree, DMatrix::identity(4, 4));
    }

    #[test]
    fn single_standard_laplacian() {
        let g = build_graph(1).unwrap();
        assert_eq!(g.laplacian, dmatrix![1.0, -1.0; -1.0, 1.0]);
        assert!(build_graph(0).is_err());
    }

    #[test]
    fn laplacian_spectrum() {
        for k in 1..=6 {
            let g = build_graph(k).unwrap();
            let mut eig: Vec<f64> = g
                .laplacian
                .symmetric_eigenvalues()
                .iter()
                .copied()
                .collect();
            eig.sort_by(f64::total_cmp);
            for (i, e) in eig.iter().enumerate() {
                let target = if i < k { 0.0 } else { 2.0 };
                assert!((e - target).abs() <= 1e-12, "k={k} eig={e}");
            }
        }
    }

    #[test]
    fn identical_instruments_give_zero() {
        let xp = dmatrix![1.0, 2.0, 3.0; 0.5, 0.0, -1.0];
        let std = StandardsPair::new(xp.clone(), xp).unwrap();
        let reg = regularizer(&std);
        assert!(reg.is_zero());
        assert_eq!(reg.dense(), DMatrix::zeros(3, 3));
        let w = DVector::from_column_slice(&[0.3, -2.0, 1.0]);
        assert_eq!(regularizer_value(&w, &reg).unwrap(), 0.0);
    }

    #[test]
    fn hand_computed_single_pair() {
        let std = StandardsPair::new(dmatrix![1.0, 0.0], dmatrix![0.0, 1.0]).unwrap();
        assert_eq!(regularizer(&std).dense(), dmatrix![1.0, -1.0; -1.0, 1.0]);
        assert_eq!(
            laplacian_form(&std).unwrap(),
            dmatrix![1.0, -1.0; -1.0, 1.0]
        );
    }

    #[test]
    fn factored_form_matches_laplacian_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let std = random_pair(&mut rng, 3, 10);
        let full = laplacian_form(&std).unwrap();
        let fact = regularizer(&std).dense();
        assert!((&full - &fact).amax() <= 1e-12 * fact.amax());
    }

    #[test]
    fn value_matches_pairwise_double_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let std = random_pair(&mut rng, 3, 7);
        let w = DVector::from_fn(7, |_, _| rng.random_range(-1.0..1.0));
        let g = build_graph(3).unwrap();
        let k = std.stacked();
        let proj = &k * &w;
        let mut brute = 0.0;
        for i in 0..6 {
            for j in 0..6 {
                brute += 0.5 * (proj[i] - proj[j]).powi(2) * g.adjacency[(i, j)];
            }
        }
        let j = regularizer_value(&w, &regularizer(&std)).unwrap();
        assert!((j - brute).abs() <= 1e-12 * brute);
        assert_eq!(
            regularizer_value(&DVector::zeros(7), &regularizer(&std)).unwrap(),
            0.0
        );
    }

    #[test]
    fn shape_errors() {
        assert!(StandardsPair::new(DMatrix::zeros(2, 3), DMatrix::zeros(3, 3)).is_err());
        let reg = RegularizerMatrix::zero(4);
        assert!(regularizer_value(&DVector::zeros(3), &reg).is_err());
    }
}
