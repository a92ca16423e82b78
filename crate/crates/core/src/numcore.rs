//! Dense numeric primitives shared by the model code: spectra containers,
//! centering, Moore-Penrose pseudo-inverse and SPD solves.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Singular values below this fraction of the largest are treated as zero.
pub const PINV_RELATIVE_CUTOFF: f64 = 1e-10;

/// Samples-by-channels absorbance matrix with optional axis metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectraMatrix {
    values: DMatrix<f64>,
    wavelengths: Option<Vec<f64>>,
    sample_ids: Option<Vec<String>>,
}

impl SpectraMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::InvalidInput(format!(
                "spectra matrix must be non-empty, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        if let Some((i, j)) = first_non_finite(&values) {
            return Err(Error::InvalidInput(format!(
                "non-finite absorbance at row {i}, channel {j}"
            )));
        }
        Ok(Self {
            values,
            wavelengths: None,
            sample_ids: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::Shape(format!(
                "row {i} has {} channels, expected {d}",
                rows[i].len()
            )));
        }
        Self::new(DMatrix::from_fn(n, d, |i, j| rows[i][j]))
    }

    pub fn with_wavelengths(mut self, wavelengths: Vec<f64>) -> Result<Self> {
        if wavelengths.len() != self.ncols() {
            return Err(Error::Shape(format!(
                "{} wavelengths for {} channels",
                wavelengths.len(),
                self.ncols()
            )));
        }
        if wavelengths.iter().any(|w| !w.is_finite())
            || wavelengths.windows(2).any(|p| p[1] <= p[0])
        {
            return Err(Error::InvalidInput(
                "wavelengths must be finite and strictly increasing".into(),
            ));
        }
        self.wavelengths = Some(wavelengths);
        Ok(self)
    }

    pub fn with_sample_ids(mut self, ids: Vec<String>) -> Result<Self> {
        if ids.len() != self.nrows() {
            return Err(Error::Shape(format!(
                "{} sample ids for {} samples",
                ids.len(),
                self.nrows()
            )));
        }
        self.sample_ids = Some(ids);
        Ok(self)
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    pub fn wavelengths(&self) -> Option<&[f64]> {
        self.wavelengths.as_deref()
    }

    pub fn sample_ids(&self) -> Option<&[String]> {
        self.sample_ids.as_deref()
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    /// Rows at `indices`, keeping wavelengths and the matching sample ids.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidInput("empty row selection".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.nrows()) {
            return Err(Error::Shape(format!(
                "row index {bad} out of range for {} samples",
                self.nrows()
            )));
        }
        Ok(Self {
            values: self.values.select_rows(indices),
            wavelengths: self.wavelengths.clone(),
            sample_ids: self
                .sample_ids
                .as_ref()
                .map(|ids| indices.iter().map(|&i| ids[i].clone()).collect()),
        })
    }

    /// Same axis metadata, new values of identical shape.
    pub(crate) fn with_values(&self, values: DMatrix<f64>) -> Self {
        debug_assert_eq!(values.shape(), self.values.shape());
        Self {
            values,
            wavelengths: self.wavelengths.clone(),
            sample_ids: self.sample_ids.clone(),
        }
    }
}

/// Reference values of a single analyte, one per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseVector(DVector<f64>);

impl ResponseVector {
    pub fn new(values: DVector<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("response vector is empty".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite response at sample {i}"
            )));
        }
        Ok(Self(values))
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(values))
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(Error::Shape(format!(
                "sample index {bad} out of range for {} responses",
                self.len()
            )));
        }
        Self::new(DVector::from_iterator(
            indices.len(),
            indices.iter().map(|&i| self.0[i]),
        ))
    }
}

/// Means removed from the calibration data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenteringInfo {
    pub x_mean: Vec<f64>,
    pub y_mean: f64,
}

/// Column-centers `x` and centers `y`, returning the removed means.
pub fn mean_center(
    x: &SpectraMatrix,
    y: &ResponseVector,
) -> Result<(SpectraMatrix, ResponseVector, CenteringInfo)> {
    let n = x.nrows();
    if y.len() != n {
        return Err(Error::Shape(format!(
            "{n} spectra but {} responses",
            y.len()
        )));
    }
    if n < 2 {
        return Err(Error::Degenerate(format!(
            "mean centering needs at least 2 samples, got {n}"
        )));
    }
    let x_mean = column_means(x.values());
    let y_mean = y.values().mean();
    let centered = subtract_row(x.values(), &x_mean);
    let yc = y.values().add_scalar(-y_mean);
    Ok((
        x.with_values(centered),
        ResponseVector(yc),
        CenteringInfo {
            x_mean: x_mean.iter().copied().collect(),
            y_mean,
        },
    ))
}

/// Subtracts the stored calibration mean from every row of `x`.
pub fn recenter(x: &SpectraMatrix, info: &CenteringInfo) -> Result<SpectraMatrix> {
    if x.ncols() != info.x_mean.len() {
        return Err(Error::Shape(format!(
            "spectra have {} channels, centering has {}",
            x.ncols(),
            info.x_mean.len()
        )));
    }
    let mean = DVector::from_column_slice(&info.x_mean);
    Ok(x.with_values(subtract_row(x.values(), &mean)))
}

pub fn column_means(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows() as f64;
    DVector::from_iterator(m.ncols(), m.column_iter().map(|c| c.sum() / n))
}

pub(crate) fn subtract_row(m: &DMatrix<f64>, row: &DVector<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        col.add_scalar_mut(-row[j]);
    }
    out
}

/// Moore-Penrose pseudo-inverse by SVD, truncating singular values below
/// [`PINV_RELATIVE_CUTOFF`] times the largest one.
pub fn pseudo_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return Err(Error::InvalidInput(
            "pseudo-inverse of an empty matrix".into(),
        ));
    }
    if first_non_finite(m).is_some() {
        return Err(Error::InvalidInput(
            "pseudo-inverse input has non-finite entries".into(),
        ));
    }
    let svd = m.clone().svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => unreachable!("both singular vector sets requested"),
    };
    let s = &svd.singular_values;
    let s_max = s.iter().copied().fold(0.0, f64::max);
    let cutoff = s_max * PINV_RELATIVE_CUTOFF;
    let mut out = DMatrix::zeros(c, r);
    for (k, &sk) in s.iter().enumerate() {
        if sk > cutoff && sk > 0.0 {
            // out += v_k u_k^T / s_k
            out.ger(1.0 / sk, &v_t.row(k).transpose(), &u.column(k), 1.0);
        }
    }
    Ok(out)
}

/// Number of singular values above the pseudo-inverse cutoff.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    let s = m.singular_values();
    let s_max = s.iter().copied().fold(0.0, f64::max);
    if s_max == 0.0 {
        return 0;
    }
    s.iter()
        .filter(|&&v| v > s_max * PINV_RELATIVE_CUTOFF)
        .count()
}

/// Solves `s x = b` for symmetric positive-definite `s` via Cholesky.
pub fn solve_spd(s: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let n = s.nrows();
    if s.ncols() != n || b.len() != n {
        return Err(Error::Shape(format!(
            "system matrix {}x{} with right-hand side of length {}",
            s.nrows(),
            s.ncols(),
            b.len()
        )));
    }
    let scale = s.norm();
    if (s - s.transpose()).norm() > 1e-10 * scale {
        return Err(Error::InvalidInput("system matrix is not symmetric".into()));
    }
    let chol = s
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Singular(format!("Cholesky factorization of {n}x{n} failed")))?;
    Ok(chol.solve(b))
}

pub fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.norm()
}

fn first_non_finite(m: &DMatrix<f64>) -> Option<(usize, usize)> {
    let idx = m.iter().position(|v| !v.is_finite())?;
    // column-major storage
    Some((idx % m.nrows(), idx / m.nrows()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn centers_two_points() {
        let x = SpectraMatrix::new(dmatrix![1.0, 2.0; 3.0, 4.0]).unwrap();
        let y = ResponseVector::from_slice(&[1.0, 3.0]).unwrap();
        let (xc, yc, info) = mean_center(&x, &y).unwrap();
        assert_eq!(xc.values(), &dmatrix![-1.0, -1.0; 1.0, 1.0]);
        assert_eq!(yc.values().as_slice(), &[-1.0, 1.0]);
        assert_eq!(info.x_mean, vec![2.0, 3.0]);
        assert_eq!(info.y_mean, 2.0);
    }

    #[test]
    fn centering_is_idempotent() {
        let x = SpectraMatrix::new(dmatrix![-1.0, 2.0; 1.0, -2.0]).unwrap();
        let y = ResponseVector::from_slice(&[0.5, -0.5]).unwrap();
        let (xc, _, _) = mean_center(&x, &y).unwrap();
        assert!((xc.values() - x.values()).amax() <= 1e-12);
    }

    #[test]
    fn random_columns_have_zero_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = SpectraMatrix::new(random_matrix(&mut rng, 10, 5).scale(7.0)).unwrap();
        let y = ResponseVector::new(DVector::from_fn(10, |i, _| i as f64)).unwrap();
        let (xc, _, _) = mean_center(&x, &y).unwrap();
        let scale = x.values().amax();
        for m in column_means(xc.values()).iter() {
            assert!(m.abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn centering_needs_two_samples() {
        let x = SpectraMatrix::new(dmatrix![1.0, 2.0]).unwrap();
        let y = ResponseVector::from_slice(&[1.0]).unwrap();
        assert!(matches!(mean_center(&x, &y), Err(Error::Degenerate(_))));
    }

    #[test]
    fn recenter_cases() {
        let info = CenteringInfo {
            x_mean: vec![2.0, 3.0],
            y_mean: 0.0,
        };
        let at_mean = SpectraMatrix::new(dmatrix![2.0, 3.0]).unwrap();
        assert_eq!(
            recenter(&at_mean, &info).unwrap().values(),
            &dmatrix![0.0, 0.0]
        );

        let zero = CenteringInfo {
            x_mean: vec![0.0, 0.0],
            y_mean: 0.0,
        };
        let x = SpectraMatrix::new(dmatrix![1.5, -2.0; 0.25, 9.0]).unwrap();
        assert_eq!(recenter(&x, &zero).unwrap(), x);

        let wrong = SpectraMatrix::new(dmatrix![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(recenter(&wrong, &info), Err(Error::Shape(_))));
    }

    #[test]
    fn recenter_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = SpectraMatrix::new(random_matrix(&mut rng, 6, 4)).unwrap();
        let y = ResponseVector::new(DVector::from_fn(6, |i, _| (i * i) as f64)).unwrap();
        let (xc, _, info) = mean_center(&x, &y).unwrap();
        let again = recenter(&x, &info).unwrap();
        assert!((again.values() - xc.values()).norm() <= 1e-12 * xc.values().norm());
    }

    #[test]
    fn pinv_small_cases() {
        let eye = DMatrix::<f64>::identity(3, 3);
        assert!((pseudo_inverse(&eye).unwrap() - &eye).amax() < 1e-15);
        let m = dmatrix![2.0, 0.0; 0.0, 0.0];
        let p = pseudo_inverse(&m).unwrap();
        assert!((p - dmatrix![0.5, 0.0; 0.0, 0.0]).amax() < 1e-15);
    }

    #[test]
    fn pinv_rejects_nan() {
        let m = dmatrix![1.0, f64::NAN];
        assert!(matches!(pseudo_inverse(&m), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn pinv_penrose_conditions() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (r, c) in [(3, 7), (7, 3), (5, 5), (1, 9)] {
            let m = random_matrix(&mut rng, r, c);
            let p = pseudo_inverse(&m).unwrap();
            let rel = |a: DMatrix<f64>, b: &DMatrix<f64>| (a - b).norm() / b.norm();
            assert!(rel(&m * &p * &m, &m) <= 1e-8);
            assert!(rel(&p * &m * &p, &p) <= 1e-8);
            let mp = &m * &p;
            assert!(rel(mp.transpose(), &mp) <= 1e-8);
            let pm = &p * &m;
            assert!(rel(pm.transpose(), &pm) <= 1e-8);
        }
    }

    #[test]
    fn pinv_truncates_rank_deficient() {
        // rank one 3x4
        let u = DVector::from_column_slice(&[1.0, 2.0, 3.0]);
        let v = DVector::from_column_slice(&[1.0, -1.0, 0.5, 2.0]);
        let m = &u * v.transpose();
        assert_eq!(numerical_rank(&m), 1);
        let p = pseudo_inverse(&m).unwrap();
        let expected = &v * u.transpose() / (u.norm_squared() * v.norm_squared());
        assert!((p - expected).norm() <= 1e-12);
    }

    #[test]
    fn spd_solves() {
        let b = DVector::from_column_slice(&[3.0, -1.0, 2.0]);
        let x = solve_spd(&DMatrix::identity(3, 3), &b).unwrap();
        assert_eq!(x, b);
        let x = solve_spd(
            &(DMatrix::identity(2, 2) * 2.0),
            &DVector::from_column_slice(&[4.0, 6.0]),
        )
        .unwrap();
        assert!((x - DVector::from_column_slice(&[2.0, 3.0])).amax() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let r = random_matrix(&mut rng, 8, 8);
        let s = r.transpose() * &r + DMatrix::identity(8, 8);
        let b = DVector::from_fn(8, |i, _| i as f64 - 3.5);
        let x = solve_spd(&s, &b).unwrap();
        assert!((&s * x - &b).norm() <= 1e-8 * b.norm());
    }

    #[test]
    fn spd_rejects_indefinite() {
        let s = dmatrix![1.0, 0.0; 0.0, -1.0];
        let b = DVector::from_column_slice(&[1.0, 1.0]);
        assert!(matches!(solve_spd(&s, &b), Err(Error::Singular(_))));
        let asym = dmatrix![1.0, 0.5; 0.0, 1.0];
        assert!(matches!(solve_spd(&asym, &b), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn spectra_validation() {
        assert!(SpectraMatrix::new(DMatrix::zeros(0, 3)).is_err());
        assert!(SpectraMatrix::new(dmatrix![1.0, f64::INFINITY]).is_err());
        let x = SpectraMatrix::new(dmatrix![1.0, 2.0]).unwrap();
        assert!(x.clone().with_wavelengths(vec![2.0, 1.0]).is_err());
        assert!(x.with_wavelengths(vec![1100.0, 1102.0]).is_ok());
    }
}
