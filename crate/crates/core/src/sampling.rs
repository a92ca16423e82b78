//! Kennard-Stone selection and prediction error.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::numcore::{ResponseVector, SpectraMatrix};

/// Number of standards picked from the calibration set when samples,
/// rather than external materials, serve as transfer standards.
pub const DEFAULT_STANDARD_COUNT: usize = 10;

/// Disjoint calibration/validation partition of the sample axis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitResult {
    /// In Kennard-Stone selection order.
    pub calibration: Vec<usize>,
    /// Ascending.
    pub validation: Vec<usize>,
}

/// Kennard-Stone maximin selection on raw spectra with Euclidean distance.
///
/// Starts from the most distant pair (lower index first), then repeatedly
/// adds the sample farthest from its nearest selected neighbour. Ties go to
/// the lowest index.
pub fn kennard_stone(x: &SpectraMatrix, n_select: usize) -> Result<Vec<usize>> {
    let n = x.nrows();
    if n_select < 2 || n_select > n {
        return Err(Error::InvalidInput(format!(
            "Kennard-Stone needs 2 <= n_select <= {n}, got {n_select}"
        )));
    }
    let dist = pairwise_distances(x.values());

    let (mut a, mut b, mut best) = (0, 1, f64::NEG_INFINITY);
    for i in 0..n {
        for j in i + 1..n {
            if dist[(i, j)] > best {
                best = dist[(i, j)];
                a = i;
                b = j;
            }
        }
    }
    let mut selected = vec![a, b];
    let mut taken = vec![false; n];
    taken[a] = true;
    taken[b] = true;
    let mut nearest: Vec<f64> = (0..n).map(|i| dist[(i, a)].min(dist[(i, b)])).collect();

    while selected.len() < n_select {
        let mut pick = None;
        let mut far = f64::NEG_INFINITY;
        for i in (0..n).filter(|&i| !taken[i]) {
            if nearest[i] > far {
                far = nearest[i];
                pick = Some(i);
            }
        }
        let p = pick.expect("unselected samples remain");
        taken[p] = true;
        selected.push(p);
        for i in 0..n {
            nearest[i] = nearest[i].min(dist[(i, p)]);
        }
    }
    Ok(selected)
}

/// Kennard-Stone calibration set of `n_calibration` samples; the rest is
/// validation.
pub fn kennard_stone_split(x: &SpectraMatrix, n_calibration: usize) -> Result<SplitResult> {
    let calibration = kennard_stone(x, n_calibration)?;
    let mut in_cal = vec![false; x.nrows()];
    for &i in &calibration {
        in_cal[i] = true;
    }
    let validation = (0..x.nrows()).filter(|&i| !in_cal[i]).collect();
    Ok(SplitResult {
        calibration,
        validation,
    })
}

/// Kennard-Stone choice of `n` standards from calibration spectra; indices
/// refer to rows of `x_cal`.
pub fn select_standards(x_cal: &SpectraMatrix, n: usize) -> Result<Vec<usize>> {
    kennard_stone(x_cal, n)
}

/// Root mean squared error of prediction.
pub fn rmsep(y_true: &ResponseVector, y_pred: &ResponseVector) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Shape(format!(
            "{} reference values but {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    let sse = (y_true.values() - y_pred.values()).norm_squared();
    Ok((sse / y_true.len() as f64).sqrt())
}

fn pairwise_distances(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = (x.row(i) - x.row(j)).norm();
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn points(pos: &[f64]) -> SpectraMatrix {
        SpectraMatrix::new(DMatrix::from_column_slice(pos.len(), 1, pos)).unwrap()
    }

    #[test]
    fn two_samples() {
        assert_eq!(kennard_stone(&points(&[5.0, 1.0]), 2).unwrap(), vec![0, 1]);
    }

    #[test]
    fn collinear_maximin() {
        let x = points(&[0.0, 1.0, 2.0, 3.0, 10.0]);
        assert_eq!(kennard_stone(&x, 3).unwrap(), vec![0, 4, 3]);
    }

    #[test]
    fn range_checks() {
        let x = points(&[0.0, 1.0, 2.0]);
        assert!(kennard_stone(&x, 1).is_err());
        assert!(kennard_stone(&x, 4).is_err());
        assert_eq!(kennard_stone(&x, 3).unwrap().len(), 3);
    }

    #[test]
    fn split_is_a_partition() {
        let x = points(&[0.0, 4.0, 1.0, 9.0, 3.0, 7.0]);
        let s = kennard_stone_split(&x, 4).unwrap();
        let mut all: Vec<usize> = s.calibration.iter().chain(&s.validation).copied().collect();
        all.sort();
        assert_eq!(all, (0..6).collect::<Vec<_>>());
        assert_eq!(s.validation.len(), 2);
    }

    #[test]
    fn one_standard_per_cluster() {
        let centers = [(0.0, 0.0), (10.0, 0.0), (5.0, 9.0)];
        let mut rows = Vec::new();
        for (k, &(cx, cy)) in centers.iter().enumerate() {
            for m in 0..4 {
                let jitter = 0.1 * (m as f64) + 0.01 * k as f64;
                rows.push(vec![cx + jitter, cy - jitter]);
            }
        }
        let x = SpectraMatrix::from_rows(&rows).unwrap();
        let picked = select_standards(&x, 3).unwrap();
        let mut clusters: Vec<usize> = picked.iter().map(|i| i / 4).collect();
        clusters.sort();
        assert_eq!(clusters, vec![0, 1, 2]);
        let all = select_standards(&x, 12).unwrap();
        assert_eq!(all.len(), 12);
    }

    #[test]
    fn rmsep_cases() {
        let a = ResponseVector::from_slice(&[1.0, 2.0]).unwrap();
        assert_eq!(rmsep(&a, &a).unwrap(), 0.0);
        let z = ResponseVector::from_slice(&[0.0, 0.0]).unwrap();
        let p = ResponseVector::from_slice(&[3.0, 4.0]).unwrap();
        assert!((rmsep(&z, &p).unwrap() - 12.5f64.sqrt()).abs() < 1e-15);
        let short = ResponseVector::from_slice(&[0.0]).unwrap();
        assert!(rmsep(&z, &short).is_err());
    }

    /// Greedy maximin recomputed from scratch at every step.
    fn brute_greedy(x: &DMatrix<f64>, k: usize) -> Vec<usize> {
        let n = x.nrows();
        let dist = |i: usize, j: usize| (x.row(i) - x.row(j)).norm();
        let mut pair = (0, 1);
        for i in 0..n {
            for j in i + 1..n {
                if dist(i, j) > dist(pair.0, pair.1) {
                    pair = (i, j);
                }
            }
        }
        let mut sel = vec![pair.0, pair.1];
        while sel.len() < k {
            let score = |i: usize| {
                sel.iter()
                    .map(|&s| dist(i, s))
                    .fold(f64::INFINITY, f64::min)
            };
            let cand = (0..n).filter(|i| !sel.contains(i));
            let mut best: Option<usize> = None;
            for i in cand {
                if best.is_none_or(|b| score(i) > score(b)) {
                    best = Some(i);
                }
            }
            sel.push(best.unwrap());
        }
        sel
    }

    proptest! {
        #[test]
        fn matches_brute_force_greedy(
            data in proptest::collection::vec(-10.0f64..10.0, 6..36),
            k in 2usize..12,
        ) {
            let n = data.len() / 3;
            prop_assume!(n >= 2);
            let k = k.min(n);
            let x = DMatrix::from_row_slice(n, 3, &data[..n * 3]);
            let spectra = SpectraMatrix::new(x.clone()).unwrap();
            let ks = kennard_stone(&spectra, k).unwrap();
            prop_assert_eq!(&ks, &brute_greedy(&x, k));
            prop_assert_eq!(ks, kennard_stone(&spectra, k).unwrap());
        }

        #[test]
        fn rmsep_is_nonnegative_and_zero_only_on_equality(
            a in proptest::collection::vec(-5.0f64..5.0, 1..20),
            shift in -1.0f64..1.0,
        ) {
            let ya = ResponseVector::from_slice(&a).unwrap();
            let b: Vec<f64> = a.iter().map(|v| v + shift).collect();
            let yb = ResponseVector::from_slice(&b).unwrap();
            let e = rmsep(&ya, &yb).unwrap();
            prop_assert!(e >= 0.0);
            prop_assert_eq!(e == 0.0, a == b);
        }
    }
}
