//! Graph-regularized PLS1.
//!
//! Each latent variable solves a ridge-like system for its weight vector,
//! `(y'y I + γ Γ) w = X' y`, where `Γ` penalizes disagreement between the
//! scores of matched standards measured on the two instruments. The rest
//! of the iteration is NIPALS: scores, regression scalar, loadings, and
//! deflation of the calibration block and of both standards blocks. The
//! response is not deflated.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graphreg::{self, RegularizerMatrix, StandardsPair};
use crate::numcore::{self, CenteringInfo, ResponseVector, SpectraMatrix};

/// Above this dimension the weight system is solved through the rank-K
/// factor of `Γ` (Woodbury) instead of a dense Cholesky factorization.
pub const DENSE_SOLVE_MAX_DIM: usize = 256;

/// Components whose squared score norm falls below this fraction of the
/// centered calibration energy are treated as rank exhaustion.
const RANK_TOLERANCE: f64 = 1e-20;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FitConfig {
    pub gamma: f64,
    pub n_components: usize,
    #[serde(default)]
    pub center_standards: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            gamma: 1e6,
            n_components: 2,
            center_standards: false,
        }
    }
}

impl FitConfig {
    pub fn new(gamma: f64, n_components: usize) -> Self {
        Self {
            gamma,
            n_components,
            center_standards: false,
        }
    }

    pub fn validate(&self, n_samples: usize, n_channels: usize) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "gamma must be finite and non-negative, got {}",
                self.gamma
            )));
        }
        let max = n_samples.saturating_sub(1).min(n_channels);
        if self.n_components == 0 || self.n_components > max {
            return Err(Error::InvalidInput(format!(
                "n_components must be in 1..={max} for {n_samples} samples and {n_channels} channels, got {}",
                self.n_components
            )));
        }
        Ok(())
    }
}

/// How the weight system is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolveStrategy {
    /// Dense up to [`DENSE_SOLVE_MAX_DIM`] channels, Woodbury above.
    #[default]
    Auto,
    Dense,
    Woodbury,
}

/// Everything extracted for one latent variable.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentFit {
    pub weight: DVector<f64>,
    pub scores: DVector<f64>,
    pub loading: DVector<f64>,
    pub primary_scores: DVector<f64>,
    pub secondary_scores: DVector<f64>,
    pub primary_loading: DVector<f64>,
    pub secondary_loading: DVector<f64>,
    pub regression: f64,
}

/// Frobenius norms of the standards residuals at one deflation stage.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ResidualNorms {
    pub primary: f64,
    pub secondary: f64,
    /// `‖Xp_res - Xs_res‖_F`
    pub cross: f64,
}

/// Deflation residuals of the standards after `n_lv` components.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardsResidual {
    pub n_lv: usize,
    pub primary: DMatrix<f64>,
    pub secondary: DMatrix<f64>,
    pub norms: ResidualNorms,
}

/// A fitted model.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentModel {
    components: Vec<ComponentFit>,
    weights: DMatrix<f64>,
    loadings: DMatrix<f64>,
    regression: DVector<f64>,
    coefficients: DVector<f64>,
    centering: CenteringInfo,
    config: FitConfig,
    standards: Option<StandardsPair>,
    residual_norms: Vec<ResidualNorms>,
}

impl LatentModel {
    /// Rebuilds a model from its persisted parts. Per-component scores are
    /// not part of the persisted form, so `components()` is empty and
    /// standards residuals are only available as norms.
    pub fn from_parts(
        weights: DMatrix<f64>,
        loadings: DMatrix<f64>,
        regression: DVector<f64>,
        coefficients: DVector<f64>,
        centering: CenteringInfo,
        config: FitConfig,
        residual_norms: Vec<ResidualNorms>,
    ) -> Result<Self> {
        let (d, a) = weights.shape();
        if loadings.shape() != (d, a)
            || regression.len() != a
            || coefficients.len() != d
            || centering.x_mean.len() != d
        {
            return Err(Error::Shape(format!(
                "inconsistent model parts: W {}x{}, P {}x{}, c {}, b {}, mean {}",
                d,
                a,
                loadings.nrows(),
                loadings.ncols(),
                regression.len(),
                coefficients.len(),
                centering.x_mean.len()
            )));
        }
        if a != config.n_components {
            return Err(Error::Shape(format!(
                "model has {a} components but config says {}",
                config.n_components
            )));
        }
        Ok(Self {
            components: Vec::new(),
            weights,
            loadings,
            regression,
            coefficients,
            centering,
            config,
            standards: None,
            residual_norms,
        })
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_fit(
        components: Vec<ComponentFit>,
        weights: DMatrix<f64>,
        loadings: DMatrix<f64>,
        regression: DVector<f64>,
        coefficients: DVector<f64>,
        centering: CenteringInfo,
        config: FitConfig,
        standards: Option<StandardsPair>,
        residual_norms: Vec<ResidualNorms>,
    ) -> Result<Self> {
        let mut model = Self::from_parts(
            weights,
            loadings,
            regression,
            coefficients,
            centering,
            config,
            residual_norms,
        )?;
        model.components = components;
        model.standards = standards;
        Ok(model)
    }

    pub fn components(&self) -> &[ComponentFit] {
        &self.components
    }

    /// d×A weight matrix `W`.
    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    /// d×A loading matrix `P`.
    pub fn loadings(&self) -> &DMatrix<f64> {
        &self.loadings
    }

    /// Per-component regression scalars.
    pub fn regression(&self) -> &DVector<f64> {
        &self.regression
    }

    /// `b = W (P'W)^-1 c`
    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coefficients
    }

    pub fn centering(&self) -> &CenteringInfo {
        &self.centering
    }

    pub fn config(&self) -> &FitConfig {
        &self.config
    }

    pub fn n_components(&self) -> usize {
        self.weights.ncols()
    }

    pub fn n_channels(&self) -> usize {
        self.weights.nrows()
    }

    /// Standards as used in the fit (after optional centering).
    pub fn standards(&self) -> Option<&StandardsPair> {
        self.standards.as_ref()
    }

    /// Standards residual norms before deflation (index 0) and after each
    /// component (index `a`).
    pub fn residual_norms(&self) -> &[ResidualNorms] {
        &self.residual_norms
    }

    /// Scores of the primary and secondary standards stacked over all
    /// components, each K×A.
    pub fn standards_scores(&self) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        let first = self.components.first()?;
        let k = first.primary_scores.len();
        let a = self.components.len();
        let mut tp = DMatrix::zeros(k, a);
        let mut ts = DMatrix::zeros(k, a);
        for (j, c) in self.components.iter().enumerate() {
            tp.set_column(j, &c.primary_scores);
            ts.set_column(j, &c.secondary_scores);
        }
        Some((tp, ts))
    }

    fn check_channels(&self, x: &SpectraMatrix) -> Result<()> {
        if x.ncols() != self.n_channels() {
            return Err(Error::Shape(format!(
                "model expects {} channels, spectra have {}",
                self.n_channels(),
                x.ncols()
            )));
        }
        Ok(())
    }
}

/// Unnormalized weight vector solving `(y'y I + γ Γ) w = X' y`.
///
/// `x` and `y` must already be centered.
pub fn solve_weights(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    reg: &RegularizerMatrix,
    gamma: f64,
) -> Result<DVector<f64>> {
    solve_weights_with(x, y, reg, gamma, SolveStrategy::Auto)
}

pub fn solve_weights_with(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    reg: &RegularizerMatrix,
    gamma: f64,
    strategy: SolveStrategy,
) -> Result<DVector<f64>> {
    check_problem(x, y, reg)?;
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "gamma must be finite and non-negative, got {gamma}"
        )));
    }
    let yty = y.norm_squared();
    if yty <= response_tolerance(y) {
        return Err(Error::DegenerateResponse(yty));
    }
    let xty = x.tr_mul(y);
    if gamma == 0.0 || reg.is_zero() {
        return Ok(xty / yty);
    }
    let d = x.ncols();
    let dense = match strategy {
        SolveStrategy::Auto => d <= DENSE_SOLVE_MAX_DIM,
        SolveStrategy::Dense => true,
        SolveStrategy::Woodbury => false,
    };
    if dense {
        let mut system = reg.dense() * gamma;
        for i in 0..d {
            system[(i, i)] += yty;
        }
        numcore::solve_spd(&system, &xty)
    } else {
        woodbury_solve(reg.difference(), yty, gamma, &xty)
    }
}

/// `(α I + γ D'D)^-1 b = (b - c D' (I + c D D')^-1 D b) / α` with `c = γ/α`.
fn woodbury_solve(
    diff: &DMatrix<f64>,
    alpha: f64,
    gamma: f64,
    b: &DVector<f64>,
) -> Result<DVector<f64>> {
    let c = gamma / alpha;
    let k = diff.nrows();
    let mut inner = (diff * diff.transpose()) * c;
    for i in 0..k {
        inner[(i, i)] += 1.0;
    }
    let db = diff * b;
    let z = numcore::solve_spd(&inner, &db)?;
    Ok((b - diff.tr_mul(&z) * c) / alpha)
}

/// Objective `‖X - y w'‖_F² + γ w'Γw` and its gradient
/// `2(-X'y + y'y w + γ Γ w)`.
pub fn objective_and_gradient(
    w: &DVector<f64>,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    reg: &RegularizerMatrix,
    gamma: f64,
) -> Result<(f64, DVector<f64>)> {
    check_problem(x, y, reg)?;
    if w.len() != x.ncols() {
        return Err(Error::Shape(format!(
            "weight has {} entries for {} channels",
            w.len(),
            x.ncols()
        )));
    }
    let residual = x - y * w.transpose();
    let penalty = graphreg::regularizer_value(w, reg)?;
    let value = residual.norm_squared() + gamma * penalty;
    let grad = (w * y.norm_squared() - x.tr_mul(y) + reg.apply(w) * gamma) * 2.0;
    Ok((value, grad))
}

fn check_problem(x: &DMatrix<f64>, y: &DVector<f64>, reg: &RegularizerMatrix) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::Shape(format!(
            "{} spectra but {} responses",
            x.nrows(),
            y.len()
        )));
    }
    if x.ncols() != reg.dim() {
        return Err(Error::Shape(format!(
            "{} channels but regularizer is {}x{}",
            x.ncols(),
            reg.dim(),
            reg.dim()
        )));
    }
    Ok(())
}

fn response_tolerance(y: &DVector<f64>) -> f64 {
    let scale = y.amax().max(f64::MIN_POSITIVE);
    (1e-12 * scale).powi(2) * y.len() as f64
}

/// Fits a graph-regularized PLS1 model on raw primary calibration spectra,
/// responses and matched standards.
pub fn fit(
    x0: &SpectraMatrix,
    y0: &ResponseVector,
    std: &StandardsPair,
    config: &FitConfig,
) -> Result<LatentModel> {
    fit_with(x0, y0, Some(std), config, SolveStrategy::Auto)
}

pub fn fit_with(
    x0: &SpectraMatrix,
    y0: &ResponseVector,
    std: Option<&StandardsPair>,
    config: &FitConfig,
    strategy: SolveStrategy,
) -> Result<LatentModel> {
    let (n, d) = (x0.nrows(), x0.ncols());
    config.validate(n, d)?;
    if let Some(s) = std {
        if s.ncols() != d {
            return Err(Error::Shape(format!(
                "standards have {} channels, calibration spectra {d}",
                s.ncols()
            )));
        }
    }

    let (xc, yc, centering) = numcore::mean_center(x0, y0)?;
    let y = yc.values().clone();
    let mut x = xc.into_values();
    let energy = x.norm_squared();
    let standards = std.map(|s| {
        if config.center_standards {
            s.centered()
        } else {
            s.clone()
        }
    });
    let (mut xp, mut xs) = match &standards {
        Some(s) => (s.primary().clone(), s.secondary().clone()),
        None => (DMatrix::zeros(0, d), DMatrix::zeros(0, d)),
    };

    let a_max = config.n_components;
    let mut components = Vec::with_capacity(a_max);
    let mut residual_norms = Vec::with_capacity(a_max + 1);
    residual_norms.push(residual_norms_of(&xp, &xs));

    for a in 0..a_max {
        let reg = RegularizerMatrix::from_difference(&xp - &xs);
        let mut w = solve_weights_with(&x, &y, &reg, config.gamma, strategy)?;
        let norm = w.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::RankExhausted {
                component: a + 1,
                score_norm_sq: 0.0,
            });
        }
        w /= norm;
        orient(&mut w);

        let t = &x * &w;
        let tt = t.norm_squared();
        if tt <= RANK_TOLERANCE * energy {
            return Err(Error::RankExhausted {
                component: a + 1,
                score_norm_sq: tt,
            });
        }
        let tp = &xp * &w;
        let ts = &xs * &w;
        let c = t.dot(&y) / tt;
        let p = x.tr_mul(&t) / tt;
        let pp = standards_loading(&xp, &tp);
        let ps = standards_loading(&xs, &ts);

        x.ger(-1.0, &t, &p, 1.0);
        xp.ger(-1.0, &tp, &pp, 1.0);
        xs.ger(-1.0, &ts, &ps, 1.0);
        residual_norms.push(residual_norms_of(&xp, &xs));

        log::debug!(
            "component {}: t't={tt:.6e} c={c:.6e} J={:.6e}",
            a + 1,
            (&tp - &ts).norm_squared()
        );
        components.push(ComponentFit {
            weight: w,
            scores: t,
            loading: p,
            primary_scores: tp,
            secondary_scores: ts,
            primary_loading: pp,
            secondary_loading: ps,
            regression: c,
        });
    }

    let weights = DMatrix::from_columns(
        &components
            .iter()
            .map(|c| c.weight.clone())
            .collect::<Vec<_>>(),
    );
    let loadings = DMatrix::from_columns(
        &components
            .iter()
            .map(|c| c.loading.clone())
            .collect::<Vec<_>>(),
    );
    let regression = DVector::from_iterator(a_max, components.iter().map(|c| c.regression));
    let coefficients = aggregate_coefficients(&weights, &loadings, &regression)?;

    Ok(LatentModel {
        components,
        weights,
        loadings,
        regression,
        coefficients,
        centering,
        config: *config,
        standards,
        residual_norms: if std.is_some() {
            residual_norms
        } else {
            Vec::new()
        },
    })
}

fn standards_loading(block: &DMatrix<f64>, scores: &DVector<f64>) -> DVector<f64> {
    let tt = scores.norm_squared();
    if tt > f64::MIN_POSITIVE {
        block.tr_mul(scores) / tt
    } else {
        DVector::zeros(block.ncols())
    }
}

fn residual_norms_of(xp: &DMatrix<f64>, xs: &DMatrix<f64>) -> ResidualNorms {
    ResidualNorms {
        primary: xp.norm(),
        secondary: xs.norm(),
        cross: (xp - xs).norm(),
    }
}

/// Flips `w` so its largest-magnitude entry is positive.
fn orient(w: &mut DVector<f64>) {
    let idx = w.iamax();
    if w[idx] < 0.0 {
        w.neg_mut();
    }
}

/// `b = W (P'W)^-1 c`
pub(crate) fn aggregate_coefficients(
    weights: &DMatrix<f64>,
    loadings: &DMatrix<f64>,
    regression: &DVector<f64>,
) -> Result<DVector<f64>> {
    let ptw = loadings.tr_mul(weights);
    let lu = ptw.clone().lu();
    let u = lu.u();
    let diag_min = u.diagonal().amin();
    let diag_max = u.diagonal().amax();
    if diag_min.is_nan() || diag_min <= 1e-12 * diag_max.max(1.0) {
        return Err(Error::Collinear);
    }
    let z = lu.solve(regression).ok_or(Error::Collinear)?;
    Ok(weights * z)
}

/// `ŷ = (X - 1 x̄') b + ȳ`
pub fn predict(model: &LatentModel, x_new: &SpectraMatrix) -> Result<ResponseVector> {
    model.check_channels(x_new)?;
    let xc = numcore::recenter(x_new, &model.centering)?;
    let y = xc.values() * &model.coefficients;
    ResponseVector::new(y.add_scalar(model.centering.y_mean))
}

/// Scores of new spectra by running deflation through the first `n_lv`
/// weight/loading pairs, plus the final residual.
pub fn project(
    model: &LatentModel,
    x_new: &SpectraMatrix,
    n_lv: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    model.check_channels(x_new)?;
    if n_lv == 0 || n_lv > model.n_components() {
        return Err(Error::InvalidInput(format!(
            "n_lv must be in 1..={}, got {n_lv}",
            model.n_components()
        )));
    }
    let mut x = numcore::recenter(x_new, &model.centering)?.into_values();
    let mut scores = DMatrix::zeros(x.nrows(), n_lv);
    for a in 0..n_lv {
        let t = &x * model.weights.column(a);
        x.ger(-1.0, &t, &model.loadings.column(a), 1.0);
        scores.set_column(a, &t);
    }
    Ok((scores, x))
}

/// Prediction through the score pipeline, `Σ c_a t_a + ȳ`, without `b`.
pub fn predict_sequential(model: &LatentModel, x_new: &SpectraMatrix) -> Result<ResponseVector> {
    let (scores, _) = project(model, x_new, model.n_components())?;
    let y = scores * &model.regression;
    ResponseVector::new(y.add_scalar(model.centering.y_mean))
}

/// `Σ_a t_a p_a' + x̄` over the first `n_lv` components.
pub fn reconstruct(
    model: &LatentModel,
    x_new: &SpectraMatrix,
    n_lv: usize,
) -> Result<SpectraMatrix> {
    let (scores, _) = project(model, x_new, n_lv)?;
    let p = model.loadings.columns(0, n_lv);
    let mean = DVector::from_column_slice(&model.centering.x_mean);
    let mut out = scores * p.transpose();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        col.add_scalar_mut(mean[j]);
    }
    Ok(x_new.with_values(out))
}

/// Standards deflation residuals before deflation (`n_lv = 0`) and after
/// each component.
pub fn standards_residuals(model: &LatentModel) -> Result<Vec<StandardsResidual>> {
    let std = model.standards.as_ref().ok_or_else(|| {
        Error::InvalidInput(
            "model carries no standards (fitted without them, or loaded from disk)".into(),
        )
    })?;
    let mut xp = std.primary().clone();
    let mut xs = std.secondary().clone();
    let mut out = Vec::with_capacity(model.components.len() + 1);
    out.push(StandardsResidual {
        n_lv: 0,
        norms: residual_norms_of(&xp, &xs),
        primary: xp.clone(),
        secondary: xs.clone(),
    });
    for (a, c) in model.components.iter().enumerate() {
        xp.ger(-1.0, &c.primary_scores, &c.primary_loading, 1.0);
        xs.ger(-1.0, &c.secondary_scores, &c.secondary_loading, 1.0);
        out.push(StandardsResidual {
            n_lv: a + 1,
            norms: residual_norms_of(&xp, &xs),
            primary: xp.clone(),
            secondary: xs.clone(),
        });
    }
    Ok(out)
}

/// First deflation stage whose cross-instrument residual norm is at most
/// `fraction` of the undeflated one.
pub fn exhausted_after(norms: &[ResidualNorms], fraction: f64) -> Option<usize> {
    let initial = norms.first()?.cross;
    norms.iter().position(|n| n.cross <= fraction * initial)
}
