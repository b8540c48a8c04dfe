//! The map `x -> 1/x` and its spectral consequences.
//!
//! With `a1 < 0 < a2` the points `eta_j = 1/a_j` are ordered
//! `eta1 < 0 < eta4 < eta3 < eta2`, which relabels into a new configuration
//! whose near-zero tail is `beta_n = sqrt(1 - sigma_{-n}^2)` of the old one.

use serde::Serialize;
use thiserror::Error;

use crate::asymptotics::{fit_line, AsymptoticLaws};
use crate::geometry::{EndpointConfig, GeometryError};
use crate::hilbert::{aligned_grid_sizes, build_matrix, HilbertError};
use crate::quadrature::{compute_constants, QuadratureError};
use crate::svd::{match_indices, Direction, SvdError, SvdResult, SvdSolver};

const SHIFT_NUDGE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InversionError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
    #[error(transparent)]
    Svd(#[from] SvdError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransformedConfig {
    /// Translated configuration with `a1 < 0 < a2`.
    pub original: EndpointConfig,
    /// `(1/a1, 1/a4, 1/a3, 1/a2)` of `original`.
    pub eta: EndpointConfig,
    pub shift: f64,
    pub warning: Option<String>,
}

impl TransformedConfig {
    /// `sqrt(|a1| a2 a3 a4)` of the translated configuration.
    pub fn scale(&self) -> f64 {
        self.original.as_array().iter().product::<f64>().abs().sqrt()
    }

    /// Untranslated configuration recovered from `eta`.
    pub fn inverse(&self) -> Result<EndpointConfig, GeometryError> {
        let e = self.eta.as_array();
        EndpointConfig::new(1.0 / e[0] - self.shift, 1.0 / e[3] - self.shift, 1.0 / e[2] - self.shift, 1.0 / e[1] - self.shift)
    }
}

/// Translates by `-(a1 + a2)/2` unless `a1 < 0 < a2` already holds, then
/// inverts and relabels.
pub fn transform_config(cfg: &EndpointConfig) -> Result<TransformedConfig, InversionError> {
    let mut shift = if cfg.a1() < 0.0 && cfg.a2() > 0.0 { 0.0 } else { -(cfg.a1() + cfg.a2()) / 2.0 };
    let mut warning = None;
    let mut original = cfg.translated(shift)?;
    if original.as_array().contains(&0.0) {
        shift += SHIFT_NUDGE;
        original = cfg.translated(shift)?;
        warning = Some(format!("endpoint at zero after translation; shift nudged by {SHIFT_NUDGE:e}"));
    }
    let a = original.as_array();
    let eta = EndpointConfig::new(1.0 / a[0], 1.0 / a[3], 1.0 / a[2], 1.0 / a[1])?;
    Ok(TransformedConfig { original, eta, shift, warning })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KbarCheck {
    pub kbar_plus: f64,
    pub kbar_minus: f64,
    pub rel_err_plus: f64,
    pub rel_err_minus: f64,
}

/// `Kbar+ = sqrt(|a1| a2 a3 a4) K-` and `Kbar- = sqrt(|a1| a2 a3 a4) K+`.
pub fn verify_kbar_identities(cfg: &EndpointConfig, tol: f64) -> Result<KbarCheck, InversionError> {
    let t = transform_config(cfg)?;
    let k = compute_constants(&t.original, tol)?;
    let kbar = compute_constants(&t.eta, tol)?;
    let s = t.scale();
    Ok(KbarCheck {
        kbar_plus: kbar.k_plus,
        kbar_minus: kbar.k_minus,
        rel_err_plus: (kbar.k_plus / (s * k.k_minus) - 1.0).abs(),
        rel_err_minus: (kbar.k_minus / (s * k.k_plus) - 1.0).abs(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaReport {
    pub n_max: usize,
    /// Grid sizes used for the transformed problem.
    pub transformed_grid: (usize, usize),
    pub aligned: bool,
    pub offset_one: usize,
    pub offset_bar: usize,
    /// Fitted slope of `ln(1 - s_i^2)` over the near-one tail.
    pub slope_one: f64,
    /// Fitted slope of `ln sbar_n` over the transformed near-zero tail.
    pub slope_bar: f64,
    pub ratio: f64,
    pub kbar: KbarCheck,
    /// `|near_one_rate(cfg) / (2 decay_rate(eta)) - 1|`.
    pub rate_identity_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Slope comparison from precomputed SVDs of the original and the
/// transformed problem.
pub fn beta_relation_from(
    cfg: &EndpointConfig,
    original: &SvdResult,
    transformed: &SvdResult,
    transformed_grid: (usize, usize),
    n_max: usize,
    tol: f64,
) -> Result<BetaReport, InversionError> {
    let t = transform_config(cfg)?;
    let aligned = aligned_grid_sizes(&t.eta, transformed_grid.0) == Some(transformed_grid);
    let laws = AsymptoticLaws::new(compute_constants(cfg, tol)?);
    let laws_bar = AsymptoticLaws::new(compute_constants(&t.eta, tol)?);
    let ns: Vec<f64> = (1..=n_max).map(|n| n as f64).collect();

    let one = original.log_one_minus_sq();
    let m1 = match_indices(&one, &|n| laws.ln_one_minus_sq_near_one(n), 1, n_max, Direction::Descending, (0.19f64).ln())?;
    let ys: Vec<f64> = (1..=n_max).map(|n| one[m1 - n]).collect();
    let (slope_one, _) = fit_line(&ns, &ys);

    let bar = transformed.log_values();
    let m2 = match_indices(&bar, &|n| laws_bar.ln_sigma_small(n), 1, n_max, Direction::Ascending, (0.1f64).ln())?;
    let ys: Vec<f64> = (1..=n_max).map(|n| bar[m2 + n]).collect();
    let (slope_bar, _) = fit_line(&ns, &ys);

    let ratio = slope_one / slope_bar;
    Ok(BetaReport {
        n_max,
        transformed_grid,
        aligned,
        offset_one: m1,
        offset_bar: m2,
        slope_one,
        slope_bar,
        ratio,
        kbar: verify_kbar_identities(cfg, tol)?,
        rate_identity_error: (laws.near_one_rate / (2.0 * laws_bar.decay_rate) - 1.0).abs(),
        tolerance: 0.05,
        pass: (ratio / 2.0 - 1.0).abs() <= 0.05,
    })
}

/// Builds the original operator on `n_target x n_source`, the transformed
/// one on aligned grids of at least `n_target` rows when such grids exist
/// (same sizes otherwise), runs the two SVDs concurrently and compares the
/// tail slopes.
pub fn verify_beta_relation(
    cfg: &EndpointConfig,
    n_target: usize,
    n_source: usize,
    solver_one: &dyn SvdSolver,
    solver_bar: &dyn SvdSolver,
    n_max: usize,
    tol: f64,
) -> Result<BetaReport, InversionError> {
    let t = transform_config(cfg)?;
    let grid_bar = aligned_grid_sizes(&t.eta, n_target).unwrap_or((n_target, n_source));
    let m = build_matrix(cfg, n_target, n_source)?;
    let mbar = build_matrix(&t.eta, grid_bar.0, grid_bar.1)?;
    let (a, b) = std::thread::scope(|s| {
        let h = s.spawn(|| solver_bar.solve(&mbar));
        (solver_one.solve(&m), h.join().expect("svd thread"))
    });
    beta_relation_from(cfg, &a?, &b?, grid_bar, n_max, tol)
}
