//! The differential operator `L psi = (P psi')' + 2 (x - sigma)^2 psi` on
//! sampled functions, and the checks built on it.

use serde::Serialize;
use thiserror::Error;

use crate::asymptotics::AsymptoticLaws;
use crate::geometry::{center_sigma, eval_p, EndpointConfig};
use crate::hilbert::SampledGrid;
use crate::quadrature::{adaptive_gk, QuadratureError};
use crate::svd::SvdResult;

/// Distance kept from the singular endpoints in residual checks.
pub const INTERIOR_MARGIN: f64 = 0.2;
const MIN_POINTS: usize = 9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SturmError {
    #[error("grid has {0} points; at least {MIN_POINTS} are needed")]
    GridTooCoarse(usize),
    #[error("grid and values differ in length ({grid} vs {values})")]
    LengthMismatch { grid: usize, values: usize },
    #[error("grid is not strictly increasing")]
    NotIncreasing,
    #[error("grid is not uniform (step {got} vs {expected})")]
    NonUniform { expected: f64, got: f64 },
    #[error("grid [{lo}, {hi}] is not inside [a1, a3] or [a2, a4]")]
    OutsideIntervals { lo: f64, hi: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledFunction {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self, SturmError> {
        if grid.len() != values.len() {
            return Err(SturmError::LengthMismatch { grid: grid.len(), values: values.len() });
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SturmError::NotIncreasing);
        }
        Ok(Self { grid, values })
    }

    /// `f` sampled at `count` uniform points of `[lo, hi]`.
    pub fn from_fn(lo: f64, hi: f64, count: usize, f: impl Fn(f64) -> f64) -> Result<Self, SturmError> {
        if count < 2 {
            return Err(SturmError::GridTooCoarse(count));
        }
        let h = (hi - lo) / (count - 1) as f64;
        let grid: Vec<f64> = (0..count).map(|i| if i + 1 == count { hi } else { lo + i as f64 * h }).collect();
        let values = grid.iter().map(|&x| f(x)).collect();
        Self::new(grid, values)
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}

fn check_grid(cfg: &EndpointConfig, grid: &[f64]) -> Result<f64, SturmError> {
    if grid.len() < MIN_POINTS {
        return Err(SturmError::GridTooCoarse(grid.len()));
    }
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    let slack = 1e-12 * (cfg.a4() - cfg.a1());
    let inside = |a: f64, b: f64| lo >= a - slack && hi <= b + slack;
    if !inside(cfg.a1(), cfg.a3()) && !inside(cfg.a2(), cfg.a4()) {
        return Err(SturmError::OutsideIntervals { lo, hi });
    }
    let h = (hi - lo) / (grid.len() - 1) as f64;
    for w in grid.windows(2) {
        let d = w[1] - w[0];
        if (d - h).abs() > 1e-9 * h {
            return Err(SturmError::NonUniform { expected: h, got: d });
        }
    }
    Ok(h)
}

/// Flux-form central differences, `P` taken at the half points. The first
/// and last output values are `NaN`.
pub fn apply_l(cfg: &EndpointConfig, f: &SampledFunction) -> Result<SampledFunction, SturmError> {
    let h = check_grid(cfg, &f.grid)?;
    let sigma = center_sigma(cfg);
    let (x, v) = (&f.grid, &f.values);
    let mut out = vec![f64::NAN; x.len()];
    for i in 1..x.len() - 1 {
        let pr = eval_p(cfg, x[i] + 0.5 * h);
        let pl = eval_p(cfg, x[i] - 0.5 * h);
        let flux = (pr * (v[i + 1] - v[i]) - pl * (v[i] - v[i - 1])) / (h * h);
        let d = x[i] - sigma;
        out[i] = flux + 2.0 * d * d * v[i];
    }
    Ok(SampledFunction { grid: x.clone(), values: out })
}

/// `<L f, f> / <f, f>` over the points where `L f` is defined.
pub fn rayleigh_quotient(cfg: &EndpointConfig, f: &SampledFunction) -> Result<f64, SturmError> {
    let lf = apply_l(cfg, f)?;
    let (mut num, mut den) = (0.0, 0.0);
    for (a, b) in lf.values.iter().zip(&f.values) {
        if a.is_finite() {
            num += a * b;
            den += b * b;
        }
    }
    if den == 0.0 {
        return Err(SturmError::InsufficientData("zero function".into()));
    }
    Ok(num / den)
}

/// Quotients of `u_n = w1 cos(nx)` on `[a2, a3]` and `v_n = w2 cos(nx)` on
/// `[a3, a4]`, with `w1 = (x-a2)(a3-x)`, `w2 = (x-a3)(a4-x)`.
pub fn rayleigh_witnesses(cfg: &EndpointConfig, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let quotient = |lo: f64, hi: f64| {
        // about 40 points per unit of n x
        let count = ((40.0 * nf.max(1.0) * (hi - lo)).ceil() as usize).max(2001) + 1;
        let f = SampledFunction::from_fn(lo, hi, count, |x| (x - lo) * (hi - x) * (nf * x).cos())
            .expect("uniform grid");
        rayleigh_quotient(cfg, &f).expect("grid inside the configuration")
    };
    (quotient(cfg.a2(), cfg.a3()), quotient(cfg.a3(), cfg.a4()))
}

/// `int_{a2}^{a3} ((x-a2)(a3-x))^3 cos^2(nx) dx`.
pub fn moment_integral(a2: f64, a3: f64, n: usize) -> Result<f64, QuadratureError> {
    let nf = n as f64;
    adaptive_gk(
        |x| {
            let w = (x - a2) * (a3 - x);
            let c = (nf * x).cos();
            w * w * w * c * c
        },
        a2,
        a3,
        1e-12,
    )
}

/// `(a3 - a2)^7 / 280`, the large-`n` limit of [`moment_integral`].
pub fn moment_limit(a2: f64, a3: f64) -> f64 {
    (a3 - a2).powi(7) / 280.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuotientEntry {
    pub index: usize,
    pub n: usize,
    pub quotient: f64,
    pub lambda: f64,
    pub relative_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub margin: f64,
    pub entries: Vec<QuotientEntry>,
}

/// Left singular vector `index` restricted to `[lo, hi]`.
fn restrict(grid: &SampledGrid, vector: &[f64], lo: f64, hi: f64) -> Result<SampledFunction, SturmError> {
    let (xs, vs): (Vec<f64>, Vec<f64>) =
        (0..grid.count).map(|i| (grid.point(i), vector[i])).filter(|(x, _)| *x >= lo && *x <= hi).unzip();
    SampledFunction::new(xs, vs)
}

/// Generalized Rayleigh quotient of the left singular vector `index`, with
/// the two pieces `[a1+m, a2-m]` and `[a2+m, a3-m]` handled separately.
pub fn vector_quotient(cfg: &EndpointConfig, grid: &SampledGrid, vector: &[f64]) -> Result<f64, SturmError> {
    let m = INTERIOR_MARGIN;
    let (mut num, mut den) = (0.0, 0.0);
    for (lo, hi) in [(cfg.a1() + m, cfg.a2() - m), (cfg.a2() + m, cfg.a3() - m)] {
        let f = restrict(grid, vector, lo, hi)?;
        let lf = apply_l(cfg, &f)?;
        for (a, b) in lf.values.iter().zip(&f.values) {
            if a.is_finite() {
                num += a * b;
                den += b * b;
            }
        }
    }
    if den == 0.0 {
        return Err(SturmError::InsufficientData("vector vanishes on the interior".into()));
    }
    Ok(num / den)
}

/// Quotients of the matched left singular vectors against
/// `lambda_n = (n pi / K-)^2`. `matched` holds `(index, n)` pairs.
pub fn eigenvector_consistency(
    cfg: &EndpointConfig,
    grid: &SampledGrid,
    svd: &SvdResult,
    laws: &AsymptoticLaws,
    matched: &[(usize, usize)],
) -> Result<ConsistencyReport, SturmError> {
    if matched.is_empty() {
        return Err(SturmError::InsufficientData("no matched indices".into()));
    }
    let mut entries = Vec::with_capacity(matched.len());
    for &(index, n) in matched {
        if index >= svd.len() {
            return Err(SturmError::InsufficientData(format!("index {index} beyond {} values", svd.len())));
        }
        let quotient = vector_quotient(cfg, grid, &svd.left(index))?;
        let lambda = laws.lambda_n(n);
        entries.push(QuotientEntry { index, n, quotient, lambda, relative_gap: (quotient - lambda) / lambda });
    }
    Ok(ConsistencyReport { margin: INTERIOR_MARGIN, entries })
}

/// Sign changes of `values`, ignoring entries below `1e3 eps max|v|`.
pub fn sign_changes(values: &[f64]) -> usize {
    let floor = 1e3 * f64::EPSILON * values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut last = 0.0;
    let mut count = 0;
    for &v in values {
        if v.abs() <= floor {
            continue;
        }
        if last != 0.0 && v.signum() != last {
            count += 1;
        }
        last = v.signum();
    }
    count
}

/// Sign changes of a target-grid vector on `(a1, a2)` and on `(a2, a3)`.
pub fn oscillation_counts(cfg: &EndpointConfig, grid: &SampledGrid, vector: &[f64]) -> (usize, usize) {
    let part = |lo: f64, hi: f64| {
        let v: Vec<f64> = (0..grid.count).filter(|&i| grid.point(i) > lo && grid.point(i) < hi).map(|i| vector[i]).collect();
        sign_changes(&v)
    };
    (part(cfg.a1(), cfg.a2()), part(cfg.a2(), cfg.a3()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::eval_p_prime;

    fn cfg() -> EndpointConfig {
        EndpointConfig::default_config()
    }

    fn max_err(f: &SampledFunction, want: impl Fn(f64) -> f64) -> f64 {
        let c = cfg();
        let lf = apply_l(&c, f).unwrap();
        lf.grid
            .iter()
            .zip(&lf.values)
            .filter(|(_, v)| v.is_finite())
            .map(|(&x, v)| (v - want(x)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn constant_and_linear() {
        let c = cfg();
        let s = center_sigma(&c);
        let one = SampledFunction::from_fn(0.2, 5.8, 201, |_| 1.0).unwrap();
        assert!(max_err(&one, |x| 2.0 * (x - s).powi(2)) < 1e-10);
        let lin = SampledFunction::from_fn(0.2, 5.8, 201, |x| x - s).unwrap();
        // (P(x+h/2) - P(x-h/2))/h = P'(x) + P'''(x) h^2/24
        let e = max_err(&lin, |x| eval_p_prime(&c, x) + 2.0 * (x - s).powi(3));
        assert!(e < 0.05, "{e}");
        let lin_fine = SampledFunction::from_fn(0.2, 5.8, 401, |x| x - s).unwrap();
        let e2 = max_err(&lin_fine, |x| eval_p_prime(&c, x) + 2.0 * (x - s).powi(3));
        assert!((e / e2 - 4.0).abs() < 0.1);
    }

    #[test]
    fn second_order_convergence() {
        let c = cfg();
        let s = center_sigma(&c);
        let want = |x: f64| 2.0 * eval_p_prime(&c, x) * (x - s) + 2.0 * eval_p(&c, x) + 2.0 * (x - s).powi(4);
        let errs: Vec<f64> = [101, 201, 401]
            .iter()
            .map(|&k| max_err(&SampledFunction::from_fn(6.2, 11.8, k, |x| (x - s).powi(2)).unwrap(), want))
            .collect();
        for w in errs.windows(2) {
            assert!((w[0] / w[1] - 4.0).abs() < 0.2, "{errs:?}");
        }
    }

    #[test]
    fn grid_guards() {
        let c = cfg();
        let short = SampledFunction::from_fn(1.0, 2.0, 8, |x| x).unwrap();
        assert_eq!(apply_l(&c, &short), Err(SturmError::GridTooCoarse(8)));
        let wide = SampledFunction::from_fn(-1.0, 2.0, 20, |x| x).unwrap();
        assert!(matches!(apply_l(&c, &wide), Err(SturmError::OutsideIntervals { .. })));
        let uneven = SampledFunction::new((0..12).map(|i| 1.0 + (i * i) as f64 * 0.01).collect(), vec![0.0; 12]).unwrap();
        assert!(matches!(apply_l(&c, &uneven), Err(SturmError::NonUniform { .. })));
        assert!(SampledFunction::new(vec![1.0, 2.0], vec![0.0]).is_err());
        assert!(SampledFunction::new(vec![2.0, 1.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn witnesses_unbounded_both_ways() {
        let c = cfg();
        let (u20, v20) = rayleigh_witnesses(&c, 20);
        let (u40, v40) = rayleigh_witnesses(&c, 40);
        let (u80, v80) = rayleigh_witnesses(&c, 80);
        assert!(u40 < u20 && u20 < 0.0);
        assert!(v40 > v20 && v20 > 0.0);
        assert!(((u80 / 6400.0) / (u40 / 1600.0) - 1.0).abs() < 0.1);
        assert!(((v80 / 6400.0) / (v40 / 1600.0) - 1.0).abs() < 0.1);
    }

    #[test]
    fn witness_limit_matches_weighted_average() {
        // r/n^2 -> -int P w^2 / int w^2 since cos^2 averages to 1/2 in both
        let c = cfg();
        let limit = |lo: f64, hi: f64| {
            let w = |x: f64| (x - lo) * (hi - x);
            let num = adaptive_gk(|x| eval_p(&c, x) * w(x) * w(x), lo, hi, 1e-12).unwrap();
            let den = adaptive_gk(|x| w(x) * w(x), lo, hi, 1e-12).unwrap();
            -num / den
        };
        let (u, v) = rayleigh_witnesses(&c, 80);
        assert!((u / 6400.0 / limit(3.0, 6.0) - 1.0).abs() < 0.02);
        assert!((v / 6400.0 / limit(6.0, 12.0) - 1.0).abs() < 0.02);
    }

    #[test]
    fn moment_examples() {
        let i = moment_integral(0.0, 1.0, 64).unwrap();
        assert!((i - 1.0 / 280.0).abs() < 1e-5);
        // int_0^1 (x(1-x))^3 dx = B(4,4) = 1/140
        let b = adaptive_gk(|x| (x * (1.0 - x)).powi(3), 0.0, 1.0, 1e-14).unwrap();
        assert!((b - 1.0 / 140.0).abs() < 1e-14);
        assert!((0.5 * b * 3f64.powi(7) - moment_limit(3.0, 6.0)).abs() < 1e-10);
    }

    #[test]
    fn sign_change_floor() {
        assert_eq!(sign_changes(&[1.0, -1.0, 1.0]), 2);
        assert_eq!(sign_changes(&[1.0, 1e-300, -1e-300, 1.0]), 0);
        assert_eq!(sign_changes(&[]), 0);
    }
}
