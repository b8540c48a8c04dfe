//! Phase integrals of `1/sqrt(|P|)` and small integration utilities.
//!
//! Integrals between two adjacent roots use `x = mid + half*sin(theta)`,
//! which turns `(x - lo)(hi - x)` into `half^2 cos^2(theta)` and leaves a
//! smooth integrand. Cumulative integrals from one root use
//! `t = a + (x - a) sin^2(theta)` for the same reason.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;
use thiserror::Error;

use crate::geometry::EndpointConfig;

pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("radicand {value} is not positive at x = {x}; wrong sign for this interval")]
    NonPositiveRadicand { x: f64, value: f64 },
    #[error("adaptive quadrature stopped at estimated error {estimate:e} > tol {tol:e} after {intervals} intervals")]
    ToleranceNotMet { estimate: f64, tol: f64, intervals: usize },
    #[error("endpoint pair ({lo}, {hi}) is not an adjacent pair")]
    BadInterval { lo: usize, hi: usize },
    #[error("x = {x} is outside ({lo}, {hi})")]
    OutOfRange { x: f64, lo: f64, hi: f64 },
    #[error("grid and samples differ in length ({grid} vs {samples}) or grid is not increasing")]
    GridMismatch { grid: usize, samples: usize },
}

/// Which square root is taken: `sqrt(P)` or `sqrt(-P)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Radicand {
    Plus,
    Minus,
}

impl Radicand {
    fn factor(self) -> f64 {
        match self {
            Radicand::Plus => 1.0,
            Radicand::Minus => -1.0,
        }
    }

    /// The sign making the radicand positive on `(a_lo, a_lo+1)`.
    pub fn for_interval(lo: usize) -> Radicand {
        if lo == 1 {
            Radicand::Plus
        } else {
            Radicand::Minus
        }
    }
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

const MAX_INTERVALS: usize = 4000;

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error).then_with(|| other.a.total_cmp(&self.a))
    }
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Panel {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    Panel { a, b, value: k * h, error: ((k - g) * h).abs() }
}

/// Globally adaptive Gauss-Kronrod (7/15) on `[a, b]` to absolute `tol`.
///
/// The panel with the largest error estimate is bisected first, so the
/// refinement order is fixed and the result deterministic. A relative
/// floor of `50 eps |I|` keeps tolerances below rounding from looping.
pub fn adaptive_gk<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64, QuadratureError> {
    if a == b {
        return Ok(0.0);
    }
    let mut heap = BinaryHeap::new();
    let first = gk15(&mut f, a, b);
    let mut total = first.value;
    let mut err = first.error;
    heap.push(first);
    loop {
        let floor = 50.0 * f64::EPSILON * total.abs();
        if err <= tol.max(floor) {
            // re-sum in a fixed order for reproducible rounding
            let mut panels: Vec<Panel> = heap.into_vec();
            panels.sort_by(|p, q| p.a.total_cmp(&q.a));
            return Ok(panels.iter().map(|p| p.value).sum());
        }
        if heap.len() >= MAX_INTERVALS {
            return Err(QuadratureError::ToleranceNotMet { estimate: err, tol, intervals: heap.len() });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let left = gk15(&mut f, worst.a, mid);
        let right = gk15(&mut f, mid, worst.b);
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
}

fn check_pair(lo: usize, hi: usize) -> Result<(), QuadratureError> {
    if hi == lo + 1 && hi <= 3 {
        Ok(())
    } else {
        Err(QuadratureError::BadInterval { lo, hi })
    }
}

/// `int_{a_lo}^{a_hi} dx / sqrt(sign * P(x))` for adjacent roots.
pub fn integrate_inv_sqrt(
    cfg: &EndpointConfig,
    lo: usize,
    hi: usize,
    sign: Radicand,
    tol: f64,
) -> Result<f64, QuadratureError> {
    check_pair(lo, hi)?;
    let (xl, xh) = (cfg.endpoint(lo), cfg.endpoint(hi));
    let others: Vec<f64> = (0..4).filter(|&j| j != lo && j != hi).map(|j| cfg.endpoint(j)).collect();
    let mid = 0.5 * (xl + xh);
    let half = 0.5 * (xh - xl);
    let s = sign.factor();
    let mut bad: Option<QuadratureError> = None;
    let integrand = |theta: f64| {
        let x = mid + half * theta.sin();
        let q = (x - others[0]) * (x - others[1]);
        // sign*P = sign*(x-lo)(x-hi)*q = -sign*half^2 cos^2 * q
        let r = -s * q;
        if r <= 0.0 {
            if bad.is_none() {
                bad = Some(QuadratureError::NonPositiveRadicand { x, value: r });
            }
            return 0.0;
        }
        1.0 / r.sqrt()
    };
    let v = adaptive_gk(integrand, -std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2, tol)?;
    match bad {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// `K-`, `K+` and the second `K-` over `(a3, a4)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralConstants {
    pub k_minus: f64,
    pub k_plus: f64,
    pub k_minus_right: f64,
    pub tol: f64,
}

impl SpectralConstants {
    pub fn identity_residual(&self) -> f64 {
        (self.k_minus - self.k_minus_right).abs()
    }
}

pub fn compute_constants(cfg: &EndpointConfig, tol: f64) -> Result<SpectralConstants, QuadratureError> {
    Ok(SpectralConstants {
        k_minus: integrate_inv_sqrt(cfg, 0, 1, Radicand::Minus, tol)?,
        k_plus: integrate_inv_sqrt(cfg, 1, 2, Radicand::Plus, tol)?,
        k_minus_right: integrate_inv_sqrt(cfg, 2, 3, Radicand::Minus, tol)?,
        tol,
    })
}

/// Cumulative phase `int |dt| / sqrt(sign P(t))` from root `a_ref` to `x`,
/// measured as a positive length along the interval towards `x`.
///
/// The full-interval value is cached so that points in the far half are
/// computed from the other root, keeping both singularities at the
/// substituted end.
#[derive(Debug, Clone)]
pub struct PhaseIntegral {
    cfg: EndpointConfig,
    a_ref: usize,
    other: usize,
    sign: Radicand,
    tol: f64,
    full: f64,
}

impl PhaseIntegral {
    /// `toward_right` selects the neighbour `a_ref + 1` instead of `a_ref - 1`.
    pub fn new(cfg: &EndpointConfig, a_ref: usize, toward_right: bool, sign: Radicand, tol: f64) -> Result<Self, QuadratureError> {
        let other = if toward_right { a_ref + 1 } else { a_ref.wrapping_sub(1) };
        if other > 3 {
            return Err(QuadratureError::BadInterval { lo: a_ref, hi: other });
        }
        let (lo, hi) = (a_ref.min(other), a_ref.max(other));
        let full = integrate_inv_sqrt(cfg, lo, hi, sign, tol)?;
        Ok(Self { cfg: *cfg, a_ref, other, sign, tol, full })
    }

    pub fn full(&self) -> f64 {
        self.full
    }

    pub fn eval(&self, x: f64) -> Result<f64, QuadratureError> {
        let a = self.cfg.endpoint(self.a_ref);
        let b = self.cfg.endpoint(self.other);
        let (lo, hi) = (a.min(b), a.max(b));
        if !(x >= lo && x <= hi) {
            return Err(QuadratureError::OutOfRange { x, lo, hi });
        }
        if (x - a).abs() <= 0.5 * (b - a).abs() {
            from_root(&self.cfg, self.a_ref, x, self.sign, self.tol)
        } else {
            Ok(self.full - from_root(&self.cfg, self.other, x, self.sign, self.tol)?)
        }
    }
}

fn from_root(cfg: &EndpointConfig, root: usize, x: f64, sign: Radicand, tol: f64) -> Result<f64, QuadratureError> {
    let a = cfg.endpoint(root);
    let d = x - a;
    if d == 0.0 {
        return Ok(0.0);
    }
    let others: Vec<f64> = (0..4).filter(|&j| j != root).map(|j| cfg.endpoint(j)).collect();
    let sd = d.signum();
    let s = sign.factor();
    let scale = 2.0 * d.abs().sqrt();
    let mut bad: Option<QuadratureError> = None;
    // t = a + d sin^2(theta); sign*P(t) = sign*d*sin^2 * R(t)
    let integrand = |theta: f64| {
        let (sn, cs) = theta.sin_cos();
        let t = a + d * sn * sn;
        let r = s * sd * (t - others[0]) * (t - others[1]) * (t - others[2]);
        if r <= 0.0 {
            if bad.is_none() {
                bad = Some(QuadratureError::NonPositiveRadicand { x: t, value: r });
            }
            return 0.0;
        }
        scale * cs / r.sqrt()
    };
    let v = adaptive_gk(integrand, 0.0, std::f64::consts::FRAC_PI_2, tol)?;
    match bad {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// One-off phase integral; see [`PhaseIntegral`] for repeated use.
pub fn phase_integral(cfg: &EndpointConfig, a_ref: usize, x: f64, sign: Radicand, tol: f64) -> Result<f64, QuadratureError> {
    if x == cfg.endpoint(a_ref) {
        return Ok(0.0);
    }
    let toward_right = match a_ref {
        0 => true,
        3 => false,
        _ => x > cfg.endpoint(a_ref),
    };
    PhaseIntegral::new(cfg, a_ref, toward_right, sign, tol)?.eval(x)
}

/// Trapezoid-rule `sqrt(int f^2)` on an increasing grid.
pub fn l2_norm(samples: &[f64], grid: &[f64]) -> Result<f64, QuadratureError> {
    if samples.len() != grid.len() || grid.len() < 2 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(QuadratureError::GridMismatch { grid: grid.len(), samples: samples.len() });
    }
    let s: f64 = grid
        .windows(2)
        .zip(samples.windows(2))
        .map(|(x, f)| 0.5 * (x[1] - x[0]) * (f[0] * f[0] + f[1] * f[1]))
        .sum();
    Ok(s.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::eval_p_prime;

    // scipy.integrate.quad at epsabs=1e-13 on the sine-substituted integrands
    const K_MINUS: f64 = 0.47191240280906693;
    const K_PLUS: f64 = 0.5522127234124028;

    #[test]
    fn default_constants_match_oracle() {
        let c = compute_constants(&EndpointConfig::default_config(), 1e-12).unwrap();
        assert!((c.k_minus - K_MINUS).abs() < 1e-12);
        assert!((c.k_plus - K_PLUS).abs() < 1e-12);
        assert!(c.identity_residual() < 1e-11);
    }

    #[test]
    fn gk_polynomial_exact() {
        let v = adaptive_gk(|x| x.powi(5) - 3.0 * x * x, 0.0, 2.0, 1e-14).unwrap();
        assert!((v - (64.0 / 6.0 - 8.0)).abs() < 1e-13);
    }

    #[test]
    fn wrong_sign_is_reported() {
        let r = integrate_inv_sqrt(&EndpointConfig::default_config(), 0, 1, Radicand::Plus, 1e-10);
        assert!(matches!(r, Err(QuadratureError::NonPositiveRadicand { .. })));
        let r = integrate_inv_sqrt(&EndpointConfig::default_config(), 0, 2, Radicand::Plus, 1e-10);
        assert!(matches!(r, Err(QuadratureError::BadInterval { .. })));
    }

    #[test]
    fn symmetric_config() {
        let c = EndpointConfig::new(-3.0, -1.0, 1.0, 3.0).unwrap();
        let l = integrate_inv_sqrt(&c, 0, 1, Radicand::Minus, 1e-12).unwrap();
        let r = integrate_inv_sqrt(&c, 2, 3, Radicand::Minus, 1e-12).unwrap();
        assert!((l - r).abs() < 1e-13);
        let c = EndpointConfig::new(-2.0, -1.0, 1.0, 2.0).unwrap();
        let k = compute_constants(&c, 1e-12).unwrap();
        assert!((k.k_minus - k.k_minus_right).abs() < 1e-10);
    }

    #[test]
    fn scaling_and_translation() {
        let c = EndpointConfig::default_config();
        let k = compute_constants(&c, 1e-12).unwrap();
        let k2 = compute_constants(&c.scaled(2.0).unwrap(), 1e-12).unwrap();
        assert!((k2.k_minus * 2.0 / k.k_minus - 1.0).abs() < 1e-9);
        assert!((k2.k_plus * 2.0 / k.k_plus - 1.0).abs() < 1e-9);
        let t = EndpointConfig::new(1.0, 4.0, 7.0, 13.0).unwrap();
        let kt = compute_constants(&t, 1e-12).unwrap();
        assert!((kt.k_minus - k.k_minus).abs() < 1e-10);
        assert!((kt.k_plus - k.k_plus).abs() < 1e-10);
    }

    #[test]
    fn phase_limits() {
        let c = EndpointConfig::default_config();
        assert_eq!(phase_integral(&c, 0, 0.0, Radicand::Minus, 1e-10).unwrap(), 0.0);
        let near = phase_integral(&c, 0, 3.0 - 1e-12, Radicand::Minus, 1e-10).unwrap();
        assert!((near - K_MINUS).abs() < 1e-5);
        let full = phase_integral(&c, 0, 3.0, Radicand::Minus, 1e-10).unwrap();
        assert!((full - K_MINUS).abs() < 1e-10);
        let x = 1e-4;
        let approx = 2.0 * ((0.0 - x) / eval_p_prime(&c, 0.0)).sqrt();
        let v = phase_integral(&c, 0, x, Radicand::Minus, 1e-12).unwrap();
        assert!((v / approx - 1.0).abs() < 0.01);
        // leftward from a4
        let f = phase_integral(&c, 3, 6.0, Radicand::Minus, 1e-10).unwrap();
        assert!((f - K_MINUS).abs() < 1e-9);
    }

    #[test]
    fn phase_monotone() {
        let c = EndpointConfig::default_config();
        let p = PhaseIntegral::new(&c, 1, true, Radicand::Plus, 1e-10).unwrap();
        let mut prev = -1.0;
        for i in 0..=300 {
            let v = p.eval(3.0 + 0.01 * i as f64).unwrap();
            assert!(v > prev);
            prev = v;
        }
        assert!(p.eval(6.5).is_err());
    }

    #[test]
    fn l2_examples() {
        let g: Vec<f64> = (0..1001).map(|i| i as f64 / 1000.0).collect();
        let one = vec![1.0; 1001];
        assert!((l2_norm(&one, &g).unwrap() - 1.0).abs() < 1e-14);
        let g: Vec<f64> = (0..10001).map(|i| std::f64::consts::PI * i as f64 / 10000.0).collect();
        let s: Vec<f64> = g.iter().map(|x| x.sin()).collect();
        assert!((l2_norm(&s, &g).unwrap() - std::f64::consts::FRAC_PI_2.sqrt()).abs() < 1e-6);
        assert!(l2_norm(&s[..10], &g).is_err());
    }

    #[test]
    fn l2_second_order() {
        // exp(x) cos(3x) on [0, 2]; exact integral of the square in closed form
        let f = |x: f64| x.exp() * (3.0 * x).cos();
        let exact = {
            let e = |x: f64| (2.0 * x).exp() * (0.25 + (2.0 * (6.0 * x).cos() + 6.0 * (6.0 * x).sin()) / 80.0);
            (e(2.0) - e(0.0)).sqrt()
        };
        let err = |n: usize| {
            let g: Vec<f64> = (0..=n).map(|i| 2.0 * i as f64 / n as f64).collect();
            let s: Vec<f64> = g.iter().map(|&x| f(x)).collect();
            (l2_norm(&s, &g).unwrap() - exact).abs()
        };
        let (e1, e2) = (err(200), err(400));
        let order = (e1 / e2).log2();
        assert!(order > 1.8 && order < 2.2, "order {order}");
    }
}
