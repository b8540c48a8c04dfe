//! Piecewise asymptotic approximants of the singular functions for
//! `sigma_n -> 0`.
//!
//! `g_n` on `[a1, a3]` is assembled from, left to right:
//!
//! 1. a `J0` patch at `a1`,
//! 2. the oscillatory WKB branch on `(a1, a2)`,
//! 3. a `J0`/`Y0` patch at `a2-`, fitted to the WKB branch,
//! 4. its continuation to `a2+` (`Y0 -> -(2/pi) K0`),
//! 5. the decaying WKB branch on `(a2, a3)`,
//! 6. a patch at `a3-` where `J0(2 sqrt t)` with `t < 0` is `I0`.
//!
//! `f_n` on `[a2, a4]` is the mirror image: the same construction on the
//! reflected configuration, evaluated at `-x`.

use std::f64::consts::{FRAC_PI_4, PI};

use serde::Serialize;
use thiserror::Error;

use crate::asymptotics::AsymptoticLaws;
use crate::geometry::{eval_p, eval_p_prime, EndpointConfig};
use crate::quadrature::{adaptive_gk, PhaseIntegral, QuadratureError, Radicand};
use crate::special::{bessel_i0, bessel_j0, bessel_k0, bessel_y0};

/// Window `[eps^hi, eps^lo] * length` searched for transition points.
pub const WINDOW_EXPONENTS: (f64, f64) = (1.4, 0.7);
const CANDIDATES: usize = 48;
const MAX_MISMATCH: f64 = 0.2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BuilderError {
    #[error("relative mismatch {mismatch:.3} at transition x = {x} exceeds {MAX_MISMATCH}")]
    MatchFailure { x: f64, mismatch: f64 },
    #[error("x = {x} outside [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },
    #[error("index n must be >= 1")]
    InvalidIndex,
    #[error("singular 2x2 system while fitting the patch at a2")]
    SingularFit,
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Left,
    Right,
}

/// `coef_j0 J0(2 sqrt t) + coef_y0 Y0(2 sqrt t)`, `t = lambda (a - x)/P'(a)`.
/// For `t < 0` the continuation `I0(2 sqrt|t|)`, `-(2/pi) K0(2 sqrt|t|)` is used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BesselPatch {
    pub endpoint: usize,
    pub side: Side,
    pub coef_j0: f64,
    pub coef_y0: f64,
    pub lambda: f64,
    a: f64,
    p_prime: f64,
}

impl BesselPatch {
    fn new(cfg: &EndpointConfig, endpoint: usize, side: Side, coef_j0: f64, coef_y0: f64, lambda: f64) -> Self {
        let a = cfg.endpoint(endpoint);
        Self { endpoint, side, coef_j0, coef_y0, lambda, a, p_prime: eval_p_prime(cfg, a) }
    }

    pub fn local_t(&self, x: f64) -> f64 {
        self.lambda * (self.a - x) / self.p_prime
    }

    /// The two basis functions at `x`.
    fn basis(&self, x: f64) -> (f64, f64) {
        let t = self.local_t(x);
        if t > 0.0 {
            let z = 2.0 * t.sqrt();
            (bessel_j0(z).expect("z > 0"), bessel_y0(z).expect("z > 0"))
        } else if t < 0.0 {
            let z = 2.0 * (-t).sqrt();
            (bessel_i0(z), -2.0 / PI * bessel_k0(z).expect("z > 0"))
        } else {
            (1.0, f64::NEG_INFINITY)
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (j, y) = self.basis(x);
        let yv = if self.coef_y0 == 0.0 { 0.0 } else { self.coef_y0 * y };
        self.coef_j0 * j + yv
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum WkbMode {
    /// `(-P)^{-1/4} [cos_coef cos(phi/eps - pi/4) + sin_coef sin(phi/eps - pi/4)]`
    Oscillatory { cos_coef: f64, sin_coef: f64 },
    /// `amplitude P^{-1/4} exp(-phi/eps)`
    Decaying { amplitude: f64 },
}

#[derive(Debug, Clone)]
pub struct WkbBranch {
    pub interval: (usize, usize),
    pub anchor: usize,
    pub mode: WkbMode,
    pub epsilon: f64,
    cfg: EndpointConfig,
    phase: PhaseIntegral,
}

impl WkbBranch {
    fn new(cfg: &EndpointConfig, interval: (usize, usize), anchor: usize, mode: WkbMode, epsilon: f64, tol: f64) -> Result<Self, QuadratureError> {
        let sign = Radicand::for_interval(interval.0);
        let phase = PhaseIntegral::new(cfg, anchor, anchor == interval.0, sign, tol)?;
        Ok(Self { interval, anchor, mode, epsilon, cfg: *cfg, phase })
    }

    pub fn phase(&self, x: f64) -> Result<f64, QuadratureError> {
        self.phase.eval(x)
    }

    pub fn eval(&self, x: f64) -> Result<f64, QuadratureError> {
        let p = eval_p(&self.cfg, x);
        let phi = self.phase.eval(x)?;
        Ok(match self.mode {
            WkbMode::Oscillatory { cos_coef, sin_coef } => {
                let arg = phi / self.epsilon - FRAC_PI_4;
                (-p).powf(-0.25) * (cos_coef * arg.cos() + sin_coef * arg.sin())
            }
            WkbMode::Decaying { amplitude } => amplitude * p.powf(-0.25) * (-phi / self.epsilon).exp(),
        })
    }
}

#[derive(Debug, Clone)]
pub enum PieceKind {
    Bessel(BesselPatch),
    Wkb(WkbBranch),
}

#[derive(Debug, Clone)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub kind: PieceKind,
}

impl Piece {
    fn eval(&self, x: f64) -> Result<f64, QuadratureError> {
        match &self.kind {
            PieceKind::Bessel(b) => Ok(b.eval(x)),
            PieceKind::Wkb(w) => w.eval(x),
        }
    }
}

/// Metadata for one transition point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Transition {
    pub x: f64,
    pub mismatch: f64,
}

#[derive(Debug, Clone)]
pub struct PiecewiseSingularFunction {
    pub n: usize,
    pub pieces: Vec<Piece>,
    pub transitions: Vec<Transition>,
    /// Multiplies the raw construction; `sqrt(2/K-)`.
    pub normalization: f64,
    pub window_exponents: (f64, f64),
    /// Evaluate at `-x` (used for `f_n`).
    reflected: bool,
}

impl PiecewiseSingularFunction {
    pub fn transition_points(&self) -> Vec<f64> {
        let s = if self.reflected { -1.0 } else { 1.0 };
        let mut v: Vec<f64> = self.transitions.iter().map(|t| s * t.x).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn domain(&self) -> (f64, f64) {
        let (lo, hi) = (self.pieces[0].lo, self.pieces[self.pieces.len() - 1].hi);
        if self.reflected {
            (-hi, -lo)
        } else {
            (lo, hi)
        }
    }

    pub fn max_mismatch(&self) -> f64 {
        self.transitions.iter().map(|t| t.mismatch).fold(0.0, f64::max)
    }

    /// Un-normalized value in the internal coordinate.
    fn raw(&self, y: f64, prefer_right: bool) -> Result<f64, BuilderError> {
        let (lo, hi) = (self.pieces[0].lo, self.pieces[self.pieces.len() - 1].hi);
        if !(y >= lo && y <= hi) {
            return Err(BuilderError::OutOfDomain { x: y, lo, hi });
        }
        let piece = if prefer_right {
            self.pieces.iter().rev().find(|p| y >= p.lo)
        } else {
            self.pieces.iter().find(|p| y <= p.hi)
        }
        .expect("pieces tile the domain");
        Ok(piece.eval(y)?)
    }

    /// Value at `x`; at a transition point the piece on the left is used.
    pub fn evaluate(&self, x: f64) -> Result<f64, BuilderError> {
        let v = if self.reflected { self.raw(-x, true) } else { self.raw(x, false) };
        v.map(|r| r * self.normalization).map_err(|e| match e {
            BuilderError::OutOfDomain { .. } => {
                let (lo, hi) = self.domain();
                BuilderError::OutOfDomain { x, lo, hi }
            }
            other => other,
        })
    }

    pub fn sample(&self, xs: &[f64]) -> Result<Vec<f64>, BuilderError> {
        xs.iter().map(|&x| self.evaluate(x)).collect()
    }

    /// `int raw^2` over the whole domain, piece by piece.
    fn raw_norm_sq(&self, tol: f64) -> Result<f64, BuilderError> {
        let mut total = 0.0;
        for p in &self.pieces {
            let mut err = None;
            let v = adaptive_gk(
                |y| match p.eval(y) {
                    Ok(v) => v * v,
                    Err(e) => {
                        err.get_or_insert(e);
                        0.0
                    }
                },
                p.lo,
                p.hi,
                tol,
            )?;
            if let Some(e) = err {
                return Err(e.into());
            }
            total += v;
        }
        Ok(total)
    }

    /// Squared norm of the normalized function over `[lo, hi]` intersected
    /// with the domain.
    pub fn norm_sq_on(&self, lo: f64, hi: f64, tol: f64) -> Result<f64, BuilderError> {
        let (lo, hi) = if self.reflected { (-hi, -lo) } else { (lo, hi) };
        let mut total = 0.0;
        for p in &self.pieces {
            let (a, b) = (p.lo.max(lo), p.hi.min(hi));
            if a >= b {
                continue;
            }
            total += adaptive_gk(|y| p.eval(y).map(|v| v * v).unwrap_or(f64::NAN), a, b, tol)?;
        }
        Ok(total * self.normalization * self.normalization)
    }
}

fn sign_pow(n: usize) -> f64 {
    if n.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn rel_mismatch(a: f64, b: f64) -> f64 {
    let m = a.abs().max(b.abs());
    if m == 0.0 {
        0.0
    } else {
        (a - b).abs() / m
    }
}

/// Distances from an endpoint spanning the overlap window, ordered from
/// the WKB side (largest) inward.
fn window(eps: f64, length: f64) -> Vec<f64> {
    let (hi_exp, lo_exp) = WINDOW_EXPONENTS;
    let (dmin, dmax) = (eps.powf(hi_exp) * length, eps.powf(lo_exp) * length);
    let r = (dmin / dmax).ln();
    (0..CANDIDATES).map(|k| dmax * (r * k as f64 / (CANDIDATES - 1) as f64).exp()).collect()
}

/// Point of smallest relative mismatch between two pieces; ties keep the
/// candidate nearest the WKB side.
fn best_transition<F, G>(a: f64, dir: f64, ds: &[f64], mut f: F, mut g: G) -> Result<Transition, BuilderError>
where
    F: FnMut(f64) -> Result<f64, BuilderError>,
    G: FnMut(f64) -> Result<f64, BuilderError>,
{
    let mut best = Transition { x: f64::NAN, mismatch: f64::INFINITY };
    for &d in ds {
        let x = a + dir * d;
        let m = rel_mismatch(f(x)?, g(x)?);
        if m < best.mismatch {
            best = Transition { x, mismatch: m };
        }
    }
    if best.mismatch > MAX_MISMATCH {
        return Err(BuilderError::MatchFailure { x: best.x, mismatch: best.mismatch });
    }
    Ok(best)
}

/// Raw `g` pieces on `[a1, a3]` of `cfg` for quantum number `n`.
fn build_raw(cfg: &EndpointConfig, laws: &AsymptoticLaws, n: usize, tol: f64) -> Result<(Vec<Piece>, Vec<Transition>), BuilderError> {
    if n == 0 {
        return Err(BuilderError::InvalidIndex);
    }
    let eps = laws.epsilon_n(n);
    let lambda = 1.0 / (eps * eps);
    let (a1, a2, a3) = (cfg.a1(), cfg.a2(), cfg.a3());
    let k_plus = laws.constants.k_plus;

    // 1-2: J0 patch at a1 and the oscillatory branch
    let b1 = (PI / (-eps * eval_p_prime(cfg, a1))).sqrt();
    let p1 = BesselPatch::new(cfg, 0, Side::Right, b1, 0.0, lambda);
    let osc = WkbBranch::new(cfg, (0, 1), 0, WkbMode::Oscillatory { cos_coef: 1.0, sin_coef: 0.0 }, eps, tol)?;
    let ds = window(eps, a2 - a1);
    let t1 = best_transition(a1, 1.0, &ds, |x| Ok(p1.eval(x)), |x| Ok(osc.eval(x)?))?;

    // 3: J0/Y0 patch at a2-, two-point fit to the oscillatory branch. The
    // pair is taken from the window so that the 2x2 system is best
    // conditioned; fixed points can fall in phase with each other.
    let probe = BesselPatch::new(cfg, 1, Side::Left, 1.0, 1.0, lambda);
    let rows: Vec<(f64, f64)> = ds.iter().map(|d| probe.basis(a2 - d)).collect();
    let mut pair = (0, 0, 0.0);
    for i in 0..CANDIDATES / 2 {
        for k in CANDIDATES / 2..CANDIDATES {
            let (ja, ya) = rows[i];
            let (jb, yb) = rows[k];
            let c = (ja * yb - jb * ya).abs() / (ja.hypot(ya) * jb.hypot(yb));
            if c > pair.2 {
                pair = (i, k, c);
            }
        }
    }
    if pair.2 < 1e-8 {
        return Err(BuilderError::SingularFit);
    }
    let (xa, xb) = (a2 - ds[pair.0], a2 - ds[pair.1]);
    let ((ja, ya), (jb, yb)) = (rows[pair.0], rows[pair.1]);
    let (wa, wb) = (osc.eval(xa)?, osc.eval(xb)?);
    let det = ja * yb - jb * ya;
    let b2 = (wa * yb - wb * ya) / det;
    let c2 = (ja * wb - jb * wa) / det;
    let p2 = BesselPatch::new(cfg, 1, Side::Left, b2, c2, lambda);
    let t2 = best_transition(a2, -1.0, &ds, |x| Ok(p2.eval(x)), |x| Ok(osc.eval(x)?))?;

    // 4: continuation across a2 of the Y0 part; the growing I0 part of b2
    // is exponentially small in the exact solution and is not carried over
    let p3 = BesselPatch::new(cfg, 1, Side::Right, 0.0, c2, lambda);
    let delta = 1e-12 * (a3 - a1);
    let t_a2 = Transition { x: a2, mismatch: rel_mismatch(p2.eval(a2 - delta), p3.eval(a2 + delta)) };

    // 5: decaying branch, amplitude matched at the log-midpoint of the window
    let ds_right = window(eps, a3 - a2);
    let unit = WkbBranch::new(cfg, (1, 2), 1, WkbMode::Decaying { amplitude: 1.0 }, eps, tol)?;
    let x3 = a2 + ds_right[CANDIDATES / 2];
    let amplitude = p3.eval(x3) / unit.eval(x3)?;
    let decay = WkbBranch::new(cfg, (1, 2), 1, WkbMode::Decaying { amplitude }, eps, tol)?;
    let t3 = Transition { x: x3, mismatch: rel_mismatch(p3.eval(x3), decay.eval(x3)?) };

    // 6: patch at a3-; J0 of negative t, magnitude set by the decay over (a2, a3)
    let pp3 = eval_p_prime(cfg, a3);
    let b_a3 = amplitude * 2.0 * (PI / (-eps * pp3)).sqrt() * (-k_plus / eps).exp();
    let p4 = BesselPatch::new(cfg, 2, Side::Left, b_a3, 0.0, lambda);
    let t4 = best_transition(a3, -1.0, &ds_right, |x| Ok(p4.eval(x)), |x| Ok(decay.eval(x)?))?;

    let pieces = vec![
        Piece { lo: a1, hi: t1.x, kind: PieceKind::Bessel(p1) },
        Piece { lo: t1.x, hi: t2.x, kind: PieceKind::Wkb(osc) },
        Piece { lo: t2.x, hi: a2, kind: PieceKind::Bessel(p2) },
        Piece { lo: a2, hi: t3.x, kind: PieceKind::Bessel(p3) },
        Piece { lo: t3.x, hi: t4.x, kind: PieceKind::Wkb(decay) },
        Piece { lo: t4.x, hi: a3, kind: PieceKind::Bessel(p4) },
    ];
    Ok((pieces, vec![t1, t2, t_a2, t3, t4]))
}

fn assemble(
    n: usize,
    pieces: Vec<Piece>,
    transitions: Vec<Transition>,
    k_minus: f64,
    reflected: bool,
) -> PiecewiseSingularFunction {
    let mut f = PiecewiseSingularFunction {
        n,
        pieces,
        transitions,
        normalization: (2.0 / k_minus).sqrt(),
        window_exponents: WINDOW_EXPONENTS,
        reflected,
    };
    // positive at the first WKB antinode next to the outer endpoint
    if let PieceKind::Wkb(w) = &f.pieces[1].kind {
        let target = w.epsilon * FRAC_PI_4;
        let (mut lo, mut hi) = (f.pieces[1].lo, f.pieces[1].hi);
        if w.phase(lo).is_ok_and(|p| p < target) {
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if w.phase(mid).is_ok_and(|p| p < target) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        }
        if w.eval(lo).is_ok_and(|v| v < 0.0) {
            f.normalization = -f.normalization;
        }
    }
    f
}

/// Approximant of `g_n` on `[a1, a3]`, normalized to unit `L^2` norm.
pub fn build_g(cfg: &EndpointConfig, laws: &AsymptoticLaws, n: usize) -> Result<PiecewiseSingularFunction, BuilderError> {
    let (pieces, transitions) = build_raw(cfg, laws, n, laws.constants.tol)?;
    Ok(assemble(n, pieces, transitions, laws.constants.k_minus, false))
}

/// Approximant of `f_n` on `[a2, a4]`: oscillatory on `(a3, a4)` anchored
/// at `a4`, `Y0` behaviour at `a3+`, exponentially small on `(a2, a3)`.
pub fn build_f(cfg: &EndpointConfig, laws: &AsymptoticLaws, n: usize) -> Result<PiecewiseSingularFunction, BuilderError> {
    let (pieces, transitions) = build_raw(&cfg.reflected(), laws, n, laws.constants.tol)?;
    Ok(assemble(n, pieces, transitions, laws.constants.k_minus, true))
}

/// Coefficients of the `Y0` term of the patch next to the inner turning
/// point (`a2` for `g`, `a3` for `f`), before normalization.
pub fn inner_y0_coefficient(f: &PiecewiseSingularFunction) -> f64 {
    match &f.pieces[2].kind {
        PieceKind::Bessel(b) => b.coef_y0,
        PieceKind::Wkb(_) => unreachable!("piece 2 is the inner patch"),
    }
}

pub fn inner_j0_coefficient(f: &PiecewiseSingularFunction) -> f64 {
    match &f.pieces[2].kind {
        PieceKind::Bessel(b) => b.coef_j0,
        PieceKind::Wkb(_) => unreachable!("piece 2 is the inner patch"),
    }
}

/// `||g_raw||_{L2[a1,a3]} / sqrt(K-/2)`.
pub fn verify_normalization(cfg: &EndpointConfig, laws: &AsymptoticLaws, n: usize) -> Result<f64, BuilderError> {
    let g = build_g(cfg, laws, n)?;
    let raw = g.raw_norm_sq(1e-10)?;
    Ok(raw.sqrt() / (0.5 * laws.constants.k_minus).sqrt())
}

/// Leading coefficients at `a3` for the ratio estimate of `sigma_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmaCoefficients {
    /// `b3`, the jump of `g` at `a3`.
    pub jump: f64,
    /// Coefficient of `ln|x - a3|` in `Hg`, `-b3/pi`.
    pub hg_log: f64,
    /// Coefficient of `ln|x - a3|` in the normalized `f`.
    pub f_log: f64,
    pub sigma: f64,
}

pub fn sigma_coefficients(cfg: &EndpointConfig, laws: &AsymptoticLaws, n: usize) -> SigmaCoefficients {
    let eps = laws.epsilon_n(n);
    let km = laws.constants.k_minus;
    let kp = laws.constants.k_plus;
    let neg_pp3 = -eval_p_prime(cfg, cfg.a3());
    let s = -sign_pow(n);
    let jump = s * (PI / (2.0 * km * eps)).sqrt() * (kp / eps).exp() / neg_pp3.sqrt();
    let hg_log = -jump / PI;
    let f_log = s / PI * (2.0 * PI / (eps * neg_pp3 * km)).sqrt();
    SigmaCoefficients { jump, hg_log, f_log, sigma: -f_log / hg_log }
}

/// `sigma = -f(a3+)/(Hg)(a3+)` from the logarithmic coefficients.
pub fn sigma_from_functions(cfg: &EndpointConfig, laws: &AsymptoticLaws, n: usize) -> f64 {
    sigma_coefficients(cfg, laws, n).sigma
}

/// Whitespace-delimited `x value [|value|]` rows.
pub fn plot_rows(xs: &[f64], values: &[f64], with_abs: bool) -> String {
    let mut s = String::new();
    for (x, v) in xs.iter().zip(values) {
        if with_abs {
            s.push_str(&format!("{x:.16e} {v:.16e} {:.16e}\n", v.abs()));
        } else {
            s.push_str(&format!("{x:.16e} {v:.16e}\n"));
        }
    }
    s
}
