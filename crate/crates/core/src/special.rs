//! Bessel functions of order zero.
//!
//! `J0`, `Y0`: power series for `z <= 8`, Miller backward recurrence with
//! the Neumann series for `Y0` on `(8, 25)`, Hankel asymptotic expansion
//! for `z >= 25`. `I0`, `K0` are used by the singular-function patches on
//! the non-oscillatory side of a turning point.

use std::f64::consts::{FRAC_PI_4, PI};

use thiserror::Error;

use crate::dd::{self, DD};
use crate::quadrature::adaptive_gk;

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

pub const SERIES_SWITCH: f64 = 8.0;
pub const ASYMPTOTIC_SWITCH: f64 = 25.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecialError {
    #[error("J0 needs z >= 0, got {0}")]
    NegativeArgument(f64),
    #[error("Y0 and K0 need z > 0, got {0}")]
    NonPositiveArgument(f64),
}

/// Value with a rough error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselEval {
    pub value: f64,
    pub estimated_error: f64,
}

/// `sum_k (-1)^k q^k/(k!)^2` and `sum_k (-1)^{k+1} H_k q^k/(k!)^2`,
/// `q = z^2/4`, summed in double-double so that cancellation among the
/// terms does not show up in the rounded result.
fn j0_y0_series(z: f64) -> (DD, DD) {
    let q = DD::from(z) * DD::from(z) * DD::from(0.25);
    let mut term = DD::ONE;
    let mut j = DD::ONE;
    let mut s = DD::ZERO;
    let mut h = DD::ZERO;
    for k in 1..200 {
        let kf = k as f64;
        term = -(term * q) / DD::from(kf * kf);
        h += DD::ONE / DD::from(kf);
        j += term;
        s -= h * term;
        if term.hi.abs() * (h.hi + 1.0) < 1e-34 {
            break;
        }
    }
    (j, s)
}

/// Miller backward recurrence: returns `(J0, sum_{k>=1} (-1)^k J_{2k}/k)`.
fn miller(z: f64) -> (f64, f64) {
    let start = 2 * ((z as usize + 40) / 2 + 20);
    let mut jp1 = 0.0;
    let mut j = 1e-30;
    let mut norm = 0.0;
    let mut neumann = 0.0;
    let mut j0 = 0.0;
    for k in (1..=start).rev() {
        let jm1 = 2.0 * k as f64 / z * j - jp1;
        jp1 = j;
        j = jm1;
        let idx = k - 1;
        if idx == 0 {
            j0 = j;
            norm += j;
        } else if idx % 2 == 0 {
            norm += 2.0 * j;
            let half = (idx / 2) as f64;
            let sign = if (idx / 2) % 2 == 0 { 1.0 } else { -1.0 };
            neumann += sign * j / half;
        }
        if j.abs() > 1e250 {
            let r = 1e-250;
            j *= r;
            jp1 *= r;
            norm *= r;
            neumann *= r;
        }
    }
    (j0 / norm, neumann / norm)
}

/// Hankel expansion: `(P, Q)` with `J0 = sqrt(2/(pi z)) (P cos x - Q sin x)`.
fn hankel_pq(z: f64) -> (f64, f64) {
    let mut p = 1.0;
    let mut q = 0.0;
    let mut t: f64 = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        t *= -odd * odd / (8.0 * k as f64 * z);
        if t.abs() > last || t.abs() < 1e-18 {
            break;
        }
        last = t.abs();
        // t_k carries (mu - (2k-1)^2) products; signs alternate within P and Q
        match k % 4 {
            0 => p += t,
            1 => q += t,
            2 => p -= t,
            _ => q -= t,
        }
    }
    (p, q)
}

pub fn bessel_j0_eval(z: f64) -> Result<BesselEval, SpecialError> {
    if !(z >= 0.0) {
        return Err(SpecialError::NegativeArgument(z));
    }
    if z <= SERIES_SWITCH {
        let (j, _) = j0_y0_series(z);
        Ok(BesselEval { value: j.to_f64(), estimated_error: f64::EPSILON * j.hi.abs() })
    } else if z < ASYMPTOTIC_SWITCH {
        let (j, _) = miller(z);
        Ok(BesselEval { value: j, estimated_error: 1e-15 })
    } else {
        let (p, q) = hankel_pq(z);
        let (s, c) = (z - FRAC_PI_4).sin_cos();
        let a = (2.0 / (PI * z)).sqrt();
        Ok(BesselEval { value: a * (p * c - q * s), estimated_error: 1e-15 * a })
    }
}

pub fn bessel_y0_eval(z: f64) -> Result<BesselEval, SpecialError> {
    if !(z > 0.0) {
        return Err(SpecialError::NonPositiveArgument(z));
    }
    let lg = (0.5 * z).ln() + EULER_GAMMA;
    if z <= SERIES_SWITCH {
        let (j, s) = j0_y0_series(z);
        let two_over_pi = DD::from(2.0) / dd::PI;
        let v = (j.mul_f64(lg) + s) * two_over_pi;
        Ok(BesselEval { value: v.to_f64(), estimated_error: f64::EPSILON * (1.0 + v.hi.abs()) })
    } else if z < ASYMPTOTIC_SWITCH {
        let (j, n) = miller(z);
        Ok(BesselEval { value: 2.0 / PI * (lg * j - 2.0 * n), estimated_error: 1e-15 * (1.0 + lg.abs()) })
    } else {
        let (p, q) = hankel_pq(z);
        let (s, c) = (z - FRAC_PI_4).sin_cos();
        let a = (2.0 / (PI * z)).sqrt();
        Ok(BesselEval { value: a * (p * s + q * c), estimated_error: 1e-15 * a })
    }
}

pub fn bessel_j0(z: f64) -> Result<f64, SpecialError> {
    bessel_j0_eval(z).map(|e| e.value)
}

pub fn bessel_y0(z: f64) -> Result<f64, SpecialError> {
    bessel_y0_eval(z).map(|e| e.value)
}

/// Modified Bessel `I0` by its positive power series.
pub fn bessel_i0(z: f64) -> f64 {
    let q = 0.25 * z * z;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..500 {
        let kf = k as f64;
        term *= q / (kf * kf);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

/// Modified Bessel `K0`: series for `z <= 2`, otherwise
/// `e^{-z} int_0^inf exp(-z (cosh t - 1)) dt`.
pub fn bessel_k0(z: f64) -> Result<f64, SpecialError> {
    if !(z > 0.0) {
        return Err(SpecialError::NonPositiveArgument(z));
    }
    if z <= 2.0 {
        let q = 0.25 * z * z;
        let mut term = 1.0;
        let mut h = 0.0;
        let mut i0 = 1.0;
        let mut s = 0.0;
        for k in 1..100 {
            let kf = k as f64;
            term *= q / (kf * kf);
            h += 1.0 / kf;
            i0 += term;
            s += h * term;
            if term * h < 1e-18 {
                break;
            }
        }
        Ok(-((0.5 * z).ln() + EULER_GAMMA) * i0 + s)
    } else {
        let upper = (1.0 + 45.0 / z).acosh();
        let v = adaptive_gk(|t| (-z * (t.cosh() - 1.0)).exp(), 0.0, upper, 1e-15)
            .expect("smooth bounded integrand");
        Ok(v * (-z).exp())
    }
}

/// `sqrt(2/(pi z))`, the envelope of `J0` and `Y0` for large `z`.
pub fn envelope(z: f64) -> f64 {
    (2.0 / (PI * z)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dd::DD;

    /// Power series summed in double-double. Returns `(J0, S)` where
    /// `Y0 = (2/pi)((ln(z/2) + gamma) J0 + S)`.
    fn oracle(z: f64) -> (f64, f64) {
        let q = DD::from(z) * DD::from(z) * DD::from(0.25);
        let mut term = DD::ONE;
        let mut j = DD::ONE;
        let mut s = DD::ZERO;
        let mut h = DD::ZERO;
        for k in 1..400 {
            let kf = DD::from(k as f64);
            term = -(term * q) / (kf * kf);
            h += DD::ONE / kf;
            j += term;
            s -= h * term;
            if term.hi.abs() * (h.hi + 1.0) < 1e-40 {
                break;
            }
        }
        (j.to_f64(), s.to_f64())
    }

    fn oracle_y0(z: f64) -> f64 {
        let (j, s) = oracle(z);
        2.0 / PI * (((0.5 * z).ln() + EULER_GAMMA) * j + s)
    }

    /// Error relative to the local size of the function: near zeros of an
    /// oscillating function the scale is its envelope.
    fn scaled_err(got: f64, want: f64, z: f64) -> f64 {
        (got - want).abs() / want.abs().max(envelope(z).min(1.0))
    }

    #[test]
    fn j0_zero_and_first_root() {
        assert_eq!(bessel_j0(0.0).unwrap(), 1.0);
        assert!(bessel_j0(2.404825557695773).unwrap().abs() < 1e-12);
        assert!(bessel_j0(-1.0).is_err());
        assert!(bessel_y0(0.0).is_err());
    }

    #[test]
    fn first_root_by_bisection_on_oracle() {
        let (mut a, mut b) = (2.0, 3.0);
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if oracle(m).0 > 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        assert!((a - 2.404825557695773).abs() < 1e-14);
    }

    #[test]
    fn against_dd_series_oracle() {
        // beyond z ~ 30 the double-double sum itself loses digits to
        // cancellation; the mpmath fixture covers that range
        let mut z = 1e-8;
        while z <= 30.0 {
            let j = bessel_j0(z).unwrap();
            let y = bessel_y0(z).unwrap();
            let (jo, _) = oracle(z);
            assert!(scaled_err(j, jo, z) < 1e-12, "J0({z}) {j} vs {jo}");
            assert!(scaled_err(y, oracle_y0(z), z) < 1e-12, "Y0({z})");
            z *= 1.013;
        }
        for i in 0..=300 {
            let z = 0.1 * i as f64 + 1e-8;
            assert!(scaled_err(bessel_j0(z).unwrap(), oracle(z).0, z) < 1e-12, "J0({z})");
            assert!(scaled_err(bessel_y0(z).unwrap(), oracle_y0(z), z) < 1e-12, "Y0({z})");
        }
    }

    #[test]
    fn y0_small_argument_log_form() {
        let z = 1e-6;
        let d = bessel_y0(z).unwrap() - 2.0 / PI * ((0.5 * z).ln() + EULER_GAMMA);
        assert!(d.abs() < 1e-10);
    }

    #[test]
    fn large_argument_forms() {
        let z: f64 = 50.0;
        let a = (2.0 / (PI * z)).sqrt();
        let bound = 2.0 / (z * z.sqrt());
        assert!((bessel_j0(z).unwrap() - a * (z - FRAC_PI_4).cos()).abs() <= bound);
        assert!((bessel_y0(z).unwrap() - a * (z - FRAC_PI_4).sin()).abs() <= bound);
    }

    #[test]
    fn switch_points_continuous() {
        for &zs in &[SERIES_SWITCH, ASYMPTOTIC_SWITCH] {
            for d in [-1e-9, 1e-9, 1e-6] {
                let z = zs + d;
                let lo = bessel_j0(zs - 1e-12).unwrap();
                let hi = bessel_j0(zs + 1e-12).unwrap();
                assert!((lo - hi).abs() < 1e-11, "J0 jump at {zs}");
                let lo = bessel_y0(zs - 1e-12).unwrap();
                let hi = bessel_y0(zs + 1e-12).unwrap();
                assert!((lo - hi).abs() < 1e-11, "Y0 jump at {zs}");
                assert!(scaled_err(bessel_j0(z).unwrap(), oracle(z).0, z) < 1e-11);
            }
        }
        // both branches evaluated at the same points around the first switch
        for i in 0..20 {
            let z = 7.5 + 0.05 * i as f64;
            let (series, _) = j0_y0_series(z);
            let (rec, _) = miller(z);
            assert!((series.to_f64() - rec).abs() < 1e-11, "z={z}");
        }
        for i in 0..20 {
            let z = 24.0 + 0.1 * i as f64;
            let (rec, _) = miller(z);
            let (p, q) = hankel_pq(z);
            let (s, c) = (z - FRAC_PI_4).sin_cos();
            let asym = envelope(z) * (p * c - q * s);
            assert!((rec - asym).abs() < 1e-11, "z={z}");
        }
    }

    #[test]
    fn wronskian() {
        // fourth-order central differences
        let d = |f: fn(f64) -> Result<f64, SpecialError>, z: f64| {
            let h = 1e-3;
            let g = |t: f64| f(t).unwrap();
            (8.0 * (g(z + h) - g(z - h)) - (g(z + 2.0 * h) - g(z - 2.0 * h))) / (12.0 * h)
        };
        for z in [0.5, 5.0, 50.0] {
            let j = bessel_j0(z).unwrap();
            let y = bessel_y0(z).unwrap();
            let dj = d(bessel_j0, z);
            let dy = d(bessel_y0, z);
            let w = j * dy - dj * y;
            let want = 2.0 / (PI * z);
            assert!((w / want - 1.0).abs() < 1e-10, "z={z} w={w}");
        }
    }

    #[test]
    fn single_sign_change_between_zeros() {
        let mut prev = bessel_j0(0.0).unwrap();
        let mut zeros = vec![];
        let mut z = 0.0;
        while z < 50.0 {
            z += 1e-3;
            let v = bessel_j0(z).unwrap();
            if v.signum() != prev.signum() {
                zeros.push(z);
            }
            prev = v;
        }
        // consecutive zeros of J0 are spaced by about pi
        assert_eq!(zeros.len(), 16);
        assert!(zeros.windows(2).all(|w| (w[1] - w[0] - PI).abs() < 0.1));
    }

    #[test]
    fn modified_functions() {
        // I0(1), K0(1), K0(3), K0(0.1) from standard tables
        assert!((bessel_i0(1.0) - 1.2660658777520082).abs() < 1e-15);
        assert!((bessel_k0(1.0).unwrap() - 0.42102443824070834).abs() < 1e-14);
        assert!((bessel_k0(3.0).unwrap() / 0.03473950438627925 - 1.0).abs() < 1e-12);
        assert!((bessel_k0(0.1).unwrap() - 2.4270690247020164).abs() < 1e-13);
        // both sides of the series/integral switch against K0(2)
        let lo = bessel_k0(2.0).unwrap();
        let hi = bessel_k0(2.0f64.next_up()).unwrap();
        assert!((lo / 0.11389387274953344 - 1.0).abs() < 1e-13);
        assert!((hi / 0.11389387274953344 - 1.0).abs() < 1e-13);
        // Wronskian I0 K0' - I0' K0 = -1/z; I0' = I1, K0' = -K1
        let z = 2.5;
        let h = 1e-5;
        let di = (bessel_i0(z + h) - bessel_i0(z - h)) / (2.0 * h);
        let dk = (bessel_k0(z + h).unwrap() - bessel_k0(z - h).unwrap()) / (2.0 * h);
        let w = bessel_i0(z) * dk - di * bessel_k0(z).unwrap();
        assert!((w * z + 1.0).abs() < 1e-8);
    }

    // independent high-precision table (mpmath)
    fn rows() -> Vec<[f64; 5]> {
        let text = include_str!("../data/bessel_mpmath.csv");
        text.lines()
            .filter(|l| !l.starts_with('#') && !l.starts_with('z'))
            .map(|l| {
                let v: Vec<f64> = l.split(',').map(|t| t.trim().parse().unwrap()).collect();
                [v[0], v[1], v[2], v[3], v[4]]
            })
            .collect()
    }

    #[test]
    fn oscillatory_pair_matches_table() {
        let rows = rows();
        assert!(rows.len() > 200);
        for [z, j, y, _, _] in rows {
            let scale = |w: f64| w.abs().max(envelope(z).min(1.0));
            let ej = (bessel_j0(z).unwrap() - j).abs() / scale(j);
            let ey = (bessel_y0(z).unwrap() - y).abs() / scale(y);
            assert!(ej < 1e-12, "J0({z}) err {ej:e}");
            assert!(ey < 1e-12, "Y0({z}) err {ey:e}");
        }
    }

    #[test]
    fn modified_pair_matches_table() {
        for [z, _, _, i, k] in rows() {
            assert!((bessel_i0(z) / i - 1.0).abs() < 1e-13, "I0({z})");
            assert!((bessel_k0(z).unwrap() / k - 1.0).abs() < 1e-11, "K0({z})");
        }
    }
}
