//! Closed-form asymptotic laws for the spectrum.

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::quadrature::SpectralConstants;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AsymptoticsError {
    #[error("1 - 4 exp(-2 n pi K-/K+) <= 0 at n = {n}; smallest valid n is {smallest_valid}")]
    DomainError { n: usize, smallest_valid: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticLaws {
    pub constants: SpectralConstants,
    /// `pi K+ / K-`
    pub decay_rate: f64,
    /// `2 pi K- / K+`
    pub near_one_rate: f64,
    /// Validity exponent carried as metadata; not used in point values.
    pub delta: f64,
}

impl AsymptoticLaws {
    pub fn new(constants: SpectralConstants) -> Self {
        Self {
            constants,
            decay_rate: PI * constants.k_plus / constants.k_minus,
            near_one_rate: 2.0 * PI * constants.k_minus / constants.k_plus,
            delta: 0.01,
        }
    }

    /// `mu1 = 1/2 - delta`, `mu2 = 1/2 - delta/3`.
    pub fn validity_exponents(&self) -> (f64, f64) {
        (0.5 - self.delta, 0.5 - self.delta / 3.0)
    }

    pub fn lambda_n(&self, n: usize) -> f64 {
        let r = n as f64 * PI / self.constants.k_minus;
        r * r
    }

    /// `eps_n = K- / (n pi)`.
    pub fn epsilon_n(&self, n: usize) -> f64 {
        self.constants.k_minus / (n as f64 * PI)
    }

    pub fn sigma_small(&self, n: usize) -> f64 {
        2.0 * (-(n as f64) * self.decay_rate).exp()
    }

    pub fn ln_sigma_small(&self, n: usize) -> f64 {
        std::f64::consts::LN_2 - n as f64 * self.decay_rate
    }

    /// `1 - sigma_{-n}^2 = 4 exp(-2 n pi K-/K+)`.
    pub fn one_minus_sq_near_one(&self, n: usize) -> f64 {
        4.0 * (-(n as f64) * self.near_one_rate).exp()
    }

    pub fn ln_one_minus_sq_near_one(&self, n: usize) -> f64 {
        4.0f64.ln() - n as f64 * self.near_one_rate
    }

    pub fn sigma_near_one(&self, n: usize) -> Result<f64, AsymptoticsError> {
        let r = 1.0 - self.one_minus_sq_near_one(n);
        if r <= 0.0 {
            let smallest_valid = ((4.0f64).ln() / self.near_one_rate).floor() as usize + 1;
            return Err(AsymptoticsError::DomainError { n, smallest_valid });
        }
        Ok(r.sqrt())
    }

    /// `beta_n = 2 exp(-n pi Kbar+/Kbar-)` with `Kbar+/Kbar- = K-/K+`.
    pub fn beta_n(&self, n: usize) -> f64 {
        2.0 * (-(n as f64) * PI * self.constants.k_minus / self.constants.k_plus).exp()
    }

    /// Rows `n, sigma_small, sigma_near_one, lambda_n` (17 significant
    /// digits; `nan` where the near-one law is outside its domain).
    pub fn write_csv<W: Write>(&self, mut w: W, n_max: usize, header: Option<&str>) -> std::io::Result<()> {
        if let Some(h) = header {
            writeln!(w, "# {h}")?;
        }
        writeln!(w, "n,sigma_small,sigma_near_one,lambda_n")?;
        for n in 1..=n_max {
            let one = self.sigma_near_one(n).unwrap_or(f64::NAN);
            writeln!(w, "{n},{:.16e},{:.16e},{:.16e}", self.sigma_small(n), one, self.lambda_n(n))?;
        }
        Ok(())
    }
}

/// Least-squares line `y = slope x + intercept`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::EndpointConfig;
    use crate::quadrature::compute_constants;

    fn laws() -> AsymptoticLaws {
        AsymptoticLaws::new(compute_constants(&EndpointConfig::default_config(), 1e-12).unwrap())
    }

    #[test]
    fn lambda_and_eps() {
        let l = laws();
        for n in 1..10 {
            assert!((l.lambda_n(2 * n) / l.lambda_n(n) - 4.0).abs() < 1e-14);
            assert!((l.epsilon_n(n) - 1.0 / l.lambda_n(n).sqrt()).abs() < 1e-15);
        }
        // K- = 0.47191240280906693 from the quadrature oracle
        let want = (6.0 * PI / 0.47191240280906693f64).powi(2);
        assert!((l.lambda_n(6) / want - 1.0).abs() < 1e-11);
    }

    #[test]
    fn sigma_small_geometric() {
        let l = laws();
        let r = (-l.decay_rate).exp();
        for n in 1..20 {
            assert!((l.sigma_small(n + 1) / l.sigma_small(n) / r - 1.0).abs() < 1e-12);
            assert!((l.sigma_small(n).ln() - l.ln_sigma_small(n)).abs() < 1e-12);
        }
        assert_eq!(l.sigma_small(0), 2.0);
    }

    #[test]
    fn near_one_and_beta() {
        let l = laws();
        let mut prev = 0.0;
        for n in 1..12 {
            let s = l.sigma_near_one(n).unwrap();
            assert!(s >= prev && s <= 1.0);
            prev = s;
            assert!((l.beta_n(n).powi(2) + s * s - 1.0).abs() < 1e-15);
            // 1 - s^2 is cancellation-limited once it nears machine epsilon
            if n <= 3 {
                assert!(((1.0 - s * s) / l.one_minus_sq_near_one(n) - 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn domain_error_reports_smallest_n() {
        let c = SpectralConstants { k_minus: 0.1, k_plus: 1.0, k_minus_right: 0.1, tol: 1e-10 };
        let l = AsymptoticLaws::new(c);
        let err = l.sigma_near_one(1).unwrap_err();
        let AsymptoticsError::DomainError { smallest_valid, .. } = err;
        assert!(l.sigma_near_one(smallest_valid).is_ok());
        assert!(l.sigma_near_one(smallest_valid - 1).is_err());
    }

    #[test]
    fn rates_multiply_to_two_pi_squared() {
        let l = laws();
        assert!((l.decay_rate * l.near_one_rate / (2.0 * PI * PI) - 1.0).abs() < 1e-12);
        assert_eq!(l.validity_exponents(), (0.49, 0.5 - 0.01 / 3.0));
    }

    #[test]
    fn log_laws_affine() {
        let l = laws();
        let ns: Vec<f64> = (1..=12).map(|n| n as f64).collect();
        let ys: Vec<f64> = (1..=12).map(|n| l.sigma_small(n).ln()).collect();
        let (a, b) = fit_line(&ns, &ys);
        assert!((a + l.decay_rate).abs() < 1e-12);
        assert!((b - 2f64.ln()).abs() < 1e-12);
        let ys: Vec<f64> = (1..=8).map(|n| l.one_minus_sq_near_one(n).ln()).collect();
        let (a, b) = fit_line(&ns[..8], &ys);
        assert!((a + l.near_one_rate).abs() < 1e-12);
        assert!((b - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn csv_rows() {
        let mut buf = Vec::new();
        laws().write_csv(&mut buf, 3, None).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().count(), 4);
        assert!(s.starts_with("n,sigma_small,sigma_near_one,lambda_n\n1,"));
    }
}
