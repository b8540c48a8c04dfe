//! Endpoint configuration and the characteristic quartic.
//!
//! The quartic is kept in factored form; every evaluation multiplies the
//! four differences `x - a_j` directly.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("endpoints must be finite, got {0:?}")]
    NonFinite([f64; 4]),
    #[error("endpoints must be strictly increasing, got {0:?}")]
    NotIncreasing([f64; 4]),
}

/// Four breakpoints `a1 < a2 < a3 < a4`.
///
/// The target interval is `[a1, a3]`, the source interval is `[a2, a4]`,
/// and they overlap on `[a2, a3]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct EndpointConfig {
    a: [f64; 4],
}

impl EndpointConfig {
    pub fn new(a1: f64, a2: f64, a3: f64, a4: f64) -> Result<Self, GeometryError> {
        Self::from_array([a1, a2, a3, a4])
    }

    pub fn from_array(a: [f64; 4]) -> Result<Self, GeometryError> {
        if a.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite(a));
        }
        if !(a[0] < a[1] && a[1] < a[2] && a[2] < a[3]) {
            return Err(GeometryError::NotIncreasing(a));
        }
        Ok(Self { a })
    }

    /// The configuration used throughout the numerical experiments.
    pub fn default_config() -> Self {
        Self { a: [0.0, 3.0, 6.0, 12.0] }
    }

    pub fn a1(&self) -> f64 {
        self.a[0]
    }
    pub fn a2(&self) -> f64 {
        self.a[1]
    }
    pub fn a3(&self) -> f64 {
        self.a[2]
    }
    pub fn a4(&self) -> f64 {
        self.a[3]
    }

    /// Endpoint by zero-based index (0 is `a1`).
    pub fn endpoint(&self, i: usize) -> f64 {
        self.a[i]
    }

    pub fn as_array(&self) -> [f64; 4] {
        self.a
    }

    pub fn scaled(&self, c: f64) -> Result<Self, GeometryError> {
        Self::from_array(self.a.map(|v| c * v))
    }

    pub fn translated(&self, s: f64) -> Result<Self, GeometryError> {
        Self::from_array(self.a.map(|v| v + s))
    }

    /// Mirror image `x -> -x`, endpoints relabelled to stay increasing.
    pub fn reflected(&self) -> Self {
        Self { a: [-self.a[3], -self.a[2], -self.a[1], -self.a[0]] }
    }

    pub fn polynomial(&self) -> CharacteristicPolynomial {
        CharacteristicPolynomial { roots: self.a, center: center_sigma(self) }
    }
}

impl TryFrom<[f64; 4]> for EndpointConfig {
    type Error = GeometryError;
    fn try_from(a: [f64; 4]) -> Result<Self, Self::Error> {
        Self::from_array(a)
    }
}

impl From<EndpointConfig> for [f64; 4] {
    fn from(c: EndpointConfig) -> Self {
        c.a
    }
}

/// `P(x) = prod (x - a_j)` with its center `sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicPolynomial {
    pub roots: [f64; 4],
    pub center: f64,
}

impl CharacteristicPolynomial {
    pub fn eval(&self, x: f64) -> f64 {
        self.roots.iter().map(|a| x - a).product()
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let d = self.roots.map(|a| x - a);
        d[1] * d[2] * d[3] + d[0] * d[2] * d[3] + d[0] * d[1] * d[3] + d[0] * d[1] * d[2]
    }
}

pub fn eval_p(cfg: &EndpointConfig, x: f64) -> f64 {
    cfg.a.iter().map(|a| x - a).product()
}

/// `P'(x)`. At a root this reduces to the product of differences to the
/// other three roots, computed exactly that way.
pub fn eval_p_prime(cfg: &EndpointConfig, x: f64) -> f64 {
    if let Some(i) = cfg.a.iter().position(|&a| a == x) {
        return (0..4).filter(|&j| j != i).map(|j| cfg.a[i] - cfg.a[j]).product();
    }
    cfg.polynomial().derivative(x)
}

pub fn center_sigma(cfg: &EndpointConfig) -> f64 {
    cfg.a.iter().sum::<f64>() / 4.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_examples() {
        let c = EndpointConfig::default_config();
        assert_eq!(eval_p(&c, 0.0), 0.0);
        assert_eq!(eval_p(&c, 1.0), -110.0);
        let d = EndpointConfig::new(-1.0, 0.0, 1.0, 2.0).unwrap();
        assert!((eval_p(&d, 0.5) - 0.5625).abs() < 1e-15);
    }

    #[test]
    fn p_prime_at_roots() {
        let c = EndpointConfig::default_config();
        assert_eq!(eval_p_prime(&c, 0.0), -216.0);
        assert_eq!(eval_p_prime(&c, 6.0), -108.0);
        assert_eq!(eval_p_prime(&c, 3.0), 81.0);
        assert_eq!(eval_p_prime(&c, 12.0), 648.0);
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(center_sigma(&EndpointConfig::default_config()), 5.25);
        let d = EndpointConfig::new(-1.0, 0.0, 1.0, 2.0).unwrap();
        assert_eq!(center_sigma(&d), 0.5);
        let s = EndpointConfig::default_config().scaled(3.0).unwrap();
        assert_eq!(center_sigma(&s), 3.0 * 5.25);
    }

    #[test]
    fn validation() {
        assert!(EndpointConfig::new(3.0, 3.0, 6.0, 12.0).is_err());
        assert!(EndpointConfig::new(0.0, f64::NAN, 6.0, 12.0).is_err());
        assert!(EndpointConfig::new(0.0, 4.0, 3.0, 12.0).is_err());
        let parsed: Result<EndpointConfig, _> = serde_json::from_str("[0, 3, 3, 4]");
        assert!(parsed.is_err());
    }
}
