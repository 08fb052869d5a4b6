use std::fmt;

use crate::dynamics::rotation::rotation_power;
use crate::error::{Error, Result};

/// Time scale of the value dynamics. `Infinite` selects the slow-manifold
/// limit where values are slaved to the task potentials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lambda {
    Finite(f64),
    Infinite,
}

impl Lambda {
    pub fn finite(self) -> Option<f64> {
        match self {
            Lambda::Finite(l) => Some(l),
            Lambda::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Lambda::Infinite)
    }
}

impl fmt::Display for Lambda {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lambda::Finite(l) => write!(f, "{l}"),
            Lambda::Infinite => f.write_str("inf"),
        }
    }
}

/// Finite values serialize as numbers, the slow limit as the string `"inf"`.
impl serde::Serialize for Lambda {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Lambda::Finite(l) => s.serialize_f64(*l),
            Lambda::Infinite => s.serialize_str("inf"),
        }
    }
}

impl std::str::FromStr for Lambda {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") {
            return Ok(Lambda::Infinite);
        }
        let v: f64 = t
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("cannot parse lambda from {s:?}")))?;
        if v.is_infinite() && v > 0.0 {
            Ok(Lambda::Infinite)
        } else {
            Ok(Lambda::Finite(v))
        }
    }
}

/// Model parameters shared by every agent.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub n_agents: usize,
    pub sigma: f64,
    pub lambda: Lambda,
    pub dimension: usize,
    /// Designated point of each agent, in original coordinates.
    pub targets: Vec<Vec<f64>>,
    /// Targets sit at `R^k u` on the unit circle; enables rotated coordinates.
    pub symmetric: bool,
}

impl ModelParams {
    /// Symmetric planar configuration: agent `k` (0-based) is assigned the
    /// target `R^k (1, 0)`.
    pub fn symmetric(n_agents: usize, sigma: f64, lambda: Lambda) -> Result<Self> {
        if n_agents < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 agents, got {n_agents}"
            )));
        }
        let targets = symmetric_targets(n_agents)?;
        let params = ModelParams {
            n_agents,
            sigma,
            lambda,
            dimension: 2,
            targets,
            symmetric: true,
        };
        params.validate()?;
        Ok(params)
    }

    /// Arbitrary targets in any dimension.
    pub fn general(sigma: f64, lambda: Lambda, targets: Vec<Vec<f64>>) -> Result<Self> {
        let dimension = targets.first().map(Vec::len).unwrap_or(0);
        let params = ModelParams {
            n_agents: targets.len(),
            sigma,
            lambda,
            dimension,
            targets,
            symmetric: false,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_agents < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 agents, got {}",
                self.n_agents
            )));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma must be positive and finite, got {}",
                self.sigma
            )));
        }
        if let Lambda::Finite(l) = self.lambda {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "lambda must be positive, got {l}"
                )));
            }
        }
        if self.dimension == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        if self.targets.len() != self.n_agents {
            return Err(Error::InvalidParameter(format!(
                "{} targets for {} agents",
                self.targets.len(),
                self.n_agents
            )));
        }
        if let Some(bad) = self.targets.iter().find(|t| t.len() != self.dimension) {
            return Err(Error::UnsupportedDimension {
                expected: self.dimension,
                found: bad.len(),
            });
        }
        if self.symmetric {
            if self.dimension != 2 {
                return Err(Error::UnsupportedDimension {
                    expected: 2,
                    found: self.dimension,
                });
            }
            let expected = symmetric_targets(self.n_agents)?;
            let off = expected
                .iter()
                .zip(&self.targets)
                .flat_map(|(a, b)| a.iter().zip(b).map(|(p, q)| (p - q).abs()))
                .fold(0.0, f64::max);
            if off > 1e-12 {
                return Err(Error::InvalidParameter(
                    "symmetric configuration requires targets R^k (1, 0)".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn with_sigma(&self, sigma: f64) -> Self {
        ModelParams {
            sigma,
            ..self.clone()
        }
    }

    pub fn with_lambda(&self, lambda: Lambda) -> Self {
        ModelParams {
            lambda,
            ..self.clone()
        }
    }

    pub(crate) fn require_symmetric(&self, what: &str) -> Result<()> {
        if self.symmetric {
            Ok(())
        } else {
            Err(Error::Unsupported(format!(
                "{what} requires the symmetric configuration"
            )))
        }
    }
}

fn symmetric_targets(n: usize) -> Result<Vec<Vec<f64>>> {
    (0..n)
        .map(|k| {
            let r = rotation_power(n, k as i64)?;
            Ok(vec![r[(0, 0)], r[(1, 0)]])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_targets_on_unit_circle() {
        let p = ModelParams::symmetric(4, 1.0, Lambda::Finite(1.0)).unwrap();
        assert_eq!(p.targets[0], vec![1.0, 0.0]);
        assert!((p.targets[1][0]).abs() < 1e-15 && (p.targets[1][1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ModelParams::symmetric(1, 1.0, Lambda::Finite(1.0)).is_err());
        assert!(ModelParams::symmetric(3, 0.0, Lambda::Finite(1.0)).is_err());
        assert!(ModelParams::symmetric(3, 1.0, Lambda::Finite(-1.0)).is_err());
        assert!(ModelParams::symmetric(3, 1.0, Lambda::Infinite).is_ok());
        let mut p = ModelParams::symmetric(3, 1.0, Lambda::Finite(1.0)).unwrap();
        p.targets[1] = vec![2.0, 0.0];
        assert!(p.validate().is_err());
        assert!(ModelParams::general(1.0, Lambda::Finite(1.0), vec![vec![0.0], vec![1.0, 2.0]])
            .is_err());
    }

    #[test]
    fn lambda_parses_inf() {
        assert_eq!("inf".parse::<Lambda>().unwrap(), Lambda::Infinite);
        assert_eq!("2.5".parse::<Lambda>().unwrap(), Lambda::Finite(2.5));
        assert!("x".parse::<Lambda>().is_err());
    }
}
