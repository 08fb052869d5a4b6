use std::f64::consts::TAU;

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};

/// `R^k` where `R` is the planar rotation by `2π/n`.
///
/// The exponent is reduced modulo `n` before the angle is formed, so
/// `R^k` and `R^(k+n)` are bitwise identical.
pub fn rotation_power(n: usize, k: i64) -> Result<Matrix2<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "rotation order must be positive".into(),
        ));
    }
    let p = k.rem_euclid(n as i64);
    let theta = TAU * p as f64 / n as f64;
    let (s, c) = theta.sin_cos();
    Ok(Matrix2::new(c, -s, s, c))
}

/// Precomputed `R^0, …, R^(n-1)`.
#[derive(Debug, Clone)]
pub struct RotationTable {
    powers: Vec<Matrix2<f64>>,
}

impl RotationTable {
    pub fn new(n: usize) -> Result<Self> {
        let powers = (0..n as i64)
            .map(|k| rotation_power(n, k))
            .collect::<Result<_>>()?;
        Ok(RotationTable { powers })
    }

    pub fn order(&self) -> usize {
        self.powers.len()
    }

    pub fn power(&self, k: i64) -> &Matrix2<f64> {
        let n = self.powers.len() as i64;
        &self.powers[k.rem_euclid(n) as usize]
    }

    pub fn apply(&self, k: i64, v: [f64; 2]) -> [f64; 2] {
        let r = self.power(k) * Vector2::new(v[0], v[1]);
        [r[0], r[1]]
    }
}
