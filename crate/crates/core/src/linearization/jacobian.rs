//! Analytic Jacobians at the deadlock point, in rotated coordinates with
//! the agent-major layout used by the vector fields.
//!
//! Both Jacobians share the structure `I_N ⊗ (A − B) + VᵀU`: every diagonal
//! block equals `A`, and the off-diagonal blocks factor as
//! `B_ij = C_i D_j` with `C_i` carrying `R^{−i}` and `D_j = [R^j | 0]`.

use nalgebra::{DMatrix, Matrix2};

use crate::dynamics::rotation_power;
use crate::equilibria::{deadlock_potentials, solve_y_star};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JacobianKind {
    /// `3N × 3N` Jacobian of the slow-manifold field (`λ → ∞`).
    SlowLimit,
    /// `5N × 5N` Jacobian of the full field at finite `λ`.
    Full,
}

impl JacobianKind {
    pub fn block_size(self) -> usize {
        match self {
            JacobianKind::SlowLimit => 3,
            JacobianKind::Full => 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockJacobian {
    pub kind: JacobianKind,
    pub n_agents: usize,
    pub sigma: f64,
    /// `None` for the slow limit.
    pub lambda: Option<f64>,
    pub y_star: f64,
    /// Diagonal block `A`.
    pub diag_block: DMatrix<f64>,
    /// Left coupling factors `C_k` (`b × 2`).
    pub left_factors: Vec<DMatrix<f64>>,
    /// Right coupling factors `D_k` (`2 × b`).
    pub right_factors: Vec<DMatrix<f64>>,
    /// Entry-by-entry assembled Jacobian.
    pub assembled: DMatrix<f64>,
}

/// Deadlock-point quantities shared by both Jacobians.
#[derive(Debug, Clone, Copy)]
pub(crate) struct DeadlockConstants {
    pub n: usize,
    pub y: f64,
    pub phi1: f64,
    pub phi2: f64,
}

impl DeadlockConstants {
    pub(crate) fn new(n: usize) -> Result<Self> {
        let y = solve_y_star(n, 1e-15)?;
        let (phi1, phi2) = deadlock_potentials(n, y);
        Ok(DeadlockConstants { n, y, phi1, phi2 })
    }

    pub(crate) fn sum(&self) -> f64 {
        self.phi1 + self.phi2
    }

    fn nf(&self) -> f64 {
        self.n as f64
    }

    /// `(1 − y*)/N`, the position-position coupling coefficient.
    fn position_coupling(&self) -> f64 {
        (1.0 - self.y) / self.nf()
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "sigma must be positive and finite, got {sigma}"
        )))
    }
}

/// `Ã`: rows `(y1, y2, m)`.
fn slow_diag(c: &DeadlockConstants, sigma: f64) -> DMatrix<f64> {
    let (y, n) = (c.y, c.nf());
    let s4 = 4.0 * sigma * y * (1.0 - y);
    let mut a = DMatrix::zeros(3, 3);
    a[(0, 0)] = (1.0 - y - n) / n;
    a[(1, 1)] = (1.0 - y - n) / n;
    a[(0, 2)] = 0.5;
    a[(2, 0)] = 2.0 * s4 * (2.0 * y * y - 2.0 * y - 1.0) / c.sum();
    a[(2, 2)] = s4;
    a
}

/// Coefficient of `(y*, 0) R^{j−i}` in the motivation row of `B̃_ij`.
fn slow_motivation_coupling(c: &DeadlockConstants, sigma: f64) -> f64 {
    let (y, n) = (c.y, c.nf());
    -8.0 * sigma * y * (1.0 - y) * (y - 2.0) / ((n - 1.0) * c.sum())
}

/// `A`: rows `(y1, y2, m, v1, v2)`.
fn full_diag(c: &DeadlockConstants, sigma: f64, lambda: f64) -> DMatrix<f64> {
    let (y, n) = (c.y, c.nf());
    let s = c.sum();
    let s24 = 24.0 * sigma * y * (1.0 - y);
    let mut a = DMatrix::zeros(5, 5);
    a[(0, 0)] = (1.0 - y - n) / n;
    a[(1, 1)] = (1.0 - y - n) / n;
    a[(0, 2)] = 0.5;
    a[(2, 2)] = 4.0 * sigma * y * (1.0 - y);
    a[(2, 3)] = s24 * c.phi2 / (s * s);
    a[(2, 4)] = -s24 * c.phi1 / (s * s);
    a[(3, 0)] = lambda * (y - 1.0);
    a[(3, 3)] = -lambda;
    a[(4, 0)] = lambda * y;
    a[(4, 4)] = -lambda;
    a
}

/// Off-diagonal block `B_ij` written out entry by entry.
fn coupling_block(b: usize, c: &DeadlockConstants, row_coeff: f64, row: usize, r: &Matrix2<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(b, b);
    let p = c.position_coupling();
    for i in 0..2 {
        for j in 0..2 {
            out[(i, j)] = p * r[(i, j)];
        }
    }
    // (y*, 0) R = y* × first row of R
    out[(row, 0)] = row_coeff * c.y * r[(0, 0)];
    out[(row, 1)] = row_coeff * c.y * r[(0, 1)];
    out
}

fn build(
    kind: JacobianKind,
    c: &DeadlockConstants,
    sigma: f64,
    lambda: Option<f64>,
    diag_block: DMatrix<f64>,
    row_coeff: f64,
    row: usize,
) -> Result<BlockJacobian> {
    let n = c.n;
    let b = kind.block_size();
    let mut assembled = DMatrix::zeros(b * n, b * n);
    for i in 0..n {
        for j in 0..n {
            let block = if i == j {
                diag_block.clone()
            } else {
                coupling_block(b, c, row_coeff, row, &rotation_power(n, j as i64 - i as i64)?)
            };
            assembled.view_mut((b * i, b * j), (b, b)).copy_from(&block);
        }
    }
    let mut left_factors = Vec::with_capacity(n);
    let mut right_factors = Vec::with_capacity(n);
    for k in 0..n {
        let r_inv = rotation_power(n, -(k as i64))?;
        let r = rotation_power(n, k as i64)?;
        let mut ck = DMatrix::zeros(b, 2);
        for i in 0..2 {
            for j in 0..2 {
                ck[(i, j)] = c.position_coupling() * r_inv[(i, j)];
            }
        }
        ck[(row, 0)] = row_coeff * c.y * r_inv[(0, 0)];
        ck[(row, 1)] = row_coeff * c.y * r_inv[(0, 1)];
        let mut dk = DMatrix::zeros(2, b);
        dk.view_mut((0, 0), (2, 2)).copy_from(&r);
        left_factors.push(ck);
        right_factors.push(dk);
    }
    Ok(BlockJacobian {
        kind,
        n_agents: n,
        sigma,
        lambda,
        y_star: c.y,
        diag_block,
        left_factors,
        right_factors,
        assembled,
    })
}

/// Jacobian of the slow-manifold field at the deadlock point.
pub fn jacobian_slow(n_agents: usize, sigma: f64) -> Result<BlockJacobian> {
    check_sigma(sigma)?;
    let c = DeadlockConstants::new(n_agents)?;
    build(
        JacobianKind::SlowLimit,
        &c,
        sigma,
        None,
        slow_diag(&c, sigma),
        slow_motivation_coupling(&c, sigma),
        2,
    )
}

/// Jacobian of the full field at the deadlock point, finite `λ` only.
pub fn jacobian_full(n_agents: usize, sigma: f64, lambda: f64) -> Result<BlockJacobian> {
    check_sigma(sigma)?;
    if !lambda.is_finite() {
        return Err(Error::WrongField(
            "lambda is infinite; use the slow-limit Jacobian",
        ));
    }
    if lambda <= 0.0 {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    let c = DeadlockConstants::new(n_agents)?;
    let row_coeff = -lambda / (c.nf() - 1.0);
    build(
        JacobianKind::Full,
        &c,
        sigma,
        Some(lambda),
        full_diag(&c, sigma, lambda),
        row_coeff,
        4,
    )
}

impl BlockJacobian {
    pub fn block_size(&self) -> usize {
        self.kind.block_size()
    }

    /// `C_i D_j`.
    pub fn coupling(&self, i: usize, j: usize) -> DMatrix<f64> {
        &self.left_factors[i] * &self.right_factors[j]
    }

    /// `A − B_ii`, the same for every `i`: the block that governs
    /// perturbations along the symmetric subspace's complement modes.
    pub fn mode_block(&self) -> DMatrix<f64> {
        &self.diag_block - self.coupling(0, 0)
    }

    /// `I_N ⊗ (A − B) + VᵀU` rebuilt from the factors.
    pub fn kronecker_reconstruction(&self) -> DMatrix<f64> {
        let (n, b) = (self.n_agents, self.block_size());
        let mode = self.mode_block();
        let mut out = DMatrix::zeros(n * b, n * b);
        for i in 0..n {
            for j in 0..n {
                let mut block = self.coupling(i, j);
                if i == j {
                    block += &mode;
                }
                out.view_mut((b * i, b * j), (b, b)).copy_from(&block);
            }
        }
        out
    }

    pub fn trace(&self) -> f64 {
        self.assembled.trace()
    }
}

/// `2(1 − y* − N − Nλ) + 4Nσy*(1 − y*)`.
pub fn full_trace_formula(n_agents: usize, sigma: f64, lambda: f64) -> Result<f64> {
    let c = DeadlockConstants::new(n_agents)?;
    let (y, n) = (c.y, c.nf());
    Ok(2.0 * (1.0 - y - n - n * lambda) + 4.0 * n * sigma * y * (1.0 - y))
}

/// `Σ_k R^k diag(a, b) R^{−k}` over `k = 0..N`, which collapses to
/// `(N/2)(a + b) I` because the roots of unity sum to zero.
pub fn rotation_conjugation_sum(a: f64, b: f64, n: usize) -> Result<Matrix2<f64>> {
    if n < 3 {
        return Err(Error::Unsupported(format!(
            "the conjugation sum collapses only for N >= 3, got {n}"
        )));
    }
    let d = Matrix2::new(a, 0.0, 0.0, b);
    let mut direct = Matrix2::zeros();
    for k in 0..n as i64 {
        direct += rotation_power(n, k)? * d * rotation_power(n, -k)?;
    }
    let closed = Matrix2::identity() * (0.5 * n as f64 * (a + b));
    let scale = 1.0_f64.max(a.abs().max(b.abs()) * n as f64);
    debug_assert!((direct - closed).amax() <= 1e-12 * scale);
    Ok(closed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{to_flat, Dynamics, FieldKind, Lambda, ModelParams, Representation};
    use crate::equilibria::deadlock_equilibrium;

    fn fd_jacobian(kind: FieldKind, n: usize, sigma: f64, lambda: Lambda) -> DMatrix<f64> {
        let p = ModelParams::symmetric(n, sigma, lambda).unwrap();
        let dy = Dynamics::new(&p).unwrap();
        let x0 = to_flat(kind, &deadlock_equilibrium(&p).unwrap().state);
        let dim = x0.len();
        let mut j = DMatrix::zeros(dim, dim);
        let h = 1e-6;
        for c in 0..dim {
            let mut xp = x0.clone();
            let mut xm = x0.clone();
            xp[c] += h;
            xm[c] -= h;
            let fp = dy.rate_vector(kind, Representation::Rotated, &xp).unwrap();
            let fm = dy.rate_vector(kind, Representation::Rotated, &xm).unwrap();
            for r in 0..dim {
                j[(r, c)] = (fp[r] - fm[r]) / (2.0 * h);
            }
        }
        j
    }

    fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).amax() / b.amax()
    }

    #[test]
    fn slow_jacobian_matches_finite_differences() {
        for n in [3, 4, 6] {
            for sigma in [0.3, 1.0, 2.5] {
                let j = jacobian_slow(n, sigma).unwrap();
                let fd = fd_jacobian(FieldKind::Slow, n, sigma, Lambda::Infinite);
                assert!(rel_err(&j.assembled, &fd) < 1e-6, "n={n} sigma={sigma}");
            }
        }
    }

    #[test]
    fn full_jacobian_matches_finite_differences() {
        for n in [3, 5] {
            for (sigma, lambda) in [(0.2, 1.0), (1.3, 0.4), (3.0, 7.0)] {
                let j = jacobian_full(n, sigma, lambda).unwrap();
                let fd = fd_jacobian(FieldKind::Full, n, sigma, Lambda::Finite(lambda));
                assert!(rel_err(&j.assembled, &fd) < 1e-6, "n={n} sigma={sigma}");
            }
        }
    }

    #[test]
    fn named_entries() {
        let j = jacobian_slow(3, 1.0).unwrap();
        assert_eq!(j.diag_block[(0, 2)], 0.5);
        assert_eq!(j.diag_block[(1, 1)], (1.0 - j.y_star - 3.0) / 3.0);
        let f = jacobian_full(3, 1.0, 2.5).unwrap();
        assert_eq!(f.diag_block[(3, 4)], 0.0);
        assert_eq!(f.diag_block[(4, 4)], -2.5);
    }

    #[test]
    fn diagonal_coupling_independent_of_agent() {
        let j = jacobian_slow(5, 1.2).unwrap();
        let b0 = j.coupling(0, 0);
        for i in 1..5 {
            assert!((j.coupling(i, i) - &b0).amax() < 1e-15);
        }
    }

    #[test]
    fn kronecker_reconstruction() {
        for j in [jacobian_slow(4, 0.7).unwrap(), jacobian_full(4, 0.7, 1.5).unwrap()] {
            assert!((j.kronecker_reconstruction() - &j.assembled).amax() < 1e-12);
        }
    }

    #[test]
    fn trace_identity() {
        for n in [3, 4, 7] {
            for sigma in [0.1, 1.0, 4.0] {
                for lambda in [0.2, 1.0, 9.0] {
                    let t = jacobian_full(n, sigma, lambda).unwrap().trace();
                    let f = full_trace_formula(n, sigma, lambda).unwrap();
                    assert!((t - f).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn lambda_must_be_finite() {
        assert!(matches!(jacobian_full(3, 1.0, f64::INFINITY), Err(Error::WrongField(_))));
        assert!(jacobian_slow(2, 1.0).is_err());
    }

    #[test]
    fn conjugation_sum_examples() {
        assert_eq!(rotation_conjugation_sum(1.0, 0.0, 4).unwrap(), Matrix2::identity() * 2.0);
        assert_eq!(rotation_conjugation_sum(0.3, 0.3, 7).unwrap(), Matrix2::identity() * (7.0 * 0.3));
        assert_eq!(rotation_conjugation_sum(1.0, -1.0, 5).unwrap(), Matrix2::zeros());
        assert!(rotation_conjugation_sum(1.0, 0.0, 2).is_err());
    }
}
