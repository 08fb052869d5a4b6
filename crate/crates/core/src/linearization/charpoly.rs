//! Factored characteristic polynomial of the slow-limit Jacobian,
//! `det(J − μI) = (G1 + G2)² G1^{N−2}`, and the determinant-lemma
//! reduction it comes from.
//!
//! `G1 = det(Ã − B̃ − μI)`. `G2 = (N/2) tr(D₀ adj(Ã − B̃ − μI) C₀)`, written
//! through the adjugate entries `g1, g2, g3`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linearization::jacobian::{BlockJacobian, DeadlockConstants};

/// Polynomial in `μ` with real coefficients in ascending powers.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn eval(&self, mu: Complex64) -> Complex64 {
        self.0
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * mu + c)
    }

    pub fn degree(&self) -> usize {
        self.0.iter().rposition(|&c| c != 0.0).unwrap_or(0)
    }

    fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    fn add(&self, other: &Poly) -> Poly {
        let len = self.0.len().max(other.0.len());
        Poly(
            (0..len)
                .map(|i| self.0.get(i).unwrap_or(&0.0) + other.0.get(i).unwrap_or(&0.0))
                .collect(),
        )
    }

    fn scale(&self, s: f64) -> Poly {
        Poly(self.0.iter().map(|c| c * s).collect())
    }
}

/// Closed-form factors of the slow-limit characteristic polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct CharPolyFactors {
    pub n_agents: usize,
    pub sigma: f64,
    pub y_star: f64,
    /// `G1 = (μ+1)[(μ+1)(c − μ) − K]` with `c = 4σy*(1−y*)` and
    /// `K = 4σ(1−y*)²(1+y*)/(φ1* + φ2*)`.
    pub mode_block_det: Poly,
    /// `G2 = ((1−y*)/2)(g1 + g3) − 4Nσ(1−y*)(y*−2)y*²/((N−1)(φ1*+φ2*)) g2`.
    pub coupling_term: Poly,
    /// `g1 = −(1+μ)(c − μ)`.
    pub adjugate_g1: Poly,
    /// `g2 = (1+μ)/2`.
    pub adjugate_g2: Poly,
    /// `g3 = −(1+μ)(c − μ) + K`.
    pub adjugate_g3: Poly,
}

impl CharPolyFactors {
    pub fn new(n_agents: usize, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma must be positive and finite, got {sigma}"
            )));
        }
        let k = DeadlockConstants::new(n_agents)?;
        let (y, n, s) = (k.y, n_agents as f64, k.sum());
        let c = 4.0 * sigma * y * (1.0 - y);
        let big_k = 4.0 * sigma * (1.0 - y).powi(2) * (1.0 + y) / s;

        let one_plus = Poly(vec![1.0, 1.0]);
        let c_minus = Poly(vec![c, -1.0]);
        let product = one_plus.mul(&c_minus);
        let g1 = product.scale(-1.0);
        let g2 = one_plus.scale(0.5);
        let g3 = g1.add(&Poly(vec![big_k]));
        let mode_block_det = one_plus.mul(&product.add(&Poly(vec![-big_k])));
        let coupling_term = g1
            .add(&g3)
            .scale(0.5 * (1.0 - y))
            .add(&g2.scale(-4.0 * n * sigma * (1.0 - y) * (y - 2.0) * y * y / ((n - 1.0) * s)));
        Ok(CharPolyFactors {
            n_agents,
            sigma,
            y_star: y,
            mode_block_det,
            coupling_term,
            adjugate_g1: g1,
            adjugate_g2: g2,
            adjugate_g3: g3,
        })
    }

    /// `(G1 + G2)² G1^{N−2}` at `μ`.
    pub fn eval(&self, mu: Complex64) -> Complex64 {
        let g1 = self.mode_block_det.eval(mu);
        let g2 = self.coupling_term.eval(mu);
        (g1 + g2).powi(2) * g1.powi(self.n_agents as i32 - 2)
    }
}

/// `det(J̃ − μI)` of the slow-limit Jacobian from the closed-form factors.
pub fn char_poly_slow(mu: Complex64, sigma: f64, n_agents: usize) -> Result<Complex64> {
    Ok(CharPolyFactors::new(n_agents, sigma)?.eval(mu))
}

fn complexify(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Adjugate of a small complex matrix from cofactors.
fn adjugate(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = m.nrows();
    let mut adj = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let minor = m.clone().remove_row(i).remove_column(j);
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            // transpose: adj[j][i] = cofactor[i][j]
            adj[(j, i)] = minor.determinant() * sign;
        }
    }
    adj
}

/// `det(J − μI)` via the matrix determinant lemma:
/// `det(M)^{N−2} · det(det(M) I₂ + Σ_k D_k adj(M) C_k)` with `M = A − B − μI`.
/// Works for either Jacobian kind and stays finite where `det(M) = 0`.
pub fn det_via_lemma(jac: &BlockJacobian, mu: Complex64) -> Complex64 {
    let b = jac.block_size();
    let m = complexify(&jac.mode_block()) - DMatrix::<Complex64>::identity(b, b) * mu;
    let det_m = m.determinant();
    let adj = adjugate(&m);
    let mut inner = DMatrix::<Complex64>::identity(2, 2) * det_m;
    for k in 0..jac.n_agents {
        inner += complexify(&jac.right_factors[k]) * &adj * complexify(&jac.left_factors[k]);
    }
    det_m.powi(jac.n_agents as i32 - 2) * inner.determinant()
}

/// `det(J − μI)` from the dense assembled matrix.
pub fn det_dense(jac: &BlockJacobian, mu: Complex64) -> Complex64 {
    let n = jac.assembled.nrows();
    (complexify(&jac.assembled) - DMatrix::<Complex64>::identity(n, n) * mu).determinant()
}
