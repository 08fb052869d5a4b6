//! Eigenvalues of dense Jacobians and the stability thresholds in `σ`.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linearization::jacobian::{jacobian_full, jacobian_slow, DeadlockConstants};

const SCHUR_EPS: f64 = 1e-14;
const SCHUR_MAX_ITER: usize = 10_000;

/// Lower end of every threshold bracket.
pub const SIGMA_LO: f64 = 1e-3;

/// All eigenvalues, sorted by decreasing real part, then decreasing
/// imaginary part.
pub fn spectrum(matrix: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if !matrix.is_square() {
        return Err(Error::InvalidParameter(format!(
            "matrix is {}x{}, not square",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    if matrix.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("matrix has non-finite entries".into()));
    }
    let schur = Schur::try_new(matrix.clone(), SCHUR_EPS, SCHUR_MAX_ITER).ok_or(Error::Eigensolver {
        size: matrix.nrows(),
    })?;
    let mut eig: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    Ok(eig)
}

pub fn max_real_eigenvalue(matrix: &DMatrix<f64>) -> Result<f64> {
    Ok(spectrum(matrix)?.first().map_or(f64::NEG_INFINITY, |z| z.re))
}

/// Eigenvalue with the largest real part, taking the member of a conjugate
/// pair with non-negative imaginary part.
pub fn leading_eigenvalue(matrix: &DMatrix<f64>) -> Result<Complex64> {
    let eig = spectrum(matrix)?;
    let top = eig[0];
    Ok(Complex64::new(top.re, top.im.abs()))
}

/// `σ* = 1/(4y*(1−y*))`: where the symmetric mode of the slow-limit
/// Jacobian loses stability.
pub fn sigma_star_slow_limit(n_agents: usize) -> Result<f64> {
    let y = DeadlockConstants::new(n_agents)?.y;
    Ok(1.0 / (4.0 * y * (1.0 - y)))
}

/// `σ̂ = (Nλ + N + y* − 1)/(2Ny*(1−y*))`: above it the trace of the full
/// Jacobian is positive.
pub fn sigma_hat_bound(n_agents: usize, lambda: f64) -> Result<f64> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be positive and finite, got {lambda}"
        )));
    }
    let y = DeadlockConstants::new(n_agents)?.y;
    let n = n_agents as f64;
    Ok((n * lambda + n + y - 1.0) / (2.0 * n * y * (1.0 - y)))
}

/// Smallest `σ` in `[lo, hi]` where `growth` turns non-negative: a
/// geometric scan for the first unstable sample, then bisection.
fn first_crossing(
    growth: impl Fn(f64) -> Result<f64> + Sync,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let f_lo = growth(lo)?;
    let f_hi = growth(hi)?;
    if f_lo >= 0.0 || f_hi < 0.0 {
        return Err(Error::BracketFailure { lo, hi, f_lo, f_hi });
    }
    const SCAN: usize = 48;
    let ratio = (hi / lo).powf(1.0 / SCAN as f64);
    let grid: Vec<f64> = (0..=SCAN).map(|i| if i == SCAN { hi } else { lo * ratio.powi(i as i32) }).collect();
    let values: Vec<f64> = grid.par_iter().map(|&s| growth(s)).collect::<Result<_>>()?;
    let first = values.iter().position(|&g| g >= 0.0).unwrap_or(SCAN);
    let (mut a, mut b) = (grid[first - 1], grid[first]);
    while b - a > tol * b.max(1.0) {
        let mid = 0.5 * (a + b);
        if growth(mid)? < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Deadlock-breaking `σ` of the full system at finite `λ`: the first zero
/// crossing of the largest real part of the Jacobian spectrum, searched on
/// `[10⁻³, σ̂]`.
pub fn critical_sigma_numeric(n_agents: usize, lambda: f64, tol: f64) -> Result<f64> {
    let hi = sigma_hat_bound(n_agents, lambda)?;
    first_crossing(
        |s| max_real_eigenvalue(&jacobian_full(n_agents, s, lambda)?.assembled),
        SIGMA_LO,
        hi,
        tol,
    )
}

/// First zero crossing of the largest real part of the whole slow-limit
/// spectrum. This is driven by the `(G1 + G2)²` factor and lies below `σ*`.
pub fn slow_limit_crossing_numeric(n_agents: usize, tol: f64) -> Result<f64> {
    let hi = 2.0 * sigma_star_slow_limit(n_agents)?;
    first_crossing(
        |s| max_real_eigenvalue(&jacobian_slow(n_agents, s)?.assembled),
        SIGMA_LO,
        hi,
        tol,
    )
}

/// First zero crossing of the largest real part of the mode block
/// `Ã − B̃` (the `G1` factor). Equals `σ*`.
pub fn mode_block_crossing_numeric(n_agents: usize, tol: f64) -> Result<f64> {
    let hi = 2.0 * sigma_star_slow_limit(n_agents)?;
    first_crossing(
        |s| max_real_eigenvalue(&jacobian_slow(n_agents, s)?.mode_block()),
        SIGMA_LO,
        hi,
        tol,
    )
}

/// One point of the finite-`λ` stability boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPoint {
    pub lambda: f64,
    pub sigma_critical: Result<f64>,
    pub sigma_hat: f64,
    /// Leading eigenvalue at `sigma_critical`, if that was found.
    pub crossing_eigenvalue: Option<Complex64>,
}

/// Critical `σ` for each `λ`, computed in parallel.
pub fn stability_boundary(n_agents: usize, lambdas: &[f64], tol: f64) -> Result<Vec<BoundaryPoint>> {
    lambdas
        .par_iter()
        .map(|&lambda| {
            let sigma_hat = sigma_hat_bound(n_agents, lambda)?;
            let sigma_critical = critical_sigma_numeric(n_agents, lambda, tol);
            let crossing_eigenvalue = match &sigma_critical {
                Ok(s) => Some(leading_eigenvalue(&jacobian_full(n_agents, *s, lambda)?.assembled)?),
                Err(_) => None,
            };
            Ok(BoundaryPoint {
                lambda,
                sigma_critical,
                sigma_hat,
                crossing_eigenvalue,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linearization::jacobian::full_trace_formula;

    const SIGMA_STAR_3: f64 = 1.014_843_299_969_576_7;

    #[test]
    fn trivial_spectra() {
        assert_eq!(max_real_eigenvalue(&DMatrix::identity(4, 4)).unwrap(), 1.0);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, -2.0, 3.0]));
        assert_eq!(max_real_eigenvalue(&d).unwrap(), 3.0);
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, -2.0, 2.0, 0.0]);
        let z = leading_eigenvalue(&rot).unwrap();
        assert!(z.re.abs() < 1e-14 && (z.im - 2.0).abs() < 1e-14);
        assert!(spectrum(&DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn sigma_star_values() {
        assert!((sigma_star_slow_limit(3).unwrap() - SIGMA_STAR_3).abs() < 1e-13);
        for n in 3..=20 {
            assert!(sigma_star_slow_limit(n).unwrap() > 1.0);
        }
    }

    #[test]
    fn mode_block_crosses_at_sigma_star_with_hopf_pair() {
        for n in [3, 5, 8] {
            let star = sigma_star_slow_limit(n).unwrap();
            let found = mode_block_crossing_numeric(n, 1e-12).unwrap();
            assert!((found - star).abs() < 1e-6 * star, "n={n}: {found} vs {star}");
            let z = leading_eigenvalue(&jacobian_slow(n, star).unwrap().mode_block()).unwrap();
            assert!(z.re.abs() < 1e-6 && z.im > 0.0);
            let h = 1e-6;
            let up = max_real_eigenvalue(&jacobian_slow(n, star + h).unwrap().mode_block()).unwrap();
            let dn = max_real_eigenvalue(&jacobian_slow(n, star - h).unwrap().mode_block()).unwrap();
            let y = jacobian_slow(n, star).unwrap().y_star;
            assert!(((up - dn) / (2.0 * h) - 2.0 * y * (1.0 - y)).abs() < 1e-5);
        }
    }

    #[test]
    fn whole_slow_spectrum_loses_stability_before_sigma_star() {
        // the doubled (G1 + G2) pair crosses first; at σ* it is already unstable
        for n in [3, 5] {
            let star = sigma_star_slow_limit(n).unwrap();
            let cross = slow_limit_crossing_numeric(n, 1e-10).unwrap();
            assert!(cross < 0.82 && cross > 0.80, "n={n}: {cross}");
            let at_star = max_real_eigenvalue(&jacobian_slow(n, star).unwrap().assembled).unwrap();
            assert!(at_star > 0.05);
        }
    }

    #[test]
    fn sigma_hat_properties() {
        let y = jacobian_slow(3, 1.0).unwrap().y_star;
        let closed = (5.0 + y) / (6.0 * y * (1.0 - y));
        assert!((sigma_hat_bound(3, 1.0).unwrap() - closed).abs() < 1e-13);
        let mut prev = 0.0;
        for lambda in [0.1, 0.5, 1.0, 3.0, 10.0] {
            let h = sigma_hat_bound(3, lambda).unwrap();
            assert!(h > prev);
            prev = h;
            assert!(full_trace_formula(3, h + 0.01, lambda).unwrap() > 0.0);
            assert!(full_trace_formula(3, h - 0.01, lambda).unwrap() < 0.0);
            assert!(jacobian_full(3, h + 0.01, lambda).unwrap().trace() > 0.0);
        }
    }

    #[test]
    fn critical_sigma_at_unit_lambda() {
        let s = critical_sigma_numeric(3, 1.0, 1e-8).unwrap();
        assert!(s > 0.1 && s < 0.3, "{s}");
        assert!(s <= sigma_hat_bound(3, 1.0).unwrap());
        assert!(max_real_eigenvalue(&jacobian_full(3, s - 1e-4, 1.0).unwrap().assembled).unwrap() < 0.0);
        assert!(max_real_eigenvalue(&jacobian_full(3, s + 1e-4, 1.0).unwrap().assembled).unwrap() > 0.0);
    }

    #[test]
    fn critical_sigma_at_large_lambda_tends_to_slow_crossing() {
        // approaches the first crossing of the full slow-limit spectrum, not σ*
        let slow = slow_limit_crossing_numeric(3, 1e-10).unwrap();
        let s = critical_sigma_numeric(3, 1e3, 1e-8).unwrap();
        assert!((s - slow).abs() < 0.01 * slow, "{s} vs {slow}");
        assert!(s <= sigma_hat_bound(3, 1e3).unwrap());
    }

    #[test]
    fn boundary_grid() {
        let pts = stability_boundary(3, &[0.5, 1.0, 2.0], 1e-6).unwrap();
        assert_eq!(pts.len(), 3);
        let mut prev = 0.0;
        for p in &pts {
            let s = *p.sigma_critical.as_ref().unwrap();
            assert!(s > prev && s <= p.sigma_hat);
            prev = s;
            assert!(p.crossing_eigenvalue.is_some());
        }
    }
}
