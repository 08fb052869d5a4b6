//! The symmetric deadlock equilibrium and a multi-start search for
//! equilibria on the symmetric subspace.
//!
//! On the symmetric subspace every column equals `(y, 0, m, v1, v2)`. At an
//! interior equilibrium `m = 2y − 1`, the values equal the potentials
//! `φ1 = ½(1 − y)²`, `φ2 = N y² / (2(N − 1))`, and `m = −3α` reduces to the
//! cubic `(2N−1)β³ − (3N−1)β² − (N−1)β + (N−1) = 0` with exactly one root
//! in `(0, 1)`.

use nalgebra::{SMatrix, SVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{
    to_flat, AgentState, Dynamics, FieldKind, Lambda, ModelParams, Representation, SystemState,
};
use crate::error::{Error, Result};

fn require_three(n: usize) -> Result<()> {
    if n < 3 {
        Err(Error::Unsupported(format!(
            "deadlock analysis needs at least 3 agents, got {n}"
        )))
    } else {
        Ok(())
    }
}

/// Integer coefficients `(c3, c2, c1, c0)` of the deadlock cubic.
pub fn cubic_coefficients(n: usize) -> Result<[i64; 4]> {
    require_three(n)?;
    let n = n as i64;
    Ok([2 * n - 1, -(3 * n - 1), -(n - 1), n - 1])
}

fn horner(c: [i64; 4], beta: f64) -> (f64, f64) {
    let [c3, c2, c1, c0] = c.map(|x| x as f64);
    let value = ((c3 * beta + c2) * beta + c1) * beta + c0;
    let slope = (3.0 * c3 * beta + 2.0 * c2) * beta + c1;
    (value, slope)
}

/// Value of the deadlock cubic at `beta`.
pub fn cubic_value(n: usize, beta: f64) -> Result<f64> {
    Ok(horner(cubic_coefficients(n)?, beta).0)
}

/// Root of the deadlock cubic in `(0, 1)`.
///
/// The cubic is positive at 0 and negative at 1; a bisection bracket is
/// kept throughout and Newton steps are taken only when they stay inside it.
pub fn solve_y_star(n: usize, tol: f64) -> Result<f64> {
    let c = cubic_coefficients(n)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    // f(lo) > 0 > f(hi)
    let mut x = 0.5;
    for _ in 0..200 {
        let (f, df) = horner(c, x);
        if f.abs() < tol && hi - lo < 1e-3 {
            break;
        }
        if f > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - f / df;
        x = if df != 0.0 && newton > lo && newton < hi && hi - lo < 0.25 {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 4.0 * f64::EPSILON {
            break;
        }
    }
    Ok(x)
}

/// The deadlock equilibrium of the symmetric configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeadlockPoint {
    pub n_agents: usize,
    pub y_star: f64,
    pub motivation: f64,
    pub phi1_star: f64,
    pub phi2_star: f64,
    /// Rotated-frame state with all columns equal. In the slow limit the
    /// values hold the slaved potentials.
    #[serde(skip)]
    pub state: SystemState,
}

/// Potentials at the deadlock point for a given `y*`.
pub fn deadlock_potentials(n: usize, y_star: f64) -> (f64, f64) {
    let nf = n as f64;
    (
        0.5 * (1.0 - y_star).powi(2),
        nf / (2.0 * (nf - 1.0)) * y_star * y_star,
    )
}

pub fn deadlock_equilibrium(params: &ModelParams) -> Result<DeadlockPoint> {
    params.validate()?;
    params.require_symmetric("the deadlock equilibrium")?;
    let n = params.n_agents;
    require_three(n)?;
    let y_star = solve_y_star(n, 1e-15)?;
    let (phi1_star, phi2_star) = deadlock_potentials(n, y_star);
    let motivation = 2.0 * y_star - 1.0;
    let agent = AgentState::new(vec![y_star, 0.0], motivation, [phi1_star, phi2_star]);
    let state = SystemState::new(vec![agent; n], Representation::Rotated)?;
    Ok(DeadlockPoint {
        n_agents: n,
        y_star,
        motivation,
        phi1_star,
        phi2_star,
        state,
    })
}

/// Location of a symmetric-subspace root relative to the motivation bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RootKind {
    /// `|m| < 1`: a deadlock candidate.
    Interior,
    /// `|m| = 1`: the `(1 − m²)` factor vanishes.
    Boundary,
}

/// One converged root, stored as a single column `(y1, y2, m, v1, v2)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetricRoot {
    pub column: [f64; 5],
    pub kind: RootKind,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchReport {
    pub restarts: usize,
    pub interior: Vec<SymmetricRoot>,
    pub boundary: Vec<SymmetricRoot>,
    pub non_convergent: usize,
    /// Converged to a zero of the field with `|m| > 1`.
    pub out_of_domain: usize,
}

const NEWTON_TOL: f64 = 1e-12;
const DEDUP_TOL: f64 = 1e-6;
const BOUNDARY_TOL: f64 = 1e-9;

type Col = SVector<f64, 5>;

struct ColumnSystem {
    dynamics: Dynamics,
    n: usize,
}

impl ColumnSystem {
    fn eval(&self, col: &Col) -> Result<Col> {
        let mut flat = Vec::with_capacity(5 * self.n);
        for _ in 0..self.n {
            flat.extend(col.iter().copied());
        }
        let rate = self
            .dynamics
            .rate_vector(FieldKind::Full, Representation::Rotated, &flat)?;
        Ok(Col::from_column_slice(&rate[..5]))
    }

    fn jacobian(&self, col: &Col) -> Result<SMatrix<f64, 5, 5>> {
        let mut j = SMatrix::<f64, 5, 5>::zeros();
        for i in 0..5 {
            let h = 1e-7 * col[i].abs().max(1.0);
            let mut p = *col;
            let mut m = *col;
            p[i] += h;
            m[i] -= h;
            let d = (self.eval(&p)? - self.eval(&m)?) / (2.0 * h);
            j.set_column(i, &d);
        }
        Ok(j)
    }

    /// Damped Newton; `None` when it stalls or leaves the domain of the field.
    fn newton(&self, start: Col) -> Option<(Col, f64)> {
        let mut x = start;
        let mut g = self.eval(&x).ok()?;
        let mut norm = g.amax();
        for _ in 0..100 {
            if norm < NEWTON_TOL {
                return Some((x, norm));
            }
            let step = self.jacobian(&x).ok()?.lu().solve(&(-g))?;
            let mut t = 1.0;
            loop {
                let trial = x + step * t;
                if let Ok(gt) = self.eval(&trial) {
                    let nt = gt.amax();
                    if nt.is_finite() && nt < norm {
                        x = trial;
                        g = gt;
                        norm = nt;
                        break;
                    }
                }
                t *= 0.5;
                if t < 1e-10 {
                    return None;
                }
            }
        }
        (norm < NEWTON_TOL).then_some((x, norm))
    }
}

/// Multi-start damped Newton search on the 5-dimensional symmetric
/// subspace. Restart `i` draws its start from a generator seeded with
/// `seed + i`; the known deadlock point is always tried first.
///
/// The equilibrium set does not depend on `λ`, so an infinite `λ` is
/// searched with `λ = 1`.
pub fn search_symmetric_equilibria(
    params: &ModelParams,
    n_restarts: usize,
    seed: u64,
) -> Result<SearchReport> {
    params.require_symmetric("the symmetric equilibrium search")?;
    let known = deadlock_equilibrium(params)?;
    let search_params = if params.lambda.is_infinite() {
        params.with_lambda(Lambda::Finite(1.0))
    } else {
        params.clone()
    };
    let system = ColumnSystem {
        dynamics: Dynamics::new(&search_params)?,
        n: params.n_agents,
    };

    let first = Col::from_column_slice(&to_flat(FieldKind::Full, &known.state)[..5]);
    let starts: Vec<Col> = std::iter::once(first)
        .chain((0..n_restarts).map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            Col::new(
                rng.random_range(-2.0..=2.0),
                rng.random_range(-2.0..=2.0),
                rng.random_range(-1.0..=1.0),
                2.0 - rng.random_range(0.0..2.0),
                2.0 - rng.random_range(0.0..2.0),
            )
        }))
        .collect();

    let outcomes: Vec<Option<(Col, f64)>> =
        starts.into_par_iter().map(|s| system.newton(s)).collect();

    let mut report = SearchReport {
        restarts: n_restarts + 1,
        interior: Vec::new(),
        boundary: Vec::new(),
        non_convergent: 0,
        out_of_domain: 0,
    };
    for outcome in outcomes {
        let Some((x, residual)) = outcome else {
            report.non_convergent += 1;
            continue;
        };
        let m = x[2].abs();
        let kind = if m < 1.0 - BOUNDARY_TOL {
            RootKind::Interior
        } else if m <= 1.0 + BOUNDARY_TOL {
            RootKind::Boundary
        } else {
            report.out_of_domain += 1;
            continue;
        };
        let list = match kind {
            RootKind::Interior => &mut report.interior,
            RootKind::Boundary => &mut report.boundary,
        };
        let column: [f64; 5] = x.into();
        let duplicate = list.iter().any(|r| {
            r.column
                .iter()
                .zip(&column)
                .all(|(a, b)| (a - b).abs() <= DEDUP_TOL)
        });
        if !duplicate {
            list.push(SymmetricRoot {
                column,
                kind,
                residual,
            });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Plain bisection, kept independent of `solve_y_star`.
    fn bisection_oracle(n: usize) -> f64 {
        let nf = n as f64;
        let f = |b: f64| (2.0 * nf - 1.0) * b.powi(3) - (3.0 * nf - 1.0) * b * b - (nf - 1.0) * b + nf - 1.0;
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    // 40-digit reference root for N = 3.
    const Y_STAR_3: f64 = 0.439_530_588_493_612_332_5;

    #[test]
    fn coefficients() {
        assert_eq!(cubic_coefficients(3).unwrap(), [5, -8, -2, 2]);
        assert_eq!(cubic_coefficients(4).unwrap(), [7, -11, -3, 3]);
        assert!(cubic_coefficients(2).is_err());
    }

    #[test]
    fn sign_pattern_in_integer_arithmetic() {
        for n in 3..=50_i64 {
            let [c3, c2, c1, c0] = cubic_coefficients(n as usize).unwrap();
            let at = |b: i64| c3 * b * b * b + c2 * b * b + c1 * b + c0;
            assert_eq!([at(-1), at(0), at(1), at(2)], [-3 * n, n - 1, -n, 3 * n - 3]);
        }
    }

    #[test]
    fn golden_root_for_three_agents() {
        let oracle = bisection_oracle(3);
        assert!((oracle - Y_STAR_3).abs() < 1e-14);
        let y = solve_y_star(3, 1e-14).unwrap();
        assert!((y - Y_STAR_3).abs() < 1e-14, "{y}");
    }

    #[test]
    fn root_lies_below_one_half() {
        for n in 3..=20 {
            let y = solve_y_star(n, 1e-14).unwrap();
            assert!(y > 0.0 && y < 0.5);
            assert!(cubic_value(n, y).unwrap().abs() < 1e-15 * n as f64 * 8.0);
            assert!((y - bisection_oracle(n)).abs() < 1e-13);
        }
    }

    #[test]
    fn equilibrium_state() {
        let p = ModelParams::symmetric(3, 1.0, Lambda::Finite(1.0)).unwrap();
        let dp = deadlock_equilibrium(&p).unwrap();
        assert!(dp.motivation < 0.0);
        let dy = Dynamics::new(&p).unwrap();
        assert!(dy.residual(&dp.state).unwrap() < 1e-10);
        let a = &dp.state.agents[0];
        let ratio = a.values[0] / a.values[1];
        let y = dp.y_star;
        let expected = 2.0 * (1.0 - y).powi(2) / (3.0 * y * y);
        assert!((ratio - expected).abs() < 1e-13);
    }

    #[test]
    fn residual_vanishes_for_all_parameters() {
        for n in 3..=10 {
            for lambda in [0.5, 1.0, 2.0, 10.0] {
                for sigma in [0.1, 1.0, 10.0] {
                    let p = ModelParams::symmetric(n, sigma, Lambda::Finite(lambda)).unwrap();
                    let dp = deadlock_equilibrium(&p).unwrap();
                    let r = Dynamics::new(&p).unwrap().residual(&dp.state).unwrap();
                    assert!(r < 1e-10, "n={n} lambda={lambda} sigma={sigma}: {r}");
                }
            }
            let p = ModelParams::symmetric(n, 1.0, Lambda::Infinite).unwrap();
            let dp = deadlock_equilibrium(&p).unwrap();
            assert!(Dynamics::new(&p).unwrap().residual(&dp.state).unwrap() < 1e-10);
        }
    }

    #[test]
    fn needs_symmetric_params() {
        let p = ModelParams::general(
            1.0,
            Lambda::Finite(1.0),
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]],
        )
        .unwrap();
        assert!(deadlock_equilibrium(&p).is_err());
        let p = ModelParams::symmetric(2, 1.0, Lambda::Finite(1.0)).unwrap();
        assert!(deadlock_equilibrium(&p).is_err());
    }

    #[test]
    fn search_finds_the_deadlock_point_and_boundary_roots() {
        let p = ModelParams::symmetric(3, 1.0, Lambda::Finite(1.0)).unwrap();
        let report = search_symmetric_equilibria(&p, 200, 11).unwrap();
        assert_eq!(report.interior.len(), 1, "{report:?}");
        let dp = deadlock_equilibrium(&p).unwrap();
        let root = &report.interior[0];
        assert!((root.column[0] - dp.y_star).abs() < 1e-9);
        assert!((root.column[2] - dp.motivation).abs() < 1e-9);
        for b in &report.boundary {
            assert!((b.column[2].abs() - 1.0).abs() < 1e-9);
        }
        let again = search_symmetric_equilibria(&p, 200, 11).unwrap();
        assert_eq!(report, again);
    }
}
