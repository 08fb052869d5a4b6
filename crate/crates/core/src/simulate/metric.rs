//! Rendezvous metric and its local minima along a trajectory.

use crate::dynamics::{Representation, RotationTable, SystemState};
use crate::error::Result;
use crate::simulate::trajectory::Trajectory;

/// Mean distance of the agents to their centroid.
///
/// In rotated coordinates agent `k` sees the centroid as
/// `(1/N) Σ_j R^{j−k} y_j`, which gives the same number.
pub fn rendezvous_metric(state: &SystemState) -> f64 {
    let n = state.n_agents();
    if n == 0 {
        return 0.0;
    }
    let d = state.dimension();
    let nf = n as f64;
    let rotated = match (state.representation, d) {
        (Representation::Rotated, 2) => RotationTable::new(n).ok(),
        _ => None,
    };
    let mut total = 0.0;
    match rotated {
        Some(table) => {
            for k in 0..n {
                let mut c = [0.0; 2];
                for (j, a) in state.agents.iter().enumerate() {
                    let r = table.apply(j as i64 - k as i64, [a.position[0], a.position[1]]);
                    c[0] += r[0] / nf;
                    c[1] += r[1] / nf;
                }
                let p = &state.agents[k].position;
                total += ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt();
            }
        }
        None => {
            let mut c = vec![0.0; d];
            for a in &state.agents {
                for (ci, x) in c.iter_mut().zip(&a.position) {
                    *ci += x / nf;
                }
            }
            for a in &state.agents {
                total += a
                    .position
                    .iter()
                    .zip(&c)
                    .map(|(x, ci)| (x - ci).powi(2))
                    .sum::<f64>()
                    .sqrt();
            }
        }
    }
    total / nf
}

/// A local minimum of the metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricMinimum {
    pub t: f64,
    pub value: f64,
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for the minimum of `f` on `[a, b]`.
pub(crate) fn golden_section(mut a: f64, mut b: f64, tol: f64, f: impl Fn(f64) -> Result<f64>) -> Result<(f64, f64)> {
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d)?;
        }
    }
    let t = 0.5 * (a + b);
    Ok((t, f(t)?))
}

impl Trajectory {
    pub fn metric_at(&self, t: f64) -> Result<f64> {
        Ok(rendezvous_metric(&self.state_at(t)?))
    }

    /// Local minima of the metric on `[t0, t1]`: found with a three-point
    /// stencil on `samples` uniform points of the dense output, then refined
    /// by golden-section search.
    pub fn metric_minima(&self, t0: f64, t1: f64, samples: usize) -> Result<Vec<MetricMinimum>> {
        let grid = self.sample(t0, t1, samples.max(3))?;
        let values: Vec<f64> = grid.iter().map(|(_, s)| rendezvous_metric(s)).collect();
        let mut out = Vec::new();
        for i in 1..values.len() - 1 {
            if values[i] < values[i - 1] && values[i] <= values[i + 1] {
                let (t, value) = golden_section(grid[i - 1].0, grid[i + 1].0, 1e-10, |t| self.metric_at(t))?;
                out.push(MetricMinimum { t, value });
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{to_rotated, AgentState, Lambda, ModelParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn original(pos: &[[f64; 2]]) -> SystemState {
        SystemState::new(
            pos.iter().map(|p| AgentState::new(p.to_vec(), 0.0, [1.0, 1.0])).collect(),
            Representation::Original,
        )
        .unwrap()
    }

    #[test]
    fn coincident_agents() {
        assert_eq!(rendezvous_metric(&original(&[[0.4, -1.0]; 4])), 0.0);
    }

    #[test]
    fn agents_at_their_targets() {
        let p = ModelParams::symmetric(3, 1.0, Lambda::Finite(1.0)).unwrap();
        let pos: Vec<[f64; 2]> = p.targets.iter().map(|t| [t[0], t[1]]).collect();
        let x = original(&pos);
        assert!((rendezvous_metric(&x) - 1.0).abs() < 1e-15);
        assert!((rendezvous_metric(&to_rotated(&x).unwrap()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn frames_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 2..9 {
            let pos: Vec<[f64; 2]> = (0..n)
                .map(|_| [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)])
                .collect();
            let x = original(&pos);
            let a = rendezvous_metric(&x);
            let b = rendezvous_metric(&to_rotated(&x).unwrap());
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn golden_section_finds_parabola_vertex() {
        let (t, v) = golden_section(0.0, 3.0, 1e-12, |t| Ok((t - 1.3).powi(2) + 0.5)).unwrap();
        assert!((t - 1.3).abs() < 1e-6 && (v - 0.5).abs() < 1e-12);
    }
}
