//! Poincaré section of `α(t)` through the plane `α · (1, 1, 1) = 0`.

use serde::Serialize;

use crate::dynamics::SystemState;
use crate::error::{Error, Result};
use crate::simulate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    fn of(j: usize) -> Self {
        if j % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

impl std::fmt::Display for Parity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub j: usize,
    pub tau: f64,
    pub alpha: [f64; 3],
    pub parity: Parity,
    /// `+1` when `α · (1, 1, 1)` goes from negative to positive.
    pub direction: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoincareSection {
    pub normal: [f64; 3],
    pub crossings: Vec<Crossing>,
}

/// Refinement stops once the bracket is this narrow.
pub const CROSSING_TIME_TOL: f64 = 1e-12;
const SUBSAMPLES: usize = 8;

fn alpha3(state: &SystemState) -> Result<[f64; 3]> {
    let a = state.alphas()?;
    Ok([a[0], a[1], a[2]])
}

fn section_value(traj: &Trajectory, t: f64) -> Result<f64> {
    Ok(alpha3(&traj.state_at(t)?)?.iter().sum())
}

/// Crossings with `t ≥ t_start`, numbered from 0.
pub fn poincare_section_from(traj: &Trajectory, t_start: f64) -> Result<PoincareSection> {
    if traj.n_agents != 3 {
        return Err(Error::Unsupported(format!(
            "the section lives in a 3-dimensional alpha space; got {} agents",
            traj.n_agents
        )));
    }
    let mut crossings = Vec::new();
    for seg in &traj.dense_segments {
        if seg.t1() < t_start {
            continue;
        }
        let a = seg.t0.max(t_start);
        let b = seg.t1();
        let mut t_prev = a;
        let mut g_prev = section_value(traj, a)?;
        for i in 1..=SUBSAMPLES {
            let t = if i == SUBSAMPLES { b } else { a + (b - a) * i as f64 / SUBSAMPLES as f64 };
            let g = section_value(traj, t)?;
            // a sign change, counting an exact zero at the right end only
            if (g_prev < 0.0 && g >= 0.0) || (g_prev > 0.0 && g <= 0.0) {
                let direction: i8 = if g_prev < 0.0 { 1 } else { -1 };
                let (mut lo, mut hi) = (t_prev, t);
                while hi - lo > CROSSING_TIME_TOL {
                    let mid = 0.5 * (lo + hi);
                    let gm = section_value(traj, mid)?;
                    if (gm < 0.0) == (g_prev < 0.0) && gm != 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let (g_lo, g_hi) = (section_value(traj, lo)?, section_value(traj, hi)?);
                let tau = if g_lo.abs() < g_hi.abs() { lo } else { hi };
                let j = crossings.len();
                crossings.push(Crossing {
                    j,
                    tau,
                    alpha: alpha3(&traj.state_at(tau)?)?,
                    parity: Parity::of(j),
                    direction,
                });
            }
            t_prev = t;
            g_prev = g;
        }
    }
    if crossings.len() < 2 {
        crossings.clear();
    }
    Ok(PoincareSection {
        normal: [1.0, 1.0, 1.0],
        crossings,
    })
}

/// All crossings of the trajectory.
pub fn poincare_section(traj: &Trajectory) -> Result<PoincareSection> {
    poincare_section_from(traj, traj.t_start())
}

/// How well the even and odd crossings separate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClusterSeparation {
    /// Smallest distance between an even and an odd crossing.
    pub min_between: f64,
    /// Largest distance from a crossing to its nearest same-parity neighbour.
    pub max_nearest_within: f64,
}

impl ClusterSeparation {
    pub fn disjoint(&self) -> bool {
        self.min_between > self.max_nearest_within
    }
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

impl PoincareSection {
    pub fn by_parity(&self, parity: Parity) -> Vec<&Crossing> {
        self.crossings.iter().filter(|c| c.parity == parity).collect()
    }

    /// `max |α(τ_j) · (1, 1, 1)|`.
    pub fn max_residual(&self) -> f64 {
        self.crossings
            .iter()
            .map(|c| c.alpha.iter().zip(&self.normal).map(|(a, n)| a * n).sum::<f64>().abs())
            .fold(0.0, f64::max)
    }

    pub fn directions_alternate(&self) -> bool {
        self.crossings.windows(2).all(|w| w[0].direction == -w[1].direction)
    }

    /// `None` when either parity has fewer than two crossings.
    pub fn cluster_separation(&self) -> Option<ClusterSeparation> {
        let even = self.by_parity(Parity::Even);
        let odd = self.by_parity(Parity::Odd);
        if even.len() < 2 || odd.len() < 2 {
            return None;
        }
        let mut min_between = f64::INFINITY;
        for e in &even {
            for o in &odd {
                min_between = min_between.min(dist(&e.alpha, &o.alpha));
            }
        }
        let nearest = |set: &[&Crossing]| {
            set.iter()
                .enumerate()
                .map(|(i, c)| {
                    set.iter()
                        .enumerate()
                        .filter(|(k, _)| *k != i)
                        .map(|(_, d)| dist(&c.alpha, &d.alpha))
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max)
        };
        Some(ClusterSeparation {
            min_between,
            max_nearest_within: nearest(&even).max(nearest(&odd)),
        })
    }
}
