//! Task potentials: point visitation (task 1) and navigation to the
//! centroid of the other agents (task 2).

use crate::dynamics::params::ModelParams;
use crate::dynamics::rotation::RotationTable;
use crate::dynamics::state::{Representation, SystemState};
use crate::error::{Error, Result};

/// Both task potentials and their forces `F = -∇φ` (gradient taken with
/// respect to the agent's own position).
#[derive(Debug, Clone)]
pub struct TaskPotentials {
    n: usize,
    d: usize,
    targets: Vec<Vec<f64>>,
    rotations: Option<RotationTable>,
}

/// Potentials and forces of one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentTasks {
    pub phi1: f64,
    pub phi2: f64,
    pub force1: Vec<f64>,
    pub force2: Vec<f64>,
}

const UNIT: [f64; 2] = [1.0, 0.0];

impl TaskPotentials {
    pub fn new(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        let rotations = if params.symmetric {
            Some(RotationTable::new(params.n_agents)?)
        } else {
            None
        };
        Ok(TaskPotentials {
            n: params.n_agents,
            d: params.dimension,
            targets: params.targets.clone(),
            rotations,
        })
    }

    pub fn n_agents(&self) -> usize {
        self.n
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub(crate) fn check_frame(&self, repr: Representation) -> Result<()> {
        if repr == Representation::Rotated && self.rotations.is_none() {
            return Err(Error::Unsupported(
                "rotated coordinates require the symmetric configuration".into(),
            ));
        }
        Ok(())
    }

    fn check_state(&self, state: &SystemState) -> Result<()> {
        state.check_shape()?;
        if state.n_agents() != self.n {
            return Err(Error::InvalidParameter(format!(
                "state has {} agents, model has {}",
                state.n_agents(),
                self.n
            )));
        }
        if state.dimension() != self.d {
            return Err(Error::UnsupportedDimension {
                expected: self.d,
                found: state.dimension(),
            });
        }
        self.check_frame(state.representation)
    }

    /// Mean of the other agents as seen by agent `k`, written into `out`.
    /// `pos` holds all positions back to back.
    pub(crate) fn others_mean(&self, repr: Representation, pos: &[f64], k: usize, out: &mut [f64]) {
        let d = self.d;
        out.iter_mut().for_each(|x| *x = 0.0);
        match (repr, &self.rotations) {
            (Representation::Rotated, Some(rot)) => {
                for j in (0..self.n).filter(|&j| j != k) {
                    let r = rot.apply(j as i64 - k as i64, [pos[2 * j], pos[2 * j + 1]]);
                    out[0] += r[0];
                    out[1] += r[1];
                }
            }
            _ => {
                for j in (0..self.n).filter(|&j| j != k) {
                    for (o, x) in out.iter_mut().zip(&pos[j * d..(j + 1) * d]) {
                        *o += x;
                    }
                }
            }
        }
        let scale = 1.0 / (self.n as f64 - 1.0);
        out.iter_mut().for_each(|x| *x *= scale);
    }

    fn target(&self, repr: Representation, k: usize) -> &[f64] {
        match repr {
            Representation::Rotated => &UNIT,
            Representation::Original => &self.targets[k],
        }
    }

    /// Potentials of agent `k` only (no forces); `scratch` must have length `d`.
    pub(crate) fn potentials_flat(
        &self,
        repr: Representation,
        pos: &[f64],
        k: usize,
        scratch: &mut [f64],
    ) -> (f64, f64) {
        let d = self.d;
        let p = &pos[k * d..(k + 1) * d];
        self.others_mean(repr, pos, k, scratch);
        let target = self.target(repr, k);
        let phi1 = 0.5 * p.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        let n = self.n as f64;
        let phi2 = (n - 1.0) / (2.0 * n)
            * p.iter().zip(scratch.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        (phi1, phi2)
    }

    /// Potentials and forces of agent `k`; forces are written to `f1`, `f2`.
    pub(crate) fn tasks_flat(
        &self,
        repr: Representation,
        pos: &[f64],
        k: usize,
        f1: &mut [f64],
        f2: &mut [f64],
    ) -> (f64, f64) {
        let d = self.d;
        let n = self.n as f64;
        let p = &pos[k * d..(k + 1) * d];
        self.others_mean(repr, pos, k, f2);
        let target = self.target(repr, k);
        let mut phi1 = 0.0;
        let mut phi2 = 0.0;
        for i in 0..d {
            let e1 = p[i] - target[i];
            let e2 = p[i] - f2[i];
            phi1 += e1 * e1;
            phi2 += e2 * e2;
            f1[i] = -e1;
            f2[i] = -(n - 1.0) / n * e2;
        }
        (0.5 * phi1, (n - 1.0) / (2.0 * n) * phi2)
    }

    pub(crate) fn positions(state: &SystemState) -> Vec<f64> {
        state.agents.iter().flat_map(|a| a.position.iter().copied()).collect()
    }

    /// Potentials and forces of agent `k`.
    pub fn agent_tasks(&self, state: &SystemState, k: usize) -> Result<AgentTasks> {
        self.check_state(state)?;
        if k >= self.n {
            return Err(Error::IndexOutOfRange { index: k, len: self.n });
        }
        let pos = Self::positions(state);
        let mut force1 = vec![0.0; self.d];
        let mut force2 = vec![0.0; self.d];
        let (phi1, phi2) = self.tasks_flat(state.representation, &pos, k, &mut force1, &mut force2);
        Ok(AgentTasks {
            phi1,
            phi2,
            force1,
            force2,
        })
    }

    /// `½‖x_k − x*_k‖²`, or `½‖y_k − u‖²` in rotated coordinates.
    pub fn designated(&self, state: &SystemState, k: usize) -> Result<f64> {
        Ok(self.agent_tasks(state, k)?.phi1)
    }

    /// `(N−1)/(2N)·‖x_k − mean of the others‖²`.
    pub fn rendezvous(&self, state: &SystemState, k: usize) -> Result<f64> {
        Ok(self.agent_tasks(state, k)?.phi2)
    }

    /// `(φ1, φ2)` for every agent.
    pub fn all(&self, state: &SystemState) -> Result<Vec<[f64; 2]>> {
        self.check_state(state)?;
        let pos = Self::positions(state);
        let mut scratch = vec![0.0; self.d];
        Ok((0..self.n)
            .map(|k| {
                let (a, b) = self.potentials_flat(state.representation, &pos, k, &mut scratch);
                [a, b]
            })
            .collect())
    }
}

pub fn task_potential_designated(state: &SystemState, k: usize, params: &ModelParams) -> Result<f64> {
    TaskPotentials::new(params)?.designated(state, k)
}

pub fn task_potential_rendezvous(state: &SystemState, k: usize, params: &ModelParams) -> Result<f64> {
    TaskPotentials::new(params)?.rendezvous(state, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::params::Lambda;
    use crate::dynamics::state::AgentState;

    fn rotated(n: usize, pos: &[[f64; 2]]) -> SystemState {
        SystemState::new(
            (0..n)
                .map(|k| AgentState::new(pos[k].to_vec(), 0.0, [1.0, 1.0]))
                .collect(),
            Representation::Rotated,
        )
        .unwrap()
    }

    #[test]
    fn designated_examples() {
        let p = ModelParams::symmetric(3, 1.0, Lambda::Finite(1.0)).unwrap();
        let s = rotated(3, &[[0.0, 0.0], [1.0, 0.0], [1.0, 0.0]]);
        assert_eq!(task_potential_designated(&s, 0, &p).unwrap(), 0.5);
        assert_eq!(task_potential_designated(&s, 1, &p).unwrap(), 0.0);
        assert!(matches!(
            task_potential_designated(&s, 3, &p),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn rendezvous_hand_value() {
        // agent 0 sees the mean of R y_1 and R^2 y_2, which is (-1/2, 0)
        let p = ModelParams::symmetric(3, 1.0, Lambda::Finite(1.0)).unwrap();
        let s = rotated(3, &[[1.0, 0.0], [1.0, 0.0], [1.0, 0.0]]);
        let v = task_potential_rendezvous(&s, 0, &p).unwrap();
        assert!((v - 0.75).abs() < 1e-15, "{v}");
    }

    #[test]
    fn coincident_agents_have_zero_rendezvous_cost() {
        let p = ModelParams::general(
            1.0,
            Lambda::Finite(1.0),
            vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
        )
        .unwrap();
        let s = SystemState::new(
            (0..3)
                .map(|_| AgentState::new(vec![0.3, -0.1, 2.0], 0.0, [1.0, 1.0]))
                .collect(),
            Representation::Original,
        )
        .unwrap();
        for k in 0..3 {
            assert_eq!(task_potential_rendezvous(&s, k, &p).unwrap(), 0.0);
        }
    }

    #[test]
    fn rotated_frame_needs_symmetric_params() {
        let p = ModelParams::general(
            1.0,
            Lambda::Finite(1.0),
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0]],
        )
        .unwrap();
        let s = rotated(3, &[[1.0, 0.0], [1.0, 0.0], [1.0, 0.0]]);
        assert!(task_potential_designated(&s, 0, &p).is_err());
    }

    #[test]
    fn forces_match_finite_difference_gradients() {
        let p = ModelParams::symmetric(4, 1.0, Lambda::Finite(1.0)).unwrap();
        let tp = TaskPotentials::new(&p).unwrap();
        let base = rotated(4, &[[0.3, -0.7], [1.2, 0.4], [-0.5, 0.9], [0.05, -1.3]]);
        let h = 1e-6;
        for repr in [Representation::Rotated, Representation::Original] {
            let mut base = base.clone();
            base.representation = repr;
            for k in 0..4 {
                let t = tp.agent_tasks(&base, k).unwrap();
                for i in 0..2 {
                    let mut plus = base.clone();
                    let mut minus = base.clone();
                    plus.agents[k].position[i] += h;
                    minus.agents[k].position[i] -= h;
                    let tp_ = |s: &SystemState| tp.agent_tasks(s, k).unwrap();
                    let g1 = (tp_(&plus).phi1 - tp_(&minus).phi1) / (2.0 * h);
                    let g2 = (tp_(&plus).phi2 - tp_(&minus).phi2) / (2.0 * h);
                    let rel = |f: f64, g: f64| (f + g).abs() / g.abs().max(1e-3);
                    assert!(rel(t.force1[i], g1) < 1e-6);
                    assert!(rel(t.force2[i], g2) < 1e-6);
                }
            }
        }
    }
}
