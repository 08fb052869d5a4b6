use crate::error::{Error, Result};

/// Values below this sum make the normalized value difference undefined.
pub const VALUE_SUM_GUARD: f64 = 1e-12;

/// Coordinate frame of the stored positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Representation {
    /// Physical positions `x_k`.
    Original,
    /// Co-rotating positions `y_k = R^{-k} x_k` (0-based `k`).
    Rotated,
}

/// State of a single agent: position, motivation and the two task values.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub position: Vec<f64>,
    pub motivation: f64,
    pub values: [f64; 2],
}

impl AgentState {
    pub fn new(position: Vec<f64>, motivation: f64, values: [f64; 2]) -> Self {
        AgentState {
            position,
            motivation,
            values,
        }
    }

    /// Normalized value difference `(v1 - v2) / (v1 + v2)`.
    pub fn alpha(&self) -> Option<f64> {
        normalized_difference(self.values[0], self.values[1])
    }
}

pub(crate) fn normalized_difference(a: f64, b: f64) -> Option<f64> {
    let sum = a + b;
    (sum >= VALUE_SUM_GUARD).then(|| (a - b) / sum)
}

/// Column-stacked states of all agents.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub agents: Vec<AgentState>,
    pub representation: Representation,
}

impl SystemState {
    pub fn new(agents: Vec<AgentState>, representation: Representation) -> Result<Self> {
        let state = SystemState {
            agents,
            representation,
        };
        state.check_shape()?;
        Ok(state)
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn dimension(&self) -> usize {
        self.agents.first().map_or(0, |a| a.position.len())
    }

    /// Number of agents and common dimension. Does not check motivation or
    /// value bounds, so it also accepts time derivatives.
    pub fn check_shape(&self) -> Result<()> {
        if self.agents.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 agents, got {}",
                self.agents.len()
            )));
        }
        let d = self.dimension();
        if d == 0 {
            return Err(Error::InvalidParameter("empty position vector".into()));
        }
        if let Some(a) = self.agents.iter().find(|a| a.position.len() != d) {
            return Err(Error::UnsupportedDimension {
                expected: d,
                found: a.position.len(),
            });
        }
        Ok(())
    }

    /// Shape plus the physical invariants: `|m| <= 1`, non-negative values,
    /// finite entries.
    pub fn validate(&self) -> Result<()> {
        self.check_shape()?;
        for (k, a) in self.agents.iter().enumerate() {
            let finite = a.position.iter().all(|x| x.is_finite())
                && a.motivation.is_finite()
                && a.values.iter().all(|v| v.is_finite());
            if !finite {
                return Err(Error::InvalidParameter(format!("agent {k} has non-finite entries")));
            }
            if a.motivation.abs() > 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "agent {k} motivation {} outside [-1, 1]",
                    a.motivation
                )));
            }
            if a.values.iter().any(|&v| v < 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "agent {k} has negative values {:?}",
                    a.values
                )));
            }
        }
        Ok(())
    }

    pub fn motivations(&self) -> Vec<f64> {
        self.agents.iter().map(|a| a.motivation).collect()
    }

    /// Normalized value differences of all agents.
    pub fn alphas(&self) -> Result<Vec<f64>> {
        self.agents
            .iter()
            .enumerate()
            .map(|(k, a)| {
                a.alpha().ok_or(Error::SingularValueState {
                    agent: k,
                    sum: a.values[0] + a.values[1],
                })
            })
            .collect()
    }

    /// Flat row `(x_1, m_1, v_11, v_12, x_2, …)`; for planar states this is
    /// the CSV layout `y1x, y1y, m1, v11, v12, …`.
    pub fn to_row(&self) -> Vec<f64> {
        let mut row = Vec::with_capacity(self.agents.len() * (self.dimension() + 3));
        for a in &self.agents {
            row.extend_from_slice(&a.position);
            row.push(a.motivation);
            row.extend_from_slice(&a.values);
        }
        row
    }

    /// Inverse of [`SystemState::to_row`].
    pub fn from_row(
        row: &[f64],
        n_agents: usize,
        dimension: usize,
        representation: Representation,
    ) -> Result<Self> {
        let stride = dimension + 3;
        if row.len() != n_agents * stride {
            return Err(Error::InvalidParameter(format!(
                "row of length {} does not hold {n_agents} agents of dimension {dimension}",
                row.len()
            )));
        }
        let agents = row
            .chunks_exact(stride)
            .map(|c| AgentState::new(c[..dimension].to_vec(), c[dimension], [c[dimension + 1], c[dimension + 2]]))
            .collect();
        SystemState::new(agents, representation)
    }

    /// Largest Euclidean distance between any two agent columns.
    pub fn column_spread(&self) -> f64 {
        let cols: Vec<Vec<f64>> = self
            .agents
            .iter()
            .map(|a| {
                let mut c = a.position.clone();
                c.push(a.motivation);
                c.extend_from_slice(&a.values);
                c
            })
            .collect();
        let mut worst = 0.0_f64;
        for i in 0..cols.len() {
            for j in i + 1..cols.len() {
                let d = cols[i]
                    .iter()
                    .zip(&cols[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Max-norm over all entries.
    pub fn max_abs(&self) -> f64 {
        self.to_row().iter().fold(0.0, |a, x| a.max(x.abs()))
    }

    pub(crate) fn require_representation(&self, expected: Representation) -> Result<()> {
        if self.representation == expected {
            Ok(())
        } else {
            Err(Error::RepresentationMismatch {
                expected,
                found: self.representation,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SystemState {
        SystemState::new(
            vec![
                AgentState::new(vec![0.1, 0.2], 0.3, [0.4, 0.5]),
                AgentState::new(vec![1.1, 1.2], -0.3, [1.4, 1.5]),
                AgentState::new(vec![2.1, 2.2], 0.0, [2.4, 2.5]),
            ],
            Representation::Rotated,
        )
        .unwrap()
    }

    #[test]
    fn row_layout() {
        let s = sample();
        let row = s.to_row();
        assert_eq!(&row[..5], &[0.1, 0.2, 0.3, 0.4, 0.5]);
        assert_eq!(row.len(), 15);
        assert_eq!(SystemState::from_row(&row, 3, 2, Representation::Rotated).unwrap(), s);
    }

    #[test]
    fn validation_catches_violations() {
        let mut s = sample();
        assert!(s.validate().is_ok());
        s.agents[0].motivation = 1.5;
        assert!(s.validate().is_err());
        let mut s = sample();
        s.agents[1].values[0] = -0.1;
        assert!(s.validate().is_err());
        let mut s = sample();
        s.agents[2].position.push(0.0);
        assert!(s.check_shape().is_err());
    }

    #[test]
    fn alpha_guard() {
        let a = AgentState::new(vec![0.0, 0.0], 0.0, [0.0, 0.0]);
        assert!(a.alpha().is_none());
        let a = AgentState::new(vec![0.0, 0.0], 0.0, [3.0, 1.0]);
        assert_eq!(a.alpha(), Some(0.5));
    }

    #[test]
    fn spread_of_equal_columns_is_zero() {
        let a = AgentState::new(vec![0.3, -0.2], 0.1, [0.2, 0.7]);
        let s = SystemState::new(vec![a.clone(), a.clone(), a], Representation::Rotated).unwrap();
        assert_eq!(s.column_spread(), 0.0);
        assert!(sample().column_spread() > 3.0);
    }
}
