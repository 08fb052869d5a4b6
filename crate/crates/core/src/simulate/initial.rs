//! Seeded initial conditions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    in_representation, AgentState, Dynamics, ModelParams, Representation, SystemState,
};
use crate::equilibria::deadlock_equilibrium;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialKind {
    /// All columns equal: the deadlock column perturbed within the
    /// symmetric subspace.
    Symmetric,
    /// Independent random agents.
    Generic,
}

impl std::fmt::Display for InitialKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InitialKind::Symmetric => "symmetric",
            InitialKind::Generic => "generic",
        })
    }
}

impl std::str::FromStr for InitialKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "symmetric" => Ok(InitialKind::Symmetric),
            "generic" => Ok(InitialKind::Generic),
            other => Err(Error::InvalidParameter(format!(
                "unknown initial condition {other:?} (expected symmetric or generic)"
            ))),
        }
    }
}

/// Positions uniform in `[−2, 2]^d` (original frame), motivations uniform
/// in `(−0.9, 0.9)`, values equal to the task potentials plus a uniform
/// `[0, 0.1)` offset.
pub fn generic_initial(params: &ModelParams, seed: u64, repr: Representation) -> Result<SystemState> {
    let dynamics = Dynamics::new(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let agents = (0..params.n_agents)
        .map(|_| {
            let position = (0..params.dimension).map(|_| rng.random_range(-2.0..=2.0)).collect();
            let m = rng.random_range(-0.9..0.9);
            AgentState::new(position, m, [0.0, 0.0])
        })
        .collect();
    let mut x = SystemState::new(agents, Representation::Original)?;
    let phis = dynamics.potentials().all(&x)?;
    for (a, phi) in x.agents.iter_mut().zip(phis) {
        a.values = [phi[0] + rng.random_range(0.0..0.1), phi[1] + rng.random_range(0.0..0.1)];
    }
    in_representation(&x, repr)
}

/// Deadlock column with positions and motivation shifted by uniform
/// `(−0.1, 0.1)` offsets and values by uniform `[0, 0.1)`, copied to every
/// agent.
pub fn symmetric_initial(params: &ModelParams, seed: u64, repr: Representation) -> Result<SystemState> {
    let point = deadlock_equilibrium(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = &point.state.agents[0];
    let column = AgentState::new(
        base.position.iter().map(|p| p + rng.random_range(-0.1..0.1)).collect(),
        base.motivation + rng.random_range(-0.1..0.1),
        [
            base.values[0] + rng.random_range(0.0..0.1),
            base.values[1] + rng.random_range(0.0..0.1),
        ],
    );
    let z = SystemState::new(vec![column; params.n_agents], Representation::Rotated)?;
    in_representation(&z, repr)
}

pub fn initial_condition(
    kind: InitialKind,
    params: &ModelParams,
    seed: u64,
    repr: Representation,
) -> Result<SystemState> {
    match kind {
        InitialKind::Symmetric => symmetric_initial(params, seed, repr),
        InitialKind::Generic => generic_initial(params, seed, repr),
    }
}
