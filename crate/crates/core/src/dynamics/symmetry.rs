use crate::dynamics::rotation::RotationTable;
use crate::dynamics::state::{Representation, SystemState};
use crate::error::{Error, Result};

fn rotate_positions(state: &SystemState, sign: i64, to: Representation) -> Result<SystemState> {
    state.check_shape()?;
    if state.dimension() != 2 {
        return Err(Error::UnsupportedDimension {
            expected: 2,
            found: state.dimension(),
        });
    }
    let table = RotationTable::new(state.n_agents())?;
    let mut out = state.clone();
    for (k, a) in out.agents.iter_mut().enumerate() {
        let r = table.apply(sign * k as i64, [a.position[0], a.position[1]]);
        a.position = r.to_vec();
    }
    out.representation = to;
    Ok(out)
}

/// `y_k = R^{-k} x_k` for 0-based `k`; motivations and values are unchanged.
pub fn to_rotated(state: &SystemState) -> Result<SystemState> {
    state.require_representation(Representation::Original)?;
    rotate_positions(state, -1, Representation::Rotated)
}

/// `x_k = R^{k} y_k`.
pub fn from_rotated(state: &SystemState) -> Result<SystemState> {
    state.require_representation(Representation::Rotated)?;
    rotate_positions(state, 1, Representation::Original)
}

/// Return the state in the requested frame, converting if needed.
pub fn in_representation(state: &SystemState, repr: Representation) -> Result<SystemState> {
    match (state.representation, repr) {
        (a, b) if a == b => Ok(state.clone()),
        (Representation::Original, Representation::Rotated) => to_rotated(state),
        _ => from_rotated(state),
    }
}

/// Apply `γ^shifts` to the agent columns, where `γ` sends column `i` to
/// column `i + 1` (mod N): `(a, b, c) ↦ (c, a, b)`.
pub fn cyclic_shift(state: &SystemState, shifts: i64) -> SystemState {
    let n = state.agents.len();
    if n == 0 {
        return state.clone();
    }
    let s = shifts.rem_euclid(n as i64) as usize;
    let mut agents = state.agents.clone();
    agents.rotate_right(s);
    SystemState {
        agents,
        representation: state.representation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::rotation::rotation_power;
    use crate::dynamics::state::AgentState;

    fn labelled(n: usize) -> SystemState {
        SystemState::new(
            (0..n)
                .map(|k| AgentState::new(vec![k as f64, 0.0], 0.0, [1.0, 1.0]))
                .collect(),
            Representation::Original,
        )
        .unwrap()
    }

    #[test]
    fn shift_by_one() {
        let s = cyclic_shift(&labelled(3), 1);
        let firsts: Vec<f64> = s.agents.iter().map(|a| a.position[0]).collect();
        assert_eq!(firsts, vec![2.0, 0.0, 1.0]);
        assert_eq!(cyclic_shift(&labelled(5), 5), labelled(5));
        assert_eq!(cyclic_shift(&labelled(5), -2), cyclic_shift(&labelled(5), 3));
    }

    #[test]
    fn targets_map_to_unit_vector() {
        for n in 2..8 {
            let agents = (0..n)
                .map(|k| {
                    let r = rotation_power(n, k as i64).unwrap();
                    AgentState::new(vec![r[(0, 0)], r[(1, 0)]], 0.1, [0.2, 0.3])
                })
                .collect();
            let x = SystemState::new(agents, Representation::Original).unwrap();
            let y = to_rotated(&x).unwrap();
            for a in &y.agents {
                assert!((a.position[0] - 1.0).abs() < 1e-14 && a.position[1].abs() < 1e-14);
                assert_eq!(a.motivation, 0.1);
                assert_eq!(a.values, [0.2, 0.3]);
            }
        }
    }

    #[test]
    fn quarter_turn_example() {
        let mut x = labelled(4);
        x.agents[1].position = vec![0.0, 1.0];
        let y = to_rotated(&x).unwrap();
        assert!((y.agents[1].position[0] - 1.0).abs() < 1e-15);
        assert!(y.agents[1].position[1].abs() < 1e-15);
        assert_eq!(y.agents[0].position, x.agents[0].position);
    }

    #[test]
    fn round_trip_and_errors() {
        let mut x = labelled(5);
        x.agents[3].position = vec![0.4, -2.0];
        let back = from_rotated(&to_rotated(&x).unwrap()).unwrap();
        for (a, b) in back.agents.iter().zip(&x.agents) {
            for (p, q) in a.position.iter().zip(&b.position) {
                assert!((p - q).abs() < 1e-14);
            }
        }
        assert!(to_rotated(&to_rotated(&x).unwrap()).is_err());
        let x3 = SystemState::new(
            (0..3).map(|_| AgentState::new(vec![0.0; 3], 0.0, [1.0, 1.0])).collect(),
            Representation::Original,
        )
        .unwrap();
        assert!(matches!(to_rotated(&x3), Err(Error::UnsupportedDimension { .. })));
    }
}
