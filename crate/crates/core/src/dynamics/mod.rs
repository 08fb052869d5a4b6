//! State types, task potentials, vector fields and the cyclic symmetry of
//! the symmetric configuration.

mod field;
mod params;
mod potentials;
mod rotation;
mod state;
mod symmetry;

pub use field::{from_flat, to_flat, vector_field_full, vector_field_slow, Dynamics, FieldKind, SlowRate};
pub(crate) use field::Chart;
pub use params::{Lambda, ModelParams};
pub use potentials::{task_potential_designated, task_potential_rendezvous, AgentTasks, TaskPotentials};
pub use rotation::{rotation_power, RotationTable};
pub use state::{AgentState, Representation, SystemState, VALUE_SUM_GUARD};
pub use symmetry::{cyclic_shift, from_rotated, in_representation, to_rotated};
