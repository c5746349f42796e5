//! Wavefunction dynamics on a periodic angular grid.

mod classical;
mod eigen;
mod evolve;
mod grid;
mod ground;
mod propagator;
mod state;

pub use classical::{classical_energy, ehrenfest_reference, ClassicalPoint};
pub use eigen::{dense_hamiltonian, stationary_states, Eigenpair, MAX_DENSE_POINTS};
pub use evolve::{
    evolve, evolve_planned, shot_factor, IntensityNoise, Observers, PhotonRefresh, RotorModel,
    Sample, Snapshot, SnapshotAt, Trajectory, EDGE_WARNING,
};
pub use grid::{AngularGrid, Period};
pub use ground::{ground_state, GroundState, GroundStateOptions};
pub use propagator::{
    apply_angular_momentum, apply_hamiltonian, default_dt, energy, energy_parts, step,
    PotentialSamples, SplitStep,
};
pub use state::RotorState;
