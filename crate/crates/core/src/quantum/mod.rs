//! Exact state preparation and entropies used as ground truth.

mod entropy;
mod hamiltonian;
mod lanczos;
mod state;

pub use entropy::{
    exact_entropies, renyi_entropy, renyi_from_spectrum, von_neumann_entropy,
    von_neumann_from_spectrum, ExactEntropies, SPECTRAL_FLOOR,
};
pub use hamiltonian::{
    tfim_ground_state, xy_quench, GroundState, SpinHamiltonian, TfimHamiltonian, XyQuench,
    DEGENERACY_GAP,
};
pub use state::{neel_state, partial_trace, random_density_matrix, DensityMatrix, PureState};

pub type C64 = nalgebra::Complex<f64>;
