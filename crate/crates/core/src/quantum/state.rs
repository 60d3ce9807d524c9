use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::C64;
use crate::error::{Error, Result};

const NORM_TOL: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const EIGEN_TOL: f64 = -1e-10;

/// Normalized state vector on `n` qubits.
///
/// Basis index bit `n - 1 - i` holds site `i`, so site 0 is the most
/// significant bit and `|01⟩` on two sites is index `0b01`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: DVector<C64>,
    n_qubits: usize,
}

impl PureState {
    pub fn new(amplitudes: DVector<C64>, n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > 30 {
            return Err(Error::invalid(format!(
                "unsupported qubit count {n_qubits}"
            )));
        }
        if amplitudes.len() != 1 << n_qubits {
            return Err(Error::invalid(format!(
                "expected {} amplitudes for {n_qubits} qubits, got {}",
                1usize << n_qubits,
                amplitudes.len()
            )));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::invalid(format!("state norm {norm} is not 1")));
        }
        Ok(Self {
            amplitudes,
            n_qubits,
        })
    }

    /// Normalizes `amplitudes` before validating.
    pub fn normalized(amplitudes: DVector<C64>, n_qubits: usize) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::invalid("cannot normalize a zero vector"));
        }
        Self::new(amplitudes.unscale(norm), n_qubits)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        if n_qubits == 0 || index >= 1 << n_qubits {
            return Err(Error::invalid("basis index out of range"));
        }
        let mut amps = DVector::zeros(1 << n_qubits);
        amps[index] = C64::new(1.0, 0.0);
        Self::new(amps, n_qubits)
    }

    /// Haar-random pure state from a seeded complex Gaussian vector.
    pub fn random(n_qubits: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = 1usize << n_qubits;
        let amps = DVector::from_fn(dim, |_, _| {
            C64::new(
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            )
        });
        Self::normalized(amps, n_qubits)
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn inner(&self, other: &PureState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }
}

/// Hermitian, positive semidefinite, unit-trace matrix.
///
/// Any dimension is accepted; [`DensityMatrix::n_qubits`] is `None` unless it is a power of two.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        let dim = matrix.nrows();
        if dim == 0 || matrix.ncols() != dim {
            return Err(Error::invalid(format!(
                "density matrix must be square and non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let mut dev = 0.0f64;
        for i in 0..dim {
            for j in 0..dim {
                dev = dev.max((matrix[(i, j)] - matrix[(j, i)].conj()).norm());
            }
        }
        if dev > HERMITIAN_TOL {
            return Err(Error::invalid(format!(
                "matrix not Hermitian (deviation {dev:e})"
            )));
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > TRACE_TOL || trace.im.abs() > TRACE_TOL {
            return Err(Error::invalid(format!("trace {trace} is not 1")));
        }
        let rho = Self { matrix };
        let min = rho.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if min < EIGEN_TOL {
            return Err(Error::invalid(format!("negative eigenvalue {min:e}")));
        }
        Ok(rho)
    }

    /// Symmetrizes and renormalizes before validating; for outputs of exact
    /// computations that carry rounding noise.
    pub(crate) fn from_raw(matrix: DMatrix<C64>) -> Result<Self> {
        let herm = (&matrix + matrix.adjoint()).scale(0.5);
        let tr = herm.trace().re;
        if tr <= 0.0 {
            return Err(Error::ZeroState);
        }
        Self::new(herm.unscale(tr))
    }

    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::invalid("need at least one qubit"));
        }
        let dim = 1usize << n_qubits;
        Self::new(DMatrix::from_diagonal_element(
            dim,
            dim,
            C64::new(1.0 / dim as f64, 0.0),
        ))
    }

    pub fn from_diagonal(probs: &[f64]) -> Result<Self> {
        let dim = probs.len();
        let diag = DVector::from_iterator(dim, probs.iter().map(|&p| C64::new(p, 0.0)));
        Self::new(DMatrix::from_diagonal(&diag))
    }

    pub fn from_pure(state: &PureState) -> Self {
        let psi = state.amplitudes();
        Self {
            matrix: psi * psi.adjoint(),
        }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn n_qubits(&self) -> Option<usize> {
        let d = self.dim();
        d.is_power_of_two().then(|| d.trailing_zeros() as usize)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self
            .matrix
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }

    /// Global depolarizing channel `(1 - p) ρ + p I / d`.
    pub fn depolarize(&self, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!(
                "depolarizing strength {p} outside [0, 1]"
            )));
        }
        let d = self.dim();
        let mixed = DMatrix::from_diagonal_element(d, d, C64::new(p / d as f64, 0.0));
        Self::from_raw(self.matrix.scale(1.0 - p) + mixed)
    }
}

/// Computational-basis product state `|0101...⟩`.
pub fn neel_state(n: usize) -> Result<PureState> {
    if n == 0 {
        return Err(Error::invalid("Néel state needs n >= 1"));
    }
    // site i (bit n-1-i) is 1 for odd i
    let index = (0..n)
        .filter(|i| i % 2 == 1)
        .fold(0usize, |acc, i| acc | 1 << (n - 1 - i));
    PureState::basis(n, index)
}

/// Reduced density matrix over `subsystem`; the first listed site becomes
/// the most significant bit of the reduced index.
pub fn partial_trace(state: &PureState, subsystem: &[usize]) -> Result<DensityMatrix> {
    let n = state.n_qubits();
    if subsystem.is_empty() {
        return Err(Error::invalid("empty subsystem"));
    }
    let mut seen = vec![false; n];
    for &s in subsystem {
        if s >= n {
            return Err(Error::invalid(format!("site {s} outside [0, {n})")));
        }
        if seen[s] {
            return Err(Error::invalid(format!("site {s} listed twice")));
        }
        seen[s] = true;
    }
    let rest: Vec<usize> = (0..n).filter(|&s| !seen[s]).collect();
    let l = subsystem.len();
    let da = 1usize << l;
    let db = 1usize << rest.len();

    let bit = |idx: usize, site: usize| (idx >> (n - 1 - site)) & 1;
    let mut psi = DMatrix::<C64>::zeros(da, db);
    for (idx, amp) in state.amplitudes().iter().enumerate() {
        let a = subsystem
            .iter()
            .fold(0usize, |acc, &s| (acc << 1) | bit(idx, s));
        let b = rest.iter().fold(0usize, |acc, &s| (acc << 1) | bit(idx, s));
        psi[(a, b)] = *amp;
    }
    DensityMatrix::from_raw(&psi * psi.adjoint())
}

/// `ρ = G G† / Tr(G G†)` with `G` a `dim x rank` complex Gaussian matrix.
pub fn random_density_matrix(dim: usize, rank: usize, seed: u64) -> Result<DensityMatrix> {
    if rank == 0 || rank > dim {
        return Err(Error::invalid(format!("rank {rank} outside [1, {dim}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(dim, rank, |_, _| {
        C64::new(
            StandardNormal.sample(&mut rng),
            StandardNormal.sample(&mut rng),
        )
    });
    DensityMatrix::from_raw(&g * g.adjoint())
}
