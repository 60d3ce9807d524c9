use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::lanczos::lowest_eigenpair;
use super::{neel_state, PureState, C64};
use crate::error::{Error, Result};

/// Ground spaces with a gap below this are reported as degenerate.
pub const DEGENERACY_GAP: f64 = 1e-10;

const MAX_TFIM_SITES: usize = 14;
const MAX_XY_SITES: usize = 12;

/// Long-range XY chain `Σ_{i<j} J_ij (σ⁺σ⁻ + σ⁻σ⁺) + B Σ σᶻ` with open ends.
///
/// Couplings and field are angular frequencies in s⁻¹; times are in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinHamiltonian {
    n: usize,
    couplings: DMatrix<f64>,
    field: f64,
    exponent: Option<f64>,
}

impl SpinHamiltonian {
    /// `J_ij = j / |i - j|^exponent`.
    pub fn power_law(n: usize, j: f64, field: f64, exponent: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("need at least one site"));
        }
        let couplings = DMatrix::from_fn(n, n, |a, b| {
            if a == b {
                0.0
            } else {
                j / (a.abs_diff(b) as f64).powf(exponent)
            }
        });
        Ok(Self {
            n,
            couplings,
            field,
            exponent: Some(exponent),
        })
    }

    pub fn from_couplings(couplings: DMatrix<f64>, field: f64) -> Result<Self> {
        let n = couplings.nrows();
        if n == 0 || couplings.ncols() != n {
            return Err(Error::invalid(
                "coupling table must be square and non-empty",
            ));
        }
        for a in 0..n {
            if couplings[(a, a)] != 0.0 {
                return Err(Error::invalid("self-couplings J_ii must vanish"));
            }
            for b in 0..a {
                if couplings[(a, b)] != couplings[(b, a)] {
                    return Err(Error::invalid("coupling table must be symmetric"));
                }
            }
        }
        Ok(Self {
            n,
            couplings,
            field,
            exponent: None,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings[(i, j)]
    }

    pub fn field(&self) -> f64 {
        self.field
    }

    pub fn exponent(&self) -> Option<f64> {
        self.exponent
    }

    fn diagonal(&self, idx: usize) -> f64 {
        // σᶻ|0⟩ = +|0⟩
        self.field * (self.n as f64 - 2.0 * idx.count_ones() as f64)
    }

    /// `H ψ` on the full `2^n` space.
    pub fn apply(&self, psi: &DVector<C64>) -> DVector<C64> {
        let n = self.n;
        let mut out = DVector::zeros(psi.len());
        for (idx, &amp) in psi.iter().enumerate() {
            if amp == C64::new(0.0, 0.0) {
                continue;
            }
            out[idx] += amp * self.diagonal(idx);
            for a in 0..n {
                for b in (a + 1)..n {
                    let (ba, bb) = (n - 1 - a, n - 1 - b);
                    if ((idx >> ba) ^ (idx >> bb)) & 1 == 1 {
                        let flipped = idx ^ (1 << ba) ^ (1 << bb);
                        out[flipped] += amp * self.couplings[(a, b)];
                    }
                }
            }
        }
        out
    }

    pub fn energy(&self, state: &PureState) -> f64 {
        state.amplitudes().dotc(&self.apply(state.amplitudes())).re
    }

    /// Dense block of `H` in the sector with `ones` excitations, with its basis.
    fn sector(&self, ones: u32) -> (Vec<usize>, DMatrix<f64>) {
        let n = self.n;
        let basis: Vec<usize> = (0..1usize << n)
            .filter(|i| i.count_ones() == ones)
            .collect();
        let lookup: BTreeMap<usize, usize> =
            basis.iter().enumerate().map(|(p, &i)| (i, p)).collect();
        let dim = basis.len();
        let mut h = DMatrix::zeros(dim, dim);
        for (p, &idx) in basis.iter().enumerate() {
            h[(p, p)] = self.diagonal(idx);
            for a in 0..n {
                for b in (a + 1)..n {
                    let (ba, bb) = (n - 1 - a, n - 1 - b);
                    if ((idx >> ba) ^ (idx >> bb)) & 1 == 1 {
                        let q = lookup[&(idx ^ (1 << ba) ^ (1 << bb))];
                        h[(q, p)] += self.couplings[(a, b)];
                    }
                }
            }
        }
        (basis, h)
    }
}

struct SectorEvolution {
    basis: Vec<usize>,
    energies: DVector<f64>,
    vectors: DMatrix<f64>,
    initial: DVector<C64>,
}

/// Exact time evolution of a fixed initial state by eigendecomposition of each
/// magnetization sector it occupies.
pub struct XyQuench {
    n: usize,
    sectors: Vec<SectorEvolution>,
}

impl XyQuench {
    pub fn new(ham: &SpinHamiltonian, initial: &PureState) -> Result<Self> {
        let n = ham.n_sites();
        if n > MAX_XY_SITES {
            return Err(Error::invalid(format!(
                "XY quench limited to {MAX_XY_SITES} sites, got {n}"
            )));
        }
        if initial.n_qubits() != n {
            return Err(Error::invalid("initial state and Hamiltonian sizes differ"));
        }
        let amps = initial.amplitudes();
        let mut sectors = Vec::new();
        for ones in 0..=n as u32 {
            let occupied = amps
                .iter()
                .enumerate()
                .any(|(i, a)| i.count_ones() == ones && a.norm() > 0.0);
            if !occupied {
                continue;
            }
            let (basis, h) = ham.sector(ones);
            let eig = SymmetricEigen::new(h);
            let local = DVector::from_iterator(basis.len(), basis.iter().map(|&i| amps[i]));
            let vt = eig.eigenvectors.transpose().map(|x| C64::new(x, 0.0));
            sectors.push(SectorEvolution {
                basis,
                energies: eig.eigenvalues,
                vectors: eig.eigenvectors,
                initial: vt * local,
            });
        }
        Ok(Self { n, sectors })
    }

    /// `exp(-i H t) |ψ₀⟩` with `t` in seconds.
    pub fn state_at(&self, t: f64) -> Result<PureState> {
        if !(t >= 0.0) {
            return Err(Error::invalid(format!("evolution time {t} must be >= 0")));
        }
        let mut out = DVector::zeros(1 << self.n);
        for s in &self.sectors {
            let phased = DVector::from_fn(s.energies.len(), |r, _| {
                s.initial[r] * C64::from_polar(1.0, -s.energies[r] * t)
            });
            let local = s.vectors.map(|x| C64::new(x, 0.0)) * phased;
            for (p, &idx) in s.basis.iter().enumerate() {
                out[idx] = local[p];
            }
        }
        PureState::normalized(out, self.n)
    }
}

/// Néel state evolved for `t` seconds under the power-law XY chain.
pub fn xy_quench(n: usize, j: f64, field: f64, exponent: f64, t: f64) -> Result<PureState> {
    let ham = SpinHamiltonian::power_law(n, j, field, exponent)?;
    XyQuench::new(&ham, &neel_state(n)?)?.state_at(t)
}

/// Open transverse-field Ising chain `-J Σ σᶻσᶻ - h Σ σˣ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TfimHamiltonian {
    pub n: usize,
    pub j: f64,
    pub h: f64,
}

impl TfimHamiltonian {
    pub fn apply(&self, psi: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        DVector::from_fn(psi.len(), |idx, _| {
            let mut acc = 0.0;
            for s in 0..n.saturating_sub(1) {
                let same = ((idx >> (n - 1 - s)) ^ (idx >> (n - 2 - s))) & 1 == 0;
                acc -= self.j * if same { 1.0 } else { -1.0 } * psi[idx];
            }
            for s in 0..n {
                acc -= self.h * psi[idx ^ (1 << (n - 1 - s))];
            }
            acc
        })
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let dim = 1usize << self.n;
        let mut m = DMatrix::zeros(dim, dim);
        for c in 0..dim {
            let mut e = DVector::zeros(dim);
            e[c] = 1.0;
            m.set_column(c, &self.apply(&e));
        }
        m
    }
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub state: PureState,
    pub energy: f64,
    /// Lowest eigenvalue orthogonal to the returned ground state.
    pub next_energy: f64,
    /// Set when `next_energy - energy` falls below [`DEGENERACY_GAP`].
    pub degenerate: bool,
}

/// Ground state of the open transverse-field Ising chain.
pub fn tfim_ground_state(n: usize, j: f64, h: f64) -> Result<GroundState> {
    if n == 0 || n > MAX_TFIM_SITES {
        return Err(Error::invalid(format!(
            "TFIM size {n} outside [1, {MAX_TFIM_SITES}]"
        )));
    }
    let ham = TfimHamiltonian { n, j, h };
    let dim = 1usize << n;
    // Perron-Frobenius: for h >= 0 the ground state is non-negative in the
    // computational basis, for h < 0 it carries the sign (-1)^popcount.
    let start = DVector::from_fn(dim, |i, _| {
        if h < 0.0 && i.count_ones() % 2 == 1 {
            -1.0
        } else {
            1.0
        }
    });
    let ground = lowest_eigenpair(dim, |v| ham.apply(v), start, &[], 1e-13)?;

    let next_energy = if dim > 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x7f1a);
        let probe = DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
        lowest_eigenpair(
            dim,
            |v| ham.apply(v),
            probe,
            std::slice::from_ref(&ground.vector),
            1e-13,
        )?
        .value
    } else {
        f64::INFINITY
    };

    let amps = ground.vector.map(|x| C64::new(x, 0.0));
    Ok(GroundState {
        state: PureState::normalized(amps, n)?,
        energy: ground.value,
        next_energy,
        degenerate: next_energy - ground.value < DEGENERACY_GAP,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{partial_trace, von_neumann_entropy};

    #[test]
    fn power_law_couplings() {
        let h = SpinHamiltonian::power_law(5, 420.0, 1e4, 1.2).unwrap();
        for i in 0..5 {
            assert_eq!(h.coupling(i, i), 0.0);
            for j in 0..5 {
                assert_eq!(h.coupling(i, j), h.coupling(j, i));
                if i != j {
                    let want = 420.0 / (i.abs_diff(j) as f64).powf(1.2);
                    assert!((h.coupling(i, j) - want).abs() < 1e-12);
                }
            }
        }
        let mut bad = DMatrix::zeros(2, 2);
        bad[(0, 1)] = 1.0;
        assert!(SpinHamiltonian::from_couplings(bad, 0.0).is_err());
    }

    #[test]
    fn decoupled_tfim_is_product_state() {
        let g = tfim_ground_state(2, 0.0, 1.0).unwrap();
        assert!(!g.degenerate);
        assert!((g.energy + 2.0).abs() < 1e-12);
        for a in g.state.amplitudes().iter() {
            assert!((a.norm() - 0.5).abs() < 1e-12);
        }
        let rho = partial_trace(&g.state, &[0]).unwrap();
        assert!(von_neumann_entropy(&rho).unwrap().abs() < 1e-10);
    }

    #[test]
    fn classical_ising_is_flagged_degenerate() {
        let g = tfim_ground_state(2, 1.0, 0.0).unwrap();
        assert!(g.degenerate);
        assert!((g.energy + 1.0).abs() < 1e-12);
    }

    #[test]
    fn lanczos_ground_state_matches_dense() {
        for (n, j, h) in [(6, 1.0, 0.5), (7, 1.0, 1.3), (5, -0.7, -0.4)] {
            let ham = TfimHamiltonian { n, j, h };
            let dense = SymmetricEigen::new(ham.dense());
            let mut ev: Vec<f64> = dense.eigenvalues.iter().copied().collect();
            ev.sort_by(f64::total_cmp);
            let g = tfim_ground_state(n, j, h).unwrap();
            assert!(
                (g.energy - ev[0]).abs() < 1e-10,
                "{} vs {}",
                g.energy,
                ev[0]
            );
            assert!((g.next_energy - ev[1]).abs() < 1e-8);
        }
    }

    #[test]
    fn quench_at_zero_time_is_identity() {
        let psi = xy_quench(6, 420.0, 1e4, 1.2, 0.0).unwrap();
        let neel = neel_state(6).unwrap();
        assert!((psi.inner(&neel).norm() - 1.0).abs() < 1e-12);
        let rho = partial_trace(&psi, &[0, 1, 2]).unwrap();
        assert!(von_neumann_entropy(&rho).unwrap() < 1e-10);
    }

    #[test]
    fn sector_evolution_matches_full_space_generator() {
        let ham = SpinHamiltonian::power_law(4, 420.0, 3000.0, 1.2).unwrap();
        let q = XyQuench::new(&ham, &neel_state(4).unwrap()).unwrap();
        let dt = 1e-7;
        let a = q.state_at(1e-3).unwrap();
        let b = q.state_at(1e-3 + dt).unwrap();
        // i dψ/dt = H ψ
        let deriv = (b.amplitudes() - a.amplitudes()).unscale(dt) * C64::new(0.0, 1.0);
        let hpsi = ham.apply(a.amplitudes());
        let scale = hpsi.norm();
        assert!((deriv - hpsi).norm() / scale < 1e-4);
    }
}
