//! The single-qubit Clifford group modulo global phase.

use std::sync::OnceLock;

use nalgebra::Matrix2;

use crate::quantum::C64;

pub const CLIFFORD_COUNT: usize = 24;

pub type Gate = Matrix2<C64>;

/// Fixes the global phase so the first non-negligible entry is real and positive.
fn canonical(u: &Gate) -> Gate {
    let lead = u
        .iter()
        .copied()
        .find(|z| z.norm() > 1e-9)
        .expect("unitary is non-zero");
    u * (lead.conj() / lead.norm())
}

fn same(a: &Gate, b: &Gate) -> bool {
    (a - b).iter().all(|z| z.norm() < 1e-9)
}

fn generate() -> Vec<Gate> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let o = C64::new(0.0, 0.0);
    let h = Gate::new(
        C64::new(r, 0.0),
        C64::new(r, 0.0),
        C64::new(r, 0.0),
        C64::new(-r, 0.0),
    );
    let s = Gate::new(C64::new(1.0, 0.0), o, o, C64::new(0.0, 1.0));
    let mut group = vec![Gate::identity()];
    let mut i = 0;
    while i < group.len() {
        for g in [&h, &s] {
            let next = canonical(&(g * group[i]));
            if !group.iter().any(|x| same(x, &next)) {
                group.push(next);
            }
        }
        i += 1;
    }
    group
}

/// All 24 elements in a fixed order; index 0 is the identity.
pub fn clifford_group() -> &'static [Gate] {
    static GROUP: OnceLock<Vec<Gate>> = OnceLock::new();
    GROUP.get_or_init(generate)
}

/// `3 U†|b⟩⟨b|U − I` for each Clifford `U` and outcome bit `b`.
pub(crate) fn inverse_factors() -> &'static [[Gate; 2]] {
    static TABLE: OnceLock<Vec<[Gate; 2]>> = OnceLock::new();
    TABLE.get_or_init(|| {
        clifford_group()
            .iter()
            .map(|u| {
                [0, 1].map(|b| {
                    let row = u.row(b);
                    let proj = row.adjoint() * row;
                    proj * C64::new(3.0, 0.0) - Gate::identity()
                })
            })
            .collect()
    })
}
