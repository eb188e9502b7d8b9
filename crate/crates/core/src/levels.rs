//! Fixed basis orderings. Every module indexes levels through these constants.

use nalgebra::DMatrix;

use crate::qsim::{cr, subspace_ry, Operator, Subsystem, C64};

pub const SPIN: &str = "spin";

/// Spin levels of the emitter, in basis order.
pub mod spin {
    pub const DIM: usize = 7;
    /// m_s = 0 ground level, qubit |0⟩
    pub const G0: usize = 0;
    /// m_s = −1 ground level, qubit |−1⟩
    pub const GM: usize = 1;
    /// m_s = +1 ground level
    pub const GP: usize = 2;
    pub const E0: usize = 3;
    pub const EM: usize = 4;
    pub const EP: usize = 5;
    /// metastable singlet
    pub const MS: usize = 6;

    pub const GROUND: [usize; 3] = [G0, GM, GP];
    pub const EXCITED: [usize; 3] = [E0, EM, EP];

    /// Ground level an excited level decays to without spin mixing.
    pub fn ground_of(excited: usize) -> usize {
        excited - 3
    }
}

/// Polarization qubit: |H⟩, |V⟩.
pub mod pol {
    pub const H: usize = 0;
    pub const V: usize = 1;
}

/// Time-bin occupation: vacuum or one photon.
pub mod bin {
    pub const VAC: usize = 0;
    pub const ONE: usize = 1;
}

pub fn spin_subsystem() -> Subsystem {
    Subsystem { label: SPIN.to_string(), dim: spin::DIM }
}

pub fn qubit_subsystem(label: &str) -> Subsystem {
    Subsystem { label: label.to_string(), dim: 2 }
}

/// Microwave rotation `R_y(θ)` on the {|0⟩, |−1⟩} qubit of the spin, identity on
/// the other levels. `R_y(π/2)|−1⟩ = (|−1⟩ − |0⟩)/√2`.
pub fn ry(theta: f64) -> Operator {
    Operator {
        matrix: subspace_ry(theta, spin::DIM, spin::G0, spin::GM),
        targets: vec![SPIN.to_string()],
    }
}

/// Same rotation on a bare 2-level spin (basis |0⟩, |−1⟩).
pub fn ry_qubit(theta: f64, label: &str) -> Operator {
    Operator { matrix: subspace_ry(theta, 2, 0, 1), targets: vec![label.to_string()] }
}

/// Pauli matrices on the qubit subspace `(i0, i1)` of a `dim`-level system,
/// zero on every other level.
pub fn embedded_pauli(kind: char, dim: usize, i0: usize, i1: usize) -> DMatrix<C64> {
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    match kind {
        'I' => {
            m[(i0, i0)] = cr(1.0);
            m[(i1, i1)] = cr(1.0);
        }
        'X' => {
            m[(i0, i1)] = cr(1.0);
            m[(i1, i0)] = cr(1.0);
        }
        'Y' => {
            m[(i0, i1)] = C64::new(0.0, -1.0);
            m[(i1, i0)] = C64::new(0.0, 1.0);
        }
        'Z' => {
            m[(i0, i0)] = cr(1.0);
            m[(i1, i1)] = cr(-1.0);
        }
        _ => panic!("unknown Pauli `{kind}`"),
    }
    m
}

/// Spin Pauli: `Z = |0⟩⟨0| − |−1⟩⟨−1|` on the qubit levels of a 2- or 7-level spin.
pub fn spin_pauli(kind: char, dim: usize) -> DMatrix<C64> {
    embedded_pauli(kind, dim, spin::G0, spin::GM)
}

/// Photon Pauli in the analysis sign convention: `Z = |V⟩⟨V| − |H⟩⟨H|`, so that
/// (|0⟩,V) and (|−1⟩,H) count as correlated in `σ_z ⊗ σ_z`.
pub fn photon_pauli(kind: char) -> DMatrix<C64> {
    let mut m = embedded_pauli(kind, 2, pol::H, pol::V);
    if kind == 'Z' {
        m = -m;
    }
    m
}

/// `σ_a ⊗ σ_b` on (spin, photon) with the analysis sign convention.
pub fn correlation_operator(kind: char, spin_label: &str, spin_dim: usize, photon_label: &str) -> Operator {
    Operator { matrix: spin_pauli(kind, spin_dim), targets: vec![spin_label.to_string()] }
        .kron(&Operator { matrix: photon_pauli(kind), targets: vec![photon_label.to_string()] })
}
