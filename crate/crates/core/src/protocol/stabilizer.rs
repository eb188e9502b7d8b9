//! Pauli-frame bookkeeping for the ideal multi-photon string.
//!
//! At interferometer phase 0 a block acts on (spin, new photon |H⟩) as
//! `X_s Z_s CNOT(s → p)` in the computational basis |0⟩,|−1⟩ / |H⟩,|V⟩, so the
//! output is a stabilizer state and its generators follow from conjugation.

use std::fmt;

use super::{run_ideal, restrict_spin, Sequence};
use crate::error::Result;
use crate::levels::{embedded_pauli, SPIN};
use crate::qsim::{Operator, QuantumState};

/// Hermitian Pauli string in x/z bit form; qubit 0 is the spin, qubit k the photon `pk`.
/// Photon operators use the computational convention `Z = |H⟩⟨H| − |V⟩⟨V|`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PauliString {
    pub x: Vec<bool>,
    pub z: Vec<bool>,
    pub negative: bool,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        Self { x: vec![false; n], z: vec![false; n], negative: false }
    }

    pub fn single(n: usize, q: usize, kind: char, negative: bool) -> Self {
        let mut p = Self::identity(n);
        p.x[q] = matches!(kind, 'X' | 'Y');
        p.z[q] = matches!(kind, 'Z' | 'Y');
        p.negative = negative;
        p
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn kind(&self, q: usize) -> char {
        match (self.x[q], self.z[q]) {
            (false, false) => 'I',
            (true, false) => 'X',
            (true, true) => 'Y',
            (false, true) => 'Z',
        }
    }

    fn push_qubit(&mut self) {
        self.x.push(false);
        self.z.push(false);
    }

    /// Conjugation by `R_y(θ)` for θ a multiple of π/2.
    fn ry(&mut self, q: usize, quarter_turns: i32) {
        let (x, z) = (self.x[q], self.z[q]);
        match quarter_turns.rem_euclid(4) {
            0 => {}
            1 => {
                self.negative ^= x && !z;
                self.x[q] = z;
                self.z[q] = x;
            }
            2 => self.negative ^= x ^ z,
            _ => {
                self.negative ^= z && !x;
                self.x[q] = z;
                self.z[q] = x;
            }
        }
    }

    fn pauli_x(&mut self, q: usize) {
        self.negative ^= self.z[q];
    }

    fn pauli_z(&mut self, q: usize) {
        self.negative ^= self.x[q];
    }

    fn cnot(&mut self, c: usize, t: usize) {
        let (xc, zc, xt, zt) = (self.x[c], self.z[c], self.x[t], self.z[t]);
        self.negative ^= xc && zt && !(xt ^ zc);
        self.x[t] = xt ^ xc;
        self.z[c] = zc ^ zt;
    }

    /// Dense operator on `spin ⊗ p1 ⊗ … ⊗ pn` with a 2-level spin.
    pub fn operator(&self) -> Operator {
        let label = |q: usize| if q == 0 { SPIN.to_string() } else { format!("p{q}") };
        let mut op = Operator { matrix: embedded_pauli(self.kind(0), 2, 0, 1), targets: vec![label(0)] };
        for q in 1..self.len() {
            op = op.kron(&Operator { matrix: embedded_pauli(self.kind(q), 2, 0, 1), targets: vec![label(q)] });
        }
        if self.negative {
            op.matrix = -op.matrix;
        }
        op
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.negative { "-" } else { "+" })?;
        for q in 0..self.len() {
            write!(f, "{}", self.kind(q))?;
        }
        Ok(())
    }
}

fn quarter_turns(theta: f64) -> Option<i32> {
    let k = theta / std::f64::consts::FRAC_PI_2;
    let r = k.round();
    ((k - r).abs() < 1e-9).then_some(r as i32)
}

/// Stabilizer generators of the ideal output of `seq` at interferometer phase 0.
/// Returns `None` when a rotation angle is not a multiple of π/2.
pub fn stabilizer_generators(seq: &Sequence) -> Option<Vec<PauliString>> {
    let n = seq.config.n_photons;
    let mut gens = vec![PauliString::single(1, 0, 'Z', true)];
    let mut rotations = Vec::new();
    rotations.push(seq.config.prep_sign.angle());
    for _ in 1..n {
        rotations.push(seq.config.interleave.angle());
    }
    for (k, theta) in rotations.into_iter().enumerate() {
        let turns = quarter_turns(theta)?;
        let photon = k + 1;
        for g in gens.iter_mut() {
            g.ry(0, turns);
            g.push_qubit();
        }
        gens.push(PauliString::single(photon + 1, photon, 'Z', false));
        for g in gens.iter_mut() {
            g.cnot(0, photon);
            g.pauli_z(0);
            g.pauli_x(0);
        }
    }
    Some(gens)
}

/// Expectation of every generator on the full-simulator ideal output.
/// All values equal +1 for a correct simulation.
pub fn stabilizer_check(seq: &Sequence) -> Result<Vec<(PauliString, f64)>> {
    let gens = stabilizer_generators(seq).ok_or_else(|| {
        crate::Error::InvalidParameter { name: "interleave".into(), reason: "not a Clifford rotation".into() }
    })?;
    let out = run_ideal(seq, 0.0)?;
    let state: QuantumState = restrict_spin(&out.state)?;
    gens.into_iter()
        .map(|g| {
            let v = state.expectation(&g.operator())?;
            Ok((g, v))
        })
        .collect()
}
