//! Emitter level structure, the conditional optical π-pulse, and emitter-side
//! imperfections expressed as quantum channels on the 7-level spin.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::levels::{bin, spin, SPIN};
use crate::qsim::{cr, Amplitudes, Operator, QuantumState, Subsystem, C64};

/// Cross-excitation probability: a fixed value or derived from the detuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CrossExcitation {
    Value(f64),
    Auto(AutoTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

impl Default for CrossExcitation {
    fn default() -> Self {
        CrossExcitation::Auto(AutoTag::Auto)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmitterParams {
    pub p_cross: CrossExcitation,
    pub detuning_ghz: f64,
    pub linewidth_mhz: f64,
    pub zpl_fraction: f64,
    pub p_shelve: f64,
    pub p_spin_flip: f64,
    pub init_fidelity: f64,
    pub nuclear_pol: f64,
    /// Phase-flip probability per microwave rotation for the unpolarized
    /// nuclear fraction (hyperfine-detuned drive).
    pub hyperfine_dephasing: f64,
    pub p_readout_click: f64,
    pub pi_pulse_error: f64,
}

impl Default for EmitterParams {
    fn default() -> Self {
        Self {
            p_cross: CrossExcitation::default(),
            detuning_ghz: 0.87,
            linewidth_mhz: 13.0,
            zpl_fraction: 0.03,
            p_shelve: 0.3,
            p_spin_flip: 0.0,
            init_fidelity: 0.979,
            nuclear_pol: 0.838,
            hyperfine_dephasing: 0.5,
            p_readout_click: 0.167,
            pi_pulse_error: 0.0,
        }
    }
}

/// Lorentzian line factor `1 / (1 + (2Δ/Γ)²)`.
pub fn lorentzian_cross_excitation(detuning_ghz: f64, linewidth_mhz: f64) -> f64 {
    let x = 2.0 * detuning_ghz * 1e3 / linewidth_mhz;
    1.0 / (1.0 + x * x)
}

impl EmitterParams {
    /// Every imperfection off, every photon in the ZPL, perfect readout contrast.
    pub fn ideal() -> Self {
        Self {
            p_cross: CrossExcitation::Value(0.0),
            zpl_fraction: 1.0,
            p_shelve: 0.0,
            p_spin_flip: 0.0,
            init_fidelity: 1.0,
            nuclear_pol: 1.0,
            hyperfine_dephasing: 0.0,
            p_readout_click: 1.0,
            pi_pulse_error: 0.0,
            ..Self::default()
        }
    }

    pub fn cross_excitation(&self) -> f64 {
        match self.p_cross {
            CrossExcitation::Value(p) => p,
            CrossExcitation::Auto(_) => lorentzian_cross_excitation(self.detuning_ghz, self.linewidth_mhz),
        }
    }

    /// Phase-flip probability applied after each microwave rotation.
    pub fn mw_dephasing(&self) -> f64 {
        (1.0 - self.nuclear_pol) * self.hyperfine_dephasing
    }

    pub fn validate(&self) -> Result<()> {
        if let CrossExcitation::Value(p) = self.p_cross {
            check_probability("p_cross", p)?;
        }
        for (name, v) in [
            ("p_shelve", self.p_shelve),
            ("p_spin_flip", self.p_spin_flip),
            ("init_fidelity", self.init_fidelity),
            ("nuclear_pol", self.nuclear_pol),
            ("hyperfine_dephasing", self.hyperfine_dephasing),
            ("p_readout_click", self.p_readout_click),
            ("pi_pulse_error", self.pi_pulse_error),
            ("zpl_fraction", self.zpl_fraction),
        ] {
            check_probability(name, v)?;
        }
        if self.zpl_fraction <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "zpl_fraction".into(),
                reason: "must be in (0, 1]".into(),
            });
        }
        if !(self.linewidth_mhz > 0.0) {
            return Err(Error::InvalidParameter {
                name: "linewidth_mhz".into(),
                reason: "must be positive".into(),
            });
        }
        if !self.detuning_ghz.is_finite() {
            return Err(Error::InvalidParameter { name: "detuning_ghz".into(), reason: "must be finite".into() });
        }
        Ok(())
    }
}

fn spin_op(matrix: DMatrix<C64>) -> Operator {
    Operator { matrix, targets: vec![SPIN.to_string()] }
}

fn unit(dim: usize, row: usize, col: usize) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(dim, dim);
    m[(row, col)] = cr(1.0);
    m
}

/// Spin state after initialization: `init_fidelity` on |−1⟩, the remainder split
/// evenly between |0⟩ and |+1⟩.
pub fn initialize_spin(params: &EmitterParams) -> Result<QuantumState> {
    params.validate()?;
    let f = params.init_fidelity;
    let sub = vec![Subsystem::new(SPIN, spin::DIM)?];
    if f == 1.0 {
        return QuantumState::basis(sub, &[spin::GM]);
    }
    let mut rho = DMatrix::<C64>::zeros(spin::DIM, spin::DIM);
    rho[(spin::GM, spin::GM)] = cr(f);
    rho[(spin::G0, spin::G0)] = cr((1.0 - f) / 2.0);
    rho[(spin::GP, spin::GP)] = cr((1.0 - f) / 2.0);
    QuantumState::mixed(sub, rho)
}

/// Coherent excitation: |0⟩→|0_e⟩ with transfer probability `1 − pi_pulse_error`,
/// |±1⟩→|±1_e⟩ with probability `p_cross`.
pub fn excitation_unitary(params: &EmitterParams) -> Operator {
    let mut m = DMatrix::<C64>::identity(spin::DIM, spin::DIM);
    let pairs = [
        (spin::G0, spin::E0, 1.0 - params.pi_pulse_error),
        (spin::GM, spin::EM, params.cross_excitation()),
        (spin::GP, spin::EP, params.cross_excitation()),
    ];
    for (g, e, p) in pairs {
        let s = p.clamp(0.0, 1.0).sqrt();
        let co = (1.0 - p).clamp(0.0, 1.0).sqrt();
        m[(g, g)] = cr(co);
        m[(g, e)] = cr(-s);
        m[(e, g)] = cr(s);
        m[(e, e)] = cr(co);
    }
    spin_op(m)
}

/// Non-radiative decay |±1_e⟩ → MS with probability `p_shelve`.
pub fn shelving_channel(params: &EmitterParams) -> Vec<Operator> {
    let p = params.p_shelve;
    let mut keep = DMatrix::<C64>::identity(spin::DIM, spin::DIM);
    keep[(spin::EM, spin::EM)] = cr((1.0 - p).sqrt());
    keep[(spin::EP, spin::EP)] = cr((1.0 - p).sqrt());
    vec![
        spin_op(keep),
        spin_op(unit(spin::DIM, spin::MS, spin::EM) * cr(p.sqrt())),
        spin_op(unit(spin::DIM, spin::MS, spin::EP) * cr(p.sqrt())),
    ]
}

/// Excited-state spin mixing: |0_e⟩ ↔ |−1_e⟩ and |+1_e⟩ → |0_e⟩ with probability `p_spin_flip`.
pub fn spin_flip_channel(params: &EmitterParams) -> Vec<Operator> {
    let p = params.p_spin_flip;
    let mut keep = DMatrix::<C64>::identity(spin::DIM, spin::DIM);
    for e in spin::EXCITED {
        keep[(e, e)] = cr((1.0 - p).sqrt());
    }
    let swap = (unit(spin::DIM, spin::EM, spin::E0) + unit(spin::DIM, spin::E0, spin::EM)) * cr(p.sqrt());
    vec![
        spin_op(keep),
        spin_op(swap),
        spin_op(unit(spin::DIM, spin::E0, spin::EP) * cr(p.sqrt())),
    ]
}

/// Spin-preserving radiative decay into the fresh time bin `bin_label`.
///
/// The ZPL branch is one coherent Kraus operator together with the ground-level
/// identity, so emission stays coherent with the non-emitting path. PSB decays
/// get one operator per excited level (photon lost, which-level retained).
pub fn decay_channel(params: &EmitterParams, bin_label: &str) -> Vec<Operator> {
    let d = spin::DIM;
    let targets = vec![SPIN.to_string(), bin_label.to_string()];
    let vac_proj = unit(2, bin::VAC, bin::VAC);
    let create = unit(2, bin::ONE, bin::VAC);
    let occupied = unit(2, bin::ONE, bin::ONE);

    let mut ground = DMatrix::<C64>::zeros(d, d);
    for g in spin::GROUND.into_iter().chain([spin::MS]) {
        ground[(g, g)] = cr(1.0);
    }
    let mut emit = DMatrix::<C64>::zeros(d, d);
    for e in spin::EXCITED {
        emit[(spin::ground_of(e), e)] = cr(1.0);
    }
    let zpl = params.zpl_fraction;
    let mut ops = vec![Operator {
        matrix: ground.kronecker(&vac_proj) + (emit * cr(zpl.sqrt())).kronecker(&create),
        targets: targets.clone(),
    }];
    if zpl < 1.0 {
        for e in spin::EXCITED {
            let m = unit(d, spin::ground_of(e), e) * cr((1.0 - zpl).sqrt());
            ops.push(Operator { matrix: m.kronecker(&vac_proj), targets: targets.clone() });
        }
    }
    ops.push(Operator { matrix: DMatrix::identity(d, d).kronecker(&occupied), targets });
    ops
}

/// Optical π-pulse on |0⟩ ↔ |0_e⟩ followed by emission into a new time-bin
/// subsystem `bin_label` (appended, vacuum-initialized).
///
/// Order: coherent excitation, excited-state spin mixing, shelving, decay.
pub fn optical_pi_pulse(state: &QuantumState, params: &EmitterParams, bin_label: &str) -> Result<QuantumState> {
    if state.has(bin_label) {
        return Err(Error::BinOccupied(bin_label.to_string()));
    }
    let spin_dim = state.subsystem(SPIN)?.dim;
    if spin_dim != spin::DIM {
        return Err(Error::DimensionMismatch { expected: spin::DIM, found: spin_dim });
    }
    let vac = QuantumState::basis(vec![Subsystem::new(bin_label, 2)?], &[bin::VAC])?;
    let mut s = state.tensor(&vac)?.apply(&excitation_unitary(params))?;
    if is_ideal_pulse(params) {
        // unitary path keeps pure states pure
        let ops = decay_channel(params, bin_label);
        return emit_pure_or_mixed(&s, &ops);
    }
    if params.p_spin_flip > 0.0 {
        s = s.apply_kraus(&spin_flip_channel(params), true)?;
    }
    if params.p_shelve > 0.0 {
        s = s.apply_kraus(&shelving_channel(params), true)?;
    }
    s.apply_kraus(&decay_channel(params, bin_label), true)
}

fn is_ideal_pulse(params: &EmitterParams) -> bool {
    params.p_spin_flip == 0.0 && params.p_shelve == 0.0 && params.zpl_fraction == 1.0
}

/// With only the coherent ZPL operator contributing (vacuum bin, no PSB), the
/// channel acts as an isometry and pure states may stay pure.
fn emit_pure_or_mixed(s: &QuantumState, ops: &[Operator]) -> Result<QuantumState> {
    match s.amplitudes() {
        Amplitudes::Pure(_) => {
            let out = s.apply(&ops[0])?;
            let kept = out.norm_sqr();
            if (kept - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidState(format!("emission lost norm ({kept})")));
            }
            Ok(out)
        }
        Amplitudes::Mixed(_) => s.apply_kraus(ops, true),
    }
}

/// Qubit dephasing after a microwave rotation, from unpolarized nuclear spin.
/// Coherences between |0⟩ and |−1⟩ shrink by `1 − mw_dephasing()`.
pub fn mw_dephasing_channel(params: &EmitterParams) -> Vec<Operator> {
    let p = params.mw_dephasing();
    let mut z = DMatrix::<C64>::identity(spin::DIM, spin::DIM);
    z[(spin::GM, spin::GM)] = cr(-1.0);
    vec![
        spin_op(DMatrix::identity(spin::DIM, spin::DIM) * cr((1.0 - p / 2.0).sqrt())),
        spin_op(z * cr((p / 2.0).sqrt())),
    ]
}

/// `p_readout_click · P(m_s = 0) + dark`, clamped to [0, 1].
pub fn readout_click_probability(state: &QuantumState, params: &EmitterParams, dark: f64) -> Result<f64> {
    let reduced = state.partial_trace(&[SPIN])?;
    let dim = reduced.dim();
    if dim != spin::DIM && dim != 2 {
        return Err(Error::DimensionMismatch { expected: spin::DIM, found: dim });
    }
    let p0 = reduced.density_matrix()[(spin::G0, spin::G0)].re;
    Ok((params.p_readout_click * p0 + dark).clamp(0.0, 1.0))
}
