//! Pulse sequence construction and execution: preparation, the entangling
//! block (optical pulse, microwave π, optical pulse, TPC) and its iteration.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::emitter::{initialize_spin, mw_dephasing_channel, optical_pi_pulse, EmitterParams};
use crate::error::{Error, Result};
use crate::levels::{ry, spin, SPIN};
use crate::optics::{convert_bins, tpc_transform, EmissionCycle, InterferometerConfig};
use crate::qsim::{cr, QuantumState, Subsystem, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrepSign {
    Plus,
    Minus,
}

impl PrepSign {
    /// Rotation taking |−1⟩ to `(|−1⟩ ± |0⟩)/√2`.
    pub fn angle(self) -> f64 {
        match self {
            PrepSign::Minus => FRAC_PI_2,
            PrepSign::Plus => -FRAC_PI_2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PrepSign::Plus => "plus",
            PrepSign::Minus => "minus",
        }
    }
}

impl fmt::Display for PrepSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PrepSign {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "plus" => Ok(PrepSign::Plus),
            "minus" => Ok(PrepSign::Minus),
            other => Err(format!("unknown prep sign `{other}`")),
        }
    }
}

/// Spin rotation inserted between successive entangling blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interleave {
    /// R_y(π/2): linear cluster
    Cluster,
    /// R_y(π): GHZ-like string
    Ghz,
}

impl Interleave {
    pub fn angle(self) -> f64 {
        match self {
            Interleave::Cluster => FRAC_PI_2,
            Interleave::Ghz => PI,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    pub n_photons: usize,
    pub prep_sign: PrepSign,
    /// alternate minus/plus preparation between cycles (even cycles minus)
    pub alternate_prep: bool,
    pub tomo_theta: f64,
    /// repetition period; the default gives about 36 ZPL-PSB coincidences per
    /// hour at the default efficiencies
    pub cycle_period_ns: f64,
    pub interleave: Interleave,
    pub pump_rounds: usize,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            n_photons: 1,
            prep_sign: PrepSign::Minus,
            alternate_prep: true,
            tomo_theta: FRAC_PI_2,
            cycle_period_ns: 165_250.0,
            interleave: Interleave::Cluster,
            pump_rounds: 5,
        }
    }
}

impl ProtocolConfig {
    pub fn prep_for_cycle(&self, cycle_id: u64) -> PrepSign {
        if !self.alternate_prep {
            self.prep_sign
        } else if cycle_id.is_multiple_of(2) {
            PrepSign::Minus
        } else {
            PrepSign::Plus
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_photons == 0 {
            return Err(Error::InvalidParameter { name: "n_photons".into(), reason: "must be >= 1".into() });
        }
        if !(self.cycle_period_ns > 0.0) {
            return Err(Error::InvalidParameter { name: "cycle_period_ns".into(), reason: "must be positive".into() });
        }
        if !self.tomo_theta.is_finite() {
            return Err(Error::InvalidParameter { name: "tomo_theta".into(), reason: "must be finite".into() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepKind {
    GreenInit,
    PumpInit { rounds: usize },
    MwRotation { theta: f64 },
    OpticalPiPulse { bin: String },
    /// path-erasing conversion of the two bins of photon `photon`
    Convert { early: String, late: String, photon: String },
    Wait { ns: f64 },
    TomographyRotation { theta: f64 },
    ReadoutPulse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceStep {
    pub kind: StepKind,
    pub time_ns: f64,
}

#[derive(Debug, Clone)]
pub struct Sequence {
    pub steps: Vec<SequenceStep>,
    pub config: ProtocolConfig,
    pub delay_ns: f64,
}

pub const GREEN_NS: f64 = 2_000.0;
pub const PUMP_ROUND_NS: f64 = 6_000.0;
pub const MW_GAP_NS: f64 = 100.0;
pub const READOUT_NS: f64 = 5_000.0;

pub fn bin_labels(photon: usize) -> (String, String) {
    (format!("a{}", 2 * photon - 1), format!("a{}", 2 * photon))
}

pub fn photon_label(photon: usize) -> String {
    format!("p{photon}")
}

/// Canonical pulse sequence. Optical pulses of one block are spaced by the
/// interferometer delay; the microwave π-pulse sits halfway between them.
pub fn build_sequence(config: &ProtocolConfig, ifm: &InterferometerConfig) -> Result<Sequence> {
    config.validate()?;
    ifm.validate()?;
    let delay = ifm.delay_ns;
    if delay <= 2.0 * MW_GAP_NS {
        return Err(Error::Timing(format!("delay {delay} ns leaves no room for the microwave π-pulse")));
    }
    let mut steps = Vec::new();
    let mut push = |kind, t| steps.push(SequenceStep { kind, time_ns: t });
    push(StepKind::GreenInit, 0.0);
    push(StepKind::PumpInit { rounds: config.pump_rounds }, GREEN_NS);
    let mut t = GREEN_NS + config.pump_rounds as f64 * PUMP_ROUND_NS;
    push(StepKind::MwRotation { theta: config.prep_sign.angle() }, t);
    for k in 1..=config.n_photons {
        if k > 1 {
            t += MW_GAP_NS;
            push(StepKind::MwRotation { theta: config.interleave.angle() }, t);
        }
        let (early, late) = bin_labels(k);
        t += MW_GAP_NS;
        push(StepKind::OpticalPiPulse { bin: early.clone() }, t);
        push(StepKind::MwRotation { theta: PI }, t + delay / 2.0);
        t += delay;
        push(StepKind::OpticalPiPulse { bin: late.clone() }, t);
        // conversion completes when the late photon leaves the long arm
        push(StepKind::Convert { early, late, photon: photon_label(k) }, t + delay);
    }
    t += delay + MW_GAP_NS;
    push(StepKind::TomographyRotation { theta: config.tomo_theta }, t);
    t += MW_GAP_NS;
    push(StepKind::ReadoutPulse, t);
    let total = t + READOUT_NS;
    if total > config.cycle_period_ns {
        return Err(Error::Timing(format!(
            "sequence lasts {total} ns, longer than cycle_period_ns = {}",
            config.cycle_period_ns
        )));
    }
    steps.sort_by(|a, b| a.time_ns.total_cmp(&b.time_ns));
    Ok(Sequence { steps, config: config.clone(), delay_ns: delay })
}

impl Sequence {
    pub fn duration_ns(&self) -> f64 {
        self.steps.last().map(|s| s.time_ns).unwrap_or(0.0) + READOUT_NS
    }

    /// Times of the optical π-pulses, in order.
    pub fn optical_pulse_times(&self) -> Vec<f64> {
        self.steps
            .iter()
            .filter(|s| matches!(s.kind, StepKind::OpticalPiPulse { .. }))
            .map(|s| s.time_ns)
            .collect()
    }

    /// Human-readable timing table.
    pub fn timing_table(&self) -> String {
        let mut out = String::from("     t_ns  step\n");
        for s in &self.steps {
            let desc = match &s.kind {
                StepKind::GreenInit => "green charge init".to_string(),
                StepKind::PumpInit { rounds } => format!("resonant pumping x{rounds}"),
                StepKind::MwRotation { theta } => format!("MW R_y({theta:.4})"),
                StepKind::OpticalPiPulse { bin } => format!("optical pi-pulse -> {bin}"),
                StepKind::Convert { early, late, photon } => format!("TPC {early}+{late} -> {photon}"),
                StepKind::Wait { ns } => format!("wait {ns} ns"),
                StepKind::TomographyRotation { theta } => format!("tomography R_y({theta:.4})"),
                StepKind::ReadoutPulse => format!("readout ({READOUT_NS} ns)"),
            };
            out.push_str(&format!("{:>9.1}  {}\n", s.time_ns, desc));
        }
        out
    }
}

/// Result of executing a sequence up to (not including) the tomography rotation.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// heralded state over the spin and photon qubits `p1..pn`, renormalized
    pub state: QuantumState,
    /// product of the per-photon heralding probabilities
    pub herald_probability: f64,
    /// named intermediate states (before heralding renormalization of later photons)
    pub checkpoints: Vec<(String, QuantumState)>,
}

struct Executor<'a> {
    params: &'a EmitterParams,
    ifm: &'a InterferometerConfig,
    phase: f64,
    convert: bool,
}

impl Executor<'_> {
    fn run(&self, seq: &Sequence) -> Result<RunOutcome> {
        let mut state = initialize_spin(self.params)?;
        let mut herald = 1.0;
        let mut checkpoints = vec![("init".to_string(), state.clone())];
        let dephase = self.params.mw_dephasing() > 0.0;
        for step in &seq.steps {
            match &step.kind {
                StepKind::MwRotation { theta } => {
                    state = state.apply(&ry(*theta))?;
                    if dephase {
                        state = state.apply_kraus(&mw_dephasing_channel(self.params), true)?;
                    }
                    checkpoints.push((format!("ry({theta:.4})"), state.clone()));
                }
                StepKind::OpticalPiPulse { bin } => {
                    state = optical_pi_pulse(&state, self.params, bin)?;
                    checkpoints.push((bin.clone(), state.clone()));
                }
                StepKind::Convert { early, late, photon } if self.convert => {
                    let (s, p) = if state.is_pure() {
                        tpc_transform(&state, early, late, photon, &InterferometerConfig { phase: self.phase, ..self.ifm.clone() })?
                    } else {
                        convert_bins(&state, early, late, photon, self.ifm, self.phase)?
                    };
                    herald *= p;
                    state = s;
                    checkpoints.push((photon.clone(), state.clone()));
                }
                StepKind::TomographyRotation { .. } | StepKind::ReadoutPulse => break,
                _ => {}
            }
        }
        Ok(RunOutcome { state, herald_probability: herald, checkpoints })
    }
}

/// Exact pure-state execution with every imperfection off, at interferometer phase `phase`.
pub fn run_ideal(seq: &Sequence, phase: f64) -> Result<RunOutcome> {
    let params = EmitterParams::ideal();
    let ifm = InterferometerConfig { erasure_visibility: 1.0, ..InterferometerConfig::default() };
    let ifm = InterferometerConfig { delay_ns: seq.delay_ns, ..ifm };
    Executor { params: &params, ifm: &ifm, phase, convert: true }.run(seq)
}

/// Same as [`run_ideal`] with a caller-supplied interferometer (split ratio, switch).
pub fn run_ideal_with(seq: &Sequence, ifm: &InterferometerConfig, phase: f64) -> Result<RunOutcome> {
    let params = EmitterParams::ideal();
    Executor { params: &params, ifm, phase, convert: true }.run(seq)
}

/// Density-matrix execution with emitter imperfections, conditioned on every
/// photon being heralded in the erased window. Phase is `ifm.phase`.
pub fn run_noisy(seq: &Sequence, params: &EmitterParams, ifm: &InterferometerConfig) -> Result<RunOutcome> {
    params.validate()?;
    let mut out = Executor { params, ifm, phase: ifm.phase, convert: true }.run(seq)?;
    if out.state.is_pure() {
        out.state = out.state.to_mixed();
    }
    Ok(out)
}

/// State over spin ⊗ a1 ⊗ a2 right after the second optical pulse of a
/// single-photon sequence (before conversion and tomography).
pub fn emission_state(seq: &Sequence, params: &EmitterParams) -> Result<QuantumState> {
    if seq.config.n_photons != 1 {
        return Err(Error::InvalidParameter { name: "n_photons".into(), reason: "emission_state needs n_photons = 1".into() });
    }
    params.validate()?;
    let ifm = InterferometerConfig { delay_ns: seq.delay_ns, ..InterferometerConfig::default() };
    let out = Executor { params, ifm: &ifm, phase: 0.0, convert: false }.run(seq)?;
    Ok(out.state.to_mixed())
}

/// Projects the 7-level spin onto its {|0⟩, |−1⟩} qubit (no renormalization)
/// and moves it back to the first position.
pub fn restrict_spin(state: &QuantumState) -> Result<QuantumState> {
    let dim = state.subsystem(SPIN)?.dim;
    if dim == 2 {
        return Ok(state.clone());
    }
    let mut m = DMatrix::<C64>::zeros(2, dim);
    m[(0, spin::G0)] = cr(1.0);
    m[(1, spin::GM)] = cr(1.0);
    let out = state.map_subsystems(&[SPIN], &[m], vec![Subsystem::new(SPIN, 2)?])?;
    let mut order: Vec<String> = vec![SPIN.to_string()];
    order.extend(out.labels().iter().filter(|l| **l != SPIN).map(|l| l.to_string()));
    let order: Vec<&str> = order.iter().map(|s| s.as_str()).collect();
    out.permute(&order)
}

/// Analytic heralding probability for `n` photons of the ideal protocol.
pub fn herald_probability(n: usize, ifm: &InterferometerConfig) -> f64 {
    let per_photon = 0.5 * ifm.erasure_probability(EmissionCycle::First)
        + 0.5 * ifm.erasure_probability(EmissionCycle::Second);
    per_photon.powi(n as i32)
}

/// Monte Carlo estimate of the `n`-photon heralding probability: each photon is
/// emitted in either cycle with probability ½ and routed by the input splitter
/// (or the switch).
pub fn sample_herald_fraction<R: Rng + ?Sized>(n: usize, ifm: &InterferometerConfig, trials: usize, rng: &mut R) -> f64 {
    let mut ok = 0usize;
    for _ in 0..trials {
        let all = (0..n).all(|_| {
            let cycle = if rng.random::<bool>() { EmissionCycle::First } else { EmissionCycle::Second };
            rng.random::<f64>() < ifm.erasure_probability(cycle)
        });
        ok += usize::from(all);
    }
    ok as f64 / trials as f64
}

pub mod stabilizer;
pub use stabilizer::{stabilizer_check, stabilizer_generators, PauliString};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levels::{correlation_operator, pol};
    use crate::qsim::Amplitudes;
    use nalgebra::DVector;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn seq(n: usize, sign: PrepSign) -> Sequence {
        let cfg = ProtocolConfig { n_photons: n, prep_sign: sign, ..Default::default() };
        build_sequence(&cfg, &InterferometerConfig::default()).unwrap()
    }

    #[test]
    fn single_photon_sequence_layout() {
        let s = seq(1, PrepSign::Minus);
        let kinds: Vec<_> = s
            .steps
            .iter()
            .filter(|st| !matches!(st.kind, StepKind::Convert { .. }))
            .map(|st| match &st.kind {
                StepKind::GreenInit => "green".to_string(),
                StepKind::PumpInit { .. } => "pump".to_string(),
                StepKind::MwRotation { theta } => format!("ry{theta:.3}"),
                StepKind::OpticalPiPulse { bin } => bin.clone(),
                StepKind::TomographyRotation { theta } => format!("tomo{theta:.3}"),
                StepKind::ReadoutPulse => "readout".into(),
                other => format!("{other:?}"),
            })
            .collect();
        assert_eq!(kinds, ["green", "pump", "ry1.571", "a1", "ry3.142", "a2", "tomo1.571", "readout"]);
        let t = s.optical_pulse_times();
        assert_eq!(t[1] - t[0], 262.0);
        assert!(s.steps.windows(2).all(|w| w[0].time_ns <= w[1].time_ns));
    }

    #[test]
    fn z_readout_variant_and_two_photons() {
        let cfg = ProtocolConfig { tomo_theta: 0.0, ..Default::default() };
        let s = build_sequence(&cfg, &InterferometerConfig::default()).unwrap();
        assert!(s.steps.iter().any(|st| st.kind == StepKind::TomographyRotation { theta: 0.0 }));

        let s2 = seq(2, PrepSign::Minus);
        let mw: Vec<f64> = s2
            .steps
            .iter()
            .filter_map(|st| match st.kind {
                StepKind::MwRotation { theta } => Some(theta),
                _ => None,
            })
            .collect();
        assert_eq!(mw, [FRAC_PI_2, PI, FRAC_PI_2, PI]);
        let t = s2.optical_pulse_times();
        assert_eq!(t.len(), 4);
        assert_eq!(t[1] - t[0], 262.0);
        assert_eq!(t[3] - t[2], 262.0);
    }

    #[test]
    fn period_too_short_is_rejected() {
        let cfg = ProtocolConfig { cycle_period_ns: 1_000.0, ..Default::default() };
        assert!(matches!(build_sequence(&cfg, &InterferometerConfig::default()), Err(Error::Timing(_))));
        let cfg = ProtocolConfig { n_photons: 0, ..Default::default() };
        assert!(build_sequence(&cfg, &InterferometerConfig::default()).is_err());
    }

    fn bell(sign: f64) -> DVector<C64> {
        let mut v = DVector::zeros(4);
        v[pol::V] = cr(FRAC_1_SQRT_2);
        v[2 + pol::H] = cr(sign * FRAC_1_SQRT_2);
        v
    }

    #[test]
    fn ideal_outputs_for_both_preparations() {
        for (sign, expect) in [(PrepSign::Minus, 1.0), (PrepSign::Plus, -1.0)] {
            let out = run_ideal(&seq(1, sign), 0.0).unwrap();
            let q = restrict_spin(&out.state).unwrap();
            let target = QuantumState::pure(q.subsystems().to_vec(), bell(expect)).unwrap();
            assert!((q.fidelity_pure(&target).unwrap() - 1.0).abs() < 1e-10);
            assert!((out.herald_probability - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn phase_appears_on_h_component() {
        let phi = 0.9;
        let out = restrict_spin(&run_ideal(&seq(1, PrepSign::Minus), phi).unwrap().state).unwrap();
        let Amplitudes::Pure(v) = out.amplitudes() else { panic!() };
        let rel = v[2 + pol::H] / v[pol::V];
        assert!((rel.arg() - phi).abs() < 1e-12);
        assert!((rel.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noisy_with_ideal_params_matches_ideal() {
        let s = seq(1, PrepSign::Minus);
        let noisy = run_noisy(&s, &EmitterParams::ideal(), &InterferometerConfig::default()).unwrap();
        let ideal = run_ideal(&s, 0.0).unwrap();
        let diff = noisy.state.density_matrix() - ideal.state.density_matrix();
        assert!(diff.iter().all(|z| z.norm() < 1e-10));
    }

    fn target_fidelity(state: &QuantumState) -> f64 {
        let mut v = DVector::<C64>::zeros(spin::DIM * 2);
        v[spin::G0 * 2 + pol::V] = cr(FRAC_1_SQRT_2);
        v[spin::GM * 2 + pol::H] = cr(FRAC_1_SQRT_2);
        let target = QuantumState::pure(state.subsystems().to_vec(), v).unwrap();
        state.fidelity_pure(&target).unwrap()
    }

    #[test]
    fn half_initialization_gives_two_thirds() {
        // the |0⟩ residual yields the orthogonal Bell state, |+1⟩ is never heralded
        let params = EmitterParams { init_fidelity: 0.5, ..EmitterParams::ideal() };
        let out = run_noisy(&seq(1, PrepSign::Minus), &params, &InterferometerConfig::default()).unwrap();
        assert!((target_fidelity(&out.state) - 2.0 / 3.0).abs() < 1e-10);
        assert!((out.herald_probability - 0.375).abs() < 1e-10);
    }

    #[test]
    fn full_dephasing_removes_equatorial_correlation() {
        let params = EmitterParams { nuclear_pol: 0.0, hyperfine_dephasing: 1.0, ..EmitterParams::ideal() };
        let out = run_noisy(&seq(1, PrepSign::Minus), &params, &InterferometerConfig::default()).unwrap();
        let xx = out.state.expectation(&correlation_operator('X', SPIN, spin::DIM, "p1")).unwrap();
        assert!(xx.abs() < 1e-10, "{xx}");
    }

    #[test]
    fn emission_state_has_spin_and_two_bins() {
        let rho = emission_state(&seq(1, PrepSign::Minus), &EmitterParams::default()).unwrap();
        assert_eq!(rho.labels(), ["spin", "a1", "a2"]);
        assert!((rho.trace() - 1.0).abs() < 1e-10);
        rho.validate().unwrap();
    }

    #[test]
    fn herald_probability_passive_and_switch() {
        let passive = InterferometerConfig::default();
        assert!((herald_probability(3, &passive) - 0.125).abs() < 1e-15);
        let switch = InterferometerConfig { active_switch: true, ..passive };
        assert_eq!(herald_probability(3, &switch), 1.0);
        let out = run_ideal_with(&seq(2, PrepSign::Minus), &switch, 0.0).unwrap();
        assert!((out.herald_probability - 1.0).abs() < 1e-12);
    }
}
