//! Unbalanced polarization-maintaining interferometer: arm routing, arrival
//! windows, time-bin → polarization conversion and the quadrature ports.

use std::f64::consts::{FRAC_PI_4, PI, TAU};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levels::{bin, pol};
use crate::qsim::{c, cr, ket_projector, Operator, QuantumState, Subsystem, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub fn index(self) -> usize {
        match self {
            Polarization::H => pol::H,
            Polarization::V => pol::V,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterferometerConfig {
    /// long − short arm propagation difference
    pub delay_ns: f64,
    /// interferometer phase at the start of a run
    pub phase: f64,
    pub phase_readout_sigma: f64,
    /// random-walk diffusion of the phase, rad/√ns
    pub drift_sigma: f64,
    pub long_arm_pol: Polarization,
    pub short_arm_pol: Polarization,
    /// arrival-window half-width
    pub window_ns: f64,
    /// probability of entering the long (H) arm
    pub split_ratio: f64,
    /// factor multiplying the H/V coherence of erased photons (wavepacket overlap)
    pub erasure_visibility: f64,
    /// phase offset of the R port relative to D (L is R + π)
    pub rl_offset: f64,
    /// replace the passive input splitter by a deterministic switch
    pub active_switch: bool,
}

impl Default for InterferometerConfig {
    fn default() -> Self {
        Self {
            delay_ns: 262.0,
            phase: 0.0,
            phase_readout_sigma: 0.18,
            drift_sigma: 7.5e-5,
            long_arm_pol: Polarization::H,
            short_arm_pol: Polarization::V,
            window_ns: 20.0,
            split_ratio: 0.5,
            erasure_visibility: 1.0,
            rl_offset: FRAC_PI_4,
            active_switch: false,
        }
    }
}

impl InterferometerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &str, reason: &str| {
            Err(Error::InvalidParameter { name: name.into(), reason: reason.into() })
        };
        if !(self.delay_ns > 0.0) {
            return bad("delay_ns", "must be positive");
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return bad("split_ratio", &format!("{} is not in (0, 1)", self.split_ratio));
        }
        if !(self.window_ns > 0.0 && self.window_ns < self.delay_ns / 2.0) {
            return bad("window_ns", "must be in (0, delay_ns/2) so windows do not overlap");
        }
        if !(0.0..=1.0).contains(&self.erasure_visibility) {
            return bad("erasure_visibility", "must be in [0, 1]");
        }
        if !(self.phase_readout_sigma >= 0.0) || !(self.drift_sigma >= 0.0) {
            return bad("phase_readout_sigma/drift_sigma", "must be non-negative");
        }
        if self.long_arm_pol == self.short_arm_pol {
            return bad("long_arm_pol", "arms must carry orthogonal polarizations");
        }
        if !self.phase.is_finite() || !self.rl_offset.is_finite() {
            return bad("phase/rl_offset", "must be finite");
        }
        Ok(())
    }

    /// Probability that a bin-1 (first cycle) photon takes the long arm.
    pub fn long_arm_probability(&self, cycle: EmissionCycle) -> f64 {
        match (self.active_switch, cycle) {
            (true, EmissionCycle::First) => 1.0,
            (true, EmissionCycle::Second) => 0.0,
            (false, _) => self.split_ratio,
        }
    }

    /// Probability that an emitted photon lands in the path-erasing window.
    pub fn erasure_probability(&self, cycle: EmissionCycle) -> f64 {
        match cycle {
            EmissionCycle::First => self.long_arm_probability(cycle),
            EmissionCycle::Second => 1.0 - self.long_arm_probability(cycle),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EmissionCycle {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arm {
    Short,
    Long,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DetectionPort {
    D,
    A,
    R,
    L,
    /// path-revealing event, H/V assigned from timing
    Z,
}

impl DetectionPort {
    pub const EQUATORIAL: [DetectionPort; 4] = [DetectionPort::D, DetectionPort::A, DetectionPort::R, DetectionPort::L];

    pub fn phase_offset(self, config: &InterferometerConfig) -> Option<f64> {
        match self {
            DetectionPort::D => Some(0.0),
            DetectionPort::A => Some(PI),
            DetectionPort::R => Some(config.rl_offset),
            DetectionPort::L => Some(config.rl_offset + PI),
            DetectionPort::Z => None,
        }
    }

    pub fn partner(self) -> Option<DetectionPort> {
        match self {
            DetectionPort::D => Some(DetectionPort::A),
            DetectionPort::A => Some(DetectionPort::D),
            DetectionPort::R => Some(DetectionPort::L),
            DetectionPort::L => Some(DetectionPort::R),
            DetectionPort::Z => None,
        }
    }
}

impl fmt::Display for DetectionPort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for DetectionPort {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "D" => Self::D,
            "A" => Self::A,
            "R" => Self::R,
            "L" => Self::L,
            "Z" => Self::Z,
            other => return Err(format!("unknown port `{other}`")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ArrivalClass {
    EarlyRevealing,
    Erased,
    LateRevealing,
    Invalid,
}

impl fmt::Display for ArrivalClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for ArrivalClass {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "EarlyRevealing" => Self::EarlyRevealing,
            "Erased" => Self::Erased,
            "LateRevealing" => Self::LateRevealing,
            "Invalid" => Self::Invalid,
            other => return Err(format!("unknown arrival class `{other}`")),
        })
    }
}

/// Arrival time and polarization of a photon emitted at `t_emit` in `cycle`
/// that takes `arm`. The short arm has zero extra latency.
pub fn route(cycle: EmissionCycle, arm: Arm, t_emit: f64, config: &InterferometerConfig) -> (f64, Polarization) {
    let _ = cycle;
    match arm {
        Arm::Short => (t_emit, config.short_arm_pol),
        Arm::Long => (t_emit + config.delay_ns, config.long_arm_pol),
    }
}

/// Classifies an arrival time against the erased-window centre `t_ref`.
pub fn classify_arrival(t: f64, t_ref: f64, config: &InterferometerConfig) -> ArrivalClass {
    let w = config.window_ns;
    let d = t - t_ref;
    if d.abs() <= w {
        ArrivalClass::Erased
    } else if (d + config.delay_ns).abs() <= w {
        ArrivalClass::EarlyRevealing
    } else if (d - config.delay_ns).abs() <= w {
        ArrivalClass::LateRevealing
    } else {
        ArrivalClass::Invalid
    }
}

/// Heralded time-bin → polarization conversion.
///
/// `bin1` (first emission cycle, long arm) maps to `|H⟩` with amplitude
/// `√p_long · e^{iφ}`, `bin2` (second cycle, short arm) to `|V⟩` with
/// `√(1 − p_long)`. The two bins are replaced by the polarization qubit
/// `photon`, appended after the remaining subsystems. Returns the renormalized
/// heralded state and the heralding probability.
pub fn tpc_transform(
    state: &QuantumState,
    bin1: &str,
    bin2: &str,
    photon: &str,
    config: &InterferometerConfig,
) -> Result<(QuantumState, f64)> {
    for b in [bin1, bin2] {
        if state.subsystem(b)?.dim != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: state.subsystem(b)?.dim });
        }
    }
    let bins = state.partial_trace(&[bin1, bin2])?.permute(&[bin1, bin2])?.density_matrix();
    let both = bins[(3, 3)].re;
    if both > 1e-10 {
        return Err(Error::BothBinsOccupied(both));
    }
    convert_bins(state, bin1, bin2, photon, config, config.phase)
}

/// Heralded conversion without the single-photon precondition: components with
/// both bins occupied are discarded (they never produce a single erased click).
pub fn convert_bins(
    state: &QuantumState,
    bin1: &str,
    bin2: &str,
    photon: &str,
    config: &InterferometerConfig,
    phase: f64,
) -> Result<(QuantumState, f64)> {
    let kraus = tpc_kraus(config, phase);
    let out = state.map_subsystems(&[bin1, bin2], &kraus, vec![Subsystem::new(photon, 2)?])?;
    let success = out.norm_sqr();
    if success <= 0.0 {
        return Err(Error::InvalidState("no heralded amplitude".into()));
    }
    Ok((out.renormalized()?, success))
}

/// Kraus operators (2×4, columns |n1 n2⟩) of the heralded conversion at phase `phase`.
pub fn tpc_kraus(config: &InterferometerConfig, phase: f64) -> Vec<DMatrix<C64>> {
    let a_h = config.erasure_probability(EmissionCycle::First).sqrt();
    let a_v = config.erasure_probability(EmissionCycle::Second).sqrt();
    let idx_b1 = bin::ONE * 2 + bin::VAC;
    let idx_b2 = bin::VAC * 2 + bin::ONE;
    let h = config.long_arm_pol.index();
    let v = config.short_arm_pol.index();
    let vis = config.erasure_visibility;
    let mut coherent = DMatrix::<C64>::zeros(2, 4);
    coherent[(h, idx_b1)] = c(0.0, phase).exp() * a_h * vis.sqrt();
    coherent[(v, idx_b2)] = cr(a_v * vis.sqrt());
    let mut out = vec![coherent];
    if vis < 1.0 {
        let mut kh = DMatrix::<C64>::zeros(2, 4);
        kh[(h, idx_b1)] = cr(a_h * (1.0 - vis).sqrt());
        let mut kv = DMatrix::<C64>::zeros(2, 4);
        kv[(v, idx_b2)] = cr(a_v * (1.0 - vis).sqrt());
        out.push(kh);
        out.push(kv);
    }
    out
}

/// Projector of `port` and of its orthogonal partner, onto
/// `(|H⟩ ± e^{i(φ + offset)}|V⟩)/√2` with φ = `config.phase`.
pub fn port_projector(port: DetectionPort, photon: &str, config: &InterferometerConfig) -> Result<(Operator, Operator)> {
    let offset = port.phase_offset(config).ok_or_else(|| Error::TimingPort(port.to_string()))?;
    let partner = port.partner().expect("equatorial port has a partner");
    let make = |o: f64| {
        let mut ket = [cr(0.0); 2];
        ket[pol::H] = cr(1.0);
        ket[pol::V] = c(0.0, config.phase + o).exp();
        Operator { matrix: ket_projector(&ket), targets: vec![photon.to_string()] }
    };
    Ok((make(offset), make(partner.phase_offset(config).unwrap())))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSample {
    pub phase: f64,
    pub readout: f64,
}

/// Gaussian random walk of the interferometer phase, wrapped to [0, 2π), with a
/// noisy readout.
#[derive(Debug, Clone)]
pub struct PhaseWalk {
    phase: f64,
    drift_sigma: f64,
    readout_sigma: f64,
}

pub fn wrap_phase(x: f64) -> f64 {
    x.rem_euclid(TAU)
}

impl PhaseWalk {
    pub fn new(config: &InterferometerConfig) -> Self {
        Self {
            phase: wrap_phase(config.phase),
            drift_sigma: config.drift_sigma,
            readout_sigma: config.phase_readout_sigma,
        }
    }

    /// Walk with the noise parameters of `config` and an explicit start phase.
    pub fn starting_at(config: &InterferometerConfig, phase: f64) -> Self {
        Self { phase: wrap_phase(phase), ..Self::new(config) }
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    /// Advances by `dt_ns` and returns the new true phase with a noisy readout.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R, dt_ns: f64) -> PhaseSample {
        let dt = dt_ns.max(0.0);
        let z: f64 = StandardNormal.sample(rng);
        self.phase = wrap_phase(self.phase + self.drift_sigma * dt.sqrt() * z);
        let e: f64 = StandardNormal.sample(rng);
        PhaseSample { phase: self.phase, readout: wrap_phase(self.phase + self.readout_sigma * e) }
    }
}

/// Signed difference `a − b` folded into (−π, π].
pub fn phase_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levels::{qubit_subsystem, spin, SPIN};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn cfg() -> InterferometerConfig {
        InterferometerConfig::default()
    }

    #[test]
    fn routing_table() {
        let c = cfg();
        let t1 = 100.0;
        let t2 = t1 + c.delay_ns;
        let early = route(EmissionCycle::First, Arm::Short, t1, &c);
        let e_long = route(EmissionCycle::First, Arm::Long, t1, &c);
        let l_short = route(EmissionCycle::Second, Arm::Short, t2, &c);
        let late = route(EmissionCycle::Second, Arm::Long, t2, &c);
        assert_eq!(early.1, Polarization::V);
        assert_eq!(e_long.1, Polarization::H);
        assert_eq!(l_short.1, Polarization::V);
        assert_eq!(late.1, Polarization::H);
        assert_eq!(e_long.0, l_short.0);
        assert!(early.0 < e_long.0 && e_long.0 < late.0);
    }

    #[test]
    fn arrival_classes() {
        let c = cfg();
        let t_ref = 1000.0;
        assert_eq!(classify_arrival(t_ref, t_ref, &c), ArrivalClass::Erased);
        assert_eq!(classify_arrival(t_ref - c.delay_ns, t_ref, &c), ArrivalClass::EarlyRevealing);
        assert_eq!(classify_arrival(t_ref + c.delay_ns, t_ref, &c), ArrivalClass::LateRevealing);
        assert_eq!(classify_arrival(t_ref + c.delay_ns / 2.0, t_ref, &c), ArrivalClass::Invalid);
    }

    #[test]
    fn config_validation() {
        assert!(cfg().validate().is_ok());
        assert!(InterferometerConfig { split_ratio: 1.5, ..cfg() }.validate().is_err());
        assert!(InterferometerConfig { window_ns: 200.0, ..cfg() }.validate().is_err());
        assert!(InterferometerConfig { delay_ns: -1.0, ..cfg() }.validate().is_err());
    }

    fn bins_state(amp_b1: C64, amp_b2: C64, spin_b1: usize, spin_b2: usize) -> QuantumState {
        // spin qubit ⊗ bin1 ⊗ bin2
        let subs = vec![qubit_subsystem(SPIN), qubit_subsystem("b1"), qubit_subsystem("b2")];
        let mut v = nalgebra::DVector::<C64>::zeros(8);
        v[spin_b1 * 4 + 2] = amp_b1;
        v[spin_b2 * 4 + 1] = amp_b2;
        let n = v.norm();
        QuantumState::pure(subs, v / cr(n)).unwrap()
    }

    #[test]
    fn ideal_conversion_gives_bell_state() {
        // (|0⟩|b2⟩ + |−1⟩|b1⟩)/√2
        let s = bins_state(cr(1.0), cr(1.0), 1, 0);
        let (out, p) = tpc_transform(&s, "b1", "b2", "ph", &cfg()).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        let mut v = nalgebra::DVector::<C64>::zeros(4);
        v[spin::G0 * 2 + pol::V] = cr(FRAC_1_SQRT_2);
        v[spin::GM * 2 + pol::H] = cr(FRAC_1_SQRT_2);
        let target = QuantumState::pure(out.subsystems().to_vec(), v).unwrap();
        assert!((out.fidelity_pure(&target).unwrap() - 1.0).abs() < 1e-12);

        let c_pi = InterferometerConfig { phase: PI, ..cfg() };
        let (out, _) = tpc_transform(&s, "b1", "b2", "ph", &c_pi).unwrap();
        let mut v = nalgebra::DVector::<C64>::zeros(4);
        v[pol::V] = cr(FRAC_1_SQRT_2);
        v[2 + pol::H] = cr(-FRAC_1_SQRT_2);
        let target = QuantumState::pure(out.subsystems().to_vec(), v).unwrap();
        assert!((out.fidelity_pure(&target).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_bin_maps_to_h() {
        let s = bins_state(cr(1.0), cr(0.0), 0, 0);
        let (out, _) = tpc_transform(&s, "b1", "b2", "ph", &cfg()).unwrap();
        let ph = out.partial_trace(&["ph"]).unwrap().density_matrix();
        assert!((ph[(pol::H, pol::H)].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn both_bins_rejected() {
        let subs = vec![qubit_subsystem("b1"), qubit_subsystem("b2")];
        let s = QuantumState::basis(subs, &[1, 1]).unwrap();
        assert!(matches!(tpc_transform(&s, "b1", "b2", "ph", &cfg()), Err(Error::BothBinsOccupied(_))));
    }

    #[test]
    fn port_projectors() {
        let c0 = cfg();
        let (d, a) = port_projector(DetectionPort::D, "ph", &c0).unwrap();
        let half = cr(0.5);
        assert!((d.matrix[(0, 1)] - half).norm() < 1e-15);
        assert!((a.matrix[(0, 1)] + half).norm() < 1e-15);
        assert!((&d.matrix * &a.matrix).iter().all(|z| z.norm() < 1e-15));
        let (r, _) = port_projector(DetectionPort::R, "ph", &c0).unwrap();
        // ⟨H|P_R|V⟩ = e^{-iπ/4}/2
        assert!((r.matrix[(0, 1)] - c(0.0, -FRAC_PI_4).exp() * 0.5).norm() < 1e-15);
        assert!(matches!(port_projector(DetectionPort::Z, "ph", &c0), Err(Error::TimingPort(_))));
        for phase in [0.0, 0.3, 2.0, 5.5] {
            let cp = InterferometerConfig { phase, ..cfg() };
            for port in [DetectionPort::D, DetectionPort::R] {
                let (p, q) = port_projector(port, "ph", &cp).unwrap();
                let sum = &p.matrix + &q.matrix;
                assert!((sum - DMatrix::<C64>::identity(2, 2)).iter().all(|z| z.norm() < 1e-14));
            }
        }
    }

    #[test]
    fn phase_walk_behaviour() {
        let still = InterferometerConfig { drift_sigma: 0.0, phase_readout_sigma: 0.0, phase: 1.25, ..cfg() };
        let mut w = PhaseWalk::new(&still);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert_eq!(w.step(&mut rng, 1000.0).readout, 1.25);
        }

        let noisy = InterferometerConfig { drift_sigma: 0.0, ..cfg() };
        let mut w = PhaseWalk::new(&noisy);
        let errs: Vec<f64> = (0..10_000)
            .map(|_| {
                let s = w.step(&mut rng, 10.0);
                phase_difference(s.readout, s.phase)
            })
            .collect();
        let mean = errs.iter().sum::<f64>() / errs.len() as f64;
        let sd = (errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (errs.len() - 1) as f64).sqrt();
        assert!((sd - 0.18).abs() < 0.05 * 0.18, "sd = {sd}");

        let run = |seed| {
            let mut w = PhaseWalk::new(&cfg());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50).map(|_| w.step(&mut rng, 1e5)).collect::<Vec<_>>()
        };
        assert_eq!(run(9), run(9));
    }
}
