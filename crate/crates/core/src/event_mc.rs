//! Monte Carlo generation of timestamped click records.
//!
//! Each cycle samples the photon-number sector of the emission-stage state
//! (spin ⊗ a1 ⊗ a2), thins detected photons by the ZPL efficiency, routes them
//! through the interferometer, Born-samples the quadrature port of erased
//! photons and finally samples the PSB spin readout from the spin state
//! conditioned on everything seen in that cycle. The spin conditionals are
//! linear in the 7×7 blocks of the emission-stage state, so only a handful of
//! precomputed traces are needed per cycle.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::emitter::EmitterParams;
use crate::error::{check_probability, Error, Result};
use crate::levels::{ry, spin, SPIN};
use crate::optics::{classify_arrival, ArrivalClass, DetectionPort, EmissionCycle, InterferometerConfig, PhaseWalk};
use crate::protocol::{build_sequence, emission_state, PrepSign, ProtocolConfig, Sequence};
use crate::qsim::{c, QuantumState, C64};
use crate::records::{pair_coincidences, ClickRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionParams {
    /// source-to-click probability of a ZPL photon, per optical excitation
    pub zpl_efficiency: f64,
    /// uniform background click rate per equatorial port
    pub background_rate_hz: f64,
    /// probability of a PSB click independent of the spin state
    pub readout_dark_prob: f64,
}

impl Default for DetectionParams {
    fn default() -> Self {
        Self { zpl_efficiency: 2e-5, background_rate_hz: 0.0, readout_dark_prob: 0.0 }
    }
}

impl DetectionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.zpl_efficiency > 0.0 && self.zpl_efficiency <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "zpl_efficiency".into(),
                reason: format!("{} is not in (0, 1]", self.zpl_efficiency),
            });
        }
        if !(self.background_rate_hz >= 0.0) || !self.background_rate_hz.is_finite() {
            return Err(Error::InvalidParameter { name: "background_rate_hz".into(), reason: "must be >= 0".into() });
        }
        check_probability("readout_dark_prob", self.readout_dark_prob)
    }

    /// Click probability of one emitted ZPL photon.
    pub fn photon_detection_probability(&self, emitter: &EmitterParams) -> f64 {
        (self.zpl_efficiency / emitter.zpl_fraction).min(1.0)
    }
}

/// Length of the per-cycle ZPL acquisition interval, centred on the erased window.
pub fn detection_span_ns(ifm: &InterferometerConfig) -> f64 {
    3.0 * ifm.delay_ns
}

const TRACE: usize = 0;
const ZERO_Z: usize = 1;
const ZERO_X: usize = 2;

/// Emission-stage blocks of one preparation, reduced to the linear functionals
/// `Tr(M B)` for M ∈ {1, |0⟩⟨0|, R†|0⟩⟨0|R} with R = R_y(π/2).
#[derive(Debug, Clone)]
struct SectorModel {
    b1: [f64; 3],
    b2: [f64; 3],
    cross: [C64; 3],
    both: [f64; 3],
    all: [f64; 3],
}

/// Coefficients of a spin conditional in terms of the emission blocks.
#[derive(Debug, Clone, Copy, Default)]
struct Conditional {
    b1: f64,
    b2: f64,
    cross: C64,
    both: f64,
    all: f64,
}

impl SectorModel {
    fn from_state(state: &QuantumState) -> Result<Self> {
        let order = [SPIN, "a1", "a2"];
        let rho = state.permute(&order)?.density_matrix();
        let dim = state.subsystem(SPIN)?.dim;
        if rho.nrows() != dim * 4 {
            return Err(Error::DimensionMismatch { expected: dim * 4, found: rho.nrows() });
        }
        let block = |x: usize, y: usize| DMatrix::from_fn(dim, dim, |i, j| rho[(i * 4 + x, j * 4 + y)]);
        let readout = readout_functionals(dim);
        let eval = |b: &DMatrix<C64>| -> [C64; 3] { std::array::from_fn(|k| (&readout[k] * b).trace()) };
        let re = |v: [C64; 3]| v.map(|z| z.re);
        // bin index n1 * 2 + n2
        let (b1, b2, both) = (block(2, 2), block(1, 1), block(3, 3));
        let all = block(0, 0) + &b1 + &b2 + &both;
        Ok(Self {
            b1: re(eval(&b1)),
            b2: re(eval(&b2)),
            cross: eval(&block(2, 1)),
            both: re(eval(&both)),
            all: re(eval(&all)),
        })
    }

    fn eval(&self, k: usize, w: &Conditional) -> f64 {
        w.b1 * self.b1[k] + w.b2 * self.b2[k] + 2.0 * (w.cross * self.cross[k]).re + w.both * self.both[k] + w.all * self.all[k]
    }

    fn single(&self) -> f64 {
        self.b1[TRACE] + self.b2[TRACE]
    }
}

fn readout_functionals(dim: usize) -> [DMatrix<C64>; 3] {
    let mut p0 = DMatrix::<C64>::zeros(dim, dim);
    p0[(spin::G0, spin::G0)] = c(1.0, 0.0);
    let r = if dim == spin::DIM {
        ry(FRAC_PI_2).matrix
    } else {
        crate::qsim::subspace_ry(FRAC_PI_2, dim, spin::G0, spin::GM)
    };
    let mx = r.adjoint() * &p0 * &r;
    [DMatrix::identity(dim, dim), p0, mx]
}

/// Per-preparation emission-stage statistics driving the Monte Carlo.
#[derive(Debug, Clone)]
pub struct EmissionSource {
    minus: SectorModel,
    plus: SectorModel,
}

impl EmissionSource {
    /// From emission-stage states over `spin ⊗ a1 ⊗ a2`.
    pub fn from_emission_states(minus: &QuantumState, plus: &QuantumState) -> Result<Self> {
        Ok(Self { minus: SectorModel::from_state(minus)?, plus: SectorModel::from_state(plus)? })
    }

    /// Emission-stage states computed from the emitter model.
    pub fn from_physics(emitter: &EmitterParams, protocol: &ProtocolConfig, ifm: &InterferometerConfig) -> Result<Self> {
        let state = |sign| -> Result<QuantumState> {
            let cfg = ProtocolConfig { prep_sign: sign, n_photons: 1, ..protocol.clone() };
            emission_state(&build_sequence(&cfg, ifm)?, emitter)
        };
        Self::from_emission_states(&state(PrepSign::Minus)?, &state(PrepSign::Plus)?)
    }

    /// From two-qubit states over (spin qubit, polarization) in the order
    /// (|0,H⟩, |0,V⟩, |−1,H⟩, |−1,V⟩), read as the single-photon emission
    /// stage with H ↔ first bin and V ↔ second bin.
    pub fn from_two_qubit(minus: &DMatrix<C64>, plus: &DMatrix<C64>) -> Result<Self> {
        let lift = |rho: &DMatrix<C64>| -> Result<QuantumState> {
            if rho.shape() != (4, 4) {
                return Err(Error::DimensionMismatch { expected: 4, found: rho.nrows() });
            }
            let mut big = DMatrix::<C64>::zeros(8, 8);
            // photon index: H → |10⟩ (2), V → |01⟩ (1)
            let map = |i: usize| (i / 2) * 4 + if i.is_multiple_of(2) { 2 } else { 1 };
            for i in 0..4 {
                for j in 0..4 {
                    big[(map(i), map(j))] = rho[(i, j)];
                }
            }
            let subs = vec![
                crate::qsim::Subsystem::new(SPIN, 2)?,
                crate::qsim::Subsystem::new("a1", 2)?,
                crate::qsim::Subsystem::new("a2", 2)?,
            ];
            let s = QuantumState::mixed(subs, big)?;
            s.validate()?;
            Ok(s)
        };
        Self::from_emission_states(&lift(minus)?, &lift(plus)?)
    }

    fn model(&self, sign: PrepSign) -> &SectorModel {
        match sign {
            PrepSign::Minus => &self.minus,
            PrepSign::Plus => &self.plus,
        }
    }

    /// Probability that the emission stage holds exactly one ZPL photon.
    pub fn single_photon_probability(&self, sign: PrepSign) -> f64 {
        self.model(sign).single()
    }

    /// Probability that both bins hold a ZPL photon.
    pub fn two_photon_probability(&self, sign: PrepSign) -> f64 {
        self.model(sign).both[TRACE]
    }
}

/// Everything the Monte Carlo needs for one run.
#[derive(Debug, Clone)]
pub struct McSetup {
    pub emitter: EmitterParams,
    pub interferometer: InterferometerConfig,
    pub protocol: ProtocolConfig,
    pub detection: DetectionParams,
    pub source: EmissionSource,
    sequence: Sequence,
}

impl McSetup {
    pub fn new(
        emitter: EmitterParams,
        interferometer: InterferometerConfig,
        protocol: ProtocolConfig,
        detection: DetectionParams,
    ) -> Result<Self> {
        let source = EmissionSource::from_physics(&emitter, &protocol, &interferometer)?;
        Self::with_source(emitter, interferometer, protocol, detection, source)
    }

    pub fn with_source(
        emitter: EmitterParams,
        interferometer: InterferometerConfig,
        protocol: ProtocolConfig,
        detection: DetectionParams,
        source: EmissionSource,
    ) -> Result<Self> {
        emitter.validate()?;
        if protocol.n_photons != 1 {
            return Err(Error::InvalidParameter {
                name: "n_photons".into(),
                reason: "the click-record simulation covers single-photon cycles".into(),
            });
        }
        if !(0.0..=1.0).contains(&detection.zpl_efficiency) {
            return Err(Error::InvalidParameter { name: "zpl_efficiency".into(), reason: "must be in [0, 1]".into() });
        }
        if !(detection.background_rate_hz >= 0.0) {
            return Err(Error::InvalidParameter { name: "background_rate_hz".into(), reason: "must be >= 0".into() });
        }
        check_probability("readout_dark_prob", detection.readout_dark_prob)?;
        let sequence = build_sequence(&protocol, &interferometer)?;
        Ok(Self { emitter, interferometer, protocol, detection, source, sequence })
    }

    /// Offset of the erased-window centre from the cycle start.
    pub fn erased_reference_ns(&self) -> f64 {
        self.sequence.optical_pulse_times()[0] + self.interferometer.delay_ns
    }

    /// Expected number of single-click cycles with a PSB readout click, per
    /// cycle, without background (the coincidence rate of an hour-long run is
    /// this times the number of cycles).
    pub fn expected_coincidences_per_cycle(&self) -> f64 {
        let ifm = &self.interferometer;
        let p = self.detection.photon_detection_probability(&self.emitter);
        let (s1, s2) = (ifm.long_arm_probability(EmissionCycle::First), ifm.long_arm_probability(EmissionCycle::Second));
        let (e1, e2) = (s1, 1.0 - s2);
        let pr = self.emitter.p_readout_click;
        let dark = self.detection.readout_dark_prob;
        let click = |m: &SectorModel, k: usize, w: Conditional| pr * m.eval(k, &w) + dark * m.eval(TRACE, &w);
        let mut total = 0.0;
        for sign in [PrepSign::Minus, PrepSign::Plus] {
            let share = if self.protocol.alternate_prep {
                0.5
            } else if sign == self.protocol.prep_sign {
                1.0
            } else {
                0.0
            };
            if share == 0.0 {
                continue;
            }
            let m = self.source.model(sign);
            let one = |b1: f64, b2: f64| Conditional { b1, b2, ..Default::default() };
            let single = click(m, ZERO_Z, one(1.0 - s1, 0.0))
                + click(m, ZERO_Z, one(0.0, s2))
                + click(m, ZERO_X, one(e1, e2));
            let both_w = |k| click(m, k, Conditional { both: 1.0, ..Default::default() });
            let only_first = s1 * both_w(ZERO_X) + (1.0 - s1) * both_w(ZERO_Z);
            let only_second = e2 * both_w(ZERO_X) + s2 * both_w(ZERO_Z);
            total += share * (p * single + p * (1.0 - p) * (only_first + only_second));
        }
        total
    }
}

pub const BLOCK_CYCLES: u64 = 4096;

fn stream_rng(seed: u64, domain: u8, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8] = domain;
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

struct Click {
    t: f64,
    port: DetectionPort,
    class: ArrivalClass,
}

struct CycleContext<'a> {
    setup: &'a McSetup,
    p_det: f64,
    s1: f64,
    s2: f64,
    bg_mean: f64,
    span: f64,
    t_ref: f64,
}

impl CycleContext<'_> {
    fn new(setup: &McSetup) -> CycleContext<'_> {
        let ifm = &setup.interferometer;
        let span = detection_span_ns(ifm);
        CycleContext {
            setup,
            p_det: setup.detection.photon_detection_probability(&setup.emitter),
            s1: ifm.long_arm_probability(EmissionCycle::First),
            s2: ifm.long_arm_probability(EmissionCycle::Second),
            bg_mean: setup.detection.background_rate_hz * 1e-9 * span * 4.0,
            span,
            t_ref: setup.erased_reference_ns(),
        }
    }

    fn run<R: Rng>(&self, cycle_id: u64, phase: f64, phase_readout: f64, rng: &mut R) -> Vec<ClickRecord> {
        let setup = self.setup;
        let ifm = &setup.interferometer;
        let delay = ifm.delay_ns;
        let sign = setup.protocol.prep_for_cycle(cycle_id);
        let m = setup.source.model(sign);
        let mut clicks: Vec<Click> = Vec::new();
        let mut cond: Option<Conditional> = None;

        let u = rng.random::<f64>();
        let single = m.single();
        if u < single {
            if rng.random::<f64>() < self.p_det {
                let (t11, t22) = (m.b1[TRACE], m.b2[TRACE]);
                let (e1, e2) = (self.s1, 1.0 - self.s2);
                let w_early = (1.0 - self.s1) * t11;
                let w_late = self.s2 * t22;
                let w_erased = e1 * t11 + e2 * t22;
                let x = rng.random::<f64>() * (w_early + w_late + w_erased);
                if x < w_early {
                    clicks.push(Click { t: self.t_ref - delay, port: random_port(rng), class: ArrivalClass::EarlyRevealing });
                    cond = Some(Conditional { b1: 1.0, ..Default::default() });
                } else if x < w_early + w_late {
                    clicks.push(Click { t: self.t_ref + delay, port: random_port(rng), class: ArrivalClass::LateRevealing });
                    cond = Some(Conditional { b2: 1.0, ..Default::default() });
                } else {
                    let pair = if rng.random::<bool>() { DetectionPort::D } else { DetectionPort::R };
                    let v = ifm.erasure_visibility;
                    let weights = |port: DetectionPort| {
                        let o = port.phase_offset(ifm).expect("equatorial port");
                        let alpha = c(0.0, phase).exp() * (e1 * v / 2.0).sqrt();
                        let beta = c(0.0, -o).exp() * (e2 * v / 2.0).sqrt();
                        Conditional {
                            b1: alpha.norm_sqr() + e1 * (1.0 - v) / 2.0,
                            b2: beta.norm_sqr() + e2 * (1.0 - v) / 2.0,
                            cross: alpha * beta.conj(),
                            ..Default::default()
                        }
                    };
                    let wa = weights(pair);
                    let partner = pair.partner().expect("equatorial port");
                    let wb = weights(partner);
                    let pa = m.eval(TRACE, &wa).max(0.0);
                    let pb = m.eval(TRACE, &wb).max(0.0);
                    let (port, w) = if rng.random::<f64>() * (pa + pb) < pa { (pair, wa) } else { (partner, wb) };
                    clicks.push(Click { t: self.t_ref, port, class: ArrivalClass::Erased });
                    cond = Some(w);
                }
            }
        } else if u < single + m.both[TRACE] {
            // two photons, which-path known: route each independently
            for first in [true, false] {
                if rng.random::<f64>() < self.p_det {
                    let long = rng.random::<f64>() < if first { self.s1 } else { self.s2 };
                    let (t, class) = match (first, long) {
                        (true, false) => (self.t_ref - delay, ArrivalClass::EarlyRevealing),
                        (false, true) => (self.t_ref + delay, ArrivalClass::LateRevealing),
                        _ => (self.t_ref, ArrivalClass::Erased),
                    };
                    clicks.push(Click { t, port: random_port(rng), class });
                    cond = Some(Conditional { both: 1.0, ..Default::default() });
                }
            }
        }

        if self.bg_mean > 0.0 {
            let n = Poisson::new(self.bg_mean).map(|d| d.sample(rng) as usize).unwrap_or(0);
            for _ in 0..n {
                let t = self.t_ref - self.span / 2.0 + rng.random::<f64>() * self.span;
                let class = classify_arrival(t, self.t_ref, ifm);
                clicks.push(Click { t, port: random_port(rng), class });
            }
        }
        if clicks.is_empty() {
            return Vec::new();
        }
        clicks.sort_by(|a, b| a.t.total_cmp(&b.t));

        let basis = if clicks[0].class == ArrivalClass::Erased { ZERO_X } else { ZERO_Z };
        let w = cond.unwrap_or(Conditional { all: 1.0, ..Default::default() });
        let norm = m.eval(TRACE, &w);
        let p0 = if norm > 0.0 { (m.eval(basis, &w) / norm).clamp(0.0, 1.0) } else { 0.0 };
        let p_click = (setup.emitter.p_readout_click * p0 + setup.detection.readout_dark_prob).clamp(0.0, 1.0);
        let readout_click = rng.random::<f64>() < p_click;

        let t0 = cycle_id as f64 * setup.protocol.cycle_period_ns;
        clicks
            .into_iter()
            .map(|k| ClickRecord {
                cycle_id,
                port: k.port,
                arrival_class: k.class,
                t_ns: t0 + k.t,
                phase_rad: phase_readout,
                prep_sign: sign,
                readout_click,
            })
            .collect()
    }
}

fn random_port<R: Rng>(rng: &mut R) -> DetectionPort {
    DetectionPort::EQUATORIAL[rng.random_range(0..4)]
}

/// Output of [`simulate_cycles`].
#[derive(Debug, Clone)]
pub struct Simulation {
    pub records: Vec<ClickRecord>,
    pub cycles: u64,
}

impl Simulation {
    pub fn heralds(&self) -> usize {
        self.records.iter().filter(|r| r.arrival_class == ArrivalClass::Erased).count()
    }

    pub fn coincidences(&self) -> usize {
        pair_coincidences(&self.records).map(|p| p.coincidences()).unwrap_or(0)
    }
}

/// Simulates `n_cycles` protocol cycles. The record stream depends only on
/// (`setup`, `seed`); `workers` sets the thread count (0 = rayon default).
pub fn simulate_cycles(n_cycles: u64, setup: &McSetup, seed: u64, workers: usize) -> Result<Simulation> {
    if n_cycles == 0 {
        return Err(Error::InvalidParameter { name: "cycles".into(), reason: "must be >= 1".into() });
    }
    let ifm = &setup.interferometer;
    let period = setup.protocol.cycle_period_ns;
    let n_blocks = n_cycles.div_ceil(BLOCK_CYCLES);
    let block_len = |b: u64| BLOCK_CYCLES.min(n_cycles - b * BLOCK_CYCLES);

    // block start phases: one sequential pass over the per-block phase streams
    let mut starts = Vec::with_capacity(n_blocks as usize);
    let mut walk = PhaseWalk::new(ifm);
    for b in 0..n_blocks {
        starts.push(walk.phase());
        let mut rng = stream_rng(seed, 1, b);
        let mut w = PhaseWalk::starting_at(ifm, walk.phase());
        for _ in 0..block_len(b) {
            w.step(&mut rng, period);
        }
        walk = w;
    }

    let ctx = CycleContext::new(setup);
    let run_block = |b: u64| -> Vec<ClickRecord> {
        let mut phase_rng = stream_rng(seed, 1, b);
        let mut w = PhaseWalk::starting_at(ifm, starts[b as usize]);
        let mut out = Vec::new();
        for i in 0..block_len(b) {
            let sample = w.step(&mut phase_rng, period);
            let cycle_id = b * BLOCK_CYCLES + i;
            let mut rng = stream_rng(seed, 0, cycle_id);
            out.extend(ctx.run(cycle_id, sample.phase, sample.readout, &mut rng));
        }
        out
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParameter { name: "workers".into(), reason: e.to_string() })?;
    let blocks: Vec<Vec<ClickRecord>> = pool.install(|| (0..n_blocks).into_par_iter().map(run_block).collect());
    Ok(Simulation { records: blocks.into_iter().flatten().collect(), cycles: n_cycles })
}

/// Phase offset used for an erased click at `port`; `None` for timing-only records.
pub fn port_offset(port: DetectionPort, ifm: &InterferometerConfig) -> Option<f64> {
    port.phase_offset(ifm).map(|o| o.rem_euclid(2.0 * PI))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ideal_setup(zpl_efficiency: f64, background_rate_hz: f64) -> McSetup {
        let detection = DetectionParams { zpl_efficiency, background_rate_hz, readout_dark_prob: 0.0 };
        let emitter = EmitterParams { p_readout_click: 1.0, ..EmitterParams::ideal() };
        McSetup::new(emitter, InterferometerConfig::default(), ProtocolConfig::default(), detection).unwrap()
    }

    fn count(recs: &[ClickRecord], class: ArrivalClass) -> usize {
        recs.iter().filter(|r| r.arrival_class == class).count()
    }

    #[test]
    fn ideal_erased_fraction_is_half() {
        let sim = simulate_cycles(10_000, &ideal_setup(1.0, 0.0), 11, 2).unwrap();
        assert_eq!(sim.records.len(), 10_000);
        let f = count(&sim.records, ArrivalClass::Erased) as f64 / 1e4;
        assert!((f - 0.5).abs() < 3.0 * 0.005, "{f}");
        let early = count(&sim.records, ArrivalClass::EarlyRevealing) as f64 / 1e4;
        assert!((early - 0.25).abs() < 3.0 * (0.25f64 * 0.75 / 1e4).sqrt());
    }

    #[test]
    fn zero_efficiency_gives_no_records() {
        let sim = simulate_cycles(5_000, &ideal_setup(0.0, 0.0), 1, 1).unwrap();
        assert!(sim.records.is_empty());
    }

    #[test]
    fn ideal_correlations_are_perfect() {
        let sim = simulate_cycles(4_000, &ideal_setup(1.0, 0.0), 5, 0).unwrap();
        for r in &sim.records {
            match r.arrival_class {
                // |−1,H⟩ only: early (H) photons leave the spin in |−1⟩
                ArrivalClass::EarlyRevealing => assert!(!r.readout_click),
                ArrivalClass::LateRevealing => assert!(r.readout_click),
                _ => {}
            }
        }
    }

    #[test]
    fn worker_count_does_not_change_records() {
        let setup = ideal_setup(0.3, 2e5);
        let a = simulate_cycles(20_000, &setup, 99, 1).unwrap();
        let b = simulate_cycles(20_000, &setup, 99, 8).unwrap();
        assert_eq!(a.records, b.records);
        let c = simulate_cycles(20_000, &setup, 100, 8).unwrap();
        assert_ne!(a.records, c.records);
    }

    #[test]
    fn erased_port_frequencies_follow_born_rule() {
        // fixed phase: D/A outcome probabilities of the spin-averaged photon are ½
        let ifm = InterferometerConfig { drift_sigma: 0.0, phase_readout_sigma: 0.0, ..Default::default() };
        let detection = DetectionParams { zpl_efficiency: 1.0, ..Default::default() };
        let emitter = EmitterParams { p_readout_click: 1.0, ..EmitterParams::ideal() };
        let setup = McSetup::new(emitter, ifm, ProtocolConfig::default(), detection).unwrap();
        let sim = simulate_cycles(40_000, &setup, 3, 0).unwrap();
        let erased: Vec<_> = sim.records.iter().filter(|r| r.arrival_class == ArrivalClass::Erased).collect();
        let n = erased.len() as f64;
        let d = erased.iter().filter(|r| r.port == DetectionPort::D).count() as f64;
        let a = erased.iter().filter(|r| r.port == DetectionPort::A).count() as f64;
        assert!(((d + a) / n - 0.5).abs() < 3.0 * (0.25 / n).sqrt());
        // conditional on D at φ = 0 the spin is |+x⟩-like: R_y(π/2) then never |0⟩ for minus prep
        let d_click = erased
            .iter()
            .filter(|r| r.port == DetectionPort::D && r.prep_sign == PrepSign::Minus)
            .all(|r| !r.readout_click);
        assert!(d_click);
    }

    #[test]
    fn background_is_uniform_over_ports_and_windows() {
        let detection = DetectionParams { zpl_efficiency: 0.0, background_rate_hz: 5e5, readout_dark_prob: 0.0 };
        let setup = McSetup::new(EmitterParams::ideal(), InterferometerConfig::default(), ProtocolConfig::default(), detection)
            .unwrap();
        let sim = simulate_cycles(100_000, &setup, 8, 0).unwrap();
        let n = sim.records.len() as f64;
        let chi2: f64 = DetectionPort::EQUATORIAL
            .iter()
            .map(|p| {
                let o = sim.records.iter().filter(|r| r.port == *p).count() as f64;
                (o - n / 4.0).powi(2) / (n / 4.0)
            })
            .sum();
        // 3 degrees of freedom, p = 0.001
        assert!(chi2 < 16.27, "{chi2}");
        let ifm = InterferometerConfig::default();
        let frac = count(&sim.records, ArrivalClass::Erased) as f64 / n;
        let expect = 2.0 * ifm.window_ns / detection_span_ns(&ifm);
        assert!((frac - expect).abs() < 4.0 * (expect * (1.0 - expect) / n).sqrt());
    }

    #[test]
    fn expected_rate_matches_simulation() {
        let setup = ideal_setup(0.2, 0.0);
        let sim = simulate_cycles(50_000, &setup, 21, 0).unwrap();
        let expect = setup.expected_coincidences_per_cycle() * 50_000.0;
        let got = sim.coincidences() as f64;
        assert!((got - expect).abs() < 4.0 * expect.sqrt(), "{got} vs {expect}");
    }
}
