//! Correlation analysis of click records: diagonal tomography from
//! path-revealing events, phase-binned sinusoid fits of path-erased events,
//! background subtraction and the fidelity lower bound.
//!
//! Two-qubit ordering is (|0,H⟩, |0,V⟩, |−1,H⟩, |−1,V⟩); C_zz counts (0,V) and
//! (−1,H) as correlated.

use std::f64::consts::TAU;
use std::fmt;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::emitter::EmitterParams;
use crate::error::{Error, Result};
use crate::event_mc::{detection_span_ns, DetectionParams};
use crate::optics::{wrap_phase, ArrivalClass, EmissionCycle, InterferometerConfig};
use crate::protocol::PrepSign;
use crate::records::{pair_coincidences, ClickRecord};

/// A value with its one-sigma standard error.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn new(value: f64, error: f64) -> Self {
        Self { value, error }
    }
}

impl fmt::Display for Estimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6} ± {:.6}", self.value, self.error)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub phase_bins: usize,
    /// cells with fewer events are flagged in the report
    pub min_cell_counts: usize,
    /// fixed background fraction used when `auto_background` is off
    pub background_fraction: f64,
    pub auto_background: bool,
    /// phase-readout noise to deconvolve from fitted contrasts (0 = none)
    pub phase_sigma_correction: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            phase_bins: 16,
            min_cell_counts: 10,
            background_fraction: 0.0,
            auto_background: false,
            phase_sigma_correction: 0.0,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if self.phase_bins < 4 {
            return Err(Error::InvalidParameter { name: "phase_bins".into(), reason: "need at least 4 bins".into() });
        }
        if !(0.0..1.0).contains(&self.background_fraction) {
            return Err(Error::InvalidParameter { name: "background_fraction".into(), reason: "must be in [0, 1)".into() });
        }
        if !(self.phase_sigma_correction >= 0.0) {
            return Err(Error::InvalidParameter { name: "phase_sigma_correction".into(), reason: "must be >= 0".into() });
        }
        Ok(())
    }
}

/// Detector and interferometer constants needed to turn counts into populations.
#[derive(Debug, Clone)]
pub struct Calibration {
    pub p_readout_click: f64,
    pub readout_dark_prob: f64,
    pub interferometer: InterferometerConfig,
}

impl Calibration {
    pub fn new(emitter: &EmitterParams, detection: &DetectionParams, ifm: &InterferometerConfig) -> Self {
        Self {
            p_readout_click: emitter.p_readout_click,
            readout_dark_prob: detection.readout_dark_prob,
            interferometer: ifm.clone(),
        }
    }

    /// P(m_s = 0) from an observed PSB click fraction.
    fn population(&self, click_fraction: f64) -> f64 {
        (click_fraction - self.readout_dark_prob) / self.p_readout_click
    }
}

/// Standard error of a binomial proportion.
pub fn binomial_error(p: f64, n: usize) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Binomial standard error with the Jeffreys-regularized proportion, finite at k = 0 or n.
fn jeffreys_error(k: usize, n: usize) -> f64 {
    let p = (k as f64 + 0.5) / (n as f64 + 1.0);
    binomial_error(p, n)
}

/// `(F − 0.5)/σ_F`.
pub fn significance(bound: Estimate) -> f64 {
    (bound.value - 0.5) / bound.error
}

/// `0.5(ρ22 + ρ33 − 2√(ρ11ρ44) + c_xx)`, not clamped.
pub fn fidelity_bound(rho: [f64; 4], c_xx: f64) -> f64 {
    0.5 * (rho[1] + rho[2] - 2.0 * (rho[0] * rho[3]).max(0.0).sqrt() + c_xx)
}

/// `C / (1 − b)` for a uniform, uncorrelated background fraction `b`.
pub fn subtract_background(c: Estimate, b: f64) -> Result<Estimate> {
    if !(0.0..1.0).contains(&b) {
        return Err(Error::InvalidParameter { name: "background_fraction".into(), reason: format!("{b} is not in [0, 1)") });
    }
    Ok(Estimate::new(c.value / (1.0 - b), c.error / (1.0 - b)))
}

/// Removes a uniform weight `b/4` from each diagonal cell and renormalizes.
pub fn correct_diagonals(rho: [f64; 4], b: f64) -> [f64; 4] {
    rho.map(|r| (r - b / 4.0) / (1.0 - b))
}

/// Independent estimates behind the diagonal populations: the heralded H
/// weight and P(m_s = 0) after early (H) and late (V) revealing clicks.
#[derive(Debug, Clone)]
pub struct Diagonals {
    pub p_h: Estimate,
    pub q_early: Estimate,
    pub q_late: Estimate,
    /// (events, readout clicks) for early and late revealing windows
    pub early: (usize, usize),
    pub late: (usize, usize),
    pub flags: Vec<String>,
}

impl Diagonals {
    pub fn rho(&self, b: f64) -> [f64; 4] {
        rho_from(self.p_h.value, self.q_early.value, self.q_late.value, b)
    }

    fn inputs(&self) -> [Estimate; 3] {
        [self.p_h, self.q_early, self.q_late]
    }

    pub fn rho_errors(&self, b: f64) -> [f64; 4] {
        std::array::from_fn(|k| propagate(&self.inputs(), |x| rho_from(x[0], x[1], x[2], b)[k]))
    }

    pub fn c_zz(&self, b: f64) -> Estimate {
        let f = |x: &[f64]| {
            let r = rho_from(x[0], x[1], x[2], b);
            r[1] + r[2] - r[0] - r[3]
        };
        Estimate::new(f(&[self.p_h.value, self.q_early.value, self.q_late.value]), propagate(&self.inputs(), f))
    }
}

fn rho_from(p_h: f64, q_e: f64, q_l: f64, b: f64) -> [f64; 4] {
    let p_v = 1.0 - p_h;
    correct_diagonals([p_h * q_e, p_v * q_l, p_h * (1.0 - q_e), p_v * (1.0 - q_l)], b)
}

/// First-order propagation of independent errors through `f` (central differences).
pub fn propagate(inputs: &[Estimate], f: impl Fn(&[f64]) -> f64) -> f64 {
    let x0: Vec<f64> = inputs.iter().map(|e| e.value).collect();
    let mut var = 0.0;
    for (i, e) in inputs.iter().enumerate() {
        if e.error == 0.0 {
            continue;
        }
        let h = 1e-7_f64.max(1e-4 * e.error);
        let mut up = x0.clone();
        let mut dn = x0.clone();
        up[i] += h;
        dn[i] -= h;
        let g = (f(&up) - f(&dn)) / (2.0 * h);
        var += (g * e.error).powi(2);
    }
    var.sqrt()
}

/// Populations from path-revealing events read out in the Z basis.
pub fn diagonal_tomography(records: &[ClickRecord], cal: &Calibration, min_cell_counts: usize) -> Result<Diagonals> {
    let tally = |class| {
        let evts = records.iter().filter(|r| r.arrival_class == class);
        let n = evts.clone().count();
        (n, evts.filter(|r| r.readout_click).count())
    };
    let early = tally(ArrivalClass::EarlyRevealing);
    let late = tally(ArrivalClass::LateRevealing);
    if early.0 == 0 || late.0 == 0 {
        return Err(Error::InsufficientData("no path-revealing events in one of the outer windows".into()));
    }
    let ifm = &cal.interferometer;
    let s1 = ifm.long_arm_probability(EmissionCycle::First);
    let s2 = ifm.long_arm_probability(EmissionCycle::Second);
    // revealing rate → heralded weight of each emission cycle
    let a = ifm.erasure_probability(EmissionCycle::First) / (1.0 - s1);
    let b = ifm.erasure_probability(EmissionCycle::Second) / s2;
    let n = (early.0 + late.0) as f64;
    let f = early.0 as f64 / n;
    let p_h = a * f / (a * f + b * (1.0 - f));
    let dp = a * b / (a * f + b * (1.0 - f)).powi(2);
    let f_err = jeffreys_error(early.0, early.0 + late.0);

    let q = |(n, k): (usize, usize)| {
        Estimate::new(cal.population(k as f64 / n as f64), jeffreys_error(k, n) / cal.p_readout_click)
    };
    let mut flags = Vec::new();
    for (name, (n, k)) in [("early", early), ("late", late)] {
        if k < min_cell_counts || n - k < min_cell_counts {
            flags.push(format!("{name}-window readout cell below {min_cell_counts} events"));
        }
    }
    Ok(Diagonals { p_h: Estimate::new(p_h, dp * f_err), q_early: q(early), q_late: q(late), early, late, flags })
}

/// Sinusoid `P(+x | ϑ) = c + a cos ϑ + b sin ϑ` for one preparation.
#[derive(Debug, Clone)]
pub struct SinusoidFit {
    pub prep_sign: PrepSign,
    pub baseline: Estimate,
    /// full contrast `V = 2√(a² + b²)`
    pub amplitude: Estimate,
    /// `φ₀` in `c + (V/2) cos(ϑ − φ₀)`
    pub phase: Estimate,
    pub events: usize,
    pub bins: Vec<PhaseBin>,
}

#[derive(Debug, Clone)]
pub struct PhaseBin {
    pub center: f64,
    pub events: usize,
    /// calibrated P(+x) in this bin
    pub p_plus_x: f64,
    pub error: f64,
}

impl SinusoidFit {
    pub fn predict(&self, theta: f64) -> f64 {
        self.baseline.value + 0.5 * self.amplitude.value * (theta - self.phase.value).cos()
    }
}

#[derive(Debug, Clone)]
pub struct EquatorialFit {
    pub minus: SinusoidFit,
    pub plus: SinusoidFit,
    pub c_xx: Estimate,
}

/// Phase-binned weighted least-squares fits of erased events. `ϑ` is the
/// recorded phase plus the port offset; after the R_y(π/2) readout rotation a
/// PSB click signals −x.
pub fn fit_equatorial(records: &[ClickRecord], cal: &Calibration, cfg: &AnalysisConfig) -> Result<EquatorialFit> {
    let fit = |sign| fit_one(records, cal, cfg, sign);
    let minus = fit(PrepSign::Minus)?;
    let plus = fit(PrepSign::Plus)?;
    let anti = (minus.phase.value - plus.phase.value).cos() < 0.0;
    let shrink = (-cfg.phase_sigma_correction.powi(2) / 2.0).exp();
    let sign = if anti { 1.0 } else { -1.0 };
    let value = sign * 0.5 * (minus.amplitude.value + plus.amplitude.value) / shrink;
    let error = 0.5 * minus.amplitude.error.hypot(plus.amplitude.error) / shrink;
    Ok(EquatorialFit { minus, plus, c_xx: Estimate::new(value, error) })
}

fn fit_one(records: &[ClickRecord], cal: &Calibration, cfg: &AnalysisConfig, sign: PrepSign) -> Result<SinusoidFit> {
    let nb = cfg.phase_bins;
    let mut n = vec![0usize; nb];
    let mut k = vec![0usize; nb];
    for r in records.iter().filter(|r| r.arrival_class == ArrivalClass::Erased && r.prep_sign == sign) {
        let Some(offset) = r.port.phase_offset(&cal.interferometer) else { continue };
        let theta = wrap_phase(r.phase_rad + offset);
        let i = ((theta / TAU * nb as f64) as usize).min(nb - 1);
        n[i] += 1;
        k[i] += usize::from(r.readout_click);
    }
    let events: usize = n.iter().sum();
    let occupied = n.iter().filter(|&&c| c > 0).count();
    if occupied * 2 < nb {
        return Err(Error::Fit(format!("{sign} preparation: phase coverage {occupied}/{nb} bins is below half a period")));
    }
    let pr = cal.p_readout_click;
    let bins: Vec<PhaseBin> = (0..nb)
        .map(|i| {
            let f = if n[i] > 0 { k[i] as f64 / n[i] as f64 } else { 0.0 };
            PhaseBin {
                center: (i as f64 + 0.5) * TAU / nb as f64,
                events: n[i],
                p_plus_x: 1.0 - cal.population(f),
                error: jeffreys_error(k[i], n[i]) / pr,
            }
        })
        .collect();

    // per-event regression; the bins above only feed the coverage check and tables
    let events_xy: Vec<(Vector3<f64>, f64)> = records
        .iter()
        .filter(|r| r.arrival_class == ArrivalClass::Erased && r.prep_sign == sign)
        .filter_map(|r| {
            let theta = r.phase_rad + r.port.phase_offset(&cal.interferometer)?;
            let y = 1.0 - cal.population(f64::from(u8::from(r.readout_click)));
            Some((Vector3::new(1.0, theta.cos(), theta.sin()), y))
        })
        .collect();
    // two passes: equal weights, then binomial weights from the first fit
    let eps = 0.5 / (events as f64 + 1.0);
    let mut beta = Vector3::zeros();
    let mut cov = Matrix3::zeros();
    for pass in 0..2 {
        let mut xtwx = Matrix3::<f64>::zeros();
        let mut xtwy = Vector3::<f64>::zeros();
        for (x, y) in &events_xy {
            let w = if pass == 0 {
                1.0
            } else {
                let click = (cal.readout_dark_prob + pr * (1.0 - x.dot(&beta))).clamp(eps, 1.0 - eps);
                pr * pr / (click * (1.0 - click))
            };
            xtwx += w * x * x.transpose();
            xtwy += w * *y * x;
        }
        let inv = xtwx
            .try_inverse()
            .ok_or_else(|| Error::Fit(format!("{sign} preparation: singular normal equations")))?;
        beta = inv * xtwy;
        cov = inv;
    }
    let (c0, a, b) = (beta[0], beta[1], beta[2]);
    let r = a.hypot(b);
    let amp = 2.0 * r;
    let (amp_err, phase_err) = if r > 0.0 {
        let va = cov[(1, 1)];
        let vb = cov[(2, 2)];
        let vab = cov[(1, 2)];
        let amp_var = 4.0 * (a * a * va + b * b * vb + 2.0 * a * b * vab) / (r * r);
        let ph_var = (b * b * va + a * a * vb - 2.0 * a * b * vab) / r.powi(4);
        (amp_var.max(0.0).sqrt(), ph_var.max(0.0).sqrt())
    } else {
        (2.0 * cov[(1, 1)].max(cov[(2, 2)]).sqrt(), f64::INFINITY)
    };
    if !amp.is_finite() {
        return Err(Error::Fit(format!("{sign} preparation: fit did not converge")));
    }
    Ok(SinusoidFit {
        prep_sign: sign,
        baseline: Estimate::new(c0, cov[(0, 0)].sqrt()),
        amplitude: Estimate::new(amp, amp_err),
        phase: Estimate::new(b.atan2(a), phase_err),
        events,
        bins,
    })
}

/// Background fractions of erased and revealing clicks, from the rate of
/// clicks outside every window.
pub fn estimate_background(records: &[ClickRecord], ifm: &InterferometerConfig) -> (f64, f64) {
    let count = |c| records.iter().filter(|r| r.arrival_class == c).count() as f64;
    let invalid = count(ArrivalClass::Invalid);
    let window = 2.0 * ifm.window_ns;
    let invalid_width = detection_span_ns(ifm) - 3.0 * window;
    let per_ns = invalid / invalid_width;
    let erased = count(ArrivalClass::Erased);
    let revealing = count(ArrivalClass::EarlyRevealing) + count(ArrivalClass::LateRevealing);
    let frac = |bg: f64, total: f64| if total > 0.0 { (bg / total).min(0.99) } else { 0.0 };
    (frac(per_ns * window, erased), frac(per_ns * 2.0 * window, revealing))
}

#[derive(Debug, Clone)]
pub struct Correlations {
    pub rho: [Estimate; 4],
    pub c_zz: Estimate,
    pub c_xx: Estimate,
    pub f_bound: Estimate,
    pub significance: f64,
}

#[derive(Debug, Clone)]
pub struct CorrelationReport {
    pub records: usize,
    pub single_click_cycles: usize,
    pub rejected_cycles: usize,
    pub erased_events: usize,
    pub revealing_events: usize,
    pub background_erased: f64,
    pub background_revealing: f64,
    pub diagonals: Diagonals,
    pub fit: EquatorialFit,
    pub raw: Correlations,
    pub corrected: Correlations,
}

fn correlations(diag: &Diagonals, c_xx_raw: Estimate, b_rev: f64, b_er: f64) -> Result<Correlations> {
    let rho_v = diag.rho(b_rev);
    let rho_e = diag.rho_errors(b_rev);
    let c_xx = subtract_background(c_xx_raw, b_er)?;
    let mut inputs = diag.inputs().to_vec();
    inputs.push(c_xx);
    let f = |x: &[f64]| fidelity_bound(rho_from(x[0], x[1], x[2], b_rev), x[3]);
    let f_bound = Estimate::new(fidelity_bound(rho_v, c_xx.value), propagate(&inputs, f));
    Ok(Correlations {
        rho: std::array::from_fn(|k| Estimate::new(rho_v[k], rho_e[k])),
        c_zz: diag.c_zz(b_rev),
        c_xx,
        f_bound,
        significance: significance(f_bound),
    })
}

/// Full analysis of a record set.
pub fn analyze(records: &[ClickRecord], cal: &Calibration, cfg: &AnalysisConfig) -> Result<CorrelationReport> {
    cfg.validate()?;
    if records.is_empty() {
        return Err(Error::InsufficientData("no records".into()));
    }
    let mut sorted = records.to_vec();
    sorted.sort_by_key(|r| r.cycle_id);
    let pairing = pair_coincidences(&sorted)?;
    let kept: Vec<ClickRecord> = pairing.pairs.into_iter().map(|p| p.zpl).collect();
    let (b_er, b_rev) = if cfg.auto_background {
        estimate_background(&kept, &cal.interferometer)
    } else {
        (cfg.background_fraction, cfg.background_fraction)
    };
    let diagonals = diagonal_tomography(&kept, cal, cfg.min_cell_counts)?;
    let fit = fit_equatorial(&kept, cal, cfg)?;
    let raw = correlations(&diagonals, fit.c_xx, 0.0, 0.0)?;
    let corrected = correlations(&diagonals, fit.c_xx, b_rev, b_er)?;
    let class = |c| kept.iter().filter(|r| r.arrival_class == c).count();
    Ok(CorrelationReport {
        records: records.len(),
        single_click_cycles: kept.len(),
        rejected_cycles: pairing.rejected_cycles,
        erased_events: class(ArrivalClass::Erased),
        revealing_events: class(ArrivalClass::EarlyRevealing) + class(ArrivalClass::LateRevealing),
        background_erased: b_er,
        background_revealing: b_rev,
        diagonals,
        fit,
        raw,
        corrected,
    })
}

impl fmt::Display for CorrelationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "records = {}", self.records)?;
        writeln!(f, "single_click_cycles = {}", self.single_click_cycles)?;
        writeln!(f, "rejected_cycles = {}", self.rejected_cycles)?;
        writeln!(f, "erased_events = {}", self.erased_events)?;
        writeln!(f, "revealing_events = {}", self.revealing_events)?;
        writeln!(f, "background_fraction_erased = {:.6}", self.background_erased)?;
        writeln!(f, "background_fraction_revealing = {:.6}", self.background_revealing)?;
        for fit in [&self.fit.minus, &self.fit.plus] {
            let s = fit.prep_sign;
            writeln!(f, "fit_{s}_events = {}", fit.events)?;
            writeln!(f, "fit_{s}_amplitude = {}", fit.amplitude)?;
            writeln!(f, "fit_{s}_phase = {}", fit.phase)?;
            writeln!(f, "fit_{s}_baseline = {}", fit.baseline)?;
        }
        for (suffix, c) in [("raw", &self.raw), ("corrected", &self.corrected)] {
            for (k, r) in c.rho.iter().enumerate() {
                writeln!(f, "rho{0}{0}_{suffix} = {r}", k + 1)?;
            }
            writeln!(f, "c_zz_{suffix} = {}", c.c_zz)?;
            writeln!(f, "c_xx_{suffix} = {}", c.c_xx)?;
            writeln!(f, "f_bound_{suffix} = {}", c.f_bound)?;
            writeln!(f, "significance_{suffix} = {:.3}", c.significance)?;
        }
        for flag in &self.diagonals.flags {
            writeln!(f, "flag = {flag}")?;
        }
        Ok(())
    }
}

impl CorrelationReport {
    /// Diagonal populations as CSV (bar-chart data).
    pub fn diagonal_table(&self) -> String {
        let labels = ["0,H", "0,V", "-1,H", "-1,V"];
        let mut out = String::from("cell,state,raw,raw_error,corrected,corrected_error\n");
        for (k, label) in labels.iter().enumerate() {
            out.push_str(&format!(
                "rho{0}{0},\"|{1}>\",{2:.6},{3:.6},{4:.6},{5:.6}\n",
                k + 1,
                label,
                self.raw.rho[k].value,
                self.raw.rho[k].error,
                self.corrected.rho[k].value,
                self.corrected.rho[k].error
            ));
        }
        out
    }

    /// Binned P(+x) with the fitted curve as CSV, per preparation.
    pub fn fringe_table(&self) -> String {
        let mut out = String::from("prep_sign,bin_center_rad,events,p_plus_x,error,fit\n");
        for fit in [&self.fit.minus, &self.fit.plus] {
            for bin in &fit.bins {
                out.push_str(&format!(
                    "{},{:.6},{},{:.6},{:.6},{:.6}\n",
                    fit.prep_sign,
                    bin.center,
                    bin.events,
                    bin.p_plus_x,
                    bin.error,
                    fit.predict(bin.center)
                ));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::DetectionPort;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cal() -> Calibration {
        Calibration { p_readout_click: 1.0, readout_dark_prob: 0.0, interferometer: InterferometerConfig::default() }
    }

    fn record(cycle: u64, class: ArrivalClass, port: DetectionPort, phase: f64, sign: PrepSign, click: bool) -> ClickRecord {
        ClickRecord { cycle_id: cycle, port, arrival_class: class, t_ns: 0.0, phase_rad: phase, prep_sign: sign, readout_click: click }
    }

    /// Erased events drawn from P(+x) = ½(1 ± V cos ϑ).
    fn fringe(n: usize, v: f64, shift: f64, seed: u64) -> Vec<ClickRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let sign = if i % 2 == 0 { PrepSign::Minus } else { PrepSign::Plus };
                let s = if sign == PrepSign::Minus { 1.0 } else { -1.0 };
                let port = DetectionPort::EQUATORIAL[rng.random_range(0..4)];
                let phase = rng.random::<f64>() * TAU;
                let theta = phase + port.phase_offset(&InterferometerConfig::default()).unwrap();
                let p_plus = 0.5 * (1.0 + s * v * (theta + shift).cos());
                let click = rng.random::<f64>() >= p_plus;
                record(i as u64, ArrivalClass::Erased, port, phase, sign, click)
            })
            .collect()
    }

    #[test]
    fn binomial_error_example() {
        assert!((binomial_error(0.5, 10_000) - 0.005).abs() < 1e-15);
    }

    #[test]
    fn significance_examples() {
        assert!((significance(Estimate::new(0.647, 0.013)) - 11.3).abs() < 0.01);
        assert!((significance(Estimate::new(0.560, 0.009)) - 6.67).abs() < 0.01);
    }

    #[test]
    fn fidelity_bound_examples() {
        assert_eq!(fidelity_bound([0.0, 0.5, 0.5, 0.0], 1.0), 1.0);
        assert_eq!(fidelity_bound([0.25; 4], 0.0), 0.0);
        assert!(fidelity_bound([0.3, 0.0, 0.0, 0.3], -0.2) < 0.0);
    }

    #[test]
    fn background_algebra() {
        let c = subtract_background(Estimate::new(0.5, 0.01), 0.5).unwrap();
        assert!((c.value - 1.0).abs() < 1e-15);
        assert_eq!(subtract_background(Estimate::new(0.3, 0.0), 0.0).unwrap().value, 0.3);
        assert!(subtract_background(Estimate::new(0.3, 0.0), 1.0).is_err());
        let r = correct_diagonals([0.0625, 0.4375, 0.4375, 0.0625], 0.25);
        assert!((r[0]).abs() < 1e-15 && (r[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ideal_fringes_give_unit_contrast() {
        let recs = fringe(20_000, 1.0, 0.0, 1);
        let fit = fit_equatorial(&recs, &cal(), &AnalysisConfig::default()).unwrap();
        assert!((fit.c_xx.value - 1.0).abs() < 3.0 * fit.c_xx.error.max(1e-3), "{}", fit.c_xx);
        assert!(fit.minus.phase.value.abs() < 0.05);
        let d = (fit.minus.phase.value - fit.plus.phase.value).rem_euclid(TAU);
        assert!((d - std::f64::consts::PI).abs() < 0.05);
    }

    #[test]
    fn partial_contrast_is_recovered() {
        let recs = fringe(200_000, 0.407, 0.0, 2);
        let fit = fit_equatorial(&recs, &cal(), &AnalysisConfig::default()).unwrap();
        assert!((fit.c_xx.value - 0.407).abs() < 3.0 * fit.c_xx.error, "{}", fit.c_xx);
    }

    #[test]
    fn dephased_photons_give_zero_contrast() {
        let recs = fringe(50_000, 0.0, 0.0, 3);
        let fit = fit_equatorial(&recs, &cal(), &AnalysisConfig::default()).unwrap();
        for s in [&fit.minus, &fit.plus] {
            assert!(s.amplitude.value < 3.0 * s.amplitude.error + 0.02, "{}", s.amplitude);
        }
    }

    #[test]
    fn global_phase_shift_leaves_contrast_unchanged() {
        let base = fringe(20_000, 0.8, 0.0, 4);
        let shift = 0.7;
        let mut shifted = base.clone();
        for r in &mut shifted {
            r.phase_rad = wrap_phase(r.phase_rad + shift);
        }
        let cfg = AnalysisConfig::default();
        let a = fit_equatorial(&base, &cal(), &cfg).unwrap();
        let b = fit_equatorial(&shifted, &cal(), &cfg).unwrap();
        assert!((a.c_xx.value - b.c_xx.value).abs() < 1e-9, "{} {}", a.c_xx, b.c_xx);
    }

    #[test]
    fn narrow_phase_coverage_is_an_error() {
        let recs: Vec<_> = fringe(5_000, 1.0, 0.0, 5)
            .into_iter()
            .map(|mut r| {
                r.port = DetectionPort::D;
                r.phase_rad *= 0.3;
                r
            })
            .collect();
        assert!(matches!(fit_equatorial(&recs, &cal(), &AnalysisConfig::default()), Err(Error::Fit(_))));
    }

    fn revealing(n: usize, seed: u64, correlated: bool) -> Vec<ClickRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let early = rng.random::<bool>();
                let class = if early { ArrivalClass::EarlyRevealing } else { ArrivalClass::LateRevealing };
                // correlated: H ↔ −1 (no click), V ↔ 0 (click)
                let click = if correlated { !early } else { rng.random::<bool>() };
                record(i as u64, class, DetectionPort::D, 0.0, PrepSign::Minus, click)
            })
            .collect()
    }

    #[test]
    fn perfect_and_random_zz() {
        let d = diagonal_tomography(&revealing(10_000, 6, true), &cal(), 10).unwrap();
        assert!((d.c_zz(0.0).value - 1.0).abs() < 1e-12);
        assert!(!d.flags.is_empty());
        let d = diagonal_tomography(&revealing(10_000, 7, false), &cal(), 10).unwrap();
        let c = d.c_zz(0.0);
        assert!(c.value.abs() < 3.0 * c.error, "{c}");
        let rho = d.rho(0.0);
        assert!((rho.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_revealing_events_is_insufficient() {
        let recs = fringe(100, 1.0, 0.0, 8);
        assert!(matches!(diagonal_tomography(&recs, &cal(), 10), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn full_ideal_analysis_reaches_unit_bound() {
        let mut recs = revealing(20_000, 9, true);
        let mut fr = fringe(40_000, 1.0, 0.0, 10);
        for (i, r) in fr.iter_mut().enumerate() {
            r.cycle_id = 100_000 + i as u64;
        }
        recs.extend(fr);
        let report = analyze(&recs, &cal(), &AnalysisConfig::default()).unwrap();
        let f = report.raw.f_bound;
        assert!((f.value - 1.0).abs() < 3.0 * f.error + 1e-3, "{f}");
        let text = report.to_string();
        assert!(text.contains("c_zz_raw = "));
        assert!(text.contains("f_bound_corrected = "));
        assert_eq!(report.fringe_table().lines().count(), 1 + 32);
        assert_eq!(report.diagonal_table().lines().count(), 5);
    }
}
