//! Dense state-vector / density-matrix engine for small composite Hilbert spaces.
//!
//! Subsystems are ordered; the first subsystem is the most significant digit of
//! the joint basis index (Kronecker ordering). Operators address subsystems by
//! label and are applied locally without building full-space matrices.

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Tolerance for algebraic identities (norms, unitarity, Hermiticity).
pub const ALGEBRA_TOL: f64 = 1e-10;
/// Eigenvalue floor for positive-semidefinite checks.
pub const PSD_FLOOR: f64 = -1e-8;

pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub fn cr(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subsystem {
    pub label: String,
    pub dim: usize,
}

impl Subsystem {
    pub fn new(label: impl Into<String>, dim: usize) -> Result<Self> {
        let label = label.into();
        if dim < 2 {
            return Err(Error::InvalidDimension { label, dim });
        }
        Ok(Self { label, dim })
    }
}

#[derive(Debug, Clone)]
pub enum Amplitudes {
    Pure(DVector<C64>),
    Mixed(DMatrix<C64>),
}

#[derive(Debug, Clone)]
pub struct QuantumState {
    subsystems: Vec<Subsystem>,
    amps: Amplitudes,
}

/// A square matrix acting on the named subsystems, in the order given.
#[derive(Debug, Clone)]
pub struct Operator {
    pub matrix: DMatrix<C64>,
    pub targets: Vec<String>,
}

impl Operator {
    pub fn new(matrix: DMatrix<C64>, targets: &[&str]) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        Ok(Self {
            matrix,
            targets: targets.iter().map(|s| s.to_string()).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dagger(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
            targets: self.targets.clone(),
        }
    }

    pub fn is_unitary(&self) -> bool {
        let n = self.dim();
        max_abs(&(self.matrix.adjoint() * &self.matrix - DMatrix::identity(n, n))) <= ALGEBRA_TOL
    }

    pub fn hermiticity_error(&self) -> f64 {
        max_abs(&(&self.matrix - self.matrix.adjoint()))
    }

    /// Kronecker product; the result targets `self.targets ++ other.targets`.
    pub fn kron(&self, other: &Operator) -> Self {
        let mut targets = self.targets.clone();
        targets.extend(other.targets.iter().cloned());
        Self {
            matrix: self.matrix.kronecker(&other.matrix),
            targets,
        }
    }
}

/// Completeness deviation `max|Σ K†K − I|` of a Kraus set.
pub fn kraus_deviation(kraus: &[Operator]) -> f64 {
    let Some(first) = kraus.first() else {
        return f64::INFINITY;
    };
    let n = first.dim();
    let mut sum = DMatrix::<C64>::zeros(n, n);
    for k in kraus {
        sum += k.matrix.adjoint() * &k.matrix;
    }
    max_abs(&(sum - DMatrix::identity(n, n)))
}

pub(crate) fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Rotation `exp(-iθY/2)` on the two levels `(i0, i1)` of a `dim`-level system,
/// identity on every other level.
pub fn subspace_ry(theta: f64, dim: usize, i0: usize, i1: usize) -> DMatrix<C64> {
    let (s, co) = (theta / 2.0).sin_cos();
    let mut m = DMatrix::<C64>::identity(dim, dim);
    m[(i0, i0)] = cr(co);
    m[(i0, i1)] = cr(-s);
    m[(i1, i0)] = cr(s);
    m[(i1, i1)] = cr(co);
    m
}

/// Projector onto a (not necessarily normalized) ket.
pub fn ket_projector(ket: &[C64]) -> DMatrix<C64> {
    let v = DVector::from_column_slice(ket);
    let v = &v / cr(v.norm());
    &v * v.adjoint()
}

/// Index offsets of every basis state of `factors` (dim, stride) in Kronecker order.
fn enumerate_offsets(factors: impl IntoIterator<Item = (usize, usize)>) -> Vec<usize> {
    let mut out = vec![0usize];
    for (d, s) in factors {
        out = out
            .iter()
            .flat_map(|&o| (0..d).map(move |i| o + i * s))
            .collect();
    }
    out
}

struct Split {
    /// offsets of the target-local basis, in target order
    local: Vec<usize>,
    /// full-space base index of every configuration of the remaining subsystems
    bases: Vec<usize>,
}

impl QuantumState {
    pub fn pure(subsystems: Vec<Subsystem>, amplitudes: DVector<C64>) -> Result<Self> {
        let state = Self::unchecked(subsystems, Amplitudes::Pure(amplitudes))?;
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > ALGEBRA_TOL {
            return Err(Error::InvalidState(format!("pure state has squared norm {norm}")));
        }
        Ok(state)
    }

    pub fn mixed(subsystems: Vec<Subsystem>, rho: DMatrix<C64>) -> Result<Self> {
        let state = Self::unchecked(subsystems, Amplitudes::Mixed(rho))?;
        state.validate()?;
        Ok(state)
    }

    /// Builds a state without norm/positivity checks (dimensions and labels are still checked).
    pub fn unchecked(subsystems: Vec<Subsystem>, amps: Amplitudes) -> Result<Self> {
        for (i, s) in subsystems.iter().enumerate() {
            if s.dim < 2 {
                return Err(Error::InvalidDimension { label: s.label.clone(), dim: s.dim });
            }
            if subsystems[..i].iter().any(|o| o.label == s.label) {
                return Err(Error::DuplicateLabel(s.label.clone()));
            }
        }
        let dim: usize = subsystems.iter().map(|s| s.dim).product();
        let found = match &amps {
            Amplitudes::Pure(v) => v.len(),
            Amplitudes::Mixed(m) => {
                if m.nrows() != m.ncols() {
                    return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
                }
                m.nrows()
            }
        };
        if found != dim {
            return Err(Error::DimensionMismatch { expected: dim, found });
        }
        Ok(Self { subsystems, amps })
    }

    /// Computational basis state `|indices⟩`.
    pub fn basis(subsystems: Vec<Subsystem>, indices: &[usize]) -> Result<Self> {
        if indices.len() != subsystems.len() {
            return Err(Error::DimensionMismatch { expected: subsystems.len(), found: indices.len() });
        }
        let dim: usize = subsystems.iter().map(|s| s.dim).product();
        let mut idx = 0;
        for (s, &i) in subsystems.iter().zip(indices) {
            if i >= s.dim {
                return Err(Error::DimensionMismatch { expected: s.dim, found: i + 1 });
            }
            idx = idx * s.dim + i;
        }
        let mut v = DVector::zeros(dim);
        v[idx] = cr(1.0);
        Self::pure(subsystems, v)
    }

    /// Single-subsystem pure state from (unnormalized) amplitudes.
    pub fn single(label: &str, amplitudes: &[C64]) -> Result<Self> {
        let v = DVector::from_column_slice(amplitudes);
        let n = v.norm();
        if n == 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        Self::pure(vec![Subsystem::new(label, amplitudes.len())?], v / cr(n))
    }

    pub fn maximally_mixed(subsystems: Vec<Subsystem>) -> Result<Self> {
        let dim: usize = subsystems.iter().map(|s| s.dim).product();
        let rho = DMatrix::<C64>::identity(dim, dim) / cr(dim as f64);
        Self::mixed(subsystems, rho)
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    pub fn labels(&self) -> Vec<&str> {
        self.subsystems.iter().map(|s| s.label.as_str()).collect()
    }

    pub fn dim(&self) -> usize {
        self.subsystems.iter().map(|s| s.dim).product()
    }

    pub fn amplitudes(&self) -> &Amplitudes {
        &self.amps
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.amps, Amplitudes::Pure(_))
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.subsystems
            .iter()
            .position(|s| s.label == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn has(&self, label: &str) -> bool {
        self.subsystems.iter().any(|s| s.label == label)
    }

    pub fn subsystem(&self, label: &str) -> Result<&Subsystem> {
        Ok(&self.subsystems[self.position(label)?])
    }

    /// Density matrix (pure states are promoted).
    pub fn density_matrix(&self) -> DMatrix<C64> {
        match &self.amps {
            Amplitudes::Pure(v) => v * v.adjoint(),
            Amplitudes::Mixed(m) => m.clone(),
        }
    }

    pub fn to_mixed(&self) -> Self {
        Self {
            subsystems: self.subsystems.clone(),
            amps: Amplitudes::Mixed(self.density_matrix()),
        }
    }

    /// Squared norm of a pure state, trace of a density matrix.
    pub fn norm_sqr(&self) -> f64 {
        match &self.amps {
            Amplitudes::Pure(v) => v.norm_squared(),
            Amplitudes::Mixed(m) => m.trace().re,
        }
    }

    pub fn trace(&self) -> f64 {
        self.norm_sqr()
    }

    /// Rescales to unit norm/trace and returns the previous norm/trace.
    pub fn renormalize(&mut self) -> Result<f64> {
        let t = self.norm_sqr();
        if t <= 0.0 {
            return Err(Error::InvalidState("cannot renormalize a zero state".into()));
        }
        match &mut self.amps {
            Amplitudes::Pure(v) => *v /= cr(t.sqrt()),
            Amplitudes::Mixed(m) => *m /= cr(t),
        }
        Ok(t)
    }

    pub fn renormalized(mut self) -> Result<Self> {
        self.renormalize()?;
        Ok(self)
    }

    /// Checks the representation invariants: unit norm for pure states; Hermitian,
    /// trace in (0, 1] and PSD for density matrices.
    pub fn validate(&self) -> Result<()> {
        match &self.amps {
            Amplitudes::Pure(v) => {
                let n = v.norm_squared();
                if (n - 1.0).abs() > ALGEBRA_TOL {
                    return Err(Error::InvalidState(format!("squared norm {n}")));
                }
            }
            Amplitudes::Mixed(m) => {
                let herm = max_abs(&(m - m.adjoint()));
                if herm > ALGEBRA_TOL {
                    return Err(Error::InvalidState(format!("not Hermitian ({herm:.3e})")));
                }
                let t = m.trace().re;
                if !(-ALGEBRA_TOL..=1.0 + ALGEBRA_TOL).contains(&t) {
                    return Err(Error::InvalidState(format!("trace {t}")));
                }
                let min_eig = m
                    .clone()
                    .symmetric_eigenvalues()
                    .iter()
                    .copied()
                    .fold(f64::INFINITY, f64::min);
                if min_eig < PSD_FLOOR {
                    return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:.3e}")));
                }
            }
        }
        Ok(())
    }

    fn strides(&self) -> Vec<usize> {
        let n = self.subsystems.len();
        let mut strides = vec![1usize; n];
        for k in (0..n.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.subsystems[k + 1].dim;
        }
        strides
    }

    fn split(&self, targets: &[usize]) -> Split {
        let strides = self.strides();
        let local = enumerate_offsets(targets.iter().map(|&t| (self.subsystems[t].dim, strides[t])));
        let rest = (0..self.subsystems.len()).filter(|k| !targets.contains(k));
        let bases = enumerate_offsets(rest.map(|k| (self.subsystems[k].dim, strides[k])));
        Split { local, bases }
    }

    fn target_positions(&self, targets: &[String], matrix_dim: usize) -> Result<Vec<usize>> {
        let mut pos = Vec::with_capacity(targets.len());
        for t in targets {
            let p = self.position(t)?;
            if pos.contains(&p) {
                return Err(Error::DuplicateLabel(t.clone()));
            }
            pos.push(p);
        }
        let expected: usize = pos.iter().map(|&p| self.subsystems[p].dim).product();
        if expected != matrix_dim {
            return Err(Error::DimensionMismatch { expected, found: matrix_dim });
        }
        Ok(pos)
    }

    /// Joint state `self ⊗ other`. Mixed representation wins.
    pub fn tensor(&self, other: &QuantumState) -> Result<Self> {
        let mut subsystems = self.subsystems.clone();
        for s in &other.subsystems {
            if subsystems.iter().any(|o| o.label == s.label) {
                return Err(Error::DuplicateLabel(s.label.clone()));
            }
            subsystems.push(s.clone());
        }
        let amps = match (&self.amps, &other.amps) {
            (Amplitudes::Pure(a), Amplitudes::Pure(b)) => Amplitudes::Pure(a.kronecker(b)),
            _ => Amplitudes::Mixed(self.density_matrix().kronecker(&other.density_matrix())),
        };
        Ok(Self { subsystems, amps })
    }

    /// `U ψ` for pure states, `U ρ U†` for density matrices.
    pub fn apply(&self, op: &Operator) -> Result<Self> {
        let pos = self.target_positions(&op.targets, op.dim())?;
        let split = self.split(&pos);
        let amps = match &self.amps {
            Amplitudes::Pure(v) => {
                let mut out = v.clone();
                apply_vec(&mut out, &op.matrix, &split);
                Amplitudes::Pure(out)
            }
            Amplitudes::Mixed(m) => Amplitudes::Mixed(conjugate(m, &op.matrix, &split)),
        };
        Ok(Self { subsystems: self.subsystems.clone(), amps })
    }

    /// `Σ K ρ K†`. Pure inputs are promoted to density matrices. When
    /// `trace_preserving` is set, the Kraus set must be complete within tolerance.
    pub fn apply_kraus(&self, kraus: &[Operator], trace_preserving: bool) -> Result<Self> {
        let first = kraus.first().ok_or(Error::KrausIncomplete(f64::INFINITY))?;
        let dev = kraus_deviation(kraus);
        if trace_preserving && dev > ALGEBRA_TOL {
            return Err(Error::KrausIncomplete(dev));
        }
        if !trace_preserving {
            // must still be trace non-increasing
            let n = first.dim();
            let mut sum = DMatrix::<C64>::zeros(n, n);
            for k in kraus {
                sum += k.matrix.adjoint() * &k.matrix;
            }
            let max_eig = sum.symmetric_eigenvalues().iter().copied().fold(f64::MIN, f64::max);
            if max_eig > 1.0 + ALGEBRA_TOL {
                return Err(Error::KrausIncomplete(max_eig - 1.0));
            }
        }
        let rho = self.density_matrix();
        let mut out = DMatrix::<C64>::zeros(rho.nrows(), rho.ncols());
        for k in kraus {
            if k.targets != first.targets {
                return Err(Error::InvalidState("Kraus operators must share targets".into()));
            }
            let pos = self.target_positions(&k.targets, k.dim())?;
            let split = self.split(&pos);
            out += conjugate(&rho, &k.matrix, &split);
        }
        Ok(Self { subsystems: self.subsystems.clone(), amps: Amplitudes::Mixed(out) })
    }

    /// Replaces the `targets` subsystems by `new` through the linear map `matrix`
    /// (rows index the new joint basis, columns the old target basis). The new
    /// subsystems are appended after the untouched ones. Norm is not restored.
    pub fn map_subsystems(&self, targets: &[&str], kraus: &[DMatrix<C64>], new: Vec<Subsystem>) -> Result<Self> {
        let owned: Vec<String> = targets.iter().map(|s| s.to_string()).collect();
        let din = kraus.first().map(|m| m.ncols()).unwrap_or(0);
        let dout: usize = new.iter().map(|s| s.dim).product();
        let pos = self.target_positions(&owned, din)?;
        for m in kraus {
            if m.nrows() != dout || m.ncols() != din {
                return Err(Error::DimensionMismatch { expected: dout * din, found: m.nrows() * m.ncols() });
            }
        }
        let split = self.split(&pos);
        let mut subsystems: Vec<Subsystem> = (0..self.subsystems.len())
            .filter(|k| !pos.contains(k))
            .map(|k| self.subsystems[k].clone())
            .collect();
        for s in &new {
            if subsystems.iter().any(|o| o.label == s.label) {
                return Err(Error::DuplicateLabel(s.label.clone()));
            }
        }
        subsystems.extend(new);
        let nb = split.bases.len();
        let amps = match (&self.amps, kraus.len()) {
            (Amplitudes::Pure(v), 1) => {
                let m = &kraus[0];
                let mut out = DVector::<C64>::zeros(nb * dout);
                let mut x = DVector::<C64>::zeros(din);
                for (r, &b) in split.bases.iter().enumerate() {
                    for (l, &o) in split.local.iter().enumerate() {
                        x[l] = v[b + o];
                    }
                    let y = m * &x;
                    out.rows_mut(r * dout, dout).copy_from(&y);
                }
                Amplitudes::Pure(out)
            }
            _ => {
                let rho = self.density_matrix();
                let mut out = DMatrix::<C64>::zeros(nb * dout, nb * dout);
                let mut block = DMatrix::<C64>::zeros(din, din);
                for (r1, &b1) in split.bases.iter().enumerate() {
                    for (r2, &b2) in split.bases.iter().enumerate() {
                        for (l1, &o1) in split.local.iter().enumerate() {
                            for (l2, &o2) in split.local.iter().enumerate() {
                                block[(l1, l2)] = rho[(b1 + o1, b2 + o2)];
                            }
                        }
                        let mut acc = DMatrix::<C64>::zeros(dout, dout);
                        for m in kraus {
                            acc += m * &block * m.adjoint();
                        }
                        out.view_mut((r1 * dout, r2 * dout), (dout, dout)).copy_from(&acc);
                    }
                }
                Amplitudes::Mixed(out)
            }
        };
        Ok(Self { subsystems, amps })
    }

    /// Reduced density matrix over `keep`, in the state's subsystem order.
    pub fn partial_trace(&self, keep: &[&str]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::EmptyKeep);
        }
        let mut pos = Vec::new();
        for k in keep {
            pos.push(self.position(k)?);
        }
        pos.sort_unstable();
        pos.dedup();
        let strides = self.strides();
        let kept = enumerate_offsets(pos.iter().map(|&p| (self.subsystems[p].dim, strides[p])));
        let traced_pos: Vec<usize> = (0..self.subsystems.len()).filter(|k| !pos.contains(k)).collect();
        let traced = enumerate_offsets(traced_pos.iter().map(|&p| (self.subsystems[p].dim, strides[p])));
        let n = kept.len();
        let mut red = DMatrix::<C64>::zeros(n, n);
        match &self.amps {
            Amplitudes::Pure(v) => {
                for &t in &traced {
                    for (a, &ka) in kept.iter().enumerate() {
                        let va = v[ka + t];
                        if va == C64::default() {
                            continue;
                        }
                        for (b, &kb) in kept.iter().enumerate() {
                            red[(a, b)] += va * v[kb + t].conj();
                        }
                    }
                }
            }
            Amplitudes::Mixed(m) => {
                for &t in &traced {
                    for (a, &ka) in kept.iter().enumerate() {
                        for (b, &kb) in kept.iter().enumerate() {
                            red[(a, b)] += m[(ka + t, kb + t)];
                        }
                    }
                }
            }
        }
        let subsystems = pos.iter().map(|&p| self.subsystems[p].clone()).collect();
        Ok(Self { subsystems, amps: Amplitudes::Mixed(red) })
    }

    /// Reorders subsystems to `order` (a permutation of the labels).
    pub fn permute(&self, order: &[&str]) -> Result<Self> {
        if order.len() != self.subsystems.len() {
            return Err(Error::DimensionMismatch { expected: self.subsystems.len(), found: order.len() });
        }
        let pos = order.iter().map(|l| self.position(l)).collect::<Result<Vec<_>>>()?;
        let owned: Vec<String> = order.iter().map(|s| s.to_string()).collect();
        self.target_positions(&owned, self.dim())?;
        let strides = self.strides();
        // new index i corresponds to old index perm[i]
        let perm = enumerate_offsets(pos.iter().map(|&p| (self.subsystems[p].dim, strides[p])));
        let subsystems = pos.iter().map(|&p| self.subsystems[p].clone()).collect();
        let amps = match &self.amps {
            Amplitudes::Pure(v) => Amplitudes::Pure(DVector::from_fn(v.len(), |i, _| v[perm[i]])),
            Amplitudes::Mixed(m) => {
                Amplitudes::Mixed(DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(perm[i], perm[j])]))
            }
        };
        Ok(Self { subsystems, amps })
    }

    /// `Tr(ρ O)` for a Hermitian observable.
    pub fn expectation(&self, obs: &Operator) -> Result<f64> {
        let herm = obs.hermiticity_error();
        if herm > ALGEBRA_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let value = self.expectation_complex(obs)?;
        if value.im.abs() > 1e-10 {
            return Err(Error::NotHermitian(value.im.abs()));
        }
        Ok(value.re)
    }

    fn expectation_complex(&self, obs: &Operator) -> Result<C64> {
        let pos = self.target_positions(&obs.targets, obs.dim())?;
        let split = self.split(&pos);
        Ok(match &self.amps {
            Amplitudes::Pure(v) => {
                let mut w = v.clone();
                apply_vec(&mut w, &obs.matrix, &split);
                v.dotc(&w)
            }
            Amplitudes::Mixed(m) => {
                let mut acc = C64::default();
                let d = split.local.len();
                for &b in &split.bases {
                    for i in 0..d {
                        for j in 0..d {
                            acc += obs.matrix[(i, j)] * m[(b + split.local[j], b + split.local[i])];
                        }
                    }
                }
                acc
            }
        })
    }

    /// `⟨φ|ρ|φ⟩` against a pure state on the same subsystems.
    pub fn fidelity_pure(&self, target: &QuantumState) -> Result<f64> {
        if self.subsystems != target.subsystems {
            return Err(Error::InvalidState("fidelity needs matching subsystems".into()));
        }
        let Amplitudes::Pure(phi) = &target.amps else {
            return Err(Error::InvalidState("fidelity target must be pure".into()));
        };
        Ok(match &self.amps {
            Amplitudes::Pure(v) => phi.dotc(v).norm_sqr(),
            Amplitudes::Mixed(m) => phi.dotc(&(m * phi)).re,
        })
    }

    /// Outcome probabilities `Tr(P_i ρ P_i)` of a projective measurement.
    pub fn outcome_probabilities(&self, projectors: &[Operator]) -> Result<Vec<f64>> {
        check_projectors(projectors)?;
        projectors
            .iter()
            .map(|p| self.expectation_complex(p).map(|z| z.re.max(0.0)))
            .collect()
    }

    /// Born-rule sampling of a projective measurement. Returns the outcome index
    /// and the collapsed, renormalized state.
    pub fn born_sample<R: Rng + ?Sized>(&self, projectors: &[Operator], rng: &mut R) -> Result<(usize, Self)> {
        let probs = self.outcome_probabilities(projectors)?;
        let total: f64 = probs.iter().sum();
        let u: f64 = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut outcome = probs.len() - 1;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                outcome = i;
                break;
            }
        }
        let collapsed = self.project(&projectors[outcome])?.renormalized()?;
        Ok((outcome, collapsed))
    }

    /// Applies a projector without renormalizing (`Pψ` or `PρP`).
    pub fn project(&self, projector: &Operator) -> Result<Self> {
        self.apply(projector)
    }
}

fn check_projectors(projectors: &[Operator]) -> Result<()> {
    let Some(first) = projectors.first() else {
        return Err(Error::IncompleteProjectors(f64::INFINITY));
    };
    let n = first.dim();
    let mut sum = DMatrix::<C64>::zeros(n, n);
    let mut dev: f64 = 0.0;
    for p in projectors {
        if p.targets != first.targets || p.dim() != n {
            return Err(Error::IncompleteProjectors(f64::INFINITY));
        }
        dev = dev.max(max_abs(&(&p.matrix * &p.matrix - &p.matrix)));
        dev = dev.max(p.hermiticity_error());
        sum += &p.matrix;
    }
    dev = dev.max(max_abs(&(sum - DMatrix::identity(n, n))));
    if dev > 1e-9 {
        return Err(Error::IncompleteProjectors(dev));
    }
    Ok(())
}

fn apply_vec(v: &mut DVector<C64>, m: &DMatrix<C64>, split: &Split) {
    let d = split.local.len();
    let mut x = DVector::<C64>::zeros(d);
    for &b in &split.bases {
        for (l, &o) in split.local.iter().enumerate() {
            x[l] = v[b + o];
        }
        let y = m * &x;
        for (l, &o) in split.local.iter().enumerate() {
            v[b + o] = y[l];
        }
    }
}

/// `M ρ M†` with `M` acting locally.
fn conjugate(rho: &DMatrix<C64>, m: &DMatrix<C64>, split: &Split) -> DMatrix<C64> {
    let n = rho.nrows();
    let d = split.local.len();
    let mut out = rho.clone();
    let mut x = DVector::<C64>::zeros(d);
    // rows: out = M ρ
    for col in 0..n {
        for &b in &split.bases {
            for (l, &o) in split.local.iter().enumerate() {
                x[l] = out[(b + o, col)];
            }
            let y = m * &x;
            for (l, &o) in split.local.iter().enumerate() {
                out[(b + o, col)] = y[l];
            }
        }
    }
    // columns: out = (M ρ) M†
    let mc = m.map(|z| z.conj());
    for row in 0..n {
        for &b in &split.bases {
            for (l, &o) in split.local.iter().enumerate() {
                x[l] = out[(row, b + o)];
            }
            let y = &mc * &x;
            for (l, &o) in split.local.iter().enumerate() {
                out[(row, b + o)] = y[l];
            }
        }
    }
    out
}
