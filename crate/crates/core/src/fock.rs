//! Truncated Fock-space representation of the two output modes.
//!
//! States are stored as a weighted mixture of sparse kets over `|n_c, n_d>`
//! with flat index `n_c * dim + n_d` (mode c outer, mode d inner). Pure states
//! are a single component. This keeps the split-thermal state, which is block
//! diagonal in total photon number, at `O(dim^2)` storage even at a few hundred
//! levels per mode; a dense density matrix is only materialized on request for
//! small cutoffs.
//!
//! Truncation renormalizes the retained mass to one and records the discarded
//! joint mass in [`TwoModeFockState::truncated_mass`].

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::source::{check_photon_number, FourPortSign, SourceKind, SourceSpec};
use crate::Quadrature;

/// Largest number of Fock levels per mode any constructor will accept.
pub const HARD_CAP: usize = 512;

/// Largest per-mode dimension for which dense two-mode matrices are built
/// (`dim^2 x dim^2` entries).
pub const DENSE_LIMIT: usize = 32;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FockCutoff {
    dim: usize,
    tail_tolerance: f64,
}

impl FockCutoff {
    pub fn new(dim: usize, tail_tolerance: f64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::invalid("dim", format!("must be >= 2, got {dim}")));
        }
        if dim > HARD_CAP {
            return Err(Error::invalid("dim", format!("must be <= {HARD_CAP}, got {dim}")));
        }
        if !(0.0..1.0).contains(&tail_tolerance) {
            return Err(Error::invalid("tail_tolerance", format!("must lie in [0, 1), got {tail_tolerance}")));
        }
        Ok(FockCutoff { dim, tail_tolerance })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tail_tolerance(&self) -> f64 {
        self.tail_tolerance
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    C,
    D,
}

/// Photon-number law of a single output mode.
#[derive(Debug, Clone, Copy)]
enum MarginalLaw {
    Geometric { mean: f64 },
    Poisson { mean: f64 },
}

impl MarginalLaw {
    fn for_source(kind: SourceKind, n_per_mode: f64) -> Self {
        match kind {
            SourceKind::Pdc | SourceKind::ThermalSplit => MarginalLaw::Geometric { mean: n_per_mode },
            SourceKind::CoherentSplit => MarginalLaw::Poisson { mean: n_per_mode },
        }
    }

    fn mean(&self) -> f64 {
        match *self {
            MarginalLaw::Geometric { mean } | MarginalLaw::Poisson { mean } => mean,
        }
    }

    /// Upper tails `T[D] = sum_{k >= D} k^order P(k)` for `D = 0..=upto`.
    ///
    /// Terms are summed from the far tail downwards so small tails keep full
    /// relative precision. Returns `None` when the law is too wide to resolve.
    fn weighted_tails(&self, order: u32, upto: usize) -> Option<Vec<f64>> {
        let mean = self.mean();
        if mean == 0.0 {
            let mut tails = vec![0.0; upto + 1];
            tails[0] = if order == 0 { 1.0 } else { 0.0 };
            return Some(tails);
        }
        const MAX_TERMS: usize = 20_000_000;
        let mut terms = Vec::with_capacity(upto + 64);
        let mut log_pmf = match *self {
            MarginalLaw::Geometric { mean } => -(mean + 1.0).ln(),
            MarginalLaw::Poisson { mean } => -mean,
        };
        let mut k = 0usize;
        loop {
            let weight = if order == 0 {
                1.0
            } else if k == 0 {
                0.0
            } else {
                (k as f64).powi(order as i32)
            };
            let term = weight * log_pmf.exp();
            terms.push(term);
            if k >= upto && (k as f64) > 2.0 * mean + 10.0 && term < 1e-300 {
                break;
            }
            if terms.len() > MAX_TERMS {
                return None;
            }
            log_pmf += match *self {
                MarginalLaw::Geometric { mean } => (mean / (mean + 1.0)).ln(),
                MarginalLaw::Poisson { mean } => mean.ln() - ((k + 1) as f64).ln(),
            };
            k += 1;
        }
        let mut suffix = vec![0.0; terms.len() + 1];
        for i in (0..terms.len()).rev() {
            suffix[i] = suffix[i + 1] + terms[i];
        }
        suffix.truncate(upto + 1);
        Some(suffix)
    }

    fn tail_mass(&self, dim: usize) -> f64 {
        match *self {
            MarginalLaw::Geometric { mean } if mean > 0.0 => (mean / (mean + 1.0)).powi(dim as i32),
            _ => self.weighted_tails(0, dim).map(|t| t[dim]).unwrap_or(1.0),
        }
    }
}

/// Smallest per-mode dimension whose output-mode photon-number tail beyond
/// `dim - 1` is below `tail_tolerance`.
pub fn choose_cutoff(source: &SourceSpec, tail_tolerance: f64) -> Result<FockCutoff> {
    choose_cutoff_weighted(source, tail_tolerance, 0, HARD_CAP)
}

/// Like [`choose_cutoff`], but bounds the `k^moment_order`-weighted tail
/// `sum_{k >= dim} k^order P(k)` instead of the bare probability mass.
///
/// Expectations of observables up to `moment_order` in the photon number then
/// carry truncation errors of order `tail_tolerance`.
pub fn choose_cutoff_weighted(
    source: &SourceSpec,
    tail_tolerance: f64,
    moment_order: u32,
    cap: usize,
) -> Result<FockCutoff> {
    if !(tail_tolerance > 0.0 && tail_tolerance < 1.0) {
        return Err(Error::invalid("tail_tolerance", format!("must lie in (0, 1), got {tail_tolerance}")));
    }
    let cap = cap.min(HARD_CAP);
    let law = MarginalLaw::for_source(source.kind(), source.n_per_mode());
    let infeasible = |tail| Error::CutoffInfeasible { cap, tail, tolerance: tail_tolerance };
    if law.mean() >= cap as f64 {
        return Err(infeasible(law.tail_mass(cap)));
    }
    let tails = law.weighted_tails(moment_order, cap).ok_or_else(|| infeasible(1.0))?;
    match (2..=cap).find(|&d| tails[d] < tail_tolerance) {
        Some(dim) => FockCutoff::new(dim, tail_tolerance),
        None => Err(infeasible(tails[cap])),
    }
}

fn check_tail(law: MarginalLaw, cutoff: &FockCutoff) -> Result<()> {
    let tail = law.tail_mass(cutoff.dim);
    if tail > cutoff.tail_tolerance {
        return Err(Error::TailTooLarge { tail, tolerance: cutoff.tail_tolerance, last_level: cutoff.dim - 1 });
    }
    Ok(())
}

/// `ln k!` for `k = 0..len`.
fn ln_factorials(len: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(len);
    let mut acc = 0.0;
    table.push(0.0);
    for k in 1..len {
        acc += (k as f64).ln();
        table.push(acc);
    }
    table
}

/// A sparse ket, entries sorted by flat index.
type Ket = Vec<(usize, C64)>;

#[derive(Debug, Clone)]
pub struct Component {
    weight: f64,
    ket: Ket,
}

impl Component {
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Non-zero amplitudes as `((n_c, n_d), amplitude)`.
    pub fn amplitudes(&self, dim: usize) -> impl Iterator<Item = ((usize, usize), C64)> + '_ {
        self.ket.iter().map(move |&(i, v)| ((i / dim, i % dim), v))
    }
}

/// Two-mode state on the truncated space, stored as `rho = sum_j w_j |psi_j><psi_j|`.
#[derive(Debug, Clone)]
pub struct TwoModeFockState {
    cutoff: FockCutoff,
    components: Vec<Component>,
    truncated_mass: f64,
}

impl TwoModeFockState {
    /// Builds a state from unnormalized weighted kets whose weights are the
    /// exact (untruncated) probabilities. Discarded mass is recorded and the
    /// remainder renormalized.
    fn from_weighted(cutoff: FockCutoff, parts: Vec<(f64, Ket)>, exact_total: f64) -> Result<Self> {
        let mut components = Vec::with_capacity(parts.len());
        let mut retained = 0.0;
        for (w, mut ket) in parts {
            ket.retain(|&(_, v)| v != ZERO);
            let norm2: f64 = ket.iter().map(|(_, v)| v.norm_sqr()).sum();
            if norm2 == 0.0 || w == 0.0 {
                continue;
            }
            let scale = 1.0 / norm2.sqrt();
            for (_, v) in ket.iter_mut() {
                *v *= scale;
            }
            ket.sort_unstable_by_key(|&(i, _)| i);
            let weight = w * norm2;
            retained += weight;
            components.push(Component { weight, ket });
        }
        if components.is_empty() || retained <= 0.0 {
            return Err(Error::invalid("state", "no probability mass inside the cutoff"));
        }
        for c in components.iter_mut() {
            c.weight /= retained;
        }
        Ok(TwoModeFockState { cutoff, components, truncated_mass: (exact_total - retained).max(0.0) })
    }

    /// Pure basis state `|n_c, n_d>`.
    pub fn basis(cutoff: FockCutoff, n_c: usize, n_d: usize) -> Result<Self> {
        let dim = cutoff.dim;
        if n_c >= dim || n_d >= dim {
            return Err(Error::invalid("basis", format!("|{n_c},{n_d}> is outside the {dim}-level cutoff")));
        }
        Self::from_weighted(cutoff, vec![(1.0, vec![(n_c * dim + n_d, C64::new(1.0, 0.0))])], 1.0)
    }

    pub fn vacuum(cutoff: FockCutoff) -> Result<Self> {
        Self::basis(cutoff, 0, 0)
    }

    pub fn cutoff(&self) -> FockCutoff {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.cutoff.dim
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn is_pure(&self) -> bool {
        self.components.len() == 1
    }

    /// Probability mass of the exact state that fell outside the cutoff.
    pub fn truncated_mass(&self) -> f64 {
        self.truncated_mass
    }

    pub fn trace(&self) -> f64 {
        self.components.iter().map(|c| c.weight * c.ket.iter().map(|(_, v)| v.norm_sqr()).sum::<f64>()).sum()
    }

    /// Dense `dim^2 x dim^2` density matrix, only for `dim <= DENSE_LIMIT`.
    pub fn density_matrix(&self) -> Result<DMatrix<C64>> {
        let dim = self.dim();
        if dim > DENSE_LIMIT {
            return Err(Error::DenseTooLarge { dim, limit: DENSE_LIMIT });
        }
        let n = dim * dim;
        let mut rho = DMatrix::from_element(n, n, ZERO);
        for c in &self.components {
            for &(i, vi) in &c.ket {
                for &(j, vj) in &c.ket {
                    rho[(i, j)] += vi * vj.conj() * c.weight;
                }
            }
        }
        Ok(rho)
    }

    /// Checks Hermiticity, trace and positivity. The eigenvalue check is only
    /// run for dense-sized cutoffs; above that positivity follows from the
    /// non-negative mixture weights.
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| Err(Error::invalid("state", reason));
        for c in &self.components {
            if !(c.weight.is_finite() && c.weight >= 0.0) {
                return fail(format!("mixture weight {} is not a probability", c.weight));
            }
        }
        let trace = self.trace();
        let tol = self.cutoff.tail_tolerance;
        if !(trace >= 1.0 - tol - 1e-12 && trace <= 1.0 + 1e-12) {
            return fail(format!("trace {trace} outside [1 - {tol}, 1 + 1e-12]"));
        }
        if self.dim() <= 16 {
            let rho = self.density_matrix()?;
            let n = rho.nrows();
            let mut herm = 0.0f64;
            for i in 0..n {
                for j in 0..n {
                    herm = herm.max((rho[(i, j)] - rho[(j, i)].conj()).norm());
                }
            }
            if herm > 1e-12 {
                return fail(format!("Hermiticity violated by {herm:e}"));
            }
            let min_eig = rho.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
            if min_eig < -1e-10 {
                return fail(format!("negative eigenvalue {min_eig:e}"));
            }
        }
        Ok(())
    }

    /// Applies a dense two-mode unitary (`dim^2 x dim^2`) to every component.
    pub fn transformed(&self, unitary: &DMatrix<C64>) -> Result<Self> {
        let dim = self.dim();
        let n = dim * dim;
        if unitary.nrows() != n || unitary.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: unitary.nrows() });
        }
        let parts = self
            .components
            .iter()
            .map(|c| {
                let mut out = vec![ZERO; n];
                for &(j, v) in &c.ket {
                    for (i, slot) in out.iter_mut().enumerate() {
                        *slot += unitary[(i, j)] * v;
                    }
                }
                let ket: Ket = out.into_iter().enumerate().filter(|(_, v)| *v != ZERO).collect();
                (c.weight, ket)
            })
            .collect();
        let mut state = Self::from_weighted(self.cutoff, parts, 1.0)?;
        state.truncated_mass = self.truncated_mass;
        Ok(state)
    }

    pub fn mean_number(&self, mode: Mode) -> f64 {
        let ops = OperatorSet::new(self.dim());
        let obs = match mode {
            Mode::C => Observable::new().c(&ops.number),
            Mode::D => Observable::new().d(&ops.number),
        };
        expectation(self, &obs).map(|z| z.re).unwrap_or(f64::NAN)
    }
}

/// Two-mode squeezed vacuum in Schmidt form,
/// `sum_k sqrt(n^k / (n+1)^(k+1)) |k, k>` with `n = gain - 1`.
pub fn make_tmsv(gain: f64, cutoff: FockCutoff) -> Result<TwoModeFockState> {
    make_tmsv_signed(gain, cutoff, FourPortSign::Standard)
}

/// Schmidt-form TMSV with a selectable sign on the conjugate coupling term;
/// [`FourPortSign::Flipped`] alternates the Schmidt coefficient signs.
pub fn make_tmsv_signed(gain: f64, cutoff: FockCutoff, sign: FourPortSign) -> Result<TwoModeFockState> {
    if !gain.is_finite() || gain < 1.0 {
        return Err(Error::invalid("gain", format!("must be >= 1, got {gain}")));
    }
    let mean = gain - 1.0;
    check_tail(MarginalLaw::Geometric { mean }, &cutoff)?;
    let dim = cutoff.dim;
    let ket: Ket = (0..dim)
        .map(|k| {
            let amp = if mean == 0.0 {
                if k == 0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                (0.5 * (k as f64 * mean.ln() - (k as f64 + 1.0) * (mean + 1.0).ln())).exp()
            };
            let signed = match sign {
                FourPortSign::Flipped if k % 2 == 1 => -amp,
                _ => amp,
            };
            (k * dim + k, C64::new(signed, 0.0))
        })
        .collect();
    TwoModeFockState::from_weighted(cutoff, vec![(1.0, ket)], 1.0)
}

/// `|alpha>|0>` through the balanced splitter: `|alpha/sqrt2>_c |alpha/sqrt2>_d`.
pub fn make_split_coherent(alpha: C64, cutoff: FockCutoff) -> Result<TwoModeFockState> {
    let beta = alpha * FRAC_1_SQRT_2;
    check_tail(MarginalLaw::Poisson { mean: beta.norm_sqr() }, &cutoff)?;
    let dim = cutoff.dim;
    let mut single = Vec::with_capacity(dim);
    let mut amp = C64::new((-0.5 * beta.norm_sqr()).exp(), 0.0);
    for k in 0..dim {
        single.push(amp);
        amp = amp * beta / ((k + 1) as f64).sqrt();
    }
    let mut ket = Vec::with_capacity(dim * dim);
    for (i, &ai) in single.iter().enumerate() {
        for (j, &aj) in single.iter().enumerate() {
            ket.push((i * dim + j, ai * aj));
        }
    }
    TwoModeFockState::from_weighted(cutoff, vec![(1.0, ket)], 1.0)
}

/// Thermal input of mean `input_mean` on port a, vacuum on port b, through the
/// balanced splitter. Each input number state `|m, 0>` maps to
/// `sum_k sqrt(C(m,k) / 2^m) |k, m-k>`.
pub fn make_split_thermal(input_mean: f64, cutoff: FockCutoff) -> Result<TwoModeFockState> {
    check_photon_number("input_mean", input_mean)?;
    check_tail(MarginalLaw::Geometric { mean: input_mean / 2.0 }, &cutoff)?;
    let dim = cutoff.dim;
    if input_mean == 0.0 {
        return TwoModeFockState::vacuum(cutoff);
    }
    let max_total = 2 * (dim - 1);
    let lf = ln_factorials(max_total + 1);
    let ln_q = (input_mean / (input_mean + 1.0)).ln();
    let ln_norm = -(input_mean + 1.0).ln();
    let half_ln2 = 0.5 * std::f64::consts::LN_2;
    let parts = (0..=max_total)
        .map(|m| {
            let weight = (m as f64 * ln_q + ln_norm).exp();
            let lo = m.saturating_sub(dim - 1);
            let hi = m.min(dim - 1);
            let ket: Ket = (lo..=hi)
                .map(|k| {
                    let ln_amp = 0.5 * (lf[m] - lf[k] - lf[m - k]) - m as f64 * half_ln2;
                    (k * dim + (m - k), C64::new(ln_amp.exp(), 0.0))
                })
                .collect();
            (weight, ket)
        })
        .collect();
    TwoModeFockState::from_weighted(cutoff, parts, 1.0)
}

/// Fock state for a source at its nominal photon number.
pub fn state_for_source(source: &SourceSpec, cutoff: FockCutoff) -> Result<TwoModeFockState> {
    state_for_source_signed(source, cutoff, FourPortSign::Standard)
}

pub(crate) fn state_for_source_signed(
    source: &SourceSpec,
    cutoff: FockCutoff,
    sign: FourPortSign,
) -> Result<TwoModeFockState> {
    match source.kind() {
        SourceKind::Pdc => make_tmsv_signed(source.gain(), cutoff, sign),
        SourceKind::CoherentSplit => make_split_coherent(C64::new(source.coherent_amplitude(), 0.0), cutoff),
        SourceKind::ThermalSplit => make_split_thermal(source.thermal_input_mean(), cutoff),
    }
}

/// Dense beam-splitter unitary on the truncated two-mode space, realizing
/// `c = sqrt(T) a - sqrt(1-T) b`, `d = sqrt(T) b + sqrt(1-T) a`.
///
/// Built as `exp(theta (a b^dag - a^dag b))` with `theta = acos(sqrt(T))`,
/// block by block in total photon number. Blocks with total `< dim` are exact;
/// higher blocks are clipped by the cutoff.
pub fn beam_splitter_unitary(transmittance: f64, cutoff: FockCutoff) -> Result<DMatrix<C64>> {
    beam_splitter_unitary_signed(transmittance, cutoff, FourPortSign::Standard)
}

pub fn beam_splitter_unitary_signed(
    transmittance: f64,
    cutoff: FockCutoff,
    sign: FourPortSign,
) -> Result<DMatrix<C64>> {
    if !(0.0..=1.0).contains(&transmittance) {
        return Err(Error::invalid("transmittance", format!("must lie in [0, 1], got {transmittance}")));
    }
    let dim = cutoff.dim;
    if dim > DENSE_LIMIT {
        return Err(Error::DenseTooLarge { dim, limit: DENSE_LIMIT });
    }
    let theta = match sign {
        FourPortSign::Standard => transmittance.sqrt().acos(),
        FourPortSign::Flipped => -transmittance.sqrt().acos(),
    };
    let n = dim * dim;
    let mut u = DMatrix::from_element(n, n, ZERO);
    for total in 0..=2 * (dim - 1) {
        let lo = total.saturating_sub(dim - 1);
        let hi = total.min(dim - 1);
        let size = hi - lo + 1;
        let mut gen = DMatrix::<f64>::zeros(size, size);
        for k in lo..=hi {
            let col = k - lo;
            // a^dag b: |k, N-k> -> sqrt(k+1) sqrt(N-k) |k+1, N-k-1>
            if k < hi {
                gen[(col + 1, col)] -= theta * ((k + 1) as f64).sqrt() * ((total - k) as f64).sqrt();
            }
            // a b^dag: |k, N-k> -> sqrt(k) sqrt(N-k+1) |k-1, N-k+1>
            if k > lo {
                gen[(col - 1, col)] += theta * (k as f64).sqrt() * ((total - k + 1) as f64).sqrt();
            }
        }
        let block = gen.exp();
        for k in lo..=hi {
            for j in lo..=hi {
                let row = k * dim + (total - k);
                let col = j * dim + (total - j);
                u[(row, col)] = C64::new(block[(k - lo, j - lo)], 0.0);
            }
        }
    }
    Ok(u)
}

/// Mode loss of power transmittance `t`: a beam splitter into a vacuum
/// ancilla, ancilla traced out. Realized by its Kraus operators
/// `K_l = sum_n sqrt(C(n,l) t^(n-l) (1-t)^l) |n-l><n|`.
pub fn loss_channel(state: &TwoModeFockState, mode: Mode, transmittance: f64) -> Result<TwoModeFockState> {
    if !(0.0..=1.0).contains(&transmittance) {
        return Err(Error::invalid("transmittance", format!("must lie in [0, 1], got {transmittance}")));
    }
    if transmittance == 1.0 {
        return Ok(state.clone());
    }
    let dim = state.dim();
    let lf = ln_factorials(dim);
    let st = transmittance.sqrt();
    let sr = (1.0 - transmittance).sqrt();
    let mut parts = Vec::new();
    for comp in &state.components {
        for lost in 0..dim {
            let ket: Ket = comp
                .ket
                .iter()
                .filter_map(|&(idx, v)| {
                    let (nc, nd) = (idx / dim, idx % dim);
                    let n = if mode == Mode::C { nc } else { nd };
                    if n < lost {
                        return None;
                    }
                    let binom = (0.5 * (lf[n] - lf[lost] - lf[n - lost])).exp();
                    let coeff = binom * st.powi((n - lost) as i32) * sr.powi(lost as i32);
                    let out = match mode {
                        Mode::C => (nc - lost) * dim + nd,
                        Mode::D => nc * dim + (nd - lost),
                    };
                    Some((out, v * coeff))
                })
                .collect();
            parts.push((comp.weight, ket));
        }
    }
    let mut out = TwoModeFockState::from_weighted(state.cutoff, parts, 1.0)?;
    out.truncated_mass = state.truncated_mass;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Annihilation,
    Creation,
    Number,
    QuadratureIn,
    QuadratureOut,
    Identity,
}

/// Single-mode operator on `dim` Fock levels.
#[derive(Debug, Clone)]
pub struct ModeOperator {
    kind: OperatorKind,
    matrix: DMatrix<C64>,
    // non-zero entries per column, for sparse application
    columns: Vec<Vec<(usize, C64)>>,
}

impl ModeOperator {
    pub fn new(kind: OperatorKind, dim: usize) -> Self {
        let annihilation = |m: &mut DMatrix<C64>, scale: C64| {
            for k in 1..dim {
                m[(k - 1, k)] += scale * (k as f64).sqrt();
            }
        };
        let creation = |m: &mut DMatrix<C64>, scale: C64| {
            for k in 1..dim {
                m[(k, k - 1)] += scale * (k as f64).sqrt();
            }
        };
        let mut m = DMatrix::from_element(dim, dim, ZERO);
        let one = C64::new(1.0, 0.0);
        match kind {
            OperatorKind::Annihilation => annihilation(&mut m, one),
            OperatorKind::Creation => creation(&mut m, one),
            OperatorKind::Number => {
                for k in 0..dim {
                    m[(k, k)] = C64::new(k as f64, 0.0);
                }
            }
            OperatorKind::QuadratureIn => {
                annihilation(&mut m, C64::new(0.5, 0.0));
                creation(&mut m, C64::new(0.5, 0.0));
            }
            OperatorKind::QuadratureOut => {
                // (a - a^dag) / 2i
                annihilation(&mut m, C64::new(0.0, -0.5));
                creation(&mut m, C64::new(0.0, 0.5));
            }
            OperatorKind::Identity => {
                for k in 0..dim {
                    m[(k, k)] = one;
                }
            }
        }
        let columns =
            (0..dim).map(|j| (0..dim).filter(|&i| m[(i, j)] != ZERO).map(|i| (i, m[(i, j)])).collect()).collect();
        ModeOperator { kind, matrix: m, columns }
    }

    pub fn quadrature(phase: Quadrature, dim: usize) -> Self {
        match phase {
            Quadrature::In => Self::new(OperatorKind::QuadratureIn, dim),
            Quadrature::Out => Self::new(OperatorKind::QuadratureOut, dim),
        }
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }
}

/// All single-mode operators for one dimension, built once.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    pub annihilation: ModeOperator,
    pub creation: ModeOperator,
    pub number: ModeOperator,
    pub quadrature_in: ModeOperator,
    pub quadrature_out: ModeOperator,
    pub identity: ModeOperator,
}

impl OperatorSet {
    pub fn new(dim: usize) -> Self {
        OperatorSet {
            annihilation: ModeOperator::new(OperatorKind::Annihilation, dim),
            creation: ModeOperator::new(OperatorKind::Creation, dim),
            number: ModeOperator::new(OperatorKind::Number, dim),
            quadrature_in: ModeOperator::new(OperatorKind::QuadratureIn, dim),
            quadrature_out: ModeOperator::new(OperatorKind::QuadratureOut, dim),
            identity: ModeOperator::new(OperatorKind::Identity, dim),
        }
    }

    pub fn quadrature(&self, phase: Quadrature) -> &ModeOperator {
        match phase {
            Quadrature::In => &self.quadrature_in,
            Quadrature::Out => &self.quadrature_out,
        }
    }
}

/// Product `(A_1 A_2 ...)_c (B_1 B_2 ...)_d`, factors listed left to right.
#[derive(Debug, Clone, Default)]
pub struct Observable<'a> {
    on_c: Vec<&'a ModeOperator>,
    on_d: Vec<&'a ModeOperator>,
}

impl<'a> Observable<'a> {
    pub fn new() -> Self {
        Observable::default()
    }

    pub fn c(mut self, op: &'a ModeOperator) -> Self {
        self.on_c.push(op);
        self
    }

    pub fn d(mut self, op: &'a ModeOperator) -> Self {
        self.on_d.push(op);
        self
    }
}

fn apply_on_mode(ket: &[(usize, C64)], op: &ModeOperator, mode: Mode, dim: usize) -> Ket {
    let mut out: Ket = Vec::with_capacity(ket.len() * 3);
    for &(idx, v) in ket {
        let (nc, nd) = (idx / dim, idx % dim);
        let n = if mode == Mode::C { nc } else { nd };
        for &(i, a) in &op.columns[n] {
            let target = match mode {
                Mode::C => i * dim + nd,
                Mode::D => nc * dim + i,
            };
            out.push((target, a * v));
        }
    }
    out.sort_unstable_by_key(|&(i, _)| i);
    let mut merged: Ket = Vec::with_capacity(out.len());
    for (i, v) in out {
        match merged.last_mut() {
            Some((j, acc)) if *j == i => *acc += v,
            _ => merged.push((i, v)),
        }
    }
    merged
}

fn inner(bra: &[(usize, C64)], ket: &[(usize, C64)]) -> C64 {
    let (mut i, mut j) = (0, 0);
    let mut acc = ZERO;
    while i < bra.len() && j < ket.len() {
        match bra[i].0.cmp(&ket[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += bra[i].1.conj() * ket[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

/// `tr(rho O)` for a product observable.
pub fn expectation(state: &TwoModeFockState, observable: &Observable<'_>) -> Result<C64> {
    let dim = state.dim();
    for op in observable.on_c.iter().chain(&observable.on_d) {
        if op.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: op.dim() });
        }
    }
    let mut total = ZERO;
    for comp in &state.components {
        let mut image = comp.ket.clone();
        for op in observable.on_d.iter().rev() {
            image = apply_on_mode(&image, op, Mode::D, dim);
        }
        for op in observable.on_c.iter().rev() {
            image = apply_on_mode(&image, op, Mode::C, dim);
        }
        total += inner(&comp.ket, &image) * comp.weight;
    }
    Ok(total)
}
