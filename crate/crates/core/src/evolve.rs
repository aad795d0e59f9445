//! Spectral propagation of sector-resolved states and observable time series.
//!
//! Each sector's initial coefficients are rotated into the eigenbasis once;
//! a sample at time `t` then only needs the phases `e^{−iE t}` and one
//! real-by-complex matrix–vector product per sector. Because the phases are
//! evaluated at `t = j·dt` directly, nothing accumulates over long runs.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::hermitian_eigenvalues;
use crate::model::{build_sector_block, ModelParams};
use crate::states::QuantumState;
use crate::sum::NeumaierSum;
use crate::{Error, Result, C64};

/// Largest sector-norm drift tolerated before propagation is declared broken.
pub const NORM_DRIFT_TOL: f64 = 1e-9;
/// Default spacing, in samples, between entropy evaluations.
pub const DEFAULT_ENTROPY_STRIDE: usize = 100;
/// Eigenvalues of the reduced density matrix below this are treated as zero.
pub const ENTROPY_EIGEN_FLOOR: f64 = 1e-15;

/// Uniformly sampled scalar signal.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    /// Sample interval.
    pub dt: f64,
    /// Samples at `t = j·dt`.
    pub values: Vec<f64>,
    /// Observable name.
    pub label: String,
    /// Fingerprint of the parameters that produced the series.
    pub params_hash: [u8; 32],
}

impl TimeSeries {
    /// Builds a series and checks its invariants.
    pub fn new(dt: f64, values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        let s = Self {
            dt,
            values,
            label: label.into(),
            params_hash: [0; 32],
        };
        s.validate()?;
        Ok(s)
    }

    /// Sets the provenance fingerprint.
    pub fn with_params_hash(mut self, hash: [u8; 32]) -> Self {
        self.params_hash = hash;
        self
    }

    /// `dt > 0`, at least two samples, all finite.
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("dt", "must be positive and finite"));
        }
        if self.values.len() < 2 {
            return Err(Error::InsufficientData {
                what: "samples",
                have: self.values.len(),
                need: 2,
            });
        }
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid("values", alloc::format!("sample {i} is not finite")));
        }
        Ok(())
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Whether the series has no samples.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Series with the first `prefix` samples dropped.
    pub fn discard_prefix(&self, prefix: usize) -> Result<Self> {
        let s = Self {
            dt: self.dt,
            values: self.values[prefix.min(self.values.len())..].to_vec(),
            label: self.label.clone(),
            params_hash: self.params_hash,
        };
        s.validate()?;
        Ok(s)
    }

    /// Time-reversed copy.
    pub fn reversed(&self) -> Self {
        let mut s = self.clone();
        s.values.reverse();
        s
    }
}

/// Observables recorded along one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSet {
    /// `⟨a†a⟩(t)`.
    pub mean_n: TimeSeries,
    /// `⟨b†b⟩(t)`.
    pub mean_b: TimeSeries,
    /// Field-mode entanglement entropy, sampled every `stride` steps.
    pub entropy: Option<TimeSeries>,
}

impl ObservableSet {
    /// `⟨a†a⟩ + ⟨b†b⟩` per sample.
    pub fn total(&self) -> Vec<f64> {
        self.mean_n
            .values
            .iter()
            .zip(&self.mean_b.values)
            .map(|(a, b)| a + b)
            .collect()
    }
}

/// `max_t |⟨N⟩ + ⟨b†b⟩ − (value at t = 0)|`.
pub fn conservation_residual(obs: &ObservableSet) -> f64 {
    let total = obs.total();
    let first = total[0];
    total.iter().map(|t| (t - first).abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
struct SectorPropagator {
    n: usize,
    /// Eigenvalues divided by 2π, so phases reduce exactly to one turn.
    cycles: Vec<f64>,
    /// Eigenvectors stored column after column, `columns[e * dim + k]`.
    columns: Vec<f64>,
    /// Initial coefficients in the eigenbasis.
    weights: Vec<C64>,
    norm0: f64,
}

/// Field and atom occupation at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    /// `⟨a†a⟩`.
    pub mean_n: f64,
    /// `⟨b†b⟩`.
    pub mean_b: f64,
}

/// Samples between exact phase evaluations in [`Propagator::sample_range`];
/// in between, phases advance by one multiplication with `e^{−iE dt}`.
pub const PHASE_REANCHOR: usize = 64;

/// Reusable spectral propagator for one initial state and one model.
///
/// Immutable after construction; sampling only needs a [`Scratch`] buffer, so
/// disjoint time ranges may be evaluated concurrently.
#[derive(Debug, Clone)]
pub struct Propagator {
    nmax: usize,
    sectors: Vec<SectorPropagator>,
    /// Start of each sector in the flattened eigenbasis arrays.
    offsets: Vec<usize>,
    total_dim: usize,
}

/// Per-caller scratch space for sampling a [`Propagator`].
#[derive(Debug, Clone, Default)]
pub struct Scratch {
    /// Time-dependent eigenbasis amplitudes `w ∘ e^{−iEt}`, all sectors.
    z_re: Vec<f64>,
    z_im: Vec<f64>,
    /// One-step phase factors for the grid spacing in use.
    step_re: Vec<f64>,
    step_im: Vec<f64>,
    psi_re: Vec<f64>,
    psi_im: Vec<f64>,
}

impl Propagator {
    /// Diagonalizes every sector up to the state's truncation and projects the
    /// state onto the eigenbases. Sectors with no weight are skipped.
    pub fn new(state: &QuantumState, params: &ModelParams) -> Result<Self> {
        params.validate()?;
        let mut sectors = Vec::new();
        let mut offsets = Vec::new();
        let mut total_dim = 0;
        for (n, coeffs) in state.sectors().iter().enumerate() {
            if coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0) {
                continue;
            }
            let block = build_sector_block(n, params)?;
            let dim = block.dim();
            let weights: Vec<C64> = (0..dim)
                .map(|e| {
                    let mut acc = C64::new(0.0, 0.0);
                    for (k, c) in coeffs.iter().enumerate() {
                        acc += c * block.eigen.vector(k, e);
                    }
                    acc
                })
                .collect();
            let norm0 = coeffs.iter().map(|c| c.norm_sqr()).collect::<NeumaierSum>().total();
            offsets.push(total_dim);
            total_dim += dim;
            sectors.push(SectorPropagator {
                n,
                cycles: block.eigen.values.iter().map(|e| e / core::f64::consts::TAU).collect(),
                columns: (0..dim)
                    .flat_map(|e| (0..dim).map(move |k| (e, k)))
                    .map(|(e, k)| block.eigen.vector(k, e))
                    .collect(),
                weights,
                norm0,
            });
        }
        Ok(Self {
            nmax: state.nmax(),
            sectors,
            offsets,
            total_dim,
        })
    }

    /// Truncation sector of the underlying state.
    pub fn nmax(&self) -> usize {
        self.nmax
    }

    fn prepare(&self, scratch: &mut Scratch) {
        let max_dim = self.sectors.iter().map(|s| s.cycles.len()).max().unwrap_or(0);
        scratch.z_re.resize(self.total_dim, 0.0);
        scratch.z_im.resize(self.total_dim, 0.0);
        scratch.psi_re.resize(max_dim, 0.0);
        scratch.psi_im.resize(max_dim, 0.0);
    }

    /// Exact amplitudes at time `t`.
    fn load_phases(&self, t: f64, scratch: &mut Scratch) {
        for (sp, &off) in self.sectors.iter().zip(&self.offsets) {
            for (i, (f, w)) in sp.cycles.iter().zip(&sp.weights).enumerate() {
                let (s, c) = phase(*f, t);
                // w · (c − i s)
                scratch.z_re[off + i] = w.re * c + w.im * s;
                scratch.z_im[off + i] = w.im * c - w.re * s;
            }
        }
    }

    fn load_step(&self, dt: f64, scratch: &mut Scratch) {
        scratch.step_re.clear();
        scratch.step_im.clear();
        for sp in &self.sectors {
            for f in &sp.cycles {
                let (s, c) = phase(*f, dt);
                scratch.step_re.push(c);
                scratch.step_im.push(-s);
            }
        }
    }

    fn advance(scratch: &mut Scratch) {
        let n = scratch.z_re.len();
        let (zr, zi) = (&mut scratch.z_re[..n], &mut scratch.z_im[..n]);
        let (ur, ui) = (&scratch.step_re[..n], &scratch.step_im[..n]);
        for i in 0..n {
            let r = zr[i] * ur[i] - zi[i] * ui[i];
            let m = zr[i] * ui[i] + zi[i] * ur[i];
            zr[i] = r;
            zi[i] = m;
        }
    }

    /// Occupations from the amplitudes currently held in `scratch`.
    fn reduce(&self, index: usize, scratch: &mut Scratch) -> Result<Sample> {
        let mut field = NeumaierSum::new();
        let mut atom = NeumaierSum::new();
        for (sp, &off) in self.sectors.iter().zip(&self.offsets) {
            let dim = sp.cycles.len();
            let (pr, pi) = (&mut scratch.psi_re[..dim], &mut scratch.psi_im[..dim]);
            pr.fill(0.0);
            pi.fill(0.0);
            // ψ = V · z, accumulated column by column.
            for (e, col) in sp.columns.chunks_exact(dim).enumerate() {
                axpy2(col, scratch.z_re[off + e], scratch.z_im[off + e], pr, pi);
            }
            let mut norm = NeumaierSum::new();
            let mut nf = NeumaierSum::new();
            let mut na = NeumaierSum::new();
            for (k, (a, b)) in pr.iter().zip(pi.iter()).enumerate() {
                let p = a * a + b * b;
                norm.add(p);
                nf.add(k as f64 * p);
                na.add((sp.n - k) as f64 * p);
            }
            let drift = (norm.total() - sp.norm0).abs();
            if drift > NORM_DRIFT_TOL {
                return Err(Error::TruncationBreach {
                    sector: sp.n,
                    sample: index,
                    drift,
                });
            }
            field.add(nf.total());
            atom.add(na.total());
        }
        Ok(Sample {
            mean_n: field.total(),
            mean_b: atom.total(),
        })
    }

    /// Evaluates the occupations at time `t` with exact phases. `index` only
    /// labels a norm breach.
    pub fn sample(&self, t: f64, index: usize, scratch: &mut Scratch) -> Result<Sample> {
        self.prepare(scratch);
        self.load_phases(t, scratch);
        self.reduce(index, scratch)
    }

    /// Occupations at samples `start..end` of a grid with spacing `dt`.
    ///
    /// Phases are evaluated exactly at `start` and every [`PHASE_REANCHOR`]
    /// samples after it, so the output for a given `(start, end)` split is
    /// fixed; callers that parallelize must split on multiples of
    /// [`PHASE_REANCHOR`] to reproduce the serial result bit for bit.
    pub fn sample_range(&self, dt: f64, start: usize, end: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut scratch = Scratch::default();
        self.prepare(&mut scratch);
        self.load_step(dt, &mut scratch);
        let mut nf = Vec::with_capacity(end.saturating_sub(start));
        let mut na = Vec::with_capacity(end.saturating_sub(start));
        for j in start..end {
            if (j - start) % PHASE_REANCHOR == 0 {
                self.load_phases(j as f64 * dt, &mut scratch);
            } else {
                Self::advance(&mut scratch);
            }
            let s = self.reduce(j, &mut scratch)?;
            nf.push(s.mean_n);
            na.push(s.mean_b);
        }
        Ok((nf, na))
    }

    /// Full joint state at time `t`.
    pub fn state_at(&self, t: f64) -> QuantumState {
        let mut coeffs: Vec<Vec<C64>> = (0..=self.nmax).map(|n| vec![C64::new(0.0, 0.0); n + 1]).collect();
        for sp in &self.sectors {
            let dim = sp.cycles.len();
            let z: Vec<C64> = sp
                .cycles
                .iter()
                .zip(&sp.weights)
                .map(|(f, w)| {
                    let (s, c) = phase(*f, t);
                    w * C64::new(c, -s)
                })
                .collect();
            for (zz, col) in z.iter().zip(sp.columns.chunks_exact(dim)) {
                for (slot, v) in coeffs[sp.n].iter_mut().zip(col) {
                    *slot += zz * v;
                }
            }
        }
        QuantumState::from_sectors(coeffs).expect("sector shapes are consistent")
    }
}

/// `re += a·v; im += b·v`.
#[inline]
fn axpy2(v: &[f64], a: f64, b: f64, re: &mut [f64], im: &mut [f64]) {
    let n = v.len();
    let (re, im) = (&mut re[..n], &mut im[..n]);
    for i in 0..n {
        re[i] += v[i] * a;
        im[i] += v[i] * b;
    }
}

/// `(sin, cos)` of `2π f t`, reduced to the principal turn first so the
/// trigonometric evaluation never sees a huge argument.
#[inline]
fn phase(f: f64, t: f64) -> (f64, f64) {
    let turns = f * t;
    let r = turns - libm::round(turns);
    libm::sincos(core::f64::consts::TAU * r)
}

/// Knobs for [`evolve_series_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    /// Record the entanglement entropy.
    pub want_entropy: bool,
    /// Samples between entropy evaluations.
    pub entropy_stride: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            want_entropy: false,
            entropy_stride: DEFAULT_ENTROPY_STRIDE,
        }
    }
}

/// Propagates `state0` and records `⟨a†a⟩`, `⟨b†b⟩` (and optionally the
/// entanglement entropy) at `t = j·dt`, `j = 0..steps`.
pub fn evolve_series(
    state0: &QuantumState,
    params: &ModelParams,
    dt: f64,
    steps: usize,
    want_entropy: bool,
) -> Result<ObservableSet> {
    let opts = EvolveOptions {
        want_entropy,
        ..EvolveOptions::default()
    };
    evolve_series_with(state0, params, dt, steps, &opts)
}

/// [`evolve_series`] with explicit options.
pub fn evolve_series_with(
    state0: &QuantumState,
    params: &ModelParams,
    dt: f64,
    steps: usize,
    opts: &EvolveOptions,
) -> Result<ObservableSet> {
    check_grid(dt, steps)?;
    let prop = Propagator::new(state0, params)?;
    let (nf, na) = prop.sample_range(dt, 0, steps)?;
    let entropy = if opts.want_entropy {
        Some(entropy_series(&prop, dt, steps, opts.entropy_stride)?)
    } else {
        None
    };
    Ok(ObservableSet {
        mean_n: TimeSeries::new(dt, nf, "mean_N")?,
        mean_b: TimeSeries::new(dt, na, "mean_b")?,
        entropy,
    })
}

/// Entropy sampled every `stride` steps of the `dt` grid.
pub fn entropy_series(prop: &Propagator, dt: f64, steps: usize, stride: usize) -> Result<TimeSeries> {
    if stride == 0 {
        return Err(Error::invalid("entropy_stride", "must be at least 1"));
    }
    let values = (0..steps)
        .step_by(stride)
        .map(|j| entanglement_entropy(&prop.state_at(j as f64 * dt)))
        .collect::<Result<Vec<_>>>()?;
    TimeSeries::new(dt * stride as f64, values, "entropy")
}

pub(crate) fn check_grid(dt: f64, steps: usize) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", "must be positive and finite"));
    }
    if steps < 2 {
        return Err(Error::invalid("steps", "must be at least 2"));
    }
    Ok(())
}

/// Von Neumann entropy of the field mode, `−Tr ρ ln ρ`, where
/// `ρ(j, j′) = Σ_l C(j, l) C*(j′, l)` and `C(j, l) = c_{j+l, j}`.
pub fn entanglement_entropy(state: &QuantumState) -> Result<f64> {
    let deviation = (1.0 - state.norm()).abs();
    if deviation > 1e-8 {
        return Err(Error::NotNormalized { deviation });
    }
    let nmax = state.nmax();
    let dim = nmax + 1;
    let coeff = |j: usize, l: usize| state.sector(j + l)[j];
    let mut rho = vec![C64::new(0.0, 0.0); dim * dim];
    for j in 0..dim {
        for jp in j..dim {
            let mut acc = C64::new(0.0, 0.0);
            for l in 0..=(nmax - jp) {
                acc += coeff(j, l) * coeff(jp, l).conj();
            }
            rho[j * dim + jp] = acc;
            rho[jp * dim + j] = acc.conj();
        }
    }
    let eig = hermitian_eigenvalues(&rho, dim)?;
    Ok(eig
        .iter()
        .filter(|&&p| p > ENTROPY_EIGEN_FLOOR)
        .map(|&p| -p * libm::log(p))
        .collect::<NeumaierSum>()
        .total())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{coherent_state, mean_photon_initial, pacs_state, StateSpec};

    fn real(a: f64) -> C64 {
        C64::new(a, 0.0)
    }

    #[test]
    fn uncoupled_field_number_is_constant() {
        let st = pacs_state(real(1.5), 2, 1e-12).unwrap();
        let p = ModelParams::resonant(3.0, 0.0);
        let obs = evolve_series(&st, &p, 0.1, 500, false).unwrap();
        let n0 = mean_photon_initial(&StateSpec::photon_added(real(1.5), 2));
        for v in &obs.mean_n.values {
            assert!((v - n0).abs() < 1e-9);
        }
        let first = obs.mean_n.values[0];
        assert!(obs.mean_n.values.iter().all(|v| (v - first).abs() < 1e-12));
        assert!(conservation_residual(&obs) < 1e-12);
    }

    #[test]
    fn linear_coupling_cosine_squared() {
        let g = 0.9;
        let st = coherent_state(real(1.0), 1e-12).unwrap();
        let p = ModelParams::resonant(0.0, g);
        let dt = 0.05;
        let obs = evolve_series(&st, &p, dt, 2000, false).unwrap();
        for (j, v) in obs.mean_n.values.iter().enumerate() {
            let c = libm::cos(g * j as f64 * dt);
            assert!((v - c * c).abs() < 1e-9, "sample {j}");
        }
    }

    #[test]
    fn product_state_has_zero_entropy() {
        let st = pacs_state(real(2.0), 1, 1e-12).unwrap();
        assert!(entanglement_entropy(&st).unwrap().abs() < 1e-10);
    }

    #[test]
    fn bell_pair_entropy_is_ln2() {
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let st = QuantumState::from_sectors(vec![vec![real(0.0)], vec![real(h), real(h)]]).unwrap();
        let s = entanglement_entropy(&st).unwrap();
        assert!((s - core::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn entropy_rejects_unnormalized_input() {
        let st = QuantumState::from_sectors(vec![vec![real(0.5)]]).unwrap();
        assert!(matches!(entanglement_entropy(&st), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn entropy_grows_but_stays_below_dimension_bound() {
        let st = coherent_state(real(1.0), 1e-12).unwrap();
        let p = ModelParams::resonant(5.0, 1.0);
        let prop = Propagator::new(&st, &p).unwrap();
        let bound = libm::log((st.nmax() + 1) as f64);
        let mut max = 0.0f64;
        for j in 0..50 {
            let s = entanglement_entropy(&prop.state_at(j as f64 * 0.3)).unwrap();
            assert!(s >= -1e-12 && s <= bound + 1e-12);
            max = max.max(s);
        }
        assert!(max > 0.1);
    }

    #[test]
    fn entropy_series_stride() {
        let st = coherent_state(real(1.0), 1e-12).unwrap();
        let p = ModelParams::resonant(1.0, 1.0);
        let opts = EvolveOptions {
            want_entropy: true,
            entropy_stride: 10,
        };
        let obs = evolve_series_with(&st, &p, 0.1, 100, &opts).unwrap();
        let e = obs.entropy.unwrap();
        assert_eq!(e.len(), 10);
        assert!((e.dt - 1.0).abs() < 1e-15);
        assert!(e.values[0].abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_grid() {
        let st = coherent_state(real(1.0), 1e-12).unwrap();
        let p = ModelParams::resonant(1.0, 1.0);
        assert!(evolve_series(&st, &p, 0.0, 10, false).is_err());
        assert!(evolve_series(&st, &p, 0.1, 1, false).is_err());
    }

    #[test]
    fn time_series_invariants() {
        assert!(TimeSeries::new(0.1, vec![1.0], "x").is_err());
        assert!(TimeSeries::new(-0.1, vec![1.0, 2.0], "x").is_err());
        assert!(TimeSeries::new(0.1, vec![1.0, f64::NAN], "x").is_err());
        let s = TimeSeries::new(0.1, vec![1.0, 2.0, 3.0], "x").unwrap();
        assert_eq!(s.discard_prefix(1).unwrap().values, vec![2.0, 3.0]);
        assert!(s.discard_prefix(2).is_err());
        assert_eq!(s.reversed().values, vec![3.0, 2.0, 1.0]);
    }
}
