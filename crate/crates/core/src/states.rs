//! Initial product states `|α;0⟩` and `|(α,m);0⟩` in sector-resolved form.
//!
//! With the atom in its ground state, field Fock level `j` lands in sector
//! `n = j` at field index `k = n`, so every sector carries a single nonzero
//! coefficient at construction.

use alloc::vec;
use alloc::vec::Vec;

use crate::special::{laguerre, ln_factorial};
use crate::sum::NeumaierSum;
use crate::{Error, Result, C64};

/// Default truncation tolerance on the discarded photon-number tail.
pub const DEFAULT_EPS_TRUNC: f64 = 1e-12;
/// Default cap on the truncation sector.
pub const DEFAULT_SECTOR_CAP: usize = 4096;

/// Kind of initial field state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateKind {
    /// Coherent state `|α⟩`.
    Coherent,
    /// Photon-added coherent state `(a†)^m|α⟩`, normalized.
    PhotonAdded,
}

/// Parameters of an initial field state; the atom always starts in `|0⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateSpec {
    /// CS or PACS.
    pub kind: StateKind,
    /// Coherent amplitude α.
    pub alpha: C64,
    /// Photon-addition order (0 for coherent states).
    pub m: usize,
}

impl StateSpec {
    /// Coherent state with amplitude `alpha`.
    pub fn coherent(alpha: C64) -> Self {
        Self {
            kind: StateKind::Coherent,
            alpha,
            m: 0,
        }
    }

    /// Photon-added coherent state of order `m`.
    pub fn photon_added(alpha: C64, m: usize) -> Self {
        Self {
            kind: StateKind::PhotonAdded,
            alpha,
            m,
        }
    }

    /// State specified by `ν = |α|²` with real positive `α = √ν`.
    pub fn from_nu(kind: StateKind, nu: f64, m: usize) -> Self {
        let alpha = C64::new(libm::sqrt(nu), 0.0);
        match kind {
            StateKind::Coherent => Self::coherent(alpha),
            StateKind::PhotonAdded => Self::photon_added(alpha, m),
        }
    }

    /// `ν = |α|²`.
    pub fn nu(&self) -> f64 {
        self.alpha.norm_sqr()
    }

    /// Checks finiteness of α and that `m = 0` for coherent states.
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.re.is_finite() && self.alpha.im.is_finite()) {
            return Err(Error::invalid("alpha", "must be finite"));
        }
        if self.kind == StateKind::Coherent && self.m != 0 {
            return Err(Error::invalid("m", "must be 0 for a coherent state"));
        }
        Ok(())
    }
}

/// Sector-resolved joint state: `coeffs[n][k]` multiplies `|k⟩_field ⊗ |n−k⟩_atom`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    coeffs: Vec<Vec<C64>>,
    /// `1 − Σ|c|²` at construction (the discarded tail weight).
    pub norm_deficit: f64,
}

impl QuantumState {
    /// Wraps explicit sector coefficients; `coeffs[n]` must have length `n + 1`.
    pub fn from_sectors(coeffs: Vec<Vec<C64>>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::invalid("coeffs", "at least sector 0 is required"));
        }
        for (n, c) in coeffs.iter().enumerate() {
            if c.len() != n + 1 {
                return Err(Error::invalid("coeffs", "sector n must hold n + 1 entries"));
            }
        }
        let mut st = Self {
            coeffs,
            norm_deficit: 0.0,
        };
        st.norm_deficit = 1.0 - st.norm();
        Ok(st)
    }

    /// Product state `Σ_j f_j |j⟩ ⊗ |0⟩` for field amplitudes `field`.
    fn from_field_amplitudes(field: &[C64], deficit: f64) -> Self {
        let coeffs = field
            .iter()
            .enumerate()
            .map(|(n, &c)| {
                let mut sector = vec![C64::new(0.0, 0.0); n + 1];
                sector[n] = c;
                sector
            })
            .collect();
        Self {
            coeffs,
            norm_deficit: deficit,
        }
    }

    /// Truncation sector.
    pub fn nmax(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficients of sector `n`.
    pub fn sector(&self, n: usize) -> &[C64] {
        &self.coeffs[n]
    }

    /// All sectors in ascending order.
    pub fn sectors(&self) -> &[Vec<C64>] {
        &self.coeffs
    }

    /// `Σ |c_{n,k}|²`.
    pub fn norm(&self) -> f64 {
        self.coeffs
            .iter()
            .flatten()
            .map(|c| c.norm_sqr())
            .collect::<NeumaierSum>()
            .total()
    }

    /// `⟨a†a⟩ = Σ k |c_{n,k}|²`.
    pub fn mean_field_number(&self) -> f64 {
        self.coeffs
            .iter()
            .flat_map(|s| s.iter().enumerate().map(|(k, c)| k as f64 * c.norm_sqr()))
            .collect::<NeumaierSum>()
            .total()
    }

    /// `⟨b†b⟩ = Σ (n−k) |c_{n,k}|²`.
    pub fn mean_atom_number(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .flat_map(|(n, s)| s.iter().enumerate().map(move |(k, c)| (n - k) as f64 * c.norm_sqr()))
            .collect::<NeumaierSum>()
            .total()
    }

    /// Field photon-number distribution `P(j) = Σ_{n} |c_{n,j}|²`.
    pub fn field_distribution(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.coeffs.len()];
        for s in &self.coeffs {
            for (k, c) in s.iter().enumerate() {
                p[k] += c.norm_sqr();
            }
        }
        p
    }
}

/// Builds the initial state described by `spec`.
pub fn initial_state(spec: &StateSpec, eps_trunc: f64, cap: usize) -> Result<QuantumState> {
    spec.validate()?;
    match spec.kind {
        StateKind::Coherent => coherent_state_with_cap(spec.alpha, eps_trunc, cap),
        StateKind::PhotonAdded => pacs_state_with_cap(spec.alpha, spec.m, eps_trunc, cap),
    }
}

/// `|α⟩ ⊗ |0⟩` truncated so that the discarded tail is below `eps_trunc`.
pub fn coherent_state(alpha: C64, eps_trunc: f64) -> Result<QuantumState> {
    coherent_state_with_cap(alpha, eps_trunc, DEFAULT_SECTOR_CAP)
}

/// [`coherent_state`] with an explicit sector cap.
pub fn coherent_state_with_cap(alpha: C64, eps_trunc: f64, cap: usize) -> Result<QuantumState> {
    pacs_state_with_cap(alpha, 0, eps_trunc, cap)
}

/// `(a†)^m|α⟩ ⊗ |0⟩ / √(m! L_m(−ν))`, truncated like [`coherent_state`].
pub fn pacs_state(alpha: C64, m: usize, eps_trunc: f64) -> Result<QuantumState> {
    pacs_state_with_cap(alpha, m, eps_trunc, DEFAULT_SECTOR_CAP)
}

/// [`pacs_state`] with an explicit sector cap.
pub fn pacs_state_with_cap(alpha: C64, m: usize, eps_trunc: f64, cap: usize) -> Result<QuantumState> {
    if !(eps_trunc > 0.0 && eps_trunc <= 1e-6) {
        return Err(Error::invalid("eps_trunc", "must lie in (0, 1e-6]"));
    }
    if !(alpha.re.is_finite() && alpha.im.is_finite()) {
        return Err(Error::invalid("alpha", "must be finite"));
    }
    let nu = alpha.norm_sqr();
    let phase = alpha.arg();

    if nu == 0.0 {
        // Fock state |m⟩.
        let mut field = vec![C64::new(0.0, 0.0); m + 1];
        field[m] = C64::new(1.0, 0.0);
        if m > cap {
            return Err(Error::TruncationCap { needed: m, cap });
        }
        return Ok(QuantumState::from_field_amplitudes(&field, 0.0));
    }

    let ln_abs_alpha = 0.5 * libm::log(nu);
    let ln_norm = ln_factorial(m) + libm::log(laguerre(m, -nu));
    // ln|c_j| for j ≥ m.
    let ln_amp = |j: usize| -> f64 {
        -0.5 * nu + (j - m) as f64 * ln_abs_alpha + 0.5 * ln_factorial(j) - ln_factorial(j - m) - 0.5 * ln_norm
    };

    // Scan past the bulk until the terms are far below the tolerance and
    // falling; the remaining tail is then negligible against eps_trunc.
    let negligible = libm::log(eps_trunc) - 30.0;
    let limit = cap.saturating_add(64);
    let mut probs: Vec<f64> = vec![0.0; m];
    let mut j = m;
    loop {
        let lp = 2.0 * ln_amp(j);
        probs.push(libm::exp(lp));
        let past_peak = (j - m) as f64 > nu + 1.0;
        if past_peak && lp < negligible {
            break;
        }
        if j >= limit {
            return Err(Error::TruncationCap { needed: j, cap });
        }
        j += 1;
    }

    // suffix[j] = Σ_{i ≥ j} p_i, summed from the smallest terms upward.
    let mut suffix = vec![0.0; probs.len() + 1];
    for i in (0..probs.len()).rev() {
        suffix[i] = suffix[i + 1] + probs[i];
    }
    let nmax = (0..probs.len())
        .find(|&n| suffix[n + 1] < eps_trunc)
        .expect("scan terminates below tolerance");
    if nmax > cap {
        return Err(Error::TruncationCap { needed: nmax, cap });
    }

    let field: Vec<C64> = (0..=nmax)
        .map(|j| {
            if j < m {
                C64::new(0.0, 0.0)
            } else {
                C64::from_polar(libm::exp(ln_amp(j)), (j - m) as f64 * phase)
            }
        })
        .collect();
    Ok(QuantumState::from_field_amplitudes(&field, suffix[nmax + 1]))
}

/// `⟨N(0)⟩`: `ν` for a coherent state, `(m+1) L_{m+1}(−ν)/L_m(−ν) − 1` for a PACS.
pub fn mean_photon_initial(spec: &StateSpec) -> f64 {
    let nu = spec.nu();
    match spec.kind {
        StateKind::Coherent => nu,
        StateKind::PhotonAdded => {
            let m = spec.m;
            (m as f64 + 1.0) * laguerre(m + 1, -nu) / laguerre(m, -nu) - 1.0
        }
    }
}
