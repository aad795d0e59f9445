//! The two-mode Kerr Hamiltonian, block by block.
//!
//! In sector `n` of the total excitation number the basis is
//! `|k⟩_field ⊗ |n−k⟩_atom`, `k = 0..=n`, and the Hamiltonian is the real
//! symmetric tridiagonal matrix
//!
//! ```text
//! H[k][k]   = ω k + ω₀ (n−k) + γ (n−k)(n−k−1)
//! H[k][k+1] = g √((k+1)(n−k))
//! ```

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{self, SymmetricEigen, DEFAULT_DEFLATION_TOL};
use crate::{Error, Result};

/// Largest sector index accepted by [`build_sector_block`].
pub const MAX_SECTOR: usize = 1_000_000;

/// Frequencies and couplings of the Hamiltonian, in inverse time units (ħ = 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Field frequency ω.
    pub omega: f64,
    /// Atomic-oscillator frequency ω₀.
    pub omega0: f64,
    /// Kerr strength γ.
    pub gamma: f64,
    /// Field–atom coupling g.
    pub g: f64,
}

impl Default for ModelParams {
    /// Exact resonance, `ω = ω₀ = 1`, with no coupling or nonlinearity.
    fn default() -> Self {
        Self {
            omega: 1.0,
            omega0: 1.0,
            gamma: 0.0,
            g: 0.0,
        }
    }
}

impl ModelParams {
    /// Resonant model (`ω = ω₀ = 1`) with the given Kerr strength and coupling.
    pub fn resonant(gamma: f64, g: f64) -> Self {
        Self {
            gamma,
            g,
            ..Self::default()
        }
    }

    /// Checks finiteness and the sign constraints on `γ` and `g`.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("omega", self.omega),
            ("omega0", self.omega0),
            ("gamma", self.gamma),
            ("g", self.g),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        if self.gamma < 0.0 {
            return Err(Error::invalid("gamma", "must be non-negative"));
        }
        if self.g < 0.0 {
            return Err(Error::invalid("g", "must be non-negative"));
        }
        Ok(())
    }

    /// Nonlinearity-to-coupling ratio γ/g (infinite when g = 0).
    pub fn gamma_over_g(&self) -> f64 {
        self.gamma / self.g
    }

    /// Returns a copy with both frequencies shifted by `delta`.
    pub fn shifted(&self, delta: f64) -> Self {
        Self {
            omega: self.omega + delta,
            omega0: self.omega0 + delta,
            ..*self
        }
    }
}

/// Dimension of sector `n`.
#[inline]
pub const fn sector_dimension(n: usize) -> usize {
    n + 1
}

/// Hamiltonian restricted to one total-number sector, with its spectrum.
///
/// Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorBlock {
    /// Total excitation number.
    pub n: usize,
    /// Diagonal entries, indexed by field occupation `k`.
    pub diag: Vec<f64>,
    /// Off-diagonal entries; `off[k]` couples `k` and `k + 1`.
    pub off: Vec<f64>,
    /// Eigenvalues (ascending) and orthogonal eigenvector matrix.
    pub eigen: SymmetricEigen,
}

impl SectorBlock {
    /// Dimension `n + 1`.
    pub fn dim(&self) -> usize {
        sector_dimension(self.n)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigen.values
    }

    /// Dense row-major copy of the block.
    pub fn dense(&self) -> Vec<f64> {
        let d = self.dim();
        let mut m = vec![0.0; d * d];
        for k in 0..d {
            m[k * d + k] = self.diag[k];
            if k + 1 < d {
                m[k * d + k + 1] = self.off[k];
                m[(k + 1) * d + k] = self.off[k];
            }
        }
        m
    }
}

/// Builds and diagonalizes the sector-`n` block with the default deflation
/// tolerance.
pub fn build_sector_block(n: usize, params: &ModelParams) -> Result<SectorBlock> {
    build_sector_block_with_tol(n, params, DEFAULT_DEFLATION_TOL)
}

/// As [`build_sector_block`] with an explicit relative deflation tolerance.
pub fn build_sector_block_with_tol(n: usize, params: &ModelParams, rel_tol: f64) -> Result<SectorBlock> {
    params.validate()?;
    if n > MAX_SECTOR {
        return Err(Error::SectorTooLarge { n, max: MAX_SECTOR });
    }
    let dim = sector_dimension(n);
    let diag: Vec<f64> = (0..dim)
        .map(|k| {
            let atom = (n - k) as f64;
            params.omega * k as f64 + params.omega0 * atom + params.gamma * atom * (atom - 1.0)
        })
        .collect();
    let off: Vec<f64> = (0..n)
        .map(|k| params.g * libm::sqrt(((k + 1) * (n - k)) as f64))
        .collect();
    let eigen = linalg::tridiagonal_eigen(&diag, &off, rel_tol, true)?;
    Ok(SectorBlock { n, diag, off, eigen })
}

/// Blocks for sectors `0..=nmax`, in ascending order.
pub fn build_blocks(nmax: usize, params: &ModelParams) -> Result<Vec<SectorBlock>> {
    (0..=nmax).map(|n| build_sector_block(n, params)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frob(a: &[f64]) -> f64 {
        libm::sqrt(a.iter().map(|x| x * x).sum())
    }

    #[test]
    fn vacuum_sector() {
        let b = build_sector_block(0, &ModelParams::resonant(5.0, 1.0)).unwrap();
        assert_eq!(b.dense(), vec![0.0]);
        assert_eq!(b.eigenvalues(), &[0.0]);
    }

    #[test]
    fn one_excitation_is_two_level_splitting() {
        let g = 0.37;
        let b = build_sector_block(1, &ModelParams::resonant(2.5, g)).unwrap();
        assert_eq!(b.dense(), vec![1.0, g, g, 1.0]);
        assert!((b.eigenvalues()[0] - (1.0 - g)).abs() < 1e-15);
        assert!((b.eigenvalues()[1] - (1.0 + g)).abs() < 1e-15);
    }

    #[test]
    fn two_excitations_entries() {
        let b = build_sector_block(2, &ModelParams::resonant(5.0, 1.0)).unwrap();
        assert_eq!(b.diag, vec![12.0, 2.0, 2.0]);
        let s2 = core::f64::consts::SQRT_2;
        assert!((b.off[0] - s2).abs() < 1e-15 && (b.off[1] - s2).abs() < 1e-15);
    }

    #[test]
    fn sector_dimension_is_n_plus_one() {
        assert_eq!(sector_dimension(0), 1);
        assert_eq!(sector_dimension(5), 6);
        assert_eq!(sector_dimension(100), 101);
    }

    #[test]
    fn rejects_absurd_sector_and_bad_params() {
        assert!(matches!(
            build_sector_block(MAX_SECTOR + 1, &ModelParams::default()),
            Err(Error::SectorTooLarge { .. })
        ));
        let bad = ModelParams {
            g: -1.0,
            ..ModelParams::default()
        };
        assert!(build_sector_block(1, &bad).is_err());
        let nan = ModelParams {
            omega: f64::NAN,
            ..ModelParams::default()
        };
        assert!(build_sector_block(1, &nan).is_err());
    }

    #[test]
    fn linear_beam_splitter_spectrum() {
        let (w, g) = (1.3, 0.7);
        let p = ModelParams {
            omega: w,
            omega0: w,
            gamma: 0.0,
            g,
        };
        for n in [1usize, 4, 17, 60] {
            let b = build_sector_block(n, &p).unwrap();
            for (k, e) in b.eigenvalues().iter().enumerate() {
                let exact = w * n as f64 + g * (2.0 * k as f64 - n as f64);
                assert!((e - exact).abs() < 1e-10, "n={n} k={k}: {e} vs {exact}");
            }
        }
    }

    #[test]
    fn reconstruction_and_orthogonality() {
        let p = ModelParams::resonant(5.0, 1.0);
        for n in [3usize, 20, 80] {
            let b = build_sector_block(n, &p).unwrap();
            let d = b.dim();
            let dense = b.dense();
            let mut recon = vec![0.0; d * d];
            let mut gram = vec![0.0; d * d];
            for i in 0..d {
                for j in 0..d {
                    let mut r = 0.0;
                    let mut q = 0.0;
                    for k in 0..d {
                        r += b.eigen.vector(i, k) * b.eigen.values[k] * b.eigen.vector(j, k);
                        q += b.eigen.vector(k, i) * b.eigen.vector(k, j);
                    }
                    recon[i * d + j] = r - dense[i * d + j];
                    gram[i * d + j] = q - if i == j { 1.0 } else { 0.0 };
                }
            }
            assert!(frob(&recon) / frob(&dense) < 1e-12);
            assert!(gram.iter().all(|x| x.abs() < 1e-12));
        }
    }
}
