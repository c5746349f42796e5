//! Exact diagonalisation of the spin-1 collisional Hamiltonian
//! `(c2/N) F² − q n0` in the three-mode Fock basis, and comparison with the
//! discretised rotor.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::dynamics::{stationary_states, AngularGrid, Period, PotentialSamples};
use crate::error::{Result, RotorError};
use crate::model::{bare_potential, derive_constants, SystemParams};

/// Default cap on the sector dimension.
pub const DEFAULT_BASIS_CAP: usize = 5000;

/// Occupations `(n₊, n₀, n₋)`.
pub type Occupation = (u32, u32, u32);

#[derive(Debug, Clone, PartialEq)]
pub struct FockBasis {
    pub n: u32,
    /// `Some(n₊ − n₋)` for a single sector, `None` for the full space.
    pub lz: Option<i64>,
    pub states: Vec<Occupation>,
    index: HashMap<Occupation, usize>,
}

impl FockBasis {
    /// The sector with fixed `n₊ − n₋ = lz`.
    pub fn sector(n: u32, lz: i64) -> Self {
        let mut states = Vec::new();
        for nm in 0..=n {
            let np = nm as i64 + lz;
            if np < 0 {
                continue;
            }
            let used = nm as i64 + np;
            if used > n as i64 {
                break;
            }
            states.push((np as u32, (n as i64 - used) as u32, nm));
        }
        Self::from_states(n, Some(lz), states)
    }

    /// All `(n + 1)(n + 2)/2` occupations.
    pub fn full(n: u32) -> Self {
        let mut states = Vec::new();
        for np in 0..=n {
            for nm in 0..=(n - np) {
                states.push((np, n - np - nm, nm));
            }
        }
        Self::from_states(n, None, states)
    }

    fn from_states(n: u32, lz: Option<i64>, states: Vec<Occupation>) -> Self {
        let index = states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        Self {
            n,
            lz,
            states,
            index,
        }
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn index_of(&self, s: Occupation) -> Option<usize> {
        self.index.get(&s).copied()
    }
}

type Sparse = Vec<(Occupation, f64)>;

/// `F₊ = √2 (b₊† b₀ + b₀† b₋)`.
fn f_plus(v: &Sparse) -> Sparse {
    let mut out = Vec::with_capacity(2 * v.len());
    for &((p, z, m), a) in v {
        if z > 0 {
            out.push((
                (p + 1, z - 1, m),
                a * (2.0 * z as f64 * (p + 1) as f64).sqrt(),
            ));
        }
        if m > 0 {
            out.push((
                (p, z + 1, m - 1),
                a * (2.0 * m as f64 * (z + 1) as f64).sqrt(),
            ));
        }
    }
    out
}

/// `F₋ = √2 (b₀† b₊ + b₋† b₀)`.
fn f_minus(v: &Sparse) -> Sparse {
    let mut out = Vec::with_capacity(2 * v.len());
    for &((p, z, m), a) in v {
        if p > 0 {
            out.push((
                (p - 1, z + 1, m),
                a * (2.0 * p as f64 * (z + 1) as f64).sqrt(),
            ));
        }
        if z > 0 {
            out.push((
                (p, z - 1, m + 1),
                a * (2.0 * z as f64 * (m + 1) as f64).sqrt(),
            ));
        }
    }
    out
}

/// `F² |s⟩ = (Fz² + ½(F₊F₋ + F₋F₊)) |s⟩` as a sparse vector.
pub fn f_squared_column(s: Occupation) -> HashMap<Occupation, f64> {
    let start = vec![(s, 1.0)];
    let mut acc: HashMap<Occupation, f64> = HashMap::new();
    let fz = s.0 as f64 - s.2 as f64;
    *acc.entry(s).or_default() += fz * fz;
    for (k, a) in f_plus(&f_minus(&start))
        .into_iter()
        .chain(f_minus(&f_plus(&start)))
    {
        *acc.entry(k).or_default() += 0.5 * a;
    }
    acc
}

/// Matrix of `(c2/N) F² − q n0` in the basis.
pub fn build_hamiltonian(basis: &FockBasis, c2: f64, q: f64, cap: usize) -> Result<DMatrix<f64>> {
    let dim = basis.dim();
    if dim > cap {
        return Err(RotorError::BasisTooLarge { dim, cap });
    }
    if basis.n == 0 {
        return Err(RotorError::InvalidParameter(
            "need at least one atom".into(),
        ));
    }
    let scale = c2 / basis.n as f64;
    let mut h = DMatrix::zeros(dim, dim);
    for (j, &s) in basis.states.iter().enumerate() {
        for (k, a) in f_squared_column(s) {
            let i = basis.index_of(k).ok_or_else(|| {
                RotorError::InvalidParameter(format!("F² leaves the basis at {k:?}"))
            })?;
            h[(i, j)] += scale * a;
        }
        h[(j, j)] -= q * s.1 as f64;
    }
    Ok(h)
}

fn sorted_eigenvalues(h: DMatrix<f64>) -> Result<Vec<f64>> {
    let eig = nalgebra::linalg::SymmetricEigen::try_new(h, 1e-15, 100_000)
        .ok_or_else(|| RotorError::Eigensolver("symmetric QR iteration did not converge".into()))?;
    let mut e: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    Ok(e)
}

/// Ascending eigenvalues of the `lz` sector.
pub fn exact_spectrum(n: u32, c2: f64, q: f64, lz: i64) -> Result<Vec<f64>> {
    let basis = FockBasis::sector(n, lz);
    if basis.dim() == 0 {
        return Err(RotorError::InvalidParameter(format!(
            "sector lz = {lz} is empty for N = {n}"
        )));
    }
    sorted_eigenvalues(build_hamiltonian(&basis, c2, q, DEFAULT_BASIS_CAP)?)
}

/// `(c2/N) F(F+1)` for every total spin present in the `lz` sector at
/// `q = 0`, ascending (one entry per state).
pub fn total_spin_levels(n: u32, c2: f64, lz: i64) -> Vec<f64> {
    let parity = n % 2;
    (0..=n)
        .filter(|f| f % 2 == parity && *f as i64 >= lz.abs())
        .map(|f| c2 / n as f64 * (f as f64) * (f as f64 + 1.0))
        .collect()
}

/// Kinetic normalisation of the rotor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotorConvention {
    /// `c2 L² / (2N)`, the one used by the dynamics.
    HalfL2,
    /// `c2 L² / N`, matching `(c2/N) F²`.
    FullL2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConventionComparison {
    pub convention: RotorConvention,
    /// Keep only parity-even rotor states.
    pub even_only: bool,
    /// Excitation energies `E_i − E_0` (units of `c2/N`).
    pub rotor_gaps: Vec<f64>,
    /// `rotor_gap_i / exact_gap_i − 1`.
    pub relative_deviations: Vec<f64>,
}

impl ConventionComparison {
    pub fn worst_deviation(&self) -> f64 {
        self.relative_deviations
            .iter()
            .fold(0.0, |m, d| m.max(d.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumComparison {
    pub n: u32,
    /// Sector eigenvalues, units of `c2/N`.
    pub exact_levels: Vec<f64>,
    pub exact_gaps: Vec<f64>,
    /// `(exact index, rotor index)` pairs in gap order.
    pub pairing: Vec<(usize, usize)>,
    pub conventions: Vec<ConventionComparison>,
}

impl SpectrumComparison {
    /// Convention with the smallest worst-gap deviation.
    pub fn best(&self) -> &ConventionComparison {
        self.conventions
            .iter()
            .min_by(|a, b| a.worst_deviation().total_cmp(&b.worst_deviation()))
            .expect("at least one convention")
    }

    pub fn get(
        &self,
        convention: RotorConvention,
        even_only: bool,
    ) -> Option<&ConventionComparison> {
        self.conventions
            .iter()
            .find(|c| c.convention == convention && c.even_only == even_only)
    }
}

/// Options for [`compare_with_rotor`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareOptions {
    /// Number of excitation gaps compared.
    pub levels: usize,
    pub grid_points: usize,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            levels: 3,
            grid_points: 256,
        }
    }
}

/// Compares low-lying excitation gaps of the `lz = 0` sector with the rotor
/// `κ_L L² + q V(θ)` for both kinetic normalisations, with and without a
/// parity-even restriction. Energies are in units of `c2/N`.
pub fn compare_with_rotor(
    ns: &[u32],
    c2: f64,
    q: f64,
    options: CompareOptions,
) -> Result<Vec<SpectrumComparison>> {
    let grid = AngularGrid::new(options.grid_points, Period::Pi)?;
    let k = options.levels + 1;
    ns.iter()
        .map(|&n| {
            let unit = c2 / n as f64;
            let exact: Vec<f64> = exact_spectrum(n, c2, q, 0)?
                .iter()
                .map(|e| e / unit)
                .collect();
            if exact.len() < k {
                return Err(RotorError::InvalidParameter(format!(
                    "N = {n} has only {} levels in the sector",
                    exact.len()
                )));
            }
            let exact_gaps: Vec<f64> = exact[1..k].iter().map(|e| e - exact[0]).collect();

            let params = SystemParams {
                atom_number: n as u64,
                c2,
                q,
                u0: 0.0,
                kappa: 1.0,
                hbar: 1.0,
                chi2_enabled: true,
            };
            let constants = derive_constants(&params)?;
            let mut conventions = Vec::new();
            for convention in [RotorConvention::HalfL2, RotorConvention::FullL2] {
                // in units of c2/N: H = s L²/2 + β V with s = 1 or 2; divide by s
                let s = match convention {
                    RotorConvention::HalfL2 => 1.0,
                    RotorConvention::FullL2 => 2.0,
                };
                let v = PotentialSamples::from_shape(&grid, constants.beta / s, |t| {
                    bare_potential(t, &constants)
                });
                let pairs = stationary_states(&grid, &v, (4 * k + 4).min(grid.n_points() / 4))?;
                for even_only in [false, true] {
                    let levels: Vec<f64> = pairs
                        .iter()
                        .filter(|p| {
                            if !even_only {
                                return true;
                            }
                            let (e, o) = p.state.parity_norms();
                            e > o
                        })
                        .map(|p| s * p.energy)
                        .collect();
                    if levels.len() < k {
                        return Err(RotorError::InvalidParameter(
                            "too few rotor levels resolved".into(),
                        ));
                    }
                    let rotor_gaps: Vec<f64> = levels[1..k].iter().map(|e| e - levels[0]).collect();
                    let relative_deviations = rotor_gaps
                        .iter()
                        .zip(&exact_gaps)
                        .map(|(r, x)| r / x - 1.0)
                        .collect();
                    conventions.push(ConventionComparison {
                        convention,
                        even_only,
                        rotor_gaps,
                        relative_deviations,
                    });
                }
            }
            Ok(SpectrumComparison {
                n,
                exact_levels: exact,
                exact_gaps,
                pairing: (0..k).map(|i| (i, i)).collect(),
                conventions,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_atom() {
        let e = exact_spectrum(1, 1.5, 0.3, 0).unwrap();
        assert_eq!(e.len(), 1);
        assert!((e[0] - (2.0 * 1.5 - 0.3)).abs() < 1e-12);
    }

    #[test]
    fn two_atoms_zero_field() {
        let b = FockBasis::sector(2, 0);
        assert_eq!(b.states, vec![(0, 2, 0), (1, 0, 1)]);
        let e = exact_spectrum(2, 1.0, 0.0, 0).unwrap();
        assert!(e[0].abs() < 1e-12 && (e[1] - 3.0).abs() < 1e-12, "{e:?}");
    }

    #[test]
    fn sector_dimensions() {
        for n in 1..=40u32 {
            assert_eq!(FockBasis::sector(n, 0).dim(), (n / 2 + 1) as usize);
        }
        assert_eq!(FockBasis::full(5).dim(), 21);
    }

    #[test]
    fn hamiltonian_is_symmetric_and_block_diagonal() {
        let b = FockBasis::full(6);
        let h = build_hamiltonian(&b, 1.3, 0.4, DEFAULT_BASIS_CAP).unwrap();
        for i in 0..b.dim() {
            for j in 0..b.dim() {
                assert!((h[(i, j)] - h[(j, i)]).abs() < 1e-12);
                let (si, sj) = (b.states[i], b.states[j]);
                if si.0 as i64 - si.2 as i64 != sj.0 as i64 - sj.2 as i64 {
                    assert!(h[(i, j)].abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn oversized_basis_rejected() {
        let b = FockBasis::full(100);
        assert!(matches!(
            build_hamiltonian(&b, 1.0, 0.0, 1000),
            Err(RotorError::BasisTooLarge { .. })
        ));
    }

    #[test]
    fn large_field_limit() {
        let (n, c2) = (10u32, 1.0);
        let q = 1e4;
        let e0 = exact_spectrum(n, c2, q, 0).unwrap()[0];
        // all atoms in m = 0: F² expectation is 2N, energy 2c2 − qN
        let want = 2.0 * c2 - q * n as f64;
        assert!((e0 - want).abs() < 1e-2 * c2, "{e0} vs {want}");
    }
}
