//! Spectral data and pure-state ensembles of a density matrix.
//!
//! Every ensemble `{p_i, |psi_i>}` of a rank-`r` state is generated by an
//! `m x r` isometry `V` acting on the scaled eigenvectors:
//! `|psi~_i> = sum_j V_ij sqrt(lambda_j) |e_j>`, `p_i = <psi~_i|psi~_i>`.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::majorization::SortedVector;
use crate::seeds;
use crate::states::{coherence_vector, complex_gaussian, DensityMatrix, PureState};
use crate::C64;

/// Eigenvalues at or below this count as zero rank.
pub const RANK_TOL: f64 = 1e-10;
/// Members lighter than this are dropped from an ensemble.
pub const WEIGHT_TOL: f64 = 1e-12;
/// Max-entry reconstruction error allowed for an ensemble.
pub const RECONSTRUCTION_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct EigenSystem {
    /// Descending, clipped to `[0, 1]`.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal, `eigenvectors[j]` belongs to `eigenvalues[j]`.
    pub eigenvectors: Vec<Vec<C64>>,
    pub rank: usize,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `r x d` matrix whose row `j` is `sqrt(lambda_j) e_j`.
    pub fn scaled_basis(&self) -> DMatrix<C64> {
        let d = self.dim();
        DMatrix::from_fn(self.rank, d, |j, k| self.eigenvectors[j][k] * self.eigenvalues[j].sqrt())
    }
}

pub fn eig_hermitian(rho: &DensityMatrix) -> Result<EigenSystem> {
    let m = rho.matrix();
    let d = rho.dim();
    let fault = || Error::EigenFailure {
        matrix: format!("{m:?}"),
    };
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 10_000).ok_or_else(fault)?;

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut eigenvalues = Vec::with_capacity(d);
    let mut eigenvectors = Vec::with_capacity(d);
    for &k in &order {
        let lambda = eig.eigenvalues[k];
        if lambda < -1e-9 {
            return Err(Error::NotPsd {
                min_eigenvalue: lambda,
                tol: 1e-9,
            });
        }
        eigenvalues.push(lambda.clamp(0.0, 1.0));
        eigenvectors.push(eig.eigenvectors.column(k).iter().copied().collect::<Vec<_>>());
    }

    let mut err = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let rec: C64 = (0..d)
                .map(|k| eigenvectors[k][i] * eigenvectors[k][j].conj() * eigenvalues[k])
                .sum();
            err = err.max((rec - m[(i, j)]).norm());
        }
    }
    if err > RECONSTRUCTION_TOL {
        return Err(fault());
    }

    let rank = eigenvalues.iter().filter(|&&l| l > RANK_TOL).count();
    Ok(EigenSystem {
        eigenvalues,
        eigenvectors,
        rank,
    })
}

/// A pure-state ensemble of a parent density matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DecompositionFile", into = "DecompositionFile")]
pub struct Decomposition {
    weights: Vec<f64>,
    states: Vec<PureState>,
}

/// JSON layout: `{"weights": [...], "states": [{"amplitudes": ...}, ...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecompositionFile {
    pub weights: Vec<f64>,
    pub states: Vec<PureState>,
}

impl TryFrom<DecompositionFile> for Decomposition {
    type Error = Error;

    fn try_from(f: DecompositionFile) -> Result<Self> {
        Decomposition::new(f.weights, f.states)
    }
}

impl From<Decomposition> for DecompositionFile {
    fn from(d: Decomposition) -> Self {
        DecompositionFile {
            weights: d.weights,
            states: d.states,
        }
    }
}

/// Rotates the global phase so the first non-negligible amplitude is real positive.
fn canonical_phase(mut v: Vec<C64>) -> Vec<C64> {
    if let Some(a) = v.iter().find(|a| a.norm() > 1e-12).copied() {
        let phase = a.conj() / a.norm();
        v.iter_mut().for_each(|x| *x *= phase);
    }
    v
}

impl Decomposition {
    pub fn new(weights: Vec<f64>, states: Vec<PureState>) -> Result<Self> {
        if weights.is_empty() || weights.len() != states.len() {
            return Err(Error::format(
                "weights",
                format!("{} weights for {} states", weights.len(), states.len()),
            ));
        }
        if let Some(w) = weights.iter().find(|&&w| !(w > WEIGHT_TOL)) {
            return Err(Error::format("weights", format!("weight {w} is not above {WEIGHT_TOL:e}")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::format("weights", format!("weights sum to {sum}")));
        }
        let d = states[0].dim();
        if let Some(s) = states.iter().find(|s| s.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: s.dim(),
            });
        }
        Ok(Decomposition { weights, states })
    }

    /// Builds from unnormalized member vectors: prunes light members,
    /// normalizes weights and states, canonicalizes phases.
    pub fn from_members(members: &[Vec<C64>]) -> Result<Self> {
        let mut weights = Vec::new();
        let mut states = Vec::new();
        for m in members {
            let p: f64 = m.iter().map(|a| a.norm_sqr()).sum();
            if p > WEIGHT_TOL {
                weights.push(p);
                states.push(PureState::normalized(canonical_phase(m.clone()))?);
            }
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Decomposition::new(weights, states)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn states(&self) -> &[PureState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn parent_dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn reconstruct(&self) -> DMatrix<C64> {
        let d = self.parent_dim();
        let mut m = DMatrix::zeros(d, d);
        for (p, s) in self.weights.iter().zip(&self.states) {
            let a = s.amplitudes();
            for i in 0..d {
                for j in 0..d {
                    m[(i, j)] += a[i] * a[j].conj() * *p;
                }
            }
        }
        m
    }

    pub fn reconstruction_error(&self, rho: &DensityMatrix) -> f64 {
        if rho.dim() != self.parent_dim() {
            return f64::INFINITY;
        }
        (self.reconstruct() - rho.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn check_parent(&self, rho: &DensityMatrix) -> Result<()> {
        if rho.dim() != self.parent_dim() {
            return Err(Error::DimensionMismatch {
                expected: rho.dim(),
                found: self.parent_dim(),
            });
        }
        let error = self.reconstruction_error(rho);
        if error <= RECONSTRUCTION_TOL {
            Ok(())
        } else {
            Err(Error::ReconstructionMismatch { error })
        }
    }
}

/// Max deviation of `V^+ V` from the identity.
pub fn isometry_defect(v: &DMatrix<C64>) -> f64 {
    let g = v.adjoint() * v;
    let mut dev = 0.0f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((g[(i, j)] - C64::new(target, 0.0)).norm());
        }
    }
    dev
}

/// Ensemble generated by the isometry `v` (`m x rank`).
pub fn hjw_decomposition(rho: &DensityMatrix, v: &DMatrix<C64>) -> Result<Decomposition> {
    let eig = eig_hermitian(rho)?;
    hjw_from_eigen(rho, &eig, v)
}

pub(crate) fn hjw_from_eigen(rho: &DensityMatrix, eig: &EigenSystem, v: &DMatrix<C64>) -> Result<Decomposition> {
    if v.ncols() != eig.rank {
        return Err(Error::RankMismatch {
            expected: eig.rank,
            found: v.ncols(),
        });
    }
    if v.nrows() < eig.rank {
        return Err(Error::RankMismatch {
            expected: eig.rank,
            found: v.nrows(),
        });
    }
    let deviation = isometry_defect(v);
    if deviation > 1e-9 {
        return Err(Error::NotIsometry { deviation });
    }
    let members = v * eig.scaled_basis();
    let dec = Decomposition::from_members(&rows(&members))?;
    dec.check_parent(rho)?;
    Ok(dec)
}

pub(crate) fn rows(m: &DMatrix<C64>) -> Vec<Vec<C64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Orthonormalizes columns in place (modified Gram-Schmidt).
pub(crate) fn orthonormalize_columns(v: &mut DMatrix<C64>) {
    for j in 0..v.ncols() {
        for k in 0..j {
            let proj: C64 = (0..v.nrows()).map(|i| v[(i, k)].conj() * v[(i, j)]).sum();
            for i in 0..v.nrows() {
                let vik = v[(i, k)];
                v[(i, j)] -= vik * proj;
            }
        }
        let norm = v.column(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for i in 0..v.nrows() {
            v[(i, j)] /= norm;
        }
    }
}

/// Haar-random `m x r` isometry: Gram-Schmidt on a complex Ginibre matrix.
pub fn haar_isometry<R: rand::Rng + ?Sized>(m: usize, r: usize, rng: &mut R) -> DMatrix<C64> {
    let mut v = DMatrix::from_fn(m, r, |_, _| complex_gaussian(rng));
    orthonormalize_columns(&mut v);
    v
}

/// The decomposition-averaged sorted coherence vector of one ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateVector {
    pub vector: SortedVector,
    pub source: Decomposition,
}

/// `sum_i p_i sort_desc(mu(psi_i))`.
pub fn candidate_vector(dec: &Decomposition) -> CandidateVector {
    let d = dec.parent_dim();
    let mut acc = vec![0.0; d];
    for (p, s) in dec.weights.iter().zip(&dec.states) {
        let mut mu = coherence_vector(s).probs().to_vec();
        mu.sort_by(|a, b| b.total_cmp(a));
        for (a, x) in acc.iter_mut().zip(mu) {
            *a += p * x;
        }
    }
    CandidateVector {
        vector: SortedVector::from_sorted(acc).expect("weighted average of sorted probability vectors"),
        source: dec.clone(),
    }
}

/// `count` ensembles of size `m` from Haar-random isometries. Item `i` uses
/// seed `seed ^ i`, so the output does not depend on scheduling.
pub fn sample_decompositions(rho: &DensityMatrix, m: usize, count: usize, seed: u64) -> Result<Vec<Decomposition>> {
    let eig = eig_hermitian(rho)?;
    let d = rho.dim();
    if m < eig.rank {
        return Err(Error::RankMismatch {
            expected: eig.rank,
            found: m,
        });
    }
    if m > d * d {
        return Err(Error::InvalidConfig(format!("ensemble size {m} exceeds d^2 = {}", d * d)));
    }
    if count < 1 {
        return Err(Error::InvalidConfig("count must be at least 1".into()));
    }
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = seeds::rng(seed ^ i as u64);
            let v = haar_isometry(m, eig.rank, &mut rng);
            hjw_from_eigen(rho, &eig, &v)
        })
        .collect()
}
