//! Quantum-state types in the fixed computational basis.
//!
//! Every type here is validated on construction and immutable afterwards.
//! Complex entries travel through JSON as `[re, im]` pairs.

use nalgebra::{DMatrix, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds;
use crate::C64;

/// Absolute tolerances used when validating states.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub hermitian: f64,
    pub trace: f64,
    pub psd: f64,
    pub norm: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances::uniform(1e-9)
    }
}

impl Tolerances {
    pub fn uniform(tol: f64) -> Self {
        Tolerances {
            hermitian: tol,
            trace: tol,
            psd: tol,
            norm: tol,
        }
    }
}

/// A raw square complex matrix, not yet known to be a state.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl ComplexMatrix {
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::NotSquare {
                rows: entries.nrows(),
                row: 0,
                cols: entries.ncols(),
            });
        }
        if entries.nrows() < 2 {
            return Err(Error::DimensionTooSmall {
                dim: entries.nrows(),
                min: 2,
            });
        }
        Ok(ComplexMatrix(entries))
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::NotSquare {
                    rows: n,
                    row: i,
                    cols: row.len(),
                });
            }
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// Convenience constructor for real-valued matrices.
    pub fn from_real<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.as_ref().iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.0
    }
}

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(DMatrix<C64>);

/// Checks the three density-matrix invariants with the default 1e-9 tolerances.
pub fn validate_density(m: ComplexMatrix) -> Result<DensityMatrix> {
    validate_density_with(m, &Tolerances::default())
}

pub fn validate_density_with(m: ComplexMatrix, tol: &Tolerances) -> Result<DensityMatrix> {
    let a = m.0;
    let d = a.nrows();

    let mut deviation = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            deviation = deviation.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    if !(deviation <= tol.hermitian) {
        return Err(Error::NotHermitian {
            deviation,
            tol: tol.hermitian,
        });
    }

    let trace: f64 = (0..d).map(|i| a[(i, i)].re).sum();
    if !((trace - 1.0).abs() <= tol.trace) {
        return Err(Error::NotUnitTrace {
            trace,
            deviation: (trace - 1.0).abs(),
            tol: tol.trace,
        });
    }

    // Store the exactly Hermitian part; it differs from the input by at most
    // the Hermiticity tolerance and is a fixed point for Hermitian input.
    let herm = DMatrix::from_fn(d, d, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5);
    let min_eigenvalue = SymmetricEigen::try_new(herm.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::EigenFailure {
            matrix: format!("{herm:?}"),
        })?
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if !(min_eigenvalue >= -tol.psd) {
        return Err(Error::NotPsd {
            min_eigenvalue,
            tol: tol.psd,
        });
    }
    Ok(DensityMatrix(herm))
}

impl DensityMatrix {
    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    /// Real diagonal entries (basis populations).
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.0[(i, i)].re).collect()
    }

    /// Populations as a coherence vector.
    pub fn populations(&self) -> CoherenceVector {
        CoherenceVector::from_raw(self.diagonal().into_iter().map(|x| x.max(0.0)).collect())
    }

    pub fn purity(&self) -> f64 {
        (&self.0 * &self.0).trace().re
    }

    pub fn max_off_diagonal(&self) -> f64 {
        let d = self.dim();
        let mut m = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    m = m.max(self.0[(i, j)].norm());
                }
            }
        }
        m
    }

    /// No off-diagonal entry exceeds `tol` in modulus.
    pub fn is_incoherent(&self, tol: f64) -> bool {
        self.max_off_diagonal() <= tol
    }

    pub fn from_pure(psi: &PureState) -> DensityMatrix {
        let a = &psi.0;
        let d = a.len();
        let mut m = DMatrix::from_fn(d, d, |i, j| a[i] * a[j].conj());
        for i in 0..d {
            m[(i, i)] = C64::new(a[i].norm_sqr(), 0.0);
        }
        DensityMatrix(m)
    }

    pub fn to_complex_matrix(&self) -> ComplexMatrix {
        ComplexMatrix(self.0.clone())
    }
}

/// Unit-norm amplitude vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState(Vec<C64>);

impl PureState {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        Self::new_with(amplitudes, Tolerances::default().norm)
    }

    pub fn new_with(amplitudes: Vec<C64>, tol: f64) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(Error::DimensionTooSmall {
                dim: amplitudes.len(),
                min: 2,
            });
        }
        let norm_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !((norm_sq - 1.0).abs() <= tol) {
            return Err(Error::NotNormalized { norm_sq, tol });
        }
        Ok(PureState(amplitudes))
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// Normalizes a non-zero vector.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::NotNormalized {
                norm_sq: norm * norm,
                tol: 0.0,
            });
        }
        Self::new(amplitudes.into_iter().map(|a| a / norm).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.0
    }

    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix::from_pure(self)
    }
}

/// Probability vector of basis populations.
#[derive(Clone, Debug, PartialEq)]
pub struct CoherenceVector(Vec<f64>);

impl CoherenceVector {
    /// Validates non-negativity and unit sum within 1e-9. Entries in
    /// `[-1e-9, 0)` are clamped to zero.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        const TOL: f64 = 1e-9;
        if probs.is_empty() {
            return Err(Error::NotProbabilityVector {
                reason: "empty vector".into(),
            });
        }
        if let Some((i, &x)) = probs
            .iter()
            .enumerate()
            .find(|(_, x)| !x.is_finite() || **x < -TOL)
        {
            return Err(Error::NotProbabilityVector {
                reason: format!("entry {i} = {x} is negative or not finite"),
            });
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > TOL {
            return Err(Error::NotProbabilityVector {
                reason: format!("entries sum to {sum}"),
            });
        }
        Ok(CoherenceVector(probs.into_iter().map(|x| x.max(0.0)).collect()))
    }

    pub(crate) fn from_raw(probs: Vec<f64>) -> Self {
        CoherenceVector(probs)
    }

    pub fn uniform(d: usize) -> Self {
        CoherenceVector(vec![1.0 / d as f64; d])
    }

    /// The basis vertex `e_k`.
    pub fn vertex(d: usize, k: usize) -> Self {
        let mut v = vec![0.0; d];
        v[k] = 1.0;
        CoherenceVector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn permuted(&self, perm: &[usize]) -> Self {
        CoherenceVector(perm.iter().map(|&i| self.0[i]).collect())
    }
}

/// Basis populations `|<i|psi>|^2`.
pub fn coherence_vector(psi: &PureState) -> CoherenceVector {
    CoherenceVector(psi.0.iter().map(|a| a.norm_sqr()).collect())
}

/// Maximally coherent state with amplitudes `e^{i theta_n} / sqrt(d)`.
pub fn mcs(d: usize, phases: &[f64]) -> Result<PureState> {
    if d < 2 {
        return Err(Error::DimensionTooSmall { dim: d, min: 2 });
    }
    if phases.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: phases.len(),
        });
    }
    let amp = 1.0 / (d as f64).sqrt();
    Ok(PureState(
        phases.iter().map(|&t| C64::from_polar(amp, t)).collect(),
    ))
}

/// Keeps the diagonal, drops every coherence.
pub fn dephase(rho: &DensityMatrix) -> DensityMatrix {
    let d = rho.dim();
    DensityMatrix(DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            C64::new(rho.0[(i, i)].re, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    }))
}

pub(crate) fn complex_gaussian<R: rand::Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im)
}

/// Haar-random pure state from normalized complex Gaussian amplitudes.
pub fn random_pure(d: usize, seed: u64) -> Result<PureState> {
    if d < 2 {
        return Err(Error::DimensionTooSmall { dim: d, min: 2 });
    }
    let mut rng = seeds::rng(seed);
    let v: Vec<C64> = (0..d).map(|_| complex_gaussian(&mut rng)).collect();
    PureState::normalized(v)
}

/// Induced random state `G G^+ / Tr(G G^+)` for a `d x rank` Ginibre matrix `G`.
pub fn random_density(d: usize, rank: usize, seed: u64) -> Result<DensityMatrix> {
    if d < 2 {
        return Err(Error::DimensionTooSmall { dim: d, min: 2 });
    }
    if rank < 1 || rank > d {
        return Err(Error::RankOutOfBounds { rank, dim: d });
    }
    let mut rng = seeds::rng(seed);
    let g = DMatrix::from_fn(d, rank, |_, _| complex_gaussian(&mut rng));
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    validate_density(ComplexMatrix(m / C64::new(tr, 0.0)))
}

// ---------------------------------------------------------------------------
// JSON state format

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Density,
    Pure,
}

/// On-disk representation: `{"dim", "kind", "matrix" | "amplitudes"}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub dim: usize,
    pub kind: StateKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<[f64; 2]>>,
    /// Provenance record written by the CLI; ignored on load.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<serde_json::Value>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum State {
    Pure(PureState),
    Density(DensityMatrix),
}

pub(crate) fn to_pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

pub(crate) fn from_pair(p: [f64; 2]) -> C64 {
    C64::new(p[0], p[1])
}

impl State {
    pub fn dim(&self) -> usize {
        match self {
            State::Pure(p) => p.dim(),
            State::Density(r) => r.dim(),
        }
    }

    /// The state as a density matrix (projector for pure states).
    pub fn density(&self) -> DensityMatrix {
        match self {
            State::Pure(p) => p.projector(),
            State::Density(r) => r.clone(),
        }
    }

    pub fn from_file(file: &StateFile, tol: &Tolerances) -> Result<Self> {
        match file.kind {
            StateKind::Pure => {
                let amps = file
                    .amplitudes
                    .as_ref()
                    .ok_or_else(|| Error::format("amplitudes", "missing for kind \"pure\""))?;
                if amps.len() != file.dim {
                    return Err(Error::format(
                        "amplitudes",
                        format!("expected {} entries, found {}", file.dim, amps.len()),
                    ));
                }
                let amps = amps.iter().copied().map(from_pair).collect();
                Ok(State::Pure(PureState::new_with(amps, tol.norm)?))
            }
            StateKind::Density => {
                let rows = file
                    .matrix
                    .as_ref()
                    .ok_or_else(|| Error::format("matrix", "missing for kind \"density\""))?;
                if rows.len() != file.dim {
                    return Err(Error::format(
                        "matrix",
                        format!("expected {} rows, found {}", file.dim, rows.len()),
                    ));
                }
                let rows: Vec<Vec<C64>> = rows
                    .iter()
                    .map(|r| r.iter().copied().map(from_pair).collect())
                    .collect();
                let m = ComplexMatrix::from_rows(&rows)?;
                Ok(State::Density(validate_density_with(m, tol)?))
            }
        }
    }

    pub fn to_file(&self) -> StateFile {
        match self {
            State::Pure(p) => StateFile {
                dim: p.dim(),
                kind: StateKind::Pure,
                matrix: None,
                amplitudes: Some(p.0.iter().copied().map(to_pair).collect()),
                manifest: None,
            },
            State::Density(r) => {
                let d = r.dim();
                StateFile {
                    dim: d,
                    kind: StateKind::Density,
                    matrix: Some(
                        (0..d)
                            .map(|i| (0..d).map(|j| to_pair(r.0[(i, j)])).collect())
                            .collect(),
                    ),
                    amplitudes: None,
                    manifest: None,
                }
            }
        }
    }

    pub fn from_json_str(s: &str, tol: &Tolerances) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(s).map_err(|e| Error::format("<document>", e.to_string()))?;
        let file: StateFile = serde_json::from_value(value.clone())
            .map_err(|e| Error::format(json_field(&value, &e), e.to_string()))?;
        Self::from_file(&file, tol)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("state serializes")
    }
}

/// Names the field behind a deserialization error: the first top-level field
/// that fails on its own, else the name quoted in the message.
fn json_field(value: &serde_json::Value, e: &serde_json::Error) -> String {
    use serde_json::from_value as parse;
    type Pairs = Vec<[f64; 2]>;
    let checks: [(&str, fn(serde_json::Value) -> bool); 4] = [
        ("dim", |v| parse::<usize>(v).is_ok()),
        ("kind", |v| parse::<StateKind>(v).is_ok()),
        ("matrix", |v| parse::<Vec<Pairs>>(v).is_ok()),
        ("amplitudes", |v| parse::<Pairs>(v).is_ok()),
    ];
    if let Some(obj) = value.as_object() {
        for (name, ok) in checks {
            if let Some(v) = obj.get(name) {
                if !ok(v.clone()) {
                    return name.to_string();
                }
            }
        }
    }
    let msg = e.to_string();
    msg.split('`').nth(1).unwrap_or("<document>").to_string()
}

impl Serialize for DensityMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        State::Density(self.clone()).to_file().serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let file = StateFile::deserialize(d)?;
        match State::from_file(&file, &Tolerances::default()) {
            Ok(State::Density(r)) => Ok(r),
            Ok(State::Pure(p)) => Ok(p.projector()),
            Err(e) => Err(serde::de::Error::custom(e)),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct PureStateRepr {
    amplitudes: Vec<[f64; 2]>,
}

impl Serialize for PureState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PureStateRepr {
            amplitudes: self.0.iter().copied().map(to_pair).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PureState {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = PureStateRepr::deserialize(d)?;
        PureState::new(repr.amplitudes.into_iter().map(from_pair).collect())
            .map_err(serde::de::Error::custom)
    }
}
