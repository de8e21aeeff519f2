//! Mixed-state quantifiers built from a pure-state coherence measure `Č`.
//!
//! * `C_P(rho)`: the smallest `Č(c)` over decomposition-averaged sorted
//!   coherence vectors `c = sum_i p_i sort_desc(mu(psi_i))`. The least
//!   coherent candidate sits at the top of the majorization order.
//! * Convex roof: the smallest `sum_i p_i Č(mu(psi_i))` over decompositions.
//!
//! Both are estimated by the same stochastic search over ensembles: a few
//! structured ensembles, Haar-random isometries per restart, and a local
//! refinement of each restart's best isometry by small unitary rotations.
//! For every ensemble `Č(c) >= sum_i p_i Č(mu_i)` by concavity, so
//! `C_P >= roof`; [`convexity_gap`] measures the difference on a shared pool.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomposition::{
    candidate_vector, eig_hermitian, haar_isometry, orthonormalize_columns, rows, CandidateVector, Decomposition,
    EigenSystem, WEIGHT_TOL,
};
use crate::error::{Error, Result};
use crate::majorization::{first_prefix_failure, relation_of_sorted, Relation};
use crate::pscm::PscmId;
use crate::seeds;
use crate::states::{coherence_vector, complex_gaussian, random_density, DensityMatrix};
use crate::C64;

/// Largest off-diagonal modulus for which a state is treated as incoherent.
pub const INCOHERENT_TOL: f64 = 1e-12;
/// A gap must exceed this to count as evidence of non-convexity.
pub const GAP_SIGNIFICANCE: f64 = 1e-4;
/// Allowed negative gap before the `C_P >= roof` ordering counts as broken.
pub const GAP_ORDER_TOL: f64 = 1e-6;
/// Gaps of this size are floating-point noise; relative checks are skipped below it.
pub const GAP_NOISE_FLOOR: f64 = 1e-12;
/// Number of chords in the qubit structured seed.
pub const QUBIT_GRID_POINTS: usize = 181;
/// Lowest-value candidates inspected for the maximal-set diagnostic.
const TOP_CANDIDATES: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub samples_per_restart: usize,
    pub refine_steps: usize,
    /// Initial magnitude of the refinement rotations, in `(0, 1]`.
    pub refine_scale: f64,
    pub seed: u64,
    /// Ensemble size `m`; `None` means `d + 1`.
    pub ensemble_size: Option<usize>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            restarts: 32,
            samples_per_restart: 256,
            refine_steps: 200,
            refine_scale: 0.25,
            seed: 0,
            ensemble_size: None,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts < 1 || self.samples_per_restart < 1 || self.refine_steps < 1 {
            return Err(Error::InvalidConfig(
                "restarts, samples_per_restart and refine_steps must all be at least 1".into(),
            ));
        }
        if !(self.refine_scale > 0.0 && self.refine_scale <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "refine_scale = {} must lie in (0, 1]",
                self.refine_scale
            )));
        }
        if self.ensemble_size == Some(0) {
            return Err(Error::InvalidConfig("ensemble_size must be at least 1".into()));
        }
        Ok(())
    }

    /// Same seed, `factor` times the restarts.
    pub fn scaled(&self, factor: usize) -> Self {
        OptimizerConfig {
            restarts: self.restarts * factor,
            ..*self
        }
    }

    fn ensemble_for(&self, d: usize, rank: usize) -> Result<usize> {
        let m = self.ensemble_size.unwrap_or(d + 1);
        if m < rank {
            return Err(Error::RankMismatch {
                expected: rank,
                found: m,
            });
        }
        if m > d * d {
            return Err(Error::InvalidConfig(format!("ensemble size {m} exceeds d^2 = {}", d * d)));
        }
        Ok(m)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuantifierKind {
    #[serde(rename = "c_p")]
    CP,
    #[serde(rename = "convex_roof")]
    ConvexRoof,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SupremumStatus {
    /// The returned candidate majorizes every other candidate in the pool.
    SupremumFound,
    /// Several majorization-maximal candidates; the value is the least `Č`
    /// among them.
    MaximalSetOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub evaluations: usize,
    pub restarts: usize,
    pub structured_seeds: usize,
    /// Set when the state was answered in closed form (`"pure"`, `"incoherent"`).
    pub shortcut: Option<String>,
    /// Majorization-maximal candidates among the lowest-valued ones.
    pub top_maximal_count: Option<usize>,
    /// Spread of `Č` over those maximal candidates.
    pub top_maximal_spread: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantifierReport {
    pub kind: QuantifierKind,
    pub pscm: PscmId,
    pub value: f64,
    pub certificate: CandidateVector,
    /// Only meaningful for `C_P`.
    pub supremum_status: Option<SupremumStatus>,
    pub diagnostics: Diagnostics,
    pub seed: u64,
}

impl QuantifierReport {
    /// Recomputes the value from the certificate alone.
    pub fn reevaluate(&self) -> f64 {
        match self.kind {
            QuantifierKind::CP => self.pscm.eval(candidate_vector(&self.certificate.source).vector.values()),
            QuantifierKind::ConvexRoof => roof_value(self.pscm, &self.certificate.source),
        }
    }
}

/// `sum_i p_i Č(mu(psi_i))` for one ensemble.
pub fn roof_value(id: PscmId, dec: &Decomposition) -> f64 {
    dec.weights()
        .iter()
        .zip(dec.states())
        .map(|(p, s)| p * id.eval(coherence_vector(s).probs()))
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Objective {
    Cp,
    Roof,
}

/// One evaluated ensemble.
#[derive(Clone, Debug)]
struct Entry {
    cp: f64,
    roof: f64,
    candidate: Vec<f64>,
    /// Unnormalized members, one per row.
    members: DMatrix<C64>,
}

impl Entry {
    fn value(&self, obj: Objective) -> f64 {
        match obj {
            Objective::Cp => self.cp,
            Objective::Roof => self.roof,
        }
    }

    /// Lower value first, then the lexicographically smaller candidate.
    fn cmp_by(&self, other: &Entry, obj: Objective) -> Ordering {
        self.value(obj).total_cmp(&other.value(obj)).then_with(|| {
            self.candidate
                .iter()
                .zip(&other.candidate)
                .map(|(a, b)| a.total_cmp(b))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
    }
}

fn score(id: PscmId, members: DMatrix<C64>) -> Entry {
    let (m, d) = members.shape();
    let mut candidate = vec![0.0; d];
    let mut roof = 0.0;
    let mut total = 0.0;
    let mut w = vec![0.0; d];
    for i in 0..m {
        for (k, wk) in w.iter_mut().enumerate() {
            *wk = members[(i, k)].norm_sqr();
        }
        let p: f64 = w.iter().sum();
        if p <= WEIGHT_TOL {
            continue;
        }
        total += p;
        w.sort_by(|a, b| b.total_cmp(a));
        for (c, x) in candidate.iter_mut().zip(&w) {
            *c += x;
        }
        w.iter_mut().for_each(|x| *x /= p);
        roof += p * id.eval(&w);
    }
    candidate.iter_mut().for_each(|c| *c /= total);
    Entry {
        cp: id.eval(&candidate),
        roof: roof / total,
        candidate,
        members,
    }
}

struct Search<'a> {
    id: PscmId,
    cfg: &'a OptimizerConfig,
    eig: EigenSystem,
    basis: DMatrix<C64>,
    ensemble: usize,
}

fn random_anti_hermitian<R: rand::Rng + ?Sized>(m: usize, rng: &mut R) -> DMatrix<C64> {
    let g = DMatrix::from_fn(m, m, |_, _| complex_gaussian(rng));
    (&g - g.adjoint()) * C64::new(0.5, 0.0)
}

impl Search<'_> {
    fn restart(&self, k: usize, obj: Objective) -> Vec<Entry> {
        let cfg = self.cfg;
        let (m, r) = (self.ensemble, self.eig.rank);
        let mut rng = seeds::rng(seeds::derive_seed(cfg.seed, k as u64));
        let mut pool: Vec<Entry> = Vec::with_capacity(cfg.samples_per_restart + cfg.refine_steps);

        let mut best_v = DMatrix::zeros(m, r);
        let mut best_idx = 0;
        for _ in 0..cfg.samples_per_restart {
            let v = haar_isometry(m, r, &mut rng);
            let e = score(self.id, &v * &self.basis);
            if pool.is_empty() || e.cmp_by(&pool[best_idx], obj).is_lt() {
                best_idx = pool.len();
                best_v = v;
            }
            pool.push(e);
        }

        let mut current = pool[best_idx].clone();
        let mut scale = cfg.refine_scale;
        let patience = (cfg.refine_steps / 5).max(1);
        let mut failures = 0;
        for _ in 0..cfg.refine_steps {
            let rotation = (random_anti_hermitian(m, &mut rng) * C64::new(scale, 0.0)).exp();
            let mut v = rotation * &best_v;
            orthonormalize_columns(&mut v);
            let e = score(self.id, &v * &self.basis);
            if e.cmp_by(&current, obj).is_lt() {
                current = e.clone();
                best_v = v;
                failures = 0;
            } else {
                failures += 1;
                if failures >= patience {
                    scale *= 0.5;
                    failures = 0;
                }
            }
            pool.push(e);
        }
        pool
    }

    fn structured(&self, rho: &DensityMatrix) -> Vec<Entry> {
        let d = rho.dim();
        let r = self.eig.rank;
        let mut seeds = vec![self.basis.clone()];
        // Members sqrt(rho)|k>: the computational basis itself for incoherent states.
        let sqrt_basis = DMatrix::from_fn(d, r, |k, j| self.eig.eigenvectors[j][k].conj());
        seeds.push(sqrt_basis * &self.basis);
        if d == 2 && r == 2 {
            seeds.extend(qubit_chord_members(rho));
        }
        seeds.into_iter().map(|m| score(self.id, m)).collect()
    }

    /// Structured seeds followed by every restart, in restart order.
    fn pool(&self, rho: &DensityMatrix, obj: Objective) -> Vec<Entry> {
        let mut pool = self.structured(rho);
        let restarts: Vec<Vec<Entry>> = (0..self.cfg.restarts)
            .into_par_iter()
            .map(|k| self.restart(k, obj))
            .collect();
        pool.extend(restarts.into_iter().flatten());
        pool
    }
}

/// Two-member qubit ensembles along chords of the Bloch ball through the
/// state's Bloch vector `r`, in the plane spanned by `z` and `r`. The chord
/// angle runs over `QUBIT_GRID_POINTS` values from 0 to 180 degrees.
fn qubit_chord_members(rho: &DensityMatrix) -> Vec<DMatrix<C64>> {
    let r01 = rho.get(0, 1);
    let r = [2.0 * r01.re, -2.0 * r01.im, rho.get(0, 0).re - rho.get(1, 1).re];
    let azimuth = if r[0].hypot(r[1]) > 0.0 { r[1].atan2(r[0]) } else { 0.0 };
    let r_sq: f64 = r.iter().map(|x| x * x).sum();

    let bloch_state = |n: [f64; 3]| -> [C64; 2] {
        let polar = n[2].clamp(-1.0, 1.0).acos();
        let phi = n[1].atan2(n[0]);
        [
            C64::new((polar / 2.0).cos(), 0.0),
            C64::from_polar((polar / 2.0).sin(), phi),
        ]
    };

    (0..QUBIT_GRID_POINTS)
        .filter_map(|k| {
            let theta = std::f64::consts::PI * k as f64 / (QUBIT_GRID_POINTS - 1) as f64;
            let u = [theta.sin() * azimuth.cos(), theta.sin() * azimuth.sin(), theta.cos()];
            let b: f64 = r.iter().zip(&u).map(|(a, c)| a * c).sum();
            let disc = b * b - (r_sq - 1.0);
            if !(disc > 0.0) {
                return None;
            }
            let (t_plus, t_minus) = (-b + disc.sqrt(), -b - disc.sqrt());
            let p_plus = -t_minus / (t_plus - t_minus);
            let p_minus = t_plus / (t_plus - t_minus);
            let end = |t: f64| [r[0] + t * u[0], r[1] + t * u[1], r[2] + t * u[2]];
            let (a, c) = (bloch_state(end(t_plus)), bloch_state(end(t_minus)));
            let (sa, sc) = (p_plus.max(0.0).sqrt(), p_minus.max(0.0).sqrt());
            Some(DMatrix::from_row_slice(2, 2, &[a[0] * sa, a[1] * sa, c[0] * sc, c[1] * sc]))
        })
        .collect()
}

enum Prepared<'a> {
    Closed(Box<dyn Fn(QuantifierKind) -> Result<QuantifierReport> + 'a>),
    Search(Search<'a>),
}

fn prepare<'a>(rho: &'a DensityMatrix, id: PscmId, cfg: &'a OptimizerConfig) -> Result<Prepared<'a>> {
    cfg.validate()?;
    let eig = eig_hermitian(rho)?;
    let d = rho.dim();

    let closed = |members: Vec<Vec<C64>>, label: &'static str| -> Result<Prepared<'a>> {
        let dec = Decomposition::from_members(&members)?;
        dec.check_parent(rho)
            .map_err(|e| Error::OptimizerFault(format!("{label} certificate: {e}")))?;
        let certificate = candidate_vector(&dec);
        Ok(Prepared::Closed(Box::new(move |kind| {
            let value = match kind {
                // Exact for pure states: mu(psi) is the diagonal of rho.
                QuantifierKind::CP if label == "pure" => id.eval(&rho.diagonal()),
                QuantifierKind::ConvexRoof if label == "pure" => id.eval(&rho.diagonal()),
                QuantifierKind::CP => id.eval(certificate.vector.values()),
                QuantifierKind::ConvexRoof => roof_value(id, &certificate.source),
            };
            Ok(QuantifierReport {
                kind,
                pscm: id,
                value,
                certificate: certificate.clone(),
                supremum_status: (kind == QuantifierKind::CP).then_some(SupremumStatus::SupremumFound),
                diagnostics: Diagnostics {
                    evaluations: 1,
                    restarts: 0,
                    structured_seeds: 1,
                    shortcut: Some(label.to_string()),
                    top_maximal_count: None,
                    top_maximal_spread: None,
                },
                seed: cfg.seed,
            })
        })))
    };

    if eig.rank == 1 {
        return closed(vec![eig.eigenvectors[0].clone()], "pure");
    }
    if rho.is_incoherent(INCOHERENT_TOL) {
        let members = rho
            .diagonal()
            .iter()
            .enumerate()
            .map(|(k, &p)| {
                let mut v = vec![C64::new(0.0, 0.0); d];
                v[k] = C64::new(p.max(0.0).sqrt(), 0.0);
                v
            })
            .collect();
        return closed(members, "incoherent");
    }

    let ensemble = cfg.ensemble_for(d, eig.rank)?;
    let basis = eig.scaled_basis();
    Ok(Prepared::Search(Search {
        id,
        cfg,
        eig,
        basis,
        ensemble,
    }))
}

fn certificate_of(rho: &DensityMatrix, entry: &Entry) -> Result<CandidateVector> {
    let dec = Decomposition::from_members(&rows(&entry.members))
        .map_err(|e| Error::OptimizerFault(format!("certificate construction: {e}")))?;
    dec.check_parent(rho)
        .map_err(|e| Error::OptimizerFault(format!("certificate: {e}")))?;
    Ok(candidate_vector(&dec))
}

fn strictly_majorizes(p: &[f64], q: &[f64]) -> bool {
    relation_of_sorted(p, q) == Relation::PMajorizesQ
}

fn finalize(
    rho: &DensityMatrix,
    search: &Search<'_>,
    pool: &[Entry],
    kind: QuantifierKind,
) -> Result<QuantifierReport> {
    let obj = match kind {
        QuantifierKind::CP => Objective::Cp,
        QuantifierKind::ConvexRoof => Objective::Roof,
    };
    let mut best = (0..pool.len())
        .min_by(|&a, &b| pool[a].cmp_by(&pool[b], obj).then(a.cmp(&b)))
        .ok_or(Error::EmptyCandidates)?;

    let mut status = None;
    let mut top_maximal_count = None;
    let mut top_maximal_spread = None;
    if kind == QuantifierKind::CP {
        // Move up to a majorization-maximal candidate; by Schur-concavity its
        // value cannot be larger.
        for _ in 0..pool.len() {
            let above = (0..pool.len())
                .find(|&j| strictly_majorizes(&pool[j].candidate, &pool[best].candidate) && pool[j].cp <= pool[best].cp);
            match above {
                Some(j) => best = j,
                None => break,
            }
        }
        let dominates_all = pool
            .iter()
            .all(|e| first_prefix_failure(&pool[best].candidate, &e.candidate).is_none());
        status = Some(if dominates_all {
            SupremumStatus::SupremumFound
        } else {
            SupremumStatus::MaximalSetOnly
        });

        let mut order: Vec<usize> = (0..pool.len()).collect();
        order.sort_by(|&a, &b| pool[a].cmp_by(&pool[b], obj).then(a.cmp(&b)));
        order.truncate(TOP_CANDIDATES);
        let maximal: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&i| !order.iter().any(|&j| strictly_majorizes(&pool[j].candidate, &pool[i].candidate)))
            .collect();
        let (lo, hi) = maximal
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| (lo.min(pool[i].cp), hi.max(pool[i].cp)));
        top_maximal_count = Some(maximal.len());
        top_maximal_spread = Some(hi - lo);
    }

    Ok(QuantifierReport {
        kind,
        pscm: search.id,
        value: pool[best].value(obj),
        certificate: certificate_of(rho, &pool[best])?,
        supremum_status: status,
        diagnostics: Diagnostics {
            evaluations: pool.len(),
            restarts: search.cfg.restarts,
            structured_seeds: 2 + if rho.dim() == 2 && search.eig.rank == 2 { QUBIT_GRID_POINTS } else { 0 },
            shortcut: None,
            top_maximal_count,
            top_maximal_spread,
        },
        seed: search.cfg.seed,
    })
}

/// `C_P(rho)`: least `Č` over decomposition-averaged sorted coherence vectors.
pub fn c_p(rho: &DensityMatrix, id: PscmId, cfg: &OptimizerConfig) -> Result<QuantifierReport> {
    match prepare(rho, id, cfg)? {
        Prepared::Closed(f) => f(QuantifierKind::CP),
        Prepared::Search(s) => {
            let pool = s.pool(rho, Objective::Cp);
            finalize(rho, &s, &pool, QuantifierKind::CP)
        }
    }
}

/// Convex roof: least ensemble average of `Č`.
pub fn convex_roof(rho: &DensityMatrix, id: PscmId, cfg: &OptimizerConfig) -> Result<QuantifierReport> {
    match prepare(rho, id, cfg)? {
        Prepared::Closed(f) => f(QuantifierKind::ConvexRoof),
        Prepared::Search(s) => {
            let pool = s.pool(rho, Objective::Roof);
            finalize(rho, &s, &pool, QuantifierKind::ConvexRoof)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub c_p: QuantifierReport,
    pub c_roof: QuantifierReport,
    /// `c_p - c_roof`.
    pub gap: f64,
}

impl GapReport {
    pub fn respects_order(&self) -> bool {
        self.gap >= -GAP_ORDER_TOL
    }
}

/// Both quantifiers estimated from the union of their search pools.
pub fn convexity_gap(rho: &DensityMatrix, id: PscmId, cfg: &OptimizerConfig) -> Result<GapReport> {
    let (cp, roof) = match prepare(rho, id, cfg)? {
        Prepared::Closed(f) => (f(QuantifierKind::CP)?, f(QuantifierKind::ConvexRoof)?),
        Prepared::Search(s) => {
            let mut pool = s.pool(rho, Objective::Cp);
            let roof_pool = s.pool(rho, Objective::Roof);
            let structured = s.structured(rho).len();
            // Structured seeds are already at the front of the first pool.
            pool.extend(roof_pool.into_iter().skip(structured));
            (
                finalize(rho, &s, &pool, QuantifierKind::CP)?,
                finalize(rho, &s, &pool, QuantifierKind::ConvexRoof)?,
            )
        }
    };
    Ok(GapReport {
        gap: cp.value - roof.value,
        c_p: cp,
        c_roof: roof,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    pub state_seed: Option<u64>,
    pub c_p: f64,
    pub c_roof: f64,
    pub gap: f64,
    pub status: Option<SupremumStatus>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapWitness {
    pub trial: usize,
    pub state: DensityMatrix,
    pub report: GapReport,
    /// The same state re-run with four times the restarts.
    pub verified: GapReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonconvexityReport {
    pub dim: usize,
    pub pscm: PscmId,
    pub trials: usize,
    pub config: OptimizerConfig,
    pub rows: Vec<TrialRow>,
    pub best: GapWitness,
    pub max_gap: f64,
    pub verified_gap: f64,
    /// Verified gap within 10% of the search gap (or both at noise level).
    pub consistent: bool,
    /// Verified gap above `GAP_SIGNIFICANCE`.
    pub significant: bool,
    pub summary: String,
}

fn trial_config(cfg: &OptimizerConfig, trial: usize) -> OptimizerConfig {
    OptimizerConfig {
        seed: seeds::derive_seed(cfg.seed, 2 * trial as u64 + 1),
        ..*cfg
    }
}

/// Searches `trials` random full-rank states of dimension `d` for the largest
/// `C_P - roof` gap.
pub fn nonconvexity_search(d: usize, id: PscmId, trials: usize, cfg: &OptimizerConfig) -> Result<NonconvexityReport> {
    if d < 2 {
        return Err(Error::DimensionTooSmall { dim: d, min: 2 });
    }
    if trials < 1 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    let states = (0..trials)
        .map(|t| {
            let seed = seeds::derive_seed(cfg.seed, 2 * t as u64);
            random_density(d, d, seed).map(|s| (s, Some(seed)))
        })
        .collect::<Result<Vec<_>>>()?;
    nonconvexity_search_states(&states, id, cfg)
}

/// Same search over caller-supplied states (with optional generator seeds
/// echoed into the rows).
pub fn nonconvexity_search_states(
    states: &[(DensityMatrix, Option<u64>)],
    id: PscmId,
    cfg: &OptimizerConfig,
) -> Result<NonconvexityReport> {
    cfg.validate()?;
    let first = states.first().ok_or_else(|| Error::InvalidConfig("trials must be at least 1".into()))?;
    let d = first.0.dim();
    let reports = states
        .par_iter()
        .enumerate()
        .map(|(t, (rho, _))| convexity_gap(rho, id, &trial_config(cfg, t)))
        .collect::<Result<Vec<_>>>()?;

    let rows: Vec<TrialRow> = reports
        .iter()
        .zip(states)
        .enumerate()
        .map(|(t, (r, (_, seed)))| TrialRow {
            trial: t,
            state_seed: *seed,
            c_p: r.c_p.value,
            c_roof: r.c_roof.value,
            gap: r.gap,
            status: r.c_p.supremum_status,
        })
        .collect();

    let best = (0..reports.len())
        .max_by(|&a, &b| reports[a].gap.total_cmp(&reports[b].gap).then(b.cmp(&a)))
        .expect("at least one trial");
    let verified = convexity_gap(&states[best].0, id, &trial_config(cfg, best).scaled(4))?;

    let max_gap = reports[best].gap;
    let verified_gap = verified.gap;
    let consistent = (verified_gap - max_gap).abs() <= 0.1 * max_gap.abs()
        || (max_gap.abs() <= GAP_NOISE_FLOOR && verified_gap.abs() <= GAP_NOISE_FLOOR);
    let significant = verified_gap > GAP_SIGNIFICANCE;
    let summary = if significant {
        format!(
            "strict convexity gap {verified_gap:.6e} (> {GAP_SIGNIFICANCE:e}) in trial {best} of {}",
            states.len()
        )
    } else {
        format!(
            "no gap above {GAP_SIGNIFICANCE:e} in {} trials; largest verified gap {verified_gap:.6e} (trial {best})",
            states.len()
        )
    };

    Ok(NonconvexityReport {
        dim: d,
        pscm: id,
        trials: states.len(),
        config: *cfg,
        rows,
        best: GapWitness {
            trial: best,
            state: states[best].0.clone(),
            report: reports[best].clone(),
            verified,
        },
        max_gap,
        verified_gap,
        consistent,
        significant,
        summary,
    })
}
