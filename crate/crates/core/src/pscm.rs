//! Pure-state coherence measures.
//!
//! A pure-state coherence measure is a function of the coherence vector only.
//! Four are provided: the diagonal-difference measure `DD`, the
//! diagonal-multiplication measure `DM`, the pure-state l1-norm `L1`, and the
//! Shannon entropy baseline `ENTROPY` (bits).
//!
//! [`verify_conditions`] checks the four defining conditions of such a measure
//! numerically: vanishing on basis vertices, permutation symmetry, concavity,
//! and a unique maximum at the uniform vector.

use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds;
use crate::states::{CoherenceVector, DensityMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PscmTag {
    Dd,
    Dm,
    L1,
    Entropy,
}

impl PscmTag {
    pub const ALL: [PscmTag; 4] = [PscmTag::Dd, PscmTag::Dm, PscmTag::L1, PscmTag::Entropy];

    pub fn as_str(self) -> &'static str {
        match self {
            PscmTag::Dd => "dd",
            PscmTag::Dm => "dm",
            PscmTag::L1 => "l1",
            PscmTag::Entropy => "entropy",
        }
    }
}

impl fmt::Display for PscmTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PscmTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dd" => Ok(PscmTag::Dd),
            "dm" => Ok(PscmTag::Dm),
            "l1" => Ok(PscmTag::L1),
            "entropy" => Ok(PscmTag::Entropy),
            _ => Err(Error::UnknownTag(s.to_string())),
        }
    }
}

/// A measure together with its normalization choice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PscmId {
    pub tag: PscmTag,
    pub normalized: bool,
}

impl PscmId {
    pub fn raw(tag: PscmTag) -> Self {
        PscmId {
            tag,
            normalized: false,
        }
    }

    pub fn normalized(tag: PscmTag) -> Self {
        PscmId {
            tag,
            normalized: true,
        }
    }

    /// The raw measure's value on a maximally coherent state of dimension `d`.
    pub fn mcs_value(&self, d: usize) -> f64 {
        let df = d as f64;
        match self.tag {
            PscmTag::Dd | PscmTag::L1 => df - 1.0,
            PscmTag::Dm => (df - 1.0) / (2.0 * df),
            PscmTag::Entropy => df.log2(),
        }
    }

    /// Evaluates on a raw probability slice; the caller guarantees validity.
    pub fn eval(&self, probs: &[f64]) -> f64 {
        let raw = match self.tag {
            PscmTag::Dd => dd(probs),
            PscmTag::Dm => dm(probs),
            PscmTag::L1 => l1(probs),
            PscmTag::Entropy => entropy(probs),
        };
        if self.normalized {
            raw / self.mcs_value(probs.len())
        } else {
            raw
        }
    }

    pub fn label(&self) -> String {
        if self.normalized {
            format!("{}-normalized", self.tag)
        } else {
            self.tag.to_string()
        }
    }
}

pub(crate) fn dd(mu: &[f64]) -> f64 {
    let d = mu.len();
    let mut spread = 0.0;
    for i in 0..d {
        for j in i + 1..d {
            spread += (mu[i] - mu[j]).abs();
        }
    }
    (d as f64 - 1.0) - spread
}

pub(crate) fn dm(mu: &[f64]) -> f64 {
    let d = mu.len();
    let mut s = 0.0;
    for i in 0..d {
        for j in i + 1..d {
            s += mu[i] * mu[j];
        }
    }
    s
}

pub(crate) fn l1(mu: &[f64]) -> f64 {
    let d = mu.len();
    let mut s = 0.0;
    for i in 0..d {
        for j in i + 1..d {
            s += (mu[i] * mu[j]).sqrt();
        }
    }
    2.0 * s
}

pub(crate) fn entropy(mu: &[f64]) -> f64 {
    // `0.0 -` rather than negation keeps the vertex value at +0.
    0.0 - mu
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.log2())
        .sum::<f64>()
}

/// `(d - 1) - sum_{i<j} |mu_i - mu_j|`.
pub fn c_dd(mu: &CoherenceVector) -> f64 {
    dd(mu.probs())
}

/// `sum_{i<j} mu_i mu_j`.
pub fn c_dm(mu: &CoherenceVector) -> f64 {
    dm(mu.probs())
}

/// `2 sum_{i<j} sqrt(mu_i mu_j)`, the l1-norm of coherence of a pure state.
pub fn c_l1_pure(mu: &CoherenceVector) -> f64 {
    l1(mu.probs())
}

/// Sum of moduli of all off-diagonal entries.
pub fn c_l1_mixed(rho: &DensityMatrix) -> f64 {
    let d = rho.dim();
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                s += rho.get(i, j).norm();
            }
        }
    }
    s
}

/// Shannon entropy of the populations in bits.
pub fn c_entropy_pure(mu: &CoherenceVector) -> f64 {
    entropy(mu.probs())
}

pub fn evaluate(id: PscmId, mu: &CoherenceVector) -> f64 {
    id.eval(mu.probs())
}

/// `sum_i mu_i^2`: convex, so it must fail the concavity condition. Used as
/// the adversarial fixture for the verifier.
pub fn sum_of_squares(mu: &[f64]) -> f64 {
    mu.iter().map(|x| x * x).sum()
}

// ---------------------------------------------------------------------------
// Condition verifier

/// Reproducible evidence for the worst case seen while checking a condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub vectors: Vec<Vec<f64>>,
    pub lambda: Option<f64>,
    pub values: Vec<f64>,
    pub violation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionOutcome {
    pub passed: bool,
    pub tolerance: f64,
    pub witness: Witness,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub measure: String,
    pub dim: usize,
    pub condition1: ConditionOutcome,
    pub condition2: ConditionOutcome,
    pub condition3: ConditionOutcome,
    pub condition4: ConditionOutcome,
    pub samples_used: usize,
    pub seed: u64,
}

impl ConditionReport {
    pub fn all_passed(&self) -> bool {
        self.outcomes().iter().all(|c| c.passed)
    }

    pub fn outcomes(&self) -> [&ConditionOutcome; 4] {
        [
            &self.condition1,
            &self.condition2,
            &self.condition3,
            &self.condition4,
        ]
    }
}

pub const VERTEX_TOL: f64 = 1e-12;
pub const SYMMETRY_TOL: f64 = 1e-12;
pub const CONCAVITY_TOL: f64 = 1e-9;
pub const ARGMAX_TOL: f64 = 1e-6;
pub const MAX_VALUE_TOL: f64 = 1e-9;

/// Verifies the four conditions for one of the built-in measures.
pub fn verify_conditions(id: PscmId, d: usize, samples: usize, seed: u64) -> Result<ConditionReport> {
    verify_measure(&id.label(), |mu| id.eval(mu), d, samples, seed)
}

/// Verifies the four conditions for an arbitrary function of the coherence
/// vector. The maximal value is taken to be the function's value at the
/// uniform vector.
pub fn verify_measure<F>(label: &str, f: F, d: usize, samples: usize, seed: u64) -> Result<ConditionReport>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if d < 2 {
        return Err(Error::DimensionTooSmall { dim: d, min: 2 });
    }
    if samples < 1 {
        return Err(Error::InvalidConfig("samples must be at least 1".into()));
    }
    let mut rng = seeds::rng(seed);
    let singles: Vec<Vec<f64>> = (0..samples).map(|i| sample_simplex(d, i, &mut rng)).collect();
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..samples)
        .map(|i| (sample_simplex(d, i, &mut rng), sample_simplex(d, i + 1, &mut rng)))
        .collect();

    Ok(ConditionReport {
        measure: label.to_string(),
        dim: d,
        condition1: check_vertices(&f, d),
        condition2: check_symmetry(&f, &singles, seed),
        condition3: check_concavity(&f, &pairs),
        condition4: check_maximum(&f, d, samples, seeds::derive_seed(seed, 4)),
        samples_used: samples,
        seed,
    })
}

/// Uniform draw from the simplex; every fourth draw is pushed onto a random
/// face so boundary points are exercised too.
fn sample_simplex<R: Rng>(d: usize, index: usize, rng: &mut R) -> Vec<f64> {
    let mut x: Vec<f64> = (0..d).map(|_| Exp1.sample(rng)).collect();
    if index % 4 == 3 {
        let keep = rng.random_range(0..d);
        for (i, xi) in x.iter_mut().enumerate() {
            if i != keep && rng.random_bool(0.5) {
                *xi = 0.0;
            }
        }
    }
    let s: f64 = x.iter().sum();
    x.iter_mut().for_each(|v| *v /= s);
    x
}

/// Higher violation wins; ties go to the smaller lambda, then the
/// lexicographically smaller vectors. Independent of evaluation order.
fn worse(a: &Witness, b: &Witness) -> bool {
    match a.violation.total_cmp(&b.violation) {
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Equal => {
            let la = a.lambda.unwrap_or(0.0);
            let lb = b.lambda.unwrap_or(0.0);
            match la.total_cmp(&lb) {
                std::cmp::Ordering::Less => true,
                std::cmp::Ordering::Greater => false,
                std::cmp::Ordering::Equal => lex_less(&a.vectors, &b.vectors),
            }
        }
    }
}

fn lex_less(a: &[Vec<f64>], b: &[Vec<f64>]) -> bool {
    for (x, y) in a.iter().flatten().zip(b.iter().flatten()) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            std::cmp::Ordering::Equal => {}
        }
    }
    false
}

fn pick_worst(a: Witness, b: Witness) -> Witness {
    if worse(&b, &a) {
        b
    } else {
        a
    }
}

fn check_vertices<F: Fn(&[f64]) -> f64>(f: &F, d: usize) -> ConditionOutcome {
    let worst = (0..d)
        .map(|k| {
            let v = CoherenceVector::vertex(d, k).probs().to_vec();
            let value = f(&v);
            Witness {
                vectors: vec![v],
                lambda: None,
                values: vec![value],
                violation: value.abs(),
            }
        })
        .reduce(pick_worst)
        .expect("d >= 2");
    ConditionOutcome {
        passed: worst.violation <= VERTEX_TOL,
        tolerance: VERTEX_TOL,
        detail: format!("max |value| over {d} vertices = {:e}", worst.violation),
        witness: worst,
    }
}

fn check_symmetry<F: Fn(&[f64]) -> f64 + Sync>(f: &F, singles: &[Vec<f64>], seed: u64) -> ConditionOutcome {
    let d = singles[0].len();
    let exhaustive: Option<Vec<Vec<usize>>> = (d <= 6).then(|| (0..d).permutations(d).collect());
    let worst = singles
        .par_iter()
        .enumerate()
        .map(|(idx, mu)| {
            let perms: Vec<Vec<usize>> = match &exhaustive {
                Some(all) => all.clone(),
                None => {
                    let mut rng = seeds::rng(seeds::derive_seed(seed, idx as u64));
                    (0..100)
                        .map(|_| {
                            let mut p: Vec<usize> = (0..d).collect();
                            p.shuffle(&mut rng);
                            p
                        })
                        .collect()
                }
            };
            let mut lo = (f64::INFINITY, Vec::new());
            let mut hi = (f64::NEG_INFINITY, Vec::new());
            for p in &perms {
                let v: Vec<f64> = p.iter().map(|&i| mu[i]).collect();
                let val = f(&v);
                if val < lo.0 {
                    lo = (val, v.clone());
                }
                if val > hi.0 {
                    hi = (val, v);
                }
            }
            Witness {
                vectors: vec![lo.1, hi.1],
                lambda: None,
                values: vec![lo.0, hi.0],
                violation: hi.0 - lo.0,
            }
        })
        .reduce_with(pick_worst)
        .expect("samples >= 1");
    let how = if exhaustive.is_some() { "all" } else { "100 random" };
    ConditionOutcome {
        passed: worst.violation <= SYMMETRY_TOL,
        tolerance: SYMMETRY_TOL,
        detail: format!(
            "max spread over {how} permutations of {} samples = {:e}",
            singles.len(),
            worst.violation
        ),
        witness: worst,
    }
}

fn check_concavity<F: Fn(&[f64]) -> f64 + Sync>(f: &F, pairs: &[(Vec<f64>, Vec<f64>)]) -> ConditionOutcome {
    let worst = pairs
        .par_iter()
        .map(|(a, b)| {
            let fa = f(a);
            let fb = f(b);
            (1..=9)
                .map(|k| {
                    let lambda = k as f64 / 10.0;
                    let mix: Vec<f64> = a
                        .iter()
                        .zip(b)
                        .map(|(x, y)| lambda * x + (1.0 - lambda) * y)
                        .collect();
                    let fm = f(&mix);
                    let chord = lambda * fa + (1.0 - lambda) * fb;
                    Witness {
                        vectors: vec![a.clone(), b.clone()],
                        lambda: Some(lambda),
                        values: vec![fm, chord],
                        violation: chord - fm,
                    }
                })
                .reduce(pick_worst)
                .expect("nine lambdas")
        })
        .reduce_with(pick_worst)
        .expect("samples >= 1");
    ConditionOutcome {
        passed: worst.violation <= CONCAVITY_TOL,
        tolerance: CONCAVITY_TOL,
        detail: format!(
            "max of lambda f(mu1) + (1-lambda) f(mu2) - f(mix) over {} pairs = {:e}",
            pairs.len(),
            worst.violation
        ),
        witness: worst,
    }
}

/// Largest grid resolution whose simplex grid stays below ~60k points.
fn grid_steps_for(d: usize) -> usize {
    let count = |steps: usize| -> f64 {
        // C(steps + d - 1, d - 1)
        (1..d).fold(1.0, |acc, k| acc * (steps + k) as f64 / k as f64)
    };
    let mut steps = 4;
    while steps < 2000 && count(steps + 1) <= 60_000.0 {
        steps += 1;
    }
    steps
}

/// Calls `f` on every point of the simplex grid with spacing `1/steps`.
pub(crate) fn for_each_grid_point(n: usize, steps: usize, mut f: impl FnMut(&[f64])) {
    fn rec(pos: usize, remaining: usize, steps: usize, x: &mut Vec<f64>, f: &mut dyn FnMut(&[f64])) {
        let n = x.len();
        if pos == n - 1 {
            x[pos] = remaining as f64 / steps as f64;
            f(x);
            return;
        }
        for k in 0..=remaining {
            x[pos] = k as f64 / steps as f64;
            rec(pos + 1, remaining - k, steps, x, f);
        }
    }
    let mut x = vec![0.0; n];
    rec(0, steps, steps, &mut x, &mut f);
}

/// Coordinate-pair ascent on the simplex: move mass between entries while it
/// helps, halving the step when no move does.
fn pair_transfer_ascent<F: Fn(&[f64]) -> f64>(f: &F, mut x: Vec<f64>, mut fx: f64, mut step: f64) -> (Vec<f64>, f64) {
    let d = x.len();
    let mut iters = 0;
    while step > 1e-13 && iters < 200_000 {
        iters += 1;
        let mut best: Option<(Vec<f64>, f64)> = None;
        for i in 0..d {
            let amount = step.min(x[i]);
            if amount <= 0.0 {
                continue;
            }
            for j in 0..d {
                if i == j {
                    continue;
                }
                let mut y = x.clone();
                y[i] -= amount;
                y[j] += amount;
                let fy = f(&y);
                if fy > best.as_ref().map_or(fx, |b| b.1) {
                    best = Some((y, fy));
                }
            }
        }
        match best {
            Some((y, fy)) => {
                x = y;
                fx = fy;
            }
            None => step *= 0.5,
        }
    }
    (x, fx)
}

fn check_maximum<F: Fn(&[f64]) -> f64>(f: &F, d: usize, samples: usize, seed: u64) -> ConditionOutcome {
    let uniform = CoherenceVector::uniform(d).probs().to_vec();
    let mcs_value = f(&uniform);

    let steps = grid_steps_for(d);
    let mut best = (Vec::new(), f64::NEG_INFINITY);
    for_each_grid_point(d, steps, |x| {
        let v = f(x);
        if v > best.1 {
            best = (x.to_vec(), v);
        }
    });

    let mut rng = seeds::rng(seed);
    for i in 0..samples {
        let x = sample_simplex(d, i, &mut rng);
        let v = f(&x);
        if v > best.1 {
            best = (x, v);
        }
    }

    // Random refinement inside the best grid cell.
    let h = 1.0 / steps as f64;
    let centre = best.0.clone();
    for _ in 0..10 * samples {
        let mut x: Vec<f64> = centre
            .iter()
            .map(|&c| (c + rng.random_range(-h..=h)).max(0.0))
            .collect();
        let s: f64 = x.iter().sum();
        x.iter_mut().for_each(|v| *v /= s);
        let v = f(&x);
        if v > best.1 {
            best = (x, v);
        }
    }

    let (argmax, max_value) = pair_transfer_ascent(f, best.0, best.1, h);
    let distance = argmax
        .iter()
        .zip(&uniform)
        .map(|(a, u)| (a - u).abs())
        .fold(0.0, f64::max);
    let excess = max_value - mcs_value;
    let passed = distance <= ARGMAX_TOL && excess <= MAX_VALUE_TOL;
    ConditionOutcome {
        passed,
        tolerance: ARGMAX_TOL,
        detail: format!(
            "arg-max at L-inf distance {distance:e} from uniform (grid 1/{steps}); max sampled value exceeds MCS value by {excess:e}"
        ),
        witness: Witness {
            vectors: vec![argmax, uniform],
            lambda: None,
            values: vec![max_value, mcs_value],
            violation: distance,
        },
    }
}

// ---------------------------------------------------------------------------
// Lemma: sum of pairwise products on the simplex is maximal at the centre

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Report {
    pub n: usize,
    pub grid_steps: usize,
    pub max_value: f64,
    pub argmax: Vec<f64>,
    /// L-infinity distance from the arg-max to the uniform point.
    pub uniform_gap: f64,
    /// `C(n,2) / n^2`, the value at the uniform point.
    pub bound: f64,
}

impl Lemma1Report {
    /// Arg-max within one grid cell of uniform and value not above the bound.
    pub fn holds(&self) -> bool {
        self.uniform_gap <= 1.0 / self.grid_steps as f64 + 1e-12 && self.max_value <= self.bound + 1e-9
    }
}

/// Exhaustive grid search for the maximum of `sum_{i<j} x_i x_j` over the
/// unit simplex in `n` variables.
pub fn lemma1_max_check(n: usize, grid_steps: usize) -> Result<Lemma1Report> {
    if !(2..=5).contains(&n) {
        return Err(Error::InvalidConfig(format!("n = {n} must lie in 2..=5")));
    }
    if grid_steps < 10 {
        return Err(Error::InvalidConfig(format!("grid_steps = {grid_steps} must be at least 10")));
    }
    let mut best = (Vec::new(), f64::NEG_INFINITY);
    for_each_grid_point(n, grid_steps, |x| {
        let v = dm(x);
        if v > best.1 {
            best = (x.to_vec(), v);
        }
    });
    let u = 1.0 / n as f64;
    let uniform_gap = best.0.iter().map(|x| (x - u).abs()).fold(0.0, f64::max);
    Ok(Lemma1Report {
        n,
        grid_steps,
        max_value: best.1,
        argmax: best.0,
        uniform_gap,
        bound: (n * (n - 1)) as f64 / 2.0 / (n * n) as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::majorization::{compare, Relation};
    use crate::states::{coherence_vector, random_pure, ComplexMatrix, validate_density, PureState};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn cv(p: &[f64]) -> CoherenceVector {
        CoherenceVector::new(p.to_vec()).unwrap()
    }

    // Direct pairwise-sum oracles, written independently of the library code.
    fn oracle_abs_diff(p: &[f64]) -> f64 {
        let mut s = 0.0;
        for (i, a) in p.iter().enumerate() {
            for b in &p[i + 1..] {
                s += (a - b).abs();
            }
        }
        s
    }

    #[test]
    fn dd_examples() {
        assert_eq!(c_dd(&cv(&[1.0, 0.0, 0.0])), 0.0);
        assert_abs_diff_eq!(c_dd(&CoherenceVector::uniform(3)), 2.0, epsilon = 1e-12);
        // oracle: |0.2-0.3| + |0.2-0.5| + |0.3-0.5| = 0.6
        assert_abs_diff_eq!(oracle_abs_diff(&[0.2, 0.3, 0.5]), 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(c_dd(&cv(&[0.2, 0.3, 0.5])), 1.4, epsilon = 1e-12);
    }

    #[test]
    fn dm_examples() {
        assert_abs_diff_eq!(c_dm(&cv(&[0.3, 0.3, 0.4])), 0.33, epsilon = 1e-12);
        assert_abs_diff_eq!(c_dm(&cv(&[0.35, 0.3, 0.35])), 0.3325, epsilon = 1e-12);
        assert_eq!(c_dm(&cv(&[1.0, 0.0])), 0.0);
        // oracle: 0.06 + 0.10 + 0.15
        assert_abs_diff_eq!(c_dm(&cv(&[0.2, 0.3, 0.5])), 0.31, epsilon = 1e-12);
    }

    #[test]
    fn l1_examples() {
        assert_abs_diff_eq!(c_l1_pure(&cv(&[0.5, 0.5])), 1.0, epsilon = 1e-12);
        for d in 2..8 {
            assert_abs_diff_eq!(c_l1_pure(&CoherenceVector::uniform(d)), d as f64 - 1.0, epsilon = 1e-12);
        }
        let oracle = 2.0 * (0.06f64.sqrt() + 0.10f64.sqrt() + 0.15f64.sqrt());
        // The published figure 1.896949 is off by about 1e-6 in the last digit.
        assert_abs_diff_eq!(oracle, 1.896949, epsilon = 2e-6);
        assert_abs_diff_eq!(c_l1_pure(&cv(&[0.2, 0.3, 0.5])), oracle, epsilon = 1e-12);
    }

    #[test]
    fn l1_mixed_examples() {
        let m = |rows: &[&[f64]]| validate_density(ComplexMatrix::from_real(rows).unwrap()).unwrap();
        assert_eq!(c_l1_mixed(&m(&[&[0.5, 0.0], &[0.0, 0.5]])), 0.0);
        let h = 0.5f64.sqrt();
        let plus = PureState::from_real(&[h, h]).unwrap().projector();
        assert_abs_diff_eq!(c_l1_mixed(&plus), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c_l1_mixed(&m(&[&[0.6, 0.2], &[0.2, 0.4]])), 0.4, epsilon = 1e-12);
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(c_entropy_pure(&cv(&[1.0, 0.0])), 0.0);
        assert_abs_diff_eq!(c_entropy_pure(&cv(&[0.5, 0.5])), 1.0, epsilon = 1e-12);
        let oracle = -(0.2f64 * 0.2f64.ln() + 0.3 * 0.3f64.ln() + 0.5 * 0.5f64.ln()) / 2f64.ln();
        assert_abs_diff_eq!(oracle, 1.485475, epsilon = 1e-6);
        assert_abs_diff_eq!(c_entropy_pure(&cv(&[0.2, 0.3, 0.5])), oracle, epsilon = 1e-12);
    }

    #[test]
    fn evaluate_dispatch() {
        assert_abs_diff_eq!(
            evaluate(PscmId::normalized(PscmTag::Dd), &CoherenceVector::uniform(5)),
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            evaluate(PscmId::raw(PscmTag::Dm), &CoherenceVector::uniform(3)),
            1.0 / 3.0,
            epsilon = 1e-12
        );
        assert_eq!(evaluate(PscmId::raw(PscmTag::L1), &CoherenceVector::vertex(4, 0)), 0.0);
        for tag in PscmTag::ALL {
            for d in 2..8 {
                assert_abs_diff_eq!(
                    evaluate(PscmId::normalized(tag), &CoherenceVector::uniform(d)),
                    1.0,
                    epsilon = 1e-12
                );
            }
        }
        assert!(matches!("xx".parse::<PscmTag>(), Err(Error::UnknownTag(_))));
        assert_eq!("DM".parse::<PscmTag>().unwrap(), PscmTag::Dm);
    }

    #[test]
    fn verifier_accepts_builtin_measures() {
        for tag in PscmTag::ALL {
            let report = verify_conditions(PscmId::raw(tag), 3, 2000, 1).unwrap();
            assert!(report.all_passed(), "{tag}: {report:#?}");
        }
    }

    #[test]
    fn verifier_catches_convex_fixture() {
        let report = verify_measure("sum-of-squares", sum_of_squares, 3, 500, 3).unwrap();
        assert!(!report.condition3.passed);
        let w = &report.condition3.witness;
        let lambda = w.lambda.unwrap();
        let (a, b) = (&w.vectors[0], &w.vectors[1]);
        let mix: Vec<f64> = a.iter().zip(b).map(|(x, y)| lambda * x + (1.0 - lambda) * y).collect();
        // The witness reproduces its own violation.
        let violation = lambda * sum_of_squares(a) + (1.0 - lambda) * sum_of_squares(b) - sum_of_squares(&mix);
        assert_abs_diff_eq!(violation, w.violation, epsilon = 1e-15);
        assert!(violation > CONCAVITY_TOL);
        // Same seed, same witness.
        assert_eq!(verify_measure("sum-of-squares", sum_of_squares, 3, 500, 3).unwrap(), report);
    }

    #[test]
    fn verifier_uses_random_permutations_above_six() {
        let report = verify_conditions(PscmId::raw(PscmTag::Dm), 7, 50, 2).unwrap();
        assert!(report.all_passed(), "{report:#?}");
        assert!(report.condition2.detail.contains("100 random"));
    }

    #[test]
    fn verifier_rejects_bad_arguments() {
        assert!(verify_conditions(PscmId::raw(PscmTag::Dd), 1, 10, 0).is_err());
        assert!(verify_conditions(PscmId::raw(PscmTag::Dd), 3, 0, 0).is_err());
    }

    #[test]
    fn lemma1_examples() {
        let r = lemma1_max_check(3, 30).unwrap();
        assert_abs_diff_eq!(r.max_value, 1.0 / 3.0, epsilon = 1e-12);
        assert!(r.uniform_gap < 1e-12);
        assert!(r.holds());

        let r = lemma1_max_check(2, 10).unwrap();
        assert_abs_diff_eq!(r.max_value, 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(r.argmax[0], 0.5, epsilon = 1e-12);

        let r = lemma1_max_check(4, 40).unwrap();
        assert_abs_diff_eq!(r.max_value, 0.375, epsilon = 1e-12);
        assert_abs_diff_eq!(r.bound, 0.375, epsilon = 1e-15);

        assert!(lemma1_max_check(6, 10).is_err());
        assert!(lemma1_max_check(3, 9).is_err());
    }

    #[test]
    fn grid_point_count() {
        let mut count = 0;
        for_each_grid_point(3, 10, |x| {
            assert_abs_diff_eq!(x.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            count += 1;
        });
        assert_eq!(count, 66);
    }

    fn arb_simplex(d: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
        d.prop_flat_map(|d| proptest::collection::vec(0.0f64..1.0, d)).prop_filter_map("non-zero", |v| {
            let s: f64 = v.iter().sum();
            (s > 1e-6).then(|| v.iter().map(|x| x / s).collect())
        })
    }

    proptest! {
        #[test]
        fn ranges_hold(mu in arb_simplex(2..9)) {
            let d = mu.len() as f64;
            let cv = cv(&mu);
            let dd = c_dd(&cv);
            let dmv = c_dm(&cv);
            prop_assert!(dd >= -1e-12 && dd <= d - 1.0 + 1e-12);
            prop_assert!(dmv >= -1e-12 && dmv <= (d - 1.0) / (2.0 * d) + 1e-12);
        }

        #[test]
        fn dm_matches_square_sum_identity(mu in arb_simplex(2..9)) {
            let sq: f64 = mu.iter().map(|x| x * x).sum();
            prop_assert!((c_dm(&cv(&mu)) - (1.0 - sq) / 2.0).abs() <= 1e-12);
        }

        #[test]
        fn permutation_invariance_exhaustive(mu in arb_simplex(2..6)) {
            let d = mu.len();
            let cv = cv(&mu);
            for tag in PscmTag::ALL {
                let base = evaluate(PscmId::raw(tag), &cv);
                for p in (0..d).permutations(d) {
                    let v = evaluate(PscmId::raw(tag), &cv.permuted(&p));
                    prop_assert!((v - base).abs() <= 1e-12);
                }
            }
        }

        #[test]
        fn dd_sorted_form_and_strict_positivity(mu in arb_simplex(2..9)) {
            let d = mu.len();
            let mut s = mu.clone();
            s.sort_by(|a, b| b.total_cmp(a));
            let sorted_form: f64 = s.iter().enumerate().map(|(i, x)| (d as f64 - 1.0 - 2.0 * i as f64) * x).sum();
            prop_assert!((sorted_form - oracle_abs_diff(&mu)).abs() <= 1e-12);
            if mu.iter().filter(|&&x| x > 1e-6).count() >= 2 {
                prop_assert!(c_dd(&cv(&mu)) > 0.0);
            }
        }

        #[test]
        fn schur_concave_under_majorization(p in arb_simplex(2..6), w in proptest::collection::vec(0.0f64..1.0, 3), seed in any::<u64>()) {
            // q = convex mix of permutations of p, hence majorized by p.
            let d = p.len();
            let mut rng = seeds::rng(seed);
            let wsum: f64 = w.iter().sum::<f64>() + 1e-9;
            let mut q = vec![0.0; d];
            for wk in &w {
                let mut perm: Vec<usize> = (0..d).collect();
                perm.shuffle(&mut rng);
                for (i, &pi) in perm.iter().enumerate() {
                    q[i] += wk / wsum * p[pi];
                }
            }
            let s: f64 = q.iter().sum();
            q.iter_mut().for_each(|x| *x /= s);
            let (pv, qv) = (cv(&p), cv(&q));
            let rel = compare(&pv, &qv).unwrap().relation;
            prop_assume!(matches!(rel, Relation::PMajorizesQ | Relation::Equal));
            for tag in PscmTag::ALL {
                prop_assert!(evaluate(PscmId::raw(tag), &pv) <= evaluate(PscmId::raw(tag), &qv) + 1e-9);
            }
        }

        #[test]
        fn l1_pure_matches_mixed_form(d in 2usize..7, seed in any::<u64>()) {
            let psi = random_pure(d, seed).unwrap();
            let a = c_l1_pure(&coherence_vector(&psi));
            let b = c_l1_mixed(&psi.projector());
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }
}
