//! Reference implementations written from the defining formulas, sharing no
//! code with the library.
#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

pub fn dd_pairwise(mu: &[f64]) -> f64 {
    let d = mu.len();
    let mut s = 0.0;
    for i in 0..d {
        for j in i + 1..d {
            s += (mu[i] - mu[j]).abs();
        }
    }
    (d as f64 - 1.0) - s
}

pub fn dm_pairwise(mu: &[f64]) -> f64 {
    let d = mu.len();
    let mut s = 0.0;
    for i in 0..d {
        for j in i + 1..d {
            s += mu[i] * mu[j];
        }
    }
    s
}

pub fn l1_pairwise(mu: &[f64]) -> f64 {
    let d = mu.len();
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                s += (mu[i] * mu[j]).sqrt();
            }
        }
    }
    s
}

pub fn entropy_bits(mu: &[f64]) -> f64 {
    mu.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
}

/// Reference value by tag name.
pub fn oracle(tag: &str, mu: &[f64]) -> f64 {
    match tag {
        "dd" => dd_pairwise(mu),
        "dm" => dm_pairwise(mu),
        "l1" => l1_pairwise(mu),
        "entropy" => entropy_bits(mu),
        _ => panic!("unknown tag {tag}"),
    }
}

/// `p` majorizes `q`, by sorting and comparing running sums.
pub fn majorizes(p: &[f64], q: &[f64]) -> bool {
    let mut a = p.to_vec();
    let mut b = q.to_vec();
    a.sort_by(|x, y| y.partial_cmp(x).unwrap());
    b.sort_by(|x, y| y.partial_cmp(x).unwrap());
    let (mut sa, mut sb) = (0.0, 0.0);
    a.iter().zip(&b).all(|(x, y)| {
        sa += x;
        sb += y;
        sa >= sb - 1e-12
    })
}

/// Brute force over two-member qubit decompositions.
///
/// The chords of the Bloch ball through the state's Bloch vector `r` are
/// swept in the plane containing `r` and the z axis at `steps` equally spaced
/// angles in `[0, pi]`. A chord with unit direction `u` meets the sphere at
/// `r + t u` with `t^2 + 2 (r.u) t + |r|^2 - 1 = 0`; the endpoint weights are
/// the barycentric coordinates of `r`. A pure state with Bloch vector `n` has
/// populations `((1 + n_z)/2, (1 - n_z)/2)`.
///
/// Returns `(min Č of the weighted sorted average, min weighted average of Č)`.
pub fn qubit_theta_grid(rho: [[(f64, f64); 2]; 2], f: impl Fn(&[f64]) -> f64, steps: usize) -> (f64, f64) {
    let (re01, im01) = rho[0][1];
    let r = [2.0 * re01, -2.0 * im01, rho[0][0].0 - rho[1][1].0];
    let phi = if re01 == 0.0 && im01 == 0.0 { 0.0 } else { r[1].atan2(r[0]) };
    let r2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
    let mut best_cp = f64::INFINITY;
    let mut best_roof = f64::INFINITY;
    for k in 0..steps {
        let theta = std::f64::consts::PI * k as f64 / (steps - 1) as f64;
        let u = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
        let b = r[0] * u[0] + r[1] * u[1] + r[2] * u[2];
        let disc = b * b - r2 + 1.0;
        let tp = -b + disc.sqrt();
        let tm = -b - disc.sqrt();
        let wp = -tm / (tp - tm);
        let wm = tp / (tp - tm);
        let zp = r[2] + tp * u[2];
        let zm = r[2] + tm * u[2];
        let mp = [(1.0 + zp) / 2.0, (1.0 - zp) / 2.0];
        let mm = [(1.0 + zm) / 2.0, (1.0 - zm) / 2.0];
        let hi = wp * mp[0].max(mp[1]) + wm * mm[0].max(mm[1]);
        best_cp = best_cp.min(f(&[hi, 1.0 - hi]));
        best_roof = best_roof.min(wp * f(&mp) + wm * f(&mm));
    }
    (best_cp, best_roof)
}

pub fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_coherence-lab")
}

pub fn run(args: &[&str]) -> Output {
    Command::new(binary())
        .args(args)
        .env_remove("COHERENCE_LAB_SEED")
        .output()
        .expect("binary runs")
}

pub fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}); stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

pub fn write_json(path: &Path, value: &serde_json::Value) {
    std::fs::write(path, serde_json::to_string(value).unwrap()).unwrap();
}

pub fn density_file(rows: &[&[f64]]) -> serde_json::Value {
    let matrix: Vec<Vec<[f64; 2]>> = rows.iter().map(|r| r.iter().map(|&x| [x, 0.0]).collect()).collect();
    serde_json::json!({"dim": rows.len(), "kind": "density", "matrix": matrix})
}

pub fn pure_file(amps: &[f64]) -> serde_json::Value {
    let a: Vec<[f64; 2]> = amps.iter().map(|&x| [x, 0.0]).collect();
    serde_json::json!({"dim": amps.len(), "kind": "pure", "amplitudes": a})
}
