//! Accessible complete deterministic automata through their boxed diagrams.
//!
//! A surjection `[1..kn+1] -> [1..n]`, relabelled by order of first
//! appearance, is a transition structure on `n` states over a `k`-letter
//! alphabet: column 1 is the initial arrow and columns `(l-1)k+2 ..= lk+1`
//! are the arrows leaving state `l`. The structure is accessible exactly
//! when its completion path satisfies `y_{lk+1} >= l + 1` for all
//! `l < n`.

use std::collections::VecDeque;

use num_bigint::BigUint;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::sampler::{stream_rng, ConditionedSampler};
use crate::specialfn::xi_of_lambda;
use crate::stats::{clopper_pearson, proportion};
use crate::stirling::StirlingBackend;

fn check_path(y: &[u32], k: u32) -> Result<u32> {
    if k < 2 {
        bail!(Argument, "need k >= 2, got {k}");
    }
    let Some(&n) = y.last() else {
        bail!(Shape, "empty path");
    };
    if y.len() as u64 != k as u64 * n as u64 + 1 {
        bail!(Shape, "path of length {} cannot end at {n} for k={k}", y.len());
    }
    if y[0] != 1 || y.windows(2).any(|w| w[1] < w[0] || w[1] - w[0] > 1) {
        bail!(Shape, "not a completion path: must start at 1 and rise by unit steps");
    }
    Ok(n)
}

/// `y` lists `y_1, ..., y_{kn+1}`.
pub fn dyck_check(y: &[u32], k: u32) -> Result<bool> {
    let n = check_path(y, k)?;
    Ok((0..n as usize).all(|l| y[l * k as usize] as usize > l))
}

/// Columns `lk + 1` (1-based) where the Dyck inequality fails.
pub fn violation_columns(y: &[u32], k: u32) -> Result<Vec<usize>> {
    let n = check_path(y, k)?;
    Ok((0..n as usize)
        .filter(|&l| y[l * k as usize] as usize <= l)
        .map(|l| l * k as usize + 1)
        .collect())
}

/// Completion path and marks of a surjective word over `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoxedDiagram {
    pub k: u32,
    pub n: u32,
    pub y: Vec<u32>,
    pub marks: Vec<u32>,
    pub dyck: bool,
}

/// Relabels `word` (letters `1..=n`) by order of first appearance and
/// returns `(y, marks)`, with `marks[i] <= y[i]`.
pub fn surjection_to_diagram(word: &[u32], n: u32) -> Result<(Vec<u32>, Vec<u32>)> {
    let mut label = vec![0u32; n as usize + 1];
    let mut next = 0u32;
    let mut y = Vec::with_capacity(word.len());
    let mut marks = Vec::with_capacity(word.len());
    for &c in word {
        if c == 0 || c > n {
            bail!(Argument, "letter {c} outside 1..={n}");
        }
        if label[c as usize] == 0 {
            next += 1;
            label[c as usize] = next;
        }
        y.push(next);
        marks.push(label[c as usize]);
    }
    if next != n {
        bail!(Argument, "word hits {next} of {n} letters");
    }
    Ok((y, marks))
}

impl BoxedDiagram {
    pub fn from_word(word: &[u32], n: u32, k: u32) -> Result<Self> {
        let (y, marks) = surjection_to_diagram(word, n)?;
        let dyck = dyck_check(&y, k)?;
        Ok(BoxedDiagram { k, n, y, marks, dyck })
    }
}

/// Transition table `delta[state][letter]` (states `0..n`) and initial
/// state of the structure encoded by a surjective word of length `kn + 1`.
pub fn surjection_to_structure(word: &[u32], n: u32, k: u32) -> Result<(Vec<Vec<u32>>, u32)> {
    if word.len() as u64 != k as u64 * n as u64 + 1 {
        bail!(Shape, "word length {} is not k n + 1 = {}", word.len(), k as u64 * n as u64 + 1);
    }
    let (_, marks) = surjection_to_diagram(word, n)?;
    let ku = k as usize;
    let delta = (0..n as usize)
        .map(|s| marks[1 + s * ku..1 + (s + 1) * ku].iter().map(|&m| m - 1).collect())
        .collect();
    Ok((delta, marks[0] - 1))
}

/// Whether every state is reachable from `initial`.
pub fn is_accessible(delta: &[Vec<u32>], initial: u32) -> bool {
    let mut seen = vec![false; delta.len()];
    let mut queue = VecDeque::from([initial]);
    seen[initial as usize] = true;
    let mut count = 1;
    while let Some(s) = queue.pop_front() {
        for &t in &delta[s as usize] {
            if !seen[t as usize] {
                seen[t as usize] = true;
                count += 1;
                queue.push_back(t);
            }
        }
    }
    count == delta.len()
}

/// `rho(k) = exp(-xi(k - 1))`.
pub fn rho_k(k: u32) -> Result<f64> {
    if k < 2 {
        bail!(Argument, "need k >= 2, got {k}");
    }
    Ok((-xi_of_lambda((k - 1) as f64)?).exp())
}

/// Limiting fraction `1 - k rho(k)` of accessible structures among the
/// surjective ones.
pub fn korshunov_constant(k: u32) -> Result<f64> {
    Ok(1.0 - k as f64 * rho_k(k)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub rho: f64,
    /// Mean step `k rho - 1` of the walk.
    pub drift: f64,
    /// Probability that the walk never rises above its start.
    pub pi0: f64,
    /// `(1 - rho) pi0 = 1 - k rho`.
    pub non_crossing: f64,
}

/// Closed form for the walk with steps `+(k - 1)` (probability `rho(k)`) and
/// `-1`.
pub fn pollaczek_crossing(k: u32) -> Result<Crossing> {
    let rho = rho_k(k)?;
    let drift = k as f64 * rho - 1.0;
    let pi0 = -drift / (1.0 - rho);
    Ok(Crossing { rho, drift, pi0, non_crossing: (1.0 - rho) * pi0 })
}

fn walk_stays_nonpositive(k: u32, rho: f64, horizon: u64, rng: &mut impl Rng) -> bool {
    let up = (k - 1) as i64;
    let mut s: i64 = 0;
    for step in 0..horizon {
        let u: f64 = rng.random();
        s += if u < rho { up } else { -1 };
        if s > 0 {
            return false;
        }
        if s + up * (horizon - step - 1) as i64 <= 0 {
            return true;
        }
    }
    true
}

/// Fraction of `runs` walks whose maximum over `horizon` steps is 0, with
/// its standard error.
pub fn simulate_walk_max(k: u32, runs: u64, horizon: u64, seed: u64) -> Result<(f64, f64)> {
    if runs == 0 {
        bail!(Argument, "runs must be positive");
    }
    let rho = rho_k(k)?;
    let hits: u64 = (0..runs)
        .into_par_iter()
        .map(|i| walk_stays_nonpositive(k, rho, horizon, &mut stream_rng(seed, i)) as u64)
        .sum();
    Ok(proportion(hits, runs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccessibilityEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub accepted: u64,
    pub trials: u64,
}

impl AccessibilityEstimate {
    pub fn clopper_pearson(&self, alpha: f64) -> Result<(f64, f64)> {
        clopper_pearson(self.accepted, self.trials, alpha)
    }
}

/// Monte-Carlo fraction of Dyck paths among conditioned collector paths
/// with `N = kn + 1`.
pub fn estimate_accessibility(k: u32, n: u32, trials: u64, seed: u64) -> Result<AccessibilityEstimate> {
    if k < 2 || n < 2 {
        bail!(Argument, "need k >= 2 and n >= 2, got k={k}, n={n}");
    }
    if trials == 0 {
        bail!(Argument, "trials must be positive");
    }
    let big_n = k as u64 * n as u64 + 1;
    let sampler = ConditionedSampler::new(big_n, n as u64, &StirlingBackend::auto(n as u64)?)?;
    let accepted = (0..trials)
        .into_par_iter()
        .map(|i| {
            let y = sampler.sample(seed, i).forward();
            dyck_check(&y[1..], k).map(|b| b as u64)
        })
        .sum::<Result<u64>>()?;
    let (estimate, stderr) = proportion(accepted, trials);
    Ok(AccessibilityEstimate { estimate, stderr, accepted, trials })
}

const ENUMERATION_CAP: u64 = 100_000_000;

/// Counts, among all `n^(kn+1)` words, the surjective ones and those whose
/// completion path is Dyck.
pub fn exact_accessible_count(k: u32, n: u32) -> Result<(BigUint, BigUint)> {
    if k < 2 || n < 1 {
        bail!(Argument, "need k >= 2 and n >= 1");
    }
    let len = k as usize * n as usize + 1;
    let total = (n as u64).checked_pow(len as u32).filter(|&t| t <= ENUMERATION_CAP);
    let Some(total) = total else {
        bail!(Resource, "n^(kn+1) exceeds {ENUMERATION_CAP}");
    };
    let (mut acc, mut surj) = (0u64, 0u64);
    let mut word = vec![0u32; len];
    let mut y = vec![0u32; len];
    for code in 0..total {
        let mut c = code;
        for w in word.iter_mut() {
            *w = (c % n as u64) as u32;
            c /= n as u64;
        }
        let mut seen = 0u64;
        let mut have = 0;
        for (i, &w) in word.iter().enumerate() {
            if seen >> w & 1 == 0 {
                seen |= 1 << w;
                have += 1;
            }
            y[i] = have;
        }
        if have == n {
            surj += 1;
            if dyck_check(&y, k)? {
                acc += 1;
            }
        }
    }
    Ok((BigUint::from(acc), BigUint::from(surj)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KorshunovReport {
    pub k: u32,
    pub n: u32,
    pub trials: u64,
    pub seed: u64,
    pub estimate: f64,
    pub stderr: f64,
    pub korshunov: f64,
    pub pollaczek_pi0: f64,
}

pub fn korshunov_report(k: u32, n: u32, trials: u64, seed: u64) -> Result<KorshunovReport> {
    let est = estimate_accessibility(k, n, trials, seed)?;
    Ok(KorshunovReport {
        k,
        n,
        trials,
        seed,
        estimate: est.estimate,
        stderr: est.stderr,
        korshunov: korshunov_constant(k)?,
        pollaczek_pi0: pollaczek_crossing(k)?.pi0,
    })
}
