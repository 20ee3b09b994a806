//! Exact simulation of the collector conditioned on `T_n <= N`.
//!
//! Read backwards from time `N`, the number of distinct coupons is a Markov
//! chain started at `n` that loses one with probability `r(m, l)` from state
//! `(m, l)`. Every trajectory is driven by its own ChaCha8 stream: trajectory
//! `i` of a batch with base seed `s` uses `ChaCha8Rng::seed_from_u64(s)` with
//! stream id `i`, so batches split across threads reproduce exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{solve_completion_curve, Curve, DEFAULT_STEP};
use crate::error::{bail, Error, Result};
use crate::specialfn::rho_of_lambda;
use crate::stats::quantile_sorted;
use crate::stirling::{BackendKind, StirlingBackend, TransitionTable};

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One run of the reversed chain: `z[t]` coupons are still to be seen
/// among draws `1..=N - t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub big_n: u64,
    pub n: u64,
    pub seed: u64,
    pub stream: u64,
    pub z: Vec<u32>,
}

impl Trajectory {
    pub fn from_forward(big_n: u64, n: u64, seed: u64, stream: u64, y: &[u32]) -> Self {
        let z = y.iter().rev().copied().collect();
        Trajectory { big_n, n, seed, stream, z }
    }

    /// `y_l = z[N - l]`, the number of distinct coupons after `l` draws.
    pub fn forward(&self) -> Vec<u32> {
        self.z.iter().rev().copied().collect()
    }

    pub fn check(&self) -> Result<()> {
        let z = &self.z;
        if z.len() as u64 != self.big_n + 1 || z[0] as u64 != self.n || *z.last().unwrap() != 0 {
            bail!(InvariantViolation, "trajectory endpoints wrong");
        }
        let mut drops = 0;
        for w in z.windows(2) {
            match w[0] as i64 - w[1] as i64 {
                0 => {}
                1 => drops += 1,
                _ => bail!(InvariantViolation, "trajectory step outside {{0, -1}}"),
            }
        }
        if drops != self.n {
            bail!(InvariantViolation, "{drops} decrements, expected {}", self.n);
        }
        Ok(())
    }

    pub fn write_csv(&self, w: &mut impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "t,z")?;
        for (t, z) in self.z.iter().enumerate() {
            writeln!(w, "{t},{z}")?;
        }
        Ok(())
    }
}

/// The conditioned chain for one `(N, n)`, with its transition table built
/// once and shared by every trajectory.
#[derive(Debug, Clone)]
pub struct ConditionedSampler {
    table: TransitionTable,
}

impl ConditionedSampler {
    pub fn new(big_n: u64, n: u64, backend: &StirlingBackend) -> Result<Self> {
        if n == 0 || n > big_n {
            bail!(Argument, "need 1 <= n <= N, got N={big_n}, n={n}");
        }
        if big_n > u32::MAX as u64 {
            bail!(Argument, "N={big_n} too large");
        }
        Ok(ConditionedSampler { table: TransitionTable::build(big_n, n, backend)? })
    }

    pub fn dims(&self) -> (u64, u64) {
        self.table.dims()
    }

    pub fn backend_kind(&self) -> BackendKind {
        self.table.kind()
    }

    pub fn r(&self, m: u64, l: u64) -> f64 {
        self.table.get(m, l)
    }

    pub fn sample(&self, seed: u64, stream: u64) -> Trajectory {
        let mut rng = stream_rng(seed, stream);
        self.sample_with(&mut rng, seed, stream)
    }

    fn sample_with(&self, rng: &mut impl Rng, seed: u64, stream: u64) -> Trajectory {
        let (big_n, n) = self.table.dims();
        let mut z = Vec::with_capacity(big_n as usize + 1);
        let mut l = n;
        z.push(l as u32);
        for t in 0..big_n {
            let m = big_n - t;
            if l > 0 {
                let u: f64 = rng.random();
                if u < self.table.get(m, l) {
                    l -= 1;
                }
            }
            z.push(l as u32);
        }
        Trajectory { big_n, n, seed, stream, z }
    }
}

pub fn sample_conditioned(big_n: u64, n: u64, backend: &StirlingBackend, seed: u64) -> Result<Trajectory> {
    Ok(ConditionedSampler::new(big_n, n, backend)?.sample(seed, 0))
}

/// An unconditioned collection run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatientRun {
    /// `y[l]` distinct coupons after `l` draws, `l = 0..=T_n`.
    pub y: Vec<u32>,
    pub t_n: u64,
}

pub fn sample_patient(n: u64, seed: u64) -> Result<PatientRun> {
    sample_patient_stream(n, seed, 0)
}

pub fn sample_patient_stream(n: u64, seed: u64, stream: u64) -> Result<PatientRun> {
    if n == 0 || n > u32::MAX as u64 {
        bail!(Argument, "need 1 <= n < 2^32, got {n}");
    }
    let mut rng = stream_rng(seed, stream);
    let mut seen = vec![false; n as usize];
    let mut y = vec![0u32];
    let mut have = 0u32;
    while (have as u64) < n {
        let c = rng.random_range(0..n as usize);
        if !seen[c] {
            seen[c] = true;
            have += 1;
        }
        y.push(have);
    }
    let t_n = (y.len() - 1) as u64;
    Ok(PatientRun { y, t_n })
}

/// Draws uniform words in `[0, n)^N` until one is surjective.
pub fn rejection_sample_word(
    big_n: u64,
    n: u64,
    rng: &mut impl Rng,
    max_attempts: u64,
) -> Result<Vec<u32>> {
    if n == 0 || n > big_n {
        bail!(Argument, "need 1 <= n <= N, got N={big_n}, n={n}");
    }
    let mut word = vec![0u32; big_n as usize];
    let mut seen = vec![0u64; n as usize];
    for attempt in 1..=max_attempts {
        let mut distinct = 0;
        for w in word.iter_mut() {
            let c = rng.random_range(0..n as u32);
            *w = c;
            if seen[c as usize] != attempt {
                seen[c as usize] = attempt;
                distinct += 1;
            }
        }
        if distinct == n {
            return Ok(word);
        }
    }
    Err(Error::AttemptsExhausted(max_attempts))
}

/// Completion path of a word over `0..n`: `y[l]` distinct letters among
/// the first `l`.
pub fn completion_path(word: &[u32], n: u64) -> Vec<u32> {
    let mut seen = vec![false; n as usize];
    let mut y = Vec::with_capacity(word.len() + 1);
    let mut have = 0u32;
    y.push(0);
    for &c in word {
        if !seen[c as usize] {
            seen[c as usize] = true;
            have += 1;
        }
        y.push(have);
    }
    y
}

pub fn rejection_sample(big_n: u64, n: u64, seed: u64, max_attempts: u64) -> Result<Trajectory> {
    let mut rng = stream_rng(seed, 0);
    let word = rejection_sample_word(big_n, n, &mut rng, max_attempts)?;
    Ok(Trajectory::from_forward(big_n, n, seed, 0, &completion_path(&word, n)))
}

/// `sup |y_{floor(n x)} / n - zeta(nu, x)|` over the curve's grid.
pub fn sup_distance(traj: &Trajectory, curve: &Curve) -> Result<f64> {
    let (big_n, n) = (traj.big_n, traj.n);
    if big_n == n {
        bail!(Domain, "N = n gives nu = 0, outside the model");
    }
    let nu = (big_n - n) as f64 / n as f64;
    if (nu - curve.nu).abs() > 1e-12 * nu.max(1.0) {
        bail!(Domain, "curve solved for nu={}, trajectory has nu={nu}", curve.nu);
    }
    let nf = n as f64;
    let mut sup: f64 = 0.0;
    for &(x, y) in &curve.points {
        let idx = ((nf * x + 1e-9).floor() as u64).min(big_n);
        let yl = traj.z[(big_n - idx) as usize] as f64 / nf;
        sup = sup.max((yl - y).abs());
    }
    Ok(sup)
}

/// Exact law of the first `s` steps of the reversed chain against the
/// i.i.d. steps that decrement with probability `rho(Lambda)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefixLaw {
    pub s: u32,
    /// Indexed by pattern; bit `j` set when step `j` decrements.
    pub chain: Vec<f64>,
    pub reference: Vec<f64>,
    pub total_variation: f64,
}

pub fn prefix_law(big_n: u64, n: u64, s: u32) -> Result<PrefixLaw> {
    if s == 0 || s > 20 {
        bail!(Argument, "need 1 <= s <= 20, got {s}");
    }
    if n == 0 || n >= big_n || (s as u64) > big_n {
        bail!(Argument, "need 1 <= n < N and s <= N, got N={big_n}, n={n}, s={s}");
    }
    let depth = big_n - n;
    let backend = StirlingBackend::auto(n)?;
    let d_lo = depth.saturating_sub(s as u64);
    let l_lo = n.saturating_sub(s as u64).max(1);
    let table = TransitionTable::build_window(big_n, n, d_lo, l_lo, &backend, 1 << 30)?;
    let rho = rho_of_lambda(depth as f64 / n as f64)?;

    let size = 1usize << s;
    let mut chain = vec![0.0; size];
    let mut reference = vec![0.0; size];
    for (pat, (pc, pr)) in chain.iter_mut().zip(reference.iter_mut()).enumerate() {
        let mut p = 1.0;
        let mut q = 1.0;
        let mut l = n;
        for j in 0..s as u64 {
            let m = big_n - j;
            let dec = pat >> j & 1 == 1;
            let r = if l == 0 || l > m { 0.0 } else { table.get(m, l) };
            if dec {
                p *= r;
                q *= rho;
                l = l.saturating_sub(1);
            } else {
                p *= 1.0 - r;
                q *= 1.0 - rho;
            }
        }
        *pc = p;
        *pr = q;
    }
    let tv = 0.5 * chain.iter().zip(&reference).map(|(a, b)| (a - b).abs()).sum::<f64>();
    Ok(PrefixLaw { s, chain, reference, total_variation: tv })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchConfig {
    pub big_n: u64,
    pub n: u64,
    pub trials: u64,
    pub a: f64,
    pub seed: u64,
    pub backend: Option<BackendKind>,
    pub step: f64,
}

impl BatchConfig {
    pub fn new(big_n: u64, n: u64, trials: u64, a: f64, seed: u64) -> Self {
        BatchConfig { big_n, n, trials, a, seed, backend: None, step: DEFAULT_STEP }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub min: f64,
    pub q05: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub q95: f64,
    pub max: f64,
}

impl Quantiles {
    pub fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p| quantile_sorted(&v, p);
        Quantiles {
            min: q(0.0),
            q05: q(0.05),
            q25: q(0.25),
            median: q(0.5),
            q75: q(0.75),
            q95: q(0.95),
            max: q(1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    #[serde(rename = "N")]
    pub big_n: u64,
    pub n: u64,
    pub nu: f64,
    pub a: f64,
    pub seed: u64,
    /// Number of trajectories; trajectory `i` uses stream `i`.
    pub seeds: u64,
    pub backend: BackendKind,
    pub sup_distances: Vec<f64>,
    pub quantiles: Quantiles,
}

/// Runs `trials` conditioned trajectories and measures each against the
/// limit curve. The result does not depend on the rayon pool size.
pub fn simulate_batch(cfg: &BatchConfig) -> Result<BatchReport> {
    let BatchConfig { big_n, n, trials, a, seed, backend, step } = *cfg;
    if n == 0 || n > big_n {
        bail!(Argument, "need 1 <= n <= N, got N={big_n}, n={n}");
    }
    if n == big_n {
        bail!(Domain, "N = n gives nu = 0, outside the model");
    }
    if trials == 0 {
        bail!(Argument, "trials must be positive");
    }
    let nu = (big_n - n) as f64 / n as f64;
    let backend = match backend {
        Some(k) => StirlingBackend::from_kind(k),
        None => StirlingBackend::auto(n)?,
    };
    let curve = solve_completion_curve(nu, a, step)?;
    let sampler = ConditionedSampler::new(big_n, n, &backend)?;
    let sup_distances = (0..trials)
        .into_par_iter()
        .map(|i| sup_distance(&sampler.sample(seed, i), &curve))
        .collect::<Result<Vec<_>>>()?;
    Ok(BatchReport {
        big_n,
        n,
        nu,
        a,
        seed,
        seeds: trials,
        backend: backend.kind(),
        quantiles: Quantiles::of(&sup_distances),
        sup_distances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{chi_square_gof, chi_square_two_sample, mean_and_stderr};
    use crate::stirling::{ratio_r, stirling_exact};
    use num_traits::ToPrimitive;
    use std::collections::HashMap;

    fn all_words(big_n: usize, n: u32) -> impl Iterator<Item = Vec<u32>> {
        let total = (n as u64).pow(big_n as u32);
        (0..total).map(move |mut code| {
            let mut w = vec![0u32; big_n];
            for c in w.iter_mut() {
                *c = (code % n as u64) as u32;
                code /= n as u64;
            }
            w
        })
    }

    fn is_surjective(w: &[u32], n: u32) -> bool {
        let mut seen = vec![false; n as usize];
        w.iter().for_each(|&c| seen[c as usize] = true);
        seen.iter().all(|&b| b)
    }

    /// Law of completion paths under the uniform surjection, by brute force.
    fn path_law(big_n: usize, n: u32) -> (HashMap<Vec<u32>, u64>, u64) {
        let mut counts = HashMap::new();
        let mut total = 0;
        for w in all_words(big_n, n).filter(|w| is_surjective(w, n)) {
            *counts.entry(completion_path(&w, n as u64)).or_insert(0) += 1;
            total += 1;
        }
        (counts, total)
    }

    fn chain_path_probability(s: &ConditionedSampler, y: &[u32]) -> f64 {
        let (big_n, _) = s.dims();
        let z: Vec<u32> = y.iter().rev().copied().collect();
        let mut p = 1.0;
        for t in 0..big_n as usize {
            let (m, l) = (big_n - t as u64, z[t] as u64);
            if l == 0 {
                continue;
            }
            let r = s.r(m, l);
            p *= if z[t + 1] < z[t] { r } else { 1.0 - r };
        }
        p
    }

    #[test]
    fn staircase_and_single_coupon() {
        let t = sample_conditioned(9, 9, &StirlingBackend::exact(), 3).unwrap();
        assert_eq!(t.z, (0..=9).rev().collect::<Vec<u32>>());
        let t = sample_conditioned(12, 1, &StirlingBackend::exact(), 3).unwrap();
        let mut expect = vec![1u32; 12];
        expect.push(0);
        assert_eq!(t.z, expect);
        assert!(sample_conditioned(3, 4, &StirlingBackend::exact(), 0).is_err());
        assert!(matches!(
            sample_conditioned(40, 20, &StirlingBackend::saddle(), 0),
            Err(Error::BackendWindow(_))
        ));
    }

    #[test]
    fn path_probabilities_match_enumeration() {
        for big_n in 2..=9usize {
            for n in 1..=(big_n as u32).min(4) {
                let (counts, total) = path_law(big_n, n);
                let fact: u64 = (1..=n as u64).product();
                let s = stirling_exact(big_n as u64, n as u64).unwrap().to_u64().unwrap();
                assert_eq!(total, fact * s);
                let sampler = ConditionedSampler::new(big_n as u64, n as u64, &StirlingBackend::exact())
                    .unwrap();
                let mut sum = 0.0;
                for (y, c) in &counts {
                    let p = chain_path_probability(&sampler, y);
                    assert!((p - *c as f64 / total as f64).abs() < 1e-14, "{big_n} {n} {y:?}");
                    sum += p;
                }
                assert!((sum - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn prefix_frequencies_10_5() {
        // law of the first 5 steps, exact from products of r and 1 - r
        let sampler = ConditionedSampler::new(10, 5, &StirlingBackend::exact()).unwrap();
        let law = prefix_law(10, 5, 5).unwrap();
        let trials = 200_000;
        let mut counts = vec![0u64; 32];
        for i in 0..trials {
            let z = sampler.sample(11, i).z;
            let pat = (0..5).fold(0usize, |acc, j| acc | (((z[j] - z[j + 1]) as usize) << j));
            counts[pat] += 1;
        }
        let t = chi_square_gof(&counts, &law.chain).unwrap();
        assert!(t.p_value > 0.001, "{t:?}");
    }

    #[test]
    fn rejection_matches_chain_at_7_3() {
        let (counts, total) = path_law(7, 3);
        assert_eq!(total, 1806);
        // exact law of y_4
        let mut exact = vec![0.0; 4];
        for (y, c) in &counts {
            exact[y[4] as usize] += *c as f64 / total as f64;
        }
        let trials = 50_000;
        let mut rng = stream_rng(5, 0);
        let mut rej = vec![0u64; 4];
        for _ in 0..trials {
            let w = rejection_sample_word(7, 3, &mut rng, 10_000).unwrap();
            rej[completion_path(&w, 3)[4] as usize] += 1;
        }
        assert!(chi_square_gof(&rej, &exact).unwrap().p_value > 0.001);
        let sampler = ConditionedSampler::new(7, 3, &StirlingBackend::exact()).unwrap();
        let mut mc = vec![0u64; 4];
        for i in 0..trials {
            mc[sampler.sample(6, i).forward()[4] as usize] += 1;
        }
        assert!(chi_square_two_sample(&rej, &mc).unwrap().p_value > 0.001);
    }

    #[test]
    fn rejection_bijections() {
        for seed in 0..50 {
            let t = rejection_sample(5, 5, seed, 100_000).unwrap();
            assert_eq!(t.forward(), vec![0, 1, 2, 3, 4, 5]);
        }
        assert!(matches!(rejection_sample(30, 30, 0, 3), Err(Error::AttemptsExhausted(3))));
    }

    #[test]
    fn patient_collector() {
        for s in 0..20 {
            assert_eq!(sample_patient(1, s).unwrap().t_n, 1);
        }
        let h100: f64 = (1..=100).map(|k| 1.0 / k as f64).sum();
        let ts: Vec<f64> =
            (0..10_000).map(|i| sample_patient_stream(100, 1, i).unwrap().t_n as f64).collect();
        let (mean, se) = mean_and_stderr(&ts);
        assert!((mean - 100.0 * h100).abs() < 3.0 * se, "{mean} {se}");

        // E[zeta_n(1)] = 1 - (1 - 1/n)^n at n = 50
        let n = 50u64;
        let expect = 1.0 - (1.0 - 1.0 / n as f64).powi(n as i32);
        let vals: Vec<f64> = (0..100_000)
            .map(|i| {
                let r = sample_patient_stream(n, 2, i).unwrap();
                r.y.get(n as usize).copied().unwrap_or(n as u32) as f64 / n as f64
            })
            .collect();
        let (m, se) = mean_and_stderr(&vals);
        assert!((m - expect).abs() < 3.0 * se, "{m} {expect} {se}");
    }

    #[test]
    fn trajectories_are_valid_and_deterministic() {
        let s = ConditionedSampler::new(400, 150, &StirlingBackend::LogDp).unwrap();
        for i in 0..20 {
            let t = s.sample(9, i);
            t.check().unwrap();
            let y = t.forward();
            assert_eq!(y[0], 0);
            assert_eq!(*y.last().unwrap(), 150);
            assert_eq!(t, s.sample(9, i));
        }
        assert_ne!(s.sample(9, 0).z, s.sample(9, 1).z);
        assert_ne!(s.sample(9, 0).z, s.sample(10, 0).z);
    }

    #[test]
    fn martingale_increments_centered() {
        let (big_n, n) = (60u64, 30u64);
        let s = ConditionedSampler::new(big_n, n, &StirlingBackend::exact()).unwrap();
        let trials = 10_000u64;
        let mut total = 0.0;
        for i in 0..trials {
            let z = s.sample(21, i).z;
            for t in 0..big_n as usize {
                let (m, l) = (big_n - t as u64, z[t] as u64);
                let expect = if l == 0 { 0.0 } else { -s.r(m, l) };
                total += (z[t + 1] as f64 - z[t] as f64) - expect;
            }
        }
        let mean = total / (trials * big_n) as f64;
        assert!(mean.abs() <= 4.0 / ((trials * big_n) as f64).sqrt(), "{mean}");
    }

    #[test]
    fn sup_distance_of_rounded_curve() {
        let n = 400u64;
        let big_n = 800u64;
        let curve = solve_completion_curve(1.0, 0.2, 1e-3).unwrap();
        let y: Vec<u32> = (0..=big_n)
            .map(|l| {
                let x = l as f64 / n as f64;
                if x < 0.2 { (x * n as f64 * 0.9) as u32 } else { (curve.eval(x).unwrap() * n as f64).round() as u32 }
            })
            .collect();
        let t = Trajectory::from_forward(big_n, n, 0, 0, &y);
        let d = sup_distance(&t, &curve).unwrap();
        assert!(d <= 1.0 / n as f64 + curve.step, "{d}");
        let stair = Trajectory::from_forward(5, 5, 0, 0, &[0, 1, 2, 3, 4, 5]);
        assert!(sup_distance(&stair, &curve).is_err());
        let other = sample_conditioned(300, 100, &StirlingBackend::exact(), 1).unwrap();
        assert!(sup_distance(&other, &curve).is_err());
    }

    #[test]
    fn prefix_law_properties() {
        let l1 = prefix_law(200, 100, 1).unwrap();
        let te = (ratio_r(200, 100, &StirlingBackend::exact()).unwrap()
            - rho_of_lambda(1.0).unwrap())
        .abs();
        assert!((l1.total_variation - te).abs() < 1e-15);
        let mut last = f64::INFINITY;
        for &n in &[100u64, 200, 400] {
            let law = prefix_law(2 * n, n, 10).unwrap();
            assert!((law.chain.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!((law.reference.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(law.total_variation < last);
            last = law.total_variation;
        }
        assert!(prefix_law(10, 5, 21).is_err());
    }

    #[test]
    fn batch_independent_of_pool_size() {
        let cfg = BatchConfig::new(200, 100, 40, 0.2, 7);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| simulate_batch(&cfg)).unwrap();
        let b = four.install(|| simulate_batch(&cfg)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.seeds, 40);
        assert_eq!(a.backend, BackendKind::Exact);
        assert!(a.quantiles.median < 0.2);
        assert!(simulate_batch(&BatchConfig::new(100, 200, 1, 0.2, 0)).is_err());
    }
}
