//! Exact law of `X_n` for short horizons.
//!
//! With a fixed finite configuration the joint chain (walker, particle
//! positions) is enumerated directly. Under the Poisson environment the
//! particles form a Poisson cloud of trajectories, so for each walker path the
//! number of particles meeting it at a given set of times is Poisson and
//! independent across sets; that gives the law of the occupancy seen along
//! the path in closed form, with no truncation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::env::{InitialConfig, ModelParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleLimits {
    pub max_particles: u32,
    pub max_steps: usize,
    pub max_poisson_steps: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self {
            max_particles: 3,
            max_steps: 10,
            max_poisson_steps: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactPmf {
    pub n: usize,
    /// `x ∈ [−n, n]` with `x ≡ n (mod 2)`, increasing.
    pub support: Vec<i64>,
    pub probabilities: Vec<f64>,
    /// Bound on probability mass left out of the computation.
    pub mass_defect: f64,
}

impl ExactPmf {
    fn from_map(n: usize, mass: &BTreeMap<i64, Kahan>, mass_defect: f64) -> Self {
        let support: Vec<i64> = (0..=n).map(|j| 2 * j as i64 - n as i64).collect();
        let probabilities = support
            .iter()
            .map(|x| mass.get(x).map_or(0.0, |k| k.value().max(0.0)))
            .collect();
        Self {
            n,
            support,
            probabilities,
            mass_defect,
        }
    }

    pub fn prob(&self, x: i64) -> f64 {
        self.support
            .iter()
            .position(|&s| s == x)
            .map_or(0.0, |i| self.probabilities[i])
    }

    pub fn total(&self) -> f64 {
        kahan_sum(self.probabilities.iter().copied())
    }

    pub fn mean(&self) -> f64 {
        kahan_sum(self.support.iter().zip(&self.probabilities).map(|(&x, &p)| x as f64 * p))
    }

    /// `½ Σ |p(x) − q(x)|` against an empirical pmf given as counts.
    pub fn tv_distance_to_counts(&self, counts: &BTreeMap<i64, u64>) -> f64 {
        let total: u64 = counts.values().sum();
        let mut d = 0.0;
        for (&x, &p) in self.support.iter().zip(&self.probabilities) {
            let q = counts.get(&x).copied().unwrap_or(0) as f64 / total as f64;
            d += (p - q).abs();
        }
        d += counts
            .iter()
            .filter(|(x, _)| self.prob(**x) == 0.0 && !self.support.contains(x))
            .map(|(_, &c)| c as f64 / total as f64)
            .sum::<f64>();
        d / 2.0
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum
    }
}

fn kahan_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut k = Kahan::default();
    for x in xs {
        k.add(x);
    }
    k.value()
}

fn check_probs(p_circ: f64, p_bullet: f64, q0: f64) -> Result<()> {
    ModelParams::new(0.0, p_circ, p_bullet, q0, 0).map(|_| ())
}

/// Particle moves with nonzero probability: `(displacement, probability)`.
fn particle_moves(q0: f64) -> Vec<(i64, f64)> {
    let half = (1.0 - q0) / 2.0;
    let mut moves = vec![(-1, half), (1, half)];
    if q0 > 0.0 {
        moves.push((0, q0));
    }
    moves
}

pub fn exact_walker_pmf(p_circ: f64, p_bullet: f64, q0: f64, config: &InitialConfig, n: usize) -> Result<ExactPmf> {
    exact_walker_pmf_with(p_circ, p_bullet, q0, config, n, OracleLimits::default())
}

/// Dynamic programming over `(walker position, sorted particle positions)`.
pub fn exact_walker_pmf_with(
    p_circ: f64,
    p_bullet: f64,
    q0: f64,
    config: &InitialConfig,
    n: usize,
    limits: OracleLimits,
) -> Result<ExactPmf> {
    check_probs(p_circ, p_bullet, q0)?;
    let k = config.total();
    if k > limits.max_particles || n > limits.max_steps {
        let width = (2 * n + 1) as f64;
        return Err(Error::StateSpace {
            particles: k,
            steps: n,
            estimate: width.powi(k as i32 + 1),
            max_particles: limits.max_particles,
            max_steps: limits.max_steps,
        });
    }
    let moves = particle_moves(q0);
    let mut states: BTreeMap<(i64, Vec<i64>), Kahan> = BTreeMap::new();
    let mut start = Kahan::default();
    start.add(1.0);
    states.insert((0, config.positions()), start);
    for _ in 0..n {
        let mut next: BTreeMap<(i64, Vec<i64>), Kahan> = BTreeMap::new();
        for ((x, ps), w) in &states {
            let w = w.value();
            let p = if ps.binary_search(x).is_ok() { p_bullet } else { p_circ };
            let particle_laws = joint_moves(ps, &moves);
            for (dx, pw) in [(1, p), (-1, 1.0 - p)] {
                if pw == 0.0 {
                    continue;
                }
                for (qs, pq) in &particle_laws {
                    next.entry((x + dx, qs.clone())).or_default().add(w * pw * pq);
                }
            }
        }
        states = next;
    }
    let mut marginal: BTreeMap<i64, Kahan> = BTreeMap::new();
    for ((x, _), w) in &states {
        marginal.entry(*x).or_default().add(w.value());
    }
    Ok(ExactPmf::from_map(n, &marginal, 0.0))
}

/// All joint one-step outcomes of the particles, merged by sorted result.
fn joint_moves(ps: &[i64], moves: &[(i64, f64)]) -> Vec<(Vec<i64>, f64)> {
    let mut out: BTreeMap<Vec<i64>, Kahan> = BTreeMap::new();
    let mut idx = vec![0usize; ps.len()];
    loop {
        let mut qs: Vec<i64> = ps.iter().zip(&idx).map(|(p, &i)| p + moves[i].0).collect();
        qs.sort_unstable();
        let pr: f64 = idx.iter().map(|&i| moves[i].1).product();
        out.entry(qs).or_default().add(pr);
        // odometer
        let mut j = 0;
        loop {
            if j == idx.len() {
                return out.into_iter().map(|(q, k)| (q, k.value())).collect();
            }
            idx[j] += 1;
            if idx[j] < moves.len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

/// Initial sites that can influence `X_n`: a particle must meet the walker at
/// some time `t ≤ n − 1`, where both are within `t` of their starts.
pub fn poisson_relevant_sites(n: usize) -> std::ops::RangeInclusive<i64> {
    let r = 2 * (n as i64 - 1).max(0);
    -r..=r
}

pub fn exact_pmf_poisson(params: &ModelParams, n: usize, tail_tol: f64) -> Result<ExactPmf> {
    exact_pmf_poisson_with(params, n, tail_tol, OracleLimits::default())
}

/// Exact law of `X_n` under the Poisson environment. Nothing is truncated, so
/// the reported defect is 0 and any positive `tail_tol` is met.
pub fn exact_pmf_poisson_with(params: &ModelParams, n: usize, tail_tol: f64, limits: OracleLimits) -> Result<ExactPmf> {
    params.validate()?;
    if tail_tol.is_nan() || tail_tol <= 0.0 {
        return Err(Error::config(format!("tail_tol = {tail_tol} must be > 0")));
    }
    if n > limits.max_poisson_steps {
        return Err(Error::StateSpace {
            particles: 0,
            steps: n,
            estimate: 4f64.powi(n as i32),
            max_particles: limits.max_particles,
            max_steps: limits.max_poisson_steps,
        });
    }
    let moves = particle_moves(params.q0);
    let subsets = 1usize << n;
    let mut marginal: BTreeMap<i64, Kahan> = BTreeMap::new();
    for steps in 0..subsets {
        // bit t of `steps` set: step t goes right
        let mut path = vec![0i64; n + 1];
        for t in 0..n {
            path[t + 1] = path[t] + if steps >> t & 1 == 1 { 1 } else { -1 };
        }
        let lambda = hit_intensities(params.rho, &path, &moves);
        let occ = occupancy_law(&lambda);
        let mut pr = Kahan::default();
        for (c, &pc) in occ.iter().enumerate() {
            if pc == 0.0 {
                continue;
            }
            let mut w = pc;
            for t in 0..n {
                let p = if c >> t & 1 == 1 { params.p_bullet } else { params.p_circ };
                w *= if steps >> t & 1 == 1 { p } else { 1.0 - p };
            }
            pr.add(w);
        }
        marginal.entry(path[n]).or_default().add(pr.value());
    }
    Ok(ExactPmf::from_map(n, &marginal, 0.0))
}

/// `λ_A = ρ Σ_z P(the walk from z meets the path exactly at the times in A)`
/// for every nonempty `A ⊆ {0, …, n−1}`, indexed by bitmask.
fn hit_intensities(rho: f64, path: &[i64], moves: &[(i64, f64)]) -> Vec<f64> {
    let n = path.len() - 1;
    let mut lambda = vec![0.0; 1 << n];
    if n == 0 || rho == 0.0 {
        return lambda;
    }
    for z in poisson_relevant_sites(n) {
        let mut dist: BTreeMap<(i64, usize), f64> = BTreeMap::new();
        dist.insert((z, usize::from(z == path[0])), 1.0);
        for (t, &x) in path.iter().enumerate().take(n).skip(1) {
            let mut next: BTreeMap<(i64, usize), f64> = BTreeMap::new();
            for (&(p, mask), &w) in &dist {
                for &(d, pd) in moves {
                    let q = p + d;
                    let m = if q == x { mask | 1 << t } else { mask };
                    *next.entry((q, m)).or_default() += w * pd;
                }
            }
            dist = next;
        }
        for ((_, mask), w) in dist {
            if mask != 0 {
                lambda[mask] += rho * w;
            }
        }
    }
    lambda
}

/// Law of the occupied set `C` along the path, from
/// `P(C ⊆ D) = exp(−Σ_{A ⊄ D} λ_A)` and Möbius inversion over subsets.
fn occupancy_law(lambda: &[f64]) -> Vec<f64> {
    let size = lambda.len();
    let mut f: Vec<f64> = (0..size)
        .map(|d| {
            let outside: f64 = (1..size).filter(|&a| a & !d != 0).map(|a| lambda[a]).sum();
            (-outside).exp()
        })
        .collect();
    let bits = size.trailing_zeros();
    for b in 0..bits {
        for d in 0..size {
            if d >> b & 1 == 1 {
                f[d] -= f[d ^ (1 << b)];
            }
        }
    }
    f.iter().map(|&p| p.max(0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{Discrete, Poisson};

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn empty_config_is_binomial() {
        let pmf = exact_walker_pmf(0.75, 0.1, 0.0, &InitialConfig::empty(), 2).unwrap();
        assert_eq!(pmf.support, vec![-2, 0, 2]);
        assert!(close(pmf.prob(2), 0.5625));
        assert!(close(pmf.prob(0), 0.375));
        assert!(close(pmf.prob(-2), 0.0625));
    }

    #[test]
    fn particle_on_the_origin_uses_p_bullet() {
        for q0 in [0.0, 0.3, 0.9] {
            let pmf = exact_walker_pmf(0.8, 0.4, q0, &InitialConfig::from_sites([0]), 1).unwrap();
            assert!(close(pmf.prob(1), 0.4));
        }
    }

    #[test]
    fn two_step_hand_enumeration() {
        let pmf = exact_walker_pmf(0.8, 0.4, 0.0, &InitialConfig::from_sites([0]), 2).unwrap();
        assert!(close(pmf.prob(2), 0.4 * (0.5 * 0.4 + 0.5 * 0.8)));
    }

    #[test]
    fn guard_reports_size() {
        let cfg = InitialConfig::from_sites([0, 1, 2, 3]);
        let err = exact_walker_pmf(0.8, 0.4, 0.0, &cfg, 3).unwrap_err();
        assert!(matches!(err, Error::StateSpace { particles: 4, .. }));
        assert!(exact_walker_pmf(0.8, 0.4, 0.0, &InitialConfig::empty(), 11).is_err());
        let wide = OracleLimits {
            max_particles: 4,
            ..Default::default()
        };
        assert!(exact_walker_pmf_with(0.8, 0.4, 0.0, &cfg, 3, wide).is_ok());
    }

    #[test]
    fn mass_is_conserved() {
        let cfg = InitialConfig::from_counts([(-1, 1), (2, 2)]).unwrap();
        let pmf = exact_walker_pmf(0.7, 0.2, 0.4, &cfg, 10).unwrap();
        assert!((pmf.total() - 1.0).abs() < 1e-12);
        assert!(pmf.probabilities.iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn symmetric_case_is_symmetric() {
        let cfg = InitialConfig::from_sites([-2, 2]);
        let pmf = exact_walker_pmf(0.5, 0.5, 0.2, &cfg, 6).unwrap();
        for &x in &pmf.support {
            assert!(close(pmf.prob(x), pmf.prob(-x)));
        }
    }

    #[test]
    fn equal_probabilities_collapse_to_binomial() {
        let base = exact_walker_pmf(0.65, 0.65, 0.0, &InitialConfig::empty(), 7).unwrap();
        let cfg = InitialConfig::from_counts([(0, 2), (3, 1)]).unwrap();
        let pmf = exact_walker_pmf(0.65, 0.65, 0.5, &cfg, 7).unwrap();
        for (a, b) in base.probabilities.iter().zip(&pmf.probabilities) {
            assert!(close(*a, *b));
        }
    }

    #[test]
    fn adding_a_particle_never_raises_the_mean() {
        let cfgs = [
            InitialConfig::from_sites([1]),
            InitialConfig::from_sites([0, 2]),
            InitialConfig::from_sites([-1, 3]),
        ];
        for cfg in &cfgs {
            for extra in -3..=3 {
                let mut sites = cfg.positions();
                sites.push(extra);
                let more = InitialConfig::from_sites(sites);
                for q0 in [0.0, 0.5] {
                    let a = exact_walker_pmf(0.9, 0.2, q0, cfg, 6).unwrap().mean();
                    let b = exact_walker_pmf(0.9, 0.2, q0, &more, 6).unwrap().mean();
                    assert!(b <= a + 1e-12, "{cfg:?} + {extra}: {a} -> {b}");
                }
            }
        }
    }

    #[test]
    fn poisson_without_particles_is_binomial() {
        for n in 0..=5 {
            let p = ModelParams::new(0.0, 0.75, 0.2, 0.3, 0).unwrap();
            let a = exact_pmf_poisson(&p, n, 1e-12).unwrap();
            let b = exact_walker_pmf(0.75, 0.2, 0.3, &InitialConfig::empty(), n).unwrap();
            assert_eq!(a.mass_defect, 0.0);
            for (x, y) in a.probabilities.iter().zip(&b.probabilities) {
                assert!(close(*x, *y));
            }
        }
    }

    #[test]
    fn poisson_mass_and_guards() {
        let p = ModelParams::new(0.2, 0.8, 0.3, 0.0, 0).unwrap();
        let pmf = exact_pmf_poisson(&p, 3, 1e-12).unwrap();
        assert!(pmf.total() + pmf.mass_defect >= 1.0 - 1e-12);
        assert!(pmf.total() <= 1.0 + 1e-12);
        assert!(exact_pmf_poisson(&p, 6, 1e-12).is_err());
        assert!(exact_pmf_poisson(&p, 3, 0.0).unwrap_err().is_config());
    }

    /// Mixes the fixed-configuration oracle over Poisson count vectors with at
    /// most three particles and brackets the result by the omitted mass.
    #[test]
    fn poisson_oracle_matches_count_vector_mixture() {
        for (rho, q0, n) in [(0.05, 0.0, 3), (0.04, 0.5, 3), (0.1, 0.0, 2), (0.03, 0.3, 4)] {
            let params = ModelParams::new(rho, 0.85, 0.25, q0, 0).unwrap();
            let exact = exact_pmf_poisson(&params, n, 1e-12).unwrap();
            let sites: Vec<i64> = poisson_relevant_sites(n).collect();
            let pois = Poisson::new(rho).unwrap();
            let mut mix = vec![0.0; exact.support.len()];
            let mut covered = 0.0;
            let m = sites.len();
            let mut multisets: Vec<Vec<usize>> = vec![vec![]];
            for i in 0..m {
                multisets.push(vec![i]);
                for j in i..m {
                    multisets.push(vec![i, j]);
                    for k in j..m {
                        multisets.push(vec![i, j, k]);
                    }
                }
            }
            for ms in multisets {
                let mut counts = vec![0u32; m];
                for &i in &ms {
                    counts[i] += 1;
                }
                let w: f64 = counts.iter().map(|&c| pois.pmf(c as u64)).product();
                let cfg = InitialConfig::from_sites(ms.iter().map(|&i| sites[i]));
                let pmf = exact_walker_pmf(0.85, 0.25, q0, &cfg, n).unwrap();
                for (acc, p) in mix.iter_mut().zip(&pmf.probabilities) {
                    *acc += w * p;
                }
                covered += w;
            }
            let omitted = 1.0 - covered;
            assert!(omitted < 5e-3);
            for (m, e) in mix.iter().zip(&exact.probabilities) {
                assert!(*m <= e + 1e-12 && *e <= m + omitted + 1e-12, "rho {rho} n {n}: {m} vs {e}");
            }
        }
    }

    #[test]
    fn relevant_sites_are_tight() {
        // A particle two steps beyond the old [−n, n] range still matters at n = 3.
        let near = exact_walker_pmf(0.9, 0.0, 0.0, &InitialConfig::from_sites([4]), 3).unwrap();
        let none = exact_walker_pmf(0.9, 0.0, 0.0, &InitialConfig::empty(), 3).unwrap();
        assert!((near.prob(3) - none.prob(3)).abs() > 1e-3);
        let far = exact_walker_pmf(0.9, 0.0, 0.0, &InitialConfig::from_sites([6]), 3).unwrap();
        assert!(close(far.prob(3), none.prob(3)));
        assert_eq!(poisson_relevant_sites(3), -4..=4);
    }
}
