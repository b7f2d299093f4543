//! Markov kernels on posets and the ordered ergodicity coefficient.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{Measure, TOL};
use crate::ordaff::{gamma, max_upset_deficiency, ordered_affinity};
use crate::poset::{Poset, DEFAULT_PRODUCT_LIMIT};
use crate::random;

/// σ(P^m) must exceed this for a certificate.
pub const SIGMA_CUTOFF: f64 = 1e-6;
/// Fixed-point iteration stops once a γ-step falls below this.
pub const FIXED_POINT_TOL: f64 = 1e-10;
/// Largest accepted γ(πP, π) in a certificate.
pub const RESIDUAL_BOUND: f64 = 1e-8;
const MAX_ITERATIONS: usize = 1_000_000;

/// Row-stochastic matrix; row `x` is the distribution `P(x, ·)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkovKernel {
    n: usize,
    data: Vec<f64>,
}

impl MarkovKernel {
    /// Validates each row to mass 1 within [`TOL`] and renormalizes it.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimMismatch(row.len(), n));
            }
            let m = Measure::new(row)?;
            let sum = m.mass();
            if (sum - 1.0).abs() > TOL {
                return Err(Error::BadRow { row: i, sum });
            }
            data.extend(m.weights().iter().map(|w| w / sum));
        }
        Ok(MarkovKernel { n, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        MarkovKernel { n, data }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.data[x * self.n..(x + 1) * self.n]
    }

    pub fn row_measure(&self, x: usize) -> Measure {
        Measure::from_raw(self.row(x).to_vec())
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|x| self.row(x).to_vec()).collect()
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[x * self.n + y]
    }

    pub(crate) fn check_on(&self, poset: &Poset) -> Result<()> {
        if self.n != poset.len() {
            return Err(Error::DimMismatch(self.n, poset.len()));
        }
        Ok(())
    }

    fn matmul(&self, other: &MarkovKernel) -> MarkovKernel {
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            let out = &mut data[i * n..(i + 1) * n];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a != 0.0 {
                    for (o, &b) in out.iter_mut().zip(other.row(k)) {
                        *o += a * b;
                    }
                }
            }
        }
        MarkovKernel { n, data }
    }
}

/// μP
pub fn apply(mu: &Measure, p: &MarkovKernel) -> Result<Measure> {
    if mu.len() != p.n {
        return Err(Error::DimMismatch(mu.len(), p.n));
    }
    let mut out = vec![0.0; p.n];
    for (x, &w) in mu.weights().iter().enumerate() {
        if w != 0.0 {
            for (o, &q) in out.iter_mut().zip(p.row(x)) {
                *o += w * q;
            }
        }
    }
    Ok(Measure::from_raw(out))
}

/// μP^t
pub fn apply_n(mu: &Measure, p: &MarkovKernel, t: usize) -> Result<Measure> {
    let mut cur = mu.clone();
    for _ in 0..t {
        cur = apply(&cur, p)?;
    }
    Ok(cur)
}

/// P^m for `m ≥ 1`.
pub fn compose(p: &MarkovKernel, m: usize) -> Result<MarkovKernel> {
    if m == 0 {
        return Err(Error::BadParams("power must be at least 1".into()));
    }
    let mut result: Option<MarkovKernel> = None;
    let mut base = p.clone();
    let mut e = m;
    loop {
        if e & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(r) => r.matmul(&base),
            });
        }
        e >>= 1;
        if e == 0 {
            break;
        }
        base = base.matmul(&base);
    }
    Ok(result.expect("m >= 1"))
}

/// μ ⊗ P on `S × S`, indexed like [`Poset::product`]: pair `(x, y)` is `x * n + y`.
pub fn joint(mu: &Measure, p: &MarkovKernel) -> Result<Measure> {
    let n = p.n;
    if mu.len() != n {
        return Err(Error::DimMismatch(mu.len(), n));
    }
    if n.saturating_mul(n) > DEFAULT_PRODUCT_LIMIT {
        return Err(Error::Size(n, n, DEFAULT_PRODUCT_LIMIT));
    }
    let mut w = Vec::with_capacity(n * n);
    for x in 0..n {
        let mx = mu.weights()[x];
        w.extend(p.row(x).iter().map(|q| mx * q));
    }
    Ok(Measure::from_raw(w))
}

/// Errors with the first cover `x ⪯ y` whose rows are not stochastically ordered.
///
/// Checking generating covers suffices since dominance is transitive.
pub fn check_monotone(poset: &Poset, p: &MarkovKernel) -> Result<()> {
    p.check_on(poset)?;
    for &(x, y) in poset.covers() {
        let (d, _) = max_upset_deficiency(poset, &p.row_measure(x), &p.row_measure(y))?;
        if d > TOL {
            return Err(Error::NotMonotone(x, y));
        }
    }
    Ok(())
}

pub fn is_monotone(poset: &Poset, p: &MarkovKernel) -> bool {
    check_monotone(poset, p).is_ok()
}

/// σ(P) with a minimizing pair of states (lowest index on ties).
pub fn sigma_with_witness(poset: &Poset, p: &MarkovKernel) -> Result<(f64, usize, usize)> {
    p.check_on(poset)?;
    let n = p.n;
    let rows: Vec<Measure> = (0..n).map(|x| p.row_measure(x)).collect();
    let per_row: Vec<Result<(f64, usize)>> = (0..n)
        .into_par_iter()
        .map(|x| {
            let mut best = (f64::INFINITY, x);
            for y in 0..n {
                let a = if x == y {
                    1.0
                } else {
                    ordered_affinity(poset, &rows[x], &rows[y])?
                };
                if a < best.0 {
                    best = (a, y);
                }
            }
            Ok(best)
        })
        .collect();
    let mut best = (f64::INFINITY, 0, 0);
    for (x, r) in per_row.into_iter().enumerate() {
        let (a, y) = r?;
        if a < best.0 {
            best = (a, x, y);
        }
    }
    if n == 0 {
        best.0 = 1.0;
    }
    Ok(best)
}

/// Ordered ergodicity coefficient: min over state pairs of α_O(P_x, P_y).
pub fn sigma(poset: &Poset, p: &MarkovKernel) -> Result<f64> {
    Ok(sigma_with_witness(poset, p)?.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityCertificate {
    pub m: usize,
    pub sigma_m: f64,
    pub rate: f64,
    pub stationary: Measure,
    pub residual: f64,
    #[serde(skip)]
    pub iterations: usize,
}

impl StabilityCertificate {
    /// Guaranteed bound on γ(μP^t, π) given γ(μ, π).
    pub fn bound(&self, t: usize, initial_gap: f64) -> f64 {
        self.rate.powi((t / self.m) as i32) * initial_gap
    }
}

/// Finds the smallest `m ≤ m_max` with σ(P^m) above [`SIGMA_CUTOFF`] and
/// iterates μ ↦ μP^m from the uniform distribution to the fixed point.
pub fn stationary(poset: &Poset, p: &MarkovKernel, m_max: usize) -> Result<StabilityCertificate> {
    check_monotone(poset, p)?;
    let mut power = p.clone();
    let mut found = None;
    for m in 1..=m_max {
        if m > 1 {
            power = power.matmul(p);
        }
        let s = sigma(poset, &power)?;
        if s > SIGMA_CUTOFF {
            found = Some((m, s));
            break;
        }
    }
    let (m, sigma_m) = found.ok_or(Error::NoCertificate(m_max))?;

    let mut mu = Measure::uniform(p.n);
    let mut iterations = 0;
    loop {
        let next = apply(&mu, &power)?;
        let step = gamma(poset, &next, &mu)?;
        mu = next;
        iterations += 1;
        if step < FIXED_POINT_TOL {
            break;
        }
        if iterations >= MAX_ITERATIONS {
            return Err(Error::Assertion(format!(
                "fixed-point iteration did not settle in {MAX_ITERATIONS} steps"
            )));
        }
    }
    let residual = gamma(poset, &apply(&mu, p)?, &mu)?;
    if residual > RESIDUAL_BOUND {
        return Err(Error::Assertion(format!(
            "stationary residual {residual:e} exceeds {RESIDUAL_BOUND:e}"
        )));
    }
    Ok(StabilityCertificate {
        m,
        sigma_m,
        rate: 1.0 - sigma_m,
        stationary: mu,
        residual,
        iterations,
    })
}

/// Outcome of a randomized inequality check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub trials: usize,
    pub sigma: f64,
    /// The factor every observed ratio must stay below.
    pub bound: f64,
    /// Largest observed ratio (or smallest observed value, for lower-bound checks).
    pub observed: f64,
}

fn random_pair<R: Rng>(rng: &mut R, n: usize, trial: usize) -> (Measure, Measure) {
    // every fourth trial uses Dirac pairs, which is where the bounds are tight
    if trial % 4 == 3 {
        (
            Measure::dirac(n, rng.gen_range(0..n)),
            Measure::dirac(n, rng.gen_range(0..n)),
        )
    } else {
        (
            random::random_probability(rng, n),
            random::random_probability(rng, n),
        )
    }
}

fn ratio_check(
    poset: &Poset,
    p: &MarkovKernel,
    trials: usize,
    seed: u64,
    factor: f64,
    sigma_value: f64,
) -> Result<CheckReport> {
    let mut rng = random::rng(seed);
    let mut worst: f64 = 0.0;
    for trial in 0..trials {
        let (mu, nu) = random_pair(&mut rng, p.n, trial);
        let before = gamma(poset, &mu, &nu)?;
        let after = gamma(poset, &apply(&mu, p)?, &apply(&nu, p)?)?;
        if after > factor * before + TOL {
            return Err(Error::Assertion(format!(
                "gamma(muP, nuP) = {after} > {factor} * {before} for mu = {:?}, nu = {:?}",
                mu.weights(),
                nu.weights()
            )));
        }
        if before > 1e-12 {
            worst = worst.max(after / before);
        }
    }
    Ok(CheckReport {
        trials,
        sigma: sigma_value,
        bound: factor,
        observed: worst,
    })
}

/// Checks γ(μP, νP) ≤ (1 − σ(P)) γ(μ, ν) on random pairs.
pub fn contraction_check(
    poset: &Poset,
    p: &MarkovKernel,
    trials: usize,
    seed: u64,
) -> Result<CheckReport> {
    check_monotone(poset, p)?;
    let s = sigma(poset, p)?;
    ratio_check(poset, p, trials, seed, 1.0 - s, s)
}

/// Checks γ(μP, νP) ≤ γ(μ, ν) on random pairs.
pub fn nonexpansiveness_check(
    poset: &Poset,
    p: &MarkovKernel,
    trials: usize,
    seed: u64,
) -> Result<CheckReport> {
    check_monotone(poset, p)?;
    ratio_check(poset, p, trials, seed, 1.0, f64::NAN)
}

/// Checks α_O(μP, νP) ≥ σ(P) on random pairs.
pub fn sigma_measure_pairs_check(
    poset: &Poset,
    p: &MarkovKernel,
    trials: usize,
    seed: u64,
) -> Result<CheckReport> {
    check_monotone(poset, p)?;
    let s = sigma(poset, p)?;
    let mut rng = random::rng(seed);
    let mut lowest: f64 = 1.0;
    for trial in 0..trials {
        let (mu, nu) = random_pair(&mut rng, p.n, trial);
        let a = ordered_affinity(poset, &apply(&mu, p)?, &apply(&nu, p)?)?;
        if a < s - TOL {
            return Err(Error::Assertion(format!(
                "alpha_O(muP, nuP) = {a} < sigma = {s} for mu = {:?}, nu = {:?}",
                mu.weights(),
                nu.weights()
            )));
        }
        lowest = lowest.min(a);
    }
    Ok(CheckReport {
        trials,
        sigma: s,
        bound: s,
        observed: lowest,
    })
}

/// A sample path `X_0 = x0, ..., X_steps` drawn with the given seed.
pub fn simulate_path(p: &MarkovKernel, x0: usize, steps: usize, seed: u64) -> Result<Vec<usize>> {
    if x0 >= p.n {
        return Err(Error::Index {
            index: x0,
            len: p.n,
        });
    }
    let mut rng = random::rng(seed);
    let mut path = Vec::with_capacity(steps + 1);
    let mut x = x0;
    path.push(x);
    for _ in 0..steps {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let row = p.row(x);
        x = row.iter().rposition(|&q| q > 0.0).unwrap_or(0);
        for (z, &q) in row.iter().enumerate() {
            acc += q;
            if u < acc {
                x = z;
                break;
            }
        }
        path.push(x);
    }
    Ok(path)
}

/// Dirac pair showing the contraction factor cannot be improved.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TightnessWitness {
    pub x: usize,
    pub y: usize,
    /// γ(P_x, P_y) / γ(δ_x, δ_y)
    pub ratio: f64,
}

/// Scans strictly ordered pairs `y ≺ x` for the one minimizing α_O(P_x, P_y).
/// Returns `None` when the poset has no strictly ordered pair.
pub fn tightness_witness(poset: &Poset, p: &MarkovKernel) -> Result<Option<TightnessWitness>> {
    p.check_on(poset)?;
    let n = p.n;
    let mut best: Option<(f64, usize, usize)> = None;
    for x in 0..n {
        for y in poset.below(x) {
            if y == x {
                continue;
            }
            let a = ordered_affinity(poset, &p.row_measure(x), &p.row_measure(y))?;
            if best.is_none_or(|(b, _, _)| a < b) {
                best = Some((a, x, y));
            }
        }
    }
    let Some((_, x, y)) = best else {
        return Ok(None);
    };
    let before = gamma(poset, &Measure::dirac(n, x), &Measure::dirac(n, y))?;
    let after = gamma(poset, &p.row_measure(x), &p.row_measure(y))?;
    Ok(Some(TightnessWitness {
        x,
        y,
        ratio: after / before,
    }))
}

/// Mixed-monotonicity condition: with least element `a` and greatest `b`,
/// `P^m(a, [pivot, b]) > 0` and `P^m(b, [a, pivot]) > 0`.
pub fn hopenhayn_prescott_condition(
    poset: &Poset,
    p: &MarkovKernel,
    pivot: usize,
    m: usize,
) -> Result<bool> {
    p.check_on(poset)?;
    let (Some(a), Some(b)) = (poset.least(), poset.greatest()) else {
        return Ok(false);
    };
    let pm = compose(p, m)?;
    let up: f64 = poset.above(pivot).map(|z| pm.get(a, z)).sum();
    let down: f64 = poset.below(pivot).map(|z| pm.get(b, z)).sum();
    Ok(up > 0.0 && down > 0.0)
}

/// A kernel given as a mixture of deterministic maps: `P(x, ·) = Σ w_k δ_{f_k(x)}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapMixture {
    pub maps: Vec<(f64, Vec<usize>)>,
}

impl MapMixture {
    pub fn to_kernel(&self, n: usize) -> Result<MarkovKernel> {
        let mut rows = vec![vec![0.0; n]; n];
        for (w, f) in &self.maps {
            if f.len() != n {
                return Err(Error::DimMismatch(f.len(), n));
            }
            for (x, &fx) in f.iter().enumerate() {
                if fx >= n {
                    return Err(Error::Index { index: fx, len: n });
                }
                rows[x][fx] += w;
            }
        }
        MarkovKernel::new(rows)
    }

    pub fn maps_are_monotone(&self, poset: &Poset) -> bool {
        self.maps
            .iter()
            .all(|(_, f)| poset.covers().iter().all(|&(x, y)| poset.leq(f[x], f[y])))
    }

    /// `(s1, s2)`: weight of maps sending every state below `pivot`, and above it.
    pub fn split_probabilities(&self, poset: &Poset, pivot: usize) -> (f64, f64) {
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for (w, f) in &self.maps {
            if f.iter().all(|&z| poset.leq(z, pivot)) {
                s1 += w;
            }
            if f.iter().all(|&z| poset.leq(pivot, z)) {
                s2 += w;
            }
        }
        (s1, s2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_state() -> MarkovKernel {
        MarkovKernel::new(vec![vec![0.7, 0.3], vec![0.2, 0.8]]).unwrap()
    }

    #[test]
    fn apply_examples() {
        let p = two_state();
        assert_eq!(
            apply(&Measure::dirac(2, 1), &p).unwrap().weights(),
            p.row(1)
        );
        let mu = Measure::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(apply(&mu, &MarkovKernel::identity(2)).unwrap(), mu);
        let out = apply(&mu, &p).unwrap();
        assert_abs_diff_eq!(out.weights()[0], 0.45, epsilon = 1e-15);
        assert_abs_diff_eq!(out.weights()[1], 0.55, epsilon = 1e-15);
        assert_abs_diff_eq!(out.mass(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn compose_examples() {
        let p = two_state();
        assert_eq!(compose(&p, 1).unwrap(), p);
        let i = MarkovKernel::identity(3);
        assert_eq!(compose(&i, 5).unwrap(), i);
        let p2 = compose(&p, 2).unwrap();
        assert_abs_diff_eq!(p2.get(0, 0), 0.55, epsilon = 1e-15);
        assert_abs_diff_eq!(p2.get(0, 1), 0.45, epsilon = 1e-15);
        let p5 = compose(&p, 5).unwrap();
        let mut manual = p.clone();
        for _ in 1..5 {
            manual = manual.matmul(&p);
        }
        for x in 0..2 {
            for y in 0..2 {
                assert_abs_diff_eq!(p5.get(x, y), manual.get(x, y), epsilon = 1e-15);
            }
        }
        assert!(compose(&p, 0).is_err());
    }

    #[test]
    fn joint_examples() {
        let p = two_state();
        let j = joint(&Measure::dirac(2, 1), &p).unwrap();
        assert_eq!(j.weights(), &[0.0, 0.0, 0.2, 0.8]);
        let mu = Measure::new(vec![0.4, 0.6]).unwrap();
        assert_abs_diff_eq!(joint(&mu, &p).unwrap().mass(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn monotonicity() {
        let chain = Poset::chain(2);
        assert!(is_monotone(&chain, &two_state()));
        let swapped = MarkovKernel::new(vec![vec![0.2, 0.8], vec![0.7, 0.3]]).unwrap();
        assert_eq!(
            check_monotone(&chain, &swapped),
            Err(Error::NotMonotone(0, 1))
        );
        assert!(is_monotone(&Poset::antichain(2), &swapped));
    }

    #[test]
    fn sigma_examples() {
        let chain = Poset::chain(2);
        let (s, x, y) = sigma_with_witness(&chain, &two_state()).unwrap();
        assert_abs_diff_eq!(s, 0.5, epsilon = 1e-12);
        assert_eq!((x, y), (1, 0));
        assert_eq!(
            sigma(&Poset::antichain(2), &MarkovKernel::identity(2)).unwrap(),
            0.0
        );
    }

    #[test]
    fn stationary_two_state() {
        let chain = Poset::chain(2);
        let cert = stationary(&chain, &two_state(), 5).unwrap();
        assert_eq!(cert.m, 1);
        assert_abs_diff_eq!(cert.sigma_m, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(cert.rate, 0.5, epsilon = 1e-12);
        // linear solve: π0 = 0.7 π0 + 0.2 π1 with π0 + π1 = 1
        let pi0 = 0.2 / (0.3 + 0.2);
        assert_abs_diff_eq!(cert.stationary.weights()[0], pi0, epsilon = 1e-9);
        assert_abs_diff_eq!(cert.stationary.weights()[1], 1.0 - pi0, epsilon = 1e-9);
        assert!(cert.residual <= RESIDUAL_BOUND);
    }

    #[test]
    fn stationary_identity_has_no_certificate() {
        let anti = Poset::antichain(3);
        assert_eq!(
            stationary(&anti, &MarkovKernel::identity(3), 4),
            Err(Error::NoCertificate(4))
        );
    }

    #[test]
    fn contraction_two_state_is_tight_on_diracs() {
        let chain = Poset::chain(2);
        let p = two_state();
        let before = gamma(&chain, &Measure::dirac(2, 0), &Measure::dirac(2, 1)).unwrap();
        let after = gamma(&chain, &p.row_measure(0), &p.row_measure(1)).unwrap();
        assert_abs_diff_eq!(before, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(after, 0.5, epsilon = 1e-12);
        let rep = contraction_check(&chain, &p, 200, 3).unwrap();
        assert!(rep.observed <= 0.5 + 1e-9);
        assert!(rep.observed >= 0.5 - 1e-9);
        let w = tightness_witness(&chain, &p).unwrap().unwrap();
        assert_eq!((w.x, w.y), (1, 0));
        assert_abs_diff_eq!(w.ratio, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn identity_kernel_checks() {
        let chain = Poset::chain(3);
        let i = MarkovKernel::identity(3);
        let rep = nonexpansiveness_check(&chain, &i, 100, 1).unwrap();
        assert_abs_diff_eq!(rep.observed, 1.0, epsilon = 1e-9);
        let rep = contraction_check(&chain, &i, 50, 1).unwrap();
        assert_eq!(rep.sigma, 0.0);
        let rep = sigma_measure_pairs_check(&chain, &i, 50, 1).unwrap();
        assert_eq!(rep.sigma, 0.0);
    }

    #[test]
    fn measure_pairs_never_beat_sigma() {
        let chain = Poset::chain(2);
        let rep = sigma_measure_pairs_check(&chain, &two_state(), 200, 9).unwrap();
        assert!(rep.observed >= 0.5 - 1e-9);
    }

    #[test]
    fn non_monotone_rejected_by_checks() {
        let chain = Poset::chain(2);
        let swapped = MarkovKernel::new(vec![vec![0.2, 0.8], vec![0.7, 0.3]]).unwrap();
        assert!(matches!(
            contraction_check(&chain, &swapped, 10, 0),
            Err(Error::NotMonotone(..))
        ));
        assert!(matches!(
            stationary(&chain, &swapped, 3),
            Err(Error::NotMonotone(..))
        ));
    }

    #[test]
    fn bad_rows() {
        assert!(matches!(
            MarkovKernel::new(vec![vec![0.5, 0.4], vec![0.5, 0.5]]),
            Err(Error::BadRow { row: 0, .. })
        ));
        assert!(MarkovKernel::new(vec![vec![1.0]; 2]).is_err());
    }

    #[test]
    fn map_mixture_split() {
        let chain = Poset::chain(3);
        let mix = MapMixture {
            maps: vec![
                (0.25, vec![0, 0, 0]),
                (0.25, vec![2, 2, 2]),
                (0.5, vec![0, 1, 2]),
            ],
        };
        assert!(mix.maps_are_monotone(&chain));
        assert_eq!(mix.split_probabilities(&chain, 1), (0.25, 0.25));
        let p = mix.to_kernel(3).unwrap();
        assert!(is_monotone(&chain, &p));
        assert!(hopenhayn_prescott_condition(&chain, &p, 1, 1).unwrap());
        assert!(!hopenhayn_prescott_condition(&chain, &MarkovKernel::identity(3), 1, 1).unwrap());
    }
}
