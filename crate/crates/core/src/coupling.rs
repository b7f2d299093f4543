//! Couplings: maximal, order-maximal and the coupled kernel that keeps
//! ordered pairs ordered.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{apply_n, check_monotone, MarkovKernel};
use crate::measure::{check_dims, inf_measure, Measure, TOL};
use crate::ordaff::{gamma, ordered_transport};
use crate::poset::Poset;
use crate::random;

/// Residual mass below this is dropped from factored couplings.
const RESIDUAL_FLOOR: f64 = 1e-12;

/// Dense joint distribution with its intended marginals.
#[derive(Clone, Debug, PartialEq)]
pub struct Coupling {
    n: usize,
    joint: Vec<f64>,
    pub row_target: Measure,
    pub col_target: Measure,
}

impl Coupling {
    pub fn new(joint: Vec<Vec<f64>>, row_target: Measure, col_target: Measure) -> Result<Self> {
        let n = joint.len();
        check_dims(&row_target, &col_target)?;
        if row_target.len() != n {
            return Err(Error::DimMismatch(n, row_target.len()));
        }
        let mut flat = Vec::with_capacity(n * n);
        for (i, row) in joint.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimMismatch(row.len(), n));
            }
            for (j, v) in row.into_iter().enumerate() {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::BadWeight {
                        index: i * n + j,
                        value: v,
                    });
                }
                flat.push(v);
            }
        }
        Ok(Coupling {
            n,
            joint: flat,
            row_target,
            col_target,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.joint[x * self.n + y]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.joint
            .chunks(self.n.max(1))
            .map(<[f64]>::to_vec)
            .collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|x| (0..self.n).map(|y| self.get(x, y)).sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|y| (0..self.n).map(|x| self.get(x, y)).sum())
            .collect()
    }

    /// Largest deviation of either marginal from its target.
    pub fn marginal_error(&self) -> f64 {
        let r = self
            .row_sums()
            .iter()
            .zip(self.row_target.weights())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let c = self
            .col_sums()
            .iter()
            .zip(self.col_target.weights())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        r.max(c)
    }

    /// P{X ⪯ Y}
    pub fn ordered_mass(&self, poset: &Poset) -> f64 {
        let n = self.n;
        (0..n)
            .flat_map(|x| poset.above(x).map(move |y| (x, y)))
            .map(|(x, y)| self.get(x, y))
            .sum()
    }

    /// P{X = Y}
    pub fn diagonal_mass(&self) -> f64 {
        (0..self.n).map(|x| self.get(x, x)).sum()
    }
}

/// A coupling stored as an explicit list of ordered pairs plus an independent
/// residual block `residual_row ⊗ residual_col / residual mass`.
#[derive(Clone, Debug, PartialEq)]
pub struct FactoredCoupling {
    n: usize,
    pairs: Vec<(usize, usize, f64)>,
    residual_row: Vec<f64>,
    residual_col: Vec<f64>,
    cum_pairs: Vec<f64>,
    cum_row: Vec<f64>,
    cum_col: Vec<f64>,
}

fn cumulative(w: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    w.map(|v| {
        acc += v;
        acc
    })
    .collect()
}

fn pick(cum: &[f64], u: f64) -> usize {
    cum.partition_point(|&c| c <= u).min(cum.len() - 1)
}

impl FactoredCoupling {
    fn new(
        n: usize,
        pairs: Vec<(usize, usize, f64)>,
        mut row: Vec<f64>,
        mut col: Vec<f64>,
    ) -> Self {
        let rm: f64 = row.iter().sum();
        let cm: f64 = col.iter().sum();
        if rm.min(cm) < RESIDUAL_FLOOR {
            row.iter_mut().for_each(|v| *v = 0.0);
            col.iter_mut().for_each(|v| *v = 0.0);
        }
        let cum_pairs = cumulative(pairs.iter().map(|p| p.2));
        let cum_row = cumulative(row.iter().copied());
        let cum_col = cumulative(col.iter().copied());
        FactoredCoupling {
            n,
            pairs,
            residual_row: row,
            residual_col: col,
            cum_pairs,
            cum_row,
            cum_col,
        }
    }

    /// Pairs carried by the transport part, sorted row-major.
    pub fn pairs(&self) -> &[(usize, usize, f64)] {
        &self.pairs
    }

    pub fn pair_mass(&self) -> f64 {
        self.cum_pairs.last().copied().unwrap_or(0.0)
    }

    pub fn residual_mass(&self) -> f64 {
        self.cum_row.last().copied().unwrap_or(0.0)
    }

    pub fn residual_row(&self) -> &[f64] {
        &self.residual_row
    }

    pub fn residual_col(&self) -> &[f64] {
        &self.residual_col
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut joint = vec![0.0; n * n];
        for &(x, y, m) in &self.pairs {
            joint[x * n + y] += m;
        }
        let rm = self.residual_mass();
        if rm > 0.0 {
            for (x, &a) in self.residual_row.iter().enumerate() {
                if a > 0.0 {
                    for (y, &b) in self.residual_col.iter().enumerate() {
                        joint[x * n + y] += a * b / rm;
                    }
                }
            }
        }
        joint
    }

    pub fn into_coupling(self, mu: &Measure, nu: &Measure) -> Coupling {
        let joint = self.to_dense();
        Coupling {
            n: self.n,
            joint,
            row_target: mu.clone(),
            col_target: nu.clone(),
        }
    }

    /// Draws a pair by inverse CDF: transport pairs first in row-major
    /// order, then the residual block as two independent draws.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> (usize, usize) {
        let pm = self.pair_mass();
        let total = pm + self.residual_mass();
        let u = rng.gen::<f64>() * total;
        if u < pm || self.residual_mass() == 0.0 {
            let (x, y, _) = self.pairs[pick(&self.cum_pairs, u)];
            return (x, y);
        }
        let x = pick(&self.cum_row, rng.gen::<f64>() * self.residual_mass());
        let cm = self.cum_col.last().copied().unwrap_or(0.0);
        let y = pick(&self.cum_col, rng.gen::<f64>() * cm);
        (x, y)
    }
}

/// Coupling maximizing P{X = Y}: μ ∧ ν on the diagonal, independent residuals.
pub fn maximal_coupling(mu: &Measure, nu: &Measure) -> Result<Coupling> {
    check_dims(mu, nu)?;
    let n = mu.len();
    let common = inf_measure(mu, nu)?;
    let pairs = (0..n)
        .filter(|&x| common.weights()[x] > 0.0)
        .map(|x| (x, x, common.weights()[x]))
        .collect();
    let row = mu.sub(&common)?.into_weights();
    let col = nu.sub(&common)?.into_weights();
    Ok(FactoredCoupling::new(n, pairs, row, col).into_coupling(mu, nu))
}

/// Coupling maximizing P{X ⪯ Y}, in factored form.
pub fn order_maximal_factored(
    poset: &Poset,
    mu: &Measure,
    nu: &Measure,
) -> Result<FactoredCoupling> {
    check_dims(mu, nu)?;
    if (mu.mass() - nu.mass()).abs() > TOL {
        return Err(Error::MassMismatch(mu.mass(), nu.mass()));
    }
    let n = poset.len();
    let tr = ordered_transport(poset, mu, nu, true)?;
    let residual = |part: Vec<f64>, whole: &Measure| -> Vec<f64> {
        whole
            .weights()
            .iter()
            .zip(part)
            .map(|(w, p)| (w - p).max(0.0))
            .collect()
    };
    let row = residual(tr.source_part(n), mu);
    let col = residual(tr.target_part(n), nu);
    Ok(FactoredCoupling::new(n, tr.pairs, row, col))
}

/// Coupling maximizing P{X ⪯ Y}; the maximum equals α_O(μ, ν).
pub fn order_maximal_coupling(poset: &Poset, mu: &Measure, nu: &Measure) -> Result<Coupling> {
    Ok(order_maximal_factored(poset, mu, nu)?.into_coupling(mu, nu))
}

/// Coupling supported on `{x ⪯ y}`; exists iff μ ⪯_sd ν.
pub fn nachbin_strassen_coupling(poset: &Poset, mu: &Measure, nu: &Measure) -> Result<Coupling> {
    let f = order_maximal_factored(poset, mu, nu)?;
    if f.residual_mass() > TOL || (mu.mass() - f.pair_mass()).abs() > TOL {
        return Err(Error::NotDominated);
    }
    Ok(f.into_coupling(mu, nu))
}

/// Kernel on `S × S` whose marginals both follow `P` and under which the
/// ordered pairs `{x ⪯ y}` are absorbing. Row `(x, y)` is stored at `x * n + y`.
#[derive(Clone, Debug)]
pub struct CoupledKernel {
    n: usize,
    rows: Vec<FactoredCoupling>,
}

impl CoupledKernel {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn row(&self, x: usize, y: usize) -> &FactoredCoupling {
        &self.rows[x * self.n + y]
    }

    /// Row `(x, y)` as a dense `n × n` joint.
    pub fn row_dense(&self, x: usize, y: usize) -> Vec<f64> {
        self.row(x, y).to_dense()
    }

    /// Largest deviation of a row's projections from `P(x, ·)` and `P(y, ·)`.
    pub fn marginal_error(&self, p: &MarkovKernel) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for x in 0..n {
            for y in 0..n {
                let d = self.row_dense(x, y);
                for z in 0..n {
                    let first: f64 = (0..n).map(|w| d[z * n + w]).sum();
                    let second: f64 = (0..n).map(|w| d[w * n + z]).sum();
                    worst = worst
                        .max((first - p.get(x, z)).abs())
                        .max((second - p.get(y, z)).abs());
                }
            }
        }
        worst
    }

    /// True iff every row from an ordered pair puts all its mass on ordered pairs.
    pub fn is_absorbing(&self, poset: &Poset) -> bool {
        let n = self.n;
        (0..n).all(|x| {
            poset.above(x).all(|y| {
                let r = self.row(x, y);
                r.residual_mass() == 0.0 && r.pairs().iter().all(|&(a, b, _)| poset.leq(a, b))
            })
        })
    }
}

/// Every row is an order-maximal coupling of `(P_x, P_y)`. For `x ⪯ y`,
/// monotonicity makes that coupling live entirely on ordered pairs.
pub fn absorbing_coupled_kernel(poset: &Poset, p: &MarkovKernel) -> Result<CoupledKernel> {
    check_monotone(poset, p)?;
    let n = p.len();
    let rows: Vec<Measure> = (0..n).map(|x| p.row_measure(x)).collect();
    let built: Vec<Result<FactoredCoupling>> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (x, y) = (k / n, k % n);
            let f = order_maximal_factored(poset, &rows[x], &rows[y])?;
            if poset.leq(x, y) && f.residual_mass() > 0.0 {
                return Err(Error::NotMonotone(x, y));
            }
            Ok(f)
        })
        .collect();
    Ok(CoupledKernel {
        n,
        rows: built.into_iter().collect::<Result<_>>()?,
    })
}

/// Counts from [`simulate_coupled_chain`], indexed by time `0..=horizon`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoupledSimulation {
    pub horizon: usize,
    pub replications: u64,
    /// Paths from `(x0, y0)` with `X_j ⋠ Y_j` for every `j ≤ t`.
    pub never_leq: Vec<u64>,
    /// Paths from `(y0, x0)` (roles swapped) with `Y_j ⋠ X_j` for every `j ≤ t`.
    pub never_geq: Vec<u64>,
    /// Paths where "never ordered up to t" and "not ordered at t" disagreed.
    pub oia_mismatches: u64,
}

impl CoupledSimulation {
    /// Sample frequency with an Agresti–Coull standard error, which stays
    /// positive when no path (or every path) hits the event.
    fn estimate(&self, count: u64) -> (f64, f64) {
        let r = self.replications as f64;
        let adj_n = r + 4.0;
        let adj_p = (count as f64 + 2.0) / adj_n;
        (count as f64 / r, (adj_p * (1.0 - adj_p) / adj_n).sqrt())
    }

    /// `(estimate, standard error)` of P{X_j ⋠ Y_j for all j ≤ t}.
    pub fn p_never_leq(&self, t: usize) -> (f64, f64) {
        self.estimate(self.never_leq[t])
    }

    /// `(estimate, standard error)` of P{Y_j ⋠ X_j for all j ≤ t}.
    pub fn p_never_geq(&self, t: usize) -> (f64, f64) {
        self.estimate(self.never_geq[t])
    }
}

#[derive(Default)]
struct Tally {
    never: Vec<u64>,
    mismatches: u64,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        if self.never.is_empty() {
            return other;
        }
        for (a, b) in self.never.iter_mut().zip(&other.never) {
            *a += b;
        }
        self.mismatches += other.mismatches;
        self
    }
}

fn run_path(
    poset: &Poset,
    m: &CoupledKernel,
    start: (usize, usize),
    horizon: usize,
    rng: &mut random::StdRng,
    tally: &mut Tally,
) {
    let (mut x, mut y) = start;
    let mut ever = poset.leq(x, y);
    for t in 0..=horizon {
        if t > 0 {
            (x, y) = m.row(x, y).sample(rng);
            ever |= poset.leq(x, y);
        }
        if !ever {
            tally.never[t] += 1;
        }
        if ever == !poset.leq(x, y) {
            tally.mismatches += 1;
        }
    }
}

/// Monte Carlo estimate of the never-ordered probabilities under `m`.
///
/// Replication `r` uses stream `2r` from `(x0, y0)` and stream `2r + 1` from
/// `(y0, x0)`, so results do not depend on thread count.
pub fn simulate_coupled_chain(
    poset: &Poset,
    m: &CoupledKernel,
    x0: usize,
    y0: usize,
    horizon: usize,
    replications: u64,
    seed: u64,
) -> Result<CoupledSimulation> {
    let n = m.len();
    if poset.len() != n {
        return Err(Error::DimMismatch(poset.len(), n));
    }
    for s in [x0, y0] {
        if s >= n {
            return Err(Error::Index { index: s, len: n });
        }
    }
    if replications == 0 {
        return Err(Error::BadParams("replications must be positive".into()));
    }
    let fresh = || Tally {
        never: vec![0; horizon + 1],
        mismatches: 0,
    };
    let (fwd, bwd) = (0..replications)
        .into_par_iter()
        .fold(
            || (fresh(), fresh()),
            |(mut f, mut b), r| {
                let mut rng = random::rng_stream(seed, 2 * r);
                run_path(poset, m, (x0, y0), horizon, &mut rng, &mut f);
                let mut rng = random::rng_stream(seed, 2 * r + 1);
                run_path(poset, m, (y0, x0), horizon, &mut rng, &mut b);
                (f, b)
            },
        )
        .reduce(
            || (Tally::default(), Tally::default()),
            |(f1, b1), (f2, b2)| (f1.merge(f2), b1.merge(b2)),
        );
    Ok(CoupledSimulation {
        horizon,
        replications,
        never_leq: fwd.never,
        never_geq: bwd.never,
        oia_mismatches: fwd.mismatches + bwd.mismatches,
    })
}

/// One row of the order coupling bound table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundRow {
    pub t: usize,
    pub p_never_leq: f64,
    pub p_never_geq: f64,
    pub se_leq: f64,
    pub se_geq: f64,
    /// Exact γ(δ_{x0} P^t, δ_{y0} P^t).
    pub gamma_exact: f64,
    /// Estimated right-hand side `p_never_leq + p_never_geq`.
    pub bound: f64,
}

impl BoundRow {
    /// Combined standard error of `bound`.
    pub fn bound_se(&self) -> f64 {
        self.se_leq.hypot(self.se_geq)
    }
}

/// Exact γ of the two marginal laws next to the simulated coupling bound.
pub fn order_coupling_bound_table(
    poset: &Poset,
    p: &MarkovKernel,
    x0: usize,
    y0: usize,
    horizon: usize,
    replications: u64,
    seed: u64,
) -> Result<(Vec<BoundRow>, CoupledSimulation)> {
    let m = absorbing_coupled_kernel(poset, p)?;
    let sim = simulate_coupled_chain(poset, &m, x0, y0, horizon, replications, seed)?;
    let n = p.len();
    let mut mu = Measure::dirac(n, x0);
    let mut nu = Measure::dirac(n, y0);
    let mut rows = Vec::with_capacity(horizon + 1);
    for t in 0..=horizon {
        if t > 0 {
            mu = apply_n(&mu, p, 1)?;
            nu = apply_n(&nu, p, 1)?;
        }
        let (pl, sl) = sim.p_never_leq(t);
        let (pg, sg) = sim.p_never_geq(t);
        rows.push(BoundRow {
            t,
            p_never_leq: pl,
            p_never_geq: pg,
            se_leq: sl,
            se_geq: sg,
            gamma_exact: gamma(poset, &mu, &nu)?,
            bound: pl + pg,
        });
    }
    Ok((rows, sim))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ordaff::ordered_affinity;
    use approx::assert_abs_diff_eq;

    fn m(w: &[f64]) -> Measure {
        Measure::new(w.to_vec()).unwrap()
    }

    fn two_state() -> MarkovKernel {
        MarkovKernel::new(vec![vec![0.7, 0.3], vec![0.2, 0.8]]).unwrap()
    }

    #[test]
    fn maximal_coupling_examples() {
        let mu = m(&[0.5, 0.5]);
        let c = maximal_coupling(&mu, &mu).unwrap();
        assert_abs_diff_eq!(c.diagonal_mass(), 1.0, epsilon = 1e-15);
        let c = maximal_coupling(&mu, &m(&[0.3, 0.7])).unwrap();
        assert_abs_diff_eq!(c.diagonal_mass(), 0.8, epsilon = 1e-15);
        assert!(c.marginal_error() < 1e-15);
        let c = maximal_coupling(&Measure::dirac(2, 0), &Measure::dirac(2, 1)).unwrap();
        assert_eq!(c.diagonal_mass(), 0.0);
        assert!(c.marginal_error() < 1e-15);
    }

    #[test]
    fn order_maximal_examples() {
        let chain = Poset::chain(3);
        let lo = m(&[0.5, 0.5, 0.0]);
        let hi = m(&[0.0, 0.5, 0.5]);
        let c = order_maximal_coupling(&chain, &lo, &hi).unwrap();
        assert_abs_diff_eq!(c.ordered_mass(&chain), 1.0, epsilon = 1e-12);
        let c = order_maximal_coupling(&chain, &hi, &lo).unwrap();
        assert_abs_diff_eq!(c.ordered_mass(&chain), 0.5, epsilon = 1e-12);
        assert!(c.marginal_error() < 1e-12);

        let anti = Poset::antichain(2);
        let (a, b) = (m(&[0.5, 0.5]), m(&[0.3, 0.7]));
        let c = order_maximal_coupling(&anti, &a, &b).unwrap();
        assert_abs_diff_eq!(c.ordered_mass(&anti), 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(c.diagonal_mass(), 0.8, epsilon = 1e-12);
    }

    #[test]
    fn nachbin_strassen_examples() {
        let chain = Poset::chain(3);
        let lo = m(&[0.5, 0.5, 0.0]);
        let hi = m(&[0.0, 0.5, 0.5]);
        let c = nachbin_strassen_coupling(&chain, &lo, &hi).unwrap();
        assert_abs_diff_eq!(c.ordered_mass(&chain), 1.0, epsilon = 1e-12);
        let c = nachbin_strassen_coupling(&chain, &lo, &lo).unwrap();
        assert_abs_diff_eq!(c.ordered_mass(&chain), 1.0, epsilon = 1e-12);
        let anti = Poset::antichain(2);
        assert_eq!(
            nachbin_strassen_coupling(&anti, &Measure::dirac(2, 0), &Measure::dirac(2, 1)),
            Err(Error::NotDominated)
        );
    }

    #[test]
    fn coupled_kernel_identity() {
        let anti = Poset::antichain(2);
        let k = absorbing_coupled_kernel(&anti, &MarkovKernel::identity(2)).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                let d = k.row_dense(x, y);
                assert_eq!(d[x * 2 + y], 1.0);
            }
        }
        assert!(k.is_absorbing(&anti));
    }

    #[test]
    fn coupled_kernel_two_state() {
        let chain = Poset::chain(2);
        let p = two_state();
        let k = absorbing_coupled_kernel(&chain, &p).unwrap();
        assert!(k.is_absorbing(&chain));
        assert!(k.marginal_error(&p) < 1e-12);
        let row = k.row_dense(0, 1);
        // (1, 0) is the only unordered pair
        assert_eq!(row[2], 0.0);
    }

    #[test]
    fn simulation_identity_kernel() {
        let chain = Poset::chain(3);
        let anti = Poset::antichain(2);
        let id3 = absorbing_coupled_kernel(&chain, &MarkovKernel::identity(3)).unwrap();
        let sim = simulate_coupled_chain(&chain, &id3, 0, 2, 5, 100, 1).unwrap();
        assert!(sim.never_leq.iter().all(|&c| c == 0));
        let id2 = absorbing_coupled_kernel(&anti, &MarkovKernel::identity(2)).unwrap();
        let sim = simulate_coupled_chain(&anti, &id2, 0, 1, 5, 100, 1).unwrap();
        assert!(sim.never_leq.iter().all(|&c| c == 100));
        assert!(sim.never_geq.iter().all(|&c| c == 100));
        assert_eq!(sim.oia_mismatches, 0);
    }

    #[test]
    fn simulation_two_state_first_step() {
        let chain = Poset::chain(2);
        let p = two_state();
        let k = absorbing_coupled_kernel(&chain, &p).unwrap();
        let sim = simulate_coupled_chain(&chain, &k, 1, 0, 3, 20_000, 42).unwrap();
        let (est, se) = sim.p_never_leq(1);
        let exact = 1.0 - ordered_affinity(&chain, &p.row_measure(1), &p.row_measure(0)).unwrap();
        assert_abs_diff_eq!(exact, 0.5, epsilon = 1e-12);
        assert!(
            (est - exact).abs() <= 3.0 * se,
            "{est} vs {exact} (se {se})"
        );
        assert_eq!(sim.oia_mismatches, 0);
    }

    #[test]
    fn simulation_is_deterministic() {
        let chain = Poset::chain(2);
        let k = absorbing_coupled_kernel(&chain, &two_state()).unwrap();
        let a = simulate_coupled_chain(&chain, &k, 1, 0, 10, 5000, 9).unwrap();
        let b = simulate_coupled_chain(&chain, &k, 1, 0, 10, 5000, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn simulation_rejects_bad_start() {
        let chain = Poset::chain(2);
        let k = absorbing_coupled_kernel(&chain, &two_state()).unwrap();
        assert!(simulate_coupled_chain(&chain, &k, 5, 0, 1, 10, 0).is_err());
    }
}
