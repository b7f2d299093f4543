//! Ordered affinity and the metrics built on it.
//!
//! Everything here reduces to one transportation problem on the order graph:
//! ship as much of μ as possible to ν, moving mass only upwards. The network
//! has one node per element, `source → x` with capacity μ(x), `x → sink` with
//! capacity ν(x), and an uncapacitated arc along every generating cover of the
//! poset. Reachability along covers is exactly `⪯`, so a unit of flow entering
//! at `x` and leaving at `y` pairs `x` with some `y ⪰ x`.
//!
//! The source side of a minimum cut is closed under the uncapacitated arcs,
//! hence an up-set `I`, and its capacity is `μ(S∖I) + ν(I)`. The maximum flow
//! therefore equals `μ(S) − max_I {μ(I) − ν(I)}`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maxflow::{max_flow, FlowNetwork};
use crate::measure::{check_dims, Measure, SignedDiff, TOL};
use crate::poset::{ElementSet, Poset};

/// Optimal order-respecting transport between two measures.
#[derive(Clone, Debug)]
pub struct OrderedTransport {
    /// Transported mass, i.e. α_O(μ, ν).
    pub value: f64,
    /// Mass moved from `x` to `y` (`x ⪯ y`), sorted by `(x, y)`.
    pub pairs: Vec<(usize, usize, f64)>,
    /// Smallest up-set maximizing μ(I) − ν(I).
    pub witness: ElementSet,
}

impl OrderedTransport {
    /// Transported mass leaving each element.
    pub fn source_part(&self, n: usize) -> Vec<f64> {
        let mut w = vec![0.0; n];
        for &(x, _, m) in &self.pairs {
            w[x] += m;
        }
        w
    }

    /// Transported mass arriving at each element.
    pub fn target_part(&self, n: usize) -> Vec<f64> {
        let mut w = vec![0.0; n];
        for &(_, y, m) in &self.pairs {
            w[y] += m;
        }
        w
    }
}

/// Solves the transport problem; pairs are decomposed only if `decompose`.
pub fn ordered_transport(
    poset: &Poset,
    mu: &Measure,
    nu: &Measure,
    decompose: bool,
) -> Result<OrderedTransport> {
    mu.check_on(poset)?;
    nu.check_on(poset)?;
    let n = poset.len();
    let (s, t) = (n, n + 1);
    let mut net = FlowNetwork::new(n + 2, s, t);
    let mut src_arc = vec![None; n];
    let mut snk_arc = vec![None; n];
    for x in 0..n {
        if mu.weights()[x] > 0.0 {
            src_arc[x] = Some(net.add_arc(s, x, mu.weights()[x]));
        }
        if nu.weights()[x] > 0.0 {
            snk_arc[x] = Some(net.add_arc(x, t, nu.weights()[x]));
        }
    }
    let first_cover = net.arcs.len();
    for &(x, y) in poset.covers() {
        net.add_arc(x, y, f64::INFINITY);
    }
    let flow = max_flow(&net)?;
    let witness = ElementSet(flow.min_cut[..n].to_vec());
    let value = flow.value.clamp(0.0, mu.mass().min(nu.mass()));

    let pairs = if decompose {
        let src: Vec<f64> = src_arc
            .iter()
            .map(|a| a.map_or(0.0, |k| flow.flows[k]))
            .collect();
        let snk: Vec<f64> = snk_arc
            .iter()
            .map(|a| a.map_or(0.0, |k| flow.flows[k]))
            .collect();
        let mut out_arcs: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        let mut cover_flow = Vec::with_capacity(poset.covers().len());
        for (k, &(x, y)) in poset.covers().iter().enumerate() {
            out_arcs[x].push((k, y));
            cover_flow.push(flow.flows[first_cover + k]);
        }
        decompose_paths(poset, src, snk, &out_arcs, cover_flow)
    } else {
        Vec::new()
    };
    Ok(OrderedTransport {
        value,
        pairs,
        witness,
    })
}

/// Splits an acyclic flow into source-to-sink paths and records each path's
/// endpoints. Every step zeroes at least one arc exactly, so this terminates.
fn decompose_paths(
    poset: &Poset,
    mut src: Vec<f64>,
    mut snk: Vec<f64>,
    out_arcs: &[Vec<(usize, usize)>],
    mut cover_flow: Vec<f64>,
) -> Vec<(usize, usize, f64)> {
    let n = src.len();
    let mut next = vec![0usize; n];
    let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut path: Vec<usize> = Vec::new();
    for &x in poset.topological_order() {
        while src[x] > 0.0 {
            path.clear();
            let mut u = x;
            let mut b = src[x];
            let end = loop {
                if snk[u] > 0.0 {
                    break Some(u);
                }
                while next[u] < out_arcs[u].len() && cover_flow[out_arcs[u][next[u]].0] <= 0.0 {
                    next[u] += 1;
                }
                match out_arcs[u].get(next[u]) {
                    Some(&(k, v)) => {
                        b = b.min(cover_flow[k]);
                        path.push(k);
                        u = v;
                    }
                    None => break None,
                }
            };
            let Some(y) = end else {
                // rounding residue with nowhere to go
                src[x] = 0.0;
                break;
            };
            b = b.min(snk[y]);
            src[x] -= b;
            snk[y] -= b;
            for &k in &path {
                cover_flow[k] -= b;
            }
            *acc.entry((x, y)).or_insert(0.0) += b;
        }
    }
    acc.into_iter()
        .filter(|&(_, m)| m > 0.0)
        .map(|((x, y), m)| (x, y, m))
        .collect()
}

/// sup over up-sets of `a(I) − b(I)` together with the smallest maximizer.
/// No mass condition; ∅ always contributes 0.
pub fn upset_sup(poset: &Poset, a: &Measure, b: &Measure) -> Result<(f64, ElementSet)> {
    let tr = ordered_transport(poset, a, b, false)?;
    let value = (a.measure_of(&tr.witness) - b.measure_of(&tr.witness)).max(0.0);
    Ok((value, tr.witness))
}

/// max over increasing `I` of μ(I) − ν(I), with a maximizing up-set.
pub fn max_upset_deficiency(
    poset: &Poset,
    mu: &Measure,
    nu: &Measure,
) -> Result<(f64, ElementSet)> {
    check_dims(mu, nu)?;
    if (mu.mass() - nu.mass()).abs() > TOL {
        return Err(Error::MassMismatch(mu.mass(), nu.mass()));
    }
    upset_sup(poset, mu, nu)
}

/// α_O(μ, ν): the largest mass of an ordered component pair.
pub fn ordered_affinity(poset: &Poset, mu: &Measure, nu: &Measure) -> Result<f64> {
    Ok(ordered_transport(poset, mu, nu, false)?.value)
}

/// `‖μ‖ − α_O(μ, ν)`, the mass of μ that cannot be matched upwards into ν.
pub fn ordered_shortfall(poset: &Poset, mu: &Measure, nu: &Measure) -> Result<f64> {
    Ok((mu.mass() - ordered_affinity(poset, mu, nu)?).max(0.0))
}

/// `(μ′, ν′)` with `μ′ ≤ μ`, `ν′ ≤ ν` and `μ′ ⪯_sd ν′`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComponentPair {
    pub mu_part: Measure,
    pub nu_part: Measure,
}

impl ComponentPair {
    pub fn mass(&self) -> f64 {
        self.mu_part.mass()
    }

    /// Residuals `(μ − μ′, ν − ν′)`.
    pub fn residuals(&self, mu: &Measure, nu: &Measure) -> Result<(Measure, Measure)> {
        Ok((mu.sub(&self.mu_part)?, nu.sub(&self.nu_part)?))
    }

    /// Checks the defining conditions against the parent pair.
    pub fn is_valid_for(&self, poset: &Poset, mu: &Measure, nu: &Measure, tol: f64) -> bool {
        self.mu_part.le(mu, tol)
            && self.nu_part.le(nu, tol)
            && (self.mu_part.mass() - self.nu_part.mass()).abs() <= tol
            && upset_sup(poset, &self.mu_part, &self.nu_part)
                .map(|(v, _)| v <= tol)
                .unwrap_or(false)
    }
}

/// A maximal ordered component pair, read off the optimal transport.
pub fn maximal_ordered_component_pair(
    poset: &Poset,
    mu: &Measure,
    nu: &Measure,
) -> Result<ComponentPair> {
    let n = poset.len();
    let tr = ordered_transport(poset, mu, nu, true)?;
    let clamp = |w: Vec<f64>, cap: &Measure| -> Measure {
        Measure::from_raw(
            w.into_iter()
                .zip(cap.weights())
                .map(|(a, &c)| a.clamp(0.0, c))
                .collect(),
        )
    };
    Ok(ComponentPair {
        mu_part: clamp(tr.source_part(n), mu),
        nu_part: clamp(tr.target_part(n), nu),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FunctionRange {
    /// Values in `[0, 1]`.
    Unit,
    /// Values in `[-1, 1]`.
    Symmetric,
}

/// An increasing function on the poset with a bounded range.
#[derive(Clone, Debug, PartialEq)]
pub struct IncreasingFunction {
    pub values: Vec<f64>,
    pub range: FunctionRange,
}

impl IncreasingFunction {
    pub fn is_increasing(&self, poset: &Poset) -> bool {
        poset
            .covers()
            .iter()
            .all(|&(x, y)| self.values[x] <= self.values[y])
    }

    pub fn in_range(&self) -> bool {
        let lo = match self.range {
            FunctionRange::Unit => 0.0,
            FunctionRange::Symmetric => -1.0,
        };
        self.values.iter().all(|v| (lo..=1.0).contains(v))
    }
}

/// sup of λ(h) over increasing `h` with the given range, and a maximizer.
///
/// The unit-range supremum is attained by the indicator of the best up-set.
/// The symmetric range is supported only when λ(S) = 0, where the answer is
/// twice the unit-range value, attained by `2·1_I − 1`.
pub fn sup_increasing_function(
    poset: &Poset,
    lambda: &SignedDiff,
    range: FunctionRange,
) -> Result<(f64, IncreasingFunction)> {
    let (value, witness) = upset_sup(poset, &lambda.plus, &lambda.minus)?;
    let indicator = witness.0.iter().map(|&b| if b { 1.0 } else { 0.0 });
    match range {
        FunctionRange::Unit => Ok((
            value,
            IncreasingFunction {
                values: indicator.collect(),
                range,
            },
        )),
        FunctionRange::Symmetric => {
            if lambda.total().abs() > TOL {
                return Err(Error::MassMismatch(lambda.plus.mass(), lambda.minus.mass()));
            }
            Ok((
                2.0 * value,
                IncreasingFunction {
                    values: indicator.map(|v| 2.0 * v - 1.0).collect(),
                    range,
                },
            ))
        }
    }
}

fn require_probability(m: &Measure) -> Result<()> {
    if !m.is_probability() {
        return Err(Error::NotProbability(m.mass()));
    }
    Ok(())
}

/// Total ordered variation γ(μ, ν) = 2 − α_O(μ, ν) − α_O(ν, μ).
pub fn gamma(poset: &Poset, mu: &Measure, nu: &Measure) -> Result<f64> {
    check_dims(mu, nu)?;
    require_probability(mu)?;
    require_probability(nu)?;
    let forward = ordered_affinity(poset, mu, nu)?;
    let backward = ordered_affinity(poset, nu, mu)?;
    Ok((2.0 - forward - backward).max(0.0))
}

/// Bhattacharya metric: sup of |μ(h) − ν(h)| over increasing `h` with values in `[-1, 1]`.
pub fn beta(poset: &Poset, mu: &Measure, nu: &Measure) -> Result<f64> {
    check_dims(mu, nu)?;
    require_probability(mu)?;
    require_probability(nu)?;
    let (up, _) = max_upset_deficiency(poset, mu, nu)?;
    let (down, _) = max_upset_deficiency(poset, nu, mu)?;
    Ok(2.0 * up.max(down))
}
