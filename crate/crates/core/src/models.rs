//! Concrete chains: the Bernoulli averaging chain, a discretized inventory
//! chain and lattice kernels satisfying a splitting condition.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::formats::KernelFile;
use crate::kernel::{MapMixture, MarkovKernel};
use crate::measure::{affinity, Measure};
use crate::ordaff::gamma;
use crate::poset::Poset;

/// Largest supported dyadic depth `d + t`.
pub const MAX_DEPTH: u32 = 20;

/// Default number of quantile cells for the inventory shock.
pub const DEFAULT_SHOCK_CELLS: usize = 256;

/// A distribution on the dyadic grid `{k / 2^depth : 0 ≤ k ≤ 2^depth}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DyadicDistribution {
    pub depth: u32,
    /// Sorted, distinct numerators `k`.
    pub offsets: Vec<u64>,
    pub weights: Vec<f64>,
}

impl DyadicDistribution {
    pub fn points(&self) -> Vec<f64> {
        let scale = (1u64 << self.depth) as f64;
        self.offsets.iter().map(|&k| k as f64 / scale).collect()
    }

    /// Re-expresses the offsets at a finer depth.
    pub fn refine(&self, depth: u32) -> DyadicDistribution {
        assert!(depth >= self.depth);
        let shift = depth - self.depth;
        DyadicDistribution {
            depth,
            offsets: self.offsets.iter().map(|k| k << shift).collect(),
            weights: self.weights.clone(),
        }
    }
}

/// Law of `X_t` for `X_{s+1} = (X_s + W_{s+1}) / 2` with fair Bernoulli `W`,
/// started at `x0 = numerator / 2^exponent`.
pub fn bernoulli_exact_distribution(
    numerator: u64,
    exponent: u32,
    t: u32,
) -> Result<DyadicDistribution> {
    let depth = exponent.saturating_add(t);
    if depth > MAX_DEPTH {
        return Err(Error::DepthExceeded(depth, MAX_DEPTH));
    }
    if numerator > 1u64 << exponent {
        return Err(Error::BadParams(format!(
            "start {numerator}/2^{exponent} lies outside [0, 1]"
        )));
    }
    let count = 1u64 << t;
    let offsets = (0..count).map(|k| numerator + (k << exponent)).collect();
    Ok(DyadicDistribution {
        depth,
        offsets,
        weights: vec![1.0 / count as f64; count as usize],
    })
}

/// Places two dyadic laws on the chain formed by the union of their supports.
pub fn union_chain(a: &DyadicDistribution, b: &DyadicDistribution) -> (Poset, Measure, Measure) {
    let depth = a.depth.max(b.depth);
    let (a, b) = (a.refine(depth), b.refine(depth));
    let mut support: Vec<u64> = a.offsets.iter().chain(&b.offsets).copied().collect();
    support.sort_unstable();
    support.dedup();
    let place = |d: &DyadicDistribution| {
        let mut w = vec![0.0; support.len()];
        for (k, &p) in d.offsets.iter().zip(&d.weights) {
            let i = support.binary_search(k).expect("offset in union");
            w[i] += p;
        }
        Measure::from_raw(w)
    };
    let (mu, nu) = (place(&a), place(&b));
    let labels = support.iter().map(|k| format!("{k}/2^{depth}")).collect();
    (Poset::chain_labelled(labels), mu, nu)
}

/// γ(P^t(0, ·), P^t(1, ·)) for the Bernoulli chain, computed exactly.
pub fn bernoulli_gamma(t: u32) -> Result<f64> {
    let p0 = bernoulli_exact_distribution(0, 0, t)?;
    let p1 = bernoulli_exact_distribution(1, 0, t)?;
    let (chain, mu, nu) = union_chain(&p0, &p1);
    gamma(&chain, &mu, &nu)
}

/// P{X ⪯ Y} for one step from `x = 1` and `y = 0` with antithetic shocks
/// `W_y = 1 − W_x`, enumerated over both shock values.
pub fn bernoulli_coupling_sigma_bound() -> f64 {
    ordered_step_mass(|w| 1 - w)
}

/// As [`bernoulli_coupling_sigma_bound`] but with a shared shock.
pub fn bernoulli_comonotone_ordered_mass() -> f64 {
    ordered_step_mass(|w| w)
}

fn ordered_step_mass(other: impl Fn(u64) -> u64) -> f64 {
    // positions in units of 1/2: from 1 the step lands at 1 + w, from 0 at w'
    (0..2u64).filter(|&w| w < other(w)).map(|_| 0.5).sum()
}

/// TV affinity of the one-step laws from 1 and from 0.
pub fn bernoulli_step_affinity() -> Result<f64> {
    let p0 = bernoulli_exact_distribution(0, 0, 1)?;
    let p1 = bernoulli_exact_distribution(1, 0, 1)?;
    let (_, mu, nu) = union_chain(&p1, &p0);
    affinity(&mu, &nu)
}

/// Shock distribution for the inventory chain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shock {
    /// `ln W ~ N(mu, sigma²)`.
    Lognormal { mu: f64, sigma: f64 },
}

impl Default for Shock {
    fn default() -> Self {
        Shock::Lognormal {
            mu: 0.0,
            sigma: 1.0,
        }
    }
}

impl Shock {
    fn normal(&self) -> Result<(Normal, f64, f64)> {
        let Shock::Lognormal { mu, sigma } = *self;
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        if !(mu.is_finite() && sigma.is_finite() && sigma > 0.0) {
            return Err(Error::BadParams(format!(
                "lognormal parameters mu = {mu}, sigma = {sigma}"
            )));
        }
        Ok((normal, mu, sigma))
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        let (n, mu, sigma) = self.normal()?;
        Ok((mu + sigma * n.inverse_cdf(p)).exp())
    }

    /// P{W ≥ w}
    pub fn tail(&self, w: f64) -> Result<f64> {
        let (n, mu, sigma) = self.normal()?;
        if w <= 0.0 {
            return Ok(1.0);
        }
        Ok(1.0 - n.cdf((w.ln() - mu) / sigma))
    }
}

/// A kernel on a grid of real states, with the parameters that built it.
#[derive(Clone, Debug)]
pub struct GridModel {
    pub name: String,
    pub params: serde_json::Value,
    pub grid: Vec<f64>,
    pub poset: Poset,
    pub kernel: MarkovKernel,
    /// Lower bound on σ(P) known from the construction.
    pub sigma_lower_bound: Option<f64>,
    /// Discretization slack subtracted in `sigma_lower_bound`.
    pub slack: Option<f64>,
    pub mixture: Option<MapMixture>,
}

impl GridModel {
    pub fn to_kernel_file(&self) -> KernelFile {
        KernelFile::new(&self.poset, &self.kernel)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "model": self.name,
            "params": self.params,
            "grid": self.grid,
            "sigma_lower_bound": self.sigma_lower_bound,
            "slack": self.slack,
            "poset": self.poset.to_spec(),
            "rows": self.kernel.rows(),
        })
    }

    /// Index of the grid point closest to `x`.
    pub fn nearest(&self, x: f64) -> usize {
        let mut best = 0;
        for (i, g) in self.grid.iter().enumerate() {
            if (g - x).abs() < (self.grid[best] - x).abs() {
                best = i;
            }
        }
        best
    }
}

/// Inventory chain `X' = (X − W)_+` for `X > 0` and `(K − W)_+` for `X = 0`
/// on the grid `{0, K/(g−1), ..., K}` under the identity order.
///
/// The shock takes the `cells` quantiles `(q + 1/2) / cells`, each with mass
/// `1 / cells`, and images are rounded down to the grid.
pub fn inventory_model(
    capacity: f64,
    grid_size: usize,
    shock: Shock,
    cells: usize,
) -> Result<GridModel> {
    if !(capacity.is_finite() && capacity > 0.0) {
        return Err(Error::BadParams(format!(
            "capacity {capacity} must be positive"
        )));
    }
    if grid_size < 2 {
        return Err(Error::BadParams(format!("grid size {grid_size} below 2")));
    }
    if cells == 0 {
        return Err(Error::BadParams("shock cells must be positive".into()));
    }
    let h = capacity / (grid_size - 1) as f64;
    let grid: Vec<f64> = (0..grid_size).map(|i| i as f64 * h).collect();
    let shocks = (0..cells)
        .map(|q| shock.quantile((q as f64 + 0.5) / cells as f64))
        .collect::<Result<Vec<f64>>>()?;
    let cell = 1.0 / cells as f64;
    let rows = (0..grid_size)
        .map(|i| {
            let from = if i == 0 { capacity } else { grid[i] };
            let mut row = vec![0.0; grid_size];
            for &w in &shocks {
                let image = (from - w).max(0.0);
                let k = ((image / h) + 1e-9).floor() as usize;
                row[k.min(grid_size - 1)] += cell;
            }
            row
        })
        .collect();
    let kappa = shock.tail(capacity)?;
    let slack = cell;
    Ok(GridModel {
        name: "inventory".into(),
        params: serde_json::json!({
            "capacity": capacity,
            "grid_size": grid_size,
            "shock": shock,
            "cells": cells,
            "kappa": kappa,
        }),
        grid,
        poset: Poset::antichain(grid_size),
        kernel: MarkovKernel::new(rows)?,
        sigma_lower_bound: Some(kappa - slack),
        slack: Some(slack),
        mixture: None,
    })
}

/// Monotone kernel on the chain `0 < … < n−1`: with probability `s1` every
/// state jumps to 0, with probability `s2` every state jumps to `n−1`, and
/// otherwise it takes a lazy reflecting walk step.
pub fn splitting_lattice_model(n: usize, s1: f64, s2: f64) -> Result<GridModel> {
    if n < 2 {
        return Err(Error::BadParams(format!("lattice size {n} below 2")));
    }
    let open = |s: f64| s > 0.0 && s < 1.0;
    if !(open(s1) && open(s2) && s1 + s2 <= 1.0) {
        return Err(Error::BadParams(format!(
            "split probabilities s1 = {s1}, s2 = {s2}"
        )));
    }
    let rest = 1.0 - s1 - s2;
    let mut maps = vec![(s1, vec![0; n]), (s2, vec![n - 1; n])];
    if rest > 0.0 {
        maps.push((rest / 2.0, (0..n).collect()));
        maps.push((rest / 4.0, (0..n).map(|x| (x + 1).min(n - 1)).collect()));
        maps.push((rest / 4.0, (0..n).map(|x| x.saturating_sub(1)).collect()));
    }
    let mixture = MapMixture { maps };
    let kernel = mixture.to_kernel(n)?;
    Ok(GridModel {
        name: "splitting".into(),
        params: serde_json::json!({ "n": n, "s1": s1, "s2": s2, "pivot": splitting_pivot(n) }),
        grid: (0..n).map(|x| x as f64).collect(),
        poset: Poset::chain(n),
        kernel,
        sigma_lower_bound: Some(s1 * s2),
        slack: None,
        mixture: Some(mixture),
    })
}

/// The pivot state used by [`splitting_lattice_model`].
pub fn splitting_pivot(n: usize) -> usize {
    (n - 1) / 2
}
