//! Seeded generators for posets, measures and monotone kernels.
//!
//! All randomness goes through ChaCha8 so streams are identical across
//! platforms for the same seed.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::kernel::{MapMixture, MarkovKernel};
use crate::measure::Measure;
use crate::poset::{index_labels, Poset};

pub type StdRng = ChaCha8Rng;

pub fn rng(seed: u64) -> StdRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` of the generator seeded with `seed`.
pub fn rng_stream(seed: u64, stream: u64) -> StdRng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn exp1<R: Rng>(rng: &mut R) -> f64 {
    -(1.0 - rng.gen::<f64>()).ln()
}

/// Random probability vector; the support size is itself uniform on `1..=n`.
pub fn random_probability<R: Rng>(rng: &mut R, n: usize) -> Measure {
    random_measure(rng, n, 1.0)
}

pub fn random_measure<R: Rng>(rng: &mut R, n: usize, mass: f64) -> Measure {
    let k = rng.gen_range(1..=n);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let mut w = vec![0.0; n];
    for &i in &idx[..k] {
        w[i] = exp1(rng);
    }
    let total: f64 = w.iter().sum();
    Measure::new(w.into_iter().map(|v| v * mass / total).collect()).expect("nonnegative")
}

/// Random order on `n` elements: each pair of a random permutation is
/// related with probability `density`, then closed transitively.
pub fn random_poset<R: Rng>(rng: &mut R, n: usize, density: f64) -> Poset {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut covers = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(density) {
                covers.push((perm[i], perm[j]));
            }
        }
    }
    Poset::new(index_labels(n), &covers).expect("arcs follow a permutation")
}

/// Random order-preserving self-map.
///
/// Elements are assigned in a linear extension; each picks a random common
/// upper bound of the images of its lower covers. When no common upper bound
/// exists the attempt restarts, falling back to a constant map.
pub fn random_monotone_map<R: Rng>(rng: &mut R, poset: &Poset) -> Vec<usize> {
    let n = poset.len();
    let mut preds = vec![Vec::new(); n];
    for &(x, y) in poset.covers() {
        preds[y].push(x);
    }
    'attempt: for _ in 0..32 {
        let mut f = vec![usize::MAX; n];
        for &x in poset.topological_order() {
            let candidates: Vec<usize> = (0..n)
                .filter(|&z| preds[x].iter().all(|&w| poset.leq(f[w], z)))
                .collect();
            match candidates.choose(rng) {
                Some(&z) => f[x] = z,
                None => continue 'attempt,
            }
        }
        return f;
    }
    vec![rng.gen_range(0..n); n]
}

/// Monotone kernel as a random mixture of `maps` monotone maps.
pub fn random_monotone_kernel<R: Rng>(
    rng: &mut R,
    poset: &Poset,
    maps: usize,
) -> (MarkovKernel, MapMixture) {
    let mut mix = Vec::with_capacity(maps);
    let weights: Vec<f64> = (0..maps).map(|_| exp1(rng)).collect();
    let total: f64 = weights.iter().sum();
    for w in weights {
        mix.push((w / total, random_monotone_map(rng, poset)));
    }
    let mixture = MapMixture { maps: mix };
    let kernel = mixture.to_kernel(poset.len()).expect("maps are in range");
    (kernel, mixture)
}

/// Arbitrary stochastic matrix; monotone only under the identity order.
pub fn random_kernel<R: Rng>(rng: &mut R, n: usize) -> MarkovKernel {
    let rows = (0..n)
        .map(|_| random_probability(rng, n).into_weights())
        .collect();
    MarkovKernel::new(rows).expect("rows are probabilities")
}

/// `P = (1 − ε) Q + ε ψ` for random `Q` and `ψ`; every row dominates `ε ψ`.
pub fn doeblin_kernel<R: Rng>(rng: &mut R, n: usize, eps: f64) -> (MarkovKernel, Measure) {
    let q = random_kernel(rng, n);
    let psi = random_probability(rng, n);
    let rows = (0..n)
        .map(|x| {
            q.row(x)
                .iter()
                .zip(psi.weights())
                .map(|(a, b)| (1.0 - eps) * a + eps * b)
                .collect()
        })
        .collect();
    (MarkovKernel::new(rows).expect("convex combination"), psi)
}

/// ν with μ ⪯_sd ν: each atom of μ is spread over random elements above it.
pub fn random_dominating<R: Rng>(rng: &mut R, poset: &Poset, mu: &Measure) -> Measure {
    spread(rng, poset, mu, true)
}

/// ν with ν ⪯_sd μ.
pub fn random_dominated<R: Rng>(rng: &mut R, poset: &Poset, mu: &Measure) -> Measure {
    spread(rng, poset, mu, false)
}

fn spread<R: Rng>(rng: &mut R, poset: &Poset, mu: &Measure, upwards: bool) -> Measure {
    let n = poset.len();
    let mut out = vec![0.0; n];
    for (x, &w) in mu.weights().iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let targets: Vec<usize> = if upwards {
            poset.above(x).collect()
        } else {
            poset.below(x).collect()
        };
        let split: Vec<f64> = targets.iter().map(|_| exp1(rng)).collect();
        let total: f64 = split.iter().sum();
        for (&z, s) in targets.iter().zip(split) {
            out[z] += w * s / total;
        }
    }
    Measure::new(out).expect("nonnegative")
}
