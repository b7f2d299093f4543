//! Randomized property suite over the library's invariants.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::coupling::{maximal_coupling, order_maximal_coupling, order_maximal_factored};
use crate::error::{Error, Result};
use crate::kernel::{
    apply, check_monotone, compose, is_monotone, joint, sigma, tightness_witness, MarkovKernel,
};
use crate::measure::{affinity, stochastically_dominated, tv_distance, Measure, SignedDiff};
use crate::ordaff::{
    beta, gamma, max_upset_deficiency, maximal_ordered_component_pair, ordered_affinity,
    ordered_shortfall, sup_increasing_function, FunctionRange,
};
use crate::poset::{ElementSet, Poset, DEFAULT_UPSET_CAP};
use crate::random::{self, StdRng};

/// Tolerance used by every property.
pub const SUITE_TOL: f64 = 1e-9;

type Outcome = std::result::Result<(), String>;
type Property = fn(&mut StdRng) -> Outcome;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyResult {
    pub name: &'static str,
    pub trials: usize,
    pub passed: usize,
    pub counterexample: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub trials: usize,
    pub properties: Vec<PropertyResult>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.properties.iter().all(|p| p.passed == p.trials)
    }

    pub fn first_failure(&self) -> Option<&PropertyResult> {
        self.properties.iter().find(|p| p.passed < p.trials)
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Outcome {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lib<T>(r: Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| format!("library error: {e}"))
}

fn small_poset(rng: &mut StdRng, max: usize) -> Poset {
    let n = rng.gen_range(1..=max);
    let density = rng.gen_range(0.0..0.7);
    random::random_poset(rng, n, density)
}

fn prob(rng: &mut StdRng, n: usize) -> Measure {
    if rng.gen_bool(0.2) {
        Measure::dirac(n, rng.gen_range(0..n))
    } else {
        random::random_probability(rng, n)
    }
}

fn monotone_instance(rng: &mut StdRng, max: usize) -> (Poset, MarkovKernel) {
    let poset = small_poset(rng, max);
    let maps = rng.gen_range(1..=4);
    let (p, _) = random::random_monotone_kernel(rng, &poset, maps);
    (poset, p)
}

fn brute_deficiency(upsets: &[ElementSet], mu: &Measure, nu: &Measure) -> f64 {
    upsets
        .iter()
        .map(|s| mu.measure_of(s) - nu.measure_of(s))
        .fold(0.0, f64::max)
}

fn w(m: &Measure) -> String {
    format!("{:?}", m.weights())
}

fn p_flow_oracle(rng: &mut StdRng) -> Outcome {
    let poset = small_poset(rng, 10);
    let n = poset.len();
    let (mu, nu) = (prob(rng, n), prob(rng, n));
    let upsets = lib(poset.enumerate_upsets(DEFAULT_UPSET_CAP))?;
    let brute = brute_deficiency(&upsets, &mu, &nu);
    let flow = lib(ordered_affinity(&poset, &mu, &nu))?;
    ensure((1.0 - flow - brute).abs() <= SUITE_TOL, || {
        format!("alpha_O {flow} vs 1 - {brute} for {} {}", w(&mu), w(&nu))
    })
}

fn p_affinity(rng: &mut StdRng) -> Outcome {
    let n = rng.gen_range(1..=8);
    let (a_mass, b_mass) = (rng.gen_range(0.1..2.0), rng.gen_range(0.1..2.0));
    let mu = random::random_measure(rng, n, a_mass);
    let nu = random::random_measure(rng, n, b_mass);
    let a = lib(affinity(&mu, &nu))?;
    ensure(
        a >= -SUITE_TOL && a <= mu.mass().min(nu.mass()) + SUITE_TOL,
        || format!("affinity {a} out of bounds"),
    )?;
    let self_a = lib(affinity(&mu, &mu))?;
    ensure((self_a - mu.mass()).abs() <= SUITE_TOL, || {
        "alpha(mu, mu) != mass".into()
    })?;
    let c = rng.gen_range(0.0..3.0);
    let scaled = lib(affinity(&mu.scale(c), &nu.scale(c)))?;
    ensure((scaled - c * a).abs() <= SUITE_TOL, || {
        format!("homogeneity fails for c = {c}")
    })?;
    let (p, q) = (prob(rng, n), prob(rng, n));
    let ap = lib(affinity(&p, &q))?;
    let tv = lib(tv_distance(&p, &q))?;
    ensure((tv - 2.0 * (1.0 - ap)).abs() <= 1e-12, || {
        format!("tv {tv} vs 2(1 - {ap})")
    })?;
    ensure(
        (ap >= 1.0 - SUITE_TOL) == (p.max_abs_diff(&q) <= SUITE_TOL),
        || format!("alpha = 1 iff equal fails for {} {}", w(&p), w(&q)),
    )
}

fn p_ordered_affinity_axioms(rng: &mut StdRng) -> Outcome {
    let poset = small_poset(rng, 8);
    let n = poset.len();
    let (mu, nu) = (prob(rng, n), prob(rng, n));
    let a = lib(ordered_affinity(&poset, &mu, &nu))?;
    ensure((-SUITE_TOL..=1.0 + SUITE_TOL).contains(&a), || {
        format!("alpha_O = {a}")
    })?;
    let dominated = lib(stochastically_dominated(&poset, &mu, &nu))?;
    ensure(dominated == (a >= 1.0 - SUITE_TOL), || {
        format!("alpha_O = {a} but dominated = {dominated}")
    })?;
    let hi = random::random_dominating(rng, &poset, &mu);
    let up = lib(ordered_affinity(&poset, &mu, &hi))?;
    ensure(up >= 1.0 - SUITE_TOL, || {
        format!("alpha_O to dominating measure {up}")
    })?;
    let c = rng.gen_range(0.0..3.0);
    let scaled = lib(ordered_affinity(&poset, &mu.scale(c), &nu.scale(c)))?;
    ensure((scaled - c * a).abs() <= SUITE_TOL, || {
        format!("homogeneity fails for c = {c}")
    })?;
    let back = lib(stochastically_dominated(&poset, &nu, &mu))?;
    ensure(!(dominated && back) || mu.max_abs_diff(&nu) <= 1e-6, || {
        "dominance is not antisymmetric".into()
    })
}

fn p_affinity_below_ordered(rng: &mut StdRng) -> Outcome {
    let poset = small_poset(rng, 8);
    let n = poset.len();
    let (mu, nu) = (prob(rng, n), prob(rng, n));
    let a = lib(affinity(&mu, &nu))?;
    let ao = lib(ordered_affinity(&poset, &mu, &nu))?;
    ensure(a <= ao + SUITE_TOL, || format!("alpha {a} > alpha_O {ao}"))
}

fn p_deficiency_bound(rng: &mut StdRng) -> Outcome {
    let poset = small_poset(rng, 8);
    let n = poset.len();
    let (mu, nu) = (prob(rng, n), prob(rng, n));
    let g = lib(gamma(&poset, &mu, &nu))?;
    let (d1, _) = lib(max_upset_deficiency(&poset, &mu, &nu))?;
    let (d2, _) = lib(max_upset_deficiency(&poset, &nu, &mu))?;
    ensure(d1.max(d2) <= g + SUITE_TOL, || {
        format!("deficiency {} > gamma {g}", d1.max(d2))
    })?;
    let upsets = lib(poset.enumerate_upsets(DEFAULT_UPSET_CAP))?;
    let downsets: Vec<ElementSet> = upsets.iter().map(ElementSet::complement).collect();
    if let Some(bad) = downsets.iter().find(|d| !poset.is_decreasing(d)) {
        return Err(format!("complement {:?} is not decreasing", bad.indices()));
    }
    let down = brute_deficiency(&downsets, &mu, &nu);
    ensure(
        (down - d2).abs() <= SUITE_TOL && down <= g + SUITE_TOL,
        || format!("down-set deficiency {down} vs {d2}, gamma {g}"),
    )
}

fn p_gamma_metric(rng: &mut StdRng) -> Outcome {
    let poset = small_poset(rng, 8);
    let n = poset.len();
    let (mu, nu, rho) = (prob(rng, n), prob(rng, n), prob(rng, n));
    let g = |a: &Measure, b: &Measure| lib(gamma(&poset, a, b));
    let (mn, nr, mr) = (g(&mu, &nu)?, g(&nu, &rho)?, g(&mu, &rho)?);
    ensure(mr <= mn + nr + SUITE_TOL, || {
        format!(
            "triangle {mr} > {mn} + {nr} for {} {} {}",
            w(&mu),
            w(&nu),
            w(&rho)
        )
    })?;
    ensure((mn - g(&nu, &mu)?).abs() <= SUITE_TOL, || {
        "gamma not symmetric".into()
    })?;
    ensure(g(&mu, &mu)? <= SUITE_TOL, || "gamma(mu, mu) > 0".into())?;
    ensure(mn > SUITE_TOL || mu.max_abs_diff(&nu) <= 1e-6, || {
        format!("gamma = {mn} for distinct {} {}", w(&mu), w(&nu))
    })
}

fn p_sandwich(rng: &mut StdRng) -> Outcome {
    let poset = small_poset(rng, 8);
    let n = poset.len();
    let (mu, nu) = (prob(rng, n), prob(rng, n));
    let g = lib(gamma(&poset, &mu, &nu))?;
    let b = lib(beta(&poset, &mu, &nu))?;
    ensure(g <= b + SUITE_TOL && b <= 2.0 * g + SUITE_TOL, || {
        format!("gamma {g}, beta {b}")
    })
}

fn p_coupling_bounds(rng: &mut StdRng) -> Outcome {
    let poset = small_poset(rng, 8);
    let n = poset.len();
    let (mu, nu) = (prob(rng, n), prob(rng, n));
    let a = lib(ordered_affinity(&poset, &mu, &nu))?;
    let c = lib(order_maximal_coupling(&poset, &mu, &nu))?;
    ensure((c.ordered_mass(&poset) - a).abs() <= SUITE_TOL, || {
        format!("ordered mass {} vs alpha_O {a}", c.ordered_mass(&poset))
    })?;
    ensure(c.marginal_error() <= SUITE_TOL, || "marginals off".into())?;
    let f = lib(order_maximal_factored(&poset, &mu, &nu))?;
    let rm = f.residual_mass();
    if rm > 0.0 {
        let leak: f64 = (0..n)
            .flat_map(|x| poset.above(x).map(move |y| (x, y)))
            .map(|(x, y)| f.residual_row()[x] * f.residual_col()[y] / rm)
            .sum();
        ensure(leak <= SUITE_TOL, || {
            format!("residual block has ordered mass {leak}")
        })?;
    }
    let m = lib(maximal_coupling(&mu, &nu))?;
    ensure(m.ordered_mass(&poset) <= a + SUITE_TOL, || {
        "maximal coupling beats alpha_O".into()
    })?;
    let back = lib(ordered_affinity(&poset, &nu, &mu))?;
    let cb = lib(order_maximal_coupling(&poset, &nu, &mu))?;
    let g = lib(gamma(&poset, &mu, &nu))?;
    let decomposed = (1.0 - c.ordered_mass(&poset)) + (1.0 - cb.ordered_mass(&poset));
    ensure(
        (g - decomposed).abs() <= SUITE_TOL && (back - cb.ordered_mass(&poset)).abs() <= SUITE_TOL,
        || format!("gamma {g} vs directed decomposition {decomposed}"),
    )
}

fn p_component_pair(rng: &mut StdRng) -> Outcome {
    let poset = small_poset(rng, 8);
    let n = poset.len();
    let (mu, nu) = (prob(rng, n), prob(rng, n));
    let pair = lib(maximal_ordered_component_pair(&poset, &mu, &nu))?;
    let a = lib(ordered_affinity(&poset, &mu, &nu))?;
    ensure(pair.is_valid_for(&poset, &mu, &nu, SUITE_TOL), || {
        "invalid component pair".into()
    })?;
    ensure((pair.mass() - a).abs() <= SUITE_TOL, || {
        format!("pair mass {} vs alpha_O {a}", pair.mass())
    })
}

fn p_monotone_comparison(rng: &mut StdRng) -> Outcome {
    let (poset, p) = monotone_instance(rng, 8);
    let n = poset.len();
    let (mu, nu) = (prob(rng, n), prob(rng, n));
    let lo = random::random_dominated(rng, &poset, &mu);
    let hi = random::random_dominating(rng, &poset, &nu);
    let a = lib(ordered_affinity(
        &poset,
        &lib(apply(&mu, &p))?,
        &lib(apply(&nu, &p))?,
    ))?;
    let b = lib(ordered_affinity(
        &poset,
        &lib(apply(&lo, &p))?,
        &lib(apply(&hi, &p))?,
    ))?;
    ensure(a <= b + SUITE_TOL, || {
        format!("alpha_O(muP, nuP) = {a} > {b}")
    })
}

fn p_affinity_grows(rng: &mut StdRng) -> Outcome {
    let (poset, p) = monotone_instance(rng, 8);
    let n = poset.len();
    let (mu, nu) = (prob(rng, n), prob(rng, n));
    let before = lib(ordered_affinity(&poset, &mu, &nu))?;
    let after = lib(ordered_affinity(
        &poset,
        &lib(apply(&mu, &p))?,
        &lib(apply(&nu, &p))?,
    ))?;
    ensure(after >= before - SUITE_TOL, || {
        format!("alpha_O fell from {before} to {after}")
    })
}

fn p_joint_affinity(rng: &mut StdRng) -> Outcome {
    let (poset, p) = monotone_instance(rng, 8);
    let n = poset.len();
    let (mu, nu) = (prob(rng, n), prob(rng, n));
    let square = lib(poset.product(&poset))?;
    let a = lib(ordered_affinity(&poset, &mu, &nu))?;
    let j = lib(ordered_affinity(
        &square,
        &lib(joint(&mu, &p))?,
        &lib(joint(&nu, &p))?,
    ))?;
    ensure((a - j).abs() <= SUITE_TOL, || {
        format!("joint alpha_O {j} vs {a}")
    })
}

fn p_sigma_lower_bound(rng: &mut StdRng) -> Outcome {
    let (poset, p) = monotone_instance(rng, 8);
    let n = poset.len();
    let s = lib(sigma(&poset, &p))?;
    let (mu, nu) = (prob(rng, n), prob(rng, n));
    let a = lib(ordered_affinity(
        &poset,
        &lib(apply(&mu, &p))?,
        &lib(apply(&nu, &p))?,
    ))?;
    ensure(a >= s - SUITE_TOL, || {
        format!("alpha_O(muP, nuP) = {a} < sigma = {s}")
    })
}

fn p_residual_shortfall(rng: &mut StdRng) -> Outcome {
    let (poset, p) = monotone_instance(rng, 8);
    let n = poset.len();
    let (mu, nu) = (prob(rng, n), prob(rng, n));
    let pair = lib(maximal_ordered_component_pair(&poset, &mu, &nu))?;
    let (rmu, rnu) = lib(pair.residuals(&mu, &nu))?;
    let whole = lib(ordered_shortfall(
        &poset,
        &lib(apply(&mu, &p))?,
        &lib(apply(&nu, &p))?,
    ))?;
    let rest = lib(ordered_shortfall(
        &poset,
        &lib(apply(&rmu, &p))?,
        &lib(apply(&rnu, &p))?,
    ))?;
    ensure(whole <= rest + SUITE_TOL, || {
        format!("g(muP, nuP) = {whole} > {rest}")
    })
}

fn p_nonexpansive(rng: &mut StdRng) -> Outcome {
    let (poset, p) = monotone_instance(rng, 8);
    let n = poset.len();
    let (mu, nu) = (prob(rng, n), prob(rng, n));
    let before = lib(gamma(&poset, &mu, &nu))?;
    let after = lib(gamma(&poset, &lib(apply(&mu, &p))?, &lib(apply(&nu, &p))?))?;
    ensure(after <= before + SUITE_TOL, || {
        format!("gamma grew from {before} to {after}")
    })
}

fn p_contraction(rng: &mut StdRng) -> Outcome {
    let (poset, p) = monotone_instance(rng, 8);
    let n = poset.len();
    let s = lib(sigma(&poset, &p))?;
    let (mu, nu) = (prob(rng, n), prob(rng, n));
    let before = lib(gamma(&poset, &mu, &nu))?;
    let after = lib(gamma(&poset, &lib(apply(&mu, &p))?, &lib(apply(&nu, &p))?))?;
    ensure(after <= (1.0 - s) * before + SUITE_TOL, || {
        format!("gamma {after} > (1 - {s}) * {before}")
    })
}

fn p_monotone_powers(rng: &mut StdRng) -> Outcome {
    let (poset, p) = monotone_instance(rng, 8);
    let m = rng.gen_range(1..=4);
    let pm = lib(compose(&p, m))?;
    ensure(is_monotone(&poset, &pm), || {
        format!("P^{m} is not monotone")
    })
}

fn p_tightness(rng: &mut StdRng) -> Outcome {
    let (poset, p) = monotone_instance(rng, 8);
    if !poset.pairs_have_lower_bounds() {
        return Ok(());
    }
    let s = lib(sigma(&poset, &p))?;
    match lib(tightness_witness(&poset, &p))? {
        Some(t) if s < 1.0 => ensure((t.ratio - (1.0 - s)).abs() <= SUITE_TOL, || {
            format!("witness ratio {} vs 1 - sigma = {}", t.ratio, 1.0 - s)
        }),
        _ => Ok(()),
    }
}

fn random_increasing(rng: &mut StdRng, poset: &Poset) -> Vec<f64> {
    let mut h = vec![0.0; poset.len()];
    for &x in poset.topological_order() {
        let floor = poset
            .below(x)
            .filter(|&y| y != x)
            .map(|y| h[y])
            .fold(0.0, f64::max);
        h[x] = rng.gen_range(floor..=1.0);
    }
    h
}

fn p_function_sup(rng: &mut StdRng) -> Outcome {
    let poset = small_poset(rng, 8);
    let n = poset.len();
    let (mu, nu) = (prob(rng, n), prob(rng, n));
    let lambda = lib(SignedDiff::new(mu.clone(), nu.clone()))?;
    let (v, h) = lib(sup_increasing_function(
        &poset,
        &lambda,
        FunctionRange::Unit,
    ))?;
    let upsets = lib(poset.enumerate_upsets(DEFAULT_UPSET_CAP))?;
    let brute = brute_deficiency(&upsets, &mu, &nu);
    ensure((v - brute).abs() <= SUITE_TOL, || {
        format!("function sup {v} vs up-set sup {brute}")
    })?;
    ensure(h.is_increasing(&poset) && h.in_range(), || {
        "witness not admissible".into()
    })?;
    ensure((lambda.integrate(&h.values) - v).abs() <= SUITE_TOL, || {
        "witness misses sup".into()
    })?;
    for _ in 0..8 {
        let g = random_increasing(rng, &poset);
        let val = lambda.integrate(&g);
        ensure(val <= v + SUITE_TOL, || {
            format!("increasing function reaches {val} > {v}")
        })?;
    }
    let (v2, h2) = lib(sup_increasing_function(
        &poset,
        &lambda,
        FunctionRange::Symmetric,
    ))?;
    ensure((v2 - 2.0 * v).abs() <= SUITE_TOL, || {
        format!("symmetric sup {v2} vs 2 * {v}")
    })?;
    ensure(
        h2.is_increasing(&poset)
            && h2.in_range()
            && (lambda.integrate(&h2.values) - v2).abs() <= SUITE_TOL,
        || "symmetric witness not admissible".into(),
    )
}

/// Every property with its name, in report order.
pub fn properties() -> Vec<(&'static str, Property)> {
    vec![
        ("upset_oracle", p_flow_oracle as Property),
        ("affinity_axioms", p_affinity),
        ("ordered_affinity_axioms", p_ordered_affinity_axioms),
        ("affinity_below_ordered_affinity", p_affinity_below_ordered),
        ("deficiency_bound", p_deficiency_bound),
        ("gamma_metric", p_gamma_metric),
        ("gamma_beta_sandwich", p_sandwich),
        ("coupling_attainment", p_coupling_bounds),
        ("component_pair", p_component_pair),
        ("monotone_comparison", p_monotone_comparison),
        ("affinity_increases_under_monotone_kernel", p_affinity_grows),
        ("joint_affinity", p_joint_affinity),
        ("sigma_lower_bound", p_sigma_lower_bound),
        ("residual_shortfall", p_residual_shortfall),
        ("nonexpansiveness", p_nonexpansive),
        ("contraction", p_contraction),
        ("monotone_powers", p_monotone_powers),
        ("tightness_witness", p_tightness),
        ("increasing_function_sup", p_function_sup),
    ]
}

/// Runs every property for `trials` instances. Property `k` draws from
/// stream `k` of `seed`, so the report does not depend on scheduling.
pub fn run_suite(seed: u64, trials: usize) -> SuiteReport {
    let props = properties();
    let results = props
        .par_iter()
        .enumerate()
        .map(|(k, &(name, prop))| {
            let mut rng = random::rng_stream(seed, k as u64);
            let mut passed = 0;
            let mut counterexample = None;
            for trial in 0..trials {
                match prop(&mut rng) {
                    Ok(()) => passed += 1,
                    Err(msg) => {
                        if counterexample.is_none() {
                            counterexample = Some(format!("trial {trial}: {msg}"));
                        }
                    }
                }
            }
            PropertyResult {
                name,
                trials,
                passed,
                counterexample,
            }
        })
        .collect();
    SuiteReport {
        seed,
        trials,
        properties: results,
    }
}

/// Runs the suite after checking that an externally supplied kernel meets
/// the contraction precondition; its contraction is checked on `trials` pairs.
pub fn run_suite_with_kernel(
    seed: u64,
    trials: usize,
    poset: &Poset,
    p: &MarkovKernel,
) -> Result<SuiteReport> {
    check_monotone(poset, p)?;
    let mut report = run_suite(seed, trials);
    let s = sigma(poset, p)?;
    let mut rng = random::rng_stream(seed, u64::MAX);
    let n = poset.len();
    let mut passed = 0;
    let mut counterexample = None;
    for trial in 0..trials {
        let (mu, nu) = (prob(&mut rng, n), prob(&mut rng, n));
        let before = gamma(poset, &mu, &nu)?;
        let after = gamma(poset, &apply(&mu, p)?, &apply(&nu, p)?)?;
        if after <= (1.0 - s) * before + SUITE_TOL {
            passed += 1;
        } else if counterexample.is_none() {
            counterexample = Some(format!(
                "trial {trial}: gamma {after} > (1 - {s}) * {before}"
            ));
        }
    }
    report.properties.push(PropertyResult {
        name: "supplied_kernel_contraction",
        trials,
        passed,
        counterexample,
    });
    Ok(report)
}

/// Convenience for callers that need an error on any failing property.
pub fn require_pass(report: &SuiteReport) -> Result<()> {
    match report.first_failure() {
        None => Ok(()),
        Some(p) => Err(Error::Assertion(format!(
            "property {} failed: {}",
            p.name,
            p.counterexample.as_deref().unwrap_or("no detail")
        ))),
    }
}
