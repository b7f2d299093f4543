//! Acceptance run: one PASS/FAIL line per criterion.

use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use ordvar::coupling::{
    maximal_coupling, order_coupling_bound_table, order_maximal_coupling, Coupling,
};
use ordvar::kernel::{apply, sigma, stationary, tightness_witness};
use ordvar::measure::tv_distance;
use ordvar::models::{
    bernoulli_coupling_sigma_bound, bernoulli_exact_distribution, bernoulli_gamma, inventory_model,
    splitting_lattice_model, Shock, DEFAULT_SHOCK_CELLS,
};
use ordvar::random::{self, StdRng};
use ordvar::suite::run_suite;
use ordvar::{gamma, ordered_affinity, MarkovKernel, Measure, Poset};
use rand::Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// The 200 random instances shared by criteria 1 and 2.
fn instances() -> Vec<(Poset, Measure, Measure)> {
    let mut rng = random::rng(20_240_601);
    (0..200)
        .map(|_| {
            let n = rng.gen_range(1..=10);
            let density = rng.gen_range(0.0..0.6);
            let p = random::random_poset(&mut rng, n, density);
            let mu = random::random_probability(&mut rng, n);
            let nu = random::random_probability(&mut rng, n);
            (p, mu, nu)
        })
        .collect()
}

/// max over all increasing subsets of μ(I) − ν(I), by scanning every subset.
fn subset_oracle(p: &Poset, mu: &Measure, nu: &Measure) -> f64 {
    let n = p.len();
    let mut best: f64 = 0.0;
    for mask in 0u32..(1 << n) {
        let inside = |i: usize| mask >> i & 1 == 1;
        let increasing = (0..n).all(|x| !inside(x) || (0..n).all(|y| !p.leq(x, y) || inside(y)));
        if increasing {
            let v: f64 = (0..n)
                .filter(|&i| inside(i))
                .map(|i| mu.weights()[i] - nu.weights()[i])
                .sum();
            best = best.max(v);
        }
    }
    best
}

fn criterion_1() -> Outcome {
    let mut worst: f64 = 0.0;
    for (k, (p, mu, nu)) in instances().iter().enumerate() {
        let flow = ordered_affinity(p, mu, nu).map_err(|e| e.to_string())?;
        let subsets = subset_oracle(p, mu, nu);
        let listed = p
            .enumerate_upsets(1 << 12)
            .map_err(|e| e.to_string())?
            .iter()
            .map(|s| mu.measure_of(s) - nu.measure_of(s))
            .fold(0.0, f64::max);
        let diff = (flow - (1.0 - listed))
            .abs()
            .max((flow - (1.0 - subsets)).abs());
        check(diff <= 1e-9, || format!("instance {k}: |diff| = {diff:e}"))?;
        worst = worst.max(diff);
    }
    Ok(format!("200 instances, max |diff| {worst:.1e}"))
}

fn ordered_mass(p: &Poset, joint: &[Vec<f64>]) -> f64 {
    let n = joint.len();
    (0..n)
        .flat_map(|x| (0..n).map(move |y| (x, y)))
        .filter(|&(x, y)| p.leq(x, y))
        .map(|(x, y)| joint[x][y])
        .sum()
}

/// Moves mass around a random 2×2 rectangle, keeping both marginals.
fn rebalance(rng: &mut StdRng, joint: &mut [Vec<f64>]) {
    let n = joint.len();
    if n < 2 {
        return;
    }
    let (i, k) = (rng.gen_range(0..n), rng.gen_range(0..n));
    let (j, l) = (rng.gen_range(0..n), rng.gen_range(0..n));
    if i == k || j == l {
        return;
    }
    let room = joint[i][l].min(joint[k][j]);
    let eps = room * rng.gen::<f64>();
    joint[i][j] += eps;
    joint[k][l] += eps;
    joint[i][l] -= eps;
    joint[k][j] -= eps;
}

fn criterion_2() -> Outcome {
    let mut rng = random::rng(77);
    let mut perturbed = 0usize;
    let mut worst_gap: f64 = 0.0;
    for (k, (p, mu, nu)) in instances().iter().enumerate() {
        let a = ordered_affinity(p, mu, nu).map_err(|e| e.to_string())?;
        let c = order_maximal_coupling(p, mu, nu).map_err(|e| e.to_string())?;
        let attained = c.ordered_mass(p);
        check((attained - a).abs() <= 1e-9, || {
            format!("instance {k}: ordered mass {attained} vs alpha_O {a}")
        })?;
        check(c.marginal_error() <= 1e-9, || {
            format!("instance {k}: marginals off")
        })?;
        let n = p.len();
        let independent: Vec<Vec<f64>> = (0..n)
            .map(|x| (0..n).map(|y| mu.weights()[x] * nu.weights()[y]).collect())
            .collect();
        let starts: Vec<Vec<Vec<f64>>> = vec![
            c.rows(),
            maximal_coupling(mu, nu).map_err(|e| e.to_string())?.rows(),
            independent,
        ];
        for start in starts {
            let mut joint = start;
            for _ in 0..50 {
                rebalance(&mut rng, &mut joint);
                let check_c = Coupling::new(joint.clone(), mu.clone(), nu.clone())
                    .map_err(|e| e.to_string())?;
                check(check_c.marginal_error() <= 1e-9, || {
                    "rebalancing broke marginals".into()
                })?;
                let m = ordered_mass(p, &joint);
                check(m <= a + 1e-9, || {
                    format!("instance {k}: perturbed mass {m} > {a}")
                })?;
                worst_gap = worst_gap.max(m - a);
                perturbed += 1;
            }
        }
    }
    Ok(format!(
        "attained on 200 instances; {perturbed} perturbed couplings, max excess {worst_gap:.1e}"
    ))
}

fn tail_gap(a: &[(u64, f64)], b: &[(u64, f64)]) -> f64 {
    let mut cut: Vec<u64> = a.iter().chain(b).map(|p| p.0).collect();
    cut.sort_unstable();
    cut.dedup();
    cut.iter()
        .map(|&k| {
            let ta: f64 = a.iter().filter(|p| p.0 >= k).map(|p| p.1).sum();
            let tb: f64 = b.iter().filter(|p| p.0 >= k).map(|p| p.1).sum();
            ta - tb
        })
        .fold(0.0, f64::max)
}

fn criterion_3() -> Outcome {
    for t in 0..=12u32 {
        let g = bernoulli_gamma(t).map_err(|e| e.to_string())?;
        let exact = 2f64.powi(-(t as i32));
        check(g == exact, || format!("t = {t}: gamma {g} != {exact}"))?;
        let law = |x| {
            let d = bernoulli_exact_distribution(x, 0, t).unwrap();
            d.offsets.into_iter().zip(d.weights).collect::<Vec<_>>()
        };
        let (p0, p1) = (law(0), law(1));
        let oracle = tail_gap(&p0, &p1) + tail_gap(&p1, &p0);
        check(oracle == exact, || format!("t = {t}: tail oracle {oracle}"))?;
        check(g <= 0.5f64.powi(t as i32) * 1.0, || {
            format!("t = {t}: above rate bound")
        })?;
    }
    let s = bernoulli_coupling_sigma_bound();
    check(s == 0.5, || format!("sigma bound {s}"))?;
    Ok("gamma = 2^-t for t = 0..12; sigma bound 0.5".into())
}

/// 1 − Φ(ln 2), computed independently to double precision.
const KAPPA_K2: f64 = 0.244_108_595_785_582_75;

fn criterion_4() -> Outcome {
    let m = inventory_model(2.0, 101, Shock::default(), DEFAULT_SHOCK_CELLS)
        .map_err(|e| e.to_string())?;
    let slack = m.slack.unwrap();
    check(slack <= 1.0 / 256.0, || format!("slack {slack}"))?;
    let model_kappa = m.params["kappa"].as_f64().unwrap();
    check((model_kappa - KAPPA_K2).abs() <= 1e-12, || {
        format!("model kappa {model_kappa} vs {KAPPA_K2}")
    })?;
    let s = sigma(&m.poset, &m.kernel).map_err(|e| e.to_string())?;
    check(s >= KAPPA_K2 - slack, || {
        format!("sigma {s} < {KAPPA_K2} - {slack}")
    })?;
    let cert = stationary(&m.poset, &m.kernel, 1).map_err(|e| e.to_string())?;
    check(cert.residual <= 1e-8, || {
        format!("residual {}", cert.residual)
    })?;
    let start = Measure::dirac(101, 50);
    let g0 = gamma(&m.poset, &start, &cert.stationary).map_err(|e| e.to_string())?;
    let mut mu = start;
    for t in 0..=50 {
        if t > 0 {
            mu = apply(&mu, &m.kernel).map_err(|e| e.to_string())?;
        }
        let g = gamma(&m.poset, &mu, &cert.stationary).map_err(|e| e.to_string())?;
        let bound = (1.0 - s).powi(t) * g0;
        check(g <= bound, || format!("t = {t}: gamma {g} > bound {bound}"))?;
    }
    Ok(format!(
        "sigma {s:.6} >= {:.6}; residual {:.1e}",
        KAPPA_K2 - slack,
        cert.residual
    ))
}

fn criterion_5() -> Outcome {
    let report = run_suite(0, 200);
    for p in &report.properties {
        check(p.trials >= 200 && p.passed == p.trials, || {
            format!(
                "{}: {}/{} ({:?})",
                p.name, p.passed, p.trials, p.counterexample
            )
        })?;
    }
    Ok(format!(
        "{} properties x 200 instances",
        report.properties.len()
    ))
}

fn two_state() -> (Poset, MarkovKernel) {
    (
        Poset::chain(2),
        MarkovKernel::new(vec![vec![0.7, 0.3], vec![0.2, 0.8]]).unwrap(),
    )
}

fn criterion_6() -> Outcome {
    let (p, k) = two_state();
    // suffix sums over the up-sets {1} and {0, 1}
    let p0: [f64; 2] = [0.7, 0.3];
    let p1: [f64; 2] = [0.2, 0.8];
    let def_10 = (p1[1] - p0[1]).max(0.0);
    let def_01 = (p0[1] - p1[1]).max(0.0);
    let oracle_gamma = def_10 + def_01;
    let sigma_oracle = 1.0 - def_10;

    let lhs = gamma(&p, &k.row_measure(0), &k.row_measure(1)).map_err(|e| e.to_string())?;
    let s = sigma(&p, &k).map_err(|e| e.to_string())?;
    let dirac_gap =
        gamma(&p, &Measure::dirac(2, 0), &Measure::dirac(2, 1)).map_err(|e| e.to_string())?;
    let rhs = (1.0 - s) * dirac_gap;
    check(
        (lhs - 0.5).abs() <= 1e-12 && (rhs - 0.5).abs() <= 1e-12,
        || format!("lhs {lhs}, rhs {rhs}"),
    )?;
    check(
        (lhs - oracle_gamma).abs() <= 1e-12 && (s - sigma_oracle).abs() <= 1e-12,
        || "hand computation disagrees".into(),
    )?;
    let w = tightness_witness(&p, &k)
        .map_err(|e| e.to_string())?
        .unwrap();
    check((w.ratio - 0.5).abs() <= 1e-12, || {
        format!("witness ratio {}", w.ratio)
    })?;
    Ok(format!(
        "gamma(P_0, P_1) = {lhs}, (1 - sigma) gamma(d_0, d_1) = {rhs}"
    ))
}

fn coupling_bound(name: &str, p: &Poset, k: &MarkovKernel, x0: usize, y0: usize) -> Outcome {
    let (rows, sim) =
        order_coupling_bound_table(p, k, x0, y0, 20, 100_000, 2024).map_err(|e| e.to_string())?;
    check(sim.oia_mismatches == 0, || {
        format!("{name}: {} mismatches", sim.oia_mismatches)
    })?;
    let mut slack_min = f64::INFINITY;
    for r in &rows {
        let rhs = r.bound + 3.0 * r.bound_se();
        check(r.gamma_exact <= rhs, || {
            format!("{name} t = {}: gamma {} > {rhs}", r.t, r.gamma_exact)
        })?;
        slack_min = slack_min.min(rhs - r.gamma_exact);
    }
    Ok(format!("{name} ok (min margin {slack_min:.1e})"))
}

fn criterion_7() -> Outcome {
    let (p, k) = two_state();
    let a = coupling_bound("two-state", &p, &k, 1, 0)?;
    let m = splitting_lattice_model(8, 0.3, 0.3).map_err(|e| e.to_string())?;
    let b = coupling_bound("splitting", &m.poset, &m.kernel, 7, 0)?;
    Ok(format!("{a}; {b}; t <= 20, 1e5 replications"))
}

fn criterion_8() -> Outcome {
    let mut rng = random::rng(8);
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let n = rng.gen_range(2..=10);
        let eps = rng.gen_range(0.1..=0.5);
        let (p, _) = random::doeblin_kernel(&mut rng, n, eps);
        let identity = Poset::antichain(n);
        let s = sigma(&identity, &p).map_err(|e| e.to_string())?;
        check(s >= eps - 1e-9, || {
            format!("kernel {k}: sigma {s} < eps {eps}")
        })?;
        let cert = stationary(&identity, &p, 1).map_err(|e| e.to_string())?;
        let mut mu = random::random_probability(&mut rng, n);
        for t in 0..=30 {
            if t > 0 {
                mu = apply(&mu, &p).map_err(|e| e.to_string())?;
            }
            let g = gamma(&identity, &mu, &cert.stationary).map_err(|e| e.to_string())?;
            let tv = tv_distance(&mu, &cert.stationary).map_err(|e| e.to_string())?;
            check((g - tv).abs() <= 1e-9, || {
                format!("kernel {k} t = {t}: gamma {g} vs tv {tv}")
            })?;
            worst = worst.max((g - tv).abs());
        }
    }
    Ok(format!("20 kernels, max |gamma - tv| {worst:.1e}"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

/// Runs the binary writing every output into `dir`; returns the files written.
fn run_into(args: &[String], dir: &Path, extra: &[(&str, &str)]) -> Result<Vec<Vec<u8>>, String> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ordvar"));
    cmd.env_remove("ORDVAR_SEED").args(args);
    cmd.arg("-o").arg(dir.join("main.out"));
    for (flag, file) in extra {
        cmd.arg(flag).arg(dir.join(file));
    }
    let o = cmd.output().map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(format!(
            "{args:?} exited with {:?}: {}",
            o.status.code(),
            String::from_utf8_lossy(&o.stderr)
        ));
    }
    let mut files = vec![std::fs::read(dir.join("main.out")).map_err(|e| e.to_string())?];
    for (_, file) in extra {
        files.push(std::fs::read(dir.join(file)).map_err(|e| e.to_string())?);
    }
    Ok(files)
}

type Run = (Vec<String>, Vec<(&'static str, &'static str)>);

fn criterion_9() -> Outcome {
    let mut runs: Vec<Run> = vec![(
        vec![
            "suite".into(),
            "--seed".into(),
            "0".into(),
            "--trials".into(),
            "200".into(),
        ],
        vec![],
    )];
    let mut entries: Vec<PathBuf> = std::fs::read_dir(configs())
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .collect();
    entries.sort();
    for path in entries {
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        let Some(kind) = v["kind"].as_str() else {
            continue;
        };
        let extra = if kind == "model-run" && v["model"]["name"] != "bernoulli" {
            vec![
                ("--emit-kernel", "kernel.json"),
                ("--trajectory", "path.csv"),
            ]
        } else {
            vec![]
        };
        runs.push((
            vec![
                kind.to_string(),
                "--config".into(),
                path.display().to_string(),
            ],
            extra,
        ));
    }
    let base = std::env::temp_dir().join(format!("ordvar-acceptance-{}", std::process::id()));
    let mut compared = 0;
    for (i, (args, extra)) in runs.iter().enumerate() {
        let (a, b) = (base.join(format!("{i}a")), base.join(format!("{i}b")));
        let first = run_into(args, &a, extra)?;
        let second = run_into(args, &b, extra)?;
        check(first == second, || format!("{args:?} differs between runs"))?;
        compared += first.len();
    }
    let _ = std::fs::remove_dir_all(&base);
    Ok(format!(
        "{} runs, {compared} output files byte-identical",
        runs.len()
    ))
}

type Criterion = (u32, &'static str, Option<u64>, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "oracle equivalence", Some(10), criterion_1),
        (2, "coupling attainment", None, criterion_2),
        (3, "bernoulli model", Some(5), criterion_3),
        (4, "inventory model", Some(30), criterion_4),
        (5, "lemma suite", None, criterion_5),
        (6, "tightness", None, criterion_6),
        (7, "coupling bound", Some(60), criterion_7),
        (8, "classical recovery", None, criterion_8),
        (9, "determinism", None, criterion_9),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (id, name, limit, f) in criteria {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(l)) if elapsed > Duration::from_secs(l) => {
                Err(format!("took {:.2} s, limit {l} s", elapsed.as_secs_f64()))
            }
            (o, _) => o,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "criterion {id} [{name}]: {tag} ({:.2} s) {detail}",
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all 9 criteria passed");
}
