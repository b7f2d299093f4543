//! `ordvar`: batch runner for ordered-variation experiments.
//!
//! Exit codes: 0 success, 2 config or usage error, 3 I/O error, 4 domain
//! error (invalid poset, kernel or measure, non-monotone kernel), 5 failed
//! check or property, 6 no stability certificate found.

mod config;
mod failure;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ordvar::coupling::order_coupling_bound_table;
use ordvar::formats::{KernelFile, MeasurePairFile};
use ordvar::kernel::{self, sigma_with_witness, simulate_path};
use ordvar::measure::{affinity, stochastically_dominated, tv_distance};
use ordvar::models::{self, GridModel, DEFAULT_SHOCK_CELLS};
use ordvar::ordaff::max_upset_deficiency;
use ordvar::suite;
use ordvar::{beta, gamma, ordered_affinity, MarkovKernel, Measure, Poset};
use serde_json::json;

use config::{read_json, ExperimentConfig, Kind, ModelConfig, ModelName};
use failure::Failure;
use output::{emit, real, Csv};

#[derive(Parser, Debug)]
#[command(
    name = "ordvar",
    version,
    about = "Ordered affinity and order-theoretic stability experiments"
)]
struct Cli {
    /// JSON experiment config; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Random seed. Falls back to the config, then ORDVAR_SEED, then 0.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Affinities, deficiencies, γ and β for a pair of measures.
    Metrics {
        /// Measure pair JSON: {"poset": ..., "mu": [...], "nu": [...]}.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// σ(P), the stationary distribution and its convergence certificate.
    Certify {
        /// Kernel JSON: {"poset": ..., "rows": [[...], ...]}.
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        model: ModelFlags,
        /// Largest power m tried for σ(P^m) > 0.
        #[arg(long)]
        m_max: Option<usize>,
    },
    /// Monte Carlo order coupling bound next to the exact γ.
    CoupleSim {
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        model: ModelFlags,
        #[arg(long)]
        x0: Option<usize>,
        #[arg(long)]
        y0: Option<usize>,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        replications: Option<u64>,
    },
    /// γ decay of one of the built-in models against its guaranteed bound.
    ModelRun {
        /// Model to run.
        #[arg(value_enum, value_name = "MODEL")]
        which: Option<ModelName>,
        #[command(flatten)]
        model: ModelFlags,
        /// Number of steps (alias: --horizon).
        #[arg(long, alias = "horizon")]
        t: Option<usize>,
        /// Starting state index (grid models).
        #[arg(long)]
        x0: Option<usize>,
        /// Also write the model as kernel JSON.
        #[arg(long)]
        emit_kernel: Option<PathBuf>,
        /// Also write a simulated trajectory CSV (grid models).
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Randomized property suite over the library's invariants.
    Suite {
        /// Instances per property.
        #[arg(long)]
        trials: Option<usize>,
        /// Kernel JSON whose contraction is checked as an extra property.
        #[arg(long)]
        kernel: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Default)]
struct ModelFlags {
    /// Built-in model instead of an input file.
    #[arg(long, value_enum)]
    model: Option<ModelName>,
    #[arg(long)]
    capacity: Option<f64>,
    #[arg(long)]
    grid_size: Option<usize>,
    #[arg(long)]
    cells: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    s1: Option<f64>,
    #[arg(long)]
    s2: Option<f64>,
}

impl ModelFlags {
    fn merge(&self, base: Option<&ModelConfig>) -> ModelConfig {
        let b = base.cloned().unwrap_or_default();
        ModelConfig {
            name: self.model.or(b.name),
            capacity: self.capacity.or(b.capacity),
            grid_size: self.grid_size.or(b.grid_size),
            cells: self.cells.or(b.cells),
            shock: b.shock,
            n: self.n.or(b.n),
            s1: self.s1.or(b.s1),
            s2: self.s2.or(b.s2),
        }
    }
}

fn build_grid_model(m: &ModelConfig) -> Result<GridModel, Failure> {
    match m.name {
        Some(ModelName::Inventory) => Ok(models::inventory_model(
            m.capacity.unwrap_or(2.0),
            m.grid_size.unwrap_or(101),
            m.shock.unwrap_or_default(),
            m.cells.unwrap_or(DEFAULT_SHOCK_CELLS),
        )?),
        Some(ModelName::Splitting) => Ok(models::splitting_lattice_model(
            m.n.unwrap_or(8),
            m.s1.unwrap_or(0.3),
            m.s2.unwrap_or(0.3),
        )?),
        Some(ModelName::Bernoulli) => Err(Failure::Config(
            "the bernoulli model has no finite kernel; use model-run".into(),
        )),
        None => Err(Failure::Config("no model given".into())),
    }
}

/// Kernel from (in order) an input flag, the config's input path, an inline
/// kernel, or a built-in model.
fn load_kernel(
    input: Option<PathBuf>,
    flags: &ModelFlags,
    cfg: &ExperimentConfig,
) -> Result<(Poset, MarkovKernel), Failure> {
    if let Some(path) = input.or_else(|| cfg.input.clone()) {
        let f: KernelFile = read_json(&path)?;
        return Ok(f.load()?);
    }
    if let Some(f) = &cfg.kernel {
        return Ok(f.load()?);
    }
    let m = flags.merge(cfg.model.as_ref());
    if m.name.is_none() {
        return Err(Failure::Config(
            "no kernel input, inline kernel or model given".into(),
        ));
    }
    let gm = build_grid_model(&m)?;
    Ok((gm.poset, gm.kernel))
}

fn labels(poset: &Poset, set: &ordvar::ElementSet) -> Vec<String> {
    set.indices()
        .into_iter()
        .map(|i| poset.labels()[i].clone())
        .collect()
}

fn metrics(input: Option<PathBuf>, cfg: &ExperimentConfig) -> Result<String, Failure> {
    let file: MeasurePairFile = match input.or_else(|| cfg.input.clone()) {
        Some(path) => read_json(&path)?,
        None => cfg
            .pair
            .clone()
            .ok_or_else(|| Failure::Config("no measure pair input".into()))?,
    };
    let (poset, mu, nu) = file.load()?;
    let (d_fwd, w_fwd) = max_upset_deficiency(&poset, &mu, &nu)?;
    let (d_bwd, w_bwd) = max_upset_deficiency(&poset, &nu, &mu)?;
    let probabilities = mu.is_probability() && nu.is_probability();
    let mut out = json!({
        "mass": mu.mass(),
        "tv_distance": tv_distance(&mu, &nu)?,
        "affinity": affinity(&mu, &nu)?,
        "ordered_affinity": ordered_affinity(&poset, &mu, &nu)?,
        "ordered_affinity_reverse": ordered_affinity(&poset, &nu, &mu)?,
        "deficiency": d_fwd,
        "deficiency_witness": labels(&poset, &w_fwd),
        "deficiency_reverse": d_bwd,
        "deficiency_reverse_witness": labels(&poset, &w_bwd),
        "mu_dominated_by_nu": stochastically_dominated(&poset, &mu, &nu)?,
        "nu_dominated_by_mu": stochastically_dominated(&poset, &nu, &mu)?,
    });
    if probabilities {
        out["gamma"] = json!(gamma(&poset, &mu, &nu)?);
        out["beta"] = json!(beta(&poset, &mu, &nu)?);
    }
    Ok(output::json(&out))
}

fn certify(
    input: Option<PathBuf>,
    flags: &ModelFlags,
    m_max: Option<usize>,
    cfg: &ExperimentConfig,
) -> Result<String, Failure> {
    let (poset, p) = load_kernel(input, flags, cfg)?;
    let cert = kernel::stationary(&poset, &p, m_max.or(cfg.m_max).unwrap_or(16))?;
    let (s, x, y) = sigma_with_witness(&poset, &p)?;
    Ok(output::json(&json!({
        "n": p.len(),
        "sigma": s,
        "sigma_witness": [poset.labels()[x], poset.labels()[y]],
        "m": cert.m,
        "sigma_m": cert.sigma_m,
        "rate": cert.rate,
        "stationary": cert.stationary.weights(),
        "residual": cert.residual,
        "iterations": cert.iterations,
    })))
}

const BOUND_SLACK: f64 = 1e-12;

fn couple_sim(
    input: Option<PathBuf>,
    flags: &ModelFlags,
    start: (Option<usize>, Option<usize>),
    horizon: Option<usize>,
    replications: Option<u64>,
    seed: u64,
    cfg: &ExperimentConfig,
) -> Result<String, Failure> {
    let (poset, p) = load_kernel(input, flags, cfg)?;
    let n = p.len();
    let x0 = start.0.or(cfg.x0).unwrap_or(n - 1);
    let y0 = start.1.or(cfg.y0).unwrap_or(0);
    let horizon = horizon.or(cfg.horizon).unwrap_or(20);
    let reps = replications.or(cfg.replications).unwrap_or(10_000);
    let (rows, sim) = order_coupling_bound_table(&poset, &p, x0, y0, horizon, reps, seed)?;
    let mut csv = Csv::new(&[
        "t",
        "p_never_leq",
        "p_never_geq",
        "se_leq",
        "se_geq",
        "gamma_exact",
        "bound",
    ]);
    let mut violations = Vec::new();
    for r in &rows {
        csv.row(&[
            r.t.to_string(),
            real(r.p_never_leq),
            real(r.p_never_geq),
            real(r.se_leq),
            real(r.se_geq),
            real(r.gamma_exact),
            real(r.bound),
        ]);
        if r.gamma_exact > r.bound + 3.0 * r.bound_se() + BOUND_SLACK {
            violations.push(r.t);
        }
    }
    if sim.oia_mismatches > 0 {
        return Err(Failure::Check(format!(
            "{} path steps where never-ordered and not-ordered disagree",
            sim.oia_mismatches
        )));
    }
    if !violations.is_empty() {
        return Err(Failure::Check(format!(
            "exact gamma exceeds the coupling bound plus 3 standard errors at t = {violations:?}"
        )));
    }
    Ok(csv.into_string())
}

struct ModelRunArgs {
    name: Option<ModelName>,
    flags: ModelFlags,
    t: Option<usize>,
    x0: Option<usize>,
    emit_kernel: Option<PathBuf>,
    trajectory: Option<PathBuf>,
}

fn model_run(a: ModelRunArgs, seed: u64, cfg: &ExperimentConfig) -> Result<String, Failure> {
    let mut m = a.flags.merge(cfg.model.as_ref());
    m.name = a.name.or(m.name);
    let steps = a.t.or(cfg.horizon);
    let mut csv = Csv::new(&["t", "gamma", "bound"]);
    let mut violations = Vec::new();
    if m.name == Some(ModelName::Bernoulli) {
        let steps = steps.unwrap_or(10);
        if steps > models::MAX_DEPTH as usize {
            return Err(ordvar::Error::DepthExceeded(steps as u32, models::MAX_DEPTH).into());
        }
        for t in 0..=steps {
            let g = models::bernoulli_gamma(t as u32)?;
            let bound = 0.5f64.powi(t as i32);
            if g > bound + BOUND_SLACK {
                violations.push(t);
            }
            csv.row(&[t.to_string(), real(g), real(bound)]);
        }
    } else {
        let gm = build_grid_model(&m)?;
        let n = gm.kernel.len();
        let steps = steps.unwrap_or(50);
        let x0 = match a.x0.or(cfg.x0) {
            Some(x) if x >= n => {
                return Err(ordvar::Error::Index { index: x, len: n }.into());
            }
            Some(x) => x,
            None if m.name == Some(ModelName::Inventory) => gm.nearest(gm.grid[n - 1] / 2.0),
            None => 0,
        };
        let cert = kernel::stationary(&gm.poset, &gm.kernel, cfg.m_max.unwrap_or(16))?;
        let mut mu = Measure::dirac(n, x0);
        let g0 = gamma(&gm.poset, &mu, &cert.stationary)?;
        for t in 0..=steps {
            if t > 0 {
                mu = kernel::apply(&mu, &gm.kernel)?;
            }
            let g = gamma(&gm.poset, &mu, &cert.stationary)?;
            let bound = cert.bound(t, g0);
            if g > bound + 1e-9 {
                violations.push(t);
            }
            csv.row(&[t.to_string(), real(g), real(bound)]);
        }
        if let Some(path) = a.emit_kernel.or_else(|| cfg.emit_kernel.clone()) {
            emit(Some(&path), &output::json(&gm.to_json()))?;
        }
        if let Some(path) = a.trajectory.or_else(|| cfg.trajectory.clone()) {
            let states = simulate_path(&gm.kernel, x0, steps, seed)?;
            let mut traj = Csv::new(&["t", "state", "level"]);
            for (t, &s) in states.iter().enumerate() {
                traj.row(&[t.to_string(), s.to_string(), real(gm.grid[s])]);
            }
            emit(Some(&path), &traj.into_string())?;
        }
    }
    if !violations.is_empty() {
        return Err(Failure::Check(format!(
            "gamma exceeds the guaranteed bound at t = {violations:?}"
        )));
    }
    Ok(csv.into_string())
}

fn run_suite(
    trials: Option<usize>,
    kernel_path: Option<PathBuf>,
    seed: u64,
    cfg: &ExperimentConfig,
) -> Result<(String, bool), Failure> {
    let trials = trials.or(cfg.trials).unwrap_or(200);
    let report = match kernel_path.or_else(|| cfg.input.clone()) {
        Some(path) => {
            let f: KernelFile = read_json(&path)?;
            let (poset, p) = f.load()?;
            suite::run_suite_with_kernel(seed, trials, &poset, &p)?
        }
        None => match &cfg.kernel {
            Some(f) => {
                let (poset, p) = f.load()?;
                suite::run_suite_with_kernel(seed, trials, &poset, &p)?
            }
            None => suite::run_suite(seed, trials),
        },
    };
    let text = serde_json::to_value(&report).expect("report serializes");
    Ok((output::json(&text), report.all_passed()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let seed = config::seed(cli.seed, &cfg)?;
    let out = cli.output.clone().or_else(|| cfg.output.clone());
    let (kind, result) = match cli.command {
        Command::Metrics { input } => (Kind::Metrics, metrics(input, &cfg)),
        Command::Certify {
            input,
            model,
            m_max,
        } => (Kind::Certify, certify(input, &model, m_max, &cfg)),
        Command::CoupleSim {
            input,
            model,
            x0,
            y0,
            horizon,
            replications,
        } => (
            Kind::CoupleSim,
            couple_sim(input, &model, (x0, y0), horizon, replications, seed, &cfg),
        ),
        Command::ModelRun {
            which,
            model,
            t,
            x0,
            emit_kernel,
            trajectory,
        } => (
            Kind::ModelRun,
            model_run(
                ModelRunArgs {
                    name: which,
                    flags: model,
                    t,
                    x0,
                    emit_kernel,
                    trajectory,
                },
                seed,
                &cfg,
            ),
        ),
        Command::Suite { trials, kernel } => {
            cfg.check_kind(Kind::Suite)?;
            let (text, passed) = run_suite(trials, kernel, seed, &cfg)?;
            emit(out.as_deref(), &text)?;
            if !passed {
                return Err(Failure::Check("property suite reported failures".into()));
            }
            return Ok(());
        }
    };
    cfg.check_kind(kind)?;
    emit(out.as_deref(), &result?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ordvar: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
