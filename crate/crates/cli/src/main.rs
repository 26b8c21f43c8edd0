//! spinqsd: steady states, stochastic trajectories, and figure pipelines
//! for the driven damped collective spin, from the command line.
//!
//! Exit codes: 0 ok, 2 usage, 3 solver failure, 4 integration failure.

mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use spinqsd::analytic;
use spinqsd::experiments::{
    self, beta_estimate, finite_size_scaling, flow_portrait, log_grid, run_sweep, Method,
    Observable, QsdBudget, StartPoint, SweepSpec,
};
use spinqsd::liouvillian::observables;
use spinqsd::qsd::{self, InitialCondition};
use spinqsd::{CoherentLabel, Error, Liouvillian, ModelParams, SpinQuantum};

use output::{fmt_g, CsvWriter, Manifest};

#[derive(Parser)]
#[command(
    name = "spinqsd",
    version,
    about = "Driven-dissipative collective spin: exact solver, QSD trajectories, figure pipelines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Worker threads (0 = one per core). Env SPINQSD_THREADS overrides.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Output directory for CSV files and the run manifest.
    #[arg(long, global = true, default_value = "spinqsd-out")]
    output_dir: PathBuf,

    /// Base seed for all stochastic pipelines.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    /// Damping rate κ; all rates are quoted in units of κ.
    #[arg(long, global = true, default_value_t = 1.0)]
    kappa: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Exact steady state: observables and the spectral gap at one (j, λ).
    Steady(SteadyArgs),
    /// QSD trajectory ensemble, sampled Bloch tracks to CSV.
    Traj(TrajArgs),
    /// Reproduce one figure's data file.
    Figure(FigureArgs),
    /// Deterministic flow portrait (equator initial conditions).
    Flow(FlowArgs),
    /// Finite-size scaling of ⟨Jz⟩/j at λ = 1.
    Scaling(ScalingArgs),
}

#[derive(Args)]
struct SteadyArgs {
    /// Spin length j (half-integers allowed, e.g. 0.5).
    #[arg(long)]
    j: f64,
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = 0.0)]
    omega_z: f64,
    /// Which observable column set to print.
    #[arg(long, value_enum, default_value_t = WhichObservable::All)]
    observable: WhichObservable,
    /// Skip the (second factorization) spectral-gap solve.
    #[arg(long, default_value_t = false)]
    no_gap: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum WhichObservable {
    All,
    MeanJz,
    VarJz,
}

#[derive(Args)]
struct TrajArgs {
    #[arg(long)]
    j: f64,
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = 0.0)]
    omega_z: f64,
    #[arg(long, default_value_t = 16)]
    n_traj: usize,
    #[arg(long, default_value_t = 10.0)]
    t_final: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    /// Starting label: mu-plus, mu-minus, north, or "re,im".
    #[arg(long, default_value = "mu-plus")]
    start: String,
    #[arg(long, default_value_t = 200)]
    n_samples: usize,
}

#[derive(Args)]
struct FigureArgs {
    /// 1, 2, 3, 4a, 4b, or 5.
    #[arg(long)]
    which: String,
    #[arg(long, value_enum, default_value_t = Budget::Quick)]
    budget: Budget,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Budget {
    Quick,
    Full,
}

impl Budget {
    fn as_str(&self) -> &'static str {
        match self {
            Budget::Quick => "quick",
            Budget::Full => "full",
        }
    }
}

#[derive(Args)]
struct FlowArgs {
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = 12)]
    n_init: usize,
    #[arg(long, default_value_t = 40.0)]
    t_final: f64,
    #[arg(long, default_value_t = 200)]
    n_samples: usize,
}

#[derive(Args)]
struct ScalingArgs {
    #[arg(long, value_enum, default_value_t = Budget::Quick)]
    budget: Budget,
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let threads = std::env::var("SPINQSD_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .unwrap_or(cli.threads);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    };

    let result = pool.install(|| dispatch(&cli, threads));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::NonConvergence { .. } | Error::AmbiguousNull { .. } => 3,
        Error::Blowup { .. } | Error::StepTooLarge { .. } => 4,
        _ => 2,
    }
}

fn dispatch(cli: &Cli, threads: usize) -> Result<(), Error> {
    match &cli.command {
        Command::Steady(a) => cmd_steady(cli, a),
        Command::Traj(a) => cmd_traj(cli, a, threads),
        Command::Figure(a) => cmd_figure(cli, a, threads),
        Command::Flow(a) => cmd_flow(cli, a, threads),
        Command::Scaling(a) => cmd_scaling(cli, a, threads),
    }
}

fn spin(j: f64) -> Result<SpinQuantum, Error> {
    SpinQuantum::from_j(j)
}

fn cmd_steady(cli: &Cli, a: &SteadyArgs) -> Result<(), Error> {
    let j = spin(a.j)?;
    let params = ModelParams::new(j, a.lambda * cli.kappa, cli.kappa)?
        .with_omega_z(a.omega_z * cli.kappa)?;
    let liou = Liouvillian::new(params)?;
    let ss = liou.steady_state()?;
    let obs = observables(&ss.rho, liou.ops());
    let gap = if a.no_gap {
        f64::NAN
    } else {
        liou.spectral_gap(&ss)?
    };
    let jv = j.j();

    let header = match a.observable {
        WhichObservable::All => {
            "j,lambda,omega_z,mean_jz_over_j,var_jz_over_j2,purity,spectral_gap,residual"
        }
        WhichObservable::MeanJz => "j,lambda,omega_z,mean_jz_over_j",
        WhichObservable::VarJz => "j,lambda,omega_z,var_jz_over_j2",
    };
    let row = match a.observable {
        WhichObservable::All => vec![
            fmt_g(a.j),
            fmt_g(a.lambda),
            fmt_g(a.omega_z),
            fmt_g(obs.mean_jz / jv),
            fmt_g(obs.var_jz / (jv * jv)),
            fmt_g(obs.purity),
            fmt_g(gap),
            fmt_g(ss.residual),
        ],
        WhichObservable::MeanJz => vec![
            fmt_g(a.j),
            fmt_g(a.lambda),
            fmt_g(a.omega_z),
            fmt_g(obs.mean_jz / jv),
        ],
        WhichObservable::VarJz => vec![
            fmt_g(a.j),
            fmt_g(a.lambda),
            fmt_g(a.omega_z),
            fmt_g(obs.var_jz / (jv * jv)),
        ],
    };
    println!("{header}");
    println!("{}", row.join(","));
    Ok(())
}

fn parse_start(s: &str) -> Result<StartPoint, Error> {
    match s {
        "mu-plus" => Ok(StartPoint::MuPlus),
        "mu-minus" => Ok(StartPoint::MuMinus),
        "north" => Ok(StartPoint::Custom(CoherentLabel::north(Complex64::ZERO))),
        other => {
            let parts: Vec<&str> = other.split(',').collect();
            if parts.len() == 2 {
                if let (Ok(re), Ok(im)) = (parts[0].parse::<f64>(), parts[1].parse::<f64>()) {
                    return Ok(StartPoint::Custom(CoherentLabel::north(Complex64::new(
                        re, im,
                    ))));
                }
            }
            Err(Error::InvalidParams(format!("unrecognized start: {other}")))
        }
    }
}

fn cmd_traj(cli: &Cli, a: &TrajArgs, threads: usize) -> Result<(), Error> {
    let j = spin(a.j)?;
    let params = ModelParams::new(j, a.lambda * cli.kappa, cli.kappa)?
        .with_omega_z(a.omega_z * cli.kappa)?;
    let start = parse_start(&a.start)?;
    let label0 = match start {
        StartPoint::MuPlus => {
            CoherentLabel::north(analytic::fixed_points(&params)?.mu_plus).rebalanced(4.0)
        }
        StartPoint::MuMinus => {
            CoherentLabel::north(analytic::fixed_points(&params)?.mu_minus).rebalanced(4.0)
        }
        StartPoint::Custom(l) => l,
    };
    let n_samples = a.n_samples.max(1);
    let stride = (a.t_final / n_samples as f64).max(a.dt);
    let sample_times: Vec<f64> = (0..=n_samples).map(|k| k as f64 * stride).collect();
    let samples = qsd::simulate_ensemble(
        &params,
        a.n_traj,
        a.dt,
        &sample_times,
        &InitialCondition::Fixed(label0),
        cli.seed,
    )?;

    let mut w = CsvWriter::create(&cli.output_dir, "traj.csv")?;
    w.header("traj_id,t,nx,ny,nz")?;
    for (tid, track) in samples.labels.iter().enumerate() {
        for (k, label) in track.iter().enumerate() {
            let n = label.bloch_vector();
            w.row(&[
                tid.to_string(),
                fmt_g(samples.times[k]),
                fmt_g(n[0]),
                fmt_g(n[1]),
                fmt_g(n[2]),
            ])?;
        }
    }
    let path = w.finish()?;
    Manifest::new("traj", cli.seed, threads)
        .arg("j", fmt_g(a.j))
        .arg("lambda", fmt_g(a.lambda))
        .arg("omega_z", fmt_g(a.omega_z))
        .arg("kappa", fmt_g(cli.kappa))
        .arg("n_traj", a.n_traj.to_string())
        .arg("t_final", fmt_g(a.t_final))
        .arg("dt", fmt_g(a.dt))
        .arg("start", a.start.clone())
        .arg("n_samples", a.n_samples.to_string())
        .output(&path)
        .write(&cli.output_dir)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_flow(cli: &Cli, a: &FlowArgs, threads: usize) -> Result<(), Error> {
    // portraits live in the thermodynamic limit: large j makes κ̃ → κ
    let j = SpinQuantum::from_two_j(2_000_000)?;
    let params = ModelParams::new(j, a.lambda * cli.kappa, cli.kappa)?;
    let tracks = flow_portrait(&params, a.n_init, a.t_final, a.n_samples);
    let mut w = CsvWriter::create(&cli.output_dir, "flow.csv")?;
    w.header("lambda,track_id,t,nx,ny,nz")?;
    for tr in &tracks {
        for (t, n) in &tr.samples {
            w.row(&[
                fmt_g(a.lambda),
                tr.track_id.to_string(),
                fmt_g(*t),
                fmt_g(n[0]),
                fmt_g(n[1]),
                fmt_g(n[2]),
            ])?;
        }
    }
    let path = w.finish()?;
    Manifest::new("flow", cli.seed, threads)
        .arg("lambda", fmt_g(a.lambda))
        .arg("n_init", a.n_init.to_string())
        .arg("t_final", fmt_g(a.t_final))
        .arg("n_samples", a.n_samples.to_string())
        .output(&path)
        .write(&cli.output_dir)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_scaling(cli: &Cli, a: &ScalingArgs, threads: usize) -> Result<(), Error> {
    let (fit, points, budget) = scaling_run(cli.kappa, a.budget, cli.seed)?;
    let mut w = CsvWriter::create(&cli.output_dir, "fig5.csv")?;
    w.header("j,mean_jz_over_j,method,stderr")?;
    for p in &points {
        w.row(&[
            fmt_g(p.two_j as f64 / 2.0),
            fmt_g(p.value),
            p.method.as_str().to_string(),
            fmt_g(p.stderr),
        ])?;
    }
    let path = w.finish()?;
    Manifest::new("scaling", cli.seed, threads)
        .arg("budget", budget.to_string())
        .output(&path)
        .write(&cli.output_dir)?;
    println!("wrote {}", path.display());
    println!(
        "slope,{},r_squared,{}",
        fmt_g(fit.slope),
        fmt_g(fit.r_squared)
    );
    Ok(())
}

type ScalingOutcome = (
    experiments::ScalingFit,
    Vec<experiments::ScalingPoint>,
    &'static str,
);

fn scaling_run(kappa: f64, budget: Budget, seed: u64) -> Result<ScalingOutcome, Error> {
    let tj = |v: u32| SpinQuantum::from_two_j(v).unwrap();
    match budget {
        Budget::Quick => {
            let exact: Vec<_> = [8u32, 16, 32, 64].into_iter().map(tj).collect();
            let qsd_j: Vec<_> = [32u32, 64, 128, 256].into_iter().map(tj).collect();
            let b = QsdBudget {
                n_traj: 6,
                dt: 1e-3,
                n_blocks: 16,
            };
            let (fit, pts) = finite_size_scaling(&exact, &qsd_j, kappa, &b, seed)?;
            Ok((fit, pts, "quick"))
        }
        Budget::Full => {
            let exact: Vec<_> = [8u32, 16, 32, 64, 128].into_iter().map(tj).collect();
            let qsd_j: Vec<_> = [64u32, 128, 256, 512].into_iter().map(tj).collect();
            let b = QsdBudget {
                n_traj: 12,
                dt: 1e-3,
                n_blocks: 32,
            };
            let (fit, pts) = finite_size_scaling(&exact, &qsd_j, kappa, &b, seed)?;
            Ok((fit, pts, "full"))
        }
    }
}

fn cmd_figure(cli: &Cli, a: &FigureArgs, threads: usize) -> Result<(), Error> {
    let full = a.budget == Budget::Full;
    let manifest = Manifest::new("figure", cli.seed, threads)
        .arg("which", a.which.clone())
        .arg("budget", a.budget.as_str().to_string())
        .arg("kappa", fmt_g(cli.kappa));
    let path = match a.which.as_str() {
        "1" => fig_sweep(cli, full, Observable::MeanJz)?,
        "4a" => fig_sweep(cli, full, Observable::VarJz)?,
        "2" => fig2(cli, full)?,
        "3" => fig3(cli, full)?,
        "4b" => fig4b(cli)?,
        "5" => {
            let (fit, points, _) = scaling_run(cli.kappa, a.budget, cli.seed)?;
            let mut w = CsvWriter::create(&cli.output_dir, "fig5.csv")?;
            w.header("j,mean_jz_over_j,method,stderr")?;
            for p in &points {
                w.row(&[
                    fmt_g(p.two_j as f64 / 2.0),
                    fmt_g(p.value),
                    p.method.as_str().to_string(),
                    fmt_g(p.stderr),
                ])?;
            }
            let path = w.finish()?;
            println!(
                "slope,{},r_squared,{}",
                fmt_g(fit.slope),
                fmt_g(fit.r_squared)
            );
            path
        }
        other => {
            return Err(Error::InvalidParams(format!(
                "unknown figure {other}; expected 1, 2, 3, 4a, 4b, or 5"
            )))
        }
    };
    manifest.output(&path).write(&cli.output_dir)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn fig_sweep(cli: &Cli, full: bool, observable: Observable) -> Result<PathBuf, Error> {
    let (j_list, lambdas): (Vec<u32>, Vec<f64>) = match (observable, full) {
        (Observable::MeanJz, true) => (vec![20, 60, 200], grid(0.05, 2.0, 0.05)),
        (Observable::MeanJz, false) => (vec![20, 60], grid(0.1, 2.0, 0.1)),
        (Observable::VarJz, true) => (vec![50, 100, 200], grid(0.05, 2.0, 0.05)),
        (Observable::VarJz, false) => (vec![50, 100], grid(0.1, 2.0, 0.1)),
    };
    let spec = SweepSpec {
        j_list: j_list
            .into_iter()
            .map(|t| SpinQuantum::from_two_j(t).unwrap())
            .collect(),
        lambda_grid: lambdas,
        observable,
        method: Method::ExactSteadyState,
    };
    let rows = run_sweep(&spec, cli.kappa, 0.0, cli.seed)?;
    let (name, value_col) = match observable {
        Observable::MeanJz => ("fig1.csv", "mean_jz_over_j"),
        Observable::VarJz => ("fig4a.csv", "var_jz_over_j2"),
    };
    let mut w = CsvWriter::create(&cli.output_dir, name)?;
    w.header(&format!("j,lambda,{value_col},asymptote"))?;
    for r in &rows {
        w.row(&[
            fmt_g(r.two_j as f64 / 2.0),
            fmt_g(r.lambda),
            r.value.map(fmt_g).unwrap_or_else(|| "failed".to_string()),
            fmt_g(r.asymptote),
        ])?;
    }
    w.finish()
}

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + i as f64 * step).collect()
}

fn fig2(cli: &Cli, full: bool) -> Result<PathBuf, Error> {
    let j = SpinQuantum::from_two_j(2_000_000)?;
    let (n_init, n_samples) = if full { (16, 400) } else { (8, 150) };
    let mut w = CsvWriter::create(&cli.output_dir, "fig2.csv")?;
    w.header("lambda,track_id,t,nx,ny,nz")?;
    for lambda in [0.95, 1.05] {
        let params = ModelParams::new(j, lambda * cli.kappa, cli.kappa)?;
        let t_final = if lambda < 1.0 {
            60.0
        } else {
            3.0 * analytic::torus_period(&params)?
        };
        let tracks = flow_portrait(&params, n_init, t_final / cli.kappa, n_samples);
        for tr in &tracks {
            for (t, n) in &tr.samples {
                w.row(&[
                    fmt_g(lambda),
                    tr.track_id.to_string(),
                    fmt_g(*t),
                    fmt_g(n[0]),
                    fmt_g(n[1]),
                    fmt_g(n[2]),
                ])?;
            }
        }
    }
    w.finish()
}

fn fig3(cli: &Cli, full: bool) -> Result<PathBuf, Error> {
    let j = SpinQuantum::from_two_j(1000)?; // j = 500
                                            // panel (b), the torus-hopping trajectory, is the figure's data file;
                                            // the λ < 1 companion panel goes to fig3a.csv with the same schema
    let mut path = PathBuf::new();
    for (name, lambda) in [("fig3a.csv", 0.95), ("fig3.csv", 1.05)] {
        let params = ModelParams::new(j, lambda * cli.kappa, cli.kappa)?;
        let t_final = if lambda < 1.0 {
            60.0 / cli.kappa
        } else if full {
            25_000.0 / cli.kappa
        } else {
            2_000.0 / cli.kappa
        };
        let rec = experiments::sample_trajectory(
            &params,
            StartPoint::MuPlus,
            t_final,
            1e-3 / cli.kappa,
            if full { 2000 } else { 500 },
            cli.seed,
        )?;
        let mut w = CsvWriter::create(&cli.output_dir, name)?;
        w.header("t,nx,ny,nz,m")?;
        for k in 0..rec.times.len() {
            w.row(&[
                fmt_g(rec.times[k]),
                fmt_g(rec.bloch[k][0]),
                fmt_g(rec.bloch[k][1]),
                fmt_g(rec.bloch[k][2]),
                fmt_g(rec.m[k]),
            ])?;
        }
        path = w.finish()?;
    }
    Ok(path)
}

fn fig4b(cli: &Cli) -> Result<PathBuf, Error> {
    let grid = log_grid(1e-5, 1e-1, 8);
    let rows = beta_estimate(
        |eps| analytic::variance_asymptote(1.0 + eps).unwrap_or(f64::NAN),
        &grid,
    )?;
    let mut w = CsvWriter::create(&cli.output_dir, "fig4b.csv")?;
    w.header("epsilon,beta,beta_model")?;
    for (eps, beta) in rows {
        w.row(&[fmt_g(eps), fmt_g(beta), fmt_g(1.0 + 1.0 / eps.ln())])?;
    }
    w.finish()
}
