//! Data-generating pipelines behind the figures: steady-state sweeps, flow
//! portraits, sample trajectories, the variance "exponent", and finite-size
//! scaling, each with built-in error estimates and reproducible seeding.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::analytic;
use crate::error::{Error, Result};
use crate::liouvillian::{observables, Liouvillian};
use crate::model::ModelParams;
use crate::qsd::TrajectoryState;
use crate::spin::{CoherentLabel, SpinQuantum};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    MeanJz,
    VarJz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ExactSteadyState,
    QsdTimeAverage,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ExactSteadyState => "exact",
            Method::QsdTimeAverage => "qsd",
        }
    }
}

/// Grid specification for Fig. 1 / Fig. 4(a)-style sweeps.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub j_list: Vec<SpinQuantum>,
    pub lambda_grid: Vec<f64>,
    pub observable: Observable,
    pub method: Method,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.j_list.is_empty() || self.lambda_grid.is_empty() {
            return Err(Error::InvalidParams("sweep grids must be non-empty".into()));
        }
        if self.lambda_grid.windows(2).any(|w| w[1] <= w[0])
            || self.j_list.windows(2).any(|w| w[1].two_j() <= w[0].two_j())
        {
            return Err(Error::InvalidParams(
                "sweep grids must be strictly increasing".into(),
            ));
        }
        Ok(())
    }
}

/// One grid point of a sweep. `value` is ⟨Jz⟩/j or ΔJz²/j² depending on the
/// observable; `asymptote` the corresponding thermodynamic-limit curve.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub two_j: u32,
    pub lambda: f64,
    pub value: Option<f64>,
    pub asymptote: f64,
    pub method: Method,
    pub seed: Option<u64>,
    pub stderr: Option<f64>,
    pub error: Option<String>,
}

/// Shared knobs for stochastic estimates.
#[derive(Debug, Clone, Copy)]
pub struct QsdBudget {
    pub n_traj: usize,
    pub dt: f64,
    /// Averaging window in units of the burn-in-adjusted block length.
    pub n_blocks: usize,
}

impl Default for QsdBudget {
    fn default() -> Self {
        QsdBudget {
            n_traj: 8,
            dt: 1e-3,
            n_blocks: 24,
        }
    }
}

/// Run a (j, λ) sweep of steady-state observables. Per-point failures are
/// recorded in the row and the sweep continues.
pub fn run_sweep(spec: &SweepSpec, kappa: f64, omega_z: f64, seed: u64) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let mut rows = Vec::new();
    for &j in &spec.j_list {
        for &lambda in &spec.lambda_grid {
            let asymptote = match spec.observable {
                Observable::MeanJz => analytic::jz_asymptote(lambda),
                Observable::VarJz => {
                    if lambda > 1.0 {
                        analytic::variance_asymptote(lambda).unwrap_or(f64::NAN)
                    } else {
                        0.0
                    }
                }
            };
            let params = match ModelParams::new(j, lambda * kappa, kappa)
                .and_then(|p| p.with_omega_z(omega_z))
            {
                Ok(p) => p,
                Err(e) => {
                    rows.push(SweepRow {
                        two_j: j.two_j(),
                        lambda,
                        value: None,
                        asymptote,
                        method: spec.method,
                        seed: None,
                        stderr: None,
                        error: Some(e.to_string()),
                    });
                    continue;
                }
            };
            let row = match spec.method {
                Method::ExactSteadyState => exact_point(&params, spec.observable),
                Method::QsdTimeAverage => {
                    qsd_point(&params, spec.observable, &QsdBudget::default(), seed)
                }
            };
            rows.push(match row {
                Ok((value, stderr)) => SweepRow {
                    two_j: j.two_j(),
                    lambda,
                    value: Some(value),
                    asymptote,
                    method: spec.method,
                    seed: (spec.method == Method::QsdTimeAverage).then_some(seed),
                    stderr,
                    error: None,
                },
                Err(e) => SweepRow {
                    two_j: j.two_j(),
                    lambda,
                    value: None,
                    asymptote,
                    method: spec.method,
                    seed: None,
                    stderr: None,
                    error: Some(e.to_string()),
                },
            });
        }
    }
    Ok(rows)
}

fn exact_point(params: &ModelParams, observable: Observable) -> Result<(f64, Option<f64>)> {
    let liou = Liouvillian::new(*params)?;
    let ss = liou.steady_state()?;
    let obs = observables(&ss.rho, liou.ops());
    let jv = params.j.j();
    let value = match observable {
        Observable::MeanJz => obs.mean_jz / jv,
        Observable::VarJz => obs.var_jz / (jv * jv),
    };
    Ok((value, None))
}

/// Long-time average over an ensemble of trajectories, with burn-in set by
/// the slower of the relaxation time ξ and the noise timescale j/κ, and
/// blocked standard errors (block length ≥ 10 T in the cyclic regime).
pub fn qsd_point(
    params: &ModelParams,
    observable: Observable,
    budget: &QsdBudget,
    seed: u64,
) -> Result<(f64, Option<f64>)> {
    let lambda = params.lambda();
    let kappa = params.kappa;
    let jv = params.j.j();
    let xi = if (1.0 - lambda).abs() > 1e-9 {
        analytic::relaxation_time(lambda, kappa).unwrap_or(0.0)
    } else {
        0.0
    };
    let t_burn = (10.0 * xi).max(jv / kappa);
    let mut block = (0.1 * jv / kappa).max(5.0 * xi).max(1.0 / kappa);
    if lambda > 1.0 {
        if let Ok(t) = analytic::torus_period(params) {
            block = block.max(10.0 * t);
        }
    }
    let n_samples_per_block = (block / budget.dt / 50.0).ceil().max(1.0) as usize; // thin samples
    let sample_dt = budget.dt * n_samples_per_block as f64;
    let total = t_burn + block * budget.n_blocks as f64;

    let n_steps = (total / budget.dt).ceil() as usize;
    let burn_steps = (t_burn / budget.dt).ceil() as usize;

    let start = initial_for(params)?;
    let block_means: Result<Vec<Vec<(f64, f64)>>> = (0..budget.n_traj)
        .into_par_iter()
        .map(|idx| {
            let mut state = TrajectoryState::new(start, seed, idx);
            let mut blocks: Vec<(f64, f64)> = Vec::new();
            let mut acc1 = 0.0f64;
            let mut acc2 = 0.0f64;
            let mut count = 0usize;
            let per_block = (block / sample_dt).ceil().max(1.0) as usize;
            for step_no in 0..n_steps {
                state.step(params, budget.dt)?;
                if step_no >= burn_steps && step_no % n_samples_per_block == 0 {
                    let (m1, m2) = label_moments(&state.label, params.j);
                    acc1 += m1;
                    acc2 += m2;
                    count += 1;
                    if count == per_block {
                        blocks.push((acc1 / count as f64, acc2 / count as f64));
                        acc1 = 0.0;
                        acc2 = 0.0;
                        count = 0;
                    }
                }
            }
            Ok(blocks)
        })
        .collect();
    let blocks: Vec<(f64, f64)> = block_means?.into_iter().flatten().collect();
    if blocks.len() < 4 {
        return Err(Error::InvalidParams(
            "too few blocks for a stochastic estimate".into(),
        ));
    }

    // jackknife over blocks handles both the linear and the quadratic
    // (variance) statistic uniformly
    let n = blocks.len() as f64;
    let sum1: f64 = blocks.iter().map(|b| b.0).sum();
    let sum2: f64 = blocks.iter().map(|b| b.1).sum();
    let estimate = |s1: f64, s2: f64, count: f64| -> f64 {
        let m1 = s1 / count;
        let m2 = s2 / count;
        match observable {
            Observable::MeanJz => m1,
            Observable::VarJz => m2 - m1 * m1,
        }
    };
    let full = estimate(sum1, sum2, n);
    let mut jack_sum = 0.0;
    let mut jack_sq = 0.0;
    for b in &blocks {
        let e = estimate(sum1 - b.0, sum2 - b.1, n - 1.0);
        jack_sum += e;
        jack_sq += e * e;
    }
    let jack_mean = jack_sum / n;
    let var = (n - 1.0) / n * (jack_sq - n * jack_mean * jack_mean);
    Ok((full, Some(var.max(0.0).sqrt())))
}

/// (⟨Jz⟩/j, ⟨Jz²⟩/j²) of one coherent label.
fn label_moments(label: &CoherentLabel, j: SpinQuantum) -> (f64, f64) {
    let jv = j.j();
    (label.jz_mean(j) / jv, label.jz_second_moment(j) / (jv * jv))
}

fn initial_for(params: &ModelParams) -> Result<CoherentLabel> {
    // start on the stable fixed point below threshold, on the equatorial
    // fixed point above it; both relax within the burn-in
    let fp = analytic::fixed_points(params)?;
    Ok(CoherentLabel::north(fp.mu_minus).rebalanced(4.0))
}

/// Deterministic Bloch-sphere track of one initial condition.
#[derive(Debug, Clone)]
pub struct FlowTrack {
    pub track_id: usize,
    pub samples: Vec<(f64, [f64; 3])>,
}

/// Integrate the deterministic flow from `n_init` equally spaced equator
/// labels |μ| = 1, sampling `n_samples` points per track.
pub fn flow_portrait(
    params: &ModelParams,
    n_init: usize,
    t_final: f64,
    n_samples: usize,
) -> Vec<FlowTrack> {
    let dt = 1e-3 / params.kappa.max(params.omega);
    let stride_t = t_final / n_samples as f64;
    (0..n_init)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / n_init as f64;
            let mut label = CoherentLabel::north(Complex64::from_polar(1.0, theta));
            let mut samples = vec![(0.0, label.bloch_vector())];
            let mut t = 0.0;
            for s in 1..=n_samples {
                let target = s as f64 * stride_t;
                let n = ((target - t) / dt).round().max(1.0) as usize;
                let h = (target - t) / n as f64;
                for _ in 0..n {
                    label = analytic::deterministic_rk4_step(&label, params, h);
                }
                t = target;
                samples.push((t, label.bloch_vector()));
            }
            FlowTrack {
                track_id: k,
                samples,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub enum StartPoint {
    MuPlus,
    MuMinus,
    Custom(CoherentLabel),
}

/// One stochastic trajectory with its Bloch track and, in the cyclic
/// regime, the torus-label track m(t).
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub bloch: Vec<[f64; 3]>,
    pub m: Vec<f64>,
}

pub fn sample_trajectory(
    params: &ModelParams,
    start: StartPoint,
    t_final: f64,
    dt: f64,
    n_samples: usize,
    seed: u64,
) -> Result<TrajectoryRecord> {
    let label0 = match start {
        StartPoint::MuPlus => {
            CoherentLabel::north(analytic::fixed_points(params)?.mu_plus).rebalanced(4.0)
        }
        StartPoint::MuMinus => {
            CoherentLabel::north(analytic::fixed_points(params)?.mu_minus).rebalanced(4.0)
        }
        StartPoint::Custom(l) => l,
    };
    let cyclic = params.omega > params.kappa_tilde();
    let mut state = TrajectoryState::new(label0, seed, 0);
    let total_steps = (t_final / dt).ceil() as usize;
    let stride = (total_steps / n_samples).max(1);
    let mut rec = TrajectoryRecord {
        times: Vec::new(),
        bloch: Vec::new(),
        m: Vec::new(),
    };
    let mut push = |state: &TrajectoryState| -> Result<()> {
        rec.times.push(state.time);
        rec.bloch.push(state.label.bloch_vector());
        rec.m.push(if cyclic {
            analytic::to_torus_coords(&state.label, params)?.m
        } else {
            f64::NAN
        });
        Ok(())
    };
    push(&state)?;
    for step_no in 1..=total_steps {
        state.step(params, dt)?;
        if step_no % stride == 0 || step_no == total_steps {
            push(&state)?;
        }
    }
    Ok(rec)
}

/// β(ε) = d ln f / d ln ε by central differences on a log-uniform grid.
/// Returns (ε, β) pairs for the interior points of the grid.
pub fn beta_estimate(curve: impl Fn(f64) -> f64, epsilon_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if epsilon_grid.len() < 3 {
        return Err(Error::InvalidParams(
            "beta estimate needs at least 3 grid points".into(),
        ));
    }
    let mut lnf = Vec::with_capacity(epsilon_grid.len());
    for &eps in epsilon_grid {
        if eps <= 0.0 {
            return Err(Error::NonPositiveCurve {
                epsilon: eps,
                value: f64::NAN,
            });
        }
        let v = curve(eps);
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::NonPositiveCurve {
                epsilon: eps,
                value: v,
            });
        }
        lnf.push(v.ln());
    }
    let mut out = Vec::new();
    for i in 1..epsilon_grid.len() - 1 {
        let beta =
            (lnf[i + 1] - lnf[i - 1]) / (epsilon_grid[i + 1].ln() - epsilon_grid[i - 1].ln());
        out.push((epsilon_grid[i], beta));
    }
    Ok(out)
}

/// Log-uniform grid with `per_decade` points per decade, inclusive of the
/// endpoints' decades.
pub fn log_grid(eps_min: f64, eps_max: f64, per_decade: usize) -> Vec<f64> {
    let lo = eps_min.log10();
    let hi = eps_max.log10();
    let n = ((hi - lo) * per_decade as f64).round() as usize;
    (0..=n)
        .map(|i| 10f64.powf(lo + i as f64 / per_decade as f64))
        .collect()
}

/// Weighted least-squares fit of ln(value) vs ln(j).
#[derive(Debug, Clone)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// (ln j, ln value) pairs entering the fit.
    pub points: Vec<(f64, f64)>,
}

/// One finite-size-scaling data point.
#[derive(Debug, Clone)]
pub struct ScalingPoint {
    pub two_j: u32,
    pub value: f64,
    pub stderr: f64,
    pub method: Method,
}

/// ⟨Jz⟩/j at λ = 1 over a span of system sizes: exact steady states for the
/// small ones, stochastic time averages for the large ones, with the two
/// methods required to agree within 3 standard errors on the overlap.
pub fn finite_size_scaling(
    j_exact: &[SpinQuantum],
    j_qsd: &[SpinQuantum],
    kappa: f64,
    budget: &QsdBudget,
    seed: u64,
) -> Result<(ScalingFit, Vec<ScalingPoint>)> {
    let mut points: Vec<ScalingPoint> = Vec::new();
    for &j in j_exact {
        let params = ModelParams::new(j, kappa, kappa)?;
        let (value, _) = exact_point(&params, Observable::MeanJz)?;
        points.push(ScalingPoint {
            two_j: j.two_j(),
            value,
            stderr: 0.0,
            method: Method::ExactSteadyState,
        });
    }
    for &j in j_qsd {
        let params = ModelParams::new(j, kappa, kappa)?;
        let (value, stderr) = qsd_point(&params, Observable::MeanJz, budget, seed)?;
        points.push(ScalingPoint {
            two_j: j.two_j(),
            value,
            stderr: stderr.unwrap_or(0.0),
            method: Method::QsdTimeAverage,
        });
    }

    // overlap check
    let mut overlaps = 0;
    for &je in j_exact {
        for &jq in j_qsd {
            if je.two_j() == jq.two_j() {
                overlaps += 1;
                let e = points
                    .iter()
                    .find(|p| p.two_j == je.two_j() && p.method == Method::ExactSteadyState)
                    .unwrap();
                let q = points
                    .iter()
                    .find(|p| p.two_j == je.two_j() && p.method == Method::QsdTimeAverage)
                    .unwrap();
                if (e.value - q.value).abs() > 3.0 * q.stderr.max(1e-12) {
                    return Err(Error::MethodMismatch {
                        two_j: je.two_j(),
                        exact: e.value,
                        stochastic: q.value,
                        stderr: q.stderr,
                    });
                }
            }
        }
    }
    if overlaps < 2 {
        return Err(Error::InvalidParams(
            "methods must overlap on at least 2 system sizes".into(),
        ));
    }

    // fit on exact values where both exist
    let mut fit_points: Vec<(f64, f64)> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for p in &points {
        if p.method == Method::ExactSteadyState {
            seen.insert(p.two_j);
            fit_points.push(((p.two_j as f64 / 2.0).ln(), p.value.ln()));
        }
    }
    for p in &points {
        if p.method == Method::QsdTimeAverage && !seen.contains(&p.two_j) {
            fit_points.push(((p.two_j as f64 / 2.0).ln(), p.value.ln()));
        }
    }
    if fit_points.len() < 4 {
        return Err(Error::InvalidParams(
            "scaling fit needs at least 4 points".into(),
        ));
    }
    let span = fit_points
        .iter()
        .map(|p| p.0)
        .fold(f64::NEG_INFINITY, f64::max)
        - fit_points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    if span < 1.5 * std::f64::consts::LN_10 {
        return Err(Error::InvalidParams(format!(
            "j span covers only {:.2} decades (need 1.5)",
            span / std::f64::consts::LN_10
        )));
    }

    let fit = least_squares(&fit_points);
    Ok((fit, points))
}

fn least_squares(points: &[(f64, f64)]) -> ScalingFit {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let mean_y = sy / n;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean_y) * (p.1 - mean_y)).sum();
    let ss_res: f64 = points
        .iter()
        .map(|p| {
            let r = p.1 - slope * p.0 - intercept;
            r * r
        })
        .sum();
    ScalingFit {
        slope,
        intercept,
        r_squared: 1.0 - ss_res / ss_tot.max(1e-300),
        points: points.to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn beta_of_pure_power_law_is_its_exponent() {
        let grid = log_grid(1e-4, 1e-1, 8);
        let rows = beta_estimate(|e| 3.5 * e.powf(1.0), &grid).unwrap();
        for (eps, beta) in rows {
            assert_abs_diff_eq!(beta, 1.0, epsilon = 1e-12);
            assert!(eps > 0.0);
        }
        let rows = beta_estimate(|e| 0.2 * e.powf(0.5), &grid).unwrap();
        for (_, beta) in rows {
            assert_abs_diff_eq!(beta, 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn beta_of_eps_log_eps_matches_the_model_exponent() {
        // f = -ε ln ε: β = 1 + 1/ln ε exactly; on ε ≤ 1e-2 the 8-per-decade
        // stencil error (h²/3)/|ln ε|³ stays below 1e-3
        let grid = log_grid(1e-5, 1e-2, 8);
        let rows = beta_estimate(|e| -e * e.ln(), &grid).unwrap();
        for (eps, beta) in rows {
            let model = 1.0 + 1.0 / eps.ln();
            assert!((beta - model).abs() < 1e-3, "eps={eps}: {beta} vs {model}");
        }
    }

    #[test]
    fn beta_rejects_non_positive_curves() {
        let grid = log_grid(1e-3, 1e-1, 4);
        assert!(matches!(
            beta_estimate(|e| e - 0.05, &grid),
            Err(Error::NonPositiveCurve { .. })
        ));
    }

    #[test]
    fn log_grid_contains_decade_anchors() {
        let g = log_grid(1e-4, 1e-2, 8);
        assert_eq!(g.len(), 17);
        assert_abs_diff_eq!(g[0], 1e-4, epsilon = 1e-18);
        assert_abs_diff_eq!(g[8], 1e-3, epsilon = 1e-17);
        assert_abs_diff_eq!(g[16], 1e-2, epsilon = 1e-16);
    }

    #[test]
    fn least_squares_recovers_exact_line() {
        let pts: Vec<(f64, f64)> = (0..10)
            .map(|i| {
                let x = i as f64;
                (x, -x / 3.0 + 2.0)
            })
            .collect();
        let fit = least_squares(&pts);
        assert_abs_diff_eq!(fit.slope, -1.0 / 3.0, epsilon = 1e-13);
        assert_abs_diff_eq!(fit.intercept, 2.0, epsilon = 1e-13);
        assert!(fit.r_squared > 1.0 - 1e-12);
    }

    #[test]
    fn sweep_records_per_point_failures_and_continues() {
        // two_j = 800 exceeds the dimension budget; the λ points still run
        let spec = SweepSpec {
            j_list: vec![
                SpinQuantum::from_two_j(4).unwrap(),
                SpinQuantum::from_two_j(800).unwrap(),
            ],
            lambda_grid: vec![0.0, 0.5],
            observable: Observable::MeanJz,
            method: Method::ExactSteadyState,
        };
        let rows = run_sweep(&spec, 1.0, 0.0, 1).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows[0].value.is_some());
        assert!(rows[2].value.is_none() && rows[2].error.is_some());
        // λ = 0 column is the dark state for every j that solved
        assert_abs_diff_eq!(rows[0].value.unwrap(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn sweep_spec_validation() {
        let bad = SweepSpec {
            j_list: vec![SpinQuantum::from_two_j(4).unwrap()],
            lambda_grid: vec![0.5, 0.5],
            observable: Observable::MeanJz,
            method: Method::ExactSteadyState,
        };
        assert!(bad.validate().is_err());
    }
}
