//! Quantum-state-diffusion trajectories for the coherent-state label.
//!
//! The label obeys the Ito equation
//!
//!   dμ = [-i(ω/2)(1-μ²) - κ̃μ + iω_z μ] dt
//!        + sqrt(κ/j) μ² dξ₊ - sqrt(κ/j) μ dξ_z,
//!
//! with independent complex increments E[dξ_α dξ̄_β] = δ_αβ dt and
//! E[dξ_α dξ_β] = 0, realized as (dW₁ + i dW₂)/sqrt(2). The density matrix
//! is the ensemble mean of coherent projectors. Near the south pole the
//! equation is integrated in the ν = 1/μ chart, whose Ito correction
//! vanishes identically because (dμ)² carries no dξ dξ̄ pairs:
//!
//!   dν = [i(ω/2)(ν²-1) + κ̃ν - iω_z ν] dt
//!        - sqrt(κ/j) dξ₊ + sqrt(κ/j) ν dξ_z.
//!
//! Trajectories are deterministic for a fixed base seed regardless of the
//! thread schedule: each trajectory draws from its own counter-based
//! ChaCha substream keyed by (base_seed, trajectory index).

use ndarray::Array2;
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::analytic;
use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::liouvillian::Liouvillian;
use crate::model::ModelParams;
use crate::spin::{coherent_state, Chart, CoherentLabel, SpinQuantum};

/// Chart switch radius; hysteresis band [1/4, 4] in |μ|.
pub const CHART_SWITCH_RADIUS: f64 = 4.0;

/// Complex Gaussian Ito increments for one step.
#[derive(Debug, Clone, Copy)]
pub struct NoiseIncrement {
    pub dxi_plus: Complex64,
    pub dxi_z: Complex64,
}

impl NoiseIncrement {
    pub const ZERO: NoiseIncrement = NoiseIncrement {
        dxi_plus: Complex64::ZERO,
        dxi_z: Complex64::ZERO,
    };

    /// dξ = (dW₁ + i dW₂)/sqrt(2) with independent dW of variance dt.
    pub fn draw<R: Rng + ?Sized>(rng: &mut R, dt: f64) -> Self {
        let s = (0.5 * dt).sqrt();
        let g: [f64; 4] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        NoiseIncrement {
            dxi_plus: Complex64::new(s * g[0], s * g[1]),
            dxi_z: Complex64::new(s * g[2], s * g[3]),
        }
    }
}

/// Label drift in the label's own chart (deterministic part of the SDE,
/// including the ω_z rotation +iω_z μ).
pub fn drift(label: &CoherentLabel, params: &ModelParams) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    let v = label.value();
    match label.chart() {
        Chart::North => analytic::deterministic_rhs(v, params) + i * params.omega_z * v,
        Chart::South => analytic::deterministic_rhs_south(v, params) - i * params.omega_z * v,
    }
}

/// Largest admissible Euler step: 0.1 of the fastest relevant timescale.
pub fn dt_max(params: &ModelParams) -> f64 {
    let mut bound = 1.0 / params.kappa_tilde();
    if params.omega > 0.0 {
        bound = bound.min(1.0 / params.omega);
    }
    if params.omega_z != 0.0 {
        bound = bound.min(1.0 / params.omega_z.abs());
    }
    bound = bound.min(params.j.j() / params.kappa);
    0.1 * bound
}

/// One Euler–Maruyama step with the supplied noise, in the active chart,
/// followed by a chart rebalance at |value| = 4.
pub fn apply_step(
    label: &CoherentLabel,
    params: &ModelParams,
    dt: f64,
    noise: &NoiseIncrement,
) -> CoherentLabel {
    let ns = params.noise_amplitude();
    let v = label.value();
    let out = match label.chart() {
        Chart::North => {
            v + drift(label, params) * dt + ns * (v * v * noise.dxi_plus - v * noise.dxi_z)
        }
        Chart::South => v + drift(label, params) * dt + ns * (-noise.dxi_plus + v * noise.dxi_z),
    };
    let stepped = match label.chart() {
        Chart::North => CoherentLabel::north(out),
        Chart::South => CoherentLabel::south(out),
    };
    stepped.rebalanced(CHART_SWITCH_RADIUS)
}

/// One stochastic trajectory: label, clock, and its private noise stream.
#[derive(Debug, Clone)]
pub struct TrajectoryState {
    pub label: CoherentLabel,
    pub time: f64,
    index: usize,
    rng: ChaCha12Rng,
}

impl TrajectoryState {
    pub fn new(label: CoherentLabel, base_seed: u64, index: usize) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(base_seed);
        rng.set_stream(index as u64);
        TrajectoryState {
            label,
            time: 0.0,
            index,
            rng,
        }
    }

    pub fn index(&self) -> usize {
        self.index
    }

    /// Draw-and-step. Errors if dt violates the stability bound or the
    /// label stops being finite (a bug signal, not resampled silently).
    pub fn step(&mut self, params: &ModelParams, dt: f64) -> Result<()> {
        let bound = dt_max(params);
        if dt > bound {
            return Err(Error::StepTooLarge { dt, dt_max: bound });
        }
        let noise = NoiseIncrement::draw(&mut self.rng, dt);
        self.label = apply_step(&self.label, params, dt, &noise);
        self.time += dt;
        if !self.label.is_finite() {
            return Err(Error::Blowup {
                trajectory: self.index,
                time: self.time,
            });
        }
        Ok(())
    }

    /// Access to the private stream, for initial-condition sampling.
    fn rng_mut(&mut self) -> &mut ChaCha12Rng {
        &mut self.rng
    }
}

/// How trajectories start.
#[derive(Debug, Clone, Copy)]
pub enum InitialCondition {
    /// Every trajectory starts at the same label.
    Fixed(CoherentLabel),
    /// Torus label m drawn from the stationary distribution P(m), angle
    /// uniform; requires the cyclic regime.
    TorusEquilibrium,
}

/// Labels of every trajectory at the requested sample times
/// (`labels[traj][sample]`).
#[derive(Debug, Clone)]
pub struct EnsembleSamples {
    pub times: Vec<f64>,
    pub labels: Vec<Vec<CoherentLabel>>,
    pub params: ModelParams,
    pub base_seed: u64,
}

/// Integrate an ensemble; embarrassingly parallel over trajectories and
/// bit-reproducible for a fixed base seed under any thread count.
pub fn simulate_ensemble(
    params: &ModelParams,
    n_traj: usize,
    dt: f64,
    sample_times: &[f64],
    initial: &InitialCondition,
    base_seed: u64,
) -> Result<EnsembleSamples> {
    if n_traj == 0 {
        return Err(Error::InvalidParams("n_traj must be >= 1".into()));
    }
    let bound = dt_max(params);
    if dt > bound || dt <= 0.0 {
        return Err(Error::StepTooLarge { dt, dt_max: bound });
    }
    let sample_steps: Vec<usize> = sample_times
        .iter()
        .map(|&t| (t / dt).round() as usize)
        .collect();
    if sample_steps.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParams(
            "sample times must be sorted and non-negative".into(),
        ));
    }
    let total_steps = sample_steps.last().copied().unwrap_or(0);

    let labels: Result<Vec<Vec<CoherentLabel>>> = (0..n_traj)
        .into_par_iter()
        .map(|idx| {
            let mut state = init_trajectory(params, initial, base_seed, idx)?;
            let mut out = Vec::with_capacity(sample_steps.len());
            let mut next = 0usize;
            for step_no in 0..=total_steps {
                while next < sample_steps.len() && sample_steps[next] == step_no {
                    out.push(state.label);
                    next += 1;
                }
                if step_no < total_steps {
                    state.step(params, dt)?;
                }
            }
            Ok(out)
        })
        .collect();

    Ok(EnsembleSamples {
        times: sample_steps.iter().map(|&s| s as f64 * dt).collect(),
        labels: labels?,
        params: *params,
        base_seed,
    })
}

fn init_trajectory(
    params: &ModelParams,
    initial: &InitialCondition,
    base_seed: u64,
    idx: usize,
) -> Result<TrajectoryState> {
    match initial {
        InitialCondition::Fixed(label) => Ok(TrajectoryState::new(*label, base_seed, idx)),
        InitialCondition::TorusEquilibrium => {
            let mut state =
                TrajectoryState::new(CoherentLabel::north(Complex64::ZERO), base_seed, idx);
            let lambda = params.lambda();
            if lambda <= 1.0 {
                return Err(Error::NotCyclic { lambda });
            }
            let (u, v): (f64, f64) = {
                let rng = state.rng_mut();
                (rng.random(), rng.random())
            };
            let m = analytic::torus_distribution_sample(u, lambda);
            let phi = 2.0 * std::f64::consts::PI * v;
            let coords = analytic::TorusCoords { m, phi };
            state.label = analytic::analytic_trajectory(&coords, params, 0.0)?;
            Ok(state)
        }
    }
}

/// ρ = mean of coherent projectors over one time slice.
pub fn ensemble_density(labels: &[CoherentLabel], j: SpinQuantum) -> Result<DensityMatrix> {
    if labels.is_empty() {
        return Err(Error::InvalidParams("ensemble is empty".into()));
    }
    let dim = j.dim();
    let mut acc = Array2::<Complex64>::zeros((dim, dim));
    for label in labels {
        let state = coherent_state(j, label)?;
        for r in 0..dim {
            for c in 0..dim {
                acc[[r, c]] += state[r] * state[c].conj();
            }
        }
    }
    DensityMatrix::from_unnormalized(&acc)
}

/// Mean Bloch vector over one time slice.
pub fn mean_bloch(labels: &[CoherentLabel]) -> [f64; 3] {
    let mut acc = [0.0f64; 3];
    for l in labels {
        let n = l.bloch_vector();
        for k in 0..3 {
            acc[k] += n[k];
        }
    }
    for a in acc.iter_mut() {
        *a /= labels.len() as f64;
    }
    acc
}

/// Outcome of the SDE-vs-generator consistency estimate.
#[derive(Debug, Clone, Copy)]
pub struct ConsistencyReport {
    /// d/dt E[⟨A⟩] at t = 0 estimated from one Euler step per trajectory.
    pub sde_rate: f64,
    /// Tr(A L(|μ₀⟩⟨μ₀|)) from the superoperator.
    pub generator_rate: f64,
    pub stderr: f64,
    /// |sde − generator| in units of the standard error.
    pub sigmas: f64,
}

/// Compare the ensemble estimate of d/dt E[⟨A⟩] at t = 0 against the exact
/// generator applied to the coherent initial state.
pub fn generator_consistency_check(
    params: &ModelParams,
    mu0: &CoherentLabel,
    observable: &Array2<Complex64>,
    dt: f64,
    n_traj: usize,
    base_seed: u64,
) -> Result<ConsistencyReport> {
    let liou = Liouvillian::new(*params)?;
    let rho0 = DensityMatrix::coherent(params.j, mu0)?;
    let l_rho = liou.apply(&rho0);
    let dim = params.j.dim();
    let mut generator_rate = Complex64::ZERO;
    for r in 0..dim {
        for c in 0..dim {
            generator_rate += observable[[r, c]] * l_rho[[c, r]];
        }
    }

    let state0 = coherent_state(params.j, mu0)?;
    let a0 = quadratic_form(observable, &state0);

    let slopes: Result<Vec<f64>> = (0..n_traj)
        .into_par_iter()
        .map(|idx| {
            let mut state = TrajectoryState::new(*mu0, base_seed, idx);
            state.step(params, dt)?;
            let s = coherent_state(params.j, &state.label)?;
            Ok((quadratic_form(observable, &s) - a0) / dt)
        })
        .collect();
    let slopes = slopes?;

    let n = slopes.len() as f64;
    let mean = slopes.iter().sum::<f64>() / n;
    let var = slopes.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0);
    let stderr = (var / n).sqrt();
    Ok(ConsistencyReport {
        sde_rate: mean,
        generator_rate: generator_rate.re,
        stderr,
        sigmas: (mean - generator_rate.re).abs() / stderr,
    })
}

fn quadratic_form(op: &Array2<Complex64>, state: &ndarray::Array1<Complex64>) -> f64 {
    let n = state.len();
    let mut acc = Complex64::ZERO;
    for r in 0..n {
        for c in 0..n {
            acc += state[r].conj() * op[[r, c]] * state[c];
        }
    }
    acc.re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{fixed_points, integrate_deterministic};
    use approx::assert_abs_diff_eq;

    fn params(two_j: u32, lambda: f64) -> ModelParams {
        ModelParams::from_lambda(SpinQuantum::from_two_j(two_j).unwrap(), lambda).unwrap()
    }

    #[test]
    fn noise_moments_match_the_ito_table() {
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        let dt = 0.37;
        let n = 200_000;
        let mut sum = Complex64::ZERO;
        let mut sum_sq = Complex64::ZERO;
        let mut sum_abs = 0.0;
        let mut sum_cross = Complex64::ZERO;
        for _ in 0..n {
            let inc = NoiseIncrement::draw(&mut rng, dt);
            sum += inc.dxi_plus;
            sum_sq += inc.dxi_plus * inc.dxi_plus;
            sum_abs += inc.dxi_plus.norm_sqr();
            sum_cross += inc.dxi_plus * inc.dxi_z.conj();
        }
        let nf = n as f64;
        let tol = 5.0 * dt / nf.sqrt();
        assert!((sum / nf).norm() < tol);
        assert!((sum_sq / nf).norm() < tol); // E[dξ²] = 0
        assert!((sum_abs / nf - dt).abs() < tol); // E[|dξ|²] = dt
        assert!((sum_cross / nf).norm() < tol); // independence of ξ₊, ξ_z
    }

    #[test]
    fn drift_at_origin_is_minus_half_i_omega() {
        let p = params(8, 0.8);
        let d = drift(&CoherentLabel::north(Complex64::ZERO), &p);
        assert!((d - Complex64::new(0.0, -p.omega / 2.0)).norm() < 1e-15);
    }

    #[test]
    fn drift_vanishes_at_the_stable_fixed_point() {
        let p = params(12, 0.7);
        let fp = fixed_points(&p).unwrap();
        assert!(drift(&CoherentLabel::north(fp.mu_minus), &p).norm() < 1e-12);
    }

    #[test]
    fn noiseless_step_reduces_to_euler_of_the_deterministic_flow() {
        let p = params(20, 0.9);
        let label = CoherentLabel::north(Complex64::new(0.4, -0.1));
        let dt = 1e-5;
        let mut l = label;
        for _ in 0..1000 {
            l = apply_step(&l, &p, dt, &NoiseIncrement::ZERO);
        }
        let reference = integrate_deterministic(&label, &p, 1000.0 * dt, 1e-6);
        assert!(
            (l.mu() - reference.mu()).norm() < 1e-6,
            "{:e}",
            (l.mu() - reference.mu()).norm()
        );
    }

    #[test]
    fn fixed_seed_reproduces_bitwise() {
        let p = params(10, 1.05);
        let run = || {
            let mut s = TrajectoryState::new(CoherentLabel::north(Complex64::new(0.3, 0.0)), 42, 7);
            for _ in 0..500 {
                s.step(&p, 1e-3).unwrap();
            }
            s.label
        };
        let a = run();
        let b = run();
        assert_eq!(a.value(), b.value());
        assert_eq!(a.chart(), b.chart());
    }

    #[test]
    fn ensemble_is_deterministic_under_any_thread_count() {
        let p = params(8, 1.1);
        let initial = InitialCondition::Fixed(CoherentLabel::north(Complex64::new(0.2, 0.1)));
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                simulate_ensemble(&p, 64, 1e-3, &[0.0, 0.25, 0.5], &initial, 2024).unwrap()
            })
        };
        let a = run(1);
        let b = run(4);
        for (ta, tb) in a.labels.iter().zip(&b.labels) {
            for (la, lb) in ta.iter().zip(tb) {
                assert_eq!(la.value(), lb.value());
                assert_eq!(la.chart(), lb.chart());
            }
        }
    }

    #[test]
    fn step_size_guard_rejects_oversized_dt() {
        let p = params(4, 1.0);
        let mut s = TrajectoryState::new(CoherentLabel::north(Complex64::ZERO), 1, 0);
        assert!(matches!(s.step(&p, 10.0), Err(Error::StepTooLarge { .. })));
    }

    #[test]
    fn single_label_density_is_the_pure_projector() {
        let j = SpinQuantum::from_two_j(9).unwrap();
        let label = CoherentLabel::north(Complex64::new(0.3, -0.6));
        let rho = ensemble_density(&[label], j).unwrap();
        assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-12);
        let direct = DensityMatrix::coherent(j, &label).unwrap();
        assert!(rho.max_abs_diff(&direct) < 1e-13);
    }

    #[test]
    fn mirror_pair_density_is_mirror_symmetric() {
        let j = SpinQuantum::from_two_j(6).unwrap();
        let label = CoherentLabel::north(Complex64::new(0.5, 0.2));
        let rho = ensemble_density(&[label, label.mirror()], j).unwrap();
        assert!(rho.mirror().max_abs_diff(&rho) < 1e-13);
    }

    #[test]
    fn mirror_transformed_noise_gives_exactly_mirrored_trajectories() {
        // pathwise equivariance: μ → -μ*, dξ₊ → -dξ₊*, dξ_z → dξ_z*
        let p = params(14, 1.2);
        let mu0 = CoherentLabel::north(Complex64::new(0.35, -0.2));
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let mut a = mu0;
        let mut b = mu0.mirror();
        for _ in 0..400 {
            let inc = NoiseIncrement::draw(&mut rng, 1e-3);
            let mirrored = NoiseIncrement {
                dxi_plus: -inc.dxi_plus.conj(),
                dxi_z: inc.dxi_z.conj(),
            };
            a = apply_step(&a, &p, 1e-3, &inc);
            b = apply_step(&b, &p, 1e-3, &mirrored);
            assert_eq!(b.value(), a.mirror().value());
            assert_eq!(b.chart(), a.chart());
        }
    }

    #[test]
    fn chart_switch_is_transparent_to_first_order() {
        // same noise, one run forced to stay in the north chart, one free to
        // switch charts along the high-|μ| arc of its torus: the runs differ
        // by O(dt) accumulated error that shrinks with dt
        let p = params(200, 1.3);
        let start = CoherentLabel::north(Complex64::new(3.2, 1.9)); // m ≈ -0.3 torus
                                                                    // one full torus period is 2π/sqrt(ω²-κ̃²) ≈ 7.6/κ; the |μ| > 4 arc
                                                                    // is crossed near the end of it
        let t_total = 12.0;
        let fine_dt = 5e-4;
        let n_fine = (t_total / fine_dt) as usize;
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        let path: Vec<NoiseIncrement> = (0..n_fine)
            .map(|_| NoiseIncrement::draw(&mut rng, fine_dt))
            .collect();

        let mut errs = Vec::new();
        let mut n_switches = 0usize;
        for &group in &[4usize, 2, 1] {
            // common Brownian path: sum fine increments in groups
            let dt = fine_dt * group as f64;
            let mut free = start;
            let mut pinned = start.value();
            let mut switches = 0;
            let mut prev_chart = free.chart();
            for chunk in path.chunks_exact(group) {
                let inc = NoiseIncrement {
                    dxi_plus: chunk.iter().map(|c| c.dxi_plus).sum(),
                    dxi_z: chunk.iter().map(|c| c.dxi_z).sum(),
                };
                free = apply_step(&free, &p, dt, &inc);
                if free.chart() != prev_chart {
                    switches += 1;
                    prev_chart = free.chart();
                }
                // raw Euler step pinned to the north chart
                let ns = p.noise_amplitude();
                let d = drift(&CoherentLabel::north(pinned), &p);
                pinned =
                    pinned + d * dt + ns * (pinned * pinned * inc.dxi_plus - pinned * inc.dxi_z);
            }
            n_switches = switches;
            // compare in the chart where both are O(1)
            errs.push((free.mu().finv() - pinned.finv()).norm());
        }
        assert!(
            n_switches >= 2,
            "trajectory never crossed the switch radius"
        );
        assert!(
            errs[2] < errs[0],
            "chart-switch error should shrink with dt: {errs:?}"
        );
        assert!(errs[2] < 0.05, "{errs:?}");
    }

    #[test]
    fn localization_tightens_with_system_size_below_threshold() {
        // λ < 1: long-time scatter around μ₋ shrinks as j grows
        let mut spreads = Vec::new();
        for two_j in [100u32, 400, 1600] {
            let p = params(two_j, 0.8);
            let fp = fixed_points(&p).unwrap();
            let initial = InitialCondition::Fixed(CoherentLabel::north(fp.mu_minus));
            let s = simulate_ensemble(&p, 200, 1e-3, &[20.0], &initial, 5).unwrap();
            let labels: Vec<Complex64> = s.labels.iter().map(|t| t[0].mu()).collect();
            let mean = labels.iter().sum::<Complex64>() / labels.len() as f64;
            let var =
                labels.iter().map(|l| (l - mean).norm_sqr()).sum::<f64>() / labels.len() as f64;
            spreads.push(var);
        }
        assert!(
            spreads[0] > spreads[1] && spreads[1] > spreads[2],
            "{spreads:?}"
        );
    }

    #[test]
    fn consistency_check_dark_state_is_exact() {
        // A = Jz, μ0 = 0, ω = 0: both rates vanish identically
        let p = params(8, 0.0);
        let ops = crate::spin::SpinOperators::new(p.j);
        let rep = generator_consistency_check(
            &p,
            &CoherentLabel::north(Complex64::ZERO),
            &ops.jz,
            1e-4,
            2000,
            3,
        )
        .unwrap();
        assert!(rep.generator_rate.abs() < 1e-12);
        assert!(rep.sde_rate.abs() < 1e-12);
    }

    #[test]
    fn consistency_check_passes_for_spec_observables() {
        let cases = [
            (8u32, 0.8, Complex64::new(0.3, 0.0), "jz"),
            (4, 1.2, Complex64::new(0.0, -0.5), "jx"),
        ];
        for (two_j, lambda, mu0, which) in cases {
            let p = params(two_j, lambda);
            let ops = crate::spin::SpinOperators::new(p.j);
            let op = match which {
                "jz" => &ops.jz,
                _ => &ops.jx,
            };
            let rep =
                generator_consistency_check(&p, &CoherentLabel::north(mu0), op, 5e-5, 60_000, 11)
                    .unwrap();
            assert!(
                rep.sigmas <= 3.0,
                "2j={two_j} λ={lambda} {which}: {} sigmas (sde {}, gen {})",
                rep.sigmas,
                rep.sde_rate,
                rep.generator_rate
            );
        }
    }

    #[test]
    fn consistency_check_fixes_the_omega_z_rotation_sign() {
        // with ω_z ≠ 0 and a state off the poles, a wrong-sign rotation
        // would miss by ~2 ω_z ⟨Jy⟩, many standard errors away
        let mut p = params(8, 0.6);
        p.omega_z = 0.5;
        let ops = crate::spin::SpinOperators::new(p.j);
        let rep = generator_consistency_check(
            &p,
            &CoherentLabel::north(Complex64::new(0.4, 0.3)),
            &ops.jx,
            4e-4,
            100_000,
            13,
        )
        .unwrap();
        assert!(
            rep.sigmas <= 3.0,
            "{} sigmas (sde {}, gen {})",
            rep.sigmas,
            rep.sde_rate,
            rep.generator_rate
        );

        // the opposite rotation sign corresponds to the generator with -ω_z
        // and must be rejected decisively
        let mut p_flip = p;
        p_flip.omega_z = -p.omega_z;
        let liou_flip = Liouvillian::new(p_flip).unwrap();
        let rho0 =
            DensityMatrix::coherent(p.j, &CoherentLabel::north(Complex64::new(0.4, 0.3))).unwrap();
        let l_rho = liou_flip.apply(&rho0);
        let mut wrong_rate = Complex64::ZERO;
        for r in 0..p.j.dim() {
            for c in 0..p.j.dim() {
                wrong_rate += ops.jx[[r, c]] * l_rho[[c, r]];
            }
        }
        assert!(
            (rep.sde_rate - wrong_rate.re).abs() > 10.0 * rep.stderr,
            "flipped sign not rejected: sde {} vs wrong {} (se {})",
            rep.sde_rate,
            wrong_rate.re,
            rep.stderr
        );
    }

    #[test]
    fn torus_equilibrium_start_requires_cyclic_regime() {
        let p = params(8, 0.5);
        let r = simulate_ensemble(&p, 2, 1e-3, &[0.1], &InitialCondition::TorusEquilibrium, 1);
        assert!(matches!(r, Err(Error::NotCyclic { .. })));
    }
}
