//! Closed-form theory of the deterministic label flow and its steady states:
//! fixed points, the exact cyclic solution, torus coordinates, the stationary
//! torus distribution, torus-averaged and mixed steady states, the order
//! parameter and variance asymptotes, and the relaxation timescale.
//!
//! Conventions: the deterministic flow μ̇ = -i(ω/2)(1-μ²) - κ̃μ uses the
//! finite-j label damping κ̃ from `ModelParams`; objects describing the
//! j → ∞ steady-state family (torus states, their distribution, asymptotes)
//! are evaluated in the thermodynamic limit where κ̃ → κ and everything
//! depends on λ = ω/κ alone.

use ndarray::Array2;
use num_complex::Complex64;

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::linalg::quadrature::gauss_legendre;
use crate::model::ModelParams;
use crate::spin::{coherent_state, Chart, CoherentLabel, SpinQuantum};

/// Default quadrature orders; integrands are smooth and periodic (φ) or
/// analytic on [-1,1] (m), so these converge to machine precision.
pub const DEFAULT_N_QUAD_PHI: usize = 512;
pub const DEFAULT_N_QUAD_M: usize = 128;

/// Action-angle pair labeling a deterministic solution: the conserved torus
/// label m ∈ [-1, 1] (m = +1 is the fixed point μ₋, m = -1 is μ₊) and the
/// angle φ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusCoords {
    pub m: f64,
    pub phi: f64,
}

impl TorusCoords {
    pub fn new(m: f64, phi: f64) -> Result<Self> {
        if !(m.is_finite() && m.abs() <= 1.0) {
            return Err(Error::InvalidParams(format!("torus label m = {m}")));
        }
        Ok(TorusCoords { m, phi })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoints {
    pub mu_plus: Complex64,
    pub mu_minus: Complex64,
}

/// Fixed points of the label drift: the roots of
/// -i(ω/2)(1-μ²) = κ̃μ, i.e. μ± = -i(κ̃/ω)(1 ± sqrt(1-(ω/κ̃)⁻²...)) written
/// here directly in terms of (ω, κ̃). For ω > κ̃ the pair is complex and sits
/// exactly on the equator |μ| = 1; for ω < κ̃ both are purely imaginary with
/// μ₋ the stable one.
pub fn fixed_points(params: &ModelParams) -> Result<FixedPoints> {
    fixed_points_from(params.omega, params.kappa_tilde())
}

fn fixed_points_from(omega: f64, kappa_tilde: f64) -> Result<FixedPoints> {
    if omega == 0.0 {
        return Err(Error::DegenerateDrive);
    }
    let disc = kappa_tilde * kappa_tilde - omega * omega;
    if disc >= 0.0 {
        let s = disc.sqrt();
        Ok(FixedPoints {
            mu_plus: Complex64::new(0.0, -(kappa_tilde + s) / omega),
            mu_minus: Complex64::new(0.0, -(kappa_tilde - s) / omega),
        })
    } else {
        let s = (-disc).sqrt();
        Ok(FixedPoints {
            mu_plus: Complex64::new(s / omega, -kappa_tilde / omega),
            mu_minus: Complex64::new(-s / omega, -kappa_tilde / omega),
        })
    }
}

/// Thermodynamic-limit fixed points, κ̃ → κ: depend on λ alone.
fn fixed_points_limit(lambda: f64) -> Result<FixedPoints> {
    fixed_points_from(lambda, 1.0)
}

/// Deterministic flow μ̇ = -i(ω/2)(1-μ²) - κ̃μ (north chart).
pub fn deterministic_rhs(mu: Complex64, params: &ModelParams) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    -i * (params.omega / 2.0) * (1.0 - mu * mu) - params.kappa_tilde() * mu
}

/// The same flow expressed in the south chart ν = 1/μ:
/// ν̇ = i(ω/2)(ν² - 1) + κ̃ν.
pub fn deterministic_rhs_south(nu: Complex64, params: &ModelParams) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    i * (params.omega / 2.0) * (nu * nu - 1.0) + params.kappa_tilde() * nu
}

/// Rotation rate Ω of w = (μ-μ₊)/(μ-μ₋), with w(t) = w(0) e^{iΩt}:
/// Ω = sqrt(ω² - κ̃²) for the cyclic regime, and the branch -i sqrt(κ̃² - ω²)
/// below it so that |e^{iΩt}| grows and generic trajectories converge to μ₋.
fn phase_rate(omega: f64, kappa_tilde: f64) -> Result<Complex64> {
    let disc = omega * omega - kappa_tilde * kappa_tilde;
    if disc == 0.0 {
        return Err(Error::CriticalPoint);
    }
    Ok(if disc > 0.0 {
        Complex64::new(disc.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, -(-disc).sqrt())
    })
}

/// Period of the closed orbits, T = 2π/(κ̃ sqrt((ω/κ̃)²-1)) = 2π/sqrt(ω²-κ̃²).
pub fn torus_period(params: &ModelParams) -> Result<f64> {
    let omega = params.omega;
    let kt = params.kappa_tilde();
    if omega <= kt {
        return Err(Error::NotCyclic {
            lambda: params.lambda(),
        });
    }
    Ok(2.0 * std::f64::consts::PI / (omega * omega - kt * kt).sqrt())
}

/// Exact solution of the deterministic flow:
/// μ(t) = (μ₋ W(t) - μ₊ S) / (W(t) - S) with W = sqrt(1+m) e^{iφ(t)},
/// S = sqrt(1-m), φ(t) = Ω t + φ(0). Returns a south-chart label when the
/// denominator passes near zero (the orbit crosses the south pole).
pub fn analytic_trajectory(
    coords0: &TorusCoords,
    params: &ModelParams,
    t: f64,
) -> Result<CoherentLabel> {
    let fp = fixed_points(params)?;
    let rate = phase_rate(params.omega, params.kappa_tilde())?;
    eq6_label(coords0, &fp, rate, t)
}

fn eq6_label(
    coords0: &TorusCoords,
    fp: &FixedPoints,
    rate: Complex64,
    t: f64,
) -> Result<CoherentLabel> {
    let i = Complex64::new(0.0, 1.0);
    let w0 = Complex64::from_polar((1.0 + coords0.m).sqrt(), coords0.phi);
    let growth = (i * rate * t).exp();
    if !(growth.re.is_finite() && growth.im.is_finite()) || growth.norm_sqr() == f64::INFINITY {
        // fully relaxed onto the stable fixed point
        return Ok(CoherentLabel::north(fp.mu_minus).rebalanced(1.0));
    }
    let w = w0 * growth;
    let s = Complex64::new((1.0 - coords0.m).sqrt(), 0.0);
    let num = fp.mu_minus * w - fp.mu_plus * s;
    let den = w - s;
    if num.norm_sqr() <= den.norm_sqr() {
        Ok(CoherentLabel::north(num / den))
    } else {
        Ok(CoherentLabel::south(den / num))
    }
}

/// Invert the Möbius map: w = (μ-μ₊)/(μ-μ₋) = sqrt((1+m)/(1-m)) e^{iφ},
/// so m = (|w|²-1)/(|w|²+1) and φ = arg w. At the fixed points themselves
/// φ is undefined and is returned as 0 with m = ∓1.
pub fn to_torus_coords(label: &CoherentLabel, params: &ModelParams) -> Result<TorusCoords> {
    if params.omega <= params.kappa_tilde() {
        return Err(Error::NotCyclic {
            lambda: params.lambda(),
        });
    }
    let fp = fixed_points(params)?;
    let v = label.value();
    let (num, den) = match label.chart() {
        Chart::North => (v - fp.mu_plus, v - fp.mu_minus),
        // w = (1 - μ₊ν)/(1 - μ₋ν), multiplying through by ν = 1/μ
        Chart::South => (1.0 - fp.mu_plus * v, 1.0 - fp.mu_minus * v),
    };
    if num == Complex64::ZERO {
        return Ok(TorusCoords { m: -1.0, phi: 0.0 });
    }
    if den == Complex64::ZERO {
        return Ok(TorusCoords { m: 1.0, phi: 0.0 });
    }
    let w = num / den;
    let a = w.norm_sqr();
    let m = if a.is_infinite() {
        1.0
    } else {
        (a - 1.0) / (a + 1.0)
    };
    Ok(TorusCoords { m, phi: w.arg() })
}

/// One RK4 step of the deterministic flow in the label's active chart,
/// followed by a chart rebalance at |value| = 4.
pub fn deterministic_rk4_step(
    label: &CoherentLabel,
    params: &ModelParams,
    dt: f64,
) -> CoherentLabel {
    let f = |v: Complex64| match label.chart() {
        Chart::North => deterministic_rhs(v, params),
        Chart::South => deterministic_rhs_south(v, params),
    };
    let v = label.value();
    let k1 = f(v);
    let k2 = f(v + 0.5 * dt * k1);
    let k3 = f(v + 0.5 * dt * k2);
    let k4 = f(v + dt * k3);
    let out = v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    let stepped = match label.chart() {
        Chart::North => CoherentLabel::north(out),
        Chart::South => CoherentLabel::south(out),
    };
    stepped.rebalanced(4.0)
}

/// Integrate the deterministic flow to `t_final` with fixed step `dt`.
pub fn integrate_deterministic(
    label0: &CoherentLabel,
    params: &ModelParams,
    t_final: f64,
    dt: f64,
) -> CoherentLabel {
    let n = (t_final / dt).round().max(1.0) as usize;
    let h = t_final / n as f64;
    let mut label = *label0;
    for _ in 0..n {
        label = deterministic_rk4_step(&label, params, h);
    }
    label
}

/// Order parameter asymptote: ⟨Jz⟩/j = sqrt(1-λ²) for λ < 1, else 0.
pub fn jz_asymptote(lambda: f64) -> f64 {
    if lambda < 1.0 {
        (1.0 - lambda * lambda).sqrt()
    } else {
        0.0
    }
}

/// Stationary distribution of the torus label,
/// P(m) = (1/2) a / atanh(1/a) · 1/(a² - m²), a = sqrt(1+2λ²).
pub fn torus_distribution_pdf(m: f64, lambda: f64) -> f64 {
    debug_assert!(m.abs() <= 1.0);
    let a_sqr = 1.0 + 2.0 * lambda * lambda;
    let a = a_sqr.sqrt();
    0.5 * a / (1.0 / a).atanh() / (a_sqr - m * m)
}

/// Inverse-CDF sampler for P(m): m = a tanh((2u-1) atanh(1/a)).
pub fn torus_distribution_sample(u: f64, lambda: f64) -> f64 {
    let a = (1.0 + 2.0 * lambda * lambda).sqrt();
    a * ((2.0 * u - 1.0) * (1.0 / a).atanh()).tanh()
}

/// Torus-averaged steady state ρ_m = (1/T)∮ |μ_m(t)⟩⟨μ_m(t)| dt, evaluated
/// as a uniform trapezoidal average over the angle (exact measure, since
/// φ̇ is constant) in the thermodynamic-limit geometry.
pub fn torus_state(
    m: f64,
    params: &ModelParams,
    j: SpinQuantum,
    n_quad: usize,
) -> Result<DensityMatrix> {
    let lambda = params.lambda();
    if lambda <= 1.0 {
        return Err(Error::NotCyclic { lambda });
    }
    if !(m.is_finite() && m.abs() <= 1.0) {
        return Err(Error::InvalidParams(format!("torus label m = {m}")));
    }
    let fp = fixed_points_limit(lambda)?;
    let dim = j.dim();
    let mut acc = Array2::<Complex64>::zeros((dim, dim));
    for k in 0..n_quad {
        let phi = 2.0 * std::f64::consts::PI * k as f64 / n_quad as f64;
        let label = eq6_label(&TorusCoords { m, phi }, &fp, Complex64::ZERO, 0.0)?;
        let state = coherent_state(j, &label)?;
        for r in 0..dim {
            for c in 0..dim {
                acc[[r, c]] += state[r] * state[c].conj();
            }
        }
    }
    DensityMatrix::from_unnormalized(&acc)
}

/// Mixed steady state ρ_SS = ∫ P(m) ρ_m dm by Gauss–Legendre in m and the
/// trapezoidal angle average inside each torus state.
pub fn mixed_steady_state(
    params: &ModelParams,
    j: SpinQuantum,
    n_quad_m: usize,
    n_quad_phi: usize,
) -> Result<DensityMatrix> {
    let lambda = params.lambda();
    if lambda <= 1.0 {
        return Err(Error::NotCyclic { lambda });
    }
    let fp = fixed_points_limit(lambda)?;
    let (nodes, weights) = gauss_legendre(n_quad_m);
    let dim = j.dim();
    let mut acc = Array2::<Complex64>::zeros((dim, dim));
    for (&m, &wm) in nodes.iter().zip(&weights) {
        let pw = wm * torus_distribution_pdf(m, lambda) / n_quad_phi as f64;
        for k in 0..n_quad_phi {
            let phi = 2.0 * std::f64::consts::PI * k as f64 / n_quad_phi as f64;
            let label = eq6_label(&TorusCoords { m, phi }, &fp, Complex64::ZERO, 0.0)?;
            let state = coherent_state(j, &label)?;
            for r in 0..dim {
                for c in 0..dim {
                    acc[[r, c]] += pw * state[r] * state[c].conj();
                }
            }
        }
    }
    DensityMatrix::from_unnormalized(&acc)
}

/// First and second moments of J_z over the mixed steady state, computed at
/// label level (no density matrix): ⟨Jz⟩/j and ⟨Jz²⟩/j². With `j = None`
/// the thermodynamic-limit moments (n_z, n_z²) are used; with a finite j the
/// exact coherent-state moments carry their O(1/j) corrections.
pub fn mixed_state_jz_moments(
    lambda: f64,
    j: Option<SpinQuantum>,
    n_quad_m: usize,
    n_quad_phi: usize,
) -> Result<(f64, f64)> {
    if lambda <= 1.0 {
        return Err(Error::NotCyclic { lambda });
    }
    let fp = fixed_points_limit(lambda)?;
    let (nodes, weights) = gauss_legendre(n_quad_m);
    let mut first = 0.0;
    let mut second = 0.0;
    let mut total_w = 0.0;
    for (&m, &wm) in nodes.iter().zip(&weights) {
        let pw = wm * torus_distribution_pdf(m, lambda) / n_quad_phi as f64;
        for k in 0..n_quad_phi {
            let phi = 2.0 * std::f64::consts::PI * k as f64 / n_quad_phi as f64;
            let label = eq6_label(&TorusCoords { m, phi }, &fp, Complex64::ZERO, 0.0)?;
            let nz = label.bloch_vector()[2];
            let (m1, m2) = match j {
                None => (nz, nz * nz),
                Some(jq) => {
                    let jv = jq.j();
                    (
                        label.jz_mean(jq) / jv,
                        label.jz_second_moment(jq) / (jv * jv),
                    )
                }
            };
            first += pw * m1;
            second += pw * m2;
            total_w += pw;
        }
    }
    Ok((first / total_w, second / total_w))
}

/// Closed-form J_z variance of the mixed steady state in the thermodynamic
/// limit:
/// ΔJz²/j² = (λ²-1)·( atanh(√3 (1+2λ²)^{-1/2}) / (√3 atanh((1+2λ²)^{-1/2})) - 1 ).
/// Only the λ > 1 branch is described by this expression; the λ < 1
/// asymptote of ΔJz²/j² is 0.
pub fn variance_asymptote(lambda: f64) -> Result<f64> {
    if lambda <= 1.0 {
        return Err(Error::NotCyclic { lambda });
    }
    let x = (1.0 + 2.0 * lambda * lambda).sqrt();
    let s3 = 3.0f64.sqrt();
    Ok((lambda * lambda - 1.0) * ((s3 / x).atanh() / (s3 * (1.0 / x).atanh()) - 1.0))
}

/// Relaxation timescale ξ = |1-λ²|^{-1/2} κ^{-1}; diverges at λ = 1.
pub fn relaxation_time(lambda: f64, kappa: f64) -> Result<f64> {
    let d = (1.0 - lambda * lambda).abs();
    if d == 0.0 {
        return Err(Error::CriticalPoint);
    }
    Ok(1.0 / (d.sqrt() * kappa))
}
