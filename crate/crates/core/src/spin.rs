//! Finite-dimensional spin-j representation: operators in the Dicke basis,
//! spin coherent states, and the stereographic Bloch map.
//!
//! Basis ordering is descending in m: index k holds |j, j-k⟩, so the
//! north-pole state |j, j⟩ is the first basis vector and a coherent label
//! μ = 0 maps to index 0.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Spin quantum number stored as 2j, so half-integer j is exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpinQuantum {
    two_j: u32,
}

impl SpinQuantum {
    pub fn from_two_j(two_j: u32) -> Result<Self> {
        if two_j == 0 {
            return Err(Error::InvalidParams("2j must be at least 1".into()));
        }
        Ok(SpinQuantum { two_j })
    }

    /// Parse a spin length given as a float (e.g. 0.5, 1.0, 100.0).
    pub fn from_j(j: f64) -> Result<Self> {
        let two_j = 2.0 * j;
        if !two_j.is_finite() || two_j < 1.0 || (two_j - two_j.round()).abs() > 1e-9 {
            return Err(Error::InvalidParams(format!(
                "j = {j} is not a positive (half-)integer spin"
            )));
        }
        Self::from_two_j(two_j.round() as u32)
    }

    pub fn two_j(&self) -> u32 {
        self.two_j
    }

    pub fn j(&self) -> f64 {
        self.two_j as f64 / 2.0
    }

    /// Hilbert-space dimension 2j + 1.
    pub fn dim(&self) -> usize {
        self.two_j as usize + 1
    }

    /// m quantum number at basis index k (descending: k = 0 is m = +j).
    pub fn m_at(&self, k: usize) -> f64 {
        self.j() - k as f64
    }
}

/// Dense spin operators for one j. Immutable after construction.
#[derive(Debug, Clone)]
pub struct SpinOperators {
    pub j: SpinQuantum,
    pub jx: Array2<Complex64>,
    pub jy: Array2<Complex64>,
    pub jz: Array2<Complex64>,
    pub jplus: Array2<Complex64>,
    pub jminus: Array2<Complex64>,
}

impl SpinOperators {
    /// Matrix elements ⟨j,m±1|J±|j,m⟩ = sqrt(j(j+1) − m(m±1)).
    pub fn new(j: SpinQuantum) -> Self {
        let dim = j.dim();
        let jv = j.j();
        let mut jz = Array2::<Complex64>::zeros((dim, dim));
        let mut jplus = Array2::<Complex64>::zeros((dim, dim));
        for k in 0..dim {
            jz[[k, k]] = Complex64::new(j.m_at(k), 0.0);
        }
        // J+ |j, m⟩ = sqrt(j(j+1) - m(m+1)) |j, m+1⟩; index k holds m = j-k,
        // so the amplitude lands one index up (towards smaller k).
        for k in 1..dim {
            let m = j.m_at(k);
            jplus[[k - 1, k]] = Complex64::new((jv * (jv + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
        }
        let jminus = jplus.t().mapv(|z| z.conj());
        let jx = (&jplus + &jminus).mapv(|z| 0.5 * z);
        let jy = (&jplus - &jminus).mapv(|z| Complex64::new(0.0, -0.5) * z);
        SpinOperators {
            j,
            jx,
            jy,
            jz,
            jplus,
            jminus,
        }
    }
}

/// Which stereographic chart a coherent label lives in. The south chart
/// stores ν = 1/μ so neighborhoods of μ = ∞ stay finite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chart {
    North,
    South,
}

/// Complex label of a spin coherent state, finite in its active chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentLabel {
    value: Complex64,
    chart: Chart,
}

impl CoherentLabel {
    pub fn north(mu: Complex64) -> Self {
        CoherentLabel {
            value: mu,
            chart: Chart::North,
        }
    }

    pub fn south(nu: Complex64) -> Self {
        CoherentLabel {
            value: nu,
            chart: Chart::South,
        }
    }

    /// Raw coordinate in the active chart.
    pub fn value(&self) -> Complex64 {
        self.value
    }

    pub fn chart(&self) -> Chart {
        self.chart
    }

    pub fn is_finite(&self) -> bool {
        self.value.re.is_finite() && self.value.im.is_finite()
    }

    /// μ regardless of chart; infinite at the exact south pole.
    pub fn mu(&self) -> Complex64 {
        match self.chart {
            Chart::North => self.value,
            Chart::South => self.value.finv(),
        }
    }

    pub fn to_chart(&self, chart: Chart) -> Self {
        if self.chart == chart {
            *self
        } else {
            CoherentLabel {
                value: self.value.finv(),
                chart,
            }
        }
    }

    /// Switch chart whenever |value| leaves the disk of radius `r`; with
    /// r > 1 this gives a hysteresis band [1/r, r] in |μ|.
    pub fn rebalanced(&self, r: f64) -> Self {
        if self.value.norm_sqr() > r * r {
            self.to_chart(match self.chart {
                Chart::North => Chart::South,
                Chart::South => Chart::North,
            })
        } else {
            *self
        }
    }

    /// Mirror reflection |μ⟩ -> |-μ*⟩; involutive, same rule in both charts.
    pub fn mirror(&self) -> Self {
        CoherentLabel {
            value: -self.value.conj(),
            chart: self.chart,
        }
    }

    /// Unit Bloch vector n = ⟨μ|J⃗|μ⟩/j = (2 Re μ, 2 Im μ, 1-|μ|²)/(1+|μ|²),
    /// j-independent.
    pub fn bloch_vector(&self) -> [f64; 3] {
        let v = self.value;
        let p = v.norm_sqr();
        let d = 1.0 + p;
        match self.chart {
            Chart::North => [2.0 * v.re / d, 2.0 * v.im / d, (1.0 - p) / d],
            Chart::South => [2.0 * v.re / d, -2.0 * v.im / d, -(1.0 - p) / d],
        }
    }

    /// ⟨μ|J_z|μ⟩ = j·n_z.
    pub fn jz_mean(&self, j: SpinQuantum) -> f64 {
        j.j() * self.bloch_vector()[2]
    }

    /// ⟨μ|J_z²|μ⟩ = j²n_z² + (j/2)(1-n_z²): the transverse components of a
    /// coherent state carry variance j/2 each and no covariance with the
    /// polar axis.
    pub fn jz_second_moment(&self, j: SpinQuantum) -> f64 {
        let nz = self.bloch_vector()[2];
        let jv = j.j();
        jv * jv * nz * nz + 0.5 * jv * (1.0 - nz * nz)
    }
}

const LOG_DOMAIN_ABOVE_TWO_J: u32 = 60;

/// ln(1 + |z|²) without overflow for |z| up to ~1e308.
fn ln_one_plus_abs_sqr(z: Complex64) -> f64 {
    let a = z.re.hypot(z.im);
    if a <= 1.0 {
        (a * a).ln_1p()
    } else {
        2.0 * a.ln() + (1.0 / (a * a)).ln_1p()
    }
}

/// Normalized spin coherent state in the Dicke basis.
///
/// North chart: amplitudes μ^k sqrt(C(2j,k)) on |j, j-k⟩, normalized by
/// (1+|μ|²)^j, global phase fixed by a real positive amplitude on |j, j⟩.
/// South chart: the same expansion around |j, -j⟩ in ν = 1/μ, with the
/// amplitude on |j, -j⟩ real positive.
#[allow(clippy::needless_range_loop)] // recurrence walk over k
pub fn coherent_state(j: SpinQuantum, label: &CoherentLabel) -> Result<Array1<Complex64>> {
    if !label.is_finite() {
        return Err(Error::InvalidParams(
            "coherent label is not finite in its chart".into(),
        ));
    }
    let dim = j.dim();
    let two_j = j.two_j();
    let v = label.value();
    let mut amps = vec![Complex64::ZERO; dim];

    if two_j <= LOG_DOMAIN_ABOVE_TWO_J {
        let mut binom = 1.0f64; // C(2j, k), exact in f64 for 2j <= 60
        let mut vk = Complex64::new(1.0, 0.0);
        for k in 0..dim {
            amps[k] = vk * binom.sqrt();
            vk *= v;
            binom = binom * (two_j - k as u32) as f64 / (k as f64 + 1.0);
        }
        let norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::NormalizationUnderflow);
        }
        for a in amps.iter_mut() {
            *a /= norm;
        }
    } else {
        // log-domain: |c_k| = exp(k ln|v| + lnC/2 - j ln(1+|v|²)), phase k·arg v
        let abs = v.re.hypot(v.im);
        let arg = v.arg();
        let ln_norm = j.j() * ln_one_plus_abs_sqr(v);
        let mut ln_fact = vec![0.0f64; dim + 1];
        for i in 1..=dim {
            ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
        }
        for (k, a) in amps.iter_mut().enumerate() {
            let ln_binom = ln_fact[two_j as usize] - ln_fact[k] - ln_fact[two_j as usize - k];
            let ln_mag = if k == 0 {
                -ln_norm
            } else if abs == 0.0 {
                f64::NEG_INFINITY
            } else {
                k as f64 * abs.ln() + 0.5 * ln_binom - ln_norm
            };
            let mag = ln_mag.exp();
            *a = Complex64::from_polar(mag, k as f64 * arg);
        }
        let norm_sqr: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        if !(norm_sqr.is_finite() && norm_sqr > 0.0) {
            return Err(Error::NormalizationUnderflow);
        }
        let norm = norm_sqr.sqrt();
        for a in amps.iter_mut() {
            *a /= norm;
        }
    }

    if label.chart() == Chart::South {
        amps.reverse();
    }
    Ok(Array1::from_vec(amps))
}

/// |μ⟩⟨μ| as a dense matrix.
pub fn coherent_projector(j: SpinQuantum, label: &CoherentLabel) -> Result<Array2<Complex64>> {
    let c = coherent_state(j, label)?;
    let dim = j.dim();
    let mut p = Array2::<Complex64>::zeros((dim, dim));
    for r in 0..dim {
        for s in 0..dim {
            p[[r, s]] = c[r] * c[s].conj();
        }
    }
    Ok(p)
}
