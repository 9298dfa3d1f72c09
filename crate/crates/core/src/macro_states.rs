//! The amplified micro-macro singlet, cut by cut.
//!
//! Amplification expands the singlet into cuts `|psi^N>` carrying `2N+1`
//! macro photons, weighted by `beta_N = cosh(g)^-2 tanh(g)^N sqrt(N+1)`.
//! Every amplitude in a cut is real and nonnegative; its square is a
//! rational number, which is what the exact mode stores.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::numeric::{CombinatoricsTable, LogValue, NumericMode, Scalar};

pub const DEFAULT_TRUNCATION_EPSILON: f64 = 1e-12;

/// Amplifier parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainSpec {
    g: f64,
    cosh_g: f64,
    tanh_g: f64,
    truncation_epsilon: f64,
}

impl GainSpec {
    pub fn new(g: f64, truncation_epsilon: f64) -> Result<Self> {
        if !g.is_finite() || g < 0.0 {
            return Err(Error::invalid(
                "g",
                format!("gain must be finite and >= 0, got {g}"),
            ));
        }
        if !(truncation_epsilon > 0.0 && truncation_epsilon < 1.0) {
            return Err(Error::invalid(
                "truncation_epsilon",
                format!("must lie in (0, 1), got {truncation_epsilon}"),
            ));
        }
        Ok(GainSpec {
            g,
            cosh_g: g.cosh(),
            tanh_g: g.tanh(),
            truncation_epsilon,
        })
    }

    /// Gain with the default truncation epsilon of 1e-12.
    pub fn with_gain(g: f64) -> Result<Self> {
        Self::new(g, DEFAULT_TRUNCATION_EPSILON)
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn cosh_g(&self) -> f64 {
        self.cosh_g
    }

    pub fn tanh_g(&self) -> f64 {
        self.tanh_g
    }

    pub fn truncation_epsilon(&self) -> f64 {
        self.truncation_epsilon
    }

    /// Mean photon number per amplified mode, `sinh^2 g`.
    pub fn sinh_sq(&self) -> f64 {
        let s = self.g.sinh();
        s * s
    }

    /// `tanh^2 g`, the ratio between consecutive `beta_N^2 / (N+1)`.
    fn ratio(&self) -> f64 {
        self.tanh_g * self.tanh_g
    }
}

/// `beta_N = cosh(g)^-2 tanh(g)^N sqrt(N+1)` as a log-space value.
pub fn beta(n: u64, gain: &GainSpec) -> Scalar {
    Scalar::Log(ln_beta(n, gain))
}

fn ln_beta(n: u64, gain: &GainSpec) -> LogValue {
    if n > 0 && gain.tanh_g == 0.0 {
        return LogValue::ZERO;
    }
    let ln_t = if n == 0 {
        0.0
    } else {
        n as f64 * gain.tanh_g.ln()
    };
    LogValue::positive(-2.0 * gain.cosh_g.ln() + ln_t + 0.5 * ((n + 1) as f64).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarization {
    Phi,
    PhiPerp,
}

impl Polarization {
    pub fn orthogonal(self) -> Self {
        match self {
            Polarization::Phi => Polarization::PhiPerp,
            Polarization::PhiPerp => Polarization::Phi,
        }
    }
}

/// Photon numbers `(n_phi, n_phi_perp)` of the `k`-th ket of a cut.
pub fn cut_ket(n: u64, pol: Polarization, k: u64) -> (u64, u64) {
    match pol {
        Polarization::Phi => (2 * k + 1, 2 * n - 2 * k),
        Polarization::PhiPerp => (2 * k, 2 * n - 2 * k + 1),
    }
}

/// `M^2 = 4^N N! (N+1)!`.
pub(crate) fn normalization_sq(n: u64) -> BigUint {
    let t = CombinatoricsTable::global();
    (BigUint::from(1u32) << (2 * n)) * t.factorial(n) * t.factorial(n + 1)
}

/// `C(N,k)^2 (n_phi)! (n_perp)!` for `k = 0..=N`; dividing by
/// [`normalization_sq`] gives the squared amplitudes.
pub(crate) fn weight_numerators(n: u64, pol: Polarization) -> Vec<BigUint> {
    let t = CombinatoricsTable::global();
    (0..=n)
        .map(|k| {
            let c = t.binomial(n, k).expect("k <= n");
            let (a, b) = cut_ket(n, pol, k);
            &c * &c * t.factorial(a) * t.factorial(b)
        })
        .collect()
}

pub(crate) fn ln_normalization_sq(n: u64) -> f64 {
    let t = CombinatoricsTable::global();
    2.0 * n as f64 * std::f64::consts::LN_2 + t.ln_factorial(n) + t.ln_factorial(n + 1)
}

pub(crate) fn ln_weight(n: u64, pol: Polarization, k: u64) -> f64 {
    let t = CombinatoricsTable::global();
    let (a, b) = cut_ket(n, pol, k);
    2.0 * t.ln_binomial(n, k) + t.ln_factorial(a) + t.ln_factorial(b) - ln_normalization_sq(n)
}

/// One macro qubit `|psi_phi^N>` or `|psi_phi_perp^N>`.
///
/// `coeffs[k]` holds the *squared* amplitude of the `k`-th ket; the
/// amplitude itself is its nonnegative square root.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroQubit {
    n: u64,
    polarization: Polarization,
    coeffs: Vec<Scalar>,
    normalization_sq: Scalar,
}

impl MacroQubit {
    pub fn new(n: u64, polarization: Polarization, mode: NumericMode) -> Self {
        let (coeffs, normalization_sq) = match mode {
            NumericMode::Exact => {
                let m2 = BigInt::from(normalization_sq(n));
                let coeffs = weight_numerators(n, polarization)
                    .into_iter()
                    .map(|w| Scalar::Exact(BigRational::new(BigInt::from(w), m2.clone())))
                    .collect();
                (coeffs, Scalar::Exact(BigRational::from_integer(m2)))
            }
            NumericMode::LogSpace => {
                let coeffs = (0..=n)
                    .map(|k| Scalar::Log(LogValue::positive(ln_weight(n, polarization, k))))
                    .collect();
                (
                    coeffs,
                    Scalar::Log(LogValue::positive(ln_normalization_sq(n))),
                )
            }
        };
        MacroQubit {
            n,
            polarization,
            coeffs,
            normalization_sq,
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn polarization(&self) -> Polarization {
        self.polarization
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    /// `M^2 = 4^N N! (N+1)!`.
    pub fn normalization_sq(&self) -> &Scalar {
        &self.normalization_sq
    }

    pub fn ket(&self, k: u64) -> (u64, u64) {
        cut_ket(self.n, self.polarization, k)
    }

    pub fn amplitude(&self, k: u64) -> f64 {
        self.coeffs[k as usize].to_f64().sqrt()
    }

    pub fn squared_norm(&self) -> Scalar {
        let mode = self.coeffs[0].mode();
        self.coeffs
            .iter()
            .cloned()
            .fold(Scalar::zero(mode), |acc, c| acc + c)
    }

    pub fn to_fock_vector(&self) -> TwoModeFockVector {
        let mut v = TwoModeFockVector::default();
        for k in 0..=self.n {
            v.insert(self.ket(k), self.amplitude(k));
        }
        v
    }
}

/// Sparse real amplitudes over two-mode Fock kets `|n_phi, n_phi_perp>`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TwoModeFockVector {
    amps: BTreeMap<(u64, u64), f64>,
}

impl TwoModeFockVector {
    pub fn insert(&mut self, ket: (u64, u64), amplitude: f64) {
        if amplitude == 0.0 {
            self.amps.remove(&ket);
        } else {
            self.amps.insert(ket, amplitude);
        }
    }

    pub fn get(&self, ket: (u64, u64)) -> f64 {
        self.amps.get(&ket).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = ((u64, u64), f64)> + '_ {
        self.amps.iter().map(|(&k, &a)| (k, a))
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn inner(&self, other: &TwoModeFockVector) -> f64 {
        self.iter().map(|(k, a)| a * other.get(k)).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.inner(self)
    }
}

/// Cut-index distribution after theoretical preselection.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonSpectrum {
    weights: Vec<f64>,
    n_th: u64,
    epsilon: f64,
    raw_mass: f64,
}

impl PhotonSpectrum {
    /// Weight of cut `n`; zero below the threshold and beyond the truncation.
    pub fn weight(&self, n: u64) -> f64 {
        self.weights.get(n as usize).copied().unwrap_or(0.0)
    }

    /// `(N, weight)` pairs from `N = 0` to the truncation point.
    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.weights.iter().enumerate().map(|(n, &w)| (n as u64, w))
    }

    pub fn n_th(&self) -> u64 {
        self.n_th
    }

    /// Largest cut kept by the truncation rule.
    pub fn n_max(&self) -> u64 {
        self.weights.len() as u64 - 1
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `sum beta_N^2` over the retained cuts, before renormalization.
    pub fn raw_mass(&self) -> f64 {
        self.raw_mass
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Applies a further threshold to an existing spectrum.
    pub fn preselect(&self, n_th: u64) -> Result<PhotonSpectrum> {
        let mut weights = self.weights.clone();
        for w in weights.iter_mut().take(n_th as usize) {
            *w = 0.0;
        }
        let kept: f64 = weights.iter().sum();
        if kept <= 0.0 {
            return Err(Error::EmptySupport(format!(
                "no weight left at or above N_th = {n_th}"
            )));
        }
        for w in &mut weights {
            *w /= kept;
        }
        Ok(PhotonSpectrum {
            weights,
            n_th: n_th.max(self.n_th),
            epsilon: self.epsilon,
            raw_mass: self.raw_mass * kept,
        })
    }
}

/// `ln sum_{N >= from} (N+1) x^N (1-x)^2 = ln(x^from ((from+1) - from x))`,
/// the exact mass of the geometric-type tail.
fn ln_tail_mass(from: u64, gain: &GainSpec) -> f64 {
    let x = gain.ratio();
    if from == 0 {
        return 0.0;
    }
    if x == 0.0 {
        return f64::NEG_INFINITY;
    }
    let f = from as f64;
    f * x.ln() + ((f + 1.0) - f * x).ln()
}

/// Theoretical preselection of the amplified state at threshold `n_th`.
///
/// The series is cut at the first `N_max` whose exact tail mass beyond it
/// is below `epsilon` times the preselected mass.
pub fn photon_spectrum(gain: &GainSpec, n_th: u64) -> Result<PhotonSpectrum> {
    let ln_head = ln_tail_mass(n_th, gain);
    if ln_head == f64::NEG_INFINITY {
        return Err(Error::EmptySupport(format!(
            "gain g = {} has no cut with N >= N_th = {n_th}",
            gain.g
        )));
    }
    let ln_eps = gain.truncation_epsilon.ln();
    let mut n_max = n_th;
    while ln_tail_mass(n_max + 1, gain) - ln_head >= ln_eps {
        n_max += 1;
    }

    let mut weights = vec![0.0; n_max as usize + 1];
    for n in n_th..=n_max {
        weights[n as usize] = ln_beta(n, gain).powi(2).to_f64();
    }
    let raw_mass: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= raw_mass;
    }
    Ok(PhotonSpectrum {
        weights,
        n_th,
        epsilon: gain.truncation_epsilon,
        raw_mass,
    })
}

/// `sum_N weight_N (2N + 2)`: the `2N+1` macro photons plus the micro photon.
pub fn mean_total_photons(spectrum: &PhotonSpectrum) -> f64 {
    spectrum.iter().map(|(n, w)| w * (2 * n + 2) as f64).sum()
}
