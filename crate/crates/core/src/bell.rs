//! Threshold observables, distinguishability and CHSH values per cut.
//!
//! For a cut with `2N+1` macro photons the threshold observable with
//! parameter `N_sigma` answers `+1` when `n_phi <= N_sigma < n_perp` and
//! `-1` when `n_perp <= N_sigma < n_phi`. On `|psi_perp^N>` its expectation
//! is the distinguishability `v(N, N_sigma)`, a signed sum of the weights
//! `F_N(k)` over two index regions.

use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI, SQRT_2};
use std::ops::Range;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::macro_states::{
    ln_normalization_sq, ln_weight, mean_total_photons, normalization_sq, photon_spectrum,
    weight_numerators, GainSpec, PhotonSpectrum, Polarization,
};
use crate::numeric::{
    ln_biguint, signed_log_sum, CombinatoricsTable, LogValue, NumericMode, Scalar,
};

/// Largest possible CHSH value, `2 sqrt 2`.
pub const TSIRELSON_BOUND: f64 = 2.0 * SQRT_2;

/// Local-realistic CHSH bound.
pub const LOCAL_BOUND: f64 = 2.0;

/// Dichotomic photon-number threshold measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdObservable {
    pub n_sigma: u64,
    pub basis_angle: f64,
}

impl ThresholdObservable {
    pub fn new(n_sigma: u64, basis_angle: f64) -> Self {
        ThresholdObservable {
            n_sigma,
            basis_angle,
        }
    }

    /// Outcome on the ket `|n_phi, n_perp>` expressed in the observable's
    /// own basis. Kets in neither projector get `0` (inconclusive).
    pub fn eigenvalue(&self, n_phi: u64, n_perp: u64) -> i8 {
        threshold_outcome(self.n_sigma, n_phi, n_perp)
    }
}

pub(crate) fn threshold_outcome(n_sigma: u64, n_phi: u64, n_perp: u64) -> i8 {
    match (n_phi <= n_sigma, n_perp <= n_sigma) {
        (true, false) => 1,
        (false, true) => -1,
        _ => 0,
    }
}

/// The four CHSH analyzer angles, in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleSettings {
    pub phi_a: f64,
    pub phi_a_prime: f64,
    pub phi_b: f64,
    pub phi_b_prime: f64,
}

impl AngleSettings {
    /// `(0, pi/4, pi/8, -pi/8)`: correlators go as `cos 2(phi_a - phi_b)`,
    /// so the optimal spacing is `pi/8`, not `pi/4`.
    pub fn optimal() -> Self {
        AngleSettings {
            phi_a: 0.0,
            phi_a_prime: FRAC_PI_4,
            phi_b: FRAC_PI_8,
            phi_b_prime: -FRAC_PI_8,
        }
    }

    /// All four angles equal.
    pub fn collapsed(phi: f64) -> Self {
        AngleSettings {
            phi_a: phi,
            phi_a_prime: phi,
            phi_b: phi,
            phi_b_prime: phi,
        }
    }

    /// Reduces each angle modulo `2 pi` into `[0, 2 pi)`.
    pub fn normalized(&self) -> Self {
        let m = |x: f64| x.rem_euclid(2.0 * PI);
        AngleSettings {
            phi_a: m(self.phi_a),
            phi_a_prime: m(self.phi_a_prime),
            phi_b: m(self.phi_b),
            phi_b_prime: m(self.phi_b_prime),
        }
    }
}

/// Index regions `S_+` and `S_-` over `k = 0..=N`, both contiguous.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionPair {
    pub s_plus: Range<u64>,
    pub s_minus: Range<u64>,
}

impl RegionPair {
    pub fn plus_indices(&self) -> Vec<u64> {
        self.s_plus.clone().collect()
    }

    pub fn minus_indices(&self) -> Vec<u64> {
        self.s_minus.clone().collect()
    }
}

/// Regions straight from their set definitions:
/// `S_+ = {k : 2k <= N_sigma, 2N-2k+1 > N_sigma}` and
/// `S_- = {k : 2k > N_sigma, 2N-2k+1 <= N_sigma}`.
pub fn primitive_regions(n: u64, n_sigma: u64) -> (Vec<u64>, Vec<u64>) {
    let plus = (0..=n)
        .filter(|&k| 2 * k <= n_sigma && 2 * n - 2 * k + 1 > n_sigma)
        .collect();
    let minus = (0..=n)
        .filter(|&k| 2 * k > n_sigma && 2 * n - 2 * k < n_sigma)
        .collect();
    (plus, minus)
}

fn indices_to_range(idx: &[u64]) -> Range<u64> {
    match (idx.first(), idx.last()) {
        (Some(&lo), Some(&hi)) => lo..hi + 1,
        _ => 0..0,
    }
}

/// Summation regions for `v(N, N_sigma)`.
///
/// `N_sigma > N` is first reflected to `2N - N_sigma`; past `2N` both
/// regions come out empty from the set definitions.
pub fn regions(n: u64, n_sigma: u64) -> RegionPair {
    let reduced = if n_sigma <= n {
        Some(n_sigma)
    } else {
        (2 * n).checked_sub(n_sigma)
    };
    match reduced {
        Some(s) => {
            let plus_len = s / 2 + 1;
            let minus_len = s.div_ceil(2);
            RegionPair {
                s_plus: 0..plus_len,
                s_minus: n + 1 - minus_len..n + 1,
            }
        }
        None => {
            let (plus, minus) = primitive_regions(n, n_sigma);
            RegionPair {
                s_plus: indices_to_range(&plus),
                s_minus: indices_to_range(&minus),
            }
        }
    }
}

/// `F_N(k) = (C(N,k)/M)^2 (2k)! (2N-2k+1)!`, exact.
pub fn term_f_exact(n: u64, k: u64) -> Result<BigRational> {
    if k > n {
        return Err(Error::domain("k", k, format!("[0, {n}]")));
    }
    let t = CombinatoricsTable::global();
    let c = t.binomial(n, k)?;
    let num = &c * &c * t.factorial(2 * k) * t.factorial(2 * n - 2 * k + 1);
    Ok(BigRational::new(
        BigInt::from(num),
        BigInt::from(normalization_sq(n)),
    ))
}

pub fn term_f(n: u64, k: u64, mode: NumericMode) -> Result<Scalar> {
    match mode {
        NumericMode::Exact => term_f_exact(n, k).map(Scalar::Exact),
        NumericMode::LogSpace => {
            if k > n {
                return Err(Error::domain("k", k, format!("[0, {n}]")));
            }
            Ok(Scalar::Log(LogValue::positive(ln_weight(
                n,
                Polarization::PhiPerp,
                k,
            ))))
        }
    }
}

/// Numerator of `F_N(j) - F_N(N-j)` over `M^2`:
/// `C(N,j)^2 (2j)! (2N-2j)! (2N-4j)`, nonnegative for `j < N/2`.
fn paired_difference_numerator(n: u64, j: u64) -> BigUint {
    let t = CombinatoricsTable::global();
    let c = t.binomial(n, j).expect("j <= n");
    &c * &c * t.factorial(2 * j) * t.factorial(2 * n - 2 * j) * (2 * n - 4 * j)
}

fn ln_paired_difference(n: u64, j: u64) -> f64 {
    let t = CombinatoricsTable::global();
    2.0 * t.ln_binomial(n, j)
        + t.ln_factorial(2 * j)
        + t.ln_factorial(2 * n - 2 * j)
        + ((2 * n - 4 * j) as f64).ln()
        - ln_normalization_sq(n)
}

/// Distinguishability `v(N, N_sigma)`.
///
/// Every `S_-` index `N-j` is paired with the `S_+` index `j`, so the sum
/// is carried out over `F_N(j) - F_N(N-j) >= 0` plus the unpaired part of
/// `S_+`. No summand is negative and log-space evaluation does not cancel.
pub fn distinguishability(n: u64, n_sigma: u64, mode: NumericMode) -> Scalar {
    let r = regions(n, n_sigma);
    if r.s_plus.is_empty() && r.s_minus.is_empty() {
        return Scalar::zero(mode);
    }
    let paired = r.s_minus.end - r.s_minus.start;
    debug_assert!(r.s_plus.start == 0 && r.s_plus.end >= paired);
    debug_assert!(r.s_minus.is_empty() || r.s_minus.end == n + 1);

    match mode {
        NumericMode::Exact => {
            let mut acc = BigUint::zero();
            for j in 0..paired {
                acc += paired_difference_numerator(n, j);
            }
            let numerators = weight_numerators(n, Polarization::PhiPerp);
            for j in paired..r.s_plus.end {
                acc += &numerators[j as usize];
            }
            Scalar::Exact(BigRational::new(
                BigInt::from(acc),
                BigInt::from(normalization_sq(n)),
            ))
        }
        NumericMode::LogSpace => {
            let terms: Vec<LogValue> = (0..paired)
                .map(|j| LogValue::positive(ln_paired_difference(n, j)))
                .chain(
                    (paired..r.s_plus.end)
                        .map(|j| LogValue::positive(ln_weight(n, Polarization::PhiPerp, j))),
                )
                .collect();
            Scalar::Log(signed_log_sum(&terms).value)
        }
    }
}

pub fn distinguishability_exact(n: u64, n_sigma: u64) -> BigRational {
    distinguishability(n, n_sigma, NumericMode::Exact)
        .into_exact()
        .expect("exact mode")
}

/// `v(N, N_sigma)` as a float, choosing the numeric mode from `N`.
pub fn distinguishability_f64(n: u64, n_sigma: u64) -> f64 {
    distinguishability(n, n_sigma, NumericMode::auto(n)).to_f64()
}

/// Threshold maximizing `v(N, .)`: `N` for even `N`, `N - 1` for odd `N`.
pub fn maximizing_threshold(n: u64) -> u64 {
    if n.is_multiple_of(2) {
        n
    } else {
        n - 1
    }
}

/// Closed-form maximal distinguishability,
/// `(C(N,[N/2]) 2^-N)^2 (N+1)` for even `N` and `(...)^2 (N+2)` for odd `N`.
pub fn v_max_closed_exact(n: u64) -> BigRational {
    let c = BigInt::from(binomial_floor_half(n));
    let factor = if n.is_multiple_of(2) { n + 1 } else { n + 2 };
    BigRational::new(&c * &c * BigInt::from(factor), BigInt::from(1u8) << (2 * n))
}

fn binomial_floor_half(n: u64) -> BigUint {
    CombinatoricsTable::global()
        .binomial(n, n / 2)
        .expect("n/2 <= n")
}

pub fn v_max_closed(n: u64, mode: NumericMode) -> Scalar {
    match mode {
        NumericMode::Exact => Scalar::Exact(v_max_closed_exact(n)),
        NumericMode::LogSpace => Scalar::Log(LogValue::positive(ln_v_max(n))),
    }
}

/// Below this cut index `ln C(N, [N/2])` is the log of the exact integer;
/// above it the Stirling expansion of the central binomial is used
/// directly, so the large `N ln 2` terms cancel analytically.
const CENTRAL_STIRLING_SWITCH: u64 = 64;

/// `ln(C(2m, m) 4^-m)` from the Stirling series
/// `-ln(pi m)/2 - 1/(8m) + 1/(192 m^3) - 1/(640 m^5) + 17/(14336 m^7)`.
fn ln_central_binomial_scaled(m: u64) -> f64 {
    let x = m as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series =
        -inv * (1.0 / 8.0 - inv2 * (1.0 / 192.0 - inv2 * (1.0 / 640.0 - inv2 * (17.0 / 14336.0))));
    -0.5 * (PI * x).ln() + series
}

/// `ln(C(N, [N/2]) 2^-N)`.
fn ln_binomial_half_scaled(n: u64) -> f64 {
    if n < CENTRAL_STIRLING_SWITCH {
        return ln_biguint(&binomial_floor_half(n)) - n as f64 * std::f64::consts::LN_2;
    }
    let m = n / 2;
    if n.is_multiple_of(2) {
        ln_central_binomial_scaled(m)
    } else {
        // C(2m+1, m) 2^-(2m+1) = C(2m, m) 4^-m (2m+1) / (2m+2)
        ln_central_binomial_scaled(m) + (-1.0 / (2 * m + 2) as f64).ln_1p()
    }
}

fn ln_v_max(n: u64) -> f64 {
    let factor = if n.is_multiple_of(2) { n + 1 } else { n + 2 };
    2.0 * ln_binomial_half_scaled(n) + (factor as f64).ln()
}

/// `v_max(N)` in log space; tends to `2/pi` from above.
pub fn v_max_asymptote(n: u64) -> f64 {
    ln_v_max(n).exp()
}

/// `cos(2(phi_a - phi_b)) v(N, N_sigma)`.
pub fn correlator(n: u64, n_sigma: u64, phi_a: f64, phi_b: f64) -> f64 {
    correlator_from_v(distinguishability_f64(n, n_sigma), phi_a, phi_b)
}

fn correlator_from_v(v: f64, phi_a: f64, phi_b: f64) -> f64 {
    (2.0 * (phi_a - phi_b)).cos() * v
}

fn chsh_from_v(v: f64, s: &AngleSettings) -> f64 {
    correlator_from_v(v, s.phi_a, s.phi_b)
        + correlator_from_v(v, s.phi_a, s.phi_b_prime)
        + correlator_from_v(v, s.phi_a_prime, s.phi_b)
        - correlator_from_v(v, s.phi_a_prime, s.phi_b_prime)
}

/// `E(a,b) + E(a,b') + E(a',b) - E(a',b')` on the cut `N`.
pub fn chsh_value(n: u64, n_sigma: u64, settings: &AngleSettings) -> f64 {
    chsh_from_v(distinguishability_f64(n, n_sigma), settings)
}

/// How the Alice-side threshold is picked for each cut of a preselected
/// state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdChoice {
    /// One threshold for every cut.
    Fixed(u64),
    /// The maximizing threshold of each cut.
    PerCutOptimal,
}

/// Precomputed `F_N(k)` prefix sums of one cut, giving `v(N, N_sigma)` for
/// any threshold in constant time.
#[derive(Debug, Clone)]
struct CutTable {
    n: u64,
    // prefix_pair[j] = sum_{i<j} (F(i) - F(N-i)),  j <= (N+1)/2
    prefix_pair: Vec<f64>,
    // prefix_f[j] = sum_{i<j} F(i)
    prefix_f: Vec<f64>,
}

impl CutTable {
    fn new(n: u64) -> Self {
        let exact = NumericMode::auto(n) == NumericMode::Exact;
        let f = |k: u64| {
            if exact {
                crate::numeric::rational_to_f64(&term_f_exact(n, k).expect("k <= n"))
            } else {
                ln_weight(n, Polarization::PhiPerp, k).exp()
            }
        };
        let d = |j: u64| {
            if exact {
                let num = BigInt::from(paired_difference_numerator(n, j));
                crate::numeric::rational_to_f64(&BigRational::new(
                    num,
                    BigInt::from(normalization_sq(n)),
                ))
            } else {
                ln_paired_difference(n, j).exp()
            }
        };
        let mut prefix_f = Vec::with_capacity(n as usize + 2);
        prefix_f.push(0.0);
        for k in 0..=n {
            let last = *prefix_f.last().unwrap();
            prefix_f.push(last + f(k));
        }
        let mut prefix_pair = Vec::with_capacity((n as usize).div_ceil(2) + 1);
        prefix_pair.push(0.0);
        for j in 0..n.div_ceil(2) {
            let last = *prefix_pair.last().unwrap();
            prefix_pair.push(last + d(j));
        }
        CutTable {
            n,
            prefix_pair,
            prefix_f,
        }
    }

    fn v(&self, n_sigma: u64) -> f64 {
        let r = regions(self.n, n_sigma);
        if r.s_plus.is_empty() && r.s_minus.is_empty() {
            return 0.0;
        }
        let paired = (r.s_minus.end - r.s_minus.start) as usize;
        let plus = r.s_plus.end as usize;
        self.prefix_pair[paired] + (self.prefix_f[plus] - self.prefix_f[paired])
    }
}

/// CHSH evaluation on a theoretically preselected amplified state, with the
/// per-cut tables built once per gain.
#[derive(Debug, Clone)]
pub struct PreselectionEvaluator {
    gain: GainSpec,
    cuts: Vec<CutTable>,
}

impl PreselectionEvaluator {
    pub fn new(gain: &GainSpec) -> Result<Self> {
        let base = photon_spectrum(gain, 0)?;
        let cuts = (0..=base.n_max()).map(CutTable::new).collect();
        Ok(PreselectionEvaluator { gain: *gain, cuts })
    }

    pub fn spectrum(&self, n_th: u64) -> Result<PhotonSpectrum> {
        photon_spectrum(&self.gain, n_th)
    }

    pub fn v(&self, n: u64, n_sigma: u64) -> f64 {
        match self.cuts.get(n as usize) {
            Some(t) => t.v(n_sigma),
            None => distinguishability_f64(n, n_sigma),
        }
    }

    /// `sum_N weight_N chsh(N)` over the spectrum preselected at `n_th`.
    pub fn chsh(
        &self,
        n_th: u64,
        threshold: ThresholdChoice,
        settings: &AngleSettings,
    ) -> Result<f64> {
        let spectrum = self.spectrum(n_th)?;
        Ok(self.chsh_on(&spectrum, threshold, settings))
    }

    pub fn chsh_on(
        &self,
        spectrum: &PhotonSpectrum,
        threshold: ThresholdChoice,
        settings: &AngleSettings,
    ) -> f64 {
        spectrum
            .iter()
            .filter(|&(_, w)| w > 0.0)
            .map(|(n, w)| {
                let n_sigma = match threshold {
                    ThresholdChoice::Fixed(s) => s,
                    ThresholdChoice::PerCutOptimal => maximizing_threshold(n),
                };
                w * chsh_from_v(self.v(n, n_sigma), settings)
            })
            .sum()
    }
}

/// Convex CHSH sum `sum_N beta_bar_N^2 <psi^N|B|psi^N>` after theoretical
/// preselection at `n_th`.
pub fn preselected_chsh(
    gain: &GainSpec,
    n_th: u64,
    threshold: ThresholdChoice,
    settings: &AngleSettings,
) -> Result<f64> {
    let spectrum = photon_spectrum(gain, n_th)?;
    Ok(spectrum
        .iter()
        .filter(|&(_, w)| w > 0.0)
        .map(|(n, w)| {
            let n_sigma = match threshold {
                ThresholdChoice::Fixed(s) => s,
                ThresholdChoice::PerCutOptimal => maximizing_threshold(n),
            };
            w * chsh_value(n, n_sigma, settings)
        })
        .sum())
}

/// Half the mean total photon number, minus one, clamped to `[0, 2N+1]`.
pub fn default_threshold(spectrum: &PhotonSpectrum, n: u64) -> u64 {
    let half = (mean_total_photons(spectrum) / 2.0).round() as i64 - 1;
    half.clamp(0, 2 * n as i64 + 1) as u64
}

/// Cut indices whose optimal CHSH value `2 sqrt2 v_max(N)` exceeds 2.
pub fn violation_frontier(max_n: u64) -> Vec<u64> {
    // 2 sqrt2 v > 2  <=>  v^2 > 1/2, decided exactly
    let half = BigRational::new(1.into(), 2.into());
    (0..=max_n)
        .filter(|&n| {
            let v = v_max_closed_exact(n);
            &v * &v > half
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    /// Two independent region sums, no pairing.
    fn v_direct(n: u64, n_sigma: u64) -> BigRational {
        let (plus, minus) = primitive_regions(n, n_sigma);
        let mut acc = BigRational::zero();
        for k in plus {
            acc += term_f_exact(n, k).unwrap();
        }
        for k in minus {
            acc -= term_f_exact(n, k).unwrap();
        }
        acc
    }

    #[test]
    fn region_fixtures() {
        let r = regions(2, 2);
        assert_eq!(r.plus_indices(), vec![0, 1]);
        assert_eq!(r.minus_indices(), vec![2]);
        let r = regions(1, 0);
        assert_eq!(r.plus_indices(), vec![0]);
        assert!(r.minus_indices().is_empty());
        assert_eq!(regions(3, 5), regions(3, 1));
    }

    #[test]
    fn regions_match_set_definitions() {
        for n in 0..=64 {
            for s in 0..=2 * n + 3 {
                let r = regions(n, s);
                let (plus, minus) = primitive_regions(n, s);
                assert_eq!(r.plus_indices(), plus, "S_+ N={n} N_sigma={s}");
                assert_eq!(r.minus_indices(), minus, "S_- N={n} N_sigma={s}");
                if s <= n {
                    assert!(r.s_plus.end <= r.s_minus.start || r.s_minus.is_empty());
                }
            }
        }
    }

    #[test]
    fn term_f_fixtures() {
        assert_eq!(term_f_exact(1, 0).unwrap(), q(3, 4));
        assert_eq!(term_f_exact(1, 1).unwrap(), q(1, 4));
        let expect = [5040, 2160, 1296, 720];
        for (k, e) in expect.iter().enumerate() {
            assert_eq!(term_f_exact(3, k as u64).unwrap(), q(*e, 9216));
        }
        assert!(matches!(term_f_exact(3, 4), Err(Error::Domain { .. })));
        assert!(term_f(3, 4, NumericMode::LogSpace).is_err());
    }

    #[test]
    fn term_f_sums_to_one() {
        for n in 0..=64 {
            let s: BigRational = (0..=n).map(|k| term_f_exact(n, k).unwrap()).sum();
            assert_eq!(s, q(1, 1), "N = {n}");
        }
    }

    #[test]
    fn distinguishability_fixtures() {
        assert_eq!(distinguishability_exact(0, 0), q(1, 1));
        assert_eq!(distinguishability_exact(1, 0), q(3, 4));
        assert_eq!(distinguishability_exact(3, 2), q(45, 64));
        assert_eq!(distinguishability_exact(3, 2), q(5040 + 2160 - 720, 9216));
    }

    #[test]
    fn telescoped_form_equals_direct_sums() {
        for n in 0..=30 {
            for s in 0..=2 * n + 2 {
                assert_eq!(
                    distinguishability_exact(n, s),
                    v_direct(n, s),
                    "N={n} N_sigma={s}"
                );
            }
        }
    }

    #[test]
    fn log_mode_matches_exact() {
        for n in 0..=64 {
            for s in 0..=2 * n + 1 {
                let e = distinguishability(n, s, NumericMode::Exact).to_f64();
                let l = distinguishability(n, s, NumericMode::LogSpace).to_f64();
                assert!(
                    (e - l).abs() <= 1e-12 * e.abs().max(1e-3),
                    "N={n} N_sigma={s}"
                );
            }
        }
    }

    #[test]
    fn v_max_fixtures() {
        let expect = [q(1, 1), q(3, 4), q(3, 4), q(45, 64), q(45, 64)];
        for (n, e) in expect.iter().enumerate() {
            assert_eq!(&v_max_closed_exact(n as u64), e, "N = {n}");
        }
        assert_eq!(
            crate::numeric::rational_to_f64(&v_max_closed_exact(3)),
            0.703125
        );
    }

    #[test]
    fn v_max_closed_equals_region_sum_at_maximizer() {
        for n in 0..=64 {
            let s = if n == 0 { 0 } else { maximizing_threshold(n) };
            assert_eq!(
                v_max_closed_exact(n),
                distinguishability_exact(n, s),
                "N = {n}"
            );
        }
    }

    #[test]
    fn maximizer_over_all_thresholds() {
        for n in 1..=64 {
            let best = (0..=2 * n + 1)
                .map(|s| distinguishability_exact(n, s))
                .max()
                .unwrap();
            assert_eq!(best, v_max_closed_exact(n), "N = {n}");
        }
    }

    #[test]
    fn parity_identities() {
        for m in 1..=32 {
            assert_eq!(v_max_closed_exact(2 * m), v_max_closed_exact(2 * m - 1));
            assert!(v_max_closed_exact(2 * m) > v_max_closed_exact(2 * m + 2));
        }
    }

    #[test]
    fn same_parity_monotonicity() {
        for n in 2..=64 {
            for s in 1..n {
                assert!(
                    distinguishability_exact(n, s + 1) > distinguishability_exact(n, s - 1),
                    "N={n} N_sigma={s}"
                );
            }
        }
    }

    #[test]
    fn reflection_symmetry() {
        for n in 1..=40 {
            for p in 1..=n {
                assert_eq!(
                    distinguishability_exact(n, n + p),
                    distinguishability_exact(n, n - p)
                );
            }
        }
    }

    #[test]
    fn bounded_by_one() {
        for n in 0..=40 {
            for s in 0..=2 * n + 3 {
                let v = distinguishability_exact(n, s);
                assert!(v <= q(1, 1) && v >= q(-1, 1));
            }
        }
    }

    #[test]
    fn frontier_is_zero_one_two() {
        assert_eq!(violation_frontier(64), vec![0, 1, 2]);
    }

    #[test]
    fn asymptote_mode_cross_check() {
        assert!((v_max_asymptote(2) - 0.75).abs() < 1e-12);
        for n in 1..600 {
            let e = crate::numeric::rational_to_f64(&v_max_closed_exact(n));
            assert!((v_max_asymptote(n) - e).abs() < 1e-12, "N = {n}");
        }
    }

    #[test]
    fn asymptote_approaches_two_over_pi_from_above() {
        let limit = 2.0 / PI;
        let mut prev = f64::INFINITY;
        for n in [100u64, 200, 1000, 10_000, 100_000, 1_000_000, 10_000_000] {
            let v = v_max_asymptote(n);
            assert!(v > limit && v < prev, "N = {n}");
            prev = v;
        }
        assert!((v_max_asymptote(1_000_000) - limit).abs() < 1e-6);
    }

    #[test]
    fn asymptote_matches_product_oracle() {
        // C(2m,m)/4^m = prod_{j=1..m} (1 - 1/(2j))
        for m in [300u64, 1000, 25_000] {
            let ln: f64 = (1..=m).map(|j| (-1.0 / (2 * j) as f64).ln_1p()).sum();
            let oracle = (2.0 * ln).exp() * (2 * m + 1) as f64;
            let got = v_max_asymptote(2 * m);
            assert!((got - oracle).abs() / oracle < 1e-12, "m = {m}");
        }
    }

    #[test]
    fn correlator_fixtures() {
        let v = distinguishability_f64(3, 2);
        assert!((correlator(3, 2, 0.3, 0.3) - v).abs() < 1e-15);
        assert!(correlator(3, 2, FRAC_PI_4, 0.0).abs() < 1e-15);
        let c = correlator(1, 0, FRAC_PI_8, 0.0);
        assert!((c - 0.75 / SQRT_2).abs() < 1e-15);
        assert!((c - 0.530330).abs() < 1e-6);
    }

    #[test]
    fn chsh_fixtures() {
        let opt = AngleSettings::optimal();
        assert!((chsh_value(0, 0, &opt) - TSIRELSON_BOUND).abs() < 1e-12);
        let c3 = chsh_value(3, 2, &opt);
        assert!((c3 - TSIRELSON_BOUND * 45.0 / 64.0).abs() < 1e-12);
        assert!(c3 < 2.0 && (c3 - 1.988737).abs() < 1e-6);
        for n in 0..6 {
            let v = distinguishability_f64(n, n);
            assert!((chsh_value(n, n, &AngleSettings::collapsed(0.4)) - 2.0 * v).abs() < 1e-12);
        }
    }

    #[test]
    fn angles_modulo_two_pi() {
        let s = AngleSettings {
            phi_a: 0.1 + 4.0 * PI,
            phi_a_prime: -3.0,
            phi_b: 7.0,
            phi_b_prime: 0.3,
        };
        let n = s.normalized();
        assert!((chsh_value(4, 3, &s) - chsh_value(4, 3, &n)).abs() < 1e-12);
        assert!(n.phi_a_prime >= 0.0 && n.phi_b < 2.0 * PI);
    }

    #[test]
    fn preselected_chsh_fixtures() {
        let opt = AngleSettings::optimal();
        let g0 = GainSpec::with_gain(0.0).unwrap();
        let c = preselected_chsh(&g0, 0, ThresholdChoice::Fixed(0), &opt).unwrap();
        assert!((c - TSIRELSON_BOUND).abs() < 1e-12);

        let g1 = GainSpec::with_gain(1.0).unwrap();
        let got = preselected_chsh(&g1, 0, ThresholdChoice::PerCutOptimal, &opt).unwrap();
        let spectrum = photon_spectrum(&g1, 0).unwrap();
        let oracle: f64 = spectrum
            .iter()
            .map(|(n, w)| {
                w * TSIRELSON_BOUND * crate::numeric::rational_to_f64(&v_max_closed_exact(n))
            })
            .sum();
        assert!((got - oracle).abs() < 1e-10, "{got} vs {oracle}");
        assert!(got < TSIRELSON_BOUND);

        assert!(matches!(
            preselected_chsh(&g0, 2, ThresholdChoice::Fixed(0), &opt),
            Err(Error::EmptySupport(_))
        ));
    }

    #[test]
    fn evaluator_agrees_with_direct_sum() {
        let opt = AngleSettings::optimal();
        let g = GainSpec::with_gain(0.8).unwrap();
        let ev = PreselectionEvaluator::new(&g).unwrap();
        for n_th in [0, 2, 5] {
            for choice in [ThresholdChoice::Fixed(3), ThresholdChoice::PerCutOptimal] {
                let a = ev.chsh(n_th, choice, &opt).unwrap();
                let b = preselected_chsh(&g, n_th, choice, &opt).unwrap();
                assert!((a - b).abs() < 1e-12, "N_th={n_th} {choice:?}");
            }
        }
    }

    #[test]
    fn default_threshold_tracks_half_mean() {
        let g = GainSpec::with_gain(1.0).unwrap();
        let s = photon_spectrum(&g, 0).unwrap();
        // mean 7.52 -> round(3.76) - 1 = 3
        assert_eq!(default_threshold(&s, 10), 3);
        assert_eq!(default_threshold(&s, 0), 1);
    }

    #[test]
    fn threshold_observable_outcomes() {
        let o = ThresholdObservable::new(2, 0.0);
        assert_eq!(o.eigenvalue(1, 5), 1);
        assert_eq!(o.eigenvalue(5, 2), -1);
        assert_eq!(o.eigenvalue(1, 2), 0);
        assert_eq!(o.eigenvalue(3, 4), 0);
    }

    proptest! {
        #[test]
        fn chsh_bounded_by_tsirelson_times_vmax(
            n in 0u64..40, s in 0u64..90,
            a in -7.0f64..7.0, ap in -7.0f64..7.0, b in -7.0f64..7.0, bp in -7.0f64..7.0,
        ) {
            let settings = AngleSettings { phi_a: a, phi_a_prime: ap, phi_b: b, phi_b_prime: bp };
            let c = chsh_value(n, s, &settings);
            let vmax = crate::numeric::rational_to_f64(&v_max_closed_exact(n));
            prop_assert!(c.abs() <= TSIRELSON_BOUND * vmax + 1e-12);
        }
    }
}
