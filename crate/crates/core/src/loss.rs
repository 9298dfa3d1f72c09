//! Photon loss and beamsplitter preselection.
//!
//! A beamsplitter with transmissivity `t^2` reflects each of the `2N+1`
//! macro photons independently, so the reflected count is binomial. After
//! `M` photons are lost the cut is an incoherent mixture over loss
//! patterns `(n, M-n)` (photons removed from `phi` and `phi_perp`), each
//! weighted by `G^M_n = 1/(n! (M-n)!)` times the annihilation-operator
//! matrix elements.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use nalgebra::{DMatrix, DVector};

use crate::bell::threshold_outcome;
use crate::error::{Error, Result};
use crate::macro_states::{
    cut_ket, ln_weight, normalization_sq, photon_spectrum, weight_numerators, GainSpec,
    Polarization,
};
use crate::nnls::nnls;
use crate::numeric::{signed_log_sum, CombinatoricsTable, LogValue, NumericMode, Scalar, Sign};

/// Beamsplitter transmissivity `t^2`, kept as an exact rational so that
/// loss probabilities can be compared exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Transmissivity(BigRational);

impl Transmissivity {
    pub fn new(t2: BigRational) -> Result<Self> {
        if !t2.is_positive() || t2 > BigRational::one() {
            return Err(Error::invalid(
                "t2",
                format!("must lie in (0, 1], got {t2}"),
            ));
        }
        Ok(Transmissivity(t2))
    }

    pub fn ratio(numer: i64, denom: i64) -> Result<Self> {
        if denom == 0 {
            return Err(Error::invalid("t2", "zero denominator"));
        }
        Self::new(BigRational::new(numer.into(), denom.into()))
    }

    /// Exact binary value of the float.
    pub fn from_f64(t2: f64) -> Result<Self> {
        let q = BigRational::from_float(t2)
            .ok_or_else(|| Error::invalid("t2", format!("not a finite number: {t2}")))?;
        Self::new(q)
    }

    /// The unbiased beamsplitter.
    pub fn balanced() -> Self {
        Transmissivity(BigRational::new(1.into(), 2.into()))
    }

    pub fn exact(&self) -> &BigRational {
        &self.0
    }

    pub fn reflectivity(&self) -> BigRational {
        BigRational::one() - &self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

/// Loss configuration: transmissivity, reflected count `M`, and the
/// reflected-intensity threshold `K_th`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossSpec {
    pub transmissivity: Transmissivity,
    pub m: u64,
    pub k_th: u64,
}

impl LossSpec {
    pub fn new(transmissivity: Transmissivity, m: u64, k_th: u64) -> Self {
        LossSpec {
            transmissivity,
            m,
            k_th,
        }
    }

    /// Checks `M <= 2N+1` for the cut it is applied to.
    pub fn check_cut(&self, n: u64) -> Result<()> {
        check_loss_count(n, self.m)
    }
}

fn check_loss_count(n: u64, m: u64) -> Result<()> {
    if m > 2 * n + 1 {
        return Err(Error::domain("M", m, format!("[0, {}]", 2 * n + 1)));
    }
    Ok(())
}

/// One loss pattern: `n` photons lost from `phi`, `m - n` from `phi_perp`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossPatternWeight {
    pub n: u64,
    pub m: u64,
    /// `G^M_n = 1 / (n! (M-n)!)`.
    pub weight: BigRational,
}

pub fn loss_patterns(m: u64) -> Vec<LossPatternWeight> {
    let t = CombinatoricsTable::global();
    (0..=m)
        .map(|n| LossPatternWeight {
            n,
            m,
            weight: BigRational::new(
                BigInt::one(),
                BigInt::from(t.factorial(n) * t.factorial(m - n)),
            ),
        })
        .collect()
}

/// Probability of reflecting `M = 0..=2N+1` photons,
/// `Binomial(2N+1, 1 - t^2)`, exactly.
pub fn reflected_count_distribution_exact(n: u64, t2: &Transmissivity) -> Vec<BigRational> {
    let total = 2 * n + 1;
    let t = CombinatoricsTable::global();
    let keep = t2.exact();
    let lose = t2.reflectivity();
    (0..=total)
        .map(|m| {
            let c =
                BigRational::from_integer(BigInt::from(t.binomial(total, m).expect("m <= total")));
            c * pow(&lose, m) * pow(keep, total - m)
        })
        .collect()
}

fn pow(q: &BigRational, e: u64) -> BigRational {
    num_traits::pow(q.clone(), e as usize)
}

/// Float version of [`reflected_count_distribution_exact`], evaluated in
/// log space so large cuts do not underflow term by term.
pub fn reflected_count_distribution(n: u64, t2: f64) -> Result<Vec<f64>> {
    if !(t2 > 0.0 && t2 <= 1.0) {
        return Err(Error::invalid(
            "t2",
            format!("must lie in (0, 1], got {t2}"),
        ));
    }
    Ok(binomial_pmf(2 * n + 1, 1.0 - t2))
}

fn binomial_pmf(total: u64, p: f64) -> Vec<f64> {
    let t = CombinatoricsTable::global();
    let (ln_p, ln_q) = (p.ln(), (1.0 - p).ln());
    (0..=total)
        .map(|m| {
            let mut ln = t.ln_binomial(total, m);
            if m > 0 {
                ln += m as f64 * ln_p;
            }
            if m < total {
                ln += (total - m) as f64 * ln_q;
            }
            if ln == f64::NEG_INFINITY || ln.is_nan() {
                0.0
            } else {
                ln.exp()
            }
        })
        .collect()
}

/// Lossy distinguishability `<psi_perp^N| O_bar^N |psi_perp^N>` after `M`
/// photons were lost.
///
/// For each ket `|2k, 2N-2k+1>` and each pattern `(n, M-n)` the reduced
/// ket `|2k-n, 2N-2k+1-M+n>` is scored by the threshold observable; the
/// pattern weight `G^M_n` times the squared annihilation matrix elements
/// is `C(n_phi, n) C(n_perp, M-n)`, and the sum of those over patterns is
/// `C(2N+1, M)`.
pub fn lossy_distinguishability(n: u64, m: u64, n_sigma: u64, mode: NumericMode) -> Result<Scalar> {
    check_loss_count(n, m)?;
    let t = CombinatoricsTable::global();
    match mode {
        NumericMode::Exact => {
            let weights = weight_numerators(n, Polarization::PhiPerp);
            let mut acc = BigInt::zero();
            for k in 0..=n {
                let (a, b) = cut_ket(n, Polarization::PhiPerp, k);
                let mut inner = BigInt::zero();
                for lost_phi in 0..=m.min(a) {
                    let lost_perp = m - lost_phi;
                    if lost_perp > b {
                        continue;
                    }
                    let sign = threshold_outcome(n_sigma, a - lost_phi, b - lost_perp);
                    if sign == 0 {
                        continue;
                    }
                    let mult = BigInt::from(
                        t.binomial(a, lost_phi).expect("n <= a")
                            * t.binomial(b, lost_perp).expect("m-n <= b"),
                    );
                    inner += if sign > 0 { mult } else { -mult };
                }
                acc += inner * BigInt::from(weights[k as usize].clone());
            }
            let denom = BigInt::from(normalization_sq(n) * t.binomial(2 * n + 1, m)?);
            Ok(Scalar::Exact(BigRational::new(acc, denom)))
        }
        NumericMode::LogSpace => {
            let ln_norm = t.ln_binomial(2 * n + 1, m);
            let mut terms = Vec::new();
            for k in 0..=n {
                let (a, b) = cut_ket(n, Polarization::PhiPerp, k);
                let ln_w = ln_weight(n, Polarization::PhiPerp, k);
                for lost_phi in 0..=m.min(a) {
                    let lost_perp = m - lost_phi;
                    if lost_perp > b {
                        continue;
                    }
                    let sign = match threshold_outcome(n_sigma, a - lost_phi, b - lost_perp) {
                        1 => Sign::Positive,
                        -1 => Sign::Negative,
                        _ => continue,
                    };
                    let ln =
                        ln_w + t.ln_binomial(a, lost_phi) + t.ln_binomial(b, lost_perp) - ln_norm;
                    terms.push(LogValue::new(sign, ln));
                }
            }
            Ok(Scalar::Log(signed_log_sum(&terms).value))
        }
    }
}

pub fn lossy_distinguishability_exact(n: u64, m: u64, n_sigma: u64) -> Result<BigRational> {
    Ok(lossy_distinguishability(n, m, n_sigma, NumericMode::Exact)?
        .into_exact()
        .expect("exact mode"))
}

/// Diagonal of `O_bar^N` on the `2N+1` cut, indexed by `n_phi = 0..=2N+1`.
fn lossy_observable_diagonal(n: u64, m: u64, n_sigma: u64) -> Vec<BigRational> {
    let t = CombinatoricsTable::global();
    let total = 2 * n + 1;
    let norm = BigInt::from(t.binomial(total, m).expect("m <= 2N+1"));
    (0..=total)
        .map(|a| {
            let b = total - a;
            let mut acc = BigInt::zero();
            for lost_phi in 0..=m.min(a) {
                let lost_perp = m - lost_phi;
                if lost_perp > b {
                    continue;
                }
                let sign = threshold_outcome(n_sigma, a - lost_phi, b - lost_perp);
                let mult = BigInt::from(
                    t.binomial(a, lost_phi).expect("n <= a")
                        * t.binomial(b, lost_perp).expect("m-n <= b"),
                );
                acc += mult * BigInt::from(sign);
            }
            BigRational::new(acc, norm.clone())
        })
        .collect()
}

/// Result of fitting `O_bar^N` by a nonnegative mixture of lossless
/// threshold observables `O^N_{N'_sigma}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureFit {
    pub n: u64,
    pub m: u64,
    pub n_sigma: u64,
    /// Candidate thresholds `min(N_sigma, M) ..= M + N_sigma`.
    pub range: (u64, u64),
    /// Fitted `(N'_sigma, p)` over the candidate range.
    pub weights: Vec<(u64, f64)>,
    /// Euclidean norm of the diagonal residual.
    pub residual: f64,
    pub weight_sum: f64,
    /// `weight_sum <= 1 + 1e-9`.
    pub sub_normalized: bool,
    /// Residual of the same fit with every threshold `0..=2N+1` allowed.
    pub unrestricted_residual: f64,
    pub unrestricted_weights: Vec<(u64, f64)>,
}

/// Fits nonnegative weights `p(N'_sigma)` so that
/// `sum p(N'_sigma) O^N_{N'_sigma}` matches the diagonal of `O_bar^N` on
/// the full `2N+1` cut.
pub fn threshold_mixture_check(n: u64, m: u64, n_sigma: u64) -> Result<MixtureFit> {
    if n > 10 || m > 4 {
        return Err(Error::invalid(
            "N, M",
            format!("mixture fit is limited to N <= 10, M <= 4 (got N = {n}, M = {m})"),
        ));
    }
    check_loss_count(n, m)?;
    let total = 2 * n + 1;
    let target: Vec<f64> = lossy_observable_diagonal(n, m, n_sigma)
        .iter()
        .map(|q| q.to_f64().unwrap_or(f64::NAN))
        .collect();
    let b = DVector::from_vec(target);

    let range = (n_sigma.min(m), m + n_sigma);
    let restricted: Vec<u64> = (range.0..=range.1).collect();
    let unrestricted: Vec<u64> = (0..=total).collect();

    let (weights, residual) = fit(n, n_sigma, &restricted, &b);
    let (unrestricted_weights, unrestricted_residual) = fit(n, n_sigma, &unrestricted, &b);
    let weight_sum: f64 = weights.iter().map(|&(_, p)| p).sum();
    Ok(MixtureFit {
        n,
        m,
        n_sigma,
        range,
        weights,
        residual,
        weight_sum,
        sub_normalized: weight_sum <= 1.0 + 1e-9,
        unrestricted_residual,
        unrestricted_weights,
    })
}

fn fit(n: u64, n_sigma: u64, thresholds: &[u64], b: &DVector<f64>) -> (Vec<(u64, f64)>, f64) {
    let total = 2 * n + 1;
    let a = DMatrix::from_fn(total as usize + 1, thresholds.len(), |row, col| {
        let n_phi = row as u64;
        f64::from(threshold_outcome(thresholds[col], n_phi, total - n_phi))
    });
    let rank: Vec<u64> = thresholds.iter().map(|&s| s.abs_diff(n_sigma)).collect();
    let x = nnls(&a, b, &rank);
    let residual = (b - &a * &x).norm();
    let weights = thresholds
        .iter()
        .zip(x.iter())
        .map(|(&s, &p)| (s, p))
        .collect();
    (weights, residual)
}

/// Joint `(N, M)` distribution after beamsplitter preselection, together
/// with its marginal over the cut index.
#[derive(Debug, Clone, PartialEq)]
pub struct BsPreselection {
    /// `(N, M, weight)` with `M >= K_th`, sorted by `(N, M)`.
    pub joint: Vec<(u64, u64, f64)>,
    /// Marginal weight of cut `N`, indexed by `N`.
    pub marginal: Vec<f64>,
    /// Probability that the reflected count reaches `K_th`.
    pub acceptance: f64,
}

/// Conditions the amplified state on at least `k_th` reflected photons:
/// weights `beta_N^2 P(M | N, t^2)` over `M >= k_th`, renormalized.
pub fn bs_preselect_spectrum(gain: &GainSpec, t2: f64, k_th: u64) -> Result<BsPreselection> {
    if !(t2 > 0.0 && t2 <= 1.0) {
        return Err(Error::invalid(
            "t2",
            format!("must lie in (0, 1], got {t2}"),
        ));
    }
    let base = photon_spectrum(gain, 0)?;
    let mut joint = Vec::new();
    let mut marginal = vec![0.0; base.n_max() as usize + 1];
    for (n, w) in base.iter() {
        if w == 0.0 {
            continue;
        }
        let pmf = binomial_pmf(2 * n + 1, 1.0 - t2);
        for (m, p) in pmf.into_iter().enumerate().skip(k_th as usize) {
            let jw = w * p;
            if jw > 0.0 {
                joint.push((n, m as u64, jw));
                marginal[n as usize] += jw;
            }
        }
    }
    let acceptance: f64 = marginal.iter().sum();
    if acceptance.is_nan() || acceptance <= 0.0 {
        return Err(Error::EmptySupport(format!(
            "no retained cut reflects K_th = {k_th} photons at t2 = {t2}"
        )));
    }
    for (_, _, w) in &mut joint {
        *w /= acceptance;
    }
    for w in &mut marginal {
        *w /= acceptance;
    }
    Ok(BsPreselection {
        joint,
        marginal,
        acceptance,
    })
}

/// One row of the beamsplitter-vs-theoretical preselection comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub k_th: u64,
    pub best_n_th: u64,
    pub tv_distance: f64,
}

/// For each `K_th`, the theoretical threshold whose spectrum is closest in
/// total variation to the beamsplitter-preselected marginal.
pub fn bs_convergence_report(
    gain: &GainSpec,
    t2: f64,
    k_range: impl IntoIterator<Item = u64>,
) -> Result<Vec<ConvergenceRow>> {
    let base = photon_spectrum(gain, 0)?;
    let candidates: Vec<_> = (0..=base.n_max())
        .map_while(|n_th| photon_spectrum(gain, n_th).ok().map(|s| (n_th, s)))
        .collect();
    k_range
        .into_iter()
        .map(|k_th| {
            let bs = bs_preselect_spectrum(gain, t2, k_th)?;
            let (best_n_th, tv_distance) = candidates
                .iter()
                .map(|(n_th, s)| {
                    let len = bs.marginal.len().max(s.n_max() as usize + 1);
                    let tv = 0.5
                        * (0..len)
                            .map(|n| {
                                let a = bs.marginal.get(n).copied().unwrap_or(0.0);
                                (a - s.weight(n as u64)).abs()
                            })
                            .sum::<f64>();
                    (*n_th, tv)
                })
                .fold(
                    (0, f64::INFINITY),
                    |best, cur| if cur.1 < best.1 { cur } else { best },
                );
            Ok(ConvergenceRow {
                k_th,
                best_n_th,
                tv_distance,
            })
        })
        .collect()
}

/// Exact `C(2N+1, M)`, the normalization of the lossy observable.
pub fn loss_normalization(n: u64, m: u64) -> Result<BigUint> {
    check_loss_count(n, m)?;
    CombinatoricsTable::global().binomial(2 * n + 1, m)
}

/// Checks `sum_n G^M_n n_phi!/(n_phi-n)! n_perp!/(n_perp-M+n)! = C(n_phi+n_perp, M)`
/// for one ket, in exact arithmetic.
pub fn pattern_weights_normalize(n_phi: u64, n_perp: u64, m: u64) -> bool {
    let t = CombinatoricsTable::global();
    let mut acc = BigRational::zero();
    for p in loss_patterns(m) {
        let (lost_phi, lost_perp) = (p.n, p.m - p.n);
        if lost_phi > n_phi || lost_perp > n_perp {
            continue;
        }
        let falling = |x: u64, k: u64| t.factorial(x) / t.factorial(x - k);
        let f = BigInt::from(falling(n_phi, lost_phi) * falling(n_perp, lost_perp));
        acc += p.weight * BigRational::from_integer(f);
    }
    let expect = t
        .binomial(n_phi + n_perp, m)
        .map(BigInt::from)
        .unwrap_or_default();
    acc == BigRational::from_integer(expect)
}
