//! Brute-force reference on truncated two-mode Fock spaces.
//!
//! Everything here is built as explicit dense arrays: the singlet cut, mode
//! rotations, threshold observables and the beamsplitter channel. Nothing
//! is fast; it only has to be obviously right.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::bell::{threshold_outcome, AngleSettings};
use crate::error::{Error, Result};
use crate::loss::Transmissivity;
use crate::macro_states::{cut_ket, normalization_sq, weight_numerators, Polarization};
use crate::numeric::{rational_to_f64, CombinatoricsTable};

/// A real number stored as `sign * sqrt(square)` with `square` rational.
#[derive(Debug, Clone, PartialEq)]
pub struct SqrtRational {
    negative: bool,
    square: BigRational,
}

impl SqrtRational {
    pub fn zero() -> Self {
        SqrtRational {
            negative: false,
            square: BigRational::zero(),
        }
    }

    pub fn one() -> Self {
        Self::from_square(BigRational::one())
    }

    /// `sqrt(square)`, nonnegative.
    pub fn from_square(square: BigRational) -> Self {
        assert!(!square.is_negative(), "square must be nonnegative");
        SqrtRational {
            negative: false,
            square,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.square.is_zero()
    }

    pub fn square(&self) -> &BigRational {
        &self.square
    }

    /// `-1`, `0` or `1`.
    pub fn signum(&self) -> i8 {
        match (self.is_zero(), self.negative) {
            (true, _) => 0,
            (false, true) => -1,
            (false, false) => 1,
        }
    }

    pub fn to_f64(&self) -> f64 {
        let m = rational_to_f64(&self.square).sqrt();
        if self.negative {
            -m
        } else {
            m
        }
    }
}

impl std::ops::Mul for &SqrtRational {
    type Output = SqrtRational;

    fn mul(self, rhs: &SqrtRational) -> SqrtRational {
        SqrtRational {
            negative: self.negative != rhs.negative,
            square: &self.square * &rhs.square,
        }
    }
}

impl std::ops::Neg for SqrtRational {
    type Output = SqrtRational;

    fn neg(self) -> SqrtRational {
        SqrtRational {
            negative: !self.negative,
            square: self.square,
        }
    }
}

/// Micro-qubit basis label: `0` is `1_phi`, `1` is `1_phi_perp`.
pub const MICRO_PHI: usize = 0;
pub const MICRO_PERP: usize = 1;

/// Exact amplitudes over `(n1, n2, b)`, `n1, n2 <= cutoff`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    cutoff: u64,
    amplitudes: Vec<SqrtRational>,
}

impl DenseState {
    pub fn zeros(cutoff: u64) -> Self {
        let c = cutoff as usize + 1;
        DenseState {
            cutoff,
            amplitudes: vec![SqrtRational::zero(); c * c * 2],
        }
    }

    pub fn cutoff(&self) -> u64 {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn index(&self, n1: u64, n2: u64, b: usize) -> usize {
        debug_assert!(n1 <= self.cutoff && n2 <= self.cutoff && b < 2);
        ((n1 * (self.cutoff + 1) + n2) as usize) * 2 + b
    }

    pub fn get(&self, n1: u64, n2: u64, b: usize) -> &SqrtRational {
        &self.amplitudes[self.index(n1, n2, b)]
    }

    pub fn set(&mut self, n1: u64, n2: u64, b: usize, amp: SqrtRational) {
        let i = self.index(n1, n2, b);
        self.amplitudes[i] = amp;
    }

    /// Nonzero entries as `((n1, n2, b), amplitude)`.
    pub fn nonzero(&self) -> Vec<((u64, u64, usize), &SqrtRational)> {
        let c = self.cutoff + 1;
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(_, a)| !a.is_zero())
            .map(|(i, a)| {
                let b = i % 2;
                let m = (i / 2) as u64;
                ((m / c, m % c, b), a)
            })
            .collect()
    }

    pub fn norm_sq_exact(&self) -> BigRational {
        self.amplitudes.iter().map(|a| a.square.clone()).sum()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.amplitudes.iter().map(SqrtRational::to_f64).collect()
    }

    /// Macro amplitudes for micro label `b`, as a `(cutoff+1)^2` vector
    /// indexed by `n1 * (cutoff+1) + n2`.
    fn micro_slice(&self, b: usize) -> nalgebra::DVector<f64> {
        let c = self.cutoff as usize + 1;
        nalgebra::DVector::from_fn(c * c, |m, _| self.amplitudes[m * 2 + b].to_f64())
    }
}

/// The cut `|psi^N>` with per-mode cutoff `2N+2`.
pub fn dense_singlet_cut(n: u64) -> Result<DenseState> {
    dense_singlet_cut_with_cutoff(n, 2 * n + 2)
}

/// `(|psi_phi^N> |1_perp> - |psi_perp^N> |1_phi>) / sqrt 2`.
pub fn dense_singlet_cut_with_cutoff(n: u64, cutoff: u64) -> Result<DenseState> {
    if cutoff < 2 * n + 1 {
        return Err(Error::Dimension(format!(
            "cutoff {cutoff} cannot hold the {} macro photons of cut {n}",
            2 * n + 1
        )));
    }
    let mut state = DenseState::zeros(cutoff);
    let norm: BigInt = BigInt::from(normalization_sq(n)) * 2u32;
    for (pol, micro, negative) in [
        (Polarization::Phi, MICRO_PERP, false),
        (Polarization::PhiPerp, MICRO_PHI, true),
    ] {
        for (k, w) in weight_numerators(n, pol).into_iter().enumerate() {
            let (n1, n2) = cut_ket(n, pol, k as u64);
            let amp = SqrtRational {
                negative,
                square: BigRational::new(BigInt::from(w), norm.clone()),
            };
            state.set(n1, n2, micro, amp);
        }
    }
    Ok(state)
}

/// `<psi_pol^N| O^N |psi_pol^N>` at `phi = 0` by enumerating the kets of
/// the macro qubit, exactly. Sparse, so it reaches cuts far beyond the
/// dense cutoff.
pub fn macro_threshold_expectation(n: u64, pol: Polarization, n_sigma: u64) -> BigRational {
    let mut acc = BigInt::zero();
    for (k, w) in weight_numerators(n, pol).into_iter().enumerate() {
        let (a, b) = cut_ket(n, pol, k as u64);
        acc += BigInt::from(w) * BigInt::from(threshold_outcome(n_sigma, a, b));
    }
    BigRational::new(acc, BigInt::from(normalization_sq(n)))
}

/// `sum alpha_{kl} |k,l><k,l| (x) O_b` on the dense space. Missing
/// `alpha_{kl}` are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalObservable {
    pub alpha: BTreeMap<(u64, u64), f64>,
    pub micro: [[f64; 2]; 2],
}

impl DiagonalObservable {
    pub fn new(alpha: BTreeMap<(u64, u64), f64>, micro: [[f64; 2]; 2]) -> Result<Self> {
        if micro[0][1] != micro[1][0] {
            return Err(Error::invalid("micro", "operator is not Hermitian"));
        }
        Ok(DiagonalObservable { alpha, micro })
    }

    pub fn identity(cutoff: u64) -> Self {
        let alpha = (0..=cutoff)
            .flat_map(|a| (0..=cutoff).map(move |b| ((a, b), 1.0)))
            .collect();
        DiagonalObservable {
            alpha,
            micro: [[1.0, 0.0], [0.0, 1.0]],
        }
    }

    /// Threshold observable at `phi = 0` tensored with `micro`.
    pub fn threshold(n_sigma: u64, cutoff: u64, micro: [[f64; 2]; 2]) -> Self {
        let alpha = (0..=cutoff)
            .flat_map(|a| {
                (0..=cutoff).map(move |b| ((a, b), f64::from(threshold_outcome(n_sigma, a, b))))
            })
            .collect();
        DiagonalObservable { alpha, micro }
    }

    fn alpha(&self, n1: u64, n2: u64) -> f64 {
        self.alpha.get(&(n1, n2)).copied().unwrap_or(0.0)
    }
}

/// Micro observable `[[cos 2phi, sin 2phi], [sin 2phi, -cos 2phi]]`.
pub fn micro_observable(phi: f64) -> [[f64; 2]; 2] {
    let (s, c) = (2.0 * phi).sin_cos();
    [[c, s], [s, -c]]
}

/// `<state| O |state>` by direct contraction.
pub fn oracle_expectation(state: &DenseState, obs: &DiagonalObservable) -> f64 {
    oracle_cross_term(state, obs, state).expect("same state")
}

/// `<left| O |right>`; both states must share a cutoff.
pub fn oracle_cross_term(
    left: &DenseState,
    obs: &DiagonalObservable,
    right: &DenseState,
) -> Result<f64> {
    if left.cutoff != right.cutoff {
        return Err(Error::Dimension(format!(
            "cutoffs differ: {} vs {}",
            left.cutoff, right.cutoff
        )));
    }
    let l = left.to_f64();
    let r = right.to_f64();
    let mut acc = 0.0;
    for n1 in 0..=left.cutoff {
        for n2 in 0..=left.cutoff {
            let a = obs.alpha(n1, n2);
            for b in 0..2 {
                for bp in 0..2 {
                    acc +=
                        l[left.index(n1, n2, b)] * a * obs.micro[b][bp] * r[left.index(n1, n2, bp)];
                }
            }
        }
    }
    Ok(acc)
}

/// Exact `<state| O |state>` for integer `alpha` and a diagonal micro part.
pub fn oracle_expectation_exact(
    state: &DenseState,
    alpha: impl Fn(u64, u64) -> i64,
    micro_diag: [i64; 2],
) -> BigRational {
    state
        .nonzero()
        .into_iter()
        .map(|((n1, n2, b), amp)| {
            amp.square() * BigRational::from_integer(BigInt::from(alpha(n1, n2) * micro_diag[b]))
        })
        .sum()
}

/// Polarization rotation of the macro pair:
/// `a_phi^dag = cos D a_0^dag + sin D a_perp^dag`,
/// `a_perp^dag = -sin D a_0^dag + cos D a_perp^dag`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeRotation {
    pub angle: f64,
}

impl ModeRotation {
    pub fn new(angle: f64) -> Self {
        ModeRotation { angle }
    }

    /// `<p, q| U |n1, n2>` with `p + q = n1 + n2`.
    pub fn element(&self, out: (u64, u64), input: (u64, u64)) -> f64 {
        let (p, q) = out;
        let (n1, n2) = input;
        if p + q != n1 + n2 {
            return 0.0;
        }
        let t = CombinatoricsTable::global();
        let (s, c) = self.angle.sin_cos();
        let mut acc = 0.0;
        for j in p.saturating_sub(n2)..=p.min(n1) {
            let l = p - j;
            let term = t
                .binomial(n1, j)
                .expect("j <= n1")
                .to_f64()
                .unwrap_or(f64::INFINITY)
                * t.binomial(n2, l)
                    .expect("l <= n2")
                    .to_f64()
                    .unwrap_or(f64::INFINITY)
                * c.powi(j as i32)
                * s.powi((n1 - j) as i32)
                * (-s).powi(l as i32)
                * c.powi((n2 - l) as i32);
            acc += term;
        }
        let ln_scale =
            0.5 * (t.ln_factorial(p) + t.ln_factorial(q) - t.ln_factorial(n1) - t.ln_factorial(n2));
        acc * ln_scale.exp()
    }

    /// Dense matrix on the `(cutoff+1)^2` macro space. Blocks of total
    /// number `<= cutoff` are complete; higher totals are clipped by the
    /// cutoff and left as identity.
    pub fn matrix(&self, cutoff: u64) -> DMatrix<f64> {
        let c = cutoff + 1;
        let dim = (c * c) as usize;
        let mut m = DMatrix::zeros(dim, dim);
        for n1 in 0..c {
            for n2 in 0..c {
                let col = (n1 * c + n2) as usize;
                let total = n1 + n2;
                if total > cutoff {
                    m[(col, col)] = 1.0;
                    continue;
                }
                for p in 0..=total {
                    let row = (p * c + (total - p)) as usize;
                    m[(row, col)] = self.element((p, total - p), (n1, n2));
                }
            }
        }
        m
    }
}

/// Threshold observable `O(phi) = U(phi) D U(phi)^T` on the macro space.
pub fn rotated_threshold(n_sigma: u64, phi: f64, cutoff: u64) -> DMatrix<f64> {
    let c = cutoff + 1;
    let u = ModeRotation::new(phi).matrix(cutoff);
    let d = DMatrix::from_fn((c * c) as usize, (c * c) as usize, |r, col| {
        if r != col {
            return 0.0;
        }
        let (n1, n2) = (r as u64 / c, r as u64 % c);
        f64::from(threshold_outcome(n_sigma, n1, n2))
    });
    &u * d * u.transpose()
}

/// `<psi^N| O(phi_a) (x) O_b(phi_b) |psi^N>` from dense matrices.
pub fn oracle_correlator(state: &DenseState, n_sigma: u64, phi_a: f64, phi_b: f64) -> f64 {
    let alice = rotated_threshold(n_sigma, phi_a, state.cutoff);
    correlator_with(state, &alice, phi_b)
}

fn correlator_with(state: &DenseState, alice: &DMatrix<f64>, phi_b: f64) -> f64 {
    let slices = [state.micro_slice(MICRO_PHI), state.micro_slice(MICRO_PERP)];
    let bob = micro_observable(phi_b);
    let mut acc = 0.0;
    for b in 0..2 {
        for bp in 0..2 {
            if bob[b][bp] != 0.0 {
                acc += bob[b][bp] * slices[b].dot(&(alice * &slices[bp]));
            }
        }
    }
    acc
}

/// Dense CHSH combination on the cut `N`.
pub fn oracle_chsh(n: u64, n_sigma: u64, settings: &AngleSettings) -> Result<f64> {
    if n > 6 {
        return Err(Error::domain("N", n, "[0, 6]"));
    }
    let state = dense_singlet_cut(n)?;
    let a = rotated_threshold(n_sigma, settings.phi_a, state.cutoff);
    let ap = rotated_threshold(n_sigma, settings.phi_a_prime, state.cutoff);
    Ok(oracle_chsh_from(
        &state,
        &a,
        &ap,
        settings.phi_b,
        settings.phi_b_prime,
    ))
}

/// CHSH combination from prebuilt Alice observables, for sweeps that reuse
/// them across many Bob settings.
pub fn oracle_chsh_from(
    state: &DenseState,
    alice: &DMatrix<f64>,
    alice_prime: &DMatrix<f64>,
    phi_b: f64,
    phi_b_prime: f64,
) -> f64 {
    correlator_with(state, alice, phi_b)
        + correlator_with(state, alice, phi_b_prime)
        + correlator_with(state, alice_prime, phi_b)
        - correlator_with(state, alice_prime, phi_b_prime)
}

/// `<n - j, j| U_BS |n, 0>` for a beamsplitter with transmissivity `t^2`,
/// exactly: `sqrt(C(n, j) t2^(n-j) r2^j)`.
pub fn beamsplitter_vacuum_element(t2: &Transmissivity, n: u64, reflected: u64) -> SqrtRational {
    if reflected > n {
        return SqrtRational::zero();
    }
    let t = CombinatoricsTable::global();
    let c = BigRational::from_integer(BigInt::from(t.binomial(n, reflected).expect("j <= n")));
    let keep = num_traits::pow(t2.exact().clone(), (n - reflected) as usize);
    let lose = num_traits::pow(t2.reflectivity(), reflected as usize);
    SqrtRational::from_square(c * keep * lose)
}

/// Outcome of conditioning the macro arm on `M` reflected photons.
#[derive(Debug, Clone, PartialEq)]
pub struct LossOracle {
    /// Probability of reflecting exactly `M` photons.
    pub probability: BigRational,
    /// Threshold expectation on the transmitted macro light, conditioned
    /// on `M` and on the micro photon in `1_phi`. `None` when that event
    /// has probability zero.
    pub v_bar: Option<BigRational>,
}

/// Applies a beamsplitter to each macro mode with a vacuum ancilla,
/// projects the ancillas on total count `M`, traces them out and scores
/// the transmitted light with the threshold observable.
pub fn oracle_loss(n: u64, m: u64, n_sigma: u64, t2: &Transmissivity) -> Result<LossOracle> {
    if n > 5 {
        return Err(Error::domain("N", n, "[0, 5]"));
    }
    if m > 2 * n + 1 {
        return Err(Error::domain("M", m, format!("[0, {}]", 2 * n + 1)));
    }
    let state = dense_singlet_cut(n)?;
    let c = state.cutoff;

    // Output amplitudes over (transmitted phi, reflected phi, transmitted
    // perp, reflected perp, micro), gathered from the inputs.
    let mut out: BTreeMap<(u64, u64, u64, u64, usize), SqrtRational> = BTreeMap::new();
    for a1 in 0..=c {
        for r1 in 0..=c - a1 {
            for a2 in 0..=c {
                for r2 in 0..=c - a2 {
                    for b in 0..2 {
                        let mut acc: Option<SqrtRational> = None;
                        // Photon number per polarization is conserved, so only
                        // the input |a1 + r1, a2 + r2> feeds this output.
                        for (n1, n2) in [(a1 + r1, a2 + r2)] {
                            let amp = state.get(n1, n2, b);
                            if amp.is_zero() {
                                continue;
                            }
                            let u = &beamsplitter_vacuum_element(t2, n1, r1)
                                * &beamsplitter_vacuum_element(t2, n2, r2);
                            let term = &u * amp;
                            assert!(acc.is_none(), "a single input feeds each output");
                            acc = Some(term);
                        }
                        if let Some(a) = acc.filter(|a| !a.is_zero()) {
                            out.insert((a1, r1, a2, r2, b), a);
                        }
                    }
                }
            }
        }
    }

    let mut probability = BigRational::zero();
    let mut micro_phi = BigRational::zero();
    let mut score = BigRational::zero();
    for (&(a1, r1, a2, r2, b), amp) in &out {
        if r1 + r2 != m {
            continue;
        }
        probability += amp.square();
        if b == MICRO_PHI {
            micro_phi += amp.square();
            score += amp.square()
                * BigRational::from_integer(BigInt::from(threshold_outcome(n_sigma, a1, a2)));
        }
    }
    let v_bar = (!micro_phi.is_zero()).then(|| score / micro_phi);
    Ok(LossOracle { probability, v_bar })
}
