//! Cross-module fixtures: every analytic formula is checked against the
//! dense oracle on cuts `N <= 5`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use clap::ValueEnum;
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use macrobell::bell::{
    chsh_value, distinguishability, distinguishability_exact, maximizing_threshold,
    primitive_regions, regions, term_f_exact, v_max_closed_exact, AngleSettings, RegionPair,
};
use macrobell::loss::{
    lossy_distinguishability_exact, reflected_count_distribution_exact, Transmissivity,
};
use macrobell::numeric::NumericMode;
use macrobell::oracle::{
    dense_singlet_cut, dense_singlet_cut_with_cutoff, oracle_chsh_from, oracle_cross_term,
    oracle_expectation_exact, oracle_loss, rotated_threshold, DenseState, DiagonalObservable,
};

/// Seed for the random diagonal observables of the cross-term group.
pub const CROSS_TERM_SEED: u64 = 0x5eed_0b5e_7ab1_e000;

const MAX_N: u64 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Group {
    Regions,
    Distinguishability,
    Vmax,
    CrossTerms,
    Chsh,
    Loss,
}

impl Group {
    pub const ALL: [Group; 6] = [
        Group::Regions,
        Group::Distinguishability,
        Group::Vmax,
        Group::CrossTerms,
        Group::Chsh,
        Group::Loss,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Group::Regions => "regions",
            Group::Distinguishability => "distinguishability",
            Group::Vmax => "vmax",
            Group::CrossTerms => "cross-terms",
            Group::Chsh => "chsh",
            Group::Loss => "loss",
        }
    }
}

/// The functions under test. Replacing `regions` with a broken version is
/// how the mutation check exercises the verifier.
#[derive(Clone, Copy)]
pub struct Subject {
    pub regions: fn(u64, u64) -> RegionPair,
}

impl Default for Subject {
    fn default() -> Self {
        Subject { regions }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupReport {
    pub group: Group,
    pub checks: usize,
    pub failure: Option<String>,
}

impl GroupReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }

    pub fn line(&self) -> String {
        match &self.failure {
            None => format!("PASS {} ({} checks)", self.group.name(), self.checks),
            Some(f) => format!("FAIL {}: {f}", self.group.name()),
        }
    }
}

struct Checker {
    checks: usize,
    failure: Option<String>,
}

impl Checker {
    fn new() -> Self {
        Checker {
            checks: 0,
            failure: None,
        }
    }

    /// Records one check; keeps only the first failure.
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) -> bool {
        self.checks += 1;
        if !ok && self.failure.is_none() {
            self.failure = Some(what());
        }
        ok
    }

    fn failed(&self) -> bool {
        self.failure.is_some()
    }

    fn report(self, group: Group) -> GroupReport {
        GroupReport {
            group,
            checks: self.checks,
            failure: self.failure,
        }
    }
}

pub fn run_group(group: Group, subject: &Subject) -> GroupReport {
    let mut c = Checker::new();
    match group {
        Group::Regions => check_regions(&mut c, subject),
        Group::Distinguishability => check_distinguishability(&mut c),
        Group::Vmax => check_vmax(&mut c),
        Group::CrossTerms => check_cross_terms(&mut c),
        Group::Chsh => check_chsh(&mut c),
        Group::Loss => check_loss(&mut c),
    }
    c.report(group)
}

pub fn run(groups: &[Group], subject: &Subject) -> Vec<GroupReport> {
    groups.iter().map(|&g| run_group(g, subject)).collect()
}

fn oracle_v(state: &DenseState, n_sigma: u64) -> BigRational {
    oracle_expectation_exact(
        state,
        |a, b| {
            macrobell::bell::ThresholdObservable::new(n_sigma, 0.0)
                .eigenvalue(a, b)
                .into()
        },
        [1, -1],
    )
}

fn check_regions(c: &mut Checker, subject: &Subject) {
    for n in 0..=MAX_N {
        let state = dense_singlet_cut(n).expect("cut fits its default cutoff");
        for s in 0..=2 * n + 1 {
            let r = (subject.regions)(n, s);
            let (plus, minus) = primitive_regions(n, s);
            let same = r.plus_indices() == plus && r.minus_indices() == minus;
            let ok = c.check(same, || {
                format!(
                    "N={n} N_sigma={s}: S+={:?} S-={:?}, expected S+={plus:?} S-={minus:?}",
                    r.plus_indices(),
                    r.minus_indices()
                )
            });
            if !ok {
                return;
            }
            let f = |k: u64| term_f_exact(n, k).expect("k <= N");
            let sum: BigRational = r.plus_indices().into_iter().map(f).sum::<BigRational>()
                - r.minus_indices().into_iter().map(f).sum::<BigRational>();
            let dense = oracle_v(&state, s);
            c.check(sum == dense, || {
                format!("N={n} N_sigma={s}: region sum {sum}, dense oracle {dense}")
            });
            if c.failed() {
                return;
            }
        }
    }
}

fn check_distinguishability(c: &mut Checker) {
    for n in 0..=MAX_N {
        let state = dense_singlet_cut(n).expect("cut fits its default cutoff");
        for s in 0..=2 * n + 2 {
            let exact = distinguishability_exact(n, s);
            let dense = oracle_v(&state, s);
            c.check(exact == dense, || {
                format!("N={n} N_sigma={s}: telescoped {exact}, dense oracle {dense}")
            });
            let log = distinguishability(n, s, NumericMode::LogSpace).to_f64();
            let want = macrobell::numeric::rational_to_f64(&dense);
            c.check((log - want).abs() < 1e-12, || {
                format!("N={n} N_sigma={s}: log-space {log}, dense oracle {want}")
            });
            if c.failed() {
                return;
            }
        }
    }
}

fn check_vmax(c: &mut Checker) {
    for n in 0..=MAX_N {
        let state = dense_singlet_cut(n).expect("cut fits its default cutoff");
        let closed = v_max_closed_exact(n);
        let best = (0..=2 * n + 1)
            .map(|s| oracle_v(&state, s))
            .max()
            .expect("nonempty sweep");
        c.check(closed == best, || {
            format!("N={n}: closed form {closed}, dense sweep maximum {best}")
        });
        let at = distinguishability_exact(n, maximizing_threshold(n));
        c.check(closed == at, || {
            format!(
                "N={n}: closed form {closed}, value {at} at N_sigma={}",
                maximizing_threshold(n)
            )
        });
        if c.failed() {
            return;
        }
    }
}

fn check_cross_terms(c: &mut Checker) {
    let cutoff = 10;
    let cuts: Vec<_> = (0..=4)
        .map(|n| dense_singlet_cut_with_cutoff(n, cutoff).expect("cutoff 10 holds N <= 4"))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(CROSS_TERM_SEED);
    for trial in 0..50 {
        let alpha: BTreeMap<_, _> = (0..=cutoff)
            .flat_map(|a| (0..=cutoff).map(move |b| (a, b)))
            .map(|k| (k, rng.random_range(-1.0..1.0)))
            .collect();
        let off: f64 = rng.random_range(-1.0..1.0);
        let micro = [
            [rng.random_range(-1.0..1.0), off],
            [off, rng.random_range(-1.0..1.0)],
        ];
        let obs = DiagonalObservable::new(alpha, micro).expect("symmetric micro part");
        for (n, left) in cuts.iter().enumerate() {
            for (m, right) in cuts.iter().enumerate() {
                if n == m {
                    continue;
                }
                let v = oracle_cross_term(left, &obs, right).expect("shared cutoff");
                if !c.check(v == 0.0, || format!("trial {trial}, N={n}, M={m}: {v}")) {
                    return;
                }
            }
        }
    }
}

/// Angles on the 5x5 grid of the CHSH group.
pub fn angle_grid() -> [f64; 5] {
    [-PI / 5.0, 0.0, PI / 8.0, 0.3, PI / 4.0]
}

fn check_chsh(c: &mut Checker) {
    for n in 0..=4 {
        let state = dense_singlet_cut(n).expect("cut fits its default cutoff");
        for s in 0..=2 * n + 1 {
            for pa in angle_grid() {
                let alice = rotated_threshold(s, pa, state.cutoff());
                let alice_prime = rotated_threshold(s, pa + PI / 4.0, state.cutoff());
                for pb in angle_grid() {
                    let settings = AngleSettings {
                        phi_a: pa,
                        phi_a_prime: pa + PI / 4.0,
                        phi_b: pb,
                        phi_b_prime: pb - PI / 4.0,
                    };
                    let dense = oracle_chsh_from(
                        &state,
                        &alice,
                        &alice_prime,
                        settings.phi_b,
                        settings.phi_b_prime,
                    );
                    let analytic = chsh_value(n, s, &settings);
                    c.check((dense - analytic).abs() < 1e-12, || {
                        format!(
                            "N={n} N_sigma={s} phi_a={pa} phi_b={pb}: dense {dense}, analytic {analytic}"
                        )
                    });
                    if c.failed() {
                        return;
                    }
                }
            }
        }
    }
}

fn check_loss(c: &mut Checker) {
    let t2 = Transmissivity::balanced();
    for n in 0..=MAX_N {
        let dist = reflected_count_distribution_exact(n, &t2);
        let total: BigRational = dist.iter().cloned().sum();
        c.check(total == BigRational::from_integer(1.into()), || {
            format!("N={n}: reflected-count distribution sums to {total}")
        });
        for m in 0..=3u64.min(2 * n + 1) {
            for s in 0..=2 * n + 1 - m {
                let o = oracle_loss(n, m, s, &t2).expect("N <= 5, M <= 2N+1");
                c.check(o.probability == dist[m as usize], || {
                    format!(
                        "N={n} M={m}: dense probability {}, binomial {}",
                        o.probability, dist[m as usize]
                    )
                });
                let pattern = lossy_distinguishability_exact(n, m, s).expect("M <= 2N+1");
                let dense = o.v_bar.unwrap_or_else(BigRational::zero);
                c.check(pattern == dense, || {
                    format!("N={n} M={m} N_sigma={s}: pattern sum {pattern}, dense oracle {dense}")
                });
                if c.failed() {
                    return;
                }
            }
        }
    }
}
