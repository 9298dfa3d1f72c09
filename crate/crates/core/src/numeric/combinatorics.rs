use std::f64::consts::PI;
use std::sync::{OnceLock, RwLock};

use num_bigint::BigUint;
use num_traits::One;

use super::LogValue;
use crate::error::{Error, Result};

/// `ln n!` is tabulated by cumulative summation below this bound and taken
/// from the Stirling series (truncated after the `n^-7` term) at or above
/// it. At n = 256 the first omitted term is below 1e-24.
const LOG_TABLE_LEN: usize = 256;

/// Factorial tables. Log-factorials are pre-sized; exact factorials are
/// memoized and grow on demand behind a lock, so a shared table can be used
/// from several threads.
#[derive(Debug)]
pub struct CombinatoricsTable {
    log_factorials: Vec<f64>,
    factorials: RwLock<Vec<BigUint>>,
}

impl Default for CombinatoricsTable {
    fn default() -> Self {
        Self::new()
    }
}

impl CombinatoricsTable {
    pub fn new() -> Self {
        let mut log_factorials = Vec::with_capacity(LOG_TABLE_LEN);
        let mut acc = 0.0f64;
        log_factorials.push(0.0);
        for i in 1..LOG_TABLE_LEN {
            acc += (i as f64).ln();
            log_factorials.push(acc);
        }
        CombinatoricsTable {
            log_factorials,
            factorials: RwLock::new(vec![BigUint::one()]),
        }
    }

    /// Process-wide shared table.
    pub fn global() -> &'static CombinatoricsTable {
        static TABLE: OnceLock<CombinatoricsTable> = OnceLock::new();
        TABLE.get_or_init(CombinatoricsTable::new)
    }

    /// Largest `n` whose exact factorial is currently cached.
    pub fn max_n(&self) -> u64 {
        self.factorials
            .read()
            .expect("factorial cache poisoned")
            .len() as u64
            - 1
    }

    pub fn ln_factorial(&self, n: u64) -> f64 {
        match self.log_factorials.get(n as usize) {
            Some(&v) => v,
            None => stirling_ln_factorial(n as f64),
        }
    }

    pub fn ln_binomial(&self, n: u64, k: u64) -> f64 {
        debug_assert!(k <= n);
        self.ln_factorial(n) - self.ln_factorial(k) - self.ln_factorial(n - k)
    }

    pub fn factorial(&self, n: u64) -> BigUint {
        let idx = n as usize;
        {
            let cache = self.factorials.read().expect("factorial cache poisoned");
            if let Some(f) = cache.get(idx) {
                return f.clone();
            }
        }
        let mut cache = self.factorials.write().expect("factorial cache poisoned");
        while cache.len() <= idx {
            let next = cache.last().expect("cache seeded with 0!") * BigUint::from(cache.len());
            cache.push(next);
        }
        cache[idx].clone()
    }

    pub fn binomial(&self, n: u64, k: u64) -> Result<BigUint> {
        if k > n {
            return Err(Error::domain("k", k, format!("[0, {n}]")));
        }
        let k = k.min(n - k);
        let mut acc = BigUint::one();
        for i in 0..k {
            acc *= n - i;
            acc /= i + 1;
        }
        Ok(acc)
    }
}

fn stirling_ln_factorial(n: f64) -> f64 {
    let inv = 1.0 / n;
    let inv2 = inv * inv;
    let series =
        inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0))));
    n * n.ln() - n + 0.5 * (2.0 * PI * n).ln() + series
}

/// `ln n!` as a positive log-space value.
pub fn log_factorial(n: u64) -> LogValue {
    let ln = CombinatoricsTable::global().ln_factorial(n);
    // ln(0!) = ln(1!) = 0 still denotes the positive value 1.
    LogValue::positive(ln)
}

/// Exact binomial coefficient `C(n, k)`.
pub fn binomial_exact(n: u64, k: u64) -> Result<BigUint> {
    CombinatoricsTable::global().binomial(n, k)
}
