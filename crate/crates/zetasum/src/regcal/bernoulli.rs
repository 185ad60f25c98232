//! Bernoulli numbers and periodic Bernoulli polynomials.

use crate::error::{Error, Result};

const MAX_INDEX: u32 = 64;

/// The n-th Bernoulli number B_n, with the convention B_1 = -1/2.
///
/// Values are generated by the defining recurrence
/// `sum_{k=0}^{n} C(n+1, k) B_k = 0` and cached on first use.
pub fn bernoulli_number(n: u32) -> Result<f64> {
    if n > MAX_INDEX {
        return Err(Error::BernoulliOutOfRange(n));
    }
    Ok(table()[n as usize])
}

/// Periodic Bernoulli polynomial B_n(x - floor(x)).
pub fn bernoulli_periodic(n: u32, x: f64) -> Result<f64> {
    if n > MAX_INDEX {
        return Err(Error::BernoulliOutOfRange(n));
    }
    let t = x - x.floor();
    let b = table();
    // B_n(t) = sum_k C(n,k) B_k t^(n-k), evaluated by Horner in t.
    let n = n as usize;
    let mut acc = 0.0;
    for k in 0..=n {
        acc = acc * t + binomial(n, k) * b[k];
    }
    Ok(acc)
}

fn table() -> &'static [f64] {
    use std::sync::OnceLock;
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = MAX_INDEX as usize;
        let mut b = vec![0.0_f64; n + 1];
        b[0] = 1.0;
        for m in 1..=n {
            if m > 1 && m % 2 == 1 {
                // Odd Bernoulli numbers beyond B_1 vanish identically.
                b[m] = 0.0;
                continue;
            }
            // B_m = -1/(m+1) * sum_{k=0}^{m-1} C(m+1, k) B_k
            let mut s = 0.0;
            for k in 0..m {
                s += binomial(m + 1, k) * b[k];
            }
            b[m] = -s / (m as f64 + 1.0);
        }
        b
    })
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c = 1.0_f64;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}
