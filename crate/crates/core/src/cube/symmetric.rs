//! Symmetric (Hamming-weight-level) functions, evaluated exactly at large
//! `n` through the level transition kernel.

use rayon::prelude::*;

use crate::entropy::{h, KahanSum};
use crate::error::{check_dim, domain, Error, Result};

use super::function::{BooleanFunction, ValueConvention};

/// Largest dimension accepted by the level-kernel routines.
pub const MAX_SYMMETRIC_DIM: usize = 2000;

/// Value of `f` on each Hamming-weight level (weight = number of `-1`
/// coordinates). A fractional entry means that fraction of the level is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricProfile {
    n: usize,
    levels: Vec<f64>,
}

impl SymmetricProfile {
    pub fn new(levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Invalid("profile needs n + 1 levels".into()));
        }
        let n = levels.len() - 1;
        check_dim(n, MAX_SYMMETRIC_DIM)?;
        if let Some(&bad) = levels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(domain("level value", bad, "[0, 1]"));
        }
        Ok(Self { n, levels })
    }

    /// Profile of a 0/1 function that is constant on each level, or an error
    /// if it is not symmetric.
    pub fn of_function(f: &BooleanFunction) -> Result<Self> {
        let n = f.n();
        let mut levels = vec![None; n + 1];
        for j in 0..f.len() {
            let w = j.count_ones() as usize;
            let v = f.bit(j);
            match levels[w] {
                None => levels[w] = Some(v),
                Some(prev) if prev != v => {
                    return Err(Error::Invalid(format!(
                        "function is not constant on level {w}"
                    )))
                }
                _ => {}
            }
        }
        Self::new(
            levels
                .into_iter()
                .map(|v| v.unwrap_or(false) as u8 as f64)
                .collect(),
        )
    }

    /// Hamming ball around the all-`+1` point with mean exactly `mu`: full
    /// levels `0..r` and a fractional boundary level.
    pub fn ball_with_mean(n: usize, mu: f64) -> Result<Self> {
        check_dim(n, MAX_SYMMETRIC_DIM)?;
        if !(0.0..=1.0).contains(&mu) {
            return Err(domain("mu", mu, "[0, 1]"));
        }
        let table = LogBinomials::new(n);
        let mut levels = vec![0.0; n + 1];
        let mut remaining = mu;
        for (i, level) in levels.iter_mut().enumerate() {
            let mass = table.level_mass(i);
            if remaining >= mass {
                *level = 1.0;
                remaining -= mass;
            } else {
                *level = (remaining / mass).clamp(0.0, 1.0);
                break;
            }
        }
        Self::new(levels)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn mean(&self) -> f64 {
        let table = LogBinomials::new(self.n);
        let mut acc = KahanSum::new();
        for (i, v) in self.levels.iter().enumerate() {
            acc.add(v * table.level_mass(i));
        }
        acc.value()
    }

    /// Number of full levels `0..r` before the first non-one level.
    pub fn full_radius(&self) -> usize {
        self.levels.iter().take_while(|&&v| v == 1.0).count()
    }
}

/// `ln C(n, i)` for a fixed `n`, from a table of `ln k!`.
pub(crate) struct LogBinomials {
    n: usize,
    ln_fact: Vec<f64>,
}

impl LogBinomials {
    pub(crate) fn new(n: usize) -> Self {
        let mut ln_fact = Vec::with_capacity(n + 1);
        let mut acc = KahanSum::new();
        ln_fact.push(0.0);
        for k in 1..=n {
            acc.add((k as f64).ln());
            ln_fact.push(acc.value());
        }
        Self { n, ln_fact }
    }

    pub(crate) fn ln_choose(&self, m: usize, k: usize) -> f64 {
        debug_assert!(m <= self.n && k <= m);
        self.ln_fact[m] - self.ln_fact[k] - self.ln_fact[m - k]
    }

    /// `2^{-n} C(n, i)`.
    pub(crate) fn level_mass(&self, i: usize) -> f64 {
        (self.ln_choose(self.n, i) - self.n as f64 * std::f64::consts::LN_2).exp()
    }

    /// Binomial(m, p) probability mass function.
    pub(crate) fn binomial_pmf(&self, m: usize, p: f64) -> Vec<f64> {
        if p <= 0.0 || p >= 1.0 {
            let mut out = vec![0.0; m + 1];
            out[if p <= 0.0 { 0 } else { m }] = 1.0;
            return out;
        }
        let (lp, lq) = (p.ln(), (1.0 - p).ln());
        (0..=m)
            .map(|a| (self.ln_choose(m, a) + a as f64 * lp + (m - a) as f64 * lq).exp())
            .collect()
    }
}

/// `Pr[|y| = j | |x| = i]` for every `j`: `|y| = i - A + B` with
/// `A ~ Bin(i, alpha)` and `B ~ Bin(n - i, alpha)`.
fn level_transition_row(table: &LogBinomials, n: usize, i: usize, alpha: f64) -> Vec<f64> {
    let lost = table.binomial_pmf(i, alpha);
    let gained = table.binomial_pmf(n - i, alpha);
    let nonzero = |v: &[f64]| {
        let lo = v.iter().position(|&x| x > 0.0).unwrap_or(0);
        let hi = v.iter().rposition(|&x| x > 0.0).unwrap_or(0);
        (lo, hi)
    };
    let (alo, ahi) = nonzero(&lost);
    let (blo, bhi) = nonzero(&gained);
    let mut row = vec![0.0; n + 1];
    for (a, &pa) in lost.iter().enumerate().take(ahi + 1).skip(alo) {
        let base = i - a;
        for b in blo..=bhi {
            row[base + b] += pa * gained[b];
        }
    }
    row
}

/// Exact `I(f(x); y)` for a symmetric `f`, with
/// `Pr[f(x) = 1 | |y| = j] = sum_i K_{ji} levels[i]`.
pub fn symmetric_mi(profile: &SymmetricProfile, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(domain("alpha", alpha, "[0, 1]"));
    }
    let n = profile.n;
    let table = LogBinomials::new(n);
    let ln_c: Vec<f64> = (0..=n).map(|i| table.ln_choose(n, i)).collect();

    // Contributions per source level, summed afterwards in level order so the
    // result does not depend on thread scheduling.
    let contributions: Vec<Vec<f64>> = profile
        .levels
        .par_iter()
        .enumerate()
        .filter(|(_, &v)| v > 0.0)
        .map(|(i, &v)| {
            let row = level_transition_row(&table, n, i, alpha);
            // Pr[|x| = i | |y| = j] = C(n, i) K_{ij} / C(n, j)
            row.iter()
                .enumerate()
                .map(|(j, k)| v * k * (ln_c[i] - ln_c[j]).exp())
                .collect()
        })
        .collect();
    let mut posterior = vec![KahanSum::new(); n + 1];
    for c in &contributions {
        for (acc, x) in posterior.iter_mut().zip(c) {
            acc.add(*x);
        }
    }
    let mut cond = KahanSum::new();
    for (j, acc) in posterior.iter().enumerate() {
        cond.add(table.level_mass(j) * h(acc.value().clamp(0.0, 1.0)));
    }
    Ok((h(profile.mean()) - cond.value()).max(0.0))
}

/// `W^1` of the 0/1 indicator of the full Hamming ball of radius `r`:
/// `n (2^{-n} C(n - 1, r))^2`.
pub fn hamming_ball_w1_exact(n: usize, r: usize) -> Result<f64> {
    if !(1 <= r && r < n && n <= MAX_SYMMETRIC_DIM) {
        return Err(Error::Range(format!(
            "need 1 <= r < n <= {MAX_SYMMETRIC_DIM}, got n = {n}, r = {r}"
        )));
    }
    let table = LogBinomials::new(n);
    let coeff = (table.ln_choose(n - 1, r) - n as f64 * std::f64::consts::LN_2).exp();
    Ok(n as f64 * coeff * coeff)
}

/// `W^1` of a symmetric profile: each singleton coefficient equals
/// `2^{-n} sum_i levels[i] (C(n-1, i) - C(n-1, i-1))`.
pub fn symmetric_w1(profile: &SymmetricProfile) -> f64 {
    let n = profile.n;
    if n == 0 {
        return 0.0;
    }
    let table = LogBinomials::new(n);
    let shift = n as f64 * std::f64::consts::LN_2;
    let mut acc = KahanSum::new();
    for (i, &v) in profile.levels.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        // points at weight i with x_1 = +1 minus those with x_1 = -1
        let plus = if i < n {
            (table.ln_choose(n - 1, i) - shift).exp()
        } else {
            0.0
        };
        let minus = if i >= 1 {
            (table.ln_choose(n - 1, i - 1) - shift).exp()
        } else {
            0.0
        };
        acc.add(v * (plus - minus));
    }
    let c = acc.value();
    n as f64 * c * c
}

/// Materializes a profile with values in `{0, 1}` as a truth table.
pub fn profile_to_function(profile: &SymmetricProfile) -> Result<BooleanFunction> {
    if profile.levels.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::Invalid("profile has fractional levels".into()));
    }
    BooleanFunction::from_fn(profile.n, ValueConvention::ZeroOne, |j| {
        profile.levels[j.count_ones() as usize] == 1.0
    })
}
