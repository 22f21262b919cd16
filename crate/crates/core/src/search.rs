//! Exhaustive and structured searches over small Boolean functions.
//!
//! Truth tables for `n <= 5` are packed into a `u64` (bit `j` is `f(j)`, see
//! [`BooleanFunction::from_index`]). Scans run in two deterministic passes:
//! the global maximum first, then every table within [`TIE_TOLERANCE`] of it
//! in ascending index order.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cube::mi::flip_weight;
use crate::cube::{and_mi_exact, make_family, symmetric_mi, symmetric_w1, FamilyKind};
use crate::cube::{BooleanFunction, SymmetricProfile, ValueConvention};
use crate::entropy::h;
use crate::error::{check_dim, domain, Error, Result};

pub const ARGMAX_CAP: usize = 64;
pub const TIE_TOLERANCE: f64 = 1e-12;
const CHUNK: u64 = 1 << 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Constraint {
    None,
    OnesCount { m: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub n: usize,
    pub alpha: f64,
    pub constraint: Constraint,
    pub max_mi: f64,
    /// Table indices of maximizers, ascending, at most [`ARGMAX_CAP`].
    pub argmax: Vec<u64>,
    /// Number of maximizers before the cap.
    pub argmax_count: u64,
    /// `1 - h(alpha)`.
    pub bound: f64,
    pub bound_satisfied: bool,
    pub functions_scanned: u64,
    /// Unconstrained scans at `0 < alpha < 1/2`: the maximizers are exactly
    /// the `2n` functions `x_i` and `-x_i`.
    pub argmax_is_dictators: Option<bool>,
    /// Fixed-mean scans: the lex function with `m` ones is a maximizer.
    pub lex_attains_max: Option<bool>,
}

impl SearchReport {
    pub fn pass(&self) -> bool {
        self.bound_satisfied && self.argmax_is_dictators.unwrap_or(true)
    }

    pub fn argmax_functions(&self) -> Vec<BooleanFunction> {
        self.argmax
            .iter()
            .map(|&t| {
                BooleanFunction::from_index(self.n, ValueConvention::ZeroOne, t)
                    .expect("scanned tables are valid")
            })
            .collect()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=0.5).contains(&alpha) {
        Ok(())
    } else {
        Err(domain("alpha", alpha, "[0, 1/2]"))
    }
}

/// Binary symmetric channel on `{±1}^n` for `n <= 5`, with the transition
/// matrix held densely.
#[derive(Debug, Clone)]
pub struct SmallChannel {
    n: usize,
    len: usize,
    kernel: Vec<f64>,
}

impl SmallChannel {
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        check_dim(n, 5)?;
        check_alpha(alpha)?;
        let len = 1usize << n;
        let weights: Vec<f64> = (0..=n).map(|d| flip_weight(alpha, n, d)).collect();
        let kernel = (0..len * len)
            .map(|k| weights[((k / len) ^ (k % len)).count_ones() as usize])
            .collect();
        Ok(Self { n, len, kernel })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `I(f(x); y)` for the packed table.
    pub fn mi(&self, table: u64) -> f64 {
        let mean = table.count_ones() as f64 / self.len as f64;
        let mut cond = 0.0;
        for y in 0..self.len {
            let row = &self.kernel[y * self.len..(y + 1) * self.len];
            let mut p = 0.0;
            let mut t = table;
            while t != 0 {
                p += row[t.trailing_zeros() as usize];
                t &= t - 1;
            }
            cond += h(p.clamp(0.0, 1.0));
        }
        (h(mean) - cond / self.len as f64).max(0.0)
    }
}

fn table_count(n: usize) -> u64 {
    1u64 << (1u32 << n)
}

#[derive(Debug, Clone, PartialEq)]
struct ScanOutcome {
    max_mi: f64,
    argmax: Vec<u64>,
    argmax_count: u64,
    scanned: u64,
}

fn chunk_bounds(start: u64, end: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    let mut lo = start;
    while lo < end {
        let hi = (lo + CHUNK).min(end);
        out.push((lo, hi));
        lo = hi;
    }
    out
}

fn scan<K>(channel: &SmallChannel, start: u64, end: u64, keep: K) -> ScanOutcome
where
    K: Fn(u64) -> bool + Sync,
{
    let chunks = chunk_bounds(start, end);
    let (max_mi, scanned) = chunks
        .par_iter()
        .map(|&(lo, hi)| {
            let mut best = f64::NEG_INFINITY;
            let mut count = 0u64;
            for t in (lo..hi).filter(|&t| keep(t)) {
                best = best.max(channel.mi(t));
                count += 1;
            }
            (best, count)
        })
        .reduce(|| (f64::NEG_INFINITY, 0), |a, b| (a.0.max(b.0), a.1 + b.1));
    let per_chunk: Vec<(Vec<u64>, u64)> = chunks
        .par_iter()
        .map(|&(lo, hi)| {
            let mut ties = Vec::new();
            let mut count = 0u64;
            for t in (lo..hi).filter(|&t| keep(t)) {
                if channel.mi(t) >= max_mi - TIE_TOLERANCE {
                    count += 1;
                    if ties.len() < ARGMAX_CAP {
                        ties.push(t);
                    }
                }
            }
            (ties, count)
        })
        .collect();
    let mut argmax = Vec::new();
    let mut argmax_count = 0;
    for (ties, count) in per_chunk {
        argmax_count += count;
        argmax.extend(ties);
    }
    argmax.truncate(ARGMAX_CAP);
    ScanOutcome {
        max_mi,
        argmax,
        argmax_count,
        scanned,
    }
}

/// Tables of the `2n` functions `x_i` and `-x_i`, ascending.
pub fn dictator_tables(n: usize) -> Vec<u64> {
    let full = if n == 6 {
        u64::MAX
    } else {
        (1u64 << (1 << n)) - 1
    };
    let mut out: Vec<u64> = (1..=n)
        .flat_map(|i| {
            let t = make_family(n, FamilyKind::Dictator(i))
                .expect("valid dictator")
                .table_index()
                .expect("small n");
            [t, t ^ full]
        })
        .collect();
    out.sort_unstable();
    out
}

fn report(n: usize, alpha: f64, constraint: Constraint, outcome: ScanOutcome) -> SearchReport {
    let bound = 1.0 - h(alpha);
    SearchReport {
        n,
        alpha,
        constraint,
        max_mi: outcome.max_mi,
        argmax: outcome.argmax,
        argmax_count: outcome.argmax_count,
        bound,
        bound_satisfied: outcome.max_mi <= bound + TIE_TOLERANCE,
        functions_scanned: outcome.scanned,
        argmax_is_dictators: None,
        lex_attains_max: None,
    }
}

/// Scans every table on `n` inputs, `2 <= n <= 4`.
pub fn exhaustive_verify(n: usize, alpha: f64) -> Result<SearchReport> {
    if !(2..=4).contains(&n) {
        return Err(Error::Range(format!("n = {n} not in 2..=4")));
    }
    let channel = SmallChannel::new(n, alpha)?;
    let outcome = scan(&channel, 0, table_count(n), |_| true);
    let mut rep = report(n, alpha, Constraint::None, outcome);
    if alpha > 0.0 && alpha < 0.5 {
        let expected = dictator_tables(n);
        rep.argmax_is_dictators =
            Some(rep.argmax_count == expected.len() as u64 && rep.argmax == expected);
    }
    Ok(rep)
}

/// Scans every table on `n <= 4` inputs with exactly `m` ones.
pub fn fixed_mean_max(n: usize, m: usize, alpha: f64) -> Result<SearchReport> {
    if !(1..=4).contains(&n) {
        return Err(Error::Range(format!("n = {n} not in 1..=4")));
    }
    let len = 1usize << n;
    if m > len {
        return Err(Error::Range(format!("ones count {m} exceeds 2^{n}")));
    }
    let channel = SmallChannel::new(n, alpha)?;
    let outcome = scan(&channel, 0, table_count(n), |t| {
        t.count_ones() as usize == m
    });
    let lex = make_family(n, FamilyKind::Lex(m))?
        .table_index()
        .expect("small n");
    let lex_mi = channel.mi(lex);
    let mut rep = report(n, alpha, Constraint::OnesCount { m }, outcome);
    rep.lex_attains_max = Some(lex_mi >= rep.max_mi - TIE_TOLERANCE);
    Ok(rep)
}

/// `(table index, MI)` for every table on `n <= 3` inputs.
pub fn mi_table(n: usize, alpha: f64) -> Result<Vec<(u64, f64)>> {
    if !(1..=3).contains(&n) {
        return Err(Error::Range(format!("n = {n} not in 1..=3")));
    }
    let channel = SmallChannel::new(n, alpha)?;
    Ok((0..table_count(n)).map(|t| (t, channel.mi(t))).collect())
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for rest in permutations(n - 1) {
        for pos in 0..=rest.len() {
            let mut p = rest.clone();
            p.insert(pos, n - 1);
            out.push(p);
        }
    }
    out
}

/// Sort key for lexicographic order of the table read from index 0.
fn lex_key(table: u64, len: usize) -> u64 {
    table.reverse_bits() >> (64 - len)
}

/// Least table (read from index 0) in the orbit of `f` under coordinate
/// permutations, input negations and output complement. Requires `n <= 5`.
pub fn canonical_form(f: &BooleanFunction) -> Result<BooleanFunction> {
    let n = f.n();
    check_dim(n, 5)?;
    let len = 1usize << n;
    let full = if len == 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    };
    let table = f.table_index().expect("n <= 5");
    let mut best = u64::MAX;
    let mut best_table = table;
    for perm in permutations(n) {
        // bit b of the source index comes from bit perm[b] of the image index
        let moved: Vec<usize> = (0..len)
            .map(|j| (0..n).fold(0, |acc, b| acc | ((j >> perm[b]) & 1) << b))
            .collect();
        for mask in 0..len {
            let mut g = 0u64;
            for (j, &src) in moved.iter().enumerate() {
                g |= (table >> (src ^ mask) & 1) << j;
            }
            for cand in [g, g ^ full] {
                let key = lex_key(cand, len);
                if key < best {
                    best = key;
                    best_table = cand;
                }
            }
        }
    }
    BooleanFunction::from_index(n, f.convention(), best_table)
}

/// Hamming ball versus `AND_k` at equal mean `2^{-k}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LexComparison {
    pub k: usize,
    pub n: usize,
    pub alpha: f64,
    pub mi_ball: f64,
    pub mi_and: f64,
    pub w1_ball: f64,
    pub w1_and: f64,
    pub ball_wins: bool,
    /// `mi_ball - mi_and`.
    pub margin: f64,
}

pub fn lex_failure_scan(k: usize, n: usize, alpha: f64) -> Result<LexComparison> {
    if !(1..=20).contains(&k) || n > 2000 || n < k {
        return Err(Error::Range(format!(
            "need 1 <= k <= 20 and k <= n <= 2000, got k = {k}, n = {n}"
        )));
    }
    check_alpha(alpha)?;
    let mu = 2f64.powi(-(k as i32));
    let ball = SymmetricProfile::ball_with_mean(n, mu)?;
    let mi_ball = symmetric_mi(&ball, alpha)?;
    let mi_and = and_mi_exact(k, alpha)?;
    Ok(LexComparison {
        k,
        n,
        alpha,
        mi_ball,
        mi_and,
        w1_ball: symmetric_w1(&ball),
        w1_and: k as f64 * mu * mu,
        ball_wins: mi_ball > mi_and,
        margin: mi_ball - mi_and,
    })
}

/// Runs [`lex_failure_scan`] over the product grid, in `(k, n, alpha)` order.
pub fn lex_failure_grid(ks: &[usize], ns: &[usize], alphas: &[f64]) -> Result<Vec<LexComparison>> {
    let configs: Vec<(usize, usize, f64)> = ks
        .iter()
        .flat_map(|&k| {
            ns.iter()
                .flat_map(move |&n| alphas.iter().map(move |&a| (k, n, a)))
        })
        .filter(|&(k, n, _)| k <= n)
        .collect();
    configs
        .par_iter()
        .map(|&(k, n, a)| lex_failure_scan(k, n, a))
        .collect()
}

/// Progress of the optional `n = 5` scan. Only tables with `f(0) = 0` are
/// evaluated since complementing the output preserves MI; `watermark` is
/// the next unscanned representative (table index `2 * watermark`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct N5Checkpoint {
    pub alpha: f64,
    pub watermark: u64,
    pub max_mi: f64,
    pub argmax: Vec<u64>,
    pub argmax_count: u64,
    pub functions_scanned: u64,
    pub complete: bool,
}

pub const N5_REPRESENTATIVES: u64 = 1 << 31;
pub const N5_BLOCK: u64 = 1 << 20;

impl N5Checkpoint {
    fn fresh(alpha: f64) -> Self {
        Self {
            alpha,
            watermark: 0,
            max_mi: f64::NEG_INFINITY,
            argmax: Vec::new(),
            argmax_count: 0,
            functions_scanned: 0,
            complete: false,
        }
    }

    fn absorb(&mut self, block: ScanOutcome) {
        self.functions_scanned += block.scanned;
        if block.max_mi > self.max_mi + TIE_TOLERANCE {
            self.max_mi = block.max_mi;
            self.argmax = block.argmax;
            self.argmax_count = block.argmax_count;
        } else if block.max_mi >= self.max_mi - TIE_TOLERANCE {
            self.max_mi = self.max_mi.max(block.max_mi);
            self.argmax_count += block.argmax_count;
            self.argmax.extend(block.argmax);
            self.argmax.truncate(ARGMAX_CAP);
        }
    }

    pub fn to_report(&self) -> SearchReport {
        let bound = 1.0 - h(self.alpha);
        SearchReport {
            n: 5,
            alpha: self.alpha,
            constraint: Constraint::None,
            max_mi: self.max_mi,
            argmax: self.argmax.clone(),
            argmax_count: self.argmax_count,
            bound,
            bound_satisfied: self.max_mi <= bound + TIE_TOLERANCE,
            functions_scanned: self.functions_scanned,
            argmax_is_dictators: None,
            lex_attains_max: None,
        }
    }
}

/// Resumable scan of all tables on 5 inputs. Processes at most `max_blocks`
/// blocks of [`N5_BLOCK`] representatives, rewriting `checkpoint` after each.
pub fn scan_n5(alpha: f64, checkpoint: &Path, max_blocks: Option<usize>) -> Result<N5Checkpoint> {
    let channel = SmallChannel::new(5, alpha)?;
    let mut state = if checkpoint.exists() {
        let saved: N5Checkpoint = serde_json::from_str(&fs::read_to_string(checkpoint)?)?;
        if saved.alpha != alpha {
            return Err(Error::Invalid(format!(
                "checkpoint is for alpha = {}, not {alpha}",
                saved.alpha
            )));
        }
        saved
    } else {
        N5Checkpoint::fresh(alpha)
    };
    let mut blocks = 0;
    while state.watermark < N5_REPRESENTATIVES && max_blocks.is_none_or(|b| blocks < b) {
        let lo = state.watermark;
        let hi = (lo + N5_BLOCK).min(N5_REPRESENTATIVES);
        // representatives r map to tables 2r, which have f(0) = 0
        let outcome = scan(&channel, 2 * lo, 2 * hi, |t| t & 1 == 0);
        state.absorb(outcome);
        state.watermark = hi;
        state.complete = hi == N5_REPRESENTATIVES;
        let tmp = checkpoint.with_extension("tmp");
        fs::write(&tmp, serde_json::to_string_pretty(&state)?)?;
        fs::rename(&tmp, checkpoint)?;
        blocks += 1;
    }
    Ok(state)
}
