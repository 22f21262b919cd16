//! Hamming(15, 11) syndrome decoder as a multi-output function, and the
//! exact mutual information between its message and a noisy copy of the
//! input.
//!
//! Position `p` in `1..=15` is coordinate `x_p`, so it lives at index bit
//! `15 - p`. The parity-check matrix has the binary expansion of `p` as
//! column `p`; parity positions are the powers of two and the message is
//! read from the remaining eleven positions in increasing order.

use rayon::prelude::*;

use crate::error::{domain, Result};

use super::function::MultiOutputFunction;
use super::mi::{flip_weight, histogram_entropy, mutual_information_multi};

pub const CODE_LENGTH: usize = 15;
pub const MESSAGE_BITS: usize = 11;
const POINTS: usize = 1 << CODE_LENGTH;
const MESSAGES: usize = 1 << MESSAGE_BITS;

#[inline]
fn position_bit(p: usize) -> usize {
    1 << (CODE_LENGTH - p)
}

/// XOR of the positions of all set bits.
pub fn syndrome(word: usize) -> usize {
    (1..=CODE_LENGTH)
        .filter(|&p| word & position_bit(p) != 0)
        .fold(0, |s, p| s ^ p)
}

/// Nearest codeword: flips the position named by the syndrome.
pub fn decode(word: usize) -> usize {
    match syndrome(word) {
        0 => word,
        p => word ^ position_bit(p),
    }
}

/// Message bits of a word, read from the non-parity positions.
pub fn message(word: usize) -> u32 {
    (1..=CODE_LENGTH)
        .filter(|p| !p.is_power_of_two())
        .enumerate()
        .fold(0u32, |m, (k, p)| {
            if word & position_bit(p) != 0 {
                m | 1 << k
            } else {
                m
            }
        })
}

/// `f(x)` = message of the codeword within distance 1 of `x`.
pub fn hamming15_decoder() -> MultiOutputFunction {
    let table = (0..POINTS).map(|x| message(decode(x))).collect();
    MultiOutputFunction::new(CODE_LENGTH, MESSAGE_BITS, table).expect("valid table")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerfectCodeMi {
    /// `I(f(x); y)` in bits.
    pub mi: f64,
    /// `mi / 11`.
    pub per_bit: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=0.5).contains(&alpha) {
        Ok(())
    } else {
        Err(domain("alpha", alpha, "[0, 1/2]"))
    }
}

/// Entropy of `message(decode(leader ^ e))` for noise `e`, which is
/// `H(f(x) | y)` for every `y` in the coset of `leader`.
pub fn coset_entropy(leader: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let weights: Vec<f64> = (0..=CODE_LENGTH)
        .map(|d| flip_weight(alpha, CODE_LENGTH, d))
        .collect();
    const CHUNK: usize = 1024;
    let partial: Vec<Vec<f64>> = (0..POINTS / CHUNK)
        .into_par_iter()
        .map(|c| {
            let mut hist = vec![0.0; MESSAGES];
            for e in c * CHUNK..(c + 1) * CHUNK {
                let m = message(decode(leader ^ e));
                hist[m as usize] += weights[e.count_ones() as usize];
            }
            hist
        })
        .collect();
    // merged in chunk order
    let mut hist = vec![0.0; MESSAGES];
    for part in &partial {
        for (a, b) in hist.iter_mut().zip(part) {
            *a += b;
        }
    }
    let total: f64 = crate::entropy::kahan_sum(hist.iter().copied());
    Ok(histogram_entropy(&hist, total))
}

/// Exact `I(f(x); y)` for the Hamming(15, 11) decoder.
///
/// `y` is uniform; writing `y = c ^ s` with `c` a codeword and `s` a coset
/// leader, linearity gives `H(f(x) | y) = H(message(decode(s ^ e)))`. There
/// are 16 cosets: the code itself and 15 equivalent weight-one cosets.
pub fn perfect_code_mi(alpha: f64) -> Result<PerfectCodeMi> {
    let h0 = coset_entropy(0, alpha)?;
    let h1 = coset_entropy(position_bit(1), alpha)?;
    let cond = (h0 + 15.0 * h1) / 16.0;
    let mi = (MESSAGE_BITS as f64 - cond).max(0.0);
    Ok(PerfectCodeMi {
        mi,
        per_bit: mi / MESSAGE_BITS as f64,
    })
}

/// Slow path: full enumeration of all `2^15 x 2^15` input pairs.
pub fn perfect_code_mi_naive(alpha: f64) -> Result<PerfectCodeMi> {
    check_alpha(alpha)?;
    let mi = mutual_information_multi(&hamming15_decoder(), alpha)?;
    Ok(PerfectCodeMi {
        mi,
        per_bit: mi / MESSAGE_BITS as f64,
    })
}
