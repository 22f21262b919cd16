use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::function::{coordinate_mask, BooleanFunction, ValueConvention};

/// Structured 0/1 functions used throughout the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// Indicator of `x_i = +1` (1-based `i`).
    Dictator(usize),
    /// Indicator of `x_1 = ... = x_k = +1`.
    AndK(usize),
    /// Indicator of the first `count` indices.
    Lex(usize),
    /// Hamming ball around the all-`+1` point with exactly `ones` points.
    HammingBall(usize),
    /// Hamming ball holding half the cube.
    Majority,
}

pub fn make_family(n: usize, kind: FamilyKind) -> Result<BooleanFunction> {
    let len = 1usize.checked_shl(n as u32).ok_or(Error::Dimension {
        n,
        max: super::MAX_DIM,
    })?;
    match kind {
        FamilyKind::Dictator(i) => {
            if !(1..=n).contains(&i) {
                return Err(Error::Range(format!("coordinate {i} not in 1..={n}")));
            }
            let m = coordinate_mask(n, i);
            BooleanFunction::from_fn(n, ValueConvention::ZeroOne, |j| j & m == 0)
        }
        FamilyKind::AndK(k) => {
            if k > n {
                return Err(Error::Range(format!("k = {k} exceeds n = {n}")));
            }
            make_family(n, FamilyKind::Lex(len >> k))
        }
        FamilyKind::Lex(count) => {
            if count > len {
                return Err(Error::Range(format!("count {count} exceeds 2^{n}")));
            }
            BooleanFunction::from_fn(n, ValueConvention::ZeroOne, |j| j < count)
        }
        FamilyKind::HammingBall(ones) => {
            if ones > len {
                return Err(Error::Range(format!("ones_count {ones} exceeds 2^{n}")));
            }
            let mut f = BooleanFunction::zeros(n, ValueConvention::ZeroOne)?;
            let mut order: Vec<usize> = (0..len).collect();
            // weight first, ascending index within a level
            order.sort_by_key(|&j| (j.count_ones(), j));
            for &j in &order[..ones] {
                f.set(j, true);
            }
            Ok(f)
        }
        FamilyKind::Majority => make_family(n, FamilyKind::HammingBall(len / 2)),
    }
}
