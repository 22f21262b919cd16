use crate::entropy::kahan_sum;
use crate::error::{check_dim, domain, Error, Result};

use super::function::{BooleanFunction, MAX_DIM};

/// In-place unnormalized Walsh–Hadamard butterfly; `data.len()` must be a
/// power of two.
pub fn walsh_hadamard_in_place(data: &mut [f64]) {
    let len = data.len();
    debug_assert!(len.is_power_of_two());
    let mut half = 1;
    while half < len {
        for block in data.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        half *= 2;
    }
}

/// Fourier coefficients `f^(S)`, indexed by subset mask `S` in the point
/// index layout (see [`coordinate_mask`](super::coordinate_mask)).
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSpectrum {
    n: usize,
    coeffs: Vec<f64>,
}

impl FourierSpectrum {
    pub fn from_coeffs(n: usize, coeffs: Vec<f64>) -> Result<Self> {
        check_dim(n, MAX_DIM)?;
        if coeffs.len() != 1 << n {
            return Err(Error::Invalid(format!(
                "spectrum has {} coefficients, expected 2^{n}",
                coeffs.len()
            )));
        }
        Ok(Self { n, coeffs })
    }

    /// Transform of an arbitrary real table of length `2^n`.
    pub fn of_values(values: &[f64]) -> Result<Self> {
        let len = values.len();
        if !len.is_power_of_two() {
            return Err(Error::Invalid(format!(
                "table length {len} is not a power of two"
            )));
        }
        let n = len.trailing_zeros() as usize;
        check_dim(n, MAX_DIM)?;
        let mut coeffs = values.to_vec();
        walsh_hadamard_in_place(&mut coeffs);
        let scale = 1.0 / len as f64;
        coeffs.iter_mut().for_each(|c| *c *= scale);
        Ok(Self { n, coeffs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, subset: usize) -> f64 {
        self.coeffs[subset]
    }

    /// `sum_S f^(S)^2`.
    pub fn total_weight(&self) -> f64 {
        kahan_sum(self.coeffs.iter().map(|c| c * c))
    }

    /// Mean of the underlying function, `f^(empty)`.
    pub fn mean(&self) -> f64 {
        self.coeffs[0]
    }
}

/// `f^(S) = 2^{-n} sum_x f(x) prod_{i in S} x_i` under `f`'s value convention.
pub fn fwht(f: &BooleanFunction) -> Result<FourierSpectrum> {
    FourierSpectrum::of_values(&f.values())
}

/// Table `f(x) = sum_S f^(S) chi_S(x)`.
pub fn fwht_inverse(spec: &FourierSpectrum) -> Vec<f64> {
    let mut values = spec.coeffs.clone();
    walsh_hadamard_in_place(&mut values);
    values
}

fn check_rho(rho: f64) -> Result<()> {
    if (-1.0..=1.0).contains(&rho) {
        Ok(())
    } else {
        Err(domain("rho", rho, "[-1, 1]"))
    }
}

/// Values of `T_rho f`: level-`|S|` coefficients scaled by `rho^{|S|}`.
/// Negative `rho` (flip probability above one half) is accepted.
pub fn noise_operator(spec: &FourierSpectrum, rho: f64) -> Result<Vec<f64>> {
    check_rho(rho)?;
    let powers = rho_powers(rho, spec.n);
    let mut values: Vec<f64> = spec
        .coeffs
        .iter()
        .enumerate()
        .map(|(s, c)| c * powers[s.count_ones() as usize])
        .collect();
    walsh_hadamard_in_place(&mut values);
    Ok(values)
}

/// `T_rho` applied straight to a table of values, without keeping the
/// spectrum.
pub fn smooth_table(values: &[f64], rho: f64) -> Result<Vec<f64>> {
    check_rho(rho)?;
    let len = values.len();
    if !len.is_power_of_two() {
        return Err(Error::Invalid(format!(
            "table length {len} is not a power of two"
        )));
    }
    let n = len.trailing_zeros() as usize;
    check_dim(n, MAX_DIM)?;
    let powers = rho_powers(rho, n);
    let scale = 1.0 / len as f64;
    let mut buf = values.to_vec();
    walsh_hadamard_in_place(&mut buf);
    for (s, c) in buf.iter_mut().enumerate() {
        *c *= powers[s.count_ones() as usize] * scale;
    }
    walsh_hadamard_in_place(&mut buf);
    Ok(buf)
}

fn rho_powers(rho: f64, n: usize) -> Vec<f64> {
    std::iter::successors(Some(1.0), |p| Some(p * rho))
        .take(n + 1)
        .collect()
}

/// `sum_{|S| = k} f^(S)^2`.
pub fn degree_weight(spec: &FourierSpectrum, k: usize) -> Result<f64> {
    if k > spec.n {
        return Err(Error::Range(format!("level {k} exceeds n = {}", spec.n)));
    }
    Ok(kahan_sum(
        spec.coeffs
            .iter()
            .enumerate()
            .filter(|(s, _)| s.count_ones() as usize == k)
            .map(|(_, c)| c * c),
    ))
}

/// `Var[T_rho f] = sum_{S != empty} rho^{2|S|} f^(S)^2`.
pub fn variance_trho(spec: &FourierSpectrum, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    let powers = rho_powers(rho * rho, spec.n);
    Ok(kahan_sum(
        spec.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(s, c)| powers[s.count_ones() as usize] * c * c),
    ))
}
