use std::f64::consts::LN_2;

use rayon::prelude::*;

use crate::entropy::{h, kahan_sum, phi_entropy};
use crate::error::{check_dim, domain, Error, Result};

use super::fourier::smooth_table;
use super::function::{BooleanFunction, MultiOutputFunction, ValueConvention};

/// Largest input dimension for the `O(4^n)` enumeration path.
pub const MAX_ENUMERATION_DIM: usize = 15;

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(domain("alpha", alpha, "[0, 1]"))
    }
}

/// Entropy in bits of an unnormalized histogram with the given total mass.
pub(crate) fn histogram_entropy(hist: &[f64], total: f64) -> f64 {
    kahan_sum(hist.iter().filter(|&&m| m > 0.0).map(|&m| {
        let p = m / total;
        -p * p.log2()
    }))
}

/// `I(f(x); y)` for `y` obtained from `x` by flipping each bit with
/// probability `alpha`.
///
/// `Pr[f(x) = 1 | y]` is `T_rho f(y)` on the 0/1 table (with `rho = 1 - 2 alpha`)
/// because `(x, y)` is exchangeable, so this costs one pair of transforms.
pub fn mutual_information_direct(f: &BooleanFunction, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let table = f.values_as(ValueConvention::ZeroOne);
    let mean = f.density();
    let smoothed = smooth_table(&table, 1.0 - 2.0 * alpha)?;
    let cond = kahan_sum(smoothed.iter().map(|&p| h(p.clamp(0.0, 1.0)))) / table.len() as f64;
    Ok((h(mean) - cond).max(0.0))
}

/// `I(f(x); y)` for a multi-output `f`, by enumerating every `(x, y)` pair
/// and accumulating the conditional output histogram for each `y`.
pub fn mutual_information_multi(f: &MultiOutputFunction, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let n = f.n();
    check_dim(n, MAX_ENUMERATION_DIM)?;
    let len = 1usize << n;
    let outputs = 1usize << f.k();
    let table = f.table();

    let mut marginal = vec![0.0; outputs];
    for &v in table {
        marginal[v as usize] += 1.0;
    }
    let h_out = histogram_entropy(&marginal, len as f64);

    // Pr[x | y] depends on the Hamming distance only.
    let by_distance: Vec<f64> = (0..=n).map(|d| flip_weight(alpha, n, d)).collect();

    let per_y: Vec<f64> = (0..len)
        .into_par_iter()
        .map_init(
            || vec![0.0; outputs],
            |hist, y| {
                hist.iter_mut().for_each(|m| *m = 0.0);
                for (x, &v) in table.iter().enumerate() {
                    hist[v as usize] += by_distance[(x ^ y).count_ones() as usize];
                }
                let total: f64 = kahan_sum(hist.iter().copied());
                histogram_entropy(hist, total)
            },
        )
        .collect();
    let h_cond = kahan_sum(per_y) / len as f64;
    Ok((h_out - h_cond).max(0.0))
}

/// `alpha^d (1 - alpha)^{n - d}`, taken in log space so extreme `alpha`
/// does not underflow early.
pub(crate) fn flip_weight(alpha: f64, n: usize, d: usize) -> f64 {
    let ones = d as f64;
    let zeros = (n - d) as f64;
    let term = |count: f64, p: f64| if count == 0.0 { 0.0 } else { count * p.ln() };
    (term(ones, alpha) + term(zeros, 1.0 - alpha)).exp()
}

/// `Ent^Φ[T_rho f]` over the ±1 reading of `f`.
pub fn mutual_information_phi(f: &BooleanFunction, rho: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&rho) {
        return Err(domain("rho", rho, "[-1, 1]"));
    }
    let table = f.values_as(ValueConvention::PlusMinus);
    let smoothed: Vec<f64> = smooth_table(&table, rho)?
        .into_iter()
        .map(|v| v.clamp(-1.0, 1.0))
        .collect();
    let w = vec![1.0 / smoothed.len() as f64; smoothed.len()];
    phi_entropy(&smoothed, &w)
}

/// Exact MI of `AND_k`:
/// `h(2^{-k}) - sum_m C(k, m) 2^{-k} h((1 - alpha)^m alpha^{k - m})`.
pub fn and_mi_exact(k: usize, alpha: f64) -> Result<f64> {
    if !(1..=30).contains(&k) {
        return Err(Error::Range(format!("k = {k} not in 1..=30")));
    }
    check_alpha(alpha)?;
    let scale = 2f64.powi(-(k as i32));
    let mut binom = 1.0f64;
    let mut acc = crate::entropy::KahanSum::new();
    for m in 0..=k {
        if m > 0 {
            binom = binom * (k - m + 1) as f64 / m as f64;
        }
        let p = flip_weight(alpha, k, k - m);
        acc.add(binom * scale * h(p));
    }
    Ok((h(scale) - acc.value()).max(0.0))
}

/// The closed form `k 2^{1-k} (1 - h(alpha))` quoted for `AND_k`, kept for
/// comparison reports against [`and_mi_exact`].
pub fn and_mi_quoted(k: usize, alpha: f64) -> f64 {
    k as f64 * 2f64.powi(1 - k as i32) * (1.0 - h(alpha))
}

/// Second-order Taylor coefficient of `h` around `mu`, in bits:
/// `-1 / (2 ln 2 mu (1 - mu))`.
pub fn c2_coefficient(mu: f64) -> Result<f64> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(domain("mu", mu, "(0, 1)"));
    }
    Ok(-1.0 / (2.0 * LN_2 * mu * (1.0 - mu)))
}

/// Small-`rho` expansion of `E[h(T_rho f)]` against `c2(mu) W^1[f]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TaylorCheck {
    pub mean: f64,
    pub w1: f64,
    /// `(E[h(T_rho f)] - h(mu)) / rho^2`.
    pub lhs: f64,
    /// `c2(mu) W^1[f]`, with `W^1` taken on the 0/1 table.
    pub rhs: f64,
    pub abs_err: f64,
    /// `abs_err <= 0.01 |rhs| + 1e-8`.
    pub pass: bool,
}

pub fn taylor_check(f: &BooleanFunction, rho: f64) -> Result<TaylorCheck> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(domain("rho", rho, "(0, 1)"));
    }
    let table = f.values_as(ValueConvention::ZeroOne);
    let mean = f.density();
    let c2 = c2_coefficient(mean)?;
    let spectrum = super::fourier::FourierSpectrum::of_values(&table)?;
    let w1 = super::fourier::degree_weight(&spectrum, 1)?;
    let smoothed = smooth_table(&table, rho)?;
    let avg = kahan_sum(smoothed.iter().map(|&p| h(p.clamp(0.0, 1.0)))) / table.len() as f64;
    let lhs = (avg - h(mean)) / (rho * rho);
    let rhs = c2 * w1;
    let abs_err = (lhs - rhs).abs();
    Ok(TaylorCheck {
        mean,
        w1,
        lhs,
        rhs,
        abs_err,
        pass: abs_err <= 0.01 * rhs.abs() + 1e-8,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::function::coordinate_mask;
    use proptest::prelude::*;

    fn random_function(n: usize, seed: u64) -> BooleanFunction {
        let mut state = seed | 1;
        BooleanFunction::from_fn(n, ValueConvention::ZeroOne, |_| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            state >> 63 == 1
        })
        .unwrap()
    }

    #[test]
    fn taylor_cases() {
        let d = dictator(4, 2);
        let c = taylor_check(&d, 1e-3).unwrap();
        assert!((c.w1 - 0.25).abs() < 1e-15 && c.pass, "{c:?}");
        for seed in 1..40u64 {
            let f = random_function(2 + (seed % 7) as usize, seed);
            if f.count_ones() == 0 || f.count_ones() == f.len() {
                continue;
            }
            let c = taylor_check(&f, 1e-3).unwrap();
            if c.w1 == 0.0 {
                // only the rho^2 W^2 remainder is left
                assert!(c.abs_err < 1e-5);
            } else {
                assert!(c.pass, "{seed} {c:?}");
            }
        }
        assert!(taylor_check(&d, 0.0).is_err());
    }

    fn dictator(n: usize, i: usize) -> BooleanFunction {
        BooleanFunction::from_fn(n, ValueConvention::ZeroOne, |j| {
            j & coordinate_mask(n, i) == 0
        })
        .unwrap()
    }

    #[test]
    fn constant_has_no_information() {
        let f = BooleanFunction::zeros(4, ValueConvention::ZeroOne).unwrap();
        assert_eq!(mutual_information_direct(&f, 0.2).unwrap(), 0.0);
        assert_eq!(
            mutual_information_direct(&f.complement(), 0.2).unwrap(),
            0.0
        );
        assert_eq!(
            mutual_information_multi(&MultiOutputFunction::from_boolean(&f), 0.2).unwrap(),
            0.0
        );
    }

    #[test]
    fn dictator_value() {
        for alpha in [0.0, 0.05, 0.2, 0.37, 0.5] {
            let f = dictator(3, 2);
            let want = 1.0 - h(alpha);
            assert!((mutual_information_direct(&f, alpha).unwrap() - want).abs() < 1e-12);
            let phi_path = mutual_information_phi(&f, 1.0 - 2.0 * alpha).unwrap();
            assert!((phi_path - want).abs() < 1e-12);
        }
    }

    #[test]
    fn and2_closed_form() {
        let and2 = BooleanFunction::from_fn(2, ValueConvention::ZeroOne, |j| j == 0).unwrap();
        for alpha in [0.1, 0.25, 0.4] {
            let b = 1.0 - alpha;
            let want = h(0.25) - (0.25 * h(b * b) + 0.5 * h(alpha * b) + 0.25 * h(alpha * alpha));
            let direct = mutual_information_direct(&and2, alpha).unwrap();
            let generic =
                mutual_information_multi(&MultiOutputFunction::from_boolean(&and2), alpha).unwrap();
            assert!((direct - want).abs() < 1e-14, "{direct} vs {want}");
            assert!((generic - want).abs() < 1e-14);
            assert!((and_mi_exact(2, alpha).unwrap() - want).abs() < 1e-14);
        }
    }

    #[test]
    fn phi_path_examples() {
        let f = random_function(3, 11);
        assert!(mutual_information_phi(&f, 0.0).unwrap().abs() < 1e-15);
        for seed in 0..20 {
            let f = random_function(3, seed);
            let a = mutual_information_direct(&f, 0.2).unwrap();
            let b = mutual_information_phi(&f, 0.6).unwrap();
            assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn and_mi_examples() {
        for alpha in [0.0, 0.1, 0.3] {
            assert!((and_mi_exact(1, alpha).unwrap() - (1.0 - h(alpha))).abs() < 1e-15);
        }
        assert!(and_mi_exact(7, 0.5).unwrap().abs() < 1e-15);
        assert!((and_mi_exact(2, 0.0).unwrap() - 0.811_278_124_459_132_8).abs() < 1e-12);
        assert!(and_mi_exact(0, 0.1).is_err());
        assert!(and_mi_exact(31, 0.1).is_err());
    }

    #[test]
    fn and_mi_matches_enumeration() {
        for k in 1..=10 {
            let n = k;
            let f = BooleanFunction::from_fn(n, ValueConvention::ZeroOne, |j| j == 0).unwrap();
            for alpha in [0.03, 0.2, 0.45] {
                let exact = and_mi_exact(k, alpha).unwrap();
                let direct = mutual_information_direct(&f, alpha).unwrap();
                assert!((exact - direct).abs() < 1e-12, "k={k} alpha={alpha}");
            }
        }
    }

    #[test]
    fn quoted_and_form_differs_beyond_k1() {
        // At alpha = 0 the exact value is h(2^{-k}); the quoted form gives
        // k 2^{1-k}, which agrees only for k = 1.
        assert!((and_mi_quoted(1, 0.0) - and_mi_exact(1, 0.0).unwrap()).abs() < 1e-15);
        for k in 2..=8 {
            let gap = and_mi_quoted(k, 0.0) - and_mi_exact(k, 0.0).unwrap();
            assert!(gap.abs() > 1e-3, "k={k}");
        }
    }

    #[test]
    fn c2_examples() {
        assert!((c2_coefficient(0.5).unwrap() + 2.0 / LN_2).abs() < 1e-12);
        assert!((c2_coefficient(0.25).unwrap() + 3.847_186_775_7).abs() < 1e-9);
        assert!((c2_coefficient(0.3).unwrap() - c2_coefficient(0.7).unwrap()).abs() < 1e-12);
        assert!(c2_coefficient(0.0).is_err());
        assert!(c2_coefficient(1.0).is_err());
    }

    proptest! {
        #[test]
        fn dual_path_and_generic_agree(n in 1usize..9, seed in any::<u64>(), alpha in 0.0..0.5f64) {
            let f = random_function(n, seed);
            let direct = mutual_information_direct(&f, alpha).unwrap();
            let phi_path = mutual_information_phi(&f, 1.0 - 2.0 * alpha).unwrap();
            let generic = mutual_information_multi(&MultiOutputFunction::from_boolean(&f), alpha).unwrap();
            prop_assert!((direct - phi_path).abs() <= 1e-10);
            prop_assert!((direct - generic).abs() <= 1e-10);
        }

        #[test]
        fn flip_symmetry(n in 1usize..10, seed in any::<u64>(), alpha in 0.0..0.5f64) {
            let f = random_function(n, seed);
            let a = mutual_information_direct(&f, alpha).unwrap();
            let b = mutual_information_direct(&f, 1.0 - alpha).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn data_processing_and_erkip(n in 1usize..11, seed in any::<u64>(), alpha in 0.0..0.5f64) {
            let f = random_function(n, seed);
            let mi = mutual_information_direct(&f, alpha).unwrap();
            prop_assert!(mi <= h(f.density()) + 1e-12);
            prop_assert!(mi <= n as f64);
            prop_assert!(mi <= (1.0 - 2.0 * alpha).powi(2) + 1e-9);
        }
    }
}
