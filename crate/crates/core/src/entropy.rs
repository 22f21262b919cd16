//! Scalar functions shared by every setting: binary entropy, the
//! Φ function and Φ-entropy, the standard normal distribution, the Gaussian
//! isoperimetric profile, and the published closed-form MI bounds.
//!
//! All entropies are in bits.

use std::f64::consts::{LN_2, LOG2_E, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// A value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(domain("probability", value, "[0, 1]"))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;
    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

/// Noise correlation `rho` in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Correlation(f64);

impl Correlation {
    pub fn new(rho: f64) -> Result<Self> {
        if (0.0..1.0).contains(&rho) {
            Ok(Self(rho))
        } else {
            Err(domain("rho", rho, "[0, 1)"))
        }
    }

    /// `rho = 1 - 2 alpha` for a bit-flip probability `alpha` in `(0, 1/2]`.
    pub fn from_flip(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha <= 0.5 {
            Ok(Self(1.0 - 2.0 * alpha))
        } else {
            Err(domain("alpha", alpha, "(0, 1/2]"))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn flip_probability(self) -> f64 {
        (1.0 - self.0) / 2.0
    }
}

impl TryFrom<f64> for Correlation {
    type Error = Error;
    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<Correlation> for f64 {
    fn from(c: Correlation) -> f64 {
        c.0
    }
}

/// Compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        // Neumaier variant: also correct when |x| > |sum|.
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn kahan_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<KahanSum>().value()
}

/// Binary entropy without the domain check. Values within rounding of
/// `[0, 1]` are clamped.
#[inline]
pub fn h(beta: f64) -> f64 {
    if beta <= 0.0 || beta >= 1.0 {
        return 0.0;
    }
    -(beta * beta.log2() + (1.0 - beta) * (1.0 - beta).log2())
}

/// `h(beta)` in bits, with `h(0) = h(1) = 0`.
pub fn binary_entropy(beta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(domain("beta", beta, "[0, 1]"));
    }
    Ok(h(beta))
}

#[inline]
pub(crate) fn phi_unchecked(t: f64) -> f64 {
    1.0 - h(0.5 - 0.5 * t)
}

/// `Φ(t) = 1 - h(1/2 - t/2)` on `[-1, 1]`.
pub fn phi(t: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&t) {
        return Err(domain("t", t, "[-1, 1]"));
    }
    Ok(phi_unchecked(t))
}

/// Partial sum of the even power series of Φ:
/// `(1/ln 2) * sum_{k=1..terms} t^{2k} / (2k (2k - 1))`.
pub fn phi_series(t: f64, terms: usize) -> f64 {
    let t2 = t * t;
    let mut pow = 1.0;
    let mut acc = KahanSum::new();
    for k in 1..=terms {
        pow *= t2;
        let d = (2 * k) as f64;
        acc.add(pow / (d * (d - 1.0)));
    }
    acc.value() / LN_2
}

/// Jensen gap `sum_i w_i Φ(v_i) - Φ(sum_i w_i v_i)`.
pub fn phi_entropy(values: &[f64], weights: &[f64]) -> Result<f64> {
    if values.len() != weights.len() {
        return Err(Error::Invalid(format!(
            "{} values but {} weights",
            values.len(),
            weights.len()
        )));
    }
    let total = kahan_sum(weights.iter().copied());
    if (total - 1.0).abs() > 1e-12 || weights.iter().any(|&w| w < 0.0) {
        return Err(Error::WeightSum(total));
    }
    if let Some(&bad) = values.iter().find(|v| !(-1.0..=1.0).contains(*v)) {
        return Err(domain("value", bad, "[-1, 1]"));
    }
    let mean = kahan_sum(values.iter().zip(weights).map(|(v, w)| v * w));
    let avg_phi = kahan_sum(
        values
            .iter()
            .zip(weights)
            .map(|(&v, w)| w * phi_unchecked(v)),
    );
    Ok((avg_phi - phi_unchecked(mean.clamp(-1.0, 1.0))).max(0.0))
}

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Standard normal distribution function, via `erfc` so both tails keep
/// full relative precision.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// Inverse of [`normal_cdf`] on `(0, 1)`.
///
/// Acklam's rational approximation (relative error about 1e-9) followed by
/// one Newton step against the `erfc`-based distribution function.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(domain("p", p, "(0, 1)"));
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    let tail = |q: f64| {
        let r = (-2.0 * q.ln()).sqrt();
        (((((C[0] * r + C[1]) * r + C[2]) * r + C[3]) * r + C[4]) * r + C[5])
            / ((((D[0] * r + D[1]) * r + D[2]) * r + D[3]) * r + 1.0)
    };
    let x = if p < P_LOW {
        tail(p)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail(1.0 - p)
    };

    // Newton step; the residual is taken in whichever tail is small.
    let density = normal_pdf(x);
    if density == 0.0 {
        return Ok(x);
    }
    let residual = if p <= 0.5 {
        normal_cdf(x) - p
    } else {
        (1.0 - p) - normal_cdf(-x)
    };
    Ok(x - residual / density)
}

/// Gaussian isoperimetric function `phi(Phi^{-1}(mu))`.
pub fn gaussian_isoperimetric(mu: f64) -> Result<f64> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(domain("mu", mu, "(0, 1)"));
    }
    Ok(normal_pdf(normal_quantile(mu)?))
}

/// Lower end of the flip-probability range on which [`osw_bound`] is stated.
pub fn osw_alpha_min() -> f64 {
    0.5 * (1.0 - 1.0 / 3f64.sqrt())
}

/// Quartic upper bound on MI for unbiased functions, in bits.
pub fn osw_bound(alpha: f64) -> Result<f64> {
    if !(osw_alpha_min()..=0.5).contains(&alpha) {
        return Err(domain("alpha", alpha, "[(1 - 1/sqrt 3)/2, 1/2]"));
    }
    let rho2 = (1.0 - 2.0 * alpha).powi(2);
    let half_log_e = LOG2_E / 2.0;
    Ok(half_log_e * rho2 + 9.0 * (1.0 - half_log_e) * rho2 * rho2)
}

/// `(1 - 2 alpha)^2`.
pub fn erkip_bound(alpha: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&alpha) {
        return Err(domain("alpha", alpha, "[0, 1/2]"));
    }
    Ok((1.0 - 2.0 * alpha).powi(2))
}

/// Convex function applied to smoothed values inside the rearrangement
/// functionals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiSpec {
    /// `-h(t)` on `[0, 1]`.
    NegBinaryEntropy,
    Square,
    /// `|t|^p`, `p >= 1`.
    AbsPower(f64),
    CustomTable(ConvexTable),
}

impl PsiSpec {
    pub fn abs_power(p: f64) -> Result<Self> {
        if p >= 1.0 && p.is_finite() {
            Ok(Self::AbsPower(p))
        } else {
            Err(domain("p", p, "[1, inf)"))
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        match self {
            Self::NegBinaryEntropy => {
                if (0.0..=1.0).contains(&t) {
                    Ok(-h(t))
                } else {
                    Err(domain("psi argument", t, "[0, 1]"))
                }
            }
            Self::Square => Ok(t * t),
            Self::AbsPower(p) => Ok(t.abs().powf(*p)),
            Self::CustomTable(table) => table.eval(t),
        }
    }

    /// The closed interval on which `eval` is defined.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            Self::NegBinaryEntropy | Self::CustomTable(_) => (0.0, 1.0),
            Self::Square | Self::AbsPower(_) => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Whether the function is non-decreasing on `[0, inf)` intersected with
    /// its domain.
    pub fn is_increasing_on_nonnegative(&self) -> bool {
        match self {
            Self::NegBinaryEntropy => false,
            Self::Square | Self::AbsPower(_) => true,
            Self::CustomTable(table) => table.values.windows(2).all(|w| w[1] >= w[0]),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::NegBinaryEntropy => "neg_entropy",
            Self::Square => "square",
            Self::AbsPower(_) => "abs_power",
            Self::CustomTable(_) => "custom_table",
        }
    }
}

/// Piecewise-linear convex function on `[0, 1]`, given by its values on a
/// uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ConvexTable {
    values: Vec<f64>,
}

impl ConvexTable {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Invalid("a table needs at least two knots".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("table values must be finite".into()));
        }
        let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if let Some(i) = values
            .windows(3)
            .position(|w| w[0] - 2.0 * w[1] + w[2] < -1e-12 * scale)
        {
            return Err(Error::Invalid(format!(
                "table is not convex at knot {}",
                i + 1
            )));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(domain("psi argument", t, "[0, 1]"));
        }
        let segments = self.values.len() - 1;
        let x = t * segments as f64;
        let i = (x.floor() as usize).min(segments - 1);
        let frac = x - i as f64;
        Ok(self.values[i] * (1.0 - frac) + self.values[i + 1] * frac)
    }
}

impl TryFrom<Vec<f64>> for ConvexTable {
    type Error = Error;
    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<ConvexTable> for Vec<f64> {
    fn from(t: ConvexTable) -> Vec<f64> {
        t.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn entropy_examples() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.25).unwrap() - 0.811_278_124_459_132_8).abs() < 1e-12);
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.5).is_err());
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi(0.0).unwrap(), 0.0);
        assert_eq!(phi(1.0).unwrap(), 1.0);
        assert_eq!(phi(-1.0).unwrap(), 1.0);
        let v = phi(0.5).unwrap();
        assert!((v - 0.188_721_875_540_867_2).abs() < 1e-12);
        assert!((phi_series(0.5, 12) - v).abs() < 1e-6);
        assert!(phi(1.01).is_err());
    }

    #[test]
    fn phi_series_matches_closed_form() {
        // Twelve terms reach 1e-6 up to |t| = 0.7; the tail decays like
        // t^26 / (1 - t^2), so |t| = 0.9 needs more terms.
        for i in 0..=70 {
            let t = -0.7 + 0.02 * i as f64;
            assert!(
                (phi_series(t, 12) - phi(t).unwrap()).abs() <= 1e-6,
                "t = {t}"
            );
        }
        for i in 0..=90 {
            let t = -0.9 + 0.02 * i as f64;
            assert!(
                (phi_series(t, 80) - phi(t).unwrap()).abs() <= 1e-6,
                "t = {t}"
            );
        }
    }

    #[test]
    fn phi_entropy_examples() {
        assert!(
            phi_entropy(&[0.3, 0.3, 0.3], &[0.2, 0.3, 0.5])
                .unwrap()
                .abs()
                < 1e-15
        );
        assert!((phi_entropy(&[1.0, -1.0], &[0.5, 0.5]).unwrap() - 1.0).abs() < 1e-15);
        let rho = 0.37;
        let v = phi_entropy(&[rho, -rho], &[0.5, 0.5]).unwrap();
        assert!((v - phi(rho).unwrap()).abs() < 1e-15);
        assert!(matches!(
            phi_entropy(&[0.0, 0.0], &[0.5, 0.6]),
            Err(Error::WeightSum(_))
        ));
        assert!(phi_entropy(&[1.2, 0.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn normal_examples() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
        assert!((normal_quantile(normal_cdf(1.7)).unwrap() - 1.7).abs() < 1e-10);
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
        // Reference values from mpmath at 30 digits.
        assert!((normal_cdf(-3.0) - 1.349_898_031_630_094_5e-3).abs() < 1e-17);
        assert!((normal_quantile(0.975).unwrap() - 1.959_963_984_540_054).abs() < 1e-13);
    }

    #[test]
    fn cdf_quantile_roundtrip_over_range() {
        let mut log_p = -12.0f64;
        while log_p < -0.3 {
            for p in [10f64.powf(log_p), 1.0 - 10f64.powf(log_p)] {
                let z = normal_quantile(p).unwrap();
                assert!((normal_cdf(z) - p).abs() <= 1e-12, "p = {p}");
            }
            log_p += 0.05;
        }
    }

    #[test]
    fn isoperimetric_examples() {
        let u = gaussian_isoperimetric(0.5).unwrap();
        assert!((u - 0.398_942_280_4).abs() < 1e-10);
        for mu in [0.01, 0.2, 0.37] {
            let a = gaussian_isoperimetric(mu).unwrap();
            let b = gaussian_isoperimetric(1.0 - mu).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
        assert!(gaussian_isoperimetric(0.0).is_err());
        assert!(gaussian_isoperimetric(1.0).is_err());

        // U(mu)^2 ~ (2 ln 2) mu^2 log(1/mu): the ratio sits in (0.5, 1) and
        // grows with k.
        let ratio = |k: i32| {
            let mu = 2f64.powi(-k);
            gaussian_isoperimetric(mu).unwrap().powi(2) / (2.0 * LN_2 * mu * mu * k as f64)
        };
        let r10 = ratio(10);
        assert!(r10 > 0.5 && r10 < 1.0, "{r10}");
        assert!(ratio(20) > r10 && ratio(40) > ratio(20) && ratio(40) < 1.0);
    }

    #[test]
    fn osw_examples() {
        assert_eq!(osw_bound(0.5).unwrap(), 0.0);
        let expected = LOG2_E / 2.0 * 0.25 + 9.0 * (1.0 - LOG2_E / 2.0) * 0.0625;
        assert!((osw_bound(0.25).unwrap() - expected).abs() < 1e-15);
        // ratio - 1 behaves like 3.3 rho^2
        for (alpha, tol) in [(0.49, 2e-3), (0.499, 2e-5)] {
            let r = osw_bound(alpha).unwrap() / (1.0 - h(alpha));
            assert!(r >= 1.0 && r - 1.0 < tol, "{alpha}: {r}");
        }
        assert!(osw_bound(0.2).is_err());
        assert!(osw_bound(0.6).is_err());
    }

    #[test]
    fn osw_dominates_dictator_value() {
        let lo = osw_alpha_min();
        for i in 0..=1000 {
            let alpha = lo + (0.5 - lo) * i as f64 / 1000.0;
            assert!(
                osw_bound(alpha).unwrap() >= 1.0 - h(alpha) - 1e-12,
                "{alpha}"
            );
        }
    }

    #[test]
    fn erkip_examples() {
        assert_eq!(erkip_bound(0.5).unwrap(), 0.0);
        assert_eq!(erkip_bound(0.0).unwrap(), 1.0);
        assert!((erkip_bound(0.3).unwrap() - 0.16).abs() < 1e-15);
    }

    #[test]
    fn convex_table_validation() {
        assert!(ConvexTable::new(vec![1.0, 0.0, 1.0]).is_ok());
        assert!(ConvexTable::new(vec![0.0, 1.0, 0.0]).is_err());
        let t = ConvexTable::new(vec![0.0, 0.0, 1.0]).unwrap();
        assert!((t.eval(0.75).unwrap() - 0.5).abs() < 1e-15);
        assert!(t.eval(1.1).is_err());
    }

    fn registry() -> Vec<PsiSpec> {
        vec![
            PsiSpec::NegBinaryEntropy,
            PsiSpec::Square,
            PsiSpec::abs_power(1.5).unwrap(),
            PsiSpec::CustomTable(ConvexTable::new(vec![0.3, 0.1, 0.0, 0.05, 0.4]).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn entropy_concave_and_symmetric(a in 0.0..1.0f64, b in 0.0..1.0f64, lam in 0.0..1.0f64) {
            prop_assert!((h(a) - h(1.0 - a)).abs() < 1e-12);
            prop_assert!(h(a) <= 1.0);
            let mid = lam * a + (1.0 - lam) * b;
            prop_assert!(h(mid) >= lam * h(a) + (1.0 - lam) * h(b) - 1e-12);
        }

        #[test]
        fn phi_even_and_convex(a in -1.0..1.0f64, b in -1.0..1.0f64, lam in 0.0..1.0f64) {
            prop_assert!((phi_unchecked(a) - phi_unchecked(-a)).abs() < 1e-12);
            let mid = lam * a + (1.0 - lam) * b;
            prop_assert!(phi_unchecked(mid) <= lam * phi_unchecked(a) + (1.0 - lam) * phi_unchecked(b) + 1e-12);
        }

        #[test]
        fn phi_entropy_nonnegative(values in proptest::collection::vec(-1.0..1.0f64, 1..12)) {
            let w = vec![1.0 / values.len() as f64; values.len()];
            let e = phi_entropy(&values, &w).unwrap();
            prop_assert!(e >= 0.0);
            let spread = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - values.iter().cloned().fold(f64::INFINITY, f64::min);
            if spread > 1e-3 {
                prop_assert!(e > 1e-12);
            }
        }

        #[test]
        fn convex_sum(x in 0.0..1.0f64, y in 0.0..1.0f64, stretch in 0.0..1.0f64) {
            // x + y = x' + y' with |x' - y'| >= |x - y|, all inside [0, 1].
            let s = x + y;
            let half_gap = (x - y).abs() / 2.0;
            let max_half = (s / 2.0).min(1.0 - s / 2.0);
            let g = half_gap + stretch * (max_half - half_gap);
            let (xp, yp) = ((s / 2.0 - g).max(0.0), (s / 2.0 + g).min(1.0));
            for psi in registry() {
                let lhs = psi.eval(x).unwrap() + psi.eval(y).unwrap();
                let rhs = psi.eval(xp).unwrap() + psi.eval(yp).unwrap();
                prop_assert!(lhs <= rhs + 1e-12, "{:?}: {} > {}", psi, lhs, rhs);
            }
        }
    }
}
