//! Gaussian space: the Ornstein–Uhlenbeck operator on sets depending on the
//! first coordinate, Gaussian mutual information, Borell-type comparisons,
//! and the finite-`N` sphere kernels whose limit is the Mehler kernel.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::entropy::{h, normal_cdf, normal_pdf, normal_quantile, PsiSpec};
use crate::error::{domain, Error, Result};
use crate::montecarlo::{estimate_parallel, McEstimate};
use crate::quadrature::integrate;

/// Integration range for the outer Gaussian expectation.
pub const OUTER_LIMIT: f64 = 10.0;
/// Absolute tolerance of the outer quadrature.
pub const OUTER_TOL: f64 = 1e-10;

fn check_rho(rho: f64) -> Result<()> {
    if (0.0..1.0).contains(&rho) {
        Ok(())
    } else {
        Err(domain("rho", rho, "[0, 1)"))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Subset of `R^n` determined by the first coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaussianSetSpec {
    /// `{x : x_1 >= t}`.
    Halfspace { t: f64 },
    /// `{x : x_1 ∈ [a_k, b_k] for some k}`, sorted and disjoint; endpoints
    /// may be infinite.
    IntervalUnion { intervals: Vec<(f64, f64)> },
}

impl GaussianSetSpec {
    pub fn halfspace(t: f64) -> Result<Self> {
        if t.is_nan() {
            return Err(Error::Invalid("threshold is NaN".into()));
        }
        Ok(Self::Halfspace { t })
    }

    /// Halfspace `{x_1 >= t}` of Gaussian measure `mu`.
    pub fn halfspace_with_measure(mu: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&mu) {
            return Err(domain("mu", mu, "[0, 1]"));
        }
        let t = match mu {
            0.0 => f64::INFINITY,
            1.0 => f64::NEG_INFINITY,
            _ => -normal_quantile(mu)?,
        };
        Ok(Self::Halfspace { t })
    }

    pub fn interval_union(intervals: Vec<(f64, f64)>) -> Result<Self> {
        for &(a, b) in &intervals {
            if a.is_nan() || b.is_nan() || a > b {
                return Err(Error::Invalid(format!("bad interval [{a}, {b}]")));
            }
        }
        if intervals.windows(2).any(|w| w[0].1 >= w[1].0) {
            return Err(Error::Invalid(
                "intervals must be sorted and disjoint".into(),
            ));
        }
        Ok(Self::IntervalUnion { intervals })
    }

    /// Symmetric slab `{|x_1| <= c}`.
    pub fn slab(c: f64) -> Result<Self> {
        Self::interval_union(vec![(-c.abs(), c.abs())])
    }

    pub fn intervals(&self) -> Vec<(f64, f64)> {
        match self {
            Self::Halfspace { t } => vec![(*t, f64::INFINITY)],
            Self::IntervalUnion { intervals } => intervals.clone(),
        }
    }

    pub fn contains(&self, x1: f64) -> bool {
        self.intervals().iter().any(|&(a, b)| a <= x1 && x1 <= b)
    }

    /// Gaussian measure.
    pub fn measure(&self) -> f64 {
        match self {
            Self::Halfspace { t } => normal_cdf(-t),
            Self::IntervalUnion { intervals } => intervals
                .iter()
                .map(|&(a, b)| normal_cdf(b) - normal_cdf(a))
                .sum::<f64>()
                .clamp(0.0, 1.0),
        }
    }
}

/// Mehler kernel against the standard Gaussian measure:
/// `(1-ρ²)^{-n/2} exp(-(ρ²|x|² - 2ρ⟨x,y⟩ + ρ²|y|²) / (2(1-ρ²)))`.
pub fn mehler_kernel(x: &[f64], y: &[f64], rho: f64) -> Result<f64> {
    mehler_with_sign(x, y, rho, -2.0)
}

/// The variant with `+2ρ⟨x,y⟩` inside the negated exponent. It is the kernel
/// of `f ↦ U_ρ f(-x)`, i.e. correlation `-ρ`.
pub fn mehler_kernel_printed(x: &[f64], y: &[f64], rho: f64) -> Result<f64> {
    mehler_with_sign(x, y, rho, 2.0)
}

fn mehler_with_sign(x: &[f64], y: &[f64], rho: f64, cross: f64) -> Result<f64> {
    check_rho(rho)?;
    if x.len() != y.len() {
        return Err(Error::Invalid("x and y differ in dimension".into()));
    }
    let n = x.len() as f64;
    let s = 1.0 - rho * rho;
    let q = rho * rho * (dot(x, x) + dot(y, y)) + cross * rho * dot(x, y);
    Ok(s.powf(-n / 2.0) * (-q / (2.0 * s)).exp())
}

/// `U_ρ f(x) = Pr[y ∈ f | x]` with `y_1 = ρ x_1 + sqrt(1-ρ²) z`.
pub fn ou_apply(f: &GaussianSetSpec, rho: f64, x1: f64) -> Result<f64> {
    check_rho(rho)?;
    let s = (1.0 - rho * rho).sqrt();
    let v = match f {
        GaussianSetSpec::Halfspace { t } => normal_cdf((rho * x1 - t) / s),
        GaussianSetSpec::IntervalUnion { intervals } => intervals
            .iter()
            .map(|&(a, b)| normal_cdf((b - rho * x1) / s) - normal_cdf((a - rho * x1) / s))
            .sum(),
    };
    Ok(v.clamp(0.0, 1.0))
}

/// `U_ρ f(x)` as `∫ U_ρ(x, y) f(y) dγ(y)` by adaptive quadrature of the
/// one-dimensional Mehler kernel.
pub fn ou_apply_kernel(f: &GaussianSetSpec, rho: f64, x1: f64) -> Result<f64> {
    check_rho(rho)?;
    let center = rho * x1;
    let width = 12.0 * (1.0 - rho * rho).sqrt().max(1e-3);
    let (lo_cut, hi_cut) = (center - width, center + width);
    let integrand = |y: f64| mehler_kernel(&[x1], &[y], rho).expect("rho checked") * normal_pdf(y);
    let mut total = 0.0;
    for (a, b) in f.intervals() {
        let (a, b) = (a.max(lo_cut), b.min(hi_cut));
        if a < b {
            total += integrate(integrand, a, b, 1e-12)?;
        }
    }
    Ok(total.clamp(0.0, 1.0))
}

fn outer_expectation<F: Fn(f64) -> f64>(g: F) -> Result<f64> {
    integrate(
        |s| g(s) * normal_pdf(s),
        -OUTER_LIMIT,
        OUTER_LIMIT,
        OUTER_TOL,
    )
}

/// `-H(f(x) | y) = E[-h(U_ρ f(x))]`.
pub fn neg_cond_entropy(f: &GaussianSetSpec, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    outer_expectation(|s| -h(ou_apply(f, rho, s).expect("rho checked")))
}

/// `I(f(x); y) = h(γ(f)) - H(f(x) | y)`.
pub fn gaussian_mi(f: &GaussianSetSpec, rho: f64) -> Result<f64> {
    Ok((h(f.measure()) + neg_cond_entropy(f, rho)?).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BorellCheck {
    pub value_f: f64,
    pub value_halfspace: f64,
    pub pass: bool,
}

/// Compares `E[Ψ(U_ρ f)]` with the same functional of the halfspace of equal
/// measure, for increasing convex `Ψ`.
pub fn borell_check(f: &GaussianSetSpec, psi: &PsiSpec, rho: f64) -> Result<BorellCheck> {
    check_rho(rho)?;
    if !psi.is_increasing_on_nonnegative() {
        return Err(Error::Invalid(format!(
            "psi {} is not increasing",
            psi.name()
        )));
    }
    let half = GaussianSetSpec::halfspace_with_measure(f.measure())?;
    let functional = |set: &GaussianSetSpec| {
        outer_expectation(|s| {
            psi.eval(ou_apply(set, rho, s).expect("rho checked"))
                .expect("U_ρ f lies in [0, 1]")
        })
    };
    let value_f = functional(f)?;
    let value_halfspace = functional(&half)?;
    Ok(BorellCheck {
        value_f,
        value_halfspace,
        pass: value_f <= value_halfspace + 1e-8,
    })
}

/// Random union of one to four disjoint intervals with Gaussian measure
/// `mu`. Gaps and lengths are drawn in probability space, so the first or
/// last interval may be unbounded.
pub fn random_interval_union<R: Rng>(mu: f64, rng: &mut R) -> Result<GaussianSetSpec> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(domain("mu", mu, "(0, 1)"));
    }
    let k = rng.random_range(1..=4usize);
    let mut lengths: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
    let mut gaps: Vec<f64> = (0..=k).map(|_| rng.random_range(0.1..1.0)).collect();
    if rng.random_bool(0.25) {
        gaps[0] = 0.0;
    }
    if rng.random_bool(0.25) && (k > 1 || gaps[0] > 0.0) {
        gaps[k] = 0.0;
    }
    let ls: f64 = lengths.iter().sum();
    let gs: f64 = gaps.iter().sum();
    lengths.iter_mut().for_each(|l| *l *= mu / ls);
    gaps.iter_mut().for_each(|g| *g *= (1.0 - mu) / gs);
    let to_x = |u: f64| {
        if u <= 0.0 {
            f64::NEG_INFINITY
        } else if u >= 1.0 {
            f64::INFINITY
        } else {
            normal_quantile(u).expect("u in (0, 1)")
        }
    };
    let mut u = 0.0;
    let mut intervals = Vec::with_capacity(k);
    for i in 0..k {
        u += gaps[i];
        let a = if i == 0 && gaps[0] == 0.0 { 0.0 } else { u };
        u += lengths[i];
        let b = if i == k - 1 && gaps[k] == 0.0 { 1.0 } else { u };
        intervals.push((to_x(a), to_x(b)));
    }
    GaussianSetSpec::interval_union(intervals)
}

/// `N`, `n` and `R = sqrt(N - n - 3)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitParams {
    pub big_n: usize,
    pub n: usize,
    pub radius: f64,
}

impl LimitParams {
    pub fn new(big_n: usize, n: usize) -> Result<Self> {
        if n == 0 || big_n < n + 4 {
            return Err(Error::Range(format!(
                "need n >= 1 and N >= n + 4, got N = {big_n}, n = {n}"
            )));
        }
        Ok(Self {
            big_n,
            n,
            radius: ((big_n - n - 3) as f64).sqrt(),
        })
    }

    /// `N - n`, the dimension of the complementary factor's ambient space.
    pub fn codim(&self) -> usize {
        self.big_n - self.n
    }
}

/// `ln |S^{d-1}|` for the unit sphere in `R^d`.
pub fn ln_unit_sphere_area(d: usize) -> f64 {
    let half = d as f64 / 2.0;
    std::f64::consts::LN_2 + half * PI.ln() - libm::lgamma(half)
}

/// `ln |B^n|` for the unit ball in `R^n`.
pub fn ln_unit_ball_volume(n: usize) -> f64 {
    let half = n as f64 / 2.0;
    half * PI.ln() - libm::lgamma(half + 1.0)
}

fn check_ball(v: &[f64], params: &LimitParams, what: &str) -> Result<f64> {
    if v.len() != params.n {
        return Err(Error::Invalid(format!(
            "{what} has {} components, expected {}",
            v.len(),
            params.n
        )));
    }
    let frac = dot(v, v) / (params.radius * params.radius);
    if frac > 1.0 + 1e-12 {
        return Err(Error::Range(format!(
            "|{what}| exceeds R = {}",
            params.radius
        )));
    }
    Ok((1.0 - frac).max(0.0))
}

/// Returns `(A(y,z), 1 - |y|²/R², 1 - |z|²/R²)`.
fn a_parts(y: &[f64], z: &[f64], rho: f64, params: &LimitParams) -> Result<(f64, f64, f64)> {
    check_rho(rho)?;
    let cy = check_ball(y, params, "y")?;
    let cz = check_ball(z, params, "z")?;
    let r2 = params.radius * params.radius;
    let b = (1.0 + rho * rho - 2.0 * rho / r2 * dot(y, z)) / 2.0;
    let mut disc = b * b - rho * rho * cy * cz;
    if disc < 0.0 {
        if disc < -1e-12 {
            return Err(Error::Range(format!("negative discriminant {disc}")));
        }
        disc = 0.0;
    }
    Ok((b + disc.sqrt(), cy, cz))
}

/// Larger root of `A² - (1 + ρ² - 2ρ⟨y,z⟩/R²) A + ρ²(1 - |y|²/R²)(1 - |z|²/R²) = 0`.
pub fn a_factor(y: &[f64], z: &[f64], rho: f64, params: &LimitParams) -> Result<f64> {
    a_parts(y, z, rho, params).map(|p| p.0)
}

/// `ρ (1 - |y|²/R²)^{1/2} (1 - |z|²/R²)^{1/2} / A(y,z)`.
pub fn r_factor(y: &[f64], z: &[f64], rho: f64, params: &LimitParams) -> Result<f64> {
    let (a, cy, cz) = a_parts(y, z, rho, params)?;
    Ok(if a > 0.0 {
        rho * (cy * cz).sqrt() / a
    } else {
        0.0
    })
}

/// `(1-ρ²)^{1-n/2} / ((1 - r²) A^{(N-n)/2})`.
pub fn u_rho_n(y: &[f64], z: &[f64], rho: f64, params: &LimitParams) -> Result<f64> {
    let (a, cy, cz) = a_parts(y, z, rho, params)?;
    let r = rho * (cy * cz).sqrt() / a;
    let n = params.n as f64;
    let ln = (1.0 - n / 2.0) * (1.0 - rho * rho).ln()
        - (1.0 - r * r).ln()
        - params.codim() as f64 / 2.0 * a.ln();
    Ok(ln.exp())
}

/// `R (1-ρ²)^{1-n/2} / (|S^{N-n-1}| |u - ρv|^{N-n})` for `u, v` on `S^{N-1}_R`.
pub fn q_rho(u: &[f64], v: &[f64], rho: f64, params: &LimitParams) -> Result<f64> {
    check_rho(rho)?;
    for (name, p) in [("u", u), ("v", v)] {
        if p.len() != params.big_n {
            return Err(Error::Invalid(format!("{name} must have N components")));
        }
        if (dot(p, p).sqrt() - params.radius).abs() > 1e-9 * params.radius.max(1.0) {
            return Err(Error::Range(format!(
                "{name} is not on the sphere of radius R"
            )));
        }
    }
    let dist2: f64 = u.iter().zip(v).map(|(a, b)| (a - rho * b).powi(2)).sum();
    let n = params.n as f64;
    let d = params.codim();
    let ln = params.radius.ln() + (1.0 - n / 2.0) * (1.0 - rho * rho).ln()
        - ln_unit_sphere_area(d)
        - d as f64 / 2.0 * dist2.ln();
    Ok(ln.exp())
}

/// `R (1 - r²) / (|S^{d-1}| |w - r x|^d)` for `w, x` on `S^{d-1}_R`.
pub fn poisson_factor(w: &[f64], x: &[f64], r: f64, radius: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&r) {
        return Err(domain("r", r, "[0, 1)"));
    }
    let d = w.len();
    let dist2: f64 = w.iter().zip(x).map(|(a, b)| (a - r * b).powi(2)).sum();
    let ln =
        radius.ln() + (1.0 - r * r).ln() - ln_unit_sphere_area(d) - d as f64 / 2.0 * dist2.ln();
    Ok(ln.exp())
}

fn random_sphere_point(rng: &mut ChaCha8Rng, d: usize, radius: f64) -> Vec<f64> {
    loop {
        let z: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dot(&z, &z).sqrt();
        if norm > 1e-12 {
            return z.into_iter().map(|c| c * radius / norm).collect();
        }
    }
}

fn random_ball_point(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> Vec<f64> {
    let scale = rng.random::<f64>().powf(1.0 / n as f64);
    random_sphere_point(rng, n, radius * scale)
}

/// `∫_{S_R^{d-1}} P(w, x) ds(x)` by Monte Carlo with `w` fixed at `R e_1`.
/// The integral does not depend on `R`.
pub fn poisson_factor_mc(
    d: usize,
    r: f64,
    radius: f64,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if d < 2 || samples < 2 {
        return Err(Error::Range("need d >= 2 and at least two samples".into()));
    }
    if radius.is_nan() || radius <= 0.0 {
        return Err(domain("radius", radius, "(0, inf)"));
    }
    poisson_factor(&vec![radius; d], &vec![radius; d], r, radius)?;
    let mut w = vec![0.0; d];
    w[0] = radius;
    let area = (ln_unit_sphere_area(d) + (d - 1) as f64 * radius.ln()).exp();
    let est = estimate_parallel(samples, seed, |rng| {
        let x = random_sphere_point(rng, d, radius);
        poisson_factor(&w, &x, r, radius).expect("r checked")
    });
    Ok(est.scaled(area))
}

/// Point on `S^{N-1}_R` assembled from `y ∈ B_R^n` and `w ∈ S_R^{N-n-1}`.
pub fn compose_point(y: &[f64], w: &[f64], params: &LimitParams) -> Result<Vec<f64>> {
    let c = check_ball(y, params, "y")?;
    Ok(y.iter()
        .copied()
        .chain(w.iter().map(|x| x * c.sqrt()))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorCheck {
    pub q: f64,
    pub product: f64,
    pub rel_err: f64,
}

/// `Q_ρ(u, v)` versus `U_{ρ,N}(y, z) · R(1-r²)/(|S^{N-n-1}| |w - r x|^{N-n})`
/// on one random decomposition.
pub fn factor_kernel_check(
    rho: f64,
    params: &LimitParams,
    rng: &mut ChaCha8Rng,
) -> Result<FactorCheck> {
    let (n, d, radius) = (params.n, params.codim(), params.radius);
    let y = random_ball_point(rng, n, radius);
    let z = random_ball_point(rng, n, radius);
    let w = random_sphere_point(rng, d, radius);
    let x = random_sphere_point(rng, d, radius);
    let u = compose_point(&y, &w, params)?;
    let v = compose_point(&z, &x, params)?;
    let q = q_rho(&u, &v, rho, params)?;
    let r = r_factor(&y, &z, rho, params)?;
    let product = u_rho_n(&y, &z, rho, params)? * poisson_factor(&w, &x, r, radius)?;
    Ok(FactorCheck {
        q,
        product,
        rel_err: (q - product).abs() / q.abs(),
    })
}

/// `trials` runs of [`factor_kernel_check`] with `ρ` uniform in `[0, 0.95)`;
/// trial `t` uses stream `t` of `seed`.
pub fn factor_identity_trials(
    params: &LimitParams,
    trials: usize,
    seed: u64,
) -> Result<Vec<FactorCheck>> {
    (0..trials)
        .map(|t| {
            let mut rng = crate::rng::trial_rng(seed, t as u64);
            let rho = rng.random_range(0.0..0.95);
            factor_kernel_check(rho, params, &mut rng)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ABoundCheck {
    pub samples: usize,
    pub violations: usize,
    pub worst_gap: f64,
}

/// Samples `y, z` uniformly in `B_R^n` and `ρ` in `[0, 1)` and counts
/// violations of `(1 - |y|²/R²)^{1/2}(1 - |z|²/R²)^{1/2} <= A(y,z) + 1e-12`.
pub fn a_bound_check(params: &LimitParams, samples: usize, seed: u64) -> Result<ABoundCheck> {
    let (n, radius) = (params.n, params.radius);
    let gaps: Vec<f64> = crate::montecarlo::sample_parallel(samples, seed, |rng| {
        let y = random_ball_point(rng, n, radius);
        let z = random_ball_point(rng, n, radius);
        let rho = rng.random::<f64>();
        let (a, cy, cz) = a_parts(&y, &z, rho, params).expect("valid sample");
        (cy * cz).sqrt() - a
    });
    Ok(ABoundCheck {
        samples,
        violations: gaps.iter().filter(|&&g| g > 1e-12).count(),
        worst_gap: gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub big_n: usize,
    pub value: f64,
    pub reference: f64,
    pub abs_err: f64,
    pub rel_err: f64,
}

/// `U_{ρ,N}(y, z)` against the Mehler kernel for each `N`.
pub fn mehler_convergence(
    y: &[f64],
    z: &[f64],
    rho: f64,
    big_ns: &[usize],
) -> Result<Vec<ConvergenceRow>> {
    let reference = mehler_kernel(y, z, rho)?;
    big_ns
        .iter()
        .map(|&big_n| {
            let params = LimitParams::new(big_n, y.len())?;
            let value = u_rho_n(y, z, rho, &params)?;
            let abs_err = (value - reference).abs();
            Ok(ConvergenceRow {
                big_n,
                value,
                reference,
                abs_err,
                rel_err: abs_err / reference,
            })
        })
        .collect()
}

/// `A^{(N-n)/2}` against `exp((ρ²(|y|²+|z|²) - 2ρ⟨y,z⟩) / (2(1-ρ²)))`.
pub fn a_power_convergence(
    y: &[f64],
    z: &[f64],
    rho: f64,
    big_ns: &[usize],
) -> Result<Vec<ConvergenceRow>> {
    check_rho(rho)?;
    let q = rho * rho * (dot(y, y) + dot(z, z)) - 2.0 * rho * dot(y, z);
    let reference = (q / (2.0 * (1.0 - rho * rho))).exp();
    big_ns
        .iter()
        .map(|&big_n| {
            let params = LimitParams::new(big_n, y.len())?;
            let a = a_factor(y, z, rho, &params)?;
            let value = (params.codim() as f64 / 2.0 * a.ln()).exp();
            let abs_err = (value - reference).abs();
            Ok(ConvergenceRow {
                big_n,
                value,
                reference,
                abs_err,
                rel_err: abs_err / reference,
            })
        })
        .collect()
}

/// `N,value,reference,abs_err,rel_err` rows.
pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut out = String::from("N,value,reference,abs_err,rel_err\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.big_n, r.value, r.reference, r.abs_err, r.rel_err
        );
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompositionCheck {
    /// `∫_{S_R^{N-1}} g ds`.
    pub lhs: McEstimate,
    /// Right side with the weight `(1 - |x|²/R²)^{(N-n-3)/2}`.
    pub rhs_quoted: McEstimate,
    /// Right side with the weight `(1 - |x|²/R²)^{(N-n-2)/2}`.
    pub rhs_exact: McEstimate,
    pub ratio_quoted: f64,
    pub ratio_quoted_err: f64,
    pub ratio_exact: f64,
    pub ratio_exact_err: f64,
}

fn ratio_with_err(a: &McEstimate, b: &McEstimate) -> (f64, f64) {
    let ratio = a.mean / b.mean;
    let rel = ((a.std_err / a.mean).powi(2) + (b.std_err / b.mean).powi(2)).sqrt();
    (ratio, ratio.abs() * rel)
}

/// Both sides of the ball-times-sphere integration formula for `g`, by
/// Monte Carlo. The surface parametrization `u = (x, (1 - |x|²/R²)^{1/2} v)`
/// has Jacobian `(1 - |x|²/R²)^{(N-n-2)/2}`; the `(N-n-3)/2` weight is
/// evaluated alongside for comparison.
pub fn decomposition_integral_check<G>(
    g: G,
    params: &LimitParams,
    samples: usize,
    seed: u64,
) -> Result<DecompositionCheck>
where
    G: Fn(&[f64]) -> f64 + Sync,
{
    if samples < 2 {
        return Err(Error::Range("need at least two samples".into()));
    }
    let (big_n, n, d, radius) = (params.big_n, params.n, params.codim(), params.radius);
    let ln_r = radius.ln();
    let area_full = (ln_unit_sphere_area(big_n) + (big_n - 1) as f64 * ln_r).exp();
    let area_fibre = (ln_unit_sphere_area(d) + (d - 1) as f64 * ln_r).exp();
    let ball = (ln_unit_ball_volume(n) + n as f64 * ln_r).exp();

    let lhs = estimate_parallel(samples, seed, |rng| {
        g(&random_sphere_point(rng, big_n, radius))
    })
    .scaled(area_full);
    let rhs = |exponent: f64, stream: u64| {
        estimate_parallel(samples, seed ^ stream, |rng| {
            let x = random_ball_point(rng, n, radius);
            let v = random_sphere_point(rng, d, radius);
            let c = (1.0 - dot(&x, &x) / (radius * radius)).max(0.0);
            let u: Vec<f64> = x
                .iter()
                .copied()
                .chain(v.iter().map(|t| t * c.sqrt()))
                .collect();
            g(&u) * c.powf(exponent)
        })
        .scaled(ball * area_fibre)
    };
    let rhs_quoted = rhs((big_n - n - 3) as f64 / 2.0, 0x5155);
    let rhs_exact = rhs((big_n - n - 2) as f64 / 2.0, 0xe8ac);
    let (ratio_quoted, ratio_quoted_err) = ratio_with_err(&lhs, &rhs_quoted);
    let (ratio_exact, ratio_exact_err) = ratio_with_err(&lhs, &rhs_exact);
    Ok(DecompositionCheck {
        lhs,
        rhs_quoted,
        rhs_exact,
        ratio_quoted,
        ratio_quoted_err,
        ratio_exact,
        ratio_exact_err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::GaussHermite;
    use crate::rng::trial_rng;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn mehler_basics() {
        assert_eq!(mehler_kernel(&[0.3, -1.0], &[2.0, 0.5], 0.0).unwrap(), 1.0);
        let a = mehler_kernel(&[0.3, -1.0], &[2.0, 0.5], 0.4).unwrap();
        let b = mehler_kernel(&[2.0, 0.5], &[0.3, -1.0], 0.4).unwrap();
        assert_eq!(a, b);
        assert!(mehler_kernel(&[0.0], &[0.0], 1.0).is_err());
        let gh = GaussHermite::new(200);
        let mass = gh.expect(|y| mehler_kernel(&[0.7], &[y], 0.5).unwrap());
        assert!((mass - 1.0).abs() < 1e-8);
        // E[y | x] is ρx for the correct sign and -ρx for the other one
        let m = gh.expect(|y| y * mehler_kernel(&[0.7], &[y], 0.5).unwrap());
        let p = gh.expect(|y| y * mehler_kernel_printed(&[0.7], &[y], 0.5).unwrap());
        assert!((m - 0.35).abs() < 1e-8);
        assert!((p + 0.35).abs() < 1e-8);
    }

    #[test]
    fn kernel_path_matches_definition() {
        let sets = [
            GaussianSetSpec::halfspace(0.3).unwrap(),
            GaussianSetSpec::halfspace(-1.2).unwrap(),
            GaussianSetSpec::slab(0.6745).unwrap(),
            GaussianSetSpec::interval_union(vec![(f64::NEG_INFINITY, -1.0), (0.2, 0.9)]).unwrap(),
        ];
        for f in &sets {
            for rho in [0.0, 0.3, 0.6, 0.9, 0.99] {
                for x1 in [-2.5, -0.4, 0.0, 0.7, 3.0] {
                    let a = ou_apply(f, rho, x1).unwrap();
                    let b = ou_apply_kernel(f, rho, x1).unwrap();
                    assert!((a - b).abs() < 1e-7, "{f:?} rho={rho} x={x1}: {a} vs {b}");
                }
            }
        }
        // U_ρ preserves the mean
        let gh = GaussHermite::new(200);
        for f in &sets {
            let mean = gh.expect(|x| ou_apply(f, 0.5, x).unwrap());
            assert!((mean - f.measure()).abs() < 1e-8);
        }
    }

    #[test]
    fn ou_cases() {
        let f = GaussianSetSpec::halfspace(0.0).unwrap();
        for rho in [0.0, 0.4, 0.95] {
            assert!((ou_apply(&f, rho, 0.0).unwrap() - 0.5).abs() < 1e-15);
        }
        let slab = GaussianSetSpec::slab(1.0).unwrap();
        for x in [-3.0, 0.0, 2.0] {
            assert!((ou_apply(&slab, 0.0, x).unwrap() - slab.measure()).abs() < 1e-15);
        }
        let t = GaussianSetSpec::halfspace(0.5).unwrap();
        assert!(ou_apply(&t, 0.999, 0.8).unwrap() > 0.999);
        assert!(ou_apply(&t, 1.0, 0.8).is_err());
    }

    #[test]
    fn set_validation() {
        assert!(GaussianSetSpec::interval_union(vec![(0.0, 1.0), (0.5, 2.0)]).is_err());
        assert!(GaussianSetSpec::interval_union(vec![(1.0, 0.0)]).is_err());
        let h0 = GaussianSetSpec::halfspace_with_measure(0.2).unwrap();
        assert!((h0.measure() - 0.2).abs() < 1e-12);
        assert_eq!(
            GaussianSetSpec::halfspace_with_measure(0.0)
                .unwrap()
                .measure(),
            0.0
        );
    }

    #[test]
    fn entropy_cases() {
        let slab = GaussianSetSpec::slab(0.6745).unwrap();
        let v0 = neg_cond_entropy(&slab, 0.0).unwrap();
        assert!((v0 + h(slab.measure())).abs() < 1e-9);
        let half = GaussianSetSpec::halfspace_with_measure(slab.measure()).unwrap();
        assert!(neg_cond_entropy(&half, 0.6).unwrap() >= neg_cond_entropy(&slab, 0.6).unwrap());
        let empty = GaussianSetSpec::interval_union(vec![]).unwrap();
        assert!(gaussian_mi(&empty, 0.7).unwrap().abs() < 1e-9);
        assert!(gaussian_mi(&slab, 0.0).unwrap().abs() < 1e-9);
        let mi = gaussian_mi(&GaussianSetSpec::halfspace(0.0).unwrap(), 1.0 - 2.0 * 0.11).unwrap();
        assert!(mi < 1.0 - h(0.11));
    }

    #[test]
    fn entropy_monotone_in_rho_and_jensen() {
        let sets = [
            GaussianSetSpec::slab(0.4).unwrap(),
            GaussianSetSpec::halfspace(0.8).unwrap(),
            GaussianSetSpec::interval_union(vec![(-2.0, -1.0), (0.0, 0.5), (1.5, f64::INFINITY)])
                .unwrap(),
        ];
        for f in &sets {
            let mut prev = f64::NEG_INFINITY;
            for k in 0..10 {
                let v = neg_cond_entropy(f, 0.1 * k as f64).unwrap();
                assert!(v >= prev - 1e-9);
                assert!(v >= -h(f.measure()) - 1e-9);
                prev = v;
            }
        }
    }

    #[test]
    fn borell_cases() {
        let half = GaussianSetSpec::halfspace(0.4).unwrap();
        let c = borell_check(&half, &PsiSpec::Square, 0.5).unwrap();
        assert!((c.value_f - c.value_halfspace).abs() < 1e-9 && c.pass);
        let slab = GaussianSetSpec::slab(0.6745).unwrap();
        assert!(borell_check(&slab, &PsiSpec::Square, 0.5).unwrap().pass);
        assert!(
            borell_check(&slab, &PsiSpec::abs_power(3.0).unwrap(), 0.8)
                .unwrap()
                .pass
        );
        let zero = borell_check(&slab, &PsiSpec::Square, 0.0).unwrap();
        assert!((zero.value_f - zero.value_halfspace).abs() < 1e-9);
        assert!(borell_check(&slab, &PsiSpec::NegBinaryEntropy, 0.5).is_err());
    }

    #[test]
    fn random_sets_have_requested_measure() {
        let mut rng = trial_rng(1, 0);
        for _ in 0..200 {
            let mu = rng.random_range(0.05..0.95);
            let f = random_interval_union(mu, &mut rng).unwrap();
            assert!((f.measure() - mu).abs() < 1e-12, "{f:?}");
        }
    }

    #[test]
    fn limit_params() {
        let p = LimitParams::new(9, 2).unwrap();
        assert_eq!(p.radius, 2.0);
        assert!(LimitParams::new(5, 2).is_err());
        assert!((ln_unit_sphere_area(3) - (4.0 * PI).ln()).abs() < 1e-14);
        assert!((ln_unit_sphere_area(2) - (2.0 * PI).ln()).abs() < 1e-14);
        assert!((ln_unit_ball_volume(3) - (4.0 / 3.0 * PI).ln()).abs() < 1e-14);
        assert!(ln_unit_sphere_area(1000).is_finite());
    }

    #[test]
    fn a_and_r_at_origin() {
        let p = LimitParams::new(20, 2).unwrap();
        let o = [0.0, 0.0];
        for rho in [0.0, 0.3, 0.8] {
            assert!((a_factor(&o, &o, rho, &p).unwrap() - 1.0).abs() < 1e-15);
            assert!((r_factor(&o, &o, rho, &p).unwrap() - rho).abs() < 1e-15);
            let u = u_rho_n(&o, &o, rho, &p).unwrap();
            assert!((u - (1.0 - rho * rho).powf(-1.0)).abs() < 1e-12);
        }
        assert!(a_factor(&[5.0, 0.0], &o, 0.5, &p).is_err());
        assert!(a_factor(&[0.0], &o, 0.5, &p).is_err());
    }

    #[test]
    fn mehler_limit_at_test_point() {
        let (y, z) = ([0.5, 0.0], [0.2, 0.3]);
        let rows = mehler_convergence(&y, &z, 0.5, &[50, 200, 1000]).unwrap();
        assert!(rows.windows(2).all(|w| w[1].abs_err < w[0].abs_err));
        assert!(rows[2].rel_err < 0.05);
        let a_rows = a_power_convergence(&y, &z, 0.5, &[50, 200, 1000]).unwrap();
        assert!(a_rows[2].rel_err < 0.05);
        let csv = convergence_csv(&rows);
        assert!(csv.starts_with("N,value,reference,abs_err,rel_err\n"));
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn factor_identity() {
        let p = LimitParams::new(9, 2).unwrap();
        for c in factor_identity_trials(&p, 100, 5).unwrap() {
            assert!(c.rel_err < 1e-9, "{c:?}");
        }
        let p = LimitParams::new(40, 3).unwrap();
        assert!(factor_identity_trials(&p, 20, 6)
            .unwrap()
            .iter()
            .all(|c| c.rel_err < 1e-9));
    }

    #[test]
    fn poisson_factor_integrates_to_one() {
        for (d, r) in [(3, 0.4), (4, 0.4), (3, 0.7)] {
            let est = poisson_factor_mc(d, r, 1.0, 400_000, 17).unwrap();
            assert!(est.within(1.0, 3.0), "d = {d}: {est:?}");
            let scaled = poisson_factor_mc(d, r, 2.5, 400_000, 17).unwrap();
            assert!((scaled.mean - est.mean).abs() < 1e-9);
        }
    }

    #[test]
    fn a_bound_holds() {
        let p = LimitParams::new(9, 2).unwrap();
        let c = a_bound_check(&p, 20_000, 3).unwrap();
        assert_eq!(c.violations, 0);
    }

    #[test]
    fn decomposition_exponents() {
        let p = LimitParams::new(7, 2).unwrap();
        let one = decomposition_integral_check(|_| 1.0, &p, 400_000, 9).unwrap();
        let sq = decomposition_integral_check(|u| u[0] * u[0], &p, 400_000, 9).unwrap();
        assert!((one.ratio_exact - 1.0).abs() <= 3.0 * one.ratio_exact_err);
        assert!((sq.ratio_exact - 1.0).abs() <= 3.0 * sq.ratio_exact_err);
        // the (N-n-3)/2 weight gives a g-dependent ratio
        let gap = (one.ratio_quoted - sq.ratio_quoted).abs();
        assert!(
            gap > 5.0 * (one.ratio_quoted_err + sq.ratio_quoted_err),
            "{one:?} {sq:?}"
        );
        let again = decomposition_integral_check(|_| 1.0, &p, 400_000, 9).unwrap();
        assert_eq!(one, again);
    }

    proptest! {
        #[test]
        fn a_solves_quadratic_and_r_bounded(
            y in proptest::collection::vec(-1.0..1.0f64, 2),
            z in proptest::collection::vec(-1.0..1.0f64, 2),
            rho in 0.0..0.99f64,
            big_n in 7usize..60,
        ) {
            let p = LimitParams::new(big_n, 2).unwrap();
            let a = a_factor(&y, &z, rho, &p).unwrap();
            let r2 = p.radius * p.radius;
            let b = 1.0 + rho * rho - 2.0 * rho / r2 * dot(&y, &z);
            let c = rho * rho * (1.0 - dot(&y, &y) / r2) * (1.0 - dot(&z, &z) / r2);
            prop_assert!((a * a - b * a + c).abs() < 1e-10);
            let r = r_factor(&y, &z, rho, &p).unwrap();
            prop_assert!(r <= rho + 1e-15 && r >= 0.0);
            let u1 = u_rho_n(&y, &z, rho, &p).unwrap();
            let u2 = u_rho_n(&z, &y, rho, &p).unwrap();
            prop_assert!(u1 > 0.0 && (u1 - u2).abs() <= 1e-12 * u1);
        }
    }
}
