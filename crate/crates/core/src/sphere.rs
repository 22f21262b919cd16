//! Discretized spheres: point sets closed under chosen reflections, the
//! symmetric decreasing rearrangement, two-point polarization and kernel
//! functionals `J(f) = ∫ Ψ(Kf) dm`.
//!
//! On `S^1` the grid `θ_j = 2πj/M` is closed under every reflection across a
//! line at angle `πℓ/M`, and inner products come from a table indexed by
//! index difference, so `⟨x, y⟩ = ⟨σx, σy⟩` holds bit for bit. On `S^{n-1}`
//! with `n >= 3` a sampled set is built in pairs `(p, σp)` for one `σ`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entropy::{h, kahan_sum, PsiSpec};
use crate::error::{domain, Error, Result};
use crate::montecarlo::McEstimate;
use crate::quadrature::integrate;
use crate::rng::trial_rng;

/// Points closer than this to a reflecting hyperplane count as lying on it.
pub const PLANE_TOLERANCE: f64 = 1e-12;
/// Slack allowed when clamping `Kf` into the domain of `Ψ`.
pub const CLAMP_TOLERANCE: f64 = 1e-9;

/// Reflection across the hyperplane through the origin with unit normal
/// `normal`, oriented so the pole lies on the positive side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reflection {
    normal: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Reflection {
    pub fn new(normal: &[f64], pole: &[f64]) -> Result<Self> {
        if normal.len() != pole.len() {
            return Err(Error::Invalid(format!(
                "normal has {} components, pole has {}",
                normal.len(),
                pole.len()
            )));
        }
        let norm = dot(normal, normal).sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Invalid("reflection normal must be nonzero".into()));
        }
        let mut v: Vec<f64> = normal.iter().map(|x| x / norm).collect();
        let side = dot(&v, pole) / dot(pole, pole).sqrt();
        if side.abs() <= 1e-9 {
            return Err(Error::Invalid("hyperplane passes through the pole".into()));
        }
        if side < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        Ok(Self { normal: v })
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    /// `σx = x - 2⟨x, v⟩v`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let c = 2.0 * dot(x, &self.normal);
        x.iter().zip(&self.normal).map(|(a, v)| a - c * v).collect()
    }

    /// `+1` on the pole's side, `-1` on the other, `0` on the hyperplane.
    pub fn side(&self, x: &[f64]) -> i8 {
        let s = dot(x, &self.normal);
        if s.abs() <= PLANE_TOLERANCE {
            0
        } else if s > 0.0 {
            1
        } else {
            -1
        }
    }

    fn same_as(&self, other: &Reflection) -> bool {
        self.normal.len() == other.normal.len()
            && self
                .normal
                .iter()
                .zip(&other.normal)
                .all(|(a, b)| (a - b).abs() <= 1e-12)
    }
}

/// A reflection together with its action on a point set.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportedReflection {
    pub reflection: Reflection,
    /// `image[i]` is the index of `σ p_i`.
    pub image: Vec<usize>,
    /// Side of each point, as in [`Reflection::side`].
    pub side: Vec<i8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    CircleGrid { m: usize },
    Sampled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpherePointSet {
    n: usize,
    radius: f64,
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
    pole: Vec<f64>,
    layout: Layout,
    reflections: Vec<SupportedReflection>,
    /// Grid only: `cos(2π d / M)` for `d` in `0..M`, symmetric in `d ↔ M - d`.
    diff_cos: Option<Vec<f64>>,
}

/// `M` equally spaced points on the unit circle with weights `1/M`, closed
/// under the `M - 1` reflections across lines at angles `πℓ/M`.
pub fn circle_grid(m: usize) -> Result<SpherePointSet> {
    if !m.is_multiple_of(2) || m < 8 {
        return Err(Error::Range(format!(
            "grid size must be even and >= 8, got {m}"
        )));
    }
    let angle = |j: usize| 2.0 * PI * j as f64 / m as f64;
    let diff_cos: Vec<f64> = (0..m).map(|d| angle(d.min(m - d)).cos()).collect();
    let points: Vec<Vec<f64>> = (0..m)
        .map(|j| {
            let d = j.min(m - j);
            let s = angle(d).sin();
            vec![diff_cos[j], if j <= m / 2 { s } else { -s }]
        })
        .collect();
    let pole = vec![1.0, 0.0];
    let reflections = (1..m)
        .map(|l| {
            let phi = PI * l as f64 / m as f64;
            let reflection = Reflection {
                normal: vec![phi.sin(), -phi.cos()],
            };
            let image = (0..m).map(|j| (l + m - j) % m).collect();
            // ⟨p_j, v⟩ = sin(π(ℓ - 2j)/M)
            let side = (0..m)
                .map(|j| {
                    let r = (l as i64 - 2 * j as i64).rem_euclid(2 * m as i64);
                    match r {
                        0 => 0,
                        r if r == m as i64 => 0,
                        r if r < m as i64 => 1,
                        _ => -1,
                    }
                })
                .collect();
            SupportedReflection {
                reflection,
                image,
                side,
            }
        })
        .collect();
    Ok(SpherePointSet {
        n: 2,
        radius: 1.0,
        points,
        weights: vec![1.0 / m as f64; m],
        pole,
        layout: Layout::CircleGrid { m },
        reflections,
        diff_cos: Some(diff_cos),
    })
}

/// `m / 2` uniform points on `S^{n-1}` (normalized Gaussian vectors) and
/// their images under the reflection with the given normal, weights `1/m`.
pub fn sphere_sample(n: usize, m: usize, seed: u64, normal: &[f64]) -> Result<SpherePointSet> {
    if n < 3 {
        return Err(Error::Range(format!("sampled sets need n >= 3, got {n}")));
    }
    if !m.is_multiple_of(2) || m == 0 {
        return Err(Error::Range(format!(
            "point count must be even and positive, got {m}"
        )));
    }
    let mut pole = vec![0.0; n];
    pole[0] = 1.0;
    let reflection = Reflection::new(normal, &pole)?;
    let mut rng = trial_rng(seed, 0);
    let mut points = Vec::with_capacity(m);
    for _ in 0..m / 2 {
        let p = loop {
            let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let r = dot(&z, &z).sqrt();
            if r > 1e-12 {
                break z.into_iter().map(|x| x / r).collect::<Vec<f64>>();
            }
        };
        let q = reflection.apply(&p);
        points.push(p);
        points.push(q);
    }
    let image = (0..m).map(|i| i ^ 1).collect();
    let side = points.iter().map(|p| reflection.side(p)).collect();
    Ok(SpherePointSet {
        n,
        radius: 1.0,
        points,
        weights: vec![1.0 / m as f64; m],
        pole,
        layout: Layout::Sampled,
        reflections: vec![SupportedReflection {
            reflection,
            image,
            side,
        }],
        diff_cos: None,
    })
}

impl SpherePointSet {
    /// Ambient dimension (the set lies on `S^{n-1}`).
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        kahan_sum(self.weights.iter().copied())
    }

    pub fn pole(&self) -> &[f64] {
        &self.pole
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn reflections(&self) -> &[SupportedReflection] {
        &self.reflections
    }

    /// Grid reflection across the line at angle `πℓ/M`, `1 <= ℓ < M`.
    pub fn grid_reflection(&self, l: usize) -> Result<&Reflection> {
        match self.layout {
            Layout::CircleGrid { m } if (1..m).contains(&l) => {
                Ok(&self.reflections[l - 1].reflection)
            }
            _ => Err(Error::NotClosed),
        }
    }

    pub fn supported(&self, sigma: &Reflection) -> Result<&SupportedReflection> {
        self.reflections
            .iter()
            .find(|s| s.reflection.same_as(sigma))
            .ok_or(Error::NotClosed)
    }

    /// Same points with every weight multiplied by `factor`.
    pub fn with_total_weight(mut self, total: f64) -> Result<Self> {
        if !(total > 0.0 && total.is_finite()) {
            return Err(domain("total weight", total, "(0, inf)"));
        }
        let scale = total / self.total_weight();
        self.weights.iter_mut().for_each(|w| *w *= scale);
        Ok(self)
    }

    /// Same directions on the sphere of radius `radius`.
    pub fn with_radius(mut self, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(domain("radius", radius, "(0, inf)"));
        }
        let scale = radius / self.radius;
        for p in self
            .points
            .iter_mut()
            .chain(std::iter::once(&mut self.pole))
        {
            p.iter_mut().for_each(|x| *x *= scale);
        }
        self.radius = radius;
        Ok(self)
    }

    /// `⟨p_i, p_j⟩ / R^2`.
    pub fn cosine(&self, i: usize, j: usize) -> f64 {
        match (&self.diff_cos, self.layout) {
            (Some(table), Layout::CircleGrid { m }) => table[(i + m - j) % m],
            _ => dot(&self.points[i], &self.points[j]) / (self.radius * self.radius),
        }
    }

    /// Polar angle of point `i` measured from the pole.
    pub fn polar_angle(&self, i: usize) -> f64 {
        match self.layout {
            Layout::CircleGrid { m } => 2.0 * PI * i.min(m - i) as f64 / m as f64,
            Layout::Sampled => {
                let c = dot(&self.points[i], &self.pole) / (self.radius * self.radius);
                c.clamp(-1.0, 1.0).acos()
            }
        }
    }

    /// Points ordered by polar angle; grid ties put `+θ` before `-θ`, other
    /// ties fall back to the index.
    pub fn polar_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        match self.layout {
            Layout::CircleGrid { m } => {
                order.sort_by_key(|&j| (j.min(m - j), j > m / 2, j));
            }
            Layout::Sampled => {
                let angles: Vec<f64> = (0..self.len()).map(|i| self.polar_angle(i)).collect();
                order.sort_by(|&a, &b| angles[a].total_cmp(&angles[b]).then(a.cmp(&b)));
            }
        }
        order
    }
}

/// `ω(C(θ))`: normalized measure of the cap of polar angle below `theta` on
/// `S^{n-1}`.
pub fn cap_measure(n: usize, theta: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Range(format!("cap measure needs n >= 2, got {n}")));
    }
    if !(0.0..=PI).contains(&theta) {
        return Err(domain("theta", theta, "[0, pi]"));
    }
    if n == 2 {
        return Ok(theta / PI);
    }
    let p = (n - 2) as i32;
    let density = |t: f64| t.sin().powi(p);
    let total = integrate(density, 0.0, PI, 1e-14)?;
    let part = integrate(density, 0.0, theta, 1e-14)?;
    Ok((part / total).clamp(0.0, 1.0))
}

/// Values in `[0, 1]`, one per point of a [`SpherePointSet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphericalField {
    values: Vec<f64>,
}

impl SphericalField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(&v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(domain("field value", v, "[0, 1]"));
        }
        Ok(Self { values })
    }

    pub fn constant(len: usize, c: f64) -> Result<Self> {
        Self::new(vec![c; len])
    }

    /// Independent fair 0/1 values.
    pub fn random_binary<R: Rng>(len: usize, rng: &mut R) -> Self {
        Self {
            values: (0..len)
                .map(|_| rng.random_bool(0.5) as u8 as f64)
                .collect(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_binary(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    /// Weighted mean against the set's weights, normalized.
    pub fn mean(&self, set: &SpherePointSet) -> f64 {
        kahan_sum(self.values.iter().zip(set.weights()).map(|(v, w)| v * w)) / set.total_weight()
    }

    /// `f ∘ σ`.
    pub fn compose(&self, sigma: &SupportedReflection) -> Self {
        Self {
            values: sigma.image.iter().map(|&j| self.values[j]).collect(),
        }
    }

    /// Weighted `L^1` distance.
    pub fn l1_distance(&self, other: &Self, set: &SpherePointSet) -> f64 {
        kahan_sum(
            self.values
                .iter()
                .zip(&other.values)
                .zip(set.weights())
                .map(|((a, b), w)| w * (a - b).abs()),
        )
    }
}

fn check_len(set: &SpherePointSet, f: &SphericalField) -> Result<()> {
    if set.len() == f.len() {
        Ok(())
    } else {
        Err(Error::Invalid(format!(
            "field has {} values for {} points",
            f.len(),
            set.len()
        )))
    }
}

/// Symmetric decreasing rearrangement: values sorted in decreasing order
/// and placed along [`SpherePointSet::polar_order`]. Assumes equal weights,
/// which both constructions provide.
pub fn rearrange(set: &SpherePointSet, f: &SphericalField) -> Result<SphericalField> {
    check_len(set, f)?;
    let mut sorted = f.values.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut values = vec![0.0; f.len()];
    for (&i, v) in set.polar_order().iter().zip(sorted) {
        values[i] = v;
    }
    Ok(SphericalField { values })
}

fn polarize_with(sigma: &SupportedReflection, f: &SphericalField) -> SphericalField {
    let values = (0..f.len())
        .map(|i| {
            let (a, b) = (f.values[i], f.values[sigma.image[i]]);
            match sigma.side[i] {
                1 => a.max(b),
                -1 => a.min(b),
                _ => a,
            }
        })
        .collect();
    SphericalField { values }
}

/// Two-point symmetrization: the larger of `f(x)`, `f(σx)` moves to the
/// pole's side; points on the hyperplane keep their value.
pub fn polarize(
    set: &SpherePointSet,
    f: &SphericalField,
    sigma: &Reflection,
) -> Result<SphericalField> {
    check_len(set, f)?;
    Ok(polarize_with(set.supported(sigma)?, f))
}

/// Non-decreasing piecewise-linear function on a uniform grid over `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneTable {
    values: Vec<f64>,
}

impl MonotoneTable {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid(
                "table needs at least two finite values".into(),
            ));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Invalid("kernel table must be non-decreasing".into()));
        }
        Ok(Self { values })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let last = self.values.len() - 1;
        let s = (t.clamp(-1.0, 1.0) + 1.0) / 2.0 * last as f64;
        let k = (s.floor() as usize).min(last - 1);
        let frac = s - k as f64;
        self.values[k] + frac * (self.values[k + 1] - self.values[k])
    }
}

/// Non-decreasing bounded function of the cosine between two points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelSpec {
    /// `(1 - ρ^2) / (1 + ρ^2 - 2ρt)^{n/2}`, the Poisson kernel of `S^{n-1}`.
    Poisson {
        rho: f64,
        n: usize,
    },
    /// `1` for `t >= threshold`, else `0`.
    Step {
        threshold: f64,
    },
    Table(MonotoneTable),
}

impl KernelSpec {
    pub fn poisson(rho: f64, n: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&rho) {
            return Err(domain("rho", rho, "[0, 1)"));
        }
        if n < 2 {
            return Err(Error::Range(format!(
                "Poisson kernel needs n >= 2, got {n}"
            )));
        }
        Ok(Self::Poisson { rho, n })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let t = t.clamp(-1.0, 1.0);
        match self {
            Self::Poisson { rho, n } => {
                // 1 + ρ² - 2ρt >= (1 - ρ)² > 0
                let d = (1.0 + rho * rho - 2.0 * rho * t).max((1.0 - rho) * (1.0 - rho));
                (1.0 - rho * rho) / d.powf(*n as f64 / 2.0)
            }
            Self::Step { threshold } => (t >= *threshold) as u8 as f64,
            Self::Table(table) => table.eval(t),
        }
    }
}

/// Dense operator `(Kf)_i = Σ_j w_j K(⟨p_i, p_j⟩) f_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    len: usize,
    entries: Vec<f64>,
}

impl KernelMatrix {
    pub fn new(set: &SpherePointSet, spec: &KernelSpec) -> Self {
        let len = set.len();
        let entries = match (set.layout, &set.diff_cos) {
            (Layout::CircleGrid { m }, Some(table)) => {
                let by_diff: Vec<f64> = table.iter().map(|&c| spec.eval(c)).collect();
                (0..len * len)
                    .map(|k| {
                        let (i, j) = (k / len, k % len);
                        set.weights[j] * by_diff[(i + m - j) % m]
                    })
                    .collect()
            }
            _ => (0..len)
                .into_par_iter()
                .flat_map_iter(|i| {
                    (0..len).map(move |j| set.weights[j] * spec.eval(set.cosine(i, j)))
                })
                .collect(),
        };
        Self { len, entries }
    }

    pub fn apply(&self, f: &SphericalField) -> Result<Vec<f64>> {
        if f.len() != self.len {
            return Err(Error::Invalid(format!(
                "field has {} values for {} points",
                f.len(),
                self.len
            )));
        }
        Ok(self
            .entries
            .par_chunks(self.len)
            .map(|row| row.iter().zip(&f.values).map(|(k, v)| k * v).sum())
            .collect())
    }
}

pub fn kernel_apply(
    set: &SpherePointSet,
    spec: &KernelSpec,
    f: &SphericalField,
) -> Result<Vec<f64>> {
    check_len(set, f)?;
    KernelMatrix::new(set, spec).apply(f)
}

fn psi_clamped(psi: &PsiSpec, t: f64) -> Result<f64> {
    let (lo, hi) = psi.domain();
    if t < lo - CLAMP_TOLERANCE || t > hi + CLAMP_TOLERANCE || t.is_nan() {
        return Err(domain("kernel output", t, "the domain of psi"));
    }
    psi.eval(t.clamp(lo, hi))
}

/// `J(f) = Σ_i w_i Ψ((Kf)_i)`.
pub fn functional_j(
    set: &SpherePointSet,
    psi: &PsiSpec,
    kernel: &KernelMatrix,
    f: &SphericalField,
) -> Result<f64> {
    let kf = kernel.apply(f)?;
    let terms = kf
        .iter()
        .zip(set.weights())
        .map(|(&t, w)| psi_clamped(psi, t).map(|v| w * v))
        .collect::<Result<Vec<f64>>>()?;
    Ok(kahan_sum(terms))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarizationCheck {
    pub j_before: f64,
    pub j_after: f64,
    /// `j_after >= j_before - 1e-10`.
    pub pass: bool,
    /// `max |Kf(x) + Kf(σx) - Kf^σ(x) - Kf^σ(σx)|`.
    pub sum_equal_error: f64,
    /// `max (|Kf(x) - Kf(σx)| - |Kf^σ(x) - Kf^σ(σx)|)`, at most `1e-10` when
    /// the pointwise inequality holds.
    pub diff_bigger_violation: f64,
    pub lemmas_pass: bool,
}

pub fn polarization_inequality_check(
    set: &SpherePointSet,
    f: &SphericalField,
    sigma: &Reflection,
    kernel: &KernelMatrix,
    psi: &PsiSpec,
) -> Result<PolarizationCheck> {
    check_len(set, f)?;
    let support = set.supported(sigma)?;
    let g = polarize_with(support, f);
    let kf = kernel.apply(f)?;
    let kg = kernel.apply(&g)?;
    let mut sum_err = 0.0f64;
    let mut diff_violation = f64::NEG_INFINITY;
    for (i, &s) in support.image.iter().enumerate() {
        sum_err = sum_err.max((kf[i] + kf[s] - kg[i] - kg[s]).abs());
        diff_violation = diff_violation.max((kf[i] - kf[s]).abs() - (kg[i] - kg[s]).abs());
    }
    let j_before = functional_j(set, psi, kernel, f)?;
    let j_after = functional_j(set, psi, kernel, &g)?;
    Ok(PolarizationCheck {
        j_before,
        j_after,
        pass: j_after >= j_before - 1e-10,
        sum_equal_error: sum_err,
        diff_bigger_violation: diff_violation,
        lemmas_pass: sum_err <= 1e-10 && diff_violation <= 1e-10,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub j: f64,
    pub l1_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolarizationTrace {
    pub last: SphericalField,
    pub rearranged: SphericalField,
    /// Row `0` is the starting field; row `t` follows the `t`-th reflection.
    pub rows: Vec<TraceRow>,
}

impl PolarizationTrace {
    pub fn j_monotone(&self, tol: f64) -> bool {
        self.rows.windows(2).all(|w| w[1].j >= w[0].j - tol)
    }

    pub fn l1_monotone(&self, tol: f64) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].l1_distance <= w[0].l1_distance + tol)
    }

    /// `step,J,l1_distance` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,J,l1_distance\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{:.16e},{:.16e}", r.step, r.j, r.l1_distance);
        }
        out
    }
}

/// Applies `steps` reflections drawn uniformly from the supported ones.
pub fn iterate_polarizations(
    set: &SpherePointSet,
    f: &SphericalField,
    kernel: &KernelMatrix,
    psi: &PsiSpec,
    seed: u64,
    steps: usize,
) -> Result<PolarizationTrace> {
    check_len(set, f)?;
    let rearranged = rearrange(set, f)?;
    let mut rng = trial_rng(seed, 0);
    let mut current = f.clone();
    let mut rows = Vec::with_capacity(steps + 1);
    rows.push(TraceRow {
        step: 0,
        j: functional_j(set, psi, kernel, &current)?,
        l1_distance: current.l1_distance(&rearranged, set),
    });
    for step in 1..=steps {
        let sigma = set.reflections.choose(&mut rng).ok_or(Error::NotClosed)?;
        current = polarize_with(sigma, &current);
        rows.push(TraceRow {
            step,
            j: functional_j(set, psi, kernel, &current)?,
            l1_distance: current.l1_distance(&rearranged, set),
        });
    }
    Ok(PolarizationTrace {
        last: current,
        rearranged,
        rows,
    })
}

/// `h(E f) - Σ_i w_i h((P_ρ f)_i)` for a 0/1 field, with weights normalized.
pub fn spherical_mi(set: &SpherePointSet, f: &SphericalField, rho: f64) -> Result<f64> {
    check_len(set, f)?;
    if !f.is_binary() {
        return Err(Error::Invalid("spherical MI needs a 0/1 field".into()));
    }
    let spec = KernelSpec::poisson(rho, set.n())?;
    let total = set.total_weight();
    let kf = kernel_apply(set, &spec, f)?;
    let cond = kahan_sum(
        kf.iter()
            .zip(set.weights())
            .map(|(&p, w)| w / total * h(p.clamp(0.0, 1.0))),
    );
    Ok((h(f.mean(set)) - cond).max(0.0))
}

/// Mass of the Poisson kernel on `S^{n-1}` at the pole, averaged over
/// `samples` uniform points.
pub fn poisson_mass_mc(n: usize, rho: f64, samples: usize, seed: u64) -> Result<McEstimate> {
    let spec = KernelSpec::poisson(rho, n)?;
    if samples < 2 {
        return Err(Error::Range("need at least two samples".into()));
    }
    let mut rng = trial_rng(seed, 0);
    let values: Vec<f64> = (0..samples)
        .map(|_| {
            let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let r = dot(&z, &z).sqrt();
            spec.eval(z[0] / r)
        })
        .collect();
    Ok(McEstimate::from_samples(&values))
}

/// Plain JSON snapshot of a field; points are omitted for circle grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub struct FieldSnapshot {
    pub n: usize,
    #[serde(rename = "R")]
    pub radius: f64,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub points: Option<Vec<Vec<f64>>>,
    pub values: Vec<f64>,
}

impl FieldSnapshot {
    pub fn new(set: &SpherePointSet, f: &SphericalField) -> Self {
        Self {
            n: set.n(),
            radius: set.radius(),
            m: set.len(),
            points: match set.layout {
                Layout::CircleGrid { .. } => None,
                Layout::Sampled => Some(set.points.clone()),
            },
            values: f.values.clone(),
        }
    }
}
