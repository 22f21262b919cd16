//! One-dimensional quadrature: adaptive Gauss–Kronrod (7/15) and
//! Gauss–Hermite rules for expectations against the standard normal.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Adaptive Gauss–Kronrod integration of `f` over `[a, b]` to absolute
/// error `tol`. Subdivides the worst segment until the summed error
/// estimate is below `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Invalid("integration limits must be finite".into()));
    }
    if a == b {
        return Ok(0.0);
    }
    const MAX_SEGMENTS: usize = 20_000;
    let mut heap = BinaryHeap::new();
    let first = kronrod(&f, a, b);
    let mut total_err = first.error;
    heap.push(first);
    while total_err > tol && heap.len() < MAX_SEGMENTS {
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        let left = kronrod(&f, worst.a, mid);
        let right = kronrod(&f, mid, worst.b);
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    let mut segments = heap.into_vec();
    segments.sort_by(|x, y| x.a.total_cmp(&y.a));
    let total_err: f64 = segments.iter().map(|s| s.error).sum();
    if total_err > tol.max(1e-14) * 10.0 {
        return Err(Error::Invalid(format!(
            "quadrature did not converge: error estimate {total_err:e}"
        )));
    }
    Ok(crate::entropy::kahan_sum(segments.iter().map(|s| s.value)))
}

/// Integrates over `[a, b]` split at the given interior breakpoints, so
/// integrands with jumps at known places converge quickly.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: f64,
) -> Result<f64> {
    let mut knots: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|x| *x > a && *x < b)
        .collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    knots.insert(0, a);
    knots.push(b);
    let pieces = knots.len() - 1;
    let mut acc = crate::entropy::KahanSum::new();
    for w in knots.windows(2) {
        acc.add(integrate(&f, w[0], w[1], tol / pieces as f64)?);
    }
    Ok(acc.value())
}

/// Gauss–Hermite rule for `E[g(Z)]`, `Z ~ N(0, 1)`: nodes `x_i` and weights
/// `w_i` with `E[g(Z)] ~ sum_i w_i g(x_i)`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Builds an `order`-point rule for `N(0, 1)`. Nodes are bracketed by
    /// Sturm-sequence bisection on the Jacobi matrix (diagonal 0, off-diagonal
    /// `sqrt(k)`), then polished by Newton steps on the orthonormal recurrence.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1);
        let n = order;
        // eigenvalues below x
        let count_below = |x: f64| {
            let mut q = -x;
            let mut c = usize::from(q < 0.0);
            for k in 1..n {
                let qq = if q == 0.0 { f64::EPSILON } else { q };
                q = -x - k as f64 / qq;
                c += usize::from(q < 0.0);
            }
            c
        };
        let bound = 2.0 * (n as f64).sqrt() + 1.0;
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            let (mut lo, mut hi) = (-bound, bound);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if count_below(mid) > i {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo <= 1e-14 * mid.abs().max(1.0) {
                    break;
                }
            }
            let mut x = 0.5 * (lo + hi);
            let mut eval = hermite_eval(n, x);
            for _ in 0..3 {
                let step = eval.0 / ((n as f64).sqrt() * eval.1);
                if !step.is_finite() || (x - step) < lo - 1e-10 || (x - step) > hi + 1e-10 {
                    break;
                }
                x -= step;
                eval = hermite_eval(n, x);
            }
            // Christoffel weight 1 / (n p_{n-1}(x)^2)
            let w = (-(n as f64).ln() - 2.0 * (eval.1.abs().ln() + eval.2)).exp();
            nodes.push(x);
            weights.push(w);
        }
        Self { nodes, weights }
    }

    pub fn expect<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        crate::entropy::kahan_sum(
            self.nodes
                .iter()
                .zip(&self.weights)
                .map(|(&x, &w)| w * g(x)),
        )
    }
}

/// Orthonormal probabilists' Hermite values `(p_n, p_{n-1}, ln scale)`,
/// where the true values are the first two times `exp(scale)`.
fn hermite_eval(n: usize, x: f64) -> (f64, f64, f64) {
    let (mut p_prev, mut p) = (0.0, 1.0);
    let mut scale = 0.0;
    for j in 0..n {
        let jf = j as f64;
        let next = (x * p - jf.sqrt() * p_prev) / (jf + 1.0).sqrt();
        p_prev = p;
        p = next;
        if p.abs() > 1e150 {
            p *= 1e-150;
            p_prev *= 1e-150;
            scale += 150.0 * std::f64::consts::LN_10;
        }
    }
    (p, p_prev, scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_polynomials_and_smooth() {
        let v = integrate(|x| x.powi(5) - 2.0 * x * x, -1.0, 2.0, 1e-13).unwrap();
        assert!((v - (64.0 / 6.0 - 1.0 / 6.0 - 2.0 * 3.0)).abs() < 1e-12);
        let v = integrate(f64::sin, 0.0, std::f64::consts::PI, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        let v = integrate(|x| (-x * x / 2.0).exp(), -10.0, 10.0, 1e-12).unwrap();
        assert!((v - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-11);
    }

    #[test]
    fn breaks_handle_jumps() {
        let f = |x: f64| if x > 0.3 { 1.0 } else { 0.0 };
        let v = integrate_with_breaks(f, -1.0, 1.0, &[0.3], 1e-12).unwrap();
        assert!((v - 0.7).abs() < 1e-12);
    }

    #[test]
    fn hermite_moments() {
        let gh = GaussHermite::new(200);
        assert!((gh.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((gh.expect(|x| x * x) - 1.0).abs() < 1e-11);
        assert!((gh.expect(|x| x.powi(4)) - 3.0).abs() < 1e-10);
        assert!(gh.expect(|x| x.powi(3)).abs() < 1e-10);
        // E[cos Z] = exp(-1/2)
        assert!((gh.expect(f64::cos) - (-0.5f64).exp()).abs() < 1e-12);
        let small = GaussHermite::new(5);
        assert!((small.expect(|x| x.powi(8)) - 105.0).abs() < 1e-9);
    }
}
