//! End-to-end acceptance run. Prints one line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;

use mostinfo_core::cube::{
    mutual_information_direct, mutual_information_phi, perfect_code_mi, symmetric_w1, taylor_check,
    BooleanFunction, SymmetricProfile, ValueConvention,
};
use mostinfo_core::entropy::{erkip_bound, h, osw_bound, PsiSpec};
use mostinfo_core::gaussian::{
    a_bound_check, factor_identity_trials, mehler_convergence, neg_cond_entropy, poisson_factor_mc,
    random_interval_union, GaussianSetSpec, LimitParams,
};
use mostinfo_core::rng::trial_rng;
use mostinfo_core::search::{exhaustive_verify, fixed_mean_max, lex_failure_grid};
use mostinfo_core::sphere::{
    circle_grid, functional_j, iterate_polarizations, kernel_apply, poisson_mass_mc,
    polarization_inequality_check, rearrange, KernelMatrix, KernelSpec, SphericalField,
};

const ALPHAS: [f64; 9] = [0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn criterion_1() -> Outcome {
    let mut worst_gap = 0.0f64;
    let mut bad = Vec::new();
    let mut slowest = Duration::ZERO;
    for n in 2..=4 {
        for &alpha in &ALPHAS {
            let start = Instant::now();
            let rep = exhaustive_verify(n, alpha).expect("valid scan");
            slowest = slowest.max(start.elapsed());
            let gap = (rep.max_mi - (1.0 - h(alpha))).abs();
            worst_gap = worst_gap.max(gap);
            if gap > 1e-10 || rep.argmax_is_dictators != Some(true) {
                bad.push(format!("n={n} alpha={alpha}"));
            }
        }
    }
    outcome(
        bad.is_empty() && slowest.as_secs_f64() <= 60.0,
        format!(
            "max |max_mi - (1-h)| = {worst_gap:.3e}, slowest scan {:.2}s, failures {bad:?}",
            slowest.as_secs_f64()
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut worst = 0.0f64;
    for t in 0..1000u64 {
        let mut rng = trial_rng(2, t);
        let n = rng.random_range(1..=10);
        let alpha = rng.random_range(0.0..=0.5);
        let f = BooleanFunction::random(n, ValueConvention::ZeroOne, &mut rng).unwrap();
        let direct = mutual_information_direct(&f, alpha).unwrap();
        let phi = mutual_information_phi(&f, 1.0 - 2.0 * alpha).unwrap();
        worst = worst.max((direct - phi).abs());
    }
    outcome(
        worst <= 1e-10,
        format!("1000 functions, max |direct - phi| = {worst:.3e}"),
    )
}

fn criterion_3() -> Outcome {
    let mut erkip_slack = f64::INFINITY;
    for n in 2..=4 {
        for &alpha in &ALPHAS {
            let rep = exhaustive_verify(n, alpha).unwrap();
            erkip_slack = erkip_slack.min(erkip_bound(alpha).unwrap() + 1e-9 - rep.max_mi);
        }
    }
    let mut osw_slack = f64::INFINITY;
    for n in 1..=4 {
        for alpha in [0.25, 0.30, 0.35, 0.40, 0.45] {
            let rep = fixed_mean_max(n, 1 << (n - 1), alpha).unwrap();
            osw_slack = osw_slack.min(osw_bound(alpha).unwrap() - rep.max_mi);
        }
    }
    outcome(
        erkip_slack >= 0.0 && osw_slack >= 0.0,
        format!("min Erkip slack {erkip_slack:.3e}, min OSW slack {osw_slack:.3e}"),
    )
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let res = perfect_code_mi(0.1).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let bound = 1.0 - h(0.1);
    let margin = res.per_bit - bound;
    outcome(
        margin > 0.0 && secs <= 60.0,
        format!(
            "per-bit MI {:.10} vs 1-h(0.1) = {bound:.10}, margin {margin:.3e}, {secs:.2}s",
            res.per_bit
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut failures = 0;
    let mut worst = 0.0f64;
    for t in 0..200u64 {
        let mut rng = trial_rng(5, t);
        let n = rng.random_range(4..=8);
        let f = loop {
            let f = BooleanFunction::random(n, ValueConvention::ZeroOne, &mut rng).unwrap();
            if f.count_ones() != 0 && f.count_ones() != f.len() {
                break f;
            }
        };
        let c = taylor_check(&f, 1e-3).unwrap();
        worst = worst.max(c.abs_err / (0.01 * c.rhs.abs() + 1e-8));
        failures += usize::from(!c.pass);
    }
    outcome(
        failures == 0,
        format!("200 functions, {failures} failures, worst error / tolerance = {worst:.3e}"),
    )
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let ks: Vec<usize> = (1..=12).collect();
    let rows = lex_failure_grid(&ks, &[100, 300, 1000], &[0.45, 0.48, 0.49]).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let wins: Vec<_> = rows.iter().filter(|r| r.ball_wins).collect();
    let best = rows
        .iter()
        .max_by(|a, b| a.margin.total_cmp(&b.margin))
        .unwrap();
    outcome(
        !wins.is_empty() && secs <= 300.0,
        format!(
            "{} of {} configurations have mi_ball > mi_and; best k={} n={} alpha={} margin {:.3e}; {secs:.1}s",
            wins.len(),
            rows.len(),
            best.k,
            best.n,
            best.alpha,
            best.margin
        ),
    )
}

fn criterion_7() -> Outcome {
    let w1 = symmetric_w1(&SymmetricProfile::ball_with_mean(1001, 0.5).unwrap());
    let target = 1.0 / (2.0 * std::f64::consts::PI);
    let rel = (w1 - target).abs() / target;
    outcome(
        rel < 0.05,
        format!("W1 = {w1:.6}, 1/(2 pi) = {target:.6}, rel err {rel:.3e}"),
    )
}

fn sphere_corpus(len: usize) -> Vec<SphericalField> {
    (0..100u64)
        .map(|t| SphericalField::random_binary(len, &mut trial_rng(8, t)))
        .collect()
}

fn criterion_8() -> Outcome {
    let set = circle_grid(64).unwrap();
    let corpus = sphere_corpus(set.len());
    let (mut checks, mut failures, mut lemma_failures) = (0usize, 0usize, 0usize);
    for rho in [0.3, 0.7] {
        let km = KernelMatrix::new(&set, &KernelSpec::poisson(rho, 2).unwrap());
        for psi in [PsiSpec::NegBinaryEntropy, PsiSpec::Square] {
            for f in &corpus {
                for sr in set.reflections() {
                    let c =
                        polarization_inequality_check(&set, f, &sr.reflection, &km, &psi).unwrap();
                    checks += 1;
                    failures += usize::from(!c.pass);
                    lemma_failures += usize::from(!c.lemmas_pass);
                }
            }
        }
    }
    outcome(
        failures == 0 && lemma_failures == 0,
        format!("{checks} checks, {failures} J failures, {lemma_failures} lemma failures"),
    )
}

fn criterion_9() -> Outcome {
    let set = circle_grid(64).unwrap();
    let corpus = sphere_corpus(set.len());
    let mut dominance_failures = 0;
    let mut j_nonmonotone = 0;
    let steps = 150;
    let mut mean_l1 = vec![0.0; steps + 1];
    for rho in [0.3, 0.7] {
        let km = KernelMatrix::new(&set, &KernelSpec::poisson(rho, 2).unwrap());
        for psi in [PsiSpec::NegBinaryEntropy, PsiSpec::Square] {
            for (t, f) in corpus.iter().enumerate() {
                let g = rearrange(&set, f).unwrap();
                let jf = functional_j(&set, &psi, &km, f).unwrap();
                let jg = functional_j(&set, &psi, &km, &g).unwrap();
                dominance_failures += usize::from(jf > jg + 1e-10);
                let trace = iterate_polarizations(&set, f, &km, &psi, t as u64, steps).unwrap();
                j_nonmonotone += usize::from(!trace.j_monotone(1e-10));
                for (acc, row) in mean_l1.iter_mut().zip(&trace.rows) {
                    *acc += row.l1_distance;
                }
            }
        }
    }
    let l1_ok = mean_l1.windows(2).all(|w| w[1] <= w[0] + 1e-10);
    let runs = 4.0 * corpus.len() as f64;
    outcome(
        dominance_failures == 0 && j_nonmonotone == 0 && l1_ok,
        format!(
            "{dominance_failures} dominance failures, {j_nonmonotone} non-monotone J sequences, mean L1 {:.4} -> {:.4} (nonincreasing: {l1_ok})",
            mean_l1[0] / runs,
            mean_l1[steps] / runs
        ),
    )
}

fn criterion_10() -> Outcome {
    let set = circle_grid(256).unwrap();
    let one = SphericalField::constant(set.len(), 1.0).unwrap();
    let mut worst = 0.0f64;
    for rho in [0.3, 0.5, 0.9] {
        let mass = kernel_apply(&set, &KernelSpec::poisson(rho, 2).unwrap(), &one).unwrap();
        worst = mass.iter().fold(worst, |w, m| w.max((m - 1.0).abs()));
    }
    let mut mc = Vec::new();
    for d in [3, 4] {
        for (i, rho) in [0.3, 0.5, 0.9].into_iter().enumerate() {
            let seed = 100 * d as u64 + i as u64;
            let kernel = poisson_mass_mc(d, rho, 200_000, seed).unwrap();
            let factor = poisson_factor_mc(d, rho, 1.0, 200_000, seed).unwrap();
            mc.push((d, rho, kernel, factor));
        }
    }
    let mc_ok = mc
        .iter()
        .all(|(_, _, k, f)| k.within(1.0, 3.0) && f.within(1.0, 3.0));
    let worst_z = mc
        .iter()
        .flat_map(|(_, _, k, f)| [k, f])
        .map(|e| ((e.mean - 1.0) / e.std_err).abs())
        .fold(0.0, f64::max);
    outcome(
        worst <= 1e-6 && mc_ok,
        format!("grid mass max |m - 1| = {worst:.3e}, Monte Carlo worst |z| = {worst_z:.2} on S^2 and S^3"),
    )
}

fn criterion_11() -> Outcome {
    let mut checks = 0;
    let mut failures = 0;
    let mut min_margin = f64::INFINITY;
    for (i, mu) in [0.2, 0.5, 0.8].into_iter().enumerate() {
        for t in 0..30u64 {
            let set = random_interval_union(mu, &mut trial_rng(11 + i as u64, t)).unwrap();
            let half = GaussianSetSpec::halfspace_with_measure(set.measure()).unwrap();
            for rho in [0.3, 0.6, 0.9] {
                let margin =
                    neg_cond_entropy(&half, rho).unwrap() - neg_cond_entropy(&set, rho).unwrap();
                checks += 1;
                failures += usize::from(margin < -1e-8);
                min_margin = min_margin.min(margin);
            }
        }
    }
    outcome(
        failures == 0,
        format!("{checks} comparisons, {failures} failures, min margin {min_margin:.3e}"),
    )
}

fn criterion_12() -> Outcome {
    let rows = mehler_convergence(&[0.5, 0.0], &[0.2, 0.3], 0.5, &[50, 200, 1000]).unwrap();
    let monotone = rows.windows(2).all(|w| w[1].abs_err < w[0].abs_err);
    let rel = rows[2].rel_err;
    let params = LimitParams::new(9, 2).unwrap();
    let factor = factor_identity_trials(&params, 100, 12)
        .unwrap()
        .iter()
        .map(|c| c.rel_err)
        .fold(0.0, f64::max);
    let bound = a_bound_check(&params, 100_000, 12).unwrap();
    outcome(
        rel < 0.05 && monotone && factor <= 1e-9 && bound.violations == 0,
        format!(
            "rel err at N=1000 {rel:.3e} (monotone: {monotone}), factor identity max rel err {factor:.3e}, A-bound violations {}",
            bound.violations
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("exhaustive verification n <= 4", criterion_1),
        ("direct and Phi-entropy MI agree", criterion_2),
        ("Erkip and OSW bounds", criterion_3),
        ("perfect code beats the per-bit bound", criterion_4),
        ("small-noise Taylor coefficient", criterion_5),
        ("lex failure witness", criterion_6),
        ("Hamming ball W1 asymptotics", criterion_7),
        ("spherical polarization inequality", criterion_8),
        ("rearrangement dominance", criterion_9),
        ("Poisson kernel normalization", criterion_10),
        ("Gaussian halfspace dominance", criterion_11),
        ("finite-N kernel limit", criterion_12),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        failed += usize::from(!o.pass);
        println!(
            "criterion {:>2} {} {name}: {} ({:.1}s)",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
