use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde_json::Value;

use mostinfo_core::cube::{
    c2_coefficient, degree_weight, fwht, make_family, mutual_information_direct,
    mutual_information_multi, mutual_information_phi, perfect_code_mi, taylor_check,
    BooleanFunction, FamilyKind, MultiOutputFunction, ValueConvention,
};
use mostinfo_core::entropy::{erkip_bound, h, PsiSpec};
use mostinfo_core::gaussian::{
    a_bound_check, borell_check, convergence_csv, factor_identity_trials, gaussian_mi,
    mehler_convergence, neg_cond_entropy, random_interval_union, GaussianSetSpec, LimitParams,
};
use mostinfo_core::rng::trial_rng;
use mostinfo_core::search::{
    exhaustive_verify, fixed_mean_max, lex_failure_grid, mi_table, scan_n5, SearchReport,
};
use mostinfo_core::sphere::{
    circle_grid, functional_j, iterate_polarizations, poisson_mass_mc,
    polarization_inequality_check, rearrange, KernelMatrix, KernelSpec, SphericalField,
};

use crate::record::{format_float, RunRecord};
use crate::{
    AlphaArgs, BooleanCmd, Cli, CliError, CliResult, Command, FactorArgs, FamilyArgs, GaussCmd,
    HalfspaceArgs, KernelLimitArgs, LexArgs, MiArgs, PolarizeArgs, RearrangeArgs, SphereCmd,
    SphereMcArgs, TaylorArgs, VerifyArgs,
};

const TOL: f64 = 1e-10;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn check_alpha(alpha: f64) -> CliResult<()> {
    if (0.0..=0.5).contains(&alpha) {
        Ok(())
    } else {
        Err(usage(format!("alpha = {alpha} is outside [0, 0.5]")))
    }
}

fn check_rho(rho: f64) -> CliResult<()> {
    if (0.0..1.0).contains(&rho) {
        Ok(())
    } else {
        Err(usage(format!("rho = {rho} is outside [0, 1)")))
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> CliResult<Vec<T>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<T>()
                .map_err(|_| usage(format!("bad {what} entry {t:?}")))
        })
        .collect()
}

fn parse_psi(s: &str) -> CliResult<PsiSpec> {
    match s {
        "neg-entropy" => Ok(PsiSpec::NegBinaryEntropy),
        "square" => Ok(PsiSpec::Square),
        _ => match s.strip_prefix("abs-power:") {
            Some(p) => {
                let p = p
                    .parse()
                    .map_err(|_| usage(format!("bad exponent in {s:?}")))?;
                Ok(PsiSpec::abs_power(p).map_err(|e| usage(e.to_string()))?)
            }
            None => Err(usage(format!("unknown psi {s:?}"))),
        },
    }
}

fn write_table(path: &Path, text: &str) -> CliResult<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(text.as_bytes())?;
    Ok(())
}

pub(crate) fn dispatch(cli: &Cli) -> CliResult<RunRecord> {
    let seed = cli.seed;
    match &cli.command {
        Command::Boolean(cmd) => match cmd {
            BooleanCmd::Verify(a) => verify(a, seed),
            BooleanCmd::Mi(a) => mi(a, seed),
            BooleanCmd::Family(a) => family(a, seed),
            BooleanCmd::PerfectCode(a) => perfect_code(a, seed),
            BooleanCmd::LexFailure(a) => lex_failure(a, seed),
            BooleanCmd::Taylor(a) => taylor(a, seed),
        },
        Command::Sphere(cmd) => match cmd {
            SphereCmd::PolarizeCheck(a) => polarize_check(a, seed),
            SphereCmd::Rearrange(a) => rearrange_cmd(a, seed),
            SphereCmd::Mc(a) => sphere_mc(a, seed),
        },
        Command::Gauss(cmd) => match cmd {
            GaussCmd::HalfspaceVs(a) => halfspace_vs(a, seed),
            GaussCmd::KernelLimit(a) => kernel_limit(a, seed),
            GaussCmd::FactorCheck(a) => factor_check(a, seed),
        },
    }
}

fn search_metrics(rec: &mut RunRecord, rep: &SearchReport) {
    rec.metric("max_mi", rep.max_mi)
        .metric("bound", rep.bound)
        .metric("bound_gap", rep.bound - rep.max_mi)
        .metric("argmax_count", rep.argmax_count as f64)
        .metric("functions_scanned", rep.functions_scanned as f64)
        .flag("bound_satisfied", rep.bound_satisfied);
    if let Some(d) = rep.argmax_is_dictators {
        rec.flag("argmax_is_dictators", d);
    }
    if let Some(l) = rep.lex_attains_max {
        rec.flag("lex_attains_max", l);
    }
    for (i, &t) in rep.argmax.iter().enumerate() {
        rec.metric(&format!("argmax_{i}"), t as f64);
    }
    if let Ok(erkip) = erkip_bound(rep.alpha) {
        rec.metric("erkip_bound", erkip)
            .flag("erkip_satisfied", rep.max_mi <= erkip + 1e-9);
    }
}

fn verify(a: &VerifyArgs, seed: u64) -> CliResult<RunRecord> {
    check_alpha(a.alpha)?;
    let mut rec = RunRecord::new("boolean verify", seed);
    rec.param("n", a.n).param("alpha", a.alpha);
    let report = if a.n == 5 {
        let path = a
            .checkpoint
            .as_ref()
            .ok_or_else(|| usage("n = 5 needs --checkpoint"))?;
        rec.param("checkpoint", path.display().to_string());
        let state = scan_n5(a.alpha, path, a.max_blocks)?;
        rec.metric("watermark", state.watermark as f64)
            .flag("complete", state.complete);
        let rep = state.to_report();
        search_metrics(&mut rec, &rep);
        rec.pass = Some(rep.bound_satisfied);
        return Ok(rec);
    } else if let Some(m) = a.ones {
        rec.param("ones", m);
        fixed_mean_max(a.n, m, a.alpha)?
    } else {
        exhaustive_verify(a.n, a.alpha)?
    };
    if let Some(path) = &a.table {
        let mut text = String::from("function_index,mi\n");
        for (t, v) in mi_table(a.n, a.alpha)? {
            text.push_str(&format!("{t},{}\n", format_float(v)));
        }
        write_table(path, &text)?;
    }
    search_metrics(&mut rec, &report);
    rec.pass = Some(report.pass());
    Ok(rec)
}

fn read_tables(path: &Path, count: usize) -> CliResult<Vec<BooleanFunction>> {
    let text = fs::read_to_string(path)?;
    let lines: Vec<&str> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect();
    if lines.len() != 2 * count {
        return Err(usage(format!(
            "expected {count} header/table pairs in {}, found {} lines",
            path.display(),
            lines.len()
        )));
    }
    lines
        .chunks(2)
        .map(|pair| Ok(BooleanFunction::parse_text(&pair.join("\n"))?))
        .collect()
}

fn mi(a: &MiArgs, seed: u64) -> CliResult<RunRecord> {
    check_alpha(a.alpha)?;
    let mut rec = RunRecord::new("boolean mi", seed);
    rec.param("tt", a.tt.display().to_string())
        .param("alpha", a.alpha);
    match a.multi {
        None => {
            let f = read_tables(&a.tt, 1)?.remove(0);
            let direct = mutual_information_direct(&f, a.alpha)?;
            let phi = mutual_information_phi(&f, 1.0 - 2.0 * a.alpha)?;
            rec.metric("n", f.n() as f64)
                .metric("mean", f.density())
                .metric("mi", direct)
                .metric("mi_phi", phi)
                .metric("path_gap", (direct - phi).abs())
                .metric("bound", 1.0 - h(a.alpha));
            rec.pass = Some((direct - phi).abs() <= TOL);
        }
        Some(k) => {
            rec.param("multi", k);
            let tables = read_tables(&a.tt, k)?;
            let n = tables[0].n();
            if tables.iter().any(|t| t.n() != n) {
                return Err(usage("tables differ in n"));
            }
            let words = (0..1usize << n)
                .map(|j| {
                    tables
                        .iter()
                        .enumerate()
                        .map(|(i, t)| (t.bit(j) as u32) << i)
                        .sum()
                })
                .collect();
            let f = MultiOutputFunction::new(n, k, words)?;
            let value = mutual_information_multi(&f, a.alpha)?;
            rec.metric("n", n as f64)
                .metric("mi", value)
                .metric("per_bit", value / k as f64)
                .metric("bound", 1.0 - h(a.alpha));
        }
    }
    Ok(rec)
}

fn parse_family(kind: &str) -> CliResult<FamilyKind> {
    let (name, arg) = match kind.split_once(':') {
        Some((n, v)) => (
            n,
            Some(
                v.parse::<usize>()
                    .map_err(|_| usage(format!("bad family argument in {kind:?}")))?,
            ),
        ),
        None => (kind, None),
    };
    let need = |v: Option<usize>| v.ok_or_else(|| usage(format!("{name} needs an argument")));
    Ok(match name {
        "dictator" => FamilyKind::Dictator(need(arg)?),
        "and" => FamilyKind::AndK(need(arg)?),
        "lex" => FamilyKind::Lex(need(arg)?),
        "ball" => FamilyKind::HammingBall(need(arg)?),
        "majority" => FamilyKind::Majority,
        _ => return Err(usage(format!("unknown family {kind:?}"))),
    })
}

fn family(a: &FamilyArgs, seed: u64) -> CliResult<RunRecord> {
    check_alpha(a.alpha)?;
    let kind = parse_family(&a.kind)?;
    let f = make_family(a.n, kind)?;
    let mut rec = RunRecord::new("boolean family", seed);
    rec.param("kind", a.kind.clone())
        .param("n", a.n)
        .param("alpha", a.alpha);
    let spectrum = fwht(&f.clone().with_convention(ValueConvention::ZeroOne))?;
    rec.metric("mean", f.density())
        .metric("mi", mutual_information_direct(&f, a.alpha)?)
        .metric("mi_phi", mutual_information_phi(&f, 1.0 - 2.0 * a.alpha)?)
        .metric("w1", degree_weight(&spectrum, 1)?)
        .metric("bound", 1.0 - h(a.alpha));
    Ok(rec)
}

fn perfect_code(a: &AlphaArgs, seed: u64) -> CliResult<RunRecord> {
    check_alpha(a.alpha)?;
    let res = perfect_code_mi(a.alpha)?;
    let bound = 1.0 - h(a.alpha);
    let mut rec = RunRecord::new("boolean perfect-code", seed);
    rec.param("alpha", a.alpha);
    rec.metric("mi", res.mi)
        .metric("per_bit", res.per_bit)
        .metric("bound", bound)
        .metric("margin", res.per_bit - bound);
    rec.pass = Some(res.per_bit > bound);
    Ok(rec)
}

fn lex_failure(a: &LexArgs, seed: u64) -> CliResult<RunRecord> {
    let ks: Vec<usize> = parse_list(&a.k, "k")?;
    let ns: Vec<usize> = parse_list(&a.n, "n")?;
    let alphas: Vec<f64> = parse_list(&a.alpha, "alpha")?;
    for &al in &alphas {
        check_alpha(al)?;
    }
    let rows = lex_failure_grid(&ks, &ns, &alphas)?;
    if rows.is_empty() {
        return Err(usage("no configuration with k <= n"));
    }
    if let Some(path) = &a.table {
        let mut text = String::from("k,n,alpha,mi_ball,mi_and,w1_ball,w1_and,margin\n");
        for r in &rows {
            text.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.k,
                r.n,
                format_float(r.alpha),
                format_float(r.mi_ball),
                format_float(r.mi_and),
                format_float(r.w1_ball),
                format_float(r.w1_and),
                format_float(r.margin)
            ));
        }
        write_table(path, &text)?;
    }
    let best = rows
        .iter()
        .max_by(|x, y| x.margin.total_cmp(&y.margin))
        .expect("rows nonempty");
    let mut rec = RunRecord::new("boolean lex-failure", seed);
    rec.param("k", a.k.clone())
        .param("n", a.n.clone())
        .param("alpha", a.alpha.clone());
    rec.metric("configs", rows.len() as f64)
        .metric("wins", rows.iter().filter(|r| r.ball_wins).count() as f64)
        .metric("best_k", best.k as f64)
        .metric("best_n", best.n as f64)
        .metric("best_alpha", best.alpha)
        .metric("best_mi_ball", best.mi_ball)
        .metric("best_mi_and", best.mi_and)
        .metric("best_margin", best.margin);
    rec.pass = Some(best.ball_wins);
    Ok(rec)
}

fn taylor(a: &TaylorArgs, seed: u64) -> CliResult<RunRecord> {
    if a.n == 0 || a.n > 16 {
        return Err(usage("n must be in 1..=16"));
    }
    if !(a.rho > 0.0 && a.rho < 1.0) {
        return Err(usage("rho must be in (0, 1)"));
    }
    let mut failures = 0usize;
    let mut worst = 0.0f64;
    for t in 0..a.trials {
        let mut rng = trial_rng(seed, t as u64);
        let f = loop {
            let f = BooleanFunction::random(a.n, ValueConvention::ZeroOne, &mut rng)?;
            if f.count_ones() != 0 && f.count_ones() != f.len() {
                break f;
            }
        };
        let c = taylor_check(&f, a.rho)?;
        worst = worst.max(c.abs_err / (0.01 * c.rhs.abs() + 1e-8));
        failures += usize::from(!c.pass);
    }
    let mut rec = RunRecord::new("boolean taylor", seed);
    rec.param("n", a.n)
        .param("trials", a.trials)
        .param("rho", a.rho);
    rec.metric("failures", failures as f64)
        .metric("worst_error_ratio", worst)
        .metric("c2_half", c2_coefficient(0.5)?);
    rec.pass = Some(failures == 0);
    Ok(rec)
}

fn grid_set(m: usize) -> CliResult<mostinfo_core::sphere::SpherePointSet> {
    circle_grid(m).map_err(|e| usage(e.to_string()))
}

fn polarize_check(a: &PolarizeArgs, seed: u64) -> CliResult<RunRecord> {
    check_rho(a.rho)?;
    let psi = parse_psi(&a.psi)?;
    let set = grid_set(a.grid)?;
    let km = KernelMatrix::new(&set, &KernelSpec::poisson(a.rho, set.n())?);
    let (mut checks, mut failures, mut lemma_failures) = (0usize, 0usize, 0usize);
    let (mut worst_drop, mut worst_sum, mut worst_diff) =
        (f64::NEG_INFINITY, 0.0f64, f64::NEG_INFINITY);
    for t in 0..a.trials {
        let f = SphericalField::random_binary(set.len(), &mut trial_rng(seed, t as u64));
        for sr in set.reflections() {
            let c = polarization_inequality_check(&set, &f, &sr.reflection, &km, &psi)?;
            checks += 1;
            failures += usize::from(!c.pass);
            lemma_failures += usize::from(!c.lemmas_pass);
            worst_drop = worst_drop.max(c.j_before - c.j_after);
            worst_sum = worst_sum.max(c.sum_equal_error);
            worst_diff = worst_diff.max(c.diff_bigger_violation);
        }
    }
    let mut rec = RunRecord::new("sphere polarize-check", seed);
    rec.param("grid", a.grid)
        .param("rho", a.rho)
        .param("psi", a.psi.clone())
        .param("trials", a.trials);
    rec.metric("checks", checks as f64)
        .metric("failures", failures as f64)
        .metric("lemma_failures", lemma_failures as f64)
        .metric("max_j_drop", worst_drop)
        .metric("max_sum_equal_error", worst_sum)
        .metric("max_diff_bigger_violation", worst_diff);
    rec.pass = Some(failures == 0 && lemma_failures == 0);
    Ok(rec)
}

fn rearrange_cmd(a: &RearrangeArgs, seed: u64) -> CliResult<RunRecord> {
    check_rho(a.rho)?;
    let psi = parse_psi(&a.psi)?;
    let set = grid_set(a.grid)?;
    let km = KernelMatrix::new(&set, &KernelSpec::poisson(a.rho, set.n())?);
    let f = SphericalField::random_binary(set.len(), &mut trial_rng(seed, 0));
    let g = rearrange(&set, &f)?;
    let j_f = functional_j(&set, &psi, &km, &f)?;
    let j_g = functional_j(&set, &psi, &km, &g)?;
    let trace = iterate_polarizations(&set, &f, &km, &psi, seed, a.steps)?;
    if let Some(path) = &a.table {
        write_table(path, &trace.to_csv())?;
    }
    let first = trace.rows.first().expect("trace has a start row");
    let last = trace.rows.last().expect("trace has a start row");
    let j_monotone = trace.j_monotone(TOL);
    let mut rec = RunRecord::new("sphere rearrange", seed);
    rec.param("grid", a.grid)
        .param("rho", a.rho)
        .param("psi", a.psi.clone())
        .param("steps", a.steps);
    rec.metric("j_f", j_f)
        .metric("j_rearranged", j_g)
        .metric("j_gap", j_g - j_f)
        .metric("l1_start", first.l1_distance)
        .metric("l1_end", last.l1_distance)
        .flag("j_monotone", j_monotone)
        .flag("l1_monotone", trace.l1_monotone(TOL));
    rec.pass = Some(j_f <= j_g + TOL && j_monotone && last.l1_distance <= first.l1_distance + TOL);
    Ok(rec)
}

fn sphere_mc(a: &SphereMcArgs, seed: u64) -> CliResult<RunRecord> {
    check_rho(a.rho)?;
    if a.dim < 2 {
        return Err(usage("dim must be at least 2"));
    }
    let est = poisson_mass_mc(a.dim, a.rho, a.points, seed)?;
    let mut rec = RunRecord::new("sphere mc", seed);
    rec.param("dim", a.dim)
        .param("points", a.points)
        .param("rho", a.rho);
    rec.metric("mass", est.mean)
        .metric("std_err", est.std_err)
        .metric("z_score", (est.mean - 1.0) / est.std_err);
    rec.pass = Some(est.within(1.0, 3.0));
    Ok(rec)
}

fn endpoint(v: &Value) -> CliResult<f64> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| usage("bad number")),
        Value::String(s) => match s.as_str() {
            "inf" | "+inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            _ => Err(usage(format!("bad endpoint {s:?}"))),
        },
        _ => Err(usage(
            "interval endpoints must be numbers or \"inf\"/\"-inf\"",
        )),
    }
}

fn parse_gauss_spec(text: &str) -> CliResult<GaussianSetSpec> {
    let v: Value = serde_json::from_str(text).map_err(|e| usage(format!("bad --spec: {e}")))?;
    if let Some(t) = v.get("halfspace") {
        return Ok(GaussianSetSpec::halfspace(endpoint(t)?)?);
    }
    let list = v
        .get("intervals")
        .and_then(Value::as_array)
        .ok_or_else(|| usage("--spec needs \"halfspace\" or \"intervals\""))?;
    let intervals = list
        .iter()
        .map(|pair| match pair.as_array().map(Vec::as_slice) {
            Some([lo, hi]) => Ok((endpoint(lo)?, endpoint(hi)?)),
            _ => Err(usage("each interval is a two-element array")),
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(GaussianSetSpec::interval_union(intervals)?)
}

fn halfspace_vs(a: &HalfspaceArgs, seed: u64) -> CliResult<RunRecord> {
    check_rho(a.rho)?;
    let set = match (&a.spec, a.measure) {
        (Some(text), mu) => {
            let set = parse_gauss_spec(text)?;
            if let Some(mu) = mu {
                if (set.measure() - mu).abs() > 1e-9 {
                    return Err(usage(format!(
                        "--spec has measure {}, not {mu}",
                        set.measure()
                    )));
                }
            }
            set
        }
        (None, Some(mu)) => {
            random_interval_union(mu, &mut trial_rng(seed, 0)).map_err(|e| usage(e.to_string()))?
        }
        (None, None) => return Err(usage("give --measure or --spec")),
    };
    let half = GaussianSetSpec::halfspace_with_measure(set.measure())?;
    let nce_set = neg_cond_entropy(&set, a.rho)?;
    let nce_half = neg_cond_entropy(&half, a.rho)?;
    let borell = borell_check(&set, &PsiSpec::Square, a.rho)?;
    let mut rec = RunRecord::new("gauss halfspace-vs", seed);
    rec.param("rho", a.rho)
        .param("set", serde_json::to_value(&set).unwrap_or(Value::Null));
    if let Some(mu) = a.measure {
        rec.param("measure", mu);
    }
    rec.metric("measure", set.measure())
        .metric("neg_cond_entropy_set", nce_set)
        .metric("neg_cond_entropy_halfspace", nce_half)
        .metric("mi_set", gaussian_mi(&set, a.rho)?)
        .metric("mi_halfspace", gaussian_mi(&half, a.rho)?)
        .metric("margin", nce_half - nce_set)
        .metric("borell_square_set", borell.value_f)
        .metric("borell_square_halfspace", borell.value_halfspace);
    rec.pass = Some(nce_half >= nce_set - 1e-8 && borell.pass);
    Ok(rec)
}

fn point(arg: &Option<String>, default: &[f64], n: usize, what: &str) -> CliResult<Vec<f64>> {
    let v: Vec<f64> = match arg {
        Some(s) => parse_list(s, what)?,
        None => default
            .iter()
            .copied()
            .chain(std::iter::repeat(0.0))
            .take(n)
            .collect(),
    };
    if v.len() != n {
        return Err(usage(format!("{what} needs {n} coordinates")));
    }
    Ok(v)
}

fn kernel_limit(a: &KernelLimitArgs, seed: u64) -> CliResult<RunRecord> {
    check_rho(a.rho)?;
    if a.n == 0 {
        return Err(usage("n must be positive"));
    }
    let big_ns: Vec<usize> = parse_list(&a.big_n, "bigN")?;
    let y = point(&a.y, &[0.5, 0.0], a.n, "y")?;
    let z = point(&a.z, &[0.2, 0.3], a.n, "z")?;
    let rows = mehler_convergence(&y, &z, a.rho, &big_ns)?;
    if let Some(path) = &a.table {
        write_table(path, &convergence_csv(&rows))?;
    }
    let monotone = rows.windows(2).all(|w| w[1].abs_err < w[0].abs_err);
    let mut rec = RunRecord::new("gauss kernel-limit", seed);
    rec.param("n", a.n)
        .param("rho", a.rho)
        .param("bigN", big_ns.clone())
        .param("y", y)
        .param("z", z);
    for r in &rows {
        rec.metric(&format!("value_n{}", r.big_n), r.value)
            .metric(&format!("rel_err_n{}", r.big_n), r.rel_err);
    }
    let last = rows.last().ok_or_else(|| usage("--bigN is empty"))?;
    rec.metric("reference", last.reference)
        .flag("monotone", monotone);
    rec.pass = Some(monotone && last.rel_err < 0.05);
    Ok(rec)
}

fn factor_check(a: &FactorArgs, seed: u64) -> CliResult<RunRecord> {
    let params = LimitParams::new(a.big_n, a.n).map_err(|e| usage(e.to_string()))?;
    let checks = factor_identity_trials(&params, a.trials, seed)?;
    let worst = checks.iter().map(|c| c.rel_err).fold(0.0, f64::max);
    let bound = a_bound_check(&params, a.bound_samples, seed)?;
    let mut rec = RunRecord::new("gauss factor-check", seed);
    rec.param("bigN", a.big_n)
        .param("n", a.n)
        .param("trials", a.trials)
        .param("bound_samples", a.bound_samples);
    rec.metric("max_rel_err", worst)
        .metric("a_bound_violations", bound.violations as f64)
        .metric("a_bound_worst_gap", bound.worst_gap);
    rec.pass = Some(worst < 1e-9 && bound.violations == 0);
    Ok(rec)
}
