//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::time::{Duration, Instant};

use sssplus_core::oracle::{check_k_residues, check_lemma1, check_theorem1, exact_fdr};
use sssplus_core::{ProcedureParams, Rational};
use sssplus_lab::montecarlo::{run_experiment, sweep_n, ExperimentConfig, FdrEstimate};
use sssplus_lab::report::{csv_string, SweepRow};

const SEED: u64 = 20_240_601;

fn r(n: i128, d: i128) -> Rational {
    Rational::new(n, d).unwrap()
}

fn params(alpha: Rational, c: Rational, t: Rational) -> ProcedureParams {
    ProcedureParams::new(alpha, c, t).unwrap()
}

fn fig1_left(t: Rational) -> ProcedureParams {
    params(r(1, 20), r(1, 2), t)
}

fn fig1_right(t: Rational) -> ProcedureParams {
    params(r(2, 7), r(2, 5), t)
}

fn sweep(p: ProcedureParams, n_values: &[u64], trials: u64, threads: usize) -> Result<Vec<FdrEstimate>, String> {
    let template = ExperimentConfig::new(p, n_values[0], trials, SEED)
        .map_err(|e| e.to_string())?
        .with_threads(threads);
    sweep_n(&template, n_values).map_err(|e| e.to_string())
}

fn within(elapsed: Duration, budget_secs: u64) -> Result<(), String> {
    if elapsed <= Duration::from_secs(budget_secs) {
        Ok(())
    } else {
        Err(format!("took {:.1}s, budget {budget_secs}s", elapsed.as_secs_f64()))
    }
}

fn threshold_equivalence() -> Result<String, String> {
    let start = Instant::now();
    let mut cases = 0;
    for p in [params(r(1, 10), r(1, 2), Rational::ONE), fig1_left(Rational::ONE), fig1_right(Rational::ONE)] {
        let report = check_theorem1(&p, 14).map_err(|e| e.to_string())?;
        if !report.passed() {
            return Err(format!("(a,b)=({},{}): {} violations", p.a(), p.b(), report.violations.len()));
        }
        cases += report.cases_checked;
    }
    within(start.elapsed(), 60)?;
    Ok(format!("{cases} cases, 0 violations, {:.1}s", start.elapsed().as_secs_f64()))
}

fn lower_bound_and_residues() -> Result<String, String> {
    let start = Instant::now();
    let mut notes = Vec::new();
    for (a, b, u, n) in [(1, 10, 1, 33), (3, 7, 3, 20)] {
        let lemma = check_lemma1(a, b, u, n).map_err(|e| e.to_string())?;
        let residues = check_k_residues(a, b, u, n).map_err(|e| e.to_string())?;
        for report in [&lemma, &residues] {
            if !report.passed() {
                return Err(format!("{} at ({a},{b},{u},{n}): {} violations", report.property, report.violations.len()));
            }
        }
        if (a, b) == (1, 10) {
            let realized = residues.diagnostics.get("realized_residues_0<K<n").cloned().unwrap_or_default();
            if realized.is_empty() || realized.split(',').any(|s| !matches!(s.trim(), "9" | "10")) {
                return Err(format!("residues mod 11 realized: {realized}"));
            }
            notes.push(format!("residues mod 11 = {{{realized}}}"));
        }
    }
    within(start.elapsed(), 10)?;
    Ok(format!("{}, {:.2}s", notes.join("; "), start.elapsed().as_secs_f64()))
}

fn exact_vs_sampled() -> Result<String, String> {
    let exact = exact_fdr(1, 10, 1, 33, r(1, 2)).map_err(|e| e.to_string())?.fdr.to_f64();
    let p = params(r(1, 10), r(1, 2), r(9, 10));
    let config = ExperimentConfig::new(p, 33, 1_000_000, SEED).map_err(|e| e.to_string())?;
    let est = run_experiment(&config).map_err(|e| e.to_string())?;
    let gap = (exact - est.mean_fdp).abs();
    let detail = format!("exact {exact:.6}, sampled {:.6}, |gap| = {:.2} se", est.mean_fdp, gap / est.std_err);
    if gap <= 4.0 * est.std_err {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn control_at_t_one() -> Result<String, String> {
    let mut worst = f64::NEG_INFINITY;
    for p in [fig1_left(Rational::ONE), fig1_right(Rational::ONE)] {
        let period = p.a() + p.b();
        let grid: Vec<u64> = [5, 10, 20, 50].iter().map(|m| m * period).collect();
        for est in sweep(p, &grid, 100_000, 0)? {
            let alpha = p.alpha().to_f64();
            let margin = (est.mean_fdp - alpha) / est.std_err;
            worst = worst.max(margin);
            if est.mean_fdp > alpha + 3.0 * est.std_err {
                return Err(format!("alpha {alpha}, n {}: mean {:.5} exceeds by {margin:.2} se", est.n, est.mean_fdp));
            }
        }
    }
    Ok(format!("8 points, largest excess {worst:.2} se"))
}

fn exceeds(estimates: &[FdrEstimate], alpha: f64, n_limit: u64) -> Result<String, String> {
    let hits: Vec<String> = estimates
        .iter()
        .filter(|e| e.n <= n_limit && e.ci_low > alpha)
        .map(|e| format!("n={} ci_low={:.5}", e.n, e.ci_low))
        .collect();
    let best = estimates.iter().map(|e| e.ci_low).fold(f64::NEG_INFINITY, f64::max);
    if hits.is_empty() {
        Err(format!("no ci_low above {alpha:.5}; best {best:.5}"))
    } else {
        Ok(format!("{} of {} points, first {}", hits.len(), estimates.len(), hits[0]))
    }
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = mid;
        }
        i = j + 1;
    }
    out
}

fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

fn diagnostics_trend(left: &[FdrEstimate]) -> Result<String, String> {
    let n: Vec<f64> = left.iter().map(|e| e.n as f64).collect();
    let hit: Vec<f64> = left.iter().map(|e| e.p_hit_end).collect();
    let rho = spearman(&n, &hit);
    let z_last = left.last().ok_or("empty sweep")?.z_hat;
    let detail = format!("spearman {rho:.3}, z_hat(n={}) = {z_last:.4}", left.last().unwrap().n);
    if rho < 0.0 && (z_last - 1.0).abs() <= 0.15 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn determinism(left_csv: &str) -> Result<String, String> {
    let p = fig1_left(r(19, 20));
    let again = sweep(p, &FIG1_LEFT_GRID, 100_000, 3)?;
    let rows: Vec<SweepRow> = again.iter().map(|e| SweepRow::new(&p, SEED, e)).collect();
    let csv = csv_string(&rows).map_err(|e| e.to_string())?;
    if csv == left_csv {
        Ok(format!("thread_hint 1 vs 3: {} identical bytes", csv.len()))
    } else {
        Err("CSV bytes differ between thread counts".into())
    }
}

const FIG1_LEFT_GRID: [u64; 5] = [105, 210, 315, 525, 1050];

fn main() {
    let mut failures = 0;
    let mut report = |name: &str, result: Result<String, String>| match result {
        Ok(detail) => println!("PASS {name}: {detail}"),
        Err(detail) => {
            failures += 1;
            println!("FAIL {name}: {detail}");
        }
    };

    report("threshold equivalence, n <= 14", threshold_equivalence());
    report("K lower bound and residues", lower_bound_and_residues());
    report("exact vs sampled FDR at n = 33", exact_vs_sampled());
    report("FDR control at t = 1", control_at_t_one());

    let left_params = fig1_left(r(19, 20));
    let start = Instant::now();
    let left = sweep(left_params, &FIG1_LEFT_GRID, 100_000, 1);
    let left_time = start.elapsed();
    report(
        "FDR above alpha, alpha = 1/20, t = 19/20",
        left.clone()
            .and_then(|l| within(left_time, 300).map(|()| l))
            .and_then(|l| exceeds(&l, 0.05, 525)),
    );

    let start = Instant::now();
    let right_grid: Vec<u64> = (1..=100).map(|m| 10 * m).collect();
    let right = sweep(fig1_right(r(4, 7)), &right_grid, 100_000, 0);
    let right_time = start.elapsed();
    report(
        "FDR above alpha, alpha = 2/7, t = 4/7",
        right
            .and_then(|l| within(right_time, 300).map(|()| l))
            .and_then(|l| exceeds(&l, 2.0 / 7.0, u64::MAX)),
    );

    report("hit-end decay and z_hat limit", left.clone().and_then(|l| diagnostics_trend(&l)));

    let left_csv = left.and_then(|l| {
        let rows: Vec<SweepRow> = l.iter().map(|e| SweepRow::new(&left_params, SEED, e)).collect();
        csv_string(&rows).map_err(|e| e.to_string())
    });
    report("thread-count determinism", left_csv.and_then(|csv| determinism(&csv)));

    if failures > 0 {
        std::process::exit(1);
    }
}
