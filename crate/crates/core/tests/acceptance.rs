//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if
//! any criterion fails. Tolerances are the constants below.

use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ecdelay::analytics::{
    cavity_delay_samples, cavity_pmf, harmonic_bound, lambert_w_principal, log_bound, md1_tail_exponent,
    md1_tail_exponent_bisection, pk_mean_workload, simulate_cavity_queue, BRANCH_POINT,
};
use ecdelay::cli::audit::{majorization_battery, BatterySpec};
use ecdelay::engine::{delays_for, marginal_workload_samples, run, strata, DelayRecord, ExperimentConfig};
use ecdelay::order::{empirical_icx_leq, linear_grid};
use ecdelay::stats::{batch_means_ci, ks_distance, linear_fit, mean, quantile, sample_variance, Z_95};
use ecdelay::{ChunkLaw, FileSizeDistribution, PolicyKind, SystemParams};

const SEED: u64 = 1;
const N: u64 = 100_000;
const ICX_POINTS: usize = 20;
const BATCHES: usize = 20;
const KS_MAX: f64 = 0.02;
const MIN_STRATUM: usize = 1000;
const MIN_K_FOR_LOG_BOUND: u64 = 5;
const R2_MIN: f64 = 0.95;
const LAMBERT_REL: f64 = 1e-12;
const TAIL_EXPONENT_ABS: f64 = 1e-8;
const PK_REL: f64 = 0.02;
const MUTATION_FAIL_MIN: f64 = 0.5;
/// Cavity workloads kept for the independent-maximum oracle, and draws per stratum.
const CAVITY_POOL: usize = 1_000_000;
const CAVITY_DRAWS: usize = 100_000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn experiment(
    m: usize,
    dist: FileSizeDistribution,
    chunk: ChunkLaw,
    rho: f64,
    policies: Vec<PolicyKind>,
    iterations: u64,
) -> ExperimentConfig {
    let params = SystemParams::with_load(m, 1.0, chunk, rho, &dist).expect("params");
    ExperimentConfig::new(params, dist, policies, iterations, SEED).expect("config")
}

fn binomial_k_plus_2(p: f64, m: u64) -> FileSizeDistribution {
    FileSizeDistribution::binomial(p, m).unwrap().with_redundancy(2).unwrap()
}

fn stratum_size(records: &[DelayRecord], k: u64) -> usize {
    records.iter().filter(|r| r.k == k).count()
}

fn criterion_1() -> Outcome {
    let c = majorization_battery(&BatterySpec::standard(SEED)).unwrap();
    let pass = c.wf_majorized_by_bs == c.instances
        && c.wf_majorized_by_br == c.instances
        && c.bs_submajorized_by_br == c.instances;
    outcome(
        pass,
        format!(
            "WF<BS {}/{n}, WF<BR {}/{n}, BS<_w BR {}/{n}",
            c.wf_majorized_by_bs,
            c.wf_majorized_by_br,
            c.bs_submajorized_by_br,
            n = c.instances
        ),
    )
}

fn criterion_2() -> Outcome {
    let cfg = experiment(50, binomial_k_plus_2(0.1, 50), ChunkLaw::Fixed(10.0), 0.7, PolicyKind::ALL.to_vec(), N);
    let out = run(&cfg).unwrap();
    let d = |p| out.policy(p).unwrap().delays();
    let (wf, bs, br) = (d(PolicyKind::WaterFilling), d(PolicyKind::BatchSampling), d(PolicyKind::BalancedRandom));
    let grid = linear_grid(0.0, quantile(&br, 0.99), ICX_POINTS);
    let icx_wf = empirical_icx_leq(&wf, &br, &grid).unwrap();
    let icx_bs = empirical_icx_leq(&bs, &br, &grid).unwrap();
    let e = |x: &[f64]| batch_means_ci(x, BATCHES).unwrap();
    let (ewf, ebs, ebr) = (e(&wf), e(&bs), e(&br));
    let wf_le_bs = ewf.mean - ebs.mean <= ewf.ci_half_width + ebs.ci_half_width;
    let bs_le_br = ebs.mean - ebr.mean <= ebs.ci_half_width + ebr.ci_half_width;
    outcome(
        icx_wf.consistent() && icx_bs.consistent() && wf_le_bs && bs_le_br,
        format!(
            "icx flags WF/BR {} BS/BR {}; means WF {:.3}±{:.3} BS {:.3}±{:.3} BR {:.3}±{:.3}",
            icx_wf.flagged_count(),
            icx_bs.flagged_count(),
            ewf.mean,
            ewf.ci_half_width,
            ebs.mean,
            ebs.ci_half_width,
            ebr.mean,
            ebr.ci_half_width
        ),
    )
}

fn criterion_3() -> Outcome {
    let m = 20;
    let dist = binomial_k_plus_2(0.2, 20);
    let mut cfg = experiment(m, dist.clone(), ChunkLaw::Fixed(10.0), 0.7, vec![PolicyKind::BalancedRandom], N + N / 10);
    cfg.warmup = N / 10;
    let engine = marginal_workload_samples(&cfg, 0).unwrap();
    let pmf = cavity_pmf(&dist, m, 10.0, cfg.params.arrival_rate).unwrap();
    let cavity = simulate_cavity_queue(&pmf, 1.0, N as usize, SEED + 1).unwrap();
    let ks = ks_distance(&engine, &cavity);
    outcome(ks < KS_MAX, format!("KS {ks:.5} < {KS_MAX} ({} vs {} samples)", engine.len(), cavity.len()))
}

/// Shared BR run for criteria 4 and 5.
fn log_regime_run() -> (ExperimentConfig, Vec<DelayRecord>) {
    let cfg = experiment(200, binomial_k_plus_2(0.1, 200), ChunkLaw::Fixed(10.0), 0.7, vec![PolicyKind::BalancedRandom], N);
    let records = run(&cfg).unwrap().runs.remove(0).records;
    (cfg, records)
}

fn criterion_4(cfg: &ExperimentConfig, records: &[DelayRecord]) -> Outcome {
    let rho = cfg.rho();
    let pmf = cavity_pmf(&cfg.dist, cfg.params.m, 10.0, cfg.params.arrival_rate).unwrap();
    let pool = simulate_cavity_queue(&pmf, 1.0, CAVITY_POOL, SEED + 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let (mut bound_violations, mut worst_gap, mut checked) = (0, f64::NEG_INFINITY, 0);
    let (mut icx_flags, mut small_k_flags) = (0, 0);
    for (k, est) in strata(records) {
        if stratum_size(records, k) < MIN_STRATUM {
            continue;
        }
        let gap = est.mean - log_bound(k, rho, 10.0, 1.0).unwrap().value;
        if k < MIN_K_FOR_LOG_BOUND {
            small_k_flags += (gap > 0.0) as usize;
        } else {
            checked += 1;
            worst_gap = worst_gap.max(gap);
            bound_violations += (gap > 0.0) as usize;
        }
        let observed = delays_for(records, k);
        let oracle = cavity_delay_samples(&pool, k, cfg.params.m, cfg.params.chunk, 1.0, CAVITY_DRAWS, &mut rng).unwrap();
        let grid = linear_grid(0.0, quantile(&oracle, 0.99), ICX_POINTS);
        icx_flags += empirical_icx_leq(&observed, &oracle, &grid).unwrap().flagged_count();
    }
    outcome(
        bound_violations == 0 && icx_flags == 0 && checked > 0,
        format!(
            "log bound violated in {bound_violations}/{checked} strata (worst mean - bound {worst_gap:.3}); \
             cavity icx flags {icx_flags}; small-k flags {small_k_flags}"
        ),
    )
}

fn criterion_5(records: &[DelayRecord]) -> Outcome {
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (k, est) in strata(records) {
        if stratum_size(records, k) >= MIN_STRATUM {
            x.push((k as f64).ln());
            y.push(est.mean);
        }
    }
    let fit = linear_fit(&x, &y).unwrap();
    outcome(
        fit.r_squared >= R2_MIN,
        format!("R^2 {:.4} >= {R2_MIN} over {} strata, slope {:.3}", fit.r_squared, x.len(), fit.slope),
    )
}

/// Strata with at least 1000 samples must sit below the bound outright;
/// sparser strata must not exceed it beyond a one-sided 95% margin built
/// from the pooled within-stratum standard deviation.
fn criterion_6() -> Outcome {
    let dist = FileSizeDistribution::geometric(0.25).unwrap().with_redundancy(2).unwrap();
    let cfg = experiment(200, dist, ChunkLaw::Exponential { mean: 10.0 }, 0.7, vec![PolicyKind::BalancedRandom], N);
    let records = run(&cfg).unwrap().runs.remove(0).records;
    let rho = cfg.rho();
    let by_k = strata(&records);
    let (mut ss, mut dof) = (0.0, 0.0);
    for &k in by_k.keys() {
        let d = delays_for(&records, k);
        if d.len() > 1 {
            ss += sample_variance(&d) * (d.len() - 1) as f64;
            dof += (d.len() - 1) as f64;
        }
    }
    let pooled_sd = (ss / dof).sqrt();
    let (mut violations, mut worst) = (0, f64::NEG_INFINITY);
    for (k, est) in &by_k {
        let n = stratum_size(&records, *k);
        let bound = harmonic_bound(*k, rho, 1.0, 10.0).unwrap().value;
        let margin = if n >= MIN_STRATUM { 0.0 } else { Z_95 * pooled_sd / (n as f64).sqrt() };
        let gap = est.mean - margin - bound;
        worst = worst.max(gap);
        violations += (gap > 0.0) as usize;
    }
    outcome(
        violations == 0,
        format!("{violations} of {} sampled k above the harmonic bound (worst margin-adjusted gap {worst:.3})", by_k.len()),
    )
}

fn criterion_7() -> Outcome {
    let mut worst_lambert = 0.0f64;
    let half = 5000;
    let negative = (0..half).map(|i| BRANCH_POINT + 10f64.powf(-9.0 + 8.0 * i as f64 / (half - 1) as f64) * (-BRANCH_POINT));
    let positive = (0..half).map(|i| 10f64.powf(-9.0 + 15.0 * i as f64 / (half - 1) as f64));
    for x in negative.chain(positive) {
        let w = lambert_w_principal(x).unwrap();
        worst_lambert = worst_lambert.max((w * w.exp() - x).abs() / x.abs().max(1.0));
    }
    let mut worst_q = 0.0f64;
    for i in 1..=19 {
        let load = 0.05 * i as f64;
        for sigma in [1.0, 10.0] {
            let lambda = load / sigma;
            let q = md1_tail_exponent(lambda, sigma).unwrap();
            worst_q = worst_q.max((q - md1_tail_exponent_bisection(lambda, sigma).unwrap()).abs());
        }
    }
    // M/D/1 as a cavity queue whose every arrival brings one block
    let (lambda, c) = (0.07, 10.0);
    let pmf = cavity_pmf(&FileSizeDistribution::delta(10).unwrap(), 10, c, lambda).unwrap();
    let sim = mean(&simulate_cavity_queue(&pmf, 1.0, N as usize, SEED).unwrap());
    let pk = pk_mean_workload(lambda, c, c * c).unwrap();
    let pk_rel = (sim / pk - 1.0).abs();
    outcome(
        worst_lambert <= LAMBERT_REL && worst_q <= TAIL_EXPONENT_ABS && pk_rel <= PK_REL,
        format!(
            "Lambert residual {worst_lambert:.2e} <= {LAMBERT_REL:e}; tail exponent gap {worst_q:.2e} <= {TAIL_EXPONENT_ABS:e}; \
             P-K {pk:.4} vs sim {sim:.4} ({:.2}% <= {}%)",
            100.0 * pk_rel,
            100.0 * PK_REL
        ),
    )
}

fn criterion_8() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_ecdelay");
    let dir = std::env::temp_dir().join(format!("ecdelay-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let config = dir.join("small.toml");
    std::fs::write(&config, "iters = 20000\nm_grid = [10, 40]\n").unwrap();
    let mut identical = Vec::new();
    for preset in ["filesize", "codingrate", "chunkscaling"] {
        let outputs: Vec<Vec<u8>> = ["1", "4"]
            .iter()
            .enumerate()
            .map(|(i, threads)| {
                let out = dir.join(format!("{preset}-{i}.csv"));
                let status = Command::new(bin)
                    .args(["preset", preset, "--seed", "7", "--threads", threads, "--config"])
                    .arg(&config)
                    .arg("--out")
                    .arg(&out)
                    .status()
                    .unwrap();
                assert!(status.success(), "preset {preset} failed");
                std::fs::read(&out).unwrap()
            })
            .collect();
        identical.push((preset, !outputs[0].is_empty() && outputs[0] == outputs[1]));
    }
    let _ = std::fs::remove_dir_all(&dir);
    outcome(
        identical.iter().all(|(_, same)| *same),
        identical.iter().map(|(p, same)| format!("{p}: {}", if *same { "identical" } else { "DIFFER" })).collect::<Vec<_>>().join(", "),
    )
}

fn criterion_9() -> Outcome {
    let mut spec = BatterySpec::standard(SEED);
    spec.mislabel_br_as_wf = true;
    let c = majorization_battery(&spec).unwrap();
    let fail_rate = 1.0 - c.wf_majorized_by_bs as f64 / c.instances as f64;
    outcome(
        fail_rate >= MUTATION_FAIL_MIN,
        format!("mislabelled WF fails WF<BS in {:.1}% of {} instances (need >= {}%)", 100.0 * fail_rate, c.instances, 100.0 * MUTATION_FAIL_MIN),
    )
}

fn main() -> ExitCode {
    let mut all = true;
    let mut report = |id: u32, limit_s: f64, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let secs = start.elapsed().as_secs_f64();
        all &= o.pass;
        println!(
            "criterion {id}: {} [{secs:.1}s, budget {limit_s}s] {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    };
    report(1, 5.0, &mut criterion_1);
    report(2, 60.0, &mut criterion_2);
    report(3, 30.0, &mut criterion_3);
    let start = Instant::now();
    let (cfg, records) = log_regime_run();
    println!("(criteria 4-5 share one BR run: {:.1}s)", start.elapsed().as_secs_f64());
    report(4, 180.0, &mut || criterion_4(&cfg, &records));
    report(5, 180.0, &mut || criterion_5(&records));
    report(6, 120.0, &mut criterion_6);
    report(7, 10.0, &mut criterion_7);
    report(8, 60.0, &mut criterion_8);
    report(9, 5.0, &mut criterion_9);
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
