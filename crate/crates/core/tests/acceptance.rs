//! Acceptance criteria. Prints one `[PASS]` or `[FAIL]` line per criterion and
//! exits non-zero if any fail. Run with `cargo test --test acceptance`.

mod common;

use std::panic;
use std::process::Command;
use std::time::{Duration, Instant};

use cftp_community::bench::{
    brute_force_optimal, cc_pivot, compare_costs, gen_sbm, BenchModel, SbmParams,
};
use cftp_community::cftp::{run_partial_cftp, sample_many, step_map, FlowState, DEFAULT_N_MAX};
use cftp_community::detector::{detect_communities, DetectorConfig};
use cftp_community::markov::neumann_check;
use cftp_community::rng::derive_seed;
use cftp_community::{cluster_editing_cost, restrict, stationary, Distribution, MarkovChain};
use rand::Rng;
use rayon::prelude::*;

use common::*;

/// Outcome of one criterion: pass flag and a one-line summary.
type Verdict = (bool, String);

/// Criterion number, check, and time limit in seconds.
type Criterion = (u32, fn() -> Verdict, u64);

/// 100 random chains on 5..=10 states with all entries positive, each with a
/// random proper subset.
fn restriction_cases() -> Vec<(MarkovChain, Vec<usize>)> {
    let mut r = rng(1001);
    (0..100)
        .map(|_| {
            let n = r.gen_range(5..=10);
            let chain = random_chain(&mut r, n, 1.0);
            let g = random_subset(&mut r, n, 1, n - 1);
            (chain, g)
        })
        .collect()
}

/// The five fixed 5-state chains used for the sampling laws.
fn sampling_chains() -> Vec<MarkovChain> {
    let mut r = rng(2002);
    (0..5).map(|_| random_chain(&mut r, 5, 0.4)).collect()
}

const SAMPLES: usize = 20_000;

fn criterion_01_restriction_law() -> Verdict {
    let mut worst_law = 0.0f64;
    let mut worst_row = 0.0f64;
    for (chain, g) in restriction_cases() {
        let pi = stationary(&chain).unwrap();
        let mass = pi.mass(&g);
        let sub = restrict(&chain, &g).unwrap();
        let sub_pi = stationary(&sub).unwrap();
        for (w, &label) in g.iter().enumerate() {
            worst_law = worst_law.max((sub_pi.probs[w] - pi.probs[label] / mass).abs());
        }
        for row in sub.rows() {
            worst_row = worst_row.max((row.iter().sum::<f64>() - 1.0).abs());
        }
    }
    (
        worst_law < 1e-9 && worst_row < 1e-10,
        format!("max law error {worst_law:.2e}, max row-sum error {worst_row:.2e}"),
    )
}

fn criterion_02_neumann_series() -> Verdict {
    let mut worst = 0.0f64;
    let mut monotone = true;
    for (chain, g) in restriction_cases() {
        let b: Vec<usize> = (0..chain.len()).filter(|i| !g.contains(i)).collect();
        let q_bb = chain.submatrix(&b, &b);
        worst = worst.max(neumann_check(&q_bb, 500));
        let devs: Vec<f64> = [1, 2, 5, 10, 20, 50, 100, 200, 500]
            .iter()
            .map(|&k| neumann_check(&q_bb, k))
            .collect();
        monotone &= devs.windows(2).all(|w| w[1] <= w[0] + 1e-15);
    }
    (
        worst < 1e-9 && monotone,
        format!("max deviation at K=500 {worst:.2e}, monotone {monotone}"),
    )
}

fn criterion_03_cftp_exactness() -> Verdict {
    let mut tvs = Vec::new();
    for (i, chain) in sampling_chains().iter().enumerate() {
        let pi = stationary(chain).unwrap();
        let samples = sample_many(chain, 30 + i as u64, SAMPLES, DEFAULT_N_MAX).unwrap();
        let emp = Distribution::empirical(chain.len(), samples);
        tvs.push(emp.total_variation(&pi));
    }
    let worst = tvs.iter().cloned().fold(0.0, f64::max);
    (worst < 0.03, format!("TV per chain {tvs:.4?}"))
}

fn criterion_04_partial_cftp_law() -> Verdict {
    let mut r = rng(4004);
    let mut tvs = Vec::new();
    for (i, chain) in sampling_chains().iter().enumerate() {
        let g = random_subset(&mut r, chain.len(), 2, 3);
        let target = stationary(chain).unwrap().conditional(&g);
        let seed = 40 + i as u64;
        let samples: Vec<usize> = (0..SAMPLES)
            .into_par_iter()
            .map(|j| {
                run_partial_cftp(chain, &g, derive_seed(seed, j as u64), DEFAULT_N_MAX).unwrap()
            })
            .collect();
        let positions = samples
            .iter()
            .map(|s| g.iter().position(|x| x == s).unwrap());
        let emp = Distribution::empirical(g.len(), positions);
        tvs.push(emp.total_variation(&target));
    }
    let worst = tvs.iter().cloned().fold(0.0, f64::max);
    (worst < 0.05, format!("TV per chain {tvs:.4?}"))
}

fn criterion_05_incremental_flow() -> Verdict {
    let mut r = rng(5005);
    let cases: Vec<(MarkovChain, u64, usize)> = (0..200)
        .map(|_| {
            let n = r.gen_range(2..=12);
            let density = r.gen_range(0.1..0.9);
            (
                random_chain(&mut r, n, density),
                r.gen(),
                r.gen_range(0..=50),
            )
        })
        .collect();
    let mismatches = cases
        .par_iter()
        .filter(|(chain, seed, k)| {
            let mut flow = FlowState::new(chain.len());
            for d in 1..=*k as i64 {
                flow.extend_backward(&step_map(chain, *seed, -d)).unwrap();
            }
            let (ends, visits) = naive_flow(chain, *seed, *k);
            flow.endpoints() != ends.as_slice()
                || (0..chain.len()).any(|s| flow.visits(s).unwrap() != visits[s].as_slice())
        })
        .count();
    (
        mismatches == 0,
        format!("{mismatches} of 200 flows differ from re-simulation"),
    )
}

fn criterion_06_cost_oracle_and_optimum() -> Verdict {
    let mut r = rng(6006);
    let cases: Vec<_> = (0..500)
        .map(|_| {
            let n = r.gen_range(1..=8);
            let p = r.gen_range(0.1..0.9);
            let g = random_graph(&mut r, n, p);
            let part = random_partition(&mut r, n);
            (g, part, r.gen::<u64>())
        })
        .collect();
    let failures: Vec<String> = cases
        .par_iter()
        .enumerate()
        .filter_map(|(i, (g, part, seed))| {
            let cost = cluster_editing_cost(g, part).unwrap();
            if cost != pair_loop_cost(g, part) {
                return Some(format!("case {i}: cost mismatch"));
            }
            let (_, best) = brute_force_optimal(g).unwrap();
            let cfg = DetectorConfig {
                seed: *seed,
                ..DetectorConfig::default()
            };
            let ours = detect_communities(g, &cfg).unwrap().best_cost;
            let pivot = cluster_editing_cost(g, &cc_pivot(g, *seed)).unwrap();
            (best > ours || best > pivot || best > cost).then(|| {
                format!("case {i}: optimum {best} exceeds detector {ours} or pivot {pivot}")
            })
        })
        .collect();
    (
        failures.is_empty(),
        format!("{} failures of 500 {:?}", failures.len(), failures.first()),
    )
}

fn criterion_07_pivot_approximation() -> Verdict {
    let mut r = rng(7007);
    let graphs: Vec<_> = (0..50)
        .map(|_| {
            let p = r.gen_range(0.2..0.8);
            random_graph(&mut r, 8, p)
        })
        .collect();
    let ratios: Vec<(f64, u64)> = graphs
        .par_iter()
        .enumerate()
        .map(|(i, g)| {
            let (_, opt) = brute_force_optimal(g).unwrap();
            let total: u64 = (0..1000)
                .map(|s| cluster_editing_cost(g, &cc_pivot(g, derive_seed(i as u64, s))).unwrap())
                .sum();
            (total as f64 / 1000.0, opt)
        })
        .collect();
    let ok = ratios.iter().all(|&(mean, opt)| mean <= 3.2 * opt as f64);
    let worst = ratios
        .iter()
        .filter(|&&(_, opt)| opt > 0)
        .map(|&(mean, opt)| mean / opt as f64)
        .fold(0.0, f64::max);
    (ok, format!("worst mean/optimum ratio {worst:.3}"))
}

fn criterion_08_sbm_recovery() -> Verdict {
    let hits = (0..20u64)
        .into_par_iter()
        .filter(|&run| {
            let (g, truth) = gen_sbm(&SbmParams {
                cluster_sizes: vec![15; 4],
                p: 0.9,
                q: 0.05,
                seed: derive_seed(8008, run),
            })
            .unwrap();
            let cfg = DetectorConfig {
                seed: derive_seed(8009, run),
                ..DetectorConfig::default()
            };
            detect_communities(&g, &cfg).unwrap().best_partition == truth
        })
        .count();
    (hits >= 16, format!("exact recovery in {hits} of 20 runs"))
}

fn criterion_09_cost_versus_pivot() -> Verdict {
    let model = BenchModel::Sbm {
        cluster_sizes: vec![10; 6],
        p: 0.9,
        q: 0.05,
    };
    let rep = compare_costs(&model, 10, &DetectorConfig::default(), 1, 9009).unwrap();
    (
        rep.our_mean <= rep.ccpivot_mean,
        format!(
            "detector mean {:.1}, CC-PIVOT mean {:.1}",
            rep.our_mean, rep.ccpivot_mean
        ),
    )
}

fn criterion_10_cli_determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_cftp-community");
    let path = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let run = |args: &[String]| {
        let out = Command::new(bin)
            .args(args)
            .env_remove("CFTP_SEED")
            .output()
            .unwrap();
        (out.status.code(), out.stdout)
    };
    let to_args = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();

    // Generators write files, so compare the files of two separate outputs.
    let mut diffs = Vec::new();
    for (model, extra) in [
        ("sbm", vec!["--sizes", "8x3", "--p", "0.9", "--q", "0.05"]),
        (
            "lfr",
            vec![
                "--n",
                "80",
                "--avg-deg",
                "12",
                "--min-deg",
                "8",
                "--max-deg",
                "20",
                "--min-comm",
                "10",
                "--max-comm",
                "30",
            ],
        ),
    ] {
        let mut files = Vec::new();
        for copy in ["a", "b"] {
            let prefix = path(&format!("{model}_{copy}"));
            let mut args = to_args(&["generate", model, "--seed", "3", "--out", &prefix]);
            args.extend(to_args(&extra));
            assert_eq!(run(&args).0, Some(0), "generate {model}");
            files.push((
                std::fs::read(format!("{prefix}.el")).unwrap(),
                std::fs::read(format!("{prefix}.truth.json")).unwrap(),
            ));
        }
        if files[0] != files[1] {
            diffs.push(format!("generate {model}"));
        }
    }

    let graph = path("sbm_a.el");
    let truth = path("sbm_a.truth.json");
    let chain = path("chain.json");
    std::fs::write(
        &chain,
        r#"{"states":[0,1,2],"rows":[[0.5,0.5,0],[0.25,0.5,0.25],[0,0.5,0.5]]}"#,
    )
    .unwrap();
    let commands: Vec<Vec<String>> = vec![
        to_args(&["detect", "--graph", &graph, "--seed", "5"]),
        to_args(&[
            "detect",
            "--graph",
            &graph,
            "--seed",
            "5",
            "--compact",
            "--delta-t",
            "3",
        ]),
        to_args(&["cost", "--graph", &graph, "--partition", &truth]),
        to_args(&["pivot", "--graph", &graph, "--seed", "5", "--runs", "4"]),
        to_args(&[
            "bench", "sbm", "--sizes", "6x3", "--p", "0.9", "--q", "0.05", "--runs", "3", "--seed",
            "5",
        ]),
        to_args(&[
            "bench", "sbm", "--sizes", "6x3", "--p", "0.9", "--q", "0.05", "--runs", "2",
            "--format", "json",
        ]),
        to_args(&[
            "bench",
            "lfr",
            "--n",
            "60",
            "--avg-deg",
            "10",
            "--min-deg",
            "6",
            "--max-deg",
            "15",
            "--min-comm",
            "10",
            "--max-comm",
            "20",
            "--runs",
            "2",
            "--r-exp",
            "2",
        ]),
        to_args(&["sample", "--graph", &graph, "--count", "20", "--seed", "5"]),
        to_args(&["sample", "--chain", &chain, "--count", "20", "--seed", "5"]),
    ];
    for args in &commands {
        let (code_a, out_a) = run(args);
        let (code_b, out_b) = run(args);
        if code_a != Some(0) || code_a != code_b || out_a != out_b || out_a.is_empty() {
            diffs.push(args[..2].join(" "));
        }
    }
    (
        diffs.is_empty(),
        format!(
            "{} commands checked, nondeterministic or failing: {diffs:?}",
            commands.len() + 2
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        (1, criterion_01_restriction_law, 10),
        (2, criterion_02_neumann_series, 5),
        (3, criterion_03_cftp_exactness, 60),
        (4, criterion_04_partial_cftp_law, 90),
        (5, criterion_05_incremental_flow, 30),
        (6, criterion_06_cost_oracle_and_optimum, 60),
        (7, criterion_07_pivot_approximation, 120),
        (8, criterion_08_sbm_recovery, 120),
        (9, criterion_09_cost_versus_pivot, 180),
        (10, criterion_10_cli_determinism, 60),
    ];
    let mut failed = 0;
    for (id, run, limit) in criteria {
        let limit = Duration::from_secs(limit);
        let start = Instant::now();
        let (ok, detail) =
            panic::catch_unwind(run).unwrap_or_else(|_| (false, "panicked".to_string()));
        let elapsed = start.elapsed();
        let pass = ok && elapsed <= limit;
        failed += !pass as usize;
        println!(
            "[{}] criterion {id}: {detail} ({:.2}s, limit {}s)",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
