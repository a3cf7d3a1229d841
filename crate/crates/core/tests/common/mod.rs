//! Independent reference implementations shared by the integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use cftp_community::rng::keyed_uniform;
use cftp_community::{Graph, MarkovChain, Partition};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Irreducible, aperiodic chain on `n` states. A random cycle plus self-loops
/// guarantees both; other entries are present with probability `density`.
pub fn random_chain(rng: &mut impl Rng, n: usize, density: f64) -> MarkovChain {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        rows[order[i]][order[(i + 1) % n]] = rng.gen_range(0.1..1.0);
        rows[i][i] = rng.gen_range(0.1..1.0);
        for j in 0..n {
            if rows[i][j] == 0.0 && rng.gen::<f64>() < density {
                rows[i][j] = rng.gen_range(0.0..1.0);
            }
        }
    }
    for row in &mut rows {
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x /= total);
    }
    MarkovChain::from_rows(rows).unwrap()
}

/// Random non-empty proper subset of `0..n` with `lo..=hi` elements.
pub fn random_subset(rng: &mut impl Rng, n: usize, lo: usize, hi: usize) -> Vec<usize> {
    let size = rng.gen_range(lo..=hi.min(n - 1));
    let mut all: Vec<usize> = (0..n).collect();
    all.shuffle(rng);
    let mut g = all[..size].to_vec();
    g.sort_unstable();
    g
}

/// Stationary law by power iteration on the half-lazy chain.
pub fn power_stationary(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len();
    let mut pi = vec![1.0 / n as f64; n];
    for _ in 0..200_000 {
        let mut next = vec![0.0; n];
        for i in 0..n {
            next[i] += 0.5 * pi[i];
            for j in 0..n {
                next[j] += 0.5 * pi[i] * rows[i][j];
            }
        }
        let diff: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        if diff < 1e-15 {
            break;
        }
    }
    pi
}

/// Restricted transition matrix by summing excursions through the
/// complement term by term: `Q_GG + Σ_k Q_GB Q_BB^k Q_BG`.
pub fn excursion_restrict(rows: &[Vec<f64>], g: &[usize]) -> Vec<Vec<f64>> {
    let n = rows.len();
    let b: Vec<usize> = (0..n).filter(|i| !g.contains(i)).collect();
    let mut out: Vec<Vec<f64>> = g
        .iter()
        .map(|&i| g.iter().map(|&j| rows[i][j]).collect())
        .collect();
    for (gi, &i) in g.iter().enumerate() {
        // Mass sitting in the complement after leaving `i`, not yet returned.
        let mut mass: Vec<f64> = b.iter().map(|&x| rows[i][x]).collect();
        for _ in 0..100_000 {
            for (gj, &j) in g.iter().enumerate() {
                out[gi][gj] += b
                    .iter()
                    .zip(&mass)
                    .map(|(&x, m)| m * rows[x][j])
                    .sum::<f64>();
            }
            let next: Vec<f64> = b
                .iter()
                .map(|&y| b.iter().zip(&mass).map(|(&x, m)| m * rows[x][y]).sum())
                .collect();
            mass = next;
            if mass.iter().sum::<f64>() < 1e-16 {
                break;
            }
        }
    }
    out
}

/// One coupled step by linear scan over targets in ascending label order.
pub fn naive_step(chain: &MarkovChain, from: usize, u: f64) -> usize {
    let mut order: Vec<usize> = (0..chain.len()).collect();
    order.sort_by_key(|&j| chain.states()[j]);
    let row = &chain.rows()[from];
    let mut acc = 0.0;
    let mut last = from;
    for j in order {
        if row[j] > 0.0 {
            acc += row[j];
            last = j;
            if u < acc {
                return j;
            }
        }
    }
    last
}

/// Runs every start forward from time `-k` to 0 and returns, per start, the
/// time-0 position and the visit counts at times `-k+1 ..= 0`.
pub fn naive_flow(chain: &MarkovChain, seed: u64, k: usize) -> (Vec<usize>, Vec<Vec<u32>>) {
    let n = chain.len();
    let uniforms: Vec<f64> = (1..=k as i64)
        .rev()
        .map(|d| keyed_uniform(seed, -d))
        .collect();
    let mut ends = Vec::with_capacity(n);
    let mut visits = Vec::with_capacity(n);
    for s in 0..n {
        let mut state = s;
        let mut counts = vec![0u32; n];
        for &u in &uniforms {
            state = naive_step(chain, state, u);
            counts[state] += 1;
        }
        ends.push(state);
        visits.push(counts);
    }
    (ends, visits)
}

/// Cluster-editing cost by checking every unordered pair.
pub fn pair_loop_cost(g: &Graph, p: &Partition) -> u64 {
    let labels = p.labels();
    let mut cost = 0;
    for u in 0..g.n() {
        for v in u + 1..g.n() {
            if (labels[u] == labels[v]) != g.has_edge(u, v) {
                cost += 1;
            }
        }
    }
    cost
}

pub fn random_graph(rng: &mut impl Rng, n: usize, p: f64) -> Graph {
    let mut g = Graph::new(n);
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen::<f64>() < p {
                g.add_edge(u, v).unwrap();
            }
        }
    }
    g
}

pub fn random_partition(rng: &mut impl Rng, n: usize) -> Partition {
    let k = rng.gen_range(1..=n.max(1));
    let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
    Partition::from_labels(&labels)
}

/// Graph whose every node has at least one edge.
pub fn random_graph_no_isolated(rng: &mut impl Rng, n: usize, p: f64) -> Graph {
    loop {
        let g = random_graph(rng, n, p);
        if (0..n).all(|u| g.degree(u) > 0) {
            return g;
        }
    }
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}
