//! Ground-truthed graph generators, the CC-PIVOT baseline, an exhaustive
//! optimal-partition search for small graphs, and the cost comparison harness.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::{detect_communities, DetectorConfig};
use crate::error::{Error, Result};
use crate::graph::{cluster_editing_cost, Graph, Partition};
use crate::rng::{derive_seed, stream_rng};

/// Planted-partition model: blocks of the given sizes, within-block edge
/// probability `p`, cross-block probability `q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SbmParams {
    pub cluster_sizes: Vec<usize>,
    pub p: f64,
    pub q: f64,
    pub seed: u64,
}

impl SbmParams {
    pub fn validate(&self) -> Result<()> {
        if self.cluster_sizes.is_empty() || self.cluster_sizes.contains(&0) {
            return Err(Error::InvalidArgument(
                "cluster sizes must be a non-empty list of positive integers".into(),
            ));
        }
        if !(0.0 <= self.q && self.q < self.p && self.p <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "need 0 <= q < p <= 1, got p={} q={}",
                self.p, self.q
            )));
        }
        Ok(())
    }
}

/// Samples an SBM graph; block `i` holds a contiguous range of node ids.
pub fn gen_sbm(params: &SbmParams) -> Result<(Graph, Partition)> {
    params.validate()?;
    let labels: Vec<usize> = params
        .cluster_sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &s)| std::iter::repeat_n(b, s))
        .collect();
    let n = labels.len();
    let mut rng = stream_rng(params.seed, 0);
    let mut g = Graph::new(n);
    for u in 0..n {
        for v in u + 1..n {
            let prob = if labels[u] == labels[v] {
                params.p
            } else {
                params.q
            };
            if rng.gen::<f64>() < prob {
                g.add_edge(u, v)?;
            }
        }
    }
    Ok((g, Partition::from_labels(&labels)))
}

/// Parameters of the simplified LFR generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LfrParams {
    pub n: usize,
    /// Community-size exponent.
    pub tau1: f64,
    /// Degree exponent.
    pub tau2: f64,
    /// Fraction of each node's edges that leave its community.
    pub mu: f64,
    pub avg_deg: f64,
    pub min_deg: usize,
    pub max_deg: usize,
    pub min_comm: usize,
    pub max_comm: usize,
    pub seed: u64,
}

impl Default for LfrParams {
    fn default() -> Self {
        Self {
            n: 200,
            tau1: 2.0,
            tau2: 3.0,
            mu: 0.25,
            avg_deg: 30.0,
            min_deg: 20,
            max_deg: 50,
            min_comm: 20,
            max_comm: 60,
            seed: 0,
        }
    }
}

impl LfrParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.n < 2 {
            return bad(format!("n must be at least 2, got {}", self.n));
        }
        if !(self.tau1 > 1.0 && self.tau2 > 1.0) {
            return bad(format!(
                "exponents must exceed 1, got tau1={} tau2={}",
                self.tau1, self.tau2
            ));
        }
        if !(0.0..1.0).contains(&self.mu) {
            return bad(format!("mu must lie in [0, 1), got {}", self.mu));
        }
        if !(self.avg_deg > 0.0 && self.avg_deg < self.n as f64) {
            return bad(format!("avg_deg must lie in (0, n), got {}", self.avg_deg));
        }
        if !(1 <= self.min_deg && self.min_deg <= self.max_deg && self.max_deg < self.n) {
            return bad(format!(
                "need 1 <= min_deg <= max_deg < n, got {}..{}",
                self.min_deg, self.max_deg
            ));
        }
        if !(2 <= self.min_comm && self.min_comm <= self.max_comm && self.max_comm <= self.n) {
            return bad(format!(
                "need 2 <= min_comm <= max_comm <= n, got {}..{}",
                self.min_comm, self.max_comm
            ));
        }
        Ok(())
    }
}

/// Inverse-transform sampler for `P(k) ∝ k^-exponent` on `lo..=hi`.
#[derive(Clone, Debug)]
pub struct TruncatedPowerLaw {
    lo: usize,
    cdf: Vec<f64>,
}

impl TruncatedPowerLaw {
    pub fn new(lo: usize, hi: usize, exponent: f64) -> Self {
        assert!(1 <= lo && lo <= hi);
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = (lo..=hi)
            .map(|k| {
                acc += (k as f64).powf(-exponent);
                acc
            })
            .collect();
        for c in &mut cdf {
            *c /= acc;
        }
        Self { lo, cdf }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.gen();
        let idx = self.cdf.partition_point(|&c| c <= u);
        self.lo + idx.min(self.cdf.len() - 1)
    }

    pub fn mean(&self) -> f64 {
        let mut prev = 0.0;
        self.cdf
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let m = (self.lo + i) as f64 * (c - prev);
                prev = c;
                m
            })
            .sum()
    }
}

fn community_sizes(p: &LfrParams, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let law = TruncatedPowerLaw::new(p.min_comm, p.max_comm, p.tau1);
    let mut sizes = Vec::new();
    let mut total = 0;
    while total < p.n {
        let s = law.sample(rng).min(p.n - total);
        sizes.push(s);
        total += s;
    }
    // The last draw was cut to fit; spread it over the others if it is too small.
    let last = *sizes.last().unwrap();
    if last < p.min_comm && sizes.len() > 1 {
        sizes.pop();
        for _ in 0..last {
            let (i, _) = sizes
                .iter()
                .enumerate()
                .min_by_key(|&(i, &s)| (s, i))
                .unwrap();
            sizes[i] += 1;
        }
    }
    sizes
}

/// Pairs stubs into edges, repairing self-loops, repeats and pairs that
/// `allowed` rejects by random endpoint swaps. Pairs still invalid after the
/// repair passes are dropped.
fn wire_stubs(
    mut stubs: Vec<usize>,
    rng: &mut ChaCha8Rng,
    allowed: impl Fn(usize, usize) -> bool,
) -> Vec<(usize, usize)> {
    const PASSES: usize = 100;
    if stubs.len() % 2 == 1 {
        let i = rng.gen_range(0..stubs.len());
        stubs.swap_remove(i);
    }
    stubs.shuffle(rng);
    let key = |a: usize, b: usize| (a.min(b), a.max(b));
    let valid = |a: usize, b: usize| a != b && allowed(a, b);
    let mut pairs: Vec<(usize, usize)> = stubs.chunks(2).map(|c| (c[0], c[1])).collect();
    if pairs.is_empty() {
        return pairs;
    }
    let mut count: HashMap<(usize, usize), usize> = HashMap::new();
    for &(a, b) in &pairs {
        *count.entry(key(a, b)).or_default() += 1;
    }
    for _ in 0..PASSES {
        let bad: Vec<usize> = (0..pairs.len())
            .filter(|&i| {
                let (a, b) = pairs[i];
                !valid(a, b) || count[&key(a, b)] > 1
            })
            .collect();
        if bad.is_empty() {
            break;
        }
        for i in bad {
            let (a, b) = pairs[i];
            if valid(a, b) && count[&key(a, b)] <= 1 {
                continue;
            }
            let j = rng.gen_range(0..pairs.len());
            if j == i {
                continue;
            }
            let (c, d) = pairs[j];
            let (x, y) = if rng.gen::<bool>() {
                ((a, c), (b, d))
            } else {
                ((a, d), (b, c))
            };
            let kx = key(x.0, x.1);
            let ky = key(y.0, y.1);
            if !valid(x.0, x.1) || !valid(y.0, y.1) || kx == ky {
                continue;
            }
            if count.get(&kx).copied().unwrap_or(0) > 0 || count.get(&ky).copied().unwrap_or(0) > 0
            {
                continue;
            }
            for old in [key(a, b), key(c, d)] {
                *count.get_mut(&old).unwrap() -= 1;
            }
            *count.entry(kx).or_default() += 1;
            *count.entry(ky).or_default() += 1;
            pairs[i] = x;
            pairs[j] = y;
        }
    }
    let mut seen = std::collections::HashSet::new();
    pairs
        .into_iter()
        .filter(|&(a, b)| valid(a, b) && seen.insert(key(a, b)))
        .collect()
}

/// Simplified LFR benchmark graph.
///
/// Community sizes follow a truncated power law (`tau1`), degrees another
/// (`tau2`) rescaled toward `avg_deg`. Each node splits its degree into
/// `⌈(1−μ)·deg⌉` internal stubs and the rest external; internal stubs are
/// wired configuration-model style within each community and external ones
/// across communities. Unlike the reference generator there is no joint
/// repair of the degree and size sequences: internal degrees that do not fit
/// a community are capped.
pub fn gen_lfr_lite(params: &LfrParams) -> Result<(Graph, Partition)> {
    params.validate()?;
    let n = params.n;
    let mut rng = stream_rng(params.seed, 0);

    let sizes = community_sizes(params, &mut rng);

    let degree_law = TruncatedPowerLaw::new(params.min_deg, params.max_deg, params.tau2);
    let scale = params.avg_deg / degree_law.mean();
    let degrees: Vec<usize> = (0..n)
        .map(|_| {
            let d = (degree_law.sample(&mut rng) as f64 * scale).round() as usize;
            d.clamp(1, n - 1)
        })
        .collect();
    let internal: Vec<usize> = degrees
        .iter()
        .map(|&d| ((1.0 - params.mu) * d as f64).ceil() as usize)
        .collect();

    // Place nodes by decreasing internal degree into a random community that
    // still has room and is large enough; otherwise the roomiest one.
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    order.sort_by_key(|&u| std::cmp::Reverse(internal[u]));
    let mut room = sizes.clone();
    let mut label = vec![0usize; n];
    for &u in &order {
        let fits: Vec<usize> = (0..sizes.len())
            .filter(|&c| room[c] > 0 && sizes[c] > internal[u])
            .collect();
        let c = if fits.is_empty() {
            (0..sizes.len())
                .max_by_key(|&c| (room[c], sizes[c]))
                .unwrap()
        } else {
            fits[rng.gen_range(0..fits.len())]
        };
        room[c] -= 1;
        label[u] = c;
    }

    let mut g = Graph::new(n);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); sizes.len()];
    for u in 0..n {
        members[label[u]].push(u);
    }
    let mut external_stubs = Vec::new();
    for nodes in &members {
        let mut stubs = Vec::new();
        for &u in nodes {
            let k_in = internal[u].min(nodes.len() - 1);
            stubs.extend(std::iter::repeat_n(u, k_in));
            external_stubs.extend(std::iter::repeat_n(u, degrees[u] - internal[u]));
        }
        for (a, b) in wire_stubs(stubs, &mut rng, |_, _| true) {
            g.add_edge(a, b)?;
        }
    }
    for (a, b) in wire_stubs(external_stubs, &mut rng, |a, b| label[a] != label[b]) {
        g.add_edge(a, b)?;
    }
    Ok((g, Partition::from_labels(&label)))
}

/// CC-PIVOT: pick a uniformly random unclustered pivot, cluster it with its
/// unclustered neighbours, repeat.
pub fn cc_pivot(g: &Graph, seed: u64) -> Partition {
    let n = g.n();
    let mut rng = stream_rng(seed, 0);
    let mut order: Vec<usize> = (0..n).collect();
    // The first unclustered node of a uniform permutation is a uniform pick
    // among the unclustered ones.
    order.shuffle(&mut rng);
    let mut clustered = vec![false; n];
    let mut clusters = Vec::new();
    for pivot in order {
        if clustered[pivot] {
            continue;
        }
        clustered[pivot] = true;
        let mut cluster = vec![pivot];
        for &v in g.neighbors(pivot) {
            if !clustered[v] {
                clustered[v] = true;
                cluster.push(v);
            }
        }
        clusters.push(cluster);
    }
    Partition::new(n, clusters).expect("pivot clusters partition the nodes")
}

/// Best of `restarts` CC-PIVOT runs (seeds derived from `seed`); ties keep the earliest.
pub fn cc_pivot_best_of(g: &Graph, seed: u64, restarts: usize) -> Result<(Partition, u64)> {
    let mut best: Option<(Partition, u64)> = None;
    for i in 0..restarts.max(1) {
        let p = cc_pivot(g, derive_seed(seed, i as u64));
        let c = cluster_editing_cost(g, &p)?;
        if best.as_ref().is_none_or(|(_, bc)| c < *bc) {
            best = Some((p, c));
        }
    }
    Ok(best.unwrap())
}

/// Largest graph accepted by [`brute_force_optimal`].
pub const BRUTE_FORCE_MAX_N: usize = 10;

/// Minimum cluster-editing partition by enumerating all set partitions.
/// Ties go to the lexicographically smallest canonical form.
pub fn brute_force_optimal(g: &Graph) -> Result<(Partition, u64)> {
    let n = g.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::InvalidArgument(format!(
            "exhaustive search limited to {BRUTE_FORCE_MAX_N} nodes, got {n}"
        )));
    }
    if n == 0 {
        return Ok((Partition::whole(0), 0));
    }
    let adj: Vec<Vec<bool>> = (0..n)
        .map(|u| (0..n).map(|v| g.has_edge(u, v)).collect())
        .collect();
    // Restricted growth strings: rgs[0] = 0, rgs[i] <= 1 + max(rgs[..i]).
    let mut rgs = vec![0usize; n];
    let mut best: Option<(Partition, u64)> = None;
    loop {
        let mut cost = 0u64;
        for u in 0..n {
            for v in u + 1..n {
                if (rgs[u] == rgs[v]) != adj[u][v] {
                    cost += 1;
                }
            }
        }
        let better = match &best {
            None => true,
            Some((bp, bc)) => {
                cost < *bc
                    || (cost == *bc && Partition::from_labels(&rgs).clusters() < bp.clusters())
            }
        };
        if better {
            best = Some((Partition::from_labels(&rgs), cost));
        }
        // Advance to the next restricted growth string.
        let mut i = n - 1;
        loop {
            if i == 0 {
                return Ok(best.unwrap());
            }
            let max_prefix = rgs[..i].iter().copied().max().unwrap();
            if rgs[i] <= max_prefix {
                rgs[i] += 1;
                for r in &mut rgs[i + 1..] {
                    *r = 0;
                }
                break;
            }
            i -= 1;
        }
    }
}

/// Graph model sampled by the comparison harness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum BenchModel {
    Sbm {
        cluster_sizes: Vec<usize>,
        p: f64,
        q: f64,
    },
    Lfr(LfrParams),
}

impl BenchModel {
    /// Draws one graph with its ground truth; the model's own seed field is ignored.
    pub fn sample(&self, seed: u64) -> Result<(Graph, Partition)> {
        match self {
            BenchModel::Sbm {
                cluster_sizes,
                p,
                q,
            } => gen_sbm(&SbmParams {
                cluster_sizes: cluster_sizes.clone(),
                p: *p,
                q: *q,
                seed,
            }),
            BenchModel::Lfr(params) => gen_lfr_lite(&LfrParams {
                seed,
                ..params.clone()
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchRun {
    pub run: usize,
    pub our_cost: u64,
    pub ccpivot_cost: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub model: BenchModel,
    pub seed: u64,
    pub pivot_restarts: usize,
    pub detector: DetectorConfig,
    pub runs: Vec<BenchRun>,
    pub our_mean: f64,
    pub ccpivot_mean: f64,
}

impl BenchReport {
    /// One row per run plus a final `mean` row.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["run", "our_cost", "ccpivot_cost"]).unwrap();
        for r in &self.runs {
            w.serialize((r.run, r.our_cost, r.ccpivot_cost)).unwrap();
        }
        w.serialize(("mean", self.our_mean, self.ccpivot_mean))
            .unwrap();
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn mean(xs: impl Iterator<Item = u64>) -> f64 {
    let (sum, count) = xs.fold((0u64, 0u64), |(s, c), x| (s + x, c + 1));
    sum as f64 / count as f64
}

/// Draws `runs` graphs from `model` and records the cluster-editing cost of
/// the detector and of CC-PIVOT on each. Run `i` derives all of its seeds
/// from `derive_seed(seed, i)`; the detector's own seed field is replaced.
pub fn compare_costs(
    model: &BenchModel,
    runs: usize,
    detector: &DetectorConfig,
    pivot_restarts: usize,
    seed: u64,
) -> Result<BenchReport> {
    if runs == 0 {
        return Err(Error::InvalidArgument("runs must be at least 1".into()));
    }
    let rows: Vec<BenchRun> = (0..runs)
        .into_par_iter()
        .map(|run| {
            let run_seed = derive_seed(seed, run as u64);
            let (g, _) = model.sample(derive_seed(run_seed, 0))?;
            let cfg = DetectorConfig {
                seed: derive_seed(run_seed, 1),
                ..detector.clone()
            };
            let ours = detect_communities(&g, &cfg)?;
            let (_, pivot_cost) = cc_pivot_best_of(&g, derive_seed(run_seed, 2), pivot_restarts)?;
            Ok(BenchRun {
                run,
                our_cost: ours.best_cost,
                ccpivot_cost: pivot_cost,
            })
        })
        .collect::<Result<_>>()?;
    Ok(BenchReport {
        model: model.clone(),
        seed,
        pivot_restarts,
        detector: detector.clone(),
        our_mean: mean(rows.iter().map(|r| r.our_cost)),
        ccpivot_mean: mean(rows.iter().map(|r| r.ccpivot_cost)),
        runs: rows,
    })
}
