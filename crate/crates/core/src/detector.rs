//! Critical-time community detection.
//!
//! Starting from all singletons, the backward CFTP flow is extended one depth
//! at a time. At each depth, clusters whose states all share one time-0 state
//! and have equal visit counts to the union are merged; every partition
//! produced this way is scored and the cheapest one is kept.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cftp::{FlowState, GrandCoupling, DEFAULT_N_MAX};
use crate::error::{Error, Result};
use crate::graph::{cluster_editing_cost, Graph, Partition};
use crate::markov::{build_community_walk, WalkConfig};
use crate::rng::derive_seed;

/// Partition cost minimised by the detector. Must be additive over
/// connected components, since components are optimised independently.
pub trait PartitionCost: Sync {
    fn cost(&self, g: &Graph, p: &Partition) -> Result<u64>;
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    #[default]
    ClusterEditing,
}

impl PartitionCost for CostKind {
    fn cost(&self, g: &Graph, p: &Partition) -> Result<u64> {
        match self {
            CostKind::ClusterEditing => cluster_editing_cost(g, p),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub walk: WalkConfig,
    pub cost: CostKind,
    /// Stop once the gap since the last critical time exceeds this multiple
    /// of the largest earlier gap. `None` runs to coalescence.
    pub delta_t_factor: Option<f64>,
    pub n_max: usize,
    pub seed: u64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            walk: WalkConfig::default(),
            cost: CostKind::ClusterEditing,
            delta_t_factor: None,
            n_max: DEFAULT_N_MAX,
            seed: 0,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        self.walk.validate()?;
        if let Some(f) = self.delta_t_factor {
            if !(f > 1.0 && f.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "delta_t_factor must be a finite number > 1, got {f}"
                )));
            }
        }
        if self.n_max < 1 {
            return Err(Error::InvalidArgument("n_max must be at least 1".into()));
        }
        Ok(())
    }
}

/// Clusters merged at one critical time.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriticalEvent {
    /// Index of the connected component (ordered by minimum node id).
    pub component: usize,
    /// Backward depth `k`.
    pub time: usize,
    /// One sorted node list per merge: the union of the clusters it joined.
    pub merged: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentSummary {
    pub nodes: usize,
    pub coalesced: bool,
    pub depth: usize,
    /// The gap rule ended the run before coalescence.
    pub stopped_early: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DetectionResult {
    pub best_partition: Partition,
    pub best_cost: u64,
    /// Sorted by component, then time.
    pub events: Vec<CriticalEvent>,
    /// Every component reached full coalescence.
    pub fully_coalesced: bool,
    /// Largest depth reached over all components.
    pub depth_reached: usize,
    pub components: Vec<ComponentSummary>,
}

impl DetectionResult {
    pub const FORMAT: u32 = 1;

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::json!({
            "format": Self::FORMAT,
            "clusters": self.best_partition.clusters(),
            "cost": self.best_cost,
            "events": self.events,
            "fully_coalesced": self.fully_coalesced,
            "depth_reached": self.depth_reached,
            "components": self.components,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_json_value()).expect("result serializes")
    }
}

/// Groups of cluster indices of `current` that satisfy the critical-time
/// condition under `flow`.
///
/// Clusters are bucketed by their common endpoint (a cluster whose states do
/// not share an endpoint cannot merge). Inside a bucket, pairs are tried in
/// ascending minimum-node order and a pair is accepted when every state of
/// the union has the same number of visits to the union; this repeats until
/// nothing changes.
pub fn find_critical_merges(flow: &FlowState, current: &Partition) -> Vec<Vec<usize>> {
    let mut buckets: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (ci, cluster) in current.clusters().iter().enumerate() {
        let e = flow.endpoint(cluster[0]);
        if cluster.iter().all(|&s| flow.endpoint(s) == e) {
            buckets.entry(e).or_default().push(ci);
        }
    }

    let mut groups = Vec::new();
    for members in buckets.into_values() {
        if members.len() < 2 {
            continue;
        }
        // (cluster indices, states of their union)
        let mut work: Vec<(Vec<usize>, Vec<usize>)> = members
            .into_iter()
            .map(|ci| (vec![ci], current.clusters()[ci].clone()))
            .collect();
        loop {
            let mut changed = false;
            let mut i = 0;
            while i < work.len() {
                let mut j = i + 1;
                while j < work.len() {
                    let union: Vec<usize> = work[i].1.iter().chain(&work[j].1).copied().collect();
                    if equal_union_visits(flow, &union) {
                        let (idx, states) = work.remove(j);
                        work[i].0.extend(idx);
                        work[i].1.extend(states);
                        changed = true;
                    } else {
                        j += 1;
                    }
                }
                i += 1;
            }
            if !changed {
                break;
            }
        }
        groups.extend(
            work.into_iter()
                .filter(|(idx, _)| idx.len() >= 2)
                .map(|(mut idx, _)| {
                    idx.sort_unstable();
                    idx
                }),
        );
    }
    groups.sort_unstable();
    groups
}

fn equal_union_visits(flow: &FlowState, union: &[usize]) -> bool {
    let count = |s| flow.visits_to(s, union).expect("flow tracks visits");
    let first = count(union[0]);
    union[1..].iter().all(|&s| count(s) == first)
}

/// True when the gap since the last critical time exceeds `factor` times the
/// largest gap between earlier critical times. Needs at least two events.
pub fn stop_by_delta_t(event_times: &[usize], depth: usize, factor: f64) -> bool {
    if event_times.len() < 2 {
        return false;
    }
    let max_gap = event_times
        .windows(2)
        .map(|w| w[1] - w[0])
        .max()
        .unwrap_or(0);
    let last = *event_times.last().unwrap();
    depth.saturating_sub(last) as f64 > factor * max_gap as f64
}

struct ComponentRun {
    partition: Partition,
    events: Vec<(usize, Vec<Vec<usize>>)>,
    summary: ComponentSummary,
}

fn detect_component(g: &Graph, cfg: &DetectorConfig, seed: u64) -> Result<ComponentRun> {
    let n = g.n();
    if n == 1 {
        return Ok(ComponentRun {
            partition: Partition::singletons(1),
            events: Vec::new(),
            summary: ComponentSummary {
                nodes: 1,
                coalesced: true,
                depth: 0,
                stopped_early: false,
            },
        });
    }
    let chain = build_community_walk(g, &cfg.walk)?;
    let coupling = GrandCoupling::new(&chain, seed);
    let mut flow = FlowState::new(n);
    let mut current = Partition::singletons(n);
    let mut best = current.clone();
    let mut best_cost = cfg.cost.cost(g, &best)?;
    let mut events = Vec::new();
    let mut times = Vec::new();
    let mut coalesced = false;
    let mut stopped_early = false;

    while flow.depth() < cfg.n_max {
        let map = coupling.map_at(-(flow.depth() as i64 + 1));
        flow.extend_backward(&map)?;
        let k = flow.depth();

        let mut groups = find_critical_merges(&flow, &current);
        let all_met = flow.coalesced().is_some();
        if all_met && current.len() - groups.iter().map(|g| g.len() - 1).sum::<usize>() > 1 {
            // Regular coalescence ends the run with the single-cluster partition.
            groups = vec![(0..current.len()).collect()];
        }
        if !groups.is_empty() {
            let merged = groups
                .iter()
                .map(|grp| {
                    let mut nodes: Vec<usize> = grp
                        .iter()
                        .flat_map(|&ci| current.clusters()[ci].iter().copied())
                        .collect();
                    nodes.sort_unstable();
                    nodes
                })
                .collect();
            current = current.merge_groups(&groups)?;
            events.push((k, merged));
            times.push(k);
            let cost = cfg.cost.cost(g, &current)?;
            if cost < best_cost {
                best = current.clone();
                best_cost = cost;
            }
        }
        if all_met {
            coalesced = true;
            break;
        }
        if let Some(factor) = cfg.delta_t_factor {
            if stop_by_delta_t(&times, k, factor) {
                stopped_early = true;
                break;
            }
        }
    }

    Ok(ComponentRun {
        partition: best,
        events,
        summary: ComponentSummary {
            nodes: n,
            coalesced,
            depth: flow.depth(),
            stopped_early,
        },
    })
}

/// Runs critical-time detection on every connected component of `g` and
/// returns the union of the per-component best partitions.
///
/// Component `i` (in order of minimum node id) uses seed
/// `derive_seed(cfg.seed, i)`, so the result depends only on `(g, cfg)`.
pub fn detect_communities(g: &Graph, cfg: &DetectorConfig) -> Result<DetectionResult> {
    cfg.validate()?;
    if g.n() == 0 {
        return Err(Error::InvalidArgument("graph has no nodes".into()));
    }
    let components = g.connected_components();
    let runs: Vec<ComponentRun> = components
        .par_iter()
        .enumerate()
        .map(|(ci, nodes)| {
            let sub = g.induced_subgraph(nodes)?;
            detect_component(&sub, cfg, derive_seed(cfg.seed, ci as u64))
        })
        .collect::<Result<_>>()?;

    let mut clusters = Vec::new();
    let mut events = Vec::new();
    let mut summaries = Vec::with_capacity(runs.len());
    for (ci, (nodes, run)) in components.iter().zip(runs).enumerate() {
        clusters.extend(run.partition.relabel(nodes));
        for (time, merged) in run.events {
            events.push(CriticalEvent {
                component: ci,
                time,
                merged: merged
                    .into_iter()
                    .map(|grp| grp.into_iter().map(|u| nodes[u]).collect())
                    .collect(),
            });
        }
        summaries.push(run.summary);
    }
    let best_partition = Partition::new(g.n(), clusters)?;
    let best_cost = cfg.cost.cost(g, &best_partition)?;
    Ok(DetectionResult {
        best_partition,
        best_cost,
        events,
        fully_coalesced: summaries.iter().all(|s| s.coalesced),
        depth_reached: summaries.iter().map(|s| s.depth).max().unwrap_or(0),
        components: summaries,
    })
}
