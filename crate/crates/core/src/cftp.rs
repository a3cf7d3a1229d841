//! Coupling from the past with a grand coupling.
//!
//! One uniform `U_t` drives every state's step out of time `t`: state `s` moves
//! to the inverse-CDF of its row at `U_t`, with cumulative mass accumulated over
//! target states in ascending label order. Since `U_t` depends only on
//! `(seed, t)`, going one step further back reuses every later step exactly.
//!
//! Instead of re-simulating all chains from `−k` at each depth, [`FlowState`]
//! keeps the composed map `s ↦ Y_0^{(s,−k)}` together with per-path visit
//! counts and prepends one step per extension.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::markov::MarkovChain;
use crate::rng::{derive_seed, keyed_uniform};

/// Default cap on backward depth.
pub const DEFAULT_N_MAX: usize = 100_000;

/// Below this many states the per-start updates run sequentially.
const PAR_THRESHOLD: usize = 256;

/// Cumulative transition tables used for inverse-CDF updates.
#[derive(Clone, Debug)]
pub struct GrandCoupling {
    seed: u64,
    /// Per row: `(target position, cumulative mass)` over positive entries.
    cumulative: Vec<Vec<(usize, f64)>>,
}

impl GrandCoupling {
    pub fn new(chain: &MarkovChain, seed: u64) -> Self {
        let mut order: Vec<usize> = (0..chain.len()).collect();
        order.sort_by_key(|&j| chain.states()[j]);
        let cumulative = chain
            .rows()
            .iter()
            .map(|row| {
                let mut acc = 0.0;
                order
                    .iter()
                    .filter(|&&j| row[j] > 0.0)
                    .map(|&j| {
                        acc += row[j];
                        (j, acc)
                    })
                    .collect()
            })
            .collect();
        Self { seed, cumulative }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.cumulative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative.is_empty()
    }

    /// Next position from `from` when the shared uniform is `u`.
    #[inline]
    pub fn step(&self, from: usize, u: f64) -> usize {
        let row = &self.cumulative[from];
        let idx = row.partition_point(|&(_, c)| c <= u);
        // Rounding can leave the last cumulative value just below `u`.
        row[idx.min(row.len() - 1)].0
    }

    /// The coupled update for the step from `t` to `t + 1`.
    pub fn map_at(&self, t: i64) -> RandomMap {
        let u = keyed_uniform(self.seed, t);
        RandomMap {
            t,
            image: (0..self.len()).map(|s| self.step(s, u)).collect(),
        }
    }
}

/// Update function applied to every state for the step from `t` to `t + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RandomMap {
    pub t: i64,
    /// `image[s]`: position reached from position `s`.
    pub image: Vec<usize>,
}

/// The grand-coupling map at time `t`. Same `(seed, t)` gives the same map.
pub fn step_map(chain: &MarkovChain, seed: u64, t: i64) -> RandomMap {
    GrandCoupling::new(chain, seed).map_at(t)
}

/// Composed backward flow from depth `k` to time 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowState {
    k: usize,
    n: usize,
    endpoint: Vec<usize>,
    /// Row-major `n × n`: visits of start `s`'s path to `j` over times `−(k−1)..=0`.
    /// The start state at `−k` is not counted.
    visits: Option<Vec<u32>>,
}

impl FlowState {
    /// Depth 0: every start is its own endpoint and nothing has been visited.
    pub fn new(n: usize) -> Self {
        Self {
            k: 0,
            n,
            endpoint: (0..n).collect(),
            visits: Some(vec![0; n * n]),
        }
    }

    /// Depth-0 flow that does not track visit counts.
    pub fn endpoints_only(n: usize) -> Self {
        Self {
            visits: None,
            ..Self::new(n)
        }
    }

    #[inline]
    pub fn depth(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn endpoints(&self) -> &[usize] {
        &self.endpoint
    }

    #[inline]
    pub fn endpoint(&self, s: usize) -> usize {
        self.endpoint[s]
    }

    /// Visit counts of start `s`'s path, one entry per state.
    pub fn visits(&self, s: usize) -> Option<&[u32]> {
        self.visits
            .as_ref()
            .map(|v| &v[s * self.n..(s + 1) * self.n])
    }

    /// Number of visits of start `s`'s path to the positions in `set`.
    pub fn visits_to(&self, s: usize, set: &[usize]) -> Option<u64> {
        self.visits(s)
            .map(|row| set.iter().map(|&j| row[j] as u64).sum())
    }

    /// Common endpoint of all starts, if they have coalesced.
    pub fn coalesced(&self) -> Option<usize> {
        let first = *self.endpoint.first()?;
        self.endpoint.iter().all(|&e| e == first).then_some(first)
    }

    /// Prepends the step out of time `−(k+1)`.
    pub fn extend_backward(&mut self, map: &RandomMap) -> Result<()> {
        let expected = -(self.k as i64 + 1);
        if map.t != expected {
            return Err(Error::InvalidArgument(format!(
                "map at t={} cannot extend a flow of depth {} (needs t={expected})",
                map.t, self.k
            )));
        }
        if map.image.len() != self.n {
            return Err(Error::InvalidArgument(format!(
                "map over {} states, flow over {}",
                map.image.len(),
                self.n
            )));
        }
        let n = self.n;
        let old_end = &self.endpoint;
        self.endpoint = map.image.iter().map(|&j| old_end[j]).collect();
        if let Some(old) = self.visits.as_ref() {
            let mut fresh = vec![0u32; n * n];
            let fill = |(s, row): (usize, &mut [u32])| {
                let j = map.image[s];
                row.copy_from_slice(&old[j * n..(j + 1) * n]);
                row[j] += 1;
            };
            if n >= PAR_THRESHOLD {
                fresh.par_chunks_mut(n).enumerate().for_each(fill);
            } else {
                fresh.chunks_mut(n).enumerate().for_each(fill);
            }
            self.visits = Some(fresh);
        }
        self.k += 1;
        Ok(())
    }
}

/// Outcome of a plain CFTP run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoalescenceReport {
    pub coalesced: bool,
    /// Depth at which coalescence was detected (or the cap).
    pub depth: usize,
    /// Label of the common time-0 state; present iff `coalesced`.
    pub sample: Option<usize>,
}

/// Which depths are checked for coalescence.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Schedule {
    /// Every depth `1, 2, 3, …`.
    #[default]
    Unit,
    /// Only depths `1, 2, 4, 8, …` (and the cap). The sample is the same as
    /// under `Unit`; only the reported depth differs.
    Doubling,
}

/// Exact stationary sample by coupling from the past.
pub fn run_cftp(chain: &MarkovChain, seed: u64, n_max: usize) -> CoalescenceReport {
    run_cftp_with(chain, seed, n_max, Schedule::Unit)
}

pub fn run_cftp_with(
    chain: &MarkovChain,
    seed: u64,
    n_max: usize,
    schedule: Schedule,
) -> CoalescenceReport {
    let coupling = GrandCoupling::new(chain, seed);
    let mut flow = FlowState::endpoints_only(chain.len());
    while flow.depth() < n_max {
        let map = coupling.map_at(-(flow.depth() as i64 + 1));
        flow.extend_backward(&map)
            .expect("maps are generated in order");
        let k = flow.depth();
        let check = match schedule {
            Schedule::Unit => true,
            Schedule::Doubling => k.is_power_of_two() || k == n_max,
        };
        if check {
            if let Some(s) = flow.coalesced() {
                return CoalescenceReport {
                    coalesced: true,
                    depth: k,
                    sample: Some(chain.states()[s]),
                };
            }
        }
    }
    CoalescenceReport {
        coalesced: false,
        depth: flow.depth(),
        sample: None,
    }
}

/// `count` independent exact samples; sample `i` uses `derive_seed(seed, i)`.
pub fn sample_many(
    chain: &MarkovChain,
    seed: u64,
    count: usize,
    n_max: usize,
) -> Result<Vec<usize>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            run_cftp(chain, derive_seed(seed, i as u64), n_max)
                .sample
                .ok_or(Error::NotCoalesced { n_max })
        })
        .collect()
}

/// Sample from the chain restricted to `subset` (labels) via partial coalescence.
///
/// Goes back one step at a time until all starts in `subset` share both their
/// time-0 state and their number of visits to `subset`, then runs forward from
/// that common state with fresh randomness (keys `t = 1, 2, …`) until the
/// chain is in `subset`, and returns that state's label.
pub fn run_partial_cftp(
    chain: &MarkovChain,
    subset: &[usize],
    seed: u64,
    n_max: usize,
) -> Result<usize> {
    if subset.is_empty() {
        return Err(Error::InvalidArgument("empty subset".into()));
    }
    let n = chain.len();
    let mut inside = vec![false; n];
    let mut starts = Vec::with_capacity(subset.len());
    for &label in subset {
        let i = chain
            .index_of(label)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown state {label}")))?;
        if !std::mem::replace(&mut inside[i], true) {
            starts.push(i);
        }
    }

    let coupling = GrandCoupling::new(chain, seed);
    let mut flow = FlowState::endpoints_only(n);
    // Visits to the subset along each start's path; tracked alone since the
    // full visit matrix is not needed here.
    let mut hits = vec![0u64; n];
    let common = loop {
        if flow.depth() >= n_max {
            return Err(Error::NotCoalesced { n_max });
        }
        let map = coupling.map_at(-(flow.depth() as i64 + 1));
        flow.extend_backward(&map)?;
        hits = map
            .image
            .iter()
            .map(|&j| hits[j] + inside[j] as u64)
            .collect();
        let (e0, h0) = (flow.endpoint(starts[0]), hits[starts[0]]);
        if starts
            .iter()
            .all(|&s| flow.endpoint(s) == e0 && hits[s] == h0)
        {
            break e0;
        }
    };

    let mut state = common;
    let mut t = 1i64;
    while !inside[state] {
        if t as usize > n_max {
            return Err(Error::NotCoalesced { n_max });
        }
        state = coupling.step(state, keyed_uniform(seed, t));
        t += 1;
    }
    Ok(chain.states()[state])
}
