//! Finite Markov chains: the common-neighbour random walk on a graph,
//! stationary distributions, and restriction of a chain to a subset of its
//! states (the chain observed only while it sits in that subset).

use std::collections::{BTreeMap, VecDeque};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Tolerance on row sums accepted by [`MarkovChain::new`].
pub const ROW_SUM_TOL: f64 = 1e-12;

/// Row-stochastic transition matrix over labelled states.
///
/// `rows[i][j]` is the probability of moving from `states[i]` to `states[j]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovChain {
    states: Vec<usize>,
    rows: Vec<Vec<f64>>,
}

impl MarkovChain {
    pub fn new(states: Vec<usize>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let chain = Self { states, rows };
        chain.validate(ROW_SUM_TOL)?;
        Ok(chain)
    }

    /// Chain over states `0..n`.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new((0..rows.len()).collect(), rows)
    }

    fn validate(&self, tol: f64) -> Result<()> {
        let n = self.states.len();
        if n == 0 {
            return Err(Error::InvalidArgument("chain has no states".into()));
        }
        if self.rows.len() != n {
            return Err(Error::InvalidArgument(format!(
                "{} rows for {n} states",
                self.rows.len()
            )));
        }
        let mut seen = BTreeMap::new();
        for (i, &s) in self.states.iter().enumerate() {
            if seen.insert(s, i).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate state {s}")));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidArgument(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            if let Some(bad) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(Error::InvalidArgument(format!(
                    "row {i} has entry {bad} outside [0, 1]"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > tol {
                return Err(Error::InvalidArgument(format!("row {i} sums to {sum}")));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: MarkovChain = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            msg: e.to_string(),
        })?;
        raw.validate(ROW_SUM_TOL)?;
        Ok(raw)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("chain serializes")
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.states.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    #[inline]
    pub fn prob(&self, from: usize, to: usize) -> f64 {
        self.rows[from][to]
    }

    /// Position of the state labelled `label`.
    pub fn index_of(&self, label: usize) -> Option<usize> {
        self.states.iter().position(|&s| s == label)
    }

    /// Dense block `Q[rows][cols]` by position.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Vec<Vec<f64>> {
        rows.iter()
            .map(|&i| cols.iter().map(|&j| self.rows[i][j]).collect())
            .collect()
    }

    fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.rows[i]
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(j, _)| j)
    }

    /// BFS distances from position 0 along positive entries (forward or reversed).
    #[allow(clippy::needless_range_loop)]
    fn bfs_levels(&self, reversed: bool) -> Vec<Option<usize>> {
        let n = self.len();
        let mut level = vec![None; n];
        level[0] = Some(0);
        let mut queue = VecDeque::from([0usize]);
        while let Some(u) = queue.pop_front() {
            let d = level[u].unwrap();
            for v in 0..n {
                let p = if reversed {
                    self.rows[v][u]
                } else {
                    self.rows[u][v]
                };
                if p > 0.0 && level[v].is_none() {
                    level[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        level
    }

    /// Fails with the labels of two mutually unreachable states if the
    /// positive-entry digraph is not strongly connected.
    pub fn check_irreducible(&self) -> Result<()> {
        if let Some(to) = self.bfs_levels(false).iter().position(Option::is_none) {
            return Err(Error::Reducible {
                from: self.states[0],
                to: self.states[to],
            });
        }
        if let Some(from) = self.bfs_levels(true).iter().position(Option::is_none) {
            return Err(Error::Reducible {
                from: self.states[from],
                to: self.states[0],
            });
        }
        Ok(())
    }

    /// Period of an irreducible chain: gcd over edges `u→v` of `level(u) + 1 − level(v)`.
    pub fn period(&self) -> Result<usize> {
        self.check_irreducible()?;
        let level = self.bfs_levels(false);
        let mut g = 0usize;
        for u in 0..self.len() {
            let lu = level[u].unwrap();
            for v in self.successors(u) {
                let lv = level[v].unwrap();
                g = gcd(g, (lu + 1).abs_diff(lv));
            }
        }
        Ok(g.max(1))
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Probability vector aligned with a chain's state order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub probs: Vec<f64>,
}

impl Distribution {
    /// Empirical distribution of `samples` (positions in `0..n`).
    pub fn empirical(n: usize, samples: impl IntoIterator<Item = usize>) -> Self {
        let mut counts = vec![0u64; n];
        let mut total = 0u64;
        for s in samples {
            counts[s] += 1;
            total += 1;
        }
        Self {
            probs: counts
                .into_iter()
                .map(|c| c as f64 / total.max(1) as f64)
                .collect(),
        }
    }

    pub fn total_variation(&self, other: &Distribution) -> f64 {
        0.5 * self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }

    /// Mass of the positions in `subset`.
    pub fn mass(&self, subset: &[usize]) -> f64 {
        subset.iter().map(|&i| self.probs[i]).sum()
    }

    /// `π(w) / π(G)` for each `w` in `subset`, in the order given.
    pub fn conditional(&self, subset: &[usize]) -> Distribution {
        let total = self.mass(subset);
        Distribution {
            probs: subset.iter().map(|&i| self.probs[i] / total).collect(),
        }
    }
}

/// Parameters of the common-neighbour random walk.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    /// Exponent `r` in the edge weight `|N(u) ∩ N(v)|^r`.
    pub r_exp: u32,
    /// Added to every edge weight so edges without common neighbours keep some mass.
    pub epsilon: f64,
    /// Holding probability mixed into every row.
    pub laziness: f64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            r_exp: 2,
            epsilon: 1e-3,
            laziness: 0.05,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.r_exp < 1 {
            return Err(Error::InvalidArgument("r_exp must be at least 1".into()));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be finite and non-negative, got {}",
                self.epsilon
            )));
        }
        if !(0.0..1.0).contains(&self.laziness) {
            return Err(Error::InvalidArgument(format!(
                "laziness must lie in [0, 1), got {}",
                self.laziness
            )));
        }
        Ok(())
    }
}

/// Random walk on `g` whose step from `v` to a neighbour `u` is proportional
/// to `|N(v) ∩ N(u)|^r + epsilon`, mixed with a hold of probability `laziness`.
pub fn build_community_walk(g: &Graph, cfg: &WalkConfig) -> Result<MarkovChain> {
    cfg.validate()?;
    let n = g.n();
    if n == 0 {
        return Err(Error::InvalidArgument("graph has no nodes".into()));
    }
    let mut rows = vec![vec![0.0; n]; n];
    for (v, row) in rows.iter_mut().enumerate() {
        if g.degree(v) == 0 {
            return Err(Error::IsolatedNode { node: v });
        }
        let mut total = 0.0;
        for &u in g.neighbors(v) {
            let common = g.common_neighbor_count(v, u)? as f64;
            let w = common.powi(cfg.r_exp as i32) + cfg.epsilon;
            row[u] = w;
            total += w;
        }
        if total <= 0.0 {
            return Err(Error::ZeroWeightRow { row: v });
        }
        let scale = (1.0 - cfg.laziness) / total;
        for &u in g.neighbors(v) {
            row[u] *= scale;
        }
        row[v] = cfg.laziness;
    }
    MarkovChain::from_rows(rows)
}

fn to_dmatrix(block: &[Vec<f64>], nrows: usize, ncols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(nrows, ncols, |i, j| block[i][j])
}

/// Unique stationary distribution `π = πQ` of an irreducible aperiodic chain,
/// from a dense LU solve of `(Qᵀ − I)π = 0` with one equation replaced by `Σπ = 1`.
pub fn stationary(chain: &MarkovChain) -> Result<Distribution> {
    let period = chain.period()?;
    if period > 1 {
        return Err(Error::Periodic { period });
    }
    let n = chain.len();
    let mut a = DMatrix::from_fn(n, n, |i, j| {
        chain.prob(j, i) - if i == j { 1.0 } else { 0.0 }
    });
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = nalgebra::DVector::zeros(n);
    b[n - 1] = 1.0;
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Numerical("singular stationary system".into()))?;

    if let Some(neg) = x.iter().find(|&&p| p < -1e-12) {
        return Err(Error::Numerical(format!("negative stationary mass {neg}")));
    }
    let probs: Vec<f64> = x.iter().map(|&p| p.max(0.0)).collect();
    let residual: f64 = (0..n)
        .map(|j| ((0..n).map(|i| probs[i] * chain.prob(i, j)).sum::<f64>() - probs[j]).abs())
        .sum();
    if residual >= 1e-10 {
        return Err(Error::Numerical(format!(
            "stationary residual {residual:e} too large"
        )));
    }
    Ok(Distribution { probs })
}

/// Chain observed only on the states labelled by `subset`:
/// `Q̃ = Q_GG + Q_GB (I − Q_BB)⁻¹ Q_BG`.
///
/// The returned chain lists `subset`'s states in ascending label order.
pub fn restrict(chain: &MarkovChain, subset: &[usize]) -> Result<MarkovChain> {
    if subset.is_empty() {
        return Err(Error::InvalidArgument("empty restriction subset".into()));
    }
    let mut inside = vec![false; chain.len()];
    for &label in subset {
        let i = chain
            .index_of(label)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown state {label}")))?;
        if std::mem::replace(&mut inside[i], true) {
            return Err(Error::InvalidArgument(format!(
                "state {label} listed twice"
            )));
        }
    }
    let mut g_idx: Vec<usize> = (0..chain.len()).filter(|&i| inside[i]).collect();
    g_idx.sort_by_key(|&i| chain.states()[i]);
    let b_idx: Vec<usize> = (0..chain.len()).filter(|&i| !inside[i]).collect();
    let (ng, nb) = (g_idx.len(), b_idx.len());

    let mut q = to_dmatrix(&chain.submatrix(&g_idx, &g_idx), ng, ng);
    if nb > 0 {
        let q_gb = to_dmatrix(&chain.submatrix(&g_idx, &b_idx), ng, nb);
        let q_bg = to_dmatrix(&chain.submatrix(&b_idx, &g_idx), nb, ng);
        let q_bb = to_dmatrix(&chain.submatrix(&b_idx, &b_idx), nb, nb);
        let i_minus = DMatrix::identity(nb, nb) - q_bb;
        let excursion = i_minus.lu().solve(&q_bg).ok_or_else(|| {
            Error::Numerical("I − Q_BB is singular; the chain is not irreducible".into())
        })?;
        q += q_gb * excursion;
    }

    let states = g_idx.iter().map(|&i| chain.states()[i]).collect();
    let rows: Vec<Vec<f64>> = (0..ng)
        .map(|i| (0..ng).map(|j| q[(i, j)].clamp(0.0, 1.0)).collect())
        .collect();
    let restricted = MarkovChain { states, rows };
    restricted.validate(1e-10)?;
    Ok(restricted)
}

/// Max-entry deviation `‖(I − A)⁻¹ − Σ_{k=0}^{K} A^k‖` for a square matrix
/// with spectral radius below one. Returns `INFINITY` if `I − A` is singular.
pub fn neumann_check(a: &[Vec<f64>], terms: usize) -> f64 {
    let m = a.len();
    if m == 0 {
        return 0.0;
    }
    let a = to_dmatrix(a, m, m);
    let Some(inverse) = (DMatrix::identity(m, m) - &a).try_inverse() else {
        return f64::INFINITY;
    };
    let mut power = DMatrix::identity(m, m);
    let mut series = power.clone();
    for _ in 0..terms {
        power = &power * &a;
        series += &power;
    }
    (inverse - series).amax()
}
