//! Quality and fairness scores for partitions: modularity, group balance,
//! expected proportional balance, the proportional balance fairness score,
//! the size-weighted global fairness score, and the scalarized objective,
//! together with the incremental (delta) form used by the optimizer.

use crate::error::{Error, Result};
use crate::graph::{Graph, Partition};

/// Per-community counts of original nodes in each demographic group.
///
/// Aggregated meta-nodes carry one of these instead of a single label, so
/// fairness is always evaluated on original-node counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupCounts(Vec<u64>);

impl GroupCounts {
    pub fn zeros(num_groups: usize) -> Self {
        GroupCounts(vec![0; num_groups])
    }

    pub fn one_hot(num_groups: usize, group: usize) -> Self {
        let mut counts = vec![0; num_groups];
        counts[group] = 1;
        GroupCounts(counts)
    }

    pub fn new(counts: Vec<u64>) -> Self {
        GroupCounts(counts)
    }

    pub fn counts(&self) -> &[u64] {
        &self.0
    }

    pub fn num_groups(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn add(&mut self, other: &GroupCounts) {
        debug_assert_eq!(self.0.len(), other.0.len());
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }

    pub fn subtract(&mut self, other: &GroupCounts) {
        debug_assert_eq!(self.0.len(), other.0.len());
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            debug_assert!(*a >= *b, "group count underflow");
            *a -= b;
        }
    }
}

/// Which per-community score feeds the global fairness average.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FairnessMetric {
    /// Plain group balance.
    Balance,
    /// Balance penalized by the shortfall against the expected proportional
    /// balance for a community of that size.
    PropBalance,
}

impl FairnessMetric {
    pub fn as_str(&self) -> &'static str {
        match self {
            FairnessMetric::Balance => "balance",
            FairnessMetric::PropBalance => "prop_balance",
        }
    }
}

impl std::fmt::Display for FairnessMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for FairnessMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "balance" => Ok(FairnessMetric::Balance),
            "prop" | "prop_balance" => Ok(FairnessMetric::PropBalance),
            other => Err(Error::InvalidConfig(format!(
                "unknown fairness metric '{other}' (expected 'balance' or 'prop')"
            ))),
        }
    }
}

/// Network-level quantities that fairness scores refer back to.
///
/// The balance score of the whole network (`phi`) is computed once on the
/// original node set and held fixed across aggregation levels, so meta-nodes
/// never change the reference distribution.
#[derive(Debug, Clone)]
pub struct FairnessContext {
    num_groups: usize,
    total_nodes: u64,
    group_sizes: GroupCounts,
    phi: f64,
    metric: FairnessMetric,
}

impl FairnessContext {
    pub fn new(group_sizes: GroupCounts, metric: FairnessMetric) -> Result<Self> {
        let num_groups = group_sizes.num_groups();
        if num_groups < 2 {
            return Err(Error::TooFewGroups(num_groups));
        }
        let total_nodes = group_sizes.total();
        if total_nodes == 0 {
            return Err(Error::InvalidConfig("no nodes carry a group label".into()));
        }
        let phi = network_phi(&group_sizes);
        Ok(FairnessContext {
            num_groups,
            total_nodes,
            group_sizes,
            phi,
            metric,
        })
    }

    pub fn from_graph(g: &Graph, metric: FairnessMetric) -> Result<Self> {
        Self::new(g.group_sizes().clone(), metric)
    }

    pub fn num_groups(&self) -> usize {
        self.num_groups
    }

    pub fn total_nodes(&self) -> u64 {
        self.total_nodes
    }

    pub fn group_sizes(&self) -> &GroupCounts {
        &self.group_sizes
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn metric(&self) -> FairnessMetric {
        self.metric
    }

    pub fn with_metric(&self, metric: FairnessMetric) -> Self {
        let mut ctx = self.clone();
        ctx.metric = metric;
        ctx
    }
}

/// Balance score of one community: `(K-1) * min_j (c_j / (total - c_j))`.
///
/// A group with zero members forces the score to zero. A ratio with zero
/// denominator (the community is entirely one group) is treated as infinite
/// and never selected by the min, because some other group then has count 0.
pub fn balance(counts: &GroupCounts) -> f64 {
    let k = counts.num_groups();
    let total = counts.total();
    assert!(k >= 2, "balance requires at least two groups");
    assert!(total > 0, "balance requires a non-empty community");
    // Scaling the numerator before dividing keeps perfectly even counts at
    // exactly 1 for every K.
    let scale = (k - 1) as u64;
    let mut min_ratio = f64::INFINITY;
    for &c in counts.counts() {
        let rest = total - c;
        let ratio = if rest == 0 {
            f64::INFINITY
        } else {
            (scale * c) as f64 / rest as f64
        };
        if ratio < min_ratio {
            min_ratio = ratio;
        }
    }
    min_ratio
}

/// Balance score of the entire network. An empty group yields 0 (degenerate
/// but defined), so loaders can surface the condition instead of panicking.
pub fn network_phi(group_sizes: &GroupCounts) -> f64 {
    assert!(group_sizes.total() > 0, "network has no labeled nodes");
    if group_sizes.counts().iter().any(|&c| c == 0) {
        return 0.0;
    }
    balance(group_sizes)
}

/// Count of community members left over once members have been assigned to
/// groups in proportion to the network (integer floors).
pub fn n_extra(community_size: u64, ctx: &FairnessContext) -> u64 {
    let n = ctx.total_nodes;
    let assigned: u64 = ctx
        .group_sizes
        .counts()
        .iter()
        .map(|&h| community_size * h / n)
        .sum();
    community_size - assigned
}

/// Expected balance of a community of the given size whose members follow the
/// network's group distribution, accounting for the leftover members that the
/// integer proportional coloring cannot assign.
pub fn expected_prop_balance(community_size: u64, ctx: &FairnessContext) -> f64 {
    let k = ctx.num_groups as f64;
    if community_size < ctx.num_groups as u64 {
        return 0.0;
    }
    let phi = ctx.phi;
    let size = community_size as f64;
    let ne = n_extra(community_size, ctx) as f64;
    (phi * k * size + (phi + k - 1.0 - phi * k) * ne) / (k * size + (phi - 1.0) * ne)
}

/// Proportional balance fairness of one community: balance penalized by any
/// shortfall against the expected proportional balance, capped at 1.
pub fn prop_balance(counts: &GroupCounts, ctx: &FairnessContext) -> f64 {
    let size = counts.total();
    assert!(size > 0, "prop_balance requires a non-empty community");
    let b = balance(counts);
    let expected = expected_prop_balance(size, ctx);
    (1.0 - (expected - b)).min(1.0)
}

/// Per-community score under the context's selected metric.
pub fn community_score(counts: &GroupCounts, ctx: &FairnessContext) -> f64 {
    match ctx.metric {
        FairnessMetric::Balance => balance(counts),
        FairnessMetric::PropBalance => prop_balance(counts, ctx),
    }
}

/// Size-weighted average of the per-community score over the partition,
/// using original-node counts as weights.
pub fn global_fairness(p: &Partition, ctx: &FairnessContext) -> f64 {
    let mut sum = 0.0;
    for c in 0..p.num_communities() {
        let counts = p.community_group_counts(c);
        sum += counts.total() as f64 * community_score(counts, ctx);
    }
    sum / ctx.total_nodes as f64
}

/// Modularity of the partition: `(1/2m) * sum_C sum_{i,j in C} (A_ij - k_i k_j / 2m)`
/// over ordered pairs including `i = j`. Under the self-loop convention this
/// value is invariant across aggregation levels.
pub fn modularity(g: &Graph, p: &Partition) -> Result<f64> {
    let m2 = g.total_weight();
    if m2 <= 0.0 {
        return Err(Error::EmptyGraph);
    }
    let mut q = 0.0;
    for c in 0..p.num_communities() {
        let internal = p.community_internal_weight(c);
        let tot = p.community_total_degree(c);
        q += 2.0 * internal / m2 - (tot / m2) * (tot / m2);
    }
    Ok(q)
}

/// Scalarized objective `alpha * q + (1 - alpha) * f`.
pub fn objective(q: f64, f: f64, alpha: f64) -> f64 {
    assert!(
        (0.0..=1.0).contains(&alpha),
        "alpha must lie in [0, 1], got {alpha}"
    );
    alpha * q + (1.0 - alpha) * f
}

/// Destination of a candidate node move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveTarget {
    /// Join an existing community.
    Community(usize),
    /// Leave the source and become a fresh singleton community.
    Isolate,
}

/// Incremental change of the scalarized objective if `node` moves from
/// `source` to `target`, computed without touching any other community:
/// the modularity part follows the standard degree and link-weight
/// bookkeeping, the fairness part re-scores only the two affected
/// communities from their group counts.
pub fn delta_objective_move(
    g: &Graph,
    p: &Partition,
    ctx: &FairnessContext,
    node: usize,
    source: usize,
    target: MoveTarget,
    alpha: f64,
) -> Result<f64> {
    assert!(
        (0.0..=1.0).contains(&alpha),
        "alpha must lie in [0, 1], got {alpha}"
    );
    if p.community_of(node) != source {
        return Err(Error::InvalidPartition(format!(
            "node {node} is not in community {source}"
        )));
    }
    let alone = p.community_member_count(source) == 1;
    match target {
        MoveTarget::Community(t) if t == source => return Ok(0.0),
        MoveTarget::Isolate if alone => return Ok(0.0),
        MoveTarget::Community(t) if t >= p.num_communities() => {
            return Err(Error::InvalidPartition(format!(
                "community {t} does not exist"
            )));
        }
        _ => {}
    }

    let m2 = g.total_weight();
    if m2 <= 0.0 {
        return Err(Error::EmptyGraph);
    }
    let kv = g.degree(node);
    let mut w_src = 0.0;
    let mut w_tgt = 0.0;
    for (u, w) in g.neighbors(node) {
        if u == node {
            continue;
        }
        let c = p.community_of(u);
        if c == source {
            w_src += w;
        }
        if let MoveTarget::Community(t) = target {
            if c == t {
                w_tgt += w;
            }
        }
    }
    let tot_src_rem = p.community_total_degree(source) - kv;
    let tot_tgt = match target {
        MoveTarget::Community(t) => p.community_total_degree(t),
        MoveTarget::Isolate => 0.0,
    };
    let delta_q = 2.0 * (w_tgt - w_src) / m2 - 2.0 * kv * (tot_tgt - tot_src_rem) / (m2 * m2);

    let node_counts = g.group_counts(node);
    let contrib = |counts: &GroupCounts| -> f64 {
        if counts.total() == 0 {
            0.0
        } else {
            counts.total() as f64 * community_score(counts, ctx)
        }
    };
    let src_before = p.community_group_counts(source);
    let mut src_after = src_before.clone();
    src_after.subtract(node_counts);
    let mut delta_f = contrib(&src_after) - contrib(src_before);
    match target {
        MoveTarget::Community(t) => {
            let tgt_before = p.community_group_counts(t);
            let mut tgt_after = tgt_before.clone();
            tgt_after.add(node_counts);
            delta_f += contrib(&tgt_after) - contrib(tgt_before);
        }
        MoveTarget::Isolate => {
            delta_f += contrib(node_counts);
        }
    }
    delta_f /= ctx.total_nodes as f64;

    Ok(alpha * delta_q + (1.0 - alpha) * delta_f)
}
