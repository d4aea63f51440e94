//! Weighted undirected graph with per-node group bookkeeping, plus the
//! community aggregation and partition flattening used between optimizer
//! phases.
//!
//! Self-loop convention: a self-loop of stored weight `s` contributes `2s`
//! to its node's weighted degree. Aggregating a community into a meta-node
//! stores the community's internal weight as a self-loop, which keeps
//! modularity values identical across aggregation levels.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::fairness::GroupCounts;

/// Immutable weighted undirected graph. Input graphs carry one group label
/// per node (stored as one-hot group counts); aggregated graphs carry the
/// accumulated counts and original-node weights of their meta-nodes.
#[derive(Debug, Clone)]
pub struct Graph {
    /// Sorted adjacency per node; an undirected edge appears in both
    /// endpoint lists, a self-loop once in its own list.
    adj: Vec<Vec<(usize, f64)>>,
    degrees: Vec<f64>,
    /// Sum of all weighted degrees (`2m`).
    total_weight: f64,
    /// Distinct undirected edges, self-loops counted once.
    edge_count: usize,
    num_groups: usize,
    group_sizes: GroupCounts,
    /// Original nodes represented by each node (1 on input graphs).
    node_weights: Vec<u64>,
    group_counts: Vec<GroupCounts>,
}

impl Graph {
    /// Builds a graph from an edge list and per-node group labels; the number
    /// of groups is inferred as `max label + 1`.
    pub fn build(edges: &[(usize, usize, f64)], groups: &[usize]) -> Result<Self> {
        let num_groups = groups.iter().map(|&g| g + 1).max().unwrap_or(1);
        Self::build_with_group_count(edges, groups, num_groups)
    }

    /// Builds a graph with an explicit group count, so that groups that
    /// happen to be empty in this sample keep their slot.
    ///
    /// Duplicate edges are merged by summing weights; self-loops are
    /// accepted under the stored-weight convention.
    pub fn build_with_group_count(
        edges: &[(usize, usize, f64)],
        groups: &[usize],
        num_groups: usize,
    ) -> Result<Self> {
        let n = groups.len();
        for (node, &g) in groups.iter().enumerate() {
            if g >= num_groups {
                return Err(Error::GroupOutOfRange {
                    node,
                    group: g,
                    num_groups,
                });
            }
        }
        let mut maps: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
        for &(u, v, w) in edges {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::BadWeight { u, v, weight: w });
            }
            let far = u.max(v);
            if far >= n {
                return Err(Error::MissingGroup { node: far });
            }
            if u == v {
                *maps[u].entry(u).or_insert(0.0) += w;
            } else {
                *maps[u].entry(v).or_insert(0.0) += w;
                *maps[v].entry(u).or_insert(0.0) += w;
            }
        }

        let mut adj = Vec::with_capacity(n);
        let mut degrees = vec![0.0; n];
        let mut edge_count = 0;
        for (u, map) in maps.into_iter().enumerate() {
            let list: Vec<(usize, f64)> = map.into_iter().collect();
            for &(v, w) in &list {
                if v == u {
                    degrees[u] += 2.0 * w;
                    edge_count += 1;
                } else {
                    degrees[u] += w;
                    if v > u {
                        edge_count += 1;
                    }
                }
            }
            adj.push(list);
        }
        let total_weight = degrees.iter().sum();

        let mut sizes = GroupCounts::zeros(num_groups);
        let mut group_counts = Vec::with_capacity(n);
        for &g in groups {
            sizes.add(&GroupCounts::one_hot(num_groups, g));
            group_counts.push(GroupCounts::one_hot(num_groups, g));
        }

        Ok(Graph {
            adj,
            degrees,
            total_weight,
            edge_count,
            num_groups,
            group_sizes: sizes,
            node_weights: vec![1; n],
            group_counts,
        })
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    /// Distinct undirected edges (self-loops counted once).
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Sum of all weighted degrees, i.e. `2m`.
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn degree(&self, node: usize) -> f64 {
        self.degrees[node]
    }

    /// Neighbor list of `node`, sorted by id; includes the self-loop entry
    /// (with its stored weight) when present.
    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.adj[node].iter().copied()
    }

    /// Stored self-loop weight of `node` (0 when absent).
    pub fn self_loop(&self, node: usize) -> f64 {
        self.adj[node]
            .binary_search_by_key(&node, |&(v, _)| v)
            .map(|i| self.adj[node][i].1)
            .unwrap_or(0.0)
    }

    pub fn num_groups(&self) -> usize {
        self.num_groups
    }

    pub fn group_sizes(&self) -> &GroupCounts {
        &self.group_sizes
    }

    /// Count of original nodes this node represents.
    pub fn node_weight(&self, node: usize) -> u64 {
        self.node_weights[node]
    }

    pub fn group_counts(&self, node: usize) -> &GroupCounts {
        &self.group_counts[node]
    }

    /// Total count of original nodes (equals `n` on input graphs).
    pub fn original_node_count(&self) -> u64 {
        self.group_sizes.total()
    }
}

/// Disjoint assignment of a graph's nodes to communities, with per-community
/// aggregates kept alongside. Community ids are dense in `0..num_communities`
/// and no community is empty.
#[derive(Debug, Clone)]
pub struct Partition {
    assignment: Vec<usize>,
    num_communities: usize,
    comm_member_count: Vec<usize>,
    comm_node_weight: Vec<u64>,
    comm_group_counts: Vec<GroupCounts>,
    comm_total_degree: Vec<f64>,
    /// Internal weight in the stored sense: intra-community edge weights
    /// plus member self-loop weights.
    comm_internal_weight: Vec<f64>,
}

impl Partition {
    /// Builds a partition from any assignment vector; community ids are
    /// renumbered densely by first appearance in node order.
    pub fn from_assignment(g: &Graph, raw: Vec<usize>) -> Result<Self> {
        let n = g.node_count();
        if raw.len() != n {
            return Err(Error::InvalidPartition(format!(
                "assignment covers {} nodes, graph has {n}",
                raw.len()
            )));
        }
        let mut dense: BTreeMap<usize, usize> = BTreeMap::new();
        let mut assignment = Vec::with_capacity(n);
        let mut next = 0;
        for &c in &raw {
            let id = *dense.entry(c).or_insert_with(|| {
                let id = next;
                next += 1;
                id
            });
            assignment.push(id);
        }
        let num_communities = next;

        let mut comm_member_count = vec![0usize; num_communities];
        let mut comm_node_weight = vec![0u64; num_communities];
        let mut comm_group_counts = vec![GroupCounts::zeros(g.num_groups()); num_communities];
        let mut comm_total_degree = vec![0.0; num_communities];
        let mut comm_internal_weight = vec![0.0; num_communities];
        for u in 0..n {
            let c = assignment[u];
            comm_member_count[c] += 1;
            comm_node_weight[c] += g.node_weight(u);
            comm_group_counts[c].add(g.group_counts(u));
            comm_total_degree[c] += g.degree(u);
            for (v, w) in g.neighbors(u) {
                if v == u {
                    comm_internal_weight[c] += w;
                } else if v > u && assignment[v] == c {
                    comm_internal_weight[c] += w;
                }
            }
        }

        Ok(Partition {
            assignment,
            num_communities,
            comm_member_count,
            comm_node_weight,
            comm_group_counts,
            comm_total_degree,
            comm_internal_weight,
        })
    }

    /// Every node in its own community.
    pub fn singletons(g: &Graph) -> Self {
        Self::from_assignment(g, (0..g.node_count()).collect()).expect("identity assignment")
    }

    /// All nodes in one community.
    pub fn all_in_one(g: &Graph) -> Self {
        Self::from_assignment(g, vec![0; g.node_count()]).expect("constant assignment")
    }

    pub fn num_communities(&self) -> usize {
        self.num_communities
    }

    pub fn community_of(&self, node: usize) -> usize {
        self.assignment[node]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn node_count(&self) -> usize {
        self.assignment.len()
    }

    /// Number of (meta-)nodes in the community.
    pub fn community_member_count(&self, c: usize) -> usize {
        self.comm_member_count[c]
    }

    /// Count of original nodes in the community.
    pub fn community_node_weight(&self, c: usize) -> u64 {
        self.comm_node_weight[c]
    }

    pub fn community_group_counts(&self, c: usize) -> &GroupCounts {
        &self.comm_group_counts[c]
    }

    pub fn community_total_degree(&self, c: usize) -> f64 {
        self.comm_total_degree[c]
    }

    pub fn community_internal_weight(&self, c: usize) -> f64 {
        self.comm_internal_weight[c]
    }

    /// Member lists per community, computed on demand.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.num_communities];
        for (node, &c) in self.assignment.iter().enumerate() {
            members[c].push(node);
        }
        members
    }

    #[cfg(test)]
    pub(crate) fn corrupt_group_counts_for_test(&mut self, c: usize, counts: GroupCounts) {
        self.comm_group_counts[c] = counts;
    }
}

/// Collapses each community of `p` into a meta-node. Inter-community weights
/// are summed; the internal weight of a community becomes the meta-node's
/// self-loop, so the meta-node's degree equals the sum of its members'
/// degrees and `2m` is preserved.
pub fn aggregate(g: &Graph, p: &Partition) -> Result<Graph> {
    if p.node_count() != g.node_count() {
        return Err(Error::InvalidPartition(format!(
            "partition covers {} nodes, graph has {}",
            p.node_count(),
            g.node_count()
        )));
    }
    let c = p.num_communities();
    let mut meta: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); c];
    let mut self_weight = vec![0.0; c];
    for u in 0..g.node_count() {
        let cu = p.community_of(u);
        for (v, w) in g.neighbors(u) {
            if v == u {
                self_weight[cu] += w;
            } else {
                let cv = p.community_of(v);
                if cu == cv {
                    if v > u {
                        self_weight[cu] += w;
                    }
                } else {
                    *meta[cu].entry(cv).or_insert(0.0) += w;
                }
            }
        }
    }

    let mut adj = Vec::with_capacity(c);
    let mut degrees = vec![0.0; c];
    let mut edge_count = 0;
    for (cu, mut map) in meta.into_iter().enumerate() {
        if self_weight[cu] > 0.0 {
            map.insert(cu, self_weight[cu]);
        }
        let list: Vec<(usize, f64)> = map.into_iter().collect();
        for &(cv, w) in &list {
            if cv == cu {
                degrees[cu] += 2.0 * w;
                edge_count += 1;
            } else {
                degrees[cu] += w;
                if cv > cu {
                    edge_count += 1;
                }
            }
        }
        adj.push(list);
    }
    let total_weight = degrees.iter().sum();

    let node_weights: Vec<u64> = (0..c).map(|i| p.community_node_weight(i)).collect();
    let group_counts: Vec<GroupCounts> =
        (0..c).map(|i| p.community_group_counts(i).clone()).collect();

    Ok(Graph {
        adj,
        degrees,
        total_weight,
        edge_count,
        num_groups: g.num_groups(),
        group_sizes: g.group_sizes().clone(),
        node_weights,
        group_counts,
    })
}

/// Composes a stack of level partitions into one assignment over the
/// original nodes: level `i + 1` must partition the communities of level `i`.
pub fn flatten(levels: &[&Partition]) -> Result<Vec<usize>> {
    let first = levels
        .first()
        .ok_or_else(|| Error::LevelMismatch("no levels to flatten".into()))?;
    let mut assignment: Vec<usize> = first.assignment().to_vec();
    for (i, level) in levels.iter().enumerate().skip(1) {
        let prev_comms = levels[i - 1].num_communities();
        if level.node_count() != prev_comms {
            return Err(Error::LevelMismatch(format!(
                "level {i} covers {} nodes but level {} has {prev_comms} communities",
                level.node_count(),
                i - 1
            )));
        }
        for slot in assignment.iter_mut() {
            *slot = level.community_of(*slot);
        }
    }
    Ok(assignment)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_triangles() -> Graph {
        Graph::build(
            &[
                (0, 1, 1.0),
                (1, 2, 1.0),
                (0, 2, 1.0),
                (3, 4, 1.0),
                (4, 5, 1.0),
                (3, 5, 1.0),
            ],
            &[0, 0, 0, 1, 1, 1],
        )
        .unwrap()
    }

    #[test]
    fn build_triangle() {
        let g = Graph::build(&[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)], &[0, 0, 1]).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.total_weight(), 6.0);
        assert_eq!(g.edge_count(), 3);
        for v in 0..3 {
            assert_eq!(g.degree(v), 2.0);
        }
        assert_eq!(g.group_sizes().counts(), &[2, 1]);
    }

    #[test]
    fn build_empty_edge_list() {
        let g = Graph::build(&[], &[0, 1, 0]).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.total_weight(), 0.0);
        for v in 0..3 {
            assert_eq!(g.degree(v), 0.0);
        }
    }

    #[test]
    fn build_merges_duplicate_edges() {
        let g = Graph::build(&[(0, 1, 1.0), (0, 1, 2.0)], &[0, 1]).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.degree(0), 3.0);
        assert_eq!(g.degree(1), 3.0);
        assert_eq!(g.total_weight(), 6.0);
    }

    #[test]
    fn build_self_loop_counts_twice_in_degree() {
        let g = Graph::build(&[(0, 0, 2.0), (0, 1, 1.0)], &[0, 1]).unwrap();
        assert_eq!(g.self_loop(0), 2.0);
        assert_eq!(g.degree(0), 5.0);
        assert_eq!(g.degree(1), 1.0);
        assert_eq!(g.total_weight(), 6.0);
    }

    #[test]
    fn build_rejections() {
        assert!(Graph::build(&[(0, 1, -1.0)], &[0, 0]).is_err());
        assert!(Graph::build(&[(0, 3, 1.0)], &[0, 0]).is_err());
        assert!(Graph::build_with_group_count(&[], &[0, 2], 2).is_err());
    }

    #[test]
    fn adjacency_is_symmetric() {
        let g = Graph::build(&[(0, 1, 2.5), (1, 2, 0.5)], &[0, 0, 1]).unwrap();
        let w01 = g.neighbors(0).find(|&(v, _)| v == 1).unwrap().1;
        let w10 = g.neighbors(1).find(|&(v, _)| v == 0).unwrap().1;
        assert_eq!(w01, w10);
    }

    #[test]
    fn aggregate_two_triangles() {
        let g = two_triangles();
        let p = Partition::from_assignment(&g, vec![0, 0, 0, 1, 1, 1]).unwrap();
        let agg = aggregate(&g, &p).unwrap();
        assert_eq!(agg.node_count(), 2);
        assert_eq!(agg.self_loop(0), 3.0);
        assert_eq!(agg.self_loop(1), 3.0);
        assert_eq!(agg.degree(0), 6.0);
        assert_eq!(agg.degree(1), 6.0);
        // No inter-community edge between the triangles.
        assert_eq!(agg.edge_count(), 2);
        assert_eq!(agg.total_weight(), g.total_weight());
        assert_eq!(agg.node_weight(0), 3);
        assert_eq!(agg.group_counts(0).counts(), &[3, 0]);
        assert_eq!(agg.group_counts(1).counts(), &[0, 3]);
    }

    #[test]
    fn aggregate_singletons_is_identity() {
        let g = two_triangles();
        let p = Partition::singletons(&g);
        let agg = aggregate(&g, &p).unwrap();
        assert_eq!(agg.node_count(), g.node_count());
        assert_eq!(agg.total_weight(), g.total_weight());
        for v in 0..g.node_count() {
            assert_eq!(agg.degree(v), g.degree(v));
            assert_eq!(agg.node_weight(v), 1);
            let a: Vec<_> = agg.neighbors(v).collect();
            let b: Vec<_> = g.neighbors(v).collect();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn aggregate_all_in_one() {
        let g = two_triangles();
        let p = Partition::all_in_one(&g);
        let agg = aggregate(&g, &p).unwrap();
        assert_eq!(agg.node_count(), 1);
        assert_eq!(agg.degree(0), g.total_weight());
        assert_eq!(agg.self_loop(0), 6.0);
    }

    #[test]
    fn flatten_single_level() {
        let g = two_triangles();
        let p = Partition::from_assignment(&g, vec![0, 0, 1, 1, 2, 2]).unwrap();
        let flat = flatten(&[&p]).unwrap();
        assert_eq!(flat, vec![0, 0, 1, 1, 2, 2]);
    }

    #[test]
    fn flatten_two_levels() {
        let g = Graph::build(&[(0, 1, 1.0), (2, 3, 1.0)], &[0, 0, 1, 1]).unwrap();
        let level1 = Partition::from_assignment(&g, vec![0, 0, 1, 1]).unwrap();
        let agg = aggregate(&g, &level1).unwrap();
        let level2 = Partition::from_assignment(&agg, vec![0, 0]).unwrap();
        let flat = flatten(&[&level1, &level2]).unwrap();
        assert_eq!(flat, vec![0, 0, 0, 0]);
    }

    #[test]
    fn flatten_three_levels_matches_per_node_trace() {
        // Eight nodes through three levels; the oracle traces each node by
        // hand through the level assignments.
        let g = Graph::build(
            &[(0, 1, 1.0), (2, 3, 1.0), (4, 5, 1.0), (6, 7, 1.0)],
            &[0, 0, 0, 0, 1, 1, 1, 1],
        )
        .unwrap();
        let a1 = vec![0, 0, 1, 1, 2, 2, 3, 3];
        let level1 = Partition::from_assignment(&g, a1.clone()).unwrap();
        let g2 = aggregate(&g, &level1).unwrap();
        let a2 = vec![0, 0, 1, 1];
        let level2 = Partition::from_assignment(&g2, a2.clone()).unwrap();
        let g3 = aggregate(&g2, &level2).unwrap();
        let a3 = vec![0, 0];
        let level3 = Partition::from_assignment(&g3, a3.clone()).unwrap();

        let flat = flatten(&[&level1, &level2, &level3]).unwrap();
        for node in 0..8 {
            let expected = a3[a2[a1[node]]];
            assert_eq!(flat[node], expected, "node {node}");
        }
    }

    #[test]
    fn flatten_rejects_level_mismatch() {
        let g = Graph::build(&[(0, 1, 1.0), (2, 3, 1.0)], &[0, 0, 1, 1]).unwrap();
        let level1 = Partition::from_assignment(&g, vec![0, 0, 1, 1]).unwrap();
        // Second level sized for three meta-nodes instead of two.
        let g3 = Graph::build(&[(0, 1, 1.0)], &[0, 1, 1]).unwrap();
        let bad = Partition::from_assignment(&g3, vec![0, 0, 1]).unwrap();
        assert!(flatten(&[&level1, &bad]).is_err());
    }

    #[test]
    fn partition_renumbers_densely() {
        let g = two_triangles();
        let p = Partition::from_assignment(&g, vec![7, 7, 7, 3, 3, 3]).unwrap();
        assert_eq!(p.num_communities(), 2);
        assert_eq!(p.assignment(), &[0, 0, 0, 1, 1, 1]);
        assert_eq!(p.community_node_weight(0), 3);
        assert_eq!(p.community_total_degree(0), 6.0);
        assert_eq!(p.community_internal_weight(0), 3.0);
    }

    #[test]
    fn partition_rejects_wrong_length() {
        let g = two_triangles();
        assert!(Partition::from_assignment(&g, vec![0, 0, 0]).is_err());
    }

    #[test]
    fn group_counts_conserved_under_aggregation() {
        let g = two_triangles();
        let p = Partition::from_assignment(&g, vec![0, 1, 0, 1, 0, 1]).unwrap();
        let agg = aggregate(&g, &p).unwrap();
        let mut total = GroupCounts::zeros(2);
        for v in 0..agg.node_count() {
            total.add(agg.group_counts(v));
        }
        assert_eq!(&total, g.group_sizes());
    }
}
