//! File ingestion and output: edge lists, node-attribute (group) files,
//! partition files, and run-record CSVs.
//!
//! Formats:
//! - edge list: `u v [w]` per line, whitespace or comma separated, `#`
//!   comments; arbitrary node tokens are relabeled densely.
//! - group file: `node value` per line.
//! - partition file: `node community` per line, community ids dense from 0.
//! - records: CSV with a fixed header, full double precision.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Bijective mapping between original node tokens and dense indices.
#[derive(Debug, Clone, Default)]
pub struct NodeIds {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl NodeIds {
    pub fn intern(&mut self, token: &str) -> usize {
        if let Some(&i) = self.index.get(token) {
            return i;
        }
        let i = self.tokens.len();
        self.tokens.push(token.to_string());
        self.index.insert(token.to_string(), i);
        i
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, index: usize) -> &str {
        &self.tokens[index]
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Raw edges with the token mapping used to densify them.
#[derive(Debug, Clone)]
pub struct EdgeList {
    pub edges: Vec<(usize, usize, f64)>,
    pub ids: NodeIds,
}

fn split_fields(line: &str) -> Vec<&str> {
    if line.contains(',') {
        line.split(',').map(str::trim).filter(|f| !f.is_empty()).collect()
    } else {
        line.split_whitespace().collect()
    }
}

/// Loads a `u v [w]` edge list. Missing weights default to 1; duplicate
/// edges are merged later by graph construction.
pub fn load_edge_list(path: &Path) -> Result<EdgeList> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut ids = NodeIds::default();
    let mut edges = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields = split_fields(trimmed);
        if fields.len() < 2 || fields.len() > 3 {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                message: format!("expected 'u v [w]', found '{trimmed}'"),
            });
        }
        let u = ids.intern(fields[0]);
        let v = ids.intern(fields[1]);
        let w = if fields.len() == 3 {
            fields[2].parse::<f64>().map_err(|_| Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                message: format!("bad weight '{}'", fields[2]),
            })?
        } else {
            1.0
        };
        edges.push((u, v, w));
    }
    if edges.is_empty() {
        return Err(Error::Parse {
            path: path.display().to_string(),
            line: 0,
            message: "no edges found".into(),
        });
    }
    Ok(EdgeList { edges, ids })
}

/// How raw attribute values become group indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupMode {
    /// Distinct tokens map to indices by first appearance.
    Categorical,
    /// Numeric values split at the median: `value <= median` is group 0.
    MedianSplit,
}

impl std::str::FromStr for GroupMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "categorical" => Ok(GroupMode::Categorical),
            "median" | "median_split" => Ok(GroupMode::MedianSplit),
            other => Err(Error::InvalidConfig(format!(
                "unknown group mode '{other}' (expected 'categorical' or 'median')"
            ))),
        }
    }
}

/// Group index per node token, with the group count.
#[derive(Debug, Clone)]
pub struct LoadedGroups {
    pub by_token: HashMap<String, usize>,
    pub num_groups: usize,
}

/// Loads a `node value` attribute file under the given mode.
pub fn load_groups(path: &Path, mode: GroupMode) -> Result<LoadedGroups> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut entries: Vec<(String, String)> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields = split_fields(trimmed);
        if fields.len() != 2 {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                message: format!("expected 'node value', found '{trimmed}'"),
            });
        }
        entries.push((fields[0].to_string(), fields[1].to_string()));
    }
    match mode {
        GroupMode::Categorical => {
            let mut value_index: HashMap<String, usize> = HashMap::new();
            let mut by_token = HashMap::new();
            for (token, value) in entries {
                let next = value_index.len();
                let idx = *value_index.entry(value).or_insert(next);
                by_token.insert(token, idx);
            }
            Ok(LoadedGroups {
                num_groups: value_index.len(),
                by_token,
            })
        }
        GroupMode::MedianSplit => {
            let mut values = Vec::with_capacity(entries.len());
            for (i, (_, value)) in entries.iter().enumerate() {
                let v: f64 = value.parse().map_err(|_| Error::Parse {
                    path: path.display().to_string(),
                    line: i + 1,
                    message: format!("non-numeric value '{value}' in median split"),
                })?;
                values.push(v);
            }
            if values.is_empty() {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line: 0,
                    message: "no attribute values found".into(),
                });
            }
            let mut sorted = values.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mid = sorted.len() / 2;
            let median = if sorted.len() % 2 == 1 {
                sorted[mid]
            } else {
                (sorted[mid - 1] + sorted[mid]) / 2.0
            };
            let mut by_token = HashMap::new();
            let mut num_groups = 1;
            for ((token, _), v) in entries.into_iter().zip(values) {
                let group = if v <= median { 0 } else { 1 };
                num_groups = num_groups.max(group + 1);
                by_token.insert(token, group);
            }
            Ok(LoadedGroups {
                by_token,
                num_groups,
            })
        }
    }
}

/// Combines an edge list with loaded groups into a graph. Nodes without a
/// group value are dropped and the induced subgraph on the remaining nodes
/// is extracted; the returned mapping covers only the kept nodes.
pub fn assemble(edge_list: &EdgeList, groups: &LoadedGroups) -> Result<(Graph, NodeIds, usize)> {
    let mut kept = NodeIds::default();
    let mut labels = Vec::new();
    let mut old_to_new: Vec<Option<usize>> = vec![None; edge_list.ids.len()];
    for old in 0..edge_list.ids.len() {
        let token = edge_list.ids.token(old);
        if let Some(&group) = groups.by_token.get(token) {
            let new = kept.intern(token);
            old_to_new[old] = Some(new);
            labels.push(group);
        }
    }
    let dropped = edge_list.ids.len() - kept.len();
    if kept.is_empty() {
        return Err(Error::InvalidConfig(
            "no graph node carries a group value".into(),
        ));
    }
    let mut edges = Vec::with_capacity(edge_list.edges.len());
    for &(u, v, w) in &edge_list.edges {
        if let (Some(nu), Some(nv)) = (old_to_new[u], old_to_new[v]) {
            edges.push((nu, nv, w));
        }
    }
    let graph = Graph::build_with_group_count(&edges, &labels, groups.num_groups)?;
    Ok((graph, kept, dropped))
}

/// Writes `original_node_id community_id` lines, community ids dense from 0
/// in node order; re-reading round-trips the partition.
pub fn write_partition(path: &Path, assignment: &[usize], ids: &NodeIds) -> Result<()> {
    if assignment.len() != ids.len() {
        return Err(Error::InvalidPartition(format!(
            "assignment covers {} nodes, id map has {}",
            assignment.len(),
            ids.len()
        )));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut dense: HashMap<usize, usize> = HashMap::new();
    for (node, &c) in assignment.iter().enumerate() {
        let next = dense.len();
        let id = *dense.entry(c).or_insert(next);
        writeln!(out, "{} {}", ids.token(node), id).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Reads a partition file back into an assignment aligned with `ids`.
pub fn read_partition(path: &Path, ids: &NodeIds) -> Result<Vec<usize>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut assignment = vec![usize::MAX; ids.len()];
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields = split_fields(trimmed);
        if fields.len() != 2 {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                message: format!("expected 'node community', found '{trimmed}'"),
            });
        }
        let node = ids.get(fields[0]).ok_or_else(|| Error::Parse {
            path: path.display().to_string(),
            line: lineno + 1,
            message: format!("unknown node '{}'", fields[0]),
        })?;
        let community = fields[1].parse::<usize>().map_err(|_| Error::Parse {
            path: path.display().to_string(),
            line: lineno + 1,
            message: format!("bad community id '{}'", fields[1]),
        })?;
        assignment[node] = community;
    }
    if let Some(missing) = assignment.iter().position(|&c| c == usize::MAX) {
        return Err(Error::InvalidPartition(format!(
            "node '{}' is missing from the partition file",
            ids.token(missing)
        )));
    }
    Ok(assignment)
}

/// One experiment outcome, echoing the configuration that produced it.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunRecord {
    pub dataset: String,
    pub axis: String,
    pub axis_value: f64,
    pub repeat_index: u32,
    pub alpha: f64,
    pub theta: f64,
    pub metric: String,
    pub seed: u64,
    pub modularity: f64,
    pub fairness_balance: f64,
    pub fairness_prop_balance: f64,
    pub objective: f64,
    pub community_count: u64,
    pub level_count: u64,
    pub runtime_ms: f64,
    pub timestamp_ms: u64,
}

impl RunRecord {
    /// Zeroes the wall-clock fields so that reruns of the same configuration
    /// produce byte-identical output.
    pub fn stabilized(mut self) -> Self {
        self.runtime_ms = 0.0;
        self.timestamp_ms = 0;
        self
    }
}

/// Appends (or creates) a records CSV; the header is written only when the
/// file starts empty, so long sweeps can flush incrementally.
pub fn write_records(path: &Path, records: &[RunRecord], append: bool) -> Result<()> {
    let exists = append && path.exists() && path.metadata().map(|m| m.len() > 0).unwrap_or(false);
    let file = if exists {
        OpenOptions::new()
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?
    } else {
        File::create(path).map_err(|e| Error::io(path, e))?
    };
    let mut writer = csv::WriterBuilder::new()
        .has_headers(!exists)
        .from_writer(BufWriter::new(file));
    for record in records {
        writer.serialize(record)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(BufReader::new(file));
    let mut records = Vec::new();
    for row in reader.deserialize() {
        records.push(row?);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn parse_minimal_edge_list() {
        let f = write_temp("0 1\n1 2\n");
        let el = load_edge_list(f.path()).unwrap();
        assert_eq!(el.edges, vec![(0, 1, 1.0), (1, 2, 1.0)]);
        assert_eq!(el.ids.len(), 3);
    }

    #[test]
    fn parse_csv_with_comment_and_relabeling() {
        let f = write_temp("# comment\n3,7,2.5\n");
        let el = load_edge_list(f.path()).unwrap();
        assert_eq!(el.edges, vec![(0, 1, 2.5)]);
        assert_eq!(el.ids.token(0), "3");
        assert_eq!(el.ids.token(1), "7");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let f = write_temp("0 1\nbroken line here extra\n");
        match load_edge_list(f.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        let f = write_temp("");
        assert!(load_edge_list(f.path()).is_err());
    }

    #[test]
    fn median_split_matches_hand_computation() {
        let f = write_temp("a 25\nb 40\nc 31\nd 19\n");
        let groups = load_groups(f.path(), GroupMode::MedianSplit).unwrap();
        // Median of (19, 25, 31, 40) is 28.
        assert_eq!(groups.by_token["a"], 0);
        assert_eq!(groups.by_token["b"], 1);
        assert_eq!(groups.by_token["c"], 1);
        assert_eq!(groups.by_token["d"], 0);
        assert_eq!(groups.num_groups, 2);
    }

    #[test]
    fn categorical_maps_by_first_appearance() {
        let f = write_temp("x a\ny b\nz a\n");
        let groups = load_groups(f.path(), GroupMode::Categorical).unwrap();
        assert_eq!(groups.by_token["x"], 0);
        assert_eq!(groups.by_token["y"], 1);
        assert_eq!(groups.by_token["z"], 0);
    }

    #[test]
    fn median_split_rejects_non_numeric() {
        let f = write_temp("a fast\nb slow\n");
        assert!(load_groups(f.path(), GroupMode::MedianSplit).is_err());
    }

    #[test]
    fn all_identical_values_degenerate_to_one_group() {
        let f = write_temp("a 5\nb 5\nc 5\n");
        let groups = load_groups(f.path(), GroupMode::MedianSplit).unwrap();
        assert_eq!(groups.num_groups, 1);
        // Downstream consumers requiring K >= 2 reject this.
        let edges = write_temp("a b\nb c\n");
        let el = load_edge_list(edges.path()).unwrap();
        let (graph, _, _) = assemble(&el, &groups).unwrap();
        assert!(crate::fairness::FairnessContext::from_graph(
            &graph,
            crate::fairness::FairnessMetric::Balance
        )
        .is_err());
    }

    #[test]
    fn assemble_drops_unlabeled_nodes() {
        let edges = write_temp("a b\nb c\nc d\n");
        let groups_file = write_temp("a x\nb y\nc x\n");
        let el = load_edge_list(edges.path()).unwrap();
        let groups = load_groups(groups_file.path(), GroupMode::Categorical).unwrap();
        let (graph, ids, dropped) = assemble(&el, &groups).unwrap();
        assert_eq!(graph.node_count(), 3);
        assert_eq!(dropped, 1);
        assert_eq!(graph.edge_count(), 2);
        assert_eq!(ids.get("d"), None);
    }

    #[test]
    fn partition_write_is_canonical_and_round_trips() {
        let mut ids = NodeIds::default();
        for token in ["a", "b", "c"] {
            ids.intern(token);
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("part.txt");
        write_partition(&path, &[5, 5, 5], &ids).unwrap();
        let content = std::fs::read_to_string(&path).unwrap();
        assert_eq!(content, "a 0\nb 0\nc 0\n");
        let back = read_partition(&path, &ids).unwrap();
        assert_eq!(back, vec![0, 0, 0]);
    }

    #[test]
    fn permuted_labels_compare_equal_after_canonicalization() {
        // A label-invariant comparison: renumber both sides by first
        // appearance and compare.
        fn canonical(assignment: &[usize]) -> Vec<usize> {
            let mut map = HashMap::new();
            assignment
                .iter()
                .map(|&c| {
                    let next = map.len();
                    *map.entry(c).or_insert(next)
                })
                .collect()
        }
        let mut ids = NodeIds::default();
        for token in ["a", "b", "c", "d"] {
            ids.intern(token);
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("part.txt");
        write_partition(&path, &[9, 2, 9, 2], &ids).unwrap();
        let back = read_partition(&path, &ids).unwrap();
        assert_eq!(canonical(&back), canonical(&[9, 2, 9, 2]));
        assert_eq!(canonical(&back), canonical(&[1, 0, 1, 0]));
    }

    fn sample_record(seed: u64) -> RunRecord {
        RunRecord {
            dataset: "fixture".into(),
            axis: "alpha".into(),
            axis_value: 0.5,
            repeat_index: 0,
            alpha: 0.5,
            theta: 1e-6,
            metric: "prop_balance".into(),
            seed,
            modularity: 0.123456789123456789,
            fairness_balance: 0.98765432101234,
            fairness_prop_balance: 1.0,
            objective: 0.5617283950617,
            community_count: 10,
            level_count: 2,
            runtime_ms: 1.25,
            timestamp_ms: 1234,
        }
    }

    #[test]
    fn records_csv_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.csv");
        let records: Vec<RunRecord> = (0..3).map(sample_record).collect();
        write_records(&path, &records[..1], false).unwrap();
        write_records(&path, &records[1..], true).unwrap();
        let back = read_records(&path).unwrap();
        assert_eq!(back, records);
        let content = std::fs::read_to_string(&path).unwrap();
        assert_eq!(content.lines().count(), 4, "header plus one row per record");
    }
}
