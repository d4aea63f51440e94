//! Seeded synthetic network generators: colored Erdos-Renyi graphs and
//! rewired-clique graphs with individual or clique-level coloring.
//!
//! Structure depends only on `structure_seed`, coloring only on
//! `coloring_seed`, so one structure can carry many colorings.

use std::collections::HashSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;

const REWIRE_RETRIES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColoringMode {
    /// Color each node independently.
    Individual,
    /// Draw one color per clique and apply it to all members.
    Clique,
}

impl std::str::FromStr for ColoringMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "individual" => Ok(ColoringMode::Individual),
            "clique" => Ok(ColoringMode::Clique),
            other => Err(Error::InvalidConfig(format!(
                "unknown coloring mode '{other}' (expected 'individual' or 'clique')"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub enum GeneratorKind {
    Er { nodes: usize, edge_prob: f64 },
    RewiredCliques {
        cliques: usize,
        clique_size: usize,
        rewire_prob: f64,
    },
}

#[derive(Debug, Clone)]
pub struct GeneratorConfig {
    pub kind: GeneratorKind,
    /// Probability of each group; length defines the number of groups.
    pub group_probs: Vec<f64>,
    pub coloring: ColoringMode,
    pub structure_seed: u64,
    pub coloring_seed: u64,
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.group_probs.len() < 2 {
            return Err(Error::InvalidConfig(
                "group_probs needs at least two entries".into(),
            ));
        }
        if self.group_probs.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::InvalidConfig(
                "group probabilities must lie in [0, 1]".into(),
            ));
        }
        let sum: f64 = self.group_probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "group probabilities sum to {sum}, expected 1"
            )));
        }
        match self.kind {
            GeneratorKind::Er { edge_prob, .. } => {
                if !(0.0..=1.0).contains(&edge_prob) {
                    return Err(Error::InvalidConfig(format!(
                        "edge probability {edge_prob} outside [0, 1]"
                    )));
                }
                if self.coloring == ColoringMode::Clique {
                    return Err(Error::InvalidConfig(
                        "clique coloring requires the rewired-clique generator".into(),
                    ));
                }
            }
            GeneratorKind::RewiredCliques {
                cliques,
                clique_size,
                rewire_prob,
            } => {
                if cliques < 2 || clique_size < 2 {
                    return Err(Error::InvalidConfig(
                        "need at least 2 cliques of size at least 2".into(),
                    ));
                }
                if !(0.0..=1.0).contains(&rewire_prob) {
                    return Err(Error::InvalidConfig(format!(
                        "rewire probability {rewire_prob} outside [0, 1]"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Smallest group probability (the minority fraction).
    pub fn p_sensitive(&self) -> f64 {
        self.group_probs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Compact descriptor echoed into run records.
    pub fn describe(&self) -> String {
        let coloring = match self.coloring {
            ColoringMode::Individual => "individual",
            ColoringMode::Clique => "clique",
        };
        let probs: Vec<String> = self.group_probs.iter().map(|p| format!("{p}")).collect();
        match self.kind {
            GeneratorKind::Er { nodes, edge_prob } => format!(
                "er(n={nodes},p={edge_prob},pg=[{}],ss={},cs={})",
                probs.join(","),
                self.structure_seed,
                self.coloring_seed
            ),
            GeneratorKind::RewiredCliques {
                cliques,
                clique_size,
                rewire_prob,
            } => format!(
                "cliques(L={cliques},l={clique_size},pr={rewire_prob},pg=[{}],{coloring},ss={},cs={})",
                probs.join(","),
                self.structure_seed,
                self.coloring_seed
            ),
        }
    }
}

/// A generated colored network with generator diagnostics.
#[derive(Debug, Clone)]
pub struct GeneratedNetwork {
    pub graph: Graph,
    pub labels: Vec<usize>,
    /// Clique id per node for the rewired-clique kind.
    pub clique_of: Option<Vec<usize>>,
    pub rewired_edges: usize,
    /// Rewires abandoned after the bounded retry count.
    pub skipped_rewires: usize,
}

pub fn generate(cfg: &GeneratorConfig) -> Result<GeneratedNetwork> {
    cfg.validate()?;
    match cfg.kind {
        GeneratorKind::Er { nodes, edge_prob } => generate_er_inner(cfg, nodes, edge_prob),
        GeneratorKind::RewiredCliques {
            cliques,
            clique_size,
            rewire_prob,
        } => generate_cliques_inner(cfg, cliques, clique_size, rewire_prob),
    }
}

/// Erdos-Renyi G(n, p): each unordered pair is an edge independently with
/// probability p, sampled via geometric skips so the cost is O(m).
pub fn generate_er(cfg: &GeneratorConfig) -> Result<GeneratedNetwork> {
    cfg.validate()?;
    match cfg.kind {
        GeneratorKind::Er { nodes, edge_prob } => generate_er_inner(cfg, nodes, edge_prob),
        _ => Err(Error::InvalidConfig("expected an ER generator config".into())),
    }
}

pub fn generate_rewired_cliques(cfg: &GeneratorConfig) -> Result<GeneratedNetwork> {
    cfg.validate()?;
    match cfg.kind {
        GeneratorKind::RewiredCliques {
            cliques,
            clique_size,
            rewire_prob,
        } => generate_cliques_inner(cfg, cliques, clique_size, rewire_prob),
        _ => Err(Error::InvalidConfig(
            "expected a rewired-clique generator config".into(),
        )),
    }
}

fn generate_er_inner(cfg: &GeneratorConfig, n: usize, p: f64) -> Result<GeneratedNetwork> {
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    if n >= 2 && p > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.structure_seed);
        if p >= 1.0 {
            for i in 0..n {
                for j in (i + 1)..n {
                    edges.push((i, j, 1.0));
                }
            }
        } else {
            // Walk the pairs (i, j), i < j, in lexicographic order, jumping
            // ahead by geometric skips: skip = floor(ln U / ln(1 - p)).
            let ln_q = (1.0 - p).ln();
            let mut i = 0usize;
            let mut j = 1usize;
            loop {
                let u: f64 = rng.random::<f64>();
                let mut skip = if u <= 0.0 {
                    usize::MAX
                } else {
                    let s = (u.ln() / ln_q).floor();
                    if s >= usize::MAX as f64 {
                        usize::MAX
                    } else {
                        s as usize
                    }
                };
                // Advance the (i, j) cursor by `skip` positions.
                let mut done = false;
                while skip > n - 1 - j {
                    skip -= n - j;
                    i += 1;
                    if i >= n - 1 {
                        done = true;
                        break;
                    }
                    j = i + 1;
                }
                if done {
                    break;
                }
                j += skip;
                edges.push((i, j, 1.0));
                // Step past the emitted pair.
                if j + 1 < n {
                    j += 1;
                } else {
                    i += 1;
                    if i >= n - 1 {
                        break;
                    }
                    j = i + 1;
                }
            }
        }
    }
    let labels = color_individual(n, &cfg.group_probs, cfg.coloring_seed);
    let graph = Graph::build_with_group_count(&edges, &labels, cfg.group_probs.len())?;
    Ok(GeneratedNetwork {
        graph,
        labels,
        clique_of: None,
        rewired_edges: 0,
        skipped_rewires: 0,
    })
}

fn generate_cliques_inner(
    cfg: &GeneratorConfig,
    cliques: usize,
    clique_size: usize,
    rewire_prob: f64,
) -> Result<GeneratedNetwork> {
    let n = cliques * clique_size;
    let clique_of: Vec<usize> = (0..n).map(|v| v / clique_size).collect();

    // All intra-clique edges, in deterministic order.
    let mut edge_set: HashSet<(usize, usize)> = HashSet::new();
    let mut original: Vec<(usize, usize)> = Vec::with_capacity(cliques * clique_size * (clique_size - 1) / 2);
    for c in 0..cliques {
        let base = c * clique_size;
        for a in 0..clique_size {
            for b in (a + 1)..clique_size {
                let e = (base + a, base + b);
                original.push(e);
                edge_set.insert(e);
            }
        }
    }

    // Each original edge is considered for rewiring exactly once. The first
    // endpoint stays; the second is resampled uniformly from other cliques,
    // rejecting duplicates, with a bounded retry count.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.structure_seed);
    let mut rewired = 0usize;
    let mut skipped = 0usize;
    if rewire_prob > 0.0 {
        let others = (cliques - 1) * clique_size;
        for &(u, v) in &original {
            if rng.random::<f64>() >= rewire_prob {
                continue;
            }
            let cu = clique_of[u];
            let mut placed = false;
            for _ in 0..REWIRE_RETRIES {
                let idx = rng.random_range(0..others);
                let candidate = if idx < cu * clique_size {
                    idx
                } else {
                    idx + clique_size
                };
                let e = (u.min(candidate), u.max(candidate));
                if edge_set.contains(&e) {
                    continue;
                }
                edge_set.remove(&(u, v));
                edge_set.insert(e);
                placed = true;
                break;
            }
            if placed {
                rewired += 1;
            } else {
                skipped += 1;
            }
        }
    }

    let mut edges: Vec<(usize, usize, f64)> =
        edge_set.into_iter().map(|(u, v)| (u, v, 1.0)).collect();
    edges.sort_unstable_by_key(|&(u, v, _)| (u, v));

    let labels = match cfg.coloring {
        ColoringMode::Individual => color_individual(n, &cfg.group_probs, cfg.coloring_seed),
        ColoringMode::Clique => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.coloring_seed);
            let mut labels = vec![0usize; n];
            for c in 0..cliques {
                let color = sample_group(&mut rng, &cfg.group_probs);
                for member in 0..clique_size {
                    labels[c * clique_size + member] = color;
                }
            }
            labels
        }
    };
    let graph = Graph::build_with_group_count(&edges, &labels, cfg.group_probs.len())?;
    Ok(GeneratedNetwork {
        graph,
        labels,
        clique_of: Some(clique_of),
        rewired_edges: rewired,
        skipped_rewires: skipped,
    })
}

fn color_individual(n: usize, probs: &[f64], seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| sample_group(&mut rng, probs)).collect()
}

fn sample_group(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.random::<f64>();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}
