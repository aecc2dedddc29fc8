//! All-pairs dependence testing, Benjamini–Yekutieli FDR control, network
//! construction, graph statistics, hierarchical clustering, the
//! Erdős–Rényi null-model comparison, and bootstrap stability.

use crate::error::{Error, Result};
use crate::exec;
use crate::joint::PairObservation;
use crate::margin::ZibRegressionSpec;
use crate::simulate::task_rng;
use crate::two_stage::{independence_test, PairFit};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Result for one unordered taxon pair; skipped pairs carry the reason.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairRecord {
    pub i: usize,
    pub j: usize,
    pub fit: Option<PairFit>,
    pub skip_reason: Option<String>,
}

/// Fits and tests for every unordered pair of taxa.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairTable {
    pub labels: Vec<String>,
    pub rows: Vec<PairRecord>,
}

/// The significance network: labels, symmetric adjacency, edge signs from
/// the dependence estimate, and a cluster assignment (all zeros until
/// [`hierarchical_cluster`] fills it).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DependenceNetwork {
    pub labels: Vec<String>,
    pub adjacency: Vec<Vec<bool>>,
    pub edge_sign: Vec<Vec<i8>>,
    pub cluster_assignment: Vec<usize>,
    pub edges: Vec<EdgeRecord>,
}

/// One significant edge with the statistics behind it.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub i: usize,
    pub j: usize,
    pub theta: f64,
    pub p: f64,
    pub p_adjusted: f64,
    pub sign: i8,
}

impl DependenceNetwork {
    pub fn n_nodes(&self) -> usize {
        self.labels.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[v]
            .iter()
            .enumerate()
            .filter(|(_, &a)| a)
            .map(|(u, _)| u)
    }
}

fn column(matrix: &[Vec<f64>], j: usize) -> Vec<f64> {
    matrix.iter().map(|row| row[j]).collect()
}

/// Run the independence test for every unordered pair of taxa. `matrix` is
/// samples x taxa; `covariates` is an optional per-sample design (with
/// intercept) for each margin's zero-mass probability. Pairs that violate
/// the fit preconditions are recorded as skipped, never fatal.
pub fn pairwise_analysis(
    matrix: &[Vec<f64>],
    labels: &[String],
    covariates: Option<&[Vec<f64>]>,
) -> Result<PairTable> {
    if labels.is_empty() {
        return Err(Error::EmptyTaxa);
    }
    let t = labels.len();
    if matrix.iter().any(|row| row.len() != t) {
        return Err(Error::Config(format!(
            "abundance rows must have {t} columns to match the labels"
        )));
    }
    let n = matrix.len();
    let spec = covariates.map(|q| {
        let mut s = ZibRegressionSpec::intercept_only(n);
        s.q_design = q.to_vec();
        s
    });

    let pairs: Vec<(usize, usize)> = (0..t)
        .flat_map(|i| (i + 1..t).map(move |j| (i, j)))
        .collect();
    let rows = exec::map_range(pairs.len(), |k| {
        let (i, j) = pairs[k];
        let xs = column(matrix, i);
        let ys = column(matrix, j);
        let data: Result<Vec<PairObservation>> = xs
            .iter()
            .zip(&ys)
            .map(|(&a, &b)| PairObservation::new(a, b))
            .collect();
        let outcome = data.and_then(|d| independence_test(&d, spec.as_ref(), spec.as_ref()));
        match outcome {
            Ok(fit) => PairRecord {
                i,
                j,
                fit: Some(fit),
                skip_reason: None,
            },
            Err(e) => PairRecord {
                i,
                j,
                fit: None,
                skip_reason: Some(e.to_string()),
            },
        }
    });
    Ok(PairTable {
        labels: labels.to_vec(),
        rows,
    })
}

/// Benjamini–Yekutieli step-up FDR control: with c(m) = sum_{i<=m} 1/i,
/// reject the k smallest p-values where k is the largest index with
/// p_(k) <= k * alpha / (m * c(m)). Returns the rejection vector and
/// monotone adjusted p-values, both in input order.
pub fn by_fdr(p_values: &[f64], alpha: f64) -> Result<(Vec<bool>, Vec<f64>)> {
    let m = p_values.len();
    if m == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    for &p in p_values {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("p-value {p} outside [0,1]")));
        }
    }
    let c: f64 = (1..=m).map(|i| 1.0 / i as f64).sum();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].total_cmp(&p_values[b]));

    // adjusted p: running minimum from the largest p downward
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0_f64;
    for k in (0..m).rev() {
        let idx = order[k];
        let raw = p_values[idx] * m as f64 * c / (k + 1) as f64;
        running = running.min(raw.min(1.0));
        adjusted[idx] = running;
    }

    let mut k_star = None;
    for k in (0..m).rev() {
        if p_values[order[k]] <= (k + 1) as f64 * alpha / (m as f64 * c) {
            k_star = Some(k);
            break;
        }
    }
    let mut reject = vec![false; m];
    if let Some(k_star) = k_star {
        for &idx in &order[..=k_star] {
            reject[idx] = true;
        }
    }
    Ok((reject, adjusted))
}

/// Build the significance network: an edge where the BY-adjusted p-value is
/// below alpha, signed by the dependence estimate. Skipped pairs contribute
/// no edge.
pub fn build_network(table: &PairTable, alpha: f64) -> Result<DependenceNetwork> {
    let t = table.labels.len();
    let tested: Vec<(usize, &PairRecord)> = table
        .rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.fit.is_some())
        .collect();
    let pvals: Vec<f64> = tested
        .iter()
        .map(|(_, r)| r.fit.as_ref().unwrap().p_value)
        .collect();
    let (reject, adjusted) = by_fdr(&pvals, alpha)?;

    let mut adjacency = vec![vec![false; t]; t];
    let mut edge_sign = vec![vec![0i8; t]; t];
    let mut edges = Vec::new();
    for (k, (_, row)) in tested.iter().enumerate() {
        if !reject[k] {
            continue;
        }
        let fit = row.fit.as_ref().unwrap();
        let sign = if fit.theta_hat > 0.0 { 1 } else { -1 };
        adjacency[row.i][row.j] = true;
        adjacency[row.j][row.i] = true;
        edge_sign[row.i][row.j] = sign;
        edge_sign[row.j][row.i] = sign;
        edges.push(EdgeRecord {
            i: row.i,
            j: row.j,
            theta: fit.theta_hat,
            p: fit.p_value,
            p_adjusted: adjusted[k],
            sign,
        });
    }
    Ok(DependenceNetwork {
        labels: table.labels.clone(),
        adjacency,
        edge_sign,
        cluster_assignment: vec![0; t],
        edges,
    })
}

/// Per-node and global graph metrics. Per-node vectors are normalized:
/// degree by (n-1), closeness as (component size - 1) / (sum of distances
/// within the component), betweenness by 2/((n-1)(n-2)), eigenvector
/// centrality scaled to maximum 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphStats {
    pub degree: Vec<f64>,
    pub closeness: Vec<f64>,
    pub betweenness: Vec<f64>,
    pub eigenvector: Vec<f64>,
    pub density: f64,
    /// diameter of the largest component
    pub diameter: usize,
    /// mean geodesic distance over the largest component
    pub mean_distance: f64,
    /// distances were restricted to the largest component
    pub disconnected: bool,
    pub avg_clustering: f64,
    /// Newman's Q for the network's cluster assignment
    pub modularity: f64,
    pub avg_degree: f64,
    pub avg_closeness: f64,
    pub avg_betweenness: f64,
    pub avg_eigenvector: f64,
}

fn bfs_distances(net: &DependenceNetwork, source: usize) -> Vec<Option<usize>> {
    let n = net.n_nodes();
    let mut dist = vec![None; n];
    dist[source] = Some(0);
    let mut queue = std::collections::VecDeque::from([source]);
    while let Some(v) = queue.pop_front() {
        let dv = dist[v].unwrap();
        for u in net.neighbors(v) {
            if dist[u].is_none() {
                dist[u] = Some(dv + 1);
                queue.push_back(u);
            }
        }
    }
    dist
}

/// Brandes' betweenness centrality (unweighted), raw counts.
fn betweenness_raw(net: &DependenceNetwork) -> Vec<f64> {
    let n = net.n_nodes();
    let mut bc = vec![0.0; n];
    for s in 0..n {
        let mut stack = Vec::new();
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut sigma = vec![0.0f64; n];
        sigma[s] = 1.0;
        let mut dist = vec![-1i64; n];
        dist[s] = 0;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for w in net.neighbors(v) {
                if dist[w] < 0 {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        let mut delta = vec![0.0f64; n];
        while let Some(w) = stack.pop() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                bc[w] += delta[w];
            }
        }
    }
    // each unordered pair was counted from both endpoints
    bc.iter_mut().for_each(|b| *b /= 2.0);
    bc
}

fn components(net: &DependenceNetwork) -> Vec<Vec<usize>> {
    let n = net.n_nodes();
    let mut seen = vec![false; n];
    let mut comps = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        let mut comp = Vec::new();
        let mut queue = std::collections::VecDeque::from([s]);
        seen[s] = true;
        while let Some(v) = queue.pop_front() {
            comp.push(v);
            for u in net.neighbors(v) {
                if !seen[u] {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        comps.push(comp);
    }
    comps
}

/// Newman's modularity Q for a node partition.
pub fn modularity(net: &DependenceNetwork, partition: &[usize]) -> f64 {
    let n = net.n_nodes();
    let two_m: f64 = 2.0 * net.adjacency.iter().flatten().filter(|&&a| a).count() as f64 / 2.0;
    if two_m == 0.0 {
        return 0.0;
    }
    let deg: Vec<f64> = (0..n).map(|v| net.neighbors(v).count() as f64).collect();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if partition[i] != partition[j] {
                continue;
            }
            let a = if net.adjacency[i][j] { 1.0 } else { 0.0 };
            q += a - deg[i] * deg[j] / two_m;
        }
    }
    q / two_m
}

/// Compute the full metric record for a network.
pub fn graph_stats(net: &DependenceNetwork) -> Result<GraphStats> {
    let n = net.n_nodes();
    if n == 0 {
        return Err(Error::EmptyTaxa);
    }
    let deg_raw: Vec<f64> = (0..n).map(|v| net.neighbors(v).count() as f64).collect();
    let degree: Vec<f64> = deg_raw
        .iter()
        .map(|&d| if n > 1 { d / (n - 1) as f64 } else { 0.0 })
        .collect();

    let all_dist: Vec<Vec<Option<usize>>> = (0..n).map(|s| bfs_distances(net, s)).collect();
    let closeness: Vec<f64> = (0..n)
        .map(|v| {
            let (mut total, mut reached) = (0usize, 0usize);
            for u in 0..n {
                if u != v {
                    if let Some(d) = all_dist[v][u] {
                        total += d;
                        reached += 1;
                    }
                }
            }
            if total > 0 {
                reached as f64 / total as f64
            } else {
                0.0
            }
        })
        .collect();

    let bc_raw = betweenness_raw(net);
    let bc_scale = if n > 2 {
        2.0 / ((n - 1) as f64 * (n - 2) as f64)
    } else {
        0.0
    };
    let betweenness: Vec<f64> = bc_raw.iter().map(|&b| b * bc_scale).collect();

    // eigenvector centrality by power iteration on A + I (same eigenvectors
    // as A, but the shift keeps bipartite graphs from oscillating), scaled
    // to max 1
    let mut eig = vec![1.0f64; n];
    let m_edges = net.edges.len().max(
        net.adjacency.iter().flatten().filter(|&&a| a).count() / 2,
    );
    if m_edges > 0 {
        for _ in 0..10_000 {
            let mut next = eig.clone();
            for (v, nv) in next.iter_mut().enumerate() {
                for u in net.neighbors(v) {
                    *nv += eig[u];
                }
            }
            let norm = next.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
            if norm == 0.0 {
                next = vec![0.0; n];
                eig = next;
                break;
            }
            next.iter_mut().for_each(|x| *x /= norm);
            let delta: f64 = next
                .iter()
                .zip(&eig)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            eig = next;
            if delta < 1e-12 {
                break;
            }
        }
    } else {
        eig = vec![0.0; n];
    }

    let comps = components(net);
    let disconnected = comps.len() > 1;
    let largest = comps
        .iter()
        .max_by_key(|c| (c.len(), std::cmp::Reverse(c[0])))
        .unwrap();
    let (mut diameter, mut dist_sum, mut dist_count) = (0usize, 0usize, 0usize);
    for (a, &v) in largest.iter().enumerate() {
        for &u in largest.iter().skip(a + 1) {
            if let Some(d) = all_dist[v][u] {
                diameter = diameter.max(d);
                dist_sum += d;
                dist_count += 1;
            }
        }
    }
    let mean_distance = if dist_count > 0 {
        dist_sum as f64 / dist_count as f64
    } else {
        0.0
    };

    // average local clustering coefficient
    let mut clustering_sum = 0.0;
    for v in 0..n {
        let nbrs: Vec<usize> = net.neighbors(v).collect();
        let k = nbrs.len();
        if k < 2 {
            continue;
        }
        let mut links = 0usize;
        for (a, &x) in nbrs.iter().enumerate() {
            for &y in nbrs.iter().skip(a + 1) {
                if net.adjacency[x][y] {
                    links += 1;
                }
            }
        }
        clustering_sum += 2.0 * links as f64 / (k * (k - 1)) as f64;
    }
    let avg_clustering = clustering_sum / n as f64;

    let density = if n > 1 {
        deg_raw.iter().sum::<f64>() / (n * (n - 1)) as f64
    } else {
        0.0
    };
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;

    Ok(GraphStats {
        avg_degree: mean(&degree),
        avg_closeness: mean(&closeness),
        avg_betweenness: mean(&betweenness),
        avg_eigenvector: mean(&eig),
        degree,
        closeness,
        betweenness,
        eigenvector: eig,
        density,
        diameter,
        mean_distance,
        disconnected,
        avg_clustering,
        modularity: modularity(net, &net.cluster_assignment),
    })
}

/// Hamming distance between adjacency rows: the fraction of potential
/// neighbors on which two nodes disagree (their mutual entries excluded).
fn adjacency_distance(net: &DependenceNetwork, a: usize, b: usize) -> f64 {
    let n = net.n_nodes();
    if n <= 2 {
        return if net.adjacency[a][b] { 0.0 } else { 1.0 };
    }
    let mut diff = 0usize;
    for k in 0..n {
        if k == a || k == b {
            continue;
        }
        if net.adjacency[a][k] != net.adjacency[b][k] {
            diff += 1;
        }
    }
    diff as f64 / (n - 2) as f64
}

/// Complete-linkage agglomerative clustering on adjacency-row Hamming
/// distances, cut into k clusters. Merge ties are broken by the smallest
/// member indices, so the result is deterministic.
pub fn hierarchical_cluster(net: &DependenceNetwork, k: usize) -> Result<Vec<usize>> {
    let n = net.n_nodes();
    if k < 1 || k > n {
        return Err(Error::TooManyClusters { k, n });
    }
    let mut dist = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in a + 1..n {
            let d = adjacency_distance(net, a, b);
            dist[a][b] = d;
            dist[b][a] = d;
        }
    }
    // clusters as sorted member lists; complete linkage = max pair distance
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
    while clusters.len() > k {
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let mut d = 0.0f64;
                for &x in &clusters[a] {
                    for &y in &clusters[b] {
                        d = d.max(dist[x][y]);
                    }
                }
                if best.is_none_or(|cur| d < cur.0) {
                    best = Some((d, a, b));
                }
            }
        }
        let (_, a, b) = best.unwrap();
        let merged = clusters.remove(b);
        clusters[a].extend(merged);
        clusters[a].sort_unstable();
        // keep clusters ordered by smallest member for deterministic labels
        clusters.sort_by_key(|c| c[0]);
    }
    let mut assignment = vec![0; n];
    for (label, cluster) in clusters.iter().enumerate() {
        for &v in cluster {
            assignment[v] = label;
        }
    }
    Ok(assignment)
}

/// Null-model comparison report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NullModelReport {
    pub n_reps: usize,
    pub observed_clustering: f64,
    pub observed_modularity: f64,
    /// empirical two-sided p-values against the null distribution
    pub p_clustering: f64,
    pub p_modularity: f64,
    /// two-sample Kolmogorov-Smirnov statistic between the observed degree
    /// distribution and the pooled null degrees, with its asymptotic p
    pub ks_degree: f64,
    pub ks_p: f64,
}

fn two_sided_empirical_p(null: &[f64], observed: f64) -> f64 {
    let n = null.len() as f64;
    let le = null.iter().filter(|&&x| x <= observed).count() as f64;
    let ge = null.iter().filter(|&&x| x >= observed).count() as f64;
    let p = 2.0 * ((le + 1.0) / (n + 1.0)).min((ge + 1.0) / (n + 1.0));
    p.min(1.0)
}

/// Two-sample KS statistic and asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut xs = a.to_vec();
    xs.sort_by(f64::total_cmp);
    let mut ys = b.to_vec();
    ys.sort_by(f64::total_cmp);
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < xs.len() && j < ys.len() {
        let t = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= t {
            i += 1;
        }
        while j < ys.len() && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = na * nb / (na + nb);
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    if lambda < 1e-3 {
        return (d, 1.0); // the alternating series needs lambda bounded away from 0
    }
    let mut p = 0.0;
    for k in 1..=100 {
        let term = 2.0 * (-1.0f64).powi(k - 1) * (-2.0 * (k as f64 * lambda).powi(2)).exp();
        p += term;
        if term.abs() < 1e-12 {
            break;
        }
    }
    (d, p.clamp(0.0, 1.0))
}

fn er_graph(n: usize, m_edges: usize, rng: &mut impl Rng) -> DependenceNetwork {
    // G(n, M): M distinct edges uniform over all pairs, by a partial
    // Fisher-Yates shuffle of the pair indices
    let mut pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let total = pairs.len();
    let mut adjacency = vec![vec![false; n]; n];
    for k in 0..m_edges.min(total) {
        let pick = k + rng.gen_range(0..total - k);
        pairs.swap(k, pick);
        let (i, j) = pairs[k];
        adjacency[i][j] = true;
        adjacency[j][i] = true;
    }
    DependenceNetwork {
        labels: (0..n).map(|v| v.to_string()).collect(),
        edge_sign: vec![vec![0; n]; n],
        cluster_assignment: vec![0; n],
        edges: pairs[..m_edges.min(total)]
            .iter()
            .map(|&(i, j)| EdgeRecord {
                i,
                j,
                theta: 0.0,
                p: 0.0,
                p_adjusted: 0.0,
                sign: 0,
            })
            .collect(),
        adjacency,
    }
}

fn avg_local_clustering(net: &DependenceNetwork) -> f64 {
    // small helper shared with the null replicates
    graph_stats(net).map(|s| s.avg_clustering).unwrap_or(0.0)
}

/// Compare the observed network against Erdős–Rényi graphs with the same
/// node and edge counts: per-replicate clustering coefficient and modularity
/// (under the same-k hierarchical cut), empirical two-sided p-values for the
/// observed statistics, and a KS comparison of degree distributions.
pub fn er_null_comparison(
    net: &DependenceNetwork,
    n_reps: usize,
    seed: u64,
) -> Result<NullModelReport> {
    if n_reps < 100 {
        return Err(Error::Config(format!(
            "null comparison needs at least 100 replicates, got {n_reps}"
        )));
    }
    let n = net.n_nodes();
    let m_edges = net.n_edges();
    let k = net
        .cluster_assignment
        .iter()
        .collect::<std::collections::BTreeSet<_>>()
        .len()
        .max(1);

    let observed_clustering = avg_local_clustering(net);
    let observed_modularity = modularity(net, &net.cluster_assignment);
    let observed_degrees: Vec<f64> = (0..n).map(|v| net.neighbors(v).count() as f64).collect();

    let null: Vec<(f64, f64, Vec<f64>)> = exec::map_range(n_reps, |rep| {
        let mut rng = task_rng(seed, u64::MAX, rep as u64);
        let g = er_graph(n, m_edges, &mut rng);
        let part = hierarchical_cluster(&g, k.min(n)).unwrap_or_else(|_| vec![0; n]);
        let degs: Vec<f64> = (0..n).map(|v| g.neighbors(v).count() as f64).collect();
        (avg_local_clustering(&g), modularity(&g, &part), degs)
    });

    let clusterings: Vec<f64> = null.iter().map(|r| r.0).collect();
    let modularities: Vec<f64> = null.iter().map(|r| r.1).collect();
    let pooled_degrees: Vec<f64> = null.iter().flat_map(|r| r.2.iter().copied()).collect();
    let (ks_degree, ks_p) = ks_two_sample(&observed_degrees, &pooled_degrees);

    Ok(NullModelReport {
        n_reps,
        observed_clustering,
        observed_modularity,
        p_clustering: two_sided_empirical_p(&clusterings, observed_clustering),
        p_modularity: two_sided_empirical_p(&modularities, observed_modularity),
        ks_degree,
        ks_p,
    })
}

/// Bootstrap stability report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityReport {
    pub b: usize,
    /// significant pairs in the original data
    pub original_count: usize,
    /// per-replicate significant-pair counts
    pub counts: Vec<usize>,
    /// per-replicate overlap coefficient |A and B| / min(|A|, |B|)
    pub overlaps: Vec<f64>,
    /// per-replicate Dice coefficient 2|A and B| / (|A| + |B|)
    pub dice: Vec<f64>,
    pub mean_overlap: f64,
    pub mean_dice: f64,
    /// per-pair selection frequency across replicates (pair-table order)
    pub selection_frequency: Vec<f64>,
}

fn significant_set(table: &PairTable, alpha: f64) -> Result<std::collections::BTreeSet<(usize, usize)>> {
    let net = build_network(table, alpha)?;
    Ok(net.edges.iter().map(|e| (e.i, e.j)).collect())
}

/// Resample subjects with replacement B times, rerun the full pipeline, and
/// compare each replicate's significant set with the original.
pub fn bootstrap_stability(
    matrix: &[Vec<f64>],
    labels: &[String],
    covariates: Option<&[Vec<f64>]>,
    alpha: f64,
    b: usize,
    seed: u64,
) -> Result<StabilityReport> {
    if b < 2 {
        return Err(Error::Config(format!("bootstrap needs B >= 2, got {b}")));
    }
    let original_table = pairwise_analysis(matrix, labels, covariates)?;
    let original = significant_set(&original_table, alpha)?;

    let n = matrix.len();
    let sets: Vec<std::collections::BTreeSet<(usize, usize)>> = (0..b)
        .map(|rep| {
            let mut rng = task_rng(seed, u64::MAX - 1, rep as u64);
            let rows: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let resampled: Vec<Vec<f64>> = rows.iter().map(|&r| matrix[r].clone()).collect();
            let cov: Option<Vec<Vec<f64>>> =
                covariates.map(|q| rows.iter().map(|&r| q[r].clone()).collect());
            let table = pairwise_analysis(&resampled, labels, cov.as_deref())?;
            significant_set(&table, alpha)
        })
        .collect::<Result<_>>()?;

    let mut counts = Vec::with_capacity(b);
    let mut overlaps = Vec::with_capacity(b);
    let mut dice = Vec::with_capacity(b);
    let mut freq = vec![0.0; original_table.rows.len()];
    for set in &sets {
        counts.push(set.len());
        let inter = original.intersection(set).count() as f64;
        let min = original.len().min(set.len()) as f64;
        overlaps.push(if min > 0.0 { inter / min } else { 1.0 });
        let denom = (original.len() + set.len()) as f64;
        dice.push(if denom > 0.0 { 2.0 * inter / denom } else { 1.0 });
        for (k, row) in original_table.rows.iter().enumerate() {
            if set.contains(&(row.i, row.j)) {
                freq[k] += 1.0;
            }
        }
    }
    freq.iter_mut().for_each(|f| *f /= b as f64);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;

    Ok(StabilityReport {
        b,
        original_count: original.len(),
        mean_overlap: mean(&overlaps),
        mean_dice: mean(&dice),
        counts,
        overlaps,
        dice,
        selection_frequency: freq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copula::FrankTheta;
    use crate::margin::ZibParams;
    use crate::simulate::sample_pair;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn net_from_edges(n: usize, edges: &[(usize, usize)]) -> DependenceNetwork {
        let mut adjacency = vec![vec![false; n]; n];
        let mut sign = vec![vec![0i8; n]; n];
        for &(i, j) in edges {
            adjacency[i][j] = true;
            adjacency[j][i] = true;
            sign[i][j] = 1;
            sign[j][i] = 1;
        }
        DependenceNetwork {
            labels: (0..n).map(|v| v.to_string()).collect(),
            adjacency,
            edge_sign: sign,
            cluster_assignment: vec![0; n],
            edges: edges
                .iter()
                .map(|&(i, j)| EdgeRecord {
                    i,
                    j,
                    theta: 1.0,
                    p: 0.0,
                    p_adjusted: 0.0,
                    sign: 1,
                })
                .collect(),
        }
    }

    /// quadratic-time step-up oracle checking every k explicitly
    fn by_oracle(p: &[f64], alpha: f64) -> Vec<bool> {
        let m = p.len();
        let c: f64 = (1..=m).map(|i| 1.0 / i as f64).sum();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
        let mut best = 0usize;
        for k in 1..=m {
            if p[order[k - 1]] <= k as f64 * alpha / (m as f64 * c) {
                best = k;
            }
        }
        let mut reject = vec![false; m];
        for &idx in &order[..best] {
            reject[idx] = true;
        }
        reject
    }

    #[test]
    fn by_fdr_single_and_worked_example() {
        let (r, adj) = by_fdr(&[0.03], 0.05).unwrap();
        assert_eq!(r, vec![true]);
        assert_eq!(adj, vec![0.03]);
        let (r, _) = by_fdr(&[0.06], 0.05).unwrap();
        assert_eq!(r, vec![false]);

        // thresholds k * 0.05 / (4 * 25/12) = k * 0.006
        let (r, adj) = by_fdr(&[0.001, 0.02, 0.03, 0.9], 0.05).unwrap();
        assert_eq!(r, vec![true, false, false, false]);
        // adjusted p of the smallest: 0.001 * 4 * (25/12) / 1
        assert!((adj[0] - 0.001 * 4.0 * (25.0 / 12.0)).abs() < 1e-12);
        assert!(adj.windows(2).all(|w| w[0] <= w[1] + 1e-15));
    }

    #[test]
    fn by_fdr_matches_brute_force_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for _ in 0..1000 {
            let m = rand::Rng::gen_range(&mut rng, 1..30);
            let p: Vec<f64> = (0..m).map(|_| rand::Rng::gen::<f64>(&mut rng)).collect();
            let alpha = rand::Rng::gen_range(&mut rng, 0.01..0.2);
            let (fast, adj) = by_fdr(&p, alpha).unwrap();
            assert_eq!(fast, by_oracle(&p, alpha));
            // rejection iff adjusted p <= alpha
            for k in 0..m {
                assert_eq!(fast[k], adj[k] <= alpha, "p={:?} alpha={alpha}", p);
            }
        }
    }

    #[test]
    fn by_empty_input() {
        let (r, adj) = by_fdr(&[], 0.05).unwrap();
        assert!(r.is_empty() && adj.is_empty());
    }

    #[test]
    fn path_graph_metrics() {
        let mut net = net_from_edges(4, &[(0, 1), (1, 2), (2, 3)]);
        net.cluster_assignment = vec![0, 0, 1, 1];
        let s = graph_stats(&net).unwrap();
        let raw_deg: Vec<f64> = s.degree.iter().map(|d| d * 3.0).collect();
        assert_eq!(raw_deg, vec![1.0, 2.0, 2.0, 1.0]);
        assert_eq!(s.diameter, 3);
        assert!((s.mean_distance - 10.0 / 6.0).abs() < 1e-12);
        // raw betweenness of the middle nodes is 2
        assert!((s.betweenness[1] * 3.0 - 2.0).abs() < 1e-12);
        assert!(!s.disconnected);
        assert!((s.density - 0.5).abs() < 1e-12);
        // closeness of an end node: 3 / (1 + 2 + 3)
        assert!((s.closeness[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn complete_graph_metrics() {
        let n = 5;
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        let net = net_from_edges(n, &edges);
        let s = graph_stats(&net).unwrap();
        assert!((s.density - 1.0).abs() < 1e-12);
        assert_eq!(s.diameter, 1);
        assert!((s.avg_clustering - 1.0).abs() < 1e-12);
        assert!(s.degree.iter().all(|&d| (d - 1.0).abs() < 1e-12));
        assert!(s.eigenvector.iter().all(|&e| (e - 1.0).abs() < 1e-9));
        assert!(s.betweenness.iter().all(|&b| b.abs() < 1e-12));
    }

    #[test]
    fn disconnected_graph_flagged_and_uses_largest_component() {
        let net = net_from_edges(6, &[(0, 1), (1, 2), (3, 4)]);
        let s = graph_stats(&net).unwrap();
        assert!(s.disconnected);
        assert_eq!(s.diameter, 2);
        assert!((s.mean_distance - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn stats_invariant_under_relabeling() {
        let edges = [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)];
        let net = net_from_edges(5, &edges);
        // permutation: v -> (v + 2) % 5
        let perm = |v: usize| (v + 2) % 5;
        let permuted: Vec<(usize, usize)> = edges.iter().map(|&(i, j)| (perm(i), perm(j))).collect();
        let net2 = net_from_edges(5, &permuted);
        let s1 = graph_stats(&net).unwrap();
        let s2 = graph_stats(&net2).unwrap();
        for v in 0..5 {
            assert!((s1.degree[v] - s2.degree[perm(v)]).abs() < 1e-12);
            assert!((s1.closeness[v] - s2.closeness[perm(v)]).abs() < 1e-12);
            assert!((s1.betweenness[v] - s2.betweenness[perm(v)]).abs() < 1e-12);
            assert!((s1.eigenvector[v] - s2.eigenvector[perm(v)]).abs() < 1e-8);
        }
        assert!((s1.avg_clustering - s2.avg_clustering).abs() < 1e-12);
    }

    #[test]
    fn modularity_two_blocks() {
        // two triangles joined by one edge; the natural partition has
        // positive modularity, the trivial one has zero by definition
        let net = net_from_edges(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]);
        let q_split = modularity(&net, &[0, 0, 0, 1, 1, 1]);
        let q_all = modularity(&net, &[0; 6]);
        assert!(q_split > 0.3, "q = {q_split}");
        assert!(q_all.abs() < 1e-12);
    }

    #[test]
    fn cluster_two_cliques() {
        let net = net_from_edges(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]);
        let assign = hierarchical_cluster(&net, 2).unwrap();
        assert_eq!(assign[0], assign[1]);
        assert_eq!(assign[1], assign[2]);
        assert_eq!(assign[3], assign[4]);
        assert_eq!(assign[4], assign[5]);
        assert_ne!(assign[0], assign[3]);

        assert_eq!(hierarchical_cluster(&net, 1).unwrap(), vec![0; 6]);
        assert!(hierarchical_cluster(&net, 7).is_err());
    }

    #[test]
    fn cluster_matches_reference_complete_linkage() {
        // independent oracle: naive complete linkage on the same distances
        let edges = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (1, 4)];
        let net = net_from_edges(5, &edges);
        let n = 5;
        let mut dist = vec![vec![0.0; n]; n];
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    dist[a][b] = adjacency_distance(&net, a, b);
                }
            }
        }
        // oracle: sets of sets, always merging the lexicographically first
        // minimal-complete-linkage pair
        let mut clusters: Vec<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
        while clusters.len() > 2 {
            let mut best = (f64::INFINITY, 0, 0);
            for a in 0..clusters.len() {
                for b in a + 1..clusters.len() {
                    let mut d = 0.0f64;
                    for &x in &clusters[a] {
                        for &y in &clusters[b] {
                            d = d.max(dist[x][y]);
                        }
                    }
                    if d < best.0 {
                        best = (d, a, b);
                    }
                }
            }
            let m = clusters.remove(best.2);
            clusters[best.1].extend(m);
            clusters[best.1].sort_unstable();
            clusters.sort_by_key(|c| c[0]);
        }
        let mut expected = vec![0; n];
        for (label, c) in clusters.iter().enumerate() {
            for &v in c {
                expected[v] = label;
            }
        }
        assert_eq!(hierarchical_cluster(&net, 2).unwrap(), expected);
    }

    #[test]
    fn er_graphs_have_exact_edge_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        for _ in 0..20 {
            let g = er_graph(10, 17, &mut rng);
            let m = g.adjacency.iter().flatten().filter(|&&a| a).count() / 2;
            assert_eq!(m, 17);
        }
    }

    #[test]
    fn er_null_comparison_is_deterministic_and_detects_blocks() {
        let mut net = net_from_edges(
            10,
            &[
                (0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (0, 3), (1, 4), (0, 4),
                (5, 6), (6, 7), (5, 7), (7, 8), (8, 9), (5, 8), (6, 9), (5, 9),
                (4, 5),
            ],
        );
        net.cluster_assignment = hierarchical_cluster(&net, 2).unwrap();
        let a = er_null_comparison(&net, 400, 99).unwrap();
        let b = er_null_comparison(&net, 400, 99).unwrap();
        assert_eq!(a.p_modularity, b.p_modularity);
        assert_eq!(a.ks_degree, b.ks_degree);
        assert!(a.p_modularity < 0.02, "p = {}", a.p_modularity);
        assert!(er_null_comparison(&net, 50, 1).is_err());
    }

    #[test]
    fn ks_two_sample_known_value() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [3.5, 4.5, 5.5, 6.5];
        let (d, _) = ks_two_sample(&a, &b);
        assert!((d - 0.75).abs() < 1e-12);
        let (d_same, p_same) = ks_two_sample(&a, &a);
        assert_eq!(d_same, 0.0);
        assert!(p_same > 0.99);
    }

    fn planted_matrix(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<String>) {
        // taxa 0 and 1 strongly dependent; 2 and 3 independent of everything
        let gi = ZibParams::new(0.2, 0.4, 5.0).unwrap();
        let gj = ZibParams::new(0.25, 0.55, 6.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dep = sample_pair(n, &gi, &gj, FrankTheta(8.0), &mut rng).unwrap();
        let other1 = sample_pair(n, &gi, &gj, FrankTheta(0.0), &mut rng).unwrap();
        let matrix: Vec<Vec<f64>> = (0..n)
            .map(|l| vec![dep[l].x_i, dep[l].x_j, other1[l].x_i, other1[l].x_j])
            .collect();
        let labels = ["a", "b", "c", "d"].map(String::from).to_vec();
        (matrix, labels)
    }

    #[test]
    fn pairwise_analysis_row_count_and_planted_pair() {
        let (matrix, labels) = planted_matrix(150, 60);
        let table = pairwise_analysis(&matrix, &labels, None).unwrap();
        assert_eq!(table.rows.len(), 6);
        let best = table
            .rows
            .iter()
            .filter_map(|r| r.fit.as_ref().map(|f| ((r.i, r.j), f.p_value)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        assert_eq!(best.0, (0, 1), "planted pair should have the smallest p");
    }

    #[test]
    fn build_network_signs_and_empty_graph() {
        let (matrix, labels) = planted_matrix(150, 61);
        let table = pairwise_analysis(&matrix, &labels, None).unwrap();
        let net = build_network(&table, 0.01).unwrap();
        for e in &net.edges {
            let fit = table
                .rows
                .iter()
                .find(|r| (r.i, r.j) == (e.i, e.j))
                .unwrap()
                .fit
                .as_ref()
                .unwrap();
            assert_eq!(e.sign, if fit.theta_hat > 0.0 { 1 } else { -1 });
            assert!(net.adjacency[e.i][e.j] && net.adjacency[e.j][e.i]);
            assert_eq!(net.edge_sign[e.i][e.j], e.sign);
        }
        assert!(net.adjacency[0][1], "planted edge missing");

        // adjacency symmetric with empty diagonal
        for i in 0..net.n_nodes() {
            assert!(!net.adjacency[i][i]);
            for j in 0..net.n_nodes() {
                assert_eq!(net.adjacency[i][j], net.adjacency[j][i]);
            }
        }
    }

    #[test]
    fn bootstrap_detects_planted_pair() {
        let (matrix, labels) = planted_matrix(120, 62);
        let report = bootstrap_stability(&matrix, &labels, None, 0.05, 4, 77).unwrap();
        assert_eq!(report.counts.len(), 4);
        // pair (0,1) is the first row of the table
        assert!(
            report.selection_frequency[0] >= 0.75,
            "selection frequency {:?}",
            report.selection_frequency
        );
        assert!(report.selection_frequency.iter().all(|&f| (0.0..=1.0).contains(&f)));
        assert!(bootstrap_stability(&matrix, &labels, None, 0.05, 1, 1).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        // BY rejections are a subset of Benjamini-Hochberg rejections
        #[test]
        fn by_is_more_conservative_than_bh(
            p in prop::collection::vec(0.0..1.0f64, 1..25),
            alpha in 0.01..0.3f64,
        ) {
            let m = p.len();
            let (by, _) = by_fdr(&p, alpha).unwrap();
            // BH oracle: same step-up without the harmonic correction
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
            let mut best = 0;
            for k in 1..=m {
                if p[order[k - 1]] <= k as f64 * alpha / m as f64 {
                    best = k;
                }
            }
            let mut bh = vec![false; m];
            for &idx in &order[..best] {
                bh[idx] = true;
            }
            for k in 0..m {
                prop_assert!(!by[k] || bh[k]);
            }
        }
    }
}
