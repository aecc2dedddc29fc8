//! Command-line front end: pair fitting, network construction, simulation
//! studies, and bootstrap stability, all seed-reproducible.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use zibnet::error::{Error, Result};
use zibnet::exec;
use zibnet::joint::PairObservation;
use zibnet::margin::{Link, ZibRegressionSpec};
use zibnet::network::{
    bootstrap_stability, build_network, by_fdr, er_null_comparison, graph_stats,
    hierarchical_cluster, pairwise_analysis, PairTable,
};
use zibnet::simulate::{run_bias_variance_study, run_power_study, SimConfig, StudyResult};
use zibnet::tables::{
    align_covariates, filter_and_normalize, load_counts, load_covariates, AbundanceTable,
    CovariateTable, Orientation, DEFAULT_UNASSIGNED_LABELS,
};
use zibnet::two_stage::independence_test;

/// Version of the output/manifest schema, bumped on any column or key change.
const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(
    name = "zibnet",
    version,
    about = "Dependence networks for zero-inflated relative abundances"
)]
struct Cli {
    /// Worker threads for the parallel sections (default: ZIBNET_THREADS env
    /// var, else the rayon default). Output is identical for any setting.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit and test a single taxon pair, writing the fit as JSON.
    FitPair(FitPairArgs),
    /// All-pairs testing, FDR control, and network analysis.
    Network(NetworkArgs),
    /// Simulation studies on the built-in parameter grids.
    Simulate(SimulateArgs),
    /// Bootstrap stability of the significant pair set.
    Stability(StabilityArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OrientationArg {
    /// Header row of taxa, one row per sample.
    TaxaAsColumns,
    /// Header row of samples, one row per taxon.
    TaxaAsRows,
}

impl From<OrientationArg> for Orientation {
    fn from(o: OrientationArg) -> Orientation {
        match o {
            OrientationArg::TaxaAsColumns => Orientation::TaxaAsColumns,
            OrientationArg::TaxaAsRows => Orientation::TaxaAsRows,
        }
    }
}

/// Flags shared by every subcommand that reads an abundance table.
#[derive(Args, Debug)]
struct InputArgs {
    /// Abundance table (TSV, or CSV by extension).
    #[arg(long)]
    input: PathBuf,

    /// Table orientation.
    #[arg(long, value_enum, default_value = "taxa-as-columns")]
    orientation: OrientationArg,

    /// Drop taxa present in fewer than this fraction of samples.
    #[arg(long, default_value_t = 0.20)]
    min_prevalence: f64,

    /// Covariate table (first column: sample id).
    #[arg(long)]
    covariates: Option<PathBuf>,

    /// Covariate columns for the zero-mass probability, e.g. "age+bmi+abx".
    #[arg(long)]
    p_formula: Option<String>,
}

#[derive(Args, Debug)]
struct FitPairArgs {
    #[command(flatten)]
    input: InputArgs,

    /// The two taxon identifiers, comma separated.
    #[arg(long)]
    taxa: String,

    /// Covariate columns for the beta mean.
    #[arg(long)]
    mu_formula: Option<String>,

    /// Covariate columns for the beta dispersion.
    #[arg(long)]
    phi_formula: Option<String>,

    /// Output JSON path; a manifest is written next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct NetworkArgs {
    #[command(flatten)]
    input: InputArgs,

    /// FDR level for edge selection.
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,

    /// FDR procedure; only "by" (Benjamini-Yekutieli) is supported.
    #[arg(long, default_value = "by")]
    fdr: String,

    /// Number of clusters for the hierarchical cut.
    #[arg(long, default_value_t = 3)]
    clusters: usize,

    /// Erdos-Renyi null-model replicates (0 disables the comparison).
    #[arg(long, default_value_t = 1000)]
    null_reps: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Preset {
    /// Fixed-margin grid: 4 margin settings x 6 dependence values.
    PaperGrid,
    /// Covariate-margin grid with the same dependence values.
    PaperGridRegression,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Study {
    /// Bias/variance of the estimate plus jackknife calibration.
    Bias,
    /// Size and power of the test against correlation tests.
    Power,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    preset: Preset,

    /// Which study to run on the grid.
    #[arg(long, value_enum, default_value = "power")]
    study: Study,

    /// Override the preset's replicate count.
    #[arg(long)]
    reps: Option<usize>,

    /// Override the preset's sample size.
    #[arg(long)]
    n: Option<usize>,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct StabilityArgs {
    #[command(flatten)]
    input: InputArgs,

    /// Bootstrap replicates.
    #[arg(long, default_value_t = 100)]
    boot: usize,

    /// FDR level for the significant set.
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long)]
    out_dir: PathBuf,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders --help/--version through the error path too;
            // those should exit 0, real usage errors exit 1.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let threads = cli.threads.or_else(|| {
        std::env::var("ZIBNET_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(t) = threads {
        exec::set_threads(t);
    }
    if let Err(e) = run(cli.command) {
        eprintln!("error: {e}");
        std::process::exit(2);
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::FitPair(args) => run_fit_pair(args),
        Command::Network(args) => run_network(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Stability(args) => run_stability(args),
    }
}

/// 17 significant digits, enough to round-trip an f64 exactly.
fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

fn write_manifest(path: &Path, command: &str, args: serde_json::Value) -> Result<()> {
    let manifest = json!({
        "tool": "zibnet",
        "tool_version": env!("CARGO_PKG_VERSION"),
        "config_schema_version": CONFIG_SCHEMA_VERSION,
        "command": command,
        "args": args,
    });
    write_json(path, &manifest)
}

fn formula_columns(formula: &Option<String>) -> Vec<String> {
    formula
        .as_deref()
        .unwrap_or("")
        .split('+')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

/// Design matrix (intercept plus the expanded columns belonging to the
/// requested raw names; categorical expansions are named "column=level").
fn design_for(cov: &CovariateTable, names: &[String]) -> Result<Vec<Vec<f64>>> {
    let mut cols = Vec::new();
    for name in names {
        let matches: Vec<usize> = cov
            .columns
            .iter()
            .enumerate()
            .filter(|(_, c)| *c == name || c.starts_with(&format!("{name}=")))
            .map(|(k, _)| k)
            .collect();
        if matches.is_empty() {
            return Err(Error::MissingColumn(name.clone()));
        }
        cols.extend(matches);
    }
    Ok(cov
        .values
        .iter()
        .map(|row| {
            let mut r = vec![1.0];
            r.extend(cols.iter().map(|&k| row[k]));
            r
        })
        .collect())
}

/// Load, filter, normalize, and (if requested) align covariates. Returns the
/// analysis-ready table and the p-design rows when a formula was given.
fn prepare_input(args: &InputArgs) -> Result<(AbundanceTable, Option<Vec<Vec<f64>>>)> {
    let labels: Vec<String> = DEFAULT_UNASSIGNED_LABELS
        .iter()
        .map(|s| s.to_string())
        .collect();
    let raw = load_counts(&args.input, args.orientation.into())?;
    let table = filter_and_normalize(&raw, args.min_prevalence, &labels)?;

    let p_cols = formula_columns(&args.p_formula);
    if p_cols.is_empty() {
        return Ok((table, None));
    }
    let cov_path = args.covariates.as_ref().ok_or_else(|| {
        Error::Config("--p-formula requires --covariates".to_string())
    })?;
    let raw_cov = load_covariates(cov_path)?;
    let (table, cov) = align_covariates(&table, &raw_cov, &p_cols)?;
    let design = design_for(&cov, &p_cols)?;
    Ok((table, Some(design)))
}

fn input_manifest(args: &InputArgs) -> serde_json::Value {
    json!({
        "input": args.input,
        "orientation": format!("{:?}", args.orientation),
        "min_prevalence": args.min_prevalence,
        "covariates": args.covariates,
        "p_formula": args.p_formula,
    })
}

fn run_fit_pair(args: FitPairArgs) -> Result<()> {
    let labels: Vec<String> = DEFAULT_UNASSIGNED_LABELS
        .iter()
        .map(|s| s.to_string())
        .collect();
    let raw = load_counts(&args.input.input, args.input.orientation.into())?;
    let table = filter_and_normalize(&raw, args.input.min_prevalence, &labels)?;

    let ids: Vec<&str> = args.taxa.split(',').map(str::trim).collect();
    if ids.len() != 2 || ids[0] == ids[1] {
        return Err(Error::Config(format!(
            "--taxa needs two distinct comma-separated identifiers, got '{}'",
            args.taxa
        )));
    }

    let p_cols = formula_columns(&args.input.p_formula);
    let mu_cols = formula_columns(&args.mu_formula);
    let phi_cols = formula_columns(&args.phi_formula);
    let mut used: Vec<String> = Vec::new();
    for c in p_cols.iter().chain(&mu_cols).chain(&phi_cols) {
        if !used.contains(c) {
            used.push(c.clone());
        }
    }

    let (table, spec) = if used.is_empty() {
        (table, None)
    } else {
        let cov_path = args.input.covariates.as_ref().ok_or_else(|| {
            Error::Config("covariate formulas require --covariates".to_string())
        })?;
        let raw_cov = load_covariates(cov_path)?;
        let (table, cov) = align_covariates(&table, &raw_cov, &used)?;
        let mut spec = ZibRegressionSpec::intercept_only(table.sample_ids.len());
        spec.q_design = design_for(&cov, &p_cols)?;
        spec.w_design = design_for(&cov, &mu_cols)?;
        spec.z_design = design_for(&cov, &phi_cols)?;
        spec.links = (Link::Logit, Link::Logit, Link::Log);
        (table, Some(spec))
    };

    let find = |id: &str| {
        table
            .taxon_ids
            .iter()
            .position(|t| t == id)
            .ok_or_else(|| Error::MissingColumn(id.to_string()))
    };
    let (ci, cj) = (find(ids[0])?, find(ids[1])?);
    let data: Vec<PairObservation> = table
        .values
        .iter()
        .map(|row| PairObservation::new(row[ci], row[cj]))
        .collect::<Result<_>>()?;

    let fit = independence_test(&data, spec.as_ref(), spec.as_ref())?;
    write_json(&args.out, &fit)?;

    let manifest_path = manifest_beside(&args.out);
    write_manifest(
        &manifest_path,
        "fit-pair",
        json!({
            "input": input_manifest(&args.input),
            "taxa": args.taxa,
            "mu_formula": args.mu_formula,
            "phi_formula": args.phi_formula,
            "out": args.out,
        }),
    )?;
    println!(
        "fit-pair: {} vs {} | theta = {} | p = {}",
        ids[0],
        ids[1],
        fmt(fit.theta_hat),
        fmt(fit.p_value)
    );
    Ok(())
}

fn manifest_beside(out: &Path) -> PathBuf {
    let mut name = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_string());
    name.push_str(".manifest.json");
    out.with_file_name(name)
}

fn ensure_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

/// Adjusted p-values for every tested pair in table order (None for skips).
fn adjusted_for_table(table: &PairTable, alpha: f64) -> Result<Vec<Option<f64>>> {
    let tested: Vec<(usize, f64)> = table
        .rows
        .iter()
        .enumerate()
        .filter_map(|(k, r)| r.fit.as_ref().map(|f| (k, f.p_value)))
        .collect();
    let mut out = vec![None; table.rows.len()];
    if tested.is_empty() {
        return Ok(out);
    }
    let ps: Vec<f64> = tested.iter().map(|&(_, p)| p).collect();
    let (_, adj) = by_fdr(&ps, alpha)?;
    for (&(k, _), a) in tested.iter().zip(adj) {
        out[k] = Some(a);
    }
    Ok(out)
}

fn pairs_tsv(table: &PairTable, adjusted: &[Option<f64>]) -> String {
    let mut s = String::from(
        "taxon_i\ttaxon_j\ttheta\ttheta_var\tlambda_prime\tp_value\tp_adjusted\tomega\tclean\tskip_reason\n",
    );
    for (row, adj) in table.rows.iter().zip(adjusted) {
        let (a, b) = (&table.labels[row.i], &table.labels[row.j]);
        match &row.fit {
            Some(f) => {
                s.push_str(&format!(
                    "{a}\t{b}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t\n",
                    fmt(f.theta_hat),
                    fmt(f.theta_var),
                    fmt(f.lrt_stat),
                    fmt(f.p_value),
                    fmt(adj.unwrap_or(f64::NAN)),
                    fmt(f.omega),
                    f.status.is_clean(),
                ));
            }
            None => {
                s.push_str(&format!(
                    "{a}\t{b}\tNA\tNA\tNA\tNA\tNA\tNA\tfalse\t{}\n",
                    row.skip_reason.as_deref().unwrap_or("")
                ));
            }
        }
    }
    s
}

fn edges_tsv(labels: &[String], edges: &[zibnet::network::EdgeRecord]) -> String {
    let mut s = String::from("taxon_i\ttaxon_j\ttheta\tp_value\tp_adjusted\tsign\n");
    for e in edges {
        s.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            labels[e.i],
            labels[e.j],
            fmt(e.theta),
            fmt(e.p),
            fmt(e.p_adjusted),
            e.sign
        ));
    }
    s
}

fn adjacency_tsv(labels: &[String], sign: &[Vec<i8>]) -> String {
    let mut s = String::from("taxon");
    for l in labels {
        s.push('\t');
        s.push_str(l);
    }
    s.push('\n');
    for (l, row) in labels.iter().zip(sign) {
        s.push_str(l);
        for v in row {
            s.push_str(&format!("\t{v}"));
        }
        s.push('\n');
    }
    s
}

fn run_network(args: NetworkArgs) -> Result<()> {
    if args.fdr != "by" {
        return Err(Error::Config(format!(
            "unsupported FDR procedure '{}'; only 'by' is available",
            args.fdr
        )));
    }
    ensure_out_dir(&args.out_dir)?;
    let (table, design) = prepare_input(&args.input)?;

    let pair_table = pairwise_analysis(&table.values, &table.taxon_ids, design.as_deref())?;
    let adjusted = adjusted_for_table(&pair_table, args.alpha)?;
    let mut net = build_network(&pair_table, args.alpha)?;
    net.cluster_assignment = hierarchical_cluster(&net, args.clusters)?;
    let stats = graph_stats(&net)?;
    let null_report = if args.null_reps > 0 && net.n_edges() > 0 {
        Some(er_null_comparison(&net, args.null_reps, args.seed)?)
    } else {
        None
    };

    write_text(
        &args.out_dir.join("pairs.tsv"),
        &pairs_tsv(&pair_table, &adjusted),
    )?;
    write_text(
        &args.out_dir.join("edges.tsv"),
        &edges_tsv(&net.labels, &net.edges),
    )?;
    write_text(
        &args.out_dir.join("adjacency.tsv"),
        &adjacency_tsv(&net.labels, &net.edge_sign),
    )?;

    let mut nodes = String::from(
        "taxon\tdegree\tcloseness\tbetweenness\teigenvector\tcluster\n",
    );
    for (k, l) in net.labels.iter().enumerate() {
        nodes.push_str(&format!(
            "{l}\t{}\t{}\t{}\t{}\t{}\n",
            fmt(stats.degree[k]),
            fmt(stats.closeness[k]),
            fmt(stats.betweenness[k]),
            fmt(stats.eigenvector[k]),
            net.cluster_assignment[k]
        ));
    }
    write_text(&args.out_dir.join("node_metrics.tsv"), &nodes)?;

    let n_skipped = pair_table.rows.iter().filter(|r| r.fit.is_none()).count();
    let summary = json!({
        "n_samples": table.sample_ids.len(),
        "n_taxa": table.taxon_ids.len(),
        "n_pairs": pair_table.rows.len(),
        "n_skipped_pairs": n_skipped,
        "alpha": args.alpha,
        "fdr": args.fdr,
        "n_edges": net.n_edges(),
        "clusters": args.clusters,
        "graph": stats,
        "null_model": null_report,
    });
    write_json(&args.out_dir.join("summary.json"), &summary)?;
    write_manifest(
        &args.out_dir.join("manifest.json"),
        "network",
        json!({
            "input": input_manifest(&args.input),
            "alpha": args.alpha,
            "fdr": args.fdr,
            "clusters": args.clusters,
            "null_reps": args.null_reps,
            "seed": args.seed,
            "out_dir": args.out_dir,
        }),
    )?;
    println!(
        "network: {} taxa, {} pairs tested, {} edges at alpha = {}",
        table.taxon_ids.len(),
        pair_table.rows.len() - n_skipped,
        net.n_edges(),
        args.alpha
    );
    Ok(())
}

fn study_tsv(study: &StudyResult) -> String {
    let mut s = String::from("setting\ttheta\tmetric\tvalue\n");
    for c in &study.cells {
        let metrics: [(&str, f64); 12] = [
            ("reps_done", c.reps_done as f64),
            ("reps_failed", c.reps_failed as f64),
            ("mean_theta", c.mean_theta),
            ("median_theta", c.median_theta),
            ("sd_theta", c.sd_theta),
            ("empirical_var", c.empirical_var),
            ("mean_jackknife_var", c.mean_jackknife_var),
            ("reject_lrt", c.reject_lrt),
            ("reject_pearson", c.reject_pearson),
            ("reject_spearman", c.reject_spearman),
            ("reject_kendall", c.reject_kendall),
            ("guard_redraws", c.guard_redraws as f64),
        ];
        for (name, value) in metrics {
            s.push_str(&format!(
                "{}\t{}\t{name}\t{}\n",
                c.setting,
                fmt(c.theta),
                fmt(value)
            ));
        }
    }
    s
}

fn run_simulate(args: SimulateArgs) -> Result<()> {
    ensure_out_dir(&args.out_dir)?;
    let mut config = match args.preset {
        Preset::PaperGrid => SimConfig::paper_grid(args.seed),
        Preset::PaperGridRegression => SimConfig::paper_grid_regression(args.seed),
    };
    if let Some(reps) = args.reps {
        config.reps = reps;
    }
    if let Some(n) = args.n {
        config.n = n;
    }
    let study = match args.study {
        Study::Bias => run_bias_variance_study(&config)?,
        Study::Power => run_power_study(&config)?,
    };
    write_text(&args.out_dir.join("study.tsv"), &study_tsv(&study))?;
    write_json(&args.out_dir.join("study.json"), &study)?;
    write_manifest(
        &args.out_dir.join("manifest.json"),
        "simulate",
        json!({
            "preset": format!("{:?}", args.preset),
            "study": format!("{:?}", args.study),
            "reps": study.reps,
            "n": study.n,
            "alpha": study.alpha,
            "seed": args.seed,
            "out_dir": args.out_dir,
        }),
    )?;
    println!(
        "simulate: {} cells, {} reps each (n = {})",
        study.cells.len(),
        study.reps,
        study.n
    );
    Ok(())
}

fn run_stability(args: StabilityArgs) -> Result<()> {
    ensure_out_dir(&args.out_dir)?;
    let (table, design) = prepare_input(&args.input)?;
    let report = bootstrap_stability(
        &table.values,
        &table.taxon_ids,
        design.as_deref(),
        args.alpha,
        args.boot,
        args.seed,
    )?;

    // selection_frequency is in pair-table order: (i, j) with i < j.
    let t = table.taxon_ids.len();
    let pairs: Vec<(usize, usize)> = (0..t)
        .flat_map(|i| (i + 1..t).map(move |j| (i, j)))
        .collect();
    let mut s = String::from("taxon_i\ttaxon_j\tselection_frequency\n");
    for (&(i, j), f) in pairs.iter().zip(&report.selection_frequency) {
        s.push_str(&format!(
            "{}\t{}\t{}\n",
            table.taxon_ids[i],
            table.taxon_ids[j],
            fmt(*f)
        ));
    }
    write_text(&args.out_dir.join("stability.tsv"), &s)?;
    write_json(&args.out_dir.join("stability_summary.json"), &report)?;
    write_manifest(
        &args.out_dir.join("manifest.json"),
        "stability",
        json!({
            "input": input_manifest(&args.input),
            "boot": args.boot,
            "alpha": args.alpha,
            "seed": args.seed,
            "out_dir": args.out_dir,
        }),
    )?;
    println!(
        "stability: B = {}, mean overlap = {}, mean Dice = {}",
        report.b,
        fmt(report.mean_overlap),
        fmt(report.mean_dice)
    );
    Ok(())
}
