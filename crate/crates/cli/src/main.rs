//! Command-line front end for the transaction-network analytics library.
//!
//! `txrank` wires the pipeline stages together: ingest raw transaction
//! lists into quarterly graphs, compute the two stationary rank vectors,
//! sweep bankruptcy cascades over a threshold grid, reduce the transition
//! matrix onto a node selection, and turn rank tables into plot-ready
//! grids, fits, and cross-slice occurrence tables. Every command is
//! deterministic given its inputs and flags, writes files atomically, and
//! records its effective configuration in the output headers.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use txrank_core::analytics::{count_grid, crisis_grid, integrated_fraction, powerlaw_fit, topk_occurrence};
use txrank_core::contagion::{kappa_grid, kappa_sweep, ContagionOptions};
use txrank_core::google::{cheirank, pagerank, PowerOptions};
use txrank_core::io::{
    is_graph_dump, rank_rows, read_curve, read_graph, read_id_list, read_rank_table, write_atomic,
    write_comments, write_graph, write_id_list, write_rank_table, write_rows, RankRow,
};
use txrank_core::regomax::{reduced_google, NodeSelection, ReducedOptions};
use txrank_core::synth::{write_edge_list, SynthParams};
use txrank_core::{build_graph, read_transactions, slice_by_quarter, BuildOptions, SliceGraph};

#[derive(Parser)]
#[command(name = "txrank", version, about = "Rank, cascade, and reduced-matrix analytics for directed transaction networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Cap the worker threads of parallel stages (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Args)]
struct InputArgs {
    /// Transaction list (CSV/TSV) or a graph dump written by `ingest`
    #[arg(long)]
    input: PathBuf,

    /// Keep only transactions of this calendar year (with --quarter)
    #[arg(long, requires = "quarter")]
    year: Option<i32>,

    /// Keep only transactions of this quarter, 1 to 4 (with --year)
    #[arg(long, requires = "year")]
    quarter: Option<u8>,

    /// Weigh edges by transaction count instead of summed amount
    #[arg(long)]
    count_mode: bool,

    /// Keep self-payments instead of dropping them
    #[arg(long)]
    keep_self_loops: bool,
}

#[derive(Args)]
struct PowerArgs {
    /// Damping factor of the transition matrix
    #[arg(long, default_value_t = 0.85)]
    alpha: f64,

    /// L1 convergence tolerance of the power iteration
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,

    /// Iteration budget of the power iteration
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
}

impl PowerArgs {
    fn options(&self) -> PowerOptions {
        PowerOptions { tol: self.tol, max_iter: self.max_iter }
    }
}

/// Which of the two rank orders a table-consuming command walks.
#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Side {
    /// Incoming-flow rank K
    K,
    /// Outgoing-flow rank K*
    Kstar,
}

impl Side {
    fn name(self) -> &'static str {
        match self {
            Side::K => "K",
            Side::Kstar => "Kstar",
        }
    }

    fn position(self, row: &RankRow) -> u32 {
        match self {
            Side::K => row.k,
            Side::Kstar => row.kstar,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse a transaction list, optionally slice one quarter, store the graph
    Ingest {
        #[command(flatten)]
        input: InputArgs,

        /// Output graph dump
        #[arg(long)]
        out: PathBuf,
    },

    /// Compute both stationary rank vectors and write the rank table
    Rank {
        #[command(flatten)]
        input: InputArgs,

        #[command(flatten)]
        power: PowerArgs,

        /// Output rank table (TSV)
        #[arg(long)]
        out: PathBuf,
    },

    /// Sweep bankruptcy thresholds and record every cascade
    Contagion {
        #[command(flatten)]
        input: InputArgs,

        #[command(flatten)]
        power: PowerArgs,

        /// Smallest bankruptcy threshold
        #[arg(long, default_value_t = 0.0)]
        kappa_min: f64,

        /// Largest bankruptcy threshold
        #[arg(long, default_value_t = 1.0)]
        kappa_max: f64,

        /// Threshold grid spacing
        #[arg(long, default_value_t = 0.01)]
        kappa_step: f64,

        /// Round budget per cascade
        #[arg(long, default_value_t = 10)]
        tau_max: usize,

        /// Output directory for sweep.tsv and the per-threshold files
        #[arg(long)]
        out: PathBuf,
    },

    /// Reduce the transition matrix onto a node selection
    Regomax {
        #[command(flatten)]
        input: InputArgs,

        #[command(flatten)]
        power: PowerArgs,

        /// Selection size when the top of the incoming-flow ranking is used
        #[arg(long, default_value_t = 20)]
        nr: usize,

        /// Comma-separated node ids to select instead of the top ranking
        #[arg(long, conflicts_with = "select_file")]
        select: Option<String>,

        /// File with one node id per line to select instead of the top ranking
        #[arg(long)]
        select_file: Option<PathBuf>,

        /// L1 tolerance of the complement eigenpair iteration
        #[arg(long, default_value_t = 1e-12)]
        eig_tol: f64,

        /// Iteration budget of the complement eigenpair
        #[arg(long, default_value_t = ReducedOptions::default().eig_max_iter)]
        eig_max_iter: usize,

        /// Relative L1 tolerance of each column's deflated series
        #[arg(long, default_value_t = 1e-8)]
        series_tol: f64,

        /// Term budget of each column's deflated series
        #[arg(long, default_value_t = 10_000)]
        series_max_len: usize,

        /// Output directory for the matrix and weight tables
        #[arg(long)]
        out: PathBuf,
    },

    /// Bin a rank table into a density or bankruptcy grid over the rank plane
    Density {
        /// Rank table written by `rank`
        #[arg(long)]
        ranks: PathBuf,

        /// Bankrupt id list; given one, cells hold the signed bankrupt
        /// density instead of node counts
        #[arg(long)]
        bankrupt: Option<PathBuf>,

        /// Cells per axis
        #[arg(long, default_value_t = 200)]
        cells: usize,

        /// Output grid (TSV)
        #[arg(long)]
        out: PathBuf,
    },

    /// Fit W(K) = K^beta / mu over a rank window
    Fit {
        /// Two-column curve file (K, W)
        #[arg(long, conflicts_with_all = ["ranks", "bankrupt"])]
        curve: Option<PathBuf>,

        /// Rank table; with --bankrupt the fitted curve is the integrated
        /// bankrupt fraction along the chosen rank order
        #[arg(long, requires = "bankrupt")]
        ranks: Option<PathBuf>,

        /// Bankrupt id list matching --ranks
        #[arg(long, requires = "ranks")]
        bankrupt: Option<PathBuf>,

        /// Rank order to integrate along when fitting from a rank table
        #[arg(long, value_enum, default_value_t = Side::K)]
        side: Side,

        /// Smallest rank in the fit window
        #[arg(long, default_value_t = 10.0)]
        kmin: f64,

        /// Largest rank in the fit window
        #[arg(long, default_value_t = 1e5)]
        kmax: f64,

        /// Optional TSV copy of the fit summary
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Cross-tabulate recurring top-rank nodes across several tables
    Occurrence {
        /// Rank tables, labeled by file stem in the output
        #[arg(required = true)]
        files: Vec<PathBuf>,

        /// Top list size taken from each table
        #[arg(long, default_value_t = 20)]
        top: usize,

        /// Rank order that defines each table's top list
        #[arg(long, value_enum, default_value_t = Side::K)]
        side: Side,

        /// Output table (TSV)
        #[arg(long)]
        out: PathBuf,
    },

    /// Generate a reproducible synthetic transaction list
    Synth {
        /// Node count
        #[arg(long, default_value_t = SynthParams::default().nodes)]
        nodes: usize,

        /// Target mean out-degree
        #[arg(long, default_value_t = SynthParams::default().edges_per_node)]
        edges_per_node: f64,

        /// Tail exponent of the out-degree distribution (> 2)
        #[arg(long, default_value_t = SynthParams::default().degree_exponent)]
        degree_exponent: f64,

        /// Zipf exponent of destination attractiveness
        #[arg(long, default_value_t = SynthParams::default().attract_exponent)]
        attract_exponent: f64,

        /// Mean of log amount
        #[arg(long, default_value_t = SynthParams::default().amount_log_mean)]
        amount_log_mean: f64,

        /// Standard deviation of log amount
        #[arg(long, default_value_t = SynthParams::default().amount_log_sigma)]
        amount_log_sigma: f64,

        /// Calendar year of the timestamps
        #[arg(long, default_value_t = SynthParams::default().year)]
        year: i32,

        /// Quarter of the timestamps, 1 to 4
        #[arg(long, default_value_t = SynthParams::default().quarter)]
        quarter: u8,

        /// RNG seed; equal seeds give byte-identical files
        #[arg(long, default_value_t = SynthParams::default().seed)]
        seed: u64,

        /// Output transaction list (CSV)
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(err) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("txrank: setting up {threads} worker threads: {err}");
            return ExitCode::FAILURE;
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            // A reader that stopped listening (`txrank ... | head`) is not
            // a failure; the output files are already on disk by then.
            if broken_pipe(&err) {
                return ExitCode::SUCCESS;
            }
            eprintln!("txrank: {err:#}");
            // Scripts can tell a missing input from a computation failure.
            if missing_input(&err) {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn broken_pipe(err: &anyhow::Error) -> bool {
    err.chain().any(|cause| {
        matches!(
            cause.downcast_ref::<std::io::Error>(),
            Some(io) if io.kind() == std::io::ErrorKind::BrokenPipe
        )
    })
}

/// Prints one line to stdout, surfacing errors instead of panicking so a
/// closed pipe unwinds through the normal error path.
fn emit(line: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes())?;
    out.write_all(b"\n")?;
    Ok(())
}

fn missing_input(err: &anyhow::Error) -> bool {
    let not_found =
        |io: &std::io::Error| io.kind() == std::io::ErrorKind::NotFound;
    err.chain().any(|cause| {
        if let Some(io) = cause.downcast_ref::<std::io::Error>() {
            return not_found(io);
        }
        matches!(
            cause.downcast_ref::<txrank_core::Error>(),
            Some(txrank_core::Error::Io(io)) if not_found(io)
        )
    })
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Ingest { input, out } => cmd_ingest(&input, &out),
        Command::Rank { input, power, out } => cmd_rank(&input, &power, &out),
        Command::Contagion { input, power, kappa_min, kappa_max, kappa_step, tau_max, out } => {
            cmd_contagion(&input, &power, kappa_min, kappa_max, kappa_step, tau_max, &out)
        }
        Command::Regomax {
            input,
            power,
            nr,
            select,
            select_file,
            eig_tol,
            eig_max_iter,
            series_tol,
            series_max_len,
            out,
        } => {
            let opts = ReducedOptions {
                alpha: power.alpha,
                eig_tol,
                eig_max_iter,
                series_tol,
                series_max_len,
            };
            cmd_regomax(&input, &power, nr, select.as_deref(), select_file.as_deref(), &opts, &out)
        }
        Command::Density { ranks, bankrupt, cells, out } => {
            cmd_density(&ranks, bankrupt.as_deref(), cells, &out)
        }
        Command::Fit { curve, ranks, bankrupt, side, kmin, kmax, out } => cmd_fit(
            curve.as_deref(),
            ranks.as_deref(),
            bankrupt.as_deref(),
            side,
            kmin,
            kmax,
            out.as_deref(),
        ),
        Command::Occurrence { files, top, side, out } => cmd_occurrence(&files, top, side, &out),
        Command::Synth {
            nodes,
            edges_per_node,
            degree_exponent,
            attract_exponent,
            amount_log_mean,
            amount_log_sigma,
            year,
            quarter,
            seed,
            out,
        } => {
            let params = SynthParams {
                nodes,
                edges_per_node,
                degree_exponent,
                attract_exponent,
                amount_log_mean,
                amount_log_sigma,
                year,
                quarter,
                seed,
            };
            cmd_synth(&params, &out)
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(file))
}

/// Loads the input as a graph: dumps are restored verbatim, transaction
/// lists are parsed, optionally sliced to one quarter, and aggregated.
fn load_graph(args: &InputArgs) -> Result<SliceGraph> {
    let path = &args.input;
    if is_graph_dump(path).with_context(|| format!("cannot open {}", path.display()))? {
        if args.year.is_some() || args.count_mode || args.keep_self_loops {
            bail!(
                "{} is a graph dump; slicing and build flags only apply to transaction lists",
                path.display()
            );
        }
        return read_graph(open(path)?).with_context(|| format!("reading {}", path.display()));
    }
    let mut records =
        read_transactions(open(path)?).with_context(|| format!("parsing {}", path.display()))?;
    if let (Some(year), Some(quarter)) = (args.year, args.quarter) {
        records = slice_by_quarter(records, year, quarter)?;
    }
    let options =
        BuildOptions { drop_self_loops: !args.keep_self_loops, count_mode: args.count_mode };
    Ok(build_graph(&records, &options)?)
}

fn input_comments(args: &InputArgs) -> Vec<String> {
    let slice = match (args.year, args.quarter) {
        (Some(year), Some(quarter)) => format!("{year}Q{quarter}"),
        _ => "all".to_string(),
    };
    vec![
        format!("input={}", args.input.display()),
        format!(
            "slice={slice} count_mode={} keep_self_loops={}",
            args.count_mode, args.keep_self_loops
        ),
    ]
}

fn power_comment(power: &PowerArgs) -> String {
    format!("alpha={} tol={} max_iter={}", power.alpha, power.tol, power.max_iter)
}

fn cmd_ingest(input: &InputArgs, out: &Path) -> Result<()> {
    let graph = load_graph(input)?;
    let comments = input_comments(input);
    write_atomic(out, |w| write_graph(w, &comments, &graph))?;
    emit(&format!(
        "{} nodes, {} edges -> {}",
        graph.node_count(),
        graph.edge_count(),
        out.display()
    ))?;
    Ok(())
}

fn cmd_rank(input: &InputArgs, power: &PowerArgs, out: &Path) -> Result<()> {
    let graph = load_graph(input)?;
    let opts = power.options();
    let pr = pagerank(&graph, power.alpha, &opts)?;
    let cr = cheirank(&graph, power.alpha, &opts)?;
    let rows = rank_rows(&graph.ids, &pr, &cr);

    let mut comments = input_comments(input);
    comments.push(power_comment(power));
    comments.push(format!(
        "pagerank_iterations={} cheirank_iterations={} converged={}",
        pr.iterations,
        cr.iterations,
        pr.converged && cr.converged
    ));
    write_atomic(out, |w| write_rank_table(w, &comments, &rows))?;

    let summary = serde_json::json!({
        "alpha": power.alpha,
        "tol": power.tol,
        "max_iter": power.max_iter,
        "nodes": graph.node_count(),
        "edges": graph.edge_count(),
        "pagerank_iterations": pr.iterations,
        "cheirank_iterations": cr.iterations,
        "converged": pr.converged && cr.converged,
        "output": out.display().to_string(),
    });
    emit(&serde_json::to_string_pretty(&summary)?)?;
    Ok(())
}

fn cmd_contagion(
    input: &InputArgs,
    power: &PowerArgs,
    kappa_min: f64,
    kappa_max: f64,
    kappa_step: f64,
    tau_max: usize,
    out: &Path,
) -> Result<()> {
    let graph = load_graph(input)?;
    let kappas = kappa_grid(kappa_min, kappa_max, kappa_step)?;
    let opts =
        ContagionOptions { alpha: power.alpha, power: power.options(), tau_max };
    let results = kappa_sweep(&graph, &kappas, &opts)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;

    let mut comments = input_comments(input);
    comments.push(power_comment(power));
    comments.push(format!(
        "kappa_min={kappa_min} kappa_max={kappa_max} kappa_step={kappa_step} tau_max={tau_max}"
    ));

    write_atomic(&out.join("sweep.tsv"), |w| {
        write_comments(w, &comments)?;
        writeln!(w, "kappa\tfraction\tbankrupt\tfixed_point\tconverged")?;
        for r in &results {
            let fixed = r.fixed_point.map_or("-".to_string(), |t| t.to_string());
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}",
                r.kappa,
                r.fraction_at(r.rounds.len()),
                r.bankrupt_count(),
                fixed,
                r.converged
            )?;
        }
        Ok(())
    })?;

    for r in &results {
        // Ids in bankruptcy order: round by round, ascending inside a round.
        let ids = r
            .rounds
            .iter()
            .flatten()
            .map(|&u| graph.ids[u as usize].as_str());
        let mut per_kappa = comments.clone();
        per_kappa.push(format!(
            "kappa={} bankrupt={} fixed_point={}",
            r.kappa,
            r.bankrupt_count(),
            r.fixed_point.map_or("-".to_string(), |t| t.to_string())
        ));
        write_atomic(&out.join(format!("bankrupt_k{}.txt", r.kappa)), |w| {
            write_id_list(w, &per_kappa, ids)
        })?;
        write_atomic(&out.join(format!("cascade_k{}.tsv", r.kappa)), |w| {
            write_comments(w, &per_kappa)?;
            writeln!(w, "tau\tnew\ttotal\tfraction")?;
            for tau in 1..=r.rounds.len() {
                writeln!(
                    w,
                    "{tau}\t{}\t{}\t{}",
                    r.rounds[tau - 1].len(),
                    r.count_at(tau),
                    r.fraction_at(tau)
                )?;
            }
            Ok(())
        })?;
    }
    emit(&format!(
        "swept {} thresholds over {} nodes -> {}",
        results.len(),
        graph.node_count(),
        out.display()
    ))?;
    Ok(())
}

/// Maps external ids to node indices in one pass over the graph's id table.
fn resolve_ids(graph: &SliceGraph, ids: &[String]) -> Result<Vec<u32>> {
    let wanted: HashMap<&str, usize> =
        ids.iter().enumerate().map(|(slot, id)| (id.as_str(), slot)).collect();
    if wanted.len() != ids.len() {
        bail!("the selection lists an id twice");
    }
    let mut found: Vec<Option<u32>> = vec![None; ids.len()];
    for (u, id) in graph.ids.iter().enumerate() {
        if let Some(&slot) = wanted.get(id.as_str()) {
            found[slot] = Some(u as u32);
        }
    }
    found
        .into_iter()
        .zip(ids)
        .map(|(hit, id)| hit.ok_or_else(|| anyhow!("node id {id:?} is not in the graph")))
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn cmd_regomax(
    input: &InputArgs,
    power: &PowerArgs,
    nr: usize,
    select: Option<&str>,
    select_file: Option<&Path>,
    opts: &ReducedOptions,
    out: &Path,
) -> Result<()> {
    let graph = load_graph(input)?;

    let requested: Option<Vec<String>> = if let Some(list) = select {
        Some(
            list.split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect(),
        )
    } else if let Some(path) = select_file {
        Some(read_id_list(open(path)?).with_context(|| format!("reading {}", path.display()))?)
    } else {
        None
    };

    let (indices, picked) = match requested {
        Some(ids) => {
            let n = ids.len();
            (resolve_ids(&graph, &ids)?, format!("selection=explicit nr={n}"))
        }
        None => {
            let take = nr.min(graph.node_count());
            let pr = pagerank(&graph, power.alpha, &power.options())?;
            (pr.order[..take].to_vec(), format!("selection=top-ranked nr={take}"))
        }
    };
    let selection = NodeSelection::new(indices, graph.node_count())?;
    let reduced = reduced_google(&graph, &selection, opts)?;
    let weights = reduced.weights();
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;

    let mut comments = input_comments(input);
    comments.push(picked);
    comments.push(format!(
        "alpha={} eig_tol={} eig_max_iter={} series_tol={} series_max_len={}",
        opts.alpha, opts.eig_tol, opts.eig_max_iter, opts.series_tol, opts.series_max_len
    ));
    comments.push(format!(
        "lambda_c={} eig_iterations={} series_terms_max={} converged={}",
        reduced.lambda_c, reduced.eig_iterations, reduced.series_terms_max, reduced.converged
    ));
    comments.push("rows and columns follow selection.txt order".to_string());

    let sel_ids: Vec<&str> =
        reduced.selection.iter().map(|&u| graph.ids[u as usize].as_str()).collect();
    write_atomic(&out.join("selection.txt"), |w| {
        write_id_list(w, &comments, sel_ids.iter().copied())
    })?;
    for (name, data) in [
        ("gr.tsv", &reduced.g_r),
        ("grr.tsv", &reduced.g_rr),
        ("gpr.tsv", &reduced.g_pr),
        ("gqr.tsv", &reduced.g_qr),
    ] {
        write_atomic(&out.join(name), |w| write_rows(w, &comments, reduced.nr, data))?;
    }
    write_atomic(&out.join("weights.tsv"), |w| {
        write_comments(w, &comments)?;
        writeln!(w, "component\tweight")?;
        writeln!(w, "rr\t{}", weights.rr)?;
        writeln!(w, "pr\t{}", weights.pr)?;
        writeln!(w, "qr\t{}", weights.qr)?;
        writeln!(w, "qr_diag\t{}", weights.qrd)?;
        writeln!(w, "qr_nondiag\t{}", weights.qrnd)?;
        writeln!(w, "total\t{}", weights.total)?;
        Ok(())
    })?;

    let summary = serde_json::json!({
        "alpha": opts.alpha,
        "nr": reduced.nr,
        "lambda_c": reduced.lambda_c,
        "eig_iterations": reduced.eig_iterations,
        "series_terms_max": reduced.series_terms_max,
        "converged": reduced.converged,
        "weights": {
            "rr": weights.rr,
            "pr": weights.pr,
            "qr": weights.qr,
            "qr_diag": weights.qrd,
            "qr_nondiag": weights.qrnd,
            "total": weights.total,
        },
        "output": out.display().to_string(),
    });
    emit(&serde_json::to_string_pretty(&summary)?)?;
    Ok(())
}

/// Flags each rank row whose id appears in the bankrupt list.
fn bankrupt_flags(rows: &[RankRow], ids: &[String]) -> Result<Vec<bool>> {
    let index: HashMap<&str, usize> =
        rows.iter().enumerate().map(|(i, row)| (row.id.as_str(), i)).collect();
    let mut flags = vec![false; rows.len()];
    for id in ids {
        let Some(&i) = index.get(id.as_str()) else {
            bail!("bankrupt id {id:?} does not appear in the rank table");
        };
        flags[i] = true;
    }
    Ok(flags)
}

fn read_full_rank_table(path: &Path) -> Result<Vec<RankRow>> {
    let rows =
        read_rank_table(open(path)?).with_context(|| format!("reading {}", path.display()))?;
    if rows.is_empty() {
        bail!("{} holds no rank rows", path.display());
    }
    let n = rows.len();
    for row in &rows {
        if row.k as usize > n || row.kstar as usize > n {
            bail!(
                "{} looks like a partial table: rank position {} exceeds its {} rows",
                path.display(),
                row.k.max(row.kstar),
                n
            );
        }
    }
    Ok(rows)
}

fn cmd_density(ranks: &Path, bankrupt: Option<&Path>, cells: usize, out: &Path) -> Result<()> {
    if cells == 0 {
        bail!("--cells must be positive");
    }
    let rows = read_full_rank_table(ranks)?;
    let k_pos: Vec<u32> = rows.iter().map(|r| r.k).collect();
    let kstar_pos: Vec<u32> = rows.iter().map(|r| r.kstar).collect();

    let mut comments = vec![format!("ranks={}", ranks.display())];
    let grid = match bankrupt {
        Some(path) => {
            let ids = read_id_list(open(path)?)
                .with_context(|| format!("reading {}", path.display()))?;
            let flags = bankrupt_flags(&rows, &ids)?;
            comments.push(format!("bankrupt={}", path.display()));
            comments.push("cell=(bankrupt - solvent) / total, NaN where empty".to_string());
            crisis_grid(&k_pos, &kstar_pos, &flags, cells)
        }
        None => {
            comments.push("cell=node count".to_string());
            count_grid(&k_pos, &kstar_pos, cells)
        }
    };
    comments.push(format!("cells={cells} nodes={}", grid.n));
    comments.push("column x bins log K, row y bins log Kstar".to_string());
    write_atomic(out, |w| write_rows(w, &comments, cells, &grid.data))?;
    emit(&format!("{cells}x{cells} grid over {} nodes -> {}", grid.n, out.display()))?;
    Ok(())
}

fn cmd_fit(
    curve: Option<&Path>,
    ranks: Option<&Path>,
    bankrupt: Option<&Path>,
    side: Side,
    kmin: f64,
    kmax: f64,
    out: Option<&Path>,
) -> Result<()> {
    let (points, mut comments) = if let Some(path) = curve {
        let points =
            read_curve(open(path)?).with_context(|| format!("reading {}", path.display()))?;
        (points, vec![format!("curve={}", path.display())])
    } else if let (Some(rank_path), Some(bankrupt_path)) = (ranks, bankrupt) {
        let mut rows = read_full_rank_table(rank_path)?;
        let ids = read_id_list(open(bankrupt_path)?)
            .with_context(|| format!("reading {}", bankrupt_path.display()))?;
        rows.sort_by_key(|row| side.position(row));
        let flags = bankrupt_flags(&rows, &ids)?;
        // Rows are already in rank order, so the walk order is the identity.
        let order: Vec<u32> = (0..rows.len() as u32).collect();
        let fraction = integrated_fraction(&order, &flags);
        let points: Vec<(f64, f64)> =
            fraction.iter().enumerate().map(|(i, &w)| (i as f64 + 1.0, w)).collect();
        (
            points,
            vec![
                format!("ranks={}", rank_path.display()),
                format!("bankrupt={}", bankrupt_path.display()),
                format!("side={}", side.name()),
            ],
        )
    } else {
        bail!("pass either --curve or --ranks together with --bankrupt");
    };

    let fit = powerlaw_fit(&points, kmin, kmax)?;
    comments.push(format!("kmin={kmin} kmax={kmax}"));

    if let Some(path) = out {
        write_atomic(path, |w| {
            write_comments(w, &comments)?;
            writeln!(w, "beta\t{}", fit.beta)?;
            writeln!(w, "beta_stderr\t{}", fit.beta_stderr)?;
            writeln!(w, "mu\t{}", fit.mu)?;
            writeln!(w, "mu_stderr\t{}", fit.mu_stderr)?;
            writeln!(w, "points_used\t{}", fit.points_used)?;
            Ok(())
        })?;
    }
    let summary = serde_json::json!({
        "beta": fit.beta,
        "beta_stderr": fit.beta_stderr,
        "mu": fit.mu,
        "mu_stderr": fit.mu_stderr,
        "points_used": fit.points_used,
        "kmin": kmin,
        "kmax": kmax,
    });
    emit(&serde_json::to_string_pretty(&summary)?)?;
    Ok(())
}

fn cmd_occurrence(files: &[PathBuf], top: usize, side: Side, out: &Path) -> Result<()> {
    if top == 0 {
        bail!("--top must be positive");
    }
    let mut lists: Vec<Vec<String>> = Vec::with_capacity(files.len());
    let mut labels: Vec<String> = Vec::with_capacity(files.len());
    for path in files {
        let mut rows =
            read_rank_table(open(path)?).with_context(|| format!("reading {}", path.display()))?;
        rows.sort_by_key(|row| side.position(row));
        lists.push(rows.into_iter().map(|row| row.id).collect());
        labels.push(
            path.file_stem()
                .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned()),
        );
    }
    let table = topk_occurrence(&lists, top);

    let comments = vec![
        format!("files={}", labels.join(",")),
        format!("top={top} side={}", side.name()),
    ];
    write_atomic(out, |w| {
        write_comments(w, &comments)?;
        writeln!(w, "node\tappearances\tbest\t{}", labels.join("\t"))?;
        for row in &table {
            write!(w, "{}\t{}\t{}", row.id, row.appearances, row.best_rank)?;
            for rank in &row.ranks {
                match rank {
                    Some(r) => write!(w, "\t{r}")?,
                    None => write!(w, "\t-")?,
                }
            }
            writeln!(w)?;
        }
        Ok(())
    })?;
    emit(&format!("{} recurring nodes -> {}", table.len(), out.display()))?;
    Ok(())
}

fn cmd_synth(params: &SynthParams, out: &Path) -> Result<()> {
    let count = write_atomic(out, |w| write_edge_list(params, w))?;
    emit(&format!("{count} transactions over {} nodes -> {}", params.nodes, out.display()))?;
    Ok(())
}
