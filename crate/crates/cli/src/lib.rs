//! `knnidx`: build, query, update, verify and benchmark kNN bundles.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use knn_index::bn_graph::{build_bn_graph, BuildStats};
use knn_index::builder::{build_index_bidirectional, build_index_bottom_up, compute_partial_knn};
use knn_index::oracle::{verify_bn_graph, verify_index, VerificationReport};
use knn_index::persistence::{index_bytes, predicted_bundle_size};
use knn_index::{
    generate_grid, load_bundle, load_objects, parse_dimacs_gr, sample_objects, save_bundle, Algorithm, Bundle,
    Execution, KnnEntry, ObjectSet, QueryEngine, RoadNetwork, UpdateKind, VertexId, WeightRange,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Parser)]
#[command(name = "knnidx", version, about = "Exact k-nearest-object index for road networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build an index from a DIMACS graph and save it as a bundle.
    Build(BuildArgs),
    /// Time queries against a bundle.
    Query(QueryArgs),
    /// Apply a script of object insertions and deletions to a bundle.
    Update(UpdateArgs),
    /// Check a bundle against Dijkstra on the original graph.
    Verify(VerifyArgs),
    /// Run the parameter grid and the grid-size scaling experiment on
    /// generated grids, writing one CSV per experiment.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Road network in DIMACS .gr format.
    #[arg(long, value_name = "PATH.gr")]
    pub graph: PathBuf,
    /// Candidate objects, one 1-based vertex id per line. Sampled at
    /// `--density` when omitted.
    #[arg(long, value_name = "PATH", conflicts_with = "density")]
    pub objects: Option<PathBuf>,
    /// Fraction of vertices sampled as objects [default: 0.005]
    #[arg(long)]
    pub density: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub k: usize,
    /// bottomup or bidirectional.
    #[arg(long, default_value = "bidirectional")]
    pub algorithm: Algorithm,
    /// Output bundle.
    #[arg(long, value_name = "PATH")]
    pub bundle: PathBuf,
    /// Append one row of build statistics to this CSV.
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[arg(long, value_name = "PATH")]
    pub bundle: PathBuf,
    /// Query vertices, one 1-based id per line. Random otherwise.
    #[arg(long, value_name = "PATH")]
    pub queries: Option<PathBuf>,
    /// Number of random queries.
    #[arg(long, default_value_t = 10_000)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Neighbours per query; defaults to the bundle's k.
    #[arg(long)]
    pub k: Option<usize>,
    /// Timed passes over the query set.
    #[arg(long, default_value_t = 1)]
    pub repeat: usize,
    /// Untimed passes before timing.
    #[arg(long, default_value_t = 1)]
    pub warmup: usize,
    /// Concurrent readers.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Print each answer.
    #[arg(long)]
    pub show: bool,
    /// Append a row of latency statistics to this CSV.
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct UpdateArgs {
    #[arg(long, value_name = "PATH")]
    pub bundle: PathBuf,
    /// Lines of `+id` (insert) or `-id` (delete), 1-based; `#` comments.
    #[arg(long, value_name = "PATH")]
    pub script: PathBuf,
    /// Write the resulting object set here.
    #[arg(long, value_name = "PATH")]
    pub objects: Option<PathBuf>,
    /// Save the updated bundle here instead of overwriting `--bundle`.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    /// Recompute the partial lists before saving.
    #[arg(long)]
    pub refresh: bool,
    /// Write one row per operation to this CSV.
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_name = "PATH")]
    pub bundle: PathBuf,
    #[arg(long, value_name = "PATH.gr")]
    pub graph: PathBuf,
    /// Expected object set; must equal the bundle's.
    #[arg(long, value_name = "PATH")]
    pub objects: Option<PathBuf>,
    /// Random sources for the pair-distance check on graphs above 200 vertices.
    #[arg(long, default_value_t = 32)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Run on one thread.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Output directory for `params.csv` and `scale.csv`.
    #[arg(long, value_name = "DIR")]
    pub csv: PathBuf,
    /// Side of the square base grid.
    #[arg(long, default_value_t = 100)]
    pub side: usize,
    /// Scaling runs over the central i x i blocks of a 10 x 10 partition of
    /// the base grid, for i = 1..=cells.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..=10))]
    pub cells: u32,
    #[arg(long, value_delimiter = ',', default_value = "10,20,30,40,60,80,100")]
    pub k: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.1,0.05,0.01,0.005,0.001,0.0005,0.0001")]
    pub density: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random queries per configuration.
    #[arg(long, default_value_t = 10_000)]
    pub queries: usize,
    /// Random updates (alternating insert/delete) per configuration.
    #[arg(long, default_value_t = 100)]
    pub updates: usize,
    /// Also time the bottom-up builder (slow on large grids).
    #[arg(long)]
    pub bottomup: bool,
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Verification,
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

/// Parses `args` and runs the command. Exit codes: 0 success, 1 usage or
/// I/O error, 2 verification failure.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Build(a) => cmd_build(&a),
        Command::Query(a) => cmd_query(&a),
        Command::Update(a) => cmd_update(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Sweep(a) => cmd_sweep(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(2),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn read_graph(path: &Path) -> Result<RoadNetwork, Failure> {
    let bytes = fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_dimacs_gr(&bytes).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn read_bundle(path: &Path) -> Result<Bundle, Failure> {
    load_bundle(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Appends `row` to a CSV, writing `header` first if the file is new or empty.
fn append_csv(path: &Path, header: &str, row: &str) -> Result<(), Failure> {
    let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let mut f = fs::OpenOptions::new().create(true).append(true).open(path)?;
    if fresh {
        writeln!(f, "{header}")?;
    }
    writeln!(f, "{row}")?;
    Ok(())
}

/// Timed construction of every bundle part.
struct Built {
    bundle: Bundle,
    bn_ms: f64,
    index_ms: f64,
}

fn build_timed(graph: &RoadNetwork, objects: ObjectSet, k: usize, algorithm: Algorithm) -> Result<Built, Failure> {
    let t = Instant::now();
    let (order, bn) = build_bn_graph(graph);
    let bn_ms = ms(t);
    let t = Instant::now();
    let partial = compute_partial_knn(&bn, &order, &objects, k)?;
    let mut stats = *bn.stats();
    let index = match algorithm {
        Algorithm::BottomUp => build_index_bottom_up(&bn, &order, &partial, &objects, k, &mut stats)?,
        Algorithm::Bidirectional => build_index_bidirectional(&bn, &order, &partial, &objects, k, &mut stats)?,
    };
    let index_ms = ms(t);
    let bundle = Bundle {
        graph_fingerprint: graph.fingerprint(),
        num_edges: graph.num_edges() as u64,
        algorithm,
        order,
        bn: bn.with_stats(stats),
        partial,
        index,
        objects,
        stats,
        partial_stale: false,
    };
    Ok(Built { bundle, bn_ms, index_ms })
}

fn fmt_eta(s: &BuildStats) -> String {
    s.eta.map(|e| e.to_string()).unwrap_or_default()
}

fn cmd_build(a: &BuildArgs) -> CmdResult {
    let graph = read_graph(&a.graph)?;
    let objects = match &a.objects {
        Some(p) => load_objects(&read_text(p)?, graph.num_vertices())
            .map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?,
        None => sample_objects(&graph, a.density.unwrap_or(0.005), a.seed)?,
    };
    let built = build_timed(&graph, objects, a.k, a.algorithm)?;
    let b = &built.bundle;
    save_bundle(&a.bundle, b)?;
    let s = &b.stats;
    println!("graph: n={} m={} objects={} density={:.6}", graph.num_vertices(), graph.num_edges(), b.objects.len(), b.objects.density());
    println!("algorithm: {} k={}", a.algorithm, a.k);
    println!(
        "build time: {:.1} ms (BN-Graph {:.1} ms, index {:.1} ms)",
        built.bn_ms + built.index_ms,
        built.bn_ms,
        built.index_ms
    );
    println!(
        "rho={} tau={} tau'={} eta={}",
        s.rho,
        s.tau,
        s.tau_prime,
        s.eta.map(|e| e.to_string()).unwrap_or_else(|| "n/a".into())
    );
    println!("BN-Graph edges: {} (inserted {}, removed {})", b.bn.num_edges(), s.edges_inserted, s.edges_removed);
    println!("sssp invocations: {}", s.sssp_invocations);
    println!("max candidate set: {}", s.max_candidate_set);
    println!("index bytes: {}", index_bytes(&b.index));
    println!("bundle bytes: {}", predicted_bundle_size(b));
    if let Some(csv) = &a.csv {
        append_csv(
            csv,
            "n,m,k,density,objects,algorithm,bn_ms,index_ms,rho,tau,tau_prime,eta,sssp_invocations,max_candidate_set,index_bytes,bundle_bytes",
            &format!(
                "{},{},{},{},{},{},{:.3},{:.3},{},{},{},{},{},{},{},{}",
                graph.num_vertices(),
                graph.num_edges(),
                a.k,
                b.objects.density(),
                b.objects.len(),
                a.algorithm,
                built.bn_ms,
                built.index_ms,
                s.rho,
                s.tau,
                s.tau_prime,
                fmt_eta(s),
                s.sssp_invocations,
                s.max_candidate_set,
                index_bytes(&b.index),
                predicted_bundle_size(b)
            ),
        )?;
    }
    Ok(())
}

/// Latency summary in nanoseconds.
#[derive(Debug, Clone, Copy, Default)]
pub struct Latency {
    pub mean: f64,
    pub p50: u64,
    pub p99: u64,
}

impl Latency {
    pub fn from_samples(samples: &mut [u64]) -> Self {
        if samples.is_empty() {
            return Latency::default();
        }
        samples.sort_unstable();
        let pick = |q: f64| samples[((samples.len() - 1) as f64 * q).round() as usize];
        Latency {
            mean: samples.iter().sum::<u64>() as f64 / samples.len() as f64,
            p50: pick(0.5),
            p99: pick(0.99),
        }
    }
}

fn random_vertices(n: usize, count: usize, seed: u64) -> Vec<VertexId> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.gen_range(0..n as VertexId)).collect()
}

/// Runs every query in `queries` once per pass, `warmup` untimed passes
/// first, spreading queries over `threads` readers. Returns per-query
/// latencies and the entries touched during timed passes.
fn time_queries(
    engine: &QueryEngine<'_>,
    queries: &[VertexId],
    k: usize,
    warmup: usize,
    repeat: usize,
    threads: usize,
) -> Result<(Vec<u64>, u64), Failure> {
    let threads = threads.max(1);
    let chunk = queries.len().div_ceil(threads).max(1);
    let pass = |timed: bool| -> Result<Vec<u64>, Failure> {
        std::thread::scope(|s| {
            let workers: Vec<_> = queries
                .chunks(chunk)
                .map(|part| {
                    s.spawn(move || {
                        let mut out = Vec::with_capacity(k);
                        let mut lat = Vec::with_capacity(if timed { part.len() } else { 0 });
                        for &u in part {
                            let t = Instant::now();
                            engine.knn_into(u, k, &mut out)?;
                            std::hint::black_box(&out);
                            if timed {
                                lat.push(t.elapsed().as_nanos() as u64);
                            }
                        }
                        Ok::<_, knn_index::Error>(lat)
                    })
                })
                .collect();
            let mut all = Vec::new();
            for w in workers {
                all.extend(w.join().expect("query thread panicked")?);
            }
            Ok(all)
        })
    };
    for _ in 0..warmup {
        pass(false)?;
    }
    engine.reset_touches();
    let mut samples = Vec::with_capacity(queries.len() * repeat);
    for _ in 0..repeat {
        samples.extend(pass(true)?);
    }
    Ok((samples, engine.touches()))
}

fn show_list(list: &[KnnEntry]) -> String {
    let mut s = String::new();
    for (i, e) in list.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{}@{}", e.object + 1, { e.distance });
    }
    s
}

fn parse_ids(text: &str, n: usize) -> Result<Vec<VertexId>, Failure> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let id: u64 = body.parse().map_err(|_| format!("line {}: expected a vertex id, got `{body}`", i + 1))?;
        if id == 0 || id > n as u64 {
            return Err(Failure::Usage(format!("line {}: vertex id {id} out of range 1..={n}", i + 1)));
        }
        out.push((id - 1) as VertexId);
    }
    Ok(out)
}

fn cmd_query(a: &QueryArgs) -> CmdResult {
    let bundle = read_bundle(&a.bundle)?;
    let n = bundle.num_vertices();
    let k = a.k.unwrap_or(bundle.k());
    let queries = match &a.queries {
        Some(p) => parse_ids(&read_text(p)?, n)?,
        None => random_vertices(n, a.count, a.seed),
    };
    if queries.is_empty() {
        return Err(Failure::Usage("no queries".into()));
    }
    let engine = QueryEngine::new(&bundle.index);
    if a.show {
        for &u in &queries {
            println!("{}: {}", u + 1, show_list(&engine.knn(u, k)?));
        }
    }
    let (mut samples, touches) = time_queries(&engine, &queries, k, a.warmup, a.repeat.max(1), a.threads)?;
    let count = samples.len();
    let lat = Latency::from_samples(&mut samples);
    let per_query = touches as f64 / count as f64;
    println!(
        "queries: {count} (k'={k}, threads={}) mean {:.1} ns, p50 {} ns, p99 {} ns, entries touched {touches} ({per_query:.2} per query)",
        a.threads.max(1),
        lat.mean,
        lat.p50,
        lat.p99
    );
    if let Some(csv) = &a.csv {
        append_csv(
            csv,
            "k,density,n,queries,threads,mean_ns,p50_ns,p99_ns,touches",
            &format!(
                "{k},{},{n},{count},{},{:.1},{},{},{touches}",
                bundle.objects.density(),
                a.threads.max(1),
                lat.mean,
                lat.p50,
                lat.p99
            ),
        )?;
    }
    Ok(())
}

fn parse_script(text: &str, n: usize) -> Result<Vec<(UpdateKind, VertexId)>, Failure> {
    let mut ops = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (kind, rest) = match body.split_at(1) {
            ("+", r) => (UpdateKind::Insert, r),
            ("-", r) => (UpdateKind::Delete, r),
            _ => return Err(Failure::Usage(format!("line {}: expected +id or -id, got `{body}`", i + 1))),
        };
        let ids = parse_ids(rest.trim(), n).map_err(|e| match e {
            Failure::Usage(m) => Failure::Usage(format!("line {}: {m}", i + 1)),
            other => other,
        })?;
        match ids.as_slice() {
            [v] => ops.push((kind, *v)),
            _ => return Err(Failure::Usage(format!("line {}: expected one vertex id", i + 1))),
        }
    }
    Ok(ops)
}

fn cmd_update(a: &UpdateArgs) -> CmdResult {
    let mut bundle = read_bundle(&a.bundle)?;
    let ops = parse_script(&read_text(&a.script)?, bundle.num_vertices())?;
    let mut rows = String::new();
    let mut lat = [Vec::new(), Vec::new()];
    let mut deltas = Vec::with_capacity(ops.len());
    for (i, &(kind, u)) in ops.iter().enumerate() {
        let t = Instant::now();
        let report = match kind {
            UpdateKind::Insert => bundle.insert(u),
            UpdateKind::Delete => bundle.delete(u),
        }
        .map_err(|e| Failure::Usage(format!("operation {}: {e}", i + 1)))?;
        let ns = t.elapsed().as_nanos() as u64;
        lat[(kind == UpdateKind::Delete) as usize].push(ns);
        deltas.push(report.affected_count() as u64);
        let _ = writeln!(
            rows,
            "{},{},{ns},{},{},{}",
            if kind == UpdateKind::Insert { "insert" } else { "delete" },
            u + 1,
            report.affected_count(),
            report.frontier_visits,
            report.replacement_scans
        );
    }
    for (name, samples) in ["insert", "delete"].iter().zip(&mut lat) {
        if samples.is_empty() {
            continue;
        }
        let count = samples.len();
        let l = Latency::from_samples(samples);
        println!("{name}: {count} ops, mean {:.0} ns, p50 {} ns, p99 {} ns", l.mean, l.p50, l.p99);
    }
    if !deltas.is_empty() {
        let mean = deltas.iter().sum::<u64>() as f64 / deltas.len() as f64;
        println!("affected vertices per op: mean {mean:.2}, max {}", deltas.iter().max().unwrap());
    }
    println!("objects now: {}", bundle.objects.len());
    if a.refresh {
        bundle.refresh_partial()?;
    }
    save_bundle(a.output.as_deref().unwrap_or(&a.bundle), &bundle)?;
    if let Some(p) = &a.objects {
        fs::write(p, bundle.objects.to_text())?;
    }
    if let Some(csv) = &a.csv {
        let mut f = fs::File::create(csv)?;
        writeln!(f, "op,vertex,latency_ns,affected,frontier_visits,replacement_scans")?;
        f.write_all(rows.as_bytes())?;
    }
    Ok(())
}

fn print_report(name: &str, r: &VerificationReport) {
    println!("{name}: {} ({r}", if r.is_ok() { "ok" } else { "FAILED" });
}

fn cmd_verify(a: &VerifyArgs) -> CmdResult {
    let graph = read_graph(&a.graph)?;
    let bundle = read_bundle(&a.bundle)?;
    let exec = if a.sequential { Execution::Sequential } else { Execution::Parallel };
    let mut ok = true;

    if let Err(e) = bundle.check_graph(&graph) {
        println!("graph: FAILED ({e})");
        return Err(Failure::Verification);
    }
    println!("graph: ok (fingerprint {:016x})", bundle.graph_fingerprint);
    if let Some(p) = &a.objects {
        let expected = load_objects(&read_text(p)?, graph.num_vertices())
            .map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
        if expected != bundle.objects {
            println!("objects: FAILED (bundle holds {} objects, file lists {})", bundle.objects.len(), expected.len());
            ok = false;
        } else {
            println!("objects: ok ({})", expected.len());
        }
    }

    let r = verify_bn_graph(&graph, &bundle.bn, a.samples, a.seed, exec);
    ok &= r.is_ok();
    print_report("BN-Graph", &r);
    let r = verify_index(&graph, &bundle.objects, bundle.k(), &bundle.index, exec);
    ok &= r.is_ok();
    print_report("index", &r);

    if bundle.partial_stale {
        println!("partial lists: stale after updates, not checked");
    } else {
        let fresh = compute_partial_knn(&bundle.bn, &bundle.order, &bundle.objects, bundle.k())?;
        if fresh == bundle.partial {
            println!("partial lists: ok");
        } else {
            println!("partial lists: FAILED (differ from a recomputation)");
            ok = false;
        }
    }
    if ok {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

/// One row of sweep measurements.
struct Measured {
    n: usize,
    m: usize,
    k: usize,
    density: f64,
    objects: usize,
    bn_ms: f64,
    index_ms: f64,
    bottomup_ms: Option<f64>,
    stats: BuildStats,
    index_bytes: u64,
    bundle_bytes: u64,
    query: Latency,
    touches_per_query: f64,
    insert_ns: f64,
    delete_ns: f64,
    mean_affected: f64,
}

const SWEEP_HEADER: &str = "n,m,k,density,objects,bn_ms,index_ms,bottomup_ms,rho,tau,tau_prime,eta,\
index_bytes,bundle_bytes,query_mean_ns,query_p50_ns,query_p99_ns,touches_per_query,insert_mean_ns,\
delete_mean_ns,mean_affected";

impl Measured {
    fn row(&self) -> String {
        let s = &self.stats;
        format!(
            "{},{},{},{},{},{:.3},{:.3},{},{},{},{},{},{},{},{:.1},{},{},{:.2},{:.0},{:.0},{:.2}",
            self.n,
            self.m,
            self.k,
            self.density,
            self.objects,
            self.bn_ms,
            self.index_ms,
            self.bottomup_ms.map(|t| format!("{t:.3}")).unwrap_or_default(),
            s.rho,
            s.tau,
            s.tau_prime,
            fmt_eta(s),
            self.index_bytes,
            self.bundle_bytes,
            self.query.mean,
            self.query.p50,
            self.query.p99,
            self.touches_per_query,
            self.insert_ns,
            self.delete_ns,
            self.mean_affected
        )
    }
}

fn measure(graph: &RoadNetwork, k: usize, density: f64, a: &SweepArgs) -> Result<Measured, Failure> {
    let n = graph.num_vertices();
    let objects = sample_objects(graph, density, a.seed)?;
    let built = build_timed(graph, objects, k, Algorithm::Bidirectional)?;
    let mut bundle = built.bundle;
    let mut stats = bundle.stats;
    let bottomup_ms = if a.bottomup {
        let t = Instant::now();
        let mut s = stats;
        build_index_bottom_up(&bundle.bn, &bundle.order, &bundle.partial, &bundle.objects, k, &mut s)?;
        stats.eta = s.eta;
        Some(ms(t) + built.bn_ms)
    } else {
        None
    };

    let queries = random_vertices(n, a.queries.max(1), a.seed ^ 0x9e37);
    let engine = QueryEngine::new(&bundle.index);
    let (mut samples, touches) = time_queries(&engine, &queries, k, 1, 1, 1)?;
    let touches_per_query = touches as f64 / samples.len() as f64;
    let query = Latency::from_samples(&mut samples);
    let index_b = index_bytes(&bundle.index);
    let bundle_b = predicted_bundle_size(&bundle);

    let mut rng = ChaCha8Rng::seed_from_u64(a.seed ^ 0x51);
    let (mut ins, mut del, mut affected) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..a.updates {
        let m = &bundle.objects;
        let delete = (i % 2 == 1 && m.len() > 1) || m.len() == n;
        let t = Instant::now();
        let report = if delete {
            let members = m.sorted();
            bundle.delete(members[rng.gen_range(0..members.len())])?
        } else {
            let u = loop {
                let v = rng.gen_range(0..n as VertexId);
                if !m.contains(v) {
                    break v;
                }
            };
            bundle.insert(u)?
        };
        let ns = t.elapsed().as_nanos() as u64;
        if delete { &mut del } else { &mut ins }.push(ns);
        affected.push(report.affected_count() as f64);
    }
    let mean = |v: &[u64]| if v.is_empty() { 0.0 } else { v.iter().sum::<u64>() as f64 / v.len() as f64 };

    Ok(Measured {
        n,
        m: graph.num_edges(),
        k,
        density,
        objects: sample_objects(graph, density, a.seed)?.len(),
        bn_ms: built.bn_ms,
        index_ms: built.index_ms,
        bottomup_ms,
        stats,
        index_bytes: index_b,
        bundle_bytes: bundle_b,
        query,
        touches_per_query,
        insert_ns: mean(&ins),
        delete_ns: mean(&del),
        mean_affected: if affected.is_empty() { 0.0 } else { affected.iter().sum::<f64>() / affected.len() as f64 },
    })
}

/// Vertices of the central `i x i` block of a 10 x 10 partition of a
/// `side x side` grid, in row-major order.
pub fn central_block(side: usize, i: usize) -> Vec<VertexId> {
    let lo = |span: usize| (side - span) / 2;
    let span = (side * i).div_ceil(10).clamp(1, side);
    let start = lo(span);
    let mut out = Vec::with_capacity(span * span);
    for r in start..start + span {
        for c in start..start + span {
            out.push((r * side + c) as VertexId);
        }
    }
    out
}

fn cmd_sweep(a: &SweepArgs) -> CmdResult {
    if a.side == 0 {
        return Err(Failure::Usage("--side must be at least 1".into()));
    }
    fs::create_dir_all(&a.csv)?;
    let base = generate_grid(a.side, a.side, WeightRange::new(1, 1000)?, a.seed)?;

    let mut params = format!("{SWEEP_HEADER}\n");
    for &k in &a.k {
        for &density in &a.density {
            let row = measure(&base, k, density, a)?;
            println!(
                "params: k={k} density={density} bn {:.1} ms index {:.1} ms query {:.1} ns",
                row.bn_ms, row.index_ms, row.query.mean
            );
            params.push_str(&row.row());
            params.push('\n');
        }
    }
    fs::write(a.csv.join("params.csv"), params)?;

    let k = if a.k.contains(&20) { 20 } else { a.k[0] };
    let density = if a.density.contains(&0.005) { 0.005 } else { a.density[0] };
    let mut scale = format!("cells,{SWEEP_HEADER}\n");
    for i in 1..=a.cells as usize {
        let g = base.induced_subgraph(&central_block(a.side, i))?;
        let row = measure(&g, k, density, a)?;
        println!("scale: {i}x{i} cells, n={} bn {:.1} ms index {:.1} ms", row.n, row.bn_ms, row.index_ms);
        let _ = writeln!(scale, "{i},{}", row.row());
    }
    fs::write(a.csv.join("scale.csv"), scale)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_blocks() {
        assert_eq!(central_block(10, 1), vec![44]);
        assert_eq!(central_block(10, 10).len(), 100);
        assert_eq!(central_block(20, 1), vec![189, 190, 209, 210]);
        assert_eq!(central_block(20, 2).len(), 16);
        assert_eq!(central_block(3, 1), vec![4]);
    }

    #[test]
    fn script_parsing() {
        let ops = parse_script("+3\n# note\n-1 # gone\n\n", 3).unwrap();
        assert_eq!(ops, vec![(UpdateKind::Insert, 2), (UpdateKind::Delete, 0)]);
        assert!(parse_script("*3\n", 3).is_err());
        assert!(parse_script("+4\n", 3).is_err());
        assert!(parse_script("+1 2\n", 3).is_err());
    }

    #[test]
    fn latency_percentiles() {
        let mut v: Vec<u64> = (1..=100).collect();
        let l = Latency::from_samples(&mut v);
        assert_eq!((l.p50, l.p99), (51, 99));
        assert!((l.mean - 50.5).abs() < 1e-9);
    }
}
