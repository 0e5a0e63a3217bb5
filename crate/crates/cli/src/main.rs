//! Command-line frontend for the time-dependent distance oracle: instance
//! generation, preprocessing, single queries, benchmark experiments, and
//! live-traffic updates.
//!
//! Exit codes: 0 on success, 2 on any validation failure (bad arguments,
//! malformed files, inconsistent settings), 3 when a query's destination
//! is unreachable.

mod config;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use config::{parse_time, Settings};
use tdoracle_core::bench::{
    freeflow_blowup, run_benchmark, sample_vertices, validate_assumptions, BenchConfig,
    QuerySet, RangeClass, DAYTIME_RANGE,
};
use tdoracle_core::codec::{CodecConfig, Store};
use tdoracle_core::flat::{FlatOracle, QueryError, QueryResult, SummarySource};
use tdoracle_core::graph::{
    instance_stats, load_instance_file, save_instance, NodeId, TdGraph,
};
use tdoracle_core::horn::{HornOracle, HornParams};
use tdoracle_core::landmarks::{
    build_hierarchy, select_hybrid, select_important_random, select_partition_boundary,
    select_random, select_sparse_partition, select_sparse_random, HierarchyMethod,
    HierarchySpec, LandmarkSet, Partition,
};
use tdoracle_core::live::{
    load_live_state, modified_graph, save_live_state, Change, Disruption, LiveFlat, LiveState,
    PatchedSource,
};
use tdoracle_core::synth::{generate, GeneratorConfig, InstanceKind};
use tdoracle_core::time::Timestamp;
use tdoracle_core::trap::{estimate_slope_bounds, SlopeBounds, TrapConfig};
use tdoracle_core::ttf::{Ttf, TtfPoint};

#[derive(Parser)]
#[command(name = "tdoracle", version, about = "Landmark oracle for time-dependent road networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic road-network instance.
    Generate(GenerateArgs),
    /// Print structural statistics and assumption measurements.
    Stats(StatsArgs),
    /// Build a summary store and its lookup index.
    Preprocess(PreprocessArgs),
    /// Answer one query from a store.
    Query(QueryArgs),
    /// Run a query experiment and report errors and ranks.
    Bench(BenchArgs),
    /// Apply a live-traffic disruption and persist the patch file.
    Update(UpdateArgs),
    /// Print a store file's directory and size accounting.
    InspectStore(InspectArgs),
}

/// Settings shared by every verb that reads a config file.
#[derive(Args)]
struct ConfigArgs {
    /// Key = value settings file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Single setting override, repeatable (e.g. --set epsilon=0.05).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn settings(&self) -> Result<Settings> {
        Settings::load(self.config.as_deref(), &self.set)
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// grid, ring or random-planar.
    #[arg(long, default_value = "grid")]
    kind: InstanceKind,
    /// Vertex count.
    #[arg(long)]
    n: usize,
    /// Fraction of road segments with time-dependent delays.
    #[arg(long, default_value_t = 0.12)]
    td_fraction: f64,
    /// Breakpoints per time-dependent arc.
    #[arg(long, default_value_t = 5)]
    breakpoints: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Period in seconds.
    #[arg(long, default_value_t = 86_400.0)]
    period: f64,
    /// Mirror each delay function onto the reverse arc.
    #[arg(long)]
    symmetric: bool,
    /// Fraction of segments split through a fresh degree-2 vertex.
    #[arg(long, default_value_t = 0.0)]
    subdivide: f64,
    /// Output instance file.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    instance: PathBuf,
    /// Also sample opposite-direction ratios and profile slopes.
    #[arg(long, value_name = "SAMPLES")]
    validate: Option<usize>,
    /// Also run the free-flow blow-up experiment for these ball sizes.
    #[arg(long, value_name = "F1,F2,...")]
    blowup: Option<String>,
    /// Origins for the blow-up experiment.
    #[arg(long, default_value_t = 20)]
    origins: usize,
    #[command(flatten)]
    cfg: ConfigArgs,
}

#[derive(Args)]
struct PreprocessArgs {
    /// flat or horn.
    mode: String,
    instance: PathBuf,
    /// Output store file; the index sidecar gets an extra .idx suffix.
    #[arg(short, long)]
    output: PathBuf,
    #[command(flatten)]
    cfg: ConfigArgs,
}

#[derive(Args)]
struct QueryArgs {
    instance: PathBuf,
    store: PathBuf,
    #[arg(long)]
    from: NodeId,
    #[arg(long)]
    to: NodeId,
    /// Departure, HH:MM[:SS] or seconds.
    #[arg(long)]
    at: String,
    /// fca, fca+, rqa or hqa; defaults to the store's natural algorithm.
    #[arg(long)]
    algo: Option<String>,
    /// Live patch file produced by `update`.
    #[arg(long)]
    patches: Option<PathBuf>,
    #[command(flatten)]
    cfg: ConfigArgs,
}

#[derive(Args)]
struct BenchArgs {
    instance: PathBuf,
    /// Flat store driving FCA, FCA+(N) and RQA rows.
    #[arg(long)]
    flat_store: Option<PathBuf>,
    /// Hierarchical store driving the HQA row.
    #[arg(long)]
    horn_store: Option<PathBuf>,
    /// Write per-query plot data as CSV.
    #[arg(long)]
    plot: Option<PathBuf>,
    #[command(flatten)]
    cfg: ConfigArgs,
}

#[derive(Args)]
struct UpdateArgs {
    instance: PathBuf,
    store: PathBuf,
    /// Disrupted arc id.
    #[arg(long)]
    arc: u32,
    /// Multiply the arc's delays inside the window.
    #[arg(long, conflicts_with_all = ["block", "replace"])]
    factor: Option<f64>,
    /// Make the arc impassable inside the window.
    #[arg(long, conflicts_with = "replace")]
    block: bool,
    /// Replace the delay inside the window: t:d pairs, e.g. 0:60,3600:90.
    #[arg(long)]
    replace: Option<String>,
    /// Window start, HH:MM[:SS] or seconds.
    #[arg(long)]
    start: String,
    /// Window end.
    #[arg(long)]
    end: String,
    /// Rebuild every landmark; required for delay-decreasing changes.
    #[arg(long)]
    full: bool,
    /// Existing patch file to extend.
    #[arg(long)]
    patches: Option<PathBuf>,
    /// Output patch file; defaults to the store path plus .patches.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    cfg: ConfigArgs,
}

#[derive(Args)]
struct InspectArgs {
    store: PathBuf,
}

fn main() -> ExitCode {
    // Die quietly when the output pipe closes (e.g. piping into `head`).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Generate(a) => cmd_generate(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Preprocess(a) => cmd_preprocess(a),
        Command::Query(a) => return cmd_query(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Update(a) => cmd_update(a),
        Command::InspectStore(a) => cmd_inspect(a),
    }?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_generate(a: GenerateArgs) -> Result<()> {
    let cfg = GeneratorConfig {
        kind: a.kind,
        n: a.n,
        td_fraction: a.td_fraction,
        breakpoints: a.breakpoints,
        seed: a.seed,
        period: a.period,
        symmetric: a.symmetric,
        subdivide_fraction: a.subdivide,
    };
    let g = generate(&cfg);
    let mut w = BufWriter::new(
        File::create(&a.output).with_context(|| format!("creating {}", a.output.display()))?,
    );
    save_instance(&g, &mut w)?;
    w.flush()?;
    println!("nodes\t{}", g.n());
    println!("arcs\t{}", g.m());
    println!("period\t{}", g.period());
    println!("file\t{}", a.output.display());
    Ok(())
}

fn cmd_stats(a: StatsArgs) -> Result<()> {
    let s = a.cfg.settings()?;
    let g = load_graph(&a.instance, &s)?;
    let seed = s.u64("seed", 1)?;
    let st = instance_stats(&g);
    print!(
        "nodes\t{}\nactive_nodes\t{}\narcs\t{}\nactive_arcs\t{}\nconstant_arcs\t{}\npwl_arcs\t{}\n",
        st.nodes, st.active_nodes, st.arcs, st.active_arcs, st.constant_arcs, st.pwl_arcs
    );
    print!(
        "breakpoints_total\t{}\nbreakpoints_avg\t{}\nbreakpoints_max\t{}\nkstar\t{}\n",
        st.breakpoints_total, st.breakpoints_avg, st.breakpoints_max, st.kstar
    );
    print!(
        "arc_slope_min\t{}\narc_slope_max\t{}\nmin_delay\t{}\nmax_delay\t{}\nperiod\t{}\n",
        st.slope_min, st.slope_max, st.min_delay, st.max_delay, st.period
    );
    if let Some(samples) = a.validate {
        print!("{}", validate_assumptions(&g, samples, seed).table());
    }
    if let Some(raw) = &a.blowup {
        let f_values: Vec<usize> = raw
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<usize>()
                    .with_context(|| format!("--blowup: bad ball size `{tok}`"))
            })
            .collect::<Result<_>>()?;
        let origins = sample_vertices(&g, a.origins, seed);
        print!("{}", freeflow_blowup(&g, &origins, &f_values).table());
    }
    Ok(())
}

fn cmd_preprocess(a: PreprocessArgs) -> Result<()> {
    let s = a.cfg.settings()?;
    let g = load_graph(&a.instance, &s)?;
    let trap = trap_config(&g, &s)?;
    let codec = codec_config(&s)?;
    let (store, records) = match a.mode.as_str() {
        "flat" => {
            let landmarks = landmark_set(&g, &s)?;
            if landmarks.truncated {
                eprintln!(
                    "note: candidate pool emptied, selected {} landmarks",
                    landmarks.len()
                );
            }
            let oracle = FlatOracle::preprocess(&g, &landmarks, &trap, codec)?;
            write_sidecar(&a.output, |w| oracle.index.write(w))?;
            let records = count_records(&oracle.store);
            (oracle.store, records)
        }
        "horn" => {
            let spec = hierarchy_spec(&s)?;
            let hierarchy = build_hierarchy(&g, &spec, s.u64("seed", 1)?)?;
            let oracle = HornOracle::preprocess(&g, &hierarchy, &trap, codec, horn_params(&s)?)?;
            write_sidecar(&a.output, |w| oracle.index.write(w))?;
            let records = count_records(&oracle.store);
            (oracle.store, records)
        }
        other => bail!("unknown preprocess mode `{other}` (expected flat or horn)"),
    };
    let mut w = BufWriter::new(
        File::create(&a.output).with_context(|| format!("creating {}", a.output.display()))?,
    );
    store.write(&mut w)?;
    w.flush()?;
    let bytes = std::fs::metadata(&a.output)?.len();
    println!("landmarks\t{}", store.entries.len());
    println!("records\t{records}");
    println!("store_bytes\t{bytes}");
    println!("file\t{}", a.output.display());
    Ok(())
}

fn cmd_query(a: QueryArgs) -> Result<ExitCode> {
    let s = a.cfg.settings()?;
    let g = load_graph(&a.instance, &s)?;
    let store = read_store(&a.store)?;
    let epsilon = s.f64("epsilon", 0.1)?;
    let t0 = Timestamp(parse_time(&a.at)?);
    let hierarchical = store.entries.iter().any(|e| e.level > 1);
    let algo = match &a.algo {
        Some(name) => name.clone(),
        None if hierarchical => "hqa".to_string(),
        None => "fca+".to_string(),
    };
    if !["fca", "fca+", "rqa", "hqa"].contains(&algo.as_str()) {
        bail!("unknown algo `{algo}` (expected fca, fca+, rqa or hqa)");
    }

    // With a patch file the query runs on the disrupted graph and the
    // patched summaries; otherwise directly on the base oracle.
    let live: Option<LiveState> = match &a.patches {
        Some(path) => Some(load_live_state(
            BufReader::new(
                File::open(path).with_context(|| format!("opening {}", path.display()))?,
            ),
            &g,
        )?),
        None => None,
    };

    let outcome = match algo.as_str() {
        "hqa" => {
            let oracle = HornOracle::from_store(&g, store, horn_params(&s)?, epsilon);
            query_on(&live, &g, &oracle.store, t0, |graph, src| {
                oracle.hqa_on(graph, src, a.from, a.to, t0)
            })
        }
        name => {
            let oracle = FlatOracle::from_store(&g, store, epsilon);
            let n = s.usize("fca-plus-n", 6)?;
            let budget = s.usize("rqa-budget", 1)?;
            query_on(&live, &g, &oracle.store, t0, |graph, src| match name {
                "fca" => oracle.fca_plus_on(graph, src, a.from, a.to, t0, 1),
                "fca+" => oracle.fca_plus_on(graph, src, a.from, a.to, t0, n),
                _ => oracle.rqa_on(graph, src, a.from, a.to, t0, budget),
            })
        }
    };
    let result = match outcome {
        Ok(r) => r,
        Err(QueryError::Unreachable { origin, dest }) => {
            eprintln!("unreachable: no route from {origin} to {dest}");
            return Ok(ExitCode::from(3));
        }
        Err(e) => return Err(e.into()),
    };

    println!("algo\t{algo}");
    println!("value\t{}", result.value.0);
    println!("guarantee\t{}", result.guarantee);
    println!("rank\t{}", result.rank);
    if !result.landmarks.is_empty() {
        let via: Vec<String> = result.landmarks.iter().map(|l| l.to_string()).collect();
        println!("via\t{}", via.join(" "));
    }
    if let Some(path) = &result.path {
        let arcs: Vec<String> = path.iter().map(|a| a.to_string()).collect();
        println!("path\t{}", arcs.join(" "));
    }
    Ok(ExitCode::SUCCESS)
}

/// Runs a query closure against either the base store or, when a patch
/// file was loaded, the disrupted graph plus patched summaries.
fn query_on<F>(
    live: &Option<LiveState>,
    base: &TdGraph,
    store: &Store,
    t0: Timestamp,
    query: F,
) -> Result<QueryResult, QueryError>
where
    F: Fn(&TdGraph, &dyn SummarySource) -> Result<QueryResult, QueryError>,
{
    match live {
        Some(state) => {
            let src = PatchedSource {
                store,
                patches: &state.patches,
                now: t0,
            };
            query(&state.graph, &src)
        }
        None => query(base, store),
    }
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let s = a.cfg.settings()?;
    if a.flat_store.is_none() && a.horn_store.is_none() {
        bail!("bench needs --flat-store and/or --horn-store");
    }
    let g = load_graph(&a.instance, &s)?;
    let epsilon = s.f64("epsilon", 0.1)?;
    let flat = match &a.flat_store {
        Some(p) => Some(FlatOracle::from_store(&g, read_store(p)?, epsilon)),
        None => None,
    };
    let horn = match &a.horn_store {
        Some(p) => Some(HornOracle::from_store(&g, read_store(p)?, horn_params(&s)?, epsilon)),
        None => None,
    };

    let count = s.usize("queries", 200)?;
    let seed = s.u64("seed", 1)?;
    let range = (
        s.f64("departure-start", DAYTIME_RANGE.0)?,
        s.f64("departure-end", DAYTIME_RANGE.1)?,
    );
    let qs = match s.str("class", "random").as_str() {
        "random" => QuerySet::random(&g, count, range, seed),
        "short" => QuerySet::ranked(&g, count, RangeClass::Short, range, seed),
        "mid" => QuerySet::ranked(&g, count, RangeClass::Mid, range, seed),
        "long" => QuerySet::ranked(&g, count, RangeClass::Long, range, seed),
        "mixed" => QuerySet::ranked(&g, count, RangeClass::Mixed, range, seed),
        other => bail!("class: unknown query class `{other}`"),
    };
    let cfg = BenchConfig {
        fca_plus_n: s.usize("fca-plus-n", 6)?,
        rqa_budget: s.usize("rqa-budget", 1)?,
        ground_truth: s.bool("ground-truth", true)?,
    };
    let report = run_benchmark(&g, flat.as_ref(), horn.as_ref(), &qs, &cfg)?;
    print!("{}", report.table());
    if let Some(path) = &a.plot {
        std::fs::write(path, report.plot_csv())
            .with_context(|| format!("writing {}", path.display()))?;
        println!("plot\t{}", path.display());
    }
    Ok(())
}

fn cmd_update(a: UpdateArgs) -> Result<()> {
    let s = a.cfg.settings()?;
    let g = load_graph(&a.instance, &s)?;
    let store = read_store(&a.store)?;
    let epsilon = s.f64("epsilon", 0.1)?;

    let change = if let Some(f) = a.factor {
        Change::Factor(f)
    } else if a.block {
        Change::Block
    } else if let Some(spec) = &a.replace {
        Change::Replace(parse_replacement(spec, g.period())?)
    } else {
        bail!("update needs --factor, --block or --replace");
    };
    let dis = Disruption {
        arc: a.arc,
        change,
        window: (
            Timestamp(parse_time(&a.start)?),
            Timestamp(parse_time(&a.end)?),
        ),
    };

    // Slope bounds are measured on the disrupted graph so the rebuilt
    // summaries stay sound under the new delays.
    let disrupted = modified_graph(&g, &dis)?;
    let trap = trap_config(&disrupted, &s)?;

    let oracle = FlatOracle::from_store(&g, store, epsilon);
    let live = LiveFlat::new(oracle);
    if let Some(path) = &a.patches {
        let prior = load_live_state(
            BufReader::new(
                File::open(path).with_context(|| format!("opening {}", path.display()))?,
            ),
            &g,
        )?;
        for (_, prior_dis) in prior.disruptions {
            let decrease = matches!(prior_dis.change, Change::Factor(f) if f < 1.0);
            if decrease {
                live.apply_disruption_full(prior_dis, &trap)?;
            } else {
                live.apply_disruption(prior_dis, &trap)?;
            }
        }
    }
    let (id, patched) = if a.full {
        live.apply_disruption_full(dis, &trap)?
    } else {
        live.apply_disruption(dis, &trap)?
    };

    let output = a
        .output
        .unwrap_or_else(|| PathBuf::from(format!("{}.patches", a.store.display())));
    let state = live.snapshot();
    let mut w = BufWriter::new(
        File::create(&output).with_context(|| format!("creating {}", output.display()))?,
    );
    save_live_state(&mut w, &state)?;
    w.flush()?;
    println!("disruption\t{id}");
    println!("patched_landmarks\t{patched}");
    println!("disruptions_total\t{}", state.disruptions.len());
    println!("file\t{}", output.display());
    Ok(())
}

fn cmd_inspect(a: InspectArgs) -> Result<()> {
    let store = read_store(&a.store)?;
    let top = store.entries.iter().map(|e| e.level).max().unwrap_or(1);
    let stored: u64 = store.entries.iter().map(|e| e.stored_len as u64).sum();
    let raw: u64 = store.entries.iter().map(|e| e.raw_len as u64).sum();
    println!("period\t{}", store.period);
    println!("scale\t{}", store.config.scale);
    println!("bucket\t{}", store.config.bucket);
    println!("compressed\t{}", store.config.compress);
    println!("landmarks\t{}", store.entries.len());
    println!("levels\t{top}");
    println!("records\t{}", count_records(&store));
    println!("stored_bytes\t{stored}");
    println!("raw_bytes\t{raw}");
    println!("landmark\tlevel\tcoverage\trecords\tstored\traw");
    for e in &store.entries {
        let records = store
            .record_offsets(e.landmark)
            .map(|m| m.len())
            .unwrap_or(0);
        println!(
            "{}\t{}\t{}\t{}\t{}\t{}",
            e.landmark, e.level, e.coverage, records, e.stored_len, e.raw_len
        );
    }
    Ok(())
}

fn load_graph(path: &Path, s: &Settings) -> Result<TdGraph> {
    let g = load_instance_file(path)
        .with_context(|| format!("loading instance {}", path.display()))?;
    if s.bool("contract", false)? {
        Ok(g.contract_degree2())
    } else {
        Ok(g)
    }
}

fn read_store(path: &Path) -> Result<Store> {
    let mut r = BufReader::new(
        File::open(path).with_context(|| format!("opening store {}", path.display()))?,
    );
    Ok(Store::read(&mut r).with_context(|| format!("reading store {}", path.display()))?)
}

/// Writes the lookup index next to the store as `<store>.idx`.
fn write_sidecar<E: Into<anyhow::Error>>(
    store_path: &Path,
    write: impl FnOnce(&mut BufWriter<File>) -> Result<(), E>,
) -> Result<()> {
    let path = PathBuf::from(format!("{}.idx", store_path.display()));
    let mut w = BufWriter::new(
        File::create(&path).with_context(|| format!("creating {}", path.display()))?,
    );
    write(&mut w).map_err(Into::into)?;
    w.flush()?;
    println!("index\t{}", path.display());
    Ok(())
}

fn count_records(store: &Store) -> usize {
    store
        .entries
        .iter()
        .filter_map(|e| store.record_offsets(e.landmark).map(|m| m.len()))
        .sum()
}

fn landmark_set(g: &TdGraph, s: &Settings) -> Result<LandmarkSet> {
    let active = g.active_nodes().count();
    let k = match s.opt_str("landmarks") {
        None | Some("auto") => (active as f64).sqrt().ceil() as usize,
        Some(v) => v
            .parse()
            .with_context(|| format!("landmarks: bad count `{v}`"))?,
    };
    let seed = s.u64("seed", 1)?;
    let exclusion = s.usize("exclusion", (active / (4 * k.max(1))).max(1))?;
    let method = s.str("landmark-method", "sparse-random");
    let partition = || -> Result<Partition> {
        let path = s
            .opt_str("partition-file")
            .ok_or_else(|| anyhow!("landmark-method {method} needs partition-file"))?;
        let r = BufReader::new(
            File::open(path).with_context(|| format!("opening partition {path}"))?,
        );
        Ok(Partition::parse(r)?)
    };
    Ok(match method.as_str() {
        "random" => select_random(g, k, seed),
        "sparse-random" => select_sparse_random(g, k, exclusion, seed),
        "important-random" => select_important_random(
            g,
            k,
            seed,
            s.usize("category-threshold", 1)? as u32,
            s.usize("relocation-ball", 30)?,
        ),
        "partition-boundary" => select_partition_boundary(g, &partition()?)?,
        "sparse-partition" => select_sparse_partition(g, &partition()?, k, exclusion, seed)?,
        "hybrid" => select_hybrid(g, &partition()?, k, seed)?,
        other => bail!("landmark-method: unknown method `{other}`"),
    })
}

fn hierarchy_spec(s: &Settings) -> Result<HierarchySpec> {
    let level_sizes = s
        .usize_list("level-sizes")?
        .ok_or_else(|| anyhow!("preprocess horn needs level-sizes (e.g. 16,4)"))?;
    let coverage_sizes = s
        .usize_list("coverage-sizes")?
        .ok_or_else(|| anyhow!("preprocess horn needs coverage-sizes (e.g. 100,1000)"))?;
    let exclusion_sizes = s
        .usize_list("exclusion-sizes")?
        .unwrap_or_else(|| vec![0; level_sizes.len()]);
    let method = match s.str("hierarchy-method", "hr").as_str() {
        "hr" => HierarchyMethod::HR,
        "hsr" => HierarchyMethod::HSR,
        other => bail!("hierarchy-method: expected hr or hsr, got `{other}`"),
    };
    Ok(HierarchySpec {
        level_sizes,
        coverage_sizes,
        exclusion_sizes,
        method,
        xi: s.f64("xi", 0.1)?,
    })
}

fn horn_params(s: &Settings) -> Result<HornParams> {
    let d = HornParams::default();
    Ok(HornParams {
        a: s.f64("a", d.a)?,
        beta: s.f64("beta", d.beta)?,
        gamma: s.f64("gamma", d.gamma)?,
        xi: s.f64("xi", d.xi)?,
    })
}

fn trap_config(g: &TdGraph, s: &Settings) -> Result<TrapConfig> {
    let margin = s.f64("slope-margin", 1.5)?;
    let lambda_max = match s.opt_str("lambda-max") {
        None | Some("auto") => {
            let measured = estimate_slope_bounds(
                g,
                s.usize("slope-pairs", 40)?,
                s.usize("slope-steps", 64)?,
                s.u64("seed", 1)?,
            );
            measured.lambda_max * margin
        }
        Some(v) => v
            .parse()
            .with_context(|| format!("lambda-max: bad number `{v}`"))?,
    };
    let mut cfg = TrapConfig::new(g.period(), SlopeBounds::new(lambda_max, 1.0));
    cfg.tau = s.f64("tau", cfg.tau)?;
    cfg.epsilon = s.f64("epsilon", cfg.epsilon)?;
    Ok(cfg)
}

fn codec_config(s: &Settings) -> Result<CodecConfig> {
    let d = CodecConfig::default();
    Ok(CodecConfig {
        scale: s.f64("scale", d.scale)?,
        bucket: s.f64("bucket", d.bucket)?,
        compress: s.bool("compress", d.compress)?,
    })
}

/// `t:d` breakpoint pairs, comma-separated, positions ascending.
fn parse_replacement(spec: &str, period: f64) -> Result<Ttf> {
    let mut points = Vec::new();
    for pair in spec.split(',') {
        let (t, d) = pair
            .split_once(':')
            .ok_or_else(|| anyhow!("--replace: expected t:d, got `{pair}`"))?;
        points.push(TtfPoint::new(parse_time(t.trim())?, parse_time(d.trim())?));
    }
    Ok(Ttf::new(period, points)?)
}
