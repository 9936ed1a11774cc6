use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use pnc::coder;
use pnc::dict::DictModel;
use pnc::graph::{self, Corpus, Graph};
use pnc::partition::Partition;
use pnc::policy::PolicyParams;
use pnc::stats;
use pnc::theory;
use pnc::train::{self, PartitionerKind, TrainConfig};
use pnc::Error;

#[derive(Parser)]
#[command(
    name = "pnc",
    version,
    about = "Dictionary-learning lossless compressor for graph corpora"
)]
struct Cli {
    /// Worker threads for per-graph work (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fit the dictionary model on a dataset; writes a model bundle.
    Train(TrainArgs),
    /// Encode a dataset into an archive with a trained bundle.
    Compress(CompressArgs),
    /// Decode an archive back into a corpus text file.
    Decompress(DecompressArgs),
    /// Per-method bits-per-edge table for a dataset.
    Stats(StatsArgs),
    /// Whole-graph null-model baselines for a dataset.
    BenchNull(BenchNullArgs),
    /// Synthetic checks of the asymptotic bounds.
    VerifyTheory(VerifyTheoryArgs),
    /// Print the atoms of a trained bundle.
    DumpDict(DumpDictArgs),
    /// Download a TUDataset-format dataset (requires curl and unzip).
    Fetch(FetchArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset name (under PNC_DATA_DIR) or directory path.
    #[arg(long)]
    dataset: String,
    /// Training fraction; the rest is held out.
    #[arg(long, default_value_t = 0.9)]
    split: f64,
    /// labelprop | modularity | mdlmerge | policy
    #[arg(long, default_value = "labelprop")]
    partitioner: String,
    #[arg(long, default_value_t = pnc::DEFAULT_KMAX)]
    kmax: usize,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output model bundle path.
    #[arg(long, default_value = "model.pncm")]
    out: PathBuf,
    /// Keep vertex/edge attributes (default strips them, matching the
    /// published topology-only tables).
    #[arg(long)]
    keep_attrs: bool,
}

#[derive(Args)]
struct CompressArgs {
    #[arg(long)]
    dataset: String,
    /// Trained model bundle.
    #[arg(long)]
    model: PathBuf,
    /// labelprop | modularity | mdlmerge | policy
    #[arg(long, default_value = "labelprop")]
    partitioner: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "corpus.pnc")]
    out: PathBuf,
}

#[derive(Args)]
struct DecompressArgs {
    /// Archive produced by `compress`.
    archive: PathBuf,
    /// Output corpus text file.
    #[arg(long, default_value = "decoded.txt")]
    out: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    dataset: String,
    /// Trained bundle; adds the fitted-model row to the table.
    #[arg(long)]
    model: Option<PathBuf>,
    /// labelprop | modularity | mdlmerge | policy
    #[arg(long, default_value = "labelprop")]
    partitioner: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct BenchNullArgs {
    #[arg(long)]
    dataset: String,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyTheoryArgs {
    /// Preset name, or "all".
    #[arg(long, default_value = "all")]
    preset: String,
    /// Write the bound table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct DumpDictArgs {
    #[arg(long)]
    model: PathBuf,
    /// How many atoms to print, most probable first.
    #[arg(long, default_value_t = 16)]
    top: usize,
    /// Emit DOT graphs instead of text.
    #[arg(long)]
    dot: bool,
}

#[derive(Args)]
struct FetchArgs {
    /// TUDataset name, e.g. MUTAG.
    #[arg(long)]
    dataset: String,
    /// Target directory (default: PNC_DATA_DIR or ./data).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // Usage problems exit 1; --help and --version are successes.
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Some(n) = cli.jobs {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Io { .. } => 2,
                Error::Diverged(_) => 4,
                _ => 3,
            })
        }
    }
}

fn run(cmd: Cmd) -> Result<(), Error> {
    match cmd {
        Cmd::Train(a) => cmd_train(a),
        Cmd::Compress(a) => cmd_compress(a),
        Cmd::Decompress(a) => cmd_decompress(a),
        Cmd::Stats(a) => cmd_stats(a),
        Cmd::BenchNull(a) => cmd_bench_null(a),
        Cmd::VerifyTheory(a) => cmd_verify_theory(a),
        Cmd::DumpDict(a) => cmd_dump_dict(a),
        Cmd::Fetch(a) => cmd_fetch(a),
    }
}

fn data_root() -> PathBuf {
    std::env::var_os("PNC_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("data"))
}

fn load_corpus(dataset: &str) -> Result<Corpus, Error> {
    let direct = Path::new(dataset);
    let dir = if direct.is_dir() {
        direct.to_path_buf()
    } else {
        data_root().join(dataset)
    };
    graph::parse_tu_dataset(&dir)
}

fn parse_partitioner(s: &str) -> Result<PartitionerKind, Error> {
    s.parse::<PartitionerKind>().map_err(Error::Model)
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, Error> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Deterministic per-graph partitions, parallel across graphs.
fn partitions_for(
    graphs: &[Graph],
    kind: PartitionerKind,
    policy: Option<&PolicyParams>,
    model: Option<&DictModel>,
    kmax: usize,
    seed: u64,
) -> Result<Vec<Partition>, Error> {
    graphs
        .par_iter()
        .enumerate()
        .map(|(i, g)| train::partition_with(g, kind, policy, model, kmax, seed.wrapping_add(i as u64)))
        .collect()
}

fn cmd_train(a: TrainArgs) -> Result<(), Error> {
    let mut corpus = load_corpus(&a.dataset)?;
    if !a.keep_attrs {
        corpus = stats::strip_attrs(&corpus);
    }
    let kind = parse_partitioner(&a.partitioner)?;
    let mut cfg = match kind {
        PartitionerKind::Policy => TrainConfig::policy(),
        PartitionerKind::Fixed(p) => TrainConfig::fixed(p),
    };
    cfg.kmax = a.kmax;
    cfg.epochs = a.epochs;
    cfg.seed = a.seed;
    cfg.train_frac = a.split;
    let report = train::train(&mut corpus, &cfg)?;
    let n_max = corpus.n_max_train();
    let bundle = coder::write_model_bundle(&report.model, report.policy.as_ref(), n_max);
    write_bytes(&a.out, &bundle)?;
    let first = report.objectives.first().copied().unwrap_or(f64::NAN);
    let best = report.objectives.get(report.best_epoch).copied().unwrap_or(f64::NAN);
    println!(
        "trained on {} ({} graphs, {} train) for {} epochs",
        corpus.name,
        corpus.len(),
        corpus.train_indices().len(),
        report.objectives.len().saturating_sub(1),
    );
    println!(
        "objective: initial {first:.1} bits, best {best:.1} bits at epoch {}",
        report.best_epoch
    );
    println!(
        "dictionary: {} atoms, delta = {:.4}, parameter cost {} bits",
        report.model.dict_indices().len(),
        report.model.delta(),
        report.model.l_param_bits(),
    );
    println!("model bundle -> {}", a.out.display());
    Ok(())
}

fn load_bundle(path: &Path) -> Result<(DictModel, Option<PolicyParams>, u32), Error> {
    coder::read_model_bundle(&read_bytes(path)?)
}

fn cmd_compress(a: CompressArgs) -> Result<(), Error> {
    let mut corpus = load_corpus(&a.dataset)?;
    let (model, policy, n_max) = load_bundle(&a.model)?;
    if model.v_domain.is_none() && model.e_domain.is_none() {
        corpus = stats::strip_attrs(&corpus);
    }
    let kind = parse_partitioner(&a.partitioner)?;
    let parts = partitions_for(
        &corpus.graphs,
        kind,
        policy.as_ref(),
        Some(&model),
        model.kmax,
        a.seed,
    )?;
    let n_max = n_max.max(corpus.n_max());
    let c = coder::compress(&corpus.graphs, &parts, &model, n_max)?;
    write_bytes(&a.out, &c.bytes)?;
    let total_edges: u64 = corpus.total_edges();
    let realized: f64 = c.realized_bits.iter().sum();
    println!(
        "{}: {} graphs, {} edges -> {} bytes ({:.4} bits/edge)",
        corpus.name,
        corpus.len(),
        total_edges,
        c.bytes.len(),
        realized / total_edges.max(1) as f64,
    );
    println!("archive -> {}", a.out.display());
    Ok(())
}

fn cmd_decompress(a: DecompressArgs) -> Result<(), Error> {
    let bytes = read_bytes(&a.archive)?;
    let (header, graphs) = coder::decompress(&bytes)?;
    let name = a
        .archive
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "decoded".into());
    let corpus = Corpus::new(name, graphs);
    graph::write_corpus_txt(&corpus, &a.out)?;
    println!(
        "{} graphs (kmax {}, {} atoms) -> {}",
        corpus.len(),
        header.kmax,
        header.atoms.len(),
        a.out.display()
    );
    Ok(())
}

fn cmd_stats(a: StatsArgs) -> Result<(), Error> {
    let corpus = load_corpus(&a.dataset)?;
    let mut report = stats::CodeLenReport::default();
    match &a.model {
        None => {
            report.rows = stats::null_rows(&corpus);
        }
        Some(path) => {
            let (model, policy, _) = load_bundle(path)?;
            let corpus = if model.v_domain.is_none() && model.e_domain.is_none() {
                stats::strip_attrs(&corpus)
            } else {
                corpus
            };
            report.rows = stats::null_rows(&corpus);
            let kind = parse_partitioner(&a.partitioner)?;
            let parts = partitions_for(
                &corpus.graphs,
                kind,
                policy.as_ref(),
                Some(&model),
                model.kmax,
                a.seed,
            )?;
            let method = format!("pnc+{}", a.partitioner);
            report.rows.push(stats::model_row(&corpus, &parts, &model, &method));
        }
    }
    print!("{}", report.to_text());
    if let Some(csv) = &a.csv {
        write_bytes(csv, report.to_csv().as_bytes())?;
        println!("csv -> {}", csv.display());
    }
    Ok(())
}

fn cmd_bench_null(a: BenchNullArgs) -> Result<(), Error> {
    let corpus = load_corpus(&a.dataset)?;
    let report = stats::CodeLenReport {
        rows: stats::null_rows(&corpus),
    };
    print!("{}", report.to_text());
    if let Some(csv) = &a.csv {
        write_bytes(csv, report.to_csv().as_bytes())?;
        println!("csv -> {}", csv.display());
    }
    Ok(())
}

fn cmd_verify_theory(a: VerifyTheoryArgs) -> Result<(), Error> {
    let names: Vec<&str> = if a.preset == "all" {
        theory::preset_names().to_vec()
    } else {
        vec![a.preset.as_str()]
    };
    let mut csv_rows = vec![theory::BoundReport::csv_header().to_string()];
    for name in names {
        let (spec, k, check) = theory::preset(name)
            .ok_or_else(|| Error::Model(format!("unknown preset {name:?}")))?;
        println!("# preset: {name}\n");
        match check {
            theory::PresetCheck::Lemma1 => {
                let r = theory::verify_lemma1(&spec);
                print!("{}", r.to_markdown());
                csv_rows.push(r.to_csv_row());
            }
            theory::PresetCheck::Theorem1 => {
                let r = theory::verify_theorem1(&spec, k);
                print!("{}", r.to_markdown());
                csv_rows.push(r.to_csv_row());
            }
            theory::PresetCheck::Theorem2 => {
                let r = theory::verify_theorem2(&spec, k);
                print!("{}", r.to_markdown());
            }
        }
        println!();
    }
    if let Some(csv) = &a.csv {
        write_bytes(csv, (csv_rows.join("\n") + "\n").as_bytes())?;
        println!("csv -> {}", csv.display());
    }
    Ok(())
}

fn cmd_dump_dict(a: DumpDictArgs) -> Result<(), Error> {
    let (model, _, _) = load_bundle(&a.model)?;
    let q = model.q_relaxed();
    let mut order: Vec<usize> = (0..model.atoms.len()).collect();
    order.sort_by(|&x, &y| q[y].partial_cmp(&q[x]).unwrap().then(x.cmp(&y)));
    order.truncate(a.top);
    if model.atoms.is_empty() {
        println!("empty dictionary");
        return Ok(());
    }
    for (rank, &i) in order.iter().enumerate() {
        let atom = &model.atoms[i];
        let code = &atom.code;
        let edges = code.edges();
        if a.dot {
            println!("graph atom{rank} {{");
            println!("  label=\"q={:.4} k={} m={}\";", q[i], code.k, edges.len());
            for v in 0..code.k {
                match &code.vattrs {
                    Some(va) => println!("  {v} [label=\"{}\"];", va[v as usize]),
                    None => println!("  {v};"),
                }
            }
            for (idx, (u, v)) in edges.iter().enumerate() {
                match &code.eattrs {
                    Some(ea) => println!("  {u} -- {v} [label=\"{}\"];", ea[idx]),
                    None => println!("  {u} -- {v};"),
                }
            }
            println!("}}");
        } else {
            println!(
                "#{rank:<3} q={:.4} k={} m={} edges={:?} store={:.2} bits",
                q[i],
                code.k,
                edges.len(),
                edges,
                atom.l_null,
            );
        }
    }
    Ok(())
}

fn cmd_fetch(a: FetchArgs) -> Result<(), Error> {
    let root = a.out.unwrap_or_else(data_root);
    fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
    let url = format!(
        "https://www.chrsmrrs.com/graphkerneldatasets/{}.zip",
        a.dataset
    );
    let zip = root.join(format!("{}.zip", a.dataset));
    let run = |prog: &str, args: &[&str]| -> Result<(), Error> {
        let status = std::process::Command::new(prog)
            .args(args)
            .status()
            .map_err(|e| Error::io(prog, e))?;
        if status.success() {
            Ok(())
        } else {
            Err(Error::Model(format!("{prog} exited with {status}")))
        }
    };
    run("curl", &["-fsSL", "-o", &zip.to_string_lossy(), &url])?;
    run(
        "unzip",
        &["-o", "-q", &zip.to_string_lossy(), "-d", &root.to_string_lossy()],
    )?;
    let _ = fs::remove_file(&zip);
    println!("{} -> {}", a.dataset, root.join(&a.dataset).display());
    Ok(())
}
