use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use rarekg::config::{ConfigError, RunConfig};
use rarekg::embedding::{load_embeddings, EmbeddingError, save_embeddings, EmbeddingFormat, EmbeddingMatrix};
use rarekg::eval::{
    diagnosis_name, emit_report, load_public_cases, parse_report_csv, parse_report_text, render_report, run_benchmark,
    BenchmarkContext, BenchmarkOptions, CaseFormat, EvalReport, MatchRule, Method, ReportFormat,
};
use rarekg::graph::{compute_ic, graph_stats, load_graph, save_graph, IcTable, KnowledgeGraph};
use rarekg::llm::{
    build_prompt, CallJournal, DiagnosisBackend, FewShotExample, HttpTransport, LiveBackend, LlmError, MockBackend,
    MockPolicy, PromptMode,
};
use rarekg::pipeline::{ingest, train_embeddings, Sources};
use rarekg::retrieval::{build_index, embed_patient, retrieve_topm, search, PatientCase, RetrievalIndex};

const GRAPH_FILE: &str = "graph.tsv";
const IC_FILE: &str = "ic.tsv";
const EMBEDDING_FILE: &str = "embeddings.emb";

/// Rare-disease knowledge graph, embeddings, case retrieval and diagnosis
/// benchmarking.
#[derive(Parser)]
#[command(name = "rarekg", version)]
struct Cli {
    /// TOML config file
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory holding the graph, embeddings, journals and reports
    #[arg(long, global = true, default_value = "run")]
    run_dir: PathBuf,

    /// Overrides the walk and training seeds
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// -v info, -vv debug
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse sources and write the graph snapshot
    Ingest {
        #[arg(long)]
        obo: PathBuf,
        #[arg(long)]
        hpoa: Vec<PathBuf>,
        #[arg(long)]
        ccrd: Vec<PathBuf>,
        /// Two-column TSV of disease codes naming the same disease
        #[arg(long)]
        xref: Option<PathBuf>,
    },
    /// Compute information content and write ic.tsv
    Ic,
    /// Print node and edge counts
    Stats,
    /// Generate walks and train node embeddings
    Train {
        #[arg(long, value_enum, default_value = "binary")]
        format: EmbFormat,
        /// Worker threads for walks and training (1 = deterministic)
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print one case's patient vector
    EmbedCase(CaseArgs),
    /// Print the most similar cases for one case
    Retrieve {
        #[command(flatten)]
        case: CaseArgs,
        #[arg(short)]
        m: Option<usize>,
        /// Let the case retrieve itself
        #[arg(long)]
        leakage: bool,
    },
    /// Render a prompt without calling a model
    Prompt {
        #[command(flatten)]
        case: CaseArgs,
        #[arg(long, default_value = "zero-shot")]
        mode: String,
        #[command(flatten)]
        pool: PoolArgs,
    },
    /// Diagnose one case
    Diagnose {
        #[command(flatten)]
        case: CaseArgs,
        #[command(flatten)]
        method: MethodArgs,
        #[command(flatten)]
        pool: PoolArgs,
    },
    /// Run a benchmark over a case file and write report.txt / report.csv
    Eval {
        #[arg(long)]
        cases: PathBuf,
        #[arg(long, value_enum, default_value = "tsv")]
        format: CaseFileFormat,
        #[command(flatten)]
        method: MethodArgs,
        #[command(flatten)]
        pool: PoolArgs,
        #[arg(long)]
        workers: Option<usize>,
        /// Manual match overrides (case_id, rank, accept|reject)
        #[arg(long)]
        overrides: Option<PathBuf>,
    },
    /// Print a report file as text or CSV
    Report {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: ReportKind,
    },
}

#[derive(Args)]
struct CaseArgs {
    /// Normal-form case file
    #[arg(long)]
    cases: PathBuf,
    #[arg(long)]
    case_id: String,
}

#[derive(Args)]
struct PoolArgs {
    /// Example pool for few-shot and knn (default: the case file itself)
    #[arg(long)]
    pool: Option<PathBuf>,
    /// Skip pool cases sharing a gold code with the query
    #[arg(long)]
    exclude_same_gold: bool,
    /// Let a case retrieve itself
    #[arg(long)]
    leakage: bool,
}

#[derive(Args)]
struct MethodArgs {
    #[arg(long, value_enum, default_value = "knn")]
    method: MethodKind,
    /// zero-shot, cot, random:<m> or dynamic:<m>
    #[arg(long)]
    mode: Option<String>,
    /// Mock answer policy: `echo` or `fixed:<a>;<b>;...`
    #[arg(long, default_value = "echo")]
    policy: String,
    /// Artificial delay per mock call
    #[arg(long)]
    mock_latency_ms: Option<u64>,
    /// Neighbours voting in the knn baseline
    #[arg(long)]
    k_pool: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodKind {
    Knn,
    Mock,
    Live,
}

#[derive(Clone, Copy, ValueEnum)]
enum EmbFormat {
    Text,
    Binary,
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseFileFormat {
    Tsv,
    Jsonl,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportKind {
    Text,
    Csv,
}

/// Argument problems found after parsing; exit code 1.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct Usage(String);

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<LlmError>() {
            return match e {
                LlmError::Transport { .. } => 3,
                LlmError::MissingCredential { .. } | LlmError::Config(_) => 1,
                _ => 2,
            };
        }
        if let Some(EmbeddingError::Config(_)) = cause.downcast_ref::<EmbeddingError>() {
            return 1;
        }
        if cause.is::<Usage>() || cause.is::<ConfigError>() {
            return 1;
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

struct Ctx {
    run_dir: PathBuf,
    config: RunConfig,
}

impl Ctx {
    fn graph(&self) -> Result<KnowledgeGraph> {
        let path = self.run_dir.join(GRAPH_FILE);
        load_graph(&path).with_context(|| format!("loading {} (run `ingest` first)", path.display()))
    }

    fn embeddings(&self, graph: &KnowledgeGraph) -> Result<EmbeddingMatrix> {
        let path = self.run_dir.join(EMBEDDING_FILE);
        load_embeddings(&path, Some(&graph.version_tag()))
            .with_context(|| format!("loading {} (run `train` first)", path.display()))
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        config.set_seed(s);
    }
    fs::create_dir_all(&cli.run_dir).with_context(|| format!("creating {}", cli.run_dir.display()))?;
    let ctx = Ctx {
        run_dir: cli.run_dir,
        config,
    };
    match cli.command {
        Command::Ingest { obo, hpoa, ccrd, xref } => cmd_ingest(&ctx, obo, hpoa, ccrd, xref),
        Command::Ic => cmd_ic(&ctx),
        Command::Stats => {
            print!("{}", graph_stats(&ctx.graph()?).to_kv_text());
            Ok(())
        }
        Command::Train { format, threads } => cmd_train(&ctx, format, threads),
        Command::EmbedCase(args) => cmd_embed_case(&ctx, &args),
        Command::Retrieve { case, m, leakage } => cmd_retrieve(&ctx, &case, m, leakage),
        Command::Prompt { case, mode, pool } => cmd_prompt(&ctx, &case, &mode, &pool),
        Command::Diagnose { case, method, pool } => cmd_diagnose(&ctx, &case, &method, &pool),
        Command::Eval {
            cases,
            format,
            method,
            pool,
            workers,
            overrides,
        } => cmd_eval(&ctx, &cases, format, &method, &pool, workers, overrides),
        Command::Report { input, format } => cmd_report(&input, format),
    }
}

fn cmd_ingest(ctx: &Ctx, obo: PathBuf, hpoa: Vec<PathBuf>, ccrd: Vec<PathBuf>, xref: Option<PathBuf>) -> Result<()> {
    let sources = Sources {
        obo,
        hpoa,
        ccrd,
        cross_references: xref,
    };
    let ing = ingest(&sources)?;
    save_graph(&ing.graph, &ctx.run_dir.join(GRAPH_FILE))?;
    let mut report = ing.build.to_text();
    report.push_str(&format!("skipped_rows={}\n", ing.skipped.len()));
    report.push_str(&ing.skipped.to_text());
    fs::write(ctx.run_dir.join("ingest_report.txt"), &report)?;
    print!("{}", graph_stats(&ing.graph).to_kv_text());
    println!("graph_version={}", ing.graph.version_tag());
    Ok(())
}

fn cmd_ic(ctx: &Ctx) -> Result<()> {
    let graph = ctx.graph()?;
    let ic = compute_ic(&graph)?;
    fs::write(ctx.run_dir.join(IC_FILE), ic.to_tsv())?;
    let max = ic.iter().map(|(_, _, v)| v).fold(0.0f64, f64::max);
    println!("terms={}\nannotated_diseases={}\nmax_ic={max:.6}", ic.len(), ic.total_diseases());
    Ok(())
}

fn cmd_train(ctx: &Ctx, format: EmbFormat, threads: Option<usize>) -> Result<()> {
    let graph = ctx.graph()?;
    let ic = compute_ic(&graph)?;
    let mut train = ctx.config.train;
    if let Some(t) = threads {
        train.threads = t;
    }
    let out = train_embeddings(&graph, &ic, &ctx.config.walk, &train)?;
    let format = match format {
        EmbFormat::Text => EmbeddingFormat::Text,
        EmbFormat::Binary => EmbeddingFormat::Binary,
    };
    save_embeddings(&out.matrix, &ctx.run_dir.join(EMBEDDING_FILE), format)?;
    for (i, l) in out.epoch_losses.iter().enumerate() {
        println!("epoch={} loss={l:.6}", i + 1);
    }
    println!("vocab={} dim={}", out.matrix.len(), out.matrix.dim());
    Ok(())
}

fn load_case_file(path: &Path) -> Result<Vec<PatientCase>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(rarekg::retrieval::parse_case_file(&text).with_context(|| format!("parsing {}", path.display()))?)
}

fn find_case(path: &Path, id: &str) -> Result<(PatientCase, Vec<PatientCase>)> {
    let cases = load_case_file(path)?;
    let case = cases
        .iter()
        .find(|c| c.case_id == id)
        .cloned()
        .ok_or_else(|| anyhow!("case {id} not found in {}", path.display()))?;
    Ok((case, cases))
}

fn cmd_embed_case(ctx: &Ctx, args: &CaseArgs) -> Result<()> {
    let (case, _) = find_case(&args.cases, &args.case_id)?;
    let graph = ctx.graph()?;
    let ic = compute_ic(&graph)?;
    let matrix = ctx.embeddings(&graph)?;
    let v = embed_patient(&case, &ic, &matrix)?;
    let join = |ts: &[rarekg::ontology::TermId]| ts.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(",");
    println!("case_id={}", v.case_id);
    println!("resolved={}", join(&v.resolved_terms));
    println!("dropped={}", join(&v.dropped_terms));
    println!("vector={}", v.vector.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "));
    Ok(())
}

struct Retrieval {
    graph: KnowledgeGraph,
    ic: IcTable,
    matrix: EmbeddingMatrix,
    index: RetrievalIndex,
    pool: Vec<PatientCase>,
}

fn prepare_retrieval(ctx: &Ctx, pool: Vec<PatientCase>) -> Result<Retrieval> {
    let graph = ctx.graph()?;
    let ic = compute_ic(&graph)?;
    let matrix = ctx.embeddings(&graph)?;
    let (index, report) = build_index(&pool, &ic, &matrix)?;
    for (id, reason) in &report.failures {
        log::warn!("pool case {id} left out: {reason}");
    }
    Ok(Retrieval {
        graph,
        ic,
        matrix,
        index,
        pool,
    })
}

fn cmd_retrieve(ctx: &Ctx, args: &CaseArgs, m: Option<usize>, leakage: bool) -> Result<()> {
    let (case, cases) = find_case(&args.cases, &args.case_id)?;
    let r = prepare_retrieval(ctx, cases)?;
    let q = embed_patient(&case, &r.ic, &r.matrix)?;
    let m = m.unwrap_or(ctx.config.retrieval.m);
    let found = if leakage {
        search(&r.index, &q.vector, m, &BTreeSet::new())?
    } else {
        retrieve_topm(&r.index, &q, m, &BTreeSet::new())?
    };
    for n in found {
        println!("{}\t{:.6}", n.case_id, n.cosine);
    }
    Ok(())
}

fn pool_cases(pool: &PoolArgs, default: Vec<PatientCase>) -> Result<Vec<PatientCase>> {
    match &pool.pool {
        Some(p) => load_case_file(p),
        None => Ok(default),
    }
}

fn bench_options(ctx: &Ctx, pool: &PoolArgs, workers: Option<usize>) -> BenchmarkOptions {
    let r = &ctx.config.retrieval;
    BenchmarkOptions {
        run_dir: Some(ctx.run_dir.clone()),
        workers: workers.unwrap_or(ctx.config.bench.workers),
        seed: ctx.config.seed.unwrap_or(42),
        exclude_same_gold: pool.exclude_same_gold || r.exclude_same_gold,
        self_exclusion: !pool.leakage && r.self_exclusion,
    }
}

fn parse_mode(s: &str) -> Result<PromptMode> {
    s.parse::<PromptMode>().map_err(|e| Usage(e.to_string()).into())
}

/// Few-shot examples for one case, chosen the way the benchmark does.
fn examples_for(r: &Retrieval, case: &PatientCase, mode: PromptMode, opts: &BenchmarkOptions) -> Result<Vec<FewShotExample>> {
    let m = mode.shots();
    if m == 0 {
        return Ok(Vec::new());
    }
    let mut exclude = BTreeSet::new();
    if opts.exclude_same_gold {
        exclude = r.index.cases_sharing_gold(&case.gold_diagnoses);
        if !opts.self_exclusion {
            exclude.remove(&case.case_id);
        }
    }
    let picked: Vec<(String, f64)> = match mode {
        PromptMode::DynamicFewShot(_) => {
            let q = embed_patient(case, &r.ic, &r.matrix)?;
            let found = if opts.self_exclusion {
                retrieve_topm(&r.index, &q, m, &exclude)?
            } else {
                search(&r.index, &q.vector, m, &exclude)?
            };
            found.into_iter().map(|n| (n.case_id, n.cosine)).collect()
        }
        _ => r
            .pool
            .iter()
            .filter(|c| !exclude.contains(&c.case_id) && c.case_id != case.case_id)
            .take(m)
            .map(|c| (c.case_id.clone(), 0.0))
            .collect(),
    };
    if picked.len() < m {
        bail!("only {} examples available, mode needs {m}", picked.len());
    }
    picked
        .into_iter()
        .map(|(id, similarity)| {
            let ex = r.pool.iter().find(|c| c.case_id == id).expect("pool case").clone();
            Ok(FewShotExample {
                diagnosis_name: diagnosis_name(&r.graph, &ex.gold_diagnoses),
                case: ex,
                similarity,
            })
        })
        .collect()
}

fn cmd_prompt(ctx: &Ctx, args: &CaseArgs, mode: &str, pool: &PoolArgs) -> Result<()> {
    let mode = parse_mode(mode)?;
    let (case, cases) = find_case(&args.cases, &args.case_id)?;
    let opts = bench_options(ctx, pool, None);
    let prompt = if mode.shots() == 0 {
        build_prompt(&case, mode, &[], &ctx.graph()?)?
    } else {
        let r = prepare_retrieval(ctx, pool_cases(pool, cases)?)?;
        let examples = examples_for(&r, &case, mode, &opts)?;
        build_prompt(&case, mode, &examples, &r.graph)?
    };
    println!("[system]\n{}\n\n[user]\n{}", prompt.system_text, prompt.user_text);
    if !prompt.example_ids.is_empty() {
        println!("\n[examples]\n{}", prompt.example_ids.join("\n"));
    }
    Ok(())
}

fn make_backend(ctx: &Ctx, args: &MethodArgs) -> Result<Box<dyn DiagnosisBackend>> {
    Ok(match args.method {
        MethodKind::Knn => unreachable!("knn has no backend"),
        MethodKind::Mock => {
            let policy = if args.policy == "echo" {
                MockPolicy::EchoFirstExample
            } else if let Some(list) = args.policy.strip_prefix("fixed:") {
                MockPolicy::FixedList(list.split(';').map(str::to_string).collect())
            } else {
                return Err(Usage(format!("unknown mock policy {:?} (echo, fixed:<a>;<b>)", args.policy)).into());
            };
            Box::new(MockBackend {
                policy,
                latency: args.mock_latency_ms.map(Duration::from_millis),
            })
        }
        MethodKind::Live => {
            let backend = LiveBackend::new(ctx.config.backend.clone(), Box::new(HttpTransport::new()?))?
                .with_journal(CallJournal::new(&ctx.run_dir.join("calls"))?);
            backend.check_credential()?;
            Box::new(backend)
        }
    })
}

fn default_mode(ctx: &Ctx, args: &MethodArgs) -> Result<PromptMode> {
    match &args.mode {
        Some(m) => parse_mode(m),
        None => Ok(PromptMode::DynamicFewShot(ctx.config.retrieval.m)),
    }
}

fn cmd_diagnose(ctx: &Ctx, args: &CaseArgs, method: &MethodArgs, pool: &PoolArgs) -> Result<()> {
    let (case, cases) = find_case(&args.cases, &args.case_id)?;
    let opts = bench_options(ctx, pool, None);
    let r = prepare_retrieval(ctx, pool_cases(pool, cases)?)?;
    let predictions: Vec<String> = match method.method {
        MethodKind::Knn => {
            let q = embed_patient(&case, &r.ic, &r.matrix)?;
            let k = method.k_pool.unwrap_or(ctx.config.retrieval.k_pool);
            let mut exclude = BTreeSet::new();
            if opts.exclude_same_gold {
                exclude = r.index.cases_sharing_gold(&case.gold_diagnoses);
            }
            rarekg::retrieval::knn_diagnose(&r.index, &q, k, &exclude)?
                .into_iter()
                .map(|d| {
                    let name = r.graph.disease_by_code(&d.code).map_or(d.code.clone(), |e| e.primary_name().to_string());
                    format!("{name}\t{}\t{:.6}", d.code, d.score)
                })
                .collect()
        }
        MethodKind::Mock | MethodKind::Live => {
            let backend = make_backend(ctx, method)?;
            let mode = default_mode(ctx, method)?;
            let examples = examples_for(&r, &case, mode, &opts)?;
            let prompt = build_prompt(&case, mode, &examples, &r.graph)?;
            backend.diagnose(&prompt, &case.case_id)?.response.ranked_diagnoses
        }
    };
    for (i, p) in predictions.iter().enumerate() {
        println!("{}. {p}", i + 1);
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_eval(
    ctx: &Ctx,
    cases_path: &Path,
    format: CaseFileFormat,
    method_args: &MethodArgs,
    pool_args: &PoolArgs,
    workers: Option<usize>,
    overrides: Option<PathBuf>,
) -> Result<()> {
    let format = match format {
        CaseFileFormat::Tsv => CaseFormat::Tsv,
        CaseFileFormat::Jsonl => CaseFormat::Jsonl,
    };
    let loaded = load_public_cases(cases_path, format)?;
    let cases = loaded.cases.clone();
    let pool = pool_cases(pool_args, cases.clone())?;
    let graph = ctx.graph()?;
    let ic = compute_ic(&graph)?;

    let mut rule = MatchRule::from_graph(&graph);
    if let Some(p) = overrides.or_else(|| ctx.config.bench.overrides.clone()) {
        rule = rule.with_overrides(&fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?)?;
    }

    let backend = match method_args.method {
        MethodKind::Knn => None,
        _ => Some(make_backend(ctx, method_args)?),
    };
    let method = match &backend {
        None => Method::Knn {
            k_pool: method_args.k_pool.unwrap_or(ctx.config.retrieval.k_pool),
        },
        Some(b) => Method::Llm {
            backend: b.as_ref(),
            mode: default_mode(ctx, method_args)?,
        },
    };
    let needs_embeddings = matches!(
        method,
        Method::Knn { .. } | Method::Llm { mode: PromptMode::DynamicFewShot(_), .. }
    );
    let (matrix, index) = if needs_embeddings {
        let matrix = ctx.embeddings(&graph)?;
        let (index, report) = build_index(&pool, &ic, &matrix)?;
        for (id, reason) in &report.failures {
            log::warn!("pool case {id} left out: {reason}");
        }
        (Some(matrix), Some(index))
    } else {
        (None, None)
    };
    let bctx = BenchmarkContext {
        graph: &graph,
        ic: &ic,
        matrix: matrix.as_ref(),
        index: index.as_ref(),
        pool: &pool,
        rule: &rule,
    };
    let opts = bench_options(ctx, pool_args, workers);
    let outcome = run_benchmark(&cases, &method, &bctx, &opts)?;

    let mut report = EvalReport::default();
    let meta = &mut report.metadata;
    meta.insert("graph_version".into(), graph.version_tag());
    if let Some(m) = &matrix {
        let h = m.header();
        meta.insert("embedding".into(), format!("dim={} vocab={} graph={}", h.dim, h.vocab, h.graph_version));
        meta.insert("embedding_config".into(), h.config.clone());
    }
    let file_name = cases_path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    meta.insert("cases_file".into(), file_name);
    meta.insert("cases".into(), cases.len().to_string());
    meta.insert("dropped_short_cases".into(), loaded.dropped_short.to_string());
    meta.insert("method".into(), method.label());
    if let Some(b) = &backend {
        meta.insert("backend".into(), b.describe());
    }
    let mut options = String::new();
    let _ = write!(
        options,
        "seed={} self_exclusion={} exclude_same_gold={}",
        opts.seed, opts.self_exclusion, opts.exclude_same_gold
    );
    if let Method::Knn { k_pool } = method {
        let _ = write!(options, " k_pool={k_pool}");
    }
    meta.insert("options".into(), options);
    report.echo_overrides(&rule);
    report.methods.push(outcome.report);

    emit_report(&report, &ctx.run_dir.join("report.txt"), ReportFormat::Text)?;
    emit_report(&report, &ctx.run_dir.join("report.csv"), ReportFormat::Csv)?;
    print!("{}", render_report(&report, ReportFormat::Csv));
    eprintln!(
        "predicted={} resumed={} failed={}",
        outcome.predicted,
        outcome.resumed,
        outcome.failures.len()
    );
    for (id, reason) in &outcome.failures {
        eprintln!("failed {id}: {reason}");
    }
    if matches!(method_args.method, MethodKind::Live) && !outcome.failures.is_empty() {
        return Err(LlmError::Transport {
            attempts: 0,
            status: None,
            message: format!("{} case(s) failed; see report.txt", outcome.failures.len()),
        }
        .into());
    }
    Ok(())
}

fn cmd_report(input: &Path, format: ReportKind) -> Result<()> {
    let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let report = if text.starts_with("#RAREKG-REPORT") {
        parse_report_text(&text)?
    } else {
        // a CSV carries only the summary rows
        let rows = parse_report_csv(&text)?;
        if matches!(format, ReportKind::Csv) {
            print!("{text}");
            return Ok(());
        }
        let mut report = EvalReport::default();
        for r in rows {
            report.methods.push(rarekg::eval::MethodReport {
                method: r.method,
                cases: r.cases,
                hits: r.hits,
                median_rank: r.median_rank,
                ranks: Vec::new(),
                incomplete: Vec::new(),
            });
        }
        report
    };
    let format = match format {
        ReportKind::Text => ReportFormat::Text,
        ReportKind::Csv => ReportFormat::Csv,
    };
    print!("{}", render_report(&report, format));
    Ok(())
}
