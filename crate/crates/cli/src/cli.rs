//! Command-line entry points. Every command prints JSON on stdout; failures
//! become a [`CliError`] that `main` prints as JSON on stderr.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use gaplens_core::aggregate::Window;
use gaplens_core::dialogue::retrieval::{
    ingest_course_material, load_corpus_dir, ChunkIndex, Retriever, DEFAULT_CHUNK_CHARS, DEFAULT_OVERLAP_CHARS,
    DEFAULT_TOP_K,
};
use gaplens_core::eval::{completeness, validate_profiles, Harness, SimulationMode, StudentProfile};
use gaplens_core::fixtures::{self, Transcript};
use gaplens_core::llm::ProviderConfig;
use gaplens_core::store::{replay, EventStore};
use gaplens_core::{
    parse_kc_list, Clock, DialogueAgent, DialogueConfig, FixedClock, GapConfig, GapIdentifier, Gateway, KcRegistry,
    ScriptedProvider, SystemClock,
};

use crate::app::{self, AppState, ServiceConfig};
use crate::demo::DemoProviders;

pub const ENV_INSTRUCTOR_TOKEN: &str = "QQ_INSTRUCTOR_TOKEN";
pub const ENV_PSEUDONYM_SALT: &str = "QQ_PSEUDONYM_SALT";

#[derive(Debug, Clone, Serialize, thiserror::Error)]
#[error("{kind}: {message}")]
pub struct CliError {
    #[serde(rename = "error")]
    pub kind: String,
    pub message: String,
}

impl CliError {
    pub fn new(kind: impl Into<String>, message: impl Into<String>) -> Self {
        Self { kind: kind.into(), message: message.into() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("error serializes")
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::new("Io", format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "gaplens", version, about = "Find class-wide knowledge gaps in tutoring dialogues")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP service.
    Serve(ServeArgs),
    /// Chunk and index a course corpus; optionally run a test query.
    Ingest(IngestArgs),
    /// Check a KC list file.
    ValidateKc(ValidateArgs),
    /// Analyze a file of transcripts and print session reports.
    Analyze(AnalyzeArgs),
    /// Run the simulated-student benchmark.
    Simulate(SimulateArgs),
    /// Print the top-n gap report rebuilt from an event log.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub kc_list: Option<PathBuf>,
    /// Directory of UTF-8 course files.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// `env` (QQ_PROVIDER_URL / QQ_MODEL), an endpoint URL, or `scripted:<file>`.
    #[arg(long, default_value = "env")]
    pub provider: String,
    /// Scripted providers and bundled fixtures; no network.
    #[arg(long)]
    pub demo: bool,
    #[arg(long)]
    pub log_path: Option<PathBuf>,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = app::DEFAULT_WORKERS)]
    pub workers: usize,
    #[arg(long, default_value_t = app::DEFAULT_LECTURE_MINUTES)]
    pub lecture_minutes: i64,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = DEFAULT_CHUNK_CHARS)]
    pub chunk_chars: usize,
    #[arg(long, default_value_t = DEFAULT_OVERLAP_CHARS)]
    pub overlap_chars: usize,
    #[arg(long)]
    pub query: Option<String>,
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    pub top_k: usize,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub kc_list: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long, required_unless_present = "demo")]
    pub kc_list: Option<PathBuf>,
    /// JSON array of `{dialogue_id, messages}`.
    #[arg(long, required_unless_present = "demo")]
    pub transcripts: Option<PathBuf>,
    /// JSON object mapping dialogue_id to its labeled KC ids.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, default_value = "env")]
    pub provider: String,
    /// Use the bundled 20-dialogue fixture, its labels and its scripted analyst.
    #[arg(long)]
    pub demo: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Scripted,
    ModelDriven,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, required_unless_present = "demo")]
    pub kc_list: Option<PathBuf>,
    #[arg(long, required_unless_present = "demo")]
    pub corpus: Option<PathBuf>,
    #[arg(long, required_unless_present = "demo")]
    pub profiles: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "scripted")]
    pub mode: ModeArg,
    /// Provider for tutor, analyst and (model-driven) student.
    #[arg(long, default_value = "env")]
    pub provider: String,
    /// Scripted tutor replies (JSON string array); overrides --provider for the tutor.
    #[arg(long)]
    pub dialogue_script: Option<PathBuf>,
    /// Scripted analyst replies; overrides --provider for the analyst.
    #[arg(long)]
    pub analysis_script: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub max_turns: usize,
    /// Bundled 20-profile benchmark with its scripts.
    #[arg(long)]
    pub demo: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum WindowArg {
    All,
    Lecture,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub log_path: PathBuf,
    #[arg(long)]
    pub kc_list: PathBuf,
    #[arg(long, default_value_t = app::DEFAULT_TOP_N)]
    pub top: usize,
    #[arg(long, value_enum, default_value = "all")]
    pub window: WindowArg,
    #[arg(long, default_value_t = app::DEFAULT_LECTURE_MINUTES)]
    pub lecture_minutes: i64,
    #[arg(long, value_enum, default_value = "json")]
    pub format: FormatArg,
}

// ---------------------------------------------------------------------------
// Loading helpers

pub fn load_registry(path: &Path) -> Result<KcRegistry, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    parse_kc_list(&text).map_err(|e| CliError::new(e.kind(), format!("{}: {e}", path.display())))
}

pub fn load_index(dir: &Path, chunk_chars: usize, overlap_chars: usize) -> Result<(usize, ChunkIndex), CliError> {
    let docs = load_corpus_dir(dir).map_err(|e| CliError::new("Corpus", format!("{}: {e}", dir.display())))?;
    let index = ingest_course_material(&docs, chunk_chars, overlap_chars)
        .map_err(|e| CliError::new("Corpus", format!("{}: {e}", dir.display())))?;
    Ok((docs.len(), index))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::new("MalformedInput", format!("{}: {e}", path.display())))
}

fn scripted_from_file(path: &Path) -> Result<Gateway, CliError> {
    let replies: Vec<String> = read_json(path)?;
    Ok(Gateway::scripted(Arc::new(ScriptedProvider::new(replies))))
}

/// `env`, an endpoint URL, or `scripted:<file>`.
pub fn gateway_for(spec: &str) -> Result<Gateway, CliError> {
    if let Some(file) = spec.strip_prefix("scripted:") {
        return scripted_from_file(Path::new(file));
    }
    let config = if spec == "env" {
        ProviderConfig::from_env()
    } else {
        let model = std::env::var(gaplens_core::llm::ENV_MODEL)
            .map_err(|_| CliError::new("InvalidConfig", "QQ_MODEL is not set"))?;
        let mut c = ProviderConfig::new(spec, model);
        c.api_key_var = std::env::var(gaplens_core::llm::ENV_API_KEY_VAR).ok();
        Ok(c)
    }
    .map_err(|e| CliError::new("InvalidConfig", format!("--provider {spec}: {e}")))?;
    Gateway::http(config).map_err(|e| CliError::new("InvalidConfig", format!("--provider {spec}: {e}")))
}

fn print_json(value: &impl Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("output serializes"));
}

// ---------------------------------------------------------------------------
// Commands

pub async fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Serve(args) => serve(args).await,
        Command::Ingest(args) => ingest(args),
        Command::ValidateKc(args) => validate_kc(args),
        Command::Analyze(args) => analyze(args).await,
        Command::Simulate(args) => simulate(args).await,
        Command::Report(args) => report(args),
    }
}

/// Everything `serve` needs, validated, before the socket is bound.
pub struct ServeSetup {
    pub state: Arc<AppState>,
    pub demo: Option<DemoProviders>,
}

pub fn build_service(args: &ServeArgs) -> Result<ServeSetup, CliError> {
    let registry = match (&args.kc_list, args.demo) {
        (Some(path), _) => load_registry(path)?,
        (None, true) => fixtures::registry(),
        (None, false) => return Err(CliError::new("MissingFlag", "--kc-list is required (or run with --demo)")),
    };
    let index = match (&args.corpus, args.demo) {
        (Some(dir), _) => load_index(dir, DEFAULT_CHUNK_CHARS, DEFAULT_OVERLAP_CHARS)?.1,
        (None, true) => fixtures::corpus_index(),
        (None, false) => return Err(CliError::new("MissingFlag", "--corpus is required (or run with --demo)")),
    };
    let token = std::env::var(ENV_INSTRUCTOR_TOKEN).ok().filter(|t| !t.is_empty());
    let token = match (token, args.demo) {
        (Some(t), _) => Some(t),
        (None, true) => Some("demo".to_string()),
        (None, false) => {
            return Err(CliError::new("MissingEnv", format!("{ENV_INSTRUCTOR_TOKEN} must be set to protect report endpoints")))
        }
    };
    if args.lecture_minutes <= 0 {
        return Err(CliError::new("InvalidConfig", "--lecture-minutes must be positive"));
    }
    let (tutor, analyst, demo) = if args.demo {
        let d = DemoProviders::new();
        (d.tutor_gateway(), d.analyst_gateway(), Some(d))
    } else {
        let g = gateway_for(&args.provider)?;
        (g.clone(), g, None)
    };
    let registry = Arc::new(registry);
    let clock: Arc<dyn Clock> = Arc::new(SystemClock);
    let agent = DialogueAgent::new(tutor, Arc::new(index), DialogueConfig::default()).with_clock(clock.clone());
    let identifier = GapIdentifier::new(analyst, registry.clone(), GapConfig::default());
    let store = match &args.log_path {
        Some(path) => EventStore::open(path, registry.course_id(), registry.version())
            .map_err(|e| CliError::new("EventLog", format!("{}: {e}", path.display())))?,
        None => EventStore::in_memory(registry.course_id(), registry.version()),
    };
    let config = ServiceConfig {
        instructor_token: token,
        pseudonym_salt: std::env::var(ENV_PSEUDONYM_SALT).unwrap_or_else(|_| ServiceConfig::default().pseudonym_salt),
        workers: args.workers.max(1),
        lecture_minutes: args.lecture_minutes,
    };
    let state = AppState::start(store, Arc::new(agent), Arc::new(identifier), clock, config);
    Ok(ServeSetup { state, demo })
}

async fn serve(args: ServeArgs) -> Result<(), CliError> {
    let setup = build_service(&args)?;
    let addr = format!("{}:{}", args.host, args.port);
    let listener = tokio::net::TcpListener::bind(&addr)
        .await
        .map_err(|e| CliError::new("Bind", format!("{addr}: {e}")))?;
    tracing::info!(%addr, demo = args.demo, "listening");
    eprintln!("{}", json!({ "listening": addr, "demo": args.demo }));
    axum::serve(listener, app::router(setup.state))
        .await
        .map_err(|e| CliError::new("Serve", e.to_string()))
}

fn ingest(args: IngestArgs) -> Result<(), CliError> {
    let (documents, index) = load_index(&args.corpus, args.chunk_chars, args.overlap_chars)?;
    let mut out = json!({
        "documents": documents,
        "chunks": index.len(),
        "chunk_chars": args.chunk_chars,
        "overlap_chars": args.overlap_chars,
    });
    if let Some(q) = &args.query {
        let hits: Vec<Value> = index
            .retrieve(q, args.top_k)
            .into_iter()
            .map(|h| json!({ "doc_id": h.chunk.doc_id, "seq": h.chunk.seq, "start": h.chunk.start, "score": h.score }))
            .collect();
        out["hits"] = Value::Array(hits);
    }
    print_json(&out);
    Ok(())
}

fn validate_kc(args: ValidateArgs) -> Result<(), CliError> {
    let reg = load_registry(&args.kc_list)?;
    let max_depth = reg.components().iter().map(|k| k.id.depth()).max().unwrap_or(0);
    print_json(&json!({
        "course_id": reg.course_id(),
        "components": reg.len(),
        "max_depth": max_depth,
        "version": reg.version(),
    }));
    Ok(())
}

async fn analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let (registry, transcripts, labels, gateway) = if args.demo {
        let f = fixtures::completeness_fixture();
        let analyst = Gateway::scripted(Arc::new(ScriptedProvider::new(f.analysis_script.clone())));
        ((*f.registry).clone(), f.transcripts, Some(f.labels), analyst)
    } else {
        let registry = load_registry(args.kc_list.as_deref().expect("required by clap"))?;
        let transcripts: Vec<Transcript> = read_json(args.transcripts.as_deref().expect("required by clap"))?;
        let labels = args.labels.as_deref().map(read_json).transpose()?;
        (registry, transcripts, labels, gateway_for(&args.provider)?)
    };
    let registry = Arc::new(registry);
    let identifier = GapIdentifier::new(gateway, registry.clone(), GapConfig::default());
    let mut reports = Vec::with_capacity(transcripts.len());
    for t in &transcripts {
        let mut session = gaplens_core::DialogueSession::new(
            t.dialogue_id.clone(),
            registry.course_id(),
            t.dialogue_id.clone(),
            FixedClock::epoch().now(),
        );
        for m in &t.messages {
            session
                .push(m.clone(), FixedClock::epoch().now())
                .map_err(|e| CliError::new("MalformedInput", format!("dialogue {}: {e}", t.dialogue_id)))?;
        }
        reports.push(identifier.analyze_session(&session).await);
    }
    let mut out = json!({ "registry_version": registry.version(), "reports": reports });
    if let Some(labels) = labels {
        let c = completeness(&labels, &reports).map_err(|e| CliError::new("Labels", e.to_string()))?;
        out["completeness"] = json!(c.fraction);
        out["per_dialogue"] = json!(c.per_dialogue);
    }
    print_json(&out);
    Ok(())
}

async fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let bench = fixtures::canonical_benchmark();
    let (registry, index, profiles) = if args.demo {
        (bench.registry.clone(), fixtures::corpus_index(), bench.profiles.clone())
    } else {
        let registry = Arc::new(load_registry(args.kc_list.as_deref().expect("required by clap"))?);
        let index = load_index(args.corpus.as_deref().expect("required by clap"), DEFAULT_CHUNK_CHARS, DEFAULT_OVERLAP_CHARS)?.1;
        let profiles: Vec<StudentProfile> = read_json(args.profiles.as_deref().expect("required by clap"))?;
        (registry, index, profiles)
    };
    validate_profiles(&profiles, &registry).map_err(|e| CliError::new("Profiles", e.to_string()))?;

    let scripted = |path: &Option<PathBuf>, bundled: &[String]| -> Result<Option<Gateway>, CliError> {
        match path {
            Some(p) => scripted_from_file(p).map(Some),
            None if args.demo => Ok(Some(Gateway::scripted(Arc::new(ScriptedProvider::new(bundled.to_vec()))))),
            None => Ok(None),
        }
    };
    let tutor_script = scripted(&args.dialogue_script, &bench.dialogue_script)?;
    let analyst_script = scripted(&args.analysis_script, &bench.analysis_script)?;
    let needs_provider =
        tutor_script.is_none() || analyst_script.is_none() || matches!(args.mode, ModeArg::ModelDriven);
    let provider = if needs_provider { Some(gateway_for(&args.provider)?) } else { None };
    let pick = |g: Option<Gateway>| g.or_else(|| provider.clone()).expect("provider present when a script is missing");

    let clock: Arc<dyn Clock> = Arc::new(FixedClock::epoch());
    let agent = DialogueAgent::new(pick(tutor_script), Arc::new(index), DialogueConfig::default()).with_clock(clock.clone());
    let identifier = GapIdentifier::new(pick(analyst_script), registry.clone(), GapConfig::default());
    let mut harness =
        Harness::new(Arc::new(agent), Arc::new(identifier)).with_clock(clock).with_max_turns(args.max_turns);
    let mode = match args.mode {
        ModeArg::Scripted => SimulationMode::Scripted,
        ModeArg::ModelDriven => {
            harness = harness.with_student_model(provider.clone().expect("model-driven needs a provider"));
            SimulationMode::ModelDriven
        }
    };
    let outcome = harness.run_benchmark(&profiles, mode).await.map_err(|e| CliError::new("Simulation", e.to_string()))?;
    let per_profile: Vec<Value> = outcome
        .results
        .iter()
        .map(|r| {
            json!({
                "profile_id": r.profile_id,
                "missing_kc": r.missing_kc,
                "detected": r.detected,
                "first_turn": r.first_turn,
                "top1_match": r.top1_match,
            })
        })
        .collect();
    print_json(&json!({
        "metrics": outcome.metrics,
        "distribution": outcome.distribution,
        "results": per_profile,
        "failures": outcome.failures,
    }));
    Ok(())
}

fn report(args: ReportArgs) -> Result<(), CliError> {
    if args.top == 0 {
        return Err(CliError::new("InvalidRequest", "--top must be at least 1"));
    }
    let registry = load_registry(&args.kc_list)?;
    let file = std::fs::File::open(&args.log_path).map_err(|e| io_error(&args.log_path, e))?;
    let state = replay(std::io::BufReader::new(file), registry.course_id(), registry.version())
        .map_err(|e| CliError::new("CorruptEvent", e.to_string()))?;
    let window = match args.window {
        WindowArg::All => None,
        WindowArg::Lecture => {
            let now = SystemClock.now();
            Some(Window { start: now - chrono::Duration::minutes(args.lecture_minutes), end: now + chrono::Duration::milliseconds(1) })
        }
    };
    let report = state.aggregator.top_n(args.top, window);
    match args.format {
        FormatArg::Json => print_json(&report),
        FormatArg::Csv => print!("{}", report.to_csv()),
    }
    Ok(())
}
