mod config;

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use tempfile::NamedTempFile;
use truthdiscover::baselines::{truthfinder, vote_all, Method, TruthFinderConfig};
use truthdiscover::engine::{resolve_all_with, EngineConfig, Resolution};
use truthdiscover::eval::{
    compare, generate, ComparisonReport, Contender, GoldStandard, MethodSettings, SeedReport, SynthConfig,
};
use truthdiscover::exec::Execution;
use truthdiscover::pipeline::{assemble, corpus_priors, Corpus};
use truthdiscover::prior::{compute_prior_with, normalize_prior, PriorConfig};
use truthdiscover::rdf::{
    open_input, parse_triples, DropReason, ParseMode, PredicateAlignment, RdfFormat, RdfStatement, SourcePolicy,
};
use truthdiscover::report::{write_baseline, write_resolution};
use truthdiscover::similarity::SimilarityConfig;

use config::FileConfig;

#[derive(Parser)]
#[command(name = "truthdiscover", version, about = "Resolve conflicting Linked Data objects")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Resolve every conflict set in the inputs.
    Resolve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        prior: PriorFlags,
        #[command(flatten)]
        engine: EngineFlags,
    },
    /// Rank sources by their sameAs topology only.
    Prior {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        prior: PriorFlags,
    },
    /// Write a synthetic corpus and its gold standard.
    Synth {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        synth: SynthFlags,
    },
    /// Score truthdiscover, vote and truthfinder against a gold standard.
    Eval {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        prior: PriorFlags,
        #[command(flatten)]
        engine: EngineFlags,
        #[command(flatten)]
        synth: SynthFlags,
        /// Gold standard TSV for `--input` corpora; without inputs a
        /// synthetic corpus is generated per run.
        #[arg(long)]
        gold: Option<PathBuf>,
        /// Number of synthetic corpora, seeded `seed, seed + 1, ...`.
        #[arg(long, default_value_t = 1)]
        runs: u64,
    },
    /// Resolve with a comparison method.
    Baseline {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "vote")]
        method: Method,
    },
}

#[derive(Args, Clone, Default)]
struct Common {
    /// N-Triples or N-Quads files, optionally gzipped.
    #[arg(long = "input", value_name = "PATH", num_args = 1..)]
    inputs: Vec<PathBuf>,
    #[arg(long, value_name = "host|pld|graph")]
    policy: Option<SourcePolicy>,
    /// Predicate alignment TSV.
    #[arg(long, value_name = "TSV")]
    alignment: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "TOML")]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Fail on the first malformed input line instead of skipping it.
    #[arg(long)]
    strict: bool,
}

#[derive(Args, Clone, Default)]
struct PriorFlags {
    /// Prior damping factor.
    #[arg(long)]
    damping: Option<f64>,
    #[arg(long)]
    prior_tolerance: Option<f64>,
    #[arg(long)]
    max_sweeps: Option<usize>,
}

#[derive(Args, Clone, Default)]
struct EngineFlags {
    #[arg(long)]
    outer_threshold: Option<f64>,
    #[arg(long)]
    outer_max: Option<usize>,
    #[arg(long)]
    bp_damping: Option<f64>,
    #[arg(long)]
    bp_tol: Option<f64>,
    #[arg(long)]
    bp_max: Option<usize>,
    #[arg(long)]
    edge_threshold: Option<f64>,
    #[arg(long)]
    coupling: Option<f64>,
    #[arg(long)]
    dissimilar_false: Option<f64>,
    #[arg(long)]
    initial_trust: Option<f64>,
}

#[derive(Args, Clone, Default)]
struct SynthFlags {
    #[arg(long)]
    sources: Option<usize>,
    #[arg(long)]
    entities: Option<usize>,
    #[arg(long)]
    conflict_predicates: Option<usize>,
    #[arg(long)]
    conflicts: Option<usize>,
    #[arg(long)]
    values: Option<usize>,
    #[arg(long)]
    fidelity: Option<f64>,
    /// Every candidate value gets exactly one supporter.
    #[arg(long)]
    uniform_support: bool,
}

fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

impl PriorFlags {
    fn apply(&self, cfg: &mut PriorConfig) {
        set(&mut cfg.damping, self.damping);
        set(&mut cfg.tolerance, self.prior_tolerance);
        set(&mut cfg.max_sweeps, self.max_sweeps);
    }
}

impl EngineFlags {
    fn apply(&self, cfg: &mut EngineConfig) {
        set(&mut cfg.outer_threshold, self.outer_threshold);
        set(&mut cfg.outer_max, self.outer_max);
        set(&mut cfg.bp_damping, self.bp_damping);
        set(&mut cfg.bp_tol, self.bp_tol);
        set(&mut cfg.bp_max, self.bp_max);
        set(&mut cfg.edge_threshold, self.edge_threshold);
        set(&mut cfg.coupling, self.coupling);
        set(&mut cfg.dissimilar_false, self.dissimilar_false);
        set(&mut cfg.initial_trust, self.initial_trust);
    }
}

impl SynthFlags {
    fn apply(&self, cfg: &mut SynthConfig) {
        set(&mut cfg.n_sources, self.sources);
        set(&mut cfg.n_entities, self.entities);
        set(&mut cfg.n_conflict_predicates, self.conflict_predicates);
        if self.conflicts.is_some() {
            cfg.n_conflicts = self.conflicts;
        }
        set(&mut cfg.values_per_conflict, self.values);
        set(&mut cfg.sameas_fidelity, self.fidelity);
        if self.uniform_support {
            cfg.uniform_support = true;
        }
    }
}

/// Flags, config file and defaults merged in that order of precedence.
struct Settings {
    inputs: Vec<PathBuf>,
    policy: SourcePolicy,
    alignment: Option<PathBuf>,
    out: PathBuf,
    seed: Option<u64>,
    threads: Option<usize>,
    mode: ParseMode,
    prior: PriorConfig,
    similarity: SimilarityConfig,
    engine: EngineConfig,
    truthfinder: TruthFinderConfig,
    synth: SynthConfig,
}

impl Settings {
    fn new(common: &Common) -> Result<Settings> {
        let file = match &common.config {
            Some(path) => {
                let base = path.parent().unwrap_or(Path::new("."));
                FileConfig::load(path)?.resolve_paths(base)
            }
            None => FileConfig::default(),
        };
        let run = file.run;
        let policy = match (common.policy, run.policy) {
            (Some(p), _) => p,
            (None, Some(p)) => p.parse().map_err(|e: String| anyhow!(e))?,
            (None, None) => SourcePolicy::default(),
        };
        let seed = common.seed.or(run.seed);
        let mut synth = file.synth;
        set(&mut synth.seed, seed);
        Ok(Settings {
            inputs: if common.inputs.is_empty() { run.inputs } else { common.inputs.clone() },
            policy,
            alignment: common.alignment.clone().or(run.alignment),
            out: common.out.clone().or(run.out).unwrap_or_else(|| PathBuf::from("out")),
            seed,
            threads: common.threads.or(run.threads),
            mode: if common.strict || run.strict.unwrap_or(false) { ParseMode::Strict } else { ParseMode::Lenient },
            prior: file.prior,
            similarity: file.similarity,
            engine: file.engine,
            truthfinder: file.truthfinder,
            synth,
        })
    }

    fn require_inputs(&self) -> Result<()> {
        if self.inputs.is_empty() {
            bail!("no input files; pass --input <PATH>... or set `inputs` under [run] in --config");
        }
        Ok(())
    }
}

fn init_threads(threads: Option<usize>) -> Result<()> {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global().context("configuring thread pool")?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

/// Writes through a temporary file in the target directory, then renames it
/// into place.
fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        fill(&mut w).with_context(|| format!("writing {}", path.display()))?;
        w.flush()?;
    }
    tmp.persist(path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

struct Loaded {
    statements: Vec<RdfStatement>,
    /// First statement index of each input file.
    files: Vec<(usize, PathBuf)>,
}

impl Loaded {
    fn origin(&self, index: usize) -> (&Path, u64) {
        let k = self.files.partition_point(|(start, _)| *start <= index) - 1;
        (&self.files[k].1, self.statements[index].line)
    }
}

fn load(settings: &Settings) -> Result<Loaded> {
    settings.require_inputs()?;
    let mut loaded = Loaded { statements: Vec::new(), files: Vec::new() };
    for path in &settings.inputs {
        let reader = open_input(path).with_context(|| format!("opening {}", path.display()))?;
        let parsed = parse_triples(reader, RdfFormat::from_path(path), settings.mode)
            .with_context(|| format!("parsing {}", path.display()))?;
        for d in &parsed.diagnostics {
            eprintln!("WARN {}:{} {}", path.display(), d.line, d.reason);
        }
        loaded.files.push((loaded.statements.len(), path.clone()));
        loaded.statements.extend(parsed.statements);
    }
    Ok(loaded)
}

fn build_corpus(settings: &Settings, loaded: &Loaded) -> Result<Corpus> {
    let alignment = match &settings.alignment {
        Some(path) => {
            let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
            Some(PredicateAlignment::read_tsv(io::BufReader::new(file))?)
        }
        None => None,
    };
    let corpus = assemble(&loaded.statements, settings.policy, alignment.as_ref());
    for (index, reason) in &corpus.report.dropped {
        if let DropReason::NoSource(_) = reason {
            let (file, line) = loaded.origin(*index);
            eprintln!("WARN {}:{} {reason}", file.display(), line);
        }
    }
    for (iri, err) in &corpus.sbg.unresolved {
        eprintln!("WARN sameAs edge dropped at {iri}: {err}");
    }
    Ok(corpus)
}

fn cmd_resolve(common: Common, prior: PriorFlags, engine: EngineFlags) -> Result<ExitCode> {
    let mut s = Settings::new(&common)?;
    prior.apply(&mut s.prior);
    engine.apply(&mut s.engine);
    init_threads(s.threads)?;
    let loaded = load(&s)?;
    let corpus = build_corpus(&s, &loaded)?;
    if corpus.store.is_empty() {
        bail!("no claims found in the inputs");
    }
    let priors = corpus_priors(&corpus.sbg, &s.prior, Execution::default())?;
    if !priors.converged {
        eprintln!("WARN prior did not converge in {} sweeps (residual {:e})", priors.sweeps_used, priors.residual);
    }
    let res = resolve_all_with(&corpus.store, &priors, &s.similarity, &s.engine, Execution::default())?;
    write_resolution_outputs(&s.out, &res)?;
    eprintln!(
        "resolved {} conflict sets from {} claims in {} iterations",
        res.decisions.len(),
        corpus.store.claims().len(),
        res.iterations()
    );
    if res.converged {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("WARN trust values did not converge within {} iterations", s.engine.outer_max);
        Ok(ExitCode::from(2))
    }
}

fn write_resolution_outputs(out: &Path, res: &Resolution) -> Result<()> {
    write_atomic(&out.join("decisions.jsonl"), |w| write_resolution(w, res))?;
    write_atomic(&out.join("trace.csv"), |w| res.trace.write_csv(w))?;
    write_atomic(&out.join("source_trust.tsv"), |w| {
        let st = &res.state;
        for (i, s) in st.sources.iter().enumerate() {
            writeln!(w, "{s}\t{}\t{}\t{}", st.t[i], st.nbr[i], st.t_smoothed[i])?;
        }
        Ok(())
    })
}

fn cmd_prior(common: Common, flags: PriorFlags) -> Result<ExitCode> {
    let mut s = Settings::new(&common)?;
    flags.apply(&mut s.prior);
    init_threads(s.threads)?;
    let loaded = load(&s)?;
    let corpus = build_corpus(&s, &loaded)?;
    if corpus.sbg.is_empty() {
        bail!("source belief graph is empty: no sameAs links between distinct sources");
    }
    let priors = normalize_prior(compute_prior_with(&corpus.sbg, &s.prior, Execution::default())?);
    write_atomic(&s.out.join("prior.tsv"), |w| priors.write_tsv(w))?;
    write_atomic(&s.out.join("sbg.tsv"), |w| corpus.sbg.write_tsv(w))?;
    if !priors.converged {
        eprintln!("WARN prior did not converge in {} sweeps (residual {:e})", priors.sweeps_used, priors.residual);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_synth(common: Common, flags: SynthFlags) -> Result<ExitCode> {
    let mut s = Settings::new(&common)?;
    flags.apply(&mut s.synth);
    let corpus = generate(&s.synth)?;
    write_atomic(&s.out.join("corpus.nt"), |w| corpus.write_ntriples(w))?;
    write_atomic(&s.out.join("gold.tsv"), |w| corpus.gold.write_tsv(w))?;
    eprintln!("wrote {} statements and {} gold entries", corpus.statements.len(), corpus.gold.len());
    Ok(ExitCode::SUCCESS)
}

fn cmd_eval(
    common: Common,
    prior: PriorFlags,
    engine: EngineFlags,
    synth: SynthFlags,
    gold: Option<PathBuf>,
    runs: u64,
) -> Result<ExitCode> {
    let mut s = Settings::new(&common)?;
    prior.apply(&mut s.prior);
    engine.apply(&mut s.engine);
    synth.apply(&mut s.synth);
    init_threads(s.threads)?;
    let settings = MethodSettings { similarity: s.similarity, engine: s.engine, truthfinder: s.truthfinder };
    let exec = Execution::default();

    let mut reports = Vec::new();
    if s.inputs.is_empty() {
        if runs == 0 {
            bail!("--runs must be at least 1");
        }
        for k in 0..runs {
            let cfg = SynthConfig { seed: s.synth.seed.wrapping_add(k), ..s.synth.clone() };
            let synth = generate(&cfg)?;
            let corpus = assemble(&synth.statements, SourcePolicy::Host, None);
            let priors = corpus_priors(&corpus.sbg, &s.prior, exec)?;
            let methods = compare(&corpus.store, &priors, &synth.gold, &settings, &Contender::ALL, exec)?;
            reports.push(SeedReport { seed: cfg.seed, conflict_sets: corpus.store.conflict_sets().len(), methods });
        }
    } else {
        let path = gold.ok_or_else(|| anyhow!("--gold is required when evaluating --input corpora"))?;
        let file = fs::File::open(&path).with_context(|| format!("opening {}", path.display()))?;
        let gold = GoldStandard::read_tsv(io::BufReader::new(file))?;
        let loaded = load(&s)?;
        let corpus = build_corpus(&s, &loaded)?;
        let priors = corpus_priors(&corpus.sbg, &s.prior, exec)?;
        let methods = compare(&corpus.store, &priors, &gold, &settings, &Contender::ALL, exec)?;
        reports.push(SeedReport {
            seed: s.seed.unwrap_or(s.synth.seed),
            conflict_sets: corpus.store.conflict_sets().len(),
            methods,
        });
    }

    for run in &mut reports {
        for m in &mut run.methods {
            if m.trace.is_empty() {
                continue;
            }
            let rel = PathBuf::from("traces").join(format!("seed-{}-{}.csv", run.seed, m.method.name()));
            let trace = truthdiscover::engine::ConvergenceTrace { rows: std::mem::take(&mut m.trace) };
            write_atomic(&s.out.join(&rel), |w| trace.write_csv(w))?;
            m.trace = trace.rows;
            m.trace_path = Some(rel.to_string_lossy().into_owned());
        }
    }
    let report = ComparisonReport::new(reports);
    write_atomic(&s.out.join("report.json"), |w| {
        serde_json::to_writer_pretty(&mut *w, &report)?;
        writeln!(w)
    })?;
    report.write_table(io::stdout().lock())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_baseline(common: Common, method: Method) -> Result<ExitCode> {
    let s = Settings::new(&common)?;
    init_threads(s.threads)?;
    let loaded = load(&s)?;
    let corpus = build_corpus(&s, &loaded)?;
    if corpus.store.is_empty() {
        bail!("no claims found in the inputs");
    }
    let run = match method {
        Method::Vote => vote_all(&corpus.store, Execution::default()),
        Method::TruthFinder => {
            truthfinder(&corpus.store, &s.similarity, &s.truthfinder, Execution::default()).map_err(|e| anyhow!(e))?.run
        }
    };
    let path = s.out.join(format!("baseline-{}.jsonl", method.name()));
    write_atomic(&path, |w| write_baseline(w, &corpus.store, &run))?;
    if run.converged {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("WARN {method} did not converge");
        Ok(ExitCode::from(2))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Resolve { common, prior, engine } => cmd_resolve(common, prior, engine),
        Command::Prior { common, prior } => cmd_prior(common, prior),
        Command::Synth { common, synth } => cmd_synth(common, synth),
        Command::Eval { common, prior, engine, synth, gold, runs } => cmd_eval(common, prior, engine, synth, gold, runs),
        Command::Baseline { common, method } => cmd_baseline(common, method),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
