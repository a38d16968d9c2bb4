//! Command-line pipeline around the engine. Every subcommand reads the
//! text formats documented in `docs/formats.md` and writes CSV, so runs
//! chain together through files. Errors carry the pipeline stage that
//! produced them.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use mlnec::compile::{compile, CompiledKb, InertiaPolicy, InertiaVariant};
use mlnec::eval::{labeled_scores, metrics, recognize, threshold_sweep, MetricsReport, RecognizeMode};
use mlnec::grounding::ground;
use mlnec::infer::{
    exact_marginals_with_cap, map_exact_with_cap, map_localsearch, mcsat_stats, MarginalTable, McSatOptions,
    WalkOptions, EXACT_CAP, MAP_CAP,
};
use mlnec::kb::{
    parse_annotation, parse_kb, parse_narrative, serialize_annotation, serialize_kb, serialize_narrative,
    serialize_results, Annotation, KnowledgeBaseSource, Narrative, ResultsTable,
};
use mlnec::learn::{diagonal_newton_epoch, negative_cll, train_perceptron, Inference, MapMode, NewtonOptions, TrainingInstance};
use mlnec::synth::{ablate, simulate, AblationSpec, Scenario};

#[derive(Parser)]
#[command(name = "mlnec", version, about = "Event recognition with Markov logic event calculus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Seed for every stochastic stage.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads, 0 meaning all cores.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Output format.
    #[arg(long, global = true, default_value = "csv")]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Debug, ValueEnum)]
enum Format {
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Complete a knowledge base and emit its compiled form.
    Compile(CompileArgs),
    /// Ground a knowledge base against a narrative and report network size.
    Ground(GroundArgs),
    /// Compute marginal probabilities or a most-probable assignment.
    Infer(InferArgs),
    /// Fit soft weights to annotated narratives.
    Learn(LearnArgs),
    /// Turn inference output into per-time fluent decisions.
    Recognize(RecognizeArgs),
    /// Score recognition against ground-truth annotations.
    Evaluate(EvaluateArgs),
    /// Erase random evidence intervals from a narrative.
    Ablate(AblateArgs),
    /// Generate a synthetic narrative with its annotation.
    Simulate(SimulateArgs),
    /// Trace a fluent's probability over time under an inertia policy.
    InertiaLab(InertiaLabArgs),
}

/// Knowledge-base input shared by most subcommands. Source files are
/// compiled with the given policy; already-compiled files load as they are.
#[derive(Args)]
struct KbArgs {
    /// Knowledge base file, source or compiled.
    kb: PathBuf,
    /// Inertia policy: hi, si_h, si_negh, si or si_eq.
    #[arg(long, default_value = "hi")]
    policy: String,
    /// Make the effect rules soft, keeping their source weights.
    #[arg(long)]
    sigma_soft: bool,
    /// Weights for the softened inertia rules, comma separated.
    #[arg(long, value_delimiter = ',')]
    inertia_weights: Option<Vec<f64>>,
}

impl KbArgs {
    fn load(&self) -> Result<CompiledKb> {
        let kb = read_kb(&self.kb)?;
        if kb.compiled {
            return CompiledKb::from_source(&kb)
                .with_context(|| format!("compile: {} is not a well-formed compiled base", self.kb.display()));
        }
        let variant: InertiaVariant = self.policy.parse().map_err(anyhow::Error::msg).context("compile")?;
        let policy = match &self.inertia_weights {
            None => InertiaPolicy::new(variant),
            Some(ws) => InertiaPolicy::with_weights(variant, ws.clone()),
        };
        compile(&kb, &policy, self.sigma_soft).context("compile")
    }
}

fn read_kb(path: &Path) -> Result<KnowledgeBaseSource> {
    let text = fs::read_to_string(path).with_context(|| format!("read: {}", path.display()))?;
    parse_kb(&text).with_context(|| format!("parse: {}", path.display()))
}

fn read_narrative(path: &Path, ckb: &CompiledKb) -> Result<Narrative> {
    let text = fs::read_to_string(path).with_context(|| format!("read: {}", path.display()))?;
    parse_narrative(&text, &ckb.signature).with_context(|| format!("parse: {}", path.display()))
}

fn read_annotation(path: &Path, ckb: &CompiledKb) -> Result<Annotation> {
    let text = fs::read_to_string(path).with_context(|| format!("read: {}", path.display()))?;
    parse_annotation(&text, &ckb.signature).with_context(|| format!("parse: {}", path.display()))
}

fn emit(output: Option<&PathBuf>, text: &str) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text).with_context(|| format!("write: {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Args)]
struct CompileArgs {
    #[command(flatten)]
    kb: KbArgs,
    /// Destination file, stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn run_compile(args: &CompileArgs) -> Result<()> {
    let ckb = args.kb.load()?;
    emit(args.output.as_ref(), &serialize_kb(&ckb.to_source()))
}

#[derive(Args)]
struct GroundArgs {
    #[command(flatten)]
    kb: KbArgs,
    narrative: PathBuf,
}

fn run_ground(args: &GroundArgs) -> Result<()> {
    let ckb = args.kb.load()?;
    let narrative = read_narrative(&args.narrative, &ckb)?;
    let net = ground(&ckb, &narrative).context("ground")?;
    print!("{}", net.stats());
    Ok(())
}

#[derive(Clone, Copy, PartialEq, Debug, ValueEnum)]
enum RunMode {
    /// Exact marginal probabilities.
    MarginalExact,
    /// Sampled marginal probabilities.
    MarginalMcsat,
    /// Exact most-probable assignment.
    MapExact,
    /// Local-search most-probable assignment.
    MapWalk,
}

/// Inference tuning shared by infer, recognize and evaluate.
#[derive(Args)]
struct ModeArgs {
    #[arg(long, value_enum, default_value_t = RunMode::MarginalExact)]
    mode: RunMode,
    /// Atom cap per connected component for the exact methods.
    #[arg(long)]
    cap: Option<usize>,
    /// Sample count for sampled marginals.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Flip budget per local-search restart.
    #[arg(long, default_value_t = 10_000)]
    flips: usize,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    /// Probability of a random rather than greedy local-search move.
    #[arg(long, default_value_t = 0.3)]
    noise: f64,
}

impl ModeArgs {
    fn recognize_mode(&self, seed: u64) -> RecognizeMode {
        match self.mode {
            RunMode::MarginalExact => RecognizeMode::MarginalExact { cap: self.cap.unwrap_or(EXACT_CAP) },
            RunMode::MarginalMcsat => RecognizeMode::MarginalSampled(McSatOptions {
                samples: self.samples,
                seed,
                ..McSatOptions::default()
            }),
            RunMode::MapExact => RecognizeMode::MapExact { cap: self.cap.unwrap_or(MAP_CAP) },
            RunMode::MapWalk => RecognizeMode::MapLocalSearch(WalkOptions {
                flips: self.flips,
                restarts: self.restarts,
                noise: self.noise,
                seed,
            }),
        }
    }

    fn is_marginal(&self) -> bool {
        matches!(self.mode, RunMode::MarginalExact | RunMode::MarginalMcsat)
    }
}

#[derive(Args)]
struct InferArgs {
    #[command(flatten)]
    kb: KbArgs,
    narrative: PathBuf,
    #[command(flatten)]
    tuning: ModeArgs,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn run_infer(args: &InferArgs, seed: u64) -> Result<()> {
    let ckb = args.kb.load()?;
    let narrative = read_narrative(&args.narrative, &ckb)?;
    let net = ground(&ckb, &narrative).context("ground")?;
    let table = match args.tuning.mode {
        RunMode::MarginalExact => {
            let t = exact_marginals_with_cap(&net, args.tuning.cap.unwrap_or(EXACT_CAP)).context("infer")?;
            ResultsTable::Marginal(t.rows(&narrative.clamped))
        }
        RunMode::MarginalMcsat => {
            let opts = McSatOptions { samples: args.tuning.samples, seed, ..McSatOptions::default() };
            let stats = mcsat_stats(&net, &opts).context("infer")?;
            let t = MarginalTable {
                atoms: net.atoms.clone(),
                probabilities: stats.marginals,
                samples: Some(stats.samples),
                seed: Some(stats.seed),
            };
            ResultsTable::Marginal(t.rows(&narrative.clamped))
        }
        RunMode::MapExact => {
            let map = map_exact_with_cap(&net, args.tuning.cap.unwrap_or(MAP_CAP)).context("infer")?;
            ResultsTable::Assignment(map.rows(&narrative.clamped))
        }
        RunMode::MapWalk => {
            let opts = WalkOptions {
                flips: args.tuning.flips,
                restarts: args.tuning.restarts,
                noise: args.tuning.noise,
                seed,
            };
            let map = map_localsearch(&net, &opts).context("infer")?;
            if !map.hard_feasible {
                eprintln!("warning: local search exhausted its budget without satisfying every hard clause");
            }
            ResultsTable::Assignment(map.rows(&narrative.clamped))
        }
    };
    emit(args.output.as_ref(), &serialize_results(&table))
}

#[derive(Args)]
struct RecognizeArgs {
    #[command(flatten)]
    kb: KbArgs,
    narrative: PathBuf,
    #[command(flatten)]
    tuning: ModeArgs,
    /// Probability needed to call a fluent recognised.
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn run_recognize(args: &RecognizeArgs, seed: u64) -> Result<()> {
    let ckb = args.kb.load()?;
    let narrative = read_narrative(&args.narrative, &ckb)?;
    let mode = args.tuning.recognize_mode(seed);
    let run = recognize(&ckb, &narrative, &mode, args.threshold).context("recognize")?;
    if !run.hard_feasible {
        eprintln!("warning: local search exhausted its budget without satisfying every hard clause");
    }

    let mut out = String::new();
    match &run.probabilities {
        Some(probs) => {
            out.push_str("time,fluent,probability,recognized\n");
            for ((fluent, time, p), (_, _, decided)) in probs.iter().zip(&run.decisions.rows) {
                writeln!(out, "{time},{fluent},{p:.4},{decided}").unwrap();
            }
        }
        None => {
            out.push_str("time,fluent,recognized\n");
            for (fluent, time, decided) in &run.decisions.rows {
                writeln!(out, "{time},{fluent},{decided}").unwrap();
            }
        }
    }
    emit(args.output.as_ref(), &out)
}

/// One narrative with its ground-truth annotation.
struct LabeledPair {
    narrative: PathBuf,
    annotation: PathBuf,
}

/// Collects narrative/annotation pairs from the explicit flags or from a
/// manifest file of `narrative annotation` lines, paths relative to the
/// manifest.
#[derive(Args)]
struct CorpusArgs {
    #[arg(long, required_unless_present = "manifest", requires = "annotation")]
    narrative: Option<PathBuf>,
    #[arg(long)]
    annotation: Option<PathBuf>,
    /// Manifest file: one `narrative annotation` pair per line.
    #[arg(long, conflicts_with = "narrative")]
    manifest: Option<PathBuf>,
}

impl CorpusArgs {
    fn pairs(&self) -> Result<Vec<LabeledPair>> {
        if let Some(narrative) = &self.narrative {
            let annotation = self.annotation.clone().expect("clap enforces the pairing");
            return Ok(vec![LabeledPair { narrative: narrative.clone(), annotation }]);
        }
        let manifest = self.manifest.as_ref().expect("clap requires a manifest otherwise");
        let base = manifest.parent().unwrap_or(Path::new("")).to_path_buf();
        let text = fs::read_to_string(manifest).with_context(|| format!("read: {}", manifest.display()))?;
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace();
            match (fields.next(), fields.next(), fields.next()) {
                (Some(n), Some(a), None) => {
                    pairs.push(LabeledPair { narrative: base.join(n), annotation: base.join(a) })
                }
                _ => bail!("parse: {} line {}: expected `narrative annotation`", manifest.display(), i + 1),
            }
        }
        if pairs.is_empty() {
            bail!("parse: {} lists no narratives", manifest.display());
        }
        Ok(pairs)
    }
}

#[derive(Clone, Copy, PartialEq, Debug, ValueEnum)]
enum Optimizer {
    Newton,
    Perceptron,
}

#[derive(Args)]
struct LearnArgs {
    #[command(flatten)]
    kb: KbArgs,
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long, value_enum, default_value_t = Optimizer::Newton)]
    optimizer: Optimizer,
    #[arg(long, default_value_t = 20)]
    epochs: usize,
    /// Perceptron learning rate.
    #[arg(long, default_value_t = 0.1)]
    rate: f64,
    /// Estimate expectations exactly or by sampling.
    #[arg(long, value_enum, default_value_t = Estimator::Exact)]
    inference: Estimator,
    #[arg(long)]
    cap: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Write the compiled base with the learned weights here.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Debug, ValueEnum)]
enum Estimator {
    Exact,
    Mcsat,
}

fn run_learn(args: &LearnArgs, seed: u64) -> Result<()> {
    let mut ckb = args.kb.load()?;
    let mut instances = Vec::new();
    for pair in args.corpus.pairs()? {
        let narrative = read_narrative(&pair.narrative, &ckb)?;
        let annotation = read_annotation(&pair.annotation, &ckb)?;
        let net = ground(&ckb, &narrative).context("ground")?;
        instances.push(
            TrainingInstance::new(net, &annotation)
                .with_context(|| format!("learn: {}", pair.narrative.display()))?,
        );
    }

    let cap = args.cap.unwrap_or(EXACT_CAP);
    let mut weights = ckb.soft_weights();
    match args.optimizer {
        Optimizer::Newton => {
            let mode = match args.inference {
                Estimator::Exact => Inference::Exact { cap },
                Estimator::Mcsat => {
                    Inference::McSat(McSatOptions { samples: args.samples, seed, ..McSatOptions::default() })
                }
            };
            for epoch in 0..args.epochs {
                weights = diagonal_newton_epoch(&mut instances, &weights, &mode, &NewtonOptions::default())
                    .with_context(|| format!("learn: epoch {epoch}"))?;
                if args.inference == Estimator::Exact {
                    let objective = negative_cll(&mut instances, &weights, cap).context("learn")?;
                    eprintln!("epoch {epoch}: negative CLL {objective:.6}");
                }
            }
        }
        Optimizer::Perceptron => {
            let mode = match args.inference {
                Estimator::Exact => MapMode::Exact { cap: args.cap.unwrap_or(MAP_CAP) },
                Estimator::Mcsat => MapMode::LocalSearch(WalkOptions { seed, ..WalkOptions::default() }),
            };
            weights = train_perceptron(&mut instances, &weights, args.epochs, args.rate, &mode)
                .context("learn")?;
        }
    }

    ckb.set_soft_weights(&weights).context("learn")?;
    let mut out = String::from("formula,weight\n");
    for (label, w) in ckb.soft_labels().iter().zip(&weights) {
        writeln!(out, "{label},{w:.6}").unwrap();
    }
    print!("{out}");
    if let Some(path) = &args.output {
        fs::write(path, serialize_kb(&ckb.to_source())).with_context(|| format!("write: {}", path.display()))?;
    }
    Ok(())
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    kb: KbArgs,
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    tuning: ModeArgs,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Also emit precision/recall/F1 at 101 thresholds.
    #[arg(long)]
    sweep: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn run_evaluate(args: &EvaluateArgs, seed: u64) -> Result<()> {
    let ckb = args.kb.load()?;
    let mode = args.tuning.recognize_mode(seed);
    let mut out = String::from("narrative,tp,fp,fn,tn,precision,recall,f1,auprc\n");
    let mut reports = Vec::new();
    let mut pooled_scores = Vec::new();
    for pair in args.corpus.pairs()? {
        let narrative = read_narrative(&pair.narrative, &ckb)?;
        let annotation = read_annotation(&pair.annotation, &ckb)?;
        let run = recognize(&ckb, &narrative, &mode, args.threshold)
            .with_context(|| format!("recognize: {}", pair.narrative.display()))?;
        let mut report = metrics(&run.decisions, &annotation)
            .with_context(|| format!("evaluate: {}", pair.narrative.display()))?;
        if let Some(probs) = &run.probabilities {
            let scores = labeled_scores(probs, &annotation);
            report.auprc = maybe_auprc(&scores)?;
            pooled_scores.extend(scores);
        }
        writeln!(out, "{},{}", pair.narrative.display(), metrics_row(&report)).unwrap();
        reports.push(report);
    }

    let mut pooled = MetricsReport::micro(&reports);
    if args.tuning.is_marginal() {
        pooled.auprc = maybe_auprc(&pooled_scores)?;
    }
    writeln!(out, "all,{}", metrics_row(&pooled)).unwrap();

    if args.sweep {
        out.push_str("\nthreshold,precision,recall,f1\n");
        if !args.tuning.is_marginal() {
            bail!("evaluate: the threshold sweep needs a marginal mode");
        }
        for report in threshold_sweep(&pooled_scores) {
            writeln!(
                out,
                "{:.2},{:.4},{:.4},{:.4}",
                report.threshold, report.precision, report.recall, report.f1
            )
            .unwrap();
        }
    }
    emit(args.output.as_ref(), &out)
}

/// Precision-recall area, or `None` when the labels hold no positives and
/// the area is undefined.
fn maybe_auprc(scores: &[(f64, bool)]) -> Result<Option<f64>> {
    if scores.iter().all(|(_, label)| !label) {
        return Ok(None);
    }
    mlnec::eval::auprc(scores).map(Some).context("evaluate")
}

fn metrics_row(r: &MetricsReport) -> String {
    let auprc = r.auprc.map_or(String::new(), |a| format!("{a:.4}"));
    format!(
        "{},{},{},{},{:.4},{:.4},{:.4},{}",
        r.true_positives, r.false_positives, r.false_negatives, r.true_negatives, r.precision, r.recall, r.f1, auprc
    )
}

#[derive(Args)]
struct AblateArgs {
    #[command(flatten)]
    kb: KbArgs,
    narrative: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    probability: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [10, 20])]
    lengths: Vec<u32>,
    #[arg(long, default_value_t = 5)]
    repetitions: usize,
    /// Directory for the degraded narrative files.
    #[arg(short, long)]
    output_dir: PathBuf,
}

fn run_ablate(args: &AblateArgs, seed: u64) -> Result<()> {
    let ckb = args.kb.load()?;
    let narrative = read_narrative(&args.narrative, &ckb)?;
    let spec = AblationSpec {
        start_probability: args.probability,
        lengths: args.lengths.clone(),
        repetitions: args.repetitions,
        seed,
    };
    fs::create_dir_all(&args.output_dir)
        .with_context(|| format!("write: {}", args.output_dir.display()))?;
    let stem = args.narrative.file_stem().and_then(|s| s.to_str()).unwrap_or("narrative");

    let mut out = String::from("file,repetition,length,starts\n");
    for degraded in ablate(&narrative, &spec) {
        let name = format!("{stem}_r{}_l{}.evid", degraded.repetition, degraded.length);
        let path = args.output_dir.join(&name);
        fs::write(&path, serialize_narrative(&degraded.narrative))
            .with_context(|| format!("write: {}", path.display()))?;
        writeln!(out, "{name},{},{},{}", degraded.repetition, degraded.length, degraded.starts.len()).unwrap();
    }
    print!("{out}");
    Ok(())
}

#[derive(Clone, Copy, PartialEq, Debug, ValueEnum)]
enum ScenarioName {
    Empty,
    ScriptedMeeting,
    InertiaDecay,
    RandomWalkers,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    scenario: ScenarioName,
    #[arg(long, default_value_t = 40)]
    horizon: u32,
    /// Start the inertia-decay fluent in the held state.
    #[arg(long)]
    hold: bool,
    /// Narrative destination, stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Annotation destination.
    #[arg(long)]
    annotation: Option<PathBuf>,
    /// Also write the scenario's knowledge base.
    #[arg(long)]
    emit_kb: Option<PathBuf>,
}

impl SimulateArgs {
    fn scenario(&self, seed: u64) -> Scenario {
        match self.scenario {
            ScenarioName::Empty => Scenario::Empty,
            ScenarioName::ScriptedMeeting => Scenario::ScriptedMeeting,
            ScenarioName::InertiaDecay => {
                Scenario::InertiaDecay { horizon: self.horizon, hold_at_start: self.hold }
            }
            ScenarioName::RandomWalkers => Scenario::RandomWalkers { horizon: self.horizon, seed },
        }
    }
}

fn run_simulate(args: &SimulateArgs, seed: u64) -> Result<()> {
    let sim = simulate(&args.scenario(seed)).context("simulate")?;
    emit(args.output.as_ref(), &serialize_narrative(&sim.narrative))?;
    if let Some(path) = &args.annotation {
        let annotation = sim.narrative.annotation.clone().unwrap_or_default();
        fs::write(path, serialize_annotation(&annotation)).with_context(|| format!("write: {}", path.display()))?;
    }
    if let Some(path) = &args.emit_kb {
        fs::write(path, serialize_kb(&sim.kb)).with_context(|| format!("write: {}", path.display()))?;
    }
    Ok(())
}

#[derive(Args)]
struct InertiaLabArgs {
    /// Scenario to trace: inertia-decay or scripted-meeting.
    #[arg(long, value_enum, default_value_t = ScenarioName::InertiaDecay)]
    scenario: ScenarioName,
    #[arg(long, default_value_t = 20)]
    horizon: u32,
    #[arg(long)]
    hold: bool,
    #[arg(long, default_value = "si_eq")]
    policy: String,
    #[arg(long, value_delimiter = ',')]
    inertia_weights: Option<Vec<f64>>,
    /// Keep the effect rules hard instead of soft.
    #[arg(long)]
    sigma_hard: bool,
    /// Fluent instance to trace, e.g. `flag(a1)`; defaults to the
    /// scenario's subject.
    #[arg(long)]
    fluent: Option<String>,
    #[arg(long)]
    cap: Option<usize>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn run_inertia_lab(args: &InertiaLabArgs, seed: u64) -> Result<()> {
    let (scenario, default_fluent) = match args.scenario {
        ScenarioName::InertiaDecay => (
            Scenario::InertiaDecay { horizon: args.horizon, hold_at_start: args.hold },
            "flag(a1)",
        ),
        ScenarioName::ScriptedMeeting => (Scenario::ScriptedMeeting, "meeting(id1,id2)"),
        other => bail!("simulate: scenario {other:?} has no persistence curve to trace"),
    };
    let sim = simulate(&scenario).context("simulate")?;
    let variant: InertiaVariant = args.policy.parse().map_err(anyhow::Error::msg).context("compile")?;
    let policy = match &args.inertia_weights {
        None => InertiaPolicy::new(variant),
        Some(ws) => InertiaPolicy::with_weights(variant, ws.clone()),
    };
    let ckb = compile(&sim.kb, &policy, !args.sigma_hard).context("compile")?;
    let net = ground(&ckb, &sim.narrative).context("ground")?;
    let cap = args.cap.unwrap_or(sim.narrative.horizon as usize + 1);
    let table = exact_marginals_with_cap(&net, cap).context("infer")?;

    let fluent = args.fluent.as_deref().unwrap_or(default_fluent);
    let mut rows: Vec<(u32, f64)> = table
        .rows(&sim.narrative.clamped)
        .into_iter()
        .filter(|(f, _, _)| f == fluent)
        .map(|(_, t, p)| (t, p))
        .collect();
    if rows.is_empty() {
        bail!("infer: fluent `{fluent}` does not occur in the scenario");
    }
    rows.sort_unstable_by_key(|(t, _)| *t);

    let mut out = String::from("time,probability\n");
    for (t, p) in rows {
        writeln!(out, "{t},{p:.6}").unwrap();
    }
    emit(args.output.as_ref(), &out)?;
    let _ = seed;
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .context("thread pool")?;
    }
    match &cli.command {
        Command::Compile(args) => run_compile(args),
        Command::Ground(args) => run_ground(args),
        Command::Infer(args) => run_infer(args, cli.seed),
        Command::Learn(args) => run_learn(args, cli.seed),
        Command::Recognize(args) => run_recognize(args, cli.seed),
        Command::Evaluate(args) => run_evaluate(args, cli.seed),
        Command::Ablate(args) => run_ablate(args, cli.seed),
        Command::Simulate(args) => run_simulate(args, cli.seed),
        Command::InertiaLab(args) => run_inertia_lab(args, cli.seed),
    }
}
