//! `edurec` command-line pipeline.
//!
//! Exit codes: 0 success, 1 other failure, 2 usage, 3 IO, 4 schema,
//! 5 model mismatch, 6 empty cohort.

mod manifest;
mod settings;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use edurec::datagen::{generate_synthetic, GeneratorConfig, CAREERS};
use edurec::gnn::{self, build_view, Embeddings, FeatureConfig, GcnModel, GnnError, Optimizer, TrainConfig};
use edurec::groups::{form_groups, group_report, GroupError};
use edurec::io::{self, IngestError, IngestOptions};
use edurec::report::scatter_svg;
use edurec::stats::{
    self, cohort_association, eligible_students, preference_clusters, preference_engagement_association,
    AssociationParams, IndicatorScenario, PreferenceDimension, StatsError,
};
use edurec::{HeteroGraph, NodeKind};

use manifest::Run;
use settings::Settings;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Schema(String),
    Model(String),
    EmptyCohort(String),
    Other(String),
}

impl CliError {
    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Other(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Schema(_) => 4,
            CliError::Model(_) => 5,
            CliError::EmptyCohort(_) => 6,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m)
            | CliError::Io(m)
            | CliError::Schema(m)
            | CliError::Model(m)
            | CliError::EmptyCohort(m)
            | CliError::Other(m) => m,
        }
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        match e {
            StatsError::EmptyCohort | StatsError::TooFewPoints { .. } => CliError::EmptyCohort(e.to_string()),
            StatsError::UnknownCareer(_) | StatsError::TooFewClusters(_) => CliError::Usage(e.to_string()),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<GnnError> for CliError {
    fn from(e: GnnError) -> Self {
        match e {
            GnnError::DimMismatch { .. } | GnnError::Checkpoint(_) => CliError::Model(e.to_string()),
            GnnError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            GnnError::UnknownNode(_) => CliError::Usage(e.to_string()),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<GroupError> for CliError {
    fn from(e: GroupError) -> Self {
        match e {
            GroupError::GroupSizeTooSmall(_) => CliError::Usage(format!("--group-size: {e}")),
            GroupError::MissingEmbedding(_) | GroupError::RaggedEmbeddings => CliError::Model(e.to_string()),
            other => CliError::Other(other.to_string()),
        }
    }
}

type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Parser)]
#[command(name = "edurec", version, about = "Knowledge-graph analytics and course recommendation pipeline")]
struct Cli {
    /// TOML file; keys are long flag names, top level or under [command].
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic graph as nodes.jsonl / edges.jsonl.
    Generate(GenerateArgs),
    /// Preference-vs-engagement association per dimension and scenario.
    Analyze(AnalyzeArgs),
    /// Train the GCN and write model.json plus loss_curve.csv.
    Train(TrainArgs),
    /// Top-n course recommendations per student.
    Recommend(RecommendArgs),
    /// Study groups within preference clusters.
    Group(GroupArgs),
    /// Association restricted to one career cohort (or each of them).
    Cohort(CohortArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Directory holding nodes.jsonl and edges.jsonl, or a .graphml file.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Malformed lines plus schema violations tolerated before failing.
    #[arg(long)]
    max_violations: Option<usize>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    students: Option<usize>,
    #[arg(long)]
    courses: Option<usize>,
    #[arg(long)]
    teachers: Option<usize>,
    #[arg(long)]
    schools: Option<usize>,
    #[arg(long)]
    categories: Option<usize>,
    #[arg(long)]
    majors: Option<usize>,
    /// Fewest Learn edges per student.
    #[arg(long)]
    min_courses: Option<usize>,
    /// Most Learn edges per student.
    #[arg(long)]
    max_courses: Option<usize>,
    /// Mean preference concentration, in [0, 1].
    #[arg(long)]
    pref_strength: Option<f64>,
    /// Engagement shift per unit of standardized top share.
    #[arg(long)]
    coupling: Option<f64>,
    /// Per-career coupling as three comma-separated values (student,professional,other).
    #[arg(long, value_delimiter = ',', num_args = 3)]
    cohort_coupling: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Also write graph.graphml.
    #[arg(long)]
    graphml: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    input: InputArgs,
    /// school, category, teacher or all.
    #[arg(long)]
    dim: Option<String>,
    /// FF, FT, TF, TT or all.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    /// Learn edges a student needs to be analysed.
    #[arg(long)]
    min_courses: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// adam or sgd.
    #[arg(long)]
    optimizer: Option<String>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    embed: Option<usize>,
    /// Id-derived random feature columns appended to the 6 base features.
    #[arg(long)]
    random_dims: Option<usize>,
    /// Sampled negative courses per observed pair.
    #[arg(long)]
    negatives: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RecommendArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    top_n: Option<usize>,
    /// Restrict output to these students (repeatable); default is every student.
    #[arg(long)]
    student: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GroupArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    group_size: Option<usize>,
    /// Preference dimension used for the clusters.
    #[arg(long)]
    dim: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    min_courses: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CohortArgs {
    #[command(flatten)]
    input: InputArgs,
    /// student, professional, other or all.
    #[arg(long)]
    career: Option<String>,
    #[arg(long)]
    dim: Option<String>,
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    min_courses: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn required(s: &Settings, flag: Option<PathBuf>, key: &str) -> Result<PathBuf> {
    s.pick_opt(flag, key)?
        .ok_or_else(|| CliError::Usage(format!("--{} is required", key.replace('_', "-"))))
}

fn parse_list<T>(flag: &str, value: &str, all: &[T]) -> Result<Vec<T>>
where
    T: std::str::FromStr + Copy,
    T::Err: std::fmt::Display,
{
    if value.eq_ignore_ascii_case("all") {
        return Ok(all.to_vec());
    }
    value
        .split(',')
        .map(|v| v.trim().parse::<T>().map_err(|e| CliError::Usage(format!("--{flag}: {e}"))))
        .collect()
}

struct Loaded {
    graph: HeteroGraph,
    files: Vec<PathBuf>,
}

fn load_graph(s: &Settings, args: InputArgs) -> Result<Loaded> {
    let input = required(s, args.input, "in")?;
    let limit = s.pick(args.max_violations, "max_violations", 0usize)?;
    let opts = IngestOptions { max_malformed: limit };
    let (result, files) = if input.is_file() {
        (io::read_graphml(&input, opts), vec![input.clone()])
    } else {
        let (n, e) = (input.join("nodes.jsonl"), input.join("edges.jsonl"));
        (io::load_jsonl(&n, &e, opts), vec![n, e])
    };
    let (graph, report) = result.map_err(|e| match e {
        IngestError::FileNotFound(_) | IngestError::Io { .. } => CliError::Io(e.to_string()),
        other => CliError::Schema(other.to_string()),
    })?;
    let problems = report.malformed.len() + report.violations.len();
    if problems > limit {
        let first = report
            .violations
            .first()
            .map(|v| format!("{:?} on {}: {}", v.rule, v.subject, v.detail))
            .or_else(|| report.malformed.first().map(|m| format!("{}:{}: {}", m.file, m.line, m.reason)))
            .unwrap_or_default();
        return Err(CliError::Schema(format!(
            "{problems} schema problems exceed --max-violations {limit}; first: {first}"
        )));
    }
    for m in &report.malformed {
        eprintln!("warning: skipped {}:{}: {}", m.file, m.line, m.reason);
    }
    for v in &report.violations {
        eprintln!("warning: {:?} on {}: {}", v.rule, v.subject, v.detail);
    }
    Ok(Loaded { graph, files })
}

fn check_unit(flag: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--{flag} must be in [0, 1], got {v}")))
    }
}

fn cmd_generate(cfg: Option<&Path>, a: GenerateArgs) -> Result<()> {
    let s = Settings::load(cfg, "generate")?;
    let d = GeneratorConfig::default();
    let (min_c, max_c) = d.courses_per_student;
    let config = GeneratorConfig {
        n_students: s.pick(a.students, "students", d.n_students)?,
        n_courses: s.pick(a.courses, "courses", d.n_courses)?,
        n_teachers: s.pick(a.teachers, "teachers", d.n_teachers)?,
        n_schools: s.pick(a.schools, "schools", d.n_schools)?,
        n_categories: s.pick(a.categories, "categories", d.n_categories)?,
        n_majors: s.pick(a.majors, "majors", d.n_majors)?,
        courses_per_student: (
            s.pick(a.min_courses, "min_courses", min_c)?,
            s.pick(a.max_courses, "max_courses", max_c)?,
        ),
        preference_strength: s.pick(a.pref_strength, "pref_strength", d.preference_strength)?,
        engagement_coupling: s.pick(a.coupling, "coupling", d.engagement_coupling)?,
        cohort_coupling: match s.pick_opt(a.cohort_coupling, "cohort_coupling")? {
            None => None,
            Some(v) => Some(
                <[f64; 3]>::try_from(v.as_slice())
                    .map_err(|_| CliError::Usage("--cohort-coupling needs exactly 3 values".into()))?,
            ),
        },
        career_weights: d.career_weights,
        seed: s.seed(a.seed)?,
    };
    let graphml = a.graphml || s.pick_opt(None::<bool>, "graphml")?.unwrap_or(false);
    let out = required(&s, a.out, "out")?;
    let resolved = s.finish()?;

    check_unit("pref-strength", config.preference_strength)?;
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let mut run = Run::start("generate", &out)?;
    let graph = generate_synthetic(&config).map_err(|e| CliError::Usage(e.to_string()))?;
    run.lap("generate");
    run.write("nodes.jsonl", io::nodes_to_jsonl(&graph))?;
    run.write("edges.jsonl", io::edges_to_jsonl(&graph))?;
    if graphml {
        run.write("graph.graphml", io::to_graphml(&graph))?;
    }
    let counts = graph.counts_by_kind();
    run.write_json(
        "counts.json",
        &json!({"schema_version": edurec::SCHEMA_VERSION, "nodes": counts.nodes, "edges": counts.edges}),
    )?;
    run.lap("write");
    run.finish(resolved, config.seed)?;
    eprintln!(
        "generated {} nodes, {} edges in {}",
        counts.total_nodes(),
        counts.total_edges(),
        out.display()
    );
    Ok(())
}

fn association_json(a: &stats::Association, cohort: Option<&str>) -> serde_json::Value {
    let mut r = a.report();
    r.cohort = cohort.map(str::to_owned);
    serde_json::to_value(r).expect("serializable")
}

fn cmd_analyze(cfg: Option<&Path>, a: AnalyzeArgs) -> Result<()> {
    let s = Settings::load(cfg, "analyze")?;
    let dim_arg = s.pick(a.dim, "dim", "all".to_owned())?;
    let scen_arg = s.pick(a.scenario, "scenario", "all".to_owned())?;
    let params = AssociationParams {
        k: s.pick(a.k, "k", 3)?,
        seed: s.seed(a.seed)?,
        min_courses: s.pick(a.min_courses, "min_courses", stats::DEFAULT_MIN_COURSES)?,
    };
    let out = required(&s, a.out, "out")?;
    let dims = parse_list("dim", &dim_arg, &PreferenceDimension::ALL)?;
    let scenarios = parse_list("scenario", &scen_arg, &IndicatorScenario::ALL)?;
    let loaded = load_graph(&s, a.input)?;
    let resolved = s.finish()?;

    let mut run = Run::start("analyze", &out)?;
    for f in &loaded.files {
        run.input(f)?;
    }
    run.lap("load");
    let graph = &loaded.graph;
    let jobs: Vec<(PreferenceDimension, IndicatorScenario)> =
        dims.iter().flat_map(|&d| scenarios.iter().map(move |&sc| (d, sc))).collect();
    let results: Vec<_> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|&(d, sc)| scope.spawn(move || preference_engagement_association(graph, d, sc, &params)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("analysis thread")).collect()
    });
    run.lap("analyze");

    let single = jobs.len() == 1;
    let mut grid: BTreeMap<String, BTreeMap<String, serde_json::Value>> = BTreeMap::new();
    let mut plotted = BTreeSet::new();
    let mut failed = Vec::new();
    for ((d, sc), res) in jobs.iter().zip(results) {
        let cell = grid.entry(d.as_str().to_owned()).or_default();
        let assoc = match res {
            Ok(a) => a,
            Err(e) if !single => {
                failed.push(format!("{}/{}: {e}", d.as_str(), sc.as_str()));
                cell.insert(sc.as_str().to_owned(), json!({"error": e.to_string()}));
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let name = if single {
            "association.json".to_owned()
        } else {
            format!("association_{}_{}.json", d.as_str(), sc.as_str())
        };
        run.write_json(&name, &association_json(&assoc, None))?;
        cell.insert(
            sc.as_str().to_owned(),
            json!({"chi2": assoc.chi_square.statistic, "dof": assoc.chi_square.dof, "p": assoc.chi_square.p_value, "rand": assoc.rand}),
        );
        if plotted.insert(*d) {
            let (csv, svg) = if dims.len() == 1 {
                ("features.csv".to_owned(), "scatter.svg".to_owned())
            } else {
                (format!("features_{}.csv", d.as_str()), format!("scatter_{}.svg", d.as_str()))
            };
            let clusters = &assoc.preference_clusters.assignments;
            run.write(&csv, assoc.features.to_csv(clusters))?;
            let title = format!("{} preference, k = {}, n = {}", d.as_str(), params.k, assoc.n());
            run.write(&svg, scatter_svg(&assoc.features, clusters, &title))?;
        }
    }
    if !single {
        run.write_json(
            "association_grid.json",
            &json!({"schema_version": edurec::SCHEMA_VERSION, "k": params.k, "grid": grid}),
        )?;
    }
    run.lap("write");
    for f in &failed {
        run.warn(f.clone());
    }
    run.finish(resolved, params.seed)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Other(format!("{} of {} analyses failed: {}", failed.len(), jobs.len(), failed.join("; "))))
    }
}

fn cmd_train(cfg: Option<&Path>, a: TrainArgs) -> Result<()> {
    let s = Settings::load(cfg, "train")?;
    let d = TrainConfig::default();
    let optimizer: Optimizer = s
        .pick(a.optimizer, "optimizer", "adam".to_owned())?
        .parse()
        .map_err(|e| CliError::Usage(format!("--optimizer: {e}")))?;
    let seed = s.seed(a.seed)?;
    let config = TrainConfig {
        epochs: s.pick(a.epochs, "epochs", d.epochs)?,
        learning_rate: s.pick(a.lr, "lr", d.learning_rate)?,
        optimizer,
        negatives: s.pick(a.negatives, "negatives", d.negatives)?,
        seed,
        hidden: s.pick(a.hidden, "hidden", d.hidden)?,
        embed: s.pick(a.embed, "embed", d.embed)?,
    };
    let features = FeatureConfig {
        random_dims: s.pick(a.random_dims, "random_dims", FeatureConfig::default().random_dims)?,
        seed,
    };
    let out = required(&s, a.out, "out")?;
    let loaded = load_graph(&s, a.input)?;
    let resolved = s.finish()?;
    config.validate()?;

    let mut run = Run::start("train", &out)?;
    for f in &loaded.files {
        run.input(f)?;
    }
    let view = build_view(&loaded.graph, features)?;
    run.lap("load");
    let outcome = gnn::train(&view, &config)?;
    run.lap("train");
    let model_path = run.path("model.json");
    outcome.model.save(&model_path)?;
    run.adopt("model.json")?;
    let mut csv = String::from("epoch,loss\n");
    for (i, l) in outcome.losses.iter().enumerate() {
        csv.push_str(&format!("{},{l}\n", i + 1));
    }
    run.write("loss_curve.csv", csv)?;
    run.lap("write");
    run.finish(resolved, seed)?;
    eprintln!(
        "loss {:.4} -> {:.4} over {} epochs",
        outcome.losses[0],
        outcome.losses.last().expect("epochs >= 1"),
        config.epochs
    );
    Ok(())
}

fn load_model(path: &Path) -> Result<GcnModel> {
    if !path.exists() {
        return Err(CliError::io(path, "no such file"));
    }
    Ok(GcnModel::load(path)?)
}

fn cmd_recommend(cfg: Option<&Path>, a: RecommendArgs) -> Result<()> {
    let s = Settings::load(cfg, "recommend")?;
    let model_path = required(&s, a.model, "model")?;
    let top_n = s.pick(a.top_n, "top_n", 10usize)?;
    let seed = s.seed(a.seed)?;
    let picked = s.pick(if a.student.is_empty() { None } else { Some(a.student) }, "student", Vec::new())?;
    let out = required(&s, a.out, "out")?;
    let loaded = load_graph(&s, a.input)?;
    let resolved = s.finish()?;
    if top_n == 0 {
        return Err(CliError::Usage("--top-n must be >= 1".into()));
    }

    let mut run = Run::start("recommend", &out)?;
    for f in &loaded.files {
        run.input(f)?;
    }
    run.input(&model_path)?;
    let model = load_model(&model_path)?;
    let view = build_view(&loaded.graph, model.feature_config)?;
    let emb = Embeddings::new(&model, &view)?;
    run.lap("load");
    let students: Vec<String> = if picked.is_empty() {
        loaded.graph.nodes_of_kind(NodeKind::Student).map(|n| n.id.clone()).collect()
    } else {
        picked
    };
    let mut recs = Vec::with_capacity(students.len());
    for st in &students {
        let r = emb.recommend(&loaded.graph, st, top_n)?;
        recs.push(json!({
            "student": r.student,
            "courses": r.ranked.iter().map(|(c, sc)| json!({"course": c, "score": sc})).collect::<Vec<_>>(),
        }));
    }
    run.lap("recommend");
    run.write_json(
        "recommendations.json",
        &json!({"schema_version": edurec::SCHEMA_VERSION, "top_n": top_n, "recommendations": recs}),
    )?;
    run.finish(resolved, seed)?;
    Ok(())
}

fn cmd_group(cfg: Option<&Path>, a: GroupArgs) -> Result<()> {
    let s = Settings::load(cfg, "group")?;
    let model_path = required(&s, a.model, "model")?;
    let g = s.pick(a.group_size, "group_size", edurec::groups::DEFAULT_GROUP_SIZE)?;
    let dim: PreferenceDimension = s
        .pick(a.dim, "dim", "category".to_owned())?
        .parse()
        .map_err(|e| CliError::Usage(format!("--dim: {e}")))?;
    let k = s.pick(a.k, "k", 3usize)?;
    let min_courses = s.pick(a.min_courses, "min_courses", stats::DEFAULT_MIN_COURSES)?;
    let seed = s.seed(a.seed)?;
    let out = required(&s, a.out, "out")?;
    let loaded = load_graph(&s, a.input)?;
    let resolved = s.finish()?;
    if g < 2 {
        return Err(GroupError::GroupSizeTooSmall(g).into());
    }

    let mut run = Run::start("group", &out)?;
    for f in &loaded.files {
        run.input(f)?;
    }
    run.input(&model_path)?;
    let model = load_model(&model_path)?;
    let view = build_view(&loaded.graph, model.feature_config)?;
    let emb = Embeddings::new(&model, &view)?;
    run.lap("load");
    let students = eligible_students(&loaded.graph, min_courses);
    let (features, clusters) = preference_clusters(&loaded.graph, &students, dim, k, seed)?;
    let assignments: BTreeMap<String, usize> =
        features.students.iter().cloned().zip(clusters.assignments.iter().copied()).collect();
    let groups = form_groups(&assignments, &emb.by_kind(NodeKind::Student), g, seed)?;
    let report = group_report(&groups);
    run.lap("group");
    run.write_json(
        "groups.json",
        &json!({
            "schema_version": edurec::SCHEMA_VERSION,
            "dimension": dim,
            "group_size": g,
            "k": k,
            "mean_cohesion": report.mean_cohesion,
            "total_members": report.total_members,
            "groups": report.groups,
        }),
    )?;
    run.finish(resolved, seed)?;
    Ok(())
}

fn cmd_cohort(cfg: Option<&Path>, a: CohortArgs) -> Result<()> {
    let s = Settings::load(cfg, "cohort")?;
    let career = s.pick(a.career, "career", "all".to_owned())?;
    let careers: Vec<&str> = if career.eq_ignore_ascii_case("all") {
        CAREERS.to_vec()
    } else {
        let c = CAREERS
            .iter()
            .find(|c| c.eq_ignore_ascii_case(&career))
            .ok_or_else(|| CliError::Usage(format!("--career: unknown career `{career}` (expected {})", CAREERS.join(", "))))?;
        vec![*c]
    };
    let dim: PreferenceDimension = s
        .pick(a.dim, "dim", "category".to_owned())?
        .parse()
        .map_err(|e| CliError::Usage(format!("--dim: {e}")))?;
    let scenario: IndicatorScenario = s
        .pick(a.scenario, "scenario", "TT".to_owned())?
        .parse()
        .map_err(|e| CliError::Usage(format!("--scenario: {e}")))?;
    let params = AssociationParams {
        k: s.pick(a.k, "k", 3)?,
        seed: s.seed(a.seed)?,
        min_courses: s.pick(a.min_courses, "min_courses", stats::DEFAULT_MIN_COURSES)?,
    };
    let out = required(&s, a.out, "out")?;
    let loaded = load_graph(&s, a.input)?;
    let resolved = s.finish()?;

    let mut run = Run::start("cohort", &out)?;
    for f in &loaded.files {
        run.input(f)?;
    }
    run.lap("load");
    // empty cohorts abort before anything is written; other failures are
    // recorded per cohort when several were requested
    let single = careers.len() == 1;
    let mut results = Vec::with_capacity(careers.len());
    for c in careers {
        match cohort_association(&loaded.graph, c, dim, scenario, &params) {
            Ok(assoc) => results.push((c, Ok(assoc))),
            Err(e @ (StatsError::EmptyCohort | StatsError::TooFewPoints { .. } | StatsError::UnknownCareer(_))) => {
                return Err(CliError::EmptyCohort(format!("cohort `{c}`: {e}")));
            }
            Err(e) if single => return Err(e.into()),
            Err(e) => results.push((c, Err(e))),
        }
    }
    run.lap("analyze");
    let mut failed = Vec::new();
    for (c, res) in &results {
        let name = format!("association_{c}.json");
        match res {
            Ok(assoc) => run.write_json(&name, &association_json(assoc, Some(c)))?,
            Err(e) => {
                failed.push(format!("cohort `{c}`: {e}"));
                run.write_json(
                    &name,
                    &json!({"schema_version": edurec::SCHEMA_VERSION, "cohort": c, "error": e.to_string()}),
                )?
            }
        };
    }
    run.lap("write");
    for f in &failed {
        run.warn(f.clone());
    }
    run.finish(resolved, params.seed)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Other(format!("{} of {} cohorts failed: {}", failed.len(), results.len(), failed.join("; "))))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = cli.config.as_deref();
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(cfg, a),
        Command::Analyze(a) => cmd_analyze(cfg, a),
        Command::Train(a) => cmd_train(cfg, a),
        Command::Recommend(a) => cmd_recommend(cfg, a),
        Command::Group(a) => cmd_group(cfg, a),
        Command::Cohort(a) => cmd_cohort(cfg, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
