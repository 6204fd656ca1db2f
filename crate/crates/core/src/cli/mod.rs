//! Command-line front end. Each subcommand maps files and flags to report
//! bytes; [`run`] is what the binary calls.

pub mod dataset;
pub mod params;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use crate::characterize::{
    global_independence_test, local_parameter_test, GlobalTestConfig, InterceptScale, LocalForm, Mode,
    PartitionSpec,
};
use crate::dag::{self, default_names, Dag};
use crate::error::Error;
use crate::linalg::IndexSet;
use crate::prior::{parse_prior_config, NormalWishartPrior};
use crate::report::fmt_report;
use crate::sampler::{sample_dataset, sample_local_params, RandomSeed};
use crate::score::{structure_posterior, Scorer};
use crate::search::{greedy_search_with, SearchConfig};

pub use dataset::{parse_dataset, read_dataset, Dataset};
pub use params::{params_to_text, parse_params};

#[derive(Debug, Parser)]
#[command(name = "gaussdag", version, about = "Gaussian DAG scoring, structure learning and prior checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Log marginal likelihood of a DAG with its per-family breakdown.
    Score(ScoreArgs),
    /// Greedy structure search.
    Learn(LearnArgs),
    /// Posterior over all DAGs on up to four variables.
    Posterior(PosteriorArgs),
    /// Draw a dataset from a DAG model.
    Sample(SampleArgs),
    /// Decide Markov equivalence of two DAGs.
    Equiv(EquivArgs),
    /// Enumerate DAGs on n nodes and their equivalence classes.
    Classes(ClassesArgs),
    /// Monte Carlo independence checks of the normal-Wishart prior.
    Characterize(CharacterizeArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output file (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub dag: PathBuf,
    #[arg(long)]
    pub prior: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct LearnArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub prior: Option<PathBuf>,
    /// Starting DAG (default: no arcs).
    #[arg(long)]
    pub dag: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iterations: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct PosteriorArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub prior: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub dag: PathBuf,
    /// Regression parameter file.
    #[arg(long, conflicts_with = "from_prior", required_unless_present = "from_prior")]
    pub params: Option<PathBuf>,
    /// Draw the parameters from the prior's local regression laws.
    #[arg(long)]
    pub from_prior: bool,
    #[arg(long)]
    pub prior: Option<PathBuf>,
    #[arg(long)]
    pub rows: usize,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct EquivArgs {
    #[arg(long)]
    pub dag: PathBuf,
    #[arg(long)]
    pub dag2: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ClassesArgs {
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct CharacterizeArgs {
    /// wishart, normal-mean, normal-wishart, local or local-raw.
    #[arg(long)]
    pub mode: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub prior: Option<PathBuf>,
    /// Comma list of block-1 names among X1..Xn (default: all but the last).
    #[arg(long)]
    pub partition: Option<String>,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub common: Common,
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    /// Help or version text was requested.
    Info(String),
    Usage(String),
    Run(Error),
}

impl CliError {
    /// 1 for usage errors, 3 for numerical failures, 2 for invalid input.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Info(_) => 0,
            CliError::Usage(_) => 1,
            CliError::Run(e) if e.is_numerical() => 3,
            CliError::Run(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Info(m) => f.write_str(m),
            CliError::Usage(m) => f.write_str(m),
            CliError::Run(e) => write!(f, "error: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Header of every report: command echo, input hashes and seed, as `#` lines.
struct RunReport {
    header: String,
}

impl RunReport {
    fn new(argv: &[String]) -> Self {
        Self { header: format!("# command: gaussdag {}\n", argv.join(" ")) }
    }

    fn input(&mut self, label: &str, path: &Path, bytes: &[u8]) {
        let digest = hex::encode(Sha256::digest(bytes));
        self.header.push_str(&format!("# input {label} {} sha256={digest}\n", path.display()));
    }

    fn seed(&mut self, seed: u64) {
        self.header.push_str(&format!("# seed: {seed}\n"));
    }

    fn finish(self, body: &str) -> String {
        format!("{}{}", self.header, body)
    }
}

fn read_input(report: &mut RunReport, label: &str, path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    report.input(label, path, &bytes);
    String::from_utf8(bytes)
        .map_err(|_| Error::Parse { line: 1, column: 1, message: format!("{} is not UTF-8", path.display()) }.into())
}

fn load_dataset(report: &mut RunReport, path: &Path) -> CliResult<Dataset> {
    Ok(parse_dataset(&read_input(report, "data", path)?)?)
}

fn load_dag(report: &mut RunReport, label: &str, path: &Path) -> CliResult<Dag> {
    Ok(Dag::parse(&read_input(report, label, path)?)?)
}

fn load_prior(report: &mut RunReport, path: Option<&Path>, n: usize) -> CliResult<NormalWishartPrior> {
    match path {
        None => Ok(NormalWishartPrior::default_for(n)),
        Some(p) => {
            let text = read_input(report, "prior", p)?;
            let base = p.parent().unwrap_or(Path::new("."));
            Ok(parse_prior_config(&text, n, base)?)
        }
    }
}

/// Parses `args` (without the program name), runs the command and returns the
/// report text together with the requested output path.
pub fn execute(args: &[String]) -> CliResult<(String, Option<PathBuf>)> {
    let cli = Cli::try_parse_from(std::iter::once("gaussdag".to_string()).chain(args.iter().cloned()))
        .map_err(|e| match e.kind() {
            clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                CliError::Info(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        })?;
    let report = RunReport::new(args);
    match cli.command {
        Command::Score(a) => Ok((score(report, &a)?, a.common.out)),
        Command::Learn(a) => Ok((learn(report, &a)?, a.common.out)),
        Command::Posterior(a) => Ok((posterior(report, &a)?, a.common.out)),
        Command::Sample(a) => Ok((sample(report, &a)?, a.common.out)),
        Command::Equiv(a) => Ok((equiv(report, &a)?, a.common.out)),
        Command::Classes(a) => Ok((classes(report, &a)?, a.common.out)),
        Command::Characterize(a) => Ok((characterize(report, &a)?, a.common.out)),
    }
}

/// Runs a command and writes its report; returns the process exit code.
pub fn run(args: &[String]) -> i32 {
    let result = execute(args).and_then(|(text, out)| match out {
        Some(path) => std::fs::write(&path, text)
            .map_err(|e| CliError::Run(Error::Io(format!("{}: {e}", path.display())))),
        None => {
            print!("{text}");
            Ok(())
        }
    });
    match result {
        Ok(()) => 0,
        Err(CliError::Info(msg)) => {
            print!("{msg}");
            0
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn parents_label(g: &Dag, node: usize) -> String {
    let ps: Vec<&str> = g.parents(node).iter().map(|j| g.names()[j].as_str()).collect();
    if ps.is_empty() {
        "(none)".into()
    } else {
        ps.join(",")
    }
}

fn score(mut report: RunReport, a: &ScoreArgs) -> CliResult<String> {
    let data = load_dataset(&mut report, &a.data)?;
    let g = load_dag(&mut report, "dag", &a.dag)?.align_to(&data.names)?;
    let prior = load_prior(&mut report, a.prior.as_deref(), data.n())?;
    let scorer = Scorer::new(prior, &data.rows)?;
    let families = scorer.family_breakdown(&g)?;
    let mut body = format!("log_score = {}\n", fmt_report(families.iter().sum()));
    body.push_str("node parents family_log_score\n");
    for (i, f) in families.iter().enumerate() {
        body.push_str(&format!("{} {} {}\n", g.names()[i], parents_label(&g, i), fmt_report(*f)));
    }
    Ok(report.finish(&body))
}

fn learn(mut report: RunReport, a: &LearnArgs) -> CliResult<String> {
    let data = load_dataset(&mut report, &a.data)?;
    let start = match &a.dag {
        Some(p) => load_dag(&mut report, "start", p)?.align_to(&data.names)?,
        None => Dag::empty_named(data.names.clone())?,
    };
    let prior = load_prior(&mut report, a.prior.as_deref(), data.n())?;
    report.seed(a.seed);
    let cfg = SearchConfig {
        max_iterations: a.max_iterations,
        restarts: a.restarts,
        seed: RandomSeed(a.seed),
        ..SearchConfig::default()
    };
    let scorer = Scorer::new(prior, &data.rows)?;
    let res = greedy_search_with(&scorer, &start, &cfg)?;
    let mut body = format!("log_score = {}\n", fmt_report(res.score));
    body.push_str("# best dag\n");
    body.push_str(&res.best.to_text());
    body.push_str("# trace\n");
    body.push_str(&res.trace_text());
    Ok(report.finish(&body))
}

fn rename(g: &Dag, names: &[String]) -> CliResult<Dag> {
    Ok(Dag::new(names.to_vec(), &g.arcs())?)
}

fn posterior(mut report: RunReport, a: &PosteriorArgs) -> CliResult<String> {
    let data = load_dataset(&mut report, &a.data)?;
    let prior = load_prior(&mut report, a.prior.as_deref(), data.n())?;
    let post = structure_posterior(&prior, &data.rows)?;
    let dags: Vec<Dag> = post.iter().map(|(g, _)| rename(g, &data.names)).collect::<CliResult<_>>()?;
    let classes = dag::equivalence_classes(&dags)?;
    let mut body = String::from("# dag posterior\n");
    for (g, (_, p)) in dags.iter().zip(&post) {
        body.push_str(&format!("{} {}\n", g, fmt_report(*p)));
    }
    body.push_str("# equivalence class posterior\n");
    let mut class_mass: Vec<(f64, &Vec<usize>)> =
        classes.iter().map(|c| (c.iter().map(|&i| post[i].1).sum(), c)).collect();
    class_mass.sort_by(|x, y| y.0.total_cmp(&x.0));
    for (mass, members) in class_mass {
        body.push_str(&format!("{} {}\n", dags[members[0]], fmt_report(mass)));
    }
    body.push_str(&format!("sum = {}\n", fmt_report(post.iter().map(|(_, p)| p).sum())));
    Ok(report.finish(&body))
}

fn sample(mut report: RunReport, a: &SampleArgs) -> CliResult<String> {
    let g = load_dag(&mut report, "dag", &a.dag)?;
    report.seed(a.seed);
    let seed = RandomSeed(a.seed);
    let params = match &a.params {
        Some(p) => parse_params(&read_input(&mut report, "params", p)?, &g)?,
        None => {
            let prior = load_prior(&mut report, a.prior.as_deref(), g.n())?;
            sample_local_params(&prior, &g, seed.derive(1))?
        }
    };
    let rows = sample_dataset(&params, &g, a.rows, seed)?;
    let data = Dataset { names: g.names().to_vec(), rows };
    if a.from_prior {
        for line in params_to_text(&params, &g).lines() {
            report.header.push_str(&format!("# params {line}\n"));
        }
    }
    Ok(report.finish(&data.to_csv()))
}

fn arc_list(g: &Dag, arcs: impl Iterator<Item = (usize, usize)>, sep: &str) -> String {
    let v: Vec<String> = arcs.map(|(u, w)| format!("{}{sep}{}", g.names()[u], g.names()[w])).collect();
    if v.is_empty() {
        "(none)".into()
    } else {
        v.join(" ")
    }
}

fn equiv(mut report: RunReport, a: &EquivArgs) -> CliResult<String> {
    let g1 = load_dag(&mut report, "dag", &a.dag)?;
    let g2 = load_dag(&mut report, "dag2", &a.dag2)?.align_to(g1.names())?;
    let eq = dag::equivalent(&g1, &g2)?;
    let (s1, s2) = (g1.skeleton(), g2.skeleton());
    let (v1, v2) = (g1.v_structures(), g2.v_structures());
    let vlist = |vs: Vec<&(usize, usize, usize)>| {
        let v: Vec<String> = vs
            .iter()
            .map(|&&(i, j, k)| format!("{}->{}<-{}", g1.names()[i], g1.names()[j], g1.names()[k]))
            .collect();
        if v.is_empty() {
            "(none)".to_string()
        } else {
            v.join(" ")
        }
    };
    let mut body = format!("equivalent = {eq}\n");
    body.push_str(&format!("skeleton_only_in_dag = {}\n", arc_list(&g1, s1.difference(&s2).copied(), "-")));
    body.push_str(&format!("skeleton_only_in_dag2 = {}\n", arc_list(&g1, s2.difference(&s1).copied(), "-")));
    body.push_str(&format!("v_structures_only_in_dag = {}\n", vlist(v1.difference(&v2).collect())));
    body.push_str(&format!("v_structures_only_in_dag2 = {}\n", vlist(v2.difference(&v1).collect())));
    Ok(report.finish(&body))
}

fn classes(report: RunReport, a: &ClassesArgs) -> CliResult<String> {
    let dags = dag::enumerate_dags(a.n)?;
    let classes = dag::equivalence_classes(&dags)?;
    let mut sizes = std::collections::BTreeMap::new();
    for c in &classes {
        *sizes.entry(c.len()).or_insert(0usize) += 1;
    }
    let mut body = format!("n = {}\ndags = {}\nclasses = {}\n", a.n, dags.len(), classes.len());
    body.push_str("# class size: count\n");
    for (size, count) in sizes {
        body.push_str(&format!("{size}: {count}\n"));
    }
    Ok(report.finish(&body))
}

fn parse_partition(spec: &str, n: usize) -> CliResult<PartitionSpec> {
    let names = default_names(n);
    let mut idx = Vec::new();
    for name in spec.split(',').map(str::trim) {
        let i = names
            .iter()
            .position(|x| x == name)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown variable {name:?} in partition")))?;
        idx.push(i);
    }
    Ok(PartitionSpec::new(IndexSet::new(idx, n)?, n)?)
}

fn characterize(mut report: RunReport, a: &CharacterizeArgs) -> CliResult<String> {
    if a.n < 2 {
        return Err(Error::InvalidConfig("--n must be at least 2".into()).into());
    }
    let prior = load_prior(&mut report, a.prior.as_deref(), a.n)?;
    report.seed(a.seed);
    let seed = RandomSeed(a.seed);
    let reports = match a.mode.as_str() {
        "local" | "local-raw" => {
            if a.partition.is_some() {
                return Err(CliError::Usage("--partition does not apply to local modes".into()));
            }
            let form = if a.mode == "local" {
                LocalForm::Standardized(InterceptScale::Precision)
            } else {
                LocalForm::Raw
            };
            vec![local_parameter_test(&prior, form, a.samples, seed)?]
        }
        m => {
            let mode: Mode = m.parse()?;
            let partition = match &a.partition {
                Some(s) => parse_partition(s, a.n)?,
                None => PartitionSpec::last_coordinate(a.n)?,
            };
            global_independence_test(mode, &GlobalTestConfig::new(prior, partition, a.samples, seed))?
        }
    };
    let body: Vec<String> = reports.iter().map(|r| r.to_text()).collect();
    Ok(report.finish(&body.join("")))
}
