//! The `peerkit` command line.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::eval::evaluate;
use crate::io::{
    emit_report, parse_langmap, parse_measure_spec, parse_qrels, parse_run, write_langmap, write_qrels, write_run,
    MeasureSpec, ReportFormat,
};
use crate::model::{Language, RankMode};
use crate::synth::{assign_languages, AssignmentSpec, Pattern, PatternSpec};

/// Measures computed when `eval` gets no `--measure`.
pub const DEFAULT_MEASURES: [&str; 8] = [
    "nDCG@20",
    "aDCG@20",
    "AWRF@20",
    "PEER@20",
    "Recall@1000",
    "aDCG@1000",
    "AWRF@1000",
    "PEER@1000",
];

#[derive(Debug, Parser)]
#[command(name = "peerkit", version, about = "Language fairness evaluation for multilingual retrieval runs")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a run against judgments and a language map.
    Eval(EvalArgs),
    /// Write a synthetic run, qrels and language map for one pattern.
    Synth(SynthArgs),
    /// Randomly reassign languages over an existing run and score each trial.
    Assign(AssignArgs),
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    qrels: PathBuf,
    #[arg(long)]
    langmap: PathBuf,
    /// Measure strings such as `PEER@20` or `PEER(w=0:0,1:1)@1000`.
    #[arg(long, num_args = 1..)]
    measure: Vec<String>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "tsv", value_parser = ["tsv", "json"])]
    format: String,
    /// Also print one row per query.
    #[arg(long)]
    per_query: bool,
    /// Order each ranked list by the declared rank column instead of score.
    #[arg(long)]
    strict_ranks: bool,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// shifting, moving_single, interleaving or increasing_length.
    #[arg(long)]
    pattern: String,
    /// Pattern parameters as KEY=VALUE, e.g. `n=25 step=3`.
    #[arg(long, num_args = 1..)]
    params: Vec<String>,
    /// Writes PREFIX.run, PREFIX.qrels and PREFIX.langmap.
    #[arg(long)]
    out_prefix: PathBuf,
    /// Minority and majority language labels.
    #[arg(long, num_args = 2, default_values = ["A", "B"])]
    langs: Vec<String>,
}

#[derive(Debug, Args)]
struct AssignArgs {
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    qrels: PathBuf,
    /// Sampling mean for relevant documents, LANG=MU; give exactly two.
    #[arg(long, num_args = 1..)]
    mean: Vec<String>,
    /// Sampling mean for nonrelevant documents, LANG=MU; defaults to --mean.
    #[arg(long, num_args = 1..)]
    nonrel_mean: Vec<String>,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0.45)]
    min_share: f64,
    /// Fixed number of relevant documents for the first language.
    #[arg(long)]
    rel_split: Option<usize>,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, num_args = 1.., default_values = ["PEER@1000"])]
    measure: Vec<String>,
    /// Writes PREFIX.trialN.langmap for every trial.
    #[arg(long)]
    out_prefix: Option<PathBuf>,
    #[arg(long)]
    strict_ranks: bool,
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Eval(args) => with_threads(args.threads, || run_eval(&args)),
        Command::Synth(args) => run_synth(&args),
        Command::Assign(args) => with_threads(args.threads, || run_assign(&args)),
    }
}

fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(f)
}

fn rank_mode(strict: bool) -> RankMode {
    if strict {
        RankMode::Declared
    } else {
        RankMode::Score
    }
}

fn parse_measures(list: &[String]) -> Result<Vec<MeasureSpec>> {
    list.iter().map(|s| parse_measure_spec(s)).collect()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn run_eval(args: &EvalArgs) -> Result<()> {
    let specs = if args.measure.is_empty() {
        DEFAULT_MEASURES.iter().map(|s| parse_measure_spec(s)).collect::<Result<Vec<_>>>()?
    } else {
        parse_measures(&args.measure)?
    };
    let format: ReportFormat = args.format.parse()?;
    let run = parse_run(&args.run, rank_mode(args.strict_ranks))?;
    let qrels = parse_qrels(&args.qrels)?;
    let langmap = parse_langmap(&args.langmap)?;
    let report = evaluate(&run, &qrels, &langmap, &specs)?;

    match &args.out {
        Some(path) => emit_report(&report, format, args.per_query, create(path)?).map_err(write_err(path)),
        None => emit_report(&report, format, args.per_query, std::io::stdout().lock()).map_err(write_err(Path::new("<stdout>"))),
    }
}

fn parse_key_values<T: std::str::FromStr>(items: &[String], what: &str) -> Result<Vec<(String, T)>> {
    items
        .iter()
        .map(|item| {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("{what} {item:?} is not KEY=VALUE")))?;
            let v = v
                .parse::<T>()
                .map_err(|_| Error::Config(format!("{what} {item:?} has an invalid value")))?;
            Ok((k.to_string(), v))
        })
        .collect()
}

fn run_synth(args: &SynthArgs) -> Result<()> {
    let params: BTreeMap<String, usize> = parse_key_values(&args.params, "parameter")?.into_iter().collect();
    let spec = PatternSpec {
        pattern: Pattern::from_params(&args.pattern, &params)?,
        minority: Language::new(args.langs[0].as_str())?,
        majority: Language::new(args.langs[1].as_str())?,
    };
    let data = spec.generate()?;

    let run_path = with_suffix(&args.out_prefix, ".run");
    let mut w = create(&run_path)?;
    write_run(&mut w, &data.run, "synth")
        .and_then(|_| w.flush())
        .map_err(write_err(&run_path))?;

    let qrels_path = with_suffix(&args.out_prefix, ".qrels");
    let mut w = create(&qrels_path)?;
    write_qrels(&mut w, &data.qrels)
        .and_then(|_| w.flush())
        .map_err(write_err(&qrels_path))?;

    let map_path = with_suffix(&args.out_prefix, ".langmap");
    let mut w = create(&map_path)?;
    write_langmap(&mut w, &data.langmap)
        .and_then(|_| w.flush())
        .map_err(write_err(&map_path))
}

fn language_means(items: &[String], what: &str) -> Result<BTreeMap<Language, f64>> {
    let mut out = BTreeMap::new();
    for (k, v) in parse_key_values::<f64>(items, what)? {
        if out.insert(Language::new(k.as_str())?, v).is_some() {
            return Err(Error::Config(format!("{what} for {k} given twice")));
        }
    }
    Ok(out)
}

fn run_assign(args: &AssignArgs) -> Result<()> {
    let specs = parse_measures(&args.measure)?;
    let run = parse_run(&args.run, rank_mode(args.strict_ranks))?;
    let qrels = parse_qrels(&args.qrels)?;
    let spec = AssignmentSpec {
        means: language_means(&args.mean, "--mean")?,
        nonrel_means: if args.nonrel_mean.is_empty() {
            None
        } else {
            Some(language_means(&args.nonrel_mean, "--nonrel-mean")?)
        },
        sigma: args.sigma,
        min_nonrel_share: args.min_share,
        rel_split: args.rel_split,
        seed: args.seed,
        trials: args.trials,
    };
    let maps = assign_languages(&run, &qrels, &spec)?;

    let mut sums = vec![0.0; specs.len()];
    let mut rows = Vec::new();
    for (trial, map) in maps.iter().enumerate() {
        if let Some(prefix) = &args.out_prefix {
            let path = with_suffix(prefix, &format!(".trial{trial}.langmap"));
            let mut w = create(&path)?;
            write_langmap(&mut w, map)
                .and_then(|_| w.flush())
                .map_err(write_err(&path))?;
        }
        let report = evaluate(&run, &qrels, map, &specs)?;
        for (i, m) in report.measures.iter().enumerate() {
            sums[i] += m.aggregate;
            rows.push((i, format!("{}\ttrial{trial}\t{:.4}", m.measure, m.aggregate)));
        }
    }
    rows.sort_by_key(|(i, _)| *i);

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let mut emit = || -> std::io::Result<()> {
        for (i, spec) in specs.iter().enumerate() {
            for (_, row) in rows.iter().filter(|(j, _)| *j == i) {
                writeln!(out, "{row}")?;
            }
            writeln!(out, "{spec}\tall\t{:.4}", sums[i] / maps.len() as f64)?;
        }
        out.flush()
    };
    emit().map_err(write_err(Path::new("<stdout>")))
}
