use std::ffi::OsString;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use divrank::analysis::{
    agreement_experiment, det_curve, percentile_band, top_k_persistence, AgreementConfig,
    BandConfig, DiversityMethod,
};
use divrank::clustering::{kmeans, load_labels, KMeansConfig};
use divrank::corpus::{ingest, write_jsonl, InputFormat};
use divrank::io::{read_ranking, write_agreement, write_persistence, write_ranking, write_series};
use divrank::kernel::{load_kernel, load_points, rbf_kernel, save_kernel, validate, Sigma};
use divrank::moo::{evolve, select_indifference};
use divrank::quality::normalize_relevance;
use divrank::ranking::{greedy_diverse, mmr, quality_sort};
use divrank::synthetic::synthetic_ideas;
use divrank::{
    ClusterPartition, Corpus, Error, EvolveConfig, Result, SimilarityKernel, TradeoffFront,
};

/// Diversity-aware ranking: kernels, rankings, trade-off fronts and diagnostics.
#[derive(Parser, Debug)]
#[command(name = "divrank", version, args_override_self = true)]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Flat `key=value` file of default flag values; explicit flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Ingest and vectorize idea files.
    #[command(subcommand)]
    Corpus(CorpusCmd),
    /// Build, check and convert similarity kernels.
    #[command(subcommand)]
    Kernel(KernelCmd),
    /// Single rankings.
    Rank(RankArgs),
    /// Multi-objective trade-off fronts.
    #[command(subcommand)]
    Front(FrontCmd),
    /// Diagnostics over rankings, kernels and fronts.
    #[command(subcommand)]
    Analyze(AnalyzeCmd),
    /// Built-in checks.
    #[command(subcommand)]
    Bench(BenchCmd),
}

#[derive(Subcommand, Debug)]
enum CorpusCmd {
    /// Ingest a JSONL or CSV idea file and save the vectorized corpus.
    Build {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Input format; guessed from the extension when omitted.
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Write a synthetic topic-planted idea file (JSONL).
    Synth {
        #[arg(long, default_value_t = 200)]
        items: usize,
        #[arg(long, default_value_t = 15)]
        topics: usize,
        #[arg(long, default_value_t = 2017)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Format {
    Jsonl,
    Csv,
}

#[derive(Subcommand, Debug)]
enum KernelCmd {
    /// TF-IDF cosine kernel of a corpus.
    Build {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Report symmetry, diagonal, range and PSD checks.
    Check {
        kernel: PathBuf,
        /// Exit with status 2 when any check fails.
        #[arg(long)]
        strict: bool,
    },
    /// RBF kernel of a point file (`id,x1,x2,...`).
    Rbf {
        #[arg(long)]
        points: PathBuf,
        /// Bandwidth, a number or `median`.
        #[arg(long, default_value = "median")]
        sigma: Sigma,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum RankMethod {
    Greedy,
    Quality,
    Mmr,
}

#[derive(Args, Debug)]
struct RankArgs {
    #[arg(value_enum)]
    method: RankMethod,
    #[arg(long)]
    kernel: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Relevance weight for MMR.
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum FrontCmd {
    /// Evolve the quality/diversity trade-off front with NSGA-II.
    Run {
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 500)]
        pop: usize,
        #[arg(long, default_value_t = 1000)]
        gens: usize,
        #[arg(long, default_value_t = 0.8)]
        pc: f64,
        #[arg(long, default_value_t = 0.01)]
        pm: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Depth of the rank-diversity sum (default: all items).
        #[arg(long)]
        horizon: Option<usize>,
        /// Build the front from every evaluated ranking, not just the last population.
        #[arg(long)]
        archive_all: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pick the front point closest to the utopia point.
    Select {
        #[arg(long = "in")]
        input: PathBuf,
        /// Adds prefix determinants to the output when given.
        #[arg(long)]
        kernel: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum AnalyzeCmd {
    /// Prefix determinants of a ranking.
    DetCurve {
        #[arg(long)]
        ranking: PathBuf,
        #[arg(long)]
        kernel: PathBuf,
        /// Defaults to the number of items.
        #[arg(long)]
        max_k: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Percentile bands of prefix determinants over random permutations.
    Band {
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long, default_value_t = 5000)]
        samples: usize,
        #[arg(long, value_delimiter = ',', default_value = "5,95")]
        percentiles: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        max_k: usize,
        /// Writes `<prefix>_p<percentile>.csv` per percentile.
        #[arg(long)]
        out_prefix: PathBuf,
    },
    /// Item frequencies in the top k across a front.
    Persistence {
        #[arg(long)]
        front: PathBuf,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Agreement of div2 and div1 with cluster entropy on random sets.
    Agreement {
        #[arg(long)]
        points: PathBuf,
        /// Gold cluster labels (`id,label`).
        #[arg(long)]
        labels: PathBuf,
        /// Also score div1 under k-means partitions with these cluster counts.
        #[arg(long, value_delimiter = ',')]
        kmeans: Vec<usize>,
        #[arg(long, default_value = "median")]
        sigma: Sigma,
        #[arg(long, default_value_t = 2)]
        min_size: usize,
        #[arg(long, default_value_t = 20)]
        max_size: usize,
        #[arg(long, default_value_t = 500)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum BenchCmd {
    /// Check every worked example against its published value.
    Paperdemo,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Invalid(msg.into())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
}

/// A `.jsonl`/`.csv` file is ingested and vectorized; anything else is a saved corpus.
fn open_corpus(path: &Path) -> Result<Corpus> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("jsonl") || ext.eq_ignore_ascii_case("csv") => {
            ingest(path, InputFormat::from_path(path))?.vectorize()
        }
        _ => Corpus::load(path),
    }
}

fn kernel_for(path: &Path, corpus: &Corpus) -> Result<SimilarityKernel> {
    load_kernel(path)?.aligned_to(&corpus.ids())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Corpus(CorpusCmd::Build { input, out, format }) => {
            let fmt = match format {
                Some(Format::Jsonl) => InputFormat::Jsonl,
                Some(Format::Csv) => InputFormat::Csv,
                None => InputFormat::from_path(&input),
            };
            let corpus = ingest(&input, fmt)?.vectorize()?;
            corpus.save(&out)?;
            println!(
                "{} items, {} terms",
                corpus.len(),
                corpus.vocabulary().len()
            );
        }
        Command::Corpus(CorpusCmd::Synth {
            items,
            topics,
            seed,
            out,
        }) => {
            write_jsonl(&synthetic_ideas(items, topics, seed), create(&out)?)?;
        }
        Command::Kernel(KernelCmd::Build { corpus, out }) => {
            let corpus = open_corpus(&corpus)?;
            save_kernel(&divrank::kernel::cosine_kernel(&corpus)?, &out)?;
        }
        Command::Kernel(KernelCmd::Check { kernel, strict }) => {
            let k = load_kernel(&kernel)?;
            let r = validate(&k);
            println!(
                "n={} symmetric={} unit_diagonal={} in_range={} psd={} min_eigenvalue={:e}",
                k.n(),
                r.symmetric,
                r.unit_diagonal,
                r.entries_in_range,
                r.psd,
                r.min_eigenvalue
            );
            if strict && !r.is_valid() {
                return Err(Error::Numerical(format!(
                    "{}: kernel failed validation",
                    kernel.display()
                )));
            }
        }
        Command::Kernel(KernelCmd::Rbf { points, sigma, out }) => {
            let (ids, pts) = load_points(&points)?;
            save_kernel(&rbf_kernel(ids, &pts, sigma)?, &out)?;
        }
        Command::Rank(args) => rank(args)?,
        Command::Front(FrontCmd::Run {
            kernel,
            corpus,
            pop,
            gens,
            pc,
            pm,
            seed,
            horizon,
            archive_all,
            out,
        }) => {
            let corpus = open_corpus(&corpus)?;
            let kernel = kernel_for(&kernel, &corpus)?;
            let config = EvolveConfig {
                pop_size: pop,
                generations: gens,
                p_crossover: pc,
                p_mutation: pm,
                seed,
                horizon,
                archive_all,
            };
            config.validate()?;
            let mut front = evolve(&kernel, &normalize_relevance(&corpus.qualities()), &config)?;
            front.metadata.qualities = Some(corpus.qualities());
            front.save(&out)?;
            println!(
                "{} front points from {} evaluations",
                front.len(),
                front.metadata.evaluations
            );
        }
        Command::Front(FrontCmd::Select { input, kernel, out }) => {
            let front = TradeoffFront::load(&input)?;
            let chosen = select_indifference(&front)?;
            let ids = &front.metadata.item_ids;
            let kernel = kernel
                .map(|k| load_kernel(&k)?.aligned_to(ids))
                .transpose()?;
            write_ranking(
                &chosen.ranking,
                ids,
                front.metadata.qualities.as_deref(),
                kernel.as_ref(),
                create(&out)?,
            )?;
            println!(
                "fQuality={} fDiversity={} normQ={} normD={}",
                chosen.f_quality, chosen.f_diversity, chosen.norm_q, chosen.norm_d
            );
        }
        Command::Analyze(cmd) => analyze(cmd)?,
        Command::Bench(BenchCmd::Paperdemo) => {
            let checks = divrank::worked::checks()?;
            let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
            for c in &checks {
                println!(
                    "{}  {:width$}  expected {}  got {}",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.expected,
                    c.actual
                );
            }
            let failed = checks.iter().filter(|c| !c.pass).count();
            println!(
                "{} of {} checks passed",
                checks.len() - failed,
                checks.len()
            );
            if failed > 0 {
                return Err(invalid(format!("{failed} worked example(s) failed")));
            }
        }
    }
    Ok(())
}

fn rank(args: RankArgs) -> Result<()> {
    let corpus = args.corpus.as_deref().map(open_corpus).transpose()?;
    let kernel = match (&args.kernel, &corpus) {
        (Some(k), Some(c)) => Some(kernel_for(k, c)?),
        (Some(k), None) => Some(load_kernel(k)?),
        (None, _) => None,
    };
    let qualities = corpus.as_ref().map(|c| c.qualities());
    let need =
        |what: &str| invalid(format!("`rank {:?}` needs --{what}", args.method).to_lowercase());
    let ranking = match args.method {
        RankMethod::Greedy => {
            let k = kernel.as_ref().ok_or_else(|| need("kernel"))?;
            let rel = qualities.as_deref().map(normalize_relevance);
            greedy_diverse(k, rel.as_ref())
        }
        RankMethod::Quality => quality_sort(qualities.as_deref().ok_or_else(|| need("corpus"))?),
        RankMethod::Mmr => {
            let k = kernel.as_ref().ok_or_else(|| need("kernel"))?;
            let q = qualities.as_deref().ok_or_else(|| need("corpus"))?;
            mmr(k, &normalize_relevance(q), args.lambda)?
        }
    };
    let ids = match (&corpus, &kernel) {
        (Some(c), _) => c.ids(),
        (None, Some(k)) => k.ids().to_vec(),
        (None, None) => unreachable!("every method needs a kernel or a corpus"),
    };
    write_ranking(
        &ranking,
        &ids,
        qualities.as_deref(),
        kernel.as_ref(),
        create(&args.out)?,
    )
}

fn analyze(cmd: AnalyzeCmd) -> Result<()> {
    match cmd {
        AnalyzeCmd::DetCurve {
            ranking,
            kernel,
            max_k,
            out,
        } => {
            let k = load_kernel(&kernel)?;
            let raw = fs::read(&ranking).map_err(|source| Error::Io {
                path: ranking.clone(),
                source,
            })?;
            let r = read_ranking(raw.as_slice(), k.ids(), &ranking.display().to_string())?;
            write_series(&det_curve(&r, &k, max_k.unwrap_or(k.n()))?, create(&out)?)?;
        }
        AnalyzeCmd::Band {
            kernel,
            samples,
            percentiles,
            seed,
            max_k,
            out_prefix,
        } => {
            let k = load_kernel(&kernel)?;
            let band = percentile_band(
                &k,
                &BandConfig {
                    n_samples: samples,
                    percentiles,
                    seed,
                    max_k: max_k.min(k.n()),
                },
            )?;
            for (p, curve) in band.percentiles.iter().zip(&band.curves) {
                let path = PathBuf::from(format!("{}_p{p}.csv", out_prefix.display()));
                let series: Vec<(usize, f64)> =
                    curve.iter().enumerate().map(|(i, &v)| (i + 1, v)).collect();
                write_series(&series, create(&path)?)?;
            }
            match band.collapse_k {
                Some(c) => println!("top band drops below 1e-6 at k={c}"),
                None => println!("top band stays above 1e-6"),
            }
        }
        AnalyzeCmd::Persistence { front, k, out } => {
            let front = TradeoffFront::load(&front)?;
            let p = top_k_persistence(&front, k)?;
            write_persistence(&p, &front.metadata.item_ids, create(&out)?)?;
            println!(
                "{} unique ids in the top {} of {} rankings ({:.1}% of items)",
                p.frequency.len(),
                p.k,
                p.front_size,
                100.0 * p.compression
            );
        }
        AnalyzeCmd::Agreement {
            points,
            labels,
            kmeans: ks,
            sigma,
            min_size,
            max_size,
            trials,
            seed,
            out,
        } => {
            let (ids, pts) = load_points(&points)?;
            let gold = load_labels(&labels, &ids)?;
            let kernel = rbf_kernel(ids, &pts, sigma)?;
            let mut methods = vec![
                DiversityMethod::Dpp,
                DiversityMethod::Submodular {
                    name: "div1-gold".into(),
                    partition: gold.clone(),
                },
            ];
            for k in ks {
                let partition: ClusterPartition =
                    kmeans(&pts, &KMeansConfig::new(k, seed))?.partition;
                methods.push(DiversityMethod::Submodular {
                    name: format!("div1-k{k}"),
                    partition,
                });
            }
            if min_size == 0 || min_size > max_size {
                return Err(invalid("need 1 <= --min-size <= --max-size"));
            }
            let config = AgreementConfig {
                sizes: (min_size..=max_size).collect(),
                comparisons: trials,
                seed,
            };
            write_agreement(
                &agreement_experiment(&kernel, &gold, &methods, &config)?,
                create(&out)?,
            )?;
        }
    }
    Ok(())
}

/// `key=value` lines become `--key value` flags placed directly after the
/// subcommand, ahead of the user's own flags so that those win.
fn config_flags(path: &Path) -> Result<Vec<OsString>> {
    let raw = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut flags = Vec::new();
    for (n, line) in raw.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Format {
            path: path.display().to_string(),
            msg: format!("line {}: expected key=value", n + 1),
        })?;
        let (key, value) = (key.trim().replace('_', "-"), value.trim());
        match value {
            "true" => flags.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                flags.push(format!("--{key}").into());
                flags.push(value.into());
            }
        }
    }
    Ok(flags)
}

enum ParseFailure {
    Clap(clap::Error),
    Config(Error),
}

fn parse(args: Vec<OsString>) -> std::result::Result<Cli, ParseFailure> {
    let matches = Cli::command()
        .try_get_matches_from(&args)
        .map_err(ParseFailure::Clap)?;
    let cli = Cli::from_arg_matches(&matches).map_err(ParseFailure::Clap)?;
    let Some(config) = &cli.config else {
        return Ok(cli);
    };
    let extra = config_flags(config).map_err(ParseFailure::Config)?;
    let mut names = Vec::new();
    let mut m = &matches;
    while let Some((name, sub)) = m.subcommand() {
        names.push(name);
        m = sub;
    }
    // position just past the deepest subcommand name
    let mut at = 0;
    let mut found = 0;
    for (i, a) in args.iter().enumerate().skip(1) {
        if found < names.len() && a.to_str() == Some(names[found]) {
            found += 1;
            at = i + 1;
        }
    }
    let mut merged = args[..at].to_vec();
    merged.extend(extra);
    merged.extend_from_slice(&args[at..]);
    Cli::try_parse_from(merged).map_err(ParseFailure::Clap)
}

fn main() -> ExitCode {
    let cli = match parse(std::env::args_os().collect()) {
        Ok(cli) => cli,
        Err(ParseFailure::Config(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
        Err(ParseFailure::Clap(e)) => {
            use clap::error::ErrorKind::*;
            return match e.kind() {
                DisplayHelp | DisplayVersion | DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = e.print();
                    ExitCode::SUCCESS
                }
                _ => {
                    eprintln!("{}", e.to_string().lines().next().unwrap_or_default());
                    ExitCode::from(1)
                }
            };
        }
    };
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
