use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use treerules::config::{RunConfig, SortKey};
use treerules::pipeline::{load_corpus, run_jobs};
use treerules::report::Report;
use treerules::Error;

/// Extract ranked grammar rules from dependency treebanks.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every job in a config file and write one report pair per job.
    Extract {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (default: the config's `out_dir`, else `.`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        significant_only: bool,
        #[arg(long, value_parser = ["path", "gtest"])]
        sort: Option<String>,
        #[arg(long)]
        top_k: Option<usize>,
        /// Worker threads for job-level and counting parallelism.
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TREERULES_LOG", "warn")).init();
    let Command::Extract {
        config,
        out,
        significant_only,
        sort,
        top_k,
        threads,
    } = Cli::parse().command;
    match extract(config, out, significant_only, sort, top_k, threads) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn extract(
    config_path: PathBuf,
    out: Option<PathBuf>,
    significant_only: bool,
    sort: Option<String>,
    top_k: Option<usize>,
    threads: Option<usize>,
) -> Result<(), Error> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::InvalidArgument("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    let mut config = RunConfig::from_file(&config_path)?;
    if significant_only {
        config.report.significant_only = true;
    }
    if let Some(s) = sort {
        config.report.sort = s.parse::<SortKey>().map_err(Error::InvalidArgument)?;
    }
    if top_k.is_some() {
        config.report.top_k = top_k;
    }
    let out_dir = out.or_else(|| config.out_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir).map_err(|source| Error::Io {
        path: out_dir.clone(),
        source,
    })?;

    let corpus = load_corpus(&config)?;
    let diagnostics: Vec<String> = corpus
        .treebank
        .diagnostics
        .iter()
        .map(|d| format!("{}:{}: {}", d.file, d.line, d.message))
        .collect();
    let mut first_error = None;
    for (job, outcome) in config.jobs.iter().zip(run_jobs(&corpus, &config)) {
        match outcome {
            Ok(outcome) => {
                let report = Report::build(&config, &corpus.files, &diagnostics, &outcome);
                write(&out_dir.join(format!("{}.report.json", job.name)), &report.to_json()?)?;
                let md = out_dir.join(format!("{}.report.md", job.name));
                write(&md, &report.to_markdown())?;
                println!(
                    "{}: μ = {:.4}, #(S) = {}, {} rules -> {}",
                    job.name,
                    report.scope.mu,
                    report.scope.n_scope,
                    report.rules.len(),
                    md.display()
                );
            }
            Err(e) => {
                eprintln!("job {}: error: {e}", job.name);
                first_error.get_or_insert(e);
            }
        }
    }
    first_error.map_or(Ok(()), Err)
}

fn write(path: &std::path::Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
