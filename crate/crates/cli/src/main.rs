mod commands;
mod corpus;
mod problem;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use conservkit::error::{Error, Result};
use conservkit::Context;

use commands::{Caps, DiscoverOptions, LinearTask};
use problem::{parse_basis_list, parse_problem, Problem};
use report::{Report, Status, SCHEMA};

#[derive(Parser, Debug)]
#[command(name = "conservkit", version, about = "Local conservation laws of evolution equations u_t = F(t, x, u, u1, ...)")]
struct Cli {
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    /// Write every checked identity with its normalized difference to FILE.
    #[arg(long, global = true, value_name = "FILE")]
    proof_log: Option<PathBuf>,
    /// Run the bundled golden corpus.
    #[arg(long)]
    check_paper: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Debug)]
struct FileArg {
    file: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse a problem file and print its normalized contents.
    Parse(FileArg),
    /// Verify densities and conserved vectors.
    Verify(FileArg),
    /// Characteristics of the conservation laws.
    Characteristic(FileArg),
    /// Reduce densities to minimal order.
    Reduce(FileArg),
    /// Decide whether densities are total x-derivatives.
    Trivial(FileArg),
    /// Transform the equation by each transformation.
    Transform(FileArg),
    /// Push every law forward through every transformation.
    Pushforward(FileArg),
    /// Linear equations u_t = A u.
    Linear {
        task: Task,
        file: PathBuf,
        /// Highest jet order r in the cosymmetry ansatz.
        #[arg(long)]
        r: Option<usize>,
        /// Degree in (t, x) of the polynomial ansatz.
        #[arg(long)]
        degree: Option<usize>,
    },
    /// Search a finite ansatz for conservation laws.
    Discover {
        file: PathBuf,
        #[arg(long)]
        max_order: Option<usize>,
        #[arg(long)]
        jet_degree: Option<usize>,
        #[arg(long)]
        tx_degree: Option<usize>,
        /// File with basis terms separated by commas or semicolons.
        #[arg(long)]
        basis_file: Option<PathBuf>,
        /// Drop automatic terms affine in their top derivative.
        #[arg(long)]
        gauge: bool,
        /// Also scan the basis for cosymmetries.
        #[arg(long)]
        cosymmetries: bool,
    },
    /// Check the expectations of the bundled corpus, or of the given files.
    CheckPaper { files: Vec<PathBuf> },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Task {
    Adjoint,
    Flux,
    Determine,
    Gamma,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Problem(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Problem> {
    parse_problem(&read(path)?, Context::from_env()?)
}

fn run_file(path: &Path, f: impl FnOnce(&Problem) -> Result<Report>) -> Result<Vec<Report>> {
    let p = load(path)?;
    let mut r = f(&p)?;
    r.file = Some(path.display().to_string());
    Ok(vec![r])
}

fn check_paper(files: &[PathBuf]) -> Result<Vec<Report>> {
    let mut out = Vec::new();
    if files.is_empty() {
        for (name, text) in corpus::CORPUS {
            let p = parse_problem(text, Context::from_env()?).map_err(|e| Error::Problem(format!("{name}: {e}")))?;
            out.push(corpus::check(&p, name));
        }
    } else {
        for f in files {
            out.push(corpus::check(&load(f)?, &f.display().to_string()));
        }
    }
    Ok(out)
}

fn run(cli: &Cli) -> Result<Vec<Report>> {
    let Some(cmd) = &cli.command else {
        if cli.check_paper {
            return check_paper(&[]);
        }
        return Err(Error::Problem("no subcommand given; see --help".into()));
    };
    match cmd {
        Command::Parse(a) => run_file(&a.file, |p| Ok(commands::parse_summary(p))),
        Command::Verify(a) => run_file(&a.file, commands::verify),
        Command::Characteristic(a) => run_file(&a.file, commands::characteristics),
        Command::Reduce(a) => run_file(&a.file, commands::reduce),
        Command::Trivial(a) => run_file(&a.file, commands::trivial),
        Command::Transform(a) => run_file(&a.file, commands::transform),
        Command::Pushforward(a) => run_file(&a.file, commands::pushforward),
        Command::Linear { task, file, r, degree } => {
            let task = match task {
                Task::Adjoint => LinearTask::Adjoint,
                Task::Flux => LinearTask::Flux,
                Task::Determine => LinearTask::Determine,
                Task::Gamma => LinearTask::Gamma,
            };
            run_file(file, |p| commands::linear(p, task, Caps::resolve(p, *r, *degree)))
        }
        Command::Discover {
            file,
            max_order,
            jet_degree,
            tx_degree,
            basis_file,
            gauge,
            cosymmetries,
        } => run_file(file, |p| {
            let basis = match basis_file {
                Some(b) => Some(parse_basis_list(&read(b)?, &p.ctx)?),
                None => None,
            };
            let o = DiscoverOptions {
                max_order: *max_order,
                jet_degree: *jet_degree,
                tx_degree: *tx_degree,
                basis,
                gauge: *gauge,
                cosymmetries: *cosymmetries,
            };
            commands::discover(p, &o)
        }),
        Command::CheckPaper { files } => check_paper(files),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (reports, status, error) = match run(&cli) {
        Ok(rs) => {
            let s = rs.iter().map(Report::status).max().unwrap_or(Status::Ok);
            (rs, s, None)
        }
        Err(e) => (Vec::new(), Status::Error, Some(e.to_string())),
    };
    if cli.json {
        let doc = match (&error, reports.len()) {
            (Some(e), _) => serde_json::json!({"schema": SCHEMA, "status": "error", "error": e, "items": [], "proof": []}),
            (None, 1) => reports[0].to_json(),
            (None, _) => serde_json::json!({
                "schema": SCHEMA,
                "status": status.as_str(),
                "reports": reports.iter().map(Report::to_json).collect::<Vec<_>>(),
            }),
        };
        println!("{}", serde_json::to_string_pretty(&doc).expect("serializable"));
    } else {
        for r in &reports {
            print!("{}", r.to_text());
        }
        if let Some(e) = &error {
            eprintln!("error: {e}");
        }
    }
    if let Some(path) = &cli.proof_log {
        let log: String = reports.iter().map(Report::proof_log).collect();
        if let Err(e) = std::fs::write(path, log) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(2);
        }
    }
    ExitCode::from(status.exit_code() as u8)
}
