//! Command-line front end. Failures are written to stderr as one JSON
//! object per line.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::config::{parse_config, ExperimentKind, FieldError, Format};
use crate::run::{run_experiment, ExperimentError};
use crate::table::emit;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "mflab", version, about = "Mean-field limit experiments on small bosonic systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Reduced-density and characteristic-function convergence in N.
    Convergence(Common),
    /// Duhamel residual of the characteristic function.
    Duhamel(Common),
    /// Weak Liouville residual of a transported particle measure.
    Liouville(Common),
    /// Randomized and grid checks of the operator identities.
    AlgebraAudit(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides `numerics.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `output.dir`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Validate the configuration and exit.
    #[arg(long)]
    dry_run: bool,
    /// Overrides `output.format` (csv or json-lines).
    #[arg(long)]
    format: Option<String>,
}

fn report_fields(errors: &[FieldError]) {
    for e in errors {
        eprintln!("{}", json!({"kind": "validation", "path": e.path, "message": e.message}));
    }
}

fn report_io(path: &str, message: String) {
    eprintln!("{}", json!({"kind": "io", "path": path, "message": message}));
}

/// Parses `args` (program name first), runs and returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let (kind, opts) = match cli.command {
        Command::Convergence(o) => (ExperimentKind::Convergence, o),
        Command::Duhamel(o) => (ExperimentKind::Duhamel, o),
        Command::Liouville(o) => (ExperimentKind::Liouville, o),
        Command::AlgebraAudit(o) => (ExperimentKind::AlgebraAudit, o),
    };
    execute(kind, &opts)
}

fn execute(kind: ExperimentKind, opts: &Common) -> i32 {
    let path = opts.config.display().to_string();
    let text = match fs::read_to_string(&opts.config) {
        Ok(t) => t,
        Err(e) => {
            report_io(&path, e.to_string());
            return EXIT_IO;
        }
    };
    let mut config = match parse_config(&text) {
        Ok(c) => c,
        Err(errors) => {
            report_fields(&errors);
            return EXIT_INVALID;
        }
    };
    let mut errors = Vec::new();
    if let Some(seed) = opts.seed {
        config.numerics.seed = seed;
    }
    if let Some(dir) = &opts.out_dir {
        config.output.dir = dir.clone();
    }
    if let Some(f) = &opts.format {
        match Format::parse(f) {
            Some(f) => config.output.format = f,
            None => errors.push(FieldError {
                path: "--format".into(),
                message: format!("unknown format '{f}'; expected csv or json-lines"),
            }),
        }
    }
    if opts.threads == Some(0) {
        errors.push(FieldError {
            path: "--threads".into(),
            message: "must be at least 1".into(),
        });
    }
    errors.extend(config.validate_for(kind));
    if !errors.is_empty() {
        report_fields(&errors);
        return EXIT_INVALID;
    }
    if opts.dry_run {
        println!("{}: configuration is valid", kind.name());
        return EXIT_OK;
    }

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = opts.threads {
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            report_io("--threads", e.to_string());
            return EXIT_IO;
        }
    };
    let tables = match pool.install(|| run_experiment(&config, kind)) {
        Ok(t) => t,
        Err(ExperimentError::Invalid(errors)) => {
            report_fields(&errors);
            return EXIT_INVALID;
        }
        Err(ExperimentError::Run(e)) => {
            let numerical = e.is_numerical();
            eprintln!(
                "{}",
                json!({
                    "kind": if numerical { "numerical" } else { "failure" },
                    "module": e.module,
                    "op": e.op,
                    "point": e.point,
                    "message": e.source.to_string(),
                })
            );
            return if numerical { EXIT_NUMERICAL } else { EXIT_INVALID };
        }
    };
    for table in &tables {
        match emit(table, &config.output.dir, &config.output.prefix, config.output.format) {
            Ok(p) => println!("{}", p.display()),
            Err(e) => {
                report_io(&config.output.dir.display().to_string(), e.to_string());
                return EXIT_IO;
            }
        }
    }
    EXIT_OK
}
