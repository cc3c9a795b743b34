//! `drs`: operator command line for the dissertation repository.
//!
//! Exit status is 0 on success, 1 for usage errors and 2 when the data
//! directory or an input file cannot be used.

mod batch;

use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use drs_api::ApiConfig;
use drs_core::auth::AdminBootstrap;
use drs_core::clock::{Clock, SystemClock};
use drs_core::store::DEFAULT_MAX_BLOB_BYTES;
use drs_core::{Config, Repository, Role};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;

#[derive(Parser)]
#[command(name = "drs", version, about = "Dissertation repository service")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DataDir {
    /// Directory holding the repository's files.
    #[arg(long, env = "DRS_DATA_DIR")]
    data_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Serve the HTTP API until interrupted.
    Serve {
        #[command(flatten)]
        dir: DataDir,
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
        /// Browser origin allowed to call the API. Repeatable.
        #[arg(long = "cors-origin")]
        cors_origins: Vec<String>,
        /// Largest accepted dissertation file.
        #[arg(long, default_value_t = DEFAULT_MAX_BLOB_BYTES)]
        max_upload_bytes: u64,
    },
    /// Create the first administrator account.
    BootstrapAdmin {
        #[command(flatten)]
        dir: DataDir,
        #[arg(long)]
        username: String,
        #[arg(long, env = "DRS_ADMIN_PASSWORD", hide_env_values = true)]
        password: String,
        #[arg(long)]
        matrix: String,
        #[arg(long)]
        name: String,
    },
    /// Provision users from a CSV file with columns matrix_number,full_name,degree.
    ProvisionBatch {
        #[command(flatten)]
        dir: DataDir,
        #[arg(long)]
        csv: PathBuf,
    },
    /// Rebuild the search index from the catalog.
    Reindex {
        #[command(flatten)]
        dir: DataDir,
    },
    /// Print a summary of the data directory and check its integrity.
    Inspect {
        #[command(flatten)]
        dir: DataDir,
    },
    /// Delete stored files no dissertation refers to.
    Gc {
        #[command(flatten)]
        dir: DataDir,
    },
}

/// A failure to report before exiting with [`EXIT_DATA`].
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();

    match run(cli.command) {
        Ok(code) => code,
        Err(Failure(msg)) => {
            eprintln!("drs: {msg}");
            ExitCode::from(EXIT_DATA)
        }
    }
}

fn open(dir: &Path, max_blob_bytes: u64) -> Result<Repository, Failure> {
    let config = Config {
        max_blob_bytes,
        ..Config::default()
    };
    Repository::open(dir, config).map_err(|e| Failure(format!("{}: {e}", dir.display())))
}

fn run(command: Command) -> Result<ExitCode, Failure> {
    match command {
        Command::Serve {
            dir,
            listen,
            cors_origins,
            max_upload_bytes,
        } => serve(&dir.data_dir, listen, ApiConfig { cors_origins }, max_upload_bytes),
        Command::BootstrapAdmin {
            dir,
            username,
            password,
            matrix,
            name,
        } => {
            let repo = open(&dir.data_dir, DEFAULT_MAX_BLOB_BYTES)?;
            let admin = repo.bootstrap_admin(AdminBootstrap {
                matrix_number: matrix,
                full_name: name,
                username,
                password,
            })?;
            println!(
                "created administrator {} ({})",
                admin.username.unwrap_or_default(),
                admin.user_id
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::ProvisionBatch { dir, csv } => {
            let rows = batch::read_rows(&csv).map_err(|e| Failure(format!("{}: {e}", csv.display())))?;
            let repo = open(&dir.data_dir, DEFAULT_MAX_BLOB_BYTES)?;
            let report = batch::provision(&repo, rows);
            for line in &report.failures {
                println!("{line}");
            }
            println!("{} ok, {} failed", report.ok, report.failures.len());
            Ok(if report.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_DATA)
            })
        }
        Command::Reindex { dir } => {
            let repo = open(&dir.data_dir, DEFAULT_MAX_BLOB_BYTES)?;
            let changed = repo.store().reindex()?;
            let state = repo.snapshot();
            println!(
                "index {}: {} documents, {} terms",
                if changed { "rebuilt" } else { "already current" },
                state.index.doc_count(),
                state.index.terms().count()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Inspect { dir } => inspect(&dir.data_dir),
        Command::Gc { dir } => {
            let repo = open(&dir.data_dir, DEFAULT_MAX_BLOB_BYTES)?;
            let removed = repo.store().collect_garbage()?;
            println!("removed {} unreferenced files", removed.len());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn inspect(dir: &Path) -> Result<ExitCode, Failure> {
    let repo = open(dir, DEFAULT_MAX_BLOB_BYTES)?;
    let state = repo.snapshot();
    let now = SystemClock.now();
    let admins = state.users.values().filter(|u| u.role == Role::Admin).count();
    let registered = state.users.values().filter(|u| u.credential.is_some()).count();
    let live = state.sessions.values().filter(|s| s.is_live(now)).count();
    let blobs = repo.store().list_blobs()?.len();

    let mut out = std::io::stdout().lock();
    writeln!(out, "data dir:      {}", dir.display())?;
    writeln!(
        out,
        "users:         {} ({admins} admins, {registered} registered, {} provisioned only)",
        state.users.len(),
        state.users.len() - registered
    )?;
    writeln!(out, "dissertations: {}", state.dissertations.len())?;
    writeln!(out, "stored files:  {blobs}")?;
    writeln!(out, "favorites:     {} lists", state.favorites.len())?;
    writeln!(out, "sessions:      {} ({live} live)", state.sessions.len())?;
    writeln!(
        out,
        "index:         {} documents, {} terms",
        state.index.doc_count(),
        state.index.terms().count()
    )?;
    let problems = repo.store().integrity_report();
    if problems.is_empty() {
        writeln!(out, "integrity:     ok")?;
        return Ok(ExitCode::SUCCESS);
    }
    writeln!(out, "integrity:     {} problems", problems.len())?;
    for p in problems {
        writeln!(out, "  - {p}")?;
    }
    Ok(ExitCode::from(EXIT_DATA))
}

fn serve(dir: &Path, listen: SocketAddr, api: ApiConfig, max_upload_bytes: u64) -> Result<ExitCode, Failure> {
    let repo = Arc::new(open(dir, max_upload_bytes)?);
    let recovery = repo.store().recovery();
    if recovery.rolled_forward || recovery.index_rebuilt {
        tracing::info!(?recovery, "recovered data directory");
    }
    let app = drs_api::router(repo.clone(), &api)?;
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(listen)
            .await
            .map_err(|e| Failure(format!("cannot listen on {listen}: {e}")))?;
        let addr = listener.local_addr()?;
        println!("listening on http://{addr}");
        std::io::stdout().flush()?;
        drs_api::serve(listener, app, drs_api::shutdown_signal()).await?;
        Ok::<_, Failure>(())
    })?;
    drop(runtime);
    tracing::info!("stopped");
    Ok(ExitCode::SUCCESS)
}
