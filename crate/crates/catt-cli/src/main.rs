use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

/// Check CaTT definition files.
#[derive(Parser)]
#[command(name = "cattcheck", version, about)]
struct Cli {
    /// Files to check, in order, against a shared environment.
    #[arg(required = true)]
    files: Vec<PathBuf>,

    /// Also print elaborated bodies and types with every argument explicit.
    #[arg(long)]
    verbose: bool,

    /// Print the dimension table of the named coherence after checking.
    #[arg(long, value_name = "NAME")]
    ps_table: Option<String>,

    /// Stop after N failed declarations.
    #[arg(long, value_name = "N", default_value_t = 1)]
    max_errors: usize,

    /// Check FILE first and keep its declarations in scope.
    #[arg(long, value_name = "FILE")]
    prelude: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = catt_cli::Options {
        files: cli.files,
        verbose: cli.verbose,
        ps_table: cli.ps_table,
        max_errors: cli.max_errors.max(1),
        prelude: cli.prelude,
    };
    let code = catt_cli::run(&opts, &mut std::io::stdout(), &mut std::io::stderr());
    ExitCode::from(code as u8)
}
