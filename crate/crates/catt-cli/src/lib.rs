//! Batch driver: checks `.catt` files in order against a shared environment,
//! printing one line per successful declaration and a diagnostic per failure.
//!
//! Diagnostics have the shape `<file>:<line>:<col>: error[<code>]: <message>`
//! with stable codes E01 (syntax), E02 (scope), E03 (type mismatch), E04
//! (not a ps-context), E05 (side condition), E06 (arity), E07 (duplicate).

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use catt_core::frontend::{self, CheckError, Span};
use catt_core::kernel::Declaration;
use catt_core::syntax::{pretty_term, pretty_term_explicit, pretty_type, pretty_type_explicit};
use catt_core::{Environment, Ident};

pub struct Options {
    pub files: Vec<PathBuf>,
    pub verbose: bool,
    pub ps_table: Option<String>,
    /// stop after this many failed declarations (1 = fail fast)
    pub max_errors: usize,
    pub prelude: Option<PathBuf>,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            files: Vec::new(),
            verbose: false,
            ps_table: None,
            max_errors: 1,
            prelude: None,
        }
    }
}

/// Exit code: 0 if every declaration checked, 1 on any check failure, 2 on
/// I/O or flag errors.
pub fn run(opts: &Options, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let mut env = Environment::new();

    if let Some(path) = &opts.prelude {
        let src = match std::fs::read_to_string(path) {
            Ok(s) => s,
            Err(e) => {
                let _ = writeln!(err, "{}: error: {e}", path.display());
                return 2;
            }
        };
        // the prelude is loaded silently; its errors are still fatal
        if let Err(e) = frontend::process_source(&mut env, &src) {
            let _ = writeln!(err, "{}", render_diagnostic(path, &e));
            return 1;
        }
    }

    let mut failures = 0usize;
    'files: for path in &opts.files {
        let src = match std::fs::read_to_string(path) {
            Ok(s) => s,
            Err(e) => {
                let _ = writeln!(err, "{}: error: {e}", path.display());
                return 2;
            }
        };
        let decls = match frontend::parse(&src) {
            Ok(ds) => ds,
            Err(e) => {
                let _ = writeln!(err, "{}", render_diagnostic(path, &e));
                failures += 1;
                if failures >= opts.max_errors {
                    break 'files;
                }
                continue;
            }
        };
        for d in &decls {
            match frontend::process_decl(&mut env, d) {
                Ok(()) => report_checked(&env, &d.name, opts.verbose, out),
                Err(e) => {
                    let _ = writeln!(err, "{}", render_diagnostic(path, &e));
                    failures += 1;
                    if failures >= opts.max_errors {
                        break 'files;
                    }
                }
            }
        }
    }

    if let Some(name) = &opts.ps_table {
        match lookup_table(&env, name) {
            Some(line) => {
                let _ = writeln!(out, "{line}");
            }
            None => {
                let _ = writeln!(err, "error: `{name}` is not a checked coherence");
                return 2;
            }
        }
    }

    if failures == 0 {
        0
    } else {
        1
    }
}

fn report_checked(env: &Environment, name: &Ident, verbose: bool, out: &mut dyn Write) {
    match env.get(name) {
        Some(Declaration::Coherence { ty, .. }) => {
            let _ = writeln!(out, "checked {name} : {}", pretty_type(ty, env));
            if verbose {
                let _ = writeln!(out, "  explicit: {}", pretty_type_explicit(ty, env));
            }
        }
        Some(Declaration::LetDef { body, ty, .. }) => {
            let _ = writeln!(out, "checked {name} : {}", pretty_type(ty, env));
            if verbose {
                let _ = writeln!(
                    out,
                    "  {name} = {}\n  explicit: {}",
                    pretty_term(body, env),
                    pretty_term_explicit(body, env)
                );
            }
        }
        None => unreachable!("declaration was just checked"),
    }
}

fn lookup_table(env: &Environment, name: &str) -> Option<String> {
    let ident = Ident::new(name).ok()?;
    match env.get(&ident)? {
        Declaration::Coherence { ps, .. } => {
            let table = ps.dim_table();
            let mut line = String::from("top:");
            for d in &table.top {
                let _ = write!(line, " {d}");
            }
            line.push_str(" / glue:");
            for d in &table.glue {
                let _ = write!(line, " {d}");
            }
            Some(line)
        }
        Declaration::LetDef { .. } => None,
    }
}

pub fn render_diagnostic(path: &Path, e: &CheckError) -> String {
    let Span { line, col } = e.span.unwrap_or(Span { line: 1, col: 1 });
    format!("{}:{line}:{col}: {e}", path.display())
}
