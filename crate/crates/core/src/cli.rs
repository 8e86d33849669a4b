//! Command-line front end.
//!
//! `run` parses a program, binds external inputs as prelude assignments,
//! enumerates outcomes most-plausible-first and prints them one per line.
//! `check` only parses and desugars.
//!
//! Input values are integers, enum symbols, or bracketed lists of either,
//! nested to any depth: `k=4`, `mv=[E,E,S]`, `map=[[1,0],[0,1]]`. A list
//! binds the indexed variables `name[i]`, `name[i][j]`, and so on. Enum
//! symbols come from `--enum N=0,E=1` or from `// @enum N=0 E=1` lines in
//! the program file.
//!
//! The `records` format prints one JSON object per outcome,
//! `{"rank":0,"bindings":{"x":4,"a[1]":2}}`, with bindings holding every
//! non-zero variable of the (projected) outcome. A failed run prints
//! `{"status":"failed"}`.

use std::collections::{BTreeMap, HashSet};
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::ast::{desugar, NumExpr, Stmt, Target};
use crate::engine::{enumerate, EngineError, SearchOptions, Termination};
use crate::eval::{EvalConfig, DEFAULT_ITERATION_LIMIT};
use crate::parser::parse_program;
use crate::ranking::{Rank, Valuation};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_IO: i32 = 4;

const FAILED: &str = "failed (observation ruled out all possibilities)";

#[derive(Parser, Debug)]
#[command(name = "rankpl", version, about = "Run ranked-choice programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a program and print its outcomes in ascending rank.
    Run {
        /// Program source file
        program: PathBuf,
        /// Bind an input before the program runs, e.g. `k=4` or `mv=[E,E]`.
        #[arg(long = "define", short = 'D', value_name = "NAME=VALUE")]
        defines: Vec<String>,
        /// File with one `name = value` binding per line.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Enum symbols usable in input values, e.g. `N=0,E=1`.
        #[arg(long = "enum", value_name = "SYM=INT,...")]
        enums: Vec<String>,
        /// Only show these variables (marginalizes the result).
        #[arg(long, value_delimiter = ',')]
        project: Option<Vec<String>>,
        /// Stop after this many output lines.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        top: Option<u64>,
        /// Only show outcomes up to this rank
        #[arg(long)]
        max_rank: Option<u64>,
        /// Give up on a loop after this many iterations
        #[arg(long, default_value_t = DEFAULT_ITERATION_LIMIT,
              value_parser = clap::value_parser!(u64).range(1..))]
        iter_limit: u64,
        /// Output style; `records` prints one JSON object per line
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Parse and desugar a program without running it.
    Check {
        /// Program source file
        program: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Records,
}

/// An input value: an integer or a list of values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InputValue {
    Int(i64),
    List(Vec<InputValue>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunRequest {
    pub program: PathBuf,
    pub defines: Vec<(String, InputValue)>,
    pub project: Option<Vec<String>>,
    pub top: Option<u64>,
    pub max_rank: Option<u64>,
    pub iter_limit: u64,
    pub format: Format,
}

/// Entry point shared by the binary and tests. Returns the exit status.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(rendered.as_bytes())
            } else {
                out.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match cli.command {
        Command::Check { program } => cmd_check(&program, out, err),
        Command::Run {
            program,
            defines,
            input,
            enums,
            project,
            top,
            max_rank,
            iter_limit,
            format,
        } => {
            let source = match fs::read_to_string(&program) {
                Ok(s) => s,
                Err(e) => return io_error(err, &program, &e),
            };
            let mut symbols = header_enums(&source);
            for list in &enums {
                if let Err(msg) = parse_enum_list(list, ',', &mut symbols) {
                    let _ = writeln!(err, "error: --enum: {msg}");
                    return EXIT_PARSE;
                }
            }
            let mut bindings = Vec::new();
            if let Some(path) = &input {
                let text = match fs::read_to_string(path) {
                    Ok(t) => t,
                    Err(e) => return io_error(err, path, &e),
                };
                for (n, line) in text.lines().enumerate() {
                    let line = line.split("//").next().unwrap_or("").trim();
                    if line.is_empty() {
                        continue;
                    }
                    match parse_binding(line, &symbols) {
                        Ok(b) => bindings.push(b),
                        Err(msg) => {
                            let _ = writeln!(err, "{}:{}: {msg}", path.display(), n + 1);
                            return EXIT_PARSE;
                        }
                    }
                }
            }
            for d in &defines {
                match parse_binding(d, &symbols) {
                    Ok(b) => bindings.push(b),
                    Err(msg) => {
                        let _ = writeln!(err, "error: --define {d}: {msg}");
                        return EXIT_PARSE;
                    }
                }
            }
            let req = RunRequest {
                program,
                defines: bindings,
                project,
                top,
                max_rank,
                iter_limit,
                format,
            };
            run_source(&req, &source, out, err)
        }
    }
}

fn io_error(err: &mut dyn Write, path: &Path, e: &std::io::Error) -> i32 {
    let _ = writeln!(err, "error: {}: {e}", path.display());
    EXIT_IO
}

/// Reads the program named by `req` and runs it.
pub fn cmd_run(req: &RunRequest, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match fs::read_to_string(&req.program) {
        Ok(source) => run_source(req, &source, out, err),
        Err(e) => io_error(err, &req.program, &e),
    }
}

pub fn cmd_check(path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let source = match fs::read_to_string(path) {
        Ok(s) => s,
        Err(e) => return io_error(err, path, &e),
    };
    match parse_program(&source) {
        Err(e) => {
            let _ = writeln!(err, "{}:{e}", path.display());
            EXIT_PARSE
        }
        Ok(s) => match desugar(&s) {
            Ok(_) => {
                let _ = writeln!(out, "ok");
                EXIT_OK
            }
            Err(e) => {
                let _ = writeln!(err, "{}: {e}", path.display());
                EXIT_PARSE
            }
        },
    }
}

fn run_source(req: &RunRequest, source: &str, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let body = match parse_program(source) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "{}:{e}", req.program.display());
            return EXIT_PARSE;
        }
    };
    let mut prelude = Vec::new();
    for (name, value) in &req.defines {
        bind(name, &mut Vec::new(), value, &mut prelude);
    }
    prelude.push(body);
    let program = Stmt::sequence(prelude);

    let opts = SearchOptions {
        max_rank: req.max_rank.map_or(Rank::INF, Rank::Finite),
        max_outcomes: None,
        eval: EvalConfig::with_iteration_limit(req.iter_limit),
        max_budget: Rank::INF,
    };
    let mut stream = enumerate(&program, opts);
    let mut seen = HashSet::new();
    let mut lines = 0u64;
    while req.top.is_none_or(|t| lines < t) {
        let outcome = match stream.next() {
            None => break,
            Some(Ok(o)) => o,
            Some(Err(e)) => return report_error(err, &e),
        };
        let shown = match &req.project {
            Some(vars) => outcome.valuation.restrict(|n| vars.iter().any(|v| v == n)),
            None => outcome.valuation,
        };
        // Ascending order means the first occurrence carries the minimum.
        if !seen.insert(shown.clone()) {
            continue;
        }
        let line = match req.format {
            Format::Text => text_line(outcome.rank, &shown, req.project.as_deref()),
            Format::Records => record_line(outcome.rank, &shown),
        };
        let _ = writeln!(out, "{line}");
        lines += 1;
    }
    if stream.termination() == Some(Termination::Failure) {
        let _ = match req.format {
            Format::Text => writeln!(out, "{FAILED}"),
            Format::Records => writeln!(out, "{}", json!({"status": "failed"})),
        };
        return EXIT_FAILURE;
    }
    EXIT_OK
}

fn report_error(err: &mut dyn Write, e: &EngineError) -> i32 {
    let _ = match e {
        EngineError::Runtime(r) => writeln!(err, "runtime error: {} at {}", r.kind, r.pos),
        other => writeln!(err, "error: {other}"),
    };
    match e {
        EngineError::Static(_) => EXIT_PARSE,
        _ => EXIT_RUNTIME,
    }
}

fn text_line(rank: u64, v: &Valuation, project: Option<&[String]>) -> String {
    let mut parts: Vec<String> = Vec::new();
    match project {
        Some(vars) => {
            // Projected scalars print even when zero.
            for name in vars {
                let mut any = false;
                for (k, x) in v.bindings().filter(|(k, _)| k.name() == name) {
                    parts.push(format!("{k}={x}"));
                    any = true;
                }
                if !any {
                    parts.push(format!("{name}=0"));
                }
            }
        }
        None => parts.extend(v.bindings().map(|(k, x)| format!("{k}={x}"))),
    }
    if parts.is_empty() {
        format!("rank {rank}: (all zero)")
    } else {
        format!("rank {rank}: {}", parts.join(", "))
    }
}

fn record_line(rank: u64, v: &Valuation) -> String {
    let bindings: serde_json::Map<String, serde_json::Value> = v
        .bindings()
        .map(|(k, x)| (k.to_string(), json!(x)))
        .collect();
    // Hand-assembled so `rank` leads; the map itself is key-sorted.
    format!(
        "{{\"rank\":{rank},\"bindings\":{}}}",
        serde_json::Value::Object(bindings)
    )
}

fn bind(name: &str, indices: &mut Vec<i64>, value: &InputValue, out: &mut Vec<Stmt>) {
    match value {
        InputValue::Int(0) => {}
        InputValue::Int(n) => {
            let target = Target {
                name: name.to_string(),
                indices: indices.iter().map(|&i| NumExpr::int(i)).collect(),
            };
            out.push(Stmt::assign_to(target, NumExpr::int(*n)));
        }
        InputValue::List(items) => {
            for (i, item) in items.iter().enumerate() {
                indices.push(i as i64);
                bind(name, indices, item, out);
                indices.pop();
            }
        }
    }
}

/// Collects symbols from `// @enum A=0 B=1` lines.
fn header_enums(source: &str) -> BTreeMap<String, i64> {
    let mut symbols = BTreeMap::new();
    for line in source.lines() {
        let Some(rest) = line.trim().strip_prefix("//") else { continue };
        let Some(list) = rest.trim().strip_prefix("@enum") else { continue };
        // Malformed header entries are skipped; `check` does not read them.
        let _ = parse_enum_list(list, ' ', &mut symbols);
    }
    symbols
}

fn parse_enum_list(list: &str, sep: char, symbols: &mut BTreeMap<String, i64>) -> Result<(), String> {
    for item in list.split(sep).map(str::trim).filter(|s| !s.is_empty()) {
        let (sym, val) = item
            .split_once('=')
            .ok_or_else(|| format!("expected SYMBOL=INT, got `{item}`"))?;
        let val: i64 = val
            .trim()
            .parse()
            .map_err(|_| format!("`{val}` is not an integer"))?;
        symbols.insert(sym.trim().to_string(), val);
    }
    Ok(())
}

/// Parses `name=value` (or `name = value`).
pub fn parse_binding(
    text: &str,
    symbols: &BTreeMap<String, i64>,
) -> Result<(String, InputValue), String> {
    let (name, value) = text
        .split_once('=')
        .ok_or_else(|| "expected NAME=VALUE".to_string())?;
    let name = name.trim();
    let valid = name
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if !valid {
        return Err(format!("`{name}` is not a variable name"));
    }
    Ok((name.to_string(), parse_value(value, symbols)?))
}

pub fn parse_value(text: &str, symbols: &BTreeMap<String, i64>) -> Result<InputValue, String> {
    let mut p = ValueParser {
        chars: text.chars().collect(),
        at: 0,
        symbols,
    };
    let v = p.value()?;
    p.skip_ws();
    if p.at != p.chars.len() {
        return Err(format!("unexpected `{}` after value", p.chars[p.at]));
    }
    Ok(v)
}

struct ValueParser<'a> {
    chars: Vec<char>,
    at: usize,
    symbols: &'a BTreeMap<String, i64>,
}

impl ValueParser<'_> {
    fn skip_ws(&mut self) {
        while self.chars.get(self.at).is_some_and(|c| c.is_whitespace()) {
            self.at += 1;
        }
    }

    fn value(&mut self) -> Result<InputValue, String> {
        self.skip_ws();
        match self.chars.get(self.at) {
            None => Err("missing value".into()),
            Some('[') => {
                self.at += 1;
                let mut items = Vec::new();
                self.skip_ws();
                if self.chars.get(self.at) == Some(&']') {
                    self.at += 1;
                    return Ok(InputValue::List(items));
                }
                loop {
                    items.push(self.value()?);
                    self.skip_ws();
                    match self.chars.get(self.at) {
                        Some(',') => self.at += 1,
                        Some(']') => {
                            self.at += 1;
                            return Ok(InputValue::List(items));
                        }
                        _ => return Err("expected `,` or `]`".into()),
                    }
                }
            }
            Some(_) => {
                let start = self.at;
                while self
                    .chars
                    .get(self.at)
                    .is_some_and(|c| c.is_ascii_alphanumeric() || *c == '_' || *c == '-')
                {
                    self.at += 1;
                }
                let word: String = self.chars[start..self.at].iter().collect();
                if word.is_empty() {
                    return Err(format!("unexpected `{}`", self.chars[start]));
                }
                if let Ok(n) = word.parse::<i64>() {
                    return Ok(InputValue::Int(n));
                }
                self.symbols
                    .get(&word)
                    .map(|&n| InputValue::Int(n))
                    .ok_or_else(|| format!("unknown symbol `{word}`"))
            }
        }
    }
}
