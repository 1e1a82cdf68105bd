//! `qlattice` command-line front end.
//!
//! Exit codes: 0 when every check passes, 1 on any mismatch or failed check,
//! 2 on usage errors. `--prec` is in powers of `q` everywhere.

use std::io::{self, Read, Write};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use qlattice::bailey::Recipe;
use qlattice::identities::{self, q_units, IdError, Params, Report};
use qlattice::motion::{gamma_trace, gamma_trace_k, lambda_trace, FrequencySeq, MultiPartition};
use qlattice::par::{self, Exec};
use qlattice::sets::{self, Family, Interpretation};

#[derive(Parser)]
#[command(name = "qlattice", version, about = "Exact checks of Rogers–Ramanujan-type identities and their bijections")]
struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    /// Worker threads (0 keeps the default pool); never changes results.
    #[arg(long, default_value_t = 0, global = true)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(clap::Args, Clone, Default)]
struct ParamArgs {
    #[arg(long)]
    k: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    r: Option<i64>,
    #[arg(long)]
    j: Option<i64>,
    #[arg(long)]
    a: Option<i64>,
    #[arg(long)]
    variant: Option<i64>,
    /// Comma-separated subset, e.g. `2,3`.
    #[arg(long, value_delimiter = ',')]
    subset: Option<Vec<i64>>,
}

#[derive(Subcommand)]
enum Command {
    /// Compare both sides of one catalog row.
    Verify {
        name: String,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 40)]
        prec: i64,
    },
    /// Verify every catalog row over its parameter space.
    Sweep {
        #[arg(long, default_value_t = 3)]
        max_k: i64,
        #[arg(long, default_value_t = 40)]
        prec: i64,
    },
    /// Run a Bailey chain recipe, verifying after every step.
    Bailey {
        /// Recipe JSON: a file path, `-` for stdin, or the JSON text itself.
        #[arg(long)]
        input: String,
    },
    /// Trace the insertion map Λ on a multipartition `{"parts": [[…], …]}`.
    TraceLambda {
        #[arg(long)]
        input: String,
    },
    /// Trace the inverse map Γ on a frequency sequence `[f_0, f_1, …]`.
    TraceGamma {
        #[arg(long)]
        input: String,
        /// Number of lists; defaults to the largest adjacent sum.
        #[arg(long)]
        k: Option<usize>,
    },
    /// List members of a family up to a weight.
    Enumerate {
        /// A, Gordon, X, Y, Z or Ysk; X/Y/Z/Ysk take a `'` or `~` suffix.
        family: String,
        #[arg(long)]
        k: Option<u32>,
        #[arg(long)]
        r: Option<u32>,
        #[arg(long)]
        j: Option<u32>,
        #[arg(long)]
        s: Option<u32>,
        #[arg(long, default_value_t = 10)]
        max_weight: u64,
    },
    /// Compare an enumerated Z family with its catalog sum, or check the
    /// Z~ relation (`relation`). Without `--k`, runs every valid triple up
    /// to `--max-k`.
    Interpret {
        /// Z, Z', Z~ or relation.
        which: String,
        #[arg(long)]
        k: Option<u32>,
        #[arg(long)]
        r: Option<u32>,
        #[arg(long)]
        j: Option<u32>,
        #[arg(long, default_value_t = 3)]
        max_k: u32,
        #[arg(long, default_value_t = 25)]
        prec: i64,
    },
}

/// Usage error (exit 2) or finished run with a pass flag.
enum Outcome {
    Usage(String),
    Done(bool),
}

fn usage(e: impl ToString) -> Outcome {
    Outcome::Usage(e.to_string())
}

struct Out {
    format: Format,
    buf: Vec<String>,
}

impl Out {
    fn text(&mut self, s: impl Into<String>) {
        if self.format == Format::Text {
            self.buf.push(s.into());
        }
    }

    fn json(&mut self, v: Value) {
        if self.format == Format::Json {
            self.buf.push(v.to_string());
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = Out { format: cli.format, buf: Vec::new() };
    let outcome = par::with_jobs(cli.jobs, || run(cli.command, &mut out));
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    for line in &out.buf {
        let _ = writeln!(lock, "{line}");
    }
    match outcome {
        Outcome::Done(true) => ExitCode::SUCCESS,
        Outcome::Done(false) => ExitCode::from(1),
        Outcome::Usage(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn check_prec(prec: i64) -> Result<i64, Outcome> {
    if prec < 1 {
        return Err(usage("--prec must be positive"));
    }
    Ok(2 * prec)
}

fn run(cmd: Command, out: &mut Out) -> Outcome {
    let r = match cmd {
        Command::Verify { name, params, prec } => verify(&name, params, prec, out),
        Command::Sweep { max_k, prec } => sweep(max_k, prec, out),
        Command::Bailey { input } => bailey(&input, out),
        Command::TraceLambda { input } => trace_lambda(&input, out),
        Command::TraceGamma { input, k } => trace_gamma(&input, k, out),
        Command::Enumerate { family, k, r, j, s, max_weight } => enumerate(&family, (k, r, j, s), max_weight, out),
        Command::Interpret { which, k, r, j, max_k, prec } => interpret(&which, (k, r, j), max_k, prec, out),
    };
    r.unwrap_or_else(|o| o)
}

fn report(out: &mut Out, rep: &Report) {
    out.text(rep.to_text());
    out.json(rep.to_json());
}

fn verify(name: &str, a: ParamArgs, prec: i64, out: &mut Out) -> Result<Outcome, Outcome> {
    let t = check_prec(prec)?;
    let p = Params { k: a.k, r: a.r, j: a.j, a: a.a, variant: a.variant, subset: a.subset };
    match identities::verify_identity(name, &p, t) {
        Ok(rep) => {
            report(out, &rep);
            Ok(Outcome::Done(rep.equal))
        }
        Err(e @ (IdError::UnknownIdentity(_) | IdError::InvalidParameters(_))) => Err(usage(e)),
        Err(e) => {
            out.text(format!("{name} [{p}]: error: {e}"));
            out.json(json!({"name": name, "params": p.to_json(), "error": e.to_string()}));
            Ok(Outcome::Done(false))
        }
    }
}

fn sweep(max_k: i64, prec: i64, out: &mut Out) -> Result<Outcome, Outcome> {
    let t = check_prec(prec)?;
    if max_k < 1 {
        return Err(usage("--max-k must be at least 1"));
    }
    let reports = identities::sweep(max_k, t, Exec::Parallel);
    let failed = reports.iter().filter(|r| !r.equal).count();
    for r in &reports {
        report(out, r);
    }
    out.text(format!("{} checks, {} failed", reports.len(), failed));
    Ok(Outcome::Done(failed == 0))
}

/// `-` reads stdin, text starting with `{` or `[` is taken literally,
/// anything else is a file path.
fn read_input(input: &str) -> Result<Value, Outcome> {
    let text = if input == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map_err(usage)?;
        s
    } else if input.trim_start().starts_with(['{', '[']) {
        input.to_string()
    } else {
        std::fs::read_to_string(input).map_err(|e| usage(format!("cannot read {input}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| usage(format!("malformed JSON: {e}")))
}

fn bailey(input: &str, out: &mut Out) -> Result<Outcome, Outcome> {
    let recipe = Recipe::from_json(&read_input(input)?).map_err(usage)?;
    let (pair, log) = match recipe.run() {
        Ok(v) => v,
        Err(e) => {
            out.text(format!("error: {e}"));
            out.json(json!({"recipe": recipe.to_json(), "error": e.to_string()}));
            return Ok(Outcome::Done(false));
        }
    };
    let mut ok = true;
    for (i, entry) in log.iter().enumerate() {
        let status = match entry.verdict.failure {
            None => "ok".to_string(),
            Some((n, e)) => {
                ok = false;
                format!("FAILED at n={n}, q^{}", q_units(e))
            }
        };
        out.text(format!("step {}: {} (a = {}): {status}", i + 1, entry.step, entry.a));
        out.json(json!({
            "step": i + 1,
            "transform": entry.step.to_json(),
            "a": entry.a.to_string(),
            "ok": entry.verdict.ok(),
            "failure": entry.verdict.failure.map(|(n, e)| json!({"n": n, "at": q_units(e)})),
        }));
    }
    out.text(format!(
        "{} steps, final a = {}, n_max = {}: {}",
        log.len(),
        pair.a,
        pair.n_max(),
        if ok { "all verified" } else { "failed" }
    ));
    out.json(json!({"recipe": recipe.to_json(), "steps": log.len(), "final_a": pair.a.to_string(), "passed": ok}));
    Ok(Outcome::Done(ok))
}

fn trace_lambda(input: &str, out: &mut Out) -> Result<Outcome, Outcome> {
    let mp = MultiPartition::from_json(&read_input(input)?).map_err(usage)?;
    let t = lambda_trace(&mp);
    let result = t.last().cloned().unwrap_or_default();
    out.text(format!("λ̄ = {mp}"));
    out.text(t.to_text().trim_end().to_string());
    out.text(format!("Λ(λ̄) = {result}, size {}", result.weight()));
    out.json(json!({"input": mp.to_json(), "trace": t.to_json(), "result": result.to_json(), "size": result.weight()}));
    Ok(Outcome::Done(true))
}

fn trace_gamma(input: &str, k: Option<usize>, out: &mut Out) -> Result<Outcome, Outcome> {
    let f = FrequencySeq::from_json(&read_input(input)?).map_err(usage)?;
    let (mp, t) = match k {
        Some(k) => gamma_trace_k(&f, k).map_err(usage)?,
        None => gamma_trace(&f),
    };
    out.text(format!("f = {f}"));
    out.text(t.to_text().trim_end().to_string());
    out.text(format!("Γ(f) = {mp}, size {}", f.weight()));
    out.json(json!({"input": f.to_json(), "trace": t.to_json(), "result": mp.to_json(), "size": f.weight()}));
    Ok(Outcome::Done(true))
}

type Krjs = (Option<u32>, Option<u32>, Option<u32>, Option<u32>);

fn enumerate(name: &str, (k, r, j, s): Krjs, max_weight: u64, out: &mut Out) -> Result<Outcome, Outcome> {
    let fam = Family::parse(name, k, r, j, s).map_err(usage)?;
    let members = fam.enumerate(max_weight).map_err(usage)?;
    for m in &members {
        out.text(format!("{:>4}  {m}", m.weight()));
    }
    out.text(format!("{fam}: {} members of weight ≤ {max_weight}", members.len()));
    out.json(json!({
        "family": fam.to_string(),
        "max_weight": max_weight,
        "count": members.len(),
        "members": members.iter().map(|m| m.to_json()).collect::<Vec<_>>(),
    }));
    Ok(Outcome::Done(true))
}

fn interpret(which: &str, (k, r, j): (Option<u32>, Option<u32>, Option<u32>), max_k: u32, prec: i64, out: &mut Out) -> Result<Outcome, Outcome> {
    let t = check_prec(prec)?;
    let relation = which == "relation";
    let interp = if relation {
        None
    } else {
        Some(Interpretation::parse(which).ok_or_else(|| usage(format!("unknown interpretation {which:?}; use Z, Z', Z~ or relation")))?)
    };
    let triples: Vec<(u32, u32, u32)> = match k {
        Some(k) => {
            let r = r.ok_or_else(|| usage("--r is required with --k"))?;
            let j = j.ok_or_else(|| usage("--j is required with --k"))?;
            vec![(k, r, j)]
        }
        None => (1..=max_k)
            .flat_map(|k| (0..=k).flat_map(move |r| (0..=k - r).map(move |j| (k, r, j))))
            .filter(|&(_, r, _)| !relation || r >= 1)
            .collect(),
    };
    let mut all = true;
    for (k, r, j) in triples {
        match interp {
            Some(i) => {
                let rep = sets::check_interpretation(i, k, r, j, t).map_err(usage)?;
                all &= rep.equal;
                report(out, &rep);
            }
            None => {
                let rep = sets::check_ztilde_relation(k, r, j, t).map_err(usage)?;
                all &= rep.holds();
                out.text(format!(
                    "Z~ relation [k={k}, r={r}, j={j}] to O(q^{prec}): {}",
                    if rep.holds() { "holds".to_string() } else { format!("{rep:?}") }
                ));
                out.json(json!({
                    "name": "ztilde_relation",
                    "params": {"k": k, "r": r, "j": j},
                    "prec": prec,
                    "equal": rep.first_mismatch.is_none(),
                    "first_mismatch": rep.first_mismatch.map(q_units),
                    "inclusions": rep.inclusions,
                    "shift_bijection": rep.shift_bijection,
                }));
            }
        }
    }
    Ok(Outcome::Done(all))
}
