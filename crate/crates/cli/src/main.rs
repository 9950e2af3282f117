use std::fs;
use std::io::{self, Read, Write};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use etfkit_core::codes::{certify_grbe, frame_to_code, grey_rankin_bound, is_linear, BinaryCode};
use etfkit_core::designs::{
    affine_design, harmonic_feasibility, kirkman15, round_robin_design, steiner_params, SteinerSystem,
};
use etfkit_core::flatmat::{
    dft, drop_row_simplex, hadamard, simplex_from_characters, AbelianGroup, UnimodularMatrix,
};
use etfkit_core::frames::{
    default_mcfarland_group, harmonic_etf, kirkman_etf, mcfarland_as_kirkman, naimark_complement,
    real_kirkman_k2, real_kirkman_params, steiner_etf, Frame, McFarland,
};
use etfkit_core::metrics::{
    certify_etf, gram_equal, rip_delta, spark, steiner_rip_verdict, welch_bound, welch_bound_exact,
    SparkOptions,
};

mod fixtures;
mod schemas;

#[derive(Parser)]
#[command(name = "etfkit", version, about = "Steiner, Kirkman and harmonic ETFs, certificates and Grey-Rankin codes")]
struct Cli {
    /// Numerical tolerance for floating-point checks.
    #[arg(long, global = true, env = "ETFKIT_TOL", default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Output file; "-" or absent means stdout.
    #[arg(long, global = true)]
    out: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Generate or check resolvable Steiner systems.
    #[command(subcommand)]
    Design(DesignCmd),
    /// Build frames.
    #[command(subcommand)]
    Frame(FrameCmd),
    /// Certify a frame as an ETF.
    Verify {
        /// Frame file, or "-" for stdin.
        frame: String,
    },
    #[command(subcommand)]
    Analyze(AnalyzeCmd),
    #[command(subcommand)]
    Code(CodeCmd),
    #[command(subcommand)]
    Bound(BoundCmd),
    #[command(subcommand)]
    Fixtures(FixturesCmd),
    /// Print an embedded JSON schema.
    Schema {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(schemas::NAMES))]
        name: String,
    },
}

#[derive(Subcommand)]
enum DesignCmd {
    /// Lines of the affine geometry AG(j+1, q).
    Affine {
        #[arg(long)]
        q: u64,
        #[arg(long)]
        j: u32,
    },
    /// All pairs of v points, resolved into rounds.
    RoundRobin {
        #[arg(long)]
        v: usize,
    },
    /// Kirkman's schoolgirl arrangement on 15 points.
    Kirkman15,
    /// Check every design invariant.
    Validate { design: String },
    /// Parameter arithmetic for a (2, k, v) system and its would-be harmonic ETF.
    Params {
        #[arg(long)]
        k: u64,
        #[arg(long)]
        v: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SimplexKind {
    Dft,
    Hadamard,
    Characters,
}

#[derive(Clone, Copy, ValueEnum)]
enum BasisKind {
    Dft,
    Hadamard,
}

#[derive(Args)]
struct SimplexArgs {
    #[arg(long, value_enum, default_value_t = SimplexKind::Hadamard)]
    simplex: SimplexKind,
    /// Group for the character simplex, as comma-separated cyclic orders (default cyclic of order R+1).
    #[arg(long, value_delimiter = ',')]
    group: Option<Vec<usize>>,
    /// Row of the square matrix (or group element) removed to form the simplex.
    #[arg(long, default_value_t = 0)]
    drop_row: usize,
}

#[derive(Args)]
struct McFarlandArgs {
    #[arg(long)]
    q: u64,
    #[arg(long)]
    j: u32,
    /// G as comma-separated cyclic orders; defaults to Z_2^{j+1} for q = 2 and Z_{R+1} otherwise.
    #[arg(long, value_delimiter = ',')]
    group: Option<Vec<usize>>,
}

#[derive(Subcommand)]
enum FrameCmd {
    /// Sparse Steiner ETF of a resolved design.
    Steiner {
        design: String,
        #[command(flatten)]
        simplex: SimplexArgs,
    },
    /// Constant-amplitude Kirkman ETF of a resolved design.
    Kirkman {
        design: String,
        #[command(flatten)]
        simplex: SimplexArgs,
        #[arg(long, value_enum, default_value_t = BasisKind::Hadamard)]
        basis: BasisKind,
    },
    /// Harmonic ETF of a McFarland difference set.
    Harmonic {
        #[command(flatten)]
        mc: McFarlandArgs,
        /// Use the complementary difference set.
        #[arg(long)]
        complement: bool,
    },
    /// Compare the McFarland harmonic ETF with the affine Kirkman ETF entrywise.
    McfarlandVsKirkman {
        #[command(flatten)]
        mc: McFarlandArgs,
    },
    /// Naimark complement of a tight frame.
    Naimark {
        frame: String,
        /// Skip the tightness precondition.
        #[arg(long)]
        allow_loose: bool,
    },
    /// Parameters of the real Kirkman family; with --build, the K = 2 frame itself.
    RealKirkman {
        #[arg(long)]
        k: u64,
        #[arg(long)]
        w: u64,
        #[arg(long)]
        build: bool,
    },
}

#[derive(Subcommand)]
enum AnalyzeCmd {
    Spark {
        frame: String,
        #[arg(long)]
        max: Option<usize>,
        #[arg(long)]
        allow_large: bool,
    },
    Rip {
        frame: String,
        #[arg(long = "L", short = 'L')]
        l: usize,
    },
    /// δ_L < 1 exactly when L ≤ R, for Steiner-type frames.
    SteinerRip { frame: String },
    GramEqual { a: String, b: String },
}

#[derive(Subcommand)]
enum CodeCmd {
    /// Self-complementary code of a real constant-amplitude frame.
    FromFrame { frame: String },
    /// Distance, Grey-Rankin equality, ETF cross-check and linearity.
    Check { code: String },
}

#[derive(Subcommand)]
enum BoundCmd {
    Welch {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
    },
    GreyRankin {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        delta: usize,
    },
}

#[derive(Subcommand)]
enum FixturesCmd {
    /// Write one of the three reference artifacts.
    Emit {
        #[arg(long, value_enum)]
        which: fixtures::Which,
    },
}

/// Why a run stopped: bad input (exit 2) or a check that ran and failed (exit 1).
enum Outcome {
    Pass,
    Fail,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("etfkit: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn read_input(path: &str) -> Result<String> {
    if path == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).context("reading stdin")?;
        Ok(s)
    } else {
        fs::read_to_string(path).with_context(|| format!("reading {path}"))
    }
}

fn write_output(cli: &Cli, text: &str) -> Result<()> {
    match cli.out.as_deref() {
        None | Some("-") => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
        Some(path) => fs::write(path, text).with_context(|| format!("writing {path}"))?,
    }
    Ok(())
}

fn load_design(path: &str) -> Result<SteinerSystem> {
    Ok(SteinerSystem::from_json(&read_input(path)?)?)
}

fn load_frame(path: &str) -> Result<Frame> {
    Ok(Frame::from_json(&read_input(path)?)?)
}

fn emit_report<T: Serialize>(cli: &Cli, report: &T) -> Result<()> {
    let value = serde_json::to_value(report)?;
    let text = match cli.format {
        Format::Json => format!("{}\n", serde_json::to_string_pretty(&value)?),
        Format::Text => render_text(&value, ""),
    };
    write_output(cli, &text)
}

/// `path: value` lines, one per scalar leaf.
fn render_text(value: &Value, prefix: &str) -> String {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match value {
        Value::Object(map) => map.iter().map(|(k, v)| render_text(v, &key(k))).collect(),
        Value::Array(items) if items.iter().all(|v| !v.is_object() && !v.is_array()) => {
            let parts: Vec<String> = items.iter().map(Value::to_string).collect();
            format!("{prefix}: [{}]\n", parts.join(", "))
        }
        Value::Array(items) => items
            .iter()
            .enumerate()
            .map(|(i, v)| render_text(v, &key(&i.to_string())))
            .collect(),
        other => format!("{prefix}: {other}\n"),
    }
}

fn emit_frame(cli: &Cli, frame: &Frame) -> Result<()> {
    let text = match cli.format {
        Format::Json => format!("{}\n", frame.to_json()),
        Format::Text => frame.to_text(),
    };
    write_output(cli, &text)
}

fn emit_design(cli: &Cli, design: &SteinerSystem) -> Result<()> {
    let text = match cli.format {
        Format::Json => format!("{}\n", design.to_json()),
        Format::Text => design
            .incidence_matrix()
            .iter()
            .map(|row| row.iter().map(|&b| char::from(b'0' + b)).chain(['\n']).collect::<String>())
            .collect(),
    };
    write_output(cli, &text)
}

fn verdict(pass: bool) -> Outcome {
    if pass {
        Outcome::Pass
    } else {
        Outcome::Fail
    }
}

fn group_of(factors: &Option<Vec<usize>>, default: AbelianGroup) -> Result<AbelianGroup> {
    match factors {
        Some(f) => Ok(AbelianGroup::new(f.clone())?),
        None => Ok(default),
    }
}

fn square_unitary(kind: BasisKind, n: usize) -> Result<UnimodularMatrix> {
    Ok(match kind {
        BasisKind::Dft => dft(n),
        BasisKind::Hadamard => hadamard(n)?,
    })
}

fn build_simplex(args: &SimplexArgs, design: &SteinerSystem) -> Result<UnimodularMatrix> {
    let r = design.replication();
    Ok(match args.simplex {
        SimplexKind::Dft => drop_row_simplex(&dft(r + 1), args.drop_row)?,
        SimplexKind::Hadamard => drop_row_simplex(&hadamard(r + 1)?, args.drop_row)?,
        SimplexKind::Characters => {
            let g = group_of(&args.group, AbelianGroup::cyclic(r + 1))?;
            simplex_from_characters(&g, args.drop_row)?
        }
    })
}

fn mcfarland_group(mc: &McFarlandArgs) -> Result<AbelianGroup> {
    group_of(&mc.group, default_mcfarland_group(mc.q, mc.j))
}

fn run(cli: &Cli) -> Result<Outcome> {
    if !(cli.tol.is_finite() && cli.tol >= 0.0) {
        bail!("tolerance must be a nonnegative number, got {}", cli.tol);
    }
    match &cli.command {
        Command::Design(cmd) => run_design(cli, cmd),
        Command::Frame(cmd) => run_frame(cli, cmd),
        Command::Verify { frame } => {
            let cert = certify_etf(&load_frame(frame)?, cli.tol)?;
            emit_report(cli, &cert)?;
            Ok(verdict(cert.verdict.pass))
        }
        Command::Analyze(cmd) => run_analyze(cli, cmd),
        Command::Code(cmd) => run_code(cli, cmd),
        Command::Bound(cmd) => run_bound(cli, cmd),
        Command::Fixtures(FixturesCmd::Emit { which }) => {
            write_output(cli, &fixtures::emit(*which)?)?;
            Ok(Outcome::Pass)
        }
        Command::Schema { name } => {
            let schema = schemas::get(name).ok_or_else(|| anyhow!("no schema named {name}"))?;
            write_output(cli, schema)?;
            Ok(Outcome::Pass)
        }
    }
}

fn run_design(cli: &Cli, cmd: &DesignCmd) -> Result<Outcome> {
    let design = match cmd {
        DesignCmd::Affine { q, j } => affine_design(*q, *j)?,
        DesignCmd::RoundRobin { v } => round_robin_design(*v)?,
        DesignCmd::Kirkman15 => kirkman15(),
        DesignCmd::Validate { design } => {
            let report = load_design(design)?.validate();
            emit_report(cli, &report)?;
            return Ok(verdict(report.passed));
        }
        DesignCmd::Params { k, v } => {
            let params = steiner_params(*k, *v)?;
            let feasibility = harmonic_feasibility(*k, *v).ok();
            emit_report(cli, &json!({ "params": params, "harmonic": feasibility }))?;
            return Ok(verdict(params.flags.steiner_feasible()));
        }
    };
    emit_design(cli, &design)?;
    Ok(Outcome::Pass)
}

fn run_frame(cli: &Cli, cmd: &FrameCmd) -> Result<Outcome> {
    let frame = match cmd {
        FrameCmd::Steiner { design, simplex } => {
            let design = load_design(design)?;
            steiner_etf(&design, &build_simplex(simplex, &design)?)?
        }
        FrameCmd::Kirkman {
            design,
            simplex,
            basis,
        } => {
            let design = load_design(design)?;
            let basis = square_unitary(*basis, design.v / design.k)?;
            kirkman_etf(&design, &build_simplex(simplex, &design)?, &basis)?
        }
        FrameCmd::Harmonic { mc, complement } => {
            let ds = McFarland::new(mc.q, mc.j, mcfarland_group(mc)?)?.difference_set()?;
            let ds = if *complement { ds.complement()? } else { ds };
            harmonic_etf(&ds.group, &ds)?
        }
        FrameCmd::McfarlandVsKirkman { mc } => {
            let cmp = mcfarland_as_kirkman(mc.q, mc.j, &mcfarland_group(mc)?, cli.tol)?;
            let gram = gram_equal(&cmp.harmonic, &cmp.kirkman, cli.tol)?;
            let pass = cmp.entrywise.passed && gram.passed;
            emit_report(
                cli,
                &json!({
                    "q": mc.q,
                    "j": mc.j,
                    "group": mcfarland_group(mc)?.factors(),
                    "m": cmp.harmonic.m(),
                    "n": cmp.harmonic.n(),
                    "entrywise": cmp.entrywise,
                    "gram": gram,
                    "passed": pass,
                }),
            )?;
            return Ok(verdict(pass));
        }
        FrameCmd::Naimark { frame, allow_loose } => naimark_complement(&load_frame(frame)?, !allow_loose)?,
        FrameCmd::RealKirkman { k, w, build } => {
            let report = real_kirkman_params(*k, *w);
            if !build {
                emit_report(cli, &report)?;
                return Ok(verdict(report.k_congruence && report.w_congruence));
            }
            if *k != 2 {
                bail!("only K = 2 has a design generator here");
            }
            real_kirkman_k2(*w)?
        }
    };
    emit_frame(cli, &frame)?;
    Ok(Outcome::Pass)
}

fn run_analyze(cli: &Cli, cmd: &AnalyzeCmd) -> Result<Outcome> {
    match cmd {
        AnalyzeCmd::Spark {
            frame,
            max,
            allow_large,
        } => {
            let opts = SparkOptions {
                max_subset: *max,
                allow_large: *allow_large,
            };
            emit_report(cli, &spark(&load_frame(frame)?, &opts)?)?;
            Ok(Outcome::Pass)
        }
        AnalyzeCmd::Rip { frame, l } => {
            emit_report(cli, &rip_delta(&load_frame(frame)?, *l)?)?;
            Ok(Outcome::Pass)
        }
        AnalyzeCmd::SteinerRip { frame } => {
            let report = steiner_rip_verdict(&load_frame(frame)?)?;
            emit_report(cli, &report)?;
            Ok(verdict(report.consistent))
        }
        AnalyzeCmd::GramEqual { a, b } => {
            let report = gram_equal(&load_frame(a)?, &load_frame(b)?, cli.tol)?;
            emit_report(cli, &report)?;
            Ok(verdict(report.passed))
        }
    }
}

fn run_code(cli: &Cli, cmd: &CodeCmd) -> Result<Outcome> {
    match cmd {
        CodeCmd::FromFrame { frame } => {
            let code = frame_to_code(&load_frame(frame)?)?;
            write_output(cli, &code.to_text())?;
            Ok(Outcome::Pass)
        }
        CodeCmd::Check { code } => {
            let code = BinaryCode::from_text(&read_input(code)?)?;
            let cert = certify_grbe(&code)?;
            let linearity = is_linear(&code);
            let pass = cert.meets_bound && cert.agree;
            emit_report(
                cli,
                &json!({
                    "grbe": cert,
                    "linearity": linearity,
                    "passed": pass,
                }),
            )?;
            Ok(verdict(pass))
        }
    }
}

fn run_bound(cli: &Cli, cmd: &BoundCmd) -> Result<Outcome> {
    match cmd {
        BoundCmd::Welch { m, n } => {
            let value = welch_bound(*m, *n)?;
            let exact = welch_bound_exact(*m, *n)?.map(|r| r.to_string());
            let report = json!({ "m": m, "n": n, "welch_bound": value, "exact": exact });
            match cli.format {
                Format::Json => emit_report(cli, &report)?,
                Format::Text => {
                    let line = match exact {
                        Some(e) => format!("{value:.12} = {e}\n"),
                        None => format!("{value:.12}\n"),
                    };
                    write_output(cli, &line)?;
                }
            }
            Ok(Outcome::Pass)
        }
        BoundCmd::GreyRankin { m, delta } => {
            emit_report(cli, &grey_rankin_bound(*m, *delta))?;
            Ok(Outcome::Pass)
        }
    }
}
