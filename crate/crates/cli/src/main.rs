//! `wsne`: command-line driver for the EndOfTheLine → Brouwer → imitation game pipeline.
//!
//! Exit status: 0 on success or a true verdict, 1 on a false verdict, 2 on
//! usage or input errors, 3 when a budget is exceeded, 4 on an internal
//! inconsistency.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use wsne_core::brouwer::{build_hpv_map, make_toy_map};
use wsne_core::embed::{enumerate_all_paths, local_info};
use wsne_core::end_of_line::{format_word, parse_word, DEFAULT_LIMIT};
use wsne_core::exact::{self, Rational};
use wsne_core::formats;
use wsne_core::solve::{self, find_fixed_points_grid, find_pure_nash, roundtrip, Grid, RoundTripParams};
use wsne_core::verify::{self, default_samples, verify_ane, verify_fixed_point, verify_wsne};
use wsne_core::{EolInstance, Error, ImitationGame, Mode, PathVertex, Point, ToySpec};

#[derive(Parser)]
#[command(name = "wsne", version, about = "Build, verify and solve EndOfTheLine, Brouwer and imitation-game artifacts")]
struct Cli {
    /// Worker threads for parallel scans (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write an instance file whose graph is the given lines and cycles.
    GenEol(GenEol),
    /// Query the path embedding of an instance.
    Embed(Embed),
    /// Write a map file, from an instance or a toy specification.
    BuildBrouwer(BuildBrouwer),
    /// Evaluate a map at points read from a file.
    Eval(Eval),
    /// Write the imitation game of a map at accuracy eps.
    BuildGame(BuildGame),
    /// Certify a profile as an eps-well-supported equilibrium.
    VerifyWsne(VerifyGame),
    /// Certify a profile as an eps-approximate equilibrium.
    VerifyAne(VerifyGame),
    /// Certify points as eps-approximate fixed points.
    VerifyFp(VerifyFp),
    /// Grid search for approximate fixed points.
    SolveFp(SolveFp),
    /// Enumerate pure well-supported equilibria.
    SolvePure(SolvePure),
    /// Brute-force the solutions of an instance.
    SolveEol(SolveEol),
    /// Run the full pipeline on an instance and compare with brute force.
    Roundtrip(Roundtrip),
}

#[derive(Args)]
struct Output {
    /// Write the result here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenEol {
    /// Bit width.
    #[arg(long)]
    n: usize,
    /// Comma-separated binary words; the first line must start at 0...0.
    #[arg(long = "line", required = true)]
    lines: Vec<String>,
    /// Comma-separated binary words forming a cycle.
    #[arg(long = "cycle")]
    cycles: Vec<String>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct Embed {
    #[arg(long)]
    instance: PathBuf,
    /// Vertex `u|v|b` to query; without it every path and cycle is listed.
    #[arg(long)]
    vertex: Option<String>,
    /// Maximum number of embedded vertices to enumerate.
    #[arg(long, default_value_t = DEFAULT_LIMIT)]
    limit: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, ValueEnum)]
enum ToyKind {
    Identity,
    Reversal,
    Constant,
    Affine,
}

#[derive(Args)]
struct BuildBrouwer {
    /// Instance file (normalized before embedding).
    #[arg(long, conflicts_with = "toy", required_unless_present = "toy")]
    instance: Option<PathBuf>,
    #[arg(long, value_enum)]
    toy: Option<ToyKind>,
    /// Dimension of an identity or reversal map.
    #[arg(long)]
    dim: Option<usize>,
    /// Value of a constant map, comma separated.
    #[arg(long)]
    value: Option<String>,
    /// Rows of an affine map, `a11,a12;a21,a22`.
    #[arg(long)]
    matrix: Option<String>,
    /// Offset of an affine map, comma separated.
    #[arg(long)]
    offset: Option<String>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct Eval {
    #[arg(long)]
    map: PathBuf,
    /// Points file, one point per line.
    #[arg(long)]
    points: PathBuf,
    /// Print g(x) instead of f(x).
    #[arg(long)]
    displacement: bool,
    /// Append the region name of each point as a comment line.
    #[arg(long)]
    classify: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct BuildGame {
    #[arg(long)]
    map: PathBuf,
    /// Target accuracy, decimal or `a/b`.
    #[arg(long)]
    eps: String,
    /// Lipschitz bound to use instead of the map's (must not be smaller).
    #[arg(long)]
    lipschitz: Option<String>,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Exact,
    Sampled,
}

#[derive(Args)]
struct VerifyGame {
    #[arg(long)]
    game: PathBuf,
    #[arg(long)]
    profile: PathBuf,
    /// Tolerance (default: 3/(4k^2)).
    #[arg(long)]
    eps: Option<String>,
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    mode: ModeArg,
    /// Opponent profiles enumerated per player in exact mode.
    #[arg(long, default_value_t = verify::DEFAULT_BUDGET)]
    budget: u128,
    /// Samples per player in sampled mode (default: the Hoeffding minimum).
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = 0.95)]
    confidence: f64,
    /// Random seed; required in sampled mode.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct VerifyFp {
    #[arg(long)]
    map: PathBuf,
    /// Inline point, e.g. `0.5,1/4`.
    #[arg(long, conflicts_with = "points", required_unless_present = "points")]
    point: Option<String>,
    /// Points file, one point per line.
    #[arg(long)]
    points: Option<PathBuf>,
    #[arg(long)]
    eps: String,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SolveFp {
    #[arg(long)]
    map: PathBuf,
    /// Grid step is 1/STEP.
    #[arg(long, default_value_t = 64)]
    step: u64,
    /// Residual threshold (default: half the displacement floor, or 1/STEP for toy maps).
    #[arg(long)]
    eps: Option<String>,
    #[arg(long, default_value_t = solve::DEFAULT_BUDGET)]
    budget: u128,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SolvePure {
    #[arg(long)]
    game: PathBuf,
    /// Tolerance (default: 3/(4k^2)).
    #[arg(long)]
    eps: Option<String>,
    #[arg(long, default_value_t = solve::DEFAULT_BUDGET)]
    budget: u128,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SolveEol {
    #[arg(long)]
    instance: PathBuf,
    /// Maximum number of words to scan.
    #[arg(long, default_value_t = DEFAULT_LIMIT)]
    budget: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct Roundtrip {
    #[arg(long)]
    instance: PathBuf,
    /// Grid step is 1/STEP (default: finest of 64, 32, 16 within budget).
    #[arg(long)]
    step: Option<u64>,
    /// Search only the tube-layer slice around the embedded cube.
    #[arg(long)]
    window: bool,
    /// Residual threshold (default: half the displacement floor).
    #[arg(long)]
    eps: Option<String>,
    #[arg(long, default_value_t = solve::DEFAULT_BUDGET)]
    budget: u128,
    #[command(flatten)]
    output: Output,
}

/// A failure with its exit status.
struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Failure { code: 2, msg: msg.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::BudgetExceeded { .. } => 3,
            Error::Internal(_) => 4,
            _ => 2,
        };
        Failure { code, msg: e.to_string() }
    }
}

type Outcome = Result<bool, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

/// Read and parse a file, prefixing errors with its path.
fn load<T>(path: &Path, parse: impl FnOnce(&str) -> wsne_core::Result<T>) -> Result<T, Failure> {
    let text = read(path)?;
    parse(&text).map_err(|e| {
        let mut f = Failure::from(e);
        f.msg = format!("{}: {}", path.display(), f.msg);
        f
    })
}

fn emit(output: &Output, text: &str) -> Result<(), Failure> {
    match &output.out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::usage(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn number(s: &str) -> Result<f64, Failure> {
    Ok(formats::parse_number(s)?)
}

fn rational(s: &str) -> Result<Rational, Failure> {
    Ok(exact::parse_rational(s)?)
}

fn numbers(s: &str) -> Result<Vec<f64>, Failure> {
    s.split(',').map(|t| number(t.trim())).collect()
}

fn words(s: &str, n: usize) -> Result<Vec<u64>, Failure> {
    s.split(',').map(|w| Ok(parse_word(w.trim(), n)?)).collect()
}

fn gen_eol(a: &GenEol) -> Outcome {
    let lines = a.lines.iter().map(|l| words(l, a.n)).collect::<Result<Vec<_>, _>>()?;
    let cycles = a.cycles.iter().map(|l| words(l, a.n)).collect::<Result<Vec<_>, _>>()?;
    let inst = EolInstance::from_lines(a.n, &lines, &cycles)?;
    emit(&a.output, &formats::write_instance(&inst))?;
    Ok(true)
}

fn embed(a: &Embed) -> Outcome {
    let inst = load(&a.instance, formats::parse_instance)?.normalize()?;
    let n = inst.n();
    let show = |v: Option<PathVertex>| v.map_or_else(|| "-".to_string(), |v| v.display(n));
    let mut s = String::new();
    match &a.vertex {
        Some(v) => {
            let p = PathVertex::parse(v, n)?;
            let info = local_info(&inst, p)?;
            let _ = writeln!(s, "vertex {}", p.display(n));
            let _ = writeln!(s, "on_path {}", info.on_path);
            let _ = writeln!(s, "prev {}", show(info.prev));
            let _ = writeln!(s, "next {}", show(info.next));
            let _ = writeln!(s, "start {}", info.is_start);
            let _ = writeln!(s, "end {}", info.is_end);
        }
        None => {
            let set = enumerate_all_paths(&inst, a.limit)?;
            let join = |vs: &[PathVertex]| vs.iter().map(|v| v.display(n)).collect::<Vec<_>>().join(" ");
            for p in &set.paths {
                let _ = writeln!(s, "path {}", join(p));
            }
            for c in &set.cycles {
                let _ = writeln!(s, "cycle {}", join(c));
            }
        }
    }
    emit(&a.output, &s)?;
    Ok(true)
}

fn toy_spec(a: &BuildBrouwer, kind: ToyKind) -> Result<ToySpec, Failure> {
    let need = |v: &Option<String>, flag: &str| {
        v.clone()
            .ok_or_else(|| Failure::usage(format!("--toy {} needs --{flag}", toy_name(kind))))
    };
    let dim = || {
        a.dim
            .ok_or_else(|| Failure::usage(format!("--toy {} needs --dim", toy_name(kind))))
    };
    Ok(match kind {
        ToyKind::Identity => ToySpec::Identity { d: dim()? },
        ToyKind::Reversal => ToySpec::Reversal { d: dim()? },
        ToyKind::Constant => ToySpec::Constant {
            c: numbers(&need(&a.value, "value")?)?,
        },
        ToyKind::Affine => ToySpec::Affine {
            a: need(&a.matrix, "matrix")?
                .split(';')
                .map(numbers)
                .collect::<Result<_, _>>()?,
            b: numbers(&need(&a.offset, "offset")?)?,
        },
    })
}

fn toy_name(kind: ToyKind) -> &'static str {
    match kind {
        ToyKind::Identity => "identity",
        ToyKind::Reversal => "reversal",
        ToyKind::Constant => "constant",
        ToyKind::Affine => "affine",
    }
}

fn build_brouwer(a: &BuildBrouwer) -> Outcome {
    let map = match (&a.instance, a.toy) {
        (Some(path), _) => build_hpv_map(&load(path, formats::parse_instance)?.normalize()?)?,
        (None, Some(kind)) => make_toy_map(toy_spec(a, kind)?)?,
        (None, None) => return Err(Failure::usage("give --instance or --toy")),
    };
    emit(&a.output, &formats::write_map(&map))?;
    Ok(true)
}

fn eval(a: &Eval) -> Outcome {
    let map = load(&a.map, formats::parse_map)?;
    let points = load(&a.points, formats::parse_points)?;
    let mut s = String::new();
    for x in &points {
        let y = if a.displacement {
            Point(map.displacement(x.coords())?)
        } else {
            map.evaluate(x)?
        };
        let _ = writeln!(s, "{y}");
        if a.classify {
            let _ = writeln!(s, "# {}", map.classify_point(x.coords())?.kind);
        }
    }
    emit(&a.output, &s)?;
    Ok(true)
}

fn build_game(a: &BuildGame) -> Outcome {
    let mut map = load(&a.map, formats::parse_map)?;
    if let Some(m) = &a.lipschitz {
        map = map.with_lipschitz_bound(exact::to_f64(&rational(m)?))?;
    }
    let game = ImitationGame::build(map, &rational(&a.eps)?)?;
    emit(&a.output, &formats::write_game(&game))?;
    Ok(true)
}

fn game_eps(game: &ImitationGame, eps: &Option<String>) -> Result<f64, Failure> {
    match eps {
        Some(e) => number(e),
        None => Ok(game.wsne_tolerance_f64()),
    }
}

fn verify_game(a: &VerifyGame, well_supported: bool) -> Outcome {
    let game = load(&a.game, formats::parse_game)?;
    let profile = load(&a.profile, formats::parse_profile)?;
    let eps = game_eps(&game, &a.eps)?;
    let mode = match a.mode {
        ModeArg::Exact => Mode::Exact { budget: a.budget },
        ModeArg::Sampled => {
            let seed = a.seed.ok_or_else(|| Failure::usage("--mode sampled needs --seed"))?;
            let samples = match a.samples {
                Some(n) => n,
                None => default_samples(eps, a.confidence)?,
            };
            Mode::Sampled {
                samples,
                confidence: a.confidence,
                seed,
            }
        }
    };
    let report = if well_supported {
        verify_wsne(&game, &profile, eps, &mode)?
    } else {
        verify_ane(&game, &profile, eps, &mode)?
    };
    emit(&a.output, &report.to_string())?;
    Ok(report.verdict)
}

fn verify_fp(a: &VerifyFp) -> Outcome {
    let map = load(&a.map, formats::parse_map)?;
    let points = match (&a.point, &a.points) {
        (Some(p), _) => vec![formats::parse_point(p)?],
        (None, Some(path)) => load(path, formats::parse_points)?,
        (None, None) => return Err(Failure::usage("give --point or --points")),
    };
    let eps = number(&a.eps)?;
    let mut s = String::new();
    let mut all = true;
    for x in &points {
        let r = verify_fixed_point(&map, x, eps)?;
        all &= r.verdict;
        s.push_str(&r.to_string());
    }
    emit(&a.output, &s)?;
    Ok(all)
}

fn solve_fp(a: &SolveFp) -> Outcome {
    let map = load(&a.map, formats::parse_map)?;
    let eps = match &a.eps {
        Some(e) => number(e)?,
        None if map.displacement_floor() > 0.0 => map.displacement_floor() / 2.0,
        None => 1.0 / a.step as f64,
    };
    let points = find_fixed_points_grid(&map, &Grid::full(map.dim(), a.step), eps, a.budget)?;
    emit(&a.output, &formats::write_points(&points))?;
    Ok(true)
}

fn solve_pure(a: &SolvePure) -> Outcome {
    let game = load(&a.game, formats::parse_game)?;
    let eps = game_eps(&game, &a.eps)?;
    let found = find_pure_nash(&game, eps, a.budget)?;
    let mut s = String::new();
    for actions in &found {
        let line: Vec<String> = actions.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(s, "pure {}", line.join(" "));
    }
    let _ = writeln!(s, "count {}", found.len());
    emit(&a.output, &s)?;
    Ok(true)
}

fn solve_eol(a: &SolveEol) -> Outcome {
    let inst = load(&a.instance, formats::parse_instance)?;
    let mut s = String::new();
    for sol in inst.solve_bruteforce(a.budget)? {
        let _ = writeln!(s, "{} {}", format_word(sol.x, inst.n()), sol.kind);
    }
    emit(&a.output, &s)?;
    Ok(true)
}

fn run_roundtrip(a: &Roundtrip) -> Outcome {
    let inst = load(&a.instance, formats::parse_instance)?;
    let params = RoundTripParams {
        step_den: a.step,
        window: a.window.then_some(true),
        eps: a.eps.as_deref().map(number).transpose()?,
        budget: a.budget,
    };
    let report = roundtrip(&inst, &params)?;
    emit(&a.output, &report.to_string())?;
    Ok(report.agrees())
}

fn run(cli: &Cli) -> Outcome {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::usage(e.to_string()))?;
    }
    match &cli.command {
        Command::GenEol(a) => gen_eol(a),
        Command::Embed(a) => embed(a),
        Command::BuildBrouwer(a) => build_brouwer(a),
        Command::Eval(a) => eval(a),
        Command::BuildGame(a) => build_game(a),
        Command::VerifyWsne(a) => verify_game(a, true),
        Command::VerifyAne(a) => verify_game(a, false),
        Command::VerifyFp(a) => verify_fp(a),
        Command::SolveFp(a) => solve_fp(a),
        Command::SolvePure(a) => solve_pure(a),
        Command::SolveEol(a) => solve_eol(a),
        Command::Roundtrip(a) => run_roundtrip(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("wsne: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
