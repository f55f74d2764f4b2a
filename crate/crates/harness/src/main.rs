use std::path::PathBuf;
use std::process::ExitCode;

use approx_taylor::costmodel::cost_ratio_rational;
use approx_taylor::problems::{default_rational_coefficients, CATALOG, DEFAULT_RATIONAL_SEED};
use approx_taylor::stepper::run;
use approx_taylor::{build_stencil, EvalCounter};
use approx_taylor_harness::study::{default_ladder, geometric_ladder, Coefficients, DEFAULT_WINDOW};
use approx_taylor_harness::{
    build_problem, emit_csv, make_stepper, read_coefficients, run_study, write_coefficients,
    Comparison, ConvergenceReport, HarnessError, Method, ReferenceKind, RowStatus, StudySpec,
};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "approx-taylor", version, about = "Approximate Taylor ODE integrators and convergence studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ProblemArgs {
    #[arg(long)]
    problem: String,
    /// Seed for generated rational-system coefficients.
    #[arg(long, default_value_t = DEFAULT_RATIONAL_SEED)]
    seed: u64,
    /// Rational-system coefficients CSV (overrides --seed).
    #[arg(long)]
    coeffs: Option<PathBuf>,
}

#[derive(Args)]
struct LadderArgs {
    /// Comma-separated step counts, or `START x RUNGS` for doubling (e.g. 20x7).
    #[arg(long)]
    ladder: Option<Ladder>,
    /// Timed repetitions per rung.
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    /// Rows used by the slope fit.
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: usize,
    /// Reference for problems without a closed form: `same` (refined run of
    /// the studied method), `rk4` (refined RK4) or `rk4:N` (RK4 with N steps).
    #[arg(long, default_value = "same", value_parser = parse_reference)]
    reference: ReferenceKind,
}

fn parse_reference(s: &str) -> Result<ReferenceKind, String> {
    match s {
        "same" => Ok(ReferenceKind::SameMethod),
        "rk4" => Ok(ReferenceKind::Rk4),
        _ => s
            .strip_prefix("rk4:")
            .and_then(|n| n.parse().ok())
            .filter(|&n: &usize| n > 0)
            .map(ReferenceKind::Rk4Steps)
            .ok_or_else(|| format!("expected same, rk4 or rk4:N, got `{s}`")),
    }
}

#[derive(Subcommand)]
enum Command {
    /// One run; prints the endpoint.
    Integrate {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, default_value = "approx-taylor")]
        method: Method,
        #[arg(long = "order", short = 'R', default_value_t = 4)]
        order: usize,
        #[arg(long)]
        steps: usize,
    },
    /// Convergence study written as CSV.
    Converge {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, default_value = "approx-taylor")]
        method: Method,
        #[arg(long = "order", short = 'R', default_value_t = 4)]
        order: usize,
        #[command(flatten)]
        ladder: LadderArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Approximate Taylor against another method; writes two CSV files.
    Compare {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Method compared against approximate Taylor.
        #[arg(long, default_value = "rk4")]
        method: Method,
        #[arg(long = "order", short = 'R', default_value_t = 4)]
        order: usize,
        #[command(flatten)]
        ladder: LadderArgs,
        /// Output prefix; files get `-approx-taylor.csv` and `-<method>.csv` appended.
        #[arg(long)]
        out: PathBuf,
    },
    /// Cost-model table for the rational system: m, R, C_T lower bound, C_AT, Q.
    Cost {
        #[arg(long, default_value = "2..64")]
        m: RangeArg,
        #[arg(long = "order", short = 'R', default_value = "3..12")]
        order: RangeArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Prints finite-difference weights as exact fractions.
    Stencil {
        /// Derivative order.
        #[arg(long)]
        p: usize,
        /// Half accuracy order.
        #[arg(long)]
        q: usize,
    },
    /// Lists catalog problems.
    ListProblems,
    /// Writes the seeded rational-system coefficients as CSV.
    RationalCoeffs {
        #[arg(long, default_value_t = 6)]
        m: usize,
        #[arg(long, default_value_t = DEFAULT_RATIONAL_SEED)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy)]
struct RangeArg(u64, u64);

impl std::str::FromStr for RangeArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |x: &str| x.trim().parse::<u64>().map_err(|e| format!("`{x}`: {e}"));
        let (lo, hi) = match s.split_once("..") {
            Some((a, b)) => (parse(a)?, parse(b)?),
            None => {
                let v = parse(s)?;
                (v, v)
            }
        };
        if lo > hi {
            return Err(format!("empty range {s}"));
        }
        Ok(RangeArg(lo, hi))
    }
}

#[derive(Clone)]
struct Ladder(Vec<usize>);

impl std::str::FromStr for Ladder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_ladder(s).map(Ladder)
    }
}

fn parse_ladder(s: &str) -> Result<Vec<usize>, String> {
    if let Some((start, rungs)) = s.split_once('x') {
        let start = start.trim().parse().map_err(|e| format!("ladder start: {e}"))?;
        let rungs = rungs.trim().parse().map_err(|e| format!("ladder rungs: {e}"))?;
        return Ok(geometric_ladder(start, rungs));
    }
    s.split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|e| format!("`{x}`: {e}")))
        .collect()
}

fn load_coeffs(args: &ProblemArgs) -> Result<Option<Coefficients>, HarnessError> {
    args.coeffs.as_deref().map(read_coefficients).transpose()
}

fn study_spec(problem: &ProblemArgs, method: Method, order: usize, ladder: &LadderArgs) -> Result<StudySpec, HarnessError> {
    let mut spec = StudySpec::new(&problem.problem, method, order, ladder.ladder.clone().map_or_else(default_ladder, |l| l.0))
        .with_repeats(ladder.repeats)
        .with_window(ladder.window)
        .with_reference(ladder.reference);
    spec.seed = problem.seed;
    spec.coefficients = load_coeffs(problem)?;
    Ok(spec)
}

fn summarize(report: &ConvergenceReport) {
    let slope = report.slope().map_or("n/a".to_string(), |s| format!("{s:.4}"));
    let excluded = report.excluded_rows().count();
    eprintln!(
        "{} {} R={}: slope {} ({} rows, {} excluded)",
        report.problem,
        report.method.display_label(),
        report.order,
        slope,
        report.rows.len(),
        excluded
    );
}

/// Returns the exit code: 0, or 2 when a study recorded a diverged rung.
fn execute(cmd: Command) -> Result<u8, HarnessError> {
    let mut code = 0;
    match cmd {
        Command::Integrate {
            problem,
            method,
            order,
            steps,
        } => {
            let spec = build_problem(&problem.problem, problem.seed, load_coeffs(&problem)?.as_ref())?;
            let stepper = make_stepper(method, order)?;
            let mut counter = EvalCounter::new();
            let end = run(&spec.system, stepper.as_ref(), steps, &mut counter, |_, _| {})?;
            println!("t = {:.16e}", spec.system.t_end);
            for (i, x) in end.iter().enumerate() {
                println!("u[{i}] = {x:.16e}");
            }
            if let Some(exact) = spec.system.exact_at(spec.system.t_end) {
                let err = end.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                println!("error = {err:.6e}");
            }
            println!("evals = {}", counter.total());
        }
        Command::Converge {
            problem,
            method,
            order,
            ladder,
            out,
        } => {
            let report = run_study(&study_spec(&problem, method, order, &ladder)?)?;
            emit_csv(&report, &out)?;
            summarize(&report);
            code = diverged_code(&report);
        }
        Command::Compare {
            problem,
            method,
            order,
            ladder,
            out,
        } => {
            let other = study_spec(&problem, method, order, &ladder)?;
            let approx = StudySpec {
                method: Method::ApproxTaylor,
                ..other.clone()
            };
            let cmp = Comparison {
                approx: run_study(&approx)?,
                other: run_study(&other)?,
            };
            let stem = out.to_string_lossy().into_owned();
            emit_csv(&cmp.approx, &PathBuf::from(format!("{stem}-approx-taylor.csv")))?;
            emit_csv(&cmp.other, &PathBuf::from(format!("{stem}-{method}.csv")))?;
            print!("{}", cmp.table());
            summarize(&cmp.approx);
            summarize(&cmp.other);
            code = diverged_code(&cmp.approx).max(diverged_code(&cmp.other));
        }
        Command::Cost { m, order, out } => {
            let mut lines = vec!["m,R,C_T_lower,C_AT,Q".to_string()];
            for mm in m.0..=m.1 {
                for r in order.0..=order.1 {
                    let c = cost_ratio_rational(mm, r).map_err(|e| HarnessError::InvalidSpec(e.to_string()))?;
                    lines.push(format!("{mm},{r},{},{},{:.16e}", c.lower_exact, c.approx, c.q_f64()));
                }
            }
            let text = lines.join("\n") + "\n";
            match out {
                Some(path) => std::fs::write(&path, text).map_err(|source| HarnessError::Io { path, source })?,
                None => print!("{text}"),
            }
        }
        Command::Stencil { p, q } => {
            let s = build_stencil(p, q).map_err(|e| HarnessError::InvalidSpec(e.to_string()))?;
            println!("derivative {p}, accuracy h^{}, width {}", 2 * q, s.width());
            for (offset, w) in s.offsets().iter().zip(s.weights()) {
                println!("{offset:>4}  {w}");
            }
        }
        Command::ListProblems => {
            for label in CATALOG {
                let spec = build_problem(label, DEFAULT_RATIONAL_SEED, None)?;
                println!(
                    "{label:<12} dim={:<3} t=[{}, {}]  {}",
                    spec.system.dim(),
                    spec.system.t0,
                    spec.system.t_end,
                    spec.description
                );
            }
        }
        Command::RationalCoeffs { m, seed, out } => {
            if m == 0 {
                return Err(HarnessError::InvalidSpec("m must be positive".into()));
            }
            write_coefficients(&default_rational_coefficients(m, seed), &out)?;
        }
    }
    Ok(code)
}

fn diverged_code(report: &ConvergenceReport) -> u8 {
    if report.rows.iter().any(|r| r.status == RowStatus::Diverged) {
        2
    } else {
        0
    }
}

/// Parses `argv`, runs the command and returns the process exit code.
fn run_cli<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // clap reports usage errors with 2, which is reserved for divergence here
            return u8::from(e.use_stderr());
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_divergence() {
                2
            } else {
                1
            }
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(run_cli(std::env::args_os()))
}
