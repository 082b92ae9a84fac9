//! `contests`: equilibria, best responses, safety levels, prize rounding and
//! simulation for parallel-contest instances stored as JSON.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use contests_core::bestresponse::{exact_best_response_grid, fptas_best_response, ResponseResult};
use contests_core::equilibrium::{ceb_all, ceb_best, ceb_worst, r_best, r_worst, strategy_from_ceb};
use contests_core::instance::{Instance, RawStep, Strategy};
use contests_core::rounding::{default_mix, epsilon_mix, interim_of_prizes, r_bound, round_to_prizes, DEFAULT_ENVELOPE_PIECES};
use contests_core::safety::{benchmark, construct_16competitive, safety_eval, sl_factor, staircase_stairs, Stair};
use contests_core::simulator::{check_designer_utility, check_h_curves, run_goc, SimReport, TrialConfig, ZCheck};
use contests_core::stepcalc::merge_opponents;
use contests_core::{Error, PLFn, StepFn};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "contests", version, about = "Parallel contests toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Worst and best cumulative behaviour of one contest.
    Eq {
        instance: PathBuf,
        #[arg(long)]
        contest: usize,
        /// Write the curves as CSV (q, h_worst, h_best).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Best response of one designer to the others.
    BestResponse(BestResponseArgs),
    /// Staircase construction and safety-level evaluation.
    #[command(subcommand)]
    Safety(SafetyCmd),
    /// Round a contest's strategy to a rank-by-skill prize vector.
    Round {
        instance: PathBuf,
        #[arg(long)]
        contest: usize,
        /// Number of prizes (defaults to the instance's n).
        #[arg(long)]
        n: Option<usize>,
        /// Mixing weight (defaults to n^(-1/3)).
        #[arg(long = "eps-mix")]
        eps_mix: Option<f64>,
    },
    /// Monte-Carlo play of the instance's prize vectors.
    Simulate {
        instance: PathBuf,
        #[arg(long)]
        trials: usize,
        #[arg(long, env = "CONTESTS_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        bins: usize,
        /// Contest favoured by the simulated equilibrium.
        #[arg(long, default_value_t = 0)]
        favored: usize,
        /// Write per-bin histograms as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Check every invariant of an instance file.
    Validate { instance: PathBuf },
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("method").required(true).args(["fptas", "exact"])))]
struct BestResponseArgs {
    instance: PathBuf,
    #[arg(long)]
    contest: usize,
    /// Approximation scheme with this eps.
    #[arg(long, value_name = "EPS")]
    fptas: Option<f64>,
    /// Exhaustive grid search.
    #[arg(long)]
    exact: bool,
    #[arg(long, default_value_t = 1000)]
    grid: usize,
}

#[derive(Subcommand)]
enum SafetyCmd {
    /// Staircase strategy with a constant-factor safety guarantee.
    Construct {
        instance: PathBuf,
        #[arg(long)]
        contest: usize,
    },
    /// Certified safety interval of the contest's strategy.
    Eval {
        instance: PathBuf,
        #[arg(long)]
        contest: usize,
        #[arg(long)]
        eps: f64,
        /// JSON array of extra adversary step functions.
        #[arg(long)]
        adversaries: Option<PathBuf>,
    },
}

/// Error with the exit code it maps to.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if matches!(e, Error::Validation(_)) { 2 } else { 1 };
        Failure { code, err: e.into() }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        Failure { code: 1, err }
    }
}

type Outcome = std::result::Result<(), Failure>;

fn malformed(err: anyhow::Error) -> Failure {
    Failure { code: 2, err }
}

fn load(path: &Path) -> std::result::Result<Instance, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(malformed)?;
    Instance::from_json(&text)
        .with_context(|| format!("invalid instance {}", path.display()))
        .map_err(malformed)
}

fn print_json<T: Serialize>(value: &T) -> Outcome {
    let s = serde_json::to_string_pretty(value).context("serializing output")?;
    match writeln!(io::stdout().lock(), "{s}") {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(anyhow::Error::from(e).into()),
        _ => Ok(()),
    }
}

fn opponent(inst: &Instance, j: usize) -> std::result::Result<StepFn, Failure> {
    let others = inst.others(j)?;
    if others.is_empty() {
        return Ok(StepFn::zero());
    }
    Ok(merge_opponents(&others)?)
}

#[derive(Serialize)]
struct EqOut {
    contest: usize,
    utility_worst: f64,
    utility_best: f64,
    h_worst: PLFn,
    h_best: PLFn,
}

fn cmd_eq(path: &Path, j: usize, csv_path: Option<&Path>) -> Outcome {
    let inst = load(path)?;
    inst.check_contest(j)?;
    let x = inst.interim(j)?;
    let opp = opponent(&inst, j)?;
    let v = inst.value(j)?;
    let hw = ceb_worst(&x, &opp);
    let hb = ceb_best(&x, &opp);
    if let Some(p) = csv_path {
        let mut qs: Vec<f64> = hw.knots().iter().chain(hb.knots()).map(|k| k.0).collect();
        qs.sort_by(f64::total_cmp);
        qs.dedup();
        let mut w = csv::Writer::from_path(p).with_context(|| format!("writing {}", p.display()))?;
        w.write_record(["q", "h_worst", "h_best"]).context("writing CSV")?;
        for q in qs {
            w.serialize((q, hw.eval(q), hb.eval(q))).context("writing CSV")?;
        }
        w.flush().context("writing CSV")?;
    }
    print_json(&EqOut {
        contest: j,
        utility_worst: r_worst(&x, &opp, &v),
        utility_best: r_best(&x, &opp, &v),
        h_worst: hw,
        h_best: hb,
    })
}

#[derive(Serialize)]
struct ResponseOut {
    contest: usize,
    budget: f64,
    spent: f64,
    #[serde(flatten)]
    result: ResponseResult,
}

fn cmd_best_response(a: &BestResponseArgs) -> Outcome {
    let inst = load(&a.instance)?;
    inst.check_contest(a.contest)?;
    let j = a.contest;
    let opp = opponent(&inst, j)?;
    let v = inst.value(j)?;
    let t = inst.budget(j);
    let result = match a.fptas {
        Some(eps) => fptas_best_response(&opp, &v, t, inst.opponent_budget(j), eps)?,
        None => exact_best_response_grid(&opp, &v, t, a.grid)?,
    };
    print_json(&ResponseOut {
        contest: j,
        budget: t,
        spent: result.strategy.budget(),
        result,
    })
}

#[derive(Serialize)]
struct ConstructOut {
    contest: usize,
    budget: f64,
    spent: f64,
    benchmark: f64,
    guaranteed_floor: f64,
    stairs: Vec<Stair>,
    strategy: StepFn,
}

fn cmd_construct(path: &Path, j: usize) -> Outcome {
    let inst = load(path)?;
    inst.check_contest(j)?;
    let v = inst.value(j)?;
    let (t, tm) = (inst.budget(j), inst.opponent_budget(j));
    let strategy = construct_16competitive(&v, t, tm)?;
    let bench = benchmark(&v, t, tm)?;
    print_json(&ConstructOut {
        contest: j,
        budget: t,
        spent: strategy.budget(),
        benchmark: bench,
        guaranteed_floor: bench / sl_factor(t / (t + tm)),
        stairs: staircase_stairs(&v, t, tm)?,
        strategy,
    })
}

fn cmd_safety_eval(path: &Path, j: usize, eps: f64, adversaries: Option<&Path>) -> Outcome {
    let inst = load(path)?;
    inst.check_contest(j)?;
    let x = inst.interim(j)?;
    let v = inst.value(j)?;
    let extra: Vec<StepFn> = match adversaries {
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("reading {}", p.display()))
                .map_err(malformed)?;
            let raw: Vec<RawStep> = serde_json::from_str(&text)
                .with_context(|| format!("parsing adversaries {}", p.display()))
                .map_err(malformed)?;
            raw.iter().map(RawStep::to_step).collect::<contests_core::Result<_>>()?
        }
        None => Vec::new(),
    };
    let report = safety_eval(&x, &v, inst.budget(j), inst.opponent_budget(j), eps, &extra)?;
    print_json(&report)
}

#[derive(Serialize)]
struct RoundOut {
    contest: usize,
    n: usize,
    eps_mix: f64,
    prize_total: f64,
    prize_cap: f64,
    prizes: Vec<f64>,
    r_bound: f64,
    /// `1 − r_bound − eps_mix`.
    certified_ratio: f64,
    /// Worst-equilibrium utility of the mixed prizes over best-equilibrium
    /// utility of the source strategy, when every other contest has a
    /// strategy.
    measured_ratio: Option<f64>,
}

fn cmd_round(path: &Path, j: usize, n: Option<usize>, eps_mix: Option<f64>) -> Outcome {
    let inst = load(path)?;
    inst.check_contest(j)?;
    let n = n.or(inst.n).ok_or_else(|| Failure {
        code: 1,
        err: anyhow::anyhow!("no prize count: pass --n or set n in the instance"),
    })?;
    let x = match inst.strategy(j)? {
        Some(Strategy::Step(f)) => f,
        Some(Strategy::Prizes(_)) => {
            return Err(Failure {
                code: 1,
                err: anyhow::anyhow!("contest {j} already pays a prize vector"),
            })
        }
        None => return Err(Error::Infeasible(format!("contest {j} has no strategy")).into()),
    };
    let t = inst.budget(j);
    let v = inst.value(j)?;
    let eps = eps_mix.unwrap_or_else(|| default_mix(n));
    let w = round_to_prizes(&x, t, n)?;
    let mixed = epsilon_mix(&w, eps, t)?;
    let bound = r_bound(n, 2.0, v.max_value(), v.budget())?;
    let measured_ratio = match opponent(&inst, j) {
        Ok(opp) => {
            let lower = interim_of_prizes(&mixed).lower_envelope(DEFAULT_ENVELOPE_PIECES)?;
            let source = r_best(&x, &opp, &v);
            (source > 0.0).then(|| r_worst(&lower, &opp, &v) / source)
        }
        Err(_) => None,
    };
    print_json(&RoundOut {
        contest: j,
        n,
        eps_mix: eps,
        prize_total: mixed.sum(),
        prize_cap: n as f64 * t,
        prizes: mixed.prizes().to_vec(),
        r_bound: bound,
        certified_ratio: 1.0 - bound - eps,
        measured_ratio,
    })
}

#[derive(Serialize)]
struct SimOut {
    favored: usize,
    utility_checks: Vec<ZCheck>,
    h_check: ZCheck,
    report: SimReport,
}

fn cmd_simulate(path: &Path, trials: usize, seed: u64, bins: usize, favored: usize, csv_path: Option<&Path>) -> Outcome {
    let inst = load(path)?;
    inst.check_contest(favored)?;
    let n = inst.n.ok_or_else(|| Error::Infeasible("simulation needs n in the instance".into()))?;
    let m = inst.contests();
    let mut prizes = Vec::with_capacity(m);
    for j in 0..m {
        match inst.strategy(j)? {
            Some(Strategy::Prizes(w)) => prizes.push(w),
            _ => return Err(Error::Infeasible(format!("contest {j} has no prize vector to simulate")).into()),
        }
    }
    let xs: Vec<StepFn> = (0..m).map(|j| inst.interim(j)).collect::<contests_core::Result<_>>()?;
    let values: Vec<StepFn> = (0..m).map(|j| inst.value(j)).collect::<contests_core::Result<_>>()?;
    let h = ceb_all(&xs, favored)?;
    let strategy = strategy_from_ceb(&h, &xs)?;
    let cfg = TrialConfig { n, trials, seed, bins };
    let report = run_goc(&prizes, &strategy, &values, cfg)?;
    let utility_checks = (0..m)
        .map(|j| check_designer_utility(&report, j, &values[j], &h.components[j], n))
        .collect();
    let h_check = check_h_curves(&report, &h)?;
    if let Some(p) = csv_path {
        let mut w = csv::Writer::from_path(p).with_context(|| format!("writing {}", p.display()))?;
        w.write_record(["contest", "q_lo", "q_hi", "count", "prize_mean", "prize_se", "h_at_q_hi", "h_se"])
            .context("writing CSV")?;
        for j in 0..m {
            for b in 0..bins {
                w.serialize((
                    j,
                    report.edges[b],
                    report.edges[b + 1],
                    report.counts[j][b],
                    report.prize_mean[j][b],
                    report.prize_se[j][b],
                    report.h_curve[j][b + 1],
                    report.h_se[j][b + 1],
                ))
                .context("writing CSV")?;
            }
        }
        w.flush().context("writing CSV")?;
    }
    print_json(&SimOut {
        favored,
        utility_checks,
        h_check,
        report,
    })
}

#[derive(Serialize)]
struct ValidateOut {
    valid: bool,
    contests: usize,
    budgets: Vec<f64>,
    spent: Vec<Option<f64>>,
}

fn cmd_validate(path: &Path) -> Outcome {
    let inst = load(path)?;
    let spent = (0..inst.contests())
        .map(|j| {
            Ok(match inst.strategy(j)? {
                Some(Strategy::Step(f)) => Some(f.budget()),
                Some(Strategy::Prizes(w)) => Some(w.sum() / w.n() as f64),
                None => None,
            })
        })
        .collect::<contests_core::Result<_>>()?;
    print_json(&ValidateOut {
        valid: true,
        contests: inst.contests(),
        budgets: inst.contests.iter().map(|c| c.budget).collect(),
        spent,
    })
}

fn run(cli: Cli) -> Outcome {
    match cli.cmd {
        Cmd::Eq { instance, contest, csv } => cmd_eq(&instance, contest, csv.as_deref()),
        Cmd::BestResponse(a) => cmd_best_response(&a),
        Cmd::Safety(SafetyCmd::Construct { instance, contest }) => cmd_construct(&instance, contest),
        Cmd::Safety(SafetyCmd::Eval {
            instance,
            contest,
            eps,
            adversaries,
        }) => cmd_safety_eval(&instance, contest, eps, adversaries.as_deref()),
        Cmd::Round {
            instance,
            contest,
            n,
            eps_mix,
        } => cmd_round(&instance, contest, n, eps_mix),
        Cmd::Simulate {
            instance,
            trials,
            seed,
            bins,
            favored,
            csv,
        } => cmd_simulate(&instance, trials, seed, bins, favored, csv.as_deref()),
        Cmd::Validate { instance } => cmd_validate(&instance),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}
