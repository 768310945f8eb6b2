//! Command-line front end. [`run`] parses arguments, executes one
//! subcommand and returns the process exit code.

use std::error::Error;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{anonymous_bound, lambda_bound, lower_bound_curves, poa_report};
use crate::equilibrium::{enumerate_equilibria, worst_equilibrium, EquilibriumKind};
use crate::fixtures::{bundled, example_a, example_b};
use crate::model::{Network, Routing, TollSchedule, SUPPORT_TOL};
use crate::optimal::{make_acyclic, solve_optimal, Method, SolveMode};
use crate::report::{write_report, Cell, Format, Table};
use crate::rng::SeededRng;
use crate::scenario::{generate_instance, parse_scenario, serialize_tolls, InstanceGenSpec, ScenarioFile};
use crate::tolling::{anonymous_tolls, EpsilonTollParams, TollScheme};
use crate::validation::validate_instance;

type Fallible<T> = Result<T, Box<dyn Error>>;

/// Exit code for domain errors and failed validations.
pub const EXIT_FAILURE: i32 = 1;
/// Exit code for malformed command lines.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "mixtoll", version, about = "Tolls and price of anarchy for mixed-autonomy congestion games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Socially optimal routing.
    Optimal {
        #[command(flatten)]
        scenario: ScenarioArg,
        #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
        mode: ModeArg,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// All equilibria under a toll scheme, or under the scenario's tolls.
    Equilibria {
        #[command(flatten)]
        scenario: ScenarioArg,
        #[command(flatten)]
        toll: TollArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Toll schedule built from the exact optimum.
    Toll {
        #[command(flatten)]
        scenario: ScenarioArg,
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        #[command(flatten)]
        params: TollParams,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Worst equilibrium cost over the optimum, with the matching bound.
    Poa {
        #[command(flatten)]
        scenario: ScenarioArg,
        #[command(flatten)]
        toll: TollArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Bound curves over k, or the two worked examples at one k.
    Reproduce {
        #[arg(long, value_enum)]
        target: Target,
        #[arg(long, default_value_t = 1.0)]
        k_min: f64,
        #[arg(long, default_value_t = 4.0)]
        k_max: f64,
        #[arg(long, default_value_t = 0.05)]
        k_step: f64,
        #[arg(long, default_value_t = 4.0)]
        k: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Checks every applicable bound on seeded random instances.
    Validate {
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long)]
        target_k: Option<f64>,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Debug, Args)]
struct ScenarioArg {
    /// Scenario file, or the name of a bundled fixture.
    #[arg(long)]
    scenario: String,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Equilibrium tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct TollArgs {
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
    #[command(flatten)]
    params: TollParams,
}

impl TollArgs {
    fn scheme(&self) -> Option<TollScheme> {
        self.scheme.map(|s| s.with(&self.params))
    }
}

/// Epsilon-scheme parameters; defaults are derived from the optimum.
#[derive(Debug, Args)]
struct TollParams {
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    big_p: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchemeArg {
    Differentiated,
    Anonymous,
    Epsilon,
    Marginal,
    None,
}

impl SchemeArg {
    fn with(self, p: &TollParams) -> TollScheme {
        match self {
            SchemeArg::None => TollScheme::Untolled,
            SchemeArg::Differentiated => TollScheme::Differentiated,
            SchemeArg::Anonymous => TollScheme::Anonymous,
            SchemeArg::Marginal => TollScheme::Marginal,
            SchemeArg::Epsilon => {
                TollScheme::Epsilon(EpsilonTollParams { mu: p.mu, epsilon: p.epsilon, big_p: p.big_p })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Heuristic,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Target {
    Bounds,
    Examples,
}

/// Runs the CLI on `args` (including the program name).
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_FAILURE
        }
    }
}

fn execute(command: Command, stdout: &mut dyn Write) -> Fallible<i32> {
    let (text, out, code) = match command {
        Command::Optimal { scenario, mode, out } => {
            let s = load_scenario(&scenario.scenario)?;
            let mode = match mode {
                ModeArg::Exact => SolveMode::Exact,
                ModeArg::Heuristic => SolveMode::heuristic(out.seed),
            };
            (optimal_table(&s.network, mode)?.render(&out), out, 0)
        }
        Command::Equilibria { scenario, toll, out } => {
            let s = load_scenario(&scenario.scenario)?;
            let tolls = resolve_tolls(&s, &toll)?;
            (equilibria_table(&s.network, &tolls, out.tol)?.render(&out), out, 0)
        }
        Command::Toll { scenario, scheme, params, out } => {
            let s = load_scenario(&scenario.scenario)?;
            let tolls = build_tolls(&s.network, scheme.with(&params))?;
            let text = match out.format {
                FormatArg::Json => serialize_tolls(&tolls),
                FormatArg::Csv => write_report(&toll_table(&s.network, &tolls), Format::Csv),
            };
            (text, out, 0)
        }
        Command::Poa { scenario, toll, out } => {
            let s = load_scenario(&scenario.scenario)?;
            let scheme = toll.scheme().unwrap_or(TollScheme::Untolled);
            (poa_table(&s.network, scheme)?.render(&out), out, 0)
        }
        Command::Reproduce { target, k_min, k_max, k_step, k, out } => {
            let table = match target {
                Target::Bounds => reproduce_bounds(k_min, k_max, k_step)?,
                Target::Examples => reproduce_examples(k, out.tol)?,
            };
            (table.render(&out), out, 0)
        }
        Command::Validate { instances, n, m, target_k, out } => {
            let (table, all_pass) = validate_table(instances, n, m, target_k, out.seed, out.tol)?;
            (table.render(&out), out, if all_pass { 0 } else { EXIT_FAILURE })
        }
    };
    match &out.out {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(code)
}

trait Render {
    fn render(&self, out: &OutputArgs) -> String;
}

impl Render for Table {
    fn render(&self, out: &OutputArgs) -> String {
        let format = match out.format {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        };
        write_report(self, format)
    }
}

/// Reads a scenario file, falling back to the bundled fixtures when no file
/// exists at `arg`.
pub fn load_scenario(arg: &str) -> Result<ScenarioFile, Box<dyn Error>> {
    let path = Path::new(arg);
    let text = if path.exists() {
        std::fs::read_to_string(path).map_err(|e| format!("cannot read {arg}: {e}"))?
    } else if let Some(text) = bundled(arg) {
        text.to_owned()
    } else {
        return Err(format!("no scenario file or bundled fixture named {arg:?}").into());
    };
    Ok(parse_scenario(&text)?)
}

/// The exact optimum used to build tolls; acyclic for the epsilon scheme.
fn toll_base(network: &Network, scheme: TollScheme) -> Fallible<Routing> {
    let opt = solve_optimal(network, SolveMode::Exact)?;
    Ok(match scheme {
        TollScheme::Epsilon(_) => make_acyclic(network, &opt.routing, SUPPORT_TOL)?,
        _ => opt.routing,
    })
}

fn build_tolls(network: &Network, scheme: TollScheme) -> Fallible<TollSchedule> {
    if scheme == TollScheme::Untolled {
        return Ok(TollSchedule::zeros(network));
    }
    Ok(scheme.build(network, &toll_base(network, scheme)?)?)
}

fn resolve_tolls(s: &ScenarioFile, args: &TollArgs) -> Fallible<TollSchedule> {
    match (args.scheme(), &s.tolls) {
        (Some(scheme), _) => build_tolls(&s.network, scheme),
        (None, Some(tolls)) => Ok(tolls.clone()),
        (None, None) => Ok(TollSchedule::zeros(&s.network)),
    }
}

fn flow_rows(table: &mut Table, network: &Network, routing: &Routing, prefix: &[Cell]) {
    let edge = &routing.edge_flows;
    for i in 0..network.num_roads() {
        for (j, name) in network.types().iter().enumerate() {
            let mut row = prefix.to_vec();
            row.extend([i.into(), name.as_str().into(), edge[(i, j)].into()]);
            table.push(row);
        }
    }
}

fn optimal_table(network: &Network, mode: SolveMode) -> Fallible<Table> {
    let res = solve_optimal(network, mode)?;
    let method = match res.method {
        Method::Enumeration => "enumeration",
        Method::Multistart => "multistart",
    };
    let mut t = Table::new(["method", "social_cost", "gap_estimate", "road", "type", "flow", "latency"]);
    let lat = network.latencies(&res.routing.edge_flows);
    for (i, &l) in lat.iter().enumerate() {
        for (j, name) in network.types().iter().enumerate() {
            t.push(vec![
                method.into(),
                res.cost.into(),
                res.gap_estimate.into(),
                i.into(),
                name.as_str().into(),
                res.routing.edge_flows[(i, j)].into(),
                l.into(),
            ]);
        }
    }
    Ok(t)
}

fn join(values: &[f64]) -> String {
    values.iter().map(|&v| crate::report::format_num(v)).collect::<Vec<_>>().join(";")
}

fn equilibria_table(network: &Network, tolls: &TollSchedule, tol: f64) -> Fallible<Table> {
    let set = enumerate_equilibria(network, tolls, tol)?;
    let mut t =
        Table::new(["equilibrium", "kind", "face", "social_cost", "common_costs", "residual", "road", "type", "flow"]);
    for (e, eq) in set.equilibria.iter().enumerate() {
        let kind = match eq.kind {
            EquilibriumKind::Point => "point",
            EquilibriumKind::FaceBarycenter => "face_barycenter",
        };
        let face = set.faces.iter().position(|f| f.vertices.contains(&e) || f.barycenter == Some(e));
        let prefix = [
            e.into(),
            kind.into(),
            face.into(),
            eq.cost.into(),
            join(&eq.certificate.common_costs).into(),
            eq.certificate.residual.into(),
        ];
        flow_rows(&mut t, network, &eq.routing, &prefix);
    }
    Ok(t)
}

fn toll_table(network: &Network, tolls: &TollSchedule) -> Table {
    let mut t = Table::new(["road", "type", "toll"]);
    for i in 0..network.num_roads() {
        for (j, name) in network.types().iter().enumerate() {
            t.push(vec![i.into(), name.as_str().into(), tolls.get(i, j).into()]);
        }
    }
    t
}

fn poa_table(network: &Network, scheme: TollScheme) -> Fallible<Table> {
    let r = poa_report(network, scheme)?;
    let mut t = Table::new([
        "scheme",
        "k",
        "optimal_cost",
        "worst_eq_cost",
        "empirical_poa",
        "bound_name",
        "bound_value",
        "satisfied",
    ]);
    let k: Cell = match r.k.finite() {
        Some(k) => k.into(),
        None => "unbounded".into(),
    };
    t.push(vec![
        r.scheme.into(),
        k,
        r.optimal_cost.into(),
        r.worst_eq_cost.into(),
        r.empirical_poa.into(),
        r.bound_name.as_str().into(),
        r.bound_value.into(),
        r.satisfied.into(),
    ]);
    Ok(t)
}

/// Grid `k_min + i k_step` up to `k_max`, inclusive up to rounding.
pub fn k_grid(k_min: f64, k_max: f64, k_step: f64) -> Result<Vec<f64>, Box<dyn Error>> {
    if !(k_min >= 1.0 && k_max >= k_min && k_max.is_finite() && k_step > 0.0) {
        return Err(format!("need 1 <= k-min <= k-max and k-step > 0, got {k_min}, {k_max}, {k_step}").into());
    }
    let count = ((k_max - k_min) / k_step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| k_min + i as f64 * k_step).collect())
}

/// Bound curves on the grid from [`k_grid`], one row per `k`.
pub fn reproduce_bounds(k_min: f64, k_max: f64, k_step: f64) -> Fallible<Table> {
    let mut t =
        Table::new(["k", "lambda_untolled", "anonymous_upper", "lower_a", "lower_b", "lower_anonymous_unrestricted"]);
    for k in k_grid(k_min, k_max, k_step)? {
        let c = lower_bound_curves(k)?;
        t.push(vec![
            k.into(),
            lambda_bound(k)?.into(),
            anonymous_bound(k)?.into(),
            c.untolled_a.into(),
            c.untolled_b.into(),
            c.anonymous_unrestricted_ratio.into(),
        ]);
    }
    Ok(t)
}

/// Computed values of the two worked examples next to their closed forms.
pub fn reproduce_examples(k: f64, tol: f64) -> Fallible<Table> {
    if !(k.is_finite() && k >= 1.0) {
        return Err(format!("--k must be finite and at least 1, got {k}").into());
    }
    let mut t = Table::new(["example", "quantity", "computed", "closed_form"]);
    let mut push = |ex: &str, q: &str, computed: f64, closed: f64| {
        t.push(vec![ex.into(), q.into(), computed.into(), closed.into()]);
    };
    let s = k.sqrt();

    let a = example_a(k);
    let opt = solve_optimal(&a, SolveMode::Exact)?;
    let untolled = worst_equilibrium(&a, &TollSchedule::zeros(&a), tol)?;
    let anon = anonymous_tolls(&a, &opt.routing)?;
    let anon_worst = worst_equilibrium(&a, &anon, tol)?;
    push("a", "optimal_cost", opt.cost, 2.0);
    push("a", "worst_untolled_cost", untolled.cost, 2.0 * k);
    push("a", "untolled_poa", untolled.cost / opt.cost, k);
    push("a", "anonymous_toll_road1", anon.get(0, 0), 1.0);
    push("a", "anonymous_toll_road2", anon.get(1, 0), 1.0);
    push("a", "worst_anonymous_cost", anon_worst.cost, 2.0 * k);

    let b = example_b(k);
    let opt = solve_optimal(&b, SolveMode::Exact)?;
    let untolled = worst_equilibrium(&b, &TollSchedule::zeros(&b), tol)?;
    let anon = anonymous_tolls(&b, &opt.routing)?;
    let anon_worst = worst_equilibrium(&b, &anon, tol)?;
    let manual = TollSchedule::from_rows(&[vec![0.0, 0.0], vec![0.5, 0.5]])?;
    let manual_worst = worst_equilibrium(&b, &manual, tol)?;
    push("b", "optimal_cost", opt.cost, 1.0 / s + 1.0 / (s + 1.0));
    push("b", "worst_untolled_cost", untolled.cost, 1.0 + 1.0 / s);
    push("b", "anonymous_toll_road1", anon.get(0, 0), 0.0);
    push("b", "anonymous_toll_road2", anon.get(1, 0), 1.0 / (s + 1.0));
    push("b", "worst_anonymous_cost", anon_worst.cost, 1.0 + 1.0 / (s + 1.0));
    push("b", "worst_cost_toll_half", manual_worst.cost, 1.0 + (3.0 * s - 1.0) / (4.0 * k));
    Ok(t)
}

fn validate_table(
    instances: usize,
    n: usize,
    m: usize,
    target_k: Option<f64>,
    seed: u64,
    tol: f64,
) -> Fallible<(Table, bool)> {
    let mut t = Table::new([
        "instance",
        "seed",
        "k",
        "optimal_cost",
        "untolled_ratio",
        "lambda_bound",
        "anonymous_ratio",
        "anonymous_bound",
        "differentiated_gap",
        "epsilon_unique",
        "aggregation",
        "pass",
    ]);
    let mut all_pass = true;
    for idx in 0..instances {
        let inst_seed = SeededRng::substream(seed, idx as u64).next_u64();
        let mut spec = InstanceGenSpec::new(inst_seed, n, m);
        spec.target_k = target_k;
        let net = generate_instance(&spec)?;
        let c = validate_instance(&net, tol)?;
        all_pass &= c.pass();
        t.push(vec![
            idx.into(),
            inst_seed.to_string().into(),
            c.k.into(),
            c.optimal_cost.into(),
            (c.untolled_worst / c.optimal_cost).into(),
            c.lambda_bound.into(),
            (c.anonymous_worst / c.optimal_cost).into(),
            c.anonymous_bound.into(),
            c.differentiated_gap.into(),
            c.epsilon_unique.into(),
            c.aggregation_ok.into(),
            (if c.pass() { "pass" } else { "fail" }).into(),
        ]);
    }
    Ok((t, all_pass))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("mixtoll").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn grid_is_inclusive() {
        assert_eq!(k_grid(1.0, 1.0, 1.0).unwrap(), vec![1.0]);
        assert_eq!(k_grid(1.0, 4.0, 0.05).unwrap().len(), 61);
        assert!(k_grid(0.5, 1.0, 0.1).is_err());
        assert!(k_grid(1.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run_capture(&["poa", "--scenario", "pigou", "--bogus"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["poa"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["toll", "--scenario", "pigou", "--scheme", "free"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["toll", "--scenario", "pigou"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["--help"]).0, 0);
    }

    #[test]
    fn domain_errors_exit_1() {
        let (code, _, err) = run_capture(&["optimal", "--scenario", "no_such_fixture"]);
        assert_eq!(code, EXIT_FAILURE);
        assert!(err.contains("no_such_fixture"));
        // example (b) has a constant road, which the epsilon scheme rejects
        assert_eq!(run_capture(&["toll", "--scenario", "example_b_k4", "--scheme", "epsilon"]).0, EXIT_FAILURE);
    }

    #[test]
    fn pigou_poa() {
        let (code, out, _) = run_capture(&["poa", "--scenario", "pigou"]);
        assert_eq!(code, 0);
        assert_eq!(
            out,
            "scheme,k,optimal_cost,worst_eq_cost,empirical_poa,bound_name,bound_value,satisfied\n\
             none,1,0.75,1,1.33333333333,lambda_untolled,1.33333333333,true\n"
        );
    }
}
