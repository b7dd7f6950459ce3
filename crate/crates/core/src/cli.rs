//! The `ramgaps` command line.
//!
//! Exit codes: 0 on success, 1 on invalid input or a failed computation, 2
//! when `verify` ran but some check failed.

use std::fmt::Write as _;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::error::{invalid_arg, Result};
use crate::hazard::HazardModel;
use crate::limitchain::{gem_recursion_check, rec_residuals, theta_msum_residual, LimitLaw};
use crate::mc;
use crate::pointproc::{build_limit_sequences_lazy, DelayMode, RenewalBuilder, YuleBuilder};
use crate::ram::{
    exact_config_probability, finite_potential, qstar_transition, sample_configuration, decrement_transition,
    FinitePotential,
};
use crate::records::{simulate_record_chain, IncreasingChainSpec, InitialLaw, RecordFlavor, Reconstruction};
use crate::verify::{count_tuples, verify, Suite};

#[derive(Debug, Parser)]
#[command(name = "ramgaps", version, about = "Gaps and counts of samples from residual allocation models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample finite-n configurations and their statistics.
    Simulate(SimulateArgs),
    /// Exact finite-n probabilities, kernels and moments.
    Exact(ExactArgs),
    /// Limit laws, or simulated paths of the limit chain.
    Limit(LimitArgs),
    /// Yule/renewal interleavings and the sequences read from them.
    Interleave(InterleaveArgs),
    /// Record chains, occupation laws and kernel reconstruction.
    Records(RecordsArgs),
    /// Run an acceptance suite and print its manifest.
    Verify(VerifyArgs),
    /// Residuals of the numeric identities.
    Identities(IdentitiesArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output format.
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
pub struct Stochastic {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, default_value_t = 1)]
    pub replicates: u64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Hazard model: gem:θ, beta:a,b, atoms:h1,h2/w1,w2, or a JSON object.
    #[arg(long)]
    pub model: String,
    #[arg(long)]
    pub n: u64,
    /// Largest j for the small counts K_j.
    #[arg(long, default_value_t = 4)]
    pub j: usize,
    #[command(flatten)]
    pub run: Stochastic,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExactOp {
    /// Probability of a count vector (--counts) under the finite-n law.
    Config,
    /// q*(ℓ, m) with ℓ = --n.
    Qstar,
    /// Decrement kernel q(ℓ, m) with ℓ = --n.
    Decrement,
    /// Finite potential g_{m:n}.
    Potential,
    /// Reversed kernel q̂_n(--j, --m).
    Reversed,
    /// Absorption probability of the reversed chain at --j.
    Absorption,
    /// Initial law of the reversed chain at --m.
    Initial,
    /// Entrance law P(Q_0 = m) of the limit chain.
    Entrance,
    /// μ_{i,j} with i = --m, j = --j (j may be -1).
    Moment,
    MuLog,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[arg(long)]
    pub model: String,
    #[arg(long, value_enum)]
    pub op: ExactOp,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub m: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    pub j: Option<i64>,
    /// Comma-separated counts N_1..N_M.
    #[arg(long)]
    pub counts: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LimitOp {
    Entrance,
    /// P(Q_{k+1} = n | Q_k = m).
    Transition,
    /// P(N_0 > k).
    N0Tail,
    /// P(G_j >= k).
    GapTail,
    Hitting,
    MeanGap,
    MeanQ,
    MeanSmallCount,
    /// P(N_0..N_k = --counts).
    Fdd,
    /// Simulated paths of Q with N and G.
    Simulate,
}

#[derive(Debug, Args)]
pub struct LimitArgs {
    #[arg(long)]
    pub model: String,
    #[arg(long, value_enum)]
    pub op: LimitOp,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub m: Option<u64>,
    #[arg(long)]
    pub j: Option<u64>,
    #[arg(long)]
    pub k: Option<u64>,
    #[arg(long)]
    pub counts: Option<String>,
    /// Transitions per simulated path.
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    #[command(flatten)]
    pub run: Stochastic,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct InterleaveArgs {
    #[arg(long)]
    pub model: String,
    /// Number of bars: Q_0..Q_k are resolved.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Number of stars: G_1..G_j are resolved.
    #[arg(long, default_value_t = 9)]
    pub j: usize,
    #[command(flatten)]
    pub run: Stochastic,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RecordsOp {
    Hitting,
    Potential,
    Occupation,
    Reconstruct,
    Simulate,
}

#[derive(Debug, Args)]
pub struct RecordsArgs {
    #[arg(long, value_enum)]
    pub op: RecordsOp,
    /// Parameter of the geometric initial law on {1, 2, ...}.
    #[arg(long, default_value_t = 0.3)]
    pub p: f64,
    #[arg(long, value_enum, default_value = "weak")]
    pub flavor: Flavor,
    /// Largest state reported.
    #[arg(long, default_value_t = 10)]
    pub j: u64,
    #[arg(long, default_value_t = 0)]
    pub steps: usize,
    #[command(flatten)]
    pub run: Stochastic,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Flavor {
    Weak,
    Strict,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IdentityOp {
    /// Summation identity in θ, m <= --m.
    Msum,
    /// Moment recursion, 2 <= n <= --n, for --model.
    Rec,
    /// Moment recursion for GEM(θ).
    GemRec,
    /// Hitting self-consistency for --model, n <= --n.
    Hitting,
    /// P(N_0 > k) integral vs closed form for GEM(θ), k <= --m.
    N0Tail,
    /// Count law vs Markov factorization for --model, tuples with sum <= --m.
    Fdd,
}

#[derive(Debug, Args)]
pub struct IdentitiesArgs {
    #[arg(long, value_enum)]
    pub op: IdentityOp,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, default_value_t = 30)]
    pub n: u64,
    #[arg(long, default_value_t = 50)]
    pub m: u64,
    #[command(flatten)]
    pub common: Common,
}

/// Rendered output of one command.
struct Output {
    json: Value,
    csv: Option<String>,
}

impl Output {
    fn json(json: Value) -> Self {
        Output { json, csv: None }
    }
}

/// Parses `args` (program name first), runs, writes output, returns the exit code.
pub fn run_from_args<I, T>(args: I, stdout: &mut dyn std::io::Write, stderr: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(stdout, "{text}");
            } else {
                let _ = write!(stderr, "{text}");
            }
            return code;
        }
    };
    match execute(&cli.command) {
        Ok((out, common, failed)) => match emit(&out, common, stdout) {
            Ok(()) => {
                if failed {
                    2
                } else {
                    0
                }
            }
            Err(e) => {
                let _ = writeln!(stderr, "error: {e}");
                1
            }
        },
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

fn emit(out: &Output, common: &Common, stdout: &mut dyn std::io::Write) -> Result<()> {
    let text = match common.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&out.json)?;
            s.push('\n');
            s
        }
        Format::Csv => out.csv.clone().ok_or_else(|| invalid_arg("this output has no csv form; use --format json"))?,
    };
    match &common.out {
        Some(path) => std::fs::write(path, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn execute(cmd: &Command) -> Result<(Output, &Common, bool)> {
    Ok(match cmd {
        Command::Simulate(a) => (simulate(a)?, &a.common, false),
        Command::Exact(a) => (exact(a)?, &a.common, false),
        Command::Limit(a) => (limit(a)?, &a.common, false),
        Command::Interleave(a) => (interleave(a)?, &a.common, false),
        Command::Records(a) => (records(a)?, &a.common, false),
        Command::Verify(a) => {
            let seed = need_seed(a.seed)?;
            let m = verify(a.suite, seed, a.workers)?;
            let failed = !m.pass;
            let mut csv = String::from("test,statistic,p_value,abs_error,threshold,pass\n");
            for c in &m.checks {
                let _ = writeln!(
                    csv,
                    "\"{}\",{},{},{},{},{}",
                    c.test.replace('"', "'"),
                    c.statistic,
                    c.p_value.map_or(String::new(), |p| p.to_string()),
                    c.abs_error.map_or(String::new(), |e| e.to_string()),
                    c.threshold,
                    c.pass
                );
            }
            (Output { json: serde_json::to_value(&m)?, csv: Some(csv) }, &a.common, failed)
        }
        Command::Identities(a) => (identities(a)?, &a.common, false),
    })
}

fn need_seed(seed: Option<u64>) -> Result<u64> {
    seed.ok_or_else(|| invalid_arg("--seed is required for stochastic commands"))
}

fn need<T>(x: Option<T>, flag: &str) -> Result<T> {
    x.ok_or_else(|| invalid_arg(format!("--{flag} is required for this operation")))
}

fn parse_model(s: &str) -> Result<HazardModel> {
    s.parse()
}

fn parse_counts(s: &str) -> Result<Vec<u64>> {
    s.split(',')
        .map(|x| x.trim().parse::<u64>().map_err(|e| invalid_arg(format!("count '{x}': {e}"))))
        .collect()
}

fn unsigned(j: Option<i64>, flag: &str) -> Result<u64> {
    let v = need(j, flag)?;
    u64::try_from(v).map_err(|_| invalid_arg(format!("--{flag} must be nonnegative here")))
}

fn join(v: &[u64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

fn header(model: &HazardModel, seed: u64) -> Value {
    json!({ "model": model.spec_string(), "model_json": model, "seed": seed })
}

fn simulate(a: &SimulateArgs) -> Result<Output> {
    let model = parse_model(&a.model)?;
    let seed = need_seed(a.run.seed)?;
    let n = a.n;
    let configs = mc::run(seed, a.run.replicates, a.run.workers, |rng| sample_configuration(&model, n, rng))?;
    let mut samples = Vec::with_capacity(configs.len());
    let mut csv = format!("# model={} seed={}\nreplicate,n,m_max,l_n,k0", model.spec_string(), seed);
    for j in 1..=a.j {
        let _ = write!(csv, ",k{j}");
    }
    csv.push_str(",counts,gaps\n");
    for (r, c) in configs.iter().enumerate() {
        let s = c.statistics(a.j);
        samples.push(json!({ "configuration": c, "statistics": s }));
        let _ = write!(csv, "{r},{},{},{},{}", c.n, c.m_max(), s.l_n, s.k0);
        for k in &s.k {
            let _ = write!(csv, ",{k}");
        }
        let _ = writeln!(csv, ",{},{}", join(&c.counts), join(&c.gaps));
    }
    let mut json = header(&model, seed);
    json["n"] = json!(n);
    json["replicates"] = json!(a.run.replicates);
    json["samples"] = Value::Array(samples);
    Ok(Output { json, csv: Some(csv) })
}

fn exact(a: &ExactArgs) -> Result<Output> {
    let model = parse_model(&a.model)?;
    let value: Value = match a.op {
        ExactOp::Config => {
            let counts = parse_counts(need(a.counts.as_deref(), "counts")?)?;
            json!(exact_config_probability(&model, &counts)?)
        }
        ExactOp::Qstar => json!(qstar_transition(&model, need(a.n, "n")?, need(a.m, "m")?)?),
        ExactOp::Decrement => json!(decrement_transition(&model, need(a.n, "n")?, need(a.m, "m")?)?),
        ExactOp::Potential => json!(finite_potential(&model, need(a.n, "n")?, need(a.m, "m")?)?),
        ExactOp::Reversed => {
            let g = FinitePotential::new(&model, need(a.n, "n")?)?;
            json!(g.reversed_transition(unsigned(a.j, "j")?, need(a.m, "m")?)?)
        }
        ExactOp::Absorption => {
            let g = FinitePotential::new(&model, need(a.n, "n")?)?;
            json!(g.absorption(unsigned(a.j, "j")?)?)
        }
        ExactOp::Initial => {
            let g = FinitePotential::new(&model, need(a.n, "n")?)?;
            json!(g.initial_pmf(need(a.m, "m")?)?)
        }
        ExactOp::Entrance => json!(LimitLaw::new(&model)?.entrance_pmf(need(a.m, "m")?)),
        ExactOp::Moment => serde_json::to_value(model.mu_moment(need(a.m, "m")?, need(a.j, "j")?)?)?,
        ExactOp::MuLog => serde_json::to_value(model.mu_log())?,
    };
    let args = json!({ "n": a.n, "m": a.m, "j": a.j, "counts": a.counts });
    scalar(&model, "op", &op_name(a.op), args, value)
}

fn op_name<T: ValueEnum>(op: T) -> String {
    op.to_possible_value().expect("no skipped variants").get_name().to_string()
}

/// One evaluated quantity with the arguments that produced it.
fn scalar(model: &HazardModel, key: &str, op: &str, args: Value, value: Value) -> Result<Output> {
    let csv = format!("model,{key},args,value\n{},{},\"{}\",{}\n", model.spec_string(), op, args.to_string().replace('"', "'"), value);
    Ok(Output { json: json!({ "model": model.spec_string(), key: op, "args": args, "value": value }), csv: Some(csv) })
}

fn limit(a: &LimitArgs) -> Result<Output> {
    let model = parse_model(&a.model)?;
    let law = LimitLaw::new(&model)?;
    let ext = |e: crate::hazard::ExtReal| serde_json::to_value(e).expect("serializable");
    let value = match a.op {
        LimitOp::Entrance => json!(law.entrance_pmf(need(a.m, "m")?)),
        LimitOp::Transition => json!(law.transition_pmf(need(a.m, "m")?, need(a.n, "n")?)),
        LimitOp::N0Tail => json!(law.n0_tail(need(a.k, "k")?)),
        LimitOp::GapTail => json!(law.gap_tail(need(a.j, "j")?, need(a.k, "k")?)?),
        LimitOp::Hitting => json!(law.hitting(need(a.j, "j")?)?),
        LimitOp::MeanGap => json!(law.mean_gap(need(a.j, "j")?)?),
        LimitOp::MeanQ => ext(law.mean_q(need(a.j, "j")?)),
        LimitOp::MeanSmallCount => ext(law.mean_small_count(need(a.j, "j")?)),
        LimitOp::Fdd => json!(law.fdd_counts_pmf(&parse_counts(need(a.counts.as_deref(), "counts")?)?)?),
        LimitOp::Simulate => {
            let seed = need_seed(a.run.seed)?;
            let j_max = a.j.unwrap_or(5);
            let paths = mc::run(seed, a.run.replicates, a.run.workers, |rng| law.simulate_chain(a.steps, j_max, rng))?;
            let mut csv = format!("# model={} seed={}\nreplicate,q,n,g\n", model.spec_string(), seed);
            for (r, p) in paths.iter().enumerate() {
                let _ = writeln!(csv, "{r},{},{},{}", join(&p.q), join(&p.n), join(&p.g));
            }
            let mut json = header(&model, seed);
            json["steps"] = json!(a.steps);
            json["paths"] = serde_json::to_value(&paths)?;
            return Ok(Output { json, csv: Some(csv) });
        }
    };
    let args = json!({ "n": a.n, "m": a.m, "j": a.j, "k": a.k, "counts": a.counts });
    scalar(&model, "law", &op_name(a.op), args, value)
}

fn interleave(a: &InterleaveArgs) -> Result<Output> {
    let model = parse_model(&a.model)?;
    let seed = need_seed(a.run.seed)?;
    let seqs = mc::run(seed, a.run.replicates, a.run.workers, |rng| {
        let mut yb = YuleBuilder::new();
        let mut rb = RenewalBuilder::new(&model, DelayMode::Stationary)?;
        build_limit_sequences_lazy(&mut yb, &mut rb, a.k, a.j, rng)
    })?;
    let mut csv = format!("# model={} seed={}\nreplicate,symbols,q,n,n_censored,g\n", model.spec_string(), seed);
    for (r, s) in seqs.iter().enumerate() {
        let _ = writeln!(csv, "{r},{},{},{},{},{}", s.trace.symbols, join(&s.q), join(&s.n), s.n_censored, join(&s.g));
    }
    let mut json = header(&model, seed);
    json["traces"] = serde_json::to_value(&seqs)?;
    Ok(Output { json, csv: Some(csv) })
}

fn records(a: &RecordsArgs) -> Result<Output> {
    let p0 = InitialLaw::geometric(a.p)?;
    let (spec, flavor) = match a.flavor {
        Flavor::Weak => (IncreasingChainSpec::weak_record(&p0), RecordFlavor::Weak),
        Flavor::Strict => (IncreasingChainSpec::strict_record(&p0), RecordFlavor::Strict),
    };
    let base = json!({ "initial": format!("geometric:{}", a.p), "flavor": flavor });
    let mut json = base;
    match a.op {
        RecordsOp::Hitting => json["hitting"] = json!(spec.hitting_probabilities(a.j)),
        RecordsOp::Potential => {
            json["potential"] = json!(spec.solve_potential(a.j));
            json["residual"] = json!(spec.potential_residual(a.j));
        }
        RecordsOp::Occupation => {
            let laws = (1..=a.j).map(|j| spec.occupation_law(j)).collect::<Result<Vec<_>>>()?;
            json["occupation"] = serde_json::to_value(laws)?;
        }
        RecordsOp::Reconstruct => {
            let h = spec.hitting_probabilities(a.j);
            let diag: Vec<f64> = (1..=a.j).map(|j| spec.transition(j, j)).collect();
            let rec = Reconstruction::new(h, diag)?;
            let mut worst: f64 = 0.0;
            for i in 1..=a.j {
                worst = worst.max((rec.initial(i)? - spec.initial(i)).abs());
                for j in 1..=a.j {
                    worst = worst.max((rec.transition(i, j)? - spec.transition(i, j)).abs());
                }
            }
            json["max_abs_error"] = json!(worst);
            json["window_product"] = json!(rec.product_tail);
        }
        RecordsOp::Simulate => {
            let seed = need_seed(a.run.seed)?;
            let paths =
                mc::run(seed, a.run.replicates, a.run.workers, |rng| simulate_record_chain(&p0, flavor, a.steps, a.j, rng))?;
            let mut csv = format!("# initial=geometric:{} seed={}\nreplicate,path,occupation\n", a.p, seed);
            for (r, p) in paths.iter().enumerate() {
                let _ = writeln!(csv, "{r},{},{}", join(&p.path), join(&p.occupation));
            }
            json["seed"] = json!(seed);
            json["paths"] = serde_json::to_value(&paths)?;
            return Ok(Output { json, csv: Some(csv) });
        }
    }
    Ok(Output::json(json))
}

fn identities(a: &IdentitiesArgs) -> Result<Output> {
    let theta = || need(a.theta, "theta");
    let model = || -> Result<HazardModel> { parse_model(need(a.model.as_deref(), "model")?) };
    let json = match a.op {
        IdentityOp::Msum => json!({ "theta": theta()?, "m_max": a.m, "residual": theta_msum_residual(theta()?, a.m)? }),
        IdentityOp::Rec => {
            let m = model()?;
            json!({ "model": m.spec_string(), "n_from": 2, "residuals": rec_residuals(&m, a.n)? })
        }
        IdentityOp::GemRec => json!({ "theta": theta()?, "n_max": a.n, "residual": gem_recursion_check(theta()?, a.n)? }),
        IdentityOp::Hitting => {
            let m = model()?;
            json!({ "model": m.spec_string(), "n_max": a.n, "residual": LimitLaw::new(&m)?.hitting_self_consistency(a.n) })
        }
        IdentityOp::N0Tail => {
            let t = theta()?;
            let law = LimitLaw::new(&HazardModel::gem(t)?)?;
            let worst = (1..=a.m)
                .map(|k| (law.n0_tail_integral(k) - crate::limitchain::n0_tail_gem(t, k)).abs())
                .fold(0.0, f64::max);
            json!({ "theta": t, "k_max": a.m, "residual": worst })
        }
        IdentityOp::Fdd => {
            let m = model()?;
            let law = LimitLaw::new(&m)?;
            let mut worst: f64 = 0.0;
            for c in count_tuples(a.m.min(10)) {
                worst = worst.max((law.fdd_counts_pmf(&c)? - law.fdd_by_factorization(&c)?).abs());
            }
            json!({ "model": m.spec_string(), "max_sum": a.m.min(10), "residual": worst })
        }
    };
    Ok(Output::json(json))
}

/// Entry point for the binary.
pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_from_args(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
