//! Command-line front end. `run` parses arguments, does the work and returns
//! the process exit code: 0 on success, 1 on a model or runtime error, 2 on
//! a usage error or an unreadable/unparseable input file.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::domains::{generate, DomainConfig, DomainName, GeneratedDomain, RewardVariant};
use crate::estimator::{initial_supports, SupportTracker};
use crate::learn::{run_matrix, train, Agent, Condition, FeatureRepr, MatrixSpec, TrainConfig};
use crate::model::format::parse_model;
use crate::model::{ActionSet, Pomdp, SpecKind, Specification};
use crate::runtime::{uniform_action, ShieldGate, ShieldSchedule};
use crate::sim::{rollout, terminal_states};
use crate::synth::{synthesize, Shield, DEFAULT_MAX_NODES};

/// Default directory for output files when no path is given.
pub const OUT_DIR_ENV: &str = "SHIELDRL_OUT";

#[derive(Parser, Debug)]
#[command(name = "beliefshield", version, about = "Belief-support shields for POMDPs and shielded tabular RL")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesize a shield and write it as JSON.
    Synth(SynthArgs),
    /// Roll out a policy and print every step.
    Simulate(SimulateArgs),
    /// Train one agent and write its learning curve as CSV.
    Train(TrainArgs),
    /// Train a grid of domains, conditions and seeds in parallel.
    Matrix(MatrixArgs),
    /// Print model and shield statistics.
    Inspect(InspectArgs),
}

#[derive(Args, Debug, Clone)]
struct DomainArgs {
    /// Benchmark domain: refuel, obstacle, avoid, evade, intercept or rocks.
    #[arg(long)]
    domain: Option<DomainName>,
    /// Grid size.
    #[arg(long)]
    n: Option<usize>,
    /// Vision radius (avoid, evade, intercept).
    #[arg(long)]
    radius: Option<usize>,
    /// Battery capacity (refuel).
    #[arg(long)]
    energy: Option<usize>,
    /// Episode step cap.
    #[arg(long)]
    cap: Option<usize>,
    /// sparse or dense.
    #[arg(long, default_value = "sparse")]
    reward: RewardVariant,
}

impl DomainArgs {
    fn config(&self, name: DomainName) -> DomainConfig {
        let mut c = DomainConfig::new(name).with_reward(self.reward);
        if let Some(n) = self.n {
            c = c.with_n(n);
        }
        if let Some(r) = self.radius {
            c = c.with_radius(r);
        }
        if let Some(e) = self.energy {
            c = c.with_energy(e);
        }
        if let Some(cap) = self.cap {
            c = c.with_episode_cap(cap);
        }
        c
    }
}

#[derive(Args, Debug, Clone)]
struct SourceArgs {
    /// Model file in the text format.
    #[arg(long, conflicts_with = "domain")]
    model: Option<PathBuf>,
    #[command(flatten)]
    domain: DomainArgs,
    /// reach-avoid or avoid.
    #[arg(long, default_value = "reach-avoid")]
    spec: SpecKind,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Output file; defaults to shield.json in $SHIELDRL_OUT or the current directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MAX_NODES)]
    max_nodes: usize,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Shield file; synthesized on the fly when absent.
    #[arg(long)]
    shield: Option<PathBuf>,
    /// shielded-random or random.
    #[arg(long, default_value = "shielded-random")]
    policy: String,
    #[arg(long, default_value_t = 1)]
    episodes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Step cap; defaults to the domain's cap or 100 for model files.
    #[arg(long = "steps")]
    steps: Option<usize>,
    /// Print only the per-episode summary lines.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    domain: DomainArgs,
    /// reinforce or qlearning.
    #[arg(long, default_value = "reinforce")]
    agent: Agent,
    /// always-on, off, sudden:K, smooth:K:ALPHA or prob:P.
    #[arg(long, default_value = "always-on")]
    shield: ShieldSchedule,
    /// obs, support or stacked.
    #[arg(long, default_value = "support")]
    repr: FeatureRepr,
    #[arg(long, default_value_t = 5000)]
    episodes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    eval_interval: usize,
    #[arg(long, default_value_t = 10)]
    eval_episodes: usize,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Curve CSV; defaults to curve.csv in $SHIELDRL_OUT or the current directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the per-episode violation ledger here.
    #[arg(long)]
    ledger: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MatrixArgs {
    /// Comma-separated domains.
    #[arg(long, value_delimiter = ',', default_value = "refuel,obstacle,avoid,evade,intercept,rocks")]
    domains: Vec<DomainName>,
    #[arg(long, value_delimiter = ',', default_value = "reinforce")]
    agents: Vec<Agent>,
    /// Comma-separated shield schedules.
    #[arg(long, value_delimiter = ',', default_value = "always-on,off")]
    shields: Vec<ShieldSchedule>,
    #[arg(long, value_delimiter = ',', default_value = "support")]
    reprs: Vec<FeatureRepr>,
    /// Number of seeds; seeds run from --seed-base upwards.
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    seed_base: u64,
    #[arg(long, default_value_t = 5000)]
    episodes: usize,
    #[arg(long, default_value_t = 100)]
    eval_interval: usize,
    #[arg(long, default_value_t = 10)]
    eval_episodes: usize,
    /// Bundle directory; defaults to matrix/ in $SHIELDRL_OUT or the current directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct InspectArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Shield file to summarize and check against the model.
    #[arg(long)]
    shield: Option<PathBuf>,
    /// Synthesize a shield and report its statistics.
    #[arg(long)]
    synth: bool,
}

/// Failure of a command, carrying its exit code.
struct Fail {
    code: i32,
    message: String,
}

fn usage(message: impl Into<String>) -> Fail {
    Fail { code: 2, message: message.into() }
}

fn runtime(message: impl ToString) -> Fail {
    Fail { code: 1, message: message.to_string() }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if code == 0 { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    let result = match cli.command {
        Command::Synth(a) => cmd_synth(a, out, err),
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::Train(a) => cmd_train(a, out),
        Command::Matrix(a) => cmd_matrix(a, out, err),
        Command::Inspect(a) => cmd_inspect(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn default_out(name: &str) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) => PathBuf::from(dir).join(name),
        None => PathBuf::from(name),
    }
}

/// The parent directory of an output file must already exist.
fn check_out_file(path: &Path) -> Result<(), Fail> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() && !p.is_dir() => Err(usage(format!("output directory {} does not exist", p.display()))),
        _ if path.is_dir() => Err(usage(format!("output path {} is a directory", path.display()))),
        _ => Ok(()),
    }
}

fn read_model(path: &Path) -> Result<Pomdp, Fail> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    parse_model(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn read_shield(path: &Path) -> Result<Shield, Fail> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    Shield::from_json(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), Fail> {
    fs::write(path, text).map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))
}

/// A loaded model with its specification; domains also carry their config.
struct Source {
    pomdp: Pomdp,
    spec: Specification,
    domain: Option<GeneratedDomain>,
}

fn load(s: &SourceArgs) -> Result<Source, Fail> {
    match (&s.model, s.domain.domain) {
        (Some(path), _) => {
            let pomdp = read_model(path)?;
            let spec = Specification::from_labels(&pomdp, s.spec).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            Ok(Source { pomdp, spec, domain: None })
        }
        (None, Some(name)) => {
            let d = generate(&s.domain.config(name)).map_err(runtime)?;
            let spec = if s.spec == SpecKind::AvoidOnly {
                Specification::from_labels(&d.pomdp, SpecKind::AvoidOnly).map_err(runtime)?
            } else {
                d.spec.clone()
            };
            Ok(Source { pomdp: d.pomdp.clone(), spec, domain: Some(d) })
        }
        (None, None) => Err(usage("give either --model PATH or --domain NAME")),
    }
}

fn cmd_synth(a: SynthArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Fail> {
    let path = a.out.clone().unwrap_or_else(|| default_out("shield.json"));
    check_out_file(&path)?;
    let src = load(&a.source)?;
    let start = Instant::now();
    let sh = synthesize(&src.pomdp, &src.spec, a.max_nodes).map_err(runtime)?;
    let elapsed = start.elapsed();
    let initial = initial_supports(&src.pomdp).len();
    if sh.initial_not_winning().len() == initial {
        return Err(runtime("no initial support is winning; the specification cannot be enforced"));
    }
    for b in sh.initial_not_winning() {
        let _ = writeln!(err, "warning: initial support {b:?} is not winning");
    }
    write_file(&path, &sh.to_json())?;
    let st = sh.stats();
    let _ = writeln!(out, "support nodes: {}", st.support_nodes);
    let _ = writeln!(out, "winning supports: {}", st.winning);
    let _ = writeln!(out, "rounds: {}", st.rounds);
    let _ = writeln!(out, "synthesis time: {:.3} s", elapsed.as_secs_f64());
    let _ = writeln!(out, "wrote {}", path.display());
    Ok(())
}

fn action_list(m: &Pomdp, set: ActionSet) -> String {
    let names: Vec<&str> = set.iter().map(|a| m.action_name(a)).collect();
    format!("{{{}}}", names.join(","))
}

fn support_list(m: &Pomdp, states: &[usize]) -> String {
    let names: Vec<&str> = states.iter().map(|&s| m.state_name(s)).collect();
    format!("{{{}}}", names.join(","))
}

fn cmd_simulate(a: SimulateArgs, out: &mut dyn Write) -> Result<(), Fail> {
    let shielded = match a.policy.as_str() {
        "shielded-random" => true,
        "random" => false,
        other => return Err(usage(format!("unknown policy {other:?} (expected shielded-random or random)"))),
    };
    let src = load(&a.source)?;
    let shield = match (&a.shield, shielded) {
        (Some(p), true) => {
            let sh = read_shield(p)?;
            if !sh.matches_graph(&src.pomdp) {
                return Err(usage(format!("{} was synthesized for a different model", p.display())));
            }
            Some(sh)
        }
        (None, true) => Some(synthesize(&src.pomdp, &src.spec, DEFAULT_MAX_NODES).map_err(runtime)?),
        (_, false) => None,
    };
    let m = &src.pomdp;
    let cap = a.steps.or(src.domain.as_ref().map(|d| d.config.episode_cap)).unwrap_or(100);
    let terminal = match &src.domain {
        Some(d) => d.terminal.clone(),
        None => terminal_states(m, &src.spec),
    };
    let mut tracker = SupportTracker::new(m);
    let mut gate = ShieldGate::new(shield.as_ref());
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let (mut reached, mut violated) = (0, 0);
    for ep in 0..a.episodes {
        let tr = rollout(&mut tracker, &src.spec, &terminal, cap, &mut rng, |tracker, b, rng| {
            let g = gate.apply(tracker, b, 1.0, rng)?;
            Ok((g.mask, uniform_action(g.mask, rng).expect("mask is nonempty"), g.abstained))
        })
        .map_err(runtime)?;
        if !a.quiet {
            let _ = writeln!(out, "episode {ep}");
            for t in 0..=tr.len() {
                let s = tr.states[t];
                let line = format!(
                    "  t={t} state={} obs={} support={}",
                    m.state_name(s),
                    m.obs_name(tr.observations[t]),
                    support_list(m, tracker.support(tr.supports[t]).states())
                );
                let _ = if t < tr.len() {
                    writeln!(out, "{line} allowed={} action={}", action_list(m, tr.allowed[t]), m.action_name(tr.actions[t]))
                } else {
                    writeln!(out, "{line}")
                };
            }
        }
        reached += usize::from(tr.reached);
        violated += usize::from(tr.violated);
        let _ = writeln!(
            out,
            "episode {ep}: steps {} final {} reached {} violated {}",
            tr.len(),
            m.state_name(*tr.states.last().expect("trace has a state")),
            tr.reached,
            tr.violated
        );
    }
    let _ = writeln!(out, "episodes {}: reached {reached}, violated {violated}", a.episodes);
    Ok(())
}

fn cmd_train(a: TrainArgs, out: &mut dyn Write) -> Result<(), Fail> {
    let name = a.domain.domain.ok_or_else(|| usage("train needs --domain NAME"))?;
    let path = a.out.clone().unwrap_or_else(|| default_out("curve.csv"));
    check_out_file(&path)?;
    if let Some(l) = &a.ledger {
        check_out_file(l)?;
    }
    let d = generate(&a.domain.config(name)).map_err(runtime)?;
    let mut cfg = TrainConfig::new(a.agent).with_episodes(a.episodes).with_seed(a.seed).with_schedule(a.shield).with_repr(a.repr);
    cfg.eval_interval = a.eval_interval;
    cfg.eval_episodes = a.eval_episodes;
    cfg.gamma = a.gamma;
    cfg.epsilon = a.epsilon;
    if let Some(lr) = a.lr {
        cfg.learning_rate = lr;
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let shield = if a.shield.uses_shield() { Some(synthesize(&d.pomdp, &d.spec, DEFAULT_MAX_NODES).map_err(runtime)?) } else { None };
    let curve = train(&d, shield.as_ref(), &cfg).map_err(runtime)?;
    write_file(&path, &curve.to_csv())?;
    if let Some(l) = &a.ledger {
        write_file(l, &curve.ledger_csv())?;
    }
    let final_smooth = curve.final_smoothed().map_or("n/a".to_string(), |v| format!("{v:.4}"));
    let _ = writeln!(
        out,
        "{name} {} {} {}: final smoothed normalized return {final_smooth}; violations during {}, after {}",
        a.agent, a.shield, a.repr, curve.violations_during, curve.violations_after
    );
    let _ = writeln!(out, "wrote {}", path.display());
    Ok(())
}

fn cmd_matrix(a: MatrixArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Fail> {
    let dir = a.out.clone().unwrap_or_else(|| default_out("matrix"));
    if dir.is_file() {
        return Err(usage(format!("output path {} is a file", dir.display())));
    }
    let mut base = TrainConfig::new(a.agents.first().copied().unwrap_or(Agent::Reinforce)).with_episodes(a.episodes);
    base.eval_interval = a.eval_interval;
    base.eval_episodes = a.eval_episodes;
    base.validate().map_err(|e| usage(e.to_string()))?;
    let mut conditions = Vec::new();
    for &agent in &a.agents {
        for &schedule in &a.shields {
            for &repr in &a.reprs {
                conditions.push(Condition::new(agent, schedule, repr));
            }
        }
    }
    let spec = MatrixSpec {
        domains: a.domains.iter().map(|&n| DomainConfig::new(n)).collect(),
        conditions,
        seeds: (a.seed_base..a.seed_base + a.seeds).collect(),
        base,
    };
    let bundle = run_matrix(&spec);
    let manifest = bundle.write(&dir).map_err(|e| runtime(format!("cannot write bundle to {}: {e}", dir.display())))?;
    for f in &bundle.failures {
        let _ = writeln!(err, "failed: {} {} seed {:?}: {}", f.domain, f.condition, f.seed, f.error);
    }
    for e in &manifest.cells {
        let _ = writeln!(
            out,
            "{} {} seed {}: final {} violations {}/{}",
            e.domain,
            e.condition,
            e.seed.unwrap_or(0),
            e.final_smooth_norm.map_or("n/a".into(), |v| format!("{v:.4}")),
            e.violations_during,
            e.violations_after
        );
    }
    let _ = writeln!(out, "{} cells, {} baselines, {} failures; wrote {}", manifest.cells.len(), manifest.baselines.len(), bundle.failures.len(), dir.display());
    if bundle.failures.is_empty() {
        Ok(())
    } else {
        Err(runtime(format!("{} matrix cells failed", bundle.failures.len())))
    }
}

fn cmd_inspect(a: InspectArgs, out: &mut dyn Write) -> Result<(), Fail> {
    let src = load(&a.source)?;
    let m = &src.pomdp;
    let edges: usize = (0..m.num_states()).map(|s| m.available(s).iter().map(|a| m.successors(s, a).len()).sum::<usize>()).sum();
    let _ = writeln!(out, "states: {}", m.num_states());
    let _ = writeln!(out, "actions: {} ({})", m.num_actions(), m.action_names().join(" "));
    let _ = writeln!(out, "observations: {}", m.num_observations());
    let _ = writeln!(out, "transitions: {edges}");
    let _ = writeln!(out, "specification: {:?}, reach {} states, avoid {} states", src.spec.kind(), src.spec.reach().len(), src.spec.avoid().len());
    let _ = writeln!(out, "initial supports: {}", initial_supports(m).len());
    let _ = writeln!(out, "fingerprint: {}", m.graph_fingerprint());
    if let Some(d) = &src.domain {
        let _ = writeln!(out, "domain: {} (n = {}, episode cap {})", d.name(), d.config.n, d.config.episode_cap);
        let _ = writeln!(out, "reference state count: {}", d.name().reference_states());
        let _ = writeln!(out, "normalization: (R + {}) / {}", d.normalization.offset, d.normalization.scale);
    }
    let shield = match (&a.shield, a.synth) {
        (Some(p), _) => {
            let sh = read_shield(p)?;
            let _ = writeln!(out, "shield matches model: {}", sh.matches_graph(m));
            Some(sh)
        }
        (None, true) => Some(synthesize(m, &src.spec, DEFAULT_MAX_NODES).map_err(runtime)?),
        (None, false) => None,
    };
    if let Some(sh) = shield {
        let st = sh.stats();
        let _ = writeln!(out, "shield: {} support nodes, {} winning, {} rounds", st.support_nodes, st.winning, st.rounds);
        let _ = writeln!(out, "initial supports not winning: {}", sh.initial_not_winning().len());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("beliefshield").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    fn t1_file(dir: &Path) -> PathBuf {
        let p = dir.join("t1.pomdp");
        fs::write(&p, crate::fixtures::T1).unwrap();
        p
    }

    #[test]
    fn synth_t1() {
        let dir = tempfile::tempdir().unwrap();
        let model = t1_file(dir.path());
        let shield = dir.path().join("t1.json");
        let (code, out, _) = call(&["synth", "--model", model.to_str().unwrap(), "--out", shield.to_str().unwrap()]);
        assert_eq!(code, 0);
        assert!(out.contains("winning supports: 4"));
        let first = fs::read(&shield).unwrap();
        call(&["synth", "--model", model.to_str().unwrap(), "--out", shield.to_str().unwrap()]);
        assert_eq!(fs::read(&shield).unwrap(), first);
    }

    #[test]
    fn bad_path_is_a_usage_error() {
        let (code, _, err) = call(&["synth", "--model", "/nonexistent/model.pomdp", "--out", "/tmp/x.json"]);
        assert_eq!(code, 2);
        assert!(err.contains("cannot read"));
        let dir = tempfile::tempdir().unwrap();
        let bad = dir.path().join("bad.pomdp");
        fs::write(&bad, "pomdp\nstates: two\n").unwrap();
        let (code, _, err) = call(&["inspect", "--model", bad.to_str().unwrap()]);
        assert_eq!(code, 2);
        assert!(err.contains("line 2"), "{err}");
        assert_eq!(call(&["frobnicate"]).0, 2);
        assert_eq!(call(&["train", "--domain", "obstacle", "--shield", "sudden:x"]).0, 2);
    }

    #[test]
    fn simulate_t1_always_reaches_goal() {
        let dir = tempfile::tempdir().unwrap();
        let model = t1_file(dir.path());
        let (code, out, _) = call(&["simulate", "--model", model.to_str().unwrap(), "--episodes", "50", "--seed", "3"]);
        assert_eq!(code, 0);
        assert!(out.contains("episodes 50: reached 50, violated 0"), "{out}");
        assert!(out.contains("support={0,1} allowed={a} action=a"));
    }

    #[test]
    fn inspect_obstacle() {
        let (code, out, _) = call(&["inspect", "--domain", "obstacle", "--n", "6"]);
        assert_eq!(code, 0);
        assert!(out.contains("states: 37"));
    }

    #[test]
    fn train_writes_identical_curves() {
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.csv");
        let p2 = dir.path().join("b.csv");
        for p in [&p1, &p2] {
            let (code, out, _) = call(&["train", "--domain", "obstacle", "--episodes", "300", "--seed", "2", "--out", p.to_str().unwrap()]);
            assert_eq!(code, 0);
            assert!(out.contains("violations during 0, after 0"), "{out}");
        }
        assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
        let empty = dir.path().join("empty.csv");
        assert_eq!(call(&["train", "--domain", "obstacle", "--episodes", "0", "--out", empty.to_str().unwrap()]).0, 0);
        assert_eq!(fs::read_to_string(&empty).unwrap(), format!("{}\n", crate::learn::CURVE_HEADER));
    }

    #[test]
    fn matrix_with_no_seeds() {
        let dir = tempfile::tempdir().unwrap();
        let out_dir = dir.path().join("bundle");
        let (code, out, _) = call(&["matrix", "--seeds", "0", "--out", out_dir.to_str().unwrap()]);
        assert_eq!(code, 0);
        assert!(out.contains("0 cells, 0 baselines"));
        assert!(out_dir.join("manifest.json").is_file());
    }
}
