use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pnes::channel::{evolve_pnes_adaptive, evolve_pnes_sectors, ChannelParams, CutoffPolicy};
use pnes::entanglement::{sector_negativity, separation_time, SeparationOptions, NEGATIVITY_THRESHOLD};
use pnes::experiments::{
    fig1, run_sweep, thermal_occupation, write_csv, write_fig1, Fig1Config, MatchKind, MatchSelection, SweepConfig,
    SweepRecord,
};
use pnes::fock::{FockCutoff, TolProfile};
use pnes::gaussian::{evolve_cm, gaussian_negativity, t_g_closed, twb_cm};
use pnes::states::{
    family_bracket, family_member, pnes_energy, pure_entropy, pure_entropy_bits, pure_negativity, solve_family_param,
    FamilyKind, MatchTarget, MeasureKind, PnesCoefficients, StateSpec, TwbParams, SOLVER_CUTOFF,
};
use pnes::{Error, Result};

/// Photon-number entangled states in thermal channels.
#[derive(Parser, Debug)]
#[command(name = "pnes", version)]
struct Cli {
    /// Repeat cutoff-dependent results at a larger cutoff and fail on disagreement.
    #[arg(long, global = true)]
    check: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Coefficients, energy, negativity and entropy of a state spec.
    State {
        spec: String,
        /// Number of coefficients to print.
        #[arg(long, default_value_t = 8)]
        show: usize,
    },
    /// Solve a family parameter for a target energy, negativity or entropy.
    Match {
        #[arg(long)]
        family: String,
        #[arg(long)]
        kind: String,
        #[arg(long)]
        value: f64,
    },
    /// Evolve a state through the channel and report sanity and negativity.
    Evolve {
        spec: String,
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        cutoff: Option<usize>,
    },
    /// Separation time of the twin beam with squeezing r, or of the twin beam matched to a state.
    Tg {
        #[arg(long, conflicts_with = "state", required_unless_present = "state")]
        r: Option<f64>,
        #[arg(long)]
        state: Option<String>,
        /// Matching used with --state.
        #[arg(long = "match", default_value = "energy")]
        match_kind: String,
        /// Measure used for entanglement matching.
        #[arg(long, default_value = "entropy")]
        measure: String,
        #[command(flatten)]
        channel: ChannelArgs,
        /// Also locate the separation time of --state itself in Fock space.
        #[arg(long, requires = "state")]
        separation: bool,
        #[arg(long)]
        cutoff: Option<usize>,
    },
    /// Sweep B/A for one state and write CSV.
    Sweep {
        /// JSON config; flags override its values.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        state: Option<String>,
        /// energy, entanglement or both.
        #[arg(long = "match")]
        match_kind: Option<String>,
        /// Comma-separated B/A values.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        measure: Option<String>,
        /// Output CSV path (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        cutoff: Option<usize>,
    },
    /// Residual-negativity data set for the five reference states: one CSV per series plus an SVG.
    Fig1 {
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// JSON config; flags override its values.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        no_svg: bool,
        /// Skip the larger-cutoff verification.
        #[arg(long)]
        no_check: bool,
        #[arg(long)]
        cutoff: Option<usize>,
    },
    /// Thermal occupation of a mode at frequency (Hz) and temperature (K).
    Thermal {
        #[arg(long)]
        freq: f64,
        #[arg(long)]
        temp: f64,
    },
}

#[derive(Args, Debug, Clone, Copy)]
struct ChannelArgs {
    /// Thermal occupation N_T.
    #[arg(long)]
    nt: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
}

impl ChannelArgs {
    fn params(self) -> Result<ChannelParams> {
        ChannelParams::new(self.gamma, self.nt)
    }
}

fn policy_with(cutoff: Option<usize>) -> CutoffPolicy {
    CutoffPolicy { fixed: cutoff, ..CutoffPolicy::default() }
}

fn resolve(spec: &str) -> Result<PnesCoefficients> {
    let spec: StateSpec = spec.parse()?;
    let policy = CutoffPolicy::default();
    spec.resolve(policy.tail_tol, policy.amplitude_tol, policy.floor)
}

fn converged(value: f64, check: f64, dim: usize, dim_check: usize, tol: f64) -> Result<f64> {
    let delta = (value - check).abs();
    if delta > tol {
        return Err(Error::Convergence { dim, dim_check, delta });
    }
    Ok(delta)
}

fn cmd_state(out: &mut impl Write, spec: &str, show: usize, check: bool) -> Result<()> {
    let coeffs = resolve(spec)?;
    writeln!(out, "state       {spec}")?;
    writeln!(out, "dimension   {}", coeffs.len())?;
    writeln!(out, "truncation  {:e}", coeffs.truncation_loss())?;
    for (n, c) in coeffs.coeffs().iter().take(show).enumerate() {
        writeln!(out, "psi_{n:<8} {:.12}", c.re)?;
    }
    writeln!(out, "energy      {:.12}", pnes_energy(&coeffs))?;
    writeln!(out, "negativity  {:.12}", pure_negativity(&coeffs))?;
    writeln!(out, "entropy     {:.12} nats ({:.12} bits)", pure_entropy(&coeffs), pure_entropy_bits(&coeffs))?;
    if check {
        let dim = coeffs.len();
        let larger = coeffs_at(spec, dim + CutoffPolicy::default().check_step)?;
        let tol = CutoffPolicy::default().convergence_tol;
        let delta = converged(pure_negativity(&coeffs), pure_negativity(&larger), dim, larger.len(), tol)?
            .max(converged(pnes_energy(&coeffs), pnes_energy(&larger), dim, larger.len(), tol)?);
        writeln!(out, "conv_delta  {delta:e} (D={dim} vs D={})", larger.len())?;
    }
    Ok(())
}

/// The same state built at cutoff `dim` (family states only; custom states are exact).
fn coeffs_at(spec: &str, dim: usize) -> Result<PnesCoefficients> {
    let parsed: StateSpec = spec.parse()?;
    match parsed {
        StateSpec::Custom(_) => resolve(spec),
        _ => {
            let c = resolve(spec)?;
            let family = c.family().kind().expect("family spec resolves to a family state");
            let param = match parsed {
                StateSpec::Param { param, .. } => param,
                StateSpec::Target { target, .. } => {
                    solve_family_param(family, target, FockCutoff::new(SOLVER_CUTOFF)?)?
                }
                StateSpec::Custom(_) => unreachable!(),
            };
            family_member(family, param, FockCutoff::new(dim)?)
        }
    }
}

fn parse_family(s: &str) -> Result<FamilyKind> {
    match s {
        "twb" => Ok(FamilyKind::Twb),
        "pssv" => Ok(FamilyKind::Pssv),
        "psi01" => Ok(FamilyKind::Psi01),
        other => Err(Error::Parse { what: "state family", token: other.into() }),
    }
}

fn cmd_match(out: &mut impl Write, family: &str, kind: &str, value: f64) -> Result<()> {
    let family = parse_family(family)?;
    let kind: MeasureKind = kind.parse()?;
    let target = MatchTarget::new(kind, value)?;
    let param = solve_family_param(family, target, FockCutoff::new(SOLVER_CUTOFF)?)?;
    let key = match family {
        FamilyKind::Twb => "lambda",
        FamilyKind::Pssv => "x",
        FamilyKind::Psi01 => "c1sq",
    };
    writeln!(out, "{key} {param:.12}")?;
    if family == FamilyKind::Twb {
        writeln!(out, "r {:.12}", TwbParams::from_lambda(param)?.r)?;
    }
    let (lo, hi) = family_bracket(family, kind);
    writeln!(out, "bracket [{lo}, {hi}]")?;
    Ok(())
}

fn cmd_evolve(
    out: &mut impl Write,
    spec: &str,
    channel: ChannelArgs,
    t: f64,
    cutoff: Option<usize>,
    check: bool,
) -> Result<()> {
    let coeffs = resolve(spec)?;
    let params = channel.params()?;
    let policy = policy_with(cutoff);
    let (rho, dim) = evolve_pnes_adaptive(&coeffs, &params, t, policy.select(&coeffs, &params, Some(t))?, &policy)?;
    let report = rho.sanity_check(&TolProfile::default());
    let neg = sector_negativity(&rho, NEGATIVITY_THRESHOLD);
    writeln!(out, "cutoff          {}", dim.dim())?;
    writeln!(out, "trace           {:.12}", rho.trace())?;
    writeln!(out, "mean_photons    {:.12}", rho.mean_total_photons())?;
    writeln!(out, "sanity          {}", if report.passed() { "ok" } else { "FAILED" })?;
    writeln!(out, "report          {report:?}")?;
    writeln!(out, "negativity      {:.12e}", neg.value)?;
    writeln!(out, "min_eigenvalue  {:.12e}", neg.min_eigenvalue)?;
    if check {
        let larger = policy.bumped(dim);
        let rho2 = evolve_pnes_sectors(&coeffs, &params, t, larger, &policy)?;
        let delta = converged(
            neg.value,
            sector_negativity(&rho2, NEGATIVITY_THRESHOLD).value,
            dim.dim(),
            larger.dim(),
            policy.convergence_tol,
        )?;
        writeln!(out, "conv_delta      {delta:e} (D={} vs D={})", dim.dim(), larger.dim())?;
    }
    if !report.passed() {
        return Err(Error::InvalidParameter(format!("evolved state fails sanity check: {report:?}")));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_tg(
    out: &mut impl Write,
    r: Option<f64>,
    state: Option<&str>,
    match_kind: &str,
    measure: &str,
    channel: ChannelArgs,
    separation: bool,
    cutoff: Option<usize>,
    check: bool,
) -> Result<()> {
    let params = channel.params()?;
    let coeffs = state.map(resolve).transpose()?;
    let r = match (r, &coeffs) {
        (Some(r), _) => TwbParams::from_r(r)?.r,
        (None, Some(c)) => {
            let target = match match_kind {
                "energy" => MatchTarget::new(MeasureKind::Energy, pnes_energy(c))?,
                "entanglement" => {
                    let kind: MeasureKind = measure.parse()?;
                    MatchTarget::new(kind, kind.evaluate(c))?
                }
                other => return Err(Error::Parse { what: "match kind", token: other.into() }),
            };
            TwbParams::matching(target)?.r
        }
        (None, None) => unreachable!("clap requires --r or --state"),
    };
    let t_g = t_g_closed(r, &params);
    if state.is_some() {
        writeln!(out, "r_matched {r:.12}")?;
    }
    writeln!(out, "t_g {t_g:.12}")?;
    if t_g.is_finite() {
        let ng = gaussian_negativity(&evolve_cm(&twb_cm(r), &params, t_g))?;
        writeln!(out, "n_g_at_t_g {ng:.3e}")?;
    }
    if let (true, Some(c)) = (separation, &coeffs) {
        let opts = SeparationOptions {
            policy: policy_with(cutoff),
            cutoff: cutoff.map(FockCutoff::new).transpose()?,
            ..Default::default()
        };
        let sep = separation_time(c, &params, &opts)?;
        writeln!(out, "t_sep {:.12}", sep.time)?;
        writeln!(out, "t_sep_cutoff {}", sep.cutoff)?;
        if let Some(n) = sep.negativity_at_t_max {
            writeln!(out, "negativity_at_t_max {n:e}")?;
        }
        if check && sep.time.is_finite() {
            let larger = opts.policy.bumped(FockCutoff::new(sep.cutoff)?);
            let sep2 = separation_time(c, &params, &SeparationOptions { cutoff: Some(larger), ..opts })?;
            let delta = converged(sep.time, sep2.time, sep.cutoff, larger.dim(), 1e-6)?;
            writeln!(out, "conv_delta {delta:e} (D={} vs D={})", sep.cutoff, larger.dim())?;
        }
    }
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned + Default>(path: Option<&PathBuf>) -> Result<T> {
    match path {
        Some(p) => Ok(serde_json::from_str(&fs::read_to_string(p)?)?),
        None => Ok(T::default()),
    }
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Parse { what: "B/A grid", token: t.trim().into() }))
        .collect()
}

/// List failed points on stderr; true when every point succeeded.
fn report_failures(records: &[SweepRecord]) -> bool {
    let mut ok = true;
    for r in records {
        if let Err(reason) = &r.outcome {
            eprintln!("B/A={} {}: {reason}", r.b_over_a, r.match_kind);
            ok = false;
        }
    }
    ok
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    out: &mut impl Write,
    config: Option<&PathBuf>,
    state: Option<String>,
    match_kind: Option<String>,
    grid: Option<String>,
    measure: Option<String>,
    out_path: Option<PathBuf>,
    cutoff: Option<usize>,
    check: bool,
) -> Result<bool> {
    let mut cfg: SweepConfig = read_json(config)?;
    if let Some(s) = state {
        cfg.state = s;
    }
    if let Some(m) = match_kind {
        cfg.match_kind = m.parse::<MatchSelection>()?;
    }
    if let Some(g) = grid {
        cfg.b_over_a = parse_grid(&g)?;
    }
    if let Some(m) = measure {
        cfg.entanglement_measure = m.parse()?;
    }
    if out_path.is_some() {
        cfg.output = out_path;
    }
    if cutoff.is_some() {
        cfg.cutoff.fixed = cutoff;
    }
    cfg.check |= check;
    // resolve the state up front so malformed specs are usage errors
    cfg.state.parse::<StateSpec>()?;
    let records = run_sweep(&cfg)?;
    match &cfg.output {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            write_csv(BufWriter::new(fs::File::create(p)?), &records)?;
            writeln!(out, "wrote {}", p.display())?;
        }
        None => write_csv(&mut *out, &records)?,
    }
    Ok(report_failures(&records))
}

fn cmd_fig1(
    out: &mut impl Write,
    dir: &Path,
    config: Option<&PathBuf>,
    no_svg: bool,
    no_check: bool,
    cutoff: Option<usize>,
) -> Result<bool> {
    let mut cfg: Fig1Config = read_json(config)?;
    if cutoff.is_some() {
        cfg.cutoff.fixed = cutoff;
    }
    if no_check {
        cfg.check = false;
    }
    let series = fig1(&cfg)?;
    for path in write_fig1(dir, &series, !no_svg)? {
        writeln!(out, "wrote {}", path.display())?;
    }
    let mut ok = true;
    for s in &series {
        let energy = s.records.iter().filter(|r| r.match_kind == MatchKind::Energy);
        let max_ratio = energy.filter_map(|r| r.point().and_then(|p| p.ratio_rg)).fold(0.0, f64::max);
        writeln!(out, "{:<18} max N_R/N_G (energy matched) {max_ratio:.3e}", s.spec.id)?;
        ok &= report_failures(&s.records);
    }
    Ok(ok)
}

fn run(cli: Cli) -> Result<bool> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::State { spec, show } => cmd_state(&mut out, &spec, show, cli.check)?,
        Command::Match { family, kind, value } => cmd_match(&mut out, &family, &kind, value)?,
        Command::Evolve { spec, channel, t, cutoff } => cmd_evolve(&mut out, &spec, channel, t, cutoff, cli.check)?,
        Command::Tg { r, state, match_kind, measure, channel, separation, cutoff } => {
            cmd_tg(&mut out, r, state.as_deref(), &match_kind, &measure, channel, separation, cutoff, cli.check)?
        }
        Command::Sweep { config, state, match_kind, grid, measure, out: path, cutoff } => {
            return cmd_sweep(&mut out, config.as_ref(), state, match_kind, grid, measure, path, cutoff, cli.check)
        }
        Command::Fig1 { out: dir, config, no_svg, no_check, cutoff } => {
            return cmd_fig1(&mut out, &dir, config.as_ref(), no_svg, no_check, cutoff)
        }
        Command::Thermal { freq, temp } => writeln!(out, "n_t {:.12}", thermal_occupation(freq, temp)?)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        // per-point failures were written to the CSV and listed on stderr
        Ok(false) => ExitCode::from(2),
        // stdout closed early, e.g. piped into `head`
        Err(Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical_policy() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
