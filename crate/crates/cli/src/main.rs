use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use coarse_forge::config::key_help;
use coarse_forge::{exit_code, run, CliError, Command, ExperimentConfig, RawConfig};

#[derive(Parser)]
#[command(name = "coarse-forge", version, about = "Finite-window checks of quasimorphisms, approximate groups and covers")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Enumerate a ball and its norms.
    Ball,
    /// Observed defect set of a quasimorphism.
    Defect,
    /// Windowed check of Tao's axioms.
    ApproxCheck,
    /// Lipschitz scan, symmetry gap and constant chain.
    Lipschitz,
    /// Fiber containment and kernel absorption.
    Containment,
    /// Kernel set and fiber families.
    Kernel,
    /// Greedy and lattice covers with validation.
    Color,
    /// Color counts on X, Y and the kernel, with the pullback cover.
    Hurewicz,
    /// Defect, lipschitz, containment, kernel and hurewicz in order.
    All,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Ball => Command::Ball,
            Cmd::Defect => Command::Defect,
            Cmd::ApproxCheck => Command::ApproxCheck,
            Cmd::Lipschitz => Command::Lipschitz,
            Cmd::Containment => Command::Containment,
            Cmd::Kernel => Command::Kernel,
            Cmd::Color => Command::Color,
            Cmd::Hurewicz => Command::Hurewicz,
            Cmd::All => Command::All,
        }
    }
}

/// Flags mirror the config keys; values are parsed with the same rules.
#[derive(clap::Args)]
struct Flags {
    /// Flat `key = value` experiment file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, help = key_help("instance"))]
    instance: Option<String>,
    #[arg(long, global = true, help = key_help("group"))]
    group: Option<String>,
    #[arg(long, global = true, help = key_help("qm"))]
    qm: Option<String>,
    #[arg(long, global = true, help = key_help("codomain"))]
    codomain: Option<String>,
    #[arg(long, global = true, help = key_help("approx"))]
    approx: Option<String>,
    #[arg(long, global = true, help = key_help("lambda"))]
    lambda: Option<String>,
    #[arg(long = "F", global = true, help = key_help("F"))]
    witness: Option<String>,
    #[arg(long, global = true, help = key_help("search-radius"))]
    search_radius: Option<String>,
    #[arg(long, visible_alias = "radius", global = true, help = key_help("window"))]
    window: Option<String>,
    #[arg(long, global = true, help = key_help("defect-window"))]
    defect_window: Option<String>,
    #[arg(long, visible_alias = "r", global = true, help = key_help("scales"))]
    scales: Option<String>,
    #[arg(long, global = true, help = key_help("t-values"))]
    t_values: Option<String>,
    #[arg(long, global = true, help = key_help("max-colors"))]
    max_colors: Option<String>,
    #[arg(long = "D", global = true, help = key_help("D"))]
    d: Option<String>,
    #[arg(long, global = true, help = key_help("budget-factor"))]
    budget_factor: Option<String>,
    #[arg(long, global = true, help = key_help("budget"))]
    budget: Option<String>,
    #[arg(long, global = true, help = key_help("seed"))]
    seed: Option<String>,
    #[arg(long, global = true, help = key_help("workers"))]
    workers: Option<String>,
    #[arg(long, global = true, help = key_help("out"))]
    out: Option<String>,
}

impl Flags {
    fn raw(&self) -> Result<RawConfig, CliError> {
        let mut raw = match &self.config {
            Some(p) => RawConfig::load(p)?,
            None => RawConfig::default(),
        };
        let mut flags = RawConfig::default();
        let pairs = [
            ("instance", &self.instance),
            ("group", &self.group),
            ("qm", &self.qm),
            ("codomain", &self.codomain),
            ("approx", &self.approx),
            ("lambda", &self.lambda),
            ("F", &self.witness),
            ("search-radius", &self.search_radius),
            ("window", &self.window),
            ("defect-window", &self.defect_window),
            ("scales", &self.scales),
            ("t-values", &self.t_values),
            ("max-colors", &self.max_colors),
            ("D", &self.d),
            ("budget-factor", &self.budget_factor),
            ("budget", &self.budget),
            ("seed", &self.seed),
            ("workers", &self.workers),
            ("out", &self.out),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                flags.set(k, v.clone())?;
            }
        }
        raw.overlay(flags);
        Ok(raw)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = cli
        .flags
        .raw()
        .and_then(|raw| ExperimentConfig::resolve(cli.command.into(), &raw))
        .and_then(|cfg| run(&cfg).map(|o| (cfg, o)));
    match result {
        Ok((cfg, outcome)) => {
            for (name, pass) in &outcome.sections {
                println!("{name}: {}", if *pass { "pass" } else { "FAIL" });
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if !outcome.pass {
                eprintln!("{}: a property assertion failed; see the reports for witnesses", cfg.command);
            }
            exit_code(&outcome)
        }
        Err(e) => {
            eprintln!("coarse-forge: {e}");
            e.exit_code()
        }
    }
}
