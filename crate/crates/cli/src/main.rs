use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{CommandFactory, Parser, Subcommand};
use serde::Serialize;

use nitride_rts::materials::BinaryTable;
use nitride_rts::observables::{detection_energy, geometry_scan, ScanRow, TransitionTable};
use nitride_rts::potential::{Grid, Method, PotentialComponents};
use nitride_rts::scf::{run_scf, SCFResult};

mod config;

use config::{RunConfig, MATERIALS_ENV};

const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "nitride-rts", version, about = "Self-consistent states of nitride resonance-tunneling structures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Run configuration (TOML).
    config: PathBuf,
    #[arg(long, value_parser = ["full", "no_xc", "field_only"])]
    method: Option<String>,
    /// Material table replacing the built-in one.
    #[arg(long, env = MATERIALS_ENV)]
    materials: Option<PathBuf>,
    /// Directory for the output files.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one structure to self-consistency.
    Solve {
        #[command(flatten)]
        common: Common,
    },
    /// Solve the cascade over a range of input-well widths.
    Scan {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        d_min: Option<f64>,
        #[arg(long)]
        d_max: Option<f64>,
        #[arg(long)]
        d_step: Option<f64>,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Write the field-only potential components without solving.
    Profile {
        #[command(flatten)]
        common: Common,
    },
}

fn resolve(common: &Common) -> Result<(RunConfig, BinaryTable)> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(m) = &common.method {
        cfg.scf.method = match m.as_str() {
            "full" => Method::Full,
            "no_xc" => Method::NoXc,
            _ => Method::FieldOnly,
        };
    }
    if let Some(m) = &common.materials {
        cfg.materials = Some(m.clone());
    }
    if let Some(o) = &common.output_dir {
        cfg.output_dir = o.clone();
    }
    cfg.validate()?;
    let table = cfg.material_table()?;
    Ok((cfg, table))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))
}

#[derive(Serialize)]
struct Summary {
    method: &'static str,
    converged: bool,
    iterations: usize,
    bound_states: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    omega13_mev: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fermi_level_mev: Option<f64>,
}

#[derive(Serialize)]
struct Spectrum {
    energies_mev: Vec<f64>,
    /// Row n, column k holds f_{n k}.
    oscillator_strengths: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct Convergence {
    delta: Vec<f64>,
}

#[derive(Serialize)]
struct Results<'a> {
    summary: Summary,
    spectrum: Spectrum,
    convergence: Convergence,
    config: &'a RunConfig,
    materials: &'a BinaryTable,
}

fn results_text(cfg: &RunConfig, table: &BinaryTable, r: &SCFResult, t: &TransitionTable) -> String {
    let res = Results {
        summary: Summary {
            method: cfg.scf.method.as_str(),
            converged: r.converged,
            iterations: r.iterations_used,
            bound_states: t.len(),
            omega13_mev: detection_energy(t).ok().map(|x| x * 1e3),
            fermi_level_mev: r.fermi_level.map(|x| x * 1e3),
        },
        spectrum: Spectrum {
            energies_mev: t.energies.iter().map(|e| e * 1e3).collect(),
            oscillator_strengths: t.f.clone(),
        },
        convergence: Convergence { delta: r.delta_history.clone() },
        config: cfg,
        materials: table,
    };
    let body = toml::to_string(&res).expect("results serialize");
    format!("# nitride-rts {} results\n\n{body}", env!("CARGO_PKG_VERSION"))
}

fn wavefunction_csv(r: &SCFResult) -> String {
    let pot = &r.linearized;
    let h = 0.005;
    let (a, b) = (pot.start() - 1.0, pot.end() + 1.0);
    let n = ((b - a) / h).round() as usize;
    let mut s = String::from("z_nm");
    for i in 0..r.states.len() {
        write!(s, ",psi_{}", i + 1).unwrap();
    }
    s.push('\n');
    for k in 0..=n {
        let z = a + k as f64 * h;
        write!(s, "{z:.6}").unwrap();
        for st in &r.states {
            write!(s, ",{:.9}", st.psi(z)).unwrap();
        }
        s.push('\n');
    }
    s
}

fn convergence_csv(r: &SCFResult) -> String {
    let mut s = String::from("iteration,delta\n");
    for (i, d) in r.delta_history.iter().enumerate() {
        writeln!(s, "{},{d:.9e}", i + 1).unwrap();
    }
    s
}

fn scan_csv(rows: &[ScanRow]) -> String {
    let mut s = String::from("d_nm,E1_meV,E2_meV,E3_meV,E4_meV,E5_meV,f12,f13,f14,f15,cond_325,cond_326\n");
    for r in rows {
        write!(s, "{:.4}", r.d).unwrap();
        for k in 0..5 {
            match r.energies.get(k) {
                Some(e) => write!(s, ",{:.4}", e * 1e3).unwrap(),
                None => s.push(','),
            }
        }
        for k in 0..4 {
            match r.f1.get(k) {
                Some(f) => write!(s, ",{:.6}", f.abs()).unwrap(),
                None => s.push(','),
            }
        }
        writeln!(s, ",{},{}", r.cond_325, r.cond_326).unwrap();
    }
    s
}

fn solve(common: &Common) -> Result<bool> {
    let (cfg, table) = resolve(common)?;
    let setup = cfg.setup(&table)?;
    let r = run_scf(&setup, &cfg.charge, &cfg.scf)?;
    let t = TransitionTable::new(&r.states, cfg.oscillator_form);
    std::fs::create_dir_all(&cfg.output_dir)
        .with_context(|| format!("cannot create {}", cfg.output_dir.display()))?;
    write(&cfg.output_dir, "results.toml", &results_text(&cfg, &table, &r, &t))?;
    write(&cfg.output_dir, "potential.csv", &r.potential.to_csv())?;
    write(&cfg.output_dir, "wavefunctions.csv", &wavefunction_csv(&r))?;
    write(&cfg.output_dir, "convergence.csv", &convergence_csv(&r))?;
    let energies: Vec<String> = t.energies.iter().map(|e| format!("{:.1}", e * 1e3)).collect();
    println!("E_n (meV): {}", energies.join(" "));
    if let Ok(w) = detection_energy(&t) {
        println!("Omega_13 = {:.1} meV", w * 1e3);
    }
    println!("iterations: {}, converged: {}", r.iterations_used, r.converged);
    if !r.converged {
        eprintln!(
            "warning: not converged after {} iterations (delta = {:e})",
            r.iterations_used,
            r.delta_history.last().copied().unwrap_or(f64::NAN)
        );
    }
    Ok(r.converged)
}

fn scan(common: &Common, d_min: Option<f64>, d_max: Option<f64>, d_step: Option<f64>, jobs: usize) -> Result<bool> {
    let (mut cfg, table) = resolve(common)?;
    cfg.scan.d_min = d_min.unwrap_or(cfg.scan.d_min);
    cfg.scan.d_max = d_max.unwrap_or(cfg.scan.d_max);
    cfg.scan.d_step = d_step.unwrap_or(cfg.scan.d_step);
    let sc = cfg.scan.clone();
    if !(sc.d_step > 0.0) || !(sc.d_max >= sc.d_min) {
        Cli::command()
            .error(
                clap::error::ErrorKind::ValueValidation,
                format!("empty scan range: d from {} to {} nm in steps of {} nm", sc.d_min, sc.d_max, sc.d_step),
            )
            .exit();
    }
    let settings = cfg.scan_settings(&table)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    let rows = pool.install(|| geometry_scan(sc.d_min, sc.d_max, sc.d_step, &settings))?;
    std::fs::create_dir_all(&cfg.output_dir)
        .with_context(|| format!("cannot create {}", cfg.output_dir.display()))?;
    write(&cfg.output_dir, "scan.csv", &scan_csv(&rows))?;
    write(&cfg.output_dir, "scan_config.toml", &cfg.to_toml())?;
    let mut ok = true;
    for r in &rows {
        if let Some(e) = &r.error {
            eprintln!("d = {:.4} nm: {e}", r.d);
            ok = false;
        } else if !r.converged {
            eprintln!("d = {:.4} nm: not converged", r.d);
            ok = false;
        }
    }
    println!("{} rows written to {}", rows.len(), cfg.output_dir.join("scan.csv").display());
    Ok(ok)
}

fn profile(common: &Common) -> Result<()> {
    let (cfg, table) = resolve(common)?;
    let setup = cfg.setup(&table)?;
    let comps = PotentialComponents::field_only(
        &setup.stack,
        &setup.offsets()?,
        &setup.fields()?,
        setup.construction,
        Grid::new(&setup.stack, cfg.scf.grid_per_layer),
    );
    std::fs::create_dir_all(&cfg.output_dir)
        .with_context(|| format!("cannot create {}", cfg.output_dir.display()))?;
    write(&cfg.output_dir, "potential.csv", &comps.to_csv())?;
    write(&cfg.output_dir, "profile_config.toml", &cfg.to_toml())?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Solve { common } => solve(common),
        Command::Scan { common, d_min, d_max, d_step, jobs } => scan(common, *d_min, *d_max, *d_step, *jobs),
        Command::Profile { common } => profile(common).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_NOT_CONVERGED),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
