//! Command-line front end: constellation generation and validation,
//! discrete symbols and dual kernels, star products, state reconstruction
//! and continuous-symbol grids for plotting.
//!
//! Exit codes: 0 success, 2 invalid input, 3 degenerate or numerically
//! singular constellation.

mod scalar;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use moyal_spin::angular::{Direction, SpinJ};
use moyal_spin::constellation::{
    free_cones, nested_cones, random_constellation, spiral, validate, ConeSpec, Constellation,
    ConstellationJson, ValidityReport,
};
use moyal_spin::continuous::{
    continuous_symbol, dual_coeffs, selfdual_coeffs, EpsilonSigns, GammaWeights, KernelSide,
};
use moyal_spin::discrete::{
    discrete_symbol, dual_kernel, dual_kernel_via_factorization, dual_kernel_via_vandermonde,
    star_product_threaded, KernelPair, Symbol, SymbolVariant,
};
use moyal_spin::opalg::{Operator, OperatorJson};
use moyal_spin::tomography::{density_diagnostics, project_to_density, reconstruct};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "moyal-spin",
    version,
    about = "Discrete Moyal-type phase-space representations for a quantum spin"
)]
struct Cli {
    /// Worker threads for per-point computations; the env var
    /// MOYAL_SPIN_THREADS overrides this flag.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a constellation file and print its validity report.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Validate a constellation file.
    Validate {
        /// Constellation JSON path.
        constellation: PathBuf,
    },
    /// Discrete symbol of an operator on a constellation.
    Symbol(SymbolArgs),
    /// Dual kernel of a constellation, exported with a manifest.
    Dual(DualArgs),
    /// Reconstruct a density matrix from projection probabilities.
    Reconstruct(ReconstructArgs),
    /// Star product of two lower symbols.
    Star(StarArgs),
    /// Continuous symbol values on a theta-phi grid.
    Wigner(WignerArgs),
}

#[derive(Subcommand)]
enum GenKind {
    /// Uniformly random points from a seeded generator.
    Random {
        #[arg(long)]
        two_s: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also export the points as a theta,phi CSV.
        #[arg(long)]
        polar_csv: Option<PathBuf>,
    },
    /// Nested cones about the z axis (angles and offsets in degrees).
    Nested {
        #[arg(long)]
        two_s: u32,
        /// Comma-separated opening angles in degrees, one per cone.
        #[arg(long)]
        angles: String,
        /// Comma-separated meridian offsets in degrees, one per cone.
        #[arg(long)]
        offsets: String,
        #[arg(long)]
        out: PathBuf,
        /// Also export the points as a theta,phi CSV.
        #[arg(long)]
        polar_csv: Option<PathBuf>,
    },
    /// Freely oriented cones: repeat --cone "x,y,z:angle:count:offset"
    /// (angle and offset in degrees).
    Free {
        #[arg(long)]
        two_s: u32,
        #[arg(long = "cone", required = true)]
        cones: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        /// Also export the points as a theta,phi CSV.
        #[arg(long)]
        polar_csv: Option<PathBuf>,
    },
    /// Spiral constellation from a stereographic seed z0.
    Spiral {
        #[arg(long)]
        two_s: u32,
        /// Complex seed, polar "0.8@36deg" or cartesian "0.5+0.3i".
        #[arg(long)]
        z0: String,
        #[arg(long)]
        out: PathBuf,
        /// Also export the points as a theta,phi CSV.
        #[arg(long)]
        polar_csv: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SymbolArgs {
    #[arg(long)]
    constellation: PathBuf,
    #[arg(long)]
    operator: PathBuf,
    #[arg(long, value_enum, default_value_t = VariantArg::Lower)]
    variant: VariantArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Lower,
    Upper,
}

#[derive(Args)]
struct DualArgs {
    #[arg(long)]
    constellation: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Solve)]
    method: MethodArg,
    /// Spiral seed; required (and checked against the constellation) for
    /// the vandermonde method.
    #[arg(long)]
    z0: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    /// Pivoted solve on the Gram matrix (canonical).
    Solve,
    /// Inversion of the factorized kernel matrix D1 N D2.
    Factorization,
    /// Closed-form Vandermonde inverse (spiral constellations).
    Vandermonde,
}

#[derive(Args)]
struct ReconstructArgs {
    #[arg(long)]
    constellation: PathBuf,
    /// CSV of probabilities with header "nu,p" (or "nu,value").
    #[arg(long)]
    probabilities: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Project the estimate onto the nearest density matrix (eigenvalue
    /// clipping and renormalization); post-processing, off by default.
    #[arg(long)]
    project: bool,
}

#[derive(Args)]
struct StarArgs {
    #[arg(long)]
    constellation: PathBuf,
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct WignerArgs {
    #[arg(long)]
    operator: PathBuf,
    #[arg(long, default_value_t = 37)]
    theta_steps: usize,
    #[arg(long, default_value_t = 72)]
    phi_steps: usize,
    /// Which symbol to evaluate: the self-dual Wigner symbol, the
    /// coherent-state Q-symbol, or the P-symbol.
    #[arg(long, value_enum, default_value_t = SideArg::Wigner)]
    side: SideArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    Wigner,
    Q,
    P,
}

/// Failure modes mapped onto process exit codes.
#[derive(Debug)]
enum CliError {
    /// Exit code 2.
    Invalid(String),
    /// Exit code 3.
    Degenerate(String),
}

impl From<moyal_spin::Error> for CliError {
    fn from(e: moyal_spin::Error) -> Self {
        use moyal_spin::Error::*;
        match e {
            SingularMatrix { .. } | DegenerateConstellation(_) | ChartBreakdown { .. } => {
                CliError::Degenerate(e.to_string())
            }
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Invalid(format!("JSON parse error: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = resolve_threads(cli.threads);
    match run(cli.command, threads) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Degenerate(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn resolve_threads(flag: Option<usize>) -> usize {
    if let Ok(value) = std::env::var("MOYAL_SPIN_THREADS") {
        if let Ok(parsed) = value.parse::<usize>() {
            return parsed.max(1);
        }
    }
    flag.unwrap_or(1).max(1)
}

fn run(command: Command, threads: usize) -> Result<(), CliError> {
    match command {
        Command::Gen { kind } => run_gen(kind),
        Command::Validate { constellation } => {
            let c = load_constellation(&constellation)?;
            let report = validate(&c);
            print_report(&report)?;
            if report.allowed {
                Ok(())
            } else {
                Err(CliError::Degenerate(
                    "constellation is forbidden (projectors linearly dependent)".into(),
                ))
            }
        }
        Command::Symbol(args) => run_symbol(args),
        Command::Dual(args) => run_dual(args),
        Command::Reconstruct(args) => run_reconstruct(args),
        Command::Star(args) => run_star(args, threads),
        Command::Wigner(args) => run_wigner(args),
    }
}

fn run_gen(kind: GenKind) -> Result<(), CliError> {
    let (constellation, out, polar_csv) = match kind {
        GenKind::Random {
            two_s,
            seed,
            out,
            polar_csv,
        } => {
            let s = SpinJ::from_two_s(two_s)?;
            (random_constellation(s, seed), out, polar_csv)
        }
        GenKind::Nested {
            two_s,
            angles,
            offsets,
            out,
            polar_csv,
        } => {
            let s = SpinJ::from_two_s(two_s)?;
            let angles = parse_degree_list(&angles)?;
            let offsets = parse_degree_list(&offsets)?;
            (nested_cones(s, &angles, &offsets)?, out, polar_csv)
        }
        GenKind::Free {
            two_s,
            cones,
            out,
            polar_csv,
        } => {
            let s = SpinJ::from_two_s(two_s)?;
            let specs = cones
                .iter()
                .map(|text| parse_cone_spec(text))
                .collect::<Result<Vec<_>, _>>()?;
            (free_cones(s, &specs)?, out, polar_csv)
        }
        GenKind::Spiral {
            two_s,
            z0,
            out,
            polar_csv,
        } => {
            let s = SpinJ::from_two_s(two_s)?;
            let z0 = scalar::parse_complex(&z0).map_err(CliError::Invalid)?;
            (spiral(s, z0)?, out, polar_csv)
        }
    };
    write_constellation(&constellation, &out)?;
    if let Some(path) = polar_csv {
        let header = format!(
            "# moyal-spin {VERSION} two_s={}\n",
            constellation.s().two_s()
        );
        fs::write(&path, header + &constellation.to_polar_csv())?;
    }
    let report = validate(&constellation);
    print_report(&report)?;
    if report.allowed {
        Ok(())
    } else {
        Err(CliError::Degenerate(format!(
            "generated constellation is forbidden (|det y|_rel = {:.3e})",
            report.det_y_rel
        )))
    }
}

fn run_symbol(args: SymbolArgs) -> Result<(), CliError> {
    let c = load_constellation(&args.constellation)?;
    let op = load_operator(&args.operator)?;
    if op.s() != c.s() {
        return Err(CliError::Invalid(format!(
            "operator spin 2s = {} does not match constellation 2s = {}",
            op.s().two_s(),
            c.s().two_s()
        )));
    }
    let kp = dual_kernel(&c)?;
    let variant = match args.variant {
        VariantArg::Lower => SymbolVariant::Lower,
        VariantArg::Upper => SymbolVariant::Upper,
    };
    let symbol = discrete_symbol(&op, &kp, variant)?;
    write_symbol_csv(&symbol, &args.out)?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct KernelManifest {
    tool_version: String,
    two_s: u32,
    method: String,
    constellation_file: String,
    constellation_sha256: String,
    gram_condition: f64,
    q_ops: Vec<OperatorJson>,
    dual_ops: Vec<OperatorJson>,
}

fn run_dual(args: DualArgs) -> Result<(), CliError> {
    let c = load_constellation(&args.constellation)?;
    let (kp, method): (KernelPair, &str) = match args.method {
        MethodArg::Solve => (dual_kernel(&c)?, "solve"),
        MethodArg::Factorization => (dual_kernel_via_factorization(&c)?, "factorization"),
        MethodArg::Vandermonde => {
            let z0_text = args
                .z0
                .as_deref()
                .ok_or_else(|| CliError::Invalid("--method vandermonde requires --z0".into()))?;
            let z0 = scalar::parse_complex(z0_text).map_err(CliError::Invalid)?;
            let reference = spiral(c.s(), z0)?;
            let max_dev = reference
                .points()
                .iter()
                .zip(c.points())
                .map(|(a, b)| {
                    (a.x() - b.x())
                        .abs()
                        .max((a.y() - b.y()).abs())
                        .max((a.z() - b.z()).abs())
                })
                .fold(0.0, f64::max);
            if max_dev > 1e-9 {
                return Err(CliError::Invalid(format!(
                    "constellation does not match the spiral generated by z0 (max deviation {max_dev:.3e})"
                )));
            }
            (dual_kernel_via_vandermonde(c.s(), z0)?, "vandermonde")
        }
    };

    let bytes = fs::read(&args.constellation)?;
    let digest = Sha256::digest(&bytes);
    let sha_hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    let manifest = KernelManifest {
        tool_version: VERSION.to_string(),
        two_s: c.s().two_s(),
        method: method.to_string(),
        constellation_file: args.constellation.display().to_string(),
        constellation_sha256: sha_hex,
        gram_condition: kp.gram_condition(),
        q_ops: kp.q_ops().iter().map(Operator::to_json).collect(),
        dual_ops: kp.dual_ops().iter().map(Operator::to_json).collect(),
    };
    fs::write(&args.out, serde_json::to_string_pretty(&manifest)? + "\n")?;
    emit(&format!(
        "wrote kernel pair ({} operators each side), gram condition {:.3e}",
        manifest.q_ops.len(),
        manifest.gram_condition
    ))
}

fn run_reconstruct(args: ReconstructArgs) -> Result<(), CliError> {
    let c = load_constellation(&args.constellation)?;
    let text = fs::read_to_string(&args.probabilities)?;
    let p = parse_probability_csv(c.s(), &text)?;
    let kp = dual_kernel(&c)?;
    let mut rho = reconstruct(&p, &kp)?;
    let diag = density_diagnostics(&rho);
    if !diag.is_density {
        eprintln!(
            "warning: reconstruction is not a density matrix (trace defect {:.3e}, min eigenvalue {:.3e})",
            diag.trace_defect, diag.min_eigenvalue
        );
    }
    if args.project {
        rho = project_to_density(&rho)?;
    }
    let mut json = rho.to_json();
    json.tool_version = Some(VERSION.to_string());
    fs::write(&args.out, serde_json::to_string_pretty(&json)? + "\n")?;
    Ok(())
}

fn run_star(args: StarArgs, threads: usize) -> Result<(), CliError> {
    let c = load_constellation(&args.constellation)?;
    let a = Symbol::from_csv(c.s(), &fs::read_to_string(&args.a)?)?;
    let b = Symbol::from_csv(c.s(), &fs::read_to_string(&args.b)?)?;
    let kp = dual_kernel(&c)?;
    let out = star_product_threaded(&a, &b, &kp, threads)?;
    write_symbol_csv(&out, &args.out)?;
    Ok(())
}

fn run_wigner(args: WignerArgs) -> Result<(), CliError> {
    if args.theta_steps < 2 || args.phi_steps < 1 {
        return Err(CliError::Invalid(
            "wigner grid needs at least 2 theta steps and 1 phi step".into(),
        ));
    }
    let op = load_operator(&args.operator)?;
    let s = op.s();
    let (coeffs, side, label) = match args.side {
        SideArg::Wigner => (
            selfdual_coeffs(s, &EpsilonSigns::all_plus(s)),
            KernelSide::Lower,
            "wigner",
        ),
        SideArg::Q => (
            dual_coeffs(s, &GammaWeights::pq_choice(s)),
            KernelSide::Lower,
            "q",
        ),
        SideArg::P => (
            dual_coeffs(s, &GammaWeights::pq_choice(s)),
            KernelSide::Upper,
            "p",
        ),
    };
    let mut out = format!(
        "# moyal-spin {VERSION} two_s={} side={label}\ntheta,phi,value\n",
        s.two_s()
    );
    for i in 0..args.theta_steps {
        let theta = std::f64::consts::PI * i as f64 / (args.theta_steps - 1) as f64;
        for j in 0..args.phi_steps {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / args.phi_steps as f64;
            let n = Direction::from_polar(theta, phi);
            let value = continuous_symbol(&op, &n, &coeffs, side)?;
            if value.im.abs() > 1e-9 * (1.0 + value.re.abs()) {
                out.push_str(&format!(
                    "{theta:.12},{phi:.12},{:.17e}{:+.17e}i\n",
                    value.re, value.im
                ));
            } else {
                out.push_str(&format!("{theta:.12},{phi:.12},{:.17e}\n", value.re));
            }
        }
    }
    fs::write(&args.out, out)?;
    Ok(())
}

fn load_constellation(path: &Path) -> Result<Constellation, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", path.display())))?;
    let json: ConstellationJson = serde_json::from_str(&text)?;
    Ok(Constellation::from_json(&json)?)
}

fn write_constellation(c: &Constellation, path: &Path) -> Result<(), CliError> {
    let mut json = c.to_json();
    json.tool_version = Some(VERSION.to_string());
    fs::write(path, serde_json::to_string_pretty(&json)? + "\n")?;
    Ok(())
}

fn load_operator(path: &Path) -> Result<Operator, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", path.display())))?;
    let json: OperatorJson = serde_json::from_str(&text)?;
    Ok(Operator::from_json(&json)?)
}

fn write_symbol_csv(symbol: &Symbol, path: &Path) -> Result<(), CliError> {
    let header = format!("# moyal-spin {VERSION} two_s={}\n", symbol.s().two_s());
    fs::write(path, header + &symbol.to_csv())?;
    Ok(())
}

fn print_report(report: &ValidityReport) -> Result<(), CliError> {
    emit(&serde_json::to_string_pretty(report)?)
}

/// Writes a line to stdout, treating a closed pipe (e.g. `| head`) as
/// success instead of panicking.
fn emit(text: &str) -> Result<(), CliError> {
    use std::io::Write;
    match writeln!(std::io::stdout(), "{text}") {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        Err(e) => Err(e.into()),
    }
}

fn parse_degree_list(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map(f64::to_radians)
                .map_err(|_| CliError::Invalid(format!("bad angle '{part}'")))
        })
        .collect()
}

/// "x,y,z:angle_deg:count:offset_deg"
fn parse_cone_spec(text: &str) -> Result<ConeSpec, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 4 {
        return Err(CliError::Invalid(format!(
            "cone spec '{text}' must be x,y,z:angle:count:offset"
        )));
    }
    let axis_parts: Vec<&str> = parts[0].split(',').collect();
    if axis_parts.len() != 3 {
        return Err(CliError::Invalid(format!(
            "cone axis '{}' must be x,y,z",
            parts[0]
        )));
    }
    let coord = |i: usize| -> Result<f64, CliError> {
        axis_parts[i]
            .trim()
            .parse()
            .map_err(|_| CliError::Invalid(format!("bad axis component '{}'", axis_parts[i])))
    };
    let axis = Direction::normalized(coord(0)?, coord(1)?, coord(2)?)?;
    let angle: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| CliError::Invalid(format!("bad cone angle '{}'", parts[1])))?;
    let count: usize = parts[2]
        .trim()
        .parse()
        .map_err(|_| CliError::Invalid(format!("bad cone count '{}'", parts[2])))?;
    let offset: f64 = parts[3]
        .trim()
        .parse()
        .map_err(|_| CliError::Invalid(format!("bad cone offset '{}'", parts[3])))?;
    Ok(ConeSpec {
        axis,
        opening_angle: angle.to_radians(),
        count,
        meridian_offset: offset.to_radians(),
    })
}

/// Accepts the headers "nu,p", "nu,value" and "nu,dual_value" (the latter
/// rejected as probabilities), rows "nu,value".
fn parse_probability_csv(s: SpinJ, text: &str) -> Result<Symbol, CliError> {
    let mut values: Vec<Complex64> = Vec::new();
    let mut saw_header = false;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            match line {
                "nu,p" | "nu,value" => {
                    saw_header = true;
                    continue;
                }
                "nu,dual_value" => {
                    return Err(CliError::Invalid(
                        "probabilities must be a lower symbol (header nu,p), got a dual symbol"
                            .into(),
                    ))
                }
                other => {
                    return Err(CliError::Invalid(format!(
                        "unrecognized probability CSV header '{other}'"
                    )))
                }
            }
        }
        let (nu_field, p_field) = line
            .split_once(',')
            .ok_or_else(|| CliError::Invalid(format!("malformed row '{line}'")))?;
        let nu: usize = nu_field
            .trim()
            .parse()
            .map_err(|_| CliError::Invalid(format!("bad nu '{nu_field}'")))?;
        if nu != values.len() + 1 {
            return Err(CliError::Invalid(format!("rows out of order at nu = {nu}")));
        }
        let p: f64 = p_field
            .trim()
            .parse()
            .map_err(|_| CliError::Invalid(format!("bad probability '{p_field}'")))?;
        values.push(Complex64::new(p, 0.0));
    }
    Ok(Symbol::new(s, SymbolVariant::Lower, values)?)
}
