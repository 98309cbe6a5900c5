//! `fdcell`: sum-DoF formulas, achievability LPs, sweeps and numeric
//! verification of the beamforming constructions.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use fdcell::exact::{decimal_string, fraction_string};
use fdcell::formulas::{dof_fd_achievable, dof_fd_upper, dof_hd, dof_no_bs2bs, dof_self_interference, DofValue};
use fdcell::lp::{self, SchemeId};
use fdcell::scheme1::Caps;
use fdcell::scheme2::PlanMode;
use fdcell::sweep::{sweep_rows, write_csv, SweepRange, SweepSpec, SweepVariable};
use fdcell::verify::{construct, verify_construction, RunSpec, SchemeChoice, DEFAULT_REL_TOL};
use fdcell::{Error, NetworkConfig, SelfInterference};

const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_PLANNER: u8 = 4;
const EXIT_SHORTFALL: u8 = 5;

#[derive(Parser)]
#[command(name = "fdcell", version, about = "Degrees of freedom of full-duplex multicell networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print every sum-DoF formula for one configuration.
    Dof {
        #[command(flatten)]
        net: Net,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Write a CSV of all formulas while one parameter varies.
    Sweep {
        /// Parameter to vary: K, M or N.
        #[arg(long = "var")]
        variable: SweepVariable,
        /// Inclusive range start:end[:step].
        #[arg(long)]
        range: SweepRange,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long, default_value_t = 1)]
        n: usize,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve an achievability LP exactly.
    Lp {
        #[arg(long, value_enum)]
        scheme: LpScheme,
        #[command(flatten)]
        net: Net,
    },
    /// Build a construction on random channels and check decodability.
    Verify(VerifyArgs),
}

#[derive(Args, Clone, Copy)]
struct Net {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
}

impl Net {
    fn config(self) -> Result<NetworkConfig, Failure> {
        NetworkConfig::new(self.k, self.m, self.n).map_err(|e| Failure::usage(e.to_string()))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum LpScheme {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    #[value(name = "nobs")]
    NoBs,
}

#[derive(Clone, Copy, ValueEnum)]
enum VerifyScheme {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Paper,
    Conservative,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    scheme: VerifyScheme,
    #[command(flatten)]
    net: Net,
    /// UL exponent cap.
    #[arg(long)]
    t: u32,
    /// DL exponent cap for scheme 1; omit for the UL-only variant.
    #[arg(long)]
    tdl: Option<u32>,
    /// Scheme 2 planning mode.
    #[arg(long, value_enum, default_value_t = ModeArg::Conservative)]
    mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_REL_TOL)]
    rel_tol: f64,
    /// Report file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Residual self-interference at every BS.
    #[arg(long)]
    self_interference: bool,
    /// Replace the monomial UL beams with i.i.d. random beams (scheme 1).
    #[arg(long)]
    random_ul_beams: bool,
    /// Largest exponent set that may be enumerated.
    #[arg(long, env = "FDCELL_ENUM_CAP", default_value_t = Caps::default().enumeration)]
    enum_cap: u64,
    /// Largest time extension the planner may choose.
    #[arg(long, default_value_t = Caps::default().max_d)]
    max_d: u64,
    /// Also write a JSON dump of the beams.
    #[arg(long)]
    dump_beams: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: String) -> Self {
        Self { code: EXIT_USAGE, message }
    }

    fn io(path: &Option<PathBuf>, e: io::Error) -> Self {
        let target = path.as_ref().map_or("stdout".into(), |p| p.display().to_string());
        Self { code: EXIT_IO, message: format!("cannot write {target}: {e}") }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Size { .. } | Error::Feasibility(_) => EXIT_PLANNER,
            _ => EXIT_USAGE,
        };
        Self { code, message: e.to_string() }
    }
}

/// Writes `text` to `path`, or stdout.
fn emit(path: &Option<PathBuf>, write: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), Failure> {
    let result = match path {
        Some(p) => File::create(p).and_then(|f| {
            let mut w = BufWriter::new(f);
            write(&mut w)?;
            w.flush()
        }),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)
        }
    };
    result.map_err(|e| Failure::io(path, e))
}

fn cmd_dof(net: Net, format: Format) -> Result<(), Failure> {
    let c = net.config()?;
    let rows: [(&str, DofValue); 5] = [
        ("fd_achievable", dof_fd_achievable(&c)),
        ("fd_upper", dof_fd_upper(&c)),
        ("hd", dof_hd(&c)),
        ("no_bs2bs", dof_no_bs2bs(&c)),
        ("self_interference", dof_self_interference(&c)),
    ];
    let tight = rows[0].1.value == rows[1].1.value;
    match format {
        Format::Json => {
            let mut obj = json!({ "config": c, "tight": tight });
            for (name, v) in &rows {
                obj[*name] = json!(v);
            }
            println!("{}", serde_json::to_string_pretty(&obj).expect("json"));
        }
        Format::Table => {
            println!("{c}");
            println!("{:<18} {:>12} {:>14}  regime", "quantity", "exact", "decimal");
            for (name, v) in &rows {
                println!("{:<18} {:>12} {:>14}  {}", name, fraction_string(&v.value), decimal_string(&v.value), v.regime.label());
            }
            if tight {
                println!("achievable = upper: tight");
            }
        }
    }
    Ok(())
}

fn cmd_sweep(spec: SweepSpec, out: &Option<PathBuf>) -> Result<(), Failure> {
    let rows = sweep_rows(&spec)?;
    emit(out, |w| write_csv(&rows, w))
}

fn cmd_lp(scheme: LpScheme, net: Net) -> Result<(), Failure> {
    let c = net.config()?;
    let id = match scheme {
        LpScheme::One => SchemeId::Scheme1,
        LpScheme::Two => SchemeId::Scheme2,
        LpScheme::NoBs => SchemeId::NoBs2Bs,
    };
    if c.m >= c.k * c.n {
        return Err(Failure::usage(format!("{c}: M >= KN, HD operation suffices (sum DoF KN = {})", c.k * c.n)));
    }
    let sol = lp::solve(id, &c)?;
    println!("{}", sol.to_json());
    Ok(())
}

fn cmd_verify(a: &VerifyArgs) -> Result<(), Failure> {
    let config = a.net.config()?;
    if a.t == 0 || a.tdl == Some(0) {
        return Err(Failure::usage("--t and --tdl must be positive".into()));
    }
    let scheme = match a.scheme {
        VerifyScheme::One => SchemeChoice::Aligned { tdl: a.tdl },
        VerifyScheme::Two => {
            if a.tdl.is_some() {
                return Err(Failure::usage("--tdl only applies to scheme 1".into()));
            }
            let mode = match a.mode {
                ModeArg::Paper => PlanMode::Paper,
                ModeArg::Conservative => PlanMode::Conservative,
            };
            SchemeChoice::ZeroForcing { mode }
        }
    };
    if !(a.rel_tol > 0.0 && a.rel_tol < 1.0) {
        return Err(Failure::usage(format!("--rel-tol must lie in (0, 1), got {}", a.rel_tol)));
    }
    let spec = RunSpec {
        config,
        scheme,
        t: a.t,
        seed: a.seed,
        rel_tol: a.rel_tol,
        self_interference: if a.self_interference { SelfInterference::Present } else { SelfInterference::Suppressed },
        caps: Caps { enumeration: a.enum_cap, max_d: a.max_d },
        random_ul_beams: a.random_ul_beams,
    };
    let built = construct(&spec)?;
    if a.dump_beams.is_some() {
        let dump = built.beams.debug_dump();
        emit(&a.dump_beams, |w| writeln!(w, "{}", serde_json::to_string_pretty(&dump).expect("json")))?;
    }
    let report = verify_construction(&spec, &built)?;
    emit(&a.out, |w| writeln!(w, "{}", report.to_json()))?;
    if report.all_decoded() {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_SHORTFALL,
            message: format!("decoded {} of {} planned streams", report.total_decodable, report.total_planned),
        })
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Dof { net, format } => cmd_dof(net, format),
        Command::Sweep { variable, range, k, m, n, out } => {
            let base = NetworkConfig::new(k.max(1), m.max(1), n.max(1)).map_err(|e| Failure::usage(e.to_string()))?;
            cmd_sweep(SweepSpec { variable, range, base }, &out)
        }
        Command::Lp { scheme, net } => cmd_lp(scheme, net),
        Command::Verify(args) => cmd_verify(&args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("fdcell: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
