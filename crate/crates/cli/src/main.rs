use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stokes_bgg::report::{self, SuiteOptions, VerificationReport};
use stokes_bgg::{generate_mesh, MeshFamily, PolyMesh};

/// Verification suites for the polytopal Stokes, Hessian and twisted complexes.
#[derive(Parser)]
#[command(name = "stokes-bgg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Counts, Euler characteristic, Betti numbers and regularity.
    MeshInfo(Common),
    /// Complex, anti-commutation, cochain and commutation residuals.
    VerifyComplex(Common),
    /// Cohomology dimensions against the Betti-number predictions.
    Cohomology(Common),
    /// Per-triangle dof counts of the compared complexes.
    DofTable(Common),
    /// Polynomial consistency and convergence-rate studies.
    Consistency(Common),
    /// Poincaré constants across a mesh sequence and transfer certificates.
    Poincare(Common),
    /// Every suite above.
    Report(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Md,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Md => "md",
        }
    }
}

#[derive(Args)]
struct Common {
    /// Mesh file (JSON with `vertices` and counter-clockwise `cells`).
    #[arg(long, conflicts_with = "family")]
    mesh: Option<PathBuf>,
    /// Generated mesh family.
    #[arg(long, default_value = "cartesian")]
    family: String,
    /// Resolution of the generated mesh.
    #[arg(long, default_value_t = 2)]
    n: usize,
    /// Polynomial degree.
    #[arg(short, default_value_t = 0)]
    k: usize,
    /// Relative rank tolerance.
    #[arg(long, default_value_t = stokes_bgg::linalg::RANK_TOL)]
    tol: f64,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Directory receiving `<command>.<format>`; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed of the random fields and probes.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Largest degree of the dof table.
    #[arg(long, default_value_t = 4)]
    kmax: usize,
    /// Mesh family of the rate and Poincaré studies.
    #[arg(long, default_value = "cartesian")]
    study_family: String,
    /// Resolutions of the rate studies.
    #[arg(long, value_delimiter = ',', default_value = "4,8,16")]
    study_n: Vec<usize>,
    /// Resolutions of the Poincaré sweep.
    #[arg(long, value_delimiter = ',', default_value = "2,4,8")]
    poincare_n: Vec<usize>,
    /// Record wall-clock time in the report (breaks byte-identical output).
    #[arg(long)]
    timing: bool,
}

const MAX_K: usize = 4;

fn load_mesh(c: &Common) -> stokes_bgg::Result<(PolyMesh, Option<[usize; 2]>)> {
    match &c.mesh {
        Some(path) => Ok((PolyMesh::load_json(path)?, None)),
        None => {
            let fam = MeshFamily::parse(&c.family)?;
            Ok((generate_mesh(fam, c.n)?, Some(fam.expected_betti())))
        }
    }
}

fn run(name: &str, c: &Common) -> stokes_bgg::Result<VerificationReport> {
    if c.k > MAX_K {
        return Err(stokes_bgg::Error::InvalidArgument(format!("k = {} is outside 0..={MAX_K}", c.k)));
    }
    let opts = SuiteOptions {
        seed: c.seed,
        rank_tol: c.tol,
        study_family: MeshFamily::parse(&c.study_family)?,
        study_n: c.study_n.clone(),
        poincare_n: c.poincare_n.clone(),
        dof_kmax: c.kmax,
        ..Default::default()
    };
    if name == "dof-table" {
        return report::dof_table(c.kmax);
    }
    let (mesh, betti) = load_mesh(c)?;
    match name {
        "mesh-info" => Ok(report::mesh_info(&mesh, betti)),
        "verify-complex" => report::verify_complex(&mesh, c.k, &opts),
        "cohomology" => report::cohomology(&mesh, c.k),
        "consistency" => report::consistency(&mesh, c.k, &opts),
        "poincare" => report::poincare(&mesh, c.k, &opts),
        _ => report::full_report(&mesh, c.k, betti, &opts),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common) = match &cli.command {
        Command::MeshInfo(c) => ("mesh-info", c),
        Command::VerifyComplex(c) => ("verify-complex", c),
        Command::Cohomology(c) => ("cohomology", c),
        Command::DofTable(c) => ("dof-table", c),
        Command::Consistency(c) => ("consistency", c),
        Command::Poincare(c) => ("poincare", c),
        Command::Report(c) => ("report", c),
    };
    let start = Instant::now();
    let mut rep = match run(name, common) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if common.timing {
        rep.elapsed_s = Some(start.elapsed().as_secs_f64());
    }
    let text = match common.format {
        Format::Json => rep.to_json(),
        Format::Csv => rep.to_csv(),
        Format::Md => rep.to_markdown(),
    };
    match &common.out {
        Some(dir) => {
            let path = dir.join(format!("{name}.{}", common.format.extension()));
            if let Err(e) = std::fs::create_dir_all(dir).and_then(|_| std::fs::write(&path, &text)) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
            eprintln!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    let failed = rep.checks.iter().filter(|c| c.status != report::Status::Pass).count();
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        eprintln!("{failed} of {} checks did not pass", rep.checks.len());
        ExitCode::from(1)
    }
}
