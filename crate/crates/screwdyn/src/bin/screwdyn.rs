//! Batch simulation and conversion front-end.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 numerical failure.

use clap::{Parser, Subcommand, ValueEnum};
use screwdyn::constitutive::field::{CoefficientFields, Field, Grid, MatrixField};
use screwdyn::constitutive::{
    constitutive_apply, constitutive_apply_2d, constitutive_invert, constitutive_invert_2d,
    moduli, BasisTag, ConstitutiveError, Mat2, RheologyCoeffs,
};
use screwdyn::rotation::{EulerAngles, FedorovParam, Quaternion, UnitQuaternion};
use screwdyn::sim::output::{summary_lines, to_csv, to_jsonl};
use screwdyn::sim::{integrate, ScenarioFile, SimError};
use screwdyn::spatial::{Mat3, RotationMatrix, Vec3};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "screwdyn", version, about = "Screw-calculus mechanics engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario config and write the trajectory.
    Simulate {
        /// JSON scenario (or scenario list) file.
        config: PathBuf,
        /// Trajectory output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Convert between rotation representations.
    ConvertRotation {
        #[arg(long = "from", value_enum)]
        from: RotRep,
        #[arg(long = "to", value_enum)]
        to: RotRep,
        /// Comma-separated components (3 for euler/fedorov, 4 for quat
        /// scalar-first, 9 for matrix row-major).
        #[arg(allow_hyphen_values = true)]
        values: String,
    },
    /// Constitutive-relation operations on CSV matrices and fields.
    Constitutive {
        /// r0,r1,r2,r3
        #[arg(long)]
        coeffs: String,
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, value_enum, default_value_t = BasisArg::SymAnt)]
        basis: BasisArg,
        #[command(subcommand)]
        op: ConstitutiveOp,
    },
}

#[derive(Subcommand)]
enum ConstitutiveOp {
    /// Stress from a strain (rate) matrix CSV.
    Apply { matrix: PathBuf },
    /// Strain from a stress matrix CSV (correct continua only).
    Invert { matrix: PathBuf },
    /// Young modulus, shear modulus and Poisson ratio.
    Moduli,
    /// Stress divergence of a sampled strain field
    /// (CSV columns x,y,z,u11..u33).
    Div {
        field: PathBuf,
        #[arg(long)]
        h: f64,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RotRep {
    Euler,
    Fedorov,
    Quat,
    Matrix,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BasisArg {
    SymAnt,
    Transpose,
}

impl From<BasisArg> for BasisTag {
    fn from(b: BasisArg) -> BasisTag {
        match b {
            BasisArg::SymAnt => BasisTag::SymAnt,
            BasisArg::Transpose => BasisTag::Transpose,
        }
    }
}

fn main() -> ExitCode {
    // restore conventional Unix pipeline behavior: die quietly on SIGPIPE
    // instead of panicking when a downstream consumer closes stdout
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help/version requests are success, anything else is usage
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

enum CliError {
    Usage(String),
    Numerical(String),
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> CliError {
        match e {
            SimError::Config(_) | SimError::Io(_) => CliError::Usage(e.to_string()),
            SimError::Numerical { .. } | SimError::NonFinite { .. } => {
                CliError::Numerical(e.to_string())
            }
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { config, out, format } => simulate(&config, out.as_deref(), format),
        Command::ConvertRotation { from, to, values } => convert_rotation(from, to, &values),
        Command::Constitutive {
            coeffs,
            dim,
            basis,
            op,
        } => constitutive(&coeffs, dim, basis.into(), op),
    }
}

// ------------------------------------------------------------- simulate

fn simulate(config: &Path, out: Option<&Path>, format: Format) -> Result<(), CliError> {
    let text = std::fs::read_to_string(config)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", config.display())))?;
    let parsed = ScenarioFile::parse(&text).map_err(CliError::from)?;
    match parsed {
        ScenarioFile::Single(s) => {
            let output = integrate(&s).map_err(CliError::from)?;
            let body = render(&output, format);
            match out {
                Some(path) => {
                    std::fs::write(path, body)
                        .map_err(|e| CliError::Usage(format!("cannot write: {e}")))?;
                    print!("{}", summary_lines(&s.name, &output));
                }
                None => {
                    print!("{body}");
                    eprint!("{}", summary_lines(&s.name, &output));
                }
            }
            Ok(())
        }
        ScenarioFile::List(list) => {
            let threads = std::env::var("SCREWDYN_THREADS")
                .ok()
                .and_then(|v| v.parse::<usize>().ok())
                .unwrap_or(1)
                .max(1);
            let results = run_list(&list.scenarios, threads);
            let mut failure: Option<CliError> = None;
            for (scenario, result) in list.scenarios.iter().zip(results) {
                match result {
                    Ok(output) => {
                        if let Some(base) = out {
                            let path = suffixed(base, &scenario.name);
                            std::fs::write(&path, render(&output, format))
                                .map_err(|e| CliError::Usage(format!("cannot write: {e}")))?;
                        }
                        print!("{}", summary_lines(&scenario.name, &output));
                    }
                    Err(e) => {
                        eprintln!("scenario {} failed: {e}", scenario.name);
                        if failure.is_none() {
                            failure = Some(CliError::from(e));
                        }
                    }
                }
            }
            match failure {
                None => Ok(()),
                Some(e) => Err(e),
            }
        }
    }
}

fn render(output: &screwdyn::sim::SimOutput, format: Format) -> String {
    match format {
        Format::Csv => to_csv(output),
        Format::Jsonl => to_jsonl(output),
    }
}

fn suffixed(base: &Path, name: &str) -> PathBuf {
    let stem = base
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ext = base
        .extension()
        .map(|s| format!(".{}", s.to_string_lossy()))
        .unwrap_or_default();
    base.with_file_name(format!("{stem}.{name}{ext}"))
}

fn run_list(
    scenarios: &[screwdyn::sim::Scenario],
    threads: usize,
) -> Vec<Result<screwdyn::sim::SimOutput, SimError>> {
    if threads <= 1 || scenarios.len() <= 1 {
        return scenarios.iter().map(integrate).collect();
    }
    let mut results: Vec<Option<Result<screwdyn::sim::SimOutput, SimError>>> =
        (0..scenarios.len()).map(|_| None).collect();
    let next = std::sync::atomic::AtomicUsize::new(0);
    let results_mx = std::sync::Mutex::new(&mut results);
    std::thread::scope(|scope| {
        for _ in 0..threads.min(scenarios.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= scenarios.len() {
                    break;
                }
                let r = integrate(&scenarios[i]);
                results_mx.lock().unwrap()[i] = Some(r);
            });
        }
    });
    results.into_iter().map(|r| r.unwrap()).collect()
}

// ----------------------------------------------------- convert-rotation

fn parse_numbers(values: &str) -> Result<Vec<f64>, CliError> {
    values
        .split([',', ' '])
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Usage(format!("cannot parse {s:?}: {e}")))
        })
        .collect()
}

fn expect_len(vals: &[f64], n: usize, what: &str) -> Result<(), CliError> {
    if vals.len() != n {
        return Err(CliError::Usage(format!(
            "{what} needs {n} components, got {}",
            vals.len()
        )));
    }
    Ok(())
}

fn convert_rotation(from: RotRep, to: RotRep, values: &str) -> Result<(), CliError> {
    let vals = parse_numbers(values)?;
    let c: RotationMatrix = match from {
        RotRep::Euler => {
            expect_len(&vals, 3, "euler input")?;
            EulerAngles::new(vals[0], vals[1], vals[2]).to_rotation()
        }
        RotRep::Fedorov => {
            expect_len(&vals, 3, "fedorov input")?;
            FedorovParam(Vec3::new(vals[0], vals[1], vals[2])).to_rotation()
        }
        RotRep::Quat => {
            expect_len(&vals, 4, "quaternion input")?;
            let q = Quaternion::new(vals[0], Vec3::new(vals[1], vals[2], vals[3]));
            let norm = q.norm();
            if (norm - 1.0).abs() > 1e-6 {
                return Err(CliError::Usage(format!(
                    "quaternion norm {norm} deviates from 1 by more than 1e-6"
                )));
            }
            if (norm - 1.0).abs() > 1e-12 {
                eprintln!(
                    "warning: renormalizing quaternion (|norm - 1| = {:e})",
                    (norm - 1.0).abs()
                );
            }
            UnitQuaternion::normalize(q)
                .map_err(|e| CliError::Usage(e.to_string()))?
                .to_rotation()
        }
        RotRep::Matrix => {
            expect_len(&vals, 9, "matrix input")?;
            RotationMatrix::new(Mat3::from_row_slice(&vals))
                .map_err(|e| CliError::Usage(e.to_string()))?
        }
    };
    let out: Vec<f64> = match to {
        RotRep::Euler => {
            let e = EulerAngles::from_rotation(&c).map_err(|e| CliError::Usage(e.to_string()))?;
            vec![e.phi, e.theta, e.psi]
        }
        RotRep::Fedorov => {
            let f = FedorovParam::from_rotation(&c).map_err(|e| CliError::Usage(e.to_string()))?;
            vec![f.0.x, f.0.y, f.0.z]
        }
        RotRep::Quat => {
            let q = UnitQuaternion::from_rotation(&c);
            vec![
                q.quaternion().scalar,
                q.quaternion().vector.x,
                q.quaternion().vector.y,
                q.quaternion().vector.z,
            ]
        }
        RotRep::Matrix => {
            let m = c.matrix();
            (0..3).flat_map(|r| (0..3).map(move |col| m[(r, col)])).collect()
        }
    };
    let rendered: Vec<String> = out.iter().map(|v| format!("{v:.16e}")).collect();
    println!("{}", rendered.join(","));
    Ok(())
}

// --------------------------------------------------------- constitutive

fn parse_coeffs(text: &str, basis: BasisTag) -> Result<RheologyCoeffs, CliError> {
    let vals = parse_numbers(text)?;
    expect_len(&vals, 4, "--coeffs")?;
    Ok(RheologyCoeffs::constant(
        vals[0], vals[1], vals[2], vals[3], basis,
    ))
}

fn read_matrix(path: &Path, dim: usize) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut entries = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = parse_numbers(line)?;
        if row.len() != dim {
            return Err(CliError::Usage(format!(
                "expected {dim} columns, got {} in line {line:?}",
                row.len()
            )));
        }
        entries.extend(row);
    }
    if entries.len() != dim * dim {
        return Err(CliError::Usage(format!(
            "expected a {dim}x{dim} matrix, got {} entries",
            entries.len()
        )));
    }
    Ok(entries)
}

fn print_matrix_rows(get: impl Fn(usize, usize) -> f64, dim: usize) {
    for r in 0..dim {
        let row: Vec<String> = (0..dim).map(|c| format!("{:.16e}", get(r, c))).collect();
        println!("{}", row.join(","));
    }
}

fn constitutive(
    coeffs: &str,
    dim: usize,
    basis: BasisTag,
    op: ConstitutiveOp,
) -> Result<(), CliError> {
    if dim != 2 && dim != 3 {
        return Err(CliError::Usage(format!("--dim must be 2 or 3, got {dim}")));
    }
    let r = parse_coeffs(coeffs, basis)?;
    match op {
        ConstitutiveOp::Apply { matrix } => {
            let entries = read_matrix(&matrix, dim)?;
            if dim == 3 {
                let u = Mat3::from_row_slice(&entries);
                let t = constitutive_apply(&r, &u);
                print_matrix_rows(|i, j| t[(i, j)], 3);
            } else {
                let u = Mat2::from_row_slice(&entries);
                let t = constitutive_apply_2d(&r, &u);
                print_matrix_rows(|i, j| t[(i, j)], 2);
            }
            Ok(())
        }
        ConstitutiveOp::Invert { matrix } => {
            let entries = read_matrix(&matrix, dim)?;
            let map_err = |e: ConstitutiveError| {
                CliError::Usage(format!(
                    "{e}; correctness requires (r1·trI + r2)·r2·r3 != 0"
                ))
            };
            if dim == 3 {
                let t = Mat3::from_row_slice(&entries);
                let u = constitutive_invert(&r, &t).map_err(map_err)?;
                print_matrix_rows(|i, j| u[(i, j)], 3);
            } else {
                let t = Mat2::from_row_slice(&entries);
                let u = constitutive_invert_2d(&r, &t).map_err(map_err)?;
                print_matrix_rows(|i, j| u[(i, j)], 2);
            }
            Ok(())
        }
        ConstitutiveOp::Moduli => {
            let m = moduli(&r, dim).map_err(|e| CliError::Usage(e.to_string()))?;
            let residual = m.young - 2.0 * m.shear * (1.0 + m.poisson);
            println!("young={:.16e}", m.young);
            println!("shear={:.16e}", m.shear);
            println!("poisson={:.16e}", m.poisson);
            println!("identity_residual={residual:.3e}");
            if residual.abs() > 1e-12 * m.young.abs().max(1.0) {
                return Err(CliError::Numerical(
                    "moduli identity violated beyond tolerance".into(),
                ));
            }
            Ok(())
        }
        ConstitutiveOp::Div { field, h } => {
            if dim != 3 {
                return Err(CliError::Usage("div requires --dim 3".into()));
            }
            let (grid, u, order) = read_field(&field, h)?;
            let div = screwdyn::constitutive::field::div_stress_field(
                &u,
                &r,
                &CoefficientFields::default(),
            )
            .map_err(|e| CliError::Usage(e.to_string()))?;
            println!("x,y,z,divx,divy,divz");
            for &(i, j, k) in &order {
                let p = grid.point(i, j, k);
                let v = div.data[grid.index(i, j, k)];
                println!(
                    "{},{},{},{:.16e},{:.16e},{:.16e}",
                    p.x, p.y, p.z, v.x, v.y, v.z
                );
            }
            Ok(())
        }
    }
}

type FieldOrder = Vec<(usize, usize, usize)>;

/// Reads a sampled matrix field: header `x,y,z,u11,...,u33`, one lattice
/// point per row in any order; the lattice must be complete with spacing
/// `h`. Returns the grid, the field, and the input row order.
fn read_field(path: &Path, h: f64) -> Result<(Grid, MatrixField, FieldOrder), CliError> {
    if !h.is_finite() || h <= 0.0 {
        return Err(CliError::Usage("--h must be positive".into()));
    }
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut rows: Vec<(Vec3, Mat3)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.starts_with('x')) {
            continue;
        }
        let vals = parse_numbers(line)?;
        if vals.len() != 12 {
            return Err(CliError::Usage(format!(
                "field rows need 12 columns (x,y,z,u11..u33), got {} at line {}",
                vals.len(),
                lineno + 1
            )));
        }
        rows.push((
            Vec3::new(vals[0], vals[1], vals[2]),
            Mat3::from_row_slice(&vals[3..]),
        ));
    }
    if rows.is_empty() {
        return Err(CliError::Usage("field file has no samples".into()));
    }
    let min = rows.iter().fold(rows[0].0, |m, (p, _)| m.inf(p));
    let max = rows.iter().fold(rows[0].0, |m, (p, _)| m.sup(p));
    let counts = (max - min) / h;
    let dims: Vec<usize> = counts.iter().map(|c| c.round() as usize + 1).collect();
    let grid =
        Grid::new(dims[0], dims[1], dims[2], h, min).map_err(|e| CliError::Usage(e.to_string()))?;
    if grid.len() != rows.len() {
        return Err(CliError::Usage(format!(
            "lattice {}x{}x{} expects {} samples, file has {}",
            dims[0],
            dims[1],
            dims[2],
            grid.len(),
            rows.len()
        )));
    }
    let mut data = vec![Mat3::zeros(); grid.len()];
    let mut seen = vec![false; grid.len()];
    let mut order = Vec::with_capacity(rows.len());
    for (p, m) in rows {
        let rel = (p - min) / h;
        let idx: Vec<usize> = rel.iter().map(|c| c.round() as usize).collect();
        for axis in 0..3 {
            if (rel[axis] - idx[axis] as f64).abs() > 1e-6 {
                return Err(CliError::Usage(format!(
                    "sample at ({}, {}, {}) is off-lattice for spacing {h}",
                    p.x, p.y, p.z
                )));
            }
        }
        let flat = grid.index(idx[0], idx[1], idx[2]);
        if seen[flat] {
            return Err(CliError::Usage(format!(
                "duplicate sample at ({}, {}, {})",
                p.x, p.y, p.z
            )));
        }
        seen[flat] = true;
        data[flat] = m;
        order.push((idx[0], idx[1], idx[2]));
    }
    let field = Field::new(grid, data).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok((grid, field, order))
}
