use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fracflow::oned;
use fracflow::netflux::{self, conforming_net_flux, embedded_net_flux};
use fracflow::reference::{
    check_resolution, default_reference, reference_solution, solve_conforming, solve_equidim,
};
use fracflow::scenario::{MethodName, ReferenceKind, ReferenceSpec, Scenario};
use fracflow::study::{convergence_study, run_embedded};
use fracflow::tracer::run_tracer;
use fracflow::{HarnessError, Result};
use fracflow_core::grid::Face;
use fracflow_core::ledfm::{mf_problem_for_cell, mm_problem_for_face};
use fracflow_core::vtk;

#[derive(Parser)]
#[command(name = "fracflow", version, about = "Embedded fracture model runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario and write the pressure field.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Pressure CSV (`x,y,kind,pressure`); stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        vtk: Option<PathBuf>,
        /// Net fracture flux CSV.
        #[arg(long)]
        netflux: Option<PathBuf>,
    },
    /// Error study over grid refinements against a fine reference.
    Convergence {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        methods: Vec<MethodName>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![19usize, 37, 73])]
        levels: Vec<usize>,
        /// Reference cells per unit length (overrides the scenario).
        #[arg(long)]
        reference_n: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tracer transport on the steady flow field.
    Tracer {
        #[arg(long)]
        scenario: PathBuf,
        /// Final concentration CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory for `step_XXXX.csv` snapshots.
        #[arg(long)]
        snapshots: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        every: usize,
    },
    /// Analytic 1D pressure profile with a point fracture.
    AppendixA {
        #[arg(long, default_value_t = 0.5)]
        x_f: f64,
        #[arg(long, default_value_t = 1e-4)]
        d: f64,
        #[arg(long, default_value_t = 1.0)]
        k_m: f64,
        #[arg(long, default_value_t = 1e-4)]
        k_f: f64,
        #[arg(long, default_value_t = 0.0)]
        p0: f64,
        #[arg(long, default_value_t = 1.0)]
        p1: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Five-cell pEDFM closed forms and the L1 error map of both variants.
    AppendixC {
        /// Only compare the numeric solves with the closed forms.
        #[arg(long)]
        check: bool,
        #[arg(long, default_value_t = 21)]
        cells: usize,
        #[arg(long, default_value_t = 33)]
        resolution: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one local LEDFM problem and report its transmissibility.
    LocalProbe {
        #[arg(long)]
        scenario: PathBuf,
        /// Cut cell as `i,j`.
        #[arg(long, conflicts_with = "face")]
        cell: Option<String>,
        /// Face as `v:i,j` or `h:i,j`.
        #[arg(long)]
        face: Option<String>,
        #[arg(long)]
        vtk: Option<PathBuf>,
    },
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn pair(s: &str) -> Result<(usize, usize)> {
    let bad = || HarnessError::Validation(format!("expected `i,j`, got `{s}`"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    Ok((
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    ))
}

fn field_csv(points: impl Iterator<Item = (f64, f64, &'static str, f64)>) -> String {
    let mut out = String::from("x,y,kind,pressure\n");
    for (x, y, kind, p) in points {
        let _ = writeln!(out, "{x:e},{y:e},{kind},{p:e}");
    }
    out
}

fn run(
    sc: &Scenario,
    out: Option<&Path>,
    vtk_path: Option<&Path>,
    netflux_path: Option<&Path>,
) -> Result<()> {
    let n = sc.grid.n;
    match sc.method {
        MethodName::DfmConforming => {
            let run = solve_conforming(sc, sc.domain.lx / n as f64)?;
            let nt = run.system.n_triangles;
            let csv = field_csv(run.system.centers.iter().enumerate().map(|(k, c)| {
                let kind = if k < nt { "matrix" } else { "fracture" };
                (c.x, c.y, kind, run.flow.pressure[k])
            }));
            emit(out, &csv)?;
            if let Some(p) = vtk_path {
                let mut w = std::io::BufWriter::new(fs::File::create(p)?);
                vtk::write_trimesh(&mut w, "pressure", &run.mesh, &[("pressure", &run.flow.pressure)])?;
            }
            if let Some(p) = netflux_path {
                let rows = vec![(sc.method.to_string(), conforming_net_flux(&run))];
                fs::write(p, netflux::to_csv(&rows))?;
            }
            eprintln!(
                "{}: {} triangles, {} fracture cells, max imbalance {:.2e}",
                sc.method,
                nt,
                run.system.n_fracture,
                run.flow.max_relative_imbalance(&run.problem)
            );
        }
        MethodName::ReferenceEquidim => {
            if vtk_path.is_some() || netflux_path.is_some() {
                return Err(HarnessError::Validation(
                    "reference-equidim writes the pressure CSV only".into(),
                ));
            }
            let (g, flow) = solve_equidim(sc, n)?;
            let csv = field_csv((0..g.n_cells()).map(|c| {
                let m = g.rect(c).center();
                let kind = if g.matrix[c] { "matrix" } else { "fracture" };
                (m.x, m.y, kind, flow.pressure[c])
            }));
            emit(out, &csv)?;
            eprintln!("{}: {} x {} cells", sc.method, g.nx(), g.ny());
        }
        m => {
            let run = run_embedded(sc, m.embedded().expect("embedded method"), n)?;
            let nm = run.model.n_matrix();
            let csv = field_csv(run.model.cell_centers().iter().enumerate().map(|(k, c)| {
                let kind = if k < nm { "matrix" } else { "fracture" };
                (c.x, c.y, kind, run.flow.pressure[k])
            }));
            emit(out, &csv)?;
            if let Some(p) = vtk_path {
                let mut w = std::io::BufWriter::new(fs::File::create(p)?);
                vtk::write_coarse(&mut w, "pressure", &run.model.grid, &[("pressure", run.matrix_pressure())])?;
            }
            if let Some(p) = netflux_path {
                let rows = vec![(sc.method.to_string(), embedded_net_flux(&run))];
                fs::write(p, netflux::to_csv(&rows))?;
            }
            eprintln!(
                "{}: {} matrix cells, {} fracture cells, max imbalance {:.2e}",
                sc.method,
                nm,
                run.model.cuts.len(),
                run.max_relative_imbalance()
            );
        }
    }
    Ok(())
}

fn convergence(
    sc: &Scenario,
    methods: &[MethodName],
    levels: &[usize],
    reference_n: Option<usize>,
    out: Option<&Path>,
) -> Result<()> {
    let spec = match (reference_n, sc.reference) {
        (Some(n), Some(r)) => ReferenceSpec { n, ..r },
        (Some(n), None) => default_reference(sc, n),
        (None, Some(r)) => r,
        (None, None) => {
            let n = match default_reference(sc, 1).kind {
                ReferenceKind::Dfm => 300,
                ReferenceKind::Equidim => 600,
            };
            default_reference(sc, n)
        }
    };
    let reference = reference_solution(sc, spec)?;
    let finest = levels.iter().copied().max().unwrap_or(1);
    check_resolution(&reference, finest * sc.ny_for(finest))?;
    let report = convergence_study(sc, levels, methods, &reference)?;
    emit(out, &report.to_csv())?;
    for m in methods {
        eprintln!(
            "{m}: slope {:.3}, cut cells excluded {:.3}",
            report.slope(*m),
            report.slope_excl_cut(*m)
        );
    }
    Ok(())
}

fn tracer(sc: &Scenario, out: Option<&Path>, snapshots: Option<&Path>, every: usize) -> Result<()> {
    let run = run_tracer(sc, if snapshots.is_some() { every } else { 0 })?;
    if let Some(dir) = snapshots {
        fs::create_dir_all(dir)?;
        for (step, c) in &run.snapshots {
            fs::write(dir.join(format!("step_{step:04}.csv")), run.field_csv(c))?;
        }
    }
    emit(out, &run.field_csv(&run.concentration))?;
    eprintln!(
        "{} steps, max step imbalance {:.2e}, concentration range [{:.3e}, {:.3e}]",
        run.reports.len(),
        run.max_imbalance(),
        run.min_c,
        run.max_c
    );
    Ok(())
}

fn five_cell(check: bool, cells: usize, resolution: usize, out: Option<&Path>) -> Result<bool> {
    if check {
        let mut worst = 0.0f64;
        for (r, d) in oned::check_pairs(7) {
            worst = worst.max(oned::five_cell_deviation(r, d)?);
        }
        let ok = worst <= 1e-12;
        eprintln!(
            "five-cell closed forms: max relative deviation {worst:.2e} ({})",
            if ok { "match" } else { "MISMATCH" }
        );
        return Ok(ok);
    }
    if cells % 2 == 0 {
        return Err(HarnessError::Validation("--cells must be odd".into()));
    }
    emit(out, &oned::error_map_csv(cells, resolution)?)?;
    Ok(true)
}

fn local_probe(sc: &Scenario, cell: Option<&str>, face: Option<&str>, vtk_path: Option<&Path>) -> Result<()> {
    let grid = sc.coarse_grid(sc.grid.n)?;
    let fractures = sc.fractures()?;
    let solution = match (cell, face) {
        (Some(c), _) => {
            let (i, j) = pair(c)?;
            if i >= grid.nx || j >= grid.ny {
                return Err(HarnessError::Validation(format!("cell {c} outside the grid")));
            }
            mf_problem_for_cell(&grid, &fractures, grid.index(i, j), sc.fine.h_fine)?.solve()?
        }
        (None, Some(f)) => {
            let (kind, ij) = f
                .split_once(':')
                .ok_or_else(|| HarnessError::Validation(format!("expected `v:i,j` or `h:i,j`, got `{f}`")))?;
            let (i, j) = pair(ij)?;
            let face = match kind {
                "v" => Face::Vertical { i, j },
                "h" => Face::Horizontal { i, j },
                _ => return Err(HarnessError::Validation(format!("unknown face kind `{kind}`"))),
            };
            mm_problem_for_face(&grid, &fractures, face, sc.fine.h_fine)?.solve()?
        }
        (None, None) => {
            return Err(HarnessError::Validation("give --cell or --face".into()));
        }
    };
    println!(
        "transmissibility {:e}\nflux {:e}\naverages {:e} {:e}\ntriangles {}",
        solution.transmissibility,
        solution.flux,
        solution.averages.0,
        solution.averages.1,
        solution.mesh.triangles.len()
    );
    if let Some(p) = vtk_path {
        let mut w = std::io::BufWriter::new(fs::File::create(p)?);
        solution.write_vtk(&mut w)?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run {
            scenario,
            out,
            vtk,
            netflux,
        } => run(
            &Scenario::load(&scenario)?,
            out.as_deref(),
            vtk.as_deref(),
            netflux.as_deref(),
        )?,
        Command::Convergence {
            scenario,
            methods,
            levels,
            reference_n,
            out,
        } => convergence(
            &Scenario::load(&scenario)?,
            &methods,
            &levels,
            reference_n,
            out.as_deref(),
        )?,
        Command::Tracer {
            scenario,
            out,
            snapshots,
            every,
        } => tracer(
            &Scenario::load(&scenario)?,
            out.as_deref(),
            snapshots.as_deref(),
            every,
        )?,
        Command::AppendixA {
            x_f,
            d,
            k_m,
            k_f,
            p0,
            p1,
            points,
            out,
        } => emit(
            out.as_deref(),
            &oned::profile_table(x_f, d, k_m, k_f, p0, p1, points),
        )?,
        Command::AppendixC {
            check,
            cells,
            resolution,
            out,
        } => return five_cell(check, cells, resolution, out.as_deref()),
        Command::LocalProbe {
            scenario,
            cell,
            face,
            vtk,
        } => local_probe(
            &Scenario::load(&scenario)?,
            cell.as_deref(),
            face.as_deref(),
            vtk.as_deref(),
        )?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
