//! The three subcommands. `solve` runs one chaos Galerkin system and writes
//! the coefficient fields, `table` sweeps the (degree, sample count, seed)
//! grid into error tables, and `compare` puts classical Monte Carlo,
//! collocation, and the coupled chaos solve side by side on one problem.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use chaos_fem::{
    assemble_rhs, assemble_rhs_weighted, assemble_stiffness, classical_mc_mean, collocation_grid,
    conjugate_gradient, error_h1, nodal_interpolant, run_table, solve_chaos, CgOptions, CgReport,
    ChaosBasis, ChaosSolution, ErrorReport, ExperimentConfig, KroneckerChaosOperator, Mesh1D,
    Norms, ReportRow, SampleSet, SolveOptions,
};

use crate::config;
use crate::manifest::{CellRecord, RunManifest};
use crate::svg::{self, Series};
use crate::{CliError, CommonArgs};

pub fn solve(args: &CommonArgs) -> Result<(), CliError> {
    let config = config::load(args.config.as_deref(), &args.set)?;
    let case = config.case()?;
    let seed = single_seed(&args.seed, config.solve.seed, "solve")?;
    ensure_out_dir(&args.out)?;

    let samples = match &args.samples_file {
        Some(path) => {
            if !args.seed.is_empty() {
                return Err(CliError::Config(
                    "--seed and --samples-file are mutually exclusive: the file fixes the samples"
                        .into(),
                ));
            }
            let set = SampleSet::load(path)?;
            if set.n_vars() != case.n_vars() {
                return Err(CliError::Config(format!(
                    "samples file {} has {} variables, {} needs {}",
                    path.display(),
                    set.n_vars(),
                    case.name(),
                    case.n_vars()
                )));
            }
            set
        }
        None => SampleSet::draw(seed, config.solve.samples, case.n_vars())?,
    };

    let mesh = Mesh1D::uniform(config.problem.n_elements)?;
    let basis = if config.solve.orthonormal {
        ChaosBasis::hermite_orthonormal(case.n_vars(), config.solve.degree)
    } else {
        ChaosBasis::hermite(case.n_vars(), config.solve.degree)
    }?;
    let options = SolveOptions {
        cg: cg_options(config.solve.tol, config.solve.max_iter)?,
        low_memory: args.low_memory || config.solve.low_memory,
        weights: None,
    };

    let started = Instant::now();
    let (solution, report) = solve_chaos(
        &mesh,
        &case.coefficient(),
        &case.forcing(),
        &basis,
        &samples,
        &options,
    )?;
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;
    warn_on_rank(&report, samples.len(), basis.dim());

    let mut manifest = RunManifest::new("solve", &config, samples.seed().into_iter().collect());
    let mut cell = CellRecord {
        case: case.name().to_string(),
        degree: Some(config.solve.degree),
        samples: samples.len(),
        seed: samples.seed(),
        wall_ms,
        cg_iterations: Some(report.iterations),
        failure: None,
        output: "solution.csv".into(),
    };
    if !report.converged {
        let reason = describe_nonconvergence(&report);
        cell.failure = Some(reason.clone());
        manifest.cells.push(cell);
        manifest.write(&args.out)?;
        return Err(CliError::Numerical(reason));
    }
    write_text(&args.out.join("solution.csv"), &solution_csv(&solution))?;
    manifest.outputs.push("solution.csv".into());
    manifest.cells.push(cell);
    manifest.write(&args.out)?;

    println!(
        "solve: {} degree {} with {} samples converged in {} iterations; wrote {}",
        case.name(),
        config.solve.degree,
        samples.len(),
        report.iterations,
        args.out.join("solution.csv").display()
    );
    Ok(())
}

pub fn table(args: &CommonArgs) -> Result<(), CliError> {
    if args.samples_file.is_some() {
        return Err(CliError::Config(
            "table draws fresh samples per cell; --samples-file only applies to solve".into(),
        ));
    }
    let config = config::load(args.config.as_deref(), &args.set)?;
    let case = config.case()?;
    let norms = parse_norms(&config.table.norms)?;
    ensure_out_dir(&args.out)?;

    let mut experiment = ExperimentConfig::new(case);
    experiment.n_elements = config.problem.n_elements;
    if let Some(d) = &config.table.degrees {
        experiment.degrees = d.clone();
    }
    if let Some(c) = &config.table.sample_counts {
        experiment.sample_counts = c.clone();
    }
    if let Some(s) = &config.table.seeds {
        experiment.seeds = s.clone();
    }
    if !args.seed.is_empty() {
        experiment.seeds = args.seed.clone();
    }
    experiment.orthonormal = config.table.orthonormal;
    experiment.norms = norms;
    experiment.cg = cg_options(config.table.tol, config.table.max_iter)?;
    experiment.low_memory = args.low_memory || config.table.low_memory;
    experiment.with_mc_baseline = config.table.with_mc_baseline;

    let report = run_table(&experiment)?;

    let mut manifest = RunManifest::new("table", &config, experiment.seeds.clone());
    write_text(&args.out.join("table.csv"), &report.to_csv())?;
    manifest.outputs.push("table.csv".into());
    if norms.h1 {
        let pivot = pivot_csv(&report, &experiment, experiment.with_mc_baseline, |row| {
            row.eps_h1
        });
        write_text(&args.out.join("table_h1.csv"), &pivot)?;
        manifest.outputs.push("table_h1.csv".into());
    }
    if norms.l2 {
        // the baseline error is an energy norm, so it has no L2 row
        let pivot = pivot_csv(&report, &experiment, false, |row| row.eps_l2);
        write_text(&args.out.join("table_l2.csv"), &pivot)?;
        manifest.outputs.push("table_l2.csv".into());
    }
    if config.table.svg {
        if let Some(plot) = convergence_svg(&report, &experiment, norms) {
            write_text(&args.out.join("convergence.svg"), &plot)?;
            manifest.outputs.push("convergence.svg".into());
        }
    }
    for row in &report.rows {
        manifest.cells.push(CellRecord {
            case: row.case.clone(),
            degree: row.degree,
            samples: row.samples,
            seed: Some(row.seed),
            wall_ms: row.wall_ms,
            cg_iterations: row.cg_iterations,
            failure: row.failure.clone(),
            output: "table.csv".into(),
        });
    }
    manifest.write(&args.out)?;

    println!(
        "table: {} rows over degrees {:?}, sample counts {:?}, {} seed(s); wrote {}",
        report.rows.len(),
        experiment.degrees,
        experiment.sample_counts,
        experiment.seeds.len(),
        args.out.join("table.csv").display()
    );
    let failures: Vec<&ReportRow> = report.failures().collect();
    if let Some(first) = failures.first() {
        return Err(CliError::Numerical(format!(
            "{} of {} cells failed; first: {} row at S = {}, seed {}: {}",
            failures.len(),
            report.rows.len(),
            first
                .degree
                .map_or("baseline".to_string(), |d| format!("degree {d}")),
            first.samples,
            first.seed,
            first.failure.as_deref().unwrap_or("unspecified failure")
        )));
    }
    Ok(())
}

pub fn compare(args: &CommonArgs) -> Result<(), CliError> {
    if args.samples_file.is_some() {
        return Err(CliError::Config(
            "compare draws its own samples; --samples-file only applies to solve".into(),
        ));
    }
    let config = config::load(args.config.as_deref(), &args.set)?;
    let case = config.case()?;
    if case.n_vars() != 1 {
        return Err(CliError::Config(format!(
            "compare includes a collocation run, which needs exactly one random variable; \
             {} has {}",
            case.name(),
            case.n_vars()
        )));
    }
    let section = &config.compare;
    let seed = single_seed(&args.seed, section.seed, "compare")?;
    let cg = cg_options(section.tol, section.max_iter)?;
    let low_memory = args.low_memory || section.low_memory;
    ensure_out_dir(&args.out)?;

    let mesh = Mesh1D::uniform(config.problem.n_elements)?;
    let coefficient = case.coefficient();
    let forcing = case.forcing();
    let exact = case.exact_mean().ok_or_else(|| {
        CliError::Config(format!(
            "case {} has no exact mean to compare against",
            case.name()
        ))
    })?;
    let exact_nodes = nodal_interpolant(&mesh, |x| exact(x));
    let stiffness_unit = assemble_stiffness(&mesh, |_| 1.0)?;
    let mut rows = Vec::new();

    let started = Instant::now();
    let mc_set = SampleSet::draw(seed, section.mc_samples, 1)?;
    let mc_mean = classical_mc_mean(&mesh, &coefficient, &forcing, &mc_set)?;
    rows.push(CompareRow {
        mode: "mc",
        samples: mc_set.len(),
        degree: None,
        seed: Some(seed),
        eps_h1: error_h1(&exact_nodes, &mc_mean, &stiffness_unit)?,
        cg_iters: None,
        gram_offdiag: None,
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
    });

    let started = Instant::now();
    let (grid, weights) = collocation_grid(1, section.collocation_nodes)?;
    let nodes: Vec<f64> = (0..grid.len()).map(|r| grid.sample(r)[0]).collect();
    let basis = ChaosBasis::lagrange(nodes)?;
    let op = KroneckerChaosOperator::assemble_weighted(
        &mesh,
        &basis,
        &grid,
        &coefficient,
        weights.clone(),
    )?;
    let rhs = assemble_rhs_weighted(&mesh, &basis, &grid, &forcing, &weights)?;
    let (x, report) = conjugate_gradient(&op, &rhs, cg)?;
    if !report.converged {
        return Err(CliError::Numerical(format!(
            "collocation run: {}",
            describe_nonconvergence(&report)
        )));
    }
    // the mean under a cardinal basis is the quadrature average of the blocks
    let mut mean = vec![0.0; mesh.n_dof()];
    for (r, &w) in weights.iter().enumerate() {
        for (acc, v) in mean.iter_mut().zip(x.block(r)) {
            *acc += w * v;
        }
    }
    rows.push(CompareRow {
        mode: "collocation",
        samples: grid.len(),
        degree: None,
        seed: None,
        eps_h1: error_h1(&exact_nodes, &mean, &stiffness_unit)?,
        cg_iters: Some(report.iterations),
        gram_offdiag: Some(max_offdiag(&op.gram())),
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
    });

    let started = Instant::now();
    let samples = SampleSet::draw(seed, section.samples, 1)?;
    let basis = match section.chaos_basis.as_str() {
        "hermite" if section.orthonormal => ChaosBasis::hermite_orthonormal(1, section.degree)?,
        "hermite" => ChaosBasis::hermite(1, section.degree)?,
        "lagrange" => {
            ChaosBasis::lagrange((0..samples.len()).map(|r| samples.sample(r)[0]).collect())?
        }
        other => {
            return Err(CliError::Config(format!(
                "compare.chaos_basis must be \"hermite\" or \"lagrange\", got {other:?}"
            )));
        }
    };
    let op = if low_memory {
        KroneckerChaosOperator::assemble_low_memory(&mesh, &basis, &samples, &coefficient)
    } else {
        KroneckerChaosOperator::assemble(&mesh, &basis, &samples, &coefficient)
    }?;
    let rhs = assemble_rhs(&mesh, &basis, &samples, &forcing)?;
    let (x, report) = conjugate_gradient(&op, &rhs, cg)?;
    warn_on_rank(&report, samples.len(), basis.dim());
    if !report.converged {
        return Err(CliError::Numerical(format!(
            "chaos run: {}",
            describe_nonconvergence(&report)
        )));
    }
    let gram_offdiag = max_offdiag(&op.gram());
    let solution = ChaosSolution::new(x, mesh.clone(), basis)?;
    let mean = if solution.basis().has_constant_first() {
        solution.mean_field()?
    } else {
        let inv = 1.0 / solution.basis().dim() as f64;
        let mut mean = vec![0.0; mesh.n_dof()];
        for k in 0..solution.basis().dim() {
            for (acc, v) in mean.iter_mut().zip(solution.block(k)) {
                *acc += inv * v;
            }
        }
        mean
    };
    rows.push(CompareRow {
        mode: "chaos-mc",
        samples: samples.len(),
        degree: (section.chaos_basis == "hermite").then_some(section.degree),
        seed: Some(seed),
        eps_h1: error_h1(&exact_nodes, &mean, &stiffness_unit)?,
        cg_iters: Some(report.iterations),
        gram_offdiag: Some(gram_offdiag),
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
    });

    write_text(&args.out.join("compare.csv"), &compare_csv(&rows))?;
    let mut manifest = RunManifest::new("compare", &config, vec![seed]);
    manifest.outputs.push("compare.csv".into());
    for row in &rows {
        manifest.cells.push(CellRecord {
            case: case.name().to_string(),
            degree: row.degree,
            samples: row.samples,
            seed: row.seed,
            wall_ms: row.wall_ms,
            cg_iterations: row.cg_iters,
            failure: None,
            output: "compare.csv".into(),
        });
    }
    manifest.write(&args.out)?;

    let summary: Vec<String> = rows
        .iter()
        .map(|r| format!("{} {:.3e}", r.mode, r.eps_h1))
        .collect();
    println!(
        "compare: {} (energy error of the mean); wrote {}",
        summary.join(", "),
        args.out.join("compare.csv").display()
    );
    Ok(())
}

struct CompareRow {
    mode: &'static str,
    samples: usize,
    degree: Option<usize>,
    seed: Option<u64>,
    eps_h1: f64,
    cg_iters: Option<usize>,
    gram_offdiag: Option<f64>,
    wall_ms: f64,
}

fn compare_csv(rows: &[CompareRow]) -> String {
    let mut out = String::from("mode,samples,eps_h1,cg_iters,gram_offdiag\n");
    for row in rows {
        let _ = write!(out, "{},{},{},", row.mode, row.samples, row.eps_h1);
        if let Some(iters) = row.cg_iters {
            let _ = write!(out, "{iters}");
        }
        out.push(',');
        if let Some(g) = row.gram_offdiag {
            let _ = write!(out, "{g}");
        }
        out.push('\n');
    }
    out
}

/// Seed medians of one error column, degrees down the rows and sample counts
/// across the columns. Cells stay empty when every seed failed there.
fn pivot_csv(
    report: &ErrorReport,
    experiment: &ExperimentConfig,
    include_baseline: bool,
    value: impl Fn(&ReportRow) -> Option<f64>,
) -> String {
    let mut out = String::from("n");
    for s in &experiment.sample_counts {
        let _ = write!(out, ",{s}");
    }
    out.push('\n');
    let mut labels: Vec<(String, Option<usize>)> = Vec::new();
    if include_baseline {
        labels.push(("mc".into(), None));
    }
    for &d in &experiment.degrees {
        labels.push((d.to_string(), Some(d)));
    }
    for (label, degree) in labels {
        out.push_str(&label);
        for &s in &experiment.sample_counts {
            out.push(',');
            let mut values: Vec<f64> = report
                .rows
                .iter()
                .filter(|row| row.degree == degree && row.samples == s)
                .filter_map(|row| {
                    if degree.is_none() {
                        row.mc_error
                    } else {
                        value(row)
                    }
                })
                .collect();
            if let Some(m) = median(&mut values) {
                let _ = write!(out, "{m}");
            }
        }
        out.push('\n');
    }
    out
}

fn convergence_svg(
    report: &ErrorReport,
    experiment: &ExperimentConfig,
    norms: Norms,
) -> Option<String> {
    let (value, y_label): (fn(&ReportRow) -> Option<f64>, &str) = if norms.h1 {
        (|row| row.eps_h1, "energy error of the mean")
    } else {
        (|row| row.eps_l2, "L2 error of the mean")
    };
    let mut series = Vec::new();
    for &d in &experiment.degrees {
        let points = medians_over_counts(report, experiment, |row| {
            if row.degree == Some(d) {
                value(row)
            } else {
                None
            }
        });
        series.push(Series {
            label: format!("degree {d}"),
            points,
            dashed: false,
        });
    }
    // the baseline is an energy-norm number, so it only belongs on that plot
    if norms.h1 && experiment.with_mc_baseline {
        let points = medians_over_counts(report, experiment, |row| {
            if row.degree.is_none() {
                row.mc_error
            } else {
                None
            }
        });
        series.push(Series {
            label: "mc".into(),
            points,
            dashed: true,
        });
    }
    svg::convergence_plot(&series, y_label)
}

fn medians_over_counts(
    report: &ErrorReport,
    experiment: &ExperimentConfig,
    value: impl Fn(&ReportRow) -> Option<f64>,
) -> Vec<(f64, f64)> {
    experiment
        .sample_counts
        .iter()
        .filter_map(|&s| {
            let mut values: Vec<f64> = report
                .rows
                .iter()
                .filter(|row| row.samples == s)
                .filter_map(&value)
                .collect();
            median(&mut values).map(|m| (s as f64, m))
        })
        .collect()
}

fn solution_csv(solution: &ChaosSolution) -> String {
    let n2 = solution.basis().dim();
    let mut out = String::new();
    for k in 0..n2 {
        if k > 0 {
            out.push(',');
        }
        let _ = write!(out, "coeff{k}");
    }
    out.push('\n');
    for i in 0..solution.mesh().n_dof() {
        for k in 0..n2 {
            if k > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", solution.block(k)[i]);
        }
        out.push('\n');
    }
    out
}

fn single_seed(cli: &[u64], fallback: u64, command: &str) -> Result<u64, CliError> {
    match cli {
        [] => Ok(fallback),
        [seed] => Ok(*seed),
        _ => Err(CliError::Config(format!(
            "{command} takes a single --seed; repeated seeds only apply to table"
        ))),
    }
}

fn cg_options(tol: f64, max_iter: usize) -> Result<CgOptions, CliError> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(CliError::Config(format!(
            "solver tolerance {tol} must lie in (0, 1)"
        )));
    }
    Ok(CgOptions {
        tol,
        max_iter: (max_iter > 0).then_some(max_iter),
    })
}

fn parse_norms(name: &str) -> Result<Norms, CliError> {
    match name {
        "both" => Ok(Norms { h1: true, l2: true }),
        "h1" => Ok(Norms {
            h1: true,
            l2: false,
        }),
        "l2" => Ok(Norms {
            h1: false,
            l2: true,
        }),
        other => Err(CliError::Config(format!(
            "table.norms must be \"both\", \"h1\", or \"l2\", got {other:?}"
        ))),
    }
}

fn describe_nonconvergence(report: &CgReport) -> String {
    let mut msg = format!(
        "cg did not converge: relative residual {:.3e} after {} iterations",
        report.final_relative_residual, report.iterations
    );
    if let Some(b) = report.breakdown {
        let _ = write!(msg, "; {b}");
    }
    if report.rank_warning {
        let _ = write!(msg, "; fewer samples than basis members");
    }
    msg
}

fn warn_on_rank(report: &CgReport, s_count: usize, n2: usize) {
    if report.rank_warning {
        eprintln!(
            "warning: {s_count} samples for {n2} basis members leaves the sampled \
             coupling rank-deficient"
        );
    }
}

fn max_offdiag(gram: &[Vec<f64>]) -> f64 {
    let mut worst = 0.0f64;
    for (i, row) in gram.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if i != j {
                worst = worst.max(v.abs());
            }
        }
    }
    worst
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    })
}

fn ensure_out_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| {
        CliError::Config(format!(
            "cannot create output directory {}: {e}",
            dir.display()
        ))
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}
