//! Study cases with closed-form means, discrete error norms, the classical
//! Monte Carlo baseline, and error-table generation over (degree, S, seed)
//! grids.

use std::fmt;
use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use crate::basis::ChaosBasis;
use crate::error::{Error, Result};
use crate::fem::{
    assemble_load, assemble_mass, assemble_stiffness, Mesh1D, NodalVector, TridiagonalMatrix,
};
use crate::field::{CoefficientModel, ForcingModel, SampleSet, TermProfile};
use crate::operator::{
    assemble_rhs, assemble_rhs_weighted, par_map_samples, ChaosSolution, KroneckerChaosOperator,
};
use crate::solver::{conjugate_gradient, CgOptions, CgReport};

pub type MeanFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type SolutionFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

/// A problem instance: coefficient, forcing, and (when known) the closed-form
/// mean the numerical mean is judged against.
#[derive(Clone)]
pub enum TestCase {
    /// One variable: kappa = e^{sin(x) y}, manufactured so that
    /// u(x,y) = x(1-x)/2 e^{-sin(x) y} solves the equation exactly.
    Case1,
    /// Two variables: kappa = e^{sin(x) y1 + cos(x) y2}, with
    /// u(x,y) = x(1-x)/2 e^{-sin(x) y1 - cos(x) y2}.
    Case2,
    Custom {
        name: String,
        coefficient: CoefficientModel,
        forcing: ForcingModel,
        exact_mean: Option<MeanFn>,
    },
}

impl fmt::Debug for TestCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestCase::Case1 => f.write_str("Case1"),
            TestCase::Case2 => f.write_str("Case2"),
            TestCase::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl TestCase {
    pub fn custom(
        name: impl Into<String>,
        coefficient: CoefficientModel,
        forcing: ForcingModel,
        exact_mean: Option<MeanFn>,
    ) -> Result<Self> {
        if coefficient.n_vars() != forcing.n_vars() {
            return Err(Error::InvalidArgument(format!(
                "coefficient has {} variables but forcing has {}",
                coefficient.n_vars(),
                forcing.n_vars()
            )));
        }
        Ok(TestCase::Custom {
            name: name.into(),
            coefficient,
            forcing,
            exact_mean,
        })
    }

    pub fn name(&self) -> &str {
        match self {
            TestCase::Case1 => "case1",
            TestCase::Case2 => "case2",
            TestCase::Custom { name, .. } => name,
        }
    }

    pub fn n_vars(&self) -> usize {
        match self {
            TestCase::Case1 => 1,
            TestCase::Case2 => 2,
            TestCase::Custom { coefficient, .. } => coefficient.n_vars(),
        }
    }

    pub fn coefficient(&self) -> CoefficientModel {
        match self {
            TestCase::Case1 => {
                CoefficientModel::log_affine(vec![TermProfile::Sin { amplitude: 1.0 }])
                    .expect("built-in coefficient is valid")
            }
            TestCase::Case2 => CoefficientModel::log_affine(vec![
                TermProfile::Sin { amplitude: 1.0 },
                TermProfile::Cos { amplitude: 1.0 },
            ])
            .expect("built-in coefficient is valid"),
            TestCase::Custom { coefficient, .. } => coefficient.clone(),
        }
    }

    pub fn forcing(&self) -> ForcingModel {
        match self {
            TestCase::Case1 => ForcingModel::new(1, |x: f64, y: &[f64]| {
                1.0 + (0.5 * (1.0 - 2.0 * x) * x.cos() - 0.5 * x * (1.0 - x) * x.sin()) * y[0]
            })
            .expect("built-in forcing is valid"),
            TestCase::Case2 => ForcingModel::new(2, |x: f64, y: &[f64]| {
                1.0 + (0.5 * (1.0 - 2.0 * x) * x.cos() - 0.5 * x * (1.0 - x) * x.sin()) * y[0]
                    - (0.5 * (1.0 - 2.0 * x) * x.sin() + 0.5 * x * (1.0 - x) * x.cos()) * y[1]
            })
            .expect("built-in forcing is valid"),
            TestCase::Custom { forcing, .. } => forcing.clone(),
        }
    }

    /// Closed-form mean of the solution, when one is known.
    pub fn exact_mean(&self) -> Option<MeanFn> {
        match self {
            // E[e^{-a y}] = e^{a^2/2} for standard normal y.
            TestCase::Case1 => Some(Arc::new(|x: f64| {
                0.5 * x * (1.0 - x) * (0.5 * x.sin() * x.sin()).exp()
            })),
            // sin^2 + cos^2 = 1 collapses the exponent to a constant.
            TestCase::Case2 => Some(Arc::new(|x: f64| 0.5 * x * (1.0 - x) * 0.5f64.exp())),
            TestCase::Custom { exact_mean, .. } => exact_mean.clone(),
        }
    }

    /// Closed-form pathwise solution, available for the built-in cases.
    pub fn exact_solution(&self) -> Option<SolutionFn> {
        match self {
            TestCase::Case1 => Some(Arc::new(|x: f64, y: &[f64]| {
                0.5 * x * (1.0 - x) * (-x.sin() * y[0]).exp()
            })),
            TestCase::Case2 => Some(Arc::new(|x: f64, y: &[f64]| {
                0.5 * x * (1.0 - x) * (-x.sin() * y[0] - x.cos() * y[1]).exp()
            })),
            TestCase::Custom { .. } => None,
        }
    }
}

pub fn case1_model() -> (CoefficientModel, ForcingModel, MeanFn) {
    let case = TestCase::Case1;
    let mean = case.exact_mean().expect("case1 has a closed-form mean");
    (case.coefficient(), case.forcing(), mean)
}

pub fn case2_model() -> (CoefficientModel, ForcingModel, MeanFn) {
    let case = TestCase::Case2;
    let mean = case.exact_mean().expect("case2 has a closed-form mean");
    (case.coefficient(), case.forcing(), mean)
}

/// Values of g at the interior nodes, the discrete stand-in for g itself.
pub fn nodal_interpolant<F: Fn(f64) -> f64>(mesh: &Mesh1D, g: F) -> NodalVector {
    (0..mesh.n_dof())
        .map(|i| g(mesh.interior_node(i)))
        .collect()
}

fn energy_distance(exact_nodes: &[f64], approx: &[f64], matrix: &TridiagonalMatrix) -> Result<f64> {
    if exact_nodes.len() != approx.len() || exact_nodes.len() != matrix.dim() {
        return Err(Error::InvalidArgument(format!(
            "error norm needs matching lengths, got {} and {} against a {}-dim matrix",
            exact_nodes.len(),
            approx.len(),
            matrix.dim()
        )));
    }
    let d: Vec<f64> = exact_nodes.iter().zip(approx).map(|(a, b)| a - b).collect();
    // quadratic_form of an SPD matrix can round to a tiny negative at d = 0
    Ok(matrix.quadratic_form(&d, &d).max(0.0).sqrt())
}

/// sqrt(d' A d) with A the unit-coefficient stiffness on the same mesh.
pub fn error_h1(
    exact_nodes: &[f64],
    approx: &[f64],
    stiffness_unit: &TridiagonalMatrix,
) -> Result<f64> {
    energy_distance(exact_nodes, approx, stiffness_unit)
}

/// sqrt(d' M d) with M the mass matrix on the same mesh.
pub fn error_l2(exact_nodes: &[f64], approx: &[f64], mass: &TridiagonalMatrix) -> Result<f64> {
    energy_distance(exact_nodes, approx, mass)
}

/// Mean field by brute force: one deterministic solve per sample, averaged.
pub fn classical_mc_mean(
    mesh: &Mesh1D,
    model: &CoefficientModel,
    forcing: &ForcingModel,
    samples: &SampleSet,
) -> Result<NodalVector> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument(
            "at least one sample is required".into(),
        ));
    }
    if samples.n_vars() != model.n_vars() {
        return Err(Error::InvalidArgument(format!(
            "samples have {} variables, coefficient expects {}",
            samples.n_vars(),
            model.n_vars()
        )));
    }
    if samples.n_vars() != forcing.n_vars() {
        return Err(Error::InvalidArgument(format!(
            "samples have {} variables, forcing expects {}",
            samples.n_vars(),
            forcing.n_vars()
        )));
    }
    let solutions = par_map_samples(samples.len(), |r| {
        let y = samples.sample(r);
        let a = assemble_stiffness(mesh, |x| model.kappa_unchecked(x, y))
            .map_err(|e| e.tag_sample(r))?;
        let f =
            assemble_load(mesh, |x| forcing.eval_unchecked(x, y)).map_err(|e| e.tag_sample(r))?;
        a.solve(&f).map_err(|e| e.tag_sample(r))
    })?;
    let inv = 1.0 / samples.len() as f64;
    let mut mean = vec![0.0; mesh.n_dof()];
    for sol in &solutions {
        for (m, v) in mean.iter_mut().zip(sol) {
            *m += inv * v;
        }
    }
    Ok(mean)
}

#[derive(Clone, Debug, Default)]
pub struct SolveOptions {
    pub cg: CgOptions,
    /// Rebuild sample matrices on every operator application.
    pub low_memory: bool,
    /// Per-sample quadrature weights; None means uniform 1/S.
    pub weights: Option<Vec<f64>>,
}

/// Assemble and solve the coupled system end to end, returning the chaos
/// coefficients together with the solver report. A nonconverged solve is not
/// an error here; the report says what happened.
pub fn solve_chaos(
    mesh: &Mesh1D,
    coefficient: &CoefficientModel,
    forcing: &ForcingModel,
    basis: &ChaosBasis,
    samples: &SampleSet,
    options: &SolveOptions,
) -> Result<(ChaosSolution, CgReport)> {
    let op = match (&options.weights, options.low_memory) {
        (Some(_), true) => {
            return Err(Error::InvalidArgument(
                "weighted assembly has no low-memory mode".into(),
            ));
        }
        (Some(w), false) => {
            KroneckerChaosOperator::assemble_weighted(mesh, basis, samples, coefficient, w.clone())?
        }
        (None, true) => {
            KroneckerChaosOperator::assemble_low_memory(mesh, basis, samples, coefficient)?
        }
        (None, false) => KroneckerChaosOperator::assemble(mesh, basis, samples, coefficient)?,
    };
    let rhs = match &options.weights {
        Some(w) => assemble_rhs_weighted(mesh, basis, samples, forcing, w)?,
        None => assemble_rhs(mesh, basis, samples, forcing)?,
    };
    let (x, report) = conjugate_gradient(&op, &rhs, options.cg)?;
    let solution = ChaosSolution::new(x, mesh.clone(), basis.clone())?;
    Ok((solution, report))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Norms {
    pub h1: bool,
    pub l2: bool,
}

impl Default for Norms {
    fn default() -> Self {
        Self { h1: true, l2: true }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub case: TestCase,
    pub n_elements: usize,
    /// Total polynomial degrees to sweep.
    pub degrees: Vec<usize>,
    pub sample_counts: Vec<usize>,
    pub seeds: Vec<u64>,
    pub orthonormal: bool,
    pub norms: Norms,
    pub cg: CgOptions,
    pub low_memory: bool,
    pub with_mc_baseline: bool,
}

impl ExperimentConfig {
    /// Defaults mirror the standard study grid: 100 elements, degrees 1..=6,
    /// S in {100, 500, 1000, 5000, 10000}.
    pub fn new(case: TestCase) -> Self {
        Self {
            case,
            n_elements: 100,
            degrees: (1..=6).collect(),
            sample_counts: vec![100, 500, 1000, 5000, 10000],
            seeds: vec![1],
            orthonormal: false,
            norms: Norms::default(),
            cg: CgOptions::default(),
            low_memory: false,
            with_mc_baseline: true,
        }
    }
}

/// One cell of the error table. `degree: None` marks a classical Monte Carlo
/// baseline row; those carry `mc_error` and nothing else.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub case: String,
    pub degree: Option<usize>,
    pub samples: usize,
    pub seed: u64,
    pub eps_h1: Option<f64>,
    pub eps_l2: Option<f64>,
    pub mc_error: Option<f64>,
    pub cg_iterations: Option<usize>,
    /// Why the cell is empty, when it is. Not part of the CSV schema; the
    /// caller decides how to surface it.
    pub failure: Option<String>,
    /// Wall-clock spent on this cell, in milliseconds. Not part of the CSV
    /// schema; run manifests record it.
    pub wall_ms: f64,
}

impl ReportRow {
    fn empty(case: &str, degree: Option<usize>, samples: usize, seed: u64) -> Self {
        Self {
            case: case.to_string(),
            degree,
            samples,
            seed,
            eps_h1: None,
            eps_l2: None,
            mc_error: None,
            cg_iterations: None,
            failure: None,
            wall_ms: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct ErrorReport {
    pub rows: Vec<ReportRow>,
}

fn push_opt<T: fmt::Display>(out: &mut String, v: Option<T>) {
    if let Some(v) = v {
        let _ = write!(out, "{v}");
    }
}

impl ErrorReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("case,n,S,seed,eps_h1,eps_l2,mc_error,cg_iters\n");
        for row in &self.rows {
            let _ = write!(out, "{},", row.case);
            push_opt(&mut out, row.degree);
            let _ = write!(out, ",{},{},", row.samples, row.seed);
            push_opt(&mut out, row.eps_h1);
            out.push(',');
            push_opt(&mut out, row.eps_l2);
            out.push(',');
            push_opt(&mut out, row.mc_error);
            out.push(',');
            push_opt(&mut out, row.cg_iterations);
            out.push('\n');
        }
        out
    }

    pub fn failures(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| r.failure.is_some())
    }
}

/// Sweep the (degree, sample count, seed) grid for one case. Samples are
/// drawn once per (S, seed) and shared across degrees, so columns of the
/// resulting table see the same randomness. Per-cell failures are recorded
/// in the row instead of aborting the sweep.
pub fn run_table(config: &ExperimentConfig) -> Result<ErrorReport> {
    if config.degrees.is_empty() {
        return Err(Error::InvalidArgument("degrees list is empty".into()));
    }
    if config.sample_counts.is_empty() {
        return Err(Error::InvalidArgument("sample counts list is empty".into()));
    }
    if let Some(&bad) = config.sample_counts.iter().find(|&&c| c == 0) {
        return Err(Error::InvalidArgument(format!(
            "sample count {bad} must be at least 1"
        )));
    }
    if config.seeds.is_empty() {
        return Err(Error::InvalidArgument("seeds list is empty".into()));
    }
    let exact = config.case.exact_mean().ok_or_else(|| {
        Error::InvalidArgument(format!(
            "case {} has no exact mean to compare against",
            config.case.name()
        ))
    })?;
    let mesh = Mesh1D::uniform(config.n_elements)?;
    let coefficient = config.case.coefficient();
    let forcing = config.case.forcing();
    let exact_nodes = nodal_interpolant(&mesh, |x| exact(x));
    let stiffness_unit = assemble_stiffness(&mesh, |_| 1.0)?;
    let mass = assemble_mass(&mesh);
    let n_vars = config.case.n_vars();
    let case_name = config.case.name();

    let mut rows = Vec::new();
    for &s in &config.sample_counts {
        for &seed in &config.seeds {
            let samples = SampleSet::draw(seed, s, n_vars)?;
            if config.with_mc_baseline {
                let mut row = ReportRow::empty(case_name, None, s, seed);
                let started = Instant::now();
                match classical_mc_mean(&mesh, &coefficient, &forcing, &samples)
                    .and_then(|mean| error_h1(&exact_nodes, &mean, &stiffness_unit))
                {
                    Ok(e) if e.is_finite() => row.mc_error = Some(e),
                    Ok(e) => row.failure = Some(format!("non-finite baseline error {e}")),
                    Err(e) => row.failure = Some(e.to_string()),
                }
                row.wall_ms = started.elapsed().as_secs_f64() * 1e3;
                rows.push(row);
            }
            for &degree in &config.degrees {
                let mut row = ReportRow::empty(case_name, Some(degree), s, seed);
                let started = Instant::now();
                match table_cell(
                    config,
                    &mesh,
                    &coefficient,
                    &forcing,
                    &samples,
                    &exact_nodes,
                    &stiffness_unit,
                    &mass,
                    degree,
                ) {
                    Ok((eps_h1, eps_l2, iters)) => {
                        row.eps_h1 = eps_h1;
                        row.eps_l2 = eps_l2;
                        row.cg_iterations = Some(iters);
                    }
                    Err(msg) => row.failure = Some(msg),
                }
                row.wall_ms = started.elapsed().as_secs_f64() * 1e3;
                rows.push(row);
            }
        }
    }
    Ok(ErrorReport { rows })
}

#[allow(clippy::too_many_arguments)]
fn table_cell(
    config: &ExperimentConfig,
    mesh: &Mesh1D,
    coefficient: &CoefficientModel,
    forcing: &ForcingModel,
    samples: &SampleSet,
    exact_nodes: &[f64],
    stiffness_unit: &TridiagonalMatrix,
    mass: &TridiagonalMatrix,
    degree: usize,
) -> std::result::Result<(Option<f64>, Option<f64>, usize), String> {
    let n_vars = coefficient.n_vars();
    let basis = if config.orthonormal {
        ChaosBasis::hermite_orthonormal(n_vars, degree)
    } else {
        ChaosBasis::hermite(n_vars, degree)
    }
    .map_err(|e| e.to_string())?;
    let options = SolveOptions {
        cg: config.cg,
        low_memory: config.low_memory,
        weights: None,
    };
    let (solution, report) = solve_chaos(mesh, coefficient, forcing, &basis, samples, &options)
        .map_err(|e| e.to_string())?;
    if !report.converged {
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
        return Err(msg);
    }
    let mean = solution.mean_field().map_err(|e| e.to_string())?;
    let eps_h1 = if config.norms.h1 {
        Some(error_h1(exact_nodes, &mean, stiffness_unit).map_err(|e| e.to_string())?)
    } else {
        None
    };
    let eps_l2 = if config.norms.l2 {
        Some(error_l2(exact_nodes, &mean, mass).map_err(|e| e.to_string())?)
    } else {
        None
    };
    for e in [eps_h1, eps_l2].into_iter().flatten() {
        if !e.is_finite() {
            return Err(format!("non-finite error {e}"));
        }
    }
    Ok((eps_h1, eps_l2, report.iterations))
}

/// The first four chaos coefficients at one sample count.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveSet {
    pub samples: usize,
    pub blocks: Vec<NodalVector>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientCurves {
    /// Interior node positions the curves are sampled at.
    pub nodes: Vec<f64>,
    pub per_count: Vec<CurveSet>,
}

impl CoefficientCurves {
    /// One CSV per sample count, columns x,block0..block3.
    pub fn to_csvs(&self) -> Vec<(usize, String)> {
        self.per_count
            .iter()
            .map(|set| {
                let mut out = String::from("x,block0,block1,block2,block3\n");
                for (i, x) in self.nodes.iter().enumerate() {
                    let _ = write!(out, "{x}");
                    for block in &set.blocks {
                        let _ = write!(out, ",{}", block[i]);
                    }
                    out.push('\n');
                }
                (set.samples, out)
            })
            .collect()
    }
}

/// How the leading chaos coefficients settle as the sample count grows:
/// solves the same case at each S with a shared seed and returns the nodal
/// curves of blocks 0..=3.
pub fn coefficient_convergence(
    case: &TestCase,
    mesh: &Mesh1D,
    degree: usize,
    sample_counts: &[usize],
    seed: u64,
) -> Result<CoefficientCurves> {
    if degree < 3 {
        return Err(Error::InvalidArgument(format!(
            "degree {degree} is too small: the first four coefficients need degree >= 3"
        )));
    }
    if sample_counts.is_empty() {
        return Err(Error::InvalidArgument("sample counts list is empty".into()));
    }
    let n_vars = case.n_vars();
    let basis = ChaosBasis::hermite(n_vars, degree)?;
    let coefficient = case.coefficient();
    let forcing = case.forcing();
    let mut per_count = Vec::new();
    for &s in sample_counts {
        let samples = SampleSet::draw(seed, s, n_vars)?;
        let (solution, report) = solve_chaos(
            mesh,
            &coefficient,
            &forcing,
            &basis,
            &samples,
            &SolveOptions::default(),
        )?;
        if !report.converged {
            return Err(Error::Solver(format!(
                "cg did not converge at S = {s}: relative residual {:.3e} after {} iterations",
                report.final_relative_residual, report.iterations
            )));
        }
        let blocks = (0..4).map(|k| solution.block(k).to_vec()).collect();
        per_count.push(CurveSet { samples: s, blocks });
    }
    Ok(CoefficientCurves {
        nodes: (0..mesh.n_dof()).map(|i| mesh.interior_node(i)).collect(),
        per_count,
    })
}
