#![allow(dead_code)]

use chaos_fem::{
    assemble_mass, assemble_stiffness, classical_mc_mean, error_h1, error_l2, nodal_interpolant,
    solve_chaos, CgOptions, ChaosBasis, Mesh1D, SampleSet, SolveOptions, TestCase,
};

pub const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

pub struct Cell {
    pub h1: f64,
    pub l2: f64,
}

/// Solve one benchmark configuration and return the mean-field errors.
/// The orthonormalized basis spans the same space as the raw Hermite one,
/// so the Galerkin errors are identical; it just keeps CG iteration counts
/// moderate at higher degrees.
pub fn galerkin_cell(
    case: &TestCase,
    n_elements: usize,
    degree: usize,
    s_count: usize,
    seed: u64,
) -> Cell {
    let mesh = Mesh1D::uniform(n_elements).unwrap();
    let exact = case.exact_mean().unwrap();
    let exact_nodes = nodal_interpolant(&mesh, |x| exact(x));
    let stiffness_unit = assemble_stiffness(&mesh, |_| 1.0).unwrap();
    let mass = assemble_mass(&mesh);
    let basis = ChaosBasis::hermite_orthonormal(case.n_vars(), degree).unwrap();
    let samples = SampleSet::draw(seed, s_count, case.n_vars()).unwrap();
    let options = SolveOptions {
        cg: CgOptions {
            tol: 1e-10,
            max_iter: Some(20_000),
        },
        ..SolveOptions::default()
    };
    let (solution, report) = solve_chaos(
        &mesh,
        &case.coefficient(),
        &case.forcing(),
        &basis,
        &samples,
        &options,
    )
    .unwrap();
    assert!(
        report.converged,
        "{} degree {degree} S={s_count} seed {seed}: CG stopped after {} iterations at residual {:.2e}",
        case.name(),
        report.iterations,
        report.final_relative_residual,
    );
    let mean = solution.mean_field().unwrap();
    Cell {
        h1: error_h1(&exact_nodes, &mean, &stiffness_unit).unwrap(),
        l2: error_l2(&exact_nodes, &mean, &mass).unwrap(),
    }
}

/// H1 error of the plain Monte Carlo mean for the one-variable benchmark.
pub fn mc_h1_error(s_count: usize, seed: u64) -> f64 {
    let case = TestCase::Case1;
    let mesh = Mesh1D::uniform(100).unwrap();
    let exact = case.exact_mean().unwrap();
    let exact_nodes = nodal_interpolant(&mesh, |x| exact(x));
    let stiffness_unit = assemble_stiffness(&mesh, |_| 1.0).unwrap();
    let samples = SampleSet::draw(seed, s_count, 1).unwrap();
    let mc = classical_mc_mean(&mesh, &case.coefficient(), &case.forcing(), &samples).unwrap();
    error_h1(&exact_nodes, &mc, &stiffness_unit).unwrap()
}

pub fn median(mut values: Vec<f64>) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let den: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    num / den
}
