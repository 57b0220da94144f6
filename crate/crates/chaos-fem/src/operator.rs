//! The Monte Carlo chaos system as a matrix-free operator:
//! A = sum_r w_r V_r^T A(y^(r)) V_r with V_r = z_r (x) I, where z_r is row r
//! of the basis evaluation matrix and the weights default to 1/S. The dense
//! block matrix is only ever formed by the small testing oracle `densify`.

use rayon::prelude::*;

use crate::basis::ChaosBasis;
use crate::error::{Error, Result};
use crate::fem::{
    assemble_load, assemble_stiffness_by_element, Mesh1D, NodalVector, TridiagonalMatrix,
};
use crate::field::{CoefficientModel, ForcingModel, SampleSet};

/// Below this many sample-level flops the parallel runway is not worth it.
const PARALLEL_CUTOFF: usize = 4096;

/// Block vector over the chaos basis: one nodal vector per basis member, in
/// basis order.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaosVector {
    blocks: Vec<NodalVector>,
}

impl ChaosVector {
    pub fn zeros(n_blocks: usize, block_len: usize) -> Self {
        Self {
            blocks: vec![vec![0.0; block_len]; n_blocks],
        }
    }

    pub fn from_blocks(blocks: Vec<NodalVector>) -> Result<Self> {
        let Some(first) = blocks.first() else {
            return Err(Error::InvalidArgument(
                "block vector needs at least one block".into(),
            ));
        };
        let len = first.len();
        if len == 0 {
            return Err(Error::InvalidArgument("blocks must be nonempty".into()));
        }
        if blocks.iter().any(|b| b.len() != len) {
            return Err(Error::InvalidArgument(
                "all blocks must have the same length".into(),
            ));
        }
        Ok(Self { blocks })
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_len(&self) -> usize {
        self.blocks[0].len()
    }

    pub fn block(&self, k: usize) -> &[f64] {
        &self.blocks[k]
    }

    pub fn block_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.blocks[k]
    }

    pub fn blocks(&self) -> &[NodalVector] {
        &self.blocks
    }

    pub fn into_blocks(self) -> Vec<NodalVector> {
        self.blocks
    }

    /// Euclidean inner product over all blocks, summed in block order.
    pub fn dot(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.n_blocks(), other.n_blocks());
        let mut total = 0.0;
        for (a, b) in self.blocks.iter().zip(&other.blocks) {
            for (x, y) in a.iter().zip(b) {
                total += x * y;
            }
        }
        total
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// self += c * other.
    pub fn add_scaled(&mut self, c: f64, other: &Self) {
        debug_assert_eq!(self.n_blocks(), other.n_blocks());
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += c * y;
            }
        }
    }

    pub fn scale(&mut self, c: f64) {
        for b in &mut self.blocks {
            for x in b {
                *x *= c;
            }
        }
    }
}

#[derive(Debug)]
enum SampleMatrices {
    Stored(Vec<TridiagonalMatrix>),
    /// Re-assemble each A(y^(r)) on every apply instead of holding S
    /// matrices; trades repeated coefficient evaluation for O(1) matrix
    /// storage.
    OnTheFly {
        mesh: Mesh1D,
        model: CoefficientModel,
        samples: SampleSet,
        active: Vec<Vec<usize>>,
    },
}

/// Per-sample stiffness with support locality: every element sees only the
/// variables whose support touches it.
fn sample_stiffness(
    mesh: &Mesh1D,
    model: &CoefficientModel,
    active: &[Vec<usize>],
    y: &[f64],
) -> Result<TridiagonalMatrix> {
    assemble_stiffness_by_element(mesh, |k, x| model.kappa_active(&active[k], x, y))
}

fn validate_weights(weights: &[f64], s_count: usize) -> Result<()> {
    if weights.len() != s_count {
        return Err(Error::InvalidArgument(format!(
            "{} weights for {s_count} samples",
            weights.len()
        )));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidArgument(
            "weights must be finite and nonnegative".into(),
        ));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidArgument(format!(
            "weights sum to {sum}, expected 1"
        )));
    }
    Ok(())
}

/// Evaluation matrix Z together with the per-element active-variable lists.
type AssemblyPrep = (Vec<Vec<f64>>, Vec<Vec<usize>>);

/// The assembled chaos system. Holds the S per-sample stiffness matrices
/// (or the recipe to rebuild them), the S x N2 evaluation matrix Z, and the
/// per-sample weights.
#[derive(Debug)]
pub struct KroneckerChaosOperator {
    matrices: SampleMatrices,
    z: Vec<Vec<f64>>,
    weights: Vec<f64>,
    n2: usize,
    n_dof: usize,
}

impl KroneckerChaosOperator {
    /// Assemble with uniform Monte Carlo weights 1/S.
    pub fn assemble(
        mesh: &Mesh1D,
        basis: &ChaosBasis,
        samples: &SampleSet,
        model: &CoefficientModel,
    ) -> Result<Self> {
        let weights = vec![1.0 / samples.len() as f64; samples.len()];
        Self::assemble_weighted(mesh, basis, samples, model, weights)
    }

    /// Assemble with explicit per-sample weights (quadrature weights for the
    /// collocation configuration). Weights must be nonnegative and sum to 1.
    pub fn assemble_weighted(
        mesh: &Mesh1D,
        basis: &ChaosBasis,
        samples: &SampleSet,
        model: &CoefficientModel,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let (z, active) = Self::prepare(mesh, basis, samples, model, &weights)?;
        let matrices = par_map_samples(samples.len(), |r| {
            sample_stiffness(mesh, model, &active, samples.sample(r)).map_err(|e| e.tag_sample(r))
        })?;
        Ok(Self {
            matrices: SampleMatrices::Stored(matrices),
            z,
            weights,
            n2: basis.dim(),
            n_dof: mesh.n_dof(),
        })
    }

    /// Assemble in low-memory mode: sample matrices are rebuilt on every
    /// apply. A dry run over all samples still validates the model up front.
    pub fn assemble_low_memory(
        mesh: &Mesh1D,
        basis: &ChaosBasis,
        samples: &SampleSet,
        model: &CoefficientModel,
    ) -> Result<Self> {
        let weights = vec![1.0 / samples.len() as f64; samples.len()];
        let (z, active) = Self::prepare(mesh, basis, samples, model, &weights)?;
        par_map_samples(samples.len(), |r| {
            sample_stiffness(mesh, model, &active, samples.sample(r))
                .map(|_| ())
                .map_err(|e| e.tag_sample(r))
        })?;
        Ok(Self {
            matrices: SampleMatrices::OnTheFly {
                mesh: mesh.clone(),
                model: model.clone(),
                samples: samples.clone(),
                active,
            },
            z,
            weights,
            n2: basis.dim(),
            n_dof: mesh.n_dof(),
        })
    }

    fn prepare(
        mesh: &Mesh1D,
        basis: &ChaosBasis,
        samples: &SampleSet,
        model: &CoefficientModel,
        weights: &[f64],
    ) -> Result<AssemblyPrep> {
        if samples.n_vars() != basis.n_vars() {
            return Err(Error::InvalidArgument(format!(
                "samples have {} variables, basis expects {}",
                samples.n_vars(),
                basis.n_vars()
            )));
        }
        if samples.n_vars() != model.n_vars() {
            return Err(Error::InvalidArgument(format!(
                "samples have {} variables, coefficient expects {}",
                samples.n_vars(),
                model.n_vars()
            )));
        }
        validate_weights(weights, samples.len())?;
        let z = basis.evaluation_matrix(samples)?;
        let active = model.active_variables_by_element(mesh);
        Ok((z, active))
    }

    /// Build directly from matrices and an evaluation matrix, with uniform
    /// weights. This is how Z = I configurations are injected.
    pub fn from_parts(matrices: Vec<TridiagonalMatrix>, z: Vec<Vec<f64>>) -> Result<Self> {
        let s = matrices.len();
        if s == 0 {
            return Err(Error::InvalidArgument("no sample matrices".into()));
        }
        let weights = vec![1.0 / s as f64; s];
        Self::from_parts_weighted(matrices, z, weights)
    }

    pub fn from_parts_weighted(
        matrices: Vec<TridiagonalMatrix>,
        z: Vec<Vec<f64>>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let s = matrices.len();
        if s == 0 {
            return Err(Error::InvalidArgument("no sample matrices".into()));
        }
        if z.len() != s {
            return Err(Error::InvalidArgument(format!(
                "evaluation matrix has {} rows for {s} samples",
                z.len()
            )));
        }
        let n_dof = matrices[0].dim();
        if n_dof == 0 || matrices.iter().any(|m| m.dim() != n_dof) {
            return Err(Error::InvalidArgument(
                "sample matrices must share a positive dimension".into(),
            ));
        }
        let n2 = z[0].len();
        if n2 == 0 || z.iter().any(|row| row.len() != n2) {
            return Err(Error::InvalidArgument(
                "evaluation matrix rows must share a positive width".into(),
            ));
        }
        validate_weights(&weights, s)?;
        Ok(Self {
            matrices: SampleMatrices::Stored(matrices),
            z,
            weights,
            n2,
            n_dof,
        })
    }

    pub fn s_count(&self) -> usize {
        self.z.len()
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn n_dof(&self) -> usize {
        self.n_dof
    }

    /// Total unknown count N2 * N_dof.
    pub fn dim(&self) -> usize {
        self.n2 * self.n_dof
    }

    pub fn z(&self) -> &[Vec<f64>] {
        &self.z
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_low_memory(&self) -> bool {
        matches!(self.matrices, SampleMatrices::OnTheFly { .. })
    }

    /// The stochastic Gram matrix Z^T W Z; diagonal with entries alpha! in
    /// the Gauss-Hermite collocation configuration.
    pub fn gram(&self) -> Vec<Vec<f64>> {
        let mut g = vec![vec![0.0; self.n2]; self.n2];
        for (r, row) in self.z.iter().enumerate() {
            let w = self.weights[r];
            for i in 0..self.n2 {
                let c = w * row[i];
                for j in 0..self.n2 {
                    g[i][j] += c * row[j];
                }
            }
        }
        g
    }

    fn sample_product(&self, r: usize, v: &[f64]) -> Result<Vec<f64>> {
        match &self.matrices {
            SampleMatrices::Stored(ms) => Ok(ms[r].apply(v)),
            SampleMatrices::OnTheFly {
                mesh,
                model,
                samples,
                active,
            } => {
                let a = sample_stiffness(mesh, model, active, samples.sample(r))
                    .map_err(|e| e.tag_sample(r))?;
                Ok(a.apply(v))
            }
        }
    }

    /// Matrix-free product: for each sample r combine the blocks with row r
    /// of Z, push through A(y^(r)), and redistribute with the same row. The
    /// reduction over r runs in a fixed order so repeated calls are
    /// bit-identical regardless of thread count.
    pub fn apply(&self, u: &ChaosVector) -> Result<ChaosVector> {
        if u.n_blocks() != self.n2 || u.block_len() != self.n_dof {
            return Err(Error::InvalidArgument(format!(
                "vector shape {}x{} does not match operator {}x{}",
                u.n_blocks(),
                u.block_len(),
                self.n2,
                self.n_dof
            )));
        }
        let s = self.s_count();
        let per_sample = |r: usize| -> Result<Vec<f64>> {
            let zr = &self.z[r];
            let mut collapsed = vec![0.0; self.n_dof];
            for (i, block) in u.blocks().iter().enumerate() {
                let c = zr[i];
                if c != 0.0 {
                    for (acc, &v) in collapsed.iter_mut().zip(block) {
                        *acc += c * v;
                    }
                }
            }
            let mut t = self.sample_product(r, &collapsed)?;
            let w = self.weights[r];
            for v in &mut t {
                *v *= w;
            }
            Ok(t)
        };
        let parallel = s * self.n_dof >= PARALLEL_CUTOFF;
        let t: Vec<Vec<f64>> = if parallel {
            (0..s)
                .into_par_iter()
                .map(per_sample)
                .collect::<Result<_>>()?
        } else {
            (0..s).map(per_sample).collect::<Result<_>>()?
        };
        let gather = |j: usize| -> Vec<f64> {
            let mut out = vec![0.0; self.n_dof];
            for (r, tr) in t.iter().enumerate() {
                let c = self.z[r][j];
                if c != 0.0 {
                    for (acc, &v) in out.iter_mut().zip(tr) {
                        *acc += c * v;
                    }
                }
            }
            out
        };
        let blocks: Vec<Vec<f64>> = if parallel && self.n2 > 1 {
            (0..self.n2).into_par_iter().map(gather).collect()
        } else {
            (0..self.n2).map(gather).collect()
        };
        ChaosVector::from_blocks(blocks)
    }

    /// Explicit dense system matrix, for small cross-checks only. Block
    /// (i, j) is sum_r w_r z_ri z_rj A(y^(r)).
    pub fn densify(&self) -> Result<Vec<Vec<f64>>> {
        let dim = self.dim();
        if dim > 5000 {
            return Err(Error::InvalidArgument(format!(
                "refusing to densify a {dim}-unknown system (limit 5000)"
            )));
        }
        let mut dense = vec![vec![0.0; dim]; dim];
        for r in 0..self.s_count() {
            let a = match &self.matrices {
                SampleMatrices::Stored(ms) => ms[r].clone(),
                SampleMatrices::OnTheFly {
                    mesh,
                    model,
                    samples,
                    active,
                } => sample_stiffness(mesh, model, active, samples.sample(r))
                    .map_err(|e| e.tag_sample(r))?,
            };
            let w = self.weights[r];
            for i2 in 0..self.n2 {
                for j2 in 0..self.n2 {
                    let c = w * self.z[r][i2] * self.z[r][j2];
                    if c == 0.0 {
                        continue;
                    }
                    for k in 0..self.n_dof {
                        dense[i2 * self.n_dof + k][j2 * self.n_dof + k] += c * a.diag()[k];
                        if k + 1 < self.n_dof {
                            dense[i2 * self.n_dof + k][j2 * self.n_dof + k + 1] +=
                                c * a.off_diag()[k];
                            dense[i2 * self.n_dof + k + 1][j2 * self.n_dof + k] +=
                                c * a.off_diag()[k];
                        }
                    }
                }
            }
        }
        Ok(dense)
    }
}

pub(crate) fn par_map_samples<T, F>(s: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    if s >= 64 {
        (0..s).into_par_iter().map(f).collect()
    } else {
        (0..s).map(f).collect()
    }
}

/// Right-hand side blocks: block j = sum_r w_r z_rj F(y^(r)) with uniform
/// weights.
pub fn assemble_rhs(
    mesh: &Mesh1D,
    basis: &ChaosBasis,
    samples: &SampleSet,
    forcing: &ForcingModel,
) -> Result<ChaosVector> {
    let weights = vec![1.0 / samples.len() as f64; samples.len()];
    assemble_rhs_weighted(mesh, basis, samples, forcing, &weights)
}

pub fn assemble_rhs_weighted(
    mesh: &Mesh1D,
    basis: &ChaosBasis,
    samples: &SampleSet,
    forcing: &ForcingModel,
    weights: &[f64],
) -> Result<ChaosVector> {
    if samples.n_vars() != basis.n_vars() {
        return Err(Error::InvalidArgument(format!(
            "samples have {} variables, basis expects {}",
            samples.n_vars(),
            basis.n_vars()
        )));
    }
    if samples.n_vars() != forcing.n_vars() {
        return Err(Error::InvalidArgument(format!(
            "samples have {} variables, forcing expects {}",
            samples.n_vars(),
            forcing.n_vars()
        )));
    }
    validate_weights(weights, samples.len())?;
    let z = basis.evaluation_matrix(samples)?;
    let loads = par_map_samples(samples.len(), |r| {
        assemble_load(mesh, |x| forcing.eval_unchecked(x, samples.sample(r)))
            .map_err(|e| e.tag_sample(r))
    })?;
    let n_dof = mesh.n_dof();
    let blocks: Vec<Vec<f64>> = (0..basis.dim())
        .map(|j| {
            let mut out = vec![0.0; n_dof];
            for (r, load) in loads.iter().enumerate() {
                let c = weights[r] * z[r][j];
                if c != 0.0 {
                    for (acc, &v) in out.iter_mut().zip(load) {
                        *acc += c * v;
                    }
                }
            }
            out
        })
        .collect();
    ChaosVector::from_blocks(blocks)
}

/// A solved coefficient field together with the mesh and basis that give its
/// blocks meaning.
#[derive(Clone)]
pub struct ChaosSolution {
    vector: ChaosVector,
    mesh: Mesh1D,
    basis: ChaosBasis,
}

impl ChaosSolution {
    pub fn new(vector: ChaosVector, mesh: Mesh1D, basis: ChaosBasis) -> Result<Self> {
        if vector.n_blocks() != basis.dim() || vector.block_len() != mesh.n_dof() {
            return Err(Error::InvalidArgument(format!(
                "solution shape {}x{} does not match basis dim {} and mesh dofs {}",
                vector.n_blocks(),
                vector.block_len(),
                basis.dim(),
                mesh.n_dof()
            )));
        }
        Ok(Self {
            vector,
            mesh,
            basis,
        })
    }

    pub fn vector(&self) -> &ChaosVector {
        &self.vector
    }

    pub fn into_vector(self) -> ChaosVector {
        self.vector
    }

    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    pub fn basis(&self) -> &ChaosBasis {
        &self.basis
    }

    pub fn block(&self, k: usize) -> &[f64] {
        self.vector.block(k)
    }

    /// The mean field is the coefficient of the constant basis member, so it
    /// is only defined for bases whose member 0 is the constant 1. Cardinal
    /// bases have no constant member; average their blocks instead.
    pub fn mean_field(&self) -> Result<NodalVector> {
        if !self.basis.has_constant_first() {
            return Err(Error::UnsupportedBasis(
                "basis has no constant member; the mean is not a single block".into(),
            ));
        }
        Ok(self.vector.block(0).to_vec())
    }
}
