//! Chaos bases over Gaussian variables: probabilists' Hermite polynomials
//! (unnormalized by default, with an orthonormal variant), Gauss-Hermite
//! quadrature rules for the standard normal weight, total-degree multi-index
//! sets, and a single-variable Lagrange basis on prescribed nodes.

use crate::error::{Error, Result};
use crate::field::SampleSet;

/// Probabilists' Hermite polynomial He_n(y) by the three-term recurrence
/// He_{n+1} = y He_n - n He_{n-1}.
pub fn hermite(n: usize, y: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = y;
    for k in 1..n {
        let next = y * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// He_0(y), ..., He_max(y) in one recurrence pass.
pub fn hermite_all(max_degree: usize, y: f64) -> Vec<f64> {
    let mut vals = Vec::with_capacity(max_degree + 1);
    vals.push(1.0);
    if max_degree == 0 {
        return vals;
    }
    vals.push(y);
    for k in 1..max_degree {
        let next = y * vals[k] - k as f64 * vals[k - 1];
        vals.push(next);
    }
    vals
}

/// d/dy He_n(y) = n He_{n-1}(y).
pub fn hermite_derivative(n: usize, y: f64) -> f64 {
    if n == 0 {
        0.0
    } else {
        n as f64 * hermite(n - 1, y)
    }
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Nodes and weights of the n-point Gauss-Hermite rule for the standard
/// normal weight, so sum w_k g(x_k) approximates E[g(Y)] and the weights sum
/// to one. Exact for polynomials of degree at most 2n - 1.
///
/// Nodes are the roots of He_n, found by safeguarded Newton iteration inside
/// interlacing brackets built up degree by degree; weights follow from
/// w_k = n! / (n He_{n-1}(x_k))^2 * n.
pub fn gauss_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "quadrature rule needs at least one node".into(),
        ));
    }
    let mut roots: Vec<f64> = Vec::new();
    for k in 1..=n {
        // All roots of He_k lie strictly inside (-bound, bound), and the
        // roots of He_{k-1} interlace them, so consecutive bracket points
        // give He_k opposite signs.
        let bound = (4.0 * k as f64 + 2.0).sqrt();
        let mut brackets = Vec::with_capacity(k + 1);
        brackets.push(-bound);
        brackets.extend_from_slice(&roots);
        brackets.push(bound);
        let mut next = Vec::with_capacity(k);
        for i in 0..k {
            next.push(refine_root(k, brackets[i], brackets[i + 1])?);
        }
        // Roots come in +- pairs; enforce the symmetry exactly.
        let m = next.len();
        for i in 0..m / 2 {
            let s = 0.5 * (next[i] - next[m - 1 - i]);
            next[i] = s;
            next[m - 1 - i] = -s;
        }
        if m % 2 == 1 {
            next[m / 2] = 0.0;
        }
        roots = next;
    }
    let nf = n as f64;
    let weights: Vec<f64> = roots
        .iter()
        .map(|&x| factorial(n) / (nf * nf * hermite(n - 1, x).powi(2)))
        .collect();
    Ok((roots, weights))
}

/// Newton iteration for the root of He_k in (lo, hi), falling back to
/// bisection whenever the Newton step leaves the bracket.
fn refine_root(k: usize, mut lo: f64, mut hi: f64) -> Result<f64> {
    let sign_lo = hermite(k, lo) > 0.0;
    let mut x = 0.5 * (lo + hi);
    for _ in 0..100 {
        let f = hermite(k, x);
        if f == 0.0 {
            return Ok(x);
        }
        if (f > 0.0) == sign_lo {
            lo = x;
        } else {
            hi = x;
        }
        let df = hermite_derivative(k, x);
        let mut next = if df != 0.0 { x - f / df } else { x };
        if !(lo < next && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-14 * (1.0 + x.abs()) {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::Numerical(format!(
        "quadrature node for degree {k} did not converge near {x:.6}"
    )))
}

/// Exponent vector of one multivariate chaos polynomial.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(alpha: Vec<usize>) -> Self {
        Self(alpha)
    }

    pub fn components(&self) -> &[usize] {
        &self.0
    }

    pub fn n_vars(&self) -> usize {
        self.0.len()
    }

    /// Total degree: the component sum.
    pub fn degree(&self) -> usize {
        self.0.iter().sum()
    }

    /// E[(product of He_{alpha_i})^2] = product of alpha_i!.
    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|&a| factorial(a)).product()
    }
}

/// All multi-indices over `n_vars` variables with total degree at most
/// `max_degree`, in graded order; within a degree the first coordinate
/// descends, so lexicographically later indices shift weight rightward.
pub fn total_degree_indices(n_vars: usize, max_degree: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(n_vars);
    for d in 0..=max_degree {
        push_compositions(d, n_vars, &mut prefix, &mut out);
    }
    out
}

fn push_compositions(
    d: usize,
    vars_left: usize,
    prefix: &mut Vec<usize>,
    out: &mut Vec<MultiIndex>,
) {
    if vars_left == 1 {
        prefix.push(d);
        out.push(MultiIndex(prefix.clone()));
        prefix.pop();
        return;
    }
    for a in (0..=d).rev() {
        prefix.push(a);
        push_compositions(d - a, vars_left - 1, prefix, out);
        prefix.pop();
    }
}

/// All multi-indices with per-variable caps alpha_i <= caps[i] (the tensor
/// set), in the same graded order as [`total_degree_indices`].
pub fn tensor_indices(caps: &[usize]) -> Vec<MultiIndex> {
    let total: usize = caps.iter().sum();
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(caps.len());
    for d in 0..=total {
        push_bounded_compositions(d, caps, &mut prefix, &mut out);
    }
    out
}

fn push_bounded_compositions(
    d: usize,
    caps: &[usize],
    prefix: &mut Vec<usize>,
    out: &mut Vec<MultiIndex>,
) {
    if caps.len() == 1 {
        if d <= caps[0] {
            prefix.push(d);
            out.push(MultiIndex(prefix.clone()));
            prefix.pop();
        }
        return;
    }
    let rest: usize = caps[1..].iter().sum();
    let hi = d.min(caps[0]);
    let lo = d.saturating_sub(rest);
    for a in (lo..=hi).rev() {
        prefix.push(a);
        push_bounded_compositions(d - a, &caps[1..], prefix, out);
        prefix.pop();
    }
}

/// Full tensor grid of 1D Gauss-Hermite rules: q^n_vars samples with product
/// weights. The weights sum to one and make the tensor-Hermite Gram diagonal.
pub fn collocation_grid(n_vars: usize, nodes_per_dim: usize) -> Result<(SampleSet, Vec<f64>)> {
    if n_vars == 0 {
        return Err(Error::InvalidArgument(
            "collocation grid needs at least one variable".into(),
        ));
    }
    let (nodes, w1) = gauss_hermite(nodes_per_dim)?;
    let total = nodes_per_dim.pow(n_vars as u32);
    let mut rows = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    // Row-major enumeration: the last variable cycles fastest.
    for flat in 0..total {
        let mut row = vec![0.0; n_vars];
        let mut w = 1.0;
        let mut rem = flat;
        for dim in (0..n_vars).rev() {
            let k = rem % nodes_per_dim;
            rem /= nodes_per_dim;
            row[dim] = nodes[k];
            w *= w1[k];
        }
        rows.push(row);
        weights.push(w);
    }
    Ok((SampleSet::from_rows(rows)?, weights))
}

#[derive(Debug, Clone)]
enum BasisKind {
    Hermite {
        n_vars: usize,
        /// Largest total degree among the indices.
        max_degree: usize,
        /// Largest single-variable degree, sizing the recurrence tables.
        table_degree: usize,
        indices: Vec<MultiIndex>,
        orthonormal: bool,
    },
    /// Cardinal interpolation basis on distinct nodes; one variable only.
    Lagrange { nodes: Vec<f64> },
}

/// A finite basis of the stochastic trial space. Evaluating every member at
/// every sample produces the matrix Z that couples the finite element blocks.
#[derive(Debug, Clone)]
pub struct ChaosBasis {
    kind: BasisKind,
}

impl ChaosBasis {
    /// Total-degree Hermite basis, unnormalized (He_alpha as products of the
    /// monic polynomials). The constant polynomial is member 0.
    pub fn hermite(n_vars: usize, max_degree: usize) -> Result<Self> {
        if n_vars == 0 {
            return Err(Error::InvalidArgument(
                "basis needs at least one variable".into(),
            ));
        }
        Self::from_indices(n_vars, total_degree_indices(n_vars, max_degree), false)
    }

    /// Hermite basis scaled so every member has unit second moment.
    pub fn hermite_orthonormal(n_vars: usize, max_degree: usize) -> Result<Self> {
        if n_vars == 0 {
            return Err(Error::InvalidArgument(
                "basis needs at least one variable".into(),
            ));
        }
        Self::from_indices(n_vars, total_degree_indices(n_vars, max_degree), true)
    }

    /// Tensor Hermite basis with per-variable degree caps; q^N members for
    /// uniform caps q - 1, matching a q-point collocation grid per variable.
    pub fn tensor_hermite(caps: Vec<usize>) -> Result<Self> {
        if caps.is_empty() {
            return Err(Error::InvalidArgument(
                "basis needs at least one variable".into(),
            ));
        }
        let n_vars = caps.len();
        Self::from_indices(n_vars, tensor_indices(&caps), false)
    }

    fn from_indices(n_vars: usize, indices: Vec<MultiIndex>, orthonormal: bool) -> Result<Self> {
        let max_degree = indices.iter().map(MultiIndex::degree).max().unwrap_or(0);
        let table_degree = indices
            .iter()
            .flat_map(|i| i.components().iter().copied())
            .max()
            .unwrap_or(0);
        Ok(Self {
            kind: BasisKind::Hermite {
                n_vars,
                max_degree,
                table_degree,
                indices,
                orthonormal,
            },
        })
    }

    /// Lagrange cardinal basis on the given nodes. Single variable only; on
    /// its own nodes the evaluation matrix is the identity, which decouples
    /// the chaos system into independent per-sample solves.
    pub fn lagrange(nodes: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidArgument(
                "interpolation basis needs at least one node".into(),
            ));
        }
        if nodes.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(
                "interpolation nodes must be finite".into(),
            ));
        }
        let mut sorted = nodes.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(
                "interpolation nodes must be distinct".into(),
            ));
        }
        Ok(Self {
            kind: BasisKind::Lagrange { nodes },
        })
    }

    /// Number of basis members.
    pub fn dim(&self) -> usize {
        match &self.kind {
            BasisKind::Hermite { indices, .. } => indices.len(),
            BasisKind::Lagrange { nodes } => nodes.len(),
        }
    }

    pub fn n_vars(&self) -> usize {
        match &self.kind {
            BasisKind::Hermite { n_vars, .. } => *n_vars,
            BasisKind::Lagrange { .. } => 1,
        }
    }

    /// Maximum total degree for a polynomial basis.
    pub fn max_degree(&self) -> Option<usize> {
        match &self.kind {
            BasisKind::Hermite { max_degree, .. } => Some(*max_degree),
            BasisKind::Lagrange { .. } => None,
        }
    }

    pub fn indices(&self) -> Option<&[MultiIndex]> {
        match &self.kind {
            BasisKind::Hermite { indices, .. } => Some(indices),
            BasisKind::Lagrange { .. } => None,
        }
    }

    pub fn is_orthonormal(&self) -> bool {
        matches!(
            self.kind,
            BasisKind::Hermite {
                orthonormal: true,
                ..
            }
        )
    }

    /// Second moment of member `k` under the standard Gaussian measure.
    pub fn norm_sq(&self, k: usize) -> f64 {
        match &self.kind {
            BasisKind::Hermite {
                indices,
                orthonormal,
                ..
            } => {
                if *orthonormal {
                    1.0
                } else {
                    indices[k].norm_sq()
                }
            }
            BasisKind::Lagrange { .. } => 1.0,
        }
    }

    /// True when member 0 is the constant 1, so the first solution block is
    /// directly the mean.
    pub fn has_constant_first(&self) -> bool {
        matches!(self.kind, BasisKind::Hermite { .. })
    }

    /// Values of every basis member at the point `y`.
    pub fn evaluate(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.n_vars() {
            return Err(Error::Evaluation(format!(
                "point has {} coordinates, basis expects {}",
                y.len(),
                self.n_vars()
            )));
        }
        match &self.kind {
            BasisKind::Hermite {
                table_degree,
                indices,
                orthonormal,
                ..
            } => {
                let tables: Vec<Vec<f64>> =
                    y.iter().map(|&yi| hermite_all(*table_degree, yi)).collect();
                let mut vals = Vec::with_capacity(indices.len());
                for idx in indices {
                    let mut v = 1.0;
                    for (dim, &a) in idx.components().iter().enumerate() {
                        v *= tables[dim][a];
                    }
                    if *orthonormal {
                        v /= idx.norm_sq().sqrt();
                    }
                    vals.push(v);
                }
                Ok(vals)
            }
            BasisKind::Lagrange { nodes } => {
                let t = y[0];
                let mut vals = Vec::with_capacity(nodes.len());
                for (j, &xj) in nodes.iter().enumerate() {
                    let mut v = 1.0;
                    for (k, &xk) in nodes.iter().enumerate() {
                        if k != j {
                            v *= (t - xk) / (xj - xk);
                        }
                    }
                    vals.push(v);
                }
                Ok(vals)
            }
        }
    }

    /// The S x dim matrix Z with Z[r][k] = member k at sample r. Non-finite
    /// values (overflow at extreme samples and degrees) are surfaced, never
    /// carried into the system.
    pub fn evaluation_matrix(&self, samples: &SampleSet) -> Result<Vec<Vec<f64>>> {
        if samples.n_vars() != self.n_vars() {
            return Err(Error::Evaluation(format!(
                "samples have {} variables, basis expects {}",
                samples.n_vars(),
                self.n_vars()
            )));
        }
        let mut z = Vec::with_capacity(samples.len());
        for r in 0..samples.len() {
            let row = self.evaluate(samples.sample(r))?;
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::Evaluation(format!(
                    "basis member {j} is non-finite at sample {r}"
                )));
            }
            z.push(row);
        }
        Ok(z)
    }
}
