//! Stochastic inputs: seeded sampling of the Gaussian vector y, CSV exchange
//! of sample sets, and the coefficient / forcing models. The coefficient is
//! either log-affine, kappa(x, y) = exp(sum_i a_i(x) y_i) with declared
//! support intervals per term, or a general positive callable.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::fem::Mesh1D;

/// S draws of y = (y_1, ..., y_N), stored row-major (sample-major).
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    n_vars: usize,
    values: Vec<f64>,
    seed: Option<u64>,
}

impl SampleSet {
    /// S x N i.i.d. standard-normal draws. The stream is a ChaCha12 generator
    /// seeded via `seed_from_u64`, transformed by the ziggurat sampler, and
    /// consumed sample-major: growing S under a fixed seed extends the
    /// earlier samples instead of reshuffling them.
    pub fn draw(seed: u64, s_count: usize, n_vars: usize) -> Result<Self> {
        if s_count == 0 {
            return Err(Error::InvalidArgument(
                "sample count must be positive".into(),
            ));
        }
        if n_vars == 0 {
            return Err(Error::InvalidArgument(
                "number of variables must be positive".into(),
            ));
        }
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let values = (0..s_count * n_vars)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        Ok(Self {
            n_vars,
            values,
            seed: Some(seed),
        })
    }

    /// Wrap explicit sample rows (all the same width, finite entries).
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::InvalidArgument("sample set must be nonempty".into()));
        };
        let n_vars = first.len();
        if n_vars == 0 {
            return Err(Error::InvalidArgument(
                "samples must have at least one variable".into(),
            ));
        }
        let mut values = Vec::with_capacity(rows.len() * n_vars);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n_vars {
                return Err(Error::InvalidArgument(format!(
                    "sample {r} has {} entries, expected {n_vars}",
                    row.len()
                )));
            }
            if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "sample {r} contains non-finite value {bad}"
                )));
            }
            values.extend_from_slice(row);
        }
        Ok(Self {
            n_vars,
            values,
            seed: None,
        })
    }

    /// Read samples from the CSV exchange format: header line `y1,...,yN`,
    /// then one row of N decimal floats per sample.
    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path)?;
        Self::parse_csv(BufReader::new(file))
    }

    pub fn parse_csv(reader: impl BufRead) -> Result<Self> {
        let mut n_vars = 0usize;
        let mut values: Vec<f64> = Vec::new();
        let mut rows = 0usize;
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let line_no = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if line_no == 1 {
                let names: Vec<&str> = trimmed.split(',').map(str::trim).collect();
                for (i, name) in names.iter().enumerate() {
                    if *name != format!("y{}", i + 1) {
                        return Err(Error::Parse {
                            line: 1,
                            reason: format!(
                                "header column {} is {name:?}, expected \"y{}\"",
                                i + 1,
                                i + 1
                            ),
                        });
                    }
                }
                n_vars = names.len();
                continue;
            }
            if n_vars == 0 {
                return Err(Error::Parse {
                    line: line_no,
                    reason: "missing header line".into(),
                });
            }
            let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if fields.len() != n_vars {
                return Err(Error::Parse {
                    line: line_no,
                    reason: format!("{} columns, expected {n_vars}", fields.len()),
                });
            }
            for field in fields {
                let v: f64 = field.parse().map_err(|_| Error::Parse {
                    line: line_no,
                    reason: format!("cannot parse {field:?} as a number"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        line: line_no,
                        reason: format!("non-finite value {field:?}"),
                    });
                }
                values.push(v);
            }
            rows += 1;
        }
        if n_vars == 0 {
            return Err(Error::Parse {
                line: 1,
                reason: "empty file".into(),
            });
        }
        if rows == 0 {
            return Err(Error::Parse {
                line: 1,
                reason: "no sample rows after the header".into(),
            });
        }
        Ok(Self {
            n_vars,
            values,
            seed: None,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path)?;
        let mut w = BufWriter::new(file);
        self.write_csv(&mut w)
    }

    /// Values print in shortest round-trip form, so save then load is exact.
    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        let header: Vec<String> = (1..=self.n_vars).map(|i| format!("y{i}")).collect();
        writeln!(w, "{}", header.join(","))?;
        for r in 0..self.len() {
            let row: Vec<String> = self.sample(r).iter().map(|v| format!("{v}")).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.n_vars
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    /// Seed used to draw the set; absent for loaded or hand-built sets.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn sample(&self, r: usize) -> &[f64] {
        &self.values[r * self.n_vars..(r + 1) * self.n_vars]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// One term a_i(x) of a log-affine coefficient, with its declared support.
#[derive(Debug, Clone, PartialEq)]
pub enum TermProfile {
    /// a(x) = amplitude * sin(x) on all of [0, 1].
    Sin { amplitude: f64 },
    /// a(x) = amplitude * cos(x) on all of [0, 1].
    Cos { amplitude: f64 },
    /// Quadratic bump amplitude * 4 (x - lo)(hi - x) / (hi - lo)^2 on
    /// [lo, hi], zero outside.
    Bump { amplitude: f64, lo: f64, hi: f64 },
}

impl TermProfile {
    fn validate(&self) -> Result<()> {
        match self {
            TermProfile::Sin { amplitude } | TermProfile::Cos { amplitude } => {
                if !amplitude.is_finite() {
                    return Err(Error::InvalidArgument(
                        "profile amplitude must be finite".into(),
                    ));
                }
            }
            TermProfile::Bump { amplitude, lo, hi } => {
                if !amplitude.is_finite() {
                    return Err(Error::InvalidArgument(
                        "profile amplitude must be finite".into(),
                    ));
                }
                if !(0.0..=1.0).contains(lo) || !(0.0..=1.0).contains(hi) || lo >= hi {
                    return Err(Error::InvalidArgument(format!(
                        "bump support [{lo}, {hi}] must satisfy 0 <= lo < hi <= 1"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            TermProfile::Sin { amplitude } => amplitude * x.sin(),
            TermProfile::Cos { amplitude } => amplitude * x.cos(),
            TermProfile::Bump { amplitude, lo, hi } => {
                if x < *lo || x > *hi {
                    0.0
                } else {
                    let width = hi - lo;
                    amplitude * 4.0 * (x - lo) * (hi - x) / (width * width)
                }
            }
        }
    }

    /// Declared (closed) support interval.
    pub fn support(&self) -> (f64, f64) {
        match self {
            TermProfile::Sin { .. } | TermProfile::Cos { .. } => (0.0, 1.0),
            TermProfile::Bump { lo, hi, .. } => (*lo, *hi),
        }
    }
}

type KappaFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum CoeffKind {
    LogAffine { profiles: Vec<TermProfile> },
    General { n_vars: usize, kappa: KappaFn },
}

/// The random coefficient kappa(x, y). Log-affine models are strictly
/// positive by construction and carry per-term support metadata; general
/// callables are assumed strictly positive by the caller.
#[derive(Clone)]
pub struct CoefficientModel {
    kind: CoeffKind,
}

impl fmt::Debug for CoefficientModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            CoeffKind::LogAffine { profiles } => f
                .debug_struct("CoefficientModel")
                .field("profiles", profiles)
                .finish(),
            CoeffKind::General { n_vars, .. } => f
                .debug_struct("CoefficientModel")
                .field("general_n_vars", n_vars)
                .finish(),
        }
    }
}

impl CoefficientModel {
    /// kappa(x, y) = exp(sum_i a_i(x) y_i) with one profile per variable.
    pub fn log_affine(profiles: Vec<TermProfile>) -> Result<Self> {
        if profiles.is_empty() {
            return Err(Error::InvalidArgument(
                "log-affine model needs at least one profile".into(),
            ));
        }
        for p in &profiles {
            p.validate()?;
        }
        Ok(Self {
            kind: CoeffKind::LogAffine { profiles },
        })
    }

    /// Arbitrary coefficient callable. Must be strictly positive on
    /// [0, 1] x R^N for the solves to stay well-posed; supports are treated
    /// as all of [0, 1].
    pub fn general<F>(n_vars: usize, kappa: F) -> Result<Self>
    where
        F: Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
    {
        if n_vars == 0 {
            return Err(Error::InvalidArgument(
                "coefficient needs at least one variable".into(),
            ));
        }
        Ok(Self {
            kind: CoeffKind::General {
                n_vars,
                kappa: Arc::new(kappa),
            },
        })
    }

    pub fn n_vars(&self) -> usize {
        match &self.kind {
            CoeffKind::LogAffine { profiles } => profiles.len(),
            CoeffKind::General { n_vars, .. } => *n_vars,
        }
    }

    pub fn profiles(&self) -> Option<&[TermProfile]> {
        match &self.kind {
            CoeffKind::LogAffine { profiles } => Some(profiles),
            CoeffKind::General { .. } => None,
        }
    }

    /// kappa(x, y), checking arity and finiteness.
    pub fn kappa(&self, x: f64, y: &[f64]) -> Result<f64> {
        if y.len() != self.n_vars() {
            return Err(Error::Evaluation(format!(
                "point has {} coordinates, coefficient expects {}",
                y.len(),
                self.n_vars()
            )));
        }
        let v = self.kappa_unchecked(x, y);
        if !v.is_finite() {
            return Err(Error::Evaluation(format!(
                "coefficient is non-finite at x = {x}"
            )));
        }
        Ok(v)
    }

    pub(crate) fn kappa_unchecked(&self, x: f64, y: &[f64]) -> f64 {
        match &self.kind {
            CoeffKind::LogAffine { profiles } => {
                let mut exponent = 0.0;
                for (p, yi) in profiles.iter().zip(y) {
                    exponent += p.value(x) * yi;
                }
                exponent.exp()
            }
            CoeffKind::General { kappa, .. } => kappa(x, y),
        }
    }

    /// kappa restricted to the variables active on one element. Inactive
    /// profiles vanish at the evaluation point, so skipping them changes
    /// nothing but the work done.
    pub(crate) fn kappa_active(&self, active: &[usize], x: f64, y: &[f64]) -> f64 {
        match &self.kind {
            CoeffKind::LogAffine { profiles } => {
                let mut exponent = 0.0;
                for &i in active {
                    exponent += profiles[i].value(x) * y[i];
                }
                exponent.exp()
            }
            CoeffKind::General { kappa, .. } => kappa(x, y),
        }
    }

    /// For each variable, the elements its support intersects. Elements are
    /// taken left-open: the support must reach past an element's left node to
    /// count, while a support ending exactly on a left node stops there.
    /// General models report every element for every variable.
    pub fn support_elements(&self, mesh: &Mesh1D) -> Vec<Vec<usize>> {
        let all: Vec<usize> = (0..mesh.n_elements()).collect();
        match &self.kind {
            CoeffKind::General { n_vars, .. } => vec![all; *n_vars],
            CoeffKind::LogAffine { profiles } => profiles
                .iter()
                .map(|p| {
                    let (lo, hi) = p.support();
                    (0..mesh.n_elements())
                        .filter(|&k| {
                            let (a, b) = mesh.element_bounds(k);
                            hi > a && lo <= b
                        })
                        .collect()
                })
                .collect(),
        }
    }

    /// Inversion of [`Self::support_elements`]: for each element, the
    /// variables whose support touches it.
    pub fn active_variables_by_element(&self, mesh: &Mesh1D) -> Vec<Vec<usize>> {
        let mut by_element = vec![Vec::new(); mesh.n_elements()];
        for (var, elements) in self.support_elements(mesh).into_iter().enumerate() {
            for k in elements {
                by_element[k].push(var);
            }
        }
        by_element
    }
}

type ForcingFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

/// The forcing f(x, y).
#[derive(Clone)]
pub struct ForcingModel {
    n_vars: usize,
    f: ForcingFn,
}

impl fmt::Debug for ForcingModel {
    fn fmt(&self, fmt: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt.debug_struct("ForcingModel")
            .field("n_vars", &self.n_vars)
            .finish()
    }
}

impl ForcingModel {
    pub fn new<F>(n_vars: usize, f: F) -> Result<Self>
    where
        F: Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
    {
        if n_vars == 0 {
            return Err(Error::InvalidArgument(
                "forcing needs at least one variable".into(),
            ));
        }
        Ok(Self {
            n_vars,
            f: Arc::new(f),
        })
    }

    pub fn constant(n_vars: usize, value: f64) -> Result<Self> {
        Self::new(n_vars, move |_, _| value)
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn eval(&self, x: f64, y: &[f64]) -> Result<f64> {
        if y.len() != self.n_vars {
            return Err(Error::Evaluation(format!(
                "point has {} coordinates, forcing expects {}",
                y.len(),
                self.n_vars
            )));
        }
        Ok((self.f)(x, y))
    }

    pub(crate) fn eval_unchecked(&self, x: f64, y: &[f64]) -> f64 {
        (self.f)(x, y)
    }
}
