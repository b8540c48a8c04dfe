//! Dense collocation matrix of the truncated Hilbert transform.
//!
//! Target points sit on `[a1, a3]` shifted by half a step, source points on
//! `[a2, a4]`. For the default 601x901 grid no target point meets a source point;
//! grid sizes for which one does are rejected.

use std::io::Write;
use std::sync::Arc;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::dd::{self, DD};
use crate::geometry::EndpointConfig;
use crate::registry::{Named, Registry};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HilbertError {
    #[error("grid needs at least 2 points and a positive step (count {count}, step {step})")]
    DegenerateGrid { count: usize, step: f64 },
    #[error("vector of length {got} does not match {expected} columns")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("target point {i} coincides with source point {j}; choose other grid sizes")]
    CoincidentPoints { i: usize, j: usize },
    #[error("unknown kernel '{0}'")]
    UnknownKernel(String),
}

/// Uniform grid `start + i*step`, `i = 0..count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledGrid {
    pub start: f64,
    pub step: f64,
    pub count: usize,
}

impl SampledGrid {
    pub fn point(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.point(i)).collect()
    }
}

/// Grid construction in double-double, used when entries must be exact to
/// well below double rounding.
#[derive(Debug, Clone, Copy)]
struct GridDD {
    start: DD,
    step: DD,
}

impl GridDD {
    fn point(&self, i: usize) -> DD {
        self.start + self.step.mul_f64(i as f64)
    }
}

/// One way of turning the principal-value kernel into matrix entries.
pub trait KernelScheme: Named + Send + Sync {
    /// Entry for target `x`, source `y`, source weight `h`.
    fn entry(&self, x: f64, y: f64, h: f64) -> f64;
    fn entry_dd(&self, x: DD, y: DD, h: DD) -> DD;
}

/// `h / (pi (y - x))`: midpoint collocation of `(1/pi) p.v. int f(y)/(y-x) dy`.
pub struct Midpoint;

impl Named for Midpoint {
    fn name(&self) -> &'static str {
        "midpoint"
    }
    fn description(&self) -> &'static str {
        "h/(pi (y - x)) on half-step shifted target points"
    }
}

impl KernelScheme for Midpoint {
    fn entry(&self, x: f64, y: f64, h: f64) -> f64 {
        h / (std::f64::consts::PI * (y - x))
    }
    fn entry_dd(&self, x: DD, y: DD, h: DD) -> DD {
        h / (dd::PI * (y - x))
    }
}

/// Midpoint kernel with the opposite sign convention. Singular values are
/// unchanged; the pairing of left and right vectors flips.
pub struct FlippedSign;

impl Named for FlippedSign {
    fn name(&self) -> &'static str {
        "flipped-sign"
    }
    fn description(&self) -> &'static str {
        "h/(pi (x - y)); debugging aid"
    }
}

impl KernelScheme for FlippedSign {
    fn entry(&self, x: f64, y: f64, h: f64) -> f64 {
        -Midpoint.entry(x, y, h)
    }
    fn entry_dd(&self, x: DD, y: DD, h: DD) -> DD {
        -Midpoint.entry_dd(x, y, h)
    }
}

pub fn kernel_registry() -> Registry<dyn KernelScheme> {
    let mut r: Registry<dyn KernelScheme> = Registry::new();
    r.register(Arc::new(Midpoint)).register(Arc::new(FlippedSign));
    r
}

pub fn kernel_by_name(name: &str) -> Result<Arc<dyn KernelScheme>, HilbertError> {
    kernel_registry().get(name).ok_or_else(|| HilbertError::UnknownKernel(name.to_string()))
}

#[derive(Clone)]
enum Origin {
    Kernel { kernel: Arc<dyn KernelScheme>, target: GridDD, source: GridDD, weight: DD },
    Dense,
}

/// Dense matrix, rows indexed by target points and columns by source points.
#[derive(Clone)]
pub struct OperatorMatrix {
    pub target_grid: SampledGrid,
    pub source_grid: SampledGrid,
    pub entries: DMatrix<f64>,
    origin: Origin,
}

impl std::fmt::Debug for OperatorMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OperatorMatrix")
            .field("target_grid", &self.target_grid)
            .field("source_grid", &self.source_grid)
            .field("shape", &self.entries.shape())
            .finish()
    }
}

pub fn build_matrix(cfg: &EndpointConfig, n_target: usize, n_source: usize) -> Result<OperatorMatrix, HilbertError> {
    build_matrix_with(cfg, n_target, n_source, Arc::new(Midpoint))
}

pub fn build_matrix_with(
    cfg: &EndpointConfig,
    n_target: usize,
    n_source: usize,
    kernel: Arc<dyn KernelScheme>,
) -> Result<OperatorMatrix, HilbertError> {
    let ht = (cfg.a3() - cfg.a1()) / (n_target as f64 - 1.0);
    let hs = (cfg.a4() - cfg.a2()) / (n_source as f64 - 1.0);
    if n_target < 2 || ht.is_nan() || ht <= 0.0 {
        return Err(HilbertError::DegenerateGrid { count: n_target, step: ht });
    }
    if n_source < 2 || hs.is_nan() || hs <= 0.0 {
        return Err(HilbertError::DegenerateGrid { count: n_source, step: hs });
    }
    let ht_dd = DD::from(cfg.a3() - cfg.a1()) / DD::from(n_target as f64 - 1.0);
    let hs_dd = DD::from(cfg.a4() - cfg.a2()) / DD::from(n_source as f64 - 1.0);
    let target_dd = GridDD { start: DD::from(cfg.a1()) + ht_dd.mul_f64(0.5), step: ht_dd };
    let source_dd = GridDD { start: DD::from(cfg.a2()), step: hs_dd };
    let target_grid = SampledGrid { start: target_dd.start.to_f64(), step: ht, count: n_target };
    let source_grid = SampledGrid { start: cfg.a2(), step: hs, count: n_source };
    // each double entry is the rounded double-double entry
    let xs: Vec<DD> = (0..n_target).map(|i| target_dd.point(i)).collect();
    let ys: Vec<DD> = (0..n_source).map(|j| source_dd.point(j)).collect();
    // the half-step shift separates the grids only for compatible sizes
    for (i, x) in xs.iter().enumerate() {
        let j = ((*x - source_dd.start).to_f64() / hs).round();
        if (0.0..n_source as f64).contains(&j) && (ys[j as usize] - *x).to_f64().abs() < 1e-9 * hs.min(ht) {
            return Err(HilbertError::CoincidentPoints { i, j: j as usize });
        }
    }
    let entries = DMatrix::from_fn(n_target, n_source, |i, j| kernel.entry_dd(xs[i], ys[j], hs_dd).to_f64());
    Ok(OperatorMatrix {
        target_grid,
        source_grid,
        entries,
        origin: Origin::Kernel { kernel, target: target_dd, source: source_dd, weight: hs_dd },
    })
}

/// Smallest `n_target >= min_target` (up to four times it) for which one
/// step `h` divides `a3 - a1`, `a4 - a2` and `a2 - a1`, with the matching
/// source count. Target points then sit half way between source points,
/// which the midpoint kernel needs to approximate the principal value.
pub fn aligned_grid_sizes(cfg: &EndpointConfig, min_target: usize) -> Option<(usize, usize)> {
    let a = cfg.as_array();
    let near_int = |v: f64| (v - v.round()).abs() < 1e-6;
    (min_target.max(2)..=4 * min_target.max(2)).find_map(|nt| {
        let h = (a[2] - a[0]) / (nt - 1) as f64;
        let ns = (a[3] - a[1]) / h;
        (near_int(ns) && near_int((a[1] - a[0]) / h)).then(|| (nt, ns.round() as usize + 1))
    })
}

impl OperatorMatrix {
    /// Wraps an arbitrary dense matrix (unit grids); used for toy problems.
    pub fn from_dense(entries: DMatrix<f64>) -> Self {
        let (r, c) = entries.shape();
        Self {
            target_grid: SampledGrid { start: 0.0, step: 1.0, count: r },
            source_grid: SampledGrid { start: 0.0, step: 1.0, count: c },
            entries,
            origin: Origin::Dense,
        }
    }

    pub fn nrows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn kernel_name(&self) -> Option<&'static str> {
        match &self.origin {
            Origin::Kernel { kernel, .. } => Some(kernel.name()),
            Origin::Dense => None,
        }
    }

    /// Row `i` recomputed in double-double from the grids. For a dense
    /// matrix the stored doubles are promoted.
    pub fn row_dd(&self, i: usize) -> Vec<DD> {
        match &self.origin {
            Origin::Kernel { kernel, target, source, weight } => {
                let x = target.point(i);
                (0..self.ncols()).map(|j| kernel.entry_dd(x, source.point(j), *weight)).collect()
            }
            Origin::Dense => (0..self.ncols()).map(|j| DD::from(self.entries[(i, j)])).collect(),
        }
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>, HilbertError> {
        if v.len() != self.ncols() {
            return Err(HilbertError::DimensionMismatch { expected: self.ncols(), got: v.len() });
        }
        let x = nalgebra::DVector::from_column_slice(v);
        Ok((&self.entries * x).as_slice().to_vec())
    }

    /// Row-major little-endian dump preceded by the two dimensions as u64.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(&(self.nrows() as u64).to_le_bytes())?;
        w.write_all(&(self.ncols() as u64).to_le_bytes())?;
        for i in 0..self.nrows() {
            for j in 0..self.ncols() {
                w.write_all(&self.entries[(i, j)].to_le_bytes())?;
            }
        }
        Ok(())
    }
}
