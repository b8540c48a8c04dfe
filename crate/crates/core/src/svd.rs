//! Singular value decomposition of the operator matrix and spectrum
//! bookkeeping.
//!
//! Two solvers are registered:
//!
//! * `golub-kahan`: plain double-precision SVD (nalgebra).
//! * `refined`: the double-precision factorization is used as a
//!   preconditioner for a one-sided Jacobi pass in double-double on
//!   `B = U^T M`, with `M` recomputed entrywise in double-double. Singular
//!   values far below `1e-16` and `1 - s^2` far below `1e-13` come out
//!   with full relative accuracy.

use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, SVD};
use serde::Serialize;
use thiserror::Error;

use crate::dd::{self, DD};
use crate::hilbert::OperatorMatrix;
use crate::registry::{Named, Registry};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SvdError {
    #[error("SVD did not converge: {0}")]
    ConvergenceFailure(String),
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("insufficient data for index matching: {0}")]
    InsufficientData(String),
    #[error("unknown SVD solver '{0}'")]
    UnknownSolver(String),
}

/// Descending singular triplets. Column `k` of `left`/`right` pairs with
/// `singular_values[k]`, and `M v_k = s_k u_k`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub singular_values: Vec<f64>,
    /// `1 - s_k^2` evaluated in the solver's working precision.
    pub one_minus_sq: Vec<f64>,
    pub left_vectors: DMatrix<f64>,
    pub right_vectors: DMatrix<f64>,
    /// `||M V - U S||_F / s_max`.
    pub backward_error: f64,
    pub trusted: Vec<bool>,
    pub solver: &'static str,
}

impl SvdResult {
    pub fn len(&self) -> usize {
        self.singular_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.singular_values.is_empty()
    }

    pub fn left(&self, k: usize) -> Vec<f64> {
        self.left_vectors.column(k).iter().copied().collect()
    }

    pub fn right(&self, k: usize) -> Vec<f64> {
        self.right_vectors.column(k).iter().copied().collect()
    }

    /// `ln s_k`, or `-inf` where the value is untrusted.
    pub fn log_values(&self) -> Vec<f64> {
        self.singular_values
            .iter()
            .zip(&self.trusted)
            .map(|(&s, &t)| if t && s > 0.0 { s.ln() } else { f64::NEG_INFINITY })
            .collect()
    }

    /// `ln(1 - s_k^2)`, or `-inf` where it is not positive.
    pub fn log_one_minus_sq(&self) -> Vec<f64> {
        self.one_minus_sq.iter().map(|&v| if v > 0.0 { v.ln() } else { f64::NEG_INFINITY }).collect()
    }

    /// CSV with columns `index,singular_value,trusted`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W, header: Option<&str>) -> std::io::Result<()> {
        if let Some(h) = header {
            writeln!(w, "# {h}")?;
        }
        writeln!(w, "index,singular_value,trusted")?;
        for (i, (s, t)) in self.singular_values.iter().zip(&self.trusted).enumerate() {
            writeln!(w, "{i},{s:.16e},{t}")?;
        }
        Ok(())
    }
}

pub trait SvdSolver: Named + Send + Sync {
    fn solve(&self, m: &OperatorMatrix) -> Result<SvdResult, SvdError>;
}

pub struct GolubKahan;

impl Named for GolubKahan {
    fn name(&self) -> &'static str {
        "golub-kahan"
    }
    fn description(&self) -> &'static str {
        "double precision bidiagonalization with implicit QR"
    }
}

pub struct Refined {
    pub max_sweeps: usize,
}

impl Default for Refined {
    fn default() -> Self {
        Self { max_sweeps: 60 }
    }
}

impl Named for Refined {
    fn name(&self) -> &'static str {
        "refined"
    }
    fn description(&self) -> &'static str {
        "double-double one-sided Jacobi preconditioned by the double SVD"
    }
}

pub fn svd_registry() -> Registry<dyn SvdSolver> {
    let mut r: Registry<dyn SvdSolver> = Registry::new();
    r.register(Arc::new(GolubKahan)).register(Arc::new(Refined::default()));
    r
}

pub fn solver_by_name(name: &str) -> Result<Arc<dyn SvdSolver>, SvdError> {
    svd_registry().get(name).ok_or_else(|| SvdError::UnknownSolver(name.to_string()))
}

/// Default solver: double precision.
pub fn compute_svd(m: &OperatorMatrix) -> Result<SvdResult, SvdError> {
    GolubKahan.solve(m)
}

struct Sorted {
    values: Vec<f64>,
    u: DMatrix<f64>,
    v: DMatrix<f64>,
}

fn double_svd(m: &OperatorMatrix) -> Result<Sorted, SvdError> {
    if m.entries.iter().any(|v| !v.is_finite()) {
        return Err(SvdError::NonFinite);
    }
    let svd = SVD::try_new(m.entries.clone(), true, true, f64::EPSILON, 10_000)
        .ok_or_else(|| SvdError::ConvergenceFailure("implicit QR exceeded 10000 iterations".into()))?;
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^T");
    let s = svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&k| s[k]).collect();
    let u = DMatrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);
    let v = DMatrix::from_fn(vt.ncols(), order.len(), |r, c| vt[(order[c], r)]);
    Ok(Sorted { values, u, v })
}

fn backward_error(m: &DMatrix<f64>, s: &[f64], u: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    let mut r = m * v;
    for (k, &sk) in s.iter().enumerate() {
        let mut col = r.column_mut(k);
        col.axpy(-sk, &u.column(k), 1.0);
    }
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        0.0
    } else {
        r.norm() / smax
    }
}

fn trust_flags(values: &[f64], unit_roundoff: f64) -> Vec<bool> {
    let cut = 1e3 * unit_roundoff * values.first().copied().unwrap_or(0.0);
    values.iter().map(|&s| s >= cut && s > 0.0).collect()
}

impl SvdSolver for GolubKahan {
    fn solve(&self, m: &OperatorMatrix) -> Result<SvdResult, SvdError> {
        let Sorted { values, u, v } = double_svd(m)?;
        let one_minus_sq = values.iter().map(|&s| (1.0 - s) * (1.0 + s)).collect();
        let backward_error = backward_error(&m.entries, &values, &u, &v);
        Ok(SvdResult {
            trusted: trust_flags(&values, f64::EPSILON / 2.0),
            one_minus_sq,
            singular_values: values,
            left_vectors: u,
            right_vectors: v,
            backward_error,
            solver: self.name(),
        })
    }
}

/// `u[b] <- u[b] - 1/2 sum_a u[a] E[a][b]` with `E = U^T U - I`.
fn orthonormalize(cols: &mut [Vec<DD>]) {
    let r = cols.len();
    let mut e = vec![DD::ZERO; r * r];
    for a in 0..r {
        for b in a..r {
            let mut s = dd::dot(&cols[a], &cols[b]);
            if a == b {
                s -= DD::ONE;
            }
            e[a * r + b] = s;
            e[b * r + a] = s;
        }
    }
    let old = cols.to_vec();
    for (b, col) in cols.iter_mut().enumerate() {
        for (a, src) in old.iter().enumerate() {
            let f = e[a * r + b].mul_f64(-0.5);
            if f.hi == 0.0 {
                continue;
            }
            for (x, y) in col.iter_mut().zip(src) {
                *x += f * *y;
            }
        }
    }
}

#[inline]
fn rotate(x: &mut [DD], y: &mut [DD], c: DD, s: DD) {
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let (p, q) = (*a, *b);
        *a = c * p - s * q;
        *b = s * p + c * q;
    }
}

fn pair<T>(v: &mut [T], p: usize, q: usize) -> (&mut T, &mut T) {
    let (a, b) = v.split_at_mut(q);
    (&mut a[p], &mut b[0])
}

impl SvdSolver for Refined {
    fn solve(&self, m: &OperatorMatrix) -> Result<SvdResult, SvdError> {
        let Sorted { values: _, u, v: v0 } = double_svd(m)?;
        let (nr, nc) = (m.nrows(), m.ncols());
        let r = u.ncols();
        let mut ucols: Vec<Vec<DD>> = (0..r).map(|k| u.column(k).iter().map(|&x| DD::from(x)).collect()).collect();
        orthonormalize(&mut ucols);

        let mut rows: Vec<Vec<DD>> = vec![vec![DD::ZERO; nc]; r];
        for i in 0..nr {
            let mrow = m.row_dd(i);
            for (k, row) in rows.iter_mut().enumerate() {
                let c = ucols[k][i];
                for (b, &x) in row.iter_mut().zip(&mrow) {
                    *b += c * x;
                }
            }
        }

        const TOL: f64 = 1e-30;
        let mut converged = false;
        let mut norms: Vec<DD> = Vec::with_capacity(r);
        for _ in 0..self.max_sweeps {
            norms.clear();
            norms.extend(rows.iter().map(|x| dd::dot(x, x)));
            let mut rotations = 0usize;
            for p in 0..r {
                for q in p + 1..r {
                    let (app, aqq) = (norms[p], norms[q]);
                    if app.hi == 0.0 || aqq.hi == 0.0 {
                        continue;
                    }
                    let apq = dd::dot(&rows[p], &rows[q]);
                    if apq.hi.abs() <= TOL * (app.hi * aqq.hi).sqrt() {
                        continue;
                    }
                    rotations += 1;
                    let zeta = (aqq - app) / apq.mul_f64(2.0);
                    let sign = if zeta.hi < 0.0 { -1.0 } else { 1.0 };
                    let t = DD::from(sign) / (zeta.abs() + (DD::ONE + zeta * zeta).sqrt());
                    let c = (DD::ONE + t * t).sqrt().recip();
                    let s = c * t;
                    let (rp, rq) = pair(&mut rows, p, q);
                    rotate(rp, rq, c, s);
                    let (up, uq) = pair(&mut ucols, p, q);
                    rotate(up, uq, c, s);
                    norms[p] = app - t * apq;
                    norms[q] = aqq + t * apq;
                }
            }
            if rotations == 0 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(SvdError::ConvergenceFailure(format!(
                "one-sided Jacobi not converged after {} sweeps",
                self.max_sweeps
            )));
        }

        let sv: Vec<DD> = rows.iter().map(|x| dd::dot(x, x).sqrt()).collect();
        let mut order: Vec<usize> = (0..r).collect();
        order.sort_by(|&a, &b| sv[b].hi.total_cmp(&sv[a].hi).then(sv[b].lo.total_cmp(&sv[a].lo)).then(a.cmp(&b)));

        let values: Vec<f64> = order.iter().map(|&k| sv[k].to_f64()).collect();
        let one_minus_sq = order.iter().map(|&k| (DD::ONE - sv[k] * sv[k]).to_f64()).collect();
        let left = DMatrix::from_fn(nr, r, |i, c| ucols[order[c]][i].to_f64());
        let right = DMatrix::from_fn(nc, r, |j, c| {
            let k = order[c];
            if sv[k].hi > 0.0 {
                (rows[k][j] / sv[k]).to_f64()
            } else {
                v0[(j, c)]
            }
        });
        let backward_error = backward_error(&m.entries, &values, &left, &right);
        Ok(SvdResult {
            trusted: trust_flags(&values, dd::EPS),
            one_minus_sq,
            singular_values: values,
            left_vectors: left,
            right_vectors: right,
            backward_error,
            solver: self.name(),
        })
    }
}

/// Index buckets of a spectrum.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpectrumSplit {
    pub near_one: Vec<usize>,
    pub transition: Vec<usize>,
    pub near_zero: Vec<usize>,
}

/// `s < lo_gap` is near zero, otherwise `s > hi_gap` is near one; with
/// `lo_gap > hi_gap` the near-zero bucket takes precedence.
pub fn split_spectrum(values: &[f64], lo_gap: f64, hi_gap: f64) -> SpectrumSplit {
    let mut out = SpectrumSplit { near_one: vec![], transition: vec![], near_zero: vec![] };
    for (i, &s) in values.iter().enumerate() {
        if s < lo_gap {
            out.near_zero.push(i);
        } else if s > hi_gap {
            out.near_one.push(i);
        } else {
            out.transition.push(i);
        }
    }
    out
}

/// How the law index `n` runs through the spectrum from the offset `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    /// `i = m + n` (tail towards zero).
    Ascending,
    /// `i = m - n` (tail towards one).
    Descending,
}

impl Direction {
    pub fn index(self, m: usize, n: usize) -> Option<usize> {
        match self {
            Direction::Ascending => Some(m + n),
            Direction::Descending => m.checked_sub(n),
        }
    }
}

/// Offset `m` minimizing `sum_n (log_values[i(m,n)] - law(n))^2` over
/// `n_min..=n_max`; candidates where any term is non-finite are skipped.
/// Ties go to the smallest `m`.
///
/// At least three finite values below `log_cut` are required.
pub fn match_indices(
    log_values: &[f64],
    law: &dyn Fn(usize) -> f64,
    n_min: usize,
    n_max: usize,
    direction: Direction,
    log_cut: f64,
) -> Result<usize, SvdError> {
    let usable = log_values.iter().filter(|v| v.is_finite() && **v < log_cut).count();
    if usable < 3 {
        return Err(SvdError::InsufficientData(format!("{usable} finite values below cut {log_cut}")));
    }
    if n_min > n_max {
        return Err(SvdError::InsufficientData("empty n range".into()));
    }
    let mut best: Option<(f64, usize)> = None;
    for m in 0..log_values.len() {
        let mut sse = 0.0;
        let mut ok = true;
        for n in n_min..=n_max {
            match direction.index(m, n).and_then(|i| log_values.get(i)) {
                Some(v) if v.is_finite() => sse += (v - law(n)).powi(2),
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if ok && best.map_or(true, |(b, _)| sse < b) {
            best = Some((sse, m));
        }
    }
    best.map(|(_, m)| m)
        .ok_or_else(|| SvdError::InsufficientData(format!("no offset covers n = {n_min}..={n_max}")))
}
