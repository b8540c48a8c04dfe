//! Run configuration, the five report commands and their output files.
//!
//! Every command writes into `output_dir`. Text files start with a
//! `# config: {...}` line; JSON files wrap the result as
//! `{"config": ..., "result": ...}`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asymptotics::{fit_line, AsymptoticLaws};
use crate::builder::{build_f, build_g, sigma_from_functions, verify_normalization, BuilderError};
use crate::geometry::{EndpointConfig, GeometryError};
use crate::hilbert::{aligned_grid_sizes, build_matrix_with, kernel_by_name, HilbertError, OperatorMatrix};
use crate::inversion::{beta_relation_from, transform_config, verify_kbar_identities, BetaReport, InversionError};
use crate::quadrature::{compute_constants, QuadratureError};
use crate::special::{bessel_i0, bessel_j0, bessel_k0, bessel_y0, envelope, SpecialError};
use crate::sturm::{eigenvector_consistency, moment_integral, moment_limit, rayleigh_witnesses, SturmError};
use crate::svd::{match_indices, solver_by_name, split_spectrum, Direction, GolubKahan, SvdError, SvdResult, SvdSolver};

const BESSEL_TABLE: &str = include_str!("../data/bessel_mpmath.csv");

#[derive(Debug, Error)]
pub enum ToolError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("quadrature error: {0}")]
    Quadrature(String),
    #[error("SVD error: {0}")]
    Svd(String),
    #[error("matching error: {0}")]
    Matching(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl ToolError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ToolError::Config(_) | ToolError::Io(_) => 1,
            ToolError::Quadrature(_) => 2,
            ToolError::Svd(_) => 3,
            ToolError::Matching(_) => 4,
        }
    }
}

impl From<GeometryError> for ToolError {
    fn from(e: GeometryError) -> Self {
        ToolError::Config(e.to_string())
    }
}

impl From<QuadratureError> for ToolError {
    fn from(e: QuadratureError) -> Self {
        ToolError::Quadrature(e.to_string())
    }
}

impl From<HilbertError> for ToolError {
    fn from(e: HilbertError) -> Self {
        ToolError::Config(e.to_string())
    }
}

impl From<SvdError> for ToolError {
    fn from(e: SvdError) -> Self {
        match e {
            SvdError::InsufficientData(m) => ToolError::Matching(m),
            SvdError::UnknownSolver(_) => ToolError::Config(e.to_string()),
            other => ToolError::Svd(other.to_string()),
        }
    }
}

impl From<BuilderError> for ToolError {
    fn from(e: BuilderError) -> Self {
        match e {
            BuilderError::Quadrature(q) => q.into(),
            other => ToolError::Matching(other.to_string()),
        }
    }
}

impl From<InversionError> for ToolError {
    fn from(e: InversionError) -> Self {
        match e {
            InversionError::Geometry(g) => g.into(),
            InversionError::Quadrature(q) => q.into(),
            InversionError::Hilbert(h) => h.into(),
            InversionError::Svd(s) => s.into(),
        }
    }
}

impl From<SturmError> for ToolError {
    fn from(e: SturmError) -> Self {
        match e {
            SturmError::Quadrature(q) => q.into(),
            other => ToolError::Matching(other.to_string()),
        }
    }
}

impl From<SpecialError> for ToolError {
    fn from(e: SpecialError) -> Self {
        ToolError::Config(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub endpoints: [f64; 4],
    pub n_target: usize,
    pub n_source: usize,
    pub quad_tol: f64,
    pub n_range_small: [usize; 2],
    pub n_range_one: [usize; 2],
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Index for compare-function.
    pub n: usize,
    pub svd_solver: String,
    pub kernel: String,
    pub lo_gap: f64,
    pub hi_gap: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            endpoints: [0.0, 3.0, 6.0, 12.0],
            n_target: 601,
            n_source: 901,
            quad_tol: 1e-10,
            n_range_small: [1, 12],
            n_range_one: [1, 8],
            output_dir: PathBuf::from("out"),
            seed: 0,
            n: 6,
            svd_solver: "refined".into(),
            kernel: "midpoint".into(),
            lo_gap: 0.1,
            hi_gap: 0.9,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ToolError> {
        serde_json::from_str(text).map_err(|e| ToolError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ToolError> {
        let text = fs::read_to_string(path).map_err(|e| ToolError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<EndpointConfig, ToolError> {
        let cfg = EndpointConfig::from_array(self.endpoints)?;
        if self.n_target < 2 || self.n_source < 2 {
            return Err(ToolError::Config(format!("grid sizes must be >= 2, got {}x{}", self.n_target, self.n_source)));
        }
        if !(self.quad_tol > 0.0) {
            return Err(ToolError::Config(format!("quad_tol must be positive, got {}", self.quad_tol)));
        }
        for (name, [lo, hi]) in [("n_range_small", self.n_range_small), ("n_range_one", self.n_range_one)] {
            if lo == 0 || lo > hi {
                return Err(ToolError::Config(format!("{name} must satisfy 1 <= lo <= hi, got [{lo}, {hi}]")));
            }
        }
        if self.n == 0 {
            return Err(ToolError::Config("n must be >= 1".into()));
        }
        if !(self.lo_gap > 0.0 && self.hi_gap > 0.0 && self.hi_gap < 1.0) {
            return Err(ToolError::Config(format!("gaps must lie in (0, 1), got {} and {}", self.lo_gap, self.hi_gap)));
        }
        solver_by_name(&self.svd_solver)?;
        kernel_by_name(&self.kernel)?;
        Ok(cfg)
    }

    /// Whether target points fall half way between source points (see
    /// [`aligned_grid_sizes`]); other sizes give a poor principal-value rule.
    pub fn grid_is_aligned(&self) -> bool {
        EndpointConfig::from_array(self.endpoints)
            .map(|c| aligned_grid_sizes(&c, self.n_target) == Some((self.n_target, self.n_source)))
            .unwrap_or(false)
    }

    pub fn header(&self) -> String {
        format!("# config: {}", serde_json::to_string(self).expect("config serializes"))
    }

    fn write_text(&self, name: &str, body: &str) -> Result<PathBuf, ToolError> {
        fs::create_dir_all(&self.output_dir)?;
        let path = self.output_dir.join(name);
        let mut f = fs::File::create(&path)?;
        writeln!(f, "{}", self.header())?;
        f.write_all(body.as_bytes())?;
        Ok(path)
    }

    fn write_json<T: Serialize>(&self, name: &str, result: &T) -> Result<PathBuf, ToolError> {
        fs::create_dir_all(&self.output_dir)?;
        let path = self.output_dir.join(name);
        fs::write(&path, to_json(self, result) + "\n")?;
        Ok(path)
    }
}

#[derive(Serialize)]
struct Envelope<'a, T> {
    config: &'a RunConfig,
    result: &'a T,
}

/// `{"config": ..., "result": ...}`, pretty printed.
pub fn to_json<T: Serialize>(config: &RunConfig, result: &T) -> String {
    serde_json::to_string_pretty(&Envelope { config, result }).expect("report serializes")
}

fn laws_for(run: &RunConfig, cfg: &EndpointConfig) -> Result<AsymptoticLaws, ToolError> {
    Ok(AsymptoticLaws::new(compute_constants(cfg, run.quad_tol)?))
}

// ---------------------------------------------------------------- kvalues

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KValues {
    pub k_minus: f64,
    pub k_minus_right: f64,
    pub k_plus: f64,
    pub identity_residual: f64,
    pub decay_rate: f64,
    pub near_one_rate: f64,
}

pub fn cmd_kvalues(run: &RunConfig) -> Result<KValues, ToolError> {
    let cfg = run.validate()?;
    let k = compute_constants(&cfg, run.quad_tol)?;
    let laws = AsymptoticLaws::new(k);
    let out = KValues {
        k_minus: k.k_minus,
        k_minus_right: k.k_minus_right,
        k_plus: k.k_plus,
        identity_residual: k.identity_residual(),
        decay_rate: laws.decay_rate,
        near_one_rate: laws.near_one_rate,
    };
    run.write_json("kvalues.json", &out)?;
    Ok(out)
}

// ---------------------------------------------------------------- svd

pub fn build_operator(run: &RunConfig, cfg: &EndpointConfig) -> Result<OperatorMatrix, ToolError> {
    Ok(build_matrix_with(cfg, run.n_target, run.n_source, kernel_by_name(&run.kernel)?)?)
}

pub fn solve(run: &RunConfig, m: &OperatorMatrix) -> Result<SvdResult, ToolError> {
    Ok(solver_by_name(&run.svd_solver)?.solve(m)?)
}

/// Builds the operator, computes its SVD and writes `singular_values.csv`.
pub fn cmd_svd(run: &RunConfig) -> Result<SvdResult, ToolError> {
    let cfg = run.validate()?;
    let svd = solve(run, &build_operator(run, &cfg)?)?;
    let mut body = Vec::new();
    svd.write_csv(&mut body, None)?;
    run.write_text("singular_values.csv", &String::from_utf8(body).expect("ascii"))?;
    Ok(svd)
}

// ---------------------------------------------------------------- compare-values

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailRow {
    pub n: usize,
    pub index: usize,
    /// `s_i` (near-zero tail) or `1 - s_i^2` (near-one tail).
    pub numeric: f64,
    pub asymptotic: f64,
    pub ln_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailFit {
    pub offset: usize,
    pub direction: Direction,
    pub rows: Vec<TailRow>,
    pub slope: f64,
    pub intercept: f64,
    pub law_slope: f64,
    pub law_intercept: f64,
    pub slope_rel_err: f64,
    pub intercept_delta: f64,
    pub max_abs_ln_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueComparison {
    pub near_zero: TailFit,
    pub near_one: TailFit,
}

fn masked(values: &[f64], keep: &[usize]) -> Vec<f64> {
    let mut out = vec![f64::NEG_INFINITY; values.len()];
    for &i in keep {
        out[i] = values[i];
    }
    out
}

fn fit_tail(
    logs: &[f64],
    law: &dyn Fn(usize) -> f64,
    (law_slope, law_intercept): (f64, f64),
    [n_min, n_max]: [usize; 2],
    direction: Direction,
    log_cut: f64,
) -> Result<TailFit, ToolError> {
    let offset = match_indices(logs, law, n_min, n_max, direction, log_cut)?;
    let mut rows = Vec::new();
    for n in n_min..=n_max {
        let index = direction.index(offset, n).expect("matched offset covers the range");
        rows.push(TailRow { n, index, numeric: logs[index].exp(), asymptotic: law(n).exp(), ln_gap: logs[index] - law(n) });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.numeric.ln()).collect();
    let (slope, intercept) = if rows.len() >= 2 { fit_line(&xs, &ys) } else { (f64::NAN, f64::NAN) };
    Ok(TailFit {
        offset,
        direction,
        max_abs_ln_gap: rows.iter().map(|r| r.ln_gap.abs()).fold(0.0, f64::max),
        rows,
        slope,
        intercept,
        law_slope,
        law_intercept,
        slope_rel_err: slope / law_slope - 1.0,
        intercept_delta: intercept - law_intercept,
    })
}

/// Matches both tails of `svd` against the asymptotic laws. Only indices in
/// the corresponding bucket of `split_spectrum` (and trusted) are eligible.
pub fn compare_values(run: &RunConfig, laws: &AsymptoticLaws, svd: &SvdResult) -> Result<ValueComparison, ToolError> {
    let split = split_spectrum(&svd.singular_values, run.lo_gap, run.hi_gap);
    let small = masked(&svd.log_values(), &split.near_zero);
    let near_zero = fit_tail(
        &small,
        &|n| laws.ln_sigma_small(n),
        (-laws.decay_rate, std::f64::consts::LN_2),
        run.n_range_small,
        Direction::Ascending,
        run.lo_gap.ln(),
    )
    .map_err(|e| ToolError::Matching(format!("near-zero tail: {e}")))?;
    let one = masked(&svd.log_one_minus_sq(), &split.near_one);
    let near_one = fit_tail(
        &one,
        &|n| laws.ln_one_minus_sq_near_one(n),
        (-laws.near_one_rate, 4f64.ln()),
        run.n_range_one,
        Direction::Descending,
        (1.0 - run.hi_gap * run.hi_gap).ln(),
    )
    .map_err(|e| ToolError::Matching(format!("near-one tail: {e}")))?;
    Ok(ValueComparison { near_zero, near_one })
}

fn tail_csv(fit: &TailFit, what: &str) -> String {
    let mut s = format!("n,index,{what},asymptotic,ln_gap\n");
    for r in &fit.rows {
        s += &format!("{},{},{:.16e},{:.16e},{:.16e}\n", r.n, r.index, r.numeric, r.asymptotic, r.ln_gap);
    }
    s
}

fn tail_dat(fit: &TailFit) -> String {
    let mut s = String::from("# n ln_numeric ln_asymptotic\n");
    for r in &fit.rows {
        s += &format!("{} {:.16e} {:.16e}\n", r.n, r.numeric.ln(), r.asymptotic.ln());
    }
    s
}

pub fn cmd_compare_values(run: &RunConfig) -> Result<ValueComparison, ToolError> {
    let cfg = run.validate()?;
    let laws = laws_for(run, &cfg)?;
    let svd = solve(run, &build_operator(run, &cfg)?)?;
    let out = compare_values(run, &laws, &svd)?;
    write_value_files(run, &out)?;
    Ok(out)
}

fn write_value_files(run: &RunConfig, out: &ValueComparison) -> Result<(), ToolError> {
    run.write_text("compare_small.csv", &tail_csv(&out.near_zero, "singular_value"))?;
    run.write_text("compare_one.csv", &tail_csv(&out.near_one, "one_minus_sq"))?;
    run.write_text("values_small.dat", &tail_dat(&out.near_zero))?;
    run.write_text("values_one.dat", &tail_dat(&out.near_one))?;
    run.write_text(
        "compare_values.gp",
        "set xlabel 'n'\n\
         set ylabel 'ln s_n'\n\
         plot 'values_small.dat' using 1:2 with points title 'numerical', \\\n\
         \x20    'values_small.dat' using 1:3 with lines title 'asymptotic'\n\
         pause -1\n\
         set ylabel 'ln(1 - s_n^2)'\n\
         plot 'values_one.dat' using 1:2 with points title 'numerical', \\\n\
         \x20    'values_one.dat' using 1:3 with lines title 'asymptotic'\n\
         pause -1\n",
    )?;
    run.write_json("compare_values.json", out)?;
    Ok(())
}

// ---------------------------------------------------------------- compare-function

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionComparison {
    pub n: usize,
    pub index: usize,
    pub singular_value: f64,
    /// `|<u, g>| / (|u| |g|)` on `[a1 + 0.1, a3 - 0.1]`.
    pub cosine_g: f64,
    /// Max `| ln|u/sqrt(h)| - ln|g| |` on `[3.5, 5.5]` after sign alignment.
    pub max_log_gap: f64,
    /// `<v, f> / (|v| |f|)` on `[a2 + 0.1, a4 - 0.1]` without `|x - a3| < 0.1`,
    /// with `v` carrying the sign that aligned `u` to `g`.
    pub cosine_f_paired: f64,
    pub pass: bool,
}

struct FunctionSamples {
    cmp: FunctionComparison,
    xs_t: Vec<f64>,
    u: Vec<f64>,
    g: Vec<f64>,
    xs_s: Vec<f64>,
    v: Vec<f64>,
    f: Vec<f64>,
}

fn dot_on(xs: &[f64], a: &[f64], b: &[f64], keep: impl Fn(f64) -> bool) -> (f64, f64, f64) {
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for i in 0..xs.len() {
        if keep(xs[i]) {
            ab += a[i] * b[i];
            aa += a[i] * a[i];
            bb += b[i] * b[i];
        }
    }
    (ab, aa.sqrt(), bb.sqrt())
}

fn function_samples(
    run: &RunConfig,
    cfg: &EndpointConfig,
    laws: &AsymptoticLaws,
    m: &OperatorMatrix,
    svd: &SvdResult,
    values: &ValueComparison,
    n: usize,
) -> Result<FunctionSamples, ToolError> {
    let [lo, hi] = run.n_range_small;
    if n < lo || n > hi {
        return Err(ToolError::Matching(format!("n = {n} outside the matched near-zero range {lo}..={hi}")));
    }
    let index = values.near_zero.offset + n;
    let g_fn = build_g(cfg, laws, n)?;
    let f_fn = build_f(cfg, laws, n)?;
    let xs_t = m.target_grid.points();
    let xs_s = m.source_grid.points();
    let (a1, a2, a3, a4) = (cfg.a1(), cfg.a2(), cfg.a3(), cfg.a4());
    // the half-step shift puts the last target point past a3
    let g = xs_t
        .iter()
        .map(|&x| if x > a3 { Ok(f64::NAN) } else { g_fn.evaluate(x) })
        .collect::<Result<Vec<f64>, _>>()?;
    let f: Vec<f64> = xs_s.iter().map(|&x| if (x - a3).abs() < 0.1 { 0.0 } else { f_fn.evaluate(x).unwrap_or(0.0) }).collect();

    let mut u = svd.left(index);
    let mut v = svd.right(index);
    let (ug, nu, ng) = dot_on(&xs_t, &u, &g, |x| x >= a1 + 0.1 && x <= a3 - 0.1);
    if ug < 0.0 {
        u.iter_mut().for_each(|x| *x = -*x);
        v.iter_mut().for_each(|x| *x = -*x);
    }
    let cosine_g = ug.abs() / (nu * ng);
    let scale = m.target_grid.step.sqrt();
    let max_log_gap = xs_t
        .iter()
        .zip(u.iter().zip(&g))
        .filter(|(x, _)| **x >= 3.5 && **x <= 5.5)
        .map(|(_, (a, b))| ((a / scale).abs().ln() - b.abs().ln()).abs())
        .fold(0.0, f64::max);
    let (vf, nv, nf) = dot_on(&xs_s, &v, &f, |x| x >= a2 + 0.1 && x <= a4 - 0.1 && (x - a3).abs() >= 0.1);
    let cosine_f_paired = vf / (nv * nf);
    let pass = cosine_g >= 0.99 && max_log_gap <= 0.5 && cosine_f_paired >= 0.99;
    let cmp = FunctionComparison {
        n,
        index,
        singular_value: svd.singular_values[index],
        cosine_g,
        max_log_gap,
        cosine_f_paired,
        pass,
    };
    Ok(FunctionSamples { cmp, xs_t, u, g, xs_s, v, f })
}

fn function_dat(xs: &[f64], numeric: &[f64], asym: &[f64], h: f64) -> String {
    let mut s = String::from("# x numeric asymptotic ln_abs_numeric ln_abs_asymptotic\n");
    let r = h.sqrt();
    for i in 0..xs.len() {
        let a = numeric[i] / r;
        s += &format!("{:.16e} {:.16e} {:.16e} {:.16e} {:.16e}\n", xs[i], a, asym[i], a.abs().ln(), asym[i].abs().ln());
    }
    s
}

fn write_function_files(run: &RunConfig, m: &OperatorMatrix, fs_: &FunctionSamples) -> Result<(), ToolError> {
    let n = fs_.cmp.n;
    let gname = format!("function_g_n{n}.dat");
    let fname = format!("function_f_n{n}.dat");
    run.write_text(&gname, &function_dat(&fs_.xs_t, &fs_.u, &fs_.g, m.target_grid.step))?;
    run.write_text(&fname, &function_dat(&fs_.xs_s, &fs_.v, &fs_.f, m.source_grid.step))?;
    run.write_text(
        &format!("compare_function_n{n}.gp"),
        &format!(
            "set xlabel 'x'\n\
             plot '{gname}' using 1:2 with points title 'numerical', '{gname}' using 1:3 with lines title 'asymptotic'\n\
             pause -1\n\
             set ylabel 'ln|g|'\n\
             plot '{gname}' using 1:4 with points title 'numerical', '{gname}' using 1:5 with lines title 'asymptotic'\n\
             pause -1\n\
             plot '{fname}' using 1:2 with points title 'numerical', '{fname}' using 1:3 with lines title 'asymptotic'\n\
             pause -1\n"
        ),
    )?;
    run.write_json(&format!("compare_function_n{n}.json"), &fs_.cmp)?;
    Ok(())
}

pub fn cmd_compare_function(run: &RunConfig) -> Result<FunctionComparison, ToolError> {
    let cfg = run.validate()?;
    let laws = laws_for(run, &cfg)?;
    let m = build_operator(run, &cfg)?;
    let svd = solve(run, &m)?;
    let values = compare_values(run, &laws, &svd)?;
    let samples = function_samples(run, &cfg, &laws, &m, &svd, &values, run.n)?;
    write_function_files(run, &m, &samples)?;
    Ok(samples.cmp)
}

// ---------------------------------------------------------------- verify

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    pub all_pass: bool,
}

fn check(name: &str, pass: bool, detail: serde_json::Value) -> Check {
    Check { name: name.into(), pass, detail }
}

/// Relative gaps of the `K-` identity on `count` random configurations,
/// each with its certified bound `(gap + 2 tol) / K-`.
pub fn random_k_identities(seed: u64, count: usize, tol: f64) -> Result<Vec<(EndpointConfig, f64, f64)>, ToolError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let a1: f64 = rng.random_range(-5.0..5.0);
        let a2 = a1 + rng.random_range(0.2..5.0);
        let a3 = a2 + rng.random_range(0.2..5.0);
        let a4 = a3 + rng.random_range(0.2..5.0);
        let cfg = EndpointConfig::new(a1, a2, a3, a4)?;
        let k = compute_constants(&cfg, tol)?;
        out.push((cfg, k.identity_residual() / k.k_minus, (k.identity_residual() + 2.0 * tol) / k.k_minus));
    }
    Ok(out)
}

// Quadrature tolerances are absolute error budgets. An identity counts as
// verified to `limit` only if the observed gap plus the budget of the two
// sides stays below it, so a loose `quad_tol` cannot pass by luck.
fn k_checks(run: &RunConfig, cfg: &EndpointConfig) -> Result<Vec<Check>, ToolError> {
    let tol = run.quad_tol;
    let k = compute_constants(cfg, tol)?;
    let rel = k.identity_residual() / k.k_minus;
    let bound = (k.identity_residual() + 2.0 * tol) / k.k_minus;
    let scaled = compute_constants(&cfg.scaled(2.0)?, tol)?;
    let shifted = compute_constants(&cfg.translated(1.75)?, tol)?;
    let rel_gap = |a: f64, b: f64| (a / b - 1.0).abs() + 2.0 * tol / b.abs().min(a.abs());
    let scale_err = rel_gap(scaled.k_minus * 2.0, k.k_minus).max(rel_gap(scaled.k_plus * 2.0, k.k_plus));
    let shift_err = rel_gap(shifted.k_minus, k.k_minus).max(rel_gap(shifted.k_plus, k.k_plus));
    let random = random_k_identities(run.seed, 50, tol)?;
    let worst = random.iter().map(|r| r.1).fold(0.0, f64::max);
    let worst_bound = random.iter().map(|r| r.2).fold(0.0, f64::max);
    Ok(vec![
        check(
            "k_identity_default",
            bound <= 1e-9,
            serde_json::json!({"relative_gap": rel, "certified_bound": bound, "limit": 1e-9, "constants": k}),
        ),
        check(
            "k_identity_random",
            worst_bound <= 1e-9,
            serde_json::json!({"configs": random.len(), "seed": run.seed, "worst_relative_gap": worst, "worst_certified_bound": worst_bound, "limit": 1e-9}),
        ),
        check(
            "k_scaling_translation",
            scale_err <= 1e-9 && shift_err <= 1e-9,
            serde_json::json!({"scaling_bound": scale_err, "translation_bound": shift_err, "limit": 1e-9}),
        ),
    ])
}

fn table_rows() -> Vec<[f64; 5]> {
    BESSEL_TABLE
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with('z'))
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|t| t.trim().parse().expect("numeric table")).collect();
            [v[0], v[1], v[2], v[3], v[4]]
        })
        .collect()
}

/// Worst envelope-relative error of `J0`, `Y0` and relative error of `I0`,
/// `K0` against the checked-in high-precision table.
pub fn bessel_table_errors() -> Result<(f64, f64), ToolError> {
    let (mut osc, mut modified) = (0.0f64, 0.0f64);
    for [z, j, y, i, k] in table_rows() {
        let scale = |w: f64| w.abs().max(envelope(z).min(1.0));
        osc = osc.max((bessel_j0(z)? - j).abs() / scale(j)).max((bessel_y0(z)? - y).abs() / scale(y));
        modified = modified.max((bessel_i0(z) / i - 1.0).abs()).max((bessel_k0(z)? / k - 1.0).abs());
    }
    Ok((osc, modified))
}

/// `|W(z) pi z / 2 - 1|` with `W = J0 Y0' - J0' Y0` from fourth-order
/// central differences.
pub fn wronskian_error(z: f64) -> Result<f64, ToolError> {
    let h = 1e-3;
    let d = |f: fn(f64) -> Result<f64, SpecialError>| -> Result<f64, ToolError> {
        Ok((8.0 * (f(z + h)? - f(z - h)?) - (f(z + 2.0 * h)? - f(z - 2.0 * h)?)) / (12.0 * h))
    };
    let w = bessel_j0(z)? * d(bessel_y0)? - d(bessel_j0)? * bessel_y0(z)?;
    Ok((w * std::f64::consts::PI * z / 2.0 - 1.0).abs())
}

/// Fitted exponent `p` in `|I(n) - limit| ~ C n^-p` over `ns`.
pub fn moment_exponent(a2: f64, a3: f64, ns: &[usize]) -> Result<f64, ToolError> {
    let lim = moment_limit(a2, a3);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &n in ns {
        xs.push((n as f64).ln());
        ys.push((moment_integral(a2, a3, n)? - lim).abs().ln());
    }
    Ok(-fit_line(&xs, &ys).0)
}

fn analytic_checks(run: &RunConfig, cfg: &EndpointConfig, laws: &AsymptoticLaws) -> Result<Vec<Check>, ToolError> {
    let mut out = Vec::new();
    let (osc, modified) = bessel_table_errors()?;
    out.push(check(
        "bessel_table",
        osc <= 1e-10 && modified <= 1e-10,
        serde_json::json!({"j0_y0_max_error": osc, "i0_k0_max_error": modified, "limit": 1e-10}),
    ));
    let probes = [0.5, 5.0, 50.0];
    let werr: Vec<f64> = probes.iter().map(|&z| wronskian_error(z)).collect::<Result<_, _>>()?;
    out.push(check(
        "bessel_wronskian",
        werr.iter().all(|&e| e <= 1e-10),
        serde_json::json!({"z": probes, "relative_error": werr, "limit": 1e-10}),
    ));

    let ns = [20usize, 40, 80];
    let w: Vec<(f64, f64)> = ns.iter().map(|&n| rayleigh_witnesses(cfg, n)).collect();
    let per_n2: Vec<(f64, f64)> = w.iter().zip(ns).map(|(&(u, v), n)| (u / (n * n) as f64, v / (n * n) as f64)).collect();
    let stable = (per_n2[2].0 / per_n2[1].0 - 1.0).abs() <= 0.1 && (per_n2[2].1 / per_n2[1].1 - 1.0).abs() <= 0.1;
    let signs = w.iter().all(|&(u, v)| u < 0.0 && v > 0.0);
    out.push(check(
        "rayleigh_witnesses",
        signs && stable && w[1].0 < w[0].0 && w[1].1 > w[0].1,
        serde_json::json!({"n": ns, "r_u": w.iter().map(|p| p.0).collect::<Vec<_>>(), "r_v": w.iter().map(|p| p.1).collect::<Vec<_>>(), "r_over_n2": per_n2}),
    ));

    let p = moment_exponent(cfg.a2(), cfg.a3(), &[8, 16, 32, 64])?;
    let unit = (moment_integral(0.0, 1.0, 64)? - 1.0 / 280.0).abs();
    out.push(check(
        "moment_integral",
        (3.5..=4.5).contains(&p) && unit <= 1e-5,
        serde_json::json!({"fitted_exponent": p, "range": [3.5, 4.5], "unit_interval_gap": unit}),
    ));

    let kb = verify_kbar_identities(cfg, run.quad_tol)?;
    let budget = 2.0 * run.quad_tol / kb.kbar_plus.min(kb.kbar_minus);
    out.push(check(
        "kbar_identities",
        kb.rel_err_plus + budget <= 1e-8 && kb.rel_err_minus + budget <= 1e-8,
        serde_json::json!({"check": kb, "tolerance_budget": budget, "limit": 1e-8}),
    ));

    let ratios: Vec<f64> = [4usize, 6, 8, 16].iter().map(|&n| verify_normalization(cfg, laws, n)).collect::<Result<_, _>>()?;
    let dev: Vec<f64> = ratios.iter().map(|r| (r - 1.0).abs()).collect();
    out.push(check(
        "normalization",
        (0.9..=1.1).contains(&ratios[1]) && dev[0] > dev[2] && dev[2] > dev[3],
        serde_json::json!({"n": [4, 6, 8, 16], "ratio": ratios}),
    ));

    let worst = (1..=20).map(|n| (sigma_from_functions(cfg, laws, n) / laws.sigma_small(n) - 1.0).abs()).fold(0.0, f64::max);
    out.push(check("sigma_consistency", worst <= 1e-12, serde_json::json!({"n": [1, 20], "max_relative_gap": worst})));
    Ok(out)
}

fn numeric_checks(run: &RunConfig, cfg: &EndpointConfig, laws: &AsymptoticLaws) -> Result<(Vec<Check>, ValueComparison, BetaReport), ToolError> {
    let mut out = Vec::new();
    let m = build_operator(run, cfg)?;
    let svd = solve(run, &m)?;
    let values = compare_values(run, laws, &svd)?;
    let nz = &values.near_zero;
    out.push(check(
        "near_zero_law",
        nz.slope_rel_err.abs() <= 0.02 && nz.intercept_delta.abs() <= 0.2,
        serde_json::json!({"slope": nz.slope, "law_slope": nz.law_slope, "intercept_delta": nz.intercept_delta, "max_abs_ln_gap": nz.max_abs_ln_gap}),
    ));
    let no = &values.near_one;
    out.push(check(
        "near_one_slope",
        no.slope_rel_err.abs() <= 0.05,
        serde_json::json!({"slope": no.slope, "law_slope": no.law_slope, "intercept_delta": no.intercept_delta}),
    ));

    let matched: Vec<(usize, usize)> = (1..=8).map(|n| (nz.offset + n, n)).collect();
    let ev = eigenvector_consistency(cfg, &m.target_grid, &svd, laws, &matched)?;
    let q6 = ev.entries.iter().find(|e| e.n == 6).map(|e| e.relative_gap.abs()).unwrap_or(f64::INFINITY);
    let increasing = ev.entries.windows(2).all(|w| w[1].quotient > w[0].quotient);
    out.push(check("eigenvector_consistency", q6 <= 0.1 && increasing, serde_json::to_value(&ev).expect("json")));

    let fcmp = function_samples(run, cfg, laws, &m, &svd, &values, 6)?.cmp;
    out.push(check("function_comparison", fcmp.pass, serde_json::to_value(&fcmp).expect("json")));

    let t = transform_config(cfg)?;
    let grid_bar = aligned_grid_sizes(&t.eta, run.n_target).unwrap_or((run.n_target, run.n_source));
    let mbar = build_matrix_with(&t.eta, grid_bar.0, grid_bar.1, kernel_by_name(&run.kernel)?)?;
    let bar = GolubKahan.solve(&mbar)?;
    let [_, n_one] = run.n_range_one;
    let beta = beta_relation_from(cfg, &svd, &bar, grid_bar, n_one, run.quad_tol)?;
    out.push(check("beta_slope", beta.pass, serde_json::to_value(&beta).expect("json")));
    Ok((out, values, beta))
}

/// Runs every check; `all_pass` is the conjunction.
pub fn verify(run: &RunConfig) -> Result<VerifyReport, ToolError> {
    let cfg = run.validate()?;
    let laws = laws_for(run, &cfg)?;
    let mut checks = k_checks(run, &cfg)?;
    checks.extend(analytic_checks(run, &cfg, &laws)?);
    checks.extend(numeric_checks(run, &cfg, &laws)?.0);
    let all_pass = checks.iter().all(|c| c.pass);
    Ok(VerifyReport { checks, all_pass })
}

pub fn cmd_verify(run: &RunConfig) -> Result<VerifyReport, ToolError> {
    let report = verify(run)?;
    run.write_json("verify.json", &report)?;
    Ok(report)
}

/// Loads a config file (or the defaults) for use by front ends.
pub fn load_or_default(path: Option<&Path>) -> Result<RunConfig, ToolError> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}
