//! End-to-end solution of a problem instance: reductions, the closed-form
//! families, the four-dimensional solver and, as a last resort, the oracle.
//! Also the file formats used by the command line tool and parameter sweeps.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closed_form::{
    gamma1_detection_window, single_detection_window, try_fidelity_form, try_single_state_detection,
};
use crate::error::{Error, Result};
use crate::linalg::{c64, trace_product_re, CMatrix, HermitianOperator, ToleranceContext};
use crate::model::{success_probability, MeasurementClassTag, UsdMeasurement, WeightedDensityPair};
use crate::oracle::{oracle_optimize, OracleConfig};
use crate::outcome::{Branch, SolverOutcome};
use crate::reductions::{is_strictly_skew, lift_measurement, reduce_fully, ReductionRecord};
use crate::solver4d::solve_4d;

/// Block-structure detection on the reduced pair is not implemented; pairs
/// that would need it end up with the oracle.
pub const BLOCK_DETECTION_NOTE: &str =
    "unsupported: detection of common two-dimensional block structure is not implemented";

#[derive(Debug, Clone)]
pub struct DispatchOptions {
    /// Run the oracle when no construction certifies optimality.
    pub oracle_fallback: bool,
    pub oracle: OracleConfig,
}

impl Default for DispatchOptions {
    fn default() -> Self {
        Self { oracle_fallback: true, oracle: OracleConfig::default() }
    }
}

/// The optimal measurement of `s`, with default options.
pub fn dispatch(s: &WeightedDensityPair) -> Result<SolverOutcome> {
    dispatch_with(s, &DispatchOptions::default())
}

pub fn dispatch_with(s: &WeightedDensityPair, opts: &DispatchOptions) -> Result<SolverOutcome> {
    if is_strictly_skew(s) {
        return solve_reduced(s, opts).map(|out| out.with_certificate(s));
    }
    let rec = reduce_fully(s)?;
    let reduced = solve_reduced(&rec.reduced_pair, opts)?;
    lift_outcome(reduced, &rec, s)
}

fn lift_outcome(reduced: SolverOutcome, rec: &ReductionRecord, s: &WeightedDensityPair) -> Result<SolverOutcome> {
    let m = lift_measurement(&reduced.measurement, rec)?;
    let mut out = SolverOutcome::evaluate(m, s, reduced.branch)?;
    out.boundary = reduced.boundary;
    out.warnings = reduced.warnings;
    out.warnings.extend(rec.warnings.iter().cloned());
    Ok(out.with_certificate(s))
}

/// Solves a strictly skew pair (possibly with a kernel of `S`).
fn solve_reduced(s: &WeightedDensityPair, opts: &DispatchOptions) -> Result<SolverOutcome> {
    let t = s.tol();
    let d = s.dim();
    if s.total().rank(t) == 0 {
        return SolverOutcome::evaluate(UsdMeasurement::inconclusive_only(d), s, Branch::ZeroPair);
    }
    let mut fallback: Vec<SolverOutcome> = Vec::new();
    for attempt in [try_single_state_detection(s)?, try_fidelity_form(s)?].into_iter().flatten() {
        if attempt.is_optimal() {
            return Ok(attempt);
        }
        fallback.push(attempt);
    }
    let rank1 = s.gamma1().rank(t);
    let rank2 = s.gamma2().rank(t);
    let mut notes = Vec::new();
    if s.total().rank(t) == 4 && rank1 == 2 && rank2 == 2 {
        match solve_4d(s) {
            Ok(out) => return Ok(out),
            Err(Error::NoSolutionFound(msg)) => notes.push(format!("four-dimensional solver: {msg}")),
            Err(e) => return Err(e),
        }
    } else {
        notes.push(BLOCK_DETECTION_NOTE.to_string());
    }
    best_known(s, fallback, notes, opts)
}

fn best_known(
    s: &WeightedDensityPair,
    candidates: Vec<SolverOutcome>,
    mut notes: Vec<String>,
    opts: &DispatchOptions,
) -> Result<SolverOutcome> {
    let mut pool: Vec<UsdMeasurement> = candidates.into_iter().map(|c| c.measurement).collect();
    if opts.oracle_fallback {
        match oracle_optimize(s, &opts.oracle) {
            Ok(r) => {
                notes.push(format!("oracle fallback used (gap bound {:.3e})", r.gap_bound));
                pool.push(r.measurement);
            }
            Err(e) => notes.push(format!("oracle fallback failed: {e}")),
        }
    }
    let best = pool
        .into_iter()
        .max_by(|a, b| success_probability(a, s).total_cmp(&success_probability(b, s)))
        .ok_or_else(|| Error::NoSolutionFound(notes.join("; ")))?;
    let mut out = SolverOutcome::evaluate(best, s, Branch::BestKnown)?;
    out.warnings = notes;
    Ok(out)
}

/// Lower and upper bounds on the optimal success as functions of `p1`.
///
/// The lower bound is the better of the two single-detection measurements
/// (after the reductions). The upper bound is the chord joining the two points
/// where single detection stops being optimal; it is exact outside them and
/// an upper bound in between because the optimum is convex in `p1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundTriangle {
    /// Single detection of `ρ2` is `(1 − p1) detect2 + p1 free1`.
    pub detect2: f64,
    pub free1: f64,
    /// Single detection of `ρ1` is `p1 detect1 + (1 − p1) free2`.
    pub detect1: f64,
    pub free2: f64,
    /// Last `p1` with single detection of `ρ2` optimal.
    pub corner_low: f64,
    /// First `p1` with single detection of `ρ1` optimal.
    pub corner_high: f64,
}

impl BoundTriangle {
    pub fn new(rho1: &HermitianOperator, rho2: &HermitianOperator, tol: &ToleranceContext) -> Result<Self> {
        let s = WeightedDensityPair::from_states(rho1, rho2, 0.5, *tol)?;
        let rec = reduce_fully(&s)?;
        let r = &rec.reduced_pair;
        let free1 = trace_product_re(rec.sigma1.matrix(), rho1.matrix());
        let free2 = trace_product_re(rec.sigma2.matrix(), rho2.matrix());
        let t1 = 2.0 * r.gamma1().trace();
        let t2 = 2.0 * r.gamma2().trace();
        if r.total().rank(tol) == 0 {
            return Ok(Self { detect2: free2, free1, detect1: free1, free2, corner_low: 0.0, corner_high: 1.0 });
        }
        let (lambda1, lambda2) = r.lambdas();
        let detect1 = free1 + trace_product_re(lambda1.matrix(), rho1.matrix());
        let detect2 = free2 + trace_product_re(lambda2.matrix(), rho2.matrix());
        let red1 = r.gamma1().scaled(1.0 / r.gamma1().trace());
        let red2 = r.gamma2().scaled(1.0 / r.gamma2().trace());
        let low = single_detection_window(&red1, &red2, tol)?;
        let high = gamma1_detection_window(&red1, &red2, tol)?;
        // Reduced prior q belongs to p1 = q t2 / (q t2 + (1 − q) t1).
        let to_p1 = |q: f64| q * t2 / (q * t2 + (1.0 - q) * t1);
        let corner_low = if low.empty { 0.0 } else { to_p1(low.upper) };
        let corner_high = if high.empty { 1.0 } else { to_p1(high.lower) };
        Ok(Self { detect2, free1, detect1, free2, corner_low, corner_high })
    }

    fn detect_second(&self, p1: f64) -> f64 {
        (1.0 - p1) * self.detect2 + p1 * self.free1
    }

    fn detect_first(&self, p1: f64) -> f64 {
        p1 * self.detect1 + (1.0 - p1) * self.free2
    }

    pub fn lower(&self, p1: f64) -> f64 {
        self.detect_second(p1).max(self.detect_first(p1))
    }

    pub fn upper(&self, p1: f64) -> f64 {
        let (a, b) = (self.corner_low, self.corner_high);
        if a >= b {
            return self.lower(p1);
        }
        if p1 <= a {
            return self.detect_second(p1);
        }
        if p1 >= b {
            return self.detect_first(p1);
        }
        let (ya, yb) = (self.detect_second(a), self.detect_first(b));
        ya + (yb - ya) * (p1 - a) / (b - a)
    }
}

/// One grid point of a sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub p1: f64,
    pub success_probability: f64,
    pub class_tag: MeasurementClassTag,
    pub branch: Branch,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub optimal: bool,
}

/// Two consecutive grid points with different class tags.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassBoundary {
    pub after: f64,
    pub before: f64,
    pub from: MeasurementClassTag,
    pub to: MeasurementClassTag,
}

/// Dispatches every grid point independently, in parallel; rows keep grid order.
pub fn sweep(problem: &ProblemFile, grid: &[f64]) -> Result<Vec<SweepRow>> {
    sweep_with(problem, grid, &DispatchOptions::default())
}

pub fn sweep_with(problem: &ProblemFile, grid: &[f64], opts: &DispatchOptions) -> Result<Vec<SweepRow>> {
    let (rho1, rho2) = problem.states()?;
    let tol = problem.tol;
    let bounds = BoundTriangle::new(&rho1, &rho2, &tol)?;
    grid.par_iter()
        .map(|&p1| {
            let s = WeightedDensityPair::from_states(&rho1, &rho2, p1, tol)?;
            let out = dispatch_with(&s, opts)?;
            Ok(SweepRow {
                p1,
                success_probability: out.success,
                class_tag: out.class_tag,
                branch: out.branch,
                lower_bound: bounds.lower(p1),
                upper_bound: bounds.upper(p1),
                optimal: out.is_optimal(),
            })
        })
        .collect()
}

/// `n` evenly spaced points from `min` to `max` inclusive.
pub fn uniform_grid(min: f64, max: f64, n: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && max < 1.0 && min <= max) || n == 0 {
        return Err(Error::InvalidInstance(format!("grid [{min}, {max}] with {n} points is not inside (0, 1)")));
    }
    if n == 1 {
        return Ok(vec![min]);
    }
    Ok((0..n).map(|k| min + (max - min) * k as f64 / (n - 1) as f64).collect())
}

pub fn class_boundaries(rows: &[SweepRow]) -> Vec<ClassBoundary> {
    rows.windows(2)
        .filter(|w| w[0].class_tag != w[1].class_tag)
        .map(|w| ClassBoundary { after: w[0].p1, before: w[1].p1, from: w[0].class_tag, to: w[1].class_tag })
        .collect()
}

/// Second differences of the success along a uniform grid.
pub fn second_differences(rows: &[SweepRow]) -> Vec<f64> {
    rows.windows(3)
        .map(|w| w[0].success_probability - 2.0 * w[1].success_probability + w[2].success_probability)
        .collect()
}

pub const CSV_HEADER: &str = "p1,success,class_e1,class_e2,branch,lower_bound,upper_bound";

/// `x` with 17 significant digits, positional where that stays readable.
pub fn format_sig17(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..17).contains(&exp) {
        let prec = (16 - exp).max(0) as usize;
        format!("{x:.prec$}")
    } else {
        format!("{x:.16e}")
    }
}

pub fn write_csv<W: Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            format_sig17(r.p1),
            format_sig17(r.success_probability),
            r.class_tag.e1_rank,
            r.class_tag.e2_rank,
            r.branch,
            format_sig17(r.lower_bound),
            format_sig17(r.upper_bound)
        )?;
    }
    Ok(())
}

/// A matrix as rows of `[re, im]` pairs.
pub type MatrixEntries = Vec<Vec<[f64; 2]>>;

pub fn to_entries(m: &CMatrix) -> MatrixEntries {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

pub fn from_entries(entries: &MatrixEntries, dim: usize, what: &str) -> Result<CMatrix> {
    if entries.len() != dim {
        return Err(Error::InvalidInstance(format!("{what}: expected {dim} rows, found {}", entries.len())));
    }
    let mut m = CMatrix::zeros(dim, dim);
    for (i, row) in entries.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::InvalidInstance(format!("{what}: row {i} has {} entries, expected {dim}", row.len())));
        }
        for (j, [re, im]) in row.iter().enumerate() {
            if !(re.is_finite() && im.is_finite()) {
                return Err(Error::InvalidInstance(format!("{what}[{i}][{j}] is not finite")));
            }
            m[(i, j)] = c64(*re, *im);
        }
    }
    Ok(m)
}

/// Pretty JSON that keeps each matrix row on a single line.
pub fn to_compact_json<T: Serialize>(value: &T) -> String {
    fn flat(v: &serde_json::Value) -> bool {
        match v {
            serde_json::Value::Array(a) => a.iter().all(|x| !x.is_object() && (!x.is_array() || flat_scalars(x))),
            _ => false,
        }
    }
    fn flat_scalars(v: &serde_json::Value) -> bool {
        v.as_array().is_some_and(|a| a.iter().all(|x| !x.is_array() && !x.is_object()))
    }
    fn go(v: &serde_json::Value, depth: usize, out: &mut String) {
        let pad = "  ".repeat(depth + 1);
        match v {
            serde_json::Value::Object(map) if !map.is_empty() => {
                out.push_str("{\n");
                for (i, (k, x)) in map.iter().enumerate() {
                    out.push_str(&format!("{pad}{}: ", serde_json::Value::String(k.clone())));
                    go(x, depth + 1, out);
                    out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
                }
                out.push_str(&format!("{}}}", "  ".repeat(depth)));
            }
            serde_json::Value::Array(items) if !items.is_empty() && !flat(v) => {
                out.push_str("[\n");
                for (i, x) in items.iter().enumerate() {
                    out.push_str(&pad);
                    go(x, depth + 1, out);
                    out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
                }
                out.push_str(&format!("{}]", "  ".repeat(depth)));
            }
            serde_json::Value::Array(items) => {
                let parts: Vec<String> = items.iter().map(|x| x.to_string()).collect();
                out.push('[');
                out.push_str(&parts.join(", "));
                out.push(']');
            }
            other => out.push_str(&other.to_string()),
        }
    }
    let v = serde_json::to_value(value).expect("plain data");
    let mut out = String::new();
    go(&v, 0, &mut out);
    out.push('\n');
    out
}

fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.inner();
        Error::InvalidInstance(format!(
            "malformed JSON at line {} column {} (field `{}`): {inner}",
            inner.line(),
            inner.column(),
            e.path()
        ))
    })
}

/// Two density operators and optionally a prior.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemFile {
    pub dim: usize,
    pub rho1: MatrixEntries,
    pub rho2: MatrixEntries,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p1: Option<f64>,
    #[serde(skip, default)]
    pub tol: ToleranceContext,
}

impl ProblemFile {
    pub fn from_states(rho1: &HermitianOperator, rho2: &HermitianOperator, p1: Option<f64>) -> Self {
        Self {
            dim: rho1.dim(),
            rho1: to_entries(rho1.matrix()),
            rho2: to_entries(rho2.matrix()),
            p1,
            tol: ToleranceContext::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = parse_json(text)?;
        p.states()?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        to_compact_json(self)
    }

    /// Both operators, checked to be Hermitian, PSD and of unit trace.
    pub fn states(&self) -> Result<(HermitianOperator, HermitianOperator)> {
        if self.dim == 0 {
            return Err(Error::InvalidInstance("dim must be positive".into()));
        }
        let t = &self.tol;
        let mut out = Vec::with_capacity(2);
        for (name, entries) in [("rho1", &self.rho1), ("rho2", &self.rho2)] {
            let rho = HermitianOperator::new(from_entries(entries, self.dim, name)?, t)?;
            if !rho.is_psd(t) {
                return Err(Error::NotPsd { min_eigenvalue: rho.min_eigenvalue() });
            }
            let tr = rho.trace();
            if (tr - 1.0).abs() > 1e-8 {
                return Err(Error::InvalidInstance(format!("{name} has trace {tr}, expected 1")));
            }
            out.push(rho);
        }
        let rho2 = out.pop().expect("two states");
        Ok((out.pop().expect("two states"), rho2))
    }

    /// The weighted pair at `p1`, falling back to the prior in the file.
    pub fn pair(&self, p1: Option<f64>) -> Result<WeightedDensityPair> {
        let p1 = p1
            .or(self.p1)
            .ok_or_else(|| Error::InvalidInstance("no prior p1 given in the file or on the command line".into()))?;
        let (rho1, rho2) = self.states()?;
        WeightedDensityPair::from_states(&rho1, &rho2, p1, self.tol)
    }
}

/// A measurement in the same nested-array convention.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasurementFile {
    pub dim: usize,
    pub e1: MatrixEntries,
    pub e2: MatrixEntries,
    pub e_inconclusive: MatrixEntries,
}

impl MeasurementFile {
    pub fn from_measurement(m: &UsdMeasurement) -> Self {
        Self {
            dim: m.dim(),
            e1: to_entries(m.e1.matrix()),
            e2: to_entries(m.e2.matrix()),
            e_inconclusive: to_entries(m.e_inconclusive.matrix()),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        parse_json(text)
    }

    pub fn to_json(&self) -> String {
        to_compact_json(self)
    }

    pub fn measurement(&self, tol: &ToleranceContext) -> Result<UsdMeasurement> {
        let op = |e: &MatrixEntries, name: &str| HermitianOperator::new(from_entries(e, self.dim, name)?, tol);
        Ok(UsdMeasurement::new(op(&self.e1, "e1")?, op(&self.e2, "e2")?, op(&self.e_inconclusive, "e_inconclusive")?))
    }
}

/// What `solve` reports.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub p1: f64,
    pub success: f64,
    pub class_e1: usize,
    pub class_e2: usize,
    pub von_neumann: bool,
    pub branch: Branch,
    pub optimal: bool,
    pub boundary: bool,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub optimality_residual: f64,
    pub certificate_residual: Option<f64>,
    pub warnings: Vec<String>,
    pub measurement: MeasurementFile,
}

impl SolveReport {
    pub fn new(out: &SolverOutcome, p1: f64, bounds: &BoundTriangle) -> Self {
        Self {
            p1,
            success: out.success,
            class_e1: out.class_tag.e1_rank,
            class_e2: out.class_tag.e2_rank,
            von_neumann: out.class_tag.is_von_neumann,
            branch: out.branch,
            optimal: out.is_optimal(),
            boundary: out.boundary,
            lower_bound: bounds.lower(p1),
            upper_bound: bounds.upper(p1),
            optimality_residual: out.report.total_residual(),
            certificate_residual: out.certificate.as_ref().map(|c| c.residuals.max()),
            warnings: out.warnings.clone(),
            measurement: MeasurementFile::from_measurement(&out.measurement),
        }
    }
}

/// Summary of the reductions for the `reduce` subcommand.
#[derive(Debug, Clone, Serialize)]
pub struct ReductionSummary {
    pub strictly_skew: bool,
    pub dim: usize,
    pub common_support_dim: usize,
    pub orthogonal_dims: [usize; 2],
    pub reduced_support_dim: usize,
    pub reduced_ranks: [usize; 2],
    pub lifted_offset: f64,
    pub warnings: Vec<String>,
}

pub fn reduction_summary(s: &WeightedDensityPair) -> Result<ReductionSummary> {
    let rec = reduce_fully(s)?;
    let t = s.tol();
    let (par, o1, o2) = rec.dims();
    let r = &rec.reduced_pair;
    Ok(ReductionSummary {
        strictly_skew: is_strictly_skew(s),
        dim: s.dim(),
        common_support_dim: par,
        orthogonal_dims: [o1, o2],
        reduced_support_dim: r.total().rank(t),
        reduced_ranks: [r.gamma1().rank(t), r.gamma2().rank(t)],
        lifted_offset: rec.lifted_offset,
        warnings: rec.warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{example1_states, peres_pair, peres_success};
    use crate::random::{random_density, seeded};

    #[test]
    fn peres_pair_is_solved_by_the_fidelity_form() {
        let out = dispatch(&peres_pair()).unwrap();
        assert!((out.success - peres_success()).abs() < 1e-12);
        assert_eq!(out.branch, Branch::FidelityForm);
        assert!(out.is_optimal());
    }

    #[test]
    fn format_keeps_seventeen_significant_digits() {
        assert_eq!(format_sig17(0.5), "0.50000000000000000");
        for x in [1.0 - 1.0 / 2f64.sqrt(), 0.123_456_789_012_345_68, 3.0e-3] {
            let text = format_sig17(x);
            assert_eq!(text.parse::<f64>().unwrap(), x);
            let digits = text.trim_start_matches(['0', '.']).chars().filter(|c| c.is_ascii_digit()).count();
            assert_eq!(digits, 17, "{text}");
        }
        assert_eq!(format_sig17(0.0), "0");
        assert_eq!(format_sig17(12.5), "12.500000000000000");
        assert!(format_sig17(1e-9).contains('e'));
    }

    #[test]
    fn problem_file_round_trips() {
        let (r1, r2) = example1_states();
        let p = ProblemFile::from_states(&r1, &r2, Some(0.3));
        let back = ProblemFile::from_json(&p.to_json()).unwrap();
        let (b1, b2) = back.states().unwrap();
        assert!((b1.matrix() - r1.matrix()).norm() < 1e-15);
        assert!((b2.matrix() - r2.matrix()).norm() < 1e-15);
        assert_eq!(back.p1, Some(0.3));
        let text = p.to_json();
        assert_eq!(text.lines().count(), 16, "{text}");
        assert!(text.contains("    [[0.3333333333333333,0.0], [0.0,0.0], [0.0,0.0], [0.0,0.0]],"), "{text}");
    }

    #[test]
    fn malformed_json_reports_line_and_field() {
        let text = "{\n  \"dim\": 2,\n  \"rho1\": [[[1, 0], [0, 0]], [[0, 0], \"x\"]],\n  \"rho2\": []\n}";
        let err = ProblemFile::from_json(text).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        assert!(err.contains("rho1"), "{err}");
    }

    #[test]
    fn invalid_states_are_rejected() {
        let bad_trace = r#"{"dim":1,"rho1":[[[2,0]]],"rho2":[[[1,0]]]}"#;
        assert!(matches!(ProblemFile::from_json(bad_trace), Err(Error::InvalidInstance(_))));
        let not_psd = r#"{"dim":2,"rho1":[[[1.5,0],[0,0]],[[0,0],[-0.5,0]]],"rho2":[[[1,0],[0,0]],[[0,0],[0,0]]]}"#;
        assert!(matches!(ProblemFile::from_json(not_psd), Err(Error::NotPsd { .. })));
        let ragged = r#"{"dim":2,"rho1":[[[1,0]]],"rho2":[[[1,0]]]}"#;
        assert!(ProblemFile::from_json(ragged).is_err());
    }

    #[test]
    fn csv_layout() {
        let (r1, r2) = example1_states();
        let p = ProblemFile::from_states(&r1, &r2, None);
        let rows = sweep(&p, &[0.01, 0.5]).unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0.010000000000000000,"));
        assert!(lines[1].contains(",0,2,single_detect_gamma2,"));
        assert!(!text.contains('\r'));
    }

    #[test]
    fn bounds_enclose_the_optimum_on_a_full_rank_pair() {
        let mut rng = seeded(5);
        let rho1 = random_density(&mut rng, 3, 3);
        let rho2 = random_density(&mut rng, 3, 3);
        let p = ProblemFile::from_states(&rho1, &rho2, None);
        // Full-rank states share their support: nothing can be identified.
        let rows = sweep(&p, &uniform_grid(0.1, 0.9, 5).unwrap()).unwrap();
        for r in rows {
            assert!(r.success_probability.abs() < 1e-12);
            assert!(r.lower_bound.abs() < 1e-12 && r.upper_bound.abs() < 1e-12);
            assert_eq!(r.branch, Branch::ZeroPair);
        }
    }

    #[test]
    fn grid_validation() {
        assert_eq!(uniform_grid(0.2, 0.4, 3).unwrap(), vec![0.2, 0.30000000000000004, 0.4]);
        assert!(uniform_grid(0.0, 0.5, 3).is_err());
        assert!(uniform_grid(0.5, 0.4, 3).is_err());
    }
}
