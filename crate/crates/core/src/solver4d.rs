//! Complete optimal solution for strictly skew pairs on a four-dimensional
//! support with `rank γ1 = rank γ2 = 2`.
//!
//! Six measurement types can occur. Single-state detection and the fidelity
//! form are handled by [`crate::closed_form`]; the remaining classes `[1,2]`
//! and `[1,1]` reduce to the real roots of a polynomial, each root giving a
//! candidate that is then accepted or rejected by explicit inequalities and
//! the optimality test.

use serde::{Deserialize, Serialize};

use crate::closed_form::{try_fidelity_form, try_single_state_detection};
use crate::error::{Error, Result};
use crate::linalg::{c64, jordan_bases_with, kernel, outer, support, CMatrix, CVector, HermitianOperator, C64};
use crate::model::{complete_measurement, UsdMeasurement, WeightedDensityPair};
use crate::outcome::{Branch, SolverOutcome};
use crate::reductions::is_strictly_skew;

/// Dense real polynomials, coefficients in ascending order.
pub mod poly {
    use nalgebra::DMatrix;

    pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut out = vec![0.0; a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    }

    pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; a.len().max(b.len())];
        for (i, x) in a.iter().enumerate() {
            out[i] += x;
        }
        for (i, y) in b.iter().enumerate() {
            out[i] += y;
        }
        out
    }

    pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
        add(a, &scale(b, -1.0))
    }

    pub fn scale(a: &[f64], k: f64) -> Vec<f64> {
        a.iter().map(|x| x * k).collect()
    }

    pub fn eval(p: &[f64], x: f64) -> f64 {
        p.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn derivative(p: &[f64]) -> Vec<f64> {
        p.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect()
    }

    /// Coefficients of `q(y)` with `p(x) = q(x²)`; odd coefficients are dropped.
    pub fn even_part(p: &[f64]) -> Vec<f64> {
        p.iter().step_by(2).copied().collect()
    }

    /// Drops leading coefficients that are negligible next to the largest one.
    pub fn trimmed(p: &[f64]) -> Vec<f64> {
        let largest = p.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        let mut out = p.to_vec();
        while out.last().is_some_and(|c| c.abs() <= 1e-14 * largest) {
            out.pop();
        }
        out
    }

    /// Real roots via the eigenvalues of the companion matrix, polished by
    /// Newton steps and deduplicated. A root counts as real when its imaginary
    /// part is at most `1e-8 (1 + |re|)`.
    pub fn real_roots(p: &[f64]) -> Vec<f64> {
        let p = trimmed(p);
        if p.len() < 2 {
            return Vec::new();
        }
        let n = p.len() - 1;
        let lead = p[n];
        let mut companion = DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            companion[(i, i - 1)] = 1.0;
        }
        for i in 0..n {
            companion[(i, n - 1)] = -p[i] / lead;
        }
        let dp = derivative(&p);
        let mut roots: Vec<f64> = companion
            .complex_eigenvalues()
            .iter()
            .filter(|z| z.im.abs() <= 1e-8 * (1.0 + z.re.abs()))
            .map(|z| polish(&p, &dp, z.re))
            .collect();
        roots.sort_by(|a, b| a.total_cmp(b));
        roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-10 * (1.0 + b.abs()));
        roots
    }

    fn polish(p: &[f64], dp: &[f64], mut x: f64) -> f64 {
        let mut best = (eval(p, x).abs(), x);
        for _ in 0..50 {
            let d = eval(dp, x);
            if d == 0.0 {
                break;
            }
            let step = eval(p, x) / d;
            x -= step;
            let v = eval(p, x).abs();
            if v < best.0 {
                best = (v, x);
            }
            if step.abs() <= 1e-16 * (1.0 + x.abs()) {
                break;
            }
        }
        best.1
    }
}

/// `u† A v`.
fn sandwich(u: &CVector, a: &CMatrix, v: &CVector) -> C64 {
    u.dotc(&(a * v))
}

fn real_vec(v: &CVector, k: f64) -> CVector {
    v * c64(k, 0.0)
}

/// Which state's support hosts `ker(1 − E?)` in class `[1,2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Host {
    /// Type `(1,2)`.
    Gamma1,
    /// Type `(2,1)`.
    Gamma2,
}

impl Host {
    pub fn branch(&self) -> Branch {
        match self {
            Host::Gamma1 => Branch::Class12,
            Host::Gamma2 => Branch::Class21,
        }
    }
}

/// Why a candidate was turned down.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    /// `ν ≥ 1`.
    NuGeOne {
        nu: f64,
    },
    /// `|⟨ψ1⊥|ψ2⟩|² ⟨ψ2|γ2|ψ2⟩ < ⟨ψ1⊥|γ1|ψ1⊥⟩`.
    Gamma1Inequality {
        margin: f64,
    },
    /// `|⟨ψ2⊥|ψ1⟩|² ⟨ψ1|γ1|ψ1⟩ < ⟨ψ2⊥|γ2|ψ2⊥⟩`.
    Gamma2Inequality {
        margin: f64,
    },
    NotPsd {
        min_eigenvalue: f64,
    },
    /// The constructed `E?` is not a valid inconclusive operator.
    InvalidInconclusive {
        reason: String,
    },
    OptimalityResidual {
        residual: f64,
    },
}

#[derive(Debug, Clone)]
pub enum Verdict {
    Accepted(UsdMeasurement),
    Rejected(Rejection),
}

impl Verdict {
    pub fn accepted(self) -> Option<UsdMeasurement> {
        match self {
            Verdict::Accepted(m) => Some(m),
            Verdict::Rejected(_) => None,
        }
    }
}

/// Candidates of one family plus remarks worth surfacing (for instance
/// numerical solutions that were discarded by a uniqueness argument).
#[derive(Debug, Clone)]
pub struct Enumeration<T> {
    pub candidates: Vec<T>,
    pub notes: Vec<String>,
}

/// Spectral data of the eigenbasis `(s1, s2)` of `supp γ1` used by class `[1,2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GCoefficients12 {
    pub g11: f64,
    pub g12: f64,
    pub g21: f64,
    pub g22: f64,
    /// `⟨s1|γ2|s2⟩`, made real and non-negative by the phase of `s2`.
    pub g23: f64,
    pub g1: f64,
    pub g2: f64,
}

#[derive(Debug, Clone)]
pub struct Candidate12 {
    pub host: Host,
    pub phi: CVector,
    pub phi_perp: CVector,
    /// `None` for the two eigenbasis candidates.
    pub x: Option<f64>,
    pub g: GCoefficients12,
    pub a_over_b: f64,
    /// `√ν|n⟩ = K|φ⊥⟩`.
    pub n_vector: CVector,
    pub nu: f64,
    /// Residual of the complex equation
    /// `√⟨φ⊥|γ1|φ⊥⟩ ⟨φ⊥|γ2|φ⟩ = √⟨φ⊥|γ2|φ⊥⟩ ⟨φ⊥|γ1|φ⟩`.
    pub equation_residual: f64,
}

fn require_four_dim(s: &WeightedDensityPair) -> Result<()> {
    let t = s.tol();
    let (r1, r2, rs) = (s.gamma1().rank(t), s.gamma2().rank(t), s.total().rank(t));
    if s.dim() != 4 || rs != 4 || r1 != 2 || r2 != 2 {
        return Err(Error::PreconditionViolated(format!(
            "expected a full-rank pair on C^4 with ranks (2, 2); got dim {}, rank S {rs}, ranks ({r1}, {r2})",
            s.dim()
        )));
    }
    Ok(())
}

fn scale_of(s: &WeightedDensityPair) -> f64 {
    s.total_trace().max(f64::MIN_POSITIVE)
}

/// Eigenbasis `(s1, s2)` of `supp γ1` with the phase and degeneracy conventions.
fn eigenbasis_12(s: &WeightedDensityPair) -> (CVector, CVector, GCoefficients12) {
    let t = s.tol();
    let g1m = s.gamma1().matrix();
    let g2m = s.gamma2().matrix();
    let eig = s.gamma1().eigh();
    let n = eig.values.len();
    let mut s1 = eig.vectors.column(n - 1).into_owned();
    let mut s2 = eig.vectors.column(n - 2).into_owned();
    let (g11, g12) = (eig.values[n - 1], eig.values[n - 2]);
    if (g11 - g12).abs() <= t.equality * s.gamma1().trace() {
        // Degenerate γ1 on its support: pick the basis diagonalizing γ2 there.
        let basis = CMatrix::from_columns(&[s1.clone(), s2.clone()]);
        let rot = crate::linalg::eigh(&(basis.adjoint() * g2m * &basis)).vectors;
        let rotated = basis * rot;
        s1 = rotated.column(1).into_owned();
        s2 = rotated.column(0).into_owned();
    }
    let g11 = sandwich(&s1, g1m, &s1).re;
    let g12 = sandwich(&s2, g1m, &s2).re;
    let z = sandwich(&s1, g2m, &s2);
    if z.norm() > 0.0 {
        s2 *= z.conj() / z.norm();
    }
    let g21 = sandwich(&s1, g2m, &s1).re;
    let g22 = sandwich(&s2, g2m, &s2).re;
    let g23 = sandwich(&s1, g2m, &s2).re.max(0.0);
    let g = GCoefficients12 { g11, g12, g21, g22, g23, g1: g11 - g12, g2: g21 - g22 };
    (s1, s2, g)
}

/// The degree-six polynomial in `x` whose real roots parametrize the class
/// `[1,2]` candidates when `g23 ≠ 0`.
pub fn polynomial_12(g: &GCoefficients12) -> Vec<f64> {
    use poly::*;
    let lhs = mul(&[0.0, 0.0, g.g1 * g.g1], &[g.g22, -2.0 * g.g23, g.g21]);
    let lin = [-g.g23, g.g2, g.g23];
    let rhs = mul(&mul(&lin, &lin), &[g.g12, 0.0, g.g11]);
    sub(&lhs, &rhs)
}

/// Builds `a/b`, `√ν|n⟩ = K|φ⊥⟩` and `ν` for a basis `(φ, φ⊥)` of `supp γ1`.
fn complete_candidate_12(
    s: &WeightedDensityPair,
    host: Host,
    phi: CVector,
    phi_perp: CVector,
    x: Option<f64>,
    g: GCoefficients12,
) -> Candidate12 {
    let t = s.tol();
    let (g1m, g2m) = (s.gamma1().matrix(), s.gamma2().matrix());
    let p1 = sandwich(&phi_perp, g1m, &phi_perp).re;
    let p2 = sandwich(&phi_perp, g2m, &phi_perp).re;
    let lhs = c64(p1.max(0.0).sqrt(), 0.0) * sandwich(&phi_perp, g2m, &phi);
    let rhs = c64(p2.max(0.0).sqrt(), 0.0) * sandwich(&phi_perp, g1m, &phi);
    let equation_residual = (lhs - rhs).norm();
    let a_over_b = (p2 / p1).sqrt();
    let r = a_over_b.sqrt();
    let k = s.total().pinv(t).matrix() * (g1m * c64(r, 0.0) + g2m * c64(1.0 / r, 0.0));
    let n_vector = &k * &phi_perp;
    let nu = n_vector.norm_squared();
    Candidate12 { host, phi, phi_perp, x, g, a_over_b, n_vector, nu, equation_residual }
}

/// Candidates for class `[1,2]` (`host = Gamma1`) or `[2,1]` (`host = Gamma2`).
///
/// Expects a full-rank pair on `C^4` with both ranks equal to two.
pub fn enumerate_candidates_12(s: &WeightedDensityPair, host: Host) -> Result<Enumeration<Candidate12>> {
    require_four_dim(s)?;
    let work = match host {
        Host::Gamma1 => s.clone(),
        Host::Gamma2 => s.swapped(),
    };
    let t = work.tol();
    let slack = t.psd_floor * scale_of(&work);
    let (s1, s2, g) = eigenbasis_12(&work);
    let diff = (work.gamma2() - work.gamma1()).into_matrix();
    let mut candidates = Vec::new();
    let mut notes = Vec::new();

    if g.g23 <= t.equality * scale_of(&work) {
        if g.g21 >= g.g11 - slack {
            candidates.push(complete_candidate_12(&work, host, s1.clone(), s2.clone(), None, g));
        }
        if g.g22 >= g.g12 - slack {
            candidates.push(complete_candidate_12(&work, host, s2.clone(), s1.clone(), None, g));
        }
        let lead = g.g1 * g.g1 * g.g21 - g.g2 * g.g2 * g.g11;
        let rest = g.g2 * g.g2 * g.g12 - g.g1 * g.g1 * g.g22;
        if lead.abs() > t.equality && rest / lead > 0.0 {
            notes.push(format!(
                "{host:?}: discarded the continuous family x = ±{:.6e} (any phase) since it cannot be the unique optimum",
                (rest / lead).sqrt()
            ));
        } else if lead.abs() <= t.equality && rest.abs() <= t.equality {
            notes.push(format!("{host:?}: every x solves the reduced equation; all such solutions were discarded"));
        }
    } else {
        for x in poly::real_roots(&polynomial_12(&g)) {
            if x.abs() <= 1e-12 {
                continue;
            }
            if x * g.g1 * (x * g.g2 + g.g23 * (x * x - 1.0)) < -slack {
                continue;
            }
            let norm = 1.0 / (1.0 + x * x).sqrt();
            let phi = real_vec(&(&s1 + real_vec(&s2, x)), norm);
            let phi_perp = real_vec(&(real_vec(&s1, x) - &s2), norm);
            if sandwich(&phi, &diff, &phi).re < -slack {
                continue;
            }
            candidates.push(complete_candidate_12(&work, host, phi, phi_perp, Some(x), g));
        }
    }
    Ok(Enumeration { candidates, notes })
}

/// Builds `E? = ν|n⟩⟨n| + |φ⟩⟨φ|`, completes it and re-checks optimality.
pub fn finalize_candidate_12(c: &Candidate12, s: &WeightedDensityPair) -> Result<Verdict> {
    if c.nu >= 1.0 {
        return Ok(Verdict::Rejected(Rejection::NuGeOne { nu: c.nu }));
    }
    let e_q = HermitianOperator::from_hermitian_part(
        outer(&c.n_vector, &c.n_vector) + outer(&c.phi, &c.phi) + s.pi_perp().matrix(),
    );
    accept_if_optimal(&e_q, s)
}

fn accept_if_optimal(e_q: &HermitianOperator, s: &WeightedDensityPair) -> Result<Verdict> {
    let m = match complete_measurement(e_q, s) {
        Ok(m) => m,
        Err(Error::InvalidInconclusive(reason)) => {
            return Ok(Verdict::Rejected(Rejection::InvalidInconclusive { reason }))
        }
        Err(e) => return Err(e),
    };
    let report = crate::optimality::check_optimality(&m, s)?;
    if !report.is_optimal {
        return Ok(Verdict::Rejected(Rejection::OptimalityResidual { residual: report.total_residual() }));
    }
    Ok(Verdict::Accepted(m))
}

/// Which construction produced a class `[1,1]` candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin11 {
    /// `ψ1 = k21`.
    FirstJordanVector,
    /// `ψ1 = k22`.
    SecondJordanVector,
    /// A real root of the polynomial, `ϑ` from the imaginary part.
    PolynomialRoot,
    /// `A1 = A2 = 0`: closed-form `x²`, `ϑ` from the real part.
    ClosedForm,
}

/// Jordan-basis data shared by all class `[1,1]` candidates of an instance.
#[derive(Debug, Clone, Serialize)]
pub struct JordanData11 {
    /// `⟨k11|k21⟩ ≥ ⟨k12|k22⟩`.
    pub cosines: [f64; 2],
    /// `φ ∈ [0, π)`.
    pub phase: f64,
    pub c: f64,
    pub g11: f64,
    pub g12: f64,
    pub g21: f64,
    pub g22: f64,
    pub g13: f64,
    pub g23: f64,
    pub g1: f64,
    pub g2: f64,
    /// Columns `k11, k12` (basis of `ker γ1`).
    #[serde(skip)]
    pub k1: CMatrix,
    /// Columns `k21, k22` (basis of `ker γ2`).
    #[serde(skip)]
    pub k2: CMatrix,
}

/// `(A1, A2, B1, B2, B3)` evaluated at a root.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficients11 {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
}

#[derive(Debug, Clone)]
pub struct Candidate11 {
    pub psi1: CVector,
    pub psi1_perp: CVector,
    pub psi2: CVector,
    pub psi2_perp: CVector,
    pub x: Option<f64>,
    pub theta: f64,
    pub origin: Origin11,
    pub coefficients: Option<Coefficients11>,
    /// Residual of `⟨ψ2⊥|ψ1⟩⟨ψ1|γ1|ψ1⊥⟩ = ⟨ψ2|ψ1⊥⟩⟨ψ2⊥|γ2|ψ2⟩`.
    pub equation_residual: f64,
}

/// Jordan bases of `ker γ1` and `ker γ2` with the class `[1,1]` conventions.
pub fn jordan_data_11(s: &WeightedDensityPair) -> Result<JordanData11> {
    require_four_dim(s)?;
    let t = s.tol();
    let ker1 = kernel(s.gamma1(), t)?;
    let ker2 = kernel(s.gamma2(), t)?;
    let jb = jordan_bases_with(&ker1, &ker2, Some(s.gamma1()), t)?;
    let cosines = [jb.cosines[0], jb.cosines[1]];
    if cosines[1] <= t.equality || cosines[0] >= 1.0 - t.equality {
        return Err(Error::SkewViolation(format!("Jordan cosines {cosines:?} must lie strictly inside (0, 1)")));
    }
    let (g1m, g2m) = (s.gamma1().matrix(), s.gamma2().matrix());
    let (k11, mut k12) = (jb.a_vec(0), jb.a_vec(1));
    let (k21, mut k22) = (jb.b_vec(0), jb.b_vec(1));
    let z1 = sandwich(&k21, g1m, &k22);
    let z2 = sandwich(&k11, g2m, &k12);
    let zero = t.equality * scale_of(s);
    let (g13, g23) = (z1.norm(), z2.norm());
    let (phase, alpha) = match (g13 > zero, g23 > zero) {
        (true, true) => {
            let phase = (0.5 * (z1.arg() - z2.arg())).rem_euclid(std::f64::consts::PI);
            (phase, phase - z1.arg())
        }
        (true, false) => (0.0, -z1.arg()),
        (false, true) => (0.0, -z2.arg()),
        (false, false) => (0.0, 0.0),
    };
    let rot = C64::from_polar(1.0, alpha);
    k12 *= rot;
    k22 *= rot;
    let g11 = sandwich(&k21, g1m, &k21).re;
    let g12 = sandwich(&k22, g1m, &k22).re;
    let g21 = sandwich(&k11, g2m, &k11).re;
    let g22 = sandwich(&k12, g2m, &k12).re;
    Ok(JordanData11 {
        cosines,
        phase,
        c: cosines[1] / cosines[0],
        g11,
        g12,
        g21,
        g22,
        g13: if g13 > zero { g13 } else { 0.0 },
        g23: if g23 > zero { g23 } else { 0.0 },
        g1: g11 - g12,
        g2: g21 - g22,
        k1: CMatrix::from_columns(&[k11, k12]),
        k2: CMatrix::from_columns(&[k21, k22]),
    })
}

/// Polynomials `A1, A2, B1, B2, B3` in `x`.
fn coefficient_polys(d: &JordanData11) -> [Vec<f64>; 5] {
    use poly::*;
    let c = d.c;
    let (cp, sp) = (d.phase.cos(), d.phase.sin());
    let p = [1.0, 0.0, c * c];
    let q = [1.0, 0.0, 1.0];
    let p2 = mul(&p, &p);
    let q2 = mul(&q, &q);
    let u = scale(&q, c * d.g23);
    let v = scale(&p, d.g13);
    let a1 = scale(&sub(&u, &v), cp);
    let a2 = scale(&add(&u, &v), sp);
    let b1 = sub(&mul(&p2, &[0.0, d.g1]), &mul(&q2, &[0.0, c * c * d.g2]));
    let w1 = mul(&p2, &[-d.g13, 0.0, d.g13]);
    let w2 = mul(&q2, &[-c * d.g23, 0.0, c * c * c * d.g23]);
    let b2 = scale(&sub(&w1, &w2), cp);
    let b3 = scale(&add(&w1, &w2), sp);
    [a1, a2, b1, b2, b3]
}

/// The even polynomial `B1²(A1² + A2²) − (A1B2 − A2B3)²` in `x` (degree at
/// most sixteen).
pub fn polynomial_11(d: &JordanData11) -> Vec<f64> {
    use poly::*;
    let [a1, a2, b1, b2, b3] = coefficient_polys(d);
    let aa = add(&mul(&a1, &a1), &mul(&a2, &a2));
    let cross = sub(&mul(&a1, &b2), &mul(&a2, &b3));
    sub(&mul(&mul(&b1, &b1), &aa), &mul(&cross, &cross))
}

fn build_candidate_11(
    s: &WeightedDensityPair,
    d: &JordanData11,
    x: f64,
    theta: f64,
    origin: Origin11,
    coefficients: Option<Coefficients11>,
) -> Candidate11 {
    let k11 = d.k1.column(0).into_owned();
    let k12 = d.k1.column(1).into_owned();
    let k21 = d.k2.column(0).into_owned();
    let k22 = d.k2.column(1).into_owned();
    let (psi1, psi1_perp, psi2, psi2_perp) = match origin {
        Origin11::FirstJordanVector => (k21, k22, k12, k11),
        Origin11::SecondJordanVector => (k22, k21, k11, k12),
        _ => {
            let e = C64::from_polar(x, theta);
            let n1 = c64(1.0 / (1.0 + x * x).sqrt(), 0.0);
            let n2 = c64(1.0 / (1.0 + d.c * d.c * x * x).sqrt(), 0.0);
            let c = c64(d.c, 0.0);
            (
                (&k21 + &k22 * e) * n1,
                (&k21 * e.conj() - &k22) * n1,
                (&k12 - &k11 * (e.conj() * c)) * n2,
                (-&k11 - &k12 * (e * c)) * n2,
            )
        }
    };
    let (g1m, g2m) = (s.gamma1().matrix(), s.gamma2().matrix());
    let lhs = psi2_perp.dotc(&psi1) * sandwich(&psi1, g1m, &psi1_perp);
    let rhs = psi2.dotc(&psi1_perp) * sandwich(&psi2_perp, g2m, &psi2);
    let equation_residual = (lhs - rhs).norm();
    Candidate11 { psi1, psi1_perp, psi2, psi2_perp, x: Some(x), theta, origin, coefficients, equation_residual }
        .normalized_origin()
}

impl Candidate11 {
    fn normalized_origin(mut self) -> Self {
        if matches!(self.origin, Origin11::FirstJordanVector | Origin11::SecondJordanVector) {
            self.x = None;
        }
        self
    }

    /// Margins of the two acceptance inequalities (non-negative when satisfied).
    pub fn inequality_margins(&self, s: &WeightedDensityPair) -> (f64, f64) {
        let (g1m, g2m) = (s.gamma1().matrix(), s.gamma2().matrix());
        let m1 = self.psi1_perp.dotc(&self.psi2).norm_sqr() * sandwich(&self.psi2, g2m, &self.psi2).re
            - sandwich(&self.psi1_perp, g1m, &self.psi1_perp).re;
        let m2 = self.psi2_perp.dotc(&self.psi1).norm_sqr() * sandwich(&self.psi1, g1m, &self.psi1).re
            - sandwich(&self.psi2_perp, g2m, &self.psi2_perp).re;
        (m1, m2)
    }
}

/// Residual threshold for the defining complex equation of a candidate.
const EQUATION_RESIDUAL: f64 = 1e-8;

/// Candidates for class `[1,1]`.
///
/// Fails with [`Error::DegenerateFamily`] when `g13 = g23 = 0` and a
/// one-parameter family of solutions satisfies every condition, which would
/// contradict uniqueness of the optimum.
pub fn enumerate_candidates_11(s: &WeightedDensityPair) -> Result<Enumeration<Candidate11>> {
    let d = jordan_data_11(s)?;
    let t = s.tol();
    let scale = scale_of(s);
    let zero = t.equality * scale;
    let sin_zero = d.phase.sin().abs() <= t.equality;
    let mut raw = Vec::new();
    let mut notes = Vec::new();

    if sin_zero && (d.c * d.g23 - d.g13).abs() <= zero {
        raw.push(build_candidate_11(s, &d, 0.0, 0.0, Origin11::FirstJordanVector, None));
    }
    if sin_zero && (d.c * d.g13 - d.g23).abs() <= zero {
        raw.push(build_candidate_11(s, &d, 0.0, 0.0, Origin11::SecondJordanVector, None));
    }

    if d.g13 == 0.0 && d.g23 == 0.0 {
        // θ drops out of every condition; a valid x ≠ 0 would be a whole family.
        let c2 = d.c * d.c;
        let p = poly::sub(
            &poly::scale(&poly::mul(&[1.0, c2], &[1.0, c2]), d.g1),
            &poly::scale(&poly::mul(&[1.0, 1.0], &[1.0, 1.0]), c2 * d.g2),
        );
        for y in poly::real_roots(&p).into_iter().filter(|y| *y > 1e-12) {
            for x in [y.sqrt(), -y.sqrt()] {
                let cand = build_candidate_11(s, &d, x, 0.0, Origin11::PolynomialRoot, None);
                let (m1, m2) = cand.inequality_margins(s);
                if m1 >= -t.psd_floor && m2 >= -t.psd_floor {
                    return Err(Error::DegenerateFamily(format!(
                        "g13 = g23 = 0 and x = {x:.6e} satisfies every condition for all phases"
                    )));
                }
            }
        }
    } else {
        let polys = coefficient_polys(&d);
        let at = |x: f64| {
            let v: Vec<f64> = polys.iter().map(|p| poly::eval(p, x)).collect();
            Coefficients11 { a1: v[0], a2: v[1], b1: v[2], b2: v[3], b3: v[4] }
        };
        let even = poly::even_part(&polynomial_11(&d));
        for y in poly::real_roots(&even).into_iter().filter(|y| *y > 1e-12) {
            for x in [y.sqrt(), -y.sqrt()] {
                let k = at(x);
                let a_size = (k.a1.abs() + k.a2.abs()) / scale;
                if a_size <= 1e-12 {
                    continue;
                }
                let theta =
                    if k.a1.abs() > 1e-14 * scale { (k.a2 / k.a1).atan() } else { -std::f64::consts::FRAC_PI_2 };
                let b_scale = k.b1.abs() + k.b2.abs() + k.b3.abs();
                if (k.b1 - (k.b3 * theta.sin() - k.b2 * theta.cos())).abs() > 1e-6 * b_scale {
                    continue;
                }
                raw.push(build_candidate_11(s, &d, x, theta, Origin11::PolynomialRoot, Some(k)));
            }
        }
        let num = d.c * d.g23 - d.g13;
        let den = d.c * d.g13 - d.g23;
        if sin_zero && num * den > 0.0 && d.g13 > 0.0 && d.g23 > 0.0 {
            let y = num / (d.c * den);
            for x in [y.sqrt(), -y.sqrt()] {
                let cos = x * d.c * (d.g23 * d.g23 * d.g1 - d.g13 * d.g13 * d.g2) / (2.0 * d.g13 * d.g23 * num);
                if !(-1e-9..=1.0 + 1e-9).contains(&cos) {
                    continue;
                }
                let base = cos.clamp(0.0, 1.0).acos();
                let mut thetas = vec![base];
                if base > 1e-12 {
                    thetas.push(-base);
                }
                for theta in thetas {
                    raw.push(build_candidate_11(s, &d, x, theta, Origin11::ClosedForm, Some(at(x))));
                }
            }
        }
    }

    let mut candidates = Vec::new();
    for cand in raw {
        if cand.equation_residual <= EQUATION_RESIDUAL {
            candidates.push(cand);
        } else {
            notes.push(format!(
                "dropped {:?} candidate (x = {:?}): equation residual {:.3e}",
                cand.origin, cand.x, cand.equation_residual
            ));
        }
    }
    Ok(Enumeration { candidates, notes })
}

/// `E1 = |ψ1⟩⟨ψ1|`, `E2 = |ψ2⟩⟨ψ2|` after the two inequality gates, a
/// positivity check of `E?` and the optimality test.
pub fn finalize_candidate_11(c: &Candidate11, s: &WeightedDensityPair) -> Result<Verdict> {
    let t = s.tol();
    let (m1, m2) = c.inequality_margins(s);
    if m1 < -t.psd_floor {
        return Ok(Verdict::Rejected(Rejection::Gamma1Inequality { margin: m1 }));
    }
    if m2 < -t.psd_floor {
        return Ok(Verdict::Rejected(Rejection::Gamma2Inequality { margin: m2 }));
    }
    let e1 = HermitianOperator::from_hermitian_part(outer(&c.psi1, &c.psi1));
    let e2 = HermitianOperator::from_hermitian_part(outer(&c.psi2, &c.psi2));
    let e_q = &(&HermitianOperator::identity(s.dim()) - &e1) - &e2;
    let min = e_q.min_eigenvalue();
    if min < -t.psd_floor {
        return Ok(Verdict::Rejected(Rejection::NotPsd { min_eigenvalue: min }));
    }
    let m = UsdMeasurement::new(e1, e2, e_q);
    if !m.is_usd(s) {
        return Ok(Verdict::Rejected(Rejection::InvalidInconclusive {
            reason: "not an unambiguous measurement".into(),
        }));
    }
    let report = crate::optimality::check_optimality(&m, s)?;
    if !report.is_optimal {
        return Ok(Verdict::Rejected(Rejection::OptimalityResidual { residual: report.total_residual() }));
    }
    Ok(Verdict::Accepted(m))
}

/// The pair compressed to an orthonormal basis `W` of `supp S`.
struct Compressed {
    pair: WeightedDensityPair,
    w: CMatrix,
}

fn compress(s: &WeightedDensityPair) -> Result<Compressed> {
    let w = support(&s.total(), s.tol())?.basis().clone();
    let pair = WeightedDensityPair::new(s.gamma1().compress(&w), s.gamma2().compress(&w), *s.tol())?;
    Ok(Compressed { pair, w })
}

fn lift(m: &UsdMeasurement, c: &Compressed, s: &WeightedDensityPair) -> UsdMeasurement {
    UsdMeasurement::new(m.e1.congruence(&c.w), m.e2.congruence(&c.w), &m.e_inconclusive.congruence(&c.w) + &s.pi_perp())
}

/// Optimal measurements found by each family, on the compressed pair.
struct FamilyResults {
    accepted: Vec<(UsdMeasurement, Branch, bool)>,
    notes: Vec<String>,
}

fn run_families(s4: &WeightedDensityPair, stop_early: bool) -> Result<FamilyResults> {
    let mut out = FamilyResults { accepted: Vec::new(), notes: Vec::new() };

    if let Some(o) = try_single_state_detection(s4)? {
        if o.report.is_optimal {
            out.accepted.push((o.measurement, o.branch, o.boundary));
        }
    }
    if stop_early && !out.accepted.is_empty() {
        return Ok(out);
    }
    if let Some(o) = try_fidelity_form(s4)? {
        if o.report.is_optimal {
            out.accepted.push((o.measurement, o.branch, o.boundary));
        }
    }
    if stop_early && !out.accepted.is_empty() {
        return Ok(out);
    }
    for host in [Host::Gamma1, Host::Gamma2] {
        let en = enumerate_candidates_12(s4, host)?;
        out.notes.extend(en.notes);
        for c in &en.candidates {
            if let Some(m) = finalize_candidate_12(c, s4)?.accepted() {
                out.accepted.push((m, host.branch(), false));
            }
        }
    }
    if stop_early && !out.accepted.is_empty() {
        return Ok(out);
    }
    let en = enumerate_candidates_11(s4)?;
    out.notes.extend(en.notes);
    for c in &en.candidates {
        if let Some(m) = finalize_candidate_11(c, s4)?.accepted() {
            out.accepted.push((m, Branch::Class11, false));
        }
    }
    Ok(out)
}

fn check_preconditions(s: &WeightedDensityPair) -> Result<()> {
    if !is_strictly_skew(s) {
        return Err(Error::PreconditionViolated("the pair is not strictly skew".into()));
    }
    let t = s.tol();
    let (rs, r1, r2) = (s.total().rank(t), s.gamma1().rank(t), s.gamma2().rank(t));
    if rs != 4 || r1 != 2 || r2 != 2 {
        return Err(Error::PreconditionViolated(format!(
            "expected dim supp S = 4 and ranks (2, 2); got {rs} and ({r1}, {r2})"
        )));
    }
    Ok(())
}

fn outcomes(s: &WeightedDensityPair, stop_early: bool) -> Result<(Vec<SolverOutcome>, Vec<String>)> {
    check_preconditions(s)?;
    let c = compress(s)?;
    let fr = run_families(&c.pair, stop_early)?;
    let mut list = Vec::new();
    for (m, branch, boundary) in fr.accepted {
        let mut o = SolverOutcome::evaluate(lift(&m, &c, s), s, branch)?;
        o.boundary = boundary;
        list.push(o);
    }
    Ok((list, fr.notes))
}

/// Every measurement accepted by any of the four families, without stopping
/// at the first success. Uniqueness of the optimum means all entries agree.
pub fn all_accepted_4d(s: &WeightedDensityPair) -> Result<Vec<SolverOutcome>> {
    Ok(outcomes(s, false)?.0)
}

/// The optimal measurement of a strictly skew pair with `dim supp S = 4` and
/// both ranks equal to two, with class tag and dual certificate.
pub fn solve_4d(s: &WeightedDensityPair) -> Result<SolverOutcome> {
    let (mut list, notes) = outcomes(s, true)?;
    if list.is_empty() {
        return Err(Error::NoSolutionFound("no family produced a measurement passing the optimality test".into()));
    }
    list.sort_by(|a, b| a.report.total_residual().total_cmp(&b.report.total_residual()));
    let several = list.len() > 1;
    let mut best = list.swap_remove(0);
    if several {
        best.boundary = true;
        best.warnings.push(format!(
            "{} measurements passed; kept the {} one with the smallest residual",
            list.len() + 1,
            best.branch
        ));
    }
    best.warnings.extend(notes);
    let rank = best.measurement.e_inconclusive.rank(s.tol());
    let expected = 2 + s.pi_perp().rank(s.tol());
    if rank != expected {
        best.warnings.push(format!("rank E? = {rank}, expected {expected}"));
    }
    Ok(best.with_certificate(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{example1_states, example2_states, weighted};
    use crate::random::{random_skew_pair_4d, seeded};

    #[test]
    fn real_roots_of_known_polynomials() {
        // (x − 1)(x + 2)(x² + 1)
        let p = poly::mul(&poly::mul(&[-1.0, 1.0], &[2.0, 1.0]), &[1.0, 0.0, 1.0]);
        let r = poly::real_roots(&p);
        assert_eq!(r.len(), 2);
        assert!((r[0] + 2.0).abs() < 1e-13 && (r[1] - 1.0).abs() < 1e-13);
        assert!(poly::real_roots(&[3.0]).is_empty());
        assert_eq!(poly::real_roots(&[0.0, 0.0, 1.0]), vec![0.0]);
    }

    #[test]
    fn polynomial_12_matches_the_squared_equation() {
        let g = GCoefficients12 { g11: 0.3, g12: 0.1, g21: 0.2, g22: 0.25, g23: 0.07, g1: 0.2, g2: -0.05 };
        let p = polynomial_12(&g);
        assert_eq!(p.len(), 7);
        for x in [-1.3, 0.2, 0.9, 2.5] {
            let direct = x * x * g.g1 * g.g1 * (x * x * g.g21 + g.g22 - 2.0 * x * g.g23)
                - (x * g.g2 + (x * x - 1.0) * g.g23).powi(2) * (x * x * g.g11 + g.g12);
            assert!((poly::eval(&p, x) - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn class_12_candidates_solve_the_defining_equation() {
        let mut rng = seeded(11);
        let mut seen = 0;
        for _ in 0..20 {
            let s = random_skew_pair_4d(&mut rng, 0.5);
            for host in [Host::Gamma1, Host::Gamma2] {
                let en = enumerate_candidates_12(&s, host).unwrap();
                assert!(en.candidates.len() <= 6);
                for c in &en.candidates {
                    seen += 1;
                    assert!(c.equation_residual <= 1e-8, "residual {}", c.equation_residual);
                    assert!(c.phi.dotc(&c.phi_perp).norm() < 1e-12);
                    assert!(c.nu > 0.0);
                }
            }
        }
        assert!(seen > 0);
    }

    #[test]
    fn class_12_rejects_large_nu() {
        let mut rng = seeded(3);
        let s = random_skew_pair_4d(&mut rng, 0.5);
        let en = enumerate_candidates_12(&s, Host::Gamma1).unwrap();
        for c in en.candidates {
            let forced = Candidate12 { nu: 1.5, ..c };
            assert!(matches!(
                finalize_candidate_12(&forced, &s).unwrap(),
                Verdict::Rejected(Rejection::NuGeOne { .. })
            ));
        }
    }

    #[test]
    fn class_11_candidates_solve_the_defining_equation() {
        let mut rng = seeded(12);
        let mut seen = 0;
        for _ in 0..20 {
            let s = random_skew_pair_4d(&mut rng, 0.5);
            let en = enumerate_candidates_11(&s).unwrap();
            assert!(en.candidates.len() <= 16);
            for c in &en.candidates {
                seen += 1;
                assert!(c.equation_residual <= 1e-8);
                assert!(c.psi1.dotc(&c.psi2).norm() < 1e-10);
                assert!(c.psi1.dotc(&c.psi1_perp).norm() < 1e-10);
                assert!(c.psi2.dotc(&c.psi2_perp).norm() < 1e-10);
                assert!((s.gamma2().matrix() * &c.psi1).norm() < 1e-10);
                assert!((s.gamma1().matrix() * &c.psi2).norm() < 1e-10);
            }
        }
        assert!(seen > 0);
    }

    #[test]
    fn jordan_data_follows_the_phase_convention() {
        let mut rng = seeded(5);
        let s = random_skew_pair_4d(&mut rng, 0.4);
        let d = jordan_data_11(&s).unwrap();
        let k = |m: &CMatrix, i: usize| m.column(i).into_owned();
        let z1 = sandwich(&k(&d.k2, 0), s.gamma1().matrix(), &k(&d.k2, 1));
        let z2 = sandwich(&k(&d.k1, 0), s.gamma2().matrix(), &k(&d.k1, 1));
        assert!((z1 - C64::from_polar(d.g13, d.phase)).norm() < 1e-12);
        assert!((z2 - C64::from_polar(d.g23, -d.phase)).norm() < 1e-12);
        assert!((0.0..std::f64::consts::PI).contains(&d.phase));
        let ov2 = k(&d.k1, 1).dotc(&k(&d.k2, 1));
        assert!(ov2.im.abs() < 1e-12 && ov2.re > 0.0);
        assert!(d.c > 0.0 && d.c <= 1.0);
    }

    #[test]
    fn solve_4d_accepts_exactly_one_measurement_on_random_pairs() {
        let mut rng = seeded(21);
        for k in 0..12 {
            let p1 = 0.1 + 0.8 * (k as f64) / 11.0;
            let s = random_skew_pair_4d(&mut rng, p1);
            let out = solve_4d(&s).unwrap();
            assert!(out.is_optimal());
            let all = all_accepted_4d(&s).unwrap();
            for o in &all {
                let diff = (o.measurement.e_inconclusive.matrix() - out.measurement.e_inconclusive.matrix()).norm();
                assert!(diff < 1e-6, "families disagree by {diff}");
            }
            assert_eq!(out.measurement.e_inconclusive.rank(s.tol()), 2);
        }
    }

    #[test]
    fn example1_regions_start_and_end_with_single_detection() {
        let (r1, r2) = example1_states();
        let lo = solve_4d(&weighted(&r1, &r2, 0.02)).unwrap();
        let hi = solve_4d(&weighted(&r1, &r2, 0.98)).unwrap();
        assert!(lo.branch.is_single_detection());
        assert!(hi.branch.is_single_detection());
        assert_eq!(lo.class_tag.class(), (0, 2));
        assert_eq!(hi.class_tag.class(), (0, 2));
    }

    #[test]
    fn example2_has_every_class_along_a_sweep() {
        let (r1, r2) = example2_states();
        let mut branches = std::collections::HashSet::new();
        for k in 1..100 {
            let out = solve_4d(&weighted(&r1, &r2, k as f64 / 100.0)).unwrap();
            assert!(out.is_optimal());
            branches.insert(out.branch);
        }
        assert!(branches.contains(&Branch::FidelityForm));
        assert!(branches.iter().any(|b| b.is_single_detection()));
    }
}
