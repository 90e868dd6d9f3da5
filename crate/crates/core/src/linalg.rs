//! Dense complex linear algebra with explicit tolerances.
//!
//! Everything here works on small dense matrices (`DMatrix<Complex64>`).
//! Rank decisions go through a single relative singular-value cutoff held in
//! [`ToleranceContext`], so that "support", "kernel", "pseudo-inverse" and
//! "rank" agree with each other everywhere in the crate.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Real part of the trace.
pub fn trace_re(m: &CMatrix) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

/// Real part of `tr(a b)` without forming the product.
pub fn trace_product_re(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..a.ncols() {
            acc += (a[(i, k)] * b[(k, i)]).re;
        }
    }
    acc
}

/// Outer product `|u⟩⟨v|`.
pub fn outer(u: &CVector, v: &CVector) -> CMatrix {
    u * v.adjoint()
}

/// Numerical tolerances shared by every routine in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceContext {
    /// Relative singular-value threshold used for every rank decision.
    pub rank_cutoff: f64,
    /// Below this largest singular value an operator counts as zero.
    pub zero_floor: f64,
    /// Most negative eigenvalue still accepted as positive semi-definite.
    pub psd_floor: f64,
    pub hermitian: f64,
    pub orthonormal: f64,
    pub idempotent: f64,
    pub equality: f64,
}

impl Default for ToleranceContext {
    fn default() -> Self {
        Self {
            rank_cutoff: 1e-10,
            zero_floor: 1e-12,
            psd_floor: 1e-10,
            hermitian: 1e-9,
            orthonormal: 1e-9,
            idempotent: 1e-9,
            equality: 1e-9,
        }
    }
}

impl ToleranceContext {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("rank_cutoff", self.rank_cutoff),
            ("zero_floor", self.zero_floor),
            ("psd_floor", self.psd_floor),
            ("hermitian", self.hermitian),
            ("orthonormal", self.orthonormal),
            ("idempotent", self.idempotent),
            ("equality", self.equality),
        ];
        for (name, value) in fields {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidTolerance(format!("{name} must be positive, got {value}")));
            }
        }
        if self.rank_cutoff >= 1.0 {
            return Err(Error::InvalidTolerance("rank_cutoff must be below 1".into()));
        }
        Ok(())
    }

    /// Checker tolerances suitable for iterative (non closed-form) solutions.
    pub fn relaxed(psd_floor: f64, equality: f64) -> Self {
        Self { psd_floor, equality, hermitian: equality, ..Self::default() }
    }

    /// Override a single field by name, as used by the `--tol key=value` flag.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        match key {
            "rank_cutoff" => self.rank_cutoff = value,
            "zero_floor" => self.zero_floor = value,
            "psd_floor" => self.psd_floor = value,
            "hermitian" => self.hermitian = value,
            "orthonormal" => self.orthonormal = value,
            "idempotent" => self.idempotent = value,
            "equality" => self.equality = value,
            other => return Err(Error::InvalidTolerance(format!("unknown tolerance key `{other}`"))),
        }
        self.validate()
    }

    /// Threshold separating zero from non-zero singular values, given the
    /// largest one. `None` means the operator is numerically zero.
    pub fn rank_threshold(&self, largest: f64) -> Option<f64> {
        if largest <= self.zero_floor {
            None
        } else {
            Some(self.rank_cutoff * largest)
        }
    }
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Eigen {
    pub fn largest_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Rebuild `V f(Λ) V†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.vectors.nrows();
        let mut out = CMatrix::zeros(n, n);
        for (k, &lambda) in self.values.iter().enumerate() {
            let w = f(lambda);
            if w == 0.0 {
                continue;
            }
            let col = self.vectors.column(k);
            out += (col * col.adjoint()) * c64(w, 0.0);
        }
        out
    }

    /// Columns of the eigenvectors selected by `pred`.
    pub fn select(&self, pred: impl Fn(f64) -> bool) -> CMatrix {
        let idx: Vec<usize> = (0..self.values.len()).filter(|&k| pred(self.values[k])).collect();
        self.vectors.select_columns(idx.iter())
    }
}

/// Eigen-decomposition of the Hermitian part of `m`.
pub fn eigh(m: &CMatrix) -> Eigen {
    let n = m.nrows();
    if n == 0 {
        return Eigen { values: vec![], vectors: CMatrix::zeros(0, 0) };
    }
    let herm = (m + m.adjoint()) * c64(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = eig.eigenvectors.select_columns(order.iter());
    Eigen { values, vectors }
}

/// Thin singular value decomposition `m = u diag(s) v†`, `s` descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

pub fn svd(m: &CMatrix) -> Svd {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return Svd { u: CMatrix::zeros(r, 0), s: vec![], v: CMatrix::zeros(c, 0) };
    }
    if r < c {
        let t = svd(&m.adjoint());
        return Svd { u: t.v, s: t.s, v: t.u };
    }
    // One-sided (Hestenes) Jacobi: rotate column pairs until mutually
    // orthogonal. nalgebra's bidiagonal SVD loses accuracy on some
    // rank-deficient complex inputs, which this avoids.
    let mut a = m.clone();
    let mut v = CMatrix::identity(c, c);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..c {
            for q in p + 1..c {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dotc(&a.column(q));
                let g = gamma.norm();
                if g == 0.0 || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = if zeta == 0.0 { 1.0 } else { zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt()) };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for mat in [&mut a, &mut v] {
                    let cp = mat.column(p).into_owned();
                    let cq = mat.column(q) * phase.conj();
                    mat.set_column(p, &(&cp * c64(cs, 0.0) - &cq * c64(sn, 0.0)));
                    mat.set_column(q, &(&cp * c64(sn, 0.0) + &cq * c64(cs, 0.0)));
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..c).map(|j| a.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let floor = norms[order[0]] * f64::EPSILON * (r as f64);
    let mut u = CMatrix::zeros(r, c);
    let mut good = 0;
    for (k, &j) in order.iter().enumerate() {
        if norms[j] > floor && norms[j] > 0.0 {
            u.set_column(k, &(a.column(j) / c64(norms[j], 0.0)));
            good = k + 1;
        }
    }
    if good < c {
        // Directions of numerically zero singular values: any orthonormal
        // completion of the well-determined columns.
        let fill = complement_columns(&u.columns(0, good).into_owned());
        for k in good..c {
            u.set_column(k, &fill.column(k - good));
        }
    }
    Svd {
        u,
        s: order.iter().map(|&j| if norms[j] > floor { norms[j] } else { 0.0 }).collect(),
        v: v.select_columns(order.iter()),
    }
}

/// Numerical rank of an arbitrary matrix.
pub fn rank(m: &CMatrix, tol: &ToleranceContext) -> usize {
    let dec = svd(m);
    let largest = dec.s.first().copied().unwrap_or(0.0);
    match tol.rank_threshold(largest) {
        None => 0,
        Some(t) => dec.s.iter().filter(|&&s| s > t).count(),
    }
}

fn hermitian_residual(m: &CMatrix) -> f64 {
    (m - m.adjoint()).norm()
}

/// A Hermitian operator on `C^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    m: CMatrix,
}

impl HermitianOperator {
    /// Validates squareness and Hermiticity, then stores the exact Hermitian part.
    pub fn new(m: CMatrix, tol: &ToleranceContext) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        let residual = hermitian_residual(&m);
        if residual > tol.hermitian * m.norm().max(1.0) {
            return Err(Error::NotHermitian { residual });
        }
        Ok(Self::from_hermitian_part(m))
    }

    /// Hermitian part `(m + m†)/2`, no validation.
    pub fn from_hermitian_part(m: CMatrix) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "Hermitian operators are square");
        let herm = (&m + m.adjoint()) * c64(0.5, 0.0);
        Self { m: herm }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { m: CMatrix::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { m: CMatrix::identity(dim, dim) }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = CMatrix::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = c64(d, 0.0);
        }
        Self { m }
    }

    /// `w |v⟩⟨v|`.
    pub fn rank_one(v: &CVector, weight: f64) -> Self {
        Self::from_hermitian_part(outer(v, v) * c64(weight, 0.0))
    }

    /// Real entries, row major.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let m = CMatrix::from_fn(n, n, |i, j| c64(rows[i][j], 0.0));
        Self::from_hermitian_part(m)
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn trace(&self) -> f64 {
        trace_re(&self.m)
    }

    pub fn eigh(&self) -> Eigen {
        eigh(&self.m)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigh().min()
    }

    pub fn is_psd(&self, tol: &ToleranceContext) -> bool {
        self.min_eigenvalue() >= -tol.psd_floor
    }

    pub fn scaled(&self, w: f64) -> Self {
        Self { m: &self.m * c64(w, 0.0) }
    }

    /// `X† A X` as a Hermitian operator on the column space of `x`.
    pub fn compress(&self, x: &CMatrix) -> Self {
        Self::from_hermitian_part(x.adjoint() * &self.m * x)
    }

    /// `X A X†`.
    pub fn congruence(&self, x: &CMatrix) -> Self {
        Self::from_hermitian_part(x * &self.m * x.adjoint())
    }

    pub fn rank(&self, tol: &ToleranceContext) -> usize {
        let eig = self.eigh();
        match tol.rank_threshold(eig.largest_abs()) {
            None => 0,
            Some(t) => eig.values.iter().filter(|v| v.abs() > t).count(),
        }
    }

    /// Applies `f` to the eigenvalues above the rank threshold and zero to the rest.
    pub fn map_on_support(&self, tol: &ToleranceContext, f: impl Fn(f64) -> f64) -> Self {
        let eig = self.eigh();
        let out = match tol.rank_threshold(eig.largest_abs()) {
            None => CMatrix::zeros(self.dim(), self.dim()),
            Some(t) => eig.map(|v| if v.abs() > t { f(v) } else { 0.0 }),
        };
        Self::from_hermitian_part(out)
    }

    /// Inverse on the support.
    pub fn pinv(&self, tol: &ToleranceContext) -> Self {
        self.map_on_support(tol, |v| 1.0 / v)
    }
}

impl std::ops::Add for &HermitianOperator {
    type Output = HermitianOperator;
    fn add(self, rhs: Self) -> HermitianOperator {
        HermitianOperator { m: &self.m + &rhs.m }
    }
}

impl std::ops::Sub for &HermitianOperator {
    type Output = HermitianOperator;
    fn sub(self, rhs: Self) -> HermitianOperator {
        HermitianOperator { m: &self.m - &rhs.m }
    }
}

impl std::ops::Neg for &HermitianOperator {
    type Output = HermitianOperator;
    fn neg(self) -> HermitianOperator {
        HermitianOperator { m: -&self.m }
    }
}

/// A linear subspace of `C^dim`, stored as a column-orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: CMatrix,
}

impl Subspace {
    pub fn from_orthonormal(basis: CMatrix, tol: &ToleranceContext) -> Result<Self> {
        let k = basis.ncols();
        if k > basis.nrows() {
            return Err(Error::DimensionMismatch { expected: basis.nrows(), found: k });
        }
        let gram = basis.adjoint() * &basis;
        let err = (gram - CMatrix::identity(k, k)).norm();
        if err > tol.orthonormal {
            return Err(Error::InvalidInstance(format!("basis is not orthonormal (error {err:.3e})")));
        }
        Ok(Self { basis })
    }

    /// Orthonormal basis of the column space of `vectors`.
    pub fn span(vectors: &CMatrix, tol: &ToleranceContext) -> Self {
        let dec = svd(vectors);
        let largest = dec.s.first().copied().unwrap_or(0.0);
        let keep = match tol.rank_threshold(largest) {
            None => 0,
            Some(t) => dec.s.iter().filter(|&&s| s > t).count(),
        };
        Self { basis: dec.u.columns(0, keep).into_owned() }
    }

    pub fn zero(ambient: usize) -> Self {
        Self { basis: CMatrix::zeros(ambient, 0) }
    }

    pub fn full(ambient: usize) -> Self {
        Self { basis: CMatrix::identity(ambient, ambient) }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn vector(&self, k: usize) -> CVector {
        self.basis.column(k).into_owned()
    }

    pub fn projector(&self) -> HermitianOperator {
        HermitianOperator::from_hermitian_part(&self.basis * self.basis.adjoint())
    }

    /// Orthogonal complement in the ambient space.
    pub fn complement(&self) -> Self {
        Self { basis: complement_columns(&self.basis) }
    }

    /// Distance of `v` from the subspace, relative to `‖v‖`.
    pub fn residual_of(&self, v: &CVector) -> f64 {
        let norm = v.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let proj = &self.basis * (self.basis.adjoint() * v);
        (v - proj).norm() / norm
    }

    /// `self ⊆ other` within `tol.equality`.
    pub fn is_subspace_of(&self, other: &Subspace, tol: &ToleranceContext) -> bool {
        (0..self.dim()).all(|k| other.residual_of(&self.vector(k)) <= tol.equality.sqrt())
    }
}

/// Orthonormal columns spanning the complement of the (orthonormal) columns of `u`.
fn complement_columns(u: &CMatrix) -> CMatrix {
    let n = u.nrows();
    let k = u.ncols();
    if k == 0 {
        return CMatrix::identity(n, n);
    }
    if k >= n {
        return CMatrix::zeros(n, 0);
    }
    let p = CMatrix::identity(n, n) - u * u.adjoint();
    eigh(&p).select(|v| v > 0.5)
}

fn check_ambient(a: &Subspace, b: &Subspace) -> Result<()> {
    if a.ambient_dim() != b.ambient_dim() {
        return Err(Error::DimensionMismatch { expected: a.ambient_dim(), found: b.ambient_dim() });
    }
    Ok(())
}

/// Span of the eigenvectors whose eigenvalue is non-zero at the rank cutoff.
pub fn support(a: &HermitianOperator, tol: &ToleranceContext) -> Result<Subspace> {
    HermitianOperator::new(a.matrix().clone(), tol)?;
    let eig = a.eigh();
    let basis = match tol.rank_threshold(eig.largest_abs()) {
        None => CMatrix::zeros(a.dim(), 0),
        Some(t) => eig.select(|v| v.abs() > t),
    };
    Ok(Subspace { basis })
}

/// Orthocomplement of [`support`].
pub fn kernel(a: &HermitianOperator, tol: &ToleranceContext) -> Result<Subspace> {
    HermitianOperator::new(a.matrix().clone(), tol)?;
    let eig = a.eigh();
    let basis = match tol.rank_threshold(eig.largest_abs()) {
        None => CMatrix::identity(a.dim(), a.dim()),
        Some(t) => eig.select(|v| v.abs() <= t),
    };
    Ok(Subspace { basis })
}

/// Cosines of the principal angles between two subspaces, descending.
pub fn principal_cosines(a: &Subspace, b: &Subspace) -> Result<Vec<f64>> {
    check_ambient(a, b)?;
    Ok(svd(&(a.basis.adjoint() * &b.basis)).s.into_iter().map(|s| s.min(1.0)).collect())
}

/// Directions shared by both subspaces: principal vectors with `cos θ > 1 − tol.equality`.
pub fn intersect(a: &Subspace, b: &Subspace, tol: &ToleranceContext) -> Result<Subspace> {
    check_ambient(a, b)?;
    if a.is_zero() || b.is_zero() {
        return Ok(Subspace::zero(a.ambient_dim()));
    }
    let dec = svd(&(a.basis.adjoint() * &b.basis));
    let keep = dec.s.iter().filter(|&&s| s > 1.0 - tol.equality).count();
    let basis = &a.basis * dec.u.columns(0, keep);
    Ok(Subspace::span(&basis, tol))
}

/// `A + B`. A direction of `B` only counts as new when its angle to `A`
/// exceeds the threshold used by [`intersect`].
pub fn sum(a: &Subspace, b: &Subspace, tol: &ToleranceContext) -> Result<Subspace> {
    check_ambient(a, b)?;
    let n = a.ambient_dim();
    let mut stacked = CMatrix::zeros(n, a.dim() + b.dim());
    stacked.columns_mut(0, a.dim()).copy_from(&a.basis);
    stacked.columns_mut(a.dim(), b.dim()).copy_from(&b.basis);
    let dec = svd(&stacked);
    let keep = dec.s.iter().filter(|&&s| s * s > tol.equality).count();
    Ok(Subspace { basis: dec.u.columns(0, keep).into_owned() })
}

pub fn orthogonal_projector(s: &Subspace) -> HermitianOperator {
    s.projector()
}

/// Moore–Penrose inverse with the shared relative cutoff.
pub fn pseudo_inverse(a: &CMatrix, tol: &ToleranceContext) -> CMatrix {
    let dec = svd(a);
    let (r, c) = a.shape();
    let largest = dec.s.first().copied().unwrap_or(0.0);
    let mut out = CMatrix::zeros(c, r);
    if let Some(t) = tol.rank_threshold(largest) {
        for (k, &s) in dec.s.iter().enumerate() {
            if s > t {
                out += dec.v.column(k) * dec.u.column(k).adjoint() * c64(1.0 / s, 0.0);
            }
        }
    }
    out
}

/// Square root of a positive semi-definite operator. Eigenvalues below the
/// rank threshold (including those in `(-psd_floor, 0)`) are set to zero, so
/// that roundoff in the kernel does not grow to its square root.
pub fn sqrt_psd(a: &HermitianOperator, tol: &ToleranceContext) -> Result<HermitianOperator> {
    let eig = a.eigh();
    let min = eig.min();
    if min < -tol.psd_floor {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    let cut = tol.rank_threshold(eig.largest_abs()).unwrap_or(f64::INFINITY);
    Ok(HermitianOperator::from_hermitian_part(eig.map(|v| if v > cut { v.sqrt() } else { 0.0 })))
}

/// An idempotent, generally non-Hermitian operator.
#[derive(Debug, Clone, PartialEq)]
pub struct ObliqueProjector {
    q: CMatrix,
}

impl ObliqueProjector {
    pub fn matrix(&self) -> &CMatrix {
        &self.q
    }

    pub fn into_matrix(self) -> CMatrix {
        self.q
    }

    /// Residuals of `QΛ = Q`, `ΠQ = Q`, `ΛQ = Λ`, `QΠ = Π`.
    pub fn identity_residuals(&self, lambda: &HermitianOperator, pi: &HermitianOperator) -> [f64; 4] {
        let q = &self.q;
        let l = lambda.matrix();
        let p = pi.matrix();
        [(q * l - q).norm(), (p * q - q).norm(), (l * q - l).norm(), (q * p - p).norm()]
    }

    pub fn idempotency_residual(&self) -> f64 {
        (&self.q * &self.q - &self.q).norm()
    }
}

/// The oblique projector from `ΛH` to `ΠH`: the Moore–Penrose inverse of `ΛΠ`.
///
/// Requires `ΛH ∩ (ΠH)^⊥ = {0}` and `(ΛH)^⊥ ∩ ΠH = {0}`, i.e. equal
/// dimensions and no principal angle of 90°.
pub fn oblique_projector(
    lambda: &HermitianOperator,
    pi: &HermitianOperator,
    tol: &ToleranceContext,
) -> Result<ObliqueProjector> {
    if lambda.dim() != pi.dim() {
        return Err(Error::DimensionMismatch { expected: lambda.dim(), found: pi.dim() });
    }
    let from = support(lambda, tol)?;
    let to = support(pi, tol)?;
    if from.dim() != to.dim() {
        return Err(Error::SkewViolation(format!("subspace dimensions differ ({} vs {})", from.dim(), to.dim())));
    }
    if let Some(&smallest) = principal_cosines(&from, &to)?.last() {
        if smallest <= tol.equality {
            return Err(Error::SkewViolation(format!("principal cosine {smallest:.3e} vanishes")));
        }
    }
    let q = pseudo_inverse(&(lambda.matrix() * pi.matrix()), tol);
    Ok(ObliqueProjector { q })
}

/// Paired orthonormal bases of two subspaces with diagonal overlap matrix.
#[derive(Debug, Clone)]
pub struct JordanBases {
    /// `d × dim A`, columns `|a_i⟩`.
    pub a: CMatrix,
    /// `d × dim B`, columns `|b_j⟩`.
    pub b: CMatrix,
    /// `⟨a_k|b_k⟩` for `k < min(dim A, dim B)`, descending.
    pub cosines: Vec<f64>,
}

impl JordanBases {
    pub fn a_vec(&self, k: usize) -> CVector {
        self.a.column(k).into_owned()
    }

    pub fn b_vec(&self, k: usize) -> CVector {
        self.b.column(k).into_owned()
    }

    /// Largest `|⟨a_i|b_j⟩|` over `i ≠ j`.
    pub fn off_diagonal_overlap(&self) -> f64 {
        let m = self.a.adjoint() * &self.b;
        let mut worst = 0.0_f64;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if i != j {
                    worst = worst.max(m[(i, j)].norm());
                }
            }
        }
        worst
    }
}

/// Jordan bases of `A` and `B` from the SVD of the overlap matrix.
pub fn jordan_bases(a: &Subspace, b: &Subspace, tol: &ToleranceContext) -> Result<JordanBases> {
    jordan_bases_with(a, b, None, tol)
}

/// Jordan bases where, inside each cluster of equal cosines, the `B`-side
/// vectors additionally diagonalize `secondary` (and the `A`-side vectors
/// follow the same rotation).
pub fn jordan_bases_with(
    a: &Subspace,
    b: &Subspace,
    secondary: Option<&HermitianOperator>,
    tol: &ToleranceContext,
) -> Result<JordanBases> {
    check_ambient(a, b)?;
    if let Some(g) = secondary {
        if g.dim() != a.ambient_dim() {
            return Err(Error::DimensionMismatch { expected: a.ambient_dim(), found: g.dim() });
        }
    }
    let overlap = a.basis.adjoint() * &b.basis;
    let dec = svd(&overlap);
    let m = dec.s.len();

    let mut ua = CMatrix::zeros(a.dim(), a.dim());
    ua.columns_mut(0, m).copy_from(&dec.u);
    let rest_a = complement_columns(&dec.u);
    ua.columns_mut(m, a.dim() - m).copy_from(&rest_a);
    let mut ub = CMatrix::zeros(b.dim(), b.dim());
    ub.columns_mut(0, m).copy_from(&dec.v);
    let rest_b = complement_columns(&dec.v);
    ub.columns_mut(m, b.dim() - m).copy_from(&rest_b);

    let mut av = &a.basis * ua;
    let mut bv = &b.basis * ub;
    let cosines: Vec<f64> = dec.s.iter().map(|s| s.min(1.0)).collect();

    if let Some(g) = secondary {
        let mut start = 0;
        while start < m {
            let mut end = start + 1;
            while end < m && (cosines[start] - cosines[end]).abs() <= tol.equality {
                end += 1;
            }
            if end - start > 1 {
                let bc = bv.columns(start, end - start).into_owned();
                let rot = eigh(&(bc.adjoint() * g.matrix() * &bc)).vectors;
                let new_b = &bc * &rot;
                let new_a = av.columns(start, end - start) * &rot;
                bv.columns_mut(start, end - start).copy_from(&new_b);
                av.columns_mut(start, end - start).copy_from(&new_a);
            }
            start = end;
        }
    }

    // Rotate the B-side vectors so that every paired overlap is real and non-negative.
    for k in 0..m {
        let ov = av.column(k).dotc(&bv.column(k));
        if ov.norm() > 0.0 {
            let phase = ov.conj() / ov.norm();
            let col = bv.column(k) * phase;
            bv.set_column(k, &col);
        }
    }

    Ok(JordanBases { a: av, b: bv, cosines })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_subspace, random_unitary, seeded};

    fn tol() -> ToleranceContext {
        ToleranceContext::default()
    }

    fn basis_vec(d: usize, i: usize) -> CVector {
        let mut v = CVector::zeros(d);
        v[i] = c64(1.0, 0.0);
        v
    }

    fn span_of(vs: &[CVector]) -> Subspace {
        let m = CMatrix::from_columns(vs);
        Subspace::span(&m, &tol())
    }

    #[test]
    fn svd_reconstructs_rank_deficient_products() {
        let mut rng = seeded(7);
        for i in 0..600 {
            let n = 2 + i % 5;
            let a = random_subspace(&mut rng, n, 1 + i % n).projector();
            let b = random_subspace(&mut rng, n, 1 + (i / 3) % n).projector();
            let m = (a.matrix() * b.matrix()).columns(0, 1 + (i / 2) % n).into_owned();
            let d = svd(&m);
            let sigma = CMatrix::from_diagonal(&CVector::from_iterator(d.s.len(), d.s.iter().map(|x| c64(*x, 0.0))));
            assert!((&d.u * sigma * d.v.adjoint() - &m).norm() < 1e-13);
            let k = d.s.len();
            assert!((d.u.adjoint() * &d.u - CMatrix::identity(k, k)).norm() < 1e-13);
            assert!((d.v.adjoint() * &d.v - CMatrix::identity(k, k)).norm() < 1e-13);
            assert!(d.s.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn support_and_kernel_basic_cases() {
        let t = tol();
        assert_eq!(support(&HermitianOperator::identity(3), &t).unwrap().dim(), 3);
        assert_eq!(kernel(&HermitianOperator::identity(3), &t).unwrap().dim(), 0);

        let d = HermitianOperator::from_diagonal(&[1.0, 0.0, 0.0]);
        let s = support(&d, &t).unwrap();
        assert_eq!(s.dim(), 1);
        assert!(s.residual_of(&basis_vec(3, 0)) < 1e-12);
        let k = kernel(&d, &t).unwrap();
        assert_eq!(k.dim(), 2);
        assert!(k.residual_of(&basis_vec(3, 1)) < 1e-12);
        assert!(k.residual_of(&basis_vec(3, 2)) < 1e-12);

        let plus = CVector::from_vec(vec![c64(1.0, 0.0), c64(1.0, 0.0)]) / c64(2f64.sqrt(), 0.0);
        let a = HermitianOperator::rank_one(&plus, 0.5);
        let s = support(&a, &t).unwrap();
        assert_eq!(s.dim(), 1);
        assert!(s.residual_of(&plus) < 1e-12);
    }

    #[test]
    fn kernel_of_embedded_example_pair() {
        // γ1 = ½|1⟩⟨1|, γ2 = ½|+⟩⟨+| embedded in C^3; the common kernel is |2⟩.
        let t = tol();
        let g1 = HermitianOperator::from_diagonal(&[0.0, 0.5, 0.0]);
        let g2 = HermitianOperator::from_real_rows(&[&[0.25, 0.25, 0.0], &[0.25, 0.25, 0.0], &[0.0, 0.0, 0.0]]);
        let k = kernel(&(&g1 + &g2), &t).unwrap();
        // Oracle: eigen-decomposition of the 2x2 block is full rank (det = 1/16 > 0).
        assert_eq!(k.dim(), 1);
        assert!(k.residual_of(&basis_vec(3, 2)) < 1e-12);
    }

    #[test]
    fn support_rejects_non_hermitian() {
        let m = CMatrix::from_fn(2, 2, |i, j| if i == 0 && j == 1 { c64(1.0, 0.0) } else { c64(0.0, 0.0) });
        let op = HermitianOperator { m };
        assert!(matches!(support(&op, &tol()), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn intersect_and_sum() {
        let t = tol();
        let a = span_of(&[basis_vec(3, 0), basis_vec(3, 1)]);
        let b = span_of(&[basis_vec(3, 1), basis_vec(3, 2)]);
        let i = intersect(&a, &b, &t).unwrap();
        assert_eq!(i.dim(), 1);
        assert!(i.residual_of(&basis_vec(3, 1)) < 1e-12);
        assert_eq!(intersect(&a, &a, &t).unwrap().dim(), 2);
        assert_eq!(sum(&a, &b, &t).unwrap().dim(), 3);
        assert_eq!(sum(&a, &a, &t).unwrap().dim(), 2);

        let mut rng = seeded(11);
        let x = random_subspace(&mut rng, 4, 2);
        let y = random_subspace(&mut rng, 4, 2);
        // Oracle: the stacked 4x4 basis matrix has full rank for generic draws.
        let mut stacked = CMatrix::zeros(4, 4);
        stacked.columns_mut(0, 2).copy_from(x.basis());
        stacked.columns_mut(2, 2).copy_from(y.basis());
        assert_eq!(rank(&stacked, &t), 4);
        assert_eq!(intersect(&x, &y, &t).unwrap().dim(), 0);
        assert_eq!(sum(&x, &y, &t).unwrap().dim(), 4);
    }

    #[test]
    fn intersect_dimension_mismatch() {
        let err = intersect(&Subspace::full(2), &Subspace::full(3), &tol()).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn orthogonal_projector_cases() {
        assert_eq!(orthogonal_projector(&Subspace::zero(3)).matrix(), &CMatrix::zeros(3, 3));
        assert_eq!(orthogonal_projector(&Subspace::full(3)).matrix(), &CMatrix::identity(3, 3));
        let plus = CVector::from_vec(vec![c64(1.0, 0.0), c64(1.0, 0.0)]) / c64(2f64.sqrt(), 0.0);
        let p = orthogonal_projector(&span_of(&[plus]));
        let expected = CMatrix::from_element(2, 2, c64(0.5, 0.0));
        assert!((p.matrix() - expected).norm() < 1e-14);
    }

    #[test]
    fn oblique_projector_cases() {
        let t = tol();
        let p = orthogonal_projector(&span_of(&[basis_vec(3, 0), basis_vec(3, 2)]));
        let q = oblique_projector(&p, &p, &t).unwrap();
        assert!((q.matrix() - p.matrix()).norm() < 1e-12);

        // Λ = |0⟩⟨0|, Π = |+⟩⟨+|. The identities QΛ=Q, ΠQ=Q, ΛQ=Λ, QΠ=Π force
        // Q = |+⟩⟨0|/⟨0|+⟩ = [[1,0],[1,0]].
        let lambda = HermitianOperator::from_diagonal(&[1.0, 0.0]);
        let plus = CVector::from_vec(vec![c64(1.0, 0.0), c64(1.0, 0.0)]) / c64(2f64.sqrt(), 0.0);
        let pi = HermitianOperator::rank_one(&plus, 1.0);
        let q = oblique_projector(&lambda, &pi, &t).unwrap();
        let expected = CMatrix::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)]);
        assert!((q.matrix() - expected).norm() < 1e-12);
        assert!(q.identity_residuals(&lambda, &pi).iter().all(|&r| r < 1e-12));

        let perp = HermitianOperator::from_diagonal(&[0.0, 1.0]);
        assert!(matches!(oblique_projector(&lambda, &perp, &t), Err(Error::SkewViolation(_))));
    }

    #[test]
    fn pseudo_inverse_cases() {
        let t = tol();
        let a = CMatrix::from_row_slice(2, 2, &[c64(2.0, 0.0), c64(1.0, 1.0), c64(0.0, -1.0), c64(3.0, 0.0)]);
        let inv = a.clone().try_inverse().unwrap();
        assert!((pseudo_inverse(&a, &t) - inv).norm() < 1e-12);
        assert_eq!(pseudo_inverse(&CMatrix::zeros(2, 2), &t), CMatrix::zeros(2, 2));
        let d = HermitianOperator::from_diagonal(&[2.0, 0.0]);
        let expected = HermitianOperator::from_diagonal(&[0.5, 0.0]);
        assert!((pseudo_inverse(d.matrix(), &t) - expected.matrix()).norm() < 1e-14);
        assert!((d.pinv(&t).matrix() - expected.matrix()).norm() < 1e-14);
    }

    #[test]
    fn sqrt_psd_cases() {
        let t = tol();
        let p = orthogonal_projector(&span_of(&[basis_vec(3, 0), basis_vec(3, 1)]));
        assert!((sqrt_psd(&p, &t).unwrap().matrix() - p.matrix()).norm() < 1e-12);
        let d = HermitianOperator::from_diagonal(&[4.0, 9.0]);
        let r = sqrt_psd(&d, &t).unwrap();
        assert!((r.matrix() - HermitianOperator::from_diagonal(&[2.0, 3.0]).matrix()).norm() < 1e-12);
        let neg = HermitianOperator::from_diagonal(&[1.0, -1e-3]);
        assert!(matches!(sqrt_psd(&neg, &t), Err(Error::NotPsd { .. })));
        let tiny = HermitianOperator::from_diagonal(&[1.0, -1e-13]);
        assert!(sqrt_psd(&tiny, &t).unwrap().is_psd(&t));
    }

    #[test]
    fn jordan_bases_cases() {
        let t = tol();
        let a = span_of(&[basis_vec(3, 0), basis_vec(3, 1)]);
        let same = jordan_bases(&a, &a, &t).unwrap();
        assert!(same.cosines.iter().all(|&c| (c - 1.0).abs() < 1e-12));
        assert!((&same.a - &same.b).norm() < 1e-12);

        let orth = span_of(&[basis_vec(3, 2)]);
        let jb = jordan_bases(&a, &orth, &t).unwrap();
        assert!(jb.cosines.iter().all(|&c| c.abs() < 1e-12));

        let e02 = (basis_vec(3, 0) + basis_vec(3, 2)) / c64(2f64.sqrt(), 0.0);
        let b = span_of(&[e02, basis_vec(3, 1)]);
        let jb = jordan_bases(&a, &b, &t).unwrap();
        assert!((jb.cosines[0] - 1.0).abs() < 1e-12);
        assert!((jb.cosines[1] - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!(jb.off_diagonal_overlap() < 1e-12);
    }

    #[test]
    fn jordan_bases_secondary_diagonalizes_degenerate_cluster() {
        let t = tol();
        // Two 2-dim subspaces of C^4 with both principal cosines equal to 1/√2.
        let s = 1.0 / 2f64.sqrt();
        let a = span_of(&[basis_vec(4, 0), basis_vec(4, 1)]);
        let b = span_of(&[
            (basis_vec(4, 0) + basis_vec(4, 2)) * c64(s, 0.0),
            (basis_vec(4, 1) + basis_vec(4, 3)) * c64(s, 0.0),
        ]);
        let mut rng = seeded(5);
        let u = random_unitary(&mut rng, 4);
        let g = HermitianOperator::from_hermitian_part(
            &u * CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
                c64(1.0, 0.0),
                c64(2.0, 0.0),
                c64(3.0, 0.0),
                c64(4.0, 0.0),
            ])) * u.adjoint(),
        );
        let jb = jordan_bases_with(&a, &b, Some(&g), &t).unwrap();
        assert!((jb.cosines[0] - s).abs() < 1e-12 && (jb.cosines[1] - s).abs() < 1e-12);
        assert!(jb.off_diagonal_overlap() < 1e-12);
        let cross = jb.b_vec(0).dotc(&(g.matrix() * jb.b_vec(1)));
        assert!(cross.norm() < 1e-12);
        for k in 0..2 {
            let ov = jb.a_vec(k).dotc(&jb.b_vec(k));
            assert!(ov.im.abs() < 1e-12 && ov.re > 0.0);
        }
    }
}
