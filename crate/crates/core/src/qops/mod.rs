//! Two-level operator algebra.
//!
//! Operators on the atom live in [`Op2`], density matrices in [`State2`].
//! Linear maps on operators ([`Superop`]) are stored as real 4×4 matrices
//! acting on the coordinates `(w, x, y, z)` of
//! `ρ = ½(w·I + x·σx + y·σy + z·σz)`, i.e. `w = Tr ρ` and `x = Tr{σx ρ}` etc.
//! Every map used in this crate preserves Hermiticity, so the real
//! representation is exact. Trace preservation shows up as a zero first row.
//!
//! Basis convention: index 0 is the excited state `|e⟩`, index 1 the ground
//! state `|g⟩`. Then `P+ = |e⟩⟨e|`, `P- = |g⟩⟨g|` and `σ- = |g⟩⟨e|`.

mod expm;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Matrix2, Matrix4, Vector3, Vector4};
use num_complex::Complex64;

pub use expm::expm_matrix;

use crate::{Error, Result};

pub type C64 = Complex64;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const EIGEN_TOL: f64 = -1e-9;
const BLOCH_TOL: f64 = 1e-9;

#[inline]
fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// A 2×2 complex operator.
#[derive(Clone, Copy, PartialEq)]
pub struct Op2(pub Matrix2<C64>);

impl fmt::Debug for Op2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = &self.0;
        write!(
            f,
            "Op2[[{}, {}], [{}, {}]]",
            m[(0, 0)],
            m[(0, 1)],
            m[(1, 0)],
            m[(1, 1)]
        )
    }
}

impl Op2 {
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Op2(Matrix2::new(a, b, c, d))
    }

    pub fn zero() -> Self {
        Op2(Matrix2::zeros())
    }

    pub fn identity() -> Self {
        Op2(Matrix2::identity())
    }

    pub fn sigma_x() -> Self {
        Op2::new(c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.))
    }

    pub fn sigma_y() -> Self {
        Op2::new(c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.))
    }

    pub fn sigma_z() -> Self {
        Op2::new(c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.))
    }

    /// Lowering operator `|g⟩⟨e|`.
    pub fn sigma_minus() -> Self {
        Op2::new(c(0., 0.), c(0., 0.), c(1., 0.), c(0., 0.))
    }

    /// Raising operator `|e⟩⟨g|`.
    pub fn sigma_plus() -> Self {
        Op2::new(c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.))
    }

    /// Projector on the excited state.
    pub fn p_plus() -> Self {
        Op2::new(c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.))
    }

    /// Projector on the ground state.
    pub fn p_minus() -> Self {
        Op2::new(c(0., 0.), c(0., 0.), c(0., 0.), c(1., 0.))
    }

    /// The Pauli basis `(I, σx, σy, σz)` used for superoperator coordinates.
    pub fn pauli_basis() -> [Op2; 4] {
        [
            Op2::identity(),
            Op2::sigma_x(),
            Op2::sigma_y(),
            Op2::sigma_z(),
        ]
    }

    pub fn adjoint(&self) -> Self {
        Op2(self.0.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.0[(0, 0)] + self.0[(1, 1)]
    }

    pub fn scale(&self, s: C64) -> Self {
        Op2(self.0 * s)
    }

    /// Frobenius norm (an upper bound on the spectral norm).
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Op2) -> f64 {
        (self.0 - other.0)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let scale = self.norm().max(1.0);
        (self.0 - self.0.adjoint()).iter().all(|z| z.norm() <= tol * scale)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Coordinates `Tr{σk X}` for `k = 0..4` in the Pauli basis. Real for
    /// Hermitian `X`.
    pub fn pauli_coords(&self) -> [C64; 4] {
        let m = &self.0;
        let (a, b, cc, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
        // Tr{σx X} = b + c, Tr{σy X} = i(b - c), Tr{σz X} = a - d
        [a + d, b + cc, C64::i() * (b - cc), a - d]
    }

    /// Real coordinates of the Hermitian part of the operator.
    pub fn hermitian_coords(&self) -> Vector4<f64> {
        let v = self.pauli_coords();
        Vector4::new(v[0].re, v[1].re, v[2].re, v[3].re)
    }

    /// Inverse of [`Op2::pauli_coords`] for real coordinates.
    pub fn from_coords(v: &Vector4<f64>) -> Self {
        let (w, x, y, z) = (v[0], v[1], v[2], v[3]);
        Op2::new(
            c(0.5 * (w + z), 0.),
            c(0.5 * x, -0.5 * y),
            c(0.5 * x, 0.5 * y),
            c(0.5 * (w - z), 0.),
        )
    }

    /// Splits `X = H + iK` with `H`, `K` Hermitian.
    pub fn hermitian_split(&self) -> (Op2, Op2) {
        let adj = self.adjoint();
        let h = Op2((self.0 + adj.0) * c(0.5, 0.));
        let k = Op2((self.0 - adj.0) * c(0., -0.5));
        (h, k)
    }
}

impl Add for Op2 {
    type Output = Op2;
    fn add(self, rhs: Op2) -> Op2 {
        Op2(self.0 + rhs.0)
    }
}

impl Sub for Op2 {
    type Output = Op2;
    fn sub(self, rhs: Op2) -> Op2 {
        Op2(self.0 - rhs.0)
    }
}

impl Neg for Op2 {
    type Output = Op2;
    fn neg(self) -> Op2 {
        Op2(-self.0)
    }
}

impl Mul for Op2 {
    type Output = Op2;
    fn mul(self, rhs: Op2) -> Op2 {
        Op2(self.0 * rhs.0)
    }
}

impl Mul<C64> for Op2 {
    type Output = Op2;
    fn mul(self, rhs: C64) -> Op2 {
        Op2(self.0 * rhs)
    }
}

impl Mul<f64> for Op2 {
    type Output = Op2;
    fn mul(self, rhs: f64) -> Op2 {
        Op2(self.0 * c(rhs, 0.))
    }
}

/// `e^{iφ}σ- + e^{-iφ}σ+ = cos φ σx + sin φ σy`.
pub fn sigma_phi(phi: f64) -> Op2 {
    let e = C64::from_polar(1.0, phi);
    Op2::sigma_minus() * e + Op2::sigma_plus() * e.conj()
}

/// Bloch coordinates `(⟨σx⟩, ⟨σy⟩, ⟨σz⟩)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVec {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVec {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        BlochVec { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        BlochVec::new(v[0], v[1], v[2])
    }
}

/// A density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State2(Op2);

impl State2 {
    /// Checks the density-matrix invariants and wraps the operator.
    pub fn new(op: Op2) -> Result<Self> {
        if !op.is_finite() {
            return Err(Error::InvalidState("non-finite entries".into()));
        }
        if !op.is_hermitian(HERMITIAN_TOL) {
            return Err(Error::InvalidState("not Hermitian".into()));
        }
        let tr = op.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let s = State2(op);
        let (lo, _) = s.eigenvalues();
        if lo < EIGEN_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {lo:e}")));
        }
        Ok(s)
    }

    pub fn ground() -> Self {
        State2(Op2::p_minus())
    }

    pub fn excited() -> Self {
        State2(Op2::p_plus())
    }

    pub fn maximally_mixed() -> Self {
        State2(Op2::identity() * 0.5)
    }

    pub fn op(&self) -> &Op2 {
        &self.0
    }

    /// Coordinates `(1, x, y, z)`.
    pub fn coords(&self) -> Vector4<f64> {
        self.0.hermitian_coords()
    }

    pub fn from_bloch(b: BlochVec) -> Result<Self> {
        if !(b.x.is_finite() && b.y.is_finite() && b.z.is_finite()) || b.norm() > 1.0 + BLOCH_TOL {
            return Err(Error::InvalidState(format!(
                "Bloch vector norm {} exceeds 1",
                b.norm()
            )));
        }
        Ok(State2(Op2::from_coords(&Vector4::new(1.0, b.x, b.y, b.z))))
    }

    pub fn to_bloch(&self) -> BlochVec {
        let v = self.coords();
        BlochVec::new(v[1], v[2], v[3])
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let v = self.coords();
        let r = (v[1] * v[1] + v[2] * v[2] + v[3] * v[3]).sqrt();
        (0.5 * (v[0] - r), 0.5 * (v[0] + r))
    }

    /// Expectation value `Tr{A ρ}`.
    pub fn expect(&self, a: &Op2) -> C64 {
        (*a * self.0).trace()
    }
}

/// A linear map on operators, in the real Pauli-coordinate representation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Superop(pub Matrix4<f64>);

impl Superop {
    pub fn zero() -> Self {
        Superop(Matrix4::zeros())
    }

    pub fn identity() -> Self {
        Superop(Matrix4::identity())
    }

    /// Builds the representation of a Hermiticity-preserving map from its
    /// action on operators: `S[j][k] = ½ Tr{σj f(σk)}`.
    pub fn from_fn(f: impl Fn(&Op2) -> Op2) -> Self {
        let basis = Op2::pauli_basis();
        let mut m = Matrix4::zeros();
        for (k, sk) in basis.iter().enumerate() {
            let img = f(sk).pauli_coords();
            for j in 0..4 {
                debug_assert!(img[j].im.abs() < 1e-9, "map does not preserve Hermiticity");
                m[(j, k)] = 0.5 * img[j].re;
            }
        }
        Superop(m)
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Superop) -> Superop {
        Superop(self.0 * other.0)
    }

    pub fn apply_coords(&self, v: &Vector4<f64>) -> Vector4<f64> {
        self.0 * v
    }

    /// Applies the map to an arbitrary operator, handling Hermitian and
    /// anti-Hermitian parts separately.
    pub fn apply(&self, x: &Op2) -> Op2 {
        let (h, k) = x.hermitian_split();
        let fh = Op2::from_coords(&(self.0 * h.hermitian_coords()));
        let fk = Op2::from_coords(&(self.0 * k.hermitian_coords()));
        fh + fk * C64::i()
    }

    pub fn apply_state(&self, s: &State2) -> Op2 {
        Op2::from_coords(&(self.0 * s.coords()))
    }

    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        self.0.row(0).iter().all(|v| v.abs() <= tol)
    }

    pub fn max_abs_diff(&self, other: &Superop) -> f64 {
        (self.0 - other.0).abs().max()
    }

    pub fn scale(&self, s: f64) -> Superop {
        Superop(self.0 * s)
    }
}

impl Add for Superop {
    type Output = Superop;
    fn add(self, rhs: Superop) -> Superop {
        Superop(self.0 + rhs.0)
    }
}

impl Sub for Superop {
    type Output = Superop;
    fn sub(self, rhs: Superop) -> Superop {
        Superop(self.0 - rhs.0)
    }
}

impl Mul<f64> for Superop {
    type Output = Superop;
    fn mul(self, rhs: f64) -> Superop {
        Superop(self.0 * rhs)
    }
}

/// `ρ ↦ aρ + ρa†`.
pub fn rmap(a: &Op2) -> Superop {
    let a = *a;
    let ad = a.adjoint();
    Superop::from_fn(|r| a * *r + *r * ad)
}

/// `ρ ↦ -i[h, ρ]` for Hermitian `h`.
pub fn commutator_map(h: &Op2) -> Result<Superop> {
    if !h.is_hermitian(HERMITIAN_TOL) {
        return Err(Error::NonHermitian);
    }
    let h = *h;
    Ok(Superop::from_fn(|r| (h * *r - *r * h) * C64::new(0., -1.)))
}

/// `ρ ↦ aρa† - ½{a†a, ρ}`.
pub fn dissipator(a: &Op2) -> Superop {
    let a = *a;
    let ad = a.adjoint();
    let n = ad * a;
    Superop::from_fn(|r| a * *r * ad - (n * *r + *r * n) * 0.5)
}

/// `ρ ↦ aρa†`.
pub fn sandwich(a: &Op2) -> Superop {
    let a = *a;
    let ad = a.adjoint();
    Superop::from_fn(|r| a * *r * ad)
}

/// `ρ ↦ hρ + ρh` for Hermitian `h`.
pub fn anticommutator_map(h: &Op2) -> Superop {
    let h = *h;
    Superop::from_fn(|r| h * *r + *r * h)
}

/// `e^{t g}`.
pub fn expm(g: &Superop, t: f64) -> Superop {
    Superop(expm_matrix(&(g.0 * t)))
}
