//! Exact finite-dimensional complex linear algebra for 1-3 spin-1/2 particles.
//!
//! States are dense normalized amplitude vectors of dimension 2, 4 or 8;
//! operators are dense complex matrices. Particle ordering in tensor
//! products is fixed as 1 (x) 2 (x) 3 throughout the crate.
//!
//! Phase convention: for a unit vector `n` with polar angles (theta, phi),
//! the spin-up eigenstate is `|+>^n = (cos(theta/2), e^{i phi} sin(theta/2))`
//! and `|->^n = |+>^{-n}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complex amplitude entering states and operators.
pub type Amplitude = Complex64;

/// Tolerance for exactness checks (unit norms, hermiticity, probabilities).
pub const EXACT_TOL: f64 = 1e-12;

/// Probabilities below this are treated as a zero-probability branch.
pub const DEGENERATE_PROB: f64 = 1e-14;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Sign of an eigenvalue or Bell quantum number: +1 or -1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn from_int(v: i32) -> Result<Self> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            _ => Err(Error::InvalidBellLabel { value: v }),
        }
    }

    pub fn as_int(self) -> i32 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

impl Serialize for Sign {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i32(self.as_int())
    }
}

impl<'de> Deserialize<'de> for Sign {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = i32::deserialize(d)?;
        Sign::from_int(v).map_err(serde::de::Error::custom)
    }
}

impl std::fmt::Display for Sign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:+}", self.as_int())
    }
}

/// Unit vector in R^3. Houses measurement settings, state axes and
/// hidden-variable points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Direction {
    pub const X: Direction = Direction { x: 1.0, y: 0.0, z: 0.0 };
    pub const Y: Direction = Direction { x: 0.0, y: 1.0, z: 0.0 };
    pub const Z: Direction = Direction { x: 0.0, y: 0.0, z: 1.0 };

    /// Build from components, requiring unit norm within `EXACT_TOL`.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > EXACT_TOL {
            return Err(Error::InvalidDirection { x, y, z, norm });
        }
        Ok(Direction { x, y, z })
    }

    /// Build from components of any nonzero length, rescaling to unit norm.
    pub fn normalized(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || norm < DEGENERATE_PROB {
            return Err(Error::InvalidDirection { x, y, z, norm });
        }
        Ok(Direction {
            x: x / norm,
            y: y / norm,
            z: z / norm,
        })
    }

    /// Unit vector with polar angle `theta` (from +z) and azimuth `phi`.
    pub fn from_polar(theta: f64, phi: f64) -> Self {
        let s = theta.sin();
        Direction {
            x: s * phi.cos(),
            y: s * phi.sin(),
            z: theta.cos(),
        }
    }

    /// Polar angles (theta, phi) with theta in [0, pi], phi in (-pi, pi].
    pub fn polar(&self) -> (f64, f64) {
        let theta = self.z.clamp(-1.0, 1.0).acos();
        let phi = if self.x == 0.0 && self.y == 0.0 {
            0.0
        } else {
            self.y.atan2(self.x)
        };
        (theta, phi)
    }

    pub fn dot(&self, other: &Direction) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(&self, other: &Direction) -> (f64, f64, f64) {
        (
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn neg(&self) -> Direction {
        Direction {
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    pub fn approx_eq(&self, other: &Direction, tol: f64) -> bool {
        (self.x - other.x).abs() <= tol
            && (self.y - other.y).abs() <= tol
            && (self.z - other.z).abs() <= tol
    }
}

/// Normalized state of 1-3 spin-1/2 particles (dim 2, 4 or 8).
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amps: Vec<Amplitude>,
}

impl StateVector {
    /// Build from raw amplitudes; the vector is normalized. Errors on
    /// unsupported dimension, non-finite entries or a near-zero norm.
    pub fn new(amps: Vec<Amplitude>) -> Result<Self> {
        let dim = amps.len();
        if !matches!(dim, 2 | 4 | 8) {
            return Err(Error::UnsupportedDimension { dim });
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::UnsupportedDimension { dim });
        }
        let norm_sqr: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if norm_sqr < DEGENERATE_PROB {
            return Err(Error::ZeroProbabilityBranch { prob: norm_sqr });
        }
        let norm = norm_sqr.sqrt();
        let amps = amps.into_iter().map(|a| a / norm).collect();
        Ok(StateVector { amps })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[Amplitude] {
        &self.amps
    }

    pub fn amp(&self, i: usize) -> Amplitude {
        self.amps[i]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Inner product `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<Amplitude> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(inner_of(&self.amps, &other.amps))
    }

    /// Overlap probability `|<self|other>|^2`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Maximum amplitude deviation from `other` after aligning the global
    /// phase of `other` onto `self`.
    pub fn distance_up_to_phase(&self, other: &StateVector) -> Result<f64> {
        let overlap = self.inner(other)?;
        let phase = if overlap.norm() > DEGENERATE_PROB {
            overlap / overlap.norm()
        } else {
            Amplitude::new(1.0, 0.0)
        };
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (b - phase * a).norm())
            .fold(0.0, f64::max))
    }
}

fn inner_of(a: &[Amplitude], b: &[Amplitude]) -> Amplitude {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm_sqr_of(v: &[Amplitude]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum()
}

/// Dense complex matrix acting on 1-3 spin-1/2 particles.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearOperator {
    dim: usize,
    entries: Vec<Amplitude>, // row-major
}

impl LinearOperator {
    pub fn from_entries(dim: usize, entries: Vec<Amplitude>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        Ok(LinearOperator { dim, entries })
    }

    pub fn zeros(dim: usize) -> Self {
        LinearOperator {
            dim,
            entries: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, ONE);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Amplitude {
        self.entries[row * self.dim + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: Amplitude) {
        self.entries[row * self.dim + col] = v;
    }

    pub fn adjoint(&self) -> LinearOperator {
        let mut out = Self::zeros(self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                out.set(c, r, self.get(r, c).conj());
            }
        }
        out
    }

    pub fn mul(&self, other: &LinearOperator) -> Result<LinearOperator> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let n = self.dim;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for c in 0..n {
                let mut acc = ZERO;
                for k in 0..n {
                    acc += self.get(r, k) * other.get(k, c);
                }
                out.set(r, c, acc);
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &LinearOperator) -> Result<LinearOperator> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a + b)
            .collect();
        Ok(LinearOperator {
            dim: self.dim,
            entries,
        })
    }

    pub fn sub(&self, other: &LinearOperator) -> Result<LinearOperator> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a - b)
            .collect();
        Ok(LinearOperator {
            dim: self.dim,
            entries,
        })
    }

    pub fn scale(&self, c: Amplitude) -> LinearOperator {
        LinearOperator {
            dim: self.dim,
            entries: self.entries.iter().map(|a| a * c).collect(),
        }
    }

    pub fn trace(&self) -> Amplitude {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Apply to raw amplitudes, returning the (generally unnormalized) image.
    pub fn apply_raw(&self, v: &[Amplitude]) -> Result<Vec<Amplitude>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        let out = self
            .entries
            .chunks(self.dim)
            .map(|row| row.iter().zip(v).map(|(m, x)| m * x).sum())
            .collect();
        Ok(out)
    }

    /// Maximum entrywise deviation from another operator.
    pub fn max_deviation(&self, other: &LinearOperator) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        self.max_deviation(&self.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
    }

    pub fn unitarity_deviation(&self) -> f64 {
        let prod = self.adjoint().mul(self).expect("same dim");
        prod.max_deviation(&LinearOperator::identity(self.dim))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_deviation() <= tol
    }

    pub fn idempotency_deviation(&self) -> f64 {
        let sq = self.mul(self).expect("same dim");
        sq.max_deviation(self)
    }

    pub fn kron(&self, other: &LinearOperator) -> LinearOperator {
        let n = self.dim * other.dim;
        let mut out = LinearOperator::zeros(n);
        for r1 in 0..self.dim {
            for c1 in 0..self.dim {
                let a = self.get(r1, c1);
                for r2 in 0..other.dim {
                    for c2 in 0..other.dim {
                        out.set(
                            r1 * other.dim + r2,
                            c1 * other.dim + c2,
                            a * other.get(r2, c2),
                        );
                    }
                }
            }
        }
        out
    }
}

/// Pauli matrix selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    Identity,
    X,
    Y,
    Z,
}

/// The standard 2x2 Pauli matrix (or identity).
pub fn pauli(which: Pauli) -> LinearOperator {
    let i = Complex64::new(0.0, 1.0);
    let entries = match which {
        Pauli::Identity => vec![ONE, ZERO, ZERO, ONE],
        Pauli::X => vec![ZERO, ONE, ONE, ZERO],
        Pauli::Y => vec![ZERO, -i, i, ZERO],
        Pauli::Z => vec![ONE, ZERO, ZERO, -ONE],
    };
    LinearOperator { dim: 2, entries }
}

/// `sigma . n` for a unit vector n.
pub fn sigma_dot(n: &Direction) -> LinearOperator {
    let entries = vec![
        Complex64::new(n.z, 0.0),
        Complex64::new(n.x, -n.y),
        Complex64::new(n.x, n.y),
        Complex64::new(-n.z, 0.0),
    ];
    LinearOperator { dim: 2, entries }
}

/// Eigenstate of `sigma . n` with the given eigenvalue sign.
///
/// `|+>^n = (cos(theta/2), e^{i phi} sin(theta/2))`; the minus eigenstate
/// is defined as `|+>^{-n}`.
pub fn spin_eigenstate(n: &Direction, sign: Sign) -> StateVector {
    let axis = match sign {
        Sign::Plus => *n,
        Sign::Minus => n.neg(),
    };
    let (theta, phi) = axis.polar();
    let half = theta / 2.0;
    let amps = vec![
        Complex64::new(half.cos(), 0.0),
        Complex64::from_polar(half.sin(), phi),
    ];
    StateVector { amps }
}

/// Projector `|psi><psi|`.
pub fn projector_onto(psi: &StateVector) -> LinearOperator {
    let n = psi.dim();
    let mut out = LinearOperator::zeros(n);
    for r in 0..n {
        for c in 0..n {
            out.set(r, c, psi.amp(r) * psi.amp(c).conj());
        }
    }
    out
}

fn check_factors_len(len: usize) -> Result<()> {
    if len == 0 || len > 3 {
        return Err(Error::UnsupportedDimension { dim: 1 << len });
    }
    Ok(())
}

/// Kronecker product of 1-3 single-particle states in order 1 (x) 2 (x) 3.
pub fn tensor_states(factors: &[&StateVector]) -> Result<StateVector> {
    check_factors_len(factors.len())?;
    for f in factors {
        if f.dim() != 2 {
            return Err(Error::UnsupportedDimension { dim: f.dim() });
        }
    }
    let mut amps = vec![ONE];
    for f in factors {
        let mut next = Vec::with_capacity(amps.len() * 2);
        for a in &amps {
            for b in f.amps() {
                next.push(a * b);
            }
        }
        amps = next;
    }
    StateVector::new(amps)
}

/// Kronecker product of 1-3 single-particle operators in order 1 (x) 2 (x) 3.
pub fn tensor_ops(factors: &[&LinearOperator]) -> Result<LinearOperator> {
    check_factors_len(factors.len())?;
    for f in factors {
        if f.dim() != 2 {
            return Err(Error::UnsupportedDimension { dim: f.dim() });
        }
    }
    let mut out = LinearOperator::identity(1);
    for f in factors {
        out = out.kron(f);
    }
    Ok(out)
}

/// Embed a single-particle operator at `slot` (1-based) among `parties`
/// particles, with identity on the other slots.
pub fn embed(op: &LinearOperator, slot: usize, parties: usize) -> Result<LinearOperator> {
    if op.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: op.dim(),
        });
    }
    if !(2..=3).contains(&parties) {
        return Err(Error::UnsupportedDimension { dim: 1 << parties });
    }
    if slot == 0 || slot > parties {
        return Err(Error::SlotOutOfRange { slot, parties });
    }
    let id = LinearOperator::identity(2);
    let factors: Vec<&LinearOperator> = (1..=parties)
        .map(|k| if k == slot { op } else { &id })
        .collect();
    tensor_ops(&factors)
}

/// `<psi| op |psi>` for a hermitian operator.
pub fn expectation(op: &LinearOperator, psi: &StateVector) -> Result<f64> {
    if op.dim() != psi.dim() {
        return Err(Error::DimensionMismatch {
            expected: psi.dim(),
            got: op.dim(),
        });
    }
    let dev = op.hermiticity_deviation();
    if dev > EXACT_TOL {
        return Err(Error::NonHermitian { deviation: dev });
    }
    let image = op.apply_raw(psi.amps())?;
    let val = inner_of(psi.amps(), &image);
    assert!(
        val.im.abs() < EXACT_TOL,
        "expectation of hermitian operator has imaginary part {}",
        val.im
    );
    Ok(val.re)
}

/// Selective projective measurement: returns the outcome probability
/// `<psi|P|psi>` and the renormalized post-measurement state `P|psi>/sqrt(p)`.
pub fn project(psi: &StateVector, proj: &LinearOperator) -> Result<(f64, StateVector)> {
    if proj.dim() != psi.dim() {
        return Err(Error::DimensionMismatch {
            expected: psi.dim(),
            got: proj.dim(),
        });
    }
    let hermitian_dev = proj.hermiticity_deviation();
    let idempotent_dev = proj.idempotency_deviation();
    if hermitian_dev > EXACT_TOL || idempotent_dev > EXACT_TOL {
        return Err(Error::NotAProjector {
            hermitian_dev,
            idempotent_dev,
        });
    }
    let image = proj.apply_raw(psi.amps())?;
    let prob = norm_sqr_of(&image);
    if prob <= DEGENERATE_PROB {
        return Err(Error::ZeroProbabilityBranch { prob });
    }
    let scale = prob.sqrt();
    let amps = image.into_iter().map(|a| a / scale).collect();
    Ok((prob, StateVector { amps }))
}
