//! The standard spin-1/2 teleportation protocol.
//!
//! Bell basis for a pair of particles, the commuting pair of observables
//! B = sigma_z sigma_z and Bbar = sigma_x sigma_x whose joint eigenvalues
//! (beta, betabar) label that basis, the three-particle initial state,
//! its expansion over the particle-1,2 Bell basis, the correction
//! unitaries and their rotation images, selective Bell projection, and
//! the two algebraic routes to the post-selection expectation value.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spinor::{
    embed, pauli, project, projector_onto, sigma_dot, spin_eigenstate, tensor_ops, Amplitude,
    Direction, LinearOperator, Pauli, Sign, StateVector, EXACT_TOL,
};

/// Joint eigenvalue pair (beta, betabar) labelling a Bell state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BellLabel {
    pub beta: Sign,
    pub beta_bar: Sign,
}

impl BellLabel {
    pub const ALL: [BellLabel; 4] = [
        BellLabel { beta: Sign::Plus, beta_bar: Sign::Plus },
        BellLabel { beta: Sign::Plus, beta_bar: Sign::Minus },
        BellLabel { beta: Sign::Minus, beta_bar: Sign::Plus },
        BellLabel { beta: Sign::Minus, beta_bar: Sign::Minus },
    ];

    pub fn new(beta: i32, beta_bar: i32) -> Result<Self> {
        Ok(BellLabel {
            beta: Sign::from_int(beta)?,
            beta_bar: Sign::from_int(beta_bar)?,
        })
    }

    /// The singlet label (-1, -1).
    pub fn singlet() -> Self {
        BellLabel {
            beta: Sign::Minus,
            beta_bar: Sign::Minus,
        }
    }
}

impl std::fmt::Display for BellLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.beta, self.beta_bar)
    }
}

/// The four maximally entangled two-particle states, as simultaneous
/// eigenstates of B and Bbar with eigenvalues given by `label`.
pub fn bell_state(label: BellLabel) -> StateVector {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let c = |v: f64| Complex64::new(v, 0.0);
    let amps = match (label.beta, label.beta_bar) {
        // (|++> + |-->)/sqrt2 and (|++> - |-->)/sqrt2 in the z basis
        (Sign::Plus, Sign::Plus) => vec![c(r), c(0.0), c(0.0), c(r)],
        (Sign::Plus, Sign::Minus) => vec![c(r), c(0.0), c(0.0), c(-r)],
        // (|+-> + |-+>)/sqrt2 and the singlet (|+-> - |-+>)/sqrt2
        (Sign::Minus, Sign::Plus) => vec![c(0.0), c(r), c(r), c(0.0)],
        (Sign::Minus, Sign::Minus) => vec![c(0.0), c(r), c(-r), c(0.0)],
    };
    StateVector::new(amps).expect("bell amplitudes are normalized")
}

/// The commuting pair (B, Bbar) = (sigma_1z sigma_2z, sigma_1x sigma_2x).
pub fn bell_observables() -> (LinearOperator, LinearOperator) {
    let b = tensor_ops(&[&pauli(Pauli::Z), &pauli(Pauli::Z)]).expect("two factors");
    let bbar = tensor_ops(&[&pauli(Pauli::X), &pauli(Pauli::X)]).expect("two factors");
    (b, bbar)
}

/// Three-particle initial state `|+>_1^n (x) |beta0 betabar0>_23`.
pub fn initial_state(n: &Direction, label0: BellLabel) -> StateVector {
    let head = spin_eigenstate(n, Sign::Plus);
    let pair = bell_state(label0);
    // assemble 2 (x) 4 manually; tensor_states handles only dim-2 factors
    let mut amps = Vec::with_capacity(8);
    for a in head.amps() {
        for b in pair.amps() {
            amps.push(a * b);
        }
    }
    StateVector::new(amps).expect("product of normalized states")
}

/// Correction unitary `U` for initial Bell label `label0` and measured
/// label `label`: the tabulated 2x2 operator undone by the receiver.
pub fn correction_unitary(label0: BellLabel, label: BellLabel) -> LinearOperator {
    use Sign::{Minus as M, Plus as P};
    let i = Complex64::new(0.0, 1.0);
    let minus_i_sy = pauli(Pauli::Y).scale(-i);
    let i_sy = pauli(Pauli::Y).scale(i);
    let key = (
        label0.beta,
        label0.beta_bar,
        label.beta,
        label.beta_bar,
    );
    match key {
        (P, P, P, P) => LinearOperator::identity(2),
        (P, P, P, M) => pauli(Pauli::Z),
        (P, P, M, P) => pauli(Pauli::X),
        (P, P, M, M) => minus_i_sy,

        (P, M, P, P) => pauli(Pauli::Z),
        (P, M, P, M) => LinearOperator::identity(2),
        (P, M, M, P) => i_sy,
        (P, M, M, M) => pauli(Pauli::X).scale(Complex64::new(-1.0, 0.0)),

        (M, P, P, P) => pauli(Pauli::X),
        (M, P, P, M) => minus_i_sy,
        (M, P, M, P) => LinearOperator::identity(2),
        (M, P, M, M) => pauli(Pauli::Z),

        (M, M, P, P) => minus_i_sy,
        (M, M, P, M) => pauli(Pauli::X),
        (M, M, M, P) => pauli(Pauli::Z).scale(Complex64::new(-1.0, 0.0)),
        (M, M, M, M) => LinearOperator::identity(2).scale(Complex64::new(-1.0, 0.0)),
    }
}

/// Proper rotation of R^3.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rotation3(pub [[f64; 3]; 3]);

impl Rotation3 {
    pub fn identity() -> Self {
        Rotation3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    pub fn apply(&self, v: &Direction) -> Direction {
        let m = &self.0;
        Direction::normalized(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
        .expect("rotation preserves unit norm")
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Rotation3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    /// Inverse rotation applied to `v` (orthogonal, so the transpose).
    pub fn apply_inverse(&self, v: &Direction) -> Direction {
        self.transpose().apply(v)
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn orthogonality_deviation(&self) -> f64 {
        let t = self.transpose();
        let mut dev: f64 = 0.0;
        for r in 0..3 {
            for c in 0..3 {
                let mut acc = 0.0;
                for k in 0..3 {
                    acc += t.0[r][k] * self.0[k][c];
                }
                let want = if r == c { 1.0 } else { 0.0 };
                dev = dev.max((acc - want).abs());
            }
        }
        dev
    }

    pub fn max_deviation(&self, other: &Rotation3) -> f64 {
        let mut dev: f64 = 0.0;
        for r in 0..3 {
            for c in 0..3 {
                dev = dev.max((self.0[r][c] - other.0[r][c]).abs());
            }
        }
        dev
    }
}

/// Rotation image of a 2x2 unitary via `R_ij = Re Tr(sigma_i U sigma_j U^dag) / 2`,
/// so that `U (sigma.m) U^dag = sigma.(R m)`.
pub fn rotation_from_unitary(u: &LinearOperator) -> Rotation3 {
    let sig = [pauli(Pauli::X), pauli(Pauli::Y), pauli(Pauli::Z)];
    let udag = u.adjoint();
    let mut m = [[0.0; 3]; 3];
    for (i, si) in sig.iter().enumerate() {
        for (j, sj) in sig.iter().enumerate() {
            let prod = si
                .mul(u)
                .and_then(|a| a.mul(sj))
                .and_then(|a| a.mul(&udag))
                .expect("2x2 products");
            let tr = prod.trace();
            debug_assert!(tr.im.abs() < 1e-12);
            m[i][j] = tr.re / 2.0;
        }
    }
    Rotation3(m)
}

/// A correction unitary together with its rotation image. `phase` is the
/// global phase `arg <+^{Rn}| U |+>^n` recorded at the reference axis
/// n = +z; it is generally n-dependent, see [`CorrectionEntry::phase_for`].
#[derive(Clone, Debug)]
pub struct CorrectionEntry {
    pub unitary: LinearOperator,
    pub rotation: Rotation3,
    pub phase: f64,
}

impl CorrectionEntry {
    /// Global phase of `U |+>^n` relative to `|+>^{Rn}` for this specific n.
    pub fn phase_for(&self, n: &Direction) -> f64 {
        let rotated = spin_eigenstate(&self.rotation.apply(n), Sign::Plus);
        let image = self
            .unitary
            .apply_raw(spin_eigenstate(n, Sign::Plus).amps())
            .expect("2x2 application");
        let overlap: Amplitude = rotated
            .amps()
            .iter()
            .zip(&image)
            .map(|(a, b)| a.conj() * b)
            .sum();
        overlap.arg()
    }
}

/// Correction unitary and the rotation it induces on the teleported axis.
pub fn correction_rotation(label0: BellLabel, label: BellLabel) -> CorrectionEntry {
    let unitary = correction_unitary(label0, label);
    let rotation = rotation_from_unitary(&unitary);
    let mut entry = CorrectionEntry {
        unitary,
        rotation,
        phase: 0.0,
    };
    entry.phase = entry.phase_for(&Direction::Z);
    entry
}

/// Projector `|beta betabar><beta betabar|_(12) (x) I_3` on the 8-dim space.
pub fn bell_projector(label: BellLabel) -> LinearOperator {
    let pair_proj = projector_onto(&bell_state(label));
    let id = LinearOperator::identity(2);
    pair_proj.kron(&id)
}

/// One term of the expansion of the initial state over the particle-1,2
/// Bell basis.
#[derive(Clone, Debug)]
pub struct ExpansionRecord {
    pub label: BellLabel,
    /// |c|: magnitude of the expansion coefficient.
    pub coeff_abs: f64,
    /// Conditional (normalized) particle-3 state attached to this label.
    pub particle3: StateVector,
    /// Distance, up to a global phase, between `particle3` and the
    /// tabulated `U |+>^n`.
    pub correction_deviation: f64,
    /// Global phase of the branch relative to the rotated eigenstate:
    /// `arg <+^{Rn} | particle3>`. Recorded per n, never assumed constant.
    pub phase: f64,
}

/// Contract the particle-1,2 Bell bra with an 8-dim state, leaving the raw
/// particle-3 amplitudes.
fn bell_component(label: BellLabel, psi: &StateVector) -> Vec<Amplitude> {
    let bra = bell_state(label);
    let mut out = vec![Complex64::new(0.0, 0.0); 2];
    for ij in 0..4 {
        let w = bra.amp(ij).conj();
        for (k, slot) in out.iter_mut().enumerate() {
            *slot += w * psi.amp(ij * 2 + k);
        }
    }
    out
}

/// Expand `psi = |+>_1^n |label0>_23` over the particle-1,2 Bell basis and
/// verify each branch against the correction table.
pub fn expansion_check(
    psi: &StateVector,
    label0: BellLabel,
    n: &Direction,
) -> Result<Vec<ExpansionRecord>> {
    let reference = initial_state(n, label0);
    let deviation: f64 = psi
        .amps()
        .iter()
        .zip(reference.amps())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    if deviation > EXACT_TOL {
        return Err(Error::NotProductForm { deviation });
    }

    let plus_n = spin_eigenstate(n, Sign::Plus);
    let mut records = Vec::with_capacity(4);
    for label in BellLabel::ALL {
        let component = bell_component(label, psi);
        let coeff_abs = component.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let particle3 = StateVector::new(component)?;
        let entry = correction_rotation(label0, label);
        let expected = StateVector::new(entry.unitary.apply_raw(plus_n.amps())?)?;
        let correction_deviation = expected.distance_up_to_phase(&particle3)?;
        let rotated = spin_eigenstate(&entry.rotation.apply(n), Sign::Plus);
        let phase = rotated.inner(&particle3)?.arg();
        records.push(ExpansionRecord {
            label,
            coeff_abs,
            particle3,
            correction_deviation,
            phase,
        });
    }
    Ok(records)
}

/// Route A: `<Psi| P (sigma_3.c) P |Psi> / <Psi| P |Psi>` entirely in the
/// 8-dim space.
pub fn route_a_expectation(
    n: &Direction,
    label0: BellLabel,
    label: BellLabel,
    c: &Direction,
) -> Result<f64> {
    let psi = initial_state(n, label0);
    let projector = bell_projector(label);
    let projected = projector.apply_raw(psi.amps())?;
    let prob: f64 = projected.iter().map(|a| a.norm_sqr()).sum();
    if prob <= crate::spinor::DEGENERATE_PROB {
        return Err(Error::ZeroProbabilityBranch { prob });
    }
    let observable = embed(&sigma_dot(c), 3, 3)?;
    let image = observable.apply_raw(&projected)?;
    let numerator: Amplitude = projected
        .iter()
        .zip(&image)
        .map(|(a, b)| a.conj() * b)
        .sum();
    debug_assert!(numerator.im.abs() < 1e-12);
    Ok(numerator.re / prob)
}

/// Route B: the same expectation computed as `n . (R^{-1} c)`, i.e. the
/// original single-particle state measured along the back-rotated setting.
pub fn route_b_expectation(
    n: &Direction,
    label0: BellLabel,
    label: BellLabel,
    c: &Direction,
) -> f64 {
    let entry = correction_rotation(label0, label);
    let c_back = entry.rotation.apply_inverse(c);
    n.dot(&c_back)
}

/// Outcome statistics of one run of the protocol for a fixed measured label.
#[derive(Clone, Debug, Serialize)]
pub struct OutcomeRecord {
    pub label: BellLabel,
    pub prob: f64,
    /// Overlap |<+^n|psi_3>|^2 before the receiver applies U^dag.
    pub fidelity_before_correction: f64,
    /// Overlap after applying U^dag: 1 for the exact protocol.
    pub fidelity_after_correction: f64,
}

/// Run the protocol: Bell-project the 1-2 pair on each of the four labels,
/// extract the conditional particle-3 state, undo the correction.
pub fn protocol_run(n: &Direction, label0: BellLabel) -> Result<Vec<OutcomeRecord>> {
    let psi = initial_state(n, label0);
    let plus_n = spin_eigenstate(n, Sign::Plus);
    let mut out = Vec::with_capacity(4);
    for label in BellLabel::ALL {
        let projector = bell_projector(label);
        let (prob, post) = project(&psi, &projector)?;
        let particle3 = StateVector::new(bell_component(label, &post))?;
        let fidelity_before_correction = plus_n.fidelity(&particle3)?;
        let corrected = StateVector::new(
            correction_unitary(label0, label)
                .adjoint()
                .apply_raw(particle3.amps())?,
        )?;
        let fidelity_after_correction = plus_n.fidelity(&corrected)?;
        out.push(OutcomeRecord {
            label,
            prob,
            fidelity_before_correction,
            fidelity_after_correction,
        });
    }
    Ok(out)
}
