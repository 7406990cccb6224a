//! Hidden-variable machinery on the unit sphere.
//!
//! A one-spin hidden-variable model pairs a probability density over
//! the sphere of hidden points with a +-1 response function per
//! instrument setting. Two concrete models ship:
//!
//! * Model 1: uniform density on the hemisphere around the state axis,
//!   response `sgn(lambda . a~)` with the setting warped toward the state
//!   axis — the response depends on the state.
//! * Model 2: density `(lambda . n)/pi` on the same hemisphere, response
//!   `sgn(lambda . a)` — the response depends only on the setting.
//!
//! On top of these sit projector responses, conditional densities, the
//! two routes to a post-selection expectation value, and factorized
//! three-particle candidate models for the teleportation process.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_s2, integrate_s2_cubed, IntegralResult, QuadratureSpec};
use crate::spinor::{Direction, Sign};
use crate::teleport::BellLabel;

/// Hidden-variable point: a unit vector on the sphere.
pub type HvPoint = Direction;

/// Tie threshold below which a dot product counts as lying on a response
/// boundary.
pub const SGN_TIE_TOL: f64 = 1e-12;

/// Sign response with a deterministic tie-break: points within
/// `SGN_TIE_TOL` of the boundary plane are treated as nudged by 1e-9
/// along the axis, i.e. they respond +1. The tie set has measure zero.
pub fn sgn_response(dot: f64) -> f64 {
    if dot.abs() < SGN_TIE_TOL {
        1.0
    } else {
        dot.signum()
    }
}

/// Declared support of a density: intersection of open half-spaces
/// `lambda . axis > 0`. Empty list means the full sphere.
#[derive(Clone, Debug, Default)]
pub struct Support {
    half_spaces: Vec<Direction>,
}

impl Support {
    pub fn full_sphere() -> Self {
        Support::default()
    }

    pub fn hemisphere(axis: Direction) -> Self {
        Support {
            half_spaces: vec![axis],
        }
    }

    pub fn contains(&self, lambda: &Direction) -> bool {
        self.half_spaces.iter().all(|a| lambda.dot(a) > 0.0)
    }

    pub fn is_full_sphere(&self) -> bool {
        self.half_spaces.is_empty()
    }

    /// Axis of the single-hemisphere case, if that is what this is.
    pub fn hemisphere_axis(&self) -> Option<&Direction> {
        match self.half_spaces.as_slice() {
            [axis] => Some(axis),
            _ => None,
        }
    }
}

type PointFn = Arc<dyn Fn(&Direction) -> f64 + Send + Sync>;

/// Normalized probability density over the sphere, as a closed-form
/// evaluator plus its declared support and the state axis it derives from.
#[derive(Clone)]
pub struct DensityS2 {
    eval: PointFn,
    pub support: Support,
    /// State parameter the density was built from, when there is one.
    pub state: Option<Direction>,
}

impl DensityS2 {
    pub fn new(
        eval: impl Fn(&Direction) -> f64 + Send + Sync + 'static,
        support: Support,
        state: Option<Direction>,
    ) -> Self {
        DensityS2 {
            eval: Arc::new(eval),
            support,
            state,
        }
    }

    pub fn eval(&self, lambda: &Direction) -> f64 {
        (self.eval)(lambda)
    }
}

/// Response function of an observable: maps hidden points to eigenvalues,
/// for a fixed instrument setting. `state_dep` records the state axis the
/// response was built from, when the model makes it state-dependent.
#[derive(Clone)]
pub struct ResponseFn {
    eval: PointFn,
    pub setting: Direction,
    pub state_dep: Option<Direction>,
}

impl ResponseFn {
    pub fn new(
        eval: impl Fn(&Direction) -> f64 + Send + Sync + 'static,
        setting: Direction,
        state_dep: Option<Direction>,
    ) -> Self {
        ResponseFn {
            eval: Arc::new(eval),
            setting,
            state_dep,
        }
    }

    pub fn eval(&self, lambda: &Direction) -> f64 {
        (self.eval)(lambda)
    }
}

/// Projector response: 0/1 valued, idempotent by construction.
#[derive(Clone)]
pub struct ProjResponse {
    eval: PointFn,
    pub setting: Direction,
    pub state_dep: Option<Direction>,
}

impl ProjResponse {
    pub fn eval(&self, lambda: &Direction) -> f64 {
        (self.eval)(lambda)
    }
}

/// Uniform density over the hemisphere around `n`:
/// `(1 + sgn(lambda.n)) / (4 pi)`.
pub fn model1_density(n: &Direction) -> DensityS2 {
    let axis = *n;
    DensityS2::new(
        move |lambda| {
            if lambda.dot(&axis) > 0.0 {
                1.0 / (2.0 * std::f64::consts::PI)
            } else {
                0.0
            }
        },
        Support::hemisphere(*n),
        Some(*n),
    )
}

/// Setting axis warped toward the state axis: the unit vector in
/// span{a, n} on a's side whose angle to n is
/// `theta~ = (pi/2)(1 - cos theta)`, with `cos theta = a . n`.
///
/// At `a = n` this is `n`; at `a = -n` the warp angle is exactly pi, so
/// the result is `-n` for every choice of rotation plane and the plane
/// degeneracy is immaterial.
pub fn warped_axis(a: &Direction, n: &Direction) -> Direction {
    let cos_theta = a.dot(n).clamp(-1.0, 1.0);
    let ox = a.x - cos_theta * n.x;
    let oy = a.y - cos_theta * n.y;
    let oz = a.z - cos_theta * n.z;
    let orth_norm = (ox * ox + oy * oy + oz * oz).sqrt();
    if orth_norm < 1e-9 {
        // parallel or antiparallel: no in-plane component survives
        return if cos_theta > 0.0 { *n } else { n.neg() };
    }
    let theta_tilde = std::f64::consts::FRAC_PI_2 * (1.0 - cos_theta);
    let (c, s) = (theta_tilde.cos(), theta_tilde.sin());
    Direction::normalized(
        c * n.x + s * ox / orth_norm,
        c * n.y + s * oy / orth_norm,
        c * n.z + s * oz / orth_norm,
    )
    .expect("combination of orthonormal unit vectors")
}

/// Model 1 response `sgn(lambda . a~(a, n))`; state-dependent through the
/// warped axis.
pub fn model1_response(a: &Direction, n: &Direction) -> ResponseFn {
    let tilted = warped_axis(a, n);
    ResponseFn::new(
        move |lambda| sgn_response(lambda.dot(&tilted)),
        *a,
        Some(*n),
    )
}

/// Density `(lambda . n)/pi` on the hemisphere around `n`.
pub fn model2_density(n: &Direction) -> DensityS2 {
    let axis = *n;
    DensityS2::new(
        move |lambda| {
            let d = lambda.dot(&axis);
            if d > 0.0 {
                d / std::f64::consts::PI
            } else {
                0.0
            }
        },
        Support::hemisphere(*n),
        Some(*n),
    )
}

/// Model 2 response `sgn(lambda . a)`; depends only on the setting.
pub fn model2_response(a: &Direction) -> ResponseFn {
    let axis = *a;
    ResponseFn::new(move |lambda| sgn_response(lambda.dot(&axis)), *a, None)
}

/// Affine image `alpha1 * base + alpha2` of a +-1 response: the response
/// of the observable with eigenvalues `a_pm = +-alpha1 + alpha2`.
pub fn observable_response(base: &ResponseFn, alpha1: f64, alpha2: f64) -> ResponseFn {
    let inner = base.clone();
    ResponseFn {
        eval: Arc::new(move |lambda| alpha1 * inner.eval(lambda) + alpha2),
        setting: base.setting,
        state_dep: base.state_dep,
    }
}

/// Projector response `(1 + s0 * base)/2` for a +-1 base response.
pub fn projector_response(base: &ResponseFn, s0: Sign) -> ProjResponse {
    let inner = base.clone();
    let sign = s0.value();
    ProjResponse {
        eval: Arc::new(move |lambda| (1.0 + sign * inner.eval(lambda)) / 2.0),
        setting: base.setting,
        state_dep: base.state_dep,
    }
}

/// Hidden-variable density conditioned on the projector response being 1:
/// `Pi(lambda) rho(lambda) / p` with `p = integral of Pi rho`.
pub fn conditional_density(
    pi: &ProjResponse,
    rho: &DensityS2,
    spec: &QuadratureSpec,
) -> Result<DensityS2> {
    let pi_inner = pi.clone();
    let rho_inner = rho.clone();
    let p = integrate_s2(|l| pi_inner.eval(l) * rho_inner.eval(l), spec)?;
    if p.value <= 3.0 * p.std_error + crate::spinor::DEGENERATE_PROB {
        return Err(Error::ZeroProbabilityBranch { prob: p.value });
    }
    let weight = p.value;
    let pi2 = pi.clone();
    let rho2 = rho.clone();
    Ok(DensityS2 {
        eval: Arc::new(move |l| pi2.eval(l) * rho2.eval(l) / weight),
        support: rho.support.clone(),
        state: rho.state,
    })
}

/// Built-in one-spin hidden-variable model family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HvModel {
    Model1,
    Model2,
}

impl HvModel {
    pub fn name(&self) -> &'static str {
        match self {
            HvModel::Model1 => "model1",
            HvModel::Model2 => "model2",
        }
    }

    /// Density assigned to the state `|+>^n`.
    pub fn density(&self, n: &Direction) -> DensityS2 {
        match self {
            HvModel::Model1 => model1_density(n),
            HvModel::Model2 => model2_density(n),
        }
    }

    /// Response for setting `a` when the system state is `|+>^state`.
    /// Model 2 ignores the state.
    pub fn response(&self, a: &Direction, state: &Direction) -> ResponseFn {
        match self {
            HvModel::Model1 => model1_response(a, state),
            HvModel::Model2 => model2_response(a),
        }
    }
}

impl std::str::FromStr for HvModel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "model1" => Ok(HvModel::Model1),
            "model2" => Ok(HvModel::Model2),
            other => Err(format!("unknown model '{other}' (expected model1 or model2)")),
        }
    }
}

/// Route A image of `<P_+^a A P_+^a>`: the projector treated as part of
/// the observable, `integral of A(lambda) Pi(lambda) rho_n(lambda)`.
pub fn route_a_hv(
    model: &HvModel,
    n: &Direction,
    a: &Direction,
    alpha1: f64,
    alpha2: f64,
    spec: &QuadratureSpec,
) -> Result<IntegralResult> {
    let base = model.response(a, n);
    let observable = observable_response(&base, alpha1, alpha2);
    let pi = projector_response(&base, Sign::Plus);
    let rho = model.density(n);
    integrate_s2(
        |l| observable.eval(l) * pi.eval(l) * rho.eval(l),
        spec,
    )
}

/// Route B image: the projector treated as a state preparation. The
/// observable response is built for the projected state `|+>^a` and
/// averaged against that state's density, then weighted by the
/// precomputed projection probability.
pub fn route_b_hv(
    model: &HvModel,
    a: &Direction,
    alpha1: f64,
    alpha2: f64,
    weight_p: f64,
    spec: &QuadratureSpec,
) -> Result<IntegralResult> {
    let base = model.response(a, a);
    let observable = observable_response(&base, alpha1, alpha2);
    let rho_final = model.density(a);
    let inner = integrate_s2(|l| observable.eval(l) * rho_final.eval(l), spec)?;
    Ok(IntegralResult {
        value: inner.value * weight_p,
        std_error: inner.std_error * weight_p.abs(),
        evaluations: inner.evaluations,
    })
}

type Rho1Fn = Arc<dyn Fn(&Direction, &Direction) -> f64 + Send + Sync>;
type Rho23Fn = Arc<dyn Fn(&Direction, &Direction) -> f64 + Send + Sync>;
type PiFn = Arc<dyn Fn(&Direction, &Direction, BellLabel) -> f64 + Send + Sync>;
type CFn = Arc<dyn Fn(&Direction, &Direction) -> f64 + Send + Sync>;

/// Factorized three-particle hidden-variable candidate for the
/// teleportation process: a single-particle density parameterized by the
/// state axis, an interchange-symmetric two-particle density, a 0/1
/// projector response on the first two hidden points, and a +-1 response
/// for the particle-3 measurement.
#[derive(Clone)]
pub struct TpCandidate {
    pub name: String,
    rho1: Rho1Fn,
    rho23: Rho23Fn,
    pi: PiFn,
    c_response: CFn,
}

impl std::fmt::Debug for TpCandidate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TpCandidate")
            .field("name", &self.name)
            .finish_non_exhaustive()
    }
}

impl TpCandidate {
    pub fn new(
        name: impl Into<String>,
        rho1: impl Fn(&Direction, &Direction) -> f64 + Send + Sync + 'static,
        rho23: impl Fn(&Direction, &Direction) -> f64 + Send + Sync + 'static,
        pi: impl Fn(&Direction, &Direction, BellLabel) -> f64 + Send + Sync + 'static,
        c_response: impl Fn(&Direction, &Direction) -> f64 + Send + Sync + 'static,
    ) -> Self {
        TpCandidate {
            name: name.into(),
            rho1: Arc::new(rho1),
            rho23: Arc::new(rho23),
            pi: Arc::new(pi),
            c_response: Arc::new(c_response),
        }
    }

    /// The built-in candidate: state-agnostic uniform single-particle
    /// density, uniform x uniform pair density, projector response
    /// `1{lambda1.z>0} 1{lambda2.z>0}`, and `C = sgn(lambda3 . c)`.
    ///
    /// It exists to exercise the consistency checks with an exact
    /// projection weight of 1/4; it does not reproduce quantum
    /// teleportation statistics.
    pub fn shipped() -> Self {
        let u = 1.0 / (4.0 * std::f64::consts::PI);
        let u2 = 1.0 / (16.0 * std::f64::consts::PI * std::f64::consts::PI);
        TpCandidate::new(
            "uniform-product",
            move |_l, _n| u,
            move |_l2, _l3| u2,
            |l1, l2, _label| {
                let in1 = (1.0 + sgn_response(l1.z)) / 2.0;
                let in2 = (1.0 + sgn_response(l2.z)) / 2.0;
                in1 * in2
            },
            |l3, c| sgn_response(l3.dot(c)),
        )
    }

    /// Single-particle density at `lambda` for state axis `n`.
    pub fn eval_rho1(&self, lambda: &Direction, n: &Direction) -> f64 {
        (self.rho1)(lambda, n)
    }

    /// Two-particle density at `(a, b)`.
    pub fn eval_rho23(&self, a: &Direction, b: &Direction) -> f64 {
        (self.rho23)(a, b)
    }

    /// Projector response at `(lambda1, lambda2)` for the measured label.
    pub fn eval_pi(&self, l1: &Direction, l2: &Direction, label: BellLabel) -> f64 {
        (self.pi)(l1, l2, label)
    }

    /// Particle-3 response at `lambda3` for setting `c`.
    pub fn eval_c(&self, l3: &Direction, c: &Direction) -> f64 {
        (self.c_response)(l3, c)
    }

    /// Sampled sanity checks: densities non-negative, projector response
    /// in {0, 1}, particle-3 response in {-1, +1}.
    pub fn validate(&self, n: &Direction, label: BellLabel, seed: u64) -> Result<()> {
        let pts = crate::quadrature::sample_sphere(seed, 3000);
        let c_axis = Direction::Z;
        for chunk in pts.chunks(3) {
            let (l1, l2, l3) = (&chunk[0], &chunk[1], &chunk[2]);
            for (what, v) in [
                ("rho1", self.eval_rho1(l1, n)),
                ("rho23", self.eval_rho23(l2, l3)),
            ] {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::ResponseRange {
                        what: format!("{what} (must be finite and non-negative)"),
                        value: v,
                        x: l1.x,
                        y: l1.y,
                        z: l1.z,
                    });
                }
            }
            let pi = self.eval_pi(l1, l2, label);
            if !(pi == 0.0 || pi == 1.0) {
                return Err(Error::ResponseRange {
                    what: "projector response (must be 0 or 1)".into(),
                    value: pi,
                    x: l1.x,
                    y: l1.y,
                    z: l1.z,
                });
            }
            let c = self.eval_c(l3, &c_axis);
            if !(c == 1.0 || c == -1.0) {
                return Err(Error::ResponseRange {
                    what: "particle-3 response (must be -1 or +1)".into(),
                    value: c,
                    x: l3.x,
                    y: l3.y,
                    z: l3.z,
                });
            }
        }
        Ok(())
    }
}

/// Factorized three-particle density
/// `rho(l1, l2, l3) = rho1(l1; n) rho23(l2, l3)`. The initial Bell label
/// only identifies which pair state the two-particle density images; the
/// candidate's evaluator is shared across labels.
pub fn tp_factorized_density<'a>(
    cand: &'a TpCandidate,
    n: &'a Direction,
    _label0: BellLabel,
) -> impl Fn(&Direction, &Direction, &Direction) -> f64 + 'a {
    move |l1, l2, l3| cand.eval_rho1(l1, n) * cand.eval_rho23(l2, l3)
}

/// Hidden-variable image of the outcome probability:
/// `integral of Pi(l1, l2; label) rho1(l1; n) rho23(l2, l3)`.
pub fn tp_pr_hv(
    cand: &TpCandidate,
    n: &Direction,
    label0: BellLabel,
    label: BellLabel,
    spec: &QuadratureSpec,
) -> Result<IntegralResult> {
    let rho = tp_factorized_density(cand, n, label0);
    integrate_s2_cubed(
        |l1, l2, l3| cand.eval_pi(l1, l2, label) * rho(l1, l2, l3),
        spec,
    )
}

/// Hidden-variable image of the post-selection expectation value of the
/// particle-3 observable: the response averaged against the conditional
/// density.
pub fn tp_route_a_hv(
    cand: &TpCandidate,
    n: &Direction,
    label0: BellLabel,
    label: BellLabel,
    c: &Direction,
    spec: &QuadratureSpec,
) -> Result<IntegralResult> {
    let p = tp_pr_hv(cand, n, label0, label, spec)?;
    if p.value <= 3.0 * p.std_error + crate::spinor::DEGENERATE_PROB {
        return Err(Error::ZeroProbabilityBranch { prob: p.value });
    }
    let rho = tp_factorized_density(cand, n, label0);
    let numerator = integrate_s2_cubed(
        |l1, l2, l3| cand.eval_c(l3, c) * cand.eval_pi(l1, l2, label) * rho(l1, l2, l3),
        spec,
    )?;
    // conservative error for the ratio of two correlated estimates
    let value = numerator.value / p.value;
    let std_error =
        numerator.std_error / p.value + numerator.value.abs() * p.std_error / (p.value * p.value);
    Ok(IntegralResult {
        value,
        std_error,
        evaluations: numerator.evaluations + p.evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::sample_sphere;
    use approx::assert_abs_diff_eq;

    const N_MC: usize = 1_000_000;

    fn spec(seed: u64) -> QuadratureSpec {
        QuadratureSpec::monte_carlo(N_MC, seed)
    }

    #[test]
    fn model1_density_values() {
        let n = Direction::Z;
        let rho = model1_density(&n);
        assert_abs_diff_eq!(
            rho.eval(&n),
            1.0 / (2.0 * std::f64::consts::PI),
            epsilon = 1e-15
        );
        assert_eq!(rho.eval(&n.neg()), 0.0);
        let total = integrate_s2(|l| rho.eval(l), &spec(1)).unwrap();
        assert!(total.within_3_sigma(1.0), "norm {}", total.value);
    }

    #[test]
    fn model2_density_values() {
        let n = Direction::from_polar(0.8, 0.3);
        let rho = model2_density(&n);
        assert_abs_diff_eq!(rho.eval(&n), 1.0 / std::f64::consts::PI, epsilon = 1e-14);
        assert_eq!(rho.eval(&n.neg()), 0.0);
        let total = integrate_s2(|l| rho.eval(l), &spec(2)).unwrap();
        assert!(total.within_3_sigma(1.0), "norm {}", total.value);
    }

    #[test]
    fn warped_axis_identity_and_table() {
        let n = Direction::Z;
        // a = n stays put
        let same = warped_axis(&n, &n);
        assert!(same.approx_eq(&n, 1e-14));
        // theta = pi/3: warp angle (pi/2)(1 - 1/2) = pi/4
        let a = Direction::from_polar(std::f64::consts::FRAC_PI_3, 0.0);
        let w = warped_axis(&a, &n);
        assert_abs_diff_eq!(
            w.dot(&n),
            std::f64::consts::FRAC_PI_4.cos(),
            epsilon = 1e-13
        );
        // theta = pi/2: warp angle (pi/2)(1 - 0) = pi/2, so a is unmoved
        let a = Direction::X;
        let w = warped_axis(&a, &n);
        assert!(w.approx_eq(&a, 1e-13));
        // warped axis stays in span{a, n}
        let a = Direction::from_polar(2.0, 0.0);
        let w = warped_axis(&a, &n);
        assert_abs_diff_eq!(w.y, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn warped_axis_antiparallel_is_plane_free() {
        let n = Direction::Z;
        let w = warped_axis(&n.neg(), &n);
        assert!(w.approx_eq(&n.neg(), 1e-14));
    }

    #[test]
    fn model1_average_reproduces_cos_theta() {
        let n = Direction::Z;
        for (i, &theta) in [0.0, 0.7, std::f64::consts::FRAC_PI_2, 2.3, std::f64::consts::PI]
            .iter()
            .enumerate()
        {
            let a = Direction::from_polar(theta, 0.0);
            let resp = model1_response(&a, &n);
            let rho = model1_density(&n);
            let avg = integrate_s2(|l| resp.eval(l) * rho.eval(l), &spec(10 + i as u64)).unwrap();
            assert!(
                avg.within_3_sigma(theta.cos()),
                "theta={theta}: {} vs {}",
                avg.value,
                theta.cos()
            );
        }
    }

    #[test]
    fn model1_aligned_setting_average_is_one() {
        let n = Direction::from_polar(1.1, 2.0);
        let resp = model1_response(&n, &n);
        assert_eq!(resp.eval(&n), 1.0);
        let rho = model1_density(&n);
        let avg = integrate_s2(|l| resp.eval(l) * rho.eval(l), &spec(3)).unwrap();
        assert!(avg.within_3_sigma(1.0));
    }

    #[test]
    fn model1_response_at_warped_axis_is_plus_one() {
        let n = Direction::Z;
        let a = Direction::from_polar(1.0, 0.5);
        let resp = model1_response(&a, &n);
        let tilted = warped_axis(&a, &n);
        assert_eq!(resp.eval(&tilted), 1.0);
        assert_eq!(resp.state_dep, Some(n));
    }

    #[test]
    fn model2_average_reproduces_n_dot_a() {
        let n = Direction::from_polar(0.4, 1.0);
        for k in 0..20 {
            let theta = std::f64::consts::PI * k as f64 / 19.0;
            let a_local = Direction::from_polar(theta, 0.0);
            // rotate the test setting rigidly so angle(a, n) = theta
            let a = rotate_z_to(&n, &a_local);
            let resp = model2_response(&a);
            let rho = model2_density(&n);
            let avg = integrate_s2(|l| resp.eval(l) * rho.eval(l), &spec(40 + k)).unwrap();
            assert!(
                avg.within_3_sigma(n.dot(&a)),
                "theta={theta}: {} vs {}",
                avg.value,
                n.dot(&a)
            );
        }
    }

    /// Map `v` by the rotation taking +z to `target`.
    fn rotate_z_to(target: &Direction, v: &Direction) -> Direction {
        let z = Direction::Z;
        let c = target.z;
        if (c - 1.0).abs() < 1e-14 {
            return *v;
        }
        if (c + 1.0).abs() < 1e-14 {
            return Direction::normalized(v.x, -v.y, -v.z).unwrap();
        }
        let (ax, ay, az) = z.cross(target);
        let axis = Direction::normalized(ax, ay, az).unwrap();
        let s = (1.0 - c * c).sqrt();
        // Rodrigues rotation
        let dot = axis.dot(v);
        let (cx, cy, cz) = axis.cross(v);
        Direction::normalized(
            v.x * c + cx * s + axis.x * dot * (1.0 - c),
            v.y * c + cy * s + axis.y * dot * (1.0 - c),
            v.z * c + cz * s + axis.z * dot * (1.0 - c),
        )
        .unwrap()
    }

    #[test]
    fn model2_response_is_state_free() {
        let resp = model2_response(&Direction::X);
        assert!(resp.state_dep.is_none());
        assert_eq!(resp.eval(&Direction::X), 1.0);
    }

    #[test]
    fn observable_response_affine_map() {
        let base = model2_response(&Direction::Z);
        let identity = observable_response(&base, 1.0, 0.0);
        let shifted = observable_response(&base, 2.0, 3.0);
        let up = Direction::from_polar(0.3, 0.0);
        let down = Direction::from_polar(2.9, 0.0);
        assert_eq!(identity.eval(&up), base.eval(&up));
        assert_eq!(shifted.eval(&up), 5.0); // a+ = +2 + 3
        assert_eq!(shifted.eval(&down), 1.0); // a- = -2 + 3
    }

    #[test]
    fn observable_average_is_affine_in_base_average() {
        let n = Direction::Z;
        let a = Direction::from_polar(1.2, 0.0);
        let base = model2_response(&a);
        let obs = observable_response(&base, 2.0, 0.5);
        let rho = model2_density(&n);
        let avg = integrate_s2(|l| obs.eval(l) * rho.eval(l), &spec(6)).unwrap();
        let want = 2.0 * n.dot(&a) + 0.5;
        assert!(avg.within_3_sigma(want), "{} vs {want}", avg.value);
    }

    #[test]
    fn projector_response_is_zero_one() {
        let base = model2_response(&Direction::Z);
        let pi = projector_response(&base, Sign::Plus);
        assert_eq!(pi.eval(&Direction::from_polar(0.4, 0.0)), 1.0);
        assert_eq!(pi.eval(&Direction::from_polar(2.8, 0.0)), 0.0);
        let pi_minus = projector_response(&base, Sign::Minus);
        assert_eq!(pi_minus.eval(&Direction::from_polar(0.4, 0.0)), 0.0);
    }

    #[test]
    fn projected_probability_matches_overlap() {
        // integral of Pi rho_n = cos^2(theta/2) for both models
        let n = Direction::Z;
        for (i, &theta) in [0.5, 1.3, 2.2].iter().enumerate() {
            let a = Direction::from_polar(theta, 0.0);
            let want = (theta / 2.0).cos().powi(2);
            for model in [HvModel::Model1, HvModel::Model2] {
                let base = model.response(&a, &n);
                let pi = projector_response(&base, Sign::Plus);
                let rho = model.density(&n);
                let p =
                    integrate_s2(|l| pi.eval(l) * rho.eval(l), &spec(60 + i as u64)).unwrap();
                assert!(
                    p.within_3_sigma(want),
                    "{} theta={theta}: {} vs {want}",
                    model.name(),
                    p.value
                );
            }
        }
    }

    #[test]
    fn conditional_density_trivial_projector() {
        let n = Direction::Z;
        let rho = model2_density(&n);
        let unit = ResponseFn::new(|_| 1.0, Direction::Z, None);
        let pi = projector_response(&unit, Sign::Plus);
        let cond = conditional_density(&pi, &rho, &spec(7)).unwrap();
        for l in sample_sphere(8, 200) {
            assert_abs_diff_eq!(cond.eval(&l), rho.eval(&l), epsilon = 2e-3);
        }
    }

    #[test]
    fn conditional_density_aligned_setting_is_unchanged() {
        // a = n: the projector is 1 on the density's support
        let n = Direction::from_polar(0.9, -0.4);
        let rho = model2_density(&n);
        let pi = projector_response(&model2_response(&n), Sign::Plus);
        let cond = conditional_density(&pi, &rho, &spec(9)).unwrap();
        for l in sample_sphere(10, 500) {
            let (c, r) = (cond.eval(&l), rho.eval(&l));
            assert!((c - r).abs() <= 2e-3 * r.max(1.0), "{c} vs {r}");
        }
    }

    #[test]
    fn conditional_density_is_normalized() {
        let n = Direction::Z;
        for (i, theta) in [0.6, 1.4, 2.1].into_iter().enumerate() {
            let a = Direction::from_polar(theta, 0.0);
            for model in [HvModel::Model1, HvModel::Model2] {
                let rho = model.density(&n);
                let pi = projector_response(&model.response(&a, &n), Sign::Plus);
                let cond = conditional_density(&pi, &rho, &spec(70 + i as u64)).unwrap();
                let total = integrate_s2(|l| cond.eval(l), &spec(71 + i as u64)).unwrap();
                assert!(
                    total.within_3_sigma(1.0),
                    "{} theta={theta}: conditional mass {}",
                    model.name(),
                    total.value
                );
            }
        }
    }

    #[test]
    fn conditional_density_support_inside_projector() {
        let n = Direction::Z;
        let a = Direction::X;
        let rho = model2_density(&n);
        let pi = projector_response(&model2_response(&a), Sign::Plus);
        let cond = conditional_density(&pi, &rho, &spec(11)).unwrap();
        for l in sample_sphere(12, 2000) {
            if cond.eval(&l) > 0.0 {
                assert_eq!(pi.eval(&l), 1.0);
            }
        }
    }

    #[test]
    fn conditional_density_zero_probability_branch() {
        let n = Direction::Z;
        let rho = model2_density(&n);
        // projector onto the opposite hemisphere misses the support
        let pi = projector_response(&model2_response(&n.neg()), Sign::Plus);
        assert!(matches!(
            conditional_density(&pi, &rho, &spec(13)),
            Err(Error::ZeroProbabilityBranch { .. })
        ));
    }

    #[test]
    fn route_a_aligned_setting() {
        let n = Direction::Z;
        let res = route_a_hv(&HvModel::Model2, &n, &n, 1.0, 0.0, &spec(14)).unwrap();
        assert!(res.within_3_sigma(1.0), "route A = {}", res.value);
    }

    #[test]
    fn route_a_equals_aplus_times_p() {
        let n = Direction::Z;
        let theta = 1.1;
        let a = Direction::from_polar(theta, 0.0);
        let (alpha1, alpha2) = (2.0, 0.5);
        let a_plus = alpha1 + alpha2;
        for model in [HvModel::Model1, HvModel::Model2] {
            let res = route_a_hv(&model, &n, &a, alpha1, alpha2, &spec(15)).unwrap();
            let base = model.response(&a, &n);
            let pi = projector_response(&base, Sign::Plus);
            let rho = model.density(&n);
            let p = integrate_s2(|l| pi.eval(l) * rho.eval(l), &spec(15)).unwrap();
            assert_abs_diff_eq!(res.value, a_plus * p.value, epsilon = 1e-10);
        }
    }

    #[test]
    fn routes_agree_and_match_projected_weight() {
        let n = Direction::Z;
        for k in 1..19 {
            let theta = std::f64::consts::PI * k as f64 / 19.0;
            let a = Direction::from_polar(theta, 0.0);
            let (alpha1, alpha2) = (1.0, 0.0);
            let res_a = route_a_hv(&HvModel::Model2, &n, &a, alpha1, alpha2, &spec(80 + k)).unwrap();
            let base = model2_response(&a);
            let pi = projector_response(&base, Sign::Plus);
            let rho = model2_density(&n);
            let p = integrate_s2(|l| pi.eval(l) * rho.eval(l), &spec(81 + k)).unwrap();
            let res_b =
                route_b_hv(&HvModel::Model2, &a, alpha1, alpha2, p.value, &spec(82 + k)).unwrap();
            let sigma = res_a.std_error + res_b.std_error + 1e-12;
            assert!(
                (res_a.value - res_b.value).abs() <= 3.0 * sigma,
                "theta={theta}: A={} B={}",
                res_a.value,
                res_b.value
            );
        }
    }

    #[test]
    fn route_b_aligned_setting_is_a_plus() {
        let a = Direction::from_polar(0.7, 0.2);
        let res = route_b_hv(&HvModel::Model2, &a, 2.0, 0.5, 1.0, &spec(16)).unwrap();
        assert!(res.within_3_sigma(2.5), "route B = {}", res.value);
    }

    #[test]
    fn shipped_candidate_density_is_uniform() {
        let cand = TpCandidate::shipped();
        let n = Direction::Z;
        let rho = tp_factorized_density(&cand, &n, BellLabel::singlet());
        let u = 1.0 / (4.0 * std::f64::consts::PI);
        let pts = sample_sphere(17, 9);
        let v = rho(&pts[0], &pts[1], &pts[2]);
        assert_abs_diff_eq!(v, u * u * u, epsilon = 1e-15);
        // factorization: value = product of factors at sampled points
        assert_abs_diff_eq!(
            v,
            cand.eval_rho1(&pts[0], &n) * cand.eval_rho23(&pts[1], &pts[2]),
            epsilon = 0.0
        );
    }

    #[test]
    fn shipped_candidate_normalization() {
        let cand = TpCandidate::shipped();
        let n = Direction::Z;
        let rho = tp_factorized_density(&cand, &n, BellLabel::singlet());
        let total =
            integrate_s2_cubed(|a, b, c| rho(a, b, c), &QuadratureSpec::monte_carlo(200_000, 18))
                .unwrap();
        assert!(total.within_3_sigma(1.0));
    }

    #[test]
    fn shipped_candidate_projection_weight_quarter() {
        let cand = TpCandidate::shipped();
        let res = tp_pr_hv(
            &cand,
            &Direction::Z,
            BellLabel::singlet(),
            BellLabel::singlet(),
            &spec(19),
        )
        .unwrap();
        assert!(res.within_3_sigma(0.25), "p = {}", res.value);
    }

    #[test]
    fn constant_projector_responses() {
        let unit = TpCandidate::new(
            "always-pass",
            |_l, _n| 1.0 / (4.0 * std::f64::consts::PI),
            |_a, _b| 1.0 / (16.0 * std::f64::consts::PI * std::f64::consts::PI),
            |_l1, _l2, _label| 1.0,
            |l3, c| sgn_response(l3.dot(c)),
        );
        let res = tp_pr_hv(
            &unit,
            &Direction::Z,
            BellLabel::singlet(),
            BellLabel::singlet(),
            &QuadratureSpec::monte_carlo(100_000, 20),
        )
        .unwrap();
        assert_abs_diff_eq!(res.value, 1.0, epsilon = 1e-9);

        let zero = TpCandidate::new(
            "never-pass",
            |_l, _n| 1.0 / (4.0 * std::f64::consts::PI),
            |_a, _b| 1.0 / (16.0 * std::f64::consts::PI * std::f64::consts::PI),
            |_l1, _l2, _label| 0.0,
            |l3, c| sgn_response(l3.dot(c)),
        );
        let res = tp_pr_hv(
            &zero,
            &Direction::Z,
            BellLabel::singlet(),
            BellLabel::singlet(),
            &QuadratureSpec::monte_carlo(100_000, 21),
        )
        .unwrap();
        assert_eq!(res.value, 0.0);
    }

    #[test]
    fn tp_route_a_constant_response_is_one() {
        let cand = TpCandidate::new(
            "constant-c",
            |_l, _n| 1.0 / (4.0 * std::f64::consts::PI),
            |_a, _b| 1.0 / (16.0 * std::f64::consts::PI * std::f64::consts::PI),
            |l1, l2, _label| {
                let in1 = (1.0 + sgn_response(l1.z)) / 2.0;
                let in2 = (1.0 + sgn_response(l2.z)) / 2.0;
                in1 * in2
            },
            |_l3, _c| 1.0,
        );
        let res = tp_route_a_hv(
            &cand,
            &Direction::Z,
            BellLabel::singlet(),
            BellLabel::singlet(),
            &Direction::X,
            &spec(22),
        )
        .unwrap();
        assert_abs_diff_eq!(res.value, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn tp_route_a_odd_response_averages_to_zero() {
        let cand = TpCandidate::shipped();
        let c = Direction::from_polar(0.8, 0.1);
        let res = tp_route_a_hv(
            &cand,
            &Direction::Z,
            BellLabel::singlet(),
            BellLabel::singlet(),
            &c,
            &spec(23),
        )
        .unwrap();
        assert!(
            res.value.abs() <= 3.0 * res.std_error,
            "expected ~0, got {} +- {}",
            res.value,
            res.std_error
        );
        assert!(res.value.abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn tp_route_a_zero_probability_branch() {
        let cand = TpCandidate::new(
            "never-pass",
            |_l, _n| 1.0 / (4.0 * std::f64::consts::PI),
            |_a, _b| 1.0 / (16.0 * std::f64::consts::PI * std::f64::consts::PI),
            |_l1, _l2, _label| 0.0,
            |l3, c| sgn_response(l3.dot(c)),
        );
        assert!(matches!(
            tp_route_a_hv(
                &cand,
                &Direction::Z,
                BellLabel::singlet(),
                BellLabel::singlet(),
                &Direction::X,
                &QuadratureSpec::monte_carlo(50_000, 24),
            ),
            Err(Error::ZeroProbabilityBranch { .. })
        ));
    }

    #[test]
    fn candidate_validation_catches_bad_ranges() {
        let bad_pi = TpCandidate::new(
            "bad-pi",
            |_l, _n| 1.0,
            |_a, _b| 1.0,
            |_l1, _l2, _label| 0.5,
            |l3, c| sgn_response(l3.dot(c)),
        );
        assert!(bad_pi
            .validate(&Direction::Z, BellLabel::singlet(), 1)
            .is_err());
        let ok = TpCandidate::shipped();
        assert!(ok.validate(&Direction::Z, BellLabel::singlet(), 1).is_ok());
    }

    #[test]
    fn response_range_invariant_under_sampling() {
        let n = Direction::Z;
        let a = Direction::from_polar(1.9, 0.7);
        for model in [HvModel::Model1, HvModel::Model2] {
            let resp = model.response(&a, &n);
            for l in sample_sphere(25, 10_000) {
                let v = resp.eval(&l);
                assert!(v == 1.0 || v == -1.0, "{} returned {v}", model.name());
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn warp_angle_formula(theta in 0.0..std::f64::consts::PI, phi in 0.0..std::f64::consts::TAU) {
            let n = Direction::Z;
            let a = Direction::from_polar(theta, phi);
            let w = warped_axis(&a, &n);
            let want = (std::f64::consts::FRAC_PI_2 * (1.0 - theta.cos())).cos();
            proptest::prop_assert!((w.dot(&n) - want).abs() < 1e-10);
        }
    }
}
