//! Consistency checks between Hilbert-space projection and
//! hidden-variable-space conditioning.
//!
//! Two routes to the same post-selection expectation value induce two
//! hidden-variable densities: the conditional density (original density
//! restricted to the projector's domain and renormalized) and the final
//! density (the model's density for the already-projected state). If the
//! two were the same function, integrating the pointwise identity forces
//! `p = p^2`, which fails for any projection weight strictly between 0
//! and 1. The checks here evaluate that chain step by step, for one
//! spin-1/2 particle and for factorized three-particle teleportation
//! candidates, reporting where a candidate model breaks.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hv::{projector_response, HvModel, TpCandidate};
use crate::quadrature::{integrate_s2, integrate_s2_cubed, sample_sphere, QuadratureSpec};
use crate::spinor::{Direction, Sign};
use crate::teleport::BellLabel;

/// Relative pointwise tolerance for density-identity checks, applied to
/// the natural density scale of the problem. Closed-form evaluators make
/// true equality exact, so anything above rounding noise is a violation.
pub const POINTWISE_REL_TOL: f64 = 1e-9;

/// Absolute floor added to 3-sigma windows so exact zero-variance results
/// compare cleanly.
const ABS_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    Contradiction,
}

/// One named step of the derivation chain, with its measured evidence.
#[derive(Clone, Debug, Serialize)]
pub struct ChainStep {
    pub name: String,
    pub detail: String,
    /// Fraction of sampled points violating the step's pointwise identity,
    /// when the step is pointwise.
    pub violation_fraction: Option<f64>,
    /// Scalar residual, when the step compares two numbers.
    pub residual: Option<f64>,
    /// Whether the step's identity holds for this candidate.
    pub holds: bool,
}

impl ChainStep {
    fn pointwise(name: &str, detail: &str, fraction: f64) -> Self {
        ChainStep {
            name: name.into(),
            detail: detail.into(),
            violation_fraction: Some(fraction),
            residual: None,
            holds: fraction == 0.0,
        }
    }

    fn scalar(name: &str, detail: &str, residual: f64, tol: f64) -> Self {
        ChainStep {
            name: name.into(),
            detail: detail.into(),
            violation_fraction: None,
            residual: Some(residual),
            holds: residual <= tol,
        }
    }
}

/// Outcome of a conditional-vs-final density comparison.
#[derive(Clone, Debug, Serialize)]
pub struct NogoReport {
    /// Projection weight `p` (hidden-variable image of the outcome
    /// probability).
    pub p: f64,
    pub p_std_error: f64,
    pub p_squared: f64,
    /// `|p - p^2|`: the residual of the chain's terminal identity.
    pub contradiction_residual: f64,
    pub residual_std_error: f64,
    /// L1 distance between the conditional and final densities.
    pub density_l1: f64,
    pub density_l1_std_error: f64,
    /// Fraction of sampled points violating the conditional = final
    /// pointwise identity.
    pub pointwise_violation_fraction: f64,
    pub chain: Vec<ChainStep>,
    pub verdict: Verdict,
}

/// Disagreement statistics between responses built from two different
/// states at a fixed setting.
#[derive(Clone, Debug, Serialize)]
pub struct StateDependenceReport {
    pub disagreement_fraction: f64,
    pub sample_count: usize,
}

/// Delta-method error bar for `|p - p^2|` given the error bar of `p`,
/// with a curvature term so it stays positive near p = 1/2.
fn residual_error(p: f64, p_err: f64) -> f64 {
    (1.0 - 2.0 * p).abs() * p_err + p_err * p_err
}

fn verdict_for(p: f64, p_err: f64, residual: f64, res_err: f64) -> Verdict {
    let near_zero = p <= 3.0 * p_err + ABS_FLOOR;
    let near_one = p >= 1.0 - 3.0 * p_err - ABS_FLOOR;
    if !near_zero && !near_one && residual > 3.0 * res_err + ABS_FLOOR {
        Verdict::Contradiction
    } else {
        Verdict::Consistent
    }
}

/// Run the one-spin chain for a model, state axis `n` and setting `a`.
///
/// The projector is the positive-outcome response for setting `a`. The
/// conditional density is `Pi rho_n / p`; the final density is the model
/// density for the projected state `|+>^a`.
pub fn one_spin_nogo(
    model: &HvModel,
    n: &Direction,
    a: &Direction,
    spec: &QuadratureSpec,
) -> Result<NogoReport> {
    let rho_n = model.density(n);
    let pi_a = projector_response(&model.response(a, n), Sign::Plus);
    let p_res = integrate_s2(|l| pi_a.eval(l) * rho_n.eval(l), spec)?;
    let p = p_res.value;
    let p_err = p_res.std_error;

    // p = 0 branch of the theorem: nothing to condition on
    if p <= 3.0 * p_err + ABS_FLOOR {
        return Ok(NogoReport {
            p,
            p_std_error: p_err,
            p_squared: p * p,
            contradiction_residual: (p - p * p).abs(),
            residual_std_error: residual_error(p, p_err),
            density_l1: 0.0,
            density_l1_std_error: 0.0,
            pointwise_violation_fraction: 0.0,
            chain: vec![ChainStep::scalar(
                "trivial_branch",
                "projection weight is zero; conditioning is undefined and the \
                 terminal identity p = p^2 holds",
                (p - p * p).abs(),
                ABS_FLOOR,
            )],
            verdict: Verdict::Consistent,
        });
    }

    let rho_a = model.density(a);
    let scale = 1.0 / (4.0 * std::f64::consts::PI);
    let tol = POINTWISE_REL_TOL * scale;

    // L1 distance between conditional and final density over one shared
    // sample set (common random numbers)
    let l1 = integrate_s2(
        |l| (pi_a.eval(l) * rho_n.eval(l) / p - rho_a.eval(l)).abs(),
        spec,
    )?;

    let samples = sample_sphere(spec.seed, spec.samples_or_order);
    let count = samples.len().max(1) as f64;

    // step 1: Pi(lambda; +, a) rho_n(lambda) = p rho_a(lambda) pointwise
    let violations = samples
        .iter()
        .filter(|l| (pi_a.eval(l) * rho_n.eval(l) - p * rho_a.eval(l)).abs() > tol)
        .count();
    let fraction = violations as f64 / count;

    // step 2: swapping a and n leaves p unchanged (overlap symmetry)
    let pi_n = projector_response(&model.response(n, a), Sign::Plus);
    let p_swapped = integrate_s2(|l| pi_n.eval(l) * rho_a.eval(l), spec)?;
    let swap_residual = (p - p_swapped.value).abs();
    let swap_tol = 3.0 * (p_err + p_swapped.std_error) + ABS_FLOOR;

    // step 3: the projector built on the state axis absorbs the state
    // density: Pi(lambda; +, n) rho_n(lambda) = rho_n(lambda)
    let pi_state = projector_response(&model.response(n, n), Sign::Plus);
    let idem_violations = samples
        .iter()
        .filter(|l| (pi_state.eval(l) * rho_n.eval(l) - rho_n.eval(l)).abs() > tol)
        .count();
    let idem_fraction = idem_violations as f64 / count;

    // terminal step: p = p^2
    let residual = (p - p * p).abs();
    let res_err = residual_error(p, p_err);

    let chain = vec![
        ChainStep::pointwise(
            "cond_eq_final",
            "Pi(lambda; +, a) rho_n(lambda) = p rho_a(lambda) for all lambda",
            fraction,
        ),
        ChainStep::scalar(
            "interchange",
            "projection weight is symmetric under a <-> n",
            swap_residual,
            swap_tol,
        ),
        ChainStep::pointwise(
            "idempotence",
            "Pi(lambda; +, n) rho_n(lambda) = rho_n(lambda) for all lambda",
            idem_fraction,
        ),
        ChainStep::scalar(
            "p_eq_p_squared",
            "integrating the chain forces p = p^2",
            residual,
            3.0 * res_err + ABS_FLOOR,
        ),
    ];

    Ok(NogoReport {
        p,
        p_std_error: p_err,
        p_squared: p * p,
        contradiction_residual: residual,
        residual_std_error: res_err,
        density_l1: l1.value,
        density_l1_std_error: l1.std_error,
        pointwise_violation_fraction: fraction,
        chain,
        verdict: verdict_for(p, p_err, residual, res_err),
    })
}

/// Maximum sampled deviation of a two-point density from interchange
/// symmetry.
pub fn symmetry_check<F>(rho23: F, spec: &QuadratureSpec) -> f64
where
    F: Fn(&Direction, &Direction) -> f64,
{
    let pairs = spec.samples_or_order.clamp(1, 20_000);
    let pts = sample_sphere(spec.seed, 2 * pairs);
    let mut max_dev: f64 = 0.0;
    for pair in pts.chunks(2) {
        let (a, b) = (&pair[0], &pair[1]);
        max_dev = max_dev.max((rho23(a, b) - rho23(b, a)).abs());
    }
    max_dev
}

/// Run the three-particle chain for a teleportation candidate at
/// `label = label0`, the case the derivation uses.
pub fn tp_nogo(
    cand: &TpCandidate,
    n: &Direction,
    label0: BellLabel,
    spec: &QuadratureSpec,
) -> Result<NogoReport> {
    cand.validate(n, label0, spec.seed)?;
    let sym = symmetry_check(|a, b| cand.eval_rho23(a, b), spec);
    if sym > ABS_FLOOR {
        return Err(Error::AsymmetricDensity { max_violation: sym });
    }
    let rho = crate::hv::tp_factorized_density(cand, n, label0);
    let mass = integrate_s2_cubed(|l1, l2, l3| rho(l1, l2, l3), spec)?;
    if (mass.value - 1.0).abs() > 3.0 * mass.std_error + 0.02 {
        return Err(Error::UnnormalizedDensity { mass: mass.value });
    }

    let p_res = crate::hv::tp_pr_hv(cand, n, label0, label0, spec)?;
    let p = p_res.value;
    let p_err = p_res.std_error;

    if p <= 3.0 * p_err + ABS_FLOOR {
        return Ok(NogoReport {
            p,
            p_std_error: p_err,
            p_squared: p * p,
            contradiction_residual: (p - p * p).abs(),
            residual_std_error: residual_error(p, p_err),
            density_l1: 0.0,
            density_l1_std_error: 0.0,
            pointwise_violation_fraction: 0.0,
            chain: vec![ChainStep::scalar(
                "trivial_branch",
                "projection weight is zero; conditioning is undefined and the \
                 terminal identity p = p^2 holds",
                (p - p * p).abs(),
                ABS_FLOOR,
            )],
            verdict: Verdict::Consistent,
        });
    }

    let scale = (4.0 * std::f64::consts::PI).powi(-3);
    let tol = POINTWISE_REL_TOL * scale;

    // L1 distance between the conditional three-point density and the
    // final density rho23(l1, l2) rho1(l3)
    let l1_res = integrate_s2_cubed(
        |l1, l2, l3| {
            let cond =
                cand.eval_pi(l1, l2, label0) * cand.eval_rho1(l1, n) * cand.eval_rho23(l2, l3) / p;
            let fin = cand.eval_rho23(l1, l2) * cand.eval_rho1(l3, n);
            (cond - fin).abs()
        },
        spec,
    )?;

    // pointwise chain over sampled triples
    let pts = sample_sphere(spec.seed, 3 * spec.samples_or_order.max(1));
    let mut n_triples = 0u64;
    let mut viol = [0u64; 5]; // main, interchanged, squared, idempotence, reduced
    for triple in pts.chunks(3) {
        if triple.len() < 3 {
            break;
        }
        let (l1, l2, l3) = (&triple[0], &triple[1], &triple[2]);
        n_triples += 1;

        let pi_12 = cand.eval_pi(l1, l2, label0);
        let pi_23 = cand.eval_pi(l2, l3, label0);
        let rho1_1 = cand.eval_rho1(l1, n);
        let rho1_3 = cand.eval_rho1(l3, n);
        let rho23_23 = cand.eval_rho23(l2, l3);
        let rho23_12 = cand.eval_rho23(l1, l2);

        // conditional = final, written with the common factor p
        if (pi_12 * rho1_1 * rho23_23 - p * rho23_12 * rho1_3).abs() > tol {
            viol[0] += 1;
        }
        // the same identity with lambda1 <-> lambda3 interchanged
        let lhs1 = pi_23 * rho1_3 * rho23_12;
        if (lhs1 - p * rho23_23 * rho1_1).abs() > tol {
            viol[1] += 1;
        }
        // substitution step: Pi(2,3) Pi(1,2) rho1(1) rho23(2,3) = p^2 ...
        if (pi_23 * pi_12 * rho1_1 * rho23_23 - p * p * rho1_1 * rho23_23).abs() > tol {
            viol[2] += 1;
        }
        // idempotence: multiplying the interchanged left side by Pi(2,3)
        // reproduces it exactly
        if (pi_23 * lhs1 - lhs1).abs() > 0.0 {
            viol[3] += 1;
        }
        // reduced identity: Pi(1,2) rho1(1) rho23(2,3) = p^2 ...
        if (pi_12 * rho1_1 * rho23_23 - p * p * rho1_1 * rho23_23).abs() > tol {
            viol[4] += 1;
        }
    }
    let frac = |k: usize| viol[k] as f64 / n_triples.max(1) as f64;

    let residual = (p - p * p).abs();
    let res_err = residual_error(p, p_err);

    let chain = vec![
        ChainStep::pointwise(
            "c_eq_f",
            "Pi(l1,l2) rho1(l1) rho23(l2,l3) = p rho23(l1,l2) rho1(l3) for all triples",
            frac(0),
        ),
        ChainStep::pointwise(
            "c_eq_f_interchanged",
            "the same identity after interchanging l1 and l3",
            frac(1),
        ),
        ChainStep::pointwise(
            "c_eq_f_squared",
            "substituting one identity into the other: Pi(l2,l3) Pi(l1,l2) rho1(l1) \
             rho23(l2,l3) = p^2 rho1(l1) rho23(l2,l3)",
            frac(2),
        ),
        ChainStep::pointwise(
            "idempotence",
            "multiplying the interchanged left side by Pi(l2,l3) reproduces it",
            frac(3),
        ),
        ChainStep::pointwise(
            "c_eq_f_reduced",
            "after absorbing the idempotent projector: Pi(l1,l2) rho1(l1) rho23(l2,l3) \
             = p^2 rho1(l1) rho23(l2,l3)",
            frac(4),
        ),
        ChainStep::scalar(
            "p_eq_p_squared",
            "integrating the reduced identity forces p = p^2",
            residual,
            3.0 * res_err + ABS_FLOOR,
        ),
    ];

    Ok(NogoReport {
        p,
        p_std_error: p_err,
        p_squared: p * p,
        contradiction_residual: residual,
        residual_std_error: res_err,
        density_l1: l1_res.value,
        density_l1_std_error: l1_res.std_error,
        pointwise_violation_fraction: frac(0),
        chain,
        verdict: verdict_for(p, p_err, residual, res_err),
    })
}

/// Sample the sphere and count where the responses built from two
/// different states disagree at a fixed setting.
pub fn response_state_dependence(
    model: &HvModel,
    a: &Direction,
    n1: &Direction,
    n2: &Direction,
    spec: &QuadratureSpec,
) -> StateDependenceReport {
    let r1 = model.response(a, n1);
    let r2 = model.response(a, n2);
    let pts = sample_sphere(spec.seed, spec.samples_or_order);
    let disagreements = pts.iter().filter(|l| r1.eval(l) != r2.eval(l)).count();
    StateDependenceReport {
        disagreement_fraction: disagreements as f64 / pts.len().max(1) as f64,
        sample_count: pts.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hv::warped_axis;
    use approx::assert_abs_diff_eq;

    fn spec(seed: u64) -> QuadratureSpec {
        QuadratureSpec::monte_carlo(1_000_000, seed)
    }

    #[test]
    fn one_spin_model2_right_angle() {
        let report = one_spin_nogo(
            &HvModel::Model2,
            &Direction::Z,
            &Direction::X,
            &spec(101),
        )
        .unwrap();
        assert!(
            (report.p - 0.5).abs() <= 3.0 * report.p_std_error,
            "p = {}",
            report.p
        );
        assert!((report.contradiction_residual - 0.25).abs() <= 0.01);
        assert!(report.density_l1 > 0.4, "L1 = {}", report.density_l1);
        assert_eq!(report.verdict, Verdict::Contradiction);
        // at right angle roughly half the sphere separates the densities
        assert!(report.pointwise_violation_fraction > 0.4);
    }

    #[test]
    fn one_spin_aligned_setting_is_consistent() {
        let n = Direction::from_polar(0.6, 1.0);
        let report = one_spin_nogo(&HvModel::Model2, &n, &n, &spec(102)).unwrap();
        assert!(report.p >= 1.0 - 3.0 * report.p_std_error - 1e-12);
        assert!(report.contradiction_residual <= 0.002);
        assert_eq!(report.verdict, Verdict::Consistent);
    }

    #[test]
    fn one_spin_antipodal_setting_is_trivially_consistent() {
        let n = Direction::Z;
        let report = one_spin_nogo(&HvModel::Model2, &n, &n.neg(), &spec(103)).unwrap();
        assert_eq!(report.p, 0.0);
        assert_eq!(report.verdict, Verdict::Consistent);
        assert_eq!(report.chain[0].name, "trivial_branch");
    }

    #[test]
    fn one_spin_residual_curve_matches_p_one_minus_p() {
        for (k, theta) in [0.5, 1.2, 1.9, 2.6].into_iter().enumerate() {
            let a = Direction::from_polar(theta, 0.0);
            let report =
                one_spin_nogo(&HvModel::Model2, &Direction::Z, &a, &spec(110 + k as u64)).unwrap();
            let p = report.p;
            assert!(
                (report.contradiction_residual - p * (1.0 - p)).abs() < 1e-12,
                "residual identity"
            );
            let want = (theta / 2.0).cos().powi(2);
            assert!(
                (p - want).abs() <= 3.0 * report.p_std_error + 1e-12,
                "p = {p} vs cos^2(theta/2) = {want}"
            );
            assert_eq!(report.verdict, Verdict::Contradiction);
        }
    }

    #[test]
    fn one_spin_interchange_step_holds() {
        let a = Direction::from_polar(1.1, 0.4);
        for model in [HvModel::Model1, HvModel::Model2] {
            let report = one_spin_nogo(&model, &Direction::Z, &a, &spec(120)).unwrap();
            let step = report
                .chain
                .iter()
                .find(|s| s.name == "interchange")
                .unwrap();
            assert!(step.holds, "{}: interchange residual {:?}", model.name(), step.residual);
            let idem = report
                .chain
                .iter()
                .find(|s| s.name == "idempotence")
                .unwrap();
            assert!(idem.holds);
        }
    }

    #[test]
    fn one_spin_model1_also_contradicts() {
        let report = one_spin_nogo(
            &HvModel::Model1,
            &Direction::Z,
            &Direction::from_polar(1.3, 0.0),
            &spec(104),
        )
        .unwrap();
        assert_eq!(report.verdict, Verdict::Contradiction);
        assert!(report.density_l1 > 0.0);
    }

    #[test]
    fn tp_shipped_candidate_full_pattern() {
        let cand = TpCandidate::shipped();
        let report = tp_nogo(
            &cand,
            &Direction::Z,
            BellLabel::singlet(),
            &QuadratureSpec::monte_carlo(100_000, 105),
        )
        .unwrap();
        assert!((report.p - 0.25).abs() <= 3.0 * report.p_std_error);
        assert!((report.contradiction_residual - 3.0 / 16.0).abs() < 0.01);
        assert_eq!(report.pointwise_violation_fraction, 1.0);
        assert_eq!(report.verdict, Verdict::Contradiction);
        for step in &report.chain {
            match step.name.as_str() {
                "idempotence" => assert!(step.holds),
                "p_eq_p_squared" => assert!(!step.holds),
                _ => {
                    assert_eq!(
                        step.violation_fraction,
                        Some(1.0),
                        "step {} expected full violation",
                        step.name
                    );
                }
            }
        }
        // conditional piles 4x the weight on a quarter of the space while
        // the final density stays uniform: L1 = 3/4 + 3/4
        assert!((report.density_l1 - 1.5).abs() <= 3.0 * report.density_l1_std_error + 0.01);
    }

    #[test]
    fn tp_trivial_projector_is_consistent() {
        let unit = TpCandidate::new(
            "always-pass",
            |_l, _n| 1.0 / (4.0 * std::f64::consts::PI),
            |_a, _b| 1.0 / (16.0 * std::f64::consts::PI * std::f64::consts::PI),
            |_l1, _l2, _label| 1.0,
            |l3, c| crate::hv::sgn_response(l3.dot(c)),
        );
        let report = tp_nogo(
            &unit,
            &Direction::Z,
            BellLabel::singlet(),
            &QuadratureSpec::monte_carlo(100_000, 106),
        )
        .unwrap();
        assert!((report.p - 1.0).abs() < 1e-9);
        assert!(report.contradiction_residual < 1e-9);
        assert_eq!(report.verdict, Verdict::Consistent);
        for step in &report.chain {
            assert!(step.holds, "step {} should hold", step.name);
        }
    }

    #[test]
    fn tp_rejects_unnormalized_density() {
        let heavy = TpCandidate::new(
            "double-mass",
            |_l, _n| 1.0 / (2.0 * std::f64::consts::PI),
            |_a, _b| 1.0 / (16.0 * std::f64::consts::PI * std::f64::consts::PI),
            |_l1, _l2, _label| 1.0,
            |l3, c| crate::hv::sgn_response(l3.dot(c)),
        );
        assert!(matches!(
            tp_nogo(
                &heavy,
                &Direction::Z,
                BellLabel::singlet(),
                &QuadratureSpec::monte_carlo(20_000, 113),
            ),
            Err(Error::UnnormalizedDensity { .. })
        ));
    }

    #[test]
    fn tp_rejects_asymmetric_pair_density() {
        let skew = TpCandidate::new(
            "skew",
            |_l, _n| 1.0 / (4.0 * std::f64::consts::PI),
            |a, _b| (1.0 + a.z) / (16.0 * std::f64::consts::PI * std::f64::consts::PI),
            |_l1, _l2, _label| 1.0,
            |l3, c| crate::hv::sgn_response(l3.dot(c)),
        );
        assert!(matches!(
            tp_nogo(
                &skew,
                &Direction::Z,
                BellLabel::singlet(),
                &QuadratureSpec::monte_carlo(10_000, 107),
            ),
            Err(Error::AsymmetricDensity { .. })
        ));
    }

    #[test]
    fn symmetry_check_values() {
        let spec = QuadratureSpec::monte_carlo(5_000, 108);
        let uniform = |_: &Direction, _: &Direction| 1.0;
        assert_eq!(symmetry_check(uniform, &spec), 0.0);
        let skew = |a: &Direction, _: &Direction| (1.0 + a.z) / (16.0 * std::f64::consts::PI.powi(2));
        assert!(symmetry_check(skew, &spec) > 0.0);
        let symmetrized = move |a: &Direction, b: &Direction| (skew(a, b) + skew(b, a)) / 2.0;
        assert_eq!(symmetry_check(symmetrized, &spec), 0.0);
    }

    #[test]
    fn state_dependence_model2_is_zero() {
        let report = response_state_dependence(
            &HvModel::Model2,
            &Direction::X,
            &Direction::Z,
            &Direction::X,
            &spec(109),
        );
        assert_eq!(report.disagreement_fraction, 0.0);
        assert_eq!(report.sample_count, 1_000_000);
    }

    #[test]
    fn state_dependence_same_state_is_zero() {
        let report = response_state_dependence(
            &HvModel::Model1,
            &Direction::X,
            &Direction::Z,
            &Direction::Z,
            &QuadratureSpec::monte_carlo(50_000, 110),
        );
        assert_eq!(report.disagreement_fraction, 0.0);
    }

    #[test]
    fn state_dependence_matches_lune_fraction() {
        // fraction of the sphere where sgn(l . w1) and sgn(l . w2) differ
        // is angle(w1, w2)/pi; verify the detector against that oracle
        let a = Direction::from_polar(std::f64::consts::FRAC_PI_3, 0.0);
        let n1 = Direction::Z;
        let n2 = a;
        let w1 = warped_axis(&a, &n1);
        let w2 = warped_axis(&a, &n2);
        let angle = w1.dot(&w2).clamp(-1.0, 1.0).acos();
        let want = angle / std::f64::consts::PI;
        assert_abs_diff_eq!(want, 1.0 / 12.0, epsilon = 1e-12);
        let report =
            response_state_dependence(&HvModel::Model1, &a, &n1, &n2, &spec(111));
        let sigma = (want * (1.0 - want) / report.sample_count as f64).sqrt();
        assert!(
            (report.disagreement_fraction - want).abs() <= 3.0 * sigma,
            "fraction {} vs {want}",
            report.disagreement_fraction
        );
    }

    #[test]
    fn state_dependence_right_angle_setting_coincides() {
        // at theta = pi/2 the warp angle is pi/2, so the warped axis is the
        // setting itself and the two responses coincide
        let report = response_state_dependence(
            &HvModel::Model1,
            &Direction::X,
            &Direction::Z,
            &Direction::X,
            &spec(112),
        );
        assert_eq!(report.disagreement_fraction, 0.0);
    }
}
