//! Implementations of the five subcommands.

use serde::Serialize;

use teleport_hv_core::hv::{HvModel, TpCandidate};
use teleport_hv_core::model_file::load_candidate_file;
use teleport_hv_core::nogo::{
    one_spin_nogo, response_state_dependence, tp_nogo, NogoReport, StateDependenceReport, Verdict,
};
use teleport_hv_core::quadrature::{integrate_s2, sample_sphere, QuadratureSpec};
use teleport_hv_core::spinor::Direction;
use teleport_hv_core::teleport::{
    correction_rotation, expansion_check, initial_state, protocol_run, route_a_expectation,
    route_b_expectation, BellLabel, Rotation3,
};

use crate::args::{
    resolve_seed, Angles, HvExpectArgs, ModelArg, OneSpinArgs, OutputFormat, SchemeArg,
    StateDepArgs, Sweep, TeleportVerifyArgs, TpArgs, MIN_SAMPLES,
};
use crate::report::{emit, emit_json, Envelope, QuadMeta};

pub const EXIT_OK: i32 = 0;
pub const EXIT_TOLERANCE: i32 = 2;
pub const EXIT_VERDICT: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

/// Command failures carrying their exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("i/o error: {e}"))
    }
}

impl From<teleport_hv_core::Error> for CliError {
    fn from(e: teleport_hv_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type CmdResult = Result<i32, CliError>;

fn check_samples(samples: usize) -> Result<(), CliError> {
    if samples < MIN_SAMPLES {
        return Err(CliError::Usage(format!(
            "--samples must be at least {MIN_SAMPLES} for Monte Carlo commands, got {samples}"
        )));
    }
    Ok(())
}

fn z_score(delta: f64, sigma: f64) -> f64 {
    delta / sigma.max(1e-12)
}

// ---------------------------------------------------------------------------
// teleport verify

#[derive(Serialize)]
struct TeleportVerifyConfig {
    n: Option<Angles>,
    label0: Option<BellLabel>,
    tol: f64,
    trials: usize,
    seed: u64,
    route_trials: usize,
}

#[derive(Serialize)]
struct PairSummary {
    label0: BellLabel,
    label: BellLabel,
    max_prob_deviation: f64,
    max_coeff_deviation: f64,
    max_correction_deviation: f64,
    min_fidelity_after_correction: f64,
    max_route_deviation: f64,
}

#[derive(Serialize)]
struct RotationRow {
    label0: BellLabel,
    label: BellLabel,
    rotation: Rotation3,
    phase_at_reference_axis: f64,
}

#[derive(Serialize)]
struct TeleportVerifyPayload {
    pairs: Vec<PairSummary>,
    rotation_table: Vec<RotationRow>,
    max_prob_deviation: f64,
    max_correction_deviation: f64,
    max_route_deviation: f64,
    min_fidelity_after_correction: f64,
    tolerance: f64,
    pass: bool,
}

pub fn teleport_verify(args: TeleportVerifyArgs) -> CmdResult {
    let seed = resolve_seed(args.seed);
    if args.trials == 0 {
        return Err(CliError::Usage("--trials must be positive".into()));
    }
    let labels0: Vec<BellLabel> = match args.label0 {
        Some(l) => vec![l],
        None => BellLabel::ALL.to_vec(),
    };
    let axes: Vec<Direction> = match args.n {
        Some(angles) => vec![angles.direction()],
        None => sample_sphere(seed, args.trials),
    };
    let route_trials = 50.min(args.trials.max(1));
    let route_dirs = sample_sphere(seed.wrapping_add(1), 2 * route_trials);

    let mut pairs = Vec::new();
    let mut rotation_table = Vec::new();
    for &label0 in &labels0 {
        for label in BellLabel::ALL {
            let entry = correction_rotation(label0, label);
            rotation_table.push(RotationRow {
                label0,
                label,
                rotation: entry.rotation,
                phase_at_reference_axis: entry.phase,
            });

            let mut max_prob_dev: f64 = 0.0;
            let mut max_coeff_dev: f64 = 0.0;
            let mut max_corr_dev: f64 = 0.0;
            let mut min_fidelity: f64 = 1.0;
            for n in &axes {
                let outcomes = protocol_run(n, label0)?;
                let outcome = outcomes
                    .iter()
                    .find(|o| o.label == label)
                    .expect("all four labels present");
                max_prob_dev = max_prob_dev.max((outcome.prob - 0.25).abs());
                min_fidelity = min_fidelity.min(outcome.fidelity_after_correction);

                let records = expansion_check(&initial_state(n, label0), label0, n)?;
                let record = records
                    .iter()
                    .find(|r| r.label == label)
                    .expect("all four labels present");
                max_coeff_dev = max_coeff_dev.max((record.coeff_abs - 0.5).abs());
                max_corr_dev = max_corr_dev.max(record.correction_deviation);
            }

            let mut max_route_dev: f64 = 0.0;
            for pair in route_dirs.chunks(2) {
                let (n, c) = (&pair[0], &pair[1]);
                let a = route_a_expectation(n, label0, label, c)?;
                let b = route_b_expectation(n, label0, label, c);
                max_route_dev = max_route_dev.max((a - b).abs());
            }

            pairs.push(PairSummary {
                label0,
                label,
                max_prob_deviation: max_prob_dev,
                max_coeff_deviation: max_coeff_dev,
                max_correction_deviation: max_corr_dev,
                min_fidelity_after_correction: min_fidelity,
                max_route_deviation: max_route_dev,
            });
        }
    }

    let max_prob_deviation = pairs.iter().map(|p| p.max_prob_deviation).fold(0.0, f64::max);
    let max_correction_deviation = pairs
        .iter()
        .map(|p| p.max_correction_deviation.max(p.max_coeff_deviation))
        .fold(0.0, f64::max);
    let max_route_deviation = pairs.iter().map(|p| p.max_route_deviation).fold(0.0, f64::max);
    let min_fidelity_after_correction = pairs
        .iter()
        .map(|p| p.min_fidelity_after_correction)
        .fold(1.0, f64::min);
    let pass = max_prob_deviation <= args.tol
        && max_correction_deviation <= args.tol
        && max_route_deviation <= args.tol
        && (1.0 - min_fidelity_after_correction) <= args.tol;

    let payload = TeleportVerifyPayload {
        pairs,
        rotation_table,
        max_prob_deviation,
        max_correction_deviation,
        max_route_deviation,
        min_fidelity_after_correction,
        tolerance: args.tol,
        pass,
    };
    let config = TeleportVerifyConfig {
        n: args.n,
        label0: args.label0,
        tol: args.tol,
        trials: args.trials,
        seed,
        route_trials,
    };
    let envelope = Envelope::new(
        "teleport-verify",
        config,
        QuadMeta::exact(args.trials, seed),
        payload,
    );
    emit_json(args.out.as_deref(), &envelope)?;
    eprintln!(
        "teleport verify: {} (max deviation {:.3e})",
        if envelope.results.pass { "pass" } else { "FAIL" },
        envelope
            .results
            .max_prob_deviation
            .max(envelope.results.max_correction_deviation)
            .max(envelope.results.max_route_deviation)
    );
    Ok(if envelope.results.pass {
        EXIT_OK
    } else {
        EXIT_TOLERANCE
    })
}

// ---------------------------------------------------------------------------
// hv expect

#[derive(Serialize)]
struct HvExpectConfig {
    model: ModelArg,
    sweep: Sweep,
    samples: usize,
    order: usize,
    seed: u64,
    scheme: SchemeArg,
    partitions: u32,
    format: OutputFormat,
}

#[derive(Serialize)]
struct SweepRow {
    theta: f64,
    hv_value: f64,
    std_error: f64,
    qm_value: f64,
    z_score: f64,
}

#[derive(Serialize)]
struct HvExpectPayload {
    rows: Vec<SweepRow>,
    max_abs_z: f64,
    pass: bool,
}

/// Model ensemble average at angle theta between state axis (+z) and
/// setting. For the product rule the error is estimated from the
/// difference against the half-order result.
fn sweep_value(
    model: &HvModel,
    theta: f64,
    scheme: SchemeArg,
    samples: usize,
    order: usize,
    seed: u64,
    partitions: u32,
) -> Result<(f64, f64, u64), CliError> {
    let n = Direction::Z;
    let a = Direction::from_polar(theta, 0.0);
    let resp = model.response(&a, &n);
    let rho = model.density(&n);
    let f = |l: &Direction| resp.eval(l) * rho.eval(l);
    match scheme {
        SchemeArg::MonteCarlo => {
            let spec = QuadratureSpec::monte_carlo(samples, seed).with_partitions(partitions);
            let res = integrate_s2(f, &spec)?;
            Ok((res.value, res.std_error, res.evaluations))
        }
        SchemeArg::ProductRule => {
            let spec = QuadratureSpec::product_rule(order).aligned(n);
            let res = integrate_s2(f, &spec)?;
            let half = QuadratureSpec::product_rule((order / 2).max(1)).aligned(n);
            let coarse = integrate_s2(f, &half)?;
            Ok((
                res.value,
                (res.value - coarse.value).abs(),
                res.evaluations + coarse.evaluations,
            ))
        }
    }
}

pub fn hv_expect(args: HvExpectArgs) -> CmdResult {
    let seed = resolve_seed(args.seed);
    if args.scheme == SchemeArg::MonteCarlo {
        check_samples(args.samples)?;
    }
    let order = args.order;
    let model = args.model.model();

    let mut rows = Vec::new();
    for (k, theta) in args.sweep.thetas().into_iter().enumerate() {
        let (hv_value, std_error, _) = sweep_value(
            &model,
            theta,
            args.scheme,
            args.samples,
            order,
            seed.wrapping_add(k as u64),
            args.partitions,
        )?;
        let qm_value = theta.cos();
        rows.push(SweepRow {
            theta,
            hv_value,
            std_error,
            qm_value,
            z_score: z_score(hv_value - qm_value, std_error),
        });
    }
    let max_abs_z = rows.iter().map(|r| r.z_score.abs()).fold(0.0, f64::max);
    let pass = max_abs_z <= 3.0;

    let config = HvExpectConfig {
        model: args.model,
        sweep: args.sweep,
        samples: args.samples,
        order,
        seed,
        scheme: args.scheme,
        partitions: args.partitions,
        format: args.format,
    };

    match args.format {
        OutputFormat::Json => {
            let quad = match args.scheme {
                SchemeArg::MonteCarlo => QuadMeta::monte_carlo(args.samples, seed, args.partitions),
                SchemeArg::ProductRule => QuadMeta::product_rule(order),
            };
            let envelope = Envelope::new(
                "hv-expect",
                config,
                quad,
                HvExpectPayload {
                    rows,
                    max_abs_z,
                    pass,
                },
            );
            emit_json(args.out.as_deref(), &envelope)?;
        }
        OutputFormat::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            writer
                .write_record(["theta", "hv_value", "std_error", "qm_value", "z_score"])
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            for row in &rows {
                writer
                    .write_record([
                        row.theta.to_string(),
                        row.hv_value.to_string(),
                        row.std_error.to_string(),
                        row.qm_value.to_string(),
                        row.z_score.to_string(),
                    ])
                    .map_err(|e| CliError::Runtime(e.to_string()))?;
            }
            let bytes = writer
                .into_inner()
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            let text = String::from_utf8(bytes).expect("csv is utf-8");
            emit(args.out.as_deref(), text.trim_end())?;
        }
    }
    eprintln!(
        "hv expect {}: {} (max |z| = {max_abs_z:.2})",
        model.name(),
        if pass { "pass" } else { "FAIL" }
    );
    Ok(if pass { EXIT_OK } else { EXIT_TOLERANCE })
}

// ---------------------------------------------------------------------------
// nogo one-spin

#[derive(Serialize)]
struct OneSpinConfig {
    model: ModelArg,
    n: Angles,
    a: Angles,
    samples: usize,
    seed: u64,
    partitions: u32,
}

fn verdict_exit(
    verdict: Verdict,
    expect_consistent: bool,
    expect_contradiction: bool,
) -> i32 {
    if expect_consistent && verdict != Verdict::Consistent {
        return EXIT_VERDICT;
    }
    if expect_contradiction && verdict != Verdict::Contradiction {
        return EXIT_VERDICT;
    }
    EXIT_OK
}

fn print_nogo_summary(kind: &str, report: &NogoReport) {
    eprintln!(
        "nogo {kind}: verdict {:?}, p = {:.6} +- {:.1e}, |p - p^2| = {:.6}, density L1 = {:.4}",
        report.verdict, report.p, report.p_std_error, report.contradiction_residual,
        report.density_l1
    );
    for step in &report.chain {
        eprintln!(
            "  step {:<22} {}",
            step.name,
            if step.holds { "holds" } else { "violated" }
        );
    }
}

pub fn nogo_one_spin(args: OneSpinArgs) -> CmdResult {
    check_samples(args.samples)?;
    let seed = resolve_seed(args.seed);
    let spec = QuadratureSpec::monte_carlo(args.samples, seed).with_partitions(args.partitions);
    let report = one_spin_nogo(
        &args.model.model(),
        &args.n.direction(),
        &args.a.direction(),
        &spec,
    )?;
    print_nogo_summary("one-spin", &report);
    let exit = verdict_exit(
        report.verdict,
        args.expect_consistent,
        args.expect_contradiction,
    );
    let config = OneSpinConfig {
        model: args.model,
        n: args.n,
        a: args.a,
        samples: args.samples,
        seed,
        partitions: args.partitions,
    };
    let envelope = Envelope::new(
        "nogo-one-spin",
        config,
        QuadMeta::monte_carlo(args.samples, seed, args.partitions),
        report,
    );
    emit_json(args.out.as_deref(), &envelope)?;
    Ok(exit)
}

// ---------------------------------------------------------------------------
// nogo tp

#[derive(Serialize)]
struct TpConfig {
    candidate: String,
    candidate_file: Option<String>,
    label0: BellLabel,
    label: Option<BellLabel>,
    n: Angles,
    c: Angles,
    samples: usize,
    seed: u64,
    partitions: u32,
}

#[derive(Serialize)]
struct TpExperimentalPayload {
    label0: BellLabel,
    label: BellLabel,
    projection_weight: f64,
    projection_weight_std_error: f64,
    expectation: f64,
    expectation_std_error: f64,
    note: &'static str,
}

fn load_candidate(args: &TpArgs) -> Result<TpCandidate, CliError> {
    match &args.candidate {
        Some(path) => load_candidate_file(path).map_err(|e| CliError::Usage(e.to_string())),
        None => Ok(TpCandidate::shipped()),
    }
}

pub fn nogo_tp(args: TpArgs) -> CmdResult {
    check_samples(args.samples)?;
    let seed = resolve_seed(args.seed);
    let candidate = load_candidate(&args)?;
    let spec = QuadratureSpec::monte_carlo(args.samples, seed).with_partitions(args.partitions);
    let config = TpConfig {
        candidate: candidate.name.clone(),
        candidate_file: args
            .candidate
            .as_ref()
            .map(|p| p.display().to_string()),
        label0: args.label0,
        label: args.label,
        n: args.n,
        c: args.c,
        samples: args.samples,
        seed,
        partitions: args.partitions,
    };
    let quad = QuadMeta::monte_carlo(args.samples, seed, args.partitions);

    // experimental path: a measured label different from label0 has no
    // verdict attached, only the modelled numbers
    if let Some(label) = args.label {
        if label != args.label0 {
            if args.expect_consistent || args.expect_contradiction {
                return Err(CliError::Usage(
                    "--expect-* cannot be combined with an experimental --label differing \
                     from --label0: no verdict is produced"
                        .into(),
                ));
            }
            let n = args.n.direction();
            let pr = teleport_hv_core::hv::tp_pr_hv(&candidate, &n, args.label0, label, &spec)
                .map_err(usage_if_candidate_defect)?;
            let c = args.c.direction();
            let exp =
                teleport_hv_core::hv::tp_route_a_hv(&candidate, &n, args.label0, label, &c, &spec)
                    .map_err(usage_if_candidate_defect)?;
            let payload = TpExperimentalPayload {
                label0: args.label0,
                label,
                projection_weight: pr.value,
                projection_weight_std_error: pr.std_error,
                expectation: exp.value,
                expectation_std_error: exp.std_error,
                note: "measured label differs from the initial label; the consistency \
                       chain applies to the diagonal case only, so no verdict is reported",
            };
            let envelope = Envelope::new("nogo-tp-experimental", config, quad, payload);
            emit_json(args.out.as_deref(), &envelope)?;
            eprintln!(
                "nogo tp (experimental label): Pr = {:.6}, <C> = {:.6}",
                envelope.results.projection_weight, envelope.results.expectation
            );
            return Ok(EXIT_OK);
        }
    }

    let report = tp_nogo(&candidate, &args.n.direction(), args.label0, &spec)
        .map_err(usage_if_candidate_defect)?;
    print_nogo_summary("tp", &report);
    let exit = verdict_exit(
        report.verdict,
        args.expect_consistent,
        args.expect_contradiction,
    );
    let envelope = Envelope::new("nogo-tp", config, quad, report);
    emit_json(args.out.as_deref(), &envelope)?;
    Ok(exit)
}

/// Candidate-model defects (bad ranges, asymmetric pair density) are input
/// errors; everything else is a runtime failure.
fn usage_if_candidate_defect(e: teleport_hv_core::Error) -> CliError {
    use teleport_hv_core::Error as E;
    match e {
        E::AsymmetricDensity { .. }
        | E::UnnormalizedDensity { .. }
        | E::ResponseRange { .. }
        | E::ZeroProbabilityBranch { .. } => CliError::Usage(e.to_string()),
        other => CliError::Runtime(other.to_string()),
    }
}

// ---------------------------------------------------------------------------
// state-dep

#[derive(Serialize)]
struct StateDepConfig {
    model: ModelArg,
    a: Angles,
    n1: Angles,
    n2: Angles,
    samples: usize,
    seed: u64,
}

pub fn state_dep(args: StateDepArgs) -> CmdResult {
    check_samples(args.samples)?;
    let seed = resolve_seed(args.seed);
    let spec = QuadratureSpec::monte_carlo(args.samples, seed);
    let report: StateDependenceReport = response_state_dependence(
        &args.model.model(),
        &args.a.direction(),
        &args.n1.direction(),
        &args.n2.direction(),
        &spec,
    );
    eprintln!(
        "state-dep {}: disagreement fraction {:.6} over {} samples",
        args.model.model().name(),
        report.disagreement_fraction,
        report.sample_count
    );
    let config = StateDepConfig {
        model: args.model,
        a: args.a,
        n1: args.n1,
        n2: args.n2,
        samples: args.samples,
        seed,
    };
    let envelope = Envelope::new(
        "state-dep",
        config,
        QuadMeta::monte_carlo(args.samples, seed, 1),
        report,
    );
    emit_json(args.out.as_deref(), &envelope)?;
    Ok(EXIT_OK)
}
