//! Numerical integration over the unit sphere and its threefold product.
//!
//! Monte Carlo with seeded, stream-partitioned ChaCha8 is the primary
//! scheme; a Gauss-Legendre (in cos theta) times uniform-azimuth product
//! rule is available on a single sphere as a deterministic cross-check.
//! Results are bit-reproducible for a fixed (seed, partition count).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spinor::Direction;

/// RNG pinned for reproducibility across machines; echoed in reports.
pub const RNG_ALGORITHM: &str = "chacha8";

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    MonteCarlo,
    ProductRule,
}

/// How to carry out an integral: scheme, resolution, seed and worker split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub scheme: Scheme,
    /// Monte Carlo sample count, or Gauss-Legendre order per panel.
    pub samples_or_order: usize,
    /// Seed for the sample stream (ignored by the product rule).
    pub seed: u64,
    /// Deterministic worker split; results depend on it, reproducibly.
    pub partitions: u32,
    /// Product-rule frame pole, so a hemisphere boundary can be placed on a
    /// panel edge. Defaults to +z.
    pub align_axis: Option<Direction>,
}

impl QuadratureSpec {
    pub fn monte_carlo(samples: usize, seed: u64) -> Self {
        QuadratureSpec {
            scheme: Scheme::MonteCarlo,
            samples_or_order: samples.max(1),
            seed,
            partitions: 1,
            align_axis: None,
        }
    }

    pub fn product_rule(order: usize) -> Self {
        QuadratureSpec {
            scheme: Scheme::ProductRule,
            samples_or_order: order.max(1),
            seed: 0,
            partitions: 1,
            align_axis: None,
        }
    }

    pub fn with_partitions(mut self, partitions: u32) -> Self {
        self.partitions = partitions.max(1);
        self
    }

    pub fn aligned(mut self, axis: Direction) -> Self {
        self.align_axis = Some(axis);
        self
    }
}

/// Value, Monte Carlo standard error (0 for the product rule) and the
/// number of integrand evaluations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralResult {
    pub value: f64,
    pub std_error: f64,
    pub evaluations: u64,
}

impl IntegralResult {
    /// Whether `target` lies within 3 standard errors (with a small absolute
    /// floor so exact zero-variance results compare cleanly).
    pub fn within_3_sigma(&self, target: f64) -> bool {
        (self.value - target).abs() <= 3.0 * self.std_error + 1e-12
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn draw_direction(rng: &mut ChaCha8Rng) -> Direction {
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let s = (1.0 - z * z).max(0.0).sqrt();
    Direction {
        x: s * phi.cos(),
        y: s * phi.sin(),
        z,
    }
}

/// i.i.d. uniform points on the unit sphere; identical per seed.
pub fn sample_sphere(seed: u64, count: usize) -> Vec<Direction> {
    let mut rng = stream_rng(seed, 0);
    (0..count).map(|_| draw_direction(&mut rng)).collect()
}

/// Per-partition sample counts: as even as possible, first partitions get
/// the remainder.
fn partition_counts(total: usize, partitions: u32) -> Vec<usize> {
    let w = partitions.max(1) as usize;
    let base = total / w;
    let rem = total % w;
    (0..w).map(|i| base + usize::from(i < rem)).collect()
}

/// Kahan-compensated running sums; repeated addition of near-identical
/// values would otherwise drift linearly in the sample count.
struct Accumulator {
    sum: f64,
    comp: f64,
    sum_sq: f64,
    comp_sq: f64,
    count: u64,
}

fn kahan_add(sum: &mut f64, comp: &mut f64, v: f64) {
    let y = v - *comp;
    let t = *sum + y;
    *comp = (t - *sum) - y;
    *sum = t;
}

impl Accumulator {
    fn new() -> Self {
        Accumulator {
            sum: 0.0,
            comp: 0.0,
            sum_sq: 0.0,
            comp_sq: 0.0,
            count: 0,
        }
    }

    fn push(&mut self, v: f64) {
        kahan_add(&mut self.sum, &mut self.comp, v);
        kahan_add(&mut self.sum_sq, &mut self.comp_sq, v * v);
        self.count += 1;
    }

    fn merge(&mut self, other: &Accumulator) {
        kahan_add(&mut self.sum, &mut self.comp, other.sum);
        kahan_add(&mut self.sum_sq, &mut self.comp_sq, other.sum_sq);
        self.count += other.count;
    }

    /// Mean and standard error of the mean over accumulated values.
    fn mean_and_error(&self) -> (f64, f64) {
        let n = self.count as f64;
        let mean = self.sum / n;
        if self.count < 2 {
            return (mean, 0.0);
        }
        let var = ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0);
        (mean, (var / n).sqrt())
    }
}

fn abort(value: f64, at: &Direction) -> Error {
    Error::IntegrationAbort {
        value,
        x: at.x,
        y: at.y,
        z: at.z,
    }
}

/// Integral of `f` over the unit sphere (measure `d Omega`, total 4 pi).
pub fn integrate_s2<F>(f: F, spec: &QuadratureSpec) -> Result<IntegralResult>
where
    F: Fn(&Direction) -> f64,
{
    match spec.scheme {
        Scheme::MonteCarlo => {
            let mut total = Accumulator::new();
            for (stream, count) in partition_counts(spec.samples_or_order, spec.partitions)
                .into_iter()
                .enumerate()
            {
                let mut rng = stream_rng(spec.seed, stream as u64);
                let mut part = Accumulator::new();
                for _ in 0..count {
                    let lambda = draw_direction(&mut rng);
                    let v = f(&lambda);
                    if !v.is_finite() {
                        return Err(abort(v, &lambda));
                    }
                    part.push(v);
                }
                total.merge(&part);
            }
            let (mean, err) = total.mean_and_error();
            Ok(IntegralResult {
                value: FOUR_PI * mean,
                std_error: FOUR_PI * err,
                evaluations: total.count,
            })
        }
        Scheme::ProductRule => product_rule_s2(&f, spec),
    }
}

/// Integral of `f` over S2 x S2 x S2 (total measure (4 pi)^3).
/// Monte Carlo only.
pub fn integrate_s2_cubed<F>(f: F, spec: &QuadratureSpec) -> Result<IntegralResult>
where
    F: Fn(&Direction, &Direction, &Direction) -> f64,
{
    if spec.scheme != Scheme::MonteCarlo {
        return Err(Error::UnsupportedScheme {
            reason: "triple sphere integrals are Monte Carlo only".into(),
        });
    }
    let mut total = Accumulator::new();
    for (stream, count) in partition_counts(spec.samples_or_order, spec.partitions)
        .into_iter()
        .enumerate()
    {
        let mut rng = stream_rng(spec.seed, stream as u64);
        let mut part = Accumulator::new();
        for _ in 0..count {
            let l1 = draw_direction(&mut rng);
            let l2 = draw_direction(&mut rng);
            let l3 = draw_direction(&mut rng);
            let v = f(&l1, &l2, &l3);
            if !v.is_finite() {
                return Err(abort(v, &l1));
            }
            part.push(v);
        }
        total.merge(&part);
    }
    let (mean, err) = total.mean_and_error();
    let measure = FOUR_PI * FOUR_PI * FOUR_PI;
    Ok(IntegralResult {
        value: measure * mean,
        std_error: measure * err,
        evaluations: total.count,
    })
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order.max(1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-like initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and P'_n(x)
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Orthonormal completion (e1, e2) of `axis`.
fn orthonormal_frame(axis: &Direction) -> (Direction, Direction) {
    let pick = if axis.x.abs() < 0.9 {
        Direction::X
    } else {
        Direction::Y
    };
    let (cx, cy, cz) = axis.cross(&pick);
    let e1 = Direction::normalized(cx, cy, cz).expect("axis and pick not collinear");
    let (dx, dy, dz) = axis.cross(&e1);
    let e2 = Direction::normalized(dx, dy, dz).expect("cross of orthonormal pair");
    (e1, e2)
}

/// Gauss-Legendre x uniform-azimuth rule. The polar variable is split into
/// the panels [-1, 0] and [0, 1] of cos(theta) in the aligned frame, so a
/// hemisphere support boundary falls on a panel edge; azimuth resolution is
/// doubled relative to the polar order to absorb sgn crossings.
fn product_rule_s2<F>(f: &F, spec: &QuadratureSpec) -> Result<IntegralResult>
where
    F: Fn(&Direction) -> f64,
{
    let order = spec.samples_or_order.max(1);
    let axis = spec.align_axis.unwrap_or(Direction::Z);
    let (e1, e2) = orthonormal_frame(&axis);
    let (nodes, weights) = gauss_legendre(order);
    let m = 2 * order; // azimuth points
    let dphi = std::f64::consts::TAU / m as f64;

    let mut sum = 0.0;
    let mut evaluations = 0u64;
    for panel in 0..2 {
        // map [-1,1] -> [-1,0] or [0,1]
        let (lo, hi) = if panel == 0 { (-1.0, 0.0) } else { (0.0, 1.0) };
        let half = (hi - lo) / 2.0;
        let mid = (hi + lo) / 2.0;
        for (z_ref, w_ref) in nodes.iter().zip(&weights) {
            let cos_t = mid + half * z_ref;
            let w_z = half * w_ref;
            let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
            for j in 0..m {
                let phi = (j as f64 + 0.5) * dphi;
                let lambda = Direction {
                    x: sin_t * (phi.cos() * e1.x + phi.sin() * e2.x) + cos_t * axis.x,
                    y: sin_t * (phi.cos() * e1.y + phi.sin() * e2.y) + cos_t * axis.y,
                    z: sin_t * (phi.cos() * e1.z + phi.sin() * e2.z) + cos_t * axis.z,
                };
                let v = f(&lambda);
                if !v.is_finite() {
                    return Err(abort(v, &lambda));
                }
                sum += v * w_z * dphi;
                evaluations += 1;
            }
        }
    }
    Ok(IntegralResult {
        value: sum,
        std_error: 0.0,
        evaluations,
    })
}
