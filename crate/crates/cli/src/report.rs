//! Report envelopes and output writing.
//!
//! Every command emits a JSON envelope with tool version, timestamp, the
//! resolved configuration, quadrature metadata and a per-command results
//! payload. The `config`, `quadrature` and `results` sections are
//! bit-reproducible for a fixed seed and partition count; `generated_at`
//! is run metadata and excluded from reproducibility comparisons.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Serialize)]
pub struct QuadMeta {
    pub scheme: &'static str,
    pub samples_or_order: usize,
    pub seed: u64,
    pub partitions: u32,
    pub rng: &'static str,
}

impl QuadMeta {
    pub fn monte_carlo(samples: usize, seed: u64, partitions: u32) -> Self {
        QuadMeta {
            scheme: "monte_carlo",
            samples_or_order: samples,
            seed,
            partitions,
            rng: teleport_hv_core::quadrature::RNG_ALGORITHM,
        }
    }

    pub fn product_rule(order: usize) -> Self {
        QuadMeta {
            scheme: "product_rule",
            samples_or_order: order,
            seed: 0,
            partitions: 1,
            rng: teleport_hv_core::quadrature::RNG_ALGORITHM,
        }
    }

    /// Exact linear-algebra commands: no integration, but the random
    /// direction stream is still seeded.
    pub fn exact(trials: usize, seed: u64) -> Self {
        QuadMeta {
            scheme: "exact",
            samples_or_order: trials,
            seed,
            partitions: 1,
            rng: teleport_hv_core::quadrature::RNG_ALGORITHM,
        }
    }
}

#[derive(Serialize)]
pub struct Envelope<C: Serialize, R: Serialize> {
    pub tool_version: &'static str,
    pub generated_at: String,
    pub command: &'static str,
    pub config: C,
    pub quadrature: QuadMeta,
    pub results: R,
}

impl<C: Serialize, R: Serialize> Envelope<C, R> {
    pub fn new(command: &'static str, config: C, quadrature: QuadMeta, results: R) -> Self {
        Envelope {
            tool_version: TOOL_VERSION,
            generated_at: chrono::Utc::now().to_rfc3339(),
            command,
            config,
            quadrature,
            results,
        }
    }
}

/// Write text to `--out` or stdout.
pub fn emit(out: Option<&Path>, text: &str) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(text.as_bytes())?;
            lock.write_all(b"\n")
        }
    }
}

pub fn emit_json<C: Serialize, R: Serialize>(
    out: Option<&Path>,
    envelope: &Envelope<C, R>,
) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(envelope).expect("report serialization");
    emit(out, &text)
}
