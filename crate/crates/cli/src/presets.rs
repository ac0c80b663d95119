//! The registry of preset experiments and their defaults.

use std::fmt::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Runtime {
    /// Under ten seconds.
    Fast,
    /// Under a minute.
    Moderate,
    /// Minutes.
    Slow,
}

impl Runtime {
    pub fn label(self) -> &'static str {
        match self {
            Runtime::Fast => "fast",
            Runtime::Moderate => "moderate",
            Runtime::Slow => "slow",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    pub curve: &'static str,
    pub d: usize,
    pub delta_range: Option<(i32, i32)>,
    pub lambdas: &'static [u64],
    pub n_level: Option<usize>,
    pub probes: usize,
    pub fields: usize,
    pub samples: u64,
    pub slack: f64,
    pub uses_delta: bool,
    pub uses_lambda: bool,
    /// Limited to the full-field δ floor.
    pub full_field: bool,
    pub min_deltas: usize,
    /// Runs only on the preset curve.
    pub fixed_curve: bool,
    pub runtime: Runtime,
}

impl Preset {
    /// Default δ grid; full-field runs in `d ≥ 3` are shifted to end at `2⁻⁵`.
    pub fn deltas(&self, d: usize) -> Vec<f64> {
        let Some((a, b)) = self.delta_range else {
            return Vec::new();
        };
        let (a, b) = if self.full_field && d >= 3 && b > 5 {
            ((a - (b - 5)).max(1), 5)
        } else {
            (a, b)
        };
        (a..=b).map(|k| 0.5f64.powi(k)).collect()
    }

    pub fn parameters(&self) -> String {
        let mut s = format!("curve={} d={}", self.curve, self.d);
        if let Some((a, b)) = self.delta_range {
            let _ = write!(s, " deltas=2^-{a}..2^-{b}");
        }
        if self.uses_lambda {
            let l: Vec<String> = self.lambdas.iter().map(u64::to_string).collect();
            let _ = write!(s, " lambda={}", l.join(","));
        }
        if self.uses_delta && self.name != "aniso-admissibility" {
            let _ = write!(s, " slack={}", self.slack);
        }
        s
    }
}

const BASE: Preset = Preset {
    name: "",
    summary: "",
    curve: "circle2d",
    d: 2,
    delta_range: None,
    lambdas: &[],
    n_level: None,
    probes: 20_000,
    fields: 20,
    samples: 1_000,
    slack: 0.25,
    uses_delta: false,
    uses_lambda: false,
    full_field: false,
    min_deltas: 0,
    fixed_curve: false,
    runtime: Runtime::Fast,
};

/// Sorted by name.
pub const PRESETS: &[Preset] = &[
    Preset {
        name: "an-count",
        summary: "number of nonzero pieces in the decomposition against log(2+λ)",
        lambdas: &[16, 32, 64, 128, 256, 512, 1024, 2048, 4096],
        uses_lambda: true,
        ..BASE
    },
    Preset {
        name: "aniso-admissibility",
        summary: "admissibility of the isotropic and graded scale families, isotropic sandwich",
        delta_range: Some((1, 10)),
        uses_delta: true,
        min_deltas: 1,
        ..BASE
    },
    Preset {
        name: "kernel-base-case",
        summary: "decay and Schur sums of the non-stationary kernel",
        lambdas: &[64, 256, 1024],
        uses_lambda: true,
        fixed_curve: true,
        ..BASE
    },
    Preset {
        name: "lemma-audit",
        summary: "eight-stage decomposition audit at one frequency scale",
        lambdas: &[256],
        uses_lambda: true,
        ..BASE
    },
    Preset {
        name: "n0-lemma",
        summary: "Schur bounds for the piece near the critical set",
        lambdas: &[64, 256, 1024],
        uses_lambda: true,
        ..BASE
    },
    Preset {
        name: "sharpness-log",
        summary: "level sets of the maximal function of a reflected tube; logarithmic lower bound",
        delta_range: Some((3, 7)),
        slack: 0.1,
        uses_delta: true,
        full_field: true,
        min_deltas: 4,
        runtime: Runtime::Moderate,
        ..BASE
    },
    Preset {
        name: "sharpness-range",
        summary: "superlevel set of the maximal function of a small ball",
        delta_range: Some((4, 7)),
        uses_delta: true,
        full_field: true,
        min_deltas: 1,
        ..BASE
    },
    Preset {
        name: "sobolev-check",
        summary: "uniformity in δ of the Sobolev-embedding constant",
        delta_range: Some((3, 6)),
        uses_delta: true,
        full_field: true,
        min_deltas: 2,
        runtime: Runtime::Slow,
        ..BASE
    },
    Preset {
        name: "theorem1-scaling",
        summary: "empirical L² norm of the maximal operator over δ with a log-log fit",
        delta_range: Some((3, 7)),
        uses_delta: true,
        full_field: true,
        min_deltas: 4,
        runtime: Runtime::Moderate,
        ..BASE
    },
    Preset {
        name: "tube-volume",
        summary: "Monte-Carlo tube intersection volumes against the closed-form law",
        samples: 1_000_000,
        ..BASE
    },
];

/// Presets whose name contains `filter`, in registry order.
pub fn list_presets(filter: Option<&str>) -> Vec<&'static Preset> {
    let filter = filter.unwrap_or("").trim();
    PRESETS.iter().filter(|p| p.name.contains(filter)).collect()
}

pub fn render_table(presets: &[&Preset]) -> String {
    let width = presets
        .iter()
        .map(|p| p.name.len())
        .max()
        .unwrap_or(0)
        .max(6);
    let mut out = format!("{:<width$}  {:<9}  parameters\n", "preset", "runtime");
    for p in presets {
        let _ = writeln!(
            out,
            "{:<width$}  {:<9}  {}",
            p.name,
            p.runtime.label(),
            p.parameters()
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_is_sorted_and_unique() {
        let names: Vec<_> = PRESETS.iter().map(|p| p.name).collect();
        let mut sorted = names.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(names, sorted);
    }

    #[test]
    fn unknown_filter_is_empty() {
        assert!(list_presets(Some("no-such-thing")).is_empty());
        assert_eq!(list_presets(Some("")).len(), PRESETS.len());
    }
}
