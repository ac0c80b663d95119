use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nikodym::curve::{generalized_determinant, gram_schmidt, lookup};
use nikodym::cutoffs::CutoffLibrary;
use nikodym::experiments::sharpness::sharpness_log_sweep;
use nikodym::experiments::volume::default_pairs;
use nikodym::experiments::{
    aniso_admissibility_experiment, base_case_experiment, count_experiment,
    decomposition_audit_pipeline, n0_lemma_experiment, rescaled_membership,
    sobolev_embedding_check, theorem1_scaling, tube_volume_experiment,
};
use nikodym::operators::KernelQuadrature;
use nikodym::Matrix64;
use nikodym_cli::config::{LoadedConfig, Overrides};
use nikodym_cli::{resolve, run, PRESETS};

type Check = Result<(bool, String), String>;

fn dyadic(a: i32, b: i32) -> Vec<f64> {
    (a..=b).map(|k| 0.5f64.powi(k)).collect()
}

fn quadrature() -> KernelQuadrature {
    KernelQuadrature {
        t_levels: 2,
        ..Default::default()
    }
}

fn random_rotation(d: usize, rng: &mut ChaCha8Rng) -> Matrix64 {
    let vs: Vec<Vec<f64>> = (0..d)
        .map(|_| (0..d).map(|_| rng.random::<f64>() - 0.5).collect())
        .collect();
    Matrix64::from_columns(&gram_schmidt(&vs).expect("random vectors are independent"))
}

fn curve_suite() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut det_err, mut rot_err) = (0.0f64, 0.0f64);
    for d in 1..=6 {
        let c = lookup::<f64>("moment", d).map_err(|e| e.to_string())?;
        let rotated = c.transformed(random_rotation(d, &mut rng));
        for k in 0..1000 {
            let s = -1.0 + 2.0 * k as f64 / 999.0;
            let g = generalized_determinant(&c, s, d).map_err(|e| e.to_string())?;
            let r = generalized_determinant(&rotated, s, d).map_err(|e| e.to_string())?;
            det_err = det_err.max((g - 1.0).abs());
            rot_err = rot_err.max((g - r).abs());
        }
    }
    let circle = lookup::<f64>("circle2d", 2).map_err(|e| e.to_string())?;
    let rotated = circle.transformed(random_rotation(2, &mut rng));
    for k in 0..1000 {
        let s = -1.0 + 2.0 * k as f64 / 999.0;
        let a = generalized_determinant(&circle, s, 2).map_err(|e| e.to_string())?;
        let b = generalized_determinant(&rotated, s, 2).map_err(|e| e.to_string())?;
        rot_err = rot_err.max((a - b).abs());
    }
    Ok((
        det_err <= 1e-10 && rot_err <= 1e-10,
        format!("max |det - 1| {det_err:.1e}, rotation drift {rot_err:.1e}"),
    ))
}

fn rescaling() -> Check {
    let rhos: Vec<(f64, f64)> = [4, 6, 8].iter().map(|&k| (0.5f64.powi(k), 0.0)).collect();
    let mut parts = Vec::new();
    let mut pass = true;
    for (key, d) in [("circle2d", 2), ("moment", 3)] {
        let c = lookup::<f64>(key, d).map_err(|e| e.to_string())?;
        let m = rescaled_membership(&c, d, &rhos, 1000).map_err(|e| e.to_string())?;
        pass &= m.pass;
        parts.push(format!(
            "{key}: B1 in [{:.3}, {:.3}], spread {:.3}",
            m.min, m.max, m.spread
        ));
    }
    Ok((pass, parts.join("; ")))
}

fn cutoffs() -> Check {
    let r = CutoffLibrary::new().verify(10_000);
    let worst = r.lp_residual.max(r.lp1_residual).max(r.zeta_residual);
    Ok((
        r.passes,
        format!(
            "partition residual {worst:.1e}, min psi-check {:.2e}, c0 {:.4}",
            r.psi_check_min, r.c0
        ),
    ))
}

fn base_case() -> Check {
    let r =
        base_case_experiment(&[64.0, 256.0, 1024.0], &quadrature()).map_err(|e| e.to_string())?;
    Ok((
        r.pass,
        format!(
            "min decay {:.2}, Schur growth {:.3} / {:.3}",
            r.min_decay, r.schur0_growth, r.schur1_growth
        ),
    ))
}

fn n0_lemma() -> Check {
    let c = lookup::<f64>("circle2d", 2).map_err(|e| e.to_string())?;
    let r = n0_lemma_experiment(&c, 2, &[64, 256, 1024], 1, &quadrature())
        .map_err(|e| e.to_string())?;
    let worst0 = r
        .points
        .iter()
        .map(|p| p.schur.normalized0)
        .fold(0.0, f64::max);
    let worst1 = r
        .points
        .iter()
        .map(|p| p.schur.normalized1)
        .fold(0.0, f64::max);
    Ok((
        r.pass,
        format!(
            "S0*Lambda <= {worst0:.2} (C0 {:.2}), S1/Lambda <= {worst1:.2} (C1 {:.2})",
            r.c0, r.c1
        ),
    ))
}

fn audit() -> Check {
    let q = quadrature();
    let mut parts = Vec::new();
    let mut pass = true;
    for (key, d, lambda) in [("circle2d", 2, 256), ("moment", 3, 64)] {
        let c = lookup::<f64>(key, d).map_err(|e| e.to_string())?;
        match decomposition_audit_pipeline(&c, lambda, d, 1, &q) {
            Ok(r) => {
                let vacuous = r.stages.iter().filter(|s| s.vacuous).count();
                pass &= r.pass && r.stages.len() == 8;
                parts.push(format!(
                    "{key} lambda={lambda}: {}/8 stages ({vacuous} vacuous)",
                    r.stages.iter().filter(|s| s.pass).count()
                ));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{key}: {e}"));
            }
        }
    }
    let c = lookup::<f64>("circle2d", 2).map_err(|e| e.to_string())?;
    let lambdas: Vec<u64> = (4..=12).map(|k| 1 << k).collect();
    let r = count_experiment(&c, 2, &lambdas, 1).map_err(|e| e.to_string())?;
    pass &= r.pass;
    let max = r.points.iter().map(|p| p.analytic).max().unwrap_or(0);
    parts.push(format!("count <= {max} with C = {}", r.constant));
    Ok((pass, parts.join("; ")))
}

fn volume() -> Check {
    let mut parts = Vec::new();
    let mut pass = true;
    for (key, d) in [("circle2d", 2), ("moment", 3)] {
        let c = lookup::<f64>(key, d).map_err(|e| e.to_string())?;
        let r = tube_volume_experiment(&c, &default_pairs(), 1_000_000, 1, 4.0)
            .map_err(|e| e.to_string())?;
        pass &= r.pass && r.pairs.len() == 20;
        let lo = r
            .pairs
            .iter()
            .map(|p| p.ratio)
            .fold(f64::INFINITY, f64::min);
        let hi = r.pairs.iter().map(|p| p.ratio).fold(0.0, f64::max);
        parts.push(format!(
            "d={d}: ratios in [{lo:.2}, {hi:.2}], C {:.2}",
            r.constant
        ));
    }
    Ok((pass, parts.join("; ")))
}

fn sharpness_log() -> Check {
    let c = lookup::<f64>("circle2d", 2).map_err(|e| e.to_string())?;
    let r =
        sharpness_log_sweep(&c, &dyadic(3, 7), 2.0, 0.1, 20_000, 1).map_err(|e| e.to_string())?;
    let last = r.runs.last().ok_or("no runs")?;
    let pass = r.fit.pass
        && r.runs
            .iter()
            .all(|run| run.per_k_pass && run.chebyshev_holds);
    Ok((pass, format!(
        "slope {:.3} (>= 0.4), delta=2^-7: cone c {:.3}, cone ratio spread {:.1} (<= 16), level-set ratio spread {:.1}",
        r.fit.slope, last.cone_c, last.cone_spread, last.ratio_spread
    )))
}

fn theorem1() -> Check {
    let c = lookup::<f64>("circle2d", 2).map_err(|e| e.to_string())?;
    let r = theorem1_scaling(&c, &dyadic(3, 7), 0.25, 20_000, 1).map_err(|e| e.to_string())?;
    Ok((
        r.fit.pass,
        format!(
            "slope {:.3} +- {:.3} (<= 1.25)",
            r.fit.slope, r.fit.slope_stderr
        ),
    ))
}

fn sobolev() -> Check {
    let c = lookup::<f64>("circle2d", 2).map_err(|e| e.to_string())?;
    let r = sobolev_embedding_check(&c, &dyadic(3, 6), 20, 1).map_err(|e| e.to_string())?;
    Ok((
        r.pass,
        format!(
            "constants in [{:.4}, {:.4}], ratio {:.3}",
            r.min_constant, r.max_constant, r.uniformity_ratio
        ),
    ))
}

fn anisotropic() -> Check {
    let mut pass = true;
    let mut parts = Vec::new();
    for (key, d) in [("circle2d", 2), ("moment", 3)] {
        let c = lookup::<f64>(key, d).map_err(|e| e.to_string())?;
        let r = aniso_admissibility_experiment(&c, &dyadic(1, 10), 1000, 1)
            .map_err(|e| e.to_string())?;
        pass &= r.pass;
        let bad = r
            .points
            .iter()
            .filter(|p| {
                !(p.isotropic.admissible && p.graded.admissible && p.symbol.passes && p.tube.passes)
            })
            .count();
        parts.push(format!("d={d}: {bad} failing of {}", r.points.len()));
    }
    Ok((pass, parts.join("; ")))
}

/// Small-budget overrides so that every preset can be run twice.
fn light_config(name: &str) -> String {
    let grid = match name {
        "sharpness-log" | "sharpness-range" | "theorem1-scaling" => "probes = 2000\n",
        "sobolev-check" => "deltas = \"2^-3..2^-4\"\nfields = 3\n",
        "tube-volume" => "samples = 100000\n",
        "an-count" => "lambdas = \"2^4..2^8\"\n",
        _ => "",
    };
    format!("[run]\nexperiment = \"{name}\"\nseed = 11\n\n[grid]\n{grid}")
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut differing = Vec::new();
    for preset in PRESETS {
        let cfg = LoadedConfig::parse(format!("{}.toml", preset.name), light_config(preset.name))
            .map_err(|e| e.to_string())?;
        let mut outputs = Vec::new();
        for workers in [1, 2] {
            let flags = Overrides {
                workers: Some(workers),
                out: Some(dir.path().join(format!("w{workers}"))),
                ..Default::default()
            };
            let (run_cfg, exec) = resolve(Some(&cfg), &flags).map_err(|e| e.to_string())?;
            let outcome = run(&run_cfg, &exec).map_err(|e| format!("{}: {e}", preset.name))?;
            outputs.push(std::fs::read(outcome.dir.join("data.csv")).map_err(|e| e.to_string())?);
        }
        if outputs[0] != outputs[1] {
            differing.push(preset.name);
        }
    }
    Ok((
        differing.is_empty(),
        format!(
            "{} presets re-run with 1 and 2 workers, differing: {differing:?}",
            PRESETS.len()
        ),
    ))
}

type Criterion = (&'static str, Duration, fn() -> Check);

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("curve suite", Duration::from_secs(1), curve_suite),
        ("rescaling lemma", Duration::from_secs(10), rescaling),
        ("cutoff suite", Duration::from_secs(5), cutoffs),
        ("kernel base case", Duration::from_secs(120), base_case),
        ("n=0 lemma", Duration::from_secs(120), n0_lemma),
        ("decomposition audit", Duration::from_secs(300), audit),
        ("tube volume law", Duration::from_secs(120), volume),
        ("sharpness-log", Duration::from_secs(600), sharpness_log),
        ("theorem-1 trend", Duration::from_secs(1800), theorem1),
        ("Sobolev uniformity", Duration::from_secs(600), sobolev),
        ("anisotropic checks", Duration::from_secs(60), anisotropic),
        ("determinism", Duration::from_secs(600), determinism),
    ];
    let mut failures = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let (pass, detail) = match result {
            Ok((pass, detail)) => (pass && elapsed <= *budget, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "{} {:>2} {name}: {detail} [{:.2} s of {} s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!(
        "acceptance: {} of {} criteria pass",
        criteria.len() - failures,
        criteria.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
