//! Task orchestration: executes a configured experiment and produces the
//! JSON report plus any CSV trace files. All randomness is seeded from the
//! config, so identical configs yield byte-identical artifacts.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::classical::{
    bracket_rank, integrate, sample_states, singular_factors, BodyParams, ClassicalState,
};
use crate::config::{ExperimentConfig, Report, TaskKind};
use crate::error::Result;
use crate::lie::lgtc_verdict;
use crate::quantum::{
    detect_genuine_symmetry, detect_parity_symmetry, restricted_sk_check,
    three_wave_mixing_demo, ControlPulse, Segment, ThreeWaveParams,
};
use crate::spectrum::{block_gaps, classify_resonances};

/// Everything a run produces: the report and named CSV side files.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub report: Report,
    /// (file name, contents) pairs to be written next to the report.
    pub files: Vec<(String, String)>,
}

/// Execute the configured task. Scientific verdicts land in the report;
/// only execution failures surface as errors.
pub fn execute(config: &ExperimentConfig) -> Result<RunArtifacts> {
    let inertia = config.inertia();
    let mut files = Vec::new();
    let result = match config.task {
        TaskKind::VerifyQuantum => {
            let report = lgtc_verdict(config.j_max, &config.dipole()?, &inertia)?;
            serde_json::to_value(&report)?
        }
        TaskKind::VerifyClassical => verify_classical(config)?,
        TaskKind::Simulate => {
            let (value, csv) = simulate_classical(config)?;
            files.push(("trajectory.csv".to_string(), csv));
            value
        }
        TaskKind::RestrictedSk => {
            let k = config.k.unwrap_or(0);
            let report = restricted_sk_check(k, config.j_max, &config.dipole()?, &inertia)?;
            serde_json::to_value(&report)?
        }
        TaskKind::ThreeWave => {
            let j = config.j.unwrap_or(1);
            let k = config.k.unwrap_or(1);
            let m = config.m.unwrap_or(0);
            let trace = three_wave_mixing_demo(
                j,
                k,
                m,
                &config.dipole()?,
                &inertia,
                &ThreeWaveParams::default(),
            )?;
            let mut csv = String::from("t,p_plus,p_minus,p_boundary\n");
            for (t, p, q, top) in &trace.samples {
                csv.push_str(&format!("{t:.17e},{p:.17e},{q:.17e},{top:.17e}\n"));
            }
            files.push(("three_wave.csv".to_string(), csv));
            json!({
                "j": trace.j,
                "k": trace.k,
                "m": trace.m,
                "final_asymmetry": trace.final_asymmetry,
                "note": "asymmetry thresholds are artifact targets chosen for a clear demonstration",
            })
        }
        TaskKind::ResonanceReport => {
            let j = config.j.unwrap_or(0);
            let reports: Vec<serde_json::Value> = block_gaps(j)
                .iter()
                .map(|g| {
                    let r = classify_resonances(&inertia, j, g, j + 3)?;
                    Ok(json!({
                        "kind": format!("{:?}", g.kind()),
                        "report": serde_json::to_value(&r)?,
                    }))
                })
                .collect::<Result<_>>()?;
            json!({ "j": j, "gaps": reports })
        }
    };
    Ok(RunArtifacts { report: Report::new(config, result), files })
}

fn verify_classical(config: &ExperimentConfig) -> Result<serde_json::Value> {
    let params = BodyParams { inertia: config.inertia(), dipole: config.dipole()? };
    // Keep drawing until 1000 generic states (|S| > 1e-6) are collected; a
    // degenerate dipole class may make the singular product vanish
    // identically, in which case the generic set stays empty.
    let mut states = Vec::new();
    let mut generic_states = Vec::new();
    for batch in 0..20 {
        let draw = sample_states(1000, config.seed.wrapping_add(batch));
        for s in draw {
            if states.len() < 1000 {
                states.push(s);
            }
            if generic_states.len() < 1000
                && singular_factors(&s, &params).product.abs() > 1e-6
            {
                generic_states.push(s);
            }
        }
        if states.len() >= 1000 && (generic_states.len() >= 1000 || batch >= 2) {
            break;
        }
    }
    let rank_of = |set: &[ClassicalState]| -> Vec<(ClassicalState, usize, f64)> {
        set.par_iter()
            .map(|s| {
                let r = bracket_rank(s, &params, 3).expect("depth-3 rank");
                let f = singular_factors(s, &params);
                (*s, r.rank, f.product)
            })
            .collect()
    };
    let ranks = rank_of(&states);
    let generic = rank_of(&generic_states);
    let generic_full = generic.iter().filter(|(_, r, _)| *r == 6).count();
    let all_le5 = ranks.iter().filter(|(_, r, _)| *r <= 5).count();
    let p3_nonzero: Vec<_> = ranks.iter().filter(|(s, _, _)| s.p[2].abs() > 1e-3).collect();
    let p3_rank5 = p3_nonzero.iter().filter(|(_, r, _)| *r == 5).count();
    let summary = format!(
        "rank 6 at {generic_full}/{} sampled generic states",
        generic.len()
    );
    Ok(json!({
        "samples": ranks.len(),
        "generic_states": generic.len(),
        "generic_rank6": generic_full,
        "rank_le5": all_le5,
        "p3_nonzero_states": p3_nonzero.len(),
        "p3_nonzero_rank5": p3_rank5,
        "summary": summary,
    }))
}

fn simulate_classical(config: &ExperimentConfig) -> Result<(serde_json::Value, String)> {
    let params = BodyParams { inertia: config.inertia(), dipole: config.dipole()? };
    let total = config.total_time.unwrap_or(10.0);
    let step = config.step.unwrap_or(1e-3);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let segments: Vec<Segment> = (0..10)
        .map(|_| Segment {
            duration: total / 10.0,
            u: [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ],
        })
        .collect();
    let pulse = ControlPulse::new(segments, 1.0)?;
    let mut q = [0.0f64; 4];
    loop {
        for c in &mut q {
            *c = rng.gen_range(-1.0..1.0);
        }
        let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 {
            for c in &mut q {
                *c /= n;
            }
            break;
        }
    }
    let p = [0; 3].map(|_| rng.gen_range(-2.0..2.0));
    let state0 = ClassicalState::new(q, p)?;
    let traj = integrate(&state0, &pulse, &params, step)?;
    let mut csv = String::from("t,q0,q1,q2,q3,P1,P2,P3,p3_drift\n");
    for (t, s) in &traj {
        csv.push_str(&format!(
            "{t:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
            s.q[0],
            s.q[1],
            s.q[2],
            s.q[3],
            s.p[0],
            s.p[1],
            s.p[2],
            s.p[2] - state0.p[2],
        ));
    }
    let (_, last) = traj.last().unwrap();
    let p3_drift = traj
        .iter()
        .map(|(_, s)| (s.p[2] - state0.p[2]).abs())
        .fold(0.0f64, f64::max);
    Ok((
        json!({
            "total_time": total,
            "step": step,
            "final_state": serde_json::to_value(last)?,
            "max_p3_drift": p3_drift,
        }),
        csv,
    ))
}

/// Quick self-checks used by the detectors task plumbing; kept here so the
/// binary and the FFI layer share them.
pub fn quantum_symmetry_summary(config: &ExperimentConfig) -> Result<serde_json::Value> {
    let dipole = config.dipole()?;
    let genuine = detect_genuine_symmetry(&dipole, &config.inertia(), config.j_max, config.seed)?;
    let parity = detect_parity_symmetry(&dipole, config.j_max.saturating_sub(1))?;
    Ok(json!({
        "genuine": serde_json::to_value(&genuine)?,
        "parity": serde_json::to_value(&parity)?,
    }))
}

/// Random eigen-normalized state used by a few seeded checks.
pub fn random_unit_vector(dim: usize, rng: &mut ChaCha8Rng) -> DVector<Complex64> {
    let mut v = DVector::from_fn(dim, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    v /= Complex64::new(v.norm(), 0.0);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    fn config(task: &str, dipole: (f64, f64, f64)) -> ExperimentConfig {
        ExperimentConfig::from_json(&format!(
            r#"{{
                "schema": 1,
                "inertia": {{"i2": 2.0, "i3": 1.0}},
                "dipole": {{"delta1": {}, "delta2": {}, "delta3": {}}},
                "j_max": 2,
                "task": "{task}",
                "seed": 3
            }}"#,
            dipole.0, dipole.1, dipole.2
        ))
        .unwrap()
    }

    #[test]
    fn verify_quantum_genuine_shortcuts() {
        let cfg = config("verify-quantum", (0.0, 0.0, 1.0));
        let artifacts = execute(&cfg).unwrap();
        let v = &artifacts.report.result["verdict"];
        assert_eq!(v["verdict"], "SymmetryBlocked");
        assert_eq!(v["detail"], "k-invariance");
    }

    #[test]
    fn simulate_writes_deterministic_csv() {
        let mut cfg = config("simulate", (0.0, 0.0, 1.0));
        cfg.total_time = Some(1.0);
        cfg.step = Some(1e-2);
        let a = execute(&cfg).unwrap();
        let b = execute(&cfg).unwrap();
        assert_eq!(a.files, b.files);
        assert_eq!(a.report.to_json(), b.report.to_json());
        let drift = a.report.result["max_p3_drift"].as_f64().unwrap();
        assert!(drift < 1e-9, "genuine P3 drift {drift}");
    }

    #[test]
    fn resonance_report_lists_block_gap_families() {
        let mut cfg = config("resonance-report", (0.0, 0.2, 0.3));
        cfg.inertia.i2 = 1.0;
        cfg.inertia.i3 = 1.0 / 2f64.sqrt();
        cfg.j = Some(0);
        let artifacts = execute(&cfg).unwrap();
        let gaps = artifacts.report.result["gaps"].as_array().unwrap();
        // Block 0 gaps: lambda_0^0, sigma^0, eta_0 (and eta_-1 = eta_0).
        assert!(gaps.len() >= 3);
        let kinds: Vec<String> = gaps
            .iter()
            .map(|g| g["kind"].as_str().unwrap().to_string())
            .collect();
        assert!(kinds.iter().any(|k| k.starts_with("Lambda")));
        assert!(kinds.iter().any(|k| k.starts_with("Sigma")));
        assert!(kinds.iter().any(|k| k.starts_with("Eta")));
    }

    #[test]
    fn verify_classical_counts_ranks() {
        let cfg = config("verify-classical", (0.3, 0.4, 0.1));
        let artifacts = execute(&cfg).unwrap();
        let r = &artifacts.report.result;
        let generic = r["generic_states"].as_u64().unwrap();
        let full = r["generic_rank6"].as_u64().unwrap();
        assert_eq!(generic, 1000);
        assert!(full + 1 >= generic, "rank 6 at {full}/{generic}");
    }
}
