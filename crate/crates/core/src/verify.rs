//! The acceptance suite: eleven numbered, machine-checkable criteria that
//! together certify the toolkit against its reference results. Each
//! criterion returns a pass/fail record with a human-readable detail line;
//! the `fast` subset skips the long j = 1 closure.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{
    bracket_rank, integrate, sample_states, singular_factors, BodyParams, ClassicalState,
};
use crate::coupling::{assemble_block, Dipole};
use crate::basis::{BasisVariant, BlockSpace};
use crate::lie::lgtc_verdict;
use crate::oracle::quadrature_oracle;
use crate::quantum::{
    detect_parity_symmetry, expm, p3_matrix, propagate, restricted_sk_check,
    three_wave_mixing_demo, ControlPulse, Hamiltonian, QuantumState, Segment, ThreeWaveParams,
};
use crate::spectrum::{block_gaps, classify_resonances, verify_lemma_important, GapKind, Inertia};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Fast,
    Full,
}

fn reference_inertia() -> Inertia {
    Inertia::new(1.0, 1.0 / 2f64.sqrt(), true)
}

fn accidental() -> Dipole {
    Dipole::new(0.0, 0.2, 0.3).unwrap()
}

fn genuine() -> Dipole {
    Dipole::new(0.0, 0.0, 1.0).unwrap()
}

fn orthogonal() -> Dipole {
    Dipole::new(0.3, 0.4, 0.0).unwrap()
}

fn timed<F: FnOnce() -> (bool, String)>(id: u32, name: &str, f: F) -> CriterionResult {
    let start = std::time::Instant::now();
    let (passed, detail) = f();
    CriterionResult {
        id,
        name: name.to_string(),
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Criterion 1: the j = 0 block ideal reaches su(10), dim 99, within 60 s.
pub fn criterion_block_closure_j0() -> CriterionResult {
    timed(1, "block closure j=0 reaches su(10)", || {
        match lgtc_verdict(1, &accidental(), &reference_inertia()) {
            Ok(report) => {
                let b = &report.blocks[0];
                (
                    b.reached_dim == 99 && b.su_dim == 99,
                    format!("reached {}/{}", b.reached_dim, b.su_dim),
                )
            }
            Err(e) => (false, format!("error: {e}")),
        }
    })
}

/// Criterion 2 (full suite): the j = 1 block ideal reaches su(34), dim 1155.
pub fn criterion_block_closure_j1() -> CriterionResult {
    timed(2, "block closure j=1 reaches su(34)", || {
        match lgtc_verdict(2, &accidental(), &reference_inertia()) {
            Ok(report) => {
                let b = &report.blocks[1];
                (
                    b.reached_dim == 1155 && b.su_dim == 1155,
                    format!("reached {}/{}, verdict {:?}", b.reached_dim, b.su_dim, report.verdict),
                )
            }
            Err(e) => (false, format!("error: {e}")),
        }
    })
}

/// Criterion 3: axial dipole commutes with P3 on blocks j <= 2 and leaks
/// less than 1e-9 out of S_k over 100 random pulses.
pub fn criterion_genuine_symmetry() -> CriterionResult {
    timed(3, "genuine top conserves P3 and S_k", || {
        let inertia = reference_inertia();
        let dipole = genuine();
        let mut max_comm: f64 = 0.0;
        for j in 0..=2u32 {
            let ham = match Hamiltonian::on_block(j, &dipole, &inertia) {
                Ok(h) => h,
                Err(e) => return (false, format!("error: {e}")),
            };
            let p3 = p3_matrix(&ham.indices);
            for b in &ham.b {
                max_comm = max_comm.max((&p3 * b - b * &p3).norm());
            }
        }
        if max_comm >= 1e-12 {
            return (false, format!("commutator norm {max_comm:.2e}"));
        }

        let ham = match Hamiltonian::on_levels(3, &dipole, &inertia) {
            Ok(h) => h,
            Err(e) => return (false, format!("error: {e}")),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let k0 = 1;
        let inside: Vec<usize> = (0..ham.dim()).filter(|&i| ham.indices[i].k == k0).collect();
        let mut max_leak: f64 = 0.0;
        for _ in 0..100 {
            let mut c: DVector<Complex64> = DVector::zeros(ham.dim());
            for &i in &inside {
                c[i] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
            c /= Complex64::new(c.norm(), 0.0);
            let psi0 = QuantumState::new(c).unwrap();
            let segments: Vec<Segment> = (0..5)
                .map(|_| Segment {
                    duration: rng.gen_range(0.01..0.2),
                    u: [
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    ],
                })
                .collect();
            let pulse = ControlPulse::new(segments, 1.0).unwrap();
            let psi = match propagate(&psi0, &pulse, &ham) {
                Ok(p) => p,
                Err(e) => return (false, format!("error: {e}")),
            };
            let leak: f64 = (0..ham.dim())
                .filter(|i| !inside.contains(i))
                .map(|i| psi.population(i))
                .sum();
            max_leak = max_leak.max(leak);
        }
        (
            max_leak < 1e-9,
            format!("max commutator {max_comm:.2e}, max leakage {max_leak:.2e} over 100 pulses"),
        )
    })
}

/// Criterion 4: in-plane dipole has no cross-parity entries in the rotated
/// real-combination basis on blocks j <= 2.
pub fn criterion_parity_symmetry() -> CriterionResult {
    timed(4, "orthogonal top conserves parity", || {
        let dipole = orthogonal();
        let mut max_cross: f64 = 0.0;
        for j in 0..=2u32 {
            match detect_parity_symmetry(&dipole, j) {
                Ok(r) => {
                    if !r.applicable {
                        return (false, "detector not applicable".into());
                    }
                    max_cross = max_cross.max(r.max_cross_entry);
                }
                Err(e) => return (false, format!("error: {e}")),
            }
        }
        (max_cross < 1e-12, format!("max cross-parity entry {max_cross:.2e}"))
    })
}

/// Criterion 5: restricted controllability in S_0 reaches su(4) and su(8).
pub fn criterion_restricted_sk() -> CriterionResult {
    timed(5, "restricted S_k closures reach su(4), su(8)", || {
        match restricted_sk_check(0, 2, &genuine(), &reference_inertia()) {
            Ok(r) => {
                let ok = r.blocks.len() == 2
                    && r.blocks[0].reached_dim == 15
                    && r.blocks[0].su_dim == 15
                    && r.blocks[1].reached_dim == 63
                    && r.blocks[1].su_dim == 63;
                (
                    ok,
                    format!(
                        "j=0: {}/{}, j=1: {}/{}",
                        r.blocks[0].reached_dim,
                        r.blocks[0].su_dim,
                        r.blocks[1].reached_dim,
                        r.blocks[1].su_dim
                    ),
                )
            }
            Err(e) => (false, format!("error: {e}")),
        }
    })
}

/// Criterion 6: the internal-resonance check passes at J_max = 4 and the gap
/// family memberships hold on blocks j <= 2.
pub fn criterion_resonance_lemmas() -> CriterionResult {
    timed(6, "resonance lemmas hold", || {
        let inertia = reference_inertia();
        let (ok, counterexamples) = match verify_lemma_important(&inertia, 4) {
            Ok(r) => r,
            Err(e) => return (false, format!("error: {e}")),
        };
        if !ok || !counterexamples.is_empty() {
            return (false, format!("{} internal-resonance counterexamples", counterexamples.len()));
        }
        let mut checked = 0;
        for j in 0..=2u32 {
            for g in block_gaps(j) {
                let report = match classify_resonances(&inertia, j, &g, j + 3) {
                    Ok(r) => r,
                    Err(e) => return (false, format!("error: {e}")),
                };
                let expected_ok = match g.kind() {
                    GapKind::Lambda { .. } | GapKind::Sigma { .. } => report.xi0,
                    GapKind::Eta { .. } => report.xi1,
                    GapKind::Other => true,
                };
                if !expected_ok {
                    return (
                        false,
                        format!("membership violated for gap ({}, {}) of block {j}", g.q1, g.q2),
                    );
                }
                checked += 1;
            }
        }
        (true, format!("no counterexamples at J_max=4; {checked} gap memberships verified"))
    })
}

/// Criterion 7: assembled coupling blocks agree with the quadrature oracle
/// entrywise below 1e-8 for j <= 2, all fields, three dipole classes.
pub fn criterion_oracle_equivalence() -> CriterionResult {
    timed(7, "coupling matrices match quadrature oracle", || {
        let dipoles = [genuine(), orthogonal(), Dipole::new(0.3, 0.4, 0.1).unwrap()];
        let mut max_err: f64 = 0.0;
        for j in 0..=2u32 {
            let space = BlockSpace::new(j);
            for dipole in &dipoles {
                for l in 1u8..=3 {
                    let block =
                        match assemble_block(&space, dipole, &BasisVariant::Wigner, l as usize) {
                            Ok(b) => b,
                            Err(e) => return (false, format!("error: {e}")),
                        };
                    let skew = block.skew();
                    let n = space.dim();
                    let errs: Vec<f64> = (0..n)
                        .into_par_iter()
                        .map(|r| {
                            let mut local: f64 = 0.0;
                            for c in 0..n {
                                let oracle = quadrature_oracle(
                                    &space.indices[r],
                                    &space.indices[c],
                                    dipole,
                                    l as usize,
                                )
                                .unwrap();
                                local = local.max((skew[(r, c)] - oracle).norm());
                            }
                            local
                        })
                        .collect();
                    max_err = max_err.max(errs.into_iter().fold(0.0, f64::max));
                }
            }
        }
        (max_err < 1e-8, format!("max entrywise deviation {max_err:.2e}"))
    })
}

/// Criterion 8: classical rank certificates at I2 = 2, I3 = 1.
pub fn criterion_classical_ranks() -> CriterionResult {
    timed(8, "classical bracket ranks", || {
        let acc = BodyParams {
            inertia: Inertia::new(2.0, 1.0, false),
            dipole: Dipole::new(0.3, 0.4, 0.1).unwrap(),
        };
        let states = sample_states(1000, 23);
        // Collect 1000 generic states (singular product bounded away from
        // zero); roughly half of uniform samples qualify, so draw batches.
        let mut generic_states: Vec<ClassicalState> = Vec::new();
        let mut batch = 0u64;
        while generic_states.len() < 1000 && batch < 20 {
            for s in sample_states(1000, 23 + batch) {
                if generic_states.len() < 1000
                    && singular_factors(&s, &acc).product.abs() > 1e-6
                {
                    generic_states.push(s);
                }
            }
            batch += 1;
        }
        let generic: Vec<(ClassicalState, usize)> = generic_states
            .par_iter()
            .map(|s| (*s, bracket_rank(s, &acc, 3).unwrap().rank))
            .collect();
        let full = generic.iter().filter(|(_, r)| *r == 6).count();
        if generic.is_empty() || full * 1000 < generic.len() * 999 {
            return (false, format!("accidental rank 6 at {full}/{}", generic.len()));
        }

        let gen = BodyParams { inertia: Inertia::new(2.0, 1.0, false), dipole: genuine() };
        let gen_ranks: Vec<(ClassicalState, usize)> = states
            .par_iter()
            .map(|s| (*s, bracket_rank(s, &gen, 3).unwrap().rank))
            .collect();
        let le5 = gen_ranks.iter().filter(|(_, r)| *r <= 5).count();
        let p3nz: Vec<_> = gen_ranks.iter().filter(|(s, _)| s.p[2].abs() > 1e-3).collect();
        let eq5 = p3nz.iter().filter(|(_, r)| *r == 5).count();
        let ok = le5 == gen_ranks.len() && eq5 * 100 >= p3nz.len() * 99;
        (
            ok,
            format!(
                "accidental 6 at {full}/{} generic; genuine <=5 at {le5}/1000, =5 at {eq5}/{} with P3 != 0",
                generic.len(),
                p3nz.len()
            ),
        )
    })
}

/// Criterion 9: classical conservation laws along trajectories.
pub fn criterion_classical_conservation() -> CriterionResult {
    timed(9, "classical conserved quantities", || {
        let gen = BodyParams { inertia: Inertia::new(2.0, 1.0, false), dipole: genuine() };
        let state = ClassicalState::new([0.5, 0.5, 0.5, 0.5], [1.0, -0.7, 0.4]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let segments: Vec<Segment> = (0..10)
            .map(|_| Segment {
                duration: 1.0,
                u: [
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ],
            })
            .collect();
        let pulse = ControlPulse::new(segments, 1.0).unwrap();
        let traj = match integrate(&state, &pulse, &gen, 1e-3) {
            Ok(t) => t,
            Err(e) => return (false, format!("error: {e}")),
        };
        let p3_drift = traj
            .iter()
            .map(|(_, s)| (s.p[2] - state.p[2]).abs())
            .fold(0.0f64, f64::max);

        let zero = ControlPulse::new(vec![Segment { duration: 10.0, u: [0.0; 3] }], 1.0).unwrap();
        let free = match integrate(&state, &zero, &gen, 1e-3) {
            Ok(t) => t,
            Err(e) => return (false, format!("error: {e}")),
        };
        let energy = |s: &ClassicalState| {
            0.5 * (s.p[0] * s.p[0] / 2.0 + s.p[1] * s.p[1] / 2.0 + s.p[2] * s.p[2])
        };
        let norm2 = |s: &ClassicalState| s.p.iter().map(|x| x * x).sum::<f64>();
        let (_, last) = free.last().unwrap();
        let e_drift = (energy(last) - energy(&state)).abs();
        let n_drift = (norm2(last) - norm2(&state)).abs();
        (
            p3_drift < 1e-9 && e_drift < 1e-9 && n_drift < 1e-9,
            format!("P3 drift {p3_drift:.2e}, energy drift {e_drift:.2e}, |P|^2 drift {n_drift:.2e}"),
        )
    })
}

/// Criterion 10: composed propagators stay unitary below 1e-9.
pub fn criterion_unitarity() -> CriterionResult {
    timed(10, "propagator unitarity", || {
        let inertia = reference_inertia();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut max_defect: f64 = 0.0;
        for dipole in [genuine(), orthogonal(), accidental()] {
            let ham = match Hamiltonian::on_levels(2, &dipole, &inertia) {
                Ok(h) => h,
                Err(e) => return (false, format!("error: {e}")),
            };
            let n = ham.dim();
            for _ in 0..5 {
                let mut u = DMatrix::identity(n, n);
                for _ in 0..10 {
                    let controls = [
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    ];
                    let dt = rng.gen_range(0.01..0.3);
                    let mut m = DMatrix::zeros(n, n);
                    for i in 0..n {
                        m[(i, i)] = Complex64::new(ham.h0[i], 0.0);
                    }
                    for l in 0..3 {
                        m += ham.b[l].map(|z| z * controls[l]);
                    }
                    u = expm(&m.map(|z| Complex64::new(0.0, -dt) * z)) * u;
                }
                max_defect =
                    max_defect.max((u.adjoint() * &u - DMatrix::identity(n, n)).norm());
            }
        }
        (max_defect < 1e-9, format!("max unitarity defect {max_defect:.2e}"))
    })
}

/// Criterion 11: the three-wave protocol separates the dipole classes.
pub fn criterion_three_wave() -> CriterionResult {
    timed(11, "three-wave mixing breaks +-k symmetry", || {
        let inertia = reference_inertia();
        let params = ThreeWaveParams::default();
        let acc = match three_wave_mixing_demo(1, 1, 0, &accidental(), &inertia, &params) {
            Ok(t) => t,
            Err(e) => return (false, format!("error: {e}")),
        };
        let gen = match three_wave_mixing_demo(1, 1, 0, &genuine(), &inertia, &params) {
            Ok(t) => t,
            Err(e) => return (false, format!("error: {e}")),
        };
        let gen_max = gen
            .samples
            .iter()
            .map(|(_, p, q, _)| (p - q).abs())
            .fold(0.0f64, f64::max);
        (
            acc.final_asymmetry > 0.1 && gen_max < 1e-6,
            format!(
                "accidental asymmetry {:.3}, genuine max {gen_max:.2e} (thresholds are artifact targets)",
                acc.final_asymmetry
            ),
        )
    })
}

/// Run the suite; `Fast` skips the j = 1 closure (criterion 2).
pub fn run_suite(suite: Suite) -> Vec<CriterionResult> {
    let mut results = vec![criterion_block_closure_j0()];
    if suite == Suite::Full {
        results.push(criterion_block_closure_j1());
    }
    results.extend([
        criterion_genuine_symmetry(),
        criterion_parity_symmetry(),
        criterion_restricted_sk(),
        criterion_resonance_lemmas(),
        criterion_oracle_equivalence(),
        criterion_classical_ranks(),
        criterion_classical_conservation(),
        criterion_unitarity(),
        criterion_three_wave(),
    ]);
    results
}
