//! su(n) machinery: generalized Pauli matrices, spectral-gap masking,
//! phase modulation, excited-mode sets, numerical Lie closure, minimal
//! ideals, and the block-wise controllability verdict.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisIndex, BasisVariant, BlockSpace};
use crate::coupling::{assemble_block, CouplingBlock, Dipole, DipoleClass};
use crate::error::{Result, SymtopError};
use crate::spectrum::{classify_resonances, energy, GapCoeff, Inertia, TransitionLocation};

/// e_{a,b}: the matrix unit with a single 1 at (a, b).
pub fn matrix_unit(n: usize, a: usize, b: usize) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(n, n);
    m[(a, b)] = Complex64::new(1.0, 0.0);
    m
}

/// G_{a,b} = e_{a,b} - e_{b,a}.
pub fn pauli_g(n: usize, a: usize, b: usize) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(n, n);
    m[(a, b)] = Complex64::new(1.0, 0.0);
    m[(b, a)] = Complex64::new(-1.0, 0.0);
    m
}

/// F_{a,b} = i e_{a,b} + i e_{b,a}.
pub fn pauli_f(n: usize, a: usize, b: usize) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(n, n);
    m[(a, b)] = Complex64::new(0.0, 1.0);
    m[(b, a)] = Complex64::new(0.0, 1.0);
    m
}

/// D_{a,b} = i e_{a,a} - i e_{b,b}.
pub fn pauli_d(n: usize, a: usize, b: usize) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(n, n);
    m[(a, a)] = Complex64::new(0.0, 1.0);
    m[(b, b)] = Complex64::new(0.0, -1.0);
    m
}

/// Commutator [a, b] = ab - ba.
pub fn bracket(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a * b - b * a
}

/// Flatten a complex matrix into a real vector of length 2n^2 so that the
/// Euclidean inner product equals Re tr(A^dagger B).
fn flatten(m: &DMatrix<Complex64>) -> DVector<f64> {
    let n2 = m.nrows() * m.ncols();
    let mut v = DVector::zeros(2 * n2);
    for (i, z) in m.iter().enumerate() {
        v[2 * i] = z.re;
        v[2 * i + 1] = z.im;
    }
    v
}

fn skew_defect(m: &DMatrix<Complex64>) -> f64 {
    let mut defect: f64 = 0.0;
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            defect += (m[(r, c)] + m[(c, r)].conj()).norm_sqr();
        }
    }
    defect.sqrt()
}

/// An orthonormalized basis (under Re tr(A^dagger B)) of a subspace of su(n).
#[derive(Debug, Clone)]
pub struct LieSpan {
    pub n: usize,
    pub basis: Vec<DMatrix<Complex64>>,
    pub tol: f64,
    /// Flattened basis vectors, one per row, kept in sync with `basis`.
    rows: Vec<DVector<f64>>,
}

impl LieSpan {
    fn empty(n: usize, tol: f64) -> Self {
        LieSpan { n, basis: Vec::new(), tol, rows: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Residual norm of `m` after projection onto the span.
    pub fn residual(&self, m: &DMatrix<Complex64>) -> f64 {
        let mut v = flatten(m);
        for _ in 0..2 {
            for row in &self.rows {
                let coeff = row.dot(&v);
                v.axpy(-coeff, row, 1.0);
            }
        }
        v.norm()
    }

    /// Orthogonalize `v` against the span twice (classical Gram-Schmidt with
    /// re-orthogonalization); returns the residual vector.
    fn orthogonalize(&self, mut v: DVector<f64>) -> DVector<f64> {
        for _ in 0..2 {
            for row in &self.rows {
                let coeff = row.dot(&v);
                v.axpy(-coeff, row, 1.0);
            }
        }
        v
    }

    /// Try to add `m` as a new direction; returns true if the span grew.
    fn absorb(&mut self, m: &DMatrix<Complex64>) -> bool {
        let norm = m.norm();
        if norm < 1e-13 {
            return false;
        }
        let scaled = m.map(|z| z / norm);
        let v = self.orthogonalize(flatten(&scaled));
        let res = v.norm();
        if res <= self.tol {
            return false;
        }
        let unit = &v / res;
        // Rebuild the matrix from the orthonormalized vector to keep the
        // basis and its flattened rows exactly consistent.
        let n = self.n;
        let mut mat = DMatrix::zeros(n, n);
        for i in 0..n * n {
            mat[(i % n, i / n)] = Complex64::new(unit[2 * i], unit[2 * i + 1]);
        }
        // nalgebra iterates column-major; flatten() used iter() so index i
        // corresponds to (i % n, i / n).
        self.basis.push(mat);
        self.rows.push(unit);
        true
    }
}

/// Validate a generator set for closure computations.
fn validate_generators(generators: &[DMatrix<Complex64>], n: usize) -> Result<()> {
    for (index, g) in generators.iter().enumerate() {
        if g.nrows() != n || g.ncols() != n {
            return Err(SymtopError::DimensionMismatch {
                expected: n,
                got: g.nrows().max(g.ncols()),
            });
        }
        let scale = g.norm().max(1.0);
        let defect = skew_defect(g).max(g.trace().norm());
        if defect > 1e-9 * scale {
            return Err(SymtopError::NotSkewHermitian { index, defect });
        }
    }
    Ok(())
}

const CLOSURE_ROUND_CAP: usize = 500;
const BRACKET_CHUNK: usize = 512;

/// Default rank tolerance for closure computations.
pub const CLOSURE_TOL: f64 = 1e-9;

/// Smallest real Lie algebra containing the generators, as an orthonormal
/// span. Brackets are evaluated batch-wise (new x all) in parallel; span
/// updates are serialized. Stops early once dim su(n) = n^2 - 1 is reached.
pub fn lie_closure(generators: &[DMatrix<Complex64>], tol: f64) -> Result<LieSpan> {
    let n = generators.first().map(|g| g.nrows()).unwrap_or(0);
    validate_generators(generators, n)?;
    let mut span = LieSpan::empty(n, tol);
    for g in generators {
        span.absorb(g);
    }
    let full_dim = n * n - 1;
    let mut frontier: Vec<usize> = (0..span.dim()).collect();
    let mut rounds = 0;
    while !frontier.is_empty() && span.dim() < full_dim {
        rounds += 1;
        if rounds > CLOSURE_ROUND_CAP {
            return Err(SymtopError::ClosureBudget {
                reached: span.dim(),
                cap: full_dim,
                iterations: rounds,
            });
        }
        let pairs: Vec<(usize, usize)> = frontier
            .iter()
            .flat_map(|&a| (0..span.dim()).map(move |b| (a, b)))
            .collect();
        let mut new_frontier = Vec::new();
        for chunk in pairs.chunks(BRACKET_CHUNK) {
            let brackets: Vec<DMatrix<Complex64>> = chunk
                .par_iter()
                .map(|&(a, b)| bracket(&span.basis[a], &span.basis[b]))
                .collect();
            for m in &brackets {
                if span.absorb(m) {
                    new_frontier.push(span.dim() - 1);
                    if span.dim() == full_dim {
                        break;
                    }
                }
            }
            if span.dim() == full_dim {
                break;
            }
        }
        frontier = new_frontier;
    }
    Ok(span)
}

/// Smallest subspace of `nu1_span` containing `nu0` and closed under
/// bracketing with all of `nu1_span`.
pub fn minimal_ideal(
    nu0: &[DMatrix<Complex64>],
    nu1_span: &LieSpan,
    tol: f64,
) -> Result<LieSpan> {
    let n = nu1_span.n;
    validate_generators(nu0, n)?;
    for g in nu0 {
        let norm = g.norm();
        if norm < 1e-13 {
            continue;
        }
        let res = nu1_span.residual(&g.map(|z| z / norm));
        if res > tol.max(1e-8) {
            return Err(SymtopError::IdealSeedOutsideSpan { residual: res });
        }
    }
    let mut ideal = LieSpan::empty(n, tol);
    for g in nu0 {
        ideal.absorb(g);
    }
    let ambient_dim = nu1_span.dim();
    let mut frontier: Vec<usize> = (0..ideal.dim()).collect();
    let mut rounds = 0;
    while !frontier.is_empty() && ideal.dim() < ambient_dim {
        rounds += 1;
        if rounds > CLOSURE_ROUND_CAP {
            return Err(SymtopError::ClosureBudget {
                reached: ideal.dim(),
                cap: ambient_dim,
                iterations: rounds,
            });
        }
        let pairs: Vec<(usize, usize)> = frontier
            .iter()
            .flat_map(|&t| (0..ambient_dim).map(move |b| (t, b)))
            .collect();
        let mut new_frontier = Vec::new();
        for chunk in pairs.chunks(BRACKET_CHUNK) {
            let brackets: Vec<DMatrix<Complex64>> = chunk
                .par_iter()
                .map(|&(t, b)| bracket(&nu1_span.basis[b], &ideal.basis[t]))
                .collect();
            for m in &brackets {
                if ideal.absorb(m) {
                    new_frontier.push(ideal.dim() - 1);
                    if ideal.dim() == ambient_dim {
                        break;
                    }
                }
            }
            if ideal.dim() == ambient_dim {
                break;
            }
        }
        frontier = new_frontier;
    }
    Ok(ideal)
}

/// Keep only the entries of `m` whose exact spectral gap equals `sigma`.
pub fn extract_e(
    sigma: &GapCoeff,
    m: &DMatrix<Complex64>,
    indices: &[BasisIndex],
) -> DMatrix<Complex64> {
    let n = indices.len();
    let mut out = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let g = GapCoeff::from_transition(
                (indices[a].j, indices[a].k),
                (indices[b].j, indices[b].k),
            );
            if g == *sigma {
                out[(a, b)] = m[(a, b)];
            }
        }
    }
    out
}

/// Phase-modulate `m`: entry (a, b) is multiplied by conj(xi) if E_a < E_b,
/// by xi if E_a > E_b, and zeroed if the energies are exactly equal
/// (equality decided on the exact invariants (j, k^2)). The orientation is
/// fixed so that W_i(G_{a,b}) = -F_{a,b} for E_a < E_b; the opposite
/// orientation is W applied at conj(xi) and spans the same set of modes.
pub fn apply_w(
    xi: Complex64,
    m: &DMatrix<Complex64>,
    indices: &[BasisIndex],
    inertia: &Inertia,
) -> DMatrix<Complex64> {
    let n = indices.len();
    let mut out = DMatrix::zeros(n, n);
    for a in 0..n {
        let ea = energy(inertia, indices[a].j, indices[a].k).unwrap();
        for b in 0..n {
            let equal = indices[a].j == indices[b].j
                && indices[a].k * indices[a].k == indices[b].k * indices[b].k;
            if equal {
                continue;
            }
            let eb = energy(inertia, indices[b].j, indices[b].k).unwrap();
            let factor = if ea < eb { xi.conj() } else { xi };
            out[(a, b)] = factor * m[(a, b)];
        }
    }
    out
}

/// One excited mode: the gap it was extracted at, the field index, the
/// modulation phase, and the resulting skew-Hermitian matrix.
#[derive(Debug, Clone)]
pub struct ExcitedMode {
    pub gap: GapCoeff,
    pub l_index: u8,
    pub xi: Complex64,
    pub matrix: DMatrix<Complex64>,
}

/// Excited-mode sets of a block: modes0 from gap/field pairs resonating only
/// inside M_j, modes1 from pairs whose resonances never cross the boundary.
#[derive(Debug, Clone)]
pub struct ExcitedModeSet {
    pub j: u32,
    pub modes0: Vec<ExcitedMode>,
    pub modes1: Vec<ExcitedMode>,
}

/// Whether field l structurally couples a transition with the given index
/// changes, for the given dipole class: B_1, B_2 change m by +-1, B_3
/// conserves m; an axial dipole conserves k, an orthogonal one always moves
/// k by +-1.
fn couples(class: DipoleClass, l_index: u8, dk: i32, dm: i32) -> bool {
    if dk.abs() > 1 || dm.abs() > 1 {
        return false;
    }
    let m_ok = match l_index {
        1 | 2 => dm.abs() == 1,
        _ => dm == 0,
    };
    let k_ok = match class {
        DipoleClass::Genuine => dk == 0,
        DipoleClass::Orthogonal => dk.abs() == 1,
        DipoleClass::GenericAccidental => true,
    };
    m_ok && k_ok
}

/// Build the excited-mode sets nu_j^0 and nu_j^1 from the three coupling
/// blocks, classifying every candidate gap exactly.
pub fn excited_modes(
    j: u32,
    blocks: &[CouplingBlock; 3],
    inertia: &Inertia,
) -> Result<ExcitedModeSet> {
    if !inertia.resonance_exact {
        return Err(SymtopError::ExactModeRequired);
    }
    let space = &blocks[0].space;
    let indices = &space.indices;
    let class = {
        // The dipole class is recoverable from the structural zero pattern;
        // blocks built by assemble_block carry it via their sparsity. We
        // derive it from which entries are numerically present.
        derive_class(blocks)
    };
    // Candidate gaps: every nonzero exact gap between selection-rule pairs
    // inside the block.
    let mut gaps: Vec<GapCoeff> = Vec::new();
    for a in indices.iter() {
        for b in indices.iter() {
            let dl = b.j as i32 - a.j as i32;
            let dk = b.k - a.k;
            if dl.abs() > 1 || dk.abs() > 1 {
                continue;
            }
            let g = GapCoeff::from_transition((a.j, a.k), (b.j, b.k));
            if g.is_zero() || gaps.contains(&g) {
                continue;
            }
            gaps.push(g);
        }
    }
    let j_window = j + 3;
    let mut modes0 = Vec::new();
    let mut modes1 = Vec::new();
    for sigma in &gaps {
        let report = classify_resonances(inertia, j, sigma, j_window)?;
        for (bi, block) in blocks.iter().enumerate() {
            let l_index = block.l_index;
            // Membership of (sigma, l) in Xi^0 / Xi^1 counts only the
            // resonant transitions the field actually couples.
            let mut xi0 = true;
            let mut xi1 = true;
            for t in &report.transitions {
                let dk = t.to.k - t.from.k;
                let dm = t.to.m - t.from.m;
                if !couples(class, l_index, dk, dm) {
                    continue;
                }
                match t.location {
                    TransitionLocation::Inside => {}
                    TransitionLocation::Boundary => {
                        xi0 = false;
                        xi1 = false;
                    }
                    TransitionLocation::Outside => {
                        xi0 = false;
                    }
                }
            }
            if !xi1 {
                continue;
            }
            let skew = blocks[bi].skew();
            let masked = extract_e(sigma, &skew, indices);
            if masked.norm() < 1e-13 {
                continue;
            }
            for xi in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
                let mat = apply_w(xi, &masked, indices, inertia);
                if mat.norm() < 1e-13 {
                    continue;
                }
                let mode = ExcitedMode { gap: *sigma, l_index, xi, matrix: mat };
                if xi0 {
                    modes0.push(mode.clone());
                }
                modes1.push(mode);
            }
        }
    }
    Ok(ExcitedModeSet { j, modes0, modes1 })
}

/// Recover the dipole class from the structural zero pattern of the blocks.
fn derive_class(blocks: &[CouplingBlock; 3]) -> DipoleClass {
    let indices = &blocks[0].space.indices;
    let mut has_dk1 = false;
    let mut has_dk0 = false;
    for block in blocks.iter() {
        for (r, a) in indices.iter().enumerate() {
            for (c, b) in indices.iter().enumerate() {
                if block.matrix[(r, c)].norm() > 1e-13 {
                    if (b.k - a.k).abs() == 1 {
                        has_dk1 = true;
                    }
                    if b.k == a.k {
                        has_dk0 = true;
                    }
                }
            }
        }
    }
    match (has_dk1, has_dk0) {
        (true, true) => DipoleClass::GenericAccidental,
        (true, false) => DipoleClass::Orthogonal,
        _ => DipoleClass::Genuine,
    }
}

/// Per-block outcome of the controllability check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockReport {
    pub j: u32,
    pub n: usize,
    pub su_dim: usize,
    pub reached_dim: usize,
    pub status: String,
}

/// Verdict of the graph-plus-ideals controllability test.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "detail")]
pub enum Verdict {
    /// Every block ideal reaches su(n_j) and the block graph is connected.
    MTracker,
    /// A conserved quantity rules out controllability.
    SymmetryBlocked(String),
    /// Neither certificate fired (budget, truncation, or genuinely unknown).
    Inconclusive,
}

/// Full machine-readable result of `lgtc_verdict`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerdictReport {
    pub verdict: Verdict,
    pub blocks: Vec<BlockReport>,
    pub graph_connected: bool,
}

/// Controllability verdict over blocks j = 0 .. J_max-1: connectivity of the
/// level-overlap graph plus per-block minimal ideals reaching su(n_j).
pub fn lgtc_verdict(j_max: u32, dipole: &Dipole, inertia: &Inertia) -> Result<VerdictReport> {
    if !inertia.resonance_exact {
        return Err(SymtopError::ExactModeRequired);
    }
    assert!(j_max >= 1, "J_max must be at least 1");
    match dipole.class() {
        DipoleClass::Genuine => {
            return Ok(VerdictReport {
                verdict: Verdict::SymmetryBlocked("k-invariance".into()),
                blocks: Vec::new(),
                graph_connected: true,
            });
        }
        DipoleClass::Orthogonal => {
            return Ok(VerdictReport {
                verdict: Verdict::SymmetryBlocked("parity conservation".into()),
                blocks: Vec::new(),
                graph_connected: true,
            });
        }
        DipoleClass::GenericAccidental => {}
    }
    // Blocks I_j = {j, j+1} pairwise intersect iff |j - j'| <= 1, so the
    // graph over consecutive j is connected; verified explicitly.
    let graph_connected = (1..j_max).all(|j| {
        let prev = [j - 1, j];
        let cur = [j, j + 1];
        prev.iter().any(|a| cur.contains(a))
    });
    let mut blocks_out = Vec::new();
    let mut all_full = true;
    for j in 0..j_max {
        let space = BlockSpace::new(j);
        let n = space.dim();
        let su_dim = n * n - 1;
        let blocks: [CouplingBlock; 3] = [
            assemble_block(&space, dipole, &BasisVariant::Wigner, 1)?,
            assemble_block(&space, dipole, &BasisVariant::Wigner, 2)?,
            assemble_block(&space, dipole, &BasisVariant::Wigner, 3)?,
        ];
        let modes = excited_modes(j, &blocks, inertia)?;
        let nu0: Vec<DMatrix<Complex64>> =
            modes.modes0.iter().map(|m| m.matrix.clone()).collect();
        let nu1: Vec<DMatrix<Complex64>> =
            modes.modes1.iter().map(|m| m.matrix.clone()).collect();
        let (reached, status) = match lie_closure(&nu1, CLOSURE_TOL) {
            Ok(nu1_span) => match minimal_ideal(&nu0, &nu1_span, CLOSURE_TOL) {
                Ok(ideal) => {
                    let d = ideal.dim();
                    let status = if d == su_dim { "full" } else { "partial" };
                    (d, status.to_string())
                }
                Err(e) => (0, format!("ideal failed: {e}")),
            },
            Err(e) => (0, format!("closure failed: {e}")),
        };
        if reached != su_dim {
            all_full = false;
        }
        blocks_out.push(BlockReport { j, n, su_dim, reached_dim: reached, status });
    }
    let verdict = if graph_connected && all_full {
        Verdict::MTracker
    } else {
        Verdict::Inconclusive
    };
    Ok(VerdictReport { verdict, blocks: blocks_out, graph_connected })
}
