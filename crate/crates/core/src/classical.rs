//! Controlled classical dynamics of the symmetric top on SO(3) x R^3,
//! lifted to the quaternion double cover S^3 x R^3 where every vector field
//! is polynomial: drift and control fields, an RK4 integrator, conserved
//! quantities, Lie-bracket rank certificates, and the singular-set factors.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coupling::Dipole;
use crate::error::{Result, SymtopError};
use crate::quantum::ControlPulse;
use crate::spectrum::Inertia;

/// Ambient coordinates: (q0, q1, q2, q3, P1, P2, P3).
pub const AMBIENT_DIM: usize = 7;

/// A polynomial in the seven ambient coordinates with real coefficients.
/// Differentiation is exact, so bracket computations carry no finite
/// difference noise into rank decisions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Poly {
    /// Monomial exponents -> coefficient; zero coefficients are pruned.
    terms: BTreeMap<[u8; AMBIENT_DIM], f64>,
}

impl Poly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        let mut p = Self::default();
        if c != 0.0 {
            p.terms.insert([0; AMBIENT_DIM], c);
        }
        p
    }

    pub fn var(i: usize) -> Self {
        let mut e = [0u8; AMBIENT_DIM];
        e[i] = 1;
        let mut p = Self::default();
        p.terms.insert(e, 1.0);
        p
    }

    fn insert(&mut self, e: [u8; AMBIENT_DIM], c: f64) {
        let entry = self.terms.entry(e).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.terms.remove(&e);
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (&e, &c) in &other.terms {
            out.insert(e, c);
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Poly {
        if s == 0.0 {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(&e, &c)| (e, c * s)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (&ea, &ca) in &self.terms {
            for (&eb, &cb) in &other.terms {
                let mut e = ea;
                for i in 0..AMBIENT_DIM {
                    e[i] += eb[i];
                }
                out.insert(e, ca * cb);
            }
        }
        out
    }

    /// Exact partial derivative with respect to coordinate `i`.
    pub fn diff(&self, i: usize) -> Poly {
        let mut out = Poly::zero();
        for (&e, &c) in &self.terms {
            if e[i] > 0 {
                let mut d = e;
                d[i] -= 1;
                out.insert(d, c * e[i] as f64);
            }
        }
        out
    }

    pub fn eval(&self, x: &[f64; AMBIENT_DIM]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                c * e
                    .iter()
                    .zip(x.iter())
                    .map(|(&p, &v)| v.powi(p as i32))
                    .product::<f64>()
            })
            .sum()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

/// A polynomial vector field on the seven ambient coordinates.
#[derive(Debug, Clone)]
pub struct VectorField(pub [Poly; AMBIENT_DIM]);

impl VectorField {
    pub fn eval(&self, x: &[f64; AMBIENT_DIM]) -> [f64; AMBIENT_DIM] {
        std::array::from_fn(|i| self.0[i].eval(x))
    }

    /// Lie bracket [v, w] = (Dw) v - (Dv) w with exact Jacobians.
    pub fn bracket(&self, other: &VectorField) -> VectorField {
        let comp = |i: usize| {
            let mut acc = Poly::zero();
            for j in 0..AMBIENT_DIM {
                acc = acc.add(&other.0[i].diff(j).mul(&self.0[j]));
                acc = acc.sub(&self.0[i].diff(j).mul(&other.0[j]));
            }
            acc
        };
        VectorField(std::array::from_fn(comp))
    }
}

/// Body data: inertia moments (I1 = I2) and the dipole in the body frame.
#[derive(Debug, Clone)]
pub struct BodyParams {
    pub inertia: Inertia,
    pub dipole: Dipole,
}

/// Attitude (unit quaternion, double cover of SO(3)) plus body-frame angular
/// momentum.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ClassicalState {
    pub q: [f64; 4],
    pub p: [f64; 3],
}

impl ClassicalState {
    pub fn new(q: [f64; 4], p: [f64; 3]) -> Result<Self> {
        let norm = (q.iter().map(|x| x * x).sum::<f64>()).sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(SymtopError::Config(format!(
                "quaternion norm {norm} is not 1"
            )));
        }
        Ok(Self { q, p })
    }

    pub fn coords(&self) -> [f64; AMBIENT_DIM] {
        [
            self.q[0], self.q[1], self.q[2], self.q[3], self.p[0], self.p[1], self.p[2],
        ]
    }

    fn from_coords(x: &[f64; AMBIENT_DIM]) -> Self {
        Self {
            q: [x[0], x[1], x[2], x[3]],
            p: [x[4], x[5], x[6]],
        }
    }

    fn renormalize(&mut self) {
        let norm = (self.q.iter().map(|x| x * x).sum::<f64>()).sqrt();
        for c in &mut self.q {
            *c /= norm;
        }
    }
}

/// Quaternion product of two symbolic quaternions.
fn qmul(a: &[Poly; 4], b: &[Poly; 4]) -> [Poly; 4] {
    [
        a[0].mul(&b[0])
            .sub(&a[1].mul(&b[1]))
            .sub(&a[2].mul(&b[2]))
            .sub(&a[3].mul(&b[3])),
        a[0].mul(&b[1])
            .add(&a[1].mul(&b[0]))
            .add(&a[2].mul(&b[3]))
            .sub(&a[3].mul(&b[2])),
        a[0].mul(&b[2])
            .sub(&a[1].mul(&b[3]))
            .add(&a[2].mul(&b[0]))
            .add(&a[3].mul(&b[1])),
        a[0].mul(&b[3])
            .add(&a[1].mul(&b[2]))
            .sub(&a[2].mul(&b[1]))
            .add(&a[3].mul(&b[0])),
    ]
}

/// The drift X(q, P) = (q * betaP, P x betaP) as an exact polynomial field,
/// with beta = diag(1/I2, 1/I2, 1/I3).
pub fn drift_field(params: &BodyParams) -> VectorField {
    let (i2, i3) = (params.inertia.i2, params.inertia.i3);
    let q: [Poly; 4] = std::array::from_fn(Poly::var);
    let beta_p = [
        Poly::zero(),
        Poly::var(4).scale(1.0 / i2),
        Poly::var(5).scale(1.0 / i2),
        Poly::var(6).scale(1.0 / i3),
    ];
    let qdot = qmul(&q, &beta_p);
    let p2p3 = Poly::var(5).mul(&Poly::var(6));
    let p1p3 = Poly::var(4).mul(&Poly::var(6));
    VectorField([
        qdot[0].clone(),
        qdot[1].clone(),
        qdot[2].clone(),
        qdot[3].clone(),
        p2p3.scale(1.0 / i3 - 1.0 / i2),
        p1p3.scale(1.0 / i2 - 1.0 / i3),
        Poly::zero(),
    ])
}

/// The control field Y_l(q, P) = (0, (1/2)[conj(q) e_l q, delta]) as an
/// exact polynomial field; the momentum part equals (g^{-1} e_l) x delta.
pub fn control_field(params: &BodyParams, l_index: u8) -> VectorField {
    assert!((1..=3).contains(&l_index));
    let q: [Poly; 4] = std::array::from_fn(Poly::var);
    let qbar = [
        q[0].clone(),
        q[1].scale(-1.0),
        q[2].scale(-1.0),
        q[3].scale(-1.0),
    ];
    let mut e = [
        Poly::zero(),
        Poly::zero(),
        Poly::zero(),
        Poly::zero(),
    ];
    e[l_index as usize] = Poly::constant(1.0);
    let v = qmul(&qmul(&qbar, &e), &q);
    // v x delta on the pure-quaternion part of v = g^{-1} e_l; the overall
    // normalization of a control field is immaterial (the controls absorb
    // it), and this one makes the momentum part exactly (g^{-1} e_l) x delta.
    let d = params.dipole.as_array();
    let cross = |a: usize, b: usize, da: f64, db: f64| {
        v[a].scale(db).sub(&v[b].scale(da))
    };
    VectorField([
        Poly::zero(),
        Poly::zero(),
        Poly::zero(),
        Poly::zero(),
        cross(2, 3, d[1], d[2]),
        cross(3, 1, d[2], d[0]),
        cross(1, 2, d[0], d[1]),
    ])
}

/// Tangent vector returned by the field evaluators.
#[derive(Debug, Clone, Copy)]
pub struct Tangent {
    pub q_dot: [f64; 4],
    pub p_dot: [f64; 3],
}

fn split(x: [f64; AMBIENT_DIM]) -> Tangent {
    Tangent {
        q_dot: [x[0], x[1], x[2], x[3]],
        p_dot: [x[4], x[5], x[6]],
    }
}

pub fn drift_x(state: &ClassicalState, params: &BodyParams) -> Tangent {
    split(drift_field(params).eval(&state.coords()))
}

pub fn control_y(state: &ClassicalState, params: &BodyParams, l_index: u8) -> Tangent {
    split(control_field(params, l_index).eval(&state.coords()))
}

/// Integrate the controlled system with classical RK4, renormalizing the
/// quaternion after every step. Returns samples (t, state) at step
/// boundaries.
pub fn integrate(
    state0: &ClassicalState,
    pulse: &ControlPulse,
    params: &BodyParams,
    step: f64,
) -> Result<Vec<(f64, ClassicalState)>> {
    if step <= 0.0 {
        return Err(SymtopError::Config("step must be positive".into()));
    }
    let x = drift_field(params);
    let ys = [1u8, 2, 3].map(|l| control_field(params, l));
    let mut out = vec![(0.0, *state0)];
    let mut state = *state0;
    let mut t = 0.0;
    for seg in &pulse.segments {
        let f = |x0: &[f64; AMBIENT_DIM]| -> [f64; AMBIENT_DIM] {
            let mut v = x.eval(x0);
            for (l, y) in ys.iter().enumerate() {
                if seg.u[l] != 0.0 {
                    let w = y.eval(x0);
                    for i in 0..AMBIENT_DIM {
                        v[i] += seg.u[l] * w[i];
                    }
                }
            }
            v
        };
        let steps = (seg.duration / step).round().max(1.0) as usize;
        let h = seg.duration / steps as f64;
        for _ in 0..steps {
            let x0 = state.coords();
            let k1 = f(&x0);
            let k2 = f(&advance(&x0, &k1, h / 2.0));
            let k3 = f(&advance(&x0, &k2, h / 2.0));
            let k4 = f(&advance(&x0, &k3, h));
            let mut x1 = x0;
            for i in 0..AMBIENT_DIM {
                x1[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            state = ClassicalState::from_coords(&x1);
            state.renormalize();
            t += h;
        }
        out.push((t, state));
    }
    Ok(out)
}

fn advance(
    x: &[f64; AMBIENT_DIM],
    v: &[f64; AMBIENT_DIM],
    h: f64,
) -> [f64; AMBIENT_DIM] {
    std::array::from_fn(|i| x[i] + h * v[i])
}

/// Rank certificate at a state: the span of the bracket family restricted to
/// the 6-dimensional tangent space of S^3 x R^3, plus the two projected
/// families used in the reachable-set analysis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankReport {
    pub rank: usize,
    pub singular_values: Vec<f64>,
    /// Rank of the S^3 projections of {X, [X,Y1], [X,Y2], [X,Y3]}.
    pub so3_rank: usize,
    /// Rank of the R^3 projections of {Y1, Y2, Y3}.
    pub r3_rank: usize,
}

const RANK_TOL: f64 = 1e-8;

fn rank_of(rows: &[Vec<f64>]) -> (usize, Vec<f64>) {
    let m = DMatrix::from_fn(rows.len(), rows[0].len(), |r, c| rows[r][c]);
    let svd = m.svd(false, false);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let smax = sv.first().copied().unwrap_or(0.0);
    let rank = sv.iter().filter(|&&s| s > RANK_TOL * smax && smax > 0.0).count();
    (rank, sv)
}

/// Project the quaternion part of an ambient vector onto T_q S^3 by removing
/// the component along q (the normal direction of the sphere).
fn project_tangent(x: &[f64; AMBIENT_DIM], v: &[f64; AMBIENT_DIM]) -> [f64; AMBIENT_DIM] {
    let dot: f64 = (0..4).map(|i| x[i] * v[i]).sum();
    let mut out = *v;
    for i in 0..4 {
        out[i] -= dot * x[i];
    }
    out
}

/// Evaluate the bracket family at a state and report the certified ranks.
/// Depth 2 uses {X, Y1, Y2, Y3, [X,Y1], [X,Y2], [X,Y3]}; depth >= 3 appends
/// [[X,Y1],Y1], completing the six fields of the controllability
/// certificate.
pub fn bracket_rank(
    state: &ClassicalState,
    params: &BodyParams,
    depth: usize,
) -> Result<RankReport> {
    if depth < 2 {
        return Err(SymtopError::Config("bracket depth must be at least 2".into()));
    }
    let x = drift_field(params);
    let ys = [1u8, 2, 3].map(|l| control_field(params, l));
    let xy: Vec<VectorField> = ys.iter().map(|y| x.bracket(y)).collect();
    let mut fields: Vec<&VectorField> = vec![&x, &ys[0], &ys[1], &ys[2], &xy[0], &xy[1], &xy[2]];
    let deep;
    if depth >= 3 {
        deep = xy[0].bracket(&ys[0]);
        fields.push(&deep);
    }
    let coords = state.coords();
    let rows: Vec<Vec<f64>> = fields
        .iter()
        .map(|f| project_tangent(&coords, &f.eval(&coords)).to_vec())
        .collect();
    let (rank, singular_values) = rank_of(&rows);

    let so3_rows: Vec<Vec<f64>> = [&x, &xy[0], &xy[1], &xy[2]]
        .iter()
        .map(|f| project_tangent(&coords, &f.eval(&coords))[0..4].to_vec())
        .collect();
    let (so3_rank, _) = rank_of(&so3_rows);
    let r3_rows: Vec<Vec<f64>> = ys
        .iter()
        .map(|y| y.eval(&coords)[4..7].to_vec())
        .collect();
    let (r3_rank, _) = rank_of(&r3_rows);

    Ok(RankReport { rank, singular_values, so3_rank, r3_rank })
}

/// The five closed-form factors of the determinant of the certificate
/// family, and their product. The family is bracket generating wherever the
/// product is nonzero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SingularFactors {
    pub s: [f64; 5],
    pub product: f64,
}

pub fn singular_factors(state: &ClassicalState, params: &BodyParams) -> SingularFactors {
    let [q0, q1, q2, q3] = state.q;
    let [p1, p2, p3] = state.p;
    let d = params.dipole.as_array();
    let (i2, i3) = (params.inertia.i2, params.inertia.i3);
    let s1 = (i2 - i3) / (32.0 * i2.powi(3) * i3 * i3) * q1;
    let s2 = -2.0 * q1 * q2 * d[0] + 2.0 * q0 * q3 * d[0] + q0 * q0 * d[1] + q1 * q1 * d[1]
        - (q2 * q2 + q3 * q3) * d[1];
    let s3 = (q0 * (-2.0 * q2 * d[0] + 2.0 * q1 * d[1])
        + 2.0 * q3 * (q1 * d[0] + q2 * d[1])
        + (q0 * q0 - q1 * q1 - q2 * q2 + q3 * q3) * d[2])
        .powi(2);
    let s4 = -2.0 * (q0 * q2 + q1 * q3) * (d[0] * d[0] + d[1] * d[1])
        + ((q0 * q0 + q1 * q1 - q2 * q2 - q3 * q3) * d[0] + 2.0 * (q1 * q2 - q0 * q3) * d[1])
            * d[2];
    let s5 = p1 * d[0] + p2 * d[1] + p3 * d[2];
    let s = [s1, s2, s3, s4, s5];
    SingularFactors { s, product: s.iter().product() }
}

/// Draw `n` states with uniformly random attitudes and momenta in a box.
pub fn sample_states(n: usize, seed: u64) -> Vec<ClassicalState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut q = [0.0; 4];
            loop {
                for c in &mut q {
                    *c = rng.gen_range(-1.0..1.0);
                }
                let norm = q.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm > 1e-3 {
                    for c in &mut q {
                        *c /= norm;
                    }
                    break;
                }
            }
            let p = [0; 3].map(|_| rng.gen_range(-2.0..2.0));
            ClassicalState { q, p }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::Segment;
    use approx::assert_abs_diff_eq;

    fn params(i2: f64, i3: f64, d: (f64, f64, f64)) -> BodyParams {
        BodyParams {
            inertia: Inertia::new(i2, i3, false),
            dipole: Dipole::new(d.0, d.1, d.2).unwrap(),
        }
    }

    #[test]
    fn drift_momentum_examples() {
        // Spherical top: beta P is parallel to P, so P x beta P vanishes.
        let p = params(1.5, 1.5, (0.1, 0.2, 0.3));
        for state in sample_states(10, 1) {
            let t = drift_x(&state, &p);
            for c in t.p_dot {
                assert_abs_diff_eq!(c, 0.0, epsilon = 1e-12);
            }
        }

        let p = params(2.0, 1.0, (0.1, 0.2, 0.3));
        let state = ClassicalState::new([1.0, 0.0, 0.0, 0.0], [1.0, 2.0, 3.0]).unwrap();
        let t = drift_x(&state, &p);
        assert_abs_diff_eq!(t.p_dot[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.p_dot[1], -1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(t.p_dot[2], 0.0, epsilon = 1e-12);

        // P3 never moves under the drift of a symmetric top.
        for state in sample_states(20, 2) {
            assert_abs_diff_eq!(drift_x(&state, &p).p_dot[2], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn control_field_examples() {
        // Identity attitude, axial dipole: (e_1) x (0,0,1) = (0,-1,0).
        let p = params(2.0, 1.0, (0.0, 0.0, 1.0));
        let state = ClassicalState::new([1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0]).unwrap();
        let t = control_y(&state, &p, 1);
        assert_eq!(t.q_dot, [0.0; 4]);
        assert_abs_diff_eq!(t.p_dot[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.p_dot[1], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.p_dot[2], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn control_fields_match_printed_components() {
        // Y1 and Y2 momentum components written out by hand (stated in the
        // half-commutator normalization, hence the factor 2 below).
        let d = (0.3, 0.4, 0.1);
        let p = params(2.0, 1.0, d);
        let y1 = control_field(&p, 1);
        let y2 = control_field(&p, 2);
        for state in sample_states(25, 3) {
            let [q0, q1, q2, q3] = state.q;
            let x = state.coords();
            let expected1 = [
                (q1 * q2 - q0 * q3) * d.2 - (q1 * q3 + q0 * q2) * d.1,
                (q1 * q3 + q0 * q2) * d.0
                    - 0.5 * (q0 * q0 + q1 * q1 - q2 * q2 - q3 * q3) * d.2,
                0.5 * (q0 * q0 + q1 * q1 - q2 * q2 - q3 * q3) * d.1
                    - (q1 * q2 - q0 * q3) * d.0,
            ];
            let expected2 = [
                0.5 * (q0 * q0 - q1 * q1 + q2 * q2 - q3 * q3) * d.2
                    - (q2 * q3 - q0 * q1) * d.1,
                (q2 * q3 - q0 * q1) * d.0 - (q1 * q2 + q0 * q3) * d.2,
                (q1 * q2 + q0 * q3) * d.1
                    - 0.5 * (q0 * q0 - q1 * q1 + q2 * q2 - q3 * q3) * d.0,
            ];
            for i in 0..3 {
                assert_abs_diff_eq!(y1.0[4 + i].eval(&x), 2.0 * expected1[i], epsilon = 1e-12);
                assert_abs_diff_eq!(y2.0[4 + i].eval(&x), 2.0 * expected2[i], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn genuine_controls_conserve_p3_pointwise() {
        let p = params(2.0, 1.0, (0.0, 0.0, 0.7));
        for state in sample_states(20, 4) {
            for l in 1..=3 {
                assert_abs_diff_eq!(
                    control_y(&state, &p, l).p_dot[2],
                    0.0,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn control_momentum_span_is_dipole_orthogonal_plane() {
        let d = [0.3, 0.4, 0.1];
        let p = params(2.0, 1.0, (d[0], d[1], d[2]));
        for state in sample_states(10, 5) {
            let rows: Vec<Vec<f64>> = (1..=3)
                .map(|l| control_y(&state, &p, l).p_dot.to_vec())
                .collect();
            let (rank, _) = rank_of(&rows);
            assert_eq!(rank, 2);
            for row in &rows {
                let dot: f64 = row.iter().zip(d.iter()).map(|(a, b)| a * b).sum();
                assert_abs_diff_eq!(dot, 0.0, epsilon = 1e-12);
            }
        }
    }

    fn random_pulse(seed: u64, total: f64) -> ControlPulse {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
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
        ControlPulse::new(segments, 1.0).unwrap()
    }

    #[test]
    fn free_top_invariants() {
        let p = params(2.0, 1.0, (0.3, 0.4, 0.1));
        let state = ClassicalState::new([0.5, 0.5, 0.5, 0.5], [1.0, -0.7, 0.4]).unwrap();
        let zero = ControlPulse::new(
            vec![Segment { duration: 10.0, u: [0.0; 3] }],
            1.0,
        )
        .unwrap();
        let traj = integrate(&state, &zero, &p, 1e-3).unwrap();
        let energy = |s: &ClassicalState| {
            0.5 * (s.p[0] * s.p[0] / p.inertia.i2
                + s.p[1] * s.p[1] / p.inertia.i2
                + s.p[2] * s.p[2] / p.inertia.i3)
        };
        let norm2 = |s: &ClassicalState| s.p.iter().map(|x| x * x).sum::<f64>();
        let (_, last) = traj.last().unwrap();
        assert!((norm2(last) - norm2(&state)).abs() < 1e-9);
        assert!((energy(last) - energy(&state)).abs() < 1e-9);
        let qn = last.q.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((qn - 1.0).abs() < 1e-10);
    }

    #[test]
    fn genuine_pulse_conserves_p3_along_trajectories() {
        let p = params(2.0, 1.0, (0.0, 0.0, 0.7));
        let state = ClassicalState::new([0.5, 0.5, 0.5, 0.5], [1.0, -0.7, 0.4]).unwrap();
        let traj = integrate(&state, &random_pulse(6, 10.0), &p, 1e-3).unwrap();
        let drift = traj
            .iter()
            .map(|(_, s)| (s.p[2] - state.p[2]).abs())
            .fold(0.0f64, f64::max);
        assert!(drift < 1e-9, "P3 drift {drift}");
    }

    #[test]
    fn rk4_order_against_refined_reference() {
        let p = params(2.0, 1.0, (0.3, 0.4, 0.1));
        let state = ClassicalState::new([1.0, 0.0, 0.0, 0.0], [1.0, 0.5, -0.3]).unwrap();
        let pulse = random_pulse(7, 1.0);
        let endpoint = |step: f64| {
            let traj = integrate(&state, &pulse, &p, step).unwrap();
            traj.last().unwrap().1.coords()
        };
        let reference = endpoint(1e-4);
        let err = |step: f64| {
            endpoint(step)
                .iter()
                .zip(reference.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max)
        };
        let e1 = err(2e-2);
        let e2 = err(1e-2);
        let ratio = e1 / e2;
        assert!(
            ratio > 10.0 && ratio < 24.0,
            "step halving should reduce error ~16x, got {ratio}"
        );
    }

    #[test]
    fn accidental_rank_is_six_off_singular_set() {
        let p = params(2.0, 1.0, (0.3, 0.4, 0.1));
        for state in sample_states(50, 8) {
            let f = singular_factors(&state, &p);
            if f.product.abs() < 1e-6 {
                continue;
            }
            let r = bracket_rank(&state, &p, 3).unwrap();
            assert_eq!(r.rank, 6, "sv {:?}", r.singular_values);
            assert_eq!(r.so3_rank, 3);
            assert_eq!(r.r3_rank, 2);
        }
    }

    #[test]
    fn genuine_rank_is_at_most_five() {
        let p = params(2.0, 1.0, (0.0, 0.0, 0.7));
        for state in sample_states(50, 9) {
            let r = bracket_rank(&state, &p, 3).unwrap();
            assert!(r.rank <= 5, "rank {}", r.rank);
            if state.p[2].abs() > 1e-3 {
                assert_eq!(r.rank, 5);
            }
        }
    }

    #[test]
    fn singular_factor_examples() {
        let p = params(2.0, 1.0, (0.3, 0.4, 0.1));
        let state = ClassicalState::new([1.0, 0.0, 0.0, 0.0], [1.0, 0.0, 0.0]).unwrap();
        let f = singular_factors(&state, &p);
        assert_abs_diff_eq!(f.s[4], 0.3, epsilon = 1e-15);

        // q1 = 0 kills the first factor.
        assert_abs_diff_eq!(f.s[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.product, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn rank_is_stable_under_small_perturbations() {
        let p = params(2.0, 1.0, (0.3, 0.4, 0.1));
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let base = sample_states(30, 11)
            .into_iter()
            .max_by(|a, b| {
                let fa = singular_factors(a, &p).product.abs();
                let fb = singular_factors(b, &p).product.abs();
                fa.partial_cmp(&fb).unwrap()
            })
            .unwrap();
        assert_eq!(bracket_rank(&base, &p, 3).unwrap().rank, 6);
        for _ in 0..5 {
            let mut s = base;
            for c in &mut s.q {
                *c += rng.gen_range(-1e-6..1e-6);
            }
            s.renormalize();
            for c in &mut s.p {
                *c += rng.gen_range(-1e-6..1e-6);
            }
            assert_eq!(bracket_rank(&s, &p, 3).unwrap().rank, 6);
        }
    }

    #[test]
    fn equivariance_under_axis_rotation_and_field_relabeling() {
        // Left-translating the attitude by a quarter turn about e3 and
        // remapping the lab-frame fields accordingly reproduces the same
        // momentum trajectory.
        let p = params(2.0, 1.0, (0.3, 0.4, 0.1));
        let state = ClassicalState::new([0.5, 0.5, 0.5, 0.5], [1.0, -0.7, 0.4]).unwrap();
        let pulse = random_pulse(12, 2.0);
        let c = std::f64::consts::FRAC_PI_4.cos();
        let r = [c, 0.0, 0.0, c]; // rotation by pi/2 about e3
        let rq = [
            r[0] * state.q[0] - r[3] * state.q[3],
            r[0] * state.q[1] - r[3] * state.q[2],
            r[0] * state.q[2] + r[3] * state.q[1],
            r[0] * state.q[3] + r[3] * state.q[0],
        ];
        let rotated = ClassicalState::new(rq, state.p).unwrap();
        let remapped = ControlPulse::new(
            pulse
                .segments
                .iter()
                .map(|s| Segment {
                    duration: s.duration,
                    u: [-s.u[1], s.u[0], s.u[2]],
                })
                .collect(),
            pulse.u_max,
        )
        .unwrap();
        let a = integrate(&state, &pulse, &p, 1e-3).unwrap();
        let b = integrate(&rotated, &remapped, &p, 1e-3).unwrap();
        for ((_, sa), (_, sb)) in a.iter().zip(b.iter()) {
            for i in 0..3 {
                assert_abs_diff_eq!(sa.p[i], sb.p[i], epsilon = 1e-9);
            }
        }
    }
}
