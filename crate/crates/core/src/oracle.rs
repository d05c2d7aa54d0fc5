//! Independent numerical cross-check of the coupling tables.
//!
//! The interaction of the dipole with the field along the l-th space-fixed
//! axis is B_l = -<R(alpha,beta,gamma) delta, e_l>, with R the explicit Euler
//! rotation matrix. The oracle evaluates <D^j_{k,m}, i B_l D^{j'}_{k',m'}>
//! (L2 inner product over Euler angles with the normalized Haar weight,
//! conjugate-linear in the first slot — the convention was pinned empirically
//! against two closed-form entries of the pairing tables — with Wigner
//! functions scaled by sqrt(2j+1)) by quadrature, never touching the
//! closed-form coefficient tables.
//!
//! Every entry of R factorizes as a sum of terms A(alpha) B(beta) C(gamma)
//! with A, C in {1, cos, sin}. The alpha and gamma integrals are evaluated by
//! the trapezoid rule on 64 uniform nodes (exact for the low-degree
//! trigonometric polynomials involved) and the beta integral by 32-node
//! Gauss-Legendre in x = cos(beta) (exact whenever the angular integrals do
//! not vanish, since the beta integrand is then polynomial in x).

use num_complex::Complex64;

use crate::basis::BasisIndex;
use crate::coupling::Dipole;
use crate::error::{Result, SymtopError};

/// Largest j the oracle accepts; quadrature orders are tuned for this range.
pub const ORACLE_J_MAX: u32 = 3;

const N_ANGLE: usize = 64;
const N_BETA: usize = 32;

fn factorial(n: i32) -> f64 {
    (1..=n).map(|v| v as f64).product()
}

/// Small Wigner matrix d^j_{k,m}(beta) by the standard finite factorial sum:
///
/// d^j_{k,m} = sqrt[(j+k)!(j-k)!(j+m)!(j-m)!] *
///     sum_s (-1)^{k-m+s} cos(b/2)^{2j+m-k-2s} sin(b/2)^{k-m+2s}
///            / [(j+m-s)! s! (k-m+s)! (j-k-s)!]
///
/// Validated below against d^0_{0,0} = 1 and d^1_{0,0} = cos(beta).
pub fn small_d(j: u32, k: i32, m: i32, beta: f64) -> f64 {
    let ji = j as i32;
    debug_assert!(k.abs() <= ji && m.abs() <= ji);
    let c = (beta / 2.0).cos();
    let s = (beta / 2.0).sin();
    let pref = (factorial(ji + k) * factorial(ji - k) * factorial(ji + m) * factorial(ji - m))
        .sqrt();
    let s_min = 0.max(m - k);
    let s_max = (ji + m).min(ji - k);
    let mut sum = 0.0;
    for t in s_min..=s_max {
        let sign = if (k - m + t) % 2 == 0 { 1.0 } else { -1.0 };
        let denom = factorial(ji + m - t) * factorial(t) * factorial(k - m + t) * factorial(ji - k - t);
        sum += sign * c.powi(2 * ji + m - k - 2 * t) * s.powi(k - m + 2 * t) / denom;
    }
    pref * sum
}

/// Constant phase i^(m-k) relating the factorial-sum d-convention used here
/// to the convention in which the pairing tables are written. Pinned
/// empirically: with it, all assembled entries match the quadrature; without
/// it, entries with (dk - dm) = +-2 flip sign and entries with odd (dk - dm)
/// come out rotated by a quarter turn.
fn convention_phase(k: i32, m: i32) -> Complex64 {
    match (m - k).rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Full Wigner function D^j_{k,m}(alpha, beta, gamma) in the convention of
/// the pairing tables: i^(m-k) e^{i(m alpha + k gamma)} d^j_{k,m}(beta).
pub fn wigner_fn(idx: &BasisIndex, alpha: f64, beta: f64, gamma: f64) -> Complex64 {
    let phase = Complex64::new(0.0, idx.m as f64 * alpha + idx.k as f64 * gamma).exp();
    convention_phase(idx.k, idx.m) * phase * small_d(idx.j, idx.k, idx.m, beta)
}

/// Gauss-Legendre nodes and weights on [-1, 1] via Newton iteration on the
/// Legendre polynomial roots.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            // Recurrence for P_n(x) and its derivative.
            let (mut p0, mut p1) = (1.0f64, x);
            for v in 2..=n {
                let vf = v as f64;
                let p2 = ((2.0 * vf - 1.0) * x * p1 - (vf - 1.0) * p0) / vf;
                p0 = p1;
                p1 = p2;
            }
            pp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / pp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * pp * pp)));
    }
    out
}

#[derive(Clone, Copy)]
enum Trig {
    One,
    Cos,
    Sin,
}

impl Trig {
    fn eval(self, t: f64) -> f64 {
        match self {
            Trig::One => 1.0,
            Trig::Cos => t.cos(),
            Trig::Sin => t.sin(),
        }
    }
}

/// One separable term sign * A(alpha) B(beta) C(gamma) of a rotation-matrix
/// entry.
type RTerm = (f64, Trig, Trig, Trig);

/// R[l][t] as lists of separable terms; row l: space-fixed axis, column t:
/// body-fixed axis.
fn rotation_terms(l: usize, t: usize) -> &'static [RTerm] {
    use Trig::{Cos, One, Sin};
    const R: [[&[RTerm]; 3]; 3] = [
        [
            &[(1.0, Cos, Cos, Cos), (-1.0, Sin, One, Sin)],
            &[(-1.0, Cos, Cos, Sin), (-1.0, Sin, One, Cos)],
            &[(1.0, Cos, Sin, One)],
        ],
        [
            &[(1.0, Sin, Cos, Cos), (1.0, Cos, One, Sin)],
            &[(-1.0, Sin, Cos, Sin), (1.0, Cos, One, Cos)],
            &[(1.0, Sin, Sin, One)],
        ],
        [
            &[(-1.0, One, Sin, Cos)],
            &[(1.0, One, Sin, Sin)],
            &[(1.0, One, Cos, One)],
        ],
    ];
    R[l][t]
}

/// (1/2pi) * integral over [0, 2pi) of e^{i freq t} * f(t), by the trapezoid
/// rule over N_ANGLE uniform nodes (exact for trigonometric polynomials of
/// degree < N_ANGLE/2).
fn angle_integral(freq: i32, f: Trig) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for n in 0..N_ANGLE {
        let t = 2.0 * std::f64::consts::PI * n as f64 / N_ANGLE as f64;
        acc += Complex64::new(0.0, freq as f64 * t).exp() * f.eval(t);
    }
    acc / N_ANGLE as f64
}

fn check_scale(idx: &BasisIndex) -> Result<()> {
    if idx.j > ORACLE_J_MAX {
        Err(SymtopError::OracleScale { max: ORACLE_J_MAX, got: idx.j })
    } else {
        Ok(())
    }
}

/// <phi_from, phi_to> for the normalized Wigner functions
/// phi = sqrt(2j+1) D, by the same factorized quadrature.
pub fn oracle_overlap(from: &BasisIndex, to: &BasisIndex) -> Result<Complex64> {
    check_scale(from)?;
    check_scale(to)?;
    let norm = ((2.0 * from.j as f64 + 1.0) * (2.0 * to.j as f64 + 1.0)).sqrt();
    let ia = angle_integral(to.m - from.m, Trig::One);
    let ig = angle_integral(to.k - from.k, Trig::One);
    let mut ib = 0.0;
    for &(x, w) in gauss_legendre(N_BETA).iter() {
        let beta = x.acos();
        ib += w * small_d(from.j, from.k, from.m, beta) * small_d(to.j, to.k, to.m, beta);
    }
    let phase = convention_phase(from.k, from.m).conj() * convention_phase(to.k, to.m);
    Ok(phase * norm * ia * ig * (ib / 2.0))
}

/// <phi_from, i B_l phi_to> by quadrature over the Euler angles; the
/// independent oracle for the assembled coupling matrices.
pub fn quadrature_oracle(
    from: &BasisIndex,
    to: &BasisIndex,
    dipole: &Dipole,
    l_index: usize,
) -> Result<Complex64> {
    assert!((1..=3).contains(&l_index), "field index must be 1, 2 or 3");
    check_scale(from)?;
    check_scale(to)?;
    let norm = ((2.0 * from.j as f64 + 1.0) * (2.0 * to.j as f64 + 1.0)).sqrt();
    let delta = dipole.as_array();
    let nodes = gauss_legendre(N_BETA);
    let mut total = Complex64::new(0.0, 0.0);
    for t in 0..3 {
        if delta[t] == 0.0 {
            continue;
        }
        for &(sign, fa, fb, fc) in rotation_terms(l_index - 1, t) {
            let ia = angle_integral(to.m - from.m, fa);
            let ig = angle_integral(to.k - from.k, fc);
            let mut ib = 0.0;
            for &(x, w) in nodes.iter() {
                let beta = x.acos();
                ib += w
                    * small_d(from.j, from.k, from.m, beta)
                    * small_d(to.j, to.k, to.m, beta)
                    * fb.eval(beta);
            }
            // The i from i B_l survives conjugation of the first slot; the
            // minus sign comes from B_l = -(R delta)_l.
            total -= Complex64::new(0.0, 1.0) * delta[t] * sign * ia * ig * (ib / 2.0);
        }
    }
    let phase = convention_phase(from.k, from.m).conj() * convention_phase(to.k, to.m);
    Ok(phase * norm * total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{BasisIndex, BasisVariant, BlockSpace};
    use crate::coupling::{assemble_block, coeff_b, coeff_c, Dipole};
    use approx::assert_abs_diff_eq;

    #[test]
    fn small_d_convention() {
        for &beta in &[0.0, 0.3, 1.1, 2.5, std::f64::consts::PI] {
            assert_abs_diff_eq!(small_d(0, 0, 0, beta), 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(small_d(1, 0, 0, beta), beta.cos(), epsilon = 1e-14);
            assert_abs_diff_eq!(
                small_d(1, 1, 1, beta),
                (1.0 + beta.cos()) / 2.0,
                epsilon = 1e-14
            );
            assert_abs_diff_eq!(
                small_d(1, 1, 0, beta),
                -beta.sin() / 2f64.sqrt(),
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn normalized_wigner_functions_are_orthonormal() {
        let labels: Vec<BasisIndex> = (0..=2u32)
            .flat_map(|j| {
                let ji = j as i32;
                (-ji..=ji).flat_map(move |k| (-ji..=ji).map(move |m| BasisIndex { j, k, m }))
            })
            .collect();
        for a in &labels {
            for b in &labels {
                let ov = oracle_overlap(a, b).unwrap();
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!(
                    (ov - Complex64::new(expected, 0.0)).norm() < 1e-12,
                    "overlap {a:?} {b:?}: {ov}"
                );
            }
        }
    }

    #[test]
    fn oracle_scale_guard() {
        let a = BasisIndex::new(4, 0, 0).unwrap();
        let b = BasisIndex::new(3, 0, 0).unwrap();
        let dipole = Dipole::new(0.0, 1.0, 0.0).unwrap();
        assert!(quadrature_oracle(&a, &b, &dipole, 1).is_err());
    }

    #[test]
    fn pinned_entries_match_tables() {
        // <D^0_{0,0}, i B_1 D^1_{1,1}> with delta = (0,1,0) equals -c_{0,0,0}.
        let a = BasisIndex::new(0, 0, 0).unwrap();
        let b = BasisIndex::new(1, 1, 1).unwrap();
        let dipole = Dipole::new(0.0, 1.0, 0.0).unwrap();
        let v = quadrature_oracle(&a, &b, &dipole, 1).unwrap();
        let expected = Complex64::new(-coeff_c(0, 0, 0).unwrap(), 0.0);
        assert!((v - expected).norm() < 1e-10, "got {v}, expected {expected}");

        // <D^0_{0,0}, i B_3 D^1_{0,0}> with delta = (0,0,1) equals -i b_{0,0,0}.
        let b3 = BasisIndex::new(1, 0, 0).unwrap();
        let dipole3 = Dipole::new(0.0, 0.0, 1.0).unwrap();
        let v3 = quadrature_oracle(&a, &b3, &dipole3, 3).unwrap();
        let expected3 = Complex64::new(0.0, -coeff_b(0, 0, 0).unwrap());
        assert!((v3 - expected3).norm() < 1e-10, "got {v3}, expected {expected3}");
    }

    #[test]
    fn genuine_dipole_oracle_conserves_k() {
        let dipole = Dipole::new(0.0, 0.0, 1.0).unwrap();
        let a = BasisIndex::new(1, 1, 0).unwrap();
        for (k, m) in [(0, 0), (0, 1), (-1, 0)] {
            let b = BasisIndex::new(2, k, m).unwrap();
            for l in 1..=3 {
                if k != a.k {
                    let v = quadrature_oracle(&a, &b, &dipole, l).unwrap();
                    assert!(v.norm() < 1e-10, "k change should vanish: {v}");
                }
            }
        }
    }

    #[test]
    fn selection_rule_dm2_vanishes() {
        let dipole = Dipole::new(0.3, 0.4, 0.1).unwrap();
        let a = BasisIndex::new(2, 0, -1).unwrap();
        let b = BasisIndex::new(2, 1, 1).unwrap();
        for l in 1..=3 {
            let v = quadrature_oracle(&a, &b, &dipole, l).unwrap();
            assert!(v.norm() < 1e-10, "dm=2 entry should vanish: {v}");
        }
    }

    #[test]
    fn assembled_block_matches_oracle() {
        // Full skew matrices on the j = 0 and j = 1 blocks against the
        // oracle, for all three fields and an off-axis dipole.
        let dipole = Dipole::new(0.3, 0.4, 0.1).unwrap();
        for j in 0..=1u32 {
            let space = BlockSpace::new(j);
            for l in 1..=3 {
                let block = assemble_block(&space, &dipole, &BasisVariant::Wigner, l).unwrap();
                let s = block.skew();
                for (r, from) in space.indices.iter().enumerate() {
                    for (c, to) in space.indices.iter().enumerate() {
                        let v = quadrature_oracle(from, to, &dipole, l).unwrap();
                        assert!(
                            (s[(r, c)] - v).norm() < 1e-8,
                            "l={l}, {from:?} -> {to:?}: table {} vs oracle {v}",
                            s[(r, c)]
                        );
                    }
                }
            }
        }
    }
}
