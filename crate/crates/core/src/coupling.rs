//! Interaction Hamiltonians B_1, B_2, B_3 on a block, assembled from the
//! closed-form pairing tables.
//!
//! All matrix elements are stored in the convention of the pairing tables:
//! `skew()` returns the matrix with entries <D_from, i B_l D_to> (inner
//! product conjugate-linear in the first slot), which is traceless
//! skew-Hermitian after completion. The Hermitian interaction matrix itself
//! is `i * skew`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{change_of_basis, BasisIndex, BasisVariant, BlockSpace};
use crate::error::{Result, SymtopError};

/// Body-frame dipole components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dipole {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

/// Dipole classes with distinct controllability behaviour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DipoleClass {
    /// Along the symmetry axis: (0, 0, d3).
    Genuine,
    /// In the plane orthogonal to the symmetry axis: (d1, d2, 0).
    Orthogonal,
    /// Off-axis with a nonzero axial component.
    GenericAccidental,
}

impl Dipole {
    pub fn new(d1: f64, d2: f64, d3: f64) -> Result<Self> {
        if d1 == 0.0 && d2 == 0.0 && d3 == 0.0 {
            return Err(SymtopError::ZeroDipole);
        }
        Ok(Self { d1, d2, d3 })
    }

    pub fn class(&self) -> DipoleClass {
        let in_plane = self.d1 != 0.0 || self.d2 != 0.0;
        match (in_plane, self.d3 != 0.0) {
            (false, _) => DipoleClass::Genuine,
            (true, false) => DipoleClass::Orthogonal,
            (true, true) => DipoleClass::GenericAccidental,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.d1, self.d2, self.d3]
    }
}

fn sqrt_nonneg(x: f64, name: &'static str, j: i64, k: i64, m: i64) -> Result<f64> {
    if x < 0.0 {
        Err(SymtopError::CoefficientDomain { name, j, k, m })
    } else {
        Ok(x.sqrt())
    }
}

/// c_{j,k,m}: dj = 1, dk = 1, dm = 1 pairing coefficient.
pub fn coeff_c(j: u32, k: i32, m: i32) -> Result<f64> {
    let (jf, kf, mf) = (j as f64, k as f64, m as f64);
    let rk = sqrt_nonneg((jf + kf + 1.0) * (jf + kf + 2.0), "c", j as i64, k as i64, m as i64)?;
    let rm = sqrt_nonneg((jf + mf + 1.0) * (jf + mf + 2.0), "c", j as i64, k as i64, m as i64)?;
    Ok(rk * rm / (4.0 * (jf + 1.0) * ((2.0 * jf + 1.0) * (2.0 * jf + 3.0)).sqrt()))
}

/// d_{j,k,m}: dj = 1, dk = 1, dm = 0 pairing coefficient.
pub fn coeff_d(j: u32, k: i32, m: i32) -> Result<f64> {
    let (jf, kf, mf) = (j as f64, k as f64, m as f64);
    let rk = sqrt_nonneg((jf + kf + 1.0) * (jf + kf + 2.0), "d", j as i64, k as i64, m as i64)?;
    let rm = sqrt_nonneg((jf + 1.0) * (jf + 1.0) - mf * mf, "d", j as i64, k as i64, m as i64)?;
    Ok(rk * rm / (2.0 * (jf + 1.0) * ((2.0 * jf + 1.0) * (2.0 * jf + 3.0)).sqrt()))
}

/// h_{j,k,m}: dj = 0, dk = 1, dm = 1 pairing coefficient.
pub fn coeff_h(j: u32, k: i32, m: i32) -> Result<f64> {
    if j == 0 {
        return Err(SymtopError::CoefficientDomain { name: "h", j: 0, k: k as i64, m: m as i64 });
    }
    let (jf, kf, mf) = (j as f64, k as f64, m as f64);
    let rk = sqrt_nonneg(jf * (jf + 1.0) - kf * (kf + 1.0), "h", j as i64, k as i64, m as i64)?;
    let rm = sqrt_nonneg(jf * (jf + 1.0) - mf * (mf + 1.0), "h", j as i64, k as i64, m as i64)?;
    Ok(rk * rm / (4.0 * jf * (jf + 1.0)))
}

/// q_{j,k,m}: dj = 0, dk = 1, dm = 0 pairing coefficient.
pub fn coeff_q(j: u32, k: i32, m: i32) -> Result<f64> {
    if j == 0 {
        return Err(SymtopError::CoefficientDomain { name: "q", j: 0, k: k as i64, m: m as i64 });
    }
    let (jf, kf, mf) = (j as f64, k as f64, m as f64);
    let rk = sqrt_nonneg(jf * (jf + 1.0) - kf * (kf + 1.0), "q", j as i64, k as i64, m as i64)?;
    Ok(rk * mf / (2.0 * jf * (jf + 1.0)))
}

/// a_{j,k,m}: dj = 1, dk = 0, dm = 1 pairing coefficient.
pub fn coeff_a(j: u32, k: i32, m: i32) -> Result<f64> {
    let (jf, kf, mf) = (j as f64, k as f64, m as f64);
    let rk = sqrt_nonneg((jf + 1.0) * (jf + 1.0) - kf * kf, "a", j as i64, k as i64, m as i64)?;
    let rm = sqrt_nonneg((jf + mf + 1.0) * (jf + mf + 2.0), "a", j as i64, k as i64, m as i64)?;
    Ok(rk * rm / (2.0 * (jf + 1.0) * ((2.0 * jf + 1.0) * (2.0 * jf + 3.0)).sqrt()))
}

/// b_{j,k,m}: dj = 1, dk = 0, dm = 0 pairing coefficient.
pub fn coeff_b(j: u32, k: i32, m: i32) -> Result<f64> {
    let (jf, kf, mf) = (j as f64, k as f64, m as f64);
    let rk = sqrt_nonneg((jf + 1.0) * (jf + 1.0) - kf * kf, "b", j as i64, k as i64, m as i64)?;
    let rm = sqrt_nonneg((jf + 1.0) * (jf + 1.0) - mf * mf, "b", j as i64, k as i64, m as i64)?;
    Ok(rk * rm / ((jf + 1.0) * ((2.0 * jf + 1.0) * (2.0 * jf + 3.0)).sqrt()))
}

/// One interaction Hamiltonian projected onto a block.
#[derive(Debug, Clone)]
pub struct CouplingBlock {
    pub l_index: u8,
    pub space: BlockSpace,
    pub variant: BasisVariant,
    /// Hermitian matrix of B_l in the chosen basis.
    pub matrix: DMatrix<Complex64>,
}

impl CouplingBlock {
    /// Skew-Hermitian matrix with the pairing-table entries <., i B_l .>.
    pub fn skew(&self) -> DMatrix<Complex64> {
        self.matrix.map(|z| Complex64::new(0.0, -1.0) * z)
    }
}

/// Fill the skew matrix of <D_from, i B_l D_to> over an arbitrary ordered
/// index set in the Wigner basis. `pos` maps a label to its column, or None
/// if the label is outside the set.
pub fn assemble_skew_on<F>(indices: &[BasisIndex], pos: F, dipole: &Dipole, l_index: u8) -> DMatrix<Complex64>
where
    F: Fn(&BasisIndex) -> Option<usize>,
{
    let n = indices.len();
    let mut s = DMatrix::<Complex64>::zeros(n, n);
    let zp = Complex64::new(dipole.d2, dipole.d1); // delta_2 + i delta_1
    let zm = Complex64::new(dipole.d2, -dipole.d1); // delta_2 - i delta_1
    let d3 = Complex64::new(dipole.d3, 0.0);
    let i_unit = Complex64::new(0.0, 1.0);

    let mut put = |row: usize, to: BasisIndex, value: Complex64| {
        if value == Complex64::new(0.0, 0.0) {
            return;
        }
        if let Some(col) = pos(&to) {
            if col == row {
                // Diagonal entries of a skew-Hermitian matrix are purely
                // imaginary and written once.
                s[(row, row)] += value;
            } else {
                s[(row, col)] += value;
                s[(col, row)] -= value.conj();
            }
        }
    };

    for (row, from) in indices.iter().enumerate() {
        let (j, k, m) = (from.j, from.k, from.m);
        let to = |jj: u32, kk: i32, mm: i32| BasisIndex { j: jj, k: kk, m: mm };
        // Within-level direction-cosine coefficient for dj = 0, dk = 0,
        // dm = 1 (axial dipole component): the m-analogue of q.
        let qt = if j > 0 {
            let (jf, kf, mf) = (j as f64, k as f64, m as f64);
            (jf * (jf + 1.0) - mf * (mf + 1.0)).max(0.0).sqrt() * kf / (2.0 * jf * (jf + 1.0))
        } else {
            0.0
        };
        // Raising entries (dj = +1 for all dk, plus dj = 0 with dk = +1);
        // the lowering direction is filled by skew completion.
        for (sign_m, mm) in [(1.0f64, m + 1), (-1.0f64, m - 1)] {
            let pm = (sign_m * m as f64) as i32; // +-m for the coefficient index
            match l_index {
                1 => {
                    // dj=1, dk=+1 / dk=-1 / dk=0
                    if let Ok(c) = coeff_c(j, k, pm) {
                        put(row, to(j + 1, k + 1, mm), -c * zp);
                    }
                    if let Ok(c) = coeff_c(j, -k, pm) {
                        put(row, to(j + 1, k - 1, mm), c * zm);
                    }
                    if let Ok(a) = coeff_a(j, k, pm) {
                        put(row, to(j + 1, k, mm), Complex64::new(a, 0.0) * d3);
                    }
                    // dj=0, dk=+1
                    if let Ok(h) = coeff_h(j, k, pm) {
                        put(row, to(j, k + 1, mm), -sign_m * h * zp);
                    }
                    // dj=0, dk=0, dm=+1 (raising only; lowering by skewness)
                    if sign_m > 0.0 {
                        put(row, to(j, k, m + 1), Complex64::new(-qt, 0.0) * d3);
                    }
                }
                2 => {
                    if let Ok(c) = coeff_c(j, k, pm) {
                        put(row, to(j + 1, k + 1, mm), -sign_m * i_unit * c * zp);
                    }
                    if let Ok(c) = coeff_c(j, -k, pm) {
                        put(row, to(j + 1, k - 1, mm), sign_m * i_unit * c * zm);
                    }
                    if let Ok(a) = coeff_a(j, k, pm) {
                        put(row, to(j + 1, k, mm), sign_m * i_unit * a * d3);
                    }
                    if let Ok(h) = coeff_h(j, k, pm) {
                        put(row, to(j, k + 1, mm), -i_unit * h * zp);
                    }
                    if sign_m > 0.0 {
                        put(row, to(j, k, m + 1), -i_unit * qt * d3);
                    }
                }
                _ => {}
            }
        }
        if l_index == 3 {
            // dm = 0 transitions only.
            if let Ok(d) = coeff_d(j, k, m) {
                put(row, to(j + 1, k + 1, m), i_unit * d * zp);
            }
            if let Ok(d) = coeff_d(j, -k, m) {
                put(row, to(j + 1, k - 1, m), -i_unit * d * zm);
            }
            if let Ok(b) = coeff_b(j, k, m) {
                put(row, to(j + 1, k, m), -i_unit * b * d3);
            }
            if let Ok(q) = coeff_q(j, k, m) {
                put(row, to(j, k + 1, m), -i_unit * q * zp);
            }
            // dj=0, dk=0, dm=0: diagonal direction-cosine entry.
            if j > 0 {
                let diag = (k * m) as f64 / (j * (j + 1)) as f64;
                put(row, *from, -i_unit * diag * d3);
            }
        }
    }
    s
}

fn assert_valid_index(idx: usize) -> u8 {
    assert!((1..=3).contains(&idx), "field index must be 1, 2 or 3");
    idx as u8
}

/// Assemble B_l on the block in the requested basis variant.
pub fn assemble_block(
    space: &BlockSpace,
    dipole: &Dipole,
    variant: &BasisVariant,
    l_index: usize,
) -> Result<CouplingBlock> {
    let l = assert_valid_index(l_index);
    if dipole.d1 == 0.0 && dipole.d2 == 0.0 && dipole.d3 == 0.0 {
        return Err(SymtopError::ZeroDipole);
    }
    let skew = assemble_skew_on(&space.indices, |idx| space.pos(idx), dipole, l);
    let mut herm = skew.map(|z| Complex64::new(0.0, 1.0) * z);
    if *variant != BasisVariant::Wigner {
        let u = change_of_basis(space, variant);
        herm = u.adjoint() * herm * u;
    }
    Ok(CouplingBlock {
        l_index: l,
        space: space.clone(),
        variant: *variant,
        matrix: herm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn coefficient_examples() {
        assert_abs_diff_eq!(coeff_c(0, 0, 0).unwrap(), 1.0 / (2.0 * 3f64.sqrt()), epsilon = 1e-12);
        assert_abs_diff_eq!(coeff_h(1, 0, 0).unwrap(), 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(coeff_q(1, 0, 1).unwrap(), 2f64.sqrt() / 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            coeff_a(0, 0, 0).unwrap(),
            2f64.sqrt() / (2.0 * 3f64.sqrt()),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(coeff_b(0, 0, 0).unwrap(), 1.0 / 3f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn coeff_q_vanishes_at_m_zero() {
        for j in 1..=4u32 {
            let ji = j as i32;
            for k in -ji..ji {
                assert_eq!(coeff_q(j, k, 0).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn coefficient_domain_errors() {
        assert!(coeff_h(1, 5, 0).is_err());
        assert!(coeff_h(0, 0, 0).is_err());
        assert!(coeff_b(1, 3, 0).is_err());
    }

    #[test]
    fn dipole_classes() {
        assert_eq!(Dipole::new(0.0, 0.0, 1.0).unwrap().class(), DipoleClass::Genuine);
        assert_eq!(Dipole::new(0.3, 0.4, 0.0).unwrap().class(), DipoleClass::Orthogonal);
        assert_eq!(
            Dipole::new(0.0, 0.2, 0.3).unwrap().class(),
            DipoleClass::GenericAccidental
        );
        assert!(Dipole::new(0.0, 0.0, 0.0).is_err());
    }

    fn hermiticity_defect(m: &DMatrix<Complex64>) -> f64 {
        (m - m.adjoint()).norm()
    }

    #[test]
    fn blocks_are_hermitian_in_all_variants() {
        let dipole = Dipole::new(0.3, 0.4, 0.1).unwrap();
        for j in 0..=1u32 {
            let space = BlockSpace::new(j);
            for variant in [
                BasisVariant::Wigner,
                BasisVariant::RotatedWigner(0.9),
                BasisVariant::Wang,
                BasisVariant::RotatedWang(0.4),
            ] {
                for l in 1..=3 {
                    let block = assemble_block(&space, &dipole, &variant, l).unwrap();
                    assert!(
                        hermiticity_defect(&block.matrix) < 1e-12,
                        "j={j}, l={l}, {variant:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn selection_rule_sparsity() {
        let dipole = Dipole::new(0.3, 0.4, 0.1).unwrap();
        let space = BlockSpace::new(1);
        for l in 1..=3 {
            let block = assemble_block(&space, &dipole, &BasisVariant::Wigner, l).unwrap();
            for (r, from) in space.indices.iter().enumerate() {
                for (c, to) in space.indices.iter().enumerate() {
                    let dj = (from.j as i32 - to.j as i32).abs();
                    let dk = (from.k - to.k).abs();
                    let dm = (from.m - to.m).abs();
                    if dj > 1 || dk > 1 || dm > 1 {
                        assert_eq!(
                            block.matrix[(r, c)],
                            Complex64::new(0.0, 0.0),
                            "selection rule violated at {from:?} -> {to:?}, l={l}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn genuine_dipole_conserves_k() {
        let dipole = Dipole::new(0.0, 0.0, 1.0).unwrap();
        let space = BlockSpace::new(1);
        for l in 1..=3 {
            let block = assemble_block(&space, &dipole, &BasisVariant::Wigner, l).unwrap();
            for (r, from) in space.indices.iter().enumerate() {
                for (c, to) in space.indices.iter().enumerate() {
                    if from.k != to.k {
                        assert_eq!(block.matrix[(r, c)], Complex64::new(0.0, 0.0));
                    }
                }
            }
        }
    }

    #[test]
    fn b3_genuine_entry_value() {
        // <D^0_{0,0}, i B_3 D^1_{0,0}> = -i b_{0,0,0} delta_3.
        let dipole = Dipole::new(0.0, 0.0, 1.0).unwrap();
        let space = BlockSpace::new(0);
        let block = assemble_block(&space, &dipole, &BasisVariant::Wigner, 3).unwrap();
        let s = block.skew();
        let r = space.pos(&BasisIndex { j: 0, k: 0, m: 0 }).unwrap();
        let c = space.pos(&BasisIndex { j: 1, k: 0, m: 0 }).unwrap();
        let expected = Complex64::new(0.0, -coeff_b(0, 0, 0).unwrap());
        assert!((s[(r, c)] - expected).norm() < 1e-14);
    }

    #[test]
    fn rotated_basis_absorbs_in_plane_phase() {
        // In the theta-rotated Wigner basis (RealAxis mode), the block of a
        // dipole (d1, d2, d3) equals the plain-Wigner block of
        // (0, sqrt(d1^2 + d2^2), d3).
        use crate::basis::{theta_for_dipole, ThetaMode};
        let dipole = Dipole::new(0.3, 0.4, 0.1).unwrap();
        let theta = theta_for_dipole(dipole.d1, dipole.d2, ThetaMode::RealAxis).unwrap();
        let reduced = Dipole::new(0.0, (0.3f64 * 0.3 + 0.4 * 0.4).sqrt(), 0.1).unwrap();
        let space = BlockSpace::new(1);
        for l in 1..=3 {
            let rotated =
                assemble_block(&space, &dipole, &BasisVariant::RotatedWigner(theta), l).unwrap();
            let plain = assemble_block(&space, &reduced, &BasisVariant::Wigner, l).unwrap();
            let diff = (&rotated.matrix - &plain.matrix).norm();
            assert!(diff < 1e-12, "l={l}: diff {diff}");
        }
    }
}
