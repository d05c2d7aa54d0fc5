//! Indexing and basis transformations for the rotational Hilbert space.
//!
//! States are labelled by `(j, k, m)` where `j` is the total angular momentum,
//! `k` the body-frame projection and `m` the space-frame projection. The
//! enumeration `rho` orders labels lexicographically with `j` outermost, then
//! `k`, then `m`. A block space pairs two adjacent levels `j` and `j + 1`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SymtopError};

/// A rotational state label (j, k, m) with |k| <= j and |m| <= j.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BasisIndex {
    pub j: u32,
    pub k: i32,
    pub m: i32,
}

impl BasisIndex {
    pub fn new(j: u32, k: i32, m: i32) -> Result<Self> {
        let jj = j as i32;
        if k < -jj || k > jj {
            return Err(SymtopError::IndexRange {
                field: "k",
                value: k as i64,
                j: j as i64,
                k: k as i64,
                m: m as i64,
            });
        }
        if m < -jj || m > jj {
            return Err(SymtopError::IndexRange {
                field: "m",
                value: m as i64,
                j: j as i64,
                k: k as i64,
                m: m as i64,
            });
        }
        Ok(Self { j, k, m })
    }
}

/// Global lexicographic ordinal of (l, k, m): levels l' < l contribute
/// (2l'+1)^2 states each, then k and m run -l..l.
pub fn rho(l: u32, k: i32, m: i32) -> Result<usize> {
    let idx = BasisIndex::new(l, k, m)?;
    let mut offset = 0usize;
    for lp in 0..l {
        let d = (2 * lp + 1) as usize;
        offset += d * d;
    }
    let width = (2 * l + 1) as usize;
    Ok(offset + ((idx.k + l as i32) as usize) * width + (idx.m + l as i32) as usize)
}

/// The block space M_j spanning levels j and j+1, ordered by `rho`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSpace {
    pub j: u32,
    pub indices: Vec<BasisIndex>,
}

impl BlockSpace {
    pub fn new(j: u32) -> Self {
        let mut indices = Vec::new();
        for l in [j, j + 1] {
            let li = l as i32;
            for k in -li..=li {
                for m in -li..=li {
                    indices.push(BasisIndex { j: l, k, m });
                }
            }
        }
        Self { j, indices }
    }

    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    /// Position of a label within the block, or None if not a member.
    pub fn pos(&self, idx: &BasisIndex) -> Option<usize> {
        if idx.j != self.j && idx.j != self.j + 1 {
            return None;
        }
        let li = idx.j as i32;
        if idx.k < -li || idx.k > li || idx.m < -li || idx.m > li {
            return None;
        }
        let width = (2 * idx.j + 1) as usize;
        let within = ((idx.k + li) as usize) * width + (idx.m + li) as usize;
        if idx.j == self.j {
            Some(within)
        } else {
            let dlow = (2 * self.j + 1) as usize;
            Some(dlow * dlow + within)
        }
    }
}

/// Union of levels 0..=j_top, ordered by `rho`. Used for simulations that
/// span more than one block.
#[derive(Debug, Clone)]
pub struct LevelSpace {
    pub j_top: u32,
    pub indices: Vec<BasisIndex>,
}

impl LevelSpace {
    pub fn new(j_top: u32) -> Self {
        let mut indices = Vec::new();
        for l in 0..=j_top {
            let li = l as i32;
            for k in -li..=li {
                for m in -li..=li {
                    indices.push(BasisIndex { j: l, k, m });
                }
            }
        }
        Self { j_top, indices }
    }

    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    pub fn pos(&self, idx: &BasisIndex) -> Option<usize> {
        if idx.j > self.j_top {
            return None;
        }
        rho(idx.j, idx.k, idx.m).ok()
    }
}

/// Basis choice for matrix representations.
///
/// Rotated kinds multiply the Wigner element D^j_{k,m} by e^{-i k theta};
/// Wang kinds combine D^j_{k,m} and D^j_{-k,m} symmetrically or
/// antisymmetrically (gamma = 0 or 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BasisVariant {
    Wigner,
    RotatedWigner(f64),
    Wang,
    RotatedWang(f64),
}

/// Label of a Wang basis element: non-negative k with a parity index gamma.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WangLabel {
    pub j: u32,
    pub k: u32,
    pub m: i32,
    pub gamma: u8,
}

impl WangLabel {
    /// Parity of j + gamma + k, the conserved quantity of the orthogonal top.
    pub fn parity(&self) -> u8 {
        ((self.j + self.k + self.gamma as u32) % 2) as u8
    }
}

/// Wang labels for the block, ordered (l, k, m, gamma) with gamma = 0 first.
pub fn wang_labels(space: &BlockSpace) -> Vec<WangLabel> {
    let mut labels = Vec::with_capacity(space.dim());
    for l in [space.j, space.j + 1] {
        let li = l as i32;
        for k in 0..=l {
            for m in -li..=li {
                if k == 0 {
                    labels.push(WangLabel { j: l, k, m, gamma: 0 });
                } else {
                    labels.push(WangLabel { j: l, k, m, gamma: 0 });
                    labels.push(WangLabel { j: l, k, m, gamma: 1 });
                }
            }
        }
    }
    labels
}

/// Unitary change of basis: columns are the new basis vectors expressed in
/// the Wigner basis of `space`.
pub fn change_of_basis(space: &BlockSpace, variant: &BasisVariant) -> DMatrix<Complex64> {
    let n = space.dim();
    match variant {
        BasisVariant::Wigner => DMatrix::identity(n, n),
        BasisVariant::RotatedWigner(theta) => {
            let mut u = DMatrix::zeros(n, n);
            for (p, idx) in space.indices.iter().enumerate() {
                u[(p, p)] = Complex64::from_polar(1.0, -(idx.k as f64) * theta);
            }
            u
        }
        BasisVariant::Wang => wang_matrix(space, 0.0),
        BasisVariant::RotatedWang(theta) => wang_matrix(space, *theta),
    }
}

fn wang_matrix(space: &BlockSpace, theta: f64) -> DMatrix<Complex64> {
    let n = space.dim();
    let mut u = DMatrix::zeros(n, n);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for (col, label) in wang_labels(space).iter().enumerate() {
        if label.k == 0 {
            let row = space
                .pos(&BasisIndex { j: label.j, k: 0, m: label.m })
                .expect("wang label in block");
            u[(row, col)] = Complex64::new(1.0, 0.0);
        } else {
            let kp = label.k as i32;
            let row_p = space
                .pos(&BasisIndex { j: label.j, k: kp, m: label.m })
                .expect("wang label in block");
            let row_m = space
                .pos(&BasisIndex { j: label.j, k: -kp, m: label.m })
                .expect("wang label in block");
            let sign = if label.gamma == 0 { 1.0 } else { -1.0 };
            u[(row_p, col)] = Complex64::from_polar(inv_sqrt2, -(kp as f64) * theta);
            u[(row_m, col)] = Complex64::from_polar(sign * inv_sqrt2, (kp as f64) * theta);
        }
    }
    u
}

/// Mode for `theta_for_dipole`: align e^{-i theta}(delta_2 + i delta_1) with
/// the positive real axis or with the positive imaginary axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThetaMode {
    RealAxis,
    ImagAxis,
}

/// Rotation angle that aligns the in-plane dipole, in [0, 2pi).
pub fn theta_for_dipole(delta1: f64, delta2: f64, mode: ThetaMode) -> Result<f64> {
    if delta1 == 0.0 && delta2 == 0.0 {
        return Err(SymtopError::ThetaUndefined);
    }
    let base = f64::atan2(delta1, delta2); // arg(delta_2 + i delta_1)
    let theta = match mode {
        ThetaMode::RealAxis => base,
        ThetaMode::ImagAxis => base - std::f64::consts::FRAC_PI_2,
    };
    Ok(theta.rem_euclid(2.0 * std::f64::consts::PI))
}
