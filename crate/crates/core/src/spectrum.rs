//! Rotational energies and exact spectral-gap arithmetic.
//!
//! Every gap between levels (j, k) and (j', k') decomposes exactly over the
//! rational basis {1/I2, 1/(2 I3) - 1/(2 I2)} with integer coordinates
//! q1 = (j'(j'+1) - j(j+1))/2 and q2 = k'^2 - k^2. When I2/I3 is irrational
//! the two basis elements are Q-linearly independent, so gap equality reduces
//! to the exact integer test (q1, q2) = +-(q1', q2'). The caller asserts
//! irrationality through the `resonance_exact` flag; with a rational ratio
//! the classification refuses to run rather than guess.

use serde::{Deserialize, Serialize};

use crate::basis::BasisIndex;
use crate::error::{Result, SymtopError};

/// Moments of inertia of a symmetric top (I1 = I2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Inertia {
    pub i2: f64,
    pub i3: f64,
    /// Caller-asserted: I2/I3 is treated as irrational, enabling exact
    /// resonance classification over (q1, q2).
    pub resonance_exact: bool,
}

impl Inertia {
    pub fn new(i2: f64, i3: f64, resonance_exact: bool) -> Self {
        assert!(i2 > 0.0 && i3 > 0.0, "moments of inertia must be positive");
        Self { i2, i3, resonance_exact }
    }

    /// Coefficient of k^2 in the energy: 1/(2 I3) - 1/(2 I2).
    pub fn k_coeff(&self) -> f64 {
        0.5 / self.i3 - 0.5 / self.i2
    }
}

/// Rotational energy E_k^j = j(j+1)/(2 I2) + (1/(2 I3) - 1/(2 I2)) k^2.
pub fn energy(inertia: &Inertia, j: u32, k: i32) -> Result<f64> {
    let jj = j as i32;
    if k < -jj || k > jj {
        return Err(SymtopError::IndexRange {
            field: "k",
            value: k as i64,
            j: j as i64,
            k: k as i64,
            m: 0,
        });
    }
    let jf = j as f64;
    Ok(jf * (jf + 1.0) / (2.0 * inertia.i2) + inertia.k_coeff() * (k as f64) * (k as f64))
}

/// Exact rational coordinates of a spectral gap, canonicalized so the leading
/// nonzero coordinate is positive (gap equality is sign-insensitive).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GapCoeff {
    pub q1: i64,
    pub q2: i64,
}

impl GapCoeff {
    pub fn new(q1: i64, q2: i64) -> Self {
        if q1 < 0 || (q1 == 0 && q2 < 0) {
            Self { q1: -q1, q2: -q2 }
        } else {
            Self { q1, q2 }
        }
    }

    /// Gap of the transition (j, k) -> (j', k').
    pub fn from_transition(from: (u32, i32), to: (u32, i32)) -> Self {
        let t = |j: u32| {
            let j = j as i64;
            j * (j + 1)
        };
        let q1 = (t(to.0) - t(from.0)) / 2;
        let q2 = (to.1 as i64) * (to.1 as i64) - (from.1 as i64) * (from.1 as i64);
        Self::new(q1, q2)
    }

    pub fn is_zero(&self) -> bool {
        self.q1 == 0 && self.q2 == 0
    }

    /// Float value |q1/I2 + q2 (1/(2 I3) - 1/(2 I2))|.
    pub fn value(&self, inertia: &Inertia) -> f64 {
        (self.q1 as f64 / inertia.i2 + self.q2 as f64 * inertia.k_coeff()).abs()
    }

    pub fn kind(&self) -> GapKind {
        GapKind::of(self)
    }
}

/// The named gap families of the symmetric-top spectrum.
///
/// lambda_k^j (j and k both move), eta_k (only k moves), sigma^j (only j
/// moves). Gaps outside these families are reported as `Other`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GapKind {
    /// q1 = j + 1, q2 = 2k + 1.
    Lambda { j: u32, k: i32 },
    /// q1 = 0, q2 = 2k + 1.
    Eta { k: i32 },
    /// q1 = j + 1, q2 = 0.
    Sigma { j: u32 },
    Other,
}

impl GapKind {
    fn of(gap: &GapCoeff) -> Self {
        let GapCoeff { q1, q2 } = *gap;
        if q1 == 0 && q2 != 0 && (q2 % 2 != 0) {
            return GapKind::Eta { k: ((q2 - 1) / 2) as i32 };
        }
        if q1 > 0 && q2 == 0 {
            return GapKind::Sigma { j: (q1 - 1) as u32 };
        }
        if q1 > 0 && q2 % 2 != 0 {
            return GapKind::Lambda { j: (q1 - 1) as u32, k: ((q2 - 1) / 2) as i32 };
        }
        GapKind::Other
    }
}

/// Gap of the transition (j, k) -> (j', k') with its float value.
pub fn gap(inertia: &Inertia, from: (u32, i32), to: (u32, i32)) -> GapCoeff {
    let _ = inertia;
    GapCoeff::from_transition(from, to)
}

/// All distinct nonzero exact gaps between selection-rule pairs of levels
/// {j, j+1} (|dl| <= 1, |dk| <= 1), in deterministic order.
pub fn block_gaps(j: u32) -> Vec<GapCoeff> {
    let mut gaps = Vec::new();
    let levels = [j, j + 1];
    for &la in &levels {
        for &lb in &levels {
            let (lai, lbi) = (la as i32, lb as i32);
            for ka in -lai..=lai {
                for kb in -lbi..=lbi {
                    if (kb - ka).abs() > 1 {
                        continue;
                    }
                    let g = GapCoeff::from_transition((la, ka), (lb, kb));
                    if g.is_zero() || gaps.contains(&g) {
                        continue;
                    }
                    gaps.push(g);
                }
            }
        }
    }
    gaps
}

/// Where a resonant transition sits relative to the block M_j.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransitionLocation {
    Inside,
    Boundary,
    Outside,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResonantTransition {
    pub from: BasisIndex,
    pub to: BasisIndex,
    pub location: TransitionLocation,
}

/// Result of classifying one gap against the block M_j.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResonanceReport {
    pub j: u32,
    pub gap: GapReport,
    /// No resonant selection-rule transition touches the complement of M_j.
    pub xi0: bool,
    /// No resonant selection-rule transition crosses the boundary of M_j.
    pub xi1: bool,
    pub transitions: Vec<ResonantTransition>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapReport {
    pub q1: i64,
    pub q2: i64,
    pub value: f64,
}

/// Enumerate all selection-rule transitions up to J_max resonant with
/// `sigma` and classify them relative to M_j.
///
/// Selection rules: |dl| <= 1, |dk| <= 1, |dm| <= 1. Exactness of the
/// (q1, q2) test makes the finite window sufficient: a transition with
/// dl = 1 has q1 = l + 1, so only one l can match a given q1, and dl = 0
/// transitions never cross a level boundary.
pub fn classify_resonances(
    inertia: &Inertia,
    j: u32,
    sigma: &GapCoeff,
    j_max: u32,
) -> Result<ResonanceReport> {
    if !inertia.resonance_exact {
        return Err(SymtopError::ExactModeRequired);
    }
    assert!(j_max >= j + 2, "classification window must reach past the block");
    let in_block = |l: u32| l == j || l == j + 1;
    let mut transitions = Vec::new();
    let mut xi0 = true;
    let mut xi1 = true;
    for l in 0..=j_max {
        let li = l as i32;
        for k in -li..=li {
            for m in -li..=li {
                for dl in 0..=1u32 {
                    let lp = l + dl;
                    if lp > j_max {
                        continue;
                    }
                    let lpi = lp as i32;
                    for dk in -1..=1i32 {
                        for dm in -1..=1i32 {
                            let (kp, mp) = (k + dk, m + dm);
                            if kp < -lpi || kp > lpi || mp < -lpi || mp > lpi {
                                continue;
                            }
                            // Avoid double-counting within a level.
                            if dl == 0 && (kp, mp) <= (k, m) {
                                continue;
                            }
                            let g = GapCoeff::from_transition((l, k), (lp, kp));
                            if g != *sigma || g.is_zero() {
                                continue;
                            }
                            let (a, b) = (in_block(l), in_block(lp));
                            let location = match (a, b) {
                                (true, true) => TransitionLocation::Inside,
                                (false, false) => TransitionLocation::Outside,
                                _ => TransitionLocation::Boundary,
                            };
                            match location {
                                TransitionLocation::Inside => {}
                                TransitionLocation::Boundary => {
                                    xi0 = false;
                                    xi1 = false;
                                }
                                TransitionLocation::Outside => {
                                    xi0 = false;
                                }
                            }
                            transitions.push(ResonantTransition {
                                from: BasisIndex { j: l, k, m },
                                to: BasisIndex { j: lp, k: kp, m: mp },
                                location,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(ResonanceReport {
        j,
        gap: GapReport { q1: sigma.q1, q2: sigma.q2, value: sigma.value(inertia) },
        xi0,
        xi1,
        transitions,
    })
}

/// One gap equality violating the internal-resonance statements.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResonanceCounterexample {
    pub family: String,
    pub j: u32,
    pub k: i32,
    pub jp: u32,
    pub jpp: u32,
    pub s: i32,
    pub h: i32,
}

/// Exhaustively check the three internal-resonance statements on the
/// truncation: gap equalities between a lambda/eta/sigma gap of block j and
/// any selection-rule gap |E^{j''}_{s+h} - E^{j'}_s| (j <= j' <= j'' <= j+1)
/// occur only in the degenerate cases the statements list.
pub fn verify_lemma_important(
    inertia: &Inertia,
    j_max: u32,
) -> Result<(bool, Vec<ResonanceCounterexample>)> {
    if !inertia.resonance_exact {
        return Err(SymtopError::ExactModeRequired);
    }
    let mut counterexamples = Vec::new();
    for j in 0..=j_max.saturating_sub(2) {
        let ji = j as i32;
        for k in -ji..=ji {
            let lambda = GapCoeff::from_transition((j, k), (j + 1, k + 1));
            let eta = GapCoeff::from_transition((j, k), (j, k + 1));
            let sigma = GapCoeff::from_transition((j, k), (j + 1, k));
            for jp in j..=j + 1 {
                for jpp in jp..=j + 1 {
                    let jpi = jp as i32;
                    let jppi = jpp as i32;
                    for s in -jpi..=jpi {
                        for h in -1..=1i32 {
                            let sh = s + h;
                            if sh < -jppi || sh > jppi {
                                continue;
                            }
                            let other = GapCoeff::from_transition((jp, s), (jpp, sh));
                            // lambda-resonances: only j'=j, j''=j+1, s=+-k,
                            // s+h=+-(k+1).
                            if other == lambda {
                                let allowed = jp == j
                                    && jpp == j + 1
                                    && (s == k || s == -k)
                                    && (sh == k + 1 || sh == -(k + 1));
                                if !allowed {
                                    counterexamples.push(ResonanceCounterexample {
                                        family: "lambda".into(),
                                        j,
                                        k,
                                        jp,
                                        jpp,
                                        s,
                                        h,
                                    });
                                }
                            }
                            // eta-resonances: only j'=j''=j or j'=j''=j+1,
                            // with {s, s+h} = {k, k+1} or {-k, -(k+1)}.
                            // Both orientations occur in the enumeration
                            // because within a level the roles of s and s+h
                            // are interchangeable.
                            if other == eta {
                                let pair_ok = |a: i32, b: i32| {
                                    (a == k && b == k + 1)
                                        || (a == k + 1 && b == k)
                                        || (a == -k && b == -(k + 1))
                                        || (a == -(k + 1) && b == -k)
                                };
                                let allowed = jp == jpp && pair_ok(s, sh);
                                if !allowed {
                                    counterexamples.push(ResonanceCounterexample {
                                        family: "eta".into(),
                                        j,
                                        k,
                                        jp,
                                        jpp,
                                        s,
                                        h,
                                    });
                                }
                            }
                            // sigma-resonances: only j'=j, j''=j+1, h=0.
                            // The sigma gap is independent of k, so every
                            // parallel transition (j,s) -> (j+1,s) shares it;
                            // that whole family is mutually resonant.
                            if other == sigma {
                                let allowed = jp == j && jpp == j + 1 && h == 0;
                                if !allowed {
                                    counterexamples.push(ResonanceCounterexample {
                                        family: "sigma".into(),
                                        j,
                                        k,
                                        jp,
                                        jpp,
                                        s,
                                        h,
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok((counterexamples.is_empty(), counterexamples))
}
