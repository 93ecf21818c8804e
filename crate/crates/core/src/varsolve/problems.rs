//! Continuum domains and boundary data for the standard experiments.

use std::f64::consts::PI;
use std::sync::Arc;

use super::mesh::ContinuumDomain;
use super::BoundaryData;

/// Domain plus boundary data, with the lattice-to-continuum scaling of the
/// matching lattice family.
#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub domain: ContinuumDomain,
    pub data: BoundaryData,
}

pub fn unit_square() -> Problem {
    Problem {
        name: "unit-square".into(),
        domain: ContinuumDomain {
            outer: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            holes: vec![],
            cuts: vec![],
            reference_points: vec![],
        },
        data: BoundaryData::flat(0),
    }
}

fn diamond(r: f64) -> Vec<[f64; 2]> {
    vec![[r, 0.0], [0.0, r], [-r, 0.0], [0.0, -r]]
}

/// `|x| + |y| ≤ 1` with the scaling limit of the Aztec diamond boundary
/// heights, `𝔟 = −2|y|`, normalized to vanish at `(−1, 0)`.
pub fn aztec_diamond() -> Problem {
    Problem {
        name: "aztec".into(),
        domain: ContinuumDomain { outer: diamond(1.0), holes: vec![], cuts: vec![], reference_points: vec![[-1.0, 0.0]] },
        data: BoundaryData { shapes: vec![Arc::new(|p: [f64; 2]| -2.0 * p[1].abs())], monodromy: vec![], centers: vec![] },
    }
}

/// Side of the square annulus the cut leaves through.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CutSide {
    West,
    North,
}

/// `[−1, 1]² ∖ [−½, ½]²` with flat data, or with the winding data
/// `(m/2π)·arg` when `monodromy` is nonzero.
pub fn square_annulus(monodromy: f64, cut: CutSide) -> Problem {
    let cuts = match cut {
        CutSide::West => vec![vec![[-0.5, 0.0], [-1.0, 0.0]]],
        CutSide::North => vec![vec![[0.0, 0.5], [0.0, 1.0]]],
    };
    Problem {
        name: "annulus".into(),
        domain: ContinuumDomain {
            outer: vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]],
            holes: vec![vec![[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]]],
            cuts,
            reference_points: vec![[-1.0, 0.0], [-0.5, 0.0]],
        },
        data: BoundaryData::flat(1).with_monodromy(vec![monodromy], vec![[0.0, 0.0]]),
    }
}

fn clip(x: f64, lo: f64, hi: f64) -> f64 {
    x.max(lo).min(hi)
}

/// Scaling limit of the annular Aztec domain with defects of size `N/4`:
/// `|x| + |y| ≤ 1` minus `|x| + |y| < ¼`, monodromy 2, cut west along
/// `y = 0`.
///
/// Walking the outer boundary counterclockwise from `(−1, 0)`, the data
/// follows the Aztec sawtooth limit with slope `∓2` per unit of `x`, except
/// on the two defect segments of width ¼ centred at `±(½, ½)`, where the
/// slope is reversed. On the hole the data grows at rate 2 per unit of `ℓ∞`
/// length counterclockwise. Both profiles are given here on the branch
/// `arg ∈ (−π, π]` and made single-valued by subtracting `(m/2π)·arg`.
pub fn modified_aztec() -> Problem {
    let m = 2.0;
    let outer = move |p: [f64; 2]| {
        let (x, y) = (p[0], p[1]);
        let b = if y < 0.0 {
            if x <= 0.0 {
                -2.0 * (x + 1.0) + 4.0 * clip(x + 0.625, 0.0, 0.25)
            } else {
                -1.0 + 2.0 * x
            }
        } else if x >= 0.0 {
            2.0 * x - 1.0 + 4.0 * clip(0.625 - x, 0.0, 0.25)
        } else {
            -2.0 * x
        };
        b - m / (2.0 * PI) * y.atan2(x)
    };
    let inner = move |p: [f64; 2]| {
        let (x, y) = (p[0], p[1]);
        let s = if y < 0.0 { x + 0.25 } else { 0.75 - x };
        m * s - m / (2.0 * PI) * y.atan2(x)
    };
    Problem {
        name: "modified-aztec".into(),
        domain: ContinuumDomain {
            outer: diamond(1.0),
            holes: vec![diamond(0.25)],
            cuts: vec![vec![[-0.25, 0.0], [-1.0, 0.0]]],
            reference_points: vec![[-1.0, 0.0], [-0.25, 0.0]],
        },
        data: BoundaryData { shapes: vec![Arc::new(outer), Arc::new(inner)], monodromy: vec![m], centers: vec![[0.0, 0.0]] },
    }
}
