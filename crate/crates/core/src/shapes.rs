//! Generators for the standard test domains.
//!
//! Squares are addressed by their lower-left corner, so the square with
//! centre `(x, y)` in centred coordinates is `Square(x - ½, y - ½)`.

use thiserror::Error;

use crate::lattice::{LatticeDomain, LatticeError, Square};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ShapeError {
    #[error("bad size: {0}")]
    BadSize(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

pub fn rectangle(width: i32, height: i32) -> Result<LatticeDomain, ShapeError> {
    if width < 1 || height < 1 {
        return Err(ShapeError::BadSize(format!("{width}x{height} rectangle")));
    }
    Ok(LatticeDomain::new(rectangle_squares(0, 0, width, height))?)
}

fn rectangle_squares(x0: i32, y0: i32, w: i32, h: i32) -> impl Iterator<Item = Square> {
    (x0..x0 + w).flat_map(move |x| (y0..y0 + h).map(move |y| Square(x, y)))
}

/// Squares whose centres satisfy `|x| + |y| ≤ n`.
pub fn aztec_squares(n: i32) -> Vec<Square> {
    (-n - 1..=n)
        .flat_map(|a| (-n - 1..=n).map(move |b| Square(a, b)))
        .filter(|&Square(a, b)| (2 * a + 1).abs() + (2 * b + 1).abs() <= 2 * n)
        .collect()
}

/// The Aztec diamond `AD_n`, with `2n(n+1)` squares.
pub fn aztec(n: i32) -> Result<LatticeDomain, ShapeError> {
    if n < 1 {
        return Err(ShapeError::BadSize(format!("Aztec diamond of order {n}")));
    }
    Ok(LatticeDomain::new(aztec_squares(n))?)
}

/// `outer × outer` block centred at the origin with a centred `inner × inner`
/// hole. Both sizes must have the same parity.
pub fn annulus(outer: i32, inner: i32) -> Result<LatticeDomain, ShapeError> {
    if inner < 1 || outer - inner < 2 || (outer - inner) % 2 != 0 {
        return Err(ShapeError::BadSize(format!("{outer}x{outer} annulus with {inner}x{inner} hole")));
    }
    let o = -(outer / 2);
    let i = o + (outer - inner) / 2;
    let hole: Vec<Square> = rectangle_squares(i, i, inner, inner).collect();
    Ok(LatticeDomain::new(rectangle_squares(o, o, outer, outer).filter(|s| !hole.contains(s)))?)
}

/// Squares of the ring `|x| + |y| = k` (centres) in the quadrant with signs
/// `(sx, sy)`, from the horizontal axis outwards.
fn ring(k: i32, sx: i32, sy: i32) -> Vec<Square> {
    (0..k)
        .map(|i| {
            // centre (sx (i + ½), sy (k − i − ½))
            let a = if sx > 0 { i } else { -i - 1 };
            let b = if sy > 0 { k - i - 1 } else { -(k - i) };
            Square(a, b)
        })
        .collect()
}

fn rotate_half_turn(s: Square) -> Square {
    Square(-s.0 - 1, -s.1 - 1)
}

/// Radius of the removed central diamond for `N = 4k`: `k` when `k` is odd,
/// `k − 1` otherwise, so that the hole has an odd radius.
pub fn modified_aztec_hole_radius(n: i32) -> i32 {
    let k = n / 4;
    if k % 2 == 1 {
        k
    } else {
        k - 1
    }
}

/// The annular Aztec domain with four defects of `defect` squares each.
///
/// Starts from `AD_N` minus the central diamond `AD_ρ`, adds the `defect`
/// most central squares of the ring just outside `AD_N` in the upper-right
/// quadrant and their half-turn images, and removes the `defect` most
/// central squares of the ring around the hole in the upper-left quadrant
/// and their images. All four defects are black, so the hole carries
/// monodromy `8·defect`.
pub fn modified_aztec(n: i32, defect: Option<i32>) -> Result<LatticeDomain, ShapeError> {
    if n < 4 || n % 4 != 0 {
        return Err(ShapeError::BadSize(format!("modified Aztec diamond needs N = 4k, got {n}")));
    }
    let d = defect.unwrap_or(n / 4);
    let rho = modified_aztec_hole_radius(n);
    if d < 0 || d > rho + 1 {
        return Err(ShapeError::BadSize(format!("defect size {d} for N = {n}")));
    }
    let hole: Vec<Square> = aztec_squares(rho);
    let mut squares: Vec<Square> = aztec_squares(n).into_iter().filter(|s| !hole.contains(s)).collect();

    let mut outer = ring(n + 1, 1, 1);
    outer.sort_by_key(|s| (2 * s.0 - 2 * s.1).abs());
    let added: Vec<Square> = outer.into_iter().take(d as usize).collect();

    let mut inner = ring(rho + 1, -1, 1);
    inner.sort_by_key(|s| ((2 * s.0 + 1).abs() - (2 * s.1 + 1).abs()).abs());
    let removed: Vec<Square> = inner.into_iter().take(d as usize).collect();

    squares.extend(added.iter().copied());
    squares.extend(added.iter().map(|&s| rotate_half_turn(s)));
    squares.retain(|s| !removed.contains(s) && !removed.contains(&rotate_half_turn(*s)));
    Ok(LatticeDomain::new(squares)?)
}
